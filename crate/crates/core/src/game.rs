//! Bimatrix 2×2 games, mixed strategies, expected payoffs and equilibria.
//!
//! Strategy index 0 is the first pure strategy of each player (Trade,
//! Hawk, ...) and index 1 the second (Farm, Dove, ...). Joint quantities
//! over pure profiles are laid out as `[TT, TF, FT, FF]`, i.e. index
//! `2 * row + col`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::JointQuantumState;

/// Tolerance on the sum of a probability vector.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Denominators at or below this magnitude make the internal equilibrium
/// formula degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

pub type Matrix = [[f64; 2]; 2];

/// One of the two players. The row player is Assyrian in the Trading-Farming
/// story, the column player Babylonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Row,
    Column,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::Row => Player::Column,
            Player::Column => Player::Row,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Player::Row => "row",
            Player::Column => "column",
        })
    }
}

/// A pure strategy profile `(row strategy, column strategy)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Profile {
    TT,
    TF,
    FT,
    FF,
}

impl Profile {
    pub const ALL: [Profile; 4] = [Profile::TT, Profile::TF, Profile::FT, Profile::FF];

    pub fn from_indices(row: usize, col: usize) -> Profile {
        match (row, col) {
            (0, 0) => Profile::TT,
            (0, 1) => Profile::TF,
            (1, 0) => Profile::FT,
            (1, 1) => Profile::FF,
            _ => panic!("strategy index out of range: ({row}, {col})"),
        }
    }

    pub fn indices(self) -> (usize, usize) {
        match self {
            Profile::TT => (0, 0),
            Profile::TF => (0, 1),
            Profile::FT => (1, 0),
            Profile::FF => (1, 1),
        }
    }

    /// Position in the `[TT, TF, FT, FF]` layout.
    pub fn index(self) -> usize {
        let (i, j) = self.indices();
        2 * i + j
    }

    /// The profile as a point `(x_T, y_T)` of the strategy square.
    pub fn vertex(self) -> [f64; 2] {
        let (i, j) = self.indices();
        [1.0 - i as f64, 1.0 - j as f64]
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A bimatrix game. `a` holds the row player's payoffs and `b` the column
/// player's, both indexed `[row strategy][column strategy]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Game {
    a: Matrix,
    b: Matrix,
    symmetric: bool,
}

impl Game {
    /// Builds a game from explicit matrices. The symmetric flag is set only
    /// when `b` is exactly the transpose of `a`.
    pub fn new(a: Matrix, b: Matrix) -> Result<Game> {
        if a.iter().chain(b.iter()).flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGame);
        }
        let symmetric = b == transpose(&a);
        Ok(Game { a, b, symmetric })
    }

    /// The symmetric game `A = [[a, b], [c, d]]`, `B = Aᵀ`.
    pub fn symmetric(a: f64, b: f64, c: f64, d: f64) -> Result<Game> {
        let m = [[a, b], [c, d]];
        Game::new(m, transpose(&m))
    }

    pub fn row_payoffs(&self) -> &Matrix {
        &self.a
    }

    pub fn col_payoffs(&self) -> &Matrix {
        &self.b
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// `(a, b, c, d)` of `A` for a symmetric game.
    pub fn symmetric_params(&self) -> Option<(f64, f64, f64, f64)> {
        self.symmetric.then(|| (self.a[0][0], self.a[0][1], self.a[1][0], self.a[1][1]))
    }

    /// Payoff matrix of `player` oriented `[own strategy][opponent strategy]`:
    /// `A` for the row player and `Bᵀ` for the column player.
    pub fn own_matrix(&self, player: Player) -> Matrix {
        match player {
            Player::Row => self.a,
            Player::Column => transpose(&self.b),
        }
    }

    /// The same game with the roles of the players exchanged.
    pub fn swap_players(&self) -> Game {
        Game {
            a: transpose(&self.b),
            b: transpose(&self.a),
            symmetric: self.symmetric,
        }
    }

    fn entry_range(m: &Matrix) -> (f64, f64) {
        m.iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// `(min, max)` over the entries of `A`.
    pub fn row_range(&self) -> (f64, f64) {
        Self::entry_range(&self.a)
    }

    pub fn col_range(&self) -> (f64, f64) {
        Self::entry_range(&self.b)
    }
}

pub(crate) fn transpose(m: &Matrix) -> Matrix {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

/// `M v` for a 2×2 matrix.
#[inline]
pub(crate) fn mat_vec(m: &Matrix, v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

#[inline]
pub(crate) fn dot(u: [f64; 2], v: [f64; 2]) -> f64 {
    u[0] * v[0] + u[1] * v[1]
}

fn valid_simplex(p: &[f64]) -> bool {
    p.iter().all(|v| (0.0..=1.0).contains(v)) && (p.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOL
}

/// A probability vector over a player's two pure strategies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedStrategy([f64; 2]);

impl MixedStrategy {
    pub fn new(probs: [f64; 2]) -> Result<MixedStrategy> {
        if valid_simplex(&probs) {
            Ok(MixedStrategy(probs))
        } else {
            Err(Error::InvalidProbability(probs.to_vec()))
        }
    }

    /// `(p, 1 - p)`: plays the first strategy with probability `p`.
    pub fn from_first(p: f64) -> Result<MixedStrategy> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(vec![p, 1.0 - p]));
        }
        Ok(MixedStrategy([p, 1.0 - p]))
    }

    /// `(cos²θ, sin²θ)`.
    pub fn from_angle(theta: f64) -> MixedStrategy {
        let (s, c) = theta.sin_cos();
        MixedStrategy([c * c, s * s])
    }

    pub fn pure(index: usize) -> MixedStrategy {
        let mut p = [0.0; 2];
        p[index] = 1.0;
        MixedStrategy(p)
    }

    /// Clips into `[0, 1]` and rescales to unit sum.
    pub(crate) fn projected(probs: [f64; 2]) -> MixedStrategy {
        let c = probs.map(|v| v.clamp(0.0, 1.0));
        let s = c[0] + c[1];
        if s > 0.0 {
            MixedStrategy([c[0] / s, c[1] / s])
        } else {
            MixedStrategy([0.5, 0.5])
        }
    }

    pub fn probs(&self) -> [f64; 2] {
        self.0
    }

    /// Probability of the first strategy.
    pub fn first(&self) -> f64 {
        self.0[0]
    }

    pub fn is_interior(&self) -> bool {
        self.0[0] > 0.0 && self.0[1] > 0.0
    }
}

/// A probability vector over the pure profiles `[TT, TF, FT, FF]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointDistribution([f64; 4]);

impl JointDistribution {
    pub fn new(probs: [f64; 4]) -> Result<JointDistribution> {
        if valid_simplex(&probs) {
            Ok(JointDistribution(probs))
        } else {
            Err(Error::InvalidProbability(probs.to_vec()))
        }
    }

    /// The product distribution `x ⊗ y`.
    pub fn product(x: &MixedStrategy, y: &MixedStrategy) -> JointDistribution {
        let (x, y) = (x.0, y.0);
        JointDistribution([x[0] * y[0], x[0] * y[1], x[1] * y[0], x[1] * y[1]])
    }

    pub fn probs(&self) -> [f64; 4] {
        self.0
    }

    pub fn prob(&self, profile: Profile) -> f64 {
        self.0[profile.index()]
    }

    /// Marginal distribution of one player.
    pub fn marginal(&self, player: Player) -> MixedStrategy {
        let p = self.0;
        let m = match player {
            Player::Row => [p[0] + p[1], p[2] + p[3]],
            Player::Column => [p[0] + p[2], p[1] + p[3]],
        };
        MixedStrategy::projected(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PayoffPair {
    pub u_a: f64,
    pub u_b: f64,
}

/// Expected payoffs `(xᵀAy, xᵀBy)`.
pub fn expected_payoffs(x: &MixedStrategy, y: &MixedStrategy, g: &Game) -> PayoffPair {
    let (x, y) = (x.0, y.0);
    PayoffPair {
        u_a: dot(x, mat_vec(&g.a, y)),
        u_b: dot(x, mat_vec(&g.b, y)),
    }
}

/// Expected payoffs under an arbitrary (possibly correlated) distribution
/// over pure profiles.
pub fn joint_payoffs(p: &JointDistribution, g: &Game) -> PayoffPair {
    let mut out = PayoffPair::default();
    for profile in Profile::ALL {
        let (i, j) = profile.indices();
        let w = p.0[profile.index()];
        out.u_a += w * g.a[i][j];
        out.u_b += w * g.b[i][j];
    }
    out
}

/// Pure profiles from which neither player strictly gains by deviating.
pub fn pure_equilibria(g: &Game) -> Vec<Profile> {
    Profile::ALL
        .into_iter()
        .filter(|p| {
            let (i, j) = p.indices();
            g.a[i][j] >= g.a[1 - i][j] && g.b[i][j] >= g.b[i][1 - j]
        })
        .collect()
}

/// The unique fully mixed equilibrium, when it exists.
///
/// The row player's equilibrium share makes the column player indifferent
/// and vice versa, so `x*` comes from `B` and `y*` from `A`.
pub fn internal_equilibrium(g: &Game) -> Option<(MixedStrategy, MixedStrategy)> {
    let [[a, b], [c, d]] = g.a;
    let [[ap, bp], [cp, dp]] = g.b;
    let den_x = ap - bp - cp + dp;
    let den_y = a - b - c + d;
    if den_x.abs() <= DEGENERACY_TOL || den_y.abs() <= DEGENERACY_TOL {
        return None;
    }
    let xs = (dp - cp) / den_x;
    let ys = (d - b) / den_y;
    let inside = |v: f64| v > 0.0 && v < 1.0;
    if inside(xs) && inside(ys) {
        Some((MixedStrategy([xs, 1.0 - xs]), MixedStrategy([ys, 1.0 - ys])))
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GameClass {
    /// A single pure equilibrium that every interior start reaches.
    DominantPure,
    /// Anti-coordination (`a < c`, `b > d`), e.g. Hawk-Dove.
    TypeI,
    /// Coordination (`a > c`, `b < d`), e.g. Trading-Farming.
    TypeII,
    /// `a = c` or `b = d`.
    Degenerate,
    Asymmetric,
}

impl fmt::Display for GameClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

pub fn classify_symmetric(g: &Game) -> GameClass {
    let Some((a, b, c, d)) = g.symmetric_params() else {
        return GameClass::Asymmetric;
    };
    if a == c || b == d {
        GameClass::Degenerate
    } else if (a > c) == (b > d) {
        GameClass::DominantPure
    } else if a < c {
        GameClass::TypeI
    } else {
        GameClass::TypeII
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub pure: Vec<Profile>,
    pub internal: Option<(MixedStrategy, MixedStrategy)>,
    pub game_class: GameClass,
}

impl EquilibriumReport {
    pub fn analyze(g: &Game) -> EquilibriumReport {
        EquilibriumReport {
            pure: pure_equilibria(g),
            internal: internal_equilibrium(g),
            game_class: classify_symmetric(g),
        }
    }
}

impl fmt::Display for EquilibriumReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pure: Vec<String> = self.pure.iter().map(|p| p.to_string()).collect();
        writeln!(f, "pure equilibria: {{{}}}", pure.join(", "))?;
        match &self.internal {
            Some((x, y)) => writeln!(f, "internal equilibrium: ({:?}, {:?})", x.first(), y.first())?,
            None => writeln!(f, "internal equilibrium: none")?,
        }
        write!(f, "class: {}", self.game_class)
    }
}

/// Born-rule distribution over pure profiles, `p(s) = |⟨s|ψ⟩|²`.
pub fn induced_distribution(q: &JointQuantumState) -> Result<JointDistribution> {
    q.check_normalized()?;
    Ok(q.born())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tf() -> Game {
        Game::symmetric(1.0, 0.0, 0.5, 0.5).unwrap()
    }

    fn mixed(p: f64) -> MixedStrategy {
        MixedStrategy::from_first(p).unwrap()
    }

    #[test]
    fn trading_farming_pure_payoffs() {
        let g = tf();
        assert_eq!(g.col_payoffs(), &[[1.0, 0.5], [0.0, 0.5]]);
        let u = expected_payoffs(&mixed(1.0), &mixed(1.0), &g);
        assert_eq!((u.u_a, u.u_b), (1.0, 1.0));
        let u = expected_payoffs(&mixed(1.0), &mixed(0.0), &g);
        assert_eq!((u.u_a, u.u_b), (0.0, 0.5));
        let u = expected_payoffs(&mixed(0.5), &mixed(0.5), &g);
        assert_abs_diff_eq!(u.u_a, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(u.u_b, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_probabilities() {
        assert!(MixedStrategy::new([0.6, 0.6]).is_err());
        assert!(MixedStrategy::new([-0.1, 1.1]).is_err());
        assert!(MixedStrategy::from_first(1.2).is_err());
        assert!(JointDistribution::new([0.5, 0.5, 0.5, 0.0]).is_err());
        assert!(Game::new([[f64::NAN, 0.0], [0.0, 0.0]], [[0.0; 2]; 2]).is_err());
    }

    #[test]
    fn pure_equilibria_examples() {
        assert_eq!(pure_equilibria(&tf()), vec![Profile::TT, Profile::FF]);
        let dominant = Game::symmetric(2.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(pure_equilibria(&dominant), vec![Profile::TT]);
        let hd = Game::symmetric(-1.0, 2.0, 0.0, 1.0).unwrap();
        assert_eq!(pure_equilibria(&hd), vec![Profile::TF, Profile::FT]);
    }

    #[test]
    fn pure_equilibria_match_brute_force() {
        // Deviation check over all four profiles written out longhand.
        let g = Game::new([[3.0, -1.0], [2.0, 2.0]], [[0.0, 1.0], [4.0, -2.0]]).unwrap();
        let (a, b) = (g.row_payoffs(), g.col_payoffs());
        let mut expected = Vec::new();
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let row_ok = (0..2).all(|k| a[i][j] >= a[k][j]);
            let col_ok = (0..2).all(|k| b[i][j] >= b[i][k]);
            if row_ok && col_ok {
                expected.push(Profile::from_indices(i, j));
            }
        }
        assert_eq!(pure_equilibria(&g), expected);
    }

    #[test]
    fn internal_equilibrium_examples() {
        let (x, y) = internal_equilibrium(&tf()).unwrap();
        assert_eq!((x.first(), y.first()), (0.5, 0.5));

        let pd = Game::symmetric(0.0, 5.0, 1.0, 3.0).unwrap();
        let (x, y) = internal_equilibrium(&pd).unwrap();
        assert_abs_diff_eq!(x.first(), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y.first(), 2.0 / 3.0, epsilon = 1e-15);
        let g = mat_vec(pd.row_payoffs(), y.probs());
        assert_abs_diff_eq!(g[0], g[1], epsilon = 1e-14);

        let dominant = Game::symmetric(2.0, 1.0, 1.0, 0.0).unwrap();
        assert!(internal_equilibrium(&dominant).is_none());
        // all denominators vanish
        let flat = Game::symmetric(1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(internal_equilibrium(&flat).is_none());
    }

    #[test]
    fn asymmetric_internal_equilibrium() {
        // Matching pennies: unique mixed equilibrium at (1/2, 1/2).
        let g = Game::new([[1.0, -1.0], [-1.0, 1.0]], [[-1.0, 1.0], [1.0, -1.0]]).unwrap();
        assert!(!g.is_symmetric());
        let (x, y) = internal_equilibrium(&g).unwrap();
        assert_eq!((x.first(), y.first()), (0.5, 0.5));
        assert_eq!(classify_symmetric(&g), GameClass::Asymmetric);
        assert!(pure_equilibria(&g).is_empty());
    }

    #[test]
    fn classification() {
        assert_eq!(classify_symmetric(&tf()), GameClass::TypeII);
        let hd = Game::symmetric(-1.0, 2.0, 0.0, 1.0).unwrap();
        assert_eq!(classify_symmetric(&hd), GameClass::TypeI);
        let tie = Game::symmetric(1.0, 0.0, 1.0, 0.5).unwrap();
        assert_eq!(classify_symmetric(&tie), GameClass::Degenerate);
        let dominant = Game::symmetric(2.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(classify_symmetric(&dominant), GameClass::DominantPure);
        // b > d > c > a
        let pd = Game::symmetric(0.0, 5.0, 1.0, 3.0).unwrap();
        assert_eq!(classify_symmetric(&pd), GameClass::TypeI);
    }

    #[test]
    fn swap_players_mirrors_payoffs() {
        let g = Game::new([[3.0, -1.0], [2.0, 2.0]], [[0.0, 1.0], [4.0, -2.0]]).unwrap();
        let s = g.swap_players();
        let (x, y) = (mixed(0.3), mixed(0.8));
        let u = expected_payoffs(&x, &y, &g);
        let v = expected_payoffs(&y, &x, &s);
        assert_abs_diff_eq!(u.u_a, v.u_b, epsilon = 1e-15);
        assert_abs_diff_eq!(u.u_b, v.u_a, epsilon = 1e-15);
    }

    #[test]
    fn marginals_of_product() {
        let p = JointDistribution::product(&mixed(0.36), &mixed(0.25));
        assert_abs_diff_eq!(p.marginal(Player::Row).first(), 0.36, epsilon = 1e-15);
        assert_abs_diff_eq!(p.marginal(Player::Column).first(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn report_display() {
        let text = EquilibriumReport::analyze(&tf()).to_string();
        assert!(text.contains("{TT, FF}"));
        assert!(text.contains("(0.5, 0.5)"));
        assert!(text.contains("TypeII"));
    }
}
