//! Replicator dynamics on mixed strategies.

use nalgebra::{Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use crate::engine::{self, OdeState, RunMeta, Snapshot, StepParams, Trajectory};
use crate::error::{Error, Result};
use crate::game::{dot, expected_payoffs, internal_equilibrium, mat_vec, Game, Matrix, MixedStrategy, PayoffPair, Player};

/// Strategy pair being integrated. Entries may leave the simplex by
/// rounding inside a step; the post-step hook projects them back.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalState {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl ClassicalState {
    pub fn new(x: &MixedStrategy, y: &MixedStrategy) -> ClassicalState {
        ClassicalState { x: x.probs(), y: y.probs() }
    }

    pub fn strategies(&self) -> (MixedStrategy, MixedStrategy) {
        (MixedStrategy::projected(self.x), MixedStrategy::projected(self.y))
    }

    /// Clips each strategy into `[0,1]`, renormalizes, and returns the
    /// largest amount any coordinate had strayed.
    pub fn project(&mut self) -> f64 {
        let stray = |p: &[f64; 2]| {
            let out = p.iter().map(|v| (-v).max(v - 1.0).max(0.0)).fold(0.0, f64::max);
            out.max((p[0] + p[1] - 1.0).abs())
        };
        let drift = stray(&self.x).max(stray(&self.y));
        self.x = MixedStrategy::projected(self.x).probs();
        self.y = MixedStrategy::projected(self.y).probs();
        drift
    }
}

impl OdeState for ClassicalState {
    fn add_scaled(&self, h: f64, k: &Self) -> Self {
        ClassicalState {
            x: self.x.add_scaled(h, &k.x),
            y: self.y.add_scaled(h, &k.y),
        }
    }
    fn norm(&self) -> f64 {
        (self.x[0] * self.x[0] + self.x[1] * self.x[1] + self.y[0] * self.y[0] + self.y[1] * self.y[1]).sqrt()
    }
    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Snapshot for ClassicalState {
    fn strategy_point(&self) -> [f64; 2] {
        [self.x[0], self.y[0]]
    }
    fn coords(&self) -> Vec<f64> {
        vec![self.x[0], self.y[0]]
    }
}

/// `(M q)_i - pᵀ M q` for the player whose oriented payoff matrix is `m`,
/// playing `own` against `opp`.
#[inline]
pub(crate) fn payoff_gaps(m: &Matrix, own: [f64; 2], opp: [f64; 2]) -> [f64; 2] {
    let g = mat_vec(m, opp);
    let u = dot(own, g);
    [g[0] - u, g[1] - u]
}

#[inline]
fn player_velocity(m: &Matrix, own: [f64; 2], opp: [f64; 2], gamma: f64) -> [f64; 2] {
    let v = payoff_gaps(m, own, opp);
    [gamma * own[0] * v[0], gamma * own[1] * v[1]]
}

/// The replicator vector field on raw coordinates. Both players go through
/// the same arithmetic, so symmetric games treat them bit-identically.
pub fn replicator_field(g: &Game, s: &ClassicalState, gamma: f64) -> ClassicalState {
    ClassicalState {
        x: player_velocity(&g.own_matrix(Player::Row), s.x, s.y, gamma),
        y: player_velocity(&g.own_matrix(Player::Column), s.y, s.x, gamma),
    }
}

/// `dx_i/dt = γ x_i((Ay)_i − xᵀAy)` and `dy_j/dt = γ y_j((xᵀB)_j − xᵀBy)`.
pub fn replicator_velocity(g: &Game, x: &MixedStrategy, y: &MixedStrategy, gamma: f64) -> ([f64; 2], [f64; 2]) {
    let v = replicator_field(g, &ClassicalState::new(x, y), gamma);
    (v.x, v.y)
}

/// Diagonal growth-rate operators with `dx/dt = V⁽ˣ⁾x`, `dy/dt = V⁽ʸ⁾y`
/// and `dp/dt = V p` on the joint distribution `p = x ⊗ y`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityOperator {
    pub vx: [f64; 2],
    pub vy: [f64; 2],
    pub vx_matrix: Matrix2<f64>,
    pub vy_matrix: Matrix2<f64>,
    /// `I ⊗ V⁽ʸ⁾ + V⁽ˣ⁾ ⊗ I`.
    pub joint: Matrix4<f64>,
}

pub fn velocity_operator(g: &Game, x: &MixedStrategy, y: &MixedStrategy, gamma: f64) -> VelocityOperator {
    let gx = payoff_gaps(&g.own_matrix(Player::Row), x.probs(), y.probs());
    let gy = payoff_gaps(&g.own_matrix(Player::Column), y.probs(), x.probs());
    let vx = gx.map(|v| gamma * v);
    let vy = gy.map(|v| gamma * v);
    let vx_matrix = Matrix2::from_diagonal(&vx.into());
    let vy_matrix = Matrix2::from_diagonal(&vy.into());
    let eye = Matrix2::<f64>::identity();
    let joint = eye.kronecker(&vy_matrix) + vx_matrix.kronecker(&eye);
    VelocityOperator {
        vx,
        vy,
        vx_matrix,
        vy_matrix,
        joint,
    }
}

/// `a − c` and `b − d` of a symmetric game together with the rate γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricField {
    pub ac: f64,
    pub bd: f64,
    pub gamma: f64,
}

impl SymmetricField {
    pub fn from_game(g: &Game, gamma: f64) -> Result<SymmetricField> {
        let (a, b, c, d) = g.symmetric_params().ok_or(Error::NotSymmetric)?;
        Ok(SymmetricField { ac: a - c, bd: b - d, gamma })
    }

    /// `δ(z) = (a − c) z + (b − d)(1 − z)` with `z = cos²θ`: the payoff
    /// advantage of the first strategy against an opponent playing it with
    /// probability `z`.
    pub fn delta(&self, z: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::OutOfUnitInterval { value: z });
        }
        Ok(self.ac * z + self.bd * (1.0 - z))
    }
}

/// Payoff advantage of `player`'s first strategy when the opponent plays
/// the first strategy with probability `opp_first`. For the row player this
/// is `δ_A(y₀)`, and `dx₀ = γ x₀ x₁ δ_A(y₀)`.
pub fn advantage(g: &Game, player: Player, opp_first: f64) -> f64 {
    let m = g.own_matrix(player);
    (m[0][0] - m[1][0]) * opp_first + (m[0][1] - m[1][1]) * (1.0 - opp_first)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(v: f64) -> Sign {
        if v > 0.0 {
            Sign::Positive
        } else if v < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }
}

/// Signs of `(dx₀, dy₀)` at an interior point, read off the δ
/// factorization rather than from the (possibly tiny) velocities.
pub fn quadrant_signature(g: &Game, x: &MixedStrategy, y: &MixedStrategy) -> Result<(Sign, Sign)> {
    if !(x.is_interior() && y.is_interior()) {
        return Err(Error::NotInterior(x.first(), y.first()));
    }
    if internal_equilibrium(g).is_none() {
        return Err(Error::NoInternalEquilibrium);
    }
    Ok((
        Sign::of(advantage(g, Player::Row, y.first())),
        Sign::of(advantage(g, Player::Column, x.first())),
    ))
}

/// Smallest payoff growth rate seen along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentReport {
    pub min_rate_a: f64,
    pub min_rate_b: f64,
    pub samples: usize,
    pub frozen_opponent: bool,
}

/// Rate of change of each player's realized payoff at one state.
///
/// With the opponent frozen this is the variance form `γ Σᵢ xᵢ((Ay)ᵢ − u)²`;
/// otherwise both strategies move and the full chain rule
/// `ẋᵀAy + xᵀAẏ` applies.
pub fn payoff_rates(g: &Game, s: &ClassicalState, gamma: f64, frozen_opponent: bool) -> [f64; 2] {
    let gx = payoff_gaps(&g.own_matrix(Player::Row), s.x, s.y);
    let gy = payoff_gaps(&g.own_matrix(Player::Column), s.y, s.x);
    if frozen_opponent {
        let var = |p: [f64; 2], v: [f64; 2]| gamma * (p[0] * v[0] * v[0] + p[1] * v[1] * v[1]);
        return [var(s.x, gx), var(s.y, gy)];
    }
    let v = replicator_field(g, s, gamma);
    let a = g.row_payoffs();
    let b = g.col_payoffs();
    let rate = |m: &Matrix| dot(v.x, mat_vec(m, s.y)) + dot(s.x, mat_vec(m, v.y));
    [rate(a), rate(b)]
}

pub fn adjustment_diagnostic(g: &Game, traj: &Trajectory<ClassicalState>, frozen_opponent: bool) -> Result<AdjustmentReport> {
    if traj.is_empty() {
        return Err(Error::ShortTrajectory { needed: 1, got: 0 });
    }
    let gamma = traj.meta.gamma;
    let (mut min_a, mut min_b) = (f64::INFINITY, f64::INFINITY);
    for s in &traj.states {
        let [ra, rb] = payoff_rates(g, s, gamma, frozen_opponent);
        min_a = min_a.min(ra);
        min_b = min_b.min(rb);
    }
    Ok(AdjustmentReport {
        min_rate_a: min_a,
        min_rate_b: min_b,
        samples: traj.len(),
        frozen_opponent,
    })
}

fn classical_meta(gamma: f64, step: &StepParams, model: &str) -> RunMeta {
    RunMeta {
        model: model.into(),
        gamma,
        step: *step,
        hamiltonian: None,
        renormalize: None,
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma >= 0.0 {
        Ok(())
    } else {
        Err(Error::param("gamma", format!("must be finite and non-negative, got {gamma}")))
    }
}

fn run(
    g: &Game,
    x0: &MixedStrategy,
    y0: &MixedStrategy,
    gamma: f64,
    step: &StepParams,
    frozen: Option<Player>,
) -> Result<Trajectory<ClassicalState>> {
    check_gamma(gamma)?;
    let field = |_t: f64, s: &ClassicalState| {
        let mut v = replicator_field(g, s, gamma);
        match frozen {
            Some(Player::Row) => v.x = [0.0; 2],
            Some(Player::Column) => v.y = [0.0; 2],
            None => {}
        }
        v
    };
    let path = engine::integrate(field, ClassicalState::new(x0, y0), step, ClassicalState::project)?;
    let model = if frozen.is_some() { "classical-frozen" } else { "classical" };
    Ok(Trajectory::from_path(
        path,
        classical_meta(gamma, step, model),
        |s| *s,
        |s| {
            let (x, y) = s.strategies();
            expected_payoffs(&x, &y, g)
        },
        None,
    ))
}

/// Integrates replicator dynamics for both players.
pub fn evolve_classical(g: &Game, x0: &MixedStrategy, y0: &MixedStrategy, gamma: f64, step: &StepParams) -> Result<Trajectory<ClassicalState>> {
    run(g, x0, y0, gamma, step, None)
}

/// Integrates replicator dynamics with `frozen` held at its initial strategy.
pub fn evolve_classical_frozen(
    g: &Game,
    x0: &MixedStrategy,
    y0: &MixedStrategy,
    frozen: Player,
    gamma: f64,
    step: &StepParams,
) -> Result<Trajectory<ClassicalState>> {
    run(g, x0, y0, gamma, step, Some(frozen))
}

/// Realized payoff of each sample, for callers that only need the numbers.
pub fn payoff_series(traj: &Trajectory<ClassicalState>) -> Vec<PayoffPair> {
    traj.payoffs.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tf() -> Game {
        Game::symmetric(1.0, 0.0, 0.5, 0.5).unwrap()
    }

    fn hd() -> Game {
        Game::symmetric(-1.0, 2.0, 0.0, 1.0).unwrap()
    }

    fn m(p: f64) -> MixedStrategy {
        MixedStrategy::from_first(p).unwrap()
    }

    #[test]
    fn trading_farming_velocity() {
        let (dx, dy) = replicator_velocity(&tf(), &m(0.6), &m(0.7), 1.0);
        assert_abs_diff_eq!(dx[0], 0.048, epsilon = 1e-15);
        assert_abs_diff_eq!(dx[1], -0.048, epsilon = 1e-15);
        assert_abs_diff_eq!(dy[0], 0.021, epsilon = 1e-15);
        assert_abs_diff_eq!(dy[1], -0.021, epsilon = 1e-15);
    }

    #[test]
    fn fixed_points() {
        let (dx, dy) = replicator_velocity(&tf(), &m(0.5), &m(0.5), 1.0);
        assert_eq!((dx, dy), ([0.0, 0.0], [0.0, 0.0]));
        for y in [0.0, 0.3, 1.0] {
            let (dx, _) = replicator_velocity(&hd(), &m(1.0), &m(y), 2.0);
            assert_eq!(dx, [0.0, 0.0]);
        }
    }

    #[test]
    fn velocity_operator_entries() {
        let op = velocity_operator(&tf(), &m(0.6), &m(0.7), 1.0);
        assert_abs_diff_eq!(op.vx[0], 0.08, epsilon = 1e-15);
        assert_abs_diff_eq!(op.vx[1], -0.12, epsilon = 1e-15);
        assert_eq!(op.vx_matrix[(0, 1)], 0.0);
        assert_eq!(op.joint[(0, 0)], op.vx[0] + op.vy[0]);
        assert_eq!(op.joint[(1, 1)], op.vx[0] + op.vy[1]);
        assert_eq!(op.joint[(2, 2)], op.vx[1] + op.vy[0]);
        let zero = velocity_operator(&tf(), &m(0.5), &m(0.5), 1.0);
        assert_eq!(zero.joint, Matrix4::zeros());
    }

    #[test]
    fn symmetric_delta_examples() {
        let f = SymmetricField::from_game(&tf(), 1.0).unwrap();
        assert_abs_diff_eq!(f.delta(0.3).unwrap(), -0.2, epsilon = 1e-15);
        assert_eq!(f.delta(0.5).unwrap(), 0.0);
        let h = SymmetricField::from_game(&hd(), 1.0).unwrap();
        assert_eq!(h.delta(0.25).unwrap(), 0.5);
        assert!(matches!(f.delta(1.5), Err(Error::OutOfUnitInterval { .. })));
        let asym = Game::new([[1.0, 0.0], [0.0, 1.0]], [[0.0; 2]; 2]).unwrap();
        assert_eq!(SymmetricField::from_game(&asym, 1.0), Err(Error::NotSymmetric));
    }

    #[test]
    fn quadrant_signature_examples() {
        use Sign::*;
        assert_eq!(quadrant_signature(&tf(), &m(0.7), &m(0.3)).unwrap(), (Negative, Positive));
        assert_eq!(quadrant_signature(&tf(), &m(0.99), &m(0.49)).unwrap(), (Negative, Positive));
        assert_eq!(quadrant_signature(&hd(), &m(0.8), &m(0.2)).unwrap(), (Positive, Negative));
        assert!(matches!(quadrant_signature(&tf(), &m(1.0), &m(0.3)), Err(Error::NotInterior(..))));
        let dominant = Game::symmetric(2.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(quadrant_signature(&dominant, &m(0.5), &m(0.5)), Err(Error::NoInternalEquilibrium));
    }

    #[test]
    fn frozen_opponent_rates_are_variances() {
        let s = ClassicalState::new(&m(0.6), &m(0.7));
        let [ra, _] = payoff_rates(&tf(), &s, 1.0, true);
        // (Ay) = (0.7, 0.5), u = 0.62
        let expected = 0.6 * 0.08f64.powi(2) + 0.4 * 0.12f64.powi(2);
        assert_abs_diff_eq!(ra, expected, epsilon = 1e-15);
    }

    #[test]
    fn adjustment_at_rest_is_zero() {
        let t = evolve_classical(&tf(), &m(0.5), &m(0.5), 1.0, &StepParams::new(1e-2, 1.0, 10)).unwrap();
        let r = adjustment_diagnostic(&tf(), &t, false).unwrap();
        assert_eq!((r.min_rate_a, r.min_rate_b), (0.0, 0.0));
    }

    #[test]
    fn joint_adjustment_from_coordination_start() {
        let step = StepParams::new(1e-4, 20.0, 100);
        let t = evolve_classical(&tf(), &m(0.6), &m(0.6), 1.0, &step).unwrap();
        let r = adjustment_diagnostic(&tf(), &t, false).unwrap();
        assert!(r.min_rate_a >= -1e-9 && r.min_rate_b >= -1e-9, "{r:?}");
    }

    #[test]
    fn trading_farming_converges_to_tt() {
        let t = evolve_classical(&tf(), &m(0.6), &m(0.6), 1.0, &StepParams::default()).unwrap();
        let last = t.last().unwrap();
        assert!((1.0 - last.x[0]).hypot(1.0 - last.y[0]) < 1e-3);
        assert!(t.flagged_steps == 0, "max drift {}", t.max_drift);
    }

    #[test]
    fn frozen_player_does_not_move() {
        let t = evolve_classical_frozen(&tf(), &m(0.3), &m(0.8), Player::Column, 1.0, &StepParams::new(1e-3, 5.0, 100)).unwrap();
        assert!(t.states.iter().all(|s| s.y == [0.8, 1.0 - 0.8]));
        assert!(t.last().unwrap().x[0] > 0.3);
    }

    #[test]
    fn rejects_negative_gamma() {
        assert!(evolve_classical(&tf(), &m(0.5), &m(0.5), -1.0, &StepParams::default()).is_err());
    }
}
