//! Quantum strategies and their state-dependent Hamiltonian evolution.
//!
//! A player's quantum strategy is a unit vector in `span{|0⟩, |1⟩}`; the
//! joint strategy lives in the four-dimensional product space with basis
//! `|00⟩, |01⟩, |10⟩, |11⟩` (row player first). Payoffs are read out by
//! measuring in this basis. ħ is fixed to 1 throughout, so γ is the only
//! rate constant.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Matrix4, SMatrix, SVector, Vector2, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::{self, OdeState, RunMeta, Snapshot, StepParams, Trajectory};
use crate::error::{Error, Result};
use crate::game::{joint_payoffs, mat_vec, Game, JointDistribution, Matrix, MixedStrategy, PayoffPair, Player, Profile};

/// Largest tolerated deviation of a state's norm from 1.
pub const NORM_TOL: f64 = 1e-9;

/// Reduced states with purity below `1 - PURITY_TOL` count as mixed.
pub const PURITY_TOL: f64 = 1e-9;

pub type C64 = Complex64;

const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

fn check_norm(norm: f64) -> Result<()> {
    if (norm - 1.0).abs() > NORM_TOL || !norm.is_finite() {
        Err(Error::NotNormalized(norm))
    } else {
        Ok(())
    }
}

/// Squared magnitudes rescaled to unit sum.
fn born_probs<const N: usize>(amps: &SVector<C64, N>) -> [f64; N] {
    let sq: [f64; N] = std::array::from_fn(|i| amps[i].norm_sqr());
    let total: f64 = sq.iter().sum();
    sq.map(|v| v / total)
}

/// A single player's quantum strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalQuantumState(Vector2<C64>);

impl LocalQuantumState {
    pub fn new(amps: [C64; 2]) -> Result<LocalQuantumState> {
        let v = Vector2::from(amps);
        check_norm(v.norm())?;
        Ok(LocalQuantumState(v))
    }

    pub(crate) fn from_raw(v: Vector2<C64>) -> LocalQuantumState {
        LocalQuantumState(v)
    }

    pub fn basis(index: usize) -> LocalQuantumState {
        let mut v = Vector2::zeros();
        v[index] = ONE;
        LocalQuantumState(v)
    }

    /// `(e^{iα} cos θ, e^{-iα} sin θ)`.
    pub fn from_angles(theta: f64, alpha: f64) -> LocalQuantumState {
        let (s, c) = theta.sin_cos();
        LocalQuantumState(Vector2::new(C64::from_polar(c, alpha), C64::from_polar(s, -alpha)))
    }

    /// Real non-negative amplitudes `√pᵢ`.
    pub fn from_mixed(p: &MixedStrategy) -> LocalQuantumState {
        let [p0, p1] = p.probs();
        LocalQuantumState(Vector2::new(C64::from(p0.sqrt()), C64::from(p1.sqrt())))
    }

    pub fn amps(&self) -> &Vector2<C64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// Measurement distribution over the two pure strategies.
    pub fn probs(&self) -> [f64; 2] {
        born_probs(&self.0)
    }

    pub fn induced_strategy(&self) -> MixedStrategy {
        MixedStrategy::projected(self.probs())
    }

    /// Whether the two states differ only by a global phase.
    pub fn phase_equivalent(&self, other: &LocalQuantumState, tol: f64) -> bool {
        let overlap = self.0.dotc(&other.0).norm();
        (overlap - self.norm() * other.norm()).abs() <= tol
    }
}

/// A joint quantum strategy. When it was built as (or evolved from) a
/// tensor product the factors ride along as `product`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointQuantumState {
    amps: Vector4<C64>,
    product: Option<(LocalQuantumState, LocalQuantumState)>,
}

fn kron2(a: &Vector2<C64>, b: &Vector2<C64>) -> Vector4<C64> {
    Vector4::new(a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
}

impl JointQuantumState {
    pub fn new(amps: [C64; 4]) -> Result<JointQuantumState> {
        let amps = Vector4::from(amps);
        check_norm(amps.norm())?;
        Ok(JointQuantumState { amps, product: None })
    }

    /// `ψ ⊗ ζ`.
    pub fn product(row: &LocalQuantumState, col: &LocalQuantumState) -> JointQuantumState {
        JointQuantumState {
            amps: kron2(&row.0, &col.0),
            product: Some((*row, *col)),
        }
    }

    pub fn basis(profile: Profile) -> JointQuantumState {
        let (i, j) = profile.indices();
        JointQuantumState::product(&LocalQuantumState::basis(i), &LocalQuantumState::basis(j))
    }

    /// `Σ √(xᵢ yⱼ) |ij⟩`.
    pub fn embed_classical(x: &MixedStrategy, y: &MixedStrategy) -> JointQuantumState {
        JointQuantumState::product(&LocalQuantumState::from_mixed(x), &LocalQuantumState::from_mixed(y))
    }

    pub(crate) fn from_raw(amps: Vector4<C64>, product: Option<(LocalQuantumState, LocalQuantumState)>) -> JointQuantumState {
        JointQuantumState { amps, product }
    }

    pub fn amps(&self) -> &Vector4<C64> {
        &self.amps
    }

    pub fn amp(&self, profile: Profile) -> C64 {
        self.amps[profile.index()]
    }

    pub fn product_factors(&self) -> Option<&(LocalQuantumState, LocalQuantumState)> {
        self.product.as_ref()
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub(crate) fn check_normalized(&self) -> Result<()> {
        check_norm(self.norm())
    }

    /// Born distribution, rescaled so it sums to one even for a state that
    /// has drifted off the unit sphere.
    pub(crate) fn born(&self) -> JointDistribution {
        JointDistribution::new(born_probs(&self.amps)).unwrap_or_else(|_| {
            let p = born_probs(&self.amps).map(|v| v.clamp(0.0, 1.0));
            let s: f64 = p.iter().sum();
            JointDistribution::new(p.map(|v| v / s)).expect("rescaled Born distribution")
        })
    }

    /// Reduced density matrix of `keep`.
    pub fn reduced_density(&self, keep: Player) -> Matrix2<C64> {
        let a = &self.amps;
        let idx = |own: usize, other: usize| match keep {
            Player::Row => 2 * own + other,
            Player::Column => 2 * other + own,
        };
        Matrix2::from_fn(|r, c| (0..2).map(|k| a[idx(r, k)] * a[idx(c, k)].conj()).sum())
    }
}

impl Snapshot for JointQuantumState {
    fn strategy_point(&self) -> [f64; 2] {
        let p = self.born().probs();
        [p[0] + p[1], p[0] + p[2]]
    }

    fn coords(&self) -> Vec<f64> {
        self.amps.iter().flat_map(|c| [c.re, c.im]).collect()
    }
}

/// Payoffs of measuring the joint state in the computational basis. Goes
/// through the same arithmetic as the classical payoff of the induced
/// distribution.
pub fn quantum_payoff(q: &JointQuantumState, g: &Game) -> Result<PayoffPair> {
    q.check_normalized()?;
    Ok(joint_payoffs(&q.born(), g))
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReducedState {
    Pure(LocalQuantumState),
    Mixed { density: Matrix2<C64>, purity: f64 },
}

impl ReducedState {
    pub fn is_pure(&self) -> bool {
        matches!(self, ReducedState::Pure(_))
    }
}

fn purity(rho: &Matrix2<C64>) -> f64 {
    (rho * rho).trace().re
}

/// Splits a product state into unit-norm factors with `ψ ⊗ ζ` equal to the
/// input. Phase convention: the column factor is taken from a column of its
/// reduced density matrix, the row factor is the projection onto it.
fn factorize(q: &JointQuantumState) -> Result<(LocalQuantumState, LocalQuantumState)> {
    let rho = q.reduced_density(Player::Column);
    let pur = purity(&rho) / rho.trace().re.powi(2);
    if pur < 1.0 - PURITY_TOL {
        return Err(Error::NotProduct(pur));
    }
    let k = if rho[(0, 0)].re >= rho[(1, 1)].re { 0 } else { 1 };
    let col = rho.column(k) / C64::from(rho[(k, k)].re.sqrt());
    let col = col.unscale(col.norm());
    let a = &q.amps;
    let row = Vector2::new(a[0] * col[0].conj() + a[1] * col[1].conj(), a[2] * col[0].conj() + a[3] * col[1].conj());
    Ok((LocalQuantumState(row), LocalQuantumState(col)))
}

/// The factors of a product state, from its tag or by factorization.
pub fn product_factors(q: &JointQuantumState) -> Result<(LocalQuantumState, LocalQuantumState)> {
    match q.product {
        Some(pair) => Ok(pair),
        None => factorize(q),
    }
}

/// Marginal state of one player: the factor itself for product states,
/// otherwise the reduced density matrix.
pub fn reduced_state(q: &JointQuantumState, keep: Player) -> Result<ReducedState> {
    q.check_normalized()?;
    if let Ok((row, col)) = product_factors(q) {
        return Ok(ReducedState::Pure(match keep {
            Player::Row => row,
            Player::Column => col,
        }));
    }
    let density = q.reduced_density(keep);
    let purity = purity(&density);
    Ok(ReducedState::Mixed { density, purity })
}

/// Strict form of [`reduced_state`]: only product states have a local ket.
pub fn reduced_ket(q: &JointQuantumState, keep: Player) -> Result<LocalQuantumState> {
    match reduced_state(q, keep)? {
        ReducedState::Pure(s) => Ok(s),
        ReducedState::Mixed { purity, .. } => Err(Error::NotProduct(purity)),
    }
}

/// `vᵢ = u(|i⟩|ψ_opp⟩) − u(|ψ⟩)`: payoff of pinning the player's own factor
/// to basis state `i`, relative to the current joint payoff.
pub fn quantum_partial_velocity(g: &Game, q: &JointQuantumState, player: Player) -> Result<[f64; 2]> {
    q.check_normalized()?;
    let (row, col) = product_factors(q)?;
    let (own, opp) = match player {
        Player::Row => (row, col),
        Player::Column => (col, row),
    };
    let pure = mat_vec(&g.own_matrix(player), opp.probs());
    let u = quantum_payoff(q, g)?;
    let current = match player {
        Player::Row => u.u_a,
        Player::Column => u.u_b,
    };
    debug_assert!(own.norm() > 0.0);
    Ok([pure[0] - current, pure[1] - current])
}

/// How the local generator is built from the payoff gaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HamiltonianMode {
    /// `H_A = Σ_{a,b} γ ⟨a|ψ⟩ (u(a) − u(b)) |a⟩⟨b|`, generally non-Hermitian.
    #[serde(rename = "h-def")]
    HDef,
    /// `(H_A + H_A†) / 2`.
    #[serde(rename = "hermitized")]
    Hermitized,
    /// No matrix: the state moves along
    /// `γ δ (−e^{−iα} sin θ, e^{iα} cos θ)` read off its current `(θ, α)`.
    #[serde(rename = "tangent")]
    Tangent,
    /// Experimental: `−i γ (u(i) − u(j)) Σ_k ⟨k|ψ_opp⟩ |i⟩⟨j|`.
    #[serde(rename = "general")]
    General,
}

impl HamiltonianMode {
    pub const ALL: [HamiltonianMode; 4] = [
        HamiltonianMode::HDef,
        HamiltonianMode::Hermitized,
        HamiltonianMode::Tangent,
        HamiltonianMode::General,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HamiltonianMode::HDef => "h-def",
            HamiltonianMode::Hermitized => "hermitized",
            HamiltonianMode::Tangent => "tangent",
            HamiltonianMode::General => "general",
        }
    }
}

impl fmt::Display for HamiltonianMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HamiltonianMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        HamiltonianMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownMode(s.to_string()))
    }
}

/// The opponent as seen by a player building its generator.
#[derive(Debug, Clone, Copy)]
pub enum Opponent<'a> {
    Quantum(&'a LocalQuantumState),
    /// A classical opponent's mixed strategy stands in for its measurement
    /// probabilities.
    Classical(&'a MixedStrategy),
}

impl Opponent<'_> {
    fn probs(&self) -> [f64; 2] {
        match self {
            Opponent::Quantum(s) => s.probs(),
            Opponent::Classical(m) => m.probs(),
        }
    }

    fn amplitude_sum(&self) -> C64 {
        match self {
            Opponent::Quantum(s) => s.0[0] + s.0[1],
            Opponent::Classical(m) => C64::from(m.probs()[0].sqrt() + m.probs()[1].sqrt()),
        }
    }
}

/// A local generator: a 2×2 Hamiltonian, or the tangent-flow marker with
/// its rate `γ δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalGenerator {
    Matrix(Matrix2<C64>),
    Tangent { rate: f64 },
}

impl LocalGenerator {
    pub fn matrix(&self) -> Option<&Matrix2<C64>> {
        match self {
            LocalGenerator::Matrix(h) => Some(h),
            LocalGenerator::Tangent { .. } => None,
        }
    }

    /// `dψ/dt` under this generator.
    pub fn velocity(&self, psi: &Vector2<C64>) -> Vector2<C64> {
        match self {
            LocalGenerator::Matrix(h) => -(h * psi) * I,
            LocalGenerator::Tangent { rate } => {
                let theta = psi[1].norm().atan2(psi[0].norm());
                let alpha = psi[0].arg();
                let (s, c) = theta.sin_cos();
                Vector2::new(-C64::from_polar(s, -alpha), C64::from_polar(c, alpha)) * C64::from(*rate)
            }
        }
    }
}

/// Builds the generator from raw (possibly unnormalized) amplitudes; `m` is
/// the player's payoff matrix oriented own × opponent.
pub(crate) fn local_generator(
    m: &Matrix,
    own: &Vector2<C64>,
    opp_probs: [f64; 2],
    opp_amp_sum: C64,
    gamma: f64,
    mode: HamiltonianMode,
) -> LocalGenerator {
    let u = mat_vec(m, opp_probs);
    let gap = |a: usize, b: usize| u[a] - u[b];
    match mode {
        HamiltonianMode::HDef | HamiltonianMode::Hermitized => {
            let h = Matrix2::from_fn(|a, b| own[a] * (gamma * gap(a, b)));
            LocalGenerator::Matrix(if mode == HamiltonianMode::Hermitized {
                (h + h.adjoint()).unscale(2.0)
            } else {
                h
            })
        }
        HamiltonianMode::Tangent => LocalGenerator::Tangent { rate: gamma * gap(0, 1) },
        HamiltonianMode::General => LocalGenerator::Matrix(Matrix2::from_fn(|i, j| -I * opp_amp_sum * (gamma * gap(i, j)))),
    }
}

/// The local Hamiltonian generator of `player` given its own strategy and
/// the opponent's.
pub fn hamiltonian_local(
    g: &Game,
    player: Player,
    own: &LocalQuantumState,
    opp: Opponent<'_>,
    gamma: f64,
    mode: HamiltonianMode,
) -> Result<LocalGenerator> {
    check_norm(own.norm())?;
    if let Opponent::Quantum(s) = opp {
        check_norm(s.norm())?;
    }
    Ok(local_generator(
        &g.own_matrix(player),
        &own.0,
        opp.probs(),
        opp.amplitude_sum(),
        gamma,
        mode,
    ))
}

/// `H = I ⊗ H_B + H_A ⊗ I`.
pub fn product_hamiltonian(ha: &Matrix2<C64>, hb: &Matrix2<C64>) -> Matrix4<C64> {
    let eye = Matrix2::<C64>::identity();
    eye.kronecker(hb) + ha.kronecker(&eye)
}

/// One RK4 step of `dψ/dt = −i H ψ` with `H` held fixed.
pub fn schrodinger_step<const N: usize>(state: &SVector<C64, N>, h: &SMatrix<C64, N, N>, dt: f64, renormalize: bool) -> Result<SVector<C64, N>> {
    if !h.iter().all(|z| z.is_finite()) {
        return Err(Error::NonFinite {
            t: 0.0,
            state: format!("{h:?}"),
        });
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    let f = |v: &SVector<C64, N>| -(h * v) * I;
    let dt_c = C64::from(dt);
    let half = C64::from(0.5 * dt);
    let k1 = f(state);
    let k2 = f(&(state + k1 * half));
    let k3 = f(&(state + k2 * half));
    let k4 = f(&(state + k3 * dt_c));
    let mut next = state + (k1 + k2 * C64::from(2.0) + k3 * C64::from(2.0) + k4) * (dt_c / C64::from(6.0));
    if renormalize {
        let n = next.norm();
        next.unscale_mut(n);
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumParams {
    pub gamma: f64,
    pub step: StepParams,
    pub mode: HamiltonianMode,
    pub renormalize: bool,
}

impl Default for QuantumParams {
    fn default() -> Self {
        QuantumParams {
            gamma: 1.0,
            step: StepParams::default(),
            mode: HamiltonianMode::HDef,
            renormalize: true,
        }
    }
}

impl QuantumParams {
    pub fn with_mode(mode: HamiltonianMode) -> QuantumParams {
        QuantumParams {
            mode,
            ..QuantumParams::default()
        }
    }

    pub(crate) fn meta(&self, model: &str) -> RunMeta {
        RunMeta {
            model: model.into(),
            gamma: self.gamma,
            step: self.step,
            hamiltonian: Some(self.mode.name().into()),
            renormalize: Some(self.renormalize),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::param("gamma", format!("must be finite and non-negative, got {}", self.gamma)));
        }
        self.step.validate()
    }
}

/// Joint amplitudes integrated together with the local factors that build
/// the state-dependent Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ProductFlow {
    joint: Vector4<C64>,
    row: Vector2<C64>,
    col: Vector2<C64>,
}

impl OdeState for ProductFlow {
    fn add_scaled(&self, h: f64, k: &Self) -> Self {
        let h = C64::from(h);
        ProductFlow {
            joint: self.joint + k.joint * h,
            row: self.row + k.row * h,
            col: self.col + k.col * h,
        }
    }
    fn norm(&self) -> f64 {
        (self.joint.norm_squared() + self.row.norm_squared() + self.col.norm_squared()).sqrt()
    }
    fn is_finite(&self) -> bool {
        self.joint.iter().chain(self.row.iter()).chain(self.col.iter()).all(|z| z.is_finite())
    }
}

/// `(dψ/dt, dζ/dt)` for a pair of local strategies.
pub(crate) fn pair_generators(
    g: &Game,
    row: &Vector2<C64>,
    col: &Vector2<C64>,
    gamma: f64,
    mode: HamiltonianMode,
) -> (LocalGenerator, LocalGenerator) {
    let p_row = born_probs(row);
    let p_col = born_probs(col);
    let ga = local_generator(&g.own_matrix(Player::Row), row, p_col, col[0] + col[1], gamma, mode);
    let gb = local_generator(&g.own_matrix(Player::Column), col, p_row, row[0] + row[1], gamma, mode);
    (ga, gb)
}

fn flow_field(g: &Game, s: &ProductFlow, gamma: f64, mode: HamiltonianMode) -> ProductFlow {
    let (ga, gb) = pair_generators(g, &s.row, &s.col, gamma, mode);
    let d_row = ga.velocity(&s.row);
    let d_col = gb.velocity(&s.col);
    let d_joint = match (ga, gb) {
        (LocalGenerator::Matrix(ha), LocalGenerator::Matrix(hb)) => -(product_hamiltonian(&ha, &hb) * s.joint) * I,
        _ => kron2(&d_row, &s.col) + kron2(&s.row, &d_col),
    };
    ProductFlow {
        joint: d_joint,
        row: d_row,
        col: d_col,
    }
}

/// Evolves a product state under the product Hamiltonian rebuilt from the
/// current state at every Runge–Kutta stage.
pub fn evolve_quantum(q0: &JointQuantumState, g: &Game, params: &QuantumParams) -> Result<Trajectory<JointQuantumState>> {
    params.validate()?;
    q0.check_normalized()?;
    let (row, col) = product_factors(q0)?;
    let s0 = ProductFlow {
        joint: kron2(&row.0, &col.0),
        row: row.0,
        col: col.0,
    };
    let (gamma, mode, renormalize) = (params.gamma, params.mode, params.renormalize);
    let post = |s: &mut ProductFlow| {
        if !renormalize {
            return 0.0;
        }
        let n = s.joint.norm();
        s.joint.unscale_mut(n);
        s.row.unscale_mut(s.row.norm());
        s.col.unscale_mut(s.col.norm());
        (n - 1.0).abs()
    };
    let path = engine::integrate(|_t, s: &ProductFlow| flow_field(g, s, gamma, mode), s0, &params.step, post)?;
    Ok(Trajectory::from_path(
        path,
        params.meta("quantum"),
        |s| JointQuantumState::from_raw(s.joint, Some((LocalQuantumState(s.row), LocalQuantumState(s.col)))),
        |q| joint_payoffs(&q.born(), g),
        Some(|s: &ProductFlow| s.joint.norm()),
    ))
}

/// Largest distance between the evolved joint amplitudes and the tensor
/// product of the evolved local factors, relative to the joint norm (which
/// only differs from 1 in unnormalized runs).
pub fn product_deviation(traj: &Trajectory<JointQuantumState>) -> f64 {
    traj.states
        .iter()
        .filter_map(|q| q.product.map(|(a, b)| (q.amps - kron2(&a.0, &b.0)).norm() / q.amps.norm()))
        .fold(0.0, f64::max)
}
