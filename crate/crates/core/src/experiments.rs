//! Reproduction drivers: basin sweeps, quantum-vs-classical matches and the
//! Nash fixed-point check.

use std::collections::BTreeMap;
use std::str::FromStr;

use nalgebra::Vector2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{self, payoff_gaps, replicator_velocity, ClassicalState};
use crate::engine::{self, detect_attractor, AttractorLabel, DetectorConfig, OdeState, RunMeta, Snapshot, StepParams, Trajectory};
use crate::error::{Error, Result};
use crate::game::{expected_payoffs, internal_equilibrium, Game, JointDistribution, MixedStrategy, Player};
use crate::quantum::{evolve_quantum, local_generator, HamiltonianMode, JointQuantumState, LocalQuantumState, QuantumParams, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    TradingFarming,
    PrisonersDilemma,
    HawkDove,
    Dominant,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::TradingFarming, Preset::PrisonersDilemma, Preset::HawkDove, Preset::Dominant];

    pub fn name(self) -> &'static str {
        match self {
            Preset::TradingFarming => "trading-farming",
            Preset::PrisonersDilemma => "prisoners-dilemma",
            Preset::HawkDove => "hawk-dove",
            Preset::Dominant => "dominant",
        }
    }

    /// `(a, b, c, d)` of the symmetric game `A = [[a, b], [c, d]]`.
    pub fn params(self) -> (f64, f64, f64, f64) {
        match self {
            Preset::TradingFarming => (1.0, 0.0, 0.5, 0.5),
            // b > d > c > a
            Preset::PrisonersDilemma => (0.0, 5.0, 1.0, 3.0),
            // a < c, b > d
            Preset::HawkDove => (-1.0, 2.0, 0.0, 1.0),
            // a > c, b > d
            Preset::Dominant => (2.0, 1.0, 1.0, 0.0),
        }
    }

    pub fn game(self) -> Game {
        let (a, b, c, d) = self.params();
        Game::symmetric(a, b, c, d).expect("preset entries are finite")
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

pub fn preset_game(name: &str) -> Result<Game> {
    Ok(name.parse::<Preset>()?.game())
}

fn detector_for(g: &Game, base: &DetectorConfig) -> DetectorConfig {
    DetectorConfig {
        internal: base.internal.or_else(|| internal_equilibrium(g).map(|(x, y)| [x.first(), y.first()])),
        ..*base
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SweepMode {
    Classical,
    Quantum { mode: HamiltonianMode, renormalize: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    pub gamma: f64,
    pub step: StepParams,
    pub detector: DetectorConfig,
    /// End each run as soon as the convergence window is satisfied.
    pub early_stop: bool,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams {
            gamma: 1.0,
            step: StepParams::default(),
            detector: DetectorConfig::default(),
            early_stop: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub x0: f64,
    pub y0: f64,
    pub label: AttractorLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub grid_n: usize,
    /// Row-major: `points[i * grid_n + j]` starts at `((i+½)/n, (j+½)/n)`.
    pub points: Vec<SweepPoint>,
    pub summary: BTreeMap<String, usize>,
}

impl SweepResult {
    pub fn label_at(&self, i: usize, j: usize) -> &AttractorLabel {
        &self.points[i * self.grid_n + j].label
    }
}

/// Grid coordinate of lattice index `i` on an `n`-point axis.
pub fn grid_coord(i: usize, n: usize) -> f64 {
    (i as f64 + 0.5) / n as f64
}

/// Integrates from each interior lattice point and labels where it ends.
pub fn basin_sweep(g: &Game, mode: SweepMode, grid_n: usize, params: &SweepParams) -> Result<SweepResult> {
    if grid_n < 2 {
        return Err(Error::param("grid_n", format!("must be at least 2, got {grid_n}")));
    }
    let detector = detector_for(g, &params.detector);
    let step = StepParams {
        stop_when_slower_than: params.early_stop.then_some(detector.eps_conv),
        ..params.step
    };
    let run_point = |k: usize| -> Result<SweepPoint> {
        let (x0, y0) = (grid_coord(k / grid_n, grid_n), grid_coord(k % grid_n, grid_n));
        let x = MixedStrategy::from_first(x0)?;
        let y = MixedStrategy::from_first(y0)?;
        let label = match mode {
            SweepMode::Classical => {
                let t = classical::evolve_classical(g, &x, &y, params.gamma, &step)?;
                detect_attractor(&t, &detector)?
            }
            SweepMode::Quantum { mode, renormalize } => {
                let q = JointQuantumState::embed_classical(&x, &y);
                let qp = QuantumParams {
                    gamma: params.gamma,
                    step,
                    mode,
                    renormalize,
                };
                let t = evolve_quantum(&q, g, &qp)?;
                detect_attractor(&t, &detector)?
            }
        };
        Ok(SweepPoint { x0, y0, label })
    };
    let points = (0..grid_n * grid_n)
        .into_par_iter()
        .map(|k| {
            run_point(k).map_err(|e| Error::GridPoint {
                x0: grid_coord(k / grid_n, grid_n),
                y0: grid_coord(k % grid_n, grid_n),
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut summary = BTreeMap::new();
    for p in &points {
        *summary.entry(p.label.name()).or_insert(0) += 1;
    }
    Ok(SweepResult { grid_n, points, summary })
}

/// State of a mixed match: one player's qubit and the other's mixed
/// strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchState {
    pub quantum: Vector2<C64>,
    pub classical: [f64; 2],
    pub quantum_player: Player,
}

impl MatchState {
    pub fn quantum_state(&self) -> LocalQuantumState {
        LocalQuantumState::from_raw(self.quantum)
    }

    /// `(x, y)`: the row and column players' measured strategies.
    pub fn strategies(&self) -> (MixedStrategy, MixedStrategy) {
        let q = self.quantum_state().induced_strategy();
        let c = MixedStrategy::projected(self.classical);
        match self.quantum_player {
            Player::Row => (q, c),
            Player::Column => (c, q),
        }
    }

    /// Joint amplitudes with the classical side embedded as `√p`.
    pub fn joint_amplitudes(&self) -> [C64; 4] {
        let c = self.classical.map(|v| C64::from(v.max(0.0).sqrt()));
        let q = self.quantum;
        let (r, s) = match self.quantum_player {
            Player::Row => ([q[0], q[1]], c),
            Player::Column => (c, [q[0], q[1]]),
        };
        [r[0] * s[0], r[0] * s[1], r[1] * s[0], r[1] * s[1]]
    }
}

impl OdeState for MatchState {
    fn add_scaled(&self, h: f64, k: &Self) -> Self {
        MatchState {
            quantum: self.quantum + k.quantum * C64::from(h),
            classical: self.classical.add_scaled(h, &k.classical),
            quantum_player: self.quantum_player,
        }
    }
    fn norm(&self) -> f64 {
        (self.quantum.norm_squared() + self.classical[0].powi(2) + self.classical[1].powi(2)).sqrt()
    }
    fn is_finite(&self) -> bool {
        self.quantum.iter().all(|z| z.is_finite()) && self.classical.is_finite()
    }
}

impl Snapshot for MatchState {
    fn strategy_point(&self) -> [f64; 2] {
        let (x, y) = self.strategies();
        [x.first(), y.first()]
    }
    fn coords(&self) -> Vec<f64> {
        let q = self.quantum;
        vec![q[0].re, q[0].im, q[1].re, q[1].im, self.classical[0]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchInit {
    pub quantum: LocalQuantumState,
    pub classical: MixedStrategy,
}

impl MatchInit {
    /// Real amplitudes (α = 0) for the quantum player at the angle whose
    /// measurement reproduces `quantum_first`.
    pub fn from_classical(quantum_first: f64, classical_first: f64) -> Result<MatchInit> {
        let q = MixedStrategy::from_first(quantum_first)?;
        Ok(MatchInit {
            quantum: LocalQuantumState::from_mixed(&q),
            classical: MixedStrategy::from_first(classical_first)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchParams {
    pub gamma: f64,
    pub step: StepParams,
    pub mode: HamiltonianMode,
    pub renormalize: bool,
    pub detector: DetectorConfig,
    /// Also run classical-vs-classical from the measured start.
    pub baseline: bool,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams {
            gamma: 1.0,
            step: StepParams::default(),
            mode: HamiltonianMode::HDef,
            renormalize: true,
            detector: DetectorConfig::default(),
            baseline: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    pub traj: Trajectory<ClassicalState>,
    pub acc_a: f64,
    pub acc_b: f64,
    pub label: AttractorLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub traj: Trajectory<MatchState>,
    pub acc_a: f64,
    pub acc_b: f64,
    pub label: AttractorLabel,
    pub quantum_player: Player,
    pub mode: HamiltonianMode,
    pub baseline: Option<Baseline>,
}

fn match_field(g: &Game, s: &MatchState, gamma: f64, mode: HamiltonianMode) -> MatchState {
    let qp = s.quantum_player;
    let cp = qp.other();
    let c = s.classical;
    let gen = local_generator(
        &g.own_matrix(qp),
        &s.quantum,
        c,
        C64::from(c[0].max(0.0).sqrt() + c[1].max(0.0).sqrt()),
        gamma,
        mode,
    );
    let pq = LocalQuantumState::from_raw(s.quantum).probs();
    let gaps = payoff_gaps(&g.own_matrix(cp), c, pq);
    MatchState {
        quantum: gen.velocity(&s.quantum),
        classical: [gamma * c[0] * gaps[0], gamma * c[1] * gaps[1]],
        quantum_player: qp,
    }
}

/// An unfair match: `quantum_player` evolves its qubit under its local
/// generator against the opponent's current mixed strategy, while the
/// opponent follows replicator dynamics against the qubit's measurement
/// distribution.
pub fn mixed_match(g: &Game, quantum_player: Player, init: &MatchInit, params: &MatchParams) -> Result<MatchResult> {
    QuantumParams {
        gamma: params.gamma,
        step: params.step,
        mode: params.mode,
        renormalize: params.renormalize,
    }
    .validate()?;
    let s0 = MatchState {
        quantum: *init.quantum.amps(),
        classical: init.classical.probs(),
        quantum_player,
    };
    let (gamma, mode, renormalize) = (params.gamma, params.mode, params.renormalize);
    let post = |s: &mut MatchState| {
        let mut drift = 0.0;
        if renormalize {
            let n = s.quantum.norm();
            s.quantum.unscale_mut(n);
            drift = (n - 1.0).abs();
        }
        let mut c = ClassicalState {
            x: s.classical,
            y: [0.5, 0.5],
        };
        drift = f64::max(drift, c.project());
        s.classical = c.x;
        drift
    };
    let path = engine::integrate(|_t, s: &MatchState| match_field(g, s, gamma, mode), s0, &params.step, post)?;
    let meta = RunMeta {
        model: format!("mixed-{quantum_player}-quantum"),
        gamma,
        step: params.step,
        hamiltonian: Some(mode.name().into()),
        renormalize: Some(renormalize),
    };
    let traj = Trajectory::from_path(
        path,
        meta,
        |s| *s,
        |s| {
            let (x, y) = s.strategies();
            expected_payoffs(&x, &y, g)
        },
        Some(|s: &MatchState| s.quantum.norm()),
    );
    let detector = detector_for(g, &params.detector);
    let label = detect_attractor(&traj, &detector)?;
    let (acc_a, acc_b) = accumulated_payoff(&traj)?;

    let baseline = if params.baseline {
        let measured = init.quantum.induced_strategy();
        let (x0, y0) = match quantum_player {
            Player::Row => (measured, init.classical),
            Player::Column => (init.classical, measured),
        };
        let t = classical::evolve_classical(g, &x0, &y0, gamma, &params.step)?;
        let (ba, bb) = accumulated_payoff(&t)?;
        let label = detect_attractor(&t, &detector)?;
        Some(Baseline {
            traj: t,
            acc_a: ba,
            acc_b: bb,
            label,
        })
    } else {
        None
    };

    Ok(MatchResult {
        traj,
        acc_a,
        acc_b,
        label,
        quantum_player,
        mode,
        baseline,
    })
}

/// Trapezoidal integral of both payoff channels over the sampled times.
pub fn accumulated_payoff<S>(traj: &Trajectory<S>) -> Result<(f64, f64)> {
    let n = traj.len();
    if n < 2 {
        return Err(Error::ShortTrajectory { needed: 2, got: n });
    }
    let mut acc = (0.0, 0.0);
    for k in 1..n {
        let h = traj.times[k] - traj.times[k - 1];
        let (p, q) = (traj.payoffs[k - 1], traj.payoffs[k]);
        acc.0 += 0.5 * h * (p.u_a + q.u_a);
        acc.1 += 0.5 * h * (p.u_b + q.u_b);
    }
    Ok(acc)
}

/// Result of checking that a state's measurement distribution is a fixed
/// point of classical replicator dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointReport {
    pub distribution: JointDistribution,
    pub row_marginal: MixedStrategy,
    pub col_marginal: MixedStrategy,
    pub velocity_norm: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Measures `q`, takes the marginals, and tests the classical replicator
/// velocity there against `tol`. A pass says nothing about whether `q` is
/// itself a quantum equilibrium.
pub fn nash_fixed_point_check(q: &JointQuantumState, g: &Game, tol: f64) -> Result<FixedPointReport> {
    let distribution = crate::game::induced_distribution(q)?;
    let row_marginal = distribution.marginal(Player::Row);
    let col_marginal = distribution.marginal(Player::Column);
    let (dx, dy) = replicator_velocity(g, &row_marginal, &col_marginal, 1.0);
    let velocity_norm = dx.iter().chain(dy.iter()).map(|v| v * v).sum::<f64>().sqrt();
    Ok(FixedPointReport {
        distribution,
        row_marginal,
        col_marginal,
        velocity_norm,
        tol,
        passed: velocity_norm < tol,
    })
}
