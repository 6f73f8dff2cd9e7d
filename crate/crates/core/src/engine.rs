//! Fixed-step time integration and attractor labelling.
//!
//! Everything here is generic over [`OdeState`]; the classical, quantum and
//! mixed models plug in their own state types and vector fields.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{PayoffPair, Profile};

/// Consecutive samples that must be slower than `eps_conv` for a run to
/// count as converged.
pub const CONVERGENCE_WINDOW: usize = 100;

/// Distance to a vertex or to the internal equilibrium under which a
/// converged terminal state takes that name.
pub const TARGET_RADIUS: f64 = 1e-3;

/// Post-step corrections larger than this mark the step as flagged.
pub const DRIFT_FLAG: f64 = 1e-9;

/// A point of a vector space the integrator can step through.
pub trait OdeState: Clone + fmt::Debug {
    /// `self + h * k`.
    fn add_scaled(&self, h: f64, k: &Self) -> Self;

    /// Euclidean norm.
    fn norm(&self) -> f64;

    fn is_finite(&self) -> bool;
}

impl OdeState for f64 {
    fn add_scaled(&self, h: f64, k: &Self) -> Self {
        self + h * k
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl<const N: usize> OdeState for [f64; N] {
    fn add_scaled(&self, h: f64, k: &Self) -> Self {
        std::array::from_fn(|i| self[i] + h * k[i])
    }
    fn norm(&self) -> f64 {
        self.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

impl<const N: usize> OdeState for [Complex64; N] {
    fn add_scaled(&self, h: f64, k: &Self) -> Self {
        std::array::from_fn(|i| self[i] + k[i] * h)
    }
    fn norm(&self) -> f64 {
        self.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

/// States that can be placed in the strategy square and compared for
/// recurrence.
pub trait Snapshot {
    /// `(x_T, y_T)`: each player's probability of the first strategy.
    fn strategy_point(&self) -> [f64; 2];

    /// Real coordinates of the full dynamical state, used for recurrence.
    fn coords(&self) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepParams {
    pub dt: f64,
    pub t_max: f64,
    /// Record every `stride`-th step (the final step is always recorded).
    pub stride: usize,
    /// Stop once the last [`CONVERGENCE_WINDOW`] samples are all slower
    /// than this speed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_when_slower_than: Option<f64>,
}

impl Default for StepParams {
    fn default() -> Self {
        StepParams {
            dt: 1e-3,
            t_max: 200.0,
            stride: 10,
            stop_when_slower_than: None,
        }
    }
}

impl StepParams {
    pub fn new(dt: f64, t_max: f64, stride: usize) -> StepParams {
        StepParams {
            dt,
            t_max,
            stride,
            stop_when_slower_than: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::param("t_max", format!("must be positive, got {}", self.t_max)));
        }
        if self.stride == 0 {
            return Err(Error::param("stride", "must be at least 1"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.dt).round().max(1.0) as usize
    }
}

/// Raw output of [`integrate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Path<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    /// Velocity norm of the field at each recorded state.
    pub speeds: Vec<f64>,
    /// Largest correction applied by the post-step hook.
    pub max_drift: f64,
    /// Steps whose correction exceeded [`DRIFT_FLAG`].
    pub flagged_steps: usize,
}

fn non_finite<S: fmt::Debug>(t: f64, s: &S) -> Error {
    Error::NonFinite { t, state: format!("{s:?}") }
}

fn eval<S, F>(field: &F, t: f64, s: &S) -> Result<S>
where
    S: OdeState,
    F: Fn(f64, &S) -> S,
{
    let k = field(t, s);
    if k.is_finite() {
        Ok(k)
    } else {
        Err(non_finite(t, s))
    }
}

/// One classical Runge–Kutta step of size `h`.
pub fn rk4_step<S, F>(field: &F, t: f64, s: &S, h: f64) -> Result<S>
where
    S: OdeState,
    F: Fn(f64, &S) -> S,
{
    let k1 = eval(field, t, s)?;
    let k2 = eval(field, t + 0.5 * h, &s.add_scaled(0.5 * h, &k1))?;
    let k3 = eval(field, t + 0.5 * h, &s.add_scaled(0.5 * h, &k2))?;
    let k4 = eval(field, t + h, &s.add_scaled(h, &k3))?;
    let incr = k1.add_scaled(2.0, &k2).add_scaled(2.0, &k3).add_scaled(1.0, &k4);
    Ok(s.add_scaled(h / 6.0, &incr))
}

/// Euclidean norm of the field at `state`.
pub fn velocity_norm<S, F>(field: F, state: &S) -> Result<f64>
where
    S: OdeState,
    F: Fn(f64, &S) -> S,
{
    Ok(eval(&field, 0.0, state)?.norm())
}

/// Integrates `ds/dt = field(t, s)` with fixed-step RK4.
///
/// `post_step` runs after every step (clipping, renormalization) and returns
/// the size of the correction it made.
pub fn integrate<S, F, P>(field: F, s0: S, params: &StepParams, mut post_step: P) -> Result<Path<S>>
where
    S: OdeState,
    F: Fn(f64, &S) -> S,
    P: FnMut(&mut S) -> f64,
{
    params.validate()?;
    let n = params.steps();
    let h = params.dt;
    let capacity = n / params.stride + 2;
    let mut path = Path {
        times: Vec::with_capacity(capacity),
        states: Vec::with_capacity(capacity),
        speeds: Vec::with_capacity(capacity),
        max_drift: 0.0,
        flagged_steps: 0,
    };
    let mut slow_run = 0usize;
    let mut record = |path: &mut Path<S>, t: f64, s: &S| -> Result<bool> {
        let speed = eval(&field, t, s)?.norm();
        path.times.push(t);
        path.states.push(s.clone());
        path.speeds.push(speed);
        Ok(match params.stop_when_slower_than {
            Some(eps) => {
                slow_run = if speed < eps { slow_run + 1 } else { 0 };
                slow_run >= CONVERGENCE_WINDOW
            }
            None => false,
        })
    };

    let mut s = s0;
    if !s.is_finite() {
        return Err(non_finite(0.0, &s));
    }
    record(&mut path, 0.0, &s)?;
    for step in 1..=n {
        let t_prev = (step - 1) as f64 * h;
        s = rk4_step(&field, t_prev, &s, h)?;
        let drift = post_step(&mut s);
        if drift > DRIFT_FLAG {
            path.flagged_steps += 1;
        }
        path.max_drift = path.max_drift.max(drift);
        if !s.is_finite() {
            return Err(non_finite(step as f64 * h, &s));
        }
        if (step % params.stride == 0 || step == n) && record(&mut path, step as f64 * h, &s)? {
            break;
        }
    }
    Ok(path)
}

/// Parameters of a run, kept with its trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub model: String,
    pub gamma: f64,
    pub step: StepParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renormalize: Option<bool>,
}

/// Time-stamped states of one run with the payoffs realized along it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub payoffs: Vec<PayoffPair>,
    /// State norms after post-processing (quantum runs only).
    pub norms: Option<Vec<f64>>,
    pub speeds: Vec<f64>,
    pub max_drift: f64,
    pub flagged_steps: usize,
    pub meta: RunMeta,
}

impl<S> Trajectory<S> {
    pub fn from_path<I>(
        path: Path<I>,
        meta: RunMeta,
        mut snapshot: impl FnMut(&I) -> S,
        payoff: impl Fn(&S) -> PayoffPair,
        norm: Option<fn(&I) -> f64>,
    ) -> Trajectory<S> {
        let norms = norm.map(|f| path.states.iter().map(f).collect());
        let states: Vec<S> = path.states.iter().map(&mut snapshot).collect();
        let payoffs = states.iter().map(payoff).collect();
        Trajectory {
            times: path.times,
            states,
            payoffs,
            norms,
            speeds: path.speeds,
            max_drift: path.max_drift,
            flagged_steps: path.flagged_steps,
            meta,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&S> {
        self.states.last()
    }
}

/// Where a converged run ended up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Target {
    Vertex(Profile),
    Internal,
    Point([f64; 2]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AttractorKind {
    Converged(Target),
    Cycle,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttractorLabel {
    pub kind: AttractorKind,
    /// Final point in the strategy square.
    pub terminal: [f64; 2],
    /// Final velocity norm.
    pub residual: f64,
}

impl AttractorLabel {
    pub fn is_converged_to(&self, profile: Profile) -> bool {
        self.kind == AttractorKind::Converged(Target::Vertex(profile))
    }

    /// Short text form: a profile name, `IE`, `point`, `cycle` or `timeout`.
    pub fn name(&self) -> String {
        match self.kind {
            AttractorKind::Converged(Target::Vertex(p)) => p.to_string(),
            AttractorKind::Converged(Target::Internal) => "IE".into(),
            AttractorKind::Converged(Target::Point(_)) => "point".into(),
            AttractorKind::Cycle => "cycle".into(),
            AttractorKind::Timeout => "timeout".into(),
        }
    }
}

impl fmt::Display for AttractorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub eps_conv: f64,
    pub eps_cycle: f64,
    /// `(x*, y*)` when the game has an internal equilibrium.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub internal: Option<[f64; 2]>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            eps_conv: 1e-6,
            eps_cycle: 1e-3,
            internal: None,
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

/// Distance from `p` to the segment `[a, b]`.
fn dist_to_segment(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut ab2 = 0.0;
    let mut ap_ab = 0.0;
    for i in 0..p.len() {
        let ab = b[i] - a[i];
        ab2 += ab * ab;
        ap_ab += (p[i] - a[i]) * ab;
    }
    let t = if ab2 > 0.0 { (ap_ab / ab2).clamp(0.0, 1.0) } else { 0.0 };
    p.iter()
        .zip(a.iter().zip(b))
        .map(|(&pi, (&ai, &bi))| {
            let d = pi - (ai + t * (bi - ai));
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Earliest-anchored recurrence: some state is revisited (to within `eps`)
/// after the path has moved more than `10 * eps` away from it.
fn find_recurrence(coords: &[Vec<f64>], eps: f64) -> Option<(usize, usize)> {
    let n = coords.len();
    let anchor_step = (n / 1000).max(1);
    for i in (0..n).step_by(anchor_step) {
        let anchor = &coords[i];
        let mut left = false;
        for k in (i + 1)..n {
            if !left {
                left = dist(anchor, &coords[k]) > 10.0 * eps;
                continue;
            }
            if dist_to_segment(anchor, &coords[k - 1], &coords[k]) < eps {
                return Some((i, k));
            }
        }
    }
    None
}

/// Labels the long-run behavior of a trajectory.
pub fn detect_attractor<S: Snapshot>(traj: &Trajectory<S>, cfg: &DetectorConfig) -> Result<AttractorLabel> {
    let n = traj.len();
    if n < 2 {
        return Err(Error::ShortTrajectory { needed: 2, got: n });
    }
    let terminal = traj.states[n - 1].strategy_point();
    let residual = traj.speeds[n - 1];
    let window = CONVERGENCE_WINDOW.min(n);
    let converged = traj.speeds[n - window..].iter().all(|&v| v < cfg.eps_conv);
    let kind = if converged {
        let vertex = Profile::ALL.into_iter().find(|p| dist(&p.vertex(), &terminal) < TARGET_RADIUS);
        let target = match (vertex, cfg.internal) {
            (Some(p), _) => Target::Vertex(p),
            (None, Some(ie)) if dist(&ie, &terminal) < TARGET_RADIUS => Target::Internal,
            _ => Target::Point(terminal),
        };
        AttractorKind::Converged(target)
    } else {
        let coords: Vec<Vec<f64>> = traj.states.iter().map(Snapshot::coords).collect();
        if find_recurrence(&coords, cfg.eps_cycle).is_some() {
            AttractorKind::Cycle
        } else {
            AttractorKind::Timeout
        }
    };
    Ok(AttractorLabel { kind, terminal, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, Copy)]
    struct Pt([f64; 2]);

    impl Snapshot for Pt {
        fn strategy_point(&self) -> [f64; 2] {
            self.0
        }
        fn coords(&self) -> Vec<f64> {
            self.0.to_vec()
        }
    }

    fn meta() -> RunMeta {
        RunMeta {
            model: "test".into(),
            gamma: 1.0,
            step: StepParams::default(),
            hamiltonian: None,
            renormalize: None,
        }
    }

    fn traj(points: Vec<[f64; 2]>, speeds: Vec<f64>) -> Trajectory<Pt> {
        let n = points.len();
        Trajectory {
            times: (0..n).map(|i| i as f64).collect(),
            states: points.into_iter().map(Pt).collect(),
            payoffs: vec![PayoffPair::default(); n],
            norms: None,
            speeds,
            max_drift: 0.0,
            flagged_steps: 0,
            meta: meta(),
        }
    }

    #[test]
    fn zero_field_is_constant() {
        let p = integrate(|_, _: &[f64; 2]| [0.0, 0.0], [0.3, 0.7], &StepParams::new(0.1, 1.0, 1), |_| 0.0).unwrap();
        assert_eq!(p.states.len(), 11);
        assert!(p.states.iter().all(|s| *s == [0.3, 0.7]));
        assert!(p.speeds.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn exponential_decay() {
        let p = integrate(|_, s: &f64| -s, 1.0, &StepParams::new(1e-3, 1.0, 10), |_| 0.0).unwrap();
        let last = *p.states.last().unwrap();
        assert!((last - 0.367_879_441_171_442_3).abs() < 1e-6);
        assert_eq!(*p.times.last().unwrap(), 1.0);
    }

    #[test]
    fn samples_every_stride_plus_final() {
        let p = integrate(|_, _: &f64| 1.0, 0.0, &StepParams::new(0.1, 1.05, 4), |_| 0.0).unwrap();
        // 11 steps: samples at 0, 4, 8 and the final step 11
        assert_eq!(p.times.len(), 4);
        assert!(p.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn non_finite_derivative_reports_time_and_state() {
        let err = integrate(
            |t, s: &f64| if t > 0.45 { f64::NAN } else { *s },
            1.0,
            &StepParams::new(0.1, 1.0, 1),
            |_| 0.0,
        )
        .unwrap_err();
        match err {
            Error::NonFinite { t, state } => {
                assert!(t > 0.4 && t < 0.6);
                assert!(!state.is_empty());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_params() {
        let f = |_: f64, s: &f64| *s;
        assert!(integrate(f, 1.0, &StepParams::new(0.0, 1.0, 1), |_| 0.0).is_err());
        assert!(integrate(f, 1.0, &StepParams::new(0.1, -1.0, 1), |_| 0.0).is_err());
        assert!(integrate(f, 1.0, &StepParams::new(0.1, 1.0, 0), |_| 0.0).is_err());
    }

    #[test]
    fn drift_flagging() {
        let p = integrate(
            |_, _: &f64| 0.0,
            0.0,
            &StepParams::new(0.1, 1.0, 1),
            |s| {
                *s += 1e-8;
                1e-8
            },
        )
        .unwrap();
        assert_eq!(p.flagged_steps, 10);
        assert_eq!(p.max_drift, 1e-8);
    }

    #[test]
    fn early_stop_after_window() {
        let params = StepParams {
            stop_when_slower_than: Some(1e-6),
            ..StepParams::new(0.1, 1000.0, 1)
        };
        let p = integrate(|_, _: &f64| 0.0, 1.0, &params, |_| 0.0).unwrap();
        assert_eq!(p.times.len(), CONVERGENCE_WINDOW);
    }

    #[test]
    fn constant_at_vertex_is_converged() {
        let t = traj(vec![[1.0, 1.0]; 3], vec![0.0; 3]);
        let label = detect_attractor(&t, &DetectorConfig::default()).unwrap();
        assert!(label.is_converged_to(Profile::TT));
        assert_eq!(label.name(), "TT");
    }

    #[test]
    fn converged_to_internal_or_point() {
        let cfg = DetectorConfig {
            internal: Some([0.5, 0.5]),
            ..DetectorConfig::default()
        };
        let t = traj(vec![[0.5, 0.5]; 5], vec![0.0; 5]);
        assert_eq!(detect_attractor(&t, &cfg).unwrap().kind, AttractorKind::Converged(Target::Internal));
        let t = traj(vec![[0.3, 0.5]; 5], vec![0.0; 5]);
        assert_eq!(detect_attractor(&t, &cfg).unwrap().name(), "point");
    }

    #[test]
    fn circle_is_cycle() {
        let pts: Vec<[f64; 2]> = (0..2000)
            .map(|k| {
                let a = k as f64 * 0.013;
                [0.5 + 0.3 * a.cos(), 0.5 + 0.3 * a.sin()]
            })
            .collect();
        let t = traj(pts, vec![0.1; 2000]);
        assert_eq!(detect_attractor(&t, &DetectorConfig::default()).unwrap().kind, AttractorKind::Cycle);
    }

    #[test]
    fn slow_transient_is_timeout() {
        let pts: Vec<[f64; 2]> = (0..50).map(|k| [0.1 + 0.01 * k as f64, 0.5]).collect();
        let t = traj(pts, vec![0.01; 50]);
        assert_eq!(detect_attractor(&t, &DetectorConfig::default()).unwrap().kind, AttractorKind::Timeout);
    }

    #[test]
    fn short_trajectory_rejected() {
        let t = traj(vec![[1.0, 1.0]], vec![0.0]);
        assert!(matches!(
            detect_attractor(&t, &DetectorConfig::default()),
            Err(Error::ShortTrajectory { .. })
        ));
    }

    #[test]
    fn segment_distance() {
        assert_eq!(dist_to_segment(&[0.5, 1.0], &[0.0, 0.0], &[1.0, 0.0]), 1.0);
        assert_eq!(dist_to_segment(&[2.0, 0.0], &[0.0, 0.0], &[1.0, 0.0]), 1.0);
    }
}
