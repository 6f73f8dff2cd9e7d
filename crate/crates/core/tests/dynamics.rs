//! Long-run behaviour: basins, product preservation, reproducibility and
//! regression anchors for the quantum-vs-classical comparisons.

use approx::assert_relative_eq;

use replicator::experiments::{grid_coord, SweepParams};
use replicator::prelude::*;
use replicator::quantum::product_deviation;

#[test]
fn trading_farming_basins_split_on_the_anti_diagonal() {
    let g = preset_game("trading-farming").unwrap();
    let n = 101;
    let r = basin_sweep(&g, SweepMode::Classical, n, &SweepParams::default()).unwrap();
    assert_eq!(r.points.len(), n * n);
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (grid_coord(i, n), grid_coord(j, n));
            let label = r.label_at(i, j);
            // x + y = 1 is the stable manifold of the saddle at (1/2, 1/2).
            if i + j == n - 1 {
                assert_eq!(label.kind, AttractorKind::Converged(Target::Internal), "({x}, {y})");
            } else if x + y > 1.0 {
                assert!(label.is_converged_to(Profile::TT), "({x}, {y}) -> {label}");
            } else {
                assert!(label.is_converged_to(Profile::FF), "({x}, {y}) -> {label}");
            }
        }
    }
}

#[test]
fn sweeps_are_deterministic() {
    let g = preset_game("hawk-dove").unwrap();
    let mode = SweepMode::Quantum {
        mode: HamiltonianMode::Tangent,
        renormalize: true,
    };
    let p = SweepParams {
        step: StepParams::new(1e-3, 20.0, 10),
        ..SweepParams::default()
    };
    let a = basin_sweep(&g, mode, 7, &p).unwrap();
    let b = basin_sweep(&g, mode, 7, &p).unwrap();
    assert_eq!(a, b);
}

#[test]
fn product_form_survives_evolution() {
    let g = preset_game("prisoners-dilemma").unwrap();
    let q = JointQuantumState::product(&LocalQuantumState::from_angles(0.3, 0.5), &LocalQuantumState::from_angles(1.2, -1.0));
    for mode in HamiltonianMode::ALL {
        for renormalize in [true, false] {
            let params = QuantumParams {
                step: StepParams::new(1e-3, 10.0, 10),
                mode,
                renormalize,
                gamma: 1.0,
            };
            let t = evolve_quantum(&q, &g, &params).unwrap();
            assert!(
                product_deviation(&t) < 1e-8,
                "{mode} renormalize={renormalize}: {}",
                product_deviation(&t)
            );
        }
    }
}

#[test]
fn prisoners_dilemma_keeps_oscillating() {
    let g = preset_game("prisoners-dilemma").unwrap();
    let q = JointQuantumState::product(&LocalQuantumState::from_angles(0.2, 0.0), &LocalQuantumState::from_angles(0.2, 0.0));
    let t = evolve_quantum(&q, &g, &QuantumParams::default()).unwrap();
    let cfg = DetectorConfig {
        internal: Some([2.0 / 3.0, 2.0 / 3.0]),
        ..DetectorConfig::default()
    };
    let label = detect_attractor(&t, &cfg).unwrap();
    assert_eq!(label.kind, AttractorKind::Cycle);
    // The amplitudes keep moving at a rate bounded away from rest.
    let slowest = t.speeds.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(slowest > 1e-3, "{slowest}");
}

#[test]
fn pure_start_keeps_evolving() {
    let g = preset_game("prisoners-dilemma").unwrap();
    let q = JointQuantumState::product(&LocalQuantumState::basis(0), &LocalQuantumState::from_angles(0.7, 0.0));
    let params = QuantumParams {
        step: StepParams::new(1e-3, 5.0, 10),
        mode: HamiltonianMode::Tangent,
        ..QuantumParams::default()
    };
    let t = evolve_quantum(&q, &g, &params).unwrap();
    let first = t.states[0].amps();
    let last = t.last().unwrap().amps();
    assert!((first - last).norm() > 1e-3);
}

/// Anchors from a verified run: Trading-Farming, row player quantum from
/// the measured start (0.3, 0.6), γ = 1, dt = 1e-3, t_max = 200, default
/// tolerances.
#[test]
fn trading_farming_match_anchors() {
    let g = preset_game("trading-farming").unwrap();
    let init = MatchInit::from_classical(0.3, 0.6).unwrap();
    let run = |mode| {
        mixed_match(
            &g,
            Player::Row,
            &init,
            &MatchParams {
                mode,
                ..MatchParams::default()
            },
        )
        .unwrap()
    };
    let t = run(HamiltonianMode::Tangent);
    let base = t.baseline.as_ref().unwrap();
    assert_relative_eq!(t.acc_a, 99.87391025387304, max_relative = 1e-9);
    assert_relative_eq!(base.acc_a, 99.64332515856152, max_relative = 1e-9);
    assert!(base.label.is_converged_to(Profile::FF));
    assert!(t.acc_a >= base.acc_a);

    // h-def and hermitized trail the baseline from this start.
    assert!(run(HamiltonianMode::HDef).acc_a < base.acc_a);
    assert!(run(HamiltonianMode::Hermitized).acc_a < base.acc_a);
}

#[test]
fn accumulated_payoff_is_the_trapezoid_rule() {
    let g = preset_game("hawk-dove").unwrap();
    let x = MixedStrategy::from_first(0.3).unwrap();
    let y = MixedStrategy::from_first(0.9).unwrap();
    let t = evolve_classical(&g, &x, &y, 1.0, &StepParams::new(1e-3, 5.0, 10)).unwrap();
    let (a, b) = accumulated_payoff(&t).unwrap();
    let mut oa = 0.0;
    let mut ob = 0.0;
    for k in 1..t.len() {
        let h = t.times[k] - t.times[k - 1];
        oa += 0.5 * h * (t.payoffs[k].u_a + t.payoffs[k - 1].u_a);
        ob += 0.5 * h * (t.payoffs[k].u_b + t.payoffs[k - 1].u_b);
    }
    assert!((a - oa).abs() <= 1e-9 && (b - ob).abs() <= 1e-9);
}
