//! Property-based checks of the numerical invariants.

use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use proptest::prelude::*;

use replicator::classical::{advantage, payoff_rates, ClassicalState};
use replicator::cli::output::fmt_num;
use replicator::game::joint_payoffs;
use replicator::prelude::*;

fn entry() -> impl Strategy<Value = f64> {
    -10.0..10.0f64
}

fn matrix() -> impl Strategy<Value = [[f64; 2]; 2]> {
    [[entry(), entry()], [entry(), entry()]]
}

fn game() -> impl Strategy<Value = Game> {
    (matrix(), matrix()).prop_map(|(a, b)| Game::new(a, b).unwrap())
}

fn symmetric_game() -> impl Strategy<Value = Game> {
    (entry(), entry(), entry(), entry()).prop_map(|(a, b, c, d)| Game::symmetric(a, b, c, d).unwrap())
}

fn strategy() -> impl Strategy<Value = MixedStrategy> {
    (0.0..=1.0f64).prop_map(|p| MixedStrategy::from_first(p).unwrap())
}

fn lo_hi(m: &[[f64; 2]; 2]) -> (f64, f64) {
    let v = m.iter().flatten();
    (
        v.clone().copied().fold(f64::INFINITY, f64::min),
        v.copied().fold(f64::NEG_INFINITY, f64::max),
    )
}

proptest! {
    #[test]
    fn strategies_stay_on_simplex(p in 0.0..=1.0f64, q in 0.0..=1.0f64) {
        let x = MixedStrategy::from_first(p).unwrap();
        let y = MixedStrategy::from_first(q).unwrap();
        let j = JointDistribution::product(&x, &y);
        prop_assert!((x.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!((j.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(j.probs().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn payoffs_within_matrix_range(g in game(), x in strategy(), y in strategy()) {
        let u = expected_payoffs(&x, &y, &g);
        let (lo, hi) = lo_hi(g.row_payoffs());
        prop_assert!(u.u_a >= lo - 1e-12 && u.u_a <= hi + 1e-12);
        let (lo, hi) = lo_hi(g.col_payoffs());
        prop_assert!(u.u_b >= lo - 1e-12 && u.u_b <= hi + 1e-12);
    }

    #[test]
    fn payoffs_are_bilinear(g in game(), x1 in strategy(), x2 in strategy(), y in strategy(), l in 0.0..=1.0f64) {
        let mix = MixedStrategy::from_first(l * x1.first() + (1.0 - l) * x2.first()).unwrap();
        let lhs = expected_payoffs(&mix, &y, &g).u_a;
        let rhs = l * expected_payoffs(&x1, &y, &g).u_a + (1.0 - l) * expected_payoffs(&x2, &y, &g).u_a;
        prop_assert!((lhs - rhs).abs() <= 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn velocity_factorizes_through_advantage(g in game(), x in strategy(), y in strategy(), gamma in 0.0..5.0f64) {
        let (vx, vy) = replicator_velocity(&g, &x, &y, gamma);
        let [x0, x1] = x.probs();
        let [y0, y1] = y.probs();
        prop_assert!((vx[0] - gamma * x0 * x1 * advantage(&g, Player::Row, y0)).abs() <= 1e-12);
        prop_assert!((vy[0] - gamma * y0 * y1 * advantage(&g, Player::Column, x0)).abs() <= 1e-12);
        // Velocities stay tangent to the simplex.
        prop_assert!((vx[0] + vx[1]).abs() <= 1e-12 && (vy[0] + vy[1]).abs() <= 1e-12);
    }

    #[test]
    fn symmetric_games_exchange_players(g in symmetric_game(), x in strategy(), y in strategy()) {
        let (vx, _) = replicator_velocity(&g, &x, &y, 1.0);
        let (_, vy) = replicator_velocity(&g, &y, &x, 1.0);
        prop_assert_eq!(vx, vy);
    }

    #[test]
    fn classification_is_total(g in symmetric_game()) {
        prop_assert_ne!(classify_symmetric(&g), GameClass::Asymmetric);
        let has_ie = matches!(classify_symmetric(&g), GameClass::TypeI | GameClass::TypeII);
        prop_assert_eq!(has_ie, internal_equilibrium(&g).is_some());
    }

    #[test]
    fn internal_equilibrium_is_indifferent(g in game()) {
        if let Some((x, y)) = internal_equilibrium(&g) {
            prop_assert!(x.is_interior() && y.is_interior());
            let (vx, vy) = replicator_velocity(&g, &x, &y, 1.0);
            prop_assert!(vx.iter().chain(&vy).all(|v| v.abs() <= 1e-12));
        }
    }

    #[test]
    fn frozen_payoff_rate_is_a_variance(g in game(), x in strategy(), y in strategy(), gamma in 0.0..5.0f64) {
        let [ra, rb] = payoff_rates(&g, &ClassicalState::new(&x, &y), gamma, true);
        prop_assert!(ra >= 0.0 && rb >= 0.0);
    }

    #[test]
    fn embed_then_measure_roundtrips(x in strategy(), y in strategy()) {
        let p = induced_distribution(&JointQuantumState::embed_classical(&x, &y)).unwrap();
        let q = JointDistribution::product(&x, &y);
        for (a, b) in p.probs().iter().zip(q.probs()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn quantum_payoff_is_born_rule_payoff(g in game(), re in prop::array::uniform4(-1.0..1.0f64), im in prop::array::uniform4(-1.0..1.0f64)) {
        let v: Vec<Complex64> = re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect();
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(n > 1e-3);
        let q = JointQuantumState::new([v[0] / n, v[1] / n, v[2] / n, v[3] / n]).unwrap();
        let u = quantum_payoff(&q, &g).unwrap();
        let w = joint_payoffs(&induced_distribution(&q).unwrap(), &g);
        prop_assert!((u.u_a - w.u_a).abs() <= 1e-15 && (u.u_b - w.u_b).abs() <= 1e-15);
    }

    #[test]
    fn h_def_generator_has_zero_diagonal(g in game(), t1 in 0.0..1.6f64, a1 in -3.0..3.0f64, t2 in 0.0..1.6f64, a2 in -3.0..3.0f64) {
        let own = LocalQuantumState::from_angles(t1, a1);
        let opp = LocalQuantumState::from_angles(t2, a2);
        let h = hamiltonian_local(&g, Player::Row, &own, Opponent::Quantum(&opp), 1.0, HamiltonianMode::HDef).unwrap();
        let m = h.matrix().unwrap();
        prop_assert_eq!(m[(0, 0)], Complex64::new(0.0, 0.0));
        prop_assert_eq!(m[(1, 1)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn numbers_roundtrip_through_text(bits in any::<u64>()) {
        let v = f64::from_bits(bits);
        prop_assume!(v.is_finite());
        prop_assert_eq!(fmt_num(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
    }
}

#[test]
fn hermitized_generator_is_hermitian() {
    let g = preset_game("prisoners-dilemma").unwrap();
    let own = LocalQuantumState::from_angles(0.3, 0.4);
    let opp = LocalQuantumState::from_angles(1.0, -0.2);
    let h = hamiltonian_local(&g, Player::Column, &own, Opponent::Quantum(&opp), 2.0, HamiltonianMode::Hermitized).unwrap();
    let m = h.matrix().unwrap();
    assert_abs_diff_eq!((m - m.adjoint()).norm(), 0.0, epsilon = 1e-15);
}
