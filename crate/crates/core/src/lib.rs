//! Continuous-time evolutionary dynamics for 2-player 2-strategy games.
//!
//! Two families of dynamics share one set of games and analysis tools:
//!
//! * classical replicator dynamics on mixed strategies ([`classical`]),
//! * quantum replicator dynamics, where each player's strategy is a qubit
//!   state driven by a payoff-dependent Hamiltonian ([`quantum`]).
//!
//! [`game`] holds the static analysis (payoffs, pure and internal
//! equilibria, the symmetric-game taxonomy), [`engine`] the fixed-step
//! integrator and attractor detection, and [`experiments`] the
//! basin sweeps and quantum-vs-classical matches built on top of them.
//!
//! ```
//! use replicator::prelude::*;
//!
//! let g = preset_game("trading-farming").unwrap();
//! let (x, y) = internal_equilibrium(&g).unwrap();
//! assert_eq!((x.first(), y.first()), (0.5, 0.5));
//! ```

pub mod classical;
pub mod cli;
pub mod engine;
mod error;
pub mod experiments;
pub mod game;
pub mod quantum;
pub mod verify;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::classical::{evolve_classical, quadrant_signature, replicator_velocity, velocity_operator, ClassicalState, Sign, SymmetricField};
    pub use crate::engine::{detect_attractor, AttractorKind, AttractorLabel, DetectorConfig, StepParams, Target, Trajectory};
    pub use crate::experiments::{
        accumulated_payoff, basin_sweep, mixed_match, nash_fixed_point_check, preset_game, MatchInit, MatchParams, SweepMode,
    };
    pub use crate::game::{
        classify_symmetric, expected_payoffs, induced_distribution, internal_equilibrium, pure_equilibria, EquilibriumReport, Game, GameClass,
        JointDistribution, MixedStrategy, PayoffPair, Player, Profile,
    };
    pub use crate::quantum::{
        evolve_quantum, hamiltonian_local, quantum_payoff, HamiltonianMode, JointQuantumState, LocalQuantumState, Opponent, QuantumParams,
    };
    pub use crate::{Error, Result};
}
