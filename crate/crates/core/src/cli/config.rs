//! Run configuration: TOML files whose keys mirror the command-line flags.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::engine::{DetectorConfig, StepParams};
use crate::error::{Error, Result};
use crate::experiments::preset_game;
use crate::game::{Game, Matrix, MixedStrategy, Player};
use crate::quantum::{HamiltonianMode, LocalQuantumState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GameSpec {
    Preset(String),
    Explicit { a: Matrix, b: Matrix },
}

impl GameSpec {
    pub fn build(&self) -> Result<Game> {
        match self {
            GameSpec::Preset(name) => preset_game(name),
            GameSpec::Explicit { a, b } => Game::new(*a, *b),
        }
    }

    /// Short name used in default output file names.
    pub fn slug(&self) -> String {
        match self {
            GameSpec::Preset(name) => name.clone(),
            GameSpec::Explicit { .. } => "custom".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Classical,
    Quantum,
    Mixed,
}

impl RunMode {
    pub fn name(self) -> &'static str {
        match self {
            RunMode::Classical => "classical",
            RunMode::Quantum => "quantum",
            RunMode::Mixed => "mixed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitConfig {
    /// Row player's initial probability of the first strategy.
    pub x0: f64,
    /// Column player's initial probability of the first strategy.
    pub y0: f64,
    /// Row player's quantum angle; derived from `x0` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi0: Option<f64>,
    #[serde(default)]
    pub alpha0: f64,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig {
            x0: 0.6,
            y0: 0.6,
            theta0: None,
            phi0: None,
            alpha0: 0.0,
        }
    }
}

impl InitConfig {
    pub fn row_strategy(&self) -> Result<MixedStrategy> {
        MixedStrategy::from_first(self.x0)
    }

    pub fn col_strategy(&self) -> Result<MixedStrategy> {
        MixedStrategy::from_first(self.y0)
    }

    fn local(angle: Option<f64>, first: f64, alpha: f64) -> LocalQuantumState {
        let theta = angle.unwrap_or_else(|| first.sqrt().acos());
        LocalQuantumState::from_angles(theta, alpha)
    }

    pub fn row_state(&self) -> LocalQuantumState {
        Self::local(self.theta0, self.x0, self.alpha0)
    }

    pub fn col_state(&self) -> LocalQuantumState {
        Self::local(self.phi0, self.y0, self.alpha0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig {
    pub gamma: f64,
    pub dt: f64,
    pub t_max: f64,
    pub stride: usize,
    pub hamiltonian: HamiltonianMode,
    pub renormalize: bool,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        let step = StepParams::default();
        DynamicsConfig {
            gamma: 1.0,
            dt: step.dt,
            t_max: step.t_max,
            stride: step.stride,
            hamiltonian: HamiltonianMode::HDef,
            renormalize: true,
        }
    }
}

impl DynamicsConfig {
    pub fn step(&self) -> StepParams {
        StepParams::new(self.dt, self.t_max, self.stride)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub eps_conv: f64,
    pub eps_cycle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let d = DetectorConfig::default();
        Tolerances {
            eps_conv: d.eps_conv,
            eps_cycle: d.eps_cycle,
        }
    }
}

impl Tolerances {
    pub fn detector(&self) -> DetectorConfig {
        DetectorConfig {
            eps_conv: self.eps_conv,
            eps_cycle: self.eps_cycle,
            internal: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default = "default_format")]
    pub format: String,
}

fn default_format() -> String {
    "csv".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            path: None,
            format: default_format(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub game: GameSpec,
    pub mode: RunMode,
    #[serde(default = "default_grid")]
    pub grid_n: usize,
    #[serde(default = "default_quantum_player")]
    pub quantum_player: Player,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_grid() -> usize {
    21
}

fn default_quantum_player() -> Player {
    Player::Row
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            game: GameSpec::Preset("trading-farming".into()),
            mode: RunMode::Classical,
            grid_n: default_grid(),
            quantum_player: default_quantum_player(),
            init: InitConfig::default(),
            dynamics: DynamicsConfig::default(),
            tolerances: Tolerances::default(),
            output: OutputConfig::default(),
        }
    }
}

fn unit(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::param(name, format!("probability {v} outside [0, 1]")))
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> std::result::Result<RunConfig, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.game.build()?;
        unit("x0", self.init.x0)?;
        unit("y0", self.init.y0)?;
        for (name, v) in [("theta0", self.init.theta0), ("phi0", self.init.phi0)] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(Error::param(name, "must be finite"));
                }
            }
        }
        if !self.init.alpha0.is_finite() {
            return Err(Error::param("alpha0", "must be finite"));
        }
        positive("gamma", self.dynamics.gamma)?;
        positive("dt", self.dynamics.dt)?;
        positive("t_max", self.dynamics.t_max)?;
        if self.dynamics.stride == 0 {
            return Err(Error::param("stride", "must be at least 1"));
        }
        positive("eps_conv", self.tolerances.eps_conv)?;
        positive("eps_cycle", self.tolerances.eps_cycle)?;
        if self.grid_n < 2 {
            return Err(Error::param("grid_n", format!("must be at least 2, got {}", self.grid_n)));
        }
        if self.output.format != "csv" {
            return Err(Error::param("format", format!("unsupported output format `{}`", self.output.format)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_roundtrip() {
        let mut c = RunConfig::default();
        c.init.theta0 = Some(0.2);
        c.dynamics.dt = 0.1 + 0.2;
        c.output.path = Some("out/run.csv".into());
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);

        c.game = GameSpec::Explicit {
            a: [[1.0, -2.5], [1e-300, 3.0]],
            b: [[0.0, 1.0], [2.0, 3.0]],
        };
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn minimal_file_uses_defaults() {
        let c = RunConfig::from_toml("game = \"hawk-dove\"\nmode = \"quantum\"\n").unwrap();
        assert_eq!(c.mode, RunMode::Quantum);
        assert_eq!(c.dynamics, DynamicsConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::default();
        c.init.x0 = 1.2;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.dynamics.dt = 0.0;
        assert!(c.validate().is_err());
        let c = RunConfig {
            grid_n: 1,
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
        let c = RunConfig {
            game: GameSpec::Preset("chicken".into()),
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn angle_defaults_follow_probabilities() {
        let init = InitConfig {
            x0: 0.36,
            ..InitConfig::default()
        };
        let p = init.row_state().probs();
        assert!((p[0] - 0.36).abs() < 1e-15);
    }
}
