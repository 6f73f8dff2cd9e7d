//! The `replicator` command line.
//!
//! ```text
//! replicator analyze  --game trading-farming
//! replicator simulate --game prisoners-dilemma --mode quantum --theta0 0.2 --phi0 0.2
//! replicator sweep    --game hawk-dove --grid 51 --out hd.csv
//! replicator match    --game trading-farming --x0 0.3 --y0 0.6 --hamiltonian tangent
//! replicator verify
//! ```
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical or I/O failure,
//! 4 verification failure.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::classical::evolve_classical;
use crate::engine::detect_attractor;
use crate::experiments::{basin_sweep, mixed_match, MatchInit, MatchParams, SweepMode, SweepParams};
use crate::game::{internal_equilibrium, EquilibriumReport, Player};
use crate::quantum::{evolve_quantum, HamiltonianMode, JointQuantumState, QuantumParams};
use crate::verify;
use crate::Error;

use self::config::{GameSpec, RunConfig, RunMode};
use self::output::{Sidecar, OUT_DIR_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "replicator", version, about = "Classical and quantum replicator dynamics for 2x2 games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print pure and internal equilibria and the symmetric-game class.
    Analyze(RunArgs),
    /// Integrate one trajectory and write it as CSV.
    Simulate(RunArgs),
    /// Label the attractor reached from every point of an interior grid.
    Sweep(RunArgs),
    /// Quantum player against a classical one, with a classical baseline.
    Match(RunArgs),
    /// Run the invariant diagnostics.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Debug, Args, Default)]
struct RunArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset: trading-farming, prisoners-dilemma, hawk-dove, dominant.
    #[arg(long)]
    game: Option<String>,
    /// Row player's matrix as `a,b,c,d` (row-major).
    #[arg(long, value_name = "A11,A12,A21,A22", allow_hyphen_values = true)]
    matrix_a: Option<String>,
    /// Column player's matrix; defaults to the transpose of `--matrix-a`.
    #[arg(long, value_name = "B11,B12,B21,B22", allow_hyphen_values = true)]
    matrix_b: Option<String>,
    #[arg(long, value_enum)]
    mode: Option<RunMode>,
    #[arg(long, allow_negative_numbers = true)]
    x0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    y0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    theta0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    phi0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    t_max: Option<f64>,
    #[arg(long)]
    stride: Option<usize>,
    /// h-def, hermitized, tangent or general.
    #[arg(long)]
    hamiltonian: Option<String>,
    #[arg(long)]
    renormalize: Option<bool>,
    #[arg(long)]
    eps_conv: Option<f64>,
    #[arg(long)]
    eps_cycle: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    quantum_player: Option<Player>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl clap::ValueEnum for Player {
    fn value_variants<'a>() -> &'a [Self] {
        &[Player::Row, Player::Column]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            Player::Row => "row",
            Player::Column => "column",
        }))
    }
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure {
            code: if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_INVALID },
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Failure {
        Failure {
            code: EXIT_NUMERICAL,
            message: format!("i/o error: {e}"),
        }
    }
}

fn parse_matrix(text: &str) -> Result<[[f64; 2]; 2], Failure> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::invalid(format!("bad matrix `{text}`: {e}")))?;
    match v.as_slice() {
        [a, b, c, d] => Ok([[*a, *b], [*c, *d]]),
        _ => Err(Failure::invalid(format!("matrix `{text}` needs 4 entries"))),
    }
}

impl RunArgs {
    fn resolve(&self, default_mode: RunMode) -> Result<RunConfig, Failure> {
        let mut c = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Failure::invalid(format!("cannot read {}: {e}", path.display())))?;
                RunConfig::from_toml(&text).map_err(|e| Failure::invalid(format!("bad config {}: {e}", path.display())))?
            }
            None => RunConfig {
                mode: default_mode,
                ..RunConfig::default()
            },
        };
        if let Some(g) = &self.game {
            c.game = GameSpec::Preset(g.clone());
        }
        if let Some(a) = &self.matrix_a {
            let a = parse_matrix(a)?;
            let b = match &self.matrix_b {
                Some(b) => parse_matrix(b)?,
                None => crate::game::transpose(&a),
            };
            c.game = GameSpec::Explicit { a, b };
        } else if self.matrix_b.is_some() {
            return Err(Failure::invalid("--matrix-b requires --matrix-a"));
        }
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$flag { c.$($field).+ = v; })*
            };
        }
        set!(
            mode => mode,
            x0 => init.x0,
            y0 => init.y0,
            alpha0 => init.alpha0,
            gamma => dynamics.gamma,
            dt => dynamics.dt,
            t_max => dynamics.t_max,
            stride => dynamics.stride,
            renormalize => dynamics.renormalize,
            eps_conv => tolerances.eps_conv,
            eps_cycle => tolerances.eps_cycle,
            grid => grid_n,
            quantum_player => quantum_player,
        );
        if self.theta0.is_some() {
            c.init.theta0 = self.theta0;
        }
        if self.phi0.is_some() {
            c.init.phi0 = self.phi0;
        }
        if let Some(h) = &self.hamiltonian {
            c.dynamics.hamiltonian = h.parse::<HamiltonianMode>()?;
        }
        if let Some(out) = &self.out {
            c.output.path = Some(out.clone());
        }
        c.validate()?;
        Ok(c)
    }
}

fn output_path(c: &RunConfig, command: &str) -> PathBuf {
    if let Some(p) = &c.output.path {
        return p.clone();
    }
    let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    dir.join(format!("{command}-{}-{}.csv", c.game.slug(), c.mode.name()))
}

#[derive(Debug, Serialize)]
struct RunSummary {
    samples: usize,
    label: String,
    terminal_x_t: f64,
    terminal_y_t: f64,
    acc_a: f64,
    acc_b: f64,
    max_drift: f64,
    flagged_steps: usize,
}

#[derive(Debug, Serialize)]
struct MatchSummary {
    hamiltonian: String,
    quantum_player: Player,
    label: String,
    acc_a: f64,
    acc_b: f64,
    baseline_label: String,
    baseline_acc_a: f64,
    baseline_acc_b: f64,
    baseline_path: String,
}

fn analyze(c: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let g = c.game.build()?;
    writeln!(out, "{}", EquilibriumReport::analyze(&g))?;
    Ok(())
}

fn simulate(c: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let g = c.game.build()?;
    let step = c.dynamics.step();
    let detector = crate::engine::DetectorConfig {
        internal: internal_equilibrium(&g).map(|(x, y)| [x.first(), y.first()]),
        ..c.tolerances.detector()
    };
    let path = output_path(c, "simulate");
    let qparams = QuantumParams {
        gamma: c.dynamics.gamma,
        step,
        mode: c.dynamics.hamiltonian,
        renormalize: c.dynamics.renormalize,
    };
    let summary = |label: String, n: usize, p: Option<[f64; 2]>, acc: (f64, f64), drift: f64, flagged: usize| RunSummary {
        samples: n,
        label,
        terminal_x_t: p.map_or(f64::NAN, |p| p[0]),
        terminal_y_t: p.map_or(f64::NAN, |p| p[1]),
        acc_a: acc.0,
        acc_b: acc.1,
        max_drift: drift,
        flagged_steps: flagged,
    };
    let s = match c.mode {
        RunMode::Classical => {
            let t = evolve_classical(&g, &c.init.row_strategy()?, &c.init.col_strategy()?, c.dynamics.gamma, &step)?;
            let label = detect_attractor(&t, &detector)?;
            let s = summary(
                label.name(),
                t.len(),
                output::terminal_point(&t),
                crate::experiments::accumulated_payoff(&t)?,
                t.max_drift,
                t.flagged_steps,
            );
            let side = Sidecar {
                version: env!("CARGO_PKG_VERSION"),
                command: "simulate",
                config: c,
                summary: &s,
            };
            output::write_with_sidecar(&path, |w| output::write_classical_csv(w, &t), &side)?;
            s
        }
        RunMode::Quantum => {
            let q = JointQuantumState::product(&c.init.row_state(), &c.init.col_state());
            let t = evolve_quantum(&q, &g, &qparams)?;
            let label = detect_attractor(&t, &detector)?;
            let s = summary(
                label.name(),
                t.len(),
                output::terminal_point(&t),
                crate::experiments::accumulated_payoff(&t)?,
                t.max_drift,
                t.flagged_steps,
            );
            let side = Sidecar {
                version: env!("CARGO_PKG_VERSION"),
                command: "simulate",
                config: c,
                summary: &s,
            };
            output::write_with_sidecar(&path, |w| output::write_quantum_csv(w, &t), &side)?;
            s
        }
        RunMode::Mixed => {
            let r = run_match(c, &g, false)?;
            let t = &r.traj;
            let s = summary(
                r.label.name(),
                t.len(),
                output::terminal_point(t),
                (r.acc_a, r.acc_b),
                t.max_drift,
                t.flagged_steps,
            );
            let side = Sidecar {
                version: env!("CARGO_PKG_VERSION"),
                command: "simulate",
                config: c,
                summary: &s,
            };
            output::write_with_sidecar(&path, |w| output::write_match_csv(w, t), &side)?;
            s
        }
    };
    writeln!(
        out,
        "simulate {}: {} samples -> {}; label {}; final ({:.6}, {:.6}); acc ({:.6}, {:.6})",
        c.mode.name(),
        s.samples,
        path.display(),
        s.label,
        s.terminal_x_t,
        s.terminal_y_t,
        s.acc_a,
        s.acc_b
    )?;
    Ok(())
}

fn run_match(c: &RunConfig, g: &crate::game::Game, baseline: bool) -> Result<crate::experiments::MatchResult, Failure> {
    let init = match c.quantum_player {
        Player::Row => MatchInit {
            quantum: c.init.row_state(),
            classical: c.init.col_strategy()?,
        },
        Player::Column => MatchInit {
            quantum: c.init.col_state(),
            classical: c.init.row_strategy()?,
        },
    };
    let params = MatchParams {
        gamma: c.dynamics.gamma,
        step: c.dynamics.step(),
        mode: c.dynamics.hamiltonian,
        renormalize: c.dynamics.renormalize,
        detector: c.tolerances.detector(),
        baseline,
    };
    Ok(mixed_match(g, c.quantum_player, &init, &params)?)
}

fn run_match_command(c: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let g = c.game.build()?;
    let r = run_match(c, &g, true)?;
    let base = r.baseline.as_ref().expect("baseline requested");
    let path = output_path(c, "match");
    let base_path = path.with_extension("baseline.csv");
    let s = MatchSummary {
        hamiltonian: r.mode.name().into(),
        quantum_player: r.quantum_player,
        label: r.label.name(),
        acc_a: r.acc_a,
        acc_b: r.acc_b,
        baseline_label: base.label.name(),
        baseline_acc_a: base.acc_a,
        baseline_acc_b: base.acc_b,
        baseline_path: base_path.display().to_string(),
    };
    let side = Sidecar {
        version: env!("CARGO_PKG_VERSION"),
        command: "match",
        config: c,
        summary: &s,
    };
    output::write_with_sidecar(&path, |w| output::write_match_csv(w, &r.traj), &side)?;
    output::write_with_sidecar(&base_path, |w| output::write_classical_csv(w, &base.traj), &side)?;
    writeln!(
        out,
        "match ({} quantum, {}): acc_A {:.6} vs baseline {:.6}; acc_B {:.6} vs baseline {:.6}; label {} -> {}",
        r.quantum_player,
        r.mode,
        r.acc_a,
        base.acc_a,
        r.acc_b,
        base.acc_b,
        r.label,
        path.display()
    )?;
    Ok(())
}

fn sweep(c: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let g = c.game.build()?;
    let mode = match c.mode {
        RunMode::Classical => SweepMode::Classical,
        RunMode::Quantum => SweepMode::Quantum {
            mode: c.dynamics.hamiltonian,
            renormalize: c.dynamics.renormalize,
        },
        RunMode::Mixed => return Err(Failure::invalid("sweep supports --mode classical or quantum")),
    };
    let params = SweepParams {
        gamma: c.dynamics.gamma,
        step: c.dynamics.step(),
        detector: c.tolerances.detector(),
        early_stop: true,
    };
    let r = basin_sweep(&g, mode, c.grid_n, &params)?;
    let path = output_path(c, "sweep");
    let side = Sidecar {
        version: env!("CARGO_PKG_VERSION"),
        command: "sweep",
        config: c,
        summary: &r.summary,
    };
    output::write_with_sidecar(&path, |w| output::write_sweep_csv(w, &r), &side)?;
    let counts: Vec<String> = r.summary.iter().map(|(k, v)| format!("{k}={v}")).collect();
    writeln!(
        out,
        "sweep {}x{} ({}): {} -> {}",
        r.grid_n,
        r.grid_n,
        c.mode.name(),
        counts.join(" "),
        path.display()
    )?;
    Ok(())
}

fn run_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let results = verify::run_all(args.seed);
    let mut failed = 0;
    for r in &results {
        writeln!(out, "{r}")?;
        failed += usize::from(!r.passed);
    }
    writeln!(out, "{} checks, {} failed", results.len(), failed)?;
    if failed > 0 {
        return Err(Failure {
            code: EXIT_VERIFY,
            message: format!("{failed} invariant checks failed"),
        });
    }
    Ok(())
}

/// Parses `argv` (including the program name), runs the command, and
/// returns the process exit code. Output goes to `out`, diagnostics to `err`.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = if code == EXIT_OK {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Analyze(a) => a.resolve(RunMode::Classical).and_then(|c| analyze(&c, out)),
        Command::Simulate(a) => a.resolve(RunMode::Classical).and_then(|c| simulate(&c, out)),
        Command::Sweep(a) => a.resolve(RunMode::Classical).and_then(|c| sweep(&c, out)),
        Command::Match(a) => a.resolve(RunMode::Mixed).and_then(|c| run_match_command(&c, out)),
        Command::Verify(a) => run_verify(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

/// [`run_with`] on the process's stdout and stderr.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("replicator").chain(args.iter().copied());
        let code = run_with(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn analyze_trading_farming() {
        let (code, out, _) = run(&["analyze", "--game", "trading-farming"]);
        assert_eq!(code, 0);
        assert!(out.contains("pure equilibria: {TT, FF}"));
        assert!(out.contains("internal equilibrium: (0.5, 0.5)"));
        assert!(out.contains("class: TypeII"));
    }

    #[test]
    fn invalid_probability_exits_2() {
        let (code, _, err) = run(&[
            "simulate",
            "--game",
            "trading-farming",
            "--mode",
            "classical",
            "--x0",
            "1.2",
            "--y0",
            "0.5",
        ]);
        assert_eq!(code, EXIT_INVALID);
        assert!(err.contains("x0"));
    }

    #[test]
    fn unknown_things_exit_2() {
        assert_eq!(run(&["frobnicate"]).0, EXIT_INVALID);
        assert_eq!(run(&["analyze", "--bogus"]).0, EXIT_INVALID);
        assert_eq!(run(&["analyze", "--game", "chicken"]).0, EXIT_INVALID);
        assert_eq!(run(&["simulate", "--hamiltonian", "unitary"]).0, EXIT_INVALID);
        assert_eq!(run(&["analyze", "--matrix-a", "1,2,3"]).0, EXIT_INVALID);
    }

    #[test]
    fn explicit_matrices() {
        let (code, out, _) = run(&["analyze", "--matrix-a", "1,-1,-1,1", "--matrix-b", "-1,1,1,-1"]);
        assert_eq!(code, 0);
        assert!(out.contains("class: Asymmetric"));
        assert!(out.contains("pure equilibria: {}"));
    }

    #[test]
    fn unwritable_output_exits_3() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let out = blocker.join("sub/run.csv");
        let (code, _, _) = run(&["simulate", "--t-max", "1", "--out", out.to_str().unwrap()]);
        assert_eq!(code, EXIT_NUMERICAL);
    }
}
