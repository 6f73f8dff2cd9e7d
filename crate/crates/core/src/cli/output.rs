//! CSV and sidecar writers. Numbers are written with 17 significant digits
//! so every `f64` reads back bit-exactly.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::classical::ClassicalState;
use crate::engine::{Snapshot, Trajectory};
use crate::experiments::{MatchState, SweepResult};
use crate::quantum::JointQuantumState;

use super::config::RunConfig;

pub const CLASSICAL_HEADER: &str = "t,x_T,y_T,u_A,u_B";
pub const QUANTUM_HEADER: &str = "t,re_a00,im_a00,re_a01,im_a01,re_a10,im_a10,re_a11,im_a11,p_TT,p_TF,p_FT,p_FF,u_A,u_B,norm";
pub const SWEEP_HEADER: &str = "x0,y0,label,residual";

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "REPLICATOR_OUT_DIR";

pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn row(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(fmt_num).collect::<Vec<_>>().join(",")
}

pub fn write_classical_csv<W: Write>(mut w: W, traj: &Trajectory<ClassicalState>) -> io::Result<()> {
    writeln!(w, "{CLASSICAL_HEADER}")?;
    for ((t, s), u) in traj.times.iter().zip(&traj.states).zip(&traj.payoffs) {
        writeln!(w, "{}", row([*t, s.x[0], s.y[0], u.u_a, u.u_b]))?;
    }
    Ok(())
}

fn quantum_row(t: f64, amps: &[num_complex::Complex64; 4], u: (f64, f64), norm: f64) -> String {
    let sq: Vec<f64> = amps.iter().map(|z| z.norm_sqr()).collect();
    let total: f64 = sq.iter().sum();
    let mut values = vec![t];
    values.extend(amps.iter().flat_map(|z| [z.re, z.im]));
    values.extend(sq.iter().map(|p| p / total));
    values.extend([u.0, u.1, norm]);
    row(values)
}

pub fn write_quantum_csv<W: Write>(mut w: W, traj: &Trajectory<JointQuantumState>) -> io::Result<()> {
    writeln!(w, "{QUANTUM_HEADER}")?;
    for (k, q) in traj.states.iter().enumerate() {
        let amps: [num_complex::Complex64; 4] = (*q.amps()).into();
        let u = traj.payoffs[k];
        let norm = traj.norms.as_ref().map_or(q.norm(), |n| n[k]);
        writeln!(w, "{}", quantum_row(traj.times[k], &amps, (u.u_a, u.u_b), norm))?;
    }
    Ok(())
}

/// Mixed matches use the quantum schema, with the classical player's
/// strategy embedded as real amplitudes `√p`.
pub fn write_match_csv<W: Write>(mut w: W, traj: &Trajectory<MatchState>) -> io::Result<()> {
    writeln!(w, "{QUANTUM_HEADER}")?;
    for (k, s) in traj.states.iter().enumerate() {
        let amps = s.joint_amplitudes();
        let u = traj.payoffs[k];
        let norm = traj.norms.as_ref().map_or(1.0, |n| n[k]);
        writeln!(w, "{}", quantum_row(traj.times[k], &amps, (u.u_a, u.u_b), norm))?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(mut w: W, sweep: &SweepResult) -> io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for p in &sweep.points {
        writeln!(w, "{},{},{},{}", fmt_num(p.x0), fmt_num(p.y0), p.label.name(), fmt_num(p.label.residual))?;
    }
    Ok(())
}

/// Splits CSV text into its header line and rows of fields.
pub fn parse_csv(text: &str) -> (String, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default().to_string();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

/// Final strategy point of a trajectory, for summaries.
pub fn terminal_point<S: Snapshot>(traj: &Trajectory<S>) -> Option<[f64; 2]> {
    traj.last().map(Snapshot::strategy_point)
}

#[derive(Debug, Serialize)]
pub struct Sidecar<'a, T: Serialize> {
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub summary: T,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut name = csv.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta.toml");
    csv.with_file_name(name)
}

/// Writes `body` to `path` and the run record next to it.
pub fn write_with_sidecar<T: Serialize>(path: &Path, body: impl FnOnce(&mut Vec<u8>) -> io::Result<()>, sidecar: &Sidecar<'_, T>) -> io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut buf = Vec::new();
    body(&mut buf)?;
    fs::write(path, buf)?;
    let meta = toml::to_string(sidecar).map_err(io::Error::other)?;
    fs::write(sidecar_path(path), meta)
}
