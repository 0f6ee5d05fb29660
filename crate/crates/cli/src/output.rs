//! Result persistence: CSV tables plus a TOML metadata sidecar.
//!
//! The sidecar is written exactly once per run, before the result tables
//! are moved to their final names, so a directory containing bare `.csv`
//! files is guaranteed to also contain the metadata describing them.
//! Every float is rendered with 17 significant digits so that CSVs
//! round-trip bit-faithfully and identical runs are byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::config::RunConfig;
use crate::error::CliError;

/// Full-precision float rendering (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One CSV result file: single header row, pre-rendered data rows.
pub struct Table {
    pub name: &'static str,
    pub header: &'static str,
    pub rows: Vec<String>,
}

#[derive(Debug, Clone)]
pub enum MetaValue {
    Float(f64),
    Bool(bool),
}

impl MetaValue {
    fn render(&self) -> String {
        match self {
            MetaValue::Float(v) => fmt_f64(*v),
            MetaValue::Bool(v) => v.to_string(),
        }
    }
}

/// Run-level facts recorded in the sidecar next to the config echo.
pub struct Metadata {
    pub started_unix: u64,
    pub finished_unix: u64,
    /// True when the run stopped early and the tables hold partial data.
    pub partial: bool,
    /// Human-readable description of the abort, if any.
    pub abort: Option<String>,
    pub truncation_warning_count: usize,
    /// Ordered experiment-specific result keys ([results] section).
    pub results: Vec<(String, MetaValue)>,
}

pub fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn toml_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

fn render_metadata(cfg: &RunConfig, meta: &Metadata) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "version = {}", toml_string(env!("CARGO_PKG_VERSION")));
    let _ = writeln!(s, "experiment = {}", toml_string(cfg.experiment.name()));
    let _ = writeln!(s, "seed = {}", cfg.seed);
    let _ = writeln!(s, "started_unix = {}", meta.started_unix);
    let _ = writeln!(s, "finished_unix = {}", meta.finished_unix);
    let _ = writeln!(s, "partial = {}", meta.partial);
    if let Some(abort) = &meta.abort {
        let _ = writeln!(s, "abort = {}", toml_string(abort));
    }
    let _ = writeln!(
        s,
        "truncation_warning_count = {}",
        meta.truncation_warning_count
    );
    let _ = writeln!(s);
    let _ = writeln!(s, "[config]");
    let _ = writeln!(s, "omega_a = {}", fmt_f64(cfg.omega_a));
    let _ = writeln!(s, "omega_b = {}", fmt_f64(cfg.omega_b));
    let _ = writeln!(s, "g = {}", fmt_f64(cfg.g));
    let _ = writeln!(s, "coupling = {}", toml_string(cfg.coupling.name()));
    let _ = writeln!(s, "contact_time = {}", fmt_f64(cfg.contact_time));
    let _ = writeln!(s, "levels_a = {}", cfg.levels_a);
    let _ = writeln!(s, "levels_b = {}", cfg.levels_b);
    let _ = writeln!(s, "n_encounters = {}", cfg.n_encounters);
    let _ = writeln!(s, "initial_n_a = {}", cfg.initial_n_a);
    let _ = writeln!(s, "initial_n_b = {}", cfg.initial_n_b);
    let _ = writeln!(s, "pool_size = {}", cfg.pool_size);
    let _ = writeln!(
        s,
        "output_dir = {}",
        toml_string(&cfg.output_dir.display().to_string())
    );
    let _ = writeln!(s, "truncation_warn = {}", fmt_f64(cfg.truncation_warn));
    let _ = writeln!(s, "truncation_hard = {}", fmt_f64(cfg.truncation_hard));
    let _ = writeln!(s, "fit_skip = {}", cfg.fit_skip);
    let _ = writeln!(s, "gamma = {}", fmt_f64(cfg.gamma));
    let _ = writeln!(s, "mean_hold = {}", fmt_f64(cfg.mean_hold));
    let _ = writeln!(s, "hold_law = {}", toml_string(cfg.hold_law.name()));
    let _ = writeln!(s, "hold_lo = {}", fmt_f64(cfg.hold_lo));
    let _ = writeln!(s, "hold_hi = {}", fmt_f64(cfg.hold_hi));
    let _ = writeln!(s, "n_toggles = {}", cfg.n_toggles);
    let _ = writeln!(s, "n_trajectories = {}", cfg.n_trajectories);
    let _ = writeln!(s, "omega_prime = {}", fmt_f64(cfg.omega_prime));
    if !meta.results.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(s, "[results]");
        for (key, value) in &meta.results {
            let _ = writeln!(s, "{key} = {}", value.render());
        }
    }
    s
}

/// Persist a run: tables land under temporary names, the metadata sidecar
/// is committed, and only then are the tables renamed into place.
pub fn write_run(cfg: &RunConfig, meta: &Metadata, tables: &[Table]) -> Result<(), CliError> {
    let dir: &Path = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    for table in tables {
        let mut text = String::with_capacity(table.rows.len() * 64);
        text.push_str(table.header);
        text.push('\n');
        for row in &table.rows {
            text.push_str(row);
            text.push('\n');
        }
        fs::write(dir.join(format!("{}.part", table.name)), text)?;
    }
    fs::write(dir.join("metadata.toml"), render_metadata(cfg, meta))?;
    for table in tables {
        fs::rename(
            dir.join(format!("{}.part", table.name)),
            dir.join(table.name),
        )?;
    }
    Ok(())
}
