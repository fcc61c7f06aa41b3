//! Configuration-driven runner: model traces, figure data and oracle reports.

pub mod config;
pub mod svg;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use thiserror::Error;

use crate::dephasing::{ModelParams, TimeGrid};
use crate::oracle::{
    self, BathMode, FiniteBathOracle, FiniteBathSpec, OracleError, OracleRow, OracleSummary,
};
use crate::spectral::{SpectralDensitySpec, TabulatedDensity, TemperatureSpec};
use crate::thermo::{self, ThermoError, ThermoRecord, ThermoTrace};

pub use config::{ConfigError, Convention, KeyValues, OracleConfig, ScenarioConfig};
use svg::{Panel, Series, PALETTE};

/// Largest oracle deviation accepted by `oracle`.
pub const ORACLE_TOL: f64 = 1e-6;

/// Cutoffs swept for the entropy-production figure when none are configured.
pub const DEFAULT_CUTOFF_SWEEP: [f64; 3] = [0.5, 1.0, 2.0];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("tolerance check failed: {0}")]
    Tolerance(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io(_) => 1,
            Self::Numeric(_) => 2,
            Self::Tolerance(_) => 3,
        }
    }

    fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::Io(format!("{}: {err}", path.display()))
    }
}

impl From<ThermoError> for CliError {
    fn from(e: ThermoError) -> Self {
        Self::Numeric(e.to_string())
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::ThermalTail { .. } => {
                Self::Config(ConfigError::new("n_max", e.to_string()))
            }
            OracleError::DimensionGuard { .. } => {
                Self::Config(ConfigError::new("n_max/bath_omegas", e.to_string()))
            }
            OracleError::InvalidSpec(_) => Self::Config(ConfigError::new("bath", e.to_string())),
            other => Self::Numeric(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "dephasing-thermo",
    version,
    about = "Local and global thermodynamics of a dephasing qubit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl ConfigArgs {
    fn key_values(&self) -> Result<KeyValues> {
        let mut kv = match &self.config {
            Some(path) => KeyValues::from_path(path)?,
            None => KeyValues::default(),
        };
        kv.apply_overrides(&self.overrides)?;
        Ok(kv)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig1,
    Fig2,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve the model and write the full thermodynamic trace.
    Evolve {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write figure data (CSV), an SVG rendering and a metadata file.
    Figures {
        which: Figure,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Compare the analytic formulas with an exact finite-bath evolution.
    Oracle {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Executes a parsed command, returning a short report for stdout.
pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Evolve { config, out } => {
            let cfg = ScenarioConfig::from_key_values(config.key_values()?)?;
            let traces = evolve(&cfg, &out)?;
            let mut report = String::new();
            for (cutoff, trace) in &traces {
                let last = trace.last();
                report.push_str(&format!(
                    "cutoff = {cutoff}: Sigma_loc({t}) = {:.10}, Sigma_gl({t}) = {:.10}\n",
                    last.sigma_loc_integral,
                    last.sigma_gl,
                    t = last.t
                ));
            }
            report.push_str(&format!("wrote {}\n", out.display()));
            Ok(report)
        }
        Command::Figures { which, out, config } => {
            let cfg = ScenarioConfig::from_key_values(config.key_values()?)?;
            let files = reproduce_figure(which, &cfg, &out)?;
            Ok(files
                .iter()
                .map(|f| format!("wrote {}\n", f.display()))
                .collect())
        }
        Command::Oracle { config, out } => {
            let cfg = OracleConfig::from_key_values(config.key_values()?)?;
            let report = oracle_run(&cfg, &out)?;
            let text = report.summary_text();
            if report.passed {
                Ok(text)
            } else {
                print!("{text}");
                Err(CliError::Tolerance(format!(
                    "oracle deviations exceed {ORACLE_TOL:e}; see {}",
                    out.display()
                )))
            }
        }
    }
}

/// Model parameters for one cutoff.
pub fn model_params(cfg: &ScenarioConfig, cutoff: f64) -> Result<ModelParams> {
    let spectral = match &cfg.spectral_file {
        Some(path) => SpectralDensitySpec::Tabulated(
            TabulatedDensity::from_path(path)
                .map_err(|e| ConfigError::new("spectral_file", e.to_string()))?,
        ),
        None => SpectralDensitySpec::ohmic(cfg.alpha, cutoff)
            .map_err(|e| ConfigError::new("alpha/cutoff", e.to_string()))?,
    };
    let temperature =
        TemperatureSpec::finite(cfg.beta).map_err(|e| ConfigError::new("beta", e.to_string()))?;
    ModelParams::new(cfg.omega0, spectral, temperature)
        .map_err(|e| ConfigError::new("omega0", e.to_string()).into())
}

/// Computes the trace for the configured cutoff; closure is checked inside.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ThermoTrace> {
    run_with_cutoff(cfg, cfg.cutoff)
}

fn run_with_cutoff(cfg: &ScenarioConfig, cutoff: f64) -> Result<ThermoTrace> {
    let p = model_params(cfg, cutoff)?;
    let rho0 = cfg.initial_state()?;
    let grid = TimeGrid::new(cfg.t_max, cfg.dt)
        .map_err(|e| ConfigError::new("t_max/dt", e.to_string()))?;
    info!("evolving cutoff = {cutoff} over {} steps", grid.steps());
    Ok(thermo::model_trace(&p, &rho0, &grid)?)
}

/// Runs one trace per cutoff concurrently; results keep the input order.
pub fn run_sweep(cfg: &ScenarioConfig, cutoffs: &[f64]) -> Result<Vec<(f64, ThermoTrace)>> {
    let results: Vec<Result<ThermoTrace>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cutoffs
            .iter()
            .map(|&w| scope.spawn(move || run_with_cutoff(cfg, w)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(CliError::Numeric("worker thread panicked".into())))
            })
            .collect()
    });
    cutoffs
        .iter()
        .zip(results)
        .map(|(&w, r)| r.map(|t| (w, t)))
        .collect()
}

/// Fixed-width scientific formatting with 17 significant digits.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_rows<'a>(
    path: &Path,
    header: &[&str],
    rows: impl Iterator<Item = Vec<f64>> + 'a,
) -> Result<()> {
    let mut writer = csv::Writer::from_writer(create(path)?);
    let io = |e: csv::Error| CliError::io(path, e);
    writer.write_record(header).map_err(io)?;
    for row in rows {
        writer
            .write_record(row.iter().map(|v| format_value(*v)))
            .map_err(io)?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))
}

/// Writes a trace with the standard header.
pub fn write_trace_csv(path: &Path, trace: &ThermoTrace) -> Result<()> {
    write_rows(
        path,
        &ThermoRecord::COLUMNS,
        trace.records.iter().map(|r| r.values().to_vec()),
    )
}

/// Writes several traces stacked, with a trailing `cutoff` column.
pub fn write_sweep_csv(path: &Path, traces: &[(f64, ThermoTrace)]) -> Result<()> {
    let mut header = ThermoRecord::COLUMNS.to_vec();
    header.push("cutoff");
    let rows = traces.iter().flat_map(|(w, trace)| {
        trace.records.iter().map(move |r| {
            let mut v = r.values().to_vec();
            v.push(*w);
            v
        })
    });
    write_rows(path, &header, rows)
}

/// `evolve`: a single trace, or a stacked sweep when `cutoff_sweep` is set.
pub fn evolve(cfg: &ScenarioConfig, out: &Path) -> Result<Vec<(f64, ThermoTrace)>> {
    match &cfg.cutoff_sweep {
        None => {
            let trace = run_scenario(cfg)?;
            trace.check_closure()?;
            write_trace_csv(out, &trace)?;
            Ok(vec![(cfg.cutoff, trace)])
        }
        Some(sweep) => {
            let traces = run_sweep(cfg, sweep)?;
            for (_, t) in &traces {
                t.check_closure()?;
            }
            write_sweep_csv(out, &traces)?;
            Ok(traces)
        }
    }
}

fn series(
    label: String,
    color: &'static str,
    dashed: bool,
    trace: &ThermoTrace,
    f: impl Fn(&ThermoRecord) -> f64,
) -> Series {
    Series {
        label,
        points: trace.records.iter().map(|r| (r.t, f(r))).collect(),
        color,
        dashed,
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))
}

fn metadata(cfg: &ScenarioConfig, which: Figure, extra: &[String]) -> String {
    let mut lines = vec![format!("# {} metadata", figure_name(which))];
    lines.extend(cfg.describe());
    lines.extend(extra.iter().cloned());
    lines.push(String::new());
    lines.join("\n")
}

fn figure_name(which: Figure) -> &'static str {
    match which {
        Figure::Fig1 => "fig1",
        Figure::Fig2 => "fig2",
    }
}

/// Writes `<which>.csv`, `<which>.svg` and `<which>_metadata.txt` to `out_dir`.
pub fn reproduce_figure(
    which: Figure,
    cfg: &ScenarioConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let name = figure_name(which);
    let csv_path = out_dir.join(format!("{name}.csv"));
    let svg_path = out_dir.join(format!("{name}.svg"));
    let meta_path = out_dir.join(format!("{name}_metadata.txt"));
    let (traces, panels, title, extra) = match which {
        Figure::Fig1 => {
            let (sweep, source) = match &cfg.cutoff_sweep {
                Some(s) => (s.clone(), "configured"),
                None => (DEFAULT_CUTOFF_SWEEP.to_vec(), "default choice"),
            };
            let traces = run_sweep(cfg, &sweep)?;
            let mut local = Vec::new();
            let mut global = Vec::new();
            for (k, (w, trace)) in traces.iter().enumerate() {
                let color = PALETTE[k % PALETTE.len()];
                local.push(series(format!("Ω = {w}"), color, false, trace, |r| {
                    r.sigma_loc_integral
                }));
                global.push(series(format!("Ω = {w}"), color, false, trace, |r| {
                    r.sigma_gl
                }));
            }
            let panels = vec![
                Panel {
                    title: "local".into(),
                    x_label: "t".into(),
                    y_label: "Σ_loc".into(),
                    series: local,
                },
                Panel {
                    title: "global".into(),
                    x_label: "t".into(),
                    y_label: "Σ_gl".into(),
                    series: global,
                },
            ];
            let extra = vec![format!("cutoff_sweep_source = {source}")];
            (traces, panels, "Entropy production", extra)
        }
        Figure::Fig2 => {
            let trace = run_scenario(cfg)?;
            let mut panels = Vec::new();
            for conv in &cfg.conventions {
                let (title, u_label): (&str, &str) = match conv {
                    Convention::Local => ("(a) local", "U"),
                    Convention::Elb => ("(b) ELB", "ΔU"),
                    Convention::Lp => ("(c) LP", "ΔU"),
                };
                let first = trace.records[0];
                let (u, w, q): (Series, Series, Series) = match conv {
                    Convention::Local => (
                        series(u_label.into(), PALETTE[0], false, &trace, |r| r.u_loc),
                        series("W".into(), PALETTE[1], true, &trace, |r| r.w_loc),
                        series("Q".into(), PALETTE[2], false, &trace, |r| r.q_loc),
                    ),
                    Convention::Elb => (
                        series(u_label.into(), PALETTE[0], false, &trace, move |r| {
                            r.u_elb - first.u_elb
                        }),
                        series("W".into(), PALETTE[1], true, &trace, |r| r.w_elb),
                        series("Q".into(), PALETTE[2], true, &trace, |r| r.q_gl),
                    ),
                    Convention::Lp => (
                        series(u_label.into(), PALETTE[0], false, &trace, move |r| {
                            r.u_lp - first.u_lp
                        }),
                        series("W".into(), PALETTE[1], true, &trace, |r| r.w_lp),
                        series("Q".into(), PALETTE[2], false, &trace, |r| r.q_gl),
                    ),
                };
                panels.push(Panel {
                    title: title.into(),
                    x_label: "t".into(),
                    y_label: "energy".into(),
                    series: vec![u, w, q],
                });
            }
            let extra =
                vec!["global panels plot U(t) - U(0); the local panel plots U(t)".to_string()];
            (
                vec![(cfg.cutoff, trace)],
                panels,
                "First-law quantities",
                extra,
            )
        }
    };
    for (_, t) in &traces {
        t.check_closure()?;
    }
    let mut extra = extra;
    extra.extend(traces[0].1.notes.iter().map(|n| format!("note: {n}")));
    for (w, t) in &traces {
        let last = t.last();
        extra.push(format!(
            "saturation[cutoff = {w}]: Sigma_loc = {}, Sigma_gl = {}, Q_gl = {}",
            format_value(last.sigma_loc_integral),
            format_value(last.sigma_gl),
            format_value(last.q_gl)
        ));
    }
    write_sweep_csv(&csv_path, &traces)?;
    write_text(&svg_path, &svg::render(title, &panels))?;
    write_text(&meta_path, &metadata(cfg, which, &extra))?;
    Ok(vec![csv_path, svg_path, meta_path])
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub rows: Vec<OracleRow>,
    pub summary: OracleSummary,
    pub passed: bool,
}

impl OracleReport {
    pub fn summary_text(&self) -> String {
        let mut text = String::new();
        for (name, dev) in self.summary.checks() {
            let verdict = if dev <= ORACLE_TOL { "PASS" } else { "FAIL" };
            text.push_str(&format!(
                "{verdict} {name}: max deviation {dev:.3e} (tol {ORACLE_TOL:e})\n"
            ));
        }
        text.push_str(&format!(
            "min Sigma_gl_relent = {:.3e}\noverall: {}\n",
            self.summary.min_sigma_gl_relent,
            if self.passed { "PASS" } else { "FAIL" }
        ));
        text
    }
}

/// Builds the finite bath, compares it with the analytic formulas and writes
/// the row table to `out` plus a summary next to it.
pub fn oracle_run(cfg: &OracleConfig, out: &Path) -> Result<OracleReport> {
    let modes = cfg
        .bath_omegas
        .iter()
        .zip(&cfg.bath_couplings)
        .map(|(&omega, &g)| BathMode {
            omega,
            g: crate::linops::r(g),
        })
        .collect();
    let spec = FiniteBathSpec::new(modes, cfg.n_max, cfg.beta)?;
    let oracle = FiniteBathOracle::new(spec, cfg.omega0)?;
    let rho0 = cfg.initial_state()?;
    let grid = TimeGrid::new(cfg.t_max, cfg.dt)
        .map_err(|e| ConfigError::new("t_max/dt", e.to_string()))?;
    let (rows, summary) = oracle::compare(&oracle, &rho0, &grid.times())?;
    write_rows(
        out,
        &OracleRow::COLUMNS,
        rows.iter().map(|r| r.values().to_vec()),
    )?;
    let passed = summary.passes(ORACLE_TOL);
    let report = OracleReport {
        rows,
        summary,
        passed,
    };
    write_text(&out.with_extension("summary.txt"), &report.summary_text())?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_format_has_seventeen_digits() {
        assert_eq!(format_value(0.25), "2.5000000000000000e-1");
        assert_eq!(format_value(-2.0), "-2.0000000000000000e0");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(ConfigError::new("a", "b")).exit_code(), 1);
        assert_eq!(CliError::Io("x".into()).exit_code(), 1);
        assert_eq!(CliError::Numeric("x".into()).exit_code(), 2);
        assert_eq!(CliError::Tolerance("x".into()).exit_code(), 3);
    }

    #[test]
    fn thermal_tail_is_a_validation_error() {
        let cfg = OracleConfig {
            n_max: 2,
            beta: 0.2,
            ..OracleConfig::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let err = oracle_run(&cfg, &dir.path().join("o.csv")).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("n_max"));
    }

    #[test]
    fn short_trace_round_trip() {
        let cfg = ScenarioConfig {
            t_max: 1.0,
            dt: 0.01,
            ..ScenarioConfig::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let traces = evolve(&cfg, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,S,sigma_loc,Sigma_loc,U_loc,W_loc,Q_loc,Q_gl,Sigma_gl,U_elb,W_elb,U_lp,W_lp"
        );
        assert_eq!(lines.count(), traces[0].1.records.len());
    }

    #[test]
    fn coarse_grid_fails_the_endpoint_check() {
        let cfg = ScenarioConfig {
            t_max: 1.0,
            dt: 0.1,
            ..ScenarioConfig::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let err = evolve(&cfg, &dir.path().join("trace.csv")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
