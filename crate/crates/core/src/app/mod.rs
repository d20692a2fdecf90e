//! Command-line front end: `simulate`, `audit`, `list` and `export-plot`.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 numeric failure
//! (divergence, failed audit, singular model).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{vector, Vector};
use crate::mech::{mech_closed_loop, TransformedMech};
use crate::sim::{check_convergence, integrate, verdict_json, ConvergenceVerdict, Trajectory};
use crate::systems::{
    build_manipulator, build_pmsm, build_vtol, list_presets, pmsm_gains, PlantConfig, Preset,
};
use crate::verify::{
    audit_construction, audit_matched, audit_unmatched, audit_mixed,
    audit_mechanical, check_audit_number, AuditOptions, AuditReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

pub const DIAGNOSTIC_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "phiac", version, about = "Integral action control for port-Hamiltonian plants")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write trajectory, verdict and plot data.
    Simulate(RunArgs),
    /// Run one numerical audit (1 to 5) against a preset.
    Audit(AuditArgs),
    /// List bundled presets.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Run a scenario and write only the plot data.
    ExportPlot(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Source {
    /// Bundled preset name.
    #[arg(long)]
    pub preset: Option<String>,
    /// TOML file merged over the preset, or a full preset when no name is given.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `key=value`, applied last. Keys are dotted paths or unique leaf names.
    #[arg(long = "override", value_name = "K=V", value_parser = parse_override)]
    pub overrides: Vec<(String, String)>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Accepted for symmetry with `audit`; runs are deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub source: Source,
    /// 1 construction, 2 matched, 3 unmatched, 4 mixed, 5 mechanical.
    #[arg(long)]
    pub prop: u32,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = AuditOptions::default().seed)]
    pub seed: u64,
    #[arg(long, default_value_t = AuditOptions::default().samples)]
    pub samples: usize,
    #[arg(long)]
    pub json: bool,
}

fn parse_override(s: &str) -> std::result::Result<(String, String), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(format!("expected KEY=VALUE, got '{s}'")),
    }
}

impl Source {
    pub fn resolve(&self) -> Result<Preset> {
        let text = match &self.config {
            Some(p) => Some(
                std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?,
            ),
            None => None,
        };
        match (&self.preset, text) {
            (Some(name), text) => Preset::resolve(name, text.as_deref(), &self.overrides),
            (None, Some(text)) => {
                let base = Preset::from_toml(&text)?;
                if self.overrides.is_empty() {
                    Ok(base)
                } else {
                    let merged = base.to_toml()?;
                    Preset::resolve_text(&merged, &self.overrides)
                }
            }
            (None, None) => Err(Error::Config("one of --preset or --config is required".into())),
        }
    }
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Divergence { .. }
        | Error::NonFinite { .. }
        | Error::Singular { .. }
        | Error::Inconsistent { .. }
        | Error::Assumption(_) => EXIT_NUMERIC,
        _ => EXIT_USAGE,
    }
}

#[derive(Serialize)]
struct Diagnostic<'a> {
    schema_version: u32,
    scenario: &'a str,
    error: &'a str,
    t: Option<f64>,
    message: String,
}

fn diagnostic(scenario: &str, e: &Error) -> String {
    let (kind, t) = match e {
        Error::Divergence { t } => ("divergence", Some(*t)),
        _ => ("numeric", None),
    };
    let d = Diagnostic {
        schema_version: DIAGNOSTIC_SCHEMA_VERSION,
        scenario,
        error: kind,
        t,
        message: e.to_string(),
    };
    serde_json::to_string_pretty(&d).expect("plain struct serializes") + "\n"
}

/// Output of a scenario run.
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub verdict: Option<ConvergenceVerdict>,
}

pub fn run_preset(preset: &Preset) -> Result<RunOutcome> {
    let built = preset.build()?;
    let trajectory = integrate(&built.scenario)?;
    let verdict = built
        .prediction
        .as_ref()
        .map(|p| check_convergence(&trajectory, p, preset.scenario.tol));
    Ok(RunOutcome { trajectory, verdict })
}

pub fn trajectory_path(out: &Path, name: &str) -> PathBuf {
    out.join(format!("{name}.trajectory.csv"))
}

pub fn verdict_path(out: &Path, name: &str) -> PathBuf {
    out.join(format!("{name}.verdict.json"))
}

pub fn plot_path(out: &Path, name: &str) -> PathBuf {
    out.join(format!("{name}.plot.csv"))
}

pub fn diagnostic_path(out: &Path, name: &str) -> PathBuf {
    out.join(format!("{name}.divergence.json"))
}

pub fn audit_path(out: &Path, name: &str, prop: u32) -> PathBuf {
    out.join(format!("{name}.audit-{prop}.json"))
}

/// Matched disturbance used to probe plants that carry none.
fn probe_matched(m: usize) -> Vector {
    Vector::from_element(m, 1.0)
}

/// Runs audit `prop` on the plant and gains a preset describes.
///
/// The PMSM supports audits 1 to 4. Mechanical presets support 1, 2 and 5,
/// audited on the partitioned plant in transformed momenta; the manipulator
/// uses the full gains its simplified law reproduces.
pub fn audit_preset(preset: &Preset, prop: u32, opts: &AuditOptions) -> Result<AuditReport> {
    check_audit_number(prop)?;
    let name = &preset.meta.name;
    let not_applicable = || Error::Config(format!("audit {prop} does not apply to preset '{name}'"));
    match &preset.plant {
        PlantConfig::Pmsm(p) => {
            let plant = build_pmsm(p)?;
            let gains = pmsm_gains(p)?;
            let m = plant.partition().m();
            Ok(match prop {
                1 => audit_construction(&plant, &gains, opts),
                2 => audit_matched(&plant, &gains, &probe_matched(m), opts),
                3 => {
                    let raw = p.raw_disturbance();
                    audit_unmatched(&plant, &gains, move |_| raw.clone(), opts)
                }
                4 => audit_mixed(&plant, &gains, &probe_matched(m), &vector(&[p.d_bar_u()]), opts),
                _ => return Err(not_applicable()),
            })
        }
        PlantConfig::Manipulator(_) | PlantConfig::Vtol(_) => {
            let (sys, gains) = match &preset.plant {
                PlantConfig::Manipulator(p) => {
                    (build_manipulator(p)?, p.controller()?.equivalent_gains(&p.r_d_matrix())?)
                }
                PlantConfig::Vtol(p) => (build_vtol(p)?, p.gains()?),
                PlantConfig::Pmsm(_) => unreachable!(),
            };
            let tm = TransformedMech::new(&sys);
            let closed = mech_closed_loop(&tm, &gains)?;
            let plant = closed.plant();
            let d_bar_a = plant.disturbance().matched.as_ref().map(|m| m.d_bar.clone());
            Ok(match (prop, d_bar_a) {
                (1, _) => audit_construction(plant, &gains, opts),
                (2, Some(da)) => audit_matched(plant, &gains, &da, opts),
                (5, _) => audit_mechanical(&sys, &gains, opts),
                _ => return Err(not_applicable()),
            })
        }
    }
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn simulate(args: &RunArgs, plot_only: bool, io: &mut Io) -> Result<i32> {
    let preset = args.source.resolve()?;
    let name = preset.meta.name.clone();
    let outcome = match run_preset(&preset) {
        Ok(o) => o,
        Err(e) if exit_code(&e) == EXIT_NUMERIC => {
            let diag = diagnostic(&name, &e);
            write_file(&diagnostic_path(&args.out, &name), &diag)?;
            let _ = io.out.write_all(diag.as_bytes());
            let _ = writeln!(io.err, "error: {e}");
            return Ok(EXIT_NUMERIC);
        }
        Err(e) => return Err(e),
    };
    let traj = &outcome.trajectory;
    let plot = plot_path(&args.out, &name);
    write_file(&plot, &traj.to_plot_data())?;
    if plot_only {
        let _ = writeln!(io.out, "{}", plot.display());
        return Ok(EXIT_OK);
    }
    write_file(&trajectory_path(&args.out, &name), &traj.to_csv())?;
    let verdict = match &outcome.verdict {
        Some(v) => {
            let text = verdict_json(traj, v)?;
            write_file(&verdict_path(&args.out, &name), &text)?;
            Some((v, text))
        }
        None => None,
    };
    match (&verdict, args.json) {
        (Some((_, text)), true) => {
            let _ = io.out.write_all(text.as_bytes());
        }
        (Some((v, _)), false) => {
            let status = if v.converged { "converged" } else { "not converged" };
            let _ = writeln!(io.out, "{name}: {status}, final error {:e} (tolerance {:e})", v.final_error, v.tol);
            let _ = writeln!(io.out, "max Lyapunov increase per step {:e}", v.max_lyapunov_increase);
            let _ = writeln!(io.out, "wrote {}", args.out.display());
        }
        (None, _) => {
            let _ = writeln!(io.out, "{name}: no certified equilibrium, verdict skipped");
        }
    }
    Ok(EXIT_OK)
}

fn audit(args: &AuditArgs, io: &mut Io) -> Result<i32> {
    check_audit_number(args.prop)?;
    let preset = args.source.resolve()?;
    let opts = AuditOptions {
        seed: args.seed,
        samples: args.samples,
        ..AuditOptions::default()
    };
    let report = audit_preset(&preset, args.prop, &opts)?;
    let json = report.to_json()?;
    if let Some(dir) = &args.out {
        write_file(&audit_path(dir, &preset.meta.name, args.prop), &json)?;
    }
    if args.json {
        let _ = io.out.write_all(json.as_bytes());
    } else {
        let _ = io.out.write_all(report.to_text().as_bytes());
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_NUMERIC })
}

fn list(json: bool, io: &mut Io) -> Result<i32> {
    let presets = list_presets();
    if json {
        let text = serde_json::to_string_pretty(&presets).map_err(|e| Error::Serialization(e.to_string()))?;
        let _ = writeln!(io.out, "{text}");
    } else {
        for p in &presets {
            let tag = match p.provenance {
                crate::systems::Provenance::Paper => "paper",
                crate::systems::Provenance::NonPaper => "non-paper",
            };
            let _ = writeln!(io.out, "{:<22} [{tag}] {}", p.name, p.description);
        }
    }
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return if code == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    let mut io = Io { out, err };
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a, false, &mut io),
        Command::ExportPlot(a) => simulate(a, true, &mut io),
        Command::Audit(a) => audit(a, &mut io),
        Command::List { json } => list(*json, &mut io),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(io.err, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests;
