use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::{ConvergenceVerdict, Panel, Trajectory};
use crate::error::{Error, Result};

pub const VERDICT_SCHEMA_VERSION: u32 = 1;

fn push_row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(',');
        }
        first = false;
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

impl Trajectory {
    /// Header `t, x..., x_c..., u..., H_cl, W, |Y_a|, |Y_u|` then one row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for l in &self.state_labels {
            out.push(',');
            out.push_str(&l.name);
        }
        for u in &self.input_labels {
            out.push(',');
            out.push_str(u);
        }
        out.push_str(",H_cl,W,|Y_a|,|Y_u|\n");
        for i in 0..self.len() {
            let row = std::iter::once(self.t[i])
                .chain(self.states[i].iter().copied())
                .chain(self.inputs[i].iter().copied())
                .chain([self.h_cl[i], self.lyapunov[i], self.y_a[i], self.y_u[i]]);
            push_row(&mut out, row);
        }
        out
    }

    /// Tidy `t,panel,series,value` rows for the configuration, momentum,
    /// controller and Lyapunov panels.
    pub fn to_plot_data(&self) -> String {
        let mut out = String::from("t,panel,series,value\n");
        for i in 0..self.len() {
            let t = self.t[i];
            for (l, v) in self.state_labels.iter().zip(&self.states[i]) {
                let panel = match l.panel {
                    Panel::Configuration => "configuration",
                    Panel::Momentum => "momentum",
                    Panel::Controller => "controller",
                };
                let _ = writeln!(out, "{t},{panel},{},{v}", l.name);
            }
            let _ = writeln!(out, "{t},lyapunov,W,{}", self.lyapunov[i]);
        }
        out
    }
}

pub fn write_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    std::fs::write(path, traj.to_csv())?;
    Ok(())
}

pub fn write_plot_data(traj: &Trajectory, path: &Path) -> Result<()> {
    std::fs::write(path, traj.to_plot_data())?;
    Ok(())
}

#[derive(Serialize)]
struct VerdictFile<'a> {
    schema_version: u32,
    scenario: &'a str,
    t_final: Option<f64>,
    max_step_error: f64,
    verdict: &'a ConvergenceVerdict,
}

pub fn verdict_json(traj: &Trajectory, verdict: &ConvergenceVerdict) -> Result<String> {
    let file = VerdictFile {
        schema_version: VERDICT_SCHEMA_VERSION,
        scenario: &traj.name,
        t_final: traj.t.last().copied(),
        max_step_error: traj.max_step_error,
        verdict,
    };
    let text = serde_json::to_string_pretty(&file).map_err(|e| Error::Serialization(e.to_string()))?;
    Ok(text + "\n")
}

pub fn write_verdict(traj: &Trajectory, verdict: &ConvergenceVerdict, path: &Path) -> Result<()> {
    std::fs::write(path, verdict_json(traj, verdict)?)?;
    Ok(())
}
