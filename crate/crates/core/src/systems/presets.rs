use std::sync::Arc;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use super::{build_manipulator, build_pmsm, build_vtol, pmsm_gains, ManipulatorParams, PmsmParams, VtolParams};
use crate::error::{ensure_len, Error, Result};
use crate::iac::EquilibriumPrediction;
use crate::linalg::Vector;
use crate::mech::TransformedMech;
use crate::ph::Schedule;
use crate::sim::{Dynamics, IacLoop, MechLoop, Realization, Scenario};

pub const PRESET_NAMES: [&str; 3] = ["pmsm.default", "manipulator.default", "vtol.paper"];

fn preset_text(name: &str) -> Option<&'static str> {
    match name {
        "pmsm.default" => Some(include_str!("presets/pmsm.default.toml")),
        "manipulator.default" => Some(include_str!("presets/manipulator.default.toml")),
        "vtol.paper" => Some(include_str!("presets/vtol.paper.toml")),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Paper,
    NonPaper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetMeta {
    pub name: String,
    pub provenance: Provenance,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PlantConfig {
    Pmsm(PmsmParams),
    Manipulator(ManipulatorParams),
    Vtol(VtolParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    /// Full law with the integrator state `x_c`.
    Full,
    /// Full law integrated in `w_c = x_a − x_c`.
    Error,
    /// Damping-free law.
    Simplified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub t_end: f64,
    pub dt: f64,
    pub stride: usize,
    /// Step time of every disturbance (s).
    pub disturbance_on: f64,
    /// Plant state; mechanical plants use `(q, 𝐩)`.
    pub x0: Vec<f64>,
    pub xc0: Vec<f64>,
    pub controller: ControllerKind,
    /// Convergence tolerance on the closed-loop state.
    pub tol: f64,
}

/// A named, fully specified run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub meta: PresetMeta,
    pub plant: PlantConfig,
    pub scenario: ScenarioConfig,
}

pub fn list_presets() -> Vec<PresetMeta> {
    PRESET_NAMES
        .iter()
        .map(|n| load_preset(n).expect("bundled presets parse").meta)
        .collect()
}

pub fn load_preset(name: &str) -> Result<Preset> {
    Preset::resolve(name, None, &[])
}

fn parse_table(text: &str, what: &str) -> Result<Table> {
    text.parse::<Table>()
        .map_err(|e| Error::Config(format!("{what}: {e}")))
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn leaf_paths(t: &Table, prefix: &str, out: &mut Vec<String>) {
    for (k, v) in t {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(sub) => leaf_paths(sub, &path, out),
            _ => out.push(path),
        }
    }
}

fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Sets `key` (a dotted path or a unique leaf name) to `raw`, parsed as a
/// TOML value.
fn apply_override(table: &mut Table, key: &str, raw: &str) -> Result<()> {
    let mut paths = Vec::new();
    leaf_paths(table, "", &mut paths);
    let matches: Vec<&String> = paths
        .iter()
        .filter(|p| p.as_str() == key || p.rsplit('.').next() == Some(key))
        .collect();
    let path = match matches.as_slice() {
        [one] => (*one).clone(),
        [] => return Err(Error::Config(format!("unknown override key '{key}'"))),
        _ => {
            if let Some(exact) = matches.iter().find(|p| p.as_str() == key) {
                (*exact).clone()
            } else {
                return Err(Error::Config(format!(
                    "override key '{key}' is ambiguous; use one of {matches:?}"
                )));
            }
        }
    };
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().expect("non-empty path");
    let mut cur = table;
    for p in parts {
        cur = cur
            .get_mut(p)
            .and_then(Value::as_table_mut)
            .expect("path taken from the table");
    }
    let mut value = parse_value(raw);
    if let (Some(Value::Float(_)), Value::Integer(i)) = (cur.get(last), &value) {
        value = Value::Float(*i as f64);
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// A preset turned into a runnable scenario with the equilibrium expected
/// at its horizon.
pub struct BuiltScenario {
    pub scenario: Scenario,
    pub prediction: Option<EquilibriumPrediction>,
}

impl Preset {
    /// `overrides` beat the config file, which beats the named preset.
    pub fn resolve(name: &str, config: Option<&str>, overrides: &[(String, String)]) -> Result<Self> {
        let text = preset_text(name).ok_or_else(|| {
            Error::Config(format!("unknown preset '{name}'; available: {}", PRESET_NAMES.join(", ")))
        })?;
        let mut table = parse_table(text, name)?;
        if let Some(cfg) = config {
            let over = parse_table(cfg, "config file")?;
            merge(&mut table, over);
        }
        Self::finish(table, overrides)
    }

    /// Applies `overrides` to a complete preset given as TOML text.
    pub fn resolve_text(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        Self::finish(parse_table(text, "config file")?, overrides)
    }

    fn finish(mut table: Table, overrides: &[(String, String)]) -> Result<Self> {
        for (k, v) in overrides {
            apply_override(&mut table, k, v)?;
        }
        Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    /// Parses a standalone configuration that names no base preset.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn schedule(&self) -> Schedule {
        Schedule::at(self.scenario.disturbance_on)
    }

    pub fn build(&self) -> Result<BuiltScenario> {
        let sc = &self.scenario;
        let schedule = self.schedule();
        let x0 = Vector::from_column_slice(&sc.x0);
        let xc0 = Vector::from_column_slice(&sc.xc0);
        let final_activity = schedule.activity(sc.t_end);
        let (dynamics, start, prediction): (Arc<dyn Dynamics>, Vector, Option<EquilibriumPrediction>) =
            match &self.plant {
                PlantConfig::Pmsm(p) => {
                    ensure_len("PMSM x0", 3, x0.len())?;
                    ensure_len("PMSM xc0", 1, xc0.len())?;
                    let plant = build_pmsm(p)?;
                    let d = plant.disturbance().clone().with_schedule(schedule);
                    let plant = plant.with_disturbance(d)?;
                    let realization = match sc.controller {
                        ControllerKind::Full => Realization::Integrator,
                        ControllerKind::Error => Realization::Error,
                        ControllerKind::Simplified => {
                            return Err(Error::Config(
                                "the PMSM presets use the full controller ('full' or 'error')".into(),
                            ))
                        }
                    };
                    let lp = IacLoop::new(&plant, &pmsm_gains(p)?, realization)?
                        .with_state_names(&["i_q", "i_d", "omega"]);
                    let pred = lp.certificate().prediction(final_activity).cloned();
                    let start = lp.initial_state(&x0, &xc0);
                    (Arc::new(lp), start, pred)
                }
                PlantConfig::Manipulator(p) => {
                    if sc.controller != ControllerKind::Simplified {
                        return Err(Error::Config("the manipulator uses the 'simplified' controller".into()));
                    }
                    let sys = build_manipulator(p)?.with_schedule(schedule);
                    let lp = MechLoop::simplified(&TransformedMech::new(&sys), p.controller()?, &p.r_d_matrix())?
                        .with_names(&["theta_a", "theta_u"]);
                    mech_start(lp, &x0, &xc0, final_activity)?
                }
                PlantConfig::Vtol(p) => {
                    if sc.controller != ControllerKind::Full {
                        return Err(Error::Config("the VTOL uses the 'full' controller".into()));
                    }
                    let sys = build_vtol(p)?.with_schedule(schedule);
                    let lp = MechLoop::new(&TransformedMech::new(&sys), &p.gains()?)?
                        .with_names(&["x", "y", "theta"]);
                    mech_start(lp, &x0, &xc0, final_activity)?
                }
            };
        let mut scenario = Scenario::new(self.meta.name.clone(), dynamics, start, sc.t_end, sc.dt)?
            .with_stride(sc.stride)?
            .with_schedule(schedule);
        if let Some(p) = &prediction {
            scenario = scenario.with_expectation(p.clone(), sc.tol);
        }
        Ok(BuiltScenario {
            scenario,
            prediction,
        })
    }
}

type Started = (Arc<dyn Dynamics>, Vector, Option<EquilibriumPrediction>);

fn mech_start(lp: MechLoop, x0: &Vector, xc0: &Vector, active: crate::ph::Activity) -> Result<Started> {
    let l = lp.transformed().system().dof();
    let m = lp.transformed().system().inputs();
    ensure_len("mechanical x0 (q, p)", 2 * l, x0.len())?;
    ensure_len("xc0", m, xc0.len())?;
    let start = lp.initial_state(&x0.rows(0, l).clone_owned(), &x0.rows(l, l).clone_owned(), xc0);
    let pred = lp.certificate().prediction(active).cloned();
    Ok((Arc::new(lp), start, pred))
}
