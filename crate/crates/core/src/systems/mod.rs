//! Parameterized builders for a permanent magnet synchronous motor, a
//! two-link manipulator and a damped VTOL aircraft, plus named presets.

mod manipulator;
mod pmsm;
mod presets;
mod vtol;

pub use manipulator::{build_manipulator, ManipulatorArm, ManipulatorParams};
pub use pmsm::{build_pmsm, build_pmsm_with_coupling, pmsm_gains, PmsmParams};
pub use presets::{
    list_presets, load_preset, BuiltScenario, ControllerKind, PlantConfig, Preset, PresetMeta, Provenance,
    ScenarioConfig, PRESET_NAMES,
};
pub use vtol::{build_vtol, VtolModel, VtolParams};

#[cfg(test)]
mod tests;
