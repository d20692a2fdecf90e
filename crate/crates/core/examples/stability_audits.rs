//! Runs every applicable seeded audit on the bundled presets and prints the
//! individual checks.

use phiac::app::audit_preset;
use phiac::systems::load_preset;
use phiac::verify::AuditOptions;

fn main() -> phiac::Result<()> {
    let opts = AuditOptions::default();
    let plan = [
        ("pmsm.default", &[1, 2, 3, 4][..]),
        ("manipulator.default", &[1, 2, 5][..]),
        ("vtol.paper", &[1, 2, 5][..]),
    ];
    let mut all = true;
    for (name, props) in plan {
        let preset = load_preset(name)?;
        for &prop in props {
            let report = audit_preset(&preset, prop, &opts)?;
            all &= report.passed;
            println!("== {name}, audit {prop}");
            print!("{}", report.to_text());
        }
    }
    println!("all audits passed: {all}");
    Ok(())
}
