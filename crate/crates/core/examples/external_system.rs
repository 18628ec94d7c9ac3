//! Drives an external simulator process. The child reads one JSON request on
//! stdin and prints `time,var...` CSV. Here the child is a small shell script
//! for a free-falling mass.
//!
//! cargo run --example external_system

use std::os::unix::fs::PermissionsExt;

use flexifal::stl;
use flexifal::systems::{ExternalConfig, ExternalSystem, System};
use flexifal::types::PiecewiseConstantSignal;

const SCRIPT: &str = r#"#!/bin/sh
# request: {"x0":[h],"u":[],"T":T,"dt":dt}
python3 -c '
import json, sys
r = json.load(sys.stdin)
h, T, dt = r["x0"][0], r["T"], r["dt"]
print("time,h")
for i in range(round(T / dt) + 1):
    t = i * dt
    print(f"{t!r},{h - 4.905 * t * t!r}")
'
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("flexifal-external-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let program = dir.join("drop.sh");
    std::fs::write(&program, SCRIPT)?;
    std::fs::set_permissions(&program, std::fs::Permissions::from_mode(0o755))?;

    let system = ExternalSystem::new(ExternalConfig::new(&program, 1, 0));
    let u = PiecewiseConstantSignal::empty(1.0, 1)?;
    let traj = system.simulate(&[10.0], &u, 1.0, 0.1)?;
    println!("variables {:?}, {} samples", system.var_names(), traj.len());

    let formula = stl::parse("G[0,1] h > 6")?;
    println!("rho(`{formula}`) = {:.4}", stl::robustness(&formula, &traj, 0.0)?);
    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}
