//! Falsifies the bouncing-ball safety property with tree-guided sampling.
//!
//! cargo run --release --example dtfal_bouncing_ball -- [seed]

use flexifal::dtfal::{self, DtfalConfig};
use flexifal::scenario::Scenario;
use flexifal::stl;
use flexifal::systems::builtin;

fn main() -> flexifal::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let bench = builtin("bouncing-ball")?;
    let scenario = Scenario::from_benchmark(&bench);
    let formula = stl::parse(bench.spec("BB1").expect("catalog id"))?;

    let cfg = DtfalConfig {
        trajectories: 300,
        min_ce: 5,
        seed,
        ..DtfalConfig::default()
    };
    let report = dtfal::run(&scenario, &formula, &cfg)?;
    for epoch in &report.epochs {
        println!(
            "epoch {}: {} rows, {} leaves, {} regions explored, {} injected",
            epoch.epoch,
            epoch.dataset_rows,
            epoch.tree_leaves,
            epoch.leaves.len(),
            epoch.injected
        );
    }
    println!(
        "{:?} after {} simulations",
        report.status, report.simulations
    );
    for ce in &report.found {
        let x0 = &ce.point.x0;
        println!("  x0 = {:.4}, v0 = {:.4}, rho = {:.4}", x0[0], x0[1], ce.robustness);
    }
    Ok(())
}
