//! Simulates the bouncing ball and prints its trajectory as CSV.
//!
//! cargo run --example hybrid_simulation -- [x0] [v0]

use flexifal::scenario::Scenario;
use flexifal::systems::builtin;
use flexifal::types::PiecewiseConstantSignal;

fn main() -> flexifal::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<f64>());
    let x0 = args.next().transpose().ok().flatten().unwrap_or(0.4);
    let v0 = args.next().transpose().ok().flatten().unwrap_or(3.0);

    let bench = builtin("bouncing-ball")?;
    let scenario = Scenario::from_benchmark(&bench);
    let u = PiecewiseConstantSignal::empty(bench.horizon, 1)?;
    let traj = bench.system.simulate(&[x0, v0], &u, bench.horizon, bench.dt)?;

    let apex = traj.states().iter().map(|s| s[0]).fold(f64::MIN, f64::max);
    eprintln!("apex {apex:.4} m over {} samples", traj.len());
    eprintln!("search box {}", scenario.search_box());
    print!("{}", traj.to_csv());
    Ok(())
}
