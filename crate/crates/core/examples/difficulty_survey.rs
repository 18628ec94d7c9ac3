//! Estimates the degree of difficulty (percentage of violating random
//! trajectories) of every built-in benchmark specification.
//!
//! cargo run --release --example difficulty_survey -- [N] [seed]

use flexifal::dataset::degree_of_difficulty;
use flexifal::scenario::Scenario;
use flexifal::stl;
use flexifal::systems::{builtin, builtin_names};

fn main() -> flexifal::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(2000);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);

    println!("{:<18} {:<6} {:>8}", "system", "spec", "DoD %");
    for name in builtin_names() {
        let bench = builtin(name)?;
        let scenario = Scenario::from_benchmark(&bench);
        for (id, text) in &bench.specs {
            let formula = stl::parse(text)?;
            let dod = degree_of_difficulty(&scenario, &formula, n, seed)?;
            println!("{name:<18} {id:<6} {dod:>8.2}");
        }
    }
    Ok(())
}
