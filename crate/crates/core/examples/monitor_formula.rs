//! Parses an STL formula and evaluates its robustness along a hand-built
//! trajectory.
//!
//! cargo run --example monitor_formula

use flexifal::stl;
use flexifal::types::Trajectory;

fn main() -> flexifal::Result<()> {
    // a car that accelerates and then brakes hard
    let speeds = [10.0, 14.0, 18.0, 21.0, 19.0, 12.0, 6.0, 3.0];
    let states = speeds.iter().map(|&v| vec![v]).collect();
    let traj = Trajectory::new(1.0, vec!["speed".into()], states)?;

    for text in [
        "G[0,7] speed < 25",
        "G[0,7] speed < 20",
        "F[0,3] speed > 20",
        "(speed > 5) U[0,7] (speed < 4)",
    ] {
        let formula = stl::parse(text)?;
        let verdict = stl::check(&formula, &traj, 0.0)?;
        println!(
            "{text:<32} rho = {:>6.2}  satisfied = {}",
            verdict.robustness, verdict.satisfied
        );
    }

    let formula = stl::parse("speed > 15")?;
    let trace = stl::robustness_trace(&formula, &traj)?;
    println!("pointwise robustness of `{formula}`: {trace:?}");
    Ok(())
}
