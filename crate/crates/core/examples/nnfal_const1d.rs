//! Trains a neural surrogate of the constant system and attacks it to reach
//! `x >= 0.9` (the half-space `-x <= -0.9`), confirming each candidate by simulation.
//!
//! cargo run --release --example nnfal_const1d

use flexifal::dataset::generate_nn_dataset;
use flexifal::nnfal::{
    input_box, nnfal_run, train_surrogate, HalfSpace, NnfalConfig, ReachabilitySpec,
    SystemValidator, Target, TrainConfig,
};
use flexifal::scenario::Scenario;
use flexifal::systems::builtin;

fn main() -> flexifal::Result<()> {
    let scenario = Scenario::from_benchmark(&builtin("const1d")?);
    let data = generate_nn_dataset(&scenario, 200, 0)?;
    let train = TrainConfig {
        learning_rate: 1e-2,
        epochs: 40,
        ..TrainConfig::default()
    };
    let model = train_surrogate(&data, &scenario.search_box(), &[16, 16], &train)?;
    let summary = model.training.as_ref().expect("trained model");
    println!("trained {} epochs, best loss {:.2e}", summary.epochs_run, summary.best_loss);

    let input = input_box(&scenario.search_box(), 1.0);
    let reach_x = HalfSpace {
        coeffs: vec![-1.0],
        bound: -0.9,
    };
    let spec = ReachabilitySpec::new(input, vec![reach_x.clone()])?;
    let validator = SystemValidator {
        scenario,
        target: Target::Unsafe {
            set: vec![reach_x],
            any_time: false,
        },
    };
    let report = nnfal_run(&model, &spec, &validator, &NnfalConfig::default())?;
    println!(
        "{:?}: {} attacks, {} refinements",
        report.status, report.attacks, report.refinements
    );
    if let Some(ce) = &report.found {
        let end = ce.trajectory.state(ce.index)[0];
        println!("x0 = {:.4}, simulated x = {end:.4} at sample {}", ce.point.x0[0], ce.index);
    }
    Ok(())
}
