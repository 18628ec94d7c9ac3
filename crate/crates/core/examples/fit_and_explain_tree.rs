//! Builds a robustness dataset for the bouncing ball, fits a regression tree
//! and prints the explanation and sampling box of the most promising leaf.
//!
//! cargo run --release --example fit_and_explain_tree -- [N] [seed]

use flexifal::dataset::generate_robustness_dataset;
use flexifal::dtree::{explanation_box, DecisionTree, TreeParams};
use flexifal::scenario::Scenario;
use flexifal::stl;
use flexifal::systems::builtin;

fn main() -> flexifal::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(300);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);

    let bench = builtin("bouncing-ball")?;
    let scenario = Scenario::from_benchmark(&bench);
    let formula = stl::parse(bench.spec("BB1").expect("catalog id"))?;
    let generated = generate_robustness_dataset(&scenario, &formula, n, seed)?;
    println!("{} rows, {} violating", generated.data.len(), generated.data.violations());

    let params = TreeParams {
        max_depth: Some(4),
        ..TreeParams::default()
    };
    let tree = DecisionTree::fit(&generated.data, &params)?;
    print!("{}", tree.render());

    let falsifying = tree.find_falsifying_leaves();
    let (kind, leaves) = if falsifying.is_empty() {
        ("nearest", tree.find_nearest_leaves()?)
    } else {
        ("falsifying", falsifying)
    };
    let leaf = leaves[0];
    let explanation = tree.gen_explanation(leaf)?;
    println!(
        "{kind} leaf #{leaf}: {}",
        explanation.display(tree.feature_names())
    );
    match explanation_box(&explanation, &scenario.search_box()) {
        Some(region) => println!("sampling box {region}"),
        None => println!("explanation does not meet the search box"),
    }
    Ok(())
}
