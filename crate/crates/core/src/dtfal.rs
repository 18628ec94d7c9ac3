//! Decision-tree guided falsification.
//!
//! A regression tree is fitted to robustness-labelled random runs. Leaves
//! predicting a violation (or, failing that, the leaves closest to zero) are
//! turned into boxes of the search space, sampled and simulated. Every new
//! labelled run is fed back before the next fit.

use std::time::{Duration, Instant};

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{generate_robustness_dataset, RobustnessDataset};
use crate::dtree::{explanation_box, DecisionTree, TreeParams};
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::scenario::Scenario;
use crate::stl::{self, Formula};
use crate::types::{Counterexample, Hyperbox};

/// Stream tag for samples drawn inside explanation boxes.
const LEAF_STREAM: u64 = 1;
/// Stream tag for uniform rows injected after an epoch without growth.
const INJECT_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DtfalConfig {
    /// Random runs in the initial dataset (N).
    pub trajectories: usize,
    /// Maximum number of fit-and-sample rounds.
    pub epochs: usize,
    /// Simulations per explanation box (R).
    pub samples: usize,
    pub min_ce: usize,
    pub seed: u64,
    /// Leaves sampled per epoch, most negative prediction first.
    pub leaf_cap: usize,
    pub tree: TreeParams,
}

impl Default for DtfalConfig {
    fn default() -> Self {
        DtfalConfig {
            trajectories: 500,
            epochs: 10,
            samples: 20,
            min_ce: 1,
            seed: 0,
            leaf_cap: 8,
            tree: TreeParams::default(),
        }
    }
}

impl DtfalConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("trajectories", self.trajectories),
            ("epochs", self.epochs),
            ("samples", self.samples),
            ("min_ce", self.min_ce),
            ("leaf_cap", self.leaf_cap),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("dtfal.{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Falsified,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafDiagnostic {
    pub rank: usize,
    pub leaf: usize,
    pub predicted_rho: f64,
    pub explanation: String,
    /// `None` when the explanation does not meet the search box.
    pub region: Option<Hyperbox>,
    pub simulations: usize,
    pub blowups: usize,
    pub counterexamples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochDiagnostic {
    pub epoch: usize,
    pub dataset_rows: usize,
    pub tree_leaves: usize,
    pub tree_depth: usize,
    /// False when no leaf predicted a violation and the nearest leaves were used.
    pub falsifying_leaves: bool,
    pub leaves: Vec<LeafDiagnostic>,
    pub injected: usize,
}

/// A counterexample as written to the report. The trajectory itself is
/// stored elsewhere; `trajectory` names that file when one was written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CeRecord {
    pub features: Vec<f64>,
    pub robustness: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DtfalReport {
    pub status: Status,
    pub system: String,
    pub formula: String,
    pub config: DtfalConfig,
    pub simulations: usize,
    pub epochs_used: usize,
    pub counterexamples: Vec<CeRecord>,
    pub epochs: Vec<EpochDiagnostic>,
    /// Full counterexamples with trajectories, in discovery order.
    #[serde(skip)]
    pub found: Vec<Counterexample>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl DtfalReport {
    pub fn falsified(&self) -> bool {
        self.status == Status::Falsified
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Outcome of simulating a batch of uniform draws from one box.
#[derive(Debug, Clone, Default)]
pub struct Batch {
    /// Labelled rows of the runs that completed, in draw order.
    pub rows: Vec<(Vec<f64>, f64)>,
    pub counterexamples: Vec<Counterexample>,
    pub simulations: usize,
    pub blowups: usize,
}

/// Draws `r` points uniformly from `region` (a box over flattened features),
/// simulates each and labels it with `ρ(φ, Γ, 0)`. Draw `s` uses the stream
/// `key ++ [s]`. Runs that blow up are counted but produce no row.
pub fn sample_and_simulate(
    scenario: &Scenario,
    region: &Hyperbox,
    formula: &Formula,
    r: usize,
    seed: u64,
    key: &[u64],
) -> Result<Batch> {
    if r == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    let outcomes: Vec<Option<Counterexample>> = (0..r as u64)
        .into_par_iter()
        .map(|s| {
            let mut path = key.to_vec();
            path.push(s);
            let features = region.sample(&mut stream(seed, &path));
            match scenario.simulate_features(&features) {
                Ok((point, trajectory)) => {
                    let robustness = stl::robustness(formula, &trajectory, 0.0)?;
                    Ok(Some(Counterexample {
                        point,
                        trajectory,
                        robustness,
                    }))
                }
                Err(Error::NumericalBlowUp { index }) => {
                    warn!("sample {key:?}/{s}: blow-up at step {index}, row dropped");
                    Ok(None)
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let mut batch = Batch {
        simulations: r,
        ..Batch::default()
    };
    for run in outcomes {
        let Some(run) = run else {
            batch.blowups += 1;
            continue;
        };
        batch.rows.push((run.point.flatten(), run.robustness));
        if run.robustness < 0.0 {
            batch.counterexamples.push(run);
        }
    }
    Ok(batch)
}

/// Runs the falsification loop until `min_ce` counterexamples are found or
/// the epochs are used up.
pub fn run(scenario: &Scenario, formula: &Formula, cfg: &DtfalConfig) -> Result<DtfalReport> {
    cfg.validate()?;
    let started = Instant::now();
    let generated = generate_robustness_dataset(scenario, formula, cfg.trajectories, cfg.seed)?;
    let mut data = generated.data;
    let mut simulations = generated.simulations;
    let search = scenario.search_box();

    let mut report = DtfalReport {
        status: Status::BudgetExhausted,
        system: scenario.system.name().to_string(),
        formula: formula.to_string(),
        config: cfg.clone(),
        simulations: 0,
        epochs_used: 0,
        counterexamples: Vec::new(),
        epochs: Vec::new(),
        found: Vec::new(),
        wall_time: Duration::ZERO,
    };

    'epochs: for epoch in 0..cfg.epochs {
        report.epochs_used = epoch + 1;
        let tree = DecisionTree::fit(&data, &cfg.tree)?;
        let mut leaves = tree.find_falsifying_leaves();
        let falsifying_leaves = !leaves.is_empty();
        if !falsifying_leaves {
            leaves = tree.find_nearest_leaves()?;
        }
        leaves.truncate(cfg.leaf_cap);
        debug!(
            "epoch {epoch}: {} rows, {} leaves, sampling {}",
            data.len(),
            tree.leaves().len(),
            leaves.len()
        );

        let mut diag = EpochDiagnostic {
            epoch,
            dataset_rows: data.len(),
            tree_leaves: tree.leaves().len(),
            tree_depth: tree.depth(),
            falsifying_leaves,
            leaves: Vec::new(),
            injected: 0,
        };
        let mut grown = 0;

        for (rank, &leaf) in leaves.iter().enumerate() {
            let exp = tree.gen_explanation(leaf)?;
            let mut leaf_diag = LeafDiagnostic {
                rank,
                leaf,
                predicted_rho: tree.leaf_value(leaf).expect("leaf id"),
                explanation: exp.display(tree.feature_names()).to_string(),
                region: explanation_box(&exp, &search),
                simulations: 0,
                blowups: 0,
                counterexamples: 0,
            };
            let Some(region) = leaf_diag.region.clone() else {
                debug!("epoch {epoch}: leaf {leaf} has an empty region, skipped");
                diag.leaves.push(leaf_diag);
                continue;
            };
            let batch = sample_and_simulate(
                scenario,
                &region,
                formula,
                cfg.samples,
                cfg.seed,
                &[LEAF_STREAM, epoch as u64, rank as u64],
            )?;
            simulations += batch.simulations;
            leaf_diag.simulations = batch.simulations;
            leaf_diag.blowups = batch.blowups;
            leaf_diag.counterexamples = batch.counterexamples.len();
            grown += batch.rows.len();
            extend(&mut data, batch.rows);
            report.found.extend(batch.counterexamples);
            diag.leaves.push(leaf_diag);

            if report.found.len() >= cfg.min_ce {
                report.status = Status::Falsified;
                report.epochs.push(diag);
                break 'epochs;
            }
        }

        if grown == 0 {
            let batch = sample_and_simulate(
                scenario,
                &search,
                formula,
                cfg.samples,
                cfg.seed,
                &[INJECT_STREAM, epoch as u64],
            )?;
            simulations += batch.simulations;
            diag.injected = batch.rows.len();
            extend(&mut data, batch.rows);
        }
        report.epochs.push(diag);
    }

    report.simulations = simulations;
    report.counterexamples = report
        .found
        .iter()
        .map(|ce| CeRecord {
            features: ce.point.flatten(),
            robustness: ce.robustness,
            trajectory: None,
        })
        .collect();
    report.wall_time = started.elapsed();
    info!(
        "dtfal: {:?} after {} epochs, {} simulations, {} counterexamples",
        report.status,
        report.epochs_used,
        report.simulations,
        report.found.len()
    );
    Ok(report)
}

fn extend(data: &mut RobustnessDataset, rows: Vec<(Vec<f64>, f64)>) {
    for (features, rho) in rows {
        data.push(features, rho);
    }
}
