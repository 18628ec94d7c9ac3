//! Randomly simulated datasets: state samples for network surrogates,
//! robustness labels for tree surrogates, feature scaling and the
//! degree-of-difficulty estimate.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::scenario::Scenario;
use crate::stl::{self, Formula};
use crate::types::{join_row, read_table, Hyperbox, SearchLayout, SearchPoint, Trajectory};

/// Attempts per row before a persistent blow-up aborts generation.
pub const MAX_ATTEMPTS: u64 = 8;

/// Stream tag for dataset rows; keeps them disjoint from search-time draws.
pub(crate) const DATASET_STREAM: u64 = 0;

/// One sampled trajectory. `simulations` counts the attempts it took.
#[derive(Debug, Clone)]
pub struct SampledRun {
    pub point: SearchPoint,
    pub trajectory: Trajectory,
    pub simulations: usize,
}

/// Samples and simulates row `index`, resampling on numerical blow-up.
pub fn sample_run(scenario: &Scenario, seed: u64, index: u64) -> Result<SampledRun> {
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = stream(seed, &[DATASET_STREAM, index, attempt]);
        let point = scenario.sample(&mut rng);
        match scenario.simulate(&point) {
            Ok(trajectory) => {
                return Ok(SampledRun {
                    point,
                    trajectory,
                    simulations: attempt as usize + 1,
                })
            }
            Err(Error::NumericalBlowUp { index: at }) => {
                warn!("row {index}: blow-up at sample {at}, resampling (attempt {attempt})");
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::simulation(format!(
        "row {index}: numerical blow-up on {MAX_ATTEMPTS} consecutive draws"
    )))
}

fn sample_runs(scenario: &Scenario, n: usize, seed: u64) -> Result<Vec<SampledRun>> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    (0..n as u64)
        .into_par_iter()
        .map(|i| sample_run(scenario, seed, i))
        .collect()
}

fn check_window(formula: &Formula, horizon: f64) -> Result<()> {
    let need = formula.lookahead();
    if need > horizon * (1.0 + 1e-12) {
        return Err(Error::HorizonInsufficient {
            time: need,
            horizon,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Nn,
    Rob,
}

/// Everything needed to regenerate a dataset, stored next to its CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub kind: DatasetKind,
    pub system: String,
    pub seed: u64,
    pub trajectories: usize,
    pub init: Hyperbox,
    pub input: Hyperbox,
    pub segments: usize,
    pub horizon: f64,
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
    pub var_names: Vec<String>,
}

impl DatasetMeta {
    pub fn describe(
        kind: DatasetKind,
        scenario: &Scenario,
        seed: u64,
        trajectories: usize,
        formula: Option<&Formula>,
    ) -> Self {
        DatasetMeta {
            kind,
            system: scenario.system.name().to_string(),
            seed,
            trajectories,
            init: scenario.init.clone(),
            input: scenario.input.clone(),
            segments: scenario.segments,
            horizon: scenario.horizon,
            dt: scenario.dt,
            formula: formula.map(|f| f.to_string()),
            var_names: scenario.system.var_names().to_vec(),
        }
    }

    pub fn layout(&self) -> Result<SearchLayout> {
        SearchLayout::new(self.init.dim(), self.input.dim(), self.segments, self.horizon)
    }

    pub fn sidecar_path(csv: &Path) -> PathBuf {
        let mut name = csv.as_os_str().to_owned();
        name.push(".meta.json");
        PathBuf::from(name)
    }

    pub fn save(&self, csv: &Path) -> Result<()> {
        let path = Self::sidecar_path(csv);
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(csv: &Path) -> Result<Self> {
        let path = Self::sidecar_path(csv);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// One sample `(x0, u, t, y = Γ(t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct NnRow {
    /// Flattened search point `[x0, u_0, .., u_{k-1}]`.
    pub features: Vec<f64>,
    pub t: f64,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnDataset {
    pub layout: SearchLayout,
    pub output_dim: usize,
    pub rows: Vec<NnRow>,
}

impl NnDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Network inputs `[x0, u, t]`.
    pub fn inputs(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                let mut v = r.features.clone();
                v.push(r.t);
                v
            })
            .collect()
    }

    pub fn targets(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.y.clone()).collect()
    }

    pub fn header(&self) -> Vec<String> {
        let mut names = self.layout.feature_names();
        names.push("t".into());
        names.extend((0..self.output_dim).map(|i| format!("y_{i}")));
        names
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        let mut row = Vec::new();
        for r in &self.rows {
            row.clear();
            row.extend_from_slice(&r.features);
            row.push(r.t);
            row.extend_from_slice(&r.y);
            join_row(&mut out, &row);
            out.push('\n');
        }
        out
    }

    pub fn from_csv(layout: SearchLayout, output_dim: usize, text: &str) -> Result<Self> {
        let (header, table) = read_table(text)?;
        let shell = NnDataset {
            layout,
            output_dim,
            rows: Vec::new(),
        };
        if header != shell.header() {
            return Err(Error::Domain(format!(
                "CSV header {:?} does not match the dataset layout {:?}",
                header,
                shell.header()
            )));
        }
        let f = layout.feature_count();
        let rows = table
            .into_iter()
            .map(|row| NnRow {
                features: row[..f].to_vec(),
                t: row[f],
                y: row[f + 1..].to_vec(),
            })
            .collect();
        Ok(NnDataset { rows, ..shell })
    }
}

/// Simulates `n` random points and records every sample of every trajectory.
pub fn generate_nn_dataset(scenario: &Scenario, n: usize, seed: u64) -> Result<NnDataset> {
    let runs = sample_runs(scenario, n, seed)?;
    let output_dim = runs[0].trajectory.dim();
    let mut rows = Vec::with_capacity(n * runs[0].trajectory.len());
    for run in runs {
        let features = run.point.flatten();
        for (j, y) in run.trajectory.states().iter().enumerate() {
            rows.push(NnRow {
                features: features.clone(),
                t: run.trajectory.time(j),
                y: y.clone(),
            });
        }
    }
    Ok(NnDataset {
        layout: scenario.layout(),
        output_dim,
        rows,
    })
}

/// Flattened search points labelled with the robustness of their trajectory
/// at time 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessDataset {
    pub layout: SearchLayout,
    pub features: Vec<Vec<f64>>,
    pub rho: Vec<f64>,
}

impl RobustnessDataset {
    pub fn new(layout: SearchLayout) -> Self {
        RobustnessDataset {
            layout,
            features: Vec::new(),
            rho: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn push(&mut self, features: Vec<f64>, rho: f64) {
        debug_assert_eq!(features.len(), self.layout.feature_count());
        self.features.push(features);
        self.rho.push(rho);
    }

    pub fn violations(&self) -> usize {
        self.rho.iter().filter(|r| **r < 0.0).count()
    }

    pub fn header(&self) -> Vec<String> {
        let mut names = self.layout.feature_names();
        names.push("rho".into());
        names
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for (f, r) in self.features.iter().zip(&self.rho) {
            join_row(&mut out, f);
            write!(out, ",{r}").unwrap();
            out.push('\n');
        }
        out
    }

    pub fn from_csv(layout: SearchLayout, text: &str) -> Result<Self> {
        let (header, table) = read_table(text)?;
        let mut data = RobustnessDataset::new(layout);
        if header != data.header() {
            return Err(Error::Domain(format!(
                "CSV header {:?} does not match the dataset layout {:?}",
                header,
                data.header()
            )));
        }
        for mut row in table {
            let rho = row.pop().expect("header has a rho column");
            data.push(row, rho);
        }
        Ok(data)
    }
}

/// Labelled dataset plus the number of simulations spent producing it.
#[derive(Debug, Clone)]
pub struct Generated {
    pub data: RobustnessDataset,
    pub simulations: usize,
}

/// Simulates `n` uniformly drawn points and labels each with `ρ(φ, Γ, 0)`.
pub fn generate_robustness_dataset(
    scenario: &Scenario,
    formula: &Formula,
    n: usize,
    seed: u64,
) -> Result<Generated> {
    check_window(formula, scenario.horizon)?;
    let labelled: Vec<(Vec<f64>, f64, usize)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let run = sample_run(scenario, seed, i)?;
            let rho = stl::robustness(formula, &run.trajectory, 0.0)?;
            Ok((run.point.flatten(), rho, run.simulations))
        })
        .collect::<Result<_>>()?;
    if labelled.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut data = RobustnessDataset::new(scenario.layout());
    let mut simulations = 0;
    for (features, rho, sims) in labelled {
        data.push(features, rho);
        simulations += sims;
    }
    Ok(Generated { data, simulations })
}

/// Percentage of `n` random trajectories that violate `formula`.
pub fn degree_of_difficulty(
    scenario: &Scenario,
    formula: &Formula,
    n: usize,
    seed: u64,
) -> Result<f64> {
    let gen = generate_robustness_dataset(scenario, formula, n, seed)?;
    Ok(100.0 * gen.data.violations() as f64 / gen.data.len() as f64)
}

/// Per-feature bounds for MinMax scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl ScalingParams {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyDataset)?;
        let mut mins = first.clone();
        let mut maxs = first.clone();
        for row in rows {
            if row.len() != mins.len() {
                return Err(Error::dim("scaled row", mins.len(), row.len()));
            }
            for (i, &v) in row.iter().enumerate() {
                mins[i] = mins[i].min(v);
                maxs[i] = maxs[i].max(v);
            }
        }
        Ok(ScalingParams { mins, maxs })
    }

    /// Bounds taken directly from a box.
    pub fn from_box(b: &Hyperbox) -> Self {
        ScalingParams {
            mins: b.lows().to_vec(),
            maxs: b.highs().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.mins.len()
    }

    pub fn is_degenerate(&self, i: usize) -> bool {
        self.maxs[i] <= self.mins[i]
    }

    pub fn scale(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| {
                if self.is_degenerate(i) {
                    0.0
                } else {
                    (v - self.mins[i]) / (self.maxs[i] - self.mins[i])
                }
            })
            .collect()
    }

    /// Degenerate features map back to their single observed value.
    pub fn unscale(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| {
                if self.is_degenerate(i) {
                    self.mins[i]
                } else {
                    self.mins[i] + v * (self.maxs[i] - self.mins[i])
                }
            })
            .collect()
    }

    /// Derivative of each unscaled coordinate with respect to its scaled one.
    pub fn spans(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                if self.is_degenerate(i) {
                    0.0
                } else {
                    self.maxs[i] - self.mins[i]
                }
            })
            .collect()
    }
}

/// MinMax-scales `rows` into `[0, 1]` per feature, fitting bounds unless
/// `params` are supplied. Constant features scale to 0.
pub fn minmax_scale(
    rows: &[Vec<f64>],
    params: Option<&ScalingParams>,
) -> Result<(Vec<Vec<f64>>, ScalingParams)> {
    let params = match params {
        Some(p) => p.clone(),
        None => ScalingParams::fit(rows)?,
    };
    for i in (0..params.dim()).filter(|&i| params.is_degenerate(i)) {
        warn!("feature {i} is constant ({}); scaling it to 0", params.mins[i]);
    }
    let scaled = rows
        .iter()
        .map(|r| {
            if r.len() != params.dim() {
                return Err(Error::dim("scaled row", params.dim(), r.len()));
            }
            Ok(params.scale(r))
        })
        .collect::<Result<_>>()?;
    Ok((scaled, params))
}

pub fn minmax_unscale(rows: &[Vec<f64>], params: &ScalingParams) -> Vec<Vec<f64>> {
    rows.iter().map(|r| params.unscale(r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::builtin;
    use proptest::prelude::*;

    fn scenario(name: &str) -> Scenario {
        Scenario::from_benchmark(&builtin(name).unwrap())
    }

    fn with_steps(s: Scenario, segments: usize, horizon: f64, dt: f64) -> Scenario {
        Scenario::new(s.system, s.init, s.input, segments, horizon, dt).unwrap()
    }

    #[test]
    fn nn_row_count() {
        let s = with_steps(scenario("single-integrator"), 3, 9.0, 1.0);
        let d = generate_nn_dataset(&s, 2, 1).unwrap();
        assert_eq!(d.len(), 20);
        assert_eq!(d.inputs()[0].len(), 1 + 3 + 1);
    }

    #[test]
    fn first_sample_is_initial_state() {
        for name in ["single-integrator", "bouncing-ball", "two-tanks"] {
            let s = scenario(name);
            let d = generate_nn_dataset(&s, 3, 9).unwrap();
            for r in d.rows.iter().filter(|r| r.t == 0.0) {
                assert_eq!(&r.y[..s.init.dim()], &r.features[..s.init.dim()], "{name}");
            }
        }
    }

    #[test]
    fn single_integrator_unit_input() {
        let s = scenario("single-integrator");
        let layout = s.layout();
        let point = layout.unflatten(&[0.0, 1.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        let traj = s.simulate(&point).unwrap();
        assert!((traj.state(50)[0] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn const_labels_are_closed_form() {
        let s = scenario("const1d");
        let f = stl::parse("G[0,1] x < 0.5").unwrap();
        let gen = generate_robustness_dataset(&s, &f, 100, 3).unwrap();
        assert_eq!(gen.data.len(), 100);
        assert_eq!(gen.simulations, 100);
        for (x, rho) in gen.data.features.iter().zip(&gen.data.rho) {
            assert_eq!(*rho, 0.5 - x[0]);
        }
    }

    #[test]
    fn vacuous_and_hopeless_specs() {
        let s = scenario("const1d");
        let safe = stl::parse("G[0,1] x < 1000000").unwrap();
        let gen = generate_robustness_dataset(&s, &safe, 50, 1).unwrap();
        assert!(gen.data.rho.iter().all(|r| *r > 999_000.0));
        assert_eq!(degree_of_difficulty(&s, &safe, 50, 1).unwrap(), 0.0);
        let doomed = stl::parse("F[0,1] x > 5").unwrap();
        assert_eq!(degree_of_difficulty(&s, &doomed, 50, 1).unwrap(), 100.0);
    }

    #[test]
    fn long_windows_are_rejected() {
        let s = scenario("const1d");
        let f = stl::parse("G[0,2] x < 0.5").unwrap();
        assert!(matches!(
            generate_robustness_dataset(&s, &f, 10, 1),
            Err(Error::HorizonInsufficient { .. })
        ));
    }

    #[test]
    fn labels_survive_resimulation() {
        let s = scenario("two-tanks");
        let f = stl::parse(builtin("two-tanks").unwrap().spec("TT3").unwrap()).unwrap();
        let gen = generate_robustness_dataset(&s, &f, 20, 5).unwrap();
        for (x, rho) in gen.data.features.iter().zip(&gen.data.rho) {
            let (_, traj) = s.simulate_features(x).unwrap();
            assert_eq!(stl::robustness(&f, &traj, 0.0).unwrap(), *rho);
        }
    }

    #[test]
    fn generation_is_reproducible_across_pools() {
        let s = scenario("oscillator");
        let f = stl::parse("G[0,10] p < 0.6").unwrap();
        let pool = |threads| rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let a = pool(1).install(|| generate_robustness_dataset(&s, &f, 40, 77).unwrap());
        let b = pool(4).install(|| generate_robustness_dataset(&s, &f, 40, 77).unwrap());
        assert_eq!(a.data.to_csv(), b.data.to_csv());
        let c = generate_robustness_dataset(&s, &f, 40, 78).unwrap();
        assert_ne!(a.data.to_csv(), c.data.to_csv());
    }

    #[test]
    fn csv_round_trips() {
        let s = scenario("single-integrator");
        let nn = generate_nn_dataset(&s, 2, 4).unwrap();
        let back = NnDataset::from_csv(nn.layout, nn.output_dim, &nn.to_csv()).unwrap();
        assert_eq!(back, nn);

        let f = stl::parse("G[0,5] x < 3").unwrap();
        let rob = generate_robustness_dataset(&s, &f, 10, 4).unwrap().data;
        assert!(rob.to_csv().starts_with("x0_0,u_0_0,u_1_0,u_2_0,u_3_0,u_4_0,rho\n"));
        let back = RobustnessDataset::from_csv(rob.layout, &rob.to_csv()).unwrap();
        assert_eq!(back, rob);
    }

    #[test]
    fn sidecar_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("data.csv");
        let s = scenario("bouncing-ball");
        let f = stl::parse("G[0,10] x < 3").unwrap();
        let meta = DatasetMeta::describe(DatasetKind::Rob, &s, 9, 30, Some(&f));
        meta.save(&csv).unwrap();
        assert!(dir.path().join("data.csv.meta.json").exists());
        assert_eq!(DatasetMeta::load(&csv).unwrap(), meta);
        assert_eq!(meta.layout().unwrap(), s.layout());
    }

    #[test]
    fn minmax_examples() {
        let rows = vec![vec![0.0, 7.0], vec![5.0, 7.0], vec![10.0, 7.0]];
        let (scaled, params) = minmax_scale(&rows, None).unwrap();
        assert_eq!(scaled, vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![1.0, 0.0]]);
        assert!(params.is_degenerate(1));
        assert_eq!(minmax_unscale(&scaled, &params), rows);
        let (again, _) = minmax_scale(&[vec![2.5, 1.0]], Some(&params)).unwrap();
        assert_eq!(again, vec![vec![0.25, 0.0]]);
    }

    proptest! {
        #[test]
        fn minmax_inverse(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 1..20)) {
            let (scaled, params) = minmax_scale(&rows, None).unwrap();
            for r in &scaled {
                prop_assert!(r.iter().all(|v| (0.0..=1.0).contains(v)));
            }
            let back = minmax_unscale(&scaled, &params);
            for (a, b) in back.iter().flatten().zip(rows.iter().flatten()) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }
}
