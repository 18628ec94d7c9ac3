//! Command-line front end.
//!
//! Exit codes: 0 on success (or a falsified specification), 2 when a search
//! exhausted its budget, 1 on any error.

mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::{
    generate_nn_dataset, generate_robustness_dataset, degree_of_difficulty, DatasetKind,
    DatasetMeta, NnDataset, RobustnessDataset,
};
use crate::dtfal::{self, DtfalReport};
use crate::dtree::{DecisionTree, TreeParams};
use crate::error::{Error, Result};
use crate::nnfal::{
    input_box, nnfal_run, train_surrogate, Method, NnfalReport, ReachabilitySpec, Surrogate,
    SystemValidator, Target,
};
use crate::stl;
use crate::systems::SimRequest;
use crate::types::{counterexamples_to_csv, Trajectory};

pub use config::{FileConfig, Settings};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_EXHAUSTED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "flexifal", version, about = "Surrogate-guided falsification of STL safety specifications")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Default, Args)]
pub struct GlobalArgs {
    /// Built-in system name, or `exec:PATH` for an external simulator.
    #[arg(long, global = true)]
    pub system: Option<String>,
    /// STL formula: a catalog id of the system, a file, or formula text.
    #[arg(long, global = true)]
    pub spec: Option<String>,
    /// Initial-state box, `lo:hi,lo:hi,...`.
    #[arg(long, global = true)]
    pub init: Option<String>,
    /// Input-value box, `lo:hi,...`.
    #[arg(long = "input-box", global = true)]
    pub input_box: Option<String>,
    /// Number of piecewise-constant input segments.
    #[arg(short = 'k', long = "segments", global = true)]
    pub segments: Option<usize>,
    /// Time horizon T.
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
    /// Sampling step.
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Master seed (default 0).
    #[arg(long, env = "FLEXIFAL_SEED", global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: logical cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// TOML file with the same keys as the flags plus strategy tables.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataMode {
    Nn,
    Rob,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate random runs and write a dataset CSV with a metadata sidecar.
    GenData {
        /// Dataset kind: `rob` (flattened point, ρ) or `nn` (point, time, state).
        #[arg(long, value_enum)]
        mode: DataMode,
        /// Number of random runs N.
        #[arg(short = 'N', long = "trajectories", default_value_t = 1000)]
        trajectories: usize,
        /// Output file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a regression tree to a robustness dataset.
    FitTree {
        /// Dataset CSV; its `.meta.json` sidecar must sit next to it.
        #[arg(long)]
        data: PathBuf,
        /// Output file.
        #[arg(long)]
        out: PathBuf,
        /// Minimum rows for a node to be split.
        #[arg(long)]
        min_samples_split: Option<usize>,
        /// Minimum rows on each side of a split.
        #[arg(long)]
        min_samples_leaf: Option<usize>,
        /// Maximum tree depth.
        #[arg(long)]
        max_depth: Option<usize>,
    },
    /// Print a tree and the explanations of its falsifying (or nearest) leaves.
    DumpTree {
        /// Tree JSON written by `fit-tree`.
        #[arg(long)]
        tree: PathBuf,
        /// Explain only this leaf.
        #[arg(long)]
        leaf: Option<usize>,
    },
    /// Decision-tree guided falsification.
    Dtfal(DtfalArgs),
    /// Train a network surrogate on a state dataset.
    TrainNn(TrainArgs),
    /// Attack a network surrogate and validate candidates on the system.
    Nnfal(NnfalArgs),
    /// Robustness of a trajectory CSV.
    Monitor {
        /// Trajectory CSV with a leading `time` column.
        #[arg(long)]
        traj: PathBuf,
        /// Evaluation time.
        #[arg(long, default_value_t = 0.0)]
        at: f64,
    },
    /// Degree of difficulty: percentage of violating random runs.
    Dod {
        /// Number of random runs N.
        #[arg(short = 'N', long = "trajectories", default_value_t = 2000)]
        trajectories: usize,
    },
    /// Answer one simulation request (JSON) with a trajectory CSV.
    Simulate {
        /// Request file, or `-` for stdin.
        #[arg(long)]
        request: String,
    },
}

#[derive(Debug, Args)]
pub struct DtfalArgs {
    /// Initial dataset size N.
    #[arg(short = 'N', long = "trajectories")]
    pub trajectories: Option<usize>,
    /// Samples R drawn per explained leaf.
    #[arg(short = 'R', long = "samples")]
    pub samples: Option<usize>,
    /// Maximum number of fit-explain-sample rounds.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Stop once this many counterexamples are found.
    #[arg(long)]
    pub min_ce: Option<usize>,
    /// Leaves explored per epoch.
    #[arg(long)]
    pub leaf_cap: Option<usize>,
    /// Minimum rows on each side of a split.
    #[arg(long)]
    pub min_samples_leaf: Option<usize>,
    /// Maximum tree depth.
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Report JSON (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Counterexample table: flattened point and robustness per row.
    #[arg(long)]
    pub ce_csv: Option<PathBuf>,
    /// Long-format time series of all counterexample trajectories.
    #[arg(long)]
    pub plot_csv: Option<PathBuf>,
    /// Directory for one trajectory CSV per counterexample.
    #[arg(long)]
    pub traj_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset CSV; its `.meta.json` sidecar must sit next to it.
    #[arg(long)]
    pub data: PathBuf,
    /// Hidden layer widths, e.g. `64,64,64`.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    /// Adam learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Mini-batch size.
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Training epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Epochs without validation improvement before stopping.
    #[arg(long)]
    pub patience: Option<usize>,
    /// Share of rows held out for early stopping.
    #[arg(long)]
    pub validation_fraction: Option<f64>,
    /// Train for all epochs on every row.
    #[arg(long)]
    pub no_early_stopping: bool,
    /// Output file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NnfalArgs {
    /// Model file written by `train-nn`.
    #[arg(long)]
    pub model: PathBuf,
    /// Unsafe output box over the state variables, `lo:hi,...`; `inf` allowed.
    #[arg(long = "unsafe")]
    pub unsafe_box: String,
    /// A candidate is real if the state is unsafe at any sample, not only at
    /// its own time.
    #[arg(long)]
    pub any_time: bool,
    /// Attack budget.
    #[arg(long)]
    pub max_attacks: Option<usize>,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    pub timeout_secs: Option<f64>,
    /// Attack method.
    #[arg(long, value_enum)]
    pub method: Option<AttackMethod>,
    /// PGD iterations per restart.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// PGD step size in scaled input units.
    #[arg(long)]
    pub step: Option<f64>,
    /// FGSM step size in scaled input units.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Random restarts per attack.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Radius of the L-inf ball excluded around each spurious candidate.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Report JSON (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttackMethod {
    Pgd,
    Fgsm,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    let settings = Settings::resolve(&cli.global)?;
    if let Some(jobs) = settings.jobs {
        if jobs == 0 {
            return Err(Error::Config("--jobs: must be at least 1".into()));
        }
        // a pool may already exist when called repeatedly in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match cli.command {
        Command::GenData {
            mode,
            trajectories,
            out,
        } => gen_data(&settings, mode, trajectories, &out),
        Command::FitTree {
            data,
            out,
            min_samples_split,
            min_samples_leaf,
            max_depth,
        } => {
            let defaults = settings.file.dtfal.clone().unwrap_or_default().tree;
            let params = TreeParams {
                min_samples_split: min_samples_split.unwrap_or(defaults.min_samples_split),
                min_samples_leaf: min_samples_leaf.unwrap_or(defaults.min_samples_leaf),
                max_depth: max_depth.or(defaults.max_depth),
            };
            fit_tree(&data, &out, &params)
        }
        Command::DumpTree { tree, leaf } => dump_tree(&tree, leaf),
        Command::Dtfal(a) => run_dtfal(&settings, &a),
        Command::TrainNn(a) => train_nn(&settings, &a),
        Command::Nnfal(a) => run_nnfal(&settings, &a),
        Command::Monitor { traj, at } => {
            let formula = settings.formula()?;
            let trajectory = Trajectory::from_csv(&read(&traj)?)?;
            let verdict = stl::check(&formula, &trajectory, at)?;
            println!("{}", verdict.robustness);
            Ok(EXIT_OK)
        }
        Command::Dod { trajectories } => {
            let scenario = settings.scenario()?;
            let formula = settings.formula()?;
            let dod = degree_of_difficulty(&scenario, &formula, trajectories, settings.seed)?;
            println!("{dod}");
            Ok(EXIT_OK)
        }
        Command::Simulate { request } => simulate(&settings, &request),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write(p, text),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn gen_data(settings: &Settings, mode: DataMode, n: usize, out: &Path) -> Result<i32> {
    let scenario = settings.scenario()?;
    let (meta, csv, rows) = match mode {
        DataMode::Nn => {
            let data = generate_nn_dataset(&scenario, n, settings.seed)?;
            let meta = DatasetMeta::describe(DatasetKind::Nn, &scenario, settings.seed, n, None);
            (meta, data.to_csv(), data.len())
        }
        DataMode::Rob => {
            let formula = settings.formula()?;
            let gen = generate_robustness_dataset(&scenario, &formula, n, settings.seed)?;
            let meta =
                DatasetMeta::describe(DatasetKind::Rob, &scenario, settings.seed, n, Some(&formula));
            (meta, gen.data.to_csv(), gen.data.len())
        }
    };
    write(out, &csv)?;
    meta.save(out)?;
    eprintln!("wrote {rows} rows to {}", out.display());
    Ok(EXIT_OK)
}

fn load_robustness(path: &Path) -> Result<RobustnessDataset> {
    let meta = DatasetMeta::load(path)?;
    if meta.kind != DatasetKind::Rob {
        return Err(Error::Config(format!("--data: {} is not a robustness dataset", path.display())));
    }
    RobustnessDataset::from_csv(meta.layout()?, &read(path)?)
}

fn fit_tree(data: &Path, out: &Path, params: &TreeParams) -> Result<i32> {
    let data = load_robustness(data)?;
    let tree = DecisionTree::fit(&data, params)?;
    write(out, &tree.to_json())?;
    eprintln!(
        "fitted {} leaves (depth {}) to {} rows",
        tree.leaves().len(),
        tree.depth(),
        data.len()
    );
    Ok(EXIT_OK)
}

fn dump_tree(path: &Path, leaf: Option<usize>) -> Result<i32> {
    let tree = DecisionTree::from_json(&read(path)?)?;
    let mut out = tree.render();
    let (label, leaves) = match leaf {
        Some(l) => ("leaf", vec![l]),
        None => {
            let falsifying = tree.find_falsifying_leaves();
            if falsifying.is_empty() {
                ("nearest leaf", tree.find_nearest_leaves()?)
            } else {
                ("falsifying leaf", falsifying)
            }
        }
    };
    for l in leaves {
        let exp = tree.gen_explanation(l)?;
        let value = tree
            .leaf_value(l)
            .ok_or_else(|| Error::Config(format!("--leaf: node {l} is not a leaf")))?;
        writeln!(
            out,
            "{label} #{l} (rho = {value}): {}",
            exp.display(tree.feature_names())
        )
        .unwrap();
    }
    print!("{out}");
    Ok(EXIT_OK)
}

fn run_dtfal(settings: &Settings, a: &DtfalArgs) -> Result<i32> {
    let scenario = settings.scenario()?;
    let formula = settings.formula()?;
    let mut cfg = settings.file.dtfal.clone().unwrap_or_default();
    cfg.seed = settings.seed;
    cfg.trajectories = a.trajectories.unwrap_or(cfg.trajectories);
    cfg.samples = a.samples.unwrap_or(cfg.samples);
    cfg.epochs = a.epochs.unwrap_or(cfg.epochs);
    cfg.min_ce = a.min_ce.unwrap_or(cfg.min_ce);
    cfg.leaf_cap = a.leaf_cap.unwrap_or(cfg.leaf_cap);
    cfg.tree.min_samples_leaf = a.min_samples_leaf.unwrap_or(cfg.tree.min_samples_leaf);
    cfg.tree.max_depth = a.max_depth.or(cfg.tree.max_depth);

    let mut report = dtfal::run(&scenario, &formula, &cfg)?;
    write_counterexamples(&scenario.layout(), &mut report, a)?;
    emit(a.out.as_deref(), &report.to_json())?;
    eprintln!(
        "{}: {} counterexamples, {} simulations, {} epochs, {:.2?}",
        if report.falsified() { "falsified" } else { "budget exhausted" },
        report.found.len(),
        report.simulations,
        report.epochs_used,
        report.wall_time
    );
    Ok(if report.falsified() { EXIT_OK } else { EXIT_EXHAUSTED })
}

fn write_counterexamples(
    layout: &crate::types::SearchLayout,
    report: &mut DtfalReport,
    a: &DtfalArgs,
) -> Result<()> {
    if let Some(p) = &a.ce_csv {
        write(p, &counterexamples_to_csv(layout, &report.found))?;
    }
    if let Some(dir) = &a.traj_dir {
        for (i, (ce, rec)) in report.found.iter().zip(&mut report.counterexamples).enumerate() {
            let path = dir.join(format!("ce_{i}.csv"));
            write(&path, &ce.trajectory.to_csv())?;
            rec.trajectory = Some(path.display().to_string());
        }
    }
    if let Some(p) = &a.plot_csv {
        let mut out = String::new();
        for (i, ce) in report.found.iter().enumerate() {
            let csv = ce.trajectory.to_csv();
            let mut lines = csv.lines();
            let header = lines.next().unwrap_or_default();
            if i == 0 {
                writeln!(out, "ce,{header}").unwrap();
            }
            for line in lines {
                writeln!(out, "{i},{line}").unwrap();
            }
        }
        write(p, &out)?;
    }
    Ok(())
}

fn load_nn(path: &Path) -> Result<(NnDataset, DatasetMeta)> {
    let meta = DatasetMeta::load(path)?;
    if meta.kind != DatasetKind::Nn {
        return Err(Error::Config(format!("--data: {} is not a state dataset", path.display())));
    }
    let data = NnDataset::from_csv(meta.layout()?, meta.var_names.len(), &read(path)?)?;
    Ok((data, meta))
}

fn train_nn(settings: &Settings, a: &TrainArgs) -> Result<i32> {
    let (data, meta) = load_nn(&a.data)?;
    let mut cfg = settings.file.train.clone().unwrap_or_default();
    cfg.seed = settings.seed;
    cfg.learning_rate = a.lr.unwrap_or(cfg.learning_rate);
    cfg.batch_size = a.batch_size.unwrap_or(cfg.batch_size);
    cfg.epochs = a.epochs.unwrap_or(cfg.epochs);
    cfg.patience = a.patience.unwrap_or(cfg.patience);
    cfg.validation_fraction = a.validation_fraction.unwrap_or(cfg.validation_fraction);
    if a.no_early_stopping {
        cfg.early_stopping = false;
    }
    let hidden = a
        .hidden
        .clone()
        .or_else(|| settings.file.hidden.clone())
        .unwrap_or_else(|| vec![64, 64, 64]);
    let search = meta.layout()?.search_box(&meta.init, &meta.input)?;
    let model = train_surrogate(&data, &search, &hidden, &cfg)?;
    model.save(&a.out)?;
    let summary = model.training.as_ref().expect("freshly trained");
    println!("{}", serde_json::to_string_pretty(summary)?);
    Ok(EXIT_OK)
}

fn parse_unsafe(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lows = Vec::new();
    let mut highs = Vec::new();
    for part in text.split(',') {
        let (lo, hi) = part
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("--unsafe: expected lo:hi, got `{part}`")))?;
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("--unsafe: bad bound `{}`: {e}", t.trim())))
        };
        lows.push(num(lo)?);
        highs.push(num(hi)?);
    }
    Ok((lows, highs))
}

fn run_nnfal(settings: &Settings, a: &NnfalArgs) -> Result<i32> {
    let scenario = settings.scenario()?;
    let model = Surrogate::load(&a.model)?;
    let input = input_box(&scenario.search_box(), scenario.horizon);
    if input.dim() != model.input_dim() {
        return Err(Error::Config(format!(
            "--model: network takes {} inputs but the scenario has {}",
            model.input_dim(),
            input.dim()
        )));
    }
    let (lows, highs) = parse_unsafe(&a.unsafe_box)?;
    let spec = ReachabilitySpec::with_box(input, &lows, &highs)?;

    let mut cfg = settings.file.nnfal.clone().unwrap_or_default();
    cfg.seed = settings.seed;
    cfg.max_attacks = a.max_attacks.unwrap_or(cfg.max_attacks);
    cfg.timeout_secs = a.timeout_secs.or(cfg.timeout_secs);
    cfg.delta = a.delta.unwrap_or(cfg.delta);
    if let Some(m) = a.method {
        cfg.attack.method = match m {
            AttackMethod::Pgd => Method::Pgd,
            AttackMethod::Fgsm => Method::Fgsm,
        };
    }
    cfg.attack.iterations = a.iterations.unwrap_or(cfg.attack.iterations);
    cfg.attack.step = a.step.unwrap_or(cfg.attack.step);
    cfg.attack.epsilon = a.epsilon.unwrap_or(cfg.attack.epsilon);
    cfg.attack.restarts = a.restarts.unwrap_or(cfg.attack.restarts);

    let validator = SystemValidator {
        scenario,
        target: Target::Unsafe {
            set: spec.unsafe_set.clone(),
            any_time: a.any_time,
        },
    };
    let report: NnfalReport = nnfal_run(&model, &spec, &validator, &cfg)?;
    emit(a.out.as_deref(), &report.to_json())?;
    eprintln!(
        "{}: {} attacks, {} refinements",
        if report.falsified() { "falsified" } else { "budget exhausted" },
        report.attacks,
        report.refinements
    );
    Ok(if report.falsified() { EXIT_OK } else { EXIT_EXHAUSTED })
}

fn simulate(settings: &Settings, request: &str) -> Result<i32> {
    let text = if request == "-" {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Error::io("<stdin>", e))?;
        s
    } else {
        read(Path::new(request))?
    };
    let req: SimRequest = serde_json::from_str(&text)?;
    let system = match settings.benchmark()? {
        Some(b) => b.system,
        None => settings.scenario()?.system,
    };
    let u = req.signal(system.input_dim())?;
    let traj = system.simulate(&req.x0, &u, req.horizon, req.dt)?;
    emit(None, &traj.to_csv())?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("flexifal").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn global_flags_after_subcommand() {
        let cli = parse(&["dod", "--system", "const1d", "--spec", "C50", "-N", "10", "--seed", "4"]);
        let s = Settings::resolve(&cli.global).unwrap();
        assert_eq!(s.seed, 4);
        assert_eq!(s.formula().unwrap().to_string(), stl::parse("G[0,1] x < 0.5").unwrap().to_string());
        assert!(matches!(cli.command, Command::Dod { trajectories: 10 }));
    }

    #[test]
    fn config_file_is_overridden_by_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(
            &path,
            "system = \"const1d\"\nspec = \"C1\"\nseed = 9\n[dtfal]\nsamples = 7\n",
        )
        .unwrap();
        let cli = parse(&["dtfal", "--config", path.to_str().unwrap(), "--seed", "2"]);
        let s = Settings::resolve(&cli.global).unwrap();
        assert_eq!(s.seed, 2);
        assert_eq!(s.system.as_deref(), Some("const1d"));
        assert_eq!(s.file.dtfal.as_ref().unwrap().samples, 7);

        fs::write(&path, "sytem = \"const1d\"\n").unwrap();
        let cli = parse(&["dtfal", "--config", path.to_str().unwrap()]);
        assert!(Settings::resolve(&cli.global).is_err());
    }

    #[test]
    fn scenario_errors_name_the_flag() {
        let cli = parse(&["dod", "--system", "const1d", "--init", "0:1,0:1"]);
        let err = Settings::resolve(&cli.global).unwrap().scenario().unwrap_err();
        assert!(err.to_string().contains("scenario"), "{err}");
        let cli = parse(&["dod", "--system", "const1d", "--init", "1:0"]);
        let err = Settings::resolve(&cli.global).unwrap().scenario().unwrap_err();
        assert!(err.to_string().contains("--init"), "{err}");
        let cli = parse(&["dod", "--system", "exec:/bin/true"]);
        let err = Settings::resolve(&cli.global).unwrap().scenario().unwrap_err();
        assert!(err.to_string().contains("--init"), "{err}");
    }

    #[test]
    fn unsafe_boxes() {
        let (lo, hi) = parse_unsafe("0.9:inf,-inf:2").unwrap();
        assert_eq!(lo, vec![0.9, f64::NEG_INFINITY]);
        assert_eq!(hi, vec![f64::INFINITY, 2.0]);
        assert!(parse_unsafe("0.9").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(main_with_args(["flexifal", "dod", "--system", "nope", "--spec", "x < 1"]), EXIT_ERROR);
        assert_eq!(main_with_args(["flexifal", "bogus"]), EXIT_ERROR);
    }
}
