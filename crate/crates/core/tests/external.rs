use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use flexifal::dtfal::{self, DtfalConfig};
use flexifal::scenario::Scenario;
use flexifal::stl;
use flexifal::systems::{builtin, ExternalConfig, ExternalSystem, System};
use flexifal::types::{Hyperbox, PiecewiseConstantSignal};
use flexifal::Error;

fn script(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    path
}

fn no_input(horizon: f64) -> PiecewiseConstantSignal {
    PiecewiseConstantSignal::empty(horizon, 1).unwrap()
}

#[test]
fn canned_csv_is_parsed() {
    let dir = tempfile::tempdir().unwrap();
    let prog = script(
        dir.path(),
        "sim.sh",
        "cat > /dev/null\nprintf 'time,x,v\\n0,1,0\\n0.5,2,1\\n1,3,2\\n'",
    );
    let sys = ExternalSystem::new(ExternalConfig::new(prog, 2, 0));
    let traj = sys.simulate(&[1.0, 0.0], &no_input(1.0), 1.0, 0.5).unwrap();
    assert_eq!(traj.var_names(), ["x", "v"]);
    assert_eq!(traj.states(), &[vec![1.0, 0.0], vec![2.0, 1.0], vec![3.0, 2.0]]);
    assert_eq!(sys.var_names(), ["x", "v"]);
}

#[test]
fn failing_child_reports_exit_code_and_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let prog = script(dir.path(), "bad.sh", "echo 'solver diverged' >&2\nexit 1");
    let sys = ExternalSystem::new(ExternalConfig::new(prog, 1, 0));
    match sys.simulate(&[0.0], &no_input(1.0), 1.0, 0.5) {
        Err(Error::Simulation {
            exit_code, stderr, ..
        }) => {
            assert_eq!(exit_code, Some(1));
            assert!(stderr.contains("solver diverged"));
        }
        other => panic!("expected a simulation error, got {other:?}"),
    }
}

#[test]
fn wrong_sample_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let prog = script(dir.path(), "short.sh", "printf 'time,x\\n0,1\\n'");
    let sys = ExternalSystem::new(ExternalConfig::new(prog, 1, 0));
    let err = sys.simulate(&[0.0], &no_input(1.0), 1.0, 0.5).unwrap_err();
    assert!(err.to_string().contains("expected 3 samples"), "{err}");
}

#[test]
fn slow_child_times_out() {
    let dir = tempfile::tempdir().unwrap();
    let prog = script(dir.path(), "slow.sh", "sleep 5");
    let mut cfg = ExternalConfig::new(prog, 1, 0);
    cfg.timeout = Duration::from_millis(200);
    let sys = ExternalSystem::new(cfg);
    let err = sys.simulate(&[0.0], &no_input(1.0), 1.0, 0.5).unwrap_err();
    assert!(err.to_string().contains("timed out"), "{err}");
}

fn bin_as_system(system: &str, init_dim: usize, input_dim: usize) -> ExternalSystem {
    let mut cfg = ExternalConfig::new(env!("CARGO_BIN_EXE_flexifal"), init_dim, input_dim);
    cfg.args = ["simulate", "--system", system, "--request", "-"]
        .map(String::from)
        .to_vec();
    ExternalSystem::new(cfg)
}

#[test]
fn binary_round_trip_matches_builtin() {
    for name in ["bouncing-ball", "two-tanks", "chasing-cars"] {
        let bench = builtin(name).unwrap();
        let builtin_sc = Scenario::from_benchmark(&bench);
        let external: Arc<dyn System> = Arc::new(bin_as_system(
            name,
            bench.system.init_dim(),
            bench.system.input_dim(),
        ));
        let external_sc = Scenario::new(
            external,
            bench.init.clone(),
            bench.input.clone(),
            bench.segments,
            bench.horizon,
            bench.dt,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..3 {
            let point = builtin_sc.sample(&mut rng);
            let a = builtin_sc.simulate(&point).unwrap();
            let b = external_sc.simulate(&point).unwrap();
            assert_eq!(a.states(), b.states(), "{name}");
            assert_eq!(a.var_names(), b.var_names());
        }
    }
}

#[test]
fn dtfal_runs_on_an_external_system() {
    let bench = builtin("const1d").unwrap();
    let sc = Scenario::new(
        Arc::new(bin_as_system("const1d", 1, 0)),
        Hyperbox::new(vec![0.0], vec![1.0]).unwrap(),
        Hyperbox::unit(),
        1,
        bench.horizon,
        bench.dt,
    )
    .unwrap();
    let f = stl::parse("G[0,1] x < 0.1").unwrap();
    let cfg = DtfalConfig {
        trajectories: 30,
        samples: 5,
        epochs: 2,
        ..DtfalConfig::default()
    };
    let rep = dtfal::run(&sc, &f, &cfg).unwrap();
    assert!(rep.falsified());
    assert!(rep.found[0].point.x0[0] > 0.1);
}
