use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::OnceLock;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{check_inputs, step_count, System};
use crate::error::{Error, Result};
use crate::types::{PiecewiseConstantSignal, Trajectory};

/// Request written to the child's stdin as a single JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRequest {
    pub x0: Vec<f64>,
    /// One vector per input segment, equally spaced over `[0, T]`.
    pub u: Vec<Vec<f64>>,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub dt: f64,
}

impl SimRequest {
    pub fn signal(&self, input_dim: usize) -> Result<PiecewiseConstantSignal> {
        if self.u.is_empty() {
            return PiecewiseConstantSignal::empty(self.horizon, 1);
        }
        if let Some(bad) = self.u.iter().find(|seg| seg.len() != input_dim) {
            return Err(Error::dim("request input segment", input_dim, bad.len()));
        }
        PiecewiseConstantSignal::new(self.horizon, self.u.clone())
    }
}

#[derive(Debug, Clone)]
pub struct ExternalConfig {
    pub program: PathBuf,
    pub args: Vec<String>,
    /// Expected output columns. Left empty, they are taken from the first
    /// response.
    pub var_names: Vec<String>,
    pub init_dim: usize,
    pub input_dim: usize,
    pub timeout: Duration,
}

impl ExternalConfig {
    pub fn new(program: impl Into<PathBuf>, init_dim: usize, input_dim: usize) -> Self {
        ExternalConfig {
            program: program.into(),
            args: Vec::new(),
            var_names: Vec::new(),
            init_dim,
            input_dim,
            timeout: Duration::from_secs(60),
        }
    }
}

/// A system simulated by spawning an executable once per call.
///
/// The child receives a [`SimRequest`] on stdin and must print the trajectory
/// as CSV (`time,var1,...`) on the `dt` grid, exiting with status 0.
#[derive(Debug)]
pub struct ExternalSystem {
    name: String,
    config: ExternalConfig,
    discovered: OnceLock<Vec<String>>,
}

impl ExternalSystem {
    pub fn new(config: ExternalConfig) -> Self {
        ExternalSystem {
            name: format!("exec:{}", config.program.display()),
            config,
            discovered: OnceLock::new(),
        }
    }

    fn run(&self, request: &SimRequest) -> Result<String> {
        let cfg = &self.config;
        let mut child = Command::new(&cfg.program)
            .args(&cfg.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::io(&cfg.program, e))?;

        let payload = serde_json::to_vec(request)?;
        let mut stdin = child.stdin.take().expect("stdin is piped");
        let writer = thread::spawn(move || {
            // a child that ignores its input may close the pipe early
            let _ = stdin.write_all(&payload);
        });
        let mut stdout = child.stdout.take().expect("stdout is piped");
        let mut stderr = child.stderr.take().expect("stderr is piped");
        let out_reader = thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stdout.read_to_end(&mut buf);
            buf
        });
        let err_reader = thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stderr.read_to_end(&mut buf);
            buf
        });

        let start = Instant::now();
        let status = loop {
            if let Some(status) = child.try_wait().map_err(|e| Error::io(&cfg.program, e))? {
                break Some(status);
            }
            if start.elapsed() >= cfg.timeout {
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            thread::sleep(Duration::from_millis(2));
        };
        let _ = writer.join();
        let out = out_reader.join().unwrap_or_default();
        let err = String::from_utf8_lossy(&err_reader.join().unwrap_or_default()).into_owned();

        let Some(status) = status else {
            return Err(Error::Simulation {
                message: format!("timed out after {:?}", cfg.timeout),
                exit_code: None,
                stderr: err,
            });
        };
        if !status.success() {
            return Err(Error::Simulation {
                message: format!("{} exited with {status}", cfg.program.display()),
                exit_code: status.code(),
                stderr: err,
            });
        }
        String::from_utf8(out).map_err(|_| Error::Simulation {
            message: "output is not valid UTF-8".into(),
            exit_code: Some(0),
            stderr: err,
        })
    }
}

impl System for ExternalSystem {
    fn name(&self) -> &str {
        &self.name
    }

    fn var_names(&self) -> &[String] {
        if !self.config.var_names.is_empty() {
            return &self.config.var_names;
        }
        self.discovered.get().map(Vec::as_slice).unwrap_or(&[])
    }

    fn init_dim(&self) -> usize {
        self.config.init_dim
    }

    fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    fn simulate(
        &self,
        x0: &[f64],
        u: &PiecewiseConstantSignal,
        horizon: f64,
        dt: f64,
    ) -> Result<Trajectory> {
        check_inputs(self, x0, u, horizon)?;
        let steps = step_count(horizon, dt)?;
        let request = SimRequest {
            x0: x0.to_vec(),
            u: u.values().to_vec(),
            horizon,
            dt,
        };
        let text = self.run(&request)?;
        let malformed = |message: String| Error::Simulation {
            message,
            exit_code: Some(0),
            stderr: String::new(),
        };
        let traj = Trajectory::from_csv(&text)
            .map_err(|e| malformed(format!("malformed trajectory output: {e}")))?;
        if traj.len() != steps + 1 {
            return Err(malformed(format!(
                "expected {} samples, got {}",
                steps + 1,
                traj.len()
            )));
        }
        if traj.len() > 1 && (traj.dt() - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(malformed(format!("expected dt {dt}, got {}", traj.dt())));
        }
        let expected = self.var_names();
        if !expected.is_empty() && expected != traj.var_names() {
            return Err(malformed(format!(
                "expected columns {:?}, got {:?}",
                expected,
                traj.var_names()
            )));
        }
        let _ = self.discovered.set(traj.var_names().to_vec());
        // a single-sample response carries no dt of its own
        Trajectory::new(dt, traj.var_names().to_vec(), traj.states().to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_wire_format() {
        let req = SimRequest {
            x0: vec![1.0, 2.0],
            u: vec![vec![0.5]],
            horizon: 2.0,
            dt: 0.5,
        };
        let text = serde_json::to_string(&req).unwrap();
        assert_eq!(text, r#"{"x0":[1.0,2.0],"u":[[0.5]],"T":2.0,"dt":0.5}"#);
        let back: SimRequest = serde_json::from_str(&text).unwrap();
        assert_eq!(back, req);
        assert_eq!(back.signal(1).unwrap().eval(1.9).unwrap(), &[0.5]);
        assert!(back.signal(2).is_err());
    }

    #[test]
    fn missing_program_is_an_io_error() {
        let sys = ExternalSystem::new(ExternalConfig::new("/nonexistent/sim", 1, 0));
        let u = PiecewiseConstantSignal::empty(1.0, 1).unwrap();
        assert!(matches!(sys.simulate(&[0.0], &u, 1.0, 0.5), Err(Error::Io { .. })));
    }
}
