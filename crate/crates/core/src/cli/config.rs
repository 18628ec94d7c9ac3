use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::Deserialize;

use crate::dtfal::DtfalConfig;
use crate::error::{Error, Result};
use crate::nnfal::{NnfalConfig, TrainConfig};
use crate::scenario::Scenario;
use crate::stl::{self, Formula};
use crate::systems::{builtin, Benchmark, ExternalConfig, ExternalSystem, System};
use crate::types::Hyperbox;

use super::GlobalArgs;

/// Contents of a `--config` TOML file. Top-level keys mirror the global
/// flags; tables hold strategy settings.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub system: Option<String>,
    pub spec: Option<String>,
    pub init: Option<String>,
    pub input_box: Option<String>,
    pub segments: Option<usize>,
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub exec_timeout_secs: Option<f64>,
    pub dtfal: Option<DtfalConfig>,
    pub train: Option<TrainConfig>,
    pub hidden: Option<Vec<usize>>,
    pub nnfal: Option<NnfalConfig>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Global settings after merging the config file with flags (flags win).
#[derive(Debug, Default)]
pub struct Settings {
    pub system: Option<String>,
    pub spec: Option<String>,
    pub init: Option<String>,
    pub input_box: Option<String>,
    pub segments: Option<usize>,
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub exec_timeout: Duration,
    pub file: FileConfig,
}

impl Settings {
    pub fn resolve(args: &GlobalArgs) -> Result<Self> {
        let mut file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        Ok(Settings {
            system: args.system.clone().or(file.system.take()),
            spec: args.spec.clone().or(file.spec.take()),
            init: args.init.clone().or(file.init.take()),
            input_box: args.input_box.clone().or(file.input_box.take()),
            segments: args.segments.or(file.segments),
            horizon: args.horizon.or(file.horizon),
            dt: args.dt.or(file.dt),
            seed: args.seed.or(file.seed).unwrap_or(0),
            jobs: args.jobs.or(file.jobs),
            exec_timeout: Duration::from_secs_f64(file.exec_timeout_secs.unwrap_or(60.0)),
            file,
        })
    }

    fn system_name(&self) -> Result<&str> {
        self.system
            .as_deref()
            .ok_or_else(|| Error::Config("--system: required".into()))
    }

    pub fn benchmark(&self) -> Result<Option<Benchmark>> {
        let name = self.system_name()?;
        if name.starts_with("exec:") {
            Ok(None)
        } else {
            builtin(name).map(Some)
        }
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let parse_box = |flag: &str, text: &str| {
            text.parse::<Hyperbox>()
                .map_err(|e| Error::Config(format!("{flag}: {e}")))
        };
        let init = self.init.as_deref().map(|t| parse_box("--init", t)).transpose()?;
        let input = self
            .input_box
            .as_deref()
            .map(|t| parse_box("--input-box", t))
            .transpose()?;

        let (system, init, input, segments, horizon, dt): (Arc<dyn System>, _, _, _, _, _) =
            match self.benchmark()? {
                Some(b) => (
                    b.system.clone(),
                    init.unwrap_or(b.init),
                    input.unwrap_or(b.input),
                    self.segments.unwrap_or(b.segments),
                    self.horizon.unwrap_or(b.horizon),
                    self.dt.unwrap_or(b.dt),
                ),
                None => {
                    let program = &self.system_name()?["exec:".len()..];
                    let init = init.ok_or_else(|| {
                        Error::Config("--init: required for exec: systems".into())
                    })?;
                    let input = input.unwrap_or_else(Hyperbox::unit);
                    let mut cfg = ExternalConfig::new(PathBuf::from(program), init.dim(), input.dim());
                    cfg.timeout = self.exec_timeout;
                    let need = |v: Option<f64>, flag: &str| {
                        v.ok_or_else(|| Error::Config(format!("{flag}: required for exec: systems")))
                    };
                    (
                        Arc::new(ExternalSystem::new(cfg)),
                        init,
                        input,
                        self.segments.unwrap_or(1),
                        need(self.horizon, "--horizon")?,
                        need(self.dt, "--dt")?,
                    )
                }
            };
        Scenario::new(system, init, input, segments, horizon, dt)
            .map_err(|e| Error::Config(format!("scenario: {e}")))
    }

    /// The formula named by `--spec`: a catalog id of the selected system,
    /// a file, or literal formula text.
    pub fn formula(&self) -> Result<Formula> {
        let text = self
            .spec
            .as_deref()
            .ok_or_else(|| Error::Config("--spec: required".into()))?;
        let from_catalog = match self.system.as_deref() {
            Some(name) if !name.starts_with("exec:") => {
                builtin(name).ok().and_then(|b| b.spec(text))
            }
            _ => None,
        };
        let source = match from_catalog {
            Some(f) => f.to_string(),
            None if Path::new(text).is_file() => {
                fs::read_to_string(text).map_err(|e| Error::io(text, e))?
            }
            None => text.to_string(),
        };
        stl::parse(source.trim()).map_err(|e| Error::Config(format!("--spec: {e}")))
    }
}
