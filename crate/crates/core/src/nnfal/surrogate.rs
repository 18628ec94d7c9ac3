use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::{param_count, train_mlp, Mlp, TrainConfig, TrainSummary};
use crate::dataset::{NnDataset, ScalingParams};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::types::{Hyperbox, SearchLayout};

const FORMAT: &str = "flexifal-mlp/1";

/// A network together with the MinMax scalings of its inputs and outputs.
/// The network itself only ever sees scaled values.
#[derive(Debug, Clone, PartialEq)]
pub struct Surrogate {
    pub mlp: Mlp,
    pub input_scaling: ScalingParams,
    pub output_scaling: ScalingParams,
    pub layout: Option<SearchLayout>,
    pub seed: u64,
    pub training: Option<TrainSummary>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    widths: Vec<usize>,
    input_scaling: ScalingParams,
    output_scaling: ScalingParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    layout: Option<SearchLayout>,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    training: Option<TrainSummary>,
    params: usize,
}

impl Surrogate {
    /// Wraps a network that works directly in unscaled units.
    pub fn identity(mlp: Mlp) -> Self {
        let unit = |n| ScalingParams {
            mins: vec![0.0; n],
            maxs: vec![1.0; n],
        };
        Surrogate {
            input_scaling: unit(mlp.input_dim()),
            output_scaling: unit(mlp.output_dim()),
            mlp,
            layout: None,
            seed: 0,
            training: None,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.mlp.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.mlp.output_dim()
    }

    /// Prediction in original units for a scaled input.
    pub fn predict_scaled(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(self.output_scaling.unscale(&self.mlp.forward(z)?))
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.predict_scaled(&self.input_scaling.scale(x))
    }

    /// Prediction in original units and `∂L/∂z` for a loss whose gradient
    /// with respect to the (unscaled) prediction is given by `dloss`.
    pub fn gradient_scaled(
        &self,
        z: &[f64],
        dloss: impl FnOnce(&[f64]) -> Vec<f64>,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let spans = self.output_scaling.spans();
        let mut y = Vec::new();
        let (_, dz) = self.mlp.input_gradient(z, |raw| {
            y = self.output_scaling.unscale(raw);
            dloss(&y).iter().zip(&spans).map(|(g, s)| g * s).collect()
        })?;
        Ok((y, dz))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            format: FORMAT.into(),
            widths: self.mlp.widths().to_vec(),
            input_scaling: self.input_scaling.clone(),
            output_scaling: self.output_scaling.clone(),
            layout: self.layout,
            seed: self.seed,
            training: self.training.clone(),
            params: self.mlp.params().len(),
        };
        let mut out = serde_json::to_vec(&header).expect("header serializes");
        out.push(b'\n');
        for p in self.mlp.params() {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Domain("model file has no header line".into()))?;
        let header: Header = serde_json::from_slice(&bytes[..nl])?;
        if header.format != FORMAT {
            return Err(Error::Domain(format!("unsupported model format `{}`", header.format)));
        }
        let blob = &bytes[nl + 1..];
        let expected = param_count(&header.widths);
        if header.params != expected || blob.len() != 8 * expected {
            return Err(Error::dim("model parameters", expected, blob.len() / 8));
        }
        let params = blob
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let mlp = Mlp::from_params(&header.widths, params)?;
        if header.input_scaling.dim() != mlp.input_dim() {
            return Err(Error::dim("input scaling", mlp.input_dim(), header.input_scaling.dim()));
        }
        if header.output_scaling.dim() != mlp.output_dim() {
            return Err(Error::dim("output scaling", mlp.output_dim(), header.output_scaling.dim()));
        }
        Ok(Surrogate {
            mlp,
            input_scaling: header.input_scaling,
            output_scaling: header.output_scaling,
            layout: header.layout,
            seed: header.seed,
            training: header.training,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Box over network inputs `[x0, u, t]` for a search box and horizon.
pub fn input_box(search: &Hyperbox, horizon: f64) -> Hyperbox {
    search.product(&Hyperbox::new(vec![0.0], vec![horizon]).expect("positive horizon"))
}

/// Trains a surrogate `[x0, u, t] ↦ Γ(t)` on a state dataset.
///
/// Inputs are scaled to the given search box (extended by `[0, T]`),
/// outputs to their observed range.
pub fn train_surrogate(
    data: &NnDataset,
    search: &Hyperbox,
    hidden: &[usize],
    cfg: &TrainConfig,
) -> Result<Surrogate> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let bounds = input_box(search, data.layout.horizon);
    if bounds.dim() != data.layout.feature_count() + 1 {
        return Err(Error::dim("search box", data.layout.feature_count(), search.dim()));
    }
    let input_scaling = ScalingParams::from_box(&bounds);
    let targets = data.targets();
    let output_scaling = ScalingParams::fit(&targets)?;
    let xs: Vec<Vec<f64>> = data.inputs().iter().map(|x| input_scaling.scale(x)).collect();
    let ys: Vec<Vec<f64>> = targets.iter().map(|y| output_scaling.scale(y)).collect();

    let mut widths = vec![bounds.dim()];
    widths.extend_from_slice(hidden);
    widths.push(data.output_dim);
    let init = Mlp::init(&widths, derive_seed(cfg.seed, &[7]))?;
    let (mlp, summary) = train_mlp(init, &xs, &ys, cfg)?;
    Ok(Surrogate {
        mlp,
        input_scaling,
        output_scaling,
        layout: Some(data.layout),
        seed: cfg.seed,
        training: Some(summary),
    })
}
