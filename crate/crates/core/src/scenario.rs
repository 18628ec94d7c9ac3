use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::systems::{Benchmark, System};
use crate::types::{Hyperbox, SearchLayout, SearchPoint, Trajectory};

/// A system paired with the space searched over: initial box, input box,
/// number of input segments, horizon and sampling step.
#[derive(Clone)]
pub struct Scenario {
    pub system: Arc<dyn System>,
    pub init: Hyperbox,
    pub input: Hyperbox,
    pub segments: usize,
    pub horizon: f64,
    pub dt: f64,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario")
            .field("system", &self.system.name())
            .field("init", &self.init.to_string())
            .field("input", &self.input.to_string())
            .field("segments", &self.segments)
            .field("horizon", &self.horizon)
            .field("dt", &self.dt)
            .finish()
    }
}

impl Scenario {
    pub fn new(
        system: Arc<dyn System>,
        init: Hyperbox,
        input: Hyperbox,
        segments: usize,
        horizon: f64,
        dt: f64,
    ) -> Result<Self> {
        if init.dim() != system.init_dim() {
            return Err(Error::dim("initial box", system.init_dim(), init.dim()));
        }
        if input.dim() != system.input_dim() {
            return Err(Error::dim("input box", system.input_dim(), input.dim()));
        }
        crate::systems::step_count(horizon, dt)?;
        SearchLayout::new(init.dim(), input.dim(), segments, horizon)?;
        Ok(Scenario {
            system,
            init,
            input,
            segments,
            horizon,
            dt,
        })
    }

    pub fn from_benchmark(b: &Benchmark) -> Self {
        Scenario::new(
            b.system.clone(),
            b.init.clone(),
            b.input.clone(),
            b.segments,
            b.horizon,
            b.dt,
        )
        .expect("catalog benchmarks are consistent")
    }

    pub fn layout(&self) -> SearchLayout {
        SearchLayout::new(self.init.dim(), self.input.dim(), self.segments, self.horizon)
            .expect("validated on construction")
    }

    /// Box over flattened feature vectors.
    pub fn search_box(&self) -> Hyperbox {
        self.layout()
            .search_box(&self.init, &self.input)
            .expect("validated on construction")
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SearchPoint {
        self.layout()
            .sample(&self.init, &self.input, rng)
            .expect("validated on construction")
    }

    pub fn simulate(&self, point: &SearchPoint) -> Result<Trajectory> {
        self.system.simulate(&point.x0, &point.u, self.horizon, self.dt)
    }

    pub fn simulate_features(&self, features: &[f64]) -> Result<(SearchPoint, Trajectory)> {
        let point = self.layout().unflatten(features)?;
        let traj = self.simulate(&point)?;
        Ok((point, traj))
    }
}
