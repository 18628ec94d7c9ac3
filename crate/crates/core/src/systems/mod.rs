//! Deterministic black-box simulators.
//!
//! A [`System`] maps an initial state and a piecewise-constant input signal to
//! a uniformly sampled [`Trajectory`]. Built-in benchmarks are hybrid automata
//! integrated with fixed-step RK4; [`ExternalSystem`] wraps an executable that
//! speaks the JSON-in / CSV-out protocol.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::types::{PiecewiseConstantSignal, SearchPoint, Trajectory};

pub mod catalog;
mod external;
mod hybrid;
mod rk4;

pub use catalog::{builtin, builtin_names, Benchmark};
pub use external::{ExternalConfig, ExternalSystem, SimRequest};
pub use hybrid::{Guard, HybridAutomaton, Mode};
pub use rk4::{step_rk4, VectorField};

pub trait System: Send + Sync {
    fn name(&self) -> &str;

    /// Names of the state variables, in trajectory column order.
    fn var_names(&self) -> &[String];

    /// Dimension of the searchable initial state `x0`.
    fn init_dim(&self) -> usize;

    /// Dimension of the input signal.
    fn input_dim(&self) -> usize;

    fn simulate(
        &self,
        x0: &[f64],
        u: &PiecewiseConstantSignal,
        horizon: f64,
        dt: f64,
    ) -> Result<Trajectory>;

    fn simulate_point(&self, point: &SearchPoint, dt: f64) -> Result<Trajectory> {
        self.simulate(&point.x0, &point.u, point.u.horizon(), dt)
    }
}

impl<S: System + ?Sized> System for Arc<S> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn var_names(&self) -> &[String] {
        (**self).var_names()
    }

    fn init_dim(&self) -> usize {
        (**self).init_dim()
    }

    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }

    fn simulate(
        &self,
        x0: &[f64],
        u: &PiecewiseConstantSignal,
        horizon: f64,
        dt: f64,
    ) -> Result<Trajectory> {
        (**self).simulate(x0, u, horizon, dt)
    }
}

/// Number of `dt` steps covering `[0, horizon]`. `dt` must divide the horizon
/// to within 1e-9.
pub fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    let steps = (horizon / dt).round();
    if (steps * dt - horizon).abs() > 1e-9 * horizon.max(1.0) {
        return Err(Error::Domain(format!(
            "time step {dt} does not divide the horizon {horizon}"
        )));
    }
    Ok(steps as usize)
}

pub(crate) fn check_inputs(
    sys: &(impl System + ?Sized),
    x0: &[f64],
    u: &PiecewiseConstantSignal,
    horizon: f64,
) -> Result<()> {
    if x0.len() != sys.init_dim() {
        return Err(Error::dim("initial state", sys.init_dim(), x0.len()));
    }
    if u.input_dim() != sys.input_dim() {
        return Err(Error::dim("input signal", sys.input_dim(), u.input_dim()));
    }
    if u.horizon() + 1e-9 * horizon.max(1.0) < horizon {
        return Err(Error::Domain(format!(
            "input signal covers [0, {}] but the horizon is {horizon}",
            u.horizon()
        )));
    }
    Ok(())
}
