use std::fmt;
use std::sync::Arc;

use super::rk4::{step_rk4, VectorField};
use super::{check_inputs, step_count, System};
use crate::error::{Error, Result};
use crate::types::{PiecewiseConstantSignal, Trajectory};

pub type Predicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;
pub type ResetMap = Arc<dyn Fn(&mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub struct Mode {
    pub name: String,
    pub flow: VectorField,
}

impl Mode {
    pub fn new<F>(name: impl Into<String>, flow: F) -> Self
    where
        F: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Mode {
            name: name.into(),
            flow: Arc::new(flow),
        }
    }
}

/// A discrete transition. `source == None` makes the guard active in every
/// mode; `target == None` keeps the current mode after the reset.
#[derive(Clone)]
pub struct Guard {
    pub source: Option<usize>,
    pub target: Option<usize>,
    pub enabled: Predicate,
    pub reset: Option<ResetMap>,
}

impl Guard {
    pub fn new<P>(source: Option<usize>, target: Option<usize>, enabled: P) -> Self
    where
        P: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        Guard {
            source,
            target,
            enabled: Arc::new(enabled),
            reset: None,
        }
    }

    pub fn with_reset<R>(mut self, reset: R) -> Self
    where
        R: Fn(&mut [f64]) + Send + Sync + 'static,
    {
        self.reset = Some(Arc::new(reset));
        self
    }

    fn applies(&self, mode: usize, x: &[f64]) -> bool {
        self.source.is_none_or(|s| s == mode) && (self.enabled)(x)
    }
}

/// Switched continuous dynamics with urgent, determinized transitions.
///
/// Integration is fixed-step RK4 with the input held at its value at the start
/// of each step. Guards are tested on the state reached at the end of a step;
/// the lowest-indexed enabled guard fires, at most one per step.
#[derive(Clone)]
pub struct HybridAutomaton {
    name: String,
    var_names: Vec<String>,
    modes: Vec<Mode>,
    guards: Vec<Guard>,
    init_dim: usize,
    input_dim: usize,
    lift: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    initial_mode: Arc<dyn Fn(&[f64]) -> usize + Send + Sync>,
}

impl fmt::Debug for HybridAutomaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HybridAutomaton")
            .field("name", &self.name)
            .field("var_names", &self.var_names)
            .field("modes", &self.modes.iter().map(|m| &m.name).collect::<Vec<_>>())
            .field("guards", &self.guards.len())
            .field("init_dim", &self.init_dim)
            .field("input_dim", &self.input_dim)
            .finish()
    }
}

impl HybridAutomaton {
    /// Automaton over `var_names` whose full state is searched (`x0` has the
    /// same dimension as the state), with no inputs, starting in mode 0.
    pub fn new(name: impl Into<String>, var_names: &[&str], modes: Vec<Mode>) -> Self {
        assert!(!modes.is_empty(), "a hybrid automaton needs at least one mode");
        HybridAutomaton {
            name: name.into(),
            var_names: var_names.iter().map(|s| s.to_string()).collect(),
            modes,
            guards: Vec::new(),
            init_dim: var_names.len(),
            input_dim: 0,
            lift: Arc::new(|x0| x0.to_vec()),
            initial_mode: Arc::new(|_| 0),
        }
    }

    pub fn with_guard(mut self, guard: Guard) -> Self {
        self.guards.push(guard);
        self
    }

    pub fn with_inputs(mut self, input_dim: usize) -> Self {
        self.input_dim = input_dim;
        self
    }

    /// Searches only an `init_dim`-dimensional initial vector, expanded to the
    /// full state by `lift`.
    pub fn with_lift<L>(mut self, init_dim: usize, lift: L) -> Self
    where
        L: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.init_dim = init_dim;
        self.lift = Arc::new(lift);
        self
    }

    pub fn with_initial_mode<F>(mut self, rule: F) -> Self
    where
        F: Fn(&[f64]) -> usize + Send + Sync + 'static,
    {
        self.initial_mode = Arc::new(rule);
        self
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn guards(&self) -> &[Guard] {
        &self.guards
    }

    pub fn initial_state(&self, x0: &[f64]) -> (usize, Vec<f64>) {
        let x = (self.lift)(x0);
        let mode = (self.initial_mode)(&x);
        (mode, x)
    }

    /// Index of the guard that fires from `mode` at `x`, if any.
    pub fn enabled_guard(&self, mode: usize, x: &[f64]) -> Option<usize> {
        self.guards.iter().position(|g| g.applies(mode, x))
    }

    /// Applies the lowest-indexed enabled guard to `x_next`, returning the new
    /// mode and state. Identity when nothing is enabled.
    pub fn handle_guards(&self, mode: usize, x_next: &[f64]) -> (usize, Vec<f64>) {
        let mut x = x_next.to_vec();
        match self.enabled_guard(mode, &x) {
            Some(i) => {
                let guard = &self.guards[i];
                if let Some(reset) = &guard.reset {
                    reset(&mut x);
                }
                (guard.target.unwrap_or(mode), x)
            }
            None => (mode, x),
        }
    }

    /// Simulation that also reports the active mode at every sample.
    pub fn simulate_with_modes(
        &self,
        x0: &[f64],
        u: &PiecewiseConstantSignal,
        horizon: f64,
        dt: f64,
    ) -> Result<(Trajectory, Vec<usize>)> {
        check_inputs(self, x0, u, horizon)?;
        let steps = step_count(horizon, dt)?;
        let (mut mode, mut x) = self.initial_state(x0);
        if x.len() != self.var_names.len() {
            return Err(Error::dim("lifted state", self.var_names.len(), x.len()));
        }
        if mode >= self.modes.len() {
            return Err(Error::Contract(format!("initial mode {mode} does not exist")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalBlowUp { index: 0 });
        }

        let mut states = Vec::with_capacity(steps + 1);
        let mut modes = Vec::with_capacity(steps + 1);
        states.push(x.clone());
        modes.push(mode);
        for j in 0..steps {
            let t = (j as f64 * dt).min(u.horizon());
            let uval = u.eval(t)?;
            let next = step_rk4(&*self.modes[mode].flow, &x, uval, dt);
            (mode, x) = self.handle_guards(mode, &next);
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericalBlowUp { index: j + 1 });
            }
            states.push(x.clone());
            modes.push(mode);
        }
        Ok((Trajectory::new(dt, self.var_names.clone(), states)?, modes))
    }
}

impl System for HybridAutomaton {
    fn name(&self) -> &str {
        &self.name
    }

    fn var_names(&self) -> &[String] {
        &self.var_names
    }

    fn init_dim(&self) -> usize {
        self.init_dim
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn simulate(
        &self,
        x0: &[f64],
        u: &PiecewiseConstantSignal,
        horizon: f64,
        dt: f64,
    ) -> Result<Trajectory> {
        self.simulate_with_modes(x0, u, horizon, dt).map(|(traj, _)| traj)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_input(horizon: f64) -> PiecewiseConstantSignal {
        PiecewiseConstantSignal::empty(horizon, 1).unwrap()
    }

    fn two_guard_automaton() -> HybridAutomaton {
        let idle = |_: &[f64], _: &[f64], dx: &mut [f64]| dx[0] = 1.0;
        HybridAutomaton::new(
            "tie",
            &["x"],
            vec![Mode::new("a", idle), Mode::new("b", idle), Mode::new("c", idle)],
        )
        .with_guard(Guard::new(Some(0), Some(1), |x| x[0] >= 1.0).with_reset(|x| x[0] = 10.0))
        .with_guard(Guard::new(Some(0), Some(2), |x| x[0] >= 0.5).with_reset(|x| x[0] = 20.0))
    }

    #[test]
    fn lowest_index_guard_wins() {
        let h = two_guard_automaton();
        assert_eq!(h.enabled_guard(0, &[2.0]), Some(0));
        assert_eq!(h.handle_guards(0, &[2.0]), (1, vec![10.0]));
        assert_eq!(h.handle_guards(0, &[0.7]), (2, vec![20.0]));
    }

    #[test]
    fn nothing_enabled_is_identity() {
        let h = two_guard_automaton();
        assert_eq!(h.handle_guards(0, &[0.1]), (0, vec![0.1]));
        // guards bound to mode 0 are inert elsewhere
        assert_eq!(h.handle_guards(1, &[5.0]), (1, vec![5.0]));
    }

    #[test]
    fn modes_recorded_per_sample() {
        let h = two_guard_automaton();
        let (traj, modes) = h.simulate_with_modes(&[0.0], &no_input(1.0), 1.0, 0.25).unwrap();
        assert_eq!(modes, vec![0, 0, 2, 2, 2]);
        assert_eq!(traj.state(2), &[20.0]);
        assert_eq!(traj.state(4), &[20.5]);
    }

    #[test]
    fn blow_up_reports_first_bad_sample() {
        let h = HybridAutomaton::new(
            "blow",
            &["x"],
            vec![Mode::new("m", |x: &[f64], _: &[f64], dx: &mut [f64]| dx[0] = x[0] * x[0])],
        );
        // x' = x^2 from 1 escapes at t = 1
        let err = h.simulate(&[1.0], &no_input(2.0), 2.0, 0.05).unwrap_err();
        match err {
            Error::NumericalBlowUp { index } => assert!(index > 15 && index <= 40, "{index}"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let h = two_guard_automaton();
        assert!(matches!(
            h.simulate(&[0.0, 1.0], &no_input(1.0), 1.0, 0.1),
            Err(Error::Dimension { .. })
        ));
        assert!(matches!(
            h.simulate(&[0.0], &no_input(1.0), 1.0, 0.3),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            h.simulate(&[0.0], &no_input(0.5), 1.0, 0.1),
            Err(Error::Domain(_))
        ));
    }
}
