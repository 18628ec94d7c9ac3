//! Neural-network surrogate falsification.
//!
//! A network trained on `(x0, u, t) ↦ Γ(t)` is attacked for inputs whose
//! predicted state lands in an unsafe set. Candidates are checked on the real
//! system; spurious ones are excluded and the attack repeats.

mod attack;
mod mlp;
mod surrogate;

use std::time::{Duration, Instant};

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::scenario::Scenario;
use crate::stl::{self, Formula};
use crate::types::{SearchPoint, Trajectory};

pub use attack::{
    attack, fgsm_attack, pgd_attack, AttackConfig, AttackOutcome, HalfSpace, Method,
    ReachabilitySpec, SpuriousSet,
};
pub use mlp::{param_count, train_mlp, Mlp, TrainConfig, TrainSummary};
pub use surrogate::{input_box, train_surrogate, Surrogate};

/// A candidate confirmed on the real system.
#[derive(Debug, Clone, PartialEq)]
pub struct RealCounterexample {
    /// Network input `[x0, u, t]` as returned by the attack.
    pub candidate: Vec<f64>,
    pub point: SearchPoint,
    pub trajectory: Trajectory,
    /// Sample at which the violation was observed.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Real(RealCounterexample),
    Spurious(String),
}

pub trait Validator: Sync {
    fn validate(&self, candidate: &[f64]) -> Verdict;
}

/// What the real trajectory must exhibit for a candidate to count.
#[derive(Debug, Clone)]
pub enum Target {
    /// State inside the half-space conjunction, at the candidate's own time
    /// or, with `any_time`, at any sample.
    Unsafe { set: Vec<HalfSpace>, any_time: bool },
    /// Negative robustness at time 0.
    Formula(Formula),
}

/// Resimulates candidates on the scenario's system.
#[derive(Debug, Clone)]
pub struct SystemValidator {
    pub scenario: Scenario,
    pub target: Target,
}

impl SystemValidator {
    fn check(&self, candidate: &[f64]) -> Result<Verdict> {
        let layout = self.scenario.layout();
        if candidate.len() != layout.feature_count() + 1 {
            return Err(Error::dim("candidate", layout.feature_count() + 1, candidate.len()));
        }
        let (features, t) = candidate.split_at(layout.feature_count());
        let (point, trajectory) = self.scenario.simulate_features(features)?;
        let at = trajectory.nearest_index(t[0]);
        let inside = |i: usize, set: &[HalfSpace]| {
            set.iter().all(|h| h.slack(trajectory.state(i)) <= 0.0)
        };
        let hit = match &self.target {
            Target::Unsafe { set, any_time: false } => inside(at, set).then_some(at),
            Target::Unsafe { set, any_time: true } => {
                (0..trajectory.len()).find(|&i| inside(i, set))
            }
            Target::Formula(f) => (stl::robustness(f, &trajectory, 0.0)? < 0.0).then_some(0),
        };
        Ok(match hit {
            Some(index) => Verdict::Real(RealCounterexample {
                candidate: candidate.to_vec(),
                point,
                trajectory,
                index,
            }),
            None => Verdict::Spurious(format!("state at t={} is safe", trajectory.time(at))),
        })
    }
}

impl Validator for SystemValidator {
    fn validate(&self, candidate: &[f64]) -> Verdict {
        self.check(candidate)
            .unwrap_or_else(|e| Verdict::Spurious(format!("simulation failed: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NnfalConfig {
    pub attack: AttackConfig,
    /// Exclusion radius around spurious candidates, in scaled units.
    pub delta: f64,
    pub max_attacks: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timeout_secs: Option<f64>,
    pub seed: u64,
}

impl Default for NnfalConfig {
    fn default() -> Self {
        NnfalConfig {
            attack: AttackConfig::default(),
            delta: 1e-3,
            max_attacks: 20,
            timeout_secs: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NnfalStatus {
    Falsified,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    NotFound,
    Real,
    Spurious(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackEvent {
    pub attack: usize,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate: Option<Vec<f64>>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnfalReport {
    pub status: NnfalStatus,
    pub config: NnfalConfig,
    pub attacks: usize,
    /// Spurious candidates excluded before the result.
    pub refinements: usize,
    pub spurious: SpuriousSet,
    pub events: Vec<AttackEvent>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Vec<f64>>,
    #[serde(skip)]
    pub found: Option<RealCounterexample>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl NnfalReport {
    pub fn falsified(&self) -> bool {
        self.status == NnfalStatus::Falsified
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Attack, validate and exclude until a real counterexample appears or the
/// attack budget (or timeout) runs out.
pub fn nnfal_run(
    model: &Surrogate,
    spec: &ReachabilitySpec,
    validator: &dyn Validator,
    cfg: &NnfalConfig,
) -> Result<NnfalReport> {
    if cfg.max_attacks == 0 || !(cfg.delta >= 0.0) {
        return Err(Error::Config(
            "nnfal.max_attacks must be at least 1 and nnfal.delta non-negative".into(),
        ));
    }
    let started = Instant::now();
    let deadline = cfg.timeout_secs.map(Duration::from_secs_f64);
    let mut report = NnfalReport {
        status: NnfalStatus::BudgetExhausted,
        config: cfg.clone(),
        attacks: 0,
        refinements: 0,
        spurious: SpuriousSet::new(cfg.delta),
        events: Vec::new(),
        counterexample: None,
        found: None,
        wall_time: Duration::ZERO,
    };

    for a in 0..cfg.max_attacks {
        if deadline.is_some_and(|d| started.elapsed() >= d) {
            info!("nnfal: timeout after {a} attacks");
            break;
        }
        report.attacks = a + 1;
        let out = attack(model, spec, &report.spurious, &cfg.attack, derive_seed(cfg.seed, &[a as u64]))?;
        let Some(x) = out.candidate else {
            report.events.push(AttackEvent {
                attack: a,
                iterations: out.iterations,
                candidate: None,
                outcome: Outcome::NotFound,
            });
            continue;
        };
        match validator.validate(&x) {
            Verdict::Real(ce) => {
                debug!("attack {a}: real counterexample {x:?}");
                report.events.push(AttackEvent {
                    attack: a,
                    iterations: out.iterations,
                    candidate: Some(x.clone()),
                    outcome: Outcome::Real,
                });
                report.status = NnfalStatus::Falsified;
                report.counterexample = Some(x);
                report.found = Some(ce);
                break;
            }
            Verdict::Spurious(reason) => {
                debug!("attack {a}: spurious candidate {x:?}: {reason}");
                report.spurious.exclude(model.input_scaling.scale(&x));
                report.refinements += 1;
                report.events.push(AttackEvent {
                    attack: a,
                    iterations: out.iterations,
                    candidate: Some(x),
                    outcome: Outcome::Spurious(reason),
                });
            }
        }
    }
    report.wall_time = started.elapsed();
    Ok(report)
}

/// Number of successful runs among seeds `0..runs`.
pub fn falsification_rate(runs: u64, run: impl Fn(u64) -> Result<bool>) -> Result<usize> {
    let mut ok = 0;
    for seed in 0..runs {
        ok += run(seed)? as usize;
    }
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::builtin;
    use crate::types::Hyperbox;
    use std::sync::Mutex;

    fn const1d() -> Scenario {
        Scenario::from_benchmark(&builtin("const1d").unwrap())
    }

    /// `y = x0`, the exact surrogate of the constant system.
    fn perfect() -> Surrogate {
        Surrogate::identity(Mlp::from_layers(&[(vec![vec![1.0, 0.0]], vec![0.0])]).unwrap())
    }

    fn upper_spec(lo: f64) -> ReachabilitySpec {
        let input = Hyperbox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        ReachabilitySpec::with_box(input, &[lo], &[f64::INFINITY]).unwrap()
    }

    fn validator(lo: f64) -> SystemValidator {
        SystemValidator {
            scenario: const1d(),
            target: Target::Unsafe {
                set: upper_spec(lo).unsafe_set,
                any_time: false,
            },
        }
    }

    struct Rigged {
        spurious: usize,
        seen: Mutex<usize>,
    }

    impl Validator for Rigged {
        fn validate(&self, candidate: &[f64]) -> Verdict {
            let mut seen = self.seen.lock().unwrap();
            *seen += 1;
            if *seen <= self.spurious {
                return Verdict::Spurious("rigged".into());
            }
            validator(0.9).validate(candidate)
        }
    }

    #[test]
    fn perfect_surrogate_needs_no_refinement() {
        let rep = nnfal_run(&perfect(), &upper_spec(0.9), &validator(0.9), &NnfalConfig::default()).unwrap();
        assert!(rep.falsified());
        assert_eq!(rep.refinements, 0);
        let ce = rep.found.unwrap();
        assert!(ce.point.x0[0] >= 0.9);
        assert!(ce.trajectory.state(ce.index)[0] >= 0.9);
    }

    #[test]
    fn rigged_rounds_are_excluded() {
        let rigged = Rigged {
            spurious: 3,
            seen: Mutex::new(0),
        };
        let rep = nnfal_run(&perfect(), &upper_spec(0.9), &rigged, &NnfalConfig::default()).unwrap();
        assert!(rep.falsified());
        assert_eq!(rep.refinements, 3);
        assert_eq!(rep.spurious.len(), 3);
        let last = rep.counterexample.unwrap();
        assert!(!rep.spurious.contains(&last));
    }

    #[test]
    fn wrong_surrogate_is_spurious_then_unreachable_fails() {
        // surrogate claims y = x0 + 0.5, so it proposes points the system
        // never confirms for U = {y ≥ 1.2}
        let liar = Surrogate::identity(Mlp::from_layers(&[(vec![vec![1.0, 0.0]], vec![0.5])]).unwrap());
        let v = validator(1.2);
        match v.validate(&[0.8, 0.3]) {
            Verdict::Spurious(_) => {}
            other => panic!("{other:?}"),
        }
        let cfg = NnfalConfig {
            max_attacks: 5,
            ..NnfalConfig::default()
        };
        let rep = nnfal_run(&liar, &upper_spec(1.2), &v, &cfg).unwrap();
        assert_eq!(rep.status, NnfalStatus::BudgetExhausted);
        assert!(rep.found.is_none());
        assert_eq!(rep.attacks, 5);

        let rep = nnfal_run(&perfect(), &upper_spec(2.0), &validator(2.0), &cfg).unwrap();
        assert_eq!(rep.status, NnfalStatus::BudgetExhausted);
        assert_eq!(rep.refinements, 0);
        assert!(rep.events.iter().all(|e| e.outcome == Outcome::NotFound));
    }

    #[test]
    fn formula_target_and_bad_candidates() {
        let v = SystemValidator {
            scenario: const1d(),
            target: Target::Formula(stl::parse("G[0,1] x < 0.1").unwrap()),
        };
        assert!(matches!(v.validate(&[0.5, 0.0]), Verdict::Real(_)));
        assert!(matches!(v.validate(&[0.05, 0.0]), Verdict::Spurious(_)));
        assert!(matches!(v.validate(&[0.5]), Verdict::Spurious(_)));
    }

    #[test]
    fn rates() {
        assert_eq!(falsification_rate(10, |_| Ok(true)).unwrap(), 10);
        assert_eq!(falsification_rate(10, |_| Ok(false)).unwrap(), 0);
        assert_eq!(falsification_rate(10, |s| Ok(s % 2 == 0)).unwrap(), 5);
    }
}
