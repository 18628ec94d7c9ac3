use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::surrogate::Surrogate;
use crate::error::{Error, Result};
use crate::rng::{stream, StreamRng};
use crate::types::Hyperbox;

/// `Σ coeffs·y ≤ bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub coeffs: Vec<f64>,
    pub bound: f64,
}

impl HalfSpace {
    /// Amount by which `y` violates the constraint; non-positive inside.
    pub fn slack(&self, y: &[f64]) -> f64 {
        let lhs: f64 = self.coeffs.iter().zip(y).map(|(c, v)| c * v).sum();
        lhs - self.bound
    }
}

/// Find `x ∈ input` such that the network output lies in `unsafe_set`
/// (a conjunction of half-spaces).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachabilitySpec {
    pub input: Hyperbox,
    pub unsafe_set: Vec<HalfSpace>,
}

impl ReachabilitySpec {
    pub fn new(input: Hyperbox, unsafe_set: Vec<HalfSpace>) -> Result<Self> {
        if input.is_degenerate() {
            return Err(Error::Domain(format!("reachability input box {input} is degenerate")));
        }
        if unsafe_set.is_empty() {
            return Err(Error::Domain("the unsafe set needs at least one constraint".into()));
        }
        let m = unsafe_set[0].coeffs.len();
        if let Some(h) = unsafe_set.iter().find(|h| h.coeffs.len() != m) {
            return Err(Error::dim("half-space coefficients", m, h.coeffs.len()));
        }
        Ok(ReachabilitySpec { input, unsafe_set })
    }

    /// Unsafe set given as an output box; infinite sides are dropped.
    pub fn with_box(input: Hyperbox, lows: &[f64], highs: &[f64]) -> Result<Self> {
        if lows.len() != highs.len() {
            return Err(Error::dim("unsafe box", lows.len(), highs.len()));
        }
        let m = lows.len();
        let mut hs = Vec::new();
        for i in 0..m {
            let mut e = vec![0.0; m];
            if highs[i].is_finite() {
                e[i] = 1.0;
                hs.push(HalfSpace {
                    coeffs: e.clone(),
                    bound: highs[i],
                });
            }
            if lows[i].is_finite() {
                e[i] = -1.0;
                hs.push(HalfSpace {
                    coeffs: e,
                    bound: -lows[i],
                });
            }
        }
        ReachabilitySpec::new(input, hs)
    }

    pub fn output_dim(&self) -> usize {
        self.unsafe_set[0].coeffs.len()
    }

    pub fn contains_output(&self, y: &[f64]) -> bool {
        self.unsafe_set.iter().all(|h| h.slack(y) <= 0.0)
    }

    /// Hinge loss `Σ max(0, slack)`; zero exactly on the unsafe set.
    pub fn loss(&self, y: &[f64]) -> f64 {
        self.unsafe_set.iter().map(|h| h.slack(y).max(0.0)).sum()
    }

    fn loss_gradient(&self, y: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; y.len()];
        for h in &self.unsafe_set {
            if h.slack(y) > 0.0 {
                for (gi, c) in g.iter_mut().zip(&h.coeffs) {
                    *gi += c;
                }
            }
        }
        g
    }
}

/// Excluded neighbourhoods of spurious candidates, in scaled input space.
///
/// Every stored centre owns the closed L∞ ball of radius `delta`. New
/// candidates must keep their own ball clear of all stored balls, so the
/// stored balls are pairwise disjoint.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpuriousSet {
    pub delta: f64,
    pub centres: Vec<Vec<f64>>,
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

impl SpuriousSet {
    pub fn new(delta: f64) -> Self {
        SpuriousSet {
            delta,
            centres: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.centres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centres.is_empty()
    }

    /// Whether `z` lies in a stored ball.
    pub fn contains(&self, z: &[f64]) -> bool {
        self.centres.iter().any(|c| linf(c, z) <= self.delta)
    }

    /// Whether `z` may not be returned as a candidate.
    pub fn blocks(&self, z: &[f64]) -> bool {
        self.centres.iter().any(|c| linf(c, z) <= 2.0 * self.delta)
    }

    pub fn exclude(&mut self, z: Vec<f64>) {
        self.centres.push(z);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pgd,
    Fgsm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    pub method: Method,
    pub iterations: usize,
    /// Signed-gradient step in scaled units (PGD).
    pub step: f64,
    /// Perturbation size in scaled units (FGSM).
    pub epsilon: f64,
    pub restarts: usize,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            method: Method::Pgd,
            iterations: 100,
            step: 0.01,
            epsilon: 0.1,
            restarts: 10,
        }
    }
}

/// Result of one attack call. `candidate` is in unscaled units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub candidate: Option<Vec<f64>>,
    /// Gradient evaluations over all restarts up to and including the
    /// successful one.
    pub iterations: usize,
}

struct Problem<'a> {
    model: &'a Surrogate,
    spec: &'a ReachabilitySpec,
    psi: &'a SpuriousSet,
    /// `spec.input` in scaled coordinates.
    bounds: Hyperbox,
}

impl<'a> Problem<'a> {
    fn new(model: &'a Surrogate, spec: &'a ReachabilitySpec, psi: &'a SpuriousSet) -> Result<Self> {
        if spec.input.dim() != model.input_dim() {
            return Err(Error::dim("reachability input box", model.input_dim(), spec.input.dim()));
        }
        if spec.output_dim() != model.output_dim() {
            return Err(Error::dim("unsafe set", model.output_dim(), spec.output_dim()));
        }
        let s = &model.input_scaling;
        let bounds = Hyperbox::new(s.scale(spec.input.lows()), s.scale(spec.input.highs()))?;
        Ok(Problem {
            model,
            spec,
            psi,
            bounds,
        })
    }

    fn start(&self, rng: &mut StreamRng) -> Vec<f64> {
        for _ in 0..64 {
            let z = self.bounds.sample(rng);
            if !self.psi.blocks(&z) {
                return z;
            }
        }
        self.bounds.sample(rng)
    }

    /// Unscaled candidate for `z` if it passes every acceptance check.
    fn accept(&self, z: &[f64]) -> Result<Option<Vec<f64>>> {
        let mut x = self.model.input_scaling.unscale(z);
        self.spec.input.project(&mut x);
        let z = self.model.input_scaling.scale(&x);
        if self.psi.blocks(&z) {
            return Ok(None);
        }
        let y = self.model.predict_scaled(&z)?;
        Ok((self.spec.loss(&y) == 0.0).then_some(x))
    }

    fn signed_step(&self, z: &mut [f64], size: f64) -> Result<()> {
        let (_, g) = self
            .model
            .gradient_scaled(z, |y| self.spec.loss_gradient(y))?;
        for (zi, gi) in z.iter_mut().zip(&g) {
            if *gi != 0.0 {
                *zi -= size * gi.signum();
            }
        }
        self.bounds.project(z);
        Ok(())
    }

    fn pgd(&self, rng: &mut StreamRng, iterations: usize, step: f64) -> Result<(Option<Vec<f64>>, usize)> {
        let mut z = self.start(rng);
        for it in 0..iterations {
            if let Some(x) = self.accept(&z)? {
                return Ok((Some(x), it));
            }
            self.signed_step(&mut z, step)?;
            if self.psi.blocks(&z) {
                z = self.start(rng);
            }
        }
        Ok((self.accept(&z)?, iterations))
    }

    fn fgsm(&self, rng: &mut StreamRng, epsilon: f64) -> Result<(Option<Vec<f64>>, usize)> {
        let mut z = self.start(rng);
        if let Some(x) = self.accept(&z)? {
            return Ok((Some(x), 0));
        }
        self.signed_step(&mut z, epsilon)?;
        Ok((self.accept(&z)?, 1))
    }
}

fn restarts(
    n: usize,
    seed: u64,
    key: &[u64],
    run: impl Fn(&mut StreamRng) -> Result<(Option<Vec<f64>>, usize)> + Sync,
) -> Result<AttackOutcome> {
    let results: Vec<(Option<Vec<f64>>, usize)> = (0..n as u64)
        .into_par_iter()
        .map(|r| {
            let mut path = key.to_vec();
            path.push(r);
            run(&mut stream(seed, &path))
        })
        .collect::<Result<_>>()?;
    let mut iterations = 0;
    for (candidate, its) in results {
        iterations += its;
        if candidate.is_some() {
            return Ok(AttackOutcome {
                candidate,
                iterations,
            });
        }
    }
    Ok(AttackOutcome {
        candidate: None,
        iterations,
    })
}

/// Projected signed-gradient descent on the hinge loss, with random restarts.
/// The lowest-index successful restart wins.
pub fn pgd_attack(
    model: &Surrogate,
    spec: &ReachabilitySpec,
    psi: &SpuriousSet,
    iterations: usize,
    step: f64,
    restart_count: usize,
    seed: u64,
) -> Result<AttackOutcome> {
    let p = Problem::new(model, spec, psi)?;
    restarts(restart_count, seed, &[3], |rng| p.pgd(rng, iterations, step))
}

/// One signed-gradient step of size `epsilon` from random points.
pub fn fgsm_attack(
    model: &Surrogate,
    spec: &ReachabilitySpec,
    psi: &SpuriousSet,
    epsilon: f64,
    restart_count: usize,
    seed: u64,
) -> Result<AttackOutcome> {
    let p = Problem::new(model, spec, psi)?;
    restarts(restart_count, seed, &[4], |rng| p.fgsm(rng, epsilon))
}

pub fn attack(
    model: &Surrogate,
    spec: &ReachabilitySpec,
    psi: &SpuriousSet,
    cfg: &AttackConfig,
    seed: u64,
) -> Result<AttackOutcome> {
    match cfg.method {
        Method::Pgd => pgd_attack(model, spec, psi, cfg.iterations, cfg.step, cfg.restarts, seed),
        Method::Fgsm => fgsm_attack(model, spec, psi, cfg.epsilon, cfg.restarts, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnfal::mlp::Mlp;

    fn identity() -> Surrogate {
        Surrogate::identity(Mlp::from_layers(&[(vec![vec![1.0]], vec![0.0])]).unwrap())
    }

    fn unit() -> Hyperbox {
        Hyperbox::new(vec![0.0], vec![1.0]).unwrap()
    }

    #[test]
    fn identity_net_reaches_upper_band() {
        let spec = ReachabilitySpec::with_box(unit(), &[0.9], &[f64::INFINITY]).unwrap();
        let psi = SpuriousSet::new(1e-3);
        let out = pgd_attack(&identity(), &spec, &psi, 200, 0.01, 1, 0).unwrap();
        let x = out.candidate.unwrap();
        assert!(x[0] >= 0.9 && x[0] <= 1.0);
        assert!(out.iterations <= 100);

        let out = fgsm_attack(&identity(), &spec, &psi, 1.0, 1, 0).unwrap();
        assert!(out.candidate.unwrap()[0] >= 0.9);
    }

    #[test]
    fn clamped_net_never_reaches() {
        // y = -relu(x) - 1 stays below -1
        let net = Mlp::from_layers(&[(vec![vec![1.0]], vec![0.0]), (vec![vec![-1.0]], vec![-1.0])]).unwrap();
        let spec = ReachabilitySpec::with_box(unit(), &[0.0], &[f64::INFINITY]).unwrap();
        let psi = SpuriousSet::new(1e-3);
        let s = Surrogate::identity(net);
        assert_eq!(pgd_attack(&s, &spec, &psi, 50, 0.05, 4, 1).unwrap().candidate, None);
        assert_eq!(fgsm_attack(&s, &spec, &psi, 0.5, 4, 1).unwrap().candidate, None);
    }

    #[test]
    fn excluded_points_are_avoided() {
        let spec = ReachabilitySpec::with_box(unit(), &[0.9], &[f64::INFINITY]).unwrap();
        let mut psi = SpuriousSet::new(1e-3);
        let first = pgd_attack(&identity(), &spec, &psi, 200, 0.01, 1, 5).unwrap().candidate.unwrap();
        psi.exclude(first.clone());
        let second = pgd_attack(&identity(), &spec, &psi, 200, 0.01, 1, 5).unwrap().candidate;
        if let Some(x) = second {
            assert!((x[0] - first[0]).abs() > 1e-3);
        }

        let mut exact = SpuriousSet::new(0.0);
        exact.exclude(vec![0.5]);
        assert!(exact.blocks(&[0.5]) && !exact.blocks(&[0.5 + 1e-15]));
    }

    #[test]
    fn spec_validation() {
        assert!(ReachabilitySpec::new(unit(), vec![]).is_err());
        let point = Hyperbox::new(vec![0.5], vec![0.5]).unwrap();
        assert!(ReachabilitySpec::with_box(point, &[0.0], &[1.0]).is_err());
        let spec = ReachabilitySpec::with_box(unit(), &[0.0, -1.0], &[1.0, f64::INFINITY]).unwrap();
        assert_eq!(spec.unsafe_set.len(), 3);
        assert!(spec.contains_output(&[0.5, 7.0]));
        assert_eq!(spec.loss(&[1.5, -2.0]), 1.5);
        assert!(pgd_attack(&identity(), &spec, &SpuriousSet::new(0.0), 1, 0.1, 1, 0).is_err());
    }
}
