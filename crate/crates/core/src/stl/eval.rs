//! Bottom-up evaluation of formulas over sampled trajectories.
//!
//! Each subformula is evaluated once into a signal over the sample grid. A
//! signal covers a prefix `0..len` of sample indices: past `len` some temporal
//! window of the subformula would run off the end of the trajectory.

use std::collections::VecDeque;

use super::formula::{Cmp, Formula};
use crate::error::{Error, Result};
use crate::types::Trajectory;

/// Robustness values whose magnitude is below this are reported as boundary
/// cases, where strict atoms may disagree with the sign of the robustness.
pub const BOUNDARY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub robustness: f64,
    pub satisfied: bool,
    pub boundary: bool,
}

enum Node {
    True,
    Atom {
        terms: Vec<(f64, usize)>,
        cmp: Cmp,
        threshold: f64,
    },
    Not(Box<Node>),
    And(Box<Node>, Box<Node>),
    Or(Box<Node>, Box<Node>),
    Implies(Box<Node>, Box<Node>),
    Until(Window, Box<Node>, Box<Node>),
    Always(Window, Box<Node>),
    Eventually(Window, Box<Node>),
}

/// A time interval converted to sample offsets `[lo, hi]`.
#[derive(Clone, Copy)]
struct Window {
    lo: usize,
    hi: usize,
}

impl Window {
    fn new(lo: f64, hi: f64, dt: f64) -> Option<Window> {
        let lo = (lo / dt - 1e-9).ceil().max(0.0) as usize;
        let hi = (hi / dt + 1e-9).floor() as usize;
        (lo <= hi).then_some(Window { lo, hi })
    }

    /// Window `[start, end]` at sample `i` clipped to `last`, if non-empty.
    fn at(&self, i: usize, last: usize) -> Option<(usize, usize)> {
        let start = i + self.lo;
        (start <= last).then(|| (start, (i + self.hi).min(last)))
    }
}

fn compile(f: &Formula, traj: &Trajectory) -> Result<Node> {
    let dt = traj.dt();
    let window = |lo: f64, hi: f64| {
        Window::new(lo, hi, dt).ok_or(Error::HorizonInsufficient {
            time: lo,
            horizon: traj.horizon(),
        })
    };
    Ok(match f {
        Formula::True => Node::True,
        Formula::Atom {
            lhs,
            cmp,
            threshold,
        } => Node::Atom {
            terms: lhs
                .terms
                .iter()
                .map(|(c, v)| {
                    traj.var_index(v)
                        .map(|idx| (*c, idx))
                        .ok_or_else(|| Error::UnknownVariable(v.clone()))
                })
                .collect::<Result<_>>()?,
            cmp: *cmp,
            threshold: *threshold,
        },
        Formula::Not(g) => Node::Not(Box::new(compile(g, traj)?)),
        Formula::And(a, b) => Node::And(Box::new(compile(a, traj)?), Box::new(compile(b, traj)?)),
        Formula::Or(a, b) => Node::Or(Box::new(compile(a, traj)?), Box::new(compile(b, traj)?)),
        Formula::Implies(a, b) => {
            Node::Implies(Box::new(compile(a, traj)?), Box::new(compile(b, traj)?))
        }
        Formula::Until(i, a, b) => Node::Until(
            window(i.lo, i.hi)?,
            Box::new(compile(a, traj)?),
            Box::new(compile(b, traj)?),
        ),
        Formula::Always(i, g) => Node::Always(window(i.lo, i.hi)?, Box::new(compile(g, traj)?)),
        Formula::Eventually(i, g) => {
            Node::Eventually(window(i.lo, i.hi)?, Box::new(compile(g, traj)?))
        }
    })
}

fn linear_value(terms: &[(f64, usize)], state: &[f64]) -> f64 {
    terms.iter().map(|(c, idx)| c * state[*idx]).sum()
}

/// Length of the prefix on which a unary temporal operator is defined.
fn unary_len(w: Window, child_len: usize, last: usize) -> usize {
    (0..=last)
        .take_while(|&i| matches!(w.at(i, last), Some((_, end)) if end < child_len))
        .count()
}

fn until_len(w: Window, left_len: usize, right_len: usize, last: usize) -> usize {
    (0..=last)
        .take_while(|&i| match w.at(i, last) {
            Some((_, end)) => end < right_len && (end == i || end - 1 < left_len),
            None => false,
        })
        .count()
}

/// Sliding-window extremum over `values` for windows `w.at(i, last)`,
/// `i in 0..len`. Both window ends are non-decreasing in `i`, so a monotone
/// deque suffices.
fn sliding_extreme(values: &[f64], w: Window, len: usize, last: usize, max: bool) -> Vec<f64> {
    let better = |a: f64, b: f64| if max { a >= b } else { a <= b };
    let mut out = Vec::with_capacity(len);
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for i in 0..len {
        let (start, end) = w.at(i, last).expect("window checked by unary_len");
        while next <= end {
            while deque.back().is_some_and(|&b| better(values[next], values[b])) {
                deque.pop_back();
            }
            deque.push_back(next);
            next += 1;
        }
        while deque.front().is_some_and(|&f| f < start) {
            deque.pop_front();
        }
        out.push(values[*deque.front().expect("non-empty window")]);
    }
    out
}

fn robustness_signal(node: &Node, traj: &Trajectory) -> Vec<f64> {
    let last = traj.last_index();
    match node {
        Node::True => vec![f64::INFINITY; last + 1],
        Node::Atom {
            terms,
            cmp,
            threshold,
        } => traj
            .states()
            .iter()
            .map(|s| {
                let v = linear_value(terms, s);
                if cmp.is_upper_bound() {
                    threshold - v
                } else {
                    v - threshold
                }
            })
            .collect(),
        Node::Not(g) => robustness_signal(g, traj).into_iter().map(|v| -v).collect(),
        Node::And(a, b) => zip_with(robustness_signal(a, traj), robustness_signal(b, traj), f64::min),
        Node::Or(a, b) => zip_with(robustness_signal(a, traj), robustness_signal(b, traj), f64::max),
        Node::Implies(a, b) => zip_with(robustness_signal(a, traj), robustness_signal(b, traj), |x, y| {
            f64::max(-x, y)
        }),
        Node::Always(w, g) => {
            let child = robustness_signal(g, traj);
            let len = unary_len(*w, child.len(), last);
            sliding_extreme(&child, *w, len, last, false)
        }
        Node::Eventually(w, g) => {
            let child = robustness_signal(g, traj);
            let len = unary_len(*w, child.len(), last);
            sliding_extreme(&child, *w, len, last, true)
        }
        Node::Until(w, a, b) => {
            let left = robustness_signal(a, traj);
            let right = robustness_signal(b, traj);
            let len = until_len(*w, left.len(), right.len(), last);
            (0..len)
                .map(|i| {
                    let (start, end) = w.at(i, last).expect("window checked by until_len");
                    let mut prefix_min = f64::INFINITY;
                    let mut best = f64::NEG_INFINITY;
                    for j in i..=end {
                        if j >= start {
                            best = best.max(right[j].min(prefix_min));
                        }
                        if j < end {
                            prefix_min = prefix_min.min(left[j]);
                        }
                    }
                    best
                })
                .collect()
        }
    }
}

fn boolean_signal(node: &Node, traj: &Trajectory) -> Vec<bool> {
    let last = traj.last_index();
    match node {
        Node::True => vec![true; last + 1],
        Node::Atom {
            terms,
            cmp,
            threshold,
        } => traj
            .states()
            .iter()
            .map(|s| cmp.holds(linear_value(terms, s), *threshold))
            .collect(),
        Node::Not(g) => boolean_signal(g, traj).into_iter().map(|v| !v).collect(),
        Node::And(a, b) => zip_with(boolean_signal(a, traj), boolean_signal(b, traj), |x, y| x && y),
        Node::Or(a, b) => zip_with(boolean_signal(a, traj), boolean_signal(b, traj), |x, y| x || y),
        Node::Implies(a, b) => {
            zip_with(boolean_signal(a, traj), boolean_signal(b, traj), |x, y| !x || y)
        }
        Node::Always(w, g) | Node::Eventually(w, g) => {
            let child = boolean_signal(g, traj);
            let len = unary_len(*w, child.len(), last);
            // prefix[j] = number of true samples in 0..j
            let mut prefix = Vec::with_capacity(child.len() + 1);
            prefix.push(0usize);
            for &v in &child {
                prefix.push(prefix.last().unwrap() + usize::from(v));
            }
            let always = matches!(node, Node::Always(..));
            (0..len)
                .map(|i| {
                    let (start, end) = w.at(i, last).unwrap();
                    let count = prefix[end + 1] - prefix[start];
                    if always {
                        count == end + 1 - start
                    } else {
                        count > 0
                    }
                })
                .collect()
        }
        Node::Until(w, a, b) => {
            let left = boolean_signal(a, traj);
            let right = boolean_signal(b, traj);
            let len = until_len(*w, left.len(), right.len(), last);
            (0..len)
                .map(|i| {
                    let (start, end) = w.at(i, last).unwrap();
                    let mut prefix_holds = true;
                    for j in i..=end {
                        if j >= start && right[j] && prefix_holds {
                            return true;
                        }
                        if j < end {
                            prefix_holds &= left[j];
                            if !prefix_holds {
                                return false;
                            }
                        }
                    }
                    false
                })
                .collect()
        }
    }
}

fn zip_with<T: Copy>(a: Vec<T>, b: Vec<T>, f: impl Fn(T, T) -> T) -> Vec<T> {
    a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

fn lookup<T: Copy>(signal: &[T], index: usize, traj: &Trajectory) -> Result<T> {
    signal.get(index).copied().ok_or(Error::HorizonInsufficient {
        time: traj.time(index),
        horizon: traj.horizon(),
    })
}

/// Robustness of `formula` on `traj` at every sample index where it is
/// defined (a prefix of the grid).
pub fn robustness_trace(formula: &Formula, traj: &Trajectory) -> Result<Vec<f64>> {
    let node = compile(formula, traj)?;
    Ok(robustness_signal(&node, traj))
}

/// Quantitative robustness at time `t`, which must lie on the sample grid.
pub fn robustness(formula: &Formula, traj: &Trajectory, t: f64) -> Result<f64> {
    let index = traj.index_of_time(t)?;
    let node = compile(formula, traj)?;
    lookup(&robustness_signal(&node, traj), index, traj)
}

/// Boolean satisfaction at time `t`, evaluated directly (strict and
/// non-strict atoms differ only here).
pub fn satisfies(formula: &Formula, traj: &Trajectory, t: f64) -> Result<bool> {
    let index = traj.index_of_time(t)?;
    let node = compile(formula, traj)?;
    lookup(&boolean_signal(&node, traj), index, traj)
}

pub fn check(formula: &Formula, traj: &Trajectory, t: f64) -> Result<Verdict> {
    let index = traj.index_of_time(t)?;
    let node = compile(formula, traj)?;
    let robustness = lookup(&robustness_signal(&node, traj), index, traj)?;
    let satisfied = lookup(&boolean_signal(&node, traj), index, traj)?;
    Ok(Verdict {
        robustness,
        satisfied,
        boundary: robustness.abs() < BOUNDARY_EPS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::{parse, Interval};

    fn constant(var: &str, value: f64, n: usize, dt: f64) -> Trajectory {
        Trajectory::new(dt, vec![var.into()], vec![vec![value]; n]).unwrap()
    }

    fn series(values: &[f64]) -> Trajectory {
        Trajectory::new(1.0, vec!["x".into()], values.iter().map(|v| vec![*v]).collect()).unwrap()
    }

    #[test]
    fn constant_trace_always() {
        let traj = constant("x", 5.0, 11, 1.0);
        let f = parse("G[0,10] x < 20").unwrap();
        assert_eq!(robustness(&f, &traj, 0.0).unwrap(), 15.0);
        assert_eq!(robustness(&Formula::not(f), &traj, 0.0).unwrap(), -15.0);
    }

    #[test]
    fn strictness_boundary() {
        let traj = constant("x", 20.0, 1, 1.0);
        let strict = parse("x < 20").unwrap();
        let loose = parse("x <= 20").unwrap();
        assert!(!satisfies(&strict, &traj, 0.0).unwrap());
        assert!(satisfies(&loose, &traj, 0.0).unwrap());
        let v = check(&strict, &traj, 0.0).unwrap();
        assert!(v.boundary);
        assert_eq!(v.robustness, 0.0);
        assert!(satisfies(&parse("x < 20.5").unwrap(), &constant("x", 5.0, 1, 1.0), 0.0).unwrap());
    }

    #[test]
    fn greater_than_robustness() {
        let traj = series(&[3.0]);
        assert_eq!(robustness(&parse("x > 1").unwrap(), &traj, 0.0).unwrap(), 2.0);
        assert_eq!(robustness(&parse("x >= 5").unwrap(), &traj, 0.0).unwrap(), -2.0);
    }

    #[test]
    fn eventually_and_always_windows() {
        let traj = series(&[0.0, 1.0, 5.0, 2.0, -1.0]);
        let ev = parse("F[1,2] x > 0").unwrap();
        assert_eq!(robustness_trace(&ev, &traj).unwrap(), vec![5.0, 5.0, 2.0, -1.0]);
        let al = parse("G[0,1] x > 0").unwrap();
        assert_eq!(robustness_trace(&al, &traj).unwrap(), vec![0.0, 1.0, 2.0, -1.0, -1.0]);
    }

    #[test]
    fn until_uses_half_open_prefix() {
        // left holds only at 0, right becomes true at 1
        let traj = Trajectory::new(
            1.0,
            vec!["a".into(), "b".into()],
            vec![vec![1.0, -1.0], vec![-1.0, 2.0], vec![-1.0, 3.0]],
        )
        .unwrap();
        let f = parse("a > 0 U[0,2] b > 0").unwrap();
        // j=0: min(-1, inf) = -1; j=1: min(2, 1) = 1; j=2: min(3, min(1,-1)) = -1
        assert_eq!(robustness(&f, &traj, 0.0).unwrap(), 1.0);
        assert!(satisfies(&f, &traj, 0.0).unwrap());
    }

    #[test]
    fn horizon_insufficient_is_an_error() {
        let traj = series(&[0.0, 1.0, 2.0]);
        let f = parse("F[3,4] x > 0").unwrap();
        assert!(matches!(
            robustness(&f, &traj, 0.0),
            Err(Error::HorizonInsufficient { .. })
        ));
        let g = parse("F[1,4] x > 0").unwrap();
        assert_eq!(robustness(&g, &traj, 0.0).unwrap(), 2.0);
        assert!(matches!(
            robustness(&g, &traj, 2.0),
            Err(Error::HorizonInsufficient { .. })
        ));
    }

    #[test]
    fn unknown_variable() {
        let traj = series(&[0.0]);
        assert!(matches!(
            robustness(&parse("y < 1").unwrap(), &traj, 0.0),
            Err(Error::UnknownVariable(v)) if v == "y"
        ));
    }

    #[test]
    fn off_grid_time_rejected() {
        let traj = series(&[0.0, 1.0]);
        assert!(matches!(
            robustness(&parse("x < 1").unwrap(), &traj, 0.5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn linear_atoms() {
        let traj = Trajectory::new(
            1.0,
            vec!["y4".into(), "y5".into()],
            vec![vec![10.0, 45.0], vec![10.0, 30.0]],
        )
        .unwrap();
        let f = parse("G[0,1] y5 - y4 <= 40").unwrap();
        assert_eq!(robustness(&f, &traj, 0.0).unwrap(), 5.0);
    }

    #[test]
    fn true_robustness_is_infinite() {
        let traj = series(&[0.0, 1.0]);
        assert_eq!(robustness(&Formula::True, &traj, 0.0).unwrap(), f64::INFINITY);
        let f = Formula::until(Interval::new(0.0, 1.0).unwrap(), Formula::True, parse("x > 0").unwrap());
        assert_eq!(robustness(&f, &traj, 0.0).unwrap(), 1.0);
    }
}
