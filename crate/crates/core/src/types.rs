//! Shared numeric types: trajectories, input signals, search spaces and
//! counterexamples.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniformly sampled state evolution. Sample `j` holds the state at time `j * dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTrajectory")]
pub struct Trajectory {
    dt: f64,
    var_names: Vec<String>,
    states: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawTrajectory {
    dt: f64,
    var_names: Vec<String>,
    states: Vec<Vec<f64>>,
}

impl TryFrom<RawTrajectory> for Trajectory {
    type Error = Error;

    fn try_from(raw: RawTrajectory) -> Result<Self> {
        Trajectory::new(raw.dt, raw.var_names, raw.states)
    }
}

impl Trajectory {
    pub fn new(dt: f64, var_names: Vec<String>, states: Vec<Vec<f64>>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(format!("time step must be positive, got {dt}")));
        }
        if states.is_empty() {
            return Err(Error::Domain("trajectory has no samples".into()));
        }
        let n = var_names.len();
        for state in &states {
            if state.len() != n {
                return Err(Error::dim("trajectory state", n, state.len()));
            }
        }
        Ok(Trajectory {
            dt,
            var_names,
            states,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.var_names.len()
    }

    pub fn last_index(&self) -> usize {
        self.states.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.last_index() as f64 * self.dt
    }

    pub fn time(&self, index: usize) -> f64 {
        index as f64 * self.dt
    }

    pub fn state(&self, index: usize) -> &[f64] {
        &self.states[index]
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.var_names.iter().position(|v| v == name)
    }

    /// Maps a time to its sample index. The time must lie on the grid (within
    /// a relative tolerance of 1e-9 of a step).
    pub fn index_of_time(&self, t: f64) -> Result<usize> {
        let pos = t / self.dt;
        let idx = pos.round();
        if !(idx >= 0.0) || (pos - idx).abs() > 1e-9 * pos.abs().max(1.0) {
            return Err(Error::Domain(format!(
                "time {t} is not on the sample grid (dt = {})",
                self.dt
            )));
        }
        let idx = idx as usize;
        if idx > self.last_index() {
            return Err(Error::Domain(format!(
                "time {t} is past the trajectory horizon {}",
                self.horizon()
            )));
        }
        Ok(idx)
    }

    /// Index of the grid point nearest to `t`, clamped to the trajectory.
    pub fn nearest_index(&self, t: f64) -> usize {
        let idx = (t / self.dt).round();
        if idx <= 0.0 {
            0
        } else {
            (idx as usize).min(self.last_index())
        }
    }

    /// CSV with a `time,var1,...,varn` header and one row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time");
        for name in &self.var_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (j, state) in self.states.iter().enumerate() {
            write!(out, "{}", self.time(j)).unwrap();
            for v in state {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Parses the `time,var...` CSV layout. The time step is inferred from the
    /// first two rows and every row must sit on that grid.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Domain("empty trajectory CSV".into()))?;
        let mut cols = header.split(',').map(|s| s.trim().to_string());
        match cols.next() {
            Some(first) if first == "time" => {}
            _ => {
                return Err(Error::Domain(
                    "trajectory CSV header must start with `time`".into(),
                ))
            }
        }
        let var_names: Vec<String> = cols.collect();
        let mut times = Vec::new();
        let mut states = Vec::new();
        for (row, line) in lines.enumerate() {
            let mut fields = line.split(',').map(|f| {
                f.trim().parse::<f64>().map_err(|e| {
                    Error::Domain(format!("row {}: bad number `{}`: {e}", row + 1, f.trim()))
                })
            });
            let t = fields
                .next()
                .ok_or_else(|| Error::Domain(format!("row {}: missing time", row + 1)))??;
            let state = fields.collect::<Result<Vec<f64>>>()?;
            if state.len() != var_names.len() {
                return Err(Error::dim("trajectory CSV row", var_names.len(), state.len()));
            }
            times.push(t);
            states.push(state);
        }
        let dt = match times.as_slice() {
            [] => return Err(Error::Domain("trajectory CSV has no rows".into())),
            [_] => 1.0,
            [t0, t1, ..] => t1 - t0,
        };
        for (j, &t) in times.iter().enumerate() {
            let expected = j as f64 * dt;
            if (t - expected).abs() > 1e-9 * expected.abs().max(1.0) {
                return Err(Error::Domain(format!(
                    "row {} has time {t}, expected {expected} on a uniform grid",
                    j + 1
                )));
            }
        }
        Trajectory::new(dt, var_names, states)
    }
}

/// Input signal that is constant on `k` equal segments of `[0, horizon]`.
/// Segment `j` covers `[j*T/k, (j+1)*T/k)`; the horizon itself belongs to the
/// last segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSignal")]
pub struct PiecewiseConstantSignal {
    horizon: f64,
    values: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawSignal {
    horizon: f64,
    values: Vec<Vec<f64>>,
}

impl TryFrom<RawSignal> for PiecewiseConstantSignal {
    type Error = Error;

    fn try_from(raw: RawSignal) -> Result<Self> {
        PiecewiseConstantSignal::new(raw.horizon, raw.values)
    }
}

impl PiecewiseConstantSignal {
    pub fn new(horizon: f64, values: Vec<Vec<f64>>) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Domain(format!("signal horizon must be positive, got {horizon}")));
        }
        if values.is_empty() {
            return Err(Error::Domain("signal needs at least one segment".into()));
        }
        let m = values[0].len();
        if let Some(bad) = values.iter().find(|v| v.len() != m) {
            return Err(Error::dim("signal segment", m, bad.len()));
        }
        Ok(PiecewiseConstantSignal { horizon, values })
    }

    /// A signal with `k` segments of zero-dimensional input.
    pub fn empty(horizon: f64, k: usize) -> Result<Self> {
        Self::new(horizon, vec![Vec::new(); k.max(1)])
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn segments(&self) -> usize {
        self.values.len()
    }

    pub fn input_dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn segment_index(&self, t: f64) -> Result<usize> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::Domain(format!(
                "signal evaluated at t={t}, outside [0, {}]",
                self.horizon
            )));
        }
        let k = self.values.len();
        let mut idx = ((t * k as f64 / self.horizon).floor() as usize).min(k - 1);
        // Reconcile the floor with the segment starts as `segment_start` computes them.
        if idx + 1 < k && t >= self.segment_start(idx + 1) {
            idx += 1;
        } else if idx > 0 && t < self.segment_start(idx) {
            idx -= 1;
        }
        Ok(idx)
    }

    pub fn segment_start(&self, j: usize) -> f64 {
        j as f64 * self.horizon / self.values.len() as f64
    }

    pub fn eval(&self, t: f64) -> Result<&[f64]> {
        Ok(&self.values[self.segment_index(t)?])
    }
}

/// Axis-aligned box `[lows[i], highs[i]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox")]
pub struct Hyperbox {
    lows: Vec<f64>,
    highs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawBox {
    lows: Vec<f64>,
    highs: Vec<f64>,
}

impl TryFrom<RawBox> for Hyperbox {
    type Error = Error;

    fn try_from(raw: RawBox) -> Result<Self> {
        Hyperbox::new(raw.lows, raw.highs)
    }
}

impl Hyperbox {
    pub fn new(lows: Vec<f64>, highs: Vec<f64>) -> Result<Self> {
        if lows.len() != highs.len() {
            return Err(Error::dim("box bounds", lows.len(), highs.len()));
        }
        for (i, (lo, hi)) in lows.iter().zip(&highs).enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return Err(Error::Domain(format!(
                    "box dimension {i}: invalid bounds [{lo}, {hi}]"
                )));
            }
        }
        Ok(Hyperbox { lows, highs })
    }

    pub fn from_intervals(intervals: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            intervals.iter().map(|i| i.0).collect(),
            intervals.iter().map(|i| i.1).collect(),
        )
    }

    /// The zero-dimensional box (used for systems without inputs).
    pub fn unit() -> Self {
        Hyperbox {
            lows: Vec::new(),
            highs: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lows.len()
    }

    pub fn lows(&self) -> &[f64] {
        &self.lows
    }

    pub fn highs(&self) -> &[f64] {
        &self.highs
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lows.iter().zip(&self.highs))
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    pub fn project(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lows.iter().zip(&self.highs)) {
            *v = v.clamp(*lo, *hi);
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.lows.iter().zip(&self.highs).any(|(lo, hi)| lo == hi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lows
            .iter()
            .zip(&self.highs)
            .map(|(&lo, &hi)| rng.gen_range(lo..=hi))
            .collect()
    }

    /// Cartesian product `self × other`.
    pub fn product(&self, other: &Hyperbox) -> Hyperbox {
        Hyperbox {
            lows: [self.lows.as_slice(), other.lows.as_slice()].concat(),
            highs: [self.highs.as_slice(), other.highs.as_slice()].concat(),
        }
    }
}

impl fmt::Display for Hyperbox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (lo, hi)) in self.lows.iter().zip(&self.highs).enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{lo}:{hi}")?;
        }
        Ok(())
    }
}

/// Parses `lo:hi,lo:hi,...`; a bare number `v` means the degenerate `v:v`.
impl FromStr for Hyperbox {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Hyperbox::unit());
        }
        let mut intervals = Vec::new();
        for part in s.split(',') {
            let num = |t: &str| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad box bound `{}`: {e}", t.trim())))
            };
            let interval = match part.split_once(':') {
                Some((lo, hi)) => (num(lo)?, num(hi)?),
                None => {
                    let v = num(part)?;
                    (v, v)
                }
            };
            intervals.push(interval);
        }
        Hyperbox::from_intervals(&intervals)
    }
}

/// The falsification search variable: an initial state and an input signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchPoint {
    pub x0: Vec<f64>,
    pub u: PiecewiseConstantSignal,
}

/// Shape of a flattened search point: `[x0, u_0, ..., u_{k-1}]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchLayout {
    pub init_dim: usize,
    pub input_dim: usize,
    pub segments: usize,
    pub horizon: f64,
}

impl SearchLayout {
    pub fn new(init_dim: usize, input_dim: usize, segments: usize, horizon: f64) -> Result<Self> {
        if segments == 0 {
            return Err(Error::Config("input discretization k must be at least 1".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        Ok(SearchLayout {
            init_dim,
            input_dim,
            segments,
            horizon,
        })
    }

    pub fn feature_count(&self) -> usize {
        self.init_dim + self.segments * self.input_dim
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.init_dim).map(|i| format!("x0_{i}")).collect();
        for j in 0..self.segments {
            for r in 0..self.input_dim {
                names.push(format!("u_{j}_{r}"));
            }
        }
        names
    }

    /// Flattened search box: `init × input^k`.
    pub fn search_box(&self, init: &Hyperbox, input: &Hyperbox) -> Result<Hyperbox> {
        if init.dim() != self.init_dim {
            return Err(Error::dim("initial box", self.init_dim, init.dim()));
        }
        if input.dim() != self.input_dim {
            return Err(Error::dim("input box", self.input_dim, input.dim()));
        }
        let mut b = init.clone();
        for _ in 0..self.segments {
            b = b.product(input);
        }
        Ok(b)
    }

    pub fn flatten(&self, point: &SearchPoint) -> Vec<f64> {
        point.flatten()
    }

    pub fn unflatten(&self, features: &[f64]) -> Result<SearchPoint> {
        if features.len() != self.feature_count() {
            return Err(Error::dim("flattened search point", self.feature_count(), features.len()));
        }
        let (x0, rest) = features.split_at(self.init_dim);
        let values = if self.input_dim == 0 {
            vec![Vec::new(); self.segments]
        } else {
            rest.chunks(self.input_dim).map(<[f64]>::to_vec).collect()
        };
        Ok(SearchPoint {
            x0: x0.to_vec(),
            u: PiecewiseConstantSignal::new(self.horizon, values)?,
        })
    }

    /// Uniform draw: the `k` input segments first, then the initial state.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        init: &Hyperbox,
        input: &Hyperbox,
        rng: &mut R,
    ) -> Result<SearchPoint> {
        let values: Vec<Vec<f64>> = (0..self.segments).map(|_| input.sample(rng)).collect();
        let x0 = init.sample(rng);
        if x0.len() != self.init_dim {
            return Err(Error::dim("initial box", self.init_dim, x0.len()));
        }
        if input.dim() != self.input_dim {
            return Err(Error::dim("input box", self.input_dim, input.dim()));
        }
        Ok(SearchPoint {
            x0,
            u: PiecewiseConstantSignal::new(self.horizon, values)?,
        })
    }
}

impl SearchPoint {
    pub fn layout(&self) -> SearchLayout {
        SearchLayout {
            init_dim: self.x0.len(),
            input_dim: self.u.input_dim(),
            segments: self.u.segments(),
            horizon: self.u.horizon(),
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = self.x0.clone();
        for seg in self.u.values() {
            out.extend_from_slice(seg);
        }
        out
    }
}

/// A search point whose simulated trajectory violates the specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub point: SearchPoint,
    pub trajectory: Trajectory,
    pub robustness: f64,
}

pub(crate) fn join_row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{v}").unwrap();
    }
}

/// Splits a numeric CSV into its header and rows.
pub(crate) fn read_table(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Domain("empty CSV".into()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let rows = lines
        .enumerate()
        .map(|(i, line)| {
            let row = line
                .split(',')
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|e| {
                        Error::Domain(format!("row {}: bad number `{}`: {e}", i + 1, f.trim()))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != header.len() {
                return Err(Error::dim("CSV row", header.len(), row.len()));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((header, rows))
}

/// Header of feature names followed by one flattened point per row.
pub fn points_to_csv(layout: &SearchLayout, points: &[SearchPoint]) -> String {
    let mut out = layout.feature_names().join(",");
    out.push('\n');
    for p in points {
        join_row(&mut out, &p.flatten());
        out.push('\n');
    }
    out
}

/// As [`points_to_csv`] with a trailing `robustness` column.
pub fn counterexamples_to_csv(layout: &SearchLayout, ces: &[Counterexample]) -> String {
    let mut names = layout.feature_names();
    names.push("robustness".into());
    let mut out = names.join(",");
    out.push('\n');
    for ce in ces {
        let mut row = ce.point.flatten();
        row.push(ce.robustness);
        join_row(&mut out, &row);
        out.push('\n');
    }
    out
}

/// Parses a CSV produced by [`points_to_csv`].
pub fn points_from_csv(layout: &SearchLayout, text: &str) -> Result<Vec<SearchPoint>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().unwrap_or_default();
    let expected = layout.feature_names().join(",");
    if header.trim() != expected {
        return Err(Error::Domain(format!(
            "CSV header `{header}` does not match layout `{expected}`"
        )));
    }
    lines
        .map(|line| {
            let row = line
                .split(',')
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Domain(format!("bad number `{f}`: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            layout.unflatten(&row)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sig(horizon: f64, values: &[f64]) -> PiecewiseConstantSignal {
        PiecewiseConstantSignal::new(horizon, values.iter().map(|v| vec![*v]).collect()).unwrap()
    }

    #[test]
    fn signal_eval_segments() {
        let u = sig(10.0, &[1.0, 3.0]);
        assert_eq!(u.eval(4.9).unwrap(), &[1.0]);
        assert_eq!(u.eval(5.0).unwrap(), &[3.0]);
        let u = sig(8.0, &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(u.eval(8.0).unwrap(), &[3.0]);
        assert!(matches!(u.eval(8.5), Err(Error::Domain(_))));
        assert!(matches!(u.eval(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn flatten_examples() {
        let p = SearchPoint {
            x0: vec![2.0],
            u: sig(1.0, &[5.0, 7.0]),
        };
        assert_eq!(p.flatten(), vec![2.0, 5.0, 7.0]);
        let p = SearchPoint {
            x0: vec![1.0, 2.0],
            u: PiecewiseConstantSignal::new(1.0, vec![vec![3.0, 4.0]]).unwrap(),
        };
        assert_eq!(p.flatten(), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn zero_input_layout_round_trips() {
        let layout = SearchLayout::new(2, 0, 3, 10.0).unwrap();
        let p = layout.unflatten(&[0.5, -1.0]).unwrap();
        assert_eq!(p.u.segments(), 3);
        assert_eq!(p.flatten(), vec![0.5, -1.0]);
    }

    #[test]
    fn box_parsing() {
        let b: Hyperbox = "0:1, -2.5:3,4".parse().unwrap();
        assert_eq!(b.lows(), &[0.0, -2.5, 4.0]);
        assert_eq!(b.highs(), &[1.0, 3.0, 4.0]);
        assert!("1:0".parse::<Hyperbox>().is_err());
        assert_eq!(b.to_string().parse::<Hyperbox>().unwrap(), b);
    }

    #[test]
    fn trajectory_csv_round_trip() {
        let traj = Trajectory::new(
            0.1,
            vec!["x".into(), "v".into()],
            vec![vec![1.0, 0.0], vec![0.95, -0.981], vec![0.8038, -1.962]],
        )
        .unwrap();
        let back = Trajectory::from_csv(&traj.to_csv()).unwrap();
        assert_eq!(back.states(), traj.states());
        assert_eq!(back.var_names(), traj.var_names());
        assert!((back.dt() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn trajectory_rejects_ragged_states() {
        let err = Trajectory::new(1.0, vec!["x".into()], vec![vec![1.0], vec![1.0, 2.0]]);
        assert!(matches!(err, Err(Error::Dimension { .. })));
    }

    #[test]
    fn counterexample_csv_has_robustness_column() {
        let layout = SearchLayout::new(1, 1, 2, 1.0).unwrap();
        let point = layout.unflatten(&[0.5, 1.0, 2.0]).unwrap();
        let traj = Trajectory::new(1.0, vec!["x".into()], vec![vec![0.5], vec![0.5]]).unwrap();
        let csv = counterexamples_to_csv(
            &layout,
            &[Counterexample {
                point,
                trajectory: traj,
                robustness: -0.25,
            }],
        );
        assert_eq!(csv, "x0_0,u_0_0,u_1_0,robustness\n0.5,1,2,-0.25\n");
    }

    proptest! {
        #[test]
        fn flatten_round_trip(
            n0 in 1usize..4,
            m in 0usize..3,
            k in 1usize..5,
            seed in any::<u64>(),
        ) {
            let layout = SearchLayout::new(n0, m, k, 7.5).unwrap();
            let mut rng = crate::rng::stream(seed, &[]);
            let init = Hyperbox::from_intervals(&vec![(-3.0, 3.0); n0]).unwrap();
            let input = Hyperbox::from_intervals(&vec![(0.0, 1e6); m]).unwrap();
            let p = layout.sample(&init, &input, &mut rng).unwrap();
            let flat = p.flatten();
            prop_assert_eq!(flat.len(), layout.feature_count());
            prop_assert_eq!(layout.unflatten(&flat).unwrap(), p.clone());
            let csv = points_to_csv(&layout, std::slice::from_ref(&p));
            prop_assert_eq!(points_from_csv(&layout, &csv).unwrap(), vec![p]);
        }

        #[test]
        fn signal_is_right_continuous_step(k in 1usize..8, frac in 0.0f64..0.999) {
            let values: Vec<f64> = (0..k).map(|j| j as f64).collect();
            let u = sig(4.0, &values);
            for j in 0..k {
                let start = u.segment_start(j);
                let inner = start + frac * 4.0 / k as f64;
                prop_assert_eq!(u.segment_index(start).unwrap(), j);
                prop_assert_eq!(u.eval(inner).unwrap(), u.eval(start).unwrap());
            }
        }
    }
}
