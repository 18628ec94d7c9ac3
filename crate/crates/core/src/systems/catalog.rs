//! Built-in benchmark instances.
//!
//! The hybrid models are small reimplementations of the usual falsification
//! benchmarks with pinned constants. They are not the published models, so
//! difficulty estimates differ from those reported elsewhere. Equations are
//! listed in `docs/benchmarks.md`.

use std::f64::consts::FRAC_PI_4;
use std::sync::Arc;

use super::hybrid::{Guard, HybridAutomaton, Mode};
use super::System;
use crate::error::{Error, Result};
use crate::types::Hyperbox;

/// A system together with its search space and the specifications usually
/// checked against it.
#[derive(Clone)]
pub struct Benchmark {
    pub name: &'static str,
    pub system: Arc<dyn System>,
    pub init: Hyperbox,
    pub input: Hyperbox,
    pub horizon: f64,
    pub dt: f64,
    pub segments: usize,
    /// `(id, formula)` pairs.
    pub specs: Vec<(&'static str, &'static str)>,
}

impl Benchmark {
    pub fn spec(&self, id: &str) -> Option<&'static str> {
        self.specs
            .iter()
            .find(|(name, _)| name.eq_ignore_ascii_case(id))
            .map(|&(_, f)| f)
    }
}

impl std::fmt::Debug for Benchmark {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Benchmark")
            .field("name", &self.name)
            .field("init", &self.init)
            .field("input", &self.input)
            .field("horizon", &self.horizon)
            .field("dt", &self.dt)
            .field("segments", &self.segments)
            .field("specs", &self.specs)
            .finish()
    }
}

const NAMES: [&str; 7] = [
    "bouncing-ball",
    "two-tanks",
    "oscillator",
    "navigation",
    "chasing-cars",
    "const1d",
    "single-integrator",
];

pub fn builtin_names() -> &'static [&'static str] {
    &NAMES
}

pub fn builtin(name: &str) -> Result<Benchmark> {
    let bench = match name {
        "bouncing-ball" | "bb" => bouncing_ball(),
        "two-tanks" | "tt" => two_tanks(),
        "oscillator" | "osc" => oscillator(),
        "navigation" | "nav" => navigation(),
        "chasing-cars" | "cc" => chasing_cars(),
        "const1d" => const1d(),
        "single-integrator" => single_integrator(),
        _ => {
            return Err(Error::Config(format!(
                "unknown system `{name}` (built-ins: {})",
                NAMES.join(", ")
            )))
        }
    };
    Ok(bench)
}

fn boxed(intervals: &[(f64, f64)]) -> Hyperbox {
    Hyperbox::from_intervals(intervals).expect("catalog boxes are well-formed")
}

pub const GRAVITY: f64 = 9.81;
pub const RESTITUTION: f64 = 0.75;

pub fn bouncing_ball_system() -> HybridAutomaton {
    HybridAutomaton::new(
        "bouncing-ball",
        &["x", "v"],
        vec![Mode::new("fall", |x: &[f64], _: &[f64], dx: &mut [f64]| {
            dx[0] = x[1];
            dx[1] = -GRAVITY;
        })],
    )
    .with_guard(
        Guard::new(None, None, |x| x[0] <= 0.0 && x[1] < 0.0).with_reset(|x| {
            x[0] = 0.0;
            x[1] = -RESTITUTION * x[1];
        }),
    )
}

// Apex height x0 + v0^2/(2g) reaches the unsafe band [1, 2] on roughly 2% of
// this box; every other start stays below 1 m.
fn bouncing_ball() -> Benchmark {
    Benchmark {
        name: "bouncing-ball",
        system: Arc::new(bouncing_ball_system()),
        init: boxed(&[(0.0, 0.5), (0.0, 3.6)]),
        input: Hyperbox::unit(),
        horizon: 10.0,
        dt: 0.01,
        segments: 1,
        specs: vec![(
            "BB1",
            "G[0,10] !((v >= -1) & (v <= 1) & (x >= 1) & (x <= 2))",
        )],
    }
}

pub fn two_tanks_system() -> HybridAutomaton {
    // mode index = 2*V1 + V2
    let modes = (0..4)
        .map(|idx| {
            let v1 = idx & 2 != 0;
            let v2 = idx & 1 != 0;
            let name = format!(
                "{}_{}",
                if v1 { "on" } else { "off" },
                if v2 { "on" } else { "off" }
            );
            Mode::new(name, move |x: &[f64], u: &[f64], dx: &mut [f64]| {
                dx[0] = -x[0] + if v1 { 3.0 } else { -2.0 } + u[0];
                dx[1] = x[0] + if v2 { -x[1] - 5.0 } else { 0.0 };
            })
        })
        .collect();
    let mut sys = HybridAutomaton::new("two-tanks", &["x1", "x2"], modes)
        .with_inputs(1)
        .with_initial_mode(|_| 1);
    for idx in 0..4usize {
        let v1 = idx & 2 != 0;
        let v2 = idx & 1 != 0;
        let toggle_v1 = Some(idx ^ 2);
        let toggle_v2 = Some(idx ^ 1);
        sys = if v1 {
            sys.with_guard(Guard::new(Some(idx), toggle_v1, |x| x[0] >= 1.0))
        } else {
            sys.with_guard(Guard::new(Some(idx), toggle_v1, |x| x[0] <= -1.0))
        };
        sys = if v2 {
            sys.with_guard(Guard::new(Some(idx), toggle_v2, |x| x[1] <= 0.0))
        } else {
            sys.with_guard(Guard::new(Some(idx), toggle_v2, |x| x[1] >= 1.0))
        };
    }
    sys
}

fn two_tanks() -> Benchmark {
    Benchmark {
        name: "two-tanks",
        system: Arc::new(two_tanks_system()),
        init: boxed(&[(1.5, 2.5), (0.8, 1.0)]),
        input: boxed(&[(-0.1, 0.1)]),
        horizon: 10.0,
        dt: 0.01,
        segments: 3,
        specs: vec![
            ("TT1", "G[0,10] !((x1 >= 0.4) & (x1 <= 0.5) & (x2 >= 0.3) & (x2 <= 0.5))"),
            ("TT2", "G[0,10] x2 >= -0.95"),
            ("TT3", "G[0,10] !((x1 >= 0) & (x1 <= 0.5) & (x2 >= 0.3) & (x2 <= 0.5))"),
            ("TT4", "G[0,10] x1 <= 2.45"),
        ],
    }
}

const SWITCH_SLOPE: f64 = 0.714286;

pub fn oscillator_system() -> HybridAutomaton {
    let flow = |sign: f64| {
        move |x: &[f64], u: &[f64], dx: &mut [f64]| {
            dx[0] = -2.0 * x[0] + sign * 1.4;
            dx[1] = -x[1] - sign * 0.7 + u[0];
        }
    };
    HybridAutomaton::new("oscillator", &["p", "q"], vec![Mode::new("a", flow(1.0)), Mode::new("b", flow(-1.0))])
        .with_inputs(1)
        .with_initial_mode(|x| usize::from(x[1] + SWITCH_SLOPE * x[0] < 0.0))
        .with_guard(Guard::new(Some(0), Some(1), |x| {
            x[0] >= 0.0 && x[1] + SWITCH_SLOPE * x[0] <= 0.0
        }))
        .with_guard(Guard::new(Some(1), Some(0), |x| {
            x[0] <= 0.0 && x[1] + SWITCH_SLOPE * x[0] >= 0.0
        }))
}

fn oscillator() -> Benchmark {
    Benchmark {
        name: "oscillator",
        system: Arc::new(oscillator_system()),
        init: boxed(&[(0.2, 0.3), (-0.1, 0.1)]),
        input: boxed(&[(-0.05, 0.05)]),
        horizon: 10.0,
        dt: 0.01,
        segments: 3,
        specs: vec![
            ("OSC1", "G[0,10] !((p >= 0.6) & (p <= 0.7) & (q >= -0.5) & (q <= -0.48))"),
            ("OSC2", "G[0,10] q <= 0.4775"),
            ("OSC3", "G[0,10] p <= 0.675"),
        ],
    }
}

pub const NAV_WIDTH: usize = 5;
pub const NAV_HEIGHT: usize = 5;

// Desired-heading codes d, velocity (sin(d*pi/4), cos(d*pi/4)); row 0 is the
// bottom of the grid. The field funnels everything towards the bottom-right
// corner.
const NAV_MAP: [[u8; NAV_WIDTH]; NAV_HEIGHT] = [
    [2, 2, 2, 2, 3],
    [2, 3, 3, 4, 4],
    [3, 3, 3, 4, 4],
    [2, 2, 3, 4, 4],
    [2, 2, 2, 3, 4],
];

const NAV_A: [[f64; 2]; 2] = [[-1.2, 0.1], [0.1, -1.2]];

fn nav_cell(x: &[f64]) -> (usize, usize) {
    let i = (x[0].max(0.0).floor() as usize).min(NAV_WIDTH - 1);
    let j = (x[1].max(0.0).floor() as usize).min(NAV_HEIGHT - 1);
    (i, j)
}

pub fn navigation_system() -> HybridAutomaton {
    let (w, h) = (NAV_WIDTH as f64, NAV_HEIGHT as f64);
    let mut modes = Vec::with_capacity(NAV_WIDTH * NAV_HEIGHT);
    for j in 0..NAV_HEIGHT {
        for i in 0..NAV_WIDTH {
            let angle = f64::from(NAV_MAP[j][i]) * FRAC_PI_4;
            let vd = [angle.sin(), angle.cos()];
            modes.push(Mode::new(
                format!("cell_{i}_{j}"),
                move |x: &[f64], _: &[f64], dx: &mut [f64]| {
                    let e = [x[2] - vd[0], x[3] - vd[1]];
                    dx[0] = x[2];
                    dx[1] = x[3];
                    dx[2] = NAV_A[0][0] * e[0] + NAV_A[0][1] * e[1];
                    dx[3] = NAV_A[1][0] * e[0] + NAV_A[1][1] * e[1];
                },
            ));
        }
    }

    // Cell crossings come first so that sliding along a wall, which re-arms
    // the wall guard every step, cannot starve them. Every reset clamps.
    let mut sys = HybridAutomaton::new("navigation", &["x1", "x2", "v1", "v2"], modes)
        .with_initial_mode(|x| {
            let (i, j) = nav_cell(x);
            j * NAV_WIDTH + i
        });
    for j in 0..NAV_HEIGHT {
        for i in 0..NAV_WIDTH {
            let mode = Some(j * NAV_WIDTH + i);
            let (lo_x, lo_y) = (i as f64, j as f64);
            let mut crossings: Vec<(usize, Box<dyn Fn(&[f64]) -> bool + Send + Sync>)> = Vec::new();
            if i + 1 < NAV_WIDTH {
                crossings.push((j * NAV_WIDTH + i + 1, Box::new(move |x| x[0] >= lo_x + 1.0)));
            }
            if i > 0 {
                crossings.push((j * NAV_WIDTH + i - 1, Box::new(move |x| x[0] < lo_x)));
            }
            if j + 1 < NAV_HEIGHT {
                crossings.push(((j + 1) * NAV_WIDTH + i, Box::new(move |x| x[1] >= lo_y + 1.0)));
            }
            if j > 0 {
                crossings.push(((j - 1) * NAV_WIDTH + i, Box::new(move |x| x[1] < lo_y)));
            }
            for (to, pred) in crossings {
                sys = sys.with_guard(Guard::new(mode, Some(to), pred).with_reset(nav_clamp));
            }
        }
    }
    sys.with_guard(
        Guard::new(None, None, move |x| x[0] < 0.0 || x[0] > w || x[1] < 0.0 || x[1] > h)
            .with_reset(nav_clamp),
    )
}

fn nav_clamp(x: &mut [f64]) {
    let (w, h) = (NAV_WIDTH as f64, NAV_HEIGHT as f64);
    if x[0] < 0.0 || x[0] > w {
        x[0] = x[0].clamp(0.0, w);
        x[2] = 0.0;
    }
    if x[1] < 0.0 || x[1] > h {
        x[1] = x[1].clamp(0.0, h);
        x[3] = 0.0;
    }
}

fn navigation() -> Benchmark {
    Benchmark {
        name: "navigation",
        system: Arc::new(navigation_system()),
        init: boxed(&[(0.2, 0.8), (4.2, 4.8), (-1.0, 1.0), (-1.0, 1.0)]),
        input: Hyperbox::unit(),
        horizon: 50.0,
        dt: 0.05,
        segments: 1,
        specs: vec![
            ("NAV1", "G[0,50] !((x1 >= 1) & (x1 <= 2) & (x2 >= 3) & (x2 <= 3.5))"),
            ("NAV2", "G[0,50] !((x1 >= 2) & (x1 <= 2.5) & (x2 >= 3) & (x2 <= 3.5))"),
            ("NAV3", "G[0,50] !((x1 >= 3) & (x1 <= 3.4) & (x2 >= 2) & (x2 <= 2.5))"),
        ],
    }
}

pub const CC_SPACING: f64 = 10.0;
pub const CC_INITIAL_SPEED: f64 = 10.0;
const CC_THROTTLE: f64 = 2.0;
const CC_BRAKE: f64 = 2.0;
const CC_KP: f64 = 1.0;
const CC_KD: f64 = 2.5;

pub fn chasing_cars_system() -> HybridAutomaton {
    let names = ["y1", "y2", "y3", "y4", "y5", "v1", "v2", "v3", "v4", "v5"];
    HybridAutomaton::new(
        "chasing-cars",
        &names,
        vec![Mode::new("drive", |x: &[f64], u: &[f64], dx: &mut [f64]| {
            let (y, v) = x.split_at(5);
            dx[..5].copy_from_slice(v);
            // car 5 leads; each follower tracks the car directly ahead
            dx[9] = CC_THROTTLE * u[0] - CC_BRAKE * u[1] * v[4].tanh() - 0.05 * v[4];
            for i in 0..4 {
                dx[5 + i] = CC_KP * (y[i + 1] - y[i] - CC_SPACING) + CC_KD * (v[i + 1] - v[i]);
            }
        })],
    )
    .with_inputs(2)
    .with_lift(5, |y0| {
        let mut x = y0.to_vec();
        x.extend([CC_INITIAL_SPEED; 5]);
        x
    })
}

fn chasing_cars() -> Benchmark {
    let init: Vec<(f64, f64)> = (0..5)
        .map(|i| {
            let base = CC_SPACING * i as f64;
            (base, base + 1.0)
        })
        .collect();
    Benchmark {
        name: "chasing-cars",
        system: Arc::new(chasing_cars_system()),
        init: boxed(&init),
        input: boxed(&[(0.0, 1.0), (0.0, 1.0)]),
        horizon: 100.0,
        dt: 0.1,
        segments: 5,
        specs: vec![
            ("CC1", "G[0,100] (y5 - y4 <= 11.25)"),
            ("CC2", "G[0,70] F[0,30] (y5 - y4 >= 9.5)"),
            (
                "CCx",
                "G[0,50] ((y2 - y1 > 8) & (y3 - y2 > 8) & (y4 - y3 > 8) & (y5 - y4 > 8))",
            ),
        ],
    }
}

pub fn const1d_system() -> HybridAutomaton {
    HybridAutomaton::new(
        "const1d",
        &["x"],
        vec![Mode::new("hold", |_: &[f64], _: &[f64], dx: &mut [f64]| dx[0] = 0.0)],
    )
}

fn const1d() -> Benchmark {
    Benchmark {
        name: "const1d",
        system: Arc::new(const1d_system()),
        init: boxed(&[(0.0, 1.0)]),
        input: Hyperbox::unit(),
        horizon: 1.0,
        dt: 0.1,
        segments: 1,
        specs: vec![
            ("C1", "G[0,1] x < 0.1"),
            ("C50", "G[0,1] x < 0.5"),
            ("SAFE", "G[0,1] x < 1000000"),
        ],
    }
}

pub fn single_integrator_system() -> HybridAutomaton {
    HybridAutomaton::new(
        "single-integrator",
        &["x"],
        vec![Mode::new("integrate", |_: &[f64], u: &[f64], dx: &mut [f64]| dx[0] = u[0])],
    )
    .with_inputs(1)
}

fn single_integrator() -> Benchmark {
    Benchmark {
        name: "single-integrator",
        system: Arc::new(single_integrator_system()),
        init: boxed(&[(0.0, 1.0)]),
        input: boxed(&[(-1.0, 1.0)]),
        horizon: 5.0,
        dt: 0.1,
        segments: 5,
        specs: vec![("SI1", "G[0,5] x < 3")],
    }
}
