//! Signal Temporal Logic: formulas, parsing, Boolean semantics and
//! quantitative robustness over sampled trajectories.
//!
//! All temporal quantifiers range over sample indices only. `Until` takes the
//! infimum of its left operand over `[t, t')`, which is empty (and imposes no
//! constraint) when `t' = t`.

mod eval;
mod formula;
mod parse;

pub use eval::{check, robustness, robustness_trace, satisfies, Verdict, BOUNDARY_EPS};
pub use formula::{Cmp, Formula, Interval, LinearExpr};
pub use parse::parse;

impl std::str::FromStr for Formula {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}
