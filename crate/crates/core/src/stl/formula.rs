use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Cmp {
    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
        }
    }

    /// `true` for `<` and `<=`, whose robustness is `d - value`.
    pub fn is_upper_bound(self) -> bool {
        matches!(self, Cmp::Lt | Cmp::Le)
    }

    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Cmp::Lt => value < threshold,
            Cmp::Le => value <= threshold,
            Cmp::Gt => value > threshold,
            Cmp::Ge => value >= threshold,
        }
    }
}

/// Left-hand side of an atom: `c1*v1 + c2*v2 + ...`. A plain variable is the
/// single term `1*v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearExpr {
    pub terms: Vec<(f64, String)>,
}

impl LinearExpr {
    pub fn var(name: impl Into<String>) -> Self {
        LinearExpr {
            terms: vec![(1.0, name.into())],
        }
    }

    /// `a - b`
    pub fn diff(a: impl Into<String>, b: impl Into<String>) -> Self {
        LinearExpr {
            terms: vec![(1.0, a.into()), (-1.0, b.into())],
        }
    }
}

impl fmt::Display for LinearExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (c, v)) in self.terms.iter().enumerate() {
            let (neg, mag) = if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                (true, -c)
            } else {
                (false, *c)
            };
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if mag == 1.0 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{mag}*{v}")?;
            }
        }
        Ok(())
    }
}

/// Closed time window `[lo, hi]`, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || lo > hi {
            return Err(Error::Domain(format!(
                "temporal interval [{lo}, {hi}] must satisfy 0 <= a <= b < inf"
            )));
        }
        Ok(Interval { lo, hi })
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Formula {
    True,
    Atom {
        lhs: LinearExpr,
        cmp: Cmp,
        threshold: f64,
    },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Until(Interval, Box<Formula>, Box<Formula>),
    Always(Interval, Box<Formula>),
    Eventually(Interval, Box<Formula>),
}

impl Formula {
    pub fn atom(var: impl Into<String>, cmp: Cmp, threshold: f64) -> Formula {
        Formula::Atom {
            lhs: LinearExpr::var(var),
            cmp,
            threshold,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn until(i: Interval, a: Formula, b: Formula) -> Formula {
        Formula::Until(i, Box::new(a), Box::new(b))
    }

    pub fn always(i: Interval, f: Formula) -> Formula {
        Formula::Always(i, Box::new(f))
    }

    pub fn eventually(i: Interval, f: Formula) -> Formula {
        Formula::Eventually(i, Box::new(f))
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::Atom { .. } => 0,
            Formula::Not(f) | Formula::Always(_, f) | Formula::Eventually(_, f) => 1 + f.depth(),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Until(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Every variable referenced by an atom, in first-occurrence order.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Formula::True => {}
            Formula::Atom { lhs, .. } => {
                for (_, v) in &lhs.terms {
                    if !out.contains(v) {
                        out.push(v.clone());
                    }
                }
            }
            Formula::Not(f) | Formula::Always(_, f) | Formula::Eventually(_, f) => {
                f.collect_vars(out)
            }
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Until(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Latest time (relative to the evaluation point) that evaluation may
    /// look at: nested window upper bounds summed along the deepest path.
    pub fn lookahead(&self) -> f64 {
        match self {
            Formula::True | Formula::Atom { .. } => 0.0,
            Formula::Not(f) => f.lookahead(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.lookahead().max(b.lookahead())
            }
            Formula::Until(i, a, b) => i.hi + a.lookahead().max(b.lookahead()),
            Formula::Always(i, f) | Formula::Eventually(i, f) => i.hi + f.lookahead(),
        }
    }

    /// Rewrites `Always` and `Eventually` into `Until` form:
    /// `G_I f = !(true U_I !f)` and `F_I f = true U_I f`.
    pub fn desugar(&self) -> Formula {
        match self {
            Formula::True | Formula::Atom { .. } => self.clone(),
            Formula::Not(f) => Formula::not(f.desugar()),
            Formula::And(a, b) => Formula::and(a.desugar(), b.desugar()),
            Formula::Or(a, b) => Formula::or(a.desugar(), b.desugar()),
            Formula::Implies(a, b) => Formula::implies(a.desugar(), b.desugar()),
            Formula::Until(i, a, b) => Formula::until(*i, a.desugar(), b.desugar()),
            Formula::Always(i, f) => {
                Formula::not(Formula::until(*i, Formula::True, Formula::not(f.desugar())))
            }
            Formula::Eventually(i, f) => Formula::until(*i, Formula::True, f.desugar()),
        }
    }
}

/// Canonical, fully parenthesized text that [`crate::stl::parse`] reads back
/// to an identical tree.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::Atom {
                lhs,
                cmp,
                threshold,
            } => write!(f, "{lhs} {} {threshold}", cmp.symbol()),
            Formula::Not(g) => write!(f, "!({g})"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
            Formula::Until(i, a, b) => write!(f, "({a} U{i} {b})"),
            Formula::Always(i, g) => write!(f, "G{i} ({g})"),
            Formula::Eventually(i, g) => write!(f, "F{i} ({g})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desugar_shapes() {
        let i = Interval::new(0.0, 10.0).unwrap();
        let p = Formula::atom("x", Cmp::Lt, 20.0);
        assert_eq!(
            Formula::always(i, p.clone()).desugar(),
            Formula::not(Formula::until(i, Formula::True, Formula::not(p.clone())))
        );
        assert_eq!(
            Formula::eventually(i, p.clone()).desugar(),
            Formula::until(i, Formula::True, p.clone())
        );
        assert_eq!(p.desugar(), p);
    }

    #[test]
    fn interval_validation() {
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(-1.0, 1.0).is_err());
        assert!(Interval::new(0.0, f64::INFINITY).is_err());
        assert!(Interval::new(3.0, 3.0).is_ok());
    }

    #[test]
    fn lookahead_sums_nested_windows() {
        let i = Interval::new(0.0, 70.0).unwrap();
        let j = Interval::new(0.0, 30.0).unwrap();
        let f = Formula::always(i, Formula::eventually(j, Formula::atom("y", Cmp::Ge, 15.0)));
        assert_eq!(f.lookahead(), 100.0);
    }

    #[test]
    fn linear_expr_display() {
        let e = LinearExpr {
            terms: vec![(-1.0, "a".into()), (2.5, "b".into()), (-3.0, "c".into())],
        };
        assert_eq!(e.to_string(), "-a + 2.5*b - 3*c");
    }
}
