use std::fmt;

use serde::{Deserialize, Serialize};

use crate::types::Hyperbox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "≤",
            Relation::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub feature: usize,
    pub relation: Relation,
    pub threshold: f64,
}

impl Constraint {
    pub fn holds(&self, x: &[f64]) -> bool {
        match self.relation {
            Relation::Le => x[self.feature] <= self.threshold,
            Relation::Gt => x[self.feature] > self.threshold,
        }
    }
}

/// Conjunction of the branch conditions on the path from a leaf to the root,
/// listed leaf first. The empty conjunction is `true`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub leaf: usize,
    pub n_features: usize,
    pub constraints: Vec<Constraint>,
}

impl Explanation {
    pub fn is_trivial(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn holds(&self, x: &[f64]) -> bool {
        self.constraints.iter().all(|c| c.holds(x))
    }

    /// Per-feature `(lo, hi]` intervals after intersecting every constraint.
    /// Unconstrained sides are infinite.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        let mut iv = vec![(f64::NEG_INFINITY, f64::INFINITY); self.n_features];
        for c in &self.constraints {
            let (lo, hi) = &mut iv[c.feature];
            match c.relation {
                Relation::Le => *hi = hi.min(c.threshold),
                Relation::Gt => *lo = lo.max(c.threshold),
            }
        }
        iv
    }

    /// Tightest constraint per feature and side, ordered by feature.
    pub fn collapsed(&self) -> Explanation {
        let mut constraints = Vec::new();
        for (feature, (lo, hi)) in self.intervals().into_iter().enumerate() {
            if lo > f64::NEG_INFINITY {
                constraints.push(Constraint {
                    feature,
                    relation: Relation::Gt,
                    threshold: lo,
                });
            }
            if hi < f64::INFINITY {
                constraints.push(Constraint {
                    feature,
                    relation: Relation::Le,
                    threshold: hi,
                });
            }
        }
        Explanation {
            constraints,
            ..*self
        }
    }

    /// Renders with the given feature names, e.g. `(phi ≤ 4.18 ∧ phi ≤ 7.525)`.
    pub fn display<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        Named { exp: self, names }
    }
}

struct Named<'a> {
    exp: &'a Explanation,
    names: &'a [String],
}

impl fmt::Display for Named<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp.constraints.is_empty() {
            return f.write_str("true");
        }
        f.write_str("(")?;
        for (i, c) in self.exp.constraints.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∧ ")?;
            }
            match self.names.get(c.feature) {
                Some(name) => write!(f, "{name}")?,
                None => write!(f, "x{}", c.feature)?,
            }
            write!(f, " {} {}", c.relation.symbol(), c.threshold)?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for Explanation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.display(&[]).fmt(f)
    }
}

/// Smallest representable value strictly above `threshold`, at least 1e-9
/// away, so that `>` constraints become closed sampling intervals.
fn nudge_up(threshold: f64) -> f64 {
    (threshold + 1e-9).max(threshold.next_up())
}

/// Intersection of the explanation with the flattened search box, or `None`
/// when some feature interval is empty.
pub fn explanation_box(exp: &Explanation, search: &Hyperbox) -> Option<Hyperbox> {
    assert_eq!(exp.n_features, search.dim(), "explanation and search box dimensions differ");
    let mut lows = search.lows().to_vec();
    let mut highs = search.highs().to_vec();
    for (i, (lo, hi)) in exp.intervals().into_iter().enumerate() {
        if lo > f64::NEG_INFINITY {
            lows[i] = lows[i].max(nudge_up(lo));
        }
        highs[i] = highs[i].min(hi);
        if lows[i] > highs[i] {
            return None;
        }
    }
    Some(Hyperbox::new(lows, highs).expect("non-empty intervals"))
}

#[cfg(test)]
mod tests {
    use super::super::tests::{falsifying_tree, nearest_tree};
    use super::*;

    #[test]
    fn worked_explanations_verbatim() {
        let t = falsifying_tree();
        let leaf = t.find_falsifying_leaves()[0];
        let exp = t.gen_explanation(leaf).unwrap();
        assert_eq!(exp.display(t.feature_names()).to_string(), "(phi ≤ 4.18 ∧ phi ≤ 7.525)");
        assert_eq!(exp.collapsed().display(t.feature_names()).to_string(), "(phi ≤ 4.18)");

        let t = nearest_tree();
        let leaf = t.find_nearest_leaves().unwrap()[0];
        let exp = t.gen_explanation(leaf).unwrap();
        assert_eq!(exp.display(t.feature_names()).to_string(), "(phi > 7.525 ∧ psi > 5.38)");
    }

    #[test]
    fn boxes() {
        let t = falsifying_tree();
        let exp = t.gen_explanation(t.find_falsifying_leaves()[0]).unwrap();
        let search = Hyperbox::new(vec![0.0], vec![10.0]).unwrap();
        let b = explanation_box(&exp, &search).unwrap();
        assert_eq!((b.lows(), b.highs()), (&[0.0][..], &[4.18][..]));

        let gt = Explanation {
            leaf: 0,
            n_features: 1,
            constraints: vec![Constraint {
                feature: 0,
                relation: Relation::Gt,
                threshold: 5.0,
            }],
        };
        let narrow = Hyperbox::new(vec![0.0], vec![3.0]).unwrap();
        assert!(explanation_box(&gt, &narrow).is_none());
        let b = explanation_box(&gt, &search).unwrap();
        assert!(b.lows()[0] > 5.0 && b.lows()[0] <= 5.0 + 2e-9);

        let trivial = Explanation {
            leaf: 0,
            n_features: 1,
            constraints: vec![],
        };
        assert_eq!(explanation_box(&trivial, &search).unwrap(), search);
        assert_eq!(trivial.to_string(), "true");
    }

    #[test]
    fn root_leaf_has_trivial_explanation() {
        let t = super::super::DecisionTree::from_spec(
            vec!["x".into()],
            &super::super::TreeSpec::leaf(1.0, 1),
        )
        .unwrap();
        assert!(t.gen_explanation(0).unwrap().is_trivial());
        assert!(t.gen_explanation(5).is_err());
    }
}
