//! CART regression trees over robustness datasets.
//!
//! Splits minimise the summed squared error of the two children. Candidate
//! thresholds are midpoints between adjacent distinct feature values, and a
//! row goes left when `x[feature] <= threshold`. Among splits whose gain is
//! within a small tolerance of the best, the lowest feature index wins, then
//! the lowest threshold.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::dataset::RobustnessDataset;
use crate::error::{Error, Result};

mod explain;

pub use explain::{explanation_box, Constraint, Explanation, Relation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_depth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Decision {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
        count: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub parent: Option<usize>,
    pub kind: NodeKind,
}

/// Nested form used for (de)serialization and for building trees by hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeSpec {
    Decision {
        feature: usize,
        threshold: f64,
        left: Box<TreeSpec>,
        right: Box<TreeSpec>,
    },
    Leaf {
        value: f64,
        count: usize,
    },
}

impl TreeSpec {
    pub fn split(feature: usize, threshold: f64, left: TreeSpec, right: TreeSpec) -> Self {
        TreeSpec::Decision {
            feature,
            threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn leaf(value: f64, count: usize) -> Self {
        TreeSpec::Leaf { value, count }
    }
}

#[derive(Serialize, Deserialize)]
struct TreeFile {
    feature_names: Vec<String>,
    root: TreeSpec,
}

/// Arena-allocated regression tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    feature_names: Vec<String>,
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn from_spec(feature_names: Vec<String>, spec: &TreeSpec) -> Result<Self> {
        let mut nodes: Vec<Node> = Vec::new();
        let mut stack = vec![(spec, None::<(usize, bool)>)];
        while let Some((spec, link)) = stack.pop() {
            let id = nodes.len();
            if let Some((parent, is_left)) = link {
                if let NodeKind::Decision { left, right, .. } = &mut nodes[parent].kind {
                    *if is_left { left } else { right } = id;
                }
            }
            let parent = link.map(|(p, _)| p);
            match spec {
                TreeSpec::Leaf { value, count } => nodes.push(Node {
                    parent,
                    kind: NodeKind::Leaf {
                        value: *value,
                        count: *count,
                    },
                }),
                TreeSpec::Decision {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if *feature >= feature_names.len() {
                        return Err(Error::dim("tree feature index", feature_names.len(), *feature));
                    }
                    nodes.push(Node {
                        parent,
                        kind: NodeKind::Decision {
                            feature: *feature,
                            threshold: *threshold,
                            left: usize::MAX,
                            right: usize::MAX,
                        },
                    });
                    stack.push((right, Some((id, false))));
                    stack.push((left, Some((id, true))));
                }
            }
        }
        Ok(DecisionTree {
            feature_names,
            nodes,
        })
    }

    pub fn to_spec(&self) -> TreeSpec {
        self.spec_at(0)
    }

    fn spec_at(&self, id: usize) -> TreeSpec {
        match &self.nodes[id].kind {
            NodeKind::Leaf { value, count } => TreeSpec::leaf(*value, *count),
            NodeKind::Decision {
                feature,
                threshold,
                left,
                right,
            } => TreeSpec::split(*feature, *threshold, self.spec_at(*left), self.spec_at(*right)),
        }
    }

    pub fn to_json(&self) -> String {
        let file = TreeFile {
            feature_names: self.feature_names.clone(),
            root: self.to_spec(),
        };
        serde_json::to_string_pretty(&file).expect("trees serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TreeFile = serde_json::from_str(text)?;
        DecisionTree::from_spec(file.feature_names, &file.root)
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    /// Leaf ids in arena order.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| matches!(self.nodes[i].kind, NodeKind::Leaf { .. }))
            .collect()
    }

    pub fn leaf_value(&self, id: usize) -> Option<f64> {
        match self.nodes.get(id)?.kind {
            NodeKind::Leaf { value, .. } => Some(value),
            NodeKind::Decision { .. } => None,
        }
    }

    pub fn depth(&self) -> usize {
        (0..self.nodes.len())
            .map(|mut id| {
                let mut d = 0;
                while let Some(p) = self.nodes[id].parent {
                    id = p;
                    d += 1;
                }
                d
            })
            .max()
            .unwrap_or(0)
    }

    /// Id of the leaf that `x` routes to.
    pub fn route(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.n_features() {
            return Err(Error::dim("tree input", self.n_features(), x.len()));
        }
        let mut id = 0;
        loop {
            match self.nodes[id].kind {
                NodeKind::Leaf { .. } => return Ok(id),
                NodeKind::Decision {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let id = self.route(x)?;
        Ok(self.leaf_value(id).expect("route ends at a leaf"))
    }

    /// Leaves predicting negative robustness, most negative first.
    pub fn find_falsifying_leaves(&self) -> Vec<usize> {
        let mut leaves: Vec<usize> = self
            .leaves()
            .into_iter()
            .filter(|&id| self.leaf_value(id).unwrap() < 0.0)
            .collect();
        leaves.sort_by(|&a, &b| {
            self.leaf_value(a)
                .unwrap()
                .total_cmp(&self.leaf_value(b).unwrap())
        });
        leaves
    }

    /// Leaves whose prediction is closest to zero, all of them on ties. Only
    /// meaningful when no leaf is falsifying.
    pub fn find_nearest_leaves(&self) -> Result<Vec<usize>> {
        if !self.find_falsifying_leaves().is_empty() {
            return Err(Error::Contract(
                "nearest leaves requested while falsifying leaves exist".into(),
            ));
        }
        let leaves = self.leaves();
        let best = leaves
            .iter()
            .map(|&id| self.leaf_value(id).unwrap().abs())
            .fold(f64::INFINITY, f64::min);
        Ok(leaves
            .into_iter()
            .filter(|&id| self.leaf_value(id).unwrap().abs() == best)
            .collect())
    }

    /// Path constraints from `leaf` up to the root.
    pub fn gen_explanation(&self, leaf: usize) -> Result<Explanation> {
        if self.leaf_value(leaf).is_none() {
            return Err(Error::Contract(format!("node {leaf} is not a leaf of this tree")));
        }
        let mut constraints = Vec::new();
        let mut child = leaf;
        while let Some(parent) = self.nodes[child].parent {
            if let NodeKind::Decision {
                feature,
                threshold,
                left,
                ..
            } = self.nodes[parent].kind
            {
                let relation = if left == child { Relation::Le } else { Relation::Gt };
                constraints.push(Constraint {
                    feature,
                    relation,
                    threshold,
                });
            }
            child = parent;
        }
        Ok(Explanation {
            leaf,
            n_features: self.n_features(),
            constraints,
        })
    }

    /// Indented text rendering, one node per line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut stack = vec![(0usize, 0usize, "")];
        while let Some((id, depth, edge)) = stack.pop() {
            let pad = "  ".repeat(depth);
            match self.nodes[id].kind {
                NodeKind::Leaf { value, count } => {
                    writeln!(out, "{pad}{edge}leaf #{id}: rho = {value} (n = {count})").unwrap()
                }
                NodeKind::Decision {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let name = &self.feature_names[feature];
                    writeln!(out, "{pad}{edge}{name} <= {threshold}").unwrap();
                    stack.push((right, depth + 1, "no:  "));
                    stack.push((left, depth + 1, "yes: "));
                }
            }
        }
        out
    }

    pub fn fit(data: &RobustnessDataset, params: &TreeParams) -> Result<Self> {
        fit_rows(&data.features, &data.rho, data.layout.feature_names(), params)
    }
}

impl fmt::Display for DecisionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Best split of a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Reduction of the node's summed squared error.
    pub gain: f64,
}

/// Threshold between adjacent distinct values `a < b`. Guaranteed to satisfy
/// `a <= t < b`.
pub fn midpoint(a: f64, b: f64) -> f64 {
    let mid = a + (b - a) / 2.0;
    if mid < b {
        mid
    } else {
        a
    }
}

/// Gains within this distance of the best are considered ties.
pub fn tie_tolerance(targets: &[f64], rows: &[usize]) -> f64 {
    1e-9 * (1.0 + rows.iter().map(|&i| targets[i] * targets[i]).sum::<f64>())
}

/// Exhaustive best split of `rows` (ascending indices), or `None` when no
/// admissible split reduces the error.
pub fn best_split(
    features: &[Vec<f64>],
    targets: &[f64],
    rows: &[usize],
    min_samples_leaf: usize,
) -> Option<Split> {
    let n = rows.len();
    let d = features.first().map_or(0, Vec::len);
    let total: f64 = rows.iter().map(|&i| targets[i]).sum();
    let base = total * total / n as f64;
    let min_leaf = min_samples_leaf.max(1);

    let mut candidates: Vec<Split> = Vec::new();
    let mut order = rows.to_vec();
    for feature in 0..d {
        order.sort_by(|&a, &b| features[a][feature].total_cmp(&features[b][feature]).then(a.cmp(&b)));
        let mut left_sum = 0.0;
        for p in 1..n {
            left_sum += targets[order[p - 1]];
            let (a, b) = (features[order[p - 1]][feature], features[order[p]][feature]);
            if a == b || p < min_leaf || n - p < min_leaf {
                continue;
            }
            let right_sum = total - left_sum;
            let score = left_sum * left_sum / p as f64 + right_sum * right_sum / (n - p) as f64;
            candidates.push(Split {
                feature,
                threshold: midpoint(a, b),
                gain: score - base,
            });
        }
    }
    let best = candidates.iter().map(|s| s.gain).fold(f64::NEG_INFINITY, f64::max);
    let tol = tie_tolerance(targets, rows);
    if !(best > tol) {
        return None;
    }
    // candidates are already ordered by (feature, threshold)
    candidates.into_iter().find(|s| s.gain >= best - tol)
}

/// Mean of `targets` over `rows`, summed in row order.
pub fn leaf_mean(targets: &[f64], rows: &[usize]) -> f64 {
    rows.iter().map(|&i| targets[i]).sum::<f64>() / rows.len() as f64
}

pub fn fit_rows(
    features: &[Vec<f64>],
    targets: &[f64],
    feature_names: Vec<String>,
    params: &TreeParams,
) -> Result<DecisionTree> {
    if targets.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if features.len() != targets.len() {
        return Err(Error::dim("tree training rows", targets.len(), features.len()));
    }
    let d = feature_names.len();
    if let Some(bad) = features.iter().find(|r| r.len() != d) {
        return Err(Error::dim("tree training row", d, bad.len()));
    }
    if targets.iter().chain(features.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::Domain("tree training data contains non-finite values".into()));
    }

    let mut nodes: Vec<Node> = Vec::new();
    // (rows, depth, parent link); the left child is popped first
    let mut stack = vec![((0..targets.len()).collect::<Vec<usize>>(), 0usize, None::<(usize, bool)>)];
    while let Some((rows, depth, link)) = stack.pop() {
        let id = nodes.len();
        if let Some((parent, is_left)) = link {
            if let NodeKind::Decision { left, right, .. } = &mut nodes[parent].kind {
                *if is_left { left } else { right } = id;
            }
        }
        let parent = link.map(|(p, _)| p);

        let first = targets[rows[0]];
        let pure = rows.iter().all(|&i| targets[i] == first);
        let may_split = !pure
            && rows.len() >= params.min_samples_split.max(2)
            && params.max_depth.is_none_or(|m| depth < m);
        let split = if may_split {
            best_split(features, targets, &rows, params.min_samples_leaf)
        } else {
            None
        };
        match split {
            None => nodes.push(Node {
                parent,
                kind: NodeKind::Leaf {
                    value: leaf_mean(targets, &rows),
                    count: rows.len(),
                },
            }),
            Some(s) => {
                nodes.push(Node {
                    parent,
                    kind: NodeKind::Decision {
                        feature: s.feature,
                        threshold: s.threshold,
                        left: usize::MAX,
                        right: usize::MAX,
                    },
                });
                let (l, r): (Vec<usize>, Vec<usize>) =
                    rows.iter().partition(|&&i| features[i][s.feature] <= s.threshold);
                stack.push((r, depth + 1, Some((id, false))));
                stack.push((l, depth + 1, Some((id, true))));
            }
        }
    }
    Ok(DecisionTree {
        feature_names,
        nodes,
    })
}
