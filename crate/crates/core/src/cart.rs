//! Weighted CART partitioning with the Gini criterion.
//!
//! The tree only provides the partition of the feature space; leaf models
//! are fitted separately (see [`crate::pmt`]). Nodes live in a flat arena
//! with the root at index 0. Routing sends `x` left iff
//! `x[feature] <= threshold`.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::dataset::validate_weights;
use crate::{Dataset, Error, Result};

/// Splits whose impurity decrease does not exceed this are rejected.
pub const MIN_IMPURITY_DECREASE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        leaf_id: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tree {
    nodes: Vec<TreeNode>,
    n_leaves: usize,
    n_features: usize,
}

impl Tree {
    /// A tree with a single leaf.
    pub fn stump(n_features: usize) -> Self {
        Self {
            nodes: vec![TreeNode::Leaf { leaf_id: 0 }],
            n_leaves: 1,
            n_features,
        }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Length of the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, left).max(walk(nodes, right))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    #[inline]
    pub(crate) fn route_unchecked(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { leaf_id } => return leaf_id,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Checks arena links, leaf numbering and feature indices; used when a
    /// tree comes from an external source.
    pub fn validate(&self) -> Result<()> {
        let bad = |reason| {
            Err(Error::InvalidParameter {
                name: "tree",
                reason,
            })
        };
        if self.nodes.is_empty() {
            return bad("tree has no nodes");
        }
        let mut seen = vec![false; self.n_leaves];
        let mut visited = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if i >= self.nodes.len() || visited[i] {
                return bad("node links do not form a tree");
            }
            visited[i] = true;
            match self.nodes[i] {
                TreeNode::Leaf { leaf_id } => {
                    if leaf_id >= self.n_leaves || seen[leaf_id] {
                        return bad("leaf ids must be unique and below the leaf count");
                    }
                    seen[leaf_id] = true;
                }
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if feature >= self.n_features || threshold.is_nan() {
                        return bad("split refers to an unknown feature");
                    }
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        if seen.iter().all(|&s| s) {
            Ok(())
        } else {
            bad("some leaf ids are unreachable")
        }
    }
}

/// Leaf that contains `x`.
pub fn route(tree: &Tree, x: &[f64]) -> Result<usize> {
    if x.len() != tree.n_features {
        return Err(Error::DimensionMismatch {
            expected: tree.n_features,
            actual: x.len(),
        });
    }
    Ok(tree.route_unchecked(x))
}

/// A tree together with the training rows that reached each leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltTree {
    pub tree: Tree,
    /// `leaf_members[leaf_id]` holds positions into the `rows` slice passed
    /// to [`build_tree`], in increasing order.
    pub leaf_members: Vec<Vec<usize>>,
}

/// Greedy weighted-Gini partitioning of `rows` of `data`.
///
/// `weights[k]` belongs to `rows[k]`. Growth stops at `max_depth`, on pure
/// nodes, when no candidate split leaves at least `min_leaf_size` raw rows
/// on both sides, or when the best impurity decrease is at most
/// [`MIN_IMPURITY_DECREASE`]. Candidate thresholds are midpoints between
/// consecutive distinct values; ties go to the lowest feature, then the
/// lowest threshold.
pub fn build_tree(
    data: &Dataset,
    rows: &[usize],
    weights: &[f64],
    max_depth: usize,
    min_leaf_size: usize,
) -> Result<BuiltTree> {
    if rows.is_empty() {
        return Err(Error::EmptyData);
    }
    if min_leaf_size == 0 {
        return Err(Error::InvalidParameter {
            name: "min_leaf_size",
            reason: "must be at least 1",
        });
    }
    validate_weights(weights, rows.len())?;
    let mut builder = Builder {
        data,
        rows,
        weights,
        max_depth,
        min_leaf_size,
        nodes: Vec::new(),
        leaf_members: Vec::new(),
        order: Vec::with_capacity(rows.len()),
        left_mass: vec![0.0; data.n_classes()],
        parent_mass: vec![0.0; data.n_classes()],
    };
    let members: Vec<usize> = (0..rows.len()).collect();
    builder.grow(members, 0);
    Ok(BuiltTree {
        tree: Tree {
            n_leaves: builder.leaf_members.len(),
            nodes: builder.nodes,
            n_features: data.n_features(),
        },
        leaf_members: builder.leaf_members,
    })
}

struct Builder<'a> {
    data: &'a Dataset,
    rows: &'a [usize],
    weights: &'a [f64],
    max_depth: usize,
    min_leaf_size: usize,
    nodes: Vec<TreeNode>,
    leaf_members: Vec<Vec<usize>>,
    order: Vec<(f64, usize)>,
    left_mass: Vec<f64>,
    parent_mass: Vec<f64>,
}

#[derive(Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

impl Builder<'_> {
    fn grow(&mut self, members: Vec<usize>, depth: usize) -> usize {
        let index = self.nodes.len();
        let split = if depth < self.max_depth {
            self.best_split(&members)
        } else {
            None
        };
        match split {
            None => {
                let leaf_id = self.leaf_members.len();
                self.nodes.push(TreeNode::Leaf { leaf_id });
                self.leaf_members.push(members);
            }
            Some(c) => {
                self.nodes.push(TreeNode::Leaf {
                    leaf_id: usize::MAX,
                });
                let (left, right): (Vec<usize>, Vec<usize>) = members
                    .into_iter()
                    .partition(|&k| self.data.value(self.rows[k], c.feature) <= c.threshold);
                let left = self.grow(left, depth + 1);
                let right = self.grow(right, depth + 1);
                self.nodes[index] = TreeNode::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left,
                    right,
                };
            }
        }
        index
    }

    fn best_split(&mut self, members: &[usize]) -> Option<Candidate> {
        let n = members.len();
        if n < 2 * self.min_leaf_size {
            return None;
        }
        let first = self.data.label(self.rows[members[0]]);
        if members
            .iter()
            .all(|&k| self.data.label(self.rows[k]) == first)
        {
            return None;
        }
        self.parent_mass.iter_mut().for_each(|m| *m = 0.0);
        for &k in members {
            self.parent_mass[self.data.label(self.rows[k])] += self.weights[k];
        }
        let total: f64 = self.parent_mass.iter().sum();
        if total <= 0.0 {
            return None;
        }
        let parent_term = sum_sq(&self.parent_mass) / total;

        let mut best: Option<Candidate> = None;
        for feature in 0..self.data.n_features() {
            self.order.clear();
            self.order.extend(
                members
                    .iter()
                    .map(|&k| (self.data.value(self.rows[k], feature), k)),
            );
            self.order.sort_unstable_by(|a, b| {
                a.0.partial_cmp(&b.0)
                    .unwrap_or(Ordering::Equal)
                    .then(a.1.cmp(&b.1))
            });
            self.left_mass.iter_mut().for_each(|m| *m = 0.0);
            let mut left_weight = 0.0;
            for pos in 0..n - 1 {
                let (value, k) = self.order[pos];
                let w = self.weights[k];
                self.left_mass[self.data.label(self.rows[k])] += w;
                left_weight += w;
                let left_count = pos + 1;
                if left_count < self.min_leaf_size {
                    continue;
                }
                if n - left_count < self.min_leaf_size {
                    break;
                }
                let next = self.order[pos + 1].0;
                if value >= next {
                    continue;
                }
                let right_weight = total - left_weight;
                let mut left_sq = 0.0;
                let mut right_sq = 0.0;
                for (l, p) in self.left_mass.iter().zip(&self.parent_mass) {
                    left_sq += l * l;
                    let r = p - l;
                    right_sq += r * r;
                }
                let mut gain = -parent_term;
                if left_weight > 0.0 {
                    gain += left_sq / left_weight;
                }
                if right_weight > 0.0 {
                    gain += right_sq / right_weight;
                }
                let decrease = gain / total;
                if best.is_none_or(|b| decrease > b.decrease) {
                    best = Some(Candidate {
                        feature,
                        threshold: midpoint(value, next),
                        decrease,
                    });
                }
            }
        }
        best.filter(|b| b.decrease > MIN_IMPURITY_DECREASE)
    }
}

fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Midpoint of `lo < hi` that still sends `lo` left and `hi` right.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

/// Weighted Gini impurity `1 - Σ_c p_c²` of the given rows.
pub fn weighted_gini(data: &Dataset, rows: &[usize], weights: &[f64]) -> f64 {
    let mut mass = vec![0.0; data.n_classes()];
    for (&r, &w) in rows.iter().zip(weights) {
        mass[data.label(r)] += w;
    }
    let total: f64 = mass.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - sum_sq(&mass) / (total * total)
}
