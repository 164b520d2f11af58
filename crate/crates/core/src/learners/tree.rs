//! CART trees grown best-first (leaf budget) or depth-first (depth limit),
//! plus the bootstrap forests and squared-error boosting built from them.
//!
//! Impurity is variance times count for regression and Gini times count
//! for classification. Split thresholds are midpoints between consecutive
//! distinct feature values; rows with `x <= threshold` go left.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use super::majority;
use crate::dataset::Matrix;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Binary tree stored in preorder; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Checks that `nodes` is a preorder binary tree rooted at 0.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        fn walk(nodes: &[Node], id: usize, next: &mut usize) -> std::result::Result<(), String> {
            if id != *next || id >= nodes.len() {
                return Err(format!("node {id} is not in preorder position"));
            }
            *next += 1;
            if let Node::Split { left, right, .. } = nodes[id] {
                walk(nodes, left, next)?;
                walk(nodes, right, next)?;
            }
            Ok(())
        }
        let mut next = 0;
        walk(&nodes, 0, &mut next).map_err(Error::InvalidData)?;
        if next != nodes.len() {
            return Err(Error::InvalidData(format!(
                "{} nodes unreachable from the root",
                nodes.len() - next
            )));
        }
        Ok(Tree { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], id: usize) -> usize {
            match nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    id = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum TreeTarget<'a> {
    Regression(&'a [f64]),
    Classification {
        labels: &'a [usize],
        n_classes: usize,
    },
}

impl TreeTarget<'_> {
    fn leaf_value(&self, rows: &[usize]) -> f64 {
        match *self {
            TreeTarget::Regression(y) => {
                rows.iter().map(|&i| y[i]).sum::<f64>() / rows.len() as f64
            }
            TreeTarget::Classification { labels, n_classes } => {
                let mut counts = vec![0; n_classes];
                for &i in rows {
                    counts[labels[i]] += 1;
                }
                majority(&counts) as f64
            }
        }
    }

    fn is_pure(&self, rows: &[usize]) -> bool {
        match *self {
            TreeTarget::Regression(y) => rows.iter().all(|&i| y[i] == y[rows[0]]),
            TreeTarget::Classification { labels, .. } => {
                rows.iter().all(|&i| labels[i] == labels[rows[0]])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Growth {
    /// Repeatedly split the leaf with the largest impurity reduction.
    BestFirst { max_leaves: usize },
    /// Split every reducible node until `max_depth` (root has depth 0).
    DepthFirst { max_depth: usize },
}

#[derive(Debug, Clone, Copy)]
struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn gini_impurity(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let sq: f64 = counts.iter().map(|&c| (c as f64) * (c as f64)).sum();
    total as f64 - sq / total as f64
}

/// Best split of `rows` over `features`, or `None` if no split reduces
/// impurity. Ties keep the first candidate in (feature, threshold) order.
fn best_split(
    x: &Matrix,
    target: TreeTarget<'_>,
    rows: &[usize],
    features: &[usize],
) -> Option<Split> {
    if rows.len() < 2 || target.is_pure(rows) {
        return None;
    }
    let n = rows.len();
    let mut sorted = rows.to_vec();
    let mut best: Option<Split> = None;
    let mut consider = |feature: usize, i: usize, sorted: &[usize], gain: f64, parent: f64| {
        if gain > 1e-12 * parent && best.is_none_or(|b| gain > b.gain) {
            let (a, b) = (x.get(sorted[i], feature), x.get(sorted[i + 1], feature));
            let mid = a + (b - a) / 2.0;
            let threshold = if mid < b { mid } else { a };
            best = Some(Split {
                feature,
                threshold,
                gain,
            });
        }
    };
    match target {
        TreeTarget::Regression(y) => {
            let mean = rows.iter().map(|&i| y[i]).sum::<f64>() / n as f64;
            let total: f64 = rows.iter().map(|&i| y[i] - mean).sum();
            let total_sq: f64 = rows.iter().map(|&i| (y[i] - mean).powi(2)).sum();
            let parent = total_sq - total * total / n as f64;
            for &f in features {
                sorted.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)));
                let (mut s, mut sq) = (0.0, 0.0);
                for i in 0..n - 1 {
                    let t = y[sorted[i]] - mean;
                    s += t;
                    sq += t * t;
                    if x.get(sorted[i], f) == x.get(sorted[i + 1], f) {
                        continue;
                    }
                    let (nl, nr) = ((i + 1) as f64, (n - i - 1) as f64);
                    let left = sq - s * s / nl;
                    let right = (total_sq - sq) - (total - s).powi(2) / nr;
                    consider(f, i, &sorted, parent - left - right, parent);
                }
            }
        }
        TreeTarget::Classification { labels, n_classes } => {
            let mut all = vec![0; n_classes];
            for &i in rows {
                all[labels[i]] += 1;
            }
            let parent = gini_impurity(&all, n);
            for &f in features {
                sorted.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)));
                let mut left = vec![0; n_classes];
                let mut right = all.clone();
                for i in 0..n - 1 {
                    let c = labels[sorted[i]];
                    left[c] += 1;
                    right[c] -= 1;
                    if x.get(sorted[i], f) == x.get(sorted[i + 1], f) {
                        continue;
                    }
                    let gain =
                        parent - gini_impurity(&left, i + 1) - gini_impurity(&right, n - i - 1);
                    consider(f, i, &sorted, gain, parent);
                }
            }
        }
    }
    best
}

enum Slot {
    Leaf,
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

struct Builder<'a, 'r> {
    x: &'a Matrix,
    target: TreeTarget<'a>,
    sampler: Option<(usize, &'r mut rng::Rng)>,
    slots: Vec<(Vec<usize>, Slot)>,
}

impl Builder<'_, '_> {
    fn eligible(&mut self) -> Vec<usize> {
        let p = self.x.ncols();
        match &mut self.sampler {
            Some((m, rng)) if *m < p => {
                let mut chosen = index::sample(*rng, p, *m).into_vec();
                chosen.sort_unstable();
                chosen
            }
            _ => (0..p).collect(),
        }
    }

    fn candidate(&mut self, slot: usize) -> Option<Split> {
        let features = self.eligible();
        best_split(self.x, self.target, &self.slots[slot].0, &features)
    }

    fn apply(&mut self, slot: usize, split: Split) -> (usize, usize) {
        let rows = &self.slots[slot].0;
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&i| self.x.get(i, split.feature) <= split.threshold);
        let left = self.slots.len();
        self.slots.push((l, Slot::Leaf));
        self.slots.push((r, Slot::Leaf));
        self.slots[slot].1 = Slot::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right: left + 1,
        };
        (left, left + 1)
    }

    fn grow_best_first(&mut self, max_leaves: usize) {
        let mut open: Vec<(usize, Option<Split>)> = Vec::new();
        if max_leaves > 1 {
            let c = self.candidate(0);
            open.push((0, c));
        }
        let mut leaves = 1;
        while leaves < max_leaves {
            let mut pick: Option<usize> = None;
            for (i, (_, cand)) in open.iter().enumerate() {
                if let Some(c) = cand {
                    if pick.is_none_or(|p| c.gain > open[p].1.unwrap().gain) {
                        pick = Some(i);
                    }
                }
            }
            let Some(i) = pick else { break };
            let (slot, split) = open.remove(i);
            let (l, r) = self.apply(slot, split.unwrap());
            leaves += 1;
            let cl = self.candidate(l);
            let cr = self.candidate(r);
            open.push((l, cl));
            open.push((r, cr));
        }
    }

    fn grow_depth_first(&mut self, slot: usize, depth: usize, max_depth: usize) {
        if depth >= max_depth {
            return;
        }
        if let Some(split) = self.candidate(slot) {
            let (l, r) = self.apply(slot, split);
            self.grow_depth_first(l, depth + 1, max_depth);
            self.grow_depth_first(r, depth + 1, max_depth);
        }
    }

    fn finish(self) -> Tree {
        fn emit(b: &Builder<'_, '_>, slot: usize, out: &mut Vec<Node>) -> usize {
            let id = out.len();
            match b.slots[slot].1 {
                Slot::Leaf => out.push(Node::Leaf {
                    value: b.target.leaf_value(&b.slots[slot].0),
                }),
                Slot::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    out.push(Node::Leaf { value: 0.0 });
                    let l = emit(b, left, out);
                    let r = emit(b, right, out);
                    out[id] = Node::Split {
                        feature,
                        threshold,
                        left: l,
                        right: r,
                    };
                }
            }
            id
        }
        let mut nodes = Vec::with_capacity(self.slots.len());
        emit(&self, 0, &mut nodes);
        Tree { nodes }
    }
}

/// Grows one tree on `rows` of `x` (repeats allowed, as in a bootstrap
/// sample). With `sampler = Some((m, rng))` only `m` uniformly drawn
/// features are eligible at each node.
pub fn grow(
    x: &Matrix,
    target: TreeTarget<'_>,
    rows: &[usize],
    growth: Growth,
    sampler: Option<(usize, &mut rng::Rng)>,
) -> Tree {
    let mut b = Builder {
        x,
        target,
        sampler,
        slots: vec![(rows.to_vec(), Slot::Leaf)],
    };
    match growth {
        Growth::BestFirst { max_leaves } => b.grow_best_first(max_leaves),
        Growth::DepthFirst { max_depth } => b.grow_depth_first(0, 0, max_depth),
    }
    b.finish()
}

/// Row indices of bootstrap sample `tree_index` (size n, with replacement).
pub fn bootstrap_indices(seed: u64, tree_index: usize, n: usize) -> Vec<usize> {
    let mut r = rng::rng_for(seed, "bootstrap", &[tree_index as u64]);
    (0..n).map(|_| r.gen_range(0..n)).collect()
}

/// One tree per bootstrap sample; trees are independent given their index.
pub fn fit_forest(
    x: &Matrix,
    target: TreeTarget<'_>,
    n_trees: usize,
    growth: Growth,
    m_features: Option<usize>,
    seed: u64,
) -> Vec<Tree> {
    (0..n_trees)
        .into_par_iter()
        .map(|t| {
            let rows = bootstrap_indices(seed, t, x.nrows());
            let mut feature_rng = rng::rng_for(seed, "split-features", &[t as u64]);
            let sampler = m_features.map(|m| (m, &mut feature_rng));
            grow(x, target, &rows, growth, sampler)
        })
        .collect()
}

/// Mean of tree outputs (regression, `n_classes == 0`) or majority vote.
pub(crate) fn aggregate(trees: &[Tree], row: &[f64], n_classes: usize) -> f64 {
    if n_classes == 0 {
        trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / trees.len() as f64
    } else {
        let mut votes = vec![0; n_classes];
        for t in trees {
            votes[t.predict_row(row) as usize] += 1;
        }
        majority(&votes) as f64
    }
}

/// Squared-error gradient boosting: start from the mean, then fit each
/// stage to the current residuals and add it scaled by `rate`.
pub(crate) fn boost(
    x: &Matrix,
    y: &[f64],
    rate: f64,
    rounds: usize,
    max_leaves: usize,
) -> (f64, Vec<Tree>) {
    let n = y.len();
    let base = y.iter().sum::<f64>() / n as f64;
    let rows: Vec<usize> = (0..n).collect();
    let mut fitted = vec![base; n];
    let mut trees = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, f)| a - f).collect();
        let tree = grow(
            x,
            TreeTarget::Regression(&residuals),
            &rows,
            Growth::BestFirst { max_leaves },
            None,
        );
        for (i, f) in fitted.iter_mut().enumerate() {
            *f += rate * tree.predict_row(x.row(i));
        }
        trees.push(tree);
    }
    (base, trees)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf_rows(tree: &Tree, x: &Matrix, rows: &[usize]) -> Vec<(usize, Vec<usize>)> {
        let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
        for &i in rows {
            let mut id = 0;
            while let Node::Split {
                feature,
                threshold,
                left,
                right,
            } = tree.nodes()[id]
            {
                id = if x.get(i, feature) <= threshold {
                    left
                } else {
                    right
                };
            }
            match groups.iter_mut().find(|(leaf, _)| *leaf == id) {
                Some((_, g)) => g.push(i),
                None => groups.push((id, vec![i])),
            }
        }
        groups
    }

    fn sample() -> (Matrix, Vec<f64>) {
        let x = Matrix::from_rows(&[
            vec![0.1, 5.0],
            vec![0.4, 3.0],
            vec![0.35, 1.0],
            vec![0.8, 2.0],
            vec![0.9, 4.0],
            vec![0.2, 0.5],
            vec![0.65, 2.5],
            vec![0.5, 3.5],
        ])
        .unwrap();
        let y = vec![1.0, 2.5, 2.0, 7.0, 8.5, 0.5, 6.0, 3.0];
        (x, y)
    }

    #[test]
    fn leaf_budget_and_exact_means() {
        let (x, y) = sample();
        let rows: Vec<usize> = (0..8).collect();
        for max_leaves in 1..=8 {
            let t = grow(
                &x,
                TreeTarget::Regression(&y),
                &rows,
                Growth::BestFirst { max_leaves },
                None,
            );
            assert!(t.n_leaves() <= max_leaves);
            for node in t.nodes() {
                if let Node::Split { left, right, .. } = node {
                    assert!(left != right);
                }
            }
            for (leaf, members) in leaf_rows(&t, &x, &rows) {
                let mean = members.iter().map(|&i| y[i]).sum::<f64>() / members.len() as f64;
                assert_eq!(t.nodes()[leaf], Node::Leaf { value: mean });
            }
        }
        let full = grow(
            &x,
            TreeTarget::Regression(&y),
            &rows,
            Growth::BestFirst { max_leaves: 100 },
            None,
        );
        assert_eq!(full.n_leaves(), 8);
    }

    #[test]
    fn first_split_is_best_variance_reduction() {
        // Brute-force over every feature and midpoint.
        let (x, y) = sample();
        let sse = |idx: &[usize]| {
            let m = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
            idx.iter().map(|&i| (y[i] - m).powi(2)).sum::<f64>()
        };
        let mut best = (f64::INFINITY, 0, 0.0);
        for f in 0..2 {
            let mut vals: Vec<f64> = x.column(f).collect();
            vals.sort_by(f64::total_cmp);
            for w in vals.windows(2) {
                let t = (w[0] + w[1]) / 2.0;
                let l: Vec<usize> = (0..8).filter(|&i| x.get(i, f) <= t).collect();
                let r: Vec<usize> = (0..8).filter(|&i| x.get(i, f) > t).collect();
                let total = sse(&l) + sse(&r);
                if total < best.0 {
                    best = (total, f, t);
                }
            }
        }
        let rows: Vec<usize> = (0..8).collect();
        let t = grow(
            &x,
            TreeTarget::Regression(&y),
            &rows,
            Growth::BestFirst { max_leaves: 2 },
            None,
        );
        let Node::Split {
            feature, threshold, ..
        } = t.nodes()[0]
        else {
            panic!()
        };
        assert_eq!(feature, best.1);
        assert!((threshold - best.2).abs() < 1e-12);
    }

    #[test]
    fn depth_limit_and_gini_split() {
        let x = Matrix::new(6, 1, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let labels = vec![0, 0, 1, 1, 2, 2];
        let target = TreeTarget::Classification {
            labels: &labels,
            n_classes: 3,
        };
        let rows: Vec<usize> = (0..6).collect();
        let stump = grow(&x, target, &rows, Growth::DepthFirst { max_depth: 1 }, None);
        assert_eq!(stump.depth(), 1);
        let deep = grow(&x, target, &rows, Growth::DepthFirst { max_depth: 5 }, None);
        assert_eq!(deep.depth(), 2);
        assert_eq!(deep.n_leaves(), 3);
        for (i, want) in labels.iter().enumerate() {
            assert_eq!(deep.predict_row(x.row(i)), *want as f64);
        }
    }

    #[test]
    fn constant_features_never_split() {
        let x = Matrix::new(4, 1, vec![2.0; 4]).unwrap();
        let y = [1.0, 5.0, 2.0, 0.0];
        let t = grow(
            &x,
            TreeTarget::Regression(&y),
            &[0, 1, 2, 3],
            Growth::BestFirst { max_leaves: 4 },
            None,
        );
        assert_eq!(t.n_leaves(), 1);
    }

    #[test]
    fn single_bootstrap_forest_is_one_tree_on_the_resample() {
        let (x, y) = sample();
        let growth = Growth::DepthFirst { max_depth: 3 };
        let forest = fit_forest(&x, TreeTarget::Regression(&y), 1, growth, None, 11);
        let rows = bootstrap_indices(11, 0, 8);
        let single = grow(&x, TreeTarget::Regression(&y), &rows, growth, None);
        assert_eq!(forest[0], single);

        let rf = fit_forest(
            &x,
            TreeTarget::Regression(&y),
            1,
            Growth::BestFirst { max_leaves: 4 },
            Some(2),
            11,
        );
        let single = grow(
            &x,
            TreeTarget::Regression(&y),
            &rows,
            Growth::BestFirst { max_leaves: 4 },
            None,
        );
        assert_eq!(rf[0], single);
    }

    #[test]
    fn from_nodes_rejects_bad_layout() {
        let leaf = Node::Leaf { value: 1.0 };
        assert!(Tree::from_nodes(vec![leaf]).is_ok());
        let split = |l, r| Node::Split {
            feature: 0,
            threshold: 0.0,
            left: l,
            right: r,
        };
        assert!(Tree::from_nodes(vec![split(1, 2), leaf, leaf]).is_ok());
        assert!(Tree::from_nodes(vec![split(2, 1), leaf, leaf]).is_err());
        assert!(Tree::from_nodes(vec![split(1, 2), leaf, leaf, leaf]).is_err());
        assert!(Tree::from_nodes(vec![split(1, 5), leaf]).is_err());
    }
}
