//! CART trees: Gini classification trees and squared-error regression trees.
//!
//! Both share one builder; the split criterion is the only difference.
//! Samples are addressed by index so bootstrap duplicates need no copying.

use rand::seq::index::sample;

use crate::seed::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or cannot be split.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features examined per split; `None` means all of them.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_leaf: 1,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Leaf value reached by `x`: the positive-class fraction for
    /// classification trees, the fitted value for regression trees.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Index of the leaf reached by `x`.
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf(_) => return id,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf(_)))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match nodes[id] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Overwrite the value of a leaf; used by boosting's Newton step.
    pub(crate) fn set_leaf(&mut self, id: usize, value: f64) {
        if let Node::Leaf(v) = &mut self.nodes[id] {
            *v = value;
        }
    }

    /// Fit a Gini classification tree on `samples` (indices into `x`, may
    /// repeat). Leaves hold the positive fraction.
    pub fn fit_classifier(
        x: &[Vec<f64>],
        y: &[bool],
        samples: &[usize],
        params: &TreeParams,
        rng: &mut Rng,
    ) -> Tree {
        let target = Gini { y };
        build(x, &target, samples, params, rng)
    }

    /// Fit a least-squares regression tree on `samples`. Leaves hold the mean.
    pub fn fit_regressor(
        x: &[Vec<f64>],
        y: &[f64],
        samples: &[usize],
        params: &TreeParams,
        rng: &mut Rng,
    ) -> Tree {
        let target = SquaredError { y };
        build(x, &target, samples, params, rng)
    }
}

/// Additive sufficient statistics of a node for one split criterion.
trait Criterion {
    type Acc: Copy + Default;
    fn add(&self, acc: &mut Self::Acc, i: usize);
    fn sub(&self, acc: &mut Self::Acc, i: usize);
    /// Node impurity weighted by sample count (zero when pure).
    fn cost(&self, acc: &Self::Acc) -> f64;
    fn value(&self, acc: &Self::Acc) -> f64;
}

struct Gini<'a> {
    y: &'a [bool],
}

impl Criterion for Gini<'_> {
    type Acc = (usize, usize);

    fn add(&self, acc: &mut Self::Acc, i: usize) {
        acc.0 += 1;
        acc.1 += self.y[i] as usize;
    }

    fn sub(&self, acc: &mut Self::Acc, i: usize) {
        acc.0 -= 1;
        acc.1 -= self.y[i] as usize;
    }

    fn cost(&self, &(n, pos): &Self::Acc) -> f64 {
        if n == 0 {
            return 0.0;
        }
        2.0 * pos as f64 * (n - pos) as f64 / n as f64
    }

    fn value(&self, &(n, pos): &Self::Acc) -> f64 {
        pos as f64 / n as f64
    }
}

struct SquaredError<'a> {
    y: &'a [f64],
}

impl Criterion for SquaredError<'_> {
    type Acc = (usize, f64, f64);

    fn add(&self, acc: &mut Self::Acc, i: usize) {
        acc.0 += 1;
        acc.1 += self.y[i];
        acc.2 += self.y[i] * self.y[i];
    }

    fn sub(&self, acc: &mut Self::Acc, i: usize) {
        acc.0 -= 1;
        acc.1 -= self.y[i];
        acc.2 -= self.y[i] * self.y[i];
    }

    fn cost(&self, &(n, s, ss): &Self::Acc) -> f64 {
        if n == 0 {
            return 0.0;
        }
        (ss - s * s / n as f64).max(0.0)
    }

    fn value(&self, &(n, s, _): &Self::Acc) -> f64 {
        s / n as f64
    }
}

struct BestSplit {
    cost: f64,
    feature: usize,
    threshold: f64,
}

fn build<C: Criterion>(
    x: &[Vec<f64>],
    crit: &C,
    samples: &[usize],
    params: &TreeParams,
    rng: &mut Rng,
) -> Tree {
    let mut nodes = Vec::new();
    let mut idx = samples.to_vec();
    grow(x, crit, &mut idx, 0, params, rng, &mut nodes);
    Tree { nodes }
}

fn grow<C: Criterion>(
    x: &[Vec<f64>],
    crit: &C,
    idx: &mut [usize],
    depth: usize,
    params: &TreeParams,
    rng: &mut Rng,
    nodes: &mut Vec<Node>,
) -> usize {
    let id = nodes.len();
    let mut total = C::Acc::default();
    for &i in idx.iter() {
        crit.add(&mut total, i);
    }
    nodes.push(Node::Leaf(crit.value(&total)));

    let min_leaf = params.min_samples_leaf.max(1);
    let depth_ok = params.max_depth.is_none_or(|d| depth < d);
    if !depth_ok || idx.len() < 2 * min_leaf || crit.cost(&total) <= 0.0 {
        return id;
    }

    let d = x[0].len();
    let features: Vec<usize> = match params.max_features {
        Some(m) if m < d => {
            let mut f = sample(rng, d, m.max(1)).into_vec();
            f.sort_unstable();
            f
        }
        _ => (0..d).collect(),
    };

    let mut best: Option<BestSplit> = None;
    let mut sorted = idx.to_vec();
    for &f in &features {
        sorted.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
        let mut left = C::Acc::default();
        let mut right = total;
        for pos in 0..sorted.len() - 1 {
            let i = sorted[pos];
            crit.add(&mut left, i);
            crit.sub(&mut right, i);
            let n_left = pos + 1;
            if n_left < min_leaf || sorted.len() - n_left < min_leaf {
                continue;
            }
            let (lo, hi) = (x[i][f], x[sorted[pos + 1]][f]);
            if lo == hi {
                continue;
            }
            let cost = crit.cost(&left) + crit.cost(&right);
            if best.as_ref().is_none_or(|b| cost < b.cost) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(BestSplit {
                    cost,
                    feature: f,
                    threshold,
                });
            }
        }
    }

    let Some(split) = best else {
        return id;
    };
    let mid = partition(idx, |i| x[i][split.feature] <= split.threshold);
    let (l, r) = idx.split_at_mut(mid);
    let left = grow(x, crit, l, depth + 1, params, rng, nodes);
    let right = grow(x, crit, r, depth + 1, params, rng, nodes);
    nodes[id] = Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        left,
        right,
    };
    id
}

/// Stable partition; returns the number of elements satisfying `pred`.
fn partition(idx: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let (yes, no): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| pred(i));
    let mid = yes.len();
    idx[..mid].copy_from_slice(&yes);
    idx[mid..].copy_from_slice(&no);
    mid
}
