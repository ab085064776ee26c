//! Bagged CART ensemble with out-of-bag permutation importance.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::tree::{Tree, TreeParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows each tree to purity.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features tried per split; `None` means `ceil(sqrt(n_features))`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 200,
            max_depth: None,
            min_samples_leaf: 1,
            max_features: None,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    fn tree_params(&self, n_features: usize) -> TreeParams {
        let mtry = self
            .max_features
            .unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize)
            .clamp(1, n_features);
        TreeParams {
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            max_features: Some(mtry),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<Tree>,
    /// Per tree: in-bag flag for each training row.
    in_bag: Vec<Vec<bool>>,
}

impl Forest {
    /// Fit `params.n_trees` trees; tree `t` uses the seed derived from
    /// `(seed, t)`, so the result does not depend on thread scheduling.
    pub fn fit(x: &[Vec<f64>], y: &[bool], params: &ForestParams, seed: u64) -> Forest {
        let n = x.len();
        let tp = params.tree_params(x[0].len());
        let fitted: Vec<(Tree, Vec<bool>)> = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed::rng(seed::derive(seed, &[t as u64]));
                let samples: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.gen_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                let mut in_bag = vec![false; n];
                for &i in &samples {
                    in_bag[i] = true;
                }
                (Tree::fit_classifier(x, y, &samples, &tp, &mut rng), in_bag)
            })
            .collect();
        let (trees, in_bag) = fitted.into_iter().unzip();
        Forest { trees, in_bag }
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Mean positive-class fraction over trees.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }

    /// Mean decrease in per-tree out-of-bag accuracy when one feature's
    /// out-of-bag values are shuffled. Trees without out-of-bag rows are
    /// skipped; raw (unclipped) values are returned.
    pub fn oob_permutation_importance(&self, x: &[Vec<f64>], y: &[bool], seed: u64) -> Vec<f64> {
        let d = x[0].len();
        let per_tree: Vec<Option<Vec<f64>>> = self
            .trees
            .par_iter()
            .zip(&self.in_bag)
            .enumerate()
            .map(|(t, (tree, bag))| {
                let oob: Vec<usize> = (0..x.len()).filter(|&i| !bag[i]).collect();
                if oob.is_empty() {
                    return None;
                }
                let correct = |i: usize, row: &[f64]| (tree.predict(row) > 0.5) == y[i];
                let base = oob.iter().filter(|&&i| correct(i, &x[i])).count() as f64;
                let mut rng = seed::rng(seed::derive(seed, &[t as u64]));
                let drops = (0..d)
                    .map(|f| {
                        let mut perm: Vec<f64> = oob.iter().map(|&i| x[i][f]).collect();
                        perm.shuffle(&mut rng);
                        let mut row = vec![0.0; d];
                        let permuted = oob
                            .iter()
                            .zip(&perm)
                            .filter(|(&i, &v)| {
                                row.copy_from_slice(&x[i]);
                                row[f] = v;
                                correct(i, &row)
                            })
                            .count() as f64;
                        (base - permuted) / oob.len() as f64
                    })
                    .collect();
                Some(drops)
            })
            .collect();

        let mut total = vec![0.0; d];
        let mut used = 0usize;
        for drops in per_tree.into_iter().flatten() {
            used += 1;
            for (acc, v) in total.iter_mut().zip(drops) {
                *acc += v;
            }
        }
        if used > 0 {
            total.iter_mut().for_each(|v| *v /= used as f64);
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_unbagged_tree_equals_cart() {
        let mut rng = seed::rng(2);
        let x: Vec<Vec<f64>> = (0..60)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<bool> = x.iter().map(|r| r[0] + 0.3 * r[1] > 0.1).collect();
        let params = ForestParams {
            n_trees: 1,
            bootstrap: false,
            max_features: Some(3),
            ..Default::default()
        };
        let forest = Forest::fit(&x, &y, &params, 5);
        let all: Vec<usize> = (0..x.len()).collect();
        let cart = Tree::fit_classifier(&x, &y, &all, &TreeParams::default(), &mut seed::rng(0));
        assert_eq!(&forest.trees()[0], &cart);
    }

    #[test]
    fn importance_finds_the_informative_feature() {
        let mut rng = seed::rng(8);
        let n = 200;
        let y: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
        let x: Vec<Vec<f64>> = y
            .iter()
            .map(|&c| {
                let signal = if c { 1.5 } else { -1.5 } + rng.gen_range(-1.0..1.0);
                vec![
                    rng.gen_range(-1.0..1.0),
                    signal,
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ]
            })
            .collect();
        let f = Forest::fit(
            &x,
            &y,
            &ForestParams {
                n_trees: 50,
                ..Default::default()
            },
            1,
        );
        let imp = f.oob_permutation_importance(&x, &y, 1);
        let best = (0..4).max_by(|&a, &b| imp[a].total_cmp(&imp[b])).unwrap();
        assert_eq!(best, 1, "{imp:?}");
    }
}
