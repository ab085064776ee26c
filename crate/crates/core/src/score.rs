//! Feature scores, importance weights, bias envelopes and the search for the
//! balance coefficient that maximizes the effective score.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forest::{Forest, ForestParams};
use crate::ingest::FeatureTable;
use crate::seed;
use crate::synth::{self, Method, SynthesisPlan};

/// Per-feature class means and unbiased class variances.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    pub mean_all: Vec<f64>,
    pub mean_pos: Vec<f64>,
    pub mean_neg: Vec<f64>,
    pub var_pos: Vec<f64>,
    pub var_neg: Vec<f64>,
}

impl ClassStats {
    pub fn compute(table: &FeatureTable) -> Result<ClassStats> {
        let (n_pos, n_neg) = (table.n_plus(), table.n_minus());
        if n_pos < 2 || n_neg < 2 {
            return Err(Error::domain(format!(
                "class statistics need >= 2 rows per class (have {n_pos} preterm, {n_neg} term)"
            )));
        }
        let d = table.n_features();
        let mut stats = ClassStats {
            mean_all: vec![0.0; d],
            mean_pos: vec![0.0; d],
            mean_neg: vec![0.0; d],
            var_pos: vec![0.0; d],
            var_neg: vec![0.0; d],
        };
        for row in table.rows() {
            let m = if row.label.is_positive() {
                &mut stats.mean_pos
            } else {
                &mut stats.mean_neg
            };
            for (acc, v) in m.iter_mut().zip(&row.features) {
                *acc += v;
            }
        }
        for i in 0..d {
            stats.mean_all[i] = (stats.mean_pos[i] + stats.mean_neg[i]) / table.len() as f64;
            stats.mean_pos[i] /= n_pos as f64;
            stats.mean_neg[i] /= n_neg as f64;
        }
        for row in table.rows() {
            let (m, v) = if row.label.is_positive() {
                (&stats.mean_pos, &mut stats.var_pos)
            } else {
                (&stats.mean_neg, &mut stats.var_neg)
            };
            for ((acc, x), mu) in v.iter_mut().zip(&row.features).zip(m) {
                *acc += (x - mu).powi(2);
            }
        }
        stats
            .var_pos
            .iter_mut()
            .for_each(|v| *v /= (n_pos - 1) as f64);
        stats
            .var_neg
            .iter_mut()
            .for_each(|v| *v /= (n_neg - 1) as f64);
        Ok(stats)
    }
}

/// Between-class separation over within-class spread, per feature:
///
/// `[(mean_pos - mean_all)^2 + (mean_neg - mean_all)^2] / (var_pos + var_neg)`
///
/// A feature constant within each class but different between classes scores
/// `+inf`; one constant everywhere scores 0.
pub fn feature_score(table: &FeatureTable) -> Result<Vec<f64>> {
    let s = ClassStats::compute(table)?;
    Ok((0..table.n_features())
        .map(|i| {
            let num =
                (s.mean_pos[i] - s.mean_all[i]).powi(2) + (s.mean_neg[i] - s.mean_all[i]).powi(2);
            let den = s.var_pos[i] + s.var_neg[i];
            if den > 0.0 {
                num / den
            } else if num == 0.0 {
                0.0
            } else {
                log::warn!(
                    "feature `{}` is constant within each class but separates them perfectly",
                    table.feature_names()[i]
                );
                f64::INFINITY
            }
        })
        .collect())
}

/// Importance weights from out-of-bag permutation importance of a random
/// forest, negatives clipped to zero and normalized to sum to one.
pub fn feature_weights(table: &FeatureTable, forest: &ForestParams, seed: u64) -> Result<Vec<f64>> {
    if table.n_plus() < 2 || table.n_minus() < 2 {
        return Err(Error::domain("feature weights need >= 2 rows per class"));
    }
    let d = table.n_features();
    if d == 1 {
        return Ok(vec![1.0]);
    }
    let (x, labels) = table.matrix();
    let y: Vec<bool> = labels.iter().map(|l| l.is_positive()).collect();
    let model = Forest::fit(&x, &y, forest, seed);
    let raw = model.oob_permutation_importance(&x, &y, seed::derive(seed, &[u64::MAX]));
    Ok(normalize_importance(&raw))
}

pub(crate) fn normalize_importance(raw: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = raw.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
    let total: f64 = clipped.iter().sum();
    if total > 0.0 {
        clipped.iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / raw.len() as f64; raw.len()]
    }
}

/// `sum_i w_i * f_s^i`. Weights must be non-negative and sum to one.
pub fn global_feature_score(scores: &[f64], weights: &[f64]) -> Result<f64> {
    if scores.len() != weights.len() {
        return Err(Error::domain(format!(
            "{} scores but {} weights",
            scores.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::domain("weights must be non-negative"));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!("weights sum to {sum}, expected 1")));
    }
    Ok(scores
        .iter()
        .zip(weights)
        .map(|(&f, &w)| if w == 0.0 { 0.0 } else { w * f })
        .sum())
}

/// Logistic bias envelopes centred on `1 - alpha0 * (1 - alpha0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeParams {
    k: f64,
    alpha0: f64,
}

impl EnvelopeParams {
    pub const DEFAULT_STEEPNESS: f64 = 4.0;

    pub fn new(alpha0: f64, k: f64) -> Result<Self> {
        if !(alpha0 > 0.0 && alpha0 < 1.0) {
            return Err(Error::domain(format!(
                "original balance alpha0 must be in (0, 1), got {alpha0}"
            )));
        }
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::domain(format!(
                "envelope steepness must be positive, got {k}"
            )));
        }
        Ok(EnvelopeParams { k, alpha0 })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn alpha_bar0(&self) -> f64 {
        self.alpha0 * (1.0 - self.alpha0)
    }

    /// Where both envelopes equal 1/2.
    pub fn midpoint(&self) -> f64 {
        1.0 - self.alpha_bar0()
    }
}

/// Minority-side envelope `C+`, rising in alpha.
pub fn activation(alpha: f64, params: &EnvelopeParams) -> f64 {
    1.0 / (1.0 + (-params.k * (alpha - params.midpoint())).exp())
}

/// Majority-side envelope `C-`, falling in alpha.
pub fn inactivation(alpha: f64, params: &EnvelopeParams) -> f64 {
    1.0 / (1.0 + (params.k * (alpha - params.midpoint())).exp())
}

pub fn effective_score(f_score: f64, c_plus: f64, c_minus: f64) -> f64 {
    f_score * c_plus * c_minus
}

/// Everything computed at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaPoint {
    pub alpha: f64,
    pub feature_scores: Vec<f64>,
    pub weights: Vec<f64>,
    pub f_score: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    pub f_e: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaCurve {
    pub feature_names: Vec<String>,
    pub envelope: EnvelopeParams,
    pub points: Vec<AlphaPoint>,
    pub alpha_star: f64,
}

impl AlphaCurve {
    /// Build the curve from per-grid-point feature scores and weights.
    /// The maximizer of `F_e` is the first (smallest) alpha attaining it.
    pub fn assemble(
        feature_names: Vec<String>,
        envelope: EnvelopeParams,
        grid: &[f64],
        per_alpha: Vec<(Vec<f64>, Vec<f64>)>,
    ) -> Result<AlphaCurve> {
        check_grid(grid)?;
        if per_alpha.len() != grid.len() {
            return Err(Error::Internal("grid/score length mismatch".into()));
        }
        let mut points = Vec::with_capacity(grid.len());
        for (&alpha, (fs, w)) in grid.iter().zip(per_alpha) {
            let f_score = global_feature_score(&fs, &w)?;
            let c_plus = activation(alpha, &envelope);
            let c_minus = inactivation(alpha, &envelope);
            points.push(AlphaPoint {
                alpha,
                feature_scores: fs,
                weights: w,
                f_score,
                c_plus,
                c_minus,
                f_e: effective_score(f_score, c_plus, c_minus),
            });
        }
        let mut best = 0;
        for (i, p) in points.iter().enumerate() {
            if p.f_e > points[best].f_e {
                best = i;
            }
        }
        let alpha_star = points[best].alpha;
        Ok(AlphaCurve {
            feature_names,
            envelope,
            points,
            alpha_star,
        })
    }

    pub fn point_at_star(&self) -> &AlphaPoint {
        self.points
            .iter()
            .find(|p| p.alpha == self.alpha_star)
            .expect("alpha_star is on the grid")
    }

    /// CSV with columns `alpha, f_<name>..., w_<name>..., F_score, C_plus, C_minus, F_e`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha");
        for n in &self.feature_names {
            out.push_str(&format!(",f_{n}"));
        }
        for n in &self.feature_names {
            out.push_str(&format!(",w_{n}"));
        }
        out.push_str(",F_score,C_plus,C_minus,F_e\n");
        for p in &self.points {
            out.push_str(&p.alpha.to_string());
            for v in p.feature_scores.iter().chain(&p.weights) {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push_str(&format!(
                ",{},{},{},{}\n",
                p.f_score, p.c_plus, p.c_minus, p.f_e
            ));
        }
        out
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::config("alpha grid is empty"));
    }
    if grid.iter().any(|a| !a.is_finite()) || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::config(
            "alpha grid must be finite and strictly ascending",
        ));
    }
    Ok(())
}

/// Multiples of 0.05 from the first one at or above `alpha0 + 0.05` up to 1.2.
pub fn default_grid(alpha0: f64) -> Vec<f64> {
    let first = ((alpha0 + 0.05) * 20.0 - 1e-9).ceil() as i64;
    (first..=24).map(|j| j as f64 / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeConfig {
    pub method: Method,
    pub grid: Vec<f64>,
    /// Synthesis draws averaged per grid point.
    pub repeats: usize,
    pub seed: u64,
    pub k_neighbors: usize,
    pub forest: ForestParams,
    pub steepness: f64,
}

impl OptimizeConfig {
    pub fn new(method: Method, grid: Vec<f64>, seed: u64) -> Self {
        OptimizeConfig {
            method,
            grid,
            repeats: 20,
            seed,
            k_neighbors: 5,
            forest: ForestParams::default(),
            steepness: EnvelopeParams::DEFAULT_STEEPNESS,
        }
    }
}

/// Reject grids that would require removing minority rows.
pub fn check_feasible_grid(table: &FeatureTable, grid: &[f64]) -> Result<()> {
    check_grid(grid)?;
    let min = grid[0];
    if synth::required_synthetic_count(table.n_plus(), table.n_minus(), min).is_err() {
        return Err(Error::config(format!(
            "alpha grid starts at {min}, below the table's balance {:.6}",
            table.alpha()
        )));
    }
    Ok(())
}

/// Sweep the grid: at each alpha, synthesize `repeats` times, average the
/// feature scores and weights, and combine them with the envelopes.
pub fn optimize_alpha(table: &FeatureTable, cfg: &OptimizeConfig) -> Result<AlphaCurve> {
    check_feasible_grid(table, &cfg.grid)?;
    if cfg.repeats == 0 {
        return Err(Error::config("repeats must be >= 1"));
    }
    if table.rows().iter().any(|r| r.synthetic) {
        log::warn!("input table already contains synthetic rows");
    }
    let envelope = EnvelopeParams::new(table.alpha(), cfg.steepness)?;

    let cells: Vec<(usize, usize)> = (0..cfg.grid.len())
        .flat_map(|g| (0..cfg.repeats).map(move |r| (g, r)))
        .collect();
    let results: Vec<(Vec<f64>, Vec<f64>)> = cells
        .par_iter()
        .map(|&(g, r)| {
            let path = [g as u64, r as u64];
            let mut plan = SynthesisPlan::new(
                cfg.method,
                cfg.grid[g],
                seed::derive(cfg.seed, &[0, path[0], path[1]]),
            );
            plan.k_neighbors = cfg.k_neighbors;
            let synthesized = synth::synthesize(table, &plan)?;
            let fs = feature_score(&synthesized)?;
            let w = feature_weights(
                &synthesized,
                &cfg.forest,
                seed::derive(cfg.seed, &[1, path[0], path[1]]),
            )?;
            Ok((fs, w))
        })
        .collect::<Result<_>>()?;

    let d = table.n_features();
    let per_alpha = results
        .chunks(cfg.repeats)
        .map(|chunk| {
            let mut fs = vec![0.0; d];
            let mut w = vec![0.0; d];
            for (f, wt) in chunk {
                for i in 0..d {
                    fs[i] += f[i];
                    w[i] += wt[i];
                }
            }
            let r = chunk.len() as f64;
            fs.iter_mut().for_each(|v| *v /= r);
            w.iter_mut().for_each(|v| *v /= r);
            (fs, w)
        })
        .collect();
    AlphaCurve::assemble(
        table.feature_names().to_vec(),
        envelope,
        &cfg.grid,
        per_alpha,
    )
}
