//! Synthetic minority over-sampling (SMOTE and ADASYN) to a requested
//! sample balance coefficient `alpha = n_plus / n_minus`.
//!
//! Majority rows are never touched; synthesis only appends minority rows.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{FeatureRow, FeatureTable, Label};
use crate::seed;

/// Largest balance coefficient a plan may request.
pub const MAX_ALPHA: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Smote,
    Adasyn,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Smote => "smote",
            Method::Adasyn => "adasyn",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "smote" => Ok(Method::Smote),
            "adasyn" => Ok(Method::Adasyn),
            other => Err(format!("unknown synthesis method `{other}`")),
        }
    }
}

/// How the interpolation weight is drawn for each synthetic sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Interpolation {
    /// Uniform on [0, 1).
    #[default]
    Uniform,
    /// Always the given value; used to pin the endpoints in tests.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisPlan {
    pub method: Method,
    pub target_alpha: f64,
    pub k_neighbors: usize,
    pub seed: u64,
    /// z-score features (full-table mean/SD) before measuring distances.
    pub standardize: bool,
    pub interpolation: Interpolation,
}

impl SynthesisPlan {
    pub fn new(method: Method, target_alpha: f64, seed: u64) -> Self {
        SynthesisPlan {
            method,
            target_alpha,
            k_neighbors: 5,
            seed,
            standardize: true,
            interpolation: Interpolation::Uniform,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k_neighbors = k;
        self
    }
}

/// `round(alpha * n_minus) - n_plus`, rounding half away from zero.
pub fn required_synthetic_count(n_plus: usize, n_minus: usize, alpha: f64) -> Result<usize> {
    if n_minus == 0 {
        return Err(Error::domain("no majority rows"));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::domain(format!(
            "alpha must be positive and finite, got {alpha}"
        )));
    }
    let target = (alpha * n_minus as f64).round() as usize;
    if target < n_plus {
        return Err(Error::domain(format!(
            "cannot down-sample: alpha {alpha} asks for {target} minority rows but {n_plus} exist"
        )));
    }
    Ok(target - n_plus)
}

/// Per-feature affine map to zero mean and unit (population) SD.
/// Constant features get a unit scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let n = rows.len() as f64;
        let d = rows.first().map_or(0, Vec::len);
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn identity(d: usize) -> Self {
        Standardizer {
            mean: vec![0.0; d],
            scale: vec![1.0; d],
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// k nearest candidates of `query` among `pool` (row indices into `points`),
/// excluding `query` itself; ties by lower row index.
fn knn(points: &[Vec<f64>], query: usize, pool: &[usize], k: usize) -> Vec<usize> {
    let mut cand: Vec<(f64, usize)> = pool
        .iter()
        .filter(|&&j| j != query)
        .map(|&j| (sq_dist(&points[query], &points[j]), j))
        .collect();
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    cand.truncate(k);
    cand.into_iter().map(|(_, j)| j).collect()
}

fn distance_space(table: &FeatureTable, standardize: bool) -> Vec<Vec<f64>> {
    let (x, _) = table.matrix();
    let st = if standardize {
        Standardizer::fit(&x)
    } else {
        Standardizer::identity(table.n_features())
    };
    x.iter().map(|r| st.apply(r)).collect()
}

fn minority_indices(table: &FeatureTable) -> Vec<usize> {
    table
        .rows()
        .iter()
        .enumerate()
        .filter(|(_, r)| r.label.is_positive())
        .map(|(i, _)| i)
        .collect()
}

/// For each minority row (in row order), the row indices of its `k` nearest
/// minority rows.
pub fn minority_neighbors(
    table: &FeatureTable,
    k: usize,
    standardize: bool,
) -> Result<Vec<Vec<usize>>> {
    let minority = minority_indices(table);
    if k == 0 || minority.len() <= k {
        return Err(Error::domain(format!(
            "need more than k={k} minority rows, have {}",
            minority.len()
        )));
    }
    let points = distance_space(table, standardize);
    Ok(minority
        .iter()
        .map(|&i| knn(&points, i, &minority, k))
        .collect())
}

/// Number of majority rows among each minority row's `k` nearest rows in the
/// whole table.
pub fn majority_neighbor_counts(
    table: &FeatureTable,
    k: usize,
    standardize: bool,
) -> Result<Vec<usize>> {
    if k == 0 || table.len() <= k {
        return Err(Error::domain(format!(
            "need more than k={k} rows, have {}",
            table.len()
        )));
    }
    let points = distance_space(table, standardize);
    let all: Vec<usize> = (0..table.len()).collect();
    Ok(minority_indices(table)
        .iter()
        .map(|&i| {
            knn(&points, i, &all, k)
                .into_iter()
                .filter(|&j| table.rows()[j].label == Label::Term)
                .count()
        })
        .collect())
}

/// Split `total` in proportion to integer `weights` by the largest-remainder
/// method; remainders are compared exactly and ties go to the lower index.
/// Returns `None` when every weight is zero.
pub fn allocate_largest_remainder(weights: &[u64], total: u64) -> Option<Vec<u64>> {
    let sum: u128 = weights.iter().map(|&w| w as u128).sum();
    if sum == 0 {
        return None;
    }
    let mut alloc: Vec<u64> = Vec::with_capacity(weights.len());
    let mut rema: Vec<(u128, usize)> = Vec::with_capacity(weights.len());
    for (i, &w) in weights.iter().enumerate() {
        let num = w as u128 * total as u128;
        alloc.push((num / sum) as u64);
        rema.push((num % sum, i));
    }
    let left = total - alloc.iter().sum::<u64>();
    rema.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in rema.iter().take(left as usize) {
        alloc[i] += 1;
    }
    Some(alloc)
}

/// ADASYN allocation: synthetics per minority row from its majority-neighbour
/// counts, falling back to a uniform split when no row has majority neighbours.
pub fn adasyn_allocation(majority_counts: &[usize], total: usize) -> Vec<usize> {
    let weights: Vec<u64> = majority_counts.iter().map(|&d| d as u64).collect();
    let alloc = allocate_largest_remainder(&weights, total as u64).unwrap_or_else(|| {
        log::warn!(
            "no minority row has a majority neighbour; ADASYN falls back to uniform allocation"
        );
        allocate_largest_remainder(&vec![1; weights.len()], total as u64).unwrap_or_default()
    });
    alloc.into_iter().map(|g| g as usize).collect()
}

/// Dispatch on `plan.method`.
pub fn synthesize(table: &FeatureTable, plan: &SynthesisPlan) -> Result<FeatureTable> {
    match plan.method {
        Method::Smote => smote(table, plan),
        Method::Adasyn => adasyn(table, plan),
    }
}

fn check_plan(table: &FeatureTable, plan: &SynthesisPlan) -> Result<usize> {
    if !(plan.target_alpha > 0.0 && plan.target_alpha <= MAX_ALPHA) {
        return Err(Error::domain(format!(
            "target alpha {} outside (0, {MAX_ALPHA}]",
            plan.target_alpha
        )));
    }
    if let Interpolation::Fixed(l) = plan.interpolation {
        if !(0.0..=1.0).contains(&l) {
            return Err(Error::domain(format!(
                "interpolation weight {l} outside [0, 1]"
            )));
        }
    }
    required_synthetic_count(table.n_plus(), table.n_minus(), plan.target_alpha)
}

/// Emits synthetic rows `base + lambda * (neighbour - base)` in a fixed RNG
/// order: neighbour choice, then lambda.
struct Interpolator<'a> {
    table: &'a FeatureTable,
    rng: seed::Rng,
    interpolation: Interpolation,
    out: Vec<FeatureRow>,
}

impl Interpolator<'_> {
    fn emit(&mut self, base: usize, neighbors: &[usize]) {
        let nb = neighbors[self.rng.gen_range(0..neighbors.len())];
        let lambda = match self.interpolation {
            Interpolation::Uniform => self.rng.gen::<f64>(),
            Interpolation::Fixed(l) => l,
        };
        let rows = self.table.rows();
        let (b, n) = (&rows[base].features, &rows[nb].features);
        let features = b
            .iter()
            .zip(n)
            .map(|(bi, ni)| bi + lambda * (ni - bi))
            .collect();
        let serial = self.out.len();
        self.out.push(FeatureRow {
            id: format!("{}~syn{serial}", rows[base].id),
            features,
            label: Label::Preterm,
            synthetic: true,
        });
    }

    fn finish(self) -> Result<FeatureTable> {
        let mut rows = self.table.rows().to_vec();
        rows.extend(self.out);
        self.table.with_rows(rows)
    }
}

/// SMOTE: base rows cycle over the minority rows in row order; each
/// synthetic sample interpolates toward a random one of the base's k
/// nearest minority neighbours.
pub fn smote(table: &FeatureTable, plan: &SynthesisPlan) -> Result<FeatureTable> {
    let count = check_plan(table, plan)?;
    if count == 0 {
        return Ok(table.clone());
    }
    let minority = minority_indices(table);
    let neighbors = minority_neighbors(table, plan.k_neighbors, plan.standardize)?;
    let mut gen = Interpolator {
        table,
        rng: seed::rng(plan.seed),
        interpolation: plan.interpolation,
        out: Vec::with_capacity(count),
    };
    for s in 0..count {
        let pos = s % minority.len();
        gen.emit(minority[pos], &neighbors[pos]);
    }
    gen.finish()
}

/// ADASYN: minority rows with more majority rows among their k nearest
/// neighbours (whole table) receive proportionally more synthetics.
/// Interpolation partners are drawn from the minority-only neighbourhood.
pub fn adasyn(table: &FeatureTable, plan: &SynthesisPlan) -> Result<FeatureTable> {
    let count = check_plan(table, plan)?;
    if count == 0 {
        return Ok(table.clone());
    }
    let minority = minority_indices(table);
    let neighbors = minority_neighbors(table, plan.k_neighbors, plan.standardize)?;
    let deltas = majority_neighbor_counts(table, plan.k_neighbors, plan.standardize)?;
    let alloc = adasyn_allocation(&deltas, count);
    let mut gen = Interpolator {
        table,
        rng: seed::rng(plan.seed),
        interpolation: plan.interpolation,
        out: Vec::with_capacity(count),
    };
    for (pos, &g) in alloc.iter().enumerate() {
        for _ in 0..g {
            gen.emit(minority[pos], &neighbors[pos]);
        }
    }
    gen.finish()
}
