//! The classifier set: logistic regression, Fisher discriminant, CART,
//! gradient boosting, linear SVM and random forest. Every model exposes a
//! real-valued decision score; positive means preterm.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{Forest, ForestParams};
use crate::ingest::{FeatureTable, Label};
use crate::seed;
use crate::synth::Standardizer;
use crate::tree::{Tree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Lrc,
    Ldc,
    Dtc,
    Gbc,
    Svc,
    Rf,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 6] = [
        ClassifierKind::Lrc,
        ClassifierKind::Ldc,
        ClassifierKind::Dtc,
        ClassifierKind::Gbc,
        ClassifierKind::Svc,
        ClassifierKind::Rf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Lrc => "lrc",
            ClassifierKind::Ldc => "ldc",
            ClassifierKind::Dtc => "dtc",
            ClassifierKind::Gbc => "gbc",
            ClassifierKind::Svc => "svc",
            ClassifierKind::Rf => "rf",
        }
    }
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown classifier `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LrcParams {
    pub lambda: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LrcParams {
    fn default() -> Self {
        LrcParams {
            lambda: 1e-3,
            max_iter: 5000,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LdcParams {
    /// Added to the diagonal of the pooled covariance (standardized units).
    pub ridge: f64,
}

impl Default for LdcParams {
    fn default() -> Self {
        LdcParams { ridge: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DtcParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for DtcParams {
    fn default() -> Self {
        DtcParams {
            max_depth: 6,
            min_samples_leaf: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GbcParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
}

impl Default for GbcParams {
    fn default() -> Self {
        GbcParams {
            rounds: 100,
            max_depth: 2,
            learning_rate: 0.1,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvcParams {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvcParams {
    fn default() -> Self {
        SvcParams {
            lambda: 1e-2,
            epochs: 50,
        }
    }
}

/// Hyperparameters for every kind; only the selected kind's block is read.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Hyperparams {
    pub lrc: LrcParams,
    pub ldc: LdcParams,
    pub dtc: DtcParams,
    pub gbc: GbcParams,
    pub svc: SvcParams,
    pub rf: ForestParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Linear {
    fn score(&self, z: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(z).map(|(w, v)| w * v).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Boosted {
    pub base: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    /// Mean logistic loss on the training set after each round (index 0 is
    /// the constant model).
    pub training_loss: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Fitted {
    Lrc(Linear),
    Ldc(Linear),
    Dtc(Tree),
    Gbc(Boosted),
    Svc(Linear),
    Rf(Forest),
}

/// A fitted classifier. Immutable; predictions are thread-safe.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kind: ClassifierKind,
    pub feature_names: Vec<String>,
    pub standardization: Standardizer,
    pub fitted: Fitted,
}

impl TrainedModel {
    /// Higher means more preterm-like; the label is preterm iff the score is
    /// strictly positive.
    pub fn decision_score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.feature_names.len() {
            return Err(Error::domain(format!(
                "model expects {} features, got {}",
                self.feature_names.len(),
                x.len()
            )));
        }
        let z = self.standardization.apply(x);
        Ok(match &self.fitted {
            Fitted::Lrc(m) | Fitted::Ldc(m) | Fitted::Svc(m) => m.score(&z),
            Fitted::Dtc(t) => 2.0 * t.predict(&z) - 1.0,
            Fitted::Gbc(b) => b.raw_score(&z),
            Fitted::Rf(f) => 2.0 * f.predict_proba(&z) - 1.0,
        })
    }

    pub fn predict_label(&self, x: &[f64]) -> Result<Label> {
        Ok(label_from_score(self.decision_score(x)?))
    }
}

/// Preterm iff `score > 0`; a zero score goes to the majority class.
pub fn label_from_score(score: f64) -> Label {
    if score > 0.0 {
        Label::Preterm
    } else {
        Label::Term
    }
}

impl Boosted {
    fn raw_score(&self, z: &[f64]) -> f64 {
        self.base + self.learning_rate * self.trees.iter().map(|t| t.predict(z)).sum::<f64>()
    }
}

/// Fit a classifier of `kind` on `table`. Deterministic given `seed`.
pub fn train(
    kind: ClassifierKind,
    table: &FeatureTable,
    hyper: &Hyperparams,
    seed: u64,
) -> Result<TrainedModel> {
    if table.n_plus() < 2 || table.n_minus() < 2 {
        return Err(Error::domain(format!(
            "training needs >= 2 rows per class (have {} preterm, {} term)",
            table.n_plus(),
            table.n_minus()
        )));
    }
    let (raw, labels) = table.matrix();
    let standardization = Standardizer::fit(&raw);
    let z: Vec<Vec<f64>> = raw.iter().map(|r| standardization.apply(r)).collect();
    let y: Vec<bool> = labels.iter().map(|l| l.is_positive()).collect();

    let fitted = match kind {
        ClassifierKind::Lrc => Fitted::Lrc(fit_logistic(&z, &y, &hyper.lrc)),
        ClassifierKind::Ldc => Fitted::Ldc(fit_fisher(&z, &y, &hyper.ldc)?),
        ClassifierKind::Dtc => {
            let params = TreeParams {
                max_depth: Some(hyper.dtc.max_depth),
                min_samples_leaf: hyper.dtc.min_samples_leaf,
                max_features: None,
            };
            let all: Vec<usize> = (0..z.len()).collect();
            Fitted::Dtc(Tree::fit_classifier(
                &z,
                &y,
                &all,
                &params,
                &mut seed::rng(seed),
            ))
        }
        ClassifierKind::Gbc => Fitted::Gbc(fit_boosting(&z, &y, &hyper.gbc, seed)),
        ClassifierKind::Svc => Fitted::Svc(fit_svm(&z, &y, &hyper.svc, seed)?),
        ClassifierKind::Rf => Fitted::Rf(Forest::fit(&z, &y, &hyper.rf, seed)),
    };
    Ok(TrainedModel {
        kind,
        feature_names: table.feature_names().to_vec(),
        standardization,
        fitted,
    })
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Mean log(1 + exp(-m)) computed without overflow.
fn softplus_neg(margin: f64) -> f64 {
    if margin > 0.0 {
        (-margin).exp().ln_1p()
    } else {
        -margin + margin.exp().ln_1p()
    }
}

/// L2-regularized logistic regression by full-batch gradient descent with a
/// fixed step of 1/L, where L bounds the Hessian's largest eigenvalue.
fn fit_logistic(z: &[Vec<f64>], y: &[bool], p: &LrcParams) -> Linear {
    let n = z.len() as f64;
    let d = z[0].len();
    let mean_sq = z
        .iter()
        .map(|r| 1.0 + r.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        / n;
    let step = 1.0 / (0.25 * mean_sq + p.lambda);
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    for _ in 0..p.max_iter {
        let mut gw: Vec<f64> = w.iter().map(|wi| p.lambda * wi).collect();
        let mut gb = 0.0;
        for (row, &yi) in z.iter().zip(y) {
            let t = b + row.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>();
            let resid = (sigmoid(t) - if yi { 1.0 } else { 0.0 }) / n;
            gb += resid;
            for (g, v) in gw.iter_mut().zip(row) {
                *g += resid * v;
            }
        }
        let norm = (gb * gb + gw.iter().map(|g| g * g).sum::<f64>()).sqrt();
        if norm < p.tol {
            break;
        }
        b -= step * gb;
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= step * g;
        }
    }
    Linear {
        weights: w,
        bias: b,
    }
}

/// Fisher discriminant with pooled (MLE) covariance and equal priors; the
/// boundary passes through the midpoint of the class means.
fn fit_fisher(z: &[Vec<f64>], y: &[bool], p: &LdcParams) -> Result<Linear> {
    let d = z[0].len();
    let mut mean = [vec![0.0; d], vec![0.0; d]];
    let mut count = [0usize; 2];
    for (row, &yi) in z.iter().zip(y) {
        let c = yi as usize;
        count[c] += 1;
        for (m, v) in mean[c].iter_mut().zip(row) {
            *m += v;
        }
    }
    for c in 0..2 {
        mean[c].iter_mut().for_each(|m| *m /= count[c] as f64);
    }
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for (row, &yi) in z.iter().zip(y) {
        let mu = &mean[yi as usize];
        let dev = DVector::from_iterator(d, row.iter().zip(mu).map(|(v, m)| v - m));
        cov += &dev * dev.transpose();
    }
    cov /= z.len() as f64;
    for i in 0..d {
        cov[(i, i)] += p.ridge;
    }
    let diff = DVector::from_iterator(d, mean[1].iter().zip(&mean[0]).map(|(a, b)| a - b));
    let w = cov
        .cholesky()
        .ok_or_else(|| Error::domain("pooled covariance is not positive definite"))?
        .solve(&diff);
    let bias = -(0..d)
        .map(|i| w[i] * (mean[0][i] + mean[1][i]) / 2.0)
        .sum::<f64>();
    Ok(Linear {
        weights: w.iter().copied().collect(),
        bias,
    })
}

/// Gradient boosting on logistic loss: each round fits a depth-limited
/// regression tree to the residuals and sets leaf values by one Newton step.
fn fit_boosting(z: &[Vec<f64>], y: &[bool], p: &GbcParams, seed: u64) -> Boosted {
    let n = z.len();
    let target: Vec<f64> = y.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let pos = target.iter().sum::<f64>();
    let base = (pos / (n as f64 - pos)).ln();
    let mut raw = vec![base; n];
    let params = TreeParams {
        max_depth: Some(p.max_depth),
        min_samples_leaf: p.min_samples_leaf,
        max_features: None,
    };
    let all: Vec<usize> = (0..n).collect();
    let mut rng = seed::rng(seed);
    let loss = |raw: &[f64]| {
        raw.iter()
            .zip(y)
            .map(|(&f, &yi)| softplus_neg(if yi { f } else { -f }))
            .sum::<f64>()
            / n as f64
    };
    let mut training_loss = vec![loss(&raw)];
    let mut trees = Vec::with_capacity(p.rounds);
    for _ in 0..p.rounds {
        let prob: Vec<f64> = raw.iter().map(|&f| sigmoid(f)).collect();
        let resid: Vec<f64> = target.iter().zip(&prob).map(|(t, q)| t - q).collect();
        let mut tree = Tree::fit_regressor(z, &resid, &all, &params, &mut rng);

        let leaves: Vec<usize> = z.iter().map(|r| tree.leaf_index(r)).collect();
        let mut num = std::collections::BTreeMap::<usize, (f64, f64)>::new();
        for i in 0..n {
            let e = num.entry(leaves[i]).or_default();
            e.0 += resid[i];
            e.1 += prob[i] * (1.0 - prob[i]);
        }
        for (&leaf, &(g, h)) in &num {
            tree.set_leaf(leaf, g / h.max(1e-12));
        }
        for i in 0..n {
            raw[i] += p.learning_rate * tree.predict(&z[i]);
        }
        training_loss.push(loss(&raw));
        trees.push(tree);
    }
    Boosted {
        base,
        learning_rate: p.learning_rate,
        trees,
        training_loss,
    }
}

/// Linear soft-margin SVM by stochastic subgradient descent on the hinge
/// loss (step 1/(lambda t)); the bias is unregularized. Returns the average
/// of the iterates over the final epoch.
fn fit_svm(z: &[Vec<f64>], y: &[bool], p: &SvcParams, seed: u64) -> Result<Linear> {
    if !(p.lambda > 0.0) || p.epochs == 0 {
        return Err(Error::config("svc needs lambda > 0 and epochs >= 1"));
    }
    let d = z[0].len();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut avg_w = vec![0.0; d];
    let mut avg_b = 0.0;
    let mut order: Vec<usize> = (0..z.len()).collect();
    let mut rng = seed::rng(seed);
    let mut t = 0usize;
    for epoch in 0..p.epochs {
        order.shuffle(&mut rng);
        let last = epoch + 1 == p.epochs;
        for &i in &order {
            t += 1;
            let eta = 1.0 / (p.lambda * t as f64);
            let yi = if y[i] { 1.0 } else { -1.0 };
            let margin = yi * (b + z[i].iter().zip(&w).map(|(a, c)| a * c).sum::<f64>());
            let shrink = 1.0 - eta * p.lambda;
            w.iter_mut().for_each(|wi| *wi *= shrink);
            if margin < 1.0 {
                for (wi, v) in w.iter_mut().zip(&z[i]) {
                    *wi += eta * yi * v;
                }
                b += eta * yi;
            }
            if last {
                for (a, wi) in avg_w.iter_mut().zip(&w) {
                    *a += wi;
                }
                avg_b += b;
            }
        }
    }
    let n = z.len() as f64;
    Ok(Linear {
        weights: avg_w.into_iter().map(|v| v / n).collect(),
        bias: avg_b / n,
    })
}
