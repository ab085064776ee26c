//! Repeated stratified hold-out evaluation: confusion counts, G-mean,
//! overall accuracy, ROC and AUC, and the alpha-sweep experiment.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{FeatureTable, Label};
use crate::learn::{self, ClassifierKind, Hyperparams};
use crate::seed;
use crate::synth::{self, Method, SynthesisPlan};

/// Split each class separately, sending `round(train_fraction * n_class)`
/// rows to training. Both parts keep the input's row order.
pub fn stratified_holdout(
    table: &FeatureTable,
    train_fraction: f64,
    seed: u64,
) -> Result<(FeatureTable, FeatureTable)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::domain(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for label in [Label::Preterm, Label::Term] {
        let mut idx: Vec<usize> = (0..table.len())
            .filter(|&i| table.rows()[i].label == label)
            .collect();
        let n = idx.len();
        let n_train = (train_fraction * n as f64).round() as usize;
        if n < 2 || n_train == 0 || n_train >= n {
            return Err(Error::domain(format!(
                "class {label} with {n} rows cannot be split at fraction {train_fraction}"
            )));
        }
        idx.shuffle(&mut rng);
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((table.select(&train)?, table.select(&test)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Sensitivity: fraction of preterm cases predicted preterm.
    pub fn tpr(&self) -> Result<f64> {
        let p = self.tp + self.fn_;
        if p == 0 {
            return Err(Error::domain("no preterm cases in truth"));
        }
        Ok(self.tp as f64 / p as f64)
    }

    /// Specificity: fraction of term cases predicted term.
    pub fn tnr(&self) -> Result<f64> {
        let n = self.tn + self.fp;
        if n == 0 {
            return Err(Error::domain("no term cases in truth"));
        }
        Ok(self.tn as f64 / n as f64)
    }
}

pub fn confusion(predictions: &[Label], truth: &[Label]) -> Result<ConfusionCounts> {
    if predictions.len() != truth.len() || truth.is_empty() {
        return Err(Error::domain(format!(
            "{} predictions for {} truth labels",
            predictions.len(),
            truth.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (p, t) in predictions.iter().zip(truth) {
        match (p, t) {
            (Label::Preterm, Label::Preterm) => c.tp += 1,
            (Label::Preterm, Label::Term) => c.fp += 1,
            (Label::Term, Label::Term) => c.tn += 1,
            (Label::Term, Label::Preterm) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// `sqrt(TPR * TNR)`.
pub fn g_mean(c: &ConfusionCounts) -> Result<f64> {
    Ok((c.tpr()? * c.tnr()?).sqrt())
}

pub fn overall_accuracy(c: &ConfusionCounts) -> Result<f64> {
    if c.total() == 0 {
        return Err(Error::domain("no samples"));
    }
    Ok((c.tp + c.tn) as f64 / c.total() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    /// Samples scoring at or above this value are called preterm.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

fn class_counts(scores: &[f64], truth: &[Label]) -> Result<(usize, usize)> {
    if scores.len() != truth.len() {
        return Err(Error::domain("scores and labels differ in length"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::domain("NaN score"));
    }
    let pos = truth.iter().filter(|l| l.is_positive()).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::domain("ROC analysis needs both classes"));
    }
    Ok((pos, neg))
}

/// ROC points from sweeping the threshold over every distinct score, from
/// (0, 0) to (1, 1) in order of increasing FPR.
pub fn roc_curve(scores: &[f64], truth: &[Label]) -> Result<Vec<RocPoint>> {
    let (pos, neg) = class_counts(scores, truth)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if truth[order[i]].is_positive() {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: s,
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    Ok(points)
}

/// Trapezoidal area under a ROC point list.
pub fn roc_area(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}

/// Probability that a random preterm case outscores a random term case,
/// ties counting one half (Mann-Whitney statistic via mid-ranks).
pub fn auc(scores: &[f64], truth: &[Label]) -> Result<f64> {
    let (pos, neg) = class_counts(scores, truth)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Twice the rank sum keeps mid-ranks integral.
    let mut rank_sum2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1..=j share the mid-rank (i + 1 + j) / 2.
        let mid2 = (i + 1 + j) as u128;
        let pos_here = order[i..j]
            .iter()
            .filter(|&&k| truth[k].is_positive())
            .count() as u128;
        rank_sum2 += mid2 * pos_here;
        i = j;
    }
    let u2 = rank_sum2 - (pos as u128) * (pos as u128 + 1);
    Ok(u2 as f64 / (2.0 * pos as f64 * neg as f64))
}

/// Whether synthesis happens before or after the train/test split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Synthesize the whole table, then split. Synthetic rows can reach the
    /// test set.
    #[default]
    Paper,
    /// Split first and synthesize only the training part.
    Safe,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Paper => "paper",
            Mode::Safe => "safe",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "paper" => Ok(Mode::Paper),
            "safe" => Ok(Mode::Safe),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub alphas: Vec<f64>,
    pub method: Method,
    pub kinds: Vec<ClassifierKind>,
    pub repeats: usize,
    pub mode: Mode,
    pub seed: u64,
    pub train_fraction: f64,
    pub k_neighbors: usize,
    pub hyper: Hyperparams,
}

impl ExperimentConfig {
    pub fn new(
        alphas: Vec<f64>,
        method: Method,
        kinds: Vec<ClassifierKind>,
        repeats: usize,
        seed: u64,
    ) -> Self {
        ExperimentConfig {
            alphas,
            method,
            kinds,
            repeats,
            mode: Mode::Paper,
            seed,
            train_fraction: 0.8,
            k_neighbors: 5,
            hyper: Hyperparams::default(),
        }
    }
}

/// Seeds for one (alpha, classifier, repeat) cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellSeeds {
    pub synthesis: u64,
    pub split: u64,
    pub training: u64,
}

impl CellSeeds {
    /// The classifier contributes its position in [`ClassifierKind::ALL`],
    /// so a cell's seeds do not depend on which other kinds are requested.
    pub fn derive(master: u64, alpha_index: usize, kind: ClassifierKind, repeat: usize) -> Self {
        let kind_index = ClassifierKind::ALL
            .iter()
            .position(|&k| k == kind)
            .unwrap_or(0);
        let cell = seed::derive(
            master,
            &[alpha_index as u64, kind_index as u64, repeat as u64],
        );
        CellSeeds {
            synthesis: seed::derive(cell, &[0]),
            split: seed::derive(cell, &[1]),
            training: seed::derive(cell, &[2]),
        }
    }
}

/// Train/test tables for one cell under the given mode.
pub fn holdout_cell(
    table: &FeatureTable,
    alpha: f64,
    method: Method,
    k_neighbors: usize,
    mode: Mode,
    train_fraction: f64,
    seeds: CellSeeds,
) -> Result<(FeatureTable, FeatureTable)> {
    let plan = SynthesisPlan::new(method, alpha, seeds.synthesis).with_k(k_neighbors);
    match mode {
        Mode::Paper => {
            let full = synth::synthesize(table, &plan)?;
            stratified_holdout(&full, train_fraction, seeds.split)
        }
        Mode::Safe => {
            let (train, test) = stratified_holdout(table, train_fraction, seeds.split)?;
            // The training part's own balance can sit slightly above the
            // table's; a grid point below it needs no synthesis.
            let needed = synth::required_synthetic_count(train.n_plus(), train.n_minus(), alpha);
            let train = match needed {
                Ok(0) | Err(Error::Domain(_)) => train,
                Ok(_) => synth::synthesize(&train, &plan)?,
                Err(e) => return Err(e),
            };
            Ok((train, test))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerformanceRow {
    pub alpha: f64,
    pub kind: ClassifierKind,
    pub repeat: usize,
    pub tpr: f64,
    pub tnr: f64,
    pub g_mean: f64,
    pub oa: f64,
    pub auc: f64,
    /// Synthetic rows that ended up in the test split.
    #[serde(skip)]
    pub test_synthetic: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
    /// Standard error of the mean, `sd / sqrt(n)`.
    pub se: f64,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> MeanSd {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MeanSd {
            mean,
            sd,
            se: sd / n.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub alpha: f64,
    pub kind: ClassifierKind,
    pub repeats: usize,
    pub tpr: MeanSd,
    pub tnr: MeanSd,
    pub g_mean: MeanSd,
    pub oa: MeanSd,
    pub auc: MeanSd,
}

/// Test-set scores pooled over repeats for one (alpha, classifier).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScorePool {
    pub scores: Vec<f64>,
    pub truth: Vec<Label>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceTable {
    pub rows: Vec<PerformanceRow>,
    pub aggregates: Vec<Aggregate>,
    /// Keyed by (alpha index, classifier).
    pub pools: BTreeMap<(usize, ClassifierKind), ScorePool>,
}

impl PerformanceTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,kind,repeat,tpr,tnr,gmean,oa,auc\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.alpha, r.kind, r.repeat, r.tpr, r.tnr, r.g_mean, r.oa, r.auc
            ));
        }
        out
    }

    pub fn aggregate(&self, alpha: f64, kind: ClassifierKind) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.alpha == alpha && a.kind == kind)
    }
}

struct CellOutcome {
    row: PerformanceRow,
    scores: Vec<f64>,
    truth: Vec<Label>,
}

fn run_cell(
    table: &FeatureTable,
    cfg: &ExperimentConfig,
    a: usize,
    kind: ClassifierKind,
    r: usize,
) -> Result<CellOutcome> {
    let alpha = cfg.alphas[a];
    let seeds = CellSeeds::derive(cfg.seed, a, kind, r);
    let (train, test) = holdout_cell(
        table,
        alpha,
        cfg.method,
        cfg.k_neighbors,
        cfg.mode,
        cfg.train_fraction,
        seeds,
    )?;
    let model = learn::train(kind, &train, &cfg.hyper, seeds.training)?;
    let mut scores = Vec::with_capacity(test.len());
    let mut truth = Vec::with_capacity(test.len());
    for row in test.rows() {
        scores.push(model.decision_score(&row.features)?);
        truth.push(row.label);
    }
    let predictions: Vec<Label> = scores.iter().map(|&s| learn::label_from_score(s)).collect();
    let c = confusion(&predictions, &truth)?;
    Ok(CellOutcome {
        row: PerformanceRow {
            alpha,
            kind,
            repeat: r,
            tpr: c.tpr()?,
            tnr: c.tnr()?,
            g_mean: g_mean(&c)?,
            oa: overall_accuracy(&c)?,
            auc: auc(&scores, &truth)?,
            test_synthetic: test.n_synthetic(),
        },
        scores,
        truth,
    })
}

/// Evaluate every (alpha, classifier, repeat) cell. Cells run in parallel;
/// rows come back ordered by alpha, then classifier (as listed), then repeat.
pub fn repeated_experiment(
    table: &FeatureTable,
    cfg: &ExperimentConfig,
) -> Result<PerformanceTable> {
    if cfg.repeats == 0 {
        return Err(Error::config("repeats must be >= 1"));
    }
    if cfg.alphas.is_empty() || cfg.kinds.is_empty() {
        return Err(Error::config("need at least one alpha and one classifier"));
    }
    let cells: Vec<(usize, ClassifierKind, usize)> = (0..cfg.alphas.len())
        .flat_map(|a| {
            cfg.kinds
                .iter()
                .flat_map(move |&k| (0..cfg.repeats).map(move |r| (a, k, r)))
        })
        .collect();
    let outcomes: Vec<CellOutcome> = cells
        .par_iter()
        .map(|&(a, k, r)| run_cell(table, cfg, a, k, r))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(outcomes.len());
    let mut pools: BTreeMap<(usize, ClassifierKind), ScorePool> = BTreeMap::new();
    for ((a, k, _), out) in cells.iter().zip(outcomes) {
        let pool = pools.entry((*a, *k)).or_default();
        pool.scores.extend(out.scores);
        pool.truth.extend(out.truth);
        rows.push(out.row);
    }
    let aggregates = rows
        .chunks(cfg.repeats)
        .map(|chunk| {
            let col = |f: fn(&PerformanceRow) -> f64| {
                MeanSd::of(&chunk.iter().map(f).collect::<Vec<_>>())
            };
            Aggregate {
                alpha: chunk[0].alpha,
                kind: chunk[0].kind,
                repeats: chunk.len(),
                tpr: col(|r| r.tpr),
                tnr: col(|r| r.tnr),
                g_mean: col(|r| r.g_mean),
                oa: col(|r| r.oa),
                auc: col(|r| r.auc),
            }
        })
        .collect();
    Ok(PerformanceTable {
        rows,
        aggregates,
        pools,
    })
}

/// ROC points as CSV (`threshold,fpr,tpr`).
pub fn roc_to_csv(points: &[RocPoint]) -> String {
    let mut out = String::from("threshold,fpr,tpr\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.threshold, p.fpr, p.tpr));
    }
    out
}
