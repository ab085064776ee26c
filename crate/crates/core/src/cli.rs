//! Command-line front end: `extract`, `synthesize`, `optimize`, `evaluate`
//! and `roc`. Flags override the matching config keys. Every output file is
//! written atomically and every command is deterministic given its config.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::eval::{self, CellSeeds, ExperimentConfig, Mode};
use crate::ingest::{self, FeatureRow, FeatureTable};
use crate::io::write_atomic;
use crate::learn::{self, ClassifierKind};
use crate::score::{self, OptimizeConfig};
use crate::sigfeat::{self, FEATURE_NAMES};
use crate::synth::{self, Method, SynthesisPlan};

#[derive(Debug, Parser)]
#[command(
    name = "ehg-balance",
    version,
    about = "Optimal synthetic-minority balance for imbalanced EHG classification"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_parser = ["smote", "adasyn"])]
    pub method: Option<String>,
    #[arg(long, global = true, value_parser = ["paper", "safe"])]
    pub mode: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract rms / median frequency / peak frequency / sample entropy from
    /// signal files into a feature CSV.
    Extract {
        /// Directory of signal CSVs (overrides `signals.dir`).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Over-sample a feature table to `alpha`.
    Synthesize {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Sweep the balance grid and report alpha*.
    Optimize {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Repeated hold-out evaluation over the balance grid.
    Evaluate {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Override the evaluation repeat count.
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// ROC curve of one classifier on one hold-out split at `alpha`.
    Roc {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value = "svc")]
        kind: String,
    },
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Merge the config file and flags into one validated configuration.
pub fn resolve_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(m) = &common.method {
        cfg.synthesis.method = m.parse::<Method>().map_err(Error::Config)?;
    }
    if let Some(m) = &common.mode {
        cfg.mode = m.parse::<Mode>().map_err(Error::Config)?;
    }
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    if common.threads.is_some() {
        cfg.threads = common.threads;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<()> {
    let mut cfg = resolve_config(&cli.common)?;
    match &cli.command {
        Command::Extract { input } => {
            if let Some(i) = input {
                cfg.signals.dir = Some(i.clone());
                cfg.signals.paths.clear();
            }
        }
        Command::Synthesize { input, alpha } => {
            override_input(&mut cfg, input);
            if let Some(a) = alpha {
                cfg.synthesis.alpha = *a;
            }
        }
        Command::Optimize { input } => override_input(&mut cfg, input),
        Command::Evaluate { input, repeats } => {
            override_input(&mut cfg, input);
            if let Some(r) = repeats {
                cfg.evaluate.repeats = *r;
            }
        }
        Command::Roc { input, alpha, .. } => {
            override_input(&mut cfg, input);
            if let Some(a) = alpha {
                cfg.synthesis.alpha = *a;
            }
        }
    }
    cfg.validate()?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::Internal(e.to_string()))?;

    pool.install(|| -> Result<()> {
        match &cli.command {
            Command::Extract { .. } => cmd_extract(&cfg).map(|_| ()),
            Command::Synthesize { .. } => cmd_synthesize(&cfg).map(|_| ()),
            Command::Optimize { .. } => {
                let curve = cmd_optimize(&cfg)?;
                println!("alpha_star={}", curve.alpha_star);
                Ok(())
            }
            Command::Evaluate { .. } => cmd_evaluate(&cfg).map(|_| ()),
            Command::Roc { kind, .. } => {
                let kind: ClassifierKind = kind.parse().map_err(Error::Config)?;
                let auc = cmd_roc(&cfg, kind)?;
                println!("auc={auc}");
                Ok(())
            }
        }?;
        write_run_echo(&cfg)
    })
}

/// Echo the resolved configuration next to the outputs. The output
/// directory and thread count are left out so the file does not depend on
/// either.
fn write_run_echo(cfg: &RunConfig) -> Result<()> {
    let mut value = serde_json::to_value(cfg).map_err(|e| Error::Internal(e.to_string()))?;
    if let Some(obj) = value.as_object_mut() {
        obj.remove("out");
        obj.remove("threads");
    }
    write_json(&cfg.out.join("run.json"), &value)
}

fn override_input(cfg: &mut RunConfig, input: &Option<PathBuf>) {
    if let Some(i) = input {
        cfg.features_csv = Some(i.clone());
    }
}

fn load_features(cfg: &RunConfig) -> Result<FeatureTable> {
    let path = cfg
        .features_csv
        .clone()
        .ok_or_else(|| Error::config("no feature table given (features_csv or --input)"))?;
    ingest::load_feature_table(&path)
}

fn signal_paths(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    if !cfg.signals.paths.is_empty() {
        return Ok(cfg.signals.paths.clone());
    }
    let dir = cfg.signals.dir.as_ref().ok_or_else(|| {
        Error::config("no signal input given (signals.dir, signals.paths or --input)")
    })?;
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::config(format!(
            "no .csv signal files in {}",
            dir.display()
        )));
    }
    Ok(paths)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Extract features from every signal file; any failure aborts before
/// anything is written.
pub fn cmd_extract(cfg: &RunConfig) -> Result<PathBuf> {
    let paths = signal_paths(cfg)?;
    let rows: Vec<FeatureRow> = paths
        .par_iter()
        .map(|p| {
            let named = |e: Error| match e {
                Error::Domain(m) => Error::Domain(format!("{}: {m}", p.display())),
                Error::Config(m) => Error::Config(format!("{}: {m}", p.display())),
                other => other,
            };
            let rec = ingest::load_signal(p, &cfg.signals.format).map_err(named)?;
            let fv = sigfeat::extract_features(&rec, &cfg.features).map_err(named)?;
            let label = rec.label().map_err(named)?;
            Ok(FeatureRow {
                id: rec.record_id,
                features: fv.to_vec(),
                label,
                synthetic: false,
            })
        })
        .collect::<Result<_>>()?;
    let table = FeatureTable::new(FEATURE_NAMES.iter().map(|s| s.to_string()).collect(), rows)?;
    let out = cfg.out.join("features.csv");
    ingest::write_feature_table(&table, &out)?;
    Ok(out)
}

pub fn cmd_synthesize(cfg: &RunConfig) -> Result<PathBuf> {
    let table = load_features(cfg)?;
    let plan = SynthesisPlan::new(
        cfg.synthesis.method,
        cfg.synthesis.alpha,
        cfg.synthesis_seed(),
    )
    .with_k(cfg.synthesis.k);
    let out_table = synth::synthesize(&table, &plan)?;
    let out = cfg.out.join("synthesized.csv");
    ingest::write_feature_table(&out_table, &out)?;
    Ok(out)
}

fn grid_for(cfg: &RunConfig, table: &FeatureTable) -> Vec<f64> {
    cfg.alphas
        .clone()
        .unwrap_or_else(|| score::default_grid(table.alpha()))
}

fn optimize_config(cfg: &RunConfig, grid: Vec<f64>) -> OptimizeConfig {
    OptimizeConfig {
        method: cfg.synthesis.method,
        grid,
        repeats: cfg.optimize.repeats,
        seed: cfg.seed,
        k_neighbors: cfg.synthesis.k,
        forest: cfg.optimize.forest.clone(),
        steepness: cfg.optimize.steepness,
    }
}

/// Writes `alpha_curve.csv` and `alpha_summary.json`.
pub fn cmd_optimize(cfg: &RunConfig) -> Result<score::AlphaCurve> {
    let table = load_features(cfg)?;
    let grid = grid_for(cfg, &table);
    score::check_feasible_grid(&table, &grid)?;
    let curve = score::optimize_alpha(&table, &optimize_config(cfg, grid))?;
    write_atomic(&cfg.out.join("alpha_curve.csv"), curve.to_csv().as_bytes())?;
    let star = curve.point_at_star();
    write_json(
        &cfg.out.join("alpha_summary.json"),
        &json!({
            "alpha_star": curve.alpha_star,
            "method": cfg.synthesis.method.as_str(),
            "seed": cfg.seed,
            "repeats": cfg.optimize.repeats,
            "alpha0": curve.envelope.alpha0(),
            "alpha_bar0": curve.envelope.alpha_bar0(),
            "steepness": curve.envelope.k(),
            "F_e_max": star.f_e,
            "F_score_at_star": star.f_score,
        }),
    )?;
    Ok(curve)
}

fn alpha_key(alpha: f64) -> String {
    format!("{alpha:.4}")
}

/// Writes `performance.csv`, `performance_summary.json` and one ROC CSV per
/// (alpha, classifier) under `roc/`.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<eval::PerformanceTable> {
    let table = load_features(cfg)?;
    let alpha0 = table.alpha();
    let grid = grid_for(cfg, &table);
    score::check_feasible_grid(&table, &grid)?;
    let alpha_star = match cfg.evaluate.alpha_star {
        Some(a) => a,
        None => score::optimize_alpha(&table, &optimize_config(cfg, grid.clone()))?.alpha_star,
    };

    // Always evaluate alpha0, 1.0 and alpha* alongside the grid.
    let mut alphas = grid;
    for extra in [alpha0, 1.0, alpha_star] {
        if !alphas.contains(&extra) {
            alphas.push(extra);
        }
    }
    alphas.sort_by(f64::total_cmp);
    score::check_feasible_grid(&table, &alphas)?;

    let mut ecfg = ExperimentConfig::new(
        alphas.clone(),
        cfg.synthesis.method,
        cfg.classifiers.clone(),
        cfg.evaluate.repeats,
        cfg.seed,
    );
    ecfg.mode = cfg.mode;
    ecfg.train_fraction = cfg.evaluate.train_fraction;
    ecfg.k_neighbors = cfg.synthesis.k;
    ecfg.hyper = cfg.classifier.clone();
    let perf = eval::repeated_experiment(&table, &ecfg)?;

    write_atomic(&cfg.out.join("performance.csv"), perf.to_csv().as_bytes())?;
    for ((a, kind), pool) in &perf.pools {
        let roc = eval::roc_curve(&pool.scores, &pool.truth)?;
        let name = format!("roc_alpha{}_{}.csv", alpha_key(alphas[*a]), kind);
        write_atomic(
            &cfg.out.join("roc").join(name),
            eval::roc_to_csv(&roc).as_bytes(),
        )?;
    }

    let metrics = |alpha: f64, kind: ClassifierKind| {
        perf.aggregate(alpha, kind).map(|a| {
            json!({"alpha": alpha, "oa": a.oa, "gmean": a.g_mean, "auc": a.auc, "tpr": a.tpr, "tnr": a.tnr})
        })
    };
    let mut summary_table = BTreeMap::new();
    for &kind in &cfg.classifiers {
        summary_table.insert(
            kind.as_str().to_string(),
            json!({"alpha_1.0": metrics(1.0, kind), "alpha_star": metrics(alpha_star, kind)}),
        );
    }
    write_json(
        &cfg.out.join("performance_summary.json"),
        &json!({
            "seed": cfg.seed,
            "method": cfg.synthesis.method.as_str(),
            "mode": cfg.mode.as_str(),
            "repeats": cfg.evaluate.repeats,
            "train_fraction": cfg.evaluate.train_fraction,
            "alpha0": alpha0,
            "alpha_star": alpha_star,
            "alphas": alphas,
            "table": summary_table,
            "aggregates": perf.aggregates,
        }),
    )?;
    Ok(perf)
}

/// Train `kind` on one hold-out split at `synthesis.alpha` and write the
/// test-set ROC to `roc.csv`. Returns the AUC.
pub fn cmd_roc(cfg: &RunConfig, kind: ClassifierKind) -> Result<f64> {
    let table = load_features(cfg)?;
    let alpha = cfg.synthesis.alpha;
    score::check_feasible_grid(&table, &[alpha])?;
    let seeds = CellSeeds::derive(cfg.seed, 0, kind, 0);
    let (train, test) = eval::holdout_cell(
        &table,
        alpha,
        cfg.synthesis.method,
        cfg.synthesis.k,
        cfg.mode,
        cfg.evaluate.train_fraction,
        seeds,
    )?;
    let model = learn::train(kind, &train, &cfg.classifier, seeds.training)?;
    let scores = test
        .rows()
        .iter()
        .map(|r| model.decision_score(&r.features))
        .collect::<Result<Vec<_>>>()?;
    let truth: Vec<_> = test.rows().iter().map(|r| r.label).collect();
    let roc = eval::roc_curve(&scores, &truth)?;
    write_atomic(&cfg.out.join("roc.csv"), eval::roc_to_csv(&roc).as_bytes())?;
    eval::auc(&scores, &truth)
}
