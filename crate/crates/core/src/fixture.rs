//! Bundled stand-in data: a Gaussian feature table with the class sizes of
//! the term/preterm EHG corpus, and small synthetic signal records.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::ingest::{FeatureRow, FeatureTable, Label, SignalRecord};
use crate::seed;
use crate::sigfeat::FEATURE_NAMES;

pub const FIXTURE_SEED: u64 = 20_190_815;
pub const FIXTURE_N_PLUS: usize = 38;
pub const FIXTURE_N_MINUS: usize = 262;

/// Per feature (in [`FEATURE_NAMES`] order): term mean, within-class SD and
/// the preterm mean shift in SD units. Separability decays
/// fpeak > fmed > rms > esamp.
const GAUSSIAN_SPEC: [(f64, f64, f64); 4] = [
    (0.020, 0.006, 0.5),
    (0.380, 0.060, 0.8),
    (0.300, 0.080, 1.2),
    (0.750, 0.120, -0.25),
];

/// 38 preterm and 262 term rows drawn from independent Gaussians. Preterm
/// rows are spread through the table rather than grouped at the end.
pub fn gaussian_table(seed: u64) -> FeatureTable {
    let mut rng = seed::rng(seed);
    let total = FIXTURE_N_PLUS + FIXTURE_N_MINUS;
    let mut rows = Vec::with_capacity(total);
    for i in 0..total {
        // Every eighth row up to the preterm quota.
        let preterm = i % 8 == 3 && i / 8 < FIXTURE_N_PLUS;
        let features = GAUSSIAN_SPEC
            .iter()
            .map(|&(mean, sd, shift)| {
                let mu = if preterm { mean + shift * sd } else { mean };
                Normal::new(mu, sd).expect("positive sd").sample(&mut rng)
            })
            .collect();
        rows.push(FeatureRow {
            id: format!("g{i:03}"),
            features,
            label: if preterm { Label::Preterm } else { Label::Term },
            synthetic: false,
        });
    }
    FeatureTable::new(FEATURE_NAMES.iter().map(|s| s.to_string()).collect(), rows)
        .expect("fixture is well formed")
}

/// A synthetic three-channel uterine recording at 20 Hz: a few sinusoidal
/// bursts in the 0.3-3 Hz band on top of white noise and a DC offset.
pub fn synthetic_record(
    id: &str,
    seed: u64,
    dominant_hz: f64,
    delivery_weeks: f64,
    seconds: f64,
) -> SignalRecord {
    let fs = 20.0;
    let n = (seconds * fs) as usize;
    let mut rng = seed::rng(seed);
    let noise = Normal::new(0.0, 0.02).expect("positive sd");
    let channels = (0..3)
        .map(|c| {
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let amp = 0.1 * (1.0 + 0.25 * c as f64);
            (0..n)
                .map(|i| {
                    let t = i as f64 / fs;
                    let burst = 0.5 + 0.5 * (std::f64::consts::TAU * t / 40.0).sin();
                    0.5 + amp * burst * (std::f64::consts::TAU * dominant_hz * t + phase).sin()
                        + 0.3 * amp * (std::f64::consts::TAU * 2.2 * t).sin()
                        + noise.sample(&mut rng)
                })
                .collect()
        })
        .collect();
    SignalRecord::new(id, fs, channels, 30.0, delivery_weeks).expect("fixture is well formed")
}

/// The bundled signal corpus: (record id, seed, dominant Hz, delivery weeks).
pub const SIGNAL_CORPUS: [(&str, u64, f64, f64); 4] = [
    ("tpehg_s001", 1, 0.45, 39.1),
    ("tpehg_s002", 2, 0.55, 40.3),
    ("tpehg_s003", 3, 0.90, 34.6),
    ("tpehg_s004", 4, 0.50, 38.0),
];
