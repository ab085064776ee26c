//! EHG signal features: RMS, median and peak frequency of the power
//! spectrum, and sample entropy, computed on a band-pass filtered channel.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::SignalRecord;

/// Column names used for extracted features, in [`FeatureVector::to_vec`] order.
pub const FEATURE_NAMES: [&str; 4] = ["rms", "fmed", "fpeak", "esamp"];

/// One second-order IIR section, transposed direct form II. `a[0]` is 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        let num = self.b[0] + z_inv * self.b[1] + z2 * self.b[2];
        let den = self.a[0] + z_inv * self.a[1] + z2 * self.a[2];
        num / den
    }

    /// Steady-state internal state for a unit step input.
    fn step_state(&self) -> [f64; 2] {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        let gain = (b0 + b1 + b2) / (1.0 + a1 + a2);
        let z2 = b2 - a2 * gain;
        [b1 - a1 * gain + z2, z2]
    }

    fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }
}

/// Digital Butterworth band-pass filter as cascaded biquads.
#[derive(Debug, Clone, PartialEq)]
pub struct BandPass {
    pub sections: Vec<Biquad>,
    pub fs: f64,
}

impl BandPass {
    /// Design a band-pass of total order `order` (even, at least 2) by the
    /// bilinear transform with pre-warped band edges.
    pub fn butterworth(order: usize, low: f64, high: f64, fs: f64) -> Result<Self> {
        if order < 2 || !order.is_multiple_of(2) {
            return Err(Error::domain(format!(
                "filter order must be even and >= 2, got {order}"
            )));
        }
        if !(fs > 0.0) || !(low > 0.0) || !(low < high) || !(high < fs / 2.0) {
            return Err(Error::domain(format!(
                "band {low}..{high} Hz must satisfy 0 < low < high < fs/2 = {}",
                fs / 2.0
            )));
        }
        let n = order / 2;
        let two_fs = 2.0 * fs;
        let w1 = two_fs * (std::f64::consts::PI * low / fs).tan();
        let w2 = two_fs * (std::f64::consts::PI * high / fs).tan();
        let bw = w2 - w1;
        let w0 = (w1 * w2).sqrt();

        let mut poles = Vec::with_capacity(2 * n);
        for k in 0..n {
            let theta = std::f64::consts::PI * (2 * k + 1 + n) as f64 / (2 * n) as f64;
            let proto = Complex64::from_polar(1.0, theta);
            let half = proto * (bw / 2.0);
            let root = (half * half - w0 * w0).sqrt();
            for s in [half + root, half - root] {
                poles.push((two_fs + s) / (two_fs - s));
            }
        }

        let eps = 1e-12;
        let mut sections = Vec::with_capacity(n);
        let mut real: Vec<f64> = Vec::new();
        for p in &poles {
            if p.im > eps {
                sections.push(Biquad {
                    b: [1.0, 0.0, -1.0],
                    a: [1.0, -2.0 * p.re, p.norm_sqr()],
                });
            } else if p.im.abs() <= eps {
                real.push(p.re);
            }
        }
        real.sort_by(f64::total_cmp);
        for pair in real.chunks(2) {
            let (r1, r2) = (pair[0], pair[1]);
            sections.push(Biquad {
                b: [1.0, 0.0, -1.0],
                a: [1.0, -(r1 + r2), r1 * r2],
            });
        }
        if sections.len() != n {
            return Err(Error::Internal(format!(
                "pole pairing produced {} sections, expected {n}",
                sections.len()
            )));
        }

        let mut filter = BandPass { sections, fs };
        // Unit gain at the digital image of the analog centre frequency.
        let centre = 2.0 * (w0 / two_fs).atan() * fs / (2.0 * std::f64::consts::PI);
        let g = filter.magnitude(centre).powf(-1.0 / n as f64);
        for s in &mut filter.sections {
            for b in &mut s.b {
                *b *= g;
            }
        }
        Ok(filter)
    }

    /// |H(e^{j2πf/fs})|
    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        let omega = 2.0 * std::f64::consts::PI * freq_hz / self.fs;
        let z_inv = Complex64::from_polar(1.0, -omega);
        self.sections
            .iter()
            .map(|s| s.response(z_inv))
            .product::<Complex64>()
            .norm()
    }

    /// Causal filtering with initial state scaled to `x[0]`'s step response.
    fn run(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        let mut scale = 1.0;
        let x0 = x.first().copied().unwrap_or(0.0);
        for s in &self.sections {
            let [z1, z2] = s.step_state();
            let mut z = [z1 * scale * x0, z2 * scale * x0];
            scale *= s.dc_gain();
            for v in y.iter_mut() {
                let input = *v;
                let out = s.b[0] * input + z[0];
                z[0] = s.b[1] * input - s.a[1] * out + z[1];
                z[1] = s.b[2] * input - s.a[2] * out;
                *v = out;
            }
        }
        y
    }

    /// Zero-phase forward-backward filtering with odd-extension padding.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>> {
        let order = 2 * self.sections.len();
        if x.len() <= 3 * order {
            return Err(Error::domain(format!(
                "signal of {} samples is too short for an order-{order} filter",
                x.len()
            )));
        }
        let pad = (3 * (order + 1)).min(x.len() - 1);
        let n = x.len();
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let mut y = self.run(&ext);
        y.reverse();
        let mut y = self.run(&y);
        y.reverse();
        Ok(y[pad..pad + n].to_vec())
    }
}

/// Zero-phase Butterworth band-pass of `signal`.
pub fn bandpass_filter(
    signal: &[f64],
    fs: f64,
    low: f64,
    high: f64,
    order: usize,
) -> Result<Vec<f64>> {
    BandPass::butterworth(order, low, high, fs)?.filtfilt(signal)
}

pub fn rms(signal: &[f64]) -> Result<f64> {
    if signal.is_empty() {
        return Err(Error::domain("rms of an empty signal"));
    }
    Ok((signal.iter().map(|v| v * v).sum::<f64>() / signal.len() as f64).sqrt())
}

/// One-sided power spectrum on a uniform frequency grid starting at 0 Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    pub df: f64,
}

impl Spectrum {
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }

    fn require_power(&self) -> Result<f64> {
        let total = self.total_power();
        if total > 0.0 && total.is_finite() {
            Ok(total)
        } else {
            Err(Error::domain("spectrum has no power"))
        }
    }
}

/// Hann-windowed periodogram of the mean-removed signal.
///
/// Scaled so that `sum(power) * df` equals the mean square of the windowed,
/// mean-removed sequence.
pub fn power_spectrum(signal: &[f64], fs: f64) -> Result<Spectrum> {
    let n = signal.len();
    if n < 8 {
        return Err(Error::domain(format!(
            "power spectrum needs >= 8 samples, got {n}"
        )));
    }
    if !(fs > 0.0) {
        return Err(Error::domain("sampling rate must be positive"));
    }
    let mean = signal.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex64> = signal
        .iter()
        .enumerate()
        .map(|(i, &v)| Complex64::new(hann(i, n) * (v - mean), 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let df = fs / n as f64;
    let bins = n / 2 + 1;
    let norm = 1.0 / (n as f64 * fs);
    let power = (0..bins)
        .map(|k| {
            let p = buf[k].norm_sqr() * norm;
            let unpaired = k == 0 || (n.is_multiple_of(2) && k == n / 2);
            if unpaired {
                p
            } else {
                2.0 * p
            }
        })
        .collect();
    let frequencies = (0..bins).map(|k| k as f64 * df).collect();
    Ok(Spectrum {
        frequencies,
        power,
        df,
    })
}

fn hann(i: usize, n: usize) -> f64 {
    0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()
}

/// Frequency at which the cumulative power first reaches half the total,
/// interpolated linearly between the crossing bin and its predecessor.
pub fn median_frequency(spectrum: &Spectrum) -> Result<f64> {
    let half = spectrum.require_power()? / 2.0;
    let mut cum = 0.0;
    for (j, &p) in spectrum.power.iter().enumerate() {
        let before = cum;
        cum += p;
        if cum >= half {
            if j == 0 {
                return Ok(spectrum.frequencies[0]);
            }
            let frac = (half - before) / p;
            let lo = spectrum.frequencies[j - 1];
            return Ok(lo + frac * (spectrum.frequencies[j] - lo));
        }
    }
    // Rounding can leave the running sum a hair below `half`.
    Ok(*spectrum.frequencies.last().unwrap())
}

/// Frequency of the maximum-power bin; ties go to the lowest frequency.
pub fn peak_frequency(spectrum: &Spectrum) -> Result<f64> {
    spectrum.require_power()?;
    let mut best = 0;
    for (j, &p) in spectrum.power.iter().enumerate() {
        if p > spectrum.power[best] {
            best = j;
        }
    }
    Ok(spectrum.frequencies[best])
}

/// Population standard deviation.
pub(crate) fn std_dev(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Template-pair counts behind sample entropy: `(b, a)` for lengths m and m+1.
///
/// Both lengths use the first `n - m` templates so the counts are comparable;
/// a pair matches when the Chebyshev distance is at most `tolerance`.
pub fn template_matches(x: &[f64], m: usize, tolerance: f64) -> (u64, u64) {
    let count = x.len() - m;
    let (mut b, mut a) = (0u64, 0u64);
    for i in 0..count {
        for j in i + 1..count {
            if (0..m).all(|k| (x[i + k] - x[j + k]).abs() <= tolerance) {
                b += 1;
                if (x[i + m] - x[j + m]).abs() <= tolerance {
                    a += 1;
                }
            }
        }
    }
    (b, a)
}

/// Sample entropy with tolerance `r` times the signal's standard deviation.
///
/// Returns `+inf` when no length-m pair matches and `ln(B)` when only the
/// length-(m+1) count is zero.
pub fn sample_entropy(signal: &[f64], m: usize, r: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::domain("sample entropy template length must be >= 1"));
    }
    if signal.len() < m + 2 {
        return Err(Error::domain(format!(
            "sample entropy with m={m} needs at least {} samples, got {}",
            m + 2,
            signal.len()
        )));
    }
    if !(r > 0.0) {
        return Err(Error::domain(format!(
            "tolerance multiplier must be positive, got {r}"
        )));
    }
    let (b, a) = template_matches(signal, m, r * std_dev(signal));
    Ok(sampen_from_counts(b, a))
}

pub(crate) fn sampen_from_counts(b: u64, a: u64) -> f64 {
    match (b, a) {
        (0, _) => f64::INFINITY,
        (b, 0) => (b as f64).ln(),
        (b, a) => -(a as f64 / b as f64).ln(),
    }
}

/// Feature-extraction settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    pub channel: usize,
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    pub filter_order: usize,
    pub sampen_m: usize,
    pub sampen_r: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            channel: 0,
            band_low_hz: 0.3,
            band_high_hz: 3.0,
            filter_order: 4,
            sampen_m: 3,
            sampen_r: 0.15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub rms: f64,
    pub f_med: f64,
    pub f_peak: f64,
    pub e_samp: f64,
}

impl FeatureVector {
    pub fn to_vec(self) -> Vec<f64> {
        vec![self.rms, self.f_med, self.f_peak, self.e_samp]
    }
}

/// Filter the configured channel, then compute all four features on it.
pub fn extract_features(record: &SignalRecord, config: &FeatureConfig) -> Result<FeatureVector> {
    let raw = record.channels.get(config.channel).ok_or_else(|| {
        Error::config(format!(
            "record {}: channel {} requested but only {} present",
            record.record_id,
            config.channel,
            record.channels.len()
        ))
    })?;
    let fs = record.sampling_rate;
    let filtered = bandpass_filter(
        raw,
        fs,
        config.band_low_hz,
        config.band_high_hz,
        config.filter_order,
    )?;
    let spectrum = power_spectrum(&filtered, fs)?;
    Ok(FeatureVector {
        rms: rms(&filtered)?,
        f_med: median_frequency(&spectrum)?,
        f_peak: peak_frequency(&spectrum)?,
        e_samp: sample_entropy(&filtered, config.sampen_m, config.sampen_r)?,
    })
}
