//! Signal records and feature tables: text formats, validation and labelling.
//!
//! Signal files are plain CSV with one electrode channel per column. Record
//! metadata comes from leading `# key: value` comment lines, from a sidecar
//! JSON file next to the signal (`<name>.json`), or from the caller's
//! [`SignalFormat`], in increasing order of precedence.
//!
//! Feature tables are CSV with header `id,label,<feature names...>,synthetic`.
//! The `synthetic` column is optional on read (absent means all rows are real).

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gestation age (weeks) below which a delivery is preterm.
pub const PRETERM_THRESHOLD_WEEKS: f64 = 37.0;

/// Class label. `Preterm` is the positive (minority) class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Preterm,
    Term,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Preterm
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Preterm => "preterm",
            Label::Term => "term",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "preterm" => Ok(Label::Preterm),
            "term" => Ok(Label::Term),
            other => Err(format!(
                "unknown label `{other}` (expected preterm or term)"
            )),
        }
    }
}

/// Preterm iff `delivery_weeks < 37` (strict).
pub fn label_by_gestation(delivery_weeks: f64) -> Result<Label> {
    if !(delivery_weeks > 0.0) || !delivery_weeks.is_finite() {
        return Err(Error::domain(format!(
            "gestation at delivery must be a positive number of weeks, got {delivery_weeks}"
        )));
    }
    Ok(if delivery_weeks < PRETERM_THRESHOLD_WEEKS {
        Label::Preterm
    } else {
        Label::Term
    })
}

/// A multichannel EHG recording.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalRecord {
    pub record_id: String,
    pub sampling_rate: f64,
    /// One vector per electrode channel, all of equal length.
    pub channels: Vec<Vec<f64>>,
    pub gestation_at_recording: f64,
    pub gestation_at_delivery: f64,
}

impl SignalRecord {
    pub fn new(
        record_id: impl Into<String>,
        sampling_rate: f64,
        channels: Vec<Vec<f64>>,
        gestation_at_recording: f64,
        gestation_at_delivery: f64,
    ) -> Result<Self> {
        let record_id = record_id.into();
        if !(sampling_rate > 0.0) || !sampling_rate.is_finite() {
            return Err(Error::domain(format!(
                "record {record_id}: sampling rate must be positive, got {sampling_rate}"
            )));
        }
        let Some(first) = channels.first() else {
            return Err(Error::domain(format!("record {record_id}: no channels")));
        };
        let len = first.len();
        if len == 0 {
            return Err(Error::domain(format!("record {record_id}: no samples")));
        }
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::domain(format!(
                "record {record_id}: channels have unequal lengths"
            )));
        }
        if !(gestation_at_recording >= 0.0) || !(gestation_at_delivery > 0.0) {
            return Err(Error::domain(format!(
                "record {record_id}: invalid gestation metadata"
            )));
        }
        Ok(SignalRecord {
            record_id,
            sampling_rate,
            channels,
            gestation_at_recording,
            gestation_at_delivery,
        })
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn label(&self) -> Result<Label> {
        label_by_gestation(self.gestation_at_delivery)
    }
}

/// Column and metadata declaration for [`load_signal`].
///
/// Any metadata set here overrides what the file or its sidecar declares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalFormat {
    pub channels: usize,
    #[serde(default)]
    pub sampling_rate_hz: Option<f64>,
    #[serde(default)]
    pub gestation_at_recording_weeks: Option<f64>,
    #[serde(default)]
    pub gestation_at_delivery_weeks: Option<f64>,
}

impl Default for SignalFormat {
    fn default() -> Self {
        SignalFormat {
            channels: 3,
            sampling_rate_hz: None,
            gestation_at_recording_weeks: None,
            gestation_at_delivery_weeks: None,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SignalMeta {
    record_id: Option<String>,
    sampling_rate_hz: Option<f64>,
    gestation_at_recording_weeks: Option<f64>,
    gestation_at_delivery_weeks: Option<f64>,
}

impl SignalMeta {
    fn fill_from(&mut self, other: SignalMeta) {
        self.record_id = self.record_id.take().or(other.record_id);
        self.sampling_rate_hz = self.sampling_rate_hz.or(other.sampling_rate_hz);
        self.gestation_at_recording_weeks = self
            .gestation_at_recording_weeks
            .or(other.gestation_at_recording_weeks);
        self.gestation_at_delivery_weeks = self
            .gestation_at_delivery_weeks
            .or(other.gestation_at_delivery_weeks);
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn parse_real(path: &Path, line: usize, token: &str) -> Result<f64> {
    let v: f64 = token
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("non-numeric token `{}`", token.trim())))?;
    if !v.is_finite() {
        return Err(parse_err(
            path,
            line,
            format!("non-finite value `{}`", token.trim()),
        ));
    }
    Ok(v)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Load a CSV signal file with exactly `format.channels` columns per line.
pub fn load_signal(path: &Path, format: &SignalFormat) -> Result<SignalRecord> {
    if format.channels == 0 {
        return Err(Error::config("declared channel count must be at least 1"));
    }
    let text = read_text(path)?;

    let mut meta = SignalMeta::default();
    let mut channels: Vec<Vec<f64>> = vec![Vec::new(); format.channels];
    let mut in_header = true;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(comment) = line.trim_start().strip_prefix('#') {
            if in_header {
                parse_meta_line(path, lineno, comment, &mut meta)?;
            }
            continue;
        }
        in_header = false;
        let tokens: Vec<&str> = line.split(',').collect();
        if tokens.len() != format.channels {
            return Err(parse_err(
                path,
                lineno,
                format!(
                    "expected {} columns, found {}",
                    format.channels,
                    tokens.len()
                ),
            ));
        }
        for (ch, tok) in channels.iter_mut().zip(&tokens) {
            ch.push(parse_real(path, lineno, tok)?);
        }
    }

    if channels[0].is_empty() {
        return Err(Error::domain(format!("{}: no samples", path.display())));
    }

    let sidecar = path.with_extension("json");
    if sidecar.is_file() {
        let text = read_text(&sidecar)?;
        let side: SignalMeta = serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", sidecar.display())))?;
        meta.fill_from(side);
    }

    let overrides = SignalMeta {
        record_id: None,
        sampling_rate_hz: format.sampling_rate_hz,
        gestation_at_recording_weeks: format.gestation_at_recording_weeks,
        gestation_at_delivery_weeks: format.gestation_at_delivery_weeks,
    };
    let mut merged = overrides;
    merged.fill_from(meta);

    let missing =
        |what: &str| Error::config(format!("{}: missing metadata `{what}`", path.display()));
    let record_id = merged.record_id.unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let rate = merged
        .sampling_rate_hz
        .ok_or_else(|| missing("sampling_rate_hz"))?;
    let delivery = merged
        .gestation_at_delivery_weeks
        .ok_or_else(|| missing("gestation_at_delivery_weeks"))?;
    let recording = merged
        .gestation_at_recording_weeks
        .ok_or_else(|| missing("gestation_at_recording_weeks"))?;

    SignalRecord::new(record_id, rate, channels, recording, delivery)
}

fn parse_meta_line(path: &Path, lineno: usize, comment: &str, meta: &mut SignalMeta) -> Result<()> {
    let Some((key, value)) = comment.split_once(':') else {
        return Ok(());
    };
    let value = value.trim();
    match key.trim() {
        "record_id" => meta.record_id = Some(value.to_string()),
        "sampling_rate_hz" => meta.sampling_rate_hz = Some(parse_real(path, lineno, value)?),
        "gestation_at_recording_weeks" => {
            meta.gestation_at_recording_weeks = Some(parse_real(path, lineno, value)?)
        }
        "gestation_at_delivery_weeks" => {
            meta.gestation_at_delivery_weeks = Some(parse_real(path, lineno, value)?)
        }
        _ => {}
    }
    Ok(())
}

/// Write a signal record in the format read by [`load_signal`].
pub fn write_signal(record: &SignalRecord, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# record_id: {}\n", record.record_id));
    out.push_str(&format!("# sampling_rate_hz: {}\n", record.sampling_rate));
    out.push_str(&format!(
        "# gestation_at_recording_weeks: {}\n",
        record.gestation_at_recording
    ));
    out.push_str(&format!(
        "# gestation_at_delivery_weeks: {}\n",
        record.gestation_at_delivery
    ));
    for i in 0..record.len() {
        let row: Vec<String> = record.channels.iter().map(|c| c[i].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    crate::io::write_atomic(path, out.as_bytes())
}

/// One row of a [`FeatureTable`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub id: String,
    pub features: Vec<f64>,
    pub label: Label,
    pub synthetic: bool,
}

/// Labelled feature vectors; the common currency between modules.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    feature_names: Vec<String>,
    rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn new(feature_names: Vec<String>, rows: Vec<FeatureRow>) -> Result<Self> {
        if feature_names.is_empty() {
            return Err(Error::domain("feature table needs at least one feature"));
        }
        for row in &rows {
            if row.features.len() != feature_names.len() {
                return Err(Error::domain(format!(
                    "row {}: {} values for {} features",
                    row.id,
                    row.features.len(),
                    feature_names.len()
                )));
            }
            if let Some(v) = row.features.iter().find(|v| !v.is_finite()) {
                return Err(Error::domain(format!(
                    "row {}: non-finite feature value {v}",
                    row.id
                )));
            }
        }
        let table = FeatureTable {
            feature_names,
            rows,
        };
        if table.n_minus() == 0 {
            return Err(Error::domain("feature table has no term (majority) rows"));
        }
        Ok(table)
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn rows(&self) -> &[FeatureRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_plus(&self) -> usize {
        self.rows.iter().filter(|r| r.label.is_positive()).count()
    }

    pub fn n_minus(&self) -> usize {
        self.rows.len() - self.n_plus()
    }

    /// Current sample balance coefficient `n_plus / n_minus`.
    pub fn alpha(&self) -> f64 {
        self.n_plus() as f64 / self.n_minus() as f64
    }

    pub fn n_synthetic(&self) -> usize {
        self.rows.iter().filter(|r| r.synthetic).count()
    }

    /// Feature matrix (row-major) and labels.
    pub fn matrix(&self) -> (Vec<Vec<f64>>, Vec<Label>) {
        self.rows
            .iter()
            .map(|r| (r.features.clone(), r.label))
            .unzip()
    }

    /// Values of one feature column.
    pub fn column(&self, feature: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.features[feature]).collect()
    }

    /// New table with the selected rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<FeatureTable> {
        let rows = indices.iter().map(|&i| self.rows[i].clone()).collect();
        FeatureTable::new(self.feature_names.clone(), rows)
    }

    pub(crate) fn with_rows(&self, rows: Vec<FeatureRow>) -> Result<FeatureTable> {
        FeatureTable::new(self.feature_names.clone(), rows)
    }
}

/// Parse a feature table from CSV text. `origin` is used in error messages.
pub fn parse_feature_table(text: &str, origin: &Path) -> Result<FeatureTable> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());

    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(origin, 1, "empty feature table"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 3 || cols[0] != "id" || cols[1] != "label" {
        return Err(parse_err(
            origin,
            hline,
            "header must start with `id,label` followed by at least one feature",
        ));
    }
    let has_synthetic = cols.last() == Some(&"synthetic");
    let feature_end = if has_synthetic {
        cols.len() - 1
    } else {
        cols.len()
    };
    let feature_names: Vec<String> = cols[2..feature_end].iter().map(|s| s.to_string()).collect();
    if feature_names.is_empty() {
        return Err(parse_err(origin, hline, "no feature columns"));
    }

    let mut rows = Vec::new();
    for (lineno, line) in lines {
        let tokens: Vec<&str> = line.split(',').collect();
        if tokens.len() != cols.len() {
            return Err(parse_err(
                origin,
                lineno,
                format!("expected {} columns, found {}", cols.len(), tokens.len()),
            ));
        }
        let label: Label = tokens[1]
            .parse()
            .map_err(|m: String| parse_err(origin, lineno, m))?;
        let features = tokens[2..feature_end]
            .iter()
            .map(|t| parse_real(origin, lineno, t))
            .collect::<Result<Vec<_>>>()?;
        let synthetic = if has_synthetic {
            match tokens[feature_end].trim() {
                "0" => false,
                "1" => true,
                other => {
                    return Err(parse_err(
                        origin,
                        lineno,
                        format!("synthetic flag must be 0 or 1, got `{other}`"),
                    ))
                }
            }
        } else {
            false
        };
        rows.push(FeatureRow {
            id: tokens[0].trim().to_string(),
            features,
            label,
            synthetic,
        });
    }
    FeatureTable::new(feature_names, rows)
}

pub fn load_feature_table(path: &Path) -> Result<FeatureTable> {
    parse_feature_table(&read_text(path)?, path)
}

/// Serialize a table. Values use the shortest decimal form that parses back
/// to the same `f64`.
pub fn format_feature_table(table: &FeatureTable) -> Result<String> {
    let mut out = String::from("id,label");
    for name in table.feature_names() {
        out.push(',');
        out.push_str(name);
    }
    out.push_str(",synthetic\n");
    for row in table.rows() {
        if row.id.contains([',', '\n', '\r']) {
            return Err(Error::domain(format!(
                "row id `{}` cannot be written to CSV",
                row.id
            )));
        }
        out.push_str(&row.id);
        out.push(',');
        out.push_str(row.label.as_str());
        for v in &row.features {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push_str(if row.synthetic { ",1\n" } else { ",0\n" });
    }
    Ok(out)
}

pub fn write_feature_table(table: &FeatureTable, path: &Path) -> Result<()> {
    crate::io::write_atomic(path, format_feature_table(table)?.as_bytes())
}
