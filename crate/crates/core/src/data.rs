//! CSV ingestion, standardization and label partitioning for network-traffic
//! style datasets (continuous features plus a categorical label column).

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnRole {
    Continuous,
    /// Symbolic feature; dropped unless one-hot encoding is enabled.
    Categorical,
    Label,
    Drop,
}

/// Column roles keyed by zero-based column index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: BTreeMap<usize, ColumnRole>,
    /// Role of columns not listed.
    #[serde(default = "default_role")]
    pub default_role: ColumnRole,
    #[serde(default)]
    pub has_header: bool,
    #[serde(default)]
    pub one_hot: bool,
}

fn default_role() -> ColumnRole {
    ColumnRole::Drop
}

impl Schema {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    fn role(&self, col: usize) -> ColumnRole {
        self.columns.get(&col).copied().unwrap_or(self.default_role)
    }

    fn label_column(&self) -> Result<usize> {
        let labels: Vec<usize> = self
            .columns
            .iter()
            .filter(|(_, r)| **r == ColumnRole::Label)
            .map(|(c, _)| *c)
            .collect();
        match labels.as_slice() {
            [c] => Ok(*c),
            _ => Err(Error::Input(format!("schema must mark exactly one label column, found {}", labels.len()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub feature_names: Vec<String>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// n × d, row-major.
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    pub feature_names: Vec<String>,
    /// Set once the features have been standardized.
    pub stats: Option<StandardizationStats>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn label_counts(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for l in &self.labels {
            *m.entry(l.clone()).or_insert(0) += 1;
        }
        m
    }

    fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: rows.iter().map(|&i| self.features[i].clone()).collect(),
            labels: rows.iter().map(|&i| self.labels[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
            stats: self.stats.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BadRow {
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows_read: usize,
    pub bad_rows: Vec<BadRow>,
    pub label_counts: BTreeMap<String, usize>,
}

/// Bad-row fraction above which ingestion aborts.
pub const MAX_BAD_ROW_FRACTION: f64 = 0.01;

fn normalize_label(s: &str) -> String {
    s.trim().trim_end_matches('.').to_string()
}

/// Read a CSV according to `schema`. Rows that fail to parse are skipped and
/// reported; more than 1% bad rows aborts.
pub fn ingest_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<(Dataset, IngestReport)> {
    let label_col = schema.label_column()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(schema.has_header)
        .flexible(true)
        .from_path(path)?;
    let header: Option<Vec<String>> = if schema.has_header {
        Some(reader.headers()?.iter().map(|h| h.trim().to_string()).collect())
    } else {
        None
    };

    let mut records: Vec<csv::StringRecord> = Vec::new();
    let mut bad_rows = Vec::new();
    let mut width: Option<usize> = header.as_ref().map(Vec::len);
    let mut rows_read = 0;
    for (row, rec) in reader.records().enumerate() {
        rows_read += 1;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                bad_rows.push(BadRow { row, reason: e.to_string() });
                continue;
            }
        };
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            bad_rows.push(BadRow { row, reason: format!("expected {w} fields, found {}", rec.len()) });
            continue;
        }
        let bad_field = (0..rec.len()).find(|&c| {
            schema.role(c) == ColumnRole::Continuous
                && !rec[c].trim().parse::<f64>().map(f64::is_finite).unwrap_or(false)
        });
        if let Some(c) = bad_field {
            bad_rows.push(BadRow { row, reason: format!("column {c}: '{}' is not a finite number", &rec[c]) });
            continue;
        }
        records.push(rec);
    }
    if rows_read > 0 && bad_rows.len() as f64 / rows_read as f64 > MAX_BAD_ROW_FRACTION {
        let preview: Vec<String> = bad_rows.iter().take(5).map(|b| format!("row {}: {}", b.row, b.reason)).collect();
        return Err(Error::Input(format!(
            "{} of {rows_read} rows unparseable (limit {:.0}%): {}",
            bad_rows.len(),
            MAX_BAD_ROW_FRACTION * 100.0,
            preview.join("; ")
        )));
    }
    let width = width.unwrap_or(0);
    if label_col >= width && !records.is_empty() {
        return Err(Error::Input(format!("label column {label_col} out of range for {width} columns")));
    }
    let col_name = |c: usize| header.as_ref().map_or_else(|| format!("c{c}"), |h| h[c].clone());

    // (source column, one-hot value) per output feature
    let mut layout: Vec<(usize, Option<String>)> = Vec::new();
    for c in 0..width {
        match schema.role(c) {
            ColumnRole::Continuous => layout.push((c, None)),
            ColumnRole::Categorical if schema.one_hot => {
                let levels: BTreeSet<String> = records.iter().map(|r| r[c].trim().to_string()).collect();
                layout.extend(levels.into_iter().map(|v| (c, Some(v))));
            }
            _ => {}
        }
    }
    let feature_names = layout
        .iter()
        .map(|(c, v)| match v {
            None => col_name(*c),
            Some(level) => format!("{}={level}", col_name(*c)),
        })
        .collect();
    let features = records
        .iter()
        .map(|r| {
            layout
                .iter()
                .map(|(c, v)| match v {
                    None => r[*c].trim().parse::<f64>().expect("validated above"),
                    Some(level) => f64::from(u8::from(r[*c].trim() == level)),
                })
                .collect()
        })
        .collect();
    let labels: Vec<String> = records.iter().map(|r| normalize_label(&r[label_col])).collect();
    let ds = Dataset { features, labels, feature_names, stats: None };
    let report = IngestReport { rows_read, bad_rows, label_counts: ds.label_counts() };
    for b in &report.bad_rows {
        log::warn!("skipped row {}: {}", b.row, b.reason);
    }
    Ok((ds, report))
}

const MIN_SD: f64 = 1e-12;

/// Compute standardization statistics on `ds`; zero-variance features are
/// left out of the returned statistics.
pub fn fit_standardization(ds: &Dataset) -> Result<StandardizationStats> {
    if ds.is_empty() {
        return Err(Error::Input("cannot standardize an empty dataset".into()));
    }
    let n = ds.len() as f64;
    let mut stats = StandardizationStats { feature_names: vec![], mean: vec![], sd: vec![] };
    for (j, name) in ds.feature_names.iter().enumerate() {
        let mean = ds.features.iter().map(|r| r[j]).sum::<f64>() / n;
        let sd = (ds.features.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n).sqrt();
        if sd <= MIN_SD {
            log::info!("dropping zero-variance feature '{name}'");
            continue;
        }
        stats.feature_names.push(name.clone());
        stats.mean.push(mean);
        stats.sd.push(sd);
    }
    Ok(stats)
}

/// z = (x − mean) / sd. Without `stats` they are computed from `ds` (training
/// mode); otherwise the given statistics are applied (evaluation mode).
pub fn standardize(ds: &Dataset, stats: Option<&StandardizationStats>) -> Result<Dataset> {
    let stats = match stats {
        Some(s) => {
            if let Some(k) = s.sd.iter().position(|v| !(*v > MIN_SD)) {
                return Err(Error::Input(format!(
                    "feature '{}' has zero variance in the supplied statistics",
                    s.feature_names[k]
                )));
            }
            s.clone()
        }
        None => fit_standardization(ds)?,
    };
    let cols: Vec<usize> = stats
        .feature_names
        .iter()
        .map(|name| {
            ds.feature_names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::Input(format!("dataset lacks feature '{name}'")))
        })
        .collect::<Result<_>>()?;
    let features = ds
        .features
        .iter()
        .map(|r| cols.iter().enumerate().map(|(k, &c)| (r[c] - stats.mean[k]) / stats.sd[k]).collect())
        .collect();
    Ok(Dataset {
        features,
        labels: ds.labels.clone(),
        feature_names: stats.feature_names.clone(),
        stats: Some(stats),
    })
}

/// Invert [`standardize`].
pub fn unstandardize(ds: &Dataset) -> Result<Dataset> {
    let s = ds.stats.as_ref().ok_or_else(|| Error::Input("dataset is not standardized".into()))?;
    Ok(Dataset {
        features: ds
            .features
            .iter()
            .map(|r| r.iter().enumerate().map(|(k, z)| z * s.sd[k] + s.mean[k]).collect())
            .collect(),
        labels: ds.labels.clone(),
        feature_names: ds.feature_names.clone(),
        stats: None,
    })
}

/// Attack categories with at most `max_count` rows are merged into "unknown".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnknownRule {
    pub max_count: usize,
}

impl Default for UnknownRule {
    fn default() -> Self {
        Self { max_count: 100 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub null: Dataset,
    pub attacks: BTreeMap<String, Dataset>,
    pub unknown: Dataset,
}

impl Partition {
    pub fn sizes(&self) -> BTreeMap<String, usize> {
        let mut m: BTreeMap<String, usize> = self.attacks.iter().map(|(k, v)| (k.clone(), v.len())).collect();
        m.insert("unknown".into(), self.unknown.len());
        m
    }
}

/// Split by label into the null split, one split per sizeable attack, and
/// the union of small attack categories.
pub fn partition_by_label(ds: &Dataset, null_label: &str, rule: UnknownRule) -> Result<Partition> {
    let counts = ds.label_counts();
    if !counts.contains_key(null_label) {
        return Err(Error::Input(format!("null label '{null_label}' not present")));
    }
    let mut null_rows = Vec::new();
    let mut unknown_rows = Vec::new();
    let mut attack_rows: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, l) in ds.labels.iter().enumerate() {
        if l == null_label {
            null_rows.push(i);
        } else if counts[l] <= rule.max_count {
            unknown_rows.push(i);
        } else {
            attack_rows.entry(l.clone()).or_default().push(i);
        }
    }
    Ok(Partition {
        null: ds.select(&null_rows),
        attacks: attack_rows.into_iter().map(|(k, rows)| (k, ds.select(&rows))).collect(),
        unknown: ds.select(&unknown_rows),
    })
}
