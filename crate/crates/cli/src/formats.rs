//! JSON input files and CSV/JSON/manifest output.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use gld_core::{Channel, DecoderMetric, Distribution, JointDistribution, SourceMetric};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct DistributionFile {
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct ChannelFile {
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct JointFile {
    pub table: Vec<Vec<f64>>,
}

/// `{"kind": "matched" | "mismatched" | "mmi" | "linear", "beta": 1.0, ...}`.
/// `mismatched` takes a decoding `channel` matrix, `linear` a `table`.
/// Source metrics use the kinds `matched`, `neg_cond_entropy` and `linear`.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct MetricFile {
    pub kind: String,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default)]
    pub channel: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub table: Option<Vec<Vec<f64>>>,
}

fn one() -> f64 {
    1.0
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn invalid(path: &Path, e: gld_core::Error) -> CliError {
    CliError::InvalidFile {
        path: path.to_path_buf(),
        source: e,
    }
}

pub fn load_distribution(path: &Path) -> Result<Distribution, CliError> {
    let f: DistributionFile = read_json(path)?;
    Distribution::new(f.probs).map_err(|e| invalid(path, e))
}

pub fn load_channel(path: &Path) -> Result<Channel, CliError> {
    let f: ChannelFile = read_json(path)?;
    Channel::new(&f.matrix).map_err(|e| invalid(path, e))
}

pub fn load_joint(path: &Path) -> Result<JointDistribution, CliError> {
    let f: JointFile = read_json(path)?;
    JointDistribution::from_rows(&f.table).map_err(|e| invalid(path, e))
}

fn required<'a>(field: &'a Option<Vec<Vec<f64>>>, name: &str, path: &Path) -> Result<&'a [Vec<f64>], CliError> {
    field
        .as_deref()
        .ok_or_else(|| CliError::Usage(format!("{}: metric kind needs a \"{name}\" field", path.display())))
}

/// Decoder metric from a file; the matched metric of `channel` when absent.
pub fn load_metric(path: Option<&Path>, channel: &Channel) -> Result<DecoderMetric, CliError> {
    let Some(path) = path else {
        return Ok(DecoderMetric::matched(channel, 1.0)?);
    };
    let f: MetricFile = read_json(path)?;
    let m = match f.kind.as_str() {
        "matched" => DecoderMetric::matched(channel, f.beta),
        "mismatched" => {
            let w = Channel::new(required(&f.channel, "channel", path)?).map_err(|e| invalid(path, e))?;
            DecoderMetric::mismatched(&w, f.beta)
        }
        "mmi" => DecoderMetric::mmi(f.beta),
        "linear" => DecoderMetric::linear(required(&f.table, "table", path)?),
        other => return Err(CliError::Usage(format!("{}: unknown decoder metric kind {other:?}", path.display()))),
    };
    m.map_err(|e| invalid(path, e))
}

/// Source metric from a file; the matched metric of `p_uv` when absent.
pub fn load_source_metric(path: Option<&Path>, p_uv: &JointDistribution) -> Result<SourceMetric, CliError> {
    let Some(path) = path else {
        return Ok(SourceMetric::matched(p_uv, 1.0)?);
    };
    let f: MetricFile = read_json(path)?;
    let m = match f.kind.as_str() {
        "matched" => SourceMetric::matched(p_uv, f.beta),
        "neg_cond_entropy" => SourceMetric::neg_cond_entropy(f.beta),
        "linear" => SourceMetric::linear(required(&f.table, "table", path)?),
        other => return Err(CliError::Usage(format!("{}: unknown source metric kind {other:?}", path.display()))),
    };
    m.map_err(|e| invalid(path, e))
}

/// `START:STOP:STEP` (inclusive of STOP up to rounding) or a comma list.
pub fn parse_rates(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("invalid rate specification {s:?}; expected START:STOP:STEP or a comma list"));
    let parts: Vec<&str> = s.split(':').collect();
    let rates: Vec<f64> = match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step): (f64, f64, f64) = (
                start.trim().parse().map_err(|_| bad())?,
                stop.trim().parse().map_err(|_| bad())?,
                step.trim().parse().map_err(|_| bad())?,
            );
            if step.is_nan() || step <= 0.0 || !start.is_finite() || !stop.is_finite() || stop < start {
                return Err(bad());
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize;
            if count > 1_000_000 {
                return Err(bad());
            }
            // Snap to 12 decimals so 0.1:0.3:0.05 yields 0.15, not 0.15000000000000002.
            (0..=count)
                .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
                .collect()
        }
        [list] => list
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?,
        _ => return Err(bad()),
    };
    if rates.is_empty() || rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(bad());
    }
    if rates.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Usage(format!("rates must be strictly increasing: {s:?}")));
    }
    Ok(rates)
}

pub fn parse_list(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| CliError::Usage(format!("invalid block length {v:?}")))
        })
        .collect()
}

/// `x` rounded to six significant digits, printed in shortest form.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float");
    format!("{rounded}")
}

pub fn joint_cell(j: &JointDistribution) -> String {
    j.table().iter().map(|&p| sig6(p)).collect::<Vec<_>>().join(";")
}

/// Header plus rows, written with the csv crate.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable output");
    fs::write(path, text + "\n").map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Everything needed to rerun a command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub verb: String,
    pub inputs: BTreeMap<String, String>,
    pub grid: Option<u32>,
    pub rates: Vec<f64>,
    pub seed: Option<u64>,
    pub output: String,
    pub units: String,
    pub tool_version: String,
    pub wall_clock_seconds: f64,
    #[serde(default)]
    pub notes: BTreeMap<String, serde_json::Value>,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    out.parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .join("MANIFEST.json")
}

/// Full-precision companion path: `out` with a `.json` extension.
pub fn json_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}
