//! Tidy CSV results and run manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::SweepResult;

pub const CSV_HEADER: &str = "method,axis_name,axis_value,metric,mean,stderr,trials";

/// Record of one run: what produced the outputs and where they are.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: Value,
    /// SHA-256 of the compact JSON encoding of `config`.
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub timestamp: u64,
    pub outputs: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0))
}

impl RunManifest {
    pub fn new(config: &impl Serialize, seed: u64, outputs: &[PathBuf]) -> Result<Self> {
        let config = serde_json::to_value(config)?;
        Ok(Self {
            config_hash: sha256_hex(serde_json::to_string(&config)?.as_bytes()),
            config,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: timestamp(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        })
    }

    /// True when `config_hash` matches the stored config.
    pub fn hash_matches(&self) -> bool {
        serde_json::to_string(&self.config)
            .map(|s| sha256_hex(s.as_bytes()) == self.config_hash)
            .unwrap_or(false)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Files written by [`emit_results`] for `prefix`: the CSV, then the manifest.
pub fn planned_outputs(prefix: impl AsRef<Path>) -> [PathBuf; 2] {
    let prefix = prefix.as_ref();
    [with_suffix(prefix, ".csv"), with_suffix(prefix, ".manifest.json")]
}

/// Tidy CSV encoding of a sweep, numbers to 17 significant digits.
pub fn results_csv(result: &SweepResult) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for pt in &result.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.16e},{:.16e},{}",
            pt.method, result.axis_name, pt.axis_value, pt.metric, pt.mean, pt.stderr, pt.trials
        );
    }
    out
}

/// Writes `<prefix>.csv` and `<prefix>.manifest.json`; returns both paths.
pub fn emit_results(result: &SweepResult, config: &impl Serialize, prefix: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let [csv, manifest] = planned_outputs(prefix);
    std::fs::write(&csv, results_csv(result))
        .map_err(|e| Error::Format(format!("cannot write {}: {e}", csv.display())))?;
    let outputs = vec![csv, manifest.clone()];
    RunManifest::new(config, result.seed, &outputs)?.write(&manifest)?;
    Ok(outputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{Method, Metric, SweepPoint};

    fn result() -> SweepResult {
        SweepResult {
            axis_name: "n".into(),
            axis: vec![5],
            trials: 3,
            seed: 9,
            points: vec![
                SweepPoint {
                    method: Method::LowRank,
                    axis_value: 5,
                    metric: Metric::Rho,
                    mean: 0.1 + 0.2,
                    stderr: 1.0 / 3.0,
                    trials: 3,
                    values: vec![],
                },
                SweepPoint {
                    method: Method::Kron,
                    axis_value: 5,
                    metric: Metric::Auc,
                    mean: 0.9,
                    stderr: 1e-300,
                    trials: 3,
                    values: vec![],
                },
            ],
        }
    }

    #[test]
    fn csv_parses_back_exactly() {
        let csv = results_csv(&result());
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0][0], "lr");
        assert_eq!(rows[0][3], "rho");
        assert_eq!(rows[0][4].parse::<f64>().unwrap(), 0.1 + 0.2);
        assert_eq!(rows[0][5].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(rows[1][5].parse::<f64>().unwrap(), 1e-300);
        assert_eq!(rows[1][6], "3");
    }

    #[test]
    fn emit_writes_listed_files() {
        let dir = tempfile::tempdir().unwrap();
        let prefix = dir.path().join("run");
        let cfg = crate::sim::ScenarioConfig::new(2, 3);
        let files = emit_results(&result(), &cfg, &prefix).unwrap();
        assert_eq!(files.to_vec(), planned_outputs(&prefix).to_vec());
        let m = RunManifest::read(&files[1]).unwrap();
        assert!(m.hash_matches());
        assert_eq!(m.seed, 9);
        assert_eq!(m.outputs.len(), 2);
        assert!(files.iter().all(|f| f.exists()));
        let first = std::fs::read(&files[0]).unwrap();
        emit_results(&result(), &cfg, &prefix).unwrap();
        assert_eq!(first, std::fs::read(&files[0]).unwrap());
    }

    #[test]
    fn unwritable_prefix_errors() {
        let cfg = crate::sim::ScenarioConfig::new(2, 3);
        assert!(emit_results(&result(), &cfg, "/nonexistent-dir/x/run").is_err());
    }
}
