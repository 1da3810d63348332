//! Append-only experiment metrics: one JSON object per line, schema
//! versioned, deterministic byte-for-byte across reruns. Wall-clock timings
//! go to a separate sidecar file so the metrics stream stays reproducible.

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const METRICS_SCHEMA: u32 = 1;

/// One metrics line. `values` keys are sorted, so serialization is stable.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricsRecord {
    pub schema: u32,
    pub config: String,
    pub seed: u64,
    pub stage: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arm: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub round: Option<usize>,
    pub values: BTreeMap<String, f64>,
}

impl MetricsRecord {
    pub fn new(config: &str, seed: u64, stage: &str) -> Self {
        MetricsRecord {
            schema: METRICS_SCHEMA,
            config: config.to_string(),
            seed,
            stage: stage.to_string(),
            arm: None,
            round: None,
            values: BTreeMap::new(),
        }
    }

    pub fn arm(mut self, arm: &str) -> Self {
        self.arm = Some(arm.to_string());
        self
    }

    pub fn round(mut self, round: usize) -> Self {
        self.round = Some(round);
        self
    }

    pub fn value(mut self, key: &str, v: f64) -> Self {
        self.values.insert(key.to_string(), v);
        self
    }

    /// Validate invariants before writing (accuracies must be in [0, 1]).
    pub fn check(&self) -> Result<()> {
        for (k, v) in &self.values {
            if k.contains("acc") && !(0.0..=1.0).contains(v) {
                return Err(Error::invalid(format!("metric {k}={v} outside [0,1]")));
            }
            if !v.is_finite() {
                return Err(Error::invalid(format!("metric {k}={v} not finite")));
            }
        }
        Ok(())
    }
}

/// Append-only writer for a seed's metrics stream plus its timing sidecar.
pub struct MetricsWriter {
    metrics_path: PathBuf,
    timings_path: PathBuf,
    pub records: Vec<MetricsRecord>,
}

impl MetricsWriter {
    /// Truncates both files; each run rewrites its seed directory's streams.
    pub fn create(dir: &Path) -> Result<Self> {
        let metrics_path = dir.join("metrics.jsonl");
        let timings_path = dir.join("timings.jsonl");
        std::fs::write(&metrics_path, "").map_err(|e| Error::io(&metrics_path, e))?;
        std::fs::write(&timings_path, "").map_err(|e| Error::io(&timings_path, e))?;
        Ok(MetricsWriter {
            metrics_path,
            timings_path,
            records: Vec::new(),
        })
    }

    pub fn append(&mut self, rec: MetricsRecord) -> Result<()> {
        rec.check()?;
        let line = serde_json::to_string(&rec)?;
        let mut f = std::fs::OpenOptions::new()
            .append(true)
            .open(&self.metrics_path)
            .map_err(|e| Error::io(&self.metrics_path, e))?;
        writeln!(f, "{line}").map_err(|e| Error::io(&self.metrics_path, e))?;
        self.records.push(rec);
        Ok(())
    }

    /// Wall-clock timing for a stage; lives outside the deterministic stream.
    pub fn timing(&self, stage: &str, wall_ms: u128) -> Result<()> {
        let mut f = std::fs::OpenOptions::new()
            .append(true)
            .open(&self.timings_path)
            .map_err(|e| Error::io(&self.timings_path, e))?;
        writeln!(f, "{{\"stage\":\"{stage}\",\"wall_ms\":{wall_ms}}}")
            .map_err(|e| Error::io(&self.timings_path, e))
    }
}

/// Read a metrics stream back.
pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in text.lines() {
        if line.is_empty() {
            continue;
        }
        let rec: MetricsRecord = serde_json::from_str(line)?;
        if rec.schema != METRICS_SCHEMA {
            return Err(Error::artifact(
                path,
                format!("unsupported metrics schema {}", rec.schema),
            ));
        }
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let write = |d: &Path| {
            let mut w = MetricsWriter::create(d).unwrap();
            w.append(
                MetricsRecord::new("abc123", 7, "baseline")
                    .round(0)
                    .value("word_acc_source", 0.91)
                    .value("word_acc_target", 0.4),
            )
            .unwrap();
            w.append(
                MetricsRecord::new("abc123", 7, "strda")
                    .arm("strda")
                    .round(3)
                    .value("m", 0.77),
            )
            .unwrap();
        };
        write(dir.path());
        let bytes1 = std::fs::read(dir.path().join("metrics.jsonl")).unwrap();
        let recs = read_metrics(&dir.path().join("metrics.jsonl")).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].arm.as_deref(), Some("strda"));
        // Rewriting produces identical bytes.
        write(dir.path());
        let bytes2 = std::fs::read(dir.path().join("metrics.jsonl")).unwrap();
        assert_eq!(bytes1, bytes2);
    }

    #[test]
    fn rejects_out_of_range_accuracy() {
        let rec = MetricsRecord::new("h", 1, "x").value("word_acc_target", 1.5);
        assert!(rec.check().is_err());
    }
}
