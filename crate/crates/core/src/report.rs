//! Trace and summary emission: CSV with one row per iteration record, a JSON
//! summary carrying the calibration constants, and atomic file writes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adaptive::IterationRecord;
use crate::harness::{ExperimentResult, RunResult};
use crate::{Error, Result};

/// CSV row schema: `iter,algorithm,freq_hz,p_red_db,j_ext_w,j_int,w_frob`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub algorithm: String,
    pub freq_hz: f64,
    pub p_red_db: f64,
    pub j_ext_w: f64,
    pub j_int: f64,
    pub w_frob: f64,
}

impl TraceRow {
    fn from_record(run: &RunResult, rec: &IterationRecord) -> Self {
        TraceRow {
            iter: rec.iter,
            algorithm: run.algorithm.name().to_string(),
            freq_hz: run.freq_hz,
            p_red_db: rec.p_red_db,
            j_ext_w: rec.j_ext_w,
            j_int: rec.j_int,
            w_frob: rec.w_frob,
        }
    }

    pub fn into_record(self) -> IterationRecord {
        IterationRecord {
            iter: self.iter,
            p_red_db: self.p_red_db,
            j_ext_w: self.j_ext_w,
            j_int: self.j_int,
            w_frob: self.w_frob,
        }
    }
}

/// Serializes all run traces to CSV bytes (header always present).
pub fn trace_csv(result: &ExperimentResult) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for run in &result.runs {
        for rec in &run.trace {
            w.serialize(TraceRow::from_record(run, rec))
                .expect("csv serialization of plain floats");
        }
    }
    if result.runs.iter().all(|r| r.trace.is_empty()) {
        // header-only output for empty traces
        w.write_record(["iter", "algorithm", "freq_hz", "p_red_db", "j_ext_w", "j_int", "w_frob"])
            .expect("csv header");
        let mut bytes = w.into_inner().expect("csv buffer");
        // drop the spurious empty data line the explicit header write adds
        if bytes.ends_with(b"\n") {
            let header_end = bytes.iter().position(|&b| b == b'\n').unwrap() + 1;
            bytes.truncate(header_end);
        }
        return bytes;
    }
    w.into_inner().expect("csv buffer")
}

/// Reads rows back from CSV bytes.
pub fn parse_trace_csv(bytes: &[u8]) -> Result<Vec<TraceRow>> {
    let mut rdr = csv::Reader::from_reader(bytes);
    rdr.deserialize()
        .collect::<std::result::Result<Vec<TraceRow>, _>>()
        .map_err(|e| Error::Config(format!("trace csv parse: {e}")))
}

/// JSON summary of an experiment: calibration constants and per-run finals.
#[derive(Debug, Serialize)]
struct SummaryDoc<'a> {
    scenario: &'static str,
    selected_lambda: Option<f64>,
    operator_builds: usize,
    runs: Vec<RunSummaryDoc<'a>>,
    lambda_curve: &'a [crate::harness::LambdaPoint],
    frequency_points: &'a [crate::harness::FrequencyPoint],
    failures: &'a [(f64, String)],
}

#[derive(Debug, Serialize)]
struct RunSummaryDoc<'a> {
    algorithm: &'a str,
    freq_hz: f64,
    seed: u64,
    lambda_penal: f64,
    j_ext_hat: f64,
    budget_c: f64,
    loading_active: bool,
    final_p_red_db: f64,
    final_j_ext_w: f64,
    final_j_int: f64,
    final_w_frob: f64,
    tail_j_ext_w: f64,
    max_budget_ratio: Option<f64>,
}

pub fn summary_json(result: &ExperimentResult) -> String {
    let doc = SummaryDoc {
        scenario: result.scenario.name(),
        selected_lambda: result.selected_lambda,
        operator_builds: result.operator_builds,
        runs: result
            .runs
            .iter()
            .map(|r| RunSummaryDoc {
                algorithm: r.algorithm.name(),
                freq_hz: r.freq_hz,
                seed: r.seed,
                lambda_penal: r.lambda_penal,
                j_ext_hat: r.j_ext_hat,
                budget_c: r.budget_c,
                loading_active: r.loading_active,
                final_p_red_db: r.summary.final_p_red_db,
                final_j_ext_w: r.summary.final_j_ext_w,
                final_j_int: r.summary.final_j_int,
                final_w_frob: r.summary.final_w_frob,
                tail_j_ext_w: r.summary.tail_j_ext_w,
                max_budget_ratio: r.max_budget_ratio,
            })
            .collect(),
        lambda_curve: &result.lambda_curve,
        frequency_points: &result.frequency_points,
        failures: &result.failures,
    };
    serde_json::to_string_pretty(&doc).expect("summary serializes")
}

/// Writes bytes atomically: temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tmp: PathBuf = dir.join(format!(
        ".{}.tmp-{}",
        path.file_name().and_then(|s| s.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Emits the configured formats into `dir`; returns the files written.
pub fn emit(result: &ExperimentResult, dir: &Path, formats: &[String]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for format in formats {
        match format.as_str() {
            "csv" => {
                let path = dir.join("trace.csv");
                write_atomic(&path, &trace_csv(result))?;
                written.push(path);
            }
            "json" => {
                let path = dir.join("summary.json");
                write_atomic(&path, summary_json(result).as_bytes())?;
                written.push(path);
            }
            "svg" => {
                for (name, svg) in crate::svg::render_plots(result, false) {
                    let path = dir.join(name);
                    write_atomic(&path, svg.as_bytes())?;
                    written.push(path);
                }
            }
            other => return Err(Error::Config(format!("unknown output format '{other}'"))),
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptive::Algorithm;
    use crate::harness::{RunSummary, Scenario};

    fn tiny_result(records: usize) -> ExperimentResult {
        let trace: Vec<IterationRecord> = (0..records)
            .map(|i| IterationRecord {
                iter: i,
                p_red_db: -(i as f64) * 0.5,
                j_ext_w: 1e-6 / (i + 1) as f64,
                j_int: 1e-4,
                w_frob: 0.1 * i as f64,
            })
            .collect();
        let summary = RunSummary {
            final_p_red_db: trace.last().map_or(0.0, |r| r.p_red_db),
            final_j_ext_w: trace.last().map_or(0.0, |r| r.j_ext_w),
            final_j_int: 1e-4,
            final_w_frob: trace.last().map_or(0.0, |r| r.w_frob),
            tail_j_ext_w: trace.last().map_or(0.0, |r| r.j_ext_w),
        };
        ExperimentResult {
            scenario: Scenario::Convergence,
            runs: vec![RunResult {
                algorithm: Algorithm::Nlms,
                freq_hz: 600.0,
                seed: 42,
                lambda_penal: 0.0,
                j_ext_hat: 2e-6,
                budget_c: 1e-6,
                loading_active: false,
                summary,
                max_budget_ratio: None,
                trace,
            }],
            lambda_curve: Vec::new(),
            selected_lambda: Some(0.1),
            frequency_points: Vec::new(),
            failures: Vec::new(),
            operator_builds: 1,
        }
    }

    #[test]
    fn empty_trace_is_header_only() {
        let csv = trace_csv(&tiny_result(0));
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(
            text,
            "iter,algorithm,freq_hz,p_red_db,j_ext_w,j_int,w_frob\n"
        );
    }

    #[test]
    fn three_records_make_four_lines() {
        let csv = trace_csv(&tiny_result(3));
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("iter,algorithm,freq_hz,"));
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let result = tiny_result(5);
        let bytes = trace_csv(&result);
        let rows = parse_trace_csv(&bytes).unwrap();
        assert_eq!(rows.len(), 5);
        for (row, rec) in rows.into_iter().zip(&result.runs[0].trace) {
            assert_eq!(&row.into_record(), rec);
        }
    }

    #[test]
    fn emission_is_deterministic() {
        let a = trace_csv(&tiny_result(4));
        let b = trace_csv(&tiny_result(4));
        assert_eq!(a, b);
        assert_eq!(summary_json(&tiny_result(4)), summary_json(&tiny_result(4)));
    }

    #[test]
    fn atomic_write_creates_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("file.txt");
        write_atomic(&path, b"content").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"content");
    }
}
