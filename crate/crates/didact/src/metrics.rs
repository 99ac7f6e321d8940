//! Trace aggregation into accuracy-vs-budget curves and the on-disk results
//! layout.
//!
//! Results land in `runs/<config-hash>/`: `traces.jsonl` (one trace per
//! line), `curves.csv` (`policy,budget,mean,std,n_seeds`), and
//! `config.snapshot` (the canonical config the run can be replayed from).
//! Accuracy is recomputed from exact correct/N counts before any floating
//! aggregation, and curves rebuild bit-identically from persisted traces.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::Trace;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("results i/o failed for {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cell ({arm}, {x}) mixes different test sets across seeds")]
    HeterogeneousCell { arm: String, x: f64 },
    #[error("trace line {line} is malformed: {detail}")]
    MalformedTrace { line: usize, detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Budget fraction for single-round runs, round index for multi-round.
    pub budget: f64,
    pub mean_accuracy: f64,
    /// Population standard deviation across seeds; 0 for a single seed.
    pub std: f64,
    pub n_seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCurve {
    pub arm: String,
    pub points: Vec<CurvePoint>,
}

/// Collapses traces into one curve per arm: mean and population standard
/// deviation of accuracy across seeds at every budget (or round).
/// Permutation-invariant in the input traces.
pub fn aggregate(traces: &[Trace]) -> Result<Vec<AccuracyCurve>, MetricsError> {
    // Budgets and rounds are non-negative, so the bit pattern orders them.
    let mut cells: BTreeMap<(String, u64), Vec<&Trace>> = BTreeMap::new();
    for trace in traces {
        let x = trace.budget.unwrap_or_else(|| trace.round.unwrap_or(0) as f64);
        cells.entry((trace.arm.clone(), x.to_bits())).or_default().push(trace);
    }

    let mut curves: BTreeMap<String, Vec<CurvePoint>> = BTreeMap::new();
    for ((arm, bits), mut cell) in cells {
        let x = f64::from_bits(bits);
        cell.sort_by_key(|t| t.seed);
        let reference_ids: Vec<&str> = cell[0].records.iter().map(|r| r.id.as_str()).collect();
        for trace in &cell {
            let ids: Vec<&str> = trace.records.iter().map(|r| r.id.as_str()).collect();
            if ids != reference_ids {
                return Err(MetricsError::HeterogeneousCell { arm, x });
            }
        }
        // Exact counts first; floats only at the final division.
        let accuracies: Vec<f64> = cell
            .iter()
            .map(|t| {
                let correct = t.records.iter().filter(|r| r.correct).count();
                correct as f64 / t.records.len() as f64
            })
            .collect();
        let n = accuracies.len();
        let mean = accuracies.iter().sum::<f64>() / n as f64;
        let variance = accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64;
        curves.entry(arm).or_default().push(CurvePoint {
            budget: x,
            mean_accuracy: mean,
            std: variance.sqrt(),
            n_seeds: n,
        });
    }

    Ok(curves
        .into_iter()
        .map(|(arm, points)| AccuracyCurve { arm, points })
        .collect())
}

/// Renders curves as `policy,budget,mean,std,n_seeds` CSV text. Multi-round
/// curves put the demonstration mode in the policy column and the round
/// index in the budget column.
pub fn curves_to_csv(curves: &[AccuracyCurve]) -> String {
    let mut out = String::from("policy,budget,mean,std,n_seeds\n");
    for curve in curves {
        for point in &curve.points {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                curve.arm, point.budget, point.mean_accuracy, point.std, point.n_seeds
            ));
        }
    }
    out
}

/// The directory one run writes into.
pub fn run_dir(out_root: &Path, config_hash: &str) -> PathBuf {
    out_root.join("runs").join(config_hash)
}

/// Persists a completed run: traces, aggregated curves, and the config
/// snapshot that reproduces it.
pub fn write_run(
    out_root: &Path,
    config_hash: &str,
    config_snapshot: &str,
    traces: &[Trace],
) -> Result<PathBuf, MetricsError> {
    let dir = run_dir(out_root, config_hash);
    let io_err = |path: &Path, source: std::io::Error| MetricsError::Io {
        path: path.display().to_string(),
        source,
    };
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;

    let traces_path = dir.join("traces.jsonl");
    let mut buffer = Vec::new();
    for trace in traces {
        let line = serde_json::to_string(trace).expect("trace serializes");
        writeln!(buffer, "{line}").expect("in-memory write");
    }
    fs::write(&traces_path, buffer).map_err(|e| io_err(&traces_path, e))?;

    let curves_path = dir.join("curves.csv");
    let curves = aggregate(traces)?;
    fs::write(&curves_path, curves_to_csv(&curves)).map_err(|e| io_err(&curves_path, e))?;

    let snapshot_path = dir.join("config.snapshot");
    fs::write(&snapshot_path, config_snapshot).map_err(|e| io_err(&snapshot_path, e))?;
    Ok(dir)
}

/// Reloads persisted traces.
pub fn read_traces(path: &Path) -> Result<Vec<Trace>, MetricsError> {
    let text = fs::read_to_string(path).map_err(|source| MetricsError::Io {
        path: path.display().to_string(),
        source,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| MetricsError::MalformedTrace {
                line: i + 1,
                detail: e.to_string(),
            })
        })
        .collect()
}
