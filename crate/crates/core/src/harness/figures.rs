//! Comma-separated figure data with a header row.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::TracePoint;
use crate::training::{EpochLog, SearchResult};

fn write_rows<W: Write, R: Serialize>(out: W, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Violation and loss per epoch.
pub fn write_training_curve<W: Write>(out: W, log: &[EpochLog]) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        epoch: usize,
        train_loss: f64,
        mean_precedence_violation: f64,
        mean_overlap_violation: f64,
        validation_error: Option<f64>,
        mean_multiplier: f64,
    }
    write_rows(
        out,
        log.iter().map(|e| Row {
            epoch: e.epoch,
            train_loss: e.train_loss,
            mean_precedence_violation: e.mean_precedence_violation,
            mean_overlap_violation: e.mean_overlap_violation,
            validation_error: e.validation_error,
            mean_multiplier: e.mean_multiplier,
        }),
    )
}

/// Incumbent makespan over time, one block of rows per run.
pub fn write_anytime_curves<W: Write>(out: W, runs: &[(u64, Vec<TracePoint>)]) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        seed: u64,
        elapsed_seconds: f64,
        makespan: u64,
        step: u64,
    }
    write_rows(
        out,
        runs.iter().flat_map(|(seed, trace)| {
            trace.iter().map(move |p| Row {
                seed: *seed,
                elapsed_seconds: p.elapsed_seconds,
                makespan: p.makespan,
                step: p.step,
            })
        }),
    )
}

/// One row per (configuration, seed, sample) with the pre-recovery violation.
pub fn write_violation_distribution<W: Write>(out: W, result: &SearchResult) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        config: usize,
        architecture: String,
        loss: String,
        alpha: f64,
        rho: f64,
        seed: u64,
        sample: usize,
        constraint_violation: f64,
        optimality_gap: f64,
    }
    write_rows(
        out,
        result.cells.iter().flat_map(|cell| {
            let c = &cell.config;
            cell.metrics.per_sample.iter().map(move |s| Row {
                config: cell.config_index,
                architecture: c.architecture.to_string(),
                loss: c.loss.to_string(),
                alpha: c.alpha,
                rho: c.effective_rho(),
                seed: c.seed,
                sample: s.index,
                constraint_violation: s.constraint_violation,
                optimality_gap: s.optimality_gap,
            })
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anytime_csv_has_header() {
        let mut buf = Vec::new();
        let trace = vec![TracePoint {
            elapsed_seconds: 0.5,
            makespan: 9,
            step: 3,
        }];
        write_anytime_curves(&mut buf, &[(1, trace)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "seed,elapsed_seconds,makespan,step\n1,0.5,9,3\n");
    }
}
