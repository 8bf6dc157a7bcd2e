//! Convergence-trace emission: JSON (full fidelity, round-trippable) and
//! CSV (one row per iteration, plot-ready).
//!
//! CSV columns, in order: t, samples_drawn, cumulative_samples, norm_b_sq,
//! residual_sq, relative_error, improvement_ratio, wall_time_s (empty when
//! not recorded), flops_mgs, flops_product, flops_gram, flops_eigen.

use super::{fmt_f64, io_err, IoError, IoResult};
use crate::engine::ConvergenceTrace;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Json,
    Csv,
}

const CSV_HEADER: &str = "t,samples_drawn,cumulative_samples,norm_b_sq,residual_sq,relative_error,improvement_ratio,wall_time_s,flops_mgs,flops_product,flops_gram,flops_eigen";

pub fn write_trace(trace: &ConvergenceTrace, path: &Path, format: TraceFormat) -> IoResult<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    match format {
        TraceFormat::Json => {
            let body = serde_json::to_string_pretty(trace).map_err(|e| IoError::Format {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            w.write_all(body.as_bytes()).map_err(|e| io_err(path, e))?;
            w.write_all(b"\n").map_err(|e| io_err(path, e))?;
        }
        TraceFormat::Csv => {
            writeln!(w, "{CSV_HEADER}").map_err(|e| io_err(path, e))?;
            for r in &trace.records {
                let wall = r.wall_time_s.map(fmt_f64).unwrap_or_default();
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    r.t,
                    r.indices.len(),
                    r.cumulative_samples,
                    fmt_f64(r.norm_b_sq),
                    fmt_f64(r.residual_sq),
                    fmt_f64(r.relative_error),
                    fmt_f64(r.improvement_ratio),
                    wall,
                    r.flops.mgs,
                    r.flops.product,
                    r.flops.gram,
                    r.flops.eigen,
                )
                .map_err(|e| io_err(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn read_trace_json(path: &Path) -> IoResult<ConvergenceTrace> {
    let body = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&body).map_err(|e| IoError::Format {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
