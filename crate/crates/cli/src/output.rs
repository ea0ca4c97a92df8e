//! File output: draws as CSV, summaries and reports as JSON.
//!
//! The draws CSV schema is fixed: `chain,draw` followed by one column per
//! coordinate, named by the model. Floats are written with Rust's shortest
//! round-trip formatting, so identical runs produce identical bytes.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use gist_nuts_core::ChainRun;
use serde::Serialize;

use crate::run::{ScalingOutcome, ScalingRow};

pub fn write_draws_csv(
    path: &Path,
    coordinate_names: &[String],
    runs: &[ChainRun],
) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "chain,draw")?;
    for name in coordinate_names {
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    for (chain, run) in runs.iter().enumerate() {
        for (draw, record) in run.records.iter().enumerate() {
            write!(out, "{chain},{draw}")?;
            for value in &record.position {
                write!(out, ",{value}")?;
            }
            writeln!(out)?;
        }
    }
    out.flush()
}

pub fn write_scaling_csv(path: &Path, outcome: &ScalingOutcome) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "dim,regime,mean_fine_step,fine_step_at_mean_k,chains,measured_transitions"
    )?;
    for ScalingRow {
        dim,
        regime,
        mean_fine_step,
        fine_step_at_mean_k,
        chains,
        measured_transitions,
    } in &outcome.rows
    {
        writeln!(
            out,
            "{dim},{regime},{mean_fine_step},{fine_step_at_mean_k},{chains},{measured_transitions}"
        )?;
    }
    out.flush()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()
}
