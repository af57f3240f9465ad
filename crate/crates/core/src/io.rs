//! JSON and CSV artifacts.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::bands::{BandSweep, Gap, StudyTable};
use crate::error::Result;

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let file = File::open(path)?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn optional(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `theta_x, theta_y, k, lambda, residual, converged`: one row per theta
/// sample and band index.
pub fn write_bands_csv(out: impl Write, sweep: &BandSweep) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta_x", "theta_y", "k", "lambda", "residual", "converged"])?;
    for (theta, slice) in sweep.theta_samples.iter().zip(&sweep.slices) {
        for (k, (lam, res)) in slice.eigenvalues.iter().zip(&slice.residuals).enumerate() {
            w.write_record([
                theta[0].to_string(),
                theta[1].to_string(),
                (k + 1).to_string(),
                lam.to_string(),
                res.to_string(),
                slice.converged.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `k, gap_lo, gap_hi, limit_alpha, limit_beta, rel_dev`. Limit columns are
/// empty for gaps beyond the model; `rel_dev` is the larger of the two
/// endpoint deviations.
pub fn write_gaps_csv(out: impl Write, gaps: &[Gap], alphas: &[f64], betas: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "gap_lo", "gap_hi", "limit_alpha", "limit_beta", "rel_dev"])?;
    for (j, g) in gaps.iter().enumerate() {
        let limits = alphas.get(j).zip(betas.get(j));
        let dev = limits.map(|(a, b)| ((g.lo - a).abs() / a).max((g.hi - b).abs() / b));
        w.write_record([
            g.k.to_string(),
            g.lo.to_string(),
            g.hi.to_string(),
            optional(limits.map(|l| *l.0)),
            optional(limits.map(|l| *l.1)),
            optional(dev),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Long format: `epsilon, grid_n, cutoff, quantity, j, value, limit, rel_dev`
/// with quantity one of `neumann`, `dirichlet`, `gap_lo`, `gap_hi`.
pub fn write_study_csv(out: impl Write, table: &StudyTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epsilon", "grid_n", "cutoff", "quantity", "j", "value", "limit", "rel_dev"])?;
    for row in &table.rows {
        let m = row.limit_alphas.len();
        let mut emit = |quantity: &str, j: usize, value: Option<f64>, limit: Option<f64>, dev: Option<f64>| {
            w.write_record([
                row.epsilon.to_string(),
                row.grid_n.to_string(),
                row.cutoff.to_string(),
                quantity.to_string(),
                j.to_string(),
                optional(value),
                optional(limit),
                optional(dev.filter(|d| d.is_finite())),
            ])
        };
        emit("neumann", 1, Some(row.neumann[0]), Some(0.0), None)?;
        for j in 0..m {
            emit(
                "neumann",
                j + 2,
                Some(row.neumann[j + 1]),
                Some(row.limit_betas[j]),
                Some(row.dev_neumann[j]),
            )?;
        }
        for j in 0..m {
            emit(
                "dirichlet",
                j + 1,
                Some(row.dirichlet[j]),
                Some(row.limit_alphas[j]),
                Some(row.dev_dirichlet[j]),
            )?;
        }
        let complete = row.gaps.len() == m;
        for j in 0..m {
            let gap = row.gaps.get(j).filter(|_| complete);
            emit("gap_lo", j + 1, gap.map(|g| g.lo), Some(row.limit_alphas[j]), Some(row.dev_gap_lo[j]))?;
            emit("gap_hi", j + 1, gap.map(|g| g.hi), Some(row.limit_betas[j]), Some(row.dev_gap_hi[j]))?;
        }
    }
    w.flush()?;
    Ok(())
}
