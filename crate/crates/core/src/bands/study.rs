//! Refinement in `epsilon`: numerical spectra against the limit gaps.

use serde::Serialize;

use super::eigen::EigenOptions;
use super::raster::rasterize;
use super::sweep::{estimate_lambda_with, sweep_bands_with, Gap, LambdaEstimate, SweepOptions};
use crate::design::{synthesize_geometry, TargetGaps, DEFAULT_LAYOUT_MARGIN};
use crate::error::{Error, Result};
use crate::geometry::CellGeometry2D;
use crate::limit::compute_betas;

#[derive(Clone, Debug)]
pub struct StudyOptions {
    pub theta_grid: usize,
    /// Defaults to `m + 2`.
    pub k_max: Option<usize>,
    pub eigen: EigenOptions,
    pub threads: Option<usize>,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            theta_grid: 5,
            k_max: None,
            eigen: EigenOptions::default(),
            threads: None,
        }
    }
}

/// One `epsilon` of the study.
#[derive(Clone, Debug, Serialize)]
pub struct StudyRow {
    pub epsilon: f64,
    pub grid_n: usize,
    /// `Lambda_hat / epsilon^2`.
    pub cutoff: f64,
    pub snapped_etas: Vec<f64>,
    /// Limit endpoints of the snapped geometry.
    pub limit_alphas: Vec<f64>,
    pub limit_betas: Vec<f64>,
    /// `lambda_1 .. lambda_{m+1}` with Neumann outer faces.
    pub neumann: Vec<f64>,
    /// `lambda_1 .. lambda_m` with Dirichlet outer faces.
    pub dirichlet: Vec<f64>,
    /// Gaps opening below the cutoff.
    pub gaps: Vec<Gap>,
    /// `|lambda_j(D) - alpha_j| / alpha_j`.
    pub dev_dirichlet: Vec<f64>,
    /// `|lambda_{j+1}(N) - beta_j| / beta_j`.
    pub dev_neumann: Vec<f64>,
    /// Gap edges against `alpha_j` and `beta_j`; NaN where the gap is missing.
    pub dev_gap_lo: Vec<f64>,
    pub dev_gap_hi: Vec<f64>,
    pub max_residual: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StudyTable {
    pub lambda: LambdaEstimate,
    pub rows: Vec<StudyRow>,
    /// Deviation series that grew from one `epsilon` to the next.
    pub trend_violations: Vec<String>,
}

impl StudyTable {
    pub fn trend_holds(&self) -> bool {
        self.trend_violations.is_empty()
    }
}

fn rel_dev(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs()
}

/// Design the geometry for `targets`, then run the study on it.
pub fn convergence_study(
    targets: &TargetGaps,
    gamma: f64,
    eps_list: &[f64],
    grid_n: usize,
) -> Result<StudyTable> {
    let geometry = synthesize_geometry(targets, gamma, DEFAULT_LAYOUT_MARGIN)?;
    convergence_study_geometry(&geometry, eps_list, grid_n, &StudyOptions::default())
}

pub fn convergence_study_geometry(
    geometry: &CellGeometry2D,
    eps_list: &[f64],
    grid_n: usize,
    opts: &StudyOptions,
) -> Result<StudyTable> {
    if eps_list.is_empty() {
        return Err(Error::Invalid("epsilon list is empty".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Invalid(format!(
            "epsilon list must be strictly decreasing: {eps_list:?}"
        )));
    }
    let m = geometry.m();
    if m == 0 {
        return Err(Error::Invalid("study needs at least one resonator".into()));
    }
    let k_max = opts.k_max.unwrap_or(m + 2).max(m + 1);
    // Rasterize every epsilon up front so infeasible ladders fail fast.
    let cells = eps_list
        .iter()
        .map(|&eps| rasterize(geometry, eps, grid_n))
        .collect::<Result<Vec<_>>>()?;
    let lambda = estimate_lambda_with(geometry, opts.theta_grid, grid_n, &opts.eigen, opts.threads)?;

    let mut rows = Vec::with_capacity(cells.len());
    for cell in &cells {
        let eps = cell.epsilon();
        let report = compute_betas(&cell.snapped_model()?)?;
        let sweep = sweep_bands_with(
            cell,
            &SweepOptions {
                theta_grid: opts.theta_grid,
                k_max,
                eigen: opts.eigen.clone(),
                threads: opts.threads,
            },
        )?;
        let cutoff = lambda.cutoff(eps);
        let gaps = sweep.gaps_below(cutoff);
        let neumann = sweep.neumann.eigenvalues[..m + 1].to_vec();
        let dirichlet = sweep.dirichlet.eigenvalues[..m].to_vec();
        let (alphas, betas) = (report.alphas.clone(), report.betas.clone());
        let dev_dirichlet = (0..m).map(|j| rel_dev(dirichlet[j], alphas[j])).collect();
        let dev_neumann = (0..m).map(|j| rel_dev(neumann[j + 1], betas[j])).collect();
        let edge = |j: usize, pick: fn(&Gap) -> f64, reference: f64| {
            gaps.get(j)
                .filter(|_| gaps.len() == m)
                .map_or(f64::NAN, |g| rel_dev(pick(g), reference))
        };
        let dev_gap_lo = (0..m).map(|j| edge(j, |g| g.lo, alphas[j])).collect();
        let dev_gap_hi = (0..m).map(|j| edge(j, |g| g.hi, betas[j])).collect();
        log::info!(
            "epsilon {eps}: {} gap(s) below {cutoff:.4}, N {neumann:?}, D {dirichlet:?}",
            gaps.len()
        );
        rows.push(StudyRow {
            epsilon: eps,
            grid_n,
            cutoff,
            snapped_etas: cell.snapped_etas().to_vec(),
            limit_alphas: alphas,
            limit_betas: betas,
            neumann,
            dirichlet,
            gaps,
            dev_dirichlet,
            dev_neumann,
            dev_gap_lo,
            dev_gap_hi,
            max_residual: sweep.max_residual(),
            converged: sweep.converged(),
        });
    }

    let trend_violations = trend_violations(&rows);
    Ok(StudyTable {
        lambda,
        rows,
        trend_violations,
    })
}

fn trend_violations(rows: &[StudyRow]) -> Vec<String> {
    let series: [(&str, fn(&StudyRow) -> &Vec<f64>); 4] = [
        ("dirichlet", |r| &r.dev_dirichlet),
        ("neumann", |r| &r.dev_neumann),
        ("gap_lo", |r| &r.dev_gap_lo),
        ("gap_hi", |r| &r.dev_gap_hi),
    ];
    let mut out = Vec::new();
    for (name, get) in series {
        for pair in rows.windows(2) {
            for (j, (a, b)) in get(&pair[0]).iter().zip(get(&pair[1])).enumerate() {
                if !(b <= a) {
                    out.push(format!(
                        "{name}_{}: deviation {a:.4e} at epsilon {} became {b:.4e} at epsilon {}",
                        j + 1,
                        pair[0].epsilon,
                        pair[1].epsilon
                    ));
                }
            }
        }
    }
    out
}
