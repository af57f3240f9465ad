//! Quasi-momentum sweeps: bands, gaps, bracketing and the gap-count cutoff.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::eigen::{lowest_eigenvalues_with, symbolic_factor, EigenOptions, SpectrumSlice};
use super::operator::{assemble, BoundaryCondition};
use super::raster::{rasterize_exterior, RasterCell};
use crate::error::{Error, Result};
use crate::geometry::CellGeometry2D;

/// Relative width below which adjacent bands are treated as touching.
pub const GAP_RTOL: f64 = 1e-6;
/// Relative slack of the Neumann/Dirichlet enclosure check.
pub const BRACKET_RTOL: f64 = 1e-6;
/// Environment variable capping the sweep's worker threads.
pub const THREADS_ENV: &str = "RESGAP_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Band {
    pub k: usize,
    pub lo: f64,
    pub hi: f64,
}

/// Open interval between band `k` and band `k + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Gap {
    pub k: usize,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug)]
pub struct BandSweep {
    pub theta_samples: Vec<[f64; 2]>,
    pub slices: Vec<SpectrumSlice>,
    pub neumann: SpectrumSlice,
    pub dirichlet: SpectrumSlice,
    pub bands: Vec<Band>,
    pub gaps: Vec<Gap>,
}

impl BandSweep {
    pub fn k_max(&self) -> usize {
        self.bands.len()
    }

    /// Gaps that open below `cutoff`. A gap whose lower edge sits on the
    /// cutoff within the gap tolerance is not counted.
    pub fn gaps_below(&self, cutoff: f64) -> Vec<Gap> {
        let limit = cutoff * (1.0 - GAP_RTOL);
        self.gaps.iter().copied().filter(|g| g.lo < limit).collect()
    }

    /// Indices of theta samples whose solve hit the iteration cap.
    pub fn unconverged(&self) -> Vec<usize> {
        (0..self.slices.len())
            .filter(|&i| !self.slices[i].converged)
            .collect()
    }

    pub fn converged(&self) -> bool {
        self.unconverged().is_empty() && self.neumann.converged && self.dirichlet.converged
    }

    pub fn max_residual(&self) -> f64 {
        self.slices
            .iter()
            .chain([&self.neumann, &self.dirichlet])
            .map(SpectrumSlice::max_residual)
            .fold(0.0, f64::max)
    }

    /// Every `(theta, k)` where `lambda_k(N) <= lambda_k(theta) <= lambda_k(D)`
    /// fails by more than the relative slack.
    pub fn bracketing_violations(&self) -> Vec<Error> {
        let mut out = Vec::new();
        for (theta, slice) in self.theta_samples.iter().zip(&self.slices) {
            for (k, &lam) in slice.eigenvalues.iter().enumerate() {
                let (Some(&lo), Some(&hi)) =
                    (self.neumann.eigenvalues.get(k), self.dirichlet.eigenvalues.get(k))
                else {
                    continue;
                };
                if !(lam.is_finite() && lo.is_finite() && hi.is_finite()) {
                    continue;
                }
                let tol = BRACKET_RTOL * hi.abs();
                if lam < lo - tol || lam > hi + tol {
                    out.push(Error::Bracketing {
                        theta_x: theta[0],
                        theta_y: theta[1],
                        k: k + 1,
                        detail: format!("N {lo} <= {lam} <= D {hi} fails"),
                    });
                }
            }
        }
        out
    }
}

/// `grid x grid` samples of `[0, pi]^2`, both ends included.
///
/// The spectrum at `-theta` equals the spectrum at `theta`, so the half
/// range covers every band extremum reachable on the full torus grid.
pub fn theta_samples(grid: usize) -> Result<Vec<[f64; 2]>> {
    if grid < 2 {
        return Err(Error::Invalid(format!("theta grid must be at least 2, got {grid}")));
    }
    let axis: Vec<f64> = (0..grid)
        .map(|i| if i + 1 == grid { PI } else { PI * i as f64 / (grid - 1) as f64 })
        .collect();
    Ok(axis
        .iter()
        .flat_map(|&ty| axis.iter().map(move |&tx| [tx, ty]))
        .collect())
}

#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub theta_grid: usize,
    pub k_max: usize,
    pub eigen: EigenOptions,
    /// Worker cap; `None` reads the environment.
    pub threads: Option<usize>,
}

impl SweepOptions {
    pub fn new(theta_grid: usize, k_max: usize) -> Self {
        Self {
            theta_grid,
            k_max,
            eigen: EigenOptions::default(),
            threads: None,
        }
    }
}

fn thread_cap(explicit: Option<usize>) -> Option<usize> {
    explicit.or_else(|| {
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&t| t > 0)
    })
}

fn run_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match thread_cap(threads) {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
        None => Ok(job()),
    }
}

/// Solve one problem; an iteration cap becomes an unconverged slice.
fn solve_slice(
    cell: &RasterCell,
    bc: BoundaryCondition,
    k: usize,
    opts: &EigenOptions,
    symbolic: Option<&faer::sparse::linalg::solvers::SymbolicLlt<usize>>,
) -> Result<SpectrumSlice> {
    let op = assemble(cell, bc);
    match lowest_eigenvalues_with(&op, k, opts, symbolic) {
        Ok(slice) => Ok(slice),
        Err(Error::NoConvergence {
            iterations,
            best_residual,
            partial,
        }) => {
            log::warn!(
                "{bc:?}: no convergence after {iterations} restarts, best residual {best_residual:e}"
            );
            let mut eigenvalues = partial;
            eigenvalues.resize(k, f64::NAN);
            Ok(SpectrumSlice {
                bc,
                eigenvalues,
                residuals: vec![best_residual; k],
                converged: false,
            })
        }
        Err(e) => Err(e),
    }
}

/// Band sweep with default solver settings.
pub fn sweep_bands(cell: &RasterCell, theta_grid: usize, k_max: usize) -> Result<BandSweep> {
    sweep_bands_with(cell, &SweepOptions::new(theta_grid, k_max))
}

pub fn sweep_bands_with(cell: &RasterCell, opts: &SweepOptions) -> Result<BandSweep> {
    let k = opts.k_max;
    if k == 0 {
        return Err(Error::Invalid("k_max must be positive".into()));
    }
    let samples = theta_samples(opts.theta_grid)?;
    let quasi_pattern = symbolic_factor(&assemble(cell, BoundaryCondition::quasi(0.0, 0.0)))?;
    let outer_pattern = symbolic_factor(&assemble(cell, BoundaryCondition::NeumannOuter))?;

    let work: Vec<(BoundaryCondition, bool)> = samples
        .iter()
        .map(|t| (BoundaryCondition::Quasi(*t), true))
        .chain([
            (BoundaryCondition::NeumannOuter, false),
            (BoundaryCondition::DirichletOuter, false),
        ])
        .collect();
    let mut solved = run_pool(opts.threads, || {
        work.par_iter()
            .map(|&(bc, quasi)| {
                let pattern = if quasi { &quasi_pattern } else { &outer_pattern };
                solve_slice(cell, bc, k, &opts.eigen, Some(pattern))
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let dirichlet = solved.pop().expect("dirichlet slice");
    let neumann = solved.pop().expect("neumann slice");
    let slices = solved;

    let bands: Vec<Band> = (0..k)
        .map(|j| {
            let values = slices.iter().map(|s| s.eigenvalues[j]).filter(|v| v.is_finite());
            let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
            Band { k: j + 1, lo, hi }
        })
        .collect();
    let gaps = bands
        .windows(2)
        .filter(|w| w[1].lo - w[0].hi > GAP_RTOL * w[1].lo.abs())
        .map(|w| Gap {
            k: w[0].k,
            lo: w[0].hi,
            hi: w[1].lo,
        })
        .collect();

    let sweep = BandSweep {
        theta_samples: samples,
        slices,
        neumann,
        dirichlet,
        bands,
        gaps,
    };
    if let Some(first) = sweep.bracketing_violations().into_iter().next() {
        return Err(first);
    }
    Ok(sweep)
}

/// Sampled cutoff constant of the outer region.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaEstimate {
    /// Maximum over the samples of the lowest quasi-periodic eigenvalue.
    pub value: f64,
    pub per_theta: Vec<([f64; 2], f64)>,
}

impl LambdaEstimate {
    /// Spectral cutoff at scale `epsilon`.
    pub fn cutoff(&self, epsilon: f64) -> f64 {
        self.value / (epsilon * epsilon)
    }
}

/// Lowest quasi-periodic eigenvalue of the outer region `B_0` alone (walls of
/// every shell are Neumann), maximized over the theta grid.
pub fn estimate_lambda(geometry: &CellGeometry2D, theta_grid: usize, grid_n: usize) -> Result<LambdaEstimate> {
    estimate_lambda_with(geometry, theta_grid, grid_n, &EigenOptions::default(), None)
}

pub fn estimate_lambda_with(
    geometry: &CellGeometry2D,
    theta_grid: usize,
    grid_n: usize,
    eigen: &EigenOptions,
    threads: Option<usize>,
) -> Result<LambdaEstimate> {
    let cell = rasterize_exterior(geometry, grid_n)?;
    let samples = theta_samples(theta_grid)?;
    let pattern = symbolic_factor(&assemble(&cell, BoundaryCondition::quasi(0.0, 0.0)))?;
    let values = run_pool(threads, || {
        samples
            .par_iter()
            .map(|t| {
                let op = assemble(&cell, BoundaryCondition::Quasi(*t));
                lowest_eigenvalues_with(&op, 1, eigen, Some(&pattern)).map(|s| s.eigenvalues[0])
            })
            .collect::<Result<Vec<f64>>>()
    })??;
    let value = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(LambdaEstimate {
        value,
        per_theta: samples.into_iter().zip(values).collect(),
    })
}
