//! Lowest eigenpairs of sparse Hermitian PSD operators.
//!
//! Block Krylov iteration on `(A - shift I)^-1` with Rayleigh-Ritz
//! extraction and thick restarts. The block is wider than any eigenvalue
//! multiplicity we expect (square cells give four-fold degeneracies), so
//! repeated eigenvalues are counted correctly.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::SparseColMatRef;
use faer::{c64, Col, Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::operator::{BoundaryCondition, HermitianOperator};
use crate::error::{Error, Result};

/// Operators up to this size are diagonalized densely.
const DENSE_LIMIT: usize = 256;

#[derive(Clone, Debug)]
pub struct EigenOptions {
    /// Spectral shift; must lie below the spectrum.
    pub shift: f64,
    /// Target for `||A u - lambda u|| / ||u||`.
    pub residual_tol: f64,
    /// The target is raised to `floor_factor * machine_eps * ||A||_1` when
    /// that is larger: no stored vector does better once `||A||` is large.
    pub floor_factor: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            shift: -1.0,
            residual_tol: 1e-8,
            floor_factor: 16.0,
            max_restarts: 60,
            seed: 0x5eed_ba4d,
        }
    }
}

/// Lowest eigenvalues of one boundary-value problem, ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumSlice {
    pub bc: BoundaryCondition,
    pub eigenvalues: Vec<f64>,
    /// `||A u - lambda u|| / ||u||` for each returned pair.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

impl SpectrumSlice {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

/// Symbolic Cholesky analysis, reusable across operators with one pattern.
pub fn symbolic_factor(op: &HermitianOperator) -> Result<SymbolicLlt<usize>> {
    SymbolicLlt::try_new(op.pattern().as_ref(), Side::Lower)
        .map_err(|e| Error::Factorization(format!("{e:?}")))
}

struct ShiftInvert {
    llt: Llt<usize, c64>,
}

impl ShiftInvert {
    fn new(op: &HermitianOperator, shift: f64, symbolic: Option<&SymbolicLlt<usize>>) -> Result<Self> {
        let symbolic = match symbolic {
            Some(s) => s.clone(),
            None => symbolic_factor(op)?,
        };
        let values = op.shifted_values(shift);
        let mat = SparseColMatRef::new(op.pattern().as_ref(), &values);
        let llt = Llt::try_new_with_symbolic(symbolic, mat, Side::Lower)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(Self { llt })
    }

    fn apply(&self, block: &mut Mat<c64>) {
        self.llt.solve_in_place(block.as_mut());
    }
}

/// Grows an orthonormal basis `q` together with `w = (A - shift)^-1 q`.
struct Basis {
    q: Mat<c64>,
    w: Mat<c64>,
    len: usize,
}

impl Basis {
    fn new(dim: usize, cap: usize) -> Self {
        Self {
            q: Mat::zeros(dim, cap),
            w: Mat::zeros(dim, cap),
            len: 0,
        }
    }

    fn cap(&self) -> usize {
        self.q.ncols()
    }

    /// Orthonormalize the columns of `block` against the basis and append
    /// the ones that survive; returns the appended column range.
    fn extend(&mut self, block: &Mat<c64>) -> std::ops::Range<usize> {
        let start = self.len;
        let mut b = block.clone();
        // Block Gram-Schmidt against the existing basis, twice.
        if start > 0 {
            for _ in 0..2 {
                let q = self.q.as_ref().subcols(0, start);
                let c = q.adjoint() * &b;
                b -= q * &c;
            }
        }
        for j in 0..b.ncols() {
            if self.len == self.cap() {
                break;
            }
            let before = block.col(j).norm_l2();
            if before == 0.0 {
                continue;
            }
            let mut v: Col<c64> = b.col(j).to_owned();
            // Repeat full passes while they still cancel heavily: a nearly
            // dependent column keeps its rounding error otherwise.
            let mut after = v.norm_l2();
            for _ in 0..4 {
                let q = self.q.as_ref().subcols(0, self.len);
                let c = q.adjoint() * &v;
                v -= q * &c;
                let norm = v.norm_l2();
                let settled = norm > 0.5 * after;
                after = norm;
                if settled {
                    break;
                }
            }
            if after <= 1e-14 * before {
                continue;
            }
            v *= faer::Scale(c64::new(1.0 / after, 0.0));
            self.q.col_mut(self.len).copy_from(&v);
            self.len += 1;
        }
        start..self.len
    }

    fn fill_images(&mut self, solver: &ShiftInvert, cols: std::ops::Range<usize>) {
        if cols.is_empty() {
            return;
        }
        let mut block = self.q.as_ref().subcols(cols.start, cols.len()).to_owned();
        solver.apply(&mut block);
        self.w
            .as_mut()
            .subcols_mut(cols.start, cols.len())
            .copy_from(&block);
    }
}

struct RitzPairs {
    vectors: Mat<c64>,
    images: Mat<c64>,
    residuals: Vec<f64>,
}

/// Rayleigh-Ritz on the current basis; the `count` largest Ritz values of
/// the inverted operator, largest first.
fn rayleigh_ritz(basis: &Basis, count: usize) -> Result<RitzPairs> {
    let q = basis.q.as_ref().subcols(0, basis.len);
    let w = basis.w.as_ref().subcols(0, basis.len);
    let h = q.adjoint() * w;
    let h = Mat::from_fn(basis.len, basis.len, |i, j| (h[(i, j)] + h[(j, i)].conj()) * 0.5);
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::NoConvergence {
            iterations: 0,
            best_residual: f64::INFINITY,
            partial: Vec::new(),
        })?;
    let count = count.min(basis.len);
    let order: Vec<usize> = (0..basis.len).rev().take(count).collect();
    let s = Mat::from_fn(basis.len, count, |i, j| evd.U()[(i, order[j])]);
    let values: Vec<f64> = order.iter().map(|&k| evd.S()[k].re).collect();
    let vectors = q * &s;
    let images = w * &s;
    let residuals = (0..count)
        .map(|j| {
            let r = images.col(j) - vectors.col(j) * faer::Scale(c64::new(values[j], 0.0));
            r.norm_l2() / values[j].abs()
        })
        .collect();
    Ok(RitzPairs {
        vectors,
        images,
        residuals,
    })
}

/// Residual bound actually enforced for `op`.
pub fn residual_target(op: &HermitianOperator, opts: &EigenOptions) -> f64 {
    opts.residual_tol
        .max(opts.floor_factor * f64::EPSILON * op.norm_one())
}

/// `k` lowest eigenvalues with default options.
pub fn lowest_eigenvalues(op: &HermitianOperator, k: usize) -> Result<SpectrumSlice> {
    lowest_eigenvalues_with(op, k, &EigenOptions::default(), None)
}

/// `k` lowest eigenvalues, optionally reusing a symbolic factorization of
/// an operator with the same pattern.
pub fn lowest_eigenvalues_with(
    op: &HermitianOperator,
    k: usize,
    opts: &EigenOptions,
    symbolic: Option<&SymbolicLlt<usize>>,
) -> Result<SpectrumSlice> {
    let dim = op.dim();
    if k == 0 || k > dim {
        return Err(Error::Invalid(format!(
            "requested {k} eigenvalues of an operator of dimension {dim}"
        )));
    }
    if dim <= DENSE_LIMIT {
        return dense_lowest(op, k);
    }

    let solver = ShiftInvert::new(op, opts.shift, symbolic)?;
    let block = (k + 2).max(4).min(dim);
    let cap = (8 * block).min(dim);
    let mut basis = Basis::new(dim, cap);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let start = Mat::from_fn(dim, block, |_, _| {
        c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let first = basis.extend(&start);
    basis.fill_images(&solver, first.clone());
    let mut last = first;

    let target = residual_target(op, opts);
    let mut best = f64::INFINITY;
    let mut idle = 0;
    for restart in 0..=opts.max_restarts {
        while basis.len < cap {
            let next = basis.w.as_ref().subcols(last.start, last.len()).to_owned();
            let added = basis.extend(&next);
            if added.is_empty() {
                break;
            }
            basis.fill_images(&solver, added.clone());
            last = added;
        }

        // Keep twice the block so a cluster straddling its edge survives.
        let keep = (2 * block).min(basis.len).min(cap - block);
        let ritz = rayleigh_ritz(&basis, keep)?;
        let slice = finish(op, &ritz, k, true);
        let worst = slice.max_residual();
        log::debug!(
            "restart {restart}: basis {}, Ritz residual {:.3e}, residual {worst:.3e} (target {target:.3e})",
            basis.len,
            ritz.residuals[..k].iter().cloned().fold(0.0, f64::max)
        );
        if worst <= target || basis.len == dim {
            return Ok(slice);
        }
        // Three restarts without halving the residual means rounding wins.
        if worst <= 0.5 * best {
            idle = 0;
        } else {
            idle += 1;
        }
        best = best.min(worst);
        if idle >= 3 || restart == opts.max_restarts {
            return Err(Error::NoConvergence {
                iterations: restart + 1,
                best_residual: best,
                partial: slice.eigenvalues,
            });
        }

        // Thick restart from the current Ritz block.
        basis.q.as_mut().subcols_mut(0, keep).copy_from(&ritz.vectors);
        basis.w.as_mut().subcols_mut(0, keep).copy_from(&ritz.images);
        basis.len = keep;
        last = 0..keep;
    }
    unreachable!("restart loop returns")
}

/// Eigenvalues as Rayleigh quotients of `A` itself, which keeps near-zero
/// eigenvalues free of the shift-invert cancellation.
fn finish(op: &HermitianOperator, ritz: &RitzPairs, k: usize, converged: bool) -> SpectrumSlice {
    let dim = op.dim();
    let mut ay = vec![c64::new(0.0, 0.0); dim];
    let mut pairs: Vec<(f64, f64)> = (0..k)
        .map(|j| {
            let y: Vec<c64> = (0..dim).map(|i| ritz.vectors[(i, j)]).collect();
            op.apply(&y, &mut ay);
            let num: c64 = y.iter().zip(&ay).map(|(a, b)| a.conj() * b).sum();
            let den: f64 = y.iter().map(|v| v.norm_sqr()).sum();
            let lambda = num.re / den;
            (lambda, residual(op, &y, lambda))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    SpectrumSlice {
        bc: op.bc(),
        eigenvalues: pairs.iter().map(|p| p.0).collect(),
        residuals: pairs.iter().map(|p| p.1).collect(),
        converged,
    }
}

fn residual(op: &HermitianOperator, y: &[c64], lambda: f64) -> f64 {
    let mut ay = vec![c64::new(0.0, 0.0); y.len()];
    op.apply(y, &mut ay);
    let num: f64 = ay
        .iter()
        .zip(y)
        .map(|(a, v)| (a - v * lambda).norm_sqr())
        .sum();
    let den: f64 = y.iter().map(|v| v.norm_sqr()).sum();
    (num / den).sqrt()
}

fn dense_lowest(op: &HermitianOperator, k: usize) -> Result<SpectrumSlice> {
    let dim = op.dim();
    let sparse = op.as_faer();
    let dense = sparse.to_dense();
    let evd = dense
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Factorization(format!("dense eigensolver: {e:?}")))?;
    let mut eigenvalues = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for j in 0..k {
        let lambda = evd.S()[j].re;
        let y: Vec<c64> = (0..dim).map(|i| evd.U()[(i, j)]).collect();
        eigenvalues.push(lambda);
        residuals.push(residual(op, &y, lambda));
    }
    Ok(SpectrumSlice {
        bc: op.bc(),
        eigenvalues,
        residuals,
        converged: true,
    })
}
