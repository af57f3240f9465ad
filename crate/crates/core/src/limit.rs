//! Limiting spectral quantities of the resonator-perforated cell.
//!
//! As the period shrinks, the first `m` gaps of the Neumann Laplacian converge
//! to intervals `(alpha_j, beta_j)`. Each `alpha_j` is the Helmholtz frequency
//! of one resonator,
//!
//! ```text
//! alpha_j = eta_j^(n-1) |D_j| / (h_j |B_j|)
//! ```
//!
//! and the `beta_j` are the zeros of the secular function
//!
//! ```text
//! F(lambda) = 1 + sum_j alpha_j |B_j| / (|B_0| (alpha_j - lambda))
//! ```
//!
//! which has exactly one zero between consecutive poles and one above the
//! largest. The same numbers are the spectra of two small matrices: the
//! `(m+1) x (m+1)` Neumann matrix has eigenvalues `{0, beta_1, .., beta_m}`
//! and the Dirichlet matrix is `diag(alpha_1, .., alpha_m)`.

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance below which two resonator frequencies count as equal.
pub const DUPLICATE_ALPHA_RTOL: f64 = 1e-12;

/// Root acceptance: `|F(beta)| <= ROOT_TOL * (1 + |F'(beta)|)`.
const ROOT_TOL: f64 = 1e-10;

/// Scalar parameters of one resonator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonatorSpec {
    /// Passage length along the distinguished axis.
    pub h: f64,
    /// Cross-section scale constant of the passage.
    pub eta: f64,
    /// `(n-1)`-volume of the passage cross-section profile.
    pub d_profile_measure: f64,
    /// `n`-volume of the inner chamber.
    pub b_volume: f64,
}

impl ResonatorSpec {
    pub fn new(h: f64, eta: f64, d_profile_measure: f64, b_volume: f64) -> Result<Self> {
        let spec = Self {
            h,
            eta,
            d_profile_measure,
            b_volume,
        };
        spec.validate(0)?;
        Ok(spec)
    }

    fn validate(&self, index: usize) -> Result<()> {
        let fields = [
            ("h", self.h),
            ("eta", self.eta),
            ("d_profile_measure", self.d_profile_measure),
            ("b_volume", self.b_volume),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Invalid(format!(
                    "resonator {index}: {name} must be a positive finite number, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// Helmholtz frequency of this resonator in dimension `n`.
    pub fn alpha(&self, n: usize) -> f64 {
        self.eta.powi(n as i32 - 1) * self.d_profile_measure / (self.h * self.b_volume)
    }
}

#[derive(Deserialize)]
struct RawUnitCellModel {
    n: usize,
    resonators: Vec<ResonatorSpec>,
    b0_volume: f64,
}

impl TryFrom<RawUnitCellModel> for UnitCellModel {
    type Error = Error;

    fn try_from(raw: RawUnitCellModel) -> Result<Self> {
        UnitCellModel::new(raw.n, raw.resonators, raw.b0_volume)
    }
}

/// Space dimension, resonator list and outer volume `|B_0|` of a period cell.
///
/// Construction validates every invariant, including pairwise distinct
/// resonator frequencies. Resonators keep their input order; the operations
/// below report results in ascending-`alpha` order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawUnitCellModel")]
pub struct UnitCellModel {
    n: usize,
    resonators: Vec<ResonatorSpec>,
    b0_volume: f64,
}

impl UnitCellModel {
    pub fn new(n: usize, resonators: Vec<ResonatorSpec>, b0_volume: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Invalid(format!("dimension n must be >= 2, got {n}")));
        }
        if resonators.is_empty() {
            return Err(Error::Invalid("at least one resonator is required".into()));
        }
        if !(b0_volume.is_finite() && b0_volume > 0.0) {
            return Err(Error::Invalid(format!(
                "b0_volume must be a positive finite number, got {b0_volume}"
            )));
        }
        for (i, r) in resonators.iter().enumerate() {
            r.validate(i)?;
        }
        let model = Self {
            n,
            resonators,
            b0_volume,
        };
        compute_alphas(&model)?;
        Ok(model)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn resonators(&self) -> &[ResonatorSpec] {
        &self.resonators
    }

    pub fn b0_volume(&self) -> f64 {
        self.b0_volume
    }

    pub fn m(&self) -> usize {
        self.resonators.len()
    }

    /// Permutation that sorts the resonators by ascending `alpha`.
    pub fn alpha_order(&self) -> Vec<usize> {
        let alphas = self.raw_alphas();
        let mut order: Vec<usize> = (0..alphas.len()).collect();
        order.sort_by(|&a, &b| alphas[a].total_cmp(&alphas[b]));
        order
    }

    fn raw_alphas(&self) -> Vec<f64> {
        self.resonators.iter().map(|r| r.alpha(self.n)).collect()
    }

    /// Poles and residue weights of `F`, sorted by pole.
    fn secular(&self) -> Secular {
        let alphas = self.raw_alphas();
        let order = self.alpha_order();
        let poles = order.iter().map(|&i| alphas[i]).collect();
        let weights = order
            .iter()
            .map(|&i| alphas[i] * self.resonators[i].b_volume / self.b0_volume)
            .collect();
        Secular { poles, weights }
    }
}

/// `alpha_j` for every resonator, in input order.
pub fn compute_alphas(model: &UnitCellModel) -> Result<Vec<f64>> {
    let alphas = model.raw_alphas();
    let mut order: Vec<usize> = (0..alphas.len()).collect();
    order.sort_by(|&a, &b| alphas[a].total_cmp(&alphas[b]));
    for pair in order.windows(2) {
        let (a, b) = (alphas[pair[0]], alphas[pair[1]]);
        if b - a <= DUPLICATE_ALPHA_RTOL * b.abs() {
            return Err(Error::DuplicateAlpha {
                first: pair[0].min(pair[1]),
                second: pair[0].max(pair[1]),
                value: a,
            });
        }
    }
    Ok(alphas)
}

/// The rational function `lambda -> sum_j w_j / (p_j - lambda)` plus one.
#[derive(Clone, Debug)]
struct Secular {
    poles: Vec<f64>,
    weights: Vec<f64>,
}

impl Secular {
    fn value(&self, lambda: f64) -> f64 {
        1.0 + self
            .poles
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w / (p - lambda))
            .sum::<f64>()
    }

    fn derivative(&self, lambda: f64) -> f64 {
        self.poles
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| {
                let d = p - lambda;
                w / (d * d)
            })
            .sum()
    }

    fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Zero of `F` on `(lo, hi)` where `F` increases from negative to positive.
    fn bracketed_root(&self, index: usize, lo: f64, hi: f64, hi_is_pole: bool) -> Result<f64> {
        let not_bracketed = || Error::RootNotBracketed { index, lo, hi };
        if !hi_is_pole && self.value(hi) <= 0.0 {
            return Err(not_bracketed());
        }
        let (mut a, mut b) = (lo, hi);
        loop {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if self.value(mid) < 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        // An endpoint that never moved means F had the wrong sign throughout.
        if a == lo || b == hi {
            return Err(not_bracketed());
        }
        let (fa, fb) = (self.value(a), self.value(b));
        let (x, fx) = if fa.abs() <= fb.abs() { (a, fa) } else { (b, fb) };
        if fx.abs() > ROOT_TOL * (1.0 + self.derivative(x).abs()) {
            return Err(not_bracketed());
        }
        Ok(x)
    }
}

/// `F(lambda)`. Fails when `lambda` sits on a pole.
pub fn evaluate_f(model: &UnitCellModel, lambda: f64) -> Result<f64> {
    let secular = model.secular();
    let order = model.alpha_order();
    for (k, &p) in secular.poles.iter().enumerate() {
        if (lambda - p).abs() <= f64::EPSILON * p.abs() {
            return Err(Error::PoleEvaluation {
                index: order[k],
                lambda,
            });
        }
    }
    Ok(secular.value(lambda))
}

/// Derivative of `F`; strictly positive away from the poles.
pub fn evaluate_f_derivative(model: &UnitCellModel, lambda: f64) -> f64 {
    model.secular().derivative(lambda)
}

/// Limiting gap endpoints, sorted, with `alpha_j < beta_j < alpha_{j+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGapReport")]
pub struct GapReport {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub lambda_cap: Option<f64>,
    /// Input index of the resonator behind each sorted entry.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub order: Vec<usize>,
}

#[derive(Deserialize)]
struct RawGapReport {
    alphas: Vec<f64>,
    betas: Vec<f64>,
    #[serde(default)]
    lambda_cap: Option<f64>,
    #[serde(default)]
    order: Vec<usize>,
}

impl TryFrom<RawGapReport> for GapReport {
    type Error = Error;

    fn try_from(raw: RawGapReport) -> Result<Self> {
        let mut report = GapReport::new(raw.alphas, raw.betas, raw.lambda_cap)?;
        if !raw.order.is_empty() {
            if raw.order.len() != report.alphas.len() {
                return Err(Error::Invalid("order length differs from alphas".into()));
            }
            report.order = raw.order;
        }
        Ok(report)
    }
}

impl GapReport {
    pub fn new(alphas: Vec<f64>, betas: Vec<f64>, lambda_cap: Option<f64>) -> Result<Self> {
        check_interlacing(&alphas, &betas)?;
        if let Some(cap) = lambda_cap {
            if !(cap.is_finite() && cap > 0.0) {
                return Err(Error::Invalid(format!("lambda_cap must be positive, got {cap}")));
            }
        }
        Ok(Self {
            order: (0..alphas.len()).collect(),
            alphas,
            betas,
            lambda_cap,
        })
    }

    pub fn m(&self) -> usize {
        self.alphas.len()
    }

    /// Limiting gap intervals `(alpha_j, beta_j)`.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.alphas.iter().copied().zip(self.betas.iter().copied())
    }
}

/// Checks `0 < a_1 < b_1 < a_2 < .. < a_m < b_m < inf`.
pub(crate) fn check_interlacing(alphas: &[f64], betas: &[f64]) -> Result<()> {
    if alphas.len() != betas.len() {
        return Err(Error::Invalid(format!(
            "{} alphas but {} betas",
            alphas.len(),
            betas.len()
        )));
    }
    if alphas.is_empty() {
        return Err(Error::Invalid("at least one gap is required".into()));
    }
    for (j, (&a, &b)) in alphas.iter().zip(betas).enumerate() {
        if !(a.is_finite() && b.is_finite() && a > 0.0) {
            return Err(Error::Interlacing {
                index: j,
                detail: format!("endpoints must be positive and finite, got ({a}, {b})"),
            });
        }
        if !(a < b) {
            return Err(Error::Interlacing {
                index: j,
                detail: format!("alpha {a} is not below beta {b}"),
            });
        }
        if let Some(&next) = alphas.get(j + 1) {
            if !(b < next) {
                return Err(Error::Interlacing {
                    index: j,
                    detail: format!("beta {b} is not below the next alpha {next}"),
                });
            }
        }
    }
    Ok(())
}

/// Zeros of `F`, one per bracket, returned with the sorted `alpha_j`.
pub fn compute_betas(model: &UnitCellModel) -> Result<GapReport> {
    let secular = model.secular();
    let m = secular.poles.len();
    let upper = secular.poles[m - 1] + secular.weight_sum() + 1.0;
    let mut betas = Vec::with_capacity(m);
    for j in 0..m {
        let lo = secular.poles[j];
        let (hi, hi_is_pole) = match secular.poles.get(j + 1) {
            Some(&next) => (next, true),
            None => (upper, false),
        };
        betas.push(secular.bracketed_root(j, lo, hi, hi_is_pole)?);
    }
    let mut report = GapReport::new(secular.poles, betas, None)?;
    report.order = model.alpha_order();
    Ok(report)
}

/// Square matrix paired with the diagonal weights of its inner product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedMatrix {
    pub dim: usize,
    /// Row-major entries.
    pub entries: Vec<f64>,
    pub weights: Vec<f64>,
}

impl WeightedMatrix {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.dim + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.entries[row * self.dim..(row + 1) * self.dim]
    }

    /// `max |(W A - A^T W)_{ij}|`.
    pub fn weighted_symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let lhs = self.weights[i] * self.get(i, j);
                let rhs = self.get(j, i) * self.weights[j];
                worst = worst.max((lhs - rhs).abs());
            }
        }
        worst
    }

    /// `W^(1/2) A W^(-1/2)`, real symmetric when the weighted symmetry holds.
    pub fn symmetrized(&self) -> Mat<f64> {
        let sqrt_w: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        Mat::from_fn(self.dim, self.dim, |i, j| {
            sqrt_w[i] * self.get(i, j) / sqrt_w[j]
        })
    }
}

/// The Neumann limit matrix on `C^(m+1)` with weights `(|B_0|, |B_1|, ..)`.
///
/// Row 0 couples the outer region to every chamber; row `j` couples chamber
/// `j` to the outer region only. Resonators keep their input order.
pub fn build_matrix_an(model: &UnitCellModel) -> WeightedMatrix {
    let m = model.m();
    let dim = m + 1;
    let b0 = model.b0_volume;
    let mut entries = vec![0.0; dim * dim];
    let mut weights = Vec::with_capacity(dim);
    weights.push(b0);
    for (j, r) in model.resonators.iter().enumerate() {
        let alpha = r.alpha(model.n);
        let coupling = alpha * r.b_volume / b0;
        entries[0] += coupling;
        entries[j + 1] = -coupling;
        entries[(j + 1) * dim] = -alpha;
        entries[(j + 1) * dim + j + 1] = alpha;
        weights.push(r.b_volume);
    }
    WeightedMatrix {
        dim,
        entries,
        weights,
    }
}

/// All eigenvalues of a weighted-symmetric matrix, ascending.
pub fn eigenvalues_an(matrix: &WeightedMatrix) -> Result<Vec<f64>> {
    if matrix.weights.len() != matrix.dim || matrix.entries.len() != matrix.dim * matrix.dim {
        return Err(Error::Invalid("weighted matrix has inconsistent shape".into()));
    }
    if matrix.weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::Invalid("matrix weights must be positive".into()));
    }
    let sym = matrix.symmetrized();
    let mut values = sym
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::NoConvergence {
            iterations: 0,
            best_residual: f64::NAN,
            partial: Vec::new(),
        })?;
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Eigenvalues of the Dirichlet limit matrix `diag(alpha_1, .., alpha_m)`.
pub fn eigenvalues_ad(model: &UnitCellModel) -> Vec<f64> {
    model.secular().poles
}

/// A frequency interval `(lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyInterval {
    pub lo: f64,
    pub hi: f64,
}

/// Gap intervals of the 2D Maxwell operator: `(sqrt a_j, sqrt b_j)` followed
/// by their mirror images `(-sqrt b_j, -sqrt a_j)`.
pub fn maxwell_gaps(report: &GapReport) -> Vec<FrequencyInterval> {
    let positive: Vec<FrequencyInterval> = report
        .intervals()
        .map(|(a, b)| FrequencyInterval {
            lo: a.sqrt(),
            hi: b.sqrt(),
        })
        .collect();
    let negative = positive.iter().map(|g| FrequencyInterval {
        lo: -g.hi,
        hi: -g.lo,
    });
    positive.iter().copied().chain(negative).collect()
}
