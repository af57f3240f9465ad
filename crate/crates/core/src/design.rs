//! Inverse design: resonator geometry whose limiting gaps are prescribed.
//!
//! Given interlacing targets `a_1 < b_1 < a_2 < .. < a_m < b_m`, the volume
//! ratios `rho_j = |B_j| / |B_0|` are the unique solution of
//!
//! ```text
//! 1 + sum_j rho_j a_j / (a_j - b_k) = 0,   k = 1..m,
//! ```
//!
//! available in product form. Shells `F_j` of area `tau_j = rho_j / (gamma^2 +
//! sum rho)` are laid out in a row, chambers are their homothetic copies with
//! ratio `gamma`, and each passage constant is chosen so the resonator
//! frequency equals `a_j`.

use faer::linalg::solvers::Solve;
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CellGeometry2D, Passage, Rect};
use crate::limit::{check_interlacing, compute_betas, GapReport};

pub const DEFAULT_GAMMA: f64 = 0.5;
pub const DEFAULT_LAYOUT_MARGIN: f64 = 0.02;
/// Maximum relative deviation accepted by [`roundtrip_verify`].
pub const ROUNDTRIP_RTOL: f64 = 1e-9;

/// Passage clearance as a fraction of the chamber width.
const CLEARANCE_FRACTION: f64 = 0.4;

/// Dimension of the emitted geometry.
const DIM: i32 = 2;

#[derive(Deserialize)]
struct RawTargets {
    alphas: Vec<f64>,
    betas: Vec<f64>,
}

impl TryFrom<RawTargets> for TargetGaps {
    type Error = Error;

    fn try_from(raw: RawTargets) -> Result<Self> {
        TargetGaps::new(raw.alphas, raw.betas)
    }
}

/// Prescribed gap intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTargets")]
pub struct TargetGaps {
    alphas: Vec<f64>,
    betas: Vec<f64>,
}

impl TargetGaps {
    pub fn new(alphas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        check_interlacing(&alphas, &betas)?;
        Ok(Self { alphas, betas })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn m(&self) -> usize {
        self.alphas.len()
    }
}

/// Scalars of a design before it is turned into rectangles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignSolution {
    pub rhos: Vec<f64>,
    pub taus: Vec<f64>,
    pub gamma: f64,
    pub etas: Vec<f64>,
}

/// A synthesized design and its geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub solution: DesignSolution,
    pub geometry: CellGeometry2D,
}

/// Volume ratios from the product formula.
pub fn solve_rho_closed_form(targets: &TargetGaps) -> Result<Vec<f64>> {
    let (a, b) = (&targets.alphas, &targets.betas);
    let m = a.len();
    let mut rhos = Vec::with_capacity(m);
    for j in 0..m {
        let mut rho = (b[j] - a[j]) / a[j];
        for i in (0..m).filter(|&i| i != j) {
            rho *= (b[i] - a[j]) / (a[i] - a[j]);
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::NonPositiveRho { index: j, value: rho });
        }
        rhos.push(rho);
    }
    Ok(rhos)
}

/// Volume ratios by a dense LU solve of the defining linear system.
pub fn solve_rho_linear_system(targets: &TargetGaps) -> Result<Vec<f64>> {
    let (a, b) = (&targets.alphas, &targets.betas);
    let m = a.len();
    let matrix = Mat::from_fn(m, m, |k, j| a[j] / (a[j] - b[k]));
    let rhs = Mat::from_fn(m, 1, |_, _| -1.0);
    let solution = matrix.partial_piv_lu().solve(&rhs);
    let rhos: Vec<f64> = (0..m).map(|j| solution[(j, 0)]).collect();
    if rhos.iter().any(|r| !r.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok(rhos)
}

/// Shell areas `tau_j = rho_j / (gamma^n + sum rho)` in dimension `n`.
pub fn taus_in_dimension(rhos: &[f64], gamma: f64, n: i32) -> Vec<f64> {
    let denom = gamma.powi(n) + rhos.iter().sum::<f64>();
    rhos.iter().map(|r| r / denom).collect()
}

/// Shell areas for the 2D geometry path; requires `0 < gamma < 1`.
pub fn compute_taus(rhos: &[f64], gamma: f64) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    if let Some((j, &r)) = rhos.iter().enumerate().find(|(_, r)| !(**r > 0.0)) {
        return Err(Error::NonPositiveRho { index: j, value: r });
    }
    Ok(taus_in_dimension(rhos, gamma, DIM))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Invalid(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    Ok(())
}

/// Row layout of rectangles with areas `taus` and heights at most `caps`.
///
/// Squares when they fit; otherwise the smallest uniform stretch `t` such that
/// heights `min(t sqrt(tau_j), cap_j, 1 - 2 margin)` leave room for every width.
fn row_layout(taus: &[f64], caps: &[f64], margin: f64) -> Result<Vec<Rect>> {
    let m = taus.len();
    let available = 1.0 - (m as f64 + 1.0) * margin;
    let max_height = 1.0 - 2.0 * margin;
    if !(margin > 0.0) || available <= 0.0 || max_height <= 0.0 {
        return Err(Error::InfeasibleLayout(format!(
            "margin {margin} leaves no room for {m} shells"
        )));
    }
    let sides: Vec<f64> = taus.iter().map(|t| t.sqrt()).collect();
    let limits: Vec<f64> = caps.iter().map(|c| c.min(max_height)).collect();
    let heights_at = |stretch: f64| -> Vec<f64> {
        sides.iter().zip(&limits).map(|(s, l)| (s * stretch).min(*l)).collect()
    };
    let total_width = |heights: &[f64]| -> f64 {
        taus.iter().zip(heights).map(|(t, h)| t / h).sum()
    };

    let full_stretch = sides
        .iter()
        .zip(&limits)
        .map(|(s, l)| l / s)
        .fold(1.0, f64::max);
    if total_width(&heights_at(full_stretch)) > available {
        return Err(Error::InfeasibleLayout(format!(
            "shell areas {:.6} do not fit in a row: need width {:.6}, have {:.6}",
            taus.iter().sum::<f64>(),
            total_width(&heights_at(full_stretch)),
            available
        )));
    }
    let stretch = if total_width(&heights_at(1.0)) <= available {
        1.0
    } else {
        let (mut lo, mut hi) = (1.0, full_stretch);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if total_width(&heights_at(mid)) <= available {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };

    let heights = heights_at(stretch);
    let widths: Vec<f64> = taus.iter().zip(&heights).map(|(t, h)| t / h).collect();
    let gap = margin + (available - widths.iter().sum::<f64>()).max(0.0) / (m as f64 + 1.0);
    let mut x = gap;
    let mut rects = Vec::with_capacity(m);
    for (w, h) in widths.iter().zip(&heights) {
        rects.push(Rect::new(x, 0.5 - 0.5 * h, x + w, 0.5 + 0.5 * h));
        x += w + gap;
    }
    Ok(rects)
}

/// Row layout with the widest margin up to `max_margin` that fits. Any
/// shell areas summing below one fit once the margin is thin enough.
fn fitted_row_layout(taus: &[f64], caps: &[f64], max_margin: f64) -> Result<Vec<Rect>> {
    match row_layout(taus, caps, max_margin) {
        Err(Error::InfeasibleLayout(first)) => {
            let (mut lo, mut hi) = (0.0, max_margin);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if row_layout(taus, caps, mid).is_ok() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if lo == 0.0 {
                return Err(Error::InfeasibleLayout(first));
            }
            log::info!("layout margin reduced from {max_margin} to {lo:.6}");
            row_layout(taus, caps, lo)
        }
        other => other,
    }
}

/// Full design: volume ratios, shell areas, rectangles and passage constants.
pub fn synthesize(targets: &TargetGaps, gamma: f64, layout_margin: f64) -> Result<Design> {
    check_gamma(gamma)?;
    let rhos = solve_rho_closed_form(targets)?;
    let taus = compute_taus(&rhos, gamma)?;
    // eta_j < d_j holds while the shell height stays below
    // sqrt(2 c / (alpha_j gamma (1 - gamma))); keep a tenth in reserve.
    let caps: Vec<f64> = targets
        .alphas
        .iter()
        .map(|a| 0.9 * (2.0 * CLEARANCE_FRACTION / (a * gamma * (1.0 - gamma))).sqrt())
        .collect();
    // Without room for the caps the clearance check below names the culprit.
    let rects_f = match fitted_row_layout(&taus, &caps, layout_margin) {
        Err(Error::InfeasibleLayout(_)) => {
            fitted_row_layout(&taus, &vec![f64::INFINITY; taus.len()], layout_margin)?
        }
        other => other?,
    };

    let mut rects_b = Vec::with_capacity(rects_f.len());
    let mut passages = Vec::with_capacity(rects_f.len());
    let mut etas = Vec::with_capacity(rects_f.len());
    for (j, (f, &alpha)) in rects_f.iter().zip(&targets.alphas).enumerate() {
        let b = f.scaled_about_center(gamma);
        let h = f.y1 - b.y1;
        let (cx, _) = f.center();
        // Unit cross-section profile, so the exponent 1/(n-1) is 1.
        let eta = alpha * h * b.area();
        let d = CLEARANCE_FRACTION * b.width();
        if d <= eta {
            return Err(Error::GammaTooLarge {
                index: j,
                clearance: d,
                eta,
            });
        }
        passages.push(Passage {
            zx: cx,
            zy: 0.5 * (b.y1 + f.y1),
            h,
            eta,
            d,
        });
        rects_b.push(b);
        etas.push(eta);
    }
    let b0_area = 1.0 - rects_f.iter().map(Rect::area).sum::<f64>();
    let geometry = CellGeometry2D::new(rects_f, rects_b, passages, b0_area)?;
    Ok(Design {
        solution: DesignSolution {
            rhos,
            taus,
            gamma,
            etas,
        },
        geometry,
    })
}

pub fn synthesize_geometry(
    targets: &TargetGaps,
    gamma: f64,
    layout_margin: f64,
) -> Result<CellGeometry2D> {
    synthesize(targets, gamma, layout_margin).map(|d| d.geometry)
}

/// Forward limit model of `geometry`, checked against `targets`.
pub fn roundtrip_verify(geometry: &CellGeometry2D, targets: &TargetGaps) -> Result<GapReport> {
    if geometry.m() != targets.m() {
        return Err(Error::Invalid(format!(
            "geometry has {} resonators, targets have {}",
            geometry.m(),
            targets.m()
        )));
    }
    let report = compute_betas(&geometry.to_model()?)?;
    let pairs = [
        ("alpha", &report.alphas, &targets.alphas),
        ("beta", &report.betas, &targets.betas),
    ];
    for (quantity, got, want) in pairs {
        for (index, (g, w)) in got.iter().zip(want.iter()).enumerate() {
            let deviation = (g - w).abs() / w.abs();
            if !(deviation < ROUNDTRIP_RTOL) {
                return Err(Error::RoundtripMismatch {
                    quantity,
                    index,
                    deviation,
                });
            }
        }
    }
    Ok(report)
}
