//! Explicit 2D period-cell geometry: shells `F_j`, chambers `B_j` and the
//! vertical passages joining them, all inside the unit square.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limit::{ResonatorSpec, UnitCellModel};

/// Slack for coincidence tests between edges that are computed, not stored.
const EDGE_TOL: f64 = 1e-12;

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    /// Image under the homothety with ratio `ratio` about the center.
    pub fn scaled_about_center(&self, ratio: f64) -> Self {
        let (cx, cy) = self.center();
        let hw = 0.5 * ratio * self.width();
        let hh = 0.5 * ratio * self.height();
        Self::new(cx - hw, cy - hh, cx + hw, cy + hh)
    }

    /// Half-open membership `[x0, x1) x [y0, y1)`, used for cell centers.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    /// Closure of `other` lies in the interior of `self`.
    fn strictly_contains(&self, other: &Rect) -> bool {
        other.x0 > self.x0 && other.x1 < self.x1 && other.y0 > self.y0 && other.y1 < self.y1
    }

    fn closures_disjoint(&self, other: &Rect) -> bool {
        self.x1 < other.x0 || other.x1 < self.x0 || self.y1 < other.y0 || other.y1 < self.y0
    }

    fn is_proper(&self) -> bool {
        [self.x0, self.y0, self.x1, self.y1].iter().all(|v| v.is_finite())
            && self.x1 > self.x0
            && self.y1 > self.y0
    }
}

/// Vertical passage centred at `(zx, zy)` with length `h`. At scale `epsilon`
/// its width is `eta * epsilon^2`; `d` is the half-width of the clear strip
/// around its axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Passage {
    pub zx: f64,
    pub zy: f64,
    pub h: f64,
    pub eta: f64,
    pub d: f64,
}

impl Passage {
    pub fn width_at(&self, epsilon: f64) -> f64 {
        self.eta * epsilon * epsilon
    }

    pub fn bottom(&self) -> f64 {
        self.zy - 0.5 * self.h
    }

    pub fn top(&self) -> f64 {
        self.zy + 0.5 * self.h
    }
}

#[derive(Deserialize)]
struct RawGeometry {
    #[serde(rename = "rects_F")]
    rects_f: Vec<Rect>,
    #[serde(rename = "rects_B")]
    rects_b: Vec<Rect>,
    passages: Vec<Passage>,
    b0_area: f64,
}

impl TryFrom<RawGeometry> for CellGeometry2D {
    type Error = Error;

    fn try_from(raw: RawGeometry) -> Result<Self> {
        CellGeometry2D::new(raw.rects_f, raw.rects_b, raw.passages, raw.b0_area)
    }
}

/// Resonator layout inside the unit period cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeometry")]
pub struct CellGeometry2D {
    #[serde(rename = "rects_F")]
    rects_f: Vec<Rect>,
    #[serde(rename = "rects_B")]
    rects_b: Vec<Rect>,
    passages: Vec<Passage>,
    b0_area: f64,
}

impl CellGeometry2D {
    pub fn new(
        rects_f: Vec<Rect>,
        rects_b: Vec<Rect>,
        passages: Vec<Passage>,
        b0_area: f64,
    ) -> Result<Self> {
        let geometry = Self {
            rects_f,
            rects_b,
            passages,
            b0_area,
        };
        geometry.validate()?;
        Ok(geometry)
    }

    /// The unperforated cell.
    pub fn empty() -> Self {
        Self {
            rects_f: Vec::new(),
            rects_b: Vec::new(),
            passages: Vec::new(),
            b0_area: 1.0,
        }
    }

    pub fn m(&self) -> usize {
        self.rects_f.len()
    }

    pub fn rects_f(&self) -> &[Rect] {
        &self.rects_f
    }

    pub fn rects_b(&self) -> &[Rect] {
        &self.rects_b
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn b0_area(&self) -> f64 {
        self.b0_area
    }

    /// Copy with new passage constants, e.g. after snapping widths to a grid.
    pub fn with_etas(&self, etas: &[f64]) -> Result<Self> {
        if etas.len() != self.m() {
            return Err(Error::Invalid(format!(
                "expected {} passage constants, got {}",
                self.m(),
                etas.len()
            )));
        }
        let passages = self
            .passages
            .iter()
            .zip(etas)
            .map(|(p, &eta)| Passage { eta, ..*p })
            .collect();
        Self::new(self.rects_f.clone(), self.rects_b.clone(), passages, self.b0_area)
    }

    fn validate(&self) -> Result<()> {
        let m = self.rects_f.len();
        if self.rects_b.len() != m || self.passages.len() != m {
            return Err(Error::Invalid(format!(
                "geometry lists differ in length: {} F, {} B, {} passages",
                m,
                self.rects_b.len(),
                self.passages.len()
            )));
        }
        let unit = Rect::new(0.0, 0.0, 1.0, 1.0);
        for (j, (f, b)) in self.rects_f.iter().zip(&self.rects_b).enumerate() {
            if !f.is_proper() || !b.is_proper() {
                return Err(Error::Invalid(format!("resonator {j}: degenerate rectangle")));
            }
            if !unit.strictly_contains(f) {
                return Err(Error::Invalid(format!(
                    "resonator {j}: closure of F must lie inside (0,1)^2"
                )));
            }
            if !f.strictly_contains(b) {
                return Err(Error::Invalid(format!(
                    "resonator {j}: closure of B must lie inside F"
                )));
            }
            for (i, other) in self.rects_f.iter().enumerate().take(j) {
                if !f.closures_disjoint(other) {
                    return Err(Error::Invalid(format!(
                        "resonators {i} and {j}: shells overlap"
                    )));
                }
            }
            self.validate_passage(j, f, b)?;
        }
        let expected = 1.0 - self.rects_f.iter().map(Rect::area).sum::<f64>();
        if !(self.b0_area > 0.0) || (self.b0_area - expected).abs() > 1e-9 {
            return Err(Error::Invalid(format!(
                "b0_area {} does not equal 1 - sum |F_j| = {expected}",
                self.b0_area
            )));
        }
        Ok(())
    }

    fn validate_passage(&self, j: usize, f: &Rect, b: &Rect) -> Result<()> {
        let p = &self.passages[j];
        let fail = |what: &str| Err(Error::Invalid(format!("passage {j}: {what}")));
        if !(p.h > 0.0 && p.eta > 0.0 && p.d > 0.0) {
            return fail("h, eta and d must be positive");
        }
        // Top of the axis on the upper edge of F, bottom on the upper edge of B.
        if (p.top() - f.y1).abs() > EDGE_TOL {
            return fail("top endpoint is not on the boundary of F");
        }
        if (p.bottom() - b.y1).abs() > EDGE_TOL {
            return fail("bottom endpoint is not on the boundary of B");
        }
        // The clear strip of half-width d must sit over B and inside F.
        if p.zx - p.d < b.x0 - EDGE_TOL || p.zx + p.d > b.x1 + EDGE_TOL {
            return fail("clearance strip is not supported by the edge of B");
        }
        if p.zx - p.d <= f.x0 || p.zx + p.d >= f.x1 {
            return fail("clearance strip leaves F");
        }
        Ok(())
    }

    /// Limit model of this geometry: `n = 2`, unit cross-section profile.
    pub fn to_model(&self) -> Result<UnitCellModel> {
        let resonators = self
            .rects_b
            .iter()
            .zip(&self.passages)
            .map(|(b, p)| ResonatorSpec::new(p.h, p.eta, 1.0, b.area()))
            .collect::<Result<Vec<_>>>()?;
        UnitCellModel::new(2, resonators, self.b0_area)
    }

    /// `|B_j| / |B_0|` for each resonator.
    pub fn volume_ratios(&self) -> Vec<f64> {
        self.rects_b.iter().map(|b| b.area() / self.b0_area).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single() -> CellGeometry2D {
        let f = Rect::new(0.2, 0.2, 0.8, 0.8);
        let b = f.scaled_about_center(0.5);
        let h = f.y1 - b.y1;
        let p = Passage {
            zx: 0.5,
            zy: b.y1 + 0.5 * h,
            h,
            eta: 0.01,
            d: b.width() / 4.0,
        };
        CellGeometry2D::new(vec![f], vec![b], vec![p], 1.0 - f.area()).unwrap()
    }

    #[test]
    fn valid_single_resonator() {
        let g = single();
        assert_eq!(g.m(), 1);
        let model = g.to_model().unwrap();
        let alpha = model.resonators()[0].alpha(2);
        assert!((alpha - 0.01 / (0.15 * 0.09)).abs() < 1e-12);
    }

    #[test]
    fn homothety_keeps_center() {
        let r = Rect::new(0.1, 0.3, 0.5, 0.9).scaled_about_center(0.5);
        assert!((r.x0 - 0.2).abs() < 1e-15 && (r.y1 - 0.75).abs() < 1e-15);
    }

    #[test]
    fn rejects_broken_invariants() {
        let g = single();
        let mut bad = g.clone();
        bad.b0_area = 0.5;
        assert!(bad.validate().is_err());

        let mut bad = g.clone();
        bad.passages[0].zy += 0.01;
        assert!(bad.validate().is_err());

        let mut bad = g.clone();
        bad.passages[0].d = 0.2;
        assert!(bad.validate().is_err());

        let mut bad = g.clone();
        bad.rects_f[0].x0 = 0.0;
        assert!(bad.validate().is_err());

        let mut bad = g.clone();
        bad.rects_b[0].x1 = 0.85;
        assert!(bad.validate().is_err());

        let mut two = g.clone();
        two.rects_f.push(Rect::new(0.7, 0.1, 0.9, 0.3));
        two.rects_b.push(Rect::new(0.75, 0.15, 0.85, 0.25));
        two.passages.push(g.passages[0]);
        assert!(two.validate().is_err());
    }

    #[test]
    fn json_field_names() {
        let g = single();
        let text = serde_json::to_string(&g).unwrap();
        for key in ["rects_F", "rects_B", "passages", "b0_area", "\"zx\"", "\"zy\"", "\"x0\"", "\"y1\"", "\"d\""] {
            assert!(text.contains(key), "{key} missing in {text}");
        }
        let back: CellGeometry2D = serde_json::from_str(&text).unwrap();
        assert_eq!(back, g);
        let tampered = text.replace("\"b0_area\":", "\"b0_area\":0.1e-3+");
        assert!(serde_json::from_str::<CellGeometry2D>(&tampered).is_err());
    }

    #[test]
    fn empty_geometry() {
        let g = CellGeometry2D::empty();
        assert_eq!(g.m(), 0);
        assert!(g.to_model().is_err());
        let text = serde_json::to_string(&g).unwrap();
        let back: CellGeometry2D = serde_json::from_str(&text).unwrap();
        assert_eq!(back, g);
    }
}
