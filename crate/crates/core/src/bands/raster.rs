//! Cell-centred rasterization of the perforated period cell.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::CellGeometry2D;
use crate::limit::UnitCellModel;

/// Minimum passage width in grid cells.
pub const MIN_PASSAGE_CELLS: f64 = 3.0;

/// What occupies one grid cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    Solid,
    /// The outer fluid region `B_0`.
    Exterior,
    Chamber(u32),
    Passage(u32),
}

impl Region {
    pub fn is_fluid(self) -> bool {
        self != Region::Solid
    }
}

/// Column span `[start, end)` of a passage on the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PassageColumns {
    pub start: usize,
    pub end: usize,
}

impl PassageColumns {
    pub fn cells(&self) -> usize {
        self.end - self.start
    }
}

/// Fluid mask of the unit cell on a `grid_n x grid_n` grid.
///
/// Cell `(ix, iy)` has centre `((ix + 1/2) / n, (iy + 1/2) / n)` and linear
/// index `iy * n + ix`.
#[derive(Clone, Debug)]
pub struct RasterCell {
    grid_n: usize,
    epsilon: f64,
    labels: Vec<Region>,
    geometry: CellGeometry2D,
    columns: Vec<PassageColumns>,
    snapped_etas: Vec<f64>,
}

impl RasterCell {
    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn geometry(&self) -> &CellGeometry2D {
        &self.geometry
    }

    pub fn labels(&self) -> &[Region] {
        &self.labels
    }

    pub fn label(&self, ix: usize, iy: usize) -> Region {
        self.labels[iy * self.grid_n + ix]
    }

    pub fn is_fluid(&self, ix: usize, iy: usize) -> bool {
        self.label(ix, iy).is_fluid()
    }

    pub fn mask(&self) -> Vec<bool> {
        self.labels.iter().map(|r| r.is_fluid()).collect()
    }

    pub fn fluid_cells(&self) -> usize {
        self.labels.iter().filter(|r| r.is_fluid()).count()
    }

    pub fn cell_area(&self) -> f64 {
        let h = 1.0 / self.grid_n as f64;
        h * h
    }

    pub fn fluid_area(&self) -> f64 {
        self.fluid_cells() as f64 * self.cell_area()
    }

    /// Area covered by cells with exactly this label.
    pub fn region_area(&self, region: Region) -> f64 {
        self.labels.iter().filter(|&&r| r == region).count() as f64 * self.cell_area()
    }

    pub fn passage_columns(&self) -> &[PassageColumns] {
        &self.columns
    }

    /// Passage constants after snapping each width to whole cells.
    pub fn snapped_etas(&self) -> &[f64] {
        &self.snapped_etas
    }

    /// Limit model of the geometry with snapped passage widths.
    pub fn snapped_model(&self) -> Result<UnitCellModel> {
        self.geometry.with_etas(&self.snapped_etas)?.to_model()
    }

    /// Binary PGM (P5) image, fluid white, top row first.
    pub fn write_pgm(&self, mut out: impl Write) -> std::io::Result<()> {
        let n = self.grid_n;
        write!(out, "P5\n{n} {n}\n255\n")?;
        let mut row = vec![0u8; n];
        for iy in (0..n).rev() {
            for (ix, px) in row.iter_mut().enumerate() {
                *px = if self.is_fluid(ix, iy) { 255 } else { 0 };
            }
            out.write_all(&row)?;
        }
        Ok(())
    }

    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut out = std::io::BufWriter::new(file);
        self.write_pgm(&mut out)?;
        out.flush()?;
        Ok(())
    }

    /// Number of 4-connected fluid components inside the cell (no wrap).
    pub fn fluid_components(&self) -> usize {
        let n = self.grid_n;
        let mut seen = vec![false; n * n];
        let mut stack = Vec::new();
        let mut components = 0;
        for start in 0..n * n {
            if seen[start] || !self.labels[start].is_fluid() {
                continue;
            }
            components += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(idx) = stack.pop() {
                let (ix, iy) = (idx % n, idx / n);
                let mut visit = |j: usize| {
                    if !seen[j] && self.labels[j].is_fluid() {
                        seen[j] = true;
                        stack.push(j);
                    }
                };
                if ix > 0 {
                    visit(idx - 1);
                }
                if ix + 1 < n {
                    visit(idx + 1);
                }
                if iy > 0 {
                    visit(idx - n);
                }
                if iy + 1 < n {
                    visit(idx + n);
                }
            }
        }
        components
    }
}

fn check_grid(grid_n: usize) -> Result<()> {
    if grid_n < 4 {
        return Err(Error::Invalid(format!("grid_n must be at least 4, got {grid_n}")));
    }
    Ok(())
}

/// Fluid region `Y_eps` at scale `epsilon`.
///
/// Each passage width `eta_j epsilon^2` is snapped to a whole number of cells
/// (at least three) centred on the passage axis; the snapped constants are
/// recorded on the result.
pub fn rasterize(geometry: &CellGeometry2D, epsilon: f64, grid_n: usize) -> Result<RasterCell> {
    check_grid(grid_n)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let nf = grid_n as f64;
    let mut columns = Vec::with_capacity(geometry.m());
    let mut snapped_etas = Vec::with_capacity(geometry.m());
    for (j, p) in geometry.passages().iter().enumerate() {
        let width = p.width_at(epsilon);
        if width > p.d {
            return Err(Error::PassageExceedsClearance {
                index: j,
                width,
                clearance: p.d,
            });
        }
        let cells = width * nf;
        if cells < MIN_PASSAGE_CELLS * (1.0 - 1e-9) {
            return Err(Error::UnresolvedPassage { index: j, cells });
        }
        let k = cells.round().max(MIN_PASSAGE_CELLS) as usize;
        let start = (p.zx * nf - 0.5 * k as f64).round().max(0.0) as usize;
        columns.push(PassageColumns {
            start,
            end: (start + k).min(grid_n),
        });
        snapped_etas.push(k as f64 / (nf * epsilon * epsilon));
    }

    let mut labels = vec![Region::Exterior; grid_n * grid_n];
    for iy in 0..grid_n {
        let y = (iy as f64 + 0.5) / nf;
        for ix in 0..grid_n {
            let x = (ix as f64 + 0.5) / nf;
            labels[iy * grid_n + ix] = classify(geometry, &columns, ix, x, y);
        }
    }

    let cell = RasterCell {
        grid_n,
        epsilon,
        labels,
        geometry: geometry.clone(),
        columns,
        snapped_etas,
    };
    let components = cell.fluid_components();
    if components != 1 {
        return Err(Error::DisconnectedFluid { components });
    }
    Ok(cell)
}

fn classify(
    geometry: &CellGeometry2D,
    columns: &[PassageColumns],
    ix: usize,
    x: f64,
    y: f64,
) -> Region {
    for (j, f) in geometry.rects_f().iter().enumerate() {
        if !f.contains(x, y) {
            continue;
        }
        let b = &geometry.rects_b()[j];
        if b.contains(x, y) {
            return Region::Chamber(j as u32);
        }
        let cols = columns[j];
        if ix >= cols.start && ix < cols.end && y >= b.y1 {
            return Region::Passage(j as u32);
        }
        return Region::Solid;
    }
    Region::Exterior
}

/// Outer region `B_0` alone: every shell `F_j` is solid, chambers included.
pub fn rasterize_exterior(geometry: &CellGeometry2D, grid_n: usize) -> Result<RasterCell> {
    check_grid(grid_n)?;
    let nf = grid_n as f64;
    let mut labels = vec![Region::Exterior; grid_n * grid_n];
    for iy in 0..grid_n {
        let y = (iy as f64 + 0.5) / nf;
        for ix in 0..grid_n {
            let x = (ix as f64 + 0.5) / nf;
            if geometry.rects_f().iter().any(|f| f.contains(x, y)) {
                labels[iy * grid_n + ix] = Region::Solid;
            }
        }
    }
    Ok(RasterCell {
        grid_n,
        epsilon: 1.0,
        labels,
        geometry: geometry.clone(),
        columns: Vec::new(),
        snapped_etas: geometry.passages().iter().map(|p| p.eta).collect(),
    })
}
