//! Five-point finite-difference Laplacian on the fluid cells of a raster.

use std::f64::consts::TAU;

use faer::c64;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};

use super::raster::RasterCell;

/// Condition imposed on the outer faces of the period cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryCondition {
    /// `u(x + e_k) = exp(i theta_k) u(x)` across opposite faces.
    Quasi([f64; 2]),
    NeumannOuter,
    DirichletOuter,
}

impl BoundaryCondition {
    /// Quasi-periodic condition with both phases reduced to `[0, 2 pi)`.
    pub fn quasi(theta_x: f64, theta_y: f64) -> Self {
        let wrap = |t: f64| {
            let r = t.rem_euclid(TAU);
            if r >= TAU {
                0.0
            } else {
                r
            }
        };
        BoundaryCondition::Quasi([wrap(theta_x), wrap(theta_y)])
    }

    pub fn theta(&self) -> Option<[f64; 2]> {
        match self {
            BoundaryCondition::Quasi(t) => Some(*t),
            _ => None,
        }
    }
}

/// Sparse Hermitian operator stored as a full (both triangles) CSC matrix.
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    bc: BoundaryCondition,
    scale: f64,
    pattern: SymbolicSparseColMat<usize>,
    values: Vec<c64>,
    diagonal: Vec<usize>,
    dof_cells: Vec<usize>,
}

impl HermitianOperator {
    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn dim(&self) -> usize {
        self.dof_cells.len()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Coefficient `epsilon^-2 n^2` of one face difference.
    pub fn face_scale(&self) -> f64 {
        self.scale
    }

    /// Raster cell index of each unknown.
    pub fn dof_cells(&self) -> &[usize] {
        &self.dof_cells
    }

    pub fn as_faer(&self) -> SparseColMatRef<'_, usize, c64> {
        SparseColMatRef::new(self.pattern.as_ref(), &self.values)
    }

    pub(crate) fn pattern(&self) -> &SymbolicSparseColMat<usize> {
        &self.pattern
    }

    /// Values of `A - shift I` on the same pattern.
    pub(crate) fn shifted_values(&self, shift: f64) -> Vec<c64> {
        let mut values = self.values.clone();
        for &p in &self.diagonal {
            values[p] -= c64::new(shift, 0.0);
        }
        values
    }

    /// Largest column sum of `|A[i,j]|`.
    pub fn norm_one(&self) -> f64 {
        let p = self.pattern.as_ref();
        let col_ptr = p.col_ptr();
        (0..self.dim())
            .map(|c| self.values[col_ptr[c]..col_ptr[c + 1]].iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Entry `A[row, col]`, zero outside the pattern.
    pub fn entry(&self, row: usize, col: usize) -> c64 {
        let p = self.pattern.as_ref();
        let start = p.col_ptr()[col];
        let rows = &p.row_idx()[start..p.col_ptr()[col + 1]];
        match rows.binary_search(&row) {
            Ok(k) => self.values[start + k],
            Err(_) => c64::new(0.0, 0.0),
        }
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[c64], y: &mut [c64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        y.iter_mut().for_each(|v| *v = c64::new(0.0, 0.0));
        let p = self.pattern.as_ref();
        let (col_ptr, row_idx) = (p.col_ptr(), p.row_idx());
        for (col, &xc) in x.iter().enumerate() {
            for k in col_ptr[col]..col_ptr[col + 1] {
                y[row_idx[k]] += self.values[k] * xc;
            }
        }
    }

    /// Largest `|A[i,j] - conj(A[j,i])|` over the pattern.
    pub fn hermitian_defect(&self) -> f64 {
        let p = self.pattern.as_ref();
        let (col_ptr, row_idx) = (p.col_ptr(), p.row_idx());
        let mut worst = 0.0f64;
        for col in 0..self.dim() {
            for k in col_ptr[col]..col_ptr[col + 1] {
                let row = row_idx[k];
                let d = self.values[k] - self.entry(col, row).conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }
}

/// Assemble `-epsilon^-2 Laplacian` on the fluid cells with Neumann walls
/// against solid cells and the given condition on the outer faces.
pub fn assemble(cell: &RasterCell, bc: BoundaryCondition) -> HermitianOperator {
    let n = cell.grid_n();
    let nf = n as f64;
    let scale = nf * nf / (cell.epsilon() * cell.epsilon());
    let labels = cell.labels();

    let mut dof_of_cell = vec![usize::MAX; n * n];
    let mut dof_cells = Vec::with_capacity(cell.fluid_cells());
    for (idx, region) in labels.iter().enumerate() {
        if region.is_fluid() {
            dof_of_cell[idx] = dof_cells.len();
            dof_cells.push(idx);
        }
    }

    let phase = |t: f64| c64::new(t.cos(), t.sin());
    let (px, py) = match bc {
        BoundaryCondition::Quasi([tx, ty]) => (Some(phase(tx)), Some(phase(ty))),
        _ => (None, None),
    };
    let dirichlet = matches!(bc, BoundaryCondition::DirichletOuter);

    let mut col_ptr = Vec::with_capacity(dof_cells.len() + 1);
    let mut row_idx = Vec::with_capacity(5 * dof_cells.len());
    let mut values = Vec::with_capacity(5 * dof_cells.len());
    let mut diagonal = Vec::with_capacity(dof_cells.len());
    let mut entries: Vec<(usize, c64)> = Vec::with_capacity(5);
    col_ptr.push(0);

    for (dof, &idx) in dof_cells.iter().enumerate() {
        let (ix, iy) = (idx % n, idx / n);
        entries.clear();
        let mut diag = 0.0;
        // Entries of column `dof` are A[row, dof]. Across an outer face the
        // ghost value is the wrapped cell times its phase.
        let mut face = |nb_cell: usize, factor: c64| {
            let nb = dof_of_cell[nb_cell];
            if nb != usize::MAX {
                diag += scale;
                entries.push((nb, -factor * scale));
            }
        };
        let one = c64::new(1.0, 0.0);
        let mut boundary_faces = 0usize;

        // x direction
        if ix > 0 {
            face(idx - 1, one);
        } else if let Some(p) = px {
            face(idx + n - 1, p);
        } else {
            boundary_faces += 1;
        }
        if ix + 1 < n {
            face(idx + 1, one);
        } else if let Some(p) = px {
            face(idx + 1 - n, p.conj());
        } else {
            boundary_faces += 1;
        }
        // y direction
        if iy > 0 {
            face(idx - n, one);
        } else if let Some(p) = py {
            face(idx + n * (n - 1), p);
        } else {
            boundary_faces += 1;
        }
        if iy + 1 < n {
            face(idx + n, one);
        } else if let Some(p) = py {
            face(idx - n * (n - 1), p.conj());
        } else {
            boundary_faces += 1;
        }

        if dirichlet {
            diag += 2.0 * scale * boundary_faces as f64;
        }
        entries.push((dof, c64::new(diag, 0.0)));
        entries.sort_unstable_by_key(|e| e.0);
        for &(row, v) in &entries {
            if row == dof {
                diagonal.push(values.len());
            }
            row_idx.push(row);
            values.push(v);
        }
        col_ptr.push(row_idx.len());
    }

    let dim = dof_cells.len();
    let pattern = SymbolicSparseColMat::new_checked(dim, dim, col_ptr, None, row_idx);
    HermitianOperator {
        bc,
        scale,
        pattern,
        values,
        diagonal,
        dof_cells,
    }
}
