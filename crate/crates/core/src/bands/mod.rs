//! Finite-difference Floquet-Bloch solver on the perforated period cell.

pub mod eigen;
pub mod operator;
pub mod raster;
pub mod study;
pub mod sweep;

pub use eigen::{lowest_eigenvalues, lowest_eigenvalues_with, EigenOptions, SpectrumSlice};
pub use operator::{assemble, BoundaryCondition, HermitianOperator};
pub use raster::{rasterize, rasterize_exterior, RasterCell, Region};
pub use sweep::{
    estimate_lambda, estimate_lambda_with, sweep_bands, sweep_bands_with, theta_samples, Band, BandSweep, Gap,
    LambdaEstimate, SweepOptions,
};
pub use study::{convergence_study, convergence_study_geometry, StudyOptions, StudyRow, StudyTable};
