//! End-to-end acceptance suite. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use resgap::bands::{
    assemble, convergence_study_geometry, lowest_eigenvalues, rasterize, sweep_bands, BoundaryCondition,
    StudyOptions, StudyTable,
};
use resgap::design::{
    roundtrip_verify, solve_rho_closed_form, solve_rho_linear_system, synthesize_geometry, TargetGaps,
    DEFAULT_LAYOUT_MARGIN,
};
use resgap::geometry::CellGeometry2D;
use resgap::limit::{build_matrix_an, compute_betas, eigenvalues_an, GapReport, ResonatorSpec, UnitCellModel};
use resgap::Error;

const SEED: u64 = 20_240_611;
const SAMPLES: usize = 1000;
const GRID_N: usize = 512;
/// Passage widths, in grid cells, of the refinement ladder.
const LADDER_CELLS: [f64; 3] = [12.0, 6.0, 3.0];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `1 + sum alpha_j rho_j / (alpha_j - lambda)` straight from the resonator data.
fn f_oracle(model: &UnitCellModel, lambda: f64) -> f64 {
    let n = model.n() as i32;
    1.0 + model
        .resonators()
        .iter()
        .map(|r| {
            let alpha = r.eta.powi(n - 1) * r.d_profile_measure / (r.h * r.b_volume);
            alpha * (r.b_volume / model.b0_volume()) / (alpha - lambda)
        })
        .sum::<f64>()
}

/// Models with `m <= 8` and frequencies spread over `[0.1, 100]`, at least
/// 2% apart, in random input order.
fn random_model(rng: &mut ChaCha8Rng) -> UnitCellModel {
    let n = rng.random_range(2..=3usize);
    let m = rng.random_range(1..=8usize);
    let mut log_alpha = 0.1f64.ln();
    let mut rs: Vec<ResonatorSpec> = (0..m)
        .map(|_| {
            log_alpha += rng.random_range(0.02..1.0) * (1000.0f64.ln() / 8.0);
            let h = rng.random_range(0.1..1.0);
            let d = rng.random_range(0.1..1.0);
            let b = rng.random_range(0.05..1.0);
            let eta = (log_alpha.exp() * h * b / d).powf(1.0 / (n - 1) as f64);
            ResonatorSpec::new(h, eta, d, b).unwrap()
        })
        .collect();
    for i in (1..rs.len()).rev() {
        rs.swap(i, rng.random_range(0..=i));
    }
    UnitCellModel::new(n, rs, rng.random_range(0.1..1.0)).unwrap()
}

fn random_targets(rng: &mut ChaCha8Rng) -> TargetGaps {
    let m = rng.random_range(1..=8usize);
    let mut acc = 0.0;
    let points: Vec<f64> = (0..2 * m)
        .map(|_| {
            acc += rng.random_range(0.1..1.0);
            acc
        })
        .collect();
    TargetGaps::new(
        points.iter().step_by(2).copied().collect(),
        points.iter().skip(1).step_by(2).copied().collect(),
    )
    .unwrap()
}

fn models() -> Vec<UnitCellModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..SAMPLES).map(|_| random_model(&mut rng)).collect()
}

fn interlacing_and_roots(models: &[UnitCellModel]) -> (Outcome, Vec<GapReport>) {
    let start = Instant::now();
    let reports: Vec<GapReport> = models.iter().map(|m| compute_betas(m).unwrap()).collect();
    let elapsed = start.elapsed();
    let mut interlace_failures = 0;
    let mut worst_f = 0.0f64;
    for (model, report) in models.iter().zip(&reports) {
        let (a, b) = (&report.alphas, &report.betas);
        for j in 0..report.m() {
            let next_ok = j + 1 == report.m() || b[j] < a[j + 1];
            if !(a[j] < b[j] && next_ok) {
                interlace_failures += 1;
            }
            worst_f = worst_f.max(f_oracle(model, b[j]).abs());
        }
    }
    let pass = interlace_failures == 0 && worst_f < 1e-10 && elapsed < Duration::from_secs(5);
    (
        outcome(
            pass,
            format!(
                "{SAMPLES} models, interlacing failures {interlace_failures}, max |F(beta)| {worst_f:.2e}, {elapsed:.2?}"
            ),
        ),
        reports,
    )
}

fn matrix_oracle(models: &[UnitCellModel], reports: &[GapReport]) -> Outcome {
    let mut worst = 0.0f64;
    for (model, report) in models.iter().zip(reports) {
        let values = eigenvalues_an(&build_matrix_an(model)).unwrap();
        let scale = report.betas[report.m() - 1];
        worst = worst.max(values[0].abs() / scale);
        for (v, b) in values[1..].iter().zip(&report.betas) {
            worst = worst.max(rel(*v, *b));
        }
    }
    outcome(worst <= 1e-9, format!("{SAMPLES} models, max relative deviation {worst:.2e}"))
}

fn inverse_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut worst = 0.0f64;
    let mut non_positive = 0;
    for _ in 0..SAMPLES {
        let t = random_targets(&mut rng);
        let closed = solve_rho_closed_form(&t).unwrap();
        let solved = solve_rho_linear_system(&t).unwrap();
        for (c, s) in closed.iter().zip(&solved) {
            worst = worst.max(rel(*c, *s));
            non_positive += usize::from(!(*c > 0.0));
        }
    }
    outcome(
        worst <= 1e-9 && non_positive == 0,
        format!("{SAMPLES} targets, max relative deviation {worst:.2e}, non-positive ratios {non_positive}"),
    )
}

fn worked_targets(m: usize) -> TargetGaps {
    let alphas = (0..m).map(|j| (2 * j + 1) as f64).collect();
    let betas = (0..m).map(|j| (2 * j + 2) as f64).collect();
    TargetGaps::new(alphas, betas).unwrap()
}

fn design_roundtrip() -> Outcome {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for m in 1..=3 {
        let t = worked_targets(m);
        for gamma in [0.3, 0.5, 0.7] {
            let checked = synthesize_geometry(&t, gamma, DEFAULT_LAYOUT_MARGIN)
                .and_then(|g| roundtrip_verify(&g, &t));
            match checked {
                Ok(report) => {
                    for (got, want) in report.alphas.iter().zip(t.alphas()).chain(report.betas.iter().zip(t.betas())) {
                        worst = worst.max(rel(*got, *want));
                    }
                }
                Err(e) => failures.push(format!("m={m} gamma={gamma}: {e}")),
            }
        }
    }
    let rhos = solve_rho_closed_form(&worked_targets(2)).unwrap();
    let rho_ok = rel(rhos[0], 1.5) < 1e-12 && rel(rhos[1], 1.0 / 6.0) < 1e-12;
    outcome(
        failures.is_empty() && worst <= 1e-9 && rho_ok,
        format!("9 designs, max relative deviation {worst:.2e}, rho {rhos:?}, failures {failures:?}"),
    )
}

fn lowest(grid_n: usize, bc: BoundaryCondition, k: usize) -> Vec<f64> {
    let cell = rasterize(&CellGeometry2D::empty(), 1.0, grid_n).unwrap();
    lowest_eigenvalues(&assemble(&cell, bc), k).unwrap().eigenvalues
}

fn discretization() -> Outcome {
    let corner = 2.0 * PI * PI;
    let d256 = lowest(256, BoundaryCondition::DirichletOuter, 1)[0];
    let d128 = lowest(128, BoundaryCondition::DirichletOuter, 1)[0];
    let ratio = (d128 - corner).abs() / (d256 - corner).abs();
    let quasi = lowest(256, BoundaryCondition::quasi(PI, PI), 1)[0];
    let neumann = lowest(256, BoundaryCondition::NeumannOuter, 2);
    let pass = rel(d256, corner) < 0.005
        && (3.5..=4.5).contains(&ratio)
        && rel(quasi, corner) < 0.005
        && neumann[0].abs() < 1e-9
        && rel(neumann[1], PI * PI) < 0.005;
    outcome(
        pass,
        format!(
            "D {d256:.6} ({:.3}%), ratio {ratio:.3}, Q(pi,pi) {quasi:.6} ({:.3}%), N1 {:.1e}, N2 {:.6} ({:.3}%)",
            100.0 * rel(d256, corner),
            100.0 * rel(quasi, corner),
            neumann[0],
            neumann[1],
            100.0 * rel(neumann[1], PI * PI)
        ),
    )
}

/// Bracketing tally over every sweep the suite runs.
#[derive(Default)]
struct Bracketing {
    sweeps: usize,
    pairs: usize,
    violations: usize,
}

impl Bracketing {
    fn record_study(&mut self, result: &Result<StudyTable, Error>, theta_grid: usize, k: usize, rows: usize) {
        match result {
            Ok(_) => {
                self.sweeps += rows;
                self.pairs += rows * theta_grid * theta_grid * k;
            }
            Err(Error::Bracketing { .. }) => self.violations += 1,
            Err(_) => {}
        }
    }
}

fn ladder(geometry: &CellGeometry2D) -> Vec<f64> {
    let eta = geometry.passages().iter().map(|p| p.eta).fold(f64::INFINITY, f64::min);
    LADDER_CELLS
        .iter()
        .map(|cells| (cells / (GRID_N as f64 * eta)).sqrt())
        .collect()
}

fn nonincreasing(series: &[f64]) -> bool {
    series.windows(2).all(|w| w[1] <= w[0])
}

fn refinement(table: &Result<StudyTable, Error>, elapsed: Duration) -> Outcome {
    let table = match table {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("study failed: {e}")),
    };
    let rows = &table.rows;
    let counts: Vec<usize> = rows.iter().map(|r| r.gaps.len()).collect();
    if counts.iter().any(|&c| c != 1) {
        return outcome(false, format!("gap counts {counts:?}"));
    }
    let lo: Vec<f64> = rows.iter().map(|r| rel(r.gaps[0].lo, 1.0)).collect();
    let hi: Vec<f64> = rows.iter().map(|r| rel(r.gaps[0].hi, 2.0)).collect();
    let dir: Vec<f64> = rows.iter().map(|r| rel(r.dirichlet[0], 1.0)).collect();
    let neu: Vec<f64> = rows.iter().map(|r| rel(r.neumann[1], 2.0)).collect();
    let last = lo.len() - 1;
    let pass = [&lo, &hi, &dir, &neu].iter().all(|s| nonincreasing(s))
        && lo[last] < 0.25
        && hi[last] < 0.25
        && rows.iter().all(|r| r.converged)
        && elapsed < Duration::from_secs(600);
    let pct = |s: &[f64]| s.iter().map(|x| format!("{:.1}%", 100.0 * x)).collect::<Vec<_>>().join(" ");
    outcome(
        pass,
        format!(
            "eps {:?}: gap_lo {} | gap_hi {} | D {} | N {} | {elapsed:.0?}",
            rows.iter().map(|r| (r.epsilon * 1e4).round() / 1e4).collect::<Vec<_>>(),
            pct(&lo),
            pct(&hi),
            pct(&dir),
            pct(&neu)
        ),
    )
}

fn main() {
    let _ = env_logger::builder().is_test(true).try_init();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut report = |n: usize, name: &'static str, o: Outcome| {
        println!(
            "criterion {n} {name}: {} ({})",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((n, name, o));
    };

    let models = models();
    let (first, reports) = interlacing_and_roots(&models);
    report(1, "interlacing and root accuracy", first);
    report(2, "matrix oracle", matrix_oracle(&models, &reports));
    report(3, "inverse design oracle", inverse_oracle());
    report(4, "design roundtrip", design_roundtrip());
    report(5, "discretization sanity", discretization());

    let mut bracketing = Bracketing::default();
    let empty = rasterize(&CellGeometry2D::empty(), 1.0, 48).unwrap();
    match sweep_bands(&empty, 5, 6) {
        Ok(sweep) => {
            bracketing.sweeps += 1;
            bracketing.pairs += sweep.slices.len() * 6;
            bracketing.violations += sweep.bracketing_violations().len();
        }
        Err(Error::Bracketing { .. }) => bracketing.violations += 1,
        Err(e) => panic!("empty sweep: {e}"),
    }

    let opts = StudyOptions::default();
    let single = synthesize_geometry(&worked_targets(1), 0.5, DEFAULT_LAYOUT_MARGIN).unwrap();
    let eps_single = ladder(&single);
    let start = Instant::now();
    let study_single = convergence_study_geometry(&single, &eps_single, GRID_N, &opts);
    let elapsed = start.elapsed();
    bracketing.record_study(&study_single, opts.theta_grid, 3, eps_single.len());
    let refinement_outcome = refinement(&study_single, elapsed);

    let double = synthesize_geometry(&worked_targets(2), 0.5, DEFAULT_LAYOUT_MARGIN).unwrap();
    let eps_double = ladder(&double)[LADDER_CELLS.len() - 1];
    let study_double = convergence_study_geometry(&double, &[eps_double], GRID_N, &opts);
    bracketing.record_study(&study_double, opts.theta_grid, 4, 1);

    report(
        6,
        "bracketing",
        outcome(
            bracketing.violations == 0 && bracketing.sweeps == eps_single.len() + 2,
            format!(
                "{} sweeps, {} (theta, k) pairs, {} violations",
                bracketing.sweeps, bracketing.pairs, bracketing.violations
            ),
        ),
    );
    report(7, "refinement trend", refinement_outcome);

    let smallest = |study: &Result<StudyTable, Error>| {
        study.as_ref().ok().and_then(|t| t.rows.last()).map(|r| (r.epsilon, r.gaps.len()))
    };
    let cardinality = [(1usize, smallest(&study_single)), (2, smallest(&study_double))];
    report(
        8,
        "gap cardinality",
        outcome(
            cardinality.iter().all(|(m, got)| got.map(|g| g.1) == Some(*m)),
            cardinality
                .iter()
                .map(|(m, got)| match got {
                    Some((eps, count)) => format!("m={m} at eps {eps:.4}: {count} gap(s)"),
                    None => format!("m={m}: study failed"),
                })
                .collect::<Vec<_>>()
                .join(", "),
        ),
    );

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", results.len());
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
