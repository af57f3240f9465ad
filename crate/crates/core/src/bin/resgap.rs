use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use resgap::bands::{
    convergence_study_geometry, estimate_lambda_with, rasterize, sweep_bands_with, EigenOptions,
    StudyOptions, SweepOptions,
};
use resgap::design::{roundtrip_verify, synthesize, TargetGaps, DEFAULT_GAMMA, DEFAULT_LAYOUT_MARGIN};
use resgap::geometry::CellGeometry2D;
use resgap::io::{read_json, write_bands_csv, write_gaps_csv, write_json, write_study_csv};
use resgap::limit::{
    build_matrix_an, compute_betas, eigenvalues_an, maxwell_gaps, GapReport, UnitCellModel,
};
use resgap::{Error, Result};

/// Spectral gaps of resonator-perforated periodic media.
#[derive(Parser, Debug)]
#[command(name = "resgap", version)]
struct RunConfig {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Limit gaps of a resonator model (model JSON in, gap_report.json out).
    Forward {
        #[command(flatten)]
        io: IoArgs,
        /// Also emit the +-(sqrt(alpha), sqrt(beta)) frequency gaps.
        #[arg(long)]
        maxwell: bool,
    },
    /// Geometry realizing target gaps (targets JSON in, geometry.json out).
    Design {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long, default_value_t = DEFAULT_GAMMA)]
        gamma: f64,
    },
    /// Compare the zeros of the secular function with the matrix spectrum.
    VerifyMatrix {
        #[command(flatten)]
        io: IoArgs,
    },
    /// Band sweep of a geometry at one epsilon.
    Bands {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Epsilon refinement study of a geometry.
    Study {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

#[derive(Args, Debug)]
struct IoArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// Scale parameter; repeat for a study ladder (descending).
    #[arg(long, required = true)]
    epsilon: Vec<f64>,
    #[arg(long, default_value_t = 512)]
    grid_n: usize,
    #[arg(long, default_value_t = 5)]
    theta_grid: usize,
    /// Eigenvalues per theta sample; defaults to m + 2.
    #[arg(long)]
    k_max: Option<usize>,
}

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn print_report(report: &GapReport) {
    println!("{:>4} {:>22} {:>22}", "j", "alpha", "beta");
    for (j, (a, b)) in report.intervals().enumerate() {
        println!("{:>4} {a:>22.15e} {b:>22.15e}", j + 1);
    }
}

fn cmd_forward(io: &IoArgs, maxwell: bool) -> Result<i32> {
    let model: UnitCellModel = read_json(&io.input)?;
    let report = compute_betas(&model)?;
    prepare_out(&io.out)?;
    write_json(io.out.join("gap_report.json"), &report)?;
    print_report(&report);
    if maxwell {
        let gaps = maxwell_gaps(&report);
        for g in &gaps {
            println!("frequency gap ({:.15e}, {:.15e})", g.lo, g.hi);
        }
        write_json(io.out.join("maxwell_gaps.json"), &gaps)?;
    }
    Ok(0)
}

fn cmd_design(io: &IoArgs, gamma: f64) -> Result<i32> {
    let targets: TargetGaps = read_json(&io.input)?;
    let design = synthesize(&targets, gamma, DEFAULT_LAYOUT_MARGIN)?;
    prepare_out(&io.out)?;
    write_json(io.out.join("geometry.json"), &design.geometry)?;
    write_json(io.out.join("design.json"), &design.solution)?;
    let report = compute_betas(&design.geometry.to_model()?)?;
    write_json(io.out.join("gap_report.json"), &report)?;
    roundtrip_verify(&design.geometry, &targets)?;
    println!("{:>4} {:>22} {:>22}", "j", "rho", "eta");
    for (j, (r, e)) in design.solution.rhos.iter().zip(&design.solution.etas).enumerate() {
        println!("{:>4} {r:>22.15e} {e:>22.15e}", j + 1);
    }
    print_report(&report);
    println!("roundtrip: pass");
    Ok(0)
}

fn cmd_verify_matrix(io: &IoArgs) -> Result<i32> {
    let model: UnitCellModel = read_json(&io.input)?;
    let report = compute_betas(&model)?;
    let spectrum = eigenvalues_an(&build_matrix_an(&model))?;
    let mut expected = vec![0.0];
    expected.extend(&report.betas);
    println!("{:>4} {:>22} {:>22} {:>12}", "k", "zero of lambda F", "eigenvalue", "rel dev");
    let mut worst = 0.0f64;
    for (k, (z, e)) in expected.iter().zip(&spectrum).enumerate() {
        let dev = (z - e).abs() / z.abs().max(report.betas[0]);
        worst = worst.max(dev);
        println!("{k:>4} {z:>22.15e} {e:>22.15e} {dev:>12.3e}");
    }
    if worst > 1e-9 {
        return Err(Error::RoundtripMismatch {
            quantity: "eigenvalue",
            index: 0,
            deviation: worst,
        });
    }
    println!("matrix check: pass");
    Ok(0)
}

fn eigen_options() -> EigenOptions {
    EigenOptions::default()
}

fn limits_of(geometry: &CellGeometry2D, etas: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if geometry.m() == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let report = compute_betas(&geometry.with_etas(etas)?.to_model()?)?;
    Ok((report.alphas, report.betas))
}

fn cmd_bands(io: &IoArgs, solver: &SolverArgs) -> Result<i32> {
    let geometry: CellGeometry2D = read_json(&io.input)?;
    let &[epsilon] = solver.epsilon.as_slice() else {
        return Err(Error::Invalid("bands takes exactly one --epsilon".into()));
    };
    let cell = rasterize(&geometry, epsilon, solver.grid_n)?;
    prepare_out(&io.out)?;
    cell.save_pgm(io.out.join("mask.pgm"))?;
    let k_max = solver.k_max.unwrap_or(geometry.m() + 2);
    let opts = SweepOptions {
        theta_grid: solver.theta_grid,
        k_max,
        eigen: eigen_options(),
        threads: None,
    };
    let sweep = sweep_bands_with(&cell, &opts)?;
    let lambda = estimate_lambda_with(&geometry, solver.theta_grid, solver.grid_n, &opts.eigen, None)?;
    let cutoff = lambda.cutoff(epsilon);
    let gaps = sweep.gaps_below(cutoff);
    let (alphas, betas) = limits_of(&geometry, cell.snapped_etas())?;

    write_bands_csv(BufWriter::new(File::create(io.out.join("bands.csv"))?), &sweep)?;
    write_gaps_csv(BufWriter::new(File::create(io.out.join("gaps.csv"))?), &gaps, &alphas, &betas)?;

    println!("cutoff {cutoff:.6e} (Lambda_hat {:.6e}), {} gap(s) below", lambda.value, gaps.len());
    for (j, g) in gaps.iter().enumerate() {
        match (alphas.get(j), betas.get(j)) {
            (Some(a), Some(b)) => println!(
                "gap {}: ({:.6}, {:.6}) limit ({a:.6}, {b:.6}) deviation ({:.2}%, {:.2}%)",
                g.k,
                g.lo,
                g.hi,
                100.0 * (g.lo - a).abs() / a,
                100.0 * (g.hi - b).abs() / b
            ),
            _ => println!("gap {}: ({:.6}, {:.6})", g.k, g.lo, g.hi),
        }
    }
    if !sweep.converged() {
        eprintln!(
            "solver did not converge at {} theta sample(s); bands.csv rows are flagged",
            sweep.unconverged().len()
        );
        return Ok(4);
    }
    Ok(0)
}

fn cmd_study(io: &IoArgs, solver: &SolverArgs) -> Result<i32> {
    let geometry: CellGeometry2D = read_json(&io.input)?;
    let opts = StudyOptions {
        theta_grid: solver.theta_grid,
        k_max: solver.k_max,
        eigen: eigen_options(),
        threads: None,
    };
    let table = convergence_study_geometry(&geometry, &solver.epsilon, solver.grid_n, &opts)?;
    prepare_out(&io.out)?;
    write_study_csv(BufWriter::new(File::create(io.out.join("study.csv"))?), &table)?;
    write_json(io.out.join("study.json"), &table)?;
    for row in &table.rows {
        println!(
            "epsilon {:.6}: {} gap(s) below {:.4e}; D dev {:?}; N dev {:?}",
            row.epsilon,
            row.gaps.len(),
            row.cutoff,
            row.dev_dirichlet,
            row.dev_neumann
        );
    }
    for v in &table.trend_violations {
        eprintln!("trend: {v}");
    }
    if table.rows.iter().any(|r| !r.converged) {
        return Ok(4);
    }
    Ok(0)
}

fn run(config: &RunConfig) -> Result<i32> {
    match &config.command {
        Command::Forward { io, maxwell } => cmd_forward(io, *maxwell),
        Command::Design { io, gamma } => cmd_design(io, *gamma),
        Command::VerifyMatrix { io } => cmd_verify_matrix(io),
        Command::Bands { io, solver } => cmd_bands(io, solver),
        Command::Study { io, solver } => cmd_study(io, solver),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let config = RunConfig::parse();
    match run(&config) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
