use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use helmholtz_cli::bench::{
    run_element_scaling, run_operator_benchmark, run_single_solve,
    run_solver_benchmark, write_plot_files,
};
use helmholtz_cli::csv::{emit_csv, ResultRow};
use helmholtz_cli::spec::{
    parse_ne, parse_range, ExperimentKind, ExperimentSpec, Overrides,
};

/// Benchmarks and direct solves for the spectral-element Helmholtz solver.
#[derive(Parser)]
#[command(name = "helmholtz", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time the condensed-operator variants over a polynomial-degree sweep.
    BenchOperator(Common),
    /// Run the four solver configurations over degrees and mesh gradings.
    BenchSolver(Common),
    /// Measure iteration growth with the element count at fixed degree.
    BenchScaling(Common),
    /// Solve one problem and report iterations, error, and timings.
    Solve(Common),
}

#[derive(Args)]
struct Common {
    /// Polynomial degrees, comma separated (e.g. 2,4,8).
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<usize>>,
    /// Inclusive degree range A:B; an alternative to --p.
    #[arg(long = "p-range", conflicts_with = "p")]
    p_range: Option<String>,
    /// Elements per direction as N1xN2xN3.
    #[arg(long, value_parser = parse_ne)]
    ne: Option<[usize; 3]>,
    /// Mesh grading exponents, comma separated (1 = uniform).
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Helmholtz parameter lambda (0 gives the Poisson equation).
    #[arg(long)]
    lambda: Option<f64>,
    /// Wavenumber of the manufactured solution.
    #[arg(long)]
    k: Option<f64>,
    /// Condensed-operator variants: mmc, tpc, tpt (comma separated).
    #[arg(long, value_delimiter = ',')]
    variant: Option<Vec<helmholtz_sem::Variant>>,
    /// Solver configurations: uc, dc, bc, bt (comma separated).
    #[arg(long, value_delimiter = ',')]
    solver: Option<Vec<helmholtz_sem::SolverKind>>,
    /// Relative residual tolerance of the conjugate gradient iteration.
    #[arg(long)]
    tol: Option<f64>,
    /// Runs per configuration; the first is a discarded warmup when > 1.
    #[arg(long)]
    reps: Option<usize>,
    /// Use the full-scale parameter sets instead of the quick defaults.
    #[arg(long = "paper-scale")]
    paper_scale: bool,
    /// Output CSV path; plot data files are written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Memory cap in bytes for precomputed dense condensed matrices.
    #[arg(long = "mmc-mem-cap")]
    mmc_mem_cap: Option<u64>,
    /// Spec file with key = value lines mirroring these flags.
    #[arg(long)]
    spec: Option<PathBuf>,
}

impl Common {
    fn resolve(self, kind: ExperimentKind) -> Result<ExperimentSpec> {
        let base = match &self.spec {
            Some(path) => Overrides::from_file(path)?,
            None => Overrides::default(),
        };
        let range = self.p_range.as_deref().map(parse_range).transpose()?;
        let flags = Overrides {
            p: self.p.or(range),
            ne: self.ne,
            alpha: self.alpha,
            lambda: self.lambda,
            k: self.k,
            variant: self.variant,
            solver: self.solver,
            tol: self.tol,
            reps: self.reps,
            paper_scale: self.paper_scale,
            out: self.out,
            mmc_mem_cap: self.mmc_mem_cap,
        };
        ExperimentSpec::build(kind, &flags.over(base))
    }
}

fn finish(spec: &ExperimentSpec, rows: &[ResultRow]) -> Result<()> {
    emit_csv(rows, &spec.out)?;
    let plots = write_plot_files(spec, rows)?;
    println!("wrote {} rows to {}", rows.len(), spec.out.display());
    for p in &plots {
        println!("wrote plot data {}", p.display());
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::BenchOperator(common) => {
            let spec = common.resolve(ExperimentKind::Operator)?;
            let rows = run_operator_benchmark(&spec)?;
            for r in &rows {
                if r.note.is_empty() {
                    println!(
                        "p={:<3} {:<4} apply {:.3e} s  ({} condensed muls)",
                        r.p, r.method, r.run_seconds, r.condensed_muls
                    );
                } else {
                    println!("p={:<3} {:<4} {}", r.p, r.method, r.note);
                }
            }
            finish(&spec, &rows)
        }
        Command::BenchSolver(common) => {
            let spec = common.resolve(ExperimentKind::Solver)?;
            let rows = run_solver_benchmark(&spec)?;
            for r in &rows {
                println!(
                    "alpha={:<4} p={:<3} {:<3} iters={:<6} time {:.3e} s  err {:.3e}{}",
                    r.alpha,
                    r.p,
                    r.method,
                    r.iterations.unwrap_or(0),
                    r.run_seconds,
                    r.max_error.unwrap_or(f64::NAN),
                    if r.note.is_empty() { String::new() } else { format!("  [{}]", r.note) },
                );
            }
            finish(&spec, &rows)
        }
        Command::BenchScaling(common) => {
            let spec = common.resolve(ExperimentKind::Scaling)?;
            let (rows, fit) = run_element_scaling(&spec)?;
            for r in &rows {
                println!(
                    "n_e={:<6} p={:<3} {:<3} iters={:<6} time {:.3e} s",
                    r.n_e,
                    r.p,
                    r.method,
                    r.iterations.unwrap_or(0),
                    r.run_seconds,
                );
            }
            println!(
                "iteration growth exponent {:.3}, time growth exponent {:.3}",
                fit.iteration_exponent, fit.time_exponent
            );
            finish(&spec, &rows)
        }
        Command::Solve(common) => {
            let spec = common.resolve(ExperimentKind::Solve)?;
            let row = run_single_solve(&spec)?;
            println!(
                "solved p={} n_e={} with {}: {} iterations, converged={}, \
                 max nodal error {:.3e}",
                row.p,
                row.n_e,
                row.method,
                row.iterations.unwrap_or(0),
                row.note.is_empty(),
                row.max_error.unwrap_or(f64::NAN),
            );
            println!(
                "setup {:.3e} s, total {:.3e} s",
                row.setup_seconds, row.run_seconds
            );
            finish(&spec, &[row])
        }
    }
}
