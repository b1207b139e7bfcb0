//! The three experiment families: operator apply benchmarks, solver
//! benchmarks over mesh gradings, and iteration scaling with the element
//! count — plus single-solve runs and plot-data emission.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use helmholtz_sem::mesh::build_mesh;
use helmholtz_sem::operators::build_degree_data;
use helmholtz_sem::solver::{build_condensed_system, max_nodal_error, solve_helmholtz};
use helmholtz_sem::{
    ApplyCounters, Error, ManufacturedProblem, SolverConfig, SolverKind, Variant,
};

use crate::csv::ResultRow;
use crate::spec::{ExperimentKind, ExperimentSpec};

fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::Mmc => "mmc",
        Variant::Tpc => "tpc",
        Variant::Tpt => "tpt",
    }
}

/// Mean over the kept repetitions: the first run is a discarded warmup
/// whenever more than one repetition is configured.
fn mean_kept(times: &[f64]) -> f64 {
    let kept = if times.len() > 1 { &times[1..] } else { times };
    kept.iter().sum::<f64>() / kept.len() as f64
}

/// Apply-time benchmark of the condensed operator variants over a degree
/// sweep on a fixed mesh.
pub fn run_operator_benchmark(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let mesh = build_mesh(spec.ne, spec.domain, spec.alphas[0])?;
    let n_e = mesh.element_count();
    let mut rows = Vec::new();
    for &p in &spec.p_list {
        let data = build_degree_data(p)?;
        for &variant in &spec.variants {
            let setup_start = Instant::now();
            let system = match build_condensed_system(
                &data,
                &mesh,
                spec.lambda,
                variant,
                spec.mmc_mem_cap,
            ) {
                Ok(system) => system,
                Err(Error::MemoryCapExceeded { required, cap }) => {
                    rows.push(ResultRow {
                        experiment: spec.kind.as_str().into(),
                        p,
                        n_e,
                        alpha: spec.alphas[0],
                        lambda: spec.lambda,
                        method: variant_name(variant).into(),
                        iterations: None,
                        setup_seconds: 0.0,
                        run_seconds: 0.0,
                        primary_muls: 0,
                        condensed_muls: 0,
                        max_error: None,
                        note: format!(
                            "skipped: memory estimate {required} bytes exceeds cap {cap}"
                        ),
                    });
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let setup_seconds = setup_start.elapsed().as_secs_f64();

            let x: Vec<f64> = (0..system.n())
                .map(|i| (i as f64 * 0.001).sin())
                .collect();
            let mut times = Vec::with_capacity(spec.repetitions);
            for _ in 0..spec.repetitions {
                let t = Instant::now();
                let _ = system.apply(&x, &mut ApplyCounters::disabled())?;
                times.push(t.elapsed().as_secs_f64());
            }
            let mut counters = ApplyCounters::enabled();
            system.apply(&x, &mut counters)?;

            rows.push(ResultRow {
                experiment: spec.kind.as_str().into(),
                p,
                n_e,
                alpha: spec.alphas[0],
                lambda: spec.lambda,
                method: variant_name(variant).into(),
                iterations: None,
                setup_seconds,
                run_seconds: mean_kept(&times),
                primary_muls: counters.primary.count(),
                condensed_muls: counters.condensed.count(),
                max_error: None,
                note: String::new(),
            });
        }
    }
    Ok(rows)
}

fn solve_row(
    spec: &ExperimentSpec,
    ne: [usize; 3],
    alpha: f64,
    p: usize,
    kind: SolverKind,
) -> Result<ResultRow> {
    let mesh = build_mesh(ne, spec.domain, alpha)?;
    let data = build_degree_data(p)?;
    let prob = ManufacturedProblem::new(spec.k, spec.lambda)?;
    let mut config = SolverConfig::new(kind);
    config.tolerance = spec.tolerance;

    let mut totals = Vec::with_capacity(spec.repetitions);
    let mut last = None;
    for _ in 0..spec.repetitions {
        let (sol, report) = solve_helmholtz(
            &data,
            &mesh,
            spec.lambda,
            |x| prob.rhs(x),
            |x| prob.u_exact(x),
            &config,
        )?;
        // total time with precomputation included
        totals.push(report.setup_seconds + report.solve_seconds);
        last = Some((sol, report));
    }
    let (sol, report) = last.context("at least one repetition")?;
    let err = max_nodal_error(&mesh, &data, &sol, |x| prob.u_exact(x));
    Ok(ResultRow {
        experiment: spec.kind.as_str().into(),
        p,
        n_e: mesh.element_count(),
        alpha,
        lambda: spec.lambda,
        method: kind.as_str().into(),
        iterations: Some(report.iterations),
        setup_seconds: report.setup_seconds,
        run_seconds: mean_kept(&totals),
        primary_muls: report.operator.primary.count(),
        condensed_muls: report.operator.condensed.count(),
        max_error: Some(err),
        note: if report.converged {
            String::new()
        } else {
            "not converged".into()
        },
    })
}

/// Solver benchmark: iterations, total time and discrete error for every
/// (grading, degree, solver) combination.
pub fn run_solver_benchmark(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for &alpha in &spec.alphas {
        for &p in &spec.p_list {
            for &kind in &spec.solvers {
                rows.push(solve_row(spec, spec.ne, alpha, p, kind)?);
            }
        }
    }
    Ok(rows)
}

/// Fitted growth exponents of the element-scaling sweep.
#[derive(Debug, Clone, Copy)]
pub struct ScalingFit {
    pub iteration_exponent: f64,
    pub time_exponent: f64,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Iteration and runtime scaling with the element count at fixed degree.
pub fn run_element_scaling(spec: &ExperimentSpec) -> Result<(Vec<ResultRow>, ScalingFit)> {
    let p = spec.p_list[0];
    let kind = spec.solvers[0];
    let alpha = spec.alphas[0];
    let mut rows = Vec::new();
    for &side in &spec.sides {
        rows.push(solve_row(spec, [side, side, side], alpha, p, kind)?);
    }
    let iter_pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.n_e as f64, r.iterations.unwrap_or(1).max(1) as f64))
        .collect();
    let time_pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.n_e as f64, r.run_seconds.max(1e-9)))
        .collect();
    let fit = ScalingFit {
        iteration_exponent: log_log_slope(&iter_pts),
        time_exponent: log_log_slope(&time_pts),
    };
    Ok((rows, fit))
}

/// One direct solve with the configured parameters.
pub fn run_single_solve(spec: &ExperimentSpec) -> Result<ResultRow> {
    solve_row(spec, spec.ne, spec.alphas[0], spec.p_list[0], spec.solvers[0])
}

/// Writes one two-column `<experiment>_<series>.dat` file per curve next to
/// the CSV output; returns the written paths.
pub fn write_plot_files(spec: &ExperimentSpec, rows: &[ResultRow]) -> Result<Vec<PathBuf>> {
    let dir = spec
        .out
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    let mut push = |name: String, point: (f64, f64)| {
        if let Some(s) = series.iter_mut().find(|(n, _)| *n == name) {
            s.1.push(point);
        } else {
            series.push((name, vec![point]));
        }
    };
    for r in rows {
        if !r.note.is_empty() && r.note.starts_with("skipped") {
            continue;
        }
        match spec.kind {
            ExperimentKind::Operator => {
                push(r.method.clone(), (r.p as f64, r.run_seconds));
            }
            ExperimentKind::Solver => {
                let name = format!("{}_a{}", r.method, r.alpha);
                push(name, (r.p as f64, r.iterations.unwrap_or(0) as f64));
            }
            ExperimentKind::Scaling => {
                push(
                    format!("{}_iterations", r.method),
                    (r.n_e as f64, r.iterations.unwrap_or(0) as f64),
                );
                push(
                    format!("{}_time", r.method),
                    (r.n_e as f64, r.run_seconds),
                );
            }
            ExperimentKind::Solve => {}
        }
    }
    let mut paths = Vec::new();
    for (name, points) in &series {
        let path = dir.join(format!("{}_{}.dat", spec.kind.as_str(), name));
        let mut text = String::new();
        for (x, y) in points {
            text.push_str(&format!("{x} {}\n", crate::csv::fmt_float(*y)));
        }
        std::fs::write(&path, text)
            .with_context(|| format!("writing plot data to {}", path.display()))?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::Overrides;

    fn temp_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!(
            "helmholtz-test-{tag}-{}",
            std::process::id()
        ));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn small_operator_benchmark_produces_rows_and_plots() {
        let dir = temp_dir("op");
        let o = Overrides {
            p: Some(vec![2, 3]),
            ne: Some([2, 2, 2]),
            reps: Some(2),
            out: Some(dir.join("operator.csv")),
            ..Default::default()
        };
        let spec = ExperimentSpec::build(ExperimentKind::Operator, &o).unwrap();
        let rows = run_operator_benchmark(&spec).unwrap();
        assert_eq!(rows.len(), 6); // 2 degrees x 3 variants
        for r in &rows {
            assert!(r.run_seconds >= 0.0);
            assert!(r.primary_muls > 0);
            assert!(r.condensed_muls > 0);
        }
        crate::csv::emit_csv(&rows, &spec.out).unwrap();
        let paths = write_plot_files(&spec, &rows).unwrap();
        assert_eq!(paths.len(), 3);
        for p in &paths {
            let text = std::fs::read_to_string(p).unwrap();
            assert_eq!(text.lines().count(), 2);
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn mmc_cap_is_recorded_as_skip() {
        let o = Overrides {
            p: Some(vec![4]),
            ne: Some([2, 2, 2]),
            reps: Some(1),
            mmc_mem_cap: Some(10),
            variant: Some(vec![Variant::Mmc]),
            ..Default::default()
        };
        let spec = ExperimentSpec::build(ExperimentKind::Operator, &o).unwrap();
        let rows = run_operator_benchmark(&spec).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].note.starts_with("skipped"), "{}", rows[0].note);
    }

    #[test]
    fn small_solver_benchmark_converges() {
        let o = Overrides {
            p: Some(vec![2]),
            ne: Some([2, 2, 2]),
            alpha: Some(vec![1.0]),
            solver: Some(vec![SolverKind::Bt]),
            ..Default::default()
        };
        let spec = ExperimentSpec::build(ExperimentKind::Solver, &o).unwrap();
        let rows = run_solver_benchmark(&spec).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].note.is_empty());
        assert!(rows[0].iterations.unwrap() > 0);
        assert!(rows[0].max_error.unwrap().is_finite());
    }

    #[test]
    fn scaling_fit_on_synthetic_data() {
        // y = 2 x^0.25 must fit exponent 0.25
        let pts: Vec<(f64, f64)> =
            [8.0f64, 64.0, 512.0].iter().map(|&x| (x, 2.0 * x.powf(0.25))).collect();
        assert!((log_log_slope(&pts) - 0.25).abs() < 1e-12);
    }
}
