//! Experiment specifications: defaults per experiment family, command-line
//! overrides, and the flat key-value spec-file format mirroring the flags.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use helmholtz_sem::{SolverKind, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Operator,
    Solver,
    Scaling,
    Solve,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Operator => "operator",
            ExperimentKind::Solver => "solver",
            ExperimentKind::Scaling => "scaling",
            ExperimentKind::Solve => "solve",
        }
    }
}

/// Optional settings collected from flags and/or a spec file; anything left
/// unset falls back to the experiment's defaults.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub p: Option<Vec<usize>>,
    pub ne: Option<[usize; 3]>,
    pub alpha: Option<Vec<f64>>,
    pub lambda: Option<f64>,
    pub k: Option<f64>,
    pub variant: Option<Vec<Variant>>,
    pub solver: Option<Vec<SolverKind>>,
    pub tol: Option<f64>,
    pub reps: Option<usize>,
    pub paper_scale: bool,
    pub out: Option<PathBuf>,
    pub mmc_mem_cap: Option<u64>,
}

pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .with_context(|| format!("invalid integer '{t}'"))
        })
        .collect()
}

/// `A:B` inclusive degree range.
pub fn parse_range(s: &str) -> Result<Vec<usize>> {
    let (a, b) = s
        .split_once(':')
        .with_context(|| format!("expected A:B, got '{s}'"))?;
    let a: usize = a.trim().parse().context("invalid range start")?;
    let b: usize = b.trim().parse().context("invalid range end")?;
    if b < a {
        bail!("empty range {a}:{b}");
    }
    Ok((a..=b).collect())
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("invalid number '{t}'"))
        })
        .collect()
}

/// `N1xN2xN3` element counts.
pub fn parse_ne(s: &str) -> Result<[usize; 3]> {
    let parts: Vec<usize> = s
        .split('x')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .with_context(|| format!("invalid element count '{t}'"))
        })
        .collect::<Result<_>>()?;
    match parts.as_slice() {
        [a, b, c] => Ok([*a, *b, *c]),
        _ => bail!("expected N1xN2xN3, got '{s}'"),
    }
}

pub fn parse_variants(s: &str) -> Result<Vec<Variant>> {
    s.split(',')
        .map(|t| t.trim().parse::<Variant>().map_err(anyhow::Error::from))
        .collect()
}

pub fn parse_solvers(s: &str) -> Result<Vec<SolverKind>> {
    s.split(',')
        .map(|t| t.trim().parse::<SolverKind>().map_err(anyhow::Error::from))
        .collect()
}

impl Overrides {
    /// Loads a flat `key = value` spec file; keys mirror the flag names.
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading spec file {}", path.display()))?;
        Self::from_key_values(&text)
    }

    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut o = Overrides::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("line {}: expected key = value", lineno + 1))?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "p" => o.p = Some(parse_usize_list(value)?),
                "p-range" => o.p = Some(parse_range(value)?),
                "ne" => o.ne = Some(parse_ne(value)?),
                "alpha" => o.alpha = Some(parse_f64_list(value)?),
                "lambda" => o.lambda = Some(value.parse().context("lambda")?),
                "k" => o.k = Some(value.parse().context("k")?),
                "variant" => o.variant = Some(parse_variants(value)?),
                "solver" => o.solver = Some(parse_solvers(value)?),
                "tol" => o.tol = Some(value.parse().context("tol")?),
                "reps" => o.reps = Some(value.parse().context("reps")?),
                "paper-scale" => o.paper_scale = value.parse().context("paper-scale")?,
                "out" => o.out = Some(PathBuf::from(value)),
                "mmc-mem-cap" => {
                    o.mmc_mem_cap = Some(value.parse().context("mmc-mem-cap")?)
                }
                other => bail!("unknown spec key '{other}'"),
            }
        }
        Ok(o)
    }

    /// Applies `self` on top of `base`: set fields win.
    pub fn over(self, base: Overrides) -> Overrides {
        Overrides {
            p: self.p.or(base.p),
            ne: self.ne.or(base.ne),
            alpha: self.alpha.or(base.alpha),
            lambda: self.lambda.or(base.lambda),
            k: self.k.or(base.k),
            variant: self.variant.or(base.variant),
            solver: self.solver.or(base.solver),
            tol: self.tol.or(base.tol),
            reps: self.reps.or(base.reps),
            paper_scale: self.paper_scale || base.paper_scale,
            out: self.out.or(base.out),
            mmc_mem_cap: self.mmc_mem_cap.or(base.mmc_mem_cap),
        }
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub p_list: Vec<usize>,
    pub ne: [usize; 3],
    /// Cube side lengths for the element-scaling sweep.
    pub sides: Vec<usize>,
    pub alphas: Vec<f64>,
    pub domain: [[f64; 2]; 3],
    pub lambda: f64,
    pub k: f64,
    pub variants: Vec<Variant>,
    pub solvers: Vec<SolverKind>,
    pub tolerance: f64,
    /// Total runs per configuration; the first is a discarded warmup when
    /// more than one run is configured.
    pub repetitions: usize,
    pub mmc_mem_cap: Option<u64>,
    pub out: PathBuf,
}

const UNIT_DOMAIN: [[f64; 2]; 3] = [[0.0, 1.0], [0.0, 1.0], [0.0, 1.0]];

/// Default memory cap for precomputed dense condensed matrices: 8 GB.
pub const DEFAULT_MMC_CAP: u64 = 8_000_000_000;

impl ExperimentSpec {
    /// Resolves an experiment from its kind, the desk/paper scale, and the
    /// collected overrides.
    pub fn build(kind: ExperimentKind, o: &Overrides) -> Result<Self> {
        let paper = o.paper_scale;
        let spec = match kind {
            ExperimentKind::Operator => ExperimentSpec {
                kind,
                p_list: o.p.clone().unwrap_or_else(|| {
                    if paper {
                        vec![2, 3, 4, 6, 8, 12, 16, 20, 24, 28, 32]
                    } else {
                        vec![2, 3, 4, 6, 8, 12, 16]
                    }
                }),
                ne: o.ne.unwrap_or(if paper { [8, 8, 8] } else { [4, 4, 4] }),
                sides: vec![],
                alphas: o.alpha.clone().unwrap_or_else(|| vec![1.0]),
                domain: UNIT_DOMAIN,
                lambda: o.lambda.unwrap_or(std::f64::consts::PI),
                k: o.k.unwrap_or(5.0),
                variants: o
                    .variant
                    .clone()
                    .unwrap_or_else(|| vec![Variant::Mmc, Variant::Tpc, Variant::Tpt]),
                solvers: vec![],
                tolerance: o.tol.unwrap_or(1e-12),
                repetitions: o.reps.unwrap_or(101),
                mmc_mem_cap: Some(o.mmc_mem_cap.unwrap_or(DEFAULT_MMC_CAP)),
                out: o.out.clone().unwrap_or_else(|| "operator.csv".into()),
            },
            ExperimentKind::Solver => ExperimentSpec {
                kind,
                p_list: o.p.clone().unwrap_or_else(|| {
                    if paper {
                        vec![2, 4, 8, 16, 24, 32]
                    } else {
                        vec![2, 4, 8, 16]
                    }
                }),
                ne: o.ne.unwrap_or([8, 8, 8]),
                sides: vec![],
                alphas: o.alpha.clone().unwrap_or_else(|| vec![1.0, 1.5, 2.0]),
                domain: UNIT_DOMAIN,
                lambda: o.lambda.unwrap_or(0.0),
                k: o.k.unwrap_or(5.0),
                variants: vec![],
                solvers: o.solver.clone().unwrap_or_else(|| {
                    vec![SolverKind::Uc, SolverKind::Dc, SolverKind::Bc, SolverKind::Bt]
                }),
                tolerance: o.tol.unwrap_or(1e-12),
                repetitions: o.reps.unwrap_or(if paper { 11 } else { 1 }),
                mmc_mem_cap: o.mmc_mem_cap,
                out: o.out.clone().unwrap_or_else(|| "solver.csv".into()),
            },
            ExperimentKind::Scaling => ExperimentSpec {
                kind,
                p_list: o.p.clone().unwrap_or_else(|| vec![16]),
                ne: o.ne.unwrap_or([2, 2, 2]),
                sides: match o.ne {
                    Some(ne) => vec![ne[0]],
                    None => {
                        if paper {
                            vec![2, 4, 8, 12, 16]
                        } else {
                            vec![2, 4, 8]
                        }
                    }
                },
                alphas: o.alpha.clone().unwrap_or_else(|| vec![1.0]),
                domain: UNIT_DOMAIN,
                lambda: o.lambda.unwrap_or(0.0),
                k: o.k.unwrap_or(5.0),
                variants: vec![],
                solvers: o.solver.clone().unwrap_or_else(|| vec![SolverKind::Bt]),
                tolerance: o.tol.unwrap_or(1e-12),
                repetitions: o.reps.unwrap_or(1),
                mmc_mem_cap: o.mmc_mem_cap,
                out: o.out.clone().unwrap_or_else(|| "scaling.csv".into()),
            },
            ExperimentKind::Solve => ExperimentSpec {
                kind,
                p_list: o.p.clone().unwrap_or_else(|| vec![4]),
                ne: o.ne.unwrap_or([4, 4, 4]),
                sides: vec![],
                alphas: o.alpha.clone().unwrap_or_else(|| vec![1.0]),
                domain: UNIT_DOMAIN,
                lambda: o.lambda.unwrap_or(0.0),
                k: o.k.unwrap_or(5.0),
                variants: vec![],
                solvers: o.solver.clone().unwrap_or_else(|| vec![SolverKind::Bt]),
                tolerance: o.tol.unwrap_or(1e-12),
                repetitions: o.reps.unwrap_or(1),
                mmc_mem_cap: o.mmc_mem_cap,
                out: o.out.clone().unwrap_or_else(|| "solve.csv".into()),
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            bail!("repetitions must be at least 1");
        }
        if let Some(&p) = self.p_list.iter().find(|&&p| p < 2) {
            bail!("polynomial degree must be at least 2, got {p}");
        }
        if self.p_list.is_empty() {
            bail!("empty degree list");
        }
        Ok(())
    }
}
