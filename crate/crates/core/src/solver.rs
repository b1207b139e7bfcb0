//! Preconditioned conjugate gradients on the assembled condensed system and
//! the end-to-end solution pipelines.
//!
//! Four solver configurations are provided:
//!
//! * `UC` — unpreconditioned CG on the nodal condensed system,
//! * `DC` — CG with the exact assembled diagonal,
//! * `BC` — CG with exact per-entity block inverses (faces, edges,
//!   vertices); the blocks are applied in factorized form through the
//!   interior eigenvectors, where they are diagonal,
//! * `BT` — CG on the transformed condensed system, where the per-entity
//!   blocks themselves are diagonal, so block preconditioning reduces to a
//!   diagonal scaling.
//!
//! UC, DC and BC run on the nodal system with the eigenspace operator
//! factorization; BT runs on the transformed system with the transformed
//! factorization.

use std::time::Instant;

use crate::error::Error;
use crate::mesh::{
    build_dof_maps, metric_coefficients, tangential_axes, CartesianMesh, DofMap,
    MetricCoefficients,
};
use crate::operators::{
    condense_rhs, condense_rhs_transformed, face_axis_side, geometry_table,
    interior_field, precompute_tpc, precompute_tpt, recover_interior,
    recover_interior_transformed, ApplyCounters, CondensedOperatorMmc,
    CondensedOperatorTpc, CondensedOperatorTpt, DegreeData, FullElementOperator,
    GeometryTable, TransformContext, Variant,
};
use crate::tensor::Field3;
use crate::Result;

/// The four solver configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Uc,
    Dc,
    Bc,
    Bt,
}

impl SolverKind {
    /// Operator factorization the configuration runs on.
    pub fn operator_variant(self) -> Variant {
        match self {
            SolverKind::Bt => Variant::Tpt,
            _ => Variant::Tpc,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Uc => "uc",
            SolverKind::Dc => "dc",
            SolverKind::Bc => "bc",
            SolverKind::Bt => "bt",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uc" => Ok(SolverKind::Uc),
            "dc" => Ok(SolverKind::Dc),
            "bc" => Ok(SolverKind::Bc),
            "bt" => Ok(SolverKind::Bt),
            other => Err(Error::InvalidParameter(format!(
                "unknown solver '{other}' (expected uc, dc, bc or bt)"
            ))),
        }
    }
}

/// Solver configuration: relative residual reduction and iteration cap.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl SolverConfig {
    pub fn new(kind: SolverKind) -> Self {
        Self {
            kind,
            tolerance: 1e-12,
            max_iterations: 100_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must lie in (0, 1), got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of a conjugate-gradient solve.
#[derive(Debug, Clone, Default)]
pub struct SolveReport {
    /// Operator applications performed (initial residual not counted; the
    /// initial guess is zero).
    pub iterations: usize,
    /// Euclidean norms of the unpreconditioned residual, starting with the
    /// initial one.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// Multiplications inside the condensed operator applications.
    pub operator: ApplyCounters,
    /// Multiplications inside the preconditioner applications.
    pub preconditioner_muls: u64,
    /// Multiplications in the CG vector recurrences and inner products.
    pub vector_muls: u64,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
}

enum ElementOps<'a> {
    Tpc(Vec<CondensedOperatorTpc<'a>>),
    Tpt(Vec<CondensedOperatorTpt<'a>>),
    Mmc(Vec<CondensedOperatorMmc>),
}

/// The assembled global condensed system: degree data, numbering, per-
/// geometry operators, and whether it lives in the transformed basis.
pub struct CondensedSystem<'a> {
    pub data: &'a DegreeData,
    pub map: DofMap,
    pub geoms: GeometryTable,
    pub transformed: bool,
    ops: ElementOps<'a>,
}

/// Builds the global condensed system for a mesh, with one precomputed
/// operator per distinct element geometry.
pub fn build_condensed_system<'a>(
    data: &'a DegreeData,
    mesh: &CartesianMesh,
    lambda: f64,
    variant: Variant,
    mmc_mem_cap: Option<u64>,
) -> Result<CondensedSystem<'a>> {
    let map = build_dof_maps(mesh, data.p, true)?;
    let geoms = geometry_table(mesh, lambda)?;
    let ops = match variant {
        Variant::Tpc => ElementOps::Tpc(
            geoms
                .coefficients
                .iter()
                .map(|&d| precompute_tpc(data, MetricCoefficients { d }))
                .collect::<Result<_>>()?,
        ),
        Variant::Tpt => ElementOps::Tpt(
            geoms
                .coefficients
                .iter()
                .map(|&d| precompute_tpt(data, MetricCoefficients { d }))
                .collect::<Result<_>>()?,
        ),
        Variant::Mmc => {
            if let Some(cap) = mmc_mem_cap {
                let required = crate::operators::estimate_mmc_memory(
                    data.p,
                    mesh.element_count(),
                    std::mem::size_of::<f64>(),
                );
                if required > cap {
                    return Err(Error::MemoryCapExceeded { required, cap });
                }
            }
            ElementOps::Mmc(
                geoms
                    .coefficients
                    .iter()
                    .map(|&d| {
                        crate::operators::precompute_mmc(
                            data,
                            MetricCoefficients { d },
                            None,
                        )
                    })
                    .collect::<Result<_>>()?,
            )
        }
    };
    Ok(CondensedSystem {
        data,
        map,
        geoms,
        transformed: variant == Variant::Tpt,
        ops,
    })
}

impl CondensedSystem<'_> {
    pub fn n(&self) -> usize {
        self.map.n_cond
    }

    pub fn element_metric(&self, e: usize) -> MetricCoefficients {
        MetricCoefficients {
            d: self.geoms.coefficients[self.geoms.geom_of_element[e]],
        }
    }

    /// `A x = Σ_e R_eᵀ Ĥ_e R_e x` by scatter, element applies, gather.
    pub fn apply(&self, x: &[f64], counters: &mut ApplyCounters) -> Result<Vec<f64>> {
        let locals = self.map.scatter_cond(x);
        let mut outs = Vec::with_capacity(locals.len());
        for (e, loc) in locals.iter().enumerate() {
            let g = self.geoms.geom_of_element[e];
            let out = match &self.ops {
                ElementOps::Tpc(ops) => ops[g].apply(loc, counters)?,
                ElementOps::Tpt(ops) => ops[g].apply(loc, counters)?,
                ElementOps::Mmc(ops) => ops[g].apply(loc, counters)?,
            };
            outs.push(out);
        }
        Ok(self.map.gather_cond(&outs))
    }
}

/// Exact diagonal of the element condensed operator in canonical boundary
/// order, nodal or transformed.
///
/// The primary diagonal follows from the tensor structure directly. The
/// Schur correction is nonzero only on faces: a face node couples to the
/// interior along its normal line only, so the correction is a weighted sum
/// of the squared transformed stiffness column over the interior eigenspace
/// diagonal. In the nodal system the tangential eigenvector weights enter
/// squared; in the transformed system they are identity.
pub fn element_condensed_diagonal(
    data: &DegreeData,
    d: [f64; 4],
    transformed: bool,
) -> Vec<f64> {
    let p = data.p;
    let n = p + 1;
    let n_i = p - 1;
    let (m, kdiag): (Vec<f64>, Vec<f64>) = if transformed {
        let mut kd = vec![0.0; n];
        kd[0] = data.trans.k00;
        kd[p] = data.trans.kpp;
        kd[1..p].copy_from_slice(&data.trans.lambda);
        (data.trans.mass_diag(), kd)
    } else {
        (
            data.basis.mass.clone(),
            (0..n).map(|i| data.basis.stiffness[(i, i)]).collect(),
        )
    };

    let mut out = Vec::with_capacity(data.n_boundary());
    for &loc in &data.classes.boundary_order {
        let i = loc % n;
        let j = (loc / n) % n;
        let k = loc / (n * n);
        out.push(
            d[0] * m[i] * m[j] * m[k]
                + d[1] * kdiag[i] * m[j] * m[k]
                + d[2] * m[i] * kdiag[j] * m[k]
                + d[3] * m[i] * m[j] * kdiag[k],
        );
    }

    let lam = &data.eig.lambda;
    for f in 0..6 {
        let (axis, side) = face_axis_side(f);
        let thin = if side == 0 {
            &data.trans.k0i
        } else {
            &data.trans.kpi
        };
        let (t2, t3) = tangential_axes(axis);
        let dw = d[axis + 1];
        let off = data.classes.face_offset(f);
        // C[a,b] = Σ_i thin_i² / D[i,a,b] over the tangential eigenspace
        let mut c = vec![0.0; n_i * n_i];
        for b in 0..n_i {
            for a in 0..n_i {
                let mut acc = 0.0;
                for (i, &t) in thin.iter().enumerate() {
                    let den =
                        d[0] + dw * lam[i] + d[t2 + 1] * lam[a] + d[t3 + 1] * lam[b];
                    acc += t * t / den;
                }
                c[a + n_i * b] = acc;
            }
        }
        if transformed {
            for (o, cv) in out[off..off + n_i * n_i].iter_mut().zip(&c) {
                *o -= dw * dw * cv;
            }
        } else {
            // contract with the squared eigenvector columns and the squared
            // tangential masses
            for b in 0..n_i {
                for a in 0..n_i {
                    let ma = data.basis.mass[a + 1];
                    let mb = data.basis.mass[b + 1];
                    let mut acc = 0.0;
                    for kk in 0..n_i {
                        let sb = data.s[(kk, b)] * data.s[(kk, b)];
                        for jj in 0..n_i {
                            let sa = data.s[(jj, a)] * data.s[(jj, a)];
                            acc += sa * sb * c[jj + n_i * kk];
                        }
                    }
                    out[off + a + n_i * b] -= dw * dw * ma * ma * mb * mb * acc;
                }
            }
        }
    }
    out
}

/// Exact diagonal of the assembled global condensed operator (nodal or
/// transformed), one closed-form evaluation per distinct geometry.
pub fn assembled_condensed_diagonal(
    data: &DegreeData,
    map: &DofMap,
    geoms: &GeometryTable,
    transformed: bool,
) -> Vec<f64> {
    let locals: Vec<Vec<f64>> = geoms
        .coefficients
        .iter()
        .map(|&d| element_condensed_diagonal(data, d, transformed))
        .collect();
    let mut out = vec![0.0; map.n_cond];
    for (e, ids) in map.cond.iter().enumerate() {
        let local = &locals[geoms.geom_of_element[e]];
        for (&g, &v) in ids.iter().zip(local) {
            out[g] += v;
        }
    }
    out
}

/// Preconditioner for the global condensed CG.
pub enum Preconditioner {
    Identity,
    /// Inverse of the exact assembled diagonal.
    Diagonal { inv: Vec<f64> },
    /// Exact per-entity block inverses of the nodal system, stored as the
    /// inverse transformed-basis diagonal: every assembled entity block is
    /// `A_E = Ŝ_E^{-1} t_E Ŝ_E^{-T}` with diagonal `t_E`, so
    /// `A_E^{-1} = Ŝ_Eᵀ t_E^{-1} Ŝ_E`.
    Block { tinv: Vec<f64> },
}

impl Preconditioner {
    /// Applies the preconditioner to a global condensed residual.
    pub fn apply(
        &self,
        data: &DegreeData,
        map: &DofMap,
        r: &[f64],
        muls: &mut u64,
    ) -> Vec<f64> {
        match self {
            Preconditioner::Identity => r.to_vec(),
            Preconditioner::Diagonal { inv } => {
                *muls += r.len() as u64;
                r.iter().zip(inv).map(|(v, d)| v * d).collect()
            }
            Preconditioner::Block { tinv } => {
                let n_i = data.n_interior();
                let s = &data.s;
                let st = &data.st;
                let mut z = vec![0.0; r.len()];
                let mut v = crate::linalg::DMat::zeros(n_i, n_i);
                for face in &map.global_faces {
                    if face.dirichlet {
                        continue;
                    }
                    for b in 0..n_i {
                        for a in 0..n_i {
                            v[(b, a)] = r[face.dofs[a + n_i * b]];
                        }
                    }
                    // S along both tangential axes, scale, Sᵀ back
                    let mut w = s.matmul(&v).matmul(st);
                    for b in 0..n_i {
                        for a in 0..n_i {
                            w[(b, a)] *= tinv[face.dofs[a + n_i * b]];
                        }
                    }
                    let zm = st.matmul(&w).matmul(s);
                    for b in 0..n_i {
                        for a in 0..n_i {
                            z[face.dofs[a + n_i * b]] = zm[(b, a)];
                        }
                    }
                    *muls += (4 * n_i * n_i * n_i + n_i * n_i) as u64;
                }
                for edge in &map.global_edges {
                    if edge.dirichlet {
                        continue;
                    }
                    let seg: Vec<f64> =
                        edge.dofs.iter().map(|&g| r[g]).collect();
                    let mut t = s.matvec(&seg);
                    for (tv, &g) in t.iter_mut().zip(&edge.dofs) {
                        *tv *= tinv[g];
                    }
                    let back = st.matvec(&t);
                    for (&g, bv) in edge.dofs.iter().zip(&back) {
                        z[g] = *bv;
                    }
                    *muls += (2 * n_i * n_i + n_i) as u64;
                }
                for &(g, dirichlet) in &map.global_vertices {
                    if dirichlet {
                        continue;
                    }
                    z[g] = tinv[g] * r[g];
                    *muls += 1;
                }
                z
            }
        }
    }
}

fn invert_positive(diag: Vec<f64>) -> Result<Vec<f64>> {
    diag.into_iter()
        .enumerate()
        .map(|(index, value)| {
            if value <= 0.0 {
                Err(Error::NonPositiveDiagonal { index, value })
            } else {
                Ok(1.0 / value)
            }
        })
        .collect()
}

/// DC: inverse of the exact assembled diagonal of the system's own basis.
pub fn build_diagonal_preconditioner(system: &CondensedSystem<'_>) -> Result<Preconditioner> {
    let diag = assembled_condensed_diagonal(
        system.data,
        &system.map,
        &system.geoms,
        system.transformed,
    );
    Ok(Preconditioner::Diagonal {
        inv: invert_positive(diag)?,
    })
}

/// BC: exact assembled per-entity block inverses of the nodal condensed
/// system, realized through the transformed-basis diagonal.
pub fn build_block_preconditioner(system: &CondensedSystem<'_>) -> Result<Preconditioner> {
    if system.transformed {
        return Err(Error::InvalidParameter(
            "block preconditioner operates on the nodal condensed system".into(),
        ));
    }
    let t = assembled_condensed_diagonal(system.data, &system.map, &system.geoms, true);
    Ok(Preconditioner::Block {
        tinv: invert_positive(t)?,
    })
}

/// BT: inverse diagonal of the assembled transformed condensed operator,
/// whose entity blocks are diagonal by construction.
pub fn build_transformed_diagonal_preconditioner(
    system: &CondensedSystem<'_>,
) -> Result<Preconditioner> {
    if !system.transformed {
        return Err(Error::InvalidParameter(
            "transformed diagonal preconditioner requires the transformed system".into(),
        ));
    }
    build_diagonal_preconditioner(system)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradients with masked Dirichlet DOFs.
///
/// The initial guess is zero, so the initial residual is the right-hand
/// side. Stops when the Euclidean norm of the unpreconditioned residual has
/// dropped below `tolerance` times its initial value; running out of
/// iterations yields a non-converged report, not an error.
pub fn cg_solve(
    mut apply: impl FnMut(&[f64], &mut ApplyCounters) -> Result<Vec<f64>>,
    mut precond: impl FnMut(&[f64], &mut u64) -> Vec<f64>,
    rhs: &[f64],
    free: &[bool],
    tolerance: f64,
    max_iterations: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    if !(tolerance > 0.0 && tolerance < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must lie in (0, 1), got {tolerance}"
        )));
    }
    let n = rhs.len();
    let mask = |v: &mut [f64]| {
        for (x, &f) in v.iter_mut().zip(free) {
            if !f {
                *x = 0.0;
            }
        }
    };

    let mut report = SolveReport {
        operator: ApplyCounters::enabled(),
        ..SolveReport::default()
    };
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    mask(&mut r);
    let norm0 = dot(&r, &r).sqrt();
    report.vector_muls += n as u64;
    report.residual_history.push(norm0);
    if norm0 == 0.0 {
        report.converged = true;
        return Ok((x, report));
    }

    let mut z = precond(&r, &mut report.preconditioner_muls);
    mask(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    report.vector_muls += n as u64;

    for it in 1..=max_iterations {
        let mut q = apply(&p, &mut report.operator)?;
        mask(&mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "conjugate gradient breakdown: pᵀAp = {pq} <= 0, operator not \
                 positive definite on the free DOFs"
            )));
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        let nr = dot(&r, &r).sqrt();
        report.vector_muls += 4 * n as u64;
        report.residual_history.push(nr);
        report.iterations = it;
        if nr <= tolerance * norm0 {
            report.converged = true;
            break;
        }
        z = precond(&r, &mut report.preconditioner_muls);
        mask(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        report.vector_muls += 2 * n as u64;
        rz = rz_new;
    }
    Ok((x, report))
}

/// Full-system solution on the conforming global numbering.
pub struct Solution {
    pub map: DofMap,
    /// Nodal values for every global full DOF.
    pub values: Vec<f64>,
}

/// Physical coordinates of every global full DOF.
pub fn full_dof_coords(
    mesh: &CartesianMesh,
    data: &DegreeData,
    map: &DofMap,
) -> Vec<[f64; 3]> {
    let n = data.p + 1;
    let mut coords = vec![[0.0; 3]; map.n_full];
    for (e, ids) in map.full.iter().enumerate() {
        let mut idx = 0;
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    coords[ids[idx]] = mesh.node_coord(e, (i, j, k), &data.basis);
                    idx += 1;
                }
            }
        }
    }
    coords
}

/// Max-norm nodal error of a solution against an exact field.
pub fn max_nodal_error(
    mesh: &CartesianMesh,
    data: &DegreeData,
    solution: &Solution,
    exact: impl Fn([f64; 3]) -> f64,
) -> f64 {
    let coords = full_dof_coords(mesh, data, &solution.map);
    solution
        .values
        .iter()
        .zip(&coords)
        .map(|(&v, &x)| (v - exact(x)).abs())
        .fold(0.0, f64::max)
}

/// Solves `λ u − Δu = f` with Dirichlet boundary values by static
/// condensation and preconditioned CG.
///
/// The pipeline is: element load vectors and Dirichlet lifting, (transformed
/// configuration only: forward transform,) per-element right-hand-side
/// condensation, direct-stiffness assembly, masked PCG on the condensed
/// system, per-element interior recovery, (backward transform,) and assembly
/// of the full nodal solution.
pub fn solve_helmholtz(
    data: &DegreeData,
    mesh: &CartesianMesh,
    lambda: f64,
    rhs: impl Fn([f64; 3]) -> f64,
    dirichlet: impl Fn([f64; 3]) -> f64,
    config: &SolverConfig,
) -> Result<(Solution, SolveReport)> {
    config.validate()?;
    let setup_start = Instant::now();
    let system = build_condensed_system(
        data,
        mesh,
        lambda,
        config.kind.operator_variant(),
        None,
    )?;
    let transformed = system.transformed;
    let n = data.p + 1;
    let n_e = mesh.element_count();
    let coords = full_dof_coords(mesh, data, &system.map);

    // Dirichlet lift: boundary data at constrained DOFs, zero elsewhere
    let mut lift = vec![0.0; system.map.n_full];
    for (i, &dir) in system.map.dirichlet_full.iter().enumerate() {
        if dir {
            lift[i] = dirichlet(coords[i]);
        }
    }
    let lift_local = system.map.scatter_full(&lift);

    // element right-hand sides F'_e = M_e f − H_e u_lift, transformed if the
    // configuration works in the transformed basis
    let ctx = TransformContext::new(data);
    let mut counters = ApplyCounters::disabled();
    let mut fprime: Vec<Field3> = Vec::with_capacity(n_e);
    let mut cond_rhs_local: Vec<Vec<f64>> = Vec::with_capacity(n_e);
    for e in 0..n_e {
        let h = mesh.extents(e);
        let vol8 = h[0] * h[1] * h[2] / 8.0;
        let mut f = Field3::cube(n);
        let mut idx = 0;
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let x = mesh.node_coord(e, (i, j, k), &data.basis);
                    f.data[idx] = vol8
                        * data.basis.mass[i]
                        * data.basis.mass[j]
                        * data.basis.mass[k]
                        * rhs(x);
                    idx += 1;
                }
            }
        }
        let d = metric_coefficients(h, lambda)?;
        let op = FullElementOperator::new(data, d);
        let lifted =
            Field3::from_vec((n, n, n), lift_local[e].clone())?;
        let correction = op.apply(&lifted, &mut counters.primary)?;
        for (fv, cv) in f.data.iter_mut().zip(&correction.data) {
            *fv -= cv;
        }
        let f = if transformed {
            ctx.transform_rhs(&f, &mut counters.primary)?
        } else {
            f
        };
        let condensed = if transformed {
            condense_rhs_transformed(data, d.d, &f, &mut counters.condensed)?
        } else {
            condense_rhs(data, d.d, &f, &mut counters.condensed)?
        };
        fprime.push(f);
        cond_rhs_local.push(condensed);
    }
    let mut b = system.map.gather_cond(&cond_rhs_local);
    for (bv, &dir) in b.iter_mut().zip(&system.map.dirichlet_cond) {
        if dir {
            *bv = 0.0;
        }
    }

    let precond = match config.kind {
        SolverKind::Uc => Preconditioner::Identity,
        SolverKind::Dc => build_diagonal_preconditioner(&system)?,
        SolverKind::Bc => build_block_preconditioner(&system)?,
        SolverKind::Bt => build_transformed_diagonal_preconditioner(&system)?,
    };
    let free: Vec<bool> = system.map.dirichlet_cond.iter().map(|&d| !d).collect();
    let setup_seconds = setup_start.elapsed().as_secs_f64();

    let solve_start = Instant::now();
    let (xb, mut report) = cg_solve(
        |v, ctrs| system.apply(v, ctrs),
        |r, muls| precond.apply(data, &system.map, r, muls),
        &b,
        &free,
        config.tolerance,
        config.max_iterations,
    )?;
    report.setup_seconds = setup_seconds;
    report.solve_seconds = solve_start.elapsed().as_secs_f64();

    // interior recovery and assembly of the full solution
    let locals_b = system.map.scatter_cond(&xb);
    let mut values = vec![0.0; system.map.n_full];
    for e in 0..n_e {
        let d = metric_coefficients(mesh.extents(e), lambda)?;
        let f_i = interior_field(data, &fprime[e]);
        let u_i = if transformed {
            recover_interior_transformed(
                data,
                d.d,
                &f_i,
                &locals_b[e],
                &mut counters.condensed,
            )?
        } else {
            recover_interior(data, d.d, &f_i, &locals_b[e], &mut counters.condensed)?
        };
        let mut u_e = Field3::cube(n);
        for (pos, &loc) in data.classes.boundary_order.iter().enumerate() {
            u_e.data[loc] = locals_b[e][pos];
        }
        for (pos, &loc) in data.classes.interior.iter().enumerate() {
            u_e.data[loc] = u_i.data[pos];
        }
        let u_e = if transformed {
            ctx.transform_backward(&u_e, &mut counters.primary)?
        } else {
            u_e
        };
        for (loc, &g) in system.map.full[e].iter().enumerate() {
            values[g] = u_e.data[loc];
        }
    }
    for (v, &l) in values.iter_mut().zip(&lift) {
        *v += l;
    }

    Ok((
        Solution {
            map: system.map,
            values,
        },
        report,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DMat;
    use crate::mesh::build_mesh;
    use crate::operators::{
        assemble_condensed_dense, assemble_full_dense, build_degree_data,
        schur_dense, schur_dense_transformed,
    };
    use crate::problem::ManufacturedProblem;
    use rand::Rng;
    use rand::SeedableRng;

    fn unit_domain() -> [[f64; 2]; 3] {
        [[0.0, 1.0], [0.0, 1.0], [0.0, 1.0]]
    }

    #[test]
    fn element_diagonal_matches_dense_schur() {
        for p in [3usize, 4] {
            let data = build_degree_data(p).unwrap();
            let d = metric_coefficients([0.8, 1.7, 0.4], 1.1).unwrap();
            for transformed in [false, true] {
                let got = element_condensed_diagonal(&data, d.d, transformed);
                let dense = if transformed {
                    schur_dense_transformed(&data, d.d).unwrap()
                } else {
                    schur_dense(&data, d.d).unwrap()
                };
                for (i, g) in got.iter().enumerate() {
                    assert!(
                        (g - dense[(i, i)]).abs() < 1e-10 * dense[(i, i)].abs().max(1.0),
                        "p = {p}, transformed = {transformed}, entry {i}: {g} vs {}",
                        dense[(i, i)]
                    );
                }
            }
        }
    }

    #[test]
    fn assembled_diagonal_matches_dense_assembly() {
        let mesh = build_mesh([2, 2, 2], unit_domain(), 1.3).unwrap();
        let data = build_degree_data(2).unwrap();
        let lambda = 0.7;
        let map = build_dof_maps(&mesh, 2, true).unwrap();
        let geoms = geometry_table(&mesh, lambda).unwrap();
        for transformed in [false, true] {
            let got = assembled_condensed_diagonal(&data, &map, &geoms, transformed);
            let dense =
                assemble_condensed_dense(&data, &mesh, &map, lambda, transformed)
                    .unwrap();
            for (i, g) in got.iter().enumerate() {
                assert!(
                    (g - dense[(i, i)]).abs() < 1e-11 * dense[(i, i)].abs().max(1.0),
                    "transformed = {transformed}, entry {i}"
                );
            }
        }
    }

    #[test]
    fn block_preconditioner_inverts_interior_face_block() {
        // 2-element mesh, p = 3: the shared interior face block of the
        // assembled nodal system times the preconditioner restricted to that
        // face must be the identity
        let mesh = build_mesh([2, 1, 1], unit_domain(), 1.0).unwrap();
        let data = build_degree_data(3).unwrap();
        let lambda = 0.5;
        let system =
            build_condensed_system(&data, &mesh, lambda, Variant::Tpc, None).unwrap();
        let pc = build_block_preconditioner(&system).unwrap();
        let dense = assemble_condensed_dense(&data, &mesh, &system.map, lambda, false)
            .unwrap();
        let face = system
            .map
            .global_faces
            .iter()
            .find(|f| !f.dirichlet)
            .unwrap();
        let n_f = face.dofs.len();
        for col in 0..n_f {
            // column of the assembled operator supported on the face
            let mut e = vec![0.0; system.map.n_cond];
            e[face.dofs[col]] = 1.0;
            let a_col: Vec<f64> = (0..system.map.n_cond)
                .map(|r| {
                    (0..system.map.n_cond).map(|c| dense[(r, c)] * e[c]).sum()
                })
                .collect();
            // restrict to the face before preconditioning: block-diagonal
            // inverse of the face self-block only
            let mut restricted = vec![0.0; system.map.n_cond];
            for &d in &face.dofs {
                restricted[d] = a_col[d];
            }
            let mut muls = 0u64;
            let z = pc.apply(&data, &system.map, &restricted, &mut muls);
            for (row, &d) in face.dofs.iter().enumerate() {
                let expect = if row == col { 1.0 } else { 0.0 };
                assert!(
                    (z[d] - expect).abs() < 1e-9,
                    "block {row},{col}: {}",
                    z[d]
                );
            }
        }
    }

    #[test]
    fn block_and_diagonal_coincide_for_p2() {
        // all entity blocks are 1x1 at p = 2, so BC and DC agree exactly
        let mesh = build_mesh([2, 2, 1], unit_domain(), 1.4).unwrap();
        let data = build_degree_data(2).unwrap();
        let system =
            build_condensed_system(&data, &mesh, 0.3, Variant::Tpc, None).unwrap();
        let diag = build_diagonal_preconditioner(&system).unwrap();
        let block = build_block_preconditioner(&system).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(101);
        let r: Vec<f64> = (0..system.map.n_cond)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let mut m = 0u64;
        let zd = diag.apply(&data, &system.map, &r, &mut m);
        let zb = block.apply(&data, &system.map, &r, &mut m);
        for (i, (a, b)) in zd.iter().zip(&zb).enumerate() {
            if system.map.dirichlet_cond[i] {
                continue;
            }
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "entry {i}");
        }
    }

    #[test]
    fn block_preconditioner_is_symmetric_positive() {
        let mesh = build_mesh([2, 2, 2], unit_domain(), 1.0).unwrap();
        let data = build_degree_data(3).unwrap();
        let system =
            build_condensed_system(&data, &mesh, 0.0, Variant::Tpc, None).unwrap();
        let pc = build_block_preconditioner(&system).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(102);
        let mask = |v: &mut Vec<f64>| {
            for (x, &d) in v.iter_mut().zip(&system.map.dirichlet_cond) {
                if d {
                    *x = 0.0;
                }
            }
        };
        let mut m = 0u64;
        for _ in 0..5 {
            let mut r1: Vec<f64> = (0..system.map.n_cond)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let mut r2: Vec<f64> = (0..system.map.n_cond)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            mask(&mut r1);
            mask(&mut r2);
            let z1 = pc.apply(&data, &system.map, &r1, &mut m);
            let z2 = pc.apply(&data, &system.map, &r2, &mut m);
            let a = dot(&z1, &r2);
            let b = dot(&r1, &z2);
            assert!((a - b).abs() < 1e-11 * a.abs().max(1.0));
            assert!(dot(&z1, &r1) > 0.0);
        }
    }

    #[test]
    fn cg_identity_converges_in_one_iteration() {
        let rhs = vec![3.0, -1.0, 2.0, 0.5];
        let free = vec![true; 4];
        let (x, report) = cg_solve(
            |v, _| Ok(v.to_vec()),
            |r, _| r.to_vec(),
            &rhs,
            &free,
            1e-12,
            100,
        )
        .unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 1);
        for (a, b) in x.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn cg_matches_dense_solve_on_random_spd_matrix() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(103);
        let n = 12;
        // A = B Bᵀ + I is SPD
        let mut a = DMat::identity(n);
        let b = DMat::from_rows(
            &(0..n)
                .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect::<Vec<_>>(),
        );
        a.add_assign(&b.matmul(&b.transpose()));
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let free = vec![true; n];
        let (x, report) = cg_solve(
            |v, _| Ok(a.matvec(v)),
            |r, _| r.to_vec(),
            &rhs,
            &free,
            1e-13,
            200,
        )
        .unwrap();
        assert!(report.converged);
        assert!(report.iterations <= n);
        let direct = a.solve_vec(&rhs).unwrap();
        for (g, e) in x.iter().zip(&direct) {
            assert!((g - e).abs() < 1e-10);
        }
    }

    #[test]
    fn cg_reports_non_convergence_without_error() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(104);
        let n = 20;
        let mut a = DMat::identity(n);
        let b = DMat::from_rows(
            &(0..n)
                .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect::<Vec<_>>(),
        );
        a.add_assign(&b.matmul(&b.transpose()));
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let free = vec![true; n];
        let (_, report) = cg_solve(
            |v, _| Ok(a.matvec(v)),
            |r, _| r.to_vec(),
            &rhs,
            &free,
            1e-13,
            2,
        )
        .unwrap();
        assert!(!report.converged);
        assert_eq!(report.iterations, 2);
    }

    /// Dense direct solve of the full uncondensed system with Dirichlet rows
    /// replaced, as an end-to-end oracle.
    fn dense_direct_solve(
        data: &DegreeData,
        mesh: &CartesianMesh,
        lambda: f64,
        rhs: impl Fn([f64; 3]) -> f64,
        dirichlet: impl Fn([f64; 3]) -> f64,
    ) -> Vec<f64> {
        let map = build_dof_maps(mesh, data.p, true).unwrap();
        let mut a = assemble_full_dense(data, mesh, &map, lambda).unwrap();
        let coords = full_dof_coords(mesh, data, &map);
        let n = data.p + 1;
        // assembled load vector
        let mut f_locals = Vec::new();
        for e in 0..mesh.element_count() {
            let h = mesh.extents(e);
            let vol8 = h[0] * h[1] * h[2] / 8.0;
            let mut f = Vec::with_capacity(n * n * n);
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        let x = mesh.node_coord(e, (i, j, k), &data.basis);
                        f.push(
                            vol8 * data.basis.mass[i]
                                * data.basis.mass[j]
                                * data.basis.mass[k]
                                * rhs(x),
                        );
                    }
                }
            }
            f_locals.push(f);
        }
        let mut b = map.gather_full(&f_locals);
        for i in 0..map.n_full {
            if map.dirichlet_full[i] {
                for c in 0..map.n_full {
                    a[(i, c)] = if c == i { 1.0 } else { 0.0 };
                }
                b[i] = dirichlet(coords[i]);
            }
        }
        a.solve_vec(&b).unwrap()
    }

    #[test]
    fn single_element_poisson_matches_dense_direct_solve() {
        let mesh = build_mesh([1, 1, 1], unit_domain(), 1.0).unwrap();
        let data = build_degree_data(3).unwrap();
        let prob = ManufacturedProblem::new(2.0, 0.0).unwrap();
        let config = SolverConfig::new(SolverKind::Uc);
        let (sol, report) = solve_helmholtz(
            &data,
            &mesh,
            0.0,
            |x| prob.rhs(x),
            |x| prob.u_exact(x),
            &config,
        )
        .unwrap();
        assert!(report.converged);
        let direct = dense_direct_solve(
            &data,
            &mesh,
            0.0,
            |x| prob.rhs(x),
            |x| prob.u_exact(x),
        );
        let scale = direct.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (g, e) in sol.values.iter().zip(&direct) {
            assert!((g - e).abs() < 1e-9 * scale, "{g} vs {e}");
        }
    }

    #[test]
    fn polynomial_solution_is_reproduced_exactly() {
        // u = x² + y z + 3 is degree <= p per direction; with f = λu − Δu
        // the discrete interior equations are satisfied exactly, so every
        // solver configuration must reproduce the nodal values
        let mesh = build_mesh([2, 2, 2], unit_domain(), 1.2).unwrap();
        let data = build_degree_data(3).unwrap();
        let lambda = 2.0;
        let u = |x: [f64; 3]| x[0] * x[0] + x[1] * x[2] + 3.0;
        let f = move |x: [f64; 3]| lambda * u(x) - 2.0;
        for kind in [SolverKind::Uc, SolverKind::Bt] {
            let config = SolverConfig::new(kind);
            let (sol, report) =
                solve_helmholtz(&data, &mesh, lambda, f, u, &config).unwrap();
            assert!(report.converged);
            let err = max_nodal_error(&mesh, &data, &sol, u);
            assert!(err < 1e-9, "{kind:?}: {err}");
        }
    }

    #[test]
    fn all_four_solvers_agree_and_bc_bt_iterations_match() {
        let mesh = build_mesh([2, 2, 2], unit_domain(), 1.5).unwrap();
        let data = build_degree_data(4).unwrap();
        let prob = ManufacturedProblem::new(5.0, 0.0).unwrap();
        let mut solutions: Vec<Vec<f64>> = Vec::new();
        let mut iterations = std::collections::HashMap::new();
        for kind in [SolverKind::Uc, SolverKind::Dc, SolverKind::Bc, SolverKind::Bt] {
            let config = SolverConfig::new(kind);
            let (sol, report) = solve_helmholtz(
                &data,
                &mesh,
                0.0,
                |x| prob.rhs(x),
                |x| prob.u_exact(x),
                &config,
            )
            .unwrap();
            assert!(report.converged, "{kind:?}");
            iterations.insert(kind.as_str(), report.iterations);
            solutions.push(sol.values);
        }
        let scale = solutions[0]
            .iter()
            .fold(1.0f64, |m, v| m.max(v.abs()));
        for s in &solutions[1..] {
            for (a, b) in solutions[0].iter().zip(s) {
                assert!((a - b).abs() < 1e-7 * scale);
            }
        }
        let bc = iterations["bc"] as i64;
        let bt = iterations["bt"] as i64;
        assert!((bc - bt).abs() <= 1, "bc = {bc}, bt = {bt}");
        // preconditioning must not be slower than plain CG here
        assert!(iterations["bc"] <= iterations["uc"]);
    }

    #[test]
    fn invalid_tolerance_is_rejected() {
        let mut config = SolverConfig::new(SolverKind::Uc);
        config.tolerance = 1.5;
        assert!(config.validate().is_err());
        config.tolerance = 0.0;
        assert!(config.validate().is_err());
        assert!("xx".parse::<SolverKind>().is_err());
        assert!("BT".parse::<SolverKind>().unwrap() == SolverKind::Bt);
    }
}
