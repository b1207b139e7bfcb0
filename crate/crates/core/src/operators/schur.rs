//! Dense assembly of the element operator and its Schur complement — the
//! ground-truth oracle the factorized variants are tested against.

use super::{DegreeData, TransformContext};
use crate::error::Error;
use crate::linalg::{kron3_dense, DMat};
use crate::mesh::{metric_coefficients, CartesianMesh, DofMap};
use crate::Result;

/// Degree cap for dense oracles; keeps test runtime bounded.
const ORACLE_MAX_P: usize = 8;

/// Densely assembled element operator over all `(p+1)^3` nodes in
/// lexicographic order.
pub fn full_dense(data: &DegreeData, d: [f64; 4]) -> DMat {
    let m = DMat::from_diag(&data.basis.mass);
    let k = &data.basis.stiffness;
    let mut out = kron3_dense(&m, &m, &m);
    out.scale(d[0]);
    let mut t = kron3_dense(&m, &m, k);
    t.scale(d[1]);
    out.add_assign(&t);
    let mut t = kron3_dense(&m, k, &m);
    t.scale(d[2]);
    out.add_assign(&t);
    let mut t = kron3_dense(k, &m, &m);
    t.scale(d[3]);
    out.add_assign(&t);
    out
}

/// Dense condensed operator `Ĥ = H_BB − H_BI H_II^{-1} H_IB` in the
/// canonical boundary ordering. Limited to `p <= 8` (oracle use).
pub fn schur_dense(data: &DegreeData, d: [f64; 4]) -> Result<DMat> {
    if data.p > ORACLE_MAX_P {
        return Err(Error::InvalidParameter(format!(
            "dense Schur oracle limited to p <= {ORACLE_MAX_P}, got {}",
            data.p
        )));
    }
    let h = full_dense(data, d);
    let b = &data.classes.boundary_order;
    let i = &data.classes.interior;
    let h_bb = h.submatrix(b, b);
    let h_bi = h.submatrix(b, i);
    let h_ib = h.submatrix(i, b);
    let h_ii = h.submatrix(i, i);
    let x = h_ii.solve(&h_ib)?;
    let corr = h_bi.matmul(&x);
    Ok(h_bb.sub(&corr))
}

/// Dense condensed operator of the transformed system, `Ŝ Ĥ Ŝᵀ` with the
/// boundary-restricted transform. Oracle for the TPT variant.
pub fn schur_dense_transformed(data: &DegreeData, d: [f64; 4]) -> Result<DMat> {
    let hat = schur_dense(data, d)?;
    let ctx = TransformContext::new(data);
    let nb = data.n_boundary();
    // column-by-column: Ŝ Ĥ Ŝᵀ e_j
    let mut out = DMat::zeros(nb, nb);
    for j in 0..nb {
        let mut e = vec![0.0; nb];
        e[j] = 1.0;
        let col = ctx.boundary_s(&hat.matvec(&ctx.boundary_s_t(&e)));
        for r in 0..nb {
            out[(r, j)] = col[r];
        }
    }
    Ok(out)
}

/// Densely assembled global operator over all full DOFs of a mesh,
/// `A = Σ_e R_eᵀ H_e R_e`. Oracle for global solves; `p <= 8`.
pub fn assemble_full_dense(
    data: &DegreeData,
    mesh: &CartesianMesh,
    map: &DofMap,
    lambda: f64,
) -> Result<DMat> {
    if data.p > ORACLE_MAX_P {
        return Err(Error::InvalidParameter(format!(
            "dense assembly oracle limited to p <= {ORACLE_MAX_P}, got {}",
            data.p
        )));
    }
    let mut out = DMat::zeros(map.n_full, map.n_full);
    for e in 0..mesh.element_count() {
        let d = metric_coefficients(mesh.extents(e), lambda)?;
        let h = full_dense(data, d.d);
        let ids = &map.full[e];
        for (r, &gr) in ids.iter().enumerate() {
            for (c, &gc) in ids.iter().enumerate() {
                out[(gr, gc)] += h[(r, c)];
            }
        }
    }
    Ok(out)
}

/// Densely assembled global condensed operator, nodal or transformed,
/// `A = Σ_e R_eᵀ Ĥ_e R_e`. Oracle for preconditioner tests; `p <= 8`.
pub fn assemble_condensed_dense(
    data: &DegreeData,
    mesh: &CartesianMesh,
    map: &DofMap,
    lambda: f64,
    transformed: bool,
) -> Result<DMat> {
    let mut out = DMat::zeros(map.n_cond, map.n_cond);
    for e in 0..mesh.element_count() {
        let d = metric_coefficients(mesh.extents(e), lambda)?;
        let h = if transformed {
            schur_dense_transformed(data, d.d)?
        } else {
            schur_dense(data, d.d)?
        };
        let ids = &map.cond[e];
        for (r, &gr) in ids.iter().enumerate() {
            for (c, &gc) in ids.iter().enumerate() {
                out[(gr, gc)] += h[(r, c)];
            }
        }
    }
    Ok(out)
}
