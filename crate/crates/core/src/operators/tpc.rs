//! Eigenspace sum-factorization of the condensed operator.
//!
//! The condensed part is evaluated by accumulating all six face
//! contributions in the interior eigenspace, scaling with the inverse
//! diagonal, and mapping back to the faces. Each face-to-eigenspace
//! suboperator is a tensor product of the shared factor `S_II M_II` on the
//! tangential axes with the thin eigenspace stiffness column `S_II K_I{0|p}`
//! on the normal axis, scaled by the metric coefficient of the normal
//! direction; the face-from-eigenspace suboperators are their transposes.
//! The primary part is the exact boundary restriction `H_BB` applied
//! line-by-line.

use super::{
    add_face, apply_primary, build_primary_geom, extract_face, face_axis_side,
    ApplyCounters, DegreeData, PrimaryGeom,
};
use crate::error::Error;
use crate::linalg::DMat;
use crate::mesh::{tangential_axes, MetricCoefficients};
use crate::tensor::{apply_axis, diag3_build, Field3};
use crate::Result;

/// Precomputed per-geometry data of the eigenspace variant.
#[derive(Debug, Clone)]
pub struct CondensedOperatorTpc<'a> {
    pub data: &'a DegreeData,
    pub d: [f64; 4],
    /// Inverse of the eigenspace diagonal `D`, stored for multiplication.
    dinv: Field3,
    /// Per face: thin column `d_t * S_IIᵀ K_I{0|p}` as an `n_I x 1` matrix.
    expand: Vec<DMat>,
    /// Per face: the transposed thin factor as a `1 x n_I` matrix.
    contract: Vec<DMat>,
    prim: PrimaryGeom,
}

/// Builds the eigenspace factorization for one geometry.
pub fn precompute_tpc<'a>(
    data: &'a DegreeData,
    d: MetricCoefficients,
) -> Result<CondensedOperatorTpc<'a>> {
    let lam = &data.eig.lambda;
    let mut diag = diag3_build(lam, lam, lam, d.d)?;
    for v in diag.data.iter_mut() {
        *v = 1.0 / *v;
    }
    let mut expand = Vec::with_capacity(6);
    let mut contract = Vec::with_capacity(6);
    for f in 0..6 {
        let (axis, side) = face_axis_side(f);
        let thin = if side == 0 {
            &data.trans.k0i
        } else {
            &data.trans.kpi
        };
        let scaled: Vec<f64> = thin.iter().map(|v| d.d[axis + 1] * v).collect();
        let col: Vec<Vec<f64>> = scaled.iter().map(|&v| vec![v]).collect();
        expand.push(DMat::from_rows(&col));
        contract.push(DMat::from_rows(&[scaled]));
    }
    Ok(CondensedOperatorTpc {
        data,
        d: d.d,
        dinv: diag,
        expand,
        contract,
        prim: build_primary_geom(data, d.d, false),
    })
}

impl CondensedOperatorTpc<'_> {
    /// Applies the condensed element operator `Ĥ = H_BB − H_BI H_II⁻¹ H_IB`
    /// to a canonical boundary vector.
    pub fn apply(&self, ub: &[f64], counters: &mut ApplyCounters) -> Result<Vec<f64>> {
        let data = self.data;
        let nb = data.n_boundary();
        if ub.len() != nb {
            return Err(Error::DimensionMismatch {
                expected: nb,
                found: ub.len(),
                context: "boundary vector length",
            });
        }
        let n_i = data.n_interior();
        let cc = &mut counters.condensed;

        // eigenspace accumulation over all faces
        let mut check = Field3::cube(n_i);
        for f in 0..6 {
            let (axis, _) = face_axis_side(f);
            let (t2, t3) = tangential_axes(axis);
            let face = extract_face(&data.classes, ub, f);
            let t = apply_axis(&data.s_inv_t, t2, &face, cc)?;
            let t = apply_axis(&data.s_inv_t, t3, &t, cc)?;
            let e = apply_axis(&self.expand[f], axis, &t, cc)?;
            for (a, b) in check.data.iter_mut().zip(&e.data) {
                *a += b;
            }
        }
        for (v, di) in check.data.iter_mut().zip(&self.dinv.data) {
            *v *= di;
        }
        cc.add((n_i * n_i * n_i) as u64);

        // back to the faces, negated against the primary part
        let mut out = vec![0.0; nb];
        for f in 0..6 {
            let (axis, _) = face_axis_side(f);
            let (t2, t3) = tangential_axes(axis);
            let w = apply_axis(&self.contract[f], axis, &check, cc)?;
            let w = apply_axis(&data.s_inv, t2, &w, cc)?;
            let w = apply_axis(&data.s_inv, t3, &w, cc)?;
            add_face(&data.classes, &w, f, &mut out);
        }
        for v in out.iter_mut() {
            *v = -*v;
        }

        apply_primary(data, &self.prim, ub, &mut out, &mut counters.primary);
        Ok(out)
    }
}
