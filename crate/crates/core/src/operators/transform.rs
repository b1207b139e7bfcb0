//! The change of basis by the padded interior eigenvector matrix
//! `S = diag(1, S_II, 1)`, applied per direction.
//!
//! The transformed operator is `H̃ = (S⊗S⊗S) H (Sᵀ⊗Sᵀ⊗Sᵀ)`. Solving
//! `H̃ ũ = F̃` is equivalent to `H u = F` with the pairing
//! `ũ = (S^{-T}⊗S^{-T}⊗S^{-T}) u` and `F̃ = (S⊗S⊗S) F`; the solution is
//! recovered by `u = (Sᵀ⊗Sᵀ⊗Sᵀ) ũ`. Boundary nodes keep their nodal values
//! under the volume transforms only where the transverse coordinates are
//! boundary too (vertices); faces and edges transform tangentially, which
//! the boundary-restricted transform `Ŝ` captures.

use super::{face_axis_side, DegreeData};
use crate::linalg::DMat;
use crate::mesh::tangential_axes;
use crate::tensor::{apply_axis, Field3, MulCounter};
use crate::Result;

/// Precomputed padded matrices for the volume and boundary transforms.
#[derive(Debug, Clone)]
pub struct TransformContext<'a> {
    pub data: &'a DegreeData,
    /// Padded `S^{-T}` (interior block `S_II M_II`): forward solution map.
    fwd: DMat,
    /// Padded `Sᵀ` (interior block `S_IIᵀ`): backward solution map.
    back: DMat,
    /// Padded `S` (interior block `S_II`): right-hand-side map.
    rhs: DMat,
}

fn padded(p: usize, inner: &DMat) -> DMat {
    let mut out = DMat::identity(p + 1);
    for i in 0..p - 1 {
        for j in 0..p - 1 {
            out[(i + 1, j + 1)] = inner[(i, j)];
        }
    }
    out
}

impl<'a> TransformContext<'a> {
    pub fn new(data: &'a DegreeData) -> Self {
        Self {
            data,
            fwd: padded(data.p, &data.s_inv_t),
            back: padded(data.p, &data.st),
            rhs: padded(data.p, &data.s),
        }
    }

    fn volume(&self, m: &DMat, u: &Field3, counter: &mut MulCounter) -> Result<Field3> {
        let t = apply_axis(m, 0, u, counter)?;
        let t = apply_axis(m, 1, &t, counter)?;
        apply_axis(m, 2, &t, counter)
    }

    /// `ũ = (S^{-T}⊗S^{-T}⊗S^{-T}) u`.
    pub fn transform_forward(&self, u: &Field3, counter: &mut MulCounter) -> Result<Field3> {
        self.volume(&self.fwd, u, counter)
    }

    /// `u = (Sᵀ⊗Sᵀ⊗Sᵀ) ũ`.
    pub fn transform_backward(&self, u: &Field3, counter: &mut MulCounter) -> Result<Field3> {
        self.volume(&self.back, u, counter)
    }

    /// `F̃ = (S⊗S⊗S) F`.
    pub fn transform_rhs(&self, f: &Field3, counter: &mut MulCounter) -> Result<Field3> {
        self.volume(&self.rhs, f, counter)
    }

    /// Boundary-restricted transform `Ŝ`: `S_II⊗S_II` per face tangentially,
    /// `S_II` per edge, identity on vertices.
    pub fn boundary_s(&self, ub: &[f64]) -> Vec<f64> {
        self.boundary_apply(ub, &self.data.s)
    }

    /// `Ŝᵀ` on a canonical boundary vector.
    pub fn boundary_s_t(&self, ub: &[f64]) -> Vec<f64> {
        self.boundary_apply(ub, &self.data.st)
    }

    /// Boundary-restricted `Ŝ^{-T}` (interior factor `S_II M_II`): maps
    /// nodal boundary values to the transformed system.
    pub fn boundary_forward(&self, ub: &[f64]) -> Vec<f64> {
        self.boundary_apply(ub, &self.data.s_inv_t)
    }

    fn boundary_apply(&self, ub: &[f64], m: &DMat) -> Vec<f64> {
        let classes = &self.data.classes;
        let n_i = self.data.p - 1;
        let mut out = vec![0.0; ub.len()];
        let mut c = MulCounter::disabled();
        for f in 0..6 {
            let (axis, _) = face_axis_side(f);
            let (t2, t3) = tangential_axes(axis);
            let face = super::extract_face(classes, ub, f);
            let t = apply_axis(m, t2, &face, &mut c).unwrap();
            let t = apply_axis(m, t3, &t, &mut c).unwrap();
            let off = classes.face_offset(f);
            out[off..off + n_i * n_i].copy_from_slice(&t.data);
        }
        for e in 0..12 {
            let off = classes.edge_offset(e);
            let seg = &ub[off..off + n_i];
            let r = m.matvec(seg);
            out[off..off + n_i].copy_from_slice(&r);
        }
        let voff = classes.vertex_offset();
        out[voff..voff + 8].copy_from_slice(&ub[voff..voff + 8]);
        out
    }
}
