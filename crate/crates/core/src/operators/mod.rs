//! The element Helmholtz operator, its static condensation, and the three
//! condensed evaluation variants:
//!
//! * MMC — one dense boundary-to-boundary matrix per distinct geometry,
//! * TPC — sum-factorization through the interior eigenspace,
//! * TPT — sum-factorization in the transformed nodal basis.
//!
//! All variants act on element boundary vectors in the canonical ordering of
//! [`DofClasses`]: six faces, twelve edges, eight vertices.

mod condense;
mod full;
mod mmc;
mod primary;
mod schur;
mod tpc;
mod tpt;
mod transform;

pub use condense::{
    boundary_values, condense_rhs, condense_rhs_transformed, interior_field,
    interior_inverse_apply, recover_interior, recover_interior_transformed,
    transformed_interior_inverse,
};
pub use full::FullElementOperator;
pub use mmc::{estimate_mmc_memory, precompute_mmc, CondensedOperatorMmc};
pub use schur::{
    assemble_condensed_dense, assemble_full_dense, full_dense, schur_dense,
    schur_dense_transformed,
};
pub use tpc::{precompute_tpc, CondensedOperatorTpc};
pub use tpt::{precompute_tpt, CondensedOperatorTpt};
pub use transform::TransformContext;

pub(crate) use primary::{apply_primary, build_primary_geom, PrimaryGeom};

use crate::basis::{
    build_basis, interior_eigendecomposition, transformed_matrices, Basis1D,
    InteriorEigen, TransformedBasis1D,
};
use crate::linalg::DMat;
use crate::mesh::{
    classify_dofs, metric_coefficients, tangential_axes, CartesianMesh,
    DofClasses,
};
use crate::tensor::{Field3, MulCounter};
use crate::Result;

/// Multiplication counters split into the primary part (boundary-to-boundary
/// couplings of the element operator) and the condensed part (the Schur
/// correction through the interior).
#[derive(Debug, Clone, Default)]
pub struct ApplyCounters {
    pub primary: MulCounter,
    pub condensed: MulCounter,
}

impl ApplyCounters {
    pub fn enabled() -> Self {
        Self {
            primary: MulCounter::enabled(),
            condensed: MulCounter::enabled(),
        }
    }

    pub fn disabled() -> Self {
        Self::default()
    }

    pub fn total(&self) -> u64 {
        self.primary.count() + self.condensed.count()
    }
}

/// Condensed-operator evaluation variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Mmc,
    Tpc,
    Tpt,
}

impl std::str::FromStr for Variant {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mmc" => Ok(Variant::Mmc),
            "tpc" => Ok(Variant::Tpc),
            "tpt" => Ok(Variant::Tpt),
            other => Err(crate::Error::InvalidParameter(format!(
                "unknown operator variant '{other}' (expected mmc, tpc or tpt)"
            ))),
        }
    }
}

/// All degree-dependent data shared by every element of a mesh: the 1-D
/// basis, its interior eigendecomposition, the transformed matrices, the DOF
/// classification, and derived products used by the factorized kernels.
#[derive(Debug, Clone)]
pub struct DegreeData {
    pub p: usize,
    pub basis: Basis1D,
    pub eig: InteriorEigen,
    pub trans: TransformedBasis1D,
    pub classes: DofClasses,
    /// `S_II` and transpose (copies of the eigendecomposition for direct
    /// indexed access).
    pub s: DMat,
    pub st: DMat,
    /// `S_II^{-1} = M_II S_II^T` — the shared tangential factor of the
    /// eigenspace suboperators — and its transpose `S_II M_II`.
    pub s_inv: DMat,
    pub s_inv_t: DMat,
    /// Product of the three 1-D mass diagonals at each canonical boundary
    /// position, nodal and transformed.
    pub mass3_boundary: Vec<f64>,
    pub mass3_boundary_t: Vec<f64>,
    /// Per axis `t`: lookup `i + n*(a + n*b) -> boundary position`, where `i`
    /// runs along `t` and `(a, b)` along the tangential axes in ascending
    /// order. `None` marks element-interior nodes.
    pub bline: [Vec<Option<u32>>; 3],
}

impl DegreeData {
    pub fn n_interior(&self) -> usize {
        self.p - 1
    }

    pub fn n_boundary(&self) -> usize {
        self.classes.n_boundary()
    }
}

/// Builds the shared degree data for `p >= 2`.
pub fn build_degree_data(p: usize) -> Result<DegreeData> {
    let basis = build_basis(p)?;
    let eig = interior_eigendecomposition(&basis)?;
    let trans = transformed_matrices(&basis, &eig)?;
    let classes = classify_dofs(p)?;
    let n = p + 1;

    let s = eig.s.clone();
    let st = s.transpose();
    let s_inv = eig.s_inv(basis.mass_interior());
    let s_inv_t = s_inv.transpose();

    let mass3_at = |mass: &[f64], loc: usize| {
        let i = loc % n;
        let j = (loc / n) % n;
        let k = loc / (n * n);
        mass[i] * mass[j] * mass[k]
    };
    let mt = trans.mass_diag();
    let mass3_boundary: Vec<f64> = classes
        .boundary_order
        .iter()
        .map(|&loc| mass3_at(&basis.mass, loc))
        .collect();
    let mass3_boundary_t: Vec<f64> = classes
        .boundary_order
        .iter()
        .map(|&loc| mass3_at(&mt, loc))
        .collect();

    let mut bline: [Vec<Option<u32>>; 3] = Default::default();
    for (t, table) in bline.iter_mut().enumerate() {
        let (t2, t3) = tangential_axes(t);
        let mut tab = vec![None; n * n * n];
        for b in 0..n {
            for a in 0..n {
                for i in 0..n {
                    let mut c = [0usize; 3];
                    c[t] = i;
                    c[t2] = a;
                    c[t3] = b;
                    let loc = c[0] + n * (c[1] + n * c[2]);
                    tab[i + n * (a + n * b)] =
                        classes.boundary_pos[loc].map(|pos| pos as u32);
                }
            }
        }
        *table = tab;
    }

    Ok(DegreeData {
        p,
        basis,
        eig,
        trans,
        classes,
        s,
        st,
        s_inv,
        s_inv_t,
        mass3_boundary,
        mass3_boundary_t,
        bline,
    })
}

/// Face index `f` in canonical order decomposed into (normal axis, side).
#[inline]
pub(crate) fn face_axis_side(f: usize) -> (usize, usize) {
    (f / 2, f % 2)
}

/// Dims of a face field embedded in the volume index space: normal extent 1,
/// tangential extents `n_i`.
pub(crate) fn face_dims(axis: usize, n_i: usize) -> (usize, usize, usize) {
    match axis {
        0 => (1, n_i, n_i),
        1 => (n_i, 1, n_i),
        2 => (n_i, n_i, 1),
        _ => panic!("axis out of range"),
    }
}

/// Copies face `f` out of a canonical boundary vector into a Field3 with
/// normal extent 1.
pub(crate) fn extract_face(classes: &DofClasses, ub: &[f64], f: usize) -> Field3 {
    let n_i = classes.p - 1;
    let (axis, _) = face_axis_side(f);
    let off = classes.face_offset(f);
    let mut out = Field3::zeros(face_dims(axis, n_i));
    out.data.copy_from_slice(&ub[off..off + n_i * n_i]);
    out
}

/// Adds a face field (normal extent 1) into a canonical boundary vector.
pub(crate) fn add_face(classes: &DofClasses, face: &Field3, f: usize, out: &mut [f64]) {
    let n_i = classes.p - 1;
    let off = classes.face_offset(f);
    for (o, v) in out[off..off + n_i * n_i].iter_mut().zip(&face.data) {
        *o += v;
    }
}

/// Distinct element geometries of a mesh, identified by their metric
/// coefficients bit-for-bit.
#[derive(Debug, Clone)]
pub struct GeometryTable {
    /// Element index -> geometry index.
    pub geom_of_element: Vec<usize>,
    /// Metric coefficients per distinct geometry.
    pub coefficients: Vec<[f64; 4]>,
}

impl GeometryTable {
    pub fn n_geometries(&self) -> usize {
        self.coefficients.len()
    }
}

/// Deduplicates the element geometries of a mesh for shared precomputation.
pub fn geometry_table(mesh: &CartesianMesh, lambda: f64) -> Result<GeometryTable> {
    let mut map = std::collections::HashMap::new();
    let mut geom_of_element = Vec::with_capacity(mesh.element_count());
    let mut coefficients = Vec::new();
    for e in 0..mesh.element_count() {
        let d = metric_coefficients(mesh.extents(e), lambda)?.d;
        let key = [
            d[0].to_bits(),
            d[1].to_bits(),
            d[2].to_bits(),
            d[3].to_bits(),
        ];
        let idx = *map.entry(key).or_insert_with(|| {
            coefficients.push(d);
            coefficients.len() - 1
        });
        geom_of_element.push(idx);
    }
    Ok(GeometryTable {
        geom_of_element,
        coefficients,
    })
}
