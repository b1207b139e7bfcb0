//! Interior elimination and recovery: the fast-diagonalization interior
//! inverse, right-hand-side condensation, and interior reconstruction, in
//! both the nodal and the transformed system.

use super::{face_axis_side, face_dims, DegreeData};
use crate::error::Error;
use crate::linalg::DMat;
use crate::tensor::{apply_axis, diag3_build, kron3_apply, Field3, MulCounter};
use crate::Result;

/// `H_II^{-1} r = (Sᵀ⊗Sᵀ⊗Sᵀ) D^{-1} (S⊗S⊗S) r` with
/// `D = d0 + d1 λ_i + d2 λ_j + d3 λ_k`: from `S M Sᵀ = I` and
/// `S K Sᵀ = Λ` it follows that `H_II = (S⁻¹⊗S⁻¹⊗S⁻¹) D (S⁻ᵀ⊗S⁻ᵀ⊗S⁻ᵀ)`.
pub fn interior_inverse_apply(
    data: &DegreeData,
    d: [f64; 4],
    r: &Field3,
    counter: &mut MulCounter,
) -> Result<Field3> {
    let n_i = data.n_interior();
    if r.dims != (n_i, n_i, n_i) {
        return Err(Error::DimensionMismatch {
            expected: n_i * n_i * n_i,
            found: r.len(),
            context: "interior field size",
        });
    }
    let lam = &data.eig.lambda;
    let diag = diag3_build(lam, lam, lam, d)?;
    let mut t = kron3_apply(&data.s, &data.s, &data.s, r, counter)?;
    for (v, dd) in t.data.iter_mut().zip(&diag.data) {
        *v /= dd;
    }
    counter.add(t.len() as u64);
    kron3_apply(&data.st, &data.st, &data.st, &t, counter)
}

/// Extracts the interior block of a full element field.
pub fn interior_field(data: &DegreeData, u: &Field3) -> Field3 {
    let n_i = data.n_interior();
    let mut out = Field3::cube(n_i);
    for k in 0..n_i {
        for j in 0..n_i {
            for i in 0..n_i {
                out.set(i, j, k, u.get(i + 1, j + 1, k + 1));
            }
        }
    }
    out
}

/// Extracts the canonical boundary vector of a full element field.
pub fn boundary_values(data: &DegreeData, u: &Field3) -> Vec<f64> {
    data.classes
        .boundary_order
        .iter()
        .map(|&loc| u.data[loc])
        .collect()
}

/// Per-direction 1-D data of the interior/boundary coupling: for each face,
/// the coupling between the face plane and the interior runs through the
/// stiffness column of the opposing endpoint, scaled by the transverse
/// masses. The nodal system uses raw `K` columns and GLL masses; the
/// transformed system uses the arrowhead columns `K̃` and unit transverse
/// masses.
struct Coupling<'a> {
    /// Thin stiffness columns, per face: length `n_I`.
    col: [Vec<f64>; 6],
    /// Transverse mass diagonal over interior positions.
    mass_i: &'a [f64],
}

fn coupling(data: &DegreeData, transformed: bool) -> Coupling<'_> {
    static UNIT: [f64; 32] = [1.0; 32];
    if transformed {
        Coupling {
            col: [
                data.trans.k0i.clone(),
                data.trans.kpi.clone(),
                data.trans.k0i.clone(),
                data.trans.kpi.clone(),
                data.trans.k0i.clone(),
                data.trans.kpi.clone(),
            ],
            mass_i: &UNIT[..data.n_interior()],
        }
    } else {
        Coupling {
            col: [
                data.basis.k0i(),
                data.basis.kpi(),
                data.basis.k0i(),
                data.basis.kpi(),
                data.basis.k0i(),
                data.basis.kpi(),
            ],
            mass_i: data.basis.mass_interior(),
        }
    }
}

/// `v_B += H_BI w` for an interior field `w`; only face rows are nonzero.
fn add_h_bi(
    data: &DegreeData,
    d: [f64; 4],
    cpl: &Coupling<'_>,
    w: &Field3,
    out: &mut [f64],
    counter: &mut MulCounter,
) -> Result<()> {
    let n_i = data.n_interior();
    for f in 0..6 {
        let (axis, _) = face_axis_side(f);
        let row = DMat::from_rows(&[cpl.col[f].clone()]);
        let g = apply_axis(&row, axis, w, counter)?;
        let off = data.classes.face_offset(f);
        let dt = d[axis + 1];
        let mut idx = 0;
        for b in 0..n_i {
            for a in 0..n_i {
                out[off + idx] += dt * cpl.mass_i[a] * cpl.mass_i[b] * g.data[idx];
                idx += 1;
            }
        }
        counter.add(3 * (n_i * n_i) as u64);
    }
    Ok(())
}

/// `r_I += H_IB u_B`; only face columns contribute.
fn add_h_ib(
    data: &DegreeData,
    d: [f64; 4],
    cpl: &Coupling<'_>,
    ub: &[f64],
    r: &mut Field3,
    counter: &mut MulCounter,
) -> Result<()> {
    let n_i = data.n_interior();
    for f in 0..6 {
        let (axis, _) = face_axis_side(f);
        let off = data.classes.face_offset(f);
        let dt = d[axis + 1];
        let mut face = Field3::zeros(face_dims(axis, n_i));
        let mut idx = 0;
        for b in 0..n_i {
            for a in 0..n_i {
                face.data[idx] = dt * cpl.mass_i[a] * cpl.mass_i[b] * ub[off + idx];
                idx += 1;
            }
        }
        counter.add(3 * (n_i * n_i) as u64);
        let col: Vec<Vec<f64>> = cpl.col[f].iter().map(|&v| vec![v]).collect();
        let col = DMat::from_rows(&col);
        let expanded = apply_axis(&col, axis, &face, counter)?;
        for (rv, ev) in r.data.iter_mut().zip(&expanded.data) {
            *rv += ev;
        }
    }
    Ok(())
}

/// `F̂ = F_B − H_BI H_II^{-1} F_I` for a full nodal element RHS.
pub fn condense_rhs(
    data: &DegreeData,
    d: [f64; 4],
    f: &Field3,
    counter: &mut MulCounter,
) -> Result<Vec<f64>> {
    let f_i = interior_field(data, f);
    let w = interior_inverse_apply(data, d, &f_i, counter)?;
    let mut out = boundary_values(data, f);
    let cpl = coupling(data, false);
    negate_into(data, &d, &cpl, &w, &mut out, counter)?;
    Ok(out)
}

/// `F̂̃ = F̃_B − H̃_BI D^{-1} F̃_I` for a transformed element RHS.
pub fn condense_rhs_transformed(
    data: &DegreeData,
    d: [f64; 4],
    ft: &Field3,
    counter: &mut MulCounter,
) -> Result<Vec<f64>> {
    let f_i = interior_field(data, ft);
    let w = transformed_interior_inverse(data, d, &f_i, counter)?;
    let mut out = boundary_values(data, ft);
    let cpl = coupling(data, true);
    negate_into(data, &d, &cpl, &w, &mut out, counter)?;
    Ok(out)
}

fn negate_into(
    data: &DegreeData,
    d: &[f64; 4],
    cpl: &Coupling<'_>,
    w: &Field3,
    out: &mut [f64],
    counter: &mut MulCounter,
) -> Result<()> {
    let mut corr = vec![0.0; out.len()];
    add_h_bi(data, *d, cpl, w, &mut corr, counter)?;
    for (o, c) in out.iter_mut().zip(&corr) {
        *o -= c;
    }
    Ok(())
}

/// `H̃_II^{-1} = D^{-1}` — diagonal in the transformed system.
pub fn transformed_interior_inverse(
    data: &DegreeData,
    d: [f64; 4],
    r: &Field3,
    counter: &mut MulCounter,
) -> Result<Field3> {
    let lam = &data.eig.lambda;
    let diag = diag3_build(lam, lam, lam, d)?;
    let mut out = r.clone();
    for (v, dd) in out.data.iter_mut().zip(&diag.data) {
        *v /= dd;
    }
    counter.add(out.len() as u64);
    Ok(out)
}

/// `u_I = H_II^{-1} (F_I − H_IB u_B)`, nodal system.
pub fn recover_interior(
    data: &DegreeData,
    d: [f64; 4],
    f_i: &Field3,
    u_b: &[f64],
    counter: &mut MulCounter,
) -> Result<Field3> {
    let cpl = coupling(data, false);
    let mut r = f_i.clone();
    let mut coupled = Field3::cube(data.n_interior());
    add_h_ib(data, d, &cpl, u_b, &mut coupled, counter)?;
    for (rv, cv) in r.data.iter_mut().zip(&coupled.data) {
        *rv -= cv;
    }
    interior_inverse_apply(data, d, &r, counter)
}

/// `ũ_I = D^{-1} (F̃_I − H̃_IB ũ_B)`, transformed system.
pub fn recover_interior_transformed(
    data: &DegreeData,
    d: [f64; 4],
    f_i: &Field3,
    u_b: &[f64],
    counter: &mut MulCounter,
) -> Result<Field3> {
    let cpl = coupling(data, true);
    let mut r = f_i.clone();
    let mut coupled = Field3::cube(data.n_interior());
    add_h_ib(data, d, &cpl, u_b, &mut coupled, counter)?;
    for (rv, cv) in r.data.iter_mut().zip(&coupled.data) {
        *rv -= cv;
    }
    transformed_interior_inverse(data, d, &r, counter)
}
