//! The primary part of the condensed operator: the exact restriction of the
//! element operator to boundary nodes, `H_BB` (nodal) or `H̃_BB`
//! (transformed).
//!
//! Because the mass matrix is diagonal and the stiffness matrix acts along
//! one direction at a time, every coupling in `H_BB` lies within a single
//! grid line. Lines whose transverse position is element-interior contribute
//! only their 2x2 endpoint coupling (the in-between nodes are interior);
//! lines touching a face or edge in the transverse position are entirely
//! boundary and get a full 1-D stiffness application. The former costs
//! O(n_I^2), the latter O(n_I^3) nodal (dense K) or O(n_I^2) transformed
//! (arrowhead K̃).

use super::DegreeData;
use crate::tensor::MulCounter;

/// Per-geometry scaled tables for the primary apply.
#[derive(Debug, Clone)]
pub(crate) struct PrimaryGeom {
    pub transformed: bool,
    /// `d0 * m_i m_j m_k` per canonical boundary position.
    mass_scaled: Vec<f64>,
    /// Per axis `t`: `d_t * m_a * m_b` over transverse positions `a + n*b`.
    cmat: [Vec<f64>; 3],
}

/// Builds the scaled coefficient tables for one geometry.
pub(crate) fn build_primary_geom(
    data: &DegreeData,
    d: [f64; 4],
    transformed: bool,
) -> PrimaryGeom {
    let n = data.p + 1;
    let mass3 = if transformed {
        &data.mass3_boundary_t
    } else {
        &data.mass3_boundary
    };
    let mass_scaled = mass3.iter().map(|m| d[0] * m).collect();
    let m1: Vec<f64> = if transformed {
        data.trans.mass_diag()
    } else {
        data.basis.mass.clone()
    };
    let mut cmat: [Vec<f64>; 3] = Default::default();
    for (t, tab) in cmat.iter_mut().enumerate() {
        let mut v = vec![0.0; n * n];
        for b in 0..n {
            for a in 0..n {
                v[a + n * b] = d[t + 1] * m1[a] * m1[b];
            }
        }
        *tab = v;
    }
    PrimaryGeom {
        transformed,
        mass_scaled,
        cmat,
    }
}

/// Adds `H_BB u` (or `H̃_BB u` when the geometry is transformed) into `out`,
/// both in canonical boundary order.
pub(crate) fn apply_primary(
    data: &DegreeData,
    geom: &PrimaryGeom,
    u: &[f64],
    out: &mut [f64],
    counter: &mut MulCounter,
) {
    let p = data.p;
    let n = p + 1;
    let nb = data.n_boundary();

    // mass diagonal
    for pos in 0..nb {
        out[pos] += geom.mass_scaled[pos] * u[pos];
    }
    counter.add(nb as u64);

    let k = &data.basis.stiffness;
    let (k00, k0p, kpp) = (k[(0, 0)], k[(0, p)], k[(p, p)]);
    let mut uline = vec![0.0; n];
    let mut vline = vec![0.0; n];
    for t in 0..3 {
        let table = &data.bline[t];
        let cmat = &geom.cmat[t];
        for b in 0..n {
            for a in 0..n {
                let c = cmat[a + n * b];
                let base = n * (a + n * b);
                if a > 0 && a < p && b > 0 && b < p {
                    // transverse-interior line: only the endpoints are
                    // boundary nodes; corner entries of K and K̃ coincide
                    let pos0 = table[base].unwrap() as usize;
                    let posp = table[base + p].unwrap() as usize;
                    let u0 = u[pos0];
                    let up = u[posp];
                    out[pos0] += c * (k00 * u0 + k0p * up);
                    out[posp] += c * (k0p * u0 + kpp * up);
                    counter.add(6);
                } else {
                    // fully boundary line
                    for i in 0..n {
                        uline[i] = u[table[base + i].unwrap() as usize];
                    }
                    if geom.transformed {
                        vline.iter_mut().for_each(|v| *v = 0.0);
                        let muls =
                            data.trans.apply_arrowhead(c, &uline, &mut vline);
                        counter.add(muls);
                        for i in 0..n {
                            out[table[base + i].unwrap() as usize] += vline[i];
                        }
                    } else {
                        for i in 0..n {
                            let mut acc = 0.0;
                            let row = k.row(i);
                            for (kv, uv) in row.iter().zip(&uline) {
                                acc += kv * uv;
                            }
                            out[table[base + i].unwrap() as usize] += c * acc;
                        }
                        counter.add((n * n + n) as u64);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::metric_coefficients;
    use crate::operators::{build_degree_data, full_dense, TransformContext};
    use rand::Rng;
    use rand::SeedableRng;

    /// Dense `H_BB` oracle via full assembly and boundary restriction.
    fn dense_primary(data: &DegreeData, d: [f64; 4]) -> crate::linalg::DMat {
        let h = full_dense(data, d);
        let b = &data.classes.boundary_order;
        h.submatrix(b, b)
    }

    #[test]
    fn nodal_primary_matches_dense_restriction() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for p in [2usize, 3, 5] {
            let data = build_degree_data(p).unwrap();
            let d = metric_coefficients([0.5, 1.7, 3.0], 1.0).unwrap();
            let geom = build_primary_geom(&data, d.d, false);
            let dense = dense_primary(&data, d.d);
            let nb = data.n_boundary();
            let u: Vec<f64> = (0..nb).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut got = vec![0.0; nb];
            apply_primary(&data, &geom, &u, &mut got, &mut MulCounter::disabled());
            let expect = dense.matvec(&u);
            let scale = expect.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (g, e) in got.iter().zip(&expect) {
                assert!((g - e).abs() < 1e-11 * scale, "p = {p}");
            }
        }
    }

    #[test]
    fn transformed_primary_matches_transformed_dense_restriction() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(32);
        for p in [2usize, 3, 5] {
            let data = build_degree_data(p).unwrap();
            let d = metric_coefficients([2.0, 0.9, 1.3], 0.7).unwrap();
            let geom = build_primary_geom(&data, d.d, true);
            // oracle: Ŝ H_BB Ŝᵀ via the boundary transform
            let dense = dense_primary(&data, d.d);
            let ctx = TransformContext::new(&data);
            let nb = data.n_boundary();
            let u: Vec<f64> = (0..nb).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut got = vec![0.0; nb];
            apply_primary(&data, &geom, &u, &mut got, &mut MulCounter::disabled());
            let expect = ctx.boundary_s(&dense.matvec(&ctx.boundary_s_t(&u)));
            let scale = expect.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (g, e) in got.iter().zip(&expect) {
                assert!((g - e).abs() < 1e-10 * scale, "p = {p}");
            }
        }
    }

    #[test]
    fn primary_operation_counts_at_p16() {
        let data = build_degree_data(16).unwrap();
        let n_i = 15u64;
        let d = metric_coefficients([1.0, 1.0, 1.0], 0.0).unwrap();
        let nb = data.n_boundary();
        let u = vec![1.0; nb];
        let mut out = vec![0.0; nb];

        let geom = build_primary_geom(&data, d.d, false);
        let mut c = MulCounter::enabled();
        apply_primary(&data, &geom, &u, &mut out, &mut c);
        let lead = 12 * n_i * n_i * n_i;
        assert!(c.count() >= lead, "{} < {lead}", c.count());
        assert!(c.count() <= lead + 200 * n_i * n_i);

        let geom = build_primary_geom(&data, d.d, true);
        let mut c = MulCounter::enabled();
        apply_primary(&data, &geom, &u, &mut out, &mut c);
        assert!(c.count() <= 200 * n_i * n_i, "{}", c.count());
    }
}
