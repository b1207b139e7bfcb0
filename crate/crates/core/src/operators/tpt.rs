//! Sum-factorization of the condensed operator in the transformed system.
//!
//! After the congruence transform with the padded eigenvector matrix the
//! interior blocks are diagonal, so the face-to-eigenspace suboperators lose
//! their tangential factors: each is a single thin arrowhead column along
//! the normal axis. Six thin expansions, one diagonal scaling and six thin
//! contractions evaluate the condensed part in `13 n_I³` multiplications.
//! The primary part is the exact `H̃_BB`, a diagonal plus arrowhead lines,
//! costing `O(n_I²)`.

use super::{
    add_face, apply_primary, build_primary_geom, extract_face, face_axis_side,
    ApplyCounters, DegreeData, PrimaryGeom,
};
use crate::error::Error;
use crate::linalg::DMat;
use crate::mesh::MetricCoefficients;
use crate::tensor::{apply_axis, diag3_build, Field3};
use crate::Result;

/// Precomputed per-geometry data of the transformed variant.
#[derive(Debug, Clone)]
pub struct CondensedOperatorTpt<'a> {
    pub data: &'a DegreeData,
    pub d: [f64; 4],
    dinv: Field3,
    /// Per face: thin column `d_t * K̃_I{0|p}` as an `n_I x 1` matrix.
    expand: Vec<DMat>,
    /// Per face: its transpose, `1 x n_I`.
    contract: Vec<DMat>,
    prim: PrimaryGeom,
}

/// Builds the transformed factorization for one geometry.
pub fn precompute_tpt<'a>(
    data: &'a DegreeData,
    d: MetricCoefficients,
) -> Result<CondensedOperatorTpt<'a>> {
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
    Ok(CondensedOperatorTpt {
        data,
        d: d.d,
        dinv: diag,
        expand,
        contract,
        prim: build_primary_geom(data, d.d, true),
    })
}

impl CondensedOperatorTpt<'_> {
    /// Applies the transformed condensed element operator
    /// `Ĥ̃ = H̃_BB − H̃_BI D⁻¹ H̃_IB` to a transformed boundary vector.
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

        let mut check = Field3::cube(n_i);
        for f in 0..6 {
            let (axis, _) = face_axis_side(f);
            let face = extract_face(&data.classes, ub, f);
            let e = apply_axis(&self.expand[f], axis, &face, cc)?;
            for (a, b) in check.data.iter_mut().zip(&e.data) {
                *a += b;
            }
        }
        for (v, di) in check.data.iter_mut().zip(&self.dinv.data) {
            *v *= di;
        }
        cc.add((n_i * n_i * n_i) as u64);

        let mut out = vec![0.0; nb];
        for f in 0..6 {
            let (axis, _) = face_axis_side(f);
            let w = apply_axis(&self.contract[f], axis, &check, cc)?;
            add_face(&data.classes, &w, f, &mut out);
        }
        for v in out.iter_mut() {
            *v = -*v;
        }

        apply_primary(data, &self.prim, ub, &mut out, &mut counters.primary);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::metric_coefficients;
    use crate::operators::{build_degree_data, schur_dense_transformed};
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn p2_unit_cube_matches_transformed_oracle_on_unit_vectors() {
        let data = build_degree_data(2).unwrap();
        let d = metric_coefficients([2.0, 2.0, 2.0], 0.0).unwrap();
        let op = precompute_tpt(&data, d).unwrap();
        let oracle = schur_dense_transformed(&data, d.d).unwrap();
        let nb = data.n_boundary();
        for j in 0..nb {
            let mut e = vec![0.0; nb];
            e[j] = 1.0;
            let got = op.apply(&e, &mut ApplyCounters::disabled()).unwrap();
            for r in 0..nb {
                assert!(
                    (got[r] - oracle[(r, j)]).abs() < 1e-11,
                    "column {j}, row {r}"
                );
            }
        }
    }

    #[test]
    fn matches_transformed_oracle_random_geometries() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(71);
        for p in [3usize, 4] {
            let data = build_degree_data(p).unwrap();
            for _ in 0..5 {
                let h = [
                    rng.gen_range(0.1..10.0),
                    rng.gen_range(0.1..10.0),
                    rng.gen_range(0.1..10.0),
                ];
                let lambda = if rng.gen_bool(0.5) {
                    0.0
                } else {
                    std::f64::consts::PI
                };
                let d = metric_coefficients(h, lambda).unwrap();
                let op = precompute_tpt(&data, d).unwrap();
                let oracle = schur_dense_transformed(&data, d.d).unwrap();
                let nb = data.n_boundary();
                let u: Vec<f64> =
                    (0..nb).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let got =
                    op.apply(&u, &mut ApplyCounters::disabled()).unwrap();
                let expect = oracle.matvec(&u);
                let scale =
                    expect.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                for (g, e) in got.iter().zip(&expect) {
                    assert!((g - e).abs() < 1e-10 * scale, "p = {p}");
                }
            }
        }
    }

    #[test]
    fn face_self_coupling_is_diagonal() {
        // the east-face self-block of the transformed primary part couples
        // each face node only to itself
        let data = build_degree_data(3).unwrap();
        let d = metric_coefficients([1.5, 0.7, 2.0], 0.4).unwrap();
        let oracle = schur_dense_transformed(&data, d.d).unwrap();
        let f = 1; // east
        let off = data.classes.face_offset(f);
        let n_f = 4; // (p-1)^2
        for r in 0..n_f {
            for c in 0..n_f {
                if r != c {
                    assert!(oracle[(off + r, off + c)].abs() < 1e-11);
                }
            }
        }
        // diagonal entries follow the pattern
        // d0 m_pp + d1 K_pp + d2 m_pp λ_a + d3 m_pp λ_b, minus the
        // condensed correction d1² Σ_i k̃_pi² / D[i,a,b]
        let lam = &data.eig.lambda;
        let t = &data.trans;
        let dd = d.d;
        for b in 0..2 {
            for a in 0..2 {
                // transverse masses are 1 in the transformed system
                let prim = dd[0] * t.mpp
                    + dd[1] * t.kpp
                    + dd[2] * t.mpp * lam[a]
                    + dd[3] * t.mpp * lam[b];
                let corr: f64 = (0..2)
                    .map(|i| {
                        let den =
                            dd[0] + dd[1] * lam[i] + dd[2] * lam[a] + dd[3] * lam[b];
                        dd[1] * dd[1] * t.kpi[i] * t.kpi[i] / den
                    })
                    .sum();
                let got = oracle[(off + a + 2 * b, off + a + 2 * b)];
                assert!((got - (prim - corr)).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn condensed_count_is_exactly_13_cubes() {
        let data = build_degree_data(16).unwrap();
        let d = metric_coefficients([1.0, 1.0, 1.0], std::f64::consts::PI).unwrap();
        let op = precompute_tpt(&data, d).unwrap();
        let u = vec![1.0; data.n_boundary()];
        let mut c = ApplyCounters::enabled();
        op.apply(&u, &mut c).unwrap();
        let n_i = 15u64;
        assert_eq!(c.condensed.count(), 13 * n_i.pow(3));
        assert!(c.primary.count() <= 200 * n_i * n_i);
    }
}
