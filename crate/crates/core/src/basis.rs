//! One-dimensional building blocks: Gauss-Lobatto-Legendre quadrature, the
//! Lagrange-basis mass and stiffness matrices, the generalized
//! eigendecomposition of their interior blocks, and the transformed matrices
//! in which the interior blocks become identity and diagonal.

use crate::error::Error;
use crate::linalg::{sym_eigen, DMat};
use crate::Result;

/// One-dimensional nodal basis of degree `p` collocated at the GLL points.
#[derive(Debug, Clone)]
pub struct Basis1D {
    pub p: usize,
    /// GLL nodes in [-1, 1], strictly increasing.
    pub nodes: Vec<f64>,
    /// GLL quadrature weights.
    pub weights: Vec<f64>,
    /// Diagonal of the (GLL-lumped) mass matrix; equals the weights.
    pub mass: Vec<f64>,
    /// Dense symmetric stiffness matrix `K = D^T M D`.
    pub stiffness: DMat,
    /// Nodal differentiation matrix of the Lagrange basis.
    pub deriv: DMat,
}

impl Basis1D {
    /// Number of nodes per direction, `p + 1`.
    pub fn n(&self) -> usize {
        self.p + 1
    }

    /// Number of interior nodes per direction, `p - 1`.
    pub fn n_interior(&self) -> usize {
        self.p - 1
    }

    /// Interior part of the mass diagonal.
    pub fn mass_interior(&self) -> &[f64] {
        &self.mass[1..self.p]
    }

    /// Interior block of the stiffness matrix.
    pub fn stiffness_interior(&self) -> DMat {
        let idx: Vec<usize> = (1..self.p).collect();
        self.stiffness.submatrix(&idx, &idx)
    }

    /// Row 0 of the stiffness matrix restricted to interior columns.
    pub fn k0i(&self) -> Vec<f64> {
        (1..self.p).map(|j| self.stiffness[(0, j)]).collect()
    }

    /// Row p of the stiffness matrix restricted to interior columns.
    pub fn kpi(&self) -> Vec<f64> {
        (1..self.p).map(|j| self.stiffness[(self.p, j)]).collect()
    }
}

/// Evaluates the Legendre polynomial `P_p` and its derivative at `x`.
fn legendre_with_deriv(p: usize, x: f64) -> (f64, f64) {
    if p == 0 {
        return (1.0, 0.0);
    }
    let (mut pm1, mut dm1) = (1.0, 0.0); // P_0, P_0'
    let (mut pk, mut dk) = (x, 1.0); // P_1, P_1'
    for k in 1..p {
        let kf = k as f64;
        let pk1 = ((2.0 * kf + 1.0) * x * pk - kf * pm1) / (kf + 1.0);
        let dk1 = dm1 + (2.0 * kf + 1.0) * pk;
        pm1 = pk;
        dm1 = dk;
        pk = pk1;
        dk = dk1;
    }
    (pk, dk)
}

/// The `p+1` Gauss-Lobatto-Legendre nodes and weights on [-1, 1].
///
/// The interior nodes are the roots of `(1 - x^2) P_p'(x)`, located by Newton
/// iteration from Chebyshev-Gauss-Lobatto initial guesses. The rule is exact
/// for polynomials of degree `2p - 1`.
pub fn gll_rule(p: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if p < 1 {
        return Err(Error::DegreeTooLow { found: p, min: 1 });
    }
    let n = p + 1;
    let pf = p as f64;
    let mut nodes = vec![0.0; n];
    nodes[0] = -1.0;
    nodes[p] = 1.0;
    for k in 1..p {
        // Newton on f(x) = (1 - x^2) P_p'(x); by the Legendre ODE
        // f'(x) = -p (p + 1) P_p(x).
        let mut x = -(std::f64::consts::PI * k as f64 / pf).cos();
        for _ in 0..100 {
            let (lp, dlp) = legendre_with_deriv(p, x);
            let dx = (1.0 - x * x) * dlp / (pf * (pf + 1.0) * lp);
            x += dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[k] = x;
    }
    // enforce antisymmetry exactly
    for k in 0..n / 2 {
        let s = 0.5 * (nodes[n - 1 - k] - nodes[k]);
        nodes[k] = -s;
        nodes[n - 1 - k] = s;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let mut weights = vec![0.0; n];
    for k in 0..n {
        let (lp, _) = legendre_with_deriv(p, nodes[k]);
        weights[k] = 2.0 / (pf * (pf + 1.0) * lp * lp);
    }
    Ok((nodes, weights))
}

/// Nodal differentiation matrix via barycentric weights.
fn differentiation_matrix(nodes: &[f64]) -> DMat {
    let n = nodes.len();
    let mut bary = vec![1.0; n];
    for j in 0..n {
        for m in 0..n {
            if m != j {
                bary[j] *= nodes[j] - nodes[m];
            }
        }
        bary[j] = 1.0 / bary[j];
    }
    let mut d = DMat::zeros(n, n);
    for i in 0..n {
        let mut rowsum = 0.0;
        for j in 0..n {
            if i != j {
                let v = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
                d[(i, j)] = v;
                rowsum += v;
            }
        }
        d[(i, i)] = -rowsum;
    }
    d
}

/// Builds the degree-`p` basis: GLL rule, diagonal mass, differentiation
/// matrix and the stiffness matrix `K = D^T M D`, which is exact because the
/// integrand has degree `2p - 2`.
pub fn build_basis(p: usize) -> Result<Basis1D> {
    let (nodes, weights) = gll_rule(p)?;
    let deriv = differentiation_matrix(&nodes);
    let n = p + 1;
    let mut stiffness = DMat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut acc = 0.0;
            for q in 0..n {
                acc += weights[q] * deriv[(q, i)] * deriv[(q, j)];
            }
            stiffness[(i, j)] = acc;
            stiffness[(j, i)] = acc;
        }
    }
    Ok(Basis1D {
        p,
        mass: weights.clone(),
        nodes,
        weights,
        stiffness,
        deriv,
    })
}

/// Generalized eigendecomposition of the interior blocks:
/// `S_II M_II S_II^T = I` and `S_II K_II S_II^T = diag(lambda)`.
#[derive(Debug, Clone)]
pub struct InteriorEigen {
    /// Transformation matrix, `n_I x n_I`.
    pub s: DMat,
    /// Eigenvalues in ascending order, all positive.
    pub lambda: Vec<f64>,
}

impl InteriorEigen {
    /// `S_II^{-1} = M_II S_II^T`, a consequence of the mass normalization.
    pub fn s_inv(&self, mass_interior: &[f64]) -> DMat {
        let n = self.lambda.len();
        let mut out = DMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = mass_interior[i] * self.s[(j, i)];
            }
        }
        out
    }
}

/// Solves the generalized interior eigenproblem by symmetrization: with
/// `W = M_II^{-1/2}` the standard symmetric problem for `W K_II W` is solved
/// with cyclic Jacobi rotations, and `S_II = Q^T W`.
pub fn interior_eigendecomposition(basis: &Basis1D) -> Result<InteriorEigen> {
    if basis.p < 2 {
        return Err(Error::DegreeTooLow {
            found: basis.p,
            min: 2,
        });
    }
    let n_i = basis.n_interior();
    let m_ii = basis.mass_interior();
    for (i, &m) in m_ii.iter().enumerate() {
        if m <= 0.0 {
            return Err(Error::NonPositiveMass { index: i, value: m });
        }
    }
    let w: Vec<f64> = m_ii.iter().map(|m| 1.0 / m.sqrt()).collect();
    let k_ii = basis.stiffness_interior();
    let mut a = DMat::zeros(n_i, n_i);
    for i in 0..n_i {
        for j in 0..n_i {
            a[(i, j)] = w[i] * k_ii[(i, j)] * w[j];
        }
    }
    let (lambda, q) = sym_eigen(&a)?;
    let mut s = DMat::zeros(n_i, n_i);
    for i in 0..n_i {
        for j in 0..n_i {
            // S = Q^T W
            s[(i, j)] = q[(j, i)] * w[j];
        }
    }
    Ok(InteriorEigen { s, lambda })
}

/// One-dimensional matrices after the congruence transform with the padded
/// eigenvector matrix `S = diag(1, S_II, 1)`.
///
/// The transformed mass matrix is diagonal with corner entries `M_00`, `M_pp`
/// and an interior identity block. The transformed stiffness matrix is an
/// arrowhead: corner entries unchanged, dense first/last rows and columns
/// against the interior, and the diagonal eigenvalue block inside.
#[derive(Debug, Clone)]
pub struct TransformedBasis1D {
    pub p: usize,
    pub m00: f64,
    pub mpp: f64,
    pub k00: f64,
    pub k0p: f64,
    pub kpp: f64,
    /// Transformed coupling row `K~_0I = K_0I S_II^T`; by symmetry also the
    /// column `K~_I0 = S_II K_I0`.
    pub k0i: Vec<f64>,
    /// Transformed coupling row `K~_pI = K_pI S_II^T`.
    pub kpi: Vec<f64>,
    /// Interior eigenvalues (diagonal interior block of the transformed
    /// stiffness matrix).
    pub lambda: Vec<f64>,
}

impl TransformedBasis1D {
    /// Diagonal of the transformed mass matrix over all `p + 1` nodes.
    pub fn mass_diag(&self) -> Vec<f64> {
        let mut m = vec![1.0; self.p + 1];
        m[0] = self.m00;
        m[self.p] = self.mpp;
        m
    }

    /// Dense transformed mass matrix (oracle use).
    pub fn mt_dense(&self) -> DMat {
        DMat::from_diag(&self.mass_diag())
    }

    /// Dense transformed stiffness matrix (oracle use).
    pub fn kt_dense(&self) -> DMat {
        let p = self.p;
        let mut k = DMat::zeros(p + 1, p + 1);
        k[(0, 0)] = self.k00;
        k[(0, p)] = self.k0p;
        k[(p, 0)] = self.k0p;
        k[(p, p)] = self.kpp;
        for i in 0..p - 1 {
            k[(i + 1, i + 1)] = self.lambda[i];
            k[(0, i + 1)] = self.k0i[i];
            k[(i + 1, 0)] = self.k0i[i];
            k[(p, i + 1)] = self.kpi[i];
            k[(i + 1, p)] = self.kpi[i];
        }
        k
    }

    /// Applies the arrowhead stiffness matrix to a full line of `p + 1`
    /// values, adding `coef * K~ u` into `out`. Returns the number of
    /// multiplications spent.
    pub fn apply_arrowhead(&self, coef: f64, u: &[f64], out: &mut [f64]) -> u64 {
        let p = self.p;
        let n_i = p - 1;
        let mut acc0 = self.k00 * u[0] + self.k0p * u[p];
        let mut accp = self.k0p * u[0] + self.kpp * u[p];
        for i in 0..n_i {
            acc0 += self.k0i[i] * u[i + 1];
            accp += self.kpi[i] * u[i + 1];
            out[i + 1] += coef
                * (self.lambda[i] * u[i + 1]
                    + self.k0i[i] * u[0]
                    + self.kpi[i] * u[p]);
        }
        out[0] += coef * acc0;
        out[p] += coef * accp;
        // 2x2 corners (4), two coupling rows (2 n_I), interior diagonal plus
        // two rank-one columns (3 n_I), final coefficient scalings (n_I + 2).
        (6 * n_i + 8) as u64
    }
}

/// Builds the transformed one-dimensional matrices from the basis and its
/// interior eigendecomposition.
pub fn transformed_matrices(
    basis: &Basis1D,
    eig: &InteriorEigen,
) -> Result<TransformedBasis1D> {
    if eig.lambda.len() != basis.n_interior() {
        return Err(Error::DimensionMismatch {
            expected: basis.n_interior(),
            found: eig.lambda.len(),
            context: "eigendecomposition size vs basis degree",
        });
    }
    let p = basis.p;
    let k0i_raw = basis.k0i();
    let kpi_raw = basis.kpi();
    let n_i = basis.n_interior();
    let mut k0i = vec![0.0; n_i];
    let mut kpi = vec![0.0; n_i];
    // K~_0I = K_0I S_II^T
    for j in 0..n_i {
        let mut a0 = 0.0;
        let mut ap = 0.0;
        for m in 0..n_i {
            a0 += k0i_raw[m] * eig.s[(j, m)];
            ap += kpi_raw[m] * eig.s[(j, m)];
        }
        k0i[j] = a0;
        kpi[j] = ap;
    }
    Ok(TransformedBasis1D {
        p,
        m00: basis.mass[0],
        mpp: basis.mass[p],
        k00: basis.stiffness[(0, 0)],
        k0p: basis.stiffness[(0, p)],
        kpp: basis.stiffness[(p, p)],
        k0i,
        kpi,
        lambda: eig.lambda.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DMat;

    #[test]
    fn gll_rejects_degree_zero() {
        assert!(gll_rule(0).is_err());
    }

    #[test]
    fn gll_p1_is_endpoint_rule() {
        let (nodes, weights) = gll_rule(1).unwrap();
        assert_eq!(nodes, vec![-1.0, 1.0]);
        assert_eq!(weights, vec![1.0, 1.0]);
    }

    #[test]
    fn gll_p2_matches_exactness_conditions() {
        // Independent oracle: with nodes fixed at (-1, 0, 1), solve the
        // moment equations sum w_k x_k^m = int x^m for m = 0, 1, 2 by a
        // dense solve; degree 3 is then exact by antisymmetry.
        let vand = DMat::from_rows(&[
            vec![1.0, 1.0, 1.0],
            vec![-1.0, 0.0, 1.0],
            vec![1.0, 0.0, 1.0],
        ]);
        let moments = vec![2.0, 0.0, 2.0 / 3.0];
        let expect_w = vand.solve_vec(&moments).unwrap();

        let (nodes, weights) = gll_rule(2).unwrap();
        assert!((nodes[0] + 1.0).abs() < 1e-15);
        assert!(nodes[1].abs() < 1e-15);
        assert!((nodes[2] - 1.0).abs() < 1e-15);
        for (w, e) in weights.iter().zip(&expect_w) {
            assert!((w - e).abs() < 1e-14, "{w} vs {e}");
        }
    }

    #[test]
    fn gll_p16_weights_and_symmetry() {
        let (nodes, weights) = gll_rule(16).unwrap();
        let sum: f64 = weights.iter().sum();
        assert!((sum - 2.0).abs() < 1e-13);
        for k in 0..nodes.len() {
            assert!((nodes[k] + nodes[nodes.len() - 1 - k]).abs() < 1e-14);
        }
        assert!(nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn quadrature_exact_for_degree_2p_minus_1() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for p in 2..=16 {
            let (nodes, weights) = gll_rule(p).unwrap();
            let deg = 2 * p - 1;
            let coeffs: Vec<f64> =
                (0..=deg).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let eval = |x: f64| {
                coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
            };
            let quad: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(&x, &w)| w * eval(x))
                .sum();
            // exact integral of the monomial expansion
            let exact: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(m, c)| {
                    if m % 2 == 0 {
                        2.0 * c / (m as f64 + 1.0)
                    } else {
                        0.0
                    }
                })
                .sum();
            let scale = coeffs.iter().map(|c| c.abs()).sum::<f64>().max(1.0);
            assert!(
                (quad - exact).abs() < 1e-12 * scale,
                "p = {p}: {quad} vs {exact}"
            );
        }
    }

    #[test]
    fn basis_p1_stiffness_is_hat_function_stiffness() {
        let b = build_basis(1).unwrap();
        assert!((b.stiffness[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((b.stiffness[(0, 1)] + 0.5).abs() < 1e-14);
        assert!((b.stiffness[(1, 1)] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn basis_p2_interior_stiffness() {
        // phi_1 = 1 - xi^2, integral of (phi_1')^2 = int 4 xi^2 = 8/3
        let b = build_basis(2).unwrap();
        assert!((b.stiffness[(1, 1)] - 8.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn stiffness_rows_sum_to_zero() {
        for p in 1..=16 {
            let b = build_basis(p).unwrap();
            for i in 0..=p {
                let s: f64 = (0..=p).map(|j| b.stiffness[(i, j)]).sum();
                assert!(s.abs() < 1e-12, "p = {p}, row {i}: {s}");
            }
        }
    }

    #[test]
    fn eigen_p2_closed_form() {
        let b = build_basis(2).unwrap();
        let e = interior_eigendecomposition(&b).unwrap();
        // M_II = 4/3, K_II = 8/3 => lambda = 2, S = sqrt(3)/2
        assert!((e.lambda[0] - 2.0).abs() < 1e-13);
        assert!((e.s[(0, 0)] - 3f64.sqrt() / 2.0).abs() < 1e-13);
    }

    #[test]
    fn eigen_invariants_up_to_p32() {
        for p in 2..=32 {
            let b = build_basis(p).unwrap();
            let e = interior_eigendecomposition(&b).unwrap();
            let n_i = p - 1;
            let m = DMat::from_diag(b.mass_interior());
            let smst = e.s.matmul(&m).matmul(&e.s.transpose());
            assert!(
                smst.sub(&DMat::identity(n_i)).max_abs() < 1e-11,
                "p = {p}"
            );
            let skst = e
                .s
                .matmul(&b.stiffness_interior())
                .matmul(&e.s.transpose());
            assert!(
                skst.sub(&DMat::from_diag(&e.lambda)).max_abs()
                    < 1e-11 * e.lambda[n_i - 1].max(1.0),
                "p = {p}"
            );
            assert!(e.lambda.iter().all(|&l| l > 0.0), "p = {p}");
            // S^{-1} = M_II S^T
            let sinv = e.s_inv(b.mass_interior());
            let prod = e.s.matmul(&sinv);
            assert!(prod.sub(&DMat::identity(n_i)).max_abs() < 1e-11);
        }
    }

    #[test]
    fn eigen_p8_reconstruction_oracle() {
        let b = build_basis(8).unwrap();
        let e = interior_eigendecomposition(&b).unwrap();
        // K_II = S^{-1} Lambda S^{-T}
        let sinv = e.s_inv(b.mass_interior());
        let rec = sinv
            .matmul(&DMat::from_diag(&e.lambda))
            .matmul(&sinv.transpose());
        assert!(rec.sub(&b.stiffness_interior()).max_abs() < 1e-10);
    }

    #[test]
    fn transformed_matrices_match_padded_sandwich() {
        for p in 2..=8 {
            let b = build_basis(p).unwrap();
            let e = interior_eigendecomposition(&b).unwrap();
            let t = transformed_matrices(&b, &e).unwrap();
            // padded S
            let mut s = DMat::identity(p + 1);
            for i in 0..p - 1 {
                for j in 0..p - 1 {
                    s[(i + 1, j + 1)] = e.s[(i, j)];
                }
            }
            let m = DMat::from_diag(&b.mass);
            let mt = s.matmul(&m).matmul(&s.transpose());
            let kt = s.matmul(&b.stiffness).matmul(&s.transpose());
            assert!(mt.sub(&t.mt_dense()).max_abs() < 1e-11, "p = {p}");
            assert!(kt.sub(&t.kt_dense()).max_abs() < 1e-11, "p = {p}");
        }
    }

    #[test]
    fn transformed_p2_interior_entry() {
        let b = build_basis(2).unwrap();
        let e = interior_eigendecomposition(&b).unwrap();
        let t = transformed_matrices(&b, &e).unwrap();
        assert!((t.lambda[0] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn arrowhead_apply_matches_dense() {
        let b = build_basis(5).unwrap();
        let e = interior_eigendecomposition(&b).unwrap();
        let t = transformed_matrices(&b, &e).unwrap();
        let u: Vec<f64> = (0..=5).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut got = vec![0.0; 6];
        t.apply_arrowhead(1.3, &u, &mut got);
        let expect = t.kt_dense().matvec(&u);
        for (g, ex) in got.iter().zip(&expect) {
            assert!((g - 1.3 * ex).abs() < 1e-12);
        }
    }
}
