//! Manufactured solution for verification: a smooth five-factor product of
//! one cosine and four sines of linear arguments, with closed-form gradient
//! and Laplacian so the right-hand side `f = λ u − Δu` is exact.

use crate::error::Error;
use crate::Result;

/// Wave directions of the five factors; factor `m` is
/// `g_m(k (c_m · x + b_m))` with `g_0 = cos` and `g_1..g_4 = sin`.
const C: [[f64; 3]; 5] = [
    [1.0, -3.0, 2.0],
    [1.0, 0.0, 0.0],
    [0.0, -1.0, 0.0],
    [2.0, 1.0, 0.0],
    [3.0, -2.0, 2.0],
];
const B: [f64; 5] = [0.0, 1.0, 1.0, 0.0, 0.0];

/// Helmholtz problem `λ u − Δu = f` with the manufactured exact solution
///
/// `u(x) = cos(k(x₁−3x₂+2x₃)) sin(k(1+x₁)) sin(k(1−x₂)) sin(k(2x₁+x₂))
///         sin(k(3x₁−2x₂+2x₃))`.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedProblem {
    pub k: f64,
    pub lambda: f64,
}

impl ManufacturedProblem {
    pub fn new(k: f64, lambda: f64) -> Result<Self> {
        if lambda < 0.0 {
            return Err(Error::NegativeHelmholtzParameter(lambda));
        }
        Ok(Self { k, lambda })
    }

    /// Factor values and first derivatives with respect to the argument
    /// `t_m = k (c_m · x + b_m)`; the second derivative is `-g_m`.
    fn factors(&self, x: [f64; 3]) -> ([f64; 5], [f64; 5]) {
        let mut g = [0.0; 5];
        let mut dg = [0.0; 5];
        for m in 0..5 {
            let t = self.k * (C[m][0] * x[0] + C[m][1] * x[1] + C[m][2] * x[2] + B[m]);
            if m == 0 {
                g[m] = t.cos();
                dg[m] = -t.sin();
            } else {
                g[m] = t.sin();
                dg[m] = t.cos();
            }
        }
        (g, dg)
    }

    pub fn u_exact(&self, x: [f64; 3]) -> f64 {
        let (g, _) = self.factors(x);
        g.iter().product()
    }

    /// Gradient by the product rule over the five factors.
    pub fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        let (g, dg) = self.factors(x);
        let mut grad = [0.0; 3];
        for m in 0..5 {
            let mut rest = 1.0;
            for (l, gl) in g.iter().enumerate() {
                if l != m {
                    rest *= gl;
                }
            }
            for d in 0..3 {
                grad[d] += self.k * C[m][d] * dg[m] * rest;
            }
        }
        grad
    }

    /// Laplacian by the product rule: pure second-derivative terms (where
    /// `g'' = -g`) plus mixed first-derivative cross terms.
    pub fn laplacian(&self, x: [f64; 3]) -> f64 {
        let (g, dg) = self.factors(x);
        let k2 = self.k * self.k;
        let dot = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let mut lap = 0.0;
        for m in 0..5 {
            let mut rest = 1.0;
            for (l, gl) in g.iter().enumerate() {
                if l != m {
                    rest *= gl;
                }
            }
            lap += -k2 * dot(&C[m], &C[m]) * g[m] * rest;
        }
        for m in 0..5 {
            for n in m + 1..5 {
                let mut rest = 1.0;
                for (l, gl) in g.iter().enumerate() {
                    if l != m && l != n {
                        rest *= gl;
                    }
                }
                lap += 2.0 * k2 * dot(&C[m], &C[n]) * dg[m] * dg[n] * rest;
            }
        }
        lap
    }

    /// `f = λ u − Δu`.
    pub fn rhs(&self, x: [f64; 3]) -> f64 {
        self.lambda * self.u_exact(x) - self.laplacian(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn vanishes_where_second_coordinate_is_one() {
        let p = ManufacturedProblem::new(5.0, 0.0).unwrap();
        for &(x1, x3) in &[(0.0, 0.0), (0.3, -0.7), (1.0, 2.0), (-0.5, 0.9)] {
            assert!(p.u_exact([x1, 1.0, x3]).abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(91);
        let p = ManufacturedProblem::new(5.0, 0.0).unwrap();
        let h = 1e-5;
        for _ in 0..20 {
            let x: [f64; 3] = [
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1.0),
            ];
            let grad = p.gradient(x);
            for d in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[d] += h;
                xm[d] -= h;
                let fd = (p.u_exact(xp) - p.u_exact(xm)) / (2.0 * h);
                assert!(
                    (grad[d] - fd).abs() < 1e-6 * grad[d].abs().max(1.0),
                    "dir {d}: {} vs {fd}",
                    grad[d]
                );
            }
        }
    }

    #[test]
    fn laplacian_matches_central_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(92);
        let p = ManufacturedProblem::new(5.0, 0.0).unwrap();
        let h = 1e-4;
        for _ in 0..20 {
            let x: [f64; 3] = [
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1.0),
            ];
            let lap = p.laplacian(x);
            let mut fd = 0.0;
            for d in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[d] += h;
                xm[d] -= h;
                fd += (p.u_exact(xp) - 2.0 * p.u_exact(x) + p.u_exact(xm)) / (h * h);
            }
            assert!(
                (lap - fd).abs() < 1e-5 * lap.abs().max(1.0),
                "{lap} vs {fd}"
            );
        }
    }

    #[test]
    fn rhs_is_negative_laplacian_for_zero_lambda() {
        let p = ManufacturedProblem::new(5.0, 0.0).unwrap();
        let x = [0.2, 0.4, 0.8];
        assert!((p.rhs(x) + p.laplacian(x)).abs() < 1e-13);
        let q = ManufacturedProblem::new(5.0, 2.0).unwrap();
        assert!((q.rhs(x) - (2.0 * q.u_exact(x) - q.laplacian(x))).abs() < 1e-13);
        assert!(ManufacturedProblem::new(5.0, -1.0).is_err());
    }
}
