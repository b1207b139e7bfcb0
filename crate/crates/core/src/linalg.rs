//! Small dense matrices used for precomputation and for the dense oracles.
//!
//! Everything in here operates on matrices of modest size (at most a few
//! thousand rows), so a straightforward row-major layout with partial-pivot
//! LU and a cyclic Jacobi eigensolver is sufficient.

use crate::error::Error;
use crate::Result;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DMat {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = if nrows == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self { nrows, ncols, data }
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> DMat {
        let mut t = DMat::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DMat) -> DMat {
        assert_eq!(self.ncols, other.nrows, "matmul dimension mismatch");
        let mut out = DMat::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let out_row =
                    &mut out.data[i * other.ncols..(i + 1) * other.ncols];
                for (o, &b) in out_row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.ncols, x.len(), "matvec dimension mismatch");
        let mut y = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            let mut acc = 0.0;
            for (a, b) in self.row(i).iter().zip(x) {
                acc += a * b;
            }
            y[i] = acc;
        }
        y
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn add_assign(&mut self, other: &DMat) {
        assert_eq!(self.nrows, other.nrows);
        assert_eq!(self.ncols, other.ncols);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn sub(&self, other: &DMat) -> DMat {
        assert_eq!(self.nrows, other.nrows);
        assert_eq!(self.ncols, other.ncols);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    /// Maximum absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Extracts the submatrix with the given row and column index sets.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> DMat {
        let mut out = DMat::zeros(rows.len(), cols.len());
        for (ri, &r) in rows.iter().enumerate() {
            for (ci, &c) in cols.iter().enumerate() {
                out[(ri, ci)] = self[(r, c)];
            }
        }
        out
    }

    /// Solves `self * X = B` by LU with partial pivoting. `self` is consumed
    /// logically (a copy is factorized).
    pub fn solve(&self, b: &DMat) -> Result<DMat> {
        assert_eq!(self.nrows, self.ncols, "solve needs a square matrix");
        assert_eq!(self.nrows, b.nrows, "solve rhs mismatch");
        let n = self.nrows;
        let mut a = self.clone();
        let mut x = b.clone();
        for k in 0..n {
            let mut piv = k;
            let mut pmax = a[(k, k)].abs();
            for i in (k + 1)..n {
                let v = a[(i, k)].abs();
                if v > pmax {
                    pmax = v;
                    piv = i;
                }
            }
            if pmax == 0.0 {
                return Err(Error::SingularMatrix { step: k, pivot: 0.0 });
            }
            if piv != k {
                for j in 0..n {
                    let tmp = a[(k, j)];
                    a[(k, j)] = a[(piv, j)];
                    a[(piv, j)] = tmp;
                }
                for j in 0..x.ncols {
                    let tmp = x[(k, j)];
                    x[(k, j)] = x[(piv, j)];
                    x[(piv, j)] = tmp;
                }
            }
            let akk = a[(k, k)];
            for i in (k + 1)..n {
                let l = a[(i, k)] / akk;
                if l == 0.0 {
                    continue;
                }
                a[(i, k)] = l;
                for j in (k + 1)..n {
                    a[(i, j)] -= l * a[(k, j)];
                }
                for j in 0..x.ncols {
                    x[(i, j)] -= l * x[(k, j)];
                }
            }
        }
        // back substitution
        for j in 0..x.ncols {
            for i in (0..n).rev() {
                let mut acc = x[(i, j)];
                for k in (i + 1)..n {
                    acc -= a[(i, k)] * x[(k, j)];
                }
                x[(i, j)] = acc / a[(i, i)];
            }
        }
        Ok(x)
    }

    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        let rhs = DMat {
            nrows: b.len(),
            ncols: 1,
            data: b.to_vec(),
        };
        let x = self.solve(&rhs)?;
        Ok(x.data)
    }

    pub fn inverse(&self) -> Result<DMat> {
        self.solve(&DMat::identity(self.nrows))
    }
}

impl std::ops::Index<(usize, usize)> for DMat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.ncols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.ncols + j]
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns the eigenvalues in ascending order and the matrix whose columns
/// are the corresponding orthonormal eigenvectors. The sign of each
/// eigenvector is fixed such that its largest-magnitude entry is positive.
pub fn sym_eigen(a: &DMat) -> Result<(Vec<f64>, DMat)> {
    assert_eq!(a.nrows, a.ncols, "sym_eigen needs a square matrix");
    let n = a.nrows;
    let mut a = a.clone();
    let mut q = DMat::identity(n);
    let tol = 1e-14;
    let max_sweeps = 100;

    let off = |m: &DMat| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)] * m[(i, j)];
                }
            }
        }
        s.sqrt()
    };
    let norm = off(&a).max(a.max_abs()).max(1.0);

    let mut sweeps = 0;
    while off(&a) > tol * norm {
        sweeps += 1;
        if sweeps > max_sweeps {
            return Err(Error::EigenNoConvergence(max_sweeps));
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apq = a[(p, r)];
                if apq.abs() <= tol * norm * 1e-2 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(r, r)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, r)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, r)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(r, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(r, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkq = q[(k, r)];
                    q[(k, p)] = c * qkp - s * qkq;
                    q[(k, r)] = s * qkp + c * qkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
    let mut lambda = Vec::with_capacity(n);
    let mut vectors = DMat::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        lambda.push(a[(src, src)]);
        // sign fix: largest-magnitude entry positive
        let mut imax = 0;
        let mut vmax = 0.0;
        for k in 0..n {
            if q[(k, src)].abs() > vmax {
                vmax = q[(k, src)].abs();
                imax = k;
            }
        }
        let sign = if q[(imax, src)] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..n {
            vectors[(k, col)] = sign * q[(k, src)];
        }
    }
    Ok((lambda, vectors))
}

/// Dense Kronecker product `A ⊗ B`.
pub fn kron(a: &DMat, b: &DMat) -> DMat {
    let mut out = DMat::zeros(a.nrows * b.nrows, a.ncols * b.ncols);
    for ia in 0..a.nrows {
        for ja in 0..a.ncols {
            let v = a[(ia, ja)];
            if v == 0.0 {
                continue;
            }
            for ib in 0..b.nrows {
                for jb in 0..b.ncols {
                    out[(ia * b.nrows + ib, ja * b.ncols + jb)] = v * b[(ib, jb)];
                }
            }
        }
    }
    out
}

/// Dense `A3 ⊗ A2 ⊗ A1` with the rightmost factor acting along direction 1
/// (the fastest index).
pub fn kron3_dense(a3: &DMat, a2: &DMat, a1: &DMat) -> DMat {
    kron(a3, &kron(a2, a1))
}
