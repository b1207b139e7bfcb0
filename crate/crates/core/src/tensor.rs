//! Rank-3 nodal fields and Kronecker-product (sum-factorization) kernels.
//!
//! Layout convention, used everywhere in this crate: direction 1 is the
//! fastest index, i.e. entry `(i1, i2, i3)` lives at `i1 + n1*i2 + n1*n2*i3`.
//! A Kronecker product `A3 ⊗ A2 ⊗ A1` therefore applies its rightmost factor
//! along direction 1.

use crate::error::Error;
use crate::linalg::DMat;
use crate::Result;

/// Accumulator of floating-point multiplications.
///
/// Counting is opt-in: a disabled counter skips the bookkeeping so timing
/// runs are not distorted.
#[derive(Debug, Clone, Default)]
pub struct MulCounter {
    enabled: bool,
    count: u64,
}

impl MulCounter {
    pub fn enabled() -> Self {
        Self {
            enabled: true,
            count: 0,
        }
    }

    pub fn disabled() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, n: u64) {
        if self.enabled {
            self.count += n;
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn reset(&mut self) {
        self.count = 0;
    }

    pub fn merge(&mut self, other: &MulCounter) {
        self.count += other.count;
    }
}

/// Contiguous rank-3 field over element nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Field3 {
    pub dims: (usize, usize, usize),
    pub data: Vec<f64>,
}

impl Field3 {
    pub fn zeros(dims: (usize, usize, usize)) -> Self {
        Self {
            dims,
            data: vec![0.0; dims.0 * dims.1 * dims.2],
        }
    }

    pub fn from_vec(dims: (usize, usize, usize), data: Vec<f64>) -> Result<Self> {
        if data.len() != dims.0 * dims.1 * dims.2 {
            return Err(Error::DimensionMismatch {
                expected: dims.0 * dims.1 * dims.2,
                found: data.len(),
                context: "Field3 data length vs dims",
            });
        }
        Ok(Self { dims, data })
    }

    /// Cube field with the same extent in every direction.
    pub fn cube(n: usize) -> Self {
        Self::zeros((n, n, n))
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn idx(&self, i1: usize, i2: usize, i3: usize) -> usize {
        i1 + self.dims.0 * (i2 + self.dims.1 * i3)
    }

    #[inline]
    pub fn get(&self, i1: usize, i2: usize, i3: usize) -> f64 {
        self.data[self.idx(i1, i2, i3)]
    }

    #[inline]
    pub fn set(&mut self, i1: usize, i2: usize, i3: usize, v: f64) {
        let k = self.idx(i1, i2, i3);
        self.data[k] = v;
    }
}

fn axis_dim(dims: (usize, usize, usize), axis: usize) -> usize {
    match axis {
        0 => dims.0,
        1 => dims.1,
        2 => dims.2,
        _ => panic!("axis out of range"),
    }
}

/// Contracts `a` against one axis of `u`, leaving the other axes untouched.
///
/// `axis` is zero-based (0 = direction 1, the fastest index). The output
/// replaces the contracted extent by `a.nrows()`.
pub fn apply_axis(
    a: &DMat,
    axis: usize,
    u: &Field3,
    counter: &mut MulCounter,
) -> Result<Field3> {
    let n_in = a.ncols();
    let n_out = a.nrows();
    if axis_dim(u.dims, axis) != n_in {
        return Err(Error::DimensionMismatch {
            expected: n_in,
            found: axis_dim(u.dims, axis),
            context: "apply_axis extent vs matrix columns",
        });
    }
    let (n1, n2, n3) = u.dims;
    let mut out = match axis {
        0 => Field3::zeros((n_out, n2, n3)),
        1 => Field3::zeros((n1, n_out, n3)),
        2 => Field3::zeros((n1, n2, n_out)),
        _ => unreachable!(),
    };
    match axis {
        0 => {
            for i3 in 0..n3 {
                for i2 in 0..n2 {
                    let base_in = n1 * (i2 + n2 * i3);
                    let base_out = n_out * (i2 + n2 * i3);
                    for o in 0..n_out {
                        let row = a.row(o);
                        let mut acc = 0.0;
                        for j in 0..n_in {
                            acc += row[j] * u.data[base_in + j];
                        }
                        out.data[base_out + o] = acc;
                    }
                }
            }
        }
        1 => {
            for i3 in 0..n3 {
                for o in 0..n_out {
                    let row = a.row(o);
                    for j in 0..n_in {
                        let v = row[j];
                        let base_in = n1 * (j + n2 * i3);
                        let base_out = n1 * (o + n_out * i3);
                        for i1 in 0..n1 {
                            out.data[base_out + i1] += v * u.data[base_in + i1];
                        }
                    }
                }
            }
        }
        2 => {
            for o in 0..n_out {
                let row = a.row(o);
                for j in 0..n_in {
                    let v = row[j];
                    let base_in = n1 * n2 * j;
                    let base_out = n1 * n2 * o;
                    for r in 0..n1 * n2 {
                        out.data[base_out + r] += v * u.data[base_in + r];
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    counter.add((n_out * n_in) as u64 * (u.len() / n_in) as u64);
    Ok(out)
}

/// Applies `A3 ⊗ A2 ⊗ A1` by three axis contractions, in the fixed order
/// axis 1, axis 2, axis 3.
pub fn kron3_apply(
    a3: &DMat,
    a2: &DMat,
    a1: &DMat,
    u: &Field3,
    counter: &mut MulCounter,
) -> Result<Field3> {
    let t = apply_axis(a1, 0, u, counter)?;
    let t = apply_axis(a2, 1, &t, counter)?;
    apply_axis(a3, 2, &t, counter)
}

/// Builds the diagonal `d0 + d1 c[i1] + d2 b[i2] + d3 a[i3]` over the
/// tensor-product index set, i.e. the dense diagonal of
/// `d0 I⊗I⊗I + d1 I⊗I⊗diag(c) + d2 I⊗diag(b)⊗I + d3 diag(a)⊗I⊗I`.
///
/// All entries must come out strictly positive; a non-positive entry signals
/// invalid metric data.
pub fn diag3_build(a: &[f64], b: &[f64], c: &[f64], d: [f64; 4]) -> Result<Field3> {
    let mut out = Field3::zeros((c.len(), b.len(), a.len()));
    let mut k = 0;
    for &va in a {
        for &vb in b {
            for &vc in c {
                let v = d[0] + d[1] * vc + d[2] * vb + d[3] * va;
                if v <= 0.0 {
                    return Err(Error::NonPositiveDiagonal { index: k, value: v });
                }
                out.data[k] = v;
                k += 1;
            }
        }
    }
    Ok(out)
}
