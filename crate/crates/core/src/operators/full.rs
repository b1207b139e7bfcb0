//! The uncondensed element Helmholtz operator
//! `H = d0 M⊗M⊗M + d1 M⊗M⊗K + d2 M⊗K⊗M + d3 K⊗M⊗M`.

use super::DegreeData;
use crate::error::Error;
use crate::mesh::MetricCoefficients;
use crate::tensor::{apply_axis, Field3, MulCounter};
use crate::Result;

/// Matrix-free element operator over all `(p+1)^3` nodes.
#[derive(Debug, Clone, Copy)]
pub struct FullElementOperator<'a> {
    pub data: &'a DegreeData,
    pub d: [f64; 4],
}

impl<'a> FullElementOperator<'a> {
    pub fn new(data: &'a DegreeData, d: MetricCoefficients) -> Self {
        Self { data, d: d.d }
    }

    /// Applies the operator by one stiffness sweep per direction plus the
    /// pointwise mass diagonal; the transverse mass factors are diagonal and
    /// folded into the pointwise scaling.
    pub fn apply(&self, u: &Field3, counter: &mut MulCounter) -> Result<Field3> {
        let n = self.data.p + 1;
        if u.dims != (n, n, n) {
            return Err(Error::DimensionMismatch {
                expected: n * n * n,
                found: u.len(),
                context: "element field size vs degree",
            });
        }
        let m = &self.data.basis.mass;
        let k = &self.data.basis.stiffness;
        let d = self.d;
        let mut out = Field3::cube(n);
        // d0 (M⊗M⊗M) u, pointwise
        for i3 in 0..n {
            for i2 in 0..n {
                for i1 in 0..n {
                    let v = d[0] * m[i1] * m[i2] * m[i3] * u.get(i1, i2, i3);
                    out.set(i1, i2, i3, v);
                }
            }
        }
        counter.add(4 * (n * n * n) as u64);
        // one K sweep per direction, transverse masses pointwise
        for t in 0..3 {
            let ku = apply_axis(k, t, u, counter)?;
            for i3 in 0..n {
                for i2 in 0..n {
                    for i1 in 0..n {
                        let mm = match t {
                            0 => m[i2] * m[i3],
                            1 => m[i1] * m[i3],
                            _ => m[i1] * m[i2],
                        };
                        let idx = out.idx(i1, i2, i3);
                        out.data[idx] += d[t + 1] * mm * ku.get(i1, i2, i3);
                    }
                }
            }
            counter.add(3 * (n * n * n) as u64);
        }
        Ok(out)
    }
}
