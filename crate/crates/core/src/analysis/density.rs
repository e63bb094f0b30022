// float math is not inherent on every no_std target
#[allow(unused_imports)]
use num_traits::Float;

use crate::coin::CoinOperator;
use crate::state::CoinState;
use crate::{Error, Result, C64};

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-9;
const EIGEN_TOL: f64 = 1e-10;
// determinants below the rounding level of the entries; a pure state
// computes to about +-1e-17 here and sqrt would blow that up to 1e-9
const DET_FLOOR: f64 = 64.0 * f64::EPSILON;

/// Polarization density matrix in the (H, V) basis.
///
/// Construction validates Hermiticity, unit trace and positivity, so every
/// value of this type is a physical state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    m: [[C64; 2]; 2],
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

impl DensityMatrix {
    pub fn new(m: [[C64; 2]; 2]) -> Result<DensityMatrix> {
        let herm = (m[0][1] - m[1][0].conj())
            .norm()
            .max(m[0][0].im.abs())
            .max(m[1][1].im.abs());
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix("not Hermitian"));
        }
        let tr = m[0][0].re + m[1][1].re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix("trace is not 1"));
        }
        // symmetrize away the tolerated asymmetry
        let off = (m[0][1] + m[1][0].conj()) * 0.5;
        let rho = DensityMatrix {
            m: [[re(m[0][0].re), off], [off.conj(), re(m[1][1].re)]],
        };
        if rho.min_eigenvalue() < -EIGEN_TOL {
            return Err(Error::InvalidDensityMatrix("negative eigenvalue"));
        }
        Ok(rho)
    }

    /// Divides by the trace first; used for printed matrices whose entries
    /// were rounded.
    pub fn from_unnormalized(m: [[C64; 2]; 2]) -> Result<DensityMatrix> {
        let tr = m[0][0].re + m[1][1].re;
        if !(tr > 0.0 && tr.is_finite()) {
            return Err(Error::InvalidDensityMatrix("trace is not positive"));
        }
        let s = 1.0 / tr;
        DensityMatrix::new([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    /// `|c><c|` for the normalized coin state.
    pub fn pure(c: &CoinState) -> Result<DensityMatrix> {
        let c = c.normalized()?;
        DensityMatrix::new([
            [c.h * c.h.conj(), c.h * c.v.conj()],
            [c.v * c.h.conj(), c.v * c.v.conj()],
        ])
    }

    pub fn maximally_mixed() -> DensityMatrix {
        DensityMatrix {
            m: [[re(0.5), re(0.0)], [re(0.0), re(0.5)]],
        }
    }

    /// `(I + s1 Z + s2 X + s3 Y) / 2`; requires `|s| <= 1`.
    pub fn from_bloch(s: [f64; 3]) -> Result<DensityMatrix> {
        let len = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
        if len > 1.0 + EIGEN_TOL {
            return Err(Error::InvalidDensityMatrix("Bloch vector longer than 1"));
        }
        Ok(DensityMatrix::from_bloch_unchecked(s))
    }

    fn from_bloch_unchecked(s: [f64; 3]) -> DensityMatrix {
        let off = C64::new(s[1], -s[2]) * 0.5;
        DensityMatrix {
            m: [
                [re(0.5 * (1.0 + s[0])), off],
                [off.conj(), re(0.5 * (1.0 - s[0]))],
            ],
        }
    }

    /// Bloch vector clipped to the unit ball.
    pub fn from_bloch_projected(s: [f64; 3]) -> DensityMatrix {
        let len = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
        if len > 1.0 {
            DensityMatrix::from_bloch_unchecked([s[0] / len, s[1] / len, s[2] / len])
        } else {
            DensityMatrix::from_bloch_unchecked(s)
        }
    }

    /// Stokes vector `(s1, s2, s3)`: H/V, D/A and R/L contrasts.
    pub fn bloch(&self) -> [f64; 3] {
        [
            self.m[0][0].re - self.m[1][1].re,
            2.0 * self.m[0][1].re,
            -2.0 * self.m[0][1].im,
        ]
    }

    pub fn entries(&self) -> [[C64; 2]; 2] {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[i][j]
    }

    pub fn det(&self) -> f64 {
        (self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]).re
    }

    /// `(1 - |s|) / 2`.
    pub fn min_eigenvalue(&self) -> f64 {
        let [a, b, c] = self.bloch();
        0.5 * (1.0 - (a * a + b * b + c * c).sqrt())
    }

    pub fn purity(&self) -> f64 {
        let [a, b, c] = self.bloch();
        0.5 * (1.0 + a * a + b * b + c * c)
    }

    /// `M rho M^dagger`, renormalized.
    pub fn transformed(&self, op: &CoinOperator) -> Result<DensityMatrix> {
        let mm = [[op.m00, op.m01], [op.m10, op.m11]];
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                for k in 0..2 {
                    for l in 0..2 {
                        *cell += mm[i][k] * self.m[k][l] * mm[j][l].conj();
                    }
                }
            }
        }
        let tr = out[0][0].re + out[1][1].re;
        if tr <= 0.0 {
            return Err(Error::ZeroNorm);
        }
        DensityMatrix::from_unnormalized(out)
    }

    /// Largest entry-wise difference.
    pub fn max_diff(&self, other: &DensityMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        worst
    }
}

/// Uhlmann fidelity `(tr sqrt(sqrt(a) b sqrt(a)))^2`.
///
/// For 2x2 matrices this equals `tr(a b) + 2 sqrt(det a det b)`. Symmetric,
/// clamped to `[0, 1]` against rounding.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    let mut tr = C64::new(0.0, 0.0);
    for i in 0..2 {
        for k in 0..2 {
            tr += a.m[i][k] * b.m[k][i];
        }
    }
    let floor = |d: f64| if d < DET_FLOOR { 0.0 } else { d };
    let dets = (floor(a.det()) * floor(b.det())).sqrt();
    (tr.re + 2.0 * dets).clamp(0.0, 1.0)
}
