use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DensityMatrix;
use crate::state::WalkState;
use crate::{Error, Result};

/// Projective measurement basis of the polarization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Basis {
    /// Horizontal / vertical.
    HV,
    /// Diagonal / antidiagonal.
    DA,
    /// Right / left circular.
    RL,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::HV, Basis::DA, Basis::RL];
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::HV => "H/V",
            Basis::DA => "D/A",
            Basis::RL => "R/L",
        })
    }
}

/// Outcome weights in one basis: counts, or exact probabilities in oracle mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisCounts {
    pub basis: Basis,
    /// H, D or R outcome.
    pub first: f64,
    /// V, A or L outcome.
    pub second: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shots {
    /// Draw this many shots per basis.
    Finite(u64),
    /// Report exact probabilities without sampling.
    Exact,
}

/// `(P_H, P_D, P_R)` of a density matrix.
pub fn outcome_probabilities(rho: &DensityMatrix) -> [f64; 3] {
    let [s1, s2, s3] = rho.bloch();
    [0.5 * (1.0 + s1), 0.5 * (1.0 + s2), 0.5 * (1.0 + s3)]
}

/// Measures the conditional polarization state at `position` in the three
/// bases. Deterministic for a fixed seed.
pub fn simulate_tomography(
    state: &WalkState,
    position: i64,
    shots: Shots,
    seed: u64,
) -> Result<Vec<BasisCounts>> {
    let rho = DensityMatrix::pure(&state.conditional_coin(position)?)?;
    let probs = outcome_probabilities(&rho);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(3);
    for (basis, p) in Basis::ALL.into_iter().zip(probs) {
        let p = p.clamp(0.0, 1.0);
        let (first, second) = match shots {
            Shots::Exact => (p, 1.0 - p),
            Shots::Finite(0) => return Err(Error::param("shots", "must be at least 1")),
            Shots::Finite(n) => {
                let k = (0..n).filter(|_| rng.random_bool(p)).count() as u64;
                (k as f64, (n - k) as f64)
            }
        };
        out.push(BasisCounts {
            basis,
            first,
            second,
        });
    }
    Ok(out)
}

/// Linear Stokes inversion. Counts that sum to an unphysical Bloch vector
/// are projected onto the unit ball.
pub fn reconstruct(counts: &[BasisCounts]) -> Result<DensityMatrix> {
    let mut s = [0.0; 3];
    for (i, basis) in Basis::ALL.into_iter().enumerate() {
        let c = counts
            .iter()
            .find(|c| c.basis == basis)
            .ok_or(Error::MissingBasis(basis))?;
        let total = c.first + c.second;
        if total.is_nan() || total <= 0.0 || c.first < 0.0 || c.second < 0.0 {
            return Err(Error::param("counts", "need a positive total per basis"));
        }
        s[i] = (c.first - c.second) / total;
    }
    Ok(DensityMatrix::from_bloch_projected(s))
}
