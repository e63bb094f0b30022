//! Coin operators in the (H, V) polarization basis.
//!
//! Global phase conventions are fixed per constructor and matter once
//! different coins act on different positions of the same run:
//!
//! - [`eom_coin`]: `e^{i phase} [[cos p, i sin p], [i sin p, cos p]]`.
//! - [`hwp`]: real form `[[cos 2t, sin 2t], [sin 2t, -cos 2t]]`.
//! - [`qwp`]: retarder form `R(t) diag(1, i) R(-t)`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};
use core::fmt;
use core::ops::Mul;
use core::str::FromStr;
// float math is not inherent on every no_std target
#[allow(unused_imports)]
use num_traits::Float;

use crate::state::CoinState;
use crate::{Error, Result, C64};

/// 2x2 complex matrix acting on the polarization qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinOperator {
    pub m00: C64,
    pub m01: C64,
    pub m10: C64,
    pub m11: C64,
}

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

impl CoinOperator {
    pub const fn new(m00: C64, m01: C64, m10: C64, m11: C64) -> Self {
        CoinOperator { m00, m01, m10, m11 }
    }

    pub const fn identity() -> Self {
        CoinOperator::new(ONE, ZERO, ZERO, ONE)
    }

    pub fn apply(&self, c: &CoinState) -> CoinState {
        CoinState::new(
            self.m00 * c.h + self.m01 * c.v,
            self.m10 * c.h + self.m11 * c.v,
        )
    }

    pub fn adjoint(&self) -> Self {
        CoinOperator::new(
            self.m00.conj(),
            self.m10.conj(),
            self.m01.conj(),
            self.m11.conj(),
        )
    }

    pub fn scaled(&self, s: C64) -> Self {
        CoinOperator::new(self.m00 * s, self.m01 * s, self.m10 * s, self.m11 * s)
    }

    pub fn entries(&self) -> [C64; 4] {
        [self.m00, self.m01, self.m10, self.m11]
    }

    /// `max |(M^dagger M - I)_ij|`.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.adjoint() * *self;
        let id = CoinOperator::identity();
        p.entries()
            .iter()
            .zip(id.entries().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry-wise difference.
    pub fn max_diff(&self, other: &CoinOperator) -> f64 {
        self.entries()
            .iter()
            .zip(other.entries().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry-wise difference after removing the best global phase.
    pub fn max_diff_up_to_phase(&self, other: &CoinOperator) -> f64 {
        // phase aligning self onto other: arg of tr(self^dagger other)
        let t = self.adjoint() * *other;
        let tr = t.m00 + t.m11;
        let phase = if tr.norm() > 0.0 { tr / tr.norm() } else { ONE };
        self.scaled(phase).max_diff(other)
    }
}

impl Mul for CoinOperator {
    type Output = CoinOperator;

    fn mul(self, o: CoinOperator) -> CoinOperator {
        CoinOperator::new(
            self.m00 * o.m00 + self.m01 * o.m10,
            self.m00 * o.m01 + self.m01 * o.m11,
            self.m10 * o.m00 + self.m11 * o.m10,
            self.m10 * o.m01 + self.m11 * o.m11,
        )
    }
}

/// EOM operator for a Pockels phase `phi_u` and birefringence phase
/// `global_phase`, both in radians.
pub fn eom_coin(phi_u: f64, global_phase: f64) -> CoinOperator {
    let (s, c) = phi_u.sin_cos();
    let g = C64::from_polar(1.0, global_phase);
    CoinOperator::new(C64::new(c, 0.0), I * s, I * s, C64::new(c, 0.0)).scaled(g)
}

/// Ideal half-wave plate with its fast axis at `theta_deg` degrees.
pub fn hwp(theta_deg: f64) -> CoinOperator {
    let (s, c) = (2.0 * theta_deg.to_radians()).sin_cos();
    CoinOperator::new(
        C64::new(c, 0.0),
        C64::new(s, 0.0),
        C64::new(s, 0.0),
        C64::new(-c, 0.0),
    )
}

/// Ideal quarter-wave plate with its fast axis at `theta_deg` degrees.
pub fn qwp(theta_deg: f64) -> CoinOperator {
    let (s, c) = theta_deg.to_radians().sin_cos();
    let off = C64::new(s * c, -s * c);
    CoinOperator::new(C64::new(c * c, s * s), off, off, C64::new(s * s, c * c))
}

/// Hadamard coin, `hwp(22.5)`, with exact entries.
pub fn hadamard() -> CoinOperator {
    let a = C64::new(FRAC_1_SQRT_2, 0.0);
    CoinOperator::new(a, a, a, -a)
}

/// The four operators the switched EOM realizes directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NamedCoin {
    /// Transmission, identity.
    T,
    /// Reflection `[[0, i], [i, 0]]`.
    R,
    /// `(1/sqrt 2)[[1, i], [i, 1]]`, Pockels phase `+pi/4`.
    QwpPlus,
    /// `(1/sqrt 2)[[1, -i], [-i, 1]]`, Pockels phase `-pi/4`.
    QwpMinus,
}

impl NamedCoin {
    pub fn operator(self) -> CoinOperator {
        let a = FRAC_1_SQRT_2;
        match self {
            NamedCoin::T => CoinOperator::identity(),
            NamedCoin::R => CoinOperator::new(ZERO, I, I, ZERO),
            NamedCoin::QwpPlus => CoinOperator::new(
                C64::new(a, 0.0),
                C64::new(0.0, a),
                C64::new(0.0, a),
                C64::new(a, 0.0),
            ),
            NamedCoin::QwpMinus => CoinOperator::new(
                C64::new(a, 0.0),
                C64::new(0.0, -a),
                C64::new(0.0, -a),
                C64::new(a, 0.0),
            ),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NamedCoin::T => "T",
            NamedCoin::R => "R",
            NamedCoin::QwpPlus => "QWP_PLUS",
            NamedCoin::QwpMinus => "QWP_MINUS",
        }
    }
}

impl FromStr for NamedCoin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" => Ok(NamedCoin::T),
            "R" => Ok(NamedCoin::R),
            "QWP_PLUS" => Ok(NamedCoin::QwpPlus),
            "QWP_MINUS" => Ok(NamedCoin::QwpMinus),
            other => Err(Error::UnknownCoin(other.to_string())),
        }
    }
}

/// Looks up `T`, `R`, `QWP_PLUS` or `QWP_MINUS`.
pub fn named_coin(name: &str) -> Result<CoinOperator> {
    name.parse::<NamedCoin>().map(NamedCoin::operator)
}

/// A coin as written in a schedule: the parameters, not only the matrix.
///
/// Keeping the parameters lets a perturbation act on waveplate angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoinSpec {
    T,
    R,
    /// Hadamard, written `H`.
    Hadamard,
    /// Half-wave plate at the given angle in degrees.
    Hwp(f64),
    /// Quarter-wave plate at the given angle in degrees.
    Qwp(f64),
    QwpPlus,
    QwpMinus,
    /// EOM with Pockels phase and global phase in radians.
    Eom {
        phi: f64,
        phase: f64,
    },
}

impl CoinSpec {
    pub fn operator(&self) -> CoinOperator {
        match *self {
            CoinSpec::T => NamedCoin::T.operator(),
            CoinSpec::R => NamedCoin::R.operator(),
            CoinSpec::Hadamard => hadamard(),
            CoinSpec::Hwp(t) => hwp(t),
            CoinSpec::Qwp(t) => qwp(t),
            CoinSpec::QwpPlus => NamedCoin::QwpPlus.operator(),
            CoinSpec::QwpMinus => NamedCoin::QwpMinus.operator(),
            CoinSpec::Eom { phi, phase } => eom_coin(phi, phase),
        }
    }

    /// Rotates waveplate coins by `delta_deg`; EOM settings are unchanged.
    pub fn with_angle_offset(&self, delta_deg: f64) -> CoinSpec {
        match *self {
            CoinSpec::Hadamard => CoinSpec::Hwp(22.5 + delta_deg),
            CoinSpec::Hwp(t) => CoinSpec::Hwp(t + delta_deg),
            CoinSpec::Qwp(t) => CoinSpec::Qwp(t + delta_deg),
            other => other,
        }
    }

    pub fn is_waveplate(&self) -> bool {
        matches!(
            self,
            CoinSpec::Hadamard | CoinSpec::Hwp(_) | CoinSpec::Qwp(_)
        )
    }

    /// Parses the whitespace-separated tokens of a coin, e.g. `["qwp", "45"]`.
    ///
    /// On failure returns the index of the offending token and the reason.
    pub(crate) fn from_tokens(
        tokens: &[&str],
    ) -> core::result::Result<CoinSpec, (usize, crate::ParseErrorKind)> {
        use crate::ParseErrorKind as K;
        let number = |i: usize, what: &'static str| -> core::result::Result<f64, (usize, K)> {
            let t = tokens
                .get(i)
                .ok_or((i, K::UnexpectedEnd { expected: what }))?;
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or((i, K::InvalidNumber((*t).to_string())))
        };
        let head = *tokens
            .first()
            .ok_or((0, K::UnexpectedEnd { expected: "coin" }))?;
        let (spec, used) = match head {
            "T" => (CoinSpec::T, 1),
            "R" => (CoinSpec::R, 1),
            "H" => (CoinSpec::Hadamard, 1),
            "qwp+" => (CoinSpec::QwpPlus, 1),
            "qwp-" => (CoinSpec::QwpMinus, 1),
            "hwp" => (CoinSpec::Hwp(number(1, "angle")?), 2),
            "qwp" => (CoinSpec::Qwp(number(1, "angle")?), 2),
            "eom" => {
                let phi = number(1, "phase")?;
                if tokens.len() > 2 {
                    (
                        CoinSpec::Eom {
                            phi,
                            phase: number(2, "phase")?,
                        },
                        3,
                    )
                } else {
                    (CoinSpec::Eom { phi, phase: 0.0 }, 2)
                }
            }
            other => return Err((0, K::UnknownCoin(other.to_string()))),
        };
        if let Some(extra) = tokens.get(used) {
            return Err((
                used,
                K::UnexpectedToken {
                    expected: "end of line",
                    found: (*extra).to_string(),
                },
            ));
        }
        Ok(spec)
    }
}

impl From<NamedCoin> for CoinSpec {
    fn from(n: NamedCoin) -> Self {
        match n {
            NamedCoin::T => CoinSpec::T,
            NamedCoin::R => CoinSpec::R,
            NamedCoin::QwpPlus => CoinSpec::QwpPlus,
            NamedCoin::QwpMinus => CoinSpec::QwpMinus,
        }
    }
}

impl fmt::Display for CoinSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoinSpec::T => f.write_str("T"),
            CoinSpec::R => f.write_str("R"),
            CoinSpec::Hadamard => f.write_str("H"),
            CoinSpec::Hwp(t) => write!(f, "hwp {t}"),
            CoinSpec::Qwp(t) => write!(f, "qwp {t}"),
            CoinSpec::QwpPlus => f.write_str("qwp+"),
            CoinSpec::QwpMinus => f.write_str("qwp-"),
            CoinSpec::Eom { phi, phase } => write!(f, "eom {phi} {phase}"),
        }
    }
}

impl FromStr for CoinSpec {
    type Err = Error;

    /// Same syntax as the schedule language, e.g. `qwp 45` or `eom 0.785`.
    fn from_str(s: &str) -> Result<Self> {
        let tokens: Vec<&str> = s.split_whitespace().collect();
        CoinSpec::from_tokens(&tokens).map_err(|(_, kind)| match kind {
            crate::ParseErrorKind::UnknownCoin(name) => Error::UnknownCoin(name),
            _ => Error::UnknownCoin(String::from(s.trim())),
        })
    }
}

/// Pockels phases realizing the named operators.
pub const PHI_T: f64 = 0.0;
pub const PHI_R: f64 = FRAC_PI_2;
pub const PHI_QWP: f64 = FRAC_PI_4;
