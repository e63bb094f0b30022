//! Walker state on the integer line with a polarization coin.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use core::fmt;
// float math is not inherent on every no_std target
#[allow(unused_imports)]
use num_traits::Float;

use crate::coin::CoinOperator;
use crate::{Error, Result, C64};

/// Tolerance on the norm of an initial coin state.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Tolerance on `M^dagger M = I` when a caller supplies coin operators.
pub const UNITARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Polarization {
    H,
    V,
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::H => "H",
            Polarization::V => "V",
        })
    }
}

/// Amplitudes of the horizontal and vertical polarization at one site.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoinState {
    pub h: C64,
    pub v: C64,
}

impl CoinState {
    pub const fn new(h: C64, v: C64) -> Self {
        CoinState { h, v }
    }

    pub const fn horizontal() -> Self {
        CoinState::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0))
    }

    pub const fn vertical() -> Self {
        CoinState::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0))
    }

    /// Diagonal `(|H> + |V>)/sqrt(2)`.
    pub fn diagonal() -> Self {
        let a = core::f64::consts::FRAC_1_SQRT_2;
        CoinState::new(C64::new(a, 0.0), C64::new(a, 0.0))
    }

    /// Right circular `(|H> + i|V>)/sqrt(2)`.
    pub fn circular() -> Self {
        let a = core::f64::consts::FRAC_1_SQRT_2;
        CoinState::new(C64::new(a, 0.0), C64::new(0.0, a))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.h.norm_sqr() + self.v.norm_sqr()
    }

    pub fn amplitude(&self, pol: Polarization) -> C64 {
        match pol {
            Polarization::H => self.h,
            Polarization::V => self.v,
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &CoinState) -> C64 {
        self.h.conj() * other.h + self.v.conj() * other.v
    }

    /// Returns the state scaled to unit norm.
    pub fn normalized(&self) -> Result<CoinState> {
        let n = self.norm_sqr();
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let s = 1.0 / n.sqrt();
        Ok(CoinState::new(self.h * s, self.v * s))
    }

    fn is_zero(&self) -> bool {
        self.norm_sqr() == 0.0
    }
}

/// Sparse joint position and polarization state.
///
/// Sites with exactly zero amplitude are never stored, so the number of map
/// entries is the number of occupied positions. Amplitudes are kept
/// unnormalized when losses act; [`WalkState::probabilities`] renormalizes.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    amplitudes: BTreeMap<i64, CoinState>,
    step: u32,
    origin: i64,
}

/// Creates a walker localized at `x0` with the given normalized coin state.
pub fn new_localized_state(x0: i64, coin: CoinState) -> Result<WalkState> {
    WalkState::localized(x0, coin)
}

impl WalkState {
    pub fn localized(x0: i64, coin: CoinState) -> Result<WalkState> {
        let n = coin.norm_sqr();
        if (n - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized(n));
        }
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(x0, coin);
        Ok(WalkState {
            amplitudes,
            step: 0,
            origin: x0,
        })
    }

    /// Builds a state from explicit site amplitudes. Zero sites are dropped.
    pub fn from_amplitudes<I>(origin: i64, step: u32, sites: I) -> WalkState
    where
        I: IntoIterator<Item = (i64, CoinState)>,
    {
        let mut amplitudes: BTreeMap<i64, CoinState> = BTreeMap::new();
        for (x, c) in sites {
            let e = amplitudes.entry(x).or_default();
            e.h += c.h;
            e.v += c.v;
        }
        amplitudes.retain(|_, c| !c.is_zero());
        WalkState {
            amplitudes,
            step,
            origin,
        }
    }

    pub fn step(&self) -> u32 {
        self.step
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    pub fn get(&self, x: i64) -> Option<&CoinState> {
        self.amplitudes.get(&x)
    }

    /// Occupied sites in increasing position order.
    pub fn sites(&self) -> impl Iterator<Item = (i64, &CoinState)> + '_ {
        self.amplitudes.iter().map(|(x, c)| (*x, c))
    }

    pub fn occupancy(&self) -> usize {
        self.amplitudes.len()
    }

    /// Sum of squared amplitudes over all sites and polarizations.
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(CoinState::norm_sqr).sum()
    }

    /// `<self|other>` over the joint position and coin space.
    pub fn overlap(&self, other: &WalkState) -> C64 {
        self.amplitudes
            .iter()
            .filter_map(|(x, a)| other.amplitudes.get(x).map(|b| a.inner(b)))
            .sum()
    }

    /// Largest amplitude difference after removing the best global phase.
    ///
    /// The phase `e^{i t}` maximizing `Re(e^{i t} <other|self>)` is
    /// `conj(<other|self>) / |<other|self>|`, applied to `self`.
    pub fn max_diff_up_to_phase(&self, other: &WalkState) -> f64 {
        let ov = self.overlap(other);
        let phase = if ov.norm() > 0.0 {
            ov / ov.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut worst: f64 = 0.0;
        let zero = CoinState::default();
        for x in self.amplitudes.keys().chain(other.amplitudes.keys()) {
            let a = self.amplitudes.get(x).unwrap_or(&zero);
            let b = other.amplitudes.get(x).unwrap_or(&zero);
            worst = worst
                .max((a.h * phase - b.h).norm())
                .max((a.v * phase - b.v).norm());
        }
        worst
    }

    /// Step operator: H moves to `x+1`, V moves to `x-1`.
    pub fn apply_shift(&self) -> WalkState {
        self.shifted(1)
    }

    /// Inverse step operator: H moves to `x-1`, V moves to `x+1`.
    pub fn apply_inverse_shift(&self) -> WalkState {
        let mut out = self.shifted(-1);
        out.step = self.step.saturating_sub(1);
        out
    }

    fn shifted(&self, dir: i64) -> WalkState {
        let mut next: BTreeMap<i64, CoinState> = BTreeMap::new();
        let zero = C64::new(0.0, 0.0);
        for (&x, c) in &self.amplitudes {
            if c.h != zero {
                next.entry(x + dir).or_default().h += c.h;
            }
            if c.v != zero {
                next.entry(x - dir).or_default().v += c.v;
            }
        }
        next.retain(|_, c| !c.is_zero());
        WalkState {
            amplitudes: next,
            step: self.step + 1,
            origin: self.origin,
        }
    }

    /// Applies `coin_of(x)` at every occupied site. Operators must be unitary.
    pub fn apply_coin_field<F>(&self, coin_of: F) -> Result<WalkState>
    where
        F: Fn(i64) -> CoinOperator,
    {
        let mut out = self.clone();
        for (&x, c) in out.amplitudes.iter_mut() {
            let op = coin_of(x);
            let dev = op.unitarity_error();
            if dev > UNITARITY_TOL {
                return Err(Error::NotUnitary(dev));
            }
            *c = op.apply(c);
        }
        out.amplitudes.retain(|_, c| !c.is_zero());
        Ok(out)
    }

    /// Coin field without the unitarity check, for operators that are
    /// unitary by construction or deliberately lossy.
    pub(crate) fn apply_coin_field_unchecked<F>(&mut self, mut coin_of: F)
    where
        F: FnMut(i64) -> CoinOperator,
    {
        for (&x, c) in self.amplitudes.iter_mut() {
            *c = coin_of(x).apply(c);
        }
        self.amplitudes.retain(|_, c| !c.is_zero());
    }

    pub(crate) fn scale_polarizations(&mut self, fh: f64, fv: f64) {
        for c in self.amplitudes.values_mut() {
            c.h *= fh;
            c.v *= fv;
        }
    }

    /// Renormalized occupation probabilities of the occupied sites.
    pub fn probabilities(&self) -> Result<Vec<ProbabilityRow>> {
        let total = self.norm_sqr();
        if total <= 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(self
            .amplitudes
            .iter()
            .map(|(&x, c)| ProbabilityRow {
                step: self.step,
                position: x,
                p_h: c.h.norm_sqr() / total,
                p_v: c.v.norm_sqr() / total,
            })
            .collect())
    }

    /// Normalized coin state at `x`.
    pub fn conditional_coin(&self, x: i64) -> Result<CoinState> {
        self.amplitudes
            .get(&x)
            .ok_or(Error::Unoccupied(x))?
            .normalized()
    }

    /// `true` if every occupied site has `x - origin - step` even.
    pub fn has_step_parity(&self) -> bool {
        self.amplitudes
            .keys()
            .all(|x| (x - self.origin - i64::from(self.step)).rem_euclid(2) == 0)
    }
}

/// Read-out of one site at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProbabilityRow {
    pub step: u32,
    pub position: i64,
    pub p_h: f64,
    pub p_v: f64,
}

impl ProbabilityRow {
    pub fn total(&self) -> f64 {
        self.p_h + self.p_v
    }

    pub fn get(&self, pol: Polarization) -> f64 {
        match pol {
            Polarization::H => self.p_h,
            Polarization::V => self.p_v,
        }
    }
}

/// Mean position of a set of read-out rows.
pub fn mean_position(rows: &[ProbabilityRow]) -> f64 {
    rows.iter().map(|r| r.position as f64 * r.total()).sum()
}
