//! Engineering math of the fiber loop: arrival times, photon budget,
//! outcoupling and the step count a detector can resolve.

use num_traits::Float;

use crate::{Error, Result};

/// Detector damage threshold in photons per second.
pub const DAMAGE_THRESHOLD: f64 = 1e5;

// relative slack for comparing products of measured times
const TIME_REL_TOL: f64 = 1e-12;

fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIME_REL_TOL * a.abs().max(b.abs())
}

fn strictly_less(a: f64, b: f64) -> bool {
    a < b && !approx_eq(a, b)
}

/// Loop timings in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct TimingConfig {
    /// Spacing between neighbouring positions.
    pub tau_pos: f64,
    /// Spacing between roundtrips.
    pub tau_rt: f64,
    /// Spacing between experiment runs.
    pub tau_rep: f64,
}

impl TimingConfig {
    /// 46.5 ns positions, 685 ns roundtrip, 110 kHz repetition.
    pub fn paper() -> Self {
        TimingConfig {
            tau_pos: 46.5e-9,
            tau_rt: 685e-9,
            tau_rep: 1.0 / 110e3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_pos > 0.0 && self.tau_pos.is_finite()) {
            return Err(Error::param("tau_pos", "must be positive"));
        }
        if self.tau_rt.is_nan() || self.tau_rt <= self.tau_pos {
            return Err(Error::param("tau_rt", "must exceed tau_pos"));
        }
        if !(self.tau_rt < self.tau_rep && self.tau_rep.is_finite()) {
            return Err(Error::param("tau_rep", "must exceed tau_rt"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimingCheck {
    /// `(m + 1) tau_pos < tau_rt` for the requested `m`.
    pub admissible: bool,
    /// Largest step without overlap between roundtrips.
    pub max_steps: u32,
    /// Whole multiples of `tau_pos` fitting into `tau_rt`.
    pub multiples: u32,
}

/// Checks the no-overlap condition `(m + 1) tau_pos < tau_rt`.
///
/// Products are compared with a relative slack of 1e-12 so that exact
/// ratios such as 10 ns / 1 ns are not decided by rounding.
pub fn validate_timings(t: &TimingConfig, m: u32) -> Result<TimingCheck> {
    t.validate()?;
    let fits = |k: u32| strictly_less(f64::from(k + 1) * t.tau_pos, t.tau_rt);
    let mut max_steps = (t.tau_rt / t.tau_pos).floor() as u32;
    while max_steps > 0 && !fits(max_steps) {
        max_steps -= 1;
    }
    while fits(max_steps + 1) {
        max_steps += 1;
    }
    let within = |k: u32| {
        let p = f64::from(k) * t.tau_pos;
        p < t.tau_rt || approx_eq(p, t.tau_rt)
    };
    let mut multiples = (t.tau_rt / t.tau_pos).floor() as u32;
    while multiples > 0 && !within(multiples) {
        multiples -= 1;
    }
    while within(multiples + 1) {
        multiples += 1;
    }
    Ok(TimingCheck {
        admissible: fits(m),
        max_steps,
        multiples,
    })
}

/// Arrival time of the `k`-th position slot (counted from the left) of step `n`.
pub fn arrival_time(n: u32, k: u32, t: &TimingConfig) -> Result<f64> {
    if k > n {
        return Err(Error::param("k", "slot index must not exceed the step"));
    }
    if !validate_timings(t, n)?.admissible {
        return Err(Error::TimingOverlap { step: n });
    }
    Ok(f64::from(n) * t.tau_rt + f64::from(k) * t.tau_pos)
}

/// Photon budget of the loop.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct PhotonBudget {
    /// Pulse power before the incoupler, W.
    pub p_laser: f64,
    /// Photon energy, J.
    pub e_photon: f64,
    /// Laser repetition rate, Hz.
    pub f_rep: f64,
    pub r_in: f64,
    pub r_out: f64,
    /// Roundtrip loss factor up to the outcoupler.
    pub l_rt: f64,
    /// Loss factor from the outcoupler back into the loop.
    pub l_bs: f64,
    /// All light of a step sits in one position (drops the `1/(n+1)` factor).
    pub concentrate: bool,
}

impl PhotonBudget {
    pub fn paper() -> Self {
        PhotonBudget {
            p_laser: 1.67e-9,
            e_photon: 2.46e-19,
            f_rep: 1e5,
            r_in: 0.002,
            r_out: 0.07,
            l_rt: 0.5,
            l_bs: 0.97,
            concentrate: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("p_laser", self.p_laser),
            ("e_photon", self.e_photon),
            ("f_rep", self.f_rep),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, "must be positive"));
            }
        }
        for (name, v) in [("r_in", self.r_in), ("r_out", self.r_out)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::param(name, "must lie in (0, 1)"));
            }
        }
        for (name, v) in [("l_rt", self.l_rt), ("l_bs", self.l_bs)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::param(name, "must lie in (0, 1]"));
            }
        }
        Ok(())
    }

    /// Photons per laser pulse entering the setup.
    pub fn incident_photons(&self) -> f64 {
        self.p_laser / (self.e_photon * self.f_rep)
    }

    /// Expected photons at the detector in roundtrip `n >= 1`.
    pub fn photon_number(&self, n: u32) -> Result<f64> {
        if n == 0 {
            return Err(Error::param("n", "roundtrip index starts at 1"));
        }
        let spread = if self.concentrate {
            1.0
        } else {
            1.0 / f64::from(n + 1)
        };
        Ok(self.incident_photons()
            * self.r_out
            * self.r_in
            * self.l_rt.powi(n as i32)
            * self.l_bs.powi(n as i32 - 1)
            * spread)
    }

    /// Detected photons per second in the first roundtrip.
    pub fn detector_rate(&self) -> f64 {
        self.photon_number(1).map_or(0.0, |n| n * self.f_rep)
    }

    pub fn exceeds_damage_threshold(&self) -> bool {
        self.detector_rate() > DAMAGE_THRESHOLD
    }
}

/// Poisson probability of two or more photons, `1 - e^-m (1 + m)`.
pub fn multi_photon_probability(mean: f64) -> Result<f64> {
    if !(mean >= 0.0 && mean.is_finite()) {
        return Err(Error::param("mean", "must be finite and non-negative"));
    }
    if mean < 1.0 {
        // e^-m * sum_{k>=2} m^k / k!, free of the cancellation near 0
        let mut term = mean * mean / 2.0;
        let mut sum = 0.0;
        let mut k = 2.0;
        while term > 1e-18 * sum.max(f64::MIN_POSITIVE) {
            sum += term;
            k += 1.0;
            term *= mean / k;
        }
        Ok((-mean).exp() * sum)
    } else {
        Ok(1.0 - (-mean).exp() * (1.0 + mean))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcoupling {
    /// Numeric maximizer of the detected photon number.
    pub argmax: f64,
    /// Photon number at the maximizer.
    pub photons: f64,
    /// Analytic reference `1/(n+1)`.
    pub analytic: f64,
}

/// Outcoupler reflectivity maximizing the photons detected in step `n`.
///
/// Light that is not coupled out stays in the loop, so the loop factor is
/// `l_bs * (1 - r_out)`. The objective is `r (l_bs (1 - r))^(n-1)` times
/// constants; it is maximized by golden-section search on `[0, 1]` with
/// both endpoints compared. For `n = 1` it is monotone and the answer is
/// the feasibility cap 1.
pub fn optimal_outcoupling(b: &PhotonBudget, n: u32) -> Result<Outcoupling> {
    if n == 0 {
        return Err(Error::param("n", "step starts at 1"));
    }
    b.validate()?;
    let objective = |r: f64| {
        let loop_factor = b.l_bs * (1.0 - r);
        let spread = if b.concentrate {
            1.0
        } else {
            1.0 / f64::from(n + 1)
        };
        b.incident_photons()
            * r
            * b.r_in
            * b.l_rt.powi(n as i32)
            * loop_factor.powi(n as i32 - 1)
            * spread
    };

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (objective(c), objective(d));
    while hi - lo > 1e-12 {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = objective(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = objective(d);
        }
    }
    let mut best = (0.5 * (lo + hi), objective(0.5 * (lo + hi)));
    for r in [0.0, 1.0] {
        let f = objective(r);
        if f > best.1 {
            best = (r, f);
        }
    }
    Ok(Outcoupling {
        argmax: best.0,
        photons: best.1,
        analytic: 1.0 / f64::from(n + 1),
    })
}

/// Largest `n` with `loss^n >= 10^(-dr/10)`, at most `cap`.
///
/// A lossless loop (`loss = 1`) never falls below the threshold and returns
/// `cap`.
pub fn attainable_steps(per_roundtrip_loss: f64, dynamic_range_db: f64, cap: u32) -> Result<u32> {
    let l = per_roundtrip_loss;
    if !(l > 0.0 && l <= 1.0) {
        return Err(Error::param("per_roundtrip_loss", "must lie in (0, 1]"));
    }
    if !(dynamic_range_db >= 0.0 && dynamic_range_db.is_finite()) {
        return Err(Error::param(
            "dynamic_range_db",
            "must be finite and non-negative",
        ));
    }
    if l == 1.0 {
        return Ok(cap);
    }
    let threshold_db = -dynamic_range_db;
    let level_db = |n: u32| 10.0 * f64::from(n) * l.log10();
    let ok = |n: u32| level_db(n) >= threshold_db - 1e-9 * dynamic_range_db.max(1.0);
    let estimate = dynamic_range_db / (-10.0 * l.log10());
    let mut n = estimate.floor().min(f64::from(cap)) as u32;
    while n > 0 && !ok(n) {
        n -= 1;
    }
    while n < cap && ok(n + 1) {
        n += 1;
    }
    Ok(n)
}
