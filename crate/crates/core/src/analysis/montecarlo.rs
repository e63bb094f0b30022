use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

// float math is not inherent on every no_std target
#[allow(unused_imports)]
use num_traits::Float;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{evolve, LossModel, RunRecord};
use crate::schedule::Schedule;
use crate::state::{Polarization, WalkState};
use crate::{Error, Result};

/// Half-widths of the uniform perturbations drawn per trial.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PerturbationSpec {
    /// Relative variation of each coupling factor.
    pub coupling_sigma: f64,
    /// Relative variation of the EOM transmission.
    pub eom_transmission_sigma: f64,
    /// Waveplate angle variation in degrees.
    pub coin_angle_sigma: f64,
    pub trials: u32,
    pub seed: u64,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        PerturbationSpec {
            coupling_sigma: 0.015,
            eom_transmission_sigma: 0.02,
            coin_angle_sigma: 0.1,
            trials: 200,
            seed: 0,
        }
    }
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("coupling_sigma", self.coupling_sigma),
            ("eom_transmission_sigma", self.eom_transmission_sigma),
            ("coin_angle_sigma", self.coin_angle_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, "must be finite and non-negative"));
            }
        }
        if self.trials == 0 {
            return Err(Error::param("trials", "must be at least 1"));
        }
        Ok(())
    }
}

/// SplitMix64 of the base seed and trial index, so each trial owns an
/// independent stream regardless of evaluation order.
pub fn trial_seed(seed: u64, trial: u32) -> u64 {
    let mut z = seed.wrapping_add(
        u64::from(trial)
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15),
    );
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Relative offsets of one trial, each uniform in `[-1, 1]` times its sigma.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialDraw {
    pub coupling_h: f64,
    pub coupling_v: f64,
    pub eom: f64,
    pub angle_deg: f64,
}

impl TrialDraw {
    pub fn sample(spec: &PerturbationSpec, trial: u32) -> TrialDraw {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(spec.seed, trial));
        let mut u = || rng.random_range(-1.0..=1.0);
        TrialDraw {
            coupling_h: u() * spec.coupling_sigma,
            coupling_v: u() * spec.coupling_sigma,
            eom: u() * spec.eom_transmission_sigma,
            angle_deg: u() * spec.coin_angle_sigma,
        }
    }
}

/// Applies a draw to a loss model.
///
/// Couplings above 1 are divided by the larger of the two, which keeps
/// their ratio (the only thing the renormalized read-out sees); the EOM
/// transmission is capped at 1.
pub fn perturbed_losses(base: &LossModel, d: &TrialDraw) -> LossModel {
    let (bh, bv, be) = if base.enabled {
        (base.eta_h, base.eta_v, base.eta_eom)
    } else {
        (1.0, 1.0, 1.0)
    };
    let mut h = bh * (1.0 + d.coupling_h);
    let mut v = bv * (1.0 + d.coupling_v);
    let top = h.max(v);
    if top > 1.0 {
        h /= top;
        v /= top;
    }
    LossModel {
        eta_h: h,
        eta_v: v,
        eta_eom: (be * (1.0 + d.eom)).min(1.0),
        enabled: true,
    }
}

/// The run of trial `trial`: perturbed losses and every waveplate rotated
/// by the trial's angle offset.
pub fn perturbed_run(
    initial: &WalkState,
    schedule: &Schedule,
    losses: &LossModel,
    spec: &PerturbationSpec,
    trial: u32,
) -> Result<RunRecord> {
    let d = TrialDraw::sample(spec, trial);
    let schedule = if d.angle_deg != 0.0 {
        schedule.map_coins(|c| c.with_angle_offset(d.angle_deg))
    } else {
        schedule.clone()
    };
    let mut rec = evolve(initial, &schedule, &perturbed_losses(losses, &d))?;
    rec.metadata.seed = Some(spec.seed);
    Ok(rec)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBar {
    pub step: u32,
    pub position: i64,
    pub polarization: Polarization,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single trial.
    pub stddev: f64,
}

// Neumaier-compensated sum.
fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Two-pass mean and sample standard deviation with compensated sums.
pub fn mean_and_stddev(samples: &[f64]) -> (f64, f64) {
    if samples.is_empty() {
        return (0.0, 0.0);
    }
    // identical samples are reported exactly; 5x/5 need not round to x
    if samples.iter().all(|&x| x == samples[0]) {
        return (samples[0], 0.0);
    }
    let n = samples.len() as f64;
    let mean = compensated_sum(samples.iter().copied()) / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(samples.iter().map(|x| (x - mean) * (x - mean)));
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Mean and standard deviation of every `(step, position, polarization)`
/// read-out over `spec.trials` perturbed runs. Cells absent from a trial
/// count as 0 there. Output is sorted by step, position, polarization.
pub fn monte_carlo_errorbars(
    initial: &WalkState,
    schedule: &Schedule,
    losses: &LossModel,
    spec: &PerturbationSpec,
) -> Result<Vec<ErrorBar>> {
    spec.validate()?;
    let trials = spec.trials as usize;
    let mut cells: BTreeMap<(u32, i64, Polarization), Vec<f64>> = BTreeMap::new();
    for t in 0..spec.trials {
        let rec = perturbed_run(initial, schedule, losses, spec, t)?;
        for r in rec.steps.iter().flat_map(|s| s.rows.iter()) {
            for pol in [Polarization::H, Polarization::V] {
                cells
                    .entry((r.step, r.position, pol))
                    .or_insert_with(|| vec![0.0; trials])[t as usize] = r.get(pol);
            }
        }
    }
    Ok(cells
        .into_iter()
        .map(|((step, position, polarization), samples)| {
            let (mean, stddev) = mean_and_stddev(&samples);
            ErrorBar {
                step,
                position,
                polarization,
                mean,
                stddev,
            }
        })
        .collect())
}
