//! Distances between read-outs, density-matrix fidelity, simulated
//! tomography and Monte Carlo error bars.

mod density;
mod montecarlo;
mod tomography;

use alloc::collections::BTreeMap;
use core::ops::RangeInclusive;

use crate::engine::RunRecord;
use crate::state::ProbabilityRow;
use crate::{Error, Result};

pub use density::{fidelity, DensityMatrix};
pub use montecarlo::{
    mean_and_stddev, monte_carlo_errorbars, perturbed_losses, perturbed_run, trial_seed, ErrorBar,
    PerturbationSpec, TrialDraw,
};
pub use tomography::{
    outcome_probabilities, reconstruct, simulate_tomography, Basis, BasisCounts, Shots,
};

/// Slack on the total probability of a read-out row set.
pub const TABLE_NORM_TOL: f64 = 1e-9;

fn check_normalized(rows: &[ProbabilityRow]) -> Result<()> {
    let total: f64 = rows.iter().map(ProbabilityRow::total).sum();
    if (total - 1.0).abs() > TABLE_NORM_TOL {
        return Err(Error::NotNormalizedTable(total));
    }
    Ok(())
}

/// Half the L1 distance between two polarization-resolved read-outs.
pub fn distance(p: &[ProbabilityRow], q: &[ProbabilityRow]) -> Result<f64> {
    check_normalized(p)?;
    check_normalized(q)?;
    let mut diff: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    for r in p {
        let e = diff.entry(r.position).or_default();
        e.0 += r.p_h;
        e.1 += r.p_v;
    }
    for r in q {
        let e = diff.entry(r.position).or_default();
        e.0 -= r.p_h;
        e.1 -= r.p_v;
    }
    let d: f64 = diff.values().map(|(h, v)| h.abs() + v.abs()).sum();
    Ok(0.5 * d)
}

/// Average of [`distance`] over the steps in `steps`.
pub fn mean_distance(a: &RunRecord, b: &RunRecord, steps: RangeInclusive<u32>) -> Result<f64> {
    if steps.is_empty() {
        return Err(Error::EmptyRange);
    }
    let mut sum = 0.0;
    let mut count = 0u32;
    for n in steps {
        let out_of_range = |r: &RunRecord| Error::StepOutOfRange {
            step: n,
            steps: r.last_step(),
        };
        let p = a.rows_at(n).ok_or_else(|| out_of_range(a))?;
        let q = b.rows_at(n).ok_or_else(|| out_of_range(b))?;
        sum += distance(p, q)?;
        count += 1;
    }
    Ok(sum / f64::from(count))
}

/// Total probability at `x0` in step `step` of a record.
pub fn revival_probability(record: &RunRecord, x0: i64, step: u32) -> Result<f64> {
    let rows = record.rows_at(step).ok_or(Error::StepOutOfRange {
        step,
        steps: record.last_step(),
    })?;
    Ok(rows
        .iter()
        .filter(|r| r.position == x0)
        .map(ProbabilityRow::total)
        .sum())
}
