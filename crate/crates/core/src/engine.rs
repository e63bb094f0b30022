//! Runs a [`Schedule`] against an initial state.

use alloc::string::String;
use alloc::vec::Vec;

use crate::schedule::Schedule;
use crate::state::{ProbabilityRow, WalkState, NORMALIZATION_TOL};
use crate::{Error, Result};

/// Polarization-dependent amplitude transmission per roundtrip.
///
/// Factors multiply the amplitudes after every shift: H by `eta_h * eta_eom`,
/// V by `eta_v * eta_eom`. The default is lossless.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct LossModel {
    pub eta_h: f64,
    pub eta_v: f64,
    pub eta_eom: f64,
    pub enabled: bool,
}

impl Default for LossModel {
    fn default() -> Self {
        LossModel::lossless()
    }
}

impl LossModel {
    pub const fn lossless() -> Self {
        LossModel {
            eta_h: 1.0,
            eta_v: 1.0,
            eta_eom: 1.0,
            enabled: false,
        }
    }

    /// 1.5% H/V coupling asymmetry, the coupling variation scale of the
    /// experiment.
    pub const fn paper() -> Self {
        LossModel {
            eta_h: 1.0,
            eta_v: 0.985,
            eta_eom: 1.0,
            enabled: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eta_h", self.eta_h),
            ("eta_v", self.eta_v),
            ("eta_eom", self.eta_eom),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::param(name, "must lie in (0, 1]"));
            }
        }
        Ok(())
    }

    /// Amplitude factors `(h, v)` applied per step.
    pub fn factors(&self) -> (f64, f64) {
        if self.enabled {
            (self.eta_h * self.eta_eom, self.eta_v * self.eta_eom)
        } else {
            (1.0, 1.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: u32,
    /// Renormalized read-out, ordered by position.
    pub rows: Vec<ProbabilityRow>,
    /// Squared norm before renormalization.
    pub raw_norm: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMetadata {
    pub seed: Option<u64>,
    pub config_hash: Option<String>,
    /// Steps spent before step 0 of the displayed run, e.g. state preparation.
    pub step_offset: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub schedule: Schedule,
    /// Entry `n` holds step `n`; entry 0 is the initial state.
    pub steps: Vec<StepRecord>,
    pub final_state: WalkState,
    pub metadata: RunMetadata,
}

impl RunRecord {
    pub fn rows_at(&self, step: u32) -> Option<&[ProbabilityRow]> {
        self.steps
            .iter()
            .find(|s| s.step == step)
            .map(|s| s.rows.as_slice())
    }

    pub fn last_step(&self) -> u32 {
        self.steps.last().map_or(0, |s| s.step)
    }
}

/// Evolves `initial` through every step of `schedule`: coin field, shift,
/// then the loss factors.
pub fn evolve(initial: &WalkState, schedule: &Schedule, losses: &LossModel) -> Result<RunRecord> {
    let n0 = initial.norm_sqr();
    if (n0 - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized(n0));
    }
    if losses.enabled {
        losses.validate()?;
    }
    let (fh, fv) = losses.factors();

    let mut steps = Vec::with_capacity(schedule.steps() as usize + 1);
    steps.push(StepRecord {
        step: initial.step(),
        rows: initial.probabilities()?,
        raw_norm: n0,
    });

    let mut state = initial.clone();
    for n in 1..=schedule.steps() {
        state = advance(&state, schedule, n, (fh, fv));
        steps.push(StepRecord {
            step: state.step(),
            rows: state.probabilities()?,
            raw_norm: state.norm_sqr(),
        });
    }

    Ok(RunRecord {
        schedule: schedule.clone(),
        steps,
        final_state: state,
        metadata: RunMetadata::default(),
    })
}

/// One step of the walk: coin field for step `n`, shift, amplitude factors.
pub(crate) fn advance(
    state: &WalkState,
    schedule: &Schedule,
    n: u32,
    (fh, fv): (f64, f64),
) -> WalkState {
    let mut s = state.clone();
    s.apply_coin_field_unchecked(|x| schedule.op_at(n, x));
    let mut s = s.apply_shift();
    if fh != 1.0 || fv != 1.0 {
        s.scale_polarizations(fh, fv);
    }
    s
}

/// Step by position matrix of total occupation probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Chessboard {
    /// Contiguous column labels covering every occupied site of the run.
    pub positions: Vec<i64>,
    pub steps: Vec<u32>,
    /// `rows[i][j]` is the probability at `steps[i]`, `positions[j]`.
    pub rows: Vec<Vec<f64>>,
}

impl Chessboard {
    pub fn get(&self, step: u32, x: i64) -> Option<f64> {
        let i = self.steps.iter().position(|&s| s == step)?;
        let j = self.positions.iter().position(|&p| p == x)?;
        Some(self.rows[i][j])
    }
}

/// Traces each step of a record over polarization.
pub fn chessboard(record: &RunRecord) -> Chessboard {
    let mut lo = i64::MAX;
    let mut hi = i64::MIN;
    for r in record.steps.iter().flat_map(|s| s.rows.iter()) {
        lo = lo.min(r.position);
        hi = hi.max(r.position);
    }
    let positions: Vec<i64> = if lo <= hi {
        (lo..=hi).collect()
    } else {
        Vec::new()
    };
    let rows = record
        .steps
        .iter()
        .map(|s| {
            let mut row = alloc::vec![0.0; positions.len()];
            for r in &s.rows {
                row[(r.position - lo) as usize] = r.total();
            }
            row
        })
        .collect();
    Chessboard {
        positions,
        steps: record.steps.iter().map(|s| s.step).collect(),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coin::CoinSpec;
    use crate::schedule::finite_graph_schedule;
    use crate::state::{mean_position, CoinState};

    fn start_h() -> WalkState {
        WalkState::localized(0, CoinState::horizontal()).unwrap()
    }

    #[test]
    fn ballistic_transmission() {
        let s = Schedule::new(5, CoinSpec::T).unwrap();
        let rec = evolve(&start_h(), &s, &LossModel::lossless()).unwrap();
        let last = rec.rows_at(5).unwrap();
        assert_eq!(last.len(), 1);
        assert_eq!((last[0].position, last[0].p_h), (5, 1.0));
        assert_eq!(rec.steps.len(), 6);
    }

    #[test]
    fn hadamard_three_steps() {
        let s = Schedule::new(3, CoinSpec::Hadamard).unwrap();
        let rec = evolve(&start_h(), &s, &LossModel::lossless()).unwrap();
        let board = chessboard(&rec);
        let expect = [(-3, 0.125), (-1, 0.125), (1, 0.625), (3, 0.125)];
        for (x, p) in expect {
            assert!((board.get(3, x).unwrap() - p).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn one_step_chessboard() {
        let s = Schedule::new(1, CoinSpec::Hadamard).unwrap();
        let rec = evolve(&start_h(), &s, &LossModel::lossless()).unwrap();
        let board = chessboard(&rec);
        let row = &board.rows[1];
        assert_eq!(board.positions, [-1, 0, 1]);
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(row[1], 0.0);
    }

    #[test]
    fn finite_walk_confined() {
        let s = finite_graph_schedule(3, CoinSpec::QwpPlus, 20).unwrap();
        let rec = evolve(&start_h(), &s, &LossModel::lossless()).unwrap();
        let board = chessboard(&rec);
        assert!(board.positions.iter().all(|x| x.abs() <= 3));
    }

    #[test]
    fn unrestricted_qwp36_is_biased_right() {
        let s = Schedule::new(20, CoinSpec::Qwp(36.0)).unwrap();
        let rec = evolve(&start_h(), &s, &LossModel::lossless()).unwrap();
        assert!(mean_position(rec.rows_at(20).unwrap()) > 0.0);
    }

    #[test]
    fn lossy_norms_decrease() {
        let s = Schedule::new(10, CoinSpec::Hadamard).unwrap();
        let rec = evolve(&start_h(), &s, &LossModel::paper()).unwrap();
        for w in rec.steps.windows(2) {
            assert!(w[1].raw_norm <= w[0].raw_norm);
        }
        assert!(rec.steps[10].raw_norm < 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = Schedule::new(2, CoinSpec::T).unwrap();
        let bad = LossModel {
            eta_h: 1.2,
            ..LossModel::paper()
        };
        assert!(matches!(
            evolve(&start_h(), &s, &bad),
            Err(Error::InvalidParameter { name: "eta_h", .. })
        ));
        let unnormalized = WalkState::from_amplitudes(
            0,
            0,
            [(
                0,
                CoinState::new(crate::C64::new(0.5, 0.0), crate::C64::new(0.0, 0.0)),
            )],
        );
        assert!(matches!(
            evolve(&unnormalized, &s, &LossModel::lossless()),
            Err(Error::NotNormalized(_))
        ));
    }
}
