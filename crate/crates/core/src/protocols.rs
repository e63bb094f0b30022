//! Finite graphs, in-situ state preparation and state transfer.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use crate::analysis::{fidelity, DensityMatrix};
use crate::coin::{CoinOperator, CoinSpec};
use crate::engine::{advance, LossModel};
use crate::schedule::{PositionSpec, Schedule, StepSpec};
use crate::state::{CoinState, Polarization, WalkState};
use crate::{Error, Result, C64};

pub use crate::schedule::finite_graph_schedule;

/// The two prepared four-site states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrepTag {
    /// V on `{-3, -1}`, H on `{1, 3}`.
    Vvhh,
    /// V on `{-3, 1}`, H on `{-1, 3}`.
    Vhvh,
}

impl PrepTag {
    /// Coins of the three preparation steps.
    pub fn coins(self) -> [CoinSpec; 3] {
        match self {
            PrepTag::Vvhh => [CoinSpec::QwpMinus, CoinSpec::QwpMinus, CoinSpec::T],
            PrepTag::Vhvh => [CoinSpec::QwpMinus, CoinSpec::T, CoinSpec::QwpMinus],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PrepTag::Vvhh => "VVHH",
            PrepTag::Vhvh => "VHVH",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepVariant {
    pub tag: PrepTag,
    pub schedule: Schedule,
    /// Target state at step 3, with the phases of the printed kets.
    pub expected_state: WalkState,
}

pub fn prep_schedule(tag: PrepTag) -> PrepVariant {
    let schedule = prep_then_walk(tag, CoinSpec::T, 0).expect("three prep steps are in range");
    let half = |re: f64, im: f64| C64::new(re / 2.0, im / 2.0);
    let zero = C64::new(0.0, 0.0);
    let h = |a| CoinState::new(a, zero);
    let v = |a| CoinState::new(zero, a);
    let sites = match tag {
        PrepTag::Vvhh => [
            (-3, v(half(0.0, -1.0))),
            (-1, v(half(0.0, -1.0))),
            (1, h(half(-1.0, 0.0))),
            (3, h(half(1.0, 0.0))),
        ],
        PrepTag::Vhvh => [
            (-3, v(half(0.0, -1.0))),
            (-1, h(half(-1.0, 0.0))),
            (1, v(half(0.0, -1.0))),
            (3, h(half(1.0, 0.0))),
        ],
    };
    PrepVariant {
        tag,
        schedule,
        expected_state: WalkState::from_amplitudes(0, 3, sites),
    }
}

/// Three preparation steps followed by `extra_steps` steps of `interior`.
/// Run it with a step offset of 3 to count steps after the preparation.
pub fn prep_then_walk(tag: PrepTag, interior: CoinSpec, extra_steps: u32) -> Result<Schedule> {
    let [c1, c2, c3] = tag.coins();
    let mut s = Schedule::new(3 + extra_steps, interior)?;
    for (step, coin) in [(1, c1), (2, c2), (3, c3)] {
        s = s.with_override(StepSpec::Single(step), PositionSpec::All, coin)?;
    }
    Ok(s)
}

/// Largest number of simultaneously occupied sites over a run.
pub fn max_occupancy(initial: &WalkState, schedule: &Schedule) -> usize {
    let mut state = initial.clone();
    let mut best = state.occupancy();
    for n in 1..=schedule.steps() {
        state = advance(&state, schedule, n, (1.0, 1.0));
        best = best.max(state.occupancy());
    }
    best
}

/// A one-period {T, R} program moving any polarization state from `source`
/// to `target` and, repeated, back again.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferScheme {
    pub period: u32,
    pub source: i64,
    pub target: i64,
    /// Sorted `(step, position)` cells carrying R; every other cell is T.
    pub r_cells: Vec<(u32, i64)>,
}

const CANONICAL_5: [(u32, i64); 12] = [
    (1, 0),
    (1, 1),
    (2, -1),
    (2, 0),
    (2, 1),
    (2, 2),
    (3, 0),
    (3, 1),
    (4, -1),
    (4, 2),
    (5, -1),
    (5, 2),
];

const CANONICAL_6: [(u32, i64); 11] = [
    (1, -2),
    (1, 0),
    (2, -3),
    (2, -1),
    (2, 1),
    (3, -2),
    (3, 0),
    (4, -3),
    (4, 1),
    (6, -3),
    (6, 1),
];

/// Largest period the exhaustive search accepts.
pub const MAX_SEARCH_PERIOD: u32 = 8;

/// The canonical scheme: 5 steps between 0 and 1, or 6 steps between 0 and -2.
///
/// Each is the lexicographically smallest result of
/// [`search_transfer_schedules`], stored as data.
pub fn transfer_scheme(period: u32) -> Result<TransferScheme> {
    let (target, cells): (i64, &[(u32, i64)]) = match period {
        5 => (1, &CANONICAL_5),
        6 => (-2, &CANONICAL_6),
        _ => {
            return Err(Error::param(
                "period",
                "canonical schemes exist for 5 and 6",
            ))
        }
    };
    Ok(TransferScheme {
        period,
        source: 0,
        target,
        r_cells: cells.to_vec(),
    })
}

impl TransferScheme {
    pub fn is_reflection(&self, step: u32, x: i64) -> bool {
        self.r_cells.binary_search(&(step, x)).is_ok()
    }

    /// `periods` repetitions of the program as a schedule with T as default.
    pub fn to_schedule(&self, periods: u32) -> Result<Schedule> {
        if periods == 0 {
            return Err(Error::param("periods", "must be positive"));
        }
        let mut by_step: BTreeMap<u32, Vec<i64>> = BTreeMap::new();
        for &(n, x) in &self.r_cells {
            by_step.entry(n).or_default().push(x);
        }
        let mut s = Schedule::new(self.period * periods, CoinSpec::T)?;
        for k in 0..periods {
            for (n, xs) in &by_step {
                s = s.with_override(
                    StepSpec::Single(k * self.period + n),
                    PositionSpec::List(xs.clone()),
                    CoinSpec::R,
                )?;
            }
        }
        Ok(s)
    }

    /// Follows the basis component `pol` from `start` through one period.
    /// Returns the end position, end polarization and the number of R cells hit.
    pub fn trace_path(&self, start: i64, pol: Polarization) -> (i64, Polarization, u32) {
        let (mut x, mut p, mut hits) = (start, pol, 0);
        for n in 1..=self.period {
            if self.is_reflection(n, x) {
                hits += 1;
                p = flip(p);
            }
            x += direction(p);
        }
        (x, p, hits)
    }

    /// Reflection counts for `|source,H>`, `|source,V>`, `|target,H>`, `|target,V>`.
    pub fn path_reflections(&self) -> [u32; 4] {
        [
            self.trace_path(self.source, Polarization::H).2,
            self.trace_path(self.source, Polarization::V).2,
            self.trace_path(self.target, Polarization::H).2,
            self.trace_path(self.target, Polarization::V).2,
        ]
    }
}

fn flip(p: Polarization) -> Polarization {
    match p {
        Polarization::H => Polarization::V,
        Polarization::V => Polarization::H,
    }
}

fn direction(p: Polarization) -> i64 {
    match p {
        Polarization::H => 1,
        Polarization::V => -1,
    }
}

/// Visited `(step, position)` cells of one path, `true` where R acts.
type PathCells = Vec<((u32, i64), bool)>;

/// Every {T, R} choice along one deterministic path from `(start, pol)`
/// that ends at `end` with polarization `pol` and a multiple of four
/// reflections, hence total phase `i^4k = 1`. Each entry lists the visited
/// cells with `true` for R.
fn candidate_paths(
    period: u32,
    start: i64,
    end: i64,
    pol: Polarization,
) -> Vec<PathCells> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << period) {
        let (mut x, mut p, mut hits) = (start, pol, 0u32);
        let mut cells = Vec::with_capacity(period as usize);
        for n in 1..=period {
            let r = mask & (1 << (n - 1)) != 0;
            cells.push(((n, x), r));
            if r {
                hits += 1;
                p = flip(p);
            }
            x += direction(p);
        }
        if x == end && p == pol && hits % 4 == 0 {
            out.push(cells);
        }
    }
    out
}

/// All one-period {T, R} programs that carry `|source,H>` and
/// `|source,V>` to `target` and `|target,H>`, `|target,V>` back to
/// `source`, each unchanged including phase.
///
/// Results are sorted by their R cells; an empty list means no scheme exists.
pub fn search_transfer_schedules(
    period: u32,
    source: i64,
    target: i64,
) -> Result<Vec<TransferScheme>> {
    if period == 0 || period > MAX_SEARCH_PERIOD {
        return Err(Error::param("period", "search supports 1..=8"));
    }
    let mut lists = vec![
        candidate_paths(period, source, target, Polarization::H),
        candidate_paths(period, source, target, Polarization::V),
    ];
    if source != target {
        lists.push(candidate_paths(period, target, source, Polarization::H));
        lists.push(candidate_paths(period, target, source, Polarization::V));
    }

    let mut found: BTreeSet<Vec<(u32, i64)>> = BTreeSet::new();
    let mut cells: BTreeMap<(u32, i64), bool> = BTreeMap::new();
    join_paths(&lists, 0, &mut cells, &mut found);

    Ok(found
        .into_iter()
        .map(|r_cells| TransferScheme {
            period,
            source,
            target,
            r_cells,
        })
        .collect())
}

// Depth-first join of one path per list, keeping coins consistent on
// shared cells.
fn join_paths(
    lists: &[Vec<PathCells>],
    depth: usize,
    cells: &mut BTreeMap<(u32, i64), bool>,
    found: &mut BTreeSet<Vec<(u32, i64)>>,
) {
    if depth == lists.len() {
        found.insert(cells.iter().filter(|(_, &r)| r).map(|(&k, _)| k).collect());
        return;
    }
    for path in &lists[depth] {
        let mut added = Vec::new();
        let mut ok = true;
        for &(cell, r) in path {
            match cells.get(&cell) {
                Some(&prev) if prev != r => {
                    ok = false;
                    break;
                }
                Some(_) => {}
                None => {
                    cells.insert(cell, r);
                    added.push(cell);
                }
            }
        }
        if ok {
            join_paths(lists, depth + 1, cells, found);
        }
        for cell in added {
            cells.remove(&cell);
        }
    }
}

/// Read-out after one period of a transfer run.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferCheck {
    pub step: u32,
    pub position: i64,
    pub rho: DensityMatrix,
    pub fidelity: f64,
}

/// Runs `periods` repetitions and compares the polarization state at the
/// expected site after every period with `rho_in`.
///
/// The run evolves `|source,H>` and `|source,V>` separately; their
/// amplitudes at the expected site form the transfer matrix `M`, and the
/// output state is `M rho_in M^dagger` renormalized.
pub fn verify_transfer(
    scheme: &TransferScheme,
    rho_in: &DensityMatrix,
    periods: u32,
    losses: &LossModel,
) -> Result<Vec<TransferCheck>> {
    if losses.enabled {
        losses.validate()?;
    }
    let factors = losses.factors();
    let schedule = scheme.to_schedule(periods)?;
    let mut h = WalkState::localized(scheme.source, CoinState::horizontal())?;
    let mut v = WalkState::localized(scheme.source, CoinState::vertical())?;
    let mut out = Vec::with_capacity(periods as usize);
    for n in 1..=schedule.steps() {
        h = advance(&h, &schedule, n, factors);
        v = advance(&v, &schedule, n, factors);
        if n % scheme.period != 0 {
            continue;
        }
        let position = if (n / scheme.period) % 2 == 1 {
            scheme.target
        } else {
            scheme.source
        };
        let zero = CoinState::default();
        let a = *h.get(position).unwrap_or(&zero);
        let b = *v.get(position).unwrap_or(&zero);
        let m = CoinOperator::new(a.h, b.h, a.v, b.v);
        let rho = rho_in.transformed(&m)?;
        out.push(TransferCheck {
            step: n,
            position,
            fidelity: fidelity(rho_in, &rho),
            rho,
        });
    }
    Ok(out)
}
