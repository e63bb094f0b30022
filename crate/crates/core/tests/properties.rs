use proptest::prelude::*;
use qwalk_core::analysis::{
    distance, fidelity, mean_and_stddev, monte_carlo_errorbars, reconstruct, simulate_tomography,
    DensityMatrix, PerturbationSpec, Shots,
};
use qwalk_core::coin::{CoinOperator, CoinSpec};
use qwalk_core::engine::{evolve, LossModel};
use qwalk_core::photonics::{
    arrival_time, attainable_steps, multi_photon_probability, validate_timings, PhotonBudget,
    TimingConfig,
};
use qwalk_core::protocols::{search_transfer_schedules, transfer_scheme, verify_transfer};
use qwalk_core::schedule::{
    finite_graph_schedule, parse_schedule, PositionSpec, Schedule, StepSpec,
};
use qwalk_core::state::{CoinState, Polarization, ProbabilityRow, WalkState};
use qwalk_core::C64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn coin_spec() -> impl Strategy<Value = CoinSpec> {
    prop_oneof![
        Just(CoinSpec::T),
        Just(CoinSpec::R),
        Just(CoinSpec::Hadamard),
        Just(CoinSpec::QwpPlus),
        Just(CoinSpec::QwpMinus),
        (-90.0..90.0f64).prop_map(CoinSpec::Hwp),
        (-90.0..90.0f64).prop_map(CoinSpec::Qwp),
        (-3.2..3.2f64, -3.2..3.2f64).prop_map(|(phi, phase)| CoinSpec::Eom { phi, phase }),
    ]
}

fn coin_state() -> impl Strategy<Value = CoinState> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("non-zero", |(a, b, c, d)| {
            a * a + b * b + c * c + d * d > 1e-3
        })
        .prop_map(|(a, b, c, d)| {
            CoinState::new(C64::new(a, b), C64::new(c, d))
                .normalized()
                .unwrap()
        })
}

fn schedule(steps: u32) -> impl Strategy<Value = Schedule> {
    let step_spec = prop_oneof![
        Just(StepSpec::All),
        (1..=steps).prop_map(StepSpec::Single),
        (1..=steps, 1..=steps).prop_map(|(a, b)| StepSpec::Range(a.min(b), a.max(b))),
    ];
    let pos_spec = prop_oneof![
        Just(PositionSpec::All),
        prop::collection::vec(-12i64..=12, 1..4).prop_map(PositionSpec::List),
    ];
    (
        coin_spec(),
        prop::collection::vec((step_spec, pos_spec, coin_spec()), 0..5),
    )
        .prop_map(move |(d, overrides)| {
            overrides
                .into_iter()
                .fold(Schedule::new(steps, d).unwrap(), |s, (st, ps, c)| {
                    s.with_override(st, ps, c).unwrap()
                })
        })
}

fn table() -> impl Strategy<Value = Vec<ProbabilityRow>> {
    prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 1..6).prop_map(|w| {
        let total: f64 = w.iter().map(|(a, b)| a + b).sum::<f64>().max(1e-9);
        let mut rows: Vec<ProbabilityRow> = w
            .iter()
            .enumerate()
            .map(|(i, (a, b))| ProbabilityRow {
                step: 0,
                position: i as i64 - 2,
                p_h: a / total,
                p_v: b / total,
            })
            .collect();
        if total <= 1e-9 {
            rows[0].p_h = 1.0;
        }
        rows
    })
}

fn density() -> impl Strategy<Value = DensityMatrix> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.0..1.0f64).prop_map(|(a, b, c, r)| {
        let len = (a * a + b * b + c * c).sqrt().max(1e-12);
        DensityMatrix::from_bloch_projected([a / len * r, b / len * r, c / len * r])
    })
}

fn unitary() -> impl Strategy<Value = CoinOperator> {
    (-3.2..3.2f64, -3.2..3.2f64, -90.0..90.0f64, -90.0..90.0f64).prop_map(|(p, g, t, u)| {
        CoinSpec::Eom { phi: p, phase: g }.operator()
            * CoinSpec::Qwp(t).operator()
            * CoinSpec::Hwp(u).operator()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lossless_norm_is_conserved(s in schedule(25), c in coin_state(), x0 in -3i64..=3) {
        let start = WalkState::localized(x0, c).unwrap();
        let rec = evolve(&start, &s, &LossModel::lossless()).unwrap();
        for step in &rec.steps {
            prop_assert!((step.raw_norm - 1.0).abs() < 1e-12);
            let total: f64 = step.rows.iter().map(ProbabilityRow::total).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_loss_changes_no_probability(s in schedule(15), c in coin_state(), eta in 0.3..1.0f64, eom in 0.3..1.0f64) {
        let start = WalkState::localized(0, c).unwrap();
        let ideal = evolve(&start, &s, &LossModel::lossless()).unwrap();
        let lossy = evolve(&start, &s, &LossModel { eta_h: eta, eta_v: eta, eta_eom: eom, enabled: true }).unwrap();
        for (a, b) in ideal.steps.iter().zip(&lossy.steps) {
            prop_assert_eq!(a.rows.len(), b.rows.len());
            for (p, q) in a.rows.iter().zip(&b.rows) {
                prop_assert!((p.p_h - q.p_h).abs() < 1e-12 && (p.p_v - q.p_v).abs() < 1e-12);
            }
        }
        for w in lossy.steps.windows(2) {
            prop_assert!(w[1].raw_norm <= w[0].raw_norm);
        }
    }

    #[test]
    fn schedule_text_round_trips(s in schedule(30)) {
        let back = parse_schedule(&s.to_string()).unwrap();
        for n in 1..=30 {
            for x in -15..=15 {
                prop_assert_eq!(back.coin_at(n, x).unwrap(), s.coin_at(n, x).unwrap());
            }
        }
    }

    #[test]
    fn finite_graphs_confine_exactly(b in 1u32..=5, interior in coin_spec(), c in coin_state(), offset in 0u32..10) {
        let b_i = i64::from(b);
        let x0 = (i64::from(offset) % (2 * b_i - 1)) - (b_i - 1);
        let s = finite_graph_schedule(b, interior, 25).unwrap();
        let start = WalkState::localized(x0, c).unwrap();
        let rec = evolve(&start, &s, &LossModel::lossless()).unwrap();
        for step in &rec.steps {
            prop_assert!(step.rows.iter().all(|r| r.position.abs() <= b_i));
        }
    }

    #[test]
    fn distance_is_a_metric(p in table(), q in table(), r in table()) {
        let pq = distance(&p, &q).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&pq));
        prop_assert!((pq - distance(&q, &p).unwrap()).abs() < 1e-15);
        prop_assert!(distance(&p, &p).unwrap() == 0.0);
        let pr = distance(&p, &r).unwrap();
        let rq = distance(&r, &q).unwrap();
        prop_assert!(pq <= pr + rq + 1e-12);
        if p != q {
            let differs = p.iter().zip(&q).any(|(a, b)| (a.p_h - b.p_h).abs() > 1e-9 || (a.p_v - b.p_v).abs() > 1e-9)
                || p.len() != q.len();
            if differs {
                prop_assert!(pq > 0.0);
            }
        }
    }

    #[test]
    fn fidelity_axioms(a in density(), b in density(), u in unitary()) {
        let f = fidelity(&a, &b);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f - fidelity(&b, &a)).abs() < 1e-12);
        prop_assert!((fidelity(&a, &a) - 1.0).abs() < 1e-9);
        if a.max_diff(&b) > 1e-3 {
            prop_assert!(f < 1.0 - 1e-9);
        }
        let ua = a.transformed(&u).unwrap();
        let ub = b.transformed(&u).unwrap();
        prop_assert!((fidelity(&ua, &ub) - f).abs() < 1e-10);
    }

    #[test]
    fn exact_tomography_inverts(c in coin_state(), x in -5i64..5) {
        let s = WalkState::localized(x, c).unwrap();
        let counts = simulate_tomography(&s, x, Shots::Exact, 0).unwrap();
        let rho = reconstruct(&counts).unwrap();
        prop_assert!(rho.max_diff(&DensityMatrix::pure(&c).unwrap()) < 1e-12);
    }

    #[test]
    fn compensated_stats_ignore_order(xs in prop::collection::vec(0.0..1.0f64, 2..300), seed in any::<u64>()) {
        let (m, s) = mean_and_stddev(&xs);
        let mut ys = xs.clone();
        ys.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (m2, s2) = mean_and_stddev(&ys);
        prop_assert!((m - m2).abs() < 1e-12 && (s - s2).abs() < 1e-12);
    }

    #[test]
    fn photon_number_decreases(l_rt in 0.05..1.0f64, l_bs in 0.05..1.0f64, concentrate in any::<bool>()) {
        prop_assume!(l_rt * l_bs < 1.0);
        let b = PhotonBudget { l_rt, l_bs, concentrate, ..PhotonBudget::paper() };
        for n in 1..30 {
            prop_assert!(b.photon_number(n + 1).unwrap() < b.photon_number(n).unwrap());
        }
    }

    #[test]
    fn multi_photon_is_an_increasing_probability(a in 0.0..20.0f64, gap in 1e-3..5.0f64) {
        // beyond a mean of ~37 the value rounds to 1.0 in f64
        let pa = multi_photon_probability(a).unwrap();
        let pb = multi_photon_probability(a + gap).unwrap();
        prop_assert!((0.0..1.0).contains(&pa));
        prop_assert!(pb > pa);
        prop_assert!(multi_photon_probability(a + 40.0).unwrap() > 1.0 - 1e-15);
    }

    #[test]
    fn attainable_steps_is_monotone(l in 0.05..1.0f64, d in 0.0..100.0f64, extra in 0.0..50.0f64, dl in 0.0..0.5f64) {
        let n = attainable_steps(l, d, 100_000).unwrap();
        prop_assert!(attainable_steps(l, d + extra, 100_000).unwrap() >= n);
        prop_assert!(attainable_steps((l + dl).min(1.0), d, 100_000).unwrap() >= n);
        prop_assert!(attainable_steps(l, 2.0 * d, 100_000).unwrap() + 1 >= 2 * n);
    }

    #[test]
    fn arrival_times_are_injective(pos in 1.0..100.0f64, ratio in 1.5..30.0f64) {
        let t = TimingConfig { tau_pos: pos * 1e-9, tau_rt: pos * ratio * 1e-9, tau_rep: pos * ratio * 1e-6 };
        let max = validate_timings(&t, 0).unwrap().max_steps;
        let mut times = Vec::new();
        for n in 0..=max {
            for k in 0..=n {
                times.push(arrival_time(n, k, &t).unwrap());
            }
        }
        times.sort_by(f64::total_cmp);
        prop_assert!(times.windows(2).all(|w| w[1] - w[0] > 0.5 * t.tau_pos));
    }
}

#[test]
fn qwp45_mirror_symmetry() {
    let s = Schedule::new(25, CoinSpec::Qwp(45.0)).unwrap();
    let h = evolve(
        &WalkState::localized(0, CoinState::horizontal()).unwrap(),
        &s,
        &LossModel::lossless(),
    )
    .unwrap();
    let v = evolve(
        &WalkState::localized(0, CoinState::vertical()).unwrap(),
        &s,
        &LossModel::lossless(),
    )
    .unwrap();
    for (a, b) in h.steps.iter().zip(&v.steps) {
        assert_eq!(a.rows.len(), b.rows.len());
        for r in &a.rows {
            let m = b.rows.iter().find(|q| q.position == -r.position).unwrap();
            assert!((r.get(Polarization::H) - m.get(Polarization::V)).abs() < 1e-12);
            assert!((r.get(Polarization::V) - m.get(Polarization::H)).abs() < 1e-12);
        }
    }
}

#[test]
fn transfer_twice_returns_home() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for period in [5, 6] {
        let scheme = transfer_scheme(period).unwrap();
        let s = scheme.to_schedule(2).unwrap();
        for _ in 0..20 {
            let c = CoinState::new(
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            )
            .normalized()
            .unwrap();
            let rec = evolve(
                &WalkState::localized(0, c).unwrap(),
                &s,
                &LossModel::lossless(),
            )
            .unwrap();
            let out = rec.final_state.get(0).copied().unwrap();
            assert_eq!(rec.final_state.occupancy(), 1);
            assert!((c.inner(&out).norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn search_results_are_sound() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (period, target) in [(5, 1), (6, -2)] {
        for scheme in search_transfer_schedules(period, 0, target).unwrap() {
            assert_eq!(scheme.path_reflections(), [4, 4, 4, 4]);
            for _ in 0..10 {
                let c = CoinState::new(
                    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                )
                .normalized()
                .unwrap();
                let rho = DensityMatrix::pure(&c).unwrap();
                for check in verify_transfer(&scheme, &rho, 2, &LossModel::lossless()).unwrap() {
                    assert!((check.fidelity - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn tomography_error_shrinks_like_inverse_root_shots() {
    let c = CoinState::new(C64::new(0.6, 0.0), C64::new(0.48, 0.64));
    let state = WalkState::localized(0, c).unwrap();
    let truth = DensityMatrix::pure(&c).unwrap();
    let shots = [100u64, 400, 1600, 6400];
    let mut errors = Vec::new();
    for &n in &shots {
        let mut sum = 0.0;
        for seed in 0..40 {
            let counts = simulate_tomography(&state, 0, Shots::Finite(n), seed).unwrap();
            sum += reconstruct(&counts).unwrap().max_diff(&truth);
        }
        errors.push(sum / 40.0);
    }
    // least-squares slope of log error against log shots
    let xs: Vec<f64> = shots.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / 4.0;
    let my = ys.iter().sum::<f64>() / 4.0;
    let slope = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
    assert!(
        (-1.0..=-0.25).contains(&slope),
        "slope {slope}, errors {errors:?}"
    );
}

#[test]
fn monte_carlo_is_deterministic_under_a_fixed_seed() {
    let start = WalkState::localized(0, CoinState::horizontal()).unwrap();
    let s = finite_graph_schedule(3, CoinSpec::Qwp(45.0), 20).unwrap();
    let spec = PerturbationSpec {
        trials: 30,
        seed: 2024,
        ..Default::default()
    };
    let a = monte_carlo_errorbars(&start, &s, &LossModel::paper(), &spec).unwrap();
    let b = monte_carlo_errorbars(&start, &s, &LossModel::paper(), &spec).unwrap();
    assert_eq!(a, b);
}
