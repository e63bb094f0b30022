//! Runs a resolved configuration and collects its tables.

use std::path::Path;

use qwalk_core::analysis::{
    mean_distance, monte_carlo_errorbars, perturbed_run, reconstruct, simulate_tomography,
    DensityMatrix, Shots,
};
use qwalk_core::engine::chessboard;
use qwalk_core::photonics::{
    attainable_steps, multi_photon_probability, optimal_outcoupling, validate_timings,
};
use qwalk_core::protocols::{max_occupancy, search_transfer_schedules, verify_transfer};
use qwalk_core::{evolve, RunRecord};

use crate::config::{ExperimentKind, RunConfig, Walk};
use crate::report::{Cell, Metadata, Report, Table};
use crate::CliError;

/// Which subcommand is running; decides the admissible experiment kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Budget,
    Sweep,
    TransferSearch,
    Tomography,
    Montecarlo,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Budget => "budget",
            Command::Sweep => "sweep",
            Command::TransferSearch => "transfer-search",
            Command::Tomography => "tomography",
            Command::Montecarlo => "montecarlo",
        }
    }

    fn accepts(self, kind: ExperimentKind) -> bool {
        use ExperimentKind::*;
        match self {
            Command::Simulate => matches!(kind, Unrestricted | Finite | Prep | Transfer),
            Command::Tomography => matches!(kind, Unrestricted | Finite | Prep | Transfer),
            Command::Budget => kind == Budget,
            Command::Sweep => kind == Sweep,
            Command::TransferSearch => kind == TransferSearch,
            Command::Montecarlo => kind == Montecarlo,
        }
    }
}

fn runtime(e: qwalk_core::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Runs `config` under `command`.
pub fn run(command: Command, config: &RunConfig, base_dir: &Path) -> Result<Report, CliError> {
    if !command.accepts(config.experiment) {
        return Err(CliError::config(format!(
            "experiment `{}` cannot run under `{}`",
            config.experiment,
            command.name()
        )));
    }
    config.check_relevance()?;
    let (tables, schedule_text) = match config.experiment {
        ExperimentKind::Budget => (budget(config)?, None),
        ExperimentKind::Sweep => (sweep(config)?, None),
        ExperimentKind::TransferSearch => (transfer_search(config)?, None),
        ExperimentKind::Montecarlo => {
            let walk = config.walk(base_dir)?;
            (montecarlo(config, &walk)?, walk.schedule_text)
        }
        _ => {
            let walk = config.walk(base_dir)?;
            let tables = if command == Command::Tomography {
                tomography(config, &walk)?
            } else {
                simulate(&walk)?
            };
            (tables, walk.schedule_text)
        }
    };
    Ok(Report {
        metadata: Metadata {
            experiment: config.experiment.name().to_string(),
            config_sha256: config.hash(schedule_text.as_deref()),
            seed: config.seed,
        },
        tables,
    })
}

fn displayed_step(walk: &Walk, step: u32) -> i64 {
    i64::from(step) - i64::from(walk.offset)
}

fn chessboard_table(walk: &Walk, rec: &RunRecord) -> Table {
    let board = chessboard(rec);
    let mut columns = vec!["step".to_string()];
    columns.extend(board.positions.iter().map(i64::to_string));
    let mut t = Table::new("chessboard", columns);
    for (step, row) in board.steps.iter().zip(&board.rows) {
        if *step < walk.offset {
            continue;
        }
        let mut cells: Vec<Cell> = vec![displayed_step(walk, *step).into()];
        cells.extend(row.iter().map(|&p| Cell::Float(p)));
        t.push(cells);
    }
    t
}

fn probabilities_table(walk: &Walk, rec: &RunRecord) -> Table {
    let mut t = Table::new("probabilities", ["step", "position", "p_h", "p_v"]);
    for r in rec
        .steps
        .iter()
        .filter(|s| s.step >= walk.offset)
        .flat_map(|s| s.rows.iter())
    {
        t.push(vec![
            displayed_step(walk, r.step).into(),
            r.position.into(),
            r.p_h.into(),
            r.p_v.into(),
        ]);
    }
    t
}

fn rho_cells(rho: &DensityMatrix) -> Vec<Cell> {
    let m = rho.entries();
    vec![
        m[0][0].re.into(),
        m[0][1].re.into(),
        m[0][1].im.into(),
        m[1][1].re.into(),
    ]
}

const RHO_COLUMNS: [&str; 4] = ["rho_hh", "rho_hv_re", "rho_hv_im", "rho_vv"];

fn simulate(walk: &Walk) -> Result<Vec<Table>, CliError> {
    let rec = evolve(&walk.initial, &walk.schedule, &walk.losses).map_err(runtime)?;
    let mut tables = vec![
        chessboard_table(walk, &rec),
        probabilities_table(walk, &rec),
    ];

    let mut summary = vec![
        ("steps", Cell::from(walk.schedule.steps() - walk.offset)),
        (
            "max_occupancy",
            max_occupancy(&walk.initial, &walk.schedule).into(),
        ),
    ];
    if let Some(b) = walk.boundary {
        summary.push(("boundary", b.into()));
    }
    if walk.offset > 0 {
        summary.push(("preparation_steps", walk.offset.into()));
    }
    tables.push(Table::summary("summary", summary));

    if let Some((scheme, periods)) = &walk.transfer {
        let coin = walk.initial.get(scheme.source).copied().unwrap_or_default();
        let rho = DensityMatrix::pure(&coin).map_err(runtime)?;
        let checks = verify_transfer(scheme, &rho, *periods, &walk.losses).map_err(runtime)?;
        let mut cols = vec!["step", "position", "fidelity"];
        cols.extend(RHO_COLUMNS);
        let mut t = Table::new("fidelity", cols);
        for c in checks {
            let mut row = vec![c.step.into(), c.position.into(), c.fidelity.into()];
            row.extend(rho_cells(&c.rho));
            t.push(row);
        }
        tables.push(t);

        let mut cells = Table::new("reflections", ["step", "position"]);
        for &(s, x) in &scheme.r_cells {
            cells.push(vec![s.into(), x.into()]);
        }
        tables.push(cells);
    }
    Ok(tables)
}

fn tomography(config: &RunConfig, walk: &Walk) -> Result<Vec<Table>, CliError> {
    let tc = config.tomography.unwrap_or_default();
    let rec = evolve(&walk.initial, &walk.schedule, &walk.losses).map_err(runtime)?;
    let last = rec.last_step() - walk.offset;
    let step = tc.step.unwrap_or(last);
    if step > last {
        return Err(CliError::field(
            "tomography.step",
            format!("run ends at step {last}"),
        ));
    }
    let position = match (tc.position, &walk.transfer) {
        (Some(x), _) => x,
        (None, Some((scheme, _))) => {
            if !step.is_multiple_of(scheme.period) {
                return Err(CliError::field(
                    "tomography.position",
                    "required when the step is not a multiple of the transfer period",
                ));
            }
            if (step / scheme.period) % 2 == 1 {
                scheme.target
            } else {
                scheme.source
            }
        }
        (None, None) => {
            return Err(CliError::field(
                "tomography.position",
                "required outside transfer runs",
            ))
        }
    };
    let shots = match tc.shots {
        None => Shots::Exact,
        Some(0) => return Err(CliError::field("tomography.shots", "must be at least 1")),
        Some(n) => Shots::Finite(n),
    };

    // re-run up to the requested step to get amplitudes, not just read-out rows
    let steps = step + walk.offset;
    let state = if steps == 0 {
        walk.initial.clone()
    } else {
        let truncated = walk.schedule.truncated(steps).map_err(runtime)?;
        evolve(&walk.initial, &truncated, &walk.losses)
            .map_err(runtime)?
            .final_state
    };
    let counts = simulate_tomography(&state, position, shots, config.seed)
        .map_err(|e| CliError::field("tomography.position", e.to_string()))?;
    let rho = reconstruct(&counts).map_err(runtime)?;
    let exact = DensityMatrix::pure(&state.conditional_coin(position).map_err(runtime)?)
        .map_err(runtime)?;

    let mut t = Table::new("counts", ["basis", "first", "second"]);
    for c in &counts {
        t.push(vec![
            c.basis.to_string().into(),
            c.first.into(),
            c.second.into(),
        ]);
    }
    let mut cols = vec!["source", "step", "position", "fidelity"];
    cols.extend(RHO_COLUMNS);
    let mut r = Table::new("density_matrix", cols);
    for (name, m) in [("reconstructed", &rho), ("exact", &exact)] {
        let mut row = vec![
            name.into(),
            i64::from(step).into(),
            position.into(),
            qwalk_core::analysis::fidelity(m, &exact).into(),
        ];
        row.extend(rho_cells(m));
        r.push(row);
    }
    let shots_cell: Cell = match tc.shots {
        Some(n) => (n as i64).into(),
        None => "exact".into(),
    };
    Ok(vec![
        t,
        r,
        Table::summary("summary", vec![("shots_per_basis", shots_cell)]),
    ])
}

fn montecarlo(config: &RunConfig, walk: &Walk) -> Result<Vec<Table>, CliError> {
    let spec = config.perturbation()?;
    let bars = monte_carlo_errorbars(&walk.initial, &walk.schedule, &walk.losses, &spec)
        .map_err(runtime)?;
    let mut t = Table::new(
        "errorbars",
        ["step", "position", "polarization", "mean", "stddev"],
    );
    for b in &bars {
        t.push(vec![
            b.step.into(),
            b.position.into(),
            b.polarization.to_string().into(),
            b.mean.into(),
            b.stddev.into(),
        ]);
    }

    let ideal = evolve(&walk.initial, &walk.schedule, &walk.losses).map_err(runtime)?;
    let last = walk.schedule.steps();
    let mut total = 0.0;
    for trial in 0..spec.trials {
        let rec = perturbed_run(&walk.initial, &walk.schedule, &walk.losses, &spec, trial)
            .map_err(runtime)?;
        total += mean_distance(&ideal, &rec, 1..=last).map_err(runtime)?;
    }
    let summary = Table::summary(
        "summary",
        vec![
            ("trials", spec.trials.into()),
            ("coupling_sigma", spec.coupling_sigma.into()),
            ("eom_transmission_sigma", spec.eom_transmission_sigma.into()),
            ("coin_angle_sigma_deg", spec.coin_angle_sigma.into()),
            (
                "mean_distance_to_ideal",
                (total / f64::from(spec.trials)).into(),
            ),
        ],
    );
    Ok(vec![t, chessboard_table(walk, &ideal), summary])
}

fn budget(config: &RunConfig) -> Result<Vec<Table>, CliError> {
    let b = config.budget()?;
    let timing = config.timing()?;
    let n_max = match config.steps {
        Some(0) => return Err(CliError::field("steps", "must be at least 1")),
        Some(n) => n,
        None => 20,
    };
    let mut t = Table::new(
        "photon_budget",
        [
            "step",
            "photons",
            "multi_photon_probability",
            "optimal_r_out",
            "photons_at_optimum",
            "analytic_r_out",
        ],
    );
    for n in 1..=n_max {
        let photons = b.photon_number(n).map_err(runtime)?;
        let o = optimal_outcoupling(&b, n).map_err(runtime)?;
        t.push(vec![
            n.into(),
            photons.into(),
            multi_photon_probability(photons).map_err(runtime)?.into(),
            o.argmax.into(),
            o.photons.into(),
            o.analytic.into(),
        ]);
    }
    let tc = validate_timings(&timing, 1).map_err(|e| CliError::field("timing", e.to_string()))?;
    let summary = Table::summary(
        "summary",
        vec![
            ("incident_photons", b.incident_photons().into()),
            ("detector_rate", b.detector_rate().into()),
            (
                "damage_threshold",
                qwalk_core::photonics::DAMAGE_THRESHOLD.into(),
            ),
            (
                "exceeds_damage_threshold",
                b.exceeds_damage_threshold().into(),
            ),
            ("max_steps_without_overlap", tc.max_steps.into()),
            ("position_slots_per_roundtrip", tc.multiples.into()),
        ],
    );
    Ok(vec![t, summary])
}

fn sweep(config: &RunConfig) -> Result<Vec<Table>, CliError> {
    let s = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::field("sweep", "required for experiment `sweep`"))?;
    if s.losses.is_empty() {
        return Err(CliError::field("sweep.losses", "must not be empty"));
    }
    if s.dynamic_range_db.is_empty() {
        return Err(CliError::field(
            "sweep.dynamic_range_db",
            "must not be empty",
        ));
    }
    let mut t = Table::new("attainable_steps", ["loss", "dynamic_range_db", "n_max"]);
    for &dr in &s.dynamic_range_db {
        for (i, &loss) in s.losses.iter().enumerate() {
            let n = attainable_steps(loss, dr, s.cap).map_err(|e| match e {
                qwalk_core::Error::InvalidParameter {
                    name: "per_roundtrip_loss",
                    reason,
                } => CliError::field(&format!("sweep.losses[{i}]"), reason),
                other => CliError::field("sweep.dynamic_range_db", other.to_string()),
            })?;
            t.push(vec![loss.into(), dr.into(), n.into()]);
        }
    }
    Ok(vec![t])
}

fn transfer_search(config: &RunConfig) -> Result<Vec<Table>, CliError> {
    let s = config
        .search
        .ok_or_else(|| CliError::field("search", "required for experiment `transfer-search`"))?;
    let schemes = search_transfer_schedules(s.period, s.source, s.target).map_err(|e| match e {
        qwalk_core::Error::InvalidParameter { name, reason } => {
            CliError::field(&format!("search.{name}"), reason)
        }
        other => runtime(other),
    })?;
    let mut t = Table::new("schemes", ["scheme", "step", "position"]);
    for (i, scheme) in schemes.iter().enumerate() {
        for &(step, x) in &scheme.r_cells {
            t.push(vec![i.into(), step.into(), x.into()]);
        }
    }
    let summary = Table::summary(
        "summary",
        vec![
            ("period", s.period.into()),
            ("source", s.source.into()),
            ("target", s.target.into()),
            ("schemes", schemes.len().into()),
        ],
    );
    Ok(vec![t, summary])
}
