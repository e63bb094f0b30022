//! Static checks of a configuration against the hardware constraints.

use std::fmt;
use std::path::Path;

use qwalk_core::photonics::{validate_timings, DAMAGE_THRESHOLD};
use qwalk_core::schedule::HARDWARE_COIN_LEVELS;
use qwalk_core::{evolve, CoinSpec, LossModel};
use serde::Serialize;

use crate::config::{ExperimentKind, RunConfig, Walk};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    /// Configuration field the diagnostic is about.
    pub field: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{s}: `{}`: {}", self.field, self.message)
    }
}

impl Diagnostic {
    fn error(field: &str, message: String) -> Self {
        Diagnostic {
            severity: Severity::Error,
            field: field.to_string(),
            message,
        }
    }

    fn warning(field: &str, message: String) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            field: field.to_string(),
            message,
        }
    }
}

fn from_cli(e: CliError) -> Diagnostic {
    match e {
        CliError::Field { field, message } => Diagnostic::error(&field, message),
        other => Diagnostic::error("config", other.to_string()),
    }
}

/// Widest step of the run, in position slots minus one. Without
/// reflections the walker can spread one slot per step; with them the
/// occupied span of the ideal run decides.
fn required_slots(walk: &Walk) -> u32 {
    let schedule = &walk.schedule;
    let reflects = schedule.default_coin() == CoinSpec::R
        || schedule.overrides().iter().any(|o| o.coin == CoinSpec::R);
    if !reflects {
        return schedule.steps();
    }
    let Ok(rec) = evolve(&walk.initial, schedule, &LossModel::lossless()) else {
        return schedule.steps();
    };
    rec.steps
        .iter()
        .filter_map(|s| {
            let lo = s.rows.first()?.position;
            let hi = s.rows.last()?.position;
            Some(((hi - lo) / 2) as u32)
        })
        .max()
        .unwrap_or(0)
}

/// All diagnostics of `config`. Configuration errors that stop resolution
/// are reported as a single error.
pub fn validate(config: &RunConfig, base_dir: &Path) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if let Err(e) = config.check_relevance() {
        out.push(from_cli(e));
        return out;
    }
    let timing = match config.timing() {
        Ok(t) => t,
        Err(e) => {
            out.push(from_cli(e));
            return out;
        }
    };

    if config.experiment.is_walk() {
        match config.walk(base_dir) {
            Err(e) => out.push(from_cli(e)),
            Ok(walk) => {
                let m = required_slots(&walk);
                match validate_timings(&timing, m) {
                    Ok(c) if !c.admissible => out.push(Diagnostic::error(
                        "steps",
                        format!(
                            "step {m} needs {} position slots per roundtrip but only {} steps fit without overlap; \
                             add boundary reflections or run at most {} steps",
                            m + 1,
                            c.max_steps,
                            c.max_steps
                        ),
                    )),
                    Ok(_) => {}
                    Err(e) => out.push(Diagnostic::error("timing", e.to_string())),
                }
                let levels = walk.schedule.distinct_coins().len();
                if levels > HARDWARE_COIN_LEVELS {
                    out.push(Diagnostic::warning(
                        "schedule",
                        format!(
                            "{levels} distinct coin operators; the modulator switches between at most {HARDWARE_COIN_LEVELS}"
                        ),
                    ));
                }
            }
        }
        if config.experiment == ExperimentKind::Montecarlo {
            if let Err(e) = config.perturbation() {
                out.push(from_cli(e));
            }
        }
    }

    if config.experiment == ExperimentKind::Budget || config.budget.is_some() {
        match config.budget() {
            Err(e) => out.push(from_cli(e)),
            Ok(b) if b.exceeds_damage_threshold() => out.push(Diagnostic::warning(
                "budget",
                format!(
                    "{:.3e} photons/s at the detector in step 1 exceeds the damage threshold of {DAMAGE_THRESHOLD:e}/s; \
                     attenuate the input",
                    b.detector_rate()
                ),
            )),
            Ok(_) => {}
        }
    }
    out
}
