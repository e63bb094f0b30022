//! The JSON run configuration and its resolution into runnable pieces.

use std::fmt;
use std::path::{Path, PathBuf};

use qwalk_core::analysis::PerturbationSpec;
use qwalk_core::photonics::{PhotonBudget, TimingConfig};
use qwalk_core::protocols::{
    finite_graph_schedule, prep_then_walk, transfer_scheme, PrepTag, TransferScheme,
};
use qwalk_core::schedule::parse_schedule;
use qwalk_core::{CoinSpec, CoinState, Error as CoreError, LossModel, Schedule, WalkState, C64};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Unrestricted,
    Finite,
    Prep,
    Transfer,
    Budget,
    Sweep,
    Montecarlo,
    TransferSearch,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Unrestricted => "unrestricted",
            ExperimentKind::Finite => "finite",
            ExperimentKind::Prep => "prep",
            ExperimentKind::Transfer => "transfer",
            ExperimentKind::Budget => "budget",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Montecarlo => "montecarlo",
            ExperimentKind::TransferSearch => "transfer-search",
        }
    }

    /// Kinds that evolve a walker and produce a chessboard.
    pub fn is_walk(self) -> bool {
        matches!(
            self,
            ExperimentKind::Unrestricted
                | ExperimentKind::Finite
                | ExperimentKind::Prep
                | ExperimentKind::Transfer
                | ExperimentKind::Montecarlo
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum ScheduleSource {
    /// Schedule text in the configuration itself.
    Inline(String),
    /// Path to a schedule file, relative to the configuration file.
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolarizationName {
    H,
    V,
    D,
    A,
    R,
    L,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Amplitudes {
    /// `[re, im]` of the horizontal amplitude.
    pub h: [f64; 2],
    pub v: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub position: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarization: Option<PolarizationName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Amplitudes>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrepName {
    #[serde(rename = "VVHH")]
    Vvhh,
    #[serde(rename = "VHVH")]
    Vhvh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferConfig {
    pub period: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub period: u32,
    #[serde(default)]
    pub source: i64,
    pub target: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Per-roundtrip transmission factors.
    pub losses: Vec<f64>,
    pub dynamic_range_db: Vec<f64>,
    #[serde(default = "default_cap")]
    pub cap: u32,
}

fn default_cap() -> u32 {
    1000
}

/// Perturbation widths; the trial seed is the configuration's `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationConfig {
    pub coupling_sigma: f64,
    pub eom_transmission_sigma: f64,
    pub coin_angle_sigma: f64,
    pub trials: u32,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        let d = PerturbationSpec::default();
        PerturbationConfig {
            coupling_sigma: d.coupling_sigma,
            eom_transmission_sigma: d.eom_transmission_sigma,
            coin_angle_sigma: d.coin_angle_sigma,
            trials: d.trials,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<i64>,
    /// Shots per basis; omitted means exact probabilities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u32>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prep: Option<PrepName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer: Option<TransferConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub losses: Option<LossModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<PhotonBudget>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tomography: Option<TomographyConfig>,
}

/// A configuration together with the directory relative paths resolve against.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

/// Parses a configuration document. Errors name the offending field path.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." || path.is_empty() {
            CliError::config(format!("config: {inner}"))
        } else {
            CliError::field(&path, inner.to_string())
        }
    })
}

pub fn load_config(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    let config = parse_config(&text)?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig { config, base_dir })
}

/// Everything a walk experiment needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Walk {
    pub initial: WalkState,
    pub schedule: Schedule,
    pub losses: LossModel,
    /// Steps before the displayed step 0.
    pub offset: u32,
    pub boundary: Option<u32>,
    pub transfer: Option<(TransferScheme, u32)>,
    /// Schedule text when it came from the DSL, for hashing.
    pub schedule_text: Option<String>,
}

fn core_field(section: &str, e: CoreError) -> CliError {
    match e {
        CoreError::InvalidParameter { name, reason } => {
            CliError::field(&format!("{section}.{name}"), reason)
        }
        other => CliError::field(section, other.to_string()),
    }
}

fn parse_coin(text: &str) -> Result<CoinSpec, CliError> {
    text.parse::<CoinSpec>()
        .map_err(|e| CliError::field("coin", e.to_string()))
}

impl RunConfig {
    /// Top-level fields set in the document, for relevance checks.
    fn present_sections(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let mut add = |set: bool, name| {
            if set {
                out.push(name);
            }
        };
        add(self.steps.is_some(), "steps");
        add(self.initial.is_some(), "initial");
        add(self.coin.is_some(), "coin");
        add(self.boundary.is_some(), "boundary");
        add(self.schedule.is_some(), "schedule");
        add(self.prep.is_some(), "prep");
        add(self.transfer.is_some(), "transfer");
        add(self.search.is_some(), "search");
        add(self.losses.is_some(), "losses");
        add(self.sweep.is_some(), "sweep");
        add(self.perturbation.is_some(), "perturbation");
        add(self.tomography.is_some(), "tomography");
        out
    }

    /// Rejects sections the experiment kind would silently ignore.
    pub fn check_relevance(&self) -> Result<(), CliError> {
        use ExperimentKind::*;
        let allowed: &[&str] = match self.experiment {
            Unrestricted => &[
                "steps",
                "initial",
                "coin",
                "schedule",
                "losses",
                "tomography",
            ],
            Finite => &[
                "steps",
                "initial",
                "coin",
                "boundary",
                "schedule",
                "losses",
                "tomography",
            ],
            Prep => &["steps", "coin", "prep", "losses", "tomography"],
            Transfer => &["steps", "initial", "transfer", "losses", "tomography"],
            Montecarlo => &[
                "steps",
                "initial",
                "coin",
                "boundary",
                "schedule",
                "losses",
                "perturbation",
            ],
            Budget => &["steps"],
            Sweep => &["sweep"],
            TransferSearch => &["search"],
        };
        for s in self.present_sections() {
            if !allowed.contains(&s) {
                return Err(CliError::field(
                    s,
                    format!("not used by experiment `{}`", self.experiment),
                ));
            }
        }
        Ok(())
    }

    pub fn timing(&self) -> Result<TimingConfig, CliError> {
        let t = self.timing.unwrap_or_else(TimingConfig::paper);
        t.validate().map_err(|e| core_field("timing", e))?;
        Ok(t)
    }

    pub fn budget(&self) -> Result<PhotonBudget, CliError> {
        let b = self.budget.unwrap_or_else(PhotonBudget::paper);
        b.validate().map_err(|e| core_field("budget", e))?;
        Ok(b)
    }

    pub fn losses(&self) -> Result<LossModel, CliError> {
        let l = self.losses.unwrap_or_default();
        if l.enabled {
            l.validate().map_err(|e| core_field("losses", e))?;
        }
        Ok(l)
    }

    pub fn perturbation(&self) -> Result<PerturbationSpec, CliError> {
        let p = self.perturbation.unwrap_or_default();
        let spec = PerturbationSpec {
            coupling_sigma: p.coupling_sigma,
            eom_transmission_sigma: p.eom_transmission_sigma,
            coin_angle_sigma: p.coin_angle_sigma,
            trials: p.trials,
            seed: self.seed,
        };
        spec.validate().map_err(|e| core_field("perturbation", e))?;
        Ok(spec)
    }

    fn initial_coin(&self) -> Result<(i64, CoinState), CliError> {
        let init = self.initial.unwrap_or_default();
        let a = std::f64::consts::FRAC_1_SQRT_2;
        let coin = match (init.polarization, init.amplitudes) {
            (Some(_), Some(_)) => {
                return Err(CliError::field(
                    "initial",
                    "give either `polarization` or `amplitudes`, not both",
                ))
            }
            (None, None) | (Some(PolarizationName::H), None) => CoinState::horizontal(),
            (Some(PolarizationName::V), None) => CoinState::vertical(),
            (Some(PolarizationName::D), None) => CoinState::diagonal(),
            (Some(PolarizationName::A), None) => {
                CoinState::new(C64::new(a, 0.0), C64::new(-a, 0.0))
            }
            (Some(PolarizationName::R), None) => CoinState::circular(),
            (Some(PolarizationName::L), None) => {
                CoinState::new(C64::new(a, 0.0), C64::new(0.0, -a))
            }
            (None, Some(amp)) => {
                if !amp.h.iter().chain(&amp.v).all(|v| v.is_finite()) {
                    return Err(CliError::field("initial.amplitudes", "must be finite"));
                }
                CoinState::new(C64::new(amp.h[0], amp.h[1]), C64::new(amp.v[0], amp.v[1]))
                    .normalized()
                    .map_err(|_| CliError::field("initial.amplitudes", "must not both be zero"))?
            }
        };
        Ok((init.position, coin))
    }

    fn schedule_text(&self, base_dir: &Path) -> Result<Option<String>, CliError> {
        match &self.schedule {
            None => Ok(None),
            Some(ScheduleSource::Inline(t)) => Ok(Some(t.clone())),
            Some(ScheduleSource::File(p)) => {
                let path = base_dir.join(p);
                std::fs::read_to_string(&path).map(Some).map_err(|e| {
                    CliError::field(
                        "schedule.file",
                        format!("cannot read {}: {e}", path.display()),
                    )
                })
            }
        }
    }

    fn require_steps(&self) -> Result<u32, CliError> {
        match self.steps {
            Some(0) => Err(CliError::field("steps", "must be at least 1")),
            Some(n) => Ok(n),
            None => Err(CliError::field(
                "steps",
                format!("required for experiment `{}`", self.experiment),
            )),
        }
    }

    fn require_coin(&self) -> Result<CoinSpec, CliError> {
        match &self.coin {
            Some(c) => parse_coin(c),
            None => Err(CliError::field(
                "coin",
                format!("required for experiment `{}`", self.experiment),
            )),
        }
    }

    /// Builds the walk of a walk-kind experiment.
    pub fn walk(&self, base_dir: &Path) -> Result<Walk, CliError> {
        use ExperimentKind::*;
        self.check_relevance()?;
        let losses = self.losses()?;
        let (x0, coin) = self.initial_coin()?;
        let text = self.schedule_text(base_dir)?;
        let mut offset = 0;
        let mut transfer = None;

        let schedule = match (self.experiment, &text) {
            (Unrestricted | Finite | Montecarlo, Some(t)) => {
                if self.coin.is_some() || self.boundary.is_some() {
                    let f = if self.coin.is_some() {
                        "coin"
                    } else {
                        "boundary"
                    };
                    return Err(CliError::field(
                        f,
                        "conflicts with `schedule`, which fixes every coin",
                    ));
                }
                let s =
                    parse_schedule(t).map_err(|e| CliError::field("schedule", e.to_string()))?;
                if let Some(n) = self.steps {
                    if n != s.steps() {
                        return Err(CliError::field(
                            "steps",
                            format!("{n} conflicts with the schedule's {} steps", s.steps()),
                        ));
                    }
                }
                s
            }
            (Unrestricted, None) => Schedule::new(self.require_steps()?, self.require_coin()?)
                .map_err(|e| core_field("steps", e))?,
            (Finite, None) => {
                let b = self.boundary.ok_or_else(|| {
                    CliError::field(
                        "boundary",
                        "required for experiment `finite` without a schedule",
                    )
                })?;
                let coin = self.require_coin()?;
                finite_graph_schedule(b, coin, self.require_steps()?)
                    .map_err(|e| core_field("boundary", e))?
            }
            (Montecarlo, None) => {
                let coin = self.require_coin()?;
                let n = self.require_steps()?;
                match self.boundary {
                    Some(b) => {
                        finite_graph_schedule(b, coin, n).map_err(|e| core_field("boundary", e))?
                    }
                    None => Schedule::new(n, coin).map_err(|e| core_field("steps", e))?,
                }
            }
            (Prep, _) => {
                let tag = match self.prep {
                    Some(PrepName::Vvhh) => PrepTag::Vvhh,
                    Some(PrepName::Vhvh) => PrepTag::Vhvh,
                    None => return Err(CliError::field("prep", "required for experiment `prep`")),
                };
                offset = 3;
                prep_then_walk(tag, self.require_coin()?, self.steps.unwrap_or(0))
                    .map_err(|e| core_field("steps", e))?
            }
            (Transfer, _) => {
                let tc = self.transfer.ok_or_else(|| {
                    CliError::field("transfer", "required for experiment `transfer`")
                })?;
                let scheme = transfer_scheme(tc.period).map_err(|e| core_field("transfer", e))?;
                let periods = match (tc.periods, self.steps) {
                    (Some(p), None) => p,
                    (None, Some(n)) if n % tc.period == 0 => n / tc.period,
                    (None, Some(n)) => {
                        return Err(CliError::field(
                            "steps",
                            format!("{n} is not a multiple of the period {}", tc.period),
                        ))
                    }
                    (Some(p), Some(n)) if p * tc.period == n => p,
                    (Some(p), Some(n)) => {
                        return Err(CliError::field(
                            "steps",
                            format!("{n} conflicts with {p} periods of {} steps", tc.period),
                        ))
                    }
                    (None, None) => 1,
                };
                if periods == 0 {
                    return Err(CliError::field("transfer.periods", "must be at least 1"));
                }
                if x0 != scheme.source {
                    return Err(CliError::field(
                        "initial.position",
                        format!("transfer schemes start at position {}", scheme.source),
                    ));
                }
                let s = scheme
                    .to_schedule(periods)
                    .map_err(|e| core_field("transfer", e))?;
                transfer = Some((scheme, periods));
                s
            }
            (kind, _) => {
                return Err(CliError::config(format!(
                    "experiment `{kind}` does not evolve a walker"
                )))
            }
        };

        let initial = WalkState::localized(x0, coin).map_err(|e| core_field("initial", e))?;
        Ok(Walk {
            initial,
            boundary: if self.experiment == Prep {
                None
            } else {
                self.boundary
            },
            schedule,
            losses,
            offset,
            transfer,
            schedule_text: text,
        })
    }

    /// SHA-256 over the effective configuration and any referenced schedule
    /// text, hex encoded.
    pub fn hash(&self, schedule_text: Option<&str>) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(self).expect("config is serializable"));
        if let Some(t) = schedule_text {
            h.update(b"\n");
            h.update(t.as_bytes());
        }
        hex::encode(h.finalize())
    }
}
