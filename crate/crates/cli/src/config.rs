//! Experiment configuration files.
//!
//! Parsing happens in two stages: serde turns TOML into [`ExperimentConfig`]
//! (unknown keys are rejected), then [`ExperimentConfig::resolve`] builds the
//! validated library types so every physical constraint fails before any
//! simulation starts.

use std::path::{Path, PathBuf};

use qrev::channels::{ChannelSpec, MeterQuadrature, QuadratureConfig, Readout};
use qrev::qubit::{Operator2, PureState};
use qrev::trajectory::{ReadoutRecord, SimConfig};
use qrev::weak::MeterModel;
use serde::{Deserialize, Serialize};

use crate::AppError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Unravel,
    ArrowSingle,
    ArrowEnsemble,
    PrepostArrow,
    WeakValue,
    PovmCheck,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Unravel => "unravel",
            Experiment::ArrowSingle => "arrow-single",
            Experiment::ArrowEnsemble => "arrow-ensemble",
            Experiment::PrepostArrow => "prepost-arrow",
            Experiment::WeakValue => "weak-value",
            Experiment::PovmCheck => "povm-check",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    #[default]
    Position,
    Momentum,
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize, Serialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum ChannelConfig {
    Gaussian {
        k: f64,
        tau: f64,
        delta: f64,
        #[serde(default)]
        quadrature: Quadrature,
    },
    Dichotomous {
        gamma: f64,
    },
    Fluorescence {
        gamma1: f64,
    },
}

impl ChannelConfig {
    /// Library channel; fluorescence needs the step length.
    pub fn spec(&self, dt: f64) -> qrev::Result<ChannelSpec> {
        match *self {
            ChannelConfig::Gaussian { k, tau, delta, quadrature } => {
                let quadrature = match quadrature {
                    Quadrature::Position => MeterQuadrature::Position,
                    Quadrature::Momentum => MeterQuadrature::Momentum,
                };
                let s = ChannelSpec::Gaussian { k, tau, delta, quadrature };
                s.validate()?;
                Ok(s)
            }
            ChannelConfig::Dichotomous { gamma } => ChannelSpec::dichotomous(gamma),
            ChannelConfig::Fluorescence { gamma1 } => ChannelSpec::fluorescence(gamma1, dt),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Drive {
    /// Rabi frequency Ω.
    #[serde(default)]
    pub omega: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Time {
    pub t_total: f64,
    pub dt: f64,
}

/// Pure state `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Angles {
    pub theta: f64,
    #[serde(default)]
    pub phi: f64,
}

impl Angles {
    fn state(&self, which: &'static str) -> Result<PureState, AppError> {
        if !(self.theta.is_finite() && self.phi.is_finite()) {
            return Err(AppError::Config(format!("{which}: Bloch angles must be finite")));
        }
        Ok(PureState::from_angles(self.theta, self.phi))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum ReadoutValue {
    Integer(i64),
    Real(f64),
    Pair([f64; 2]),
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RecordConfig {
    /// Outcomes in time order: 0/1 (dichotomous), meter readings
    /// (Gaussian) or `[I, Q]` pairs (fluorescence).
    pub readouts: Vec<ReadoutValue>,
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct WeakConfig {
    /// Unit spin direction `n` of the observable `S = n·σ`.
    pub observable: [f64; 3],
    pub k: f64,
    pub tau: f64,
    pub delta: f64,
    /// Half-width of the pointer grid written to `pointer.csv`, in units of δ
    /// beyond the largest shift.
    #[serde(default = "default_pointer_span")]
    pub pointer_span: f64,
    #[serde(default = "default_pointer_points")]
    pub pointer_points: usize,
}

fn default_pointer_span() -> f64 {
    6.0
}

fn default_pointer_points() -> usize {
    401
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSettings {
    #[serde(default)]
    pub gaussian_half_width: Option<f64>,
    pub gaussian_points: usize,
    pub fluorescence_radius: f64,
    pub radial_cells: usize,
    pub angular_cells: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        let q = QuadratureConfig::default();
        Self {
            gaussian_half_width: q.gaussian_half_width,
            gaussian_points: q.gaussian_points,
            fluorescence_radius: q.fluorescence_radius,
            radial_cells: q.radial_cells,
            angular_cells: q.angular_cells,
        }
    }
}

impl QuadratureSettings {
    pub fn library(&self) -> QuadratureConfig {
        QuadratureConfig {
            gaussian_half_width: self.gaussian_half_width,
            gaussian_points: self.gaussian_points,
            fluorescence_radius: self.fluorescence_radius,
            radial_cells: self.radial_cells,
            angular_cells: self.angular_cells,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PovmConfig {
    pub channels: Vec<ChannelConfig>,
    /// Step length used for fluorescence channels.
    #[serde(default = "default_povm_dt")]
    pub dt: f64,
    #[serde(default)]
    pub quadrature: QuadratureSettings,
}

fn default_povm_dt() -> f64 {
    0.2
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_trajectories: Option<usize>,
    /// Output directory; `--out` and `QREV_OUT_DIR` take part in the same
    /// precedence chain.
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<Drive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<Time>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Angles>,
    #[serde(default, rename = "final", skip_serializing_if = "Option::is_none")]
    pub final_state: Option<Angles>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<RecordConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weak: Option<WeakConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub povm: Option<PovmConfig>,
}

/// Validated inputs for one run.
#[derive(Clone, Debug)]
pub enum Plan {
    Simulate { sim: SimConfig, initial: PureState },
    Ensemble { sim: SimConfig, initial: PureState, n: usize },
    Prepost { sim: SimConfig, pre: PureState, post: PureState, record: Option<ReadoutRecord> },
    Weak { observable: Operator2, pre: PureState, post: PureState, meter: MeterModel, span: f64, points: usize },
    Povm { channels: Vec<ChannelSpec>, quadrature: QuadratureConfig },
}

fn need<T: Copy>(v: Option<T>, section: &str, experiment: Experiment) -> Result<T, AppError> {
    v.ok_or_else(|| AppError::Config(format!("`{}` requires a [{section}] section", experiment.name())))
}

fn physics_param(e: qrev::Error) -> AppError {
    AppError::Config(format!("invalid parameter: {e}"))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, AppError> {
        toml::from_str(text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
    }

    /// Fills every defaulted field in so the echoed config is complete.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        let needs_drive = matches!(
            c.experiment,
            Experiment::Unravel | Experiment::ArrowSingle | Experiment::ArrowEnsemble | Experiment::PrepostArrow
        );
        if needs_drive && c.drive.is_none() {
            c.drive = Some(Drive { omega: 0.0 });
        }
        c
    }

    fn sim(&self) -> Result<SimConfig, AppError> {
        let channel = need(self.channel, "channel", self.experiment)?;
        let time = need(self.time, "time", self.experiment)?;
        let omega = self.drive.map_or(0.0, |d| d.omega);
        let spec = channel.spec(time.dt).map_err(physics_param)?;
        SimConfig::new(spec, omega, time.dt, time.t_total, self.seed).map_err(physics_param)
    }

    pub fn plan(&self) -> Result<Plan, AppError> {
        let e = self.experiment;
        match e {
            Experiment::Unravel | Experiment::ArrowSingle => {
                let sim = self.sim()?;
                Ok(Plan::Simulate { sim, initial: need(self.initial, "initial", e)?.state("initial")? })
            }
            Experiment::ArrowEnsemble => {
                let sim = self.sim()?;
                if !matches!(sim.channel, ChannelSpec::Fluorescence { .. }) {
                    return Err(AppError::Config("arrow-ensemble needs a fluorescence channel".into()));
                }
                let n = self
                    .n_trajectories
                    .ok_or_else(|| AppError::Config("arrow-ensemble requires n_trajectories".into()))?;
                if n < 2 {
                    return Err(AppError::Config("n_trajectories: need at least 2 for a standard error".into()));
                }
                Ok(Plan::Ensemble { sim, initial: need(self.initial, "initial", e)?.state("initial")?, n })
            }
            Experiment::PrepostArrow => {
                let sim = self.sim()?;
                let pre = need(self.initial, "initial", e)?.state("initial")?;
                let post = need(self.final_state, "final", e)?.state("final")?;
                let record = match &self.record {
                    None => None,
                    Some(r) => Some(record(&r.readouts, &sim)?),
                };
                Ok(Plan::Prepost { sim, pre, post, record })
            }
            Experiment::WeakValue => {
                let w = need(self.weak, "weak", e)?;
                let pre = need(self.initial, "initial", e)?.state("initial")?;
                let post = need(self.final_state, "final", e)?.state("final")?;
                let n = w.observable;
                let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
                if !(norm.is_finite() && (norm - 1.0).abs() < 1e-9) {
                    return Err(AppError::Config(format!("weak.observable: spin direction must be a unit vector (|n| = {norm})")));
                }
                if !(w.pointer_span.is_finite() && w.pointer_span > 0.0) || w.pointer_points < 2 {
                    return Err(AppError::Config("weak.pointer_span/pointer_points: need a positive span and ≥ 2 points".into()));
                }
                let meter = MeterModel::new(w.k, w.tau, w.delta).map_err(physics_param)?;
                Ok(Plan::Weak {
                    observable: Operator2::spin(n),
                    pre,
                    post,
                    meter,
                    span: w.pointer_span,
                    points: w.pointer_points,
                })
            }
            Experiment::PovmCheck => {
                let p = self.povm.clone().ok_or_else(|| AppError::Config("`povm-check` requires a [povm] section".into()))?;
                if p.channels.is_empty() {
                    return Err(AppError::Config("povm.channels: list at least one channel".into()));
                }
                let channels = p.channels.iter().map(|c| c.spec(p.dt)).collect::<qrev::Result<Vec<_>>>().map_err(physics_param)?;
                let quadrature = p.quadrature.library();
                quadrature.validate().map_err(physics_param)?;
                Ok(Plan::Povm { channels, quadrature })
            }
        }
    }
}

fn record(values: &[ReadoutValue], sim: &SimConfig) -> Result<ReadoutRecord, AppError> {
    if values.len() != sim.steps() {
        return Err(AppError::Config(format!(
            "record.readouts: {} readouts for {} steps of t_total/dt",
            values.len(),
            sim.steps()
        )));
    }
    let bad = |k: usize, what: &str| AppError::Config(format!("record.readouts[{k}]: expected {what}"));
    let readouts = values
        .iter()
        .enumerate()
        .map(|(k, v)| match (sim.channel, *v) {
            (ChannelSpec::Dichotomous { .. }, ReadoutValue::Integer(b @ 0..=1)) => Ok(Readout::Binary(b as u8)),
            (ChannelSpec::Dichotomous { .. }, _) => Err(bad(k, "0 or 1")),
            (ChannelSpec::Gaussian { .. }, ReadoutValue::Real(y)) => Ok(Readout::Continuous(y)),
            (ChannelSpec::Gaussian { .. }, ReadoutValue::Integer(y)) => Ok(Readout::Continuous(y as f64)),
            (ChannelSpec::Gaussian { .. }, _) => Err(bad(k, "a meter reading")),
            (ChannelSpec::Fluorescence { .. }, ReadoutValue::Pair([i, q])) => Ok(Readout::Heterodyne { i, q }),
            (ChannelSpec::Fluorescence { .. }, _) => Err(bad(k, "an [I, Q] pair")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if readouts.iter().any(|r| match r {
        Readout::Continuous(y) => !y.is_finite(),
        Readout::Heterodyne { i, q } => !(i.is_finite() && q.is_finite()),
        Readout::Binary(_) => false,
    }) {
        return Err(AppError::Config("record.readouts: readouts must be finite".into()));
    }
    Ok(ReadoutRecord::new(sim.dt, readouts))
}
