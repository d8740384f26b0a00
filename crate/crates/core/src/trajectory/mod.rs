//! Quantum trajectories: Kraus updates with a Rabi drive, readout synthesis,
//! and unraveling a record backward from the time-reversed final state.

mod ensemble;
mod sde;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::channels::{forward_operator, ChannelSpec, Readout};
use crate::error::{Error, Result};
use crate::qubit::{BlochVector, DensityMatrix, Operator2, PureState};
use crate::precise::PreciseDensity;

pub use ensemble::{fold_ensemble, EnsembleMoments, ENSEMBLE_CHUNK};
pub use sde::{bloch_drift, bloch_sde_step};

const MIN_TRACE: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub channel: ChannelSpec,
    /// Rabi frequency of the drive `H = (Ω/2)σ_y`, with `σ_y` taken in the
    /// Bloch frame so that `ẋ = Ωz`, `ż = −Ωx`.
    pub omega: f64,
    pub dt: f64,
    pub t_total: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(channel: ChannelSpec, omega: f64, dt: f64, t_total: f64, seed: u64) -> Result<Self> {
        let cfg = Self { channel, omega, dt, t_total, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fluorescence with the channel step tied to `dt`.
    pub fn fluorescence(gamma1: f64, omega: f64, dt: f64, t_total: f64, seed: u64) -> Result<Self> {
        Self::new(ChannelSpec::fluorescence(gamma1, dt)?, omega, dt, t_total, seed)
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", "step must be positive"));
        }
        if !(self.t_total.is_finite() && self.t_total > 0.0) {
            return Err(Error::invalid("t_total", "duration must be positive"));
        }
        if !self.omega.is_finite() {
            return Err(Error::invalid("omega", "Rabi frequency must be finite"));
        }
        let n = (self.t_total / self.dt).round();
        if n < 1.0 || (n * self.dt - self.t_total).abs() > 1e-9 * self.t_total {
            return Err(Error::invalid("dt", "t_total must be an integer multiple of dt"));
        }
        if let ChannelSpec::Fluorescence { gamma1, dt } = self.channel {
            if (dt - self.dt).abs() > 1e-15 * self.dt {
                return Err(Error::invalid("dt", "fluorescence channel step differs from the simulation step"));
            }
            if gamma1 * self.dt > 0.1 {
                log::warn!("γ₁·dt = {} exceeds 0.1; the small-step expansion is poor", gamma1 * self.dt);
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_total / self.dt).round() as usize
    }

    pub fn drive(&self) -> Operator2 {
        drive_unitary(self.omega, self.dt)
    }
}

/// `exp(−i(Ω/2)σ_y dt)` in the Bloch frame: `[[c, s], [−s, c]]` with
/// `c = cos(Ωdt/2)`, `s = sin(Ωdt/2)`.
pub fn drive_unitary(omega: f64, dt: f64) -> Operator2 {
    let (s, c) = (0.5 * omega * dt).sin_cos();
    Operator2::real(c, s, -s, c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn label(self) -> &'static str {
        match self {
            Direction::Forward => "fwd",
            Direction::Backward => "bwd",
        }
    }
}

/// Where a synthesized record's randomness came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngProvenance {
    pub seed: u64,
    pub stream: u64,
}

/// Time-ordered readouts, independent of any state history.
#[derive(Clone, Debug, PartialEq)]
pub struct ReadoutRecord {
    pub dt: f64,
    pub readouts: Vec<Readout>,
    pub provenance: Option<RngProvenance>,
}

impl ReadoutRecord {
    pub fn new(dt: f64, readouts: Vec<Readout>) -> Self {
        Self { dt, readouts, provenance: None }
    }

    pub fn len(&self) -> usize {
        self.readouts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.readouts.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// `states[n]` is the state at `times[n]`; one more entry than `readouts`.
    pub states: Vec<BlochVector>,
    /// `readouts[n]` drives the update from `states[n]` to `states[n + 1]`.
    pub readouts: Vec<Readout>,
    pub direction: Direction,
    pub config: SimConfig,
    pub provenance: Option<RngProvenance>,
    /// Full final density matrix, kept so that unraveling does not have to
    /// round-trip through Bloch coordinates.
    pub final_state: DensityMatrix,
    /// The same state at double-double precision; retrodiction starts here.
    precise_final: PreciseDensity,
}

impl TrajectoryRecord {
    pub fn record(&self) -> ReadoutRecord {
        ReadoutRecord { dt: self.config.dt, readouts: self.readouts.clone(), provenance: self.provenance }
    }

    pub fn steps(&self) -> usize {
        self.readouts.len()
    }
}

fn step_with(rho: &DensityMatrix, op: &Operator2, step: usize) -> Result<DensityMatrix> {
    let out = *op * *rho.matrix() * op.adjoint();
    let tr = out.trace().re;
    if !(tr >= MIN_TRACE) {
        return Err(Error::ImpossibleReadout { step, trace: tr });
    }
    Ok(DensityMatrix::from_unnormalized(out))
}

fn precise_step(rho: &PreciseDensity, op: &Operator2, step: usize) -> Result<PreciseDensity> {
    let (out, tr) = rho.evolve(op);
    if !(tr >= MIN_TRACE) {
        return Err(Error::ImpossibleReadout { step, trace: tr });
    }
    Ok(out)
}

/// Step operator `M_F(r)·U_dt`: drive first, then measure.
pub fn step_operator(r: &Readout, cfg: &SimConfig) -> Result<Operator2> {
    Ok(forward_operator(&cfg.channel, r)? * cfg.drive())
}

/// `ρ' = M U ρ U† M† / tr(·)`.
pub fn forward_step(rho: &DensityMatrix, r: &Readout, cfg: &SimConfig) -> Result<DensityMatrix> {
    step_with(rho, &step_operator(r, cfg)?, 0)
}

/// `ρ' = U† M† ρ M U / tr(·)`, one step of backward evolution.
pub fn retrodict_step(rho: &DensityMatrix, r: &Readout, cfg: &SimConfig) -> Result<DensityMatrix> {
    step_with(rho, &step_operator(r, cfg)?.adjoint(), 0)
}

/// Draws the readout for the next step given the state just before the
/// measurement (after the drive).
pub fn sample_readout<R: Rng + ?Sized>(rho: &DensityMatrix, cfg: &SimConfig, rng: &mut R) -> Readout {
    let r = rho.matrix();
    let p0 = r.m[0][0].re.clamp(0.0, 1.0);
    match cfg.channel {
        ChannelSpec::Gaussian { k, tau, delta, .. } => {
            let centre = if rng.random::<f64>() < p0 { 0.5 * k * tau } else { -0.5 * k * tau };
            let z: f64 = rng.sample(StandardNormal);
            Readout::Continuous(centre + delta * z)
        }
        ChannelSpec::Dichotomous { gamma } => {
            let prob0 = gamma * p0 + (1.0 - gamma) * (1.0 - p0);
            Readout::Binary(u8::from(rng.random::<f64>() >= prob0))
        }
        ChannelSpec::Fluorescence { gamma1, .. } => {
            let b = rho.bloch();
            let amp = (gamma1 / 2.0).sqrt();
            let sd = 1.0 / cfg.dt.sqrt();
            let zx: f64 = rng.sample(StandardNormal);
            let zy: f64 = rng.sample(StandardNormal);
            Readout::Heterodyne { i: amp * b.x + sd * zx, q: amp * b.y + sd * zy }
        }
    }
}

/// Deterministic generator for trajectory `stream` of a run seeded by `seed`.
pub fn trajectory_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn times(n: usize, dt: f64) -> Vec<f64> {
    (0..=n).map(|j| j as f64 * dt).collect()
}

/// Simulates one trajectory from `psi0` with synthesized readouts (stream 0).
pub fn simulate_forward(psi0: &PureState, cfg: &SimConfig) -> Result<TrajectoryRecord> {
    simulate_forward_stream(&psi0.density(), cfg, 0)
}

/// Simulates trajectory number `stream` of the run seeded by `cfg.seed`.
pub fn simulate_forward_stream(rho0: &DensityMatrix, cfg: &SimConfig, stream: u64) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    let n = cfg.steps();
    let u = cfg.drive();
    let mut rng = trajectory_rng(cfg.seed, stream);
    let mut rho = PreciseDensity::from_density(rho0);
    let mut states = Vec::with_capacity(n + 1);
    let mut readouts = Vec::with_capacity(n);
    states.push(rho0.bloch());
    for step in 0..n {
        let (driven, _) = rho.evolve(&u);
        let r = sample_readout(&driven.to_density(), cfg, &mut rng);
        // The combined operator is what retrodiction will invert, so the
        // forward pass must use exactly the same one.
        rho = precise_step(&rho, &step_operator(&r, cfg)?, step)?;
        states.push(rho.to_density().bloch());
        readouts.push(r);
    }
    Ok(TrajectoryRecord {
        times: times(n, cfg.dt),
        states,
        readouts,
        direction: Direction::Forward,
        config: *cfg,
        provenance: Some(RngProvenance { seed: cfg.seed, stream }),
        final_state: rho.to_density(),
        precise_final: rho,
    })
}

/// Propagates `rho0` through a given readout sequence.
pub fn replay_forward(rho0: &DensityMatrix, record: &ReadoutRecord, cfg: &SimConfig) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    if (record.dt - cfg.dt).abs() > 1e-15 * cfg.dt {
        return Err(Error::invalid("dt", "record step differs from the simulation step"));
    }
    let mut rho = PreciseDensity::from_density(rho0);
    let mut states = Vec::with_capacity(record.len() + 1);
    states.push(rho0.bloch());
    for (step, r) in record.readouts.iter().enumerate() {
        rho = precise_step(&rho, &step_operator(r, cfg)?, step)?;
        states.push(rho.to_density().bloch());
    }
    Ok(TrajectoryRecord {
        times: times(record.len(), cfg.dt),
        states,
        readouts: record.readouts.clone(),
        direction: Direction::Forward,
        config: *cfg,
        provenance: record.provenance,
        final_state: rho.to_density(),
        precise_final: rho,
    })
}

/// Evolves `Θρ_final` backward through the record in reverse order.
///
/// Backward state `j` reproduces the time reverse of forward state `N − j`,
/// so the backward path is the Bloch inversion of the forward path played in
/// reverse.
pub fn unravel_backward(fwd: &TrajectoryRecord) -> Result<TrajectoryRecord> {
    let cfg = &fwd.config;
    let n = fwd.readouts.len();
    let mut rho = fwd.precise_final.time_reverse();
    let mut states = Vec::with_capacity(n + 1);
    let mut readouts = Vec::with_capacity(n);
    states.push(rho.to_density().bloch());
    for j in 0..n {
        let r = fwd.readouts[n - 1 - j];
        rho = precise_step(&rho, &step_operator(&r, cfg)?.adjoint(), j)?;
        states.push(rho.to_density().bloch());
        readouts.push(r);
    }
    Ok(TrajectoryRecord {
        times: times(n, cfg.dt),
        states,
        readouts,
        direction: Direction::Backward,
        config: *cfg,
        provenance: fwd.provenance,
        final_state: rho.to_density(),
        precise_final: rho,
    })
}

/// `max_j |b_j + f_{N−j}|` over Bloch components.
pub fn mirror_deviation(fwd: &TrajectoryRecord, bwd: &TrajectoryRecord) -> f64 {
    let n = fwd.states.len();
    bwd.states
        .iter()
        .enumerate()
        .map(|(j, b)| {
            let f = fwd.states[n - 1 - j];
            (b.x + f.x).abs().max((b.y + f.y).abs()).max((b.z + f.z).abs())
        })
        .fold(0.0, f64::max)
}
