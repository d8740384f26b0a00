use super::ArrowStats;
use crate::channels::{ChannelSpec, Readout};
use crate::error::{Error, Result};
use crate::qubit::DensityMatrix;
use crate::trajectory::{fold_ensemble, EnsembleMoments, SimConfig, TrajectoryRecord};

fn gamma1_of(cfg: &SimConfig, what: &'static str) -> Result<f64> {
    match cfg.channel {
        ChannelSpec::Fluorescence { gamma1, .. } => Ok(gamma1),
        _ => Err(Error::RequiresFluorescence(what)),
    }
}

fn quadratures(r: &Readout) -> Result<(f64, f64)> {
    match *r {
        Readout::Heterodyne { i, q } => Ok((i, q)),
        other => Err(Error::ReadoutMismatch { channel: "fluorescence", readout: other.to_string() }),
    }
}

/// Closed-form arrow for a heterodyne fluorescence trajectory,
///
/// `ln R = 2 Σ dt [c I x̄ + c Q ȳ − γ₁ z̄ / 2]`, `c = √(γ₁/2)`,
///
/// with Stratonovich midpoints `x̄ = (x_n + x_{n+1})/2`.
pub fn fluorescence_log_arrow(traj: &TrajectoryRecord) -> Result<ArrowStats> {
    let g = gamma1_of(&traj.config, "fluorescence_log_arrow")?;
    let c = (g / 2.0).sqrt();
    let dt = traj.config.dt;
    let mut terms = Vec::with_capacity(traj.readouts.len());
    for (n, r) in traj.readouts.iter().enumerate() {
        let (i, q) = quadratures(r)?;
        let (a, b) = (traj.states[n], traj.states[n + 1]);
        let xm = 0.5 * (a.x + b.x);
        let ym = 0.5 * (a.y + b.y);
        let zm = 0.5 * (a.z + b.z);
        terms.push(2.0 * dt * (c * i * xm + c * q * ym - 0.5 * g * zm));
    }
    let log_r = terms.iter().sum();
    Ok(ArrowStats { per_term: Some(terms), ..ArrowStats::from_log_r(log_r) })
}

/// Log path weights of the record under forward and backward evolution,
/// relative to the common Gaussian reference measure `e^{−(I²+Q²)dt/2}`,
/// which cancels in the ratio and is therefore never formed.
///
/// Forward: `Σ dt [c I x̄ + c Q ȳ − γ₁(1 + z̄)/2]`. The backward path visits
/// the Bloch-inverted states, so its weight flips the sign of `x̄, ȳ, z̄`.
pub fn fluorescence_path_log_weights(traj: &TrajectoryRecord) -> Result<(f64, f64)> {
    let g = gamma1_of(&traj.config, "fluorescence_path_log_weights")?;
    let c = (g / 2.0).sqrt();
    let dt = traj.config.dt;
    let (mut wf, mut wb) = (0.0, 0.0);
    for (n, r) in traj.readouts.iter().enumerate() {
        let (i, q) = quadratures(r)?;
        let (a, b) = (traj.states[n], traj.states[n + 1]);
        let (xm, ym, zm) = (0.5 * (a.x + b.x), 0.5 * (a.y + b.y), 0.5 * (a.z + b.z));
        wf += dt * (c * i * xm + c * q * ym - 0.5 * g * (1.0 + zm));
        wb += dt * (-c * i * xm - c * q * ym - 0.5 * g * (1.0 - zm));
    }
    Ok((wf, wb))
}

fn trapezoid(times: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    times.windows(2).enumerate().map(|(k, w)| 0.5 * (w[1] - w[0]) * (f(k) + f(k + 1))).sum()
}

/// `γ₁ ∫ dt (1 + (⟨x²⟩ + ⟨y²⟩)/2)` from per-slice ensemble moments.
///
/// The `z`-dependent pieces of the drift and of the readout correlation
/// cancel, so the expected arrow depends only on the transverse moments.
pub fn mean_log_arrow_from_moments(m: &EnsembleMoments, gamma1: f64) -> Result<f64> {
    if m.count == 0 || m.times.len() < 2 {
        return Err(Error::BadEnsemble);
    }
    let (x2, y2) = (m.mean_x2(), m.mean_y2());
    Ok(gamma1 * trapezoid(&m.times, |k| 1.0 + 0.5 * (x2[k] + y2[k])))
}

/// Ensemble-averaged fluorescence arrow from stored trajectories.
pub fn mean_log_arrow_analytic(ensemble: &[TrajectoryRecord]) -> Result<f64> {
    let first = ensemble.first().ok_or(Error::BadEnsemble)?;
    let g = gamma1_of(&first.config, "mean_log_arrow_analytic")?;
    mean_log_arrow_from_moments(&EnsembleMoments::from_records(ensemble)?, g)
}

/// `(1/τ) ∫ dt (1 + ⟨z²⟩)`, the expected arrow for weak continuous `σ_z`
/// monitoring with characteristic measurement time `τ`. Reference value
/// only: the moments must come from that kind of measurement.
pub fn dispersive_mean_log_arrow(m: &EnsembleMoments, tau: f64) -> Result<f64> {
    if m.count == 0 || m.times.len() < 2 || !(tau > 0.0) {
        return Err(Error::BadEnsemble);
    }
    let z2 = m.mean_z2();
    Ok(trapezoid(&m.times, |k| 1.0 + z2[k]) / tau)
}

/// Monte Carlo and closed-form ensemble arrow.
#[derive(Clone, Debug)]
pub struct EnsembleArrow {
    pub log_r: Vec<f64>,
    pub mean_mc: f64,
    /// Standard error of `mean_mc`.
    pub stderr: f64,
    pub mean_analytic: f64,
    pub moments: EnsembleMoments,
}

/// Runs `n` fluorescence trajectories from `rho0` and compares the sample
/// mean of the arrow with the moment formula.
pub fn fluorescence_ensemble_arrow(rho0: &DensityMatrix, cfg: &SimConfig, n: usize) -> Result<EnsembleArrow> {
    let g = gamma1_of(cfg, "fluorescence_ensemble_arrow")?;
    if n < 2 {
        return Err(Error::invalid("n_trajectories", "need at least two trajectories"));
    }
    let (log_r, moments) = fold_ensemble(
        rho0,
        cfg,
        n,
        || (Vec::new(), EnsembleMoments::new()),
        |(mut l, mut m), tr| {
            l.push(fluorescence_log_arrow(tr)?.log_r);
            m.push(tr)?;
            Ok((l, m))
        },
        |(mut la, ma), (lb, mb)| {
            la.extend(lb);
            (la, ma.merge(mb))
        },
    )?;
    let nf = n as f64;
    let mean = log_r.iter().sum::<f64>() / nf;
    let var = log_r.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let mean_analytic = mean_log_arrow_from_moments(&moments, g)?;
    Ok(EnsembleArrow { log_r, mean_mc: mean, stderr: (var / nf).sqrt(), mean_analytic, moments })
}
