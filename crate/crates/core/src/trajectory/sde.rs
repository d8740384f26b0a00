//! Stratonovich Bloch equations for heterodyne-monitored fluorescence.
//!
//! These serve as an independent check on the Kraus update: both must agree
//! as `dt → 0`.

use super::SimConfig;
use crate::channels::ChannelSpec;
use crate::error::{Error, Result};
use crate::qubit::BlochVector;

/// Right-hand side of the Bloch equations with readouts `I`, `Q` held fixed.
///
/// ```text
/// ẋ = Ωz + (γ₁/2)xz + c[I(1 − x² + z) − Qxy]
/// ẏ =      (γ₁/2)yz + c[Q(1 − y² + z) − Ixy]
/// ż = −Ωx + (γ₁/2)(z² − 1) − c[I(x + xz) + Q(y + yz)]
/// ```
/// with `c = √(γ₁/2)`.
pub fn bloch_drift(b: BlochVector, i: f64, q: f64, gamma1: f64, omega: f64) -> BlochVector {
    let BlochVector { x, y, z } = b;
    let c = (gamma1 / 2.0).sqrt();
    let g = gamma1 / 2.0;
    BlochVector {
        x: omega * z + g * x * z + c * (i * (1.0 - x * x + z) - q * x * y),
        y: g * y * z + c * (q * (1.0 - y * y + z) - i * x * y),
        z: -omega * x + g * (z * z - 1.0) - c * (i * (x + x * z) + q * (y + y * z)),
    }
}

/// One Heun (predictor–corrector) step, which converges to the Stratonovich
/// solution for a piecewise-constant record.
pub fn bloch_sde_step(b: BlochVector, i: f64, q: f64, cfg: &SimConfig) -> Result<BlochVector> {
    let ChannelSpec::Fluorescence { gamma1, .. } = cfg.channel else {
        return Err(Error::RequiresFluorescence("bloch_sde_step"));
    };
    let dt = cfg.dt;
    let k1 = bloch_drift(b, i, q, gamma1, cfg.omega);
    let p = BlochVector::new(b.x + dt * k1.x, b.y + dt * k1.y, b.z + dt * k1.z);
    let k2 = bloch_drift(p, i, q, gamma1, cfg.omega);
    Ok(BlochVector::new(
        b.x + 0.5 * dt * (k1.x + k2.x),
        b.y + 0.5 * dt * (k1.y + k2.y),
        b.z + 0.5 * dt * (k1.z + k2.z),
    ))
}
