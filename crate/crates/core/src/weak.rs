//! Weak values and their behavior under time reversal, together with the
//! Gaussian meter model that turns them into pointer shifts.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::qubit::{time_reverse_operator, time_reverse_state, Operator2, PureState, C64};

const ORTHOGONAL: f64 = 1e-12;
const ILL_CONDITIONED: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeakValue {
    /// `⟨f|S|s⟩ / ⟨f|s⟩`.
    pub value: C64,
    /// `⟨f|s⟩`.
    pub overlap: C64,
    /// Set when `|S_w|` exceeds `1e6`, where the weak-coupling picture is
    /// meaningless in practice.
    pub ill_conditioned: bool,
}

impl WeakValue {
    /// Complex pointer shift `kτ·S_w`.
    pub fn pointer_shift(&self, meter: &MeterModel) -> C64 {
        self.value * meter.strength()
    }

    /// Mean pointer position `kτ·Re S_w`.
    pub fn pointer_mean(&self, meter: &MeterModel) -> f64 {
        meter.strength() * self.value.re
    }
}

pub fn weak_value(s: &Operator2, psi_s: &PureState, psi_f: &PureState) -> Result<WeakValue> {
    let overlap = psi_f.inner(psi_s);
    if overlap.norm() < ORTHOGONAL {
        return Err(Error::OrthogonalPostselection { overlap: overlap.norm() });
    }
    let value = s.sandwich(psi_f.amplitudes(), psi_s.amplitudes()) / overlap;
    Ok(WeakValue { value, overlap, ill_conditioned: value.norm() > ILL_CONDITIONED })
}

/// Weak value of `S` with pre-selection `Θψ_s` and post-selection `Θψ_f`,
/// computed directly and checked against `−S_w*`.
///
/// The identity requires `ΘSΘ⁻¹ = −S`, which holds for spin components
/// (traceless Hermitian `S`) but not, e.g., for the identity.
pub fn time_reversed_weak_value(s: &Operator2, psi_s: &PureState, psi_f: &PureState) -> Result<C64> {
    let odd = time_reverse_operator(s).max_diff(&-*s);
    if odd > 1e-12 * s.max_abs().max(1.0) {
        return Err(Error::NotTimeOdd { deviation: odd });
    }
    let fwd = weak_value(s, psi_s, psi_f)?;
    let rev = weak_value(s, &time_reverse_state(psi_s), &time_reverse_state(psi_f))?;
    let expected = -fwd.value.conj();
    if (rev.value - expected).norm() > 1e-12 * fwd.value.norm().max(1.0) {
        return Err(Error::ReversalMismatch { direct: rev.value.to_string(), expected: expected.to_string() });
    }
    Ok(rev.value)
}

/// Gaussian pointer of width `δ` coupled with strength `kτ` to `σ_z/2`.
/// `|0⟩` shifts the pointer to `+kτ/2`, `|1⟩` to `−kτ/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeterModel {
    pub k: f64,
    pub tau: f64,
    pub delta: f64,
}

/// Which meter variable the pointer wavefunction is written in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointerBasis {
    Position,
    Momentum,
}

impl MeterModel {
    pub fn new(k: f64, tau: f64, delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::invalid("delta", "meter width must be positive"));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid("tau", "interaction time must be positive"));
        }
        if !k.is_finite() {
            return Err(Error::invalid("k", "coupling must be finite"));
        }
        Ok(Self { k, tau, delta })
    }

    pub fn strength(&self) -> f64 {
        self.k * self.tau
    }

    /// `⟨ψ₀|ψ₁⟩ = exp(−(kτ)²/(8δ²))` for the two pointer states.
    pub fn overlap(&self) -> f64 {
        (-self.strength().powi(2) / (8.0 * self.delta * self.delta)).exp()
    }

    fn gaussian(&self, u: C64) -> C64 {
        (-(u * u) / (4.0 * self.delta * self.delta)).exp() * (2.0 * PI * self.delta * self.delta).powf(-0.25)
    }

    /// Post-selected pointer amplitude in the weak-coupling limit,
    /// `⟨f|s⟩ G(v − kτS_w)`.
    pub fn pointer_amplitude(&self, w: &WeakValue, v: f64) -> C64 {
        w.overlap * self.gaussian(v - self.strength() * w.value)
    }

    /// Pointer amplitude for the time-reversed protocol, given the reversed
    /// weak value `S̃_w`. The reversed pointer is the complex conjugate of the
    /// forward one, evaluated at `−v` in the momentum basis.
    pub fn reversed_pointer_amplitude(&self, basis: PointerBasis, w: &WeakValue, reversed: C64, v: f64) -> C64 {
        let ov = w.overlap.conj();
        match basis {
            PointerBasis::Position => ov * self.gaussian(v + self.strength() * reversed),
            PointerBasis::Momentum => ov * self.gaussian(v - self.strength() * reversed),
        }
    }

    /// `|c₀ψ₀ + c₁ψ₁|²` integrated over the pointer, for branch amplitudes `c`.
    fn branch_probability(&self, c0: C64, c1: C64) -> f64 {
        c0.norm_sqr() + c1.norm_sqr() + 2.0 * (c0.conj() * c1).re * self.overlap()
    }
}

/// Post-selection probabilities of the forward, backward and reverse
/// protocols for a meter of arbitrary strength.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolProbabilities {
    pub forward: f64,
    pub backward: f64,
    pub reverse: f64,
}

/// Each protocol prepares one state, couples the meter, and post-selects
/// another. Forward: `ψ_s → ψ_f`. Backward: `Θψ_f → Θψ_s` with the same
/// coupling. Reverse: `Θψ_s → Θψ_f` with the coupling sign flipped, which
/// swaps the pointer states but leaves their overlap unchanged.
pub fn weak_protocol_probabilities(psi_s: &PureState, psi_f: &PureState, meter: &MeterModel) -> ProtocolProbabilities {
    let branches = |init: &PureState, post: &PureState| {
        (post.a().conj() * init.a(), post.b().conj() * init.b())
    };
    let (f0, f1) = branches(psi_s, psi_f);
    let (ts, tf) = (time_reverse_state(psi_s), time_reverse_state(psi_f));
    let (b0, b1) = branches(&tf, &ts);
    let (r0, r1) = branches(&ts, &tf);
    ProtocolProbabilities {
        forward: meter.branch_probability(f0, f1),
        backward: meter.branch_probability(b0, b1),
        reverse: meter.branch_probability(r1, r0),
    }
}
