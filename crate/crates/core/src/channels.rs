//! Forward measurement operators `M_F(r)`, their time-reversed partners
//! `M̃_R(r)`, and completeness checks for both families.
//!
//! Every reversed operator here equals `Θ M_F(r) Θ⁻¹`, which for a 2×2 matrix
//! is the cofactor form `det(M†)(M†)⁻¹`; the channel-specific formulas are
//! kept because they remain valid when `M_F` is singular (projective limits).

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::qubit::{c, DensityMatrix, Operator2};

/// Which quadrature of the meter the Gaussian readout refers to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MeterQuadrature {
    #[default]
    Position,
    Momentum,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChannelSpec {
    /// Pointer coupled to `S = σ_z/2` with strength `kτ` and meter width `δ`.
    /// `|0⟩` carries `s = +½`.
    Gaussian { k: f64, tau: f64, delta: f64, quadrature: MeterQuadrature },
    /// Binary outcome with `M(0) = diag(√γ, √(1−γ))`.
    Dichotomous { gamma: f64 },
    /// Heterodyne-detected spontaneous emission over one step of length `dt`.
    Fluorescence { gamma1: f64, dt: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Readout {
    /// Meter position `ȳ` (or momentum `p̄`).
    Continuous(f64),
    /// Dichotomous outcome, 0 or 1.
    Binary(u8),
    /// Normalized heterodyne quadratures.
    Heterodyne { i: f64, q: f64 },
}

impl fmt::Display for Readout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Readout::Continuous(y) => write!(f, "continuous({y})"),
            Readout::Binary(b) => write!(f, "binary({b})"),
            Readout::Heterodyne { i, q } => write!(f, "heterodyne(I={i}, Q={q})"),
        }
    }
}

impl ChannelSpec {
    pub fn gaussian(k: f64, tau: f64, delta: f64) -> Result<Self> {
        let s = ChannelSpec::Gaussian { k, tau, delta, quadrature: MeterQuadrature::Position };
        s.validate()?;
        Ok(s)
    }

    pub fn dichotomous(gamma: f64) -> Result<Self> {
        let s = ChannelSpec::Dichotomous { gamma };
        s.validate()?;
        Ok(s)
    }

    pub fn fluorescence(gamma1: f64, dt: f64) -> Result<Self> {
        let s = ChannelSpec::Fluorescence { gamma1, dt };
        s.validate()?;
        Ok(s)
    }

    pub fn name(&self) -> &'static str {
        match self {
            ChannelSpec::Gaussian { .. } => "gaussian",
            ChannelSpec::Dichotomous { .. } => "dichotomous",
            ChannelSpec::Fluorescence { .. } => "fluorescence",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ChannelSpec::Gaussian { k, tau, delta, .. } => {
                if !(delta.is_finite() && delta > 0.0) {
                    return Err(Error::invalid("delta", "meter width must be positive"));
                }
                if !(tau.is_finite() && tau > 0.0) {
                    return Err(Error::invalid("tau", "interaction time must be positive"));
                }
                if !k.is_finite() {
                    return Err(Error::invalid("k", "coupling must be finite"));
                }
            }
            ChannelSpec::Dichotomous { gamma } => {
                if !(0.0..=1.0).contains(&gamma) {
                    return Err(Error::invalid("gamma", "must lie in [0, 1]"));
                }
            }
            ChannelSpec::Fluorescence { gamma1, dt } => {
                if !(gamma1.is_finite() && gamma1 >= 0.0) {
                    return Err(Error::invalid("gamma1", "decay rate must be non-negative"));
                }
                if !(dt.is_finite() && dt > 0.0) {
                    return Err(Error::invalid("dt", "step must be positive"));
                }
                if gamma1 * dt > 1.0 {
                    return Err(Error::invalid("gamma1", "γ₁·dt must not exceed 1"));
                }
            }
        }
        Ok(())
    }

    fn mismatch(&self, r: &Readout) -> Error {
        Error::ReadoutMismatch { channel: self.name(), readout: r.to_string() }
    }
}

fn gaussian_operator(k: f64, tau: f64, delta: f64, y: f64) -> Operator2 {
    let norm = (2.0 * PI * delta * delta).powf(-0.25);
    let g = |u: f64| (-u * u / (4.0 * delta * delta)).exp();
    let h = 0.5 * k * tau;
    Operator2::diag((norm * g(y - h)).into(), (norm * g(y + h)).into())
}

fn dichotomous_operator(gamma: f64, outcome: u8) -> Operator2 {
    let (p, q) = (gamma.sqrt(), (1.0 - gamma).sqrt());
    if outcome == 0 {
        Operator2::diag(p.into(), q.into())
    } else {
        Operator2::diag(q.into(), p.into())
    }
}

/// `α = (I − iQ)√(dt/2)`.
pub fn heterodyne_alpha(i: f64, q: f64, dt: f64) -> num_complex::Complex64 {
    c(i, -q) * (dt / 2.0).sqrt()
}

fn fluorescence_forward(gamma1: f64, dt: f64, i: f64, q: f64) -> Operator2 {
    let eps = gamma1 * dt;
    let alpha = heterodyne_alpha(i, q, dt);
    fluorescence_forward_alpha(eps, alpha)
}

fn fluorescence_forward_alpha(eps: f64, alpha: num_complex::Complex64) -> Operator2 {
    let pre = (-alpha.norm_sqr() / 2.0).exp();
    Operator2::new(c(1.0, 0.0), alpha.conj() * eps.sqrt(), c(0.0, 0.0), c((1.0 - eps).sqrt(), 0.0)).scale_re(pre)
}

fn fluorescence_reversed_alpha(eps: f64, alpha: num_complex::Complex64) -> Operator2 {
    let pre = (-alpha.norm_sqr() / 2.0).exp();
    Operator2::new(c((1.0 - eps).sqrt(), 0.0), c(0.0, 0.0), -alpha * eps.sqrt(), c(1.0, 0.0)).scale_re(pre)
}

/// Forward measurement operator `M_F(r)`.
pub fn forward_operator(spec: &ChannelSpec, r: &Readout) -> Result<Operator2> {
    spec.validate()?;
    match (*spec, *r) {
        (ChannelSpec::Gaussian { k, tau, delta, .. }, Readout::Continuous(y)) if y.is_finite() => {
            Ok(gaussian_operator(k, tau, delta, y))
        }
        (ChannelSpec::Dichotomous { gamma }, Readout::Binary(b)) if b <= 1 => Ok(dichotomous_operator(gamma, b)),
        (ChannelSpec::Fluorescence { gamma1, dt }, Readout::Heterodyne { i, q }) if i.is_finite() && q.is_finite() => {
            Ok(fluorescence_forward(gamma1, dt, i, q))
        }
        _ => Err(spec.mismatch(r)),
    }
}

/// Time-reversed operator `M̃_R(r)` for the same readout label.
///
/// Gaussian: `M_F(−ȳ)`; dichotomous: the other outcome's operator;
/// fluorescence: `e^{−|α|²/2}[[√(1−ε), 0], [−α√ε, 1]]`.
pub fn reversed_operator(spec: &ChannelSpec, r: &Readout) -> Result<Operator2> {
    spec.validate()?;
    match (*spec, *r) {
        (ChannelSpec::Gaussian { k, tau, delta, .. }, Readout::Continuous(y)) if y.is_finite() => {
            Ok(gaussian_operator(k, tau, delta, -y))
        }
        (ChannelSpec::Dichotomous { gamma }, Readout::Binary(b)) if b <= 1 => {
            Ok(dichotomous_operator(gamma, 1 - b))
        }
        (ChannelSpec::Fluorescence { gamma1, dt }, Readout::Heterodyne { i, q }) if i.is_finite() && q.is_finite() => {
            Ok(fluorescence_reversed_alpha(gamma1 * dt, heterodyne_alpha(i, q, dt)))
        }
        _ => Err(spec.mismatch(r)),
    }
}

/// `det(M†)·(M†)⁻¹`, the reversal of an arbitrary invertible 2×2 operator.
pub fn reverse_rank2(m: &Operator2) -> Result<Operator2> {
    let det = m.det();
    let scale = m.max_abs();
    if !(det.norm() >= 1e-14 * scale * scale) || scale == 0.0 {
        return Err(Error::RankDeficient { det: det.norm() });
    }
    let a = &m.m;
    Ok(Operator2::new(a[1][1].conj(), -a[1][0].conj(), -a[0][1].conj(), a[0][0].conj()))
}

/// Outcome probability (or density, for continuous readouts) `tr[M ρ M†]`.
pub fn outcome_probability(spec: &ChannelSpec, rho: &DensityMatrix, r: &Readout) -> Result<f64> {
    let m = forward_operator(spec, r)?;
    Ok((m * *rho.matrix() * m.adjoint()).trace().re)
}

/// Integration settings for the completeness checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureConfig {
    /// Absolute half-width `L` of the Gaussian readout window; `None` uses
    /// `10·(δ + |k|τ)`.
    pub gaussian_half_width: Option<f64>,
    pub gaussian_points: usize,
    /// Radial cutoff in the α plane.
    pub fluorescence_radius: f64,
    pub radial_cells: usize,
    pub angular_cells: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            gaussian_half_width: None,
            gaussian_points: 4001,
            fluorescence_radius: 6.0,
            radial_cells: 400,
            angular_cells: 400,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.gaussian_half_width {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::invalid("quadrature", "Gaussian half-width must be positive"));
            }
        }
        if self.gaussian_points < 2 || self.radial_cells == 0 || self.angular_cells == 0 {
            return Err(Error::invalid("quadrature", "grid resolution must be positive"));
        }
        if !(self.fluorescence_radius.is_finite() && self.fluorescence_radius > 0.0) {
            return Err(Error::invalid("quadrature", "radial cutoff must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Family {
    Forward,
    Reversed,
}

/// `‖Σ_r M_F†M_F − 𝕀‖_max` (sum or integral over outcomes).
pub fn completeness_residual(spec: &ChannelSpec, quad: &QuadratureConfig) -> Result<f64> {
    residual(spec, quad, Family::Forward)
}

/// Same as [`completeness_residual`] for the `M̃_R` family.
pub fn reversed_completeness_residual(spec: &ChannelSpec, quad: &QuadratureConfig) -> Result<f64> {
    residual(spec, quad, Family::Reversed)
}

fn residual(spec: &ChannelSpec, quad: &QuadratureConfig, family: Family) -> Result<f64> {
    spec.validate()?;
    quad.validate()?;
    let total = match *spec {
        ChannelSpec::Dichotomous { gamma } => {
            // Effects written out analytically: (√γ)² is not exactly γ in
            // floating point, and the two-term sum is exact otherwise.
            let (e0, e1) = (Operator2::real(gamma, 0.0, 0.0, 1.0 - gamma), Operator2::real(1.0 - gamma, 0.0, 0.0, gamma));
            match family {
                Family::Forward => e0 + e1,
                Family::Reversed => e1 + e0,
            }
        }
        ChannelSpec::Gaussian { k, tau, delta, .. } => {
            let l = quad.gaussian_half_width.unwrap_or(10.0 * (delta + k.abs() * tau));
            let n = quad.gaussian_points;
            let h = 2.0 * l / (n - 1) as f64;
            let mut acc = Operator2::zero();
            for j in 0..n {
                let y = -l + h * j as f64;
                let y = match family {
                    Family::Forward => y,
                    Family::Reversed => -y,
                };
                let m = gaussian_operator(k, tau, delta, y);
                let w = if j == 0 || j == n - 1 { 0.5 * h } else { h };
                acc = acc + (m.adjoint() * m).scale_re(w);
            }
            acc
        }
        ChannelSpec::Fluorescence { gamma1, dt } => {
            let eps = gamma1 * dt;
            let (nr, nt) = (quad.radial_cells, quad.angular_cells);
            let dr = quad.fluorescence_radius / nr as f64;
            let dth = 2.0 * PI / nt as f64;
            let mut acc = Operator2::zero();
            for ir in 0..nr {
                let r = (ir as f64 + 0.5) * dr;
                let mut ring = Operator2::zero();
                for it in 0..nt {
                    let alpha = num_complex::Complex64::from_polar(r, (it as f64 + 0.5) * dth);
                    let m = match family {
                        Family::Forward => fluorescence_forward_alpha(eps, alpha),
                        Family::Reversed => fluorescence_reversed_alpha(eps, alpha),
                    };
                    ring = ring + m.adjoint() * m;
                }
                acc = acc + ring.scale_re(r * dr * dth / PI);
            }
            acc
        }
    };
    Ok(total.max_diff(&Operator2::identity()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::time_reverse_operator;
    use proptest::prelude::*;

    #[test]
    fn dichotomous_operators() {
        let s = ChannelSpec::dichotomous(0.25).unwrap();
        let m0 = forward_operator(&s, &Readout::Binary(0)).unwrap();
        assert!(m0.max_diff(&Operator2::real(0.5, 0.0, 0.0, 0.75f64.sqrt())) < 1e-15);
        let r0 = reversed_operator(&s, &Readout::Binary(0)).unwrap();
        assert!(r0.max_diff(&forward_operator(&s, &Readout::Binary(1)).unwrap()) < 1e-15);
        assert_eq!(completeness_residual(&s, &QuadratureConfig::default()).unwrap(), 0.0);
        assert_eq!(reversed_completeness_residual(&s, &QuadratureConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_operator_at_origin() {
        // δ=1, kτ=1, ȳ=0: both entries (2π)^(−1/4)·exp(−1/16).
        let s = ChannelSpec::gaussian(1.0, 1.0, 1.0).unwrap();
        let m = forward_operator(&s, &Readout::Continuous(0.0)).unwrap();
        let want = (2.0 * PI).powf(-0.25) * (-1.0f64 / 16.0).exp();
        assert!((m.m[0][0].re - want).abs() < 1e-15);
        assert!((m.m[1][1].re - want).abs() < 1e-15);
    }

    #[test]
    fn fluorescence_operators_at_unit_alpha() {
        // α = 1 means I = √(2/dt), Q = 0.
        let (g, dt) = (1.0, 0.2);
        let s = ChannelSpec::fluorescence(g, dt).unwrap();
        let r = Readout::Heterodyne { i: (2.0 / dt).sqrt(), q: 0.0 };
        let m = forward_operator(&s, &r).unwrap();
        let e = (-0.5f64).exp();
        let want = Operator2::real(e, e * 0.2f64.sqrt(), 0.0, e * 0.8f64.sqrt());
        assert!(m.max_diff(&want) < 1e-14);
        let mr = reversed_operator(&s, &r).unwrap();
        let want_r = Operator2::real(e * 0.8f64.sqrt(), 0.0, -e * 0.2f64.sqrt(), e);
        assert!(mr.max_diff(&want_r) < 1e-14);
    }

    #[test]
    fn mismatched_readouts_are_rejected() {
        let s = ChannelSpec::dichotomous(0.3).unwrap();
        assert!(matches!(forward_operator(&s, &Readout::Continuous(0.0)), Err(Error::ReadoutMismatch { .. })));
        assert!(forward_operator(&s, &Readout::Binary(2)).is_err());
        assert!(ChannelSpec::dichotomous(1.5).is_err());
        assert!(ChannelSpec::gaussian(1.0, 1.0, 0.0).is_err());
        assert!(ChannelSpec::fluorescence(1.0, 2.0).is_err());
    }

    #[test]
    fn rank_deficient_reversal() {
        assert!(matches!(reverse_rank2(&Operator2::real(1.0, 0.0, 0.0, 0.0)), Err(Error::RankDeficient { .. })));
        assert!(reverse_rank2(&Operator2::zero()).is_err());
    }

    #[test]
    fn gaussian_completeness() {
        let s = ChannelSpec::gaussian(1.0, 1.0, 1.0).unwrap();
        let q = QuadratureConfig { gaussian_half_width: Some(10.0), ..Default::default() };
        assert!(completeness_residual(&s, &q).unwrap() < 1e-8);
        assert!(reversed_completeness_residual(&s, &q).unwrap() < 1e-8);
    }

    #[test]
    fn fluorescence_completeness() {
        let s = ChannelSpec::fluorescence(1.0, 0.2).unwrap();
        let q = QuadratureConfig::default();
        let f = completeness_residual(&s, &q).unwrap();
        let r = reversed_completeness_residual(&s, &q).unwrap();
        assert!(f < 1e-4, "{f}");
        assert!((f - r).abs() < 1e-12);
    }

    fn readout_for(spec: &ChannelSpec, u: f64, v: f64) -> Readout {
        match spec {
            ChannelSpec::Gaussian { .. } => Readout::Continuous(4.0 * u),
            ChannelSpec::Dichotomous { .. } => Readout::Binary(u8::from(u > 0.0)),
            ChannelSpec::Fluorescence { .. } => Readout::Heterodyne { i: 20.0 * u, q: 20.0 * v },
        }
    }

    fn arb_spec() -> impl Strategy<Value = ChannelSpec> {
        prop_oneof![
            (-2.0..2.0f64, 0.1..2.0f64, 0.2..3.0f64).prop_map(|(k, t, d)| ChannelSpec::gaussian(k, t, d).unwrap()),
            (0.0..=1.0f64).prop_map(|g| ChannelSpec::dichotomous(g).unwrap()),
            (0.0..10.0f64, 1e-4..0.1f64).prop_map(|(g, dt)| ChannelSpec::fluorescence(g, dt).unwrap()),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn reversed_is_theta_conjugate(spec in arb_spec(), u in -1.0..1.0f64, v in -1.0..1.0f64) {
            let r = readout_for(&spec, u, v);
            let f = forward_operator(&spec, &r).unwrap();
            let b = reversed_operator(&spec, &r).unwrap();
            prop_assert!(b.max_diff(&time_reverse_operator(&f)) < 1e-14);
            // M_F† M̃_R ∝ 𝕀.
            let p = f.adjoint() * b;
            prop_assert!(p.m[0][1].norm() < 1e-14 && p.m[1][0].norm() < 1e-14);
            prop_assert!((p.m[0][0] - p.m[1][1]).norm() < 1e-14);
        }

        #[test]
        fn rank2_reversal_is_proportional(spec in arb_spec(), u in -1.0..1.0f64, v in -1.0..1.0f64) {
            let r = readout_for(&spec, u, v);
            let f = forward_operator(&spec, &r).unwrap();
            let b = reversed_operator(&spec, &r).unwrap();
            if let Ok(g) = reverse_rank2(&f) {
                // Here the two coincide exactly, not just up to a scalar.
                prop_assert!(g.max_diff(&b) <= 1e-14 * b.max_abs().max(1e-300));
            }
        }
    }
}
