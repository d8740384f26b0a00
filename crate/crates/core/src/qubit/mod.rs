//! Two-level states, operators and the anti-unitary time reversal `Θ = iσ_y K`.
//!
//! Bloch coordinates use the frame in which the excited state `|1⟩` points
//! up: `x = 2 Re ρ01`, `y = 2 Im ρ01`, `z = ρ11 − ρ00`. The ground state `|0⟩`
//! therefore sits at `z = −1`, which is where spontaneous emission relaxes to.

mod svd;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use svd::{svd, Svd};

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A 2×2 complex matrix, row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct Operator2 {
    pub m: [[C64; 2]; 2],
}

impl fmt::Debug for Operator2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]
        )
    }
}

impl Operator2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Self { m: [[a, b], [c, d]] }
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self::new(a.into(), b.into(), c.into(), d.into())
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub fn diag(a: C64, d: C64) -> Self {
        Self::new(a, ZERO, ZERO, d)
    }

    pub fn sigma_x() -> Self {
        Self::real(0.0, 1.0, 1.0, 0.0)
    }

    pub fn sigma_y() -> Self {
        Self::new(ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO)
    }

    pub fn sigma_z() -> Self {
        Self::real(1.0, 0.0, 0.0, -1.0)
    }

    /// `n·σ` in the standard (computational) Pauli basis.
    pub fn spin(n: [f64; 3]) -> Self {
        Self::sigma_x().scale_re(n[0]) + Self::sigma_y().scale_re(n[1]) + Self::sigma_z().scale_re(n[2])
    }

    /// Outer product `|u⟩⟨v|`.
    pub fn outer(u: [C64; 2], v: [C64; 2]) -> Self {
        Self::new(
            u[0] * v[0].conj(),
            u[0] * v[1].conj(),
            u[1] * v[0].conj(),
            u[1] * v[1].conj(),
        )
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn conj(&self) -> Self {
        let m = &self.m;
        Self::new(m[0][0].conj(), m[0][1].conj(), m[1][0].conj(), m[1][1].conj())
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.m;
        Self::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(s.into())
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// `⟨u|A|v⟩`.
    pub fn sandwich(&self, u: [C64; 2], v: [C64; 2]) -> C64 {
        let av = self.apply(v);
        u[0].conj() * av[0] + u[1].conj() * av[1]
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_diff(&self, other: &Self) -> f64 {
        (*self - *other).max_abs()
    }

    /// Largest entrywise deviation from the identity of `A†A`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.adjoint() * *self).max_diff(&Self::identity())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_diff(&self.adjoint()) <= tol
    }
}

impl Add for Operator2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let (a, b) = (&self.m, &o.m);
        Self::new(a[0][0] + b[0][0], a[0][1] + b[0][1], a[1][0] + b[1][0], a[1][1] + b[1][1])
    }
}

impl Sub for Operator2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for Operator2 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale_re(-1.0)
    }
}

impl Mul for Operator2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (a, b) = (&self.m, &o.m);
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// A normalized ket `a|0⟩ + b|1⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PureState {
    amp: [C64; 2],
}

impl PureState {
    /// Normalizes `(a, b)`; the zero vector is rejected.
    pub fn new(a: C64, b: C64) -> Result<Self> {
        Self::from_amplitudes([a, b])
    }

    pub fn from_amplitudes(v: [C64; 2]) -> Result<Self> {
        let n = ket_norm(v);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::invalid("state", "amplitudes must be finite and not both zero"));
        }
        Ok(Self { amp: [v[0] / n, v[1] / n] })
    }

    pub fn ground() -> Self {
        Self { amp: [ONE, ZERO] }
    }

    pub fn excited() -> Self {
        Self { amp: [ZERO, ONE] }
    }

    /// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
    ///
    /// This is the textbook amplitude parametrization: `θ = 0` is `|0⟩`,
    /// `θ = π/2, φ = 0` is `(|0⟩ + |1⟩)/√2`. Because the Bloch frame puts
    /// `|1⟩` up, the resulting Bloch vector is `(sinθ cosφ, −sinθ sinφ, −cosθ)`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (s, co) = (theta / 2.0).sin_cos();
        Self { amp: [co.into(), C64::from_polar(s, phi)] }
    }

    pub fn amplitudes(&self) -> [C64; 2] {
        self.amp
    }

    pub fn a(&self) -> C64 {
        self.amp[0]
    }

    pub fn b(&self) -> C64 {
        self.amp[1]
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> C64 {
        inner(self.amp, other.amp)
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix { rho: Operator2::outer(self.amp, self.amp) }
    }

    pub fn bloch(&self) -> BlochVector {
        self.density().bloch()
    }

    /// The orthogonal state `(−b*, a*)`.
    pub fn orthogonal(&self) -> PureState {
        PureState { amp: [-self.amp[1].conj(), self.amp[0].conj()] }
    }
}

pub(crate) fn ket_norm(v: [C64; 2]) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

pub(crate) fn inner(u: [C64; 2], v: [C64; 2]) -> C64 {
    u[0].conj() * v[0] + u[1].conj() * v[1]
}

/// A qubit density matrix (Hermitian, unit trace, positive semidefinite).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix {
    rho: Operator2,
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity to within `1e-9`.
    pub fn new(rho: Operator2) -> Result<Self> {
        let tol = 1e-9;
        if !rho.is_hermitian(tol) {
            return Err(Error::invalid("density", "matrix is not Hermitian"));
        }
        if (rho.trace() - ONE).norm() > tol {
            return Err(Error::invalid("density", "trace differs from 1"));
        }
        let s = Self { rho };
        if s.bloch().norm() > 1.0 + tol {
            return Err(Error::invalid("density", "matrix is not positive semidefinite"));
        }
        Ok(s)
    }

    /// Normalizes an unnormalized positive operator by its trace.
    pub(crate) fn from_unnormalized(rho: Operator2) -> Self {
        let t = rho.trace().re;
        let m = &rho.m;
        let mut out = Operator2::new(m[0][0] / t, m[0][1] / t, m[1][0] / t, m[1][1] / t);
        // Symmetrize to stop rounding from accumulating anti-Hermitian parts.
        out.m[0][0].im = 0.0;
        out.m[1][1].im = 0.0;
        let off = (out.m[0][1] + out.m[1][0].conj()) * 0.5;
        out.m[0][1] = off;
        out.m[1][0] = off.conj();
        Self { rho: out }
    }

    pub fn maximally_mixed() -> Self {
        Self { rho: Operator2::identity().scale_re(0.5) }
    }

    pub fn from_bloch(b: BlochVector) -> Result<Self> {
        if !(b.x.is_finite() && b.y.is_finite() && b.z.is_finite()) || b.norm() > 1.0 + 1e-9 {
            return Err(Error::invalid("bloch", "vector must be finite with norm ≤ 1"));
        }
        Ok(Self::from_bloch_unchecked(b))
    }

    pub(crate) fn from_bloch_unchecked(b: BlochVector) -> Self {
        let off = c(b.x, b.y) * 0.5;
        Self {
            rho: Operator2::new(c(0.5 * (1.0 - b.z), 0.0), off, off.conj(), c(0.5 * (1.0 + b.z), 0.0)),
        }
    }

    pub fn matrix(&self) -> &Operator2 {
        &self.rho
    }

    pub fn bloch(&self) -> BlochVector {
        let r = &self.rho.m;
        BlochVector { x: 2.0 * r[0][1].re, y: 2.0 * r[0][1].im, z: (r[1][1] - r[0][0]).re }
    }

    pub fn purity(&self) -> f64 {
        (self.rho * self.rho).trace().re
    }

    /// Uhlmann fidelity with a pure state, `⟨ψ|ρ|ψ⟩`.
    pub fn fidelity_with(&self, psi: &PureState) -> f64 {
        self.rho.sandwich(psi.amp, psi.amp).re
    }

    /// Fidelity between two qubit states, `(tr√(√ρ σ √ρ))²`, via the
    /// closed form `tr(ρσ) + 2√(det ρ det σ)`.
    pub fn fidelity(&self, other: &DensityMatrix) -> f64 {
        let overlap = (self.rho * other.rho).trace().re;
        let d = (self.rho.det().re.max(0.0) * other.rho.det().re.max(0.0)).sqrt();
        (overlap + 2.0 * d).clamp(0.0, 1.0)
    }
}

/// Bloch coordinates in the excited-up frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dist(&self, o: &BlochVector) -> f64 {
        BlochVector::new(self.x - o.x, self.y - o.y, self.z - o.z).norm()
    }
}

impl Neg for BlochVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// `Θ|ψ⟩ = iσ_y K|ψ⟩`: `(a, b) ↦ (b*, −a*)`.
pub fn time_reverse_state(psi: &PureState) -> PureState {
    PureState { amp: time_reverse_ket(psi.amp) }
}

/// [`time_reverse_state`] on a raw, possibly unnormalized amplitude pair.
pub fn time_reverse_ket(v: [C64; 2]) -> [C64; 2] {
    [v[1].conj(), -v[0].conj()]
}

/// `ΘAΘ⁻¹`: `[[a, b], [c, d]] ↦ [[d*, −c*], [−b*, a*]]`.
pub fn time_reverse_operator(a: &Operator2) -> Operator2 {
    let m = &a.m;
    Operator2::new(m[1][1].conj(), -m[1][0].conj(), -m[0][1].conj(), m[0][0].conj())
}

/// `ΘρΘ⁻¹`, which inverts the Bloch vector.
pub fn time_reverse_density(rho: &DensityMatrix) -> DensityMatrix {
    DensityMatrix { rho: time_reverse_operator(&rho.rho) }
}
