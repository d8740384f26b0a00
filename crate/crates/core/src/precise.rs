//! Double-double density matrices.
//!
//! Backward evolution undoes the contraction of the forward map, so rounding
//! in a stored final state grows like the squared condition number of the
//! accumulated Kraus product (10⁴–10⁵ for a few relaxation times, or
//! `P_F/P_B` for a retrodicted probability). Carrying ~32 digits keeps
//! mirrored paths and backward probabilities accurate to well below 1e-12.

use crate::qubit::{c, DensityMatrix, Operator2, C64};

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub(crate) const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub(crate) fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub(crate) fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub(crate) fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }

    pub(crate) fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub(crate) fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub(crate) fn mul_f64(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Dd { hi, lo }
    }

    pub(crate) fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul_f64(q1));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul_f64(q2));
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add(Dd::from_f64(q3))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Cdd {
    re: Dd,
    im: Dd,
}

impl Cdd {
    fn add(self, o: Cdd) -> Cdd {
        Cdd { re: self.re.add(o.re), im: self.im.add(o.im) }
    }

    /// `(a + ib)·self` with `a + ib` an ordinary double.
    fn scale(self, a: f64, b: f64) -> Cdd {
        Cdd {
            re: self.re.mul_f64(a).sub(self.im.mul_f64(b)),
            im: self.re.mul_f64(b).add(self.im.mul_f64(a)),
        }
    }
}

/// Density matrix stored entrywise in double-double.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct PreciseDensity {
    m: [[Cdd; 2]; 2],
}

impl PreciseDensity {
    pub(crate) fn from_density(rho: &DensityMatrix) -> Self {
        let r = rho.matrix();
        let mut m = [[Cdd::default(); 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = Cdd { re: Dd::from_f64(r.m[i][j].re), im: Dd::from_f64(r.m[i][j].im) };
            }
        }
        Self { m }
    }

    /// `|v⟩⟨v|` for a unit ket; every product of doubles is kept exactly.
    pub(crate) fn from_ket(v: [C64; 2]) -> Self {
        let mut m = [[Cdd::default(); 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                let w = v[j].conj();
                let (a, b) = two_prod(v[i].re, w.re);
                let (c2, d) = two_prod(v[i].im, w.im);
                let (e1, f) = two_prod(v[i].re, w.im);
                let (g, h) = two_prod(v[i].im, w.re);
                let dd = |x: f64, y: f64| Dd { hi: x, lo: 0.0 }.add(Dd { hi: y, lo: 0.0 });
                *e = Cdd { re: dd(a, b).sub(dd(c2, d)), im: dd(e1, f).add(dd(g, h)) };
            }
        }
        Self { m }
    }

    /// `⟨v|ρ|v⟩`.
    pub(crate) fn expectation(&self, v: [C64; 2]) -> f64 {
        let mut acc = Dd::ZERO;
        for i in 0..2 {
            for j in 0..2 {
                let w = v[i].conj();
                acc = acc.add(self.m[i][j].scale(v[j].re, v[j].im).scale(w.re, w.im).re);
            }
        }
        acc.to_f64()
    }

    pub(crate) fn zero() -> Self {
        Self { m: [[Cdd::default(); 2]; 2] }
    }

    pub(crate) fn add(&self, o: &Self) -> Self {
        let mut m = self.m;
        for (row, orow) in m.iter_mut().zip(&o.m) {
            for (e, oe) in row.iter_mut().zip(orow) {
                *e = e.add(*oe);
            }
        }
        Self { m }
    }

    pub(crate) fn trace(&self) -> f64 {
        self.m[0][0].re.add(self.m[1][1].re).to_f64()
    }

    /// `A ρ A†` without normalization; `A` is taken as exact.
    pub(crate) fn sandwich(&self, a: &Operator2) -> Self {
        let mut t = [[Cdd::default(); 2]; 2];
        for (i, row) in t.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                for k in 0..2 {
                    let x = a.m[i][k];
                    *e = e.add(self.m[k][j].scale(x.re, x.im));
                }
            }
        }
        let mut m = [[Cdd::default(); 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                for (k, tk) in t[i].iter().enumerate() {
                    let y = a.m[j][k].conj();
                    *e = e.add(tk.scale(y.re, y.im));
                }
            }
        }
        Self { m }
    }

    /// Normalized `A ρ A† / tr(·)` and the trace, or `None` when the trace is
    /// not positive.
    pub(crate) fn evolve(&self, a: &Operator2) -> (Self, f64) {
        self.sandwich(a).normalized()
    }

    /// `ρ / tr ρ` and the trace; unchanged when the trace is not positive.
    pub(crate) fn normalized(&self) -> (Self, f64) {
        let mut out = *self;
        let tr = out.m[0][0].re.add(out.m[1][1].re);
        let trace = tr.to_f64();
        if trace > 0.0 {
            for row in out.m.iter_mut() {
                for e in row.iter_mut() {
                    *e = Cdd { re: e.re.div(tr), im: e.im.div(tr) };
                }
            }
            // Exact Hermiticity on the rounded representation.
            out.m[0][0].im = Dd::ZERO;
            out.m[1][1].im = Dd::ZERO;
            out.m[1][0] = Cdd { re: out.m[0][1].re, im: out.m[0][1].im.neg() };
        }
        (out, trace)
    }

    /// `ΘρΘ⁻¹`: swap the populations and negate the coherences.
    pub(crate) fn time_reverse(&self) -> Self {
        let neg = |z: Cdd| Cdd { re: z.re.neg(), im: z.im.neg() };
        Self { m: [[self.m[1][1], neg(self.m[0][1])], [neg(self.m[1][0]), self.m[0][0]]] }
    }

    pub(crate) fn to_density(self) -> DensityMatrix {
        let e = |i: usize, j: usize| c(self.m[i][j].re.to_f64(), self.m[i][j].im.to_f64());
        DensityMatrix::from_unnormalized(Operator2::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_bits_lost_in_double() {
        // 1 + 2⁻⁶⁰ − 1 is lost in f64 but not in double-double.
        let tiny = 2f64.powi(-60);
        let x = Dd::from_f64(1.0).add(Dd::from_f64(tiny)).sub(Dd::from_f64(1.0));
        assert_eq!(x.to_f64(), tiny);
    }

    #[test]
    fn division_is_accurate() {
        let third = Dd::from_f64(1.0).div(Dd::from_f64(3.0));
        let back = third.mul_f64(3.0).sub(Dd::from_f64(1.0));
        assert!(back.to_f64().abs() < 1e-31);
        let (p, e) = two_prod(third.hi, 3.0);
        assert!((p - 1.0 + e + third.lo * 3.0).abs() < 1e-31);
    }

    #[test]
    fn matches_double_evolution() {
        let rho = DensityMatrix::from_bloch(crate::qubit::BlochVector::new(0.3, -0.2, 0.4)).unwrap();
        let a = Operator2::new(c(0.9, 0.1), c(0.2, -0.3), c(-0.1, 0.05), c(0.7, 0.0));
        let out = a * *rho.matrix() * a.adjoint();
        let expect = DensityMatrix::from_unnormalized(out);
        let (p, tr) = PreciseDensity::from_density(&rho).evolve(&a);
        assert!((tr - out.trace().re).abs() < 1e-15);
        assert!(p.to_density().matrix().max_diff(expect.matrix()) < 1e-15);
        let rev = p.time_reverse().to_density().bloch();
        assert!(rev.dist(&-expect.bloch()) < 1e-15);
    }

    #[test]
    fn ket_outer_product_and_expectation() {
        let psi = crate::qubit::PureState::new(c(0.3, -0.7), c(0.5, 0.2)).unwrap();
        let p = PreciseDensity::from_ket(psi.amplitudes());
        assert!(p.to_density().matrix().max_diff(psi.density().matrix()) < 1e-16);
        assert!((p.expectation(psi.amplitudes()) - 1.0).abs() < 1e-16);
        let perp = psi.orthogonal();
        assert!(p.expectation(perp.amplitudes()).abs() < 1e-30);
    }
}
