use super::{c, ket_norm, Operator2, C64};

/// `M = U·diag(σ₁, σ₂)·V†` with `σ₁ ≥ σ₂ ≥ 0`.
#[derive(Clone, Copy, Debug)]
pub struct Svd {
    pub u: Operator2,
    pub sigma: [f64; 2],
    pub v: Operator2,
}

impl Svd {
    pub fn reconstruct(&self) -> Operator2 {
        self.u * Operator2::diag(self.sigma[0].into(), self.sigma[1].into()) * self.v.adjoint()
    }
}

/// Closed-form singular value decomposition of a 2×2 matrix.
///
/// The right singular vectors come from the eigenvectors of `M†M`; the left
/// ones are `M v / σ`, except that `u₂` is built as the orthogonal complement
/// of `u₁` so that rank-one inputs still yield a unitary `U`.
pub fn svd(m: &Operator2) -> Svd {
    let a = m.adjoint() * *m;
    let p = a.m[0][0].re;
    let q = a.m[0][1];
    let r = a.m[1][1].re;
    let half = 0.5 * (p - r);
    let disc = (half * half + q.norm_sqr()).sqrt();
    let l1 = 0.5 * (p + r) + disc;

    let cand1 = [q, c(l1 - p, 0.0)];
    let cand2 = [c(l1 - r, 0.0), q.conj()];
    let (n1, n2) = (ket_norm(cand1), ket_norm(cand2));
    let v1 = if n1.max(n2) <= f64::EPSILON * l1.abs().max(f64::MIN_POSITIVE) {
        // M†M ∝ I: any basis diagonalizes it.
        [c(1.0, 0.0), c(0.0, 0.0)]
    } else if n1 >= n2 {
        [cand1[0] / n1, cand1[1] / n1]
    } else {
        [cand2[0] / n2, cand2[1] / n2]
    };
    let v2 = [-v1[1].conj(), v1[0].conj()];

    let mv1 = m.apply(v1);
    let s1 = ket_norm(mv1);
    let u1 = if s1 > 0.0 { [mv1[0] / s1, mv1[1] / s1] } else { [c(1.0, 0.0), c(0.0, 0.0)] };
    let w = [-u1[1].conj(), u1[0].conj()];
    let mv2 = m.apply(v2);
    let z = w[0].conj() * mv2[0] + w[1].conj() * mv2[1];
    let phase = if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) };
    let u2 = [w[0] * phase, w[1] * phase];
    let s2 = z.norm();

    Svd {
        u: Operator2::new(u1[0], u2[0], u1[1], u2[1]),
        sigma: [s1, s2],
        v: Operator2::new(v1[0], v2[0], v1[1], v2[1]),
    }
}
