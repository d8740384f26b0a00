#![allow(dead_code)]

use qrev::qubit::{svd, Operator2, PureState, C64};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn cn<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random pure state.
pub fn state<R: Rng>(rng: &mut R) -> PureState {
    PureState::new(cn(rng), cn(rng)).unwrap()
}

pub fn operator<R: Rng>(rng: &mut R) -> Operator2 {
    Operator2::new(cn(rng), cn(rng), cn(rng), cn(rng))
}

pub fn hermitian<R: Rng>(rng: &mut R) -> Operator2 {
    let a = operator(rng);
    (a + a.adjoint()).scale_re(0.5)
}

/// Random unitary with a random global phase.
pub fn unitary<R: Rng>(rng: &mut R) -> Operator2 {
    let s = svd(&operator(rng));
    s.u * s.v.adjoint()
}

/// `S^{-1/2}` of a positive-definite Hermitian matrix.
fn inv_sqrt(s: &Operator2) -> Operator2 {
    let d = svd(s);
    let diag = Operator2::diag((1.0 / d.sigma[0].sqrt()).into(), (1.0 / d.sigma[1].sqrt()).into());
    d.v * diag * d.v.adjoint()
}

/// `n` Kraus operators with `Σ M†M = 𝕀`.
pub fn kraus<R: Rng>(rng: &mut R, n: usize) -> Vec<Operator2> {
    let raw: Vec<Operator2> = (0..n).map(|_| operator(rng)).collect();
    let s = raw.iter().fold(Operator2::zero(), |acc, a| acc + a.adjoint() * *a);
    let k = inv_sqrt(&s);
    raw.into_iter().map(|a| a * k).collect()
}

pub fn completeness(ops: &[Operator2]) -> f64 {
    ops.iter().fold(Operator2::zero(), |acc, m| acc + m.adjoint() * *m).max_diff(&Operator2::identity())
}
