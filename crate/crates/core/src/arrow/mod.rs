//! The statistical arrow of time: how much more likely a measurement record
//! is under forward evolution than under its time-reversed counterpart.
//!
//! All probabilities are handled as logarithms. A record of a few thousand
//! steps easily underflows double precision, so operator chains renormalize
//! after every step and accumulate the log of the norm instead.

mod fluorescence;
mod imperfect;

use crate::error::{Error, Result};
use crate::precise::PreciseDensity;
use crate::qubit::{ket_norm, time_reverse_ket, time_reverse_state, Operator2, PureState, C64};
use crate::trajectory::{step_operator, ReadoutRecord, SimConfig};

pub use fluorescence::{
    dispersive_mean_log_arrow, fluorescence_ensemble_arrow, fluorescence_log_arrow, fluorescence_path_log_weights,
    mean_log_arrow_analytic, mean_log_arrow_from_moments, EnsembleArrow,
};
pub use imperfect::{
    branch_ensemble, imperfect_backward_probability, imperfect_forward_probability, imperfect_log_arrow, Branch,
    BranchEnsemble, CoarseChannel,
};

#[derive(Clone, Debug, PartialEq)]
pub struct ArrowStats {
    /// `ln(P_F / P_B)`; `±∞` when exactly one side vanishes.
    pub log_r: f64,
    /// `P_F / (P_F + P_B)`, the posterior that the record ran forward given
    /// equal priors.
    pub p_forward_given_record: f64,
    /// Per-step contributions, when the estimator decomposes that way.
    pub per_term: Option<Vec<f64>>,
}

impl ArrowStats {
    pub fn from_log_probabilities(log_pf: f64, log_pb: f64) -> Result<Self> {
        if log_pf == f64::NEG_INFINITY && log_pb == f64::NEG_INFINITY {
            return Err(Error::UndefinedArrow);
        }
        if log_pf.is_nan() || log_pb.is_nan() {
            return Err(Error::UndefinedArrow);
        }
        let log_r = if log_pb == f64::NEG_INFINITY {
            f64::INFINITY
        } else if log_pf == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            log_pf - log_pb
        };
        Ok(Self::from_log_r(log_r))
    }

    pub fn from_log_r(log_r: f64) -> Self {
        Self { log_r, p_forward_given_record: logistic(log_r), per_term: None }
    }
}

fn logistic(l: f64) -> f64 {
    if l >= 0.0 {
        1.0 / (1.0 + (-l).exp())
    } else {
        let e = l.exp();
        e / (1.0 + e)
    }
}

/// Pre- and post-selected boundary states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPair {
    pub pre: PureState,
    pub post: PureState,
}

/// A time-ordered sequence of step operators `A_1, …, A_N`; the forward
/// map is `A_N ⋯ A_1`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorChain {
    ops: Vec<Operator2>,
}

/// Applies `ops` to `v`, renormalizing each step. Returns the final unit
/// vector and `ln‖A⋯v‖²`, or `−∞` once the vector is annihilated.
fn propagate<'a>(mut v: [C64; 2], ops: impl Iterator<Item = &'a Operator2>, adjoint: bool) -> ([C64; 2], f64) {
    let mut log_n2 = 0.0;
    for op in ops {
        v = if adjoint { op.adjoint().apply(v) } else { op.apply(v) };
        let n = ket_norm(v);
        if n == 0.0 || !n.is_finite() {
            return (v, f64::NEG_INFINITY);
        }
        log_n2 += 2.0 * n.ln();
        v = [v[0] / n, v[1] / n];
    }
    (v, log_n2)
}

fn precise_overlap(mut rho: PreciseDensity, ops: impl Iterator<Item = Operator2>, post: [C64; 2]) -> f64 {
    let mut log_n = 0.0;
    for op in ops {
        let (next, tr) = rho.evolve(&op);
        if !(tr > 0.0) {
            return f64::NEG_INFINITY;
        }
        log_n += tr.ln();
        rho = next;
    }
    log_n + rho.expectation(post).max(0.0).ln()
}

impl OperatorChain {
    pub fn new(ops: Vec<Operator2>) -> Self {
        Self { ops }
    }

    /// Steps `M_F(r_n)·U_dt` for each readout.
    pub fn from_record(record: &ReadoutRecord, cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let ops = record.readouts.iter().map(|r| step_operator(r, cfg)).collect::<Result<_>>()?;
        Ok(Self { ops })
    }

    pub fn ops(&self) -> &[Operator2] {
        &self.ops
    }

    /// `ln |A_N⋯A_1 ψ_i|²`.
    pub fn log_forward(&self, psi_i: &PureState) -> f64 {
        propagate(psi_i.amplitudes(), self.ops.iter(), false).1
    }

    /// `ln |A_1†⋯A_N† Θψ_f|²`.
    pub fn log_backward(&self, psi_f: &PureState) -> f64 {
        propagate(time_reverse_ket(psi_f.amplitudes()), self.ops.iter().rev(), true).1
    }

    /// Normalized state reached from `psi_i`, if the record is possible.
    pub fn final_state(&self, psi_i: &PureState) -> Result<PureState> {
        let (v, l) = propagate(psi_i.amplitudes(), self.ops.iter(), false);
        if l == f64::NEG_INFINITY {
            return Err(Error::ImpossibleReadout { step: self.ops.len(), trace: 0.0 });
        }
        PureState::from_amplitudes(v)
    }

    /// `ln |⟨φ_f| A_N⋯A_1 |φ_i⟩|²`.
    ///
    /// Evaluated as `⟨φ_f|𝓜ρ_i𝓜†|φ_f⟩` in double-double: the overlap can be
    /// orders of magnitude below `‖𝓜φ_i‖`, and the cancellation would
    /// otherwise eat most of the digits.
    pub fn log_forward_prepost(&self, b: &BoundaryPair) -> f64 {
        precise_overlap(PreciseDensity::from_ket(b.pre.amplitudes()), self.ops.iter().copied(), b.post.amplitudes())
    }

    /// `ln |⟨Θφ_i| A_1†⋯A_N† |Θφ_f⟩|²`.
    pub fn log_backward_prepost(&self, b: &BoundaryPair) -> f64 {
        precise_overlap(
            PreciseDensity::from_ket(time_reverse_ket(b.post.amplitudes())),
            self.ops.iter().rev().map(Operator2::adjoint),
            time_reverse_ket(b.pre.amplitudes()),
        )
    }

    pub fn arrow(&self, psi_i: &PureState, psi_f: &PureState) -> Result<ArrowStats> {
        ArrowStats::from_log_probabilities(self.log_forward(psi_i), self.log_backward(psi_f))
    }

    /// Arrow of the record started from `psi_i`, with the backward run
    /// started from the reverse of the state the chain itself produces.
    ///
    /// Unlike [`arrow`](Self::arrow) this never rounds the final state to a
    /// double-precision ket: `P_B` is sensitive to the final state by a
    /// factor of about `P_F/P_B`, so both ends are carried in double-double.
    pub fn arrow_from(&self, psi_i: &PureState) -> Result<ArrowStats> {
        let mut rho = PreciseDensity::from_ket(psi_i.amplitudes());
        let mut log_pf = 0.0;
        for (step, op) in self.ops.iter().enumerate() {
            let (next, tr) = rho.evolve(op);
            if !(tr > 0.0) {
                return Err(Error::ImpossibleReadout { step, trace: tr });
            }
            log_pf += tr.ln();
            rho = next;
        }
        let mut rho = rho.time_reverse();
        let mut log_pb = 0.0;
        for op in self.ops.iter().rev() {
            let (next, tr) = rho.evolve(&op.adjoint());
            if !(tr > 0.0) {
                log_pb = f64::NEG_INFINITY;
                break;
            }
            log_pb += tr.ln();
            rho = next;
        }
        ArrowStats::from_log_probabilities(log_pf, log_pb)
    }

    pub fn prepost_arrow(&self, b: &BoundaryPair) -> Result<ArrowStats> {
        ArrowStats::from_log_probabilities(self.log_forward_prepost(b), self.log_backward_prepost(b))
    }
}

/// `P_F = |∏ M_F U ψ_i|²`.
pub fn forward_probability(record: &ReadoutRecord, psi_i: &PureState, cfg: &SimConfig) -> Result<f64> {
    Ok(log_forward_probability(record, psi_i, cfg)?.exp())
}

pub fn log_forward_probability(record: &ReadoutRecord, psi_i: &PureState, cfg: &SimConfig) -> Result<f64> {
    Ok(OperatorChain::from_record(record, cfg)?.log_forward(psi_i))
}

/// `P_B = |∏ U† M_F† Θψ_f|²`, readouts taken in reverse order.
pub fn backward_probability(record: &ReadoutRecord, psi_f: &PureState, cfg: &SimConfig) -> Result<f64> {
    Ok(log_backward_probability(record, psi_f, cfg)?.exp())
}

pub fn log_backward_probability(record: &ReadoutRecord, psi_f: &PureState, cfg: &SimConfig) -> Result<f64> {
    Ok(OperatorChain::from_record(record, cfg)?.log_backward(psi_f))
}

/// Arrow of time for an unconditioned record: `psi_f` should be the state
/// the record actually produces from `psi_i`.
pub fn log_arrow(record: &ReadoutRecord, psi_i: &PureState, psi_f: &PureState, cfg: &SimConfig) -> Result<ArrowStats> {
    OperatorChain::from_record(record, cfg)?.arrow(psi_i, psi_f)
}

/// Arrow of time with pre- and post-selection.
pub fn prepost_log_arrow(record: &ReadoutRecord, b: &BoundaryPair, cfg: &SimConfig) -> Result<ArrowStats> {
    OperatorChain::from_record(record, cfg)?.prepost_arrow(b)
}

/// Returns `(|M_F(r)ψ|², |M̃_R(r)Θψ|²)`, which agree for every channel.
pub fn reverse_probability_equiv_check(
    spec: &crate::channels::ChannelSpec,
    r: &crate::channels::Readout,
    psi: &PureState,
) -> Result<(f64, f64)> {
    let f = crate::channels::forward_operator(spec, r)?.apply(psi.amplitudes());
    let b = crate::channels::reversed_operator(spec, r)?.apply(time_reverse_state(psi).amplitudes());
    Ok((ket_norm(f).powi(2), ket_norm(b).powi(2)))
}
