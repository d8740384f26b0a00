//! Arrow of time when the detector reports only a coarse-grained outcome `r`
//! and the fine outcome `s` stays hidden.

use super::ArrowStats;
use crate::error::{Error, Result};
use crate::precise::PreciseDensity;
use crate::qubit::{DensityMatrix, Operator2};

const MAX_BRANCHES: usize = 1 << 20;

/// Coarse outcome `r` ↦ fine Kraus operators `M_{rs}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseChannel {
    outcomes: Vec<Vec<Operator2>>,
}

impl CoarseChannel {
    pub fn new(outcomes: Vec<Vec<Operator2>>) -> Result<Self> {
        if outcomes.is_empty() || outcomes.iter().any(Vec::is_empty) {
            return Err(Error::invalid("partition", "every coarse outcome needs at least one fine operator"));
        }
        Ok(Self { outcomes })
    }

    /// Perfect detection: one fine operator per outcome.
    pub fn perfect(ops: Vec<Operator2>) -> Result<Self> {
        Self::new(ops.into_iter().map(|m| vec![m]).collect())
    }

    pub fn outcomes(&self) -> &[Vec<Operator2>] {
        &self.outcomes
    }

    /// `‖Σ_{r,s} M_{rs}†M_{rs} − 𝕀‖_max`.
    pub fn completeness_residual(&self) -> f64 {
        let sum = self.outcomes.iter().flatten().fold(Operator2::zero(), |acc, m| acc + m.adjoint() * *m);
        sum.max_diff(&Operator2::identity())
    }

    fn fine(&self, r: usize) -> Result<&[Operator2]> {
        self.outcomes
            .get(r)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::invalid("record", format!("coarse outcome {r} is not in the partition")))
    }
}

/// `Σ_{s-paths} tr[M_{r_N s_N}⋯ρ₀⋯M_{r_N s_N}†]`, computed by propagating
/// the unnormalized post-measurement state `Σ_s M_{rs} ρ M_{rs}†`.
pub fn imperfect_forward_probability(record: &[usize], rho0: &DensityMatrix, ch: &CoarseChannel) -> Result<f64> {
    let mut rho = PreciseDensity::from_density(rho0);
    for &r in record {
        let fine = ch.fine(r)?;
        rho = fine.iter().fold(PreciseDensity::zero(), |acc, m| acc.add(&rho.sandwich(m)));
    }
    Ok(rho.trace())
}

/// One hidden fine-outcome history consistent with the coarse record.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub fine_path: Vec<usize>,
    /// `P({s} | {r})`.
    pub weight: f64,
    /// Final state conditioned on both records.
    pub state: DensityMatrix,
    /// The same state at double-double precision, the starting point of
    /// retrodiction. Retrodicted probabilities are ill-conditioned in the
    /// final state by a factor of roughly `P_F/P_B`.
    precise: PreciseDensity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchEnsemble {
    pub branches: Vec<Branch>,
    /// `P({r})`, the forward probability of the coarse record.
    pub record_probability: f64,
}

/// Enumerates every hidden path with non-zero probability.
pub fn branch_ensemble(record: &[usize], rho0: &DensityMatrix, ch: &CoarseChannel) -> Result<BranchEnsemble> {
    let mut count = 1usize;
    for &r in record {
        count = count.saturating_mul(ch.fine(r)?.len());
    }
    if count > MAX_BRANCHES {
        return Err(Error::invalid("record", format!("{count} hidden paths exceed the enumeration limit")));
    }
    let mut paths: Vec<(Vec<usize>, PreciseDensity)> = vec![(Vec::new(), PreciseDensity::from_density(rho0))];
    for &r in record {
        let fine = ch.fine(r)?;
        let mut next = Vec::with_capacity(paths.len() * fine.len());
        for (path, rho) in &paths {
            for (s, m) in fine.iter().enumerate() {
                let out = rho.sandwich(m);
                if out.trace() > 0.0 {
                    let mut p = path.clone();
                    p.push(s);
                    next.push((p, out));
                }
            }
        }
        paths = next;
    }
    let total: f64 = paths.iter().map(|(_, rho)| rho.trace()).sum();
    if !(total > 0.0) {
        return Ok(BranchEnsemble { branches: Vec::new(), record_probability: 0.0 });
    }
    let branches = paths
        .into_iter()
        .map(|(fine_path, rho)| {
            let (precise, tr) = rho.normalized();
            Branch { fine_path, weight: tr / total, state: precise.to_density(), precise }
        })
        .collect();
    Ok(BranchEnsemble { branches, record_probability: total })
}

/// `Σ_branches P({s}|{r}) · tr[M_{r₁s₁}†⋯M_{r_N s_N}† ρ̃ M_{r_N s_N}⋯M_{r₁s₁}]`
/// with `ρ̃ = Θ ρ_branch Θ⁻¹`: each branch is retrodicted along its own
/// hidden history.
pub fn imperfect_backward_probability(record: &[usize], ens: &BranchEnsemble, ch: &CoarseChannel) -> Result<f64> {
    let sum: f64 = ens.branches.iter().map(|b| b.weight).sum();
    if ens.branches.is_empty() || (sum - 1.0).abs() > 1e-12 {
        return Err(Error::WeightMismatch { sum });
    }
    let mut total = 0.0;
    for b in &ens.branches {
        if b.fine_path.len() != record.len() {
            return Err(Error::invalid("branch", "fine path length differs from the record"));
        }
        let mut rho = b.precise.time_reverse();
        for (&r, &s) in record.iter().zip(&b.fine_path).rev() {
            let m = ch.fine(r)?.get(s).ok_or_else(|| Error::invalid("branch", "fine outcome out of range"))?;
            rho = rho.sandwich(&m.adjoint());
        }
        total += b.weight * rho.trace();
    }
    Ok(total)
}

pub fn imperfect_log_arrow(record: &[usize], rho0: &DensityMatrix, ch: &CoarseChannel) -> Result<ArrowStats> {
    let ens = branch_ensemble(record, rho0, ch)?;
    if ens.branches.is_empty() {
        return Err(Error::UndefinedArrow);
    }
    let pf = imperfect_forward_probability(record, rho0, ch)?;
    let pb = imperfect_backward_probability(record, &ens, ch)?;
    ArrowStats::from_log_probabilities(pf.ln(), pb.ln())
}
