use rayon::prelude::*;

use super::{simulate_forward_stream, SimConfig, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::qubit::DensityMatrix;

/// Trajectories per work unit. Fixed so that results do not depend on the
/// number of threads.
pub const ENSEMBLE_CHUNK: usize = 64;

/// Simulates trajectories `0..n` (stream = index) and folds them without
/// keeping the records.
///
/// Chunks of [`ENSEMBLE_CHUNK`] trajectories are folded sequentially and in
/// parallel with each other; the chunk results are then merged left to right,
/// so the output is bit-identical for any thread count.
pub fn fold_ensemble<A, I, F, M>(rho0: &DensityMatrix, cfg: &SimConfig, n: usize, init: I, fold: F, merge: M) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(A, &TrajectoryRecord) -> Result<A> + Sync,
    M: Fn(A, A) -> A,
{
    cfg.validate()?;
    let chunks: Vec<usize> = (0..n.div_ceil(ENSEMBLE_CHUNK)).collect();
    let parts = chunks
        .par_iter()
        .map(|&c| {
            let lo = c * ENSEMBLE_CHUNK;
            let hi = (lo + ENSEMBLE_CHUNK).min(n);
            let mut acc = init();
            for k in lo..hi {
                let tr = simulate_forward_stream(rho0, cfg, k as u64)?;
                acc = fold(acc, &tr)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<A>>>()?;
    Ok(parts.into_iter().fold(init(), merge))
}

/// Per-time-slice sums of Bloch components and their squares.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnsembleMoments {
    pub times: Vec<f64>,
    pub count: usize,
    sx: Vec<f64>,
    sy: Vec<f64>,
    sz: Vec<f64>,
    sxx: Vec<f64>,
    syy: Vec<f64>,
    szz: Vec<f64>,
}

impl EnsembleMoments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: &[TrajectoryRecord]) -> Result<Self> {
        let mut m = Self::new();
        for r in records {
            m.push(r)?;
        }
        if m.count == 0 {
            return Err(Error::BadEnsemble);
        }
        Ok(m)
    }

    fn ensure_len(&mut self, times: &[f64]) -> Result<()> {
        if self.count == 0 && self.times.is_empty() {
            let n = times.len();
            self.times = times.to_vec();
            for v in [&mut self.sx, &mut self.sy, &mut self.sz, &mut self.sxx, &mut self.syy, &mut self.szz] {
                *v = vec![0.0; n];
            }
            return Ok(());
        }
        if self.times.len() != times.len() || self.times.iter().zip(times).any(|(a, b)| (a - b).abs() > 1e-12) {
            return Err(Error::BadEnsemble);
        }
        Ok(())
    }

    pub fn push(&mut self, r: &TrajectoryRecord) -> Result<()> {
        self.ensure_len(&r.times)?;
        for (k, s) in r.states.iter().enumerate() {
            self.sx[k] += s.x;
            self.sy[k] += s.y;
            self.sz[k] += s.z;
            self.sxx[k] += s.x * s.x;
            self.syy[k] += s.y * s.y;
            self.szz[k] += s.z * s.z;
        }
        self.count += 1;
        Ok(())
    }

    /// Combines two partial sums; either side may be empty.
    pub fn merge(mut self, other: Self) -> Self {
        if other.count == 0 {
            return self;
        }
        if self.count == 0 {
            return other;
        }
        for (a, b) in [
            (&mut self.sx, &other.sx),
            (&mut self.sy, &other.sy),
            (&mut self.sz, &other.sz),
            (&mut self.sxx, &other.sxx),
            (&mut self.syy, &other.syy),
            (&mut self.szz, &other.szz),
        ] {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self.count += other.count;
        self
    }

    fn mean(&self, v: &[f64]) -> Vec<f64> {
        let n = self.count as f64;
        v.iter().map(|s| s / n).collect()
    }

    pub fn mean_x(&self) -> Vec<f64> {
        self.mean(&self.sx)
    }
    pub fn mean_y(&self) -> Vec<f64> {
        self.mean(&self.sy)
    }
    pub fn mean_z(&self) -> Vec<f64> {
        self.mean(&self.sz)
    }
    pub fn mean_x2(&self) -> Vec<f64> {
        self.mean(&self.sxx)
    }
    pub fn mean_y2(&self) -> Vec<f64> {
        self.mean(&self.syy)
    }
    pub fn mean_z2(&self) -> Vec<f64> {
        self.mean(&self.szz)
    }
}
