use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{GlgConfig, Problem};
use crate::lmm::LmmPair;
use crate::{RealMatrix, Result};

/// Mantegna scale for Lévy steps with exponent 3/2.
pub const LEVY_SIGMA: f64 = 0.696_574_502_557_696_8;
const LEVY_BETA: f64 = 1.5;

/// Cuckoo search over a box.
#[derive(Debug, Clone, PartialEq)]
pub struct CuckooSearch {
    pub nests: usize,
    pub discovery: f64,
    pub iters: usize,
    pub bounds: (f64, f64),
}

/// Outcome of a search.
#[derive(Debug, Clone, PartialEq)]
pub struct CsaResult {
    pub best: Vec<f64>,
    pub value: f64,
    /// Best value after initialization and after every iteration.
    pub history: Vec<f64>,
}

impl CuckooSearch {
    pub fn from_config(cfg: &GlgConfig) -> Self {
        Self {
            nests: cfg.csa_nests,
            discovery: cfg.csa_discovery,
            iters: cfg.csa_iters,
            bounds: cfg.csa_bounds,
        }
    }

    /// Minimizes `f` over `[low, high]^dim`. Nests are evaluated in
    /// parallel; all random draws come from one seeded stream, so the
    /// result does not depend on scheduling.
    pub fn minimize<F>(&self, dim: usize, seed: u64, f: F) -> Result<CsaResult>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        let (lo, hi) = self.bounds;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut nest: Vec<Vec<f64>> = (0..self.nests)
            .map(|_| (0..dim).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect())
            .collect();
        let mut fitness = vec![f64::INFINITY; self.nests];
        let candidates = nest.clone();
        let mut best = replace_better(&mut nest, &mut fitness, candidates, &f)?;
        let mut history = vec![fitness[best]];

        for _ in 0..self.iters {
            // Lévy flights around each nest, scaled by its offset from the best
            let anchor = nest[best].clone();
            let moved = nest
                .iter()
                .map(|s| {
                    s.iter()
                        .zip(&anchor)
                        .map(|(&v, &b)| {
                            let u: f64 = rng.sample::<f64, _>(StandardNormal) * LEVY_SIGMA;
                            let w: f64 = rng.sample(StandardNormal);
                            let step = u / w.abs().powf(1.0 / LEVY_BETA);
                            let z: f64 = rng.sample(StandardNormal);
                            (v + 0.01 * step * (v - b) * z).clamp(lo, hi)
                        })
                        .collect()
                })
                .collect();
            replace_better(&mut nest, &mut fitness, moved, &f)?;

            // abandon a fraction of nests via a biased random walk
            let mut p1: Vec<usize> = (0..self.nests).collect();
            let mut p2 = p1.clone();
            p1.shuffle(&mut rng);
            p2.shuffle(&mut rng);
            let scale: f64 = rng.random();
            let fresh = (0..self.nests)
                .map(|j| {
                    (0..dim)
                        .map(|d| {
                            let keep = rng.random::<f64>() > self.discovery;
                            let mut v = nest[j][d];
                            if keep {
                                v += scale * (nest[p1[j]][d] - nest[p2[j]][d]);
                            }
                            v.clamp(lo, hi)
                        })
                        .collect()
                })
                .collect();
            best = replace_better(&mut nest, &mut fitness, fresh, &f)?;
            history.push(fitness[best]);
        }
        Ok(CsaResult {
            best: nest[best].clone(),
            value: fitness[best],
            history,
        })
    }
}

/// Greedy per-nest replacement; returns the index of the best nest.
fn replace_better<F>(
    nest: &mut [Vec<f64>],
    fitness: &mut [f64],
    candidates: Vec<Vec<f64>>,
    f: &F,
) -> Result<usize>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let values: Vec<f64> = candidates
        .par_iter()
        .map(|c| f(c))
        .collect::<Result<Vec<_>>>()?;
    for (j, (c, v)) in candidates.into_iter().zip(values).enumerate() {
        if v <= fitness[j] {
            nest[j] = c;
            fitness[j] = v;
        }
    }
    let mut best = 0;
    for j in 1..fitness.len() {
        if fitness[j] < fitness[best] {
            best = j;
        }
    }
    Ok(best)
}

/// Splits a nest into `(Us, Ut)` row-major, floored at `eps`.
pub(crate) fn decode(v: &[f64], r: usize, m: usize, n: usize, eps: f64) -> LmmPair {
    let us = RealMatrix::from_row_slice(r, m, &v[..r * m]).map(|x| x.max(eps));
    let ut = RealMatrix::from_row_slice(r, n, &v[r * m..]).map(|x| x.max(eps));
    LmmPair::from_parts_unchecked(us, ut)
}

pub(crate) fn search(problem: &Problem, cfg: &GlgConfig, seed: u64) -> Result<(LmmPair, CsaResult)> {
    let (r, m, n) = (problem.r(), problem.m(), problem.n());
    let res = CuckooSearch::from_config(cfg).minimize(r * (m + n), seed, |v| {
        problem.cost(&decode(v, r, m, n, cfg.eps_pos))
    })?;
    Ok((decode(&res.best, r, m, n, cfg.eps_pos), res))
}

/// Cuckoo-search initialization of the maps for equal-row inputs.
pub fn csa_init(xs: &RealMatrix, xt: &RealMatrix, cfg: &GlgConfig) -> Result<LmmPair> {
    let problem = Problem::new(xs, xt, cfg)?;
    Ok(search(&problem, cfg, cfg.seed)?.0)
}
