use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::csa::search;
use super::{GlgConfig, Problem};
use crate::gfk::{default_dim, gfk_embed, gfk_kernel};
use crate::lmm::{apply_lmm, project_positive, LmmPair};
use crate::mlkit::zscore;
use crate::{derive_seed, Error, RealMatrix, Result};

const STREAM_ROWS_S: u64 = 1;
const STREAM_ROWS_T: u64 = 2;
const STREAM_CSA: u64 = 3;
const STREAM_REINIT: u64 = 4;

/// Why the descent stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    /// `|ΔJ1|` fell below the tolerance.
    Converged,
    /// The iteration budget ran out.
    MaxIter,
    /// No step size reduced the cost.
    Stalled,
}

/// One accepted iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub j1: f64,
    pub eta: f64,
    pub grad_norm_s: f64,
    pub grad_norm_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitTrace {
    /// Cost at the starting point of the descent.
    pub initial_j1: f64,
    pub records: Vec<IterRecord>,
    pub terminal: Terminal,
    /// Set when a stalled first iteration triggered a second search.
    pub reinitialized: bool,
    /// Rows used for spanning after equalization.
    pub rows_used: usize,
}

impl FitTrace {
    pub fn final_j1(&self) -> f64 {
        self.records.last().map_or(self.initial_j1, |r| r.j1)
    }

    fn first_step_failed(&self) -> bool {
        self.records.first().map_or(true, |r| r.j1 >= self.initial_j1)
    }
}

/// Adapted domains together with the fitted maps.
#[derive(Debug, Clone)]
pub struct Adapted {
    pub xs: RealMatrix,
    pub xt: RealMatrix,
    pub maps: LmmPair,
    pub trace: FitTrace,
}

/// Subsamples both domains, without replacement, to
/// `min(Ns, Nt, cap)` rows. Row order is preserved.
pub fn equalize_rows(
    xs: &RealMatrix,
    xt: &RealMatrix,
    cap: usize,
    seed: u64,
) -> (RealMatrix, RealMatrix) {
    let n = xs.nrows().min(xt.nrows()).min(cap);
    let pick = |x: &RealMatrix, stream: u64| {
        if x.nrows() == n {
            return x.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, stream));
        let mut idx = rand::seq::index::sample(&mut rng, x.nrows(), n).into_vec();
        idx.sort_unstable();
        x.select_rows(&idx)
    };
    (pick(xs, STREAM_ROWS_S), pick(xt, STREAM_ROWS_T))
}

/// Projected descent from a given starting pair. Inputs must share their
/// row count.
pub fn fit_from(
    xs: &RealMatrix,
    xt: &RealMatrix,
    init: LmmPair,
    cfg: &GlgConfig,
) -> Result<(LmmPair, FitTrace)> {
    let problem = Problem::new(xs, xt, cfg)?;
    descend(&problem, init, cfg)
}

/// Fits the maps: equalize rows, cuckoo search, projected descent.
pub fn fit_glg(xs: &RealMatrix, xt: &RealMatrix, cfg: &GlgConfig) -> Result<(LmmPair, FitTrace)> {
    cfg.validate()?;
    let (xs_e, xt_e) = equalize_rows(xs, xt, cfg.span_cap, cfg.seed);
    let problem = Problem::new(&xs_e, &xt_e, cfg)?;
    let (init, _) = search(&problem, cfg, derive_seed(cfg.seed, STREAM_CSA))?;
    let (maps, trace) = descend(&problem, init, cfg)?;
    if !trace.first_step_failed() {
        return Ok((maps, trace));
    }
    let (init, _) = search(&problem, cfg, derive_seed(cfg.seed, STREAM_REINIT))?;
    let (maps2, mut trace2) = descend(&problem, init, cfg)?;
    trace2.reinitialized = true;
    if trace2.final_j1() <= trace.final_j1() {
        Ok((maps2, trace2))
    } else {
        let mut trace = trace;
        trace.reinitialized = true;
        Ok((maps, trace))
    }
}

fn descend(problem: &Problem, init: LmmPair, cfg: &GlgConfig) -> Result<(LmmPair, FitTrace)> {
    let mut cur = init;
    let mut j = problem.cost(&cur)?;
    let mut trace = FitTrace {
        initial_j1: j,
        records: Vec::new(),
        terminal: Terminal::MaxIter,
        reinitialized: false,
        rows_used: problem.xs().nrows(),
    };
    for _ in 0..cfg.max_iter {
        let (gs, gt) = problem.gradient(&cur)?;
        let candidates: Vec<(f64, LmmPair, f64)> = cfg
            .eta_grid
            .par_iter()
            .map(|&eta| {
                let cand = LmmPair::from_parts_unchecked(
                    project_positive(&(cur.us() - &gs * eta), cfg.eps_pos),
                    project_positive(&(cur.ut() - &gt * eta), cfg.eps_pos),
                );
                problem.cost(&cand).map(|c| (eta, cand, c))
            })
            .collect::<Result<_>>()?;
        let mut best = 0;
        for k in 1..candidates.len() {
            if candidates[k].2 < candidates[best].2 {
                best = k;
            }
        }
        let (eta, cand, c) = candidates.into_iter().nth(best).expect("non-empty grid");
        if c > j {
            trace.terminal = Terminal::Stalled;
            return Ok((cur, trace));
        }
        let change = j - c;
        cur = cand;
        j = c;
        trace.records.push(IterRecord {
            j1: c,
            eta,
            grad_norm_s: gs.norm(),
            grad_norm_t: gt.norm(),
        });
        if change < cfg.err_tol {
            trace.terminal = Terminal::Converged;
            return Ok((cur, trace));
        }
    }
    Ok((cur, trace))
}

/// Maps both full domains, zscores the images and aligns them with the
/// geodesic flow kernel.
pub fn adapt_with_maps(
    xs: &RealMatrix,
    xt: &RealMatrix,
    maps: &LmmPair,
    gfk_dim: Option<usize>,
) -> Result<(RealMatrix, RealMatrix)> {
    let hs = zscore(&apply_lmm(xs, maps.us())?);
    let ht = zscore(&apply_lmm(xt, maps.ut())?);
    let d = gfk_dim.unwrap_or_else(|| default_dim(maps.r()));
    let kern = gfk_kernel(&hs, &ht, d)?;
    Ok((gfk_embed(&hs, &kern)?, gfk_embed(&ht, &kern)?))
}

/// Fits the maps and returns the adapted full domains.
pub fn adapt_glg(
    xs: &RealMatrix,
    xt: &RealMatrix,
    cfg: &GlgConfig,
    gfk_dim: Option<usize>,
) -> Result<Adapted> {
    if xs.nrows() < 2 || xt.nrows() < 2 {
        return Err(Error::Dimension("each domain needs at least two rows".into()));
    }
    let (maps, trace) = fit_glg(xs, xt, cfg)?;
    let (a, b) = adapt_with_maps(xs, xt, &maps, gfk_dim)?;
    Ok(Adapted {
        xs: a,
        xt: b,
        maps,
        trace,
    })
}
