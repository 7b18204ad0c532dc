//! The geometry-consistency cost, its gradient, and the fitting loop.
//!
//! [`cost_j1`] integrates the ℓ1 gap between the principal cosines of the
//! raw pair `(Xs^δ, Xt^δ)` and the mapped pair `(Xs^δ Usᵀ, Xt^δ Utᵀ)` over
//! `δ ∈ [0, δ0]`, where `X^δ = X + δ·1`, and adds trace regularizers.
//! [`fit_glg`] seeds the maps with cuckoo search and then runs projected
//! gradient descent over a fixed step-size grid.

mod cost;
mod csa;
mod fit;
mod simpson;

use serde::{Deserialize, Serialize};

pub use cost::{cost_j1, grad_j1, j1_integrand, Problem};
pub use csa::{csa_init, CsaResult, CuckooSearch, LEVY_SIGMA};
pub use fit::{
    adapt_glg, adapt_with_maps, equalize_rows, fit_from, fit_glg, Adapted, FitTrace, IterRecord,
    Terminal,
};
pub use simpson::{simpson_integrate, simpson_nodes};

use crate::lmm::EPS_POS;

/// Optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlgConfig {
    pub delta0: f64,
    pub panels: usize,
    pub max_iter: usize,
    pub err_tol: f64,
    pub eta_grid: Vec<f64>,
    /// `None` selects `0.01 / (m r)`, or 0 when `m = n`.
    pub lambda_s: Option<f64>,
    /// `None` selects `0.01 / (n r)`, or 0 when `m = n`.
    pub lambda_t: Option<f64>,
    pub csa_nests: usize,
    pub csa_discovery: f64,
    pub csa_iters: usize,
    pub csa_bounds: (f64, f64),
    pub seed: u64,
    pub eps_pos: f64,
    pub span_cap: usize,
}

impl Default for GlgConfig {
    fn default() -> Self {
        Self {
            delta0: 0.01,
            panels: 10,
            max_iter: 100,
            err_tol: 1e-5,
            eta_grid: vec![0.01, 0.05, 0.1, 0.2, 0.5, 1.0, 5.0, 20.0],
            lambda_s: None,
            lambda_t: None,
            csa_nests: 30,
            csa_discovery: 0.25,
            csa_iters: 100,
            csa_bounds: (0.0, 1.0),
            seed: 0,
            eps_pos: EPS_POS,
            span_cap: 600,
        }
    }
}

impl GlgConfig {
    /// Regularization weights for feature counts `m` and `n`.
    pub fn lambdas(&self, m: usize, n: usize) -> (f64, f64) {
        let r = m.min(n) as f64;
        let (ds, dt) = if m == n {
            (0.0, 0.0)
        } else {
            (0.01 / (m as f64 * r), 0.01 / (n as f64 * r))
        };
        (self.lambda_s.unwrap_or(ds), self.lambda_t.unwrap_or(dt))
    }

    pub(crate) fn validate(&self) -> crate::Result<()> {
        let bad = |msg: &str| Err(crate::Error::Invalid(msg.to_string()));
        if !(self.delta0 > 0.0) {
            return bad("delta0 must be positive");
        }
        if self.panels == 0 {
            return bad("panels must be at least 1");
        }
        if self.eta_grid.is_empty() {
            return bad("eta_grid must not be empty");
        }
        if self.csa_nests < 2 {
            return bad("csa_nests must be at least 2");
        }
        if !(self.csa_bounds.0 < self.csa_bounds.1) {
            return bad("csa_bounds must satisfy low < high");
        }
        if !(self.eps_pos > 0.0) {
            return bad("eps_pos must be positive");
        }
        if self.span_cap < 2 {
            return bad("span_cap must be at least 2");
        }
        Ok(())
    }
}
