//! Heterogeneous unsupervised domain adaptation with linear monotonic maps.
//!
//! Two domains with different feature counts are mapped to a common
//! dimension by strictly positive matrices chosen so that the principal
//! angles between the spanned subspaces survive the mapping. A geodesic flow
//! kernel then aligns the mapped domains and an RBF SVM transfers labels.
//!
//! The crate is organised bottom up:
//!
//! - [`subspace`]: spanning bases, principal cosines, the pair metric.
//! - [`eds`]: eigenpair derivatives of `X Xᵀ`.
//! - [`lmm`]: linear monotonic maps.
//! - [`optim`]: the cost, its gradient, cuckoo search and the fitting loop.
//! - [`gfk`]: the geodesic flow kernel.
//! - [`mlkit`]: zscore, SVM, k-means, k-fold, MMD.
//! - [`datasets`]: loading, sampling and the task registry.
//! - [`bench`]: baselines, runs and reports.

pub mod bench;
pub mod datasets;
pub mod eds;
pub mod error;
pub mod gfk;
pub mod lmm;
pub mod mlkit;
pub mod optim;
pub mod subspace;

pub use error::{Error, Result};

/// Dense real matrix. Rows are instances, columns are features.
pub type RealMatrix = nalgebra::DMatrix<f64>;

/// Independent seed for a named stage, derived with SplitMix64.
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
