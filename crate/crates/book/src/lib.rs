//! Compiles and runs the guide's code snippets as doc-tests.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}

#[doc = include_str!("../../../book/src/subspaces.md")]
pub mod subspaces {}

#[doc = include_str!("../../../book/src/eigen_derivatives.md")]
pub mod eigen_derivatives {}

#[doc = include_str!("../../../book/src/cost_and_gradient.md")]
pub mod cost_and_gradient {}

#[doc = include_str!("../../../book/src/optimizer.md")]
pub mod optimizer {}

#[doc = include_str!("../../../book/src/gfk.md")]
pub mod gfk {}

#[doc = include_str!("../../../book/src/classification.md")]
pub mod classification {}

#[doc = include_str!("../../../book/src/benchmark.md")]
pub mod benchmark {}
