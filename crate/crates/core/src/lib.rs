//! Neural associative memory over integer subspaces.
//!
//! Patterns are integer vectors drawn from a low-dimensional subspace. A
//! bipartite graph of sparse constraints orthogonal to that subspace is
//! learned from examples, and noisy queries are cleaned by iterative message
//! passing on the graph. The [`analysis`] module predicts the recall error
//! rate, and [`harness`] ties the stages into reproducible experiments.
//!
//! ```
//! use subspace_assoc::patterns::{capacity_check, ModelSpec};
//!
//! let spec = ModelSpec::new(11, 400, 200).unwrap();
//! assert_eq!(spec.m(), 200);
//! assert!(capacity_check(10, 2, 2, 11));
//! ```

pub mod analysis;
pub mod error;
pub mod graph;
pub mod harness;
pub mod learning;
pub mod linalg;
pub mod patterns;
pub mod recall;
pub mod seed;

mod io;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/patterns.md")]
    struct Patterns;
    #[doc = include_str!("../../../book/src/learning.md")]
    struct Learning;
    #[doc = include_str!("../../../book/src/recall.md")]
    struct Recall;
    #[doc = include_str!("../../../book/src/analysis.md")]
    struct Analysis;
    #[doc = include_str!("../../../book/src/expanders.md")]
    struct Expanders;
    #[doc = include_str!("../../../book/src/experiments.md")]
    struct Experiments;
}
