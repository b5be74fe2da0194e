pub mod cli;
pub mod data;
pub mod error;
pub mod factorize;
pub mod graph;
pub mod hsic;
pub mod kmeans;
pub mod linalg;
pub mod metrics;
pub mod solver;

pub use error::{MvmcError, Result};

// Compiles and runs the guide's snippets as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/diversity.md")]
    mod diversity {}
    #[doc = include_str!("../../../book/src/factorization.md")]
    mod factorization {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/coclustering.md")]
    mod coclustering {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
