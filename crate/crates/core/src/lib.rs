pub mod convergence;
pub mod effective;
pub mod error;
pub mod expansion;
pub mod geometry;
pub mod graphs;
pub mod interactions;
pub mod mc;
pub mod oracle;
pub mod validation;

pub use error::{Error, Result, Warning};
pub use mc::MCEstimate;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/effective.md")]
    mod effective {}
    #[doc = include_str!("../../../book/src/expansion.md")]
    mod expansion {}
    #[doc = include_str!("../../../book/src/convergence.md")]
    mod convergence {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
