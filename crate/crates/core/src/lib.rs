//! Open-system simulation of NV-center ensembles coupled to a lossy cavity.

pub mod cumulant;
pub mod dicke;
pub mod error;
pub mod io;
pub mod linalg;
pub mod liouville;
pub mod models;
pub mod observables;
pub mod operators;
pub mod solvers;
pub mod sparse;
pub mod support;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/backends.md")]
    mod backends {}
    #[doc = include_str!("../../../book/src/steady-state.md")]
    mod steady_state {}
    #[doc = include_str!("../../../book/src/correlations.md")]
    mod correlations {}
    #[doc = include_str!("../../../book/src/meanfield.md")]
    mod meanfield {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
