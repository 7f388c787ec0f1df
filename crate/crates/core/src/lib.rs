//! Random multiplicative functions, the unit-circle moments of their
//! trigonometric polynomials, and the Diophantine point counts those moments
//! equal in expectation.
//!
//! | module | contents |
//! |---|---|
//! | [`arith`] | sieve, factorizations, squarefree kernels, divisor functions |
//! | [`rmf`] | Rademacher and Steinhaus samples, Fekete and Liouville sequences, sample tables |
//! | [`poly`] | FFT grid evaluation, exact moments, certified sup norms |
//! | [`dcount`] | exact solution counts by meet-in-the-middle |
//! | [`vw`] | triangular and rectangular array factorizations |
//! | [`stats`] | Monte Carlo estimators, CLT measure, sup-norm ensembles |
//! | [`config`], [`record`], [`runner`] | experiment files, result records, subcommand dispatch |

pub mod arith;
pub mod config;
pub mod dcount;
pub mod error;
pub mod poly;
pub mod record;
pub mod rmf;
pub mod runner;
pub mod stats;
pub mod vw;

pub use error::{Error, Result};
pub use rmf::{RmfKind, SeedSpec};
