//! Random normal-form games and the prevalence of pure equilibria.
//!
//! The crate draws games whose utilities are independent (or copula-coupled,
//! or graph-restricted) draws from a continuous distribution, counts their
//! pure Nash, pure epsilon- and pure epsilon*-equilibria exactly, evaluates
//! the Poisson approximations for those counts together with their
//! Chen–Stein error bounds, and estimates shares of games by seeded Monte
//! Carlo.
//!
//! Module map:
//!
//! - [`dist`]: continuous utility distributions, hazard rates and tail classes.
//! - [`game`]: shapes, mixed-radix profile indexing, lines and utility tensors.
//! - [`generate`]: the i.i.d., Gaussian-copula and network game generators.
//! - [`graph`]: interaction graphs and the expander predicates.
//! - [`eq`]: deviation gains and the equilibrium counters.
//! - [`theory`]: the `p`/`q` integrals, Poisson tails and bound arithmetic.
//! - [`mc`]: share estimation, the figure grid and theory checks.
//! - [`cli`]: the command-line front end.

pub mod cli;
pub mod dist;
pub mod eq;
mod error;
pub mod game;
pub mod generate;
pub mod graph;
pub mod mc;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
