//! Numerical laboratory for functional inequalities on Carnot groups.
//!
//! The crate provides the abelian groups `ℝⁿ` and the first Heisenberg group,
//! their Carnot-Carathéodory distances, grid Hopf-Lax semigroups, Gibbs
//! measures `e^{−U(d)}/Z`, and checks for Poincaré, log-Sobolev, Talagrand and
//! hypercontractivity inequalities built on those pieces.

pub mod calculus;
pub mod eikonal;
pub mod error;
pub mod family;
pub mod functional;
pub mod grid;
pub mod group;
pub mod hopflax;
pub mod mcmc;
pub mod measure;
pub mod metric;
pub mod potential;
pub mod report;
mod simplex;
pub mod sum;
pub mod talagrand;
pub mod transport;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction};
pub use group::{CarnotGroup, StratifiedPoint};
