//! Densities of permutations with restricted cycle lengths, their asymptotic
//! approximations, and total variation distances to the limiting Poisson law.

// `!(x >= a)` rejects NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod dtv;
pub mod error;
pub mod exact;
pub mod numeric;
pub mod quadrature;
pub mod special;

pub use asymptotics::{Estimate, KappaBoundParams, Quantity, Regime, SaddlePoint};
pub use dtv::{DtvResult, HGrid};
pub use error::{Error, Result};
pub use exact::{
    harmonic, kappa_table, nu_table, oracle_count, Backend, CycleConstraint, CycleTypeOracleResult,
    DensityKind, DensityTable, HarmonicValue, Limits,
};
pub use special::{SpecialFunction, SpecialGrid, SpecialGrids, Zeta0};
