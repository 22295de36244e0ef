//! Special functions: `ξ`, `I`, the Dickman and Buchstab functions, `ζ₀` and `R`.

pub mod big_i;
pub mod cache;
pub mod grid;
pub mod xi;
pub mod zeta;

use std::sync::OnceLock;

use crate::error::Result;
pub use big_i::{big_i, big_i_real, big_i_series, BIG_I_MAX_MODULUS};
pub use grid::{
    buchstab, buchstab_extended, buchstab_sign_changes, dickman, dickman_closed_form_ln,
    dickman_ln, SpecialFunction, SpecialGrid, E_NEG_GAMMA,
};
pub use xi::{xi, XiValue};
pub use zeta::{r_envelope, zeta0_r, REnvelope, Zeta0};

/// A Dickman grid and a Buchstab grid used together.
#[derive(Clone, Debug)]
pub struct SpecialGrids {
    pub dickman: SpecialGrid,
    pub buchstab: SpecialGrid,
}

impl SpecialGrids {
    pub fn build(steps_per_unit: usize) -> Result<Self> {
        Ok(Self {
            dickman: SpecialGrid::build(
                SpecialFunction::Dickman,
                grid::DEFAULT_DICKMAN_V_MAX,
                steps_per_unit,
            )?,
            buchstab: SpecialGrid::build(
                SpecialFunction::Buchstab,
                grid::DEFAULT_BUCHSTAB_V_MAX,
                steps_per_unit,
            )?,
        })
    }

    /// Process-wide grids at the default mesh, built on first use.
    pub fn shared() -> &'static SpecialGrids {
        static GRIDS: OnceLock<SpecialGrids> = OnceLock::new();
        GRIDS.get_or_init(|| {
            SpecialGrids::build(grid::DEFAULT_STEPS_PER_UNIT).expect("default grids build")
        })
    }

    pub fn rho(&self, v: f64) -> Result<f64> {
        dickman(v, &self.dickman)
    }

    pub fn rho_ln(&self, v: f64) -> Result<f64> {
        dickman_ln(v, &self.dickman)
    }

    pub fn omega(&self, v: f64) -> Result<f64> {
        buchstab(v, &self.buchstab)
    }
}
