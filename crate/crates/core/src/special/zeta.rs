//! Complex root `ζ₀(v)` of `e^ζ = 1 − vζ` near `ξ(v) − iπ`, and the envelope
//! `R(v)` built from it.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::special::big_i::big_i;
use crate::special::xi::xi;

pub const DEFAULT_V1: f64 = 10.0;
/// Value used for `R(v)` below the cutoff, where only `R(v) = O(1)` is known.
pub const R_BELOW_CUTOFF: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Zeta0 {
    pub v: f64,
    pub zeta0: Complex64,
    /// `R(v)`; may underflow to zero for large `v`, `ln_r` stays finite.
    pub r: f64,
    pub ln_r: f64,
    /// `log W(v)` with `W = e^{−vζ₀ − I(ζ₀)} / (ζ₀ sqrt(2πv(1 − 1/ζ₀)))`,
    /// so that `R = |W|`.
    pub ln_amplitude: Complex64,
}

/// `R(v)` either from `ζ₀` or the constant convention below `v₁`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct REnvelope {
    pub v: f64,
    pub ln_r: f64,
    pub below_cutoff: bool,
}

impl REnvelope {
    pub fn value(&self) -> f64 {
        self.ln_r.exp()
    }
}

pub fn zeta0_r(v: f64) -> Result<Zeta0> {
    zeta0_r_with_cutoff(v, DEFAULT_V1)
}

pub fn zeta0_r_with_cutoff(v: f64, v1: f64) -> Result<Zeta0> {
    if !(v >= v1) || !v.is_finite() {
        return Err(domain(format!("zeta0 needs v ≥ {v1}, got {v}")));
    }
    let x = xi(v)?.xi;
    let centre = Complex64::new(x, -PI);
    let mut z = Complex64::new(x + PI * PI / (2.0 * x * x), -PI * x / (x - 1.0));
    let mut converged = false;
    for _ in 0..100 {
        let ez = z.exp();
        let f = ez - 1.0 + v * z;
        let df = ez + v;
        let step = f / df;
        z -= step;
        if (z - centre).norm() > PI * (1.0 + 1e-12) {
            return Err(Error::Convergence(format!(
                "zeta0 Newton left the disc around xi - i*pi at v = {v}"
            )));
        }
        if step.norm() <= 1e-15 * (1.0 + z.norm()) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence(format!(
            "zeta0 Newton did not converge in 100 iterations at v = {v}"
        )));
    }
    let ln_amplitude = -v * z
        - big_i(z)?
        - z.ln()
        - 0.5 * (2.0 * PI * v * (Complex64::new(1.0, 0.0) - z.inv())).ln();
    let ln_r = ln_amplitude.re;
    Ok(Zeta0 {
        v,
        zeta0: z,
        r: ln_r.exp(),
        ln_r,
        ln_amplitude,
    })
}

/// Below this the oscillating term is not used in place of the mesh.
pub const OSCILLATION_FROM: f64 = 4.0;

/// Leading oscillating term `−2e^{−γ} Re W(v)` of `ω(v) − e^{−γ}`, with
/// relative error `O(1/v)`. It tracks the mesh to about 1% on `[5, 9]` and
/// stays meaningful past the point where the mesh difference is rounding
/// noise.
pub fn buchstab_oscillation(v: f64) -> Result<f64> {
    let z = zeta0_r_with_cutoff(v, OSCILLATION_FROM)?;
    Ok(-2.0 * crate::special::grid::E_NEG_GAMMA * z.ln_amplitude.exp().re)
}

/// `R(v)` for any `v ≥ 1`; below `v₁` it is the constant `R_BELOW_CUTOFF`.
pub fn r_envelope(v: f64, v1: f64) -> Result<REnvelope> {
    if !(v >= 1.0) {
        return Err(domain(format!("R(v) needs v ≥ 1, got {v}")));
    }
    if v < v1 {
        return Ok(REnvelope {
            v,
            ln_r: R_BELOW_CUTOFF.ln(),
            below_cutoff: true,
        });
    }
    let z = zeta0_r_with_cutoff(v, v1)?;
    Ok(REnvelope {
        v,
        ln_r: z.ln_r,
        below_cutoff: false,
    })
}
