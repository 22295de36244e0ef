//! Mesh tables for the Dickman function `ρ` and the Buchstab function `ω`.
//!
//! Both satisfy delay equations with kinks at the integers, so the mesh is
//! uniform inside each unit interval and every interval boundary is a knot.
//! Values between knots come from a cubic Lagrange interpolant whose stencil
//! never crosses an integer.
//!
//! `ρ` is advanced through the positive identity `v ρ(v) = ∫_{v-1}^{v} ρ(t) dt`
//! rather than `ρ(v) = ρ(k) − ∫_k^v ρ(t-1)/t dt`; the latter subtracts nearly
//! equal numbers once `ρ` has decayed and loses all relative accuracy by
//! `v ≈ 12`. `ω` stays in `[1/2, 1]` and is advanced explicitly through
//! `v ω(v) = k ω(k) + ∫_{k-1}^{v-1} ω(t) dt`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numeric::{ln_gamma, EULER_GAMMA};
use crate::special::big_i::big_i_real;
use crate::special::xi::xi;

pub const DEFAULT_STEPS_PER_UNIT: usize = 1024;
pub const DEFAULT_DICKMAN_V_MAX: usize = 100;
pub const DEFAULT_BUCHSTAB_V_MAX: usize = 40;
/// Beyond this point `ρ` is taken from its closed saddle-point form, whose
/// relative error (about `0.07/v`) is below `1e-3` from `v ≈ 70` on.
pub const DEFAULT_DICKMAN_CROSSOVER: f64 = 90.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecialFunction {
    Dickman,
    Buchstab,
}

impl SpecialFunction {
    pub fn name(&self) -> &'static str {
        match self {
            SpecialFunction::Dickman => "dickman",
            SpecialFunction::Buchstab => "buchstab",
        }
    }

    fn v_start(&self) -> usize {
        match self {
            SpecialFunction::Dickman => 0,
            SpecialFunction::Buchstab => 1,
        }
    }
}

/// Knot values of `ρ` on `[0, v_max]` or `ω` on `[1, v_max]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpecialGrid {
    function: SpecialFunction,
    steps_per_unit: usize,
    v_max: usize,
    knots: Vec<f64>,
    asymptotic_crossover: f64,
}

impl SpecialGrid {
    pub fn dickman(v_max: usize) -> Result<Self> {
        Self::build(SpecialFunction::Dickman, v_max, DEFAULT_STEPS_PER_UNIT)
    }

    pub fn buchstab(v_max: usize) -> Result<Self> {
        Self::build(SpecialFunction::Buchstab, v_max, DEFAULT_STEPS_PER_UNIT)
    }

    pub fn build(function: SpecialFunction, v_max: usize, steps_per_unit: usize) -> Result<Self> {
        if steps_per_unit < 4 {
            return Err(Error::Config(format!(
                "need at least 4 mesh steps per unit interval, got {steps_per_unit}"
            )));
        }
        if v_max < function.v_start() + 2 {
            return Err(Error::Config(format!(
                "{} grid needs v_max ≥ {}, got {v_max}",
                function.name(),
                function.v_start() + 2
            )));
        }
        let knots = match function {
            SpecialFunction::Dickman => build_dickman(v_max, steps_per_unit),
            SpecialFunction::Buchstab => build_buchstab(v_max, steps_per_unit),
        };
        let asymptotic_crossover = match function {
            SpecialFunction::Dickman => DEFAULT_DICKMAN_CROSSOVER.min(v_max as f64),
            SpecialFunction::Buchstab => v_max as f64,
        };
        Ok(Self {
            function,
            steps_per_unit,
            v_max,
            knots,
            asymptotic_crossover,
        })
    }

    pub(crate) fn from_parts(
        function: SpecialFunction,
        steps_per_unit: usize,
        v_max: usize,
        knots: Vec<f64>,
        asymptotic_crossover: f64,
    ) -> Result<Self> {
        let expected = (v_max - function.v_start()) * steps_per_unit + 1;
        if knots.len() != expected {
            return Err(Error::GridFile(format!(
                "expected {expected} knots, found {}",
                knots.len()
            )));
        }
        Ok(Self {
            function,
            steps_per_unit,
            v_max,
            knots,
            asymptotic_crossover,
        })
    }

    /// Overrides the point past which `ρ` uses its closed form.
    pub fn with_crossover(mut self, crossover: f64) -> Self {
        self.asymptotic_crossover = crossover.min(self.v_max as f64);
        self
    }

    pub fn function(&self) -> SpecialFunction {
        self.function
    }

    pub fn mesh_step(&self) -> f64 {
        1.0 / self.steps_per_unit as f64
    }

    pub fn steps_per_unit(&self) -> usize {
        self.steps_per_unit
    }

    pub fn v_min(&self) -> f64 {
        self.function.v_start() as f64
    }

    pub fn v_max(&self) -> f64 {
        self.v_max as f64
    }

    pub(crate) fn v_max_units(&self) -> usize {
        self.v_max
    }

    pub fn asymptotic_crossover(&self) -> f64 {
        self.asymptotic_crossover
    }

    pub fn knot_values(&self) -> &[f64] {
        &self.knots
    }

    /// `(v, value)` pairs.
    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = self.mesh_step();
        let start = self.v_min();
        self.knots
            .iter()
            .enumerate()
            .map(move |(i, &y)| (start + i as f64 * h, y))
    }

    /// Interpolated mesh value, `None` outside `[v_min, v_max]`.
    pub fn stepwise(&self, v: f64) -> Option<f64> {
        let start = self.v_min();
        if !(v >= start && v <= self.v_max()) {
            return None;
        }
        let n = self.steps_per_unit;
        let mut unit = v.floor() as usize;
        if unit >= self.v_max {
            unit = self.v_max - 1;
        }
        let local = (v - unit as f64) * n as f64;
        let base = (unit - self.function.v_start()) * n;
        let piece = &self.knots[base..=base + n];
        Some(lagrange4(piece, local))
    }
}

// Cubic interpolation inside one unit piece (n + 1 knots), local coordinate
// in mesh steps.
fn lagrange4(piece: &[f64], t: f64) -> f64 {
    let n = piece.len() - 1;
    let i0 = (t.floor() as usize).min(n - 1);
    if (t - i0 as f64).abs() == 0.0 {
        return piece[i0];
    }
    let s = i0.saturating_sub(1).min(n - 3);
    let x = t - s as f64;
    let (y0, y1, y2, y3) = (piece[s], piece[s + 1], piece[s + 2], piece[s + 3]);
    let l0 = -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0;
    let l1 = x * (x - 2.0) * (x - 3.0) / 2.0;
    let l2 = -x * (x - 1.0) * (x - 3.0) / 2.0;
    let l3 = x * (x - 1.0) * (x - 2.0) / 6.0;
    y0 * l0 + y1 * l1 + y2 * l2 + y3 * l3
}

/// Integral over step `[t_j, t_{j+1}]` of a piece sampled at `n + 1` knots;
/// fourth order, using one-sided stencils at both ends.
fn step_integral(f: &[f64], j: usize, h: f64) -> f64 {
    let n = f.len() - 1;
    let w = h / 24.0;
    if j == 0 {
        w * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
    } else if j == n - 1 {
        w * (f[n - 3] - 5.0 * f[n - 2] + 19.0 * f[n - 1] + 9.0 * f[n])
    } else {
        w * (-f[j - 1] + 13.0 * f[j] + 13.0 * f[j + 1] - f[j + 2])
    }
}

fn build_dickman(v_max: usize, n: usize) -> Vec<f64> {
    let h = 1.0 / n as f64;
    let mut knots = Vec::with_capacity(v_max * n + 1);
    // [0, 1]
    knots.extend(std::iter::repeat_n(1.0, n + 1));
    // [1, 2]: ρ = 1 − log v
    for i in 1..=n {
        let v = 1.0 + i as f64 * h;
        knots.push(1.0 - v.ln());
    }
    for k in 2..v_max {
        let prev = &knots[(k - 1) * n..=k * n];
        // tail[i] = ∫_{k-1+ih}^{k} ρ
        let mut tail = vec![0.0; n + 1];
        for j in (0..n).rev() {
            tail[j] = tail[j + 1] + step_integral(prev, j, h);
        }
        // initial guess: previous piece rescaled to the new left value
        let scale = prev[n] / prev[0];
        let mut cur: Vec<f64> = prev.iter().map(|&y| y * scale).collect();
        cur[0] = prev[n];
        for _sweep in 0..60 {
            let mut max_change = 0.0f64;
            let mut head = 0.0; // ∫_k^{k+ih} ρ
            for i in 1..=n {
                head += step_integral(&cur, i - 1, h);
                let v = k as f64 + i as f64 * h;
                let next = (tail[i] + head) / v;
                max_change = max_change.max(((next - cur[i]) / next).abs());
                cur[i] = next;
            }
            if max_change < 4.0 * f64::EPSILON {
                break;
            }
        }
        knots.extend_from_slice(&cur[1..]);
    }
    knots
}

fn build_buchstab(v_max: usize, n: usize) -> Vec<f64> {
    let h = 1.0 / n as f64;
    let mut knots = Vec::with_capacity((v_max - 1) * n + 1);
    // [1, 2]: ω = 1/v
    for i in 0..=n {
        knots.push(1.0 / (1.0 + i as f64 * h));
    }
    // [2, 3]: v ω = 1 + log(v − 1)
    for i in 1..=n {
        let v = 2.0 + i as f64 * h;
        knots.push((1.0 + (v - 1.0).ln()) / v);
    }
    for k in 3..v_max {
        let base = (k - 2) * n;
        let prev: Vec<f64> = knots[base..=base + n].to_vec();
        let left = k as f64 * knots[base + n];
        let mut head = 0.0;
        for i in 1..=n {
            head += step_integral(&prev, i - 1, h);
            let v = k as f64 + i as f64 * h;
            knots.push((left + head) / v);
        }
    }
    knots
}

/// Closed saddle-point form of `log ρ(v)`:
/// `γ − vξ + I(ξ) − ½ log(2π(v + (1 − v)/ξ))`, accurate to `O(1/v)` relative.
pub fn dickman_closed_form_ln(v: f64) -> Result<f64> {
    if !(v >= 1.0) {
        return Err(domain(format!("closed form of rho needs v ≥ 1, got {v}")));
    }
    let x = xi(v)?;
    if x.xi == 0.0 {
        // v = 1: the bracket tends to 1/ξ'(1) = 1/2
        return Ok(EULER_GAMMA - 0.5 * (std::f64::consts::PI).ln());
    }
    let spread = 1.0 / x.xi_prime;
    Ok(EULER_GAMMA - v * x.xi + big_i_real(x.xi)?
        - 0.5 * (2.0 * std::f64::consts::PI * spread).ln())
}

/// Dickman function `ρ(v)`.
pub fn dickman(v: f64, grid: &SpecialGrid) -> Result<f64> {
    Ok(dickman_ln(v, grid)?.exp())
}

/// `log ρ(v)`; stays finite where `ρ` itself underflows.
pub fn dickman_ln(v: f64, grid: &SpecialGrid) -> Result<f64> {
    check_kind(grid, SpecialFunction::Dickman)?;
    if !(v >= 0.0) {
        return Err(domain(format!("rho(v) needs v ≥ 0, got {v}")));
    }
    if v <= 1.0 {
        return Ok(0.0);
    }
    if v <= grid.asymptotic_crossover() {
        if let Some(y) = grid.stepwise(v) {
            return Ok(y.ln());
        }
    }
    dickman_closed_form_ln(v)
}

/// Buchstab function `ω(v)` for `v ≥ 1`; `e^{-γ}` past the end of the mesh.
pub fn buchstab(v: f64, grid: &SpecialGrid) -> Result<f64> {
    check_kind(grid, SpecialFunction::Buchstab)?;
    if !(v >= 1.0) {
        return Err(domain(format!("omega(v) needs v ≥ 1, got {v}")));
    }
    if v <= 2.0 {
        return Ok(1.0 / v);
    }
    Ok(grid.stepwise(v).unwrap_or(E_NEG_GAMMA))
}

/// `ω(v)` extended by zero below `v = 1`.
pub fn buchstab_extended(v: f64, grid: &SpecialGrid) -> f64 {
    if v < 1.0 {
        0.0
    } else {
        buchstab(v, grid).unwrap_or(E_NEG_GAMMA)
    }
}

pub const E_NEG_GAMMA: f64 = 0.561_459_483_566_885_2;

/// Points where `ω(v) − e^{-γ}` changes sign on the mesh, ignoring knots
/// where the difference is below `noise_floor` in magnitude.
pub fn buchstab_sign_changes(grid: &SpecialGrid, noise_floor: f64) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for (v, y) in grid.knots() {
        let d = y - E_NEG_GAMMA;
        if d.abs() <= noise_floor {
            continue;
        }
        if let Some((v0, d0)) = last {
            if d0.signum() != d.signum() {
                let (mut lo, mut hi) = (v0, v);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    let dm = grid.stepwise(mid).unwrap() - E_NEG_GAMMA;
                    if dm.signum() == d0.signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
        }
        last = Some((v, d));
    }
    roots
}

/// Upper bound `1/Γ(v + 1)` for `ρ(v)`, `v ≥ 1`.
pub fn dickman_gamma_bound_ln(v: f64) -> f64 {
    -ln_gamma(v + 1.0)
}

fn check_kind(grid: &SpecialGrid, want: SpecialFunction) -> Result<()> {
    if grid.function() != want {
        return Err(Error::Config(format!(
            "expected a {} grid, got a {} grid",
            want.name(),
            grid.function().name()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rho_grid() -> SpecialGrid {
        SpecialGrid::dickman(40).unwrap()
    }

    #[test]
    fn dickman_simple_values() {
        let g = rho_grid();
        assert_eq!(dickman(0.5, &g).unwrap(), 1.0);
        assert!((dickman(1.5, &g).unwrap() - (1.0 - 1.5f64.ln())).abs() < 1e-15);
        assert!((dickman(2.0, &g).unwrap() - (1.0 - 2.0f64.ln())).abs() < 1e-15);
        assert!(dickman(-0.1, &g).is_err());
    }

    #[test]
    fn dickman_on_two_three_matches_closed_expression() {
        // ρ(v) = 1 − (1 − log(v−1)) log v + ∫_2^v log(t−1)/t dt on [2,3];
        // check ρ(3) = 0.04860838829...
        let g = rho_grid();
        let r3 = dickman(3.0, &g).unwrap();
        assert!((r3 - 0.048_608_388_291_131_9).abs() < 1e-13, "{r3}");
    }

    #[test]
    fn dickman_known_values() {
        // tabulated values of ρ
        let g = rho_grid();
        let cases = [
            (4.0, 4.910_925_648_221_8e-3),
            (5.0, 3.547_247_004_556_9e-4),
            (10.0, 2.770_171_837_725_3e-11),
        ];
        for (v, expected) in cases {
            let got = dickman(v, &g).unwrap();
            assert!((got / expected - 1.0).abs() < 1e-9, "v = {v}: {got}");
        }
    }

    #[test]
    fn buchstab_simple_values() {
        let g = SpecialGrid::buchstab(40).unwrap();
        assert!((buchstab(1.5, &g).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(buchstab(2.0, &g).unwrap(), 0.5);
        assert!((buchstab(20.0, &g).unwrap() - E_NEG_GAMMA).abs() < 1e-3);
        assert!(buchstab(0.9, &g).is_err());
        assert_eq!(buchstab_extended(0.5, &g), 0.0);
    }

    #[test]
    fn buchstab_converges_to_e_neg_gamma() {
        let g = SpecialGrid::buchstab(40).unwrap();
        let w = buchstab(39.0, &g).unwrap();
        assert!((w - E_NEG_GAMMA).abs() < 1e-12, "{w}");
        assert!((E_NEG_GAMMA - (-EULER_GAMMA).exp()).abs() < 1e-15);
    }

    #[test]
    fn wrong_grid_kind_is_rejected() {
        let g = SpecialGrid::buchstab(5).unwrap();
        assert!(dickman(3.0, &g).is_err());
    }

    #[test]
    fn sign_changes_are_found() {
        let g = SpecialGrid::buchstab(20).unwrap();
        let roots = buchstab_sign_changes(&g, 1e-13);
        assert!(!roots.is_empty());
        // ω(v) = 1/v hits e^{-γ} at v = e^γ
        assert!((roots[0] - EULER_GAMMA.exp()).abs() < 1e-10);
        for w in roots.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn interpolation_between_knots_is_smooth() {
        let g = rho_grid();
        // on [1, 2] the exact function is available
        for i in 0..50 {
            let v = 1.0 + (i as f64 + 0.37) / 50.0;
            let got = g.stepwise(v).unwrap();
            assert!((got - (1.0 - v.ln())).abs() < 1e-12);
        }
    }
}
