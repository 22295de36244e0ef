//! Total variation distance between the cycle counts `(C_1, …, C_r)` of a
//! uniform permutation of `n` and independent Poisson variables with means
//! `1/j`, and its limit function `H(u)`.
//!
//! The exact value is the series `½ Σ_m ν(m, r) |κ(n − m, r) − e^{−H_r}|`
//! with `κ(0, r) = 1` and `κ(k, r) = 0` for `k < 0`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exact::{harmonic_f64, kappa_values, nu_table, nu_tail_cutoff, Backend, Limits};
use crate::numeric::CompensatedSum;
use crate::quadrature::{integrate_panels, QuadOptions};
use crate::special::grid::{buchstab_sign_changes, E_NEG_GAMMA};
use crate::special::zeta::buchstab_oscillation;
use crate::special::SpecialGrids;

pub const DEFAULT_TOL: f64 = 1e-12;
/// Largest `n` for which the exact series is evaluated on request.
pub const EXACT_DTV_CEILING: usize = 1_000_000;
/// From here on `ω − e^{−γ}` inside `H(u)` is taken from its oscillating
/// leading term; the mesh difference reaches its rounding floor (about
/// `1e-14`) near 10.
pub const OMEGA_ASYMPTOTIC_FROM: f64 = 9.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DtvResult {
    pub n: usize,
    pub r: usize,
    pub u: f64,
    pub exact: Option<f64>,
    /// Poisson mass of `Σ j Z_j` beyond the last tabulated `m`.
    pub truncation_mass: Option<f64>,
    pub h_estimate: Option<f64>,
    pub emrp_ratio: Option<f64>,
    pub cor43_bound: Option<f64>,
    /// Whether `sqrt(n log n) ≤ r ≤ n`, the range of the `H(u)` estimate.
    pub valid: bool,
}

impl DtvResult {
    fn empty(n: usize, r: usize) -> Self {
        let nf = n as f64;
        Self {
            n,
            r,
            u: nf / r as f64,
            exact: None,
            truncation_mass: None,
            h_estimate: None,
            emrp_ratio: None,
            cor43_bound: None,
            valid: (nf * nf.ln()).sqrt() <= r as f64 && r <= n,
        }
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(Error::Config(format!("tolerance {tol} not in (0, 1e-6]")));
    }
    Ok(())
}

pub fn dtv_exact(n: usize, r: usize, tol: f64) -> Result<DtvResult> {
    dtv_exact_with_backend(n, r, tol, Backend::Float64)
}

/// Exact series value. The `m > n` part equals `½(1 − e^{−H_r} Σ_{m≤n} ν(m, r))`
/// by normalization; it is cross-checked against the tabulated tail.
pub fn dtv_exact_with_backend(n: usize, r: usize, tol: f64, backend: Backend) -> Result<DtvResult> {
    check_tol(tol)?;
    if r == 0 || r > n {
        return Err(domain(format!("need 1 ≤ r ≤ n, got n = {n}, r = {r}")));
    }
    if n > EXACT_DTV_CEILING {
        return Err(Error::Capacity {
            what: "exact d_TV length",
            requested: n,
            ceiling: EXACT_DTV_CEILING,
        });
    }
    let c = (-harmonic_f64(r)).exp();
    let cut = nu_tail_cutoff(r, tol, n + 1)?;
    let kappa = kappa_values(n, r, backend, &Limits::default())?;
    let nu_head = match backend {
        Backend::Float64 => None,
        Backend::ExactRational => Some(nu_table(n, r, backend)?),
    };
    let nu = |m: usize| match &nu_head {
        Some(t) => t.value(m),
        None => cut.table.value(m),
    };

    let mut head = CompensatedSum::new();
    let mut mass_head = CompensatedSum::new();
    for m in 0..=n {
        let v = nu(m);
        head.add(v * (kappa.value(n - m) - c).abs());
        mass_head.add(v * c);
    }
    let tail = 1.0 - mass_head.value();

    let mut tail_direct = CompensatedSum::new();
    for m in n + 1..=cut.m_max.max(n) {
        tail_direct.add(cut.table.value(m) * c);
    }
    let truncation_mass = (1.0 - cut.mass).max(0.0);
    if (tail - tail_direct.value()).abs() > tol + 1e-10 {
        return Err(Error::Consistency(format!(
            "d_TV tail by normalization {tail} disagrees with tabulated tail {}",
            tail_direct.value()
        )));
    }

    let value = (0.5 * (head.value() + tail.max(0.0))).clamp(0.0, 1.0);
    let mut out = DtvResult::empty(n, r);
    out.exact = Some(value);
    out.truncation_mass = Some(truncation_mass);
    Ok(out)
}

/// `(1/r) Σ_{m<n−r} ν(m,r)ν(n−m,r) + (1/r) Σ_{m≥n−r} ν(m,r) + ν(n,r)`, the
/// upper envelope for `d_TV` (implied constant taken as 1), `5 ≤ r < n`.
pub fn dtv_nu_bound(n: usize, r: usize) -> Result<f64> {
    if r < 5 || r >= n {
        return Err(domain(format!(
            "bound needs 5 ≤ r < n, got n = {n}, r = {r}"
        )));
    }
    let cut = nu_tail_cutoff(r, DEFAULT_TOL, n + 1)?;
    let nu = |m: usize| cut.table.value(m);
    let mut conv = CompensatedSum::new();
    for m in 0..n - r {
        conv.add(nu(m) * nu(n - m));
    }
    let mut tail = CompensatedSum::new();
    for m in n - r..=cut.m_max.max(n) {
        tail.add(nu(m));
    }
    Ok((conv.value() + tail.value()) / r as f64 + nu(n))
}

/// `H(u)` together with exact values and bounds where affordable.
pub fn dtv_estimate(
    n: usize,
    r: usize,
    grids: &SpecialGrids,
    with_exact: bool,
) -> Result<DtvResult> {
    if r == 0 || r > n {
        return Err(domain(format!("need 1 ≤ r ≤ n, got n = {n}, r = {r}")));
    }
    let mut out = if with_exact && n <= EXACT_DTV_CEILING {
        dtv_exact(n, r, DEFAULT_TOL)?
    } else {
        DtvResult::empty(n, r)
    };
    let h = h_function(out.u, grids)?;
    out.h_estimate = Some(h);
    out.emrp_ratio = out.exact.map(|e| e / h);
    if r >= 5 && r < n {
        out.cor43_bound = Some(dtv_nu_bound(n, r)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// H(u)

/// `½∫_0^{u−1} |ω(u−t) − e^{−γ}| ρ(t) dt + (e^{−γ}/2) ∫_{u−1}^∞ ρ + ρ(u)/2`.
pub fn h_function(u: f64, grids: &SpecialGrids) -> Result<f64> {
    h_function_with(u, grids, QuadOptions::default())
}

pub fn h_function_with(u: f64, grids: &SpecialGrids, opts: QuadOptions) -> Result<f64> {
    if !(u >= 1.0) || !u.is_finite() {
        return Err(domain(format!("H(u) needs u ≥ 1, got {u}")));
    }
    let zeros = omega_zeros(grids, u);
    Ok(0.5 * h_core(u, grids, &zeros, opts)? + 0.5 * grids.rho(u)?)
}

/// Sign changes of `ω − e^{−γ}`: from the mesh below the switch point and
/// from the oscillating term above it, up to `v_max`.
fn omega_zeros(grids: &SpecialGrids, v_max: f64) -> Vec<f64> {
    let mut zeros: Vec<f64> = buchstab_sign_changes(&grids.buchstab, 1e-13)
        .into_iter()
        .filter(|&z| z < OMEGA_ASYMPTOTIC_FROM)
        .collect();
    let f = |v: f64| buchstab_oscillation(v).unwrap_or(0.0);
    let step = 0.02;
    let mut a = OMEGA_ASYMPTOTIC_FROM;
    let mut fa = f(a);
    while a < v_max {
        let b = (a + step).min(v_max);
        let fb = f(b);
        if fa != 0.0 && fb != 0.0 && fa.signum() != fb.signum() {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if f(mid).signum() == fa.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            zeros.push(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    zeros
}

fn omega_gap(s: f64, grids: &SpecialGrids) -> f64 {
    if s >= OMEGA_ASYMPTOTIC_FROM {
        buchstab_oscillation(s).unwrap_or(0.0).abs()
    } else {
        (grids.omega(s).unwrap_or(E_NEG_GAMMA) - E_NEG_GAMMA).abs()
    }
}

fn rho(t: f64, grids: &SpecialGrids) -> f64 {
    grids.rho(t).unwrap_or(0.0)
}

// 2·(first two terms)
fn h_core(u: f64, grids: &SpecialGrids, zeros: &[f64], opts: QuadOptions) -> Result<f64> {
    let a = u - 1.0;
    let mut body = 0.0;
    if a > 0.0 {
        let mut breaks = vec![0.0, a];
        let mut k = 1.0;
        while k < a {
            breaks.push(k);
            k += 1.0;
        }
        let mut k = 2.0;
        while k < u {
            breaks.push(u - k);
            k += 1.0;
        }
        breaks.push(u - OMEGA_ASYMPTOTIC_FROM);
        for &z in zeros {
            if z > 1.0 && z < u {
                breaks.push(u - z);
            }
        }
        breaks.retain(|&t| t >= 0.0 && t <= a);
        breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
        breaks.dedup_by(|x, y| (*x - *y).abs() < 1e-13);
        let f = |t: f64| omega_gap(u - t, grids) * rho(t, grids);
        body = integrate_panels(&f, &breaks, opts).0;
    }
    Ok(body + E_NEG_GAMMA * rho_tail(a, grids, opts))
}

/// `∫_a^∞ ρ`, panels at integers until a panel adds less than `1e-16` of the
/// running total.
pub fn rho_tail(a: f64, grids: &SpecialGrids, opts: QuadOptions) -> f64 {
    let f = |t: f64| rho(t, grids);
    let mut acc = CompensatedSum::new();
    let mut lo = a;
    loop {
        let hi = lo.floor() + 1.0;
        let (piece, _) = integrate_panels(&f, &[lo, hi], opts);
        acc.add(piece);
        if piece <= 1e-16 * acc.value() || hi > 1e4 {
            break;
        }
        lo = hi;
    }
    acc.value()
}

/// `H` tabulated on `[1, u_max]` together with the kinks of its integrand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HGrid {
    pub u_values: Vec<f64>,
    pub h: Vec<f64>,
    /// Zeros of `ω − e^{−γ}` that split the quadrature panels.
    pub kink_points: Vec<f64>,
}

impl HGrid {
    pub fn build(u_max: f64, step: f64, grids: &SpecialGrids) -> Result<Self> {
        if !(u_max >= 1.0) || !(step > 0.0) {
            return Err(Error::Config(format!(
                "bad H grid: u_max = {u_max}, step = {step}"
            )));
        }
        let count = ((u_max - 1.0) / step).floor() as usize + 1;
        let u_values: Vec<f64> = (0..count).map(|i| 1.0 + i as f64 * step).collect();
        let h = u_values
            .iter()
            .map(|&u| h_function(u, grids))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            u_values,
            h,
            kink_points: omega_zeros(grids, u_max),
        })
    }
}
