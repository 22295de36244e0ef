//! Saddle-point solver and the asymptotic estimates and bounds for `ν(n, r)`
//! and `κ(n, r)`.
//!
//! Everything is carried in log space; `Estimate::value` is `exp(log_value)`
//! and may underflow to zero, in which case `log_value` is authoritative.

use serde::{Deserialize, Serialize};
use std::f64::consts::{E, PI};

use crate::error::{domain, Result};
use crate::exact::harmonic_f64;
use crate::numeric::{ln_gamma, log_add_exp, CompensatedSum, EULER_GAMMA};
use crate::special::zeta::{r_envelope, DEFAULT_V1};
use crate::special::{xi, SpecialGrids};

/// Positive root `x` of `Σ_{j≤r} x^j = n` with the moments
/// `λ_k = Σ_{j≤r} j^{k-1} x^j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddlePoint {
    pub n: usize,
    pub r: usize,
    pub x: f64,
    pub log_x: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    SaddleExact,
    LogExpansion,
    DickmanPlain,
    DickmanCorrected,
    BuchstabMain,
    ExplicitBound,
    EpsDeltaBound,
    NuLinkedBound,
    SmallRBound,
    ArratiaTavare,
    Weingartner,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::SaddleExact => "saddle_exact",
            Regime::LogExpansion => "log_expansion",
            Regime::DickmanPlain => "dickman_plain",
            Regime::DickmanCorrected => "dickman_corrected",
            Regime::BuchstabMain => "buchstab_main",
            Regime::ExplicitBound => "explicit_bound",
            Regime::EpsDeltaBound => "eps_delta_bound",
            Regime::NuLinkedBound => "nu_linked_bound",
            Regime::SmallRBound => "small_r_bound",
            Regime::ArratiaTavare => "arratia_tavare",
            Regime::Weingartner => "weingartner",
        }
    }
}

/// An approximation (or, for error envelopes, a bound) at one `(n, r)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub log_value: f64,
    pub regime: Regime,
    /// The `O(·)` argument of the underlying result, or "explicit".
    pub error_order: String,
    /// Whether `(n, r)` lies in the range where the result is stated.
    pub valid: bool,
    /// Size of the error term evaluated at `(n, r)`; constants included only
    /// when `error_order` is "explicit".
    pub error_scale: Option<f64>,
}

impl Estimate {
    fn from_log(log_value: f64, regime: Regime, error_order: &str, valid: bool) -> Self {
        Self {
            value: log_value.exp(),
            log_value,
            regime,
            error_order: error_order.to_string(),
            valid,
            error_scale: None,
        }
    }

    fn with_error_scale(mut self, scale: f64) -> Self {
        self.error_scale = Some(scale);
        self
    }
}

/// Parameters of the explicit `|κ − e^{-H_r}|` bound at one `α`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaBoundParams {
    pub alpha: f64,
    #[serde(rename = "E")]
    pub e_term: f64,
    pub bound: f64,
    pub ln_bound: f64,
}

/// Free parameters of the `ε`/`δ` envelopes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeParams {
    pub epsilon: f64,
    pub delta: f64,
}

impl Default for EnvelopeParams {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            delta: 0.1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Nu,
    Kappa,
}

fn check_nr(n: usize, r: usize) -> Result<()> {
    if r == 0 || n == 0 || r > n {
        return Err(domain(format!("need 1 ≤ r ≤ n, got n = {n}, r = {r}")));
    }
    Ok(())
}

fn ln_n(n: usize) -> f64 {
    (n as f64).ln()
}

// ---------------------------------------------------------------------------
// saddle point

const DIRECT_SUM_MAX_R: usize = 64;

fn ln_expm1(t: f64) -> f64 {
    if t > 30.0 {
        t + (-(-t).exp()).ln_1p()
    } else {
        t.exp_m1().ln()
    }
}

// ln Σ_{j≤r} e^{jy} and its derivative Σ j e^{jy} / Σ e^{jy}, y ≥ 0
fn ln_power_sum(y: f64, r: usize) -> (f64, f64) {
    if r <= DIRECT_SUM_MAX_R || y < 1e-4 {
        let mut s0 = CompensatedSum::new();
        let mut s1 = CompensatedSum::new();
        for j in 1..=r {
            let t = ((j as f64 - r as f64) * y).exp();
            s0.add(t);
            s1.add(j as f64 * t);
        }
        let (s0, s1) = (s0.value(), s1.value());
        (r as f64 * y + s0.ln(), s1 / s0)
    } else {
        let rf = r as f64;
        let ln_s = y + ln_expm1(rf * y) - y.exp_m1().ln();
        let mean = 1.0 + rf / -(-rf * y).exp_m1() - 1.0 / -(-y).exp_m1();
        (ln_s, mean)
    }
}

/// Solves `Σ_{j≤r} x^j = n` by Newton in `log x`, started from the upper
/// bracket `x ≤ u^{2/(r+1)}`.
pub fn solve_saddle(n: usize, r: usize) -> Result<SaddlePoint> {
    check_nr(n, r)?;
    let u = n as f64 / r as f64;
    let target = ln_n(n);
    let mut y = if r == n {
        0.0
    } else {
        2.0 * u.ln() / (r as f64 + 1.0)
    };
    if r < n {
        for _ in 0..200 {
            let (g, dg) = ln_power_sum(y, r);
            let step = (g - target) / dg;
            let next = (y - step).max(0.0);
            let moved = (next - y).abs();
            y = next;
            if moved <= 4.0 * f64::EPSILON * y {
                break;
            }
        }
    }
    let mut l = [
        CompensatedSum::new(),
        CompensatedSum::new(),
        CompensatedSum::new(),
        CompensatedSum::new(),
    ];
    for j in 1..=r {
        let jf = j as f64;
        let t = (jf * y).exp();
        l[0].add(t);
        l[1].add(jf * t);
        l[2].add(jf * jf * t);
        l[3].add(jf * jf * jf * t);
    }
    Ok(SaddlePoint {
        n,
        r,
        x: y.exp(),
        log_x: y,
        lambda1: l[0].value(),
        lambda2: l[1].value(),
        lambda3: l[2].value(),
        lambda4: l[3].value(),
    })
}

/// Truncated expansion of the saddle point in powers of `n^{-1/r}`, for
/// `2 ≤ r ≤ log n`.
pub fn saddle_series_x(n: usize, r: usize) -> Result<f64> {
    if r < 2 || (r as f64) > ln_n(n) {
        return Err(domain(format!(
            "series for x needs 2 ≤ r ≤ log n, got n = {n}, r = {r}"
        )));
    }
    let nf = n as f64;
    let rf = r as f64;
    let mut x = nf.powf(1.0 / rf) - 1.0 / rf;
    for big_n in 2..=r {
        let nn = big_n as f64;
        let a = (nn - 1.0) / rf;
        let ln_c = ln_gamma(nn + a) - (nn - 1.0).ln() - ln_gamma(nn + 1.0) - ln_gamma(a);
        x -= (ln_c - a * nf.ln()).exp();
    }
    x += nf.powf(-1.0 + 1.0 / rf) / rf;
    Ok(x)
}

// ---------------------------------------------------------------------------
// ν estimates

/// `exp{Σ x^j/j} / (x^n sqrt(2π Σ j x^j))` at the saddle point.
pub fn nu_saddle(n: usize, r: usize) -> Result<Estimate> {
    let sp = solve_saddle(n, r)?;
    let mut s = CompensatedSum::new();
    for j in 1..=r {
        let jf = j as f64;
        s.add((jf * sp.log_x).exp() / jf);
    }
    let log_value = s.value() - n as f64 * sp.log_x - 0.5 * (2.0 * PI * sp.lambda2).ln();
    Ok(
        Estimate::from_log(log_value, Regime::SaddleExact, "r/n", true)
            .with_error_scale(r as f64 / n as f64),
    )
}

/// Coefficient `d_{rk}` of the expansion for `r ≤ log n`.
pub fn d_coefficient(r: usize, k: usize) -> f64 {
    let rf = r as f64;
    if k == r {
        -(2..=r).map(|j| 1.0 / j as f64).sum::<f64>() / rf
    } else {
        let kf = k as f64;
        (ln_gamma(kf + kf / rf) - ln_gamma(kf + 1.0) - ln_gamma(1.0 + kf / rf)).exp() / (rf - kf)
    }
}

/// `(2πnr)^{-1/2} exp{−(n log n)/r + n/r + Σ_k d_{rk} n^{(r−k)/r}}`.
pub fn nu_log_expansion(n: usize, r: usize) -> Result<Estimate> {
    check_nr(n, r)?;
    let nf = n as f64;
    let rf = r as f64;
    let mut s = CompensatedSum::new();
    s.add(-nf * nf.ln() / rf);
    s.add(nf / rf);
    for k in 1..=r {
        s.add(d_coefficient(r, k) * nf.powf((rf - k as f64) / rf));
    }
    s.add(-0.5 * (2.0 * PI * nf * rf).ln());
    let valid = rf <= nf.ln();
    Ok(
        Estimate::from_log(s.value(), Regime::LogExpansion, "n^(-1/r)", valid)
            .with_error_scale(nf.powf(-1.0 / rf)),
    )
}

/// The plain `ρ(u)` and corrected `ρ(u) exp{uξ(u)/(2r)}` approximations.
#[derive(Clone, Debug, PartialEq)]
pub struct DickmanEstimates {
    pub plain: Estimate,
    pub corrected: Estimate,
}

pub fn nu_dickman(n: usize, r: usize, grids: &SpecialGrids) -> Result<DickmanEstimates> {
    check_nr(n, r)?;
    let nf = n as f64;
    let rf = r as f64;
    let u = nf / rf;
    let ln_rho = grids.rho_ln(u)?;
    let xi_u = xi(u)?.xi;
    let lu = (u + 1.0).ln();
    let plain_valid = (nf * nf.ln()).sqrt() <= rf;
    let corrected_valid = nf.powf(1.0 / 3.0) * nf.ln().powf(2.0 / 3.0) <= rf;
    let plain = Estimate::from_log(ln_rho, Regime::DickmanPlain, "u log(u+1)/r", plain_valid)
        .with_error_scale(u * lu / rf);
    let corrected = Estimate::from_log(
        ln_rho + u * xi_u / (2.0 * rf),
        Regime::DickmanCorrected,
        "u log^2(u+1)/r^2 + 1/u",
        corrected_valid,
    )
    .with_error_scale(u * lu * lu / (rf * rf) + 1.0 / u);
    Ok(DickmanEstimates { plain, corrected })
}

// ---------------------------------------------------------------------------
// κ estimates

fn check_kappa(n: usize, r: usize) -> Result<()> {
    if r == 0 || r >= n {
        return Err(domain(format!("need 1 ≤ r < n, got n = {n}, r = {r}")));
    }
    Ok(())
}

/// `e^{−H_r + γ} ω(u)`.
pub fn kappa_buchstab(n: usize, r: usize, grids: &SpecialGrids) -> Result<Estimate> {
    check_kappa(n, r)?;
    let nf = n as f64;
    let rf = r as f64;
    let u = nf / rf;
    let log_value = -harmonic_f64(r) + EULER_GAMMA + grids.omega(u)?.ln();
    let ln_r = r_envelope(u, DEFAULT_V1)?.ln_r;
    let scale = (ln_r + 1.5 * u.ln() + 2.0 * (u + 1.0).ln().ln() - 2.0 * rf.ln()).exp();
    let valid = (nf * nf.ln()).sqrt() <= rf;
    Ok(Estimate::from_log(
        log_value,
        Regime::BuchstabMain,
        "R(u) u^(3/2) log^2(u+1)/r^2",
        valid,
    )
    .with_error_scale(scale))
}

/// Both terms of the explicit bound on `|κ(n, r) − e^{−H_r}|`, `1 ≤ r < n/2`.
pub fn kappa_explicit_bound(n: usize, r: usize, alpha: f64) -> Result<KappaBoundParams> {
    if r == 0 || 2 * r >= n {
        return Err(domain(format!(
            "explicit bound needs 1 ≤ r < n/2, got n = {n}, r = {r}"
        )));
    }
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(domain(format!(
            "explicit bound needs alpha > 1, got {alpha}"
        )));
    }
    let nf = n as f64;
    let rf = r as f64;
    let la = alpha.ln();
    let lam1 = (alpha - 1.0).ln();
    let h_r = harmonic_f64(r);

    let ar1 = ((rf + 1.0) * la - lam1).exp(); // α^{r+1}/(α−1)
    let positive =
        (PI.powi(-2) / (1.0 + (rf * alpha - rf).powi(2)) - (-rf * la / 2.0).exp()).max(0.0);
    let first = if positive > 0.0 {
        -(2.0 / rf) * ar1 * positive
    } else {
        0.0
    };
    let e_term = first + (2.0 * rf * la).min(2.0 * (E * rf).ln());

    let mut power_sum = CompensatedSum::new();
    for j in 1..=r {
        let jf = j as f64;
        power_sum.add(((jf * la).exp() - 2.0) / jf);
    }
    let ln_t1 = PI.ln() + 4.0 + (2.0 * rf - nf + 1.5) * la - 2.0 * nf.ln() - 2.0 * lam1
        + power_sum.value()
        + e_term;
    let growth = alpha * (rf * la).exp_m1() / (2.0 * rf * (alpha - 1.0));
    let ln_t2 = 4f64.ln() + 1.0 + (2.0 * rf - nf + 2.0) * la
        - PI.ln()
        - 2.0 * nf.ln()
        - rf.ln()
        - 3.0 * lam1
        - growth
        - h_r;
    let ln_bound = log_add_exp(ln_t1, ln_t2);
    Ok(KappaBoundParams {
        alpha,
        e_term,
        bound: ln_bound.exp(),
        ln_bound,
    })
}

/// `α` grid, log-spaced in `log α` over `[u^{1/r}, u^{2/r}]`.
pub fn alpha_grid(n: usize, r: usize, points: usize) -> Vec<f64> {
    let u = n as f64 / r as f64;
    let lo = u.ln() / r as f64;
    let hi = 2.0 * lo;
    let points = points.max(2);
    (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            (lo * (hi / lo).powf(t)).exp()
        })
        .collect()
}

pub const ALPHA_GRID_POINTS: usize = 32;

/// The explicit bound minimized over the default `α` grid.
pub fn kappa_explicit_bound_best(n: usize, r: usize) -> Result<KappaBoundParams> {
    let mut best: Option<KappaBoundParams> = None;
    for alpha in alpha_grid(n, r, ALPHA_GRID_POINTS) {
        let b = kappa_explicit_bound(n, r, alpha)?;
        if best.is_none_or(|cur| b.ln_bound < cur.ln_bound) {
            best = Some(b);
        }
    }
    Ok(best.expect("alpha grid is non-empty"))
}

/// Right-hand side of the Arratia–Tavaré bound at `u = n/r`.
pub fn arratia_tavare_bound(u: f64) -> f64 {
    arratia_tavare_bound_ln(u).exp()
}

pub fn arratia_tavare_bound_ln(u: f64) -> f64 {
    let fu = u.floor();
    let t1 = 0.5 * (2.0 * PI * fu).ln() + (fu - 1.0) * 2f64.ln() - ln_gamma(fu);
    let t2 = -ln_gamma(fu + 1.0);
    let t3 = 3f64.ln() + u * (1.0 - u.ln());
    log_add_exp(log_add_exp(t1, t2), t3)
}

/// Error envelopes for `κ(n, r) − e^{−H_r}` from each applicable result.
pub fn kappa_error_bounds(
    n: usize,
    r: usize,
    grids: &SpecialGrids,
    params: EnvelopeParams,
) -> Result<Vec<Estimate>> {
    check_kappa(n, r)?;
    let nf = n as f64;
    let rf = r as f64;
    let u = nf / rf;
    let logn = nf.ln();
    let lu1 = (u + 1.0).ln();
    let unspecified = "up to unspecified constants";
    let mut out = Vec::new();

    // ρ(u)-based envelope
    let ln_rho = grids.rho_ln(u)?;
    let upper = logn.powf(3.0 + params.epsilon);
    let eps_delta = if rf >= upper {
        ln_rho - rf.ln() - 2.0 * u * (1.0 - params.delta) / (PI * PI * lu1 * lu1)
    } else {
        ln_rho + (u / rf) * u.ln() - rf.ln()
    };
    out.push(Estimate::from_log(
        eps_delta,
        Regime::EpsDeltaBound,
        unspecified,
        rf >= logn,
    ));

    // ν(n, r)-linked envelope
    let ln_nu = nu_saddle(n, r)?.log_value;
    let (nu_linked, nu_valid) = if r >= 5 {
        let expo = u.powf(1.0 - 4.0 / rf) * (1.0 - params.epsilon) / (4.0 * PI * PI * lu1 * lu1);
        (ln_nu - rf.ln() - expo, true)
    } else {
        (ln_nu + 2.5 * logn, r >= 2)
    };
    out.push(Estimate::from_log(
        nu_linked,
        Regime::NuLinkedBound,
        unspecified,
        nu_valid,
    ));

    // small r
    let small = -(nf / rf) * (logn - 1.0) + nf / logn + 3.0 * nf / (logn * logn);
    out.push(Estimate::from_log(
        small,
        Regime::SmallRBound,
        unspecified,
        r >= 2 && rf <= logn,
    ));

    out.push(Estimate::from_log(
        arratia_tavare_bound_ln(u),
        Regime::ArratiaTavare,
        "explicit",
        true,
    ));

    let base = if r >= 3 { 1.0 } else { E };
    let weingartner = -u * (u / base).ln() - 2.0 * rf.ln();
    out.push(Estimate::from_log(
        weingartner,
        Regime::Weingartner,
        unspecified,
        rf <= nf / logn,
    ));

    if 2 * r < n {
        let b = kappa_explicit_bound_best(n, r)?;
        out.push(Estimate::from_log(
            b.ln_bound,
            Regime::ExplicitBound,
            "explicit",
            true,
        ));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// dispatch

/// The estimate whose stated range contains `(n, r)`.
///
/// For `ν`: the expansion in powers of `n^{-1/r}` when `r ≤ log n`, the
/// saddle-point formula otherwise. For `κ`: `e^{−H_r}` with the small-`r`
/// envelope when `r ≤ log n`, the Buchstab main term when `r ≥ sqrt(n log n)`,
/// and `e^{−H_r}` with the explicit bound in between.
pub fn select_regime(
    n: usize,
    r: usize,
    quantity: Quantity,
    grids: &SpecialGrids,
) -> Result<Estimate> {
    let nf = n as f64;
    let rf = r as f64;
    let logn = nf.ln();
    match quantity {
        Quantity::Nu => {
            check_nr(n, r)?;
            if rf <= logn {
                nu_log_expansion(n, r)
            } else {
                nu_saddle(n, r)
            }
        }
        Quantity::Kappa => {
            check_kappa(n, r)?;
            let main = -harmonic_f64(r);
            if rf <= logn {
                let env = -(nf / rf) * (logn - 1.0) + nf / logn + 3.0 * nf / (logn * logn);
                Ok(Estimate::from_log(
                    main,
                    Regime::SmallRBound,
                    "exp{-(n/r)log(n/e) + n/log n + 3n/log^2 n}",
                    r >= 2,
                )
                .with_error_scale(env.exp()))
            } else if rf >= (nf * logn).sqrt() || 2 * r >= n {
                kappa_buchstab(n, r, grids)
            } else {
                let b = kappa_explicit_bound_best(n, r)?;
                Ok(
                    Estimate::from_log(main, Regime::ExplicitBound, "explicit", true)
                        .with_error_scale(b.bound),
                )
            }
        }
    }
}
