use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Positive root `ξ(v)` of `e^ξ = 1 + vξ`, with `ξ(1) = 0`, and its derivative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiValue {
    pub v: f64,
    pub xi: f64,
    pub xi_prime: f64,
}

// φ(ξ) = (e^ξ − 1 − ξ)/ξ, so that v − 1 = φ(ξ) without cancellation.
fn phi(x: f64) -> f64 {
    if x.abs() < 0.1 {
        // Σ_{k≥1} x^k/(k+1)!
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..=20 {
            term *= x / (k + 1) as f64;
            sum += term;
        }
        sum
    } else {
        (x.exp_m1() - x) / x
    }
}

// φ'(ξ); also equals 1/ξ'(v).
fn phi_prime(x: f64) -> f64 {
    if x.abs() < 0.1 {
        // Σ_{k≥1} k x^{k-1}/(k+1)!
        let mut pow = 1.0;
        let mut fact = 2.0;
        let mut sum = 0.0;
        for k in 1..=20 {
            sum += k as f64 * pow / fact;
            pow *= x;
            fact *= (k + 2) as f64;
        }
        sum
    } else {
        (x.exp() * (x - 1.0) + 1.0) / (x * x)
    }
}

/// Solves `e^ξ = 1 + vξ` by safeguarded Newton inside `(log v, 2 log v)`.
pub fn xi(v: f64) -> Result<XiValue> {
    if !(v >= 1.0) || !v.is_finite() {
        return Err(domain(format!("xi(v) needs finite v ≥ 1, got {v}")));
    }
    if v == 1.0 {
        return Ok(XiValue {
            v,
            xi: 0.0,
            xi_prime: 2.0,
        });
    }
    let target = v - 1.0;
    let (mut lo, mut hi) = (v.ln(), 2.0 * v.ln());
    let mut x = hi;
    for _ in 0..200 {
        let f = phi(x) - target;
        if f > 0.0 {
            hi = hi.min(x);
        } else {
            lo = lo.max(x);
        }
        let mut next = x - f / phi_prime(x);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x {
            x = next;
            break;
        }
        x = next;
    }
    Ok(XiValue {
        v,
        xi: x,
        xi_prime: 1.0 / phi_prime(x),
    })
}
