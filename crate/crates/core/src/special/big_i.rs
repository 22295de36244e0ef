use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::EULER_GAMMA;

/// Largest `|s|` accepted by [`big_i`].
pub const BIG_I_MAX_MODULUS: f64 = 700.0;

// Below this modulus the power series is used everywhere; beyond it, points
// in the left half-plane switch to the exponential-integral form, where the
// alternating series would cancel away most significant digits.
const SERIES_ONLY_RADIUS: f64 = 4.0;

/// `I(s) = ∫_0^s (e^t − 1)/t dt = Σ_{k≥1} s^k/(k·k!)`, an entire function.
pub fn big_i(s: Complex64) -> Result<Complex64> {
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(Error::Range(format!(
            "I(s) needs a finite argument, got {s}"
        )));
    }
    if s.norm() > BIG_I_MAX_MODULUS {
        return Err(Error::Range(format!(
            "|s| = {} exceeds the cap {BIG_I_MAX_MODULUS}",
            s.norm()
        )));
    }
    if s.re < 0.0 && s.norm() > SERIES_ONLY_RADIUS {
        Ok(big_i_left(s))
    } else {
        Ok(big_i_series(s))
    }
}

/// Real-argument convenience wrapper.
pub fn big_i_real(s: f64) -> Result<f64> {
    big_i(Complex64::new(s, 0.0)).map(|z| z.re)
}

/// Compensated power series, stopped once the term drops below
/// `1e-18 (1 + |partial|)`.
pub fn big_i_series(s: Complex64) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut carry = Complex64::new(0.0, 0.0);
    let mut pow_fact = Complex64::new(1.0, 0.0); // s^k / k!
    let mut k = 1usize;
    loop {
        pow_fact = pow_fact * s / k as f64;
        let term = pow_fact / k as f64;
        // Neumaier, componentwise
        let t = sum + term;
        carry.re += if sum.re.abs() >= term.re.abs() {
            (sum.re - t.re) + term.re
        } else {
            (term.re - t.re) + sum.re
        };
        carry.im += if sum.im.abs() >= term.im.abs() {
            (sum.im - t.im) + term.im
        } else {
            (term.im - t.im) + sum.im
        };
        sum = t;
        let partial = sum + carry;
        if k as f64 > s.norm() && term.norm() < 1e-18 * (1.0 + partial.norm()) {
            return partial;
        }
        k += 1;
        if k > 10_000 {
            return partial;
        }
    }
}

// I(s) = −γ − log(−s) − E_1(−s) for Re s < 0 (principal logarithm).
fn big_i_left(s: Complex64) -> Complex64 {
    let z = -s;
    -EULER_GAMMA - z.ln() - exp_integral_e1(z)
}

/// `E_1(z)` for `Re z > 0`, `|z|` not small: modified Lentz evaluation of the
/// continued fraction `e^{-z} / (z + 1 − 1²/(z + 3 − 2²/(z + 5 − …)))`.
fn exp_integral_e1(z: Complex64) -> Complex64 {
    let tiny = 1e-300;
    let one = Complex64::new(1.0, 0.0);
    let mut b = z + 1.0;
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = one / b;
    let mut h = d;
    for i in 1..10_000 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = one / (d * a + b);
        c = b + c.inv() * a;
        let del = c * d;
        h *= del;
        if (del - one).norm() < 1e-16 {
            break;
        }
    }
    h * (-z).exp()
}
