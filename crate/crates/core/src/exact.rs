//! Exact densities of permutations without long cycles, `ν(m, r)`, and
//! without short cycles, `κ(m, r)`, plus a cycle-type enumeration oracle.
//!
//! Both densities are coefficients of exponential generating functions,
//! `ν(m, r) = [z^m] exp(Σ_{j≤r} z^j/j)` and `κ(m, r) = [z^m] exp(Σ_{r<j≤n} z^j/j)`,
//! and are produced by the recurrences obtained from differentiating them.
//! The floating-point backend keeps each value as a mantissa plus a binary
//! exponent so that `ν(10^5, 2) ≈ e^{-2.8·10^5}` is still representable.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numeric::{factorial, ldexp, ln_biguint, CompensatedSum};

/// Arithmetic used to build a [`DensityTable`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[serde(rename = "float")]
    Float64,
    #[serde(rename = "rational")]
    ExactRational,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DensityKind {
    /// `ν(m, r)`: no cycle longer than `r`.
    NoLongCycles,
    /// `κ(m, r)`: no cycle of length `1..=r`.
    NoShortCycles,
}

/// Capacity limits for the exact routines.
#[derive(Clone, Copy, Debug)]
pub struct Limits {
    /// Largest table length accepted by the rational backend.
    pub rational_ceiling: usize,
    /// Largest `n` accepted by [`oracle_count`].
    pub oracle_ceiling: usize,
}

pub const DEFAULT_RATIONAL_CEILING: usize = 300;
pub const DEFAULT_ORACLE_CEILING: usize = 25;

impl Default for Limits {
    fn default() -> Self {
        Self {
            rational_ceiling: DEFAULT_RATIONAL_CEILING,
            oracle_ceiling: DEFAULT_ORACLE_CEILING,
        }
    }
}

#[derive(Clone, Debug)]
enum Values {
    /// value(m) = mant[m] · 2^exp2[m]
    Float { mant: Vec<f64>, exp2: Vec<i32> },
    /// value(m) = counts[m] / m!
    Rational {
        counts: Vec<BigUint>,
        values: Vec<BigRational>,
    },
}

/// Densities `density(m, r)` for `m = 0..=M` at a fixed threshold `r`.
#[derive(Clone, Debug)]
pub struct DensityTable {
    kind: DensityKind,
    r: usize,
    values: Values,
}

impl DensityTable {
    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn backend(&self) -> Backend {
        match self.values {
            Values::Float { .. } => Backend::Float64,
            Values::Rational { .. } => Backend::ExactRational,
        }
    }

    /// Number of stored entries (`M + 1`).
    pub fn len(&self) -> usize {
        match &self.values {
            Values::Float { mant, .. } => mant.len(),
            Values::Rational { counts, .. } => counts.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest stored index `M`.
    pub fn max_index(&self) -> usize {
        self.len() - 1
    }

    /// `density(m, r)` as a double; underflows to zero for very small values.
    pub fn value(&self, m: usize) -> f64 {
        match &self.values {
            Values::Float { mant, exp2 } => ldexp(mant[m], exp2[m]),
            Values::Rational { values, .. } => values[m].to_f64().unwrap_or(0.0),
        }
    }

    /// `log density(m, r)`; `-inf` when the density is zero.
    pub fn ln_value(&self, m: usize) -> f64 {
        match &self.values {
            Values::Float { mant, exp2 } => {
                if mant[m] == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    mant[m].ln() + exp2[m] as f64 * std::f64::consts::LN_2
                }
            }
            Values::Rational { counts, .. } => {
                ln_biguint(&counts[m]) - crate::numeric::ln_gamma(m as f64 + 1.0)
            }
        }
    }

    /// Exact value, available for the rational backend only.
    pub fn rational(&self, m: usize) -> Option<&BigRational> {
        match &self.values {
            Values::Rational { values, .. } => Some(&values[m]),
            Values::Float { .. } => None,
        }
    }

    /// `m! · density(m, r)`, the number of qualifying permutations of `S_m`
    /// (rational backend only).
    pub fn count(&self, m: usize) -> Option<&BigUint> {
        match &self.values {
            Values::Rational { counts, .. } => Some(&counts[m]),
            Values::Float { .. } => None,
        }
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        (0..self.len()).map(|m| self.value(m)).collect()
    }
}

fn check_rational_capacity(len: usize, limits: &Limits) -> Result<()> {
    if len > limits.rational_ceiling {
        return Err(Error::Capacity {
            what: "rational table length",
            requested: len,
            ceiling: limits.rational_ceiling,
        });
    }
    Ok(())
}

/// `ν(m, r)` for `m = 0..=n_max`, from `m·a_m = Σ_{j=1}^{min(r,m)} a_{m-j}`.
pub fn nu_table(n_max: usize, r: usize, backend: Backend) -> Result<DensityTable> {
    nu_table_with_limits(n_max, r, backend, &Limits::default())
}

pub fn nu_table_with_limits(
    n_max: usize,
    r: usize,
    backend: Backend,
    limits: &Limits,
) -> Result<DensityTable> {
    if r == 0 {
        return Err(domain("cycle-length threshold r must be at least 1"));
    }
    let values = match backend {
        Backend::Float64 => nu_float(n_max, r),
        Backend::ExactRational => {
            check_rational_capacity(n_max, limits)?;
            rational_values(nu_counts(n_max, r))
        }
    };
    Ok(DensityTable {
        kind: DensityKind::NoLongCycles,
        r,
        values,
    })
}

// Below this threshold the window sum is recomputed directly at each step.
const DIRECT_WINDOW: usize = 48;
const RESCALE_BELOW: f64 = 1.0e-180;
const RESCALE_SHIFT: i32 = 600;

fn nu_float(n_max: usize, r: usize) -> Values {
    let mut w = vec![0.0f64; n_max + 1];
    let mut mant = Vec::with_capacity(n_max + 1);
    let mut exp2 = Vec::with_capacity(n_max + 1);
    let mut scale = 0i32;

    w[0] = 1.0;
    mant.push(1.0);
    exp2.push(0);

    let direct = r <= DIRECT_WINDOW;
    // sum of w over the window feeding the next index
    let mut window = CompensatedSum::new();
    window.add(1.0);
    let mut since_refresh = 0usize;

    for m in 1..=n_max {
        let lo = m.saturating_sub(r);
        let s = if direct {
            w[lo..m].iter().copied().collect::<CompensatedSum>().value()
        } else {
            window.value()
        };
        let a = s / m as f64;
        w[m] = a;

        if !direct {
            window.add(a);
            if m >= r {
                let old = w[m - r];
                since_refresh += 1;
                if old > 0.5 * window.value() || since_refresh >= r {
                    window = w[m + 1 - r..=m].iter().copied().collect();
                    since_refresh = 0;
                } else {
                    window.add(-old);
                }
            }
        }

        if a > 0.0 && a < RESCALE_BELOW {
            let from = (m + 1).saturating_sub(r);
            for x in &mut w[from..=m] {
                *x = ldexp(*x, RESCALE_SHIFT);
            }
            window.scale(ldexp(1.0, RESCALE_SHIFT));
            scale -= RESCALE_SHIFT;
        }
        mant.push(w[m]);
        exp2.push(scale);
    }
    Values::Float { mant, exp2 }
}

/// `m! ν(m, r)` via `c_m = Σ_{j=1}^{min(r,m)} (m-1)!/(m-j)! · c_{m-j}` in Horner form.
fn nu_counts(n_max: usize, r: usize) -> Vec<BigUint> {
    let mut c: Vec<BigUint> = Vec::with_capacity(n_max + 1);
    c.push(BigUint::one());
    for m in 1..=n_max {
        let top = r.min(m);
        let mut acc = c[m - top].clone();
        for j in (1..top).rev() {
            acc = &c[m - j] + acc * BigUint::from(m - j);
        }
        c.push(acc);
    }
    c
}

fn rational_values(counts: Vec<BigUint>) -> Values {
    let mut fact = BigUint::one();
    let mut values = Vec::with_capacity(counts.len());
    for (m, c) in counts.iter().enumerate() {
        if m > 0 {
            fact *= BigUint::from(m);
        }
        values.push(BigRational::new(
            BigInt::from(c.clone()),
            BigInt::from(fact.clone()),
        ));
    }
    Values::Rational { counts, values }
}

/// `κ(m, r)` for `m = 0..=n`, from `m·b_m = Σ_{j=r+1}^{m} b_{m-j}`.
///
/// Requires `1 ≤ r < n`. The target `κ(n, r)` is re-derived from the
/// recurrence `κ(n,r) = 1/n + (1/n) Σ_{r<j<n-r} κ(j,r)` and the two must agree
/// (exactly for the rational backend, to `1e-12` relative in floating point).
pub fn kappa_table(n: usize, r: usize, backend: Backend) -> Result<DensityTable> {
    kappa_table_with_limits(n, r, backend, &Limits::default())
}

pub fn kappa_table_with_limits(
    n: usize,
    r: usize,
    backend: Backend,
    limits: &Limits,
) -> Result<DensityTable> {
    if r == 0 {
        return Err(domain("cycle-length threshold r must be at least 1"));
    }
    if r >= n {
        return Err(domain(format!(
            "kappa requires r < n, got n = {n}, r = {r}"
        )));
    }
    let table = kappa_values(n, r, backend, limits)?;
    match backend {
        Backend::ExactRational => {
            let via_recurrence = kappa_by_recurrence_exact(n, r);
            if table.rational(n) != Some(&via_recurrence) {
                return Err(Error::Consistency(format!(
                    "kappa({n},{r}): generating-function route and recurrence disagree"
                )));
            }
        }
        Backend::Float64 => {
            let a = table.value(n);
            let b = kappa_by_recurrence_f64(n, r);
            if ((a - b) / b).abs() > 1e-12 {
                return Err(Error::Consistency(format!(
                    "kappa({n},{r}): {a:e} vs recurrence {b:e}"
                )));
            }
        }
    }
    Ok(table)
}

/// `κ(m, r)` for `m = 0..=n` without the `r < n` precondition, using the
/// series conventions `κ(0, r) = 1` and `κ(m, r) = 0` for `1 ≤ m ≤ r`.
pub(crate) fn kappa_values(
    n: usize,
    r: usize,
    backend: Backend,
    limits: &Limits,
) -> Result<DensityTable> {
    let values = match backend {
        Backend::Float64 => kappa_float(n, r),
        Backend::ExactRational => {
            check_rational_capacity(n, limits)?;
            rational_values(kappa_counts(n, r))
        }
    };
    Ok(DensityTable {
        kind: DensityKind::NoShortCycles,
        r,
        values,
    })
}

fn kappa_float(n: usize, r: usize) -> Values {
    let mut b = Vec::with_capacity(n + 1);
    let mut prefix = Vec::with_capacity(n + 1);
    let mut running = CompensatedSum::new();
    for m in 0..=n {
        let v = if m == 0 {
            1.0
        } else if m <= r {
            0.0
        } else {
            prefix[m - r - 1] / m as f64
        };
        b.push(v);
        running.add(v);
        prefix.push(running.value());
    }
    let exp2 = vec![0; b.len()];
    Values::Float { mant: b, exp2 }
}

/// `m! κ(m, r)` via `d_m = (m-1)!/(m-r-1)! · Q_{m-r-1}`, `Q_k = k Q_{k-1} + d_k`.
fn kappa_counts(n: usize, r: usize) -> Vec<BigUint> {
    let mut d: Vec<BigUint> = Vec::with_capacity(n + 1);
    let mut q: Vec<BigUint> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        let dm = if m == 0 {
            BigUint::one()
        } else if m <= r {
            BigUint::zero()
        } else {
            let k = m - r - 1;
            let falling = ((k + 1)..m).fold(BigUint::one(), |acc, f| acc * BigUint::from(f));
            falling * &q[k]
        };
        let qm = if m == 0 {
            dm.clone()
        } else {
            &q[m - 1] * BigUint::from(m) + &dm
        };
        d.push(dm);
        q.push(qm);
    }
    d
}

/// `κ(n, r)` from `κ(m,r) = 1/m + (1/m) Σ_{r<j<m-r} κ(j,r)`, with the empty
/// sum (`m/2 ≤ r < m`) giving `κ(m, r) = 1/m`.
pub fn kappa_by_recurrence_exact(n: usize, r: usize) -> BigRational {
    assert!(r >= 1 && r < n);
    // kap[j] for j in r+1..=n; prefix[j] = Σ_{r<i≤j} kap[i]
    let mut kap = vec![BigRational::zero(); n + 1];
    let mut prefix = vec![BigRational::zero(); n + 1];
    for m in (r + 1)..=n {
        let inner = if m > 2 * r + 1 {
            prefix[m - r - 1].clone()
        } else {
            BigRational::zero()
        };
        let inv_m = BigRational::new(BigInt::one(), BigInt::from(m));
        kap[m] = (BigRational::one() + inner) * inv_m;
        prefix[m] = &prefix[m - 1] + &kap[m];
    }
    kap[n].clone()
}

pub fn kappa_by_recurrence_f64(n: usize, r: usize) -> f64 {
    assert!(r >= 1 && r < n);
    let mut kap = vec![0.0f64; n + 1];
    let mut prefix = vec![0.0f64; n + 1];
    let mut running = CompensatedSum::new();
    for m in (r + 1)..=n {
        let inner = if m > 2 * r + 1 {
            prefix[m - r - 1]
        } else {
            0.0
        };
        kap[m] = (1.0 + inner) / m as f64;
        running.add(kap[m]);
        prefix[m] = running.value();
    }
    kap[n]
}

/// Harmonic number `H_r`.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicValue {
    pub r: usize,
    pub value: f64,
    pub exact: Option<BigRational>,
}

pub fn harmonic(r: usize, exact: bool) -> Result<HarmonicValue> {
    if r == 0 {
        return Err(domain("harmonic number needs r ≥ 1"));
    }
    let value = harmonic_f64(r);
    let exact = exact.then(|| {
        (1..=r).fold(BigRational::zero(), |acc, j| {
            acc + BigRational::new(BigInt::one(), BigInt::from(j))
        })
    });
    Ok(HarmonicValue { r, value, exact })
}

/// `H_r` in double precision (`H_0 = 0`).
pub fn harmonic_f64(r: usize) -> f64 {
    (1..=r)
        .rev()
        .map(|j| 1.0 / j as f64)
        .collect::<CompensatedSum>()
        .value()
}

/// Cycle-length restriction for [`oracle_count`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CycleConstraint {
    /// every cycle has length `≤ r`
    MaxLen(usize),
    /// every cycle has length `≥ r`
    MinLen(usize),
}

impl CycleConstraint {
    fn admits(&self, part: usize) -> bool {
        match *self {
            CycleConstraint::MaxLen(r) => part <= r,
            CycleConstraint::MinLen(r) => part >= r,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CycleTypeOracleResult {
    pub n: usize,
    pub constraint: CycleConstraint,
    pub count: BigUint,
    pub density: BigRational,
}

/// Counts permutations of `S_n` obeying `constraint` by summing
/// `n! Π_j 1/(j^{s_j} s_j!)` over all cycle types.
pub fn oracle_count(n: usize, constraint: CycleConstraint) -> Result<CycleTypeOracleResult> {
    oracle_count_with_limits(n, constraint, &Limits::default())
}

pub fn oracle_count_with_limits(
    n: usize,
    constraint: CycleConstraint,
    limits: &Limits,
) -> Result<CycleTypeOracleResult> {
    if n == 0 {
        return Err(domain("oracle needs n ≥ 1"));
    }
    if n > limits.oracle_ceiling {
        return Err(Error::Capacity {
            what: "oracle n",
            requested: n,
            ceiling: limits.oracle_ceiling,
        });
    }
    let n_fact = factorial(n);
    let mut count = BigUint::zero();
    for_each_cycle_type(n, |mult| {
        let admitted = mult
            .iter()
            .enumerate()
            .all(|(j, &s)| s == 0 || constraint.admits(j));
        if admitted {
            count += class_size(&n_fact, mult);
        }
    });
    let density = BigRational::new(BigInt::from(count.clone()), BigInt::from(n_fact));
    Ok(CycleTypeOracleResult {
        n,
        constraint,
        count,
        density,
    })
}

/// Size of the conjugacy class with multiplicities `mult[j]` (index 0 unused).
pub fn class_size(n_fact: &BigUint, mult: &[usize]) -> BigUint {
    let mut denom = BigUint::one();
    for (j, &s) in mult.iter().enumerate().skip(1) {
        if s > 0 {
            denom *= BigUint::from(j).pow(s as u32) * factorial(s);
        }
    }
    n_fact / denom
}

/// Calls `f` with the multiplicity vector (`mult[j]` = number of parts equal
/// to `j`, length `n + 1`) of every integer partition of `n`.
pub fn for_each_cycle_type<F: FnMut(&[usize])>(n: usize, mut f: F) {
    fn rec<F: FnMut(&[usize])>(rest: usize, max_part: usize, mult: &mut Vec<usize>, f: &mut F) {
        if rest == 0 {
            f(mult);
            return;
        }
        for part in (1..=max_part.min(rest)).rev() {
            mult[part] += 1;
            rec(rest - part, part, mult, f);
            mult[part] -= 1;
        }
    }
    let mut mult = vec![0usize; n + 1];
    rec(n, n, &mut mult, &mut f);
}

/// Where the tail rule stopped: the first `M` with
/// `e^{-H_r} Σ_{m≤M} ν(m, r) ≥ 1 − tol`.
#[derive(Clone, Debug)]
pub struct TailCutoff {
    pub m_max: usize,
    /// `e^{-H_r} Σ_{m≤M} ν(m,r)`
    pub mass: f64,
    pub table: DensityTable,
}

/// Builds a float `ν(·, r)` table long enough to carry Poisson mass `1 − tol`
/// of `Σ_{j≤r} j Z_j`, and at least `min_len` entries.
pub fn nu_tail_cutoff(r: usize, tol: f64, min_len: usize) -> Result<TailCutoff> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Config(format!("tail tolerance {tol} not in (0, 1)")));
    }
    let scale = (-harmonic_f64(r)).exp();
    let mut m_guess = (8 * r + 32).max(min_len);
    loop {
        let table = nu_table(m_guess, r, Backend::Float64)?;
        let mut mass = CompensatedSum::new();
        let mut hit = None;
        for m in 0..=m_guess {
            let term = table.value(m) * scale;
            mass.add(term);
            if mass.value() >= 1.0 - tol && m + 1 >= min_len {
                hit = Some(m);
                break;
            }
        }
        if let Some(m_max) = hit {
            return Ok(TailCutoff {
                m_max,
                mass: mass.value(),
                table,
            });
        }
        // rounding may keep the mass a hair below 1 − tol for tiny tol
        let last = table.value(m_guess) * scale;
        if m_guess > 16 * r + 64 && last < 1e-20 * mass.value() {
            return Ok(TailCutoff {
                m_max: m_guess,
                mass: mass.value(),
                table,
            });
        }
        m_guess *= 2;
    }
}
