//! One output row per `(n, r)` and the computation behind it.

use cycle_density::asymptotics::{
    kappa_buchstab, kappa_error_bounds, kappa_explicit_bound_best, nu_dickman, nu_log_expansion,
    nu_saddle, select_regime, EnvelopeParams,
};
use cycle_density::dtv::{dtv_exact_with_backend, dtv_nu_bound, h_function, EXACT_DTV_CEILING};
use cycle_density::exact::harmonic_f64;
use cycle_density::exact::DEFAULT_RATIONAL_CEILING;
use cycle_density::{kappa_table, nu_table, Backend, Estimate, Quantity, SpecialGrids};
use serde::{Deserialize, Serialize};

use crate::config::{Command, QuantityArg, KAPPA_EXACT_CEILING, NU_EXACT_CEILING};
use crate::error::CliError;

pub const STATUS_OK: &str = "ok";
/// The exact value was above its capacity ceiling and left out.
pub const STATUS_NO_EXACT: &str = "no_exact";
/// Regime label of the `H(u)` estimate of the distance.
pub const H_REGIME: &str = "emrp_h";

/// One approximation or bound, in log space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowEstimate {
    pub regime: String,
    pub log_value: f64,
    pub valid: bool,
    pub error_order: String,
    pub error_scale: Option<f64>,
}

impl From<&Estimate> for RowEstimate {
    fn from(e: &Estimate) -> Self {
        Self {
            regime: e.regime.label().to_string(),
            log_value: e.log_value,
            valid: e.valid,
            error_order: e.error_order.clone(),
            error_scale: e.error_scale,
        }
    }
}

/// Absent values are `None` (`null` in JSON, an empty CSV field), never zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub r: usize,
    pub u: f64,
    pub quantity: QuantityArg,
    pub backend: Backend,
    /// Null when it underflows; `exact_log` is authoritative.
    pub exact: Option<f64>,
    pub exact_log: Option<f64>,
    /// Reduced fraction, rational backend only.
    pub exact_rational: Option<String>,
    /// Every estimate that could be evaluated at `(n, r)`.
    pub estimates: Vec<RowEstimate>,
    /// Error envelopes for `|κ − e^{−H_r}|` (bounds command).
    pub envelopes: Vec<RowEstimate>,
    /// The estimate whose stated range contains `(n, r)`.
    pub estimate_log: Option<f64>,
    pub regime: Option<String>,
    /// `estimate / exact`, present only when both are.
    pub ratio: Option<f64>,
    pub bound: Option<f64>,
    /// `|κ − e^{−H_r}|` for the bounds command.
    pub exact_gap: Option<f64>,
    pub valid: Option<bool>,
    pub status: String,
}

impl SweepRow {
    fn new(n: usize, r: usize, quantity: QuantityArg, backend: Backend) -> Self {
        Self {
            n,
            r,
            u: n as f64 / r as f64,
            quantity,
            backend,
            exact: None,
            exact_log: None,
            exact_rational: None,
            estimates: Vec::new(),
            envelopes: Vec::new(),
            estimate_log: None,
            regime: None,
            ratio: None,
            bound: None,
            exact_gap: None,
            valid: None,
            status: STATUS_OK.to_string(),
        }
    }

    /// Keeps only `n, r, u, quantity, backend` and records `status`.
    fn abort(&mut self, status: String) {
        let mut bare = SweepRow::new(self.n, self.r, self.quantity, self.backend);
        bare.status = status;
        *self = bare;
    }

    pub fn failed(&self) -> bool {
        self.status != STATUS_OK && self.status != STATUS_NO_EXACT
    }

    fn set_selected(&mut self, e: &Estimate) {
        self.estimate_log = Some(e.log_value);
        self.regime = Some(e.regime.label().to_string());
        self.valid = Some(e.valid);
        self.bound = e.error_scale;
    }

    fn set_ratio(&mut self) {
        if let (Some(est), Some(ex)) = (self.estimate_log, self.exact_log) {
            self.ratio = Some((est - ex).exp());
        }
    }

    /// First non-finite numeric field, if any.
    fn non_finite_field(&self) -> Option<String> {
        let opt = [
            ("exact", self.exact),
            ("exact_log", self.exact_log),
            ("estimate_log", self.estimate_log),
            ("ratio", self.ratio),
            ("bound", self.bound),
            ("exact_gap", self.exact_gap),
        ];
        if !self.u.is_finite() {
            return Some("u".into());
        }
        for (name, v) in opt {
            if v.is_some_and(|v| !v.is_finite()) {
                return Some(name.into());
            }
        }
        for (list, name) in [
            (&self.estimates, "estimates"),
            (&self.envelopes, "envelopes"),
        ] {
            for e in list {
                if !e.log_value.is_finite() || e.error_scale.is_some_and(|s| !s.is_finite()) {
                    return Some(format!("{name}.{}", e.regime));
                }
            }
        }
        None
    }
}

/// Settings that reach the row computation.
#[derive(Clone, Copy, Debug)]
pub struct RowSettings {
    pub command: Command,
    pub quantity: QuantityArg,
    pub backend: Backend,
    pub tol: f64,
    pub require_exact: bool,
}

/// Computes one row. Numeric trouble is reported in `status`; only a
/// violated `require_exact` is returned as an error.
pub fn compute_row(
    n: usize,
    r: usize,
    s: &RowSettings,
    grids: &SpecialGrids,
) -> Result<SweepRow, CliError> {
    let mut row = SweepRow::new(n, r, s.quantity, s.backend);
    let mut ceiling = match s.quantity {
        QuantityArg::Nu => NU_EXACT_CEILING,
        QuantityArg::Kappa => KAPPA_EXACT_CEILING,
        QuantityArg::Dtv => EXACT_DTV_CEILING,
    };
    if s.backend == Backend::ExactRational {
        // tables hold entries 0..=n
        ceiling = ceiling.min(DEFAULT_RATIONAL_CEILING - 1);
    }
    let with_exact = n <= ceiling;
    if !with_exact && s.require_exact {
        return Err(CliError::Usage(format!(
            "exact {} at n = {n} is above the ceiling {ceiling}",
            s.quantity.name()
        )));
    }
    let filled = match (s.command, s.quantity) {
        (Command::Bounds, _) => bounds_row(&mut row, s, grids, with_exact),
        (_, QuantityArg::Nu) => nu_row(&mut row, s, grids, with_exact),
        (_, QuantityArg::Kappa) => kappa_row(&mut row, s, grids, with_exact),
        (_, QuantityArg::Dtv) => dtv_row(&mut row, s, grids, with_exact),
    };
    match filled {
        Err(e) => row.abort(format!("error: {e}")),
        Ok(()) => {
            if let Some(field) = row.non_finite_field() {
                row.abort(format!("non_finite: {field}"));
            } else if !with_exact {
                row.status = STATUS_NO_EXACT.to_string();
            }
        }
    }
    Ok(row)
}

fn exact_density(
    row: &mut SweepRow,
    kind: Quantity,
    backend: Backend,
) -> cycle_density::Result<()> {
    let (n, r) = (row.n, row.r);
    let t = match kind {
        Quantity::Nu => nu_table(n, r, backend)?,
        Quantity::Kappa => kappa_table(n, r, backend)?,
    };
    // underflow leaves only the log
    row.exact = Some(t.value(n)).filter(|v| *v > 0.0);
    row.exact_log = Some(t.ln_value(n));
    row.exact_rational = t.rational(n).map(|q| q.to_string());
    Ok(())
}

fn nu_row(
    row: &mut SweepRow,
    s: &RowSettings,
    grids: &SpecialGrids,
    with_exact: bool,
) -> cycle_density::Result<()> {
    let (n, r) = (row.n, row.r);
    if with_exact {
        exact_density(row, Quantity::Nu, s.backend)?;
    }
    let mut list = vec![nu_log_expansion(n, r)?, nu_saddle(n, r)?];
    let d = nu_dickman(n, r, grids)?;
    list.push(d.plain);
    list.push(d.corrected);
    row.estimates = list.iter().map(RowEstimate::from).collect();
    row.set_selected(&select_regime(n, r, Quantity::Nu, grids)?);
    row.set_ratio();
    Ok(())
}

fn kappa_row(
    row: &mut SweepRow,
    s: &RowSettings,
    grids: &SpecialGrids,
    with_exact: bool,
) -> cycle_density::Result<()> {
    let (n, r) = (row.n, row.r);
    if with_exact {
        exact_density(row, Quantity::Kappa, s.backend)?;
    }
    row.estimates = vec![RowEstimate::from(&kappa_buchstab(n, r, grids)?)];
    row.set_selected(&select_regime(n, r, Quantity::Kappa, grids)?);
    row.set_ratio();
    Ok(())
}

fn bounds_row(
    row: &mut SweepRow,
    s: &RowSettings,
    grids: &SpecialGrids,
    with_exact: bool,
) -> cycle_density::Result<()> {
    let (n, r) = (row.n, row.r);
    if with_exact {
        exact_density(row, Quantity::Kappa, s.backend)?;
    }
    let main = -harmonic_f64(r);
    let best = kappa_explicit_bound_best(n, r)?;
    row.estimate_log = Some(main);
    row.regime = Some(
        cycle_density::asymptotics::Regime::ExplicitBound
            .label()
            .to_string(),
    );
    row.valid = Some(true);
    row.bound = Some(best.bound);
    row.envelopes = kappa_error_bounds(n, r, grids, EnvelopeParams::default())?
        .iter()
        .map(RowEstimate::from)
        .collect();
    row.exact_gap = row.exact.map(|k| (k - main.exp()).abs());
    row.set_ratio();
    Ok(())
}

fn dtv_row(
    row: &mut SweepRow,
    s: &RowSettings,
    grids: &SpecialGrids,
    with_exact: bool,
) -> cycle_density::Result<()> {
    let (n, r) = (row.n, row.r);
    if with_exact {
        let d = dtv_exact_with_backend(n, r, s.tol, s.backend)?;
        let v = d.exact.expect("exact distance");
        row.exact = Some(v);
        row.exact_log = Some(v.ln());
        row.valid = Some(d.valid);
    }
    let h = h_function(row.u, grids)?;
    row.estimate_log = Some(h.ln());
    row.regime = Some(H_REGIME.to_string());
    row.estimates = vec![RowEstimate {
        regime: H_REGIME.to_string(),
        log_value: h.ln(),
        valid: (n as f64 * (n as f64).ln()).sqrt() <= r as f64,
        error_order: "H(u) u log(u+1)/r".to_string(),
        error_scale: None,
    }];
    if row.valid.is_none() {
        row.valid = Some(row.estimates[0].valid);
    }
    if (5..n).contains(&r) && n <= EXACT_DTV_CEILING {
        row.bound = Some(dtv_nu_bound(n, r)?);
    }
    row.set_ratio();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(quantity: QuantityArg, backend: Backend) -> RowSettings {
        RowSettings {
            command: Command::Eval,
            quantity,
            backend,
            tol: 1e-12,
            require_exact: false,
        }
    }

    #[test]
    fn eval_examples() {
        let g = SpecialGrids::shared();
        let row = compute_row(6, 2, &settings(QuantityArg::Nu, Backend::ExactRational), g).unwrap();
        // 76 involutions in S_6
        assert_eq!(row.exact_rational.as_deref(), Some("19/180"));
        assert_eq!(row.exact, Some(76.0 / 720.0));
        let row = compute_row(9, 5, &settings(QuantityArg::Kappa, Backend::Float64), g).unwrap();
        assert!((row.exact.unwrap() - 1.0 / 9.0).abs() < 1e-16);
        let row = compute_row(
            9,
            5,
            &settings(QuantityArg::Kappa, Backend::ExactRational),
            g,
        )
        .unwrap();
        assert_eq!(row.exact_rational.as_deref(), Some("1/9"));
        let row = compute_row(1, 1, &settings(QuantityArg::Dtv, Backend::Float64), g).unwrap();
        assert!((row.exact.unwrap() - (1.0 - (-1f64).exp())).abs() < 1e-12);
        assert_eq!(row.status, STATUS_OK);
    }

    #[test]
    fn ratio_has_both_operands() {
        let g = SpecialGrids::shared();
        let row = compute_row(1000, 300, &settings(QuantityArg::Nu, Backend::Float64), g).unwrap();
        let want = (row.estimate_log.unwrap() - row.exact_log.unwrap()).exp();
        assert_eq!(row.ratio, Some(want));
        assert_eq!(row.estimates.len(), 4);
    }

    #[test]
    fn exact_above_ceiling_is_null_or_error() {
        let g = SpecialGrids::shared();
        let mut s = settings(QuantityArg::Kappa, Backend::Float64);
        let row = compute_row(2_000_000, 1_000, &s, g).unwrap();
        assert_eq!(row.status, STATUS_NO_EXACT);
        assert!(row.exact.is_none() && row.exact_log.is_none() && row.ratio.is_none());
        assert!(row.estimate_log.is_some() && !row.failed());
        s.require_exact = true;
        let err = compute_row(2_000_000, 1_000, &s, g).unwrap_err();
        assert!(matches!(&err, CliError::Usage(m) if m.contains("1000000")));
        // the rational backend has its own, lower ceiling
        let s = RowSettings {
            require_exact: true,
            ..settings(QuantityArg::Nu, Backend::ExactRational)
        };
        assert!(
            matches!(compute_row(5000, 10, &s, g), Err(CliError::Usage(m)) if m.contains("299"))
        );
        let s = RowSettings {
            require_exact: false,
            ..s
        };
        assert_eq!(
            compute_row(5000, 10, &s, g).unwrap().status,
            STATUS_NO_EXACT
        );
    }

    #[test]
    fn non_finite_aborts_row() {
        let mut row = SweepRow::new(10, 2, QuantityArg::Nu, Backend::Float64);
        row.exact_log = Some(-3.0);
        row.estimate_log = Some(f64::NAN);
        let field = row.non_finite_field().unwrap();
        row.abort(format!("non_finite: {field}"));
        assert_eq!(row.status, "non_finite: estimate_log");
        assert!(row.exact_log.is_none() && row.failed());
    }

    #[test]
    fn bounds_row_dominates() {
        let g = SpecialGrids::shared();
        let s = RowSettings {
            command: Command::Bounds,
            ..settings(QuantityArg::Kappa, Backend::Float64)
        };
        let row = compute_row(100, 10, &s, g).unwrap();
        assert!(row.bound.unwrap() >= row.exact_gap.unwrap());
        assert_eq!(row.envelopes.len(), 6);
    }
}
