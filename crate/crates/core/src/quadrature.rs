//! Adaptive Gauss–Kronrod (7/15) quadrature on a list of panels.

use crate::numeric::CompensatedSum;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate and `|Kronrod − Gauss|` on `[a, b]`.
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: u32,
    /// Panels wider than this are split before integration.
    pub max_panel: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 0.0,
            max_depth: 16,
            max_panel: f64::INFINITY,
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: (f64, f64),
    tol: f64,
    depth: u32,
    acc: &mut CompensatedSum,
    err: &mut f64,
) {
    let (est, e) = whole;
    if e <= tol || depth == 0 || (b - a) <= 1e-14 * a.abs().max(1.0) {
        acc.add(est);
        *err += e;
        return;
    }
    let m = 0.5 * (a + b);
    let left = gk15(f, a, m);
    let right = gk15(f, m, b);
    adapt(f, a, m, left, 0.5 * tol, depth - 1, acc, err);
    adapt(f, m, b, right, 0.5 * tol, depth - 1, acc, err);
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, never placing a node on
/// a breakpoint. The tolerance is shared out by width against a coarse
/// estimate of `∫|f|`, so noise in negligible panels does not drive
/// refinement. Returns the value and an error estimate.
pub fn integrate_panels<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], opts: QuadOptions) -> (f64, f64) {
    let mut panels = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let pieces = ((b - a) / opts.max_panel).ceil().max(1.0) as usize;
        for p in 0..pieces {
            let lo = a + (b - a) * p as f64 / pieces as f64;
            let hi = if p + 1 == pieces {
                b
            } else {
                a + (b - a) * (p + 1) as f64 / pieces as f64
            };
            panels.push((lo, hi, gk15(f, lo, hi)));
        }
    }
    let width: f64 = panels.iter().map(|p| p.1 - p.0).sum();
    let scale: f64 = panels.iter().map(|p| p.2 .0.abs()).sum();
    let mut acc = CompensatedSum::new();
    let mut err = 0.0;
    for (lo, hi, first) in panels {
        let tol = (opts.rel_tol * scale * (hi - lo) / width).max(opts.abs_tol);
        adapt(f, lo, hi, first, tol, opts.max_depth, &mut acc, &mut err);
    }
    (acc.value(), err)
}
