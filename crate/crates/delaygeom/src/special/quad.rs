//! Adaptive quadrature: Gauss-Kronrod 15(7) panels with a worst-first
//! subdivision queue, plus a semi-infinite driver that grows the upper limit
//! by interval doubling and watches for divergence.

use std::collections::BinaryHeap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Accuracy and budget knobs for the quadrature routines.
///
/// `max_subdivisions` applies per panel of the semi-infinite driver. The
/// optional `cancel` flag is polled inside the subdivision loops so long
/// integrations can be interrupted cooperatively.
#[derive(Debug, Clone)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub cancel: Option<Arc<AtomicBool>>,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 200_000,
            cancel: None,
        }
    }
}

impl QuadOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::Domain("quadrature tolerances must be positive".into()));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::Domain("max_subdivisions must be >= 1".into()));
        }
        Ok(())
    }

    fn cancelled(&self) -> bool {
        self.cancel
            .as_ref()
            .map(|c| c.load(Ordering::Relaxed))
            .unwrap_or(false)
    }
}

/// Value types the Gauss-Kronrod kernel can accumulate.
pub trait QuadValue: Copy {
    fn zero() -> Self;
    fn add(self, rhs: Self) -> Self;
    fn scale(self, s: f64) -> Self;
    fn norm(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, rhs: Self) -> Self {
        self + rhs
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add(self, rhs: Self) -> Self {
        self + rhs
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(self) -> f64 {
        num_complex::ComplexFloat::abs(self)
    }
}

// 15-point Kronrod / 7-point Gauss rule (positive abscissae; QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_870,
    0.279_705_391_489_277,
    0.381_830_050_505_119,
    0.417_959_183_673_469,
];

/// One GK15 evaluation on [a, b]; returns (kronrod value, error estimate).
fn gk15<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc.scale(WGK[7]);
    let mut gauss = fc.scale(WG[3]);
    let mut resabs = fc.norm() * WGK[7];
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        let pair = f1.add(f2);
        kronrod = kronrod.add(pair.scale(WGK[j]));
        resabs += WGK[j] * (f1.norm() + f2.norm());
        if j % 2 == 1 {
            gauss = gauss.add(pair.scale(WG[j / 2]));
        }
    }
    let value = kronrod.scale(half);
    let raw_err = kronrod.add(gauss.scale(-1.0)).norm() * half.abs();
    // Standard rescaling so the estimate is not absurdly optimistic.
    let resabs = resabs * half.abs();
    let err = if resabs > 0.0 && raw_err > 0.0 {
        let scale = (200.0 * raw_err / resabs).powf(1.5);
        if scale < 1.0 {
            (resabs * scale).max(raw_err * 1e-3)
        } else {
            raw_err.max(resabs * 1e-14)
        }
    } else {
        raw_err
    };
    (value, err)
}

struct Segment<T> {
    err: f64,
    a: f64,
    b: f64,
    value: T,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Adaptive integration over a finite interval. Returns (value, error estimate).
pub fn quad_adaptive<T: QuadValue, F: Fn(f64) -> T>(
    f: F,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<(T, f64)> {
    opts.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain("quad_adaptive requires finite endpoints".into()));
    }
    if a == b {
        return Ok((T::zero(), 0.0));
    }
    let (v0, e0) = gk15(&f, a, b);
    if !v0.norm().is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite integrand values on [{a}, {b}]"
        )));
    }
    let mut heap = BinaryHeap::new();
    heap.push(Segment { err: e0, a, b, value: v0 });
    let mut total = v0;
    let mut total_err = e0;
    let mut splits = 0usize;
    while total_err > opts.abs_tol.max(opts.rel_tol * total.norm()) {
        if splits >= opts.max_subdivisions {
            return Err(Error::Numerical(format!(
                "quad_adaptive: no convergence after {splits} subdivisions (err={total_err:.3e}, value={:.6e})",
                total.norm()
            )));
        }
        if splits % 64 == 0 && opts.cancelled() {
            return Err(Error::Cancelled);
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval at f64 resolution; accept what we have.
            heap.push(Segment { err: 0.0, ..worst });
            total_err -= worst.err;
            continue;
        }
        let (vl, el) = gk15(&f, worst.a, mid);
        let (vr, er) = gk15(&f, mid, worst.b);
        if !(vl.norm().is_finite() && vr.norm().is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite integrand values near [{:.6e}, {:.6e}]",
                worst.a, worst.b
            )));
        }
        total = total.add(vl).add(vr).add(worst.value.scale(-1.0));
        total_err += el + er - worst.err;
        heap.push(Segment { err: el, a: worst.a, b: mid, value: vl });
        heap.push(Segment { err: er, a: mid, b: worst.b, value: vr });
        splits += 1;
    }
    Ok((total, total_err))
}

/// Integrate one doubling panel in bounded-width stripes so that heavily
/// oscillatory panels keep the subdivision heap (and memory) small.
fn integrate_panel<T: QuadValue, F: Fn(f64) -> T>(
    f: &F,
    lo: f64,
    hi: f64,
    opts: &QuadOptions,
) -> Result<T> {
    const MAX_STRIPE_WIDTH: f64 = 1024.0;
    const MAX_STRIPES: f64 = 4096.0;
    let width = hi - lo;
    let stripe = (width / MAX_STRIPES).max(MAX_STRIPE_WIDTH).min(width);
    let n = (width / stripe).ceil() as usize;
    // Stripe errors add up across a cancelling panel; split the budget so the
    // panel total keeps its accuracy.
    let stripe_opts = QuadOptions {
        abs_tol: (opts.abs_tol / n as f64).max(1e-300),
        ..opts.clone()
    };
    let mut total = T::zero();
    let step = width / n as f64;
    for i in 0..n {
        let a = lo + step * i as f64;
        let b = if i + 1 == n { hi } else { lo + step * (i + 1) as f64 };
        let (v, _) = quad_adaptive(f, a, b, &stripe_opts)?;
        total = total.add(v);
    }
    Ok(total)
}

/// Growth-streak length and magnitude bound of the divergence detector.
const DIVERGENCE_STREAK: usize = 8;
const DIVERGENCE_BOUND: f64 = 1e12;
/// Hard cap on doublings: 2^320 is far beyond any integrand in scope.
const MAX_PANELS: usize = 320;

fn semi_infinite_impl<T: QuadValue, F: Fn(f64) -> T>(f: F, opts: &QuadOptions) -> Result<T> {
    opts.validate()?;
    let panel_tol = QuadOptions {
        abs_tol: (opts.abs_tol / 4.0).max(1e-300),
        rel_tol: opts.rel_tol / 4.0,
        max_subdivisions: opts.max_subdivisions,
        cancel: opts.cancel.clone(),
    };
    let mut total = T::zero();
    let mut prev_norm = 0.0_f64;
    let mut growth_streak = 0usize;
    // Envelope proxy: the last three panel magnitudes. A single small panel
    // can be a phase accident of an oscillatory integrand.
    let mut recent = [f64::INFINITY; 3];
    let mut hi = 1.0_f64;
    let mut lo = 0.0_f64;
    for _ in 0..MAX_PANELS {
        if opts.cancelled() {
            return Err(Error::Cancelled);
        }
        let panel = match integrate_panel(&f, lo, hi, &panel_tol) {
            Ok(v) => v,
            Err(Error::Numerical(msg)) => {
                // Non-finite values while already blowing up -> divergence.
                // Budget exhaustion stays a numerical error.
                if msg.contains("non-finite") && (growth_streak >= 3 || total.norm() > 1e6) {
                    return Err(Error::Diverges);
                }
                return Err(Error::Numerical(msg));
            }
            Err(e) => return Err(e),
        };
        total = total.add(panel);
        let norm = total.norm();
        if !norm.is_finite() {
            return Err(Error::Diverges);
        }
        if norm > prev_norm {
            growth_streak += 1;
        } else {
            growth_streak = 0;
        }
        if norm > DIVERGENCE_BOUND && growth_streak >= DIVERGENCE_STREAK {
            return Err(Error::Diverges);
        }
        prev_norm = norm;
        let threshold = opts.abs_tol.max(opts.rel_tol * norm);
        recent.rotate_left(1);
        recent[2] = panel.norm();
        if recent.iter().all(|&p| p < threshold) {
            return Ok(total);
        }
        lo = hi;
        hi *= 2.0;
    }
    Err(Error::Numerical(
        "semi-infinite quadrature: no convergence within the doubling cap".into(),
    ))
}

/// Integrate `f` over [0, inf).
///
/// Panels [0,1], [1,2], [2,4], ... are each integrated adaptively; the sum
/// stops once two consecutive panels fall below tolerance. Monotone growth of
/// the running total past 1e12 over eight successive doublings is reported as
/// `Error::Diverges`.
pub fn quad_semi_infinite<F: Fn(f64) -> f64>(f: F, opts: &QuadOptions) -> Result<f64> {
    semi_infinite_impl(f, opts)
}

/// Complex-valued variant of [`quad_semi_infinite`].
pub fn quad_semi_infinite_complex<F: Fn(f64) -> Complex64>(
    f: F,
    opts: &QuadOptions,
) -> Result<Complex64> {
    semi_infinite_impl(f, opts)
}
