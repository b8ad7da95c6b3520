//! Gauss hypergeometric 2F1 with real (a, c), complex b, and z <= 0, plus the
//! interference scaling factor built on it.
//!
//! The evaluation strategy is driven by how the function is used here:
//! z = -gamma < 0 with (a, c) = (-2/alpha, 1 - 2/alpha), and b ranging from
//! small integers to imaginary values of magnitude 1e5 and beyond (Fourier
//! inversion arguments).
//!
//! - Pfaff transformation 2F1(a,b;c;z) = (1-z)^{-b} 2F1(c-a,b;c;z') with
//!   z' = z/(z-1) = gamma/(1+gamma) in [0,1): the transformed series always
//!   converges, and for real b >= 0 its terms are all positive. For complex b
//!   the intermediate terms reach magnitude exp(|Im b| * asin(z')), so the
//!   series loses |Im b| * asin(z')/ln(10) digits to cancellation and is only
//!   usable for moderate |Im b|.
//! - For c = a + 1 (always true for the family used here) the exact identity
//!
//!     2F1(-d, b; 1-d; -g) = (1+g)^{-b} + g b J(b+1),
//!     J(mu) = int_0^1 w^{-d} (1+g w)^{-mu} dw,   d = -a in (0,1),
//!
//!   shifts the problem to a bounded oscillatory integral. J is computed by
//!   adaptive quadrature after the substitution w = y^{1/(1-d)} removes the
//!   endpoint singularity, or, for large |mu|, by a two-endpoint asymptotic
//!   expansion: Watson's lemma at w -> 0 plus an integration-by-parts series
//!   at w = 1 (the (1+g)^{-mu} oscillatory boundary terms).

use num_complex::Complex64;

use super::beta::ln_gamma;
use super::dd::Dd;
use super::quad::{quad_adaptive, QuadOptions};
use crate::error::{Error, Result};

/// Series cap from the truncation policy: three consecutive negligible terms
/// or bust.
const MAX_SERIES_TERMS: usize = 100_000;
/// Accept the series result only if cancellation ate at most this factor.
const MAX_CANCELLATION: f64 = 1e5;
/// Natural-log digit-loss estimate above which the series is not attempted.
const SERIES_LOSS_LIMIT: f64 = 12.0;
/// |mu| threshold (scaled by the boundary phase V) for switching J to the
/// asymptotic expansion.
const ASYM_MIN_MU: f64 = 400.0;
const ASYM_MIN_PHASE: f64 = 25.0;

/// Gauss hypergeometric 2F1(a, b; c; z) for real a, c, complex b, z <= 0.
///
/// Accurate to 10+ significant digits on the supported domain. For large
/// imaginary b this requires c = a + 1; other parameter combinations report a
/// numerical error rather than silently losing precision.
pub fn hyp2f1(a: f64, b: Complex64, c: f64, z: f64) -> Result<Complex64> {
    if !(a.is_finite() && c.is_finite() && z.is_finite() && b.re.is_finite() && b.im.is_finite()) {
        return Err(Error::Domain("hyp2f1 arguments must be finite".into()));
    }
    if z > 0.0 {
        return Err(Error::Domain(format!("hyp2f1 requires z <= 0, got z={z}")));
    }
    if c <= 0.0 && c == c.floor() {
        return Err(Error::Domain(format!("hyp2f1 pole: c={c} is a non-positive integer")));
    }
    let one = Complex64::new(1.0, 0.0);
    if b == Complex64::new(0.0, 0.0) || z == 0.0 {
        return Ok(one);
    }
    let gamma = -z;
    let zp = gamma / (1.0 + gamma);
    let v = gamma.ln_1p();

    let series_ok = b.im.abs() * zp.asin() <= SERIES_LOSS_LIMIT && b.re * v <= 600.0;
    if series_ok {
        match pfaff_series(a, b, c, gamma) {
            Ok(val) => return Ok(val),
            Err(first_err) => {
                if (c - (a + 1.0)).abs() <= 1e-9 * (1.0 + c.abs()) {
                    return hyp_via_integral(a, b, gamma);
                }
                return Err(first_err);
            }
        }
    }
    if (c - (a + 1.0)).abs() <= 1e-9 * (1.0 + c.abs()) {
        return hyp_via_integral(a, b, gamma);
    }
    Err(Error::Numerical(format!(
        "hyp2f1: |Im b| = {:.3e} too large for the series at z = {z} and no integral route for c != a+1",
        b.im.abs()
    )))
}

/// Pfaff-transformed power series. Fails (with diagnostics) on overflow,
/// non-convergence, or when cancellation exceeds the accuracy budget.
fn pfaff_series(a: f64, b: Complex64, c: f64, gamma: f64) -> Result<Complex64> {
    let zp = gamma / (1.0 + gamma);
    let big_a = c - a;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut max_norm = 1.0_f64;
    let mut small_streak = 0;
    for n in 0..MAX_SERIES_TERMS {
        let nf = n as f64;
        let ratio = (big_a + nf) * (b + nf) * (zp / ((c + nf) * (nf + 1.0)));
        term *= ratio;
        sum += term;
        let t = term.norm();
        if t > 1e280 {
            return Err(Error::Numerical(format!(
                "hyp2f1 series overflow after {n} terms (|term| = {t:.3e})"
            )));
        }
        max_norm = max_norm.max(t);
        if t < 1e-16 * sum.norm() {
            small_streak += 1;
            if small_streak >= 3 {
                if max_norm > MAX_CANCELLATION * sum.norm() {
                    return Err(Error::Numerical(format!(
                        "hyp2f1 series cancellation: max |term| {:.3e} vs |sum| {:.3e}",
                        max_norm,
                        sum.norm()
                    )));
                }
                let prefactor = (-b * gamma.ln_1p()).exp();
                return Ok(prefactor * sum);
            }
        } else {
            small_streak = 0;
        }
    }
    Err(Error::Numerical(format!(
        "hyp2f1 series did not converge within {MAX_SERIES_TERMS} terms (partial sum {:.6e})",
        sum.norm()
    )))
}

/// 2F1(-d, b; 1-d; -g) through the bounded-integral identity (c = a + 1).
fn hyp_via_integral(a: f64, b: Complex64, gamma: f64) -> Result<Complex64> {
    let d = -a;
    if !(0.0 < d && d < 1.0) {
        return Err(Error::Numerical(format!(
            "integral route requires a in (-1, 0), got a = {a}"
        )));
    }
    let mu = b + 1.0;
    let v = gamma.ln_1p();
    let j = if mu.norm() >= ASYM_MIN_MU.max(ASYM_MIN_PHASE / v) && mu.re >= 0.5 {
        j_asymptotic(d, gamma, mu)
    } else {
        j_numeric(d, gamma, mu)?
    };
    let boundary = (-b * v).exp();
    Ok(boundary + gamma * b * j)
}

/// J(mu) by adaptive quadrature of p * (1 + g y^p)^{-mu} on [0, 1], where the
/// substitution w = y^p (p = 1/(1-d)) removes the w^{-d} endpoint singularity.
fn j_numeric(d: f64, gamma: f64, mu: Complex64) -> Result<Complex64> {
    let p = 1.0 / (1.0 - d);
    let opts = QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-12,
        max_subdivisions: 100_000,
        cancel: None,
    };
    let (val, _) = quad_adaptive(
        |y: f64| (-mu * (gamma * y.powf(p)).ln_1p()).exp(),
        0.0,
        1.0,
        &opts,
    )?;
    Ok(val * p)
}

const WATSON_TERMS: usize = 14;
const ENDPOINT_TERMS: usize = 20;

/// Precomputed expansion coefficients; they depend only on (d, gamma), which
/// stay fixed across the thousands of mu evaluations of one inversion.
#[derive(Clone, Copy)]
struct AsymCoeffs {
    /// phi_k Gamma(k+1-d): the Watson-series weights of mu^{d-1-k}.
    watson: [f64; WATSON_TERMS],
    /// G^{(j)}(V): the boundary-series weights of e^{-mu V} mu^{-(j+1)}.
    endpoint: [f64; ENDPOINT_TERMS],
}

fn asym_coeffs(d: f64, gamma: f64) -> AsymCoeffs {
    // phi(v) = exp(A(v)); A from the Bernoulli series of ln((e^v - 1)/v).
    let mut a_ser = [0.0_f64; WATSON_TERMS];
    a_ser[1] = 1.0 - d / 2.0;
    let bern = [
        1.0 / 24.0,
        -1.0 / 2880.0,
        1.0 / 181_440.0,
        -1.0 / 9_676_800.0,
        1.0 / 47_900_160.0,
        -691.0 / 1.569_209_242_88e13,
    ];
    for (m, &cm) in bern.iter().enumerate() {
        let idx = 2 * (m + 1);
        if idx < WATSON_TERMS {
            a_ser[idx] = -d * cm;
        }
    }
    let phi = series_exp(&a_ser);
    let mut watson = [0.0_f64; WATSON_TERMS];
    for (k, w) in watson.iter_mut().enumerate() {
        *w = phi[k] * ln_gamma(k as f64 + 1.0 - d).exp();
    }

    // Boundary derivatives of G(v) = (e^v - 1)^{-d} e^v at V, through the
    // series of G(V + s) = g^{-d}(1+g) e^s (1 + beta (e^s - 1))^{-d}.
    let beta = (1.0 + gamma) / gamma;
    let mut e_ser = [0.0_f64; ENDPOINT_TERMS]; // e^s - 1
    let mut fact = 1.0;
    for (n, e) in e_ser.iter_mut().enumerate().skip(1) {
        fact *= n as f64;
        *e = 1.0 / fact;
    }
    let q: Vec<f64> = e_ser.iter().map(|x| beta * x).collect();
    // ln(1 + q) by truncated composition.
    let mut l = vec![0.0_f64; ENDPOINT_TERMS];
    let mut q_pow = vec![0.0_f64; ENDPOINT_TERMS];
    q_pow[0] = 1.0;
    for m in 1..ENDPOINT_TERMS {
        q_pow = series_mul(&q_pow, &q);
        let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
        for i in 0..ENDPOINT_TERMS {
            l[i] += sign * q_pow[i] / m as f64;
        }
    }
    let neg_dl: Vec<f64> = l.iter().map(|x| -d * x).collect();
    let r = series_exp_vec(&neg_dl);
    let es: Vec<f64> = {
        let mut es = vec![0.0_f64; ENDPOINT_TERMS];
        let mut fact = 1.0;
        for (n, e) in es.iter_mut().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            *e = 1.0 / fact;
        }
        es
    };
    let g_ser = series_mul(&r, &es);
    let pref = gamma.powf(-d) * (1.0 + gamma);
    let mut endpoint = [0.0_f64; ENDPOINT_TERMS];
    let mut fact = 1.0;
    for (j, e) in endpoint.iter_mut().enumerate() {
        if j > 0 {
            fact *= j as f64;
        }
        *e = pref * g_ser[j] * fact;
    }
    AsymCoeffs { watson, endpoint }
}

/// Large-|mu| expansion of J(mu).
///
/// With v = ln(1 + g w), J = g^{d-1} int_0^V (e^v - 1)^{-d} e^v e^{-mu v} dv,
/// V = ln(1+g). The v -> 0 endpoint contributes a Watson series through the
/// Taylor coefficients of phi(v) = ((e^v-1)/v)^{-d} e^v; the v = V endpoint
/// contributes e^{-mu V} times an integration-by-parts series in the
/// derivatives of G at V.
fn j_asymptotic(d: f64, gamma: f64, mu: Complex64) -> Complex64 {
    use std::cell::RefCell;
    thread_local! {
        static CACHE: RefCell<Option<((u64, u64), AsymCoeffs)>> = const { RefCell::new(None) };
    }
    let key = (d.to_bits(), gamma.to_bits());
    let coeffs = CACHE.with(|c| {
        let mut c = c.borrow_mut();
        match &*c {
            Some((k, v)) if *k == key => *v,
            _ => {
                let v = asym_coeffs(d, gamma);
                *c = Some((key, v));
                v
            }
        }
    });

    let v = gamma.ln_1p();
    let inv_mu = 1.0 / mu;
    let mut watson = Complex64::new(0.0, 0.0);
    let mut pw = ((d - 1.0) * mu.ln()).exp(); // mu^{d-1-k}, incrementally
    for &w in coeffs.watson.iter() {
        watson += w * pw;
        pw *= inv_mu;
    }
    let mut endpoint = Complex64::new(0.0, 0.0);
    let mut mu_pow = inv_mu;
    for &e in coeffs.endpoint.iter() {
        endpoint += e * mu_pow;
        mu_pow *= inv_mu;
    }
    endpoint *= (-mu * v).exp();

    gamma.powf(d - 1.0) * (watson - endpoint)
}

fn series_exp(a: &[f64; WATSON_TERMS]) -> [f64; WATSON_TERMS] {
    let mut c = [0.0_f64; WATSON_TERMS];
    c[0] = 1.0;
    for n in 1..WATSON_TERMS {
        let mut s = 0.0;
        for j in 1..=n {
            s += j as f64 * a[j] * c[n - j];
        }
        c[n] = s / n as f64;
    }
    c
}

fn series_exp_vec(a: &[f64]) -> Vec<f64> {
    let n_len = a.len();
    let mut c = vec![0.0; n_len];
    c[0] = 1.0;
    for n in 1..n_len {
        let mut s = 0.0;
        for j in 1..=n {
            s += j as f64 * a[j] * c[n - j];
        }
        c[n] = s / n as f64;
    }
    c
}

fn series_mul(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut z = vec![0.0; n];
    for i in 0..n {
        if x[i] == 0.0 {
            continue;
        }
        for j in 0..n - i {
            z[i + j] += x[i] * y[j];
        }
    }
    z
}

/// Interference scaling factor 1 + L (2F1(-2/a, k; 1-2/a; -g) - 1).
///
/// This is the exponent factor of the serving-distance average after the
/// interferer field is integrated out; it is >= 1 for real k >= 0 and equals
/// 1 at k = 0 or gamma = 0.
pub fn interference_factor(
    k: Complex64,
    alpha: f64,
    gamma: f64,
    active_prob: f64,
) -> Result<Complex64> {
    validate_factor_params(alpha, gamma, active_prob)?;
    if gamma == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let h = hyp2f1(-2.0 / alpha, k, 1.0 - 2.0 / alpha, -gamma)?;
    Ok(Complex64::new(1.0, 0.0) + active_prob * (h - 1.0))
}

/// Real-argument variant of [`interference_factor`].
pub fn interference_factor_real(k: f64, alpha: f64, gamma: f64, active_prob: f64) -> Result<f64> {
    let v = interference_factor(Complex64::new(k, 0.0), alpha, gamma, active_prob)?;
    if v.im.abs() > 1e-10 * v.re.abs().max(1.0) {
        return Err(Error::Numerical(format!(
            "interference factor at real k={k} produced imaginary residue {:.3e}",
            v.im
        )));
    }
    Ok(v.re)
}

fn validate_factor_params(alpha: f64, gamma: f64, active_prob: f64) -> Result<()> {
    if !(alpha > 2.0) {
        return Err(Error::Domain(format!("path-loss exponent must exceed 2, got {alpha}")));
    }
    if !(gamma >= 0.0) {
        return Err(Error::Domain(format!("threshold must be nonnegative, got {gamma}")));
    }
    if !(active_prob > 0.0 && active_prob <= 1.0) {
        return Err(Error::Domain(format!("active probability must be in (0, 1], got {active_prob}")));
    }
    Ok(())
}

/// Double-double interference factor for integer k: the outer alternating
/// binomial sums of the exact F1 path need ~16 extra digits at tau ~ 50.
/// For real k >= 0 every Pfaff-series term is positive, so the dd sum itself
/// is cancellation-free.
pub(crate) fn interference_factor_dd(k: u32, alpha: f64, gamma: f64, l: Dd) -> Result<Dd> {
    validate_factor_params(alpha, gamma, l.to_f64())?;
    if gamma == 0.0 || k == 0 {
        return Ok(Dd::ONE);
    }
    let g = Dd::from_f64(gamma);
    let one_pg = Dd::ONE.add(g);
    let zp = g.div(one_pg);
    let c = Dd::ONE.sub(Dd::from_f64(2.0).div(Dd::from_f64(alpha)));
    // Pfaff: (1+g)^{-k} * 2F1(1, k; c; z')  (c - a = 1 exactly for this family).
    let prefactor = one_pg.powi(k).recip();
    let b = Dd::from_f64(k as f64);
    let mut term = Dd::ONE;
    let mut sum = Dd::ONE;
    let mut small_streak = 0;
    for n in 0..300_000 {
        let nf = Dd::from_f64(n as f64);
        let num = Dd::ONE.add(nf).mul(b.add(nf)).mul(zp);
        let den = c.add(nf).mul(Dd::from_f64(n as f64 + 1.0));
        term = term.mul(num.div(den));
        sum = sum.add(term);
        if term.hi < 1e-36 * sum.hi {
            small_streak += 1;
            if small_streak >= 3 {
                let hyp = prefactor.mul(sum);
                return Ok(Dd::ONE.add(l.mul(hyp.sub(Dd::ONE))));
            }
        } else {
            small_streak = 0;
        }
    }
    Err(Error::Numerical(format!(
        "dd interference factor series did not converge (k={k}, gamma={gamma})"
    )))
}
