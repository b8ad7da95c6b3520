//! Production approximations for the delay distributions: Euler-sum
//! transform inversion for F2/F3, Beta moment matching, and the
//! midpoint-Riemann bridge that recovers F1 from F3 for deadlines beyond the
//! exact alternating-sum range.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::analytic::{char_fn, f3_gilpelaez, DelayQuery};
use crate::error::{Error, Result};
use crate::model::CoverageCriterion;
use crate::special::regularized_incomplete_beta;

/// Constants of the Euler-sum transform inversion.
///
/// `a` controls the discretization error (~e^{-a}); `n` and `q` are the
/// plain and binomially averaged term counts controlling truncation error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerParams {
    pub a: f64,
    pub n: usize,
    pub q: usize,
}

impl Default for EulerParams {
    fn default() -> Self {
        // 10 ln 10: discretization error of order 1e-10.
        EulerParams { a: 23.025850929940457, n: 21, q: 15 }
    }
}

impl EulerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) || self.n < 1 || self.q < 1 {
            return Err(Error::Domain(format!(
                "Euler parameters require a > 0, n >= 1, q >= 1 (a={}, n={}, q={})",
                self.a, self.n, self.q
            )));
        }
        Ok(())
    }
}

/// 1 - F_Y(y) for Y = -log(coverage), via the Euler-sum inversion of
/// F_Y's transform phi_Z(-is)/s evaluated at s_n = (A + 2 pi i n)/(2y).
fn euler_ccdf(y: f64, q: &DelayQuery, ep: &EulerParams) -> Result<f64> {
    ep.validate()?;
    debug_assert!(y > 0.0);
    let a = ep.a;
    let top = ep.n + ep.q;
    let mut partial = Vec::with_capacity(top + 1);
    let mut acc = 0.0_f64;
    for n in 0..=top {
        let two_pi_n = 2.0 * std::f64::consts::PI * n as f64;
        let t_n = Complex64::new(two_pi_n, -a) / (2.0 * y);
        let phi = char_fn(t_n, q)?;
        let denom = Complex64::new(a, two_pi_n);
        let beta_n = if n == 0 { 2.0 } else { 1.0 };
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign / beta_n * (phi / denom).re;
        partial.push(acc);
    }
    // Binomial average of the last q+1 partial sums.
    let mut avg = 0.0_f64;
    let mut binom = 1.0_f64;
    for j in 0..=ep.q {
        avg += binom * partial[ep.n + j];
        binom = binom * (ep.q - j) as f64 / (j + 1) as f64;
    }
    Ok(1.0 - (a / 2.0).exp() / 2f64.powi(ep.q as i32 - 1) * avg)
}

fn check_approx_range(raw: f64, context: &str) -> Result<f64> {
    if !(raw >= -1e-6 && raw <= 1.0 + 1e-6) {
        return Err(Error::Numerical(format!(
            "{context}: raw value {raw:.6e} outside [-1e-6, 1+1e-6]"
        )));
    }
    Ok(raw.clamp(0.0, 1.0))
}

/// F2 by Euler-sum inversion. The T = 1 singularity is answered directly.
pub fn f2_euler(t_threshold: f64, q: &DelayQuery, ep: &EulerParams) -> Result<f64> {
    if !(t_threshold >= 1.0) {
        return Err(Error::Domain(format!(
            "F2 threshold must be >= 1, got {t_threshold}"
        )));
    }
    if t_threshold == 1.0 {
        return Ok(1.0);
    }
    let raw = euler_ccdf(t_threshold.ln(), q, ep)?;
    check_approx_range(raw, "F2 Euler")
}

/// F3 by Euler-sum inversion; x = 0 and x = 1 are answered directly.
pub fn f3_euler(x: f64, tau: u32, q: &DelayQuery, ep: &EulerParams) -> Result<f64> {
    if tau == 0 {
        return Err(Error::Domain("F3 requires a positive deadline".into()));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("F3 argument x={x} outside [0, 1]")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x == 1.0 {
        return Ok(0.0);
    }
    let z = -(x.ln() / tau as f64).exp_m1(); // 1 - x^{1/tau}
    let raw = euler_ccdf(-z.ln(), q, ep)?;
    check_approx_range(raw, "F3 Euler")
}

/// Beta shape matched to the mean and variance of the conditional coverage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaShape {
    pub a: f64,
    pub b: f64,
    /// Mean of the conditional coverage probability.
    pub mu: f64,
    /// Variance of the conditional coverage probability.
    pub nu: f64,
}

/// Match a Beta distribution to the first two moments of the conditional
/// coverage probability.
///
/// Only SIR and SINR are supported: under SIR+ASNR the coverage has an atom
/// at zero and leaves the Beta family.
pub fn beta_shape(q: &DelayQuery) -> Result<BetaShape> {
    if matches!(q.criterion, CoverageCriterion::SirAsnr { .. }) {
        return Err(Error::Unsupported(
            "Beta moment matching is not applicable under the SIR+ASNR criterion".into(),
        ));
    }
    let m1 = char_fn(Complex64::new(0.0, -1.0), q)?;
    let m2 = char_fn(Complex64::new(0.0, -2.0), q)?;
    if m1.im.abs() > 1e-8 || m2.im.abs() > 1e-8 {
        return Err(Error::Numerical("coverage moments came out non-real".into()));
    }
    let mu = m1.re;
    let nu = m2.re - mu * mu;
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::Numerical(format!("degenerate coverage mean mu={mu}")));
    }
    if !(nu > 0.0 && nu < mu * (1.0 - mu)) {
        return Err(Error::Numerical(format!(
            "coverage variance nu={nu:.6e} outside (0, mu(1-mu)); Beta fit rejected"
        )));
    }
    let b = mu * (1.0 - mu) * (1.0 - mu) / nu - (1.0 - mu);
    let a = mu * b / (1.0 - mu);
    debug_assert!(a > 0.0 && b > 0.0);
    Ok(BetaShape { a, b, mu, nu })
}

/// F2 under the matched Beta: the regularized incomplete beta at 1/T.
pub fn f2_beta(t_threshold: f64, shape: &BetaShape) -> Result<f64> {
    if !(t_threshold >= 1.0) {
        return Err(Error::Domain(format!(
            "F2 threshold must be >= 1, got {t_threshold}"
        )));
    }
    regularized_incomplete_beta(1.0 / t_threshold, shape.a, shape.b)
}

/// F3 under the matched Beta: the regularized incomplete beta at 1 - x^{1/tau}.
pub fn f3_beta(x: f64, tau: u32, shape: &BetaShape) -> Result<f64> {
    if tau == 0 {
        return Err(Error::Domain("F3 requires a positive deadline".into()));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("F3 argument x={x} outside [0, 1]")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x == 1.0 {
        return Ok(0.0);
    }
    let z = -(x.ln() / tau as f64).exp_m1();
    regularized_incomplete_beta(z, shape.a, shape.b)
}

/// Which F3 evaluator backs the Riemann bridge.
#[derive(Debug, Clone)]
pub enum F3Method {
    Euler(EulerParams),
    GilPelaez,
    Beta,
}

/// F1(tau) as the midpoint Riemann sum of int_0^1 F3(x, tau) dx on the
/// uniform n-cell partition. The summation order is fixed by cell index, so
/// the result is independent of the parallel schedule.
pub fn f1_riemann(tau: u32, n: usize, q: &DelayQuery, method: &F3Method) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain("Riemann partition needs n >= 1".into()));
    }
    if tau == 0 {
        return Ok(1.0);
    }
    let shape = match method {
        F3Method::Beta => Some(beta_shape(q)?),
        _ => None,
    };
    let width = 1.0 / n as f64;
    let cells: Vec<Result<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = (i as f64 + 0.5) * width;
            match method {
                F3Method::Euler(ep) => f3_euler(x, tau, q, ep),
                F3Method::GilPelaez => f3_gilpelaez(x, tau, q),
                F3Method::Beta => f3_beta(x, tau, shape.as_ref().expect("computed above")),
            }
        })
        .collect();
    let mut sum = 0.0;
    for cell in cells {
        sum += cell?;
    }
    Ok((sum * width).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::f1;
    use crate::model::{db_to_linear, dbm_to_watts, path_loss_constant, NetworkParams};

    fn saturated_sir() -> DelayQuery {
        let params = NetworkParams::new(1e-4, 1e8, 4.0, 1.0, 1.0, 0.0).unwrap();
        DelayQuery::new(params, CoverageCriterion::Sir { gamma: 1.0 }).unwrap()
    }

    fn table_sinr() -> DelayQuery {
        let lambda_mt = 1.0 / (std::f64::consts::PI * 2500.0);
        let params = NetworkParams::new(
            lambda_mt / 10.0,
            lambda_mt,
            4.0,
            path_loss_constant(2.1e9),
            dbm_to_watts(43.0),
            dbm_to_watts(-174.0 + 10.0 * 2e8f64.log10()),
        )
        .unwrap();
        DelayQuery::new(params, CoverageCriterion::Sinr { gamma: 1.0 }).unwrap()
    }

    #[test]
    fn euler_f2_references() {
        let q = saturated_sir();
        let ep = EulerParams::default();
        assert_eq!(f2_euler(1.0, &q, &ep).unwrap(), 1.0);
        // Converged references; the default truncation carries ~1e-6 of its
        // own error away from T = 1.5.
        let cases = [
            (1.5, 0.5807992817210168, 1e-8),
            (2.0, 0.438900173389282, 2e-6),
            (5.0, 0.175191399302631, 1e-6),
            (10.0, 0.08759687517635264, 1e-7),
        ];
        for (t, want, tol) in cases {
            let v = f2_euler(t, &q, &ep).unwrap();
            assert!((v - want).abs() < tol, "T={t}: got {v:.12}, want {want}");
        }
    }

    #[test]
    fn euler_f3_endpoints_and_monotone() {
        let q = saturated_sir();
        let ep = EulerParams::default();
        assert_eq!(f3_euler(0.0, 5, &q, &ep).unwrap(), 1.0);
        assert_eq!(f3_euler(1.0, 5, &q, &ep).unwrap(), 0.0);
        let v = f3_euler(0.5, 5, &q, &ep).unwrap();
        assert!((v - 0.1133939888864577).abs() < 2e-6, "got {v}");
        let mut prev = 1.0;
        for i in 1..100 {
            let x = i as f64 / 100.0;
            let v = f3_euler(x, 5, &q, &ep).unwrap();
            assert!(v <= prev + 1e-10, "x={x}");
            prev = v;
        }
    }

    #[test]
    fn beta_shape_sir_reference() {
        let shape = beta_shape(&saturated_sir()).unwrap();
        assert!((shape.mu - 0.56009915351155738).abs() < 1e-12);
        assert!((shape.nu - 0.098134057709174214).abs() < 1e-12);
        assert!((shape.a - 0.8461584174523113).abs() < 1e-10);
        assert!((shape.b - 0.66457126701033667).abs() < 1e-10);
        // Matched moments must round-trip through the Beta mean/variance.
        let mean = shape.a / (shape.a + shape.b);
        let var = shape.a * shape.b
            / ((shape.a + shape.b).powi(2) * (shape.a + shape.b + 1.0));
        assert!((mean - shape.mu).abs() < 1e-12);
        assert!((var - shape.nu).abs() < 1e-12);
    }

    #[test]
    fn beta_shape_sinr_reference() {
        let shape = beta_shape(&table_sinr()).unwrap();
        assert!((shape.mu - 0.51006811242040776).abs() < 1e-8);
        assert!((shape.a - 0.61916150509629857).abs() < 1e-6);
        assert!((shape.b - 0.59471854350782584).abs() < 1e-6);
    }

    #[test]
    fn beta_shape_rejections() {
        let params = NetworkParams::new(1e-4, 1e-4, 4.0, 1.0, 1.0, 1e-12).unwrap();
        let q = DelayQuery::new(
            params,
            CoverageCriterion::SirAsnr { gamma: 1.0, theta: 1.0 },
        )
        .unwrap();
        assert!(matches!(beta_shape(&q), Err(Error::Unsupported(_))));
        // Vanishing threshold: coverage concentrates at 1, no Beta shape.
        let params = NetworkParams::new(1e-4, 1e-4, 4.0, 1.0, 1.0, 0.0).unwrap();
        let q = DelayQuery::new(params, CoverageCriterion::Sir { gamma: 1e-14 }).unwrap();
        assert!(matches!(beta_shape(&q), Err(Error::Numerical(_))));
    }

    #[test]
    fn beta_cdf_endpoints() {
        let shape = beta_shape(&saturated_sir()).unwrap();
        assert_eq!(f2_beta(1.0, &shape).unwrap(), 1.0);
        assert_eq!(f3_beta(1.0, 7, &shape).unwrap(), 0.0);
        assert_eq!(f3_beta(0.0, 7, &shape).unwrap(), 1.0);
        assert!(matches!(f2_beta(0.99, &shape), Err(Error::Domain(_))));
    }

    #[test]
    fn riemann_bridge_tau_zero_and_small() {
        let q = saturated_sir();
        for n in [1usize, 7, 64] {
            assert_eq!(f1_riemann(0, n, &q, &F3Method::Euler(EulerParams::default())).unwrap(), 1.0);
        }
        // Matches the exact alternating sum well inside its stable range.
        let exact = f1(5, &q).unwrap();
        let bridged = f1_riemann(5, 2048, &q, &F3Method::Euler(EulerParams::default())).unwrap();
        assert!(
            (exact - bridged).abs() < 2e-4,
            "exact {exact} vs bridged {bridged}"
        );
    }

    #[test]
    fn riemann_refinement_shrinks() {
        let q = saturated_sir();
        let ep = F3Method::Euler(EulerParams::default());
        let r1 = f1_riemann(10, 256, &q, &ep).unwrap();
        let r2 = f1_riemann(10, 512, &q, &ep).unwrap();
        let r4 = f1_riemann(10, 1024, &q, &ep).unwrap();
        assert!((r2 - r4).abs() <= (r1 - r2).abs() + 1e-9);
    }
}
