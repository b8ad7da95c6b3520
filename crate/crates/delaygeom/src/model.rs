//! System model: physical parameters, coverage criteria, and the exact
//! per-realization conditional coverage probability.
//!
//! Conventions: all quantities are linear SI units (W, m, points/m^2);
//! dB / dBm appear only at the interface helpers. Path loss is attenuation
//! K r^alpha, i.e. received power P h / (K r^alpha).

use crate::error::{Error, Result};
use crate::special::dd::Dd;

/// Physical and geometric parameters of the network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkParams {
    /// Base-station density (points/m^2).
    pub lambda_bs: f64,
    /// Mobile-terminal density (points/m^2).
    pub lambda_mt: f64,
    /// Path-loss exponent; must exceed 2.
    pub alpha: f64,
    /// Path-loss constant (free-space reference, dimensionless).
    pub k: f64,
    /// Transmit power (W).
    pub p: f64,
    /// Noise power (W); zero means noise-free.
    pub w: f64,
}

impl NetworkParams {
    pub fn new(lambda_bs: f64, lambda_mt: f64, alpha: f64, k: f64, p: f64, w: f64) -> Result<Self> {
        if !(lambda_bs > 0.0 && lambda_bs.is_finite()) {
            return Err(Error::Domain(format!("lambda_bs must be positive, got {lambda_bs}")));
        }
        if !(lambda_mt > 0.0 && lambda_mt.is_finite()) {
            return Err(Error::Domain(format!("lambda_mt must be positive, got {lambda_mt}")));
        }
        if !(alpha > 2.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("alpha must exceed 2, got {alpha}")));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Domain(format!("path-loss constant must be positive, got {k}")));
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::Domain(format!("transmit power must be positive, got {p}")));
        }
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::Domain(format!("noise power must be nonnegative, got {w}")));
        }
        Ok(NetworkParams { lambda_bs, lambda_mt, alpha, k, p, w })
    }

    /// Probability that a base station serves at least one terminal.
    pub fn active_probability(&self) -> f64 {
        active_probability(self.lambda_bs, self.lambda_mt).expect("validated densities")
    }
}

/// Coverage criterion with its linear thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoverageCriterion {
    /// Success when SIR exceeds `gamma`.
    Sir { gamma: f64 },
    /// Success when SINR exceeds `gamma`.
    Sinr { gamma: f64 },
    /// Success when SIR exceeds `gamma` and the fading-free SNR exceeds `theta`.
    SirAsnr { gamma: f64, theta: f64 },
}

impl CoverageCriterion {
    pub fn validate(&self) -> Result<()> {
        let gamma = self.gamma();
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Domain(format!("decoding threshold must be positive, got {gamma}")));
        }
        if let CoverageCriterion::SirAsnr { theta, .. } = self {
            if !(*theta > 0.0 && theta.is_finite()) {
                return Err(Error::Domain(format!("detection threshold must be positive, got {theta}")));
            }
        }
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        match self {
            CoverageCriterion::Sir { gamma }
            | CoverageCriterion::Sinr { gamma }
            | CoverageCriterion::SirAsnr { gamma, .. } => *gamma,
        }
    }
}

/// One fixed spatial draw: serving distance plus ordered active-interferer
/// distances (all beyond the serving distance).
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    r0: f64,
    interferers: Vec<f64>,
}

impl NetworkRealization {
    pub fn new(r0: f64, interferers: Vec<f64>) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::Domain(format!("serving distance must be positive, got {r0}")));
        }
        let mut prev = r0;
        for &r in &interferers {
            if !(r > prev) {
                return Err(Error::Domain(format!(
                    "interferer distances must be strictly ascending beyond r0 ({r} after {prev})"
                )));
            }
            prev = r;
        }
        Ok(NetworkRealization { r0, interferers })
    }

    pub fn serving_distance(&self) -> f64 {
        self.r0
    }

    pub fn interferers(&self) -> &[f64] {
        &self.interferers
    }
}

/// Probability that a base station is active: 1 - (1 + r/3.5)^{-3.5} with
/// r the terminal-to-station density ratio.
pub fn active_probability(lambda_bs: f64, lambda_mt: f64) -> Result<f64> {
    if !(lambda_bs > 0.0) || !(lambda_mt > 0.0) {
        return Err(Error::Domain(format!(
            "densities must be positive (lambda_bs={lambda_bs}, lambda_mt={lambda_mt})"
        )));
    }
    let ratio = lambda_mt / lambda_bs;
    Ok(1.0 - (1.0 + ratio / 3.5).powf(-3.5))
}

/// Double-double active probability; (1+r/3.5)^{3.5} = x^3 sqrt(x) keeps the
/// computation inside +,*,/,sqrt.
pub(crate) fn active_probability_dd(lambda_bs: f64, lambda_mt: f64) -> Result<Dd> {
    if !(lambda_bs > 0.0) || !(lambda_mt > 0.0) {
        return Err(Error::Domain("densities must be positive".into()));
    }
    let ratio = Dd::from_f64(lambda_mt).div(Dd::from_f64(lambda_bs));
    let x = Dd::ONE.add(ratio.div(Dd::from_f64(3.5)));
    let pow35 = x.powi(3).mul(x.sqrt());
    Ok(Dd::ONE.sub(pow35.recip()))
}

/// Nearest-station distance density 2 pi lambda r exp(-lambda pi r^2).
pub fn nearest_distance_pdf(r0: f64, lambda_bs: f64) -> Result<f64> {
    if !(lambda_bs > 0.0) {
        return Err(Error::Domain(format!("lambda_bs must be positive, got {lambda_bs}")));
    }
    if !(r0 >= 0.0) {
        return Err(Error::Domain(format!("distance must be nonnegative, got {r0}")));
    }
    Ok(2.0 * std::f64::consts::PI * lambda_bs * r0 * (-lambda_bs * std::f64::consts::PI * r0 * r0).exp())
}

/// Criterion-dependent gate applied to the serving link at distance `r0`.
///
/// SIR: 1. SINR: exp(-gamma W K r0^alpha / P). SIR+ASNR: indicator of
/// r0 <= (P / (K W theta))^{1/alpha}, boundary included.
pub fn gate(r0: f64, criterion: &CoverageCriterion, params: &NetworkParams) -> f64 {
    match criterion {
        CoverageCriterion::Sir { .. } => 1.0,
        CoverageCriterion::Sinr { gamma } => {
            (-gamma * params.w * params.k * r0.powf(params.alpha) / params.p).exp()
        }
        CoverageCriterion::SirAsnr { theta, .. } => {
            if r0 <= detection_radius(*theta, params) {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Largest serving distance at which the fading-free SNR clears `theta`.
/// Infinite when the network is noise-free.
pub fn detection_radius(theta: f64, params: &NetworkParams) -> f64 {
    (params.p / (params.k * params.w * theta)).powf(1.0 / params.alpha)
}

/// Exact conditional coverage probability of one slot given the realization:
/// gate(r0) * prod_i (1 + gamma (r0/r_i)^alpha)^{-1}.
pub fn conditional_coverage(
    real: &NetworkRealization,
    criterion: &CoverageCriterion,
    params: &NetworkParams,
) -> f64 {
    let g = gate(real.serving_distance(), criterion, params);
    if g == 0.0 {
        return 0.0;
    }
    let gamma = criterion.gamma();
    let r0 = real.serving_distance();
    let mut prod = 1.0;
    for &ri in real.interferers() {
        prod /= 1.0 + gamma * (r0 / ri).powf(params.alpha);
    }
    g * prod
}

/// SIR threshold above which the local delay diverges: (alpha - 2) / (2 L).
pub fn critical_threshold(alpha: f64, active_prob: f64) -> Result<f64> {
    if !(alpha > 2.0) {
        return Err(Error::Domain(format!("alpha must exceed 2, got {alpha}")));
    }
    if !(active_prob > 0.0 && active_prob <= 1.0) {
        return Err(Error::Domain(format!("active probability must be in (0, 1], got {active_prob}")));
    }
    Ok((alpha - 2.0) / (2.0 * active_prob))
}

/// dB ratio to linear.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear ratio to dB.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// dBm to watts (referenced to 1 mW).
pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * db_to_linear(dbm)
}

/// Watts to dBm.
pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w / 1e-3)
}

/// Free-space path-loss constant (4 pi f_c / c)^2 at carrier `fc_hz`.
pub fn path_loss_constant(fc_hz: f64) -> f64 {
    let c = 3e8;
    (4.0 * std::f64::consts::PI * fc_hz / c).powi(2)
}
