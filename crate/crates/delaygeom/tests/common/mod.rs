//! Shared parameter sets for the integration suites.

use delaygeom::mcsim::{ActivityMode, FadingMode, SimConfig};
use delaygeom::model::{db_to_linear, dbm_to_watts, path_loss_constant, NetworkParams};
use delaygeom::{CoverageCriterion, DelayQuery};

/// Terminal density of the reference setup: one terminal per 50 m disc.
pub fn lambda_mt_default() -> f64 {
    1.0 / (std::f64::consts::PI * 2500.0)
}

/// Reference setup: 2.1 GHz carrier, 43 dBm transmit power, -174 dBm/Hz
/// noise over 200 MHz, alpha = 4, stations at a tenth of the terminal
/// density.
pub fn table_params() -> NetworkParams {
    let lambda_mt = lambda_mt_default();
    NetworkParams::new(
        lambda_mt / 10.0,
        lambda_mt,
        4.0,
        path_loss_constant(2.1e9),
        dbm_to_watts(43.0),
        dbm_to_watts(-174.0 + 10.0 * 2e8f64.log10()),
    )
    .unwrap()
}

/// Equal station and terminal densities: active probability 0.5851.
pub fn unit_ratio_params() -> NetworkParams {
    NetworkParams::new(1e-4, 1e-4, 4.0, 1.0, 1.0, 0.0).unwrap()
}

/// Saturated load: active probability indistinguishable from 1.
pub fn saturated_params() -> NetworkParams {
    NetworkParams::new(1e-4, 1e8, 4.0, 1.0, 1.0, 0.0).unwrap()
}

pub fn sir(gamma_db: f64) -> CoverageCriterion {
    CoverageCriterion::Sir { gamma: db_to_linear(gamma_db) }
}

pub fn sinr(gamma_db: f64) -> CoverageCriterion {
    CoverageCriterion::Sinr { gamma: db_to_linear(gamma_db) }
}

pub fn sir_asnr(gamma_db: f64) -> CoverageCriterion {
    CoverageCriterion::SirAsnr { gamma: db_to_linear(gamma_db), theta: db_to_linear(12.5) }
}

pub fn query(params: NetworkParams, criterion: CoverageCriterion) -> DelayQuery {
    DelayQuery::new(params, criterion).unwrap()
}

pub fn sim_config(params: &NetworkParams, n: usize, seed: u64) -> SimConfig {
    SimConfig {
        n_realizations: n,
        master_seed: seed,
        activity_mode: ActivityMode::IndependentThinning,
        fading_mode: FadingMode::SemiAnalytic,
        ..SimConfig::for_params(params)
    }
}
