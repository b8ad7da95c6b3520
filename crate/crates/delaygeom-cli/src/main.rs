mod output;
mod run;
mod spec;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Delay statistics of downlink Poisson cellular networks: analytical
/// formulas, approximations, and Monte Carlo cross-validation.
#[derive(Parser, Debug)]
#[command(name = "delaygeom", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Mean number of slots until first successful delivery.
    LocalDelay(MetricArgs),
    /// F1(tau): probability the delay exceeds the deadline tau.
    F1(MetricArgs),
    /// F2(T): probability the conditional mean delay is at least T.
    F2(MetricArgs),
    /// F3(x, tau): probability the conditional CCDF at tau is at least x.
    F3(MetricArgs),
    /// Asymptotic packet-loss probability.
    Ploss(MetricArgs),
    /// Dump one Monte Carlo record per realization (index, r0, interferer
    /// count, conditional coverage).
    Simulate(MetricArgs),
    /// Analytic-vs-Monte-Carlo validation report over a sweep grid.
    Validate {
        /// Metric to validate.
        #[arg(value_enum)]
        metric: Metric,
        #[command(flatten)]
        args: MetricArgs,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    LocalDelay,
    F1,
    F2,
    F3,
    Ploss,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    Sir,
    Sinr,
    SirAsnr,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Exact analytical path (Gil-Pelaez inversion for F2/F3).
    Exact,
    /// Euler-sum transform inversion.
    Euler,
    /// Beta moment matching.
    Beta,
    /// Riemann bridge from F3 (deadlines beyond the exact range).
    Riemann,
    /// Monte Carlo estimate.
    Mc,
    /// Serving-distance integral form of the local delay.
    Quadrature,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ActivityArg {
    Thinning,
    Voronoi,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FadingArg {
    SemiAnalytic,
    SlotLevel,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct MetricArgs {
    /// Coverage criterion.
    #[arg(long, value_enum, default_value = "sir")]
    pub criterion: CriterionArg,
    /// Decoding threshold (dB).
    #[arg(long, default_value_t = 0.0)]
    pub gamma_db: f64,
    /// Detection threshold for sir-asnr (dB).
    #[arg(long, default_value_t = 12.5)]
    pub theta_db: f64,
    /// Base-station density (points/m^2); defaults to lambda_mt / 10.
    #[arg(long)]
    pub lambda_bs: Option<f64>,
    /// Terminal density (points/m^2); defaults to 1/(pi 50^2).
    #[arg(long)]
    pub lambda_mt: Option<f64>,
    /// Path-loss exponent.
    #[arg(long, default_value_t = 4.0)]
    pub alpha: f64,
    /// Transmit power (dBm).
    #[arg(long, default_value_t = 43.0)]
    pub power_dbm: f64,
    /// Noise power spectral density (dBm/Hz).
    #[arg(long, default_value_t = -174.0, allow_hyphen_values = true)]
    pub noise_dbm_hz: f64,
    /// Bandwidth (Hz).
    #[arg(long, default_value_t = 2e8)]
    pub bandwidth_hz: f64,
    /// Carrier frequency (Hz); sets the path-loss constant (4 pi fc / c)^2.
    #[arg(long, default_value_t = 2.1e9)]
    pub fc_hz: f64,
    /// Deadline in slots (f1, f3).
    #[arg(long, default_value_t = 10)]
    pub tau: u32,
    /// Conditional mean-delay threshold (f2).
    #[arg(long, default_value_t = 2.0)]
    pub t: f64,
    /// Conditional CCDF level in (0, 1) (f3).
    #[arg(long, default_value_t = 0.5)]
    pub x: f64,
    /// Evaluation method; default depends on the command.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Sweep specification VAR=start:stop:step (inclusive endpoints, dB
    /// variables swept in dB). VAR is one of gamma-db, theta-db, tau, t, x,
    /// lambda-bs, lambda-mt, power-dbm, alpha.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Master seed of the Monte Carlo substreams.
    #[arg(long, default_value_t = 12345)]
    pub seed: u64,
    /// Monte Carlo realization count.
    #[arg(long, default_value_t = 5000)]
    pub realizations: usize,
    /// Slot budget per realization (censoring cap / slot-level trials).
    #[arg(long, default_value_t = 5000)]
    pub slots: usize,
    /// Sampling window radius (m); default sized for 500 expected stations.
    #[arg(long)]
    pub window_radius: Option<f64>,
    /// Station activity model.
    #[arg(long, value_enum, default_value = "thinning")]
    pub activity: ActivityArg,
    /// Fading treatment of the Monte Carlo estimators.
    #[arg(long, value_enum, default_value = "semi-analytic")]
    pub fading: FadingArg,
    /// Output path ("-" for stdout).
    #[arg(long, default_value = "-")]
    pub out: String,
    /// Output format.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    /// F3 backend of the Riemann bridge.
    #[arg(long, value_enum, default_value = "euler")]
    pub f3_method: F3MethodArg,
    /// Partition size of the Riemann bridge.
    #[arg(long, default_value_t = 4096)]
    pub riemann_cells: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum F3MethodArg {
    Euler,
    Exact,
    Beta,
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("DELAYGEOM_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match run::run(cli) {
        Ok(run::Outcome::Success) => ExitCode::SUCCESS,
        Ok(run::Outcome::ValidationFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
