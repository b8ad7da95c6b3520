//! Resolution of command-line flags into a concrete run specification:
//! linear-unit parameters, sweep grid, method, and simulator config.

use std::f64::consts::PI;
use std::fmt;

use delaygeom::mcsim::{ActivityMode, FadingMode, SimConfig};
use delaygeom::model::{self, CoverageCriterion, NetworkParams};
use delaygeom::DelayQuery;

use crate::{ActivityArg, CriterionArg, FadingArg, FormatArg, Metric, MethodArg, MetricArgs};

/// A flag-level mistake: reported on stderr with exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Scalars a sweep may vary, in their user-facing units (dB stays dB).
#[derive(Debug, Clone, Copy)]
pub struct ScalarPoint {
    pub gamma_db: f64,
    pub theta_db: f64,
    pub tau: f64,
    pub t: f64,
    pub x: f64,
    pub lambda_bs: f64,
    pub lambda_mt: f64,
    pub power_dbm: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    GammaDb,
    ThetaDb,
    Tau,
    T,
    X,
    LambdaBs,
    LambdaMt,
    PowerDbm,
    Alpha,
}

impl SweepVar {
    pub fn parse(name: &str) -> Option<SweepVar> {
        Some(match name {
            "gamma-db" => SweepVar::GammaDb,
            "theta-db" => SweepVar::ThetaDb,
            "tau" => SweepVar::Tau,
            "t" => SweepVar::T,
            "x" => SweepVar::X,
            "lambda-bs" => SweepVar::LambdaBs,
            "lambda-mt" => SweepVar::LambdaMt,
            "power-dbm" => SweepVar::PowerDbm,
            "alpha" => SweepVar::Alpha,
            _ => return None,
        })
    }

    /// Column name in output files.
    pub fn column(&self) -> &'static str {
        match self {
            SweepVar::GammaDb => "gamma_db",
            SweepVar::ThetaDb => "theta_db",
            SweepVar::Tau => "tau",
            SweepVar::T => "t",
            SweepVar::X => "x",
            SweepVar::LambdaBs => "lambda_bs",
            SweepVar::LambdaMt => "lambda_mt",
            SweepVar::PowerDbm => "power_dbm",
            SweepVar::Alpha => "alpha",
        }
    }

    pub fn apply(&self, point: &mut ScalarPoint, v: f64) {
        match self {
            SweepVar::GammaDb => point.gamma_db = v,
            SweepVar::ThetaDb => point.theta_db = v,
            SweepVar::Tau => point.tau = v,
            SweepVar::T => point.t = v,
            SweepVar::X => point.x = v,
            SweepVar::LambdaBs => point.lambda_bs = v,
            SweepVar::LambdaMt => point.lambda_mt = v,
            SweepVar::PowerDbm => point.power_dbm = v,
            SweepVar::Alpha => point.alpha = v,
        }
    }
}

fn parse_sweep(raw: &str) -> Result<(SweepVar, Vec<f64>), UsageError> {
    let (name, grid) = raw.split_once('=').ok_or_else(|| {
        UsageError(format!("--sweep: expected VAR=start:stop:step, got '{raw}'"))
    })?;
    let var = SweepVar::parse(name)
        .ok_or_else(|| UsageError(format!("--sweep: unknown variable '{name}'")))?;
    let parts: Vec<&str> = grid.split(':').collect();
    if parts.len() != 3 {
        return Err(UsageError(format!(
            "--sweep: expected start:stop:step after '{name}=', got '{grid}'"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| UsageError(format!("--sweep: '{p}' is not a number")))
        })
        .collect::<Result<_, _>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) {
        return Err(UsageError(format!("--sweep: step must be positive, got {step}")));
    }
    if stop < start {
        return Err(UsageError(format!(
            "--sweep: stop {stop} is below start {start}"
        )));
    }
    let n = ((stop - start) / step + 1.0 + 1e-9).floor() as usize;
    let values = (0..n).map(|i| start + step * i as f64).collect();
    Ok((var, values))
}

/// Everything a command run needs, resolved and validated.
pub struct RunSpec {
    pub metric: Option<Metric>,
    pub method: MethodArg,
    pub criterion: CriterionArg,
    pub base: ScalarPoint,
    pub sweep: Option<(SweepVar, Vec<f64>)>,
    pub noise_w: f64,
    pub k: f64,
    pub sim_seed: u64,
    pub realizations: usize,
    pub slots: usize,
    pub window_radius: Option<f64>,
    pub activity: ActivityMode,
    pub fading: FadingMode,
    pub out: String,
    pub format: FormatArg,
    pub f3_method: crate::F3MethodArg,
    pub riemann_cells: usize,
}

impl RunSpec {
    pub fn resolve(metric: Option<Metric>, args: &MetricArgs) -> Result<RunSpec, UsageError> {
        let lambda_mt = args.lambda_mt.unwrap_or(1.0 / (PI * 2500.0));
        let lambda_bs = args.lambda_bs.unwrap_or(lambda_mt / 10.0);
        let base = ScalarPoint {
            gamma_db: args.gamma_db,
            theta_db: args.theta_db,
            tau: args.tau as f64,
            t: args.t,
            x: args.x,
            lambda_bs,
            lambda_mt,
            power_dbm: args.power_dbm,
            alpha: args.alpha,
        };
        let sweep = args.sweep.as_deref().map(parse_sweep).transpose()?;
        if let Some((SweepVar::Tau, values)) = &sweep {
            if values.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
                return Err(UsageError(
                    "--sweep: tau grid must consist of nonnegative integers".into(),
                ));
            }
        }
        let method = resolve_method(metric, args)?;
        let noise_w =
            model::dbm_to_watts(args.noise_dbm_hz + 10.0 * args.bandwidth_hz.log10());
        Ok(RunSpec {
            metric,
            method,
            criterion: args.criterion,
            base,
            sweep,
            noise_w,
            k: model::path_loss_constant(args.fc_hz),
            sim_seed: args.seed,
            realizations: args.realizations,
            slots: args.slots,
            window_radius: args.window_radius,
            activity: match args.activity {
                ActivityArg::Thinning => ActivityMode::IndependentThinning,
                ActivityArg::Voronoi => ActivityMode::Voronoi,
            },
            fading: match args.fading {
                FadingArg::SemiAnalytic => FadingMode::SemiAnalytic,
                FadingArg::SlotLevel => FadingMode::SlotLevel,
            },
            out: args.out.clone(),
            format: args.format,
            f3_method: args.f3_method,
            riemann_cells: args.riemann_cells,
        })
    }

    /// Linear-unit parameters at one sweep point.
    pub fn params_at(&self, point: &ScalarPoint) -> anyhow::Result<NetworkParams> {
        Ok(NetworkParams::new(
            point.lambda_bs,
            point.lambda_mt,
            point.alpha,
            self.k,
            model::dbm_to_watts(point.power_dbm),
            self.noise_w,
        )?)
    }

    pub fn criterion_at(&self, point: &ScalarPoint) -> CoverageCriterion {
        let gamma = model::db_to_linear(point.gamma_db);
        match self.criterion {
            CriterionArg::Sir => CoverageCriterion::Sir { gamma },
            CriterionArg::Sinr => CoverageCriterion::Sinr { gamma },
            CriterionArg::SirAsnr => CoverageCriterion::SirAsnr {
                gamma,
                theta: model::db_to_linear(point.theta_db),
            },
        }
    }

    pub fn query_at(&self, point: &ScalarPoint) -> anyhow::Result<DelayQuery> {
        let params = self.params_at(point)?;
        Ok(DelayQuery::new(params, self.criterion_at(point))?)
    }

    pub fn sim_config(&self, params: &NetworkParams) -> SimConfig {
        let mut cfg = SimConfig::for_params(params);
        cfg.n_realizations = self.realizations;
        cfg.n_slots = self.slots;
        cfg.master_seed = self.sim_seed;
        cfg.activity_mode = self.activity;
        cfg.fading_mode = self.fading;
        if let Some(r) = self.window_radius {
            cfg.window_radius = r;
        }
        cfg
    }

    /// Grid of sweep points (a single base point without --sweep).
    pub fn grid(&self) -> Vec<(f64, ScalarPoint)> {
        match &self.sweep {
            None => {
                let var = self.default_var();
                let value = match var {
                    SweepVar::GammaDb => self.base.gamma_db,
                    SweepVar::Tau => self.base.tau,
                    SweepVar::T => self.base.t,
                    SweepVar::X => self.base.x,
                    _ => self.base.gamma_db,
                };
                vec![(value, self.base)]
            }
            Some((var, values)) => values
                .iter()
                .map(|&v| {
                    let mut p = self.base;
                    var.apply(&mut p, v);
                    (v, p)
                })
                .collect(),
        }
    }

    /// Leading output column: the swept variable, or the metric's natural
    /// argument when running a single point.
    pub fn default_var(&self) -> SweepVar {
        if let Some((var, _)) = &self.sweep {
            return *var;
        }
        match self.metric {
            Some(Metric::F1) => SweepVar::Tau,
            Some(Metric::F2) => SweepVar::T,
            Some(Metric::F3) => SweepVar::X,
            _ => SweepVar::GammaDb,
        }
    }
}

fn resolve_method(metric: Option<Metric>, args: &MetricArgs) -> Result<MethodArg, UsageError> {
    let metric = match metric {
        Some(m) => m,
        None => return Ok(args.method.unwrap_or(MethodArg::Mc)), // simulate
    };
    let method = args.method.unwrap_or(match metric {
        Metric::F2 | Metric::F3 => MethodArg::Euler,
        _ => MethodArg::Exact,
    });
    let allowed: &[MethodArg] = match metric {
        Metric::LocalDelay => &[MethodArg::Exact, MethodArg::Quadrature, MethodArg::Mc],
        Metric::F1 => &[MethodArg::Exact, MethodArg::Riemann, MethodArg::Mc],
        Metric::F2 | Metric::F3 => {
            &[MethodArg::Exact, MethodArg::Euler, MethodArg::Beta, MethodArg::Mc]
        }
        Metric::Ploss => &[MethodArg::Exact, MethodArg::Riemann, MethodArg::Mc],
    };
    if !allowed.contains(&method) {
        return Err(UsageError(format!(
            "--method {:?} is not valid for this command",
            method
        )));
    }
    if method == MethodArg::Beta && args.criterion == CriterionArg::SirAsnr {
        return Err(UsageError(
            "--method beta is not applicable with --criterion sir-asnr (coverage has an atom at zero)"
                .into(),
        ));
    }
    Ok(method)
}
