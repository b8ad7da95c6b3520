//! Command dispatch: evaluate the requested metric over the sweep grid and
//! hand rows to the writers.

use anyhow::{anyhow, Context, Result};

use delaygeom::analytic::{self, ExtendedReal};
use delaygeom::approx::{self, EulerParams, F3Method};
use delaygeom::mcsim;

use crate::output::{self, McValue, Row, RowValue, ValidationRow};
use crate::spec::{RunSpec, SweepVar, UsageError};
use crate::{Cli, Command, F3MethodArg, Metric, MethodArg};

pub enum Outcome {
    Success,
    ValidationFailed,
}

/// Extra allowance on the analytic-vs-Monte-Carlo pass rule, on top of the
/// MC confidence half-width.
const METHOD_TOLERANCE: f64 = 1e-4;

pub fn run(cli: Cli) -> Result<Outcome> {
    let (metric, args, validate) = match &cli.command {
        Command::LocalDelay(a) => (Some(Metric::LocalDelay), a, false),
        Command::F1(a) => (Some(Metric::F1), a, false),
        Command::F2(a) => (Some(Metric::F2), a, false),
        Command::F3(a) => (Some(Metric::F3), a, false),
        Command::Ploss(a) => (Some(Metric::Ploss), a, false),
        Command::Simulate(a) => (None, a, false),
        Command::Validate { metric, args } => (Some(*metric), args, true),
    };
    let spec = RunSpec::resolve(metric, args).map_err(usage_exit)?;
    match (metric, validate) {
        (None, _) => simulate(&spec),
        (Some(m), false) => evaluate(m, &spec),
        (Some(m), true) => validate_metric(m, &spec),
    }
}

/// Flag-level errors bypass the numerical-error exit path.
fn usage_exit(e: UsageError) -> anyhow::Error {
    eprintln!("error: {e}");
    std::process::exit(2);
}

fn f3_backend(spec: &RunSpec) -> F3Method {
    match spec.f3_method {
        F3MethodArg::Euler => F3Method::Euler(EulerParams::default()),
        F3MethodArg::Exact => F3Method::GilPelaez,
        F3MethodArg::Beta => F3Method::Beta,
    }
}

fn simulate(spec: &RunSpec) -> Result<Outcome> {
    let params = spec.params_at(&spec.base)?;
    let criterion = spec.criterion_at(&spec.base);
    let cfg = spec.sim_config(&params);
    let records = mcsim::realization_records(&params, &criterion, &cfg)?;
    output::write_simulation(spec, &params, &cfg, &records)?;
    Ok(Outcome::Success)
}

fn analytic_value(metric: Metric, spec: &RunSpec, point: &crate::spec::ScalarPoint, method: MethodArg) -> Result<RowValue> {
    let q = spec.query_at(point)?;
    Ok(match (metric, method) {
        (Metric::LocalDelay, MethodArg::Exact) => match analytic::local_delay(&q)? {
            ExtendedReal::Finite(v) => RowValue::Scalar(v),
            ExtendedReal::Infinite => RowValue::Infinite,
        },
        (Metric::LocalDelay, MethodArg::Quadrature) => match analytic::local_delay_integral(&q)? {
            ExtendedReal::Finite(v) => RowValue::Scalar(v),
            ExtendedReal::Infinite => RowValue::Infinite,
        },
        (Metric::F1, MethodArg::Exact) => RowValue::Scalar(analytic::f1(point.tau as u32, &q)?),
        (Metric::F1, MethodArg::Riemann) => RowValue::Scalar(approx::f1_riemann(
            point.tau as u32,
            spec.riemann_cells,
            &q,
            &f3_backend(spec),
        )?),
        (Metric::F2, MethodArg::Exact) => RowValue::Scalar(analytic::f2_gilpelaez(point.t, &q)?),
        (Metric::F2, MethodArg::Euler) => {
            RowValue::Scalar(approx::f2_euler(point.t, &q, &EulerParams::default())?)
        }
        (Metric::F2, MethodArg::Beta) => {
            let shape = approx::beta_shape(&q)?;
            RowValue::Scalar(approx::f2_beta(point.t, &shape)?)
        }
        (Metric::F3, MethodArg::Exact) => {
            RowValue::Scalar(analytic::f3_gilpelaez(point.x, point.tau as u32, &q)?)
        }
        (Metric::F3, MethodArg::Euler) => RowValue::Scalar(approx::f3_euler(
            point.x,
            point.tau as u32,
            &q,
            &EulerParams::default(),
        )?),
        (Metric::F3, MethodArg::Beta) => {
            let shape = approx::beta_shape(&q)?;
            RowValue::Scalar(approx::f3_beta(point.x, point.tau as u32, &shape)?)
        }
        (Metric::Ploss, MethodArg::Exact) => RowValue::Scalar(analytic::packet_loss(&q)),
        (Metric::Ploss, MethodArg::Riemann) => RowValue::Scalar(approx::f1_riemann(
            point.tau as u32,
            spec.riemann_cells,
            &q,
            &f3_backend(spec),
        )?),
        _ => return Err(anyhow!("method not available for this metric")),
    })
}

fn mc_value(
    metric: Metric,
    spec: &RunSpec,
    point: &crate::spec::ScalarPoint,
) -> Result<(McValue, bool)> {
    let params = spec.params_at(point)?;
    let criterion = spec.criterion_at(point);
    let cfg = spec.sim_config(&params);
    let mk = |e: mcsim::EstimateWithCI| McValue { value: e.value, ci_half: e.half_width_95, n: e.n };
    Ok(match metric {
        Metric::LocalDelay => {
            let est = mcsim::estimate_local_delay(&params, &criterion, &cfg)?;
            (mk(est.estimate), est.stabilized)
        }
        Metric::F1 => (mk(mcsim::estimate_f1(point.tau as u32, &params, &criterion, &cfg)?), true),
        Metric::F2 => (mk(mcsim::estimate_f2(point.t, &params, &criterion, &cfg)?), true),
        Metric::F3 => (
            mk(mcsim::estimate_f3(point.x, point.tau as u32, &params, &criterion, &cfg)?),
            true,
        ),
        Metric::Ploss => (mk(mcsim::estimate_ploss(&params, &criterion, &cfg)?), true),
    })
}

fn evaluate(metric: Metric, spec: &RunSpec) -> Result<Outcome> {
    let grid = spec.grid();
    let mut rows = Vec::with_capacity(grid.len());
    if spec.method == MethodArg::Mc {
        // Sweeps over the metric argument reuse one set of realizations.
        match (metric, spec.default_var()) {
            (Metric::F1, SweepVar::Tau) => {
                let params = spec.params_at(&spec.base)?;
                let criterion = spec.criterion_at(&spec.base);
                let cfg = spec.sim_config(&params);
                let taus: Vec<u32> = grid.iter().map(|(v, _)| *v as u32).collect();
                let ests = mcsim::estimate_f1_grid(&taus, &params, &criterion, &cfg)?;
                for ((v, _), e) in grid.iter().zip(ests) {
                    rows.push(Row {
                        var: *v,
                        value: RowValue::Mc(McValue { value: e.value, ci_half: e.half_width_95, n: e.n }),
                    });
                }
            }
            (Metric::F2, SweepVar::T) => {
                let params = spec.params_at(&spec.base)?;
                let criterion = spec.criterion_at(&spec.base);
                let cfg = spec.sim_config(&params);
                let ts: Vec<f64> = grid.iter().map(|(v, _)| *v).collect();
                let ests = mcsim::estimate_f2_grid(&ts, &params, &criterion, &cfg)?;
                for ((v, _), e) in grid.iter().zip(ests) {
                    rows.push(Row {
                        var: *v,
                        value: RowValue::Mc(McValue { value: e.value, ci_half: e.half_width_95, n: e.n }),
                    });
                }
            }
            _ => {
                for (v, point) in &grid {
                    let (mc, _) = mc_value(metric, spec, point)
                        .with_context(|| format!("at {} = {v}", spec.default_var().column()))?;
                    rows.push(Row { var: *v, value: RowValue::Mc(mc) });
                }
            }
        }
    } else {
        for (v, point) in &grid {
            let value = analytic_value(metric, spec, point, spec.method)
                .with_context(|| format!("at {} = {v}", spec.default_var().column()))?;
            rows.push(Row { var: *v, value });
        }
    }
    output::write_metric(spec, metric, &rows)?;
    Ok(Outcome::Success)
}

/// The analytic reference method used in validation reports.
fn validation_method(metric: Metric, point: &crate::spec::ScalarPoint) -> MethodArg {
    match metric {
        Metric::F2 | Metric::F3 => MethodArg::Euler,
        Metric::F1 if point.tau as u32 > analytic::F1_EXACT_TAU_CAP => MethodArg::Riemann,
        _ => MethodArg::Exact,
    }
}

fn validate_metric(metric: Metric, spec: &RunSpec) -> Result<Outcome> {
    let grid = spec.grid();
    let mut rows = Vec::with_capacity(grid.len());
    let mut passes = 0usize;
    for (v, point) in &grid {
        let method = validation_method(metric, point);
        let reference = analytic_value(metric, spec, point, method)
            .with_context(|| format!("analytic value at {} = {v}", spec.default_var().column()))?;
        let (mc, stabilized) = mc_value(metric, spec, point)
            .with_context(|| format!("Monte Carlo estimate at {} = {v}", spec.default_var().column()))?;
        let (abs_diff, pass) = match reference {
            RowValue::Scalar(a) => {
                let d = (a - mc.value).abs();
                (Some(d), d <= mc.ci_half + METHOD_TOLERANCE)
            }
            // An infinite reference is confirmed by a non-stabilizing
            // running mean, not by a numeric distance.
            RowValue::Infinite => (None, !stabilized),
            RowValue::Mc(_) => unreachable!("analytic reference"),
        };
        passes += pass as usize;
        rows.push(ValidationRow { var: *v, reference, mc, abs_diff, pass });
    }
    let pass_rate = passes as f64 / rows.len() as f64;
    output::write_validation(spec, metric, &rows, pass_rate)?;
    if passes == rows.len() {
        Ok(Outcome::Success)
    } else {
        Ok(Outcome::ValidationFailed)
    }
}
