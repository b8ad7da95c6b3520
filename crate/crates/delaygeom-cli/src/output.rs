//! Output writers. CSV: comma-separated, '.' decimals, LF endings, one fixed
//! header per command; reruns of the same spec are byte-identical. JSON: one
//! object with spec, grid, values, and metadata.

use std::fs::File;
use std::io::{self, BufWriter, Write};

use anyhow::{Context, Result};
use serde_json::json;

use delaygeom::mcsim::{RealizationRecord, SimConfig};
use delaygeom::model::NetworkParams;

use crate::spec::RunSpec;
use crate::{FormatArg, Metric};

#[derive(Debug, Clone, Copy)]
pub struct McValue {
    pub value: f64,
    pub ci_half: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy)]
pub enum RowValue {
    Scalar(f64),
    Infinite,
    Mc(McValue),
}

pub struct Row {
    pub var: f64,
    pub value: RowValue,
}

pub struct ValidationRow {
    pub var: f64,
    pub reference: RowValue,
    pub mc: McValue,
    pub abs_diff: Option<f64>,
    pub pass: bool,
}

fn writer(path: &str) -> Result<Box<dyn Write>> {
    if path == "-" {
        Ok(Box::new(BufWriter::new(io::stdout())))
    } else {
        let file = File::create(path).with_context(|| format!("creating {path}"))?;
        Ok(Box::new(BufWriter::new(file)))
    }
}

fn metric_column(metric: Metric) -> &'static str {
    match metric {
        Metric::LocalDelay => "local_delay",
        Metric::F1 => "f1",
        Metric::F2 => "f2",
        Metric::F3 => "f3",
        Metric::Ploss => "ploss",
    }
}

fn scalar_csv(v: &RowValue) -> String {
    match v {
        RowValue::Scalar(x) => format!("{x}"),
        RowValue::Infinite => "inf".to_string(),
        RowValue::Mc(m) => format!("{}", m.value),
    }
}

fn spec_json(spec: &RunSpec) -> serde_json::Value {
    json!({
        "criterion": format!("{:?}", spec.criterion),
        "method": format!("{:?}", spec.method),
        "gamma_db": spec.base.gamma_db,
        "theta_db": spec.base.theta_db,
        "tau": spec.base.tau,
        "t": spec.base.t,
        "x": spec.base.x,
        "lambda_bs": spec.base.lambda_bs,
        "lambda_mt": spec.base.lambda_mt,
        "alpha": spec.base.alpha,
        "power_dbm": spec.base.power_dbm,
        "noise_w": spec.noise_w,
        "path_loss_constant": spec.k,
        "sweep": spec.default_var().column(),
    })
}

fn metadata_json(spec: &RunSpec) -> serde_json::Value {
    json!({
        "seed": spec.sim_seed,
        "realizations": spec.realizations,
        "slots": spec.slots,
        "window_radius": spec.window_radius,
        "activity": format!("{:?}", spec.activity),
        "fading": format!("{:?}", spec.fading),
        "version": env!("CARGO_PKG_VERSION"),
    })
}

fn value_json(v: &RowValue) -> serde_json::Value {
    match v {
        RowValue::Scalar(x) => json!(x),
        RowValue::Infinite => json!({"value": null, "infinite": true}),
        RowValue::Mc(m) => json!({"value": m.value, "ci_half": m.ci_half, "n": m.n}),
    }
}

pub fn write_metric(spec: &RunSpec, metric: Metric, rows: &[Row]) -> Result<()> {
    let mut w = writer(&spec.out)?;
    let var = spec.default_var().column();
    let col = metric_column(metric);
    match spec.format {
        FormatArg::Csv => {
            let mc = rows.iter().any(|r| matches!(r.value, RowValue::Mc(_)));
            if mc {
                write!(w, "{var},{col},ci_half,n\n")?;
                for r in rows {
                    if let RowValue::Mc(m) = r.value {
                        write!(w, "{},{},{},{}\n", r.var, m.value, m.ci_half, m.n)?;
                    }
                }
            } else {
                write!(w, "{var},{col}\n")?;
                for r in rows {
                    write!(w, "{},{}\n", r.var, scalar_csv(&r.value))?;
                }
            }
        }
        FormatArg::Json => {
            let doc = json!({
                "spec": spec_json(spec),
                "grid": rows.iter().map(|r| r.var).collect::<Vec<_>>(),
                "values": rows.iter().map(|r| value_json(&r.value)).collect::<Vec<_>>(),
                "metadata": metadata_json(spec),
            });
            serde_json::to_writer_pretty(&mut w, &doc)?;
            write!(w, "\n")?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_validation(
    spec: &RunSpec,
    metric: Metric,
    rows: &[ValidationRow],
    pass_rate: f64,
) -> Result<()> {
    let mut w = writer(&spec.out)?;
    let var = spec.default_var().column();
    match spec.format {
        FormatArg::Csv => {
            write!(w, "{var},analytic,mc,ci_half,abs_diff,pass\n")?;
            for r in rows {
                write!(
                    w,
                    "{},{},{},{},{},{}\n",
                    r.var,
                    scalar_csv(&r.reference),
                    r.mc.value,
                    r.mc.ci_half,
                    r.abs_diff.map_or("inf".to_string(), |d| format!("{d}")),
                    r.pass
                )?;
            }
            write!(w, "# pass_rate,{pass_rate}\n")?;
        }
        FormatArg::Json => {
            let doc = json!({
                "spec": spec_json(spec),
                "metric": metric_column(metric),
                "grid": rows.iter().map(|r| r.var).collect::<Vec<_>>(),
                "values": rows
                    .iter()
                    .map(|r| {
                        json!({
                            "analytic": value_json(&r.reference),
                            "mc": r.mc.value,
                            "ci_half": r.mc.ci_half,
                            "abs_diff": r.abs_diff,
                            "pass": r.pass,
                        })
                    })
                    .collect::<Vec<_>>(),
                "pass_rate": pass_rate,
                "metadata": metadata_json(spec),
            });
            serde_json::to_writer_pretty(&mut w, &doc)?;
            write!(w, "\n")?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_simulation(
    spec: &RunSpec,
    params: &NetworkParams,
    cfg: &SimConfig,
    records: &[RealizationRecord],
) -> Result<()> {
    let mut w = writer(&spec.out)?;
    match spec.format {
        FormatArg::Csv => {
            write!(w, "index,r0,n_interferers,pcov\n")?;
            for r in records {
                write!(w, "{},{},{},{}\n", r.index, r.r0, r.n_interferers, r.pcov)?;
            }
        }
        FormatArg::Json => {
            let doc = json!({
                "spec": spec_json(spec),
                "grid": records.iter().map(|r| r.index).collect::<Vec<_>>(),
                "values": records
                    .iter()
                    .map(|r| json!({"r0": r.r0, "n_interferers": r.n_interferers, "pcov": r.pcov}))
                    .collect::<Vec<_>>(),
                "metadata": json!({
                    "seed": cfg.master_seed,
                    "realizations": cfg.n_realizations,
                    "window_radius": cfg.window_radius,
                    "lambda_bs": params.lambda_bs,
                    "version": env!("CARGO_PKG_VERSION"),
                }),
            });
            serde_json::to_writer_pretty(&mut w, &doc)?;
            write!(w, "\n")?;
        }
    }
    w.flush()?;
    Ok(())
}
