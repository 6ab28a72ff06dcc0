use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use dunkl_hermite::error::KernelError;
use dunkl_hermite::kernels::Kernels;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    DunklKernel,
    HeatKernel,
    RieszKernel,
}

impl Quantity {
    pub fn file_stem(self) -> &'static str {
        match self {
            Quantity::DunklKernel => "dunkl-kernel",
            Quantity::HeatKernel => "heat-kernel",
            Quantity::RieszKernel => "riesz-kernel",
        }
    }

    /// Column holding a second route to the value, if any.
    fn reference_column(self) -> Option<&'static str> {
        match self {
            Quantity::DunklKernel => Some("exp_inner"),
            Quantity::HeatKernel => Some("spectral"),
            Quantity::RieszKernel => None,
        }
    }
}

/// One input row: `t` for the heat kernel, `j` (axis, from 0) for the Riesz
/// kernel, then `x1..xd` and `y1..yd`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointRow {
    pub t: Option<f64>,
    pub j: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Clone, Debug, Default)]
struct Evaluation {
    value: Option<f64>,
    ln_value: Option<f64>,
    error_estimate: Option<f64>,
    panels: Option<usize>,
    reference: Option<f64>,
}

pub fn read_points(path: &Path, dim: usize, what: Quantity) -> Result<Vec<PointRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening points file {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let required = |name: String| column(&name).ok_or_else(|| anyhow!("points file lacks column `{name}`"));
    let xs = (1..=dim).map(|i| required(format!("x{i}"))).collect::<Result<Vec<_>>>()?;
    let ys = (1..=dim).map(|i| required(format!("y{i}"))).collect::<Result<Vec<_>>>()?;
    let t = match what {
        Quantity::HeatKernel => Some(required("t".into())?),
        _ => None,
    };
    let j = column("j");

    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let number = |c: usize| -> Result<f64> {
            let s = record.get(c).unwrap_or("");
            s.parse().with_context(|| format!("row {}: `{s}` is not a number", line + 1))
        };
        let axis = match j {
            Some(c) => {
                let s = record.get(c).unwrap_or("");
                s.parse().with_context(|| format!("row {}: axis `{s}` is not a non-negative integer", line + 1))?
            }
            None => 0,
        };
        if axis >= dim {
            bail!("row {}: axis {axis} is out of range for dimension {dim}", line + 1);
        }
        rows.push(PointRow {
            t: t.map(number).transpose()?,
            j: axis,
            x: xs.iter().map(|&c| number(c)).collect::<Result<_>>()?,
            y: ys.iter().map(|&c| number(c)).collect::<Result<_>>()?,
        });
    }
    Ok(rows)
}

fn evaluate(kernels: &Kernels, what: Quantity, p: &PointRow) -> Result<Evaluation, KernelError> {
    match what {
        Quantity::DunklKernel => {
            let inner: f64 = p.x.iter().zip(&p.y).map(|(a, b)| a * b).sum();
            let (ln_value, error_estimate) = if kernels.is_product() {
                (kernels.ln_dunkl(&p.x, &p.y)?, None)
            } else {
                let m = kernels.dunkl_mehler(&p.x, &p.y)?;
                (m.ln_value, Some(m.tail))
            };
            Ok(Evaluation {
                value: Some(ln_value.exp()),
                ln_value: Some(ln_value),
                error_estimate,
                panels: None,
                reference: Some(inner.exp()),
            })
        }
        Quantity::HeatKernel => {
            let t = p.t.unwrap_or(f64::NAN);
            let ln_value = kernels.ln_heat(t, &p.x, &p.y)?;
            let value = ln_value.exp();
            let spectral = kernels.heat_spectral(t, &p.x, &p.y)?;
            Ok(Evaluation {
                value: Some(value),
                ln_value: Some(ln_value),
                error_estimate: Some((value - spectral).abs() / value.abs().max(f64::MIN_POSITIVE)),
                panels: None,
                reference: Some(spectral),
            })
        }
        Quantity::RieszKernel => {
            let r = kernels.riesz_kernel(p.j, &p.x, &p.y)?;
            Ok(Evaluation {
                value: Some(r.value),
                ln_value: None,
                error_estimate: Some(r.error),
                panels: Some(r.intervals),
                reference: None,
            })
        }
    }
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Evaluates every row and writes the CSV. Rows that fail are kept with
/// status `orbit-too-close` or `error`; returns how many were flagged.
pub fn write_csv(kernels: &Kernels, what: Quantity, points: &[PointRow], path: &Path) -> Result<usize> {
    let dim = kernels.basis().dim();
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    let mut header: Vec<String> = Vec::new();
    match what {
        Quantity::HeatKernel => header.push("t".into()),
        Quantity::RieszKernel => header.push("j".into()),
        Quantity::DunklKernel => {}
    }
    header.extend((1..=dim).map(|i| format!("x{i}")));
    header.extend((1..=dim).map(|i| format!("y{i}")));
    header.extend(["value", "ln_value", "error_estimate", "panels"].map(String::from));
    header.extend(what.reference_column().map(String::from));
    header.extend(["status", "message"].map(String::from));
    w.write_record(&header)?;

    let mut flagged = 0;
    for p in points {
        let mut row: Vec<String> = Vec::new();
        match what {
            Quantity::HeatKernel => row.push(cell(p.t)),
            Quantity::RieszKernel => row.push(p.j.to_string()),
            Quantity::DunklKernel => {}
        }
        row.extend(p.x.iter().chain(&p.y).map(f64::to_string));
        let (e, status, message) = match evaluate(kernels, what, p) {
            Ok(e) => (e, "ok", String::new()),
            Err(err) => {
                flagged += 1;
                let status = match err {
                    KernelError::OrbitTooClose { .. } => "orbit-too-close",
                    _ => "error",
                };
                (Evaluation::default(), status, err.to_string())
            }
        };
        row.extend([cell(e.value), cell(e.ln_value), cell(e.error_estimate), cell(e.panels)]);
        if what.reference_column().is_some() {
            row.push(cell(e.reference));
        }
        row.extend([status.to_string(), message]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(flagged)
}
