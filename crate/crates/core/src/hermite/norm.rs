//! The Gaussian normalisation integral `c_κ = ∫ e^{−|x|²/2} dμ_κ`.

use std::f64::consts::{LN_2, PI};

use libm::lgamma;

use crate::error::HermiteError;
use crate::quad::{integrate, integrate_pieces};
use crate::reflection::RootSystem;

/// Closed form for one axis of a product group:
/// `∫ e^{−u²/2} |√2 u|^{2κ} du = 2^{2κ+1/2} Γ(κ+1/2)`.
pub fn axis_normalization(kappa: f64) -> f64 {
    ((2.0 * kappa + 0.5) * LN_2 + lgamma(kappa + 0.5)).exp()
}

/// `c_κ`, in closed form for product groups and by adaptive polar
/// integration otherwise (`d ≤ 3`), to relative accuracy about `1e-10`.
pub fn c_kappa(rs: &RootSystem) -> Result<f64, HermiteError> {
    if let Some(k) = rs.axis_multiplicities() {
        return Ok(k.iter().map(|&k| axis_normalization(k)).product());
    }
    let d = rs.dim() as f64;
    let g = rs.gamma();
    // radial part ∫_0^∞ r^{2γ+d−1} e^{−r²/2} dr
    let radial = ((g + d / 2.0 - 1.0) * LN_2 + lgamma(g + d / 2.0)).exp();
    let angular = match rs.dim() {
        2 => circle_integral(rs)?,
        3 => sphere_integral(rs)?,
        n => return Err(HermiteError::UnsupportedDimension(n)),
    };
    Ok(radial * angular)
}

fn mirror_angles(rs: &RootSystem) -> Vec<f64> {
    let mut cuts = vec![0.0, 2.0 * PI];
    for r in rs.positive_roots() {
        let c = r.components();
        let base = c[1].atan2(c[0]) + PI / 2.0;
        for k in -2..=2 {
            let t = base + k as f64 * PI;
            if t > 0.0 && t < 2.0 * PI {
                cuts.push(t);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    cuts
}

fn circle_integral(rs: &RootSystem) -> Result<f64, HermiteError> {
    let cuts = mirror_angles(rs);
    integrate_pieces(|t| rs.weight(&[t.cos(), t.sin()]), &cuts, 0.0, 1e-12, 4000)
        .map(|r| r.value)
        .map_err(|r| HermiteError::QuadratureNonConvergence { estimate: r.value, error: r.error })
}

fn sphere_integral(rs: &RootSystem) -> Result<f64, HermiteError> {
    let mut failed = None;
    let outer = integrate(
        |theta| {
            let (st, ct) = theta.sin_cos();
            let inner = integrate(
                |phi| rs.weight(&[st * phi.cos(), st * phi.sin(), ct]),
                0.0,
                2.0 * PI,
                0.0,
                1e-11,
                2000,
            );
            match inner {
                Ok(v) => v.value * st,
                Err(v) => {
                    failed = Some(v);
                    v.value * st
                }
            }
        },
        0.0,
        PI,
        0.0,
        1e-10,
        2000,
    );
    match (outer, failed) {
        (Ok(v), None) => Ok(v.value),
        (Ok(v), Some(e)) | (Err(v), Some(e)) => {
            Err(HermiteError::QuadratureNonConvergence { estimate: v.value, error: e.error.max(v.error) })
        }
        (Err(v), None) => Err(HermiteError::QuadratureNonConvergence { estimate: v.value, error: v.error }),
    }
}
