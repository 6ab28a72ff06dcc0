//! Pointwise kernels: the Dunkl kernel `E_κ`, the heat kernel `k_t` of
//! `e^{−tL_κ}`, its classical counterpart, Gaussian translations and the
//! Riesz kernels `K_j`.
//!
//! Values are carried in log form wherever they can overflow: `E_κ` grows
//! like `e^{|x||y|}` and the heat kernel at small `t` evaluates it at
//! `x / sinh 2t`.

mod rank_one;

use serde::{Deserialize, Serialize};

pub use rank_one::{dunkl_kernel_1d, RankOne, SERIES_TERMS};

use crate::error::KernelError;
use crate::hermite::HermiteBasis;
use crate::quad;
use crate::reflection::{ReflectionGroup, RootSystem};

/// Adaptive time-integral settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self { abs_tol: 1e-14, rel_tol: 1e-10, max_intervals: 4000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    /// Term cap for the plain rank-one series.
    pub series_truncation: usize,
    /// Fixed Mehler parameter; per-point choice when absent.
    pub mehler_r: Option<f64>,
    /// Largest admissible ratio of the top degree shell to the Mehler sum.
    pub mehler_tolerance: f64,
    pub quad: QuadSettings,
    /// Riesz kernels refuse points closer than this to the orbit.
    pub separation_floor: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            series_truncation: SERIES_TERMS,
            mehler_r: None,
            mehler_tolerance: 1e-8,
            quad: QuadSettings::default(),
            separation_floor: 1e-6,
        }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<(), KernelError> {
        if let Some(r) = self.mehler_r {
            if !(r > 0.0 && r < 1.0) {
                return Err(KernelError::InvalidParameter(format!("mehler_r = {r} is outside (0, 1)")));
            }
        }
        if !(self.mehler_tolerance > 0.0) || !(self.separation_floor >= 0.0) {
            return Err(KernelError::InvalidParameter("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// A Mehler-inverted kernel value with its diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MehlerValue {
    pub ln_value: f64,
    pub r: f64,
    /// Top-shell contribution relative to the truncated sum.
    pub tail: f64,
}

/// A Riesz kernel value with the quadrature diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RieszValue {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Clone, Debug)]
enum Route {
    /// Product of rank-one kernels, one per axis.
    Product(Vec<RankOne>),
    Mehler,
}

/// `ln sinh u` for `u > 0`, without overflow.
pub(crate) fn ln_sinh(u: f64) -> f64 {
    if u > 20.0 {
        u - std::f64::consts::LN_2 + (-(-2.0 * u).exp()).ln_1p()
    } else {
        u.sinh().ln()
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

/// Kernel evaluators attached to a built basis.
#[derive(Clone, Debug)]
pub struct Kernels<'a> {
    basis: &'a HermiteBasis,
    cfg: KernelConfig,
    route: Route,
    group: ReflectionGroup,
}

impl<'a> Kernels<'a> {
    pub fn new(basis: &'a HermiteBasis, cfg: KernelConfig) -> Result<Self, KernelError> {
        cfg.validate()?;
        let rs = basis.root_system();
        let route = match rs.axis_multiplicities() {
            Some(k) => Route::Product(k.into_iter().map(RankOne::new).collect::<Result<_, _>>()?),
            None => Route::Mehler,
        };
        let group = rs.generate_group().map_err(|e| KernelError::Hermite(e.into()))?;
        Ok(Self { basis, cfg, route, group })
    }

    pub fn basis(&self) -> &HermiteBasis {
        self.basis
    }

    pub fn root_system(&self) -> &RootSystem {
        self.basis.root_system()
    }

    pub fn group(&self) -> &ReflectionGroup {
        &self.group
    }

    pub fn config(&self) -> &KernelConfig {
        &self.cfg
    }

    pub fn is_product(&self) -> bool {
        matches!(self.route, Route::Product(_))
    }

    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn check(&self, x: &[f64]) -> Result<(), KernelError> {
        if x.len() != self.dim() {
            return Err(KernelError::InvalidParameter(format!(
                "point has {} coordinates, expected {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// `ln E_κ(x, y)`.
    pub fn ln_dunkl(&self, x: &[f64], y: &[f64]) -> Result<f64, KernelError> {
        self.check(x)?;
        self.check(y)?;
        match &self.route {
            Route::Product(axes) => Ok(axes.iter().zip(x).zip(y).map(|((k, a), b)| k.ln_value(a * b)).sum()),
            Route::Mehler => Ok(self.dunkl_mehler(x, y)?.ln_value),
        }
    }

    pub fn dunkl(&self, x: &[f64], y: &[f64]) -> Result<f64, KernelError> {
        Ok(self.ln_dunkl(x, y)?.exp())
    }

    /// `∇_y ln E_κ(x, y)`; by differences of the Mehler value for
    /// non-product groups.
    pub fn grad_y_ln_dunkl(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>, KernelError> {
        self.check(x)?;
        self.check(y)?;
        match &self.route {
            Route::Product(axes) => Ok(axes.iter().zip(x).zip(y).map(|((k, a), b)| a * k.log_derivative(a * b)).collect()),
            Route::Mehler => (0..self.dim())
                .map(|j| {
                    let h = 1e-5 * (1.0 + y[j].abs());
                    let mut up = y.to_vec();
                    let mut down = y.to_vec();
                    up[j] += h;
                    down[j] -= h;
                    Ok((self.ln_dunkl(x, &up)? - self.ln_dunkl(x, &down)?) / (2.0 * h))
                })
                .collect(),
        }
    }

    /// `E_κ(x, y)` by inverting the Mehler formula with the basis:
    /// `E_κ(x,y) = (1−r²)^{γ+d/2} e^{r²(|x'|²+|y|²)/(1−r²)} Σ H_n(x')H_n(y) r^{|n|}/2^{|n|}`
    /// with `x' = (1−r²)x/(2r)`. With no fixed `r` in the configuration,
    /// `r = min(1/2, 1/(1+|x||y|))` is halved until the top shell is below
    /// tolerance.
    pub fn dunkl_mehler(&self, x: &[f64], y: &[f64]) -> Result<MehlerValue, KernelError> {
        self.check(x)?;
        self.check(y)?;
        let (mut r, attempts) = match self.cfg.mehler_r {
            Some(r) => (r, 1),
            None => ((1.0 / (1.0 + norm2(x).sqrt() * norm2(y).sqrt())).min(0.5), 8),
        };
        let mut worst = f64::INFINITY;
        for _ in 0..attempts {
            let v = self.mehler_at(x, y, r)?;
            if v.tail <= self.cfg.mehler_tolerance {
                return Ok(v);
            }
            worst = worst.min(v.tail);
            r /= 2.0;
        }
        Err(KernelError::TruncationTooCoarse { tail: worst, tolerance: self.cfg.mehler_tolerance })
    }

    fn mehler_at(&self, x: &[f64], y: &[f64], r: f64) -> Result<MehlerValue, KernelError> {
        let b = self.basis;
        let s = 1.0 - r * r;
        let xp: Vec<f64> = x.iter().map(|v| s * v / (2.0 * r)).collect();
        let (sum, top) = b.mehler_sum(&xp, y, r)?;
        let tail = if sum > 0.0 { top.abs() / sum } else { f64::INFINITY };
        let ln_value = if sum > 0.0 {
            (b.gamma() + b.dim() as f64 / 2.0) * s.ln() + r * r * (norm2(&xp) + norm2(y)) / s + sum.ln()
        } else {
            f64::NAN
        };
        Ok(MehlerValue { ln_value, r, tail })
    }

    fn ln_heat_with_prefactor(&self, ln_prefactor: f64, t: f64, x: &[f64], y: &[f64]) -> Result<f64, KernelError> {
        if !(t > 0.0) {
            return Err(KernelError::InvalidParameter(format!("time {t} is not positive")));
        }
        let u = 2.0 * t;
        let ln_sh = ln_sinh(u);
        let sh = ln_sh.exp();
        let coth = 1.0 / u.tanh();
        let xs: Vec<f64> = x.iter().map(|v| v / sh).collect();
        let b = self.basis;
        Ok(ln_prefactor - (b.gamma() + b.dim() as f64 / 2.0) * ln_sh - 0.5 * coth * (norm2(x) + norm2(y))
            + self.ln_dunkl(&xs, y)?)
    }

    /// `ln k_t(x, y)` with
    /// `k_t = c_κ^{−1} (sinh 2t)^{−γ−d/2} e^{−coth(2t)(|x|²+|y|²)/2} E_κ(x/sinh 2t, y)`.
    pub fn ln_heat(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64, KernelError> {
        self.ln_heat_with_prefactor(-self.basis.c_kappa().ln(), t, x, y)
    }

    pub fn heat(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64, KernelError> {
        Ok(self.ln_heat(t, x, y)?.exp())
    }

    /// The same closed form with `m_κ` in place of `c_κ^{−1}`. It differs
    /// from the true kernel by the factor `2^{γ+d/2}` and exists so that
    /// the discrepancy can be demonstrated.
    pub fn heat_with_m_kappa(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64, KernelError> {
        Ok(self.ln_heat_with_prefactor(self.basis.m_kappa().ln(), t, x, y)?.exp())
    }

    /// `Σ_{|n|≤N} e^{−t(2|n|+2γ+d)} h_n(x) h_n(y)` over the basis.
    pub fn heat_spectral(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64, KernelError> {
        let b = self.basis;
        let hx = b.hermite_functions_at(x)?;
        let hy = b.hermite_functions_at(y)?;
        Ok(b.indices()
            .iter()
            .zip(hx.iter().zip(&hy))
            .map(|(n, (a, c))| (-t * b.eigenvalue_of_order(n.order())).exp() * a * c)
            .sum())
    }

    /// `∇_y ln k_t(x, y)`.
    pub fn heat_log_grad_y(&self, t: f64, x: &[f64], y: &[f64]) -> Result<Vec<f64>, KernelError> {
        if !(t > 0.0) {
            return Err(KernelError::InvalidParameter(format!("time {t} is not positive")));
        }
        let u = 2.0 * t;
        let sh = ln_sinh(u).exp();
        let coth = 1.0 / u.tanh();
        let xs: Vec<f64> = x.iter().map(|v| v / sh).collect();
        let g = self.grad_y_ln_dunkl(&xs, y)?;
        Ok(g.iter().zip(y).map(|(g, yj)| g - coth * yj).collect())
    }

    /// `∇_y k_t(x, y)`.
    pub fn heat_grad_y(&self, t: f64, x: &[f64], y: &[f64]) -> Result<Vec<f64>, KernelError> {
        let k = self.heat(t, x, y)?;
        Ok(self.heat_log_grad_y(t, x, y)?.into_iter().map(|g| k * g).collect())
    }

    /// `ln τ_x(e^{−c|·|²})(−y) = −c(|x|²+|y|²) + ln E_κ(2c y, x)`.
    pub fn ln_gaussian_translate(&self, c: f64, x: &[f64], y: &[f64]) -> Result<f64, KernelError> {
        if !(c > 0.0) {
            return Err(KernelError::InvalidParameter(format!("Gaussian parameter {c} is not positive")));
        }
        let ys: Vec<f64> = y.iter().map(|v| 2.0 * c * v).collect();
        Ok(-c * (norm2(x) + norm2(y)) + self.ln_dunkl(&ys, x)?)
    }

    pub fn gaussian_translate(&self, c: f64, x: &[f64], y: &[f64]) -> Result<f64, KernelError> {
        Ok(self.ln_gaussian_translate(c, x, y)?.exp())
    }

    /// `min_g |g·x − y|`.
    pub fn orbit_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.group.min_orbit_distance(x, y)
    }

    /// `δ_j k_t(x, y)` in `x`: `k_t (y_j − e^{−2t} x_j)/sinh 2t`.
    pub fn heat_lowered(&self, j: usize, t: f64, x: &[f64], y: &[f64]) -> Result<f64, KernelError> {
        let ln_k = self.ln_heat(t, x, y)?;
        let u = 2.0 * t;
        let factor = (y[j] - (-u).exp() * x[j]) * (-ln_sinh(u)).exp();
        Ok(ln_k.exp() * factor)
    }

    /// `K_j(x,y) = π^{−1/2} ∫_0^∞ δ_j k_t(x,y) t^{−1/2} dt`, integrated in
    /// `s = ln t` on each side of `t = 1`.
    pub fn riesz_kernel(&self, j: usize, x: &[f64], y: &[f64]) -> Result<RieszValue, KernelError> {
        self.check(x)?;
        self.check(y)?;
        if j >= self.dim() {
            return Err(KernelError::InvalidParameter(format!("axis {j} out of range")));
        }
        let rho = self.orbit_distance(x, y);
        if rho < self.cfg.separation_floor {
            return Err(KernelError::OrbitTooClose { distance: rho, floor: self.cfg.separation_floor });
        }
        let b = self.basis;
        let decay = 2.0 * b.gamma() + b.dim() as f64 + 2.0;
        // below s_lo the Gaussian factor is under e^{−100}; above s_hi the
        // exponential decay in t is
        let scale = (norm2(x) + norm2(y)).max(rho * rho);
        let s_lo = (rho * rho / 400.0).min(1e-3).ln();
        let s_hi = (1.0 + 60.0 / decay + scale / decay).ln();
        let mut failure = None;
        let mut f = |s: f64| {
            let t = s.exp();
            match self.heat_lowered(j, t, x, y) {
                Ok(v) => v * t.sqrt(),
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        };
        let q = self.cfg.quad;
        let res = quad::integrate_pieces(&mut f, &[s_lo, 0.0, s_hi], q.abs_tol, q.rel_tol, q.max_intervals);
        if let Some(e) = failure {
            return Err(e);
        }
        let norm = std::f64::consts::PI.sqrt().recip();
        match res {
            Ok(r) => Ok(RieszValue { value: r.value * norm, error: r.error * norm, intervals: r.intervals }),
            Err(r) => Err(KernelError::QuadratureNonConvergence { estimate: r.value * norm, error: r.error * norm }),
        }
    }
}

/// Classical Hermite heat kernel
/// `(2π sinh 2t)^{−d/2} exp(−¼[tanh t |x+y|² + coth t |x−y|²])`.
pub fn heat_kernel_classical(t: f64, x: &[f64], y: &[f64]) -> f64 {
    ln_heat_kernel_classical(t, x, y).exp()
}

pub fn ln_heat_kernel_classical(t: f64, x: &[f64], y: &[f64]) -> f64 {
    let d = x.len() as f64;
    let plus: f64 = x.iter().zip(y).map(|(a, b)| (a + b) * (a + b)).sum();
    let minus: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    -0.5 * d * ((2.0 * std::f64::consts::PI).ln() + ln_sinh(2.0 * t)) - 0.25 * (t.tanh() * plus + minus / t.tanh())
}

/// An equivalent form of the classical kernel,
/// `(2π sinh 2t)^{−d/2} exp(−coth(2t)|x−y|²/2 − tanh(t)⟨x,y⟩)`.
pub fn heat_kernel_classical_alt(t: f64, x: &[f64], y: &[f64]) -> f64 {
    let d = x.len() as f64;
    let minus: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-0.5 * d * ((2.0 * std::f64::consts::PI).ln() + ln_sinh(2.0 * t))
        - 0.5 * minus / (2.0 * t).tanh()
        - t.tanh() * dot(x, y))
    .exp()
}

/// `∂k⁰_t/∂y_j = −½[tanh t (y_j + x_j) + coth t (y_j − x_j)] k⁰_t`.
pub fn heat_kernel_classical_dy(j: usize, t: f64, x: &[f64], y: &[f64]) -> f64 {
    -0.5 * (t.tanh() * (y[j] + x[j]) + (y[j] - x[j]) / t.tanh()) * heat_kernel_classical(t, x, y)
}
