//! Constant fits for the pointwise kernel estimates.
//!
//! Each estimate has the form `LHS ≤ C · RHS` with an unspecified `C`. The
//! fit reports `C = max LHS/RHS` over a sample grid and over the grid
//! refined once (every old point is kept); the estimate passes when the
//! fitted constant is finite and grows by less than `max_growth`.

use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{finish, linspace, logspace, not_applicable, refined, rng_for, CheckName, CheckResult, Outcome, VerifyConfig};
use crate::error::{KernelError, VerifyError};
use crate::hermite::HermiteBasis;
use crate::kernels::{heat_kernel_classical_dy, ln_heat_kernel_classical, Kernels};
use crate::par;

/// The fitted pointwise estimates. The first six concern the classical
/// kernel `k⁰_t`, the next six the Dunkl heat kernel against the
/// translated Gaussian `τ_x(e^{−b|·|²/t})(−y)`, the last two the
/// reflected-centre form with a sum over `R₊ ∪ {0}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Inequality {
    /// `k⁰_t ≤ C t^{−d/2} e^{−a|x−y|²/t}`, `t ≤ 1`.
    ClassicalSmallTime,
    /// `|y_j k⁰_t| ≤ C t^{−(d+1)/2} e^{−a|x−y|²/t}`, `t ≤ 1`.
    ClassicalWeightedSmallTime,
    /// `|∂_{y_j} k⁰_t| ≤ C t^{−(d+1)/2} e^{−a|x−y|²/t}`, `t ≤ 1`.
    ClassicalGradientSmallTime,
    /// `|y_j ∂_{y_i} k⁰_t| ≤ C t^{−d/2−1} e^{−a|x−y|²/t}`, `t ≤ 1`.
    ClassicalWeightedGradientSmallTime,
    /// `k⁰_t ≤ C e^{−dt} e^{−a|x−y|²}`, `t > 1`.
    ClassicalLargeTime,
    /// `|y_j k⁰_t| ≤ C e^{−dt} e^{−a|x−y|²}`, `t > 1`.
    ClassicalWeightedLargeTime,
    /// `k_t ≤ C t^{−γ−d/2} τ`, `t ≤ 1`.
    HeatSmallTime,
    /// `|y_j k_t| ≤ C t^{−γ−(d+1)/2} τ`, `t ≤ 1`.
    HeatWeightedSmallTime,
    /// `|∂_{y_j} k_t| ≤ C t^{−γ−(d+1)/2} τ`, `t ≤ 1`.
    HeatGradientSmallTime,
    /// `|y_j ∂_{y_i} k_t| ≤ C t^{−γ−d/2−1} τ`, `t ≤ 1`.
    HeatWeightedGradientSmallTime,
    /// `k_t ≤ C e^{−(2γ+d)t} τ`, `t > 1`, Gaussian `e^{−b|·|²}`.
    HeatLargeTime,
    /// `|y_j k_t| ≤ C e^{−(2γ+d)t} τ`, `t > 1`.
    HeatWeightedLargeTime,
    /// `|(x_j − y_j) k_t| ≤ C t^{−γ−d/2+1/2} Σ_α τ_{σ_α x}(e^{−c|·|²/t})(−y)`.
    ReflectedDifference,
    /// `|(x_j − y_j) ∂_{y_i} k_t| ≤ C t^{−γ−d/2} Σ_α τ_{σ_α x}(e^{−c|·|²/t})(−y)`.
    ReflectedDifferenceGradient,
}

impl Inequality {
    pub const ALL: [Inequality; 14] = [
        Inequality::ClassicalSmallTime,
        Inequality::ClassicalWeightedSmallTime,
        Inequality::ClassicalGradientSmallTime,
        Inequality::ClassicalWeightedGradientSmallTime,
        Inequality::ClassicalLargeTime,
        Inequality::ClassicalWeightedLargeTime,
        Inequality::HeatSmallTime,
        Inequality::HeatWeightedSmallTime,
        Inequality::HeatGradientSmallTime,
        Inequality::HeatWeightedGradientSmallTime,
        Inequality::HeatLargeTime,
        Inequality::HeatWeightedLargeTime,
        Inequality::ReflectedDifference,
        Inequality::ReflectedDifferenceGradient,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Inequality::ClassicalSmallTime => "classical-small-time",
            Inequality::ClassicalWeightedSmallTime => "classical-weighted-small-time",
            Inequality::ClassicalGradientSmallTime => "classical-gradient-small-time",
            Inequality::ClassicalWeightedGradientSmallTime => "classical-weighted-gradient-small-time",
            Inequality::ClassicalLargeTime => "classical-large-time",
            Inequality::ClassicalWeightedLargeTime => "classical-weighted-large-time",
            Inequality::HeatSmallTime => "heat-small-time",
            Inequality::HeatWeightedSmallTime => "heat-weighted-small-time",
            Inequality::HeatGradientSmallTime => "heat-gradient-small-time",
            Inequality::HeatWeightedGradientSmallTime => "heat-weighted-gradient-small-time",
            Inequality::HeatLargeTime => "heat-large-time",
            Inequality::HeatWeightedLargeTime => "heat-weighted-large-time",
            Inequality::ReflectedDifference => "reflected-difference",
            Inequality::ReflectedDifferenceGradient => "reflected-difference-gradient",
        }
    }

    fn small_time(self) -> bool {
        !matches!(
            self,
            Inequality::ClassicalLargeTime
                | Inequality::ClassicalWeightedLargeTime
                | Inequality::HeatLargeTime
                | Inequality::HeatWeightedLargeTime
        )
    }
}

/// `ln |v|`, with zero mapped to `−∞`.
fn ln_abs(v: f64) -> f64 {
    if v == 0.0 {
        f64::NEG_INFINITY
    } else {
        v.abs().ln()
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + values.iter().map(|v| (v - top).exp()).sum::<f64>().ln()
}

fn max_ln(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// `ln(LHS/RHS)` for every estimate that applies at time `t`; the
/// others are left at `−∞`.
fn log_ratios(
    kernels: &Kernels,
    s: &super::LemmaSettings,
    t: f64,
    x: &[f64],
    y: &[f64],
) -> Result<[f64; 14], KernelError> {
    use Inequality as I;
    let mut out = [f64::NEG_INFINITY; 14];
    let set = |out: &mut [f64; 14], which: I, v: f64| out[which as usize] = v;
    let basis = kernels.basis();
    let d = basis.dim() as f64;
    let gamma = basis.gamma();
    let dist2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let lnt = t.ln();
    let dims = 0..x.len();

    let ln_k0 = ln_heat_kernel_classical(t, x, y);
    let ln_y = max_ln(y.iter().map(|v| ln_abs(*v)));
    let ln_k = kernels.ln_heat(t, x, y)?;
    let grad = kernels.heat_log_grad_y(t, x, y)?;
    let ln_grad = max_ln(grad.iter().map(|g| ln_abs(*g)));

    if t <= 1.0 {
        let classical_rhs = -s.a * dist2 / t;
        let ln_dk0 = max_ln(dims.clone().map(|j| ln_abs(heat_kernel_classical_dy(j, t, x, y))));
        set(&mut out, I::ClassicalSmallTime, ln_k0 - classical_rhs + 0.5 * d * lnt);
        set(&mut out, I::ClassicalWeightedSmallTime, ln_y + ln_k0 - classical_rhs + 0.5 * (d + 1.0) * lnt);
        set(&mut out, I::ClassicalGradientSmallTime, ln_dk0 - classical_rhs + 0.5 * (d + 1.0) * lnt);
        set(&mut out, I::ClassicalWeightedGradientSmallTime, ln_y + ln_dk0 - classical_rhs + (0.5 * d + 1.0) * lnt);

        let tau = kernels.ln_gaussian_translate(s.b / t, x, y)?;
        let power = gamma + 0.5 * d;
        set(&mut out, I::HeatSmallTime, ln_k - tau + power * lnt);
        set(&mut out, I::HeatWeightedSmallTime, ln_y + ln_k - tau + (power + 0.5) * lnt);
        set(&mut out, I::HeatGradientSmallTime, ln_grad + ln_k - tau + (power + 0.5) * lnt);
        set(&mut out, I::HeatWeightedGradientSmallTime, ln_y + ln_grad + ln_k - tau + (power + 1.0) * lnt);

        let mut centres = vec![kernels.ln_gaussian_translate(s.c / t, x, y)?];
        for root in basis.root_system().positive_roots() {
            centres.push(kernels.ln_gaussian_translate(s.c / t, &root.reflect(x), y)?);
        }
        let sum = log_sum_exp(&centres);
        let ln_diff = max_ln(x.iter().zip(y).map(|(a, b)| ln_abs(a - b)));
        set(&mut out, I::ReflectedDifference, ln_diff + ln_k - sum + (power - 0.5) * lnt);
        set(&mut out, I::ReflectedDifferenceGradient, ln_diff + ln_grad + ln_k - sum + power * lnt);
    } else {
        let classical_rhs = -d * t - s.a * dist2;
        set(&mut out, I::ClassicalLargeTime, ln_k0 - classical_rhs);
        set(&mut out, I::ClassicalWeightedLargeTime, ln_y + ln_k0 - classical_rhs);
        let rhs = -(2.0 * gamma + d) * t + kernels.ln_gaussian_translate(s.b, x, y)?;
        set(&mut out, I::HeatLargeTime, ln_k - rhs);
        set(&mut out, I::HeatWeightedLargeTime, ln_y + ln_k - rhs);
    }
    Ok(out)
}

/// A grid point tagged with whether it belongs to the coarse grid.
#[derive(Clone, Debug)]
struct Tagged<T> {
    value: T,
    coarse: bool,
}

/// The refined one-dimensional grid; even indices form the coarse grid.
fn nested(points: Vec<f64>) -> Vec<Tagged<f64>> {
    points.into_iter().enumerate().map(|(i, value)| Tagged { value, coarse: i % 2 == 0 }).collect()
}

fn nested_grid(axis: &[Tagged<f64>], dim: usize) -> Vec<Tagged<Vec<f64>>> {
    (0..dim).fold(vec![Tagged { value: Vec::new(), coarse: true }], |acc, _| {
        acc.iter()
            .flat_map(|p| {
                axis.iter().map(move |a| Tagged { value: [p.value.as_slice(), &[a.value]].concat(), coarse: p.coarse && a.coarse })
            })
            .collect()
    })
}

/// Coarse and refined maxima of a fitted log-constant.
#[derive(Clone, Copy, Debug)]
struct Fit {
    coarse: f64,
    fine: f64,
}

impl Fit {
    const EMPTY: Fit = Fit { coarse: f64::NEG_INFINITY, fine: f64::NEG_INFINITY };

    fn add(&mut self, v: f64, coarse: bool) {
        self.fine = self.fine.max(v);
        if coarse {
            self.coarse = self.coarse.max(v);
        }
    }

    fn merge(self, o: Fit) -> Fit {
        Fit { coarse: self.coarse.max(o.coarse), fine: self.fine.max(o.fine) }
    }

    fn growth(self) -> f64 {
        (self.fine - self.coarse).exp() - 1.0
    }
}

fn lemma_body(basis: &HermiteBasis, cfg: &VerifyConfig) -> Result<Outcome, VerifyError> {
    let s = &cfg.lemma_bounds;
    let kernels = Kernels::new(basis, cfg.kernel.clone())?;
    let dim = basis.dim();
    let group = kernels.group();
    let xs = nested_grid(&nested(linspace(-s.extent, s.extent, refined(s.points_per_axis))), dim);
    let us = nested_grid(&nested(linspace(-s.offset_extent, s.offset_extent, refined(s.offsets_per_axis))), dim);
    let mut times = nested(logspace(s.t_min, 1.0, refined(s.time_points)));
    // the large-time grid starts just above 1 so that the regimes stay apart
    times.extend(nested(logspace(1.0, s.t_max, refined(s.time_points))).into_iter().skip(1));

    let per_x = par::map(&xs, |x| -> Result<([Fit; 14], usize), KernelError> {
        let mut fits = [Fit::EMPTY; 14];
        let mut count = 0;
        for t in &times {
            let mut ys: Vec<Tagged<Vec<f64>>> =
                xs.iter().map(|y| Tagged { value: y.value.clone(), coarse: y.coarse }).collect();
            let scale = t.value.min(1.0).sqrt();
            for image in group.orbit(&x.value) {
                for u in &us {
                    let y = image.iter().zip(&u.value).map(|(g, u)| g + scale * u).collect();
                    ys.push(Tagged { value: y, coarse: u.coarse });
                }
            }
            for y in &ys {
                let ratios = log_ratios(&kernels, s, t.value, &x.value, &y.value)?;
                let coarse = x.coarse && t.coarse && y.coarse;
                for (fit, r) in fits.iter_mut().zip(ratios) {
                    fit.add(r, coarse);
                }
                count += 1;
            }
        }
        Ok((fits, count))
    });

    let mut fits = [Fit::EMPTY; 14];
    let mut out = Outcome::new();
    for r in per_x {
        let (f, n) = r?;
        for (a, b) in fits.iter_mut().zip(f) {
            *a = a.merge(b);
        }
        out.samples += n;
    }
    for which in Inequality::ALL {
        let fit = fits[which as usize];
        let name = which.as_str();
        out.constant(format!("{name}.coarse"), fit.coarse.exp());
        out.constant(format!("{name}.fine"), fit.fine.exp());
        let growth = fit.growth();
        let finite = fit.fine.is_finite();
        out.require(format!("{name}.growth"), growth, finite && growth < s.max_growth);
        if !finite {
            out.note(format!("{name}: no finite constant ({} time regime)", if which.small_time() { "small" } else { "large" }));
        }
    }
    Ok(out)
}

/// Fits the constants of the fourteen pointwise estimates on the heat
/// kernels and checks that each is stable under grid refinement.
pub fn check_lemma_bounds(basis: &HermiteBasis, cfg: &VerifyConfig) -> CheckResult {
    let start = Instant::now();
    finish(CheckName::LemmaBounds, basis, cfg, start, lemma_body(basis, cfg))
}

fn unit_directions(dim: usize, count: usize, cfg: &VerifyConfig) -> Vec<Vec<f64>> {
    if dim == 1 {
        return vec![vec![1.0], vec![-1.0]];
    }
    let mut rng = rng_for(CheckName::KernelDecay, cfg.seed);
    (0..count)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.into_iter().map(|a| a / n).collect()
        })
        .collect()
}

fn decay_body(basis: &HermiteBasis, cfg: &VerifyConfig) -> Result<Outcome, VerifyError> {
    let s = &cfg.kernel_decay;
    if !basis.root_system().is_product() {
        return Err(not_applicable(CheckName::KernelDecay, "needs the product form of the Dunkl kernel"));
    }
    let kernels = Kernels::new(basis, cfg.kernel.clone())?;
    let dim = basis.dim();
    let power = 2.0 * basis.gamma() + dim as f64;
    let xs = nested_grid(&nested(linspace(-s.extent, s.extent, refined(s.points_per_axis))), dim);
    let seps = nested(logspace(s.min_separation, s.max_separation, refined(s.separations)));
    // the first half of the directions is the coarse set
    let dirs = unit_directions(dim, 2 * s.directions, cfg);
    let coarse_dirs = if dim == 1 { dirs.len() } else { s.directions };
    let floor = 0.5 * s.min_separation;

    let per_x = par::map(&xs, |x| -> Result<(Fit, usize, usize), KernelError> {
        let mut fit = Fit::EMPTY;
        let (mut used, mut skipped) = (0, 0);
        for sep in &seps {
            for (k, dir) in dirs.iter().enumerate() {
                let y: Vec<f64> = x.value.iter().zip(dir).map(|(a, u)| a + sep.value * u).collect();
                let rho = kernels.orbit_distance(&x.value, &y);
                if rho < floor {
                    skipped += 1;
                    continue;
                }
                let coarse = x.coarse && sep.coarse && k < coarse_dirs;
                for j in 0..dim {
                    let k = kernels.riesz_kernel(j, &x.value, &y)?;
                    fit.add(ln_abs(k.value) + power * rho.ln(), coarse);
                }
                used += 1;
            }
        }
        Ok((fit, used, skipped))
    });
    let mut fit = Fit::EMPTY;
    let mut out = Outcome::new();
    let mut skipped = 0;
    for r in per_x {
        let (f, u, k) = r?;
        fit = fit.merge(f);
        out.samples += u;
        skipped += k;
    }
    out.constant("coarse", fit.coarse.exp());
    out.constant("fine", fit.fine.exp());
    out.constant("exponent", power);
    out.constant("skipped_near_orbit", skipped as f64);
    if skipped > 0 {
        out.note(format!("{skipped} pairs closer than {floor} to the orbit were skipped"));
    }
    let growth = fit.growth();
    out.require("growth", growth, fit.fine.is_finite() && growth < s.max_growth);
    Ok(out)
}

/// `|K_j(x,y)| · min_g |y − g·x|^{2γ+d}` stays bounded, with a fitted
/// bound that is stable under refinement of the separations and points.
pub fn check_kernel_decay(basis: &HermiteBasis, cfg: &VerifyConfig) -> CheckResult {
    let start = Instant::now();
    finish(CheckName::KernelDecay, basis, cfg, start, decay_body(basis, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reflection::RootSystem;
    use crate::verify::{LemmaSettings, Status};


    #[test]
    fn nested_grids_tag_the_coarse_points() {
        let g = nested_grid(&nested(linspace(0.0, 1.0, refined(3))), 2);
        assert_eq!(g.len(), 25);
        assert_eq!(g.iter().filter(|p| p.coarse).count(), 9);
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    #[test]
    fn estimate_ratios_at_a_point() {
        let b = HermiteBasis::build(&RootSystem::z2_power(1, &[0.0]).unwrap(), 0).unwrap();
        let k = Kernels::new(&b, Default::default()).unwrap();
        let s = LemmaSettings::default();
        let r = log_ratios(&k, &s, 0.5, &[0.3], &[0.3]).unwrap();
        // at κ = 0 and x = y the classical and Dunkl kernels coincide
        assert!((r[Inequality::ClassicalSmallTime as usize] - (ln_heat_kernel_classical(0.5, &[0.3], &[0.3]) + 0.5 * 0.5f64.ln())).abs() < 1e-12);
        assert_eq!(r[Inequality::HeatLargeTime as usize], f64::NEG_INFINITY);
        assert_eq!(r[Inequality::ReflectedDifference as usize], f64::NEG_INFINITY);
    }

    #[test]
    fn lemma_constants_are_stable() {
        let b = HermiteBasis::build(&RootSystem::z2_power(1, &[0.5]).unwrap(), 0).unwrap();
        let cfg = VerifyConfig { record_timing: false, ..VerifyConfig::default() };
        let r = check_lemma_bounds(&b, &cfg);
        assert_eq!(r.status, Status::Pass, "{r:#?}");
        assert_eq!(r.residuals.len(), 14);
    }

    #[test]
    fn decay_classical_and_rank_one() {
        let cfg = VerifyConfig {
            record_timing: false,
            kernel_decay: crate::verify::DecaySettings { points_per_axis: 3, separations: 4, ..Default::default() },
            ..VerifyConfig::default()
        };
        for kappa in [0.0, 0.5] {
            let b = HermiteBasis::build(&RootSystem::z2_power(1, &[kappa]).unwrap(), 0).unwrap();
            let r = check_kernel_decay(&b, &cfg);
            assert_eq!(r.status, Status::Pass, "{r:#?}");
        }
    }
}
