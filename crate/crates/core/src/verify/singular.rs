//! Checks on the singular-integral side: the Hörmander conditions, the
//! kernel representation of the Riesz transforms and empirical `L^p`
//! ratios.

use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{basis_at, finish, not_applicable, relative_error, rng_for, slope, CheckName, CheckResult, HormanderSettings, Outcome, VerifyConfig};
use crate::error::{KernelError, VerifyError};
use crate::hermite::HermiteBasis;
use crate::kernels::Kernels;
use crate::par;
use crate::quad::{composite_legendre, gauss_legendre};
use crate::reflection::{Catalogue, RootSystem};
use crate::spectral::{riesz_matrix, synthesize, Analyzer, QuadratureRule, SpectralVector};

/// Which of the two smoothness conditions is integrated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Condition {
    /// `|K(x,y) − K(x,y₀)|`, integrated in `x`.
    SecondVariable,
    /// `|K(y,x) − K(y₀,x)|`, integrated in `x`.
    FirstVariable,
}

impl Condition {
    fn label(self) -> &'static str {
        match self {
            Condition::SecondVariable => "second_variable",
            Condition::FirstVariable => "first_variable",
        }
    }
}

struct Integrand<'k, 'b> {
    kernels: &'k Kernels<'b>,
    j: usize,
    condition: Condition,
    y: Vec<f64>,
    y0: Vec<f64>,
    orbit: Vec<Vec<f64>>,
    delta: f64,
    radius: f64,
}

impl Integrand<'_, '_> {
    fn inside(&self, x: &[f64]) -> bool {
        let far = self.orbit.iter().all(|g| dist(g, x) > 2.0 * self.delta);
        far && x.iter().map(|v| v * v).sum::<f64>().sqrt() <= self.radius
    }

    /// The kernel difference times the weight, zero off the region.
    fn value(&self, x: &[f64]) -> Result<f64, KernelError> {
        if !self.inside(x) {
            return Ok(0.0);
        }
        let k = |a: &[f64], b: &[f64]| self.kernels.riesz_kernel(self.j, a, b).map(|r| r.value);
        let diff = match self.condition {
            Condition::SecondVariable => k(x, &self.y)? - k(x, &self.y0)?,
            Condition::FirstVariable => k(&self.y, x)? - k(&self.y0, x)?,
        };
        Ok(diff.abs() * self.kernels.root_system().weight(x))
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

/// Breakpoints on `[p, q]` with panel widths doubling away from both ends,
/// starting from `hp` at `p` and `hq` at `q`.
fn graded(p: f64, q: f64, hp: f64, hq: f64) -> Vec<f64> {
    let mid = 0.5 * (p + q);
    let mut left = vec![p];
    let mut h = hp;
    while left.last().unwrap() + h < mid {
        left.push(left.last().unwrap() + h);
        h *= 2.0;
    }
    let mut right = vec![q];
    let mut h = hq;
    while right.last().unwrap() - h > mid {
        right.push(right.last().unwrap() - h);
        h *= 2.0;
    }
    left.push(mid);
    left.extend(right.into_iter().rev());
    left
}

/// Graded composite Gauss–Legendre over the one-dimensional region.
fn quadrature_1d(f: &Integrand, nodes: usize) -> Result<f64, KernelError> {
    let r = f.radius;
    let reach = 2.0 * f.delta;
    let mut excluded: Vec<(f64, f64)> = f.orbit.iter().map(|g| (g[0] - reach, g[0] + reach)).collect();
    excluded.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut pieces = Vec::new();
    let mut lo = -r;
    for (a, b) in excluded {
        if a > lo {
            pieces.push((lo, a.min(r)));
        }
        lo = lo.max(b);
    }
    if lo < r {
        pieces.push((lo, r));
    }
    // grade toward orbit boundaries at the scale δ, toward 0 for the weight
    let step = |e: f64| if e.abs() == r { 0.25 * r } else { 0.25 * f.delta };
    let (gx, gw) = gauss_legendre(nodes);
    let mut total = 0.0;
    for (a, b) in pieces {
        if b <= a {
            continue;
        }
        let cuts: Vec<(f64, f64)> = if a < 0.0 && b > 0.0 { vec![(a, 0.0), (0.0, b)] } else { vec![(a, b)] };
        for (p, q) in cuts {
            let hp = if p == 0.0 { 1e-8 } else { step(p) };
            let hq = if q == 0.0 { 1e-8 } else { step(q) };
            let points = graded(p, q, hp.min(0.25 * (q - p)), hq.min(0.25 * (q - p)));
            for w in points.windows(2) {
                let (c, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
                for (x, wt) in gx.iter().zip(&gw) {
                    // panel ends sit on the region boundary; nodes are interior
                    total += h * wt * f.value(&[c + h * x])?;
                }
            }
        }
    }
    Ok(total)
}

/// Importance sampling from a mixture over the orbit of `y` with radial
/// density `2δ/r²` on `r > 2δ`, stratified in the radial variable with two
/// draws per stratum and `samples` kernel differences in total. Returns the estimate and its standard error.
fn monte_carlo(f: &Integrand, samples: usize, rng: &mut ChaCha8Rng) -> Result<(f64, f64), KernelError> {
    let d = f.y.len();
    let sphere = match d {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        _ => 4.0 * std::f64::consts::PI,
    };
    let reach = 2.0 * f.delta;
    let density = |x: &[f64]| {
        let sum: f64 = f
            .orbit
            .iter()
            .map(|g| {
                let r = dist(g, x);
                if r > reach {
                    reach / (r * r) / (sphere * r.powi(d as i32 - 1))
                } else {
                    0.0
                }
            })
            .sum();
        sum / f.orbit.len() as f64
    };
    // every orbit point (and in one dimension both directions) is visited
    // in each stratum; the estimate averages over them
    let centres = f.orbit.len() * if d == 1 { 2 } else { 1 };
    let mut draw = |stratum: f64, strata: f64| -> Result<f64, KernelError> {
        let u = 1.0 - (stratum + rng.random::<f64>()) / strata;
        let r = reach / u;
        let mut total = 0.0;
        for k in 0..centres {
            let dir: Vec<f64> = if d == 1 {
                vec![if k % 2 == 0 { 1.0 } else { -1.0 }]
            } else {
                let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
                let len = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                v.into_iter().map(|a| a / len).collect()
            };
            let centre = &f.orbit[if d == 1 { k / 2 } else { k }];
            let x: Vec<f64> = centre.iter().zip(&dir).map(|(c, v)| c + r * v).collect();
            let v = f.value(&x)?;
            if v != 0.0 {
                total += v / density(&x);
            }
        }
        Ok(total / centres as f64)
    };
    let strata = (samples / (2 * centres)).max(1);
    let (mut sum, mut var) = (0.0, 0.0);
    for h in 0..strata {
        let a = draw(h as f64, strata as f64)?;
        let b = draw(h as f64, strata as f64)?;
        sum += a + b;
        // unbiased within-stratum variance of one draw is (a − b)²/2
        var += (a - b) * (a - b) / 4.0;
    }
    let n = strata as f64;
    Ok((sum / (2.0 * n), var.sqrt() / n))
}

struct Task {
    condition: Condition,
    j: usize,
    anchor: usize,
    separation: usize,
    seed: u64,
}

struct TaskResult {
    quadrature: Option<f64>,
    monte_carlo: f64,
    standard_error: f64,
}

fn hormander_body(basis: &HermiteBasis, cfg: &VerifyConfig) -> Result<Outcome, VerifyError> {
    let s: &HormanderSettings = &cfg.hormander;
    let rs = basis.root_system();
    let dim = basis.dim();
    if dim > 2 || !rs.is_product() {
        return Err(not_applicable(CheckName::Hormander, "integration is only set up for Z2 and Z2^2"));
    }
    let kernels = Kernels::new(basis, cfg.kernel.clone())?;
    let diag = 1.0 / (dim as f64).sqrt();
    let mut rng = rng_for(CheckName::Hormander, cfg.seed);
    let mut tasks = Vec::new();
    for condition in [Condition::SecondVariable, Condition::FirstVariable] {
        for j in 0..dim {
            for anchor in 0..s.anchors.len() {
                for separation in 0..s.separations.len() {
                    tasks.push(Task { condition, j, anchor, separation, seed: rng.next_u64() });
                }
            }
        }
    }
    let results = par::map(&tasks, |task| -> Result<TaskResult, KernelError> {
        let y = vec![s.anchors[task.anchor] * diag; dim];
        let delta = s.separations[task.separation];
        let mut y0 = y.clone();
        y0[0] += delta;
        let f = Integrand {
            kernels: &kernels,
            j: task.j,
            condition: task.condition,
            orbit: kernels.group().orbit(&y),
            radius: y.iter().map(|v| v * v).sum::<f64>().sqrt() + 12.0 / s.decay_constant.sqrt(),
            y,
            y0,
            delta,
        };
        let quadrature = if dim == 1 { Some(quadrature_1d(&f, s.panel_nodes)?) } else { None };
        let mut rng = ChaCha8Rng::seed_from_u64(task.seed);
        let (monte_carlo, standard_error) = monte_carlo(&f, s.samples, &mut rng)?;
        Ok(TaskResult { quadrature, monte_carlo, standard_error })
    });
    let mut out = Outcome::new();
    let mut worst_error = 0.0f64;
    let mut worst_gap = 0.0f64;
    let mut values = vec![vec![0.0f64; s.separations.len()]; 2 * dim];
    for (task, r) in tasks.iter().zip(results) {
        let r = r?;
        out.samples += s.samples;
        let relative = r.standard_error / r.monte_carlo.abs().max(f64::MIN_POSITIVE);
        worst_error = worst_error.max(relative);
        let value = match r.quadrature {
            Some(q) => {
                worst_gap = worst_gap.max(relative_error(r.monte_carlo, q));
                q
            }
            None => r.monte_carlo,
        };
        let row = task.condition as usize * dim + task.j;
        let slot = &mut values[row][task.separation];
        *slot = slot.max(value);
        if relative > s.max_standard_error {
            return Err(VerifyError::MonteCarloVarianceTooHigh { relative });
        }
    }
    let logs: Vec<f64> = s.separations.iter().map(|d| (1.0 / d).ln()).collect();
    for condition in [Condition::SecondVariable, Condition::FirstVariable] {
        for j in 0..dim {
            let v = &values[condition as usize * dim + j];
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let normalised: Vec<f64> = v.iter().map(|x| x / mean).collect();
            let label = condition.label();
            for (d, x) in s.separations.iter().zip(v) {
                out.constant(format!("{label}.axis{j}.delta={d}"), *x);
            }
            let trend = slope(&logs, &normalised);
            out.require(format!("{label}.axis{j}.slope"), trend, trend <= s.max_slope);
        }
    }
    out.residual("max_relative_standard_error", worst_error);
    if dim == 1 {
        // the sampled estimate must land within the tolerance allowed for its error
        out.require("quadrature_vs_monte_carlo", worst_gap, worst_gap < s.max_standard_error);
    }
    Ok(out)
}

/// Integrals of kernel differences away from the orbit of `y` stay
/// bounded as `|y − y₀| → 0`, for both the first and the second variable.
pub fn check_hormander(basis: &HermiteBasis, cfg: &VerifyConfig) -> CheckResult {
    let start = Instant::now();
    finish(CheckName::Hormander, basis, cfg, start, hormander_body(basis, cfg))
}

fn require_rank_one(rs: &RootSystem, check: CheckName) -> Result<(), VerifyError> {
    if rs.catalogue_kind() == Some(Catalogue::Z2Power(1)) {
        Ok(())
    } else {
        Err(not_applicable(check, "set up for the rank-one group Z2 only"))
    }
}

/// `exp(−1/(1 − s²))` on the interval, with `s` its rescaled coordinate.
fn bump(lo: f64, hi: f64) -> impl Fn(f64) -> f64 {
    move |y| {
        let s = (2.0 * y - lo - hi) / (hi - lo);
        if s.abs() < 1.0 {
            (-1.0 / (1.0 - s * s)).exp()
        } else {
            0.0
        }
    }
}

/// `R_j f(x)` from the kernel and from the spectral side, for `f` supported
/// in `[lo, hi]`.
fn representation_routes(
    basis: &HermiteBasis,
    kernels: &Kernels,
    f: &dyn Fn(f64) -> f64,
    support: [f64; 2],
    points: &[f64],
) -> Result<Vec<(f64, f64)>, VerifyError> {
    let rs = basis.root_system();
    let (nodes, gl) = composite_legendre(support[0], support[1], 40, 10);
    let rule = QuadratureRule {
        nodes: nodes.iter().map(|&y| vec![y]).collect(),
        weights: nodes.iter().zip(&gl).map(|(&y, w)| w * rs.weight(&[y]) * (-y * y).exp()).collect(),
        order: nodes.len(),
        exact_weight: false,
    };
    let coeffs = Analyzer::new(basis, rule)?.analyze(|y| f(y[0]));
    let image = riesz_matrix(basis, 0)?.apply(&coeffs)?;
    points
        .iter()
        .map(|&x| {
            let spectral = synthesize(basis, &image, &[x])?;
            let mut kernel = 0.0;
            for (&y, w) in nodes.iter().zip(&gl) {
                let fy = f(y);
                if fy != 0.0 {
                    kernel += w * fy * rs.weight(&[y]) * kernels.riesz_kernel(0, &[x], &[y])?.value;
                }
            }
            Ok((spectral, kernel))
        })
        .collect()
}

fn representation_body(basis: &HermiteBasis, cfg: &VerifyConfig) -> Result<Outcome, VerifyError> {
    let s = &cfg.integral_representation;
    require_rank_one(basis.root_system(), CheckName::IntegralRepresentation)?;
    let [lo, hi] = s.support;
    if s.points.iter().any(|x| (lo..=hi).contains(&x.abs())) {
        return Err(VerifyError::SupportOverlap);
    }
    let basis = basis_at(basis, Some(s.degree))?;
    let kernels = Kernels::new(&basis, cfg.kernel.clone())?;
    let f = bump(lo, hi);
    let routes = representation_routes(&basis, &kernels, &f, s.support, &s.points)?;
    let mut out = Outcome::new();
    let mut worst = 0.0f64;
    for (x, (spectral, kernel)) in s.points.iter().zip(&routes) {
        out.constant(format!("spectral.x={x}"), *spectral);
        out.constant(format!("kernel.x={x}"), *kernel);
        worst = worst.max(relative_error(*spectral, *kernel));
    }
    out.samples = s.points.len();
    out.constant("truncation_degree", s.degree as f64);
    out.require("max_relative_error", worst, worst < s.tolerance);
    Ok(out)
}

/// `R_j f(x)` by the spectral route against `∫ K_j(x,y) f(y) dμ_κ(y)`
/// for a bump `f` whose support avoids the orbit of `x`.
pub fn check_integral_representation(basis: &HermiteBasis, cfg: &VerifyConfig) -> CheckResult {
    let start = Instant::now();
    finish(CheckName::IntegralRepresentation, basis, cfg, start, representation_body(basis, cfg))
}

fn lp_body(basis: &HermiteBasis, cfg: &VerifyConfig) -> Result<Outcome, VerifyError> {
    let s = &cfg.lp_empirical;
    require_rank_one(basis.root_system(), CheckName::LpEmpirical)?;
    let basis = basis_at(basis, Some(s.degree))?;
    let rs = basis.root_system();
    let riesz = riesz_matrix(&basis, 0)?;
    let reach = (basis.eigenvalue_of_order(s.degree)).sqrt() + 8.0;
    let (nodes, gl) = composite_legendre(-reach, reach, 2 * (4.0 * reach).ceil() as usize, 8);
    let weights: Vec<f64> = nodes.iter().zip(&gl).map(|(&x, w)| w * rs.weight(&[x])).collect();
    let table: Vec<Vec<f64>> = nodes.iter().map(|&x| basis.hermite_functions_at(&[x])).collect::<Result<_, _>>()?;
    let values = |v: &SpectralVector| -> Vec<f64> {
        table.iter().map(|row| row.iter().zip(&v.coeffs).map(|(h, c)| h * c).sum()).collect()
    };
    let norm = |vals: &[f64], p: f64| -> f64 {
        vals.iter().zip(&weights).map(|(v, w)| w * v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    };
    let mut rng = rng_for(CheckName::LpEmpirical, cfg.seed);
    let mut ratios = vec![Vec::with_capacity(s.functions); s.exponents.len()];
    for _ in 0..s.functions {
        let coeffs: Vec<f64> = (0..basis.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let v = SpectralVector { coeffs };
        let image = riesz.apply(&v)?;
        let (fv, rv) = (values(&v), values(&image));
        for (k, &p) in s.exponents.iter().enumerate() {
            ratios[k].push(norm(&rv, p) / norm(&fv, p));
        }
    }
    let mut out = Outcome::new();
    out.samples = s.functions;
    out.note("empirical evidence only; boundedness on L^p is not decided numerically");
    for (k, &p) in s.exponents.iter().enumerate() {
        let r = &mut ratios[k];
        r.sort_by(f64::total_cmp);
        let max = *r.last().unwrap_or(&0.0);
        let median = r.get(r.len() / 2).copied().unwrap_or(0.0);
        out.constant(format!("max_ratio.p={p}"), max);
        out.constant(format!("median_ratio.p={p}"), median);
        out.require(format!("spread.p={p}"), max / median, max < s.max_spread * median);
        if p == 2.0 {
            let cap = 2f64.sqrt() + s.l2_slack;
            out.require("max_ratio_l2", max, max <= cap);
        }
    }
    Ok(out)
}

/// `‖R_j f‖_p / ‖f‖_p` over random band-limited `f`, as soft evidence for
/// boundedness on `L^p`.
pub fn check_lp_empirical(basis: &HermiteBasis, cfg: &VerifyConfig) -> CheckResult {
    let start = Instant::now();
    finish(CheckName::LpEmpirical, basis, cfg, start, lp_body(basis, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{LpSettings, Status};

    fn z2(kappa: f64, degree: u32) -> HermiteBasis {
        HermiteBasis::build(&RootSystem::z2_power(1, &[kappa]).unwrap(), degree).unwrap()
    }

    #[test]
    fn graded_breakpoints_cover_the_interval() {
        let g = graded(0.0, 10.0, 0.01, 1.0);
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 10.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!((g[1] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn equal_points_give_zero_integrand() {
        let b = z2(0.5, 0);
        let k = Kernels::new(&b, Default::default()).unwrap();
        let f = Integrand {
            kernels: &k,
            j: 0,
            condition: Condition::SecondVariable,
            y: vec![1.0],
            y0: vec![1.0],
            orbit: vec![vec![1.0], vec![-1.0]],
            delta: 0.0,
            radius: 10.0,
        };
        assert_eq!(f.value(&[0.3]).unwrap(), 0.0);
        assert_eq!(f.value(&[4.0]).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_and_sampling_agree() {
        let b = z2(0.5, 0);
        let k = Kernels::new(&b, Default::default()).unwrap();
        let f = Integrand {
            kernels: &k,
            j: 0,
            condition: Condition::SecondVariable,
            y: vec![1.0],
            y0: vec![1.1],
            orbit: vec![vec![1.0], vec![-1.0]],
            delta: 0.1,
            radius: 8.0,
        };
        let q = quadrature_1d(&f, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (m, se) = monte_carlo(&f, 400, &mut rng).unwrap();
        assert!(q > 0.0 && q.is_finite());
        assert!(se < 0.05 * m);
        assert!((q - m).abs() < 0.05 * q, "quadrature {q}, sampling {m} ± {se}");
    }

    #[test]
    fn representation_zero_function_and_overlap() {
        let b = z2(0.5, 8);
        let k = Kernels::new(&b, Default::default()).unwrap();
        let zero = |_: f64| 0.0;
        for (a, c) in representation_routes(&b, &k, &zero, [2.0, 3.0], &[0.5]).unwrap() {
            assert_eq!((a, c), (0.0, 0.0));
        }
        let mut cfg = VerifyConfig { record_timing: false, ..VerifyConfig::default() };
        cfg.integral_representation.points = vec![-2.5];
        assert_eq!(check_integral_representation(&b, &cfg).status, Status::Error);
        let plane = HermiteBasis::build(&RootSystem::z2_power(2, &[0.5]).unwrap(), 0).unwrap();
        assert_eq!(check_integral_representation(&plane, &cfg).status, Status::NotApplicable);
    }

    #[test]
    fn lp_ratios_small_run() {
        let cfg = VerifyConfig {
            record_timing: false,
            lp_empirical: LpSettings { degree: 8, functions: 10, ..LpSettings::default() },
            ..VerifyConfig::default()
        };
        let r = check_lp_empirical(&z2(0.5, 8), &cfg);
        assert_eq!(r.status, Status::Pass, "{r:#?}");
        assert!(r.constants["max_ratio.p=2"] <= 2f64.sqrt());
    }
}
