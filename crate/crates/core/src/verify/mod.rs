//! Numerical checks of the identities and kernel estimates, collected into
//! a machine-readable report.
//!
//! Every check is deterministic for a fixed [`VerifyConfig`]; the only
//! field that varies between identical runs is `runtime_ms`, and it is
//! zero when `record_timing` is off.

mod estimates;
mod identities;
mod singular;

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use estimates::{check_kernel_decay, check_lemma_bounds, Inequality};
pub use identities::{check_eigen, check_heat, check_mehler, check_orthonormality, check_riesz_l2};
pub use singular::{check_hormander, check_integral_representation, check_lp_empirical};

use crate::error::{HermiteError, VerifyError};
use crate::hermite::HermiteBasis;
use crate::kernels::KernelConfig;
use crate::par;

/// The available checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    Eigen,
    Orthonormality,
    Mehler,
    Heat,
    LemmaBounds,
    KernelDecay,
    Hormander,
    RieszL2,
    IntegralRepresentation,
    LpEmpirical,
}

impl CheckName {
    pub const ALL: [CheckName; 10] = [
        CheckName::Eigen,
        CheckName::Orthonormality,
        CheckName::Mehler,
        CheckName::Heat,
        CheckName::LemmaBounds,
        CheckName::KernelDecay,
        CheckName::Hormander,
        CheckName::RieszL2,
        CheckName::IntegralRepresentation,
        CheckName::LpEmpirical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::Eigen => "eigen",
            CheckName::Orthonormality => "orthonormality",
            CheckName::Mehler => "mehler",
            CheckName::Heat => "heat",
            CheckName::LemmaBounds => "lemma-bounds",
            CheckName::KernelDecay => "kernel-decay",
            CheckName::Hormander => "hormander",
            CheckName::RieszL2 => "riesz-l2",
            CheckName::IntegralRepresentation => "integral-representation",
            CheckName::LpEmpirical => "lp-empirical",
        }
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase().replace('_', "-");
        CheckName::ALL.into_iter().find(|c| c.as_str() == t).ok_or_else(|| format!("unknown check `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenSettings {
    /// Relative residual allowed in floating mode; exact bases need zero.
    pub tolerance: f64,
}

impl Default for EigenSettings {
    fn default() -> Self {
        Self { tolerance: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrthonormalitySettings {
    pub tolerance: f64,
}

impl Default for OrthonormalitySettings {
    fn default() -> Self {
        Self { tolerance: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MehlerSettings {
    /// Truncation used for the sum; `None` keeps the supplied basis.
    pub degree: Option<u32>,
    pub radii: Vec<f64>,
    /// Points per axis in `[-extent, extent]^d`.
    pub points_per_axis: usize,
    pub extent: f64,
    pub tolerance: f64,
}

impl Default for MehlerSettings {
    fn default() -> Self {
        Self { degree: Some(24), radii: vec![0.1, 0.25, 0.4, 0.5], points_per_axis: 5, extent: 1.0, tolerance: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatSettings {
    /// Truncation of the eigenfunction series; `None` keeps the supplied basis.
    pub degree: Option<u32>,
    /// Upper bound on `degree` in dimension two and above, where the basis
    /// has `C(N+d, d)` elements.
    pub multivariate_degree_cap: u32,
    pub times: Vec<f64>,
    pub points_per_axis: usize,
    pub extent: f64,
    pub tolerance: f64,
    /// Allowed relative gap for the zero-multiplicity reduction and symmetry.
    pub reduction_tolerance: f64,
}

impl Default for HeatSettings {
    fn default() -> Self {
        Self {
            degree: Some(160),
            multivariate_degree_cap: 30,
            times: vec![0.1, 0.3, 1.0, 2.0],
            points_per_axis: 5,
            extent: 1.0,
            tolerance: 1e-6,
            reduction_tolerance: 1e-10,
        }
    }
}

/// Grid and constants for the constant-fit protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaSettings {
    /// Gaussian constant of the classical bounds.
    pub a: f64,
    /// Gaussian constant of the translated bounds.
    pub b: f64,
    /// Gaussian constant of the reflected-centre bounds.
    pub c: f64,
    pub t_min: f64,
    pub t_max: f64,
    /// Log-spaced times in each of `[t_min, 1]` and `[1, t_max]`.
    pub time_points: usize,
    pub extent: f64,
    pub points_per_axis: usize,
    /// Offsets `g·x + √t u` with `u` on a grid in `[-offset_extent, offset_extent]^d`.
    pub offsets_per_axis: usize,
    pub offset_extent: f64,
    /// Largest relative growth of a fitted constant under refinement.
    pub max_growth: f64,
}

impl Default for LemmaSettings {
    fn default() -> Self {
        Self {
            a: 0.125,
            b: 0.125,
            c: 0.0625,
            t_min: 1e-3,
            t_max: 5.0,
            time_points: 17,
            extent: 2.0,
            points_per_axis: 17,
            offsets_per_axis: 13,
            offset_extent: 3.0,
            max_growth: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecaySettings {
    pub min_separation: f64,
    pub max_separation: f64,
    pub separations: usize,
    pub extent: f64,
    pub points_per_axis: usize,
    /// Random directions per point in dimension above one.
    pub directions: usize,
    pub max_growth: f64,
}

impl Default for DecaySettings {
    fn default() -> Self {
        Self {
            min_separation: 0.1,
            max_separation: 10.0,
            separations: 9,
            extent: 2.0,
            points_per_axis: 7,
            directions: 4,
            max_growth: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HormanderSettings {
    pub separations: Vec<f64>,
    /// Distances of the base points `y` from the origin along the
    /// diagonal; each is paired with `y0 = y + δ e_1`.
    pub anchors: Vec<f64>,
    pub samples: usize,
    /// Largest Monte Carlo standard error as a fraction of the estimate.
    pub max_standard_error: f64,
    /// Largest regression slope of the normalised integrals against `ln(1/δ)`.
    pub max_slope: f64,
    /// Gauss–Legendre nodes per panel of the deterministic quadrature.
    pub panel_nodes: usize,
    /// Gaussian decay constant `b` fixing the truncation radius
    /// `max|y| + 12/√b`.
    pub decay_constant: f64,
}

impl Default for HormanderSettings {
    fn default() -> Self {
        Self {
            separations: vec![0.05, 0.1, 0.2, 0.5, 1.0],
            anchors: vec![0.5, 1.0, 2.0],
            samples: 2000,
            max_standard_error: 0.05,
            max_slope: 0.05,
            panel_nodes: 10,
            decay_constant: 0.125,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RieszL2Settings {
    pub bound_slack: f64,
    pub adjoint_tolerance: f64,
    /// Random unit vectors for the two-sided energy bound.
    pub samples: usize,
}

impl Default for RieszL2Settings {
    fn default() -> Self {
        Self { bound_slack: 1e-8, adjoint_tolerance: 1e-10, samples: 32 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RepresentationSettings {
    pub degree: u32,
    /// Support `[lo, hi]` of the bump test function.
    pub support: [f64; 2],
    pub points: Vec<f64>,
    pub tolerance: f64,
}

impl Default for RepresentationSettings {
    fn default() -> Self {
        Self { degree: 30, support: [2.0, 3.0], points: vec![0.2, 0.5, 1.0], tolerance: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LpSettings {
    pub degree: u32,
    pub exponents: Vec<f64>,
    pub functions: usize,
    /// Ratios pass when the largest is below this multiple of the median.
    pub max_spread: f64,
    /// Allowance above `√2` for the largest ratio at `p = 2`.
    pub l2_slack: f64,
}

impl Default for LpSettings {
    fn default() -> Self {
        Self { degree: 20, exponents: vec![1.5, 2.0, 3.0, 4.0], functions: 50, max_spread: 10.0, l2_slack: 0.05 }
    }
}

/// Sampling plans, tolerances and fit parameters for every check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub seed: u64,
    pub record_timing: bool,
    pub kernel: KernelConfig,
    pub eigen: EigenSettings,
    pub orthonormality: OrthonormalitySettings,
    pub mehler: MehlerSettings,
    pub heat: HeatSettings,
    pub lemma_bounds: LemmaSettings,
    pub kernel_decay: DecaySettings,
    pub hormander: HormanderSettings,
    pub riesz_l2: RieszL2Settings,
    pub integral_representation: RepresentationSettings,
    pub lp_empirical: LpSettings,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_917,
            record_timing: false,
            kernel: KernelConfig::default(),
            eigen: EigenSettings::default(),
            orthonormality: OrthonormalitySettings::default(),
            mehler: MehlerSettings::default(),
            heat: HeatSettings::default(),
            lemma_bounds: LemmaSettings::default(),
            kernel_decay: DecaySettings::default(),
            hormander: HormanderSettings::default(),
            riesz_l2: RieszL2Settings::default(),
            integral_representation: RepresentationSettings::default(),
            lp_empirical: LpSettings::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// The check does not apply to this root system; not a failure.
    NotApplicable,
    /// The check could not be carried out.
    Error,
}

impl Status {
    pub fn is_failure(self) -> bool {
        matches!(self, Status::Fail | Status::Error)
    }
}

/// The setup a check ran on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub group: String,
    pub multiplicities: Vec<f64>,
    pub dim: usize,
    pub degree: u32,
}

impl RunSummary {
    pub fn of(basis: &HermiteBasis) -> Self {
        let rs = basis.root_system();
        Self { group: rs.label(), multiplicities: rs.multiplicities().to_vec(), dim: rs.dim(), degree: basis.degree() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: CheckName,
    pub config: RunSummary,
    pub status: Status,
    /// Fitted constants and other reported quantities.
    pub constants: BTreeMap<String, f64>,
    /// Errors and residuals compared against tolerances.
    pub residuals: BTreeMap<String, f64>,
    pub samples: usize,
    pub seed: u64,
    pub runtime_ms: u64,
    pub notes: Vec<String>,
}

/// What a check body hands back before bookkeeping is attached.
#[derive(Clone, Debug, Default)]
pub(crate) struct Outcome {
    passed: bool,
    constants: BTreeMap<String, f64>,
    residuals: BTreeMap<String, f64>,
    samples: usize,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { passed: true, ..Self::default() }
    }

    fn constant(&mut self, name: impl Into<String>, value: f64) {
        self.constants.insert(name.into(), value);
    }

    fn residual(&mut self, name: impl Into<String>, value: f64) {
        self.residuals.insert(name.into(), value);
    }

    /// Records `value` and fails the outcome unless `ok`.
    fn require(&mut self, name: impl Into<String>, value: f64, ok: bool) {
        let name = name.into();
        if !ok {
            self.passed = false;
            self.notes.push(format!("{name} = {value:e} outside tolerance"));
        }
        self.residuals.insert(name, value);
    }

    fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }
}

fn finish(
    check: CheckName,
    basis: &HermiteBasis,
    cfg: &VerifyConfig,
    start: Instant,
    body: Result<Outcome, VerifyError>,
) -> CheckResult {
    let runtime_ms = if cfg.record_timing { start.elapsed().as_millis() as u64 } else { 0 };
    let mut result = CheckResult {
        check,
        config: RunSummary::of(basis),
        status: Status::Pass,
        constants: BTreeMap::new(),
        residuals: BTreeMap::new(),
        samples: 0,
        seed: cfg.seed,
        runtime_ms,
        notes: Vec::new(),
    };
    match body {
        Ok(o) => {
            result.status = if o.passed { Status::Pass } else { Status::Fail };
            result.constants = o.constants;
            result.residuals = o.residuals;
            result.samples = o.samples;
            result.notes = o.notes;
        }
        Err(VerifyError::NotApplicable { reason, .. }) => {
            result.status = Status::NotApplicable;
            result.notes.push(reason);
        }
        Err(e) => {
            result.status = Status::Error;
            result.notes.push(e.to_string());
        }
    }
    result
}

fn not_applicable(check: CheckName, reason: impl Into<String>) -> VerifyError {
    VerifyError::NotApplicable { check: check.to_string(), reason: reason.into() }
}

/// The supplied basis if it already has `degree`, otherwise a basis of the
/// same root system and arithmetic at that degree.
fn basis_at(basis: &HermiteBasis, degree: Option<u32>) -> Result<Cow<'_, HermiteBasis>, HermiteError> {
    match degree {
        Some(n) if n != basis.degree() => {
            Ok(Cow::Owned(HermiteBasis::build_with(basis.root_system(), n, basis.arithmetic())?))
        }
        _ => Ok(Cow::Borrowed(basis)),
    }
}

/// Generator for one check, decorrelated from the other checks.
fn rng_for(check: CheckName, seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ (check as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// `n` evenly spaced points in `[lo, hi]`.
fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect()
}

/// Cartesian power of a one-dimensional grid.
fn grid(axis: &[f64], dim: usize) -> Vec<Vec<f64>> {
    (0..dim).fold(vec![Vec::new()], |acc, _| {
        acc.iter().flat_map(|p| axis.iter().map(move |&v| [p.as_slice(), &[v]].concat())).collect()
    })
}

/// Refining a grid of `n` points to `2n − 1` keeps every old point.
fn refined(n: usize) -> usize {
    (2 * n).saturating_sub(1).max(1)
}

fn relative_error(approx: f64, exact: f64) -> f64 {
    if approx == exact {
        0.0
    } else {
        (approx - exact).abs() / exact.abs().max(f64::MIN_POSITIVE)
    }
}

/// Least-squares slope of `ys` against `xs`.
fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Runs one check by name.
pub fn run_check(name: CheckName, basis: &HermiteBasis, cfg: &VerifyConfig) -> CheckResult {
    match name {
        CheckName::Eigen => check_eigen(basis, cfg),
        CheckName::Orthonormality => check_orthonormality(basis, cfg),
        CheckName::Mehler => check_mehler(basis, cfg),
        CheckName::Heat => check_heat(basis, cfg),
        CheckName::LemmaBounds => check_lemma_bounds(basis, cfg),
        CheckName::KernelDecay => check_kernel_decay(basis, cfg),
        CheckName::Hormander => check_hormander(basis, cfg),
        CheckName::RieszL2 => check_riesz_l2(basis, cfg),
        CheckName::IntegralRepresentation => check_integral_representation(basis, cfg),
        CheckName::LpEmpirical => check_lp_empirical(basis, cfg),
    }
}

/// Results of a verification run, one entry per executed check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub results: Vec<CheckResult>,
}

impl VerificationReport {
    /// Runs `checks` in order; duplicates are executed once.
    pub fn run(basis: &HermiteBasis, checks: &[CheckName], cfg: &VerifyConfig) -> Self {
        let mut unique = Vec::new();
        for c in checks {
            if !unique.contains(c) {
                unique.push(*c);
            }
        }
        let results = par::map(&unique, |&c| run_check(c, basis, cfg));
        Self { seed: cfg.seed, results }
    }

    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| !r.status.is_failure())
    }

    pub fn get(&self, name: CheckName) -> Option<&CheckResult> {
        self.results.iter().find(|r| r.check == name)
    }

    pub fn to_json(&self) -> Result<String, VerifyError> {
        serde_json::to_string_pretty(self).map_err(|e| HermiteError::Format(e.to_string()).into())
    }

    /// One row per fitted constant and residual:
    /// `check,status,kind,name,value`.
    pub fn to_csv(&self) -> Result<String, VerifyError> {
        let fail = |e: csv::Error| VerifyError::from(HermiteError::Format(e.to_string()));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["check", "status", "kind", "name", "value"]).map_err(fail)?;
        for r in &self.results {
            let status = serde_json::to_value(r.status).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
            let rows = r
                .constants
                .iter()
                .map(|(k, v)| ("constant", k, v))
                .chain(r.residuals.iter().map(|(k, v)| ("residual", k, v)));
            for (kind, name, value) in rows {
                w.write_record([r.check.as_str(), &status, kind, name, &value.to_string()]).map_err(fail)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| VerifyError::from(HermiteError::Format(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reflection::RootSystem;

    #[test]
    fn names_round_trip() {
        for c in CheckName::ALL {
            assert_eq!(c.as_str().parse::<CheckName>().unwrap(), c);
            let json = serde_json::to_string(&c).unwrap();
            assert_eq!(json, format!("\"{}\"", c.as_str()));
        }
        assert!("nope".parse::<CheckName>().is_err());
        assert_eq!("riesz_l2".parse::<CheckName>().unwrap(), CheckName::RieszL2);
    }

    #[test]
    fn grids_nest_under_refinement() {
        let coarse = linspace(-2.0, 2.0, 5);
        let fine = linspace(-2.0, 2.0, refined(5));
        assert!(coarse.iter().all(|c| fine.iter().any(|f| (f - c).abs() < 1e-15)));
        assert_eq!(grid(&[0.0, 1.0], 2).len(), 4);
        assert_eq!(grid(&[0.0, 1.0, 2.0], 1), vec![vec![0.0], vec![1.0], vec![2.0]]);
        assert!((slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn empty_report_passes() {
        let b = HermiteBasis::build(&RootSystem::z2_power(1, &[0.5]).unwrap(), 2).unwrap();
        let cfg = VerifyConfig { record_timing: false, ..VerifyConfig::default() };
        let r = VerificationReport::run(&b, &[], &cfg);
        assert!(r.passed());
        assert!(r.results.is_empty());
        assert_eq!(r.to_csv().unwrap(), "check,status,kind,name,value\n");
    }

    #[test]
    fn report_is_reproducible() {
        let b = HermiteBasis::build(&RootSystem::z2_power(1, &[0.5]).unwrap(), 6).unwrap();
        let cfg = VerifyConfig { record_timing: false, ..VerifyConfig::default() };
        let checks = [CheckName::Eigen, CheckName::RieszL2, CheckName::Eigen];
        let a = VerificationReport::run(&b, &checks, &cfg);
        assert_eq!(a.results.len(), 2);
        assert!(a.passed(), "{:?}", a);
        let again = VerificationReport::run(&b, &checks, &cfg);
        assert_eq!(a.to_json().unwrap(), again.to_json().unwrap());
        let back: VerificationReport = serde_json::from_str(&a.to_json().unwrap()).unwrap();
        assert_eq!(back, a);
    }
}
