//! Exact identities: eigenfunctions, orthonormality, the Mehler formula,
//! the heat kernel and the L² bound for the Riesz transforms.

use std::time::Instant;

use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};

use super::{basis_at, finish, grid, linspace, not_applicable, relative_error, rng_for, CheckName, CheckResult, Outcome, VerifyConfig};
use crate::error::{HermiteError, VerifyError};
use crate::hermite::{BasisData, BasisElement, HermiteBasis};
use crate::kernels::{heat_kernel_classical, heat_kernel_classical_alt, Kernels};
use crate::polyalg::{DunklOperators, QuadSurd, Scalar};
use crate::reflection::RootSystem;
use crate::spectral::{delta_matrix, operator_norm, riesz_adjoint_matrix, riesz_matrix, Ladder, QuadratureRule};

/// Largest relative residual of `L̃H_n − λ_n H_n`, and whether every
/// residual is exactly zero.
fn eigen_residuals<C: Scalar>(
    ops: &DunklOperators<C>,
    elements: &[BasisElement<C>],
    eigenvalue: impl Fn(u32) -> C,
) -> Result<(f64, bool), VerifyError> {
    let mut worst = 0.0f64;
    let mut all_zero = true;
    for e in elements {
        let image = ops.conjugated_oscillator(&e.hermite).map_err(HermiteError::from)?;
        let residual = image
            .checked_sub(&e.hermite.scale(&eigenvalue(e.index.order())))
            .map_err(HermiteError::from)?;
        if !residual.is_zero() {
            all_zero = false;
            worst = worst.max(residual.max_magnitude() / e.hermite.max_magnitude());
        }
    }
    Ok((worst, all_zero))
}

fn eigen_body(basis: &HermiteBasis, cfg: &VerifyConfig) -> Result<Outcome, VerifyError> {
    let mut out = Outcome::new();
    let d = basis.dim() as i64;
    out.samples = basis.len();
    match basis.data() {
        BasisData::Exact { ops, elements } => {
            let exact = basis.root_system().exact().expect("exact basis has exact roots");
            let gamma = exact.multiplicities.iter().fold(num_rational::BigRational::from_integer(0.into()), |a, k| a + k);
            let twice_gamma = QuadSurd::rational(gamma * num_rational::BigRational::from_integer(2.into()));
            let (worst, zero) =
                eigen_residuals(ops, elements, |n| QuadSurd::from_integer(2 * n as i64 + d) + twice_gamma.clone())?;
            out.constant("exact", 1.0);
            out.require("max_relative_residual", worst, zero);
        }
        BasisData::Float { ops, elements } => {
            let (worst, _) = eigen_residuals(ops, elements, |n| basis.eigenvalue_of_order(n))?;
            out.constant("exact", 0.0);
            out.require("max_relative_residual", worst, worst < cfg.eigen.tolerance);
        }
    }
    Ok(out)
}

/// `L̃H_n = (2|n| + 2γ + d) H_n` for every element of the basis, with zero
/// residual in exact arithmetic.
pub fn check_eigen(basis: &HermiteBasis, cfg: &VerifyConfig) -> CheckResult {
    let start = Instant::now();
    finish(CheckName::Eigen, basis, cfg, start, eigen_body(basis, cfg))
}

/// `[ψ_m, ψ_n]` against the stored norms; returns the largest deviation
/// from `δ_mn` after normalisation and whether it is exactly zero.
fn pairing_residuals<C: Scalar>(
    ops: &DunklOperators<C>,
    elements: &[BasisElement<C>],
) -> Result<(f64, bool), VerifyError> {
    let mut worst = 0.0f64;
    let mut exact = true;
    for (i, m) in elements.iter().enumerate() {
        let table = ops.derivative_table(&m.psi, m.index.order()).map_err(HermiteError::from)?;
        for (j, n) in elements.iter().enumerate() {
            // the pairing vanishes between different degrees
            if n.index.order() != m.index.order() {
                continue;
            }
            let mut pair = C::zero();
            for (a, c) in n.psi.terms() {
                pair = pair + c.clone() * table[a].clone();
            }
            let target = if i == j { m.norm.clone() } else { C::zero() };
            let gap = pair - target;
            if !gap.is_zero() {
                exact = false;
                worst = worst.max(gap.to_f64().abs() / (m.norm.to_f64() * n.norm.to_f64()).sqrt());
            }
        }
    }
    Ok((worst, exact))
}

fn orthonormality_body(basis: &HermiteBasis, cfg: &VerifyConfig) -> Result<Outcome, VerifyError> {
    let mut out = Outcome::new();
    let tol = cfg.orthonormality.tolerance;
    match basis.data() {
        BasisData::Exact { ops, elements } => {
            let (worst, exact) = pairing_residuals(ops, elements)?;
            out.require("pairing_residual", worst, exact);
        }
        BasisData::Float { ops, elements } => {
            let (worst, _) = pairing_residuals(ops, elements)?;
            out.require("pairing_residual", worst, worst < tol);
        }
    }
    let rs = basis.root_system();
    let order = basis.degree() as usize + rs.gamma().ceil() as usize + 2;
    let rule = QuadratureRule::new(rs, order)?;
    if !rule.exact_weight {
        out.note("tensor Gauss-Hermite rule with the weight folded in; not exact for fractional multiplicities");
    }
    let rows: Vec<Vec<f64>> =
        rule.nodes.iter().map(|x| basis.reduced_functions_at(x)).collect::<Result<_, HermiteError>>()?;
    let size = basis.len();
    let mut worst = 0.0f64;
    for m in 0..size {
        for n in m..size {
            let g: f64 = rows.iter().zip(&rule.weights).map(|(r, w)| w * r[m] * r[n]).sum();
            let target = if m == n { 1.0 } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    out.samples = rule.len();
    out.require("l2_gram_residual", worst, worst < tol);
    Ok(out)
}

/// `[φ_m, φ_n] = δ_mn` for the pairing, and `⟨h_m, h_n⟩_κ = δ_mn` by
/// Gaussian quadrature.
pub fn check_orthonormality(basis: &HermiteBasis, cfg: &VerifyConfig) -> CheckResult {
    let start = Instant::now();
    finish(CheckName::Orthonormality, basis, cfg, start, orthonormality_body(basis, cfg))
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn mehler_body(basis: &HermiteBasis, cfg: &VerifyConfig) -> Result<Outcome, VerifyError> {
    let s = &cfg.mehler;
    if !basis.root_system().is_product() {
        return Err(not_applicable(CheckName::Mehler, "needs an independent Dunkl kernel (product groups only)"));
    }
    let basis = basis_at(basis, s.degree)?;
    let kernels = Kernels::new(&basis, cfg.kernel.clone())?;
    let gamma_d = basis.gamma() + basis.dim() as f64 / 2.0;
    let points = grid(&linspace(-s.extent, s.extent, s.points_per_axis), basis.dim());
    let mut out = Outcome::new();
    let mut worst = 0.0f64;
    let mut worst_at = (0.0, Vec::new(), Vec::new());
    for &r in &s.radii {
        let q = 1.0 - r * r;
        for x in &points {
            for y in &points {
                let (sum, _) = basis.mehler_sum(x, y, r)?;
                let scaled: Vec<f64> = x.iter().map(|v| 2.0 * r * v / q).collect();
                let closed = (-gamma_d * q.ln() - r * r * (norm2(x) + norm2(y)) / q + kernels.ln_dunkl(&scaled, y)?).exp();
                let err = relative_error(sum, closed);
                if err > worst {
                    worst = err;
                    worst_at = (r, x.clone(), y.clone());
                }
                out.samples += 1;
            }
        }
    }
    // r = 0 leaves only the constant term on both sides
    let origin = vec![0.3; basis.dim()];
    let (at_zero, _) = basis.mehler_sum(&origin, &origin, 0.0)?;
    out.require("r_zero_residual", (at_zero - 1.0).abs(), (at_zero - 1.0).abs() < 1e-12);
    out.constant("truncation_degree", basis.degree() as f64);
    out.constant("worst_r", worst_at.0);
    out.require("max_relative_error", worst, worst < s.tolerance);
    if worst >= s.tolerance {
        out.note(format!("largest error at r = {}, x = {:?}, y = {:?}", worst_at.0, worst_at.1, worst_at.2));
    }
    Ok(out)
}

/// The truncated Mehler sum `Σ H_n(x)H_n(y)(r/2)^{|n|}` against its closed
/// form on a grid of `r`, `x` and `y`.
pub fn check_mehler(basis: &HermiteBasis, cfg: &VerifyConfig) -> CheckResult {
    let start = Instant::now();
    finish(CheckName::Mehler, basis, cfg, start, mehler_body(basis, cfg))
}

fn heat_body(basis: &HermiteBasis, cfg: &VerifyConfig) -> Result<Outcome, VerifyError> {
    let s = &cfg.heat;
    let mut degree = s.degree;
    let mut capped = None;
    if basis.dim() > 1 {
        if let Some(n) = degree.filter(|n| *n > s.multivariate_degree_cap) {
            capped = Some(n);
            degree = Some(s.multivariate_degree_cap);
        }
    }
    let basis = basis_at(basis, degree)?;
    let kernels = Kernels::new(&basis, cfg.kernel.clone())?;
    let d = basis.dim();
    let points = grid(&linspace(-s.extent, s.extent, s.points_per_axis), d);
    let mut out = Outcome::new();
    let (mut spectral, mut m_kappa_gap, mut symmetry) = (0.0f64, f64::INFINITY, 0.0f64);
    let mut ratio = 0.0f64;
    for &t in &s.times {
        for x in &points {
            for y in &points {
                let series = kernels.heat_spectral(t, x, y)?;
                let closed = kernels.heat(t, x, y)?;
                let other = kernels.heat_with_m_kappa(t, x, y)?;
                spectral = spectral.max(relative_error(series, closed));
                m_kappa_gap = m_kappa_gap.min(relative_error(series, other));
                ratio = ratio.max(other / closed);
                symmetry = symmetry.max(relative_error(kernels.heat(t, y, x)?, closed));
                out.samples += 1;
            }
        }
    }
    // κ ≡ 0 does not depend on the group, so Z2^d stands in for it
    let zero = HermiteBasis::build(&RootSystem::z2_power(d, &[0.0]).map_err(HermiteError::from)?, 0)?;
    let classical = Kernels::new(&zero, cfg.kernel.clone())?;
    let mut reduction = 0.0f64;
    let mut forms = 0.0f64;
    for &t in &s.times {
        for x in &points {
            for y in &points {
                let k0 = heat_kernel_classical(t, x, y);
                reduction = reduction.max(relative_error(classical.heat(t, x, y)?, k0));
                forms = forms.max(relative_error(heat_kernel_classical_alt(t, x, y), k0));
            }
        }
    }
    if let Some(n) = capped {
        out.note(format!("degree {n} capped at {} in dimension {d}", s.multivariate_degree_cap));
    }
    let expected = 2f64.powf(basis.gamma() + d as f64 / 2.0);
    out.constant("truncation_degree", basis.degree() as f64);
    out.constant("m_kappa_ratio", ratio);
    out.constant("expected_m_kappa_ratio", expected);
    out.require("spectral_vs_closed", spectral, spectral < s.tolerance);
    out.require("zero_multiplicity_reduction", reduction, reduction < s.reduction_tolerance);
    out.require("classical_forms_agree", forms, forms < s.reduction_tolerance);
    out.require("symmetry", symmetry, symmetry < s.reduction_tolerance);
    // normalising by m_kappa instead of c_kappa must show up as a mismatch
    out.require("m_kappa_mismatch", m_kappa_gap, m_kappa_gap >= s.tolerance);
    out.require("m_kappa_ratio_gap", relative_error(ratio, expected), relative_error(ratio, expected) < 1e-9);
    Ok(out)
}

/// Spectral series of the heat kernel against its closed form, the
/// reduction to the classical kernel at zero multiplicity, symmetry, and
/// the factor `2^{γ+d/2}` by which the `m_κ`-normalised form is off.
pub fn check_heat(basis: &HermiteBasis, cfg: &VerifyConfig) -> CheckResult {
    let start = Instant::now();
    finish(CheckName::Heat, basis, cfg, start, heat_body(basis, cfg))
}

fn riesz_l2_body(basis: &HermiteBasis, cfg: &VerifyConfig) -> Result<Outcome, VerifyError> {
    let s = &cfg.riesz_l2;
    let mut out = Outcome::new();
    let n = basis.degree();
    if n == 0 {
        out.note("degree 0 has no safe shells");
        return Ok(out);
    }
    let safe: Vec<usize> =
        basis.indices().iter().enumerate().filter(|(_, m)| m.order() < n).map(|(i, _)| i).collect();
    let bound = 2f64.sqrt() + s.bound_slack;
    let mut norm = 0.0f64;
    let mut adjoint = 0.0f64;
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for j in 0..basis.dim() {
        let r = riesz_matrix(basis, j)?;
        let nj = operator_norm(&r.restricted(basis, n - 1));
        out.constant(format!("norm_{j}"), nj);
        norm = norm.max(nj);
        let lo = delta_matrix(basis, j, Ladder::Lower)?;
        let hi = delta_matrix(basis, j, Ladder::Raise)?;
        let gap = lo.restricted(basis, n) - hi.restricted(basis, n).transpose();
        adjoint = adjoint.max(gap.amax());
        lower.push(r);
        upper.push(riesz_adjoint_matrix(basis, j)?);
    }
    let mut rng = rng_for(CheckName::RieszL2, cfg.seed);
    let mut energy = 0.0f64;
    let mut total = 0.0f64;
    for _ in 0..s.samples {
        let mut v = DVector::zeros(basis.len());
        for &i in &safe {
            v[i] = StandardNormal.sample(&mut rng);
        }
        let len = v.norm();
        if len == 0.0 {
            continue;
        }
        v /= len;
        let mut sum = 0.0;
        for (r, a) in lower.iter().zip(&upper) {
            let e = (&r.matrix * &v).norm_squared() + (&a.matrix * &v).norm_squared();
            energy = energy.max(e);
            sum += e;
        }
        total = total.max((sum - 2.0).abs());
    }
    out.samples = s.samples;
    out.require("max_norm", norm, norm <= bound);
    out.require("adjoint_gap", adjoint, adjoint <= s.adjoint_tolerance);
    out.require("max_two_sided_energy", energy, energy <= 2.0 + 1e-10);
    out.require("energy_identity_gap", total, total < 1e-8);
    Ok(out)
}

/// `‖R_j‖ ≤ √2` on the safe shells, `δ_j* = δ_jᵀ`, and
/// `‖R_j v‖² + ‖R_j* v‖² ≤ 2‖v‖²` on random unit vectors.
pub fn check_riesz_l2(basis: &HermiteBasis, cfg: &VerifyConfig) -> CheckResult {
    let start = Instant::now();
    finish(CheckName::RieszL2, basis, cfg, start, riesz_l2_body(basis, cfg))
}
