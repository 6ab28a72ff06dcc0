//! Hermite coefficients and operator matrices on the truncated basis.
//!
//! Coefficient vectors and matrices are indexed by the positions of
//! [`HermiteBasis::indices`].

mod quadrature;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use quadrature::{generalized_gauss_hermite, AxisRule, QuadratureRule};

use crate::error::{HermiteError, PolyError, SpectralError};
use crate::hermite::{BasisData, BasisElement, HermiteBasis};
use crate::par;
use crate::polyalg::{DunklOperators, MultiIndex, Scalar};

/// Coefficients `⟨f, h_n⟩_κ` in basis order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralVector {
    pub coeffs: Vec<f64>,
}

#[derive(Serialize)]
struct IndexedValue<'a> {
    index: &'a MultiIndex,
    value: f64,
}

impl SpectralVector {
    pub fn zeros(basis: &HermiteBasis) -> Self {
        Self { coeffs: vec![0.0; basis.len()] }
    }

    /// The coefficient vector of `h_n`.
    pub fn unit(basis: &HermiteBasis, n: &MultiIndex) -> Result<Self, SpectralError> {
        let i = basis
            .position(n)
            .ok_or_else(|| HermiteError::IndexOutOfTruncation { index: n.to_string(), max: basis.degree() })?;
        let mut v = Self::zeros(basis);
        v.coeffs[i] = 1.0;
        Ok(v)
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    fn check(&self, basis: &HermiteBasis) -> Result<(), SpectralError> {
        if self.coeffs.len() != basis.len() {
            return Err(SpectralError::LengthMismatch { expected: basis.len(), found: self.coeffs.len() });
        }
        Ok(())
    }

    /// JSON list of `{index, value}` entries.
    pub fn to_json(&self, basis: &HermiteBasis) -> Result<String, SpectralError> {
        self.check(basis)?;
        let entries: Vec<IndexedValue> =
            basis.indices().iter().zip(&self.coeffs).map(|(index, &value)| IndexedValue { index, value }).collect();
        serde_json::to_string_pretty(&entries).map_err(|e| HermiteError::Format(e.to_string()).into())
    }
}

/// Basis values at the nodes of a rule, reusable across many functions.
#[derive(Clone, Debug)]
pub struct Analyzer<'a> {
    basis: &'a HermiteBasis,
    rule: QuadratureRule,
    // e^{|x|²/2} h_n(x) · w_q · e^{|x|²/2} per node, then per element
    weighted: Vec<Vec<f64>>,
}

impl<'a> Analyzer<'a> {
    pub fn new(basis: &'a HermiteBasis, rule: QuadratureRule) -> Result<Self, SpectralError> {
        if rule.dim() != basis.dim() {
            return Err(PolyError::DimensionMismatch { left: basis.dim(), right: rule.dim() }.into());
        }
        let rows: Vec<Result<Vec<f64>, HermiteError>> = par::map(&rule.nodes, |x| basis.reduced_functions_at(x));
        let mut weighted = Vec::with_capacity(rows.len());
        for ((row, x), w) in rows.into_iter().zip(&rule.nodes).zip(&rule.weights) {
            let g = w * (0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp();
            weighted.push(row?.into_iter().map(|p| p * g).collect());
        }
        Ok(Self { basis, rule, weighted })
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    /// `⟨f, h_n⟩_κ ≈ Σ_q w_q e^{|x_q|²/2} f(x_q) (e^{|x_q|²/2} h_n(x_q))`.
    pub fn analyze(&self, f: impl Fn(&[f64]) -> f64) -> SpectralVector {
        let mut coeffs = vec![0.0; self.basis.len()];
        for (x, row) in self.rule.nodes.iter().zip(&self.weighted) {
            let fx = f(x);
            if fx != 0.0 {
                coeffs.iter_mut().zip(row).for_each(|(c, p)| *c += fx * p);
            }
        }
        SpectralVector { coeffs }
    }

    /// Same as [`Analyzer::analyze`] from precomputed values at the nodes.
    pub fn analyze_values(&self, values: &[f64]) -> Result<SpectralVector, SpectralError> {
        if values.len() != self.rule.len() {
            return Err(SpectralError::LengthMismatch { expected: self.rule.len(), found: values.len() });
        }
        let mut coeffs = vec![0.0; self.basis.len()];
        for (&fx, row) in values.iter().zip(&self.weighted) {
            coeffs.iter_mut().zip(row).for_each(|(c, p)| *c += fx * p);
        }
        Ok(SpectralVector { coeffs })
    }
}

/// `⟨f, h_n⟩_κ` for every basis element.
pub fn analyze(
    basis: &HermiteBasis,
    rule: &QuadratureRule,
    f: impl Fn(&[f64]) -> f64,
) -> Result<SpectralVector, SpectralError> {
    Ok(Analyzer::new(basis, rule.clone())?.analyze(f))
}

/// `Σ_n v_n h_n(x)`.
pub fn synthesize(basis: &HermiteBasis, v: &SpectralVector, x: &[f64]) -> Result<f64, SpectralError> {
    v.check(basis)?;
    let h = basis.hermite_functions_at(x)?;
    Ok(h.iter().zip(&v.coeffs).map(|(a, b)| a * b).sum())
}

/// `e^{−tL_κ}`: multiplies each coefficient by `e^{−t(2|n|+2γ+d)}`.
pub fn heat_apply(basis: &HermiteBasis, t: f64, v: &SpectralVector) -> Result<SpectralVector, SpectralError> {
    v.check(basis)?;
    let coeffs = basis.eigenvalues().iter().zip(&v.coeffs).map(|(l, c)| (-t * l).exp() * c).collect();
    Ok(SpectralVector { coeffs })
}

/// `L_κ^{−1/2}`: multiplies each coefficient by `(2|n|+2γ+d)^{−1/2}`.
pub fn inv_sqrt_apply(basis: &HermiteBasis, v: &SpectralVector) -> Result<SpectralVector, SpectralError> {
    v.check(basis)?;
    let coeffs = basis.eigenvalues().iter().zip(&v.coeffs).map(|(l, c)| c / l.sqrt()).collect();
    Ok(SpectralVector { coeffs })
}

/// Which ladder operator a matrix represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ladder {
    /// `δ_j = T_j + x_j`, lowering the degree.
    Lower,
    /// `δ_j* = −T_j + x_j`, raising the degree.
    Raise,
}

/// A dense matrix on the truncated basis. Columns whose image leaves the
/// truncation (the top shell under a raising operator) are listed in
/// `leaking_columns`; their entries inside the truncation are still exact.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    pub matrix: DMatrix<f64>,
    pub leaking_columns: Vec<usize>,
}

impl OperatorMatrix {
    pub fn apply(&self, v: &SpectralVector) -> Result<SpectralVector, SpectralError> {
        if v.coeffs.len() != self.matrix.ncols() {
            return Err(SpectralError::LengthMismatch { expected: self.matrix.ncols(), found: v.coeffs.len() });
        }
        let out = &self.matrix * DVector::from_column_slice(&v.coeffs);
        Ok(SpectralVector { coeffs: out.iter().copied().collect() })
    }

    /// The block with rows and columns of order at most `max_order`.
    pub fn restricted(&self, basis: &HermiteBasis, max_order: u32) -> DMatrix<f64> {
        let keep: Vec<usize> =
            basis.indices().iter().enumerate().filter(|(_, n)| n.order() <= max_order).map(|(i, _)| i).collect();
        DMatrix::from_fn(keep.len(), keep.len(), |r, c| self.matrix[(keep[r], keep[c])])
    }

    /// `row,col,value` for every nonzero entry.
    pub fn to_csv(&self) -> Result<String, SpectralError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| SpectralError::Hermite(HermiteError::Format(e.to_string()));
        w.write_record(["row", "col", "value"]).map_err(io)?;
        for c in 0..self.matrix.ncols() {
            for r in 0..self.matrix.nrows() {
                let v = self.matrix[(r, c)];
                if v != 0.0 {
                    w.serialize((r, c, v)).map_err(io)?;
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| SpectralError::Hermite(HermiteError::Format(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// `(T^a ψ_m)(0)` for `|a| = |m|`, per element.
fn pairing_tables<C: Scalar>(
    ops: &DunklOperators<C>,
    elements: &[BasisElement<C>],
) -> Result<Vec<BTreeMap<MultiIndex, C>>, PolyError> {
    elements.iter().map(|e| ops.derivative_table(&e.psi, e.index.order())).collect()
}

fn ladder_generic<C: Scalar>(
    ops: &DunklOperators<C>,
    elements: &[BasisElement<C>],
    j: usize,
    ladder: Ladder,
    degree: u32,
) -> Result<OperatorMatrix, SpectralError> {
    if j >= ops.dim() {
        return Err(PolyError::AxisOutOfRange { axis: j, dim: ops.dim() }.into());
    }
    let tables = pairing_tables(ops, elements)?;
    let quarter = C::from_ratio(1, 4);
    let size = elements.len();
    let positions: Vec<usize> = (0..size).collect();
    let columns: Vec<Result<(Vec<(usize, f64)>, bool), SpectralError>> = par::map(&positions, |&n| {
        let e = &elements[n];
        let t = ops.apply(j, &e.hermite)?;
        let image = match ladder {
            Ladder::Lower => t,
            Ladder::Raise => e.hermite.mul_variable(j).scale(&C::from_integer(2)).checked_sub(&t)?,
        };
        // e^{Δ/4} undoes the Gaussian conjugation, leaving Σ 2^{|m|} c_m ψ_m
        let lifted = ops.exp_laplacian(&image, &quarter)?;
        let top = lifted.degree().unwrap_or(0);
        let n_order = e.index.order() as i32;
        let mut col = Vec::new();
        for (m, (other, table)) in elements.iter().zip(&tables).enumerate() {
            let k = other.index.order();
            let part = lifted.homogeneous_part(k);
            let mut pair = C::zero();
            for (a, c) in part.terms() {
                pair = pair + c.clone() * table[a].clone();
            }
            if !pair.is_zero() {
                // pair²/(s_m s_n) stays in range where the factors themselves overflow
                let squared = (pair.clone() * pair.clone() / (other.norm.clone() * e.norm.clone())).to_f64();
                let scale = 2f64.powf(-0.5 * (k as i32 + n_order) as f64);
                col.push((m, pair.to_f64().signum() * scale * squared.sqrt()));
            }
        }
        Ok((col, top > degree))
    });
    let mut matrix = DMatrix::zeros(size, size);
    let mut leaking_columns = Vec::new();
    for (n, c) in columns.into_iter().enumerate() {
        let (col, leaks) = c?;
        for (m, v) in col {
            matrix[(m, n)] = v;
        }
        if leaks {
            leaking_columns.push(n);
        }
    }
    Ok(OperatorMatrix { matrix, leaking_columns })
}

/// Matrix of `δ_j` or `δ_j*` on `{h_n : |n| ≤ N}`, from
/// `δ_j(e^{−|x|²/2}H) = e^{−|x|²/2} T_j H` and
/// `δ_j*(e^{−|x|²/2}H) = e^{−|x|²/2}(2x_j H − T_j H)`, re-expanded in the
/// Hermite basis through the pairing.
pub fn delta_matrix(basis: &HermiteBasis, j: usize, ladder: Ladder) -> Result<OperatorMatrix, SpectralError> {
    match basis.data() {
        BasisData::Exact { ops, elements } => ladder_generic(ops, elements, j, ladder, basis.degree()),
        BasisData::Float { ops, elements } => ladder_generic(ops, elements, j, ladder, basis.degree()),
    }
}

fn with_inv_sqrt(basis: &HermiteBasis, mut m: OperatorMatrix) -> OperatorMatrix {
    for (c, l) in basis.eigenvalues().iter().enumerate() {
        let s = l.sqrt().recip();
        m.matrix.column_mut(c).iter_mut().for_each(|v| *v *= s);
    }
    m
}

/// `R_j = δ_j L_κ^{−1/2}`.
pub fn riesz_matrix(basis: &HermiteBasis, j: usize) -> Result<OperatorMatrix, SpectralError> {
    Ok(with_inv_sqrt(basis, delta_matrix(basis, j, Ladder::Lower)?))
}

/// `R_j* = δ_j* L_κ^{−1/2}`.
pub fn riesz_adjoint_matrix(basis: &HermiteBasis, j: usize) -> Result<OperatorMatrix, SpectralError> {
    Ok(with_inv_sqrt(basis, delta_matrix(basis, j, Ladder::Raise)?))
}

/// Largest singular value by power iteration on `MᵀM`, stopping when the
/// Rayleigh quotient changes by less than `1e-10` relative over 20 steps.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    if m.ncols() == 0 || m.iter().all(|v| *v == 0.0) {
        return 0.0;
    }
    let gram = m.transpose() * m;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v = DVector::from_fn(m.ncols(), |_, _| rng.random_range(0.5..1.5));
    v /= v.norm();
    let mut last = 0.0;
    let mut history = Vec::new();
    for _ in 0..100_000 {
        let w = &gram * &v;
        let lambda = v.dot(&w);
        let n = w.norm();
        if n == 0.0 {
            return 0.0;
        }
        v = w / n;
        history.push(lambda);
        if history.len() > 20 {
            let old = history[history.len() - 21];
            if (lambda - old).abs() <= 1e-10 * lambda.abs() {
                last = lambda;
                break;
            }
        }
        last = lambda;
    }
    last.max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reflection::{Catalogue, RootSystem};
    use approx::assert_relative_eq;

    fn z2(kappa: f64, degree: u32) -> HermiteBasis {
        HermiteBasis::build(&RootSystem::z2_power(1, &[kappa]).unwrap(), degree).unwrap()
    }

    #[test]
    fn classical_annihilation_operator() {
        let b = z2(0.0, 10);
        let d = delta_matrix(&b, 0, Ladder::Lower).unwrap();
        for n in 1..=10 {
            assert_relative_eq!(d.matrix[(n - 1, n)], (2.0 * n as f64).sqrt(), max_relative = 1e-12);
        }
        assert_eq!(d.matrix.column(0).iter().filter(|v| **v != 0.0).count(), 0);
    }

    #[test]
    fn rank_one_ladder_and_riesz() {
        for kappa in [0.5, 1.0, 2.0] {
            let b = z2(kappa, 6);
            let d = delta_matrix(&b, 0, Ladder::Lower).unwrap();
            assert_relative_eq!(d.matrix[(0, 1)], (2.0 * (1.0 + 2.0 * kappa)).sqrt(), max_relative = 1e-13);
        }
        let b = z2(0.5, 6);
        let r = riesz_matrix(&b, 0).unwrap();
        assert_relative_eq!(r.matrix[(0, 1)], 1.0, max_relative = 1e-14);
        let b = z2(0.0, 8);
        let r = riesz_matrix(&b, 0).unwrap();
        for n in 1..=8 {
            let expect = (2.0 * n as f64 / (2.0 * n as f64 + 1.0)).sqrt();
            assert_relative_eq!(r.matrix[(n - 1, n)], expect, max_relative = 1e-13);
        }
    }

    #[test]
    fn lowering_matches_direct_pairing() {
        // simplified form: entry = 2^{(|n|−|m|)/2}[T_j ψ_n, ψ_m]/√(s_n s_m)
        let rs = RootSystem::catalogue(Catalogue::B2, &[1.0, 0.5]).unwrap();
        let b = HermiteBasis::build(&rs, 4).unwrap();
        let BasisData::Exact { ops, elements } = b.data() else { panic!("exact") };
        for j in 0..2 {
            let d = delta_matrix(&b, j, Ladder::Lower).unwrap();
            let up = delta_matrix(&b, j, Ladder::Raise).unwrap();
            for (n, en) in elements.iter().enumerate() {
                let t = ops.apply(j, &en.psi).unwrap();
                let xp = en.psi.mul_variable(j);
                for (m, em) in elements.iter().enumerate() {
                    let s = (en.norm.to_f64() * em.norm.to_f64()).sqrt();
                    let nm = en.index.order() as f64 - em.index.order() as f64;
                    let lower = 2f64.powf(nm / 2.0) * ops.pairing(&t, &em.psi).unwrap().to_f64() / s;
                    assert_relative_eq!(d.matrix[(m, n)], lower, epsilon = 1e-12);
                    let raise = 2f64.powf(nm / 2.0 + 1.0) * ops.pairing(&xp, &em.psi).unwrap().to_f64() / s;
                    assert_relative_eq!(up.matrix[(m, n)], raise, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn adjointness_and_oscillator() {
        let rs = RootSystem::catalogue(Catalogue::A2, &[1.0]).unwrap();
        let b = HermiteBasis::build(&rs, 5).unwrap();
        let safe = b.degree() - 1;
        let mut osc = DMatrix::zeros(b.len(), b.len());
        for j in 0..2 {
            let lo = delta_matrix(&b, j, Ladder::Lower).unwrap();
            let hi = delta_matrix(&b, j, Ladder::Raise).unwrap();
            assert_eq!(hi.leaking_columns.len(), MultiIndex::of_order(2, 5).len());
            let diff = lo.restricted(&b, b.degree()) - hi.restricted(&b, b.degree()).transpose();
            assert!(diff.amax() < 1e-10, "{}", diff.amax());
            osc += (&hi.matrix * &lo.matrix + &lo.matrix * &hi.matrix) * 0.5;
        }
        for (i, n) in b.indices().iter().enumerate() {
            if n.order() > safe {
                continue;
            }
            for (k, m) in b.indices().iter().enumerate() {
                if m.order() > safe {
                    continue;
                }
                let expect = if i == k { b.eigenvalue_of_order(n.order()) } else { 0.0 };
                assert_relative_eq!(osc[(k, i)], expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn riesz_norm_bound() {
        for kappa in [0.0, 0.5, 1.0, 2.0] {
            let b = z2(kappa, 10);
            let r = riesz_matrix(&b, 0).unwrap();
            let n = operator_norm(&r.restricted(&b, 9));
            assert!(n <= 2f64.sqrt() + 1e-8, "{n}");
            let svd = r.restricted(&b, 9).singular_values().max();
            assert_relative_eq!(n, svd, max_relative = 1e-8);
        }
    }

    #[test]
    fn norm_examples() {
        assert_eq!(operator_norm(&DMatrix::zeros(3, 3)), 0.0);
        assert_relative_eq!(operator_norm(&DMatrix::identity(4, 4)), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn analysis_round_trip() {
        let rs = RootSystem::z2_power(1, &[0.5]).unwrap();
        let b = HermiteBasis::build(&rs, 8).unwrap();
        let rule = QuadratureRule::new(&rs, 2 * 8 + 8).unwrap();
        let an = Analyzer::new(&b, rule).unwrap();
        let h0 = MultiIndex::new(vec![0]);
        let h2 = MultiIndex::new(vec![2]);
        let v = an.analyze(|x| b.hermite_function(&h0, x).unwrap() + 2.0 * b.hermite_function(&h2, x).unwrap());
        for (i, c) in v.coeffs.iter().enumerate() {
            let expect = match i {
                0 => 1.0,
                2 => 2.0,
                _ => 0.0,
            };
            assert!((c - expect).abs() < 1e-10, "{i}: {c}");
        }
        assert!(an.analyze(|_| 0.0).coeffs.iter().all(|c| *c == 0.0));
        let w = SpectralVector { coeffs: (0..b.len()).map(|i| (i as f64 * 0.7).sin()).collect() };
        let back = an.analyze(|x| synthesize(&b, &w, x).unwrap());
        for (a, c) in back.coeffs.iter().zip(&w.coeffs) {
            assert!((a - c).abs() < 1e-10);
        }
    }

    #[test]
    fn multipliers() {
        let b = z2(0.5, 4);
        let e0 = SpectralVector::unit(&b, &MultiIndex::new(vec![0])).unwrap();
        assert_relative_eq!(heat_apply(&b, 1.0, &e0).unwrap().coeffs[0], (-2.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(inv_sqrt_apply(&b, &e0).unwrap().coeffs[0], 0.5f64.sqrt(), max_relative = 1e-15);
        let v = SpectralVector { coeffs: vec![0.3, -1.0, 2.0, 0.5, 0.25] };
        let a = heat_apply(&b, 0.4, &heat_apply(&b, 0.35, &v).unwrap()).unwrap();
        let c = heat_apply(&b, 0.75, &v).unwrap();
        for (x, y) in a.coeffs.iter().zip(&c.coeffs) {
            assert_relative_eq!(x, y, max_relative = 1e-14);
        }
        assert_eq!(heat_apply(&b, 0.0, &v).unwrap(), v);
    }

    #[test]
    fn csv_export() {
        let b = z2(0.0, 2);
        let d = delta_matrix(&b, 0, Ladder::Lower).unwrap();
        let text = d.to_csv().unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("row,col,value"));
        assert_eq!(lines.count(), 2);
    }
}
