//! The orthonormal polynomial system, generalized Hermite polynomials and
//! Hermite functions.
//!
//! For each multi-index `n` the basis keeps the polynomial `ψ_n` produced by
//! Gram–Schmidt (coefficient 1 on `x^n`), its exact squared norm
//! `s_n = [ψ_n, ψ_n]_κ`, and `H̃_n = 2^{|n|} e^{−Δ_κ/4} ψ_n`. The normalised
//! objects are `φ_n = ψ_n/√s_n`, `H_n = H̃_n/√s_n` and
//! `h_n = 2^{−|n|/2} √m_κ e^{−|x|²/2} H_n`. Keeping `√s_n` out of the
//! stored polynomials keeps every identity exact in the coefficient field.

mod eval;
pub mod io;
pub mod norm;

use std::collections::HashMap;
use std::f64::consts::LN_2;

pub use eval::{CompiledPoly, PreparedPoint, Scaled};
pub use norm::c_kappa;

use crate::error::HermiteError;
use crate::polyalg::{DunklOperators, MultiIndex, Polynomial, QuadSurd, Scalar};
use crate::reflection::RootSystem;

/// Coefficient arithmetic used for a basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arithmetic {
    Exact,
    Float,
}

/// One basis element over a coefficient field.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisElement<C: Scalar> {
    pub index: MultiIndex,
    /// `ψ_n`, homogeneous of degree `|n|`.
    pub psi: Polynomial<C>,
    /// `s_n = [ψ_n, ψ_n]_κ > 0`.
    pub norm: C,
    /// `H̃_n = 2^{|n|} e^{−Δ_κ/4} ψ_n`.
    pub hermite: Polynomial<C>,
}

/// Basis elements together with the operators that produced them.
#[derive(Clone, Debug)]
pub enum BasisData {
    Exact { ops: DunklOperators<QuadSurd>, elements: Vec<BasisElement<QuadSurd>> },
    Float { ops: DunklOperators<f64>, elements: Vec<BasisElement<f64>> },
}

/// A degree-truncated generalized Hermite system.
#[derive(Clone, Debug)]
pub struct HermiteBasis {
    rs: RootSystem,
    degree: u32,
    gamma: f64,
    c_kappa: f64,
    m_kappa: f64,
    indices: Vec<MultiIndex>,
    position: HashMap<MultiIndex, usize>,
    data: BasisData,
    compiled: Vec<CompiledPoly>,
    /// `ln(2^{−|n|/2} √m_κ / √s_n)` per element.
    log_scale: Vec<f64>,
    /// `ln(1/√s_n)` per element.
    log_inv_sqrt_norm: Vec<f64>,
}

impl HermiteBasis {
    /// Builds the basis up to total degree `degree`, exactly when the root
    /// system allows it.
    pub fn build(rs: &RootSystem, degree: u32) -> Result<Self, HermiteError> {
        let mode = if rs.exact().is_some() { Arithmetic::Exact } else { Arithmetic::Float };
        Self::build_with(rs, degree, mode)
    }

    pub fn build_with(rs: &RootSystem, degree: u32, mode: Arithmetic) -> Result<Self, HermiteError> {
        let data = match mode {
            Arithmetic::Exact => {
                let ops = DunklOperators::exact(rs).ok_or_else(|| {
                    HermiteError::Format("root system has no exact representation".into())
                })?;
                let elements = gram_schmidt(&ops, rs.dim(), degree)?;
                BasisData::Exact { ops, elements }
            }
            Arithmetic::Float => {
                let ops = DunklOperators::float(rs);
                let elements = gram_schmidt(&ops, rs.dim(), degree)?;
                BasisData::Float { ops, elements }
            }
        };
        let c = c_kappa(rs)?;
        Ok(Self::assemble(rs.clone(), degree, c, data))
    }

    fn assemble(rs: RootSystem, degree: u32, c_kappa: f64, data: BasisData) -> Self {
        let gamma = rs.gamma();
        let d = rs.dim() as f64;
        let m_kappa = ((gamma + d / 2.0) * LN_2).exp() / c_kappa;
        let (indices, compiled, log_norms): (Vec<MultiIndex>, Vec<CompiledPoly>, Vec<f64>) = match &data {
            BasisData::Exact { elements, .. } => multiunzip(elements.iter().map(|e| {
                let n = e.norm.rational_part();
                (e.index.clone(), CompiledPoly::exact(&e.hermite), Scaled::ratio(n.numer(), n.denom()).ln_abs())
            })),
            BasisData::Float { elements, .. } => multiunzip(
                elements.iter().map(|e| (e.index.clone(), CompiledPoly::float(&e.hermite), e.norm.ln())),
            ),
        };
        let log_inv_sqrt_norm: Vec<f64> = log_norms.iter().map(|l| -0.5 * l).collect();
        let log_scale = indices
            .iter()
            .zip(&log_inv_sqrt_norm)
            .map(|(n, l)| -0.5 * n.order() as f64 * LN_2 + 0.5 * m_kappa.ln() + l)
            .collect();
        let position = indices.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        Self { rs, degree, gamma, c_kappa, m_kappa, indices, position, data, compiled, log_scale, log_inv_sqrt_norm }
    }

    pub fn root_system(&self) -> &RootSystem {
        &self.rs
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.rs.dim()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn c_kappa(&self) -> f64 {
        self.c_kappa
    }

    pub fn m_kappa(&self) -> f64 {
        self.m_kappa
    }

    pub fn arithmetic(&self) -> Arithmetic {
        match self.data {
            BasisData::Exact { .. } => Arithmetic::Exact,
            BasisData::Float { .. } => Arithmetic::Float,
        }
    }

    pub fn data(&self) -> &BasisData {
        &self.data
    }

    /// Multi-indices `|n| ≤ N` in graded-lex order; positions in this list
    /// index coefficient vectors and operator matrices.
    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn position(&self, n: &MultiIndex) -> Option<usize> {
        self.position.get(n).copied()
    }

    fn checked_position(&self, n: &MultiIndex) -> Result<usize, HermiteError> {
        self.position(n).ok_or_else(|| HermiteError::IndexOutOfTruncation { index: n.to_string(), max: self.degree })
    }

    /// `2|n| + 2γ_κ + d`.
    pub fn eigenvalue_of_order(&self, order: u32) -> f64 {
        2.0 * order as f64 + 2.0 * self.gamma + self.dim() as f64
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.indices.iter().map(|n| self.eigenvalue_of_order(n.order())).collect()
    }

    fn check_point(&self, x: &[f64]) -> Result<(), HermiteError> {
        if x.len() != self.dim() {
            return Err(crate::error::PolyError::DimensionMismatch { left: self.dim(), right: x.len() }.into());
        }
        Ok(())
    }

    /// `H̃_n(x)` for every basis element, in scaled form.
    fn raw_values(&self, x: &[f64]) -> Vec<Scaled> {
        let point = PreparedPoint::new(x, self.degree as usize);
        self.compiled.iter().map(|c| c.eval(&point, x)).collect()
    }

    /// `H_n(x)` for all `n`.
    pub fn hermite_polynomials_at(&self, x: &[f64]) -> Result<Vec<f64>, HermiteError> {
        self.check_point(x)?;
        Ok(self.raw_values(x).into_iter().zip(&self.log_inv_sqrt_norm).map(|(v, l)| v.times_exp(*l)).collect())
    }

    /// `h_n(x)` for all `n`.
    pub fn hermite_functions_at(&self, x: &[f64]) -> Result<Vec<f64>, HermiteError> {
        self.check_point(x)?;
        let g = -0.5 * x.iter().map(|v| v * v).sum::<f64>();
        Ok(self.raw_values(x).into_iter().zip(&self.log_scale).map(|(v, l)| v.times_exp(l + g)).collect())
    }

    /// `h_n(x) e^{|x|²/2}` for all `n`: the polynomial factor of each
    /// Hermite function, used by quadrature rules that carry the Gaussian.
    pub fn reduced_functions_at(&self, x: &[f64]) -> Result<Vec<f64>, HermiteError> {
        self.check_point(x)?;
        Ok(self.raw_values(x).into_iter().zip(&self.log_scale).map(|(v, l)| v.times_exp(*l)).collect())
    }

    /// `H_n(x)`.
    pub fn hermite_polynomial(&self, n: &MultiIndex, x: &[f64]) -> Result<f64, HermiteError> {
        let i = self.checked_position(n)?;
        self.check_point(x)?;
        let point = PreparedPoint::new(x, self.degree as usize);
        Ok(self.compiled[i].eval(&point, x).times_exp(self.log_inv_sqrt_norm[i]))
    }

    /// `h_n(x) = 2^{−|n|/2} √m_κ e^{−|x|²/2} H_n(x)`.
    pub fn hermite_function(&self, n: &MultiIndex, x: &[f64]) -> Result<f64, HermiteError> {
        let i = self.checked_position(n)?;
        self.check_point(x)?;
        let point = PreparedPoint::new(x, self.degree as usize);
        let g = -0.5 * x.iter().map(|v| v * v).sum::<f64>();
        Ok(self.compiled[i].eval(&point, x).times_exp(self.log_scale[i] + g))
    }

    /// Truncated Mehler sum `Σ_{|n|≤N} H_n(x) H_n(y) r^{|n|} / 2^{|n|}` and the
    /// contribution of its top shell.
    pub fn mehler_sum(&self, x: &[f64], y: &[f64], r: f64) -> Result<(f64, f64), HermiteError> {
        let hx = self.hermite_polynomials_at(x)?;
        let hy = self.hermite_polynomials_at(y)?;
        let mut total = 0.0;
        let mut top = 0.0;
        for ((n, a), b) in self.indices.iter().zip(&hx).zip(&hy) {
            let k = n.order();
            let term = a * b * (r / 2.0).powi(k as i32);
            total += term;
            if k == self.degree {
                top += term;
            }
        }
        Ok((total, top))
    }
}

fn multiunzip<A, B, C>(it: impl Iterator<Item = (A, B, C)>) -> (Vec<A>, Vec<B>, Vec<C>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut c = Vec::new();
    for (x, y, z) in it {
        a.push(x);
        b.push(y);
        c.push(z);
    }
    (a, b, c)
}

/// Blockwise Gram–Schmidt in graded-lex order under the pairing, then
/// `H̃_n = 2^{|n|} e^{−Δ_κ/4} ψ_n`.
fn gram_schmidt<C: Scalar>(
    ops: &DunklOperators<C>,
    dim: usize,
    degree: u32,
) -> Result<Vec<BasisElement<C>>, HermiteError> {
    let quarter = -C::from_ratio(1, 4);
    let mut out = Vec::new();
    for k in 0..=degree {
        let monos = MultiIndex::of_order(dim, k);
        let size = monos.len();
        // gram[a][b] = [x^a, x^b]
        let mut gram = vec![vec![C::zero(); size]; size];
        for (b, mb) in monos.iter().enumerate() {
            let table = ops.derivative_table(&Polynomial::monomial(mb.clone(), C::one()), k)?;
            for (a, ma) in monos.iter().enumerate() {
                gram[a][b] = table[ma].clone();
            }
        }
        let bilinear = |u: &[C], v: &[C]| -> C {
            let mut acc = C::zero();
            for (a, ua) in u.iter().enumerate() {
                if ua.is_zero() {
                    continue;
                }
                for (b, vb) in v.iter().enumerate() {
                    if !vb.is_zero() {
                        acc = acc + ua.clone() * gram[a][b].clone() * vb.clone();
                    }
                }
            }
            acc
        };
        let mut accepted: Vec<(Vec<C>, C)> = Vec::with_capacity(size);
        for i in 0..size {
            let mut v: Vec<C> = (0..size).map(|j| if i == j { C::one() } else { C::zero() }).collect();
            // modified Gram–Schmidt: project the running residual
            for (c, s) in &accepted {
                let proj = bilinear(&v, c) / s.clone();
                if !proj.is_zero() {
                    for (vj, cj) in v.iter_mut().zip(c) {
                        *vj = vj.clone() - proj.clone() * cj.clone();
                    }
                }
            }
            let s = bilinear(&v, &v);
            let scale = gram[i][i].to_f64().abs();
            if !(s.to_f64() > if C::EXACT { 0.0 } else { 1e-12 * scale }) {
                return Err(HermiteError::GramSingular { degree: k });
            }
            accepted.push((v, s));
        }
        let two_k = C::from_integer(1i64 << k.min(62));
        for (mono_i, (v, s)) in monos.iter().zip(accepted) {
            let psi = Polynomial::from_terms(dim, monos.iter().cloned().zip(v));
            let mut hermite = ops.exp_laplacian(&psi, &quarter)?;
            hermite = if k <= 62 { hermite.scale(&two_k) } else { scale_pow2(&hermite, k) };
            out.push(BasisElement { index: mono_i.clone(), psi, norm: s, hermite });
        }
    }
    Ok(out)
}

fn scale_pow2<C: Scalar>(p: &Polynomial<C>, k: u32) -> Polynomial<C> {
    let mut out = p.clone();
    let mut left = k;
    while left > 0 {
        let step = left.min(62);
        out = out.scale(&C::from_integer(1i64 << step));
        left -= step;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reflection::Catalogue;
    use approx::assert_relative_eq;

    fn q(n: i64, d: i64) -> QuadSurd {
        QuadSurd::from_ratio(n, d)
    }

    fn exact_elements(b: &HermiteBasis) -> (&DunklOperators<QuadSurd>, &[BasisElement<QuadSurd>]) {
        match b.data() {
            BasisData::Exact { ops, elements } => (ops, elements),
            BasisData::Float { .. } => panic!("expected exact basis"),
        }
    }

    #[test]
    fn rank_one_degree_one() {
        let rs = RootSystem::z2_power(1, &[0.5]).unwrap();
        let b = HermiteBasis::build(&rs, 1).unwrap();
        let (_, el) = exact_elements(&b);
        assert_eq!(el[0].hermite, Polynomial::one(1));
        assert_eq!(el[1].norm, q(2, 1));
        assert_eq!(el[1].hermite, Polynomial::variable(1, 0).scale(&q(2, 1)));
        let one = MultiIndex::new(vec![1]);
        assert_relative_eq!(b.hermite_polynomial(&one, &[0.7]).unwrap(), 2.0 * 0.7 / 2f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn ground_state_value() {
        for rs in [RootSystem::z2_power(1, &[0.5]).unwrap(), RootSystem::catalogue(Catalogue::A2, &[1.0]).unwrap()] {
            let b = HermiteBasis::build(&rs, 2).unwrap();
            let zero = MultiIndex::zero(rs.dim());
            let origin = vec![0.0; rs.dim()];
            assert_relative_eq!(b.hermite_function(&zero, &origin).unwrap(), b.m_kappa().sqrt(), max_relative = 1e-14);
            assert_eq!(b.hermite_polynomial(&zero, &origin).unwrap(), 1.0);
        }
    }

    #[test]
    fn classical_hermite_limit() {
        // κ = 0: H_n is the physicists' Hermite polynomial over √(n!)
        let rs = RootSystem::z2_power(1, &[0.0]).unwrap();
        let b = HermiteBasis::build(&rs, 12).unwrap();
        for &x in &[-1.3, 0.0, 0.4, 2.2] {
            let (mut h0, mut h1) = (1.0, 2.0 * x);
            let mut fact = 1.0;
            for n in 0..=12u32 {
                let hn = if n == 0 { h0 } else { h1 };
                if n > 0 {
                    fact *= n as f64;
                }
                let expect = hn / fact.sqrt();
                let got = b.hermite_polynomial(&MultiIndex::new(vec![n]), &[x]).unwrap();
                assert!((got - expect).abs() < 1e-11 * (1.0 + expect.abs()), "n={n} x={x}: {got} vs {expect}");
                if n > 0 {
                    let h2 = 2.0 * x * h1 - 2.0 * n as f64 * h0;
                    h0 = h1;
                    h1 = h2;
                }
            }
        }
    }

    #[test]
    fn pairing_orthogonality_is_exact() {
        let rs = RootSystem::catalogue(Catalogue::B2, &[1.0, 0.5]).unwrap();
        let b = HermiteBasis::build(&rs, 4).unwrap();
        let (ops, el) = exact_elements(&b);
        for a in el {
            for c in el {
                let p = ops.pairing(&a.psi, &c.psi).unwrap();
                if a.index == c.index {
                    assert_eq!(p, a.norm);
                } else {
                    assert!(p.is_zero());
                }
            }
        }
    }

    #[test]
    fn out_of_truncation() {
        let rs = RootSystem::z2_power(1, &[0.5]).unwrap();
        let b = HermiteBasis::build(&rs, 2).unwrap();
        assert!(matches!(
            b.hermite_function(&MultiIndex::new(vec![3]), &[0.0]),
            Err(HermiteError::IndexOutOfTruncation { .. })
        ));
    }

    #[test]
    fn float_mode_matches_exact() {
        let rs = RootSystem::catalogue(Catalogue::A2, &[0.5]).unwrap();
        let be = HermiteBasis::build_with(&rs, 5, Arithmetic::Exact).unwrap();
        let bf = HermiteBasis::build_with(&rs, 5, Arithmetic::Float).unwrap();
        let x = [0.3, -0.8];
        let he = be.hermite_functions_at(&x).unwrap();
        let hf = bf.hermite_functions_at(&x).unwrap();
        for (a, b) in he.iter().zip(&hf) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn scaling_identity() {
        // (e^{−Δ/2} p)(√2 x) = 2^{N/2} (e^{−Δ/4} p)(x), compared shell by shell
        let rs = RootSystem::catalogue(Catalogue::A2, &[1.0]).unwrap();
        let b = HermiteBasis::build(&rs, 4).unwrap();
        let (ops, el) = exact_elements(&b);
        for e in el {
            let n = e.index.order();
            let half = ops.exp_laplacian(&e.psi, &q(-1, 2)).unwrap();
            let quarter = ops.exp_laplacian(&e.psi, &q(-1, 4)).unwrap();
            for j in 0..=n / 2 {
                let deg = n - 2 * j;
                // the degree-deg part picks up 2^{deg/2} from the dilation
                let lhs = half.homogeneous_part(deg);
                let rhs = quarter.homogeneous_part(deg).scale(&QuadSurd::from_integer(1 << j));
                assert_eq!(lhs, rhs);
            }
        }
    }
}
