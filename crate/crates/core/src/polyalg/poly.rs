use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::scalar::Scalar;
use crate::error::PolyError;

/// Exponent vector `n ∈ ℕ^d`.
///
/// Ordered graded-lexicographically: total degree ascending, then the
/// exponent vectors in descending lexicographic order, so within degree 2
/// the order is `x1² , x1·x2 , x2²`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn zero(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn unit(dim: usize, j: usize) -> Self {
        let mut e = vec![0; dim];
        e[j] = 1;
        Self(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|n| = Σ n_j`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, j: usize) -> u32 {
        self.0[j]
    }

    pub fn with(&self, j: usize, value: u32) -> Self {
        let mut e = self.0.clone();
        e[j] = value;
        Self(e)
    }

    pub fn plus(&self, other: &MultiIndex) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// All multi-indices of order exactly `degree` in graded-lex order.
    pub fn of_order(dim: usize, degree: u32) -> Vec<MultiIndex> {
        fn rec(dim: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if prefix.len() + 1 == dim {
                prefix.push(left);
                out.push(MultiIndex(prefix.clone()));
                prefix.pop();
                return;
            }
            for k in (0..=left).rev() {
                prefix.push(k);
                rec(dim, left - k, prefix, out);
                prefix.pop();
            }
        }
        if dim == 0 {
            return if degree == 0 { vec![MultiIndex(vec![])] } else { vec![] };
        }
        let mut out = Vec::new();
        rec(dim, degree, &mut Vec::with_capacity(dim), &mut out);
        out
    }

    /// All multi-indices of order at most `max_degree`, graded.
    pub fn up_to_order(dim: usize, max_degree: u32) -> Vec<MultiIndex> {
        (0..=max_degree).flat_map(|k| Self::of_order(dim, k)).collect()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order().cmp(&other.order()).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Sparse multivariate polynomial over a [`Scalar`] field. Zero
/// coefficients are never stored.
#[derive(Clone, PartialEq)]
pub struct Polynomial<C> {
    dim: usize,
    terms: BTreeMap<MultiIndex, C>,
}

impl<C: Scalar> Polynomial<C> {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: C) -> Self {
        Self::monomial(MultiIndex::zero(dim), c)
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, C::one())
    }

    pub fn monomial(exponent: MultiIndex, c: C) -> Self {
        let dim = exponent.dim();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exponent, c);
        }
        Self { dim, terms }
    }

    /// The coordinate function `x_j`.
    pub fn variable(dim: usize, j: usize) -> Self {
        Self::monomial(MultiIndex::unit(dim, j), C::one())
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (MultiIndex, C)>) -> Self {
        let mut p = Self::zero(dim);
        for (m, c) in terms {
            assert_eq!(m.dim(), dim, "exponent dimension mismatch");
            p.add_term(m, c);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &C)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &MultiIndex) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    /// Total degree, `None` for the zero polynomial (degree −∞).
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(MultiIndex::order).max()
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut it = self.terms.keys().map(MultiIndex::order);
        match it.next() {
            None => true,
            Some(d) => it.all(|e| e == d),
        }
    }

    /// The homogeneous component of degree `k`.
    pub fn homogeneous_part(&self, k: u32) -> Self {
        Self {
            dim: self.dim,
            terms: self.terms.iter().filter(|(m, _)| m.order() == k).map(|(m, c)| (m.clone(), c.clone())).collect(),
        }
    }

    pub fn constant_term(&self) -> C {
        self.coefficient(&MultiIndex::zero(self.dim))
    }

    pub fn add_term(&mut self, m: MultiIndex, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&m) {
            Some(old) => {
                let s = old + c;
                if !s.is_zero() {
                    self.terms.insert(m, s);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    fn check_dim(&self, other: &Self) -> Result<(), PolyError> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(PolyError::DimensionMismatch { left: self.dim, right: other.dim })
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_dim(other)?;
        let mut out = Self::zero(self.dim);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.plus(m2), c1.clone() * c2.clone());
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: &C) -> Self {
        if s.is_zero() {
            return Self::zero(self.dim);
        }
        Self {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c.clone() * s.clone()))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }

    /// Multiplication by the coordinate `x_j`.
    pub fn mul_variable(&self, j: usize) -> Self {
        Self {
            dim: self.dim,
            terms: self.terms.iter().map(|(m, c)| (m.with(j, m.get(j) + 1), c.clone())).collect(),
        }
    }

    pub fn partial_derivative(&self, j: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (m, c) in &self.terms {
            let e = m.get(j);
            if e > 0 {
                out.add_term(m.with(j, e - 1), c.clone() * C::from_integer(e as i64));
            }
        }
        out
    }

    pub fn eval(&self, point: &[C]) -> Result<C, PolyError> {
        if point.len() != self.dim {
            return Err(PolyError::DimensionMismatch { left: self.dim, right: point.len() });
        }
        let mut acc = C::zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for (x, &e) in point.iter().zip(m.entries()) {
                for _ in 0..e {
                    term = term * x.clone();
                }
            }
            acc = acc + term;
        }
        Ok(acc)
    }

    /// `p ∘ M`, i.e. `x ↦ p(M x)` for a `d×d` matrix given row-major.
    pub fn compose_linear(&self, matrix: &[Vec<C>]) -> Result<Self, PolyError> {
        if matrix.len() != self.dim || matrix.iter().any(|r| r.len() != self.dim) {
            return Err(PolyError::DimensionMismatch { left: self.dim, right: matrix.len() });
        }
        let dim = self.dim;
        // (M x)_i as linear forms, and their powers on demand
        let forms: Vec<Self> = matrix
            .iter()
            .map(|row| Self::from_terms(dim, row.iter().enumerate().map(|(k, c)| (MultiIndex::unit(dim, k), c.clone()))))
            .collect();
        let mut powers: Vec<Vec<Self>> = forms.iter().map(|_| vec![Self::one(dim)]).collect();
        let mut out = Self::zero(dim);
        for (m, c) in &self.terms {
            let mut term = Self::constant(dim, c.clone());
            for (i, &e) in m.entries().iter().enumerate() {
                while powers[i].len() <= e as usize {
                    let next = &powers[i][powers[i].len() - 1] * &forms[i];
                    powers[i].push(next);
                }
                if e > 0 {
                    term = &term * &powers[i][e as usize];
                }
            }
            out = &out + &term;
        }
        Ok(out)
    }

    /// Drops coefficients below `rel_tol` times the largest magnitude. Only
    /// meaningful for floating coefficients; a no-op in exact fields.
    /// Drops float coefficients of magnitude at most `floor`. Exact
    /// polynomials are left alone.
    pub fn prune(&mut self, floor: f64) {
        if C::EXACT {
            return;
        }
        self.terms.retain(|_, c| c.magnitude() > floor);
    }

    pub fn max_magnitude(&self) -> f64 {
        self.terms.values().map(Scalar::magnitude).fold(0.0, f64::max)
    }

    pub fn map_coefficients<D: Scalar>(&self, f: impl Fn(&C) -> D) -> Polynomial<D> {
        Polynomial::from_terms(self.dim, self.terms.iter().map(|(m, c)| (m.clone(), f(c))))
    }
}

impl<'a, C: Scalar> Add<&'a Polynomial<C>> for &'a Polynomial<C> {
    type Output = Polynomial<C>;
    fn add(self, rhs: &'a Polynomial<C>) -> Polynomial<C> {
        self.checked_add(rhs).expect("polynomial dimension mismatch")
    }
}

impl<'a, C: Scalar> Sub<&'a Polynomial<C>> for &'a Polynomial<C> {
    type Output = Polynomial<C>;
    fn sub(self, rhs: &'a Polynomial<C>) -> Polynomial<C> {
        self.checked_sub(rhs).expect("polynomial dimension mismatch")
    }
}

impl<'a, C: Scalar> Mul<&'a Polynomial<C>> for &'a Polynomial<C> {
    type Output = Polynomial<C>;
    fn mul(self, rhs: &'a Polynomial<C>) -> Polynomial<C> {
        self.checked_mul(rhs).expect("polynomial dimension mismatch")
    }
}

impl<C: Scalar> Neg for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn neg(self) -> Polynomial<C> {
        self.scale(&(-C::one()))
    }
}

impl<C: Scalar> fmt::Debug for Polynomial<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self.terms.iter().rev().map(|(m, c)| format!("({c:?})x^{m}")).collect();
        f.write_str(&parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::scalar::QuadSurd;

    type P = Polynomial<QuadSurd>;

    fn x(dim: usize, j: usize) -> P {
        P::variable(dim, j)
    }

    fn q(n: i64) -> QuadSurd {
        QuadSurd::from_integer(n)
    }

    #[test]
    fn square_of_variable() {
        let p = &x(1, 0) * &x(1, 0);
        assert_eq!(p, P::monomial(MultiIndex::new(vec![2]), q(1)));
        assert_eq!(p.degree(), Some(2));
    }

    #[test]
    fn evaluation() {
        let p = &(&x(2, 0) * &x(2, 0)) + &x(2, 1);
        assert_eq!(p.eval(&[q(2), q(3)]).unwrap(), q(7));
    }

    #[test]
    fn reflection_pullback() {
        // σ for α = (√2, 0) is diag(-1, 1)
        let m = vec![vec![q(-1), q(0)], vec![q(0), q(1)]];
        assert_eq!(x(2, 0).compose_linear(&m).unwrap(), x(2, 0).scale(&q(-1)));
    }

    #[test]
    fn zero_polynomial_has_no_degree() {
        let p = &x(2, 0) - &x(2, 0);
        assert!(p.is_zero());
        assert_eq!(p.degree(), None);
        assert!(p.terms().next().is_none());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let err = x(1, 0).checked_add(&x(2, 0)).unwrap_err();
        assert!(matches!(err, PolyError::DimensionMismatch { left: 1, right: 2 }));
        assert!(x(2, 0).eval(&[q(1)]).is_err());
    }

    #[test]
    fn graded_lex_enumeration() {
        let ms = MultiIndex::of_order(2, 2);
        let e: Vec<Vec<u32>> = ms.iter().map(|m| m.entries().to_vec()).collect();
        assert_eq!(e, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        let all = MultiIndex::up_to_order(3, 3);
        assert_eq!(all.len(), 20);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn derivative_and_product_rule() {
        let p = &(&x(2, 0) * &x(2, 1)) + &x(2, 0);
        let r = &x(2, 0) * &x(2, 0);
        let lhs = (&p * &r).partial_derivative(0);
        let rhs = &(&p.partial_derivative(0) * &r) + &(&p * &r.partial_derivative(0));
        assert_eq!(lhs, rhs);
    }
}
