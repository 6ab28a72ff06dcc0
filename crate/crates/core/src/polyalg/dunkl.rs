//! Dunkl operators acting on polynomials.
//!
//! Every root is handled through a direction `β` parallel to it. Because
//! `α_j / ⟨x,α⟩ = β_j / ⟨x,β⟩`, the difference part of `T_j` only needs the
//! quotient `(p − p∘σ)/⟨x,β⟩`, and both the reflection matrix
//! `I − 2ββᵀ/|β|²` and that quotient stay inside the coefficient field.

use std::collections::BTreeMap;

use super::poly::{MultiIndex, Polynomial};
use super::scalar::{QuadSurd, Scalar};
use crate::error::PolyError;
use crate::reflection::RootSystem;

/// Relative size below which a floating remainder counts as roundoff.
const FLOAT_REMAINDER_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
struct Mirror<C> {
    direction: Vec<C>,
    reflection: Vec<Vec<C>>,
    pivot: usize,
    kappa: C,
}

impl<C: Scalar> Mirror<C> {
    fn new(direction: Vec<C>, kappa: C) -> Self {
        let d = direction.len();
        let norm2 = direction.iter().fold(C::zero(), |acc, b| acc + b.clone() * b.clone());
        let two = C::from_integer(2);
        let reflection = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        let id = if i == j { C::one() } else { C::zero() };
                        id - two.clone() * direction[i].clone() * direction[j].clone() / norm2.clone()
                    })
                    .collect()
            })
            .collect();
        // largest component as pivot keeps float division well conditioned
        let pivot = (0..d)
            .filter(|&k| !direction[k].is_zero())
            .max_by(|&a, &b| direction[a].magnitude().total_cmp(&direction[b].magnitude()))
            .expect("zero root direction");
        Self { direction, reflection, pivot, kappa }
    }
}

/// The operators `T_1, …, T_d` of a root system and multiplicity over a
/// coefficient field `C`.
#[derive(Clone, Debug)]
pub struct DunklOperators<C> {
    dim: usize,
    mirrors: Vec<Mirror<C>>,
}

impl DunklOperators<QuadSurd> {
    /// Exact operators, available when the root system carries exact
    /// directions and rational multiplicities.
    pub fn exact(rs: &RootSystem) -> Option<Self> {
        let ex = rs.exact()?;
        let parts = ex
            .directions
            .iter()
            .zip(&ex.multiplicities)
            .map(|(d, k)| (d.clone(), QuadSurd::rational(k.clone())))
            .collect();
        Some(Self::from_parts(rs.dim(), parts))
    }
}

impl DunklOperators<f64> {
    pub fn float(rs: &RootSystem) -> Self {
        let parts = rs
            .positive_roots()
            .iter()
            .zip(rs.multiplicities())
            .map(|(r, &k)| (r.components().to_vec(), k))
            .collect();
        Self::from_parts(rs.dim(), parts)
    }
}

impl<C: Scalar> DunklOperators<C> {
    /// Operators from `(direction, κ)` pairs. Directions need not be
    /// normalised. Roots with `κ = 0` are dropped.
    pub fn from_parts(dim: usize, parts: Vec<(Vec<C>, C)>) -> Self {
        let mirrors = parts
            .into_iter()
            .filter(|(_, k)| !k.is_zero())
            .map(|(d, k)| {
                assert_eq!(d.len(), dim, "root direction has wrong dimension");
                Mirror::new(d, k)
            })
            .collect();
        Self { dim, mirrors }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check(&self, p: &Polynomial<C>) -> Result<(), PolyError> {
        if p.dim() == self.dim {
            Ok(())
        } else {
            Err(PolyError::DimensionMismatch { left: self.dim, right: p.dim() })
        }
    }

    fn quotient(&self, p: &Polynomial<C>, m: &Mirror<C>) -> Result<Polynomial<C>, PolyError> {
        let mut num = p.checked_sub(&p.compose_linear(&m.reflection)?)?;
        num.prune(1e-12 * p.max_magnitude());
        divide_by_linear_form(&num, &m.direction, m.pivot)
    }

    /// `T_j p = ∂_j p + Σ κ(α) α_j (p − p∘σ_α)/⟨x,α⟩`.
    pub fn apply(&self, j: usize, p: &Polynomial<C>) -> Result<Polynomial<C>, PolyError> {
        self.check(p)?;
        if j >= self.dim {
            return Err(PolyError::AxisOutOfRange { axis: j, dim: self.dim });
        }
        let mut out = p.partial_derivative(j);
        for m in &self.mirrors {
            if m.direction[j].is_zero() {
                continue;
            }
            let q = self.quotient(p, m)?;
            out = out.checked_add(&q.scale(&(m.kappa.clone() * m.direction[j].clone())))?;
        }
        Ok(out)
    }

    /// All of `T_1 p, …, T_d p`, sharing the difference quotients.
    pub fn apply_all(&self, p: &Polynomial<C>) -> Result<Vec<Polynomial<C>>, PolyError> {
        self.check(p)?;
        let mut out: Vec<Polynomial<C>> = (0..self.dim).map(|j| p.partial_derivative(j)).collect();
        for m in &self.mirrors {
            let q = self.quotient(p, m)?;
            for (j, o) in out.iter_mut().enumerate() {
                if !m.direction[j].is_zero() {
                    *o = o.checked_add(&q.scale(&(m.kappa.clone() * m.direction[j].clone())))?;
                }
            }
        }
        Ok(out)
    }

    /// `Δ_κ p = Σ_j T_j² p`.
    pub fn laplacian(&self, p: &Polynomial<C>) -> Result<Polynomial<C>, PolyError> {
        let mut out = Polynomial::zero(self.dim);
        for (j, tj) in self.apply_all(p)?.iter().enumerate() {
            out = out.checked_add(&self.apply(j, tj)?)?;
        }
        Ok(out)
    }

    /// `Σ_k s^k Δ_κ^k p / k!`, a finite sum since `Δ_κ` lowers degree by two.
    pub fn exp_laplacian(&self, p: &Polynomial<C>, s: &C) -> Result<Polynomial<C>, PolyError> {
        self.check(p)?;
        let mut out = p.clone();
        let mut term = p.clone();
        let mut k = 1i64;
        while !term.is_zero() && !s.is_zero() {
            term = self.laplacian(&term)?.scale(&(s.clone() / C::from_integer(k)));
            out = out.checked_add(&term)?;
            k += 1;
        }
        Ok(out)
    }

    /// `L̃p = −Δ_κ p + Σ_j [x_j T_j p + T_j(x_j p)]`, the oscillator conjugated
    /// by the Gaussian: `L_κ(e^{−|x|²/2} p) = e^{−|x|²/2} L̃p`.
    pub fn conjugated_oscillator(&self, p: &Polynomial<C>) -> Result<Polynomial<C>, PolyError> {
        let mut out = -&self.laplacian(p)?;
        for (j, tj) in self.apply_all(p)?.iter().enumerate() {
            out = out.checked_add(&tj.mul_variable(j))?;
            out = out.checked_add(&self.apply(j, &p.mul_variable(j))?)?;
        }
        Ok(out)
    }

    /// `(T^m q)(0)` for every multi-index `m` of order `order`.
    pub fn derivative_table(&self, q: &Polynomial<C>, order: u32) -> Result<BTreeMap<MultiIndex, C>, PolyError> {
        self.check(q)?;
        let mut level: BTreeMap<MultiIndex, Polynomial<C>> = BTreeMap::new();
        level.insert(MultiIndex::zero(self.dim), q.homogeneous_part(order));
        for k in 1..=order {
            let mut next = BTreeMap::new();
            for m in MultiIndex::of_order(self.dim, k) {
                let j = (0..self.dim).find(|&j| m.get(j) > 0).expect("nonzero multi-index");
                let parent = &level[&m.with(j, m.get(j) - 1)];
                next.insert(m, self.apply(j, parent)?);
            }
            level = next;
        }
        Ok(level.into_iter().map(|(m, p)| (m, p.constant_term())).collect())
    }

    /// `[p,q]_κ = (p(T)q)(0)`.
    pub fn pairing(&self, p: &Polynomial<C>, q: &Polynomial<C>) -> Result<C, PolyError> {
        self.check(p)?;
        self.check(q)?;
        let mut acc = C::zero();
        let Some(top) = p.degree() else { return Ok(acc) };
        for k in 0..=top {
            let pk = p.homogeneous_part(k);
            if pk.is_zero() {
                continue;
            }
            let table = self.derivative_table(q, k)?;
            for (m, c) in pk.terms() {
                acc = acc + c.clone() * table[m].clone();
            }
        }
        Ok(acc)
    }
}

/// Exact quotient of `num` by the linear form `Σ β_i x_i`, by long division
/// in the pivot variable. A leftover that is not roundoff is an error.
pub fn divide_by_linear_form<C: Scalar>(
    num: &Polynomial<C>,
    direction: &[C],
    pivot: usize,
) -> Result<Polynomial<C>, PolyError> {
    let dim = num.dim();
    if direction.len() != dim {
        return Err(PolyError::DimensionMismatch { left: dim, right: direction.len() });
    }
    let scale = num.max_magnitude();
    let mut rem = num.clone();
    let mut quot = Polynomial::zero(dim);
    let top = rem.terms().map(|(m, _)| m.get(pivot)).max().unwrap_or(0);
    for e in (1..=top).rev() {
        let level: Vec<(MultiIndex, C)> =
            rem.terms().filter(|(m, _)| m.get(pivot) == e).map(|(m, c)| (m.clone(), c.clone())).collect();
        for (m, c) in level {
            let base = m.with(pivot, e - 1);
            let t = c / direction[pivot].clone();
            for (i, b) in direction.iter().enumerate() {
                if !b.is_zero() {
                    let mi = base.with(i, base.get(i) + 1);
                    rem.add_term(mi, -(t.clone() * b.clone()));
                }
            }
            quot.add_term(base, t);
        }
    }
    if !rem.is_zero() {
        let beta = direction.iter().map(Scalar::magnitude).fold(0.0, f64::max);
        let reference = scale.max(quot.max_magnitude() * beta).max(f64::MIN_POSITIVE);
        if C::EXACT || rem.max_magnitude() > FLOAT_REMAINDER_TOL * reference {
            return Err(PolyError::NonzeroRemainder);
        }
    }
    Ok(quot)
}

/// `(p − p∘σ_α)/⟨x,α⟩` for a root direction `alpha` (normalised or not;
/// the quotient scales inversely with `|α|`).
pub fn divided_difference<C: Scalar>(p: &Polynomial<C>, alpha: &[C]) -> Result<Polynomial<C>, PolyError> {
    let m = Mirror::new(alpha.to_vec(), C::one());
    let mut num = p.checked_sub(&p.compose_linear(&m.reflection)?)?;
    num.prune(1e-12 * p.max_magnitude());
    divide_by_linear_form(&num, &m.direction, m.pivot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reflection::Catalogue;
    use proptest::prelude::*;

    type P = Polynomial<QuadSurd>;

    fn q(n: i64, d: i64) -> QuadSurd {
        QuadSurd::from_ratio(n, d)
    }

    fn x(dim: usize, j: usize) -> P {
        P::variable(dim, j)
    }

    fn z2(kappa: f64) -> DunklOperators<QuadSurd> {
        DunklOperators::exact(&RootSystem::z2_power(1, &[kappa]).unwrap()).unwrap()
    }

    fn ops(kind: Catalogue, kappa: &[f64]) -> DunklOperators<QuadSurd> {
        DunklOperators::exact(&RootSystem::catalogue(kind, kappa).unwrap()).unwrap()
    }

    #[test]
    fn divided_difference_examples() {
        let s2 = QuadSurd::sqrt_of(2);
        let xx = &x(1, 0) * &x(1, 0);
        assert!(divided_difference(&xx, &[s2.clone()]).unwrap().is_zero());
        assert_eq!(divided_difference(&x(1, 0), &[s2.clone()]).unwrap(), P::constant(1, s2.clone()));
        let x1x2 = &x(2, 0) * &x(2, 1);
        let dd = divided_difference(&x1x2, &[s2.clone(), q(0, 1)]).unwrap();
        assert_eq!(dd, x(2, 1).scale(&s2));
    }

    #[test]
    fn nonzero_remainder_is_detected() {
        // x is not divisible by x + y
        let p = x(2, 0);
        let err = divide_by_linear_form(&p, &[q(1, 1), q(1, 1)], 0).unwrap_err();
        assert_eq!(err, PolyError::NonzeroRemainder);
    }

    #[test]
    fn rank_one_examples() {
        let t = z2(0.5);
        assert_eq!(t.apply(0, &x(1, 0)).unwrap(), P::constant(1, q(2, 1)));
        assert!(t.apply(0, &P::one(1)).unwrap().is_zero());
        let xx = &x(1, 0) * &x(1, 0);
        let k = z2(0.75);
        assert_eq!(k.laplacian(&xx).unwrap(), P::constant(1, q(5, 1)));
        let e = k.exp_laplacian(&xx, &q(-1, 4)).unwrap();
        assert_eq!(e, &xx - &P::constant(1, q(5, 4)));
        assert_eq!(k.conjugated_oscillator(&P::one(1)).unwrap(), P::constant(1, q(5, 2)));
        assert_eq!(k.conjugated_oscillator(&x(1, 0)).unwrap(), x(1, 0).scale(&q(9, 2)));
    }

    #[test]
    fn classical_limit() {
        let t = ops(Catalogue::Z2Power(2), &[0.0]);
        let p = &(&x(2, 0) * &x(2, 0)) + &(&x(2, 1) * &x(2, 1));
        assert_eq!(t.laplacian(&p).unwrap(), P::constant(2, q(4, 1)));
        assert_eq!(t.apply(1, &p).unwrap(), p.partial_derivative(1));
        assert_eq!(t.conjugated_oscillator(&P::one(2)).unwrap(), P::constant(2, q(2, 1)));
        let lin = &x(2, 0) + &x(2, 1).scale(&q(3, 1));
        assert!(t.laplacian(&lin).unwrap().is_zero());
    }

    #[test]
    fn pairing_examples() {
        let t = z2(0.5);
        assert_eq!(t.pairing(&P::one(1), &P::one(1)).unwrap(), q(1, 1));
        assert_eq!(t.pairing(&x(1, 0), &x(1, 0)).unwrap(), q(2, 1));
        let xx = &x(1, 0) * &x(1, 0);
        assert_eq!(t.pairing(&x(1, 0), &xx).unwrap(), q(0, 1));
    }

    #[test]
    fn pairing_is_symmetric_for_a2() {
        let t = ops(Catalogue::A2, &[1.0]);
        let monos = MultiIndex::of_order(2, 3);
        for a in &monos {
            for b in &monos {
                let pa = P::monomial(a.clone(), q(1, 1));
                let pb = P::monomial(b.clone(), q(1, 1));
                assert_eq!(t.pairing(&pa, &pb).unwrap(), t.pairing(&pb, &pa).unwrap());
            }
        }
    }

    #[test]
    fn operators_commute() {
        let t = ops(Catalogue::B2, &[1.0, 0.5]);
        let p = P::from_terms(
            2,
            [
                (MultiIndex::new(vec![3, 1]), q(2, 1)),
                (MultiIndex::new(vec![0, 4]), q(-1, 3)),
                (MultiIndex::new(vec![1, 2]), q(5, 1)),
            ],
        );
        let a = t.apply(0, &t.apply(1, &p).unwrap()).unwrap();
        let b = t.apply(1, &t.apply(0, &p).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn float_operators_agree_with_exact() {
        let rs = RootSystem::catalogue(Catalogue::A2, &[0.5]).unwrap();
        let te = DunklOperators::exact(&rs).unwrap();
        let tf = DunklOperators::float(&rs);
        let pe = P::from_terms(2, [(MultiIndex::new(vec![2, 1]), q(1, 1)), (MultiIndex::new(vec![0, 3]), q(2, 1))]);
        let pf = pe.map_coefficients(Scalar::to_f64);
        for j in 0..2 {
            let a = te.apply(j, &pe).unwrap().map_coefficients(Scalar::to_f64);
            let b = tf.apply(j, &pf).unwrap();
            let diff = a.checked_sub(&b).unwrap();
            assert!(diff.max_magnitude() < 1e-12, "{diff:?}");
        }
    }

    fn arb_poly(dim: usize) -> impl Strategy<Value = P> {
        proptest::collection::vec((proptest::collection::vec(0u32..4, dim), -5i64..=5), 1..6).prop_map(move |ts| {
            P::from_terms(dim, ts.into_iter().map(|(e, c)| (MultiIndex::new(e), QuadSurd::from_integer(c))))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn leibniz_with_invariant_factor(p in arb_poly(2)) {
            let t = ops(Catalogue::A2, &[1.0]);
            let r2 = &(&x(2, 0) * &x(2, 0)) + &(&x(2, 1) * &x(2, 1));
            for j in 0..2 {
                let lhs = t.apply(j, &(&p * &r2)).unwrap();
                let rhs = &(&t.apply(j, &p).unwrap() * &r2) + &(&p * &t.apply(j, &r2).unwrap());
                prop_assert_eq!(lhs, rhs);
            }
        }

        #[test]
        fn exp_laplacian_inverts(p in arb_poly(2)) {
            let t = ops(Catalogue::B2, &[1.0, 2.0]);
            let s = q(3, 7);
            let there = t.exp_laplacian(&p, &s).unwrap();
            prop_assert_eq!(t.exp_laplacian(&there, &(-s)).unwrap(), p);
        }

        #[test]
        fn oscillator_preserves_degree(p in arb_poly(2)) {
            let t = ops(Catalogue::Dihedral(6), &[1.0, 0.5]);
            for k in 0..=p.degree().unwrap_or(0) {
                let h = p.homogeneous_part(k);
                if h.is_zero() { continue; }
                let l = t.conjugated_oscillator(&h).unwrap();
                prop_assert_eq!(l.degree(), Some(k));
                prop_assert!(t.apply(0, &h).unwrap().is_homogeneous());
            }
        }
    }
}
