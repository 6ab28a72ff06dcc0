//! Gauss rules for `e^{−|x|²} dμ_κ`.

use libm::lgamma;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::SpectralError;
use crate::reflection::RootSystem;

/// Nodes and weights of a one-dimensional rule for `|u|^{2κ} e^{−u²} du`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxisRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Golub–Welsch for `|u|^{2κ} e^{−u²}`: the monic orthogonal polynomials
/// satisfy `p_{n+1} = u p_n − β_n p_{n−1}` with `β_n = (n + 2κ[n odd])/2`,
/// and the zeroth moment is `Γ(κ + 1/2)`. Exact for degree `≤ 2·order − 1`.
pub fn generalized_gauss_hermite(kappa: f64, order: usize) -> Result<AxisRule, SpectralError> {
    if order == 0 {
        return Err(SpectralError::OrderTooSmall);
    }
    let mut jacobi = DMatrix::zeros(order, order);
    for n in 1..order {
        let odd = if n % 2 == 1 { 2.0 * kappa } else { 0.0 };
        let beta = (n as f64 + odd) / 2.0;
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(SpectralError::MomentMatrixSingular);
        }
        jacobi[(n, n - 1)] = beta.sqrt();
        jacobi[(n - 1, n)] = beta.sqrt();
    }
    let eig = SymmetricEigen::new(jacobi);
    let mass = lgamma(kappa + 0.5).exp();
    let betas: Vec<f64> = (0..=order).map(|n| (n as f64 + if n % 2 == 1 { 2.0 * kappa } else { 0.0 }) / 2.0).collect();
    let mut pairs: Vec<(f64, f64)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &x0)| {
            let x = polish_node(x0, &betas, order);
            let w = christoffel(x, &betas, order, mass);
            // the recurrence overflows only far in the tail
            if w.is_finite() { (x, w) } else { (x0, mass * eig.eigenvectors[(0, i)].powi(2)) }
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // symmetrise: the rule is even in exact arithmetic
    let n = pairs.len();
    for i in 0..n / 2 {
        let x = 0.5 * (pairs[n - 1 - i].0 - pairs[i].0);
        let w = 0.5 * (pairs[i].1 + pairs[n - 1 - i].1);
        pairs[i] = (-x, w);
        pairs[n - 1 - i] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    Ok(AxisRule { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1).collect() })
}

/// Orthonormal recurrence `√β_{k+1} q_{k+1} = u q_k − √β_k q_{k−1}` with
/// `q_0 = 1`; returns `(q_order, q'_order, Σ_{k<order} q_k²)`.
fn orthonormal_at(u: f64, betas: &[f64], order: usize) -> (f64, f64, f64) {
    let (mut q0, mut q1) = (0.0, 1.0);
    let (mut d0, mut d1) = (0.0, 0.0);
    let mut sum = 0.0;
    for k in 0..order {
        sum += q1 * q1;
        let b = betas[k].sqrt();
        let next = betas[k + 1].sqrt();
        let q2 = (u * q1 - b * q0) / next;
        let d2 = (q1 + u * d1 - b * d0) / next;
        (q0, q1, d0, d1) = (q1, q2, d1, d2);
    }
    (q1, d1, sum)
}

/// A few Newton steps on `q_order` from the eigenvalue estimate.
fn polish_node(x0: f64, betas: &[f64], order: usize) -> f64 {
    let mut x = x0;
    for _ in 0..3 {
        let (q, dq, _) = orthonormal_at(x, betas, order);
        if dq == 0.0 || !dq.is_finite() {
            break;
        }
        let step = q / dq;
        if !step.is_finite() || step.abs() > 1e-3 * (1.0 + x.abs()) {
            break;
        }
        x -= step;
    }
    x
}

/// Gauss weight `mass / Σ_{k<order} q_k(x)²`.
fn christoffel(x: f64, betas: &[f64], order: usize, mass: f64) -> f64 {
    mass / orthonormal_at(x, betas, order).2
}

/// A cubature rule with `Σ_q w_q f(x_q) ≈ ∫ f(x) e^{−|x|²} dμ_κ(x)`.
///
/// For product groups the rule is a tensor product of generalized
/// Gauss–Hermite rules and is exact on polynomials of degree
/// `≤ 2·order − 1` in each variable. Otherwise it is a tensor Gauss–Hermite
/// rule with the weight `w_κ` folded into the weights.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadratureRule {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub order: usize,
    /// Whether `w_κ` is integrated exactly by construction.
    pub exact_weight: bool,
}

impl QuadratureRule {
    pub fn new(rs: &RootSystem, order: usize) -> Result<Self, SpectralError> {
        let d = rs.dim();
        let (axes, exact_weight) = match rs.axis_multiplicities() {
            Some(k) => (
                k.iter()
                    .map(|&k| {
                        // w_κ contributes |√2 u|^{2κ} per axis
                        let mut r = generalized_gauss_hermite(k, order)?;
                        let f = (k * std::f64::consts::LN_2).exp();
                        r.weights.iter_mut().for_each(|w| *w *= f);
                        Ok(r)
                    })
                    .collect::<Result<Vec<_>, SpectralError>>()?,
                true,
            ),
            None => (vec![generalized_gauss_hermite(0.0, order)?; d], false),
        };
        let total: usize = axes.iter().map(|a| a.nodes.len()).product();
        let mut nodes = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            let x: Vec<f64> = idx.iter().zip(&axes).map(|(&i, a)| a.nodes[i]).collect();
            let mut w: f64 = idx.iter().zip(&axes).map(|(&i, a)| a.weights[i]).product();
            if !exact_weight {
                w *= rs.weight(&x);
            }
            nodes.push(x);
            weights.push(w);
            for (i, a) in idx.iter_mut().zip(&axes) {
                *i += 1;
                if *i < a.nodes.len() {
                    break;
                }
                *i = 0;
            }
        }
        Ok(Self { nodes, weights, order, exact_weight })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.nodes.first().map_or(0, Vec::len)
    }

    /// `Σ w_q f(x_q)`.
    pub fn apply(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }

    /// The rule rescaled to `∫ f e^{−|x|²/2} dμ_κ`: nodes times `√2`,
    /// weights times `2^{γ+d/2}`.
    pub fn half_gaussian(&self, gamma: f64) -> Self {
        let s = std::f64::consts::SQRT_2;
        let d = self.dim() as f64;
        let f = ((gamma + d / 2.0) * std::f64::consts::LN_2).exp();
        Self {
            nodes: self.nodes.iter().map(|x| x.iter().map(|v| v * s).collect()).collect(),
            weights: self.weights.iter().map(|w| w * f).collect(),
            order: self.order,
            exact_weight: self.exact_weight,
        }
    }
}
