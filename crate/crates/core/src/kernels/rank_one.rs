//! The rank-one Dunkl kernel `E_κ(u, v)`, a function of `z = uv`.
//!
//! Two evaluators are provided. [`dunkl_kernel_1d`] runs the defining
//! power-series recursion with a hard term cap. [`RankOne`] evaluates
//! `ln E_κ(z)` for any real `z` through
//! `E_κ(z) = e^{−z} M(κ+1, 2κ+1, 2z) = e^{z} M(κ, 2κ+1, −2z)`, choosing the
//! form whose confluent series has positive terms.

use libm::lgamma;

use crate::error::KernelError;

/// Default term cap for [`dunkl_kernel_1d`].
pub const SERIES_TERMS: usize = 64;

/// `E_κ(u, v) = Σ a_n u^n` with `a_0 = 1`, `a_n = v a_{n−1}/(n + 2κ[n odd])`,
/// truncated after `max_terms` terms. Fails when the remaining tail is not
/// below `1e-15` of the sum.
pub fn dunkl_kernel_1d(kappa: f64, u: f64, v: f64, max_terms: usize) -> Result<f64, KernelError> {
    if !(kappa >= 0.0) {
        return Err(KernelError::InvalidParameter(format!("multiplicity {kappa} is negative")));
    }
    let z = u * v;
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..max_terms {
        let odd = if n % 2 == 1 { 2.0 * kappa } else { 0.0 };
        term *= z / (n as f64 + odd);
        sum += term;
        // once the ratio is below 1/2 the tail is dominated by a geometric
        // series with twice the last term
        let ratio = z.abs() / (n as f64 + 1.0);
        if ratio < 0.5 && 2.0 * term.abs() <= 1e-16 * sum.abs() {
            return Ok(sum);
        }
    }
    Err(KernelError::SeriesNonConvergence { terms: max_terms, argument: z })
}

/// `ln M(a, b, w)` for `a ≥ 0`, `b > 0`, `w ≥ 0`.
fn ln_kummer(a: f64, b: f64, w: f64) -> f64 {
    if a == 0.0 || w == 0.0 {
        return 0.0;
    }
    if w > 100.0 + 2.0 * (a + b) * (a + b) {
        ln_kummer_asymptotic(a, b, w)
    } else {
        ln_kummer_series(a, b, w)
    }
}

fn ln_kummer_series(a: f64, b: f64, w: f64) -> f64 {
    const RESCALE: f64 = 1e250;
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut offset = 0.0;
    let cap = (20.0 * w) as usize + 2000;
    for k in 0..cap {
        let kf = k as f64;
        let ratio = (a + kf) * w / ((b + kf) * (kf + 1.0));
        term *= ratio;
        sum += term;
        if sum > RESCALE {
            sum /= RESCALE;
            term /= RESCALE;
            offset += RESCALE.ln();
        }
        if ratio < 1.0 && term <= 1e-17 * sum {
            break;
        }
    }
    offset + sum.ln()
}

/// Large-`w` expansion; the recessive branch is below `e^{−w}` relative.
fn ln_kummer_asymptotic(a: f64, b: f64, w: f64) -> f64 {
    let mut sum = 1.0;
    let mut term: f64 = 1.0;
    for k in 0..200 {
        let kf = k as f64;
        let next = term * (b - a + kf) * (1.0 - a + kf) / ((kf + 1.0) * w);
        if next.abs() >= term.abs() && k > 0 {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    lgamma(b) - lgamma(a) + w + (a - b) * w.ln() + sum.ln()
}

/// Rank-one kernel for a fixed multiplicity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankOne {
    kappa: f64,
}

impl RankOne {
    pub fn new(kappa: f64) -> Result<Self, KernelError> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(KernelError::InvalidParameter(format!("multiplicity {kappa} is not a finite nonnegative number")));
        }
        Ok(Self { kappa })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `ln E_κ(z)`; the kernel is positive on the real line.
    pub fn ln_value(&self, z: f64) -> f64 {
        let k = self.kappa;
        if k == 0.0 {
            z
        } else if z >= 0.0 {
            -z + ln_kummer(k + 1.0, 2.0 * k + 1.0, 2.0 * z)
        } else {
            z + ln_kummer(k, 2.0 * k + 1.0, -2.0 * z)
        }
    }

    pub fn value(&self, z: f64) -> f64 {
        self.ln_value(z).exp()
    }

    /// `d ln E_κ(z)/dz`, which lies in `[−1, 1]`.
    pub fn log_derivative(&self, z: f64) -> f64 {
        let k = self.kappa;
        let b = 2.0 * k + 1.0;
        if k == 0.0 {
            1.0
        } else if z >= 0.0 {
            let w = 2.0 * z;
            let ratio = (ln_kummer(k + 2.0, b + 1.0, w) - ln_kummer(k + 1.0, b, w)).exp();
            -1.0 + 2.0 * (k + 1.0) / b * ratio
        } else {
            let w = -2.0 * z;
            let ratio = (ln_kummer(k + 1.0, b + 1.0, w) - ln_kummer(k, b, w)).exp();
            1.0 - 2.0 * k / b * ratio
        }
    }
}
