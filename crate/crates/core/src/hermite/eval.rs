//! Pointwise evaluation of basis polynomials without cancellation.
//!
//! Generalized Hermite polynomials of high degree have huge alternating
//! monomial coefficients, so naive `f64` evaluation loses every digit
//! inside the oscillatory region. Exact bases are therefore evaluated at
//! the (exactly representable) `f64` point in integer arithmetic and only
//! rounded at the end. Values are carried as a mantissa and a binary
//! exponent so that `H_n(x)` of any size can be combined with the Gaussian
//! factor before leaving `f64` range.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::polyalg::{Polynomial, QuadSurd};

/// `mantissa · 2^exponent` with `mantissa` in `[0.5, 1)` or zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled {
    pub mantissa: f64,
    pub exponent: i64,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled { mantissa: 0.0, exponent: 0 };

    pub fn from_f64(v: f64) -> Self {
        if v == 0.0 || !v.is_finite() {
            return Self { mantissa: v, exponent: 0 };
        }
        let (m, e) = frexp(v);
        Self { mantissa: m, exponent: e as i64 }
    }

    pub fn from_bigint(n: &BigInt) -> Self {
        if n.is_zero() {
            return Self::ZERO;
        }
        let bits = n.bits() as i64;
        let shift = (bits - 64).max(0);
        let top = (n.abs() >> shift as usize).to_u64().expect("64-bit window") as f64;
        let s = Self::from_f64(top);
        let m = if n.sign() == Sign::Minus { -s.mantissa } else { s.mantissa };
        Self { mantissa: m, exponent: s.exponent + shift }
    }

    /// `num / den`, correctly rounded to about one ulp.
    pub fn ratio(num: &BigInt, den: &BigInt) -> Self {
        if num.is_zero() {
            return Self::ZERO;
        }
        let shift = num.bits() as i64 - den.bits() as i64;
        let k = 66 - shift;
        let n = num.abs();
        let (n, d) = if k >= 0 { (n << k as usize, den.clone()) } else { (n, den << (-k) as usize) };
        let (q, r) = n.div_rem(&d);
        let mut q = q.to_u128().unwrap_or(u128::MAX);
        if !r.is_zero() {
            q |= 1;
        }
        let s = Self::from_f64(q as f64);
        let m = if (num.sign() == Sign::Minus) ^ (den.sign() == Sign::Minus) { -s.mantissa } else { s.mantissa };
        Self { mantissa: m, exponent: s.exponent - k }
    }

    pub fn mul(self, o: Self) -> Self {
        let s = Self::from_f64(self.mantissa * o.mantissa);
        Self { mantissa: s.mantissa, exponent: s.exponent + self.exponent + o.exponent }
    }

    pub fn div(self, o: Self) -> Self {
        let s = Self::from_f64(self.mantissa / o.mantissa);
        Self { mantissa: s.mantissa, exponent: s.exponent + self.exponent - o.exponent }
    }

    pub fn add(self, o: Self) -> Self {
        if self.mantissa == 0.0 {
            return o;
        }
        if o.mantissa == 0.0 {
            return self;
        }
        let (big, small) = if self.exponent >= o.exponent { (self, o) } else { (o, self) };
        let gap = (big.exponent - small.exponent).min(2000) as i32;
        let m = big.mantissa + ldexp(small.mantissa, -gap);
        let s = Self::from_f64(m);
        Self { mantissa: s.mantissa, exponent: s.exponent + big.exponent }
    }

    pub fn is_zero(self) -> bool {
        self.mantissa == 0.0
    }

    /// `ln |self|`.
    pub fn ln_abs(self) -> f64 {
        self.mantissa.abs().ln() + self.exponent as f64 * std::f64::consts::LN_2
    }

    /// `self · e^{log_factor}` as an `f64`, keeping the binary exponent
    /// exact until the final rounding.
    pub fn times_exp(self, log_factor: f64) -> f64 {
        if self.mantissa == 0.0 {
            return 0.0;
        }
        let in_bits = log_factor / std::f64::consts::LN_2;
        let whole = in_bits.floor();
        let frac = log_factor - whole * std::f64::consts::LN_2;
        let total = self.exponent + whole as i64;
        ldexp(self.mantissa * frac.exp(), total.clamp(-5000, 5000) as i32)
    }

    pub fn to_f64(self) -> f64 {
        ldexp(self.mantissa, self.exponent.clamp(-5000, 5000) as i32)
    }
}

fn frexp(v: f64) -> (f64, i32) {
    let (m, e) = libm::frexp(v);
    (m, e)
}

fn ldexp(v: f64, e: i32) -> f64 {
    libm::ldexp(v, e)
}

/// An `f64` split as `odd_integer · 2^exponent` (zero is `0 · 2^0`).
fn dyadic(x: f64) -> (BigInt, i64) {
    if x == 0.0 {
        return (BigInt::zero(), 0);
    }
    let bits = x.to_bits();
    let neg = bits >> 63 == 1;
    let raw_exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mut mant, mut e) = if raw_exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), raw_exp - 1075) };
    let tz = mant.trailing_zeros();
    mant >>= tz;
    e += tz as i64;
    let m = BigInt::from(mant);
    (if neg { -m } else { m }, e)
}

/// A polynomial over `Q(√D)` with a common denominator, ready for exact
/// evaluation at binary floating-point points.
#[derive(Clone, Debug)]
pub struct ExactPoly {
    terms: Vec<(Vec<u32>, BigInt, BigInt)>,
    denominator: BigInt,
    radicand: u32,
}

impl ExactPoly {
    pub fn compile(p: &Polynomial<QuadSurd>) -> Self {
        let mut den = BigInt::one();
        let mut radicand = 0;
        for (_, c) in p.terms() {
            den = den.lcm(c.rational_part().denom());
            den = den.lcm(c.irrational_part().denom());
            if c.radicand() != 0 {
                radicand = c.radicand();
            }
        }
        let terms = p
            .terms()
            .map(|(m, c)| {
                let a = c.rational_part().numer() * (&den / c.rational_part().denom());
                let b = c.irrational_part().numer() * (&den / c.irrational_part().denom());
                (m.entries().to_vec(), a, b)
            })
            .collect();
        Self { terms, denominator: den, radicand }
    }

    fn eval_with(&self, point: &PreparedPoint) -> Scaled {
        if self.terms.is_empty() {
            return Scaled::ZERO;
        }
        let shifts: Vec<i64> =
            self.terms.iter().map(|(e, _, _)| e.iter().zip(&point.exps).map(|(&k, &x)| k as i64 * x).sum()).collect();
        let base = *shifts.iter().min().expect("nonempty");
        let mut sa = BigInt::zero();
        let mut sb = BigInt::zero();
        for ((e, a, b), s) in self.terms.iter().zip(&shifts) {
            let mut mono = BigInt::one();
            let mut zero = false;
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    let pw = point.power(i, k as usize);
                    if pw.is_zero() {
                        zero = true;
                        break;
                    }
                    mono *= pw;
                }
            }
            if zero {
                continue;
            }
            mono <<= (s - base) as usize;
            if !a.is_zero() {
                sa += a * &mono;
            }
            if !b.is_zero() {
                sb += b * &mono;
            }
        }
        let combined = if sb.is_zero() || self.radicand == 0 {
            Scaled::ratio(&sa, &self.denominator)
        } else {
            let d = BigInt::from(self.radicand);
            let rat = Scaled::ratio(&sa, &self.denominator);
            let irr = Scaled::ratio(&sb, &self.denominator).mul(Scaled::from_f64((self.radicand as f64).sqrt()));
            if sa.is_zero() || (sa.sign() == sb.sign()) {
                rat.add(irr)
            } else {
                // a + b√D = (a² − D b²) / (a − b√D)
                let norm = &sa * &sa - d * &sb * &sb;
                let den2 = &self.denominator * &self.denominator;
                Scaled::ratio(&norm, &den2).div(rat.add(Scaled { mantissa: -irr.mantissa, exponent: irr.exponent }))
            }
        };
        Scaled { mantissa: combined.mantissa, exponent: combined.exponent + base }
    }
}

/// Powers of the integer parts of a point's coordinates, shared across all
/// basis polynomials evaluated there.
pub struct PreparedPoint {
    mants: Vec<BigInt>,
    exps: Vec<i64>,
    powers: Vec<Vec<BigInt>>,
}

impl PreparedPoint {
    pub fn new(x: &[f64], max_power: usize) -> Self {
        let (mants, exps): (Vec<BigInt>, Vec<i64>) = x.iter().map(|&v| dyadic(v)).unzip();
        let powers = mants
            .iter()
            .map(|m| {
                let mut pw = Vec::with_capacity(max_power + 1);
                pw.push(BigInt::one());
                for k in 1..=max_power {
                    let next = &pw[k - 1] * m;
                    pw.push(next);
                }
                pw
            })
            .collect();
        Self { mants, exps, powers }
    }

    fn power(&self, i: usize, k: usize) -> BigInt {
        match self.powers[i].get(k) {
            Some(p) => p.clone(),
            None => num_traits::pow(self.mants[i].clone(), k),
        }
    }
}

/// A compiled basis polynomial.
#[derive(Clone, Debug)]
pub enum CompiledPoly {
    Exact(ExactPoly),
    Float(Vec<(Vec<u32>, f64)>),
}

impl CompiledPoly {
    pub fn exact(p: &Polynomial<QuadSurd>) -> Self {
        CompiledPoly::Exact(ExactPoly::compile(p))
    }

    pub fn float(p: &Polynomial<f64>) -> Self {
        CompiledPoly::Float(p.terms().map(|(m, c)| (m.entries().to_vec(), *c)).collect())
    }

    pub fn eval(&self, point: &PreparedPoint, x: &[f64]) -> Scaled {
        match self {
            CompiledPoly::Exact(p) => p.eval_with(point),
            CompiledPoly::Float(ts) => {
                let v: f64 = ts
                    .iter()
                    .map(|(e, c)| c * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>())
                    .sum();
                Scaled::from_f64(v)
            }
        }
    }
}
