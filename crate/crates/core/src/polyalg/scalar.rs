//! Coefficient fields for polynomial arithmetic.
//!
//! Two fields are provided. [`QuadSurd`] is exact arithmetic in a real
//! quadratic field `Q(√D)`, which covers every catalogued root system whose
//! mirror directions have coordinates in such a field (`Z2^d`, `B2`, `A2`,
//! `I2(m)` for `m ∈ {2,3,4,6,8,12}`). Plain `f64` is the fallback for
//! everything else.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Field operations needed by the polynomial and Dunkl machinery.
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// `true` when arithmetic is exact and `is_zero` is a true equality test.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;

    fn from_integer(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    /// Magnitude used for relative pruning in floating mode.
    fn magnitude(&self) -> f64 {
        self.to_f64().abs()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

/// `rat + irr·√radicand` with rational parts.
///
/// `radicand` is `0` whenever `irr` is zero, so pure rationals compare equal
/// regardless of the field they were produced in. Mixing two different
/// nonzero radicands is an invariant violation and panics.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QuadSurd {
    rat: BigRational,
    irr: BigRational,
    radicand: u32,
}

impl QuadSurd {
    pub fn rational(r: BigRational) -> Self {
        Self { rat: r, irr: BigRational::zero(), radicand: 0 }
    }

    /// `rat + irr·√radicand`. A radicand that is a perfect square is folded
    /// into the rational part.
    pub fn new(rat: BigRational, irr: BigRational, radicand: u32) -> Self {
        if irr.is_zero() || radicand == 0 {
            return Self::rational(rat);
        }
        let root = (radicand as f64).sqrt().round() as u32;
        if root * root == radicand {
            return Self::rational(rat + irr * BigRational::from_integer(BigInt::from(root)));
        }
        Self { rat, irr, radicand }
    }

    /// `√radicand`.
    pub fn sqrt_of(radicand: u32) -> Self {
        Self::new(BigRational::zero(), BigRational::one(), radicand)
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.rat
    }

    pub fn irrational_part(&self) -> &BigRational {
        &self.irr
    }

    pub fn radicand(&self) -> u32 {
        self.radicand
    }

    pub fn is_rational(&self) -> bool {
        self.irr.is_zero()
    }

    fn merged_radicand(a: u32, b: u32) -> u32 {
        match (a, b) {
            (0, r) | (r, 0) => r,
            (r, s) if r == s => r,
            (r, s) => panic!("mixed quadratic fields Q(√{r}) and Q(√{s})"),
        }
    }

    /// Algebraic conjugate `rat − irr·√D`.
    pub fn conjugate(&self) -> Self {
        Self::new(self.rat.clone(), -self.irr.clone(), self.radicand)
    }

    /// Field norm `rat² − D·irr²` (rational).
    pub fn norm(&self) -> BigRational {
        let d = BigRational::from_integer(BigInt::from(self.radicand));
        &self.rat * &self.rat - d * &self.irr * &self.irr
    }

    /// Canonical text form: `p/q` or `p/q+r/s*sqrt(D)`.
    pub fn to_text(&self) -> String {
        if self.is_rational() {
            self.rat.to_string()
        } else {
            format!("{}{:+}*sqrt({})", self.rat, SignedRatio(&self.irr), self.radicand)
        }
    }

    /// Parses the format written by [`QuadSurd::to_text`].
    pub fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        if let Some(pos) = text.find("*sqrt(") {
            let head = &text[..pos];
            let radicand: u32 = text[pos + 6..].strip_suffix(')')?.parse().ok()?;
            // split head into rational part and signed irrational coefficient
            let split = head
                .char_indices()
                .skip(1)
                .filter(|&(_, c)| c == '+' || c == '-')
                .map(|(i, _)| i)
                .find(|&i| !head[..i].ends_with('/'))?;
            let rat = parse_ratio(&head[..split])?;
            let irr = parse_ratio(head[split..].trim_start_matches('+'))?;
            Some(Self::new(rat, irr, radicand))
        } else {
            parse_ratio(text).map(Self::rational)
        }
    }
}

struct SignedRatio<'a>(&'a BigRational);

impl fmt::Display for SignedRatio<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_negative() {
            write!(f, "{}", self.0)
        } else if f.sign_plus() {
            write!(f, "+{}", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

fn parse_ratio(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let d: BigInt = d.parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(n.parse().ok()?, d))
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}

/// Correctly rounded `f64` of a big rational (up to the last bit of the
/// quotient), robust to numerators and denominators beyond `f64` range.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let neg = r.is_negative();
    let num = r.numer().abs();
    let den = r.denom().clone();
    let shift = num.bits() as i64 - den.bits() as i64;
    // scale so the integer quotient carries 64+ significant bits
    let k = 66 - shift;
    let (n, d) = if k >= 0 { (num << (k as usize), den) } else { (num, den << ((-k) as usize)) };
    let (q, rem) = n.div_rem(&d);
    let mut mant = q.to_u128().unwrap_or(u128::MAX);
    if !rem.is_zero() {
        mant |= 1; // sticky bit for correct rounding
    }
    let out = ldexp(mant as f64, -k);
    if neg {
        -out
    } else {
        out
    }
}

fn ldexp(v: f64, e: i64) -> f64 {
    let e = e.clamp(-2200, 2200) as i32;
    // split to avoid intermediate overflow/underflow of 2^e
    let half = e / 2;
    v * 2f64.powi(half) * 2f64.powi(e - half)
}

/// Exact rational value of a finite `f64`.
pub fn f64_to_ratio(x: f64) -> BigRational {
    assert!(x.is_finite(), "non-finite value has no rational form");
    if x == 0.0 {
        return BigRational::zero();
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
    let m = BigInt::from(mant) * sign;
    if e >= 0 {
        BigRational::from_integer(m << (e as usize))
    } else {
        BigRational::new(m, BigInt::one() << ((-e) as usize))
    }
}

/// Simplest rational within `rel_tol·|x|` of `x` with denominator at most
/// `max_den`, found on the Stern–Brocot tree; `None` if there is none.
pub fn simplest_ratio(x: f64, max_den: i64, rel_tol: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let tol = rel_tol * x.abs().max(1e-300);
    let (mut h0, mut h1, mut k0, mut k1) = (0i128, 1i128, 1i128, 0i128);
    let mut v = x;
    for _ in 0..64 {
        let a = v.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i128;
        let (h2, k2) = (a * h1 + h0, a * k1 + k0);
        if k2 > max_den as i128 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if ((h1 as f64) / (k1 as f64) - x).abs() <= tol {
            return Some(BigRational::new(BigInt::from(h1), BigInt::from(k1)));
        }
        let frac = v - v.floor();
        if frac == 0.0 {
            break;
        }
        v = 1.0 / frac;
    }
    None
}

impl fmt::Debug for QuadSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl fmt::Display for QuadSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl Add for QuadSurd {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let r = Self::merged_radicand(self.radicand, o.radicand);
        Self::new(self.rat + o.rat, self.irr + o.irr, r)
    }
}

impl Sub for QuadSurd {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let r = Self::merged_radicand(self.radicand, o.radicand);
        Self::new(self.rat - o.rat, self.irr - o.irr, r)
    }
}

impl Mul for QuadSurd {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        if self.is_rational() && o.is_rational() {
            return Self::rational(self.rat * o.rat);
        }
        let r = Self::merged_radicand(self.radicand, o.radicand);
        let d = BigRational::from_integer(BigInt::from(r));
        let rat = &self.rat * &o.rat + d * &self.irr * &o.irr;
        let irr = &self.rat * &o.irr + &self.irr * &o.rat;
        Self::new(rat, irr, r)
    }
}

impl Div for QuadSurd {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        assert!(!o.is_zero(), "division by zero in Q(√D)");
        if o.is_rational() {
            return Self::new(self.rat / &o.rat, self.irr / &o.rat, self.radicand);
        }
        let n = o.norm();
        let num = self * o.conjugate();
        Self::new(num.rat / &n, num.irr / &n, num.radicand)
    }
}

impl Neg for QuadSurd {
    type Output = Self;
    fn neg(self) -> Self {
        Self { rat: -self.rat, irr: -self.irr, radicand: self.radicand }
    }
}

impl Scalar for QuadSurd {
    const EXACT: bool = true;

    fn zero() -> Self {
        Self::rational(BigRational::zero())
    }
    fn one() -> Self {
        Self::rational(BigRational::one())
    }
    fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.irr.is_zero()
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Self::rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    fn to_f64(&self) -> f64 {
        if self.is_rational() {
            return ratio_to_f64(&self.rat);
        }
        let a = ratio_to_f64(&self.rat);
        let b = ratio_to_f64(&self.irr) * (self.radicand as f64).sqrt();
        if a.signum() == b.signum() || a == 0.0 || b == 0.0 {
            a + b
        } else {
            // a + b√D = norm / (a − b√D) avoids the cancellation
            let n = ratio_to_f64(&self.norm());
            n / (a - b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn surd_field_arithmetic() {
        let s3 = QuadSurd::sqrt_of(3);
        let three = s3.clone() * s3.clone();
        assert_eq!(three, QuadSurd::from_integer(3));
        let x = QuadSurd::new(q(1, 2), q(3, 4), 3);
        let y = x.clone() / x.clone();
        assert_eq!(y, QuadSurd::one());
        let z = (x.clone() + QuadSurd::one()) * (x.clone() - QuadSurd::one());
        assert_eq!(z, x.clone() * x - QuadSurd::one());
    }

    #[test]
    fn perfect_square_radicand_folds() {
        let four = QuadSurd::sqrt_of(4);
        assert!(four.is_rational());
        assert_eq!(four, QuadSurd::from_integer(2));
    }

    #[test]
    fn conversion_avoids_cancellation() {
        // 2 - √3 ≈ 0.2679491924311228
        let v = QuadSurd::new(q(2, 1), q(-1, 1), 3);
        assert!((v.to_f64() - 0.267_949_192_431_122_7).abs() < 1e-16);
        // (1 - √2)^20 is tiny and dominated by cancellation in naive f64
        let mut p = QuadSurd::one();
        let b = QuadSurd::new(q(1, 1), q(-1, 1), 2);
        for _ in 0..20 {
            p = p * b.clone();
        }
        let expect = (2f64.sqrt() - 1.0).powi(20);
        assert!((p.to_f64() / expect - 1.0).abs() < 1e-12);
    }

    #[test]
    fn text_round_trip() {
        for v in [
            QuadSurd::from_ratio(-7, 3),
            QuadSurd::new(q(1, 2), q(-5, 7), 3),
            QuadSurd::new(q(-1, 2), q(5, 7), 2),
            QuadSurd::new(q(0, 1), q(1, 1), 5),
        ] {
            assert_eq!(QuadSurd::parse(&v.to_text()), Some(v.clone()), "{}", v);
        }
    }

    #[test]
    fn ratio_conversion_is_accurate() {
        let r = q(1, 3);
        assert_eq!(ratio_to_f64(&r), 1.0 / 3.0);
        let big = BigRational::new(BigInt::from(10).pow(400), BigInt::from(10).pow(399) * 3);
        assert!((ratio_to_f64(&big) - 10.0 / 3.0).abs() < 1e-15);
        assert_eq!(ratio_to_f64(&f64_to_ratio(0.1)), 0.1);
        assert_eq!(ratio_to_f64(&f64_to_ratio(-3.5e-300)), -3.5e-300);
    }

    #[test]
    fn simplest_rational_recovery() {
        assert_eq!(simplest_ratio(0.5, 1000, 1e-14), Some(q(1, 2)));
        assert_eq!(simplest_ratio(1.0 / 3.0, 1000, 1e-14), Some(q(1, 3)));
        assert_eq!(simplest_ratio(2.0, 1000, 1e-14), Some(q(2, 1)));
        assert_eq!(simplest_ratio(std::f64::consts::PI, 1000, 1e-14), None);
    }
}
