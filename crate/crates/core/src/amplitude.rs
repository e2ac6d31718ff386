//! Exact amplitudes in the ring of rationals extended by √2, √3 and √6,
//! plus the `Amplitude` abstraction shared with the `f64` backend.
//!
//! Every coefficient that appears in the Wigner's-friend protocol
//! (√(1/3), √(2/3), √(1/2), √(1/6), √(1/12), ...) is an element of
//! ℚ[√2, √3] with basis {1, √2, √3, √6}, so states built from them can be
//! compared for exact equality.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AmplitudeError {
    #[error("sqrt({0}) is not representable: squarefree part {1} is not one of 1, 2, 3, 6")]
    UnrepresentableRadical(BigRational, BigInt),
    #[error("sqrt of a negative rational {0}")]
    NegativeRadicand(BigRational),
    #[error("square root of irrational value {0} is not supported")]
    IrrationalRadicand(Box<ExactReal>),
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot parse exact value {0:?}")]
    Parse(String),
}

/// `c1 + c2·√2 + c3·√3 + c6·√6` with rational coefficients.
///
/// `BigRational` keeps every coefficient reduced with a positive
/// denominator, so derived `PartialEq` is exact equality.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct ExactReal {
    c1: BigRational,
    c2: BigRational,
    c3: BigRational,
    c6: BigRational,
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl ExactReal {
    pub fn new(c1: BigRational, c2: BigRational, c3: BigRational, c6: BigRational) -> Self {
        ExactReal { c1, c2, c3, c6 }
    }

    pub fn zero() -> Self {
        ExactReal::default()
    }

    pub fn one() -> Self {
        ExactReal::from_rational(BigRational::one())
    }

    pub fn from_rational(r: BigRational) -> Self {
        ExactReal {
            c1: r,
            ..ExactReal::default()
        }
    }

    pub fn from_ratio(n: i64, d: i64) -> Self {
        ExactReal::from_rational(rat(n, d))
    }

    pub fn from_integer(n: i64) -> Self {
        ExactReal::from_ratio(n, 1)
    }

    /// Square root of a non-negative rational whose squarefree part is 1, 2, 3 or 6.
    pub fn from_sqrt(r: &BigRational) -> Result<Self, AmplitudeError> {
        if r.is_negative() {
            return Err(AmplitudeError::NegativeRadicand(r.clone()));
        }
        if r.is_zero() {
            return Ok(ExactReal::zero());
        }
        // sqrt(p/q) = sqrt(p*q) / q, and p*q = f * m^2 with f squarefree.
        let q = r.denom().clone();
        let n = r.numer() * &q;
        for f in [1i64, 2, 3, 6] {
            let f_big = BigInt::from(f);
            if (&n % &f_big).is_zero() {
                let rest = &n / &f_big;
                let m = rest.sqrt();
                if &m * &m == rest {
                    let coeff = BigRational::new(m, q);
                    let mut out = ExactReal::zero();
                    *out.coeff_mut(f as u8) = coeff;
                    return Ok(out);
                }
            }
        }
        Err(AmplitudeError::UnrepresentableRadical(r.clone(), squarefree_part(&n)))
    }

    /// `sqrt(n/d)` for small literals.
    pub fn sqrt_ratio(n: i64, d: i64) -> Result<Self, AmplitudeError> {
        ExactReal::from_sqrt(&rat(n, d))
    }

    /// Coefficient on the basis element √k for k in {1, 2, 3, 6}.
    pub fn coeff(&self, k: u8) -> &BigRational {
        match k {
            1 => &self.c1,
            2 => &self.c2,
            3 => &self.c3,
            6 => &self.c6,
            _ => panic!("basis element sqrt({k}) is outside the ring"),
        }
    }

    fn coeff_mut(&mut self, k: u8) -> &mut BigRational {
        match k {
            1 => &mut self.c1,
            2 => &mut self.c2,
            3 => &mut self.c3,
            6 => &mut self.c6,
            _ => panic!("basis element sqrt({k}) is outside the ring"),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c1.is_zero() && self.c2.is_zero() && self.c3.is_zero() && self.c6.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.c2.is_zero() && self.c3.is_zero() && self.c6.is_zero()
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        self.is_rational().then_some(&self.c1)
    }

    pub fn to_f64(&self) -> f64 {
        let f = |r: &BigRational| r.to_f64().unwrap_or(f64::NAN);
        f(&self.c1) + f(&self.c2) * std::f64::consts::SQRT_2 + f(&self.c3) * 3f64.sqrt() + f(&self.c6) * 6f64.sqrt()
    }

    /// Square of the value; always lands back in the ring.
    pub fn square(&self) -> ExactReal {
        self * self
    }

    /// Multiplicative inverse, via the conjugates over √3 and then √2.
    pub fn recip(&self) -> Result<ExactReal, AmplitudeError> {
        if self.is_zero() {
            return Err(AmplitudeError::DivisionByZero);
        }
        // x = (a + b√2) + (c + d√2)√3; x · conj3(x) = (a + b√2)^2 - 3(c + d√2)^2 ∈ ℚ[√2]
        let conj3 = ExactReal::new(self.c1.clone(), self.c2.clone(), -self.c3.clone(), -self.c6.clone());
        let y = self * &conj3;
        debug_assert!(y.c3.is_zero() && y.c6.is_zero());
        let conj2 = ExactReal::new(y.c1.clone(), -y.c2.clone(), BigRational::zero(), BigRational::zero());
        let norm = &y * &conj2;
        let n = norm
            .as_rational()
            .cloned()
            .expect("field norm of an element of Q[sqrt2, sqrt3] is rational");
        let inv = ExactReal::from_rational(n.recip());
        Ok(&(&conj3 * &conj2) * &inv)
    }

    pub fn checked_div(&self, other: &ExactReal) -> Result<ExactReal, AmplitudeError> {
        Ok(self * &other.recip()?)
    }

    /// Square root of a rational value, e.g. a Born probability.
    pub fn sqrt(&self) -> Result<ExactReal, AmplitudeError> {
        match self.as_rational() {
            Some(r) => ExactReal::from_sqrt(r),
            None => Err(AmplitudeError::IrrationalRadicand(Box::new(self.clone()))),
        }
    }
}

fn squarefree_part(n: &BigInt) -> BigInt {
    let mut n = n.abs();
    let mut out = BigInt::one();
    let mut p = BigInt::from(2);
    while &p * &p <= n {
        let mut count = 0u32;
        while (&n % &p).is_zero() {
            n /= &p;
            count += 1;
        }
        if count % 2 == 1 {
            out *= &p;
        }
        p += 1;
    }
    out * n
}

impl From<i64> for ExactReal {
    fn from(n: i64) -> Self {
        ExactReal::from_integer(n)
    }
}

impl From<BigRational> for ExactReal {
    fn from(r: BigRational) -> Self {
        ExactReal::from_rational(r)
    }
}

impl Add for &ExactReal {
    type Output = ExactReal;
    fn add(self, o: &ExactReal) -> ExactReal {
        ExactReal::new(&self.c1 + &o.c1, &self.c2 + &o.c2, &self.c3 + &o.c3, &self.c6 + &o.c6)
    }
}

impl Sub for &ExactReal {
    type Output = ExactReal;
    fn sub(self, o: &ExactReal) -> ExactReal {
        ExactReal::new(&self.c1 - &o.c1, &self.c2 - &o.c2, &self.c3 - &o.c3, &self.c6 - &o.c6)
    }
}

impl Mul for &ExactReal {
    type Output = ExactReal;
    fn mul(self, o: &ExactReal) -> ExactReal {
        let two = BigRational::from_integer(BigInt::from(2));
        let three = BigRational::from_integer(BigInt::from(3));
        let six = BigRational::from_integer(BigInt::from(6));
        // √2√3 = √6, √2√6 = 2√3, √3√6 = 3√2
        let c1 = &self.c1 * &o.c1 + &two * (&self.c2 * &o.c2) + &three * (&self.c3 * &o.c3) + &six * (&self.c6 * &o.c6);
        let c2 = &self.c1 * &o.c2 + &self.c2 * &o.c1 + &three * (&self.c3 * &o.c6 + &self.c6 * &o.c3);
        let c3 = &self.c1 * &o.c3 + &self.c3 * &o.c1 + &two * (&self.c2 * &o.c6 + &self.c6 * &o.c2);
        let c6 = &self.c1 * &o.c6 + &self.c6 * &o.c1 + &self.c2 * &o.c3 + &self.c3 * &o.c2;
        ExactReal::new(c1, c2, c3, c6)
    }
}

impl Neg for &ExactReal {
    type Output = ExactReal;
    fn neg(self) -> ExactReal {
        ExactReal::new(-self.c1.clone(), -self.c2.clone(), -self.c3.clone(), -self.c6.clone())
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for ExactReal {
            type Output = ExactReal;
            fn $m(self, o: ExactReal) -> ExactReal {
                std::ops::$tr::$m(&self, &o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for ExactReal {
    type Output = ExactReal;
    fn neg(self) -> ExactReal {
        -&self
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Renders non-zero terms as `c1 + c2*sqrt2 + c3*sqrt3 + c6*sqrt6`, with
/// rationals written `p/q` (or `p` when the denominator is 1). Zero is `0`.
impl fmt::Display for ExactReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (k, c) in [(1u8, &self.c1), (2, &self.c2), (3, &self.c3), (6, &self.c6)] {
            if c.is_zero() {
                continue;
            }
            if k == 1 {
                parts.push(fmt_rational(c));
            } else {
                parts.push(format!("{}*sqrt{}", fmt_rational(c), k));
            }
        }
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}

impl fmt::Debug for ExactReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExactReal({self})")
    }
}

fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(n, d))
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}

/// Parses the `Display` form; the full four-term form with zero
/// coefficients is accepted too.
impl FromStr for ExactReal {
    type Err = AmplitudeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || AmplitudeError::Parse(s.to_string());
        let mut out = ExactReal::zero();
        for term in s.split(" + ") {
            let term = term.trim();
            if term.is_empty() {
                return Err(err());
            }
            let (c, k) = match term.split_once("*sqrt") {
                Some((c, k)) => (c, k.parse::<u8>().map_err(|_| err())?),
                None => (term, 1),
            };
            if ![1, 2, 3, 6].contains(&k) {
                return Err(err());
            }
            let c = parse_rational(c).ok_or_else(err)?;
            let slot = out.coeff_mut(k);
            *slot = &*slot + &c;
        }
        Ok(out)
    }
}

impl serde::Serialize for ExactReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for ExactReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Scalar type of a state vector: exact ring elements or plain floats.
pub trait Amplitude: Clone + PartialEq + fmt::Debug + fmt::Display + Send + Sync + 'static {
    /// True when equality is exact rather than within a tolerance.
    const EXACT: bool;
    fn zero() -> Self;
    fn one() -> Self;
    fn from_exact(x: &ExactReal) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Exactly zero for the exact backend, below a fixed tolerance for floats.
    fn is_negligible(&self) -> bool;
    fn to_f64(&self) -> f64;
    /// `1 / sqrt(self)`, used to renormalize after a projection.
    fn inv_sqrt(&self) -> Result<Self, AmplitudeError>;
    /// Exact string, or the float rendered with full precision.
    fn exact_string(&self) -> String {
        self.to_string()
    }
    fn is_one(&self) -> bool {
        self.sub(&Self::one()).is_negligible()
    }
}

impl Amplitude for ExactReal {
    const EXACT: bool = true;
    fn zero() -> Self {
        ExactReal::zero()
    }
    fn one() -> Self {
        ExactReal::one()
    }
    fn from_exact(x: &ExactReal) -> Self {
        x.clone()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }
    fn to_f64(&self) -> f64 {
        ExactReal::to_f64(self)
    }
    fn inv_sqrt(&self) -> Result<Self, AmplitudeError> {
        self.sqrt()?.recip()
    }
}

/// Float amplitudes below this magnitude are treated as zero.
pub const FLOAT_EPSILON: f64 = 1e-13;

impl Amplitude for f64 {
    const EXACT: bool = false;
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_exact(x: &ExactReal) -> Self {
        x.to_f64()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_negligible(&self) -> bool {
        self.abs() < FLOAT_EPSILON
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn inv_sqrt(&self) -> Result<Self, AmplitudeError> {
        if *self <= 0.0 {
            return Err(AmplitudeError::DivisionByZero);
        }
        Ok(1.0 / self.sqrt())
    }
    fn exact_string(&self) -> String {
        format!("{self:e}")
    }
}
