//! Capped relative precision arithmetic over Q_p.
//!
//! A nonzero scalar is `unit * p^valuation`, with the unit known modulo
//! `p^precision` and `precision <= κ`. The only exact zero is the canonical
//! [`PadicScalar::zero`]; a sum that cancels below the known digits raises
//! [`Error::PrecisionExhausted`] unless every operand carried all κ digits.
//!
//! Arithmetic lives on [`PadicContext`], the same way a ring object owns the
//! operations on its elements. Scalars are plain immutable values.

mod rng;

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use rng::DigitStream;

pub const DEFAULT_PRECISION: u32 = 32;

/// Valuation in `Z ∪ {+∞}`. `Finite` sorts below `Infinite`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Valuation::Infinite)
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => write!(f, "+inf"),
        }
    }
}

/// An absolute value `p^{-valuation}`; zero when the valuation is infinite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AbsValue {
    pub p: u64,
    pub valuation: Valuation,
}

impl AbsValue {
    pub fn one(p: u64) -> Self {
        AbsValue { p, valuation: Valuation::Finite(0) }
    }

    pub fn zero(p: u64) -> Self {
        AbsValue { p, valuation: Valuation::Infinite }
    }

    pub fn is_zero(&self) -> bool {
        self.valuation.is_infinite()
    }

    /// Exponent `e` with `|x| = p^e`, or `None` for zero.
    pub fn exponent(&self) -> Option<i64> {
        self.valuation.finite().map(|v| -v)
    }

    pub fn to_f64(&self) -> f64 {
        match self.valuation {
            Valuation::Infinite => 0.0,
            Valuation::Finite(v) => (self.p as f64).powi(-(v as i32)),
        }
    }

    pub fn to_rational(&self) -> BigRational {
        match self.valuation {
            Valuation::Infinite => BigRational::zero(),
            Valuation::Finite(v) => {
                let p = BigInt::from(self.p);
                if v <= 0 {
                    BigRational::from_integer(Pow::pow(&p, (-v) as u64))
                } else {
                    BigRational::new(BigInt::one(), Pow::pow(&p, v as u64))
                }
            }
        }
    }

    pub fn mul(self, other: AbsValue) -> AbsValue {
        let valuation = match (self.valuation, other.valuation) {
            (Valuation::Finite(a), Valuation::Finite(b)) => Valuation::Finite(a + b),
            _ => Valuation::Infinite,
        };
        AbsValue { p: self.p, valuation }
    }
}

impl PartialOrd for AbsValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        // larger valuation means smaller absolute value
        Some(other.valuation.cmp(&self.valuation))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Repr {
    Zero,
    Nonzero {
        valuation: i64,
        unit: BigUint,
        precision: u32,
    },
}

/// An element of Q_p at capped relative precision.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PadicScalar(Repr);

impl PadicScalar {
    pub fn zero() -> Self {
        PadicScalar(Repr::Zero)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Zero)
    }

    pub fn valuation(&self) -> Valuation {
        match &self.0 {
            Repr::Zero => Valuation::Infinite,
            Repr::Nonzero { valuation, .. } => Valuation::Finite(*valuation),
        }
    }

    /// Unit part, reduced modulo `p^precision`.
    pub fn unit(&self) -> Option<&BigUint> {
        match &self.0 {
            Repr::Zero => None,
            Repr::Nonzero { unit, .. } => Some(unit),
        }
    }

    /// Number of significant digits carried.
    pub fn precision(&self) -> Option<u32> {
        match &self.0 {
            Repr::Zero => None,
            Repr::Nonzero { precision, .. } => Some(*precision),
        }
    }

    /// `valuation + precision`, the power of p modulo which the value is known.
    pub fn absolute_precision(&self) -> Option<i64> {
        match &self.0 {
            Repr::Zero => None,
            Repr::Nonzero { valuation, precision, .. } => Some(valuation + *precision as i64),
        }
    }

    pub fn is_integral(&self) -> bool {
        self.valuation() >= Valuation::Finite(0)
    }
}

/// Text record of a scalar: `{"v": int, "digits": [...]}`, or `{"v": null}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalarRecord {
    pub v: Option<i64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub digits: Vec<u64>,
}

/// The prime, the working precision κ and the run seed.
#[derive(Clone, Debug)]
pub struct PadicContext {
    p: u64,
    precision: u32,
    seed: u64,
    powers: Vec<BigUint>,
}

impl PadicContext {
    pub fn new(p: u64, precision: u32, seed: u64) -> Result<Self> {
        if p > (1 << 31) - 1 || !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if precision < 2 {
            return Err(Error::InvalidPrecision(precision));
        }
        let base = BigUint::from(p);
        let mut powers = Vec::with_capacity(precision as usize + 1);
        let mut acc = BigUint::one();
        for _ in 0..=precision {
            powers.push(acc.clone());
            acc *= &base;
        }
        Ok(PadicContext { p, precision, seed, powers })
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Same prime and precision, different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        PadicContext { seed, ..self.clone() }
    }

    /// `p^k` for `k <= κ` from the table, computed otherwise.
    pub fn pow(&self, k: u32) -> BigUint {
        match self.powers.get(k as usize) {
            Some(v) => v.clone(),
            None => Pow::pow(&BigUint::from(self.p), k),
        }
    }

    fn modulus(&self, k: u32) -> &BigUint {
        &self.powers[k as usize]
    }

    /// Default residual threshold κ/2 used for on-variety and distinctness checks.
    pub fn check_level(&self) -> i64 {
        (self.precision / 2) as i64
    }

    pub fn zero(&self) -> PadicScalar {
        PadicScalar::zero()
    }

    pub fn one(&self) -> PadicScalar {
        self.nonzero(0, BigUint::one(), self.precision)
    }

    /// `p^k` as a scalar.
    pub fn uniformizer_power(&self, k: i64) -> PadicScalar {
        self.nonzero(k, BigUint::one(), self.precision)
    }

    fn nonzero(&self, valuation: i64, unit: BigUint, precision: u32) -> PadicScalar {
        debug_assert!(precision >= 1 && precision <= self.precision);
        debug_assert!(!(&unit % self.p).is_zero());
        PadicScalar(Repr::Nonzero { valuation, unit, precision })
    }

    pub fn from_i64(&self, value: i64) -> PadicScalar {
        self.from_bigint(&BigInt::from(value))
    }

    pub fn from_bigint(&self, value: &BigInt) -> PadicScalar {
        if value.is_zero() {
            return PadicScalar::zero();
        }
        let (sign, mut mag) = (value.sign(), value.magnitude().clone());
        let p = BigUint::from(self.p);
        let mut v = 0i64;
        loop {
            let (q, r) = mag.div_rem(&p);
            if !r.is_zero() {
                break;
            }
            mag = q;
            v += 1;
        }
        let modulus = self.modulus(self.precision);
        let mut unit = mag % modulus;
        if sign == Sign::Minus {
            unit = modulus - unit;
        }
        self.nonzero(v, unit, self.precision)
    }

    pub fn from_rational(&self, value: &BigRational) -> Result<PadicScalar> {
        let num = self.from_bigint(value.numer());
        let den = self.from_bigint(value.denom());
        self.div(&num, &den)
    }

    /// Scalar whose base-p expansion is `d_0 + d_1 p + ...`. All-zero digits
    /// give the exact zero.
    pub fn from_digits(&self, digits: &[u64]) -> Result<PadicScalar> {
        if digits.len() > self.precision as usize {
            return Err(Error::Encoding(format!(
                "{} digits exceed precision {}",
                digits.len(),
                self.precision
            )));
        }
        if let Some(d) = digits.iter().find(|&&d| d >= self.p) {
            return Err(Error::Encoding(format!("digit {d} is not below p = {}", self.p)));
        }
        let Some(first) = digits.iter().position(|&d| d != 0) else {
            return Ok(PadicScalar::zero());
        };
        let mut unit = BigUint::zero();
        for &d in digits[first..].iter().rev() {
            unit = unit * self.p + d;
        }
        Ok(self.nonzero(first as i64, unit, self.precision))
    }

    /// Base-p digits of the unit part, `precision` of them.
    pub fn digits(&self, a: &PadicScalar) -> Vec<u64> {
        match &a.0 {
            Repr::Zero => Vec::new(),
            Repr::Nonzero { unit, precision, .. } => {
                let p = BigUint::from(self.p);
                let mut rest = unit.clone();
                let mut out = Vec::with_capacity(*precision as usize);
                for _ in 0..*precision {
                    let (q, r) = rest.div_rem(&p);
                    out.push(r.to_u64().unwrap_or(0));
                    rest = q;
                }
                out
            }
        }
    }

    pub fn encode(&self, a: &PadicScalar) -> ScalarRecord {
        match &a.0 {
            Repr::Zero => ScalarRecord { v: None, digits: Vec::new() },
            Repr::Nonzero { valuation, .. } => ScalarRecord {
                v: Some(*valuation),
                digits: self.digits(a),
            },
        }
    }

    pub fn decode(&self, record: &ScalarRecord) -> Result<PadicScalar> {
        let Some(v) = record.v else {
            return Ok(PadicScalar::zero());
        };
        let digits = &record.digits;
        if digits.is_empty() || digits.len() > self.precision as usize {
            return Err(Error::Encoding(format!(
                "expected 1..={} digits, found {}",
                self.precision,
                digits.len()
            )));
        }
        if digits[0] == 0 {
            return Err(Error::Encoding("leading digit of a unit must be nonzero".into()));
        }
        if let Some(d) = digits.iter().find(|&&d| d >= self.p) {
            return Err(Error::Encoding(format!("digit {d} is not below p = {}", self.p)));
        }
        let mut unit = BigUint::zero();
        for &d in digits.iter().rev() {
            unit = unit * self.p + d;
        }
        Ok(self.nonzero(v, unit, digits.len() as u32))
    }

    pub fn neg(&self, a: &PadicScalar) -> PadicScalar {
        match &a.0 {
            Repr::Zero => PadicScalar::zero(),
            Repr::Nonzero { valuation, unit, precision } => {
                self.nonzero(*valuation, self.modulus(*precision) - unit, *precision)
            }
        }
    }

    pub fn mul(&self, a: &PadicScalar, b: &PadicScalar) -> PadicScalar {
        match (&a.0, &b.0) {
            (
                Repr::Nonzero { valuation: va, unit: ua, precision: pa },
                Repr::Nonzero { valuation: vb, unit: ub, precision: pb },
            ) => {
                let precision = (*pa).min(*pb);
                let unit = (ua * ub) % self.modulus(precision);
                self.nonzero(va + vb, unit, precision)
            }
            _ => PadicScalar::zero(),
        }
    }

    /// Multiply by `p^k`.
    pub fn shift(&self, a: &PadicScalar, k: i64) -> PadicScalar {
        match &a.0 {
            Repr::Zero => PadicScalar::zero(),
            Repr::Nonzero { valuation, unit, precision } => {
                self.nonzero(valuation + k, unit.clone(), *precision)
            }
        }
    }

    pub fn inv(&self, a: &PadicScalar) -> Result<PadicScalar> {
        match &a.0 {
            Repr::Zero => Err(Error::DivisionByZero),
            Repr::Nonzero { valuation, unit, precision } => {
                // inverse mod p, then Newton steps x <- x (2 - u x), doubling digits
                let p = self.p;
                let u0 = (unit % p).to_u64().expect("below p");
                let mut x = BigUint::from(pow_mod(u0, p - 2, p));
                let mut k = 1u32;
                while k < *precision {
                    k = (2 * k).min(*precision);
                    let m = self.modulus(k);
                    let ux = (unit * &x) % m;
                    x = (&x * (m + 2u32 - ux)) % m;
                }
                Ok(self.nonzero(-valuation, x, *precision))
            }
        }
    }

    pub fn div(&self, a: &PadicScalar, b: &PadicScalar) -> Result<PadicScalar> {
        let inv = self.inv(b)?;
        Ok(self.mul(a, &inv))
    }

    pub fn add(&self, a: &PadicScalar, b: &PadicScalar) -> Result<PadicScalar> {
        self.sum([a, b])
    }

    pub fn sub(&self, a: &PadicScalar, b: &PadicScalar) -> Result<PadicScalar> {
        let nb = self.neg(b);
        self.sum([a, &nb])
    }

    /// Sum of any number of terms, computed at the smallest absolute
    /// precision among them. A complete cancellation is an exact zero only
    /// when every term carried all κ digits.
    pub fn sum<'a, I>(&self, terms: I) -> Result<PadicScalar>
    where
        I: IntoIterator<Item = &'a PadicScalar>,
    {
        let mut parts: Vec<(i64, &BigUint)> = Vec::new();
        let mut vmin = i64::MAX;
        let mut abs = i64::MAX;
        let mut all_full = true;
        for t in terms {
            if let Repr::Nonzero { valuation, unit, precision } = &t.0 {
                vmin = vmin.min(*valuation);
                abs = abs.min(valuation + *precision as i64);
                all_full &= *precision == self.precision;
                parts.push((*valuation, unit));
            }
        }
        match parts.len() {
            0 => return Ok(PadicScalar::zero()),
            1 => {
                let (v, u) = parts[0];
                let precision = (abs - v) as u32;
                return Ok(self.nonzero(v, u.clone(), precision));
            }
            _ => {}
        }
        let width = (abs - vmin) as u32;
        let modulus = self.modulus(width);
        let mut acc = BigUint::zero();
        for (v, u) in parts {
            if v >= abs {
                continue;
            }
            let shift = (v - vmin) as u32;
            if shift == 0 {
                acc += u;
            } else {
                acc += u * self.modulus(shift);
            }
        }
        acc %= modulus;
        if acc.is_zero() {
            return if all_full {
                Ok(PadicScalar::zero())
            } else {
                Err(Error::PrecisionExhausted { absolute: abs })
            };
        }
        let mut k = 0u32;
        let p = BigUint::from(self.p);
        loop {
            let (q, r) = acc.div_rem(&p);
            if !r.is_zero() {
                break;
            }
            acc = q;
            k += 1;
        }
        Ok(self.nonzero(vmin + k as i64, acc, width - k))
    }

    /// Dot product `Σ a_i b_i` through a single cancellation check.
    pub fn dot(&self, a: &[PadicScalar], b: &[PadicScalar]) -> Result<PadicScalar> {
        let products: Vec<PadicScalar> = a.iter().zip(b).map(|(x, y)| self.mul(x, y)).collect();
        self.sum(&products)
    }

    pub fn pow_u32(&self, a: &PadicScalar, e: u32) -> PadicScalar {
        match e {
            0 => self.one(),
            1 => a.clone(),
            _ => {
                let half = self.pow_u32(a, e / 2);
                let sq = self.mul(&half, &half);
                if e % 2 == 1 {
                    self.mul(&sq, a)
                } else {
                    sq
                }
            }
        }
    }

    pub fn abs(&self, a: &PadicScalar) -> AbsValue {
        AbsValue { p: self.p, valuation: a.valuation() }
    }

    /// `a mod p^j` for integral `a`. Fails when `a` is not integral or is
    /// not known modulo `p^j`.
    pub fn residue(&self, a: &PadicScalar, j: u32) -> Result<BigUint> {
        match &a.0 {
            Repr::Zero => Ok(BigUint::zero()),
            Repr::Nonzero { valuation, unit, precision } => {
                if *valuation < 0 {
                    return Err(Error::NegativeValuationCoefficient);
                }
                if *valuation >= j as i64 {
                    return Ok(BigUint::zero());
                }
                if valuation + (*precision as i64) < j as i64 {
                    return Err(Error::PrecisionExhausted { absolute: valuation + *precision as i64 });
                }
                let v = *valuation as u32;
                Ok((unit % self.pow(j - v)) * self.pow(v))
            }
        }
    }

    /// `a mod p` as a machine word, for integral `a`.
    pub fn residue_mod_p(&self, a: &PadicScalar) -> Result<u64> {
        match &a.0 {
            Repr::Zero => Ok(0),
            Repr::Nonzero { valuation, unit, .. } => match valuation.cmp(&0) {
                Ordering::Less => Err(Error::NegativeValuationCoefficient),
                Ordering::Greater => Ok(0),
                Ordering::Equal => Ok((unit % self.p).to_u64().unwrap_or(0)),
            },
        }
    }

    /// Valuation and max-norm of a vector: `(min val(x_i), max |x_i|)`.
    pub fn vec_val_norm(&self, x: &[PadicScalar]) -> (Valuation, AbsValue) {
        let v = x.iter().map(PadicScalar::valuation).min().unwrap_or(Valuation::Infinite);
        (v, AbsValue { p: self.p, valuation: v })
    }

    /// Integer representative of an integral scalar, `p^v * unit`.
    pub fn to_integer(&self, a: &PadicScalar) -> Result<BigUint> {
        match &a.0 {
            Repr::Zero => Ok(BigUint::zero()),
            Repr::Nonzero { valuation, unit, .. } => {
                if *valuation < 0 {
                    return Err(Error::NegativeValuationCoefficient);
                }
                Ok(unit * self.pow(*valuation as u32))
            }
        }
    }

    /// Seedable generator for `worker_id`; distinct ids give independent streams.
    pub fn split_stream(&self, worker_id: u32) -> DigitStream {
        DigitStream::new(self.p, self.seed, worker_id)
    }

    /// Uniform draw from Z_p truncated to κ digits.
    pub fn sample_uniform(&self, stream: &mut DigitStream) -> PadicScalar {
        let digits: Vec<u64> = (0..self.precision).map(|_| stream.next_digit()).collect();
        self.from_digits(&digits).expect("digits are below p")
    }

    pub fn sample_uniform_vec(&self, stream: &mut DigitStream, len: usize) -> Vec<PadicScalar> {
        (0..len).map(|_| self.sample_uniform(stream)).collect()
    }
}

impl fmt::Display for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Zero => write!(f, "0"),
            Repr::Nonzero { valuation, unit, precision } => {
                write!(f, "{unit}*p^{valuation} + O(p^{})", valuation + *precision as i64)
            }
        }
    }
}

fn pow_mod(mut b: u64, mut e: u64, n: u64) -> u64 {
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let mut r = 1 % n;
    b %= n;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, b);
        }
        b = mulmod(b, b);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for small in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % small == 0 {
            return n == small;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |b: u64, e: u64| pow_mod(b, e, n);
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
