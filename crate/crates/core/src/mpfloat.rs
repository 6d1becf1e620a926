//! Arbitrary-precision binary floating point.
//!
//! A value is `mant * 2^exp` with `|mant| < 2^prec`, rounded to nearest-even
//! after every operation. Results take the larger precision of the operands.
//! Only what the moment and basis computations need is provided: the four
//! arithmetic operations, square root, `exp`, `pi` and the Gaussian integral
//! `∫_0^x e^{-t²/2} dt`.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Precision used for plain double-precision work.
pub const DOUBLE_BITS: u32 = 53;

#[derive(Clone)]
pub struct MpFloat {
    mant: BigInt,
    exp: i64,
    prec: u32,
}

fn round_mantissa(mant: BigInt, exp: i64, prec: u32) -> (BigInt, i64) {
    let bits = mant.bits();
    if bits <= prec as u64 {
        return (mant, exp);
    }
    let shift = bits - prec as u64;
    let (sign, mag) = mant.into_parts();
    let mut q = &mag >> shift;
    let rem = &mag - (&q << shift);
    let half = BigUint::one() << (shift - 1);
    match rem.cmp(&half) {
        Ordering::Greater => q += 1u32,
        Ordering::Equal if q.bit(0) => q += 1u32,
        _ => {}
    }
    let mut exp = exp + shift as i64;
    if q.bits() > prec as u64 {
        // carried into a new power of two; dropping the low zero bit is exact
        q >>= 1u32;
        exp += 1;
    }
    (BigInt::from_biguint(sign, q), exp)
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

impl MpFloat {
    pub fn zero(prec: u32) -> Self {
        Self { mant: BigInt::zero(), exp: 0, prec }
    }

    pub fn one(prec: u32) -> Self {
        Self { mant: BigInt::one(), exp: 0, prec }
    }

    fn from_parts(mant: BigInt, exp: i64, prec: u32) -> Self {
        if mant.is_zero() {
            return Self::zero(prec);
        }
        let (mant, exp) = round_mantissa(mant, exp, prec);
        Self { mant, exp, prec }
    }

    /// Exact conversion (rounded only if `prec < 53`). Panics on non-finite input.
    pub fn from_f64(x: f64, prec: u32) -> Self {
        assert!(x.is_finite(), "MpFloat::from_f64 on non-finite value {x}");
        if x == 0.0 {
            return Self::zero(prec);
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { Sign::Minus } else { Sign::Plus };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        Self::from_parts(BigInt::from_biguint(sign, BigUint::from(m)), e, prec)
    }

    pub fn from_int(n: &BigInt, prec: u32) -> Self {
        Self::from_parts(n.clone(), 0, prec)
    }

    pub fn from_i64(n: i64, prec: u32) -> Self {
        Self::from_parts(BigInt::from(n), 0, prec)
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// Same value rounded (or padded) to a new precision.
    pub fn with_prec(&self, prec: u32) -> Self {
        Self::from_parts(self.mant.clone(), self.exp, prec)
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    pub fn signum(&self) -> i32 {
        match self.mant.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    /// Exponent of the leading bit plus one: `2^(top-1) <= |x| < 2^top`.
    /// Zero reports `i64::MIN`.
    pub fn top(&self) -> i64 {
        if self.is_zero() {
            i64::MIN
        } else {
            self.exp + self.mant.bits() as i64
        }
    }

    pub fn abs(&self) -> Self {
        Self { mant: self.mant.abs(), exp: self.exp, prec: self.prec }
    }

    /// Multiplication by `2^k`, exact.
    pub fn mul_pow2(&self, k: i64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        Self { mant: self.mant.clone(), exp: self.exp + k, prec: self.prec }
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let mag = self.mant.magnitude();
        let bits = mag.bits();
        let (top, shift) = if bits > 64 {
            let shift = bits - 64;
            let mut top = (mag >> shift).to_u64().unwrap();
            if mag.trailing_zeros().unwrap_or(0) < shift {
                top |= 1; // sticky bit so the u64 -> f64 rounding is correct
            }
            (top, shift as i64)
        } else {
            (mag.to_u64().unwrap(), 0)
        };
        let v = ldexp(top as f64, self.exp + shift);
        if self.mant.is_negative() {
            -v
        } else {
            v
        }
    }

    fn add_signed(&self, other: &Self, negate_other: bool) -> Self {
        let prec = self.prec.max(other.prec);
        let other_mant = if negate_other { -&other.mant } else { other.mant.clone() };
        if other.is_zero() {
            return self.with_prec(prec);
        }
        if self.is_zero() {
            return Self::from_parts(other_mant, other.exp, prec);
        }
        let (big_m, big_e, small_m, small_e) = if self.top() >= other.top() {
            (self.mant.clone(), self.exp, other_mant, other.exp)
        } else {
            (other_mant, other.exp, self.mant.clone(), self.exp)
        };
        let big_top = big_e + big_m.bits() as i64;
        let small_top = small_e + small_m.bits() as i64;
        let (small_m, small_e) = if big_top - small_top > prec as i64 + 4 {
            // only the sign of the negligible operand matters for rounding
            let sticky_e = big_top - prec as i64 - 4;
            let m = if small_m.is_negative() { -BigInt::one() } else { BigInt::one() };
            (m, sticky_e)
        } else {
            (small_m, small_e)
        };
        let e = big_e.min(small_e);
        let a = big_m << (big_e - e) as usize;
        let b = small_m << (small_e - e) as usize;
        Self::from_parts(a + b, e, prec)
    }

    fn mul_impl(&self, other: &Self) -> Self {
        let prec = self.prec.max(other.prec);
        Self::from_parts(&self.mant * &other.mant, self.exp + other.exp, prec)
    }

    fn div_impl(&self, other: &Self) -> Self {
        assert!(!other.is_zero(), "MpFloat division by zero");
        let prec = self.prec.max(other.prec);
        if self.is_zero() {
            return Self::zero(prec);
        }
        let a_bits = self.mant.bits() as i64;
        let b_bits = other.mant.bits() as i64;
        let shift = (prec as i64 + 3 + b_bits - a_bits).max(0);
        let num = &self.mant << shift as usize;
        let (q, r) = num.div_rem(&other.mant);
        let mut e = self.exp - other.exp - shift;
        let q = if r.is_zero() {
            q
        } else {
            e -= 1;
            let sticky = if num.is_negative() != other.mant.is_negative() {
                -BigInt::one()
            } else {
                BigInt::one()
            };
            (q << 1usize) + sticky
        };
        Self::from_parts(q, e, prec)
    }

    /// Division by a small integer; cheaper than a full division.
    pub fn div_u64(&self, d: u64) -> Self {
        self.div_impl(&Self::from_parts(BigInt::from(d), 0, self.prec))
    }

    pub fn mul_u64(&self, d: u64) -> Self {
        Self::from_parts(&self.mant * BigInt::from(d), self.exp, self.prec)
    }

    pub fn square(&self) -> Self {
        self.mul_impl(self)
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut result = Self::one(self.prec);
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                result = &result * &base;
            }
            base = base.square();
            n >>= 1;
        }
        result
    }

    pub fn sqrt(&self) -> Self {
        assert!(!self.is_negative(), "MpFloat::sqrt of a negative value");
        if self.is_zero() {
            return self.clone();
        }
        let prec = self.prec;
        let bits = self.mant.bits() as i64;
        let mut shift = (2 * (prec as i64 + 2) - bits).max(0);
        if (self.exp - shift).rem_euclid(2) != 0 {
            shift += 1;
        }
        let m = self.mant.magnitude() << shift as usize;
        let r = m.sqrt();
        let mut e = (self.exp - shift) / 2;
        let r = if &r * &r == m {
            BigInt::from(r)
        } else {
            e -= 1;
            BigInt::from((r << 1usize) | BigUint::one())
        };
        Self::from_parts(r, e, prec)
    }

    /// `e^x`. Argument reduction by halving, Taylor series, repeated squaring.
    pub fn exp(&self) -> Self {
        let prec = self.prec;
        if self.is_zero() {
            return Self::one(prec);
        }
        let reduce = (self.top() + 10).max(0) + (prec as f64).sqrt() as i64 / 2;
        let wp = prec + reduce as u32 + 40;
        let r = self.with_prec(wp).mul_pow2(-reduce);
        let mut sum = Self::one(wp);
        let mut term = Self::one(wp);
        let mut n = 1u64;
        loop {
            term = (&term * &r).div_u64(n);
            sum = &sum + &term;
            if term.is_zero() || term.top() < sum.top() - wp as i64 - 2 {
                break;
            }
            n += 1;
        }
        for _ in 0..reduce {
            sum = sum.square();
        }
        sum.with_prec(prec)
    }

    /// π by Machin's formula.
    pub fn pi(prec: u32) -> Self {
        let wp = prec + 32;
        let atan_inv = |x: u64| -> MpFloat {
            let inv = Self::one(wp).div_u64(x);
            let x2 = x * x;
            let mut power = inv.clone();
            let mut sum = inv;
            let mut n = 1u64;
            loop {
                power = power.div_u64(x2);
                let term = power.div_u64(2 * n + 1);
                if term.is_zero() || term.top() < sum.top() - wp as i64 - 2 {
                    break;
                }
                sum = if n % 2 == 1 { &sum - &term } else { &sum + &term };
                n += 1;
            }
            sum
        };
        let pi = (atan_inv(5).mul_u64(4) - atan_inv(239)).mul_pow2(2);
        pi.with_prec(prec)
    }

    /// `∫_0^x e^{-t²/2} dt` via `e^{-x²/2} Σ x^{2n+1}/(2n+1)!!` (all terms share a sign).
    pub fn gaussian_integral(&self) -> Self {
        let prec = self.prec;
        if self.is_zero() {
            return Self::zero(prec);
        }
        let extra = (self.top().max(0) as u32) * 2 + 40;
        let wp = prec + extra;
        let x = self.with_prec(wp);
        let x2 = x.square();
        let mut term = x.clone();
        let mut sum = x.clone();
        let x2_f = x2.to_f64();
        let mut n = 1u64;
        loop {
            term = (&term * &x2).div_u64(2 * n + 1);
            sum = &sum + &term;
            let decreasing = (2 * n + 1) as f64 > x2_f;
            if decreasing && (term.is_zero() || term.top() < sum.top() - wp as i64 - 2) {
                break;
            }
            n += 1;
        }
        let damp = x2.mul_pow2(-1).neg().exp();
        (&sum * &damp).with_prec(prec)
    }

    pub fn cmp_abs(&self, other: &Self) -> Ordering {
        if self.is_zero() || other.is_zero() {
            return self.mant.is_zero().cmp(&other.mant.is_zero()).reverse();
        }
        self.abs().partial_cmp(&other.abs()).unwrap()
    }
}

impl PartialEq for MpFloat {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for MpFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        // rounding never flips the sign of a difference
        Some(match self.add_signed(other, true).signum() {
            -1 => Ordering::Less,
            0 => Ordering::Equal,
            _ => Ordering::Greater,
        })
    }
}

impl fmt::Debug for MpFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MpFloat({:e}, prec={})", self.to_f64(), self.prec)
    }
}

impl fmt::Display for MpFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.to_f64())
    }
}

impl Neg for MpFloat {
    type Output = MpFloat;
    fn neg(self) -> MpFloat {
        MpFloat { mant: -self.mant, exp: self.exp, prec: self.prec }
    }
}

impl Neg for &MpFloat {
    type Output = MpFloat;
    fn neg(self) -> MpFloat {
        MpFloat { mant: -&self.mant, exp: self.exp, prec: self.prec }
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&MpFloat> for &MpFloat {
            type Output = MpFloat;
            fn $method(self, rhs: &MpFloat) -> MpFloat {
                let f: fn(&MpFloat, &MpFloat) -> MpFloat = $body;
                f(self, rhs)
            }
        }
        impl $trait<MpFloat> for MpFloat {
            type Output = MpFloat;
            fn $method(self, rhs: MpFloat) -> MpFloat {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&MpFloat> for MpFloat {
            type Output = MpFloat;
            fn $method(self, rhs: &MpFloat) -> MpFloat {
                (&self).$method(rhs)
            }
        }
        impl $trait<MpFloat> for &MpFloat {
            type Output = MpFloat;
            fn $method(self, rhs: MpFloat) -> MpFloat {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| a.add_signed(b, false));
binop!(Sub, sub, |a, b| a.add_signed(b, true));
binop!(Mul, mul, |a, b| a.mul_impl(b));
binop!(Div, div, |a, b| a.div_impl(b));
