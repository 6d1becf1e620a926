//! Error-free transformations and the double-double helpers built on them:
//! compensated Horner evaluation and deterministic compensated summation.

/// `a + b = s + e` exactly.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

/// `a * b = p + e` exactly (via fused multiply-add).
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };

    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Self { hi, lo }
    }

    pub fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn add(self, other: DoubleDouble) -> DoubleDouble {
        let (s, e) = two_sum(self.hi, other.hi);
        let (t, f) = two_sum(self.lo, other.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DoubleDouble { hi, lo }
    }

    #[inline]
    pub fn add_f64(self, x: f64) -> DoubleDouble {
        let (s, e) = two_sum(self.hi, x);
        let (hi, lo) = quick_two_sum(s, e + self.lo);
        DoubleDouble { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, x: f64) -> DoubleDouble {
        let (p, e) = two_prod(self.hi, x);
        let (hi, lo) = quick_two_sum(p, e + self.lo * x);
        DoubleDouble { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Horner evaluation carried in double-double: `coeffs[p]` multiplies `x^p`.
/// The result is as accurate as if computed in twice the working precision
/// and then rounded.
pub fn compensated_horner(coeffs: &[DoubleDouble], x: f64) -> f64 {
    compensated_horner_dd(coeffs, x).to_f64()
}

pub fn compensated_horner_dd(coeffs: &[DoubleDouble], x: f64) -> DoubleDouble {
    let mut acc = DoubleDouble::ZERO;
    for c in coeffs.iter().rev() {
        acc = acc.mul_f64(x).add(*c);
    }
    acc
}

/// Compensated summation over fixed-size shards, combined in shard order.
/// The reduction tree depends only on the input length, so serial and
/// parallel callers produce identical bits.
pub const SHARD_SIZE: usize = 4096;

pub fn shard_sum<I: IntoIterator<Item = DoubleDouble>>(items: I) -> DoubleDouble {
    items.into_iter().fold(DoubleDouble::ZERO, DoubleDouble::add)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sum_is_exact() {
        let (s, e) = two_sum(1.0, 1e-20);
        assert_eq!(s, 1.0);
        assert_eq!(e, 1e-20);
    }

    #[test]
    fn horner_survives_cancellation() {
        // (x - 1)^7 expanded; naive Horner near x = 1 is dominated by rounding
        let c = [-1.0, 7.0, -21.0, 35.0, -35.0, 21.0, -7.0, 1.0];
        let dd: Vec<_> = c.iter().map(|&v| DoubleDouble::from_f64(v)).collect();
        let x = 1.0 + 1.0 / 64.0;
        let exact = (1.0f64 / 64.0).powi(7);
        let got = compensated_horner(&dd, x);
        assert!((got - exact).abs() <= 1e-12 * exact, "{got} vs {exact}");
    }

    #[test]
    fn summation_recovers_small_terms() {
        let items = [1e16, 1.0, -1e16, 1.0].map(DoubleDouble::from_f64);
        assert_eq!(shard_sum(items).to_f64(), 2.0);
    }
}
