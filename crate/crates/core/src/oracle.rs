//! Adaptive Gauss–Kronrod quadrature.
//!
//! Independent numerical reference for the closed-form integrals: the
//! verification suite and the tests compare against it. Nothing on the
//! estimation path calls into this module.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-13, abs_tol: 1e-300, max_intervals: 4000 }
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn adaptive_finite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, opts: &QuadOptions) -> QuadResult {
    let (value, error) = kronrod15(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let (mut total, mut total_err) = (value, error);
    while total_err > opts.abs_tol.max(opts.rel_tol * total.abs()) && heap.len() < opts.max_intervals {
        let worst = heap.pop().unwrap();
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (lv, le) = kronrod15(f, worst.a, mid);
        let (rv, re) = kronrod15(f, mid, worst.b);
        heap.push(Segment { a: worst.a, b: mid, value: lv, error: le });
        heap.push(Segment { a: mid, b: worst.b, value: rv, error: re });
        // re-sum from scratch to keep cancellation in the running totals out
        total = heap.iter().map(|s| s.value).sum();
        total_err = heap.iter().map(|s| s.error).sum();
    }
    QuadResult { value: total, error: total_err, intervals: heap.len() }
}

/// `∫_a^b f(x) dx`; either limit may be infinite.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> QuadResult {
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adaptive_finite(&f, a, b, opts),
        (true, false) => {
            // x = a + t / (1 - t), t in [0, 1)
            let g = |t: f64| {
                let u = 1.0 - t;
                f(a + t / u) / (u * u)
            };
            adaptive_finite(&g, 0.0, 1.0, opts)
        }
        (false, true) => {
            let g = |t: f64| {
                let u = 1.0 - t;
                f(b - t / u) / (u * u)
            };
            adaptive_finite(&g, 0.0, 1.0, opts)
        }
        (false, false) => {
            // x = t / (1 - t²), t in (-1, 1)
            let g = |t: f64| {
                let u = 1.0 - t * t;
                f(t / u) * (1.0 + t * t) / (u * u)
            };
            adaptive_finite(&g, -1.0, 1.0, opts)
        }
    }
}

/// `∫_a^b ∫_a^{x0} f(x0, x1) dx1 dx0` over the ordered triangle `x0 > x1`.
pub fn integrate_ordered_pair<F: Fn(f64, f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> QuadResult {
    let inner_opts = QuadOptions { rel_tol: opts.rel_tol * 0.1, ..*opts };
    let outer = |x0: f64| {
        if x0 <= a {
            return 0.0;
        }
        integrate(|x1| f(x0, x1), a, x0, &inner_opts).value
    };
    integrate(outer, a, b, opts)
}
