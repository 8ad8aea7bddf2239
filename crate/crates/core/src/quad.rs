//! Globally adaptive 15-point Gauss–Kronrod quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate meets `max(abs_tol, rel_tol * |I|)`. The error estimate is the raw
//! `|K15 - G7|` difference, which is conservative for smooth integrands.

use alloc::collections::BinaryHeap;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::sum::Neumaier;

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
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    /// Absolute error target.
    pub abs_tol: f64,
    /// Relative error target.
    pub rel_tol: f64,
    /// Maximum number of subintervals.
    pub max_intervals: usize,
}

impl QuadConfig {
    /// Absolute tolerance only, with a generous interval budget.
    pub fn absolute(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol: 0.0,
            max_intervals: 2000,
        }
    }
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_intervals: 2000,
        }
    }
}

/// Integral value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    /// Integral estimate.
    pub value: f64,
    /// Estimated absolute error.
    pub error: f64,
    /// Number of subintervals used.
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
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

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kron * half,
        error: ((kron - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[a, b]`.
///
/// Fails with [`Error::Convergence`] (carrying the partial value) when the
/// interval budget runs out, and with [`Error::Domain`] when a sample is not
/// finite.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain("quadrature limits must be finite"));
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    let mut heap = BinaryHeap::new();
    let first = kronrod(&mut f, lo, hi);
    let mut total_value = first.value;
    let mut total_error = first.error;
    heap.push(first);

    loop {
        if !total_value.is_finite() {
            return Err(Error::domain("non-finite integrand"));
        }
        let target = cfg.abs_tol.max(cfg.rel_tol * total_value.abs());
        if total_error <= target {
            break;
        }
        if heap.len() >= cfg.max_intervals {
            return Err(Error::Convergence {
                what: "adaptive quadrature".into(),
                iterations: heap.len(),
                partial: sign * total_value,
                bound: total_error,
            });
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval can no longer be split in floating point; accept it.
            heap.push(Segment {
                error: 0.0,
                ..worst
            });
            total_error -= worst.error;
            continue;
        }
        let left = kronrod(&mut f, worst.a, mid);
        let right = kronrod(&mut f, mid, worst.b);
        total_value += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum from scratch to shed the drift of the running updates.
    let mut value = Neumaier::new();
    let mut error = Neumaier::new();
    let intervals = heap.len();
    for seg in heap {
        value.add(seg.value);
        error.add(seg.error);
    }
    Ok(QuadResult {
        value: sign * value.total(),
        error: error.total(),
        intervals,
    })
}

/// Integrates over consecutive breakpoints, summing results.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    let mut value = Neumaier::new();
    let mut error = 0.0;
    let mut intervals = 0;
    for w in points.windows(2) {
        let r = integrate(&mut f, w[0], w[1], cfg)?;
        value.add(r.value);
        error += r.error;
        intervals += r.intervals;
    }
    Ok(QuadResult {
        value: value.total(),
        error,
        intervals,
    })
}
