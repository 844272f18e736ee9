//! Adaptive Gauss-Kronrod quadrature and expectations against innovation laws.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::process_sim::InnovationDist;

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
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    /// Relative tolerance the refinement aims for.
    pub rel_tol: f64,
    /// Relative tolerance below which a result is still accepted when the
    /// interval budget runs out.
    pub accept_rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: 1e-11,
            accept_rel_tol: 1e-8,
            abs_tol: 1e-14,
            max_intervals: 6000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    let k = k * h;
    let g = g * h;
    (k, (k - g).abs())
}

/// Integrate `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0 });
    }
    let (value, error) = kronrod(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut count = 1;
    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(Error::Accuracy { estimate: total, achieved: total_err });
        }
        if total_err <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            break;
        }
        if count >= opts.max_intervals {
            if total_err <= opts.abs_tol.max(opts.accept_rel_tol * total.abs()) {
                break;
            }
            return Err(Error::Accuracy { estimate: total, achieved: total_err });
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval can no longer be split in floating point
            return Err(Error::Accuracy { estimate: total, achieved: total_err });
        }
        let (v1, e1) = kronrod(&f, worst.a, mid);
        let (v2, e2) = kronrod(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
        count += 1;
    }
    // re-sum for accuracy after many incremental updates
    let pieces = heap.into_vec();
    let value = crate::scalar::compensated_sum(pieces.iter().map(|p| p.value));
    let error = pieces.iter().map(|p| p.error).sum();
    Ok(QuadResult { value, error })
}

/// Integrate `f` over `[a, +inf)` as a sum over intervals of doubling width.
/// A tail that does not die out is reported as an accuracy error.
pub fn integrate_upper<F: Fn(f64) -> f64>(f: F, a: f64, opts: &QuadOptions) -> Result<QuadResult> {
    let mut total = 0.0;
    let mut comp = Vec::new();
    let mut error = 0.0;
    let mut lo = a;
    let mut width = 1.0f64;
    let mut quiet = 0;
    while width.is_finite() && lo.is_finite() {
        let hi = lo + width;
        let piece = integrate(&f, lo, hi, opts)?;
        comp.push(piece.value);
        total += piece.value;
        error += piece.error;
        if piece.value.abs() <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            quiet += 1;
            if quiet >= 2 {
                let value = crate::scalar::compensated_sum(comp);
                return Ok(QuadResult { value, error: error + piece.value.abs() });
            }
        } else {
            quiet = 0;
        }
        lo = hi;
        width *= 2.0;
    }
    Err(Error::Accuracy { estimate: total, achieved: f64::INFINITY })
}

/// Integrate `f` over `(-inf, b]`.
pub fn integrate_lower<F: Fn(f64) -> f64>(f: F, b: f64, opts: &QuadOptions) -> Result<QuadResult> {
    integrate_upper(|x| f(2.0 * b - x), b, opts)
}

/// `E[f(eps)]` under `dist`. `breakpoints` mark kinks or jumps of `f`; the
/// origin is always used as one.
pub fn expectation<F: Fn(f64) -> f64>(
    dist: &InnovationDist,
    f: F,
    breakpoints: &[f64],
) -> Result<f64> {
    expectation_with(dist, f, breakpoints, &QuadOptions::default()).map(|r| r.value)
}

pub fn expectation_with<F: Fn(f64) -> f64>(
    dist: &InnovationDist,
    f: F,
    breakpoints: &[f64],
    opts: &QuadOptions,
) -> Result<QuadResult> {
    if let InnovationDist::Rademacher = dist {
        let value = 0.5 * (f(-1.0) + f(1.0));
        return Ok(QuadResult { value, error: 0.0 });
    }
    let (lo, hi) = dist.support();
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .chain(std::iter::once(0.0))
        .filter(|x| x.is_finite() && *x > lo && *x < hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let g = |x: f64| {
        let d = dist.pdf(x);
        if d == 0.0 {
            0.0
        } else {
            f(x) * d
        }
    };
    let mut parts = Vec::with_capacity(cuts.len() + 1);
    let first = cuts[0];
    parts.push(if lo.is_finite() {
        integrate(g, lo, first, opts)?
    } else {
        integrate_lower(g, first, opts)?
    });
    for w in cuts.windows(2) {
        parts.push(integrate(g, w[0], w[1], opts)?);
    }
    let last = *cuts.last().expect("at least one cut");
    parts.push(if hi.is_finite() {
        integrate(g, last, hi, opts)?
    } else {
        integrate_upper(g, last, opts)?
    });
    Ok(QuadResult {
        value: crate::scalar::compensated_sum(parts.iter().map(|p| p.value)),
        error: parts.iter().map(|p| p.error).sum(),
    })
}

/// `E[|f(eps)|^s]`.
pub fn moment_functional<F: Fn(f64) -> f64>(dist: &InnovationDist, f: F, s: f64) -> Result<f64> {
    moment_functional_with_breaks(dist, f, s, &[])
}

pub fn moment_functional_with_breaks<F: Fn(f64) -> f64>(
    dist: &InnovationDist,
    f: F,
    s: f64,
    breakpoints: &[f64],
) -> Result<f64> {
    if !(s >= 1.0) {
        return Err(Error::Parameter(format!("moment order s = {s} must be at least 1")));
    }
    expectation(
        dist,
        |x| {
            let v = f(x).abs();
            if s == 1.0 {
                v
            } else if s == 2.0 {
                v * v
            } else {
                v.powf(s)
            }
        },
        breakpoints,
    )
}
