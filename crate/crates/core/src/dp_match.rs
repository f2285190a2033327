//! Left/right dual-pixel mismatch measures and the argmin focal-stack solver.
//!
//! Every measure runs on zero-normalized views (mean 0, std 1). Lower scores
//! mean better focused.

use crate::camera::MetricParams;
use crate::contrast::metric_ids;
use crate::error::{Error, Result};
use crate::filter::{box2, max2, min2, variance};
use crate::patch::{DualPixelPatch, FocalStack, Patch};
use crate::scalar::Scalar;

metric_ids! {
    /// Stable identifiers of the dual-pixel mismatch measures.
    DpMetricId {
        CensusHamming => "census_hamming",
        RankL1 => "rank_l1",
        TernaryCensus => "ternary_census",
        Ncc => "ncc",
        NormalizedSad => "normalized_sad",
        NormalizedEnvelopeL1 => "normalized_envelope_l1",
        NormalizedEnvelopeL2 => "normalized_envelope_l2",
    }
}

const NEIGHBORS: [(isize, isize); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

/// Subtracts the mean and divides by the population standard deviation.
/// Constant patches map to zeros.
pub fn zero_normalize<T: Scalar>(patch: &Patch<T>) -> Patch<T> {
    let mu = patch.mean();
    let sd = variance(patch.data()).sqrt();
    // a constant patch leaves only rounding noise in the deviation
    if !(sd > T::epsilon() * T::of(64.0) * mu.abs().max(T::one())) {
        return Patch::zeros(patch.width(), patch.height());
    }
    patch.map(|v| (v - mu) / sd)
}

/// Per-pixel digit strings over the in-bounds 8-neighborhood: `digit(neighbor
/// - center)`, `None` where the neighbor leaves the patch.
fn census_digits<T: Scalar>(p: &Patch<T>, digit: impl Fn(T) -> i8) -> Vec<[Option<i8>; 8]> {
    let (w, h) = (p.width() as isize, p.height() as isize);
    let mut out = Vec::with_capacity(p.len());
    for y in 0..h {
        for x in 0..w {
            let c = p.get(x as usize, y as usize);
            let mut d = [None; 8];
            for (slot, &(dx, dy)) in d.iter_mut().zip(&NEIGHBORS) {
                let (nx, ny) = (x + dx, y + dy);
                if nx >= 0 && ny >= 0 && nx < w && ny < h {
                    *slot = Some(digit(p.get(nx as usize, ny as usize) - c));
                }
            }
            out.push(d);
        }
    }
    out
}

fn binary<T: Scalar>(diff: T) -> i8 {
    (diff > T::zero()) as i8
}

fn census_distance<T: Scalar>(l: &Patch<T>, r: &Patch<T>, digit: impl Fn(T) -> i8 + Copy) -> T {
    let (cl, cr) = (census_digits(l, digit), census_digits(r, digit));
    let mut total = 0i64;
    for (a, b) in cl.iter().zip(&cr) {
        for (x, y) in a.iter().zip(b) {
            if let (Some(x), Some(y)) = (x, y) {
                total += (x - y).abs() as i64;
            }
        }
    }
    T::of(total as f64)
}

fn rank_distance<T: Scalar>(l: &Patch<T>, r: &Patch<T>) -> T {
    let count = |d: &[Option<i8>; 8]| d.iter().flatten().map(|&v| v as i64).sum::<i64>();
    let (cl, cr) = (census_digits(l, binary), census_digits(r, binary));
    let total: i64 = cl.iter().zip(&cr).map(|(a, b)| (count(a) - count(b)).abs()).sum();
    T::of(total as f64)
}

/// Lower and upper envelopes: 2x2 min / max of the 2x2 box-filtered image.
pub fn envelopes<T: Scalar>(p: &Patch<T>) -> Result<(Patch<T>, Patch<T>)> {
    let b = box2(p)?;
    Ok((min2(&b)?, max2(&b)?))
}

fn envelope_distance<T: Scalar>(l: &Patch<T>, r: &Patch<T>, squared: bool) -> Result<T> {
    let (l_lo, l_hi) = envelopes(l)?;
    let (r_lo, r_hi) = envelopes(r)?;
    let cost = |v: T| {
        let v = v.max(T::zero());
        if squared {
            v * v
        } else {
            v
        }
    };
    let mut acc = T::zero();
    for i in 0..l_lo.len() {
        acc += cost(l_lo.data()[i] - r_hi.data()[i]) + cost(r_lo.data()[i] - l_hi.data()[i]);
    }
    Ok(acc)
}

/// Mismatch between the two views of `pair`; lower means better focused.
pub fn dp_mismatch<T: Scalar>(id: DpMetricId, pair: &DualPixelPatch<T>, params: &MetricParams<T>) -> Result<T> {
    use DpMetricId::*;
    if !pair.left.same_dims(&pair.right) {
        return Err(Error::DimensionMismatch("left and right views differ in size".into()));
    }
    let l = zero_normalize(&pair.left);
    let r = zero_normalize(&pair.right);
    let score = match id {
        CensusHamming => census_distance(&l, &r, binary),
        RankL1 => rank_distance(&l, &r),
        TernaryCensus => {
            let eps = params.ternary_epsilon;
            if !(eps >= T::zero()) {
                return Err(Error::InvalidParameter(format!("ternary epsilon must be nonnegative, got {}", eps)));
            }
            census_distance(&l, &r, move |d: T| {
                if d.abs() > eps {
                    if d > T::zero() {
                        1
                    } else {
                        -1
                    }
                } else {
                    0
                }
            })
        }
        Ncc => -l.data().iter().zip(r.data()).map(|(&a, &b)| a * b).sum::<T>(),
        NormalizedSad => l.data().iter().zip(r.data()).map(|(&a, &b)| (a - b).abs()).sum(),
        NormalizedEnvelopeL1 => envelope_distance(&l, &r, false)?,
        NormalizedEnvelopeL2 => envelope_distance(&l, &r, true)?,
    };
    Ok(score)
}

/// Index of the first minimum; `NaN` scores never win.
pub fn argmin_first<T: Scalar>(scores: &[T]) -> Option<usize> {
    let negated: Vec<T> = scores.iter().map(|&s| -s).collect();
    crate::contrast::argmax_first(&negated)
}

pub fn dp_curve<T: Scalar>(id: DpMetricId, stack: &FocalStack<T>, params: &MetricParams<T>) -> Result<Vec<T>> {
    stack.require_dual_pixel()?;
    stack.slices.iter().map(|s| dp_mismatch(id, s, params)).collect()
}

/// Full-stack solver: the slice whose views match best, lower index on ties.
pub fn solve_focal_stack_dp<T: Scalar>(
    id: DpMetricId,
    stack: &FocalStack<T>,
    params: &MetricParams<T>,
) -> Result<usize> {
    if stack.is_empty() {
        return Err(Error::EmptyStack);
    }
    let scores = dp_curve(id, stack, params)?;
    argmin_first(&scores).ok_or(Error::NonFinite("mismatch scores"))
}
