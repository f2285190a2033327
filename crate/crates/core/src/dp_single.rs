//! Single-slice solvers: dual-pixel disparity with a calibration table, and
//! blur matching on the green channel, which cannot tell near from far.

use serde::{Deserialize, Serialize};

use crate::camera::{CalibrationGrid, CameraConfig};
use crate::dp_match::zero_normalize;
use crate::error::{Error, Result};
use crate::filter::gaussian_blur;
use crate::patch::{nearest_index, DualPixelPatch, Patch};
use crate::scalar::Scalar;

pub const DEFAULT_MAX_SHIFT: usize = 8;

/// Coarse and fine steps of the blur-radius search, pixels.
const BLUR_COARSE_STEP: f64 = 0.5;
const BLUR_FINE_STEP: f64 = 1.0 / 16.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisparityEstimate<T> {
    /// Signed disparity, pixels; positive when the right view is displaced
    /// to the right of the left view.
    pub d: T,
    /// Correlation at each integer shift from `-max_shift` to `max_shift`.
    pub peak_scores: Vec<T>,
    pub subpixel_offset: T,
}

/// One node of a calibration table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample<T> {
    pub x: T,
    pub y: T,
    #[serde(rename = "C")]
    pub c: T,
}

impl<T: Scalar> CalibrationGrid<T> {
    pub fn samples(&self) -> Vec<CalibrationSample<T>> {
        let pos = |i: usize, n: usize| if n > 1 { T::of_usize(i) / T::of_usize(n - 1) } else { T::zero() };
        (0..self.grid_h)
            .flat_map(|j| (0..self.grid_w).map(move |i| (i, j)))
            .map(|(i, j)| CalibrationSample {
                x: pos(i, self.grid_w),
                y: pos(j, self.grid_h),
                c: self.values[j * self.grid_w + i],
            })
            .collect()
    }
}

pub fn lookup_c<T: Scalar>(grid: &CalibrationGrid<T>, x: T, y: T) -> Result<T> {
    grid.lookup(x, y)
}

/// Pearson correlation of `l[x, y]` with `r[x + delta, y]` over the columns
/// where both exist.
fn overlap_correlation<T: Scalar>(l: &Patch<T>, r: &Patch<T>, delta: isize) -> T {
    let w = l.width() as isize;
    let (x0, x1) = ((-delta).max(0), (w - delta).min(w));
    let count = T::of_usize(((x1 - x0) as usize) * l.height());
    let (mut sl, mut sr) = (T::zero(), T::zero());
    for y in 0..l.height() {
        for x in x0..x1 {
            sl += l.get(x as usize, y);
            sr += r.get((x + delta) as usize, y);
        }
    }
    let (ml, mr) = (sl / count, sr / count);
    let (mut slr, mut sll, mut srr) = (T::zero(), T::zero(), T::zero());
    for y in 0..l.height() {
        for x in x0..x1 {
            let a = l.get(x as usize, y) - ml;
            let b = r.get((x + delta) as usize, y) - mr;
            slr += a * b;
            sll += a * a;
            srr += b * b;
        }
    }
    let denom = (sll * srr).sqrt();
    if denom > T::zero() {
        slr / denom
    } else {
        T::zero()
    }
}

/// Vertex of the parabola through `(-1, a)`, `(0, b)`, `(1, c)`.
pub fn quadratic_vertex<T: Scalar>(a: T, b: T, c: T) -> T {
    let curv = a - T::of(2.0) * b + c;
    if curv < T::zero() {
        T::of(0.5) * (a - c) / curv
    } else {
        T::zero()
    }
}

pub fn zncc_disparity<T: Scalar>(pair: &DualPixelPatch<T>, max_shift: usize) -> Result<DisparityEstimate<T>> {
    if max_shift == 0 {
        return Err(Error::InvalidParameter("max_shift must be at least 1".into()));
    }
    if !pair.left.same_dims(&pair.right) {
        return Err(Error::DimensionMismatch("left and right views differ in size".into()));
    }
    if pair.width() <= 2 * max_shift {
        return Err(Error::InvalidParameter(format!(
            "patch width {} must exceed twice max_shift {}",
            pair.width(),
            max_shift
        )));
    }
    let l = zero_normalize(&pair.left);
    let r = zero_normalize(&pair.right);
    let flat = |p: &Patch<T>| p.data().iter().all(|v| v.is_zero());
    if flat(&l) || flat(&r) {
        return Err(Error::Textureless);
    }
    let m = max_shift as isize;
    let scores: Vec<T> = (-m..=m).map(|delta| overlap_correlation(&l, &r, delta)).collect();
    let best = crate::contrast::argmax_first(&scores).ok_or(Error::NonFinite("correlation scores"))?;
    let offset = if best > 0 && best + 1 < scores.len() {
        quadratic_vertex(scores[best - 1], scores[best], scores[best + 1])
    } else {
        T::zero()
    };
    Ok(DisparityEstimate {
        d: T::of_usize(best) - T::of(m as f64) + offset,
        peak_scores: scores,
        subpixel_offset: offset,
    })
}

/// Ladder index of the depth implied by disparity `d` seen at focus
/// distance `g`: `1/z* = 1/g - d/C`.
pub fn index_from_disparity<T: Scalar>(ladder: &[T], g: T, d: T, c: T) -> usize {
    nearest_index(ladder, g.recip() - d / c)
}

/// Predicts the in-focus index from one dual-pixel slice taken at index `k`.
/// `center` is the patch center in normalized image coordinates.
pub fn solve_single_slice_dp<T: Scalar>(
    pair: &DualPixelPatch<T>,
    k: usize,
    cam: &CameraConfig<T>,
    center: (T, T),
    max_shift: usize,
) -> Result<usize> {
    let g = *cam
        .focus_distances_m
        .get(k)
        .ok_or_else(|| Error::InvalidParameter(format!("start index {} outside the ladder", k)))?;
    let c = lookup_c(&cam.calibration, center.0, center.1)?;
    let est = zncc_disparity(pair, max_shift)?;
    Ok(index_from_disparity(&cam.focus_distances_m, g, est.d, c))
}

/// The two depth hypotheses consistent with a measured blur radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlurCandidates<T> {
    pub blur_px: T,
    /// Root with the larger inverse depth (closer to the camera).
    pub inv_depth_near: T,
    pub inv_depth_far: T,
    pub index_near: usize,
    pub index_far: usize,
    /// The root fell outside the ladder and its index was clamped.
    pub near_clamped: bool,
    pub far_clamped: bool,
}

impl<T> BlurCandidates<T> {
    pub fn in_range_count(&self) -> usize {
        (!self.near_clamped) as usize + (!self.far_clamped) as usize
    }
}

fn blur_residual<T: Scalar>(patch: &Patch<T>, reference: &Patch<T>, b: T) -> Result<T> {
    let blurred = if b > T::zero() { gaussian_blur(reference, b * T::of(0.5))? } else { reference.clone() };
    Ok(patch.data().iter().zip(blurred.data()).map(|(&p, &q)| (p - q) * (p - q)).sum())
}

fn search_min<T: Scalar>(f: impl Fn(T) -> Result<T>, from: T, to: T, step: T) -> Result<T> {
    let mut best = (from, T::infinity());
    let mut b = from;
    while b <= to + step * T::of(1e-6) {
        let e = f(b)?;
        if e < best.1 {
            best = (b, e);
        }
        b += step;
    }
    Ok(best.0)
}

/// Blur radius (pixels) that best explains `patch` as a Gaussian blur of
/// `reference`, searched on `[0, max_blur]`.
pub fn estimate_blur_radius<T: Scalar>(patch: &Patch<T>, reference: &Patch<T>, max_blur: T) -> Result<T> {
    if !patch.same_dims(reference) {
        return Err(Error::DimensionMismatch("patch and reference differ in size".into()));
    }
    let flat = |p: &Patch<T>| zero_normalize(p).data().iter().all(|v| v.is_zero());
    if flat(patch) || flat(reference) {
        return Err(Error::Textureless);
    }
    let f = |b: T| blur_residual(patch, reference, b);
    let coarse = search_min(f, T::zero(), max_blur, T::of(BLUR_COARSE_STEP))?;
    let lo = (coarse - T::of(BLUR_COARSE_STEP)).max(T::zero());
    let hi = (coarse + T::of(BLUR_COARSE_STEP)).min(max_blur);
    search_min(f, lo, hi, T::of(BLUR_FINE_STEP))
}

/// Largest blur radius a scene inside the ladder range can produce.
fn max_ladder_blur<T: Scalar>(cam: &CameraConfig<T>) -> T {
    let inv: Vec<T> = cam.focus_distances_m.iter().map(|g| g.recip()).collect();
    let lo = inv.iter().copied().fold(T::infinity(), T::min);
    let hi = inv.iter().copied().fold(T::neg_infinity(), T::max);
    cam.focus_distances_m
        .iter()
        .map(|&g| cam.defocus_gain_px(g) * (g.recip() - lo).max(hi - g.recip()))
        .fold(T::zero(), T::max)
}

/// Both ladder indices consistent with the blur of a green-channel `patch`
/// taken at index `k`, given the sharp texture `reference`.
pub fn blur_match_candidates<T: Scalar>(
    patch: &Patch<T>,
    k: usize,
    reference: &Patch<T>,
    cam: &CameraConfig<T>,
) -> Result<BlurCandidates<T>> {
    let ladder = &cam.focus_distances_m;
    let g = *ladder.get(k).ok_or_else(|| Error::InvalidParameter(format!("start index {} outside the ladder", k)))?;
    let b = estimate_blur_radius(patch, reference, max_ladder_blur(cam) + T::one())?;
    let delta = b / cam.defocus_gain_px(g);
    let (near, far) = (g.recip() + delta, g.recip() - delta);
    let inv: Vec<T> = ladder.iter().map(|g| g.recip()).collect();
    let lo = inv.iter().copied().fold(T::infinity(), T::min);
    let hi = inv.iter().copied().fold(T::neg_infinity(), T::max);
    let outside = |v: T| v < lo || v > hi;
    Ok(BlurCandidates {
        blur_px: b,
        inv_depth_near: near,
        inv_depth_far: far,
        index_near: nearest_index(ladder, near),
        index_far: nearest_index(ladder, far),
        near_clamped: outside(near),
        far_clamped: outside(far),
    })
}

/// Single-prediction form of [`blur_match_candidates`]: always the near root.
pub fn solve_blur_match_near<T: Scalar>(
    patch: &Patch<T>,
    k: usize,
    reference: &Patch<T>,
    cam: &CameraConfig<T>,
) -> Result<usize> {
    Ok(blur_match_candidates(patch, k, reference, cam)?.index_near)
}
