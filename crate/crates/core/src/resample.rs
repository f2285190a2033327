//! Zoom-about-center resampling.

use crate::patch::Patch;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interpolation {
    Bilinear,
    /// Catmull-Rom cubic convolution.
    Cubic,
}

fn bilinear<T: Scalar>(p: &Patch<T>, x: T, y: T) -> T {
    let (x0, y0) = (x.floor(), y.floor());
    let (tx, ty) = (x - x0, y - y0);
    let (xi, yi) = (x0.to_isize().unwrap_or(0), y0.to_isize().unwrap_or(0));
    let one = T::one();
    let top = p.get_clamped(xi, yi) * (one - tx) + p.get_clamped(xi + 1, yi) * tx;
    let bottom = p.get_clamped(xi, yi + 1) * (one - tx) + p.get_clamped(xi + 1, yi + 1) * tx;
    top * (one - ty) + bottom * ty
}

fn cubic_weights<T: Scalar>(t: T) -> [T; 4] {
    let (t2, t3) = (t * t, t * t * t);
    let h = T::of(0.5);
    [
        h * (-t3 + T::of(2.0) * t2 - t),
        h * (T::of(3.0) * t3 - T::of(5.0) * t2 + T::of(2.0)),
        h * (-T::of(3.0) * t3 + T::of(4.0) * t2 + t),
        h * (t3 - t2),
    ]
}

fn cubic<T: Scalar>(p: &Patch<T>, x: T, y: T) -> T {
    let (x0, y0) = (x.floor(), y.floor());
    let (wx, wy) = (cubic_weights(x - x0), cubic_weights(y - y0));
    let (xi, yi) = (x0.to_isize().unwrap_or(0), y0.to_isize().unwrap_or(0));
    let mut acc = T::zero();
    for (j, &b) in wy.iter().enumerate() {
        let mut row = T::zero();
        for (i, &a) in wx.iter().enumerate() {
            row += a * p.get_clamped(xi + i as isize - 1, yi + j as isize - 1);
        }
        acc += b * row;
    }
    acc
}

/// Samples `patch` at `c + (x - c) * factor` for every output pixel, where
/// `c` is the patch center. `factor < 1` magnifies the content. Coordinates
/// outside the patch are clamped to the border.
pub fn zoom_about_center<T: Scalar>(patch: &Patch<T>, factor: T, interp: Interpolation) -> Patch<T> {
    if factor == T::one() {
        return patch.clone();
    }
    let cx = T::of_usize(patch.width() - 1) * T::of(0.5);
    let cy = T::of_usize(patch.height() - 1) * T::of(0.5);
    Patch::from_fn(patch.width(), patch.height(), |x, y| {
        let sx = cx + (T::of_usize(x) - cx) * factor;
        let sy = cy + (T::of_usize(y) - cy) * factor;
        match interp {
            Interpolation::Bilinear => bilinear(patch, sx, sy),
            Interpolation::Cubic => cubic(patch, sx, sy),
        }
    })
}
