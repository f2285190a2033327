//! Small-kernel filtering and summary statistics.
//!
//! Derivative-style responses are evaluated on the valid interior only:
//! positions whose stencil leaves the image carry no value and are skipped
//! by downstream sums. Blurs replicate edges.

use crate::error::{Error, Result};
use crate::patch::Patch;
use crate::scalar::Scalar;

/// Filter response on the same grid as the input, with the band of width
/// `margin_x` / `margin_y` along each border marked invalid.
#[derive(Clone, Debug)]
pub struct Response<T> {
    pub patch: Patch<T>,
    pub margin_x: usize,
    pub margin_y: usize,
}

impl<T: Scalar> Response<T> {
    pub fn interior_width(&self) -> usize {
        self.patch.width() - 2 * self.margin_x
    }

    pub fn interior_height(&self) -> usize {
        self.patch.height() - 2 * self.margin_y
    }

    pub fn interior_len(&self) -> usize {
        self.interior_width() * self.interior_height()
    }

    /// Values at valid interior positions, row-major.
    pub fn interior(&self) -> impl Iterator<Item = T> + '_ {
        let (w, h) = (self.patch.width(), self.patch.height());
        let (mx, my) = (self.margin_x, self.margin_y);
        (my..h - my).flat_map(move |y| (mx..w - mx).map(move |x| self.patch.get(x, y)))
    }
}

/// 2-D convolution with an odd-sized stencil.
pub fn convolve2d<T: Scalar>(patch: &Patch<T>, kernel: &Patch<T>) -> Result<Response<T>> {
    let (kw, kh) = (kernel.width(), kernel.height());
    if kw % 2 == 0 || kh % 2 == 0 {
        return Err(Error::EvenKernel(kw, kh));
    }
    if kw > patch.width() || kh > patch.height() {
        return Err(Error::KernelExceedsPatch);
    }
    let (rx, ry) = (kw / 2, kh / 2);
    let (w, h) = (patch.width(), patch.height());
    let mut out = Patch::zeros(w, h);
    for y in ry..h - ry {
        for x in rx..w - rx {
            let mut acc = T::zero();
            for j in 0..kh {
                for i in 0..kw {
                    // flipped kernel: true convolution
                    acc += kernel.get(kw - 1 - i, kh - 1 - j) * patch.get(x + i - rx, y + j - ry);
                }
            }
            out.set(x, y, acc);
        }
    }
    Ok(Response { patch: out, margin_x: rx, margin_y: ry })
}

/// Correlation over the positions where the kernel fits entirely inside the
/// patch. Output is `(w - kw + 1) x (h - kh + 1)`; any kernel size.
pub fn correlate_valid<T: Scalar>(patch: &Patch<T>, kernel: &Patch<T>) -> Result<Patch<T>> {
    let (kw, kh) = (kernel.width(), kernel.height());
    if kw > patch.width() || kh > patch.height() {
        return Err(Error::KernelExceedsPatch);
    }
    let (ow, oh) = (patch.width() - kw + 1, patch.height() - kh + 1);
    Ok(Patch::from_fn(ow, oh, |x, y| {
        let mut acc = T::zero();
        for j in 0..kh {
            for i in 0..kw {
                acc += kernel.get(i, j) * patch.get(x + i, y + j);
            }
        }
        acc
    }))
}

/// Normalized Gaussian taps truncated at radius `ceil(3 sigma)`.
pub fn gaussian_kernel_1d<T: Scalar>(sigma: T) -> Result<Vec<T>> {
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {}", sigma)));
    }
    let radius = (T::of(3.0) * sigma).ceil().to_usize().unwrap_or(0);
    let two_var = T::of(2.0) * sigma * sigma;
    let mut taps: Vec<T> = (0..=2 * radius)
        .map(|i| {
            let d = T::of_usize(i) - T::of_usize(radius);
            (-(d * d) / two_var).exp()
        })
        .collect();
    let total: T = taps.iter().copied().sum();
    for t in &mut taps {
        *t /= total;
    }
    Ok(taps)
}

/// Separable Gaussian blur with edge replication.
pub fn gaussian_blur<T: Scalar>(patch: &Patch<T>, sigma: T) -> Result<Patch<T>> {
    let taps = gaussian_kernel_1d(sigma)?;
    Ok(separable_replicate(patch, &taps, &taps))
}

/// Gathers `patch` through the outer product of `taps_x` and `taps_y`
/// (both centered, odd length), replicating edges.
pub fn separable_replicate<T: Scalar>(patch: &Patch<T>, taps_x: &[T], taps_y: &[T]) -> Patch<T> {
    let (w, h) = (patch.width(), patch.height());
    let rx = (taps_x.len() / 2) as isize;
    let ry = (taps_y.len() / 2) as isize;
    let mut tmp = vec![T::zero(); w * h];
    for y in 0..h {
        let row = patch.row(y);
        for x in 0..w {
            let mut acc = T::zero();
            for (i, &t) in taps_x.iter().enumerate() {
                let xi = (x as isize + i as isize - rx).clamp(0, w as isize - 1) as usize;
                acc += t * row[xi];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![T::zero(); w * h];
    for y in 0..h {
        for (j, &t) in taps_y.iter().enumerate() {
            let yj = (y as isize + j as isize - ry).clamp(0, h as isize - 1) as usize;
            let src = &tmp[yj * w..(yj + 1) * w];
            let dst = &mut out[y * w..(y + 1) * w];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += t * s;
            }
        }
    }
    Patch::from_raw(w, h, out)
}

fn pool2<T: Scalar>(patch: &Patch<T>, f: impl Fn(T, T, T, T) -> T) -> Result<Patch<T>> {
    if patch.width() < 2 || patch.height() < 2 {
        return Err(Error::KernelExceedsPatch);
    }
    Ok(Patch::from_fn(patch.width() - 1, patch.height() - 1, |x, y| {
        f(patch.get(x, y), patch.get(x + 1, y), patch.get(x, y + 1), patch.get(x + 1, y + 1))
    }))
}

/// 2x2 average pooling, stride 1, valid positions only.
pub fn box2<T: Scalar>(patch: &Patch<T>) -> Result<Patch<T>> {
    let q = T::of(0.25);
    pool2(patch, |a, b, c, d| (a + b + c + d) * q)
}

/// 2x2 max pooling, stride 1, valid positions only.
pub fn max2<T: Scalar>(patch: &Patch<T>) -> Result<Patch<T>> {
    pool2(patch, |a, b, c, d| a.max(b).max(c.max(d)))
}

/// 2x2 min pooling, stride 1, valid positions only.
pub fn min2<T: Scalar>(patch: &Patch<T>) -> Result<Patch<T>> {
    pool2(patch, |a, b, c, d| a.min(b).min(c.min(d)))
}

pub fn mean<T: Scalar>(values: impl IntoIterator<Item = T>) -> T {
    let mut n = 0usize;
    let mut acc = T::zero();
    for v in values {
        acc += v;
        n += 1;
    }
    if n == 0 {
        T::zero()
    } else {
        acc / T::of_usize(n)
    }
}

/// Population variance (denominator `n`), two-pass.
pub fn variance<T: Scalar>(values: &[T]) -> T {
    if values.is_empty() {
        return T::zero();
    }
    let mu = mean(values.iter().copied());
    let ss: T = values.iter().map(|&v| (v - mu) * (v - mu)).sum();
    ss / T::of_usize(values.len())
}
