//! Contrast (sharpness) focus measures and the argmax focal-stack solver.
//!
//! Every measure follows the core boundary policy: derivative responses are
//! summed over the valid interior, blurs replicate edges and wavelets use
//! symmetric extension. Higher scores mean sharper.

use crate::camera::MetricParams;
use crate::dct::{dct2, dct2_coefficient};
use crate::error::{Error, Result};
use crate::filter::{convolve2d, correlate_valid, gaussian_blur, mean, variance};
use crate::patch::{FocalStack, Patch};
use crate::scalar::Scalar;
use crate::wavelet::cdf97_decompose;

macro_rules! metric_ids {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $s:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, ::serde::Serialize, ::serde::Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $s),+
                }
            }
        }

        impl ::std::fmt::Display for $name {
            fn fmt(&self, f: &mut ::std::fmt::Formatter<'_>) -> ::std::fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl ::std::str::FromStr for $name {
            type Err = $crate::error::Error;

            fn from_str(s: &str) -> $crate::error::Result<Self> {
                match s {
                    $($s => Ok($name::$variant),)+
                    other => Err($crate::error::Error::InvalidParameter(format!("unknown metric id `{}`", other))),
                }
            }
        }
    };
}
pub(crate) use metric_ids;

metric_ids! {
    /// Stable identifiers of the contrast measures.
    ContrastMetricId {
        IntensityVariance => "intensity_variance",
        IntensityCoeffVariation => "intensity_coeff_variation",
        TvL1 => "tv_l1",
        TvL2 => "tv_l2",
        LaplacianEnergy => "laplacian_energy",
        LaplacianVariance => "laplacian_variance",
        SumModifiedLaplacian => "sum_modified_laplacian",
        DiagonalLaplacian => "diagonal_laplacian",
        MeanGradientMagnitude => "mean_gradient_magnitude",
        GradientCount => "gradient_count",
        GradientMagnitudeVariance => "gradient_magnitude_variance",
        PercentileRange => "percentile_range",
        HistogramEntropy => "histogram_entropy",
        DctEnergyRatio => "dct_energy_ratio",
        DctReducedEnergyRatio => "dct_reduced_energy_ratio",
        ModifiedDct => "modified_dct",
        WaveletSum => "wavelet_sum",
        WaveletVariance => "wavelet_variance",
        WaveletRatio => "wavelet_ratio",
        MeanWaveletLogRatio => "mean_wavelet_log_ratio",
        EigenvalueTrace => "eigenvalue_trace",
        MeanLocalRatio => "mean_local_ratio",
        MeanLocalLogRatio => "mean_local_log_ratio",
        MeanLocalNormDistSq => "mean_local_norm_dist_sq",
    }
}

impl ContrastMetricId {
    fn uses_sigma(self) -> bool {
        matches!(self, Self::MeanLocalRatio | Self::MeanLocalLogRatio | Self::MeanLocalNormDistSq)
    }

    fn uses_level(self) -> bool {
        matches!(self, Self::WaveletSum | Self::WaveletVariance | Self::WaveletRatio | Self::MeanWaveletLogRatio)
    }
}

/// Number of histogram bins over `[0, 1]` used by the entropy measure.
pub const HISTOGRAM_BINS: usize = 256;
/// Cell size of the eigenvalue-trace measure.
pub const EIGEN_CELL: usize = 4;

fn stencil<T: Scalar>(rows: [[f64; 3]; 3]) -> Patch<T> {
    Patch::from_fn(3, 3, |x, y| T::of(rows[y][x]))
}

fn laplace<T: Scalar>() -> Patch<T> {
    stencil([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])
}

fn modified_laplace_x<T: Scalar>() -> Patch<T> {
    stencil([[0.0, 0.0, 0.0], [-1.0, 2.0, -1.0], [0.0, 0.0, 0.0]])
}

fn diagonal_laplace<T: Scalar>(anti: bool) -> Patch<T> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    if anti {
        stencil([[0.0, 0.0, s], [0.0, -2.0 * s, 0.0], [s, 0.0, 0.0]])
    } else {
        stencil([[s, 0.0, 0.0], [0.0, -2.0 * s, 0.0], [0.0, 0.0, s]])
    }
}

fn sobel_x<T: Scalar>() -> Patch<T> {
    stencil([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
}

fn sobel_y<T: Scalar>() -> Patch<T> {
    stencil([[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]])
}

fn checkerboard<T: Scalar>() -> Patch<T> {
    Patch::from_fn(4, 4, |x, y| if (x < 2) == (y < 2) { T::one() } else { -T::one() })
}

fn sobel<T: Scalar>(patch: &Patch<T>) -> Result<(Vec<T>, Vec<T>)> {
    let gx: Vec<T> = convolve2d(patch, &sobel_x())?.interior().collect();
    let gy: Vec<T> = convolve2d(patch, &sobel_y())?.interior().collect();
    Ok((gx, gy))
}

fn ratio_or_zero<T: Scalar>(num: T, den: T) -> T {
    if den.is_zero() {
        T::zero()
    } else {
        num / den
    }
}

/// Percentile with linear interpolation between order statistics; `q` in
/// percent.
pub fn percentile<T: Scalar>(sorted: &[T], q: T) -> T {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q / T::of(100.0) * T::of_usize(n - 1);
    let lo = pos.floor().to_usize().unwrap_or(0).min(n - 1);
    let hi = (lo + 1).min(n - 1);
    let frac = pos - T::of_usize(lo);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn histogram_entropy<T: Scalar>(patch: &Patch<T>) -> T {
    let mut counts = [0usize; HISTOGRAM_BINS];
    let bins = T::of_usize(HISTOGRAM_BINS);
    for &v in patch.data() {
        let b = (v * bins).floor().to_isize().unwrap_or(0).clamp(0, HISTOGRAM_BINS as isize - 1);
        counts[b as usize] += 1;
    }
    let n = T::of_usize(patch.len());
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = T::of_usize(c) / n;
            -p * p.ln()
        })
        .sum()
}

fn eigenvalue_trace<T: Scalar>(patch: &Patch<T>) -> Result<T> {
    let (cols_x, cols_y) = (patch.width() / EIGEN_CELL, patch.height() / EIGEN_CELL);
    let m = cols_x * cols_y;
    if m == 0 {
        return Err(Error::InvalidParameter(format!("eigenvalue trace needs at least a {0}x{0} patch", EIGEN_CELL)));
    }
    if m == 1 {
        return Ok(T::zero());
    }
    let dim = EIGEN_CELL * EIGEN_CELL;
    let mut sum = vec![T::zero(); dim];
    let mut sum_sq = vec![T::zero(); dim];
    // two passes per row component: means first, then squared deviations
    for cy in 0..cols_y {
        for cx in 0..cols_x {
            for (d, s) in sum.iter_mut().enumerate() {
                *s += patch.get(cx * EIGEN_CELL + d % EIGEN_CELL, cy * EIGEN_CELL + d / EIGEN_CELL);
            }
        }
    }
    let mt = T::of_usize(m);
    let means: Vec<T> = sum.iter().map(|&s| s / mt).collect();
    for cy in 0..cols_y {
        for cx in 0..cols_x {
            for d in 0..dim {
                let v = patch.get(cx * EIGEN_CELL + d % EIGEN_CELL, cy * EIGEN_CELL + d / EIGEN_CELL) - means[d];
                sum_sq[d] += v * v;
            }
        }
    }
    Ok(sum_sq.iter().copied().sum::<T>() / T::of_usize(m - 1))
}

/// Scores `patch` with measure `id`. Higher means sharper.
pub fn contrast_score<T: Scalar>(id: ContrastMetricId, patch: &Patch<T>, params: &MetricParams<T>) -> Result<T> {
    use ContrastMetricId::*;
    if id.uses_sigma() && !(params.sigma > T::zero()) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {}", params.sigma)));
    }
    if id.uses_level() && !(1..=3).contains(&params.wavelet_level) {
        return Err(Error::InvalidParameter(format!("wavelet level must be 1, 2 or 3, got {}", params.wavelet_level)));
    }
    let n = T::of_usize(patch.len());
    let (w, h) = (patch.width(), patch.height());
    let one = T::one();
    let score = match id {
        IntensityVariance => variance(patch.data()),
        IntensityCoeffVariation => ratio_or_zero(variance(patch.data()).sqrt(), patch.mean()),
        TvL1 | TvL2 => {
            let cost = |d: T| if id == TvL1 { d.abs() } else { d * d };
            let mut acc = T::zero();
            for y in 0..h {
                for x in 0..w {
                    let v = patch.get(x, y);
                    if x + 1 < w {
                        acc += cost(v - patch.get(x + 1, y));
                    }
                    if y + 1 < h {
                        acc += cost(v - patch.get(x, y + 1));
                    }
                }
            }
            acc
        }
        LaplacianEnergy => convolve2d(patch, &laplace())?.interior().map(|d| d * d).sum(),
        LaplacianVariance => variance(&convolve2d(patch, &laplace())?.interior().collect::<Vec<_>>()),
        SumModifiedLaplacian | DiagonalLaplacian => {
            let lx = modified_laplace_x();
            let mut kernels = vec![lx.clone(), lx.transpose()];
            if id == DiagonalLaplacian {
                kernels.push(diagonal_laplace(true));
                kernels.push(diagonal_laplace(false));
            }
            let mut acc = T::zero();
            for k in &kernels {
                acc += convolve2d(patch, k)?.interior().map(|v| v.abs()).sum::<T>();
            }
            acc
        }
        MeanGradientMagnitude => {
            let (gx, gy) = sobel(patch)?;
            gx.iter().zip(&gy).map(|(&a, &b)| (a * a + b * b).sqrt()).sum::<T>() / n
        }
        GradientCount => {
            let (gx, gy) = sobel(patch)?;
            let t = params.gradient_threshold;
            let count = gx.iter().chain(&gy).filter(|g| g.abs() > t).count();
            T::of_usize(count) / n
        }
        GradientMagnitudeVariance => {
            let (gx, gy) = sobel(patch)?;
            let mags: Vec<T> = gx.iter().zip(&gy).map(|(&a, &b)| (a * a + b * b).sqrt()).collect();
            variance(&mags)
        }
        PercentileRange => {
            let p = params.percentile;
            if !(p >= T::zero() && p < T::of(50.0)) {
                return Err(Error::InvalidParameter(format!("percentile must lie in [0, 50), got {}", p)));
            }
            let mut sorted = patch.data().to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite patch"));
            percentile(&sorted, T::of(100.0) - p) - percentile(&sorted, p)
        }
        HistogramEntropy => histogram_entropy(patch),
        DctEnergyRatio => {
            let d = dct2(patch);
            let dc2 = d.get(0, 0) * d.get(0, 0);
            let total: T = d.data().iter().map(|&c| c * c).sum();
            ratio_or_zero(total - dc2, dc2)
        }
        DctReducedEnergyRatio => {
            if w < 3 || h < 3 {
                return Err(Error::InvalidParameter("reduced DCT ratio needs a 3x3 patch".into()));
            }
            let dc = dct2_coefficient(patch, 0, 0);
            let low: T = [(0, 1), (1, 0), (0, 2), (1, 1), (2, 0)]
                .iter()
                .map(|&(u, v)| {
                    let c = dct2_coefficient(patch, u, v);
                    c * c
                })
                .sum();
            ratio_or_zero(low, dc * dc)
        }
        ModifiedDct => correlate_valid(patch, &checkerboard())?.data().iter().copied().sum(),
        WaveletSum | WaveletVariance | WaveletRatio | MeanWaveletLogRatio => {
            let b = cdf97_decompose(patch, params.wavelet_level)?;
            match id {
                WaveletSum => b.details().iter().flat_map(|d| d.data()).map(|v| v.abs()).sum(),
                WaveletVariance => b.details().iter().map(|d| variance(d.data())).sum(),
                WaveletRatio => {
                    let hi: T = b.details().iter().flat_map(|d| d.data()).map(|&v| v * v).sum();
                    let lo: T = b.ll.data().iter().map(|&v| v * v).sum();
                    ratio_or_zero(hi, lo)
                }
                _ => {
                    let cw = b.ll.width().min(b.lh.width()).min(b.hl.width()).min(b.hh.width());
                    let ch = b.ll.height().min(b.lh.height()).min(b.hl.height()).min(b.hh.height());
                    let mut acc = T::zero();
                    for y in 0..ch {
                        for x in 0..cw {
                            let (lh, hl, hh, ll) = (b.lh.get(x, y), b.hl.get(x, y), b.hh.get(x, y), b.ll.get(x, y));
                            acc += ((lh * lh + hl * hl + hh * hh) / (ll * ll + one)).ln();
                        }
                    }
                    acc / T::of_usize(cw * ch)
                }
            }
        }
        EigenvalueTrace => eigenvalue_trace(patch)?,
        MeanLocalRatio | MeanLocalLogRatio | MeanLocalNormDistSq => {
            let blurred = gaussian_blur(patch, params.sigma)?;
            let pairs = patch.data().iter().zip(blurred.data());
            match id {
                MeanLocalRatio => mean(pairs.map(|(&i, &b)| {
                    let r = (i + one) / (b + one);
                    r.max(r.recip())
                })),
                MeanLocalLogRatio => mean(pairs.map(|(&i, &b)| ((i + one) / (b + one)).ln().abs())).exp(),
                _ => mean(pairs.map(|(&i, &b)| (i - b) * (i - b) / (b * b + one))),
            }
        }
    };
    Ok(score)
}

/// Index of the first maximum; `NaN` scores never win.
pub fn argmax_first<T: Scalar>(scores: &[T]) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (k, &s) in scores.iter().enumerate() {
        if s.is_nan() {
            continue;
        }
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((k, s)),
        }
    }
    best.map(|(k, _)| k)
}

/// Scores every slice of the green-channel stack.
pub fn contrast_curve<T: Scalar>(
    id: ContrastMetricId,
    stack: &FocalStack<T>,
    params: &MetricParams<T>,
) -> Result<Vec<T>> {
    (0..stack.len()).map(|k| contrast_score(id, &stack.green(k), params)).collect()
}

/// Focal-stack solver: the slice with the highest score, lower index on ties.
pub fn solve_focal_stack_contrast<T: Scalar>(
    id: ContrastMetricId,
    stack: &FocalStack<T>,
    params: &MetricParams<T>,
) -> Result<usize> {
    if stack.is_empty() {
        return Err(Error::EmptyStack);
    }
    let scores = contrast_curve(id, stack, params)?;
    argmax_first(&scores).ok_or(Error::NonFinite("contrast scores"))
}
