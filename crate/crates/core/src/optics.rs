//! Thin-lens dual-pixel focal-stack renderer.
//!
//! Each source pixel is splatted through its own defocus PSF. The left and
//! right views use the two halves of the PSF (split on the vertical axis),
//! positioned so their centroids sit at `-d/2` and `+d/2` for the signed
//! disparity `d`. The scene is extended past the patch border by
//! half-sample reflection before blurring, so constant regions stay
//! constant and the mean of the two views equals the texture mean.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::CameraConfig;
use crate::error::{Error, Result};
use crate::patch::{nearest_index, DualPixelPatch, FocalStack, Patch};
use crate::resample::{zoom_about_center, Interpolation};
use crate::scalar::Scalar;

/// Blur radii below this render as the identity.
pub const MIN_BLUR_RADIUS_PX: f64 = 0.25;
/// PSFs are cached per signed radius quantized to this step.
pub const RADIUS_QUANTUM_PX: f64 = 1.0 / 16.0;
/// Minimum supersampling factor per axis for disc and hexagon PSFs; small
/// radii use more so that at least 64 subsamples span the radius.
pub const SUPERSAMPLING: usize = 4;
const GAUSS_SUPERSAMPLING: usize = 256;
/// Valid scene depth range, meters.
pub const DEPTH_RANGE_M: (f64, f64) = (0.05, 100.0);

fn check_focus<T: Scalar>(cam: &CameraConfig<T>, g: T) -> Result<()> {
    if !(g > cam.focal_length_m) {
        return Err(Error::FocusInsideFocalLength);
    }
    Ok(())
}

fn check_depth<T: Scalar>(z: T) -> Result<()> {
    if !(z > T::zero()) || !z.is_finite() {
        return Err(Error::InvalidParameter(format!("depth must be positive, got {}", z)));
    }
    Ok(())
}

/// Signed defocus `L f / (1 - f/g) * (1/g - 1/Z) / pitch`, pixels.
pub fn signed_defocus_px<T: Scalar>(cam: &CameraConfig<T>, g: T, z: T) -> Result<T> {
    check_focus(cam, g)?;
    check_depth(z)?;
    Ok(cam.defocus_gain_px(g) * (g.recip() - z.recip()))
}

/// Blur-circle radius in pixels.
pub fn blur_radius<T: Scalar>(cam: &CameraConfig<T>, g: T, z: T) -> Result<T> {
    Ok(signed_defocus_px(cam, g, z)?.abs())
}

/// Signed left/right disparity in pixels; positive behind the focal plane.
pub fn dp_disparity_true<T: Scalar>(cam: &CameraConfig<T>, g: T, z: T) -> Result<T> {
    Ok(cam.alpha * signed_defocus_px(cam, g, z)?)
}

/// Lens-to-sensor distance `f g / (g - f)`.
pub fn image_distance<T: Scalar>(cam: &CameraConfig<T>, g: T) -> Result<T> {
    check_focus(cam, g)?;
    let f = cam.focal_length_m;
    Ok(f * g / (g - f))
}

/// Magnification of focus `g` relative to focus `g_ref`.
pub fn breathing_scale<T: Scalar>(cam: &CameraConfig<T>, g: T, g_ref: T) -> Result<T> {
    Ok(image_distance(cam, g)? / image_distance(cam, g_ref)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsfShape {
    /// Gaussian with standard deviation half the blur radius.
    Gaussian,
    Disc,
    /// Regular hexagon with circumradius equal to the blur radius.
    Hexagon,
}

impl std::str::FromStr for PsfShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "disc" => Ok(Self::Disc),
            "hexagon" => Ok(Self::Hexagon),
            other => Err(Error::InvalidParameter(format!("unknown PSF shape `{}`", other))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimOptions {
    pub psf_shape: PsfShape,
    /// Standard deviation of additive Gaussian read noise.
    pub noise_sigma: f64,
    pub focal_breathing: bool,
    /// Clip to `[0, 1]` after blur and noise.
    pub saturate: bool,
    /// Store left/right views; otherwise only their mean.
    pub dual_pixel: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            psf_shape: PsfShape::Gaussian,
            noise_sigma: 0.0,
            focal_breathing: false,
            saturate: true,
            dual_pixel: true,
        }
    }
}

impl SimOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("noise sigma must be nonnegative, got {}", self.noise_sigma)));
        }
        Ok(())
    }
}

/// In-focus radiance and per-pixel depth.
#[derive(Clone, Debug)]
pub struct Scene<T> {
    /// May exceed 1; values above 1 saturate when clipping is on.
    pub texture: Patch<T>,
    pub depth_map: Patch<T>,
    pub seed: u64,
}

impl<T: Scalar> Scene<T> {
    pub fn new(texture: Patch<T>, depth_map: Patch<T>, seed: u64) -> Result<Self> {
        let scene = Self { texture, depth_map, seed };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.texture.same_dims(&self.depth_map) {
            return Err(Error::DimensionMismatch("texture and depth map differ in size".into()));
        }
        let (lo, hi) = (T::of(DEPTH_RANGE_M.0), T::of(DEPTH_RANGE_M.1));
        if self.depth_map.data().iter().any(|&z| !(z >= lo && z <= hi)) {
            return Err(Error::InvalidParameter(format!(
                "depths must lie in [{}, {}] m",
                DEPTH_RANGE_M.0, DEPTH_RANGE_M.1
            )));
        }
        Ok(())
    }

    /// Median depth (mean of the two middle values for even counts).
    pub fn median_depth(&self) -> T {
        let mut z = self.depth_map.data().to_vec();
        z.sort_by(|a, b| a.partial_cmp(b).expect("finite depths"));
        let n = z.len();
        if n % 2 == 1 {
            z[n / 2]
        } else {
            (z[n / 2 - 1] + z[n / 2]) * T::of(0.5)
        }
    }
}

/// Index of the focus distance nearest to the median scene depth in
/// inverse depth.
pub fn ground_truth_index<T: Scalar>(scene: &Scene<T>, ladder: &[T]) -> usize {
    nearest_index(ladder, scene.median_depth().recip())
}

/// 1-D taps starting at `offset` relative to the source pixel.
#[derive(Clone, Debug)]
struct Taps {
    offset: isize,
    w: Vec<f64>,
}

impl Taps {
    fn identity() -> Self {
        Self { offset: 0, w: vec![1.0] }
    }

    fn end(&self) -> isize {
        self.offset + self.w.len() as isize
    }
}

/// 2-D kernel with top-left corner at `(x0, y0)` relative to the source.
#[derive(Clone, Debug)]
struct Kernel2 {
    x0: isize,
    y0: isize,
    w: usize,
    h: usize,
    data: Vec<f64>,
}

#[derive(Clone, Debug)]
enum ViewKernels {
    Separable { left: Taps, right: Taps, y: Taps },
    Dense { left: Kernel2, right: Kernel2 },
}

impl ViewKernels {
    /// Largest reach of any tap from its source pixel.
    fn reach(&self) -> usize {
        let taps = |t: &Taps| t.offset.unsigned_abs().max(t.end().unsigned_abs());
        let dense = |k: &Kernel2| {
            k.x0.unsigned_abs()
                .max((k.x0 + k.w as isize).unsigned_abs())
                .max(k.y0.unsigned_abs())
                .max((k.y0 + k.h as isize).unsigned_abs())
        };
        match self {
            Self::Separable { left, right, y } => taps(left).max(taps(right)).max(taps(y)),
            Self::Dense { left, right } => dense(left).max(dense(right)),
        }
    }
}

fn inside_hexagon(u: f64, v: f64, r: f64) -> bool {
    let s3 = 3f64.sqrt();
    v.abs() <= 0.5 * s3 * r && s3 * u.abs() + v.abs() <= s3 * r
}

/// Splats weighted 1-D samples bilinearly onto integer taps, offset by
/// `shift`. Bilinear splatting keeps mass and first moment exact.
fn splat_1d(samples: &[(f64, f64)], shift: f64) -> Taps {
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min) + shift;
    let hi = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max) + shift;
    let offset = lo.floor() as isize;
    let mut w = vec![0.0; (hi.floor() as isize - offset + 2) as usize];
    for &(u, m) in samples {
        let x = u + shift;
        let i = x.floor();
        let f = x - i;
        let j = (i as isize - offset) as usize;
        w[j] += m * (1.0 - f);
        w[j + 1] += m * f;
    }
    let total: f64 = w.iter().sum();
    for t in &mut w {
        *t /= total;
    }
    Taps { offset, w }
}

/// Half (`side * u > 0`) of the 1-D Gaussian truncated at 3 sigma, with its
/// centroid at `target`.
fn half_gaussian_taps(sigma: f64, side: f64, target: f64) -> Taps {
    let reach = 3.0 * sigma;
    let step = (1.0 / GAUSS_SUPERSAMPLING as f64).min(reach / 64.0);
    let n = (reach / step).ceil() as usize;
    let samples: Vec<(f64, f64)> = (0..n)
        .map(|a| {
            let u = side * (a as f64 + 0.5) * step;
            (u, (-u * u / (2.0 * sigma * sigma)).exp())
        })
        .collect();
    let mass: f64 = samples.iter().map(|s| s.1).sum();
    let c = samples.iter().map(|s| s.0 * s.1).sum::<f64>() / mass;
    splat_1d(&samples, target - c)
}

fn full_gaussian_taps(sigma: f64) -> Taps {
    let reach = 3.0 * sigma;
    let step = (1.0 / GAUSS_SUPERSAMPLING as f64).min(reach / 64.0);
    let n = (reach / step).ceil() as usize;
    let samples: Vec<(f64, f64)> = (0..2 * n)
        .map(|a| {
            let u = (a as f64 + 0.5 - n as f64) * step;
            (u, (-u * u / (2.0 * sigma * sigma)).exp())
        })
        .collect();
    splat_1d(&samples, 0.0)
}

#[cfg(test)]
fn taps_centroid(t: &Taps) -> f64 {
    t.w.iter().enumerate().map(|(i, &w)| (t.offset + i as isize) as f64 * w).sum()
}

/// Half-shape (`side * u > 0`) of a disc or hexagon of radius `r`, with its
/// horizontal centroid at `target`. Subsamples are splatted bilinearly.
fn half_shape_kernel(shape: PsfShape, r: f64, side: f64, target: f64) -> Kernel2 {
    let step = (1.0 / SUPERSAMPLING as f64).min(r / 64.0);
    let (nu, nv) = ((r / step).ceil() as usize, (2.0 * r / step).ceil() as usize);
    let mut pts = Vec::new();
    for b in 0..nv {
        let v = (b as f64 + 0.5) * step - 0.5 * nv as f64 * step;
        for a in 0..nu {
            let u = side * (a as f64 + 0.5) * step;
            let inside = match shape {
                PsfShape::Hexagon => inside_hexagon(u, v, r),
                _ => u * u + v * v <= r * r,
            };
            if inside {
                pts.push((u, v));
            }
        }
    }
    let cu = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let shift = target - cu;
    let x_lo = (pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min) + shift).floor() as isize;
    let x_hi = (pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max) + shift).floor() as isize + 1;
    let y_lo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).floor() as isize;
    let y_hi = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).floor() as isize + 1;
    let (w, h) = ((x_hi - x_lo + 1) as usize, (y_hi - y_lo + 1) as usize);
    let mut data = vec![0.0; w * h];
    let m = 1.0 / pts.len() as f64;
    for &(u, v) in &pts {
        let (x, y) = (u + shift, v);
        let (xi, yi) = (x.floor(), y.floor());
        let (fx, fy) = (x - xi, y - yi);
        let (i, j) = ((xi as isize - x_lo) as usize, (yi as isize - y_lo) as usize);
        data[j * w + i] += m * (1.0 - fx) * (1.0 - fy);
        data[j * w + i + 1] += m * fx * (1.0 - fy);
        data[(j + 1) * w + i] += m * (1.0 - fx) * fy;
        data[(j + 1) * w + i + 1] += m * fx * fy;
    }
    Kernel2 { x0: x_lo, y0: y_lo, w, h, data }
}

#[cfg(test)]
fn kernel_centroid_x(k: &Kernel2) -> f64 {
    let mut acc = 0.0;
    for j in 0..k.h {
        for i in 0..k.w {
            acc += (k.x0 + i as isize) as f64 * k.data[j * k.w + i];
        }
    }
    acc
}

/// Left/right kernels for signed defocus `s` (pixels) and disparity `d`.
fn view_kernels(shape: PsfShape, s: f64, d: f64) -> ViewKernels {
    let r = s.abs();
    if r < MIN_BLUR_RADIUS_PX {
        return match shape {
            PsfShape::Gaussian => {
                ViewKernels::Separable { left: Taps::identity(), right: Taps::identity(), y: Taps::identity() }
            }
            _ => {
                let id = Kernel2 { x0: 0, y0: 0, w: 1, h: 1, data: vec![1.0] };
                ViewKernels::Dense { left: id.clone(), right: id }
            }
        };
    }
    // each half lies on the side of its target centroid
    let (tl, tr) = (-0.5 * d, 0.5 * d);
    let side = |t: f64, default: f64| {
        if t > 0.0 {
            1.0
        } else if t < 0.0 {
            -1.0
        } else {
            default
        }
    };
    let (sl, sr) = (side(tl, -1.0), side(tr, 1.0));
    match shape {
        PsfShape::Gaussian => {
            let sigma = 0.5 * r;
            ViewKernels::Separable {
                left: half_gaussian_taps(sigma, sl, tl),
                right: half_gaussian_taps(sigma, sr, tr),
                y: full_gaussian_taps(sigma),
            }
        }
        _ => {
            ViewKernels::Dense { left: half_shape_kernel(shape, r, sl, tl), right: half_shape_kernel(shape, r, sr, tr) }
        }
    }
}

/// Scatter accumulator padded by `pad` on every side.
struct Canvas {
    pad: usize,
    stride: usize,
    data: Vec<f64>,
}

impl Canvas {
    fn new(w: usize, h: usize, pad: usize) -> Self {
        let stride = w + 2 * pad;
        Self { pad, stride, data: vec![0.0; stride * (h + 2 * pad)] }
    }

    #[inline]
    fn index(&self, x: isize, y: isize) -> usize {
        (y + self.pad as isize) as usize * self.stride + (x + self.pad as isize) as usize
    }

    /// The `w' x h'` window starting `margin` pixels into the canvas.
    fn crop<T: Scalar>(&self, margin: usize, w: usize, h: usize) -> Patch<T> {
        let m = margin as isize;
        Patch::from_fn(w, h, |x, y| T::of(self.data[self.index(x as isize + m, y as isize + m)]))
    }
}

/// Half-sample symmetric reflection of `i` into `0..n`.
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m >= n as isize {
        (period - 1 - m) as usize
    } else {
        m as usize
    }
}

fn scatter_dense(canvas: &mut Canvas, tex: &[f64], w: usize, pixels: &[usize], k: &Kernel2) {
    for &p in pixels {
        let v = tex[p];
        if v == 0.0 {
            continue;
        }
        let (x, y) = ((p % w) as isize, (p / w) as isize);
        for j in 0..k.h {
            let base = canvas.index(x + k.x0, y + k.y0 + j as isize);
            let row = &k.data[j * k.w..(j + 1) * k.w];
            for (dst, &kv) in canvas.data[base..base + k.w].iter_mut().zip(row) {
                *dst += v * kv;
            }
        }
    }
}

fn scatter_separable(canvas: &mut Canvas, tex: &[f64], w: usize, pixels: &[usize], tx: &Taps, ty: &Taps) {
    let (mut y_lo, mut y_hi) = (usize::MAX, 0usize);
    for &p in pixels {
        y_lo = y_lo.min(p / w);
        y_hi = y_hi.max(p / w);
    }
    let stride = canvas.stride;
    let pad = canvas.pad as isize;
    let rows = y_hi - y_lo + 1;
    // horizontal pass into padded rows, then vertical pass onto the canvas
    let mut tmp = vec![0.0; rows * stride];
    let (mut c_lo, mut c_hi) = (usize::MAX, 0usize);
    for &p in pixels {
        let v = tex[p];
        let (x, y) = ((p % w) as isize, p / w);
        let start = (x + tx.offset + pad) as usize;
        c_lo = c_lo.min(start);
        c_hi = c_hi.max(start + tx.w.len());
        let row = &mut tmp[(y - y_lo) * stride..(y - y_lo + 1) * stride];
        for (dst, &kv) in row[start..start + tx.w.len()].iter_mut().zip(&tx.w) {
            *dst += v * kv;
        }
    }
    for r in 0..rows {
        let src = &tmp[r * stride + c_lo..r * stride + c_hi];
        for (j, &kv) in ty.w.iter().enumerate() {
            let yy = ((y_lo + r) as isize + ty.offset + j as isize + pad) as usize;
            let dst = &mut canvas.data[yy * stride + c_lo..yy * stride + c_hi];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += kv * s;
            }
        }
    }
}

/// Blurred left and right views of `tex` for one focus setting. `groups`
/// maps a quantized signed defocus to its pixels. The texture and its
/// defocus are first extended by half-sample reflection, wide enough that
/// every output pixel sees a full PSF footprint; the one-sided view kernels
/// would otherwise leave bright and dark bands at the borders.
fn render_views<T: Scalar>(
    tex: &[f64],
    w: usize,
    h: usize,
    groups: &BTreeMap<i64, Vec<usize>>,
    shape: PsfShape,
    alpha: f64,
) -> (Patch<T>, Patch<T>) {
    let kernels: Vec<ViewKernels> = groups
        .keys()
        .map(|&q| {
            let s = q as f64 * RADIUS_QUANTUM_PX;
            view_kernels(shape, s, alpha * s)
        })
        .collect();
    let pad = kernels.iter().map(ViewKernels::reach).max().unwrap_or(0) + 1;
    let mut group_of = vec![0usize; w * h];
    for (g, px) in groups.values().enumerate() {
        for &p in px {
            group_of[p] = g;
        }
    }
    let (we, he) = (w + 2 * pad, h + 2 * pad);
    let mut tex_ext = vec![0.0; we * he];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); kernels.len()];
    for ye in 0..he {
        let y = reflect(ye as isize - pad as isize, h);
        for xe in 0..we {
            let src = y * w + reflect(xe as isize - pad as isize, w);
            tex_ext[ye * we + xe] = tex[src];
            members[group_of[src]].push(ye * we + xe);
        }
    }
    let mut left = Canvas::new(we, he, pad);
    let mut right = Canvas::new(we, he, pad);
    for (k, px) in kernels.iter().zip(&members) {
        match k {
            ViewKernels::Separable { left: lx, right: rx, y } => {
                scatter_separable(&mut left, &tex_ext, we, px, lx, y);
                scatter_separable(&mut right, &tex_ext, we, px, rx, y);
            }
            ViewKernels::Dense { left: lk, right: rk } => {
                scatter_dense(&mut left, &tex_ext, we, px, lk);
                scatter_dense(&mut right, &tex_ext, we, px, rk);
            }
        }
    }
    (left.crop(pad, w, h), right.crop(pad, w, h))
}

/// Noise stream for slice `k`; `side` 0 is the left (or mono) view.
fn noise_rng(seed: u64, k: usize, side: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * k as u64 + side);
    rng
}

fn add_noise<T: Scalar>(p: &mut Patch<T>, sigma: f64, rng: &mut ChaCha8Rng) {
    if sigma == 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sigma).expect("valid noise sigma");
    for v in p.data_mut() {
        *v += T::of(normal.sample(rng));
    }
}

/// Renders one slice of the stack.
fn render_slice<T: Scalar>(
    scene: &Scene<T>,
    cam: &CameraConfig<T>,
    opts: &SimOptions,
    k: usize,
    tex: &[f64],
) -> Result<DualPixelPatch<T>> {
    let (w, h) = (scene.texture.width(), scene.texture.height());
    let g = cam.focus_distances_m[k];
    let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (p, &z) in scene.depth_map.data().iter().enumerate() {
        let s = signed_defocus_px(cam, g, z)?.as_f64();
        groups.entry((s / RADIUS_QUANTUM_PX).round() as i64).or_default().push(p);
    }
    let (mut left, mut right) = render_views::<T>(tex, w, h, &groups, opts.psf_shape, cam.alpha.as_f64());
    if opts.focal_breathing {
        let s = breathing_scale(cam, g, cam.farthest_focus_m())?;
        left = zoom_about_center(&left, s.recip(), Interpolation::Cubic);
        right = zoom_about_center(&right, s.recip(), Interpolation::Cubic);
    }
    let finish = |mut p: Patch<T>, side: u64| {
        add_noise(&mut p, opts.noise_sigma, &mut noise_rng(scene.seed, k, side));
        if opts.saturate {
            p.clamp01()
        } else {
            p
        }
    };
    if opts.dual_pixel {
        Ok(DualPixelPatch { left: finish(left, 0), right: finish(right, 1) })
    } else {
        let green = left.zip_map(&right, |a, b| (a + b) * T::of(0.5))?;
        Ok(DualPixelPatch::mono(finish(green, 0)))
    }
}

/// Renders the focal stack of `scene` over the camera's focus ladder.
/// Slices render in parallel on the current rayon pool; the result does not
/// depend on the worker count.
pub fn render_stack<T: Scalar>(scene: &Scene<T>, cam: &CameraConfig<T>, opts: &SimOptions) -> Result<FocalStack<T>> {
    scene.validate()?;
    cam.validate()?;
    opts.validate()?;
    if cam.focus_distances_m.is_empty() {
        return Err(Error::EmptyStack);
    }
    let tex: Vec<f64> = scene.texture.data().iter().map(|v| v.as_f64()).collect();
    let slices = (0..cam.focus_distances_m.len())
        .into_par_iter()
        .map(|k| render_slice(scene, cam, opts, k, &tex))
        .collect::<Result<Vec<_>>>()?;
    let gt = ground_truth_index(scene, &cam.focus_distances_m);
    let mut stack = FocalStack::new(slices, cam.focus_distances_m.clone(), Some(gt), opts.dual_pixel)?;
    stack.focal_breathing = opts.focal_breathing;
    Ok(stack)
}
