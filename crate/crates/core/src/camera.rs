//! Camera description, calibration table and metric parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::patch::validate_ladder;
use crate::scalar::Scalar;

/// Number of slices in the default focus ladder.
pub const DEFAULT_SLICES: usize = 49;
/// Nearest focus distance of the default ladder, meters.
pub const DEFAULT_NEAR_M: f64 = 0.102;
/// Farthest focus distance of the default ladder, meters.
pub const DEFAULT_FAR_M: f64 = 3.91;

/// `n` focus distances spaced uniformly in inverse depth from `near_m`
/// (index 0) to `far_m` (index `n - 1`).
pub fn inverse_depth_ladder<T: Scalar>(n: usize, near_m: f64, far_m: f64) -> Vec<T> {
    if n == 1 {
        return vec![T::of(near_m)];
    }
    let (a, b) = (1.0 / near_m, 1.0 / far_m);
    (0..n)
        .map(|k| {
            let t = k as f64 / (n - 1) as f64;
            T::of(1.0 / (a + (b - a) * t))
        })
        .collect()
}

/// Low-resolution table of disparity gains `C` over normalized image
/// coordinates, stored row-major with `grid_w` columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationGrid<T> {
    pub grid_w: usize,
    pub grid_h: usize,
    pub values: Vec<T>,
}

impl<T: Scalar> CalibrationGrid<T> {
    pub fn new(grid_w: usize, grid_h: usize, values: Vec<T>) -> Result<Self> {
        let grid = Self { grid_w, grid_h, values };
        grid.validate()?;
        Ok(grid)
    }

    pub fn constant(value: T) -> Self {
        Self { grid_w: 2, grid_h: 2, values: vec![value; 4] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_w == 0 || self.grid_h == 0 || self.values.len() != self.grid_w * self.grid_h {
            return Err(Error::DimensionMismatch(format!(
                "calibration grid {}x{} with {} values",
                self.grid_w,
                self.grid_h,
                self.values.len()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite() || v.is_zero()) {
            return Err(Error::InvalidParameter("calibration values must be finite and nonzero".into()));
        }
        Ok(())
    }

    fn node(&self, i: usize, j: usize) -> T {
        self.values[j * self.grid_w + i]
    }

    /// Bilinear interpolation of the table at normalized coordinates
    /// `(x, y)` in `[0, 1]^2`. Nodes sit at `i / (grid_w - 1)`.
    pub fn lookup(&self, x: T, y: T) -> Result<T> {
        let (zero, one) = (T::zero(), T::one());
        if !(x >= zero && x <= one && y >= zero && y <= one) {
            return Err(Error::OutOfRange(x.as_f64(), y.as_f64()));
        }
        let axis = |t: T, n: usize| -> (usize, usize, T) {
            if n == 1 {
                return (0, 0, zero);
            }
            let pos = t * T::of_usize(n - 1);
            let i0 = pos.floor().to_usize().unwrap_or(0).min(n - 2);
            (i0, i0 + 1, pos - T::of_usize(i0))
        };
        let (i0, i1, tx) = axis(x, self.grid_w);
        let (j0, j1, ty) = axis(y, self.grid_h);
        let top = self.node(i0, j0) * (one - tx) + self.node(i1, j0) * tx;
        let bottom = self.node(i0, j1) * (one - tx) + self.node(i1, j1) * tx;
        Ok(top * (one - ty) + bottom * ty)
    }
}

/// Thin-lens camera with a dual-pixel sensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraConfig<T> {
    /// Aperture size `L`, meters.
    pub aperture_m: T,
    /// Focal length `f`, meters.
    pub focal_length_m: T,
    /// Dual-pixel disparity gain.
    pub alpha: T,
    /// Meters per pixel on the sensor.
    pub pixel_pitch_m: T,
    pub focus_distances_m: Vec<T>,
    pub calibration: CalibrationGrid<T>,
}

impl<T: Scalar> Default for CameraConfig<T> {
    /// Phone-class lens (4.44 mm, f/1.8) imaged at a 5.6 um effective pitch,
    /// which gives roughly 2 px of blur radius per diopter of defocus.
    fn default() -> Self {
        let mut cam = Self {
            aperture_m: T::of(4.44e-3 / 1.8),
            focal_length_m: T::of(4.44e-3),
            alpha: T::of(0.35),
            pixel_pitch_m: T::of(5.6e-6),
            focus_distances_m: inverse_depth_ladder(DEFAULT_SLICES, DEFAULT_NEAR_M, DEFAULT_FAR_M),
            calibration: CalibrationGrid::constant(T::one()),
        };
        cam.calibration = CalibrationGrid::constant(cam.analytic_calibration(cam.reference_focus_m()));
        cam
    }
}

impl<T: Scalar> CameraConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.aperture_m > T::zero()) || !(self.pixel_pitch_m > T::zero()) {
            return Err(Error::InvalidParameter("aperture and pixel pitch must be positive".into()));
        }
        if !(self.focal_length_m > T::zero()) || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter("focal length must be positive, alpha finite".into()));
        }
        validate_ladder(&self.focus_distances_m)?;
        let min_g = self.focus_distances_m.iter().copied().fold(T::infinity(), T::min);
        if !(self.focal_length_m < min_g) {
            return Err(Error::FocusInsideFocalLength);
        }
        self.calibration.validate()
    }

    /// Replaces the ladder, keeping everything else.
    pub fn with_ladder(mut self, focus_distances_m: Vec<T>) -> Self {
        self.focus_distances_m = focus_distances_m;
        self
    }

    /// Recomputes the calibration table from the optics (constant grid).
    pub fn with_analytic_calibration(mut self) -> Self {
        self.calibration = CalibrationGrid::constant(self.analytic_calibration(self.reference_focus_m()));
        self
    }

    /// Defocus-to-pixels gain `L f / ((1 - f/g) pitch)` at focus distance `g`.
    pub fn defocus_gain_px(&self, g: T) -> T {
        let f = self.focal_length_m;
        self.aperture_m * f / ((T::one() - f / g) * self.pixel_pitch_m)
    }

    /// Disparity gain `C` that maps inverse-depth offsets to pixels at focus
    /// distance `g`, consistent with the renderer.
    pub fn analytic_calibration(&self, g: T) -> T {
        self.alpha * self.defocus_gain_px(g)
    }

    /// Focus distance at the inverse-depth midpoint of the ladder.
    pub fn reference_focus_m(&self) -> T {
        let g = &self.focus_distances_m;
        let mid = (g[0].recip() + g[g.len() - 1].recip()) * T::of(0.5);
        mid.recip()
    }

    /// Focus distance with the widest field of view (largest `g`).
    pub fn farthest_focus_m(&self) -> T {
        self.focus_distances_m.iter().copied().fold(T::neg_infinity(), T::max)
    }
}

/// Parameters of the parameterized focus measures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricParams<T> {
    /// Gaussian scale of the local-ratio measures, pixels.
    pub sigma: T,
    /// Wavelet decomposition level (1..=3).
    pub wavelet_level: usize,
    /// Sobel magnitude threshold of the gradient count.
    pub gradient_threshold: T,
    /// Percentile of the percentile range, in percent.
    pub percentile: T,
    /// Closeness threshold of the ternary census, in units of the
    /// zero-normalized image.
    pub ternary_epsilon: T,
}

impl<T: Scalar> Default for MetricParams<T> {
    fn default() -> Self {
        Self {
            sigma: T::of(2.0),
            wavelet_level: 2,
            gradient_threshold: T::of(10.0 / 255.0),
            percentile: T::one(),
            ternary_epsilon: T::of(0.1),
        }
    }
}

impl<T: Scalar> MetricParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > T::zero()) || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(1..=3).contains(&self.wavelet_level) {
            return Err(Error::InvalidParameter(format!(
                "wavelet level must be 1, 2 or 3, got {}",
                self.wavelet_level
            )));
        }
        if !(self.percentile >= T::zero() && self.percentile < T::of(50.0)) {
            return Err(Error::InvalidParameter(format!("percentile must lie in [0, 50), got {}", self.percentile)));
        }
        if !(self.gradient_threshold >= T::zero()) || !(self.ternary_epsilon >= T::zero()) {
            return Err(Error::InvalidParameter("thresholds must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn with_sigma(mut self, sigma: T) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_level(mut self, level: usize) -> Self {
        self.wavelet_level = level;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_ladder_matches_capture_protocol() {
        let g: Vec<f64> = inverse_depth_ladder(49, 0.102, 3.91);
        assert_eq!(g.len(), 49);
        assert!((g[0] - 0.102).abs() < 1e-12);
        assert!((g[48] - 3.91).abs() < 1e-12);
        let steps: Vec<f64> = g.windows(2).map(|w| 1.0 / w[1] - 1.0 / w[0]).collect();
        for s in &steps {
            assert!((s - steps[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn lookup_reproduces_nodes() {
        let grid = CalibrationGrid::new(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(grid.lookup(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(grid.lookup(0.5, 0.0).unwrap(), 2.0);
        assert_eq!(grid.lookup(1.0, 1.0).unwrap(), 6.0);
        assert_eq!(grid.lookup(0.0, 1.0).unwrap(), 4.0);
    }

    #[test]
    fn lookup_midpoint_is_bilinear_average() {
        let grid = CalibrationGrid::<f64>::new(2, 2, vec![1.0, 1.0, 3.0, 3.0]).unwrap();
        assert!((grid.lookup(0.5, 0.5).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn lookup_constant_grid_and_range() {
        let grid = CalibrationGrid::constant(7.5);
        for &(x, y) in &[(0.0, 0.3), (0.77, 0.01), (1.0, 1.0)] {
            assert_eq!(grid.lookup(x, y).unwrap(), 7.5);
        }
        assert!(grid.lookup(1.2, 0.5).is_err());
        assert!(grid.lookup(0.5, -0.1).is_err());
    }

    #[test]
    fn default_camera_is_valid() {
        let cam = CameraConfig::<f64>::default();
        cam.validate().unwrap();
        let mut bad = cam.clone();
        bad.focal_length_m = 0.2;
        assert!(matches!(bad.validate(), Err(Error::FocusInsideFocalLength)));
    }

    #[test]
    fn metric_params_validation() {
        let p = MetricParams::<f64>::default();
        p.validate().unwrap();
        assert!(p.with_level(4).validate().is_err());
        assert!(p.with_sigma(0.0).validate().is_err());
        let mut q = p;
        q.percentile = 50.0;
        assert!(q.validate().is_err());
    }
}
