//! Image containers: single-channel patches, dual-pixel pairs and focal stacks.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Single-channel row-major image tile.
#[derive(Clone, Debug, PartialEq)]
pub struct Patch<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Scalar> Patch<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyInput);
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!("{} samples for a {}x{} patch", data.len(), width, height)));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("patch data"));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: T) -> Self {
        assert!(width > 0 && height > 0, "patch dimensions must be nonzero");
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, T::zero())
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        assert!(width > 0 && height > 0, "patch dimensions must be nonzero");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    /// Builds a patch without the finiteness check. Used by kernels whose
    /// output is finite by construction.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.data[y * self.width + x] = v;
    }

    /// Sample with coordinates clamped into the patch (edge replication).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> T {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.get(xc, yc)
    }

    pub fn row(&self, y: usize) -> &[T] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn same_dims<U>(&self, other: &Patch<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::from_raw(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if !self.same_dims(other) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(Self::from_raw(self.width, self.height, self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect()))
    }

    pub fn mean(&self) -> T {
        self.data.iter().copied().sum::<T>() / T::of_usize(self.data.len())
    }

    /// Rotates the patch by 90 degrees counter-clockwise.
    pub fn rot90(&self) -> Self {
        let (w, h) = (self.width, self.height);
        Self::from_fn(h, w, |x, y| self.get(w - 1 - y, x))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.height, self.width, |x, y| self.get(y, x))
    }

    /// Extracts the `w x h` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(Error::DimensionMismatch(format!(
                "crop {}x{}+{}+{} of {}x{}",
                w, h, x0, y0, self.width, self.height
            )));
        }
        Ok(Self::from_fn(w, h, |x, y| self.get(x0 + x, y0 + y)))
    }

    pub fn clamp01(&self) -> Self {
        self.map(|v| v.max(T::zero()).min(T::one()))
    }

    pub fn cast<U: Scalar>(&self) -> Patch<U> {
        Patch::from_raw(self.width, self.height, self.data.iter().map(|v| U::of(v.as_f64())).collect())
    }
}

/// Left/right sub-images of a dual-pixel sensor sharing one optical state.
#[derive(Clone, Debug, PartialEq)]
pub struct DualPixelPatch<T> {
    pub left: Patch<T>,
    pub right: Patch<T>,
}

impl<T: Scalar> DualPixelPatch<T> {
    pub fn new(left: Patch<T>, right: Patch<T>) -> Result<Self> {
        if !left.same_dims(&right) {
            return Err(Error::DimensionMismatch(format!(
                "left {}x{} vs right {}x{}",
                left.width(),
                left.height(),
                right.width(),
                right.height()
            )));
        }
        Ok(Self { left, right })
    }

    /// Pair whose two views are the same image (green-only data).
    pub fn mono(green: Patch<T>) -> Self {
        Self { left: green.clone(), right: green }
    }

    /// Green-channel equivalent of the pair: the per-pixel average of the two
    /// views, which keeps intensities in the `[0, 1]` domain.
    pub fn green(&self) -> Patch<T> {
        let half = T::of(0.5);
        self.left.zip_map(&self.right, |l, r| (l + r) * half).expect("pair dimensions agree")
    }

    pub fn swapped(&self) -> Self {
        Self { left: self.right.clone(), right: self.left.clone() }
    }

    pub fn width(&self) -> usize {
        self.left.width()
    }

    pub fn height(&self) -> usize {
        self.left.height()
    }
}

/// Slices of one scene over a ladder of focus distances.
///
/// `focus_distances_m` must be monotone in inverse depth. Green-only stacks
/// store each slice as a mono pair and set `dual_pixel` to `false`.
#[derive(Clone, Debug, PartialEq)]
pub struct FocalStack<T> {
    pub slices: Vec<DualPixelPatch<T>>,
    pub focus_distances_m: Vec<T>,
    pub ground_truth_index: Option<usize>,
    pub dual_pixel: bool,
    /// Whether the slices carry focal-breathing magnification.
    pub focal_breathing: bool,
}

impl<T: Scalar> FocalStack<T> {
    pub fn new(
        slices: Vec<DualPixelPatch<T>>,
        focus_distances_m: Vec<T>,
        ground_truth_index: Option<usize>,
        dual_pixel: bool,
    ) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::EmptyStack);
        }
        if slices.len() != focus_distances_m.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} slices vs {} focus distances",
                slices.len(),
                focus_distances_m.len()
            )));
        }
        let (w, h) = (slices[0].width(), slices[0].height());
        if slices.iter().any(|s| s.width() != w || s.height() != h) {
            return Err(Error::DimensionMismatch("slices differ in size".into()));
        }
        validate_ladder(&focus_distances_m)?;
        if let Some(k) = ground_truth_index {
            if k >= slices.len() {
                return Err(Error::InvalidParameter(format!("ground truth index {} outside 0..{}", k, slices.len())));
            }
        }
        Ok(Self { slices, focus_distances_m, ground_truth_index, dual_pixel, focal_breathing: false })
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn width(&self) -> usize {
        self.slices[0].width()
    }

    pub fn height(&self) -> usize {
        self.slices[0].height()
    }

    pub fn green(&self, k: usize) -> Patch<T> {
        if self.dual_pixel {
            self.slices[k].green()
        } else {
            self.slices[k].left.clone()
        }
    }

    pub fn require_dual_pixel(&self) -> Result<()> {
        if self.dual_pixel {
            Ok(())
        } else {
            Err(Error::NoDualPixel)
        }
    }

    /// Same stack with every sub-image passed through `f`.
    pub fn map_slices(&self, f: impl Fn(&Patch<T>) -> Patch<T>) -> Self {
        let slices = self.slices.iter().map(|s| DualPixelPatch { left: f(&s.left), right: f(&s.right) }).collect();
        Self { slices, ..self.clone() }
    }
}

/// Checks that a focus ladder is finite, positive and strictly monotone in
/// inverse depth.
pub fn validate_ladder<T: Scalar>(g: &[T]) -> Result<()> {
    if g.is_empty() {
        return Err(Error::EmptyStack);
    }
    if g.iter().any(|v| !v.is_finite() || *v <= T::zero()) {
        return Err(Error::InvalidParameter("focus distances must be finite and positive".into()));
    }
    if g.len() > 1 {
        let inc = g[1].recip() > g[0].recip();
        let ok = g.windows(2).all(|w| {
            let (a, b) = (w[0].recip(), w[1].recip());
            if inc {
                b > a
            } else {
                b < a
            }
        });
        if !ok {
            return Err(Error::InvalidParameter("focus distances must be strictly monotone in inverse depth".into()));
        }
    }
    Ok(())
}

/// Index of the ladder entry closest to `inv_depth` in inverse-depth space.
/// Ties resolve to the lower index.
pub fn nearest_index<T: Scalar>(ladder: &[T], inv_depth: T) -> usize {
    let mut best = 0;
    let mut best_err = T::infinity();
    for (k, g) in ladder.iter().enumerate() {
        let err = (g.recip() - inv_depth).abs();
        if err < best_err {
            best = k;
            best_err = err;
        }
    }
    best
}
