//! CDF 9/7 biorthogonal wavelet via lifting, with whole-sample symmetric
//! boundary extension.
//!
//! Normalization follows the JPEG 2000 irreversible filter bank: the
//! analysis low-pass has unit DC gain and the high-pass center tap is
//! 1.115087.

use crate::error::{Error, Result};
use crate::patch::Patch;
use crate::scalar::Scalar;

const ALPHA: f64 = -1.586_134_342_059_924;
const BETA: f64 = -0.052_980_118_572_961;
const GAMMA: f64 = 0.882_911_075_530_934;
const DELTA: f64 = 0.443_506_852_043_971;
const K: f64 = 1.230_174_104_914_001;

/// Lifting coefficients `[alpha, beta, gamma, delta]` and the scale `K`.
pub fn lifting_constants() -> ([f64; 4], f64) {
    ([ALPHA, BETA, GAMMA, DELTA], K)
}

#[inline]
fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let j = if i < 0 {
        -i
    } else if i >= n {
        2 * (n - 1) - i
    } else {
        i
    };
    j as usize
}

fn lift<T: Scalar>(x: &mut [T], parity: usize, c: T) {
    let n = x.len();
    let mut i = parity;
    while i < n {
        let l = x[mirror(i as isize - 1, n)];
        let r = x[mirror(i as isize + 1, n)];
        x[i] += c * (l + r);
        i += 2;
    }
}

/// One level of the forward 1-D transform. `signal.len() >= 2`.
/// Writes `ceil(n/2)` low-pass then `floor(n/2)` high-pass coefficients.
pub fn forward_1d<T: Scalar>(signal: &[T], low: &mut Vec<T>, high: &mut Vec<T>) {
    let mut x = signal.to_vec();
    lift(&mut x, 1, T::of(ALPHA));
    lift(&mut x, 0, T::of(BETA));
    lift(&mut x, 1, T::of(GAMMA));
    lift(&mut x, 0, T::of(DELTA));
    let (k, inv_k) = (T::of(K), T::of(1.0 / K));
    low.clear();
    high.clear();
    low.extend(x.iter().step_by(2).map(|&v| v * inv_k));
    high.extend(x.iter().skip(1).step_by(2).map(|&v| v * k));
}

/// Inverse of [`forward_1d`].
pub fn inverse_1d<T: Scalar>(low: &[T], high: &[T], out: &mut Vec<T>) {
    let n = low.len() + high.len();
    let (k, inv_k) = (T::of(K), T::of(1.0 / K));
    out.clear();
    out.resize(n, T::zero());
    for (i, &v) in low.iter().enumerate() {
        out[2 * i] = v * k;
    }
    for (i, &v) in high.iter().enumerate() {
        out[2 * i + 1] = v * inv_k;
    }
    lift(out, 0, T::of(-DELTA));
    lift(out, 1, T::of(-GAMMA));
    lift(out, 0, T::of(-BETA));
    lift(out, 1, T::of(-ALPHA));
}

/// Subbands of one decomposition level. The first letter names the
/// horizontal filter, the second the vertical one.
#[derive(Clone, Debug)]
pub struct Subbands<T> {
    pub ll: Patch<T>,
    pub lh: Patch<T>,
    pub hl: Patch<T>,
    pub hh: Patch<T>,
}

impl<T: Scalar> Subbands<T> {
    /// Detail coefficients in the order LH, HL, HH.
    pub fn details(&self) -> [&Patch<T>; 3] {
        [&self.lh, &self.hl, &self.hh]
    }
}

fn split_level<T: Scalar>(p: &Patch<T>) -> Subbands<T> {
    let (w, h) = (p.width(), p.height());
    let (wl, wh) = (w.div_ceil(2), w / 2);
    let (hl_, hh_) = (h.div_ceil(2), h / 2);
    // rows
    let mut rows_low = vec![T::zero(); wl * h];
    let mut rows_high = vec![T::zero(); wh * h];
    let (mut lo, mut hi) = (Vec::new(), Vec::new());
    for y in 0..h {
        forward_1d(p.row(y), &mut lo, &mut hi);
        rows_low[y * wl..(y + 1) * wl].copy_from_slice(&lo);
        rows_high[y * wh..(y + 1) * wh].copy_from_slice(&hi);
    }
    // columns
    let columns = |src: &[T], sw: usize| -> (Patch<T>, Patch<T>) {
        let mut low = vec![T::zero(); sw * hl_];
        let mut high = vec![T::zero(); sw * hh_];
        let mut col = vec![T::zero(); h];
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        for x in 0..sw {
            for y in 0..h {
                col[y] = src[y * sw + x];
            }
            forward_1d(&col, &mut lo, &mut hi);
            for (y, &v) in lo.iter().enumerate() {
                low[y * sw + x] = v;
            }
            for (y, &v) in hi.iter().enumerate() {
                high[y * sw + x] = v;
            }
        }
        (Patch::from_raw(sw, hl_, low), Patch::from_raw(sw, hh_, high))
    };
    let (ll, lh) = columns(&rows_low, wl);
    let (hl, hh) = columns(&rows_high, wh);
    Subbands { ll, lh, hl, hh }
}

fn merge_level<T: Scalar>(b: &Subbands<T>) -> Patch<T> {
    let (wl, wh) = (b.ll.width(), b.hl.width());
    let (h_l, h_h) = (b.ll.height(), b.lh.height());
    let (w, h) = (wl + wh, h_l + h_h);
    let columns = |low: &Patch<T>, high: &Patch<T>, sw: usize| -> Vec<T> {
        let mut out = vec![T::zero(); sw * h];
        let (mut lo, mut hi, mut col) = (Vec::new(), Vec::new(), Vec::new());
        for x in 0..sw {
            lo.clear();
            hi.clear();
            lo.extend((0..h_l).map(|y| low.get(x, y)));
            hi.extend((0..h_h).map(|y| high.get(x, y)));
            inverse_1d(&lo, &hi, &mut col);
            for (y, &v) in col.iter().enumerate() {
                out[y * sw + x] = v;
            }
        }
        out
    };
    let rows_low = columns(&b.ll, &b.lh, wl);
    let rows_high = columns(&b.hl, &b.hh, wh);
    let mut data = Vec::with_capacity(w * h);
    let mut row = Vec::new();
    for y in 0..h {
        inverse_1d(&rows_low[y * wl..(y + 1) * wl], &rows_high[y * wh..(y + 1) * wh], &mut row);
        data.extend_from_slice(&row);
    }
    Patch::from_raw(w, h, data)
}

fn check_level<T: Scalar>(patch: &Patch<T>, level: usize) -> Result<()> {
    let need = 1usize.checked_shl(level as u32).unwrap_or(usize::MAX);
    if level == 0 || patch.width() < need || patch.height() < need {
        return Err(Error::InsufficientResolution { level, width: patch.width(), height: patch.height() });
    }
    Ok(())
}

/// Dyadic 2-D decomposition; returns the four subbands at `level`
/// (level 1 is the finest).
pub fn cdf97_decompose<T: Scalar>(patch: &Patch<T>, level: usize) -> Result<Subbands<T>> {
    check_level(patch, level)?;
    let mut bands = split_level(patch);
    for _ in 1..level {
        bands = split_level(&bands.ll);
    }
    Ok(bands)
}

/// Full multi-level analysis keeping every detail level, for synthesis.
#[derive(Clone, Debug)]
pub struct Pyramid<T> {
    /// Coarsest approximation.
    pub approximation: Patch<T>,
    /// Detail subbands, finest first; the `ll` field of each entry is unused
    /// and holds that level's approximation.
    pub levels: Vec<Subbands<T>>,
}

impl<T: Scalar> Pyramid<T> {
    pub fn analyze(patch: &Patch<T>, levels: usize) -> Result<Self> {
        check_level(patch, levels)?;
        let mut out = Vec::with_capacity(levels);
        let mut current = patch.clone();
        for _ in 0..levels {
            let bands = split_level(&current);
            current = bands.ll.clone();
            out.push(bands);
        }
        Ok(Self { approximation: current, levels: out })
    }

    pub fn synthesize(&self) -> Patch<T> {
        let mut current = self.approximation.clone();
        for bands in self.levels.iter().rev() {
            let b = Subbands { ll: current, lh: bands.lh.clone(), hl: bands.hl.clone(), hh: bands.hh.clone() };
            current = merge_level(&b);
        }
        current
    }
}
