//! Orthonormal type-II 2-D DCT.

use rustdct::DctPlanner;

use crate::patch::Patch;
use crate::scalar::Scalar;

/// Orthonormal DCT-II of `patch`. Coefficient `(u, v)` of the result holds
/// horizontal frequency `u` and vertical frequency `v`; `(0, 0)` is DC.
pub fn dct2<T: Scalar>(patch: &Patch<T>) -> Patch<T> {
    let (w, h) = (patch.width(), patch.height());
    let mut planner = DctPlanner::<T>::new();
    let row_dct = planner.plan_dct2(w);
    let col_dct = planner.plan_dct2(h);
    let (sx0, sx) = (T::of(1.0 / (w as f64)).sqrt(), T::of(2.0 / (w as f64)).sqrt());
    let (sy0, sy) = (T::of(1.0 / (h as f64)).sqrt(), T::of(2.0 / (h as f64)).sqrt());

    let mut data = patch.data().to_vec();
    for row in data.chunks_exact_mut(w) {
        row_dct.process_dct2(row);
        row[0] *= sx0;
        for c in &mut row[1..] {
            *c *= sx;
        }
    }
    let mut column = vec![T::zero(); h];
    for x in 0..w {
        for y in 0..h {
            column[y] = data[y * w + x];
        }
        col_dct.process_dct2(&mut column);
        for y in 0..h {
            let s = if y == 0 { sy0 } else { sy };
            data[y * w + x] = column[y] * s;
        }
    }
    Patch::from_raw(w, h, data)
}

/// Single orthonormal DCT-II coefficient by direct summation.
pub fn dct2_coefficient<T: Scalar>(patch: &Patch<T>, u: usize, v: usize) -> T {
    let (w, h) = (patch.width(), patch.height());
    let pi = T::PI();
    let norm = |k: usize, n: usize| {
        if k == 0 {
            T::of(1.0 / n as f64).sqrt()
        } else {
            T::of(2.0 / n as f64).sqrt()
        }
    };
    let cx: Vec<T> =
        (0..w).map(|x| (pi * T::of_usize(u) * T::of_usize(2 * x + 1) / T::of_usize(2 * w)).cos()).collect();
    let mut acc = T::zero();
    for y in 0..h {
        let cy = (pi * T::of_usize(v) * T::of_usize(2 * y + 1) / T::of_usize(2 * h)).cos();
        let row: T = patch.row(y).iter().zip(&cx).map(|(&p, &c)| p * c).sum();
        acc += row * cy;
    }
    acc * norm(u, w) * norm(v, h)
}
