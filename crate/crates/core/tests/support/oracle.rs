//! Slow reference evaluations of every focus and mismatch measure.
//!
//! Written straight from the formulas with plain loops over `Vec<f64>`, no
//! code shared with the library. Boundary conventions follow the library:
//! stencils are summed where they fit, blurs clamp to the edge, wavelets
//! reflect about the end samples.

#![allow(dead_code)]

use std::f64::consts::{FRAC_1_SQRT_2, PI};

#[derive(Clone, Debug)]
pub struct Img {
    pub w: usize,
    pub h: usize,
    pub d: Vec<f64>,
}

impl Img {
    pub fn new(w: usize, h: usize, d: Vec<f64>) -> Self {
        assert_eq!(d.len(), w * h);
        Self { w, h, d }
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.d[y * self.w + x]
    }

    fn at_clamped(&self, x: i64, y: i64) -> f64 {
        let x = x.clamp(0, self.w as i64 - 1) as usize;
        let y = y.clamp(0, self.h as i64 - 1) as usize;
        self.at(x, y)
    }

    fn n(&self) -> f64 {
        (self.w * self.h) as f64
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Params {
    pub sigma: f64,
    pub level: usize,
    pub threshold: f64,
    pub percentile: f64,
    pub ternary_eps: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self { sigma: 2.0, level: 2, threshold: 10.0 / 255.0, percentile: 1.0, ternary_eps: 0.1 }
    }
}

pub const CONTRAST_IDS: [&str; 24] = [
    "intensity_variance",
    "intensity_coeff_variation",
    "tv_l1",
    "tv_l2",
    "laplacian_energy",
    "laplacian_variance",
    "sum_modified_laplacian",
    "diagonal_laplacian",
    "mean_gradient_magnitude",
    "gradient_count",
    "gradient_magnitude_variance",
    "percentile_range",
    "histogram_entropy",
    "dct_energy_ratio",
    "dct_reduced_energy_ratio",
    "modified_dct",
    "wavelet_sum",
    "wavelet_variance",
    "wavelet_ratio",
    "mean_wavelet_log_ratio",
    "eigenvalue_trace",
    "mean_local_ratio",
    "mean_local_log_ratio",
    "mean_local_norm_dist_sq",
];

pub const DP_IDS: [&str; 7] = [
    "census_hamming",
    "rank_l1",
    "ternary_census",
    "ncc",
    "normalized_sad",
    "normalized_envelope_l1",
    "normalized_envelope_l2",
];

fn var(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mu = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n
}

/// True convolution with a 3x3 stencil `k[row][col]`, at positions where it fits.
fn conv3(img: &Img, k: [[f64; 3]; 3]) -> Vec<f64> {
    let mut out = Vec::new();
    for y in 1..img.h - 1 {
        for x in 1..img.w - 1 {
            let mut s = 0.0;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let kv = k[(1 - dy) as usize][(1 - dx) as usize];
                    s += kv * img.at((x as i64 + dx) as usize, (y as i64 + dy) as usize);
                }
            }
            out.push(s);
        }
    }
    out
}

fn transpose3(k: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut t = [[0.0; 3]; 3];
    for (i, row) in k.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            t[j][i] = v;
        }
    }
    t
}

const SOBEL_X: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
const SOBEL_Y: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];

fn blur(img: &Img, sigma: f64) -> Img {
    let r = (3.0 * sigma).ceil() as i64;
    let mut total = 0.0;
    for dy in -r..=r {
        for dx in -r..=r {
            total += (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
        }
    }
    let mut d = Vec::with_capacity(img.d.len());
    for y in 0..img.h as i64 {
        for x in 0..img.w as i64 {
            let mut s = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let wgt = (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp() / total;
                    s += wgt * img.at_clamped(x + dx, y + dy);
                }
            }
            d.push(s);
        }
    }
    Img::new(img.w, img.h, d)
}

/// Orthonormal DCT-II, every coefficient by direct summation.
pub fn dct2(img: &Img) -> Img {
    let (w, h) = (img.w, img.h);
    let alpha = |k: usize, n: usize| if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
    let mut d = vec![0.0; w * h];
    for v in 0..h {
        for u in 0..w {
            let mut s = 0.0;
            for y in 0..h {
                for x in 0..w {
                    s += img.at(x, y)
                        * (PI * u as f64 * (2 * x + 1) as f64 / (2 * w) as f64).cos()
                        * (PI * v as f64 * (2 * y + 1) as f64 / (2 * h) as f64).cos();
                }
            }
            d[v * w + u] = alpha(u, w) * alpha(v, h) * s;
        }
    }
    Img::new(w, h, d)
}

/// CDF 9/7 analysis taps, unit DC gain low-pass, indexed by distance from center.
#[allow(clippy::excessive_precision)]
const LOW: [f64; 5] = [
    0.602_949_018_236_360,
    0.266_864_118_442_875,
    -0.078_223_266_528_990,
    -0.016_864_118_442_875,
    0.026_748_757_410_810,
];
#[allow(clippy::excessive_precision)]
const HIGH: [f64; 4] = [1.115_087_052_457_000, -0.591_271_763_114_250, -0.057_543_526_228_500, 0.091_271_763_114_250];

fn reflect(mut i: i64, n: usize) -> usize {
    let n = n as i64;
    if n == 1 {
        return 0;
    }
    loop {
        if i < 0 {
            i = -i;
        } else if i >= n {
            i = 2 * (n - 1) - i;
        } else {
            return i as usize;
        }
    }
}

/// FIR analysis: low-pass outputs sit on even samples, high-pass on odd ones.
fn analyze_1d(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    let mut c = 0;
    while c < n {
        let mut s = 0.0;
        for k in -4i64..=4 {
            s += LOW[k.unsigned_abs() as usize] * x[reflect(c as i64 + k, n)];
        }
        lo.push(s);
        c += 2;
    }
    let mut c = 1;
    while c < n {
        let mut s = 0.0;
        for k in -3i64..=3 {
            s += HIGH[k.unsigned_abs() as usize] * x[reflect(c as i64 + k, n)];
        }
        hi.push(s);
        c += 2;
    }
    (lo, hi)
}

/// Bands `[LL, LH, HL, HH]` of one level; first letter is the horizontal filter.
fn wavelet_level(img: &Img) -> [Img; 4] {
    let (w, h) = (img.w, img.h);
    let (wl, wh) = (w.div_ceil(2), w / 2);
    let (hl, hh) = (h.div_ceil(2), h / 2);
    let mut row_lo = vec![vec![0.0; wl]; h];
    let mut row_hi = vec![vec![0.0; wh]; h];
    for y in 0..h {
        let row: Vec<f64> = (0..w).map(|x| img.at(x, y)).collect();
        let (a, b) = analyze_1d(&row);
        row_lo[y] = a;
        row_hi[y] = b;
    }
    let cols = |src: &Vec<Vec<f64>>, sw: usize| {
        let mut lo = vec![0.0; sw * hl];
        let mut hi = vec![0.0; sw * hh];
        for x in 0..sw {
            let col: Vec<f64> = (0..h).map(|y| src[y][x]).collect();
            let (a, b) = analyze_1d(&col);
            for (y, v) in a.into_iter().enumerate() {
                lo[y * sw + x] = v;
            }
            for (y, v) in b.into_iter().enumerate() {
                hi[y * sw + x] = v;
            }
        }
        (Img::new(sw, hl, lo), Img::new(sw, hh, hi))
    };
    let (ll, lh) = cols(&row_lo, wl);
    let (hl_, hh_) = cols(&row_hi, wh);
    [ll, lh, hl_, hh_]
}

pub fn wavelet(img: &Img, level: usize) -> [Img; 4] {
    let mut bands = wavelet_level(img);
    for _ in 1..level {
        bands = wavelet_level(&bands[0]);
    }
    bands
}

fn percentile(v: &[f64], q: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q / 100.0 * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(s.len() - 1);
    s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
}

fn div0(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

pub fn contrast(id: &str, img: &Img, p: &Params) -> f64 {
    let n = img.n();
    let (w, h) = (img.w, img.h);
    match id {
        "intensity_variance" => var(&img.d),
        "intensity_coeff_variation" => div0(var(&img.d).sqrt(), img.d.iter().sum::<f64>() / n),
        "tv_l1" | "tv_l2" => {
            let f = |d: f64| if id == "tv_l1" { d.abs() } else { d * d };
            let mut s = 0.0;
            for y in 0..h {
                for x in 0..w {
                    if x + 1 < w {
                        s += f(img.at(x, y) - img.at(x + 1, y));
                    }
                    if y + 1 < h {
                        s += f(img.at(x, y) - img.at(x, y + 1));
                    }
                }
            }
            s
        }
        "laplacian_energy" | "laplacian_variance" => {
            let r = conv3(img, [[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]]);
            if id == "laplacian_energy" {
                r.iter().map(|v| v * v).sum()
            } else {
                var(&r)
            }
        }
        "sum_modified_laplacian" | "diagonal_laplacian" => {
            let lx = [[0.0, 0.0, 0.0], [-1.0, 2.0, -1.0], [0.0, 0.0, 0.0]];
            let mut ks = vec![lx, transpose3(lx)];
            if id == "diagonal_laplacian" {
                let s = FRAC_1_SQRT_2;
                ks.push([[0.0, 0.0, s], [0.0, -2.0 * s, 0.0], [s, 0.0, 0.0]]);
                ks.push([[s, 0.0, 0.0], [0.0, -2.0 * s, 0.0], [0.0, 0.0, s]]);
            }
            ks.iter().map(|&k| conv3(img, k).iter().map(|v| v.abs()).sum::<f64>()).sum()
        }
        "mean_gradient_magnitude" | "gradient_count" | "gradient_magnitude_variance" => {
            let gx = conv3(img, SOBEL_X);
            let gy = conv3(img, SOBEL_Y);
            let mag: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| (a * a + b * b).sqrt()).collect();
            match id {
                "mean_gradient_magnitude" => mag.iter().sum::<f64>() / n,
                "gradient_count" => {
                    let mut c = 0usize;
                    for i in 0..gx.len() {
                        c += (gx[i].abs() > p.threshold) as usize + (gy[i].abs() > p.threshold) as usize;
                    }
                    c as f64 / n
                }
                _ => var(&mag),
            }
        }
        "percentile_range" => percentile(&img.d, 100.0 - p.percentile) - percentile(&img.d, p.percentile),
        "histogram_entropy" => {
            let mut counts = vec![0usize; 256];
            for &v in &img.d {
                let b = ((v * 256.0).floor() as i64).clamp(0, 255) as usize;
                counts[b] += 1;
            }
            counts.iter().filter(|&&c| c > 0).map(|&c| c as f64 / n).map(|q| -q * q.ln()).sum()
        }
        "dct_energy_ratio" | "dct_reduced_energy_ratio" => {
            let d = dct2(img);
            let dc2 = d.at(0, 0).powi(2);
            if id == "dct_energy_ratio" {
                div0(d.d.iter().map(|v| v * v).sum::<f64>() - dc2, dc2)
            } else {
                // D[row, col]: first index vertical frequency
                let terms = [(0, 1), (1, 0), (0, 2), (1, 1), (2, 0)];
                div0(terms.iter().map(|&(r, c)| d.at(c, r).powi(2)).sum(), dc2)
            }
        }
        "modified_dct" => {
            let mut s = 0.0;
            for y in 0..=h - 4 {
                for x in 0..=w - 4 {
                    for j in 0..4 {
                        for i in 0..4 {
                            let sign = if (i < 2) == (j < 2) { 1.0 } else { -1.0 };
                            s += sign * img.at(x + i, y + j);
                        }
                    }
                }
            }
            s
        }
        "wavelet_sum" | "wavelet_variance" | "wavelet_ratio" | "mean_wavelet_log_ratio" => {
            let [ll, lh, hl, hh] = wavelet(img, p.level);
            match id {
                "wavelet_sum" => [&lh, &hl, &hh].iter().flat_map(|b| b.d.iter()).map(|v| v.abs()).sum(),
                "wavelet_variance" => var(&lh.d) + var(&hl.d) + var(&hh.d),
                "wavelet_ratio" => {
                    let hi: f64 = [&lh, &hl, &hh].iter().flat_map(|b| b.d.iter()).map(|v| v * v).sum();
                    div0(hi, ll.d.iter().map(|v| v * v).sum())
                }
                _ => {
                    let cw = ll.w.min(lh.w).min(hl.w).min(hh.w);
                    let ch = ll.h.min(lh.h).min(hl.h).min(hh.h);
                    let mut s = 0.0;
                    for y in 0..ch {
                        for x in 0..cw {
                            let num = lh.at(x, y).powi(2) + hl.at(x, y).powi(2) + hh.at(x, y).powi(2);
                            s += (num / (ll.at(x, y).powi(2) + 1.0)).ln();
                        }
                    }
                    s / (cw * ch) as f64
                }
            }
        }
        "eigenvalue_trace" => {
            // columns: flattened non-overlapping 4x4 cells
            let mut cols: Vec<Vec<f64>> = Vec::new();
            for cy in 0..h / 4 {
                for cx in 0..w / 4 {
                    let mut c = Vec::with_capacity(16);
                    for j in 0..4 {
                        for i in 0..4 {
                            c.push(img.at(4 * cx + i, 4 * cy + j));
                        }
                    }
                    cols.push(c);
                }
            }
            let m = cols.len();
            if m < 2 {
                return 0.0;
            }
            let mu: Vec<f64> = (0..16).map(|r| cols.iter().map(|c| c[r]).sum::<f64>() / m as f64).collect();
            let mut cov = [[0.0; 16]; 16];
            for (a, row) in cov.iter_mut().enumerate() {
                for (b, cell) in row.iter_mut().enumerate() {
                    *cell = cols.iter().map(|c| (c[a] - mu[a]) * (c[b] - mu[b])).sum::<f64>() / (m - 1) as f64;
                }
            }
            (0..16).map(|i| cov[i][i]).sum()
        }
        "mean_local_ratio" | "mean_local_log_ratio" | "mean_local_norm_dist_sq" => {
            let b = blur(img, p.sigma);
            let pairs = img.d.iter().zip(&b.d);
            match id {
                "mean_local_ratio" => {
                    pairs.map(|(&i, &bl)| ((bl + 1.0) / (i + 1.0)).max((i + 1.0) / (bl + 1.0))).sum::<f64>() / n
                }
                "mean_local_log_ratio" => {
                    (pairs.map(|(&i, &bl)| ((i + 1.0) / (bl + 1.0)).ln().abs()).sum::<f64>() / n).exp()
                }
                _ => pairs.map(|(&i, &bl)| (i - bl).powi(2) / (bl * bl + 1.0)).sum::<f64>() / n,
            }
        }
        other => panic!("unknown contrast id {other}"),
    }
}

/// Mean 0, population std 1; constant images become zeros.
pub fn normalize(img: &Img) -> Img {
    let mu = img.d.iter().sum::<f64>() / img.n();
    let sd = var(&img.d).sqrt();
    if sd <= 1e-12 * mu.abs().max(1.0) {
        return Img::new(img.w, img.h, vec![0.0; img.d.len()]);
    }
    Img::new(img.w, img.h, img.d.iter().map(|v| (v - mu) / sd).collect())
}

/// Census digits of every in-bounds 8-neighbor, `None` off the patch.
fn census(img: &Img, digit: &dyn Fn(f64) -> i64) -> Vec<Vec<Option<i64>>> {
    let mut out = Vec::new();
    for y in 0..img.h as i64 {
        for x in 0..img.w as i64 {
            let mut v = Vec::new();
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= img.w as i64 || ny >= img.h as i64 {
                        v.push(None);
                    } else {
                        v.push(Some(digit(img.at(nx as usize, ny as usize) - img.at(x as usize, y as usize))));
                    }
                }
            }
            out.push(v);
        }
    }
    out
}

fn pool2(img: &Img, f: fn(&[f64; 4]) -> f64) -> Img {
    let mut d = Vec::new();
    for y in 0..img.h - 1 {
        for x in 0..img.w - 1 {
            d.push(f(&[img.at(x, y), img.at(x + 1, y), img.at(x, y + 1), img.at(x + 1, y + 1)]));
        }
    }
    Img::new(img.w - 1, img.h - 1, d)
}

fn envelopes(img: &Img) -> (Img, Img) {
    let b = pool2(img, |q| q.iter().sum::<f64>() / 4.0);
    let lo = pool2(&b, |q| q.iter().cloned().fold(f64::INFINITY, f64::min));
    let hi = pool2(&b, |q| q.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    (lo, hi)
}

pub fn dp(id: &str, left: &Img, right: &Img, p: &Params) -> f64 {
    let l = normalize(left);
    let r = normalize(right);
    let greater = |d: f64| (d > 0.0) as i64;
    let eps = p.ternary_eps;
    let tsgn = move |d: f64| if d.abs() > eps { d.signum() as i64 } else { 0 };
    let digit_l1 = |cl: Vec<Vec<Option<i64>>>, cr: Vec<Vec<Option<i64>>>| {
        let mut s = 0i64;
        for (a, b) in cl.iter().zip(&cr) {
            for (x, y) in a.iter().zip(b) {
                if let (Some(x), Some(y)) = (x, y) {
                    s += (x - y).abs();
                }
            }
        }
        s as f64
    };
    match id {
        "census_hamming" => digit_l1(census(&l, &greater), census(&r, &greater)),
        "ternary_census" => digit_l1(census(&l, &tsgn), census(&r, &tsgn)),
        "rank_l1" => {
            let rank = |c: Vec<Vec<Option<i64>>>| -> Vec<i64> { c.iter().map(|v| v.iter().flatten().sum()).collect() };
            let (a, b) = (rank(census(&l, &greater)), rank(census(&r, &greater)));
            a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<i64>() as f64
        }
        "ncc" => -l.d.iter().zip(&r.d).map(|(a, b)| a * b).sum::<f64>(),
        "normalized_sad" => l.d.iter().zip(&r.d).map(|(a, b)| (a - b).abs()).sum(),
        "normalized_envelope_l1" | "normalized_envelope_l2" => {
            let (llo, lhi) = envelopes(&l);
            let (rlo, rhi) = envelopes(&r);
            let sq = id == "normalized_envelope_l2";
            let mut s = 0.0;
            for i in 0..llo.d.len() {
                for v in [(llo.d[i] - rhi.d[i]).max(0.0), (rlo.d[i] - lhi.d[i]).max(0.0)] {
                    s += if sq { v * v } else { v.abs() };
                }
            }
            s
        }
        other => panic!("unknown dual-pixel id {other}"),
    }
}

/// SplitMix64 stream, so the fixtures need no RNG crate.
pub struct Mix(pub u64);

impl Mix {
    pub fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Seeded 16x16 fixture pair. Seeds cycle through white noise, a box-smoothed
/// field and a step edge; the right view is the left shifted by one pixel
/// plus noise and a gain/offset change.
pub fn fixture(seed: u64) -> (Img, Img) {
    const S: usize = 16;
    let mut rng = Mix(seed.wrapping_mul(0x2545_f491_4f6c_dd1d) ^ 0x5eed);
    let raw: Vec<f64> = (0..(S + 4) * (S + 4)).map(|_| rng.next()).collect();
    let field = |x: usize, y: usize| -> f64 {
        match seed % 3 {
            0 => raw[y * (S + 4) + x],
            1 => {
                let mut s = 0.0;
                for j in 0..3 {
                    for i in 0..3 {
                        s += raw[(y + j) * (S + 4) + x + i];
                    }
                }
                s / 9.0
            }
            _ => {
                let edge = if x + y / 3 > S / 2 { 0.8 } else { 0.2 };
                edge + 0.05 * raw[y * (S + 4) + x]
            }
        }
    };
    let left = Img::new(S, S, (0..S * S).map(|i| field(i % S + 1, i / S + 1)).collect());
    let gain = 0.7 + 0.6 * rng.next();
    let offset = 0.1 * rng.next();
    let right = Img::new(
        S,
        S,
        (0..S * S).map(|i| gain * field(i % S + 2, i / S + 1) + offset + 0.02 * (rng.next() - 0.5)).collect(),
    );
    (left, right)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}
