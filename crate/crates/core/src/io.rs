//! On-disk focal stacks: a `manifest.json` plus one 16-bit binary PGM per view.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::patch::{DualPixelPatch, FocalStack, Patch};
use crate::scalar::Scalar;

pub const MANIFEST: &str = "manifest.json";
const MAXVAL16: f64 = 65535.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub n: usize,
    pub width: usize,
    pub height: usize,
    pub focus_distances_m: Vec<f64>,
    pub dual_pixel: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth_index: Option<usize>,
    /// Slices carry the per-focus magnification of the lens.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub focal_breathing: bool,
}

fn format_err(path: &Path, what: &str) -> Error {
    Error::Format(format!("{}: {}", path.display(), what))
}

/// Splits the PGM header into whitespace-separated tokens, skipping `#`
/// comments, and returns the offset of the raster.
fn pgm_header(bytes: &[u8], path: &Path) -> Result<([usize; 3], usize)> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(format_err(path, "not a binary PGM (P5)"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(format_err(path, "truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format_err(path, "bad header field"))?;
    }
    // exactly one whitespace byte separates maxval from the raster
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(format_err(path, "missing raster separator"));
    }
    Ok((fields, pos + 1))
}

/// Reads a binary PGM, scaling samples by `1 / maxval` into `[0, 1]`.
pub fn read_pgm<T: Scalar>(path: &Path) -> Result<Patch<T>> {
    let bytes = fs::read(path)?;
    let ([w, h, maxval], off) = pgm_header(&bytes, path)?;
    if w == 0 || h == 0 || maxval == 0 || maxval > 65535 {
        return Err(format_err(path, "unsupported size or maxval"));
    }
    let bps = if maxval > 255 { 2 } else { 1 };
    let raster = &bytes[off..];
    if raster.len() < w * h * bps {
        return Err(format_err(path, "truncated raster"));
    }
    let scale = 1.0 / maxval as f64;
    let data = (0..w * h)
        .map(|i| {
            let v =
                if bps == 2 { u16::from_be_bytes([raster[2 * i], raster[2 * i + 1]]) as f64 } else { raster[i] as f64 };
            T::of(v * scale)
        })
        .collect();
    Patch::new(w, h, data)
}

/// Writes a 16-bit big-endian PGM; values are clipped to `[0, 1]` and rounded.
pub fn write_pgm<T: Scalar>(path: &Path, patch: &Patch<T>) -> Result<()> {
    let mut out = Vec::with_capacity(patch.len() * 2 + 32);
    write!(out, "P5\n{} {}\n65535\n", patch.width(), patch.height())?;
    for &v in patch.data() {
        let q = (v.as_f64().clamp(0.0, 1.0) * MAXVAL16).round() as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

fn slice_paths(dir: &Path, k: usize, dual: bool) -> (PathBuf, Option<PathBuf>) {
    if dual {
        (dir.join(format!("slice_{}_L.pgm", k)), Some(dir.join(format!("slice_{}_R.pgm", k))))
    } else {
        (dir.join(format!("slice_{}.pgm", k)), None)
    }
}

pub fn write_stack<T: Scalar>(dir: &Path, stack: &FocalStack<T>) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (k, s) in stack.slices.iter().enumerate() {
        match slice_paths(dir, k, stack.dual_pixel) {
            (l, Some(r)) => {
                write_pgm(&l, &s.left)?;
                write_pgm(&r, &s.right)?;
            }
            (g, None) => write_pgm(&g, &s.green())?,
        }
    }
    let manifest = Manifest {
        n: stack.len(),
        width: stack.width(),
        height: stack.height(),
        focus_distances_m: stack.focus_distances_m.iter().map(|g| g.as_f64()).collect(),
        dual_pixel: stack.dual_pixel,
        ground_truth_index: stack.ground_truth_index,
        focal_breathing: stack.focal_breathing,
    };
    fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_stack<T: Scalar>(dir: &Path) -> Result<FocalStack<T>> {
    let m = read_manifest(dir)?;
    if m.focus_distances_m.len() != m.n {
        return Err(Error::InconsistentStackLength { expected: m.n, found: m.focus_distances_m.len() });
    }
    let mut slices = Vec::with_capacity(m.n);
    for k in 0..m.n {
        let pair = match slice_paths(dir, k, m.dual_pixel) {
            (l, Some(r)) => DualPixelPatch::new(read_pgm(&l)?, read_pgm(&r)?)?,
            (g, None) => DualPixelPatch::mono(read_pgm(&g)?),
        };
        if pair.width() != m.width || pair.height() != m.height {
            return Err(Error::DimensionMismatch(format!(
                "slice {} is {}x{}, manifest says {}x{}",
                k,
                pair.width(),
                pair.height(),
                m.width,
                m.height
            )));
        }
        slices.push(pair);
    }
    let g = m.focus_distances_m.iter().map(|&g| T::of(g)).collect();
    let mut stack = FocalStack::new(slices, g, m.ground_truth_index, m.dual_pixel)?;
    stack.focal_breathing = m.focal_breathing;
    Ok(stack)
}
