//! Seeded procedural scenes and their JSON description.
//!
//! ```json
//! {"texture": {"kind": "noise", "params": {"scale": 1.0}},
//!  "depth": {"kind": "random_constant"},
//!  "seed": 7, "width": 128, "height": 128}
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::camera::CameraConfig;
use crate::error::{Error, Result};
use crate::filter::{gaussian_blur, variance};
use crate::optics::Scene;
use crate::patch::Patch;
use crate::scalar::Scalar;

pub const DEFAULT_SIZE: usize = 128;

const TEXTURE_STREAM: u64 = u64::MAX - 1;
const DEPTH_STREAM: u64 = u64::MAX - 2;

/// SplitMix64 mix of `base` and `index`, used to seed the members of a
/// dataset.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn parse_params<P: DeserializeOwned + Default>(v: &serde_json::Value) -> Result<P> {
    if v.is_null() {
        return Ok(P::default());
    }
    Ok(serde_json::from_value(v.clone())?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextureKind {
    /// Gaussian-filtered white noise.
    Noise,
    /// Sum of random half-plane steps.
    Edges,
    /// Grid of point sources on a flat background.
    Impulses,
    /// Weighted blend of noise and edges.
    Mixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseParams {
    /// Standard deviation of the band-limiting filter, pixels.
    pub scale: f64,
    /// Standard deviation of the texture intensities.
    pub contrast: f64,
    pub mean: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self { scale: 1.0, contrast: 0.15, mean: 0.5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdgeParams {
    pub count: usize,
    pub low: f64,
    pub high: f64,
}

impl Default for EdgeParams {
    fn default() -> Self {
        Self { count: 6, low: 0.2, high: 0.8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImpulseParams {
    /// Grid pitch, pixels; `0` places a single impulse at the center.
    pub spacing: usize,
    /// Impulse radiance; values above 1 saturate after blur.
    pub amplitude: f64,
    pub background: f64,
    /// Maximum random displacement of each impulse, pixels.
    pub jitter: usize,
}

impl Default for ImpulseParams {
    fn default() -> Self {
        Self { spacing: 16, amplitude: 1.0, background: 0.0, jitter: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixedParams {
    pub noise: NoiseParams,
    pub edges: EdgeParams,
    /// Weight of the noise component; edges get the remainder.
    pub noise_weight: f64,
}

impl Default for MixedParams {
    fn default() -> Self {
        Self { noise: NoiseParams::default(), edges: EdgeParams::default(), noise_weight: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextureSpec {
    pub kind: TextureKind,
    #[serde(default)]
    pub params: serde_json::Value,
}

fn noise_texture(w: usize, h: usize, p: &NoiseParams, rng: &mut ChaCha8Rng) -> Result<Patch<f64>> {
    let white = Patch::from_fn(w, h, |_, _| rng.sample::<f64, _>(StandardNormal));
    let band = if p.scale > 0.0 { gaussian_blur(&white, p.scale)? } else { white };
    let (mu, sd) = (band.mean(), variance(band.data()).sqrt());
    let sd = if sd > 0.0 { sd } else { 1.0 };
    Ok(band.map(|v| p.mean + p.contrast * (v - mu) / sd))
}

fn edge_texture(w: usize, h: usize, p: &EdgeParams, rng: &mut ChaCha8Rng) -> Patch<f64> {
    let mut acc = Patch::zeros(w, h);
    for _ in 0..p.count {
        let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let (px, py) = (rng.random_range(0.0..w as f64), rng.random_range(0.0..h as f64));
        let amp: f64 = rng.random_range(-1.0..1.0);
        let (nx, ny) = (theta.cos(), theta.sin());
        for y in 0..h {
            for x in 0..w {
                if (x as f64 - px) * nx + (y as f64 - py) * ny > 0.0 {
                    acc.set(x, y, acc.get(x, y) + amp);
                }
            }
        }
    }
    let lo = acc.data().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = acc.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        acc.map(|v| p.low + (p.high - p.low) * (v - lo) / (hi - lo))
    } else {
        Patch::filled(w, h, 0.5 * (p.low + p.high))
    }
}

fn impulse_texture(w: usize, h: usize, p: &ImpulseParams, rng: &mut ChaCha8Rng) -> Patch<f64> {
    let mut tex = Patch::filled(w, h, p.background);
    let positions: Vec<(usize, usize)> = if p.spacing == 0 {
        vec![(w / 2, h / 2)]
    } else {
        let s = p.spacing;
        (0..h / s).flat_map(|j| (0..w / s).map(move |i| (i * s + s / 2, j * s + s / 2))).collect()
    };
    let j = p.jitter as i64;
    for (x, y) in positions {
        let (dx, dy) =
            if j > 0 { (rng.random_range(-j..=j) as isize, rng.random_range(-j..=j) as isize) } else { (0, 0) };
        let xx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
        let yy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
        tex.set(xx, yy, p.amplitude);
    }
    tex
}

impl TextureSpec {
    pub fn new(kind: TextureKind) -> Self {
        Self { kind, params: serde_json::Value::Null }
    }

    pub fn with_params(kind: TextureKind, params: impl Serialize) -> Result<Self> {
        Ok(Self { kind, params: serde_json::to_value(params)? })
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            TextureKind::Noise => parse_params::<NoiseParams>(&self.params).map(|_| ()),
            TextureKind::Edges => parse_params::<EdgeParams>(&self.params).map(|_| ()),
            TextureKind::Impulses => parse_params::<ImpulseParams>(&self.params).map(|_| ()),
            TextureKind::Mixed => parse_params::<MixedParams>(&self.params).map(|_| ()),
        }
    }

    pub fn generate(&self, w: usize, h: usize, seed: u64) -> Result<Patch<f64>> {
        let mut rng = rng_for(seed, TEXTURE_STREAM);
        Ok(match self.kind {
            TextureKind::Noise => noise_texture(w, h, &parse_params(&self.params)?, &mut rng)?,
            TextureKind::Edges => edge_texture(w, h, &parse_params(&self.params)?, &mut rng),
            TextureKind::Impulses => impulse_texture(w, h, &parse_params(&self.params)?, &mut rng),
            TextureKind::Mixed => {
                let p: MixedParams = parse_params(&self.params)?;
                let noise = noise_texture(w, h, &p.noise, &mut rng)?;
                let edges = edge_texture(w, h, &p.edges, &mut rng);
                noise.zip_map(&edges, |a, b| p.noise_weight * a + (1.0 - p.noise_weight) * b)?
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthKind {
    Constant,
    /// Two depths split by a vertical line.
    Step,
    /// Inverse depth varying linearly from the left to the right edge.
    Plane,
    /// One depth per scene, uniform in inverse depth.
    RandomConstant,
}

/// Depths given either in meters or as focus-ladder indices.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DepthParams {
    pub z_m: Vec<f64>,
    pub index: Vec<usize>,
    /// Split position of `step`, as a fraction of the width.
    pub split: Option<f64>,
    /// Range of `random_constant`, meters; defaults to the ladder ends.
    pub min_m: Option<f64>,
    pub max_m: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthSpec {
    pub kind: DepthKind,
    #[serde(default)]
    pub params: serde_json::Value,
}

impl DepthSpec {
    pub fn new(kind: DepthKind) -> Self {
        Self { kind, params: serde_json::Value::Null }
    }

    pub fn constant_index(k: usize) -> Self {
        Self { kind: DepthKind::Constant, params: serde_json::json!({ "index": [k] }) }
    }

    fn values<T: Scalar>(&self, p: &DepthParams, cam: &CameraConfig<T>, needed: usize) -> Result<Vec<f64>> {
        let ladder = &cam.focus_distances_m;
        let z: Vec<f64> = if !p.index.is_empty() {
            p.index
                .iter()
                .map(|&k| {
                    ladder.get(k).map(|g| g.as_f64()).ok_or_else(|| {
                        Error::InvalidParameter(format!("depth index {} outside 0..{}", k, ladder.len()))
                    })
                })
                .collect::<Result<_>>()?
        } else {
            p.z_m.clone()
        };
        if z.len() != needed {
            return Err(Error::InvalidParameter(format!(
                "{:?} depth needs {} value(s) in `z_m` or `index`, got {}",
                self.kind,
                needed,
                z.len()
            )));
        }
        Ok(z)
    }

    pub fn generate<T: Scalar>(&self, w: usize, h: usize, cam: &CameraConfig<T>, seed: u64) -> Result<Patch<f64>> {
        let p: DepthParams = parse_params(&self.params)?;
        Ok(match self.kind {
            DepthKind::Constant => Patch::filled(w, h, self.values(&p, cam, 1)?[0]),
            DepthKind::Step => {
                let z = self.values(&p, cam, 2)?;
                let split = (p.split.unwrap_or(0.5) * w as f64).round() as usize;
                Patch::from_fn(w, h, |x, _| if x < split { z[0] } else { z[1] })
            }
            DepthKind::Plane => {
                let z = self.values(&p, cam, 2)?;
                let (a, b) = (1.0 / z[0], 1.0 / z[1]);
                let span = (w.max(2) - 1) as f64;
                Patch::from_fn(w, h, |x, _| 1.0 / (a + (b - a) * x as f64 / span))
            }
            DepthKind::RandomConstant => {
                let ladder = &cam.focus_distances_m;
                let near = p.min_m.unwrap_or_else(|| ladder.iter().map(|g| g.as_f64()).fold(f64::INFINITY, f64::min));
                let far = p.max_m.unwrap_or_else(|| ladder.iter().map(|g| g.as_f64()).fold(0.0, f64::max));
                if !(near > 0.0 && far >= near) {
                    return Err(Error::InvalidParameter("random depth range must satisfy 0 < min_m <= max_m".into()));
                }
                let mut rng = rng_for(seed, DEPTH_STREAM);
                let inv = if far > near { rng.random_range(1.0 / far..=1.0 / near) } else { 1.0 / near };
                Patch::filled(w, h, 1.0 / inv)
            }
        })
    }
}

fn default_size() -> usize {
    DEFAULT_SIZE
}

/// Scene description accepted by the simulator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub texture: TextureSpec,
    pub depth: DepthSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_size")]
    pub width: usize,
    #[serde(default = "default_size")]
    pub height: usize,
}

impl SceneSpec {
    pub fn new(texture: TextureSpec, depth: DepthSpec, seed: u64) -> Self {
        Self { texture, depth, seed, width: DEFAULT_SIZE, height: DEFAULT_SIZE }
    }

    pub fn with_size(mut self, width: usize, height: usize) -> Self {
        self.width = width;
        self.height = height;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParameter("scene size must be positive".into()));
        }
        self.texture.validate()?;
        parse_params::<DepthParams>(&self.depth.params)?;
        Ok(())
    }

    /// Scene number `index` of a dataset generated from this spec.
    pub fn build<T: Scalar>(&self, cam: &CameraConfig<T>, index: u64) -> Result<Scene<T>> {
        self.validate()?;
        let seed = derive_seed(self.seed, index);
        let tex = self.texture.generate(self.width, self.height, seed)?;
        let depth = self.depth.generate(self.width, self.height, cam, seed)?;
        Scene::new(tex.cast(), depth.cast(), seed)
    }
}
