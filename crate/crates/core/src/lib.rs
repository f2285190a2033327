//! Autofocus benchmark library.
//!
//! Focus measures over image patches, left/right dual-pixel mismatch
//! measures, single-slice disparity solvers, a thin-lens focal-stack
//! renderer, an ordinal-regression learner and an evaluation harness.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar type for the common cases.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod camera;
pub mod contrast;
pub mod dct;
pub mod dp_match;
pub mod dp_single;
pub mod error;
pub mod eval;
pub mod filter;
pub mod io;
pub mod learn;
pub mod optics;
pub mod patch;
pub mod resample;
pub mod scalar;
pub mod scene;
pub mod wavelet;

pub use camera::{CalibrationGrid, CameraConfig, MetricParams};
pub use contrast::{contrast_score, solve_focal_stack_contrast, ContrastMetricId};
pub use dp_match::{dp_mismatch, solve_focal_stack_dp, zero_normalize, DpMetricId};
pub use dp_single::{blur_match_candidates, solve_blur_match_near, solve_single_slice_dp, zncc_disparity};
pub use error::{Error, Result};
pub use eval::{register_stack, run_protocol, score_predictions, Algorithm, EvalReport, InputMode, ProtocolSpec};
pub use io::{read_stack, write_stack};
pub use learn::{ordinal_loss, soft_target, train_scorer, ShallowScorer, TrainConfig};
pub use optics::{render_stack, PsfShape, Scene, SimOptions};
pub use patch::{DualPixelPatch, FocalStack, Patch};
pub use scalar::Scalar;
pub use scene::SceneSpec;

pub type PatchF64 = Patch<f64>;
pub type PatchF32 = Patch<f32>;
pub type DualPixelPatchF64 = DualPixelPatch<f64>;
pub type DualPixelPatchF32 = DualPixelPatch<f32>;
pub type FocalStackF64 = FocalStack<f64>;
pub type FocalStackF32 = FocalStack<f32>;
pub type CameraConfigF64 = CameraConfig<f64>;
pub type CameraConfigF32 = CameraConfig<f32>;
pub type MetricParamsF64 = MetricParams<f64>;
pub type MetricParamsF32 = MetricParams<f32>;
pub type SceneF64 = Scene<f64>;
