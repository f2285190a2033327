//! Evaluation protocols, accuracy metrics and zoom-and-crop registration.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{CameraConfig, MetricParams};
use crate::contrast::{solve_focal_stack_contrast, ContrastMetricId};
use crate::dp_match::{solve_focal_stack_dp, DpMetricId};
use crate::dp_single::{solve_blur_match_near, solve_single_slice_dp, DEFAULT_MAX_SHIFT};
use crate::error::{Error, Result};
use crate::optics::breathing_scale;
use crate::patch::{DualPixelPatch, FocalStack, Patch};
use crate::resample::{zoom_about_center, Interpolation};
use crate::scalar::Scalar;

/// Accuracy thresholds reported, in ladder indices.
pub const WITHIN: [usize; 4] = [0, 1, 2, 4];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub algorithm: String,
    pub within_0: f64,
    pub within_1: f64,
    pub within_2: f64,
    pub within_4: f64,
    pub mae: f64,
    pub rmse: f64,
    pub count: usize,
}

impl EvalReport {
    pub fn within(&self, k: usize) -> f64 {
        match k {
            0 => self.within_0,
            1 => self.within_1,
            2 => self.within_2,
            _ => self.within_4,
        }
    }
}

pub fn score_predictions(preds: &[usize], gts: &[usize]) -> Result<EvalReport> {
    if preds.len() != gts.len() {
        return Err(Error::DimensionMismatch(format!("{} predictions for {} ground truths", preds.len(), gts.len())));
    }
    if preds.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = preds.len() as f64;
    let errs: Vec<usize> = preds.iter().zip(gts).map(|(&p, &g)| p.abs_diff(g)).collect();
    let frac = |k: usize| errs.iter().filter(|&&e| e <= k).count() as f64 / n;
    let mae = errs.iter().map(|&e| e as f64).sum::<f64>() / n;
    let rmse = (errs.iter().map(|&e| (e * e) as f64).sum::<f64>() / n).sqrt();
    Ok(EvalReport {
        algorithm: String::new(),
        within_0: frac(0),
        within_1: frac(1),
        within_2: frac(2),
        within_4: frac(4),
        mae,
        rmse,
        count: preds.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    FocalStack,
    SingleSlice,
    MultiStep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    Green,
    DualPixel,
}

impl InputMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InputMode::Green => "green",
            InputMode::DualPixel => "dual_pixel",
        }
    }
}

impl fmt::Display for InputMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InputMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "green" => Ok(InputMode::Green),
            "dual_pixel" => Ok(InputMode::DualPixel),
            _ => Err(Error::InvalidParameter(format!("unknown input mode `{}` (green, dual_pixel)", s))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    /// Number of observe-and-move steps; 1 for the single-slice protocol.
    pub steps_m: usize,
    pub input_mode: InputMode,
}

impl ProtocolSpec {
    pub fn focal_stack(input_mode: InputMode) -> Self {
        Self { kind: ProtocolKind::FocalStack, steps_m: 1, input_mode }
    }

    pub fn single_slice(input_mode: InputMode) -> Self {
        Self { kind: ProtocolKind::SingleSlice, steps_m: 1, input_mode }
    }

    pub fn multi_step(steps_m: usize, input_mode: InputMode) -> Self {
        Self { kind: ProtocolKind::MultiStep, steps_m, input_mode }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ProtocolKind::MultiStep if self.steps_m < 2 => Err(Error::InvalidParameter(format!(
                "multi-step protocol needs at least 2 steps, got {}",
                self.steps_m
            ))),
            _ => Ok(()),
        }
    }

    /// Label used in reports: `focal_stack`, `single_slice` or `multi_step:<m>`.
    pub fn label(&self) -> String {
        match self.kind {
            ProtocolKind::FocalStack => "focal_stack".into(),
            ProtocolKind::SingleSlice => "single_slice".into(),
            ProtocolKind::MultiStep => format!("multi_step:{}", self.steps_m),
        }
    }
}

/// What an algorithm is allowed to look at.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observation<'a> {
    FullStack,
    /// Slices observed so far, oldest first; the last one is the current
    /// lens position.
    Slices(&'a [usize]),
}

pub trait Algorithm<T: Scalar>: Sync {
    fn name(&self) -> String;

    /// Whether the algorithm needs the left/right views.
    fn needs_dual_pixel(&self) -> bool;

    fn supports(&self, kind: ProtocolKind) -> bool;

    fn predict(&self, stack: &FocalStack<T>, observed: Observation<'_>) -> Result<usize>;
}

/// Argmax of a contrast measure over the whole stack.
#[derive(Clone, Debug)]
pub struct ContrastAlgorithm<T> {
    pub id: ContrastMetricId,
    pub params: MetricParams<T>,
}

impl<T: Scalar> Algorithm<T> for ContrastAlgorithm<T> {
    fn name(&self) -> String {
        self.id.to_string()
    }

    fn needs_dual_pixel(&self) -> bool {
        false
    }

    fn supports(&self, kind: ProtocolKind) -> bool {
        kind == ProtocolKind::FocalStack
    }

    fn predict(&self, stack: &FocalStack<T>, _: Observation<'_>) -> Result<usize> {
        solve_focal_stack_contrast(self.id, stack, &self.params)
    }
}

/// Argmin of a left/right mismatch over the whole stack.
#[derive(Clone, Debug)]
pub struct DpMatchAlgorithm<T> {
    pub id: DpMetricId,
    pub params: MetricParams<T>,
}

impl<T: Scalar> Algorithm<T> for DpMatchAlgorithm<T> {
    fn name(&self) -> String {
        self.id.to_string()
    }

    fn needs_dual_pixel(&self) -> bool {
        true
    }

    fn supports(&self, kind: ProtocolKind) -> bool {
        kind == ProtocolKind::FocalStack
    }

    fn predict(&self, stack: &FocalStack<T>, _: Observation<'_>) -> Result<usize> {
        solve_focal_stack_dp(self.id, stack, &self.params)
    }
}

/// Disparity of the current slice mapped to an index through the
/// calibration table.
#[derive(Clone, Debug)]
pub struct ZnccCalibrated<T> {
    pub cam: CameraConfig<T>,
    pub max_shift: usize,
    /// Patch center in normalized image coordinates.
    pub center: (T, T),
}

impl<T: Scalar> ZnccCalibrated<T> {
    pub fn new(cam: CameraConfig<T>) -> Self {
        let half = T::of(0.5);
        Self { cam, max_shift: DEFAULT_MAX_SHIFT, center: (half, half) }
    }
}

fn current_slice(observed: Observation<'_>) -> Result<usize> {
    match observed {
        Observation::Slices(s) => s.last().copied().ok_or(Error::EmptyInput),
        Observation::FullStack => Err(Error::InvalidParameter("single-slice algorithm given the full stack".into())),
    }
}

impl<T: Scalar> Algorithm<T> for ZnccCalibrated<T> {
    fn name(&self) -> String {
        "zncc_calibrated".into()
    }

    fn needs_dual_pixel(&self) -> bool {
        true
    }

    fn supports(&self, kind: ProtocolKind) -> bool {
        kind != ProtocolKind::FocalStack
    }

    fn predict(&self, stack: &FocalStack<T>, observed: Observation<'_>) -> Result<usize> {
        stack.require_dual_pixel()?;
        let k = current_slice(observed)?;
        solve_single_slice_dp(&stack.slices[k], k, &self.cam, self.center, self.max_shift)
    }
}

/// Green-channel blur matching against the in-focus slice of the stack,
/// resolving the two-root ambiguity toward the near root.
#[derive(Clone, Debug)]
pub struct BlurMatchNear<T> {
    pub cam: CameraConfig<T>,
}

impl<T: Scalar> Algorithm<T> for BlurMatchNear<T> {
    fn name(&self) -> String {
        "blur_match_near".into()
    }

    fn needs_dual_pixel(&self) -> bool {
        false
    }

    fn supports(&self, kind: ProtocolKind) -> bool {
        kind != ProtocolKind::FocalStack
    }

    fn predict(&self, stack: &FocalStack<T>, observed: Observation<'_>) -> Result<usize> {
        let k = current_slice(observed)?;
        let gt = stack.ground_truth_index.ok_or_else(|| Error::InvalidParameter("stack has no ground truth".into()))?;
        solve_blur_match_near(&stack.green(k), k, &stack.green(gt), &self.cam)
    }
}

/// One scored `(stack, start)` cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub stack: usize,
    pub start: Option<usize>,
    pub prediction: usize,
    pub ground_truth: usize,
    pub failed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolResult {
    pub protocol: String,
    pub input_mode: InputMode,
    pub report: EvalReport,
    /// Cells where the algorithm returned an error and the start index was
    /// scored instead.
    pub failures: usize,
    pub cells: Vec<Cell>,
}

fn as_input<T: Scalar>(stack: &FocalStack<T>, mode: InputMode) -> Result<FocalStack<T>> {
    match mode {
        InputMode::DualPixel => {
            stack.require_dual_pixel()?;
            Ok(stack.clone())
        }
        InputMode::Green => {
            let slices = (0..stack.len()).map(|k| DualPixelPatch::mono(stack.green(k))).collect();
            let mut g = FocalStack::new(slices, stack.focus_distances_m.clone(), stack.ground_truth_index, false)?;
            g.focal_breathing = stack.focal_breathing;
            Ok(g)
        }
    }
}

/// Runs `steps` observe-and-move rounds from `start`. An error at any round
/// ends the run at the slice being observed.
fn run_from_start<T: Scalar, A: Algorithm<T> + ?Sized>(
    alg: &A,
    stack: &FocalStack<T>,
    start: usize,
    steps: usize,
) -> (usize, bool) {
    let mut observed = vec![start];
    for _ in 0..steps {
        match alg.predict(stack, Observation::Slices(&observed)) {
            Ok(p) => observed.push(p.min(stack.len() - 1)),
            Err(_) => return (*observed.last().unwrap_or(&start), true),
        }
    }
    (*observed.last().unwrap_or(&start), false)
}

fn stack_cells<T: Scalar, A: Algorithm<T> + ?Sized>(
    alg: &A,
    spec: &ProtocolSpec,
    i: usize,
    stack: &FocalStack<T>,
) -> Result<Vec<Cell>> {
    let gt =
        stack.ground_truth_index.ok_or_else(|| Error::InvalidParameter(format!("stack {} has no ground truth", i)))?;
    let input = as_input(stack, spec.input_mode)?;
    Ok(match spec.kind {
        ProtocolKind::FocalStack => {
            let (prediction, failed) = match alg.predict(&input, Observation::FullStack) {
                Ok(p) => (p, false),
                // no start position: an error is scored as the middle slice
                Err(_) => (input.len() / 2, true),
            };
            vec![Cell { stack: i, start: None, prediction, ground_truth: gt, failed }]
        }
        ProtocolKind::SingleSlice | ProtocolKind::MultiStep => (0..input.len())
            .map(|start| {
                let (prediction, failed) = run_from_start(alg, &input, start, spec.steps_m);
                Cell { stack: i, start: Some(start), prediction, ground_truth: gt, failed }
            })
            .collect(),
    })
}

/// Evaluates `alg` on every stack of `dataset`. Stacks run in parallel on
/// the current rayon pool; cells are collected in stack order.
pub fn run_protocol<T: Scalar, A: Algorithm<T> + ?Sized>(
    alg: &A,
    spec: &ProtocolSpec,
    dataset: &[FocalStack<T>],
) -> Result<ProtocolResult> {
    spec.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !alg.supports(spec.kind) {
        return Err(Error::InvalidParameter(format!(
            "algorithm `{}` does not support the {} protocol",
            alg.name(),
            spec.label()
        )));
    }
    if alg.needs_dual_pixel() && spec.input_mode == InputMode::Green {
        return Err(Error::NoDualPixel);
    }
    let n = dataset[0].len();
    if let Some(bad) = dataset.iter().find(|s| s.len() != n) {
        return Err(Error::InconsistentStackLength { expected: n, found: bad.len() });
    }
    let per_stack: Vec<Vec<Cell>> =
        dataset.par_iter().enumerate().map(|(i, stack)| stack_cells(alg, spec, i, stack)).collect::<Result<_>>()?;
    let cells: Vec<Cell> = per_stack.into_iter().flatten().collect();
    let preds: Vec<usize> = cells.iter().map(|c| c.prediction).collect();
    let gts: Vec<usize> = cells.iter().map(|c| c.ground_truth).collect();
    let mut report = score_predictions(&preds, &gts)?;
    report.algorithm = alg.name();
    Ok(ProtocolResult {
        protocol: spec.label(),
        input_mode: spec.input_mode,
        report,
        failures: cells.iter().filter(|c| c.failed).count(),
        cells,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegistrationMode {
    /// Undo the magnification implied by each slice's focus distance.
    Calibrated,
    /// Search the magnification that best matches the reference slice.
    GridSearch,
}

impl FromStr for RegistrationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "calibrated" => Ok(RegistrationMode::Calibrated),
            "grid_search" => Ok(RegistrationMode::GridSearch),
            _ => Err(Error::InvalidParameter(format!("unknown registration `{}` (calibrated, grid_search)", s))),
        }
    }
}

/// Scale range and step of the grid-search registration.
pub const GRID_SCALE_RANGE: (f64, f64) = (1.0, 1.06);
pub const GRID_SCALE_STEP: f64 = 0.002;

/// Border lost when sampling at `c + (x - c) * scale`.
fn crop_margin(size: usize, scale: f64) -> usize {
    let c = (size as f64 - 1.0) * 0.5;
    ((c - c / scale) - 1e-9).ceil().max(0.0) as usize
}

fn center_crop<T: Scalar>(p: &Patch<T>, mx: usize, my: usize) -> Result<Patch<T>> {
    p.crop(mx, my, p.width() - 2 * mx, p.height() - 2 * my)
}

fn sq_dist<T: Scalar>(a: &Patch<T>, b: &Patch<T>) -> f64 {
    a.data().iter().zip(b.data()).map(|(&x, &y)| (x - y).as_f64().powi(2)).sum()
}

fn rescale_stack<T: Scalar>(stack: &FocalStack<T>, scales: &[T]) -> Result<FocalStack<T>> {
    let max_scale = scales.iter().map(|s| s.as_f64()).fold(1.0, f64::max);
    let (mx, my) = (crop_margin(stack.width(), max_scale), crop_margin(stack.height(), max_scale));
    if 2 * mx >= stack.width() || 2 * my >= stack.height() {
        return Err(Error::InsufficientResolution { level: 0, width: stack.width(), height: stack.height() });
    }
    let warp = |p: &Patch<T>, s: T| center_crop(&zoom_about_center(p, s, Interpolation::Bilinear), mx, my);
    let slices = stack
        .slices
        .iter()
        .zip(scales)
        .map(|(pair, &s)| Ok(DualPixelPatch { left: warp(&pair.left, s)?, right: warp(&pair.right, s)? }))
        .collect::<Result<_>>()?;
    let mut out = FocalStack::new(slices, stack.focus_distances_m.clone(), stack.ground_truth_index, stack.dual_pixel)?;
    out.focal_breathing = false;
    Ok(out)
}

/// Zoom-and-crop registration to the last slice of the stack. Returns the
/// stack unchanged when it carries no focal breathing.
pub fn register_stack<T: Scalar>(
    stack: &FocalStack<T>,
    mode: RegistrationMode,
    cam: &CameraConfig<T>,
) -> Result<FocalStack<T>> {
    if stack.is_empty() {
        return Err(Error::EmptyStack);
    }
    if !stack.focal_breathing {
        return Ok(stack.clone());
    }
    let last = stack.len() - 1;
    let g_ref = stack.focus_distances_m[last];
    let scales: Vec<T> = match mode {
        RegistrationMode::Calibrated => {
            stack.focus_distances_m.iter().map(|&g| breathing_scale(cam, g, g_ref)).collect::<Result<_>>()?
        }
        RegistrationMode::GridSearch => {
            let (lo, hi) = GRID_SCALE_RANGE;
            let steps = ((hi - lo) / GRID_SCALE_STEP).round() as usize;
            let (mx, my) = (crop_margin(stack.width(), hi), crop_margin(stack.height(), hi));
            let reference = center_crop(&stack.green(last), mx, my)?;
            (0..stack.len())
                .into_par_iter()
                .map(|k| {
                    let green = stack.green(k);
                    let mut best = (T::one(), f64::INFINITY);
                    for i in 0..=steps {
                        let s = T::of(lo + i as f64 * GRID_SCALE_STEP);
                        let cand = center_crop(&zoom_about_center(&green, s, Interpolation::Bilinear), mx, my)?;
                        let e = sq_dist(&cand, &reference);
                        if e < best.1 {
                            best = (s, e);
                        }
                    }
                    Ok(best.0)
                })
                .collect::<Result<_>>()?
        }
    };
    rescale_stack(stack, &scales)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::inverse_depth_ladder;

    struct Fixed(usize);

    impl Algorithm<f64> for Fixed {
        fn name(&self) -> String {
            "fixed".into()
        }
        fn needs_dual_pixel(&self) -> bool {
            false
        }
        fn supports(&self, _: ProtocolKind) -> bool {
            true
        }
        fn predict(&self, _: &FocalStack<f64>, _: Observation<'_>) -> Result<usize> {
            Ok(self.0)
        }
    }

    struct Oracle;

    impl Algorithm<f64> for Oracle {
        fn name(&self) -> String {
            "oracle".into()
        }
        fn needs_dual_pixel(&self) -> bool {
            false
        }
        fn supports(&self, _: ProtocolKind) -> bool {
            true
        }
        fn predict(&self, s: &FocalStack<f64>, _: Observation<'_>) -> Result<usize> {
            s.ground_truth_index.ok_or(Error::EmptyInput)
        }
    }

    struct Failing;

    impl Algorithm<f64> for Failing {
        fn name(&self) -> String {
            "failing".into()
        }
        fn needs_dual_pixel(&self) -> bool {
            false
        }
        fn supports(&self, _: ProtocolKind) -> bool {
            true
        }
        fn predict(&self, _: &FocalStack<f64>, _: Observation<'_>) -> Result<usize> {
            Err(Error::Textureless)
        }
    }

    /// Moves one index toward the ground truth per call.
    struct Stepper;

    impl Algorithm<f64> for Stepper {
        fn name(&self) -> String {
            "stepper".into()
        }
        fn needs_dual_pixel(&self) -> bool {
            false
        }
        fn supports(&self, _: ProtocolKind) -> bool {
            true
        }
        fn predict(&self, s: &FocalStack<f64>, o: Observation<'_>) -> Result<usize> {
            let k = current_slice(o)?;
            let gt = s.ground_truth_index.ok_or(Error::EmptyInput)?;
            Ok(if k < gt {
                k + 1
            } else if k > gt {
                k - 1
            } else {
                k
            })
        }
    }

    fn dataset(gts: &[usize]) -> Vec<FocalStack<f64>> {
        gts.iter()
            .map(|&gt| {
                let slices = vec![DualPixelPatch::mono(Patch::filled(4, 4, 0.5)); 5];
                FocalStack::new(slices, inverse_depth_ladder(5, 0.2, 2.0), Some(gt), false).unwrap()
            })
            .collect()
    }

    #[test]
    fn scoring_examples() {
        let r = score_predictions(&[3], &[3]).unwrap();
        assert_eq!((r.within_0, r.mae, r.rmse), (1.0, 0.0, 0.0));
        let r = score_predictions(&[1, 5], &[3, 3]).unwrap();
        assert_eq!((r.within_1, r.within_2, r.mae, r.rmse), (0.0, 1.0, 2.0, 2.0));
        let r = score_predictions(&[0, 4], &[0, 0]).unwrap();
        assert_eq!((r.within_0, r.within_4, r.mae), (0.5, 1.0, 2.0));
        assert!((r.rmse - 8f64.sqrt()).abs() < 1e-12);
        assert!(matches!(score_predictions(&[], &[]), Err(Error::EmptyInput)));
        assert!(score_predictions(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn oracle_is_perfect_under_every_protocol() {
        let data = dataset(&[0, 2, 4, 1]);
        for spec in [
            ProtocolSpec::focal_stack(InputMode::Green),
            ProtocolSpec::single_slice(InputMode::Green),
            ProtocolSpec::multi_step(3, InputMode::Green),
        ] {
            let r = run_protocol(&Oracle, &spec, &data).unwrap();
            assert_eq!(r.report.within_0, 1.0, "{}", spec.label());
        }
    }

    #[test]
    fn cells_per_protocol() {
        let data = dataset(&[1, 3]);
        let fs = run_protocol(&Fixed(2), &ProtocolSpec::focal_stack(InputMode::Green), &data).unwrap();
        assert_eq!(fs.report.count, 2);
        let ss = run_protocol(&Fixed(2), &ProtocolSpec::single_slice(InputMode::Green), &data).unwrap();
        assert_eq!(ss.report.count, 10);
        assert_eq!(ss.report.mae, 1.0);
    }

    #[test]
    fn failures_score_the_start_index() {
        let data = dataset(&[2]);
        let r = run_protocol(&Failing, &ProtocolSpec::single_slice(InputMode::Green), &data).unwrap();
        assert_eq!(r.failures, 5);
        let preds: Vec<usize> = r.cells.iter().map(|c| c.prediction).collect();
        assert_eq!(preds, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn protocol_preconditions() {
        let data = dataset(&[2]);
        assert!(ProtocolSpec::multi_step(1, InputMode::Green).validate().is_err());
        let dp = DpMatchAlgorithm { id: DpMetricId::Ncc, params: MetricParams::default() };
        assert!(matches!(
            run_protocol(&dp, &ProtocolSpec::focal_stack(InputMode::Green), &data),
            Err(Error::NoDualPixel)
        ));
        let c = ContrastAlgorithm { id: ContrastMetricId::TvL2, params: MetricParams::default() };
        assert!(run_protocol(&c, &ProtocolSpec::single_slice(InputMode::Green), &data).is_err());
        let mut mixed = dataset(&[1, 2]);
        mixed[1] = FocalStack::new(
            vec![DualPixelPatch::mono(Patch::filled(4, 4, 0.5)); 3],
            vec![0.2, 0.5, 2.0],
            Some(1),
            false,
        )
        .unwrap();
        assert!(matches!(
            run_protocol(&Fixed(0), &ProtocolSpec::focal_stack(InputMode::Green), &mixed),
            Err(Error::InconsistentStackLength { .. })
        ));
    }

    #[test]
    fn one_step_run_equals_single_slice() {
        let data = dataset(&[0, 3]);
        let one = ProtocolSpec { kind: ProtocolKind::MultiStep, steps_m: 1, input_mode: InputMode::Green };
        let single = ProtocolSpec::single_slice(InputMode::Green);
        for (i, s) in data.iter().enumerate() {
            assert_eq!(stack_cells(&Stepper, &one, i, s).unwrap(), stack_cells(&Stepper, &single, i, s).unwrap());
        }
        let r2 = run_protocol(&Stepper, &ProtocolSpec::multi_step(2, InputMode::Green), &data).unwrap();
        let r1 = run_protocol(&Stepper, &single, &data).unwrap();
        assert!(r2.report.mae < r1.report.mae);
    }

    #[test]
    fn labels() {
        assert_eq!(ProtocolSpec::multi_step(2, InputMode::DualPixel).label(), "multi_step:2");
        assert_eq!("dual_pixel".parse::<InputMode>().unwrap(), InputMode::DualPixel);
        assert!("rgb".parse::<InputMode>().is_err());
    }

    #[test]
    fn registration_without_breathing_is_identity() {
        let cam = CameraConfig::<f64>::default();
        let data = dataset(&[2]);
        for mode in [RegistrationMode::Calibrated, RegistrationMode::GridSearch] {
            assert_eq!(register_stack(&data[0], mode, &cam).unwrap(), data[0]);
        }
    }

    #[test]
    fn margins() {
        assert_eq!(crop_margin(128, 1.0), 0);
        assert_eq!(crop_margin(128, 1.0443), 3);
        assert_eq!(crop_margin(128, 1.06), 4);
    }
}
