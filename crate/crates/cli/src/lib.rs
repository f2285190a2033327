//! Command implementations behind the `afbench` binary.
//!
//! `simulate` renders a seeded dataset, `eval` scores algorithms on it under
//! one protocol, `train` fits the learned scorer and `report` merges CSV
//! reports into a ranked table.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use afbench::eval::{
    register_stack, run_protocol, Algorithm, BlurMatchNear, ContrastAlgorithm, DpMatchAlgorithm, InputMode,
    ProtocolResult, ProtocolSpec, RegistrationMode, ZnccCalibrated,
};
use afbench::learn::{train_scorer, FeatureId, ScorerInput, ShallowScorer, TrainConfig};
use afbench::scene::SceneSpec;
use afbench::{
    io, render_stack, CameraConfigF64, ContrastMetricId, DpMetricId, FocalStackF64, MetricParamsF64, PsfShape,
    SimOptions,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DATASET_INDEX: &str = "dataset.json";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, specs or configuration; exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Unreadable or inconsistent data; exit code 3.
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl From<afbench::Error> for CliError {
    fn from(e: afbench::Error) -> Self {
        use afbench::Error as E;
        match e {
            E::InvalidParameter(_) | E::FocusInsideFocalLength | E::EvenKernel(..) | E::OutOfRange(..) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn data_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {}", path.display(), e))
}

fn require_exists(path: &Path) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{}: no such file or directory", path.display())))
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    require_exists(path)?;
    let text = fs::read_to_string(path).map_err(|e| data_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {}", path.display(), e)))
}

fn write_text(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| data_err(dir, e))?;
            }
            fs::write(p, text).map_err(|e| data_err(p, e))
        }
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Data(e.to_string())),
    }
}

#[derive(Debug, Parser)]
#[command(name = "afbench", version, about = "Autofocus benchmark: simulate, evaluate, train and report")]
pub struct Cli {
    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true, env = "AFBENCH_JOBS")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a seeded dataset of focal stacks.
    Simulate(SimulateArgs),
    /// Score algorithms on a dataset and write a CSV report.
    Eval(EvalArgs),
    /// Fit the learned scorer on a dataset.
    Train(TrainArgs),
    /// Merge CSV reports into a table ranked by RMSE.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scene spec JSON (texture, depth, seed, width, height).
    #[arg(long)]
    pub scene: PathBuf,
    /// Camera JSON; missing fields take the default camera's values.
    #[arg(long)]
    pub camera: Option<PathBuf>,
    /// Number of stacks.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Overrides the seed of the scene spec.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = PsfArg::Gaussian)]
    pub psf: PsfArg,
    #[arg(long, default_value_t = 0.0)]
    pub noise_sigma: f64,
    /// Apply the per-focus magnification of the lens.
    #[arg(long)]
    pub breathing: bool,
    /// Keep values above 1 instead of clipping.
    #[arg(long)]
    pub no_saturate: bool,
    /// Store only the mean of the two views.
    #[arg(long)]
    pub no_dual_pixel: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PsfArg {
    Gaussian,
    Disc,
    Hexagon,
}

impl From<PsfArg> for PsfShape {
    fn from(p: PsfArg) -> Self {
        match p {
            PsfArg::Gaussian => PsfShape::Gaussian,
            PsfArg::Disc => PsfShape::Disc,
            PsfArg::Hexagon => PsfShape::Hexagon,
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct MetricArgs {
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub wavelet_level: Option<usize>,
    #[arg(long)]
    pub gradient_threshold: Option<f64>,
    #[arg(long)]
    pub percentile: Option<f64>,
    #[arg(long)]
    pub ternary_epsilon: Option<f64>,
}

impl MetricArgs {
    fn apply(&self, mut p: MetricParamsF64) -> CliResult<MetricParamsF64> {
        if let Some(v) = self.sigma {
            p.sigma = v;
        }
        if let Some(v) = self.wavelet_level {
            p.wavelet_level = v;
        }
        if let Some(v) = self.gradient_threshold {
            p.gradient_threshold = v;
        }
        if let Some(v) = self.percentile {
            p.percentile = v;
        }
        if let Some(v) = self.ternary_epsilon {
            p.ternary_epsilon = v;
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ProtocolArg {
    FocalStack,
    SingleSlice,
    MultiStep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum InputArg {
    Green,
    DualPixel,
}

impl From<InputArg> for InputMode {
    fn from(i: InputArg) -> Self {
        match i {
            InputArg::Green => InputMode::Green,
            InputArg::DualPixel => InputMode::DualPixel,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum RegistrationArg {
    None,
    Calibrated,
    GridSearch,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Dataset directory written by `simulate`.
    #[arg(long)]
    pub data: PathBuf,
    /// Algorithm ids, comma separated or repeated; `all-contrast` and
    /// `all-dp` expand to every measure of that family.
    #[arg(long = "alg", value_delimiter = ',')]
    pub algs: Vec<String>,
    /// Learned scorer JSON written by `train`, evaluated as one more row.
    #[arg(long)]
    pub scorer: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ProtocolArg::FocalStack)]
    pub protocol: ProtocolArg,
    /// Observe-and-move rounds of the multi-step protocol (default 2).
    #[arg(long)]
    pub steps: Option<usize>,
    /// Input mode for every algorithm; by default dual-pixel for algorithms
    /// that need it and green otherwise.
    #[arg(long, value_enum)]
    pub input: Option<InputArg>,
    #[arg(long, value_enum, default_value_t = RegistrationArg::None)]
    pub registration: RegistrationArg,
    /// Disparity search range of `zncc_calibrated`, pixels.
    #[arg(long)]
    pub max_shift: Option<usize>,
    #[command(flatten)]
    pub metric: MetricArgs,
    /// CSV output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ScorerInputArg {
    FullStack,
    Observed,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Training config JSON; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub input: Option<ScorerInputArg>,
    /// Feature ids, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,
    #[command(flatten)]
    pub metric: MetricArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ReportFormat {
    Text,
    Markdown,
    Csv,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// CSV reports written by `eval`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Index written next to the stack directories.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub count: usize,
    pub scene: SceneSpec,
    pub camera: CameraConfigF64,
    pub options: SimOptions,
    /// Stack directories relative to the index.
    pub stacks: Vec<String>,
}

/// Default camera overlaid with the fields present in `path`. The analytic
/// calibration is recomputed unless the file gives one.
pub fn load_camera(path: Option<&Path>) -> CliResult<CameraConfigF64> {
    let Some(path) = path else {
        return Ok(CameraConfigF64::default());
    };
    let user: serde_json::Value = read_json(path)?;
    let serde_json::Value::Object(fields) = user else {
        return Err(CliError::Usage(format!("{}: camera must be a JSON object", path.display())));
    };
    let mut merged = serde_json::to_value(CameraConfigF64::default()).expect("camera serializes");
    let has_calibration = fields.contains_key("calibration");
    for (k, v) in fields {
        merged[k] = v;
    }
    let mut cam: CameraConfigF64 =
        serde_json::from_value(merged).map_err(|e| CliError::Usage(format!("{}: {}", path.display(), e)))?;
    if !has_calibration {
        cam = cam.with_analytic_calibration();
    }
    cam.validate()?;
    Ok(cam)
}

pub fn stack_dir_name(i: usize) -> String {
    format!("stack_{:04}", i)
}

pub fn cmd_simulate(a: &SimulateArgs) -> CliResult<DatasetIndex> {
    let mut scene: SceneSpec = read_json(&a.scene)?;
    if let Some(seed) = a.seed {
        scene.seed = seed;
    }
    scene.validate()?;
    let camera = load_camera(a.camera.as_deref())?;
    let options = SimOptions {
        psf_shape: a.psf.into(),
        noise_sigma: a.noise_sigma,
        focal_breathing: a.breathing,
        saturate: !a.no_saturate,
        dual_pixel: !a.no_dual_pixel,
    };
    options.validate()?;
    if a.count == 0 {
        return Err(CliError::Usage("--count must be positive".into()));
    }
    fs::create_dir_all(&a.out).map_err(|e| data_err(&a.out, e))?;
    let stacks: Vec<String> = (0..a.count).map(stack_dir_name).collect();
    stacks.par_iter().enumerate().try_for_each(|(i, name)| -> CliResult<()> {
        let s = scene.build(&camera, i as u64)?;
        let stack = render_stack(&s, &camera, &options)?;
        io::write_stack(&a.out.join(name), &stack)?;
        Ok(())
    })?;
    let index = DatasetIndex { count: a.count, scene, camera, options, stacks };
    let text = serde_json::to_string_pretty(&index).map_err(|e| CliError::Data(e.to_string()))? + "\n";
    write_text(Some(&a.out.join(DATASET_INDEX)), &text)?;
    Ok(index)
}

pub fn load_dataset(dir: &Path) -> CliResult<(DatasetIndex, Vec<FocalStackF64>)> {
    require_exists(dir)?;
    let path = dir.join(DATASET_INDEX);
    if !path.exists() {
        return Err(data_err(&path, "missing dataset index"));
    }
    let text = fs::read_to_string(&path).map_err(|e| data_err(&path, e))?;
    let index: DatasetIndex = serde_json::from_str(&text).map_err(|e| data_err(&path, e))?;
    let stacks = index
        .stacks
        .par_iter()
        .map(|name| {
            let p = dir.join(name);
            io::read_stack::<f64>(&p).map_err(|e| data_err(&p, e))
        })
        .collect::<CliResult<Vec<_>>>()?;
    if stacks.is_empty() {
        return Err(data_err(&path, "dataset lists no stacks"));
    }
    Ok((index, stacks))
}

/// Algorithms selectable by id.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgId {
    Contrast(ContrastMetricId),
    Dp(DpMetricId),
    ZnccCalibrated,
    BlurMatchNear,
}

pub const ALL_CONTRAST: &str = "all-contrast";
pub const ALL_DP: &str = "all-dp";

fn valid_ids() -> String {
    let mut ids: Vec<&str> = ContrastMetricId::ALL.iter().map(|m| m.as_str()).collect();
    ids.extend(DpMetricId::ALL.iter().map(|m| m.as_str()));
    ids.extend(["zncc_calibrated", "blur_match_near", ALL_CONTRAST, ALL_DP]);
    ids.join(", ")
}

pub fn expand_algs(names: &[String]) -> CliResult<Vec<AlgId>> {
    let mut out = Vec::new();
    for name in names.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        match name {
            ALL_CONTRAST => out.extend(ContrastMetricId::ALL.iter().map(|&m| AlgId::Contrast(m))),
            ALL_DP => out.extend(DpMetricId::ALL.iter().map(|&m| AlgId::Dp(m))),
            "zncc_calibrated" => out.push(AlgId::ZnccCalibrated),
            "blur_match_near" => out.push(AlgId::BlurMatchNear),
            other => {
                if let Ok(m) = other.parse::<ContrastMetricId>() {
                    out.push(AlgId::Contrast(m));
                } else if let Ok(m) = other.parse::<DpMetricId>() {
                    out.push(AlgId::Dp(m));
                } else {
                    return Err(CliError::Usage(format!("unknown algorithm `{}`; valid ids: {}", other, valid_ids())));
                }
            }
        }
    }
    Ok(out)
}

/// One report row; column order is the CSV schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub algorithm: String,
    pub protocol: String,
    pub input_mode: String,
    pub within_0: f64,
    pub within_1: f64,
    pub within_2: f64,
    pub within_4: f64,
    pub mae: f64,
    pub rmse: f64,
    pub count: usize,
    pub failures: usize,
}

pub const HEADER: [&str; 11] = [
    "algorithm",
    "protocol",
    "input_mode",
    "within_0",
    "within_1",
    "within_2",
    "within_4",
    "mae",
    "rmse",
    "count",
    "failures",
];

impl Row {
    fn from_result(r: &ProtocolResult) -> Self {
        let e = &r.report;
        Row {
            algorithm: e.algorithm.clone(),
            protocol: r.protocol.clone(),
            input_mode: r.input_mode.to_string(),
            within_0: e.within_0,
            within_1: e.within_1,
            within_2: e.within_2,
            within_4: e.within_4,
            mae: e.mae,
            rmse: e.rmse,
            count: e.count,
            failures: r.failures,
        }
    }

    fn fields(&self) -> Vec<String> {
        let f = |v: f64| format!("{:.6}", v);
        vec![
            self.algorithm.clone(),
            self.protocol.clone(),
            self.input_mode.clone(),
            f(self.within_0),
            f(self.within_1),
            f(self.within_2),
            f(self.within_4),
            f(self.mae),
            f(self.rmse),
            self.count.to_string(),
            self.failures.to_string(),
        ]
    }
}

pub fn rows_to_csv(rows: &[Row]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Data(e.to_string());
    w.write_record(HEADER).map_err(err)?;
    for r in rows {
        w.write_record(r.fields()).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Data(e.to_string()))
}

pub fn read_rows(path: &Path) -> CliResult<Vec<Row>> {
    require_exists(path)?;
    let mut r = csv::Reader::from_path(path).map_err(|e| data_err(path, e))?;
    let header = r.headers().map_err(|e| data_err(path, e))?;
    if header.iter().ne(HEADER) {
        return Err(data_err(path, format!("expected columns {}", HEADER.join(","))));
    }
    r.deserialize().map(|row| row.map_err(|e| data_err(path, e))).collect()
}

fn protocol_spec(a: &EvalArgs, input: InputMode) -> CliResult<ProtocolSpec> {
    let spec = match a.protocol {
        ProtocolArg::FocalStack | ProtocolArg::SingleSlice if a.steps.is_some_and(|s| s != 1) => {
            return Err(CliError::Usage("--steps applies to the multi_step protocol only".into()));
        }
        ProtocolArg::FocalStack => ProtocolSpec::focal_stack(input),
        ProtocolArg::SingleSlice => ProtocolSpec::single_slice(input),
        ProtocolArg::MultiStep => ProtocolSpec::multi_step(a.steps.unwrap_or(2), input),
    };
    spec.validate()?;
    Ok(spec)
}

pub fn cmd_eval(a: &EvalArgs) -> CliResult<Vec<Row>> {
    let ids = expand_algs(&a.algs)?;
    let scorer: Option<ShallowScorer<f64>> = match &a.scorer {
        Some(p) => {
            let s: ShallowScorer<f64> = read_json(p)?;
            s.validate()?;
            Some(s)
        }
        None => None,
    };
    if ids.is_empty() && scorer.is_none() {
        return Err(CliError::Usage(format!("no algorithm given; valid ids: {}", valid_ids())));
    }
    let params = a.metric.apply(MetricParamsF64::default())?;
    let (index, mut stacks) = load_dataset(&a.data)?;
    let cam = index.camera.clone();
    let mode = match a.registration {
        RegistrationArg::None => None,
        RegistrationArg::Calibrated => Some(RegistrationMode::Calibrated),
        RegistrationArg::GridSearch => Some(RegistrationMode::GridSearch),
    };
    if let Some(mode) = mode {
        stacks = stacks.par_iter().map(|s| register_stack(s, mode, &cam)).collect::<Result<_, _>>()?;
    }
    let mut algs: Vec<Box<dyn Algorithm<f64>>> = ids
        .iter()
        .map(|&id| -> Box<dyn Algorithm<f64>> {
            match id {
                AlgId::Contrast(id) => Box::new(ContrastAlgorithm { id, params }),
                AlgId::Dp(id) => Box::new(DpMatchAlgorithm { id, params }),
                AlgId::ZnccCalibrated => {
                    let mut z = ZnccCalibrated::new(cam.clone());
                    if let Some(m) = a.max_shift {
                        z.max_shift = m;
                    }
                    Box::new(z)
                }
                AlgId::BlurMatchNear => Box::new(BlurMatchNear { cam: cam.clone() }),
            }
        })
        .collect();
    if let Some(s) = scorer {
        algs.push(Box::new(s));
    }
    let mut rows = Vec::with_capacity(algs.len());
    for alg in &algs {
        let input = a.input.map(InputMode::from).unwrap_or(if alg.needs_dual_pixel() {
            InputMode::DualPixel
        } else {
            InputMode::Green
        });
        let spec = protocol_spec(a, input)?;
        if !alg.supports(spec.kind) {
            return Err(CliError::Usage(format!(
                "algorithm `{}` does not support the {} protocol",
                alg.name(),
                spec.label()
            )));
        }
        if alg.needs_dual_pixel() && input == InputMode::Green {
            return Err(CliError::Usage(format!("algorithm `{}` needs dual-pixel input", alg.name())));
        }
        rows.push(Row::from_result(&run_protocol(alg.as_ref(), &spec, &stacks)?));
    }
    write_text(a.out.as_deref(), &rows_to_csv(&rows)?)?;
    Ok(rows)
}

pub fn cmd_train(a: &TrainArgs) -> CliResult<ShallowScorer<f64>> {
    let mut config: TrainConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => TrainConfig::default(),
    };
    if let Some(v) = a.steps {
        config.steps = v;
    }
    if let Some(v) = a.batch {
        config.batch = v;
    }
    if let Some(v) = a.lr {
        config.lr = v;
    }
    if let Some(v) = a.seed {
        config.seed = v;
    }
    if let Some(v) = a.input {
        config.input = match v {
            ScorerInputArg::FullStack => ScorerInput::FullStack,
            ScorerInputArg::Observed => ScorerInput::Observed,
        };
    }
    if let Some(names) = &a.features {
        config.feature_ids = Some(names.iter().map(|n| n.trim().parse::<FeatureId>()).collect::<Result<_, _>>()?);
    }
    config.validate()?;
    let params = a.metric.apply(MetricParamsF64::default())?;
    let (_, stacks) = load_dataset(&a.data)?;
    let scorer = train_scorer(&stacks, &config, &params)?;
    let text = serde_json::to_string_pretty(&scorer).map_err(|e| CliError::Data(e.to_string()))? + "\n";
    write_text(Some(&a.out), &text)?;
    Ok(scorer)
}

/// Groups by input mode, then ascending RMSE; ties by MAE and name.
pub fn rank_rows(mut rows: Vec<Row>) -> Vec<Row> {
    rows.sort_by(|a, b| {
        a.input_mode
            .cmp(&b.input_mode)
            .then(a.rmse.total_cmp(&b.rmse))
            .then(a.mae.total_cmp(&b.mae))
            .then_with(|| a.algorithm.cmp(&b.algorithm))
            .then_with(|| a.protocol.cmp(&b.protocol))
    });
    rows
}

fn render_table(rows: &[Row], markdown: bool) -> String {
    let mut header = vec!["rank".to_string()];
    header.extend(HEADER.iter().map(|s| s.to_string()));
    let mut lines: Vec<Vec<String>> = Vec::new();
    let mut rank = 0;
    let mut group: Option<&str> = None;
    for r in rows {
        if group != Some(r.input_mode.as_str()) {
            group = Some(r.input_mode.as_str());
            rank = 0;
        }
        rank += 1;
        let mut line = vec![rank.to_string()];
        line.extend(r.fields());
        lines.push(line);
    }
    let mut out = String::new();
    if markdown {
        let row = |cells: &[String]| format!("| {} |\n", cells.join(" | "));
        out += &row(&header);
        out += &row(&header.iter().map(|_| "---".to_string()).collect::<Vec<_>>());
        for l in &lines {
            out += &row(l);
        }
        return out;
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| lines.iter().map(|l| l[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let fmt = |cells: &[String]| {
        let s: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (v, &w))| if (1..=3).contains(&c) { format!("{:<w$}", v) } else { format!("{:>w$}", v) })
            .collect();
        s.join("  ").trim_end().to_string() + "\n"
    };
    out += &fmt(&header);
    let mut group: Option<&str> = None;
    for (l, r) in lines.iter().zip(rows) {
        if group.is_some() && group != Some(r.input_mode.as_str()) {
            out += "\n";
        }
        group = Some(r.input_mode.as_str());
        out += &fmt(l);
    }
    out
}

pub fn cmd_report(a: &ReportArgs) -> CliResult<String> {
    let mut rows = Vec::new();
    for p in &a.inputs {
        rows.extend(read_rows(p)?);
    }
    let rows = rank_rows(rows);
    let text = match a.format {
        ReportFormat::Csv => rows_to_csv(&rows)?,
        ReportFormat::Markdown => render_table(&rows, true),
        ReportFormat::Text => render_table(&rows, false),
    };
    write_text(a.out.as_deref(), &text)?;
    Ok(text)
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be positive".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Usage(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Simulate(a) => {
            let idx = cmd_simulate(a)?;
            eprintln!("wrote {} stacks to {}", idx.count, a.out.display());
            Ok(())
        }
        Command::Eval(a) => {
            let rows = cmd_eval(a)?;
            if let Some(p) = &a.out {
                eprintln!("wrote {} rows to {}", rows.len(), p.display());
            }
            Ok(())
        }
        Command::Train(a) => {
            cmd_train(a)?;
            eprintln!("wrote scorer to {}", a.out.display());
            Ok(())
        }
        Command::Report(a) => cmd_report(a).map(|_| ()),
    })
}
