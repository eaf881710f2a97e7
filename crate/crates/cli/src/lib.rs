//! Subcommand implementations for the `matrixlens` binary.
//!
//! Every command returns a JSON summary that `main` prints on stdout.
//! Errors bubble up as `anyhow::Error` and are reported as a single JSON
//! line on stderr.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use matrixlens_core::calctrace::{trace_for, verify_trace, CalcTrace, OpKind};
use matrixlens_core::datagen::{generate_dataset, GenConfig};
use matrixlens_core::detect::{dedup, emit_detections, parse_detections, plug_detector, DetectionSet, DetectorOptions, ImageRef, OracleParams, Unit};
use matrixlens_core::gridseg::{overlay, GridParams, ReconstructionReport};
use matrixlens_core::imgproc::{preprocess, PrepParams};
use matrixlens_core::matrix::parse_matrix_json;
use matrixlens_core::metrics::{coco_thresholds, evaluate, ImageEval, Interpolation};
use matrixlens_core::render::{encode, encoder_from_env, plan, render_sequence, Style};
use serde_json::{json, Value};

#[derive(Debug, Parser)]
#[command(name = "matrixlens", version, about = "Handwritten matrix recognition and step-by-step calculation videos")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic annotated dataset.
    Gen(GenArgs),
    /// Run preprocessing and dump every intermediate stage.
    Prep(PrepArgs),
    /// Detect symbols in an image and write the exchange file.
    Detect(DetectArgs),
    /// Rebuild a matrix from a detection file.
    Reconstruct(ReconstructArgs),
    /// Score prediction files against ground-truth labels.
    Eval(EvalArgs),
    /// Build and verify a calculation trace.
    Trace(TraceArgs),
    /// Render a trace to a frame sequence.
    Render(RenderArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Prep(_) => "prep",
            Command::Detect(_) => "detect",
            Command::Reconstruct(_) => "reconstruct",
            Command::Eval(_) => "eval",
            Command::Trace(_) => "trace",
            Command::Render(_) => "render",
            Command::Serve(_) => "serve",
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// JSON generator config; missing fields take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub count: u64,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    pub image: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub block_size: Option<u32>,
    #[arg(long)]
    pub offset: Option<f64>,
    #[arg(long)]
    pub blur_size: Option<u32>,
    #[arg(long)]
    pub margin: Option<u32>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// Read boxes from this label or exchange file instead of running a detector.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// `oracle` or `file:<dir>`.
    #[arg(long, default_value = "oracle")]
    pub detector: String,
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    #[arg(long, default_value_t = 0.0)]
    pub dropout: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// IoU threshold for duplicate suppression.
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    /// Exchange file to write; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Exchange file with normalized boxes.
    pub detections: PathBuf,
    /// Image the detections refer to; gives the frame size and overlay base.
    #[arg(long, conflicts_with = "size")]
    pub image: Option<PathBuf>,
    /// Frame size as `WxH` when no image is at hand.
    #[arg(long)]
    pub size: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write a PNG with boxes and split lines.
    #[arg(long)]
    pub overlay: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Interp {
    All,
    Eleven,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of `<stem>.txt` prediction files.
    #[arg(long)]
    pub pred: PathBuf,
    /// Directory of `<stem>.txt` ground-truth labels.
    #[arg(long)]
    pub truth: PathBuf,
    /// IoU threshold; repeatable.
    #[arg(long = "iou", conflicts_with = "coco")]
    pub iou: Vec<f64>,
    /// Use thresholds 0.50:0.05:0.95.
    #[arg(long)]
    pub coco: bool,
    #[arg(long, value_enum, default_value_t = Interp::All)]
    pub interp: Interp,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub pr_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    /// det, add or mul.
    #[arg(long)]
    pub mode: String,
    /// Matrix JSON: `{"rows","cols","values"}` or a nested array.
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    pub trace: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub fps: u32,
    #[arg(long)]
    pub style: Option<PathBuf>,
    /// Also rasterize every frame to PNG.
    #[arg(long)]
    pub png: bool,
    /// Encode `video.mp4` with the external encoder (implies --png).
    #[arg(long)]
    pub video: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "workspace")]
    pub workspace: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long)]
    pub style: Option<PathBuf>,
    #[arg(long, default_value = "oracle")]
    pub detector: String,
    #[arg(long, default_value_t = 30)]
    pub fps: u32,
    /// Encode a video after rendering each job.
    #[arg(long)]
    pub encode: bool,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn load_style(path: Option<&Path>) -> Result<Style> {
    match path {
        Some(p) => Ok(Style::from_json(&read(p)?)?),
        None => Ok(Style::default()),
    }
}

fn parse_size(s: &str) -> Result<(u32, u32)> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| anyhow!("size must look like 640x480, got '{s}'"))?;
    let (w, h): (u32, u32) = (w.trim().parse()?, h.trim().parse()?);
    if w == 0 || h == 0 {
        bail!("size must be positive, got '{s}'");
    }
    Ok((w, h))
}

/// Run one subcommand. `serve` blocks until the server stops.
pub fn run(cmd: Command) -> Result<Value> {
    match cmd {
        Command::Gen(a) => gen(a),
        Command::Prep(a) => prep(a),
        Command::Detect(a) => detect(a),
        Command::Reconstruct(a) => reconstruct(a),
        Command::Eval(a) => eval(a),
        Command::Trace(a) => trace(a).map(|(_, v)| v),
        Command::Render(a) => render(a),
        Command::Serve(a) => serve(a),
    }
}

fn gen(a: GenArgs) -> Result<Value> {
    let mut cfg: GenConfig = match &a.config {
        Some(p) => serde_json::from_str(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => GenConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let m = generate_dataset(&cfg, a.count, &a.out)?;
    Ok(json!({ "out": a.out, "count": m.count, "train": m.train, "test": m.test, "seed": m.seed }))
}

fn prep(a: PrepArgs) -> Result<Value> {
    let img = image::open(&a.image).with_context(|| format!("opening {}", a.image.display()))?;
    let mut params = PrepParams::default();
    if let Some(v) = a.block_size {
        params.block_size = v;
    }
    if let Some(v) = a.offset {
        params.offset = v;
    }
    if let Some(v) = a.blur_size {
        params.blur_size = v;
    }
    if let Some(v) = a.margin {
        params.margin = v;
    }
    let out = preprocess(&img, &params)?;
    out.dump_stages(&a.out)?;
    let summary = json!({ "out": a.out, "roi": out.roi, "corners": out.corners.corners.len() });
    write(&a.out.join("prep.json"), serde_json::to_string_pretty(&summary)?.as_bytes())?;
    Ok(summary)
}

fn detect(a: DetectArgs) -> Result<Value> {
    let image = ImageRef::open(&a.image)?;
    let set = match &a.labels {
        Some(p) => {
            let dets = parse_detections(&read(p)?, &p.display().to_string())?;
            DetectionSet::new(dets, image.width, image.height, Unit::Normalized)
        }
        None => {
            let opts = DetectorOptions { oracle: OracleParams { jitter_px: a.jitter, dropout_p: a.dropout }, seed: a.seed };
            plug_detector(&a.detector, &opts)?.detect(&image)?
        }
    };
    let before = set.len();
    let set = dedup(&set, a.tau)?;
    let text = emit_detections(&set);
    let summary = json!({ "image": a.image, "detections": set.len(), "suppressed": before - set.len(), "out": a.out });
    match &a.out {
        Some(p) => {
            write(p, text.as_bytes())?;
            Ok(summary)
        }
        None => Ok(Value::String(text)),
    }
}

fn reconstruct(a: ReconstructArgs) -> Result<Value> {
    let base = match &a.image {
        Some(p) => Some(image::open(p).with_context(|| format!("opening {}", p.display()))?.to_luma8()),
        None => None,
    };
    let (w, h) = match (&base, &a.size) {
        (Some(img), _) => img.dimensions(),
        (None, Some(s)) => parse_size(s)?,
        (None, None) => bail!("reconstruct needs --image or --size"),
    };
    let dets = parse_detections(&read(&a.detections)?, &a.detections.display().to_string())?;
    let set = DetectionSet::new(dets, w, h, Unit::Normalized);
    let (report, grid) = ReconstructionReport::build(&set, &GridParams::default());
    let doc = serde_json::to_value(&report)?;
    if let Some(p) = &a.out {
        write(p, serde_json::to_string_pretty(&doc)?.as_bytes())?;
    }
    if let Some(p) = &a.overlay {
        let img = overlay(base.as_ref(), &set, grid.as_ref());
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        img.save(p).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(e) = &report.error {
        bail!("reconstruction failed: {e}");
    }
    Ok(doc)
}

fn txt_stems(dir: &Path) -> Result<Vec<String>> {
    let mut stems: Vec<String> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .collect();
    stems.sort();
    Ok(stems)
}

fn eval(a: EvalArgs) -> Result<Value> {
    let thresholds = match (a.coco, a.iou.is_empty()) {
        (true, _) => coco_thresholds(),
        (false, true) => vec![0.5],
        (false, false) => a.iou.clone(),
    };
    let interp = match a.interp {
        Interp::All => Interpolation::AllPoints,
        Interp::Eleven => Interpolation::ElevenPoint,
    };
    let mut images = Vec::new();
    for stem in txt_stems(&a.truth)? {
        let tp = a.truth.join(format!("{stem}.txt"));
        let truths = parse_detections(&read(&tp)?, &tp.display().to_string())?;
        let pp = a.pred.join(format!("{stem}.txt"));
        let predictions = if pp.is_file() { parse_detections(&read(&pp)?, &pp.display().to_string())? } else { Vec::new() };
        images.push(ImageEval { name: stem, predictions, truths });
    }
    if images.is_empty() {
        bail!("no ground-truth files in {}", a.truth.display());
    }
    let report = evaluate(&images, &thresholds, interp)?;
    let doc = serde_json::to_value(&report)?;
    if let Some(p) = &a.out {
        write(p, serde_json::to_string_pretty(&doc)?.as_bytes())?;
    }
    if let Some(p) = &a.pr_csv {
        write(p, report.pr_csv().as_bytes())?;
    }
    Ok(doc)
}

fn load_matrix(path: &Path) -> Result<matrixlens_core::MatrixValue> {
    parse_matrix_json(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

/// Build, verify and (optionally) save a trace. Returns the trace and the
/// value to print.
pub fn trace(a: TraceArgs) -> Result<(CalcTrace, Value)> {
    let mode: OpKind = a.mode.parse().map_err(|e: String| anyhow!(e))?;
    let mut operands = vec![load_matrix(&a.a)?];
    if let Some(b) = &a.b {
        operands.push(load_matrix(b)?);
    }
    let refs: Vec<_> = operands.iter().collect();
    let t = trace_for(mode, &refs)?;
    let report = verify_trace(&t);
    if !report.passed {
        bail!("trace failed verification at steps {:?}", report.failed_steps());
    }
    let text = t.to_json();
    let out = match &a.out {
        Some(p) => {
            write(p, text.as_bytes())?;
            json!({ "out": p, "mode": mode.as_str(), "steps": t.steps.len(), "result": t.result })
        }
        None => serde_json::from_str(&text)?,
    };
    Ok((t, out))
}

fn render(a: RenderArgs) -> Result<Value> {
    let t: CalcTrace = serde_json::from_str(&read(&a.trace)?).with_context(|| format!("parsing {}", a.trace.display()))?;
    let style = load_style(a.style.as_deref())?;
    let fp = plan(&t, &style, a.fps)?;
    let manifest = render_sequence(&fp, &a.out, a.png || a.video)?;
    let mut doc = json!({ "out": a.out, "fps": manifest.fps, "frame_count": manifest.frame_count, "png": manifest.png });
    if a.video {
        let outcome = encode(&manifest, &encoder_from_env(), &a.out.join("video.mp4"))?;
        doc["video"] = serde_json::to_value(&outcome)?;
    }
    Ok(doc)
}

fn serve(a: ServeArgs) -> Result<Value> {
    let mut cfg = matrixlens_service::ServiceConfig::new(&a.workspace);
    cfg.style = load_style(a.style.as_deref())?;
    cfg.detector = a.detector;
    cfg.fps = a.fps;
    cfg.encode = a.encode;
    let addr: SocketAddr = format!("{}:{}", a.host, a.port).parse().context("invalid listen address")?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(matrixlens_service::serve(cfg, addr))?;
    Ok(json!({ "stopped": true }))
}

/// The single-line error document written to stderr.
pub fn error_line(command: &str, err: &anyhow::Error) -> String {
    json!({ "command": command, "error": format!("{err:#}") }).to_string()
}
