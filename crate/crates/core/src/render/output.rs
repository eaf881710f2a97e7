use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use resvg::{tiny_skia, usvg};
use serde::{Deserialize, Serialize};

use super::plan::FramePlan;
use super::svg::render_scene;
use super::{io_err, RenderError, CANVAS_H, CANVAS_W};

pub const ENCODER_ENV: &str = "MATRIXLENS_ENCODER";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderManifest {
    pub dir: PathBuf,
    pub fps: u32,
    pub frame_count: usize,
    /// File names relative to `dir`, in frame order.
    pub frames: Vec<String>,
    pub png: bool,
    pub plan: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum EncodeOutcome {
    Encoded { path: PathBuf },
    Unavailable { message: String },
}

pub fn frame_name(n: usize, ext: &str) -> String {
    format!("frame_{n:06}.{ext}")
}

fn fontdb() -> Arc<usvg::fontdb::Database> {
    static DB: OnceLock<Arc<usvg::fontdb::Database>> = OnceLock::new();
    DB.get_or_init(|| {
        let mut db = usvg::fontdb::Database::new();
        db.load_system_fonts();
        Arc::new(db)
    })
    .clone()
}

/// Rasterize one SVG frame to PNG bytes at canvas size.
pub fn rasterize(svg: &str) -> Result<Vec<u8>, RenderError> {
    let opt = usvg::Options { fontdb: fontdb(), ..Default::default() };
    let tree = usvg::Tree::from_str(svg, &opt).map_err(|e| RenderError::Raster(e.to_string()))?;
    let mut pixmap = tiny_skia::Pixmap::new(CANVAS_W, CANVAS_H).ok_or_else(|| RenderError::Raster("pixmap".into()))?;
    resvg::render(&tree, tiny_skia::Transform::default(), &mut pixmap.as_mut());
    pixmap.encode_png().map_err(|e| RenderError::Raster(e.to_string()))
}

/// Write `frame_000001.svg` … plus `plan.json`, and PNG mirrors when asked.
/// Each phase is rendered once and copied to every frame it covers.
pub fn render_sequence(plan: &FramePlan, dir: &Path, png: bool) -> Result<RenderManifest, RenderError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    plan.phases.par_iter().try_for_each(|phase| -> Result<(), RenderError> {
        let svg = render_scene(&phase.scene, &plan.style);
        let raster = if png { Some(rasterize(&svg)?) } else { None };
        for n in phase.start..phase.start + phase.frames {
            let path = dir.join(frame_name(n, "svg"));
            fs::write(&path, &svg).map_err(io_err(&path))?;
            if let Some(bytes) = &raster {
                let path = dir.join(frame_name(n, "png"));
                fs::write(&path, bytes).map_err(io_err(&path))?;
            }
        }
        Ok(())
    })?;
    let plan_path = dir.join("plan.json");
    fs::write(&plan_path, plan.to_json()).map_err(io_err(&plan_path))?;
    let manifest = RenderManifest {
        dir: dir.to_path_buf(),
        fps: plan.fps,
        frame_count: plan.frame_count,
        frames: (1..=plan.frame_count).map(|n| frame_name(n, "svg")).collect(),
        png,
        plan: "plan.json".into(),
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest).expect("manifest serializes")).map_err(io_err(&path))?;
    Ok(manifest)
}

pub fn encoder_from_env() -> String {
    std::env::var(ENCODER_ENV).ok().filter(|s| !s.trim().is_empty()).unwrap_or_else(|| "ffmpeg".into())
}

fn ensure_pngs(manifest: &RenderManifest) -> Result<(), RenderError> {
    (1..=manifest.frame_count).into_par_iter().try_for_each(|n| {
        let png = manifest.dir.join(frame_name(n, "png"));
        if png.exists() {
            return Ok(());
        }
        let svg_path = manifest.dir.join(frame_name(n, "svg"));
        let svg = fs::read_to_string(&svg_path).map_err(io_err(&svg_path))?;
        fs::write(&png, rasterize(&svg)?).map_err(io_err(&png))
    })
}

/// Hand the PNG frames to an ffmpeg-compatible encoder. A missing binary is
/// not an error: the frames stay and the outcome says the encoder is
/// unavailable.
pub fn encode(manifest: &RenderManifest, encoder: &str, out: &Path) -> Result<EncodeOutcome, RenderError> {
    let probe = Command::new(encoder).arg("-version").output();
    if let Err(e) = probe {
        if e.kind() == std::io::ErrorKind::NotFound {
            return Ok(EncodeOutcome::Unavailable { message: format!("encoder unavailable: {encoder}") });
        }
        return Err(RenderError::Io { path: encoder.into(), source: e });
    }
    ensure_pngs(manifest)?;
    let pattern = manifest.dir.join("frame_%06d.png");
    let output = Command::new(encoder)
        .args(["-y", "-loglevel", "error", "-framerate"])
        .arg(manifest.fps.to_string())
        .arg("-i")
        .arg(&pattern)
        .args(["-c:v", "libx264", "-pix_fmt", "yuv420p"])
        .arg(out)
        .output()
        .map_err(|e| RenderError::Io { path: encoder.into(), source: e })?;
    if !output.status.success() {
        return Err(RenderError::EncoderFailed {
            status: output.status.to_string(),
            stderr: String::from_utf8_lossy(&output.stderr).trim().to_string(),
        });
    }
    Ok(EncodeOutcome::Encoded { path: out.to_path_buf() })
}
