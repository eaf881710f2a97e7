use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{GrayImage, ImageFormat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::annotation::emit_annotation;
use super::atlas::{load_symbol_atlas, InkAtlas, SymbolAtlas};
use super::compose::compose_element;
use super::layout::layout_matrix;
use super::noise::add_noise;
use super::{DatagenError, GenConfig, GenSample};
use crate::classes::{ClassInfo, CLASS_MAP};
use crate::matrix::MatrixValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// Truth sidecar contents.
pub type TruthRecord = MatrixValue;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEntry {
    pub index: u64,
    pub split: Split,
    pub image: String,
    pub label: String,
    pub truth: String,
    pub image_sha256: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: GenConfig,
    pub seed: u64,
    pub count: u64,
    pub train: u64,
    pub test: u64,
    pub class_map: Vec<ClassInfoRecord>,
    pub samples: Vec<SampleEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassInfoRecord {
    pub id: u8,
    pub glyph: String,
}

impl From<&ClassInfo> for ClassInfoRecord {
    fn from(c: &ClassInfo) -> Self {
        Self { id: c.id, glyph: c.glyph.to_string() }
    }
}

/// Train/test split sizes: ⌈0.9·N⌉ train, the rest test.
pub fn split_counts(n: u64) -> (u64, u64) {
    let train = (9 * n).div_ceil(10);
    (train, n - train)
}

/// Generate sample `index` of the dataset described by `cfg`.
pub fn generate_sample(cfg: &GenConfig, atlas: &InkAtlas, index: u64) -> Result<GenSample, DatagenError> {
    cfg.validate()?;
    let mut rng = cfg.sample_rng(index);
    let rows = cfg.rows.sample(&mut rng) as usize;
    let cols = cfg.cols.sample(&mut rng) as usize;
    let elements: Vec<Vec<_>> =
        (0..rows).map(|_| (0..cols).map(|_| compose_element(&mut rng, atlas, cfg)).collect()).collect();
    let sample = layout_matrix(&mut rng, atlas, &elements, cfg)?;
    Ok(add_noise(&mut rng, sample, cfg.noise_level))
}

fn encode_png(image: &GrayImage) -> Vec<u8> {
    let mut bytes = Vec::new();
    image.write_to(&mut Cursor::new(&mut bytes), ImageFormat::Png).expect("in-memory PNG encoding");
    bytes
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), DatagenError> {
    fs::write(path, bytes).map_err(|source| DatagenError::Io { path: path.to_path_buf(), source })
}

/// Generate `count` samples under `out` with the standard layout:
/// `images/{split}/NNNNNN.png`, `labels/{split}/NNNNNN.txt`,
/// `truth/{split}/NNNNNN.json` and `manifest.json`.
pub fn generate_dataset(cfg: &GenConfig, count: u64, out: &Path) -> Result<Manifest, DatagenError> {
    cfg.validate()?;
    if count == 0 {
        return Err(DatagenError::InvalidConfig("count must be at least 1".into()));
    }
    let atlas = match &cfg.atlas_dir {
        Some(dir) => load_symbol_atlas(dir)?,
        None => SymbolAtlas::synthetic(),
    };
    let atlas = atlas.prepare(cfg.white_cutoff)?;
    let (train, test) = split_counts(count);
    for kind in ["images", "labels", "truth"] {
        for split in [Split::Train, Split::Test] {
            let dir = out.join(kind).join(split.as_str());
            fs::create_dir_all(&dir).map_err(|source| DatagenError::Io { path: dir.clone(), source })?;
        }
    }

    let samples = (0..count)
        .into_par_iter()
        .map(|index| {
            let split = if index < train { Split::Train } else { Split::Test };
            let sample = generate_sample(cfg, &atlas, index)?;
            let stem = format!("{index:06}");
            let rel = |kind: &str, ext: &str| PathBuf::from(kind).join(split.as_str()).join(format!("{stem}.{ext}"));
            let (image, label, truth) = (rel("images", "png"), rel("labels", "txt"), rel("truth", "json"));
            let png = encode_png(&sample.image);
            write_file(&out.join(&image), &png)?;
            write_file(&out.join(&label), emit_annotation(&sample).as_bytes())?;
            write_file(&out.join(&truth), serde_json::to_string(&sample.truth)?.as_bytes())?;
            Ok(SampleEntry {
                index,
                split,
                image: image.to_string_lossy().replace('\\', "/"),
                label: label.to_string_lossy().replace('\\', "/"),
                truth: truth.to_string_lossy().replace('\\', "/"),
                image_sha256: format!("{:x}", Sha256::digest(&png)),
                rows: sample.rows(),
                cols: sample.cols(),
            })
        })
        .collect::<Result<Vec<_>, DatagenError>>()?;

    let manifest = Manifest {
        config: cfg.clone(),
        seed: cfg.seed,
        count,
        train,
        test,
        class_map: CLASS_MAP.iter().map(ClassInfoRecord::from).collect(),
        samples,
    };
    write_file(&out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(manifest)
}
