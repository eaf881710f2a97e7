use std::fs;
use std::path::Path;

use image::{GrayImage, Luma};
use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sprite::{binarize_to_alpha, AlphaSprite};
use super::DatagenError;
use crate::classes::{class_for_folder, ClassId, ClassInfo, CLASS_MAP, NUM_CLASSES};

/// Side of the raw symbol images.
pub const GLYPH_SIZE: u32 = 45;

/// Per-class glyph images on white background.
#[derive(Debug, Clone)]
pub struct SymbolAtlas {
    sprites: Vec<Vec<GrayImage>>,
}

impl SymbolAtlas {
    pub fn from_sprites(sprites: Vec<Vec<GrayImage>>) -> Result<Self, DatagenError> {
        if sprites.len() != NUM_CLASSES {
            let missing = sprites.len().min(NUM_CLASSES);
            return Err(incomplete(missing as ClassId));
        }
        for (id, list) in sprites.iter().enumerate() {
            if list.is_empty() || list.iter().any(|g| g.width() == 0 || g.height() == 0) {
                return Err(incomplete(id as ClassId));
            }
        }
        Ok(Self { sprites })
    }

    pub fn classes(&self) -> &'static [ClassInfo; NUM_CLASSES] {
        &CLASS_MAP
    }

    pub fn sprites(&self, class_id: ClassId) -> &[GrayImage] {
        &self.sprites[class_id as usize]
    }

    /// Built-in procedural handwriting: four stroke variants per class,
    /// drawn on the 45×45 raw-glyph grid.
    pub fn synthetic() -> Self {
        let sprites = (0..NUM_CLASSES as ClassId)
            .map(|id| (0..4).map(|variant| draw_glyph(id, variant)).collect())
            .collect();
        Self { sprites }
    }

    /// Binarize and crop every sprite; sprites that lose all ink are dropped.
    pub fn prepare(&self, white_cutoff: u8) -> Result<InkAtlas, DatagenError> {
        let mut sprites = Vec::with_capacity(NUM_CLASSES);
        for (id, list) in self.sprites.iter().enumerate() {
            let cropped: Vec<AlphaSprite> =
                list.iter().filter_map(|g| binarize_to_alpha(g, white_cutoff).crop_to_ink()).collect();
            if cropped.is_empty() {
                return Err(incomplete(id as ClassId));
            }
            sprites.push(cropped);
        }
        Ok(InkAtlas { sprites })
    }
}

/// Atlas of ink-cropped alpha sprites, ready for composition.
#[derive(Debug, Clone)]
pub struct InkAtlas {
    sprites: Vec<Vec<AlphaSprite>>,
}

impl InkAtlas {
    pub fn sprites(&self, class_id: ClassId) -> &[AlphaSprite] {
        &self.sprites[class_id as usize]
    }

    pub fn pick(&self, class_id: ClassId, rng: &mut impl Rng) -> &AlphaSprite {
        let list = self.sprites(class_id);
        &list[rng.random_range(0..list.len())]
    }
}

fn incomplete(class_id: ClassId) -> DatagenError {
    DatagenError::IncompleteAtlas { class_id, glyph: CLASS_MAP[class_id as usize].glyph }
}

/// Load an atlas from one sub-directory per class, named as in the raw
/// dataset (`+`, `-`, `0`..`9`, `=`, `[`, `]`, `times`). Files are read in
/// lexicographic order; unreadable images are skipped with a warning.
pub fn load_symbol_atlas(dir: &Path) -> Result<SymbolAtlas, DatagenError> {
    let io_err = |source| DatagenError::Io { path: dir.to_path_buf(), source };
    let mut sprites: Vec<Vec<GrayImage>> = vec![Vec::new(); NUM_CLASSES];
    let mut entries: Vec<_> = fs::read_dir(dir).map_err(io_err)?.collect::<Result<_, _>>().map_err(io_err)?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some(class_id) = class_for_folder(&name) else {
            continue;
        };
        if !entry.path().is_dir() {
            continue;
        }
        let class_dir = entry.path();
        let mut files: Vec<_> = fs::read_dir(&class_dir)
            .map_err(|source| DatagenError::Io { path: class_dir.clone(), source })?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        for file in files {
            match image::open(&file) {
                Ok(img) => {
                    let gray = img.to_luma8();
                    if gray.width() == 0 || gray.height() == 0 {
                        warn!("skipping empty glyph {}", file.display());
                    } else {
                        sprites[class_id as usize].push(gray);
                    }
                }
                Err(e) => warn!("skipping unreadable glyph {}: {e}", file.display()),
            }
        }
    }
    SymbolAtlas::from_sprites(sprites)
}

type Stroke = Vec<(f64, f64)>;

fn ellipse(cx: f64, cy: f64, rx: f64, ry: f64, from: f64, to: f64) -> Stroke {
    let n = 24;
    (0..=n)
        .map(|i| {
            let t = (from + (to - from) * i as f64 / n as f64).to_radians();
            (cx + rx * t.cos(), cy + ry * t.sin())
        })
        .collect()
}

fn strokes_for(class_id: ClassId) -> Vec<Stroke> {
    match class_id {
        0 => vec![vec![(10.0, 22.0), (34.0, 22.0)], vec![(22.0, 10.0), (22.0, 34.0)]],
        1 => vec![vec![(11.0, 22.0), (33.0, 22.0)]],
        2 => vec![ellipse(22.0, 22.0, 9.0, 15.0, 0.0, 360.0)],
        3 => vec![vec![(17.0, 12.0), (23.0, 7.0), (23.0, 37.0)]],
        4 => vec![vec![
            (13.0, 14.0),
            (16.0, 9.0),
            (22.0, 7.0),
            (28.0, 9.0),
            (31.0, 14.0),
            (29.0, 20.0),
            (13.0, 37.0),
            (32.0, 37.0),
        ]],
        5 => vec![vec![
            (13.0, 9.0),
            (30.0, 9.0),
            (21.0, 20.0),
            (28.0, 23.0),
            (31.0, 29.0),
            (27.0, 35.0),
            (20.0, 37.0),
            (13.0, 34.0),
        ]],
        6 => vec![vec![(27.0, 37.0), (27.0, 7.0), (12.0, 28.0), (33.0, 28.0)]],
        7 => vec![vec![
            (30.0, 7.0),
            (15.0, 7.0),
            (14.0, 20.0),
            (22.0, 18.0),
            (29.0, 21.0),
            (31.0, 28.0),
            (27.0, 35.0),
            (20.0, 37.0),
            (13.0, 34.0),
        ]],
        8 => vec![vec![
            (29.0, 9.0),
            (22.0, 7.0),
            (16.0, 12.0),
            (13.0, 22.0),
            (14.0, 31.0),
            (20.0, 37.0),
            (27.0, 35.0),
            (30.0, 29.0),
            (27.0, 22.0),
            (20.0, 21.0),
            (14.0, 26.0),
        ]],
        9 => vec![vec![(12.0, 7.0), (32.0, 7.0), (20.0, 37.0)]],
        10 => vec![ellipse(22.0, 14.0, 8.0, 7.0, 0.0, 360.0), ellipse(22.0, 29.0, 9.0, 8.0, 0.0, 360.0)],
        11 => vec![ellipse(22.0, 15.0, 8.0, 8.0, 0.0, 360.0), vec![(30.0, 15.0), (28.0, 28.0), (24.0, 37.0)]],
        12 => vec![vec![(10.0, 17.0), (34.0, 17.0)], vec![(10.0, 28.0), (34.0, 28.0)]],
        13 => vec![vec![(28.0, 3.0), (18.0, 3.0), (18.0, 41.0), (28.0, 41.0)]],
        14 => vec![vec![(16.0, 3.0), (26.0, 3.0), (26.0, 41.0), (16.0, 41.0)]],
        15 => vec![vec![(12.0, 12.0), (32.0, 32.0)], vec![(32.0, 12.0), (12.0, 32.0)]],
        _ => unreachable!("class id out of range"),
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    let (qx, qy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - qx).powi(2) + (p.1 - qy).powi(2)).sqrt()
}

/// Rasterize one procedural glyph variant with anti-aliased strokes.
fn draw_glyph(class_id: ClassId, variant: u32) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + class_id as u64 * 16 + variant as u64);
    let thickness = 2.2 + 0.6 * variant as f64;
    let shear = rng.random_range(-0.12..0.12);
    let strokes: Vec<Stroke> = strokes_for(class_id)
        .into_iter()
        .map(|s| {
            s.into_iter()
                .map(|(x, y)| {
                    let jx = rng.random_range(-1.2..1.2);
                    let jy = rng.random_range(-1.2..1.2);
                    (x + shear * (22.0 - y) + jx, y + jy)
                })
                .collect()
        })
        .collect();
    GrayImage::from_fn(GLYPH_SIZE, GLYPH_SIZE, |x, y| {
        let p = (x as f64 + 0.5, y as f64 + 0.5);
        let d = strokes
            .iter()
            .flat_map(|s| s.windows(2).map(move |w| segment_distance(p, w[0], w[1])))
            .fold(f64::INFINITY, f64::min);
        let coverage = (thickness / 2.0 + 0.5 - d).clamp(0.0, 1.0);
        Luma([(255.0 - coverage * 235.0).round() as u8])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn synthetic_atlas_is_complete() {
        let atlas = SymbolAtlas::synthetic();
        assert_eq!(atlas.classes()[15].glyph, "×");
        for id in 0..NUM_CLASSES as ClassId {
            assert!(!atlas.sprites(id).is_empty());
            for g in atlas.sprites(id) {
                assert_eq!(g.dimensions(), (GLYPH_SIZE, GLYPH_SIZE));
            }
        }
        let ink = atlas.prepare(200).unwrap();
        // digits are taller than wide; minus is flat
        let one = &ink.sprites(3)[0];
        assert!(one.height > 25);
        assert!(ink.sprites(1)[0].height < 10);
    }

    #[test]
    fn empty_directory_is_incomplete() {
        let dir = tempdir().unwrap();
        let err = load_symbol_atlas(dir.path()).unwrap_err();
        assert!(matches!(err, DatagenError::IncompleteAtlas { class_id: 0, .. }), "{err}");
    }

    #[test]
    fn loads_one_glyph_per_class() {
        let dir = tempdir().unwrap();
        let synthetic = SymbolAtlas::synthetic();
        for info in CLASS_MAP.iter() {
            let class_dir = dir.path().join(info.folder);
            std::fs::create_dir(&class_dir).unwrap();
            synthetic.sprites(info.id)[0].save(class_dir.join("a.png")).unwrap();
        }
        // an unreadable file is skipped, not fatal
        std::fs::write(dir.path().join("7").join("broken.jpg"), b"not an image").unwrap();
        let atlas = load_symbol_atlas(dir.path()).unwrap();
        for id in 0..NUM_CLASSES as ClassId {
            assert_eq!(atlas.sprites(id).len(), 1);
            assert_eq!(atlas.sprites(id)[0].dimensions(), (45, 45));
        }
        assert_eq!(atlas.classes()[15].glyph, "×");
    }

    #[test]
    fn missing_class_named_in_error() {
        let dir = tempdir().unwrap();
        let synthetic = SymbolAtlas::synthetic();
        for info in CLASS_MAP.iter().filter(|c| c.id != 14) {
            let class_dir = dir.path().join(info.folder);
            std::fs::create_dir(&class_dir).unwrap();
            synthetic.sprites(info.id)[0].save(class_dir.join("a.png")).unwrap();
        }
        let err = load_symbol_atlas(dir.path()).unwrap_err();
        assert!(err.to_string().contains("class 14"), "{err}");
    }
}
