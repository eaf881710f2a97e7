use std::ffi::OsStr;
use std::path::{Component, Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{parse_detections, perturb_boxes, DetectError, DetectionSet, OracleParams, Unit};
use crate::datagen::parse_annotation;

/// An image handed to a detector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRef {
    pub path: PathBuf,
    pub width: u32,
    pub height: u32,
}

impl ImageRef {
    /// Reads only the header to learn the dimensions.
    pub fn open(path: &Path) -> Result<Self, DetectError> {
        let (width, height) = image::image_dimensions(path).map_err(|e| DetectError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()),
        })?;
        Ok(Self { path: path.to_path_buf(), width, height })
    }

    fn stem(&self) -> &str {
        self.path.file_stem().and_then(OsStr::to_str).unwrap_or("")
    }
}

/// Anything that turns an image into pixel-unit detections.
pub trait Detector: Send {
    fn name(&self) -> String;
    fn detect(&mut self, image: &ImageRef) -> Result<DetectionSet, DetectError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DetectorOptions {
    pub oracle: OracleParams,
    pub seed: u64,
}

/// Perturbs the label file that accompanies a generated image.
#[derive(Debug, Clone)]
pub struct OracleDetector {
    pub params: OracleParams,
    pub seed: u64,
}

/// Label paths tried for an image: `images/…/x.png → labels/…/x.txt`,
/// then `x.txt` beside the image.
fn label_candidates(path: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let comps: Vec<Component> = path.components().collect();
    if let Some(pos) = comps.iter().rposition(|c| c.as_os_str() == "images") {
        let mut p = PathBuf::new();
        for (i, c) in comps.iter().enumerate() {
            p.push(if i == pos { OsStr::new("labels") } else { c.as_os_str() });
        }
        out.push(p.with_extension("txt"));
    }
    out.push(path.with_extension("txt"));
    out
}

impl Detector for OracleDetector {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn detect(&mut self, image: &ImageRef) -> Result<DetectionSet, DetectError> {
        let label = label_candidates(&image.path)
            .into_iter()
            .find(|p| p.is_file())
            .ok_or_else(|| DetectError::LabelsNotFound(image.path.clone()))?;
        let text = std::fs::read_to_string(&label).map_err(|source| DetectError::Io { path: label.clone(), source })?;
        let boxes = parse_annotation(&text).map_err(|e| DetectError::Parse {
            path: label.display().to_string(),
            line: match &e {
                crate::datagen::AnnotationError::FieldCount { line, .. } | crate::datagen::AnnotationError::Invalid { line, .. } => *line,
            },
            msg: e.to_string(),
        })?;
        // per-image stream so results do not depend on call order
        let digest = Sha256::digest(image.stem().as_bytes());
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(u64::from_le_bytes(digest[..8].try_into().unwrap()));
        perturb_boxes(&boxes, image.width, image.height, &self.params, &mut rng)
    }
}

/// Reads `<dir>/<stem>.txt` in the exchange format.
#[derive(Debug, Clone)]
pub struct FileDetector {
    pub dir: PathBuf,
}

impl Detector for FileDetector {
    fn name(&self) -> String {
        format!("file:{}", self.dir.display())
    }

    fn detect(&mut self, image: &ImageRef) -> Result<DetectionSet, DetectError> {
        let path = self.dir.join(format!("{}.txt", image.stem()));
        if !path.is_file() {
            return Err(DetectError::LabelsNotFound(path));
        }
        let text = std::fs::read_to_string(&path).map_err(|source| DetectError::Io { path: path.clone(), source })?;
        let dets = parse_detections(&text, &path.display().to_string())?;
        Ok(DetectionSet::new(dets, image.width, image.height, Unit::Normalized).to_pixels())
    }
}

/// Look up a detector by name: `oracle` or `file:<dir>`.
pub fn plug_detector(name: &str, opts: &DetectorOptions) -> Result<Box<dyn Detector>, DetectError> {
    if name == "oracle" {
        opts.oracle.validate()?;
        return Ok(Box::new(OracleDetector { params: opts.oracle, seed: opts.seed }));
    }
    if let Some(dir) = name.strip_prefix("file:").filter(|d| !d.is_empty()) {
        return Ok(Box::new(FileDetector { dir: PathBuf::from(dir) }));
    }
    Err(DetectError::UnknownDetector(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::{emit_detections, Detection};

    #[test]
    fn names() {
        let opts = DetectorOptions::default();
        assert_eq!(plug_detector("oracle", &opts).unwrap().name(), "oracle");
        assert_eq!(plug_detector("file:/tmp/x", &opts).unwrap().name(), "file:/tmp/x");
        assert!(matches!(plug_detector("nosuch", &opts), Err(DetectError::UnknownDetector(_))));
        assert!(plug_detector("file:", &opts).is_err());
    }

    #[test]
    fn label_paths() {
        let c = label_candidates(Path::new("/d/images/train/000001.png"));
        assert_eq!(c[0], PathBuf::from("/d/labels/train/000001.txt"));
        assert_eq!(c[1], PathBuf::from("/d/images/train/000001.txt"));
    }

    #[test]
    fn file_detector_reads_back() {
        let dir = tempfile::tempdir().unwrap();
        let set = DetectionSet::new(vec![Detection::new(5, 0.5, 0.25, 0.5, 0.1, 0.2)], 200, 100, Unit::Normalized);
        std::fs::write(dir.path().join("img.txt"), emit_detections(&set)).unwrap();
        let mut det = plug_detector(&format!("file:{}", dir.path().display()), &DetectorOptions::default()).unwrap();
        let image = ImageRef { path: PathBuf::from("/elsewhere/img.png"), width: 200, height: 100 };
        let got = det.detect(&image).unwrap();
        assert_eq!(got.unit, Unit::Pixel);
        assert_eq!(got.detections[0].cx, 50.0);
        let missing = ImageRef { path: PathBuf::from("/elsewhere/other.png"), ..image };
        assert!(matches!(det.detect(&missing), Err(DetectError::LabelsNotFound(_))));
    }
}
