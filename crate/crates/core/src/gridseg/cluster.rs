use serde::{Deserialize, Serialize};

use super::GridError;
use crate::detect::MaskSet;

/// Mask centroid from raw image moments, in pixel-index coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Centroid {
    pub cx: f64,
    pub cy: f64,
    /// Index of the detection the mask came from.
    pub index: usize,
}

/// `(M10/M00, M01/M00)` for every non-empty mask; empty masks are skipped
/// and reported in the returned warnings.
pub fn centroids(masks: &MaskSet) -> (Vec<Centroid>, Vec<String>) {
    let mut out = Vec::with_capacity(masks.masks.len());
    let mut warnings = Vec::new();
    for (index, m) in masks.masks.iter().enumerate() {
        let (mut m00, mut m10, mut m01) = (0u64, 0u64, 0u64);
        for (x, y) in m.pixels() {
            m00 += 1;
            m10 += x as u64;
            m01 += y as u64;
        }
        if m00 == 0 {
            warnings.push(format!("detection {index} has an empty mask"));
            continue;
        }
        out.push(Centroid { cx: m10 as f64 / m00 as f64, cy: m01 as f64 / m00 as f64, index });
    }
    (out, warnings)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub epsilon: f64,
    pub min_pts: usize,
}

impl ClusterParams {
    pub fn new(epsilon: f64, min_pts: usize) -> Result<Self, GridError> {
        let p = Self { epsilon, min_pts };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) || self.min_pts < 1 {
            return Err(GridError::InvalidParams(format!("epsilon {} / min_pts {}", self.epsilon, self.min_pts)));
        }
        Ok(())
    }
}

/// 1-D density clustering returning member indices into `values`, clusters
/// in ascending coordinate order: sort, split where the gap to the next
/// value exceeds ε, drop clusters smaller than `min_pts`.
pub fn cluster_members(values: &[f64], params: &ClusterParams) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut prev: Option<f64> = None;
    for i in order {
        match (prev, clusters.last_mut()) {
            (Some(p), Some(last)) if values[i] - p <= params.epsilon => last.push(i),
            _ => clusters.push(vec![i]),
        }
        prev = Some(values[i]);
    }
    clusters.retain(|c| c.len() >= params.min_pts);
    clusters
}

/// Cluster centers (member means), ascending.
pub fn cluster_axis(values: &[f64], params: &ClusterParams) -> Vec<f64> {
    cluster_members(values, params)
        .iter()
        .map(|c| c.iter().map(|&i| values[i]).sum::<f64>() / c.len() as f64)
        .collect()
}

/// Candidate split lines between consecutive cluster centers. When the
/// clusters' extents are known and disjoint the line sits in the middle of
/// the free gap between them, otherwise at the midpoint of the centers.
/// Lines closer than `delta` are merged into their mean.
pub fn infer_lines(centers: &[f64], extents: Option<&[(f64, f64)]>, delta: f64) -> Vec<f64> {
    let mut lines: Vec<f64> = Vec::new();
    for k in 1..centers.len() {
        let (a, b) = (centers[k - 1], centers[k]);
        if a == b {
            continue;
        }
        let line = match extents {
            Some(ext) if ext[k - 1].1 < ext[k].0 => (ext[k - 1].1 + ext[k].0) / 2.0,
            _ => (a + b) / 2.0,
        };
        lines.push(line);
    }
    lines.sort_by(f64::total_cmp);
    merge_lines(&lines, delta)
}

/// Merge runs of sorted lines whose consecutive spacing is below `delta`.
pub fn merge_lines(lines: &[f64], delta: f64) -> Vec<f64> {
    let mut groups: Vec<Vec<f64>> = Vec::new();
    for &l in lines {
        match groups.last_mut() {
            Some(g) if l - g[g.len() - 1] < delta => g.push(l),
            _ => groups.push(vec![l]),
        }
    }
    let merged: Vec<f64> = groups.iter().map(|g| g.iter().sum::<f64>() / g.len() as f64).collect();
    // merging can pull neighbors together; repeat until stable
    if merged.windows(2).any(|w| w[1] - w[0] < delta) {
        merge_lines(&merged, delta)
    } else {
        merged
    }
}

/// Keep lines with at least one coordinate strictly on each side.
pub fn validate_lines(lines: &[f64], coords: &[f64]) -> Vec<f64> {
    lines.iter().copied().filter(|&l| coords.iter().any(|&c| c < l) && coords.iter().any(|&c| c > l)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::Mask;

    fn p(eps: f64) -> ClusterParams {
        ClusterParams::new(eps, 1).unwrap()
    }

    #[test]
    fn centroid_examples() {
        let rect = Mask { width: 50, height: 50, x0: 10, y0: 20, x1: 20, y1: 26 };
        let empty = Mask { x1: 10, ..rect };
        let (c, w) = centroids(&MaskSet { masks: vec![rect, empty] });
        assert_eq!(c.len(), 1);
        assert_eq!(w.len(), 1);
        assert_eq!((c[0].cx, c[0].cy), (14.5, 22.5));
        // two pixels at (0,0) and (2,0): moment arithmetic gives (1,0)
        let pts = [(0u64, 0u64), (2, 0)];
        let (m00, m10, m01) = (2.0, pts.iter().map(|p| p.0).sum::<u64>() as f64, pts.iter().map(|p| p.1).sum::<u64>() as f64);
        assert_eq!((m10 / m00, m01 / m00), (1.0, 0.0));
    }

    #[test]
    fn cluster_examples() {
        assert_eq!(cluster_axis(&[52.0, 10.0, 50.0, 12.0], &p(5.0)), vec![11.0, 51.0]);
        assert_eq!(cluster_axis(&[7.0], &p(5.0)), vec![7.0]);
        assert!(cluster_axis(&[], &p(5.0)).is_empty());
        let sparse = ClusterParams::new(5.0, 2).unwrap();
        assert_eq!(cluster_axis(&[10.0, 12.0, 50.0], &sparse), vec![11.0]);
        assert!(ClusterParams::new(0.0, 1).is_err());
    }

    #[test]
    fn line_examples() {
        assert_eq!(infer_lines(&[20.0, 60.0], None, 5.0), vec![40.0]);
        assert!(infer_lines(&[20.0], None, 5.0).is_empty());
        let merged = infer_lines(&[20.0, 60.0, 61.0], None, 5.0);
        assert!(merged.windows(2).all(|w| w[1] - w[0] >= 5.0));
        assert_eq!(merge_lines(&[10.0, 12.0, 40.0], 5.0), vec![11.0, 40.0]);
        // disjoint extents: line in the middle of the free gap
        assert_eq!(infer_lines(&[20.0, 100.0], Some(&[(10.0, 30.0), (50.0, 150.0)]), 5.0), vec![40.0]);
    }

    #[test]
    fn validation_examples() {
        let ys = [10.0, 12.0, 50.0];
        assert_eq!(validate_lines(&[5.0, 30.0, 60.0], &ys), vec![30.0]);
        // a line through a centroid needs others strictly on both sides
        assert!(validate_lines(&[10.0], &[10.0, 10.0]).is_empty());
    }
}
