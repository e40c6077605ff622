//! Superpixel benchmark metrics: achievable segmentation accuracy (ASA),
//! under-segmentation error (UE) and boundary recall (BR).

use std::collections::HashMap;
use std::collections::VecDeque;
use std::fmt;

use crate::error::{Error, Result};
use crate::extract::{canonicalize, Segmentation};

pub const DEFAULT_EPSILON: usize = 2;

/// Ground-truth segment ids, compacted to `0..segment_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    segment_count: usize,
}

impl GroundTruth {
    pub fn new(width: usize, height: usize, labels: &[u32]) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "{} ground-truth labels for a {width}x{height} grid",
                labels.len()
            )));
        }
        let (labels, segment_count) = canonicalize(labels);
        Ok(GroundTruth {
            width,
            height,
            labels,
            segment_count,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn segment_count(&self) -> usize {
        self.segment_count
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub k: usize,
    pub asa: f64,
    pub ue: f64,
    pub br: f64,
    pub epsilon: usize,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "k,asa,ue,br,eps";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:?},{:?},{:?},{}",
            self.k, self.asa, self.ue, self.br, self.epsilon
        )
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "k={} asa={:?} ue={:?} br={:?} eps={}",
            self.k, self.asa, self.ue, self.br, self.epsilon
        )
    }
}

fn check_dims(s: &Segmentation, g: &GroundTruth) -> Result<()> {
    if s.width() != g.width || s.height() != g.height {
        return Err(Error::DimensionMismatch {
            what: "segmentation",
            expected: (g.width, g.height),
            found: (s.width(), s.height()),
        });
    }
    Ok(())
}

/// Overlap table `(superpixel, segment) -> pixel count` plus superpixel sizes.
struct Contingency {
    overlaps: HashMap<(u32, u32), u64>,
    region_sizes: Vec<u64>,
}

impl Contingency {
    fn new(s: &Segmentation, g: &GroundTruth) -> Self {
        let mut overlaps = HashMap::new();
        let mut region_sizes = vec![0u64; s.k()];
        for (&sl, &gl) in s.labels().iter().zip(&g.labels) {
            *overlaps.entry((sl, gl)).or_insert(0) += 1;
            region_sizes[sl as usize] += 1;
        }
        Contingency {
            overlaps,
            region_sizes,
        }
    }
}

/// Fraction of pixels labeled correctly when each superpixel takes its
/// dominant ground-truth segment.
pub fn asa(s: &Segmentation, g: &GroundTruth) -> Result<f64> {
    check_dims(s, g)?;
    let table = Contingency::new(s, g);
    let mut best = vec![0u64; s.k()];
    for (&(sl, _), &c) in &table.overlaps {
        let b = &mut best[sl as usize];
        *b = (*b).max(c);
    }
    let total = g.labels.len() as f64;
    Ok(best.iter().sum::<u64>() as f64 / total)
}

/// Leakage of superpixels across ground-truth boundaries: for every segment
/// and every superpixel overlapping it, the smaller of the part inside and
/// the part outside, normalized by image area.
pub fn under_segmentation_error(s: &Segmentation, g: &GroundTruth) -> Result<f64> {
    check_dims(s, g)?;
    let table = Contingency::new(s, g);
    let leak: u64 = table
        .overlaps
        .iter()
        .map(|(&(sl, _), &inside)| inside.min(table.region_sizes[sl as usize] - inside))
        .sum();
    Ok(leak as f64 / g.labels.len() as f64)
}

/// Boundary pixels: a pixel whose right or lower 4-neighbour carries a
/// different label, so each boundary crack is marked once.
pub fn boundary_mask(width: usize, height: usize, labels: &[u32]) -> Vec<bool> {
    let mut mask = vec![false; width * height];
    for y in 0..height {
        for x in 0..width {
            let p = y * width + x;
            let right = x + 1 < width && labels[p + 1] != labels[p];
            let down = y + 1 < height && labels[p + width] != labels[p];
            mask[p] = right || down;
        }
    }
    mask
}

/// Pixels within Chebyshev distance `eps` of a set pixel, by breadth-first
/// dilation over 8-neighbour steps.
fn dilate(width: usize, height: usize, mask: &[bool], eps: usize) -> Vec<bool> {
    let mut dist = vec![usize::MAX; mask.len()];
    let mut queue = VecDeque::new();
    for (p, &m) in mask.iter().enumerate() {
        if m {
            dist[p] = 0;
            queue.push_back(p);
        }
    }
    while let Some(p) = queue.pop_front() {
        let d = dist[p];
        if d == eps {
            continue;
        }
        let (x, y) = ((p % width) as isize, (p / width) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                    continue;
                }
                let q = ny as usize * width + nx as usize;
                if dist[q] == usize::MAX {
                    dist[q] = d + 1;
                    queue.push_back(q);
                }
            }
        }
    }
    dist.iter().map(|&d| d <= eps).collect()
}

/// Share of ground-truth boundary pixels with a segmentation boundary pixel
/// within Chebyshev distance `eps`. An image without ground-truth
/// boundaries has recall 1.
pub fn boundary_recall(s: &Segmentation, g: &GroundTruth, eps: usize) -> Result<f64> {
    check_dims(s, g)?;
    let (w, h) = (g.width, g.height);
    let gt_boundary = boundary_mask(w, h, &g.labels);
    let reach = dilate(w, h, &boundary_mask(w, h, s.labels()), eps);
    let (mut tp, mut total) = (0usize, 0usize);
    for (&b, &r) in gt_boundary.iter().zip(&reach) {
        if b {
            total += 1;
            tp += r as usize;
        }
    }
    if total == 0 {
        return Ok(1.0);
    }
    Ok(tp as f64 / total as f64)
}

pub fn evaluate(s: &Segmentation, g: &GroundTruth, eps: usize) -> Result<MetricsReport> {
    Ok(MetricsReport {
        k: s.k(),
        asa: asa(s, g)?,
        ue: under_segmentation_error(s, g)?,
        br: boundary_recall(s, g, eps)?,
        epsilon: eps,
    })
}

/// Metrics against several ground truths, averaged uniformly.
pub fn evaluate_many(s: &Segmentation, gts: &[GroundTruth], eps: usize) -> Result<MetricsReport> {
    if gts.is_empty() {
        return Err(Error::InvalidInput("no ground truth given".into()));
    }
    let reports = gts
        .iter()
        .map(|g| evaluate(s, g, eps))
        .collect::<Result<Vec<_>>>()?;
    let m = reports.len() as f64;
    Ok(MetricsReport {
        k: s.k(),
        asa: reports.iter().map(|r| r.asa).sum::<f64>() / m,
        ue: reports.iter().map(|r| r.ue).sum::<f64>() / m,
        br: reports.iter().map(|r| r.br).sum::<f64>() / m,
        epsilon: eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(w: usize, h: usize, f: impl Fn(usize, usize) -> u32) -> Segmentation {
        let labels: Vec<u32> = (0..w * h).map(|p| f(p % w, p / w)).collect();
        Segmentation::from_labels(w, h, &labels).unwrap()
    }

    fn gt(w: usize, h: usize, f: impl Fn(usize, usize) -> u32) -> GroundTruth {
        let labels: Vec<u32> = (0..w * h).map(|p| f(p % w, p / w)).collect();
        GroundTruth::new(w, h, &labels).unwrap()
    }

    #[test]
    fn identical_is_perfect() {
        let s = seg(5, 4, |x, y| (x / 2 + 3 * (y / 2)) as u32);
        let g = gt(5, 4, |x, y| (x / 2 + 3 * (y / 2)) as u32);
        let r = evaluate(&s, &g, 2).unwrap();
        assert_eq!((r.asa, r.ue, r.br), (1.0, 0.0, 1.0));
    }

    #[test]
    fn single_region_against_halves() {
        let s = seg(4, 4, |_, _| 0);
        let g = gt(4, 4, |x, _| (x >= 2) as u32);
        assert_eq!(asa(&s, &g).unwrap(), 0.5);
    }

    #[test]
    fn singletons() {
        let s = seg(4, 4, |x, y| (y * 4 + x) as u32);
        let g = gt(4, 4, |x, y| ((x + y) % 3) as u32);
        assert_eq!(asa(&s, &g).unwrap(), 1.0);
        assert_eq!(under_segmentation_error(&s, &g).unwrap(), 0.0);
    }

    #[test]
    fn orthogonal_halves_ue() {
        let s = seg(4, 4, |_, y| (y >= 2) as u32);
        let g = gt(4, 4, |x, _| (x >= 2) as u32);
        assert_eq!(under_segmentation_error(&s, &g).unwrap(), 1.0);
    }

    #[test]
    fn boundary_recall_without_segmentation_boundary() {
        let s = seg(9, 9, |_, _| 0);
        let g = gt(9, 9, |x, y| ((3..6).contains(&x) && (3..6).contains(&y)) as u32);
        assert_eq!(boundary_recall(&s, &g, 2).unwrap(), 0.0);
    }

    #[test]
    fn boundary_recall_shifted_split() {
        let g = gt(8, 8, |x, _| (x >= 4) as u32);
        let s = seg(8, 8, |x, _| (x >= 6) as u32);
        assert_eq!(boundary_recall(&s, &g, 2).unwrap(), 1.0);
        assert_eq!(boundary_recall(&s, &g, 1).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let s = seg(4, 4, |_, _| 0);
        let g = gt(4, 3, |_, _| 0);
        assert!(matches!(asa(&s, &g), Err(Error::DimensionMismatch { .. })));
        assert!(under_segmentation_error(&s, &g).is_err());
        assert!(boundary_recall(&s, &g, 2).is_err());
    }

    #[test]
    fn averaging_over_ground_truths() {
        let s = seg(4, 4, |_, y| (y >= 2) as u32);
        let same = gt(4, 4, |_, y| (y >= 2) as u32);
        let ortho = gt(4, 4, |x, _| (x >= 2) as u32);
        let r = evaluate_many(&s, &[same.clone(), ortho.clone()], 2).unwrap();
        let a = evaluate(&s, &same, 2).unwrap();
        let b = evaluate(&s, &ortho, 2).unwrap();
        assert_eq!(r.asa, (a.asa + b.asa) / 2.0);
        assert_eq!(r.ue, (a.ue + b.ue) / 2.0);
        assert!(evaluate_many(&s, &[], 2).is_err());
    }

    #[test]
    fn report_line_format() {
        let r = MetricsReport {
            k: 3,
            asa: 1.0,
            ue: 0.0,
            br: 0.5,
            epsilon: 2,
        };
        assert_eq!(r.to_string(), "k=3 asa=1.0 ue=0.0 br=0.5 eps=2");
        assert_eq!(r.csv_row(), "3,1.0,0.0,0.5,2");
    }
}
