//! Supervertex features and inter-region distances.
//!
//! Regions are compared by `D = d_c * d_e`: a color term (absolute
//! difference of mean colors during the first rounds, chi-square distance of
//! per-channel color histograms afterwards) multiplied by an edge term (the
//! average boundary confidence along the shared border).

use crate::error::{Error, Result};
use crate::image::ColorSpace;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    /// Round index from which color histograms replace mean colors.
    pub hist_switch_iteration: usize,
    /// Histogram bins per channel.
    pub hist_bins: usize,
    /// Floor added to the average boundary confidence.
    pub edge_epsilon: f64,
    /// Denominator guard for the chi-square distance.
    pub chi_square_epsilon: f64,
    pub use_edge_feature: bool,
    pub color_space: ColorSpace,
    /// When false, edge weights are frozen at their initial values and the
    /// build degenerates to a plain Boruvka minimum spanning tree.
    pub aggregate: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            hist_switch_iteration: 4,
            hist_bins: 20,
            edge_epsilon: 0.01,
            chi_square_epsilon: 1e-10,
            use_edge_feature: false,
            color_space: ColorSpace::Rgb,
            aggregate: true,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hist_bins == 0 {
            return Err(Error::InvalidInput("hist-bins must be at least 1".into()));
        }
        if !(self.edge_epsilon > 0.0 && self.edge_epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "edge epsilon must be positive, got {}",
                self.edge_epsilon
            )));
        }
        if !(self.chi_square_epsilon > 0.0 && self.chi_square_epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "chi-square epsilon must be positive, got {}",
                self.chi_square_epsilon
            )));
        }
        Ok(())
    }

    /// Bin index of an intensity in [0, 1].
    #[inline]
    pub fn bin_of(&self, v: f64) -> usize {
        ((v * self.hist_bins as f64) as usize).min(self.hist_bins - 1)
    }
}

/// Aggregated statistics of one supervertex.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexFeature {
    pixel_count: u32,
    channels: u8,
    color_sum: [f64; 3],
    /// `channels * bins` counts, channel-major.
    histogram: Option<Box<[u32]>>,
}

impl VertexFeature {
    /// Feature of a single pixel; histogram left unpopulated.
    pub fn from_pixel(values: &[f64]) -> Self {
        debug_assert!(!values.is_empty() && values.len() <= 3);
        let mut color_sum = [0.0; 3];
        color_sum[..values.len()].copy_from_slice(values);
        VertexFeature {
            pixel_count: 1,
            channels: values.len() as u8,
            color_sum,
            histogram: None,
        }
    }

    /// Feature of a single pixel with its histogram populated.
    pub fn from_pixel_with_histogram(values: &[f64], cfg: &FeatureConfig) -> Self {
        let mut f = Self::from_pixel(values);
        let mut hist = vec![0u32; values.len() * cfg.hist_bins].into_boxed_slice();
        for (c, &v) in values.iter().enumerate() {
            hist[c * cfg.hist_bins + cfg.bin_of(v)] += 1;
        }
        f.histogram = Some(hist);
        f
    }

    pub fn pixel_count(&self) -> u32 {
        self.pixel_count
    }

    pub fn channels(&self) -> usize {
        self.channels as usize
    }

    pub fn color_sum(&self) -> &[f64] {
        &self.color_sum[..self.channels()]
    }

    pub fn mean(&self, channel: usize) -> f64 {
        self.color_sum[channel] / self.pixel_count as f64
    }

    pub fn histogram(&self) -> Option<&[u32]> {
        self.histogram.as_deref()
    }

    pub(crate) fn set_histogram(&mut self, hist: Box<[u32]>) {
        self.histogram = Some(hist);
    }

    /// Mass-weighted combination of two regions.
    pub fn merge(&self, other: &VertexFeature) -> VertexFeature {
        let mut out = self.clone();
        out.absorb(other);
        out
    }

    pub fn absorb(&mut self, other: &VertexFeature) {
        debug_assert_eq!(self.channels, other.channels);
        self.pixel_count += other.pixel_count;
        for c in 0..3 {
            self.color_sum[c] += other.color_sum[c];
        }
        match (&mut self.histogram, &other.histogram) {
            (Some(h), Some(o)) => {
                debug_assert_eq!(h.len(), o.len());
                for (a, b) in h.iter_mut().zip(o.iter()) {
                    *a += *b;
                }
            }
            (None, None) => {}
            _ => panic!("merging supervertices with mismatched histogram state"),
        }
    }
}

/// Edge-confidence accumulator over the original pixel pairs crossing a
/// region boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryStat {
    pub conf_sum: f64,
    pub pair_count: u32,
}

impl BoundaryStat {
    pub fn new(conf_sum: f64, pair_count: u32) -> Self {
        BoundaryStat {
            conf_sum,
            pair_count,
        }
    }

    #[inline]
    pub fn accumulate(&mut self, other: &BoundaryStat) {
        self.conf_sum += other.conf_sum;
        self.pair_count += other.pair_count;
    }

    pub fn mean_confidence(&self) -> f64 {
        self.conf_sum / self.pair_count as f64
    }
}

/// Color term `d_c`.
pub fn color_distance(
    a: &VertexFeature,
    b: &VertexFeature,
    iter: usize,
    cfg: &FeatureConfig,
) -> Result<f64> {
    if a.channels != b.channels {
        return Err(Error::invariant(format!(
            "channel mismatch ({} vs {})",
            a.channels, b.channels
        )));
    }
    if iter < cfg.hist_switch_iteration {
        let d = (0..a.channels())
            .map(|c| (a.mean(c) - b.mean(c)).abs())
            .sum();
        return Ok(d);
    }
    let (ha, hb) = match (a.histogram(), b.histogram()) {
        (Some(ha), Some(hb)) => (ha, hb),
        _ => {
            return Err(Error::invariant(format!(
                "histograms not populated at iteration {iter}"
            )))
        }
    };
    if ha.len() != hb.len() {
        return Err(Error::invariant("histogram length mismatch"));
    }
    Ok(chi_square(
        ha,
        hb,
        a.pixel_count as f64,
        b.pixel_count as f64,
        cfg.chi_square_epsilon,
    ))
}

/// Chi-square distance between two histograms normalized to unit mass per
/// channel; every channel of a region carries `mass_*` counts.
fn chi_square(ha: &[u32], hb: &[u32], mass_a: f64, mass_b: f64, eps: f64) -> f64 {
    let (inv_a, inv_b) = (1.0 / mass_a, 1.0 / mass_b);
    let mut acc = 0.0;
    for (&ca, &cb) in ha.iter().zip(hb) {
        if ca == 0 && cb == 0 {
            continue;
        }
        let fa = ca as f64 * inv_a;
        let fb = cb as f64 * inv_b;
        let d = fa - fb;
        acc += d * d / (fa + fb + eps);
    }
    0.5 * acc
}

/// Edge term `d_e`; strictly positive.
pub fn edge_distance(bs: &BoundaryStat, cfg: &FeatureConfig) -> Result<f64> {
    if bs.pair_count == 0 {
        return Err(Error::invariant("boundary with zero crossing pairs"));
    }
    if !cfg.use_edge_feature {
        return Ok(1.0);
    }
    Ok(bs.mean_confidence() + cfg.edge_epsilon)
}

/// `D = d_c * d_e`.
pub fn combined_distance(
    a: &VertexFeature,
    b: &VertexFeature,
    bs: &BoundaryStat,
    iter: usize,
    cfg: &FeatureConfig,
) -> Result<f64> {
    Ok(color_distance(a, b, iter, cfg)? * edge_distance(bs, cfg)?)
}
