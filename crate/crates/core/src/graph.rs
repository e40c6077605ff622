//! The contracted region-adjacency graph.
//!
//! Starts as the 4-connected pixel grid. Each merge round contracts the
//! chosen edges, then flattens the resulting multigraph: self-loops are
//! dropped and every bundle of parallel edges collapses to one edge carrying
//! the lightest weight and the summed boundary statistics. Contraction keeps
//! the graph planar, so a simple flattened graph has at most `3n` edges.

use crate::error::{Error, Result};
use crate::features::{combined_distance, BoundaryStat, FeatureConfig, VertexFeature};
use crate::image::{EdgeConfidenceMap, Image};
use crate::sort::lexicographic_pairs;

/// Undirected edge between supervertices `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: u32,
    pub b: u32,
    pub weight: f64,
    pub boundary: BoundaryStat,
}

impl Edge {
    /// Total order used to pick the lightest edge: weight, then endpoints.
    #[inline]
    pub fn lighter_than(&self, other: &Edge) -> bool {
        match self.weight.total_cmp(&other.weight) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => (self.a, self.b) < (other.a, other.b),
        }
    }

    #[inline]
    pub fn cmp_key(&self, other: &Edge) -> std::cmp::Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then_with(|| (self.a, self.b).cmp(&(other.a, other.b)))
    }
}

/// Supervertex ids are dense in `0..n` and ordered by the smallest original
/// pixel id they contain, which makes endpoint ids a valid tie-break key.
#[derive(Debug, Clone)]
pub struct ContractedGraph {
    width: usize,
    height: usize,
    features: Vec<VertexFeature>,
    edges: Vec<Edge>,
    root_of: Vec<u32>,
}

/// The initial grid graph: one supervertex per pixel, one edge per
/// 4-neighbour pair, weighted by the iteration-0 distance.
pub fn build_grid_graph(
    img: &Image,
    edge_map: Option<&EdgeConfidenceMap>,
    cfg: &FeatureConfig,
) -> Result<ContractedGraph> {
    cfg.validate()?;
    if let Some(em) = edge_map {
        em.check_matches(img)?;
    }
    let (w, h) = (img.width(), img.height());
    let n = img.pixel_count();
    if n > u32::MAX as usize {
        return Err(Error::InvalidInput(format!("image too large ({n} pixels)")));
    }
    let with_hist = cfg.hist_switch_iteration == 0;
    let features: Vec<VertexFeature> = (0..n)
        .map(|p| {
            if with_hist {
                VertexFeature::from_pixel_with_histogram(img.pixel(p), cfg)
            } else {
                VertexFeature::from_pixel(img.pixel(p))
            }
        })
        .collect();

    let conf = |p: usize| edge_map.map_or(0.0, |em| em.conf()[p]);
    let mut edges = Vec::with_capacity(2 * n);
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            // right neighbour first keeps the list lexicographically sorted
            for q in [(x + 1 < w).then_some(p + 1), (y + 1 < h).then_some(p + w)]
                .into_iter()
                .flatten()
            {
                let boundary = BoundaryStat::new((conf(p) + conf(q)) / 2.0, 1);
                let weight = combined_distance(&features[p], &features[q], &boundary, 0, cfg)?;
                edges.push(Edge {
                    a: p as u32,
                    b: q as u32,
                    weight,
                    boundary,
                });
            }
        }
    }
    Ok(ContractedGraph {
        width: w,
        height: h,
        features,
        edges,
        root_of: (0..n as u32).collect(),
    })
}

impl ContractedGraph {
    /// Assemble a graph from explicit parts. Edges are normalized to `a < b`
    /// and must already be simple.
    pub fn from_parts(
        width: usize,
        height: usize,
        features: Vec<VertexFeature>,
        mut edges: Vec<Edge>,
        root_of: Vec<u32>,
    ) -> Result<Self> {
        for e in &mut edges {
            if e.a > e.b {
                std::mem::swap(&mut e.a, &mut e.b);
            }
        }
        let g = ContractedGraph {
            width,
            height,
            features,
            edges,
            root_of,
        };
        g.check_invariants()?;
        Ok(g)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn vertex_count(&self) -> usize {
        self.features.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn features(&self) -> &[VertexFeature] {
        &self.features
    }

    /// Original pixel id to current supervertex id.
    pub fn root_of(&self) -> &[u32] {
        &self.root_of
    }

    /// For each supervertex, the index of its lightest incident edge, or
    /// `u32::MAX` for an isolated vertex.
    pub fn lightest_incident_edges(&self) -> Vec<u32> {
        const NONE: u32 = u32::MAX;
        let mut best = vec![NONE; self.vertex_count()];
        for (i, e) in self.edges.iter().enumerate() {
            for v in [e.a, e.b] {
                let slot = &mut best[v as usize];
                if *slot == NONE || e.lighter_than(&self.edges[*slot as usize]) {
                    *slot = i as u32;
                }
            }
        }
        best
    }

    /// Contracts every supervertex `v` into component `labels[v]`, then
    /// flattens. `chosen` lists the contracted edge indices; each must join
    /// two vertices with the same label.
    pub fn contract_and_flatten(self, chosen: &[u32], labels: &[u32]) -> Result<Self> {
        let n = self.vertex_count();
        if labels.len() != n {
            return Err(Error::invariant(format!(
                "label map covers {} of {n} supervertices",
                labels.len()
            )));
        }
        let new_n = labels.iter().max().map_or(0, |&m| m as usize + 1);
        let mut hit = vec![false; new_n];
        for &l in labels {
            hit[l as usize] = true;
        }
        if let Some(missing) = hit.iter().position(|h| !h) {
            return Err(Error::invariant(format!(
                "label map is not surjective onto 0..{new_n} (label {missing} unused)"
            )));
        }
        for &ci in chosen {
            let e = self
                .edges
                .get(ci as usize)
                .ok_or_else(|| Error::invariant(format!("chosen edge {ci} does not exist")))?;
            if labels[e.a as usize] != labels[e.b as usize] {
                return Err(Error::invariant(format!(
                    "chosen edge ({}, {}) spans two components",
                    e.a, e.b
                )));
            }
        }

        let mut slots: Vec<Option<VertexFeature>> = vec![None; new_n];
        for (v, f) in self.features.into_iter().enumerate() {
            let slot = &mut slots[labels[v] as usize];
            match slot {
                Some(acc) => acc.absorb(&f),
                None => *slot = Some(f),
            }
        }
        let features: Vec<VertexFeature> = slots.into_iter().map(|s| s.unwrap()).collect();

        let mapped: Vec<Edge> = self
            .edges
            .iter()
            .filter_map(|e| {
                let (la, lb) = (labels[e.a as usize], labels[e.b as usize]);
                (la != lb).then(|| Edge {
                    a: la.min(lb),
                    b: la.max(lb),
                    ..*e
                })
            })
            .collect();
        let sorted = lexicographic_pairs(&mapped, new_n, |e| (e.a as usize, e.b as usize));
        let mut edges: Vec<Edge> = Vec::with_capacity(sorted.len());
        for e in sorted {
            match edges.last_mut() {
                Some(last) if last.a == e.a && last.b == e.b => {
                    if e.weight < last.weight {
                        last.weight = e.weight;
                    }
                    last.boundary.accumulate(&e.boundary);
                }
                _ => edges.push(e),
            }
        }

        let mut root_of = self.root_of;
        for r in &mut root_of {
            *r = labels[*r as usize];
        }
        Ok(ContractedGraph {
            width: self.width,
            height: self.height,
            features,
            edges,
            root_of,
        })
    }

    /// Populates every supervertex histogram with one pass over the original
    /// pixels of `img`.
    pub fn materialize_histograms(&mut self, img: &Image, cfg: &FeatureConfig) {
        let channels = img.channels();
        let stride = channels * cfg.hist_bins;
        let mut flat = vec![0u32; self.vertex_count() * stride];
        for (p, &root) in self.root_of.iter().enumerate() {
            let base = root as usize * stride;
            for (c, &v) in img.pixel(p).iter().enumerate() {
                flat[base + c * cfg.hist_bins + cfg.bin_of(v)] += 1;
            }
        }
        for (v, f) in self.features.iter_mut().enumerate() {
            f.set_histogram(flat[v * stride..(v + 1) * stride].into());
        }
    }

    /// Recomputes every edge weight from the aggregated features.
    pub fn recompute_weights(&mut self, iter: usize, cfg: &FeatureConfig) -> Result<()> {
        for e in &mut self.edges {
            e.weight = combined_distance(
                &self.features[e.a as usize],
                &self.features[e.b as usize],
                &e.boundary,
                iter,
                cfg,
            )?;
        }
        Ok(())
    }

    /// Checks simplicity, the planar edge bound, totality of `root_of`,
    /// pixel-count conservation and histogram mass.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.vertex_count();
        let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            if e.a == e.b {
                return Err(Error::invariant(format!("self-loop at {}", e.a)));
            }
            if e.a as usize >= n || e.b as usize >= n {
                return Err(Error::invariant(format!(
                    "edge ({}, {}) references a missing supervertex",
                    e.a, e.b
                )));
            }
            if e.boundary.pair_count == 0 {
                return Err(Error::invariant("edge with empty boundary"));
            }
            pairs.push((e.a.min(e.b), e.a.max(e.b)));
        }
        pairs.sort_unstable();
        if let Some(w) = pairs.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invariant(format!("parallel edges {:?}", w[0])));
        }
        if n >= 3 && self.edges.len() > 3 * n {
            return Err(Error::invariant(format!(
                "{} edges exceed the planar bound for {n} vertices",
                self.edges.len()
            )));
        }
        if self.root_of.len() != self.width * self.height {
            return Err(Error::invariant("root map does not cover the image"));
        }
        let mut counts = vec![0u32; n];
        for &r in &self.root_of {
            let c = counts
                .get_mut(r as usize)
                .ok_or_else(|| Error::invariant(format!("pixel maps to missing vertex {r}")))?;
            *c += 1;
        }
        for (v, f) in self.features.iter().enumerate() {
            if counts[v] == 0 {
                return Err(Error::invariant(format!("supervertex {v} owns no pixel")));
            }
            if counts[v] != f.pixel_count() {
                return Err(Error::invariant(format!(
                    "supervertex {v} counts {} pixels but owns {}",
                    f.pixel_count(),
                    counts[v]
                )));
            }
            if let Some(h) = f.histogram() {
                let bins = h.len() / f.channels();
                for c in 0..f.channels() {
                    let mass: u32 = h[c * bins..(c + 1) * bins].iter().sum();
                    if mass != f.pixel_count() {
                        return Err(Error::invariant(format!(
                            "supervertex {v} channel {c} histogram mass {mass} != {}",
                            f.pixel_count()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(w: usize, h: usize, data: Vec<f64>) -> Image {
        Image::gray(w, h, data).unwrap()
    }

    #[test]
    fn two_by_two_grid() {
        let g =
            build_grid_graph(&gray(2, 2, vec![0.0; 4]), None, &FeatureConfig::default()).unwrap();
        assert_eq!(g.vertex_count(), 4);
        assert_eq!(g.edge_count(), 4);
        let pairs: Vec<_> = g.edges().iter().map(|e| (e.a, e.b)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (1, 3), (2, 3)]);
        g.check_invariants().unwrap();
    }

    #[test]
    fn grid_edge_count_formula() {
        for (w, h) in [(1, 1), (1, 7), (5, 1), (3, 4), (9, 6)] {
            let g = build_grid_graph(
                &gray(w, h, vec![0.5; w * h]),
                None,
                &FeatureConfig::default(),
            )
            .unwrap();
            assert_eq!(g.vertex_count(), w * h);
            assert_eq!(g.edge_count(), w * (h - 1) + (w - 1) * h, "{w}x{h}");
        }
    }

    #[test]
    fn grid_weights_and_boundary() {
        let img = gray(2, 1, vec![0.2, 0.7]);
        let em = EdgeConfidenceMap::new(2, 1, vec![0.4, 0.8]).unwrap();
        let cfg = FeatureConfig {
            use_edge_feature: true,
            ..FeatureConfig::default()
        };
        let g = build_grid_graph(&img, Some(&em), &cfg).unwrap();
        let e = g.edges()[0];
        assert_eq!(e.boundary.pair_count, 1);
        assert!((e.boundary.conf_sum - 0.6).abs() < 1e-15);
        assert!((e.weight - 0.5 * 0.61).abs() < 1e-12);

        let plain = build_grid_graph(&img, None, &FeatureConfig::default()).unwrap();
        assert_eq!(plain.edges()[0].boundary.conf_sum, 0.0);
    }

    #[test]
    fn grid_rejects_mismatched_edge_map() {
        let img = gray(2, 2, vec![0.0; 4]);
        let em = EdgeConfidenceMap::new(2, 1, vec![0.0; 2]).unwrap();
        assert!(matches!(
            build_grid_graph(&img, Some(&em), &FeatureConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    /// Four supervertices with values 4, 2, 5, 7 (scaled by 1/10): edges
    /// 4-2, 4-5, 2-5 and 5-7. Contracting 4-2 leaves a self-loop and two
    /// parallel edges towards 5.
    fn contraction_example() -> ContractedGraph {
        let vals = [0.4, 0.2, 0.5, 0.7];
        let features: Vec<_> = vals
            .iter()
            .map(|&v| VertexFeature::from_pixel(&[v]))
            .collect();
        let mk = |a: u32, b: u32, pairs: u32| Edge {
            a,
            b,
            weight: (vals[a as usize] - vals[b as usize]).abs(),
            boundary: BoundaryStat::new(0.25 * pairs as f64, pairs),
        };
        let edges = vec![mk(0, 1, 1), mk(0, 2, 3), mk(1, 2, 5), mk(2, 3, 1)];
        ContractedGraph::from_parts(4, 1, features, edges, vec![0, 1, 2, 3]).unwrap()
    }

    #[test]
    fn contraction_removes_loop_and_parallel_edges() {
        let g = contraction_example();
        let out = g.contract_and_flatten(&[0], &[0, 0, 1, 2]).unwrap();
        out.check_invariants().unwrap();
        assert_eq!(out.vertex_count(), 3);
        assert_eq!(out.edge_count(), 2);
        let bundle = out.edges()[0];
        assert_eq!((bundle.a, bundle.b), (0, 1));
        // lightest of |4-5| and |2-5|
        assert!((bundle.weight - 0.1).abs() < 1e-12);
        assert_eq!(bundle.boundary.pair_count, 8);
        assert!((bundle.boundary.conf_sum - 2.0).abs() < 1e-12);
        let merged = &out.features()[0];
        assert_eq!(merged.pixel_count(), 2);
        assert!((merged.mean(0) - 0.3).abs() < 1e-12);
        assert_eq!(out.root_of(), &[0, 0, 1, 2]);
    }

    #[test]
    fn contracting_nothing_is_identity() {
        let g = contraction_example();
        let before: Vec<_> = g.edges().to_vec();
        let out = g.contract_and_flatten(&[], &[0, 1, 2, 3]).unwrap();
        assert_eq!(out.edges(), before.as_slice());
        assert_eq!(out.vertex_count(), 4);
    }

    #[test]
    fn contraction_rejects_bad_labels() {
        let g = contraction_example();
        assert!(matches!(
            g.clone().contract_and_flatten(&[], &[0, 0, 2, 2]),
            Err(Error::Invariant(_))
        ));
        assert!(matches!(
            g.contract_and_flatten(&[3], &[0, 1, 2, 3]),
            Err(Error::Invariant(_))
        ));
    }

    #[test]
    fn invariant_check_catches_parallel_edges() {
        let features = vec![
            VertexFeature::from_pixel(&[0.0]),
            VertexFeature::from_pixel(&[1.0]),
        ];
        let e = Edge {
            a: 0,
            b: 1,
            weight: 1.0,
            boundary: BoundaryStat::new(0.0, 1),
        };
        assert!(ContractedGraph::from_parts(2, 1, features, vec![e, e], vec![0, 1]).is_err());
    }

    #[test]
    fn histogram_materialization_counts_pixels() {
        let img = gray(3, 1, vec![0.0, 0.5, 0.99]);
        let cfg = FeatureConfig {
            hist_bins: 4,
            ..FeatureConfig::default()
        };
        let g = build_grid_graph(&img, None, &cfg).unwrap();
        let chosen = [0u32];
        let mut g = g.contract_and_flatten(&chosen, &[0, 0, 1]).unwrap();
        g.materialize_histograms(&img, &cfg);
        assert_eq!(g.features()[0].histogram().unwrap(), &[1, 0, 1, 0]);
        assert_eq!(g.features()[1].histogram().unwrap(), &[0, 0, 0, 1]);
        g.check_invariants().unwrap();
    }
}
