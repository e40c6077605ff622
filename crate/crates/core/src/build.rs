//! Boruvka merge engine.
//!
//! Every round each supervertex picks its lightest incident edge. The chosen
//! edges are deduplicated, ordered by weight with a counting sort, and their
//! connected components (depth-first search over the auxiliary graph of
//! chosen edges) become the next round's supervertices. Merges are logged in
//! that weight order, which makes the log a binary dendrogram: cutting it
//! after `n - k` merges yields exactly `k` connected regions.

use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::graph::{build_grid_graph, ContractedGraph, Edge};
use crate::image::{EdgeConfidenceMap, Image};
use crate::sort::counting_sort_into;
use crate::union_find::UnionFind;

/// One binary merge in the dendrogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeRecord {
    pub step: u64,
    pub root_a: u64,
    pub root_b: u64,
    pub new_node: u64,
    pub weight: f64,
    pub iteration: u32,
}

/// Graph sizes around one Boruvka round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundStat {
    pub iteration: u32,
    pub vertices_before: usize,
    pub vertices_after: usize,
    pub edges_after: usize,
    pub merges: usize,
}

/// Immutable merge log over `n` leaves (leaf id = row-major pixel index)
/// and `n - 1` internal nodes numbered `n..2n-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hierarchy {
    width: usize,
    height: usize,
    merges: Vec<MergeRecord>,
    parent: Vec<u64>,
    rounds: Vec<RoundStat>,
}

pub const NO_PARENT: u64 = u64::MAX;

impl Hierarchy {
    /// Validates a merge log and builds the parent table.
    pub fn from_merges(width: usize, height: usize, merges: Vec<MergeRecord>) -> Result<Self> {
        let n = width
            .checked_mul(height)
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidInput(format!("invalid dimensions {width}x{height}")))?;
        if merges.len() != n - 1 {
            return Err(Error::InvalidInput(format!(
                "{} merges for {n} leaves, expected {}",
                merges.len(),
                n - 1
            )));
        }
        let mut parent = vec![NO_PARENT; 2 * n - 1];
        let mut last_iter = 0;
        for (i, m) in merges.iter().enumerate() {
            let new_node = (n + i) as u64;
            if m.step != i as u64 || m.new_node != new_node {
                return Err(Error::InvalidInput(format!(
                    "merge {i} has step {} and node {}, expected {i} and {new_node}",
                    m.step, m.new_node
                )));
            }
            if m.root_a == m.root_b || m.root_a >= new_node || m.root_b >= new_node {
                return Err(Error::InvalidInput(format!(
                    "merge {i} joins invalid roots {} and {}",
                    m.root_a, m.root_b
                )));
            }
            for r in [m.root_a, m.root_b] {
                if parent[r as usize] != NO_PARENT {
                    return Err(Error::InvalidInput(format!(
                        "merge {i} references node {r}, already merged"
                    )));
                }
                parent[r as usize] = new_node;
            }
            if m.iteration < last_iter || !m.weight.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "merge {i} has invalid iteration {} or weight {}",
                    m.iteration, m.weight
                )));
            }
            last_iter = m.iteration;
        }
        Ok(Hierarchy {
            width,
            height,
            merges,
            parent,
            rounds: Vec::new(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn leaf_count(&self) -> usize {
        self.width * self.height
    }

    pub fn merges(&self) -> &[MergeRecord] {
        &self.merges
    }

    /// Parent of a node, or [`NO_PARENT`] for the root.
    pub fn parent(&self, node: u64) -> u64 {
        self.parent[node as usize]
    }

    /// Per-round graph sizes; empty for an imported hierarchy.
    pub fn rounds(&self) -> &[RoundStat] {
        &self.rounds
    }

    /// Number of Boruvka rounds executed.
    pub fn iteration_count(&self) -> usize {
        self.merges.last().map_or(0, |m| m.iteration as usize + 1)
    }
}

/// Builds the full superpixel hierarchy of `img`.
pub fn build_hierarchy(
    img: &Image,
    edge_map: Option<&EdgeConfidenceMap>,
    cfg: &FeatureConfig,
) -> Result<Hierarchy> {
    build_hierarchy_with(img, edge_map, cfg, |_, _| {})
}

/// Like [`build_hierarchy`], calling `inspect` with the flattened graph at
/// the end of every round.
pub fn build_hierarchy_with<F>(
    img: &Image,
    edge_map: Option<&EdgeConfidenceMap>,
    cfg: &FeatureConfig,
    mut inspect: F,
) -> Result<Hierarchy>
where
    F: FnMut(&ContractedGraph, &RoundStat),
{
    cfg.validate()?;
    let working = img.to_color_space(cfg.color_space);
    let mut graph = build_grid_graph(&working, edge_map, cfg)?;
    let n = graph.vertex_count();

    let mut merges: Vec<MergeRecord> = Vec::with_capacity(n.saturating_sub(1));
    let mut parent = vec![NO_PARENT; 2 * n - 1];
    let mut rounds = Vec::new();
    // hierarchy node currently represented by each supervertex
    let mut node_of: Vec<u64> = (0..n as u64).collect();
    let mut scratch = SortScratch::default();

    while graph.vertex_count() > 1 {
        let iteration = rounds.len() as u32;
        let nv = graph.vertex_count();

        let chosen = choose_edges(&graph)?;
        let chosen = scratch.sort_by_weight(graph.edges(), chosen);
        let (labels, new_n) = auxiliary_components(nv, graph.edges(), &chosen);

        let mut uf = UnionFind::new(nv);
        let merges_before = merges.len();
        for &ci in &chosen {
            let e = graph.edges()[ci as usize];
            let (ra, rb) = (uf.find(e.a), uf.find(e.b));
            if ra == rb {
                continue;
            }
            let new_node = (n + merges.len()) as u64;
            let (na, nb) = (node_of[ra as usize], node_of[rb as usize]);
            parent[na as usize] = new_node;
            parent[nb as usize] = new_node;
            merges.push(MergeRecord {
                step: merges.len() as u64,
                root_a: na,
                root_b: nb,
                new_node,
                weight: e.weight,
                iteration,
            });
            let root = uf.union(ra, rb).expect("distinct roots");
            node_of[root as usize] = new_node;
        }
        let round_merges = merges.len() - merges_before;
        if round_merges != nv - new_n {
            return Err(Error::invariant(format!(
                "round {iteration} logged {round_merges} merges for {nv} -> {new_n} supervertices"
            )));
        }

        let mut next_node_of = vec![0u64; new_n];
        for v in 0..nv {
            let root = uf.find(v as u32);
            next_node_of[labels[v] as usize] = node_of[root as usize];
        }
        node_of = next_node_of;

        graph = graph.contract_and_flatten(&chosen, &labels)?;
        let next_iter = rounds.len() + 1;
        if cfg.aggregate {
            if next_iter == cfg.hist_switch_iteration {
                graph.materialize_histograms(&working, cfg);
            }
            graph.recompute_weights(next_iter, cfg)?;
        }

        let stat = RoundStat {
            iteration,
            vertices_before: nv,
            vertices_after: new_n,
            edges_after: graph.edge_count(),
            merges: round_merges,
        };
        inspect(&graph, &stat);
        rounds.push(stat);
    }

    Ok(Hierarchy {
        width: img.width(),
        height: img.height(),
        merges,
        parent,
        rounds,
    })
}

/// Indices of the lightest incident edge of every supervertex, each edge
/// listed once.
fn choose_edges(graph: &ContractedGraph) -> Result<Vec<u32>> {
    let best = graph.lightest_incident_edges();
    let edges = graph.edges();
    let mut chosen = Vec::with_capacity(best.len());
    for (v, &ei) in best.iter().enumerate() {
        if ei == u32::MAX {
            return Err(Error::invariant(format!(
                "supervertex {v} has no incident edge; graph is disconnected"
            )));
        }
        let e = edges[ei as usize];
        let other = if e.a as usize == v { e.b } else { e.a };
        // an edge picked from both ends is kept for its smaller endpoint
        if best[other as usize] == ei && (other as usize) < v {
            continue;
        }
        chosen.push(ei);
    }
    Ok(chosen)
}

const WEIGHT_BUCKETS: usize = 1 << 16;

#[derive(Default)]
struct SortScratch {
    out: Vec<u32>,
}

impl SortScratch {
    /// Ascending by full edge order: counting sort on quantized weights,
    /// then exact ordering inside each bucket.
    fn sort_by_weight(&mut self, edges: &[Edge], chosen: Vec<u32>) -> Vec<u32> {
        if chosen.len() < 2 {
            return chosen;
        }
        let max_w = chosen
            .iter()
            .map(|&i| edges[i as usize].weight)
            .fold(0.0f64, f64::max);
        let buckets = WEIGHT_BUCKETS.min(chosen.len());
        let scale = if max_w > 0.0 && max_w.is_finite() {
            (buckets - 1) as f64 / max_w
        } else {
            0.0
        };
        let key = |&i: &u32| {
            let w = edges[i as usize].weight;
            ((w * scale) as usize).min(buckets - 1)
        };
        let starts = counting_sort_into(&chosen, buckets, key, &mut self.out);
        for win in starts.windows(2) {
            let bucket = &mut self.out[win[0]..win[1]];
            if bucket.len() > 1 {
                bucket.sort_unstable_by(|&x, &y| edges[x as usize].cmp_key(&edges[y as usize]));
            }
        }
        std::mem::take(&mut self.out)
    }
}

/// Connected components of the auxiliary graph (supervertices joined by the
/// chosen edges), found by iterative depth-first search. Components are
/// numbered in order of their smallest member.
fn auxiliary_components(n: usize, edges: &[Edge], chosen: &[u32]) -> (Vec<u32>, usize) {
    let mut start = vec![0usize; n + 1];
    for &ci in chosen {
        let e = &edges[ci as usize];
        start[e.a as usize + 1] += 1;
        start[e.b as usize + 1] += 1;
    }
    for i in 1..=n {
        start[i] += start[i - 1];
    }
    let mut adj = vec![0u32; start[n]];
    let mut fill = start.clone();
    for &ci in chosen {
        let e = &edges[ci as usize];
        adj[fill[e.a as usize]] = e.b;
        fill[e.a as usize] += 1;
        adj[fill[e.b as usize]] = e.a;
        fill[e.b as usize] += 1;
    }

    const UNSEEN: u32 = u32::MAX;
    let mut labels = vec![UNSEEN; n];
    let mut stack = Vec::new();
    let mut next = 0u32;
    for s in 0..n {
        if labels[s] != UNSEEN {
            continue;
        }
        labels[s] = next;
        stack.push(s as u32);
        while let Some(v) = stack.pop() {
            for &u in &adj[start[v as usize]..start[v as usize + 1]] {
                if labels[u as usize] == UNSEEN {
                    labels[u as usize] = next;
                    stack.push(u);
                }
            }
        }
        next += 1;
    }
    (labels, next as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::BoundaryStat;

    fn edge(a: u32, b: u32, w: f64) -> Edge {
        Edge {
            a,
            b,
            weight: w,
            boundary: BoundaryStat::new(0.0, 1),
        }
    }

    #[test]
    fn single_pixel_has_no_merges() {
        let img = Image::gray(1, 1, vec![0.3]).unwrap();
        let h = build_hierarchy(&img, None, &FeatureConfig::default()).unwrap();
        assert!(h.merges().is_empty());
        assert_eq!(h.iteration_count(), 0);
        assert_eq!(h.parent(0), NO_PARENT);
    }

    #[test]
    fn two_pixels_one_round() {
        let img = Image::gray(2, 1, vec![0.3, 0.9]).unwrap();
        let h = build_hierarchy(&img, None, &FeatureConfig::default()).unwrap();
        assert_eq!(h.merges().len(), 1);
        assert_eq!(h.iteration_count(), 1);
        let m = h.merges()[0];
        assert_eq!((m.root_a, m.root_b, m.new_node), (0, 1, 2));
        assert!((m.weight - 0.6).abs() < 1e-12);
    }

    #[test]
    fn weight_sort_matches_comparison_sort() {
        let ws = [0.5, 0.1, 0.5, 0.0, 0.3, 0.1, 0.9, 0.5];
        let edges: Vec<Edge> = ws
            .iter()
            .enumerate()
            .map(|(i, &w)| edge(i as u32, i as u32 + 1, w))
            .collect();
        let chosen: Vec<u32> = (0..edges.len() as u32).rev().collect();
        let got = SortScratch::default().sort_by_weight(&edges, chosen.clone());
        let mut want = chosen;
        want.sort_by(|&x, &y| edges[x as usize].cmp_key(&edges[y as usize]));
        assert_eq!(got, want);
    }

    #[test]
    fn auxiliary_components_number_by_smallest_member() {
        let edges = vec![edge(0, 3, 0.0), edge(1, 2, 0.0), edge(3, 4, 0.0)];
        let (labels, k) = auxiliary_components(6, &edges, &[0, 1, 2]);
        assert_eq!(k, 3);
        assert_eq!(labels, vec![0, 1, 1, 0, 0, 2]);
    }

    #[test]
    fn from_merges_rejects_dead_roots() {
        let good = MergeRecord {
            step: 0,
            root_a: 0,
            root_b: 1,
            new_node: 3,
            weight: 0.0,
            iteration: 0,
        };
        let reuse = MergeRecord {
            step: 1,
            root_a: 0,
            root_b: 2,
            new_node: 4,
            ..good
        };
        assert!(Hierarchy::from_merges(3, 1, vec![good, reuse]).is_err());
        let ok = MergeRecord { root_a: 3, ..reuse };
        assert!(Hierarchy::from_merges(3, 1, vec![good, ok]).is_ok());
    }
}
