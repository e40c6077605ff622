#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use superpixel_hierarchy::{EdgeConfidenceMap, Image, Segmentation};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Uniform noise in 8-bit steps, so values survive a PNM round trip.
pub fn random_image(rng: &mut StdRng, w: usize, h: usize, channels: usize) -> Image {
    let data = (0..w * h * channels)
        .map(|_| rng.gen_range(0..=255u8) as f64 / 255.0)
        .collect();
    Image::new(w, h, channels, data).unwrap()
}

/// Few gray levels, so ties between edge weights are common.
pub fn quantized_image(rng: &mut StdRng, w: usize, h: usize, levels: u8) -> Image {
    let data = (0..w * h)
        .map(|_| rng.gen_range(0..levels) as f64 / (levels - 1).max(1) as f64)
        .collect();
    Image::gray(w, h, data).unwrap()
}

/// Smooth-ish piecewise image: random rectangles painted over a base color.
pub fn blocky_image(rng: &mut StdRng, w: usize, h: usize) -> Image {
    let mut data = vec![0.5; w * h * 3];
    for _ in 0..6 {
        let (x0, y0) = (rng.gen_range(0..w), rng.gen_range(0..h));
        let (x1, y1) = (rng.gen_range(x0..w) + 1, rng.gen_range(y0..h) + 1);
        let c: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
        for y in y0..y1 {
            for x in x0..x1 {
                for (ch, v) in c.iter().enumerate() {
                    data[(y * w + x) * 3 + ch] = *v;
                }
            }
        }
    }
    for v in &mut data {
        *v = (*v + rng.gen_range(-0.03..0.03)).clamp(0.0, 1.0);
    }
    Image::new(w, h, 3, data).unwrap()
}

pub fn image_from_fn(w: usize, h: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Image {
    let mut data = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            data.extend_from_slice(&f(x, y));
        }
    }
    Image::new(w, h, 3, data).unwrap()
}

pub fn labels_from_fn(w: usize, h: usize, f: impl Fn(usize, usize) -> u32) -> Vec<u32> {
    (0..w * h).map(|p| f(p % w, p / w)).collect()
}

/// Confidence 1 on pixels adjacent to a label change, 0 elsewhere.
pub fn aligned_edge_map(w: usize, h: usize, truth: &[u32]) -> EdgeConfidenceMap {
    let mut conf = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            if x + 1 < w && truth[p] != truth[p + 1] {
                conf[p] = 1.0;
                conf[p + 1] = 1.0;
            }
            if y + 1 < h && truth[p] != truth[p + w] {
                conf[p] = 1.0;
                conf[p + w] = 1.0;
            }
        }
    }
    EdgeConfidenceMap::new(w, h, conf).unwrap()
}

/// Same partition up to renaming.
pub fn same_partition(a: &[u32], b: &[u32]) -> bool {
    use std::collections::HashMap;
    if a.len() != b.len() {
        return false;
    }
    let mut ab = HashMap::new();
    let mut ba = HashMap::new();
    a.iter()
        .zip(b)
        .all(|(&x, &y)| *ab.entry(x).or_insert(y) == y && *ba.entry(y).or_insert(x) == x)
}

/// Every label class is one 4-connected component (flood fill).
pub fn regions_connected(s: &Segmentation) -> bool {
    let (w, h) = (s.width(), s.height());
    let labels = s.labels();
    let mut seen = vec![false; w * h];
    let mut label_done = vec![false; s.k()];
    let mut stack = Vec::new();
    for start in 0..w * h {
        if seen[start] {
            continue;
        }
        let l = labels[start];
        if label_done[l as usize] {
            return false;
        }
        label_done[l as usize] = true;
        seen[start] = true;
        stack.push(start);
        while let Some(p) = stack.pop() {
            let (x, y) = (p % w, p / w);
            let mut visit = |q: usize| {
                if !seen[q] && labels[q] == l {
                    seen[q] = true;
                    stack.push(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < w {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - w);
            }
            if y + 1 < h {
                visit(p + w);
            }
        }
    }
    true
}

/// Naive refinement check over all pixel pairs.
pub fn refines_naive(fine: &[u32], coarse: &[u32]) -> bool {
    for i in 0..fine.len() {
        for j in i + 1..fine.len() {
            if fine[i] == fine[j] && coarse[i] != coarse[j] {
                return false;
            }
        }
    }
    true
}

/// Kruskal over an explicit edge list with its own disjoint-set forest.
/// Returns the sorted weights of the spanning-forest edges.
pub fn kruskal_weights(n: usize, edges: &[(usize, usize, f64)]) -> Vec<f64> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut order: Vec<&(usize, usize, f64)> = edges.iter().collect();
    order.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    for &&(a, b, w) in &order {
        let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            out.push(w);
        }
    }
    out
}

// Reference metrics written from the definitions, pixel by pixel.

pub fn naive_asa(s: &[u32], g: &[u32]) -> f64 {
    let n = s.len();
    let mut correct = 0usize;
    let sp: std::collections::BTreeSet<u32> = s.iter().copied().collect();
    for &r in &sp {
        let gs: std::collections::BTreeSet<u32> = g.iter().copied().collect();
        let best = gs
            .iter()
            .map(|&t| (0..n).filter(|&p| s[p] == r && g[p] == t).count())
            .max()
            .unwrap_or(0);
        correct += best;
    }
    correct as f64 / n as f64
}

pub fn naive_ue(s: &[u32], g: &[u32]) -> f64 {
    let n = s.len();
    let sp: std::collections::BTreeSet<u32> = s.iter().copied().collect();
    let gs: std::collections::BTreeSet<u32> = g.iter().copied().collect();
    let mut leak = 0usize;
    for &t in &gs {
        for &r in &sp {
            let inside = (0..n).filter(|&p| s[p] == r && g[p] == t).count();
            if inside == 0 {
                continue;
            }
            let outside = (0..n).filter(|&p| s[p] == r && g[p] != t).count();
            leak += inside.min(outside);
        }
    }
    leak as f64 / n as f64
}

fn naive_boundary(w: usize, h: usize, l: &[u32]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            let right = x + 1 < w && l[p] != l[p + 1];
            let down = y + 1 < h && l[p] != l[p + w];
            if right || down {
                out.push((x, y));
            }
        }
    }
    out
}

pub fn naive_br(w: usize, h: usize, s: &[u32], g: &[u32], eps: usize) -> f64 {
    let gb = naive_boundary(w, h, g);
    if gb.is_empty() {
        return 1.0;
    }
    let sb = naive_boundary(w, h, s);
    let hit = gb
        .iter()
        .filter(|&&(gx, gy)| {
            sb.iter()
                .any(|&(sx, sy)| gx.abs_diff(sx).max(gy.abs_diff(sy)) <= eps)
        })
        .count();
    hit as f64 / gb.len() as f64
}

/// Random labels with a given number of classes (not necessarily connected).
pub fn random_labels(rng: &mut StdRng, n: usize, classes: u32) -> Vec<u32> {
    (0..n).map(|_| rng.gen_range(0..classes)).collect()
}

/// Random blocky labels: coarse cells with occasional noise.
pub fn random_blocky_labels(rng: &mut StdRng, w: usize, h: usize) -> Vec<u32> {
    let cw = rng.gen_range(1..=w);
    let ch = rng.gen_range(1..=h);
    let cols = w.div_ceil(cw);
    (0..w * h)
        .map(|p| {
            if rng.gen_bool(0.05) {
                rng.gen_range(0..4)
            } else {
                ((p / w / ch) * cols + (p % w) / cw) as u32
            }
        })
        .collect()
}
