//! Scale queries against a built [`Hierarchy`] and dendrogram export.

use std::io::Write;
use std::path::Path;

use crate::build::{Hierarchy, MergeRecord};
use crate::error::{Error, Result};

/// Per-pixel region labels in `[0, k)`, numbered by first occurrence in
/// row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    width: usize,
    height: usize,
    k: usize,
    labels: Vec<u32>,
}

impl Segmentation {
    /// Canonicalizes arbitrary labels. Region connectivity is not checked.
    pub fn from_labels(width: usize, height: usize, labels: &[u32]) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "{} labels for a {width}x{height} grid",
                labels.len()
            )));
        }
        let (labels, k) = canonicalize(labels);
        Ok(Segmentation {
            width,
            height,
            k,
            labels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of regions.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// True when every region of `self` lies inside one region of `coarser`.
    pub fn refines(&self, coarser: &Segmentation) -> bool {
        if self.labels.len() != coarser.labels.len() {
            return false;
        }
        let mut map = vec![u32::MAX; self.k];
        for (&fine, &coarse) in self.labels.iter().zip(&coarser.labels) {
            let slot = &mut map[fine as usize];
            if *slot == u32::MAX {
                *slot = coarse;
            } else if *slot != coarse {
                return false;
            }
        }
        true
    }
}

/// Relabels by first occurrence; returns the labels and their count.
pub(crate) fn canonicalize(labels: &[u32]) -> (Vec<u32>, usize) {
    let mut remap = std::collections::HashMap::new();
    let out = labels
        .iter()
        .map(|&l| {
            let next = remap.len() as u32;
            *remap.entry(l).or_insert(next)
        })
        .collect();
    (out, remap.len())
}

impl Hierarchy {
    fn check_scale(&self, k: usize) -> Result<()> {
        let n = self.leaf_count();
        if k == 0 || k > n {
            return Err(Error::ScaleOutOfRange { k, n });
        }
        Ok(())
    }

    /// Segmentation with exactly `k` regions: the union of the first
    /// `n - k` merges.
    pub fn extract(&self, k: usize) -> Result<Segmentation> {
        self.check_scale(k)?;
        let n = self.leaf_count();
        let total = 2 * n - 1;
        // nodes created by the first n - k merges; the rest are cut away
        let kept = (2 * n - k) as u64;
        // top of each node's kept ancestor chain; parents always have larger ids
        let mut top: Vec<u32> = vec![0; total];
        for v in (0..total).rev() {
            let p = self.parent(v as u64);
            top[v] = if p < kept { top[p as usize] } else { v as u32 };
        }

        const UNSET: u32 = u32::MAX;
        let mut label_of_top = vec![UNSET; total];
        let mut labels = Vec::with_capacity(n);
        let mut next = 0u32;
        for &t in &top[..n] {
            let slot = &mut label_of_top[t as usize];
            if *slot == UNSET {
                *slot = next;
                next += 1;
            }
            labels.push(*slot);
        }
        debug_assert_eq!(next as usize, k);
        Ok(Segmentation {
            width: self.width(),
            height: self.height(),
            k,
            labels,
        })
    }

    /// Several scales from the one hierarchy, in input order. All scales are
    /// validated before any is extracted.
    pub fn extract_many(&self, ks: &[usize]) -> Result<Vec<Segmentation>> {
        for &k in ks {
            self.check_scale(k)?;
        }
        ks.iter().map(|&k| self.extract(k)).collect()
    }
}

const DENDROGRAM_MAGIC: &[u8; 4] = b"SHDG";
const DENDROGRAM_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4 + 4 + 8;
const RECORD_LEN: usize = 8 * 3 + 8 + 4;

impl Hierarchy {
    /// Little-endian dendrogram file: magic `SHDG`, `u16` version, `u32`
    /// width, `u32` height, `u64` leaf count, then one
    /// `(u64 rootA, u64 rootB, u64 newNode, f64 weight, u32 iteration)`
    /// record per merge.
    pub fn to_dendrogram_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(HEADER_LEN + self.merges().len() * RECORD_LEN);
        buf.extend_from_slice(DENDROGRAM_MAGIC);
        buf.extend_from_slice(&DENDROGRAM_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.width() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.height() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.leaf_count() as u64).to_le_bytes());
        for m in self.merges() {
            buf.extend_from_slice(&m.root_a.to_le_bytes());
            buf.extend_from_slice(&m.root_b.to_le_bytes());
            buf.extend_from_slice(&m.new_node.to_le_bytes());
            buf.extend_from_slice(&m.weight.to_le_bytes());
            buf.extend_from_slice(&m.iteration.to_le_bytes());
        }
        buf
    }

    pub fn export_dendrogram(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_dendrogram_bytes())
            .map_err(|e| Error::io(path, e))
    }

    pub fn from_dendrogram_bytes(bytes: &[u8]) -> Result<Hierarchy> {
        let bad = |msg: String| Error::InvalidInput(format!("dendrogram: {msg}"));
        if bytes.len() < HEADER_LEN {
            return Err(bad(format!(
                "{} bytes is shorter than the {HEADER_LEN}-byte header",
                bytes.len()
            )));
        }
        if &bytes[..4] != DENDROGRAM_MAGIC {
            return Err(bad("bad magic".into()));
        }
        let u16_at = |o: usize| u16::from_le_bytes(bytes[o..o + 2].try_into().unwrap());
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u16_at(4);
        if version != DENDROGRAM_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let width = u32_at(6) as usize;
        let height = u32_at(10) as usize;
        let leaves = u64_at(14);
        if leaves == 0 || leaves != width as u64 * height as u64 {
            return Err(bad(format!(
                "leaf count {leaves} does not match {width}x{height}"
            )));
        }
        let body = &bytes[HEADER_LEN..];
        let expected = (leaves - 1)
            .checked_mul(RECORD_LEN as u64)
            .ok_or_else(|| bad("record count overflows".into()))?;
        if body.len() as u64 != expected {
            return Err(bad(format!(
                "payload is {} bytes, expected {expected}",
                body.len()
            )));
        }
        let merges = body
            .chunks_exact(RECORD_LEN)
            .enumerate()
            .map(|(i, r)| MergeRecord {
                step: i as u64,
                root_a: u64::from_le_bytes(r[0..8].try_into().unwrap()),
                root_b: u64::from_le_bytes(r[8..16].try_into().unwrap()),
                new_node: u64::from_le_bytes(r[16..24].try_into().unwrap()),
                weight: f64::from_le_bytes(r[24..32].try_into().unwrap()),
                iteration: u32::from_le_bytes(r[32..36].try_into().unwrap()),
            })
            .collect();
        Hierarchy::from_merges(width, height, merges)
    }

    pub fn import_dendrogram(path: &Path) -> Result<Hierarchy> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_dendrogram_bytes(&bytes)
    }
}
