//! Superpixel hierarchies by Boruvka region merging.
//!
//! [`build_hierarchy`] runs Boruvka's minimum spanning tree algorithm on the
//! 4-connected pixel grid, contracting each round's merges into
//! supervertices and re-weighting the contracted graph from aggregated
//! region features (mean color, color histograms, boundary edge
//! confidence). The resulting merge log is a binary dendrogram from which a
//! segmentation with any number of regions is extracted in near-linear time
//! ([`Hierarchy::extract`]). The [`metrics`] module scores segmentations
//! against ground truth.
//!
//! ```
//! use superpixel_hierarchy::{build_hierarchy, FeatureConfig, Image};
//!
//! let data: Vec<f64> = (0..64).map(|p| if p % 8 < 4 { 0.1 } else { 0.9 }).collect();
//! let img = Image::gray(8, 8, data).unwrap();
//! let h = build_hierarchy(&img, None, &FeatureConfig::default()).unwrap();
//! let seg = h.extract(2).unwrap();
//! assert_eq!(seg.at(0, 0), 0);
//! assert_eq!(seg.at(7, 7), 1);
//! ```

pub mod build;
pub mod error;
pub mod extract;
pub mod features;
pub mod graph;
pub mod image;
pub mod metrics;
pub mod pnm;
pub mod sort;
pub mod union_find;

pub use build::{build_hierarchy, build_hierarchy_with, Hierarchy, MergeRecord, RoundStat};
pub use error::{Error, Result};
pub use extract::Segmentation;
pub use features::{
    color_distance, combined_distance, edge_distance, BoundaryStat, FeatureConfig, VertexFeature,
};
pub use graph::{build_grid_graph, ContractedGraph, Edge};
pub use image::{ColorSpace, EdgeConfidenceMap, Image};
pub use metrics::{GroundTruth, MetricsReport};
pub use pnm::LabelFormat;
