//! Keyframe descriptors: palette HistMaps (also the sketch-query form),
//! feature-map criterion scores, and normalized deep-feature vectors.

mod criteria;
mod histmap;
mod vector;

pub use criteria::{
    color_score, concept_score, criterion_score, edge_score, motion_from_profile, Criterion,
};
pub use histmap::{
    compute_histmap, histmap_distance, quantize, read_histmaps, sketch_to_histmap, write_histmaps, CellMask,
    DescriptorError, HistMap, SketchHistMap, BINS, CELLS, GRID, PALETTE, PALETTE_NAMES,
};
pub use vector::{normalize_vector, FeatureVector, VectorError};
