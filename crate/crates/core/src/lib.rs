//! Proposal selection and linking for semi-supervised multi-object video
//! segmentation.
//!
//! Per-frame mask proposals (with objectness scores and appearance
//! embeddings) are linked into one track per first-frame object by a greedy
//! scorer that mixes five cues: objectness, appearance similarity, optical
//! flow mask propagation, and the complements of the latter two against
//! competing tracks. Around the merger sit proposal filtering, flow I/O and
//! warping, an IoU oracle merger, majority-vote ensembling, random weight
//! search, the J/F benchmark metrics and a synthetic video generator.

pub mod cli;
pub mod ensemble;
pub mod error;
pub mod flow;
pub mod labels;
pub mod manifest;
pub mod mask;
pub mod merging;
pub mod metrics;
pub mod scoring;
pub mod search;
pub mod synth;

pub use error::{Error, Result};
pub use flow::{load_flo, warp_mask, FlowField};
pub use labels::{GroundTruthVideo, LabelMap};
pub use manifest::{filter_proposals, GroundTruthObject, Proposal, VideoManifest};
pub use mask::{boundary, dilate, iou, BBox, Bitmap, EmptyIou, Mask};
pub use merging::{greedy_merge, oracle_merge, PreparedVideo, Selection, TrackSet};
pub use metrics::{evaluate, f_measure, j_measure, sequence_stats, EvalOptions, EvalResult};
pub use scoring::{Component, ComponentMask, SubScores, WeightVector};
pub use search::{random_search, sample_simplex, SearchConfig, SearchResult, SearchVideo};
