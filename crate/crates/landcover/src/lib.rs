//! Transferable patch-based land-cover classification for multiband rasters.
//!
//! The pipeline in one paragraph: a probabilistic patch classifier is trained
//! on labeled source rasters, then pointed at an unlabeled target raster.
//! Confident patch predictions become pseudo-labels, are ranked by entropy,
//! capped per class, and validated by nearest-neighbor retrieval against the
//! source embeddings; the survivors fine-tune the classifier. The fine-tuned
//! model classifies the target grid cell by cell with specificity-weighted
//! multi-scale fusion, and a hierarchical segmentation refines the map by
//! per-region majority voting. Confusion-matrix metrics close the loop.
//!
//! Modules follow those stages:
//!
//! - [`raster`]: multiband rasters, label masks, bit-exact file formats.
//! - [`patching`]: grid partition, multi-scale windows, purity-filtered
//!   training samples, sliding-window candidates.
//! - [`classifier`]: the softmax-probability + embedding classifier contract
//!   and a from-scratch one-hidden-layer implementation over handcrafted
//!   patch features.
//! - [`transfer`]: pseudo-label assignment, entropy ranking, retrieval
//!   filtering, fine-tune set construction.
//! - [`fusion`]: specificity-weighted multi-scale probability fusion and
//!   patch-wise map production.
//! - [`segmentation`]: graph-based initial regions plus greedy hierarchical
//!   merging on color/texture/size/fill similarity.
//! - [`voting`]: per-region majority voting over the patch-wise map.
//! - [`metrics`]: confusion matrices, kappa, overall accuracy, user's
//!   accuracy, report files.
//! - [`pipeline`]: configuration, synthetic scene generation, and the
//!   end-to-end experiment runner behind the CLI.
//!
//! See the crate examples for one runnable program per stage; `run-all` in the
//! CLI chains them into the pretrain/transfer/classify/evaluate experiment.

pub mod classifier;
pub mod fusion;
pub mod metrics;
pub mod patching;
pub mod pipeline;
pub mod raster;
pub mod segmentation;
pub mod transfer;
pub mod voting;

pub use classifier::{ClassifierModel, Embedding, PatchFeatures, ProbVector, TrainConfig};
pub use patching::{LabeledSample, Patch, ScaleConfig};
pub use raster::{ColorLegend, LabelMask, MultibandRaster, BACKGROUND};
pub use segmentation::{SegConfig, Segmentation};
pub use transfer::TransferConfig;
