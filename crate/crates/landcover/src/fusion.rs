//! Specificity-weighted fusion of multi-scale class probabilities.
//!
//! Each scale's probability vector gets a weight that measures how peaked
//! it is — 0 for uniform, 1 for one-hot — and the per-class probabilities
//! are averaged under those weights. A scale that cannot make up its mind
//! therefore contributes nothing to the fused decision.

use rayon::prelude::*;

use crate::classifier::{ClassifierModel, PatchFeatures, ProbVector};
use crate::patching::{grid_partition, multiscale_sample, PatchError, ScaleConfig};
use crate::raster::{LabelMask, MultibandRaster, RasterError, BACKGROUND};

#[derive(Debug, thiserror::Error)]
pub enum FusionError {
    #[error("need at least one scale of probabilities")]
    EmptyScales,
    #[error("probability vectors disagree on class count: {0} vs {1}")]
    ClassCountMismatch(usize, usize),
    #[error("model expects {expected}-dimensional features, patches give {found}")]
    ModelInputMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Patch(#[from] PatchError),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// The per-scale probability vectors for one reference pixel.
#[derive(Debug, Clone)]
pub struct ScaleProbs(Vec<ProbVector>);

impl ScaleProbs {
    pub fn new(per_scale: Vec<ProbVector>) -> Result<Self, FusionError> {
        let first = per_scale.first().ok_or(FusionError::EmptyScales)?.num_classes();
        for p in &per_scale {
            if p.num_classes() != first {
                return Err(FusionError::ClassCountMismatch(first, p.num_classes()));
            }
        }
        Ok(ScaleProbs(per_scale))
    }

    pub fn scales(&self) -> &[ProbVector] {
        &self.0
    }
}

/// Fusion result; `uniform_fallback` marks the defined-fallback case where
/// every scale was exactly uniform and the unweighted mean was used.
#[derive(Debug, Clone)]
pub struct Fused {
    pub probs: ProbVector,
    pub uniform_fallback: bool,
}

/// How decisively a probability vector favors its leading classes:
/// descending-sorted entries p̂ scored as Σ_{k=1}^{K-1} (1/k)(p̂_k − p̂_{k+1}).
/// Lies in [0, 1]; 0 iff uniform, 1 iff one-hot.
pub fn specificity_weight(p: &ProbVector) -> f64 {
    let mut sorted = p.probs().to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("probabilities are finite"));
    sorted
        .windows(2)
        .enumerate()
        .map(|(i, w)| (w[0] - w[1]) / (i + 1) as f64)
        .sum()
}

/// Weighted average of the scales under their specificity weights.
pub fn fuse(sp: &ScaleProbs) -> Fused {
    let k = sp.0[0].num_classes();
    let weights: Vec<f64> = sp.0.iter().map(specificity_weight).collect();
    let total: f64 = weights.iter().sum();
    let n = sp.0.len() as f64;

    let mut fused = vec![0.0f64; k];
    if total == 0.0 {
        // Every scale is exactly uniform; the unweighted mean (itself
        // uniform) stands in, flagged so callers can count occurrences.
        for p in &sp.0 {
            for (acc, &v) in fused.iter_mut().zip(p.probs()) {
                *acc += v / n;
            }
        }
    } else {
        for (p, &w) in sp.0.iter().zip(&weights) {
            for (acc, &v) in fused.iter_mut().zip(p.probs()) {
                *acc += w * v / total;
            }
        }
    }
    Fused {
        probs: ProbVector::new(fused).expect("convex combination of distributions"),
        uniform_fallback: total == 0.0,
    }
}

/// Argmax class of a probability vector; ties go to the lowest class id.
pub fn decide(p: &ProbVector) -> u16 {
    p.top().0
}

/// Patch-wise classification map: every grid cell is classified through
/// multi-scale fusion at its center and stamped with the fused label.
/// Margins not covered by the grid stay BACKGROUND.
pub fn classify_map(
    model: &ClassifierModel,
    raster: &MultibandRaster,
    cfg: &ScaleConfig,
) -> Result<LabelMask, FusionError> {
    let expected = PatchFeatures::dimension(raster.bands());
    if model.input_dim() != expected {
        return Err(FusionError::ModelInputMismatch {
            expected: model.input_dim(),
            found: expected,
        });
    }
    let cells = grid_partition(raster, cfg)?;

    let labels: Vec<(usize, usize, u16)> = cells
        .par_iter()
        .map(|cell| -> Result<(usize, usize, u16), FusionError> {
            let windows = multiscale_sample(raster, cell.reference, cfg)?;
            let probs: Vec<ProbVector> =
                windows.iter().map(|w| model.predict_proba(w)).collect();
            let fused = fuse(&ScaleProbs::new(probs)?);
            Ok((cell.origin.0, cell.origin.1, decide(&fused.probs)))
        })
        .collect::<Result<_, _>>()?;

    let mut mask = LabelMask::filled(
        raster.width(),
        raster.height(),
        model.num_classes(),
        BACKGROUND,
    )?;
    let cell = cfg.cell_size();
    for (x0, y0, label) in labels {
        for y in y0..y0 + cell {
            for x in x0..x0 + cell {
                mask.set(x, y, label);
            }
        }
    }
    Ok(mask)
}
