//! Patch sampling: non-overlapping grid partition, multi-scale centered
//! windows, purity-filtered training-sample extraction, and sliding-window
//! candidate generation.
//!
//! Every emitted [`Patch`] is resized to the canonical size so the classifier
//! sees a fixed input shape regardless of the source window scale. Windows
//! near raster edges clamp (shift inward) rather than pad, so no pixel values
//! are invented.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::raster::{crop, resize_bilinear, LabelMask, MultibandRaster, RasterError, BACKGROUND};

#[derive(Debug, Error)]
pub enum PatchError {
    #[error("scale list must be non-empty, ascending, and positive")]
    BadScales,
    #[error("canonical size must be at least 1")]
    BadCanonicalSize,
    #[error("raster {width}x{height} is smaller than one {cell}x{cell} cell")]
    RasterTooSmall { width: usize, height: usize, cell: usize },
    #[error("mask dimensions {mw}x{mh} do not match raster {rw}x{rh}")]
    DimensionMismatch { mw: usize, mh: usize, rw: usize, rh: usize },
    #[error("purity must lie in (0.5, 1]")]
    BadPurity,
    #[error("reference pixel ({x}, {y}) outside raster {width}x{height}")]
    ReferenceOutOfBounds { x: usize, y: usize, width: usize, height: usize },
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Ascending window sizes plus the canonical resize target. The smallest
/// scale doubles as the grid cell size for map production.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaleConfig {
    scales: Vec<usize>,
    canonical_size: usize,
}

impl ScaleConfig {
    pub fn new(scales: Vec<usize>, canonical_size: usize) -> Result<Self, PatchError> {
        if scales.is_empty() || scales[0] == 0 || scales.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PatchError::BadScales);
        }
        if canonical_size == 0 {
            return Err(PatchError::BadCanonicalSize);
        }
        Ok(Self { scales, canonical_size })
    }

    pub fn scales(&self) -> &[usize] {
        &self.scales
    }

    /// Grid cell size: the smallest scale.
    pub fn cell_size(&self) -> usize {
        self.scales[0]
    }

    pub fn canonical_size(&self) -> usize {
        self.canonical_size
    }

    pub fn num_scales(&self) -> usize {
        self.scales.len()
    }
}

/// A canonical-size window cut from a source raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    /// Pixel data, resized to `canonical_size` x `canonical_size`.
    pub pixels: MultibandRaster,
    /// Top-left corner of the source window.
    pub origin: (usize, usize),
    /// Side length of the source window.
    pub scale: usize,
    /// The reference pixel this window describes (its center before clamping).
    pub reference: (usize, usize),
}

/// A patch paired with a ground-truth class id.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub patch: Patch,
    pub label: u16,
}

fn cut_patch(
    r: &MultibandRaster,
    x: usize,
    y: usize,
    scale: usize,
    reference: (usize, usize),
    canonical: usize,
) -> Result<Patch, PatchError> {
    let w = scale.min(r.width());
    let h = scale.min(r.height());
    let window = crop(r, x, y, w, h)?;
    let pixels = resize_bilinear(&window, canonical, canonical)?;
    Ok(Patch { pixels, origin: (x, y), scale, reference })
}

/// Clamped top-left corner for a `scale`-sized window centered at `z`.
fn centered_origin(z: usize, scale: usize, dim: usize) -> usize {
    if scale >= dim {
        return 0;
    }
    let half = scale / 2;
    let start = z.saturating_sub(half);
    start.min(dim - scale)
}

/// Partition the raster into non-overlapping cells of the grid size, dropping
/// residual margins. One patch per cell, in row-major cell order; each
/// reference is its cell center.
pub fn grid_partition(r: &MultibandRaster, cfg: &ScaleConfig) -> Result<Vec<Patch>, PatchError> {
    let cell = cfg.cell_size();
    let cols = r.width() / cell;
    let rows = r.height() / cell;
    if cols == 0 || rows == 0 {
        return Err(PatchError::RasterTooSmall {
            width: r.width(),
            height: r.height(),
            cell,
        });
    }
    let mut patches = Vec::with_capacity(cols * rows);
    for row in 0..rows {
        for col in 0..cols {
            let (x, y) = (col * cell, row * cell);
            let reference = (x + cell / 2, y + cell / 2);
            patches.push(cut_patch(r, x, y, cell, reference, cfg.canonical_size())?);
        }
    }
    Ok(patches)
}

/// One window per configured scale, each centered on the reference pixel `z`
/// and clamped inside the raster, resized to canonical size.
pub fn multiscale_sample(
    r: &MultibandRaster,
    z: (usize, usize),
    cfg: &ScaleConfig,
) -> Result<Vec<Patch>, PatchError> {
    if z.0 >= r.width() || z.1 >= r.height() {
        return Err(PatchError::ReferenceOutOfBounds {
            x: z.0,
            y: z.1,
            width: r.width(),
            height: r.height(),
        });
    }
    cfg.scales()
        .iter()
        .map(|&scale| {
            let x = centered_origin(z.0, scale, r.width());
            let y = centered_origin(z.1, scale, r.height());
            cut_patch(r, x, y, scale, z, cfg.canonical_size())
        })
        .collect()
}

/// Per-scale, per-class tally of how many samples a harvest produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarvestReport {
    pub requested_per_class_per_scale: usize,
    /// `obtained[scale_index][class]`
    pub obtained: Vec<Vec<usize>>,
}

impl HarvestReport {
    /// Classes that came up short at any scale, as `(scale, class, obtained)`.
    pub fn shortfalls(&self) -> Vec<(usize, u16, usize)> {
        let mut out = Vec::new();
        for (si, per_class) in self.obtained.iter().enumerate() {
            for (c, &n) in per_class.iter().enumerate() {
                if n < self.requested_per_class_per_scale {
                    out.push((si, c as u16, n));
                }
            }
        }
        out
    }
}

/// Draw uniformly random windows per scale and keep one as a class-`c` sample
/// only when strictly more than `purity` of its pixels carry class `c`.
/// Background pixels count against purity; all-background windows are
/// discarded. Attempts are capped at 50x the requested per-scale total, so a
/// class that is absent or tiny simply yields fewer samples (see the report).
///
/// All randomness flows from `seed`; the same arguments reproduce the same
/// samples bit for bit.
pub fn extract_training_samples(
    r: &MultibandRaster,
    m: &LabelMask,
    cfg: &ScaleConfig,
    per_class_per_scale: usize,
    purity: f64,
    seed: u64,
) -> Result<(Vec<LabeledSample>, HarvestReport), PatchError> {
    if m.width() != r.width() || m.height() != r.height() {
        return Err(PatchError::DimensionMismatch {
            mw: m.width(),
            mh: m.height(),
            rw: r.width(),
            rh: r.height(),
        });
    }
    if !(purity > 0.5 && purity <= 1.0) {
        return Err(PatchError::BadPurity);
    }
    let num_classes = m.num_classes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    let mut obtained = vec![vec![0usize; num_classes]; cfg.num_scales()];

    for (si, &scale) in cfg.scales().iter().enumerate() {
        if scale > r.width() || scale > r.height() {
            continue;
        }
        let max_x = r.width() - scale;
        let max_y = r.height() - scale;
        let wanted = per_class_per_scale * num_classes;
        let attempt_cap = wanted.saturating_mul(50);
        let mut filled = 0usize;
        let mut attempts = 0usize;
        while filled < num_classes && attempts < attempt_cap {
            attempts += 1;
            let x = rng.gen_range(0..=max_x);
            let y = rng.gen_range(0..=max_y);
            let Some(class) = pure_window_class(m, x, y, scale, purity, num_classes) else {
                continue;
            };
            let count = &mut obtained[si][class as usize];
            if *count >= per_class_per_scale {
                continue;
            }
            let reference = (x + scale / 2, y + scale / 2);
            let patch = cut_patch(r, x, y, scale, reference, cfg.canonical_size())?;
            samples.push(LabeledSample { patch, label: class });
            *count += 1;
            if *count == per_class_per_scale {
                filled += 1;
            }
        }
    }

    let report = HarvestReport {
        requested_per_class_per_scale: per_class_per_scale,
        obtained,
    };
    Ok((samples, report))
}

/// The dominant class of a window if it strictly exceeds the purity fraction
/// of all window pixels (background included in the denominator), else None.
fn pure_window_class(
    m: &LabelMask,
    x: usize,
    y: usize,
    scale: usize,
    purity: f64,
    num_classes: usize,
) -> Option<u16> {
    let mut counts = vec![0usize; num_classes];
    for j in y..y + scale {
        for i in x..x + scale {
            let label = m.get(i, j);
            if label != BACKGROUND {
                counts[label as usize] += 1;
            }
        }
    }
    let total = scale * scale;
    let (best, &best_count) = counts
        .iter()
        .enumerate()
        .max_by_key(|&(i, &n)| (n, std::cmp::Reverse(i)))?;
    if (best_count as f64) > purity * total as f64 {
        Some(best as u16)
    } else {
        None
    }
}

/// Sliding windows at every scale with stride half the window size,
/// concatenated scale by scale, each resized to canonical size.
pub fn sliding_candidates(
    r: &MultibandRaster,
    cfg: &ScaleConfig,
) -> Result<Vec<Patch>, PatchError> {
    let smallest = cfg.cell_size();
    if smallest > r.width() || smallest > r.height() {
        return Err(PatchError::RasterTooSmall {
            width: r.width(),
            height: r.height(),
            cell: smallest,
        });
    }
    let mut patches = Vec::new();
    for &scale in cfg.scales() {
        if scale > r.width() || scale > r.height() {
            continue;
        }
        let stride = (scale / 2).max(1);
        let mut y = 0;
        while y + scale <= r.height() {
            let mut x = 0;
            while x + scale <= r.width() {
                let reference = (x + scale / 2, y + scale / 2);
                patches.push(cut_patch(r, x, y, scale, reference, cfg.canonical_size())?);
                x += stride;
            }
            y += stride;
        }
    }
    Ok(patches)
}
