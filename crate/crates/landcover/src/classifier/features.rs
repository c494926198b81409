//! Handcrafted patch descriptors feeding the classifier.
//!
//! Layout of the feature vector for a B-band canonical patch:
//!
//! - `[0, 16B)`: per-band intensity histograms, 16 bins over `[0, 255]`,
//!   each band's block L1-normalized.
//! - `[16B, 16B+8)`: gradient-orientation histogram of the band-mean image,
//!   8 bins over `[0, 2pi)`, magnitude-weighted, L1-normalized (all-zero for
//!   a constant patch).
//! - `[16B+8, 16B+8+2B)`: per-band `(mean, std)` pairs, scaled by 1/255.

use crate::patching::Patch;
use crate::raster::MultibandRaster;

pub const INTENSITY_BINS: usize = 16;
pub const ORIENTATION_BINS: usize = 8;

/// Deterministic descriptor of one canonical-size patch.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchFeatures {
    values: Vec<f64>,
}

impl PatchFeatures {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Feature dimension for a raster with `bands` bands.
    pub fn dimension(bands: usize) -> usize {
        INTENSITY_BINS * bands + ORIENTATION_BINS + 2 * bands
    }
}

/// Extract the descriptor of a patch. Deterministic; invariant to pixel
/// permutation in the intensity blocks.
pub fn extract_features(p: &Patch) -> PatchFeatures {
    PatchFeatures { values: raster_features(&p.pixels) }
}

pub(crate) fn raster_features(r: &MultibandRaster) -> Vec<f64> {
    let bands = r.bands();
    let area = (r.width() * r.height()) as f64;
    let mut values = Vec::with_capacity(PatchFeatures::dimension(bands));

    for b in 0..bands {
        let mut hist = [0.0f64; INTENSITY_BINS];
        for &v in r.band(b) {
            hist[intensity_bin(v)] += 1.0;
        }
        for h in hist {
            values.push(h / area);
        }
    }

    values.extend_from_slice(&orientation_histogram(r));

    for b in 0..bands {
        let plane = r.band(b);
        let mean = plane.iter().map(|&v| v as f64).sum::<f64>() / area;
        let var = plane
            .iter()
            .map(|&v| {
                let d = v as f64 - mean;
                d * d
            })
            .sum::<f64>()
            / area;
        values.push(mean / 255.0);
        values.push(var.sqrt() / 255.0);
    }

    values
}

#[inline]
pub(crate) fn intensity_bin(v: f32) -> usize {
    ((v as f64 / 16.0).floor() as isize).clamp(0, INTENSITY_BINS as isize - 1) as usize
}

/// Magnitude-weighted orientation histogram of the band-mean image using
/// clamped central differences. Sums to 1, or stays all-zero when the patch
/// has no gradient anywhere.
fn orientation_histogram(r: &MultibandRaster) -> [f64; ORIENTATION_BINS] {
    let (w, h) = (r.width(), r.height());
    let mean: Vec<f64> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| r.band_mean(x, y))
        .collect();
    let at = |x: usize, y: usize| mean[y * w + x];

    let mut hist = [0.0f64; ORIENTATION_BINS];
    let mut total = 0.0;
    for y in 0..h {
        for x in 0..w {
            let gx = (at((x + 1).min(w - 1), y) - at(x.saturating_sub(1), y)) / 2.0;
            let gy = (at(x, (y + 1).min(h - 1)) - at(x, y.saturating_sub(1))) / 2.0;
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            hist[orientation_bin(gy, gx)] += mag;
            total += mag;
        }
    }
    if total > 0.0 {
        for v in hist.iter_mut() {
            *v /= total;
        }
    }
    hist
}

#[inline]
pub(crate) fn orientation_bin(gy: f64, gx: f64) -> usize {
    let mut theta = gy.atan2(gx);
    if theta < 0.0 {
        theta += std::f64::consts::TAU;
    }
    ((theta / (std::f64::consts::TAU / ORIENTATION_BINS as f64)) as usize)
        .min(ORIENTATION_BINS - 1)
}
