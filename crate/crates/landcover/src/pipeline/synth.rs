//! Synthetic labeled scenes for desk-scale validation: Voronoi-partitioned
//! class regions filled with class mean + sinusoidal texture + Gaussian
//! noise, plus a per-band affine shift that stands in for a sensor change.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::raster::{LabelMask, MultibandRaster, RasterError, BACKGROUND};

use super::PipelineConfig;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid scene spec: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Recipe for one synthetic scene. The same spec always produces the same
/// scene, bit for bit.
#[derive(Debug, Clone)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub bands: usize,
    pub classes: u16,
    /// Voronoi sites; site `i` carries class `i % classes`, so any count
    /// >= classes guarantees every class appears.
    pub sites: usize,
    /// `class_means[class][band]`, in the raster's [0, 255] value range.
    pub class_means: Vec<Vec<f64>>,
    /// Scene-wide additive brightness, on top of every class mean. Models
    /// the illumination of one acquisition: scenes taken under different
    /// conditions disagree on absolute brightness, so texture orientation
    /// is the more reliable cross-scene signal.
    pub brightness: f64,
    pub noise_std: f64,
    /// Sinusoid amplitude per class. Smooth covers (low values) are barely
    /// textured and lean on brightness; strongly textured covers carry a
    /// clear orientation signature.
    pub texture_amp: Vec<f64>,
    /// Sinusoid frequency per class, in cycles per pixel.
    pub texture_freq: Vec<f64>,
    /// Approximate fraction of each class's area that actually carries the
    /// stripe texture, in [0, 1], one entry per class. Texture comes and
    /// goes in wide bands running across the stripes, like planted rows or
    /// wave trains; the rest of the class surface is plain brightness +
    /// noise. 1 textures the whole class.
    pub texture_cover: Vec<f64>,
    /// Per-band affine shift applied after generation:
    /// shifted = clamp(gain * value + offset).
    pub gain: Vec<f64>,
    pub offset: Vec<f64>,
    pub seed: u64,
}

impl SceneSpec {
    /// A spec with evenly spread class means, mild per-band separation and
    /// per-class texture frequencies; the identity shift. Means stay low
    /// enough that moderate gain/offset shifts do not saturate at 255.
    pub fn uniform(
        width: usize,
        height: usize,
        bands: usize,
        classes: u16,
        seed: u64,
    ) -> Self {
        let k = classes.max(2) as usize;
        let class_means = (0..k)
            .map(|c| {
                (0..bands)
                    .map(|b| {
                        45.0 + 72.0 * c as f64 / (k - 1) as f64
                            + 5.0 * (b as f64 - (bands as f64 - 1.0) / 2.0)
                    })
                    .collect()
            })
            .collect();
        SceneSpec {
            width,
            height,
            bands,
            classes,
            sites: 24,
            class_means,
            brightness: 0.0,
            noise_std: 8.0,
            texture_amp: vec![16.0; k],
            texture_freq: (0..k).map(|c| 0.04 + 0.015 * c as f64).collect(),
            texture_cover: vec![1.0; k],
            gain: vec![1.0; bands],
            offset: vec![0.0; bands],
            seed,
        }
    }

    /// Scene recipe implied by a pipeline config; `shifted` selects the
    /// target-domain variant. Class means sit closer together than in
    /// [`SceneSpec::uniform`]; combined with per-scene illumination (see
    /// [`illumination_ladder`]) brightness alone never pins a class down
    /// across source scenes. The target variant stays at the reference
    /// illumination: its brightness difference IS the affine shift.
    pub fn from_pipeline(cfg: &PipelineConfig, seed: u64, shifted: bool) -> Self {
        let mut spec = SceneSpec::uniform(
            cfg.scene_width,
            cfg.scene_height,
            cfg.bands,
            cfg.classes,
            seed,
        );
        let k = cfg.classes.max(2) as usize;
        spec.class_means = (0..k)
            .map(|c| {
                (0..cfg.bands)
                    .map(|b| {
                        70.0 + 60.0 * c as f64 / (k - 1) as f64
                            + 5.0 * (b as f64 - (cfg.bands as f64 - 1.0) / 2.0)
                    })
                    .collect()
            })
            .collect();
        spec.sites = cfg.sites;
        spec.noise_std = cfg.noise_std;
        spec.texture_amp = vec![cfg.texture_amp; k];
        // The brightest class is always fully textured (think dense canopy
        // or built-up surface); the others carry texture only over
        // `cfg.texture_cover` of their area.
        spec.texture_cover = (0..k)
            .map(|c| if c == k - 1 { 1.0 } else { cfg.texture_cover })
            .collect();
        if shifted {
            spec.gain = vec![cfg.shift_gain; cfg.bands];
            spec.offset = vec![cfg.shift_offset; cfg.bands];
        }
        spec
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::BadSpec(msg));
        if self.width == 0 || self.height == 0 || self.bands == 0 {
            return bad("width, height and bands must be positive".into());
        }
        if self.classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.classes));
        }
        if self.sites < self.classes as usize {
            return bad(format!(
                "{} sites cannot cover {} classes",
                self.sites, self.classes
            ));
        }
        if self.class_means.len() != self.classes as usize
            || self.class_means.iter().any(|m| m.len() != self.bands)
        {
            return bad("class_means must be classes x bands".into());
        }
        if self.texture_freq.len() != self.classes as usize {
            return bad("texture_freq must have one entry per class".into());
        }
        if self.texture_amp.len() != self.classes as usize {
            return bad("texture_amp must have one entry per class".into());
        }
        if self.gain.len() != self.bands || self.offset.len() != self.bands {
            return bad("gain and offset must have one entry per band".into());
        }
        if self.gain.iter().any(|&g| !(g > 0.0)) {
            return bad("gains must be positive".into());
        }
        if self.noise_std < 0.0 || self.texture_amp.iter().any(|&a| a < 0.0) {
            return bad("noise_std and texture_amp must be non-negative".into());
        }
        if !self.brightness.is_finite() {
            return bad(format!("brightness {} is not finite", self.brightness));
        }
        if self.texture_cover.len() != self.classes as usize {
            return bad("texture_cover must have one entry per class".into());
        }
        if let Some(c) = self.texture_cover.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return bad(format!("texture_cover {c} outside [0, 1]"));
        }
        Ok(())
    }
}

/// Brightness for source scene `index` out of `count`: an evenly spaced
/// ladder over `[0, span]`, so a handful of scenes covers the whole
/// illumination range without gaps. A single scene sits at 0.
pub fn illumination_ladder(span: f64, index: usize, count: usize) -> f64 {
    if count <= 1 {
        0.0
    } else {
        span * index.min(count - 1) as f64 / (count - 1) as f64
    }
}

/// The Voronoi sites a spec's seed implies, as `(x, y, class)`.
pub(crate) fn voronoi_sites(spec: &SceneSpec) -> Vec<(usize, usize, u16)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.sites)
        .map(|i| {
            let x = rng.gen_range(0..spec.width);
            let y = rng.gen_range(0..spec.height);
            (x, y, (i % spec.classes as usize) as u16)
        })
        .collect()
}

fn nearest_site_class(sites: &[(usize, usize, u16)], x: usize, y: usize) -> u16 {
    let mut best = u64::MAX;
    let mut label = 0u16;
    for &(sx, sy, class) in sites {
        let dx = sx.abs_diff(x) as u64;
        let dy = sy.abs_diff(y) as u64;
        let d = dx * dx + dy * dy;
        // Strict comparison: ties stay with the earliest site.
        if d < best {
            best = d;
            label = class;
        }
    }
    label
}

/// Apply the per-band affine shift `clamp(gain * value + offset)` to every
/// sample, leaving dimensions untouched.
pub fn apply_shift(
    r: &MultibandRaster,
    gain: &[f64],
    offset: &[f64],
) -> Result<MultibandRaster, SynthError> {
    if gain.len() != r.bands() || offset.len() != r.bands() {
        return Err(SynthError::BadSpec(format!(
            "shift has {} gains / {} offsets for {} bands",
            gain.len(),
            offset.len(),
            r.bands()
        )));
    }
    if gain.iter().any(|&g| !(g > 0.0)) {
        return Err(SynthError::BadSpec("gains must be positive".into()));
    }
    let plane = r.width() * r.height();
    let samples = r
        .samples()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let band = i / plane;
            (gain[band] * v as f64 + offset[band]).clamp(0.0, 255.0) as f32
        })
        .collect();
    Ok(MultibandRaster::new(r.width(), r.height(), r.bands(), samples)?)
}

/// Generate the scene a spec describes: Voronoi label mask plus a raster of
/// class mean + sinusoidal texture + Gaussian noise, clamped to [0, 255],
/// with the spec's spectral shift applied last.
pub fn synth_scene(spec: &SceneSpec) -> Result<(MultibandRaster, LabelMask), SynthError> {
    spec.validate()?;
    let sites = voronoi_sites(spec);

    let labels: Vec<u16> = (0..spec.width * spec.height)
        .map(|p| nearest_site_class(&sites, p % spec.width, p / spec.width))
        .collect();
    let mask = LabelMask::new(spec.width, spec.height, spec.classes as usize, labels)?;
    let raster = synth_from_mask(spec, &mask)?;
    Ok((raster, mask))
}

/// Render imagery for an externally supplied label map using a spec's
/// appearance model (means, texture, noise, shift). Lets callers compose
/// layouts the Voronoi tessellation cannot produce — say, fine islands
/// planted inside coarse parcels — while keeping pixels consistent with
/// the labels.
pub fn synth_from_mask(
    spec: &SceneSpec,
    mask: &LabelMask,
) -> Result<MultibandRaster, SynthError> {
    spec.validate()?;
    if mask.width() != spec.width || mask.height() != spec.height {
        return Err(SynthError::BadSpec(format!(
            "mask is {}x{}, spec wants {}x{}",
            mask.width(),
            mask.height(),
            spec.width,
            spec.height
        )));
    }
    if mask.labels().iter().any(|&l| l != BACKGROUND && l >= spec.classes) {
        return Err(SynthError::BadSpec(
            "mask labels a class the spec does not define".into(),
        ));
    }

    // Noise runs on its own stream, band-major and row-major, so the
    // unshifted scene never depends on gain/offset.
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x6e6f_6973_655f_3031);
    let noise = Normal::new(0.0, spec.noise_std)
        .map_err(|e| SynthError::BadSpec(format!("noise_std: {e}")))?;
    let tau = std::f64::consts::TAU;
    let k = spec.classes as usize;
    // Each class textures as a sinusoidal stripe pattern with its own
    // direction (spread over half a turn, offset to sit mid-bin for an
    // 8-bin orientation histogram) and frequency, giving classes a
    // gradient-orientation signature that survives affine spectral shifts.
    let directions: Vec<(f64, f64)> = (0..k)
        .map(|c| {
            let theta =
                std::f64::consts::PI / 8.0 + std::f64::consts::PI * c as f64 / k as f64;
            (theta.cos(), theta.sin())
        })
        .collect();
    // Texture presence is gated by a low-frequency wave running along the
    // stripes (period 80 px), thresholded so that roughly `texture_cover`
    // of each class's area keeps its texture.
    let cover_freq = 1.0 / 80.0;
    let cover_gate: Vec<f64> = spec
        .texture_cover
        .iter()
        .map(|c| (2.0 * c - 1.0).clamp(-1.0, 1.0))
        .collect();
    let mut samples = Vec::with_capacity(spec.width * spec.height * spec.bands);
    for band in 0..spec.bands {
        for y in 0..spec.height {
            for x in 0..spec.width {
                // The noise stream advances on background pixels too, so
                // masking a region out never reshuffles its neighbors.
                let draw = rng.sample(noise);
                let label = mask.get(x, y);
                if label == BACKGROUND {
                    samples.push(0.0);
                    continue;
                }
                let class = label as usize;
                let freq = spec.texture_freq[class];
                let (dx, dy) = directions[class];
                let u = dx * x as f64 + dy * y as f64;
                let v = dx * y as f64 - dy * x as f64;
                let textured = spec.texture_cover[class] >= 1.0
                    || (tau * cover_freq * v + 1.7 * class as f64).sin() < cover_gate[class];
                let phase = 0.9 * (class as f64 + 1.0) + 0.35 * band as f64;
                let texture = if textured {
                    spec.texture_amp[class] * (tau * freq * u + phase).sin()
                } else {
                    0.0
                };
                let value =
                    spec.class_means[class][band] + spec.brightness + texture + draw;
                samples.push(value.clamp(0.0, 255.0) as f32);
            }
        }
    }
    let unshifted = MultibandRaster::new(spec.width, spec.height, spec.bands, samples)?;
    apply_shift(&unshifted, &spec.gain, &spec.offset)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_reproduces_the_scene() {
        let spec = SceneSpec::uniform(40, 32, 2, 3, 77);
        let (r1, m1) = synth_scene(&spec).unwrap();
        let (r2, m2) = synth_scene(&spec).unwrap();
        assert_eq!(r1.samples(), r2.samples());
        assert_eq!(m1.labels(), m2.labels());

        let other = SceneSpec { seed: 78, ..spec };
        let (r3, m3) = synth_scene(&other).unwrap();
        assert!(r1.samples() != r3.samples() || m1.labels() != m3.labels());
    }

    #[test]
    fn zero_noise_zero_texture_is_piecewise_class_means() {
        let mut spec = SceneSpec::uniform(33, 21, 3, 4, 5);
        spec.noise_std = 0.0;
        spec.texture_amp = vec![0.0; 4];
        let (r, m) = synth_scene(&spec).unwrap();
        for y in 0..21 {
            for x in 0..33 {
                let class = m.get(x, y) as usize;
                for band in 0..3 {
                    assert_eq!(
                        r.get(x, y, band),
                        spec.class_means[class][band] as f32,
                        "pixel ({x},{y}) band {band} class {class}"
                    );
                }
            }
        }
    }

    #[test]
    fn labels_match_nearest_site_oracle() {
        let spec = SceneSpec::uniform(48, 30, 1, 4, 21);
        let (_, m) = synth_scene(&spec).unwrap();
        let sites = voronoi_sites(&spec);
        for y in 0..30 {
            for x in 0..48 {
                // Independent nearest-site scan in f64.
                let mut best = f64::INFINITY;
                let mut label = 0u16;
                for &(sx, sy, class) in &sites {
                    let d = (sx as f64 - x as f64).powi(2) + (sy as f64 - y as f64).powi(2);
                    if d < best {
                        best = d;
                        label = class;
                    }
                }
                assert_eq!(m.get(x, y), label, "pixel ({x},{y})");
            }
        }
    }

    #[test]
    fn every_class_appears_when_sites_cover_them() {
        let spec = SceneSpec::uniform(64, 64, 1, 5, 3);
        let (_, m) = synth_scene(&spec).unwrap();
        let mut seen = vec![false; 5];
        for &l in m.labels() {
            assert!((l as usize) < 5);
            seen[l as usize] = true;
        }
        assert!(seen.iter().all(|&s| s), "classes seen: {seen:?}");
    }

    #[test]
    fn rendering_the_voronoi_mask_reproduces_the_scene() {
        let spec = SceneSpec::uniform(40, 26, 2, 3, 99);
        let (r, m) = synth_scene(&spec).unwrap();
        let rerendered = synth_from_mask(&spec, &m).unwrap();
        assert_eq!(r.samples(), rerendered.samples());

        // An edited mask renders those labels, leaves background black, and
        // keeps every untouched pixel bit-identical (independent noise
        // stream per pixel).
        let mut labels = m.labels().to_vec();
        labels[0] = BACKGROUND;
        labels[41] = 2;
        let edited = LabelMask::new(40, 26, 3, labels).unwrap();
        let r2 = synth_from_mask(&spec, &edited).unwrap();
        assert_eq!(r2.get(0, 0, 0), 0.0);
        assert_eq!(r2.get(0, 0, 1), 0.0);
        for y in 0..26 {
            for x in 0..40 {
                if (x, y) == (0, 0) || (x, y) == (1, 1) {
                    continue;
                }
                for band in 0..2 {
                    assert_eq!(r2.get(x, y, band), r.get(x, y, band), "pixel ({x},{y})");
                }
            }
        }

        let narrow = LabelMask::filled(8, 8, 3, 0).unwrap();
        assert!(matches!(synth_from_mask(&spec, &narrow), Err(SynthError::BadSpec(_))));
        let alien = LabelMask::filled(40, 26, 9, 7).unwrap();
        assert!(matches!(synth_from_mask(&spec, &alien), Err(SynthError::BadSpec(_))));
    }

    #[test]
    fn shift_equals_apply_and_compare_oracle() {
        let base = SceneSpec::uniform(36, 28, 3, 4, 11);
        let mut shifted_spec = base.clone();
        shifted_spec.gain = vec![1.3, 0.9, 1.1];
        shifted_spec.offset = vec![12.0, -5.0, 3.0];

        let (unshifted, m1) = synth_scene(&base).unwrap();
        let (shifted, m2) = synth_scene(&shifted_spec).unwrap();
        assert_eq!(m1.labels(), m2.labels());

        let oracle = apply_shift(&unshifted, &shifted_spec.gain, &shifted_spec.offset).unwrap();
        assert_eq!(oracle.samples(), shifted.samples());

        // Spot-check the formula directly at a few coordinates.
        for &(x, y, b) in &[(0usize, 0usize, 0usize), (17, 9, 1), (35, 27, 2)] {
            let expect = (shifted_spec.gain[b] * unshifted.get(x, y, b) as f64
                + shifted_spec.offset[b])
                .clamp(0.0, 255.0) as f32;
            assert_eq!(shifted.get(x, y, b), expect);
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let ok = SceneSpec::uniform(16, 16, 1, 2, 0);
        assert!(synth_scene(&ok).is_ok());

        let one_class = SceneSpec { classes: 1, ..ok.clone() };
        assert!(matches!(synth_scene(&one_class), Err(SynthError::BadSpec(_))));

        let mut zero_gain = ok.clone();
        zero_gain.gain = vec![0.0];
        assert!(matches!(synth_scene(&zero_gain), Err(SynthError::BadSpec(_))));

        let mut too_few_sites = ok.clone();
        too_few_sites.sites = 1;
        assert!(matches!(synth_scene(&too_few_sites), Err(SynthError::BadSpec(_))));

        let mut bad_means = ok.clone();
        bad_means.class_means = vec![vec![1.0]];
        assert!(matches!(synth_scene(&bad_means), Err(SynthError::BadSpec(_))));

        let mut bad_amp = ok.clone();
        bad_amp.texture_amp = vec![16.0];
        assert!(matches!(synth_scene(&bad_amp), Err(SynthError::BadSpec(_))));

        let r = MultibandRaster::filled(4, 4, 2, 10.0).unwrap();
        assert!(matches!(apply_shift(&r, &[1.0], &[0.0, 0.0]), Err(SynthError::BadSpec(_))));
    }
}
