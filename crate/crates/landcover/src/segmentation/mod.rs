//! Hierarchical image segmentation.
//!
//! Stage one builds initial regions with a graph-based criterion: pixels are
//! nodes of the 8-connected grid, edges carry the Euclidean distance between
//! band vectors, and two components merge while the connecting edge is no
//! heavier than the internal variation of either side plus a size-dependent
//! slack. Stage two greedily merges adjacent regions by a weighted
//! color/texture/size/fill similarity until the mean region size reaches a
//! configured fraction of the image.
//!
//! Every public operation returns a partition whose regions are 4-connected
//! and whose ids are dense, numbered by first appearance in row-major order.

mod graph;
mod merge;

pub use graph::{gaussian_smooth, graph_based_regions};
pub use merge::{hierarchical_merge, region_stats, similarity, RegionStats};

use std::io::{Read, Write};
use std::path::Path;

use crate::raster::MultibandRaster;

/// Standard deviation of the Gaussian pre-smoothing applied before graph
/// construction.
pub const SMOOTH_SIGMA: f64 = 0.8;

#[derive(Debug, thiserror::Error)]
pub enum SegError {
    #[error("segmentation is empty")]
    EmptySegmentation,
    #[error("id map length {found} does not match {width}x{height}")]
    LengthMismatch { width: usize, height: usize, found: usize },
    #[error("region ids are not dense: id {missing} has no pixels")]
    NonDenseIds { missing: u32 },
    #[error("region {id} is not 4-connected")]
    DisconnectedRegion { id: u32 },
    #[error("segmentation dimensions {sw}x{sh} do not match raster {rw}x{rh}")]
    DimensionMismatch { sw: usize, sh: usize, rw: usize, rh: usize },
    #[error("invalid segmentation parameter: {0}")]
    BadConfig(&'static str),
    #[error("malformed segmentation header")]
    MalformedHeader,
    #[error("segmentation payload truncated: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Knobs of both segmentation stages.
#[derive(Debug, Clone, PartialEq)]
pub struct SegConfig {
    /// Scale parameter of the graph-based criterion; larger favors larger
    /// initial regions.
    pub k_scale: f64,
    /// Initial regions smaller than this many pixels are absorbed into
    /// their most-similar-edge neighbor.
    pub min_region: usize,
    /// Merging stops once mean region size reaches this fraction of the
    /// image area; 0 runs the hierarchy down to a single region.
    pub merge_stop: f64,
    pub w_color: f64,
    pub w_texture: f64,
    pub w_size: f64,
    pub w_fill: f64,
}

impl Default for SegConfig {
    fn default() -> Self {
        SegConfig {
            k_scale: 400.0,
            min_region: 50,
            merge_stop: 0.01,
            w_color: 1.0,
            w_texture: 1.0,
            w_size: 1.0,
            w_fill: 1.0,
        }
    }
}

impl SegConfig {
    pub fn validate(&self) -> Result<(), SegError> {
        if !(self.k_scale.is_finite() && self.k_scale > 0.0) {
            return Err(SegError::BadConfig("k_scale must be positive"));
        }
        if !(0.0..1.0).contains(&self.merge_stop) {
            return Err(SegError::BadConfig("merge_stop must lie in [0, 1)"));
        }
        let ws = [self.w_color, self.w_texture, self.w_size, self.w_fill];
        if ws.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(SegError::BadConfig("similarity weights must be nonnegative"));
        }
        if ws.iter().sum::<f64>() == 0.0 {
            return Err(SegError::BadConfig("at least one similarity weight must be positive"));
        }
        Ok(())
    }
}

/// A partition of the pixel grid into 4-connected regions with dense ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    width: usize,
    height: usize,
    region_ids: Vec<u32>,
    region_count: usize,
}

impl Segmentation {
    /// Validating constructor: the id map must cover `0..region_count`
    /// densely and every region must be 4-connected.
    pub fn new(width: usize, height: usize, region_ids: Vec<u32>) -> Result<Self, SegError> {
        if width == 0 || height == 0 || region_ids.is_empty() {
            return Err(SegError::EmptySegmentation);
        }
        if region_ids.len() != width * height {
            return Err(SegError::LengthMismatch { width, height, found: region_ids.len() });
        }
        let max = *region_ids.iter().max().unwrap() as usize;
        let mut present = vec![false; max + 1];
        for &id in &region_ids {
            present[id as usize] = true;
        }
        if let Some(missing) = present.iter().position(|&p| !p) {
            return Err(SegError::NonDenseIds { missing: missing as u32 });
        }

        // Connectivity: a flood fill from each region's first pixel must
        // reach every pixel of that region.
        let mut seen = vec![false; region_ids.len()];
        let mut component_of = vec![usize::MAX; max + 1];
        for start in 0..region_ids.len() {
            if seen[start] {
                continue;
            }
            let id = region_ids[start] as usize;
            if component_of[id] != usize::MAX {
                return Err(SegError::DisconnectedRegion { id: id as u32 });
            }
            component_of[id] = start;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(p) = stack.pop() {
                let (x, y) = (p % width, p / width);
                let mut push = |q: usize| {
                    if !seen[q] && region_ids[q] == region_ids[start] {
                        seen[q] = true;
                        stack.push(q);
                    }
                };
                if x > 0 {
                    push(p - 1);
                }
                if x + 1 < width {
                    push(p + 1);
                }
                if y > 0 {
                    push(p - width);
                }
                if y + 1 < height {
                    push(p + width);
                }
            }
        }
        Ok(Segmentation { width, height, region_ids, region_count: max + 1 })
    }

    /// Internal constructor for maps already normalized by
    /// [`relabel_dense_4connected`]; skips re-validation.
    pub(crate) fn from_normalized(
        width: usize,
        height: usize,
        region_ids: Vec<u32>,
        region_count: usize,
    ) -> Self {
        Segmentation { width, height, region_ids, region_count }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn region_count(&self) -> usize {
        self.region_count
    }

    /// Per-pixel region ids in row-major order.
    pub fn ids(&self) -> &[u32] {
        &self.region_ids
    }

    pub fn id_at(&self, x: usize, y: usize) -> u32 {
        assert!(x < self.width && y < self.height, "pixel out of bounds");
        self.region_ids[y * self.width + x]
    }

    /// Pixel count per region.
    pub fn region_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.region_count];
        for &id in &self.region_ids {
            sizes[id as usize] += 1;
        }
        sizes
    }
}

/// Split an arbitrary label map into its 4-connected components and assign
/// dense ids by first appearance in row-major order. This is the canonical
/// form every segmentation operation returns.
pub(crate) fn relabel_dense_4connected(
    width: usize,
    height: usize,
    labels: &[u32],
) -> (Vec<u32>, usize) {
    let mut out = vec![u32::MAX; labels.len()];
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..labels.len() {
        if out[start] != u32::MAX {
            continue;
        }
        let id = next;
        next += 1;
        out[start] = id;
        stack.push(start);
        while let Some(p) = stack.pop() {
            let (x, y) = (p % width, p / width);
            let mut visit = |q: usize| {
                if out[q] == u32::MAX && labels[q] == labels[start] {
                    out[q] = id;
                    stack.push(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < width {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - width);
            }
            if y + 1 < height {
                visit(p + width);
            }
        }
    }
    (out, next as usize)
}

/// Graph-based initial regions: Gaussian smoothing, the merge criterion on
/// the 8-connected grid, absorption of regions below `min_region`, then
/// normalization to dense 4-connected form.
pub fn initial_segmentation(
    r: &MultibandRaster,
    cfg: &SegConfig,
) -> Result<Segmentation, SegError> {
    cfg.validate()?;
    let smoothed = gaussian_smooth(r, SMOOTH_SIGMA);
    let coarse = graph_based_regions(&smoothed, cfg.k_scale);
    let (ids, count) =
        relabel_dense_4connected(r.width(), r.height(), coarse.ids());
    let normalized = Segmentation::from_normalized(r.width(), r.height(), ids, count);
    Ok(graph::absorb_small_regions(&smoothed, &normalized, cfg.min_region))
}

/// Full segmentation: initial regions then hierarchical merging.
pub fn segment(r: &MultibandRaster, cfg: &SegConfig) -> Result<Segmentation, SegError> {
    let initial = initial_segmentation(r, cfg)?;
    hierarchical_merge(r, &initial, cfg)
}

/// Serialize as `SEG1 <width> <height> <regions>` followed by row-major
/// little-endian u32 region ids.
pub fn write_segmentation(s: &Segmentation, path: &Path) -> Result<(), SegError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "SEG1 {} {} {}", s.width, s.height, s.region_count)?;
    for &id in &s.region_ids {
        out.write_all(&id.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Inverse of [`write_segmentation`]; validates all partition invariants.
pub fn read_segmentation(path: &Path) -> Result<Segmentation, SegError> {
    let mut data = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut data)?;
    let newline = data
        .iter()
        .position(|&b| b == b'\n')
        .ok_or(SegError::MalformedHeader)?;
    let header = std::str::from_utf8(&data[..newline]).map_err(|_| SegError::MalformedHeader)?;
    let mut it = header.split_ascii_whitespace();
    if it.next() != Some("SEG1") {
        return Err(SegError::MalformedHeader);
    }
    let mut dim = || -> Result<usize, SegError> {
        it.next()
            .and_then(|t| t.parse().ok())
            .ok_or(SegError::MalformedHeader)
    };
    let (width, height, declared) = (dim()?, dim()?, dim()?);
    let payload = &data[newline + 1..];
    let expected = width * height * 4;
    if payload.len() != expected {
        return Err(SegError::TruncatedPayload { expected, found: payload.len() });
    }
    let ids: Vec<u32> = payload
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let seg = Segmentation::new(width, height, ids)?;
    if seg.region_count != declared {
        return Err(SegError::MalformedHeader);
    }
    Ok(seg)
}

/// PNG visualization: band-0 grayscale with region boundaries in red.
pub fn export_boundary_overlay(
    r: &MultibandRaster,
    s: &Segmentation,
    path: &Path,
) -> Result<(), SegError> {
    if r.width() != s.width || r.height() != s.height {
        return Err(SegError::DimensionMismatch {
            sw: s.width,
            sh: s.height,
            rw: r.width(),
            rh: r.height(),
        });
    }
    let (w, h) = (s.width, s.height);
    let mut img = image::RgbImage::new(w as u32, h as u32);
    for y in 0..h {
        for x in 0..w {
            let boundary = (x + 1 < w && s.id_at(x + 1, y) != s.id_at(x, y))
                || (y + 1 < h && s.id_at(x, y + 1) != s.id_at(x, y));
            let px = if boundary {
                image::Rgb([220u8, 30, 30])
            } else {
                let g = r.get(x, y, 0).clamp(0.0, 255.0) as u8;
                image::Rgb([g, g, g])
            };
            img.put_pixel(x as u32, y as u32, px);
        }
    }
    img.save(path)
        .map_err(|e| SegError::Io(std::io::Error::other(e)))?;
    Ok(())
}
