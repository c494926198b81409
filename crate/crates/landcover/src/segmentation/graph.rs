//! Graph-based initial regions.
//!
//! Pixels are nodes; edges connect 8-neighbors and weigh the Euclidean
//! distance between band vectors. Walking the edges in ascending weight
//! order, two components merge when the connecting edge is no heavier than
//! `min(Int(C1) + k/|C1|, Int(C2) + k/|C2|)`, where `Int(C)` is the largest
//! edge previously absorbed into `C`. Small components are then absorbed
//! across their lightest boundary edges.

use super::{relabel_dense_4connected, Segmentation};
use crate::raster::MultibandRaster;

/// Gaussian blur with a fixed radius-3 (7-tap) separable kernel and
/// clamp-to-edge borders. `sigma <= 0` returns the raster unchanged.
pub fn gaussian_smooth(r: &MultibandRaster, sigma: f64) -> MultibandRaster {
    if sigma <= 0.0 {
        return r.clone();
    }
    const RADIUS: isize = 3;
    let mut kernel = [0.0f64; 2 * RADIUS as usize + 1];
    for (i, k) in kernel.iter_mut().enumerate() {
        let d = i as f64 - RADIUS as f64;
        *k = (-d * d / (2.0 * sigma * sigma)).exp();
    }
    let norm: f64 = kernel.iter().sum();
    for k in kernel.iter_mut() {
        *k /= norm;
    }

    let (w, h) = (r.width(), r.height());
    let mut out = Vec::with_capacity(w * h * r.bands());
    let mut horizontal = vec![0.0f64; w * h];
    for band in 0..r.bands() {
        let plane = r.band(band);
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for (i, &k) in kernel.iter().enumerate() {
                    let sx = (x as isize + i as isize - RADIUS).clamp(0, w as isize - 1);
                    acc += k * plane[y * w + sx as usize] as f64;
                }
                horizontal[y * w + x] = acc;
            }
        }
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for (i, &k) in kernel.iter().enumerate() {
                    let sy = (y as isize + i as isize - RADIUS).clamp(0, h as isize - 1);
                    acc += k * horizontal[sy as usize * w + x];
                }
                out.push(acc as f32);
            }
        }
    }
    // Band-major assembly above matches the raster layout.
    MultibandRaster::new(w, h, r.bands(), out).expect("same dimensions as input")
}

/// Euclidean distance between the band vectors of two pixels.
fn pixel_distance(r: &MultibandRaster, a: usize, b: usize) -> f64 {
    let plane = r.width() * r.height();
    let mut sum = 0.0f64;
    for band in 0..r.bands() {
        let d = r.samples()[band * plane + a] as f64 - r.samples()[band * plane + b] as f64;
        sum += d * d;
    }
    sum.sqrt()
}

/// All 8-connectivity edges in a fixed deterministic order: for each pixel
/// in row-major order, its east, south, south-east and south-west links.
fn eight_connected_edges(r: &MultibandRaster) -> Vec<(f64, u32, u32)> {
    let (w, h) = (r.width(), r.height());
    let mut edges = Vec::with_capacity(4 * w * h);
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            let mut link = |q: usize| edges.push((pixel_distance(r, p, q), p as u32, q as u32));
            if x + 1 < w {
                link(p + 1);
            }
            if y + 1 < h {
                link(p + w);
                if x + 1 < w {
                    link(p + w + 1);
                }
                if x > 0 {
                    link(p + w - 1);
                }
            }
        }
    }
    edges
}

struct Dsu {
    parent: Vec<u32>,
    size: Vec<u32>,
    /// Largest edge weight absorbed into the component at its root.
    internal: Vec<f64>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n as u32).collect(), size: vec![1; n], internal: vec![0.0; n] }
    }

    fn find(&mut self, mut v: u32) -> u32 {
        while self.parent[v as usize] != v {
            let grand = self.parent[self.parent[v as usize] as usize];
            self.parent[v as usize] = grand;
            v = grand;
        }
        v
    }

    fn union(&mut self, a: u32, b: u32) -> u32 {
        let (big, small) = if self.size[a as usize] >= self.size[b as usize] {
            (a, b)
        } else {
            (b, a)
        };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
        big
    }
}

/// The graph-merge criterion on the raw raster (no smoothing), normalized
/// to dense 4-connected regions. `k` trades boundary fidelity for region
/// size: larger `k` tolerates heavier internal edges.
pub fn graph_based_regions(r: &MultibandRaster, k: f64) -> Segmentation {
    let mut edges = eight_connected_edges(r);
    edges.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite weights"));

    let n = r.width() * r.height();
    let mut dsu = Dsu::new(n);
    for &(weight, a, b) in &edges {
        let (ra, rb) = (dsu.find(a), dsu.find(b));
        if ra == rb {
            continue;
        }
        let reach_a = dsu.internal[ra as usize] + k / dsu.size[ra as usize] as f64;
        let reach_b = dsu.internal[rb as usize] + k / dsu.size[rb as usize] as f64;
        if weight <= reach_a.min(reach_b) {
            let root = dsu.union(ra, rb);
            dsu.internal[root as usize] = weight;
        }
    }

    let roots: Vec<u32> = (0..n as u32).map(|p| dsu.find(p)).collect();
    let (ids, count) = relabel_dense_4connected(r.width(), r.height(), &roots);
    Segmentation::from_normalized(r.width(), r.height(), ids, count)
}

/// Merge every region smaller than `min_region` into a neighbor, walking
/// 4-connected boundary edges in ascending weight order so each small
/// region joins across its most similar edge first. Edge weights come from
/// `r` (the smoothed raster during initial segmentation).
pub(crate) fn absorb_small_regions(
    r: &MultibandRaster,
    seg: &Segmentation,
    min_region: usize,
) -> Segmentation {
    if min_region <= 1 || seg.region_count() == 1 {
        return seg.clone();
    }
    let (w, h) = (seg.width(), seg.height());
    let ids = seg.ids();

    // Boundary edges only, in the deterministic east-then-south pixel order.
    let mut edges: Vec<(f64, u32, u32)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            if x + 1 < w && ids[p] != ids[p + 1] {
                edges.push((pixel_distance(r, p, p + 1), ids[p], ids[p + 1]));
            }
            if y + 1 < h && ids[p] != ids[p + w] {
                edges.push((pixel_distance(r, p, p + w), ids[p], ids[p + w]));
            }
        }
    }
    edges.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite weights"));

    let mut dsu = Dsu::new(seg.region_count());
    for (region, &size) in seg.region_sizes().iter().enumerate() {
        dsu.size[region] = size as u32;
    }
    for &(_, a, b) in &edges {
        let (ra, rb) = (dsu.find(a), dsu.find(b));
        if ra != rb
            && (dsu.size[ra as usize] < min_region as u32
                || dsu.size[rb as usize] < min_region as u32)
        {
            dsu.union(ra, rb);
        }
    }

    let merged: Vec<u32> = ids.iter().map(|&id| dsu.find(id)).collect();
    let (normalized, count) = relabel_dense_4connected(w, h, &merged);
    Segmentation::from_normalized(w, h, normalized, count)
}
