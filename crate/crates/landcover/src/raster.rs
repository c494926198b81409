//! Multiband raster and label-mask data model with file I/O, cropping, and
//! bilinear resizing.
//!
//! Two purpose-built binary formats keep round-trips bit-exact without pulling
//! in a geospatial stack:
//!
//! - `MBR1 <width> <height> <bands>\n` followed by little-endian `f32` samples
//!   in band-major, row-major order.
//! - `MSK1 <width> <height> <num_classes>\n` followed by one little-endian
//!   `u16` per pixel, row-major; `0xFFFF` is the background sentinel.
//!
//! Intensities are stored as real numbers with 8-bit semantics (values in
//! `[0, 255]`) so interpolation and normalization lose nothing.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

/// Label value marking unannotated pixels; excluded from training and scoring.
pub const BACKGROUND: u16 = 0xFFFF;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("truncated payload: expected {expected} values, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("band count must be at least 1")]
    ZeroBands,
    #[error("dimension {name} must be at least 1")]
    ZeroDimension { name: &'static str },
    #[error("sample buffer length {found} does not match {expected} (width*height*bands)")]
    SampleLength { expected: usize, found: usize },
    #[error("label buffer length {found} does not match {expected} (width*height)")]
    LabelLength { expected: usize, found: usize },
    #[error("label {label} at pixel ({x}, {y}) exceeds class count {classes}")]
    LabelOutOfRange { label: u16, x: usize, y: usize, classes: usize },
    #[error("window ({x}, {y}, {w}, {h}) exceeds raster bounds {width}x{height}")]
    WindowOutOfBounds { x: usize, y: usize, w: usize, h: usize, width: usize, height: usize },
    #[error("legend colors must be pairwise distinct and not black (black marks background)")]
    LegendColors,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// B-band 2-D image. Samples are stored band-major, row-major within a band,
/// matching the on-disk layout: `samples[band * w * h + y * w + x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultibandRaster {
    width: usize,
    height: usize,
    bands: usize,
    samples: Vec<f32>,
}

impl MultibandRaster {
    pub fn new(
        width: usize,
        height: usize,
        bands: usize,
        samples: Vec<f32>,
    ) -> Result<Self, RasterError> {
        if width == 0 {
            return Err(RasterError::ZeroDimension { name: "width" });
        }
        if height == 0 {
            return Err(RasterError::ZeroDimension { name: "height" });
        }
        if bands == 0 {
            return Err(RasterError::ZeroBands);
        }
        let expected = width * height * bands;
        if samples.len() != expected {
            return Err(RasterError::SampleLength { expected, found: samples.len() });
        }
        Ok(Self { width, height, bands, samples })
    }

    /// Raster with every sample set to `value`.
    pub fn filled(width: usize, height: usize, bands: usize, value: f32) -> Result<Self, RasterError> {
        Self::new(width, height, bands, vec![value; width * height * bands])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, band: usize) -> f32 {
        debug_assert!(x < self.width && y < self.height && band < self.bands);
        self.samples[band * self.width * self.height + y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, band: usize, value: f32) {
        debug_assert!(x < self.width && y < self.height && band < self.bands);
        self.samples[band * self.width * self.height + y * self.width + x] = value;
    }

    /// Row-major slice of one band.
    pub fn band(&self, band: usize) -> &[f32] {
        let plane = self.width * self.height;
        &self.samples[band * plane..(band + 1) * plane]
    }

    /// Mean over bands at one pixel.
    pub fn band_mean(&self, x: usize, y: usize) -> f64 {
        let mut sum = 0.0;
        for b in 0..self.bands {
            sum += self.get(x, y, b) as f64;
        }
        sum / self.bands as f64
    }
}

/// Per-pixel class identifiers in `{0..K-1}` with [`BACKGROUND`] for
/// unannotated pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    width: usize,
    height: usize,
    num_classes: usize,
    labels: Vec<u16>,
}

impl LabelMask {
    pub fn new(
        width: usize,
        height: usize,
        num_classes: usize,
        labels: Vec<u16>,
    ) -> Result<Self, RasterError> {
        if width == 0 {
            return Err(RasterError::ZeroDimension { name: "width" });
        }
        if height == 0 {
            return Err(RasterError::ZeroDimension { name: "height" });
        }
        let expected = width * height;
        if labels.len() != expected {
            return Err(RasterError::LabelLength { expected, found: labels.len() });
        }
        for (i, &label) in labels.iter().enumerate() {
            if label != BACKGROUND && label as usize >= num_classes {
                return Err(RasterError::LabelOutOfRange {
                    label,
                    x: i % width,
                    y: i / width,
                    classes: num_classes,
                });
            }
        }
        Ok(Self { width, height, num_classes, labels })
    }

    /// Mask with every pixel set to `label`.
    pub fn filled(width: usize, height: usize, num_classes: usize, label: u16) -> Result<Self, RasterError> {
        Self::new(width, height, num_classes, vec![label; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        debug_assert!(x < self.width && y < self.height);
        self.labels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, label: u16) {
        debug_assert!(x < self.width && y < self.height);
        self.labels[y * self.width + x] = label;
    }
}

/// Ordered association of class id to display color and name. Class ids are
/// the entry positions; the background sentinel always renders black.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorLegend {
    entries: Vec<(String, [u8; 3])>,
}

impl ColorLegend {
    pub fn new(entries: Vec<(String, [u8; 3])>) -> Result<Self, RasterError> {
        for (i, (_, c)) in entries.iter().enumerate() {
            if *c == [0, 0, 0] {
                return Err(RasterError::LegendColors);
            }
            if entries[..i].iter().any(|(_, other)| other == c) {
                return Err(RasterError::LegendColors);
            }
        }
        Ok(Self { entries })
    }

    /// Legend with auto-generated names (`class0`, `class1`, ...) and distinct
    /// colors from a fixed palette, extended by hue stepping for large K.
    pub fn generate(num_classes: usize) -> Self {
        const PALETTE: [[u8; 3]; 10] = [
            [230, 25, 75],
            [60, 180, 75],
            [0, 255, 255],
            [255, 225, 25],
            [0, 90, 255],
            [245, 130, 48],
            [145, 30, 180],
            [250, 190, 190],
            [128, 128, 0],
            [0, 128, 128],
        ];
        let entries = (0..num_classes)
            .map(|i| {
                let color = if i < PALETTE.len() {
                    PALETTE[i]
                } else {
                    // Deterministic hue walk for anything past the palette.
                    let h = (i * 47) % 360;
                    hsv_to_rgb(h as f64, 0.85, 0.9)
                };
                (format!("class{i}"), color)
            })
            .collect();
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn name(&self, class: usize) -> Option<&str> {
        self.entries.get(class).map(|(n, _)| n.as_str())
    }

    pub fn color(&self, class: usize) -> Option<[u8; 3]> {
        self.entries.get(class).map(|(_, c)| *c)
    }
}

impl fmt::Display for ColorLegend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (name, c)) in self.entries.iter().enumerate() {
            writeln!(f, "{i}: {name} #{:02x}{:02x}{:02x}", c[0], c[1], c[2])?;
        }
        Ok(())
    }
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let c = v * s;
    let x = c * (1.0 - ((h / 60.0) % 2.0 - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match (h / 60.0) as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    [
        ((r + m) * 255.0).round() as u8,
        ((g + m) * 255.0).round() as u8,
        ((b + m) * 255.0).round() as u8,
    ]
}

fn parse_header(line: &str, magic: &str) -> Result<(usize, usize, usize), RasterError> {
    let mut parts = line.split_whitespace();
    let found_magic = parts.next().unwrap_or("");
    if found_magic != magic {
        return Err(RasterError::MalformedHeader(format!(
            "expected magic {magic}, found {found_magic:?}"
        )));
    }
    let mut field = |name: &str| -> Result<usize, RasterError> {
        parts
            .next()
            .ok_or_else(|| RasterError::MalformedHeader(format!("missing field {name}")))?
            .parse::<usize>()
            .map_err(|_| RasterError::MalformedHeader(format!("field {name} is not an integer")))
    };
    let a = field("width")?;
    let b = field("height")?;
    let c = field("bands/num_classes")?;
    if parts.next().is_some() {
        return Err(RasterError::MalformedHeader("trailing fields in header".into()));
    }
    Ok((a, b, c))
}

fn read_header_line<R: Read>(reader: &mut R) -> Result<String, RasterError> {
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        let n = reader.read(&mut byte)?;
        if n == 0 {
            return Err(RasterError::MalformedHeader("missing newline after header".into()));
        }
        if byte[0] == b'\n' {
            break;
        }
        if line.len() > 128 {
            return Err(RasterError::MalformedHeader("header line too long".into()));
        }
        line.push(byte[0]);
    }
    String::from_utf8(line)
        .map_err(|_| RasterError::MalformedHeader("header is not valid UTF-8".into()))
}

/// Read an `MBR1` raster file.
pub fn read_raster<P: AsRef<Path>>(path: P) -> Result<MultibandRaster, RasterError> {
    let mut reader = BufReader::new(File::open(path)?);
    let header = read_header_line(&mut reader)?;
    let (width, height, bands) = parse_header(&header, "MBR1")?;
    if bands == 0 {
        return Err(RasterError::ZeroBands);
    }
    if width == 0 {
        return Err(RasterError::ZeroDimension { name: "width" });
    }
    if height == 0 {
        return Err(RasterError::ZeroDimension { name: "height" });
    }
    let expected = width * height * bands;
    let mut payload = Vec::new();
    reader.read_to_end(&mut payload)?;
    if payload.len() != expected * 4 {
        return Err(RasterError::TruncatedPayload { expected, found: payload.len() / 4 });
    }
    let samples = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    MultibandRaster::new(width, height, bands, samples)
}

/// Write an `MBR1` raster file readable back by [`read_raster`] into an equal
/// raster, bit for bit.
pub fn write_raster<P: AsRef<Path>>(r: &MultibandRaster, path: P) -> Result<(), RasterError> {
    let mut writer = BufWriter::new(File::create(path)?);
    write!(writer, "MBR1 {} {} {}\n", r.width, r.height, r.bands)?;
    for s in &r.samples {
        writer.write_all(&s.to_le_bytes())?;
    }
    writer.flush()?;
    Ok(())
}

/// Read an `MSK1` label-mask file.
pub fn read_mask<P: AsRef<Path>>(path: P) -> Result<LabelMask, RasterError> {
    let mut reader = BufReader::new(File::open(path)?);
    let header = read_header_line(&mut reader)?;
    let (width, height, num_classes) = parse_header(&header, "MSK1")?;
    if width == 0 {
        return Err(RasterError::ZeroDimension { name: "width" });
    }
    if height == 0 {
        return Err(RasterError::ZeroDimension { name: "height" });
    }
    let expected = width * height;
    let mut payload = Vec::new();
    reader.read_to_end(&mut payload)?;
    if payload.len() != expected * 2 {
        return Err(RasterError::TruncatedPayload { expected, found: payload.len() / 2 });
    }
    let labels = payload
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]))
        .collect();
    LabelMask::new(width, height, num_classes, labels)
}

/// Write an `MSK1` label-mask file.
pub fn write_mask<P: AsRef<Path>>(m: &LabelMask, path: P) -> Result<(), RasterError> {
    let mut writer = BufWriter::new(File::create(path)?);
    write!(writer, "MSK1 {} {} {}\n", m.width, m.height, m.num_classes)?;
    for l in &m.labels {
        writer.write_all(&l.to_le_bytes())?;
    }
    writer.flush()?;
    Ok(())
}

/// Render a label mask through a legend into an 8-bit RGB PNG. Background and
/// any class id past the legend render black.
pub fn export_mask_png<P: AsRef<Path>>(
    m: &LabelMask,
    legend: &ColorLegend,
    path: P,
) -> Result<(), RasterError> {
    let mut img = image::RgbImage::new(m.width as u32, m.height as u32);
    for y in 0..m.height {
        for x in 0..m.width {
            let label = m.get(x, y);
            let color = if label == BACKGROUND {
                [0, 0, 0]
            } else {
                legend.color(label as usize).unwrap_or([0, 0, 0])
            };
            img.put_pixel(x as u32, y as u32, image::Rgb(color));
        }
    }
    img.save(path).map_err(|e| RasterError::Io(std::io::Error::other(e)))?;
    Ok(())
}

/// Extract the window at `(x, y)` of size `w`x`h`. Errors if the window is not
/// fully inside the raster; see [`crop_clamped`] for the shifting variant.
pub fn crop(
    r: &MultibandRaster,
    x: usize,
    y: usize,
    w: usize,
    h: usize,
) -> Result<MultibandRaster, RasterError> {
    if w == 0 {
        return Err(RasterError::ZeroDimension { name: "width" });
    }
    if h == 0 {
        return Err(RasterError::ZeroDimension { name: "height" });
    }
    if x + w > r.width || y + h > r.height {
        return Err(RasterError::WindowOutOfBounds {
            x,
            y,
            w,
            h,
            width: r.width,
            height: r.height,
        });
    }
    let mut samples = Vec::with_capacity(w * h * r.bands);
    for band in 0..r.bands {
        for j in 0..h {
            let row = band * r.width * r.height + (y + j) * r.width + x;
            samples.extend_from_slice(&r.samples[row..row + w]);
        }
    }
    MultibandRaster::new(w, h, r.bands, samples)
}

/// Like [`crop`], but shifts the window inward so it fits. A window larger
/// than the raster is truncated to the full extent of that axis.
pub fn crop_clamped(
    r: &MultibandRaster,
    x: usize,
    y: usize,
    w: usize,
    h: usize,
) -> Result<MultibandRaster, RasterError> {
    let w = w.min(r.width);
    let h = h.min(r.height);
    let x = x.min(r.width - w);
    let y = y.min(r.height - h);
    crop(r, x, y, w, h)
}

/// Per-band bilinear resize with pixel-center alignment and clamp-to-edge.
/// Output samples never leave the `[min, max]` range of their input band;
/// resizing to the identical dimensions reproduces the input exactly.
pub fn resize_bilinear(
    r: &MultibandRaster,
    w: usize,
    h: usize,
) -> Result<MultibandRaster, RasterError> {
    if w == 0 {
        return Err(RasterError::ZeroDimension { name: "width" });
    }
    if h == 0 {
        return Err(RasterError::ZeroDimension { name: "height" });
    }
    let sx = r.width as f64 / w as f64;
    let sy = r.height as f64 / h as f64;
    let mut samples = Vec::with_capacity(w * h * r.bands);
    for band in 0..r.bands {
        let plane = r.band(band);
        for j in 0..h {
            let src_y = ((j as f64 + 0.5) * sy - 0.5).clamp(0.0, (r.height - 1) as f64);
            let y0 = src_y.floor() as usize;
            let y1 = (y0 + 1).min(r.height - 1);
            let fy = src_y - y0 as f64;
            for i in 0..w {
                let src_x = ((i as f64 + 0.5) * sx - 0.5).clamp(0.0, (r.width - 1) as f64);
                let x0 = src_x.floor() as usize;
                let x1 = (x0 + 1).min(r.width - 1);
                let fx = src_x - x0 as f64;
                let top = plane[y0 * r.width + x0] as f64 * (1.0 - fx)
                    + plane[y0 * r.width + x1] as f64 * fx;
                let bottom = plane[y1 * r.width + x0] as f64 * (1.0 - fx)
                    + plane[y1 * r.width + x1] as f64 * fx;
                samples.push((top * (1.0 - fy) + bottom * fy) as f32);
            }
        }
    }
    MultibandRaster::new(w, h, r.bands, samples)
}
