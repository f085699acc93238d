//! Attribution heatmaps: binary PGM (P5) input and binary PPM (P6) output.
//!
//! Positive attributions tint a pixel green, negative ones red, with
//! intensity `|a| / max|a|` blended over a grayscale base image.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gray level used when no base image is given.
pub const DEFAULT_BASE_LEVEL: u8 = 128;

/// An 8-bit grayscale raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn uniform(width: usize, height: usize, level: u8) -> Self {
        Self {
            width,
            height,
            pixels: vec![level; width * height],
        }
    }

    /// Pixels scaled to `[0, 1]` in row-major order.
    pub fn to_unit_values(&self, maxval: u16) -> Vec<f64> {
        self.pixels.iter().map(|&p| f64::from(p) / f64::from(maxval)).collect()
    }
}

/// An 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    /// Interleaved `r, g, b` bytes, row-major.
    pub pixels: Vec<u8>,
}

impl RgbImage {
    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let k = 3 * (row * self.width + col);
        [self.pixels[k], self.pixels[k + 1], self.pixels[k + 2]]
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

/// Shape of the attribution tensor being rendered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderShape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl RenderShape {
    pub fn len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl std::str::FromStr for RenderShape {
    type Err = Error;

    /// Parses `HxW` or `HxWxC`.
    fn from_str(s: &str) -> Result<Self> {
        let dims: Vec<usize> = s
            .split('x')
            .map(|d| d.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidParameter(format!("shape '{s}' is not HxW or HxWxC")))?;
        let shape = match dims[..] {
            [height, width] => RenderShape { height, width, channels: 1 },
            [height, width, channels] => RenderShape { height, width, channels },
            _ => return Err(Error::InvalidParameter(format!("shape '{s}' is not HxW or HxWxC"))),
        };
        if shape.is_empty() {
            return Err(Error::InvalidParameter(format!("shape '{s}' has a zero dimension")));
        }
        Ok(shape)
    }
}

/// Normalization metadata recorded alongside a rendered heatmap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderInfo {
    pub normalization: &'static str,
    pub divisor: f64,
}

/// Sums attributions over the trailing channel axis, giving one value per pixel.
pub fn aggregate_channels(values: &[f64], shape: RenderShape) -> Result<Vec<f64>> {
    if values.len() != shape.len() {
        return Err(Error::InvalidParameter(format!(
            "shape {}x{}x{} needs {} attributions, got {}",
            shape.height,
            shape.width,
            shape.channels,
            shape.len(),
            values.len()
        )));
    }
    Ok(values.chunks(shape.channels).map(|c| c.iter().sum()).collect())
}

/// Blends the normalized attributions over `base` (or mid-gray).
pub fn render_heatmap(
    values: &[f64],
    shape: RenderShape,
    base: Option<&GrayImage>,
) -> Result<(RgbImage, RenderInfo)> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("attributions to render".into()));
    }
    let per_pixel = aggregate_channels(values, shape)?;
    let base = match base {
        Some(img) if img.width != shape.width || img.height != shape.height => {
            return Err(Error::InvalidParameter(format!(
                "base image is {}x{} but attributions are {}x{}",
                img.height, img.width, shape.height, shape.width
            )))
        }
        Some(img) => img.clone(),
        None => GrayImage::uniform(shape.width, shape.height, DEFAULT_BASE_LEVEL),
    };
    let divisor = per_pixel.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut pixels = Vec::with_capacity(per_pixel.len() * 3);
    for (&a, &g) in per_pixel.iter().zip(&base.pixels) {
        let g = f64::from(g);
        let alpha = if divisor > 0.0 { a.abs() / divisor } else { 0.0 };
        let blend = |target: f64| ((1.0 - alpha) * g + alpha * target).round().clamp(0.0, 255.0) as u8;
        let (r, gr, b) = if a > 0.0 {
            (blend(0.0), blend(255.0), blend(0.0))
        } else if a < 0.0 {
            (blend(255.0), blend(0.0), blend(0.0))
        } else {
            (blend(g), blend(g), blend(g))
        };
        pixels.extend_from_slice(&[r, gr, b]);
    }
    Ok((
        RgbImage {
            width: shape.width,
            height: shape.height,
            pixels,
        },
        RenderInfo {
            normalization: "max_abs",
            divisor,
        },
    ))
}

/// Reads an 8-bit binary PGM (P5). Returns the image and its maxval.
pub fn read_pgm(bytes: &[u8]) -> Result<(GrayImage, u16)> {
    let bad = |msg: &str| Error::Parse(format!("PGM: {msg}"));
    let mut pos = 0;
    let mut fields = Vec::new();
    while fields.len() < 4 {
        // skip whitespace and comments
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII header"))?);
    }
    if fields[0] != "P5" {
        return Err(bad("magic number is not P5"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("malformed header number"));
    let (width, height, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if maxval == 0 || maxval > 255 {
        return Err(bad("only 8-bit images (maxval 1..=255) are supported"));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let need = width * height;
    let raster = bytes.get(pos..pos + need).ok_or_else(|| bad("raster is truncated"))?;
    if raster.iter().any(|&p| usize::from(p) > maxval) {
        return Err(bad("pixel exceeds maxval"));
    }
    Ok((
        GrayImage {
            width,
            height,
            pixels: raster.to_vec(),
        },
        maxval as u16,
    ))
}

pub fn write_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}
