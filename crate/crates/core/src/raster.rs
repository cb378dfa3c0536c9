//! Grayscale image plane plus PGM/BMP reading and PGM writing.
//!
//! Samples are stored as `f64` in row-major order. Sources are 8-bit, but
//! wavelet coefficients and codewords are fractional, so rounding back to
//! bytes only happens when an image is written out.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Rectangular grayscale sample plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    samples: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if samples.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} samples for a {width}x{height} image",
                samples.len()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidImage("non-finite sample".into()));
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    /// Image with every sample set to `value`.
    ///
    /// Panics if either dimension is zero.
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "empty image");
        Self {
            width,
            height,
            samples: vec![value; width * height],
        }
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    ///
    /// Panics if either dimension is zero.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "empty image");
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            samples,
        }
    }

    pub(crate) fn from_raw(width: usize, height: usize, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), width * height);
        Self {
            width,
            height,
            samples,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.samples[y * self.width + x]
    }

    /// Sample at signed coordinates, replicating the nearest edge when out of range.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.samples[cy * self.width + cx]
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.samples[y * self.width..(y + 1) * self.width]
    }

    /// Rounds and clamps every sample into `[0, 255]`.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.samples.iter().map(|&v| to_byte(v)).collect()
    }

    /// Same geometry, samples rounded and clamped to the 8-bit range.
    pub fn quantized(&self) -> Image {
        Image::from_raw(
            self.width,
            self.height,
            self.samples.iter().map(|&v| to_byte(v) as f64).collect(),
        )
    }
}

#[inline]
pub(crate) fn to_byte(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Loads a PGM (P2/P5) or uncompressed BMP (8-bit paletted or 24-bit) file.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let bytes = fs::read(path)?;
    decode_image(&bytes)
}

/// Decodes an in-memory PGM or BMP file, dispatching on the magic bytes.
pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    match bytes {
        [b'P', b'2', ..] | [b'P', b'5', ..] => decode_pgm(bytes),
        [b'B', b'M', ..] => decode_bmp(bytes),
        _ => Err(Error::UnsupportedFormat("unrecognized magic bytes".into())),
    }
}

/// Writes `img` as binary PGM (P5) and returns the number of bytes written.
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<u64> {
    let bytes = encode_pgm(img);
    fs::write(path, &bytes)?;
    Ok(bytes.len() as u64)
}

/// Binary PGM encoding; samples are rounded and clamped to `[0, 255]`.
pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.to_bytes());
    out
}

/// Size in bytes of the P5 encoding of an image with these dimensions.
pub fn pgm_size(width: usize, height: usize) -> u64 {
    (format!("P5\n{width} {height}\n255\n").len() + width * height) as u64
}

struct PnmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl PnmCursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(if self.pos >= self.bytes.len() {
                Error::CorruptFile("truncated PGM".into())
            } else {
                Error::UnsupportedFormat("expected a decimal number in PGM".into())
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::UnsupportedFormat("PGM number out of range".into()))
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let binary = bytes[1] == b'5';
    let mut cur = PnmCursor { bytes, pos: 2 };
    let width = cur.number()?;
    let height = cur.number()?;
    let maxval = cur.number()?;
    if width == 0 || height == 0 {
        return Err(Error::UnsupportedFormat("zero PGM dimension".into()));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::UnsupportedFormat(format!(
            "PGM maxval {maxval} (only 8-bit is supported)"
        )));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| Error::UnsupportedFormat("PGM dimensions overflow".into()))?;
    let scale = |v: usize| -> f64 {
        if maxval == 255 {
            v as f64
        } else {
            ((v * 255) as f64 / maxval as f64).round()
        }
    };

    let samples = if binary {
        // exactly one whitespace byte separates the header from the raster
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            return Err(Error::CorruptFile("missing raster separator".into()));
        }
        let start = cur.pos + 1;
        let raster = bytes
            .get(start..start + count)
            .ok_or_else(|| Error::CorruptFile("truncated PGM raster".into()))?;
        raster.iter().map(|&b| scale(b as usize)).collect()
    } else {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let v = cur.number()?;
            if v > maxval {
                return Err(Error::CorruptFile(format!("sample {v} exceeds maxval")));
            }
            out.push(scale(v));
        }
        out
    };
    Ok(Image::from_raw(width, height, samples))
}

fn le_u16(b: &[u8], at: usize) -> Result<u16> {
    b.get(at..at + 2)
        .map(|s| u16::from_le_bytes([s[0], s[1]]))
        .ok_or_else(|| Error::CorruptFile("truncated BMP header".into()))
}

fn le_u32(b: &[u8], at: usize) -> Result<u32> {
    b.get(at..at + 4)
        .map(|s| u32::from_le_bytes([s[0], s[1], s[2], s[3]]))
        .ok_or_else(|| Error::CorruptFile("truncated BMP header".into()))
}

/// ITU-R BT.601 luma, rounded.
#[inline]
fn luma(r: u8, g: u8, b: u8) -> f64 {
    (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64).round()
}

fn decode_bmp(bytes: &[u8]) -> Result<Image> {
    let data_offset = le_u32(bytes, 10)? as usize;
    let info_size = le_u32(bytes, 14)? as usize;
    if info_size < 40 {
        return Err(Error::UnsupportedFormat(format!(
            "BMP info header of {info_size} bytes (need BITMAPINFOHEADER)"
        )));
    }
    let width = le_u32(bytes, 18)? as i32;
    let raw_height = le_u32(bytes, 22)? as i32;
    let bpp = le_u16(bytes, 28)?;
    let compression = le_u32(bytes, 30)?;
    let colors_used = le_u32(bytes, 46)? as usize;

    if compression != 0 {
        return Err(Error::UnsupportedFormat("compressed BMP".into()));
    }
    if width <= 0 || raw_height == 0 {
        return Err(Error::UnsupportedFormat("invalid BMP dimensions".into()));
    }
    let width = width as usize;
    let top_down = raw_height < 0;
    let height = raw_height.unsigned_abs() as usize;

    let palette: Vec<f64> = match bpp {
        8 => {
            let n = if colors_used == 0 { 256 } else { colors_used.min(256) };
            let start = 14 + info_size;
            let table = bytes
                .get(start..start + 4 * n)
                .ok_or_else(|| Error::CorruptFile("truncated BMP palette".into()))?;
            table.chunks_exact(4).map(|e| luma(e[2], e[1], e[0])).collect()
        }
        24 => Vec::new(),
        other => {
            return Err(Error::UnsupportedFormat(format!("{other}-bit BMP")));
        }
    };

    let bytes_per_pixel = bpp as usize / 8;
    let stride = (width * bytes_per_pixel).div_ceil(4) * 4;
    let needed = stride * height;
    let raster = bytes
        .get(data_offset..)
        .filter(|r| r.len() >= needed)
        .ok_or_else(|| Error::CorruptFile("truncated BMP pixel array".into()))?;

    let mut samples = vec![0.0; width * height];
    for row in 0..height {
        let y = if top_down { row } else { height - 1 - row };
        let line = &raster[row * stride..row * stride + width * bytes_per_pixel];
        let dst = &mut samples[y * width..(y + 1) * width];
        if bpp == 8 {
            for (d, &idx) in dst.iter_mut().zip(line) {
                *d = *palette.get(idx as usize).ok_or_else(|| {
                    Error::CorruptFile(format!("palette index {idx} out of range"))
                })?;
            }
        } else {
            for (d, px) in dst.iter_mut().zip(line.chunks_exact(3)) {
                *d = luma(px[2], px[1], px[0]);
            }
        }
    }
    Ok(Image::from_raw(width, height, samples))
}

/// Pads both dimensions up to the next multiple of `multiple` by replicating
/// the nearest edge sample. `multiple` of 0 is treated as 1.
pub fn pad_replicate(img: &Image, multiple: usize) -> Image {
    let m = multiple.max(1);
    let w = img.width.div_ceil(m) * m;
    let h = img.height.div_ceil(m) * m;
    if w == img.width && h == img.height {
        return img.clone();
    }
    Image::from_fn(w, h, |x, y| img.get_clamped(x as isize, y as isize))
}

/// Top-left `width`x`height` sub-plane.
pub fn crop(img: &Image, width: usize, height: usize) -> Result<Image> {
    if width == 0 || height == 0 || width > img.width || height > img.height {
        return Err(Error::OutOfBounds {
            width,
            height,
            image_width: img.width,
            image_height: img.height,
        });
    }
    if width == img.width && height == img.height {
        return Ok(img.clone());
    }
    Ok(Image::from_fn(width, height, |x, y| img.get(x, y)))
}
