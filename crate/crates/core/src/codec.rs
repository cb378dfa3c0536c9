//! End-to-end compression pipeline and the `ISV1` container.
//!
//! Compression runs the pre-filter, a multi-level DWT, ISOM training on
//! blocks of the coarsest approximation band, and canonical Huffman coding of
//! the resulting codeword indices. Detail bands are uniformly quantized to
//! 8 bits and Huffman coded; with `code_details` off they are dropped and
//! decode as zero.
//!
//! Container layout, little-endian throughout:
//!
//! ```text
//! "ISV1" | version u8 | filter u8 | wavelet u8 | levels u8 | block_edge u8
//! width u16 | height u16 | ll_width u16 | ll_height u16
//! codebook_size u16 | min f32 | scale f32 | size*dim u8 entries
//! huffman table (u16 symbol count + one length byte per symbol)
//! index_count u32 | bit_count u32 | payload bytes
//! code_details u8 [per band, finest level first, LH/HL/HH:
//!                  min f32 | scale f32 | table | bit_count u32 | bytes]
//! ```

use crate::entropy::{self, BitPayload, HuffmanTable};
use crate::error::{Error, Result};
use crate::filters::{apply_filter, FilterKind, FilterTag};
use crate::isom::{self, IsomCodebook, IsomConfig};
use crate::raster::{to_byte, Image};
use crate::wavelet::{self, DetailBands, SubbandDecomposition, WaveletFamily, MAX_LEVELS};

pub const MAGIC: &[u8; 4] = b"ISV1";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CodecOptions {
    pub filter: FilterKind,
    pub wavelet: WaveletFamily,
    pub levels: usize,
    pub block_edge: usize,
    pub isom: IsomConfig,
    pub code_details: bool,
}

impl Default for CodecOptions {
    fn default() -> Self {
        Self {
            filter: FilterKind::None,
            wavelet: WaveletFamily::Haar,
            levels: 1,
            block_edge: 8,
            isom: IsomConfig::default(),
            code_details: true,
        }
    }
}

impl CodecOptions {
    pub fn validate(&self) -> Result<()> {
        self.filter.validate()?;
        self.isom.validate()?;
        if !(1..=MAX_LEVELS).contains(&self.levels) {
            return Err(Error::InvalidConfig(format!("levels {}", self.levels)));
        }
        if !(1..=255).contains(&self.block_edge) {
            return Err(Error::InvalidConfig(format!(
                "block edge {} must be in 1..=255",
                self.block_edge
            )));
        }
        Ok(())
    }
}

/// Uniform 8-bit quantizer `v ≈ min + q * scale`.
///
/// `min` is rounded down and `scale` up when narrowed to `f32`, so every value
/// in the fitted range quantizes with error at most `scale / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformQuantizer {
    pub min: f32,
    pub scale: f32,
}

impl UniformQuantizer {
    pub const MIN_SCALE: f64 = 1e-6;

    pub fn fit(values: &[f64]) -> Self {
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 0.0) };
        let mut min = lo as f32;
        if min as f64 > lo {
            min = min.next_down();
        }
        let wanted = ((hi - min as f64) / 255.0).max(Self::MIN_SCALE);
        let mut scale = wanted as f32;
        if (scale as f64) < wanted {
            scale = scale.next_up();
        }
        Self { min, scale }
    }

    pub fn quantize(&self, v: f64) -> u8 {
        ((v - self.min as f64) / self.scale as f64)
            .round()
            .clamp(0.0, 255.0) as u8
    }

    pub fn dequantize(&self, q: u8) -> f64 {
        self.min as f64 + q as f64 * self.scale as f64
    }

    fn is_valid(&self) -> bool {
        self.min.is_finite() && self.scale.is_finite() && self.scale > 0.0
    }
}

/// Codebook as stored: one byte per entry under a global quantizer.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedCodebook {
    pub quantizer: UniformQuantizer,
    pub size: usize,
    pub dim: usize,
    pub entries: Vec<u8>,
}

impl QuantizedCodebook {
    pub fn from_codebook(cb: &IsomCodebook) -> Self {
        let all: Vec<f64> = cb.codewords().iter().flatten().copied().collect();
        let quantizer = UniformQuantizer::fit(&all);
        Self {
            quantizer,
            size: cb.len(),
            dim: cb.dim(),
            entries: all.iter().map(|&v| quantizer.quantize(v)).collect(),
        }
    }

    pub fn dequantize(&self) -> Result<IsomCodebook> {
        IsomCodebook::new(
            self.entries
                .chunks_exact(self.dim)
                .map(|c| c.iter().map(|&q| self.quantizer.dequantize(q)).collect())
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamHeader {
    pub filter: FilterTag,
    pub wavelet: WaveletFamily,
    pub levels: usize,
    pub block_edge: usize,
    pub width: usize,
    pub height: usize,
    pub ll_width: usize,
    pub ll_height: usize,
}

impl StreamHeader {
    pub const ENCODED_LEN: usize = 17;

    pub fn grid(&self) -> (usize, usize) {
        (
            self.ll_width.div_ceil(self.block_edge),
            self.ll_height.div_ceil(self.block_edge),
        )
    }

    fn band_dims(&self, level: usize) -> (usize, usize) {
        (
            self.ll_width << (self.levels - level - 1),
            self.ll_height << (self.levels - level - 1),
        )
    }
}

/// One Huffman-coded detail subband.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailBand {
    pub quantizer: UniformQuantizer,
    pub table: HuffmanTable,
    pub payload: BitPayload,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressedStream {
    pub header: StreamHeader,
    pub codebook: QuantizedCodebook,
    pub table: HuffmanTable,
    pub index_count: usize,
    pub payload: BitPayload,
    /// Present when detail bands were coded: `3 * levels` bands, finest level first.
    pub details: Option<Vec<DetailBand>>,
}

/// Byte count of each container section; `total()` is the container length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SizeBreakdown {
    pub header: usize,
    pub codebook: usize,
    pub table: usize,
    pub indices: usize,
    pub details: usize,
    /// Entropy-coded bytes only (index payload plus detail payloads).
    pub payload: usize,
}

impl SizeBreakdown {
    pub fn total(&self) -> usize {
        self.header + self.codebook + self.table + self.indices + self.details
    }
}

impl CompressedStream {
    pub fn size_breakdown(&self) -> SizeBreakdown {
        let details = self.details.as_ref().map_or(0, |bands| {
            bands
                .iter()
                .map(|b| 8 + 2 + b.table.symbol_count() + 4 + b.payload.bytes.len())
                .sum()
        });
        let detail_payload = self
            .details
            .as_ref()
            .map_or(0, |bands| bands.iter().map(|b| b.payload.bytes.len()).sum());
        SizeBreakdown {
            header: StreamHeader::ENCODED_LEN,
            codebook: 2 + 8 + self.codebook.entries.len(),
            table: 2 + self.table.symbol_count(),
            indices: 8 + self.payload.bytes.len(),
            details: 1 + details,
            payload: self.payload.bytes.len() + detail_payload,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        write_container(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        read_container(bytes)
    }
}

pub fn write_container(s: &CompressedStream) -> Vec<u8> {
    let h = &s.header;
    let mut out = Vec::with_capacity(s.size_breakdown().total());
    out.extend(MAGIC);
    out.extend([
        VERSION,
        h.filter.id(),
        h.wavelet.id(),
        h.levels as u8,
        h.block_edge as u8,
    ]);
    for v in [h.width, h.height, h.ll_width, h.ll_height, s.codebook.size] {
        out.extend((v as u16).to_le_bytes());
    }
    out.extend(s.codebook.quantizer.min.to_le_bytes());
    out.extend(s.codebook.quantizer.scale.to_le_bytes());
    out.extend(&s.codebook.entries);
    out.extend(s.table.serialize());
    out.extend((s.index_count as u32).to_le_bytes());
    out.extend((s.payload.bit_count as u32).to_le_bytes());
    out.extend(&s.payload.bytes);
    match &s.details {
        None => out.push(0),
        Some(bands) => {
            out.push(1);
            for b in bands {
                out.extend(b.quantizer.min.to_le_bytes());
                out.extend(b.quantizer.scale.to_le_bytes());
                out.extend(b.table.serialize());
                out.extend((b.payload.bit_count as u32).to_le_bytes());
                out.extend(&b.payload.bytes);
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptStream(msg.into())
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| corrupt(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<usize> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]) as usize)
    }

    fn u32(&mut self) -> Result<u64> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as u64)
    }

    fn f32(&mut self) -> Result<f32> {
        let b = self.take(4)?;
        Ok(f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn quantizer(&mut self) -> Result<UniformQuantizer> {
        let q = UniformQuantizer {
            min: self.f32()?,
            scale: self.f32()?,
        };
        if !q.is_valid() {
            return Err(corrupt("invalid quantizer min/scale"));
        }
        Ok(q)
    }

    fn table(&mut self) -> Result<HuffmanTable> {
        let (t, used) = HuffmanTable::deserialize(&self.bytes[self.pos..])
            .map_err(|e| corrupt(e.to_string()))?;
        self.pos += used;
        Ok(t)
    }

    fn payload(&mut self) -> Result<BitPayload> {
        let bits = self.u32()?;
        let bytes = self.take(bits.div_ceil(8) as usize)?;
        BitPayload::from_parts(bits, bytes.to_vec())
    }
}

pub fn read_container(bytes: &[u8]) -> Result<CompressedStream> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    let mut r = Reader { bytes, pos: 4 };
    let version = r.u8()?;
    if version != VERSION {
        return Err(Error::VersionMismatch(version));
    }
    let filter = FilterTag::from_id(r.u8()?).map_err(|e| corrupt(e.to_string()))?;
    let wavelet = WaveletFamily::from_id(r.u8()?).map_err(|e| corrupt(e.to_string()))?;
    let levels = r.u8()? as usize;
    let block_edge = r.u8()? as usize;
    let header = StreamHeader {
        filter,
        wavelet,
        levels,
        block_edge,
        width: r.u16()?,
        height: r.u16()?,
        ll_width: r.u16()?,
        ll_height: r.u16()?,
    };
    validate_header(&header)?;

    let size = r.u16()?;
    if size == 0 {
        return Err(corrupt("empty codebook"));
    }
    let quantizer = r.quantizer()?;
    let dim = block_edge * block_edge;
    let codebook = QuantizedCodebook {
        quantizer,
        size,
        dim,
        entries: r.take(size * dim)?.to_vec(),
    };

    let table = r.table()?;
    if table.symbol_count() != size {
        return Err(corrupt(format!(
            "table has {} symbols for a codebook of {size}",
            table.symbol_count()
        )));
    }
    let index_count = r.u32()? as usize;
    let (cols, rows) = header.grid();
    if index_count != cols * rows {
        return Err(corrupt(format!(
            "{index_count} indices for a {cols}x{rows} block grid"
        )));
    }
    let payload = r.payload()?;

    let details = match r.u8()? {
        0 => None,
        1 => {
            let mut bands = Vec::with_capacity(3 * levels);
            for _ in 0..3 * levels {
                let quantizer = r.quantizer()?;
                let table = r.table()?;
                if table.symbol_count() > 256 {
                    return Err(corrupt("detail table wider than 8 bits"));
                }
                bands.push(DetailBand {
                    quantizer,
                    table,
                    payload: r.payload()?,
                });
            }
            Some(bands)
        }
        other => return Err(corrupt(format!("detail flag {other}"))),
    };
    if r.pos != bytes.len() {
        return Err(corrupt(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    Ok(CompressedStream {
        header,
        codebook,
        table,
        index_count,
        payload,
        details,
    })
}

fn validate_header(h: &StreamHeader) -> Result<()> {
    if !(1..=MAX_LEVELS).contains(&h.levels) {
        return Err(corrupt(format!("level count {}", h.levels)));
    }
    if h.block_edge == 0 {
        return Err(corrupt("zero block edge"));
    }
    if h.width == 0 || h.height == 0 {
        return Err(corrupt("zero image dimension"));
    }
    if (1usize << (h.levels - 1)) > h.width.min(h.height) {
        return Err(corrupt("too many levels for the image size"));
    }
    let step = 1usize << h.levels;
    if h.ll_width != h.width.div_ceil(step) || h.ll_height != h.height.div_ceil(step) {
        return Err(corrupt(format!(
            "approximation band {}x{} inconsistent with {}x{} at {} levels",
            h.ll_width, h.ll_height, h.width, h.height, h.levels
        )));
    }
    Ok(())
}

fn code_band(band: &Image) -> Result<DetailBand> {
    let quantizer = UniformQuantizer::fit(band.samples());
    let symbols: Vec<usize> = band
        .samples()
        .iter()
        .map(|&v| quantizer.quantize(v) as usize)
        .collect();
    let alphabet = symbols.iter().max().map_or(1, |&m| m + 1);
    let table = entropy::build_table(&entropy::histogram(&symbols, alphabet))?;
    let payload = entropy::encode(&symbols, &table)?;
    Ok(DetailBand {
        quantizer,
        table,
        payload,
    })
}

fn decode_band(band: &DetailBand, (w, h): (usize, usize)) -> Result<Image> {
    let symbols = entropy::decode(&band.payload, &band.table, w * h)?;
    let samples = symbols
        .into_iter()
        .map(|s| band.quantizer.dequantize(s as u8))
        .collect();
    Ok(Image::from_raw(w, h, samples))
}

pub fn compress(img: &Image, opts: &CodecOptions) -> Result<CompressedStream> {
    opts.validate()?;
    if img.width() > u16::MAX as usize || img.height() > u16::MAX as usize {
        return Err(Error::InvalidConfig(format!(
            "{}x{} exceeds the 65535 container limit",
            img.width(),
            img.height()
        )));
    }
    let filtered = apply_filter(img, &opts.filter);
    let decomp = wavelet::dwt2(&filtered, opts.wavelet, opts.levels)?;
    let blocks = isom::extract_blocks(&decomp.ll, opts.block_edge)?;
    let trained = isom::train(&blocks, &opts.isom)?;

    // indices are chosen against the codebook the decoder will actually see
    let codebook = QuantizedCodebook::from_codebook(&trained);
    let stored = codebook.dequantize()?;
    let indices = isom::quantize(&blocks, &stored)?;
    let table = entropy::build_table(&entropy::histogram(&indices, stored.len()))?;
    let payload = entropy::encode(&indices, &table)?;

    let details = if opts.code_details {
        let mut bands = Vec::with_capacity(3 * opts.levels);
        for d in &decomp.details {
            for band in [&d.lh, &d.hl, &d.hh] {
                bands.push(code_band(band)?);
            }
        }
        Some(bands)
    } else {
        None
    };

    Ok(CompressedStream {
        header: StreamHeader {
            filter: opts.filter.tag(),
            wavelet: opts.wavelet,
            levels: opts.levels,
            block_edge: opts.block_edge,
            width: img.width(),
            height: img.height(),
            ll_width: decomp.ll.width(),
            ll_height: decomp.ll.height(),
        },
        codebook,
        table,
        index_count: indices.len(),
        payload,
        details,
    })
}

/// Decodes a stream to an image with samples rounded and clamped to `[0, 255]`.
pub fn decompress(stream: &CompressedStream) -> Result<Image> {
    let h = &stream.header;
    validate_header(h)?;
    if stream.codebook.dim != h.block_edge * h.block_edge
        || stream.codebook.entries.len() != stream.codebook.size * stream.codebook.dim
    {
        return Err(corrupt("codebook shape does not match block edge"));
    }
    let codebook = stream
        .codebook
        .dequantize()
        .map_err(|e| corrupt(e.to_string()))?;
    let indices = entropy::decode(&stream.payload, &stream.table, stream.index_count)?;
    let ll = isom::reconstruct(
        &indices,
        &codebook,
        h.grid(),
        (h.ll_width, h.ll_height),
        h.block_edge,
    )
    .map_err(|e| corrupt(e.to_string()))?;

    let mut details = Vec::with_capacity(h.levels);
    for level in 0..h.levels {
        let dims = h.band_dims(level);
        let bands = match &stream.details {
            Some(coded) => {
                if coded.len() != 3 * h.levels {
                    return Err(corrupt("wrong number of detail bands"));
                }
                let band = |i: usize| decode_band(&coded[3 * level + i], dims);
                DetailBands {
                    lh: band(0)?,
                    hl: band(1)?,
                    hh: band(2)?,
                }
            }
            None => {
                let zero = Image::filled(dims.0, dims.1, 0.0);
                DetailBands {
                    lh: zero.clone(),
                    hl: zero.clone(),
                    hh: zero,
                }
            }
        };
        details.push(bands);
    }

    let decomp = SubbandDecomposition {
        levels: h.levels,
        ll,
        details,
        original_width: h.width,
        original_height: h.height,
    };
    let img = wavelet::idwt2(&decomp, h.wavelet)?;
    Ok(Image::from_raw(
        img.width(),
        img.height(),
        img.samples().iter().map(|&v| to_byte(v) as f64).collect(),
    ))
}

pub fn compress_to_bytes(img: &Image, opts: &CodecOptions) -> Result<Vec<u8>> {
    compress(img, opts).map(|s| write_container(&s))
}

pub fn decompress_bytes(bytes: &[u8]) -> Result<Image> {
    decompress(&read_container(bytes)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_opts() -> CodecOptions {
        CodecOptions {
            isom: IsomConfig {
                rounds: 3,
                epochs_per_round: 4,
                ..IsomConfig::default()
            },
            ..CodecOptions::default()
        }
    }

    fn textured(w: usize, h: usize) -> Image {
        Image::from_fn(w, h, |x, y| {
            (128.0 + 60.0 * ((x as f64) * 0.3).sin() * ((y as f64) * 0.2).cos()).round()
        })
    }

    #[test]
    fn constant_image_roundtrip() {
        let img = Image::filled(64, 48, 100.0);
        let s = compress(&img, &CodecOptions::default()).unwrap();
        assert_eq!(s.table.code_lengths().iter().filter(|&&l| l > 0).count(), 1);
        let out = decompress(&s).unwrap();
        assert_eq!((out.width(), out.height()), (64, 48));
        assert!(out.samples().iter().all(|v| (v - 100.0).abs() <= 1.0));
    }

    #[test]
    fn deterministic_bytes() {
        let img = textured(40, 24);
        let a = compress_to_bytes(&img, &small_opts()).unwrap();
        let b = compress_to_bytes(&img, &small_opts()).unwrap();
        assert_eq!(a, b);
        assert_eq!(decompress_bytes(&a).unwrap(), decompress_bytes(&b).unwrap());
    }

    #[test]
    fn size_breakdown_sums_to_length() {
        for code_details in [false, true] {
            let opts = CodecOptions {
                code_details,
                levels: 2,
                ..small_opts()
            };
            let s = compress(&textured(37, 29), &opts).unwrap();
            let bytes = write_container(&s);
            assert_eq!(s.size_breakdown().total(), bytes.len());
            assert_eq!(read_container(&bytes).unwrap(), s);
        }
    }

    #[test]
    fn detail_coding_lowers_error() {
        let img = textured(32, 32);
        let mse = |opts: &CodecOptions| {
            let out = decompress(&compress(&img, opts).unwrap()).unwrap();
            img.samples()
                .iter()
                .zip(out.samples())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                / 1024.0
        };
        let base = mse(&CodecOptions {
            code_details: false,
            ..small_opts()
        });
        let with = mse(&small_opts());
        assert!(with < base, "{with} vs {base}");
    }

    #[test]
    fn quantizer_error_bound() {
        let values = [-3.25, 0.0, 17.5, 400.1, 511.9];
        let q = UniformQuantizer::fit(&values);
        for v in values {
            let err = (q.dequantize(q.quantize(v)) - v).abs();
            assert!(err <= q.scale as f64 / 2.0 + 1e-9);
        }
        let flat = UniformQuantizer::fit(&[400.1; 3]);
        assert!(flat.scale as f64 >= UniformQuantizer::MIN_SCALE);
        let err = (flat.dequantize(flat.quantize(400.1)) - 400.1).abs();
        assert!(err <= flat.scale as f64 / 2.0 + 1e-9);
    }

    #[test]
    fn header_errors() {
        let bytes = compress_to_bytes(&textured(16, 16), &small_opts()).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(read_container(&bad), Err(Error::BadMagic)));
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(read_container(&bad), Err(Error::VersionMismatch(2))));
        let mut bad = bytes.clone();
        bad[6] = 7;
        assert!(matches!(read_container(&bad), Err(Error::CorruptStream(_))));
        let mut bad = bytes.clone();
        bad.push(0);
        assert!(matches!(read_container(&bad), Err(Error::CorruptStream(_))));
        assert!(matches!(
            read_container(&bytes[..bytes.len() - 1]),
            Err(Error::CorruptStream(_))
        ));
        assert!(matches!(read_container(b"IS"), Err(Error::BadMagic)));
    }

    #[test]
    fn options_validation() {
        let img = textured(8, 8);
        for opts in [
            CodecOptions {
                levels: 0,
                ..small_opts()
            },
            CodecOptions {
                block_edge: 256,
                ..small_opts()
            },
            CodecOptions {
                filter: FilterKind::Gaussian {
                    radius: 1,
                    sigma: -1.0,
                },
                ..small_opts()
            },
        ] {
            assert!(compress(&img, &opts).is_err());
        }
        assert!(matches!(
            compress(&img, &CodecOptions { levels: 5, ..small_opts() }),
            Err(Error::InvalidLevels { .. })
        ));
    }
}
