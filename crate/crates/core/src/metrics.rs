//! Distortion and rate measures: MSE, PSNR and the compression ratio
//! `tau = (1 - T_c / T_o) * 100`.

use std::time::Instant;

use serde::{Serialize, Serializer};

use crate::codec::{compress, decompress, write_container, CodecOptions};
use crate::error::{Error, Result};
use crate::filters::FilterTag;
use crate::raster::{pgm_size, Image};

fn check_shapes(a: &Image, b: &Image) -> Result<()> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// Mean squared error over all `W*H` samples.
pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    check_shapes(a, b)?;
    let sum: f64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.samples().len() as f64)
}

/// Peak signal-to-noise ratio for 8-bit peak. `f64::INFINITY` when MSE is 0.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0f64 * 255.0 / mse).log10()
    }
}

/// Compression ratio in percent. Negative when the compressed file is larger.
pub fn compression_ratio(t_c: u64, t_o: u64) -> Result<f64> {
    if t_o == 0 {
        return Err(Error::ZeroOriginalSize);
    }
    Ok((1.0 - t_c as f64 / t_o as f64) * 100.0)
}

fn serialize_psnr<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub mse: f64,
    #[serde(serialize_with = "serialize_psnr")]
    pub psnr_db: f64,
    pub tau_percent: f64,
    /// Ratio computed from the entropy-coded payload only.
    pub tau_payload_percent: f64,
    pub t_c: u64,
    pub t_c_payload: u64,
    pub t_o: u64,
    pub filter: FilterTag,
    pub seed: u64,
    pub runtime_ms: f64,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report fields are always serializable")
    }

    /// Header line and one data row.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(self).expect("in-memory CSV write");
        String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
    }
}

/// Compresses and decompresses `original`, measuring against the unfiltered input.
///
/// `original_size` is the byte size of the source file; `None` uses the size
/// of its binary PGM encoding.
pub fn evaluate(
    original: &Image,
    opts: &CodecOptions,
    original_size: Option<u64>,
) -> Result<MetricsReport> {
    let started = Instant::now();
    let stream = compress(original, opts)?;
    let bytes = write_container(&stream);
    let decoded = decompress(&stream)?;
    let runtime_ms = started.elapsed().as_secs_f64() * 1e3;

    let t_o = original_size.unwrap_or_else(|| pgm_size(original.width(), original.height()));
    let t_c = bytes.len() as u64;
    let t_c_payload = stream.size_breakdown().payload as u64;
    let err = mse(original, &decoded)?;
    Ok(MetricsReport {
        mse: err,
        psnr_db: psnr_from_mse(err),
        tau_percent: compression_ratio(t_c, t_o)?,
        tau_payload_percent: compression_ratio(t_c_payload, t_o)?,
        t_c,
        t_c_payload,
        t_o,
        filter: opts.filter.tag(),
        seed: opts.isom.rng_seed,
        runtime_ms,
    })
}
