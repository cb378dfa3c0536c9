//! Separable multi-level 2D discrete wavelet transform with periodic extension.
//!
//! Orthonormal filter banks only. The high-pass analysis filter is the
//! quadrature mirror of the low-pass, `g[k] = (-1)^k h[L-1-k]`, and synthesis
//! uses the transposed analysis operator, which gives exact reconstruction on
//! even-length periodic signals.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::raster::{crop, pad_replicate, Image};

pub const MAX_LEVELS: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum WaveletFamily {
    #[default]
    Haar,
    /// Four-tap Daubechies (two vanishing moments).
    Daubechies4,
}

impl WaveletFamily {
    pub fn id(self) -> u8 {
        match self {
            WaveletFamily::Haar => 0,
            WaveletFamily::Daubechies4 => 1,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            0 => Ok(WaveletFamily::Haar),
            1 => Ok(WaveletFamily::Daubechies4),
            other => Err(Error::UnknownFamily(other)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WaveletFamily::Haar => "haar",
            WaveletFamily::Daubechies4 => "db4",
        }
    }

    /// Orthonormal analysis low-pass taps.
    pub fn lowpass(self) -> Vec<f64> {
        match self {
            WaveletFamily::Haar => vec![std::f64::consts::FRAC_1_SQRT_2; 2],
            WaveletFamily::Daubechies4 => {
                let s3 = 3f64.sqrt();
                let norm = 4.0 * std::f64::consts::SQRT_2;
                vec![
                    (1.0 + s3) / norm,
                    (3.0 + s3) / norm,
                    (3.0 - s3) / norm,
                    (1.0 - s3) / norm,
                ]
            }
        }
    }

    pub fn highpass(self) -> Vec<f64> {
        let h = self.lowpass();
        let n = h.len();
        (0..n)
            .map(|k| if k % 2 == 0 { h[n - 1 - k] } else { -h[n - 1 - k] })
            .collect()
    }
}

/// Low-pass taps for a container family id.
pub fn family_coefficients(id: u8) -> Result<Vec<f64>> {
    WaveletFamily::from_id(id).map(WaveletFamily::lowpass)
}

impl fmt::Display for WaveletFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WaveletFamily {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "haar" => Ok(WaveletFamily::Haar),
            "db4" | "daubechies4" | "d4" => Ok(WaveletFamily::Daubechies4),
            other => Err(format!("unknown wavelet '{other}'")),
        }
    }
}

/// Detail subbands of one level. The first letter is the horizontal filter,
/// the second the vertical one.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailBands {
    pub lh: Image,
    pub hl: Image,
    pub hh: Image,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubbandDecomposition {
    pub levels: usize,
    /// Coarsest approximation.
    pub ll: Image,
    /// One entry per level, finest first.
    pub details: Vec<DetailBands>,
    pub original_width: usize,
    pub original_height: usize,
}

impl SubbandDecomposition {
    pub fn padded_dims(&self) -> (usize, usize) {
        (self.ll.width() << self.levels, self.ll.height() << self.levels)
    }
}

fn check_levels(levels: usize, width: usize, height: usize) -> Result<()> {
    // padding may at most double the short side
    let ok = (1..=MAX_LEVELS).contains(&levels) && (1usize << (levels - 1)) <= width.min(height);
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidLevels {
            levels,
            width,
            height,
        })
    }
}

/// One periodic analysis step: `low[i] = Σ h[k] x[(2i+k) mod n]`.
fn analyze(x: &[f64], h: &[f64], g: &[f64], low: &mut [f64], high: &mut [f64]) {
    let n = x.len();
    for i in 0..n / 2 {
        let (mut a, mut d) = (0.0, 0.0);
        for (k, (hk, gk)) in h.iter().zip(g).enumerate() {
            let v = x[(2 * i + k) % n];
            a += hk * v;
            d += gk * v;
        }
        low[i] = a;
        high[i] = d;
    }
}

/// Transpose of [`analyze`].
fn synthesize(low: &[f64], high: &[f64], h: &[f64], g: &[f64], out: &mut [f64]) {
    let n = out.len();
    out.fill(0.0);
    for i in 0..n / 2 {
        for (k, (hk, gk)) in h.iter().zip(g).enumerate() {
            out[(2 * i + k) % n] += hk * low[i] + gk * high[i];
        }
    }
}

/// Single-level 2D analysis on an even-sized plane: rows first, then columns.
fn analyze_level(plane: &Image, h: &[f64], g: &[f64]) -> (Image, DetailBands) {
    let (w, ht) = (plane.width(), plane.height());
    let (hw, hh) = (w / 2, ht / 2);

    // row pass: L and H planes of size hw x ht
    let mut lo_rows = vec![0.0; hw * ht];
    let mut hi_rows = vec![0.0; hw * ht];
    for y in 0..ht {
        analyze(
            plane.row(y),
            h,
            g,
            &mut lo_rows[y * hw..(y + 1) * hw],
            &mut hi_rows[y * hw..(y + 1) * hw],
        );
    }

    let columns = |src: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let mut low = vec![0.0; hw * hh];
        let mut high = vec![0.0; hw * hh];
        let mut col = vec![0.0; ht];
        let (mut cl, mut ch) = (vec![0.0; hh], vec![0.0; hh]);
        for x in 0..hw {
            for y in 0..ht {
                col[y] = src[y * hw + x];
            }
            analyze(&col, h, g, &mut cl, &mut ch);
            for y in 0..hh {
                low[y * hw + x] = cl[y];
                high[y * hw + x] = ch[y];
            }
        }
        (low, high)
    };
    let (ll, lh) = columns(&lo_rows);
    let (hl, hh_band) = columns(&hi_rows);
    (
        Image::from_raw(hw, hh, ll),
        DetailBands {
            lh: Image::from_raw(hw, hh, lh),
            hl: Image::from_raw(hw, hh, hl),
            hh: Image::from_raw(hw, hh, hh_band),
        },
    )
}

fn synthesize_level(ll: &Image, d: &DetailBands, h: &[f64], g: &[f64]) -> Image {
    let (hw, hh) = (ll.width(), ll.height());
    let (w, ht) = (hw * 2, hh * 2);

    let columns = |low: &Image, high: &Image| -> Vec<f64> {
        let mut out = vec![0.0; hw * ht];
        let (mut cl, mut ch) = (vec![0.0; hh], vec![0.0; hh]);
        let mut col = vec![0.0; ht];
        for x in 0..hw {
            for y in 0..hh {
                cl[y] = low.get(x, y);
                ch[y] = high.get(x, y);
            }
            synthesize(&cl, &ch, h, g, &mut col);
            for y in 0..ht {
                out[y * hw + x] = col[y];
            }
        }
        out
    };
    let lo_rows = columns(ll, &d.lh);
    let hi_rows = columns(&d.hl, &d.hh);

    let mut out = vec![0.0; w * ht];
    for y in 0..ht {
        synthesize(
            &lo_rows[y * hw..(y + 1) * hw],
            &hi_rows[y * hw..(y + 1) * hw],
            h,
            g,
            &mut out[y * w..(y + 1) * w],
        );
    }
    Image::from_raw(w, ht, out)
}

/// Multi-level forward transform. The image is edge-replicated up to a
/// multiple of `2^levels` first; the original geometry is kept for cropping.
pub fn dwt2(img: &Image, family: WaveletFamily, levels: usize) -> Result<SubbandDecomposition> {
    check_levels(levels, img.width(), img.height())?;
    let (h, g) = (family.lowpass(), family.highpass());
    let mut current = pad_replicate(img, 1 << levels);
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (ll, d) = analyze_level(&current, &h, &g);
        details.push(d);
        current = ll;
    }
    Ok(SubbandDecomposition {
        levels,
        ll: current,
        details,
        original_width: img.width(),
        original_height: img.height(),
    })
}

/// Inverse of [`dwt2`], cropped back to the original geometry.
pub fn idwt2(decomp: &SubbandDecomposition, family: WaveletFamily) -> Result<Image> {
    let levels = decomp.levels;
    if levels == 0 || levels > MAX_LEVELS || decomp.details.len() != levels {
        return Err(Error::ShapeMismatch(format!(
            "{} detail levels for a {levels}-level decomposition",
            decomp.details.len()
        )));
    }
    let (pw, ph) = decomp.padded_dims();
    if decomp.original_width == 0
        || decomp.original_height == 0
        || decomp.original_width > pw
        || decomp.original_height > ph
    {
        return Err(Error::ShapeMismatch(format!(
            "original {}x{} does not fit padded {pw}x{ph}",
            decomp.original_width, decomp.original_height
        )));
    }
    for (k, d) in decomp.details.iter().enumerate() {
        let dims = (pw >> (k + 1), ph >> (k + 1));
        for band in [&d.lh, &d.hl, &d.hh] {
            if (band.width(), band.height()) != dims {
                return Err(Error::ShapeMismatch(format!(
                    "level {} subband is {}x{}, expected {}x{}",
                    k + 1,
                    band.width(),
                    band.height(),
                    dims.0,
                    dims.1
                )));
            }
        }
    }

    let (h, g) = (family.lowpass(), family.highpass());
    let mut current = decomp.ll.clone();
    for d in decomp.details.iter().rev() {
        current = synthesize_level(&current, d, &h, &g);
    }
    crop(&current, decomp.original_width, decomp.original_height)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn energy(d: &SubbandDecomposition) -> f64 {
        let sq = |i: &Image| i.samples().iter().map(|v| v * v).sum::<f64>();
        sq(&d.ll)
            + d.details
                .iter()
                .map(|b| sq(&b.lh) + sq(&b.hl) + sq(&b.hh))
                .sum::<f64>()
    }

    fn test_image(w: usize, h: usize) -> Image {
        Image::from_fn(w, h, |x, y| ((x * 37 + y * 91 + x * y) % 256) as f64)
    }

    #[test]
    fn coefficients() {
        assert_eq!(family_coefficients(0).unwrap(), vec![FRAC_1_SQRT_2; 2]);
        let d4 = family_coefficients(1).unwrap();
        assert!((d4.iter().sum::<f64>() - 2f64.sqrt()).abs() < 1e-12);
        assert!((d4.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(matches!(family_coefficients(9), Err(Error::UnknownFamily(9))));
    }

    #[test]
    fn filter_bank_orthogonality() {
        for fam in [WaveletFamily::Haar, WaveletFamily::Daubechies4] {
            let (h, g) = (fam.lowpass(), fam.highpass());
            let dot: f64 = h.iter().zip(&g).map(|(a, b)| a * b).sum();
            assert!(dot.abs() < 1e-12);
            assert!((g.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(g.iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn haar_row_pass() {
        let h = WaveletFamily::Haar.lowpass();
        let g = WaveletFamily::Haar.highpass();
        let (mut lo, mut hi) = ([0.0; 2], [0.0; 2]);
        analyze(&[1.0, 2.0, 3.0, 4.0], &h, &g, &mut lo, &mut hi);
        assert!((lo[0] - 3.0 * FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((lo[1] - 7.0 * FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((hi[0] + FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((hi[1] + FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn constant_image_haar() {
        let d = dwt2(&Image::filled(8, 6, 100.0), WaveletFamily::Haar, 1).unwrap();
        assert!(d.ll.samples().iter().all(|v| (v - 200.0).abs() < 1e-12));
        for b in [&d.details[0].lh, &d.details[0].hl, &d.details[0].hh] {
            assert!(b.samples().iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn zero_details_constant_ll_inverts_to_constant() {
        let z = Image::filled(4, 4, 0.0);
        let d = SubbandDecomposition {
            levels: 1,
            ll: Image::filled(4, 4, 200.0),
            details: vec![DetailBands {
                lh: z.clone(),
                hl: z.clone(),
                hh: z,
            }],
            original_width: 8,
            original_height: 8,
        };
        let out = idwt2(&d, WaveletFamily::Haar).unwrap();
        assert!(out.samples().iter().all(|v| (v - 100.0).abs() < 1e-12));
    }

    #[test]
    fn reconstruction_and_parseval() {
        for fam in [WaveletFamily::Haar, WaveletFamily::Daubechies4] {
            for (w, h, levels) in [(8, 8, 1), (16, 12, 2), (13, 7, 2), (32, 32, 3), (5, 3, 1)] {
                let img = test_image(w, h);
                let d = dwt2(&img, fam, levels).unwrap();
                let back = idwt2(&d, fam).unwrap();
                let err = img
                    .samples()
                    .iter()
                    .zip(back.samples())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(err < 1e-9, "{fam} {w}x{h} L{levels}: {err}");

                let padded = pad_replicate(&img, 1 << levels);
                let e_in: f64 = padded.samples().iter().map(|v| v * v).sum();
                assert!((energy(&d) - e_in).abs() < 1e-9 * e_in.max(1.0));
            }
        }
    }

    #[test]
    fn subband_dims() {
        let d = dwt2(&test_image(20, 12), WaveletFamily::Daubechies4, 2).unwrap();
        assert_eq!(d.padded_dims(), (20, 12));
        assert_eq!((d.details[0].hh.width(), d.details[0].hh.height()), (10, 6));
        assert_eq!((d.details[1].lh.width(), d.details[1].lh.height()), (5, 3));
        assert_eq!((d.ll.width(), d.ll.height()), (5, 3));
    }

    #[test]
    fn invalid_levels_and_shapes() {
        let img = test_image(8, 8);
        assert!(matches!(
            dwt2(&img, WaveletFamily::Haar, 0),
            Err(Error::InvalidLevels { .. })
        ));
        assert!(matches!(
            dwt2(&img, WaveletFamily::Haar, 5),
            Err(Error::InvalidLevels { .. })
        ));
        assert!(dwt2(&img, WaveletFamily::Haar, 4).is_ok());

        let mut d = dwt2(&img, WaveletFamily::Haar, 2).unwrap();
        d.details[1].hh = Image::filled(3, 2, 0.0);
        assert!(matches!(
            idwt2(&d, WaveletFamily::Haar),
            Err(Error::ShapeMismatch(_))
        ));
        d.details.pop();
        assert!(matches!(
            idwt2(&d, WaveletFamily::Haar),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
