//! Spatial pre-filters: median, mean, Gaussian and locally adaptive Wiener.
//!
//! All filters use a square `(2r+1)²` window and replicate edge samples at
//! the image border, so constant images are exact fixed points.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::raster::Image;

pub const DEFAULT_RADIUS: usize = 1;
pub const DEFAULT_SIGMA: f64 = 0.5;

/// Filter identity without parameters; this is what the container records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterTag {
    None,
    Median,
    Gaussian,
    Mean,
    #[serde(rename = "wiener")]
    AdaptiveWiener,
}

impl FilterTag {
    /// Column order used by the benchmark tables.
    pub const ALL: [FilterTag; 5] = [
        FilterTag::None,
        FilterTag::Median,
        FilterTag::Gaussian,
        FilterTag::Mean,
        FilterTag::AdaptiveWiener,
    ];

    pub fn id(self) -> u8 {
        match self {
            FilterTag::None => 0,
            FilterTag::Median => 1,
            FilterTag::Gaussian => 2,
            FilterTag::Mean => 3,
            FilterTag::AdaptiveWiener => 4,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        Ok(match id {
            0 => FilterTag::None,
            1 => FilterTag::Median,
            2 => FilterTag::Gaussian,
            3 => FilterTag::Mean,
            4 => FilterTag::AdaptiveWiener,
            other => return Err(Error::UnknownFilter(other)),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            FilterTag::None => "none",
            FilterTag::Median => "median",
            FilterTag::Gaussian => "gaussian",
            FilterTag::Mean => "mean",
            FilterTag::AdaptiveWiener => "wiener",
        }
    }

    /// The filter with default window and parameters.
    pub fn with_defaults(self) -> FilterKind {
        FilterKind::from_tag(self, DEFAULT_RADIUS, DEFAULT_SIGMA)
    }
}

impl fmt::Display for FilterTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(FilterTag::None),
            "median" => Ok(FilterTag::Median),
            "gaussian" => Ok(FilterTag::Gaussian),
            "mean" => Ok(FilterTag::Mean),
            "wiener" | "adaptive" | "adaptivewiener" => Ok(FilterTag::AdaptiveWiener),
            other => Err(format!("unknown filter '{other}'")),
        }
    }
}

/// A pre-filter together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[derive(Default)]
pub enum FilterKind {
    #[default]
    None,
    Median { radius: usize },
    Gaussian { radius: usize, sigma: f64 },
    Mean { radius: usize },
    /// `noise_variance` of `None` means "estimate from the image".
    AdaptiveWiener { radius: usize, noise_variance: Option<f64> },
}


impl FilterKind {
    pub fn from_tag(tag: FilterTag, radius: usize, sigma: f64) -> Self {
        match tag {
            FilterTag::None => FilterKind::None,
            FilterTag::Median => FilterKind::Median { radius },
            FilterTag::Gaussian => FilterKind::Gaussian { radius, sigma },
            FilterTag::Mean => FilterKind::Mean { radius },
            FilterTag::AdaptiveWiener => FilterKind::AdaptiveWiener {
                radius,
                noise_variance: None,
            },
        }
    }

    pub fn tag(&self) -> FilterTag {
        match self {
            FilterKind::None => FilterTag::None,
            FilterKind::Median { .. } => FilterTag::Median,
            FilterKind::Gaussian { .. } => FilterTag::Gaussian,
            FilterKind::Mean { .. } => FilterTag::Mean,
            FilterKind::AdaptiveWiener { .. } => FilterTag::AdaptiveWiener,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let radius = match *self {
            FilterKind::None => return Ok(()),
            FilterKind::Median { radius } | FilterKind::Mean { radius } => radius,
            FilterKind::Gaussian { radius, sigma } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidConfig(format!("gaussian sigma {sigma}")));
                }
                radius
            }
            FilterKind::AdaptiveWiener {
                radius,
                noise_variance,
            } => {
                if let Some(nv) = noise_variance {
                    if !(nv >= 0.0 && nv.is_finite()) {
                        return Err(Error::InvalidConfig(format!("noise variance {nv}")));
                    }
                }
                radius
            }
        };
        if radius == 0 {
            return Err(Error::InvalidConfig("filter radius must be >= 1".into()));
        }
        Ok(())
    }
}

/// Calls `f` with the edge-replicated window around every pixel, in row-major order.
fn map_windows(img: &Image, radius: usize, mut f: impl FnMut(&[f64], f64) -> f64) -> Image {
    let r = radius as isize;
    let edge = 2 * radius + 1;
    let mut window = Vec::with_capacity(edge * edge);
    Image::from_fn(img.width(), img.height(), |x, y| {
        window.clear();
        let (cx, cy) = (x as isize, y as isize);
        for dy in -r..=r {
            for dx in -r..=r {
                window.push(img.get_clamped(cx + dx, cy + dy));
            }
        }
        f(&window, img.get(x, y))
    })
}

pub fn median_filter(img: &Image, radius: usize) -> Image {
    let mut scratch = Vec::new();
    map_windows(img, radius, |w, _| {
        scratch.clear();
        scratch.extend_from_slice(w);
        let mid = scratch.len() / 2;
        *scratch.select_nth_unstable_by(mid, f64::total_cmp).1
    })
}

pub fn mean_filter(img: &Image, radius: usize) -> Image {
    map_windows(img, radius, |w, _| w.iter().sum::<f64>() / w.len() as f64)
}

/// Sampled 2D Gaussian over the `(2r+1)²` support, normalized to sum to 1.
/// Row-major, `(dy, dx)` from `(-r, -r)`.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let two_s2 = 2.0 * sigma * sigma;
    let mut k = Vec::with_capacity((2 * radius + 1).pow(2));
    for dy in -r..=r {
        for dx in -r..=r {
            k.push((-((dx * dx + dy * dy) as f64) / two_s2).exp());
        }
    }
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= total);
    k
}

pub fn gaussian_filter(img: &Image, sigma: f64, radius: usize) -> Image {
    let kernel = gaussian_kernel(sigma, radius);
    map_windows(img, radius, |w, _| {
        w.iter().zip(&kernel).map(|(v, k)| v * k).sum()
    })
}

fn local_stats(window: &[f64]) -> (f64, f64) {
    let n = window.len() as f64;
    let mean = window.iter().sum::<f64>() / n;
    let var = window.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Locally adaptive Wiener filter.
///
/// Output is `mu + max(var - nu, 0) / max(var, nu) * (x - mu)` with the local
/// mean and variance taken over the window. When `noise_variance` is absent,
/// `nu` is the mean of all local variances.
pub fn adaptive_wiener_filter(img: &Image, radius: usize, noise_variance: Option<f64>) -> Image {
    let stats: Vec<(f64, f64)> = {
        let mut out = Vec::with_capacity(img.samples().len());
        map_windows(img, radius, |w, _| {
            out.push(local_stats(w));
            0.0
        });
        out
    };
    let nu = noise_variance
        .unwrap_or_else(|| stats.iter().map(|s| s.1).sum::<f64>() / stats.len() as f64);

    let samples = img
        .samples()
        .iter()
        .zip(&stats)
        .map(|(&x, &(mean, var))| {
            let denom = var.max(nu);
            // 0/0 only happens for a flat window with nu == 0, where x == mean anyway
            let gain = if denom > 0.0 {
                (var - nu).max(0.0) / denom
            } else {
                0.0
            };
            mean + gain * (x - mean)
        })
        .collect();
    Image::from_raw(img.width(), img.height(), samples)
}

pub fn apply_filter(img: &Image, kind: &FilterKind) -> Image {
    match *kind {
        FilterKind::None => img.clone(),
        FilterKind::Median { radius } => median_filter(img, radius),
        FilterKind::Gaussian { radius, sigma } => gaussian_filter(img, sigma, radius),
        FilterKind::Mean { radius } => mean_filter(img, radius),
        FilterKind::AdaptiveWiener {
            radius,
            noise_variance,
        } => adaptive_wiener_filter(img, radius, noise_variance),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn all_filters() -> Vec<FilterKind> {
        FilterTag::ALL[1..].iter().map(|t| t.with_defaults()).collect()
    }

    fn row(values: &[f64]) -> Image {
        Image::new(values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn median_examples() {
        assert_eq!(median_filter(&Image::filled(4, 3, 42.0), 1), Image::filled(4, 3, 42.0));

        let mut s = vec![10.0; 9];
        s[4] = 255.0;
        let out = median_filter(&Image::new(3, 3, s).unwrap(), 1);
        assert_eq!(out.get(1, 1), 10.0);

        let r = row(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(median_filter(&r, 1).samples(), r.samples());
    }

    #[test]
    fn mean_examples() {
        let mut s = vec![0.0; 9];
        s[4] = 9.0;
        assert_eq!(mean_filter(&Image::new(3, 3, s).unwrap(), 1).get(1, 1), 1.0);

        let out = mean_filter(&row(&[0.0, 3.0, 6.0]), 1);
        for (got, want) in out.samples().iter().zip([1.0, 3.0, 5.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_kernel_values() {
        let k = gaussian_kernel(0.5, 1);
        // independently evaluated exp(-d²/0.5) / sum
        assert!((k[4] - 0.619_347_030_557_177_2).abs() < 1e-12);
        assert!((k[1] - 0.083_819_505_802_210_6).abs() < 1e-12);
        assert!((k[0] - 0.011_343_736_558_495_071).abs() < 1e-12);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_impulse_response_is_kernel() {
        let img = Image::from_fn(9, 9, |x, y| if (x, y) == (4, 4) { 1.0 } else { 0.0 });
        let out = gaussian_filter(&img, 0.8, 2);
        let k = gaussian_kernel(0.8, 2);
        for dy in 0..5 {
            for dx in 0..5 {
                // convolution flips the kernel; it is symmetric
                assert!((out.get(2 + dx, 2 + dy) - k[dy * 5 + dx]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn wiener_hand_computed_row() {
        // mu = 10/3, var = 200/9 over the replicated 3x3 window
        let r = row(&[0.0, 10.0, 0.0]);
        let mu = 10.0 / 3.0;

        // var < nu: gain is zero, output collapses to the local mean
        let out = adaptive_wiener_filter(&r, 1, Some(50.0));
        assert!((out.get(1, 0) - mu).abs() < 1e-12);

        // nu = 10: gain = (200/9 - 10) / (200/9) = 0.55, output 7.0
        let out = adaptive_wiener_filter(&r, 1, Some(10.0));
        let c = out.get(1, 0);
        assert!((c - 7.0).abs() < 1e-12);
        assert!(c > mu && c < 10.0);
    }

    #[test]
    fn wiener_estimated_noise() {
        // every window has var 200/9, so estimated nu equals it and gain is 0
        let out = adaptive_wiener_filter(&row(&[0.0, 10.0, 0.0]), 1, None);
        for v in out.samples() {
            assert!((v - 10.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dispatch() {
        let img = Image::from_fn(7, 5, |x, y| ((x * 31 + y * 17) % 23) as f64);
        assert_eq!(apply_filter(&img, &FilterKind::None), img);
        assert_eq!(
            apply_filter(&img, &FilterKind::Median { radius: 1 }),
            median_filter(&img, 1)
        );
        assert_eq!(
            apply_filter(&img, &FilterTag::Gaussian.with_defaults()),
            gaussian_filter(&img, 0.5, 1)
        );
        assert_eq!(
            apply_filter(&img, &FilterKind::Mean { radius: 2 }),
            mean_filter(&img, 2)
        );
    }

    #[test]
    fn tag_ids_and_names() {
        for t in FilterTag::ALL {
            assert_eq!(FilterTag::from_id(t.id()).unwrap(), t);
            assert_eq!(t.name().parse::<FilterTag>().unwrap(), t);
        }
        assert!(matches!(FilterTag::from_id(5), Err(Error::UnknownFilter(5))));
        assert!(FilterKind::Gaussian { radius: 1, sigma: 0.0 }.validate().is_err());
        assert!(FilterKind::Mean { radius: 0 }.validate().is_err());
    }

    fn image_strategy() -> impl Strategy<Value = Image> {
        (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
            proptest::collection::vec(0.0f64..255.0, w * h)
                .prop_map(move |s| Image::new(w, h, s).unwrap())
        })
    }

    proptest! {
        #[test]
        fn constant_images_are_fixed_points(w in 1usize..10, h in 1usize..10, c in -300.0f64..300.0) {
            let img = Image::filled(w, h, c);
            for f in all_filters() {
                let out = apply_filter(&img, &f);
                for v in out.samples() {
                    prop_assert!((v - c).abs() <= 1e-12 * c.abs().max(1.0));
                }
            }
        }

        #[test]
        fn geometry_and_finiteness(img in image_strategy()) {
            for f in all_filters() {
                let out = apply_filter(&img, &f);
                prop_assert_eq!((out.width(), out.height()), (img.width(), img.height()));
                prop_assert!(out.samples().iter().all(|v| v.is_finite()));
            }
        }

        #[test]
        fn median_and_mean_within_window_range(img in image_strategy()) {
            let med = median_filter(&img, 1);
            let mean = mean_filter(&img, 1);
            for y in 0..img.height() {
                for x in 0..img.width() {
                    let mut lo = f64::INFINITY;
                    let mut hi = f64::NEG_INFINITY;
                    for dy in -1..=1isize {
                        for dx in -1..=1isize {
                            let v = img.get_clamped(x as isize + dx, y as isize + dy);
                            lo = lo.min(v);
                            hi = hi.max(v);
                        }
                    }
                    for v in [med.get(x, y), mean.get(x, y)] {
                        prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
                    }
                }
            }
        }

        #[test]
        fn wiener_without_noise_is_identity(img in image_strategy()) {
            let out = adaptive_wiener_filter(&img, 1, Some(0.0));
            for (a, b) in out.samples().iter().zip(img.samples()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn gaussian_kernel_is_normalized(sigma in 0.05f64..10.0, radius in 1usize..5) {
            let k = gaussian_kernel(sigma, radius);
            prop_assert!(k.iter().all(|&w| w >= 0.0));
            prop_assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
