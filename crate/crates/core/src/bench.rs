//! Image x filter sweep producing one [`MetricsReport`] per cell.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::codec::CodecOptions;
use crate::error::{Error, Result};
use crate::filters::{FilterKind, FilterTag};
use crate::metrics::{evaluate, MetricsReport};
use crate::raster::load_image;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Markdown,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "markdown" | "md" => Ok(OutputFormat::Markdown),
            other => Err(format!("unknown format '{other}'")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchGrid {
    pub images: Vec<PathBuf>,
    pub filters: Vec<FilterKind>,
    pub options: CodecOptions,
    pub format: OutputFormat,
}

impl BenchGrid {
    /// The five standard columns (no filter, median, gaussian, mean, adaptive
    /// Wiener) with default parameters.
    pub fn standard(images: Vec<PathBuf>, options: CodecOptions) -> Self {
        Self {
            images,
            filters: FilterTag::ALL.iter().map(|t| t.with_defaults()).collect(),
            options,
            format: OutputFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub image: String,
    pub report: MetricsReport,
}

fn image_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Runs every (image, filter) cell. Cells run in parallel; rows come back in
/// grid order, images outer and filters inner.
pub fn run_bench(grid: &BenchGrid) -> Result<Vec<BenchRow>> {
    let mut sources = Vec::with_capacity(grid.images.len());
    for path in &grid.images {
        let cell_err = |e: Error| Error::BenchCell {
            image: path.display().to_string(),
            filter: "-".into(),
            source: Box::new(e),
        };
        let img = load_image(path).map_err(cell_err)?;
        let size = fs::metadata(path).map_err(|e| cell_err(e.into()))?.len();
        sources.push((image_name(path), path, img, size));
    }

    let cells: Vec<(usize, FilterKind)> = (0..sources.len())
        .flat_map(|i| grid.filters.iter().map(move |f| (i, *f)))
        .collect();
    cells
        .par_iter()
        .map(|&(i, filter)| {
            let (name, path, img, size) = &sources[i];
            let opts = CodecOptions {
                filter,
                ..grid.options.clone()
            };
            evaluate(img, &opts, Some(*size))
                .map(|report| BenchRow {
                    image: name.clone(),
                    report,
                })
                .map_err(|e| Error::BenchCell {
                    image: path.display().to_string(),
                    filter: filter.tag().to_string(),
                    source: Box::new(e),
                })
        })
        .collect()
}

pub fn render(rows: &[BenchRow], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => render_csv(rows),
        OutputFormat::Markdown => render_markdown(rows),
    }
}

pub fn render_csv(rows: &[BenchRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "image",
        "filter",
        "mse",
        "psnr_db",
        "tau_percent",
        "tau_payload_percent",
        "t_c",
        "t_c_payload",
        "t_o",
        "seed",
        "runtime_ms",
    ])
    .expect("in-memory CSV write");
    for row in rows {
        let r = &row.report;
        w.write_record([
            row.image.clone(),
            r.filter.to_string(),
            format!("{:.4}", r.mse),
            if r.psnr_db.is_infinite() {
                "inf".into()
            } else {
                format!("{:.4}", r.psnr_db)
            },
            format!("{:.4}", r.tau_percent),
            format!("{:.4}", r.tau_payload_percent),
            r.t_c.to_string(),
            r.t_c_payload.to_string(),
            r.t_o.to_string(),
            r.seed.to_string(),
            format!("{:.3}", r.runtime_ms),
        ])
        .expect("in-memory CSV write");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
}

/// Published (tau %, MSE) per column, in [`FilterTag::ALL`] order, for the
/// original 256x256 cameraman and peppers experiments. Context only.
pub const PUBLISHED_CAMERAMAN: [(f64, f64); 5] = [
    (85.54, 54.66),
    (86.91, 58.95),
    (86.32, 60.25),
    (86.32, 100.9),
    (88.08, 118.4),
];
pub const PUBLISHED_PEPPERS: [(f64, f64); 5] = [
    (77.92, 60.8),
    (78.51, 66.7),
    (78.12, 61.09),
    (78.41, 62.28),
    (79.1, 65.11),
];

fn published_for(image: &str) -> Option<(&'static str, &'static [(f64, f64); 5])> {
    let lower = image.to_ascii_lowercase();
    if lower.contains("camera") {
        Some(("cameraman", &PUBLISHED_CAMERAMAN))
    } else if lower.contains("pepper") {
        Some(("peppers", &PUBLISHED_PEPPERS))
    } else {
        None
    }
}

fn column_title(tag: FilterTag) -> &'static str {
    match tag {
        FilterTag::None => "without filter",
        FilterTag::Median => "median filter",
        FilterTag::Gaussian => "gaussian filter",
        FilterTag::Mean => "mean filter",
        FilterTag::AdaptiveWiener => "adaptive filter",
    }
}

/// One table row per image with a column per filter, followed by the
/// published values when the image is recognised.
pub fn render_markdown(rows: &[BenchRow]) -> String {
    let mut images: Vec<&str> = Vec::new();
    let mut columns: Vec<FilterTag> = Vec::new();
    for r in rows {
        if !images.contains(&r.image.as_str()) {
            images.push(&r.image);
        }
        if !columns.contains(&r.report.filter) {
            columns.push(r.report.filter);
        }
    }

    let mut out = String::from("| image |");
    for c in &columns {
        let _ = write!(out, " {} |", column_title(*c));
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(columns.len()));
    out.push('\n');

    for image in images {
        let _ = write!(out, "| {image} |");
        for c in &columns {
            match rows.iter().find(|r| r.image == image && r.report.filter == *c) {
                Some(r) => {
                    let _ = write!(
                        out,
                        " τ = {:.2} % MSE = {:.2} |",
                        r.report.tau_percent, r.report.mse
                    );
                }
                None => out.push_str(" - |"),
            }
        }
        out.push('\n');
        if let Some((label, values)) = published_for(image) {
            let _ = write!(out, "| {label} (published) |");
            for c in &columns {
                let i = FilterTag::ALL.iter().position(|t| t == c).unwrap();
                let (tau, mse) = values[i];
                let _ = write!(out, " τ = {tau:.2} % MSE = {mse:.2} |");
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(image: &str, filter: FilterTag, tau: f64) -> BenchRow {
        BenchRow {
            image: image.into(),
            report: MetricsReport {
                mse: 10.0,
                psnr_db: 38.0,
                tau_percent: tau,
                tau_payload_percent: 99.0,
                t_c: 10,
                t_c_payload: 5,
                t_o: 100,
                filter,
                seed: 42,
                runtime_ms: 3.0,
            },
        }
    }

    #[test]
    fn markdown_layout() {
        let rows: Vec<BenchRow> = FilterTag::ALL
            .iter()
            .map(|&t| row("cameraman256", t, 90.0))
            .collect();
        let md = render_markdown(&rows);
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(
            lines[0],
            "| image | without filter | median filter | gaussian filter | mean filter | adaptive filter |"
        );
        assert!(lines[2].starts_with("| cameraman256 | τ = 90.00 % MSE = 10.00 |"));
        assert!(lines[3].starts_with("| cameraman (published) | τ = 85.54 % MSE = 54.66 |"));
        assert!(lines[3].ends_with("τ = 88.08 % MSE = 118.40 |"));
    }

    #[test]
    fn csv_rows() {
        let rows = vec![row("a", FilterTag::None, 1.0), row("a", FilterTag::Mean, 2.0)];
        let csv = render_csv(&rows);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(2).unwrap().starts_with("a,mean,10.0000,"));
    }

    #[test]
    fn missing_image_names_the_cell() {
        let grid = BenchGrid::standard(vec!["/nonexistent/x.pgm".into()], CodecOptions::default());
        let err = run_bench(&grid).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.pgm"));
    }
}
