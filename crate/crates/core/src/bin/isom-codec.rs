use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use isom_codec::bench::{self, BenchGrid, OutputFormat};
use isom_codec::codec::{self, CodecOptions};
use isom_codec::filters::{apply_filter, FilterKind, FilterTag, DEFAULT_RADIUS, DEFAULT_SIGMA};
use isom_codec::isom::IsomConfig;
use isom_codec::{metrics, raster, WaveletFamily};

#[derive(Parser)]
#[command(name = "isom-codec", version, about = "Wavelet + self-organizing-map image codec")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress a PGM/BMP image into an .isv container
    Compress {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value = "none")]
        filter: FilterTag,
        #[command(flatten)]
        codec: CodecArgs,
    },
    /// Decode an .isv container to binary PGM
    Decompress {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Apply a spatial filter and write the result as PGM
    Filter {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        filter: FilterTag,
        #[arg(long, default_value_t = DEFAULT_RADIUS)]
        radius: usize,
        #[arg(long, default_value_t = DEFAULT_SIGMA)]
        sigma: f64,
    },
    /// Print MSE and PSNR between two images
    Metrics {
        #[arg(short = 'a')]
        a: PathBuf,
        #[arg(short = 'b')]
        b: PathBuf,
    },
    /// Run every filter column over a set of images
    Bench {
        #[arg(long, value_delimiter = ',', required = true)]
        images: Vec<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: OutputFormat,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        codec: CodecArgs,
    },
}

#[derive(Args)]
struct CodecArgs {
    #[arg(long, default_value = "haar")]
    wavelet: WaveletFamily,
    #[arg(long, default_value_t = 1)]
    levels: usize,
    #[arg(long = "block", default_value_t = 8)]
    block: usize,
    #[arg(long, default_value_t = 64)]
    max_nodes: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Huffman-code the detail subbands (default)
    #[arg(long, overrides_with = "no_code_details")]
    code_details: bool,
    /// Store only the approximation band; details decode as zero
    #[arg(long)]
    no_code_details: bool,
}

impl CodecArgs {
    fn options(&self, filter: FilterKind) -> CodecOptions {
        CodecOptions {
            filter,
            wavelet: self.wavelet,
            levels: self.levels,
            block_edge: self.block,
            isom: IsomConfig {
                max_nodes: self.max_nodes,
                rng_seed: self.seed,
                ..IsomConfig::default()
            },
            code_details: !self.no_code_details,
        }
    }
}

fn run(cli: Cli) -> isom_codec::Result<()> {
    match cli.command {
        Command::Compress {
            input,
            output,
            filter,
            codec,
        } => {
            let img = raster::load_image(&input)?;
            let bytes = codec::compress_to_bytes(&img, &codec.options(filter.with_defaults()))?;
            fs::write(&output, &bytes)?;
            println!("{} -> {} ({} bytes)", input.display(), output.display(), bytes.len());
        }
        Command::Decompress { input, output } => {
            let img = codec::decompress_bytes(&fs::read(&input)?)?;
            let n = raster::save_image(&img, &output)?;
            println!("{} -> {} ({n} bytes)", input.display(), output.display());
        }
        Command::Filter {
            input,
            output,
            filter,
            radius,
            sigma,
        } => {
            let kind = FilterKind::from_tag(filter, radius, sigma);
            kind.validate()?;
            let img = raster::load_image(&input)?;
            raster::save_image(&apply_filter(&img, &kind), &output)?;
        }
        Command::Metrics { a, b } => {
            let (a, b) = (raster::load_image(a)?, raster::load_image(b)?);
            let mse = metrics::mse(&a, &b)?;
            println!("mse={mse} psnr_db={}", metrics::psnr_from_mse(mse));
        }
        Command::Bench {
            images,
            format,
            output,
            codec,
        } => {
            let grid = BenchGrid {
                format,
                ..BenchGrid::standard(images, codec.options(FilterKind::None))
            };
            let report = bench::render(&bench::run_bench(&grid)?, grid.format);
            match output {
                Some(path) => fs::write(path, report)?,
                None => print!("{report}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
