//! Lossy grayscale image codec.
//!
//! The pipeline is: optional spatial pre-filter, multi-level 2D DWT,
//! incremental self-organizing-map vector quantization of the coarsest
//! approximation band, and canonical Huffman coding of the codeword indices
//! and quantized detail bands,
//! packed in a self-describing `ISV1` container.
//!
//! ```no_run
//! use isom_codec::{codec, metrics, raster};
//!
//! let img = raster::load_image("cameraman256.pgm")?;
//! let opts = codec::CodecOptions::default();
//! let bytes = codec::compress_to_bytes(&img, &opts)?;
//! let back = codec::decompress_bytes(&bytes)?;
//! println!("mse = {}", metrics::mse(&img, &back)?);
//! # Ok::<(), isom_codec::Error>(())
//! ```

pub mod bench;
pub mod codec;
pub mod entropy;
pub mod error;
pub mod filters;
pub mod isom;
pub mod metrics;
pub mod raster;
pub mod wavelet;

pub use codec::{compress, decompress, CodecOptions, CompressedStream};
pub use error::{Error, Result};
pub use filters::{FilterKind, FilterTag};
pub use isom::{IsomCodebook, IsomConfig};
pub use metrics::MetricsReport;
pub use raster::Image;
pub use wavelet::WaveletFamily;
