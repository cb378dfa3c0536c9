use std::io;

/// Errors produced anywhere in the codec pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt image file: {0}")]
    CorruptFile(String),
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("crop {width}x{height} exceeds image {image_width}x{image_height}")]
    OutOfBounds {
        width: usize,
        height: usize,
        image_width: usize,
        image_height: usize,
    },
    #[error("invalid decomposition level count {levels} for a {width}x{height} image")]
    InvalidLevels {
        levels: usize,
        width: usize,
        height: usize,
    },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("unknown wavelet family id {0}")]
    UnknownFamily(u8),
    #[error("unknown filter id {0}")]
    UnknownFilter(u8),
    #[error("empty training set")]
    EmptyInput,
    #[error("vector length {got} does not match codebook dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("codeword index {index} out of range for codebook of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("all symbol frequencies are zero")]
    EmptyAlphabet,
    #[error("symbol {0} has no code in the table")]
    UnknownSymbol(usize),
    #[error("corrupt Huffman table: {0}")]
    CorruptTable(String),
    #[error("corrupt stream: {0}")]
    CorruptStream(String),
    #[error("bad container magic")]
    BadMagic,
    #[error("unsupported container version {0}")]
    VersionMismatch(u8),
    #[error("original size must be positive")]
    ZeroOriginalSize,
    #[error("bench cell ({image}, {filter}): {source}")]
    BenchCell {
        image: String,
        filter: String,
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
