//! C ABI for the `isom-codec` crate.
//!
//! Every object crosses the boundary as an opaque pointer owned by the caller
//! and released with the matching `*_free` function. Fallible calls return an
//! [`IsomStatus`] and write their result through an out-pointer; the message
//! for the most recent failure on the calling thread is available from
//! [`isom_last_error`]. Panics never unwind into C.
//!
//! The header `include/isom_codec.h` is generated by the build script.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use isom_codec::codec::{self, CodecOptions};
use isom_codec::filters::{apply_filter, FilterKind, FilterTag};
use isom_codec::{metrics, raster, Error, Image, WaveletFamily};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsomStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Stream = 5,
    Codec = 6,
    Panic = 7,
}

/// Grayscale image handle.
pub struct IsomImage(Image);

/// Codec options handle.
pub struct IsomOptions(CodecOptions);

/// Owned byte buffer, e.g. a compressed container.
pub struct IsomBuffer(Vec<u8>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> IsomStatus {
    match e {
        Error::Io(_) => IsomStatus::Io,
        Error::UnsupportedFormat(_) | Error::CorruptFile(_) | Error::InvalidImage(_) => {
            IsomStatus::Format
        }
        Error::BadMagic
        | Error::VersionMismatch(_)
        | Error::CorruptStream(_)
        | Error::CorruptTable(_) => IsomStatus::Stream,
        Error::InvalidConfig(_)
        | Error::InvalidLevels { .. }
        | Error::ShapeMismatch(_)
        | Error::DimensionMismatch { .. }
        | Error::UnknownFamily(_)
        | Error::UnknownFilter(_)
        | Error::ZeroOriginalSize => IsomStatus::InvalidArgument,
        _ => IsomStatus::Codec,
    }
}

/// Runs `f`, converting errors and panics into a status plus a stored message.
fn guard(f: impl FnOnce() -> Result<(), (IsomStatus, String)>) -> IsomStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IsomStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            IsomStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (IsomStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (IsomStatus, String) {
    (IsomStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (IsomStatus, String) {
    (IsomStatus::InvalidArgument, msg.into())
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a str, (IsomStatus, String)> {
    if path.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map_err(|_| invalid("path is not valid UTF-8"))
}

unsafe fn out_arg<'a, T>(out: *mut *mut T) -> Result<&'a mut *mut T, (IsomStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = ptr::null_mut();
    Ok(&mut *out)
}

unsafe fn image_arg<'a>(img: *const IsomImage, what: &str) -> Result<&'a Image, (IsomStatus, String)> {
    img.as_ref().map(|i| &i.0).ok_or_else(|| null(what))
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn isom_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds an image from `width * height` row-major samples.
///
/// # Safety
/// `samples` must point to `width * height` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isom_image_new(
    width: usize,
    height: usize,
    samples: *const f64,
    out: *mut *mut IsomImage,
) -> IsomStatus {
    guard(|| {
        let out = out_arg(out)?;
        if samples.is_null() {
            return Err(null("samples"));
        }
        let n = width
            .checked_mul(height)
            .ok_or_else(|| invalid("image too large"))?;
        let data = std::slice::from_raw_parts(samples, n).to_vec();
        let img = Image::new(width, height, data).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(IsomImage(img)));
        Ok(())
    })
}

/// Loads a PGM (P2/P5) or BMP file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isom_image_load(path: *const c_char, out: *mut *mut IsomImage) -> IsomStatus {
    guard(|| {
        let out = out_arg(out)?;
        let img = raster::load_image(path_arg(path)?).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(IsomImage(img)));
        Ok(())
    })
}

/// Writes the image as binary PGM.
///
/// # Safety
/// `img` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn isom_image_save(img: *const IsomImage, path: *const c_char) -> IsomStatus {
    guard(|| {
        let img = image_arg(img, "image")?;
        raster::save_image(img, path_arg(path)?).map_err(lib_err)?;
        Ok(())
    })
}

/// # Safety
/// `img` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn isom_image_width(img: *const IsomImage) -> usize {
    img.as_ref().map_or(0, |i| i.0.width())
}

/// # Safety
/// `img` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn isom_image_height(img: *const IsomImage) -> usize {
    img.as_ref().map_or(0, |i| i.0.height())
}

/// Row-major samples, valid while `img` lives.
///
/// # Safety
/// `img` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn isom_image_samples(img: *const IsomImage) -> *const f64 {
    img.as_ref().map_or(ptr::null(), |i| i.0.samples().as_ptr())
}

/// # Safety
/// `img` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn isom_image_free(img: *mut IsomImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// Options with the library defaults.
#[no_mangle]
pub extern "C" fn isom_options_new() -> *mut IsomOptions {
    Box::into_raw(Box::new(IsomOptions(CodecOptions::default())))
}

/// # Safety
/// `opts` must be null or come from [`isom_options_new`], and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn isom_options_free(opts: *mut IsomOptions) {
    if !opts.is_null() {
        drop(Box::from_raw(opts));
    }
}

unsafe fn with_options(
    opts: *mut IsomOptions,
    f: impl FnOnce(&mut CodecOptions) -> Result<(), (IsomStatus, String)>,
) -> IsomStatus {
    guard(|| f(&mut opts.as_mut().ok_or_else(|| null("options"))?.0))
}

/// Pre-filter by id (0 none, 1 median, 2 gaussian, 3 mean, 4 adaptive Wiener)
/// with default parameters.
///
/// # Safety
/// `opts` must come from [`isom_options_new`].
#[no_mangle]
pub unsafe extern "C" fn isom_options_set_filter(opts: *mut IsomOptions, filter_id: u8) -> IsomStatus {
    with_options(opts, |o| {
        o.filter = FilterTag::from_id(filter_id).map_err(lib_err)?.with_defaults();
        Ok(())
    })
}

/// Wavelet by id (0 Haar, 1 Daubechies-4).
///
/// # Safety
/// `opts` must come from [`isom_options_new`].
#[no_mangle]
pub unsafe extern "C" fn isom_options_set_wavelet(opts: *mut IsomOptions, wavelet_id: u8) -> IsomStatus {
    with_options(opts, |o| {
        o.wavelet = WaveletFamily::from_id(wavelet_id).map_err(lib_err)?;
        Ok(())
    })
}

/// # Safety
/// `opts` must come from [`isom_options_new`].
#[no_mangle]
pub unsafe extern "C" fn isom_options_set_levels(opts: *mut IsomOptions, levels: usize) -> IsomStatus {
    with_options(opts, |o| {
        o.levels = levels;
        Ok(())
    })
}

/// # Safety
/// `opts` must come from [`isom_options_new`].
#[no_mangle]
pub unsafe extern "C" fn isom_options_set_block_edge(opts: *mut IsomOptions, edge: usize) -> IsomStatus {
    with_options(opts, |o| {
        o.block_edge = edge;
        Ok(())
    })
}

/// # Safety
/// `opts` must come from [`isom_options_new`].
#[no_mangle]
pub unsafe extern "C" fn isom_options_set_max_nodes(opts: *mut IsomOptions, max_nodes: usize) -> IsomStatus {
    with_options(opts, |o| {
        o.isom.max_nodes = max_nodes;
        Ok(())
    })
}

/// # Safety
/// `opts` must come from [`isom_options_new`].
#[no_mangle]
pub unsafe extern "C" fn isom_options_set_seed(opts: *mut IsomOptions, seed: u64) -> IsomStatus {
    with_options(opts, |o| {
        o.isom.rng_seed = seed;
        Ok(())
    })
}

/// # Safety
/// `opts` must come from [`isom_options_new`].
#[no_mangle]
pub unsafe extern "C" fn isom_options_set_code_details(opts: *mut IsomOptions, enabled: bool) -> IsomStatus {
    with_options(opts, |o| {
        o.code_details = enabled;
        Ok(())
    })
}

/// Compresses `img` into an ISV1 container. `opts` may be null for defaults.
///
/// # Safety
/// Pointers must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isom_compress(
    img: *const IsomImage,
    opts: *const IsomOptions,
    out: *mut *mut IsomBuffer,
) -> IsomStatus {
    guard(|| {
        let out = out_arg(out)?;
        let img = image_arg(img, "image")?;
        let defaults = CodecOptions::default();
        let opts = opts.as_ref().map_or(&defaults, |o| &o.0);
        let bytes = codec::compress_to_bytes(img, opts).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(IsomBuffer(bytes)));
        Ok(())
    })
}

/// Decodes an ISV1 container.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isom_decompress(data: *const u8, len: usize, out: *mut *mut IsomImage) -> IsomStatus {
    guard(|| {
        let out = out_arg(out)?;
        if data.is_null() {
            return Err(null("data"));
        }
        let bytes = std::slice::from_raw_parts(data, len);
        let img = codec::decompress_bytes(bytes).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(IsomImage(img)));
        Ok(())
    })
}

/// # Safety
/// `buf` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn isom_buffer_data(buf: *const IsomBuffer) -> *const u8 {
    buf.as_ref().map_or(ptr::null(), |b| b.0.as_ptr())
}

/// # Safety
/// `buf` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn isom_buffer_len(buf: *const IsomBuffer) -> usize {
    buf.as_ref().map_or(0, |b| b.0.len())
}

/// # Safety
/// `buf` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn isom_buffer_free(buf: *mut IsomBuffer) {
    if !buf.is_null() {
        drop(Box::from_raw(buf));
    }
}

/// Mean squared error between two images of equal size.
///
/// # Safety
/// Image pointers must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isom_mse(a: *const IsomImage, b: *const IsomImage, out: *mut f64) -> IsomStatus {
    guard(|| {
        let (a, b) = (image_arg(a, "a")?, image_arg(b, "b")?);
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = metrics::mse(a, b).map_err(lib_err)?;
        Ok(())
    })
}

/// PSNR in dB; positive infinity for identical images.
///
/// # Safety
/// Image pointers must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isom_psnr(a: *const IsomImage, b: *const IsomImage, out: *mut f64) -> IsomStatus {
    guard(|| {
        let (a, b) = (image_arg(a, "a")?, image_arg(b, "b")?);
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = metrics::psnr(a, b).map_err(lib_err)?;
        Ok(())
    })
}

/// `(1 - t_c / t_o) * 100`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isom_compression_ratio(t_c: u64, t_o: u64, out: *mut f64) -> IsomStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = metrics::compression_ratio(t_c, t_o).map_err(lib_err)?;
        Ok(())
    })
}

/// Applies a spatial filter by id. `sigma` is used by the gaussian filter only.
///
/// # Safety
/// `img` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn isom_filter_apply(
    img: *const IsomImage,
    filter_id: u8,
    radius: usize,
    sigma: f64,
    out: *mut *mut IsomImage,
) -> IsomStatus {
    guard(|| {
        let out = out_arg(out)?;
        let img = image_arg(img, "image")?;
        let tag = FilterTag::from_id(filter_id).map_err(lib_err)?;
        let kind = FilterKind::from_tag(tag, radius, sigma);
        kind.validate().map_err(lib_err)?;
        *out = Box::into_raw(Box::new(IsomImage(apply_filter(img, &kind))));
        Ok(())
    })
}
