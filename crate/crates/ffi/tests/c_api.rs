use std::ffi::{CStr, CString};
use std::ptr;

use isom_codec::codec::{self, CodecOptions};
use isom_codec::filters::FilterTag;
use isom_codec::Image;
use isom_codec_ffi::*;

fn fixture() -> CString {
    let p = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/data/cameraman256.pgm");
    CString::new(p).unwrap()
}

fn last_error() -> String {
    let p = isom_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn gradient(w: usize, h: usize) -> Vec<f64> {
    (0..w * h).map(|i| ((i % w) * 7 + (i / w) * 3) as f64 % 256.0).collect()
}

#[test]
fn image_handle_exposes_samples() {
    let data = gradient(5, 3);
    let mut img = ptr::null_mut();
    unsafe {
        assert_eq!(isom_image_new(5, 3, data.as_ptr(), &mut img), IsomStatus::Ok);
        assert_eq!(isom_image_width(img), 5);
        assert_eq!(isom_image_height(img), 3);
        let s = std::slice::from_raw_parts(isom_image_samples(img), 15);
        assert_eq!(s, &data[..]);
        isom_image_free(img);
    }
}

#[test]
fn compress_matches_library_bytes() {
    let mut img = ptr::null_mut();
    let mut buf = ptr::null_mut();
    unsafe {
        assert_eq!(isom_image_load(fixture().as_ptr(), &mut img), IsomStatus::Ok);
        let opts = isom_options_new();
        assert_eq!(isom_options_set_filter(opts, FilterTag::Median.id()), IsomStatus::Ok);
        assert_eq!(isom_options_set_seed(opts, 7), IsomStatus::Ok);
        assert_eq!(isom_compress(img, opts, &mut buf), IsomStatus::Ok);
        let got = std::slice::from_raw_parts(isom_buffer_data(buf), isom_buffer_len(buf)).to_vec();

        let source = isom_codec::raster::load_image(fixture().to_str().unwrap()).unwrap();
        let mut lib_opts = CodecOptions {
            filter: FilterTag::Median.with_defaults(),
            ..CodecOptions::default()
        };
        lib_opts.isom.rng_seed = 7;
        assert_eq!(got, codec::compress_to_bytes(&source, &lib_opts).unwrap());

        let mut back = ptr::null_mut();
        assert_eq!(isom_decompress(got.as_ptr(), got.len(), &mut back), IsomStatus::Ok);
        let mut mse = -1.0;
        assert_eq!(isom_mse(img, back, &mut mse), IsomStatus::Ok);
        let expected = codec::decompress_bytes(&got).unwrap();
        assert_eq!(mse, isom_codec::metrics::mse(&source, &expected).unwrap());

        isom_image_free(back);
        isom_buffer_free(buf);
        isom_options_free(opts);
        isom_image_free(img);
    }
}

#[test]
fn null_defaults_options() {
    let data = gradient(16, 16);
    let mut img = ptr::null_mut();
    let mut buf = ptr::null_mut();
    unsafe {
        isom_image_new(16, 16, data.as_ptr(), &mut img);
        assert_eq!(isom_compress(img, ptr::null(), &mut buf), IsomStatus::Ok);
        let lib = codec::compress_to_bytes(
            &Image::new(16, 16, data).unwrap(),
            &CodecOptions::default(),
        )
        .unwrap();
        assert_eq!(isom_buffer_len(buf), lib.len());
        isom_buffer_free(buf);
        isom_image_free(img);
    }
}

#[test]
fn errors_map_to_status_and_message() {
    let mut img = ptr::null_mut();
    unsafe {
        assert_eq!(
            isom_decompress(b"JUNKJUNK".as_ptr(), 8, &mut img),
            IsomStatus::Stream
        );
        assert!(img.is_null());
        assert!(last_error().contains("magic"));

        let missing = CString::new("/nonexistent/x.pgm").unwrap();
        assert_eq!(isom_image_load(missing.as_ptr(), &mut img), IsomStatus::Io);

        assert_eq!(isom_image_new(2, 2, ptr::null(), &mut img), IsomStatus::NullPointer);
        assert!(last_error().contains("samples"));

        let opts = isom_options_new();
        assert_eq!(isom_options_set_filter(opts, 9), IsomStatus::InvalidArgument);
        assert_eq!(isom_options_set_wavelet(opts, 9), IsomStatus::InvalidArgument);
        isom_options_set_levels(opts, 0);
        let data = gradient(8, 8);
        isom_image_new(8, 8, data.as_ptr(), &mut img);
        let mut buf = ptr::null_mut();
        assert_eq!(isom_compress(img, opts, &mut buf), IsomStatus::InvalidArgument);
        assert!(buf.is_null());
        isom_options_free(opts);
        isom_image_free(img);

        let mut tau = 0.0;
        assert_eq!(isom_compression_ratio(1, 0, &mut tau), IsomStatus::InvalidArgument);
        assert_eq!(isom_compression_ratio(9477, 65536, &mut tau), IsomStatus::Ok);
        assert!((tau - 85.54).abs() < 0.01);
    }
}

#[test]
fn free_functions_accept_null() {
    unsafe {
        isom_image_free(ptr::null_mut());
        isom_options_free(ptr::null_mut());
        isom_buffer_free(ptr::null_mut());
        assert_eq!(isom_image_width(ptr::null()), 0);
        assert_eq!(isom_buffer_len(ptr::null()), 0);
        assert!(isom_buffer_data(ptr::null()).is_null());
    }
}

#[test]
fn filter_and_save() {
    let data = vec![10.0; 9];
    let mut impulse = data.clone();
    impulse[4] = 255.0;
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("out.pgm").to_str().unwrap()).unwrap();
    let (mut img, mut filtered, mut loaded) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
    unsafe {
        isom_image_new(3, 3, impulse.as_ptr(), &mut img);
        assert_eq!(isom_filter_apply(img, FilterTag::Median.id(), 1, 0.5, &mut filtered), IsomStatus::Ok);
        assert_eq!(isom_image_save(filtered, path.as_ptr()), IsomStatus::Ok);
        assert_eq!(isom_image_load(path.as_ptr(), &mut loaded), IsomStatus::Ok);
        let mut psnr = 0.0;
        assert_eq!(isom_psnr(filtered, loaded, &mut psnr), IsomStatus::Ok);
        assert!(psnr.is_infinite());
        assert_eq!(std::slice::from_raw_parts(isom_image_samples(loaded), 9), &data[..]);
        isom_image_free(filtered);
        assert_eq!(
            isom_filter_apply(img, FilterTag::Gaussian.id(), 1, -1.0, &mut filtered),
            IsomStatus::InvalidArgument
        );
        for p in [img, loaded] {
            isom_image_free(p);
        }
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/include/isom_codec.h"
    ))
    .unwrap();
    for name in [
        "isom_last_error",
        "isom_image_new",
        "isom_image_load",
        "isom_image_save",
        "isom_image_samples",
        "isom_image_free",
        "isom_options_new",
        "isom_options_set_code_details",
        "isom_compress",
        "isom_decompress",
        "isom_buffer_data",
        "isom_buffer_free",
        "isom_mse",
        "isom_psnr",
        "isom_compression_ratio",
        "isom_filter_apply",
        "ISOM_STATUS_STREAM",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
