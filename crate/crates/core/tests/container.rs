use isom_codec::codec::{self, read_container, write_container, CodecOptions};
use isom_codec::error::Error;
use isom_codec::raster::Image;

/// 8x8 image, one Haar level, 4x4 blocks: one codeword, one index.
fn minimal_stream() -> Vec<u8> {
    let mut b = b"ISV1".to_vec();
    b.extend([1, 0, 0, 1, 4]);
    for v in [8u16, 8, 4, 4, 1] {
        b.extend(v.to_le_bytes());
    }
    b.extend(200f32.to_le_bytes());
    b.extend(1f32.to_le_bytes());
    b.extend([0u8; 16]);
    b.extend([1, 0, 1]);
    b.extend(1u32.to_le_bytes());
    b.extend(1u32.to_le_bytes());
    b.push(0);
    b.push(0);
    b
}

#[test]
fn hand_built_stream_decodes() {
    let bytes = minimal_stream();
    assert_eq!(bytes.len(), 56);
    let s = read_container(&bytes).unwrap();
    assert_eq!(s.codebook.size, 1);
    assert_eq!(s.index_count, 1);
    assert_eq!(s.size_breakdown().total(), bytes.len());
    assert_eq!(write_container(&s), bytes);
    // LL of 200 under orthonormal Haar is a flat 100 image.
    let img = codec::decompress(&s).unwrap();
    assert_eq!((img.width(), img.height()), (8, 8));
    assert!(img.samples().iter().all(|&v| (v - 100.0).abs() < 1e-9));
}

#[test]
fn hand_built_stream_rejects_damage() {
    let good = minimal_stream();

    let mut v = good.clone();
    v[4] = 2;
    assert!(matches!(read_container(&v), Err(Error::VersionMismatch(2))));

    for cut in 0..good.len() {
        let err = read_container(&good[..cut]).unwrap_err();
        assert!(
            matches!(err, Error::BadMagic | Error::CorruptStream(_)),
            "cut {cut}: {err:?}"
        );
    }

    let mut v = good.clone();
    v.push(0);
    assert!(matches!(read_container(&v), Err(Error::CorruptStream(_))));

    // Padding bits of the index payload must be zero.
    let mut v = good.clone();
    v[54] = 0x01;
    assert!(matches!(read_container(&v), Err(Error::CorruptStream(_))));
}

#[test]
fn default_options_shrink_a_natural_image() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/cameraman256.pgm");
    let img = isom_codec::raster::load_image(path).unwrap();
    let bytes = codec::compress_to_bytes(&img, &CodecOptions::default()).unwrap();
    assert!((bytes.len() as u64) < isom_codec::raster::pgm_size(256, 256));
    let back = codec::decompress_bytes(&bytes).unwrap();
    assert!(isom_codec::metrics::mse(&img, &back).unwrap().is_finite());
}

#[test]
fn constant_image_survives_within_one_level() {
    let img = Image::filled(40, 24, 77.0);
    let back = codec::decompress_bytes(
        &codec::compress_to_bytes(&img, &CodecOptions::default()).unwrap(),
    )
    .unwrap()
    .quantized();
    assert!(back.samples().iter().all(|&v| (v - 77.0).abs() <= 1.0));
}
