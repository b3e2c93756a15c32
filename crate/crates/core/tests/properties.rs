use pretext_forge::colorspace::{lab_to_srgb, srgb_to_lab};
use pretext_forge::pretext::{jigsaw_with, reassemble, JigsawGeometry, PermutationCodebook};
use pretext_forge::raster::RgbImage;
use proptest::prelude::*;

fn codebook() -> &'static PermutationCodebook {
    static CB: std::sync::OnceLock<PermutationCodebook> = std::sync::OnceLock::new();
    CB.get_or_init(|| PermutationCodebook::build(30, 9).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lab_round_trip_within_one_level(pixels in proptest::collection::vec(any::<u8>(), 3..300)) {
        let n = pixels.len() / 3;
        let img = RgbImage::from_raw(n, 1, pixels[..n * 3].to_vec()).unwrap();
        let (l, ab) = srgb_to_lab::<f64>(&img);
        let back = lab_to_srgb(&l, &ab).unwrap();
        for (a, b) in img.as_raw().iter().zip(back.as_raw()) {
            prop_assert!(a.abs_diff(*b) <= 1);
        }
    }

    #[test]
    fn jigsaw_reassembles_to_canonical_tiles(
        seed in any::<u64>(),
        index in 0usize..30,
        fill in any::<u64>(),
        jitter in 0usize..4,
    ) {
        let geom = JigsawGeometry { canvas: 48, side: 3, tile: 8, max_jitter: jitter };
        let data: Vec<u8> = (0..48 * 48 * 3).map(|i| (fill.wrapping_mul(i as u64 + 1) >> 29) as u8).collect();
        let img = RgbImage::from_raw(48, 48, data).unwrap();
        let sample = jigsaw_with(&img, index, seed, codebook(), &geom).unwrap();
        prop_assert_eq!(sample.label, index);
        prop_assert_eq!(reassemble(&sample, codebook()).unwrap(), geom.cut(&img, seed));
    }
}
