use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pretext_forge_autograd::Scalar;

use super::codebook::PermutationCodebook;
use crate::colorspace::{srgb_to_lab, to_grayscale, AbImage, GrayImage};
use crate::error::{Error, Result};
use crate::raster::RgbImage;

/// Image rotated by `label * 90` degrees counter-clockwise.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationSample {
    pub image: RgbImage,
    pub label: usize,
}

/// Tiles in slot order; `tiles[slot]` is canonical tile `perm[slot]`.
#[derive(Clone, Debug, PartialEq)]
pub struct JigsawSample {
    pub tiles: Vec<RgbImage>,
    pub label: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ColorizationSample<T> {
    pub input: GrayImage<T>,
    /// Normalized ab target.
    pub target: AbImage<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CategorySample {
    pub image: RgbImage,
    pub label: usize,
}

/// Counter-clockwise rotation by `k * 90` degrees (`k` taken mod 4).
pub fn rotate_image(img: &RgbImage, k: usize) -> RgbImage {
    let mut cur = img.clone();
    for _ in 0..k % 4 {
        let (w, h) = (cur.width(), cur.height());
        let mut out = RgbImage::new(h, w);
        for y in 0..w {
            for x in 0..h {
                out.put(x, y, cur.get(w - 1 - y, x));
            }
        }
        cur = out;
    }
    cur
}

pub fn rotate(img: &RgbImage, k: usize) -> Result<RotationSample> {
    if k > 3 {
        return Err(Error::InvalidTarget {
            index: k,
            classes: 4,
        });
    }
    Ok(RotationSample {
        image: rotate_image(img, k),
        label: k,
    })
}

/// Geometry of the jigsaw cut: the image is resized to `canvas` square,
/// divided into `side * side` cells, and a `tile`-pixel square is taken from
/// each cell at its centered position plus jitter in `[-max_jitter, max_jitter]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JigsawGeometry {
    pub canvas: usize,
    pub side: usize,
    pub tile: usize,
    pub max_jitter: usize,
}

impl Default for JigsawGeometry {
    fn default() -> Self {
        Self {
            canvas: 234,
            side: 3,
            tile: 64,
            max_jitter: 7,
        }
    }
}

impl JigsawGeometry {
    pub fn cell(&self) -> usize {
        self.canvas / self.side
    }

    pub fn centered_offset(&self) -> usize {
        (self.cell() - self.tile) / 2
    }

    pub fn tile_count(&self) -> usize {
        self.side * self.side
    }

    pub fn validate(&self) -> Result<()> {
        let cell = self.canvas / self.side.max(1);
        if self.side == 0 || !self.canvas.is_multiple_of(self.side) || self.tile > cell {
            return Err(Error::Config(format!("invalid jigsaw geometry {self:?}")));
        }
        if self.centered_offset() < self.max_jitter
            || (cell - self.tile) - self.centered_offset() < self.max_jitter
        {
            return Err(Error::Config(format!(
                "jitter {} does not fit in cell slack for {self:?}",
                self.max_jitter
            )));
        }
        Ok(())
    }

    /// Tile origins (x, y) in canonical (row-major cell) order.
    pub fn tile_origins(&self, rng_seed: u64) -> Vec<(usize, usize)> {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let j = self.max_jitter as i64;
        let base = self.centered_offset() as i64;
        (0..self.tile_count())
            .map(|i| {
                let (r, c) = ((i / self.side) as i64, (i % self.side) as i64);
                let (jx, jy) = if j == 0 {
                    (0, 0)
                } else {
                    (rng.random_range(-j..=j), rng.random_range(-j..=j))
                };
                let cell = self.cell() as i64;
                (
                    (c * cell + base + jx) as usize,
                    (r * cell + base + jy) as usize,
                )
            })
            .collect()
    }

    /// Canonical tiles of an image already at `canvas` resolution.
    pub fn cut(&self, canvas: &RgbImage, rng_seed: u64) -> Vec<RgbImage> {
        self.tile_origins(rng_seed)
            .into_iter()
            .map(|(x, y)| canvas.crop(x, y, self.tile, self.tile))
            .collect()
    }
}

pub fn jigsaw(
    img: &RgbImage,
    perm_index: usize,
    rng_seed: u64,
    codebook: &PermutationCodebook,
) -> Result<JigsawSample> {
    jigsaw_with(
        img,
        perm_index,
        rng_seed,
        codebook,
        &JigsawGeometry::default(),
    )
}

pub fn jigsaw_with(
    img: &RgbImage,
    perm_index: usize,
    rng_seed: u64,
    codebook: &PermutationCodebook,
    geom: &JigsawGeometry,
) -> Result<JigsawSample> {
    geom.validate()?;
    if codebook.grid() != geom.tile_count() {
        return Err(Error::Config(format!(
            "codebook permutes {} tiles but the geometry cuts {}",
            codebook.grid(),
            geom.tile_count()
        )));
    }
    let perm = codebook.get(perm_index)?;
    let canvas = if img.width() == geom.canvas && img.height() == geom.canvas {
        img.clone()
    } else {
        img.resize_bilinear(geom.canvas, geom.canvas)
    };
    let canonical = geom.cut(&canvas, rng_seed);
    Ok(JigsawSample {
        tiles: perm
            .iter()
            .map(|&p| canonical[p as usize].clone())
            .collect(),
        label: perm_index,
    })
}

/// Restores canonical tile order from a jigsaw sample.
pub fn reassemble(sample: &JigsawSample, codebook: &PermutationCodebook) -> Result<Vec<RgbImage>> {
    let perm = codebook.get(sample.label)?;
    if perm.len() != sample.tiles.len() {
        return Err(Error::Shape(format!(
            "{} tiles for a {}-element permutation",
            sample.tiles.len(),
            perm.len()
        )));
    }
    let mut out: Vec<Option<RgbImage>> = vec![None; perm.len()];
    for (slot, &p) in perm.iter().enumerate() {
        out[p as usize] = Some(sample.tiles[slot].clone());
    }
    out.into_iter()
        .map(|t| t.ok_or_else(|| Error::Shape("permutation leaves a tile unfilled".into())))
        .collect()
}

/// Mean-RGB gray input and normalized ab target.
pub fn colorization_pair<T: Scalar>(img: &RgbImage) -> ColorizationSample<T> {
    let (_, ab) = srgb_to_lab::<T>(img);
    ColorizationSample {
        input: to_grayscale(img),
        target: ab.normalized(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn noise(w: usize, h: usize, seed: u64) -> RgbImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..w * h * 3).map(|_| rng.random::<u8>()).collect();
        RgbImage::from_raw(w, h, data).unwrap()
    }

    #[test]
    fn two_by_two_rotation() {
        let (a, b, c, d) = ([1, 1, 1], [2, 2, 2], [3, 3, 3], [4, 4, 4]);
        let mut img = RgbImage::new(2, 2);
        img.put(0, 0, a);
        img.put(1, 0, b);
        img.put(0, 1, c);
        img.put(1, 1, d);
        let r = rotate(&img, 1).unwrap().image;
        assert_eq!(
            [r.get(0, 0), r.get(1, 0), r.get(0, 1), r.get(1, 1)],
            [b, d, a, c]
        );
        assert_eq!(rotate(&img, 0).unwrap().image, img);
        assert!(rotate(&img, 4).is_err());
    }

    #[test]
    fn rotation_of_rectangle_swaps_dims() {
        let img = noise(5, 3, 1);
        let r = rotate_image(&img, 1);
        assert_eq!((r.width(), r.height()), (3, 5));
        for y in 0..5 {
            for x in 0..3 {
                assert_eq!(r.get(x, y), img.get(4 - y, x));
            }
        }
    }

    #[test]
    fn jigsaw_shapes_and_determinism() {
        let cb = PermutationCodebook::build(10, 9).unwrap();
        let img = noise(50, 40, 2);
        let a = jigsaw(&img, 7, 99, &cb).unwrap();
        assert_eq!(a.tiles.len(), 9);
        assert!(a.tiles.iter().all(|t| t.width() == 64 && t.height() == 64));
        assert_eq!(a, jigsaw(&img, 7, 99, &cb).unwrap());
        assert_ne!(a, jigsaw(&img, 7, 100, &cb).unwrap());
        assert!(jigsaw(&img, 10, 0, &cb).is_err());
    }

    #[test]
    fn jitter_stays_in_range() {
        let g = JigsawGeometry::default();
        let mut seen = std::collections::BTreeSet::new();
        for seed in 0..200 {
            for (i, (x, y)) in g.tile_origins(seed).into_iter().enumerate() {
                let (cx, cy) = ((i % 3) * 78 + 7, (i / 3) * 78 + 7);
                let (dx, dy) = (x as i64 - cx as i64, y as i64 - cy as i64);
                assert!(dx.abs() <= 7 && dy.abs() <= 7);
                seen.insert(dx);
            }
        }
        assert_eq!(seen.len(), 15);
    }

    #[test]
    fn geometry_validation() {
        assert!(JigsawGeometry::default().validate().is_ok());
        let tight = JigsawGeometry {
            canvas: 224,
            side: 3,
            tile: 64,
            max_jitter: 7,
        };
        assert!(tight.validate().is_err());
    }

    #[test]
    fn colorization_of_gray_and_white() {
        let gray = RgbImage::filled(4, 4, [90, 90, 90]);
        let s = colorization_pair::<f64>(&gray);
        assert!(s.target.data.iter().all(|v| (v * 128.0).abs() < 0.01));
        let white = colorization_pair::<f64>(&RgbImage::filled(3, 2, [255; 3]));
        assert!(white.input.data.iter().all(|&v| v == 1.0));
        assert_eq!((white.target.width, white.target.height), (3, 2));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn rotations_compose(seed in any::<u64>(), w in 1usize..9, h in 1usize..9, a in 0usize..4, b in 0usize..4) {
            let img = noise(w, h, seed);
            prop_assert_eq!(rotate_image(&rotate_image(&img, a), b), rotate_image(&img, a + b));
        }
    }
}
