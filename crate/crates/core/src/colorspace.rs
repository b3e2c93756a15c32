//! Mean-RGB grayscale and sRGB <-> CIE Lab (D65).

use pretext_forge_autograd::{Scalar, Tensor};

use crate::error::{Error, Result};
use crate::raster::RgbImage;

/// Single-channel image with values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

/// The a and b channels of CIE Lab stored as two planes (`[2, H, W]`).
///
/// Raw Lab units are clamped to `[-128, 127]`; [`AbImage::normalized`]
/// divides by 128 for use as a training target.
#[derive(Clone, Debug, PartialEq)]
pub struct AbImage<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

/// Lightness plane in `[0, 100]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LightnessImage<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

/// Divisor mapping Lab a/b units onto `[-1, 1)`.
pub const AB_SCALE: f64 = 128.0;
pub const AB_MIN: f64 = -128.0;
pub const AB_MAX: f64 = 127.0;

impl<T: Scalar> GrayImage<T> {
    pub fn to_tensor(&self) -> Tensor<T> {
        Tensor::from_vec(&[1, self.height, self.width], self.data.clone()).expect("shape")
    }
}

impl<T: Scalar> AbImage<T> {
    pub fn to_tensor(&self) -> Tensor<T> {
        Tensor::from_vec(&[2, self.height, self.width], self.data.clone()).expect("shape")
    }

    pub fn from_tensor(t: &Tensor<T>) -> Result<Self> {
        match t.shape() {
            &[2, h, w] => Ok(Self {
                width: w,
                height: h,
                data: t.data().to_vec(),
            }),
            s => Err(Error::Shape(format!(
                "ab tensor must be [2, H, W], got {s:?}"
            ))),
        }
    }

    /// Scales raw a/b units by `1 / 128`.
    pub fn normalized(&self) -> Self {
        let k = T::one() / T::lit(AB_SCALE);
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| v * k).collect(),
        }
    }

    /// Inverse of [`AbImage::normalized`].
    pub fn denormalized(&self) -> Self {
        let k = T::lit(AB_SCALE);
        let (lo, hi) = (T::lit(AB_MIN), T::lit(AB_MAX));
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| (v * k).max(lo).min(hi)).collect(),
        }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// `(R + G + B) / 3`, scaled to `[0, 1]`. The arithmetic mean, not luma.
pub fn to_grayscale<T: Scalar>(img: &RgbImage) -> GrayImage<T> {
    let three = T::lit(3.0);
    let full = T::lit(255.0);
    let data = img
        .as_raw()
        .chunks_exact(3)
        .map(|p| {
            let s = u32::from(p[0]) + u32::from(p[1]) + u32::from(p[2]);
            T::lit(f64::from(s)) / three / full
        })
        .collect();
    GrayImage {
        width: img.width(),
        height: img.height(),
        data,
    }
}

// sRGB primaries, D65.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

const EPSILON: f64 = 216.0 / 24389.0;
const KAPPA: f64 = 24389.0 / 27.0;

/// Reference white: the XYZ of RGB (1, 1, 1) under the matrix above, so
/// white lands exactly on L = 100, a = b = 0.
fn white() -> [f64; 3] {
    let m = RGB_TO_XYZ;
    [
        m[0][0] + m[0][1] + m[0][2],
        m[1][0] + m[1][1] + m[1][2],
        m[2][0] + m[2][1] + m[2][2],
    ]
}

fn xyz_to_rgb_matrix() -> [[f64; 3]; 3] {
    let m = RGB_TO_XYZ;
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let inv = 1.0 / det;
    [
        [
            (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv,
            (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv,
            (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv,
        ],
        [
            (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv,
            (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv,
            (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv,
        ],
        [
            (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv,
            (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv,
            (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv,
        ],
    ]
}

fn srgb_to_linear<T: Scalar>(c: T) -> T {
    if c <= T::lit(0.040_45) {
        c / T::lit(12.92)
    } else {
        ((c + T::lit(0.055)) / T::lit(1.055)).powf(T::lit(2.4))
    }
}

fn linear_to_srgb<T: Scalar>(c: T) -> T {
    if c <= T::lit(0.003_130_8) {
        c * T::lit(12.92)
    } else {
        T::lit(1.055) * c.powf(T::one() / T::lit(2.4)) - T::lit(0.055)
    }
}

fn lab_f<T: Scalar>(t: T) -> T {
    if t > T::lit(EPSILON) {
        t.cbrt()
    } else {
        (T::lit(KAPPA) * t + T::lit(16.0)) / T::lit(116.0)
    }
}

/// One pixel with channels in `[0, 1]` to `[L, a, b]`.
pub fn rgb_to_lab<T: Scalar>(rgb: [T; 3]) -> [T; 3] {
    let lin = rgb.map(srgb_to_linear);
    let w = white();
    let mut f = [T::zero(); 3];
    for (row, (m, wn)) in RGB_TO_XYZ.iter().zip(w).enumerate() {
        let xyz = T::lit(m[0]) * lin[0] + T::lit(m[1]) * lin[1] + T::lit(m[2]) * lin[2];
        f[row] = lab_f(xyz / T::lit(wn));
    }
    [
        T::lit(116.0) * f[1] - T::lit(16.0),
        T::lit(500.0) * (f[0] - f[1]),
        T::lit(200.0) * (f[1] - f[2]),
    ]
}

/// `[L, a, b]` to RGB in `[0, 1]`, clamping out-of-gamut values.
pub fn lab_to_rgb<T: Scalar>(lab: [T; 3]) -> [T; 3] {
    let [l, a, b] = lab;
    let fy = (l + T::lit(16.0)) / T::lit(116.0);
    let fx = fy + a / T::lit(500.0);
    let fz = fy - b / T::lit(200.0);
    let eps = T::lit(EPSILON);
    let kappa = T::lit(KAPPA);
    let inv_f = |f: T| {
        let f3 = f * f * f;
        if f3 > eps {
            f3
        } else {
            (T::lit(116.0) * f - T::lit(16.0)) / kappa
        }
    };
    let yr = if l > kappa * eps {
        fy * fy * fy
    } else {
        l / kappa
    };
    let w = white();
    let xyz = [
        inv_f(fx) * T::lit(w[0]),
        yr * T::lit(w[1]),
        inv_f(fz) * T::lit(w[2]),
    ];
    let m = xyz_to_rgb_matrix();
    let mut out = [T::zero(); 3];
    for (o, row) in out.iter_mut().zip(m) {
        let lin = T::lit(row[0]) * xyz[0] + T::lit(row[1]) * xyz[1] + T::lit(row[2]) * xyz[2];
        *o = linear_to_srgb(lin.max(T::zero()).min(T::one()))
            .max(T::zero())
            .min(T::one());
    }
    out
}

/// Converts an 8-bit image to its Lab planes. a and b are clamped to
/// `[-128, 127]`.
pub fn srgb_to_lab<T: Scalar>(img: &RgbImage) -> (LightnessImage<T>, AbImage<T>) {
    let plane = img.width() * img.height();
    let mut l = Vec::with_capacity(plane);
    let mut ab = vec![T::zero(); 2 * plane];
    let inv = T::one() / T::lit(255.0);
    let (lo, hi) = (T::lit(AB_MIN), T::lit(AB_MAX));
    for (i, p) in img.as_raw().chunks_exact(3).enumerate() {
        let rgb = [p[0], p[1], p[2]].map(|c| T::lit(f64::from(c)) * inv);
        let [ll, a, b] = rgb_to_lab(rgb);
        l.push(ll.max(T::zero()).min(T::lit(100.0)));
        ab[i] = a.max(lo).min(hi);
        ab[plane + i] = b.max(lo).min(hi);
    }
    (
        LightnessImage {
            width: img.width(),
            height: img.height(),
            data: l,
        },
        AbImage {
            width: img.width(),
            height: img.height(),
            data: ab,
        },
    )
}

/// Inverse of [`srgb_to_lab`], rounding to the nearest 8-bit value.
pub fn lab_to_srgb<T: Scalar>(l: &LightnessImage<T>, ab: &AbImage<T>) -> Result<RgbImage> {
    if l.width != ab.width || l.height != ab.height {
        return Err(Error::Shape(format!(
            "L plane {}x{} vs ab {}x{}",
            l.width, l.height, ab.width, ab.height
        )));
    }
    let plane = l.width * l.height;
    let mut out = Vec::with_capacity(plane * 3);
    for i in 0..plane {
        let rgb = lab_to_rgb([l.data[i], ab.data[i], ab.data[plane + i]]);
        for c in rgb {
            let v = (c * T::lit(255.0)).round().as_f64().clamp(0.0, 255.0);
            out.push(v as u8);
        }
    }
    RgbImage::from_raw(l.width, l.height, out)
}

/// Renders a grayscale input recolored with predicted (normalized) ab.
///
/// Lightness is taken from the gray image mapped through the Lab L of a
/// neutral pixel of the same intensity.
pub fn render_colorization<T: Scalar>(
    gray: &GrayImage<T>,
    ab_norm: &AbImage<T>,
) -> Result<RgbImage> {
    let l = LightnessImage {
        width: gray.width,
        height: gray.height,
        data: gray
            .data
            .iter()
            .map(|&g| rgb_to_lab([g, g, g])[0])
            .collect(),
    };
    lab_to_srgb(&l, &ab_norm.denormalized())
}
