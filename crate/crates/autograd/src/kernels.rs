//! Raw single-image kernels used by the tape.

use crate::scalar::{axpy, dot, sum, Scalar};

/// Geometry of a 2-D convolution over one `[C, H, W]` image.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeom {
    pub in_c: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub out_c: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
}

impl ConvGeom {
    pub fn out_h(&self) -> usize {
        (self.in_h + 2 * self.pad - self.k) / self.stride + 1
    }

    pub fn out_w(&self) -> usize {
        (self.in_w + 2 * self.pad - self.k) / self.stride + 1
    }

    fn rows(&self) -> usize {
        self.in_c * self.k * self.k
    }

    fn cols(&self) -> usize {
        self.out_h() * self.out_w()
    }
}

fn im2col<T: Scalar>(g: &ConvGeom, x: &[T], out: &mut [T]) {
    let (oh, ow) = (g.out_h(), g.out_w());
    let p = oh * ow;
    for c in 0..g.in_c {
        for ky in 0..g.k {
            for kx in 0..g.k {
                let row = (c * g.k + ky) * g.k + kx;
                let dst = &mut out[row * p..(row + 1) * p];
                for oy in 0..oh {
                    let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                    let line = &mut dst[oy * ow..(oy + 1) * ow];
                    if iy < 0 || iy >= g.in_h as isize {
                        line.fill(T::zero());
                        continue;
                    }
                    let src = &x[(c * g.in_h + iy as usize) * g.in_w..][..g.in_w];
                    for (ox, v) in line.iter_mut().enumerate() {
                        let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                        *v = if ix < 0 || ix >= g.in_w as isize {
                            T::zero()
                        } else {
                            src[ix as usize]
                        };
                    }
                }
            }
        }
    }
}

fn col2im<T: Scalar>(g: &ConvGeom, cols: &[T], dx: &mut [T]) {
    let (oh, ow) = (g.out_h(), g.out_w());
    let p = oh * ow;
    for c in 0..g.in_c {
        for ky in 0..g.k {
            for kx in 0..g.k {
                let row = (c * g.k + ky) * g.k + kx;
                let src = &cols[row * p..(row + 1) * p];
                for oy in 0..oh {
                    let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                    if iy < 0 || iy >= g.in_h as isize {
                        continue;
                    }
                    let dst = &mut dx[(c * g.in_h + iy as usize) * g.in_w..][..g.in_w];
                    for ox in 0..ow {
                        let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                        if ix >= 0 && (ix as usize) < g.in_w {
                            dst[ix as usize] = dst[ix as usize] + src[oy * ow + ox];
                        }
                    }
                }
            }
        }
    }
}

/// `out[o] = b[o] + sum_r w[o, r] * cols[r]`
pub fn conv2d_forward<T: Scalar>(g: &ConvGeom, x: &[T], w: &[T], b: &[T]) -> Vec<T> {
    let (rows, p) = (g.rows(), g.cols());
    let mut cols = vec![T::zero(); rows * p];
    im2col(g, x, &mut cols);
    let mut out = vec![T::zero(); g.out_c * p];
    for o in 0..g.out_c {
        let dst = &mut out[o * p..(o + 1) * p];
        dst.fill(b[o]);
        let wrow = &w[o * rows..(o + 1) * rows];
        for (r, &wv) in wrow.iter().enumerate() {
            if wv != T::zero() {
                axpy(wv, &cols[r * p..(r + 1) * p], dst);
            }
        }
    }
    out
}

/// Accumulates weight/bias gradients and, when `dx` is given, the input
/// gradient.
pub fn conv2d_backward<T: Scalar>(
    g: &ConvGeom,
    x: &[T],
    w: &[T],
    dout: &[T],
    dw: &mut [T],
    db: &mut [T],
    dx: Option<&mut [T]>,
) {
    let (rows, p) = (g.rows(), g.cols());
    let mut cols = vec![T::zero(); rows * p];
    im2col(g, x, &mut cols);
    for o in 0..g.out_c {
        let go = &dout[o * p..(o + 1) * p];
        db[o] = db[o] + sum(go);
        let dwrow = &mut dw[o * rows..(o + 1) * rows];
        for (r, d) in dwrow.iter_mut().enumerate() {
            *d = *d + dot(go, &cols[r * p..(r + 1) * p]);
        }
    }
    if let Some(dx) = dx {
        // reuse the buffer for d(cols)
        cols.fill(T::zero());
        for o in 0..g.out_c {
            let go = &dout[o * p..(o + 1) * p];
            let wrow = &w[o * rows..(o + 1) * rows];
            for (r, &wv) in wrow.iter().enumerate() {
                if wv != T::zero() {
                    axpy(wv, go, &mut cols[r * p..(r + 1) * p]);
                }
            }
        }
        col2im(g, &cols, dx);
    }
}

/// Nearest-neighbour 2x upsampling of `[C, H, W]`.
pub fn upsample2x<T: Scalar>(c: usize, h: usize, w: usize, x: &[T]) -> Vec<T> {
    let (oh, ow) = (2 * h, 2 * w);
    let mut out = vec![T::zero(); c * oh * ow];
    for ch in 0..c {
        for y in 0..oh {
            let src = &x[(ch * h + y / 2) * w..][..w];
            let dst = &mut out[(ch * oh + y) * ow..][..ow];
            for (xo, v) in dst.iter_mut().enumerate() {
                *v = src[xo / 2];
            }
        }
    }
    out
}

pub fn upsample2x_backward<T: Scalar>(c: usize, h: usize, w: usize, dout: &[T], dx: &mut [T]) {
    let (oh, ow) = (2 * h, 2 * w);
    for ch in 0..c {
        for y in 0..oh {
            let src = &dout[(ch * oh + y) * ow..][..ow];
            let dst = &mut dx[(ch * h + y / 2) * w..][..w];
            for (xo, &v) in src.iter().enumerate() {
                dst[xo / 2] = dst[xo / 2] + v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_conv(g: &ConvGeom, x: &[f64], w: &[f64], b: &[f64]) -> Vec<f64> {
        let (oh, ow) = (g.out_h(), g.out_w());
        let mut out = vec![0.0; g.out_c * oh * ow];
        for o in 0..g.out_c {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = b[o];
                    for c in 0..g.in_c {
                        for ky in 0..g.k {
                            for kx in 0..g.k {
                                let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                                let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                                if iy >= 0
                                    && ix >= 0
                                    && (iy as usize) < g.in_h
                                    && (ix as usize) < g.in_w
                                {
                                    acc += w[((o * g.in_c + c) * g.k + ky) * g.k + kx]
                                        * x[(c * g.in_h + iy as usize) * g.in_w + ix as usize];
                                }
                            }
                        }
                    }
                    out[(o * oh + oy) * ow + ox] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn conv_matches_direct_loop() {
        for &(stride, pad) in &[(1, 1), (2, 1), (1, 0), (2, 0)] {
            let g = ConvGeom {
                in_c: 2,
                in_h: 7,
                in_w: 6,
                out_c: 3,
                k: 3,
                stride,
                pad,
            };
            let x: Vec<f64> = (0..2 * 7 * 6)
                .map(|i| ((i * 7) % 11) as f64 - 5.0)
                .collect();
            let w: Vec<f64> = (0..3 * 2 * 9)
                .map(|i| ((i * 5) % 7) as f64 * 0.1 - 0.3)
                .collect();
            let b = vec![0.5, -0.25, 1.0];
            let fast = conv2d_forward(&g, &x, &w, &b);
            let slow = naive_conv(&g, &x, &w, &b);
            for (a, e) in fast.iter().zip(&slow) {
                assert!((a - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn upsample_round_trip_sums() {
        let x = vec![1.0f64, 2.0, 3.0, 4.0];
        let up = upsample2x(1, 2, 2, &x);
        assert_eq!(up.len(), 16);
        assert_eq!(&up[0..4], &[1.0, 1.0, 2.0, 2.0]);
        let mut dx = vec![0.0; 4];
        upsample2x_backward(1, 2, 2, &[1.0; 16], &mut dx);
        assert_eq!(dx, vec![4.0; 4]);
    }
}
