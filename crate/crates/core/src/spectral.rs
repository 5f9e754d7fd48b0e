//! 2D transforms over single image planes.
//!
//! * [`dct2`] / [`idct2`]: separable orthonormal DCT-II and its inverse
//!   (DCT-III). Orthonormality makes the inverse equal to the transpose, so
//!   `idct2` is also the adjoint used when back-propagating through `dct2`.
//! * [`fft2`]: unnormalized forward DFT, `X(u,v) = sum x(m,n) e^{-2 pi i (um/M + vn/N)}`,
//!   full `M x N` spectrum. [`dft2_adjoint`] is the unnormalized inverse,
//!   which is the adjoint of `fft2` under the real inner product.
//!
//! All sizes are supported; rustfft picks mixed-radix or Bluestein plans.
//! The 1D DCT uses Makhoul's even/odd reordering so a length-`N` DCT costs
//! one length-`N` complex FFT.
//!
//! [`reference`] holds direct-summation versions used as test oracles.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::image::ImageTensor;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction))
}

/// Real DCT coefficients of one plane, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSpectrum {
    pub height: usize,
    pub width: usize,
    pub coeffs: Vec<f64>,
}

impl RealSpectrum {
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.coeffs[u * self.width + v]
    }
}

/// Full complex DFT spectrum of one plane, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum {
    pub height: usize,
    pub width: usize,
    pub coeffs: Vec<Complex64>,
}

impl ComplexSpectrum {
    pub fn get(&self, u: usize, v: usize) -> Complex64 {
        self.coeffs[u * self.width + v]
    }
}

fn single_plane(plane: &ImageTensor) -> Result<(usize, usize, &[f64])> {
    if plane.channels() != 1 {
        return Err(Error::InvalidConfig(format!(
            "expected a single-channel plane, got {} channels",
            plane.channels()
        )));
    }
    Ok((plane.height(), plane.width(), plane.data()))
}

/// Orthonormal 2D DCT-II of a single-channel image.
pub fn dct2(plane: &ImageTensor) -> Result<RealSpectrum> {
    let (h, w, data) = single_plane(plane)?;
    Ok(dct2_plane(h, w, data))
}

/// Inverse of [`dct2`], returned as a single-channel image.
pub fn idct2(spec: &RealSpectrum) -> ImageTensor {
    let data = idct2_plane(spec.height, spec.width, &spec.coeffs);
    ImageTensor::new(spec.height, spec.width, 1, data).expect("spectrum dimensions are valid")
}

/// Unnormalized 2D DFT of a single-channel image.
pub fn fft2(plane: &ImageTensor) -> Result<ComplexSpectrum> {
    let (h, w, data) = single_plane(plane)?;
    Ok(fft2_plane(h, w, data))
}

pub fn dct2_plane(height: usize, width: usize, data: &[f64]) -> RealSpectrum {
    assert_eq!(data.len(), height * width);
    let mut buf = data.to_vec();
    separable(&mut buf, height, width, |rows, n| {
        Dct1d::new(n).forward(rows)
    });
    RealSpectrum {
        height,
        width,
        coeffs: buf,
    }
}

pub fn idct2_plane(height: usize, width: usize, coeffs: &[f64]) -> Vec<f64> {
    assert_eq!(coeffs.len(), height * width);
    let mut buf = coeffs.to_vec();
    separable(&mut buf, height, width, |rows, n| {
        Dct1d::new(n).inverse(rows)
    });
    buf
}

pub fn fft2_plane(height: usize, width: usize, data: &[f64]) -> ComplexSpectrum {
    assert_eq!(data.len(), height * width);
    let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    complex_2d(&mut buf, height, width, FftDirection::Forward);
    ComplexSpectrum {
        height,
        width,
        coeffs: buf,
    }
}

/// Unnormalized inverse DFT, `y(m,n) = sum X(u,v) e^{+2 pi i (um/M + vn/N)}`.
///
/// For real `x` and complex `g`, `Re<fft2(x), g> = <x, Re(dft2_adjoint(g))>`.
pub fn dft2_adjoint(spec: &ComplexSpectrum) -> Vec<Complex64> {
    let mut buf = spec.coeffs.clone();
    complex_2d(&mut buf, spec.height, spec.width, FftDirection::Inverse);
    buf
}

fn complex_2d(buf: &mut [Complex64], h: usize, w: usize, dir: FftDirection) {
    if w > 1 {
        plan(w, dir).process(buf);
    }
    if h > 1 {
        let mut t = transpose(buf, h, w);
        plan(h, dir).process(&mut t);
        buf.copy_from_slice(&transpose(&t, w, h));
    }
}

/// Applies a batched 1D transform along rows, then along columns.
fn separable(buf: &mut [f64], h: usize, w: usize, mut f: impl FnMut(&mut [f64], usize)) {
    f(buf, w);
    let mut t = transpose(buf, h, w);
    f(&mut t, h);
    buf.copy_from_slice(&transpose(&t, w, h));
}

fn transpose<T: Copy>(src: &[T], h: usize, w: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(src.len());
    for x in 0..w {
        for y in 0..h {
            out.push(src[y * w + x]);
        }
    }
    out
}

/// Length-`n` orthonormal DCT-II via one complex FFT (Makhoul).
struct Dct1d {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    // e^{-i pi k / 2n}
    twiddles: Vec<Complex64>,
    scales: Vec<f64>,
}

impl Dct1d {
    fn new(n: usize) -> Self {
        let twiddles = (0..n)
            .map(|k| {
                let (s, c) = (PI * k as f64 / (2 * n) as f64).sin_cos();
                Complex64::new(c, -s)
            })
            .collect();
        let scales = (0..n)
            .map(|k| {
                if k == 0 {
                    (1.0 / n as f64).sqrt()
                } else {
                    (2.0 / n as f64).sqrt()
                }
            })
            .collect();
        Self {
            n,
            forward: plan(n, FftDirection::Forward),
            inverse: plan(n, FftDirection::Inverse),
            twiddles,
            scales,
        }
    }

    /// Transforms each consecutive length-`n` chunk in place.
    fn forward(&self, rows: &mut [f64]) {
        let n = self.n;
        let half = n.div_ceil(2);
        let mut v = vec![Complex64::new(0.0, 0.0); rows.len()];
        for (row, out) in rows.chunks_exact(n).zip(v.chunks_exact_mut(n)) {
            for i in 0..half {
                out[i].re = row[2 * i];
            }
            for i in 0..n / 2 {
                out[n - 1 - i].re = row[2 * i + 1];
            }
        }
        self.forward.process(&mut v);
        for (row, spec) in rows.chunks_exact_mut(n).zip(v.chunks_exact(n)) {
            for k in 0..n {
                row[k] = self.scales[k] * (self.twiddles[k] * spec[k]).re;
            }
        }
    }

    fn inverse(&self, rows: &mut [f64]) {
        let n = self.n;
        let half = n.div_ceil(2);
        let inv_n = 1.0 / n as f64;
        let mut v = vec![Complex64::new(0.0, 0.0); rows.len()];
        for (row, out) in rows.chunks_exact(n).zip(v.chunks_exact_mut(n)) {
            for k in 0..n {
                let xk = row[k] / self.scales[k];
                let xnk = if k == 0 {
                    0.0
                } else {
                    row[n - k] / self.scales[n - k]
                };
                out[k] = self.twiddles[k].conj() * Complex64::new(xk, -xnk);
            }
        }
        self.inverse.process(&mut v);
        for (row, sig) in rows.chunks_exact_mut(n).zip(v.chunks_exact(n)) {
            for i in 0..half {
                row[2 * i] = sig[i].re * inv_n;
            }
            for i in 0..n / 2 {
                row[2 * i + 1] = sig[n - 1 - i].re * inv_n;
            }
        }
    }
}

/// Direct evaluation of the defining sums. `O(M^2 N^2)`; for tests and
/// small planes only.
pub mod reference {
    use std::f64::consts::PI;

    use rustfft::num_complex::Complex64;

    use super::{single_plane, ComplexSpectrum, RealSpectrum};
    use crate::error::Result;
    use crate::image::ImageTensor;

    pub fn naive_dct2(plane: &ImageTensor) -> Result<RealSpectrum> {
        let (h, w, x) = single_plane(plane)?;
        let scale = |k: usize, n: usize| {
            if k == 0 {
                (1.0 / n as f64).sqrt()
            } else {
                (2.0 / n as f64).sqrt()
            }
        };
        let mut coeffs = vec![0.0; h * w];
        for u in 0..h {
            for v in 0..w {
                let mut acc = 0.0;
                for m in 0..h {
                    let cu = (PI * ((2 * m + 1) * u) as f64 / (2 * h) as f64).cos();
                    for n in 0..w {
                        let cv = (PI * ((2 * n + 1) * v) as f64 / (2 * w) as f64).cos();
                        acc += x[m * w + n] * cu * cv;
                    }
                }
                coeffs[u * w + v] = scale(u, h) * scale(v, w) * acc;
            }
        }
        Ok(RealSpectrum {
            height: h,
            width: w,
            coeffs,
        })
    }

    pub fn naive_dft2(plane: &ImageTensor) -> Result<ComplexSpectrum> {
        let (h, w, x) = single_plane(plane)?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); h * w];
        for u in 0..h {
            for v in 0..w {
                let mut acc = Complex64::new(0.0, 0.0);
                for m in 0..h {
                    for n in 0..w {
                        // reduce the phase exactly in integers first
                        let phase =
                            ((u * m) % h) as f64 / h as f64 + ((v * n) % w) as f64 / w as f64;
                        let (s, c) = (-2.0 * PI * phase).sin_cos();
                        acc += Complex64::new(c, s) * x[m * w + n];
                    }
                }
                coeffs[u * w + v] = acc;
            }
        }
        Ok(ComplexSpectrum {
            height: h,
            width: w,
            coeffs,
        })
    }
}
