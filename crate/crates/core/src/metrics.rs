//! PSNR and SSIM.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageTensor;

/// Mean of squared differences over all pixels and channels.
pub fn mse(a: &ImageTensor, b: &ImageTensor) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// `10 log10(peak^2 / mse)`; `f64::INFINITY` when the images are equal.
pub fn psnr(a: &ImageTensor, b: &ImageTensor, peak: f64) -> Result<f64> {
    if peak.is_nan() || peak <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "peak must be > 0, got {peak}"
        )));
    }
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / m).log10())
}

/// Gaussian-window SSIM settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub peak: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            peak: 1.0,
        }
    }
}

impl SsimParams {
    /// Normalized 1D Gaussian; the 2D window is its outer product.
    pub fn kernel(&self) -> Vec<f64> {
        let r = (self.window as f64 - 1.0) / 2.0;
        let w: Vec<f64> = (0..self.window)
            .map(|i| {
                let d = i as f64 - r;
                (-(d * d) / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect()
    }

    pub fn c1(&self) -> f64 {
        (self.k1 * self.peak).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.peak).powi(2)
    }
}

/// Valid-mode separable filtering of a plane with kernel `k`.
fn filter_valid(plane: &[f64], h: usize, w: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (oh, ow) = (h - n + 1, w - n + 1);
    let mut rows = vec![0.0; h * ow];
    for y in 0..h {
        let src = &plane[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = src[x..x + n].iter().zip(k).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|i| rows[(y + i) * ow + x] * k[i]).sum();
        }
    }
    out
}

/// Mean SSIM over all valid window positions, averaged over channels.
pub fn ssim(a: &ImageTensor, b: &ImageTensor, params: &SsimParams) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let (h, w, c) = a.shape();
    if params.window == 0 || h < params.window || w < params.window {
        return Err(Error::ImageTooSmall {
            height: h,
            width: w,
            min: params.window,
        });
    }
    let k = params.kernel();
    let (c1, c2) = (params.c1(), params.c2());
    let mut total = 0.0;
    for ch in 0..c {
        let (pa, pb) = (a.plane(ch), b.plane(ch));
        let aa: Vec<f64> = pa.iter().map(|v| v * v).collect();
        let bb: Vec<f64> = pb.iter().map(|v| v * v).collect();
        let ab: Vec<f64> = pa.iter().zip(pb).map(|(x, y)| x * y).collect();
        let mu_a = filter_valid(pa, h, w, &k);
        let mu_b = filter_valid(pb, h, w, &k);
        let e_aa = filter_valid(&aa, h, w, &k);
        let e_bb = filter_valid(&bb, h, w, &k);
        let e_ab = filter_valid(&ab, h, w, &k);
        let mut acc = 0.0;
        for i in 0..mu_a.len() {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = e_aa[i] - ma * ma;
            let vb = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        }
        total += acc / mu_a.len() as f64;
    }
    Ok(total / c as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise(h: usize, w: usize, c: usize, seed: u64) -> ImageTensor {
        let mut s = seed;
        ImageTensor::from_fn(h, w, c, |_, _, _| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64
        })
    }

    #[test]
    fn mse_examples() {
        let a = noise(5, 7, 3, 1);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        let b = ImageTensor::filled(4, 4, 1, 0.3);
        let b2 = b.map(|v| v + 0.1);
        assert!((mse(&b, &b2).unwrap() - 0.01).abs() < 1e-15);
        assert!(mse(&a, &b).is_err());
    }

    #[test]
    fn psnr_examples() {
        let a = ImageTensor::filled(8, 8, 3, 0.5);
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), f64::INFINITY);
        let b = ImageTensor::filled(8, 8, 3, 0.0);
        let b1 = ImageTensor::filled(8, 8, 3, 0.1);
        let p = psnr(&b, &b1, 1.0).unwrap();
        assert!((p - 20.0).abs() < 1e-12, "{p}");
        let b2 = ImageTensor::filled(8, 8, 3, 0.01);
        assert!((psnr(&b, &b2, 1.0).unwrap() - 40.0).abs() < 1e-12);
        assert!(psnr(&a, &b, 0.0).is_err());
    }

    #[test]
    fn kernel_sums_to_one() {
        let k = SsimParams::default().kernel();
        let s: f64 = k.iter().flat_map(|a| k.iter().map(move |b| a * b)).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ssim_examples() {
        let p = SsimParams::default();
        let a = noise(20, 24, 3, 7);
        assert!((ssim(&a, &a, &p).unwrap() - 1.0).abs() < 1e-12);
        let inv = a.map(|v| 1.0 - v);
        assert!(ssim(&a, &inv, &p).unwrap() < 1.0);
        let small = ImageTensor::zeros(10, 40, 1);
        assert!(matches!(
            ssim(&small, &small, &p),
            Err(Error::ImageTooSmall { .. })
        ));
    }
}
