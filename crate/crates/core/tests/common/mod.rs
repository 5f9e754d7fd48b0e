//! Test-only oracles and input generators. Nothing here calls into the
//! fast transform, pooling or gradient code it is used to check.
#![allow(dead_code)]

use floss_core::spectral::reference::{naive_dct2, naive_dft2};
use floss_core::ImageTensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(rng: &mut ChaCha8Rng, h: usize, w: usize, c: usize) -> ImageTensor {
    ImageTensor::from_fn(h, w, c, |_, _, _| rng.random::<f64>())
}

/// Mean over each 2x2 block, written as an explicit four-term loop.
pub fn pool_oracle(img: &ImageTensor) -> ImageTensor {
    let (h, w, c) = img.shape();
    ImageTensor::from_fn(h / 2, w / 2, c, |ch, y, x| {
        let mut s = 0.0;
        for dy in 0..2 {
            for dx in 0..2 {
                s += img.get(ch, 2 * y + dy, 2 * x + dx);
            }
        }
        s / 4.0
    })
}

/// Frequency term of one level from the brute-force transforms, computed
/// as `|T(a) - T(b)|` rather than `|T(a - b)|`.
pub fn level_oracle(a: &ImageTensor, b: &ImageTensor, fft: bool) -> Vec<f64> {
    let (h, w, c) = a.shape();
    (0..c)
        .map(|ch| {
            let (pa, pb) = (a.channel(ch), b.channel(ch));
            let sum: f64 = if fft {
                let (sa, sb) = (naive_dft2(&pa).unwrap(), naive_dft2(&pb).unwrap());
                sa.coeffs
                    .iter()
                    .zip(&sb.coeffs)
                    .map(|(x, y)| (x - y).norm())
                    .sum()
            } else {
                let (sa, sb) = (naive_dct2(&pa).unwrap(), naive_dct2(&pb).unwrap());
                sa.coeffs
                    .iter()
                    .zip(&sb.coeffs)
                    .map(|(x, y)| (x - y).abs())
                    .sum()
            };
            sum / (h * w) as f64
        })
        .collect()
}

/// `l1 + lambda * sum_levels mean_channels level_oracle`.
pub fn multi_scale_oracle(
    a: &ImageTensor,
    b: &ImageTensor,
    scales: usize,
    fft: bool,
    lambda: f64,
    include_l1: bool,
) -> f64 {
    let (mut la, mut lb) = (a.clone(), b.clone());
    let mut freq = 0.0;
    for k in 0..scales {
        if k > 0 {
            la = pool_oracle(&la);
            lb = pool_oracle(&lb);
        }
        let per = level_oracle(&la, &lb, fft);
        freq += per.iter().sum::<f64>() / per.len() as f64;
    }
    let l1 = if include_l1 {
        a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x - y).abs())
            .sum::<f64>()
            / a.data().len() as f64
    } else {
        0.0
    };
    l1 + lambda * freq
}

/// Smallest `|coefficient difference|` over all levels and channels, and the
/// smallest pixel difference, using the brute-force transforms.
pub fn min_kink_distance(a: &ImageTensor, b: &ImageTensor, scales: usize, fft: bool) -> f64 {
    let mut m = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(f64::INFINITY, f64::min);
    let (mut la, mut lb) = (a.clone(), b.clone());
    for k in 0..scales {
        if k > 0 {
            la = pool_oracle(&la);
            lb = pool_oracle(&lb);
        }
        for ch in 0..a.channels() {
            let (pa, pb) = (la.channel(ch), lb.channel(ch));
            let d = if fft {
                let (sa, sb) = (naive_dft2(&pa).unwrap(), naive_dft2(&pb).unwrap());
                sa.coeffs
                    .iter()
                    .zip(&sb.coeffs)
                    .map(|(x, y)| (x - y).norm())
                    .fold(f64::INFINITY, f64::min)
            } else {
                let (sa, sb) = (naive_dct2(&pa).unwrap(), naive_dct2(&pb).unwrap());
                sa.coeffs
                    .iter()
                    .zip(&sb.coeffs)
                    .map(|(x, y)| (x - y).abs())
                    .fold(f64::INFINITY, f64::min)
            };
            m = m.min(d);
        }
    }
    m
}

/// Zero-padded 3x3 correlation by direct indexing, `out = g (k * in) + b`.
pub fn conv_oracle(
    img: &ImageTensor,
    gain: &[f64],
    bias: &[f64],
    kernel: &[f64; 9],
) -> ImageTensor {
    let (h, w, c) = img.shape();
    ImageTensor::from_fn(h, w, c, |ch, y, x| {
        let mut acc = 0.0;
        for ky in 0..3 {
            for kx in 0..3 {
                let (yy, xx) = (y as isize + ky as isize - 1, x as isize + kx as isize - 1);
                if yy >= 0 && xx >= 0 && (yy as usize) < h && (xx as usize) < w {
                    acc += kernel[ky * 3 + kx] * img.get(ch, yy as usize, xx as usize);
                }
            }
        }
        gain[ch] * acc + bias[ch]
    })
}
