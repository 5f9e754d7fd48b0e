//! Multi-scale frequency loss, its L1 combination, the masked variant and
//! analytic subgradients.
//!
//! For one resolution level with `rows x cols` pixels the per-channel term is
//!
//! ```text
//! L = (1 / (rows * cols)) * sum_{u,v} |T(I1)(u,v) - T(I2)(u,v)|
//! ```
//!
//! where `T` is the orthonormal DCT-II (real absolute value) or the
//! unnormalized DFT (complex modulus of the difference). The multi-scale
//! frequency term sums `L` over the full image and `scales - 1` successive
//! 2x mean-pooled copies, then averages over channels:
//!
//! ```text
//! total = l1 + lambda * sum_k mean_c L_k,c
//! ```
//!
//! The subgradient of `|z|` at `z = 0` is taken as 0, so the gradient at
//! `I1 == I2` is exactly zero.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{build_pyramid, downsample2x_adjoint, ImageTensor};
use crate::spectral::{dct2_plane, dft2_adjoint, fft2_plane, idct2_plane, ComplexSpectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Dct,
    Fft,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Dct => "dct",
            Variant::Fft => "fft",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dct" => Ok(Variant::Dct),
            "fft" => Ok(Variant::Fft),
            other => Err(Error::InvalidConfig(format!("unknown variant {other:?}"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub variant: Variant,
    /// Number of pyramid levels (resolution divisors 1, 2, 4, ...).
    pub scales: usize,
    /// Weight of the frequency term against L1.
    pub lambda: f64,
    pub include_l1: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Dct,
            scales: 3,
            lambda: 1.0,
            include_l1: true,
        }
    }
}

impl LossConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    /// Frequency term only, no L1.
    pub fn frequency_only(variant: Variant, scales: usize) -> Self {
        Self {
            variant,
            scales,
            lambda: 1.0,
            include_l1: false,
        }
    }

    /// Pure L1 (frequency weight zero).
    pub fn l1_only() -> Self {
        Self {
            lambda: 0.0,
            ..Self::default()
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_scales(mut self, scales: usize) -> Self {
        self.scales = scales;
        self
    }

    pub fn with_l1(mut self, include_l1: bool) -> Self {
        self.include_l1 = include_l1;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.scales == 0 {
            return Err(Error::InvalidConfig("scales must be >= 1".into()));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    /// Side lengths must be multiples of this.
    pub fn required_multiple(&self) -> usize {
        1 << (self.scales.max(1) - 1)
    }

    fn freq_active(&self) -> bool {
        self.lambda != 0.0
    }
}

/// Loss of one pyramid level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleLoss {
    /// Resolution divisor of this level (1, 2, 4, ...).
    pub scale: usize,
    pub per_channel: Vec<f64>,
    /// Channel mean of `per_channel`.
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub total: f64,
    pub l1_term: f64,
    pub freq_term: f64,
    pub per_scale: Vec<ScaleLoss>,
}

impl LossReport {
    fn combine(a: &LossReport, b: &LossReport, lambda: f64) -> LossReport {
        let per_scale: Vec<ScaleLoss> = a
            .per_scale
            .iter()
            .zip(&b.per_scale)
            .map(|(x, y)| {
                let per_channel: Vec<f64> = x
                    .per_channel
                    .iter()
                    .zip(&y.per_channel)
                    .map(|(p, q)| p + q)
                    .collect();
                ScaleLoss {
                    scale: x.scale,
                    mean: channel_mean(&per_channel),
                    per_channel,
                }
            })
            .collect();
        let l1_term = a.l1_term + b.l1_term;
        let freq_term = per_scale.iter().map(|s| s.mean).sum();
        LossReport {
            total: l1_term + lambda * freq_term,
            l1_term,
            freq_term,
            per_scale,
        }
    }
}

/// `d total / d I1`, same shape as the prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBuffer(ImageTensor);

impl GradientBuffer {
    pub fn as_image(&self) -> &ImageTensor {
        &self.0
    }

    pub fn into_image(self) -> ImageTensor {
        self.0
    }

    pub fn data(&self) -> &[f64] {
        self.0.data()
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.0.shape()
    }
}

impl From<ImageTensor> for GradientBuffer {
    fn from(img: ImageTensor) -> Self {
        Self(img)
    }
}

/// Spatial weighting mask with values in `[0, 1]`, shared by all channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl Mask {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::ShapeMismatch {
                left: (height, width, 1),
                right: (values.len(), 1, 1),
            });
        }
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidConfig(format!(
                "mask value {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn check(&self, img: &ImageTensor) -> Result<()> {
        if (self.height, self.width) != (img.height(), img.width()) {
            return Err(Error::ShapeMismatch {
                left: (self.height, self.width, 1),
                right: img.shape(),
            });
        }
        Ok(())
    }

    fn apply(&self, img: &ImageTensor, complement: bool) -> ImageTensor {
        let mut out = img.clone();
        for c in 0..img.channels() {
            for (v, &m) in out.plane_mut(c).iter_mut().zip(&self.values) {
                *v *= if complement { 1.0 - m } else { m };
            }
        }
        out
    }
}

fn channel_mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn phase(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        z / r
    }
}

/// Mean absolute coefficient difference of one plane pair, with the
/// gradient w.r.t. `a` if requested.
fn plane_term(
    variant: Variant,
    h: usize,
    w: usize,
    a: &[f64],
    b: &[f64],
    want_grad: bool,
) -> (f64, Option<Vec<f64>>) {
    let n = (h * w) as f64;
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    match variant {
        Variant::Dct => {
            let spec = dct2_plane(h, w, &diff);
            let loss = spec.coeffs.iter().map(|c| c.abs()).sum::<f64>() / n;
            let grad = want_grad.then(|| {
                let signs: Vec<f64> = spec.coeffs.iter().map(|&c| sign(c)).collect();
                let mut g = idct2_plane(h, w, &signs);
                g.iter_mut().for_each(|v| *v /= n);
                g
            });
            (loss, grad)
        }
        Variant::Fft => {
            let spec = fft2_plane(h, w, &diff);
            let loss = spec.coeffs.iter().map(|c| c.norm()).sum::<f64>() / n;
            let grad = want_grad.then(|| {
                let phases = ComplexSpectrum {
                    height: h,
                    width: w,
                    coeffs: spec.coeffs.iter().map(|&c| phase(c)).collect(),
                };
                dft2_adjoint(&phases).iter().map(|z| z.re / n).collect()
            });
            (loss, grad)
        }
    }
}

/// Per-channel frequency loss between two images at their own resolution.
pub fn single_scale_loss(i1: &ImageTensor, i2: &ImageTensor, variant: Variant) -> Result<Vec<f64>> {
    i1.ensure_same_shape(i2)?;
    let (h, w, c) = i1.shape();
    Ok((0..c)
        .map(|ch| plane_term(variant, h, w, i1.plane(ch), i2.plane(ch), false).0)
        .collect())
}

fn check_inputs(i1: &ImageTensor, i2: &ImageTensor, config: &LossConfig) -> Result<()> {
    config.validate()?;
    i1.ensure_same_shape(i2)?;
    let m = config.required_multiple();
    if !i1.height().is_multiple_of(m) || !i1.width().is_multiple_of(m) {
        return Err(Error::OddDimension {
            height: i1.height(),
            width: i1.width(),
        });
    }
    Ok(())
}

fn evaluate(
    i1: &ImageTensor,
    i2: &ImageTensor,
    config: &LossConfig,
    want_grad: bool,
) -> Result<(LossReport, Option<ImageTensor>)> {
    check_inputs(i1, i2, config)?;
    let (h, w, c) = i1.shape();
    let count = (h * w * c) as f64;

    let (l1_term, mut grad) = if config.include_l1 {
        let l1 = i1
            .data()
            .iter()
            .zip(i2.data())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / count;
        let g = want_grad.then(|| {
            i1.zip_map(i2, |a, b| sign(a - b) / count)
                .expect("shapes checked")
        });
        (l1, g)
    } else {
        (0.0, want_grad.then(|| ImageTensor::zeros(h, w, c)))
    };

    let p1 = build_pyramid(i1, config.scales)?;
    let p2 = build_pyramid(i2, config.scales)?;
    let freq_grad_needed = want_grad && config.freq_active();
    let weight = config.lambda / c as f64;

    let mut per_scale = Vec::with_capacity(config.scales);
    // gradient accumulated from the coarsest level upward
    let mut carried: Option<ImageTensor> = None;
    for k in (0..config.scales).rev() {
        let (a, b) = (p1.level(k), p2.level(k));
        let (lh, lw) = (a.height(), a.width());
        let mut level_grad = freq_grad_needed.then(|| ImageTensor::zeros(lh, lw, c));
        let mut per_channel = Vec::with_capacity(c);
        for ch in 0..c {
            let (loss, g) = plane_term(
                config.variant,
                lh,
                lw,
                a.plane(ch),
                b.plane(ch),
                freq_grad_needed,
            );
            per_channel.push(loss);
            if let (Some(lg), Some(g)) = (level_grad.as_mut(), g) {
                for (dst, v) in lg.plane_mut(ch).iter_mut().zip(g) {
                    *dst = weight * v;
                }
            }
        }
        if let Some(mut lg) = level_grad {
            if let Some(coarse) = carried.take() {
                let up = downsample2x_adjoint(&coarse);
                lg.data_mut()
                    .iter_mut()
                    .zip(up.data())
                    .for_each(|(d, u)| *d += u);
            }
            carried = Some(lg);
        }
        per_scale.push(ScaleLoss {
            scale: 1 << k,
            mean: channel_mean(&per_channel),
            per_channel,
        });
    }
    per_scale.reverse();

    if let (Some(g), Some(f)) = (grad.as_mut(), carried) {
        g.data_mut()
            .iter_mut()
            .zip(f.data())
            .for_each(|(d, v)| *d += v);
    }

    let freq_term: f64 = per_scale.iter().map(|s| s.mean).sum();
    let report = LossReport {
        total: l1_term + config.lambda * freq_term,
        l1_term,
        freq_term,
        per_scale,
    };
    Ok((report, grad))
}

/// Frequency loss summed over `config.scales` pyramid levels, plus L1.
pub fn multi_scale_loss(
    i1: &ImageTensor,
    i2: &ImageTensor,
    config: &LossConfig,
) -> Result<LossReport> {
    evaluate(i1, i2, config, false).map(|(r, _)| r)
}

/// Subgradient of [`multi_scale_loss`]'s total w.r.t. `i1`.
pub fn loss_gradient(
    i1: &ImageTensor,
    i2: &ImageTensor,
    config: &LossConfig,
) -> Result<GradientBuffer> {
    loss_and_gradient(i1, i2, config).map(|(_, g)| g)
}

/// Report and gradient from a single pass.
pub fn loss_and_gradient(
    i1: &ImageTensor,
    i2: &ImageTensor,
    config: &LossConfig,
) -> Result<(LossReport, GradientBuffer)> {
    let (report, grad) = evaluate(i1, i2, config, true)?;
    Ok((report, GradientBuffer(grad.expect("gradient requested"))))
}

/// Loss on `mask * I` plus loss on `(1 - mask) * I`, summed term-wise.
pub fn masked_loss(
    i1: &ImageTensor,
    i2: &ImageTensor,
    mask: &Mask,
    config: &LossConfig,
) -> Result<LossReport> {
    i1.ensure_same_shape(i2)?;
    mask.check(i1)?;
    let inside = multi_scale_loss(&mask.apply(i1, false), &mask.apply(i2, false), config)?;
    let outside = multi_scale_loss(&mask.apply(i1, true), &mask.apply(i2, true), config)?;
    Ok(LossReport::combine(&inside, &outside, config.lambda))
}

/// Gradient of [`masked_loss`]'s total w.r.t. `i1`.
pub fn masked_loss_gradient(
    i1: &ImageTensor,
    i2: &ImageTensor,
    mask: &Mask,
    config: &LossConfig,
) -> Result<GradientBuffer> {
    i1.ensure_same_shape(i2)?;
    mask.check(i1)?;
    let g_in = loss_gradient(&mask.apply(i1, false), &mask.apply(i2, false), config)?;
    let g_out = loss_gradient(&mask.apply(i1, true), &mask.apply(i2, true), config)?;
    let a = mask.apply(g_in.as_image(), false);
    let b = mask.apply(g_out.as_image(), true);
    Ok(GradientBuffer(a.zip_map(&b, |x, y| x + y)?))
}
