//! Multi-scale frequency-domain image loss.
//!
//! The loss compares two images through their 2D transforms (orthonormal
//! DCT-II or unnormalized DFT) at the full resolution and at successive
//! 2x mean-pooled resolutions, and sums the per-level mean absolute
//! coefficient differences. An L1 pixel term can be added on top, weighted
//! against the frequency term by `lambda`.
//!
//! Everything operates on [`ImageTensor`], a planar 64-bit float image, and
//! every loss has an analytic (sub)gradient with respect to the prediction so
//! it can drive gradient-based training. The [`train`] module contains a
//! deliberately tiny restoration model used to compare L1 training against
//! L1 plus frequency loss on synthetic dark, noisy images.

pub mod check;
pub mod error;
pub mod image;
pub mod loss;
pub mod metrics;
pub mod serde_float;
pub mod spectral;
pub mod train;

pub use crate::error::{Error, Result};
pub use crate::image::{ImageTensor, Pyramid};
pub use crate::loss::{
    loss_gradient, masked_loss, multi_scale_loss, single_scale_loss, GradientBuffer, LossConfig,
    LossReport, Mask, ScaleLoss, Variant,
};
pub use crate::metrics::{mse, psnr, ssim, SsimParams};
pub use crate::spectral::{ComplexSpectrum, RealSpectrum};
