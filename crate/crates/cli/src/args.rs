use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use floss_core::Variant;

#[derive(Debug, Parser)]
#[command(
    name = "floss",
    version,
    about = "Multi-scale frequency-domain image loss"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Frequency loss (plus L1) between two images.
    Loss(LossArgs),
    /// PSNR and SSIM between two images.
    Metrics(MetricsArgs),
    /// Write the DCT or FFT coefficients of an image to a raw dump.
    Spectrum(SpectrumArgs),
    /// Train the toy model with L1, L1 + DCT and L1 + FFT and compare.
    Demo(DemoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Dct,
    Fft,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Dct => Variant::Dct,
            VariantArg::Fft => Variant::Fft,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// `key = value` config file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Emit a JSON document instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct LossArgs {
    pub image_a: PathBuf,
    pub image_b: PathBuf,
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    #[arg(long)]
    pub scales: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Drop the L1 pixel term.
    #[arg(long)]
    pub no_l1: bool,
    /// Crop both images to their common top-left size when shapes differ.
    #[arg(long)]
    pub crop: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    pub image_a: PathBuf,
    pub image_b: PathBuf,
    /// Crop both images to their common top-left size when shapes differ.
    #[arg(long)]
    pub crop: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    pub image: PathBuf,
    #[arg(long, value_enum)]
    pub transform: Option<VariantArg>,
    /// Data file; the header goes to `<out>.hdr`.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct DemoArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory of clean PNG/JPEG images to degrade.
    #[arg(long, conflicts_with = "synthetic")]
    pub images: Option<PathBuf>,
    /// Number of synthetic clean images to generate.
    #[arg(long)]
    pub synthetic: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub scales: Option<usize>,
    #[arg(long)]
    pub lambda_dct: Option<f64>,
    #[arg(long)]
    pub lambda_fft: Option<f64>,
    /// Side length of synthetic images.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub gain: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}
