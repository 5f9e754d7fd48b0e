//! Desk-scale restoration experiment.
//!
//! A 15-parameter model (per-channel gain and bias around one shared,
//! zero-padded 3x3 kernel) is trained with full-batch gradient descent on
//! synthetic dark, noisy images, once per loss configuration. Everything is
//! driven by [`ChaCha8Rng`], whose output stream is fixed across platforms
//! and releases for a given seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageTensor;
use crate::loss::{loss_and_gradient, LossConfig};
use crate::metrics::{psnr, ssim, SsimParams};

/// A `(degraded, clean)` image pair.
pub type Pair = (ImageTensor, ImageTensor);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradeParams {
    /// Exposure multiplier in `(0, 1]`.
    pub gain: f64,
    /// Tone-curve exponent, `>= 1`.
    pub gamma: f64,
    /// Standard deviation of additive Gaussian noise applied after darkening.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for DegradeParams {
    fn default() -> Self {
        Self {
            gain: 1.0,
            gamma: 1.0,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

impl DegradeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain > 0.0 && self.gain <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "gain {} outside (0, 1]",
                self.gain
            )));
        }
        if !(self.gamma >= 1.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "gamma {} must be >= 1",
                self.gamma
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise sigma {} must be >= 0",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

/// `clamp((gain * img)^gamma + N(0, sigma^2), 0, 1)`.
///
/// Noise samples are drawn in storage order (channel, row, column).
pub fn degrade(img: &ImageTensor, params: &DegradeParams) -> ImageTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut out = img.clone();
    for v in out.data_mut() {
        let mut x = params.gain * *v;
        if params.gamma != 1.0 {
            x = x.max(0.0).powf(params.gamma);
        }
        if params.noise_sigma > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            x += params.noise_sigma * z;
        }
        *v = x.clamp(0.0, 1.0);
    }
    out
}

/// `out_c = gain_c * (kernel * in_c) + bias_c`, with `*` a zero-padded 3x3
/// correlation shared by all channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyModel {
    pub gain: Vec<f64>,
    pub bias: Vec<f64>,
    /// Row-major taps; index `(dy + 1) * 3 + (dx + 1)` weights `in(y + dy, x + dx)`.
    pub kernel: [f64; 9],
}

impl ToyModel {
    /// Identity map: unit gain, zero bias, center-one kernel.
    pub fn identity(channels: usize) -> Self {
        let mut kernel = [0.0; 9];
        kernel[4] = 1.0;
        Self {
            gain: vec![1.0; channels],
            bias: vec![0.0; channels],
            kernel,
        }
    }

    pub fn channels(&self) -> usize {
        self.gain.len()
    }

    pub fn num_params(&self) -> usize {
        2 * self.channels() + 9
    }

    /// Flat layout: gains, then biases, then kernel taps.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.num_params());
        p.extend(&self.gain);
        p.extend(&self.bias);
        p.extend(&self.kernel);
        p
    }

    pub fn from_params(channels: usize, p: &[f64]) -> Result<Self> {
        if p.len() != 2 * channels + 9 {
            return Err(Error::InvalidConfig(format!(
                "expected {} parameters, got {}",
                2 * channels + 9,
                p.len()
            )));
        }
        let mut kernel = [0.0; 9];
        kernel.copy_from_slice(&p[2 * channels..]);
        Ok(Self {
            gain: p[..channels].to_vec(),
            bias: p[channels..2 * channels].to_vec(),
            kernel,
        })
    }

    /// `gain_c * kernel`, the linear part of the map for channel `c`.
    pub fn effective_kernel(&self, c: usize) -> [f64; 9] {
        self.kernel.map(|w| self.gain[c] * w)
    }

    fn check_input(&self, img: &ImageTensor) -> Result<()> {
        if img.channels() != self.channels() {
            return Err(Error::ShapeMismatch {
                left: (img.height(), img.width(), self.channels()),
                right: img.shape(),
            });
        }
        Ok(())
    }
}

fn correlate3x3(plane: &[f64], h: usize, w: usize, kernel: &[f64; 9]) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for dy in -1isize..=1 {
                let yy = y as isize + dy;
                if yy < 0 || yy >= h as isize {
                    continue;
                }
                for dx in -1isize..=1 {
                    let xx = x as isize + dx;
                    if xx < 0 || xx >= w as isize {
                        continue;
                    }
                    acc += kernel[((dy + 1) * 3 + dx + 1) as usize]
                        * plane[yy as usize * w + xx as usize];
                }
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Unclamped model output.
pub fn model_forward(model: &ToyModel, img: &ImageTensor) -> Result<ImageTensor> {
    model.check_input(img)?;
    let (h, w, c) = img.shape();
    let planes = (0..c)
        .map(|ch| {
            let conv = correlate3x3(img.plane(ch), h, w, &model.kernel);
            conv.into_iter()
                .map(|v| model.gain[ch] * v + model.bias[ch])
                .collect()
        })
        .collect();
    ImageTensor::from_planes(h, w, planes)
}

/// Parameter gradients, same layout as [`ToyModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGradient {
    pub gain: Vec<f64>,
    pub bias: Vec<f64>,
    pub kernel: [f64; 9],
}

impl ModelGradient {
    fn zeros(channels: usize) -> Self {
        Self {
            gain: vec![0.0; channels],
            bias: vec![0.0; channels],
            kernel: [0.0; 9],
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(2 * self.gain.len() + 9);
        p.extend(&self.gain);
        p.extend(&self.bias);
        p.extend(&self.kernel);
        p
    }

    fn add_scaled(&mut self, other: &ModelGradient, s: f64) {
        for (a, b) in self.gain.iter_mut().zip(&other.gain) {
            *a += s * b;
        }
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            *a += s * b;
        }
        for (a, b) in self.kernel.iter_mut().zip(&other.kernel) {
            *a += s * b;
        }
    }
}

/// Chain rule through [`model_forward`] given `upstream = dL/d output`.
pub fn model_gradient(
    model: &ToyModel,
    img: &ImageTensor,
    upstream: &ImageTensor,
) -> Result<ModelGradient> {
    model.check_input(img)?;
    img.ensure_same_shape(upstream)?;
    let (h, w, c) = img.shape();
    let mut g = ModelGradient::zeros(c);
    for ch in 0..c {
        let input = img.plane(ch);
        let up = upstream.plane(ch);
        g.bias[ch] = up.iter().sum();
        let conv = correlate3x3(input, h, w, &model.kernel);
        g.gain[ch] = up.iter().zip(&conv).map(|(u, v)| u * v).sum();
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                let mut acc = 0.0;
                for y in 0..h {
                    let yy = y as isize + dy;
                    if yy < 0 || yy >= h as isize {
                        continue;
                    }
                    for x in 0..w {
                        let xx = x as isize + dx;
                        if xx < 0 || xx >= w as isize {
                            continue;
                        }
                        acc += up[y * w + x] * input[yy as usize * w + xx as usize];
                    }
                }
                g.kernel[((dy + 1) * 3 + dx + 1) as usize] += model.gain[ch] * acc;
            }
        }
    }
    Ok(g)
}

/// Gradient-descent settings. The learning rate is multiplied by
/// `lr_drop_factor` once, at epoch `lr_drop_epoch`, if set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainHyper {
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub lr_drop_epoch: Option<usize>,
    pub lr_drop_factor: f64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        Self {
            lr: 0.1,
            epochs: 100,
            seed: 0,
            lr_drop_epoch: None,
            lr_drop_factor: 0.1,
        }
    }
}

impl TrainHyper {
    fn lr_at(&self, epoch: usize) -> f64 {
        match self.lr_drop_epoch {
            Some(e) if epoch >= e => self.lr * self.lr_drop_factor,
            _ => self.lr,
        }
    }
}

/// Held-out scores of one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub index: usize,
    #[serde(with = "crate::serde_float")]
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalTable {
    #[serde(with = "crate::serde_float")]
    pub mean_psnr: f64,
    pub mean_ssim: f64,
    pub rows: Vec<EvalRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub label: String,
    pub config: LossConfig,
    pub hyper: TrainHyper,
    pub seed: u64,
    /// Mean training loss at the start of each epoch.
    pub epoch_losses: Vec<f64>,
    /// Mean training loss of the returned model.
    pub final_loss: f64,
    pub model: ToyModel,
    pub heldout: Option<EvalTable>,
}

fn batch_loss_and_gradient(
    model: &ToyModel,
    pairs: &[Pair],
    config: &LossConfig,
) -> Result<(f64, ModelGradient)> {
    let mut total = 0.0;
    let mut grad = ModelGradient::zeros(model.channels());
    let inv = 1.0 / pairs.len() as f64;
    for (degraded, clean) in pairs {
        let pred = model_forward(model, degraded)?;
        let (report, upstream) = loss_and_gradient(&pred, clean, config)?;
        total += report.total * inv;
        let g = model_gradient(model, degraded, upstream.as_image())?;
        grad.add_scaled(&g, inv);
    }
    Ok((total, grad))
}

/// Mean training loss of `model` over `pairs`.
pub fn batch_loss(model: &ToyModel, pairs: &[Pair], config: &LossConfig) -> Result<f64> {
    batch_loss_and_gradient(model, pairs, config).map(|(l, _)| l)
}

/// Full-batch gradient descent from the identity model.
pub fn train(
    pairs: &[Pair],
    config: &LossConfig,
    hyper: &TrainHyper,
) -> Result<(ToyModel, TrainReport)> {
    if pairs.is_empty() {
        return Err(Error::InvalidConfig(
            "training needs at least one pair".into(),
        ));
    }
    if !(hyper.lr > 0.0 && hyper.lr.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "learning rate {} must be > 0",
            hyper.lr
        )));
    }
    config.validate()?;
    let channels = pairs[0].0.channels();
    let mut model = ToyModel::identity(channels);
    let mut params = model.params();
    let mut epoch_losses = Vec::with_capacity(hyper.epochs);
    for epoch in 0..hyper.epochs {
        let (loss, grad) = batch_loss_and_gradient(&model, pairs, config)?;
        if !loss.is_finite() {
            return Err(Error::DivergenceDetected { epoch });
        }
        epoch_losses.push(loss);
        let lr = hyper.lr_at(epoch);
        for (p, g) in params.iter_mut().zip(grad.to_vec()) {
            *p -= lr * g;
        }
        model = ToyModel::from_params(channels, &params)?;
    }
    let final_loss = batch_loss(&model, pairs, config)?;
    if !final_loss.is_finite() || params.iter().any(|p| !p.is_finite()) {
        return Err(Error::DivergenceDetected {
            epoch: hyper.epochs,
        });
    }
    let report = TrainReport {
        label: String::new(),
        config: *config,
        hyper: *hyper,
        seed: hyper.seed,
        epoch_losses,
        final_loss,
        model: model.clone(),
        heldout: None,
    };
    Ok((model, report))
}

/// PSNR and SSIM of `clamp(model(degraded))` against the clean images.
pub fn evaluate(model: &ToyModel, pairs: &[Pair]) -> Result<EvalTable> {
    if pairs.is_empty() {
        return Err(Error::InvalidConfig(
            "evaluation needs at least one pair".into(),
        ));
    }
    let params = SsimParams::default();
    let rows = pairs
        .iter()
        .enumerate()
        .map(|(index, (degraded, clean))| {
            let out = model_forward(model, degraded)?.clamp01();
            Ok(EvalRow {
                index,
                psnr: psnr(&out, clean, 1.0)?,
                ssim: ssim(&out, clean, &params)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = rows.len() as f64;
    Ok(EvalTable {
        mean_psnr: rows.iter().map(|r| r.psnr).sum::<f64>() / n,
        mean_ssim: rows.iter().map(|r| r.ssim).sum::<f64>() / n,
        rows,
    })
}

/// Seeded synthetic scene in `[0, 1]`: a smooth color gradient with a few
/// flat-shaded rectangles and disks and a faint oriented texture.
pub fn synthetic_scene(size: usize, channels: usize, rng: &mut ChaCha8Rng) -> ImageTensor {
    let s = size as f64;
    let base: Vec<f64> = (0..channels)
        .map(|_| rng.random_range(0.25..0.75))
        .collect();
    let slope: Vec<(f64, f64)> = (0..channels)
        .map(|_| (rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)))
        .collect();
    let mut img = ImageTensor::from_fn(size, size, channels, |c, y, x| {
        base[c] + slope[c].0 * (y as f64 / s - 0.5) + slope[c].1 * (x as f64 / s - 0.5)
    });

    let shapes = rng.random_range(3..7);
    for _ in 0..shapes {
        let color: Vec<f64> = (0..channels)
            .map(|_| rng.random_range(0.05..0.95))
            .collect();
        let cy = rng.random_range(0.0..s);
        let cx = rng.random_range(0.0..s);
        let ry = rng.random_range(0.08..0.3) * s;
        let rx = rng.random_range(0.08..0.3) * s;
        let disk: bool = rng.random();
        for y in 0..size {
            for x in 0..size {
                let (dy, dx) = ((y as f64 - cy) / ry, (x as f64 - cx) / rx);
                let inside = if disk {
                    dy * dy + dx * dx <= 1.0
                } else {
                    dy.abs() <= 1.0 && dx.abs() <= 1.0
                };
                if inside {
                    for (c, &v) in color.iter().enumerate().take(channels) {
                        img.set(c, y, x, v);
                    }
                }
            }
        }
    }

    let freq = rng.random_range(0.2..0.8);
    let theta = rng.random_range(0.0..std::f64::consts::PI);
    let amp = rng.random_range(0.0..0.06);
    let (st, ct) = theta.sin_cos();
    for c in 0..channels {
        for y in 0..size {
            for x in 0..size {
                let t = (freq * (ct * x as f64 + st * y as f64)).sin();
                let v = img.get(c, y, x) + amp * t;
                img.set(c, y, x, v.clamp(0.0, 1.0));
            }
        }
    }
    img
}

/// Settings for the synthetic ablation benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusParams {
    pub count: usize,
    pub size: usize,
    pub channels: usize,
    pub gain: f64,
    pub gamma: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for CorpusParams {
    fn default() -> Self {
        Self {
            count: 100,
            size: 32,
            channels: 3,
            gain: 0.3,
            gamma: 1.0,
            noise_sigma: 0.08,
            seed: 0,
        }
    }
}

fn mix(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Degradation parameters for image `index` of a corpus.
pub fn degrade_params_for(corpus: &CorpusParams, index: usize) -> DegradeParams {
    DegradeParams {
        gain: corpus.gain,
        gamma: corpus.gamma,
        noise_sigma: corpus.noise_sigma,
        seed: mix(corpus.seed, index as u64),
    }
}

/// Degrades clean images with per-image seeds derived from `corpus.seed`.
pub fn degrade_all(clean: Vec<ImageTensor>, corpus: &CorpusParams) -> Vec<Pair> {
    clean
        .into_iter()
        .enumerate()
        .map(|(i, img)| (degrade(&img, &degrade_params_for(corpus, i)), img))
        .collect()
}

pub fn synthetic_corpus(corpus: &CorpusParams) -> Vec<Pair> {
    let mut rng = ChaCha8Rng::seed_from_u64(corpus.seed);
    let clean = (0..corpus.count)
        .map(|_| synthetic_scene(corpus.size, corpus.channels, &mut rng))
        .collect();
    degrade_all(clean, corpus)
}

/// Seeded shuffle, then the first 80% (rounded down, at least one) for
/// training and the rest held out.
pub fn split_train_heldout(mut pairs: Vec<Pair>, seed: u64) -> (Vec<Pair>, Vec<Pair>) {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, u64::MAX));
    pairs.shuffle(&mut rng);
    let n_train = (pairs.len() * 4 / 5).max(1).min(pairs.len());
    let heldout = pairs.split_off(n_train);
    (pairs, heldout)
}

/// One named loss configuration of an ablation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationArm {
    pub label: String,
    pub config: LossConfig,
}

/// The three arms: L1, L1 + DCT and L1 + FFT with the given weights.
pub fn standard_arms(scales: usize, lambda_dct: f64, lambda_fft: f64) -> Vec<AblationArm> {
    use crate::loss::Variant;
    vec![
        AblationArm {
            label: "L1".into(),
            config: LossConfig::l1_only().with_scales(scales),
        },
        AblationArm {
            label: "L1 + DCT".into(),
            config: LossConfig::new(Variant::Dct)
                .with_scales(scales)
                .with_lambda(lambda_dct),
        },
        AblationArm {
            label: "L1 + FFT".into(),
            config: LossConfig::new(Variant::Fft)
                .with_scales(scales)
                .with_lambda(lambda_fft),
        },
    ]
}

/// Trains every arm with the same data and hyperparameters and scores it on
/// the held-out set.
pub fn run_ablation(
    train_pairs: &[Pair],
    heldout: &[Pair],
    arms: &[AblationArm],
    hyper: &TrainHyper,
) -> Result<Vec<TrainReport>> {
    arms.iter()
        .map(|arm| {
            let (model, mut report) = train(train_pairs, &arm.config, hyper)?;
            report.label = arm.label.clone();
            report.heldout = Some(evaluate(&model, heldout)?);
            Ok(report)
        })
        .collect()
}

/// Everything that defines one synthetic ablation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AblationSettings {
    pub corpus: CorpusParams,
    pub epochs: usize,
    pub lr: f64,
    pub scales: usize,
    pub lambda_dct: f64,
    pub lambda_fft: f64,
}

impl Default for AblationSettings {
    fn default() -> Self {
        Self {
            corpus: CorpusParams::default(),
            epochs: 600,
            lr: 0.5,
            scales: 3,
            lambda_dct: 1.0,
            lambda_fft: 0.1,
        }
    }
}

impl AblationSettings {
    /// Constant learning rate, divided by ten for the last quarter of epochs.
    pub fn hyper(&self) -> TrainHyper {
        TrainHyper {
            lr: self.lr,
            epochs: self.epochs,
            seed: self.corpus.seed,
            lr_drop_epoch: Some(self.epochs * 3 / 4),
            lr_drop_factor: 0.1,
        }
    }

    pub fn arms(&self) -> Vec<AblationArm> {
        standard_arms(self.scales, self.lambda_dct, self.lambda_fft)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationOutcome {
    pub train_count: usize,
    pub heldout_count: usize,
    pub runs: Vec<TrainReport>,
}

/// Splits `pairs` 80/20 with the corpus seed and runs the three arms.
pub fn run_ablation_on(pairs: Vec<Pair>, settings: &AblationSettings) -> Result<AblationOutcome> {
    let (train_pairs, heldout) = split_train_heldout(pairs, settings.corpus.seed);
    if heldout.is_empty() {
        return Err(Error::InvalidConfig(
            "corpus too small for a held-out split".into(),
        ));
    }
    let runs = run_ablation(&train_pairs, &heldout, &settings.arms(), &settings.hyper())?;
    Ok(AblationOutcome {
        train_count: train_pairs.len(),
        heldout_count: heldout.len(),
        runs,
    })
}

/// Generates the synthetic corpus and runs [`run_ablation_on`].
pub fn run_synthetic_ablation(settings: &AblationSettings) -> Result<AblationOutcome> {
    run_ablation_on(synthetic_corpus(&settings.corpus), settings)
}
