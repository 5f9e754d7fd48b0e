//! Subcommand implementations. Each returns the text to print on stdout.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use floss_core::image::{crop, crop_to_multiple, load_image};
use floss_core::train::{
    degrade_all, run_ablation_on, synthetic_corpus, AblationSettings, CorpusParams, Pair,
};
use floss_core::{
    metrics, multi_scale_loss, ImageTensor, LossConfig, LossReport, SsimParams, Variant,
};
use serde::Serialize;

use crate::args::{Common, DemoArgs, LossArgs, MetricsArgs, SpectrumArgs};
use crate::config::ConfigFile;
use crate::dump::SpectrumDump;
use crate::report::{fmt_db, sha256_f64, sha256_hex, Document, InputDigest};
use crate::CliError;

fn load_config(common: &Common) -> Result<ConfigFile, CliError> {
    match &common.config {
        Some(p) => ConfigFile::load(p),
        None => Ok(ConfigFile::default()),
    }
}

fn resolve_variant(
    cfg: &ConfigFile,
    flag: Option<crate::args::VariantArg>,
    key: &str,
) -> Result<Variant, CliError> {
    match flag {
        Some(v) => Ok(v.into()),
        None => Ok(cfg.get::<Variant>(key)?.unwrap_or(Variant::Dct)),
    }
}

fn load_with_digest(path: &Path) -> Result<(ImageTensor, InputDigest), CliError> {
    let img = load_image(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let bytes =
        std::fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let (height, width, channels) = img.shape();
    let digest = InputDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
        height,
        width,
        channels,
    };
    Ok((img, digest))
}

#[derive(Debug, Clone, Serialize)]
pub struct CropInfo {
    pub applied: bool,
    pub from: [usize; 2],
    pub to: [usize; 2],
    pub reason: String,
}

/// Brings two images to a common shape; shape mismatches need `--crop`.
fn align_pair(
    a: ImageTensor,
    b: ImageTensor,
    allow_crop: bool,
    multiple: usize,
) -> Result<(ImageTensor, ImageTensor, Vec<CropInfo>), CliError> {
    if a.channels() != b.channels() {
        return Err(CliError::Input(format!(
            "channel counts differ: {} vs {}",
            a.channels(),
            b.channels()
        )));
    }
    let mut crops = Vec::new();
    let (a, b) = if (a.height(), a.width()) != (b.height(), b.width()) {
        if !allow_crop {
            return Err(CliError::Input(format!(
                "image sizes differ: {}x{} vs {}x{} (pass --crop to crop both to the common size)",
                a.height(),
                a.width(),
                b.height(),
                b.width()
            )));
        }
        let (h, w) = (a.height().min(b.height()), a.width().min(b.width()));
        crops.push(CropInfo {
            applied: true,
            from: [a.height().max(b.height()), a.width().max(b.width())],
            to: [h, w],
            reason: "common size (--crop)".into(),
        });
        (crop(&a, h, w)?, crop(&b, h, w)?)
    } else {
        (a, b)
    };
    if multiple > 1 {
        let from = [a.height(), a.width()];
        let a = crop_to_multiple(&a, multiple)?;
        let b = crop_to_multiple(&b, multiple)?;
        let to = [a.height(), a.width()];
        if from != to {
            crops.push(CropInfo {
                applied: true,
                from,
                to,
                reason: format!("pyramid multiple {multiple}"),
            });
        }
        return Ok((a, b, crops));
    }
    Ok((a, b, crops))
}

#[derive(Debug, Clone, Serialize)]
pub struct LossCmdConfig {
    pub variant: Variant,
    pub scales: usize,
    pub lambda: f64,
    pub include_l1: bool,
    pub crop: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LossResults {
    pub crops: Vec<CropInfo>,
    pub report: LossReport,
}

pub fn cmd_loss(args: &LossArgs) -> Result<String, CliError> {
    let cfg = load_config(&args.common)?;
    let resolved = LossCmdConfig {
        variant: resolve_variant(&cfg, args.variant, "variant")?,
        scales: cfg.resolve(args.scales, "scales", 3)?,
        lambda: cfg.resolve(args.lambda, "lambda", 1.0)?,
        include_l1: !cfg.resolve_switch(args.no_l1, "no_l1")?,
        crop: cfg.resolve_switch(args.crop, "crop")?,
    };
    let loss_cfg = LossConfig {
        variant: resolved.variant,
        scales: resolved.scales,
        lambda: resolved.lambda,
        include_l1: resolved.include_l1,
    };
    loss_cfg.validate()?;
    let json = cfg.resolve_switch(args.common.json, "json")?;

    let (a, da) = load_with_digest(&args.image_a)?;
    let (b, db) = load_with_digest(&args.image_b)?;
    let (a, b, crops) = align_pair(a, b, resolved.crop, loss_cfg.required_multiple())?;
    let report = multi_scale_loss(&a, &b, &loss_cfg)?;

    if json {
        let doc = Document::new(
            "loss",
            resolved,
            vec![da, db],
            LossResults { crops, report },
        );
        return Ok(doc.to_json());
    }
    let mut out = String::new();
    let _ = writeln!(out, "variant    {}", resolved.variant);
    let _ = writeln!(out, "scales     {}", resolved.scales);
    let _ = writeln!(out, "lambda     {}", resolved.lambda);
    let _ = writeln!(
        out,
        "l1         {}",
        if resolved.include_l1 { "on" } else { "off" }
    );
    for c in &crops {
        let _ = writeln!(
            out,
            "crop       {}x{} -> {}x{} ({})",
            c.from[0], c.from[1], c.to[0], c.to[1], c.reason
        );
    }
    let _ = writeln!(out, "total      {:.10}", report.total);
    let _ = writeln!(out, "l1_term    {:.10}", report.l1_term);
    let _ = writeln!(out, "freq_term  {:.10}", report.freq_term);
    for s in &report.per_scale {
        let chans: Vec<String> = s.per_channel.iter().map(|v| format!("{v:.10}")).collect();
        let _ = writeln!(
            out,
            "scale 1/{:<3} mean {:.10}  channels [{}]",
            s.scale,
            s.mean,
            chans.join(", ")
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsCmdConfig {
    pub crop: bool,
    pub peak: f64,
    pub ssim: SsimParams,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsResults {
    pub crops: Vec<CropInfo>,
    pub mse: f64,
    #[serde(with = "floss_core::serde_float")]
    pub psnr: f64,
    pub ssim: f64,
}

pub fn cmd_metrics(args: &MetricsArgs) -> Result<String, CliError> {
    let cfg = load_config(&args.common)?;
    let resolved = MetricsCmdConfig {
        crop: cfg.resolve_switch(args.crop, "crop")?,
        peak: 1.0,
        ssim: SsimParams::default(),
    };
    let json = cfg.resolve_switch(args.common.json, "json")?;
    let (a, da) = load_with_digest(&args.image_a)?;
    let (b, db) = load_with_digest(&args.image_b)?;
    let (a, b, crops) = align_pair(a, b, resolved.crop, 1)?;
    let results = MetricsResults {
        crops,
        mse: metrics::mse(&a, &b)?,
        psnr: metrics::psnr(&a, &b, resolved.peak)?,
        ssim: metrics::ssim(&a, &b, &resolved.ssim)?,
    };
    if json {
        return Ok(Document::new("metrics", resolved, vec![da, db], results).to_json());
    }
    let mut out = String::new();
    for c in &results.crops {
        let _ = writeln!(
            out,
            "crop  {}x{} -> {}x{} ({})",
            c.from[0], c.from[1], c.to[0], c.to[1], c.reason
        );
    }
    let _ = writeln!(out, "MSE   {:.10}", results.mse);
    let _ = writeln!(out, "PSNR  {}", fmt_db(results.psnr));
    let _ = writeln!(out, "SSIM  {:.6}", results.ssim);
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumCmdConfig {
    pub transform: Variant,
    pub out: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumResults {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub values_per_coefficient: usize,
    pub data_path: String,
    pub header_path: String,
    pub data_sha256: String,
}

pub fn cmd_spectrum(args: &SpectrumArgs) -> Result<String, CliError> {
    let cfg = load_config(&args.common)?;
    let resolved = SpectrumCmdConfig {
        transform: resolve_variant(&cfg, args.transform, "transform")?,
        out: args.out.display().to_string(),
    };
    let json = cfg.resolve_switch(args.common.json, "json")?;
    let (img, digest) = load_with_digest(&args.image)?;
    let dump = SpectrumDump::of_image(&img, resolved.transform);
    let header = dump.write(&args.out)?;
    let results = SpectrumResults {
        height: dump.height,
        width: dump.width,
        channels: dump.channels,
        values_per_coefficient: dump.values_per_coefficient(),
        data_path: resolved.out.clone(),
        header_path: header.display().to_string(),
        data_sha256: sha256_f64(dump.values.iter().copied()),
    };
    if json {
        return Ok(Document::new("spectrum", resolved, vec![digest], results).to_json());
    }
    Ok(format!(
        "wrote {} ({}x{}x{} {}), header {}\n",
        results.data_path,
        results.height,
        results.width,
        results.channels,
        resolved.transform,
        results.header_path
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoCmdConfig {
    pub source: String,
    pub settings: AblationSettings,
    pub lr_drop_epoch: Option<usize>,
    pub lr_drop_factor: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub loss: String,
    #[serde(with = "floss_core::serde_float")]
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoResults {
    pub train_count: usize,
    pub heldout_count: usize,
    pub table: Vec<TableRow>,
    pub runs: Vec<floss_core::train::TrainReport>,
}

const MIN_CORPUS: usize = 5;

fn image_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries =
        std::fs::read_dir(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
                .unwrap_or(false)
        })
        .collect();
    files.sort();
    Ok(files)
}

pub fn cmd_demo(args: &DemoArgs) -> Result<String, CliError> {
    let cfg = load_config(&args.common)?;
    let json = cfg.resolve_switch(args.common.json, "json")?;
    let defaults = AblationSettings::default();
    let dc = defaults.corpus;
    let images_dir: Option<PathBuf> = match &args.images {
        Some(p) => Some(p.clone()),
        None if args.synthetic.is_none() => cfg.get::<PathBuf>("images")?,
        None => None,
    };
    let corpus = CorpusParams {
        count: cfg.resolve(args.synthetic, "synthetic", dc.count)?,
        size: cfg.resolve(args.size, "size", dc.size)?,
        channels: dc.channels,
        gain: cfg.resolve(args.gain, "gain", dc.gain)?,
        gamma: cfg.resolve(args.gamma, "gamma", dc.gamma)?,
        noise_sigma: cfg.resolve(args.sigma, "sigma", dc.noise_sigma)?,
        seed: cfg.resolve(args.seed, "seed", dc.seed)?,
    };
    let mut settings = AblationSettings {
        corpus,
        epochs: cfg.resolve(args.epochs, "epochs", defaults.epochs)?,
        lr: cfg.resolve(args.lr, "lr", defaults.lr)?,
        scales: cfg.resolve(args.scales, "scales", defaults.scales)?,
        lambda_dct: cfg.resolve(args.lambda_dct, "lambda_dct", defaults.lambda_dct)?,
        lambda_fft: cfg.resolve(args.lambda_fft, "lambda_fft", defaults.lambda_fft)?,
    };
    floss_core::train::degrade_params_for(&settings.corpus, 0).validate()?;
    let multiple = LossConfig::default()
        .with_scales(settings.scales)
        .required_multiple();

    let (pairs, inputs, source): (Vec<Pair>, Vec<InputDigest>, String) = match images_dir {
        Some(dir) => {
            let files = image_files(&dir)?;
            if files.len() < MIN_CORPUS {
                return Err(CliError::Input(format!(
                    "{} holds {} images, need at least {MIN_CORPUS}",
                    dir.display(),
                    files.len()
                )));
            }
            let mut clean = Vec::with_capacity(files.len());
            let mut digests = Vec::with_capacity(files.len());
            for f in &files {
                let (img, d) = load_with_digest(f)?;
                clean.push(crop_to_multiple(&img, multiple)?);
                digests.push(d);
            }
            if clean.iter().any(|c| c.channels() != clean[0].channels()) {
                return Err(CliError::Input(
                    "corpus mixes grayscale and color images".into(),
                ));
            }
            settings.corpus.count = clean.len();
            settings.corpus.channels = clean[0].channels();
            (
                degrade_all(clean, &settings.corpus),
                digests,
                format!("images:{}", dir.display()),
            )
        }
        None => {
            if settings.corpus.count < MIN_CORPUS {
                return Err(CliError::Input(format!(
                    "synthetic corpus needs at least {MIN_CORPUS} images"
                )));
            }
            if !settings.corpus.size.is_multiple_of(multiple) || settings.corpus.size < 11 {
                return Err(CliError::Input(format!(
                    "synthetic size must be >= 11 and a multiple of {multiple}"
                )));
            }
            let pairs = synthetic_corpus(&settings.corpus);
            let digest = InputDigest {
                path: format!("synthetic:{}", settings.corpus.count),
                sha256: sha256_f64(pairs.iter().flat_map(|(_, c)| c.data().iter().copied())),
                height: settings.corpus.size,
                width: settings.corpus.size,
                channels: settings.corpus.channels,
            };
            (
                pairs,
                vec![digest],
                format!("synthetic:{}", settings.corpus.count),
            )
        }
    };

    let outcome = run_ablation_on(pairs, &settings)?;
    let table: Vec<TableRow> = outcome
        .runs
        .iter()
        .map(|r| {
            let h = r.heldout.as_ref().expect("ablation scores every run");
            TableRow {
                loss: r.label.clone(),
                psnr: h.mean_psnr,
                ssim: h.mean_ssim,
            }
        })
        .collect();
    let hyper = settings.hyper();
    let doc = Document::new(
        "demo",
        DemoCmdConfig {
            source,
            settings,
            lr_drop_epoch: hyper.lr_drop_epoch,
            lr_drop_factor: hyper.lr_drop_factor,
        },
        inputs,
        DemoResults {
            train_count: outcome.train_count,
            heldout_count: outcome.heldout_count,
            table: table.clone(),
            runs: outcome.runs,
        },
    );
    let text_json = doc.to_json();
    if let Some(out) = &args.out {
        std::fs::write(out, &text_json)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", out.display())))?;
    }
    if json {
        return Ok(text_json);
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "train {} / held-out {} images, {} epochs, seed {}",
        outcome.train_count, outcome.heldout_count, settings.epochs, settings.corpus.seed
    );
    let _ = writeln!(out, "{:<10} {:>10} {:>8}", "Loss", "PSNR", "SSIM");
    for r in &table {
        let _ = writeln!(out, "{:<10} {:>10} {:>8.4}", r.loss, fmt_db(r.psnr), r.ssim);
    }
    Ok(out)
}
