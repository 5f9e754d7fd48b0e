mod common;

use common::{conv_oracle, random_image, rng};
use floss_core::check::{central_difference, max_relative_error};
use floss_core::train::{
    batch_loss, degrade, model_forward, model_gradient, synthetic_scene, train, DegradeParams,
    Pair, ToyModel, TrainHyper,
};
use floss_core::{loss_gradient, multi_scale_loss, ImageTensor, LossConfig, Variant};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_model(r: &mut ChaCha8Rng, channels: usize) -> ToyModel {
    let p: Vec<f64> = (0..2 * channels + 9)
        .map(|_| r.random_range(-1.0..1.0))
        .collect();
    ToyModel::from_params(channels, &p).unwrap()
}

#[test]
fn forward_matches_direct_correlation() {
    let mut r = rng(31);
    for (h, w, c) in [(1, 1, 1), (3, 5, 3), (8, 8, 3), (2, 9, 1)] {
        let m = random_model(&mut r, c);
        let img = random_image(&mut r, h, w, c);
        let got = model_forward(&m, &img).unwrap();
        let want = conv_oracle(&img, &m.gain, &m.bias, &m.kernel);
        for (a, b) in got.data().iter().zip(want.data()) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}

#[test]
fn model_gradient_matches_finite_differences() {
    let mut r = rng(32);
    for _ in 0..20 {
        let c = if r.random_bool(0.5) { 1 } else { 3 };
        let m = random_model(&mut r, c);
        let img = random_image(&mut r, 6, 7, c);
        let up = random_image(&mut r, 6, 7, c);
        let g = model_gradient(&m, &img, &up).unwrap();
        let bias: Vec<f64> = (0..c).map(|ch| up.plane(ch).iter().sum()).collect();
        assert_eq!(g.bias, bias);
        let numeric = central_difference(
            |p| {
                let out = model_forward(&ToyModel::from_params(c, p).unwrap(), &img).unwrap();
                out.data().iter().zip(up.data()).map(|(a, b)| a * b).sum()
            },
            &m.params(),
            1e-6,
        );
        assert!(max_relative_error(&g.to_vec(), &numeric) < 1e-8);
    }
}

#[test]
fn composed_parameter_gradient_matches_finite_differences() {
    let mut r = rng(33);
    for v in [Variant::Dct, Variant::Fft] {
        let cfg = LossConfig::new(v).with_lambda(0.5);
        for _ in 0..10 {
            let m = random_model(&mut r, 3);
            let img = random_image(&mut r, 8, 8, 3);
            let target = random_image(&mut r, 8, 8, 3);
            let pred = model_forward(&m, &img).unwrap();
            let up = loss_gradient(&pred, &target, &cfg).unwrap();
            let g = model_gradient(&m, &img, up.as_image()).unwrap();
            let numeric = central_difference(
                |p| {
                    let out = model_forward(&ToyModel::from_params(3, p).unwrap(), &img).unwrap();
                    multi_scale_loss(&out, &target, &cfg).unwrap().total
                },
                &m.params(),
                1e-6,
            );
            let e = max_relative_error(&g.to_vec(), &numeric);
            assert!(e < 1e-5, "{v}: {e}");
        }
    }
}

fn gain_pairs(n: usize, size: usize) -> Vec<Pair> {
    let mut r = rng(34);
    let p = DegradeParams {
        gain: 0.25,
        ..DegradeParams::default()
    };
    (0..n)
        .map(|_| {
            let clean = synthetic_scene(size, 3, &mut r);
            (degrade(&clean, &p), clean)
        })
        .collect()
}

#[test]
fn pure_gain_degradation_is_inverted() {
    let mut r = rng(35);
    let p = DegradeParams {
        gain: 0.25,
        ..DegradeParams::default()
    };
    let pairs: Vec<Pair> = (0..4)
        .map(|_| {
            let clean = random_image(&mut r, 16, 16, 3);
            (degrade(&clean, &p), clean)
        })
        .collect();
    let hyper = TrainHyper {
        lr: 0.1,
        epochs: 12000,
        seed: 0,
        lr_drop_epoch: Some(9000),
        lr_drop_factor: 0.1,
    };
    let cfg = LossConfig::l1_only();
    let initial = batch_loss(&ToyModel::identity(3), &pairs, &cfg).unwrap();
    let (model, report) = train(&pairs, &cfg, &hyper).unwrap();
    assert!(
        report.final_loss < 0.01 * initial,
        "{} vs {initial}",
        report.final_loss
    );
    {
        for c in 0..3 {
            let k = model.effective_kernel(c);
            let err = k
                .iter()
                .enumerate()
                .map(|(i, v)| (v - if i == 4 { 4.0 } else { 0.0 }).abs())
                .fold(0.0, f64::max);
            assert!(err < 0.04, "channel {c}: {k:?}");
            assert!(model.bias[c].abs() < 0.01);
        }
    }
}

#[test]
fn frequency_term_training_reduces_loss() {
    let pairs = gain_pairs(4, 16);
    let hyper = TrainHyper {
        lr: 0.5,
        epochs: 200,
        ..TrainHyper::default()
    };
    for cfg in [
        LossConfig::new(Variant::Dct),
        LossConfig::new(Variant::Fft).with_lambda(0.1),
    ] {
        let (model, report) = train(&pairs, &cfg, &hyper).unwrap();
        assert!(
            report.final_loss < 0.5 * report.epoch_losses[0],
            "{}",
            cfg.variant
        );
        assert!(model.effective_kernel(0).iter().sum::<f64>() > 2.0);
    }
}

#[test]
fn zero_epochs_and_fixed_point() {
    let pairs = gain_pairs(2, 8);
    let (m, report) = train(
        &pairs,
        &LossConfig::default(),
        &TrainHyper {
            epochs: 0,
            ..TrainHyper::default()
        },
    )
    .unwrap();
    assert_eq!(m, ToyModel::identity(3));
    assert!(report.epoch_losses.is_empty());

    let same: Vec<Pair> = pairs.iter().map(|(_, c)| (c.clone(), c.clone())).collect();
    let (m, report) = train(
        &same,
        &LossConfig::default(),
        &TrainHyper {
            epochs: 5,
            ..TrainHyper::default()
        },
    )
    .unwrap();
    assert_eq!(m, ToyModel::identity(3));
    assert_eq!(report.epoch_losses[0], 0.0);
}

#[test]
fn training_is_deterministic() {
    let pairs = gain_pairs(3, 8);
    let hyper = TrainHyper {
        epochs: 20,
        ..TrainHyper::default()
    };
    let cfg = LossConfig::new(Variant::Fft).with_lambda(0.1);
    let (_, a) = train(&pairs, &cfg, &hyper).unwrap();
    let (_, b) = train(&pairs, &cfg, &hyper).unwrap();
    assert_eq!(a, b);
}

#[test]
fn degrade_is_seeded() {
    let img = ImageTensor::filled(8, 8, 3, 0.5);
    let p = DegradeParams {
        gain: 0.5,
        gamma: 2.2,
        noise_sigma: 0.05,
        seed: 9,
    };
    assert_eq!(degrade(&img, &p), degrade(&img, &p));
    assert_ne!(
        degrade(&img, &p),
        degrade(&img, &DegradeParams { seed: 10, ..p })
    );
    assert!(degrade(&img, &p)
        .data()
        .iter()
        .all(|v| (0.0..=1.0).contains(v)));
}
