mod common;

use common::{level_oracle, min_kink_distance, multi_scale_oracle, random_image, rng};
use floss_core::check::{central_difference, max_relative_error};
use floss_core::loss::masked_loss_gradient;
use floss_core::{
    loss_gradient, masked_loss, multi_scale_loss, single_scale_loss, ImageTensor, LossConfig, Mask,
    Variant,
};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const VARIANTS: [Variant; 2] = [Variant::Dct, Variant::Fft];

fn pair_strategy() -> impl Strategy<Value = (ImageTensor, ImageTensor, Variant)> {
    (
        1usize..=4,
        1usize..=4,
        prop_oneof![Just(1usize), Just(3)],
        any::<u64>(),
        any::<bool>(),
    )
        .prop_map(|(hm, wm, c, seed, fft)| {
            let mut r = rng(seed);
            let a = random_image(&mut r, 4 * hm, 4 * wm, c);
            let b = random_image(&mut r, 4 * hm, 4 * wm, c);
            (a, b, if fft { Variant::Fft } else { Variant::Dct })
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn loss_is_nonnegative_and_symmetric((a, b, v) in pair_strategy()) {
        let cfg = LossConfig::new(v);
        let ab = multi_scale_loss(&a, &b, &cfg).unwrap();
        let ba = multi_scale_loss(&b, &a, &cfg).unwrap();
        prop_assert!(ab.total >= 0.0 && ab.l1_term >= 0.0 && ab.freq_term >= 0.0);
        prop_assert_eq!(ab.total, ba.total);
        prop_assert!(ab.total > 0.0);
        for s in &ab.per_scale {
            prop_assert!(s.per_channel.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn loss_is_absolutely_homogeneous((a, b, v) in pair_strategy(), scale in -3.0f64..3.0) {
        let cfg = LossConfig::new(v);
        let base = multi_scale_loss(&a, &b, &cfg).unwrap().total;
        let scaled = multi_scale_loss(&a.scale(scale), &b.scale(scale), &cfg).unwrap().total;
        prop_assert!((scaled - scale.abs() * base).abs() < 1e-12 * base.max(1.0));
    }

    #[test]
    fn shared_offset_cancels((a, b, v) in pair_strategy(), offset in -1.0f64..1.0) {
        let cfg = LossConfig::new(v);
        let base = multi_scale_loss(&a, &b, &cfg).unwrap().total;
        let moved = multi_scale_loss(&a.map(|x| x + offset), &b.map(|x| x + offset), &cfg).unwrap().total;
        prop_assert!((moved - base).abs() < 1e-12 * base.max(1.0));
    }

    #[test]
    fn report_is_consistent((a, b, v) in pair_strategy(), lambda in 0.0f64..5.0, l1: bool) {
        let cfg = LossConfig::new(v).with_lambda(lambda).with_l1(l1);
        let r = multi_scale_loss(&a, &b, &cfg).unwrap();
        prop_assert!((r.total - (r.l1_term + lambda * r.freq_term)).abs() < 1e-12);
        let sum: f64 = r.per_scale.iter().map(|s| s.mean).sum();
        prop_assert!((r.freq_term - sum).abs() < 1e-12);
        if !l1 {
            prop_assert_eq!(r.l1_term, 0.0);
        }
    }

    #[test]
    fn dct_loss_vanishes_only_on_equal_images((a, _b, _v) in pair_strategy(), i in any::<prop::sample::Index>(), eps in 1e-9f64..1e-3) {
        let cfg = LossConfig::frequency_only(Variant::Dct, 3);
        prop_assert_eq!(multi_scale_loss(&a, &a, &cfg).unwrap().total, 0.0);
        let mut b = a.clone();
        let k = i.index(b.data().len());
        b.data_mut()[k] += eps;
        prop_assert!(multi_scale_loss(&a, &b, &cfg).unwrap().total > 0.0);
    }
}

#[test]
fn single_scale_matches_oracle() {
    let mut r = rng(11);
    for v in VARIANTS {
        for (h, w) in [(2, 2), (5, 3), (8, 8), (12, 16)] {
            let a = random_image(&mut r, h, w, 3);
            let b = random_image(&mut r, h, w, 3);
            let fast = single_scale_loss(&a, &b, v).unwrap();
            let slow = level_oracle(&a, &b, v == Variant::Fft);
            for (x, y) in fast.iter().zip(&slow) {
                assert!((x - y).abs() < 1e-12, "{v} {h}x{w}");
            }
        }
    }
}

#[test]
fn multi_scale_matches_composed_oracle() {
    let mut r = rng(12);
    for v in VARIANTS {
        for (h, w, c) in [(8, 8, 1), (8, 8, 3), (16, 12, 3)] {
            let a = random_image(&mut r, h, w, c);
            let b = random_image(&mut r, h, w, c);
            for (lambda, l1) in [(1.0, true), (0.3, false), (2.5, true)] {
                let cfg = LossConfig::new(v).with_lambda(lambda).with_l1(l1);
                let fast = multi_scale_loss(&a, &b, &cfg).unwrap().total;
                let slow = multi_scale_oracle(&a, &b, 3, v == Variant::Fft, lambda, l1);
                assert!(
                    (fast - slow).abs() < 1e-11 * slow.max(1.0),
                    "{v} {h}x{w}x{c}: {fast} vs {slow}"
                );
            }
        }
    }
}

#[test]
fn masked_checkerboard_matches_composed_oracle() {
    let mut r = rng(13);
    let a = random_image(&mut r, 8, 8, 3);
    let b = random_image(&mut r, 8, 8, 3);
    let values: Vec<f64> = (0..64).map(|i| ((i / 8 + i % 8) % 2) as f64).collect();
    let mask = Mask::new(8, 8, values.clone()).unwrap();
    let apply = |img: &ImageTensor, inv: bool| {
        ImageTensor::from_fn(8, 8, 3, |c, y, x| {
            let m = values[y * 8 + x];
            img.get(c, y, x) * if inv { 1.0 - m } else { m }
        })
    };
    for v in VARIANTS {
        let cfg = LossConfig::new(v);
        let got = masked_loss(&a, &b, &mask, &cfg).unwrap();
        let fft = v == Variant::Fft;
        let want = multi_scale_oracle(&apply(&a, false), &apply(&b, false), 3, fft, 1.0, true)
            + multi_scale_oracle(&apply(&a, true), &apply(&b, true), 3, fft, 1.0, true);
        assert!((got.total - want).abs() < 1e-11, "{v}");
        assert!((got.total - (got.l1_term + got.freq_term)).abs() < 1e-12);
    }
}

/// Draws a pair whose coefficient and pixel differences all stay clear of
/// the kinks of `|.|`, so central differences see a smooth function.
fn kink_free_pair(
    r: &mut ChaCha8Rng,
    h: usize,
    w: usize,
    c: usize,
    v: Variant,
    scales: usize,
) -> (ImageTensor, ImageTensor) {
    loop {
        let a = random_image(r, h, w, c);
        let b = random_image(r, h, w, c);
        if min_kink_distance(&a, &b, scales, v == Variant::Fft) > 1e-3 {
            return (a, b);
        }
    }
}

fn fd_error(a: &ImageTensor, b: &ImageTensor, cfg: &LossConfig) -> f64 {
    let analytic = loss_gradient(a, b, cfg).unwrap();
    let (h, w, c) = a.shape();
    let numeric = central_difference(
        |x| {
            let p = ImageTensor::new(h, w, c, x.to_vec()).unwrap();
            multi_scale_loss(&p, b, cfg).unwrap().total
        },
        a.data(),
        1e-6,
    );
    max_relative_error(analytic.data(), &numeric)
}

#[test]
fn gradient_matches_finite_differences() {
    let mut r = rng(14);
    for v in VARIANTS {
        for (size, c) in [(8, 1), (8, 3), (16, 1)] {
            for i in 0..12 {
                let (a, b) = kink_free_pair(&mut r, size, size, c, v, 3);
                let lambda = r.random_range(0.1..2.0);
                let cfg = LossConfig::new(v).with_lambda(lambda).with_l1(i % 2 == 0);
                let e = fd_error(&a, &b, &cfg);
                assert!(e < 1e-5, "{v} {size}x{size}x{c}: {e}");
            }
        }
    }
}

#[test]
fn gradient_single_scale_and_two_scale() {
    let mut r = rng(15);
    for v in VARIANTS {
        for scales in [1, 2] {
            let (a, b) = kink_free_pair(&mut r, 6, 10, 2, v, scales);
            let e = fd_error(&a, &b, &LossConfig::new(v).with_scales(scales));
            assert!(e < 1e-5, "{v} scales={scales}: {e}");
        }
    }
}

#[test]
fn negative_gradient_is_a_descent_direction() {
    let mut r = rng(16);
    for v in VARIANTS {
        for _ in 0..20 {
            let a = random_image(&mut r, 8, 8, 3);
            let b = random_image(&mut r, 8, 8, 3);
            let cfg = LossConfig::new(v);
            let g = loss_gradient(&a, &b, &cfg).unwrap();
            let norm: f64 = g.data().iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(norm > 1e-8);
            let h = 1e-4 / norm;
            let stepped = a.zip_map(g.as_image(), |x, gx| x - h * gx).unwrap();
            let before = multi_scale_loss(&a, &b, &cfg).unwrap().total;
            let after = multi_scale_loss(&stepped, &b, &cfg).unwrap().total;
            assert!(after < before, "{v}: {after} >= {before}");
        }
    }
}

#[test]
fn masked_gradient_matches_finite_differences() {
    let mut r = rng(17);
    let values: Vec<f64> = (0..64).map(|_| r.random::<f64>()).collect();
    let mask = Mask::new(8, 8, values).unwrap();
    for v in VARIANTS {
        let cfg = LossConfig::new(v);
        let a = random_image(&mut r, 8, 8, 1);
        let b = random_image(&mut r, 8, 8, 1);
        let analytic = masked_loss_gradient(&a, &b, &mask, &cfg).unwrap();
        let numeric = central_difference(
            |x| {
                let p = ImageTensor::new(8, 8, 1, x.to_vec()).unwrap();
                masked_loss(&p, &b, &mask, &cfg).unwrap().total
            },
            a.data(),
            1e-6,
        );
        let e = max_relative_error(analytic.data(), &numeric);
        assert!(e < 1e-4, "{v}: {e}");
    }
}

#[test]
fn gradient_shape_and_finiteness() {
    let mut r = rng(18);
    let a = random_image(&mut r, 16, 12, 3);
    let b = random_image(&mut r, 16, 12, 3);
    for v in VARIANTS {
        let g = loss_gradient(&a, &b, &LossConfig::new(v)).unwrap();
        assert_eq!(g.shape(), a.shape());
        assert!(g.data().iter().all(|x| x.is_finite()));
    }
}
