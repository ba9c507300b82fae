use std::f64::consts::PI;

use evfocus::wavelet::lowpass_reconstruct;
use evfocus::DenoiseSpec;

const FIXTURE: &str = include_str!("data/mixture_lowpass.txt");

/// Gaussian bump with a 2 Hz characteristic frequency plus a 40 Hz tone,
/// sampled at 1 kHz.
fn mixture(n: usize, centre_s: f64) -> (Vec<f64>, Vec<f64>) {
    let sigma = 1.0 / (2.0 * PI * 2.0);
    let bump: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / 1000.0;
            (-(t - centre_s).powi(2) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let mixed = bump
        .iter()
        .enumerate()
        .map(|(i, b)| b + 0.5 * (2.0 * PI * 40.0 * i as f64 / 1000.0).sin())
        .collect();
    (bump, mixed)
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn matches_frozen_reference_transform() {
    let (input, expect): (Vec<f64>, Vec<f64>) = FIXTURE
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let mut it = l.split_whitespace().map(|v| v.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .unzip();
    assert_eq!(input.len(), 300);
    let (_, generated) = mixture(300, 0.15);
    for (a, b) in generated.iter().zip(&input) {
        assert!((a - b).abs() <= 1e-12);
    }

    let out = lowpass_reconstruct(&input, &DenoiseSpec::default()).unwrap();
    // 62 taps reach only two levels on 300 samples.
    assert_eq!(out.levels, 2);
    assert!(out.clamped);
    let diff: Vec<f64> = out.signal.iter().zip(&expect).map(|(a, b)| a - b).collect();
    assert!(rms(&diff) <= 1e-6, "rms {}", rms(&diff));
}

#[test]
fn forty_hz_is_removed_at_six_levels() {
    let sine: Vec<f64> = (0..4096)
        .map(|i| (2.0 * PI * 40.0 * i as f64 / 1000.0).sin())
        .collect();
    let out = lowpass_reconstruct(&sine, &DenoiseSpec::default()).unwrap();
    assert_eq!(out.levels, 6);
    assert!(rms(&out.signal) <= 0.05 * rms(&sine));
}

#[test]
fn six_level_output_follows_the_bump() {
    let (bump, mixed) = mixture(4096, 2.048);
    let out = lowpass_reconstruct(&mixed, &DenoiseSpec::default()).unwrap();
    assert_eq!(out.levels, 6);
    let r = correlation(&out.signal, &bump);
    assert!(r >= 0.99, "{r}");
}
