//! Spacing-ratio code checked on ensembles with known answers.

use entgrowth::spectral_stats::{goe_density, poisson_density, ratio_histogram, reference_curves, spacing_ratios, RatioSample};
use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn integrate(f: impl Fn(f64) -> f64) -> f64 {
    let n = 20_000;
    let h = 1.0 / n as f64;
    (0..n).map(|k| f((k as f64 + 0.5) * h) * h).sum()
}

#[test]
fn reference_densities_are_normalized() {
    assert!((integrate(goe_density) - 1.0).abs() < 1e-6);
    assert!((integrate(poisson_density) - 1.0).abs() < 1e-6);
    let c = reference_curves();
    assert!((integrate(|r| r * goe_density(r)) - c.goe_mean).abs() < 1e-3);
    assert!((integrate(|r| r * poisson_density(r)) - c.poisson_mean).abs() < 1e-6);
}

#[test]
fn three_by_three_goe_matches_surmise() {
    // The surmise is exact for 3x3 GOE matrices.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut pooled = Vec::new();
    for _ in 0..40_000 {
        let mut m = Matrix3::<f64>::zeros();
        for i in 0..3 {
            for j in i..3 {
                let x: f64 = rng.sample(StandardNormal);
                let v = if i == j { x } else { x / 2f64.sqrt() };
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let mut e: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        pooled.push(spacing_ratios(&e).unwrap());
    }
    let s = RatioSample::pooled(&pooled, None);
    assert!((s.mean - reference_curves().goe_mean).abs() < 0.005, "mean {}", s.mean);
    let h = ratio_histogram(&s, 10).unwrap();
    for (d, e) in h.density.iter().zip(h.edges.windows(2)) {
        let expect = integrate(|r| if r >= e[0] && r < e[1] { goe_density(r) } else { 0.0 }) / (e[1] - e[0]);
        assert!((d - expect).abs() < 0.06, "bin {e:?}: {d} vs {expect}");
    }
}

#[test]
fn uncorrelated_levels_give_poisson_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut e: Vec<f64> = (0..200_000).map(|_| rng.random::<f64>()).collect();
    e.sort_by(f64::total_cmp);
    let s = spacing_ratios(&e).unwrap();
    assert!((s.mean - reference_curves().poisson_mean).abs() < 0.005, "mean {}", s.mean);
}
