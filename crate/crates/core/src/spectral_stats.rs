//! Level-spacing-ratio statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spacings at or below this are treated as exact degeneracies.
pub const DEGENERACY_TOL: f64 = 1e-13;

/// Where a ratio sample came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSource {
    pub sites: usize,
    pub w: f64,
    pub realizations: usize,
}

/// Pooled spacing ratios `r_n = min(δ_{n+1}/δ_n, δ_n/δ_{n+1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSample {
    pub ratios: Vec<f64>,
    pub mean: f64,
    /// Ratios dropped because one of their two spacings was degenerate.
    pub skipped_degenerate: usize,
    pub source: Option<RatioSource>,
}

impl RatioSample {
    /// Pool several samples; the mean is over all pooled ratios.
    pub fn pooled(samples: &[RatioSample], source: Option<RatioSource>) -> Self {
        let ratios: Vec<f64> = samples.iter().flat_map(|s| s.ratios.iter().copied()).collect();
        let skipped = samples.iter().map(|s| s.skipped_degenerate).sum();
        Self { mean: mean(&ratios), ratios, skipped_degenerate: skipped, source }
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Central third of a sorted spectrum: start `floor(n/3)`, length `floor(n/3)`.
pub fn middle_third(energies: &[f64]) -> Result<&[f64]> {
    let n = energies.len();
    if n < 3 {
        return Err(Error::param(format!("need at least 3 levels, got {n}")));
    }
    let third = n / 3;
    Ok(&energies[third..2 * third])
}

/// Spacing ratios of an ascending spectrum.
pub fn spacing_ratios(energies: &[f64]) -> Result<RatioSample> {
    if energies.len() < 3 {
        return Err(Error::param(format!("need at least 3 levels, got {}", energies.len())));
    }
    if energies.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("energies must be sorted ascending"));
    }
    let mut ratios = Vec::with_capacity(energies.len() - 2);
    let mut skipped = 0;
    for w in energies.windows(3) {
        let d0 = w[1] - w[0];
        let d1 = w[2] - w[1];
        if d0 <= DEGENERACY_TOL || d1 <= DEGENERACY_TOL {
            skipped += 1;
            continue;
        }
        ratios.push((d1 / d0).min(d0 / d1));
    }
    Ok(RatioSample { mean: mean(&ratios), ratios, skipped_degenerate: skipped, source: None })
}

/// Normalized histogram on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
}

impl Histogram {
    /// `Σ density × width`; one for any non-empty sample.
    pub fn integral(&self) -> f64 {
        self.density
            .iter()
            .zip(self.edges.windows(2))
            .map(|(d, e)| d * (e[1] - e[0]))
            .sum()
    }
}

/// Density histogram `p(r)` with `bins` equal bins on `[0, 1]`; `r = 1`
/// falls in the last bin.
pub fn ratio_histogram(sample: &RatioSample, bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::param("histogram needs at least one bin"));
    }
    let width = 1.0 / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| i as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    for &r in &sample.ratios {
        let i = ((r / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let n = sample.ratios.len() as f64;
    let density = counts
        .iter()
        .map(|&c| if n > 0.0 { c as f64 / (n * width) } else { 0.0 })
        .collect();
    Ok(Histogram { edges, density })
}

/// Poisson ratio density `2 / (1 + r)^2` on `[0, 1]`.
pub fn poisson_density(r: f64) -> f64 {
    2.0 / (1.0 + r).powi(2)
}

/// GOE surmise `(27/4) (r + r²) / (1 + r + r²)^{5/2}` on `[0, 1]`.
pub fn goe_density(r: f64) -> f64 {
    27.0 / 4.0 * (r + r * r) / (1.0 + r + r * r).powf(2.5)
}

/// Analytic reference means and densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCurves {
    pub poisson_mean: f64,
    pub goe_mean: f64,
}

impl ReferenceCurves {
    pub fn poisson(&self, r: f64) -> f64 {
        poisson_density(r)
    }

    pub fn goe(&self, r: f64) -> f64 {
        goe_density(r)
    }
}

pub fn reference_curves() -> ReferenceCurves {
    ReferenceCurves {
        poisson_mean: 2.0 * std::f64::consts::LN_2 - 1.0,
        goe_mean: 4.0 - 2.0 * 3f64.sqrt(),
    }
}
