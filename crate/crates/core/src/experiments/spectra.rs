use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_dynamics, eigenstate_of, estimate, saturation_value, stream_seed, EntropyKit, Preparation, ProtocolSpec, RunSeeds};
use crate::error::{Error, Result};
use crate::evolution::eigenvalues;
use crate::operators::{build_xxz, sample_fields_seeded};
use crate::sector_basis::SectorBasis;
use crate::spectral_stats::{middle_third, spacing_ratios, RatioSample, RatioSource};

/// Sector dimension the reference rank list refers to (`L = 16`).
pub const REFERENCE_RANK_DIM: usize = 12870;

/// Reference energy ranks for the eigenstate sweep at `L = 16`.
pub const REFERENCE_RANKS: [usize; 39] = [
    1, 2, 4, 8, 15, 29, 52, 87, 142, 222, 337, 494, 704, 978, 1324, 1750, 2259, 2855, 3533, 4283, 5095, 5950, 6826,
    7700, 8548, 9348, 10079, 10727, 11280, 11737, 12098, 12371, 12568, 12701, 12785, 12833, 12857, 12867, 12870,
];

/// Reference ranks rescaled to a sector of dimension `dim`, rounded, clamped
/// to `1..=dim`, and deduplicated.
pub fn scaled_ranks(dim: usize) -> Vec<usize> {
    let mut out: Vec<usize> = REFERENCE_RANKS
        .iter()
        .map(|&r| ((r as f64 * dim as f64 / REFERENCE_RANK_DIM as f64).round() as usize).clamp(1, dim))
        .collect();
    out.dedup();
    out
}

/// Pooled middle-third spacing ratios of the XXZ chain over independent
/// disorder realizations (stream `levelstats_disorder`).
pub fn level_statistics(sites: usize, w: f64, jz: f64, realizations: usize, master_seed: u64) -> Result<RatioSample> {
    if realizations == 0 {
        return Err(Error::param("realizations must be >= 1"));
    }
    let basis = Arc::new(SectorBasis::half_filling(sites)?);
    let samples: Vec<RatioSample> = (0..realizations as u64)
        .into_par_iter()
        .map(|r| {
            let fields = sample_fields_seeded(sites, w, stream_seed(master_seed, r, "levelstats_disorder"))?;
            let e = eigenvalues(&build_xxz::<f64>(&basis, jz, &fields)?)?;
            spacing_ratios(middle_third(&e)?)
        })
        .collect::<Result<_>>()?;
    Ok(RatioSample::pooled(&samples, Some(RatioSource { sites, w, realizations })))
}

/// One energy rank of the eigenstate sweep, averaged over runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenRow {
    pub rank: usize,
    pub energy: f64,
    pub s_initial: f64,
    pub s_sat: f64,
    pub delta_s: f64,
    pub stderr_initial: f64,
    pub stderr_sat: f64,
}

/// Eigenstates of the preparation Hamiltonian (stream `eigen_disorder`)
/// used as initial states of `spec`.
pub fn eigenstate_sweep(
    sites: usize,
    ranks: &[usize],
    spec: &ProtocolSpec,
    preparation: &Preparation,
    runs: usize,
    master_seed: u64,
) -> Result<Vec<EigenRow>> {
    if runs == 0 {
        return Err(Error::param("runs must be >= 1"));
    }
    if ranks.is_empty() {
        return Err(Error::param("rank list is empty"));
    }
    let basis = Arc::new(SectorBasis::half_filling(sites)?);
    let kit = EntropyKit::new(&basis)?;
    // (energy, s_initial, s_sat) per run and rank
    let per_run: Vec<Vec<(f64, f64, f64)>> = (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            let seeds = RunSeeds::derive(master_seed, r, spec);
            let fields = sample_fields_seeded(sites, preparation.w, stream_seed(master_seed, r, "eigen_disorder"))?;
            let prep = preparation.decompose(&basis, &fields)?;
            let dynamics = build_dynamics(&basis, spec, seeds.quench_disorder)?;
            ranks
                .iter()
                .map(|&k| {
                    let psi = eigenstate_of(&prep, k)?;
                    let s0 = kit.hcee(&psi)?;
                    let s1 = saturation_value(&psi, spec, &dynamics, &seeds.circuits, &kit)?;
                    Ok((prep.eigenvalues()[k - 1], s0, s1))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(ranks
        .iter()
        .enumerate()
        .map(|(i, &rank)| {
            let e = estimate(&per_run.iter().map(|r| r[i].0).collect::<Vec<_>>());
            let a = estimate(&per_run.iter().map(|r| r[i].1).collect::<Vec<_>>());
            let b = estimate(&per_run.iter().map(|r| r[i].2).collect::<Vec<_>>());
            EigenRow {
                rank,
                energy: e.mean,
                s_initial: a.mean,
                s_sat: b.mean,
                delta_s: b.mean - a.mean,
                stderr_initial: a.stderr,
                stderr_sat: b.stderr,
            }
        })
        .collect())
}
