use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    build_dynamics, estimate, run_dynamics, sample_initial_product, saturation_value, stream_rng, stream_seed,
    EntropyKit, Preparation, ProtocolSpec, RunSeeds,
};
use crate::error::{Error, Result};
use crate::evolution::{propagate, Schedule, SectorState, SpectralDecomposition, Trajectory};
use crate::operators::sample_fields_seeded;
use crate::sector_basis::SectorBasis;

/// One preparation time of a sweep, averaged over runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "T")]
    pub t: f64,
    pub s_initial: f64,
    pub s_sat: f64,
    /// Always `s_sat - s_initial`.
    pub delta_s: f64,
    pub stderr_initial: f64,
    pub stderr_sat: f64,
    pub runs: usize,
}

/// Per-run values behind one row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSample {
    pub s_initial: f64,
    pub s_sat: f64,
}

/// `ΔS` against preparation time for one protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub protocol: ProtocolSpec,
    pub preparation: Preparation,
    #[serde(rename = "L")]
    pub sites: usize,
    pub runs: usize,
    pub master_seed: u64,
    pub rows: Vec<SweepRow>,
    /// `samples[row][run]`.
    #[serde(skip)]
    pub samples: Vec<Vec<RunSample>>,
    pub seeds: Vec<RunSeeds>,
}

fn validate_times(t_list: &[f64]) -> Result<()> {
    if t_list.is_empty() {
        return Err(Error::param("preparation time list is empty"));
    }
    if t_list.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::param("preparation times must be finite and >= 0"));
    }
    Ok(())
}

/// Average `S_initial`, `S_sat`, and `ΔS` over `runs` independent draws of
/// `(ψ0, preparation disorder, quench disorder, circuits)` for every `T`.
///
/// Runs execute in parallel; results are reduced in `(T, run)` order so the
/// output does not depend on scheduling.
pub fn delta_s_sweep(
    sites: usize,
    t_list: &[f64],
    spec: &ProtocolSpec,
    preparation: &Preparation,
    runs: usize,
    master_seed: u64,
) -> Result<SweepTable> {
    if runs == 0 {
        return Err(Error::param("runs must be >= 1"));
    }
    validate_times(t_list)?;
    spec.validate()?;
    let basis = Arc::new(SectorBasis::half_filling(sites)?);
    let kit = EntropyKit::new(&basis)?;
    let seeds: Vec<RunSeeds> = (0..runs as u64).map(|r| RunSeeds::derive(master_seed, r, spec)).collect();

    let per_run: Vec<Vec<RunSample>> = seeds
        .par_iter()
        .map(|rs| -> Result<Vec<RunSample>> {
            let psi0 = sample_initial_product(&basis, &mut ChaCha8Rng::seed_from_u64(rs.psi0));
            let prep_fields = sample_fields_seeded(sites, preparation.w, rs.prep_disorder)?;
            let prep = preparation.decompose(&basis, &prep_fields)?;
            let dynamics = build_dynamics(&basis, spec, rs.quench_disorder)?;
            t_list
                .iter()
                .map(|&t| {
                    let psi_t = propagate(&prep, &psi0, t)?;
                    Ok(RunSample {
                        s_initial: kit.hcee(&psi_t)?,
                        s_sat: saturation_value(&psi_t, spec, &dynamics, &rs.circuits, &kit)?,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(t_list.len());
    let mut samples = Vec::with_capacity(t_list.len());
    for (i, &t) in t_list.iter().enumerate() {
        let col: Vec<RunSample> = per_run.iter().map(|r| r[i]).collect();
        let ini = estimate(&col.iter().map(|s| s.s_initial).collect::<Vec<_>>());
        let sat = estimate(&col.iter().map(|s| s.s_sat).collect::<Vec<_>>());
        rows.push(SweepRow {
            t,
            s_initial: ini.mean,
            s_sat: sat.mean,
            delta_s: sat.mean - ini.mean,
            stderr_initial: ini.stderr,
            stderr_sat: sat.stderr,
            runs,
        });
        samples.push(col);
    }
    Ok(SweepTable {
        protocol: *spec,
        preparation: *preparation,
        sites,
        runs,
        master_seed,
        rows,
        samples,
        seeds,
    })
}

/// Disorder-averaged trajectory of `spec` starting from prepared states.
pub fn protocol_trajectory(
    sites: usize,
    spec: &ProtocolSpec,
    preparation: &Preparation,
    t_prep: f64,
    schedule: &Schedule,
    runs: usize,
    master_seed: u64,
) -> Result<Trajectory> {
    if runs == 0 {
        return Err(Error::param("runs must be >= 1"));
    }
    validate_times(&[t_prep])?;
    let basis = Arc::new(SectorBasis::half_filling(sites)?);
    let kit = EntropyKit::new(&basis)?;
    let seeds: Vec<RunSeeds> = (0..runs as u64).map(|r| RunSeeds::derive(master_seed, r, spec)).collect();
    let trajectories: Vec<Trajectory> = seeds
        .par_iter()
        .map(|rs| {
            let psi0 = sample_initial_product(&basis, &mut ChaCha8Rng::seed_from_u64(rs.psi0));
            let fields = sample_fields_seeded(sites, preparation.w, rs.prep_disorder)?;
            let prep = preparation.decompose(&basis, &fields)?;
            let psi = propagate(&prep, &psi0, t_prep)?;
            let dynamics = build_dynamics(&basis, spec, rs.quench_disorder)?;
            let quench_seed = if spec.kind == super::ProtocolKind::Rqc { rs.circuits[0] } else { rs.quench_disorder };
            run_dynamics(&psi, spec, &dynamics, schedule, quench_seed, &kit)
        })
        .collect::<Result<_>>()?;
    let mut avg = Trajectory::average(&trajectories)?;
    avg.provenance.description = format!("{} averaged over {runs} runs", spec.kind.name());
    avg.provenance.seeds.clear();
    avg.provenance.seeds.insert("master".into(), master_seed);
    avg.provenance.parameters.insert("T_prep".into(), t_prep);
    avg.provenance.parameters.insert("L".into(), sites as f64);
    Ok(avg)
}

/// Entropies of the prepared state along a preparation-time grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReservoirRow {
    #[serde(rename = "T")]
    pub t: f64,
    pub baee: f64,
    pub hcee: f64,
    /// `baee - hcee`.
    pub difference: f64,
}

/// Reservoir curve with the location of its largest difference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirCurve {
    pub rows: Vec<ReservoirRow>,
    pub argmax: usize,
}

impl ReservoirCurve {
    fn from_rows(rows: Vec<ReservoirRow>) -> Self {
        let argmax = rows
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, r)| if r.difference > bv { (i, r.difference) } else { (bi, bv) })
            .0;
        Self { rows, argmax }
    }

    pub fn peak(&self) -> &ReservoirRow {
        &self.rows[self.argmax]
    }
}

/// `(T, BAEE, HCEE, BAEE - HCEE)` of `exp(-iTH) ψ0` for each `T` in the grid.
pub fn reservoir_curve(
    psi0: &SectorState<f64>,
    prep: &SpectralDecomposition<f64>,
    t_grid: &[f64],
    kit: &EntropyKit,
) -> Result<ReservoirCurve> {
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("reservoir grid must be strictly increasing"));
    }
    let rows = t_grid
        .iter()
        .map(|&t| {
            let psi = propagate(prep, psi0, t)?;
            let baee = kit.baee(&psi)?;
            let hcee = kit.hcee(&psi)?;
            Ok(ReservoirRow { t, baee, hcee, difference: baee - hcee })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReservoirCurve::from_rows(rows))
}

/// [`reservoir_curve`] averaged over runs, each with its own `ψ0` and
/// preparation disorder (stream `reservoir_disorder`).
pub fn reservoir_average(
    sites: usize,
    t_grid: &[f64],
    preparation: &Preparation,
    runs: usize,
    master_seed: u64,
) -> Result<ReservoirCurve> {
    if runs == 0 {
        return Err(Error::param("runs must be >= 1"));
    }
    validate_times(t_grid)?;
    let basis = Arc::new(SectorBasis::half_filling(sites)?);
    let kit = EntropyKit::new(&basis)?;
    let curves: Vec<ReservoirCurve> = (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            let psi0 = sample_initial_product(&basis, &mut stream_rng(master_seed, r, "psi0"));
            let fields = sample_fields_seeded(sites, preparation.w, stream_seed(master_seed, r, "reservoir_disorder"))?;
            let prep = preparation.decompose(&basis, &fields)?;
            reservoir_curve(&psi0, &prep, t_grid, &kit)
        })
        .collect::<Result<_>>()?;
    let n = runs as f64;
    let rows = (0..t_grid.len())
        .map(|i| {
            let baee = curves.iter().map(|c| c.rows[i].baee).sum::<f64>() / n;
            let hcee = curves.iter().map(|c| c.rows[i].hcee).sum::<f64>() / n;
            ReservoirRow { t: t_grid[i], baee, hcee, difference: baee - hcee }
        })
        .collect();
    Ok(ReservoirCurve::from_rows(rows))
}
