//! End-to-end protocols: state preparation, quenches, saturation values,
//! sweeps over the preparation time, and their classification.

mod classify;
mod spectra;
mod sweep;

pub use classify::{classify_dynamics, ClassLabel, Classification, ClassificationDiagnostics, Thresholds};
pub use spectra::{eigenstate_sweep, level_statistics, scaled_ranks, EigenRow, REFERENCE_RANKS, REFERENCE_RANK_DIM};
pub use sweep::{
    delta_s_sweep, protocol_trajectory, reservoir_average, reservoir_curve, ReservoirCurve, ReservoirRow,
    RunSample, SweepRow, SweepTable,
};

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::entanglement::{BipartitionEntropies, Estimate};
use crate::error::{Error, Result};
use crate::evolution::{
    build_floquet, floquet_power, propagate, run_rqc, spectral_decompose, Provenance, Schedule, SectorState,
    SpectralDecomposition, Trajectory,
};
use crate::operators::{
    build_ising_z, build_local_cut, build_xxz, build_xy, sample_fields_seeded, DisorderFields, OperatorMatrix,
};
use crate::sector_basis::{SectorBasis, SubsystemSplit};

/// Preparation times used for the `ΔS(S_initial)` sweeps.
pub const DEFAULT_T_LIST: [f64; 37] = [
    0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0, 3.3, 3.6, 3.9, 4.2, 4.5, 5.0, 5.5, 6.0,
    6.5, 7.0, 7.5, 8.0, 8.5, 9.0, 9.5, 10.0, 11.0, 12.2, 13.7, 15.7, 19.0, 24.0, 32.0, 500.0,
];

/// Evaluation time of Hamiltonian saturation values.
pub const SATURATION_TIME: f64 = 1e12;
/// Period count of Floquet saturation values.
pub const SATURATION_PERIOD: u64 = 300_000_000_000;
/// Free-fermion saturation window `t = 201, 202, ..., 300`.
pub const FREE_FERMION_WINDOW: (u64, u64) = (201, 300);
/// Circuit saturation window `D = 1901, ..., 2000`.
pub const CIRCUIT_WINDOW: (usize, usize) = (1901, 2000);
/// Independent circuit realizations averaged inside one run.
pub const CIRCUITS_PER_RUN: usize = 5;

pub const THERMAL_W: f64 = 0.5;
pub const MBL_W: f64 = 5.0;
pub const DEFAULT_JZ: f64 = 0.5;
pub const FLOQUET_T0: f64 = 1.0;
pub const FLOQUET_T1: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Thermal,
    HamiltonianMbl,
    FreeFermion,
    FloquetMbl,
    Anderson,
    Rqc,
}

impl ProtocolKind {
    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Thermal => "thermal",
            ProtocolKind::HamiltonianMbl => "hamiltonian_mbl",
            ProtocolKind::FreeFermion => "free_fermion",
            ProtocolKind::FloquetMbl => "floquet_mbl",
            ProtocolKind::Anderson => "anderson",
            ProtocolKind::Rqc => "rqc",
        }
    }
}

/// A quench protocol and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    /// Disorder strength of the quench Hamiltonian (or of `H0` for Floquet).
    #[serde(rename = "W")]
    pub w: f64,
    pub jz: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "T0")]
    pub t0: f64,
    #[serde(rename = "T1")]
    pub t1: f64,
}

impl ProtocolSpec {
    /// Standard parameters for each kind; the SWAP circuit for `Rqc`.
    pub fn defaults(kind: ProtocolKind) -> Self {
        let pi = std::f64::consts::PI;
        let base = Self { kind, w: 0.0, jz: 0.0, alpha: 0.0, beta: 0.0, t0: FLOQUET_T0, t1: FLOQUET_T1 };
        match kind {
            ProtocolKind::Thermal => Self { w: THERMAL_W, jz: DEFAULT_JZ, ..base },
            ProtocolKind::HamiltonianMbl => Self { w: MBL_W, jz: DEFAULT_JZ, ..base },
            ProtocolKind::FreeFermion => base,
            ProtocolKind::FloquetMbl => Self { w: MBL_W, ..base },
            ProtocolKind::Anderson => Self { w: MBL_W, ..base },
            ProtocolKind::Rqc => Self { alpha: pi, beta: pi, ..base },
        }
    }

    pub fn thermal() -> Self {
        Self::defaults(ProtocolKind::Thermal)
    }

    pub fn hamiltonian_mbl() -> Self {
        Self::defaults(ProtocolKind::HamiltonianMbl)
    }

    pub fn free_fermion() -> Self {
        Self::defaults(ProtocolKind::FreeFermion)
    }

    pub fn floquet_mbl() -> Self {
        Self::defaults(ProtocolKind::FloquetMbl)
    }

    pub fn anderson() -> Self {
        Self::defaults(ProtocolKind::Anderson)
    }

    pub fn rqc(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta, ..Self::defaults(ProtocolKind::Rqc) }
    }

    /// `α = β = π`: SWAP up to a global phase.
    pub fn swap() -> Self {
        Self::defaults(ProtocolKind::Rqc)
    }

    pub fn is_swap(&self) -> bool {
        let pi = std::f64::consts::PI;
        self.kind == ProtocolKind::Rqc && (self.alpha - pi).abs() < 1e-12 && (self.beta - pi).abs() < 1e-12
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.w, self.jz, self.alpha, self.beta, self.t0, self.t1].iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::param("protocol parameters must be finite"));
        }
        if self.w < 0.0 {
            return Err(Error::param(format!("disorder strength must be >= 0, got {}", self.w)));
        }
        if self.kind == ProtocolKind::FloquetMbl && (self.t0 < 0.0 || self.t1 < 0.0) {
            return Err(Error::param("Floquet durations must be >= 0"));
        }
        Ok(())
    }

    fn disorder_tag(&self) -> String {
        format!("quench_disorder_{}", self.kind.name())
    }
}

/// How the initial entangled state is prepared from a product state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    /// `exp(-i T H(W)) |ψ0>` with the full XXZ chain.
    Thermalized,
    /// Same, with the central bond removed; half-chain entropy stays zero.
    LocallyEntangled,
}

/// Preparation Hamiltonian parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Preparation {
    pub kind: InitialKind,
    #[serde(rename = "W")]
    pub w: f64,
    pub jz: f64,
}

impl Default for Preparation {
    fn default() -> Self {
        Self { kind: InitialKind::Thermalized, w: THERMAL_W, jz: DEFAULT_JZ }
    }
}

impl Preparation {
    pub fn locally_entangled() -> Self {
        Self { kind: InitialKind::LocallyEntangled, ..Self::default() }
    }

    pub fn operator(&self, basis: &Arc<SectorBasis>, fields: &DisorderFields) -> Result<OperatorMatrix<f64>> {
        match self.kind {
            InitialKind::Thermalized => build_xxz(basis, self.jz, fields),
            InitialKind::LocallyEntangled => build_local_cut(basis, self.jz, fields),
        }
    }

    /// Decomposition of the preparation Hamiltonian for one disorder draw.
    pub fn decompose(&self, basis: &Arc<SectorBasis>, fields: &DisorderFields) -> Result<SpectralDecomposition<f64>> {
        spectral_decompose(&self.operator(basis, fields)?)
    }
}

/// Seed of the named stream for one run: the first eight bytes of
/// `SHA-256(master_seed || run || tag)`.
pub fn stream_seed(master_seed: u64, run: u64, tag: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(run.to_le_bytes());
    h.update(tag.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

pub fn stream_rng(master_seed: u64, run: u64, tag: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(master_seed, run, tag))
}

/// Seeds of every stream one run draws from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub run: u64,
    pub psi0: u64,
    pub prep_disorder: u64,
    pub quench_disorder: u64,
    pub circuits: Vec<u64>,
}

impl RunSeeds {
    pub fn derive(master_seed: u64, run: u64, spec: &ProtocolSpec) -> Self {
        Self {
            run,
            psi0: stream_seed(master_seed, run, "psi0"),
            prep_disorder: stream_seed(master_seed, run, "prep_disorder"),
            quench_disorder: stream_seed(master_seed, run, &spec.disorder_tag()),
            circuits: (0..CIRCUITS_PER_RUN)
                .map(|m| stream_seed(master_seed, run, &format!("circuit_{m}")))
                .collect(),
        }
    }
}

/// Uniformly random computational basis state of the sector.
pub fn sample_initial_product<R: Rng + ?Sized>(basis: &Arc<SectorBasis>, rng: &mut R) -> SectorState<f64> {
    let k = rng.random_range(0..basis.dim());
    SectorState::basis_state(basis.clone(), k).expect("ordinal in range")
}

/// `exp(-i T H(W)) |ψ0>` for the given preparation fields (`J_z = 0.5`).
pub fn prepare_thermalized(psi0: &SectorState<f64>, fields: &DisorderFields, t: f64) -> Result<SectorState<f64>> {
    let d = Preparation::default().decompose(psi0.basis(), fields)?;
    propagate(&d, psi0, t)
}

/// `exp(-i T H_local) |ψ0>`, the central bond removed.
pub fn prepare_locally_entangled(
    psi0: &SectorState<f64>,
    fields: &DisorderFields,
    t: f64,
) -> Result<SectorState<f64>> {
    let d = Preparation::locally_entangled().decompose(psi0.basis(), fields)?;
    propagate(&d, psi0, t)
}

/// Eigenvector with the given 1-based ascending-energy rank.
pub fn select_eigenstate(h: &OperatorMatrix<f64>, rank: usize) -> Result<SectorState<f64>> {
    let d = spectral_decompose(h)?;
    eigenstate_of(&d, rank)
}

pub(crate) fn eigenstate_of(d: &SpectralDecomposition<f64>, rank: usize) -> Result<SectorState<f64>> {
    if rank == 0 || rank > d.dim() {
        return Err(Error::param(format!("rank {rank} outside 1..={}", d.dim())));
    }
    d.eigenstate(rank - 1)
}

/// Quench dynamics instantiated for one disorder draw.
pub enum Dynamics {
    Hamiltonian(SpectralDecomposition<f64>),
    Floquet(SpectralDecomposition<f64>),
    Circuit { alpha: f64, beta: f64 },
}

/// Build the quench dynamics of `spec`, drawing fields from `seed`.
pub fn build_dynamics(basis: &Arc<SectorBasis>, spec: &ProtocolSpec, seed: u64) -> Result<Dynamics> {
    spec.validate()?;
    let l = basis.sites();
    Ok(match spec.kind {
        ProtocolKind::Thermal | ProtocolKind::HamiltonianMbl | ProtocolKind::Anderson | ProtocolKind::FreeFermion => {
            let fields = sample_fields_seeded(l, spec.w, seed)?;
            Dynamics::Hamiltonian(spectral_decompose(&build_xxz(basis, spec.jz, &fields)?)?)
        }
        ProtocolKind::FloquetMbl => {
            let fields = sample_fields_seeded(l, spec.w, seed)?;
            let h0 = build_ising_z(basis, &fields)?;
            let hxy = build_xy(basis)?;
            Dynamics::Floquet(build_floquet(&h0, &hxy, spec.t0, spec.t1)?)
        }
        ProtocolKind::Rqc => Dynamics::Circuit { alpha: spec.alpha, beta: spec.beta },
    })
}

/// Half-chain split and bipartition cache for one sector.
pub struct EntropyKit {
    half: SubsystemSplit,
    bipartitions: BipartitionEntropies,
}

impl EntropyKit {
    pub fn new(basis: &Arc<SectorBasis>) -> Result<Self> {
        let l = basis.sites();
        let half: Vec<usize> = (1..=l / 2).collect();
        Ok(Self { half: basis.split(&half)?, bipartitions: BipartitionEntropies::new(basis.clone())? })
    }

    pub fn hcee(&self, s: &SectorState<f64>) -> Result<f64> {
        crate::entanglement::split_entropy(s, &self.half)
    }

    pub fn baee(&self, s: &SectorState<f64>) -> Result<f64> {
        self.bipartitions.baee(s)
    }
}

/// Long-time half-chain entropy of `initial` under `dynamics`.
///
/// Hamiltonian protocols use `t = 1e12` except free fermions, which average
/// `t = 201..=300`; Floquet uses period `3e11`; the SWAP circuit returns the
/// bipartition average of the initial state; other circuits average depths
/// `1901..=2000` over the supplied circuit seeds.
pub fn saturation_value(
    initial: &SectorState<f64>,
    spec: &ProtocolSpec,
    dynamics: &Dynamics,
    circuit_seeds: &[u64],
    kit: &EntropyKit,
) -> Result<f64> {
    match dynamics {
        Dynamics::Hamiltonian(d) if spec.kind == ProtocolKind::FreeFermion => {
            let (a, b) = FREE_FERMION_WINDOW;
            let mut acc = 0.0;
            for t in a..=b {
                acc += kit.hcee(&propagate(d, initial, t as f64)?)?;
            }
            Ok(acc / (b - a + 1) as f64)
        }
        Dynamics::Hamiltonian(d) => kit.hcee(&propagate(d, initial, SATURATION_TIME)?),
        Dynamics::Floquet(d) => kit.hcee(&floquet_power(d, initial, SATURATION_PERIOD)?),
        Dynamics::Circuit { .. } if spec.is_swap() => kit.baee(initial),
        Dynamics::Circuit { alpha, beta } => {
            if circuit_seeds.is_empty() {
                return Err(Error::param("circuit saturation needs at least one circuit seed"));
            }
            let (a, b) = CIRCUIT_WINDOW;
            let record: Vec<usize> = (a..=b).collect();
            let mut acc = 0.0;
            for &seed in circuit_seeds {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let tr = run_rqc(initial, *alpha, *beta, b, &mut rng, &record, false)?;
                acc += tr.hcee.iter().sum::<f64>() / tr.hcee.len() as f64;
            }
            Ok(acc / circuit_seeds.len() as f64)
        }
    }
}

/// Half-chain entropy of `initial` along `schedule` under `spec`, with the
/// quench disorder (or circuit) drawn from `seed`. For Floquet dynamics the
/// schedule counts periods; for circuits it counts gates.
pub fn run_protocol(
    initial: &SectorState<f64>,
    spec: &ProtocolSpec,
    schedule: &Schedule,
    seed: u64,
) -> Result<Trajectory> {
    let dynamics = build_dynamics(initial.basis(), spec, seed)?;
    let kit = EntropyKit::new(initial.basis())?;
    run_dynamics(initial, spec, &dynamics, schedule, seed, &kit)
}

pub(crate) fn run_dynamics(
    initial: &SectorState<f64>,
    spec: &ProtocolSpec,
    dynamics: &Dynamics,
    schedule: &Schedule,
    seed: u64,
    kit: &EntropyKit,
) -> Result<Trajectory> {
    let mut provenance = Provenance { description: spec.kind.name().to_string(), ..Default::default() };
    provenance.seeds.insert("quench".into(), seed);
    for (k, v) in [("W", spec.w), ("jz", spec.jz), ("alpha", spec.alpha), ("beta", spec.beta), ("T0", spec.t0), ("T1", spec.t1)] {
        provenance.parameters.insert(k.into(), v);
    }
    let (times, hcee) = match dynamics {
        Dynamics::Hamiltonian(d) => {
            let mut h = Vec::with_capacity(schedule.points().len());
            for &t in schedule.points() {
                h.push(kit.hcee(&propagate(d, initial, t)?)?);
            }
            (schedule.points().to_vec(), h)
        }
        Dynamics::Floquet(d) => {
            let periods = schedule.integer_points();
            let mut h = Vec::with_capacity(periods.len());
            for &n in &periods {
                h.push(kit.hcee(&floquet_power(d, initial, n)?)?);
            }
            (periods.iter().map(|&n| n as f64).collect(), h)
        }
        Dynamics::Circuit { alpha, beta } => {
            let depths: Vec<usize> = schedule.integer_points().iter().map(|&d| d as usize).collect();
            let depth = depths.last().copied().unwrap_or(0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tr = run_rqc(initial, *alpha, *beta, depth, &mut rng, &depths, false)?;
            (tr.times, tr.hcee)
        }
    };
    Ok(Trajectory { times, hcee, baee: None, provenance })
}

/// Mean and standard error helper shared by the sweeps.
pub(crate) fn estimate(xs: &[f64]) -> Estimate {
    let mut e = Estimate::from_samples(xs);
    if xs.len() == 1 {
        e.stderr = 0.0;
    }
    e
}
