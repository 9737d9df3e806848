//! Exact time evolution inside a sector.
//!
//! Hamiltonian evolution and Floquet powers both go through a full
//! eigendecomposition, so any time or period count costs the same two
//! matrix-vector products. Phases `E_k t` and `n θ_k` are reduced modulo
//! `2π` with an error-free product (see [`reduced_phase`]); what remains at
//! `t = 1e12` is the inherited rounding of the eigenvalues themselves,
//! roughly `1e-4` rad, well below anything a dephased entropy resolves.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use crate::state::SectorState;

use crate::entanglement;
use crate::error::{Error, Result};
use crate::operators::{apply_gate_in_place, build_two_qubit_gate, OperatorMatrix};
use crate::scalar::{cis, modulus, reduced_phase, Scalar};
use crate::sector_basis::SectorBasis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionKind {
    /// Real energies of a Hermitian operator.
    Hermitian,
    /// Quasi-energy phases `θ_k` of a unitary, eigenvalues `exp(i θ_k)`.
    Unitary,
}

#[derive(Debug, Clone)]
enum Eigenvectors<T: Scalar> {
    Real(DMatrix<T>),
    Complex(DMatrix<Complex<T>>),
}

/// Eigenvalues and orthonormal eigenvectors of a sector operator.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition<T: Scalar> {
    basis: Arc<SectorBasis>,
    kind: DecompositionKind,
    values: Vec<T>,
    vectors: Eigenvectors<T>,
}

fn sort_columns<T: Scalar, N: nalgebra::Scalar + Copy>(
    values: &[T],
    vectors: &DMatrix<N>,
) -> (Vec<T>, DMatrix<N>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite eigenvalues"));
    let sorted: Vec<T> = order.iter().map(|&k| values[k]).collect();
    let v = DMatrix::from_fn(vectors.nrows(), vectors.ncols(), |i, j| vectors[(i, order[j])]);
    (sorted, v)
}

/// Diagonalize a Hermitian sector operator; eigenvalues ascending.
pub fn spectral_decompose<T: Scalar>(h: &OperatorMatrix<T>) -> Result<SpectralDecomposition<T>> {
    let n = h.dim();
    if h.is_diagonal() {
        let values: Vec<T> = h.matrix().diagonal().iter().copied().collect();
        let (values, vectors) = sort_columns(&values, &DMatrix::<T>::identity(n, n));
        return Ok(SpectralDecomposition {
            basis: h.basis().clone(),
            kind: DecompositionKind::Hermitian,
            values,
            vectors: Eigenvectors::Real(vectors),
        });
    }
    let eig = SymmetricEigen::try_new(h.matrix().clone(), T::default_epsilon(), 200 * n.max(10))
        .ok_or_else(|| {
            Error::numeric(format!(
                "symmetric eigensolver did not converge (dim {n}, frobenius norm {:?})",
                h.matrix().norm()
            ))
        })?;
    let values: Vec<T> = eig.eigenvalues.iter().copied().collect();
    let (values, vectors) = sort_columns(&values, &eig.eigenvectors);
    Ok(SpectralDecomposition {
        basis: h.basis().clone(),
        kind: DecompositionKind::Hermitian,
        values,
        vectors: Eigenvectors::Real(vectors),
    })
}

/// Ascending eigenvalues only.
pub fn eigenvalues<T: Scalar>(h: &OperatorMatrix<T>) -> Result<Vec<T>> {
    let n = h.dim();
    let eig = SymmetricEigen::try_new(h.matrix().clone(), T::default_epsilon(), 200 * n.max(10))
        .ok_or_else(|| Error::numeric(format!("symmetric eigensolver did not converge (dim {n})")))?;
    let mut v: Vec<T> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Ok(v)
}

impl<T: Scalar> SpectralDecomposition<T> {
    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn kind(&self) -> DecompositionKind {
        self.kind
    }

    /// Energies (Hermitian) or phases in `(-π, π]` (unitary), ascending.
    pub fn eigenvalues(&self) -> &[T] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Column `k` of the eigenvector matrix as a state.
    pub fn eigenstate(&self, k: usize) -> Result<SectorState<T>> {
        if k >= self.dim() {
            return Err(Error::param(format!("eigenvector index {k} >= dimension {}", self.dim())));
        }
        let amps = match &self.vectors {
            Eigenvectors::Real(v) => v.column(k).map(|x| Complex::new(x, T::zero())),
            Eigenvectors::Complex(v) => v.column(k).into_owned(),
        };
        SectorState::normalized(self.basis.clone(), amps)
    }

    /// Eigenvector matrix with complex entries.
    pub fn vectors(&self) -> DMatrix<Complex<T>> {
        match &self.vectors {
            Eigenvectors::Real(v) => v.map(|x| Complex::new(x, T::zero())),
            Eigenvectors::Complex(v) => v.clone(),
        }
    }

    /// `V Λ V^†` with `Λ` the eigenvalues (or `exp(iθ)` for unitaries).
    pub fn reconstruct(&self) -> DMatrix<Complex<T>> {
        let v = self.vectors();
        let lam: Vec<Complex<T>> = match self.kind {
            DecompositionKind::Hermitian => {
                self.values.iter().map(|&e| Complex::new(e, T::zero())).collect()
            }
            DecompositionKind::Unitary => self.values.iter().map(|&t| cis(t)).collect(),
        };
        let mut scaled = v.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= lam[j];
        }
        scaled * v.adjoint()
    }

    /// `max |V^† V - I|`.
    pub fn orthonormality_error(&self) -> T {
        let v = self.vectors();
        let g = v.adjoint() * &v;
        let n = g.nrows();
        let mut err = T::zero();
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { T::one() } else { T::zero() };
                let d = modulus(g[(i, j)] - Complex::new(target, T::zero()));
                if d > err {
                    err = d;
                }
            }
        }
        err
    }

    /// `V diag(exp(i φ_k)) V^† ψ` for per-eigenvalue phases `φ_k`.
    fn apply_phases(&self, state: &SectorState<T>, phases: &[f64]) -> SectorState<T> {
        let a = state.amplitudes();
        let rot: Vec<Complex<T>> = phases.iter().map(|&p| cis(T::of(p))).collect();
        let out = match &self.vectors {
            Eigenvectors::Real(v) => {
                let re = a.map(|z| z.re);
                let im = a.map(|z| z.im);
                let cr = v.tr_mul(&re);
                let ci = v.tr_mul(&im);
                let mut nr = DVector::<T>::zeros(cr.len());
                let mut ni = DVector::<T>::zeros(cr.len());
                for k in 0..cr.len() {
                    let c = Complex::new(cr[k], ci[k]) * rot[k];
                    nr[k] = c.re;
                    ni[k] = c.im;
                }
                let or = v * nr;
                let oi = v * ni;
                or.zip_map(&oi, Complex::new)
            }
            Eigenvectors::Complex(v) => {
                let mut c = v.ad_mul(a);
                for (k, z) in c.iter_mut().enumerate() {
                    *z *= rot[k];
                }
                v * c
            }
        };
        SectorState::from_parts_unchecked(self.basis.clone(), out)
    }

    fn values_f64(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(|v| v.as_f64())
    }
}

/// `exp(-i t H) ψ`.
pub fn propagate<T: Scalar>(
    decomp: &SpectralDecomposition<T>,
    state: &SectorState<T>,
    t: f64,
) -> Result<SectorState<T>> {
    if decomp.kind != DecompositionKind::Hermitian {
        return Err(Error::param("propagate needs a Hermitian decomposition"));
    }
    state.check_basis(&decomp.basis)?;
    if !t.is_finite() {
        return Err(Error::param(format!("time must be finite, got {t}")));
    }
    let phases: Vec<f64> = decomp.values_f64().map(|e| reduced_phase(-e, t)).collect();
    Ok(decomp.apply_phases(state, &phases))
}

/// `exp(-i τ H)` as a dense complex matrix.
fn unitary_of<T: Scalar>(h: &OperatorMatrix<T>, tau: f64) -> Result<DMatrix<Complex<T>>> {
    let n = h.dim();
    if h.is_diagonal() {
        let d = h.matrix().diagonal();
        return Ok(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                cis(T::of(reduced_phase(-d[i].as_f64(), tau)))
            } else {
                Complex::new(T::zero(), T::zero())
            }
        }));
    }
    let dec = spectral_decompose(h)?;
    let v = match &dec.vectors {
        Eigenvectors::Real(v) => v,
        Eigenvectors::Complex(_) => unreachable!("Hermitian decompositions are real"),
    };
    let mut vc = v.clone();
    let mut vs = v.clone();
    for (k, e) in dec.values_f64().enumerate() {
        let p = reduced_phase(-e, tau);
        vc.column_mut(k).scale_mut(T::of(p.cos()));
        vs.column_mut(k).scale_mut(T::of(p.sin()));
    }
    let re = vc * v.transpose();
    let im = vs * v.transpose();
    Ok(re.zip_map(&im, Complex::new))
}

/// Eigendecomposition of `F = exp(-i T0 H0) exp(-i T1 Hxy)`.
///
/// `F` is normal, so its complex Schur form is diagonal up to rounding and
/// the Schur vectors are eigenvectors. Phase clusters closer than `1e-9`
/// are re-orthonormalized explicitly.
pub fn build_floquet<T: Scalar>(
    h0: &OperatorMatrix<T>,
    hxy: &OperatorMatrix<T>,
    t0: f64,
    t1: f64,
) -> Result<SpectralDecomposition<T>> {
    if h0.basis() != hxy.basis() {
        return Err(Error::param("Floquet parts act on different sectors"));
    }
    let n = h0.dim();
    let u0 = unitary_of(h0, t0)?;
    let u1 = unitary_of(hxy, t1)?;
    let f = u0 * u1;

    let unitarity = max_dev_from_identity(&(f.adjoint() * &f));
    if unitarity > T::tol(1e-8) {
        return Err(Error::numeric(format!("Floquet operator not unitary: |F^†F - I| = {unitarity:?}")));
    }

    let schur = Schur::try_new(f, T::default_epsilon(), 500 * n.max(10))
        .ok_or_else(|| Error::numeric(format!("complex Schur iteration did not converge (dim {n})")))?;
    let (q, t) = schur.unpack();
    let mut off = T::zero();
    for i in 0..n {
        for j in i + 1..n {
            let m = modulus(t[(i, j)]);
            if m > off {
                off = m;
            }
        }
    }
    if off > T::tol(1e-8) {
        return Err(Error::numeric(format!("Floquet Schur form not diagonal: off-diagonal {off:?}")));
    }
    let mut phases = Vec::with_capacity(n);
    for k in 0..n {
        let lam = t[(k, k)];
        let r = modulus(lam);
        if (r - T::one()).abs() > T::tol(1e-10) {
            return Err(Error::numeric(format!("Floquet eigenvalue {k} has modulus {r:?}")));
        }
        phases.push(lam.im.atan2(lam.re));
    }
    let (phases, mut vectors) = sort_columns(&phases, &q);
    reorthonormalize_clusters(&phases, &mut vectors, T::of(1e-9));
    Ok(SpectralDecomposition {
        basis: h0.basis().clone(),
        kind: DecompositionKind::Unitary,
        values: phases,
        vectors: Eigenvectors::Complex(vectors),
    })
}

fn max_dev_from_identity<T: Scalar>(m: &DMatrix<Complex<T>>) -> T {
    let mut err = T::zero();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let target = if i == j { T::one() } else { T::zero() };
            let d = modulus(m[(i, j)] - Complex::new(target, T::zero()));
            if d > err {
                err = d;
            }
        }
    }
    err
}

/// Modified Gram-Schmidt within runs of phases closer than `gap`
/// (sorted input; the run wrapping through `±π` is joined).
fn reorthonormalize_clusters<T: Scalar>(phases: &[T], v: &mut DMatrix<Complex<T>>, gap: T) {
    let n = phases.len();
    if n < 2 {
        return;
    }
    let mut clusters: Vec<Vec<usize>> = vec![vec![0]];
    for k in 1..n {
        if phases[k] - phases[k - 1] < gap {
            clusters.last_mut().unwrap().push(k);
        } else {
            clusters.push(vec![k]);
        }
    }
    let two_pi = T::of(2.0 * std::f64::consts::PI);
    if clusters.len() > 1 && phases[0] + two_pi - phases[n - 1] < gap {
        let first = clusters.remove(0);
        clusters.last_mut().unwrap().extend(first);
    }
    for cl in clusters.iter().filter(|c| c.len() > 1) {
        for (a, &i) in cl.iter().enumerate() {
            for &j in &cl[..a] {
                let proj = v.column(j).dotc(&v.column(i));
                let cj = v.column(j).into_owned();
                let mut ci = v.column_mut(i);
                ci.axpy(-proj, &cj, Complex::new(T::one(), T::zero()));
            }
            let nrm = v.column(i).norm();
            v.column_mut(i).unscale_mut(nrm);
        }
    }
}

/// `F^n ψ`.
pub fn floquet_power<T: Scalar>(
    decomp: &SpectralDecomposition<T>,
    state: &SectorState<T>,
    n: u64,
) -> Result<SectorState<T>> {
    if decomp.kind != DecompositionKind::Unitary {
        return Err(Error::param("floquet_power needs a unitary decomposition"));
    }
    state.check_basis(&decomp.basis)?;
    if n > 1u64 << 53 {
        return Err(Error::param(format!("period count {n} exceeds 2^53")));
    }
    let nf = n as f64;
    let phases: Vec<f64> = decomp.values_f64().map(|th| reduced_phase(th, nf)).collect();
    Ok(decomp.apply_phases(state, &phases))
}

/// Sample points of a trajectory (times, period counts, or depths).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    points: Vec<f64>,
}

impl Schedule {
    /// Explicit points; must be finite, non-negative, strictly increasing.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::param("schedule points must be finite and >= 0"));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("schedule points must be strictly increasing"));
        }
        Ok(Self { points })
    }

    /// Linear from 0 in steps of `linear_step` below `linear_end`, then
    /// `per_decade` logarithmic points per decade from `linear_end` to `log_end`.
    pub fn hybrid(linear_end: f64, linear_step: f64, log_end: f64, per_decade: usize) -> Result<Self> {
        if !(linear_end > 0.0 && linear_step > 0.0 && log_end >= linear_end && per_decade > 0) {
            return Err(Error::param(format!(
                "bad hybrid schedule (linear_end={linear_end}, step={linear_step}, log_end={log_end}, per_decade={per_decade})"
            )));
        }
        let mut pts = Vec::new();
        let mut k = 0u64;
        loop {
            let t = k as f64 * linear_step;
            if t >= linear_end * (1.0 - 1e-12) {
                break;
            }
            pts.push(t);
            k += 1;
        }
        let start = linear_end.log10();
        let stop = log_end.log10();
        let steps = ((stop - start) * per_decade as f64 + 1e-9).floor() as u64;
        for j in 0..=steps {
            let t = 10f64.powf(start + j as f64 / per_decade as f64);
            pts.push(t);
        }
        if let Some(last) = pts.last_mut() {
            if (*last - log_end).abs() <= 1e-9 * log_end {
                *last = log_end;
            } else if *last < log_end {
                pts.push(log_end);
            }
        }
        Self::new(pts)
    }

    /// Integer sample points `0..=depth`.
    pub fn every(depth: usize) -> Self {
        Self { points: (0..=depth).map(|d| d as f64).collect() }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Points rounded to integers, deduplicated (for period counts and depths).
    pub fn integer_points(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.points.iter().map(|p| p.round() as u64).collect();
        v.dedup();
        v
    }
}

/// Provenance carried by every trajectory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub description: String,
    pub seeds: BTreeMap<String, u64>,
    pub parameters: BTreeMap<String, f64>,
}

/// Entropy time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Half-chain entropy in bits.
    pub hcee: Vec<f64>,
    /// Bipartition-averaged entropy in bits, when recorded.
    pub baee: Option<Vec<f64>>,
    pub provenance: Provenance,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Pointwise mean of trajectories sharing the same sample points.
    pub fn average(items: &[Trajectory]) -> Result<Trajectory> {
        let first = items.first().ok_or_else(|| Error::param("no trajectories to average"))?;
        if items.iter().any(|t| t.times != first.times || t.baee.is_some() != first.baee.is_some()) {
            return Err(Error::param("trajectories have different sample points"));
        }
        let n = items.len() as f64;
        let mean = |f: &dyn Fn(&Trajectory) -> &Vec<f64>| -> Vec<f64> {
            (0..first.len())
                .map(|i| items.iter().map(|t| f(t)[i]).sum::<f64>() / n)
                .collect()
        };
        let hcee = mean(&|t| &t.hcee);
        let baee = first.baee.as_ref().map(|_| mean(&|t| t.baee.as_ref().unwrap()));
        Ok(Trajectory {
            times: first.times.clone(),
            hcee,
            baee,
            provenance: first.provenance.clone(),
        })
    }
}

/// Random circuit: at each step one bond, uniform over the `L-1` bonds,
/// receives the gate `(alpha, beta)`. Entropies are recorded at the listed
/// depths (sorted, each `<= depth`).
pub fn run_rqc<T: Scalar, R: Rng + ?Sized>(
    state: &SectorState<T>,
    alpha: f64,
    beta: f64,
    depth: usize,
    rng: &mut R,
    record: &[usize],
    with_baee: bool,
) -> Result<Trajectory> {
    if record.windows(2).any(|w| w[1] <= w[0]) || record.last().is_some_and(|&d| d > depth) {
        return Err(Error::param(format!("record depths must be increasing and within 0..={depth}")));
    }
    let l = state.basis().sites();
    let gate = build_two_qubit_gate::<T>(alpha, beta);
    let mut psi = state.clone();
    let mut times = Vec::with_capacity(record.len());
    let mut hcee = Vec::with_capacity(record.len());
    let mut baee = Vec::new();
    let mut next = 0;
    let mut sample = |d: usize, psi: &SectorState<T>, next: &mut usize| -> Result<()> {
        if *next < record.len() && record[*next] == d {
            times.push(d as f64);
            hcee.push(entanglement::hcee(psi)?.as_f64());
            if with_baee {
                baee.push(entanglement::baee(psi)?.as_f64());
            }
            *next += 1;
        }
        Ok(())
    };
    sample(0, &psi, &mut next)?;
    for d in 1..=depth {
        let bond = rng.random_range(1..l);
        apply_gate_in_place(&mut psi, bond, &gate)?;
        sample(d, &psi, &mut next)?;
    }
    let mut provenance = Provenance { description: "random circuit".into(), ..Default::default() };
    provenance.parameters.insert("alpha".into(), alpha);
    provenance.parameters.insert("beta".into(), beta);
    provenance.parameters.insert("depth".into(), depth as f64);
    Ok(Trajectory {
        times,
        hcee,
        baee: with_baee.then_some(baee),
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{build_ising_z, build_xxz, build_xy, sample_fields_seeded, DisorderFields};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn basis(l: usize) -> Arc<SectorBasis> {
        Arc::new(SectorBasis::half_filling(l).unwrap())
    }

    #[test]
    fn two_site_spectrum() {
        let h = build_xxz::<f64>(&basis(2), 0.5, &DisorderFields::clean(2)).unwrap();
        let d = spectral_decompose(&h).unwrap();
        assert!((d.eigenvalues()[0] + 0.625).abs() < 1e-15);
        assert!((d.eigenvalues()[1] - 0.375).abs() < 1e-15);
    }

    #[test]
    fn diagonal_operator_spectrum() {
        let f = sample_fields_seeded(8, 5.0, 4).unwrap();
        let h = build_ising_z::<f64>(&basis(8), &f).unwrap();
        let d = spectral_decompose(&h).unwrap();
        let mut diag: Vec<f64> = h.matrix().diagonal().iter().copied().collect();
        diag.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(d.eigenvalues(), diag.as_slice());
        let v = d.vectors();
        for j in 0..v.ncols() {
            assert_eq!(v.column(j).iter().filter(|z| z.re == 1.0).count(), 1);
        }
    }

    #[test]
    fn propagate_rejects_mismatched_basis() {
        let h = build_xy::<f64>(&basis(4)).unwrap();
        let d = spectral_decompose(&h).unwrap();
        let s = SectorState::<f64>::basis_state(basis(6), 0).unwrap();
        assert!(propagate(&d, &s, 1.0).is_err());
        assert!(floquet_power(&d, &SectorState::basis_state(basis(4), 0).unwrap(), 1).is_err());
    }

    #[test]
    fn hybrid_schedule_shape() {
        let s = Schedule::hybrid(10.0, 1.0, 1e4, 2).unwrap();
        let p = s.points();
        assert_eq!(&p[..10], &[0., 1., 2., 3., 4., 5., 6., 7., 8., 9.]);
        assert_eq!(p[10], 10.0);
        assert_eq!(*p.last().unwrap(), 1e4);
        assert_eq!(p.len(), 10 + 7);
        assert!(Schedule::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(Schedule::new(vec![-1.0]).is_err());
    }

    #[test]
    fn zero_depth_circuit() {
        let b = basis(6);
        let s = SectorState::<f64>::basis_state(b, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tr = run_rqc(&s, 1.0, 2.0, 0, &mut rng, &[0], false).unwrap();
        assert_eq!(tr.times, vec![0.0]);
        assert_eq!(tr.hcee, vec![0.0]);
        assert!(run_rqc(&s, 1.0, 2.0, 3, &mut rng, &[0, 4], false).is_err());
    }

    #[test]
    fn cluster_reorthonormalization() {
        let mut v = DMatrix::from_row_slice(
            2,
            2,
            &[Complex::new(1.0, 0.0), Complex::new(1.0, 0.0), Complex::new(0.0, 0.0), Complex::new(1e-3, 0.0)],
        );
        reorthonormalize_clusters(&[0.1, 0.1 + 1e-12], &mut v, 1e-9);
        let g = v.adjoint() * &v;
        assert!(max_dev_from_identity(&g) < 1e-12);
    }
}
