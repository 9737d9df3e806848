//! Sector Hamiltonians, disorder sampling, and the two-site gate.
//!
//! Every Hamiltonian built here is real symmetric in the computational
//! basis, so matrices are stored with real entries; Hermiticity is then the
//! same as symmetry. Spin operators carry eigenvalues `±1/2`.

use std::sync::Arc;

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cis, czero, Scalar};
use crate::sector_basis::SectorBasis;
use crate::state::SectorState;

/// On-site random fields `h_i`, uniform on `[-W, W]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderFields {
    pub h: Vec<f64>,
    pub w: f64,
    /// Seed of the stream the fields were drawn from, when known.
    pub seed: Option<u64>,
}

impl DisorderFields {
    /// All fields zero.
    pub fn clean(sites: usize) -> Self {
        Self { h: vec![0.0; sites], w: 0.0, seed: None }
    }

    /// Explicit field values; `w` is taken as `max |h_i|`.
    pub fn from_values(h: Vec<f64>) -> Self {
        let w = h.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        Self { h, w, seed: None }
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }
}

/// Draw `sites` i.i.d. fields uniform on `[-w, w]`.
pub fn sample_fields<R: Rng + ?Sized>(sites: usize, w: f64, rng: &mut R) -> Result<DisorderFields> {
    if !(w >= 0.0) || !w.is_finite() {
        return Err(Error::param(format!("disorder strength must be finite and >= 0, got {w}")));
    }
    let h = if w == 0.0 {
        vec![0.0; sites]
    } else {
        (0..sites).map(|_| rng.random_range(-w..=w)).collect()
    };
    Ok(DisorderFields { h, w, seed: None })
}

/// [`sample_fields`] from a dedicated ChaCha stream, recording the seed.
pub fn sample_fields_seeded(sites: usize, w: f64, seed: u64) -> Result<DisorderFields> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = sample_fields(sites, w, &mut rng)?;
    f.seed = Some(seed);
    Ok(f)
}

/// Real symmetric operator restricted to one sector.
#[derive(Debug, Clone)]
pub struct OperatorMatrix<T: Scalar> {
    basis: Arc<SectorBasis>,
    elements: DMatrix<T>,
}

impl<T: Scalar> OperatorMatrix<T> {
    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    /// `max |H - H^†|` over all entries.
    pub fn hermiticity_error(&self) -> T {
        let n = self.dim();
        let mut err = T::zero();
        for i in 0..n {
            for j in 0..i {
                let d = (self.elements[(i, j)] - self.elements[(j, i)]).abs();
                if d > err {
                    err = d;
                }
            }
        }
        err
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.elements[(i, j)] == T::zero()))
    }

    /// `H |psi>` (not normalized).
    pub fn apply(&self, state: &SectorState<T>) -> Result<nalgebra::DVector<Complex<T>>> {
        state.check_basis(&self.basis)?;
        let a = state.amplitudes();
        let re = a.map(|z| z.re);
        let im = a.map(|z| z.im);
        let hr = &self.elements * re;
        let hi = &self.elements * im;
        Ok(hr.zip_map(&hi, Complex::new))
    }

    /// `<psi|H|psi>`.
    pub fn expectation(&self, state: &SectorState<T>) -> Result<T> {
        let h = self.apply(state)?;
        Ok(state
            .amplitudes()
            .iter()
            .zip(h.iter())
            .fold(T::zero(), |acc, (a, b)| acc + (a.conj() * b).re))
    }
}

/// Nearest-neighbour chain operator with per-bond couplings.
///
/// Bond `b` (0-based) joins sites `b+1` and `b+2`. `exchange[b]` multiplies
/// `S^x S^x + S^y S^y`, `zz[b]` multiplies `S^z S^z`.
fn build_chain<T: Scalar>(
    basis: &Arc<SectorBasis>,
    exchange: &[f64],
    zz: &[f64],
    fields: &[f64],
) -> OperatorMatrix<T> {
    let l = basis.sites();
    let n = basis.dim();
    let mut m = DMatrix::<T>::zeros(n, n);
    for (k, &w) in basis.states().iter().enumerate() {
        let spin = |i: usize| if w >> i & 1 == 1 { 0.5 } else { -0.5 };
        let mut diag = 0.0;
        for b in 0..l - 1 {
            diag += zz[b] * spin(b) * spin(b + 1);
            let pair = (w >> b) & 0b11;
            if exchange[b] != 0.0 && (pair == 0b01 || pair == 0b10) {
                let partner = w ^ (0b11 << b);
                let j = basis.find(partner).expect("exchange stays in sector");
                m[(j, k)] = T::of(0.5 * exchange[b]);
            }
        }
        for (i, &h) in fields.iter().enumerate() {
            diag += h * spin(i);
        }
        m[(k, k)] = T::of(diag);
    }
    OperatorMatrix { basis: basis.clone(), elements: m }
}

fn check_fields(basis: &SectorBasis, fields: &DisorderFields) -> Result<()> {
    if fields.len() != basis.sites() {
        return Err(Error::param(format!(
            "{} disorder fields supplied for a chain of {} sites",
            fields.len(),
            basis.sites()
        )));
    }
    Ok(())
}

/// Disordered XXZ chain with open boundaries.
pub fn build_xxz<T: Scalar>(
    basis: &Arc<SectorBasis>,
    jz: f64,
    fields: &DisorderFields,
) -> Result<OperatorMatrix<T>> {
    check_fields(basis, fields)?;
    let bonds = basis.sites() - 1;
    Ok(build_chain(basis, &vec![1.0; bonds], &vec![jz; bonds], &fields.h))
}

/// XY chain: `J_z = 0`, no fields.
pub fn build_xy<T: Scalar>(basis: &Arc<SectorBasis>) -> Result<OperatorMatrix<T>> {
    build_xxz(basis, 0.0, &DisorderFields::clean(basis.sites()))
}

/// Diagonal Ising part `sum S^z S^z + sum h S^z` used inside the Floquet drive.
pub fn build_ising_z<T: Scalar>(
    basis: &Arc<SectorBasis>,
    fields: &DisorderFields,
) -> Result<OperatorMatrix<T>> {
    check_fields(basis, fields)?;
    let bonds = basis.sites() - 1;
    Ok(build_chain(basis, &vec![0.0; bonds], &vec![1.0; bonds], &fields.h))
}

/// XXZ chain with every coupling on the central bond `(L/2, L/2+1)` removed.
pub fn build_local_cut<T: Scalar>(
    basis: &Arc<SectorBasis>,
    jz: f64,
    fields: &DisorderFields,
) -> Result<OperatorMatrix<T>> {
    check_fields(basis, fields)?;
    let l = basis.sites();
    if l < 4 {
        return Err(Error::param(format!("central-bond cut needs L >= 4, got {l}")));
    }
    let mut exchange = vec![1.0; l - 1];
    let mut zz = vec![jz; l - 1];
    exchange[l / 2 - 1] = 0.0;
    zz[l / 2 - 1] = 0.0;
    Ok(build_chain(basis, &exchange, &zz, &fields.h))
}

/// `exp(-i α (SxSx + SySy)) exp(-i β SzSz)` on two neighbouring spins.
///
/// Matrix order is `{↑↑, ↑↓, ↓↑, ↓↓}`, first arrow = left site.
#[derive(Debug, Clone)]
pub struct TwoQubitGate<T: Scalar> {
    alpha: f64,
    beta: f64,
    u: Matrix4<Complex<T>>,
}

impl<T: Scalar> TwoQubitGate<T> {
    pub fn new(alpha: f64, beta: f64) -> Self {
        build_two_qubit_gate(alpha, beta)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn matrix(&self) -> &Matrix4<Complex<T>> {
        &self.u
    }

    /// No exchange component: the gate only multiplies basis amplitudes by phases.
    pub fn is_diagonal(&self) -> bool {
        self.u[(1, 2)] == czero() && self.u[(2, 1)] == czero()
    }
}

pub fn build_two_qubit_gate<T: Scalar>(alpha: f64, beta: f64) -> TwoQubitGate<T> {
    let outer = cis(T::of(-beta / 4.0));
    let inner = cis(T::of(beta / 4.0));
    let c = T::of((alpha / 2.0).cos());
    let s = T::of((alpha / 2.0).sin());
    let diag = inner * Complex::new(c, T::zero());
    let off = inner * Complex::new(T::zero(), -s);
    let z = czero();
    let u = Matrix4::new(
        outer, z, z, z, //
        z, diag, off, z, //
        z, off, diag, z, //
        z, z, z, outer,
    );
    TwoQubitGate { alpha, beta, u }
}

/// Apply `gate` to sites `(bond, bond+1)` (1-based) in place.
pub fn apply_gate_in_place<T: Scalar>(
    state: &mut SectorState<T>,
    bond: usize,
    gate: &TwoQubitGate<T>,
) -> Result<()> {
    let basis = state.basis().clone();
    let l = basis.sites();
    if bond == 0 || bond >= l {
        return Err(Error::param(format!("bond ({bond}, {}) outside 1..{l}", bond + 1)));
    }
    let shift = bond - 1;
    let u = &gate.u;
    let amps = state.amplitudes_mut();
    for (k, &w) in basis.states().iter().enumerate() {
        // bit `shift` is the left site; set bit = up
        match (w >> shift) & 0b11 {
            0b11 => amps[k] *= u[(0, 0)],
            0b00 => amps[k] *= u[(3, 3)],
            0b01 => {
                // left up, right down; the partner is processed here once
                let j = basis.find(w ^ (0b11 << shift)).expect("partner in sector");
                let a = amps[k];
                let b = amps[j];
                amps[k] = u[(1, 1)] * a + u[(1, 2)] * b;
                amps[j] = u[(2, 1)] * a + u[(2, 2)] * b;
            }
            _ => {}
        }
    }
    Ok(())
}

/// Apply `gate` to sites `(bond, bond+1)` and return the new state.
pub fn apply_gate<T: Scalar>(
    state: &SectorState<T>,
    bond: usize,
    gate: &TwoQubitGate<T>,
) -> Result<SectorState<T>> {
    let mut out = state.clone();
    apply_gate_in_place(&mut out, bond, gate)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn basis(l: usize) -> Arc<SectorBasis> {
        Arc::new(SectorBasis::half_filling(l).unwrap())
    }

    #[test]
    fn zero_disorder_gives_zero_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = sample_fields(8, 0.0, &mut rng).unwrap();
        assert!(f.h.iter().all(|&h| h == 0.0));
        assert!(sample_fields(8, -1.0, &mut rng).is_err());
    }

    #[test]
    fn field_statistics_and_determinism() {
        let f = sample_fields_seeded(100_000, 5.0, 42).unwrap();
        assert!(f.h.iter().all(|h| h.abs() <= 5.0));
        let mean: f64 = f.h.iter().sum::<f64>() / f.h.len() as f64;
        // sd of uniform[-5,5] is 5/sqrt(3)
        let sigma = 5.0 / 3f64.sqrt() / (f.h.len() as f64).sqrt();
        assert!(mean.abs() < 5.0 * sigma);
        assert_eq!(f, sample_fields_seeded(100_000, 5.0, 42).unwrap());
    }

    #[test]
    fn two_site_xxz_matrix() {
        let b = basis(2);
        let h = build_xxz::<f64>(&b, 0.5, &DisorderFields::clean(2)).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[-0.125, 0.5, 0.5, -0.125]);
        assert_eq!(h.matrix(), &want);
    }

    #[test]
    fn field_length_mismatch() {
        let b = basis(4);
        assert!(build_xxz::<f64>(&b, 0.5, &DisorderFields::clean(3)).is_err());
        assert!(build_ising_z::<f64>(&b, &DisorderFields::clean(5)).is_err());
    }

    #[test]
    fn ising_part_is_diagonal() {
        let b = basis(2);
        let h = build_ising_z::<f64>(&b, &DisorderFields::clean(2)).unwrap();
        assert_eq!(h.matrix(), &DMatrix::from_diagonal_element(2, 2, -0.25));
        let f = sample_fields_seeded(10, 5.0, 9).unwrap();
        let h = build_ising_z::<f64>(&basis(10), &f).unwrap();
        assert!(h.is_diagonal());
    }

    #[test]
    fn xy_is_xxz_without_jz_and_fields() {
        let b = basis(6);
        let a = build_xy::<f64>(&b).unwrap();
        let c = build_xxz::<f64>(&b, 0.0, &DisorderFields::clean(6)).unwrap();
        assert_eq!(a.matrix(), c.matrix());
        assert!(a.matrix().diagonal().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn local_cut_differs_only_on_central_bond() {
        let b = basis(4);
        let f = sample_fields_seeded(4, 0.5, 5).unwrap();
        let full = build_xxz::<f64>(&b, 0.5, &f).unwrap();
        let cut = build_local_cut::<f64>(&b, 0.5, &f).unwrap();
        // ↑↓↑↓ (sites 1..4) vs ↑↑↓↓: exchange on bond 2-3
        let w1 = 0b0101u64;
        let w2 = 0b0011u64;
        let (i, j) = (b.index_of(w1).unwrap(), b.index_of(w2).unwrap());
        assert_eq!(full.matrix()[(i, j)], 0.5);
        assert_eq!(cut.matrix()[(i, j)], 0.0);
        let diff = full.matrix() - cut.matrix();
        for (k, &w) in b.states().iter().enumerate() {
            // diagonal difference is jz s2 s3
            let s = |x: usize| if w >> x & 1 == 1 { 0.5 } else { -0.5 };
            assert!((diff[(k, k)] - 0.5 * s(1) * s(2)).abs() < 1e-15);
            for (m, &v) in b.states().iter().enumerate() {
                if m != k && diff[(k, m)] != 0.0 {
                    assert_eq!(w ^ v, 0b0110, "only the central bond may differ");
                }
            }
        }
        assert!(build_local_cut::<f64>(&basis(2), 0.5, &DisorderFields::clean(2)).is_err());
    }

    #[test]
    fn builders_are_hermitian() {
        for l in [4, 6, 8] {
            let b = basis(l);
            let f = sample_fields_seeded(l, 5.0, l as u64).unwrap();
            assert_eq!(build_xxz::<f64>(&b, 0.5, &f).unwrap().hermiticity_error(), 0.0);
            assert_eq!(build_local_cut::<f64>(&b, 0.5, &f).unwrap().hermiticity_error(), 0.0);
        }
    }

    #[test]
    fn identity_gate_is_bit_exact() {
        let b = basis(6);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = SectorState::<f64>::haar_random(b, &mut rng);
        let g = build_two_qubit_gate::<f64>(0.0, 0.0);
        for bond in 1..6 {
            let out = apply_gate(&s, bond, &g).unwrap();
            assert_eq!(out.amplitudes(), s.amplitudes());
        }
    }

    #[test]
    fn bond_out_of_range() {
        let b = basis(4);
        let s = SectorState::<f64>::basis_state(b, 0).unwrap();
        let g = build_two_qubit_gate::<f64>(1.0, 1.0);
        assert!(apply_gate(&s, 0, &g).is_err());
        assert!(apply_gate(&s, 4, &g).is_err());
    }

    #[test]
    fn move_example_on_three_spins() {
        // (|↑↑↓> + |↑↓↑>)/√2 on sites 1..3, site 4 down to stay in the L=4 sector
        let b = basis(4);
        let beta = 0.7;
        let up = |sites: &[usize]| sites.iter().fold(0u64, |w, s| w | 1 << (s - 1));
        let one = Complex::new(1.0, 0.0);
        let s = SectorState::<f64>::from_words(b.clone(), &[(up(&[1, 2]), one), (up(&[1, 3]), one)])
            .unwrap();
        let g = build_two_qubit_gate::<f64>(PI, beta);
        let out = apply_gate(&s, 1, &g).unwrap();
        let r = 1.0 / 2f64.sqrt();
        let want = SectorState::<f64>::from_words(
            b.clone(),
            &[
                (up(&[1, 2]), Complex::from_polar(r, -beta / 4.0)),
                (up(&[2, 3]), Complex::new(0.0, -1.0) * Complex::from_polar(r, beta / 4.0)),
            ],
        )
        .unwrap();
        assert!(out.max_abs_diff(&want) < 1e-15);
    }
}
