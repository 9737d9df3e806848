//! Reduced density matrices and entanglement entropies in bits.
//!
//! A fixed-`S^z` state has a reduced density matrix that is block diagonal in
//! the subsystem magnetization. Each block is `M_k M_k^†`, where `M_k` holds
//! the amplitudes with `k` up spins in the subset arranged as
//! (subset configuration × complement configuration). Entropies are taken
//! block by block and never touch the full `2^|A|` matrix.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{czero, Scalar};
use crate::sector_basis::{binomial, SectorBasis, SubsystemSplit};
use crate::state::SectorState;

/// Eigenvalues in `(-CLIP_TOL, 0)` are treated as zero; anything more
/// negative is an error.
pub const CLIP_TOL: f64 = 1e-12;
/// Allowed deviation of the total trace from one.
pub const TRACE_TOL: f64 = 1e-8;

/// One magnetization block of a reduced density matrix.
#[derive(Debug, Clone)]
pub struct DensityBlock<T: Scalar> {
    pub a_popcount: usize,
    pub matrix: DMatrix<Complex<T>>,
}

/// Block-diagonal reduced density matrix of a site subset.
#[derive(Debug, Clone)]
pub struct DensityMatrix<T: Scalar> {
    pub subset: Vec<usize>,
    pub blocks: Vec<DensityBlock<T>>,
}

impl<T: Scalar> DensityMatrix<T> {
    pub fn trace(&self) -> T {
        self.blocks
            .iter()
            .flat_map(|b| b.matrix.diagonal().iter().map(|z| z.re).collect::<Vec<_>>())
            .fold(T::zero(), |a, x| a + x)
    }

    /// Dense matrix over all `2^|A|` subset configurations, indexed by the
    /// compressed subset word. Only sensible for small subsets.
    pub fn to_dense(&self) -> DMatrix<Complex<T>> {
        let na = self.subset.len();
        let dim = 1usize << na;
        let mut out = DMatrix::from_element(dim, dim, czero());
        for b in &self.blocks {
            let words: Vec<usize> = (0..dim).filter(|w| w.count_ones() as usize == b.a_popcount).collect();
            // rows of a block follow colex order, which is ascending integer order
            for (i, &wi) in words.iter().enumerate() {
                for (j, &wj) in words.iter().enumerate() {
                    out[(wi, wj)] = b.matrix[(i, j)];
                }
            }
        }
        out
    }
}

fn coefficient_blocks<T: Scalar>(state: &SectorState<T>, split: &SubsystemSplit) -> Vec<DMatrix<Complex<T>>> {
    let mut mats: Vec<DMatrix<Complex<T>>> = split
        .blocks()
        .iter()
        .map(|b| DMatrix::from_element(b.rows, b.cols, czero()))
        .collect();
    for (e, &a) in split.entries().iter().zip(state.amplitudes().iter()) {
        mats[e.block as usize][(e.row as usize, e.col as usize)] = a;
    }
    mats
}

fn checked_split<T: Scalar>(state: &SectorState<T>, split: &SubsystemSplit) -> Result<()> {
    if split.entries().len() != state.dim() {
        return Err(Error::param("subsystem split was built for a different sector"));
    }
    Ok(())
}

/// Reduced density matrix of the 1-based `subset`.
pub fn reduced_density<T: Scalar>(state: &SectorState<T>, subset: &[usize]) -> Result<DensityMatrix<T>> {
    let split = state.basis().split(subset)?;
    reduced_density_with(state, &split)
}

/// [`reduced_density`] with a precomputed split.
pub fn reduced_density_with<T: Scalar>(
    state: &SectorState<T>,
    split: &SubsystemSplit,
) -> Result<DensityMatrix<T>> {
    checked_split(state, split)?;
    let blocks = coefficient_blocks(state, split)
        .into_iter()
        .zip(split.blocks())
        .map(|(m, b)| DensityBlock { a_popcount: b.a_popcount, matrix: &m * m.adjoint() })
        .collect();
    Ok(DensityMatrix { subset: split.subset().to_vec(), blocks })
}

fn hermitian_spectrum<T: Scalar>(m: DMatrix<Complex<T>>) -> Vec<T> {
    match m.nrows() {
        0 => Vec::new(),
        1 => vec![m[(0, 0)].re],
        n => {
            // Roundoff-sized entries (1e-300 and below happen after
            // near-identity gates) make the eigensolver's Givens steps
            // underflow and return -inf. Rescale to unit size and flush
            // anything under eps^2 of that: eigenvalues move by < n * eps^2.
            let scale = m.iter().map(|z| z.re.abs().max(z.im.abs())).fold(T::zero(), |a, x| a.max(x));
            if scale == T::zero() {
                return vec![T::zero(); n];
            }
            let floor = T::default_epsilon() * T::default_epsilon();
            let flush = |x: T| if x.abs() < floor { T::zero() } else { x };
            m.map(|z| Complex::new(flush(z.re / scale), flush(z.im / scale))).symmetric_eigenvalues().iter().map(|&x| x * scale).collect()
        }
    }
}

/// `-Σ p log2 p` over a probability spectrum, with the clipping rules above.
fn entropy_of_spectrum<T: Scalar>(spectrum: impl IntoIterator<Item = T>) -> Result<T> {
    let clip = T::tol(CLIP_TOL);
    let mut s = T::zero();
    let mut total = T::zero();
    for p in spectrum {
        if p < -clip {
            return Err(Error::numeric(format!("density matrix eigenvalue {p:?} below -{CLIP_TOL:e}")));
        }
        total += p;
        if p > T::zero() {
            s -= p * p.log2();
        }
    }
    if (total - T::one()).abs() > T::tol(TRACE_TOL) {
        return Err(Error::numeric(format!("density matrix trace {total:?} deviates from 1")));
    }
    Ok(if s < T::zero() { T::zero() } else { s })
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy<T: Scalar>(rho: &DensityMatrix<T>) -> Result<T> {
    let spectrum = rho.blocks.iter().flat_map(|b| hermitian_spectrum(b.matrix.clone()));
    entropy_of_spectrum(spectrum)
}

/// Entropy of the split's subset, using whichever Gram matrix is smaller.
pub fn split_entropy<T: Scalar>(state: &SectorState<T>, split: &SubsystemSplit) -> Result<T> {
    checked_split(state, split)?;
    let spectrum = coefficient_blocks(state, split).into_iter().flat_map(|m| {
        if m.nrows() <= m.ncols() {
            hermitian_spectrum(&m * m.adjoint())
        } else {
            hermitian_spectrum(m.adjoint() * &m)
        }
    });
    entropy_of_spectrum(spectrum)
}

/// Entropy of the 1-based `subset`.
pub fn subset_entropy<T: Scalar>(state: &SectorState<T>, subset: &[usize]) -> Result<T> {
    split_entropy(state, &state.basis().split(subset)?)
}

/// Half-chain entropy: sites `1..=L/2`.
pub fn hcee<T: Scalar>(state: &SectorState<T>) -> Result<T> {
    let l = state.basis().sites();
    let half: Vec<usize> = (1..=l / 2).collect();
    subset_entropy(state, &half)
}

/// Canonical equal-size bipartition: the half that contains site 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bipartition {
    sites: usize,
    mask: u64,
}

impl Bipartition {
    /// Canonicalize `subset` (either half); it must hold exactly `L/2` sites.
    pub fn new(sites: usize, subset: &[usize]) -> Result<Self> {
        let mask = crate::sector_basis::subset_mask(sites, subset)?;
        Self::from_mask(sites, mask)
    }

    pub fn from_mask(sites: usize, mask: u64) -> Result<Self> {
        if sites < 2 || sites % 2 != 0 || sites > crate::sector_basis::MAX_SITES {
            return Err(Error::param(format!("bipartitions need even 2 <= L <= 32, got {sites}")));
        }
        let full = (1u64 << sites) - 1;
        if mask & !full != 0 || mask.count_ones() as usize != sites / 2 {
            return Err(Error::param(format!("mask {mask:#b} is not an equal-size half of {sites} sites")));
        }
        Ok(Self::canonical(sites, mask))
    }

    #[inline]
    pub(crate) fn canonical(sites: usize, mask: u64) -> Self {
        let full = (1u64 << sites) - 1;
        let mask = if mask & 1 == 1 { mask } else { full & !mask };
        Self { sites, mask }
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    /// Sorted 1-based sites of the canonical half.
    pub fn subset(&self) -> Vec<usize> {
        (0..self.sites).filter(|i| self.mask >> i & 1 == 1).map(|i| i + 1).collect()
    }
}

impl std::fmt::Display for Bipartition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s: Vec<String> = self.subset().iter().map(|x| x.to_string()).collect();
        write!(f, "{{{}}}", s.join(" "))
    }
}

/// All `binomial(L, L/2) / 2` canonical bipartitions, ascending by mask.
pub fn enumerate_bipartitions(sites: usize) -> Result<Vec<Bipartition>> {
    if sites < 2 || sites % 2 != 0 || sites > crate::sector_basis::MAX_SITES {
        return Err(Error::param(format!("bipartitions need even 2 <= L <= 32, got {sites}")));
    }
    // site 1 fixed; choose the other L/2 - 1 sites among the remaining L - 1
    let k = sites / 2 - 1;
    let count = binomial(sites - 1, k) as usize;
    let mut out = Vec::with_capacity(count);
    let limit = 1u64 << (sites - 1);
    let mut w = (1u64 << k) - 1;
    loop {
        out.push(Bipartition { sites, mask: (w << 1) | 1 });
        if k == 0 {
            break;
        }
        let c = w & w.wrapping_neg();
        let r = w + c;
        w = (((r ^ w) >> 2) / c) | r;
        if w >= limit {
            break;
        }
    }
    debug_assert_eq!(out.len(), count);
    Ok(out)
}

/// Cached splits for every canonical bipartition of one sector.
pub struct BipartitionEntropies {
    basis: Arc<SectorBasis>,
    bipartitions: Vec<Bipartition>,
    splits: Vec<SubsystemSplit>,
}

impl BipartitionEntropies {
    pub fn new(basis: Arc<SectorBasis>) -> Result<Self> {
        let bipartitions = enumerate_bipartitions(basis.sites())?;
        let splits = bipartitions
            .iter()
            .map(|b| basis.split(&b.subset()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { basis, bipartitions, splits })
    }

    pub fn bipartitions(&self) -> &[Bipartition] {
        &self.bipartitions
    }

    /// `S_A` for every bipartition, in enumeration order.
    pub fn entropies<T: Scalar>(&self, state: &SectorState<T>) -> Result<Vec<T>> {
        state.check_basis(&self.basis)?;
        self.splits.par_iter().map(|s| split_entropy(state, s)).collect()
    }

    /// Mean of [`Self::entropies`].
    pub fn baee<T: Scalar>(&self, state: &SectorState<T>) -> Result<T> {
        let e = self.entropies(state)?;
        let n = T::of(e.len() as f64);
        Ok(e.into_iter().fold(T::zero(), |a, x| a + x) / n)
    }
}

/// Bipartition-averaged entanglement entropy in bits.
pub fn baee<T: Scalar>(state: &SectorState<T>) -> Result<T> {
    BipartitionEntropies::new(state.basis().clone())?.baee(state)
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// Standard error of the mean; NaN for a single sample.
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            f64::NAN
        };
        Self { mean, stderr, samples: n }
    }
}

/// Mean half-chain entropy of Haar-random half-filling states.
pub fn haar_sector_average<R: Rng + ?Sized>(sites: usize, samples: usize, rng: &mut R) -> Result<Estimate> {
    if samples == 0 {
        return Err(Error::param("need at least one Haar sample"));
    }
    let basis = Arc::new(SectorBasis::half_filling(sites)?);
    let half: Vec<usize> = (1..=sites / 2).collect();
    let split = basis.split(&half)?;
    let mut xs = Vec::with_capacity(samples);
    for _ in 0..samples {
        let s = SectorState::<f64>::haar_random(basis.clone(), rng);
        xs.push(split_entropy(&s, &split)?);
    }
    Ok(Estimate::from_samples(&xs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn basis(l: usize) -> Arc<SectorBasis> {
        Arc::new(SectorBasis::half_filling(l).unwrap())
    }

    fn diag(values: &[f64]) -> DensityMatrix<f64> {
        DensityMatrix {
            subset: vec![1],
            blocks: values
                .iter()
                .map(|&v| DensityBlock { a_popcount: 0, matrix: DMatrix::from_element(1, 1, Complex::new(v, 0.0)) })
                .collect(),
        }
    }

    #[test]
    fn entropy_of_simple_spectra() {
        assert!((von_neumann_entropy(&diag(&[0.5, 0.5])).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(von_neumann_entropy(&diag(&[1.0, 0.0])).unwrap(), 0.0);
        assert!((von_neumann_entropy(&diag(&[0.25; 4])).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn entropy_clipping_and_errors() {
        assert_eq!(von_neumann_entropy(&diag(&[1.0 + 5e-13, -5e-13])).unwrap(), 0.0);
        assert!(von_neumann_entropy(&diag(&[1.0 + 1e-9, -1e-9])).is_err());
        assert!(von_neumann_entropy(&diag(&[0.5, 0.4])).is_err());
    }

    #[test]
    fn bell_pair_single_site() {
        let b = basis(2);
        let one = Complex::new(1.0, 0.0);
        let s = SectorState::<f64>::from_words(b, &[(0b01, one), (0b10, one)]).unwrap();
        let rho = reduced_density(&s, &[1]).unwrap();
        assert_eq!(rho.blocks.len(), 2);
        for blk in &rho.blocks {
            assert!((blk.matrix[(0, 0)].re - 0.5).abs() < 1e-15);
        }
        assert!((hcee(&s).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn product_state_is_pure_everywhere() {
        let b = basis(6);
        let s = SectorState::<f64>::from_word(b, 0b101001).unwrap();
        for subset in [vec![1], vec![2, 5], vec![1, 2, 3], vec![3, 4, 5, 6]] {
            let rho = reduced_density(&s, &subset).unwrap();
            let ranks: usize = rho
                .blocks
                .iter()
                .map(|bl| bl.matrix.iter().filter(|z| z.norm() > 0.0).count())
                .sum();
            assert_eq!(ranks, 1);
            assert_eq!(subset_entropy(&s, &subset).unwrap(), 0.0);
        }
        assert_eq!(hcee(&s).unwrap(), 0.0);
        assert_eq!(baee(&s).unwrap(), 0.0);
    }

    #[test]
    fn central_bell_pair() {
        // L=6: sites 3,4 in a Bell pair, others fixed
        let b = basis(6);
        let one = Complex::new(1.0, 0.0);
        let w1 = 0b000101u64 | 0b100000; // sites 1,3,6 up
        let w2 = 0b001001u64 | 0b100000; // sites 1,4,6 up
        let s = SectorState::<f64>::from_words(b, &[(w1, one), (w2, one)]).unwrap();
        assert!((hcee(&s).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bipartition_enumeration() {
        let l4 = enumerate_bipartitions(4).unwrap();
        let subsets: Vec<Vec<usize>> = l4.iter().map(|b| b.subset()).collect();
        assert_eq!(subsets, vec![vec![1, 2], vec![1, 3], vec![1, 4]]);
        assert_eq!(enumerate_bipartitions(16).unwrap().len(), 6435);
        assert_eq!(enumerate_bipartitions(2).unwrap().len(), 1);
        let l8 = enumerate_bipartitions(8).unwrap();
        let full = (1u64 << 8) - 1;
        let masks: std::collections::HashSet<u64> = l8.iter().map(|b| b.mask()).collect();
        assert_eq!(masks.len(), 35);
        assert!(l8.iter().all(|b| !masks.contains(&(full & !b.mask()))));
        assert_eq!(Bipartition::new(4, &[2, 3]).unwrap(), Bipartition::new(4, &[1, 4]).unwrap());
        assert!(Bipartition::new(4, &[1]).is_err());
    }

    #[test]
    fn baee_of_local_bell_pair() {
        // (|↑↓> + |↓↑>)/√2 on sites 1,2 times |↑↓> on sites 3,4
        let b = basis(4);
        let one = Complex::new(1.0, 0.0);
        let s = SectorState::<f64>::from_words(b, &[(0b0101, one), (0b0110, one)]).unwrap();
        assert!((baee(&s).unwrap() - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn haar_two_site_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let est = haar_sector_average(2, 20_000, &mut rng).unwrap();
        let exact = 1.0 / (2.0 * std::f64::consts::LN_2);
        assert!((est.mean - exact).abs() < 4.0 * est.stderr, "{est:?}");
        assert!(haar_sector_average(2, 0, &mut rng).is_err());
        assert!(haar_sector_average(2, 1, &mut rng).unwrap().stderr.is_nan());
    }

    #[test]
    fn roundoff_sized_blocks_do_not_break_the_eigensolver() {
        // amplitudes leaked by near-identity gates can sit near 1e-140
        let mut m = DMatrix::<Complex<f64>>::zeros(6, 6);
        for i in 0..6 {
            for j in 0..6 {
                m[(i, j)] = Complex::new(1e-125 / (1 + i + j) as f64, 1e-280 * (i as f64 - j as f64));
            }
        }
        let m = &m * m.adjoint();
        let ev = hermitian_spectrum(m);
        assert!(ev.iter().all(|x| x.is_finite() && x.abs() < 1e-240));
        assert!(entropy_of_spectrum(ev.into_iter().chain([1.0])).unwrap() < 1e-200);
        let mut sub = DMatrix::<Complex<f64>>::zeros(3, 3);
        sub[(0, 0)] = Complex::new(4e-320, 0.0);
        sub[(1, 2)] = Complex::new(1e-321, 1e-321);
        sub[(2, 1)] = Complex::new(1e-321, -1e-321);
        assert!(hermitian_spectrum(sub).iter().all(|x| x.is_finite() && x.abs() < 1e-300));
    }
}
