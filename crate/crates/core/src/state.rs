use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::{czero, Scalar};
use crate::sector_basis::SectorBasis;

/// Normalized amplitude vector over a [`SectorBasis`].
#[derive(Debug, Clone)]
pub struct SectorState<T: Scalar> {
    basis: Arc<SectorBasis>,
    amps: DVector<Complex<T>>,
}

impl<T: Scalar> SectorState<T> {
    /// Wrap amplitudes that are already normalized (within `1e-10`).
    pub fn new(basis: Arc<SectorBasis>, amps: DVector<Complex<T>>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::param(format!(
                "amplitude vector has length {}, sector dimension is {}",
                amps.len(),
                basis.dim()
            )));
        }
        let state = Self { basis, amps };
        let dev = (state.norm() - T::one()).abs();
        if dev > T::tol(1e-10) {
            return Err(Error::param(format!("state is not normalized (|norm - 1| = {dev:?})")));
        }
        Ok(state)
    }

    /// Normalize arbitrary nonzero amplitudes.
    pub fn normalized(basis: Arc<SectorBasis>, mut amps: DVector<Complex<T>>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::param(format!(
                "amplitude vector has length {}, sector dimension is {}",
                amps.len(),
                basis.dim()
            )));
        }
        let n = amps.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt();
        if n <= T::zero() {
            return Err(Error::param("cannot normalize the zero vector"));
        }
        let inv = T::one() / n;
        for z in amps.iter_mut() {
            *z = z.scale(inv);
        }
        Ok(Self { basis, amps })
    }

    pub(crate) fn from_parts_unchecked(basis: Arc<SectorBasis>, amps: DVector<Complex<T>>) -> Self {
        Self { basis, amps }
    }

    /// Computational basis state at `ordinal`.
    pub fn basis_state(basis: Arc<SectorBasis>, ordinal: usize) -> Result<Self> {
        if ordinal >= basis.dim() {
            return Err(Error::param(format!(
                "ordinal {ordinal} out of range for dimension {}",
                basis.dim()
            )));
        }
        let mut amps = DVector::from_element(basis.dim(), czero());
        amps[ordinal] = Complex::new(T::one(), T::zero());
        Ok(Self { basis, amps })
    }

    /// Computational basis state for an occupation word.
    pub fn from_word(basis: Arc<SectorBasis>, word: u64) -> Result<Self> {
        let k = basis.index_of(word)?;
        Self::basis_state(basis, k)
    }

    /// Superposition of words with given (unnormalized) coefficients.
    pub fn from_words(basis: Arc<SectorBasis>, terms: &[(u64, Complex<T>)]) -> Result<Self> {
        let mut amps = DVector::from_element(basis.dim(), czero());
        for &(w, c) in terms {
            let k = basis.index_of(w)?;
            amps[k] += c;
        }
        Self::normalized(basis, amps)
    }

    /// Haar-random state: i.i.d. standard complex Gaussian amplitudes, normalized.
    pub fn haar_random<R: Rng + ?Sized>(basis: Arc<SectorBasis>, rng: &mut R) -> Self {
        let amps = DVector::from_fn(basis.dim(), |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex::new(T::of(re), T::of(im))
        });
        Self::normalized(basis, amps).expect("gaussian vector is nonzero almost surely")
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &DVector<Complex<T>> {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut DVector<Complex<T>> {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> DVector<Complex<T>> {
        self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> T {
        self.amps.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .fold(czero(), |acc, (a, b)| acc + a.conj() * b)
    }

    /// Largest componentwise difference after removing the relative global phase.
    pub fn distance_up_to_phase(&self, other: &Self) -> T {
        let ov = self.inner(other);
        let m = ov.norm_sqr().sqrt();
        let phase = if m > T::zero() { ov.unscale(m) } else { Complex::new(T::one(), T::zero()) };
        self.amps
            .iter()
            .zip(other.amps.iter())
            .fold(T::zero(), |acc, (a, b)| {
                let d = (a * phase - b).norm_sqr().sqrt();
                if d > acc { d } else { acc }
            })
    }

    /// Largest componentwise difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .fold(T::zero(), |acc, (a, b)| {
                let d = (a - b).norm_sqr().sqrt();
                if d > acc { d } else { acc }
            })
    }

    pub(crate) fn check_basis(&self, basis: &SectorBasis) -> Result<()> {
        if self.basis.as_ref() != basis {
            return Err(Error::param(format!(
                "basis mismatch: state has L={} (up={}), operator has L={} (up={})",
                self.basis.sites(),
                self.basis.n_up(),
                basis.sites(),
                basis.n_up()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constructors_validate() {
        let b = Arc::new(SectorBasis::half_filling(4).unwrap());
        assert!(SectorState::<f64>::new(b.clone(), DVector::from_element(6, czero())).is_err());
        assert!(SectorState::<f64>::new(b.clone(), DVector::from_element(3, czero())).is_err());
        assert!(SectorState::<f64>::basis_state(b.clone(), 6).is_err());
        let s = SectorState::<f64>::from_word(b.clone(), 0b0101).unwrap();
        assert_eq!(s.amplitudes()[b.index_of(0b0101).unwrap()].re, 1.0);
    }

    #[test]
    fn haar_state_is_normalized() {
        let b = Arc::new(SectorBasis::half_filling(8).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = SectorState::<f64>::haar_random(b, &mut rng);
        assert!((s.norm() - 1.0).abs() < 1e-14);
    }
}
