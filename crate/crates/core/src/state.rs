//! Normalized complex amplitude vectors over the computational basis.

use nalgebra::DVector;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::util::compensated_sum;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState<T: Real> {
    amplitudes: DVector<Complex<T>>,
}

impl<T: Real> QuantumState<T> {
    /// Builds a state from raw amplitudes and normalizes it.
    pub fn new(amplitudes: DVector<Complex<T>>) -> Result<Self> {
        let mut state = Self { amplitudes };
        state.normalize()?;
        Ok(state)
    }

    pub fn from_real(amplitudes: &[T]) -> Result<Self> {
        Self::new(DVector::from_iterator(
            amplitudes.len(),
            amplitudes.iter().map(|&a| Complex::new(a, T::zero())),
        ))
    }

    /// Wraps amplitudes that are already normalized.
    pub(crate) fn from_normalized(amplitudes: DVector<Complex<T>>) -> Self {
        Self { amplitudes }
    }

    /// Equal-weight superposition of all `dim` basis states.
    pub fn uniform(dim: usize) -> Self {
        let a = T::one() / T::from_usize_lossy(dim).sqrt();
        Self {
            amplitudes: DVector::from_element(dim, Complex::new(a, T::zero())),
        }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = DVector::from_element(dim, Complex::new(T::zero(), T::zero()));
        amplitudes[index] = Complex::new(T::one(), T::zero());
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex<T>> {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut DVector<Complex<T>> {
        &mut self.amplitudes
    }

    pub fn norm(&self) -> T {
        compensated_sum(self.amplitudes.iter().map(|a| a.norm_sqr())).sqrt()
    }

    /// Rescales to unit norm. Fails if every amplitude is zero.
    pub fn normalize(&mut self) -> Result<T> {
        let norm = self.norm();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::InvalidInstance(
                "cannot normalize a state with zero or non-finite norm".into(),
            ));
        }
        let inv = T::one() / norm;
        for a in self.amplitudes.iter_mut() {
            *a = a.scale(inv);
        }
        Ok(norm)
    }

    /// Born-rule probabilities `|a_i|^2`.
    pub fn probabilities(&self) -> Vec<T> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| {
                acc + a.conj() * b
            })
    }

    /// Fidelity `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Self) -> T {
        self.inner(other).norm_sqr()
    }

    /// Total probability on the given basis indices.
    pub fn probability_on(&self, indices: &[usize]) -> T {
        compensated_sum(indices.iter().map(|&i| self.amplitudes[i].norm_sqr()))
    }
}
