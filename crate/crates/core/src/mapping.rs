//! Classical-quantum mapping of a detailed-balance generator.
//!
//! With `Pi = diag(exp(-beta E))`, the similarity transform
//! `S = Pi^{-1/2} M Pi^{1/2}` of a reversible generator is symmetric and
//! negative semidefinite, with `sqrt(Pi) 1` in its null space. Two Hamiltonians
//! are built from it:
//!
//! * [`Convention::Kernel`]: `H_q = I - exp(dt S)`, the identity minus the
//!   similarity-transformed one-step kernel `exp(dt M)`;
//! * [`Convention::Rate`]: `H_q = -S`.
//!
//! Both share eigenvectors, have ground energy exactly zero with the Gibbs
//! amplitude state as ground state, and are positive on its complement for a
//! connected graph. Spectra come from [`crate::spectral`], which resolves
//! exponentially small excitation energies.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{verify_detailed_balance, HeatBath, RateGenerator};
use crate::error::{Error, Result};
use crate::model::{gibbs_reference, AnnealSchedule, CostDiagonal};
use crate::scalar::Real;
use crate::spectral::{incidence_gram_spectrum, Spectrum};
use crate::state::QuantumState;
use crate::util::evolve_eigenbasis;

/// Detailed-balance residual above which the mapping is refused.
pub const DETAILED_BALANCE_TOLERANCE: f64 = 1e-10;
/// Asymmetry of the similarity transform above which the mapping is refused.
pub const ASYMMETRY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `I - Pi^{-1/2} exp(dt M) Pi^{1/2}`.
    #[default]
    Kernel,
    /// `-Pi^{-1/2} M Pi^{1/2}`.
    Rate,
}

#[derive(Debug, Clone)]
pub struct MappedHamiltonian<T: Real> {
    matrix: DMatrix<T>,
    beta: T,
    convention: Convention,
    dt: T,
    spectrum: Spectrum<T>,
    symmetry_defect: T,
    source: RateGenerator<T>,
}

impl<T: Real> MappedHamiltonian<T> {
    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    /// Kernel time step (unused by the rate convention).
    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Ascending eigenvalues with matching eigenvector columns.
    pub fn spectrum(&self) -> &Spectrum<T> {
        &self.spectrum
    }

    /// `max |S_ij - S_ji|` of the unsymmetrized similarity transform.
    pub fn symmetry_defect(&self) -> T {
        self.symmetry_defect
    }

    pub fn source(&self) -> &RateGenerator<T> {
        &self.source
    }

    /// Eigenvector of the lowest eigenvalue.
    pub fn ground_vector(&self) -> DVector<T> {
        self.spectrum.vectors.column(0).into_owned()
    }

    /// `exp(-i dt H_q) |psi>` (hbar = 1), applied through the eigenbasis.
    pub fn evolve(&self, state: &QuantumState<T>, dt: T) -> QuantumState<T> {
        QuantumState::from_normalized(evolve_eigenbasis(
            &self.spectrum.values,
            &self.spectrum.vectors,
            state.amplitudes(),
            dt,
        ))
    }

    /// `<psi| H_q |psi>`.
    pub fn energy(&self, state: &QuantumState<T>) -> T {
        let psi = state.amplitudes();
        let re = DVector::from_iterator(psi.len(), psi.iter().map(|a| a.re));
        let im = DVector::from_iterator(psi.len(), psi.iter().map(|a| a.im));
        re.dot(&(&self.matrix * &re)) + im.dot(&(&self.matrix * &im))
    }
}

/// Maps a heat-bath generator to its quantum Hamiltonian.
pub fn map_to_quantum<T: Real>(
    gen: &RateGenerator<T>,
    cost: &CostDiagonal<T>,
    convention: Convention,
    dt: T,
) -> Result<MappedHamiltonian<T>> {
    let dim = gen.dim();
    if cost.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: cost.dim(),
        });
    }
    if convention == Convention::Kernel && !(dt > T::zero()) {
        return Err(Error::MappingPrecondition(format!(
            "kernel convention needs dt > 0, got {dt}"
        )));
    }
    let residual = verify_detailed_balance(gen, cost);
    if !(residual < T::lit(DETAILED_BALANCE_TOLERANCE)) {
        return Err(Error::MappingPrecondition(format!(
            "detailed-balance residual {residual} exceeds {DETAILED_BALANCE_TOLERANCE}"
        )));
    }

    let beta = gen.beta();
    let e = cost.energies();
    let e_min = cost.min_energy();
    let half = T::lit(0.5);
    let quarter = T::lit(0.25);

    let mut symmetry_defect = T::zero();
    let mut row_scale = Vec::with_capacity(gen.edges().len());
    for &(i, j) in gen.edges() {
        let fwd = gen.rate(i, j);
        let bwd = gen.rate(j, i);
        let s_ji = fwd * (beta * (e[j] - e[i]) * half).exp();
        let s_ij = bwd * (beta * (e[i] - e[j]) * half).exp();
        symmetry_defect = symmetry_defect.max((s_ij - s_ji).abs());
        row_scale.push(if fwd > T::zero() && bwd > T::zero() {
            ((fwd.ln() + bwd.ln()) * quarter - beta * (e[i] + e[j] - e_min - e_min) * quarter).exp()
        } else {
            T::zero()
        });
    }
    if !(symmetry_defect <= T::lit(ASYMMETRY_TOLERANCE)) {
        return Err(Error::MappingPrecondition(format!(
            "similarity transform asymmetry {symmetry_defect} exceeds {ASYMMETRY_TOLERANCE}"
        )));
    }
    let col_scale: Vec<T> = e.iter().map(|&ei| (beta * (ei - e_min) * half).exp()).collect();
    let mut spectrum = incidence_gram_spectrum(dim, gen.edges(), &row_scale, &col_scale);

    let matrix = match convention {
        Convention::Rate => {
            let mut h = DMatrix::zeros(dim, dim);
            for i in 0..dim {
                h[(i, i)] = -gen.rates()[(i, i)];
            }
            for &(i, j) in gen.edges() {
                let off = -(gen.rate(i, j) * gen.rate(j, i)).sqrt();
                h[(i, j)] = off;
                h[(j, i)] = off;
            }
            h
        }
        Convention::Kernel => {
            for v in spectrum.values.iter_mut() {
                *v = -(-(dt * *v)).exp_m1();
            }
            let v = &spectrum.vectors;
            let scaled = DMatrix::from_fn(dim, dim, |a, k| v[(a, k)] * spectrum.values[k]);
            let h = scaled * v.transpose();
            (&h + h.transpose()) * half
        }
    };

    Ok(MappedHamiltonian {
        matrix,
        beta,
        convention,
        dt,
        spectrum,
        symmetry_defect,
        source: gen.clone(),
    })
}

/// Numerical evidence for the spectral claims of the mapping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralCertificate<T: Real> {
    pub lambda_min: T,
    pub lambda_1: T,
    pub gap: T,
    /// `|<v_0 | Psi_eq(beta)>|^2`.
    pub gs_fidelity: T,
    pub all_excited_positive: bool,
    /// Zero is a repeated eigenvalue (e.g. no transitions at all); the
    /// fidelity then refers to an arbitrary vector of the ground space.
    pub degenerate_ground: bool,
}

pub fn spectral_certificate<T: Real>(hq: &MappedHamiltonian<T>, cost: &CostDiagonal<T>) -> SpectralCertificate<T> {
    let values = &hq.spectrum.values;
    let lambda_min = values[0];
    let lambda_1 = values[1];
    let gibbs = gibbs_reference(cost, hq.beta);
    let v0 = hq.ground_vector();
    let overlap = v0
        .iter()
        .zip(gibbs.amplitude_state.amplitudes().iter())
        .fold(T::zero(), |acc, (&a, b)| acc + a * b.re);
    let all_excited_positive = values[1..].iter().all(|&v| v > T::zero());
    SpectralCertificate {
        lambda_min,
        lambda_1,
        gap: lambda_1 - lambda_min,
        gs_fidelity: overlap * overlap,
        all_excited_positive,
        degenerate_ground: !(lambda_1 > lambda_min),
    }
}

/// Two lowest levels of `H_q` at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapPoint<T: Real> {
    pub t: T,
    pub beta: T,
    pub lambda0: T,
    pub lambda1: T,
    pub gap: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile<T: Real> {
    pub points: Vec<GapPoint<T>>,
}

impl<T: Real> GapProfile<T> {
    /// First grid point attaining the smallest gap.
    pub fn minimum(&self) -> &GapPoint<T> {
        self.points
            .iter()
            .fold(&self.points[0], |best, p| if p.gap < best.gap { p } else { best })
    }
}

/// Gap of `H_q(beta(t_k))` at every grid point `k = 0..=n`.
pub fn gap_profile<T: Real>(
    cost: &CostDiagonal<T>,
    schedule: &AnnealSchedule<T>,
    dynamics: &HeatBath<T>,
    convention: Convention,
) -> Result<GapProfile<T>> {
    let points = (0..=schedule.n_steps())
        .into_par_iter()
        .map(|k| {
            let beta = schedule.beta(k);
            let gen = dynamics.generator(cost, beta)?;
            let hq = map_to_quantum(&gen, cost, convention, schedule.dt())?;
            let v = &hq.spectrum().values;
            Ok(GapPoint {
                t: schedule.time(k),
                beta,
                lambda0: v[0],
                lambda1: v[1],
                gap: v[1] - v[0],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GapProfile { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_heatbath_generator, Topology};
    use crate::model::{build_random_potential, PotentialDistribution};
    use nalgebra::SymmetricEigen;

    #[test]
    fn two_state_ground_vector() {
        let cost = CostDiagonal::new(vec![0.0_f64, -1.0], "two").unwrap();
        let gen = build_heatbath_generator(&cost, 1.0, Topology::Ring, 1.0).unwrap();
        let hq = map_to_quantum(&gen, &cost, Convention::Kernel, 0.1).unwrap();
        let vals = &hq.spectrum().values;
        assert!(vals[0].abs() < 1e-15);
        assert!(vals[1] > 0.0);
        let v0 = hq.ground_vector();
        let expect = DVector::from_vec(vec![1.0, 0.5_f64.exp()]).normalize();
        assert!((v0.dot(&expect).abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn infinite_temperature_ground_is_uniform() {
        let cost = build_random_potential::<f64>(8, 3, PotentialDistribution::Uniform01).unwrap();
        let gen = build_heatbath_generator(&cost, 0.0, Topology::Ring, 1.0).unwrap();
        let hq = map_to_quantum(&gen, &cost, Convention::Kernel, 0.1).unwrap();
        let u = DVector::from_element(8, 1.0 / 8f64.sqrt());
        assert!((hq.ground_vector().dot(&u).abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kernel_matrix_is_identity_minus_transformed_kernel() {
        let cost = build_random_potential::<f64>(6, 9, PotentialDistribution::Uniform01).unwrap();
        let beta = 2.0;
        let dt = 0.4;
        let gen = build_heatbath_generator(&cost, beta, Topology::Ring, 1.0).unwrap();
        let hq = map_to_quantum(&gen, &cost, Convention::Kernel, dt).unwrap();
        let k = gen.kernel(dt);
        let e = cost.energies();
        let direct = DMatrix::from_fn(6, 6, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id - (beta * e[i] / 2.0).exp() * k[(i, j)] * (-beta * e[j] / 2.0).exp()
        });
        assert!((hq.matrix() - direct).abs().max() < 1e-13);
    }

    #[test]
    fn rate_convention_matches_dense_eigensolver() {
        let cost = build_random_potential::<f64>(8, 2, PotentialDistribution::Uniform01).unwrap();
        let gen = build_heatbath_generator(&cost, 1.5, Topology::Ring, 1.0).unwrap();
        let hq = map_to_quantum(&gen, &cost, Convention::Rate, 0.0).unwrap();
        let mut dense: Vec<f64> = SymmetricEigen::new(hq.matrix().clone()).eigenvalues.iter().copied().collect();
        dense.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in hq.spectrum().values.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn symmetric_two_state_gap_is_twice_hop_weight() {
        let cost = CostDiagonal::new(vec![-0.4_f64, -0.4], "flat").unwrap();
        let dt = 0.7_f64;
        let gen = build_heatbath_generator(&cost, 3.0, Topology::Ring, 1.0).unwrap();
        let hop = gen.kernel(dt)[(1, 0)];
        let cert = spectral_certificate(&map_to_quantum(&gen, &cost, Convention::Kernel, dt).unwrap(), &cost);
        // closed form: hop = (1 - e^{-Gamma dt}) / 2
        assert!((hop - (1.0 - (-dt).exp()) / 2.0).abs() < 1e-15);
        assert!((cert.gap - 2.0 * hop).abs() < 1e-15);
    }

    #[test]
    fn no_transitions_is_flagged_degenerate() {
        let cost = CostDiagonal::new(vec![0.0, -1.0, -0.5], "frozen").unwrap();
        let gen = RateGenerator::from_rates(DMatrix::zeros(3, 3), 1.0, vec![]).unwrap();
        let hq = map_to_quantum(&gen, &cost, Convention::Kernel, 0.1).unwrap();
        assert!(hq.matrix().iter().all(|&x| x == 0.0));
        let cert = spectral_certificate(&hq, &cost);
        assert!(cert.degenerate_ground);
        assert!(!cert.all_excited_positive);
        assert_eq!(cert.lambda_min, 0.0);
    }

    #[test]
    fn detailed_balance_violation_is_refused() {
        let cost = CostDiagonal::new(vec![0.0, -1.0, -0.5], "x").unwrap();
        let gen = build_heatbath_generator(&cost, 1.0, Topology::Ring, 1.0).unwrap();
        let mut rates = gen.rates().clone();
        rates[(1, 0)] *= 1.1;
        let bad = RateGenerator::from_rates(rates, 1.0, gen.edges().to_vec()).unwrap();
        assert!(matches!(
            map_to_quantum(&bad, &cost, Convention::Kernel, 0.1),
            Err(Error::MappingPrecondition(_))
        ));
    }
}
