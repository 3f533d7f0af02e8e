//! Annealing protocols: ordinary quantum annealing and quantum Jarzynski
//! annealing (with and without the unitary relaxation step).

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::HeatBath;
use crate::error::{Error, Result};
use crate::mapping::{map_to_quantum, Convention, MappedHamiltonian};
use crate::model::{gibbs_reference, AnnealSchedule, CostDiagonal, CostOrigin};
use crate::scalar::Real;
use crate::state::QuantumState;
use crate::util::{compensated_sum, evolve_eigenbasis};

/// Tolerance used to confirm a driver's ground state is the uniform superposition.
pub const DRIVER_GROUND_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriverKind {
    /// `-sum_i (|i><i+1| + h.c.)` on a periodic chain.
    RingHopping,
    /// `-sum_i sigma^x_i`.
    TransverseField,
}

/// Quantum-fluctuation Hamiltonian `H_1`, whose ground state is uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverHamiltonian<T: Real> {
    kind: DriverKind,
    matrix: DMatrix<T>,
}

impl<T: Real> DriverHamiltonian<T> {
    pub fn new(kind: DriverKind, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidInstance("driver needs D >= 2".into()));
        }
        let mut matrix = DMatrix::zeros(dim, dim);
        match kind {
            DriverKind::RingHopping => {
                for i in 0..dim {
                    let j = (i + 1) % dim;
                    matrix[(i, j)] = -T::one();
                    matrix[(j, i)] = -T::one();
                }
            }
            DriverKind::TransverseField => {
                if !dim.is_power_of_two() {
                    return Err(Error::InvalidTopology(format!(
                        "transverse field needs D = 2^n_s, got {dim}"
                    )));
                }
                let bits = dim.trailing_zeros();
                for i in 0..dim {
                    for b in 0..bits {
                        matrix[(i, i ^ (1 << b))] = -T::one();
                    }
                }
            }
        }
        let driver = Self { kind, matrix };
        driver.check_uniform_ground()?;
        Ok(driver)
    }

    /// Ring hopping for potentials, transverse field for Ising instances.
    pub fn for_cost(cost: &CostDiagonal<T>) -> Result<Self> {
        match cost.origin() {
            CostOrigin::Potential => Self::new(DriverKind::RingHopping, cost.dim()),
            CostOrigin::Ising { .. } => Self::new(DriverKind::TransverseField, cost.dim()),
        }
    }

    pub fn kind(&self) -> DriverKind {
        self.kind
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn check_uniform_ground(&self) -> Result<()> {
        let dim = self.dim();
        let eig = sorted_eigen(self.matrix.clone());
        let u = DVector::from_element(dim, T::one() / T::from_usize_lossy(dim).sqrt());
        let overlap = eig.1.column(0).dot(&u);
        let tol = T::lit(DRIVER_GROUND_TOLERANCE);
        if (T::one() - overlap * overlap) > tol || !(eig.0[1] - eig.0[0] > tol) {
            return Err(Error::InvalidInstance(
                "driver ground state is not the nondegenerate uniform superposition".into(),
            ));
        }
        Ok(())
    }
}

fn sorted_eigen<T: Real>(m: DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let dim = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(dim, dim, |a, c| eig.eigenvectors[(a, order[c])]);
    (values, vectors)
}

/// Multiplies by `exp(-delta_beta H_0 / 2)` and renormalizes.
///
/// Energies are shifted by their minimum first, which only changes the
/// discarded normalization.
pub fn work_operator_step<T: Real>(
    state: &QuantumState<T>,
    cost: &CostDiagonal<T>,
    delta_beta: T,
) -> Result<QuantumState<T>> {
    if delta_beta < T::zero() {
        return Err(Error::InvalidSchedule(format!(
            "work step needs delta_beta >= 0, got {delta_beta}"
        )));
    }
    if state.dim() != cost.dim() {
        return Err(Error::DimensionMismatch {
            expected: cost.dim(),
            got: state.dim(),
        });
    }
    if delta_beta == T::zero() {
        return Ok(state.clone());
    }
    let e_min = cost.min_energy();
    let half = T::lit(0.5);
    let mut out = state.clone();
    for (a, &e) in out.amplitudes_mut().iter_mut().zip(cost.energies()) {
        *a = a.scale((-(delta_beta * (e - e_min) * half)).exp());
    }
    out.normalize().map_err(|_| Error::Underflow {
        delta_beta: delta_beta.as_f64(),
    })?;
    Ok(out)
}

/// `exp(-i dt H_q)` with hbar = 1; no renormalization.
pub fn unitary_step<T: Real>(state: &QuantumState<T>, hq: &MappedHamiltonian<T>, dt: T) -> QuantumState<T> {
    hq.evolve(state, dt)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord<T: Real> {
    pub step: usize,
    pub t: T,
    pub beta: T,
    /// `|<Psi_eq(beta_k)|psi_k>|^2`.
    pub overlap_gibbs: T,
    /// Probability on the ground-state indices of `H_0`.
    pub gs_prob: T,
    /// `| ||psi_k|| - 1 |` before any renormalization at this step.
    pub norm_drift: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport<T: Real> {
    /// Records for grid points `k = 0..=n`.
    pub per_step: Vec<StepRecord<T>>,
    /// `|amplitude_i|^2` of the final state.
    pub final_distribution: Vec<T>,
    pub final_state: QuantumState<T>,
    pub wall_time: Duration,
}

impl<T: Real> RunReport<T> {
    pub fn min_overlap(&self) -> T {
        self.per_step
            .iter()
            .fold(T::one(), |m, r| m.min(r.overlap_gibbs))
    }

    pub fn final_gs_prob(&self) -> T {
        self.per_step.last().map_or(T::zero(), |r| r.gs_prob)
    }

    pub fn max_norm_drift(&self) -> T {
        self.per_step
            .iter()
            .fold(T::zero(), |m, r| m.max(r.norm_drift))
    }
}

/// Order of the two operations inside one Jarzynski step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepOrder {
    /// Work operator at the old beta, then `U` built at `beta_{k+1}`.
    #[default]
    WorkThenUnitary,
    /// `U` built at `beta_k`, then the work operator.
    UnitaryThenWork,
}

/// Knobs for [`run_qja_with`].
#[derive(Debug, Clone)]
pub struct QjaOptions<T: Real> {
    pub dynamics: HeatBath<T>,
    pub convention: Convention,
    pub order: StepOrder,
    /// Skip the unitary step entirely.
    pub without_unitary: bool,
    /// Overrides the uniform starting state.
    pub initial_state: Option<QuantumState<T>>,
}

impl<T: Real> QjaOptions<T> {
    pub fn new(dynamics: HeatBath<T>) -> Self {
        Self {
            dynamics,
            convention: Convention::Kernel,
            order: StepOrder::WorkThenUnitary,
            without_unitary: false,
            initial_state: None,
        }
    }
}

fn record<T: Real>(
    step: usize,
    schedule: &AnnealSchedule<T>,
    cost: &CostDiagonal<T>,
    ground: &[usize],
    state: &QuantumState<T>,
    norm_drift: T,
) -> StepRecord<T> {
    let beta = schedule.beta(step);
    let gibbs = gibbs_reference(cost, beta);
    StepRecord {
        step,
        t: schedule.time(step),
        beta,
        overlap_gibbs: gibbs.amplitude_state.fidelity(state),
        gs_prob: state.probability_on(ground),
        norm_drift,
    }
}

fn finish<T: Real>(per_step: Vec<StepRecord<T>>, state: QuantumState<T>, started: Instant) -> RunReport<T> {
    let mut final_distribution = state.probabilities();
    // guard against the last unitary step's rounding
    let total = compensated_sum(final_distribution.iter().copied());
    for p in final_distribution.iter_mut() {
        *p /= total;
    }
    RunReport {
        per_step,
        final_distribution,
        final_state: state,
        wall_time: started.elapsed(),
    }
}

/// Quantum Jarzynski annealing from the uniform state (canonical W-then-U order).
pub fn run_qja<T: Real>(
    cost: &CostDiagonal<T>,
    schedule: &AnnealSchedule<T>,
    dynamics: &HeatBath<T>,
) -> Result<RunReport<T>> {
    run_qja_with(cost, schedule, &QjaOptions::new(*dynamics))
}

/// Control run: work operators only.
pub fn run_qja_no_unitary<T: Real>(cost: &CostDiagonal<T>, schedule: &AnnealSchedule<T>) -> Result<RunReport<T>> {
    let mut opts = QjaOptions::new(HeatBath::new(crate::dynamics::Topology::default_for(cost)));
    opts.without_unitary = true;
    run_qja_with(cost, schedule, &opts)
}

pub fn run_qja_with<T: Real>(
    cost: &CostDiagonal<T>,
    schedule: &AnnealSchedule<T>,
    opts: &QjaOptions<T>,
) -> Result<RunReport<T>> {
    let started = Instant::now();
    let mut state = match &opts.initial_state {
        Some(s) => {
            if s.dim() != cost.dim() {
                return Err(Error::DimensionMismatch {
                    expected: cost.dim(),
                    got: s.dim(),
                });
            }
            s.clone()
        }
        None => {
            if schedule.beta(0) != T::zero() {
                return Err(Error::InvalidSchedule(
                    "a uniform start requires beta(t_0) = 0".into(),
                ));
            }
            QuantumState::uniform(cost.dim())
        }
    };
    let ground = cost.ground_indices();
    let dt = schedule.dt();
    let mut per_step = Vec::with_capacity(schedule.n_steps() + 1);
    per_step.push(record(0, schedule, cost, &ground, &state, (state.norm() - T::one()).abs()));

    let mapped = |beta: T| -> Result<MappedHamiltonian<T>> {
        let gen = opts.dynamics.generator(cost, beta)?;
        map_to_quantum(&gen, cost, opts.convention, dt)
    };
    let mut cached: Option<MappedHamiltonian<T>> = None;
    let mut hamiltonian_at = |beta: T| -> Result<MappedHamiltonian<T>> {
        if let Some(h) = &cached {
            if h.beta() == beta {
                return Ok(h.clone());
            }
        }
        let h = mapped(beta)?;
        cached = Some(h.clone());
        Ok(h)
    };

    for k in 0..schedule.n_steps() {
        let db = schedule.delta_beta(k);
        let drift = match (opts.without_unitary, opts.order) {
            (true, _) => {
                state = work_operator_step(&state, cost, db)?;
                T::zero()
            }
            (false, StepOrder::WorkThenUnitary) => {
                state = work_operator_step(&state, cost, db)?;
                let hq = hamiltonian_at(schedule.beta(k + 1))?;
                state = unitary_step(&state, &hq, dt);
                (state.norm() - T::one()).abs()
            }
            (false, StepOrder::UnitaryThenWork) => {
                let hq = hamiltonian_at(schedule.beta(k))?;
                state = unitary_step(&state, &hq, dt);
                let drift = (state.norm() - T::one()).abs();
                state = work_operator_step(&state, cost, db)?;
                drift
            }
        };
        per_step.push(record(k + 1, schedule, cost, &ground, &state, drift));
    }
    Ok(finish(per_step, state, started))
}

/// Ordinary quantum annealing with `H(t) = f(t) H_0 + (1 - f(t)) H_1`.
///
/// Step `k` applies the exact propagator of `H(t_k)` over `dt`. The state is
/// never renormalized, so `norm_drift` is cumulative.
pub fn run_qa<T: Real>(
    cost: &CostDiagonal<T>,
    schedule: &AnnealSchedule<T>,
    driver: &DriverHamiltonian<T>,
) -> Result<RunReport<T>> {
    if driver.dim() != cost.dim() {
        return Err(Error::DimensionMismatch {
            expected: cost.dim(),
            got: driver.dim(),
        });
    }
    let started = Instant::now();
    let dim = cost.dim();
    let ground = cost.ground_indices();
    let dt = schedule.dt();
    let h0 = DMatrix::from_diagonal(&DVector::from_column_slice(cost.energies()));
    let mut state = QuantumState::uniform(dim);
    let mut per_step = Vec::with_capacity(schedule.n_steps() + 1);
    per_step.push(record(0, schedule, cost, &ground, &state, T::zero()));

    let mut cache: Option<(T, Vec<T>, DMatrix<T>)> = None;
    for k in 0..schedule.n_steps() {
        let f = schedule.f(k);
        let fresh = cache.as_ref().map_or(true, |(cf, _, _)| *cf != f);
        if fresh {
            let h = &h0 * f + driver.matrix() * (T::one() - f);
            let (values, vectors) = sorted_eigen(h);
            cache = Some((f, values, vectors));
        }
        let (_, values, vectors) = cache.as_ref().expect("filled above");
        let next = evolve_eigenbasis(values, vectors, state.amplitudes(), dt);
        state = QuantumState::from_normalized(next);
        let drift = (state.norm() - T::one()).abs();
        per_step.push(record(k + 1, schedule, cost, &ground, &state, drift));
    }
    Ok(finish(per_step, state, started))
}

/// Projective measurement in the computational basis, reproducible per seed.
pub fn measure<T: Real>(state: &QuantumState<T>, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_index(state, &mut rng)
}

/// `n` independent measurements of identically prepared copies.
pub fn measure_many<T: Real>(state: &QuantumState<T>, n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sample_index(state, &mut rng)).collect()
}

fn sample_index<T: Real>(state: &QuantumState<T>, rng: &mut impl Rng) -> usize {
    let mut cdf = Vec::with_capacity(state.dim());
    let mut acc = 0.0;
    for a in state.amplitudes().iter() {
        acc += a.norm_sqr().as_f64();
        cdf.push(acc);
    }
    let target = rng.gen::<f64>() * acc;
    cdf.partition_point(|&c| c <= target).min(cdf.len() - 1)
}
