//! Heat-bath master equations, trajectory sampling, and the Jarzynski
//! equality for inverse-temperature protocols.
//!
//! Rates are stored column-wise: `rates[(j, i)]` is the rate of the hop
//! `i -> j`, every column sums to zero, and `exp(dt * rates)` is
//! column-stochastic. During step `k` the work exponent accrues
//! `-(beta_{k+1} - beta_k) E(sigma_k)` at the current state, and the state then
//! hops with the kernel built at `beta_{k+1}`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{gibbs_reference, AnnealSchedule, CostDiagonal, CostOrigin};
use crate::scalar::Real;
use crate::util::compensated_sum;

/// Which basis pairs exchange probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Nearest neighbours on a periodic chain.
    Ring,
    /// Single spin flips, i.e. basis indices differing in one bit.
    HypercubeSpinflip,
}

impl Topology {
    /// Undirected edges `(i, j)` with `i < j`, each listed once.
    pub fn edges<T: Real>(self, cost: &CostDiagonal<T>) -> Result<Vec<(usize, usize)>> {
        let dim = cost.dim();
        match self {
            Topology::Ring => {
                if let CostOrigin::Ising { .. } = cost.origin() {
                    return Err(Error::InvalidTopology(
                        "ring topology applies to potential instances, not Ising ones".into(),
                    ));
                }
                let mut edges: Vec<(usize, usize)> = (0..dim)
                    .map(|i| {
                        let j = (i + 1) % dim;
                        (i.min(j), i.max(j))
                    })
                    .collect();
                edges.sort_unstable();
                edges.dedup();
                Ok(edges)
            }
            Topology::HypercubeSpinflip => {
                if !dim.is_power_of_two() {
                    return Err(Error::InvalidTopology(format!(
                        "spin-flip topology needs D = 2^n_s, got D = {dim}"
                    )));
                }
                let bits = dim.trailing_zeros() as usize;
                if let CostOrigin::Ising { num_spins } = cost.origin() {
                    if num_spins != bits {
                        return Err(Error::InvalidTopology(format!(
                            "instance has {num_spins} spins but D = 2^{bits}"
                        )));
                    }
                }
                let mut edges = Vec::with_capacity(dim * bits / 2);
                for i in 0..dim {
                    for b in 0..bits {
                        let j = i ^ (1 << b);
                        if i < j {
                            edges.push((i, j));
                        }
                    }
                }
                Ok(edges)
            }
        }
    }

    /// Natural topology for an instance: ring for potentials, spin flips for Ising.
    pub fn default_for<T: Real>(cost: &CostDiagonal<T>) -> Self {
        match cost.origin() {
            CostOrigin::Potential => Topology::Ring,
            CostOrigin::Ising { .. } => Topology::HypercubeSpinflip,
        }
    }
}

/// Heat-bath dynamics settings shared by every beta along a schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatBath<T: Real> {
    pub topology: Topology,
    /// Attempt rate `Gamma`; only sets the unit of time.
    pub attempt_rate: T,
}

impl<T: Real> HeatBath<T> {
    pub fn new(topology: Topology) -> Self {
        Self {
            topology,
            attempt_rate: T::one(),
        }
    }

    pub fn with_attempt_rate(mut self, rate: T) -> Self {
        self.attempt_rate = rate;
        self
    }

    pub fn generator(&self, cost: &CostDiagonal<T>, beta: T) -> Result<RateGenerator<T>> {
        build_heatbath_generator(cost, beta, self.topology, self.attempt_rate)
    }
}

/// Continuous-time master-equation generator at a fixed beta.
#[derive(Debug, Clone, PartialEq)]
pub struct RateGenerator<T: Real> {
    rates: DMatrix<T>,
    beta: T,
    edges: Vec<(usize, usize)>,
}

impl<T: Real> RateGenerator<T> {
    /// Generator from explicit off-diagonal rates; the diagonal is recomputed
    /// so every column sums to zero. Off-diagonal entries outside `edges`
    /// must be zero.
    pub fn from_rates(mut rates: DMatrix<T>, beta: T, edges: Vec<(usize, usize)>) -> Result<Self> {
        let dim = rates.nrows();
        if rates.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: rates.ncols(),
            });
        }
        let mut adjacent = vec![false; dim * dim];
        for &(i, j) in &edges {
            if i >= dim || j >= dim || i == j {
                return Err(Error::InvalidTopology(format!("bad edge ({i}, {j})")));
            }
            adjacent[i * dim + j] = true;
            adjacent[j * dim + i] = true;
        }
        for j in 0..dim {
            for i in 0..dim {
                if i == j {
                    continue;
                }
                let r = rates[(i, j)];
                if r < T::zero() || !r.is_finite() {
                    return Err(Error::InvalidTopology(format!(
                        "rate {j}->{i} must be finite and nonnegative"
                    )));
                }
                if r != T::zero() && !adjacent[i * dim + j] {
                    return Err(Error::InvalidTopology(format!(
                        "nonzero rate {j}->{i} on a non-adjacent pair"
                    )));
                }
            }
        }
        for j in 0..dim {
            let out = compensated_sum((0..dim).filter(|&i| i != j).map(|i| rates[(i, j)]));
            rates[(j, j)] = -out;
        }
        Ok(Self { rates, beta, edges })
    }

    pub fn dim(&self) -> usize {
        self.rates.nrows()
    }

    pub fn rates(&self) -> &DMatrix<T> {
        &self.rates
    }

    /// Rate of the hop `from -> to`.
    pub fn rate(&self, from: usize, to: usize) -> T {
        self.rates[(to, from)]
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// One-step stochastic kernel `exp(dt M)` by scaling and squaring.
    pub fn kernel(&self, dt: T) -> DMatrix<T> {
        (&self.rates * dt).exp()
    }
}

/// `1 / (1 + e^x)` without overflow.
fn fermi<T: Real>(x: T) -> T {
    if x > T::zero() {
        let e = (-x).exp();
        e / (T::one() + e)
    } else {
        T::one() / (T::one() + x.exp())
    }
}

/// Glauber rates `Gamma / (1 + exp(beta (E_j - E_i)))` for each adjacent hop `i -> j`.
pub fn build_heatbath_generator<T: Real>(
    cost: &CostDiagonal<T>,
    beta: T,
    topology: Topology,
    attempt_rate: T,
) -> Result<RateGenerator<T>> {
    if !(attempt_rate > T::zero()) {
        return Err(Error::InvalidTopology(format!(
            "attempt rate must be positive, got {attempt_rate}"
        )));
    }
    let edges = topology.edges(cost)?;
    let e = cost.energies();
    let dim = cost.dim();
    let mut rates = DMatrix::zeros(dim, dim);
    for &(i, j) in &edges {
        rates[(j, i)] = attempt_rate * fermi(beta * (e[j] - e[i]));
        rates[(i, j)] = attempt_rate * fermi(beta * (e[i] - e[j]));
    }
    RateGenerator::from_rates(rates, beta, edges)
}

/// Largest detailed-balance violation `|M_{j<-i} w_i - M_{i<-j} w_j|` over
/// adjacent pairs, with weights `w = exp(-beta (E - E_min))` so that the
/// ground state carries weight one.
pub fn verify_detailed_balance<T: Real>(gen: &RateGenerator<T>, cost: &CostDiagonal<T>) -> T {
    let w = cost.shifted_weights(gen.beta);
    gen.edges.iter().fold(T::zero(), |m, &(i, j)| {
        let flow_ij = gen.rate(i, j) * w[i];
        let flow_ji = gen.rate(j, i) * w[j];
        m.max((flow_ij - flow_ji).abs())
    })
}

/// `max |K p - p|` for the Gibbs distribution `p` at the generator's beta.
pub fn stationarity_defect<T: Real>(kernel: &DMatrix<T>, cost: &CostDiagonal<T>, beta: T) -> T {
    let p = DVector::from_vec(gibbs_reference(cost, beta).probabilities);
    (kernel * &p - &p).abs().max()
}

/// `max_j |sum_i K_ij - 1|`.
pub fn column_sum_defect<T: Real>(kernel: &DMatrix<T>) -> T {
    kernel.column_iter().fold(T::zero(), |m, c| {
        m.max((compensated_sum(c.iter().copied()) - T::one()).abs())
    })
}

/// Per-step transition kernels for a schedule; step `k` uses `beta_{k+1}`.
#[derive(Debug, Clone)]
pub struct StepKernels<T: Real> {
    kernels: Vec<Arc<DMatrix<T>>>,
}

impl<T: Real> StepKernels<T> {
    pub fn new(cost: &CostDiagonal<T>, schedule: &AnnealSchedule<T>, dynamics: &HeatBath<T>) -> Result<Self> {
        let mut kernels: Vec<Arc<DMatrix<T>>> = Vec::with_capacity(schedule.n_steps());
        for k in 0..schedule.n_steps() {
            let beta = schedule.beta(k + 1);
            if k > 0 && schedule.beta(k) == beta {
                let prev = kernels[k - 1].clone();
                kernels.push(prev);
                continue;
            }
            kernels.push(Arc::new(dynamics.generator(cost, beta)?.kernel(schedule.dt())));
        }
        Ok(Self { kernels })
    }

    pub fn get(&self, step: usize) -> &DMatrix<T> {
        &self.kernels[step]
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }
}

/// One realization of the discrete-time process.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Real> {
    /// Basis index at `t_0 ..= t_n`.
    pub states: Vec<usize>,
    /// `-sum_k (beta_{k+1} - beta_k) E(states[k])`.
    pub work_exponent: T,
}

/// Cumulative distributions for drawing the initial state and every hop.
struct Sampler<'a, T: Real> {
    energies: &'a [T],
    schedule: &'a AnnealSchedule<T>,
    initial_cdf: Vec<f64>,
    column_cdfs: Vec<Arc<Vec<Vec<f64>>>>,
}

fn cdf<T: Real>(weights: impl Iterator<Item = T>) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .map(|w| {
            acc += w.as_f64().max(0.0);
            acc
        })
        .collect()
}

fn draw(cdf: &[f64], u: f64) -> usize {
    let target = u * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c <= target).min(cdf.len() - 1)
}

impl<'a, T: Real> Sampler<'a, T> {
    fn new(cost: &'a CostDiagonal<T>, schedule: &'a AnnealSchedule<T>, kernels: &StepKernels<T>) -> Self {
        let initial = gibbs_reference(cost, schedule.beta(0));
        let mut column_cdfs: Vec<Arc<Vec<Vec<f64>>>> = Vec::with_capacity(kernels.len());
        for k in 0..kernels.len() {
            if k > 0 && Arc::ptr_eq(&kernels.kernels[k], &kernels.kernels[k - 1]) {
                let prev = column_cdfs[k - 1].clone();
                column_cdfs.push(prev);
                continue;
            }
            let kern = kernels.get(k);
            column_cdfs.push(Arc::new(
                kern.column_iter().map(|c| cdf(c.iter().copied())).collect(),
            ));
        }
        Self {
            energies: cost.energies(),
            schedule,
            initial_cdf: cdf(initial.probabilities.into_iter()),
            column_cdfs,
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> Trajectory<T> {
        let n = self.schedule.n_steps();
        let mut states = Vec::with_capacity(n + 1);
        let mut state = draw(&self.initial_cdf, rng.gen());
        states.push(state);
        let mut work = T::zero();
        for k in 0..n {
            work -= self.schedule.delta_beta(k) * self.energies[state];
            state = draw(&self.column_cdfs[k][state], rng.gen());
            states.push(state);
        }
        Trajectory {
            states,
            work_exponent: work,
        }
    }
}

pub fn sample_trajectory<T: Real>(
    cost: &CostDiagonal<T>,
    schedule: &AnnealSchedule<T>,
    dynamics: &HeatBath<T>,
    seed: u64,
) -> Result<Trajectory<T>> {
    let kernels = StepKernels::new(cost, schedule, dynamics)?;
    let sampler = Sampler::new(cost, schedule, &kernels);
    Ok(sampler.sample(&mut ChaCha8Rng::seed_from_u64(seed)))
}

/// Work exponents of `n_samples` independent trajectories. Trajectory `i`
/// draws from stream `i` of the generator seeded with `seed`, so the output
/// does not depend on the thread count.
pub fn sample_work_exponents<T: Real>(
    cost: &CostDiagonal<T>,
    schedule: &AnnealSchedule<T>,
    dynamics: &HeatBath<T>,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<T>> {
    let kernels = StepKernels::new(cost, schedule, dynamics)?;
    let sampler = Sampler::new(cost, schedule, &kernels);
    Ok((0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            sampler.sample(&mut rng).work_exponent
        })
        .collect())
}

/// Both sides of the Jarzynski equality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JeResult<T: Real> {
    /// `<exp(-beta W)>`.
    pub lhs_estimate: T,
    /// `Z(beta_n) / Z(beta_0)`.
    pub rhs_exact: T,
    pub std_error: T,
    pub n_samples: usize,
}

impl<T: Real> JeResult<T> {
    pub fn abs_error(&self) -> T {
        (self.lhs_estimate - self.rhs_exact).abs()
    }

    pub fn rel_error(&self) -> T {
        self.abs_error() / self.rhs_exact.abs()
    }
}

/// `Z(beta_n) / Z(beta_0)` from exact partition functions, evaluated as
/// `exp(-(beta_n - beta_0) E_min) S_n / S_0` with max-shifted sums `S`.
pub fn partition_ratio<T: Real>(cost: &CostDiagonal<T>, schedule: &AnnealSchedule<T>) -> T {
    let b0 = schedule.beta(0);
    let bn = schedule.beta(schedule.n_steps());
    let s0 = compensated_sum(cost.shifted_weights(b0));
    let sn = compensated_sum(cost.shifted_weights(bn));
    (-(bn - b0) * cost.min_energy()).exp() * (sn / s0)
}

/// Sample mean of `exp(work)` with its standard error.
pub fn je_from_samples<T: Real>(work_exponents: &[T], rhs_exact: T) -> JeResult<T> {
    let n = work_exponents.len();
    let nf = T::from_usize_lossy(n.max(1));
    let values: Vec<T> = work_exponents.iter().map(|w| w.exp()).collect();
    let mean = compensated_sum(values.iter().copied()) / nf;
    let std_error = if n > 1 {
        let var = compensated_sum(values.iter().map(|&v| (v - mean) * (v - mean)))
            / T::from_usize_lossy(n - 1);
        (var / nf).sqrt()
    } else {
        T::zero()
    };
    JeResult {
        lhs_estimate: mean,
        rhs_exact,
        std_error,
        n_samples: n,
    }
}

pub fn jarzynski_estimate<T: Real>(
    cost: &CostDiagonal<T>,
    schedule: &AnnealSchedule<T>,
    dynamics: &HeatBath<T>,
    n_samples: usize,
    seed: u64,
) -> Result<JeResult<T>> {
    if n_samples == 0 {
        return Err(Error::Config("n_samples must be >= 1".into()));
    }
    let works = sample_work_exponents(cost, schedule, dynamics, n_samples, seed)?;
    Ok(je_from_samples(&works, partition_ratio(cost, schedule)))
}

/// Transition factor inserted between work factors in the path sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionFactor {
    /// `exp(dt M(beta_{k+1}))`.
    Kernel,
    /// Identity: no hops at all.
    Identity,
}

/// Exact path average by the transfer product
/// `1^T K_n W_{n-1} ... K_1 W_0 p_0`, with `W_k = diag(exp(-dbeta_k E))`.
pub fn jarzynski_exact<T: Real>(
    cost: &CostDiagonal<T>,
    schedule: &AnnealSchedule<T>,
    dynamics: &HeatBath<T>,
) -> Result<JeResult<T>> {
    jarzynski_exact_with(cost, schedule, dynamics, TransitionFactor::Kernel)
}

pub fn jarzynski_exact_with<T: Real>(
    cost: &CostDiagonal<T>,
    schedule: &AnnealSchedule<T>,
    dynamics: &HeatBath<T>,
    transition: TransitionFactor,
) -> Result<JeResult<T>> {
    let kernels = match transition {
        TransitionFactor::Kernel => Some(StepKernels::new(cost, schedule, dynamics)?),
        TransitionFactor::Identity => None,
    };
    let e = cost.energies();
    let e_min = cost.min_energy();
    let mut v = DVector::from_vec(gibbs_reference(cost, schedule.beta(0)).probabilities);
    // work factors are shifted by E_min; the common factor is restored at the end
    let tiny = T::lit(1e-200);
    let mut log_rescale = T::zero();
    for k in 0..schedule.n_steps() {
        let db = schedule.delta_beta(k);
        for (vi, &ei) in v.iter_mut().zip(e) {
            *vi *= (-(db * (ei - e_min))).exp();
        }
        if let Some(kernels) = &kernels {
            v = kernels.get(k) * v;
        }
        let total = compensated_sum(v.iter().copied());
        if total < tiny {
            log_rescale += total.ln();
            v /= total;
        }
    }
    let shift = -(schedule.beta(schedule.n_steps()) - schedule.beta(0)) * e_min;
    let log_acc = shift + log_rescale;
    Ok(JeResult {
        lhs_estimate: log_acc.exp() * compensated_sum(v.iter().copied()),
        rhs_exact: partition_ratio(cost, schedule),
        std_error: T::zero(),
        n_samples: 0,
    })
}
