//! Problem instances, annealing schedules and exact Gibbs quantities.
//!
//! Every other module treats the values produced here as ground truth:
//! cost functions are stored as diagonal operators (one energy per basis
//! state), and Gibbs references are evaluated in closed form with a
//! max-shift so that `beta * E` never overflows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::state::QuantumState;
use crate::util::compensated_sum;

/// Largest spin count accepted by [`ising_to_diagonal`].
pub const MAX_SPINS: usize = 14;

/// Where a cost diagonal came from; decides which hopping topologies apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CostOrigin {
    Potential,
    Ising { num_spins: usize },
}

/// Classical cost function as a diagonal operator, `E_i` per basis state `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostDiagonal<T: Real> {
    energies: Vec<T>,
    label: String,
    origin: CostOrigin,
}

impl<T: Real> CostDiagonal<T> {
    /// Explicit potential-style energies (ring topology applies).
    pub fn new(energies: Vec<T>, label: impl Into<String>) -> Result<Self> {
        Self::with_origin(energies, label, CostOrigin::Potential)
    }

    pub fn with_origin(
        energies: Vec<T>,
        label: impl Into<String>,
        origin: CostOrigin,
    ) -> Result<Self> {
        if energies.len() < 2 {
            return Err(Error::InvalidInstance(format!(
                "need at least 2 basis states, got {}",
                energies.len()
            )));
        }
        if let Some(i) = energies.iter().position(|e| !e.is_finite()) {
            return Err(Error::InvalidInstance(format!("energy {i} is not finite")));
        }
        Ok(Self {
            energies,
            label: label.into(),
            origin,
        })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[T] {
        &self.energies
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn origin(&self) -> CostOrigin {
        self.origin
    }

    pub fn min_energy(&self) -> T {
        self.energies
            .iter()
            .copied()
            .fold(self.energies[0], |m, e| m.min(e))
    }

    /// All indices attaining the minimum energy, ascending.
    pub fn ground_indices(&self) -> Vec<usize> {
        let min = self.min_energy();
        (0..self.dim()).filter(|&i| self.energies[i] == min).collect()
    }

    /// Boltzmann weights `exp(-beta (E_i - E_min))`; the ground state has weight 1.
    pub fn shifted_weights(&self, beta: T) -> Vec<T> {
        let min = self.min_energy();
        self.energies
            .iter()
            .map(|&e| (-(beta * (e - min))).exp())
            .collect()
    }
}

/// Distribution of the site potentials `V_i` in a random potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialDistribution {
    /// `V_i ~ U[0, 1)`.
    #[default]
    Uniform01,
}

/// One-dimensional random potential `E_i = -V_i`, reproducible per seed.
pub fn build_random_potential<T: Real>(
    dim: usize,
    seed: u64,
    distribution: PotentialDistribution,
) -> Result<CostDiagonal<T>> {
    if dim < 2 {
        return Err(Error::InvalidInstance(format!(
            "random potential needs D >= 2, got {dim}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let energies = (0..dim)
        .map(|_| match distribution {
            PotentialDistribution::Uniform01 => -T::lit(rng.gen::<f64>()),
        })
        .collect();
    CostDiagonal::with_origin(
        energies,
        format!("potential(D={dim}, seed={seed})"),
        CostOrigin::Potential,
    )
}

/// Ising spin glass `H = -sum J_ij s_i s_j - sum h_i s_i`.
///
/// Basis convention: bit `b` of the basis index holds spin `b`, and a
/// cleared bit means `s = +1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingInstance<T: Real> {
    num_spins: usize,
    couplings: Vec<(usize, usize, T)>,
    fields: Vec<T>,
}

impl<T: Real> IsingInstance<T> {
    pub fn new(num_spins: usize, couplings: Vec<(usize, usize, T)>, fields: Vec<T>) -> Result<Self> {
        if num_spins == 0 || num_spins > MAX_SPINS {
            return Err(Error::InvalidInstance(format!(
                "num_spins must be in 1..={MAX_SPINS}, got {num_spins}"
            )));
        }
        if fields.len() != num_spins {
            return Err(Error::InvalidInstance(format!(
                "expected {num_spins} fields, got {}",
                fields.len()
            )));
        }
        for &(i, j, _) in &couplings {
            if i >= num_spins || j >= num_spins {
                return Err(Error::InvalidInstance(format!(
                    "coupling ({i}, {j}) references a site outside 0..{num_spins}"
                )));
            }
        }
        Ok(Self {
            num_spins,
            couplings,
            fields,
        })
    }

    /// Fully connected instance with `J_ij, h_i ~ U[-1, 1)`.
    pub fn random(num_spins: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut couplings = Vec::new();
        for i in 0..num_spins {
            for j in (i + 1)..num_spins {
                couplings.push((i, j, T::lit(rng.gen_range(-1.0..1.0))));
            }
        }
        let fields = (0..num_spins)
            .map(|_| T::lit(rng.gen_range(-1.0..1.0)))
            .collect();
        Self::new(num_spins, couplings, fields)
    }

    pub fn num_spins(&self) -> usize {
        self.num_spins
    }

    pub fn couplings(&self) -> &[(usize, usize, T)] {
        &self.couplings
    }

    pub fn fields(&self) -> &[T] {
        &self.fields
    }

    /// Spin value of site `site` in basis state `index`.
    pub fn spin(index: usize, site: usize) -> T {
        if (index >> site) & 1 == 0 {
            T::one()
        } else {
            -T::one()
        }
    }

    pub fn energy(&self, index: usize) -> T {
        let mut e = T::zero();
        for &(i, j, coupling) in &self.couplings {
            e -= coupling * Self::spin(index, i) * Self::spin(index, j);
        }
        for (i, &h) in self.fields.iter().enumerate() {
            e -= h * Self::spin(index, i);
        }
        e
    }
}

/// Expands an Ising instance into its `2^n_s` diagonal energies.
pub fn ising_to_diagonal<T: Real>(inst: &IsingInstance<T>) -> Result<CostDiagonal<T>> {
    let dim = 1usize << inst.num_spins;
    let energies = (0..dim).map(|b| inst.energy(b)).collect();
    CostDiagonal::with_origin(
        energies,
        format!("ising(n_s={})", inst.num_spins),
        CostOrigin::Ising {
            num_spins: inst.num_spins,
        },
    )
}

/// Discretized protocol: `beta(t_k)` and `f(t_k)` on `t_k = k dt`, `k = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnealSchedule<T: Real> {
    n_steps: usize,
    dt: T,
    beta_grid: Vec<T>,
    f_grid: Vec<T>,
}

impl<T: Real> AnnealSchedule<T> {
    /// Arbitrary grids. Both must have `n + 1` entries and be nondecreasing,
    /// with `beta >= 0` and `f` in `[0, 1]`.
    pub fn new(dt: T, beta_grid: Vec<T>, f_grid: Vec<T>) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::InvalidSchedule(format!("dt must be positive, got {dt}")));
        }
        if beta_grid.len() < 2 || beta_grid.len() != f_grid.len() {
            return Err(Error::InvalidSchedule(format!(
                "grids need equal length >= 2, got beta {} and f {}",
                beta_grid.len(),
                f_grid.len()
            )));
        }
        if beta_grid.iter().any(|b| !b.is_finite() || *b < T::zero()) {
            return Err(Error::InvalidSchedule("beta must be finite and >= 0".into()));
        }
        if f_grid
            .iter()
            .any(|f| !f.is_finite() || *f < T::zero() || *f > T::one())
        {
            return Err(Error::InvalidSchedule("f must lie in [0, 1]".into()));
        }
        if beta_grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidSchedule("beta grid must be nondecreasing".into()));
        }
        if f_grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidSchedule("f grid must be nondecreasing".into()));
        }
        Ok(Self {
            n_steps: beta_grid.len() - 1,
            dt,
            beta_grid,
            f_grid,
        })
    }

    /// Constant inverse temperature with a linear `f` ramp.
    pub fn constant_beta(n_steps: usize, dt: T, beta: T) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::InvalidSchedule("n_steps must be >= 1".into()));
        }
        let n = T::from_usize_lossy(n_steps);
        Self::new(
            dt,
            vec![beta; n_steps + 1],
            (0..=n_steps).map(|k| T::from_usize_lossy(k) / n).collect(),
        )
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn beta_grid(&self) -> &[T] {
        &self.beta_grid
    }

    pub fn f_grid(&self) -> &[T] {
        &self.f_grid
    }

    pub fn beta(&self, k: usize) -> T {
        self.beta_grid[k]
    }

    pub fn f(&self, k: usize) -> T {
        self.f_grid[k]
    }

    pub fn time(&self, k: usize) -> T {
        self.dt * T::from_usize_lossy(k)
    }

    pub fn total_time(&self) -> T {
        self.time(self.n_steps)
    }

    /// `beta(t_{k+1}) - beta(t_k)`.
    pub fn delta_beta(&self, k: usize) -> T {
        self.beta_grid[k + 1] - self.beta_grid[k]
    }

    /// Same protocol sampled `factor` times more finely over the same total
    /// time, by piecewise-linear interpolation of both grids.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidSchedule("refinement factor must be >= 1".into()));
        }
        let fac = T::from_usize_lossy(factor);
        let interp = |grid: &[T]| -> Vec<T> {
            let mut out = Vec::with_capacity(self.n_steps * factor + 1);
            for k in 0..self.n_steps {
                for s in 0..factor {
                    let w = T::from_usize_lossy(s) / fac;
                    out.push(grid[k] + (grid[k + 1] - grid[k]) * w);
                }
            }
            out.push(grid[self.n_steps]);
            out
        };
        Self::new(self.dt / fac, interp(&self.beta_grid), interp(&self.f_grid))
    }
}

/// Linear ramp `beta(t_k) = beta_final k / n`, `f(t_k) = k / n`.
pub fn make_linear_schedule<T: Real>(n_steps: usize, dt: T, beta_final: T) -> Result<AnnealSchedule<T>> {
    if n_steps == 0 {
        return Err(Error::InvalidSchedule("n_steps must be >= 1".into()));
    }
    if !(dt > T::zero()) {
        return Err(Error::InvalidSchedule(format!("dt must be positive, got {dt}")));
    }
    if !(beta_final > T::zero()) || !beta_final.is_finite() {
        return Err(Error::InvalidSchedule(format!(
            "beta_final must be positive, got {beta_final}"
        )));
    }
    let n = T::from_usize_lossy(n_steps);
    let beta_grid = (0..=n_steps)
        .map(|k| beta_final * T::from_usize_lossy(k) / n)
        .collect();
    let f_grid = (0..=n_steps).map(|k| T::from_usize_lossy(k) / n).collect();
    AnnealSchedule::new(dt, beta_grid, f_grid)
}

/// Exact equilibrium quantities at one inverse temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsReference<T: Real> {
    pub beta: T,
    pub log_z: T,
    pub probabilities: Vec<T>,
    /// Entries `sqrt(p_i)`, i.e. proportional to `exp(-beta E_i / 2)`.
    pub amplitude_state: QuantumState<T>,
}

impl<T: Real> GibbsReference<T> {
    pub fn probability_on(&self, indices: &[usize]) -> T {
        compensated_sum(indices.iter().map(|&i| self.probabilities[i]))
    }
}

pub fn gibbs_reference<T: Real>(cost: &CostDiagonal<T>, beta: T) -> GibbsReference<T> {
    let weights = cost.shifted_weights(beta);
    let total = compensated_sum(weights.iter().copied());
    let log_z = -beta * cost.min_energy() + total.ln();
    let probabilities: Vec<T> = weights.iter().map(|&w| w / total).collect();
    let amplitudes: Vec<T> = probabilities.iter().map(|p| p.sqrt()).collect();
    let amplitude_state = QuantumState::from_normalized(nalgebra::DVector::from_iterator(
        amplitudes.len(),
        amplitudes
            .iter()
            .map(|&a| num_complex::Complex::new(a, T::zero())),
    ));
    GibbsReference {
        beta,
        log_z,
        probabilities,
        amplitude_state,
    }
}
