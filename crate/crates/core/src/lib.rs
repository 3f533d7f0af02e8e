//! Simulator for quantum Jarzynski annealing.
//!
//! The crate is organized bottom-up:
//!
//! * [`model`]: diagonal cost Hamiltonians, annealing schedules, exact Gibbs
//!   references;
//! * [`dynamics`]: heat-bath master equations, trajectory sampling and the
//!   Jarzynski equality (Monte Carlo and exact transfer product);
//! * [`mapping`]: the classical-quantum mapping and its spectral certificate;
//! * [`engines`]: ordinary quantum annealing and quantum Jarzynski annealing;
//! * [`experiment`]: configuration-driven runs writing CSV artifacts.
//!
//! Everything numeric is generic over [`Real`]; the `*64` aliases below fix
//! the scalar to `f64`, which is what the tolerances in the docs refer to.

pub mod dynamics;
pub mod engines;
pub mod error;
pub mod experiment;
pub mod instance;
pub mod mapping;
pub mod model;
pub mod report;
pub mod scalar;
pub mod spectral;
pub mod state;
pub mod util;

pub use dynamics::{
    build_heatbath_generator, jarzynski_estimate, jarzynski_exact, jarzynski_exact_with,
    sample_trajectory, verify_detailed_balance, HeatBath, JeResult, RateGenerator, Topology,
    Trajectory, TransitionFactor,
};
pub use engines::{
    measure, run_qa, run_qja, run_qja_no_unitary, run_qja_with, unitary_step, work_operator_step,
    DriverHamiltonian, DriverKind, QjaOptions, RunReport, StepOrder, StepRecord,
};
pub use error::{Error, Result};
pub use mapping::{
    gap_profile, map_to_quantum, spectral_certificate, Convention, GapPoint, GapProfile,
    MappedHamiltonian, SpectralCertificate,
};
pub use model::{
    build_random_potential, gibbs_reference, ising_to_diagonal, make_linear_schedule,
    AnnealSchedule, CostDiagonal, CostOrigin, GibbsReference, IsingInstance,
    PotentialDistribution,
};
pub use scalar::Real;
pub use state::QuantumState;

pub type CostDiagonal64 = model::CostDiagonal<f64>;
pub type IsingInstance64 = model::IsingInstance<f64>;
pub type AnnealSchedule64 = model::AnnealSchedule<f64>;
pub type GibbsReference64 = model::GibbsReference<f64>;
pub type QuantumState64 = state::QuantumState<f64>;
pub type RateGenerator64 = dynamics::RateGenerator<f64>;
pub type HeatBath64 = dynamics::HeatBath<f64>;
pub type Trajectory64 = dynamics::Trajectory<f64>;
pub type JeResult64 = dynamics::JeResult<f64>;
pub type MappedHamiltonian64 = mapping::MappedHamiltonian<f64>;
pub type SpectralCertificate64 = mapping::SpectralCertificate<f64>;
pub type GapProfile64 = mapping::GapProfile<f64>;
pub type DriverHamiltonian64 = engines::DriverHamiltonian<f64>;
pub type RunReport64 = engines::RunReport<f64>;
