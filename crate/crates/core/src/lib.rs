//! Geometric spectral inversion for `H = -Δ + v f(r)`.
//!
//! Given the ground-state energy curve `F(v)` of a central potential shape,
//! the crate solves the forward problem (eigensolver), moves between `F`,
//! the kinetic potential `f̄` and the K-function by Legendre-type transforms,
//! reconstructs `f` iteratively, and fits the exactly solvable
//! shifted-Coulomb and Hulthén models to binding-energy data.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix it to `f64`.

pub mod dataio;
pub mod eigensolver;
pub mod error;
pub mod interp;
pub mod inversion;
pub mod models;
pub mod optimize;
pub mod potentials;
pub mod scalar;
pub mod spectral;

pub use eigensolver::{energy_curve, solve_ground_state, solve_state, EigenProblem, EigenResult, SolverOptions};
pub use error::{Error, Result};
pub use inversion::{estimate_critical_coupling, invert, iterate_once, InversionConfig, InversionRun};

pub use models::{
    coulomb_ground_curve, coulomb_level, fit_coulomb, fit_coulomb_with, hulthen_equivalent, hulthen_level,
    CoulombModelParams, FitOptions, FitReport, HulthenModelParams,
};
pub use potentials::{PotentialShape, TabulatedShape};
pub use scalar::Real;
pub use spectral::{
    build_curve, energy_from_k, energy_from_kinetic_potential, k_function_from_curve, k_function_from_shape,
    kinetic_potential_from_curve, KFunction, KineticPotential, SpectralCurve,
};

pub type Shape = PotentialShape<f64>;
pub type Curve = SpectralCurve<f64>;
pub type KFun = KFunction<f64>;
pub type Kinetic = KineticPotential<f64>;
pub type CoulombParams = CoulombModelParams<f64>;
pub type HulthenParams = HulthenModelParams<f64>;
pub type Fit = FitReport<f64>;

pub type Config = InversionConfig<f64>;
pub type Run = InversionRun<f64>;
