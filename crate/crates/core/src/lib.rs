//! Numerical laboratory for type I self-similar blow-up of the radial
//! Keller-Segel system in three dimensions.
//!
//! The density `u` is traded for the reduced mass `w`, whose self-similar
//! profiles `Phi_n` solve a stationary equation in five dimensions. Around
//! each profile the crate computes the spectrum of the linearized operator
//! in the weighted space `L^2(rho)`, and evolves perturbations in
//! renormalized variables with modulation of the scaling parameter.

pub mod error;
pub mod field;
pub mod flow;
pub mod grid;
pub mod io;
pub mod measure;
pub mod ode;
pub mod ops;
pub mod profiles;
pub mod spectrum;
mod stencil;
pub mod transforms;

pub use error::{Error, Result};
pub use field::{Parity, RadialField};
pub use grid::{make_grid, RadialGrid};
pub use measure::{inner_product, norm, norm_h1, WeightedMeasure, SPHERE_AREA_5D};
pub use ops::{lambda_op, lambda_prime_op, laplacian_radial};
pub use profiles::{
    build_measure, find_profile, phi0_exact, shoot_profile, stationary_residual, tail_fit, Profile, ProfileSettings,
    ShootClass, ShootParams,
};
pub use spectrum::{assemble, eigen_solve, eigen_solve_refined, DiscreteOperator, EigenPair, SpectrumReport};
pub use stencil::fornberg;
pub use transforms::{density_from_mass, partial_mass};
pub use flow::{blowup_extract, evolve, BlowupReport, FlowContext, FlowParams, FlowRun, ModulationState};
