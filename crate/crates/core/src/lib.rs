//! Pathwise simulation and random-dynamics analysis of the stochastic
//! Hindmarsh-Rose reaction-diffusion system with additive noise
//!
//! ```text
//! du = d1 Δu dt + (a u² − b u³ + v − z + J) dt + h1(x) dW1
//! dv = d2 Δv dt + (α − β u² − v) dt            + h2(x) dW2
//! dz = d3 Δz dt + (q (u − c) − r z) dt         + h3(x) dW3
//! ```
//!
//! on a rectangle with homogeneous Neumann boundary conditions. The noise is
//! removed by subtracting stationary Ornstein-Uhlenbeck processes lifted by
//! the profiles `h_i`, which leaves a random PDE that is integrated pathwise.
//! On top of the solver sit the cocycle, energy diagnostics, absorbing-radius
//! estimates and pullback attractor experiments.

pub mod attractor;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod io;
pub mod model;
pub mod noise;
pub mod solver;

pub use attractor::{
    attractor_estimate, hausdorff_semidistance, pullback_cloud, AttractorEstimate, CloudSpec,
    HorizonResult, PullbackReport, PullbackSpec,
};
pub use diagnostics::{
    absorbing_radius, compute_constants, energy_series, h1_report, AbsorbingRadii, ConstantsBundle,
    EnergyReport, H1Report,
};
pub use error::{Error, Result};
pub use grid::{Grid, GridSpec, NoiseProfile, ScalarField};
pub use model::{Params, ProfileSet, Role, StateTriple};
pub use noise::{ou_from_wiener, sample_wiener, OuPath, TimeGrid, WienerPath};
pub use solver::{integrate, Cocycle, SolveSpec, Stepper, Trajectory};
