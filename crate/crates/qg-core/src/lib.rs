//! Pseudo-spectral simulation and spectral analysis of the 2D dissipative
//! quasi-geostrophic equation
//!
//! ```text
//!     theta_t + v . grad theta + kappa Lambda^gamma theta = 0,
//!     v = (-R_2 theta, R_1 theta),
//! ```
//!
//! on a periodic box, with `Lambda = (-Laplace)^(1/2)`, Riesz transforms
//! `R_l`, and `1 <= gamma <= 2`. The crate provides:
//!
//! - a de-aliased Fourier pseudo-spectral core (grids, fields, multipliers),
//! - a Littlewood-Paley frame with Besov and time-averaged Besov norms and
//!   paraproduct splitting,
//! - an integrating-factor RK4 time stepper, a mild-solution (Duhamel)
//!   fixed-point solver, and conservation monitors,
//! - exponential-weight (Gevrey-type) diagnostics: weighted transforms,
//!   the twisted product operator and its sign-split decomposition,
//!   analyticity-radius and decay-rate fits, weighted norm functionals,
//! - singular-kernel quadrature checks backing the analysis estimates,
//! - a binary snapshot/trajectory format.

pub mod error;
pub mod grid;
pub mod fft;
pub mod field;
pub mod params;
pub mod multiplier;
pub mod product;
pub mod norms;
pub mod lp;
pub mod dynamics;
pub mod picard;
pub mod gevrey;
pub mod radius;
pub mod kernels;
pub mod snapshot;
pub mod checks;

pub use error::{QgError, QgResult};
pub use field::SpectralField;
pub use grid::Grid2D;
pub use params::PhysicalParams;
