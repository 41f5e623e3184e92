//! Spatial active noise control over a continuous region by kernel
//! interpolation of the sound field, with two adaptive control algorithms
//! that suppress the acoustic power radiated outside the source array.
//!
//! The crate is organized bottom-up:
//!
//! * [`special`] / [`linalg`] — Bessel functions and the small dense complex
//!   Hermitian kernels (solve, eigenvalues, spectral norm) everything else
//!   is built on.
//! * [`acoustics`] — free-field point-source propagation, scene geometry,
//!   and the regional power-reduction metric.
//! * [`kernel_interp`] — kernel ridge regression of the interior field and
//!   the interior-energy matrix obtained by quadrature.
//! * [`radiation`] — the exterior radiation power operator, its conditioning
//!   safeguard, and the Wiener reference used to calibrate radiation budgets.
//! * [`adaptive`] — the three frequency-domain NLMS controllers and the
//!   simulation loop.
//! * [`harness`] — the experiment scenarios (convergence, lambda sweep,
//!   frequency sweep, moving source).
//! * [`config`] / [`report`] / [`svg`] — run configuration, CSV/JSON trace
//!   emission, and native SVG plotting for the CLI front end.

pub mod acoustics;
pub mod adaptive;
pub mod config;
pub mod error;
pub mod harness;
pub mod kernel_interp;
pub mod linalg;
pub mod radiation;
pub mod report;
pub mod special;
pub mod svg;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
