//! Structure-preserving dynamic mode decomposition for highly oscillatory
//! semiclassical Schrödinger dynamics.
//!
//! The crate has three layers:
//!
//! * data generation: a Strang-splitting Fourier pseudospectral solver for the
//!   linear and weakly nonlinear (Gross–Pitaevskii) equation on a periodic
//!   interval, plus WKB initial data ([`solver`]);
//! * model fitting and prediction: classical DMD, unitary-constrained DMD
//!   (piDMD), and two Hermitian-constrained variants built on Crank–Nicolson
//!   and semi-implicit time differencing, both with built-in model order
//!   reduction ([`dmd`], [`procrustes`], [`linalg`]);
//! * evaluation: error metrics, conservation tracking, noise injection, toy
//!   data generation, and a reference finite-difference operator
//!   ([`diagnostics`]).
//!
//! Snapshot matrices and fitted models round-trip through a compact binary
//! format ([`io`]).
//!
//! Column-parallel work (block prediction, metric evaluation, noise draws)
//! runs on rayon when the default `parallel` feature is enabled and falls back
//! to sequential loops otherwise; both paths produce bitwise-identical output.

pub mod diagnostics;
pub mod dmd;
mod error;
pub mod io;
pub mod linalg;
pub mod procrustes;
pub mod solver;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix (column-major).
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<C64>;

/// Relative singular-value threshold below which a matrix is treated as rank
/// deficient (least-squares truncation, Procrustes non-uniqueness detection,
/// roundoff cleaning of trailing singular values).
pub const RANK_TOL: f64 = 1e-12;

/// Default truncation tolerance for rank selection when none is supplied.
pub const DEFAULT_TOL: f64 = 1e-6;
