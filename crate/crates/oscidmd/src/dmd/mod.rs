//! Fitting and prediction for the four DMD variants: classical DMD, the
//! unitary-constrained variant (piDMD), and the two Hermitian-constrained
//! schemes built on Crank–Nicolson and semi-implicit time differencing.

mod classical;
mod structured;

pub use classical::{
    fit_classical, fit_pidmd, predict_classical, predict_pidmd, predict_pidmd_trajectory,
    ClassicalDmdModel, UnitaryModel,
};
pub use structured::{
    discretized_energy, fit_structured, predict_block, predict_block_serial, predict_structured,
    ReducedHermitianModel,
};

use crate::solver::SnapshotMatrix;
use crate::{C64, CMat, Error, Result};

/// Time-differencing scheme behind a reduced Hermitian model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Forward difference on midpoints: one-step Cayley factors.
    Cn,
    /// Central difference: two-step Cayley factors with even/odd streams.
    Si,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::Cn => write!(f, "cn"),
            Scheme::Si => write!(f, "si"),
        }
    }
}

/// Plain shift pair `X1 = [x_0..x_{m-1}]`, `X2 = [x_1..x_m]`.
pub(crate) fn shift_pair(x: &SnapshotMatrix) -> Result<(CMat, CMat)> {
    let cols = x.num_snapshots();
    if cols < 2 {
        return Err(Error::invalid("need at least 2 snapshots"));
    }
    let x1 = x.data.columns(0, cols - 1).into_owned();
    let x2 = x.data.columns(1, cols - 1).into_owned();
    Ok((x1, x2))
}

/// Crank–Nicolson data pair: `X1` holds the midpoints `(x_k + x_{k+1})/2`,
/// `X2` the scaled forward differences `i (x_{k+1} - x_k)/tau`.
pub fn build_cn_matrices(x: &SnapshotMatrix) -> Result<(CMat, CMat)> {
    let cols = x.num_snapshots();
    if cols < 2 {
        return Err(Error::invalid("Crank-Nicolson pair needs at least 2 snapshots"));
    }
    let n = x.dim();
    let m = cols - 1;
    let mut x1 = CMat::zeros(n, m);
    let mut x2 = CMat::zeros(n, m);
    let half = C64::new(0.5, 0.0);
    let idiff = C64::new(0.0, 1.0 / x.tau);
    for k in 0..m {
        let a = x.data.column(k);
        let b = x.data.column(k + 1);
        x1.set_column(k, &((a + b) * half));
        x2.set_column(k, &((b - a) * idiff));
    }
    Ok((x1, x2))
}

/// Semi-implicit data pair over the interior snapshots: `X1` holds
/// `(x_{k+1} + x_{k-1})/2`, `X2` holds `i (x_{k+1} - x_{k-1})/(2 tau)` for
/// `k = 1..m-1`.
pub fn build_si_matrices(x: &SnapshotMatrix) -> Result<(CMat, CMat)> {
    let cols = x.num_snapshots();
    if cols < 3 {
        return Err(Error::invalid("semi-implicit pair needs at least 3 snapshots"));
    }
    let n = x.dim();
    let m = cols - 2;
    let mut x1 = CMat::zeros(n, m);
    let mut x2 = CMat::zeros(n, m);
    let half = C64::new(0.5, 0.0);
    let idiff = C64::new(0.0, 1.0 / (2.0 * x.tau));
    for k in 1..=m {
        let prev = x.data.column(k - 1);
        let next = x.data.column(k + 1);
        x1.set_column(k - 1, &((next + prev) * half));
        x2.set_column(k - 1, &((next - prev) * idiff));
    }
    Ok((x1, x2))
}

/// Cayley spectral factors of real eigenvalues: one-step
/// `(1 - i tau lambda/2)/(1 + i tau lambda/2)` for the Crank–Nicolson scheme,
/// two-step `(1 - i tau lambda)/(1 + i tau lambda)` for the semi-implicit
/// scheme. All factors have unit modulus.
pub fn spectral_factors(lambda: &[f64], tau: f64, scheme: Scheme) -> Vec<C64> {
    let c = match scheme {
        Scheme::Cn => tau / 2.0,
        Scheme::Si => tau,
    };
    lambda
        .iter()
        .map(|&l| {
            let num = C64::new(1.0, -c * l);
            let den = C64::new(1.0, c * l);
            num / den
        })
        .collect()
}

/// Elementwise `d^k` computed as `exp(k log d)` with the principal logarithm;
/// a zero entry powers to 0 (or 1 when k = 0). Ties on the negative real axis
/// resolve to the +pi branch.
///
/// Entries within 1e-12 of the unit circle (the documented precondition for
/// spectral factors) take a purely imaginary logarithm, so their powers stay
/// on the circle for any k instead of drifting by k roundoff units; entries
/// away from the circle (classical DMD spectra) use the general path.
pub fn stable_power(d: &[C64], k: u64) -> Vec<C64> {
    let kf = k as f64;
    d.iter()
        .map(|&z| {
            if z == C64::new(0.0, 0.0) {
                return if k == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            }
            // Normalize -0.0 so arguments on the negative real axis map to +pi.
            let z = C64::new(z.re, if z.im == 0.0 { 0.0 } else { z.im });
            if (z.norm() - 1.0).abs() <= 1e-12 {
                C64::from_polar(1.0, kf * z.arg())
            } else {
                (z.ln() * kf).exp()
            }
        })
        .collect()
}

/// Stack `depth` consecutive snapshots into each column: column j becomes
/// `[x_j; x_{j+1}; ...; x_{j+depth-1}]`, giving `m + 2 - depth` columns of
/// dimension `depth * n`. The trailing n-block of an embedded prediction is
/// the physical state.
pub fn delay_embed(x: &SnapshotMatrix, depth: usize) -> Result<SnapshotMatrix> {
    let cols = x.num_snapshots();
    let m = cols - 1;
    if depth < 1 {
        return Err(Error::invalid("embedding depth must be at least 1"));
    }
    if depth > m {
        return Err(Error::invalid(format!(
            "embedding depth {depth} exceeds the usable snapshot count {m}"
        )));
    }
    if depth == 1 {
        return Ok(x.clone());
    }
    let n = x.dim();
    let out_cols = cols + 1 - depth;
    let mut data = CMat::zeros(depth * n, out_cols);
    for j in 0..out_cols {
        for q in 0..depth {
            data.view_mut((q * n, j), (n, 1)).copy_from(&x.data.column(j + q));
        }
    }
    let grid = crate::solver::SpatialGrid::new(x.grid.a(), x.grid.b(), depth * n)?;
    SnapshotMatrix::new(data, x.tau, grid, x.eps)
}
