//! Hermitian-constrained DMD with built-in model order reduction.
//!
//! Both schemes learn a Hermitian approximation of the generator from an
//! augmented data pair, keep only its action on the dominant left singular
//! subspace of the data, and advance states through unit-modulus Cayley
//! factors of the real eigenvalues; the orthogonal complement of the reduced
//! basis is carried along unchanged.

use super::{build_cn_matrices, build_si_matrices, spectral_factors, stable_power, Scheme};
use crate::linalg::{ensure_finite_vec, hermitian_eig, truncated_svd};
use crate::solver::SnapshotMatrix;
use crate::{C64, CMat, CVec, Error, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Reduced Hermitian generator model: orthonormal basis `U`, real eigenvalues
/// of the reduced core, and the unit-modulus spectral factors that advance
/// each reduced mode (one step for the Crank–Nicolson scheme, two steps for
/// the semi-implicit scheme).
#[derive(Debug, Clone)]
pub struct ReducedHermitianModel {
    pub basis: CMat,
    pub lambda: Vec<f64>,
    pub factors: Vec<C64>,
    pub tau: f64,
    pub scheme: Scheme,
}

impl ReducedHermitianModel {
    pub fn rank(&self) -> usize {
        self.lambda.len()
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Apply the learned generator: `A x = U diag(lambda) U* x`.
    pub fn apply_operator(&self, x: &CVec) -> CVec {
        let mut z = self.basis.adjoint() * x;
        for (c, &l) in z.iter_mut().zip(&self.lambda) {
            *c *= l;
        }
        &self.basis * z
    }
}

fn check_state(model: &ReducedHermitianModel, x: &CVec, what: &str) -> Result<()> {
    ensure_finite_vec(x, what)?;
    if x.len() != model.dim() {
        return Err(Error::invalid(format!(
            "{what} length {} does not match the model dimension {}",
            x.len(),
            model.dim()
        )));
    }
    Ok(())
}

/// Fit a reduced Hermitian model.
///
/// Builds the scheme's data pair, truncates the SVD of `X1` at `tol`, fills
/// the reduced Hermitian core entrywise, eigendecomposes it, and lifts the
/// eigenvectors back to the full space. Rank-0 data yields an empty model
/// whose predictions reduce to the identity map.
pub fn fit_structured(x: &SnapshotMatrix, scheme: Scheme, tol: f64) -> Result<ReducedHermitianModel> {
    let (x1, x2) = match scheme {
        Scheme::Cn => build_cn_matrices(x)?,
        Scheme::Si => build_si_matrices(x)?,
    };
    let svd = truncated_svd(&x1, tol)?;
    let r = svd.rank();
    if r == 0 {
        return Ok(ReducedHermitianModel {
            basis: CMat::zeros(x.dim(), 0),
            lambda: vec![],
            factors: vec![],
            tau: x.tau,
            scheme,
        });
    }
    // Reduced core from the entrywise Hermitian fill restricted to the
    // leading r×r block; all retained sigmas are positive.
    let c = svd.u.adjoint() * &x2 * &svd.v;
    let mut core = CMat::zeros(r, r);
    for i in 0..r {
        for j in i..r {
            let den = svd.sigma[i] * svd.sigma[i] + svd.sigma[j] * svd.sigma[j];
            let val = (c[(j, i)].conj() * svd.sigma[i] + c[(i, j)] * svd.sigma[j]) / C64::new(den, 0.0);
            if i == j {
                core[(i, i)] = C64::new(val.re, 0.0);
            } else {
                core[(i, j)] = val;
                core[(j, i)] = val.conj();
            }
        }
    }
    let eig = hermitian_eig(&core)?;
    let basis = &svd.u * &eig.vectors;
    let factors = spectral_factors(&eig.values, x.tau, scheme);
    Ok(ReducedHermitianModel { basis, lambda: eig.values, factors, tau: x.tau, scheme })
}

/// Reduced coordinates of the anchor state for a target index, along with the
/// number of factor applications. CN advances from `x0` with `d^N`; SI splits
/// into even steps (`x0`, `d^{N/2}`) and odd steps (`x1`, `d^{(N-1)/2}`).
fn anchor_and_power<'a>(
    model: &ReducedHermitianModel,
    x0: &'a CVec,
    x1: Option<&'a CVec>,
    target: u64,
) -> Result<(&'a CVec, u64)> {
    match model.scheme {
        Scheme::Cn => Ok((x0, target)),
        Scheme::Si => {
            if target % 2 == 0 {
                Ok((x0, target / 2))
            } else {
                let x1 = x1.ok_or_else(|| {
                    Error::invalid("semi-implicit prediction at an odd index needs the second initial state")
                })?;
                Ok((x1, (target - 1) / 2))
            }
        }
    }
}

/// Predict the state at index `target`.
///
/// Computed as `x_anchor + U ((d^p - 1) ⊙ U* x_anchor)`, which is the reduced
/// spectral update plus the untouched complement; `target = 0` returns `x0`
/// exactly.
pub fn predict_structured(
    model: &ReducedHermitianModel,
    x0: &CVec,
    x1: Option<&CVec>,
    target: u64,
) -> Result<CVec> {
    check_state(model, x0, "initial state")?;
    if let Some(x1) = x1 {
        check_state(model, x1, "second initial state")?;
    }
    let (anchor, power) = anchor_and_power(model, x0, x1, target)?;
    let z = model.basis.adjoint() * anchor;
    let d_pow = stable_power(&model.factors, power);
    let mut delta = z;
    for (c, p) in delta.iter_mut().zip(&d_pow) {
        *c *= p - C64::new(1.0, 0.0);
    }
    Ok(anchor + &model.basis * delta)
}

fn block_columns(
    model: &ReducedHermitianModel,
    x0: &CVec,
    x1: Option<&CVec>,
    steps: usize,
) -> Result<(CMat, Vec<(usize, u64)>, CVec, Option<CVec>)> {
    check_state(model, x0, "initial state")?;
    if let Some(x1) = x1 {
        check_state(model, x1, "second initial state")?;
    }
    if model.scheme == Scheme::Si && steps >= 1 && x1.is_none() {
        return Err(Error::invalid(
            "semi-implicit block prediction needs the second initial state",
        ));
    }
    // Reduced coordinates and complements are computed once per anchor.
    let z0 = model.basis.adjoint() * x0;
    let comp0 = x0 - &model.basis * &z0;
    let (z1, comp1) = match x1 {
        Some(x1) => {
            let z1 = model.basis.adjoint() * x1;
            let comp1 = x1 - &model.basis * &z1;
            (Some(z1), Some(comp1))
        }
        None => (None, None),
    };
    let r = model.rank();
    let mut reduced = CMat::zeros(r, steps);
    let mut anchors = Vec::with_capacity(steps);
    for k in 1..=steps {
        let target = k as u64;
        let (is_odd, power) = match model.scheme {
            Scheme::Cn => (false, target),
            Scheme::Si => {
                if target % 2 == 0 {
                    (false, target / 2)
                } else {
                    (true, (target - 1) / 2)
                }
            }
        };
        let z = if is_odd { z1.as_ref().unwrap() } else { &z0 };
        let d_pow = stable_power(&model.factors, power);
        for i in 0..r {
            reduced[(i, k - 1)] = d_pow[i] * z[i];
        }
        anchors.push((k - 1, if is_odd { 1 } else { 0 }));
    }
    let _ = anchors;
    let lifted = &model.basis * reduced;
    let tags: Vec<(usize, u64)> = (1..=steps)
        .map(|k| {
            let odd = model.scheme == Scheme::Si && k % 2 == 1;
            (k - 1, odd as u64)
        })
        .collect();
    Ok((lifted, tags, comp0, comp1))
}

/// Predict indices `1..=steps` as the columns of an n×steps matrix: the
/// reduced states are stacked, lifted by one matrix product, and the constant
/// complement column is added to each prediction. Column arithmetic is
/// independent per step, so the parallel and serial paths agree bitwise.
pub fn predict_block(
    model: &ReducedHermitianModel,
    x0: &CVec,
    x1: Option<&CVec>,
    steps: usize,
) -> Result<CMat> {
    let (mut lifted, tags, comp0, comp1) = block_columns(model, x0, x1, steps)?;
    let n = model.dim();
    let add_complement = |(col, odd): &(usize, u64), slice: &mut [C64]| {
        let comp = if *odd == 1 { comp1.as_ref().unwrap() } else { &comp0 };
        let _ = col;
        for (z, c) in slice.iter_mut().zip(comp.iter()) {
            *z += c;
        }
    };
    #[cfg(feature = "parallel")]
    {
        lifted
            .as_mut_slice()
            .par_chunks_mut(n)
            .zip(tags.par_iter())
            .for_each(|(slice, tag)| add_complement(tag, slice));
    }
    #[cfg(not(feature = "parallel"))]
    {
        lifted
            .as_mut_slice()
            .chunks_mut(n)
            .zip(tags.iter())
            .for_each(|(slice, tag)| add_complement(tag, slice));
    }
    Ok(lifted)
}

/// Sequential reference for [`predict_block`]; the parallel path must match
/// it bitwise.
pub fn predict_block_serial(
    model: &ReducedHermitianModel,
    x0: &CVec,
    x1: Option<&CVec>,
    steps: usize,
) -> Result<CMat> {
    let (mut lifted, tags, comp0, comp1) = block_columns(model, x0, x1, steps)?;
    let n = model.dim();
    for ((_, odd), slice) in tags.iter().zip(lifted.as_mut_slice().chunks_mut(n)) {
        let comp = if *odd == 1 { comp1.as_ref().unwrap() } else { &comp0 };
        for (z, c) in slice.iter_mut().zip(comp.iter()) {
            *z += c;
        }
    }
    Ok(lifted)
}

/// Quadratic energy `E(x) = x* A x` of the learned generator, evaluated in
/// reduced coordinates as `sum lambda_j |(U* x)_j|^2` (the complement block of
/// the spectrum is zero).
pub fn discretized_energy(model: &ReducedHermitianModel, x: &CVec) -> f64 {
    let z = model.basis.adjoint() * x;
    z.iter().zip(&model.lambda).map(|(c, &l)| l * c.norm_sqr()).sum()
}
