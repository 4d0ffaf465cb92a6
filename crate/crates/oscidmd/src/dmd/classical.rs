//! Classical DMD and the unitary-constrained variant.

use super::{shift_pair, stable_power};
use crate::linalg::{complex_eig, ensure_finite_vec, least_squares_apply, truncated_svd};
use crate::procrustes::solve_unitary;
use crate::solver::SnapshotMatrix;
use crate::{C64, CMat, CVec, Error, Result};

/// Classical DMD model: modes, discrete eigenvalues, amplitudes, and the
/// continuous frequencies `omega_l = -i ln(lambda_l)/tau`.
#[derive(Debug, Clone)]
pub struct ClassicalDmdModel {
    pub modes: CMat,
    pub lambda: Vec<C64>,
    pub amplitudes: CVec,
    pub tau: f64,
    pub omega: Vec<C64>,
}

impl ClassicalDmdModel {
    pub fn rank(&self) -> usize {
        self.lambda.len()
    }

    pub fn dim(&self) -> usize {
        self.modes.nrows()
    }
}

/// Unitary evolution model fitted by the constrained Procrustes problem. The
/// full n×n operator is stored and applied directly.
#[derive(Debug, Clone)]
pub struct UnitaryModel {
    pub evolution: CMat,
}

impl UnitaryModel {
    pub fn dim(&self) -> usize {
        self.evolution.nrows()
    }
}

/// Fit classical DMD: truncated SVD of the shifted data, eigendecomposition
/// of the projected one-step operator, modes lifted through the data, and
/// amplitudes from the projection of the first snapshot.
pub fn fit_classical(x: &SnapshotMatrix, tol: f64) -> Result<ClassicalDmdModel> {
    let (x1, x2) = shift_pair(x)?;
    let svd = truncated_svd(&x1, tol)?;
    let r = svd.rank();
    if r == 0 {
        return Err(Error::DegenerateData(
            "snapshot matrix has numerical rank 0; classical DMD is undefined".into(),
        ));
    }
    // B = X2 V Sigma^{-1}; projected operator Ltilde = U* B.
    let mut v_scaled = svd.v.clone();
    for (j, &s) in svd.sigma.iter().enumerate() {
        let inv = C64::new(1.0 / s, 0.0);
        v_scaled.column_mut(j).scale_mut(inv.re);
    }
    let b_lift = &x2 * v_scaled;
    let l_proj = svd.u.adjoint() * &b_lift;
    let (w, mut lambda) = complex_eig(&l_proj)?;
    let mut modes = &b_lift * &w;

    // Deterministic ordering: descending modulus, then ascending phase.
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| {
        let (mi, mj) = (lambda[i].norm(), lambda[j].norm());
        mj.partial_cmp(&mi)
            .unwrap()
            .then(lambda[i].arg().partial_cmp(&lambda[j].arg()).unwrap())
    });
    let mut sorted_modes = CMat::zeros(modes.nrows(), r);
    let mut sorted_lambda = Vec::with_capacity(r);
    for (dst, &src) in order.iter().enumerate() {
        sorted_modes.set_column(dst, &modes.column(src));
        sorted_lambda.push(lambda[src]);
    }
    modes = sorted_modes;
    lambda = sorted_lambda;

    let amplitudes = least_squares_apply(&modes, &x.state(0))?;
    let omega = lambda
        .iter()
        .map(|&l| {
            if l == C64::new(0.0, 0.0) {
                log::warn!("zero DMD eigenvalue: the continuous frequency is undefined");
                C64::new(f64::NAN, f64::NAN)
            } else {
                let l = C64::new(l.re, if l.im == 0.0 { 0.0 } else { l.im });
                l.ln() * C64::new(0.0, -1.0 / x.tau)
            }
        })
        .collect();
    Ok(ClassicalDmdModel { modes, lambda, amplitudes, tau: x.tau, omega })
}

/// Predict `x_k ≈ Phi Lambda^k b`, powers taken through the principal
/// logarithm.
pub fn predict_classical(model: &ClassicalDmdModel, k: u64) -> CVec {
    let powers = stable_power(&model.lambda, k);
    let mut scaled = model.amplitudes.clone();
    for (c, p) in scaled.iter_mut().zip(&powers) {
        *c *= p;
    }
    &model.modes * scaled
}

/// Fit the unitary-constrained model on the shifted data pair.
pub fn fit_pidmd(x: &SnapshotMatrix) -> Result<UnitaryModel> {
    let (x1, x2) = shift_pair(x)?;
    Ok(UnitaryModel { evolution: solve_unitary(&x1, &x2)? })
}

/// Predict `L^k x0` by repeated multiplication with the stored full operator
/// (cost O(n^2 k); no eigendecomposition).
pub fn predict_pidmd(model: &UnitaryModel, x0: &CVec, k: u64) -> Result<CVec> {
    ensure_finite_vec(x0, "initial state")?;
    if x0.len() != model.dim() {
        return Err(Error::invalid(format!(
            "state length {} does not match the operator ({})",
            x0.len(),
            model.dim()
        )));
    }
    let mut state = x0.clone();
    for _ in 0..k {
        state = &model.evolution * state;
    }
    Ok(state)
}

/// Predict indices `1..=steps` in one sweep of repeated multiplications
/// (cost O(n^2 steps) total), column k holding `L^k x0`.
pub fn predict_pidmd_trajectory(model: &UnitaryModel, x0: &CVec, steps: usize) -> Result<CMat> {
    ensure_finite_vec(x0, "initial state")?;
    if x0.len() != model.dim() {
        return Err(Error::invalid(format!(
            "state length {} does not match the operator ({})",
            x0.len(),
            model.dim()
        )));
    }
    let mut out = CMat::zeros(model.dim(), steps);
    let mut state = x0.clone();
    for k in 0..steps {
        state = &model.evolution * state;
        out.set_column(k, &state);
    }
    Ok(out)
}
