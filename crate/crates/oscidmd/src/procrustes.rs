//! Closed-form solvers for the constrained least-squares problems
//! `min ||X2 - A X1||_F` over unitary and over Hermitian `A`.

use crate::linalg::{ensure_finite, full_left_svd, truncated_svd};
use crate::{C64, CMat, Error, Result, RANK_TOL};

/// Factored solution of the Hermitian-constrained problem: `A = U H U*`.
///
/// `u` is the left singular basis of X1 (full n×n, or n×r when truncated) and
/// `h` the matching Hermitian core. `sigma` keeps the singular values of X1
/// that participated in the fill.
#[derive(Debug, Clone)]
pub struct HermitianProcrustesSolution {
    u: CMat,
    h: CMat,
    sigma: Vec<f64>,
    full: bool,
}

impl HermitianProcrustesSolution {
    pub fn basis(&self) -> &CMat {
        &self.u
    }

    pub fn core(&self) -> &CMat {
        &self.h
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.sigma
    }

    /// Whether the solution carries the full n×n factors (tol = 0 path).
    pub fn is_full(&self) -> bool {
        self.full
    }

    pub fn rank(&self) -> usize {
        self.h.nrows()
    }
}

fn check_same_shape(x1: &CMat, x2: &CMat) -> Result<()> {
    if x1.nrows() != x2.nrows() || x1.ncols() != x2.ncols() {
        return Err(Error::invalid(format!(
            "data matrices must share a shape, got {}x{} and {}x{}",
            x1.nrows(),
            x1.ncols(),
            x2.nrows(),
            x2.ncols()
        )));
    }
    ensure_finite(x1, "X1")?;
    ensure_finite(x2, "X2")
}

/// Solve `min ||X2 - L X1||_F` over unitary `L` via the full SVD of `X2 X1*`.
///
/// When `X2 X1*` is rank deficient the minimizer is not unique; among the
/// minimizer family we return the one closest to the identity in Frobenius
/// norm (the null-space block acts as the aligned polar map), and log a
/// non-uniqueness warning.
pub fn solve_unitary(x1: &CMat, x2: &CMat) -> Result<CMat> {
    check_same_shape(x1, x2)?;
    let n = x1.nrows();
    let m = x2 * x1.adjoint();
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested V^*").adjoint();
    let sigma1 = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let rank = svd
        .singular_values
        .iter()
        .take_while(|&&s| s > RANK_TOL * sigma1 && s > 0.0)
        .count();
    if rank == n {
        return Ok(&u * v.adjoint());
    }
    log::warn!(
        "X2 X1* is rank deficient ({rank} of {n}); the unitary Procrustes solution is not unique, returning the identity-closest minimizer"
    );
    let u_r = u.columns(0, rank);
    let v_r = v.columns(0, rank);
    let u_c = u.columns(rank, n - rank);
    let v_c = v.columns(rank, n - rank);
    // Align the two null-space bases through the unitary polar factor of
    // U_c* V_c, which maximizes Re tr(L) over the minimizer family.
    let b = u_c.adjoint() * v_c;
    let bsvd = b.svd(true, true);
    let polar = bsvd.u.expect("U") * bsvd.v_t.expect("V^*");
    Ok(u_r * v_r.adjoint() + u_c * polar * v_c.adjoint())
}

/// Fill the Hermitian core from singular values and the projected data
/// `C = U* X2 V`; entries with `sigma_i^2 + sigma_j^2 = 0` are exactly zero
/// and the two triangles are mirrored from a single evaluation.
fn fill_hermitian_core(sigma: &[f64], c: &CMat) -> CMat {
    let n = sigma.len();
    let mut h = CMat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let den = sigma[i] * sigma[i] + sigma[j] * sigma[j];
            if den != 0.0 {
                let cij = if j < c.ncols() { c[(i, j)] } else { C64::new(0.0, 0.0) };
                let cji = if i < c.ncols() { c[(j, i)] } else { C64::new(0.0, 0.0) };
                let val = (cji.conj() * sigma[i] + cij * sigma[j]) / C64::new(den, 0.0);
                if i == j {
                    h[(i, i)] = C64::new(val.re, 0.0);
                } else {
                    h[(i, j)] = val;
                    h[(j, i)] = val.conj();
                }
            }
        }
    }
    h
}

/// Solve `min ||X2 - A X1||_F` over Hermitian `A`, factored as `A = U H U*`.
///
/// `tol = 0` computes the full n×n factors (X1's left basis completed to a
/// unitary, singular values below the roundoff rank threshold treated as
/// exact zeros). `tol > 0` truncates to the numerical rank
/// `r = max{i : sigma_i > tol * sigma_1}` and returns the n×r / r×r factors.
/// Requires m ≤ n.
pub fn solve_hermitian(x1: &CMat, x2: &CMat, tol: f64) -> Result<HermitianProcrustesSolution> {
    check_same_shape(x1, x2)?;
    if x1.ncols() > x1.nrows() {
        return Err(Error::invalid(format!(
            "the Hermitian solver requires m <= n, got {}x{}",
            x1.nrows(),
            x1.ncols()
        )));
    }
    if !(tol >= 0.0) {
        return Err(Error::invalid("tolerance must be nonnegative"));
    }
    if tol == 0.0 {
        let (u_full, sigma, v) = full_left_svd(x1)?;
        // C = [U* X2 V, 0], zero-padded beyond the m data columns.
        let c = u_full.adjoint() * x2 * v;
        let h = fill_hermitian_core(&sigma, &c);
        Ok(HermitianProcrustesSolution { u: u_full, h, sigma, full: true })
    } else {
        let svd = truncated_svd(x1, tol)?;
        let c = svd.u.adjoint() * x2 * &svd.v;
        let h = fill_hermitian_core(&svd.sigma, &c);
        Ok(HermitianProcrustesSolution { u: svd.u, h, sigma: svd.sigma, full: false })
    }
}

/// Assemble the explicit operator `A = U H U*` from an untruncated solution.
///
/// Truncated solutions are rejected: assembling a full operator from n×r
/// factors would silently change the minimizer.
pub fn assemble_full(sol: &HermitianProcrustesSolution) -> Result<CMat> {
    if !sol.full {
        return Err(Error::invalid(
            "cannot assemble a full operator from a truncated solution",
        ));
    }
    let a = &sol.u * &sol.h * sol.u.adjoint();
    // Symmetrize away the roundoff from the two matrix products.
    Ok((&a + a.adjoint()).scale(0.5))
}

#[cfg(test)]
pub(crate) fn solution_for_tests(u: CMat, h: CMat, sigma: Vec<f64>, full: bool) -> HermitianProcrustesSolution {
    HermitianProcrustesSolution { u, h, sigma, full }
}
