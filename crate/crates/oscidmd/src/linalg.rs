//! Dense complex linear-algebra kernels with fixed truncation and ordering
//! semantics.
//!
//! Every factorization here is a thin wrapper around nalgebra's dense solvers
//! plus the exact contracts the fitting code relies on: singular values sorted
//! non-increasing with rank cut at `tol * sigma_1`, Hermitian eigenvalues real
//! and sorted descending, minimal-norm least squares with rank truncation at
//! [`RANK_TOL`](crate::RANK_TOL).

use crate::{C64, CMat, CVec, Error, Result, RANK_TOL};

/// Rank-truncated singular value decomposition `M ≈ U Σ V*`.
///
/// `u` is n×r and `v` is m×r, both with orthonormal columns; `sigma` holds the
/// r retained singular values in non-increasing order, all strictly greater
/// than `tol * sigma[0]`.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    pub u: CMat,
    pub sigma: Vec<f64>,
    pub v: CMat,
    pub tol: f64,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }
}

/// Eigendecomposition `H = W Λ W*` of a Hermitian matrix, eigenvalues real and
/// sorted descending.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub vectors: CMat,
    pub values: Vec<f64>,
}

pub(crate) fn ensure_finite(m: &CMat, what: &str) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} contains non-finite entries")))
    }
}

pub(crate) fn ensure_finite_vec(v: &CVec, what: &str) -> Result<()> {
    if v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} contains non-finite entries")))
    }
}

/// Compute the leading singular triplets of `m`, keeping every singular value
/// strictly greater than `tol * sigma_1`.
///
/// A zero matrix yields rank 0; `tol = 0` keeps every positive singular value
/// (the economy SVD of the numerical rank).
pub fn truncated_svd(m: &CMat, tol: f64) -> Result<TruncatedSvd> {
    ensure_finite(m, "SVD input")?;
    if !(tol >= 0.0) {
        return Err(Error::invalid("SVD tolerance must be nonnegative"));
    }
    let svd = m.clone().svd(true, true);
    let sigma_all = &svd.singular_values;
    let sigma1 = sigma_all.iter().cloned().fold(0.0_f64, f64::max);
    let rank = sigma_all.iter().take_while(|&&s| s > tol * sigma1 && s > 0.0).count();
    let u_full = svd.u.expect("requested U");
    let vt_full = svd.v_t.expect("requested V^*");
    let u = u_full.columns(0, rank).into_owned();
    let v = vt_full.rows(0, rank).adjoint();
    let sigma = sigma_all.iter().take(rank).cloned().collect();
    Ok(TruncatedSvd { u, sigma, v, tol })
}

/// Economy SVD plus completion of the left factor to a full n×n unitary.
///
/// Returns `(u_full, sigma_padded, v)` with `sigma_padded` of length n (zeros
/// beyond min(n, m)) and `v` the full m×m right factor. Requires m ≤ n.
/// Singular values at or below `RANK_TOL * sigma_1` are replaced by exact
/// zeros so that downstream exact-zero tests reflect the numerical rank.
pub(crate) fn full_left_svd(m: &CMat) -> Result<(CMat, Vec<f64>, CMat)> {
    let (n, cols) = (m.nrows(), m.ncols());
    if cols > n {
        return Err(Error::invalid(format!(
            "full SVD path requires m <= n, got {n}x{cols}"
        )));
    }
    let svd = m.clone().svd(true, true);
    let u_thin = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested V^*").adjoint();
    let mut sigma = vec![0.0_f64; n];
    let sigma1 = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        sigma[i] = if s > RANK_TOL * sigma1 { s } else { 0.0 };
    }
    let u_full = complete_basis(&u_thin);
    Ok((u_full, sigma, v))
}

/// Extend a matrix with orthonormal columns to a full n×n unitary by QR of
/// `[U | I]`; the first k columns are kept as given.
pub(crate) fn complete_basis(u: &CMat) -> CMat {
    let (n, k) = (u.nrows(), u.ncols());
    if k == n {
        return u.clone();
    }
    let mut aug = CMat::zeros(n, k + n);
    aug.view_mut((0, 0), (n, k)).copy_from(u);
    for i in 0..n {
        aug[(i, k + i)] = C64::new(1.0, 0.0);
    }
    let q = aug.qr().q();
    let mut full = CMat::zeros(n, n);
    full.view_mut((0, 0), (n, k)).copy_from(u);
    full.view_mut((0, k), (n, n - k))
        .copy_from(&q.view((0, k), (n, n - k)));
    full
}

/// Eigendecomposition of a Hermitian matrix.
///
/// The input is symmetrized as `(H + H*)/2` before factorization, which makes
/// roundoff-level asymmetry harmless; inputs whose asymmetry exceeds
/// `1e-10 * ||H||_F` are rejected. Eigenvalues come back real, sorted
/// descending, with the eigenvector columns permuted to match. A zero matrix
/// returns the identity as its eigenvector matrix.
pub fn hermitian_eig(h: &CMat) -> Result<HermitianEig> {
    ensure_finite(h, "eigendecomposition input")?;
    let n = h.nrows();
    if n != h.ncols() {
        return Err(Error::invalid(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            n,
            h.ncols()
        )));
    }
    let norm = h.norm();
    let asym = (h - h.adjoint()).norm();
    if asym > 1e-10 * norm {
        return Err(Error::invalid(format!(
            "matrix is not Hermitian: ||H - H*|| = {asym:.3e} vs ||H|| = {norm:.3e}"
        )));
    }
    if n == 0 {
        return Ok(HermitianEig { vectors: CMat::zeros(0, 0), values: vec![] });
    }
    if norm == 0.0 {
        return Ok(HermitianEig { vectors: CMat::identity(n, n), values: vec![0.0; n] });
    }
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let mut vectors = CMat::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
        values.push(eig.eigenvalues[src]);
    }
    Ok(HermitianEig { vectors, values })
}

/// Minimal-norm least-squares solve `b = Phi^† y`.
///
/// Singular values at or below `RANK_TOL * sigma_1` are truncated; when that
/// happens the input was rank deficient and a warning is logged.
pub fn least_squares_apply(phi: &CMat, y: &CVec) -> Result<CVec> {
    ensure_finite(phi, "least-squares matrix")?;
    ensure_finite_vec(y, "least-squares right-hand side")?;
    if phi.nrows() != y.len() {
        return Err(Error::invalid(format!(
            "least-squares shape mismatch: {}x{} vs length {}",
            phi.nrows(),
            phi.ncols(),
            y.len()
        )));
    }
    let svd = phi.clone().svd(true, true);
    let sigma1 = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let rank = svd
        .singular_values
        .iter()
        .take_while(|&&s| s > RANK_TOL * sigma1 && s > 0.0)
        .count();
    if rank < phi.ncols().min(phi.nrows()) {
        log::warn!(
            "least-squares matrix is rank deficient ({} of {} columns); returning the minimal-norm solution",
            rank,
            phi.ncols()
        );
    }
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested V^*");
    let mut coeffs = CVec::zeros(phi.ncols());
    for i in 0..rank {
        let proj = u.column(i).dotc(y) / C64::new(svd.singular_values[i], 0.0);
        coeffs += vt.row(i).adjoint() * proj;
    }
    Ok(coeffs)
}

/// Eigendecomposition of a general complex square matrix via its Schur form.
///
/// Returns `(vectors, values)`; eigenvector columns have unit norm. Intended
/// for the small projected operators inside DMD fits.
pub(crate) fn complex_eig(a: &CMat) -> Result<(CMat, Vec<C64>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::invalid("eigendecomposition needs a square matrix"));
    }
    if n == 0 {
        return Ok((CMat::zeros(0, 0), vec![]));
    }
    let schur = nalgebra::Schur::try_new(a.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::DegenerateData("Schur iteration failed to converge".into()))?;
    let (q, t) = schur.unpack();
    let t_norm = t.norm().max(f64::MIN_POSITIVE);
    let mut vectors = CMat::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let lambda = t[(i, i)];
        values.push(lambda);
        // Back-substitute (T - lambda I) y = 0 with y[i] = 1.
        let mut y = CVec::zeros(n);
        y[i] = C64::new(1.0, 0.0);
        for j in (0..i).rev() {
            let mut s = C64::new(0.0, 0.0);
            for k in (j + 1)..=i {
                s += t[(j, k)] * y[k];
            }
            let mut den = t[(j, j)] - lambda;
            if den.norm() < f64::EPSILON * t_norm {
                den = C64::new(f64::EPSILON * t_norm, 0.0);
            }
            y[j] = -s / den;
        }
        let mut v = &q * y;
        let nv = v.norm();
        if nv > 0.0 {
            v /= C64::new(nv, 0.0);
        }
        vectors.set_column(i, &v);
    }
    Ok((vectors, values))
}
