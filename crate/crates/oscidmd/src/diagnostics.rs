//! Metrics, noise injection, conservation tracking, training-bound checks,
//! toy-model data, and the reference finite-difference operator.

use crate::dmd::{predict_structured, ReducedHermitianModel, Scheme};
use crate::solver::{PotentialSpec, SnapshotMatrix, SpatialGrid};
use crate::{C64, CMat, CVec, Error, Result};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Identifier of the counter-based generator behind every seeded draw,
/// recorded in experiment manifests for reproducibility.
pub const NOISE_RNG_ALGORITHM: &str = "chacha12";

/// Complex Gaussian noise level and reproducibility seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

/// Add elementwise complex Gaussian noise `eta = (sigma/sqrt(2))(eta1 + i eta2)`.
///
/// Each column draws from its own counter stream of a ChaCha12 generator
/// seeded by `spec.seed`, so the output is deterministic regardless of
/// evaluation order. `sigma = 0` returns the input unchanged.
pub fn add_noise(x: &SnapshotMatrix, spec: &NoiseSpec) -> Result<SnapshotMatrix> {
    if !(spec.sigma >= 0.0) {
        return Err(Error::invalid("noise level must be nonnegative"));
    }
    if spec.sigma == 0.0 {
        return Ok(x.clone());
    }
    let n = x.dim();
    let scale = spec.sigma / 2.0_f64.sqrt();
    let mut data = x.data.clone();
    let perturb_column = |col: u64, slice: &mut [C64]| {
        let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
        rng.set_stream(col);
        for z in slice.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *z += C64::new(scale * re, scale * im);
        }
    };
    #[cfg(feature = "parallel")]
    {
        data.as_mut_slice()
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(col, slice)| perturb_column(col as u64, slice));
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.as_mut_slice()
            .chunks_mut(n)
            .enumerate()
            .for_each(|(col, slice)| perturb_column(col as u64, slice));
    }
    SnapshotMatrix::new(data, x.tau, x.grid, x.eps)
}

/// Per-step error and conservation series plus the scalar relative Frobenius
/// error. `err[k]` is NaN (a sentinel excluded from summaries) where the truth
/// column vanishes.
#[derive(Debug, Clone)]
pub struct MetricSeries {
    pub err: Vec<f64>,
    pub d_mass: Vec<f64>,
    pub d_energy: Option<Vec<f64>>,
    pub e_rel: f64,
}

impl MetricSeries {
    pub fn len(&self) -> usize {
        self.err.len()
    }

    pub fn is_empty(&self) -> bool {
        self.err.is_empty()
    }

    /// Largest finite per-step error.
    pub fn max_err(&self) -> f64 {
        self.err.iter().filter(|e| e.is_finite()).cloned().fold(0.0, f64::max)
    }
}

/// Energy evaluator on column views (e.g. the model's quadratic form).
pub type EnergyFn<'a> = &'a (dyn Fn(&CVec) -> f64 + Sync);

struct ColumnMetrics {
    err: f64,
    d_mass: f64,
    d_energy: f64,
}

fn column_metrics(
    pred: &CMat,
    truth: &CMat,
    energy: Option<EnergyFn<'_>>,
    mass0: f64,
    energy0: f64,
    k: usize,
) -> ColumnMetrics {
    let pk = pred.column(k).into_owned();
    let tk = truth.column(k);
    let tn = tk.norm();
    let err = if tn == 0.0 {
        f64::NAN
    } else {
        (&pk - tk.into_owned()).norm() / tn
    };
    let d_mass = if mass0 == 0.0 { f64::NAN } else { (pk.norm() - mass0).abs() / mass0 };
    let d_energy = match energy {
        Some(f) => {
            if energy0 == 0.0 {
                f64::NAN
            } else {
                (f(&pk).abs() - energy0).abs() / energy0
            }
        }
        None => f64::NAN,
    };
    ColumnMetrics { err, d_mass, d_energy }
}

/// Column-wise prediction metrics against truth.
///
/// * `err[k] = ||pred_k - truth_k|| / ||truth_k||`
/// * `d_mass[k] = | ||pred_k|| - ||pred_0|| | / ||pred_0||`
/// * `d_energy[k] = | |E(pred_k)| - |E(pred_0)| | / |E(pred_0)|` when an
///   energy evaluator is supplied (absolute values as the printed definition
///   has them)
/// * `e_rel = ||pred - truth||_F / ||truth||_F`
pub fn metrics(pred: &CMat, truth: &CMat, energy: Option<EnergyFn<'_>>) -> Result<MetricSeries> {
    metrics_impl(pred, truth, energy, cfg!(feature = "parallel"))
}

/// Sequential reference for [`metrics`]; the parallel path must match it
/// bitwise.
pub fn metrics_serial(pred: &CMat, truth: &CMat, energy: Option<EnergyFn<'_>>) -> Result<MetricSeries> {
    metrics_impl(pred, truth, energy, false)
}

fn metrics_impl(
    pred: &CMat,
    truth: &CMat,
    energy: Option<EnergyFn<'_>>,
    parallel: bool,
) -> Result<MetricSeries> {
    if pred.nrows() != truth.nrows() || pred.ncols() != truth.ncols() {
        return Err(Error::invalid(format!(
            "prediction {}x{} and truth {}x{} differ in shape",
            pred.nrows(),
            pred.ncols(),
            truth.nrows(),
            truth.ncols()
        )));
    }
    if pred.ncols() == 0 {
        return Err(Error::invalid("need at least one column"));
    }
    let mass0 = pred.column(0).norm();
    let energy0 = energy.map(|f| f(&pred.column(0).into_owned()).abs()).unwrap_or(f64::NAN);
    let cols = pred.ncols();
    let per_column: Vec<ColumnMetrics> = if parallel {
        #[cfg(feature = "parallel")]
        {
            (0..cols)
                .into_par_iter()
                .map(|k| column_metrics(pred, truth, energy, mass0, energy0, k))
                .collect()
        }
        #[cfg(not(feature = "parallel"))]
        unreachable!("parallel metrics requested without the parallel feature")
    } else {
        (0..cols)
            .map(|k| column_metrics(pred, truth, energy, mass0, energy0, k))
            .collect()
    };
    let tn = truth.norm();
    let e_rel = if tn == 0.0 { f64::NAN } else { (pred - truth).norm() / tn };
    Ok(MetricSeries {
        err: per_column.iter().map(|c| c.err).collect(),
        d_mass: per_column.iter().map(|c| c.d_mass).collect(),
        d_energy: energy.map(|_| per_column.iter().map(|c| c.d_energy).collect()),
        e_rel,
    })
}

/// Residual norms `|| i (x_{k+1} - x_k)/tau - A (x_{k+1} + x_k)/2 ||` of the
/// training data under an operator evaluator.
pub fn training_residuals<F: Fn(&CVec) -> CVec>(x: &SnapshotMatrix, apply: F) -> Result<Vec<f64>> {
    let cols = x.num_snapshots();
    if cols < 2 {
        return Err(Error::invalid("need at least 2 snapshots"));
    }
    let idiff = C64::new(0.0, 1.0 / x.tau);
    let half = C64::new(0.5, 0.0);
    let mut out = Vec::with_capacity(cols - 1);
    for k in 0..cols - 1 {
        let a = x.state(k);
        let b = x.state(k + 1);
        let lhs = (&b - &a) * idiff;
        let mid = (&a + &b) * half;
        out.push((lhs - apply(&mid)).norm());
    }
    Ok(out)
}

/// One row of the training-bound check: observed error against the
/// accumulated-residual bound at step `k + 1`.
#[derive(Debug, Clone, Copy)]
pub struct BoundStep {
    pub k: usize,
    pub error: f64,
    pub bound: f64,
}

/// Outcome of the training-error bound verification.
#[derive(Debug, Clone)]
pub struct TrainingBoundReport {
    pub steps: Vec<BoundStep>,
    pub first_violation: Option<usize>,
}

impl TrainingBoundReport {
    pub fn holds(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Verify the training error bound: with predictions started from the first
/// data snapshot, `||e_{k+1}|| <= tau * sum_{i<=k} ||l_i(A)||` must hold at
/// every training step up to a `1e-10 ||x_0||` floating-point slack.
pub fn check_training_bound(
    x: &SnapshotMatrix,
    model: &ReducedHermitianModel,
) -> Result<TrainingBoundReport> {
    if model.scheme != Scheme::Cn {
        return Err(Error::invalid("the training bound applies to the Crank-Nicolson scheme"));
    }
    let residuals = training_residuals(x, |v| model.apply_operator(v))?;
    let x0 = x.state(0);
    let slack = 1e-10 * x0.norm();
    let mut steps = Vec::with_capacity(residuals.len());
    let mut first_violation = None;
    let mut accumulated = 0.0;
    for k in 0..residuals.len() {
        accumulated += residuals[k];
        let pred = predict_structured(model, &x0, None, (k + 1) as u64)?;
        let error = (x.state(k + 1) - pred).norm();
        let bound = x.tau * accumulated + slack;
        if error > bound && first_violation.is_none() {
            first_violation = Some(k);
        }
        steps.push(BoundStep { k, error, bound });
    }
    Ok(TrainingBoundReport { steps, first_violation })
}

/// Specification of unitary-generated toy data
/// `x_k = sum_i b_i phi_i e^{i k theta_i}` with orthonormal modes drawn
/// deterministically from the seed.
#[derive(Debug, Clone)]
pub struct ToySpec {
    pub n: usize,
    pub r: usize,
    /// Mutually distinct phases in (-pi, pi].
    pub thetas: Vec<f64>,
    /// Nonzero complex amplitudes.
    pub amplitudes: Vec<C64>,
    /// Number of snapshots generated (columns of the output).
    pub snapshots: usize,
    pub seed: u64,
}

/// Generator factors returned alongside toy data for oracle comparisons.
#[derive(Debug, Clone)]
pub struct ToyFactors {
    pub modes: CMat,
    pub lambdas: Vec<C64>,
    pub amplitudes: Vec<C64>,
}

/// Generate toy snapshots plus the generator factors. The snapshot matrix
/// carries unit time step and a synthetic unit-interval grid.
pub fn toy_generate(spec: &ToySpec) -> Result<(SnapshotMatrix, ToyFactors)> {
    if spec.r == 0 || spec.r > spec.n {
        return Err(Error::invalid("need 0 < r <= n"));
    }
    if spec.thetas.len() != spec.r || spec.amplitudes.len() != spec.r {
        return Err(Error::invalid("thetas and amplitudes must have length r"));
    }
    if spec.snapshots < 1 {
        return Err(Error::invalid("need at least one snapshot"));
    }
    for (i, &t) in spec.thetas.iter().enumerate() {
        if !(t > -std::f64::consts::PI && t <= std::f64::consts::PI) {
            return Err(Error::invalid(format!("phase {i} outside (-pi, pi]: {t}")));
        }
        for &s in &spec.thetas[i + 1..] {
            if s == t {
                return Err(Error::invalid(format!("repeated phase {t}; phases must be mutually distinct")));
            }
        }
    }
    if spec.amplitudes.iter().any(|b| *b == C64::new(0.0, 0.0)) {
        return Err(Error::invalid("amplitudes must be nonzero"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let gauss = CMat::from_fn(spec.n, spec.r, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    });
    let modes = gauss.qr().q();
    let lambdas: Vec<C64> = spec.thetas.iter().map(|&t| C64::from_polar(1.0, t)).collect();
    let mut data = CMat::zeros(spec.n, spec.snapshots);
    for k in 0..spec.snapshots {
        let coef = CVec::from_fn(spec.r, |i, _| {
            spec.amplitudes[i] * C64::from_polar(1.0, k as f64 * spec.thetas[i])
        });
        data.set_column(k, &(&modes * coef));
    }
    let grid = SpatialGrid::new(0.0, 1.0, spec.n)?;
    let snaps = SnapshotMatrix::new(data, 1.0, grid, 1.0)?;
    Ok((snaps, ToyFactors { modes, lambdas, amplitudes: spec.amplitudes.clone() }))
}

/// Reference discretized generator from the second-order central-difference
/// Laplacian with periodic wraparound:
/// `A = -(eps/2) D2 + (1/eps) diag(V)`, exactly Hermitian.
pub fn build_reference_operator(
    grid: &SpatialGrid,
    eps: f64,
    potential: &PotentialSpec,
) -> Result<CMat> {
    if !(eps > 0.0) {
        return Err(Error::invalid("eps must be positive"));
    }
    let n = grid.len();
    let h2 = grid.h() * grid.h();
    let v = potential.values(grid)?;
    let mut a = CMat::zeros(n, n);
    let off = -(eps / 2.0) / h2;
    for j in 0..n {
        a[(j, j)] = C64::new(-(eps / 2.0) * (-2.0 / h2) + v[j] / eps, 0.0);
        a[(j, (j + 1) % n)] += C64::new(off, 0.0);
        a[(j, (j + n - 1) % n)] += C64::new(off, 0.0);
    }
    Ok(a)
}

/// Wall-clock a closure on the monotonic clock.
pub fn time<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = std::time::Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}
