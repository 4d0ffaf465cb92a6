//! Strang-splitting Fourier pseudospectral integrator for the semiclassical
//! Schrödinger equation on a periodic interval, with WKB initial data, grid
//! handling, and space/time downsampling.
//!
//! The equation integrated is `i eps u_t = -(eps^2/2) u_xx + V(x) u
//! + beta |u|^2 u` with periodic boundary conditions; `beta = 0` gives the
//! linear equation, `beta = eps` the weakly nonlinear defocusing
//! Gross–Pitaevskii dynamics.

use crate::linalg::ensure_finite_vec;
use crate::{C64, CMat, CVec, Error, Result};
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

/// Uniform periodic grid on `[a, b]` with points `x_j = a + j h`, `j = 1..n`
/// (the left endpoint is the periodic image of the right one).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    a: f64,
    b: f64,
    n: usize,
}

impl SpatialGrid {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid(format!("need finite b > a, got [{a}, {b}]")));
        }
        if n < 2 {
            return Err(Error::invalid("grid needs at least 2 points"));
        }
        Ok(SpatialGrid { a, b, n })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Mesh size `h = (b - a)/n`.
    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }

    /// Grid point for storage index `p` (0-based): `x = a + (p + 1) h`.
    pub fn point(&self, p: usize) -> f64 {
        self.a + (p + 1) as f64 * self.h()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|p| self.point(p)).collect()
    }

    /// Grid with every `stride`-th point kept (stride must divide n).
    pub fn coarsen(&self, stride: usize) -> Result<SpatialGrid> {
        if stride == 0 || self.n % stride != 0 {
            return Err(Error::invalid(format!(
                "spatial stride {stride} does not divide n = {}",
                self.n
            )));
        }
        SpatialGrid::new(self.a, self.b, self.n / stride)
    }

    /// Periodic wavenumbers in FFT order: `2 pi k / (b - a)` for
    /// `k in {0, .., n/2 - 1, -n/2, .., -1}`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let len = self.b - self.a;
        (0..self.n)
            .map(|k| {
                let kk = if k < self.n / 2 { k as f64 } else { k as f64 - self.n as f64 };
                2.0 * PI * kk / len
            })
            .collect()
    }
}

/// External potential `V(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    Constant(f64),
    /// `V(x) = q x^2`.
    Harmonic(f64),
    /// Values on the grid points, length n.
    Tabulated(Vec<f64>),
}

impl PotentialSpec {
    /// Evaluate on every grid point.
    pub fn values(&self, grid: &SpatialGrid) -> Result<Vec<f64>> {
        match self {
            PotentialSpec::Constant(c) => {
                if !c.is_finite() {
                    return Err(Error::invalid("constant potential must be finite"));
                }
                Ok(vec![*c; grid.len()])
            }
            PotentialSpec::Harmonic(q) => {
                if !q.is_finite() {
                    return Err(Error::invalid("harmonic coefficient must be finite"));
                }
                Ok(grid.points().iter().map(|&x| q * x * x).collect())
            }
            PotentialSpec::Tabulated(vals) => {
                if vals.len() != grid.len() {
                    return Err(Error::invalid(format!(
                        "tabulated potential has {} values for a {}-point grid",
                        vals.len(),
                        grid.len()
                    )));
                }
                if !vals.iter().all(|v| v.is_finite()) {
                    return Err(Error::invalid("tabulated potential has non-finite values"));
                }
                Ok(vals.clone())
            }
        }
    }
}

/// Squared-amplitude profile `n0(x)` of WKB data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AmplitudeProfile {
    Constant(f64),
    /// `n0(x) = (exp(-alpha (x - center)^2))^2`.
    GaussianSquared { alpha: f64, center: f64 },
}

impl AmplitudeProfile {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            AmplitudeProfile::Constant(c) => c,
            AmplitudeProfile::GaussianSquared { alpha, center } => {
                let g = (-alpha * (x - center) * (x - center)).exp();
                g * g
            }
        }
    }
}

/// Phase profile `S0(x)` of WKB data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseProfile {
    Constant(f64),
    /// `S0(x) = coeff (x - left)(x - right)`.
    Quadratic { coeff: f64, left: f64, right: f64 },
    /// `S0(x) = scale * ln(exp(slope (x - center)) + exp(-slope (x - center)))`.
    LogCosh { scale: f64, slope: f64, center: f64 },
}

impl PhaseProfile {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            PhaseProfile::Constant(c) => c,
            PhaseProfile::Quadratic { coeff, left, right } => coeff * (x - left) * (x - right),
            PhaseProfile::LogCosh { scale, slope, center } => {
                let t = slope * (x - center);
                // ln(e^t + e^-t) evaluated without overflow.
                scale * (t.abs() + (-2.0 * t.abs()).exp().ln_1p())
            }
        }
    }
}

/// WKB initial data `sqrt(n0(x)) exp(i S0(x)/eps)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WkbSpec {
    pub n0: AmplitudeProfile,
    pub s0: PhaseProfile,
    pub eps: f64,
}

/// Evaluate WKB data on the grid. Rejects profiles that go negative at any
/// grid point.
pub fn wkb_initial(spec: &WkbSpec, grid: &SpatialGrid) -> Result<CVec> {
    if !(spec.eps > 0.0) {
        return Err(Error::invalid("eps must be positive"));
    }
    let mut out = CVec::zeros(grid.len());
    for p in 0..grid.len() {
        let x = grid.point(p);
        let n0 = spec.n0.eval(x);
        if !(n0 >= 0.0) {
            return Err(Error::invalid(format!(
                "amplitude-squared profile is negative at x = {x}: {n0}"
            )));
        }
        out[p] = C64::from_polar(n0.sqrt(), spec.s0.eval(x) / spec.eps);
    }
    Ok(out)
}

/// Full configuration of one integration run on the fine grid.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub grid: SpatialGrid,
    pub eps: f64,
    pub potential: PotentialSpec,
    /// Nonlinearity strength; 0 for the linear equation.
    pub beta: f64,
    /// Fine time step.
    pub tau_e: f64,
    /// Number of fine steps to march.
    pub steps: usize,
    /// Keep every `downsample_time`-th snapshot (indices 0, s, 2s, ...).
    pub downsample_time: usize,
    /// Keep every `downsample_space`-th grid point (on the coarse grid
    /// convention x_i = a + i s h).
    pub downsample_space: usize,
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::invalid("eps must be positive"));
        }
        if !(self.tau_e > 0.0) {
            return Err(Error::invalid("tau_e must be positive"));
        }
        if !self.beta.is_finite() {
            return Err(Error::invalid("beta must be finite"));
        }
        if self.grid.len() % 2 != 0 {
            return Err(Error::invalid(
                "grid size must be even for the symmetric wavenumber layout",
            ));
        }
        if self.downsample_time == 0 || self.steps % self.downsample_time != 0 {
            return Err(Error::invalid(format!(
                "time stride {} does not divide {} steps",
                self.downsample_time, self.steps
            )));
        }
        if self.downsample_space == 0 || self.grid.len() % self.downsample_space != 0 {
            return Err(Error::invalid(format!(
                "space stride {} does not divide n = {}",
                self.downsample_space,
                self.grid.len()
            )));
        }
        Ok(())
    }
}

/// Complex snapshot matrix: column k is the state at time `k * tau` on `grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    pub data: CMat,
    pub tau: f64,
    pub grid: SpatialGrid,
    pub eps: f64,
}

impl SnapshotMatrix {
    pub fn new(data: CMat, tau: f64, grid: SpatialGrid, eps: f64) -> Result<Self> {
        if data.nrows() != grid.len() {
            return Err(Error::invalid(format!(
                "snapshot rows ({}) do not match the grid ({})",
                data.nrows(),
                grid.len()
            )));
        }
        if data.ncols() == 0 {
            return Err(Error::invalid("snapshot matrix needs at least one column"));
        }
        if !(tau > 0.0) {
            return Err(Error::invalid("tau must be positive"));
        }
        crate::linalg::ensure_finite(&data, "snapshot matrix")?;
        Ok(SnapshotMatrix { data, tau, grid, eps })
    }

    /// Number of states stored (m + 1 in the usual indexing).
    pub fn num_snapshots(&self) -> usize {
        self.data.ncols()
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn state(&self, k: usize) -> CVec {
        self.data.column(k).into_owned()
    }

    /// Keep columns `[from, to)`.
    pub fn slice_time(&self, from: usize, to: usize) -> Result<SnapshotMatrix> {
        if from >= to || to > self.num_snapshots() {
            return Err(Error::invalid(format!(
                "bad time slice {from}..{to} of {}",
                self.num_snapshots()
            )));
        }
        SnapshotMatrix::new(
            self.data.columns(from, to - from).into_owned(),
            self.tau,
            self.grid,
            self.eps,
        )
    }
}

/// Precomputed one-step propagator: FFT plans plus cached phase factors.
pub struct Propagator {
    grid: SpatialGrid,
    eps: f64,
    beta: f64,
    tau_e: f64,
    potential: Vec<f64>,
    /// exp(-i tau_e V/(2 eps)), valid as-is when beta = 0.
    half_potential_phase: Vec<C64>,
    kinetic_phase: Vec<C64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl Propagator {
    pub fn new(cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.grid.len();
        let potential = cfg.potential.values(&cfg.grid)?;
        let half_potential_phase = potential
            .iter()
            .map(|&v| C64::from_polar(1.0, -cfg.tau_e * v / (2.0 * cfg.eps)))
            .collect();
        let kinetic_phase = cfg
            .grid
            .wavenumbers()
            .iter()
            .map(|&xi| C64::from_polar(1.0, -cfg.eps * cfg.tau_e * xi * xi / 2.0))
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Propagator {
            grid: cfg.grid,
            eps: cfg.eps,
            beta: cfg.beta,
            tau_e: cfg.tau_e,
            potential,
            half_potential_phase,
            kinetic_phase,
            fft: planner.plan_fft_forward(n),
            ifft: planner.plan_fft_inverse(n),
        })
    }

    fn apply_half_potential(&self, u: &mut [C64]) {
        if self.beta == 0.0 {
            for (z, p) in u.iter_mut().zip(&self.half_potential_phase) {
                *z *= p;
            }
        } else {
            let coef = -self.tau_e / (2.0 * self.eps);
            for (z, &v) in u.iter_mut().zip(&self.potential) {
                let phase = coef * (v + self.beta * z.norm_sqr());
                *z *= C64::from_polar(1.0, phase);
            }
        }
    }

    /// One Strang step in place: half potential, full kinetic (in Fourier
    /// space), half potential with |u| re-evaluated when beta != 0.
    pub fn step(&self, u: &mut [C64]) {
        self.apply_half_potential(u);
        self.fft.process(u);
        for (z, k) in u.iter_mut().zip(&self.kinetic_phase) {
            *z *= k;
        }
        self.ifft.process(u);
        let scale = 1.0 / self.grid.len() as f64;
        for z in u.iter_mut() {
            *z *= scale;
        }
        self.apply_half_potential(u);
    }
}

/// One Strang splitting step of `u` under `cfg`.
///
/// For repeated stepping build a [`Propagator`] once instead.
pub fn strang_step(u: &CVec, cfg: &SolverConfig) -> Result<CVec> {
    ensure_finite_vec(u, "state")?;
    if u.len() != cfg.grid.len() {
        return Err(Error::invalid(format!(
            "state length {} does not match the grid ({})",
            u.len(),
            cfg.grid.len()
        )));
    }
    let prop = Propagator::new(cfg)?;
    let mut buf: Vec<C64> = u.iter().cloned().collect();
    prop.step(&mut buf);
    Ok(CVec::from_vec(buf))
}

/// Integrate `steps` fine steps from `u0` and keep every
/// `downsample_time`-th snapshot restricted to every `downsample_space`-th
/// grid point. The result has time step `tau_e * downsample_time`.
pub fn simulate(u0: &CVec, cfg: &SolverConfig) -> Result<SnapshotMatrix> {
    ensure_finite_vec(u0, "initial state")?;
    if u0.len() != cfg.grid.len() {
        return Err(Error::invalid(format!(
            "initial state length {} does not match the grid ({})",
            u0.len(),
            cfg.grid.len()
        )));
    }
    let prop = Propagator::new(cfg)?;
    let coarse_grid = cfg.grid.coarsen(cfg.downsample_space)?;
    let kept = cfg.steps / cfg.downsample_time + 1;
    let stride = cfg.downsample_space;
    let mut data = CMat::zeros(coarse_grid.len(), kept);
    let mut u: Vec<C64> = u0.iter().cloned().collect();

    let restrict = |u: &[C64], col: &mut nalgebra::DVectorViewMut<C64>| {
        for i in 0..coarse_grid.len() {
            col[i] = u[(i + 1) * stride - 1];
        }
    };

    restrict(&u, &mut data.column_mut(0));
    let mut kept_idx = 1;
    for step in 1..=cfg.steps {
        prop.step(&mut u);
        if step % cfg.downsample_time == 0 {
            restrict(&u, &mut data.column_mut(kept_idx));
            kept_idx += 1;
        }
    }
    SnapshotMatrix::new(data, cfg.tau_e * cfg.downsample_time as f64, coarse_grid, cfg.eps)
}

/// Discrete mass `h * sum |u_j|^2`.
pub fn mass(u: &CVec, grid: &SpatialGrid) -> f64 {
    grid.h() * u.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// Discrete energy `h * sum [(eps^2/2) |u'|^2 + V |u|^2]` with the gradient
/// taken by Fourier differentiation.
pub fn energy(u: &CVec, grid: &SpatialGrid, eps: f64, potential: &PotentialSpec) -> Result<f64> {
    if u.len() != grid.len() {
        return Err(Error::invalid("state length does not match the grid"));
    }
    let v = potential.values(grid)?;
    let n = grid.len();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);
    let mut du: Vec<C64> = u.iter().cloned().collect();
    fft.process(&mut du);
    for (z, &xi) in du.iter_mut().zip(&grid.wavenumbers()) {
        *z *= C64::new(0.0, xi);
    }
    ifft.process(&mut du);
    let scale = 1.0 / n as f64;
    let mut total = 0.0;
    for j in 0..n {
        let grad = du[j] * scale;
        total += 0.5 * eps * eps * grad.norm_sqr() + v[j] * u[j].norm_sqr();
    }
    Ok(grid.h() * total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::TAU;

    fn linear_config(grid: SpatialGrid, eps: f64, potential: PotentialSpec, tau_e: f64) -> SolverConfig {
        SolverConfig {
            grid,
            eps,
            potential,
            beta: 0.0,
            tau_e,
            steps: 0,
            downsample_time: 1,
            downsample_space: 1,
        }
    }

    #[test]
    fn grid_points_match_convention() {
        let grid = SpatialGrid::new(0.0, 2.0, 200).unwrap();
        assert_abs_diff_eq!(grid.h(), 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(grid.point(0), 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(grid.point(199), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn wkb_unit_amplitude_zero_phase() {
        let grid = SpatialGrid::new(0.0, 1.0, 8).unwrap();
        let spec = WkbSpec {
            n0: AmplitudeProfile::Constant(1.0),
            s0: PhaseProfile::Constant(0.0),
            eps: 0.01,
        };
        let u = wkb_initial(&spec, &grid).unwrap();
        for z in u.iter() {
            assert_eq!(*z, C64::new(1.0, 0.0));
        }
    }

    #[test]
    fn wkb_gaussian_profile_against_pointwise_oracle() {
        // Forward-propagation setup: domain [0, 2], alpha = 25, quadratic
        // phase; peak amplitude 1 at the center, squared magnitude equal to
        // n0 everywhere.
        let grid = SpatialGrid::new(0.0, 2.0, 200).unwrap();
        let spec = WkbSpec {
            n0: AmplitudeProfile::GaussianSquared { alpha: 25.0, center: 1.0 },
            s0: PhaseProfile::Quadratic { coeff: -1.0 / 50.0, left: 0.0, right: 2.0 },
            eps: 1e-2,
        };
        let u = wkb_initial(&spec, &grid).unwrap();
        for p in 0..grid.len() {
            let x = grid.point(p);
            let n0 = (-25.0 * (x - 1.0) * (x - 1.0)).exp().powi(2);
            assert_abs_diff_eq!(u[p].norm_sqr(), n0, epsilon = 1e-14 * (1.0 + n0));
        }
        // Peak 1 at x = 1 (storage index 99), magnitude^2 = e^{-12.5} at x = 0.5.
        assert_abs_diff_eq!(u[99].norm(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(u[49].norm_sqr(), (-12.5_f64).exp(), epsilon = 1e-16);
    }

    #[test]
    fn wkb_phase_shift_by_two_pi_eps_is_invisible() {
        let grid = SpatialGrid::new(0.0, 1.0, 16).unwrap();
        let eps = 1e-2;
        let base = WkbSpec {
            n0: AmplitudeProfile::Constant(1.0),
            s0: PhaseProfile::Constant(0.3),
            eps,
        };
        let shifted = WkbSpec {
            s0: PhaseProfile::Constant(0.3 + TAU * eps),
            ..base
        };
        let u0 = wkb_initial(&base, &grid).unwrap();
        let u1 = wkb_initial(&shifted, &grid).unwrap();
        assert!((u0 - u1).norm() < 1e-11);
    }

    #[test]
    fn wkb_rejects_negative_amplitude() {
        let grid = SpatialGrid::new(0.0, 1.0, 8).unwrap();
        let spec = WkbSpec {
            n0: AmplitudeProfile::Constant(-1.0),
            s0: PhaseProfile::Constant(0.0),
            eps: 1.0,
        };
        assert!(wkb_initial(&spec, &grid).is_err());
    }

    #[test]
    fn kinetic_step_exact_on_single_mode() {
        let grid = SpatialGrid::new(0.0, TAU, 64).unwrap();
        let eps = 0.5;
        let tau_e = 0.01;
        let cfg = linear_config(grid, eps, PotentialSpec::Constant(0.0), tau_e);
        let xi1 = TAU / (grid.b() - grid.a()); // first positive wavenumber
        let u = CVec::from_fn(64, |p, _| C64::from_polar(1.0, xi1 * grid.point(p)));
        let stepped = strang_step(&u, &cfg).unwrap();
        let expected_phase = -eps * tau_e * xi1 * xi1 / 2.0;
        for p in 0..64 {
            let want = u[p] * C64::from_polar(1.0, expected_phase);
            assert!((stepped[p] - want).norm() < 1e-13);
        }
    }

    #[test]
    fn constant_potential_step_matches_scalar_exponential() {
        let grid = SpatialGrid::new(0.0, 1.0, 32).unwrap();
        let eps = 0.1;
        let tau_e = 0.02;
        let c = 3.0;
        let cfg = linear_config(grid, eps, PotentialSpec::Constant(c), tau_e);
        let u = CVec::from_element(32, C64::new(0.7, -0.2));
        let stepped = strang_step(&u, &cfg).unwrap();
        // Constant vector is the zero mode: kinetic phase vanishes, the two
        // half-steps compound to exp(-i tau_e c / eps).
        let want = C64::from_polar(1.0, -tau_e * c / eps);
        for p in 0..32 {
            assert!((stepped[p] - u[p] * want).norm() < 1e-13);
        }
    }

    #[test]
    fn step_rejects_odd_grid() {
        let grid = SpatialGrid::new(0.0, 1.0, 9).unwrap();
        let cfg = linear_config(grid, 1.0, PotentialSpec::Constant(0.0), 0.01);
        let u = CVec::from_element(9, C64::new(1.0, 0.0));
        assert!(strang_step(&u, &cfg).is_err());
    }

    #[test]
    fn step_preserves_norm() {
        let grid = SpatialGrid::new(-1.0, 1.0, 128).unwrap();
        let spec = WkbSpec {
            n0: AmplitudeProfile::GaussianSquared { alpha: 25.0, center: 0.0 },
            s0: PhaseProfile::Quadratic { coeff: -0.02, left: -1.0, right: 1.0 },
            eps: 0.05,
        };
        let u = wkb_initial(&spec, &grid).unwrap();
        let mut cfg = linear_config(grid, 0.05, PotentialSpec::Harmonic(10.0), 0.001);
        cfg.beta = 0.05;
        let before = u.norm();
        let mut state = u.clone();
        for _ in 0..50 {
            state = strang_step(&state, &cfg).unwrap();
            let drift = (state.norm() - before).abs() / before;
            assert!(drift < 1e-13, "mass drift {drift:e}");
        }
    }

    #[test]
    fn simulate_zero_steps_echoes_initial_state() {
        let grid = SpatialGrid::new(0.0, 1.0, 16).unwrap();
        let cfg = linear_config(grid, 1.0, PotentialSpec::Constant(0.0), 0.01);
        let u0 = CVec::from_fn(16, |p, _| C64::new(p as f64, -(p as f64)));
        let snap = simulate(&u0, &cfg).unwrap();
        assert_eq!(snap.num_snapshots(), 1);
        assert_eq!(snap.state(0), u0);
    }

    #[test]
    fn simulate_forward_propagation_shape() {
        // tau_e = h_e = 1e-2 on [0, 2], 100 kept snapshots after the initial
        // one gives a 200 x 101 matrix; the 200 x 100 training slice drops
        // the first column.
        let grid = SpatialGrid::new(0.0, 2.0, 200).unwrap();
        let spec = WkbSpec {
            n0: AmplitudeProfile::GaussianSquared { alpha: 25.0, center: 1.0 },
            s0: PhaseProfile::Quadratic { coeff: -0.02, left: 0.0, right: 2.0 },
            eps: 1e-2,
        };
        let u0 = wkb_initial(&spec, &grid).unwrap();
        let mut cfg = linear_config(grid, 1e-2, PotentialSpec::Constant(10.0), 1e-2);
        cfg.steps = 100;
        let snap = simulate(&u0, &cfg).unwrap();
        assert_eq!(snap.dim(), 200);
        assert_eq!(snap.num_snapshots(), 101);
        let training = snap.slice_time(1, 101).unwrap();
        assert_eq!(training.dim(), 200);
        assert_eq!(training.num_snapshots(), 100);
    }

    #[test]
    fn simulate_downsampling_shape_and_grid_alignment() {
        // Harmonic-trap setup: fine 1000-point grid and tau_e = 1e-3,
        // downsampled to 250 x 80 with tau = 1e-2, h = 4e-3.
        let fine = SpatialGrid::new(0.0, 1.0, 1000).unwrap();
        let spec = WkbSpec {
            n0: AmplitudeProfile::GaussianSquared { alpha: 25.0, center: 0.5 },
            s0: PhaseProfile::Quadratic { coeff: -0.02, left: 0.0, right: 1.0 },
            eps: 1e-2,
        };
        let u0 = wkb_initial(&spec, &fine).unwrap();
        let mut cfg = linear_config(fine, 1e-2, PotentialSpec::Harmonic(10.0), 1e-3);
        cfg.steps = 790;
        cfg.downsample_time = 10;
        cfg.downsample_space = 4;
        let snap = simulate(&u0, &cfg).unwrap();
        assert_eq!(snap.dim(), 250);
        assert_eq!(snap.num_snapshots(), 80);
        assert_abs_diff_eq!(snap.tau, 1e-2, epsilon = 1e-15);
        assert_abs_diff_eq!(snap.grid.h(), 4e-3, epsilon = 1e-15);
        // The downsampled column 0 must equal the WKB data evaluated directly
        // on the coarse grid.
        let coarse = fine.coarsen(4).unwrap();
        let direct = wkb_initial(&spec, &coarse).unwrap();
        assert!((snap.state(0) - direct).norm() < 1e-14);
    }

    #[test]
    fn simulate_rejects_stride_mismatch() {
        let grid = SpatialGrid::new(0.0, 1.0, 16).unwrap();
        let mut cfg = linear_config(grid, 1.0, PotentialSpec::Constant(0.0), 0.01);
        cfg.steps = 10;
        cfg.downsample_time = 3;
        let u0 = CVec::from_element(16, C64::new(1.0, 0.0));
        assert!(simulate(&u0, &cfg).is_err());
    }

    #[test]
    fn mass_of_ones_on_unit_interval() {
        let grid = SpatialGrid::new(0.0, 1.0, 10).unwrap();
        let u = CVec::from_element(10, C64::new(1.0, 0.0));
        assert_abs_diff_eq!(mass(&u, &grid), 1.0, epsilon = 1e-15);
        assert_eq!(mass(&CVec::zeros(10), &grid), 0.0);
    }

    #[test]
    fn mass_conserved_along_trajectory() {
        let grid = SpatialGrid::new(0.0, 2.0, 200).unwrap();
        let spec = WkbSpec {
            n0: AmplitudeProfile::GaussianSquared { alpha: 25.0, center: 1.0 },
            s0: PhaseProfile::Quadratic { coeff: -0.02, left: 0.0, right: 2.0 },
            eps: 1e-2,
        };
        let u0 = wkb_initial(&spec, &grid).unwrap();
        let mut cfg = linear_config(grid, 1e-2, PotentialSpec::Constant(10.0), 1e-2);
        cfg.steps = 100;
        let snap = simulate(&u0, &cfg).unwrap();
        let m0 = mass(&snap.state(0), &grid);
        let m_last = mass(&snap.state(100), &grid);
        assert!((m_last - m0).abs() / m0 < 1e-12);
    }

    #[test]
    fn energy_constant_state_equals_potential_times_mass() {
        let grid = SpatialGrid::new(0.0, 1.0, 16).unwrap();
        let u = CVec::from_element(16, C64::new(0.5, 0.5));
        let c = 7.0;
        let e = energy(&u, &grid, 0.3, &PotentialSpec::Constant(c)).unwrap();
        assert_abs_diff_eq!(e, c * mass(&u, &grid), epsilon = 1e-12);
    }

    #[test]
    fn energy_single_mode_closed_form() {
        // e^{i xi x} with V = 0 on [0, 2 pi]: E = (eps^2/2) xi^2 (2 pi).
        let grid = SpatialGrid::new(0.0, TAU, 64).unwrap();
        let eps = 0.25;
        let xi = 3.0 * TAU / (grid.b() - grid.a());
        let u = CVec::from_fn(64, |p, _| C64::from_polar(1.0, xi * grid.point(p)));
        let e = energy(&u, &grid, eps, &PotentialSpec::Constant(0.0)).unwrap();
        let want = 0.5 * eps * eps * xi * xi * TAU;
        assert_abs_diff_eq!(e, want, epsilon = 1e-10 * want);
    }

    #[test]
    fn energy_drift_small_along_trajectory() {
        let grid = SpatialGrid::new(0.0, 2.0, 200).unwrap();
        let spec = WkbSpec {
            n0: AmplitudeProfile::GaussianSquared { alpha: 25.0, center: 1.0 },
            s0: PhaseProfile::Quadratic { coeff: -0.02, left: 0.0, right: 2.0 },
            eps: 1e-2,
        };
        let u0 = wkb_initial(&spec, &grid).unwrap();
        let pot = PotentialSpec::Constant(10.0);
        let mut cfg = linear_config(grid, 1e-2, pot.clone(), 1e-2);
        cfg.steps = 100;
        let snap = simulate(&u0, &cfg).unwrap();
        let e0 = energy(&snap.state(0), &grid, 1e-2, &pot).unwrap();
        let e_last = energy(&snap.state(100), &grid, 1e-2, &pot).unwrap();
        assert!((e_last - e0).abs() / e0.abs() < 1e-8, "energy drift");
    }

    #[test]
    fn strang_time_self_convergence_second_order() {
        // Smooth data, eps = 1, harmonic potential (non-commuting terms so
        // the splitting error is visible). Errors measured against a tau/8
        // reference.
        let grid = SpatialGrid::new(-8.0, 8.0, 256).unwrap();
        let spec = WkbSpec {
            n0: AmplitudeProfile::GaussianSquared { alpha: 0.5, center: 0.0 },
            s0: PhaseProfile::Quadratic { coeff: 0.05, left: -2.0, right: 2.0 },
            eps: 1.0,
        };
        let u0 = wkb_initial(&spec, &grid).unwrap();
        let pot = PotentialSpec::Harmonic(2.0);
        let t_final = 0.5;
        let run = |tau_e: f64| -> CVec {
            let steps = (t_final / tau_e).round() as usize;
            let mut cfg = linear_config(grid, 1.0, pot.clone(), tau_e);
            cfg.steps = steps;
            cfg.downsample_time = steps;
            let snap = simulate(&u0, &cfg).unwrap();
            snap.state(snap.num_snapshots() - 1)
        };
        let tau = 0.02;
        let reference = run(tau / 8.0);
        let err_coarse = (run(tau) - &reference).norm();
        let err_fine = (run(tau / 2.0) - &reference).norm();
        let order = (err_coarse / err_fine).log2();
        assert!(order >= 1.8, "observed order {order}");
    }

    #[test]
    fn spatial_spectral_accuracy() {
        // Free evolution of analytic data: each grid doubling must shrink the
        // terminal error by at least 10x until the roundoff floor.
        let spec = WkbSpec {
            n0: AmplitudeProfile::GaussianSquared { alpha: 1.0, center: 0.0 },
            s0: PhaseProfile::Constant(0.0),
            eps: 1.0,
        };
        let t_final = 0.2;
        let tau_e = 0.01;
        let run = |n: usize| -> SnapshotMatrix {
            let grid = SpatialGrid::new(-6.0, 6.0, n).unwrap();
            let u0 = wkb_initial(&spec, &grid).unwrap();
            let mut cfg = linear_config(grid, 1.0, PotentialSpec::Constant(0.0), tau_e);
            cfg.steps = (t_final / tau_e).round() as usize;
            cfg.downsample_time = cfg.steps;
            simulate(&u0, &cfg).unwrap()
        };
        let reference = run(256);
        let terminal = |s: &SnapshotMatrix| s.state(s.num_snapshots() - 1);
        let ref_term = terminal(&reference);
        let err_at = |n: usize| -> f64 {
            let sol = terminal(&run(n));
            let stride = 256 / n;
            let mut err = 0.0_f64;
            for i in 0..n {
                err += (sol[i] - ref_term[(i + 1) * stride - 1]).norm_sqr();
            }
            err.sqrt()
        };
        let errs: Vec<f64> = [16usize, 32, 64].iter().map(|&n| err_at(n)).collect();
        for w in errs.windows(2) {
            if w[0] > 1e-12 {
                assert!(w[1] <= w[0] / 10.0, "spectral decay too slow: {errs:?}");
            }
        }
    }
}
