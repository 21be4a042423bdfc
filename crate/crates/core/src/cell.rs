//! Approximate cell problems `σ(x) M_n(|D u + P|) = H̄_n(P)` solved on a periodic
//! grid by the vanishing-discount method.
//!
//! For each `δ` of a decreasing schedule the discounted equation
//! `δ u + Ĥ(x, D u + P) = 0` is driven to its fixed point by explicit
//! pseudo-time iteration. Because `Ĥ` only sees differences of `u`, the grid mean
//! of `u` decouples and is solved exactly at every step; only the zero-mean part
//! is relaxed. The fixed point is unchanged, but the slow `e^{-δ t}` mode of the
//! plain iteration disappears.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Approximant, Hamiltonian, KineticLaw};
use crate::scheme::{gradient_bound, GridSpec, LaxFriedrichs};

/// Solver settings for one cell problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellConfig {
    pub grid: GridSpec,
    /// Strictly decreasing discount schedule.
    pub deltas: Vec<f64>,
    /// Stop when the max-norm update rate falls below this.
    pub tol: f64,
    /// Iteration cap per discount level.
    pub max_iter: usize,
    /// Extrapolate the last two discount levels linearly to `δ = 0`.
    pub richardson: bool,
}

impl CellConfig {
    /// Defaults: 256 points and rate tolerance `1e-8` in 1D; 64² and `1e-6` in 2D.
    pub fn default_for(dim: usize) -> Result<Self> {
        let (points, tol) = if dim == 1 { (256, 1e-8) } else { (64, 1e-6) };
        Self::with_grid(GridSpec::new(dim, points)?, tol)
    }

    pub fn with_grid(grid: GridSpec, tol: f64) -> Result<Self> {
        let cfg = Self {
            grid,
            deltas: vec![1e-1, 1e-2, 1e-3],
            tol,
            max_iter: 20_000_000,
            richardson: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.deltas.is_empty() || self.deltas.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::InvalidArgument("discount schedule must be non-empty and positive".into()));
        }
        if self.deltas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument("discount schedule must be strictly decreasing".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Fixed point of the discounted scheme.
#[derive(Debug, Clone)]
pub struct DiscountedSolution {
    pub u: Vec<f64>,
    pub delta: f64,
    pub iterations: usize,
    /// Final max-norm of `δ u + Ĥ`.
    pub residual: f64,
}

/// Critical-value estimate read off a discounted solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalEstimate {
    /// Grid mean of `-δ u_δ`.
    pub value: f64,
    /// `max − min` of `-δ u_δ` over the grid.
    pub spread: f64,
}

fn shift_of(p: &[f64], dim: usize) -> Result<[f64; 2]> {
    if p.len() != dim {
        return Err(Error::InvalidArgument(format!(
            "P has {} components, problem dimension is {dim}",
            p.len()
        )));
    }
    let mut s = [0.0; 2];
    s[..dim].copy_from_slice(p);
    Ok(s)
}

/// Solves `δ u + Ĥ_n(x, D u + P) = 0` on `grid`, optionally warm-started from `init`
/// (only its shape is used; the mean is recomputed for this `δ`).
#[allow(clippy::too_many_arguments)]
pub fn solve_discounted<K: KineticLaw>(
    ham: &Hamiltonian,
    law: &K,
    p: &[f64],
    grid: GridSpec,
    delta: f64,
    tol: f64,
    max_iter: usize,
    init: Option<&[f64]>,
) -> Result<DiscountedSolution> {
    if !(delta > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidArgument("delta and tol must be positive".into()));
    }
    if grid.dim() != ham.dim() {
        return Err(Error::InvalidArgument("grid and problem dimensions differ".into()));
    }
    let shift = shift_of(p, grid.dim())?;
    let sigma = grid.sample(|x| ham.sigma.eval(x));
    let theta = ham.sigma.sigma_max() * law.lipschitz();
    let lf = LaxFriedrichs::new(grid, theta);
    let dt = lf.discounted_step(delta);
    let dim = grid.dim();
    let hamf = |i: usize, q: [f64; 2]| {
        let r = if dim == 1 { q[0].abs() } else { (q[0] * q[0] + q[1] * q[1]).sqrt() };
        sigma[i] * law.eval(r)
    };

    let n = grid.len();
    let mut w: Vec<f64> = match init {
        Some(u0) if u0.len() == n => u0.to_vec(),
        Some(_) => return Err(Error::InvalidArgument("warm start has the wrong length".into())),
        None => vec![0.0; n],
    };
    let center = |w: &mut [f64]| {
        let m = w.iter().sum::<f64>() / n as f64;
        w.iter_mut().for_each(|v| *v -= m);
    };
    center(&mut w);

    let mut hval = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut mean_h = 0.0;
    let mut iterations = 0;
    while iterations < max_iter {
        lf.apply(&w, shift, hamf, &mut hval);
        mean_h = hval.iter().sum::<f64>() / n as f64;
        residual = w
            .iter()
            .zip(&hval)
            .map(|(wi, hi)| (delta * wi + hi - mean_h).abs())
            .fold(0.0, f64::max);
        if residual < tol {
            break;
        }
        for (wi, hi) in w.iter_mut().zip(&hval) {
            *wi -= dt * (delta * *wi + hi - mean_h);
        }
        iterations += 1;
        if iterations % 4096 == 0 {
            center(&mut w);
        }
    }
    if residual >= tol {
        return Err(Error::NonConvergence { iterations, residual });
    }
    let offset = mean_h / delta;
    let u = w.iter().map(|wi| wi - offset).collect();
    Ok(DiscountedSolution { u, delta, iterations, residual })
}

/// Mean and spread of `-δ u_δ`.
pub fn extract_critical(u_delta: &[f64], delta: f64) -> CriticalEstimate {
    let n = u_delta.len() as f64;
    let vals = u_delta.iter().map(|v| -delta * v);
    let (sum, lo, hi) = vals.fold((0.0, f64::INFINITY, f64::NEG_INFINITY), |(s, lo, hi), v| {
        (s + v, lo.min(v), hi.max(v))
    });
    CriticalEstimate { value: sum / n, spread: hi - lo }
}

/// Solution of the approximate cell problem with index `n`.
#[derive(Debug, Clone, Serialize)]
pub struct CellSolution {
    pub p: Vec<f64>,
    pub n: u32,
    /// Corrector normalized so that its grid minimum is 0.
    #[serde(skip)]
    pub u: Vec<f64>,
    pub hbar_n: f64,
    /// Largest one-sided slope of `u + ⟨P, x⟩`.
    pub grad_bound: f64,
    /// Final discounted residual `max |δ u + Ĥ|`.
    pub residual: f64,
    pub spread: f64,
    pub delta_used: f64,
    pub iterations: usize,
    /// `(δ, estimate)` for every level of the schedule.
    pub history: Vec<(f64, f64)>,
}

/// Runs the discount schedule for `M_n`, warm-starting each level from the last.
pub fn solve_cell(ham: &Hamiltonian, p: &[f64], n: u32, cfg: &CellConfig) -> Result<CellSolution> {
    solve_cell_from(ham, p, n, cfg, None)
}

/// [`solve_cell`] warm-started from a previous corrector, in which case only the
/// final discount level is run.
pub fn solve_cell_from(
    ham: &Hamiltonian,
    p: &[f64],
    n: u32,
    cfg: &CellConfig,
    warm: Option<&[f64]>,
) -> Result<CellSolution> {
    cfg.validate()?;
    let approx = Approximant::new(&ham.kinetic, n)?;
    // A warm start is already a small-δ solution: skip straight to the tail of the
    // schedule (two levels when extrapolating).
    let levels = match warm {
        Some(_) if cfg.richardson => &cfg.deltas[cfg.deltas.len().saturating_sub(2)..],
        Some(_) => &cfg.deltas[cfg.deltas.len() - 1..],
        None => &cfg.deltas[..],
    };
    let mut current: Option<Vec<f64>> = warm.map(|w| w.to_vec());
    let mut history = Vec::with_capacity(levels.len());
    let mut iterations = 0;
    let mut last = None;
    for &delta in levels {
        let sol = solve_discounted(ham, &approx, p, cfg.grid, delta, cfg.tol, cfg.max_iter, current.as_deref())?;
        iterations += sol.iterations;
        let est = extract_critical(&sol.u, delta);
        history.push((delta, est.value));
        current = Some(sol.u.clone());
        last = Some((sol, est));
    }
    let (sol, est) = last.expect("non-empty schedule");

    let mut hbar = est.value;
    if cfg.richardson && history.len() >= 2 {
        let (d1, h1) = history[history.len() - 2];
        let (d2, h2) = history[history.len() - 1];
        hbar = (d1 * h2 - d2 * h1) / (d1 - d2);
    }

    let min_u = sol.u.iter().copied().fold(f64::INFINITY, f64::min);
    let u: Vec<f64> = sol.u.iter().map(|v| v - min_u).collect();
    let shift = shift_of(p, cfg.grid.dim())?;
    let grad = gradient_bound(&cfg.grid, &u, shift);

    let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mn = approx.eval(r);
    let slack = 2.0 * cfg.tol + 1e-12;
    let lower = ham.sigma.sigma_min() * mn - slack;
    let upper = ham.sigma.sigma_max() * mn + slack;
    if !cfg.richardson && (hbar < lower || hbar > upper) {
        return Err(Error::SchemeFailure(format!(
            "critical value {hbar} outside sandwich [{lower}, {upper}] at P = {p:?}, n = {n}"
        )));
    }

    Ok(CellSolution {
        p: p.to_vec(),
        n,
        u,
        hbar_n: hbar,
        grad_bound: grad,
        residual: sol.residual,
        spread: est.spread,
        delta_used: sol.delta,
        iterations,
        history,
    })
}
