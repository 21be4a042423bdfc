//! Evolution problems `u_t + H(x/ε, D u) = 0` on the unit torus, their effective
//! counterpart `u_t + H̄_∞(D u) = 0`, and the two experiments built on them: the
//! `ε`-sweep (homogenization) and the relaxed-limit gap (its failure when
//! `σ_max m_0 > σ_min`).
//!
//! With `ε = 1/k` the oscillating coefficient `σ(x/ε) = σ(k x)` is 1-periodic in
//! `x`, so the torus carries the problem exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::effective::{build_table, sufficient_condition_full_solvability, EffectiveConfig, EffectiveTable, Lattice};
use crate::error::{Error, Result};
use crate::model::Hamiltonian;
use crate::onedim::{solvability_interval, OneDimProblem, Solvability};
use crate::scheme::{gradient_bound, GridSpec, LaxFriedrichs};

/// Minimum grid cells per period of `σ(x/ε)`.
pub const MIN_CELLS_PER_PERIOD: usize = 32;

/// Periodic initial data with known Lipschitz constants. The trigonometric presets
/// are sums over coordinates, e.g. `A (sin 2πx₁ + sin 2πx₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", content = "amplitude", rename_all = "kebab-case")]
pub enum InitialDatum {
    Constant(f64),
    Sine(f64),
    Cosine(f64),
}

impl InitialDatum {
    pub fn eval(&self, x: &[f64]) -> f64 {
        use std::f64::consts::TAU;
        match *self {
            InitialDatum::Constant(c) => c,
            InitialDatum::Sine(a) => a * x.iter().map(|v| (TAU * v).sin()).sum::<f64>(),
            InitialDatum::Cosine(a) => a * x.iter().map(|v| (TAU * v).cos()).sum::<f64>(),
        }
    }

    /// Exact `Lip[u_0]` in the Euclidean norm: `2π|A|√N` for the trigonometric presets.
    pub fn lipschitz(&self, dim: usize) -> f64 {
        match *self {
            InitialDatum::Constant(_) => 0.0,
            InitialDatum::Sine(a) | InitialDatum::Cosine(a) => std::f64::consts::TAU * a.abs() * (dim as f64).sqrt(),
        }
    }

    pub fn sup_norm(&self, dim: usize) -> f64 {
        match *self {
            InitialDatum::Constant(c) => c.abs(),
            InitialDatum::Sine(a) | InitialDatum::Cosine(a) => a.abs() * dim as f64,
        }
    }
}

/// `u_t + H(x/ε, D u) = 0`, `u(·, 0) = u_0`, with `ε = 1/k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolutionProblem {
    pub u0: InitialDatum,
    pub t_final: f64,
    pub eps_inverse: u32,
}

impl EvolutionProblem {
    pub fn new(u0: InitialDatum, t_final: f64, eps_inverse: u32) -> Result<Self> {
        if eps_inverse == 0 {
            return Err(Error::InvalidArgument("ε = 1/k needs k ≥ 1".into()));
        }
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::InvalidArgument("final time must be positive".into()));
        }
        Ok(Self { u0, t_final, eps_inverse })
    }

    pub fn epsilon(&self) -> f64 {
        1.0 / self.eps_inverse as f64
    }
}

/// Constants bounding the time and space moduli of `u^ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularityBudget {
    pub lip_u0: f64,
    /// `σ_max m(Lip[u_0])`.
    pub l_time: f64,
    /// `m⁻¹((σ_max/σ_min) m(Lip[u_0]))`, infinite when the argument reaches `sup m`.
    pub k_space: f64,
    /// `m(Lip[u_0]) < σ_min / σ_max`, evaluated with the exact model constants.
    pub assumption2: bool,
}

pub fn regularity_budget(ham: &Hamiltonian, u0: &InitialDatum) -> RegularityBudget {
    let lip = u0.lipschitz(ham.dim());
    let (lo, hi) = (ham.sigma.sigma_min(), ham.sigma.sigma_max());
    let m_lip = ham.kinetic.eval(lip);
    let assumption2 = m_lip < lo / hi;
    let arg = hi / lo * m_lip;
    let k_space = if assumption2 { ham.kinetic.inverse(arg) } else { f64::INFINITY };
    RegularityBudget { lip_u0: lip, l_time: hi * m_lip, k_space, assumption2 }
}

/// Which homogenization hypothesis holds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionStatus {
    /// `D = R^N`, from the geometric sufficient condition or, in 1D, the exact
    /// solvability interval.
    pub full_solvability: bool,
    pub lipschitz_small: bool,
    pub explanation: String,
}

impl AssumptionStatus {
    pub fn holds(&self) -> bool {
        self.full_solvability || self.lipschitz_small
    }
}

pub fn check_assumptions(ham: &Hamiltonian, u0: &InitialDatum) -> AssumptionStatus {
    let mut full = sufficient_condition_full_solvability(ham);
    if !full && ham.dim() == 1 {
        if let Ok(pr) = OneDimProblem::from_hamiltonian(ham) {
            full = solvability_interval(&pr) == Solvability::Whole;
        }
    }
    let budget = regularity_budget(ham, u0);
    let ratio = ham.sigma.sigma_min() / ham.sigma.sigma_max();
    let m_lip = ham.kinetic.eval(budget.lip_u0);
    let explanation = format!(
        "D = R^N: {}; m(Lip[u0]) = m({:.6}) = {:.6} {} σ_min/σ_max = {:.6}",
        if full { "yes" } else { "not established" },
        budget.lip_u0,
        m_lip,
        if budget.assumption2 { "<" } else { "≥" },
        ratio
    );
    AssumptionStatus { full_solvability: full, lipschitz_small: budget.assumption2, explanation }
}

/// Lax–Friedrichs viscosity for the oscillatory problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Viscosity {
    /// `θ = σ_max L` at every node.
    Global,
    /// `θ_i = σ(x_i/ε) L`, still monotone; it erodes less at the minima of `σ`.
    Local,
}

/// Which time levels to keep.
#[derive(Debug, Clone, PartialEq)]
pub enum Snapshots {
    Final,
    At(Vec<f64>),
    All,
}

/// Recorded time levels of a grid solution.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: GridSpec,
    pub times: Vec<f64>,
    pub slices: Vec<Vec<f64>>,
    pub dt: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn final_slice(&self) -> &[f64] {
        self.slices.last().expect("at least one slice")
    }

    /// Slice recorded at time `t` (to within `1e-9`).
    pub fn slice_at(&self, t: f64) -> Option<&[f64]> {
        self.times.iter().position(|s| (s - t).abs() < 1e-9).map(|i| self.slices[i].as_slice())
    }

    /// Largest `max_x |u(x, t_{i+1}) − u(x, t_i)| / (t_{i+1} − t_i)` over recorded slices.
    pub fn time_modulus(&self) -> f64 {
        (1..self.times.len())
            .filter(|&i| self.times[i] > self.times[i - 1])
            .map(|i| {
                let dt = self.times[i] - self.times[i - 1];
                self.slices[i]
                    .iter()
                    .zip(&self.slices[i - 1])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
                    / dt
            })
            .fold(0.0, f64::max)
    }

    /// Largest one-sided spatial slope over recorded slices.
    pub fn space_slope(&self) -> f64 {
        self.slices.iter().map(|u| gradient_bound(&self.grid, u, [0.0; 2])).fold(0.0, f64::max)
    }
}

fn check_cfl(cfl: f64) -> Result<()> {
    if cfl > 0.0 && cfl <= 1.0 {
        Ok(())
    } else {
        Err(Error::Cfl { cfl })
    }
}

/// Forward Euler in time for `u_t + Ĥ = 0` with `Δt = cfl · h / (2 θ N)`, landing
/// exactly on every requested snapshot time. A non-finite `Ĥ` aborts the run.
#[allow(clippy::too_many_arguments)]
fn evolve<F>(
    grid: GridSpec,
    theta: f64,
    local: Option<&[f64]>,
    mut u: Vec<f64>,
    t_final: f64,
    cfl: f64,
    snaps: &Snapshots,
    ham: F,
) -> Result<Trajectory>
where
    F: Fn(usize, [f64; 2]) -> f64,
{
    check_cfl(cfl)?;
    let lf = LaxFriedrichs::new(grid, theta);
    let dt = cfl * grid.h() / (2.0 * theta * grid.dim() as f64);
    let mut targets: Vec<f64> = match snaps {
        Snapshots::Final | Snapshots::All => vec![t_final],
        Snapshots::At(ts) => {
            if ts.iter().any(|t| !(*t >= 0.0 && *t <= t_final)) {
                return Err(Error::InvalidArgument(format!("snapshot times must lie in [0, {t_final}]")));
            }
            ts.clone()
        }
    };
    targets.sort_by(|a, b| a.total_cmp(b));
    targets.dedup();

    let mut times = Vec::new();
    let mut slices = Vec::new();
    let record_all = matches!(snaps, Snapshots::All);
    if record_all || targets.first() == Some(&0.0) {
        times.push(0.0);
        slices.push(u.clone());
    }
    let last = targets.last().copied().unwrap_or(0.0);
    let mut hval = vec![0.0; u.len()];
    let mut t = 0.0;
    let mut steps = 0;
    let mut next = targets.iter().copied().filter(|&s| s > 0.0).peekable();
    while let Some(&target) = next.peek() {
        let tau = dt.min(target - t);
        match local {
            Some(th) => lf.apply_local(&u, [0.0; 2], &ham, th, &mut hval),
            None => lf.apply(&u, [0.0; 2], &ham, &mut hval),
        }
        if hval.iter().any(|v| !v.is_finite()) {
            return Err(Error::SchemeFailure(format!("non-finite Hamiltonian at t = {t}")));
        }
        for (ui, hi) in u.iter_mut().zip(&hval) {
            *ui -= tau * hi;
        }
        steps += 1;
        if target - t <= dt {
            t = target;
            next.next();
            times.push(t);
            slices.push(u.clone());
        } else {
            t += tau;
            if record_all {
                times.push(t);
                slices.push(u.clone());
            }
        }
        if t >= last {
            break;
        }
    }
    if slices.is_empty() {
        times.push(t);
        slices.push(u);
    }
    Ok(Trajectory { grid, times, slices, dt, steps })
}

/// Solves the oscillatory problem on `grid`, which must resolve each period of
/// `σ(x/ε)` with at least [`MIN_CELLS_PER_PERIOD`] cells.
pub fn solve_hje(
    ham: &Hamiltonian,
    problem: &EvolutionProblem,
    grid: GridSpec,
    cfl: f64,
    snaps: &Snapshots,
) -> Result<Trajectory> {
    solve_hje_with(ham, problem, grid, cfl, snaps, Viscosity::Global)
}

/// [`solve_hje`] with a choice of viscosity.
pub fn solve_hje_with(
    ham: &Hamiltonian,
    problem: &EvolutionProblem,
    grid: GridSpec,
    cfl: f64,
    snaps: &Snapshots,
    viscosity: Viscosity,
) -> Result<Trajectory> {
    if grid.dim() != ham.dim() {
        return Err(Error::InvalidArgument("grid and problem dimensions differ".into()));
    }
    check_cfl(cfl)?;
    let cells = grid.per_axis() as f64 * problem.epsilon();
    if cells < MIN_CELLS_PER_PERIOD as f64 {
        return Err(Error::UnderResolved { cells, required: MIN_CELLS_PER_PERIOD });
    }
    if let InitialDatum::Constant(c) = problem.u0 {
        let k = problem.eps_inverse as usize;
        if k > 1 && grid.per_axis().is_multiple_of(k) {
            return solve_one_period(ham, c, problem, grid, cfl, snaps, viscosity);
        }
    }
    let k = problem.eps_inverse as f64;
    let dim = grid.dim();
    let sigma = grid.sample(|x| {
        let y: Vec<f64> = x.iter().map(|v| k * v).collect();
        ham.sigma.eval(&y)
    });
    let u0 = grid.sample(|x| problem.u0.eval(x));
    let kinetic = &ham.kinetic;
    let local: Option<Vec<f64>> = match viscosity {
        Viscosity::Global => None,
        Viscosity::Local => Some(sigma.iter().map(|s| s * kinetic.lipschitz()).collect()),
    };
    evolve(grid, ham.p_lipschitz(), local.as_deref(), u0, problem.t_final, cfl, snaps, |i, q| {
        let r = if dim == 1 { q[0].abs() } else { q[0].hypot(q[1]) };
        sigma[i] * kinetic.eval(r)
    })
}

/// With constant data the solution is `ε`-periodic, and `u(x, t) = U(x/ε, t/ε) ε` where
/// `U` solves the `ε = 1` problem from `U_0 = C/ε`. The rescaled scheme has the same
/// one-sided slopes and is the same recursion, so one period is evolved and tiled.
fn solve_one_period(
    ham: &Hamiltonian,
    c: f64,
    problem: &EvolutionProblem,
    grid: GridSpec,
    cfl: f64,
    snaps: &Snapshots,
    viscosity: Viscosity,
) -> Result<Trajectory> {
    let k = problem.eps_inverse as usize;
    let kf = k as f64;
    let cell = GridSpec::new(grid.dim(), grid.per_axis() / k)?;
    let scaled = EvolutionProblem::new(InitialDatum::Constant(c * kf), problem.t_final * kf, 1)?;
    let cell_snaps = match snaps {
        Snapshots::At(ts) => Snapshots::At(ts.iter().map(|t| t * kf).collect()),
        other => other.clone(),
    };
    let coarse = solve_hje_with(ham, &scaled, cell, cfl, &cell_snaps, viscosity)?;
    let n = cell.per_axis();
    let tile = |u: &Vec<f64>| -> Vec<f64> {
        (0..grid.len())
            .map(|idx| {
                let src = match grid.dim() {
                    1 => idx % n,
                    _ => (idx / grid.per_axis() % n) * n + (idx % grid.per_axis()) % n,
                };
                u[src] / kf
            })
            .collect()
    };
    Ok(Trajectory {
        grid,
        times: coarse.times.iter().map(|t| t / kf).collect(),
        slices: coarse.slices.iter().map(tile).collect(),
        dt: coarse.dt / kf,
        steps: coarse.steps,
    })
}

/// Solves `u_t + H̄_∞(D u) = 0` with `H̄_∞` interpolated from `table`. Aborts with
/// [`Error::OutOfTable`] if the discrete gradient leaves the table.
pub fn solve_effective(
    u0: &InitialDatum,
    t_final: f64,
    table: &EffectiveTable,
    grid: GridSpec,
    cfl: f64,
    snaps: &Snapshots,
) -> Result<Trajectory> {
    if grid.dim() != table.dim() {
        return Err(Error::InvalidArgument("grid and table dimensions differ".into()));
    }
    let interp = table.interpolant()?;
    let dim = grid.dim();
    let first_error = std::sync::Mutex::new(None);
    let u = grid.sample(|x| u0.eval(x));
    let out = evolve(grid, table.lipschitz, None, u, t_final, cfl, snaps, |_, q| match interp.eval(&q[..dim]) {
        Ok(v) => v,
        Err(e) => {
            let mut slot = first_error.lock().expect("unpoisoned");
            slot.get_or_insert(e);
            f64::NAN
        }
    });
    if let Some(e) = first_error.into_inner().expect("unpoisoned") {
        return Err(e);
    }
    out
}

/// Closed-form envelopes `u_0 − σ(x/ε) t ≤ u^ε ≤ u_0 − σ(x/ε) m_0 t`.
#[derive(Debug, Clone)]
pub struct Envelopes {
    pub times: Vec<f64>,
    pub minus: Vec<Vec<f64>>,
    pub plus: Vec<Vec<f64>>,
}

pub fn envelopes(ham: &Hamiltonian, problem: &EvolutionProblem, grid: GridSpec, times: &[f64]) -> Envelopes {
    let k = problem.eps_inverse as f64;
    let sigma = grid.sample(|x| {
        let y: Vec<f64> = x.iter().map(|v| k * v).collect();
        ham.sigma.eval(&y)
    });
    let u0 = grid.sample(|x| problem.u0.eval(x));
    let m0 = ham.kinetic.m0();
    let build = |factor: f64| -> Vec<Vec<f64>> {
        times
            .iter()
            .map(|&t| u0.iter().zip(&sigma).map(|(u, s)| u - s * factor * t).collect())
            .collect()
    };
    Envelopes { times: times.to_vec(), minus: build(1.0), plus: build(m0) }
}

/// Largest violation of `u_minus ≤ u ≤ u_plus` over the slices of `traj`.
pub fn envelope_violation(ham: &Hamiltonian, problem: &EvolutionProblem, traj: &Trajectory) -> f64 {
    let env = envelopes(ham, problem, traj.grid, &traj.times);
    traj.slices
        .iter()
        .enumerate()
        .flat_map(|(s, u)| {
            let (lo, hi) = (&env.minus[s], &env.plus[s]);
            u.iter().enumerate().map(move |(i, v)| (lo[i] - v).max(v - hi[i]).max(0.0))
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    /// The `k` of `ε = 1/k`, coarsest first.
    pub eps_inverse: Vec<u32>,
    pub cells_per_period: usize,
    pub cfl: f64,
    /// Lattice spacing of the effective table.
    pub table_spacing: f64,
    /// Overrides the table radius (default: `K_space`, or `1.25 Lip[u_0]` without a budget).
    pub table_radius: Option<f64>,
    /// Time levels used for the moduli, in addition to `T/2` and `T`.
    pub modulus_levels: usize,
    pub viscosity: Viscosity,
    /// Run even when neither assumption holds.
    pub force: bool,
}

impl SweepConfig {
    pub fn new(eps_inverse: Vec<u32>) -> Self {
        Self {
            eps_inverse,
            cells_per_period: 64,
            cfl: 0.9,
            table_spacing: 0.05,
            table_radius: None,
            modulus_levels: 16,
            viscosity: Viscosity::Global,
            force: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_inverse.is_empty() || self.eps_inverse.contains(&0) {
            return Err(Error::InvalidArgument("ε-list must be non-empty with ε = 1/k, k ≥ 1".into()));
        }
        if self.cells_per_period < MIN_CELLS_PER_PERIOD {
            return Err(Error::UnderResolved { cells: self.cells_per_period as f64, required: MIN_CELLS_PER_PERIOD });
        }
        check_cfl(self.cfl)?;
        if !(self.table_spacing > 0.0) {
            return Err(Error::InvalidArgument("table spacing must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVerdict {
    Converging,
    NotConverging,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub points_per_axis: usize,
    /// Max over common coarse nodes at `T/2` and `T` of `|u^ε − u|`.
    pub error: f64,
    pub time_modulus: f64,
    pub space_slope: f64,
    pub envelope_violation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub assumptions: AssumptionStatus,
    pub budget: RegularityBudget,
    pub table_radius: f64,
    pub table_partial: bool,
    pub effective_points_per_axis: usize,
    pub rows: Vec<SweepRow>,
    pub decreasing: bool,
    pub verdict: SweepVerdict,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Restriction of a fine grid function to the nodes of a coarser grid that divides it.
fn restrict(fine: &GridSpec, u: &[f64], coarse_per_axis: usize) -> Vec<f64> {
    let stride = fine.per_axis() / coarse_per_axis;
    match fine.dim() {
        1 => (0..coarse_per_axis).map(|i| u[i * stride]).collect(),
        _ => (0..coarse_per_axis * coarse_per_axis)
            .map(|c| {
                let (i, j) = (c / coarse_per_axis, c % coarse_per_axis);
                u[i * stride * fine.per_axis() + j * stride]
            })
            .collect(),
    }
}

/// Homogenization study: solves the oscillatory problem for every `ε` and compares
/// it with the effective solution at `T/2` and `T`.
///
/// The effective table is computed with the same cell resolution as the oscillatory
/// runs, so both discretizations share one discrete effective Hamiltonian.
pub fn epsilon_sweep(
    ham: &Hamiltonian,
    u0: &InitialDatum,
    t_final: f64,
    cfg: &SweepConfig,
    table_cfg: Option<EffectiveConfig>,
) -> Result<(SweepReport, EffectiveTable)> {
    cfg.validate()?;
    let assumptions = check_assumptions(ham, u0);
    if !assumptions.holds() && !cfg.force {
        return Err(Error::AssumptionRefused(assumptions.explanation));
    }
    let budget = regularity_budget(ham, u0);
    let dim = ham.dim();

    let radius = cfg.table_radius.unwrap_or(if budget.k_space.is_finite() {
        budget.k_space
    } else {
        1.25 * budget.lip_u0
    }) + cfg.table_spacing;
    let table_cfg = match table_cfg {
        Some(c) => c,
        None => {
            let cell_tol = if dim == 1 { 1e-8 } else { 1e-6 };
            let cell = crate::cell::CellConfig::with_grid(GridSpec::new(dim, cfg.cells_per_period)?, cell_tol)?;
            EffectiveConfig::new(ham, cell)
        }
    };
    let table = build_table(ham, Lattice::new(dim, radius, cfg.table_spacing)?, &table_cfg)?;

    let half = 0.5 * t_final;
    let levels = cfg.modulus_levels.max(2);
    let mut times: Vec<f64> = (0..=levels).map(|j| t_final * j as f64 / levels as f64).collect();
    times.push(half);
    let snaps = Snapshots::At(times);

    let k_max = *cfg.eps_inverse.iter().max().expect("non-empty");
    let eff_grid = GridSpec::new(dim, cfg.cells_per_period * k_max as usize)?;
    let eff = solve_effective(u0, t_final, &table, eff_grid, cfg.cfl, &Snapshots::At(vec![half, t_final]))?;

    let coarse = cfg
        .eps_inverse
        .iter()
        .map(|&k| cfg.cells_per_period * k as usize)
        .fold(eff_grid.per_axis(), gcd);

    let rows: Vec<SweepRow> = cfg
        .eps_inverse
        .par_iter()
        .map(|&k| -> Result<SweepRow> {
            let problem = EvolutionProblem::new(*u0, t_final, k)?;
            let grid = GridSpec::new(dim, cfg.cells_per_period * k as usize)?;
            let traj = solve_hje_with(ham, &problem, grid, cfg.cfl, &snaps, cfg.viscosity)?;
            let mut error: f64 = 0.0;
            for t in [half, t_final] {
                let a = restrict(&grid, traj.slice_at(t).expect("recorded"), coarse);
                let b = restrict(&eff_grid, eff.slice_at(t).expect("recorded"), coarse);
                error = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(error, f64::max);
            }
            Ok(SweepRow {
                eps: problem.epsilon(),
                points_per_axis: grid.per_axis(),
                error,
                time_modulus: traj.time_modulus(),
                space_slope: traj.space_slope(),
                envelope_violation: envelope_violation(ham, &problem, &traj),
            })
        })
        .collect::<Result<_>>()?;
    let decreasing = rows.windows(2).all(|w| w[1].error < w[0].error);
    let report = SweepReport {
        assumptions,
        budget,
        table_radius: radius,
        table_partial: table.partial,
        effective_points_per_axis: eff_grid.per_axis(),
        rows,
        decreasing,
        verdict: if decreasing { SweepVerdict::Converging } else { SweepVerdict::NotConverging },
    };
    Ok((report, table))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapConfig {
    pub eps_inverse: Vec<u32>,
    pub cells_per_period: usize,
    pub cfl: f64,
    /// Shrinking radii of the space-time balls, largest first.
    pub deltas: Vec<f64>,
    pub viscosity: Viscosity,
}

impl GapConfig {
    /// Local viscosity by default: the global one flattens the peaks of `u^ε` over
    /// the minima of `σ`, which is exactly where the upper limit is read off.
    pub fn new(eps_inverse: Vec<u32>) -> Self {
        Self {
            eps_inverse,
            cells_per_period: 32,
            cfl: 0.9,
            deltas: vec![0.1, 0.05, 0.025],
            viscosity: Viscosity::Local,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GapRow {
    pub eps: f64,
    /// `sup − inf` of `u^ε` over the smallest ball.
    pub gap_estimate: f64,
    pub envelope_violation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub x_probe: Vec<f64>,
    pub t_probe: f64,
    /// `(δ, upper, lower)` for every radius.
    pub levels: Vec<(f64, f64, f64)>,
    pub upper: f64,
    pub lower: f64,
    pub gap: f64,
    /// `(σ_max m_0 − σ_min) t_probe`, the envelope separation.
    pub envelope_separation: f64,
    pub rows: Vec<GapRow>,
    pub max_envelope_violation: f64,
}

fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).rem_euclid(1.0);
            let d = d.min(1.0 - d);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// One ε: `ε`, (sup, inf) of `u^ε` per ball, envelope violation.
type EpsProbe = (f64, Vec<(f64, f64)>, f64);

/// Estimates the half-relaxed limits of `u^ε` at `(x_probe, t_probe)` by nested
/// sup/inf over balls of radius `δ` in space and time and over `ε < δ`.
pub fn non_homog_gap(
    ham: &Hamiltonian,
    u0: &InitialDatum,
    x_probe: &[f64],
    t_probe: f64,
    cfg: &GapConfig,
) -> Result<GapReport> {
    let gap_size = ham.value_at_zero() - ham.sigma.sigma_min();
    if !(gap_size > 0.0) {
        return Err(Error::Precondition(format!(
            "non-homogenization needs σ_max m_0 > σ_min, got {} ≤ {}",
            ham.value_at_zero(),
            ham.sigma.sigma_min()
        )));
    }
    if cfg.eps_inverse.len() < 6 || cfg.eps_inverse.contains(&0) {
        return Err(Error::InvalidArgument("need at least 6 values ε = 1/k".into()));
    }
    if x_probe.len() != ham.dim() || !(t_probe >= 0.0) {
        return Err(Error::InvalidArgument("probe point has the wrong dimension or negative time".into()));
    }
    if cfg.deltas.is_empty() || cfg.deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::InvalidArgument("radii must be positive".into()));
    }
    let d_max = cfg.deltas.iter().copied().fold(0.0, f64::max);
    let d_min = cfg.deltas.iter().copied().fold(f64::INFINITY, f64::min);
    let step = 0.5 * d_min;
    let reach = (d_max / step).ceil() as i64;
    let times: Vec<f64> = (-reach..=reach)
        .map(|j| t_probe + j as f64 * step)
        .filter(|&t| t >= 0.0)
        .collect();
    let t_final = times.last().copied().unwrap_or(t_probe).max(step);
    let dim = ham.dim();

    // Per ε: sup and inf of u^ε over each ball, and the envelope check.
    let per_eps: Vec<EpsProbe> = cfg
        .eps_inverse
        .par_iter()
        .map(|&k| -> Result<_> {
            let problem = EvolutionProblem::new(*u0, t_final, k)?;
            let grid = GridSpec::new(dim, cfg.cells_per_period * k as usize)?;
            let traj = solve_hje_with(ham, &problem, grid, cfg.cfl, &Snapshots::At(times.clone()), cfg.viscosity)?;
            let violation = envelope_violation(ham, &problem, &traj);
            let dist: Vec<f64> = (0..grid.len()).map(|i| torus_distance(&grid.coords(i)[..dim], x_probe)).collect();
            let balls = cfg
                .deltas
                .iter()
                .map(|&d| {
                    let mut hi = f64::NEG_INFINITY;
                    let mut lo = f64::INFINITY;
                    for (t, u) in traj.times.iter().zip(&traj.slices) {
                        if (t - t_probe).abs() >= d {
                            continue;
                        }
                        for (v, r) in u.iter().zip(&dist) {
                            if *r < d {
                                hi = hi.max(*v);
                                lo = lo.min(*v);
                            }
                        }
                    }
                    (hi, lo)
                })
                .collect();
            Ok((problem.epsilon(), balls, violation))
        })
        .collect::<Result<_>>()?;

    let mut levels = Vec::new();
    for (li, &d) in cfg.deltas.iter().enumerate() {
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for (eps, balls, _) in &per_eps {
            if *eps < d {
                hi = hi.max(balls[li].0);
                lo = lo.min(balls[li].1);
            }
        }
        levels.push((d, hi, lo));
    }
    let (_, upper, lower) = levels
        .iter()
        .copied()
        .filter(|(_, hi, lo)| hi.is_finite() && lo.is_finite())
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| Error::InvalidArgument("no ε below the smallest radius".into()))?;
    let smallest = cfg
        .deltas
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty");
    let rows = per_eps
        .iter()
        .map(|(eps, balls, v)| GapRow { eps: *eps, gap_estimate: balls[smallest].0 - balls[smallest].1, envelope_violation: *v })
        .collect::<Vec<_>>();
    let max_violation = rows.iter().map(|r| r.envelope_violation).fold(0.0, f64::max);
    Ok(GapReport {
        x_probe: x_probe.to_vec(),
        t_probe,
        levels,
        upper,
        lower,
        gap: upper - lower,
        envelope_separation: gap_size * t_probe,
        rows,
        max_envelope_violation: max_violation,
    })
}
