//! Monotone Lax–Friedrichs discretization on the periodic unit grid.
//!
//! The numerical Hamiltonian is
//!
//! ```text
//! Ĥ(x, p⁻, p⁺) = H(x, (p⁻ + p⁺)/2 + P) − (θ/2) Σ_i (p⁺_i − p⁻_i)
//! ```
//!
//! with one-sided differences `p^±` and `θ` at least the `p`-Lipschitz constant of
//! `H`, which makes every explicit update below order-preserving under its CFL bound.

use serde::Serialize;

use crate::error::{Error, Result};

/// Smallest admissible number of points per axis.
pub const MIN_POINTS_PER_AXIS: usize = 16;

/// Uniform periodic grid on `[0, 1)^dim`, row-major in 2D.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridSpec {
    dim: usize,
    per_axis: usize,
}

impl GridSpec {
    pub fn new(dim: usize, per_axis: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidArgument(format!("grid dimension {dim} not supported")));
        }
        if per_axis < MIN_POINTS_PER_AXIS {
            return Err(Error::InvalidArgument(format!(
                "{per_axis} points per axis, need at least {MIN_POINTS_PER_AXIS}"
            )));
        }
        Ok(Self { dim, per_axis })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn h(&self) -> f64 {
        1.0 / self.per_axis as f64
    }

    pub fn len(&self) -> usize {
        self.per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinates of node `idx`; unused coordinates are zero.
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let h = self.h();
        match self.dim {
            1 => [idx as f64 * h, 0.0],
            _ => [(idx / self.per_axis) as f64 * h, (idx % self.per_axis) as f64 * h],
        }
    }

    /// Samples `f` at every node.
    pub fn sample<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|i| f(&self.coords(i)[..self.dim])).collect()
    }

    /// Index of the neighbour of `idx` one step along `axis` (`forward` or backward).
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, forward: bool) -> usize {
        let k = self.per_axis;
        let step = |i: usize| if forward { (i + 1) % k } else { (i + k - 1) % k };
        match (self.dim, axis) {
            (1, _) => step(idx),
            (_, 0) => step(idx / k) * k + idx % k,
            _ => (idx / k) * k + step(idx % k),
        }
    }
}

/// The numerical Hamiltonian of a grid with viscosity `θ`.
#[derive(Debug, Clone, Copy)]
pub struct LaxFriedrichs {
    pub grid: GridSpec,
    pub theta: f64,
}

impl LaxFriedrichs {
    pub fn new(grid: GridSpec, theta: f64) -> Self {
        Self { grid, theta }
    }

    /// Writes `Ĥ` at every node into `out`. `ham(i, q)` evaluates the continuous
    /// Hamiltonian at node `i` for the shifted central gradient `q`.
    pub fn apply<F>(&self, u: &[f64], shift: [f64; 2], ham: F, out: &mut [f64])
    where
        F: Fn(usize, [f64; 2]) -> f64,
    {
        let theta = self.theta;
        self.apply_impl(u, shift, ham, |_| theta, out)
    }

    /// [`apply`](Self::apply) with a node-dependent viscosity (local Lax–Friedrichs).
    /// Monotone as long as `theta_at[i]` bounds the `p`-Lipschitz constant of
    /// `ham(i, ·)`; the time step must still be chosen from the largest value.
    pub fn apply_local<F>(&self, u: &[f64], shift: [f64; 2], ham: F, theta_at: &[f64], out: &mut [f64])
    where
        F: Fn(usize, [f64; 2]) -> f64,
    {
        self.apply_impl(u, shift, ham, |i| theta_at[i], out)
    }

    #[inline(always)]
    fn apply_impl<F, V>(&self, u: &[f64], shift: [f64; 2], ham: F, visc: V, out: &mut [f64])
    where
        F: Fn(usize, [f64; 2]) -> f64,
        V: Fn(usize) -> f64,
    {
        let g = &self.grid;
        let inv_h = 1.0 / g.h();
        match g.dim {
            1 => {
                let k = g.per_axis;
                for i in 0..k {
                    let ui = u[i];
                    let pm = (ui - u[(i + k - 1) % k]) * inv_h;
                    let pp = (u[(i + 1) % k] - ui) * inv_h;
                    let q = [0.5 * (pm + pp) + shift[0], 0.0];
                    out[i] = ham(i, q) - 0.5 * visc(i) * (pp - pm);
                }
            }
            _ => {
                for (i, o) in out.iter_mut().enumerate().take(g.len()) {
                    let ui = u[i];
                    let mut q = [0.0; 2];
                    let mut lap = 0.0;
                    for (axis, qa) in q.iter_mut().enumerate() {
                        let pm = (ui - u[g.neighbor(i, axis, false)]) * inv_h;
                        let pp = (u[g.neighbor(i, axis, true)] - ui) * inv_h;
                        *qa = 0.5 * (pm + pp) + shift[axis];
                        lap += pp - pm;
                    }
                    *o = ham(i, q) - 0.5 * visc(i) * lap;
                }
            }
        }
    }

    /// Largest explicit step keeping `u − Δt (δ u + Ĥ)` monotone with the safety
    /// factor used throughout: `Δt = h / (2 θ N + δ h)`.
    pub fn discounted_step(&self, delta: f64) -> f64 {
        let h = self.grid.h();
        h / (2.0 * self.theta * self.grid.dim as f64 + delta * h)
    }
}

/// Largest one-sided slope magnitude of `u + ⟨shift, x⟩`, combined over axes.
pub fn gradient_bound(grid: &GridSpec, u: &[f64], shift: [f64; 2]) -> f64 {
    let inv_h = 1.0 / grid.h();
    (0..grid.len())
        .map(|i| {
            (0..grid.dim)
                .map(|axis| {
                    let pm = (u[i] - u[grid.neighbor(i, axis, false)]) * inv_h + shift[axis];
                    let pp = (u[grid.neighbor(i, axis, true)] - u[i]) * inv_h + shift[axis];
                    let s = pm.abs().max(pp.abs());
                    s * s
                })
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

/// One plain pseudo-time step of the discounted scheme, `u − Δt (δ u + Ĥ(D u))`.
pub fn discounted_update<F>(lf: &LaxFriedrichs, u: &[f64], shift: [f64; 2], delta: f64, dt: f64, ham: F) -> Vec<f64>
where
    F: Fn(usize, [f64; 2]) -> f64,
{
    let mut hval = vec![0.0; u.len()];
    lf.apply(u, shift, ham, &mut hval);
    u.iter().zip(&hval).map(|(ui, hi)| ui - dt * (delta * ui + hi)).collect()
}

/// One forward-Euler step of `u_t + Ĥ(D u) = 0`.
pub fn evolution_update<F>(lf: &LaxFriedrichs, u: &[f64], dt: f64, ham: F) -> Vec<f64>
where
    F: Fn(usize, [f64; 2]) -> f64,
{
    let mut hval = vec![0.0; u.len()];
    lf.apply(u, [0.0; 2], ham, &mut hval);
    u.iter().zip(&hval).map(|(ui, hi)| ui - dt * hi).collect()
}
