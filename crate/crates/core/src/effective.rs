//! The generalized effective Hamiltonian `H̄_∞(P)`.
//!
//! `H̄_∞(P)` is reached through the coercive ladder `M_n`, `n = n_0, 2 n_0, …`:
//! once the discrete corrector never leaves the region where `M_n = m`, raising
//! `n` cannot change the discrete problem, so the value has locked in. Points whose
//! correctors keep outgrowing `α_n` are the numerical signature of `P ∉ D`.

use rayon::prelude::*;
use serde::Serialize;

use crate::cell::{solve_cell_from, CellConfig};
use crate::error::{Error, Result};
use crate::model::{check_regime, Approximant, Hamiltonian, Regime};

/// Ladder and classification settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveConfig {
    pub cell: CellConfig,
    pub n0: u32,
    pub n_max: u32,
    /// Stabilization tolerance on `|H̄_n − H̄_{n/2}|`.
    pub stab_tol: f64,
    /// Accuracy of the discrete values against the continuum, used as `tol` in the
    /// structural invariants (sandwich, symmetry, Lipschitz, ray monotonicity).
    pub scheme_tol: f64,
}

impl EffectiveConfig {
    /// Defaults for `ham` on `cell`: `n_0 = 1`, `n_max = 64`, and a scheme
    /// tolerance of `θ h` (one cell of Lax–Friedrichs smearing).
    pub fn new(ham: &Hamiltonian, cell: CellConfig) -> Self {
        let stab_tol = (100.0 * cell.tol).max(1e-6);
        let scheme_tol = ham.p_lipschitz() * cell.grid.h();
        Self { cell, n0: 1, n_max: 64, stab_tol, scheme_tol }
    }

    pub fn default_for(ham: &Hamiltonian) -> Result<Self> {
        Ok(Self::new(ham, CellConfig::default_for(ham.dim())?))
    }

    pub fn validate(&self) -> Result<()> {
        self.cell.validate()?;
        if self.n0 == 0 || self.n_max < self.n0 {
            return Err(Error::InvalidArgument("ladder needs 1 ≤ n0 ≤ n_max".into()));
        }
        if !(self.stab_tol > 0.0) || !(self.scheme_tol >= 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        Ok(())
    }

    /// `max(5 · iteration tol, 10⁻³ σ_min)`.
    pub fn classification_threshold(&self, ham: &Hamiltonian) -> f64 {
        (5.0 * self.cell.tol).max(1e-3 * ham.sigma.sigma_min())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    InD,
    NotInD,
    Uncertain,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::InD => "in-D",
            Verdict::NotInD => "not-in-D",
            Verdict::Uncertain => "uncertain",
        }
    }
}

/// One rung of the `n`-ladder.
#[derive(Debug, Clone, Serialize)]
pub struct LadderStep {
    pub n: u32,
    pub alpha_n: f64,
    pub hbar_n: f64,
    pub grad_bound: f64,
    pub residual: f64,
    pub spread: f64,
    pub iterations: usize,
}

impl LadderStep {
    /// The corrector stays where `M_n = m`.
    pub fn untouched(&self, p_norm: f64) -> bool {
        self.grad_bound + p_norm <= self.alpha_n
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EffectivePoint {
    pub p: Vec<f64>,
    pub hbar_inf: f64,
    pub n_star: u32,
    pub verdict: Verdict,
    /// `σ_min − H̄_∞(P)`.
    pub margin: f64,
    pub grad_bound_at_n_star: f64,
    /// Both ladder criteria held at `n_star`.
    pub stabilized: bool,
    pub ladder: Vec<LadderStep>,
    /// Why the point is uncertain, when it is.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl EffectivePoint {
    pub fn p_norm(&self) -> f64 {
        norm(&self.p)
    }

    /// Signed slack of `max{σ_min m(|P|), σ_max m_0} − tol ≤ H̄ ≤ σ_max m(|P|) + tol`;
    /// negative means violated.
    pub fn sandwich_slack(&self, ham: &Hamiltonian, tol: f64) -> f64 {
        let (lo, hi) = sandwich_bounds(ham, self.p_norm());
        (self.hbar_inf - (lo - tol)).min(hi + tol - self.hbar_inf)
    }

    fn uncertain(p: &[f64], note: String) -> Self {
        Self {
            p: p.to_vec(),
            hbar_inf: f64::NAN,
            n_star: 0,
            verdict: Verdict::Uncertain,
            margin: f64::NAN,
            grad_bound_at_n_star: f64::NAN,
            stabilized: false,
            ladder: vec![],
            note: Some(note),
        }
    }
}

fn norm(p: &[f64]) -> f64 {
    p.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Lower and upper continuum bounds for `H̄_∞(P)` at `|P| = r`.
pub fn sandwich_bounds(ham: &Hamiltonian, r: f64) -> (f64, f64) {
    let m = ham.kinetic.eval(r);
    let lo = (ham.sigma.sigma_min() * m).max(ham.value_at_zero());
    (lo, ham.sigma.sigma_max() * m)
}

/// Runs the ladder at `P` and classifies it.
pub fn effective_hamiltonian(ham: &Hamiltonian, p: &[f64], cfg: &EffectiveConfig) -> Result<EffectivePoint> {
    cfg.validate()?;
    let p_norm = norm(p);
    let threshold = cfg.classification_threshold(ham);
    let sigma_min = ham.sigma.sigma_min();

    let mut ladder: Vec<LadderStep> = Vec::new();
    let mut warm: Option<Vec<f64>> = None;
    let mut n = cfg.n0;
    let mut stabilized = false;
    while n <= cfg.n_max {
        let sol = solve_cell_from(ham, p, n, &cfg.cell, warm.as_deref())?;
        let step = LadderStep {
            n,
            alpha_n: Approximant::new(&ham.kinetic, n)?.alpha_n(),
            hbar_n: sol.hbar_n,
            grad_bound: sol.grad_bound,
            residual: sol.residual,
            spread: sol.spread,
            iterations: sol.iterations,
        };
        let settled = ladder
            .last()
            .is_some_and(|prev| (step.hbar_n - prev.hbar_n).abs() < cfg.stab_tol && step.untouched(p_norm));
        ladder.push(step);
        warm = Some(sol.u);
        if settled {
            stabilized = true;
            break;
        }
        n = match n.checked_mul(2) {
            Some(v) => v,
            None => break,
        };
    }

    let last = ladder.last().expect("ladder runs at least once");
    let hbar_inf = last.hbar_n;
    let margin = sigma_min - hbar_inf;
    let empty = check_regime(ham) != Regime::SolvablePossible;
    let (verdict, note) = if empty {
        (Verdict::NotInD, None)
    } else if stabilized {
        if margin > threshold {
            (Verdict::InD, None)
        } else if margin < -threshold {
            (Verdict::NotInD, None)
        } else {
            (Verdict::Uncertain, Some(format!("|margin| = {:.3e} within threshold {threshold:.3e}", margin.abs())))
        }
    } else {
        let always_touching = ladder.iter().all(|s| !s.untouched(p_norm));
        let above = ladder.iter().all(|s| s.hbar_n >= sigma_min - threshold);
        if always_touching && above {
            (Verdict::NotInD, None)
        } else {
            (
                Verdict::Uncertain,
                Some(format!("ladder exhausted at n = {} without stabilizing", last.n)),
            )
        }
    };
    Ok(EffectivePoint {
        p: p.to_vec(),
        hbar_inf,
        n_star: last.n,
        verdict,
        margin,
        grad_bound_at_n_star: last.grad_bound,
        stabilized,
        ladder,
        note,
    })
}

/// Symmetric lattice `{k · spacing : |k| ≤ K}^N` with `K = floor(radius / spacing)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lattice {
    pub dim: usize,
    pub radius: f64,
    pub spacing: f64,
}

impl Lattice {
    pub fn new(dim: usize, radius: f64, spacing: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidArgument(format!("lattice dimension {dim} not supported")));
        }
        if !(spacing > 0.0) || !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument("lattice needs spacing > 0 and finite radius ≥ 0".into()));
        }
        Ok(Self { dim, radius, spacing })
    }

    /// Points per axis on each side of 0.
    pub fn half_count(&self) -> usize {
        (self.radius / self.spacing + 1e-9).floor() as usize
    }

    pub fn per_axis(&self) -> usize {
        2 * self.half_count() + 1
    }

    /// Largest coordinate actually on the lattice.
    pub fn extent(&self) -> f64 {
        self.half_count() as f64 * self.spacing
    }

    pub fn len(&self) -> usize {
        self.per_axis().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn coord(&self, i: usize) -> f64 {
        let k = i as f64 - self.half_count() as f64;
        // Spacing 1/q: divide, so 3 × 0.1 comes out as 0.3.
        let q = self.spacing.recip();
        if (q - q.round()).abs() < 1e-9 * q {
            k / q.round()
        } else {
            k * self.spacing
        }
    }

    /// Lattice points, row-major in 2D.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let k = self.per_axis();
        (0..self.len())
            .map(|idx| match self.dim {
                1 => vec![self.coord(idx)],
                _ => vec![self.coord(idx / k), self.coord(idx % k)],
            })
            .collect()
    }
}

/// Tabulated `H̄_∞` over a lattice.
#[derive(Debug, Clone, Serialize)]
pub struct EffectiveTable {
    pub lattice: Lattice,
    pub points: Vec<EffectivePoint>,
    /// Some point came back uncertain.
    pub partial: bool,
    /// Lipschitz constant `σ_max L` inherited by `H̄_∞`.
    pub lipschitz: f64,
    pub scheme_tol: f64,
    pub stab_tol: f64,
}

/// Computes every lattice point in parallel. Points whose ladder fails are kept as
/// uncertain with the error as note.
pub fn build_table(ham: &Hamiltonian, lattice: Lattice, cfg: &EffectiveConfig) -> Result<EffectiveTable> {
    cfg.validate()?;
    if lattice.dim != ham.dim() {
        return Err(Error::InvalidArgument("lattice and problem dimensions differ".into()));
    }
    let points: Vec<EffectivePoint> = lattice
        .points()
        .par_iter()
        .map(|p| effective_hamiltonian(ham, p, cfg).unwrap_or_else(|e| EffectivePoint::uncertain(p, e.to_string())))
        .collect();
    let partial = points.iter().any(|pt| pt.verdict == Verdict::Uncertain);
    Ok(EffectiveTable {
        lattice,
        points,
        partial,
        lipschitz: ham.p_lipschitz(),
        scheme_tol: cfg.scheme_tol,
        stab_tol: cfg.stab_tol,
    })
}

/// Outcome of one table invariant.
#[derive(Debug, Clone, Serialize)]
pub struct InvariantCheck {
    pub name: String,
    pub passed: bool,
    /// Smallest signed slack over all instances; negative when violated.
    pub worst_slack: f64,
    pub detail: String,
}

impl InvariantCheck {
    fn from_slacks(name: &str, slacks: impl Iterator<Item = (f64, String)>) -> Self {
        let (worst, at) = slacks.fold((f64::INFINITY, String::new()), |acc, (s, at)| if s < acc.0 { (s, at) } else { acc });
        let passed = !(worst < 0.0);
        let detail = if at.is_empty() { "no instances".into() } else { format!("worst at {at}") };
        Self { name: name.into(), passed, worst_slack: worst, detail }
    }
}

impl EffectiveTable {
    pub fn dim(&self) -> usize {
        self.lattice.dim
    }

    /// Point at integer lattice offsets `(i, j)` from the corner.
    fn at(&self, idx: &[usize]) -> &EffectivePoint {
        let k = self.lattice.per_axis();
        match idx.len() {
            1 => &self.points[idx[0]],
            _ => &self.points[idx[0] * k + idx[1]],
        }
    }

    fn usable(&self) -> impl Iterator<Item = (usize, &EffectivePoint)> {
        self.points.iter().enumerate().filter(|(_, p)| p.hbar_inf.is_finite())
    }

    /// `H̄_∞(P) = H̄_∞(−P)` within `2 · scheme_tol`.
    pub fn check_symmetry(&self) -> InvariantCheck {
        let n = self.points.len();
        let tol = 2.0 * self.scheme_tol;
        InvariantCheck::from_slacks(
            "symmetry",
            self.usable().filter_map(|(i, p)| {
                let q = &self.points[n - 1 - i];
                q.hbar_inf
                    .is_finite()
                    .then(|| (tol - (p.hbar_inf - q.hbar_inf).abs(), format!("P = {:?}", p.p)))
            }),
        )
    }

    /// Slope between axis neighbours at most `σ_max L + scheme_tol / spacing`.
    pub fn check_lipschitz(&self) -> InvariantCheck {
        let k = self.lattice.per_axis();
        let s = self.lattice.spacing;
        let bound = self.lipschitz + self.scheme_tol / s;
        let mut slacks = Vec::new();
        let idx_list: Vec<Vec<usize>> = match self.dim() {
            1 => (0..k).map(|i| vec![i]).collect(),
            _ => (0..k * k).map(|i| vec![i / k, i % k]).collect(),
        };
        for idx in &idx_list {
            for axis in 0..self.dim() {
                if idx[axis] + 1 >= k {
                    continue;
                }
                let mut nb = idx.clone();
                nb[axis] += 1;
                let (a, b) = (self.at(idx), self.at(&nb));
                if a.hbar_inf.is_finite() && b.hbar_inf.is_finite() {
                    let slope = (a.hbar_inf - b.hbar_inf).abs() / s;
                    slacks.push((bound - slope, format!("P = {:?} → {:?}", a.p, b.p)));
                }
            }
        }
        InvariantCheck::from_slacks("lipschitz", slacks.into_iter())
    }

    pub fn check_sandwich(&self, ham: &Hamiltonian) -> InvariantCheck {
        InvariantCheck::from_slacks(
            "sandwich",
            self.usable().map(|(_, p)| (p.sandwich_slack(ham, self.scheme_tol), format!("P = {:?}", p.p))),
        )
    }

    /// `H̄_∞(kP) ≥ H̄_∞(P) − 2 · scheme_tol` for `k ∈ {2, 3}` with `kP` on the lattice.
    pub fn check_ray_monotonicity(&self) -> InvariantCheck {
        let h = self.lattice.half_count() as i64;
        let k = self.lattice.per_axis() as i64;
        let tol = 2.0 * self.scheme_tol;
        let mut slacks = Vec::new();
        for idx in 0..self.points.len() as i64 {
            let offs: Vec<i64> = match self.dim() {
                1 => vec![idx - h],
                _ => vec![idx / k - h, idx % k - h],
            };
            for mult in [2, 3] {
                let scaled: Vec<i64> = offs.iter().map(|o| o * mult).collect();
                if scaled.iter().any(|o| o.abs() > h) {
                    continue;
                }
                let target: Vec<usize> = scaled.iter().map(|o| (o + h) as usize).collect();
                let (p, q) = (&self.points[idx as usize], self.at(&target));
                if p.hbar_inf.is_finite() && q.hbar_inf.is_finite() {
                    slacks.push((q.hbar_inf - p.hbar_inf + tol, format!("P = {:?}, k = {mult}", p.p)));
                }
            }
        }
        InvariantCheck::from_slacks("ray-monotonicity", slacks.into_iter())
    }

    /// Ladder values non-increasing in `n` within `2 · stab_tol`.
    pub fn check_ladder_monotonicity(&self) -> InvariantCheck {
        let tol = 2.0 * self.stab_tol;
        InvariantCheck::from_slacks(
            "ladder-monotonicity",
            self.points.iter().flat_map(|p| {
                p.ladder
                    .windows(2)
                    .map(move |w| (w[0].hbar_n - w[1].hbar_n + tol, format!("P = {:?}, n = {}", p.p, w[1].n)))
            }),
        )
    }

    pub fn check_invariants(&self, ham: &Hamiltonian) -> Vec<InvariantCheck> {
        vec![
            self.check_symmetry(),
            self.check_lipschitz(),
            self.check_sandwich(ham),
            self.check_ray_monotonicity(),
            self.check_ladder_monotonicity(),
        ]
    }

    /// Piecewise-(bi)linear interpolant over the lattice.
    pub fn interpolant(&self) -> Result<TableInterpolant> {
        if let Some(bad) = self.points.iter().find(|p| !p.hbar_inf.is_finite()) {
            return Err(Error::Precondition(format!("table has no value at P = {:?}", bad.p)));
        }
        Ok(TableInterpolant {
            dim: self.dim(),
            half: self.lattice.half_count(),
            spacing: self.lattice.spacing,
            values: self.points.iter().map(|p| p.hbar_inf).collect(),
            uncertain: self.points.iter().map(|p| p.verdict == Verdict::Uncertain).collect(),
        })
    }
}

/// Fast evaluation of a tabulated `H̄_∞`.
#[derive(Debug, Clone)]
pub struct TableInterpolant {
    dim: usize,
    half: usize,
    spacing: f64,
    values: Vec<f64>,
    uncertain: Vec<bool>,
}

impl TableInterpolant {
    /// Half-width of the covered box.
    pub fn radius(&self) -> f64 {
        self.half as f64 * self.spacing
    }

    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let s = x / self.spacing + self.half as f64;
        let last = 2 * self.half;
        if !(s >= -1e-9 && s <= last as f64 + 1e-9) {
            return None;
        }
        let i = (s.floor().max(0.0) as usize).min(last.saturating_sub(1));
        Some((i, (s - i as f64).clamp(0.0, 1.0)))
    }

    /// Interpolated value at `p`. Fails outside the box and next to uncertain points.
    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        let out = || Error::OutOfTable { gradient: norm(p), radius: self.radius() };
        let k = 2 * self.half + 1;
        let check = |idx: usize| -> Result<f64> {
            if self.uncertain[idx] {
                Err(Error::Precondition(format!("interpolation next to an uncertain table point at P = {p:?}")))
            } else {
                Ok(self.values[idx])
            }
        };
        match self.dim {
            1 => {
                let (i, t) = self.locate(p[0]).ok_or_else(out)?;
                if k == 1 {
                    return check(0);
                }
                Ok((1.0 - t) * check(i)? + t * check(i + 1)?)
            }
            _ => {
                let (i, s) = self.locate(p[0]).ok_or_else(out)?;
                let (j, t) = self.locate(p[1]).ok_or_else(out)?;
                if k == 1 {
                    return check(0);
                }
                let v = |a: usize, b: usize| check(a * k + b);
                Ok((1.0 - s) * ((1.0 - t) * v(i, j)? + t * v(i, j + 1)?)
                    + s * ((1.0 - t) * v(i + 1, j)? + t * v(i + 1, j + 1)?))
            }
        }
    }
}

/// Radius `(σ_min − σ_max m_0) / (σ_max L)` of a ball guaranteed to lie in `D`;
/// zero when `σ_max m_0 ≥ σ_min`.
pub fn ball_in_d(ham: &Hamiltonian) -> f64 {
    let gap = ham.sigma.sigma_min() - ham.value_at_zero();
    if gap <= 0.0 {
        0.0
    } else {
        gap / ham.p_lipschitz()
    }
}

/// Grid-scan evidence for full solvability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SufficientCondition {
    /// `σ_max m_0 < σ_min`.
    pub regime_ok: bool,
    /// Distance from `{σ > σ_min + flat tol}` to the faces of the unit cube, `None`
    /// when that set is empty.
    pub exceed_margin: Option<f64>,
    /// Scan resolution.
    pub scan_h: f64,
    pub holds: bool,
}

/// Scans `σ` with `points` per axis.
pub fn sufficient_condition_scan(ham: &Hamiltonian, points: usize) -> SufficientCondition {
    let regime_ok = check_regime(ham) == Regime::SolvablePossible;
    let sigma = &ham.sigma;
    let level = sigma.sigma_min() + sigma.flatness_tolerance();
    let h = 1.0 / points as f64;
    let total = points.pow(sigma.dim() as u32);
    let mut margin: Option<f64> = None;
    for idx in 0..total {
        let x: Vec<f64> = match sigma.dim() {
            1 => vec![idx as f64 * h],
            _ => vec![(idx / points) as f64 * h, (idx % points) as f64 * h],
        };
        if sigma.eval(&x) > level {
            let d = x.iter().map(|&c| c.min(1.0 - c)).fold(f64::INFINITY, f64::min);
            margin = Some(margin.map_or(d, |m: f64| m.min(d)));
        }
    }
    // The closure must stay at least one scan cell away from the faces.
    let inside = margin.is_none_or(|m| m > h);
    SufficientCondition { regime_ok, exceed_margin: margin, scan_h: h, holds: regime_ok && inside }
}

/// `σ_max m_0 < σ_min` and the closure of `{σ ≠ σ_min}` lies inside `(0, 1)^N`.
/// When true, `D = R^N`.
pub fn sufficient_condition_full_solvability(ham: &Hamiltonian) -> bool {
    let points = if ham.dim() == 1 { 4096 } else { 512 };
    sufficient_condition_scan(ham, points).holds
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{KineticModel, SupplyField};
    use crate::scheme::GridSpec;

    fn tri_tanh() -> Hamiltonian {
        Hamiltonian::new(SupplyField::reference_triangular(1).unwrap(), KineticModel::tanh())
    }

    fn cfg_1d(ham: &Hamiltonian, points: usize) -> EffectiveConfig {
        EffectiveConfig::new(ham, CellConfig::with_grid(GridSpec::new(1, points).unwrap(), 1e-8).unwrap())
    }

    #[test]
    fn constant_supply_is_exact() {
        let ham = Hamiltonian::new(SupplyField::constant(2.0, 1).unwrap(), KineticModel::tanh());
        let pt = effective_hamiltonian(&ham, &[1.0], &cfg_1d(&ham, 32)).unwrap();
        assert!((pt.hbar_inf - 2.0 * ham.kinetic.eval(1.0)).abs() < 1e-7);
        assert_eq!(pt.verdict, Verdict::InD);
        assert!(pt.stabilized);
    }

    #[test]
    fn origin_value_and_verdict() {
        let ham = tri_tanh();
        let cfg = cfg_1d(&ham, 64);
        let pt = effective_hamiltonian(&ham, &[0.0], &cfg).unwrap();
        assert!((pt.hbar_inf - 1.25).abs() < cfg.scheme_tol, "{}", pt.hbar_inf);
        assert_eq!(pt.verdict, Verdict::InD);
        assert!(pt.margin > cfg.classification_threshold(&ham));
    }

    #[test]
    fn far_outside_d_is_not_in_d() {
        let ham = tri_tanh();
        let pt = effective_hamiltonian(&ham, &[1.5], &cfg_1d(&ham, 64)).unwrap();
        assert_eq!(pt.verdict, Verdict::NotInD, "{pt:?}");
        assert!(pt.margin < 0.0);
    }

    #[test]
    fn empty_regime_is_never_in_d() {
        let sigma = SupplyField::triangular(1.5, 4.5, 1).unwrap();
        let ham = Hamiltonian::new(sigma, KineticModel::tanh());
        let pt = effective_hamiltonian(&ham, &[0.0], &cfg_1d(&ham, 32)).unwrap();
        assert_eq!(pt.verdict, Verdict::NotInD);
        assert!((pt.hbar_inf - 2.25).abs() < 0.2);
    }

    #[test]
    fn stabilization_locks_in() {
        let ham = tri_tanh();
        let cfg = cfg_1d(&ham, 64);
        let pt = effective_hamiltonian(&ham, &[0.3], &cfg).unwrap();
        assert!(pt.stabilized);
        let again = crate::cell::solve_cell(&ham, &[0.3], 2 * pt.n_star, &cfg.cell).unwrap();
        assert!((again.hbar_n - pt.hbar_inf).abs() < cfg.stab_tol);
    }

    #[test]
    fn ball_radius() {
        assert!((ball_in_d(&tri_tanh()) - 0.2).abs() < 1e-15);
        let c = Hamiltonian::new(SupplyField::constant(3.0, 2).unwrap(), KineticModel::rational());
        assert!((ball_in_d(&c) - 1.0).abs() < 1e-15);
        let empty = Hamiltonian::new(SupplyField::triangular(1.0, 3.0, 1).unwrap(), KineticModel::tanh());
        assert_eq!(ball_in_d(&empty), 0.0);
    }

    #[test]
    fn sufficient_condition_cases() {
        assert!(!sufficient_condition_full_solvability(&tri_tanh()));
        let c = Hamiltonian::new(SupplyField::constant(2.0, 1).unwrap(), KineticModel::tanh());
        assert!(sufficient_condition_full_solvability(&c));
        let bump = SupplyField::compact_bump(0.5, 0.25, 0.5, 1.5, 1).unwrap();
        assert!(sufficient_condition_full_solvability(&Hamiltonian::new(bump, KineticModel::tanh())));
        let bump2 = SupplyField::compact_bump(0.5, 0.25, 0.5, 1.5, 2).unwrap();
        assert!(sufficient_condition_full_solvability(&Hamiltonian::new(bump2, KineticModel::tanh())));
        // Support touches the faces of the cube.
        let pb = SupplyField::power_bump(1.0, 3.0, 1).unwrap();
        assert!(!sufficient_condition_full_solvability(&Hamiltonian::new(pb, KineticModel::tanh())));
        // Bump too tall: σ_max m_0 ≥ σ_min.
        let tall = SupplyField::compact_bump(0.5, 0.25, 2.0, 1.5, 1).unwrap();
        assert!(!sufficient_condition_full_solvability(&Hamiltonian::new(tall, KineticModel::tanh())));
    }

    #[test]
    fn lattice_layout() {
        let l = Lattice::new(1, 1.5, 0.1).unwrap();
        assert_eq!(l.per_axis(), 31);
        let pts = l.points();
        assert!((pts[0][0] + 1.5).abs() < 1e-12 && pts[15][0] == 0.0);
        let l2 = Lattice::new(2, 0.2, 0.1).unwrap();
        assert_eq!(l2.len(), 25);
        assert_eq!(l2.points()[7], vec![-0.1, 0.0]);
    }

    #[test]
    fn small_table_invariants_and_interpolation() {
        let ham = Hamiltonian::new(SupplyField::reference_triangular(1).unwrap(), KineticModel::rational());
        let table = build_table(&ham, Lattice::new(1, 0.6, 0.2).unwrap(), &cfg_1d(&ham, 32)).unwrap();
        assert!(!table.partial);
        for check in table.check_invariants(&ham) {
            assert!(check.passed, "{check:?}");
        }
        let it = table.interpolant().unwrap();
        let mid = it.eval(&[0.3]).unwrap();
        let (a, b) = (table.points[4].hbar_inf, table.points[5].hbar_inf);
        assert!((mid - 0.5 * (a + b)).abs() < 1e-12);
        assert!(matches!(it.eval(&[0.7]), Err(Error::OutOfTable { .. })));
    }

    #[test]
    fn constant_table_in_2d() {
        let ham = Hamiltonian::new(SupplyField::constant(2.0, 2).unwrap(), KineticModel::tanh());
        let cell = CellConfig::with_grid(GridSpec::new(2, 16).unwrap(), 1e-8).unwrap();
        let table = build_table(&ham, Lattice::new(2, 0.5, 0.5).unwrap(), &EffectiveConfig::new(&ham, cell)).unwrap();
        for pt in &table.points {
            assert!((pt.hbar_inf - 2.0 * ham.kinetic.eval(pt.p_norm())).abs() < 1e-7);
        }
        let it = table.interpolant().unwrap();
        assert!((it.eval(&[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-7);
    }
}
