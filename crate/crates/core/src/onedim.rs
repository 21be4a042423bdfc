//! Exact one-dimensional theory.
//!
//! In 1D the cell problem reduces to `|u' + P| = f_a(x)` with
//! `f_a(x) = m⁻¹(a / σ(x))`, and everything is expressed through
//! `I(a) = ∫_0^1 f_a`:
//!
//! * `D` is empty when `σ_max m_0 ≥ σ_min`;
//! * otherwise `D = (−W, W)` with `W = I(σ_min)`, or all of `R` when that integral
//!   diverges;
//! * the critical value is `σ_max m_0` for `|P| ≤ I(σ_max m_0)` and the root of
//!   `I(a) = |P|` beyond.
//!
//! These are computed by quadrature and bisection only, independently of the grid
//! solvers, so the module doubles as their oracle.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{check_regime, Hamiltonian, KineticModel, MinimizerSet, Regime, SupplyField};
use crate::numeric::{adaptive_simpson, bisect, integrate_piecewise};

/// Partial integrals above this are declared divergent.
pub const DIVERGENCE_CAP: f64 = 1e6;
/// Increment ratio at or above which an excision level counts as non-stabilizing.
const GROWTH_RATIO: f64 = 0.9;
/// Consecutive non-stabilizing levels needed to declare divergence.
const GROWTH_LEVELS: usize = 3;
/// Quadrature tolerance used for the endpoint integral `I(σ_min)`.
const ENDPOINT_TOL: f64 = 1e-11;

/// `σ` and `m` on the circle.
#[derive(Debug, Clone)]
pub struct OneDimProblem {
    sigma: SupplyField,
    kinetic: KineticModel,
}

impl OneDimProblem {
    pub fn new(sigma: SupplyField, kinetic: KineticModel) -> Result<Self> {
        if sigma.dim() != 1 {
            return Err(Error::InvalidArgument(format!(
                "one-dimensional theory needs a 1D supply field, got dimension {}",
                sigma.dim()
            )));
        }
        Ok(Self { sigma, kinetic })
    }

    pub fn from_hamiltonian(ham: &Hamiltonian) -> Result<Self> {
        Self::new(ham.sigma.clone(), ham.kinetic.clone())
    }

    pub fn sigma(&self) -> &SupplyField {
        &self.sigma
    }

    pub fn kinetic(&self) -> &KineticModel {
        &self.kinetic
    }

    /// `σ_max m_0`, the smallest admissible level.
    pub fn a_min(&self) -> f64 {
        self.sigma.sigma_max() * self.kinetic.m0()
    }

    /// `σ_min`, the largest admissible level.
    pub fn a_max(&self) -> f64 {
        self.sigma.sigma_min()
    }

    pub fn regime(&self) -> Regime {
        check_regime(&Hamiltonian::new(self.sigma.clone(), self.kinetic.clone()))
    }

    /// `f_a(x) = m⁻¹(a / σ(x))`.
    pub fn f(&self, a: f64, x: f64) -> f64 {
        self.kinetic.inverse(a / self.sigma.eval(&[x]))
    }

    /// Breakpoints of `σ` inside `[lo, hi]`, including integer translates.
    fn breaks_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let base = self.sigma.breakpoints_1d();
        let mut out = Vec::new();
        let first = lo.floor() as i64 - 1;
        let last = hi.ceil() as i64 + 1;
        for k in first..=last {
            for b in &base {
                let v = b + k as f64;
                if v > lo && v < hi {
                    out.push(v);
                }
            }
        }
        out
    }

    /// `∫_lo^hi f_a` for `a` where `f_a` is finite on `[lo, hi]`.
    fn integrate(&self, a: f64, lo: f64, hi: f64, tol: f64) -> f64 {
        let f = |x: f64| self.f(a, x);
        integrate_piecewise(&f, lo, hi, &self.breaks_in(lo, hi), tol)
    }
}

/// Value of `I(a)`, possibly divergent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegralValue {
    Finite(f64),
    Infinite,
}

impl IntegralValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            IntegralValue::Finite(v) => Some(v),
            IntegralValue::Infinite => None,
        }
    }
}

/// `I(a) = ∫_0^1 f_a` for `σ_max m_0 ≤ a ≤ σ_min`.
///
/// Below `σ_min` this is plain kink-aware adaptive quadrature. At `a = σ_min` the
/// integrand blows up at the minimizers of `σ`; their `δ`-neighbourhoods are
/// excised for `δ = 10⁻², …, 10⁻¹²`, the integral grows by one annulus per level,
/// and the growth pattern decides between divergence and a geometric tail.
pub fn integral_f(problem: &OneDimProblem, a: f64, tol: f64) -> Result<IntegralValue> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let (lo, hi) = (problem.a_min(), problem.a_max());
    let slack = 1e-12 * hi.max(1.0);
    if !(a >= lo - slack && a <= hi + slack) || lo > hi + slack {
        return Err(Error::InvalidArgument(format!(
            "level a = {a} outside [σ_max m_0, σ_min] = [{lo}, {hi}]"
        )));
    }
    let a = a.clamp(lo, hi);
    let singular = a >= hi * problem.kinetic.supremum() - slack;
    if !singular {
        return Ok(IntegralValue::Finite(problem.integrate(a, 0.0, 1.0, tol)));
    }
    let minimizers = match problem.sigma.minimizers_1d() {
        MinimizerSet::Flat => return Ok(IntegralValue::Infinite),
        MinimizerSet::Points(p) => p,
    };
    Ok(excised_integral(problem, a, &minimizers, tol))
}

fn excised_integral(problem: &OneDimProblem, a: f64, minimizers: &[f64], tol: f64) -> IntegralValue {
    let mut xs: Vec<f64> = minimizers.iter().map(|x| x.rem_euclid(1.0)).collect();
    xs.sort_by(|p, q| p.total_cmp(q));
    xs.dedup();
    let gaps: Vec<f64> = (0..xs.len())
        .map(|k| if k + 1 < xs.len() { xs[k + 1] - xs[k] } else { xs[0] + 1.0 - xs[k] })
        .collect();
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let mut delta = 1e-2_f64.min(0.25 * min_gap);

    // Outer integral, away from all minimizers.
    let mut total: f64 = xs
        .iter()
        .zip(&gaps)
        .map(|(x, g)| problem.integrate(a, x + delta, x + g - delta, tol))
        .sum();
    let f = |x: f64| problem.f(a, x);
    let mut prev_inc: Option<f64> = None;
    let mut ratio = 0.0;
    let mut growing = 0;
    for _ in 0..10 {
        let next = 0.1 * delta;
        let inc: f64 = xs
            .iter()
            .map(|x| adaptive_simpson(&f, x + next, x + delta, tol) + adaptive_simpson(&f, x - delta, x - next, tol))
            .sum();
        if !inc.is_finite() {
            return IntegralValue::Infinite;
        }
        total += inc;
        if total > DIVERGENCE_CAP {
            return IntegralValue::Infinite;
        }
        if let Some(p) = prev_inc {
            ratio = if p > 0.0 { inc / p } else { 0.0 };
            if ratio >= GROWTH_RATIO {
                growing += 1;
                if growing >= GROWTH_LEVELS {
                    return IntegralValue::Infinite;
                }
            } else {
                growing = 0;
            }
        }
        prev_inc = Some(inc);
        delta = next;
    }
    if growing > 0 {
        return IntegralValue::Infinite;
    }
    // Geometric tail for the remaining δ-neighbourhoods.
    let tail = prev_inc.unwrap_or(0.0) * ratio / (1.0 - ratio);
    IntegralValue::Finite(total + tail)
}

/// The solvability set `D` in 1D.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "half_width", rename_all = "kebab-case")]
pub enum Solvability {
    Empty,
    /// `D = (−W, W)`.
    Interval(f64),
    /// `D = R`.
    Whole,
}

impl Solvability {
    pub fn contains(&self, p: f64) -> bool {
        match self {
            Solvability::Empty => false,
            Solvability::Interval(w) => p.abs() < *w,
            Solvability::Whole => true,
        }
    }

    pub fn half_width(&self) -> Option<f64> {
        match self {
            Solvability::Empty => Some(0.0),
            Solvability::Interval(w) => Some(*w),
            Solvability::Whole => None,
        }
    }

    /// `"empty"`, `"R"` or `"(-W, W)"`.
    pub fn describe(&self) -> String {
        match self {
            Solvability::Empty => "empty".into(),
            Solvability::Interval(w) => format!("(-{w}, {w})"),
            Solvability::Whole => "R".into(),
        }
    }
}

pub fn solvability_interval(problem: &OneDimProblem) -> Solvability {
    if problem.regime() != Regime::SolvablePossible {
        return Solvability::Empty;
    }
    match integral_f(problem, problem.a_max(), ENDPOINT_TOL) {
        Ok(IntegralValue::Finite(w)) => Solvability::Interval(w),
        Ok(IntegralValue::Infinite) => Solvability::Whole,
        Err(_) => Solvability::Empty,
    }
}

fn not_solvable(p: f64, d: Solvability) -> Error {
    Error::NotSolvable {
        p,
        half_width: match d {
            Solvability::Empty => None,
            other => other.half_width(),
        },
    }
}

/// `I(σ_max m_0)`, the end of the flat part of the critical value.
pub fn flat_threshold(problem: &OneDimProblem) -> Result<f64> {
    integral_f(problem, problem.a_min(), ENDPOINT_TOL)?
        .finite()
        .ok_or_else(|| Error::Precondition("integral at σ_max m_0 diverges".into()))
}

/// Critical value `c(P)` for `P ∈ D`, with bisection tolerance `tol` in `a`.
pub fn critical_value_1d(problem: &OneDimProblem, p: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let d = solvability_interval(problem);
    if !d.contains(p) {
        return Err(not_solvable(p, d));
    }
    let target = p.abs();
    let i0 = flat_threshold(problem)?;
    if target <= i0 {
        return Ok(problem.a_min());
    }
    let quad_tol = (0.1 * tol).min(1e-10);
    let lo = problem.a_min();
    let hi = problem.a_max();
    let a = bisect(
        |a| {
            if a >= hi {
                return f64::INFINITY;
            }
            match integral_f(problem, a, quad_tol) {
                Ok(IntegralValue::Finite(v)) => v - target,
                _ => f64::INFINITY,
            }
        },
        lo,
        hi,
        tol,
    );
    Ok(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrectorCase {
    SmallP,
    LargeP,
}

/// Explicit periodic corrector of the 1D cell problem.
#[derive(Debug, Clone)]
pub struct Corrector1D {
    problem: OneDimProblem,
    pub p: f64,
    /// Critical value `c(P)`.
    pub c: f64,
    pub case: CorrectorCase,
    /// Maximizer of `σ` where the profile starts (small-`P` case).
    pub x0: Option<f64>,
    /// Turning point from the balance equation (small-`P` case).
    pub x1: Option<f64>,
    /// Mismatch `|u(x⁻) − u(x⁺)|` at the closing point of the construction.
    pub periodicity_defect: f64,
    /// `∫_{x0}^{x0+1} f_c`, cached.
    total: f64,
}

const CORRECTOR_TOL: f64 = 1e-12;

impl Corrector1D {
    fn start(&self) -> f64 {
        self.x0.unwrap_or(0.0)
    }

    fn reduce(&self, x: f64) -> f64 {
        let s = self.start();
        s + (x - s).rem_euclid(1.0)
    }

    fn primitive(&self, from: f64, to: f64) -> f64 {
        self.problem.integrate(self.c, from, to, CORRECTOR_TOL)
    }

    /// `u(x)`, extended periodically.
    pub fn eval(&self, x: f64) -> f64 {
        let x = self.reduce(x);
        match self.case {
            CorrectorCase::LargeP => self.p.signum() * self.primitive(0.0, x) - self.p * x,
            CorrectorCase::SmallP => {
                let (x0, x1) = (self.start(), self.x1.unwrap_or(0.0));
                if x <= x1 {
                    self.primitive(x0, x) - self.p * x
                } else {
                    self.primitive(x, x0 + 1.0) + self.p * (1.0 - x)
                }
            }
        }
    }

    /// `u'(x)` away from kinks.
    pub fn derivative(&self, x: f64) -> f64 {
        let x = self.reduce(x);
        let f = self.problem.f(self.c, x);
        match self.case {
            CorrectorCase::LargeP => self.p.signum() * f - self.p,
            CorrectorCase::SmallP => {
                if x <= self.x1.unwrap_or(0.0) {
                    f - self.p
                } else {
                    -f - self.p
                }
            }
        }
    }

    /// `∫ f_c` over one period.
    pub fn period_integral(&self) -> f64 {
        self.total
    }

    /// Points where `u` may fail to be differentiable, in `[0, 1)`.
    pub fn kinks(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self.problem.sigma.breakpoints_1d().into_iter().map(|v| v.rem_euclid(1.0)).collect();
        k.extend(self.x0.iter().chain(&self.x1).map(|v| v.rem_euclid(1.0)));
        k.sort_by(|a, b| a.total_cmp(b));
        k.dedup();
        k
    }
}

/// Builds the explicit corrector for `P ∈ D`.
pub fn corrector_1d(problem: &OneDimProblem, p: f64) -> Result<Corrector1D> {
    let c = critical_value_1d(problem, p, 1e-12)?;
    let i0 = flat_threshold(problem)?;
    if p.abs() <= i0 {
        let x0 = problem.sigma.maximizer_1d();
        let total = problem.integrate(c, x0, x0 + 1.0, CORRECTOR_TOL);
        let balance = |x1: f64| 2.0 * problem.integrate(c, x0, x1, CORRECTOR_TOL) - total - p;
        let x1 = if total == 0.0 { x0 + 0.5 } else { bisect(balance, x0, x0 + 1.0, 1e-14) };
        let defect = balance(x1).abs();
        return Ok(Corrector1D {
            problem: problem.clone(),
            p,
            c,
            case: CorrectorCase::SmallP,
            x0: Some(x0),
            x1: Some(x1),
            periodicity_defect: defect,
            total,
        });
    }
    let total = problem.integrate(c, 0.0, 1.0, CORRECTOR_TOL);
    Ok(Corrector1D {
        problem: problem.clone(),
        p,
        c,
        case: CorrectorCase::LargeP,
        x0: None,
        x1: None,
        periodicity_defect: (total - p.abs()).abs(),
        total,
    })
}

/// Checks `c(P) > c(Q)` for `P, Q ∈ D` with `|P| > |Q| ≥ I(σ_max m_0)`.
pub fn strict_monotonicity_check(problem: &OneDimProblem, p: f64, q: f64) -> Result<bool> {
    if !(p.abs() > q.abs()) {
        return Err(Error::Precondition(format!("need |P| > |Q|, got P = {p}, Q = {q}")));
    }
    let i0 = flat_threshold(problem)?;
    if q.abs() < i0 {
        return Err(Error::Precondition(format!(
            "need |Q| ≥ I(σ_max m_0) = {i0}, got Q = {q}"
        )));
    }
    let cp = critical_value_1d(problem, p, 1e-12)?;
    let cq = critical_value_1d(problem, q, 1e-12)?;
    Ok(cp > cq)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tent_tanh() -> OneDimProblem {
        OneDimProblem::new(SupplyField::reference_triangular(1).unwrap(), KineticModel::tanh()).unwrap()
    }

    fn tent_rational() -> OneDimProblem {
        OneDimProblem::new(SupplyField::reference_triangular(1).unwrap(), KineticModel::rational()).unwrap()
    }

    // For a tent of slope k with minimum s at 0 and f = atanh(2 s/σ − 1):
    // ∫_0^1 f = ½ + ½ log(2 s / k), by the antiderivative of ½ log(σ / (σ − s)).
    fn tent_tanh_endpoint(min: f64, max: f64) -> f64 {
        let k = 2.0 * (max - min);
        0.5 + 0.5 * (2.0 * min / k).ln()
    }

    #[test]
    fn endpoint_integral_matches_closed_form() {
        let w = integral_f(&tent_tanh(), 1.5, 1e-10).unwrap().finite().unwrap();
        assert!((w - tent_tanh_endpoint(1.5, 2.5)).abs() < 1e-7, "{w}");
        let lit = OneDimProblem::new(SupplyField::triangular(1.5, 2.0, 1).unwrap(), KineticModel::tanh()).unwrap();
        let w = integral_f(&lit, 1.5, 1e-10).unwrap().finite().unwrap();
        assert!((w - tent_tanh_endpoint(1.5, 2.0)).abs() < 1e-7, "{w}");
    }

    #[test]
    fn rational_endpoint_diverges() {
        assert_eq!(integral_f(&tent_rational(), 1.5, 1e-10).unwrap(), IntegralValue::Infinite);
        assert_eq!(solvability_interval(&tent_rational()), Solvability::Whole);
    }

    #[test]
    fn constant_supply_integral_is_the_inverse() {
        let pr = OneDimProblem::new(SupplyField::constant(2.0, 1).unwrap(), KineticModel::tanh()).unwrap();
        for a in [1.0, 1.3, 1.7, 1.99] {
            let v = integral_f(&pr, a, 1e-12).unwrap().finite().unwrap();
            assert!((v - KineticModel::tanh().inverse(a / 2.0)).abs() < 1e-12);
        }
        assert_eq!(integral_f(&pr, 2.0, 1e-12).unwrap(), IntegralValue::Infinite);
        assert_eq!(solvability_interval(&pr), Solvability::Whole);
    }

    #[test]
    fn level_out_of_range_is_rejected() {
        assert!(integral_f(&tent_tanh(), 1.2, 1e-10).is_err());
        assert!(integral_f(&tent_tanh(), 1.6, 1e-10).is_err());
    }

    #[test]
    fn critical_values_against_reference() {
        // Reference values from an independent scipy quad + brentq computation.
        let pr = tent_tanh();
        assert_eq!(critical_value_1d(&pr, 0.0, 1e-10).unwrap(), 1.25);
        assert_eq!(critical_value_1d(&pr, 0.25, 1e-10).unwrap(), 1.25);
        for (p, c) in [(0.5, 1.3995587), (0.6, 1.4577298), (-0.6, 1.4577298)] {
            let v = critical_value_1d(&pr, p, 1e-10).unwrap();
            assert!((v - c).abs() < 2e-7, "c({p}) = {v}");
        }
        let i0 = flat_threshold(&pr).unwrap();
        assert!((i0 - 0.298820).abs() < 1e-6, "{i0}");
    }

    #[test]
    fn outside_d_is_not_solvable() {
        let err = critical_value_1d(&tent_tanh(), 1.0, 1e-10).unwrap_err();
        match err {
            Error::NotSolvable { half_width: Some(w), .. } => assert!((w - 0.7027326).abs() < 1e-6),
            other => panic!("{other:?}"),
        }
        let empty = OneDimProblem::new(SupplyField::triangular(1.5, 3.5, 1).unwrap(), KineticModel::tanh()).unwrap();
        assert_eq!(solvability_interval(&empty), Solvability::Empty);
        assert!(matches!(
            critical_value_1d(&empty, 0.0, 1e-10),
            Err(Error::NotSolvable { half_width: None, .. })
        ));
    }

    #[test]
    fn boundary_of_d() {
        let pr = tent_tanh();
        let w = solvability_interval(&pr).half_width().unwrap();
        assert!(critical_value_1d(&pr, w * (1.0 - 1e-3), 1e-10).is_ok());
        assert!(critical_value_1d(&pr, w * (1.0 + 1e-3), 1e-10).is_err());
    }

    #[test]
    fn corrector_small_p_symmetric_turning_point() {
        let cr = corrector_1d(&tent_tanh(), 0.0).unwrap();
        assert_eq!(cr.case, CorrectorCase::SmallP);
        assert_eq!(cr.x0, Some(0.5));
        assert!((cr.x1.unwrap() - 1.0).abs() < 1e-10);
        assert!(cr.periodicity_defect < 1e-10);
        assert!((cr.eval(0.3) - cr.eval(1.3)).abs() < 1e-10);
    }

    #[test]
    fn corrector_constant_supply_vanishes() {
        let pr = OneDimProblem::new(SupplyField::constant(2.0, 1).unwrap(), KineticModel::tanh()).unwrap();
        let cr = corrector_1d(&pr, 0.0).unwrap();
        for x in [0.0, 0.2, 0.7] {
            assert!(cr.eval(x).abs() < 1e-14);
        }
    }

    #[test]
    fn corrector_residual_off_kinks() {
        let pr = tent_rational();
        for p in [0.2, 1.0, -1.2] {
            let cr = corrector_1d(&pr, p).unwrap();
            assert!(cr.periodicity_defect < 1e-8, "{p}: {}", cr.periodicity_defect);
            let kinks = cr.kinks();
            for i in 0..200 {
                let x = (i as f64 + 0.37) / 200.0;
                if kinks.iter().any(|k| (x - k).abs() < 1e-3 || (x - k).abs() > 1.0 - 1e-3) {
                    continue;
                }
                let res = (cr.derivative(x) + p).abs() - pr.f(cr.c, x);
                assert!(res.abs() < 1e-6, "P = {p}, x = {x}: {res}");
            }
            // u' matches a difference quotient of u.
            let x = 0.731;
            let fd = (cr.eval(x + 1e-6) - cr.eval(x - 1e-6)) / 2e-6;
            assert!((fd - cr.derivative(x)).abs() < 1e-5);
        }
    }

    #[test]
    fn strict_monotonicity() {
        let pr = tent_rational();
        assert!(strict_monotonicity_check(&pr, 1.2, 1.0).unwrap());
        assert!(strict_monotonicity_check(&pr, 1.5, 0.8).unwrap());
        assert!(matches!(strict_monotonicity_check(&pr, 1.0, -1.0), Err(Error::Precondition(_))));
        assert!(matches!(strict_monotonicity_check(&pr, 0.3, 0.1), Err(Error::Precondition(_))));
    }

    #[test]
    fn two_dimensional_supply_rejected() {
        assert!(OneDimProblem::new(SupplyField::reference_triangular(2).unwrap(), KineticModel::tanh()).is_err());
    }
}
