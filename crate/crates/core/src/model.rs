//! Problem data: the kinetic coefficient `m`, the periodic supply rate `σ`, the
//! Hamiltonian `H(x, p) = σ(x) m(|p|)` and its coercive approximants
//! `M_n(r) = max{m(r), L r - n}`.

use crate::error::{Error, Result};
use crate::numeric::bisect;

/// Safety factor applied to the finite-difference Lipschitz estimate of sampled `m`.
pub const SAMPLED_LIPSCHITZ_INFLATION: f64 = 1.05;

/// Anything usable as the radial profile of a Hamiltonian: `m` itself or an approximant.
pub trait KineticLaw: Sync {
    fn eval(&self, r: f64) -> f64;
    /// Lipschitz constant of the profile on `[0, ∞)`.
    fn lipschitz(&self) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub enum KineticKind {
    /// `m(r) = r / (2 (1 + r)) + 1/2`
    Rational,
    /// `m(r) = tanh(r) / 2 + 1/2`
    Tanh,
    /// Piecewise-linear through `(r_i, m_i)`, constant beyond the last sample.
    Samples { r: Vec<f64>, m: Vec<f64> },
}

/// Bounded, strictly increasing kinetic coefficient with values in `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticModel {
    kind: KineticKind,
    lipschitz: f64,
    m0: f64,
}

impl KineticModel {
    pub fn rational() -> Self {
        Self { kind: KineticKind::Rational, lipschitz: 0.5, m0: 0.5 }
    }

    pub fn tanh() -> Self {
        Self { kind: KineticKind::Tanh, lipschitz: 0.5, m0: 0.5 }
    }

    pub fn from_preset(name: &str) -> Result<Self> {
        match name {
            "rational" => Ok(Self::rational()),
            "tanh" => Ok(Self::tanh()),
            other => Err(Error::InvalidKinetic(format!(
                "unknown preset '{other}' (expected 'rational' or 'tanh')"
            ))),
        }
    }

    /// Builds a sampled model. `r` must start at 0 and increase strictly; `m` must
    /// increase strictly and stay inside `(0, 1)`.
    pub fn from_samples(r: Vec<f64>, m: Vec<f64>) -> Result<Self> {
        if r.len() != m.len() || r.len() < 2 {
            return Err(Error::InvalidKinetic(
                "need at least two (r, m) samples of equal length".into(),
            ));
        }
        if r[0] != 0.0 {
            return Err(Error::InvalidKinetic("first sample must be at r = 0".into()));
        }
        if r.iter().chain(m.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidKinetic("samples must be finite".into()));
        }
        if let Some(bad) = m.iter().find(|&&v| v <= 0.0 || v >= 1.0) {
            return Err(Error::InvalidKinetic(format!("sample value {bad} outside (0, 1)")));
        }
        let mut slope: f64 = 0.0;
        for i in 1..r.len() {
            if r[i] <= r[i - 1] {
                return Err(Error::InvalidKinetic("r samples must be strictly increasing".into()));
            }
            if m[i] <= m[i - 1] {
                return Err(Error::InvalidKinetic(format!(
                    "m samples not strictly increasing at index {i}"
                )));
            }
            slope = slope.max((m[i] - m[i - 1]) / (r[i] - r[i - 1]));
        }
        let m0 = m[0];
        Ok(Self {
            kind: KineticKind::Samples { r, m },
            lipschitz: slope * SAMPLED_LIPSCHITZ_INFLATION,
            m0,
        })
    }

    pub fn kind(&self) -> &KineticKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            KineticKind::Rational => "rational",
            KineticKind::Tanh => "tanh",
            KineticKind::Samples { .. } => "samples",
        }
    }

    pub fn m0(&self) -> f64 {
        self.m0
    }

    /// Lipschitz constant `L` (exact for presets, inflated slope bound for samples).
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Supremum of `m` over `[0, ∞)`.
    pub fn supremum(&self) -> f64 {
        match &self.kind {
            KineticKind::Samples { m, .. } => *m.last().unwrap(),
            _ => 1.0,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match &self.kind {
            KineticKind::Rational => 0.5 * r / (1.0 + r) + 0.5,
            KineticKind::Tanh => 0.5 * r.tanh() + 0.5,
            KineticKind::Samples { r: rs, m: ms } => {
                let last = rs.len() - 1;
                if r >= rs[last] {
                    return ms[last];
                }
                if r <= 0.0 {
                    return ms[0];
                }
                let k = rs.partition_point(|&x| x <= r) - 1;
                let t = (r - rs[k]) / (rs[k + 1] - rs[k]);
                ms[k] + t * (ms[k + 1] - ms[k])
            }
        }
    }

    /// Inverse of `m`. Values at or below `m0` map to 0 and values at or above
    /// the supremum map to `+∞`.
    pub fn inverse(&self, s: f64) -> f64 {
        if s <= self.m0 {
            return 0.0;
        }
        if s >= self.supremum() {
            return f64::INFINITY;
        }
        match &self.kind {
            KineticKind::Rational => (2.0 * s - 1.0) / (2.0 - 2.0 * s),
            KineticKind::Tanh => (2.0 * s - 1.0).atanh(),
            KineticKind::Samples { r, .. } => {
                let hi = *r.last().unwrap();
                bisect(|x| self.eval(x) - s, 0.0, hi, 1e-14 * hi.max(1.0))
            }
        }
    }
}

impl KineticLaw for KineticModel {
    fn eval(&self, r: f64) -> f64 {
        KineticModel::eval(self, r)
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

/// Coercive surrogate `M_n(r) = max{m(r), L r - n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Approximant {
    kinetic: KineticModel,
    n: u32,
    alpha_n: f64,
}

impl Approximant {
    pub fn new(kinetic: &KineticModel, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("approximant index must be ≥ 1".into()));
        }
        let l = kinetic.lipschitz;
        let nf = n as f64;
        // L r - n - m(r) is non-decreasing, negative at 0 and positive at (n + 1) / L.
        let hi = (nf + 1.0) / l;
        let alpha_n = bisect(|r| l * r - nf - kinetic.eval(r), 0.0, hi, 1e-14 * hi);
        Ok(Self { kinetic: kinetic.clone(), n, alpha_n })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Radius below which `M_n` coincides with `m`.
    pub fn alpha_n(&self) -> f64 {
        self.alpha_n
    }

    pub fn kinetic(&self) -> &KineticModel {
        &self.kinetic
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.kinetic.eval(r).max(self.kinetic.lipschitz * r - self.n as f64)
    }
}

impl KineticLaw for Approximant {
    fn eval(&self, r: f64) -> f64 {
        Approximant::eval(self, r)
    }
    fn lipschitz(&self) -> f64 {
        self.kinetic.lipschitz
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SupplyKind {
    Constant { value: f64 },
    /// Tent with `min` at integer points and `max` at half-integers, averaged over
    /// coordinates in 2D.
    Triangular { min: f64, max: f64 },
    /// `β + Π_i (x_i (1 - x_i))^α`.
    PowerBump { alpha: f64, beta: f64 },
    /// `base + amplitude Π_i cos²(π d_i / (2w))` for `|d_i| < w`, zero bump otherwise,
    /// with `d_i` the periodic offset of `x_i` from `center`.
    CompactBump { center: f64, half_width: f64, amplitude: f64, base: f64 },
    /// Uniform samples per axis (row-major in 2D), piecewise-(bi)linear with wrap-around.
    Samples { per_axis: usize, values: Vec<f64> },
}

/// Where the minimum of a 1D supply field is attained.
#[derive(Debug, Clone, PartialEq)]
pub enum MinimizerSet {
    /// Finitely many isolated minimizers in `[0, 1)`.
    Points(Vec<f64>),
    /// The minimum is attained on a set of positive measure.
    Flat,
}

/// Positive, continuous, 1-periodic supply rate `σ` on the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct SupplyField {
    kind: SupplyKind,
    dim: usize,
    min: f64,
    max: f64,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::InvalidSupply(format!("dimension {dim} not supported (1 or 2)")))
    }
}

impl SupplyField {
    pub fn constant(value: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::InvalidSupply(format!("constant value {value} must be positive")));
        }
        Ok(Self { kind: SupplyKind::Constant { value }, dim, min: value, max: value })
    }

    pub fn triangular(min: f64, max: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(min > 0.0 && max >= min && max.is_finite()) {
            return Err(Error::InvalidSupply(format!(
                "triangular needs 0 < min ≤ max, got min={min}, max={max}"
            )));
        }
        Ok(Self { kind: SupplyKind::Triangular { min, max }, dim, min, max })
    }

    /// The tent `[1.5, 2.5]` used as the reference instance throughout the crate.
    pub fn reference_triangular(dim: usize) -> Result<Self> {
        Self::triangular(1.5, 2.5, dim)
    }

    pub fn power_bump(alpha: f64, beta: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidSupply(format!(
                "power-bump needs α > 0 and β > 0, got α={alpha}, β={beta}"
            )));
        }
        let peak = 0.25f64.powf(alpha * dim as f64);
        Ok(Self { kind: SupplyKind::PowerBump { alpha, beta }, dim, min: beta, max: beta + peak })
    }

    pub fn compact_bump(center: f64, half_width: f64, amplitude: f64, base: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(base > 0.0 && amplitude >= 0.0 && half_width > 0.0 && half_width <= 0.5) {
            return Err(Error::InvalidSupply(format!(
                "compact-bump needs base > 0, amplitude ≥ 0, 0 < half_width ≤ 1/2 \
                 (got base={base}, amplitude={amplitude}, half_width={half_width})"
            )));
        }
        if !center.is_finite() {
            return Err(Error::InvalidSupply("compact-bump center must be finite".into()));
        }
        Ok(Self {
            kind: SupplyKind::CompactBump { center: center.rem_euclid(1.0), half_width, amplitude, base },
            dim,
            min: base,
            max: base + amplitude,
        })
    }

    /// Sampled field on a uniform grid of `per_axis` points per axis; `values` has
    /// `per_axis^dim` entries.
    pub fn from_samples(values: Vec<f64>, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let per_axis = match dim {
            1 => values.len(),
            _ => {
                let k = (values.len() as f64).sqrt().round() as usize;
                if k * k != values.len() {
                    return Err(Error::InvalidSupply(format!(
                        "{} samples do not form a square grid",
                        values.len()
                    )));
                }
                k
            }
        };
        if per_axis < 2 {
            return Err(Error::InvalidSupply("need at least two samples per axis".into()));
        }
        if let Some(bad) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidSupply(format!("sample value {bad} is not positive")));
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self { kind: SupplyKind::Samples { per_axis, values }, dim, min, max })
    }

    pub fn kind(&self) -> &SupplyKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sigma_min(&self) -> f64 {
        self.min
    }

    pub fn sigma_max(&self) -> f64 {
        self.max
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            SupplyKind::Constant { .. } => "constant",
            SupplyKind::Triangular { .. } => "triangular",
            SupplyKind::PowerBump { .. } => "power-bump",
            SupplyKind::CompactBump { .. } => "compact-bump",
            SupplyKind::Samples { .. } => "samples",
        }
    }

    /// Returns a copy multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidSupply(format!("scale factor {factor} must be positive")));
        }
        let kind = match &self.kind {
            SupplyKind::Constant { value } => SupplyKind::Constant { value: value * factor },
            SupplyKind::Triangular { min, max } => {
                SupplyKind::Triangular { min: min * factor, max: max * factor }
            }
            SupplyKind::CompactBump { center, half_width, amplitude, base } => SupplyKind::CompactBump {
                center: *center,
                half_width: *half_width,
                amplitude: amplitude * factor,
                base: base * factor,
            },
            SupplyKind::PowerBump { .. } => {
                return Err(Error::InvalidSupply(
                    "power-bump is not closed under scaling; sample it instead".into(),
                ))
            }
            SupplyKind::Samples { per_axis, values } => SupplyKind::Samples {
                per_axis: *per_axis,
                values: values.iter().map(|v| v * factor).collect(),
            },
        };
        Ok(Self { kind, dim: self.dim, min: self.min * factor, max: self.max * factor })
    }

    /// `σ(x)` for `x` with `dim` coordinates (extra coordinates are ignored).
    pub fn eval(&self, x: &[f64]) -> f64 {
        let x = &x[..self.dim];
        match &self.kind {
            SupplyKind::Constant { value } => *value,
            SupplyKind::Triangular { min, max } => {
                let slope = 2.0 * (max - min);
                let sum: f64 = x
                    .iter()
                    .map(|&xi| {
                        let t = xi.rem_euclid(1.0);
                        min + slope * t.min(1.0 - t)
                    })
                    .sum();
                sum / self.dim as f64
            }
            SupplyKind::PowerBump { alpha, beta } => {
                let prod: f64 = x
                    .iter()
                    .map(|&xi| {
                        let t = xi.rem_euclid(1.0);
                        (t * (1.0 - t)).powf(*alpha)
                    })
                    .product();
                beta + prod
            }
            SupplyKind::CompactBump { center, half_width, amplitude, base } => {
                let prod: f64 = x
                    .iter()
                    .map(|&xi| {
                        let d = (xi - center + 0.5).rem_euclid(1.0) - 0.5;
                        if d.abs() >= *half_width {
                            0.0
                        } else {
                            let c = (0.5 * std::f64::consts::PI * d / half_width).cos();
                            c * c
                        }
                    })
                    .product();
                base + amplitude * prod
            }
            SupplyKind::Samples { per_axis, values } => sample_interp(*per_axis, values, x),
        }
    }

    /// Known non-smooth points of a 1D field in `[0, 1]`.
    pub fn breakpoints_1d(&self) -> Vec<f64> {
        let mut pts = match &self.kind {
            SupplyKind::Constant { .. } => vec![],
            SupplyKind::Triangular { .. } => vec![0.0, 0.5, 1.0],
            SupplyKind::PowerBump { .. } => vec![0.0, 0.5, 1.0],
            SupplyKind::CompactBump { center, half_width, .. } => [center - half_width, *center, center + half_width]
                .iter()
                .map(|v| v.rem_euclid(1.0))
                .collect(),
            SupplyKind::Samples { per_axis, .. } => {
                (0..=*per_axis).map(|i| i as f64 / *per_axis as f64).collect()
            }
        };
        pts.sort_by(|a, b| a.total_cmp(b));
        pts.dedup();
        pts
    }

    /// Minimizers of a 1D field.
    pub fn minimizers_1d(&self) -> MinimizerSet {
        match &self.kind {
            SupplyKind::Constant { .. } => MinimizerSet::Flat,
            SupplyKind::Triangular { min, max } => {
                if max > min {
                    MinimizerSet::Points(vec![0.0])
                } else {
                    MinimizerSet::Flat
                }
            }
            SupplyKind::PowerBump { .. } => MinimizerSet::Points(vec![0.0]),
            SupplyKind::CompactBump { center, amplitude, half_width, .. } => {
                if *amplitude > 0.0 && *half_width >= 0.5 {
                    // The bump fills the whole period; only its antipode is at the base.
                    MinimizerSet::Points(vec![(center + 0.5).rem_euclid(1.0)])
                } else {
                    MinimizerSet::Flat
                }
            }
            SupplyKind::Samples { per_axis, values } => {
                let tol = 1e-12 * self.min;
                let at_min: Vec<usize> =
                    (0..*per_axis).filter(|&i| values[i] - self.min <= tol).collect();
                let adjacent = at_min.iter().any(|&i| at_min.contains(&((i + 1) % per_axis)));
                if adjacent {
                    MinimizerSet::Flat
                } else {
                    MinimizerSet::Points(at_min.iter().map(|&i| i as f64 / *per_axis as f64).collect())
                }
            }
        }
    }

    /// A point in `[0, 1)` where a 1D field attains its maximum.
    pub fn maximizer_1d(&self) -> f64 {
        match &self.kind {
            SupplyKind::Constant { .. } => 0.0,
            SupplyKind::Triangular { .. } | SupplyKind::PowerBump { .. } => 0.5,
            SupplyKind::CompactBump { center, .. } => *center,
            SupplyKind::Samples { per_axis, values } => {
                let (i, _) = values[..*per_axis]
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
                i as f64 / *per_axis as f64
            }
        }
    }

    /// Flatness tolerance used when deciding whether `σ` exceeds its minimum.
    pub fn flatness_tolerance(&self) -> f64 {
        match &self.kind {
            SupplyKind::Samples { per_axis, values } => {
                // One grid-cell resolution: the largest jump between neighbouring samples.
                let k = *per_axis;
                let mut jump: f64 = 0.0;
                for (idx, v) in values.iter().enumerate() {
                    let (i, j) = if self.dim == 1 { (idx, 0) } else { (idx / k, idx % k) };
                    let right = if self.dim == 1 { (i + 1) % k } else { i * k + (j + 1) % k };
                    jump = jump.max((values[right] - v).abs());
                    if self.dim == 2 {
                        let down = ((i + 1) % k) * k + j;
                        jump = jump.max((values[down] - v).abs());
                    }
                }
                jump.max(1e-9 * self.min)
            }
            _ => 1e-9 * self.min,
        }
    }
}

fn sample_interp(k: usize, values: &[f64], x: &[f64]) -> f64 {
    let locate = |xi: f64| {
        let s = xi.rem_euclid(1.0) * k as f64;
        let i = (s.floor() as usize).min(k - 1);
        (i, s - i as f64)
    };
    match x.len() {
        1 => {
            let (i, t) = locate(x[0]);
            values[i] * (1.0 - t) + values[(i + 1) % k] * t
        }
        _ => {
            let (i, s) = locate(x[0]);
            let (j, t) = locate(x[1]);
            let at = |a: usize, b: usize| values[(a % k) * k + (b % k)];
            (1.0 - s) * ((1.0 - t) * at(i, j) + t * at(i, j + 1))
                + s * ((1.0 - t) * at(i + 1, j) + t * at(i + 1, j + 1))
        }
    }
}

/// `H(x, p) = σ(x) m(|p|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    pub sigma: SupplyField,
    pub kinetic: KineticModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    SolvablePossible,
    EmptyD,
    Boundary,
}

impl Hamiltonian {
    pub fn new(sigma: SupplyField, kinetic: KineticModel) -> Self {
        Self { sigma, kinetic }
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    pub fn eval(&self, x: &[f64], p: &[f64]) -> f64 {
        let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.sigma.eval(x) * self.kinetic.eval(r)
    }

    /// `σ_max · L`: Lipschitz constant in `p`, and the Lax–Friedrichs viscosity.
    pub fn p_lipschitz(&self) -> f64 {
        self.sigma.sigma_max() * self.kinetic.lipschitz
    }

    /// `σ_max · m_0`, the value of the effective Hamiltonian at `P = 0`.
    pub fn value_at_zero(&self) -> f64 {
        self.sigma.sigma_max() * self.kinetic.m0()
    }

    pub fn regime(&self) -> Regime {
        check_regime(self)
    }
}

/// Classifies whether the solvability set can be non-empty.
pub fn check_regime(h: &Hamiltonian) -> Regime {
    let lhs = h.value_at_zero();
    let rhs = h.sigma.sigma_min();
    if (lhs - rhs).abs() <= 1e-12 * rhs.max(1.0) {
        Regime::Boundary
    } else if lhs > rhs {
        Regime::EmptyD
    } else {
        Regime::SolvablePossible
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tanh_preset_values() {
        let m = KineticModel::tanh();
        assert_eq!(m.eval(0.0), 0.5);
        assert!((m.inverse(m.eval(1.3)) - 1.3).abs() < 1e-12);
        assert_eq!(m.lipschitz(), 0.5);
    }

    #[test]
    fn rational_inverse_at_m0() {
        let m = KineticModel::rational();
        assert_eq!(m.inverse(0.5), 0.0);
        assert!((m.inverse(m.eval(3.7)) - 3.7).abs() < 1e-12);
        assert_eq!(m.inverse(1.0), f64::INFINITY);
    }

    #[test]
    fn sampled_kinetic() {
        let r = vec![0.0, 1.0, 2.0, 4.0];
        let mv = vec![0.5, 0.7, 0.8, 0.9];
        let m = KineticModel::from_samples(r, mv).unwrap();
        assert!((m.lipschitz() - 0.2 * 1.05).abs() < 1e-15);
        assert!((m.eval(3.0) - 0.85).abs() < 1e-15);
        assert_eq!(m.eval(10.0), 0.9);
        assert!((m.inverse(0.75) - 1.5).abs() < 1e-12);
        assert_eq!(m.inverse(0.95), f64::INFINITY);
    }

    #[test]
    fn sampled_kinetic_rejects_bad_input() {
        assert!(KineticModel::from_samples(vec![0.0, 1.0], vec![0.6, 0.5]).is_err());
        assert!(KineticModel::from_samples(vec![0.0, 1.0], vec![0.5, 1.0]).is_err());
        assert!(KineticModel::from_samples(vec![0.0, 1.0], vec![0.0, 0.5]).is_err());
        assert!(KineticModel::from_samples(vec![0.5, 1.0], vec![0.5, 0.6]).is_err());
        assert!(KineticModel::from_preset("linear").is_err());
    }

    #[test]
    fn supply_presets() {
        let t = SupplyField::reference_triangular(1).unwrap();
        assert_eq!((t.sigma_min(), t.sigma_max()), (1.5, 2.5));
        assert_eq!(t.eval(&[0.0]), 1.5);
        assert_eq!(t.eval(&[0.5]), 2.5);
        assert!((t.eval(&[0.25]) - 2.0).abs() < 1e-15);
        // The literal tent x + 3/2, -x + 5/2.
        let lit = SupplyField::triangular(1.5, 2.0, 1).unwrap();
        for &x in &[0.1, 0.3, 0.7, 0.9] {
            let expect = if x < 0.5 { x + 1.5 } else { -x + 2.5 };
            assert!((lit.eval(&[x]) - expect).abs() < 1e-15);
        }
        let c = SupplyField::constant(2.0, 2).unwrap();
        assert_eq!((c.sigma_min(), c.sigma_max()), (2.0, 2.0));
        assert!(SupplyField::constant(0.0, 1).is_err());
        assert!(SupplyField::constant(1.0, 3).is_err());
        assert!(SupplyField::power_bump(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn power_bump_max_by_scan() {
        let s = SupplyField::power_bump(1.0, 1.0, 1).unwrap();
        let scan = (0..=10_000)
            .map(|i| s.eval(&[i as f64 / 10_000.0]))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((scan - 1.25).abs() < 1e-12);
        assert!((s.sigma_max() - 1.25).abs() < 1e-15);
        assert_eq!(s.sigma_min(), 1.0);
    }

    #[test]
    fn sampled_supply_periodic_and_bounded() {
        let vals: Vec<f64> = (0..8).map(|i| 2.0 + (i as f64 * 0.7).sin()).collect();
        let s = SupplyField::from_samples(vals, 1).unwrap();
        for i in 0..200 {
            let x = i as f64 / 97.0 - 1.0;
            let v = s.eval(&[x]);
            assert!((v - s.eval(&[x + 3.0])).abs() < 1e-12);
            assert!(v >= s.sigma_min() - 1e-15 && v <= s.sigma_max() + 1e-15);
        }
        assert!(SupplyField::from_samples(vec![1.0, -1.0], 1).is_err());
        assert!(SupplyField::from_samples(vec![1.0; 5], 2).is_err());
    }

    #[test]
    fn approximant_basics() {
        let m = KineticModel::tanh();
        let a1 = Approximant::new(&m, 1).unwrap();
        assert_eq!(a1.eval(0.0), 0.5);
        assert_eq!(a1.eval(10.0), 4.0);
        let mut prev = 0.0;
        for n in 1..=10 {
            let a = Approximant::new(&m, n).unwrap();
            assert!(a.alpha_n() > prev);
            prev = a.alpha_n();
            assert!((0.5 * a.alpha_n() - n as f64 - m.eval(a.alpha_n())).abs() < 1e-9);
        }
        assert!(Approximant::new(&m, 0).is_err());
    }

    #[test]
    fn regimes() {
        let m = KineticModel::tanh();
        let tri = SupplyField::reference_triangular(1).unwrap();
        assert_eq!(check_regime(&Hamiltonian::new(tri.clone(), m.clone())), Regime::SolvablePossible);
        let c = SupplyField::constant(2.0, 1).unwrap();
        assert_eq!(check_regime(&Hamiltonian::new(c, m.clone())), Regime::SolvablePossible);
        // σ_max m0 = 2 σ_min.
        let wide = SupplyField::triangular(1.0, 4.0, 1).unwrap();
        assert_eq!(check_regime(&Hamiltonian::new(wide, m.clone())), Regime::EmptyD);
        let edge = SupplyField::triangular(1.0, 2.0, 1).unwrap();
        assert_eq!(check_regime(&Hamiltonian::new(edge, m)), Regime::Boundary);
    }
}
