//! Scalar root bracketing and adaptive quadrature used throughout the crate.

/// Bisection for a root of `f` on `[lo, hi]`, assuming `f(lo)` and `f(hi)` have
/// opposite signs (either orientation). Stops when the bracket is narrower than
/// `xtol` or stops shrinking in floating point.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64) -> f64 {
    let f_lo = f(lo);
    if f_lo == 0.0 {
        return lo;
    }
    let lo_negative = f_lo < 0.0;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= xtol || mid == lo || mid == hi {
            return mid;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` with absolute tolerance `tol`.
///
/// The integrand is never evaluated outside `[a, b]`; endpoint singularities are
/// acceptable as long as `f(a)` and `f(b)` are finite.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || (m - a) < 1e-15 {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Integrates `f` over `[a, b]`, splitting at every breakpoint strictly inside.
pub fn integrate_piecewise<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.dedup();
    let mut knots = Vec::with_capacity(cuts.len() + 2);
    knots.push(a);
    knots.extend(cuts);
    knots.push(b);
    let pieces = (knots.len() - 1) as f64;
    knots
        .windows(2)
        .map(|w| adaptive_simpson(f, w[0], w[1], tol / pieces))
        .sum()
}
