//! Small numerical kernels shared by the gauge and space modules.

use crate::error::{Error, Result};

/// Geometric grid of `count` points from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (ll, lh) = (lo.ln(), hi.ln());
    let step = (lh - ll) / (count - 1) as f64;
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                (ll + step * i as f64).exp()
            }
        })
        .collect()
}

/// Smallest point of `[lo, hi]` at which a monotone predicate (false, then
/// true) switches on, located by bisection.
///
/// `pred(hi)` must hold. When `pred(lo)` already holds `lo` is returned.
/// The midpoint is geometric while the bracket spans more than a factor of
/// four on the positive axis, arithmetic otherwise.
pub fn bisect_threshold<P>(mut pred: P, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64
where
    P: FnMut(f64) -> bool,
{
    debug_assert!(lo <= hi);
    if pred(lo) {
        return lo;
    }
    for _ in 0..2000 {
        let mid = if lo > 0.0 && hi / lo > 4.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= rel_tol * hi.abs() {
            break;
        }
    }
    hi
}

/// Expands `hi` by doubling until `pred(hi)` holds, starting from `start`.
pub fn expand_upper<P>(mut pred: P, start: f64, limit: f64, what: &str) -> Result<f64>
where
    P: FnMut(f64) -> bool,
{
    let mut hi = start.max(f64::MIN_POSITIVE);
    while !pred(hi) {
        hi *= 2.0;
        if hi > limit || !hi.is_finite() {
            return Err(Error::BracketExhausted(format!(
                "{what}: no upper bracket below {limit:e}"
            )));
        }
    }
    Ok(hi)
}

/// Definite integral by the double-exponential rule. Endpoint singularities
/// of integrable type are handled by the transformation itself; interior
/// kinks are isolated by bisecting the interval until each piece meets its
/// share of the tolerance.
pub fn integrate<F>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if b <= a {
        return Ok(0.0);
    }
    let mut budget = MAX_PIECES;
    integrate_adaptive(&f, a, b, abs_tol, &mut budget)
}

const MAX_PIECES: usize = 512;

fn integrate_adaptive<F>(f: &F, a: f64, b: f64, abs_tol: f64, budget: &mut usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let out = quadrature::integrate(f, a, b, abs_tol);
    if !out.integral.is_finite() {
        return Err(Error::Quadrature(format!("non-finite integral on [{a}, {b}]")));
    }
    let allowed = 1e3 * abs_tol.max(1e-15 * out.integral.abs());
    if out.error_estimate <= allowed {
        return Ok(out.integral);
    }
    if *budget < 2 {
        return Err(Error::Quadrature(format!(
            "error estimate {:e} above tolerance {:e} on [{a}, {b}]",
            out.error_estimate, abs_tol
        )));
    }
    *budget -= 2;
    // pieces keep the caller's tolerance: the rule's own estimate is pessimistic
    // near endpoint singularities and would never settle if halved each level
    let mid = 0.5 * (a + b);
    let left = integrate_adaptive(f, a, mid, abs_tol, budget)?;
    let right = integrate_adaptive(f, mid, b, abs_tol, budget)?;
    Ok(left + right)
}

/// Vertices of the greatest convex minorant of the points `(x_i, y_i)`,
/// which must be sorted by strictly increasing `x`.
pub fn lower_convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &p in points {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b when it lies on or above the chord a -> p
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Piecewise-linear evaluation of a hull (or any sorted polyline) at `x`.
pub fn polyline_eval(vertices: &[(f64, f64)], x: f64) -> f64 {
    let idx = vertices.partition_point(|v| v.0 <= x);
    if idx == 0 {
        return vertices[0].1;
    }
    if idx == vertices.len() {
        return vertices[vertices.len() - 1].1;
    }
    let (a, b) = (vertices[idx - 1], vertices[idx]);
    let w = (x - a.0) / (b.0 - a.0);
    a.1 + w * (b.1 - a.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_square_root() {
        let r = bisect_threshold(|x| x * x >= 2.0, 0.0, 2.0, 1e-15);
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn bisection_returns_lower_end_when_already_true() {
        assert_eq!(bisect_threshold(|_| true, 0.5, 3.0, 1e-12), 0.5);
    }

    #[test]
    fn geometric_bisection_over_many_decades() {
        let r = bisect_threshold(|x| x >= 1e-7, 1e-12, 1e6, 1e-13);
        assert!((r / 1e-7 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expand_upper_fails_for_bounded_map() {
        assert!(expand_upper(|x| x.atan() > 2.0, 1.0, 1e300, "atan").is_err());
        let hi = expand_upper(|x| x > 100.0, 1.0, 1e300, "id").unwrap();
        assert_eq!(hi, 128.0);
    }

    #[test]
    fn double_exponential_handles_sqrt_singularity() {
        let v = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-8);
    }

    #[test]
    fn interior_kink_is_isolated() {
        let v = integrate(|x| (x - 0.37).abs(), 0.0, 1.0, 1e-13).unwrap();
        let exact = 0.5 * (0.37f64.powi(2) + 0.63f64.powi(2));
        assert!((v - exact).abs() < 1e-11);
    }

    #[test]
    fn hull_bridges_concave_kink() {
        let pts = [(0.0, 0.0), (1.0, 2.0), (2.0, 2.5), (3.0, 6.0)];
        let hull = lower_convex_hull(&pts);
        assert_eq!(hull, vec![(0.0, 0.0), (2.0, 2.5), (3.0, 6.0)]);
        assert!((polyline_eval(&hull, 1.0) - 1.25).abs() < 1e-15);
    }
}
