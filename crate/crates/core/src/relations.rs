//! Sampled verification of the relations between the modular and the
//! Luxemburg norm, and of the quasi-triangle inequality.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gauge::GrowthFunction;
use crate::numerics::geometric_grid;
use crate::rng::Substreams;
use crate::space::{luxemburg_norm, modular, DiscreteMeasureSpace, OrliczVector};
use crate::transforms::{inverse_transforms, phi_of};

/// Luxemburg bisection residual used by the sweep.
pub const NORM_TOL: f64 = 1e-12;
/// Allowed negative slack on every relation margin.
pub const MARGIN_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct RelationReport {
    pub samples: usize,
    /// `min (φ(‖f‖) - [f]) / max(φ(‖f‖), 1)` over samples.
    pub worst_modular_margin: f64,
    /// `min (ϕ([f]) - ‖f‖) / max(ϕ([f]), 1)` over samples.
    pub worst_norm_margin: f64,
    /// `max [f/‖f‖] - 1` over nonzero samples.
    pub worst_unit_ball_excess: f64,
    /// `max ‖f+g‖ / (‖f‖ + ‖g‖)` over consecutive sample pairs.
    pub gamma_hat: f64,
    /// Smallest grid value `α` with `2 φ(2/α) <= 1`.
    pub alpha_bound: f64,
}

impl RelationReport {
    pub fn passes(&self) -> bool {
        self.worst_modular_margin >= -MARGIN_TOL
            && self.worst_norm_margin >= -MARGIN_TOL
            && self.worst_unit_ball_excess <= MARGIN_TOL
            && self.gamma_hat <= self.alpha_bound
    }
}

/// Smallest `α` on a fine geometric grid over `[1, 1e6]` with
/// `2 φ(2 γ_B / α) <= 1`, `γ_B = 1`.
pub fn quasi_triangle_constant(gauge: &GrowthFunction) -> Result<f64> {
    let grid = geometric_grid(1.0, 1e6, 13_817); // ratio ~1.001
    let ok = |a: f64| -> Result<bool> { Ok(2.0 * phi_of(gauge, 2.0 / a)? <= 1.0) };
    if !ok(grid[grid.len() - 1])? {
        return Err(Error::BracketExhausted("no alpha up to 1e6 satisfies 2 phi(2/alpha) <= 1".into()));
    }
    let (mut lo, mut hi) = (0usize, grid.len() - 1);
    if ok(grid[0])? {
        return Ok(grid[0]);
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ok(grid[mid])? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(grid[hi])
}

/// Draws `sample_count` random vectors (dimension 2) and checks
/// `[f] <= φ(‖f‖)`, `‖f‖ <= ϕ([f])`, the unit-ball law and the
/// quasi-triangle constant.
pub fn verify_norm_relations(
    space: &DiscreteMeasureSpace,
    gauge: &GrowthFunction,
    sample_count: usize,
    seed: u64,
) -> Result<RelationReport> {
    if sample_count == 0 {
        return Err(Error::InvalidParameter {
            name: "sample_count",
            value: 0.0,
            reason: "need at least one sample",
        });
    }
    let space = Arc::new(space.clone());
    let streams = Substreams::named(seed, "norm_relations");
    let mut samples: Vec<OrliczVector> = (0..sample_count)
        .map(|i| OrliczVector::random(Arc::clone(&space), 2, &mut streams.stream(i as u64, 0)))
        .collect();
    // the degenerate point is always part of the sweep
    samples[0] = OrliczVector::zeros(Arc::clone(&space), 2);

    let mut report = RelationReport {
        samples: sample_count,
        worst_modular_margin: f64::INFINITY,
        worst_norm_margin: f64::INFINITY,
        worst_unit_ball_excess: f64::NEG_INFINITY,
        gamma_hat: 0.0,
        alpha_bound: quasi_triangle_constant(gauge)?,
    };
    let mut norms = Vec::with_capacity(sample_count);
    for f in &samples {
        let m = modular(f, gauge);
        let n = luxemburg_norm(f, gauge, NORM_TOL)?;
        norms.push(n);
        if n == 0.0 {
            report.worst_modular_margin = report.worst_modular_margin.min(-m);
            report.worst_norm_margin = report.worst_norm_margin.min(0.0);
            continue;
        }
        let upper = phi_of(gauge, n)?;
        report.worst_modular_margin = report.worst_modular_margin.min((upper - m) / upper.max(1.0));
        let (_, varphi) = inverse_transforms(gauge, m)?;
        report.worst_norm_margin = report.worst_norm_margin.min((varphi - n) / varphi.max(1.0));
        let unit = modular(&f.scaled(1.0 / n), gauge);
        report.worst_unit_ball_excess = report.worst_unit_ball_excess.max(unit - 1.0);
    }
    for (i, pair) in samples.windows(2).enumerate() {
        let denom = norms[i] + norms[i + 1];
        if denom == 0.0 {
            continue;
        }
        let sum = luxemburg_norm(&pair[0].add(&pair[1])?, gauge, NORM_TOL)?;
        report.gamma_hat = report.gamma_hat.max(sum / denom);
    }
    if report.worst_unit_ball_excess == f64::NEG_INFINITY {
        report.worst_unit_ball_excess = 0.0;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::{make_gauge, Family};

    #[test]
    fn square_relations_collapse() {
        let g = make_gauge(Family::Power, &[2.0]).unwrap();
        let space = DiscreteMeasureSpace::new(vec![1.0, 0.5, 2.0]).unwrap();
        let r = verify_norm_relations(&space, &g, 40, 1).unwrap();
        assert!(r.passes(), "{r:?}");
        assert!(r.worst_modular_margin.abs() < 1e-9);
        assert!(r.worst_norm_margin.abs() < 1e-9);
        // a genuine norm: triangle inequality with constant one
        assert!(r.gamma_hat <= 1.0 + 1e-9);
        assert!((r.alpha_bound - 8f64.sqrt()).abs() < 4e-3);
    }

    #[test]
    fn zero_sample_only() {
        let g = make_gauge(Family::Power, &[2.0]).unwrap();
        let space = DiscreteMeasureSpace::unit_atom();
        let r = verify_norm_relations(&space, &g, 1, 0).unwrap();
        assert_eq!(r.worst_modular_margin, 0.0);
        assert_eq!(r.worst_norm_margin, 0.0);
        assert!(r.passes());
    }

    #[test]
    fn lambda_one_sweep() {
        let g = make_gauge(Family::LambdaAlpha, &[1.0]).unwrap();
        let space = DiscreteMeasureSpace::new(vec![1.0, 2.0, 0.25, 1.0, 3.0, 0.5, 1.0, 1.0]).unwrap();
        let r = verify_norm_relations(&space, &g, 200, 7).unwrap();
        assert!(r.worst_modular_margin >= -MARGIN_TOL, "{r:?}");
        assert!(r.worst_norm_margin >= -MARGIN_TOL, "{r:?}");
        assert!(r.gamma_hat <= r.alpha_bound);
        // φ(s) = s below one, so 2 φ(2/α) <= 1 iff α >= 4
        assert!((r.alpha_bound - 4.0).abs() < 5e-3);
        assert!(r.passes());
    }

    #[test]
    fn faithfulness_small_norm_means_small_values() {
        let g = make_gauge(Family::LambdaAlpha, &[1.0]).unwrap();
        let space = Arc::new(DiscreteMeasureSpace::new(vec![0.5, 2.0]).unwrap());
        let f = OrliczVector::new(space, 1, vec![1e-7, -3e-8]).unwrap();
        let n = luxemburg_norm(&f, &g, 1e-14).unwrap();
        assert!(n < 1e-6);
        // [f/n] <= 1 forces w_i Λ(|f_i|/n) <= 1, i.e. |f_i| <= n Λ^{-1}(1/w_i);
        // here Λ^{-1}(2) = 2 and Λ^{-1}(1/2) = 1/2 on the linear branch
        let bound = [2.0 * n, 0.5 * n];
        for (v, b) in f.norms().iter().zip(bound) {
            assert!(*v <= b * (1.0 + 1e-9), "{v} > {b}");
        }
    }
}
