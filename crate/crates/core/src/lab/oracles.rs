//! Deterministic oracle checks: numeric transforms of power gauges against
//! their closed forms, Young's inequality over the registry, and the
//! sampled norm relations.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Check, Params, RatioReport};
use crate::classify::{kappa_ratio, n_function_probe, ProbeConfig};
use crate::error::Result;
use crate::gauge::{registry, GaugeSpec};
use crate::numerics::geometric_grid;
use crate::relations::verify_norm_relations;
use crate::rng::Substreams;
use crate::space::{luxemburg_of_norms, DiscreteMeasureSpace};
use crate::transforms::{complementary_gauge, inverse_transforms, phi_of, young_gap};

pub const POWER_ORACLES: &str = "power_oracles";
pub const YOUNG: &str = "young_inequality";
pub const RELATIONS: &str = "norm_relations";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerOracleConfig {
    pub exponents: Vec<f64>,
    pub points: Vec<f64>,
    /// Relative tolerance of every comparison.
    pub tol: f64,
    pub atoms: usize,
}

impl Default for PowerOracleConfig {
    fn default() -> Self {
        PowerOracleConfig { exponents: vec![1.5, 2.0, 3.0], points: vec![0.1, 0.5, 2.0, 10.0], tol: 1e-4, atoms: 8 }
    }
}

/// Numeric `φ, ψ, ϕ`, complementary function, `κ` and Luxemburg norm of
/// `t^p` with closed forms disabled, against `s^p, t^{1/p}, t^{1/p},
/// t^q/q, 1/(p−1)` and the weighted `ℓ^p` norm.
pub fn power_oracles(cfg: &PowerOracleConfig, seed: u64) -> Result<Vec<RatioReport>> {
    let close = Check::Close { limit: cfg.tol };
    let mut out = Vec::new();
    let streams = Substreams::named(seed, POWER_ORACLES);
    for &p in &cfg.exponents {
        let g = GaugeSpec::power(p).build()?.without_closed_forms();
        let q = p / (p - 1.0);
        let mut row = |what: &str, x: f64, numeric: f64, exact: f64| {
            let params = Params::new().with("p", p).with("at", x);
            out.push(RatioReport::exact(POWER_ORACLES, what, &params, numeric, exact, close, 0));
        };
        for &x in &cfg.points {
            row("dilation transform", x, phi_of(&g, x)?, x.powf(p));
            let (psi, varphi) = inverse_transforms(&g, x)?;
            row("generalized inverse", x, psi, x.powf(1.0 / p));
            row("reciprocal inverse", x, varphi, x.powf(1.0 / p));
            row("integral ratio", x, kappa_ratio(&g, x)?, 1.0 / (p - 1.0));
        }
        let scaled = GaugeSpec::Power { p, scale: 1.0 / p }.build()?.without_closed_forms();
        let comp = complementary_gauge(&scaled)?;
        for &x in &cfg.points {
            row("complementary function", x, comp.eval(x), x.powf(q) / q);
        }
        let mut rng = streams.stream(p.to_bits() >> 32, 0);
        let weights: Vec<f64> = (0..cfg.atoms).map(|_| rng.random_range(0.1..3.0)).collect();
        let norms: Vec<f64> = (0..cfg.atoms).map(|_| rng.random_range(0.0..5.0)).collect();
        let exact = weights.iter().zip(&norms).map(|(w, n)| w * n.powf(p)).sum::<f64>().powf(1.0 / p);
        row("luxemburg norm", cfg.atoms as f64, luxemburg_of_norms(&weights, &norms, &g, 1e-12)?, exact);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YoungConfig {
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_n: usize,
    pub gap_floor: f64,
    pub equality_tol: f64,
}

impl Default for YoungConfig {
    fn default() -> Self {
        YoungConfig { grid_lo: 0.05, grid_hi: 20.0, grid_n: 32, gap_floor: -1e-9, equality_tol: 1e-6 }
    }
}

/// Minimum Young gap on the grid for every registered N-function, and the
/// equality case `t = a(s)` for `t²/2` with both the closed-form and the
/// quadrature complement.
pub fn young_inequality(cfg: &YoungConfig) -> Result<Vec<RatioReport>> {
    let grid = geometric_grid(cfg.grid_lo, cfg.grid_hi, cfg.grid_n);
    let probe = ProbeConfig::default();
    let mut out = Vec::new();
    for (name, g) in registry() {
        if n_function_probe(&g, &probe).is_err() {
            continue;
        }
        let comp = complementary_gauge(&g)?;
        let mut worst = f64::INFINITY;
        for &s in &grid {
            for &t in &grid {
                worst = worst.min(young_gap(&g, &comp, s, t));
            }
        }
        out.push(RatioReport::exact(
            YOUNG,
            "Young gap is nonnegative",
            &Params::new().with("gauge", name).with("grid", cfg.grid_n),
            worst,
            0.0,
            Check::AtLeast { floor: cfg.gap_floor },
            cfg.grid_n,
        ));
    }
    let half = GaugeSpec::Power { p: 2.0, scale: 0.5 }.build()?;
    for (form, g) in [("closed", half.clone()), ("quadrature", half.without_closed_forms())] {
        let comp = complementary_gauge(&g)?;
        let worst = grid.iter().map(|&s| young_gap(&g, &comp, s, g.derivative(s)).abs()).fold(0.0, f64::max);
        out.push(RatioReport::exact(
            YOUNG,
            "Young equality at the derivative",
            &Params::new().with("gauge", "half_square").with("complement", form),
            worst,
            0.0,
            Check::Within { target: 0.0, tol: cfg.equality_tol },
            cfg.grid_n,
        ));
    }
    Ok(out)
}

/// Sampled `[f] <= φ(‖f‖)`, `‖f‖ <= ϕ([f])` and quasi-triangle checks; each
/// row counts failing relation groups.
pub fn norm_relations(weights: &[f64], gauges: &[GaugeSpec], samples: usize, seed: u64) -> Result<Vec<RatioReport>> {
    let space = DiscreteMeasureSpace::new(weights.to_vec())?;
    let mut out = Vec::new();
    for spec in gauges {
        let g = spec.build()?;
        let rep = verify_norm_relations(&space, &g, samples, seed)?;
        let v = u64::from(!rep.passes());
        out.push(RatioReport::exact(
            RELATIONS,
            "modular and norm bounds, quasi-triangle",
            &Params::new().with("gauge", format!("{spec:?}")).with("samples", samples),
            rep.gamma_hat,
            rep.alpha_bound,
            Check::Pointwise { violations: v },
            0,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_oracles_pass() {
        let rows = power_oracles(&PowerOracleConfig::default(), 0).unwrap();
        assert_eq!(rows.len(), 3 * (4 * 4 + 4 + 1));
        for r in &rows {
            assert!(r.verdict, "{r:?}");
        }
    }

    #[test]
    fn young_passes_on_registry() {
        let rows = young_inequality(&YoungConfig::default()).unwrap();
        for r in &rows {
            assert!(r.verdict, "{r:?}");
        }
        // the two non-convex or non-N entries are skipped
        assert!(!rows.iter().any(|r| r.params.contains("lambda_alpha_0") || r.params.contains("exp_minus_one")));
    }

    #[test]
    fn relations_pass() {
        let rows = norm_relations(&[1.0, 1.0, 2.0, 0.5], &[GaugeSpec::power(2.0), GaugeSpec::LambdaAlpha { alpha: 1.0 }], 50, 1).unwrap();
        assert!(rows.iter().all(|r| r.verdict));
    }
}
