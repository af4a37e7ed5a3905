//! Two-sided BDG in Orlicz spaces: `E Φ(sup_{t<=τ} [ℐˣ_t]_Λ)` against
//! `E Φ(|‖X‖|_{Λ,τ})`, over horizon and scaling sweeps on two grids, with the
//! Luxemburg-norm form for power gauges.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::doob::require_a2;
use super::{refined_pair, refinement_report, sample_columns, spread_report, Check, Params, RatioReport};
use crate::classify::{classify_gauge, ProbeConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gauge::{GaugeSpec, GrowthFunction};
use crate::integrator::{ito_integral, ProcessSpec, Rule};
use crate::paths::PathGrid;
use crate::rng::Substreams;
use crate::space::{luxemburg_of_norms, DiscreteMeasureSpace};

pub const EXPERIMENT: &str = "orlicz_bdg";
pub const LUXEMBURG: &str = "orlicz_bdg_luxemburg";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrliczBdgConfig {
    pub lambdas: Vec<GaugeSpec>,
    pub phi: GaugeSpec,
    pub weights: Vec<f64>,
    pub rules: Vec<Rule>,
    /// `τ = T` for each horizon; the grid runs to the largest.
    pub horizons: Vec<f64>,
    pub scales: Vec<f64>,
    /// Coarse steps per unit time; the fine grid has `refinement` times more.
    pub steps_per_unit: usize,
    #[serde(default = "super::good_lambda::default_refinement")]
    pub refinement: usize,
    #[serde(default = "super::bdg::default_stability")]
    pub stability: f64,
    pub refinement_limit: f64,
    /// Replicates (a prefix of the main ones) for the Luxemburg path.
    pub luxemburg_replicates: usize,
    pub replicates: usize,
}

impl OrliczBdgConfig {
    pub fn standard(steps_per_unit: usize, replicates: usize) -> Self {
        OrliczBdgConfig {
            lambdas: vec![GaugeSpec::power(2.0), GaugeSpec::LambdaAlpha { alpha: 2.0 }],
            phi: GaugeSpec::power(1.0),
            weights: vec![1.0, 1.0, 2.0, 0.5],
            rules: vec![Rule::SignOfB1, Rule::TwoCoordMix],
            horizons: vec![0.5, 1.0, 2.0],
            scales: vec![0.5, 1.0, 2.0],
            steps_per_unit,
            refinement: 4,
            stability: 10.0,
            refinement_limit: 0.15,
            luxemburg_replicates: (replicates / 10).max(100),
            replicates,
        }
    }
}

struct Prepared {
    spec: GaugeSpec,
    gauge: GrowthFunction,
    reverse: bool,
}

fn prepare(spec: &GaugeSpec) -> Result<Prepared> {
    let gauge = spec.build()?;
    let report = classify_gauge(&gauge, &ProbeConfig::default())?;
    if !report.is_a1() {
        return Err(Error::ClassPrecondition(format!("{} fails the class probes", gauge.family())));
    }
    let reverse = require_a2(&gauge).is_ok();
    Ok(Prepared { spec: spec.clone(), gauge, reverse })
}

fn label(spec: &GaugeSpec) -> String {
    format!("{spec:?}")
}

pub fn orlicz_bdg(cfg: &OrliczBdgConfig, seed: u64, exec: Execution) -> Result<Vec<RatioReport>> {
    let gauges = cfg.lambdas.iter().map(prepare).collect::<Result<Vec<_>>>()?;
    let phi = cfg.phi.build()?;
    let space = Arc::new(DiscreteMeasureSpace::new(cfg.weights.clone())?);
    let t_max = cfg.horizons.iter().copied().fold(0.0, f64::max);
    let coarse_steps = (t_max * cfg.steps_per_unit as f64).round() as usize;
    let coarse = PathGrid::new(t_max, coarse_steps)?;
    let fine = PathGrid::new(t_max, coarse_steps * cfg.refinement)?;
    let idx = |grid: &PathGrid| -> Result<Vec<usize>> {
        cfg.horizons.iter().map(|&t| grid.index_of(t).ok_or(Error::MisalignedBreakpoint(t))).collect()
    };
    let (ic, i_f) = (idx(&coarse)?, idx(&fine)?);
    let d = cfg.rules.iter().map(|r| r.support()).max().unwrap_or(1);
    let (nr, nc, ng, nh) = (cfg.rules.len(), cfg.scales.len(), gauges.len(), cfg.horizons.len());
    let per_grid = nr * nc * ng * nh * 2;
    let streams = Substreams::named(seed, EXPERIMENT);
    let cols = sample_columns(exec, cfg.replicates, 2 * per_grid, |r, row| {
        let (cb, fb) = refined_pair(&streams, r, d, fine, cfg.refinement)?;
        for (b, ks) in [(&cb, &ic), (&fb, &i_f)] {
            for &rule in &cfg.rules {
                for &c in &cfg.scales {
                    let x = ProcessSpec { scale: c, ..ProcessSpec::from(rule) }.realize(b, space.len())?;
                    let ip = ito_integral(&x, b)?;
                    for g in &gauges {
                        let modular = ip.modular_path(&space, &g.gauge);
                        let triple = ip.triple_norm_path(&space, &g.gauge);
                        let mut run = 0.0f64;
                        let mut next = 0;
                        for &k in ks.iter() {
                            for v in &modular[next..=k] {
                                run = run.max(*v);
                            }
                            next = k + 1;
                            row.push(phi.eval(run));
                            row.push(phi.eval(triple[k]));
                        }
                    }
                }
            }
        }
        Ok(())
    })?;

    // Φ(t) = t with Λ = t²: sup Σμ|ℐ|² sits between the terminal value and
    // four times the clock, by the isometry and Doob
    let bracket = |g: &Prepared| {
        matches!(cfg.phi, GaugeSpec::Power { p, scale } if p == 1.0 && scale == 1.0)
            && matches!(g.spec, GaugeSpec::Power { p, scale } if p == 2.0 && scale == 1.0)
    };
    let mut out = Vec::new();
    // per grid, [rule][gauge][direction] sweeps and the flat row list
    let mut by_grid: Vec<Vec<RatioReport>> = Vec::new();
    for (gi, grid_steps) in [(0usize, &ic), (1, &i_f)] {
        let mut rows = Vec::new();
        let mut c = gi * per_grid;
        for &rule in &cfg.rules {
            for &scale in &cfg.scales {
                for g in &gauges {
                    for (hi, &t) in cfg.horizons.iter().enumerate() {
                        let params = Params::new()
                            .with("rule", rule)
                            .with("lambda", label(&g.spec))
                            .with("phi", label(&cfg.phi))
                            .with("T", t)
                            .with("c", scale);
                        let (lhs, rhs) = (&cols[c], &cols[c + 1]);
                        c += 2;
                        let (fwd, rev) = if bracket(g) {
                            (Check::Bracket { lower: 1.0, upper: 4.0 }, Check::Bracket { lower: 0.25, upper: 1.0 })
                        } else {
                            (Check::Finite, Check::Finite)
                        };
                        let n = grid_steps[hi];
                        rows.push(RatioReport::paired(EXPERIMENT, "maximal modular against clock", &params, lhs, rhs, fwd, n));
                        if g.reverse {
                            rows.push(RatioReport::paired(EXPERIMENT, "clock against maximal modular", &params, rhs, lhs, rev, n));
                        }
                    }
                }
            }
        }
        by_grid.push(rows);
    }
    let grid_n = [coarse.steps, fine.steps];
    for (gi, rows) in by_grid.iter().enumerate() {
        for &rule in &cfg.rules {
            for g in &gauges {
                for anchor in ["maximal modular against clock", "clock against maximal modular"] {
                    let sel: Vec<&RatioReport> = rows
                        .iter()
                        .filter(|r| {
                            r.anchor == anchor
                                && r.params.starts_with(&format!("rule={rule};lambda={};", label(&g.spec)))
                        })
                        .collect();
                    if sel.is_empty() {
                        continue;
                    }
                    let params = Params::new().with("rule", rule).with("lambda", label(&g.spec)).with("direction", anchor);
                    out.push(spread_report(
                        EXPERIMENT,
                        "ratio bounded over horizon and scaling sweep",
                        &params,
                        &sel,
                        cfg.stability,
                        grid_n[gi],
                    ));
                }
            }
        }
    }
    for (a, b) in by_grid[0].iter().zip(&by_grid[1]) {
        debug_assert_eq!((&a.anchor, &a.params), (&b.anchor, &b.params));
        let params = Params::new().with("direction", &a.anchor).with("row", &a.params);
        out.push(refinement_report(EXPERIMENT, "ratio stable under refinement", &params, a, b, cfg.refinement_limit));
    }
    for rows in by_grid {
        out.extend(rows);
    }
    out.extend(luxemburg_rows(cfg, &gauges, &space, &streams, fine, exec)?);
    Ok(out)
}

/// For `Λ = t^p`, `E sup_t ‖ℐ_t‖_Λ` by bisected Luxemburg norms against
/// `E (sup_t [ℐ_t]_Λ)^{1/p}`, and the L^p form of the two-sided bound.
fn luxemburg_rows(
    cfg: &OrliczBdgConfig,
    gauges: &[Prepared],
    space: &DiscreteMeasureSpace,
    streams: &Substreams,
    fine: PathGrid,
    exec: Execution,
) -> Result<Vec<RatioReport>> {
    let powers: Vec<(&Prepared, f64)> = gauges
        .iter()
        .filter_map(|g| match g.spec {
            GaugeSpec::Power { p, scale } if scale == 1.0 => Some((g, p)),
            _ => None,
        })
        .collect();
    let d = cfg.rules.iter().map(|r| r.support()).max().unwrap_or(1);
    let width = cfg.rules.len() * powers.len() * 3;
    let reps = cfg.luxemburg_replicates.min(cfg.replicates);
    let cols = sample_columns(exec, reps, width, |r, row| {
        let (cb, _) = refined_pair(streams, r, d, fine, cfg.refinement)?;
        let n = cb.grid().steps;
        for &rule in &cfg.rules {
            let x = ProcessSpec::from(rule).realize(&cb, space.len())?;
            let ip = ito_integral(&x, &cb)?;
            for (g, p) in &powers {
                let modular = ip.modular_path(space, &g.gauge);
                let mut sup_norm = 0.0f64;
                for k in 0..=n {
                    let norms: Vec<f64> = ip.integral_at(k).iter().map(|v| v.abs()).collect();
                    sup_norm = sup_norm.max(luxemburg_of_norms(space.weights(), &norms, &g.gauge, 1e-13)?);
                }
                let sup_mod = modular.iter().copied().fold(0.0, f64::max);
                let eta: Vec<f64> = ip.eta_at(n).iter().map(|v| v.sqrt()).collect();
                row.push(sup_norm);
                row.push(sup_mod.powf(1.0 / p));
                row.push(luxemburg_of_norms(space.weights(), &eta, &g.gauge, 1e-13)?);
            }
        }
        Ok(())
    })?;
    let mut out = Vec::new();
    let mut c = 0;
    for &rule in &cfg.rules {
        for (g, _) in &powers {
            let params = Params::new().with("rule", rule).with("lambda", label(&g.spec)).with("T", fine.horizon);
            out.push(RatioReport::paired(
                LUXEMBURG,
                "norm path equals modular path to the power 1/p",
                &params,
                &cols[c],
                &cols[c + 1],
                Check::Close { limit: 1e-6 },
                fine.steps / cfg.refinement,
            ));
            out.push(RatioReport::paired(
                LUXEMBURG,
                "L^p maximal norm against clock norm",
                &params,
                &cols[c],
                &cols[c + 2],
                Check::Finite,
                fine.steps / cfg.refinement,
            ));
            c += 3;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_atom_square_reduces_to_scalar_bracket() {
        let cfg = OrliczBdgConfig {
            lambdas: vec![GaugeSpec::power(2.0)],
            weights: vec![1.0],
            rules: vec![Rule::ConstantE1],
            horizons: vec![1.0],
            scales: vec![1.0],
            luxemburg_replicates: 200,
            ..OrliczBdgConfig::standard(32, 2000)
        };
        let rows = orlicz_bdg(&cfg, 4, Execution::Sequential).unwrap();
        for r in &rows {
            assert!(r.verdict, "{r:?}");
        }
        let fwd = rows.iter().find(|r| r.anchor == "maximal modular against clock").unwrap();
        assert_eq!(fwd.check, Check::Bracket { lower: 1.0, upper: 4.0 });
        // the clock is [√τ]_Λ = τ = 1 on every path
        assert_eq!(fwd.rhs.mean, 1.0);
    }

    #[test]
    fn small_suite_runs_and_passes() {
        let cfg = OrliczBdgConfig { luxemburg_replicates: 100, ..OrliczBdgConfig::standard(16, 1500) };
        let rows = orlicz_bdg(&cfg, 2, Execution::Sequential).unwrap();
        let failed: Vec<_> = rows.iter().filter(|r| !r.verdict).collect();
        assert!(failed.is_empty(), "{failed:#?}");
        assert!(rows.iter().any(|r| r.anchor == "clock against maximal modular" && r.params.contains("LambdaAlpha")));
    }

    #[test]
    fn zero_integrand_is_degenerate() {
        let cfg = OrliczBdgConfig {
            lambdas: vec![GaugeSpec::power(2.0)],
            scales: vec![0.0],
            rules: vec![Rule::ConstantE1],
            luxemburg_replicates: 0,
            ..OrliczBdgConfig::standard(8, 100)
        };
        let rows = orlicz_bdg(&cfg, 2, Execution::Sequential).unwrap();
        let fwd = rows.iter().find(|r| r.anchor == "maximal modular against clock").unwrap();
        assert_eq!((fwd.lhs.mean, fwd.rhs.mean), (0.0, 0.0));
        assert!(fwd.verdict);
    }

    #[test]
    fn bounded_gauge_is_rejected() {
        let cfg = OrliczBdgConfig {
            lambdas: vec![GaugeSpec::LambdaAlpha { alpha: 0.0 }],
            ..OrliczBdgConfig::standard(8, 100)
        };
        assert!(matches!(orlicz_bdg(&cfg, 0, Execution::Sequential), Err(Error::ClassPrecondition(_))));
    }
}
