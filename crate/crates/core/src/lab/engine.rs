//! Checks of the simulation engine itself: Brownian marginals, the grid
//! Itô isometry under the suite stopping times, and `𝒥ᵐ` convergence.

use std::f64::consts::FRAC_2_PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{refined_pair, sample_columns, stop_index, stop_label, Check, Params, RatioReport};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gauge::GaugeSpec;
use crate::integrator::{
    coarsen_jm, eta_and_triple_norm, ito_integral, l2_distance_sq, make_elementary, nested_prefix, truncate_process,
    ElementarySpec, GridProcess, ProcessSpec, Rule,
};
use crate::paths::{path_functionals, simulate_bundle, BrownianBundle, PathGrid, StoppingTimeSpec};
use crate::rng::Substreams;
use crate::space::DiscreteMeasureSpace;

pub const BROWNIAN: &str = "brownian_engine";
pub const ISOMETRY: &str = "ito_isometry";
pub const COARSENING: &str = "coarsening";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    pub horizon: f64,
    pub steps: usize,
    pub replicates: usize,
}

/// Marginals, running maximum, quadratic variation, cross-coordinate
/// independence and the Itô formula for `∫ B dB`, all at the horizon.
pub fn brownian_engine(cfg: &EngineConfig, seed: u64, exec: Execution) -> Result<Vec<RatioReport>> {
    let grid = PathGrid::new(cfg.horizon, cfg.steps)?;
    let streams = Substreams::named(seed, BROWNIAN);
    let t = cfg.horizon;
    let cols = sample_columns(exec, cfg.replicates, 6, |r, row| {
        let b = simulate_bundle(&streams, r, 2, grid)?;
        let (b1, b2) = (b.coord(0), b.coord(1));
        let end = b1[cfg.steps];
        let max = b1.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let qv = *path_functionals(b1).1.last().unwrap_or(&0.0);
        let x = GridProcess::from_rule(Rule::B1TimesE1, &b, 1)?;
        let ito = ito_integral(&x, &b)?.integral(0)[cfg.steps];
        row.extend([end, end * end, max, qv, end * b2[cfg.steps], ito - 0.5 * (end * end - t)]);
        Ok(())
    })?;
    let n = cfg.steps;
    let p = |what: &str| Params::new().with("T", t).with("stat", what);
    let target = |target: f64, allowance: f64| Check::Target { target, allowance };
    let row = |anchor: &str, what: &str, col: &Vec<f64>, check: Check| {
        RatioReport::paired(BROWNIAN, anchor, &p(what), col, &vec![1.0; col.len()], check, n)
    };
    Ok(vec![
        row("mean of B_T", "mean", &cols[0], target(0.0, 0.0)),
        row("variance of B_T", "second_moment", &cols[1], target(t, 0.0)),
        row("expected grid maximum", "max", &cols[2], target((FRAC_2_PI * t).sqrt(), 0.02)),
        row("quadratic variation", "qv", &cols[3], target(t, 0.0)),
        row("coordinate independence", "cross_moment", &cols[4], target(0.0, 0.0)),
        row("Ito formula for B dB", "ito_residual", &cols[5], target(0.0, 0.0)),
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsometryConfig {
    pub horizon: f64,
    /// Coarse grid; the fine grid has `refinement` times as many steps.
    pub steps: usize,
    #[serde(default = "super::good_lambda::default_refinement")]
    pub refinement: usize,
    pub weights: Vec<f64>,
    /// Bounded rules run as elementary processes on `blocks` equal blocks,
    /// the others as grid-adapted rules.
    pub rules: Vec<Rule>,
    pub blocks: usize,
    pub stops: Vec<StoppingTimeSpec>,
    /// Gauge of the triple norm read by norm-threshold stops.
    pub norm_gauge: GaugeSpec,
    pub replicates: usize,
}

impl IsometryConfig {
    pub fn standard(steps: usize, replicates: usize) -> Self {
        IsometryConfig {
            horizon: 1.0,
            steps,
            refinement: 4,
            weights: vec![1.0, 1.0, 2.0, 0.5],
            rules: Rule::ALL.to_vec(),
            blocks: 8,
            stops: vec![
                StoppingTimeSpec::Deterministic { t: 1.0 },
                StoppingTimeSpec::first_exit(0.5),
                StoppingTimeSpec::norm_threshold(0.25),
            ],
            norm_gauge: GaugeSpec::power(2.0),
            replicates,
        }
    }
}

fn integrand(rule: Rule, blocks: usize, bundle: &BrownianBundle, space: &DiscreteMeasureSpace) -> Result<GridProcess> {
    let grid = bundle.grid();
    if rule.bound().is_some() {
        let breakpoints = (0..blocks).map(|b| grid.horizon * b as f64 / blocks as f64).collect();
        let spec = ElementarySpec { breakpoints, rule, bound: None };
        Ok(make_elementary(&spec, bundle, space)?.to_grid(grid.steps))
    } else {
        ProcessSpec::from(rule).realize(bundle, space.len())
    }
}

/// `E|ℐˣ_τ(x)|²` against `E η^X_τ(x)` per atom, rule and stop, on both
/// grids of a shared driver; also the null mean of `ℐˣ_T`.
pub fn ito_isometry(cfg: &IsometryConfig, seed: u64, exec: Execution) -> Result<Vec<RatioReport>> {
    let space = Arc::new(DiscreteMeasureSpace::new(cfg.weights.clone())?);
    let gauge = cfg.norm_gauge.build()?;
    let fine = PathGrid::new(cfg.horizon, cfg.steps * cfg.refinement)?;
    let d = cfg.rules.iter().map(|r| r.support()).max().unwrap_or(1);
    let atoms = space.len();
    let (nr, ns) = (cfg.rules.len(), cfg.stops.len());
    let per_grid = nr * (ns * atoms * 2 + atoms);
    let streams = Substreams::named(seed, ISOMETRY);
    let cols = sample_columns(exec, cfg.replicates, 2 * per_grid, |r, row| {
        let (coarse, fine) = refined_pair(&streams, r, d, fine, cfg.refinement)?;
        for bundle in [&coarse, &fine] {
            let n = bundle.grid().steps;
            for &rule in &cfg.rules {
                let x = integrand(rule, cfg.blocks, bundle, &space)?;
                let ip = ito_integral(&x, bundle)?;
                let triple = ip.triple_norm_path(&space, &gauge);
                for stop in &cfg.stops {
                    let k = stop_index(stop, bundle, Some(&triple))?;
                    for i in 0..atoms {
                        row.push(ip.integral(i)[k].powi(2));
                        row.push(ip.eta(i)[k]);
                    }
                }
                row.extend((0..atoms).map(|i| ip.integral(i)[n]));
            }
        }
        Ok(())
    })?;
    let mut out = Vec::new();
    let mut c = 0;
    for grid_n in [cfg.steps, fine.steps] {
        for &rule in &cfg.rules {
            let form = if rule.bound().is_some() { "elementary" } else { "adapted" };
            for stop in &cfg.stops {
                for i in 0..atoms {
                    let params = Params::new()
                        .with("rule", rule)
                        .with("form", form)
                        .with("stop", stop_label(stop))
                        .with("atom", i);
                    out.push(RatioReport::paired(
                        ISOMETRY,
                        "isometry at a stopping time",
                        &params,
                        &cols[c],
                        &cols[c + 1],
                        Check::Equal { diff_mean: 0.0, diff_stderr: 0.0 },
                        grid_n,
                    ));
                    c += 2;
                }
            }
            for i in 0..atoms {
                let params = Params::new().with("rule", rule).with("form", form).with("atom", i);
                out.push(RatioReport::paired(
                    ISOMETRY,
                    "martingale null mean",
                    &params,
                    &cols[c],
                    &vec![1.0; cols[c].len()],
                    Check::Target { target: 0.0, allowance: 0.0 },
                    grid_n,
                ));
                c += 1;
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoarseningConfig {
    pub steps: usize,
    /// The pair `[m, 2m]` compared for convergence.
    pub m_pair: [usize; 2],
    /// Bundles on which prefix domination is checked for every suite rule.
    pub domination_replicates: usize,
    pub weights: Vec<f64>,
    /// Bound `c` of the truncation test integrand `c sign(B¹) e₁`.
    pub truncation_bound: f64,
    pub truncation_ns: Vec<u32>,
}

impl CoarseningConfig {
    pub fn standard() -> Self {
        CoarseningConfig {
            steps: 4096,
            m_pair: [8, 16],
            domination_replicates: 64,
            weights: vec![1.0, 1.0, 2.0, 0.5],
            truncation_bound: 3.0,
            truncation_ns: (1..=8).collect(),
        }
    }
}

/// Midpoint samples of `f` on the cells of `grid`, so left-Riemann block
/// averages are exact for linear `f`.
fn midpoint_cells(f: impl Fn(f64) -> f64, grid: &PathGrid) -> Vec<f64> {
    (0..grid.steps).map(|k| f(grid.time(k) + 0.5 * grid.dt())).collect()
}

/// `‖𝒥ᵐf − f‖_{L²[0,T]}` on the grid.
pub fn jm_error(f: &[f64], m: usize, grid: &PathGrid) -> Result<f64> {
    let c = coarsen_jm(f, 1, m, grid)?;
    Ok(l2_distance_sq(&c, f, grid.dt()).sqrt())
}

/// Per-path prefix domination `∫₀ᵗ ‖𝒥ᵐX‖² ≤ ∫₀ᵗ ‖X‖²` at every grid time
/// and atom; returns the number of violations.
pub fn domination_violations(x: &GridProcess, m: usize, grid: &PathGrid) -> Result<u64> {
    let c = x.coarsened(m, grid)?;
    let mut bad = 0;
    for i in 0..x.atoms() {
        let (mut a, mut b) = (0.0, 0.0);
        for k in 0..x.steps() {
            a += c.norm_sq(k, i);
            b += x.norm_sq(k, i);
            // relative slack for summation rounding only
            if a > b * (1.0 + 1e-12) {
                bad += 1;
            }
        }
    }
    Ok(bad)
}

pub fn coarsening(cfg: &CoarseningConfig, seed: u64) -> Result<Vec<RatioReport>> {
    let grid = PathGrid::new(1.0, cfg.steps)?;
    let n = cfg.steps;
    let [m1, m2] = cfg.m_pair;
    if m2 <= m1 {
        return Err(Error::Config("m_pair must be increasing".into()));
    }
    let mut out = Vec::new();
    for m in [m1, m2] {
        let err = jm_error(&vec![1.0; n], m, &grid)?;
        out.push(RatioReport::exact(
            COARSENING,
            "constant integrand error",
            &Params::new().with("f", "one").with("m", m),
            err,
            (1.0 / m as f64).sqrt(),
            Check::Close { limit: 1e-12 },
            n,
        ));
    }
    let funcs: [(&str, fn(f64) -> f64); 2] = [("t", |t| t), ("sin", f64::sin)];
    for (name, f) in funcs {
        let cells = midpoint_cells(f, &grid);
        let (e1, e2) = (jm_error(&cells, m1, &grid)?, jm_error(&cells, m2, &grid)?);
        out.push(RatioReport::exact(
            COARSENING,
            "error decreases as m doubles",
            &Params::new().with("f", name).with("m_pair", format!("{m1}/{m2}")),
            e2,
            e1,
            Check::Strict,
            n,
        ));
    }

    let space = Arc::new(DiscreteMeasureSpace::new(cfg.weights.clone())?);
    let streams = Substreams::named(seed, COARSENING);
    let dgrid = PathGrid::new(1.0, cfg.steps / 4)?;
    for rule in Rule::ALL {
        let mut bad = [0u64; 2];
        for r in 0..cfg.domination_replicates as u64 {
            let b = simulate_bundle(&streams, r, 2, dgrid)?;
            let x = ProcessSpec::from(rule).realize(&b, space.len())?;
            for (v, m) in bad.iter_mut().zip([m1, m2]) {
                *v += domination_violations(&x, m, &dgrid)?;
            }
        }
        for (v, m) in bad.into_iter().zip([m1, m2]) {
            out.push(RatioReport::exact(
                COARSENING,
                "prefix domination",
                &Params::new().with("rule", rule).with("m", m),
                v as f64,
                0.0,
                Check::Pointwise { violations: v },
                dgrid.steps,
            ));
        }
    }
    out.extend(truncation_rows(cfg, &space, &streams, &dgrid)?);
    Ok(out)
}

/// `|‖Xⁿ − X‖|_{Λ,T}` for `X = c sign(B¹) e₁` with `Λ = t²`: nonincreasing
/// in `n` and zero once `n ≥ c + 1` and every atom is in `U_n`.
fn truncation_rows(
    cfg: &CoarseningConfig,
    space: &DiscreteMeasureSpace,
    streams: &Substreams,
    grid: &PathGrid,
) -> Result<Vec<RatioReport>> {
    let gauge = GaugeSpec::power(2.0).build()?;
    let spec = ProcessSpec { scale: cfg.truncation_bound, ..ProcessSpec::from(Rule::SignOfB1) };
    let b = simulate_bundle(streams, u64::MAX >> 17, 1, *grid)?;
    let x = spec.realize(&b, space.len())?;
    let mut errs = Vec::new();
    let mut out = Vec::new();
    for &n in &cfg.truncation_ns {
        let xn = truncate_process(&x, n, &nested_prefix(space.len(), n));
        let diff = GridProcess::combine(1.0, &xn, -1.0, &x)?;
        let (_, triple) = eta_and_triple_norm(&diff, space, &gauge, grid)?;
        let e = triple[grid.steps];
        errs.push(e);
        if f64::from(n) >= cfg.truncation_bound + 1.0 && n as usize >= space.len() {
            out.push(RatioReport::exact(
                COARSENING,
                "truncation reaches the process",
                &Params::new().with("n", n),
                e,
                0.0,
                Check::Within { target: 0.0, tol: 0.0 },
                grid.steps,
            ));
        }
    }
    let rises = errs.windows(2).filter(|w| w[1] > w[0]).count() as u64;
    out.push(RatioReport::exact(
        COARSENING,
        "truncation error is monotone",
        &Params::new().with("c", cfg.truncation_bound),
        rises as f64,
        0.0,
        Check::Pointwise { violations: rises },
        grid.steps,
    ));
    Ok(out)
}
