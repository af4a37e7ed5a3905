//! Scalar two-sided BDG ratios `E sup Φ(|M|²)` against `E Φ(⟨M⟩_τ)` for
//! suite Itô integrals, with a scaling sweep on shared replicates.

use serde::{Deserialize, Serialize};

use super::{sample_columns, spread_report, stop_index, stop_label, Check, Params, RatioReport};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gauge::GaugeSpec;
use crate::integrator::{ito_integral, ProcessSpec, Rule};
use crate::paths::{simulate_bundle, PathGrid, StoppingTimeSpec};
use crate::rng::Substreams;

pub const EXPERIMENT: &str = "scalar_bdg";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BdgConfig {
    pub rules: Vec<Rule>,
    pub phi: GaugeSpec,
    pub horizon: f64,
    pub steps: usize,
    pub stop: StoppingTimeSpec,
    pub scales: Vec<f64>,
    /// Limit on max/min of the ratio over the scaling sweep.
    #[serde(default = "default_stability")]
    pub stability: f64,
    pub replicates: usize,
}

pub(crate) fn default_stability() -> f64 {
    10.0
}

impl BdgConfig {
    pub fn standard(steps: usize, replicates: usize) -> Self {
        BdgConfig {
            rules: vec![Rule::ConstantE1, Rule::SignOfB1],
            phi: GaugeSpec::power(1.0),
            horizon: 1.0,
            steps,
            stop: StoppingTimeSpec::Deterministic { t: 1.0 },
            scales: vec![0.5, 1.0, 2.0],
            stability: 10.0,
            replicates,
        }
    }
}

/// `Φ(t) = t` exactly, so scaling by powers of two cancels bit for bit.
fn is_identity(phi: &GaugeSpec) -> bool {
    matches!(phi, GaugeSpec::Power { p, scale } if *p == 1.0 && *scale == 1.0)
}

pub fn bdg_ratio(cfg: &BdgConfig, seed: u64, exec: Execution) -> Result<Vec<RatioReport>> {
    let phi = cfg.phi.build()?;
    let grid = PathGrid::new(cfg.horizon, cfg.steps)?;
    cfg.stop.validate(&grid).or_else(|e| match cfg.stop {
        StoppingTimeSpec::Deterministic { t } if t >= cfg.horizon => Ok(()),
        _ => Err(e),
    })?;
    if !cfg.scales.contains(&1.0) {
        return Err(Error::Config("the scaling sweep must include c = 1".into()));
    }
    let d = cfg.rules.iter().map(|r| r.support()).max().unwrap_or(1);
    let streams = Substreams::named(seed, EXPERIMENT);
    let width = 2 * cfg.rules.len() * cfg.scales.len();
    let cols = sample_columns(exec, cfg.replicates, width, |r, row| {
        let b = simulate_bundle(&streams, r, d, grid)?;
        for &rule in &cfg.rules {
            for &c in &cfg.scales {
                let x = ProcessSpec { scale: c, ..ProcessSpec::from(rule) }.realize(&b, 1)?;
                let ip = ito_integral(&x, &b)?;
                let (m, qv) = (ip.integral(0), ip.eta(0));
                let k = stop_index(&cfg.stop, &b, Some(qv))?;
                let sup = m[..=k].iter().map(|v| phi.eval(v * v)).fold(0.0, f64::max);
                row.push(sup);
                row.push(phi.eval(qv[k]));
            }
        }
        Ok(())
    })?;

    let power = matches!(cfg.phi, GaugeSpec::Power { p, .. } if p == 1.0);
    let mut out = Vec::new();
    let mut c = 0;
    for &rule in &cfg.rules {
        let mut forward = Vec::new();
        for &scale in &cfg.scales {
            let params = Params::new()
                .with("rule", rule)
                .with("phi", format!("{:?}", cfg.phi))
                .with("stop", stop_label(&cfg.stop))
                .with("c", scale);
            let (lhs, rhs) = (&cols[c], &cols[c + 1]);
            c += 2;
            // sup |M|² lies between |M_τ|² and Doob's 4 sup-bound when Φ(t) = t
            let (fwd, rev) = if power {
                (Check::Bracket { lower: 1.0, upper: 4.0 }, Check::Bracket { lower: 0.25, upper: 1.0 })
            } else {
                (Check::Finite, Check::Finite)
            };
            forward.push(RatioReport::paired(EXPERIMENT, "maximum against bracket", &params, lhs, rhs, fwd, cfg.steps));
            out.push(forward.last().cloned().expect("just pushed"));
            out.push(RatioReport::paired(EXPERIMENT, "bracket against maximum", &params, rhs, lhs, rev, cfg.steps));
        }
        let base = cfg.scales.iter().position(|&s| s == 1.0).expect("checked above");
        for (i, &scale) in cfg.scales.iter().enumerate() {
            if i == base {
                continue;
            }
            let params = Params::new().with("rule", rule).with("c", scale);
            let check = if is_identity(&cfg.phi) { Check::Exact } else { Check::Stable { limit: cfg.stability } };
            let (a, b) = (forward[i].ratio_mean().unwrap_or(0.0), forward[base].ratio_mean().unwrap_or(0.0));
            let (a, b) = if matches!(check, Check::Stable { .. }) { (a.max(b), a.min(b)) } else { (a, b) };
            out.push(RatioReport::exact(EXPERIMENT, "ratio invariant under scaling", &params, a, b, check, cfg.steps));
        }
        let refs: Vec<&RatioReport> = forward.iter().collect();
        out.push(spread_report(
            EXPERIMENT,
            "ratio bounded over scaling sweep",
            &Params::new().with("rule", rule),
            &refs,
            cfg.stability,
            cfg.steps,
        ));
    }
    Ok(out)
}
