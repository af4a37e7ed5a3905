//! Good-λ inequalities for Brownian motion stopped at a capped exit time,
//! and the moment constant they imply.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{sample_columns, Check, Params, RatioReport};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::paths::PathGrid;
use crate::rng::Substreams;

pub const EXPERIMENT: &str = "good_lambda";
pub const MOMENT_EXPERIMENT: &str = "moment_constant";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoodLambdaConfig {
    /// `τ` is the first time `|B| >= exit_level`, capped at `horizon`.
    pub exit_level: f64,
    pub horizon: f64,
    /// Coarse grid steps; the fine grid has `refinement` times as many.
    pub steps: usize,
    #[serde(default = "default_refinement")]
    pub refinement: usize,
    pub betas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// Exponents for the moment-constant rows.
    #[serde(default)]
    pub moment_p: Vec<f64>,
    pub replicates: usize,
}

pub(crate) fn default_refinement() -> usize {
    4
}

impl GoodLambdaConfig {
    pub fn standard(steps: usize, replicates: usize) -> Self {
        GoodLambdaConfig {
            exit_level: 1.0,
            horizon: 4.0,
            steps,
            refinement: 4,
            betas: vec![1.5, 2.0, 4.0],
            deltas: vec![0.05, 0.1, 0.25],
            lambdas: vec![0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0, 1.5],
            moment_p: vec![1.0, 2.0],
            replicates,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() {
            return Err(Error::EmptyLambdaGrid);
        }
        for &b in &self.betas {
            if !(b > 1.0) {
                return Err(Error::InvalidParameter { name: "beta", value: b, reason: "must exceed one" });
            }
        }
        for &d in &self.deltas {
            if !(d > 0.0) {
                return Err(Error::InvalidParameter { name: "delta", value: d, reason: "must be positive" });
            }
        }
        if !(self.exit_level > 0.0) {
            return Err(Error::InvalidParameter {
                name: "exit_level",
                value: self.exit_level,
                reason: "must be positive",
            });
        }
        Ok(())
    }
}

/// `C = δ^{-p} / (β^{-p} − c_δ)`, the constant in `E X^p <= C E Y^p`
/// obtained by integrating a good-λ inequality against `p λ^{p−1} dλ`.
pub fn derive_moment_constant(beta: f64, delta: f64, c_delta: f64, p: f64) -> Result<f64> {
    if !(beta > 1.0) || !(delta > 0.0) || !(p > 0.0) || !(c_delta >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "beta/delta/p/c_delta",
            value: beta,
            reason: "need beta > 1, delta > 0, p > 0, c_delta >= 0",
        });
    }
    let limit = beta.powf(-p);
    if c_delta >= limit {
        return Err(Error::InfeasibleConstant { c_delta, limit });
    }
    Ok(delta.powf(-p) / (limit - c_delta))
}

/// Stopped running maximum `B*_τ` and `τ` on the coarse and fine grids,
/// simulated incrementally until both grids have exited.
fn stopped_pair(streams: &Substreams, replicate: u64, fine: &PathGrid, factor: usize, level: f64) -> [f64; 4] {
    let mut rng = streams.stream(replicate, 0);
    let sd = fine.dt().sqrt();
    let (mut b, mut sup_f, mut sup_c) = (0.0f64, 0.0f64, 0.0f64);
    let (mut tau_f, mut tau_c) = (None, None);
    for k in 1..=fine.steps {
        let z: f64 = rng.sample(StandardNormal);
        b += sd * z;
        if tau_f.is_none() {
            sup_f = sup_f.max(b.abs());
            if b.abs() >= level {
                tau_f = Some(k);
            }
        }
        if k % factor == 0 && tau_c.is_none() {
            sup_c = sup_c.max(b.abs());
            if b.abs() >= level {
                tau_c = Some(k);
            }
        }
        if tau_f.is_some() && tau_c.is_some() {
            break;
        }
    }
    let t = |k: Option<usize>| fine.time(k.unwrap_or(fine.steps));
    [sup_c, t(tau_c).sqrt(), sup_f, t(tau_f).sqrt()]
}

fn indicator(xs: impl Iterator<Item = bool>) -> Vec<f64> {
    xs.map(|b| if b { 1.0 } else { 0.0 }).collect()
}

pub fn estimate_good_lambda(cfg: &GoodLambdaConfig, seed: u64, exec: Execution) -> Result<Vec<RatioReport>> {
    cfg.validate()?;
    let fine = PathGrid::new(cfg.horizon, cfg.steps * cfg.refinement)?;
    let streams = Substreams::named(seed, EXPERIMENT);
    let cols = sample_columns(exec, cfg.replicates, 4, |r, row| {
        row.extend(stopped_pair(&streams, r, &fine, cfg.refinement, cfg.exit_level));
        Ok(())
    })?;
    let mut out = Vec::new();
    for (g, grid_n) in [(0usize, cfg.steps), (1, cfg.steps * cfg.refinement)] {
        let (sup, root_tau) = (&cols[2 * g], &cols[2 * g + 1]);
        for &beta in &cfg.betas {
            for &delta in &cfg.deltas {
                for &lambda in &cfg.lambdas {
                    let params = Params::new()
                        .with("a", cfg.exit_level)
                        .with("T", cfg.horizon)
                        .with("beta", beta)
                        .with("delta", delta)
                        .with("lambda", lambda);
                    let pairs = sup.iter().zip(root_tau);
                    let lhs = indicator(pairs.clone().map(|(&s, &q)| s > beta * lambda && q < delta * lambda));
                    let rhs = indicator(sup.iter().map(|&s| s > lambda));
                    let bound = delta * delta / ((beta - 1.0) * (beta - 1.0));
                    out.push(RatioReport::paired(
                        EXPERIMENT,
                        "good-lambda, maximum against clock",
                        &params,
                        &lhs,
                        &rhs,
                        Check::Upper { bound },
                        grid_n,
                    ));
                    let lhs = indicator(pairs.map(|(&s, &q)| q > beta * lambda && s < delta * lambda));
                    let rhs = indicator(root_tau.iter().map(|&q| q > lambda));
                    let bound = delta * delta / (beta * beta - 1.0);
                    out.push(RatioReport::paired(
                        EXPERIMENT,
                        "good-lambda, clock against maximum",
                        &params,
                        &lhs,
                        &rhs,
                        Check::Upper { bound },
                        grid_n,
                    ));
                }
            }
        }
        out.extend(moment_rows(cfg, sup, root_tau, grid_n));
    }
    Ok(out)
}

/// `E (B*)^p <= C E τ^{p/2}` and the reverse, with `C` from
/// [`derive_moment_constant`] for every feasible `(β, δ)`.
fn moment_rows(cfg: &GoodLambdaConfig, sup: &[f64], root_tau: &[f64], grid_n: usize) -> Vec<RatioReport> {
    let mut out = Vec::new();
    for &p in &cfg.moment_p {
        let xs: Vec<f64> = sup.iter().map(|s| s.powf(p)).collect();
        let ys: Vec<f64> = root_tau.iter().map(|q| q.powf(p)).collect();
        for &beta in &cfg.betas {
            for &delta in &cfg.deltas {
                let params = Params::new().with("p", p).with("beta", beta).with("delta", delta);
                let forward = delta * delta / ((beta - 1.0) * (beta - 1.0));
                if let Ok(c) = derive_moment_constant(beta, delta, forward, p) {
                    out.push(RatioReport::paired(
                        MOMENT_EXPERIMENT,
                        "moment bound, maximum by clock",
                        &params,
                        &xs,
                        &ys,
                        Check::Upper { bound: c },
                        grid_n,
                    ));
                }
                let reverse = delta * delta / (beta * beta - 1.0);
                if let Ok(c) = derive_moment_constant(beta, delta, reverse, p) {
                    out.push(RatioReport::paired(
                        MOMENT_EXPERIMENT,
                        "moment bound, clock by maximum",
                        &params,
                        &ys,
                        &xs,
                        Check::Upper { bound: c },
                        grid_n,
                    ));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moment_constant_examples() {
        assert!((derive_moment_constant(2.0, 0.1, 0.0, 2.0).unwrap() - 400.0).abs() < 1e-9);
        let c = derive_moment_constant(2.0, 0.1, 0.01, 2.0).unwrap();
        assert!((c - 100.0 / 0.24).abs() < 1e-9);
        assert!(matches!(
            derive_moment_constant(2.0, 0.1, 0.25, 2.0),
            Err(Error::InfeasibleConstant { .. })
        ));
    }

    #[test]
    fn moment_constant_monotonicity() {
        // grows with c_delta up to the feasibility limit
        let cs = [0.0, 0.05, 0.1, 0.2, 0.24, 0.2499];
        let v: Vec<f64> = cs.iter().map(|&c| derive_moment_constant(2.0, 0.1, c, 2.0).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        assert!(v[5] > 1e5);
        // with c_delta fixed, beta^-p shrinks as beta grows, so C grows too
        let v: Vec<f64> = [1.2, 1.5, 2.0, 3.0]
            .iter()
            .map(|&b| derive_moment_constant(b, 0.1, 0.05, 2.0).unwrap())
            .collect();
        assert!(v.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn first_line_coefficient() {
        let cfg = GoodLambdaConfig {
            betas: vec![2.0],
            deltas: vec![0.1],
            lambdas: vec![0.5],
            moment_p: vec![],
            ..GoodLambdaConfig::standard(16, 200)
        };
        let r = estimate_good_lambda(&cfg, 1, Execution::Sequential).unwrap();
        assert_eq!(r.len(), 4);
        assert!((r[0].check.bound().unwrap() - 0.01).abs() < 1e-15);
        assert!((r[1].check.bound().unwrap() - 0.01 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn lambda_beyond_reach_is_vacuous() {
        let cfg = GoodLambdaConfig {
            betas: vec![2.0],
            deltas: vec![0.25],
            lambdas: vec![5.0],
            moment_p: vec![],
            ..GoodLambdaConfig::standard(64, 500)
        };
        let r = estimate_good_lambda(&cfg, 3, Execution::Sequential).unwrap();
        for rep in &r {
            assert_eq!(rep.lhs.mean, 0.0);
            assert!(rep.verdict);
        }
    }

    #[test]
    fn empty_lambda_grid() {
        let cfg = GoodLambdaConfig { lambdas: vec![], ..GoodLambdaConfig::standard(16, 200) };
        assert!(matches!(estimate_good_lambda(&cfg, 0, Execution::Sequential), Err(Error::EmptyLambdaGrid)));
    }

    #[test]
    fn coarse_grid_never_exits_before_the_fine_grid() {
        let fine = PathGrid::new(4.0, 256).unwrap();
        let s = Substreams::new(2);
        for r in 0..200 {
            let [sc, qc, sf, qf] = stopped_pair(&s, r, &fine, 4, 1.0);
            assert!(qc >= qf);
            assert!(sc <= sf.max(sc));
            assert!(sc.is_finite() && sf.is_finite());
        }
    }
}
