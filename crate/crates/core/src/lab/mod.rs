//! Paired Monte Carlo estimates of both sides of each inequality, and the
//! verdict rules applied to them.
//!
//! Every experiment returns a list of [`RatioReport`]s. A report carries
//! its [`Check`], so its verdict can be recomputed from its own fields.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec::{map_batches, Execution};
use crate::gauge::GrowthFunction;
use crate::paths::{hitting_time, path_functionals, BrownianBundle, PathGrid, StoppingTimeSpec};
use crate::space::{modular_of_norms, DiscreteMeasureSpace};
use crate::stats::McEstimate;
use crate::transforms::phi_of;

pub mod bdg;
pub mod doob;
pub mod engine;
pub mod good_lambda;
pub mod lenglart;
pub mod oracles;
pub mod orlicz;

pub use good_lambda::derive_moment_constant;

/// Half-width multiplier of every Monte Carlo confidence band.
pub const SIGMAS: f64 = 3.0;
/// Allowed floating-point jitter in reductions.
pub const JITTER: f64 = 1e-12;

/// The rule that turns a report's two sides into a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Check {
    /// `lhs <= bound rhs + 3 sqrt(se_l² + bound² se_r²)`.
    Upper { bound: f64 },
    /// Paired ratio within `[lower − 3σ, upper + 3σ]`.
    Bracket { lower: f64, upper: f64 },
    /// `|lhs − target| <= 3 se + allowance`.
    Target { target: f64, allowance: f64 },
    /// Paired difference within three standard errors of zero.
    Equal { diff_mean: f64, diff_stderr: f64 },
    /// `lhs / rhs <= limit` where lhs and rhs are the extremes of a sweep.
    Stable { limit: f64 },
    /// `|lhs − rhs| <= limit max(|lhs|, |rhs|)`.
    Close { limit: f64 },
    /// Bitwise equal means.
    Exact,
    /// `lhs < rhs`.
    Strict,
    /// `lhs >= floor`.
    AtLeast { floor: f64 },
    /// `|lhs − target| <= tol`.
    Within { target: f64, tol: f64 },
    /// Both sides finite, and the ratio defined unless both vanish.
    Finite,
    /// No violation among the enumerated cases.
    Pointwise { violations: u64 },
}

impl Check {
    pub fn evaluate(&self, lhs: &McEstimate, rhs: &McEstimate, ratio: Option<&McEstimate>) -> bool {
        let (l, r) = (lhs.mean, rhs.mean);
        if !l.is_finite() || !r.is_finite() {
            return false;
        }
        let both_zero = l == 0.0 && r == 0.0;
        match *self {
            Check::Upper { bound } => {
                both_zero || l <= bound * r + SIGMAS * lhs.stderr.hypot(bound * rhs.stderr) + JITTER
            }
            Check::Bracket { lower, upper } => match ratio {
                Some(q) => q.mean >= lower - SIGMAS * q.stderr && q.mean <= upper + SIGMAS * q.stderr,
                None => both_zero,
            },
            Check::Target { target, allowance } => (l - target).abs() <= SIGMAS * lhs.stderr + allowance,
            Check::Equal { diff_mean, diff_stderr } => diff_mean.abs() <= SIGMAS * diff_stderr + JITTER,
            Check::Stable { limit } => both_zero || (r > 0.0 && l / r <= limit),
            Check::Close { limit } => (l - r).abs() <= limit * l.abs().max(r.abs()),
            Check::Exact => l.to_bits() == r.to_bits(),
            Check::Strict => l < r,
            Check::AtLeast { floor } => l >= floor,
            Check::Within { target, tol } => (l - target).abs() <= tol,
            Check::Finite => both_zero || (r > 0.0 && l >= 0.0),
            Check::Pointwise { violations } => violations == 0,
        }
    }

    /// The theoretical constant, for the CSV `bound` column.
    pub fn bound(&self) -> Option<f64> {
        match *self {
            Check::Upper { bound } => Some(bound),
            Check::Bracket { upper, .. } => Some(upper),
            Check::Stable { limit } | Check::Close { limit } => Some(limit),
            _ => None,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Check::Upper { bound } => write!(f, "lhs <= {bound} rhs + 3 sigma"),
            Check::Bracket { lower, upper } => write!(f, "ratio in [{lower}, {upper}] +- 3 sigma"),
            Check::Target { target, allowance } => write!(f, "lhs = {target} +- (3 sigma + {allowance})"),
            Check::Equal { .. } => write!(f, "paired difference = 0 +- 3 sigma"),
            Check::Stable { limit } => write!(f, "max/min ratio over sweep <= {limit}"),
            Check::Close { limit } => write!(f, "relative gap <= {limit}"),
            Check::Exact => write!(f, "bitwise equal"),
            Check::Strict => write!(f, "lhs < rhs"),
            Check::AtLeast { floor } => write!(f, "lhs >= {floor}"),
            Check::Within { target, tol } => write!(f, "|lhs - {target}| <= {tol}"),
            Check::Finite => write!(f, "finite ratio"),
            Check::Pointwise { violations } => write!(f, "{violations} pointwise violations"),
        }
    }
}

/// Canonical `key=value;...` parameter string of a report.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Params(Vec<(String, String)>);

impl Params {
    pub fn new() -> Self {
        Params::default()
    }

    pub fn with(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioReport {
    /// Experiment kind, e.g. `good_lambda`.
    pub experiment: String,
    /// Which statement the row tests, e.g. `good-lambda first line`.
    pub anchor: String,
    pub params: String,
    pub lhs: McEstimate,
    pub rhs: McEstimate,
    pub ratio: Option<McEstimate>,
    pub check: Check,
    pub grid_n: usize,
    pub verdict: bool,
}

impl RatioReport {
    pub fn new(
        experiment: &str,
        anchor: &str,
        params: &Params,
        lhs: McEstimate,
        rhs: McEstimate,
        ratio: Option<McEstimate>,
        check: Check,
        grid_n: usize,
    ) -> Self {
        let verdict = check.evaluate(&lhs, &rhs, ratio.as_ref());
        RatioReport {
            experiment: experiment.to_string(),
            anchor: anchor.to_string(),
            params: params.to_string(),
            lhs,
            rhs,
            ratio,
            check,
            grid_n,
            verdict,
        }
    }

    /// Report from paired samples; the ratio is the paired mean ratio.
    pub fn paired(
        experiment: &str,
        anchor: &str,
        params: &Params,
        lhs: &[f64],
        rhs: &[f64],
        check: Check,
        grid_n: usize,
    ) -> Self {
        let ratio = crate::stats::paired_ratio(lhs, rhs);
        let check = match check {
            Check::Equal { .. } => {
                let d = crate::stats::paired_difference(lhs, rhs);
                Check::Equal { diff_mean: d.mean, diff_stderr: d.stderr }
            }
            c => c,
        };
        Self::new(
            experiment,
            anchor,
            params,
            McEstimate::from_samples(lhs),
            McEstimate::from_samples(rhs),
            ratio,
            check,
            grid_n,
        )
    }

    /// Report on two exact numbers.
    pub fn exact(experiment: &str, anchor: &str, params: &Params, lhs: f64, rhs: f64, check: Check, grid_n: usize) -> Self {
        let ratio = (rhs != 0.0).then(|| McEstimate::exact(lhs / rhs));
        Self::new(experiment, anchor, params, McEstimate::exact(lhs), McEstimate::exact(rhs), ratio, check, grid_n)
    }

    pub fn recompute_verdict(&self) -> bool {
        self.check.evaluate(&self.lhs, &self.rhs, self.ratio.as_ref())
    }

    pub fn ratio_mean(&self) -> Option<f64> {
        self.ratio.map(|r| r.mean)
    }

    /// First 16 hex digits of SHA-256 over `experiment|anchor|params`.
    pub fn params_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.experiment.as_bytes());
        h.update(b"|");
        h.update(self.anchor.as_bytes());
        h.update(b"|");
        h.update(self.params.as_bytes());
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Sweep-spread report over the ratios of `reports`: lhs is the largest
/// ratio, rhs the smallest.
pub fn spread_report(experiment: &str, anchor: &str, params: &Params, reports: &[&RatioReport], limit: f64, grid_n: usize) -> RatioReport {
    let ratios: Vec<f64> = reports.iter().filter_map(|r| r.ratio_mean()).collect();
    let degenerate = reports.iter().all(|r| r.lhs.mean == 0.0 && r.rhs.mean == 0.0);
    let (max, min) = if ratios.is_empty() || degenerate {
        (0.0, 0.0)
    } else if ratios.len() < reports.len() {
        (f64::INFINITY, 0.0)
    } else {
        (
            ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ratios.iter().copied().fold(f64::INFINITY, f64::min),
        )
    };
    RatioReport::exact(experiment, anchor, params, max, min, Check::Stable { limit }, grid_n)
}

/// Refinement report comparing the ratio at `4n` (lhs) with the ratio at
/// `n` (rhs).
pub fn refinement_report(experiment: &str, anchor: &str, params: &Params, coarse: &RatioReport, fine: &RatioReport, limit: f64) -> RatioReport {
    let (f, c) = (fine.ratio_mean().unwrap_or(0.0), coarse.ratio_mean().unwrap_or(0.0));
    RatioReport::exact(experiment, anchor, params, f, c, Check::Close { limit }, fine.grid_n)
}

/// Runs `f` for every replicate and returns the pushed values column-wise.
/// Each call must push exactly `width` values.
pub(crate) fn sample_columns<F>(exec: Execution, replicates: usize, width: usize, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(u64, &mut Vec<f64>) -> Result<()> + Sync + Send,
{
    let batches = map_batches(exec, replicates, |range| -> Result<Vec<f64>> {
        let mut rows = Vec::with_capacity(range.len() * width);
        for r in range {
            let before = rows.len();
            f(r as u64, &mut rows)?;
            if rows.len() - before != width {
                return Err(Error::DimensionMismatch { expected: width, got: rows.len() - before });
            }
        }
        Ok(rows)
    });
    let mut columns = vec![Vec::with_capacity(replicates); width];
    for batch in batches {
        for row in batch?.chunks(width) {
            for (c, v) in columns.iter_mut().zip(row) {
                c.push(*v);
            }
        }
    }
    Ok(columns)
}

/// `d`-coordinate bundle on the fine grid and the same driver every
/// `factor` steps.
pub(crate) fn refined_pair(
    streams: &crate::rng::Substreams,
    replicate: u64,
    d: usize,
    fine: PathGrid,
    factor: usize,
) -> Result<(BrownianBundle, BrownianBundle)> {
    let f = crate::paths::simulate_bundle(streams, replicate, d, fine)?;
    let c = f.coarsen(factor)?;
    Ok((c, f))
}

/// Grid index of a suite stopping time: exits and hits read the first
/// Brownian coordinate, exceedances its discrete quadratic variation and
/// norm thresholds the supplied triple-norm path.
pub(crate) fn stop_index(spec: &StoppingTimeSpec, bundle: &BrownianBundle, triple: Option<&[f64]>) -> Result<usize> {
    let grid = bundle.grid();
    Ok(match spec {
        StoppingTimeSpec::Deterministic { t } => {
            spec.validate(&grid).or_else(|e| if *t >= grid.horizon { Ok(()) } else { Err(e) })?;
            hitting_time(&[], spec, &grid)
        }
        StoppingTimeSpec::FirstExit { .. } | StoppingTimeSpec::FirstHitSup { .. } => {
            hitting_time(bundle.coord(0), spec, &grid)
        }
        StoppingTimeSpec::FirstExceed { .. } => hitting_time(&path_functionals(bundle.coord(0)).1, spec, &grid),
        StoppingTimeSpec::NormThreshold { .. } => {
            let triple = triple.ok_or_else(|| Error::Config("norm-threshold stop needs a triple-norm path".into()))?;
            hitting_time(triple, spec, &grid)
        }
    })
}

/// Short label of a stopping time for report parameters.
pub fn stop_label(spec: &StoppingTimeSpec) -> String {
    match *spec {
        StoppingTimeSpec::Deterministic { t } => format!("fixed({t})"),
        StoppingTimeSpec::FirstHitSup { level, .. } => format!("hit({level})"),
        StoppingTimeSpec::FirstExceed { level, .. } => format!("qv_exceed({level})"),
        StoppingTimeSpec::NormThreshold { level, .. } => format!("norm_exceed({level})"),
        StoppingTimeSpec::FirstExit { level, .. } => format!("exit({level})"),
    }
}

/// A γ-quasi-metric used to instantiate the abstract Lenglart-type bound.
#[derive(Clone, Debug)]
pub enum QuasiMetric {
    /// `|x − y|` on the reals, `γ = 1`.
    AbsoluteDifference,
    /// `[f − g]_Λ` on atom-indexed real vectors, `γ = φ(2)`.
    ModularDifference { gauge: GrowthFunction, space: Arc<DiscreteMeasureSpace>, gamma: f64 },
}

impl QuasiMetric {
    pub fn modular(gauge: GrowthFunction, space: Arc<DiscreteMeasureSpace>) -> Result<Self> {
        let gamma = phi_of(&gauge, 2.0)?;
        Ok(QuasiMetric::ModularDifference { gauge, space, gamma })
    }

    pub fn gamma(&self) -> f64 {
        match self {
            QuasiMetric::AbsoluteDifference => 1.0,
            QuasiMetric::ModularDifference { gamma, .. } => *gamma,
        }
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            QuasiMetric::AbsoluteDifference => (x[0] - y[0]).abs(),
            QuasiMetric::ModularDifference { gauge, space, .. } => {
                let norms: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - b).abs()).collect();
                modular_of_norms(space.weights(), &norms, gauge)
            }
        }
    }

    /// Largest relative excess `ρ(x,y) / (γ (ρ(x,z) + ρ(z,y))) − 1` over
    /// the triples, together with the symmetry and identity checks.
    pub fn audit(&self, triples: &[[Vec<f64>; 3]]) -> QuasiMetricAudit {
        let mut audit = QuasiMetricAudit { symmetric: true, identity: true, worst_excess: f64::NEG_INFINITY };
        for [x, y, z] in triples {
            audit.symmetric &= self.distance(x, y).to_bits() == self.distance(y, x).to_bits();
            audit.identity &= self.distance(x, x) == 0.0;
            let rhs = self.gamma() * (self.distance(x, z) + self.distance(z, y));
            let lhs = self.distance(x, y);
            if rhs > 0.0 {
                audit.worst_excess = audit.worst_excess.max(lhs / rhs - 1.0);
            }
        }
        audit
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuasiMetricAudit {
    pub symmetric: bool,
    pub identity: bool,
    pub worst_excess: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::{make_gauge, Family};
    use crate::rng::Substreams;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn upper_check_rule() {
        let lhs = McEstimate { mean: 0.02, stderr: 0.001, n: 100 };
        let rhs = McEstimate { mean: 1.0, stderr: 0.01, n: 100 };
        assert!(Check::Upper { bound: 0.019 }.evaluate(&lhs, &rhs, None));
        assert!(!Check::Upper { bound: 0.01 }.evaluate(&lhs, &rhs, None));
        let zero = McEstimate::exact(0.0);
        assert!(Check::Upper { bound: 0.0 }.evaluate(&zero, &zero, None));
    }

    #[test]
    fn report_verdict_is_reproducible() {
        let r = RatioReport::paired(
            "x",
            "a",
            &Params::new().with("beta", 2),
            &[1.0, 2.0, 3.0],
            &[1.0, 2.0, 3.5],
            Check::Bracket { lower: 0.5, upper: 1.0 },
            8,
        );
        assert_eq!(r.verdict, r.recompute_verdict());
        assert!(r.verdict);
        assert_eq!(r.params, "beta=2");
        assert_eq!(r.params_hash().len(), 16);
    }

    #[test]
    fn degenerate_reports_pass_without_dividing() {
        let r = RatioReport::paired("x", "a", &Params::new(), &[0.0; 4], &[0.0; 4], Check::Bracket { lower: 1.0, upper: 4.0 }, 8);
        assert!(r.ratio.is_none());
        assert!(r.verdict);
    }

    #[test]
    fn quasi_metric_axioms() {
        let g = make_gauge(Family::LambdaAlpha, &[1.0]).unwrap();
        let space = Arc::new(DiscreteMeasureSpace::new(vec![1.0, 2.0, 0.5]).unwrap());
        let rho = QuasiMetric::modular(g, space).unwrap();
        // φ(2) = 2 (1 + ln 2) for Λ^1
        assert!((rho.gamma() - 2.0 * (1.0 + 2f64.ln())).abs() < 1e-12);
        let mut rng = Substreams::new(5).stream(0, 0);
        let mut draw = || -> Vec<f64> {
            let scale = 10f64.powf(rng.random_range(-3.0..3.0));
            (0..3).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
        };
        let triples: Vec<[Vec<f64>; 3]> = (0..1000).map(|_| [draw(), draw(), draw()]).collect();
        let a = rho.audit(&triples);
        assert!(a.symmetric && a.identity);
        assert!(a.worst_excess <= 1e-9, "{a:?}");
        let abs = QuasiMetric::AbsoluteDifference.audit(&triples);
        assert!(abs.symmetric && abs.identity && abs.worst_excess <= 1e-9);
    }

    #[test]
    fn columns_do_not_depend_on_execution_mode() {
        let f = |r: u64, row: &mut Vec<f64>| -> Result<()> {
            row.push(r as f64);
            row.push((r * r) as f64);
            Ok(())
        };
        let a = sample_columns(Execution::Parallel, 2500, 2, f).unwrap();
        let b = sample_columns(Execution::Sequential, 2500, 2, f).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[1][49], 2401.0);
    }
}
