//! Experiment configs, dispatch, report emission and the full verification
//! preset.
//!
//! A run config is a TOML file:
//!
//! ```toml
//! seed = 7
//! output = "out"            # optional
//!
//! [[experiments]]
//! kind = "scalar_bdg"
//! rules = ["constant_e1", "sign_of_B1"]
//! phi = { family = "power", p = 1.0 }
//! horizon = 1.0
//! steps = 256
//! stop = { kind = "deterministic", t = 1.0 }
//! scales = [0.5, 1.0, 2.0]
//! replicates = 10000
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gauge::GaugeSpec;
use crate::integrator::Rule;
use crate::lab::bdg::{bdg_ratio, BdgConfig};
use crate::lab::doob::{doob_check, DoobConfig};
use crate::lab::engine::{brownian_engine, coarsening, ito_isometry, CoarseningConfig, EngineConfig, IsometryConfig};
use crate::lab::good_lambda::{estimate_good_lambda, GoodLambdaConfig};
use crate::lab::lenglart::{lenglart_check, Instantiation, LenglartConfig};
use crate::lab::oracles::{norm_relations, power_oracles, young_inequality, PowerOracleConfig, YoungConfig};
use crate::lab::orlicz::{orlicz_bdg, OrliczBdgConfig};
use crate::lab::RatioReport;

/// Overrides the output directory of every run.
pub const OUTPUT_ENV: &str = "ORLICZ_BDG_OUT";
pub const CSV_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const DEFAULT_SEED: u64 = 20_240_611;
const MIN_REPLICATES: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormRelationsConfig {
    pub weights: Vec<f64>,
    pub gauges: Vec<GaugeSpec>,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentConfig {
    PowerOracles(PowerOracleConfig),
    YoungInequality(YoungConfig),
    NormRelations(NormRelationsConfig),
    BrownianEngine(EngineConfig),
    ItoIsometry(IsometryConfig),
    Coarsening(CoarseningConfig),
    GoodLambda(GoodLambdaConfig),
    ScalarBdg(BdgConfig),
    DoobOrlicz(DoobConfig),
    Lenglart(LenglartConfig),
    OrliczBdg(OrliczBdgConfig),
}

/// `(kind, description)` for every experiment kind.
pub const EXPERIMENTS: [(&str, &str); 11] = [
    ("power_oracles", "numeric transforms of t^p against closed forms"),
    ("young_inequality", "Young gap over a grid for registered N-functions"),
    ("norm_relations", "modular/norm sandwich and quasi-triangle constant on random vectors"),
    ("brownian_engine", "Brownian marginals, grid maximum, quadratic variation"),
    ("ito_isometry", "isometry of grid integrals at suite stopping times, two grids"),
    ("coarsening", "block-average coarsening: error rates, prefix domination, truncation"),
    ("good_lambda", "good-lambda inequalities for a capped exit time, and moment constants"),
    ("scalar_bdg", "two-sided scalar BDG ratios under a scaling sweep"),
    ("doob_orlicz", "layer-cake hypothesis audit and gauge-moment conclusion"),
    ("lenglart", "Lenglart-type maximal bound on certified instantiations"),
    ("orlicz_bdg", "two-sided BDG in Orlicz spaces over sweeps and grids"),
];

impl ExperimentConfig {
    pub fn kind(&self) -> &'static str {
        let i = match self {
            ExperimentConfig::PowerOracles(_) => 0,
            ExperimentConfig::YoungInequality(_) => 1,
            ExperimentConfig::NormRelations(_) => 2,
            ExperimentConfig::BrownianEngine(_) => 3,
            ExperimentConfig::ItoIsometry(_) => 4,
            ExperimentConfig::Coarsening(_) => 5,
            ExperimentConfig::GoodLambda(_) => 6,
            ExperimentConfig::ScalarBdg(_) => 7,
            ExperimentConfig::DoobOrlicz(_) => 8,
            ExperimentConfig::Lenglart(_) => 9,
            ExperimentConfig::OrliczBdg(_) => 10,
        };
        EXPERIMENTS[i].0
    }

    fn replicates(&self) -> Option<usize> {
        match self {
            ExperimentConfig::BrownianEngine(c) => Some(c.replicates),
            ExperimentConfig::ItoIsometry(c) => Some(c.replicates),
            ExperimentConfig::GoodLambda(c) => Some(c.replicates),
            ExperimentConfig::ScalarBdg(c) => Some(c.replicates),
            ExperimentConfig::DoobOrlicz(c) => Some(c.replicates),
            ExperimentConfig::Lenglart(c) => Some(c.replicates),
            ExperimentConfig::OrliczBdg(c) => Some(c.replicates),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.replicates() {
            if r < MIN_REPLICATES {
                return Err(Error::Config(format!(
                    "{}: replicates = {r}, Monte Carlo experiments need at least {MIN_REPLICATES}",
                    self.kind()
                )));
            }
        }
        Ok(())
    }

    pub fn run(&self, seed: u64, exec: Execution) -> Result<Vec<RatioReport>> {
        self.validate()?;
        match self {
            ExperimentConfig::PowerOracles(c) => power_oracles(c, seed),
            ExperimentConfig::YoungInequality(c) => young_inequality(c),
            ExperimentConfig::NormRelations(c) => norm_relations(&c.weights, &c.gauges, c.samples, seed),
            ExperimentConfig::BrownianEngine(c) => brownian_engine(c, seed, exec),
            ExperimentConfig::ItoIsometry(c) => ito_isometry(c, seed, exec),
            ExperimentConfig::Coarsening(c) => coarsening(c, seed),
            ExperimentConfig::GoodLambda(c) => estimate_good_lambda(c, seed, exec),
            ExperimentConfig::ScalarBdg(c) => bdg_ratio(c, seed, exec),
            ExperimentConfig::DoobOrlicz(c) => doob_check(c, seed, exec),
            ExperimentConfig::Lenglart(c) => lenglart_check(c, seed, exec),
            ExperimentConfig::OrliczBdg(c) => orlicz_bdg(c, seed, exec),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub experiments: Vec<ExperimentConfig>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            // tagged enums buffer their content and lose the field path, so
            // gauge tables are re-checked one by one to name the culprit
            let located = toml::from_str::<toml::Value>(text).ok().and_then(|v| bad_gauge(&v, "config"));
            Error::Config(located.unwrap_or_else(|| e.to_string()))
        })?;
        for e in &cfg.experiments {
            e.validate()?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Every experiment's reports, in config order. Each experiment draws
    /// from its own named substreams of the root seed.
    pub fn run(&self, exec: Execution) -> Result<Vec<RatioReport>> {
        let mut out = Vec::new();
        for e in &self.experiments {
            out.extend(e.run(self.seed, exec)?);
        }
        Ok(out)
    }

    /// Output directory: the environment override, else the config's, else
    /// `fallback`.
    pub fn output_dir(&self, fallback: &Path) -> PathBuf {
        std::env::var_os(OUTPUT_ENV)
            .map(PathBuf::from)
            .or_else(|| self.output.clone())
            .unwrap_or_else(|| fallback.to_path_buf())
    }
}

/// Path and message of the first gauge table that fails to parse.
fn bad_gauge(v: &toml::Value, path: &str) -> Option<String> {
    match v {
        toml::Value::Table(t) => {
            if t.contains_key("family") {
                if let Err(e) = GaugeSpec::deserialize(v.clone()) {
                    return Some(format!("{path}.family: {e}"));
                }
            }
            t.iter().find_map(|(k, x)| bad_gauge(x, &format!("{path}.{k}")))
        }
        toml::Value::Array(a) => a.iter().enumerate().find_map(|(i, x)| bad_gauge(x, &format!("{path}[{i}]"))),
        _ => None,
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

/// Reports grouped by experiment kind; order within a kind is preserved.
pub fn grouped(reports: &[RatioReport]) -> Vec<&RatioReport> {
    let mut v: Vec<&RatioReport> = reports.iter().collect();
    v.sort_by(|a, b| a.experiment.cmp(&b.experiment));
    v
}

pub fn write_csv<W: std::io::Write>(reports: &[RatioReport], writer: W) -> Result<()> {
    if reports.is_empty() {
        return Err(Error::EmptyReports);
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "experiment",
        "params_hash",
        "lhs_mean",
        "lhs_stderr",
        "rhs_mean",
        "rhs_stderr",
        "ratio",
        "bound",
        "grid_n",
        "verdict",
    ])?;
    for r in grouped(reports) {
        w.write_record([
            r.experiment.clone(),
            r.params_hash(),
            fmt_f64(r.lhs.mean),
            fmt_f64(r.lhs.stderr),
            fmt_f64(r.rhs.mean),
            fmt_f64(r.rhs.stderr),
            r.ratio_mean().map(fmt_f64).unwrap_or_default(),
            r.check.bound().map(fmt_f64).unwrap_or_default(),
            r.grid_n.to_string(),
            if r.verdict { "pass" } else { "fail" }.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn summary(reports: &[RatioReport]) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::EmptyReports);
    }
    let mut s = String::new();
    let passed = reports.iter().filter(|r| r.verdict).count();
    let _ = writeln!(s, "{passed}/{} rows pass", reports.len());
    let mut current = "";
    for r in grouped(reports) {
        if r.experiment != current {
            current = &r.experiment;
            let _ = writeln!(s, "\n[{current}]");
        }
        let ratio = r.ratio_mean().map_or("-".to_string(), |x| format!("{x:.6}"));
        let _ = writeln!(
            s,
            "{} {} | {} | lhs {:.6e} rhs {:.6e} ratio {} | {} | {}",
            if r.verdict { "PASS" } else { "FAIL" },
            r.params_hash(),
            r.anchor,
            r.lhs.mean,
            r.rhs.mean,
            ratio,
            r.check,
            r.params,
        );
    }
    Ok(s)
}

/// Writes `results.csv` and `summary.txt` into `dir`.
pub fn emit_report(reports: &[RatioReport], dir: &Path) -> Result<()> {
    if reports.is_empty() {
        return Err(Error::EmptyReports);
    }
    fs::create_dir_all(dir)?;
    let mut buf = Vec::new();
    write_csv(reports, &mut buf)?;
    fs::write(dir.join(CSV_FILE), buf)?;
    fs::write(dir.join(SUMMARY_FILE), summary(reports)?)?;
    Ok(())
}

pub fn all_pass(reports: &[RatioReport]) -> bool {
    reports.iter().all(|r| r.verdict)
}

/// One experiment of the verification preset, tagged with the acceptance
/// criterion it feeds (`None` for supplementary checks).
#[derive(Clone, Debug, PartialEq)]
pub struct PresetEntry {
    pub criterion: Option<u8>,
    pub config: ExperimentConfig,
}

/// The full verification suite. `fast` shrinks grids and replicate counts
/// for smoke runs; the default sizes are the acceptance sizes.
pub fn verify_preset(fast: bool) -> Vec<PresetEntry> {
    let pick = |full: usize, quick: usize| if fast { quick } else { full };
    let e = |criterion: Option<u8>, config| PresetEntry { criterion, config };
    vec![
        e(Some(1), ExperimentConfig::PowerOracles(PowerOracleConfig::default())),
        e(Some(2), ExperimentConfig::YoungInequality(YoungConfig::default())),
        e(
            None,
            ExperimentConfig::NormRelations(NormRelationsConfig {
                weights: vec![1.0, 1.0, 2.0, 0.5],
                gauges: vec![
                    GaugeSpec::power(2.0),
                    GaugeSpec::LambdaAlpha { alpha: 1.0 },
                    GaugeSpec::LambdaAlpha { alpha: 2.0 },
                    GaugeSpec::PowerLog { p: 2.0 },
                ],
                samples: pick(400, 100),
            }),
        ),
        e(
            Some(3),
            ExperimentConfig::BrownianEngine(EngineConfig {
                horizon: 1.0,
                steps: pick(4096, 1024),
                replicates: pick(100_000, 10_000),
            }),
        ),
        e(Some(4), ExperimentConfig::ItoIsometry(IsometryConfig::standard(pick(256, 64), pick(100_000, 10_000)))),
        e(Some(5), ExperimentConfig::GoodLambda(GoodLambdaConfig::standard(pick(1024, 256), pick(100_000, 10_000)))),
        e(Some(6), ExperimentConfig::ScalarBdg(BdgConfig::standard(pick(1024, 256), pick(100_000, 10_000)))),
        e(Some(7), ExperimentConfig::DoobOrlicz(DoobConfig::standard(pick(256, 64), pick(100_000, 10_000)))),
        e(
            Some(8),
            ExperimentConfig::OrliczBdg(OrliczBdgConfig {
                luxemburg_replicates: pick(1000, 200),
                ..OrliczBdgConfig::standard(pick(128, 32), pick(10_000, 2_000))
            }),
        ),
        e(
            Some(9),
            ExperimentConfig::Coarsening(CoarseningConfig { steps: pick(4096, 1024), ..CoarseningConfig::standard() }),
        ),
        e(
            None,
            ExperimentConfig::Lenglart(LenglartConfig::standard(
                Instantiation::ScalarMartingale { rule: Rule::SignOfB1 },
                GaugeSpec::power(2.0),
                pick(128, 32),
                pick(20_000, 2_000),
            )),
        ),
        e(
            None,
            ExperimentConfig::Lenglart(LenglartConfig::standard(
                Instantiation::OrliczIntegral {
                    rule: Rule::TwoCoordMix,
                    lambda: GaugeSpec::LambdaAlpha { alpha: 2.0 },
                    weights: vec![1.0, 1.0, 2.0, 0.5],
                },
                GaugeSpec::power(1.0),
                pick(64, 16),
                pick(5_000, 1_000),
            )),
        ),
    ]
}

pub fn verify_config(fast: bool, seed: u64) -> RunConfig {
    RunConfig { seed, output: None, experiments: verify_preset(fast).into_iter().map(|e| e.config).collect() }
}
