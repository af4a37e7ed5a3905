//! Growth functions (gauges) used as Orlicz moduli and as test functions in
//! the moment inequalities.
//!
//! A [`GrowthFunction`] is an immutable, thread-safe value. Registered
//! families evaluate in closed form together with their right derivative;
//! some also carry closed forms for the dilation transform, the
//! complementary function and the integral constant, which the transform
//! routines use in preference to numerics.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics;

/// Default smallest evaluation point used by numeric probes. Probes span
/// `[floor, 1 / floor]`.
pub const DEFAULT_DOMAIN_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Power,
    PowerLog,
    LambdaAlpha,
    ExpMinusOne,
    Table,
    /// Numerically evaluated complementary function of another gauge.
    Complementary,
}

impl Family {
    pub const REGISTERED: [Family; 5] = [
        Family::Power,
        Family::PowerLog,
        Family::LambdaAlpha,
        Family::ExpMinusOne,
        Family::Table,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Family::Power => "power",
            Family::PowerLog => "power_log",
            Family::LambdaAlpha => "lambda_alpha",
            Family::ExpMinusOne => "exp_minus_one",
            Family::Table => "table",
            Family::Complementary => "complementary",
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            Family::Power => "scale * t^p",
            Family::PowerLog => "t^p * ln(e + t)",
            Family::LambdaAlpha => "t^alpha / ln(1/t) for t < 1/e, t^alpha for t >= 1/e",
            Family::ExpMinusOne => "exp(t) - 1",
            Family::Table => "log-log interpolation of knots [[t, value], ...]",
            Family::Complementary => "integral of the right inverse of the derivative",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::REGISTERED
            .into_iter()
            .find(|f| f.tag() == s)
            .ok_or_else(|| Error::UnknownFamily(s.to_owned()))
    }
}

fn one() -> f64 {
    1.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

/// Serializable description of a gauge, as it appears in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum GaugeSpec {
    Power {
        p: f64,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        scale: f64,
    },
    PowerLog {
        p: f64,
    },
    LambdaAlpha {
        alpha: f64,
    },
    ExpMinusOne,
    Table {
        knots: Vec<[f64; 2]>,
    },
}

impl GaugeSpec {
    pub fn power(p: f64) -> Self {
        GaugeSpec::Power { p, scale: 1.0 }
    }

    pub fn build(&self) -> Result<GrowthFunction> {
        GrowthFunction::from_spec(self.clone())
    }
}

/// Which closed forms the gauge carries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClosedForms {
    pub phi: bool,
    pub complementary: bool,
    pub kappa: bool,
}

#[derive(Clone, Debug)]
enum Kind {
    Power { p: f64, scale: f64 },
    PowerLog { p: f64 },
    LambdaAlpha { alpha: f64 },
    ExpMinusOne,
    Table { log_t: Vec<f64>, log_v: Vec<f64> },
    Complementary(Arc<GrowthFunction>),
}

#[derive(Clone, Debug)]
pub struct GrowthFunction {
    kind: Kind,
    spec: Option<GaugeSpec>,
    domain_floor: f64,
    closed_forms: ClosedForms,
}

/// Builds a gauge from a family tag and its positional parameters.
///
/// Parameters: power `[p]` or `[p, scale]`; power_log `[p]`; lambda_alpha
/// `[alpha]`; exp_minus_one `[]`; table `[t0, v0, t1, v1, ...]`.
pub fn make_gauge(family: Family, params: &[f64]) -> Result<GrowthFunction> {
    let need = |n: usize| -> Result<()> {
        if params.len() < n {
            Err(Error::InvalidParameter {
                name: "params",
                value: params.len() as f64,
                reason: "too few parameters for family",
            })
        } else {
            Ok(())
        }
    };
    let spec = match family {
        Family::Power => {
            need(1)?;
            GaugeSpec::Power {
                p: params[0],
                scale: params.get(1).copied().unwrap_or(1.0),
            }
        }
        Family::PowerLog => {
            need(1)?;
            GaugeSpec::PowerLog { p: params[0] }
        }
        Family::LambdaAlpha => {
            need(1)?;
            GaugeSpec::LambdaAlpha { alpha: params[0] }
        }
        Family::ExpMinusOne => GaugeSpec::ExpMinusOne,
        Family::Table => {
            if params.len() % 2 != 0 {
                return Err(Error::InvalidTable("odd number of knot coordinates".into()));
            }
            GaugeSpec::Table {
                knots: params.chunks(2).map(|c| [c[0], c[1]]).collect(),
            }
        }
        Family::Complementary => {
            return Err(Error::UnknownFamily(
                "complementary (use complementary_gauge)".into(),
            ))
        }
    };
    GrowthFunction::from_spec(spec)
}

impl GrowthFunction {
    pub fn from_spec(spec: GaugeSpec) -> Result<Self> {
        let (kind, closed_forms) = match &spec {
            GaugeSpec::Power { p, scale } => {
                if !(*p > 0.0) || !p.is_finite() {
                    return Err(Error::InvalidParameter {
                        name: "p",
                        value: *p,
                        reason: "power exponent must be positive",
                    });
                }
                if !(*scale > 0.0) || !scale.is_finite() {
                    return Err(Error::InvalidParameter {
                        name: "scale",
                        value: *scale,
                        reason: "scale must be positive",
                    });
                }
                let superlinear = *p > 1.0;
                (
                    Kind::Power { p: *p, scale: *scale },
                    ClosedForms {
                        phi: true,
                        complementary: superlinear,
                        kappa: superlinear,
                    },
                )
            }
            GaugeSpec::PowerLog { p } => {
                if !(*p > 0.0) || !p.is_finite() {
                    return Err(Error::InvalidParameter {
                        name: "p",
                        value: *p,
                        reason: "power exponent must be positive",
                    });
                }
                (Kind::PowerLog { p: *p }, ClosedForms::default())
            }
            GaugeSpec::LambdaAlpha { alpha } => {
                if !(*alpha >= 0.0) || !alpha.is_finite() {
                    return Err(Error::InvalidParameter {
                        name: "alpha",
                        value: *alpha,
                        reason: "alpha must be nonnegative",
                    });
                }
                (
                    Kind::LambdaAlpha { alpha: *alpha },
                    ClosedForms {
                        phi: true,
                        ..ClosedForms::default()
                    },
                )
            }
            GaugeSpec::ExpMinusOne => (Kind::ExpMinusOne, ClosedForms::default()),
            GaugeSpec::Table { knots } => {
                if knots.len() < 2 {
                    return Err(Error::InvalidTable("need at least two knots".into()));
                }
                for w in knots.windows(2) {
                    if !(w[1][0] > w[0][0]) || w[1][1] < w[0][1] {
                        return Err(Error::InvalidTable(
                            "knots must have increasing t and nondecreasing values".into(),
                        ));
                    }
                }
                if knots.iter().any(|k| !(k[0] > 0.0) || !(k[1] > 0.0)) {
                    return Err(Error::InvalidTable("knots must be positive".into()));
                }
                (
                    Kind::Table {
                        log_t: knots.iter().map(|k| k[0].ln()).collect(),
                        log_v: knots.iter().map(|k| k[1].ln()).collect(),
                    },
                    ClosedForms::default(),
                )
            }
        };
        Ok(GrowthFunction {
            kind,
            spec: Some(spec),
            domain_floor: DEFAULT_DOMAIN_FLOOR,
            closed_forms,
        })
    }

    pub(crate) fn complementary_of(base: GrowthFunction) -> Self {
        let floor = base.domain_floor;
        GrowthFunction {
            kind: Kind::Complementary(Arc::new(base)),
            spec: None,
            domain_floor: floor,
            closed_forms: ClosedForms::default(),
        }
    }

    pub fn family(&self) -> Family {
        match self.kind {
            Kind::Power { .. } => Family::Power,
            Kind::PowerLog { .. } => Family::PowerLog,
            Kind::LambdaAlpha { .. } => Family::LambdaAlpha,
            Kind::ExpMinusOne => Family::ExpMinusOne,
            Kind::Table { .. } => Family::Table,
            Kind::Complementary(_) => Family::Complementary,
        }
    }

    /// Config description; `None` for derived gauges.
    pub fn spec(&self) -> Option<&GaugeSpec> {
        self.spec.as_ref()
    }

    pub fn domain_floor(&self) -> f64 {
        self.domain_floor
    }

    pub fn closed_forms(&self) -> ClosedForms {
        self.closed_forms
    }

    pub fn with_domain_floor(mut self, floor: f64) -> Result<Self> {
        if !(floor > 0.0 && floor < 1.0) {
            return Err(Error::InvalidParameter {
                name: "domain_floor",
                value: floor,
                reason: "must lie in (0, 1)",
            });
        }
        self.domain_floor = floor;
        Ok(self)
    }

    /// Same gauge with every closed form disabled, forcing the numeric paths.
    pub fn without_closed_forms(mut self) -> Self {
        self.closed_forms = ClosedForms::default();
        self
    }

    /// Power exponent when the gauge is `scale * t^p`.
    pub fn power_exponent(&self) -> Option<f64> {
        match self.kind {
            Kind::Power { p, .. } => Some(p),
            _ => None,
        }
    }

    /// `Λ(t)`; zero for `t <= 0` (the limit at the origin).
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Power { p, scale } => {
                if *p == 2.0 {
                    scale * t * t
                } else {
                    scale * t.powf(*p)
                }
            }
            Kind::PowerLog { p } => t.powf(*p) * (std::f64::consts::E + t).ln(),
            Kind::LambdaAlpha { alpha } => {
                let base = if *alpha == 0.0 { 1.0 } else { t.powf(*alpha) };
                if t < (-1.0f64).exp() {
                    base / (-t.ln())
                } else {
                    base
                }
            }
            Kind::ExpMinusOne => t.exp_m1(),
            Kind::Table { log_t, log_v } => table_eval(log_t, log_v, t.ln()).exp(),
            Kind::Complementary(base) => complementary_value(base, t),
        }
    }

    /// Right derivative `a(t) = Λ'_+(t)`.
    pub fn derivative(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Power { p, scale } => {
                if t == 0.0 {
                    return if *p > 1.0 {
                        0.0
                    } else if *p == 1.0 {
                        *scale
                    } else {
                        f64::INFINITY
                    };
                }
                scale * p * t.powf(p - 1.0)
            }
            Kind::PowerLog { p } => {
                if t == 0.0 {
                    return if *p > 1.0 { 0.0 } else { f64::INFINITY };
                }
                let e = std::f64::consts::E;
                p * t.powf(p - 1.0) * (e + t).ln() + t.powf(*p) / (e + t)
            }
            Kind::LambdaAlpha { alpha } => {
                if t == 0.0 {
                    return if *alpha > 1.0 { 0.0 } else { f64::INFINITY };
                }
                let pow_m1 = t.powf(alpha - 1.0);
                if t < (-1.0f64).exp() {
                    let l = -t.ln();
                    alpha * pow_m1 / l + pow_m1 / (l * l)
                } else {
                    alpha * pow_m1
                }
            }
            Kind::ExpMinusOne => t.exp(),
            Kind::Table { log_t, log_v } => {
                if t == 0.0 {
                    return 0.0;
                }
                let lt = t.ln();
                let slope = table_slope(log_t, log_v, lt);
                table_eval(log_t, log_v, lt).exp() * slope / t
            }
            Kind::Complementary(base) => right_inverse(base, t),
        }
    }
}

impl fmt::Display for GrowthFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Power { p, scale } if *scale == 1.0 => write!(f, "t^{p}"),
            Kind::Power { p, scale } => write!(f, "{scale}*t^{p}"),
            Kind::PowerLog { p } => write!(f, "t^{p}*ln(e+t)"),
            Kind::LambdaAlpha { alpha } => write!(f, "Lambda^{alpha}"),
            Kind::ExpMinusOne => f.write_str("exp(t)-1"),
            Kind::Table { log_t, .. } => write!(f, "table[{} knots]", log_t.len()),
            Kind::Complementary(base) => write!(f, "complementary({base})"),
        }
    }
}

fn table_segment(log_t: &[f64], x: f64) -> usize {
    // index i of the segment [i, i+1]; end segments extrapolate
    let idx = log_t.partition_point(|&v| v <= x);
    idx.clamp(1, log_t.len() - 1) - 1
}

fn table_slope(log_t: &[f64], log_v: &[f64], x: f64) -> f64 {
    let i = table_segment(log_t, x);
    (log_v[i + 1] - log_v[i]) / (log_t[i + 1] - log_t[i])
}

fn table_eval(log_t: &[f64], log_v: &[f64], x: f64) -> f64 {
    let i = table_segment(log_t, x);
    log_v[i] + table_slope(log_t, log_v, x) * (x - log_t[i])
}

/// `ã(u) = inf{s >= 0 : a(s) > u}` for the right derivative `a` of `base`.
pub(crate) fn right_inverse(base: &GrowthFunction, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    let above = |s: f64| base.derivative(s) > u;
    let hi = match numerics::expand_upper(above, 1.0, 1e300, "right inverse") {
        Ok(hi) => hi,
        Err(_) => return f64::INFINITY,
    };
    let mut lo = hi / 2.0;
    while lo > 1e-300 && above(lo) {
        lo /= 2.0;
    }
    numerics::bisect_threshold(above, lo, hi, 4.0 * f64::EPSILON)
}

fn complementary_value(base: &GrowthFunction, t: f64) -> f64 {
    let top = right_inverse(base, t);
    if !top.is_finite() {
        return f64::INFINITY;
    }
    let tol = (1e-14 * t * top).max(1e-300);
    numerics::integrate(|u| right_inverse(base, u), 0.0, t, tol).unwrap_or(f64::NAN)
}

/// Named gauges shipped with the crate, used by `list-gauges` and by the
/// registry-wide property checks.
pub fn registry() -> Vec<(&'static str, GrowthFunction)> {
    let mk = |s: GaugeSpec| s.build().expect("registry gauge is valid");
    vec![
        ("power_1.5", mk(GaugeSpec::power(1.5))),
        ("power_2", mk(GaugeSpec::power(2.0))),
        ("power_3", mk(GaugeSpec::power(3.0))),
        ("half_square", mk(GaugeSpec::Power { p: 2.0, scale: 0.5 })),
        ("cube_over_3", mk(GaugeSpec::Power { p: 3.0, scale: 1.0 / 3.0 })),
        ("power_log_2", mk(GaugeSpec::PowerLog { p: 2.0 })),
        ("lambda_alpha_0", mk(GaugeSpec::LambdaAlpha { alpha: 0.0 })),
        ("lambda_alpha_1", mk(GaugeSpec::LambdaAlpha { alpha: 1.0 })),
        ("lambda_alpha_2", mk(GaugeSpec::LambdaAlpha { alpha: 2.0 })),
        ("exp_minus_one", mk(GaugeSpec::ExpMinusOne)),
    ]
}
