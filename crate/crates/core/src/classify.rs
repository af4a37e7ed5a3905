//! Empirical class membership of gauges.
//!
//! Membership in the moderate-growth classes is a limit statement, so every
//! flag here is the outcome of a finite probe and records the probe
//! configuration that produced it.

use crate::error::{Error, Result};
use crate::gauge::{GaugeSpec, GrowthFunction};
use crate::numerics::{geometric_grid, integrate, lower_convex_hull, polyline_eval};
use crate::transforms::phi_of;

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeConfig {
    /// Probe grid `[t_lo, t_hi]`, geometric.
    pub t_lo: f64,
    pub t_hi: f64,
    pub t_count: usize,
    /// Dilations used for the `c_λ` estimate; the class flag uses λ = 2.
    pub lambdas: Vec<f64>,
    /// Decreasing dilations `s` at which `φ(s)` is probed for decay.
    pub s_probe: Vec<f64>,
    /// Points at which the integral ratio is maximized.
    pub kappa_t: Vec<f64>,
    /// Relative slack on the three-point convexity test.
    pub convexity_tol: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            t_lo: 1e-8,
            t_hi: 1e8,
            t_count: 321,
            lambdas: vec![2.0, 4.0, 8.0],
            s_probe: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            kappa_t: geometric_grid(1e-6, 1e6, 25),
            convexity_tol: 1e-10,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_lo > 0.0) || self.t_hi / self.t_lo < 1e4 || self.t_count < 8 {
            return Err(Error::InvalidParameter {
                name: "probe grid",
                value: self.t_hi / self.t_lo,
                reason: "probe grid must span at least four decades with >= 8 points",
            });
        }
        if self.s_probe.len() < 2 || self.kappa_t.is_empty() || self.lambdas.is_empty() {
            return Err(Error::InvalidParameter {
                name: "probe lists",
                value: 0.0,
                reason: "probe lists must be nonempty",
            });
        }
        Ok(())
    }

    fn grid(&self) -> Vec<f64> {
        geometric_grid(self.t_lo, self.t_hi, self.t_count)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct A0Probe {
    pub flag: bool,
    /// `(λ, sup_t Λ(λt)/Λ(t))` over the probe grid; infinite when the ratio
    /// overflows.
    pub c_lambda: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct A1Probe {
    pub flag: bool,
    /// `sup_t Λ(st)/Λ(t)` at the smallest probed `s`.
    pub sup_ratio_at_smallest_s: f64,
    /// `Λ(t_hi) / Λ(sqrt(t_hi))`, the divergence witness.
    pub growth_witness: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaugeClassReport {
    pub a0: A0Probe,
    pub a1: A1Probe,
    pub is_n_function: bool,
    /// Reason the N-function probe failed, if it did.
    pub n_function_diagnostic: Option<String>,
    /// `κ_Λ` when the gauge passes every class probe.
    pub kappa_a2: Option<f64>,
    /// Raw integral ratio `sup_t ∫_0^1 Λ(st)/s² ds / Λ(t)`, independent of
    /// the other flags; absent when the quadrature diverges.
    pub kappa_ratio: Option<f64>,
    pub kappa_diagnostic: Option<String>,
    /// Log-log slope of `Λ` near the domain floor.
    pub rv_index: Option<f64>,
    /// `K = max Λ / Λ_conv` over the probe grid, where `Λ_conv` is the
    /// greatest convex minorant of `Λ`. Equals 1 for convex gauges.
    pub convex_equivalence: Option<f64>,
    pub probe: ProbeConfig,
}

impl GaugeClassReport {
    pub fn is_a0(&self) -> bool {
        self.a0.flag
    }

    pub fn is_a1(&self) -> bool {
        self.a1.flag
    }

    pub fn is_a2(&self) -> bool {
        self.kappa_a2.is_some()
    }

    /// Λ is two-sided comparable (constant `K`) to its convex minorant and
    /// passes every other class probe. The two-sided moment inequalities
    /// are invariant under such equivalence, with constants scaled by `K`.
    pub fn a2_up_to_equivalence(&self) -> bool {
        if self.is_a2() {
            return true;
        }
        self.is_a1()
            && self.kappa_ratio.is_some()
            && self.n_function_diagnostic.as_deref().map_or(true, |d| d.starts_with("convexity"))
            && self.convex_equivalence.is_some_and(|k| k < 10.0)
    }
}

fn probe_values(gauge: &GrowthFunction, grid: &[f64]) -> Vec<(f64, f64)> {
    grid.iter()
        .map(|&t| (t, gauge.eval(t)))
        .take_while(|(_, v)| v.is_finite())
        .collect()
}

/// Convexity (three-point) and limit checks `Λ(t)/t → 0` at zero and
/// `→ ∞` at infinity. The error string names the failing check.
pub fn n_function_probe(gauge: &GrowthFunction, cfg: &ProbeConfig) -> std::result::Result<(), String> {
    let pts = probe_values(gauge, &cfg.grid());
    if pts.len() < 8 {
        return Err("limits: too few finite probe values".into());
    }
    if let Some(i) = convexity_violation(&pts, cfg.convexity_tol) {
        return Err(format!(
            "convexity: three-point test fails around t = {:.6e}",
            pts[i].0
        ));
    }
    let ratio = |i: usize| pts[i].1 / pts[i].0;
    let at_one = gauge.eval(1.0);
    let (first, last) = (ratio(0), ratio(pts.len() - 1));
    if !(first <= 1e-2 * at_one) {
        return Err(format!("limits: Λ(t)/t = {first:e} near zero does not vanish"));
    }
    if !(last >= 1e2 * at_one) {
        return Err(format!("limits: Λ(t)/t = {last:e} at the top of the grid does not diverge"));
    }
    Ok(())
}

fn convexity_violation(pts: &[(f64, f64)], tol: f64) -> Option<usize> {
    // consecutive triples plus triples at stride 4
    for stride in [1usize, 4] {
        for i in stride..pts.len().saturating_sub(stride) {
            let (l, m, r) = (pts[i - stride], pts[i], pts[i + stride]);
            let w = (m.0 - l.0) / (r.0 - l.0);
            let chord = l.1 + w * (r.1 - l.1);
            if m.1 > chord + tol * chord.abs().max(m.1.abs()) {
                return Some(i);
            }
        }
    }
    None
}

fn convex_equivalence(pts: &[(f64, f64)]) -> Option<f64> {
    let mut with_origin = Vec::with_capacity(pts.len() + 1);
    with_origin.push((0.0, 0.0));
    with_origin.extend_from_slice(pts);
    let hull = lower_convex_hull(&with_origin);
    let mut k: f64 = 1.0;
    for &(t, v) in pts {
        let h = polyline_eval(&hull, t);
        if !(h > 0.0) {
            return None;
        }
        k = k.max(v / h);
    }
    Some(k)
}

/// `∫_0^1 Λ(st)/s² ds / Λ(t)`, via `s = e^{-u}` on unit chunks of `u` until
/// the geometric tail estimate falls below `1e-8`.
pub fn kappa_ratio(gauge: &GrowthFunction, t: f64) -> Result<f64> {
    if gauge.closed_forms().kappa {
        if let Some(GaugeSpec::Power { p, .. }) = gauge.spec() {
            return Ok(1.0 / (p - 1.0));
        }
    }
    let lt = gauge.eval(t);
    if !(lt > 0.0) || !lt.is_finite() {
        return Err(Error::Overflow(t));
    }
    let integrand = |u: f64| gauge.eval((-u).exp() * t) * u.exp() / lt;
    let mut total = 0.0;
    let mut prev_chunk = f64::NAN;
    // beyond this many unit chunks e^{-u} t underflows and the gauge reads zero
    let max_chunks = (700.0 + t.ln()).max(1.0) as usize;
    for k in 0..max_chunks {
        let a = k as f64;
        let chunk = integrate(integrand, a, a + 1.0, 1e-14)?;
        total += chunk;
        if k > 0 && prev_chunk > 0.0 {
            let r = chunk / prev_chunk;
            if r < 1.0 {
                let tail = chunk * r / (1.0 - r);
                if tail < 1e-8 {
                    return Ok(total);
                }
            }
        }
        prev_chunk = chunk;
    }
    Err(Error::Quadrature(format!(
        "integral ratio at t = {t:e} did not converge by u = {max_chunks}"
    )))
}

/// `κ̂ = max_t kappa_ratio(t)` over `t_grid`.
pub fn kappa_of(gauge: &GrowthFunction, t_grid: &[f64]) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for &t in t_grid {
        best = best.max(kappa_ratio(gauge, t)?);
    }
    Ok(best)
}

fn a0_probe(gauge: &GrowthFunction, grid: &[f64], lambdas: &[f64]) -> A0Probe {
    let mut flag = true;
    let mut c_lambda = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        let ratios: Vec<f64> = grid.iter().map(|&t| gauge.eval(lam * t) / gauge.eval(t)).collect();
        if ratios.iter().any(|r| !r.is_finite()) {
            c_lambda.push((lam, f64::INFINITY));
            if lam == 2.0 {
                flag = false;
            }
            continue;
        }
        let quarter = ratios.len() / 4;
        let max = |xs: &[f64]| xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let middle = max(&ratios[quarter..ratios.len() - quarter]);
        let ends = max(&ratios[..quarter]).max(max(&ratios[ratios.len() - quarter..]));
        let c = middle.max(ends);
        c_lambda.push((lam, c));
        // growth toward either end of the grid means the ratio is unbounded
        if lam == 2.0 && ends > middle * (1.0 + 1e-9) {
            flag = false;
        }
    }
    A0Probe { flag, c_lambda }
}

/// Empirical class report for `gauge` under `cfg`.
pub fn classify_gauge(gauge: &GrowthFunction, cfg: &ProbeConfig) -> Result<GaugeClassReport> {
    cfg.validate()?;
    let grid = cfg.grid();
    let a0 = a0_probe(gauge, &grid, &cfg.lambdas);

    let mut phis = Vec::with_capacity(cfg.s_probe.len());
    for &s in &cfg.s_probe {
        match phi_of(gauge, s) {
            Ok(v) => phis.push(v),
            Err(_) => break,
        }
    }
    let decays = phis.len() == cfg.s_probe.len()
        && phis.windows(2).all(|w| w[1] <= w[0])
        && phis.last().copied().unwrap_or(f64::INFINITY) < 0.5 * phis[0];
    let top = cfg.t_hi;
    let growth_witness = gauge.eval(top) / gauge.eval(top.sqrt());
    let diverges = growth_witness.is_finite() && growth_witness > 2.0;
    let a1 = A1Probe {
        flag: a0.flag && decays && diverges,
        sup_ratio_at_smallest_s: phis.last().copied().unwrap_or(f64::NAN),
        growth_witness,
    };

    let n_probe = n_function_probe(gauge, cfg);
    let pts = probe_values(gauge, &grid);
    let (kappa_ratio, kappa_diagnostic) = match kappa_of(gauge, &cfg.kappa_t) {
        Ok(k) => (Some(k), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let is_n_function = n_probe.is_ok();
    let kappa_a2 = if a1.flag && is_n_function { kappa_ratio } else { None };

    let floor = gauge.domain_floor();
    let slope = (gauge.eval(10.0 * floor).ln() - gauge.eval(floor).ln()) / 10f64.ln();

    Ok(GaugeClassReport {
        a0,
        a1,
        is_n_function,
        n_function_diagnostic: n_probe.err(),
        kappa_a2,
        kappa_ratio,
        kappa_diagnostic,
        rv_index: slope.is_finite().then_some(slope),
        convex_equivalence: convex_equivalence(&pts),
        probe: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::{make_gauge, registry, Family};

    fn classify(g: &GrowthFunction) -> GaugeClassReport {
        classify_gauge(g, &ProbeConfig::default()).unwrap()
    }

    #[test]
    fn square_is_in_a2_with_unit_kappa() {
        let g = make_gauge(Family::Power, &[2.0]).unwrap();
        let r = classify(&g);
        assert!(r.is_a0() && r.is_a1() && r.is_n_function && r.is_a2());
        assert!((r.kappa_a2.unwrap() - 1.0).abs() < 1e-4);
        // numeric quadrature agrees with the closed form
        let numeric = classify(&g.clone().without_closed_forms());
        assert!((numeric.kappa_a2.unwrap() - 1.0).abs() < 1e-4);
        assert!((r.rv_index.unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn lambda_zero_is_a0_but_not_a1() {
        let g = make_gauge(Family::LambdaAlpha, &[0.0]).unwrap();
        let r = classify(&g);
        assert!(r.is_a0());
        assert!(!r.is_a1());
        assert!(!r.is_n_function);
        assert!(!r.is_a2());
    }

    #[test]
    fn exp_minus_one_is_not_moderate() {
        let g = make_gauge(Family::ExpMinusOne, &[]).unwrap();
        let r = classify(&g);
        assert!(!r.is_a0());
        assert!(!r.is_a1());
        assert_eq!(r.a0.c_lambda[0].1, f64::INFINITY);
    }

    #[test]
    fn lambda_two_has_concave_kink_but_convex_equivalent() {
        let g = make_gauge(Family::LambdaAlpha, &[2.0]).unwrap();
        let r = classify(&g);
        assert!(r.is_a1());
        assert!(!r.is_n_function);
        assert!(r.n_function_diagnostic.as_deref().unwrap().starts_with("convexity"));
        assert!(r.kappa_ratio.is_some());
        let k = r.convex_equivalence.unwrap();
        assert!(k > 1.0 && k < 1.5, "K = {k}");
        assert!(r.a2_up_to_equivalence());
    }

    #[test]
    fn lambda_one_kappa_diverges() {
        let g = make_gauge(Family::LambdaAlpha, &[1.0]).unwrap();
        let r = classify(&g);
        assert!(r.is_a1());
        assert!(r.kappa_ratio.is_none());
        assert!(r.kappa_diagnostic.is_some());
        assert!(!r.a2_up_to_equivalence());
    }

    #[test]
    fn class_invariants_hold_across_registry() {
        for (name, g) in registry() {
            let r = classify(&g);
            assert!(!r.is_a1() || r.is_a0(), "{name}: A1 without A0");
            if r.kappa_a2.is_some() {
                assert!(r.is_a1() && r.is_n_function, "{name}: A2 flags inconsistent");
            }
        }
    }

    #[test]
    fn narrow_probe_is_rejected() {
        let cfg = ProbeConfig { t_lo: 1.0, t_hi: 10.0, ..ProbeConfig::default() };
        let g = make_gauge(Family::Power, &[2.0]).unwrap();
        assert!(classify_gauge(&g, &cfg).is_err());
    }
}
