//! Adapted integrands on uniform grids, block coarsening and truncation, and
//! the grid Itô integral with its companion `η` and triple-norm paths.
//!
//! A realized integrand is stored densely as one value per grid cell
//! `[t_k, t_{k+1})`, atom and coordinate. Values for cell `k` are computed
//! from a [`History`] that exposes the bundle up to index `k` only.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::GrowthFunction;
use crate::paths::{BrownianBundle, PathGrid};
use crate::space::{modular_of_norms, DiscreteMeasureSpace};

/// Read-only view of a bundle truncated at grid index `upto`.
#[derive(Clone, Copy, Debug)]
pub struct History<'a> {
    bundle: &'a BrownianBundle,
    upto: usize,
}

impl<'a> History<'a> {
    pub fn new(bundle: &'a BrownianBundle, upto: usize) -> Self {
        History { bundle, upto: upto.min(bundle.grid().steps) }
    }

    pub fn now(&self) -> usize {
        self.upto
    }

    /// `B^{(coord)}_{t_k}` (zero-based coordinate); reading past `now` fails.
    pub fn get(&self, coord: usize, k: usize) -> Result<f64> {
        if k > self.upto {
            return Err(Error::FutureAccess { requested: k, available: self.upto });
        }
        if coord >= self.bundle.dim() {
            return Err(Error::DimensionMismatch { expected: coord + 1, got: self.bundle.dim() });
        }
        Ok(self.bundle.coord(coord)[k])
    }

    pub fn current(&self, coord: usize) -> Result<f64> {
        self.get(coord, self.upto)
    }
}

/// Named integrands of the suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    #[serde(rename = "constant_e1")]
    ConstantE1,
    #[serde(rename = "sign_of_B1")]
    SignOfB1,
    #[serde(rename = "B1_times_e1")]
    B1TimesE1,
    /// Atom `i` of `N` mixes `cos θ_i e_1 + sin θ_i B^{(2)} e_2`,
    /// `θ_i = π i / (2 (N - 1))`.
    #[serde(rename = "two_coord_mix")]
    TwoCoordMix,
}

impl Rule {
    pub const ALL: [Rule; 4] = [Rule::ConstantE1, Rule::SignOfB1, Rule::B1TimesE1, Rule::TwoCoordMix];

    pub fn name(self) -> &'static str {
        match self {
            Rule::ConstantE1 => "constant_e1",
            Rule::SignOfB1 => "sign_of_B1",
            Rule::B1TimesE1 => "B1_times_e1",
            Rule::TwoCoordMix => "two_coord_mix",
        }
    }

    /// Number of leading coordinates the rule writes to.
    pub fn support(self) -> usize {
        match self {
            Rule::TwoCoordMix => 2,
            _ => 1,
        }
    }

    /// Uniform bound on `‖X‖`, when there is one.
    pub fn bound(self) -> Option<f64> {
        match self {
            Rule::ConstantE1 | Rule::SignOfB1 => Some(1.0),
            Rule::B1TimesE1 | Rule::TwoCoordMix => None,
        }
    }

    /// Value at the current time of `history` for atom `atom` of `atoms`,
    /// written into `out` (length `d`, zeroed by the caller).
    pub fn value(self, atom: usize, atoms: usize, history: &History<'_>, out: &mut [f64]) -> Result<()> {
        if out.len() < self.support() {
            return Err(Error::DimensionMismatch { expected: self.support(), got: out.len() });
        }
        match self {
            Rule::ConstantE1 => out[0] = 1.0,
            Rule::SignOfB1 => out[0] = if history.current(0)? >= 0.0 { 1.0 } else { -1.0 },
            Rule::B1TimesE1 => out[0] = history.current(0)?,
            Rule::TwoCoordMix => {
                let theta = if atoms > 1 { FRAC_PI_2 * atom as f64 / (atoms - 1) as f64 } else { 0.0 };
                out[0] = theta.cos();
                out[1] = theta.sin() * history.current(1)?;
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for Rule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Rule::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown integrand rule `{s}`")))
    }
}

/// A grid-adapted integrand with optional wrappers, applied in the order
/// scale, truncation `χ_n`, coarsening `𝒥ᵐ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpec {
    pub rule: Rule,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coarsen_m: Option<usize>,
}

fn one() -> f64 {
    1.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

impl From<Rule> for ProcessSpec {
    fn from(rule: Rule) -> Self {
        ProcessSpec { rule, scale: 1.0, truncation_n: None, coarsen_m: None }
    }
}

impl ProcessSpec {
    pub fn realize(&self, bundle: &BrownianBundle, atoms: usize) -> Result<GridProcess> {
        let mut x = GridProcess::from_rule(self.rule, bundle, atoms)?;
        if self.scale != 1.0 {
            x = x.scaled(self.scale);
        }
        if let Some(n) = self.truncation_n {
            x = truncate_process(&x, n, &vec![true; atoms]);
        }
        if let Some(m) = self.coarsen_m {
            x = x.coarsened(m, &bundle.grid())?;
        }
        Ok(x)
    }
}

/// Dense integrand: `values[(k * atoms + i) * d + j]` is coordinate `j` of
/// the value on cell `k` at atom `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridProcess {
    steps: usize,
    atoms: usize,
    d: usize,
    values: Vec<f64>,
}

impl GridProcess {
    pub fn zeros(steps: usize, atoms: usize, d: usize) -> Self {
        GridProcess { steps, atoms, d, values: vec![0.0; steps * atoms * d] }
    }

    pub fn from_values(steps: usize, atoms: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != steps * atoms * d {
            return Err(Error::DimensionMismatch { expected: steps * atoms * d, got: values.len() });
        }
        Ok(GridProcess { steps, atoms, d, values })
    }

    /// Evaluates `rule` on every cell, reading the bundle through histories
    /// truncated at the cell's left end.
    pub fn from_rule(rule: Rule, bundle: &BrownianBundle, atoms: usize) -> Result<Self> {
        let d = bundle.dim();
        if rule.support() > d {
            return Err(Error::DimensionMismatch { expected: rule.support(), got: d });
        }
        let steps = bundle.grid().steps;
        let mut x = GridProcess::zeros(steps, atoms, d);
        for k in 0..steps {
            let h = History::new(bundle, k);
            for i in 0..atoms {
                rule.value(i, atoms, &h, x.cell_mut(k, i))?;
            }
        }
        Ok(x)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn cell(&self, k: usize, atom: usize) -> &[f64] {
        let o = (k * self.atoms + atom) * self.d;
        &self.values[o..o + self.d]
    }

    pub fn cell_mut(&mut self, k: usize, atom: usize) -> &mut [f64] {
        let o = (k * self.atoms + atom) * self.d;
        &mut self.values[o..o + self.d]
    }

    pub fn norm_sq(&self, k: usize, atom: usize) -> f64 {
        self.cell(k, atom).iter().map(|v| v * v).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        GridProcess { values: self.values.iter().map(|v| c * v).collect(), ..self.clone() }
    }

    /// `a X + b Y`.
    pub fn combine(a: f64, x: &GridProcess, b: f64, y: &GridProcess) -> Result<Self> {
        if (x.steps, x.atoms, x.d) != (y.steps, y.atoms, y.d) {
            return Err(Error::DimensionMismatch { expected: x.values.len(), got: y.values.len() });
        }
        let values = x.values.iter().zip(&y.values).map(|(u, v)| a * u + b * v).collect();
        Ok(GridProcess { values, ..x.clone() })
    }

    /// `X 1_{[σ, ∞)}` for a grid index `σ`.
    pub fn started_at(&self, sigma: usize) -> Self {
        let mut out = self.clone();
        let cut = sigma.min(self.steps) * self.atoms * self.d;
        out.values[..cut].iter_mut().for_each(|v| *v = 0.0);
        out
    }

    /// Restriction to the first `steps` cells.
    pub fn prefix(&self, steps: usize) -> Self {
        let steps = steps.min(self.steps);
        GridProcess { steps, values: self.values[..steps * self.atoms * self.d].to_vec(), ..self.clone() }
    }

    /// Applies `𝒥ᵐ` atom by atom.
    pub fn coarsened(&self, m: usize, grid: &PathGrid) -> Result<Self> {
        if grid.steps != self.steps {
            return Err(Error::DimensionMismatch { expected: grid.steps, got: self.steps });
        }
        let mut out = GridProcess::zeros(self.steps, self.atoms, self.d);
        let mut path = vec![0.0; self.steps * self.d];
        for i in 0..self.atoms {
            for k in 0..self.steps {
                path[k * self.d..(k + 1) * self.d].copy_from_slice(self.cell(k, i));
            }
            let c = coarsen_jm(&path, self.d, m, grid)?;
            for k in 0..self.steps {
                out.cell_mut(k, i).copy_from_slice(&c[k * self.d..(k + 1) * self.d]);
            }
        }
        Ok(out)
    }
}

/// `𝒥ᵐ` on a cell path `f` (`n` cells of `dim` coordinates): zero on the
/// first block of length `1/m`, then on each block the left-Riemann average
/// of `f` over the block before it. Blocks must land on grid points.
pub fn coarsen_jm(f: &[f64], dim: usize, m: usize, grid: &PathGrid) -> Result<Vec<f64>> {
    let n = grid.steps;
    if f.len() != n * dim {
        return Err(Error::DimensionMismatch { expected: n * dim, got: f.len() });
    }
    let incompatible = || Error::IncompatibleCoarsening { m, steps: n, horizon: grid.horizon };
    if m == 0 {
        return Err(incompatible());
    }
    // cells per block is n / (T m); must be a positive integer
    let per_block = n as f64 / (grid.horizon * m as f64);
    let w = per_block.round();
    if w < 1.0 || (per_block - w).abs() > 1e-9 * per_block {
        return Err(incompatible());
    }
    let w = w as usize;
    let mut out = vec![0.0; n * dim];
    let mut avg = vec![0.0; dim];
    for start in (0..n).step_by(w) {
        let end = (start + w).min(n);
        // output on this block is the previous block's average
        for k in start..end {
            out[k * dim..(k + 1) * dim].copy_from_slice(&avg);
        }
        avg.iter_mut().for_each(|a| *a = 0.0);
        for k in start..end {
            for (a, v) in avg.iter_mut().zip(&f[k * dim..(k + 1) * dim]) {
                *a += v;
            }
        }
        avg.iter_mut().for_each(|a| *a /= w as f64);
    }
    Ok(out)
}

/// `∫₀ᵀ ‖f − g‖² dt` by the left rule on cell paths.
pub fn l2_distance_sq(f: &[f64], g: &[f64], dt: f64) -> f64 {
    f.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() * dt
}

/// `χ_n`: one up to `n − 1`, zero beyond `n`, linear in between.
pub fn chi(n: u32, s: f64) -> f64 {
    let n = f64::from(n);
    if s <= n - 1.0 {
        1.0
    } else if s > n {
        0.0
    } else {
        n - s
    }
}

/// `Xⁿ = 1_{U_n} X χ_n(‖X‖)`, with `in_u[i]` the membership of atom `i`.
pub fn truncate_process(x: &GridProcess, n: u32, in_u: &[bool]) -> GridProcess {
    let mut out = x.clone();
    for k in 0..x.steps {
        for (i, &inside) in in_u.iter().enumerate().take(x.atoms) {
            let factor = if inside { chi(n, x.norm_sq(k, i).sqrt()) } else { 0.0 };
            if factor != 1.0 {
                out.cell_mut(k, i).iter_mut().for_each(|v| *v *= factor);
            }
        }
    }
    out
}

/// The first `min(n, atoms)` atoms: a nested exhaustion of the space.
pub fn nested_prefix(atoms: usize, n: u32) -> Vec<bool> {
    (0..atoms).map(|i| i < n as usize).collect()
}

/// Per-atom paths `ℐˣ_{t_k}(x)` and `η^X_{t_k}(x)`, `k = 0..=n`, stored
/// `[atom][k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegralProcess {
    steps: usize,
    atoms: usize,
    integral: Vec<f64>,
    eta: Vec<f64>,
}

impl IntegralProcess {
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn integral(&self, atom: usize) -> &[f64] {
        &self.integral[atom * (self.steps + 1)..(atom + 1) * (self.steps + 1)]
    }

    pub fn eta(&self, atom: usize) -> &[f64] {
        &self.eta[atom * (self.steps + 1)..(atom + 1) * (self.steps + 1)]
    }

    /// `ℐˣ_{t_k}` across atoms.
    pub fn integral_at(&self, k: usize) -> Vec<f64> {
        (0..self.atoms).map(|i| self.integral(i)[k]).collect()
    }

    pub fn eta_at(&self, k: usize) -> Vec<f64> {
        (0..self.atoms).map(|i| self.eta(i)[k]).collect()
    }

    /// `[ℐˣ_{t_k}]_Λ` for every `k`.
    pub fn modular_path(&self, space: &DiscreteMeasureSpace, gauge: &GrowthFunction) -> Vec<f64> {
        (0..=self.steps)
            .map(|k| {
                let norms: Vec<f64> = self.integral_at(k).iter().map(|v| v.abs()).collect();
                modular_of_norms(space.weights(), &norms, gauge)
            })
            .collect()
    }

    /// `|‖X‖|_{Λ,t_k} = [(η^X_{t_k})^{1/2}]_Λ` for every `k`.
    pub fn triple_norm_path(&self, space: &DiscreteMeasureSpace, gauge: &GrowthFunction) -> Vec<f64> {
        (0..=self.steps)
            .map(|k| {
                let norms: Vec<f64> = self.eta_at(k).iter().map(|v| v.sqrt()).collect();
                modular_of_norms(space.weights(), &norms, gauge)
            })
            .collect()
    }

    /// CSV rows `replicate,atom,k,value`.
    pub fn write_csv<W: Write>(&self, writer: W, replicate: u64) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["replicate", "atom", "k", "value"])?;
        for i in 0..self.atoms {
            for (k, v) in self.integral(i).iter().enumerate() {
                w.write_record([replicate.to_string(), i.to_string(), k.to_string(), format!("{v:e}")])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Left-point Itô sums `Σ_k Σ_j X^{(j)}_{t_k}(x) ΔB^{(j)}_k` and left
/// Riemann sums `η = Σ_k ‖X_{t_k}(x)‖² dt`.
pub fn ito_integral(x: &GridProcess, bundle: &BrownianBundle) -> Result<IntegralProcess> {
    let grid = bundle.grid();
    if x.steps > grid.steps {
        return Err(Error::DimensionMismatch { expected: grid.steps, got: x.steps });
    }
    if x.d > bundle.dim() {
        return Err(Error::DimensionMismatch { expected: bundle.dim(), got: x.d });
    }
    let n = x.steps;
    let dt = grid.dt();
    let mut integral = vec![0.0; x.atoms * (n + 1)];
    let mut eta = vec![0.0; x.atoms * (n + 1)];
    let increments: Vec<Vec<f64>> = (0..x.d)
        .map(|j| bundle.coord(j).windows(2).take(n).map(|w| w[1] - w[0]).collect())
        .collect();
    for i in 0..x.atoms {
        let (mut acc, mut e) = (0.0, 0.0);
        let base = i * (n + 1);
        for k in 0..n {
            let v = x.cell(k, i);
            let mut s = 0.0;
            let mut q = 0.0;
            for (j, vj) in v.iter().enumerate() {
                s += vj * increments[j][k];
                q += vj * vj;
            }
            acc += s;
            e += q * dt;
            integral[base + k + 1] = acc;
            eta[base + k + 1] = e;
        }
    }
    Ok(IntegralProcess { steps: n, atoms: x.atoms, integral, eta })
}

/// `η^X` per atom (`[atom][k]`) and the triple-norm path.
pub fn eta_and_triple_norm(
    x: &GridProcess,
    space: &DiscreteMeasureSpace,
    gauge: &GrowthFunction,
    grid: &PathGrid,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.atoms != space.len() {
        return Err(Error::DimensionMismatch { expected: space.len(), got: x.atoms });
    }
    let n = x.steps;
    let dt = grid.dt();
    let mut eta = vec![0.0; x.atoms * (n + 1)];
    for i in 0..x.atoms {
        let mut e = 0.0;
        for k in 0..n {
            e += x.norm_sq(k, i) * dt;
            eta[i * (n + 1) + k + 1] = e;
        }
    }
    let triple = (0..=n)
        .map(|k| {
            let norms: Vec<f64> = (0..x.atoms).map(|i| eta[i * (n + 1) + k].sqrt()).collect();
            modular_of_norms(space.weights(), &norms, gauge)
        })
        .collect();
    Ok((eta, triple))
}

/// Config form of an elementary integrand: grid-aligned breakpoints
/// `0 = s_0 < s_1 < ...` and the rule giving each `ξ_i` from the history
/// up to `s_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementarySpec {
    pub breakpoints: Vec<f64>,
    pub rule: Rule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

/// `X_t = Σ_i ξ_i 1_{[s_i, s_{i+1})}(t)`, the last block running to the
/// horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementaryProcess {
    /// Grid indices of the breakpoints.
    breaks: Vec<usize>,
    /// `ξ_i` as `atoms × d` blocks.
    xi: Vec<Vec<f64>>,
    atoms: usize,
    d: usize,
    bound: f64,
}

pub fn make_elementary(
    spec: &ElementarySpec,
    bundle: &BrownianBundle,
    space: &DiscreteMeasureSpace,
) -> Result<ElementaryProcess> {
    let grid = bundle.grid();
    let mut breaks = Vec::with_capacity(spec.breakpoints.len());
    for &s in &spec.breakpoints {
        let k = grid.index_of(s).filter(|&k| k < grid.steps).ok_or(Error::MisalignedBreakpoint(s))?;
        if breaks.last().is_some_and(|&prev| prev >= k) {
            return Err(Error::MisalignedBreakpoint(s));
        }
        breaks.push(k);
    }
    if breaks.first() != Some(&0) {
        return Err(Error::MisalignedBreakpoint(spec.breakpoints.first().copied().unwrap_or(f64::NAN)));
    }
    let atoms = space.len();
    let d = bundle.dim();
    let bound = spec.bound.or(spec.rule.bound()).unwrap_or(f64::INFINITY);
    let mut xi = Vec::with_capacity(breaks.len());
    for &k in &breaks {
        // the rule only ever sees the bundle up to s_i
        let h = History::new(bundle, k);
        let mut block = vec![0.0; atoms * d];
        for (i, cell) in block.chunks_mut(d).enumerate() {
            spec.rule.value(i, atoms, &h, cell)?;
            let norm = cell.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > bound {
                return Err(Error::InvalidParameter {
                    name: "bound",
                    value: bound,
                    reason: "an elementary value exceeds its declared bound",
                });
            }
        }
        xi.push(block);
    }
    Ok(ElementaryProcess { breaks, xi, atoms, d, bound })
}

impl ElementaryProcess {
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn breakpoints(&self) -> &[usize] {
        &self.breaks
    }

    /// Cellwise form on the bundle's grid.
    pub fn to_grid(&self, steps: usize) -> GridProcess {
        let mut x = GridProcess::zeros(steps, self.atoms, self.d);
        for (b, &start) in self.breaks.iter().enumerate() {
            let end = self.breaks.get(b + 1).copied().unwrap_or(steps);
            for k in start..end {
                for i in 0..self.atoms {
                    x.cell_mut(k, i).copy_from_slice(&self.xi[b][i * self.d..(i + 1) * self.d]);
                }
            }
        }
        x
    }

    /// `Σ_i Σ_j ξ^{(j)}_i(x)(B^{(j)}_{t∧s_{i+1}} − B^{(j)}_{t∧s_i})` at every
    /// grid time, stored `[atom][k]`.
    pub fn integral_exact(&self, bundle: &BrownianBundle) -> Vec<f64> {
        let n = bundle.grid().steps;
        let mut out = vec![0.0; self.atoms * (n + 1)];
        for i in 0..self.atoms {
            for k in 0..=n {
                let mut total = 0.0;
                for (b, &s0) in self.breaks.iter().enumerate() {
                    let s1 = self.breaks.get(b + 1).copied().unwrap_or(n);
                    let (lo, hi) = (k.min(s0), k.min(s1));
                    for j in 0..self.d {
                        let path = bundle.coord(j);
                        total += self.xi[b][i * self.d + j] * (path[hi] - path[lo]);
                    }
                }
                out[i * (n + 1) + k] = total;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::{make_gauge, Family};
    use crate::paths::{hitting_time, simulate_bundle, StoppingTimeSpec};
    use crate::rng::Substreams;

    fn bundle(seed: u64, d: usize, steps: usize) -> BrownianBundle {
        simulate_bundle(&Substreams::new(seed), 0, d, PathGrid::new(1.0, steps).unwrap()).unwrap()
    }

    #[test]
    fn constant_integrand_reproduces_the_driver() {
        let b = bundle(3, 1, 64);
        let x = GridProcess::from_rule(Rule::ConstantE1, &b, 1).unwrap();
        let ip = ito_integral(&x, &b).unwrap();
        for k in 0..=64 {
            assert!((ip.integral(0)[k] - b.coord(0)[k]).abs() < 1e-12);
            assert!((ip.eta(0)[k] - b.grid().time(k)).abs() < 1e-12);
        }
    }

    #[test]
    fn future_reads_are_refused() {
        let b = bundle(1, 1, 8);
        let h = History::new(&b, 3);
        assert!(h.get(0, 3).is_ok());
        assert!(matches!(h.get(0, 4), Err(Error::FutureAccess { requested: 4, available: 3 })));
        assert!(matches!(h.get(1, 0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn mix_needs_two_coordinates() {
        let b = bundle(1, 1, 8);
        assert!(GridProcess::from_rule(Rule::TwoCoordMix, &b, 2).is_err());
    }

    #[test]
    fn rule_names_round_trip() {
        for r in Rule::ALL {
            assert_eq!(r.name().parse::<Rule>().unwrap(), r);
            let s = toml::to_string(&ProcessSpec::from(r)).unwrap();
            assert!(s.contains(r.name()), "{s}");
            assert_eq!(toml::from_str::<ProcessSpec>(&s).unwrap(), ProcessSpec::from(r));
        }
    }

    #[test]
    fn elementary_examples() {
        let b = bundle(9, 2, 8);
        let space = DiscreteMeasureSpace::unit_atom();
        let e = make_elementary(&ElementarySpec { breakpoints: vec![0.0], rule: Rule::ConstantE1, bound: None }, &b, &space)
            .unwrap();
        let x = e.to_grid(8);
        assert!((0..8).all(|k| x.cell(k, 0) == [1.0, 0.0]));
        let spec = ElementarySpec { breakpoints: vec![0.0, 0.25, 0.5], rule: Rule::SignOfB1, bound: None };
        let e = make_elementary(&spec, &b, &space).unwrap();
        assert_eq!(e.breakpoints(), &[0, 2, 4]);
        let exact = e.integral_exact(&b);
        let grid = ito_integral(&e.to_grid(8), &b).unwrap();
        for k in 0..=8 {
            assert!((exact[k] - grid.integral(0)[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn misaligned_breakpoint_is_rejected() {
        let b = simulate_bundle(&Substreams::new(1), 0, 1, PathGrid::new(1.0, 4).unwrap()).unwrap();
        let spec = ElementarySpec { breakpoints: vec![0.0, 0.3], rule: Rule::ConstantE1, bound: None };
        assert!(matches!(
            make_elementary(&spec, &b, &DiscreteMeasureSpace::unit_atom()),
            Err(Error::MisalignedBreakpoint(_))
        ));
    }

    #[test]
    fn declared_bound_is_enforced() {
        let b = bundle(5, 1, 16);
        let spec = ElementarySpec { breakpoints: vec![0.0, 0.5], rule: Rule::B1TimesE1, bound: Some(1e-9) };
        assert!(make_elementary(&spec, &b, &DiscreteMeasureSpace::unit_atom()).is_err());
    }

    #[test]
    fn coarsening_examples() {
        let g = PathGrid::new(1.0, 1024).unwrap();
        let ones = vec![1.0; 1024];
        for m in [2, 4, 8, 16] {
            let c = coarsen_jm(&ones, 1, m, &g).unwrap();
            let err = l2_distance_sq(&c, &ones, g.dt()).sqrt();
            assert!((err - (1.0 / m as f64).sqrt()).abs() < 1e-14);
        }
        let ramp: Vec<f64> = (0..1024).map(|k| g.time(k)).collect();
        let c = coarsen_jm(&ramp, 1, 4, &g).unwrap();
        // left-Riemann block means of t: exact value minus half a step
        let half = 0.5 * g.dt();
        for (start, v) in [(0, 0.0), (256, 0.125 - half), (512, 0.375 - half), (768, 0.625 - half)] {
            assert!((c[start] - v).abs() < 1e-12, "{start}: {}", c[start]);
        }
        assert!(matches!(coarsen_jm(&ones, 1, 3, &g), Err(Error::IncompatibleCoarsening { .. })));
    }

    #[test]
    fn coarsening_l2_error_of_ramp_matches_piecewise_oracle() {
        // exact averages on a fine grid approach the piecewise-integration oracle
        let g = PathGrid::new(1.0, 1 << 14).unwrap();
        let ramp: Vec<f64> = (0..g.steps).map(|k| g.time(k) + 0.5 * g.dt()).collect();
        let c = coarsen_jm(&ramp, 1, 4, &g).unwrap();
        let err = l2_distance_sq(&c, &ramp, g.dt());
        // ∫_0^{1/4} t² + 3 ∫ over a block of (t − c + 1/4)², c the block centre
        let oracle = (0.25f64).powi(3) / 3.0 + 3.0 * (0.25 * 0.25 * 0.25 + 0.25f64.powi(3) / 12.0);
        assert!((err - oracle).abs() < 1e-6, "{err} vs {oracle}");
    }

    #[test]
    fn coarsening_dominates_every_prefix() {
        let b = bundle(13, 2, 256);
        for rule in Rule::ALL {
            let x = GridProcess::from_rule(rule, &b, 3).unwrap();
            let c = x.coarsened(8, &b.grid()).unwrap();
            for i in 0..3 {
                let (mut a, mut e) = (0.0, 0.0);
                for k in 0..256 {
                    a += x.norm_sq(k, i);
                    e += c.norm_sq(k, i);
                    assert!(e <= a * (1.0 + 1e-12), "{rule} atom {i} k {k}");
                }
            }
        }
    }

    #[test]
    fn truncation_examples() {
        let b = bundle(2, 1, 128);
        let x = GridProcess::from_rule(Rule::B1TimesE1, &b, 2).unwrap();
        let bound = (0..128).map(|k| x.norm_sq(k, 0).sqrt()).fold(0.0, f64::max);
        let n = bound.ceil() as u32 + 1;
        assert_eq!(truncate_process(&x, n, &[true, true]), x);
        let big = x.scaled(100.0);
        let t = truncate_process(&big, 3, &[true, true]);
        for k in 0..128 {
            let s = big.norm_sq(k, 0).sqrt();
            assert!(t.norm_sq(k, 0).sqrt() <= 3.0 + 1e-12);
            if s > 3.0 {
                assert_eq!(t.cell(k, 0), &[0.0]);
            }
        }
        let outside = truncate_process(&x, n, &nested_prefix(2, 1));
        assert!((0..128).all(|k| outside.cell(k, 1) == [0.0]));
    }

    #[test]
    fn truncation_error_vanishes_once_n_exceeds_the_bound() {
        let b = bundle(4, 1, 64);
        let space = DiscreteMeasureSpace::unit_atom();
        let g = make_gauge(Family::Power, &[2.0]).unwrap();
        let x = GridProcess::from_rule(Rule::B1TimesE1, &b, 1).unwrap().scaled(3.0);
        let errs: Vec<f64> = (1..=20)
            .map(|n| {
                let d = GridProcess::combine(1.0, &truncate_process(&x, n, &[true]), -1.0, &x).unwrap();
                eta_and_triple_norm(&d, &space, &g, &b.grid()).unwrap().1[64]
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert_eq!(*errs.last().unwrap(), 0.0);
    }

    #[test]
    fn triple_norm_examples() {
        let b = bundle(6, 1, 16);
        let x = GridProcess::from_rule(Rule::ConstantE1, &b, 1).unwrap();
        let g = make_gauge(Family::Power, &[2.0]).unwrap();
        let (eta, triple) = eta_and_triple_norm(&x, &DiscreteMeasureSpace::unit_atom(), &g, &b.grid()).unwrap();
        for k in 0..=16 {
            assert!((eta[k] - b.grid().time(k)).abs() < 1e-14);
            assert!((triple[k] - b.grid().time(k)).abs() < 1e-14);
        }
        // two atoms, magnitudes 1 and 1/2 on Λ^1, weights 1 and 2, t = 1/2:
        // Λ(√(1/2)) = √(1/2); Λ(√(1/8)) = √(1/8) / ln √8
        let lam = make_gauge(Family::LambdaAlpha, &[1.0]).unwrap();
        let space = DiscreteMeasureSpace::new(vec![1.0, 2.0]).unwrap();
        let mut x = GridProcess::zeros(16, 2, 1);
        for k in 0..16 {
            x.cell_mut(k, 0)[0] = 1.0;
            x.cell_mut(k, 1)[0] = -0.5;
        }
        let (_, triple) = eta_and_triple_norm(&x, &space, &lam, &b.grid()).unwrap();
        let oracle = 0.5f64.sqrt() + 2.0 * (0.125f64.sqrt() / 8f64.sqrt().ln());
        assert!((triple[8] - oracle).abs() < 1e-14);
        assert!(triple.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn linearity_and_zero_integrand() {
        let b = bundle(8, 2, 64);
        let x = GridProcess::from_rule(Rule::TwoCoordMix, &b, 3).unwrap();
        let y = GridProcess::from_rule(Rule::B1TimesE1, &b, 3).unwrap();
        let z = GridProcess::combine(2.0, &x, -0.5, &y).unwrap();
        let (ix, iy, iz) = (ito_integral(&x, &b).unwrap(), ito_integral(&y, &b).unwrap(), ito_integral(&z, &b).unwrap());
        for i in 0..3 {
            for k in 0..=64 {
                let lin = 2.0 * ix.integral(i)[k] - 0.5 * iy.integral(i)[k];
                assert!((iz.integral(i)[k] - lin).abs() < 1e-12);
            }
        }
        let zero = ito_integral(&GridProcess::zeros(64, 3, 2), &b).unwrap();
        assert!((0..3).all(|i| zero.integral(i).iter().chain(zero.eta(i)).all(|v| *v == 0.0)));
    }

    #[test]
    fn stopped_process_identities() {
        let b = bundle(21, 2, 128);
        let x = GridProcess::from_rule(Rule::TwoCoordMix, &b, 2).unwrap();
        let full = ito_integral(&x, &b).unwrap();
        let sigma = hitting_time(b.coord(0), &StoppingTimeSpec::first_exit(0.3), &b.grid());
        let late = ito_integral(&x.started_at(sigma), &b).unwrap();
        for tau in sigma..=128 {
            for i in 0..2 {
                let di = full.integral(i)[tau] - full.integral(i)[sigma];
                let de = full.eta(i)[tau] - full.eta(i)[sigma];
                assert!((late.integral(i)[tau] - di).abs() < 1e-12);
                assert!((late.eta(i)[tau] - de).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn norm_threshold_stop_sits_just_above_r() {
        let g = make_gauge(Family::Power, &[2.0]).unwrap();
        let space = DiscreteMeasureSpace::new(vec![1.0, 0.5]).unwrap();
        for seed in 0..50 {
            let b = bundle(seed, 1, 128);
            let x = GridProcess::from_rule(Rule::B1TimesE1, &b, 2).unwrap();
            let (_, triple) = eta_and_triple_norm(&x, &space, &g, &b.grid()).unwrap();
            let r = 0.05;
            let k = hitting_time(&triple, &StoppingTimeSpec::norm_threshold(r), &b.grid());
            if k > 0 {
                assert!(triple[k - 1] <= r);
            }
        }
    }
}
