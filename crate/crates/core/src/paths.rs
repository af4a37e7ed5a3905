//! Truncated cylindrical Brownian motion on uniform grids, path functionals
//! and grid stopping times.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Substreams;

/// Uniform grid `t_k = k T / n`, `k = 0..=n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathGrid {
    pub horizon: f64,
    pub steps: usize,
}

impl PathGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::EmptyGrid);
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::NonPositiveArgument(horizon));
        }
        Ok(PathGrid { horizon, steps })
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid index of time `t`, if `t` is a grid point (to `1e-9` steps).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = t / self.dt();
        let k = x.round();
        ((x - k).abs() <= 1e-9 && k >= 0.0 && k <= self.steps as f64).then_some(k as usize)
    }
}

/// `d` independent Brownian coordinates sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BrownianBundle {
    grid: PathGrid,
    d: usize,
    /// Row-major `d × (n + 1)`.
    samples: Vec<f64>,
    replicate: u64,
}

/// Simulates replicate `replicate` of a `d`-coordinate bundle. Coordinate
/// `j` draws its increments from substream `(replicate, j)`.
pub fn simulate_bundle(streams: &Substreams, replicate: u64, d: usize, grid: PathGrid) -> Result<BrownianBundle> {
    if d == 0 {
        return Err(Error::DimensionMismatch { expected: 1, got: 0 });
    }
    if grid.steps == 0 {
        return Err(Error::EmptyGrid);
    }
    let n = grid.steps;
    let sd = grid.dt().sqrt();
    let mut samples = vec![0.0; d * (n + 1)];
    for (j, row) in samples.chunks_mut(n + 1).enumerate() {
        let mut rng = streams.stream(replicate, j as u32);
        let mut acc = 0.0;
        for slot in row.iter_mut().skip(1) {
            let z: f64 = rng.sample(StandardNormal);
            acc += sd * z;
            *slot = acc;
        }
    }
    Ok(BrownianBundle { grid, d, samples, replicate })
}

impl BrownianBundle {
    pub fn grid(&self) -> PathGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn replicate(&self) -> u64 {
        self.replicate
    }

    /// Path of coordinate `j` (zero-based), length `n + 1`.
    pub fn coord(&self, j: usize) -> &[f64] {
        let n1 = self.grid.steps + 1;
        &self.samples[j * n1..(j + 1) * n1]
    }

    /// Increment `B^{(j)}_{t_{k+1}} - B^{(j)}_{t_k}`.
    pub fn increment(&self, j: usize, k: usize) -> f64 {
        let c = self.coord(j);
        c[k + 1] - c[k]
    }

    /// Same driver sampled every `factor` steps.
    pub fn coarsen(&self, factor: usize) -> Result<BrownianBundle> {
        if factor == 0 || self.grid.steps % factor != 0 {
            return Err(Error::IncompatibleCoarsening {
                m: factor,
                steps: self.grid.steps,
                horizon: self.grid.horizon,
            });
        }
        let grid = PathGrid::new(self.grid.horizon, self.grid.steps / factor)?;
        let samples = (0..self.d)
            .flat_map(|j| self.coord(j).iter().step_by(factor).copied().collect::<Vec<_>>())
            .collect();
        Ok(BrownianBundle { grid, d: self.d, samples, replicate: self.replicate })
    }

    pub fn scaled(&self, c: f64) -> BrownianBundle {
        BrownianBundle {
            grid: self.grid,
            d: self.d,
            samples: self.samples.iter().map(|v| c * v).collect(),
            replicate: self.replicate,
        }
    }
}

/// CSV dump `replicate,coordinate,k,value` of several bundles.
pub fn write_bundles_csv<W: Write>(writer: W, bundles: &[BrownianBundle]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["replicate", "coordinate", "k", "value"])?;
    for b in bundles {
        for j in 0..b.dim() {
            for (k, v) in b.coord(j).iter().enumerate() {
                w.write_record([b.replicate.to_string(), j.to_string(), k.to_string(), format!("{v:e}")])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Running supremum of `|path|` and cumulative squared increments.
pub fn path_functionals(path: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut sup = Vec::with_capacity(path.len());
    let mut qv = Vec::with_capacity(path.len());
    let (mut s, mut q) = (0.0f64, 0.0f64);
    for (k, &x) in path.iter().enumerate() {
        if k > 0 {
            let dx = x - path[k - 1];
            q += dx * dx;
        }
        s = s.max(x.abs());
        sup.push(s);
        qv.push(q);
    }
    (sup, qv)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `process >= level`
    Weak,
    /// `process > level`
    Strict,
}

/// Kinds of grid stopping times used across the suite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StoppingTimeSpec {
    /// The deterministic time `t` (must be a grid point).
    Deterministic { t: f64 },
    /// First time a process reaches `level`.
    FirstHitSup { level: f64, mode: Comparison },
    /// First time an increasing process exceeds `level`.
    FirstExceed { level: f64, mode: Comparison },
    /// First time the triple norm exceeds `level`.
    NormThreshold { level: f64, mode: Comparison },
    /// First time `|process|` reaches `level`, capped at the horizon.
    FirstExit { level: f64, mode: Comparison },
}

impl StoppingTimeSpec {
    pub fn first_hit(level: f64) -> Self {
        StoppingTimeSpec::FirstHitSup { level, mode: Comparison::Weak }
    }

    pub fn first_exceed(level: f64) -> Self {
        StoppingTimeSpec::FirstExceed { level, mode: Comparison::Strict }
    }

    pub fn norm_threshold(level: f64) -> Self {
        StoppingTimeSpec::NormThreshold { level, mode: Comparison::Strict }
    }

    pub fn first_exit(level: f64) -> Self {
        StoppingTimeSpec::FirstExit { level, mode: Comparison::Weak }
    }

    pub fn validate(&self, grid: &PathGrid) -> Result<()> {
        match *self {
            StoppingTimeSpec::Deterministic { t } => grid
                .index_of(t)
                .map(|_| ())
                .ok_or(Error::MisalignedBreakpoint(t)),
            StoppingTimeSpec::FirstHitSup { level, .. }
            | StoppingTimeSpec::FirstExceed { level, .. }
            | StoppingTimeSpec::NormThreshold { level, .. }
            | StoppingTimeSpec::FirstExit { level, .. } => {
                if level >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter {
                        name: "level",
                        value: level,
                        reason: "stopping levels must be nonnegative",
                    })
                }
            }
        }
    }

    /// Whether the stopping time reads a process at all.
    pub fn is_deterministic(&self) -> bool {
        matches!(self, StoppingTimeSpec::Deterministic { .. })
    }
}

/// Grid index of the stopping time: the first `k` at which the condition
/// holds, or `n` when it never does on `[0, T]`. Deterministic times ignore
/// `process`.
pub fn hitting_time(process: &[f64], spec: &StoppingTimeSpec, grid: &PathGrid) -> usize {
    let n = grid.steps;
    let (level, mode, absolute) = match *spec {
        StoppingTimeSpec::Deterministic { t } => {
            return grid.index_of(t).unwrap_or_else(|| ((t / grid.dt()).floor() as usize).min(n));
        }
        StoppingTimeSpec::FirstHitSup { level, mode }
        | StoppingTimeSpec::FirstExceed { level, mode }
        | StoppingTimeSpec::NormThreshold { level, mode } => (level, mode, false),
        StoppingTimeSpec::FirstExit { level, mode } => (level, mode, true),
    };
    debug_assert!(process.len() > n);
    process
        .iter()
        .take(n + 1)
        .position(|&x| {
            let x = if absolute { x.abs() } else { x };
            match mode {
                Comparison::Weak => x >= level,
                Comparison::Strict => x > level,
            }
        })
        .unwrap_or(n)
}
