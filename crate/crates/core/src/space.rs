//! Finite atomic measure spaces and vector-valued functions on them.

use std::io::{Read, Write};
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::GrowthFunction;

/// Config form of a space: `{weights = [w1, ..., wn]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub weights: Vec<f64>,
}

/// Atoms `0..n` with strictly positive weights.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasureSpace {
    weights: Vec<f64>,
}

impl DiscreteMeasureSpace {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSpace("no atoms".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidSpace(format!("weight {w} is not strictly positive")));
        }
        Ok(DiscreteMeasureSpace { weights })
    }

    pub fn from_spec(spec: &SpaceSpec) -> Result<Self> {
        Self::new(spec.weights.clone())
    }

    pub fn spec(&self) -> SpaceSpec {
        SpaceSpec { weights: self.weights.clone() }
    }

    /// A single atom of unit mass.
    pub fn unit_atom() -> Self {
        DiscreteMeasureSpace { weights: vec![1.0] }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// `[f]_Λ = Σ_i μ_i Λ(n_i)` given the per-atom norms `n_i`.
pub fn modular_of_norms(weights: &[f64], norms: &[f64], gauge: &GrowthFunction) -> f64 {
    debug_assert_eq!(weights.len(), norms.len());
    weights
        .iter()
        .zip(norms)
        .map(|(w, &n)| if n == 0.0 { 0.0 } else { w * gauge.eval(n) })
        .sum()
}

/// `inf{λ > 0 : [f/λ]_Λ <= 1}` from per-atom norms, by bisection on the
/// nonincreasing map `λ ↦ [f/λ]_Λ`. Stops once the residual
/// `|[f/λ]_Λ - 1| <= tol` or the bracket collapses, in which case the upper
/// end (where the modular is at most one) is returned.
pub fn luxemburg_of_norms(
    weights: &[f64],
    norms: &[f64],
    gauge: &GrowthFunction,
    tol: f64,
) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::NonPositiveArgument(tol));
    }
    let top = norms.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(0.0);
    }
    let scaled = |lam: f64| -> f64 {
        weights
            .iter()
            .zip(norms)
            .map(|(w, &n)| if n == 0.0 { 0.0 } else { w * gauge.eval(n / lam) })
            .sum()
    };
    let mut hi = top;
    let mut guard = 0;
    while scaled(hi) > 1.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 2000 || !hi.is_finite() {
            return Err(Error::BracketExhausted("modular stays above one".into()));
        }
    }
    let mut lo = hi;
    guard = 0;
    while scaled(lo) <= 1.0 {
        lo /= 2.0;
        guard += 1;
        if guard > 2000 || lo == 0.0 {
            return Err(Error::BracketExhausted(
                "modular never exceeds one; gauge bounded above".into(),
            ));
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let m = scaled(mid);
        if (m - 1.0).abs() <= tol && m <= 1.0 {
            return Ok(mid);
        }
        if m > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// A function on the atoms of a space with values in `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrliczVector {
    space: Arc<DiscreteMeasureSpace>,
    d: usize,
    /// Row-major `atoms × d`.
    values: Vec<f64>,
}

impl OrliczVector {
    pub fn new(space: Arc<DiscreteMeasureSpace>, d: usize, values: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if values.len() != space.len() * d {
            return Err(Error::DimensionMismatch {
                expected: space.len() * d,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpace("non-finite value".into()));
        }
        Ok(OrliczVector { space, d, values })
    }

    pub fn zeros(space: Arc<DiscreteMeasureSpace>, d: usize) -> Self {
        let n = space.len() * d;
        OrliczVector { space, d, values: vec![0.0; n] }
    }

    /// Coordinates i.i.d. standard normal, multiplied by one magnitude
    /// `10^u`, `u ~ U(-3, 3)`.
    pub fn random<R: Rng + ?Sized>(space: Arc<DiscreteMeasureSpace>, d: usize, rng: &mut R) -> Self {
        let mag = 10f64.powf(rng.random_range(-3.0..3.0));
        let values = (0..space.len() * d)
            .map(|_| mag * rng.sample::<f64, _>(StandardNormal))
            .collect();
        OrliczVector { space, d, values }
    }

    pub fn space(&self) -> &Arc<DiscreteMeasureSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    /// Euclidean norm of each atom's value.
    pub fn norms(&self) -> Vec<f64> {
        self.values
            .chunks(self.d)
            .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        OrliczVector {
            space: Arc::clone(&self.space),
            d: self.d,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.d != other.d || self.values.len() != other.values.len() {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                got: other.values.len(),
            });
        }
        Ok(OrliczVector {
            space: Arc::clone(&self.space),
            d: self.d,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    /// CSV rows `atom_id,coord_index,value`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["atom_id", "coord_index", "value"])?;
        for (i, chunk) in self.values.chunks(self.d).enumerate() {
            for (j, v) in chunk.iter().enumerate() {
                w.write_record([i.to_string(), j.to_string(), format!("{v:e}")])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(space: Arc<DiscreteMeasureSpace>, reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut entries = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parse = |k: usize| -> Result<&str> {
                rec.get(k).ok_or_else(|| Error::InvalidSpace("short CSV row".into()))
            };
            let atom: usize = parse(0)?.parse().map_err(|_| Error::InvalidSpace("bad atom_id".into()))?;
            let coord: usize = parse(1)?.parse().map_err(|_| Error::InvalidSpace("bad coord_index".into()))?;
            let value: f64 = parse(2)?.parse().map_err(|_| Error::InvalidSpace("bad value".into()))?;
            entries.push((atom, coord, value));
        }
        let d = entries.iter().map(|e| e.1 + 1).max().unwrap_or(0);
        let mut values = vec![0.0; space.len() * d];
        for (atom, coord, value) in entries {
            if atom >= space.len() {
                return Err(Error::DimensionMismatch { expected: space.len(), got: atom + 1 });
            }
            values[atom * d + coord] = value;
        }
        OrliczVector::new(space, d, values)
    }
}

/// `[f]_Λ = ∫ Λ(‖f(x)‖) μ(dx)`.
pub fn modular(f: &OrliczVector, gauge: &GrowthFunction) -> f64 {
    modular_of_norms(f.space.weights(), &f.norms(), gauge)
}

/// Luxemburg norm `‖f‖_Λ`.
pub fn luxemburg_norm(f: &OrliczVector, gauge: &GrowthFunction, tol: f64) -> Result<f64> {
    luxemburg_of_norms(f.space.weights(), &f.norms(), gauge, tol)
}
