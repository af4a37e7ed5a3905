//! Orlicz spaces, stochastic integrals against truncated cylindrical
//! Brownian motion, and Monte Carlo checks of Burkholder-Davis-Gundy type
//! inequalities in those spaces.
//!
//! The crate is organized bottom-up:
//!
//! * [`gauge`], [`transforms`], [`classify`]: growth functions, the
//!   dilation transform and its inverses, complementary N-functions, and
//!   empirical class membership.
//! * [`space`], [`relations`]: finite atomic measure spaces, the modular
//!   and Luxemburg norm, and sampled checks of the norm relations.
//! * [`paths`], [`rng`]: Brownian bundles on uniform grids, path
//!   functionals and grid stopping times.
//! * [`integrator`]: adapted integrands, block coarsening, truncation and
//!   the grid Itô integral.
//! * [`lab`]: paired Monte Carlo estimates of both sides of each
//!   inequality, with verdicts.
//! * [`runner`]: experiment configs, report emission and the full
//!   verification preset used by the command line tool.
//!
//! Monte Carlo loops run on rayon when the `parallel` feature is enabled
//! (the default) and sequentially otherwise; see [`exec`].

pub mod classify;
pub mod error;
pub mod exec;
pub mod gauge;
pub mod integrator;
pub mod lab;
pub mod numerics;
pub mod paths;
pub mod relations;
pub mod rng;
pub mod runner;
pub mod space;
pub mod stats;
pub mod transforms;

pub use lab::{derive_moment_constant, Check, QuasiMetric, RatioReport};
pub use classify::{classify_gauge, GaugeClassReport, ProbeConfig};
pub use runner::{ExperimentConfig, RunConfig};
pub use error::{Error, Result};
pub use gauge::{make_gauge, Family, GaugeSpec, GrowthFunction};
pub use integrator::{ElementaryProcess, IntegralProcess, ProcessSpec};
pub use paths::{BrownianBundle, PathGrid, StoppingTimeSpec};
pub use space::{DiscreteMeasureSpace, OrliczVector};
pub use stats::McEstimate;
pub use transforms::{complementary_gauge, inverse_transforms, phi_of};
