//! Geometric quantiles and halfspace (Tukey) depth for multivariate samples,
//! with diagnostics for their behaviour in the tails.
//!
//! The crate is organised bottom-up:
//!
//! * [`geom`], [`rng`], [`exec`]: vectors and datasets, seeded streams,
//!   sequential/parallel execution.
//! * [`samplers`]: Gaussian, Pareto and spherical-exponential families.
//! * [`quantile`]: the sample geometric quantile solver.
//! * [`depth`]: exact bivariate and approximate halfspace depth, and
//!   population depth for product and Gaussian laws.
//! * [`asymptotics`]: schedules, diagnostic curves and the tail classifier.
//! * [`oracle`]: brute-force references, independent of the fast paths.
//! * [`io`]: CSV and SVG emission.

pub mod asymptotics;
pub mod depth;
pub mod error;
pub mod exec;
pub mod geom;
pub mod io;
pub mod oracle;
pub mod quantile;
pub mod rng;
pub mod samplers;

pub use error::{Error, Result};
pub use exec::Exec;
pub use geom::{Dataset, Moments, UnitDirection, Vector};
pub use rng::RngSpec;
pub use samplers::DistributionSpec;
