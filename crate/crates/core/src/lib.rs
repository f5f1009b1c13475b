//! Numerical laboratory for the dynamic programming equations of
//! tug-of-war type stochastic games.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: lattice domains, boundary strips, value fields and the
//!   exact ball/disk moment identities.
//! * [`quadrature`]: Gauss–Legendre nodes, direction sets, ball and disk rules.
//! * [`operators`]: the four one-step game operators and their grid application.
//! * [`solver`]: Picard iteration `u = T u` with Dirichlet strip data.
//! * [`comparison`]: the comparison function `f = f1 - f2` on `R^n x R^n`,
//!   its Taylor expansion and error bounds.
//! * [`couplings`]: mirror, rotation and clamp maps.
//! * [`certifier`]: signed margins of the four contradiction inequalities and
//!   region sweeps.
//! * [`simulate`]: Monte Carlo play of the games and coupled two-token steps.
//! * [`regularity`]: Hölder statistics of solved fields.

pub mod certifier;
pub mod comparison;
pub mod couplings;
pub mod geometry;
pub mod operators;
pub mod quadrature;
pub mod regularity;
pub mod rng;
pub mod simulate;
pub mod solver;
pub mod stats;

mod linalg;

pub use certifier::{certify_region, CertificateReport, CertifierSettings, Inequality};
pub use comparison::{ComparisonParams, CoupledPoint, ParamMode};
pub use couplings::CouplingMap;
pub use geometry::{build_grid_domain, GridDomain, Shape, ValueField};
pub use operators::{apply_operator, Alpha, GameKind, GameSpec};
pub use solver::{solve_dpp, SolveDiagnostics, SolveSettings};
pub use regularity::{estimate_exponent, holder_report, HolderReport};
pub use simulate::{coupled_drift, coupled_step, estimate_value, run_episode, Arena, Strategy};
