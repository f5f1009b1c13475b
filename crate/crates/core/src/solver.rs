//! Picard iteration `u_{k+1} = T u_k` with frozen strip data.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, GridDomain, ValueField};
use crate::operators::{GameSpec, GridOperator, OperatorError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("max_iter must be at least 1")]
    InvalidMaxIter,
    #[error("boundary or initial field lives on a different domain")]
    DomainMismatch,
    #[error("iteration {iteration} produced non-finite value {value} at {point:?}")]
    NonFinite {
        iteration: usize,
        point: Vec<f64>,
        value: f64,
    },
}

/// Stopping parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSettings {
    /// Residual tolerance; `None` means `1e-8 * osc(strip data)`.
    pub tol: Option<f64>,
    pub max_iter: usize,
    /// Also require the geometric error estimate `r rho / (1 - rho)` to be
    /// below `tol`, where `rho` is the largest of the last few residual
    /// ratios. Residual alone stops far from the fixed point when the
    /// contraction factor is close to one.
    pub error_control: bool,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            tol: None,
            max_iter: 100_000,
            error_control: true,
        }
    }
}

impl SolveSettings {
    pub fn with_tol(tol: f64) -> Self {
        SolveSettings {
            tol: Some(tol),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    pub final_residual: f64,
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub tol: f64,
    /// Largest recent ratio of successive residuals.
    pub contraction_estimate: Option<f64>,
    /// `r rho / (1 - rho)` when `rho < 1`.
    pub error_estimate: Option<f64>,
}

const RATIO_WINDOW: usize = 5;

fn contraction(history: &[f64]) -> Option<f64> {
    if history.len() < 2 {
        return None;
    }
    let start = history.len().saturating_sub(RATIO_WINDOW + 1);
    history[start..]
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .reduce(f64::max)
}

/// Solves `u = T u` on the domain's interior with the strip values of
/// `boundary` as Dirichlet data.
///
/// The default initial field is the strip mean on the interior. Iteration `k`
/// computes `u_{k+1}` and records `r_k = sup |u_{k+1} - u_k|`.
pub fn solve_dpp(
    domain: &Arc<GridDomain>,
    boundary: &ValueField,
    spec: &GameSpec,
    settings: &SolveSettings,
    init: Option<&ValueField>,
) -> Result<(ValueField, SolveDiagnostics), SolveError> {
    if !Arc::ptr_eq(boundary.domain(), domain) {
        return Err(SolveError::DomainMismatch);
    }
    if settings.max_iter == 0 {
        return Err(SolveError::InvalidMaxIter);
    }
    let (lo, hi) = boundary.strip_range();
    let tol = match settings.tol {
        Some(t) => t,
        None if hi > lo => 1e-8 * (hi - lo),
        None => 1e-12 * lo.abs().max(1.0),
    };
    if !(tol.is_finite() && tol > 0.0) {
        return Err(SolveError::InvalidTolerance(tol));
    }
    let op = GridOperator::new(domain.clone(), spec)?;

    let mut current = match init {
        Some(f) => {
            if !Arc::ptr_eq(f.domain(), domain) {
                return Err(SolveError::DomainMismatch);
            }
            let mut v = f.values().to_vec();
            for &id in domain.strip_ids() {
                v[id] = boundary.get(id);
            }
            v
        }
        None => {
            let mean = boundary.strip_mean();
            let mut v = boundary.values().to_vec();
            for &id in domain.interior_ids() {
                v[id] = mean;
            }
            v
        }
    };

    let ids = domain.interior_ids();
    let mut history = Vec::new();
    let mut converged = false;
    for iteration in 1..=settings.max_iter {
        let next = op.interior_values(&current);
        let mut r = 0.0f64;
        for (k, (&id, &v)) in ids.iter().zip(&next).enumerate() {
            if !v.is_finite() {
                return Err(SolveError::NonFinite {
                    iteration,
                    point: domain.point(ids[k]).to_vec(),
                    value: v,
                });
            }
            r = r.max((v - current[id]).abs());
            current[id] = v;
        }
        history.push(r);
        if r <= tol {
            let done = if r == 0.0 || !settings.error_control {
                true
            } else {
                matches!(contraction(&history), Some(rho) if rho < 1.0 && r * rho / (1.0 - rho) <= tol)
            };
            if done {
                converged = true;
                break;
            }
        }
    }

    let rho = contraction(&history);
    let final_residual = *history.last().unwrap_or(&0.0);
    let error_estimate = match rho {
        _ if final_residual == 0.0 => Some(0.0),
        Some(rho) if rho < 1.0 => Some(final_residual * rho / (1.0 - rho)),
        _ => None,
    };
    let diagnostics = SolveDiagnostics {
        iterations: history.len(),
        final_residual,
        residual_history: history,
        converged,
        tol,
        contraction_estimate: rho,
        error_estimate,
    };
    Ok((ValueField::new(domain.clone(), current)?, diagnostics))
}

/// Convenience wrapper: strip data from `boundary`, default initial field.
pub fn solve_with_boundary(
    domain: &Arc<GridDomain>,
    boundary: impl Fn(&[f64]) -> f64,
    spec: &GameSpec,
    settings: &SolveSettings,
) -> Result<(ValueField, SolveDiagnostics), SolveError> {
    let data = ValueField::with_strip_data(domain.clone(), boundary, 0.0)?;
    solve_dpp(domain, &data, spec, settings, None)
}

/// `sup` over the interior of `|T u - u|`.
pub fn residual(field: &ValueField, spec: &GameSpec) -> Result<f64, OperatorError> {
    let op = GridOperator::new(field.domain().clone(), spec)?;
    let next = op.interior_values(field.values());
    Ok(field
        .domain()
        .interior_ids()
        .iter()
        .zip(next)
        .map(|(&id, v)| (v - field.get(id)).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid_domain, Shape};

    #[test]
    fn constant_boundary_converges_in_one_iteration() {
        let d = Arc::new(build_grid_domain(Shape::unit_ball(2), 0.05, 0.15).unwrap());
        let (u, diag) = solve_with_boundary(&d, |_| 2.5, &GameSpec::random_walk(0.15), &SolveSettings::default()).unwrap();
        assert_eq!(diag.iterations, 1);
        assert!(diag.converged);
        assert!(u.values().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn contraction_uses_recent_ratios() {
        assert_eq!(contraction(&[1.0]), None);
        assert_eq!(contraction(&[1.0, 0.5, 0.4]), Some(0.8));
    }
}
