//! One-step dynamic programming operators of the four games.
//!
//! * tug-of-war: `(sup u + inf u) / 2` over the closed `epsilon`-ball,
//! * random walk: mean of `u` over the ball,
//! * space-dependent tug-of-war with noise:
//!   `alpha(x)/2 (sup + inf) + beta(x) mean`,
//! * tug-of-war with directional noise: the controlling player picks a step
//!   `nu`; with probability `alpha` the token jumps to `x + nu`, otherwise it
//!   lands uniformly on the `(n-1)`-disk through `x` orthogonal to `nu`.
//!
//! Pointwise versions take an [`Evaluator`] so they can be checked against
//! closed-form functions with known extrema. [`GridOperator`] is the
//! precomputed lattice version used by the solver.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GridDomain, ValueField, BALL_TOL};
use crate::linalg;
use crate::quadrature::{direction_set, BallRule, DiskRule};

/// Tolerance to which the symmetric rules reproduce affine data, relative
/// to `1 + |a| eps`.
pub const QUADRATURE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("alpha must lie in [0, 1], got {value} at {point:?}")]
    AlphaOutOfRange { point: Vec<f64>, value: f64 },
    #[error("probe set is empty")]
    EmptyProbe,
    #[error("probe offset {offset:?} leaves the closed ball of radius {epsilon}")]
    ProbeOutsideBall { offset: Vec<f64>, epsilon: f64 },
    #[error("evaluator is undefined at {0:?}")]
    Undefined(Vec<f64>),
    #[error("strip of width {width} cannot support this operator; width {needed} is required")]
    StripTooNarrow { width: f64, needed: f64 },
    #[error("operator expects a {expected:?} game, got {got:?}")]
    WrongKind { expected: GameKind, got: GameKind },
    #[error("p must be at least 2, got {0}")]
    PBelowTwo(f64),
    #[error("quadrature setting invalid: {0}")]
    BadQuadrature(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameKind {
    TugOfWar,
    RandomWalk,
    SpaceDependent,
    DirectionalNoise,
}

impl GameKind {
    pub fn name(self) -> &'static str {
        match self {
            GameKind::TugOfWar => "tug-of-war",
            GameKind::RandomWalk => "random-walk",
            GameKind::SpaceDependent => "space-dependent",
            GameKind::DirectionalNoise => "directional-noise",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "tug-of-war" | "tugofwar" => Some(GameKind::TugOfWar),
            "random-walk" | "randomwalk" => Some(GameKind::RandomWalk),
            "space-dependent" | "spacedependent" => Some(GameKind::SpaceDependent),
            "directional-noise" | "directionalnoise" | "directional" => Some(GameKind::DirectionalNoise),
            _ => None,
        }
    }
}

impl fmt::Display for GameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

type AlphaFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Probability of the tug-of-war branch, constant or varying in space.
#[derive(Clone)]
pub enum Alpha {
    Constant(f64),
    Function { label: String, f: AlphaFn },
}

impl Alpha {
    pub fn function(label: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Alpha::Function {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn at(&self, x: &[f64]) -> f64 {
        match self {
            Alpha::Constant(a) => *a,
            Alpha::Function { f, .. } => f(x),
        }
    }

    /// `alpha(x)`, checked to lie in `[0, 1]`.
    pub fn checked(&self, x: &[f64]) -> Result<f64, OperatorError> {
        let a = self.at(x);
        if (0.0..=1.0).contains(&a) {
            Ok(a)
        } else {
            Err(OperatorError::AlphaOutOfRange {
                point: x.to_vec(),
                value: a,
            })
        }
    }
}

impl fmt::Debug for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Constant(a) => write!(f, "{a}"),
            Alpha::Function { label, .. } => f.write_str(label),
        }
    }
}

/// Discretisation of the directional game's step set and noise disks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalQuadrature {
    /// Number of unit directions.
    pub directions: usize,
    /// Step lengths as fractions of epsilon; must include 1.
    pub radius_fractions: Vec<f64>,
    /// Gauss–Legendre nodes along the disk radius (the whole segment for n = 2).
    pub disk_radial: usize,
    /// Angular nodes of the disk rule (used for n = 3).
    pub disk_angular: usize,
}

impl DirectionalQuadrature {
    pub fn default_for(n: usize) -> Self {
        DirectionalQuadrature {
            directions: match n {
                2 => 64,
                3 => 128,
                _ => 2 * n + (1 << n.min(10)),
            },
            radius_fractions: vec![1.0, 0.5, 0.25, 1.0 / 16.0],
            disk_radial: 9,
            disk_angular: 16,
        }
    }

    fn validate(&self) -> Result<(), OperatorError> {
        if self.directions < 2 || self.disk_radial == 0 || self.disk_angular == 0 {
            return Err(OperatorError::BadQuadrature(format!("{self:?}")));
        }
        if self
            .radius_fractions
            .iter()
            .any(|r| !(r.is_finite() && *r > 0.0 && *r <= 1.0))
            || !self.radius_fractions.contains(&1.0)
        {
            return Err(OperatorError::BadQuadrature(
                "radius fractions must lie in (0, 1] and include 1".into(),
            ));
        }
        Ok(())
    }

    pub fn min_fraction(&self) -> f64 {
        self.radius_fractions.iter().copied().fold(1.0, f64::min)
    }
}

/// Which game, with its step size and probabilities.
#[derive(Debug, Clone)]
pub struct GameSpec {
    pub kind: GameKind,
    pub epsilon: f64,
    pub alpha: Alpha,
    /// Only consulted by [`GameKind::DirectionalNoise`]; `None` selects
    /// [`DirectionalQuadrature::default_for`].
    pub directional: Option<DirectionalQuadrature>,
}

impl GameSpec {
    pub fn tug_of_war(epsilon: f64) -> Self {
        GameSpec {
            kind: GameKind::TugOfWar,
            epsilon,
            alpha: Alpha::Constant(1.0),
            directional: None,
        }
    }

    pub fn random_walk(epsilon: f64) -> Self {
        GameSpec {
            kind: GameKind::RandomWalk,
            epsilon,
            alpha: Alpha::Constant(0.0),
            directional: None,
        }
    }

    pub fn space_dependent(epsilon: f64, alpha: Alpha) -> Self {
        GameSpec {
            kind: GameKind::SpaceDependent,
            epsilon,
            alpha,
            directional: None,
        }
    }

    pub fn directional(epsilon: f64, alpha: f64) -> Self {
        GameSpec {
            kind: GameKind::DirectionalNoise,
            epsilon,
            alpha: Alpha::Constant(alpha),
            directional: None,
        }
    }

    pub fn with_quadrature(mut self, q: DirectionalQuadrature) -> Self {
        self.directional = Some(q);
        self
    }

    /// Probability of the player-controlled branch at `x`.
    pub fn alpha_at(&self, x: &[f64]) -> Result<f64, OperatorError> {
        match self.kind {
            GameKind::TugOfWar => Ok(1.0),
            GameKind::RandomWalk => Ok(0.0),
            GameKind::SpaceDependent | GameKind::DirectionalNoise => self.alpha.checked(x),
        }
    }

    pub fn quadrature(&self, n: usize) -> DirectionalQuadrature {
        self.directional
            .clone()
            .unwrap_or_else(|| DirectionalQuadrature::default_for(n))
    }

    pub fn validate(&self) -> Result<(), OperatorError> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(OperatorError::InvalidEpsilon(self.epsilon));
        }
        if let Alpha::Constant(a) = self.alpha {
            if matches!(self.kind, GameKind::SpaceDependent | GameKind::DirectionalNoise) && !(0.0..=1.0).contains(&a)
            {
                return Err(OperatorError::AlphaOutOfRange {
                    point: Vec::new(),
                    value: a,
                });
            }
        }
        if let Some(q) = &self.directional {
            q.validate()?;
        }
        Ok(())
    }
}

/// `(alpha, beta) = ((p - 2)/(p + n), (2 + n)/(p + n))`; `p = inf` gives `(1, 0)`.
pub fn alpha_beta_from_p(p: f64, n: usize) -> Result<(f64, f64), OperatorError> {
    if p.is_nan() || p < 2.0 {
        return Err(OperatorError::PBelowTwo(p));
    }
    if p.is_infinite() {
        return Ok((1.0, 0.0));
    }
    let nf = n as f64;
    Ok(((p - 2.0) / (p + nf), (2.0 + nf) / (p + nf)))
}

/// Function-valued view of `u`.
pub trait Evaluator {
    fn eval(&self, y: &[f64]) -> Option<f64>;
}

/// Wraps a closed-form function as an [`Evaluator`] defined everywhere.
#[derive(Clone, Copy)]
pub struct ClosedForm<F>(pub F);

impl<F: Fn(&[f64]) -> f64> Evaluator for ClosedForm<F> {
    fn eval(&self, y: &[f64]) -> Option<f64> {
        Some((self.0)(y))
    }
}

impl Evaluator for ValueField {
    fn eval(&self, y: &[f64]) -> Option<f64> {
        self.interpolate(y)
    }
}

impl<T: Evaluator + ?Sized> Evaluator for &T {
    fn eval(&self, y: &[f64]) -> Option<f64> {
        (**self).eval(y)
    }
}

fn eval_at<E: Evaluator + ?Sized>(u: &E, y: &[f64]) -> Result<f64, OperatorError> {
    u.eval(y).ok_or_else(|| OperatorError::Undefined(y.to_vec()))
}

/// Offsets of the lattice points in the closed ball, for grid evaluators.
pub fn lattice_probe(n: usize, spacing: f64, epsilon: f64) -> Vec<Vec<f64>> {
    BallRule::lattice(n, spacing, epsilon).offsets
}

/// The centre plus `directions x radii` sphere points, as a probe for smooth
/// closed-form functions.
pub fn sphere_probe(n: usize, epsilon: f64, directions: usize, radius_fractions: &[f64]) -> Vec<Vec<f64>> {
    let mut probe = vec![vec![0.0; n]];
    for d in direction_set(n, directions) {
        for r in radius_fractions {
            probe.push(linalg::scale(&d, r * epsilon));
        }
    }
    probe
}

/// `(max, min)` of `u` over `x + probe`.
fn extrema<E: Evaluator + ?Sized>(
    u: &E,
    x: &[f64],
    epsilon: f64,
    probe: &[Vec<f64>],
) -> Result<(f64, f64), OperatorError> {
    if probe.is_empty() {
        return Err(OperatorError::EmptyProbe);
    }
    let reach = epsilon * (1.0 + BALL_TOL);
    let mut y = vec![0.0; x.len()];
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for h in probe {
        if linalg::norm(h) > reach {
            return Err(OperatorError::ProbeOutsideBall {
                offset: h.clone(),
                epsilon,
            });
        }
        linalg::axpy_into(&mut y, x, 1.0, h);
        let v = eval_at(u, &y)?;
        hi = hi.max(v);
        lo = lo.min(v);
    }
    Ok((hi, lo))
}

/// `(sup + inf) / 2` of `u` over `x + probe`.
pub fn step_tug_of_war<E: Evaluator + ?Sized>(
    u: &E,
    x: &[f64],
    epsilon: f64,
    probe: &[Vec<f64>],
) -> Result<f64, OperatorError> {
    let (hi, lo) = extrema(u, x, epsilon, probe)?;
    Ok(0.5 * (hi + lo))
}

/// Mean of `u` over `B(x, epsilon)` by the given rule.
pub fn step_random_walk<E: Evaluator + ?Sized>(u: &E, x: &[f64], rule: &BallRule) -> Result<f64, OperatorError> {
    if rule.is_empty() {
        return Err(OperatorError::EmptyProbe);
    }
    weighted_mean(u, x, &rule.offsets, &rule.weights)
}

/// `sum w_i u(x + h_i)`, accumulated relative to the first node value so that
/// constants are reproduced exactly when the weights sum to one.
fn weighted_mean<E: Evaluator + ?Sized>(
    u: &E,
    x: &[f64],
    offsets: &[Vec<f64>],
    weights: &[f64],
) -> Result<f64, OperatorError> {
    let mut y = vec![0.0; x.len()];
    let mut base = None;
    let mut acc = crate::stats::CompensatedSum::new();
    for (h, w) in offsets.iter().zip(weights) {
        linalg::axpy_into(&mut y, x, 1.0, h);
        let v = eval_at(u, &y)?;
        let b = *base.get_or_insert(v);
        acc.add(w * (v - b));
    }
    Ok(base.unwrap_or(0.0) + acc.value())
}

/// `alpha(x)/2 (sup + inf) + beta(x) mean` with `beta = 1 - alpha`.
pub fn step_space_dependent<E: Evaluator + ?Sized>(
    u: &E,
    x: &[f64],
    spec: &GameSpec,
    probe: &[Vec<f64>],
    rule: &BallRule,
) -> Result<f64, OperatorError> {
    if spec.kind != GameKind::SpaceDependent {
        return Err(OperatorError::WrongKind {
            expected: GameKind::SpaceDependent,
            got: spec.kind,
        });
    }
    let a = spec.alpha.checked(x)?;
    let (hi, lo) = extrema(u, x, spec.epsilon, probe)?;
    let mean = step_random_walk(u, x, rule)?;
    Ok(0.5 * a * (hi + lo) + (1.0 - a) * mean)
}

/// Candidate steps and noise disks of the directional game.
#[derive(Debug, Clone)]
pub struct DirectionalPlan {
    /// Candidate steps `nu`.
    pub steps: Vec<Vec<f64>>,
    /// Index into `disks` for each step.
    pub step_disk: Vec<usize>,
    /// Disk offsets orthogonal to each direction.
    pub disks: Vec<Vec<Vec<f64>>>,
    pub disk_weights: Vec<f64>,
}

impl DirectionalPlan {
    pub fn new(n: usize, epsilon: f64, q: &DirectionalQuadrature) -> Result<Self, OperatorError> {
        q.validate()?;
        let dirs = direction_set(n, q.directions);
        let rule = DiskRule::new(n, q.disk_radial, q.disk_angular);
        let mut steps = Vec::new();
        let mut step_disk = Vec::new();
        let mut disks = Vec::new();
        for (k, d) in dirs.iter().enumerate() {
            disks.push(rule.embed(d, epsilon));
            for r in &q.radius_fractions {
                steps.push(linalg::scale(d, r * epsilon));
                step_disk.push(k);
            }
        }
        Ok(DirectionalPlan {
            steps,
            step_disk,
            disks,
            disk_weights: rule.weights,
        })
    }

    pub fn for_spec(n: usize, spec: &GameSpec) -> Result<Self, OperatorError> {
        Self::new(n, spec.epsilon, &spec.quadrature(n))
    }
}

/// `1/2 max_nu [alpha u(x+nu) + beta disk-mean] + 1/2 min_nu [...]`.
pub fn step_directional<E: Evaluator + ?Sized>(
    u: &E,
    x: &[f64],
    spec: &GameSpec,
    plan: &DirectionalPlan,
) -> Result<f64, OperatorError> {
    if spec.kind != GameKind::DirectionalNoise {
        return Err(OperatorError::WrongKind {
            expected: GameKind::DirectionalNoise,
            got: spec.kind,
        });
    }
    let a = spec.alpha.checked(x)?;
    let mut y = vec![0.0; x.len()];
    let mut disk_means = Vec::with_capacity(plan.disks.len());
    for disk in &plan.disks {
        disk_means.push(weighted_mean(u, x, disk, &plan.disk_weights)?);
    }
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for (nu, &k) in plan.steps.iter().zip(&plan.step_disk) {
        linalg::axpy_into(&mut y, x, 1.0, nu);
        let v = a * eval_at(u, &y)? + (1.0 - a) * disk_means[k];
        hi = hi.max(v);
        lo = lo.min(v);
    }
    Ok(0.5 * (hi + lo))
}

/// Sparse linear functional on lattice values: `(offset slot, weight)` pairs.
type Sparse = Vec<(u32, f64)>;

#[derive(Debug, Clone)]
enum Kernel {
    /// Extremes and/or mean over the first `width` offsets (the lattice ball).
    Ball,
    Directional {
        disks: Vec<Sparse>,
        steps: Vec<(usize, Sparse)>,
    },
}

/// Precomputed lattice operator for one domain and game.
///
/// Lattice ball points are used directly for sup, inf and mean; the
/// directional game evaluates off-lattice points by multilinear interpolation,
/// which needs a strip about one lattice diagonal wider than epsilon.
#[derive(Debug, Clone)]
pub struct GridOperator {
    domain: Arc<GridDomain>,
    kind: GameKind,
    width: usize,
    table: Vec<u32>,
    alpha: Vec<f64>,
    kernel: Kernel,
}

impl GridOperator {
    pub fn new(domain: Arc<GridDomain>, spec: &GameSpec) -> Result<Self, OperatorError> {
        spec.validate()?;
        let n = domain.dim();
        let h = domain.spacing();
        let eps = spec.epsilon;
        if eps > domain.strip_width() * (1.0 + BALL_TOL) {
            return Err(OperatorError::StripTooNarrow {
                width: domain.strip_width(),
                needed: eps,
            });
        }
        let mut alpha = Vec::with_capacity(domain.interior_count());
        for &id in domain.interior_ids() {
            alpha.push(spec.alpha_at(domain.point(id))?);
        }

        let (offsets, kernel): (Vec<Vec<i64>>, Kernel) = match spec.kind {
            GameKind::DirectionalNoise => {
                let plan = DirectionalPlan::for_spec(n, spec)?;
                let mut slots: Vec<Vec<i64>> = Vec::new();
                let mut index = std::collections::BTreeMap::<Vec<i64>, u32>::new();
                let mut sparse_of = |point: &[f64]| -> Sparse {
                    let mut out: Sparse = Vec::new();
                    for (k, w) in interpolation_corners(point, h) {
                        let slot = *index.entry(k.clone()).or_insert_with(|| {
                            slots.push(k);
                            (slots.len() - 1) as u32
                        });
                        match out.iter_mut().find(|(s, _)| *s == slot) {
                            Some(e) => e.1 += w,
                            None => out.push((slot, w)),
                        }
                    }
                    out
                };
                let mut disks = Vec::with_capacity(plan.disks.len());
                for disk in &plan.disks {
                    let mut combined: Sparse = Vec::new();
                    for (p, w) in disk.iter().zip(&plan.disk_weights) {
                        for (slot, cw) in sparse_of(p) {
                            match combined.iter_mut().find(|(s, _)| *s == slot) {
                                Some(e) => e.1 += w * cw,
                                None => combined.push((slot, w * cw)),
                            }
                        }
                    }
                    combined.sort_by_key(|e| e.0);
                    disks.push(combined);
                }
                let steps = plan
                    .steps
                    .iter()
                    .zip(&plan.step_disk)
                    .map(|(nu, &k)| (k, sparse_of(nu)))
                    .collect();
                (slots, Kernel::Directional { disks, steps })
            }
            _ => (
                crate::geometry::lattice_ball_offsets(n, h, eps),
                Kernel::Ball,
            ),
        };

        let stencil_linear: Vec<isize> = offsets.iter().map(|o| domain.linear_offset(o)).collect();
        let width = offsets.len();
        let mut table = Vec::with_capacity(domain.interior_count() * width);
        for &id in domain.interior_ids() {
            for (o, &lo) in offsets.iter().zip(&stencil_linear) {
                match domain.neighbor(id, lo) {
                    Some(j) => table.push(j as u32),
                    None => {
                        let reach = o.iter().map(|&k| (k as f64 * h).powi(2)).sum::<f64>().sqrt();
                        return Err(OperatorError::StripTooNarrow {
                            width: domain.strip_width(),
                            needed: reach,
                        });
                    }
                }
            }
        }
        Ok(GridOperator {
            domain,
            kind: spec.kind,
            width,
            table,
            alpha,
            kernel,
        })
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn kind(&self) -> GameKind {
        self.kind
    }

    /// Operator value at the `k`-th interior point.
    #[inline]
    pub fn value_at(&self, k: usize, values: &[f64]) -> f64 {
        let nb = &self.table[k * self.width..(k + 1) * self.width];
        match &self.kernel {
            Kernel::Ball => {
                let a = self.alpha[k];
                // sums are taken relative to one stencil value so that
                // constants are reproduced exactly
                let base = values[nb[0] as usize];
                let (mut hi, mut lo, mut sum) = (f64::NEG_INFINITY, f64::INFINITY, 0.0);
                for &j in nb {
                    let v = values[j as usize];
                    hi = hi.max(v);
                    lo = lo.min(v);
                    sum += v - base;
                }
                let mean = base + sum / self.width as f64;
                match self.kind {
                    GameKind::TugOfWar => 0.5 * (hi + lo),
                    GameKind::RandomWalk => mean,
                    _ => 0.5 * a * (hi + lo) + (1.0 - a) * mean,
                }
            }
            Kernel::Directional { disks, steps } => {
                let a = self.alpha[k];
                let base = values[nb[0] as usize];
                let apply = |s: &Sparse| {
                    base + s
                        .iter()
                        .map(|&(slot, w)| w * (values[nb[slot as usize] as usize] - base))
                        .sum::<f64>()
                };
                let means: Vec<f64> = disks.iter().map(apply).collect();
                let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
                for (d, s) in steps {
                    let v = a * apply(s) + (1.0 - a) * means[*d];
                    hi = hi.max(v);
                    lo = lo.min(v);
                }
                0.5 * (hi + lo)
            }
        }
    }

    /// Writes `T u` into `out`: interior points get the operator value, strip
    /// points are copied.
    pub fn apply_into(&self, values: &[f64], out: &mut [f64]) {
        let ids = self.domain.interior_ids();
        for &id in self.domain.strip_ids() {
            out[id] = values[id];
        }
        let computed = self.interior_values(values);
        for (&id, v) in ids.iter().zip(computed) {
            out[id] = v;
        }
    }

    /// Operator values at all interior points, in interior order.
    pub fn interior_values(&self, values: &[f64]) -> Vec<f64> {
        let count = self.domain.interior_count();
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..count).into_par_iter().map(|k| self.value_at(k, values)).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..count).map(|k| self.value_at(k, values)).collect()
        }
    }

    pub fn apply(&self, field: &ValueField) -> ValueField {
        let mut out = field.clone();
        self.apply_into(field.values(), out.values_mut());
        out
    }
}

/// Integer corners and weights of the multilinear interpolation at `y`.
fn interpolation_corners(y: &[f64], h: f64) -> Vec<(Vec<i64>, f64)> {
    let n = y.len();
    let mut base = vec![0i64; n];
    let mut frac = vec![0f64; n];
    for axis in 0..n {
        let t = y[axis] / h;
        let mut k0 = t.floor();
        let mut fr = t - k0;
        if fr > 1.0 - 1e-9 {
            k0 += 1.0;
            fr = 0.0;
        } else if fr < 1e-9 {
            fr = 0.0;
        }
        base[axis] = k0 as i64;
        frac[axis] = fr;
    }
    let mut out = Vec::new();
    for mask in 0..(1usize << n) {
        let mut w = 1.0;
        let mut corner = base.clone();
        for axis in 0..n {
            if mask >> axis & 1 == 1 {
                w *= frac[axis];
                corner[axis] += 1;
            } else {
                w *= 1.0 - frac[axis];
            }
        }
        if w != 0.0 {
            out.push((corner, w));
        }
    }
    out
}

/// Strip width needed by [`GridOperator`] for `spec` at lattice spacing `h`.
pub fn required_strip_width(spec: &GameSpec, n: usize, spacing: f64) -> f64 {
    match spec.kind {
        GameKind::DirectionalNoise => spec.epsilon + (n as f64).sqrt() * spacing,
        _ => spec.epsilon,
    }
}

/// `T u`: interior values replaced by the pointwise operator, strip unchanged.
pub fn apply_operator(field: &ValueField, spec: &GameSpec) -> Result<ValueField, OperatorError> {
    let op = GridOperator::new(field.domain().clone(), spec)?;
    Ok(op.apply(field))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid_domain, Shape};

    #[test]
    fn alpha_beta_examples() {
        assert_eq!(alpha_beta_from_p(2.0, 2).unwrap(), (0.0, 1.0));
        assert_eq!(alpha_beta_from_p(f64::INFINITY, 2).unwrap(), (1.0, 0.0));
        let (a, b) = alpha_beta_from_p(4.0, 2).unwrap();
        assert!((a - 1.0 / 3.0).abs() < 1e-15 && (b - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(alpha_beta_from_p(1.5, 2), Err(OperatorError::PBelowTwo(1.5)));
    }

    #[test]
    fn directional_quadratic_at_origin() {
        let spec = GameSpec::directional(1.0, 0.5);
        let plan = DirectionalPlan::for_spec(2, &spec).unwrap();
        let u = ClosedForm(|y: &[f64]| y[0] * y[0] + y[1] * y[1]);
        let v = step_directional(&u, &[0.0, 0.0], &spec, &plan).unwrap();
        // sup: 1/2 * 1 + 1/2 * 1/3, inf: 1/2 * (1/16)^2 + 1/2 * 1/3
        let expect = 0.5 * (0.5 + 1.0 / 6.0) + 0.5 * (0.5 / 256.0 + 1.0 / 6.0);
        assert!((v - expect).abs() < 1e-14, "{v} vs {expect}");
    }

    #[test]
    fn grid_directional_matches_pointwise() {
        let spec = GameSpec::directional(0.3, 0.4);
        let h = 0.1;
        let width = required_strip_width(&spec, 2, h);
        let d = Arc::new(GridDomain::with_strip(Shape::unit_ball(2), h, 0.3, width).unwrap());
        let f = ValueField::from_fn(d.clone(), |y| (3.0 * y[0]).sin() + y[1] * y[1]).unwrap();
        let op = GridOperator::new(d.clone(), &spec).unwrap();
        let plan = DirectionalPlan::for_spec(2, &spec).unwrap();
        let grid = op.interior_values(f.values());
        for (k, &id) in d.interior_ids().iter().enumerate().step_by(7) {
            let p = step_directional(&f, d.point(id), &spec, &plan).unwrap();
            assert!((p - grid[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn narrow_strip_is_reported() {
        let d = Arc::new(build_grid_domain(Shape::unit_ball(2), 0.1, 0.3).unwrap());
        let err = GridOperator::new(d, &GameSpec::directional(0.3, 0.5)).unwrap_err();
        assert!(matches!(err, OperatorError::StripTooNarrow { .. }));
    }
}
