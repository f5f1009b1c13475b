//! Signed margins of the four contradiction inequalities and region sweeps.
//!
//! Every margin is `g(x, z) - (right-hand side)`; a positive value means the
//! inequality holds at `(x, z)`. The functions take an arbitrary `g` on
//! `R^n x R^n` so that simple test functions can exercise the machinery; the
//! sweep [`certify_region`] uses the comparison function `f = f1 - f2`.
//!
//! Extrema are searched over a tensor grid of each ball plus distinguished
//! candidates (steps along `+-V`, along `+-(x+z)/|x+z|`, and the meeting point
//! of the two balls), optionally followed by a compass search.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::comparison::{annulus_of_distance, Annulus, ComparisonParams, ParamMode};
use crate::couplings::{rotation_map, CouplingMap};
use crate::geometry::{sample_ball_into, sample_sphere_into, BALL_TOL};
use crate::linalg;
use crate::quadrature::{direction_set, BallRule, DiskRule};
use crate::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("x and z coincide")]
    Coincident,
    #[error("alpha must lie in (0, 1], got {0}")]
    AlphaOutOfRange(f64),
    #[error("theta must lie in (0, 1), got {0}")]
    ThetaOutOfRange(f64),
    #[error("n_samples must be at least 1")]
    NoSamples,
    #[error("the largest value of f2 is not finite ({0}); these constants cannot be evaluated in double precision")]
    NonFiniteF2(f64),
    #[error(transparent)]
    Params(#[from] crate::comparison::ComparisonError),
    #[error("invalid search setting: {0}")]
    BadSettings(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Inequality {
    I,
    II,
    III,
    T,
}

impl Inequality {
    pub const ALL: [Inequality; 4] = [Inequality::I, Inequality::II, Inequality::III, Inequality::T];

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Some(Inequality::I),
            "II" | "2" => Some(Inequality::II),
            "III" | "3" => Some(Inequality::III),
            "T" => Some(Inequality::T),
            _ => None,
        }
    }

    fn lane(self) -> u64 {
        self as u64 + 1
    }
}

/// Grid search over a ball: `nodes` points per axis on `[-eps, eps]`
/// (restricted to the ball), then optional compass refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSearch {
    pub nodes: usize,
    pub refine: bool,
}

impl GridSearch {
    pub fn new(nodes: usize, refine: bool) -> Self {
        GridSearch { nodes, refine }
    }

    /// Grid with halved spacing that contains every node of `self`.
    pub fn doubled(self) -> Self {
        GridSearch {
            nodes: 2 * self.nodes - 1,
            ..self
        }
    }
}

/// Tensor grid nodes of `[-eps, eps]^n` inside the closed ball.
pub fn ball_grid(n: usize, epsilon: f64, nodes: usize) -> Vec<Vec<f64>> {
    if nodes <= 1 {
        return vec![vec![0.0; n]];
    }
    let step = 2.0 * epsilon / (nodes - 1) as f64;
    let reach = epsilon * (1.0 + BALL_TOL);
    let mut out = Vec::new();
    let mut k = vec![0usize; n];
    loop {
        let h: Vec<f64> = k.iter().map(|&ki| -epsilon + ki as f64 * step).collect();
        if linalg::norm(&h) <= reach {
            out.push(h);
        }
        let mut axis = n;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            k[axis] += 1;
            if k[axis] < nodes {
                break;
            }
            k[axis] = 0;
        }
    }
}

/// Distinguished offsets `(for x, for z)`: zero, `-+eps V`, `+-eps s_hat`,
/// and the meeting offsets `-+(d/2) V` when the balls intersect.
fn distinguished(x: &[f64], z: &[f64], epsilon: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = x.len();
    let mut xs = vec![vec![0.0; n]];
    let mut zs = vec![vec![0.0; n]];
    if let Some(v) = linalg::unit(&linalg::sub(x, z)) {
        for sign in [1.0, -1.0] {
            xs.push(linalg::scale(&v, sign * epsilon));
            zs.push(linalg::scale(&v, -sign * epsilon));
        }
    }
    if let Some(s) = linalg::unit(&linalg::add(x, z)) {
        for sign in [1.0, -1.0] {
            xs.push(linalg::scale(&s, sign * epsilon));
            zs.push(linalg::scale(&s, sign * epsilon));
        }
    }
    (xs, zs)
}

/// Common point `(x + z)/2` of both balls, as the offset from `x`, when
/// `|x - z| <= 2 eps`. Callers evaluate the diagonal at one shared point:
/// `x + h` and `z + h'` computed separately need not agree to the last bit.
fn meeting_point(x: &[f64], z: &[f64], epsilon: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let d = linalg::dist(x, z);
    if d == 0.0 || d > 2.0 * epsilon {
        return None;
    }
    let m: Vec<f64> = x.iter().zip(z).map(|(a, b)| 0.5 * (a + b)).collect();
    Some((linalg::sub(&m, x), m))
}

fn within(h: &[f64], epsilon: f64) -> bool {
    linalg::norm(h) <= epsilon * (1.0 + BALL_TOL)
}

/// Compass search over `blocks` stacked `n`-vectors, each confined to the
/// closed `epsilon`-ball. Maximises `obj` (or minimises when `maximize` is
/// false) starting from `start` with value `value`.
fn compass(
    obj: &mut dyn FnMut(&[f64]) -> f64,
    start: Vec<f64>,
    mut value: f64,
    n: usize,
    epsilon: f64,
    step0: f64,
    maximize: bool,
) -> (Vec<f64>, f64) {
    let better = |a: f64, b: f64| if maximize { a > b } else { a < b };
    let mut p = start;
    let mut step = step0;
    let min_step = step0 / 64.0;
    let mut trial = p.clone();
    while step >= min_step {
        let mut improved = false;
        for axis in 0..p.len() {
            for sign in [1.0, -1.0] {
                trial.copy_from_slice(&p);
                trial[axis] += sign * step;
                let block = axis / n;
                if !within(&trial[block * n..(block + 1) * n], epsilon) {
                    continue;
                }
                let v = obj(&trial);
                if better(v, value) {
                    value = v;
                    p.copy_from_slice(&trial);
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (p, value)
}

/// `(sup, inf)` of `g` over `B(x, eps) x B(z, eps)`.
pub fn product_extrema<G>(g: &G, x: &[f64], z: &[f64], epsilon: f64, search: &GridSearch) -> (f64, f64)
where
    G: Fn(&[f64], &[f64]) -> f64 + ?Sized,
{
    let n = x.len();
    let grid = ball_grid(n, epsilon, search.nodes);
    let (sx, sz) = distinguished(x, z, epsilon);
    let xs: Vec<Vec<f64>> = grid.iter().cloned().chain(sx).collect();
    let zs: Vec<Vec<f64>> = grid.into_iter().chain(sz).collect();
    let mut xs = xs;
    let mut zs = zs;
    let mut xpts: Vec<Vec<f64>> = xs.iter().map(|h| linalg::add(x, h)).collect();
    let mut zpts: Vec<Vec<f64>> = zs.iter().map(|h| linalg::add(z, h)).collect();
    if let Some((hx, m)) = meeting_point(x, z, epsilon) {
        xs.push(hx);
        zs.push(linalg::sub(&m, z));
        xpts.push(m.clone());
        zpts.push(m);
    }
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut arg_hi, mut arg_lo) = ((0, 0), (0, 0));
    for (i, xp) in xpts.iter().enumerate() {
        for (j, zp) in zpts.iter().enumerate() {
            let v = g(xp, zp);
            if v > hi {
                hi = v;
                arg_hi = (i, j);
            }
            if v < lo {
                lo = v;
                arg_lo = (i, j);
            }
        }
    }
    if search.refine {
        let step0 = 2.0 * epsilon / (search.nodes.max(2) - 1) as f64;
        let mut xp = vec![0.0; n];
        let mut zp = vec![0.0; n];
        let mut obj = |p: &[f64]| {
            linalg::axpy_into(&mut xp, x, 1.0, &p[..n]);
            linalg::axpy_into(&mut zp, z, 1.0, &p[n..]);
            g(&xp, &zp)
        };
        let start = |(i, j): (usize, usize)| [xs[i].clone(), zs[j].clone()].concat();
        hi = compass(&mut obj, start(arg_hi), hi, n, epsilon, step0, true).1;
        lo = compass(&mut obj, start(arg_lo), lo, n, epsilon, step0, false).1;
    }
    (hi, lo)
}

/// `g(x, z) - (sup g + inf g) / 2` over `B(x, eps) x B(z, eps)`.
pub fn margin_i<G>(g: &G, x: &[f64], z: &[f64], epsilon: f64, search: &GridSearch) -> f64
where
    G: Fn(&[f64], &[f64]) -> f64 + ?Sized,
{
    let (hi, lo) = product_extrema(g, x, z, epsilon, search);
    g(x, z) - 0.5 * (hi + lo)
}

/// Mean of `values` accumulated relative to the first one.
fn relative_mean(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut base = None;
    let mut m = crate::stats::Moments::new();
    for v in values {
        let b = *base.get_or_insert(v);
        m.push(v - b);
    }
    let se = if m.count() > 1 { m.std_error() } else { 0.0 };
    (base.unwrap_or(0.0) + m.mean(), se)
}

/// Margin of the mirror-coupled mean inequality with its Monte Carlo
/// standard error. `samples` holds offsets in `B(0, eps)` with equal weights.
///
/// Offsets `h` with `x + h` inside `B(z, eps)` contribute `g(x+h, x+h)`, the
/// others `g(x+h, z+P(h))` with the mirror map `P`.
pub fn margin_ii_estimate<G>(
    g: &G,
    x: &[f64],
    z: &[f64],
    epsilon: f64,
    samples: &BallRule,
) -> Result<(f64, f64), CertifyError>
where
    G: Fn(&[f64], &[f64]) -> f64 + ?Sized,
{
    let mirror = CouplingMap::mirror(x, z).map_err(|_| CertifyError::Coincident)?;
    let n = x.len();
    let zx = linalg::sub(z, x);
    let mut xp = vec![0.0; n];
    let mut zp = vec![0.0; n];
    let mut ph = vec![0.0; n];
    let (mean, se) = relative_mean(samples.offsets.iter().map(|h| {
        linalg::axpy_into(&mut xp, x, 1.0, h);
        if linalg::dist(h, &zx) < epsilon {
            g(&xp, &xp)
        } else {
            mirror.apply_into(h, &mut ph);
            linalg::axpy_into(&mut zp, z, 1.0, &ph);
            g(&xp, &zp)
        }
    }));
    Ok((g(x, z) - mean, se))
}

pub fn margin_ii<G>(g: &G, x: &[f64], z: &[f64], epsilon: f64, samples: &BallRule) -> Result<f64, CertifyError>
where
    G: Fn(&[f64], &[f64]) -> f64 + ?Sized,
{
    margin_ii_estimate(g, x, z, epsilon, samples).map(|(m, _)| m)
}

/// Budgets of the nested search in [`margin_iii`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NestedSearch {
    /// Search for the outer supremum over `x'`.
    pub outer: GridSearch,
    /// Search for the inner infimum over `x~`, per integration node.
    pub inner: GridSearch,
}

/// `g(x, z) - 1/2 sup_{x'} mean_y [g(x', y) + inf_{x~} g(x~, y)]` with
/// `x', x~` in `B(x, eps)` and `y` over the offsets `samples` around `z`.
///
/// The inner infimum always tries the clamp projection `P_x(y)` and the point
/// of `B(x, eps)` closest to `y`.
pub fn margin_iii<G>(
    g: &G,
    x: &[f64],
    z: &[f64],
    epsilon: f64,
    search: &NestedSearch,
    samples: &BallRule,
) -> Result<f64, CertifyError>
where
    G: Fn(&[f64], &[f64]) -> f64 + ?Sized,
{
    let n = x.len();
    if linalg::dist(x, z) == 0.0 {
        return Err(CertifyError::Coincident);
    }
    let ys: Vec<Vec<f64>> = samples.offsets.iter().map(|h| linalg::add(z, h)).collect();
    let (sx, _) = distinguished(x, z, epsilon);

    // inner infimum per node; independent of x'
    let inner_grid = ball_grid(n, epsilon, search.inner.nodes);
    let inner_step = 2.0 * epsilon / (search.inner.nodes.max(2) - 1) as f64;
    let mut cand = vec![0.0; n];
    let inner = relative_mean(ys.iter().map(|y| {
        let mut best = f64::INFINITY;
        let mut arg = vec![0.0; n];
        let mut consider = |h: &[f64], best: &mut f64, arg: &mut Vec<f64>| {
            linalg::axpy_into(&mut cand, x, 1.0, h);
            let v = g(&cand, y);
            if v < *best {
                *best = v;
                arg.copy_from_slice(h);
            }
        };
        for h in inner_grid.iter().chain(&sx) {
            consider(h, &mut best, &mut arg);
        }
        let clamp = linalg::sub(&crate::couplings::clamp_projection(x, epsilon, y), x);
        consider(&clamp, &mut best, &mut arg);
        let to_y = linalg::sub(y, x);
        let r = linalg::norm(&to_y);
        if r <= epsilon {
            // y itself is admissible; evaluate the diagonal exactly
            let v = g(y, y);
            if v < best {
                best = v;
                arg = to_y;
            }
        } else {
            consider(&linalg::scale(&to_y, epsilon / r), &mut best, &mut arg);
        }
        if search.inner.refine {
            let mut xp = vec![0.0; n];
            let mut obj = |p: &[f64]| {
                linalg::axpy_into(&mut xp, x, 1.0, p);
                g(&xp, y)
            };
            best = compass(&mut obj, arg, best, n, epsilon, inner_step, false).1;
        }
        best
    }))
    .0;

    // outer supremum of the mean of g(x', y)
    let outer_mean = |h: &[f64]| {
        let xp = linalg::add(x, h);
        relative_mean(ys.iter().map(|y| g(&xp, y))).0
    };
    let mut best = f64::NEG_INFINITY;
    let mut arg = vec![0.0; n];
    for h in ball_grid(n, epsilon, search.outer.nodes).iter().chain(&sx) {
        let v = outer_mean(h);
        if v > best {
            best = v;
            arg = h.clone();
        }
    }
    if search.outer.refine {
        let step0 = 2.0 * epsilon / (search.outer.nodes.max(2) - 1) as f64;
        let mut obj = |p: &[f64]| outer_mean(p);
        best = compass(&mut obj, arg, best, n, epsilon, step0, true).1;
    }
    Ok(g(x, z) - 0.5 * (best + inner))
}

/// Step set and disk rule of [`margin_t`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSearch {
    pub directions: usize,
    pub radius_fractions: Vec<f64>,
    pub disk_radial: usize,
    pub disk_angular: usize,
}

impl StepSearch {
    fn validate(&self) -> Result<(), CertifyError> {
        if self.directions < 2
            || self.radius_fractions.is_empty()
            || self.radius_fractions.iter().any(|r| !(*r > 0.0 && *r <= 1.0))
            || self.disk_radial == 0
        {
            return Err(CertifyError::BadSettings(format!("{self:?}")));
        }
        Ok(())
    }
}

/// `g(x, z) - [sup T g + inf T g]` over step pairs `(nu_x, nu_z)`, where
/// `T g = alpha/2 g(x + nu_x, z + nu_z) + (1 - alpha)/2 mean_h g(x + h, z + P(h))`,
/// `h` ranges over the disk orthogonal to `nu_x` and `P` is the minimal
/// rotation taking `nu_x` to `nu_z`.
///
/// The step set is the direction set (plus `+-V`) times the radius fractions,
/// plus the meeting steps `-+(d/2) V` when `|x - z| <= 2 eps`.
pub fn margin_t<G>(
    g: &G,
    x: &[f64],
    z: &[f64],
    epsilon: f64,
    alpha: f64,
    theta: f64,
    search: &StepSearch,
) -> Result<f64, CertifyError>
where
    G: Fn(&[f64], &[f64]) -> f64 + ?Sized,
{
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(CertifyError::AlphaOutOfRange(alpha));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(CertifyError::ThetaOutOfRange(theta));
    }
    search.validate()?;
    let n = x.len();
    let v = linalg::unit(&linalg::sub(x, z)).ok_or(CertifyError::Coincident)?;
    let d = linalg::dist(x, z);

    let mut dirs = direction_set(n, search.directions);
    dirs.push(v.clone());
    dirs.push(linalg::scale(&v, -1.0));
    // steps: (direction index, vector)
    let mut steps: Vec<(usize, Vec<f64>)> = Vec::new();
    for (k, dir) in dirs.iter().enumerate() {
        for r in &search.radius_fractions {
            steps.push((k, linalg::scale(dir, r * epsilon)));
        }
    }
    let meet = d <= 2.0 * epsilon;
    let vi = dirs.len() - 2;
    let (meet_x, meet_z) = (
        (vi + 1, linalg::scale(&v, -0.5 * d)),
        (vi, linalg::scale(&v, 0.5 * d)),
    );

    let rule = DiskRule::new(n, search.disk_radial, search.disk_angular);
    let disks: Vec<Vec<Vec<f64>>> = dirs.iter().map(|dir| rule.embed(dir, epsilon)).collect();
    // disk means depend only on the two directions
    let mut xp = vec![0.0; n];
    let mut zp = vec![0.0; n];
    let mut ph = vec![0.0; n];
    let mut disk_mean = vec![0.0; dirs.len() * dirs.len()];
    for (i, di) in dirs.iter().enumerate() {
        for (j, dj) in dirs.iter().enumerate() {
            let rot = rotation_map(di, dj).map_err(|_| CertifyError::Coincident)?;
            let mut base = None;
            let mut acc = crate::stats::CompensatedSum::new();
            for (h, w) in disks[i].iter().zip(&rule.weights) {
                linalg::axpy_into(&mut xp, x, 1.0, h);
                rot.apply_into(h, &mut ph);
                linalg::axpy_into(&mut zp, z, 1.0, &ph);
                let val = g(&xp, &zp);
                let b = *base.get_or_insert(val);
                acc.add(w * (val - b));
            }
            disk_mean[i * dirs.len() + j] = base.unwrap_or(0.0) + acc.value();
        }
    }

    let xsteps: Vec<&(usize, Vec<f64>)> = steps.iter().chain(meet.then_some(&meet_x)).collect();
    let zsteps: Vec<&(usize, Vec<f64>)> = steps.iter().chain(meet.then_some(&meet_z)).collect();
    let meeting = meeting_point(x, z, epsilon).map(|(_, m)| m);
    let last = steps.len();
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for (a, (i, nx)) in xsteps.iter().enumerate() {
        linalg::axpy_into(&mut xp, x, 1.0, nx);
        for (b, (j, nz)) in zsteps.iter().enumerate() {
            match &meeting {
                Some(m) if a == last && b == last => {
                    xp.copy_from_slice(m);
                    zp.copy_from_slice(m);
                }
                _ => linalg::axpy_into(&mut zp, z, 1.0, nz),
            }
            let mean = disk_mean[i * dirs.len() + j];
            // 2 T = mean + alpha (jump - mean), exact for constants
            let t2 = mean + alpha * (g(&xp, &zp) - mean);
            hi = hi.max(t2);
            lo = lo.min(t2);
        }
    }
    Ok(g(x, z) - 0.5 * (hi + lo))
}

/// Coarse position of a pair relative to the proof's thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Band {
    /// `|x - z| <= N eps / 10`
    Near,
    /// `|x - z| > N eps / 10`
    Far,
}

/// Sub-band by the step-size thresholds `2 eps / 3`, `7 eps / 4`, `2 eps`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    BelowTwoThirds,
    BelowSevenQuarters,
    BelowTwo,
    AtLeastTwo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Regime {
    pub band: Band,
    pub scale: Scale,
}

impl Regime {
    pub fn classify(distance: f64, params: &ComparisonParams) -> Self {
        let eps = params.epsilon;
        let band = match annulus_of_distance(distance, eps, params.n_annuli) {
            Annulus::Outside => Band::Far,
            Annulus::Index(_) => Band::Near,
        };
        let scale = if distance < 2.0 * eps / 3.0 {
            Scale::BelowTwoThirds
        } else if distance < 7.0 * eps / 4.0 {
            Scale::BelowSevenQuarters
        } else if distance < 2.0 * eps {
            Scale::BelowTwo
        } else {
            Scale::AtLeastTwo
        };
        Regime { band, scale }
    }

    pub fn label(&self) -> String {
        let band = match self.band {
            Band::Near => "near",
            Band::Far => "far",
        };
        let scale = match self.scale {
            Scale::BelowTwoThirds => "d<2e/3",
            Scale::BelowSevenQuarters => "2e/3<=d<7e/4",
            Scale::BelowTwo => "7e/4<=d<2e",
            Scale::AtLeastTwo => "d>=2e",
        };
        format!("{band}:{scale}")
    }
}

/// Search and sampling budgets of a certification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifierSettings {
    pub search_i: GridSearch,
    /// Antithetic pairs for inequality II.
    pub pairs_ii: usize,
    pub search_iii: NestedSearch,
    /// Antithetic pairs for the integral over `B(z, eps)` in inequality III.
    pub pairs_iii: usize,
    pub search_t: StepSearch,
    /// Probability of the jump branch in inequality T.
    pub alpha_t: f64,
}

impl CertifierSettings {
    /// Budgets of the reference method: `41^n` grids, `10^6` samples for
    /// II and `10^5` for III, the directional game's step set for T.
    pub fn reference(n: usize) -> Self {
        CertifierSettings {
            search_i: GridSearch::new(41, true),
            pairs_ii: 500_000,
            search_iii: NestedSearch {
                outer: GridSearch::new(41, true),
                inner: GridSearch::new(41, true),
            },
            pairs_iii: 50_000,
            search_t: StepSearch {
                directions: if n == 2 { 64 } else { 128 },
                radius_fractions: vec![1.0, 0.5, 0.25, 1.0 / 16.0],
                disk_radial: 9,
                disk_angular: 16,
            },
            alpha_t: 0.5,
        }
    }

    /// Reduced budgets for sweeps of `10^4` samples on a single core.
    pub fn sweep(n: usize) -> Self {
        CertifierSettings {
            search_i: GridSearch::new(11, true),
            pairs_ii: 10_000,
            search_iii: NestedSearch {
                outer: GridSearch::new(9, true),
                inner: GridSearch::new(5, true),
            },
            pairs_iii: 200,
            search_t: StepSearch {
                directions: if n == 2 { 32 } else { 64 },
                radius_fractions: vec![1.0, 0.5, 0.25, 1.0 / 16.0],
                disk_radial: 9,
                disk_angular: 16,
            },
            alpha_t: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMargin {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub distance: f64,
    pub regime: String,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgMin {
    pub index: usize,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub regime: String,
}

/// Result of sweeping one inequality over sampled pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub params: ComparisonParams,
    pub inequality: Inequality,
    pub seed: u64,
    pub samples: Vec<SampleMargin>,
    pub min_margin: f64,
    pub argmin: Option<ArgMin>,
    pub negative_count: usize,
    /// Sample count per regime label.
    pub regimes: BTreeMap<String, usize>,
    pub far_regime_reachable: bool,
    pub notes: Vec<String>,
    pub settings: CertifierSettings,
}

impl CertificateReport {
    pub fn all_positive(&self) -> bool {
        self.negative_count == 0 && self.min_margin > 0.0
    }
}

/// Pair `(x, z)` in the open unit ball with `|x - z| = d`, direction uniform
/// and midpoint uniform in the ball of radius `1 - d/2`.
fn sample_pair<R: Rng + ?Sized>(rng: &mut R, n: usize, d: f64) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n];
    sample_sphere_into(rng, &mut v);
    let mut m = vec![0.0; n];
    sample_ball_into(rng, 1.0 - 0.5 * d, &mut m);
    let x = m.iter().zip(&v).map(|(mi, vi)| mi + 0.5 * d * vi).collect();
    let z = m.iter().zip(&v).map(|(mi, vi)| mi - 0.5 * d * vi).collect();
    (x, z)
}

/// Stratified pairs: even indices in the far band `(N eps/10, 2)` when it is
/// reachable, the rest cycling through the annuli `A_1 .. A_N`.
pub fn stratified_pairs(params: &ComparisonParams, n_samples: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let far_lo = params.far_threshold();
    let far = far_lo < 2.0;
    let width = params.epsilon / 10.0;
    (0..n_samples)
        .map(|k| {
            let mut r = rng::stream(seed, k as u64);
            let d = if far && (k % 2 == 0 || params.n_annuli == 0) {
                // open interval; never exactly the threshold
                let t: f64 = r.gen();
                (far_lo + (2.0 - far_lo) * t).max(far_lo.next_up())
            } else {
                let slot = if far { k / 2 } else { k } as u128;
                let i = 1 + slot % params.n_annuli;
                let lo = (i - 1) as f64 * width;
                let hi = (i as f64 * width).min(1.999);
                let t: f64 = r.gen();
                // (lo, hi]
                hi - (hi - lo) * t
            };
            let d = d.min(1.999_999);
            sample_pair(&mut r, params.n, d)
        })
        .collect()
}

/// Margin of one inequality at one pair, using the budgets of `settings`.
/// Sample `index` of `seed` drives the Monte Carlo rules; II also returns
/// its standard error.
pub fn evaluate_margin(
    params: &ComparisonParams,
    which: Inequality,
    x: &[f64],
    z: &[f64],
    seed: u64,
    index: usize,
    settings: &CertifierSettings,
) -> Result<(f64, Option<f64>), CertifyError> {
    let g = |a: &[f64], b: &[f64]| params.f(a, b);
    let eps = params.epsilon;
    let n = params.n;
    let mut r = rng::lane_stream(seed, which.lane(), index as u64);
    match which {
        Inequality::I => Ok((margin_i(&g, x, z, eps, &settings.search_i), None)),
        Inequality::II => {
            let rule = BallRule::monte_carlo(n, eps, settings.pairs_ii, &mut r);
            let (m, se) = margin_ii_estimate(&g, x, z, eps, &rule)?;
            Ok((m, Some(se)))
        }
        Inequality::III => {
            let rule = BallRule::monte_carlo(n, eps, settings.pairs_iii, &mut r);
            Ok((margin_iii(&g, x, z, eps, &settings.search_iii, &rule)?, None))
        }
        Inequality::T => Ok((
            margin_t(&g, x, z, eps, settings.alpha_t, params.theta, &settings.search_t)?,
            None,
        )),
    }
}

/// Evaluates the requested margins of `f = f1 - f2` at `n_samples` stratified
/// pairs of `B_1 x B_1` off the diagonal. Deterministic given `seed`.
pub fn certify_region(
    params: &ComparisonParams,
    inequalities: &[Inequality],
    n_samples: usize,
    seed: u64,
    settings: &CertifierSettings,
) -> Result<Vec<CertificateReport>, CertifyError> {
    if n_samples == 0 {
        return Err(CertifyError::NoSamples);
    }
    params.validate()?;
    let f2max = params.f2_max();
    if !f2max.is_finite() {
        return Err(CertifyError::NonFiniteF2(f2max));
    }
    let pairs = stratified_pairs(params, n_samples, seed);
    let far_reachable = params.far_threshold() < 2.0;
    let mut notes = Vec::new();
    if !far_reachable {
        notes.push(format!(
            "far regime unreachable at these parameters: N eps / 10 = {} >= 2 = diam B_1",
            params.far_threshold()
        ));
    }
    if params.mode == ParamMode::PaperStrict {
        notes.push("paper-strict constants".into());
    }

    let mut reports = Vec::new();
    for &which in inequalities {
        let eval = |k: usize| -> Result<(f64, Option<f64>), CertifyError> {
            let (x, z) = &pairs[k];
            evaluate_margin(params, which, x, z, seed, k, settings)
        };
        #[cfg(feature = "parallel")]
        let results: Vec<_> = {
            use rayon::prelude::*;
            (0..n_samples).into_par_iter().map(eval).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let results: Vec<_> = (0..n_samples).map(eval).collect();

        let mut samples = Vec::with_capacity(n_samples);
        let mut regimes = BTreeMap::new();
        let mut min_margin = f64::INFINITY;
        let mut argmin = None;
        let mut negative_count = 0;
        for (k, res) in results.into_iter().enumerate() {
            let (margin, std_error) = res?;
            let (x, z) = &pairs[k];
            let distance = linalg::dist(x, z);
            let regime = Regime::classify(distance, params).label();
            *regimes.entry(regime.clone()).or_insert(0) += 1;
            if margin <= 0.0 || margin.is_nan() {
                negative_count += 1;
            }
            if margin < min_margin || argmin.is_none() {
                min_margin = margin;
                argmin = Some(ArgMin {
                    index: k,
                    x: x.clone(),
                    z: z.clone(),
                    regime: regime.clone(),
                });
            }
            samples.push(SampleMargin {
                x: x.clone(),
                z: z.clone(),
                distance,
                regime,
                margin,
                std_error,
            });
        }
        reports.push(CertificateReport {
            params: params.clone(),
            inequality: which,
            seed,
            samples,
            min_margin,
            argmin,
            negative_count,
            regimes,
            far_regime_reachable: far_reachable,
            notes: notes.clone(),
            settings: settings.clone(),
        });
    }
    Ok(reports)
}
