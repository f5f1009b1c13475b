//! Empirical Hölder statistics of solved value fields.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{sample_sphere_into, ValueField};
use crate::linalg;
use crate::quadrature::direction_set;
use crate::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegularityError {
    #[error("radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("delta must lie in (0, 1], got {0}")]
    InvalidDelta(f64),
    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("pair budget must be at least 1")]
    EmptyBudget,
    #[error("B({center:?}, {radius}) is not covered by the field's domain")]
    OutsideDomain { center: Vec<f64>, radius: f64 },
    #[error("center has dimension {got}, field has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("fewer than two lattice points in B(center, R)")]
    TooFewPoints,
    #[error("only {0} usable pairs, need at least 10")]
    TooFewPairs(usize),
    #[error("pair filter is inconsistent: {0}")]
    BadFilter(String),
}

/// One sampled pair of lattice points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub dist: f64,
    pub absdiff: f64,
}

/// Pair counts and largest quotient within one distance decade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecadeSummary {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub max_quotient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub delta: f64,
    pub epsilon: f64,
    pub radius: f64,
    pub center: Vec<f64>,
    pub c_prime: f64,
    /// `sup - inf` of the field over the lattice points of `B(center, 2R)`.
    pub osc: f64,
    /// `max [|u(x) - u(z)| - C' (eps/R)^delta osc] / [(|x - z|/R)^delta osc]`.
    pub k: f64,
    pub pair_count: usize,
    pub argmax: Option<PairSample>,
    pub decades: Vec<DecadeSummary>,
    #[serde(skip)]
    pub samples: Vec<PairSample>,
}

impl HolderReport {
    fn floor(&self) -> f64 {
        self.c_prime * (self.epsilon / self.radius).powf(self.delta) * self.osc
    }

    /// Per-pair quotient for the report's `C'`.
    pub fn quotient(&self, s: &PairSample) -> f64 {
        if self.osc == 0.0 {
            return 0.0;
        }
        (s.absdiff - self.floor()) / ((s.dist / self.radius).powf(self.delta) * self.osc)
    }

    /// The same samples re-scored with another `C'`.
    pub fn with_c_prime(&self, c_prime: f64) -> HolderReport {
        let mut r = self.clone();
        r.c_prime = c_prime;
        r.rescore();
        r
    }

    fn rescore(&mut self) {
        let mut k = f64::NEG_INFINITY;
        let mut arg = None;
        for s in &self.samples {
            let q = self.quotient(s);
            if q > k {
                k = q;
                arg = Some(s.clone());
            }
        }
        if self.osc == 0.0 {
            k = 0.0;
        }
        self.k = k;
        self.argmax = arg;
        let edges: Vec<(f64, f64)> = self.decades.iter().map(|d| (d.lower, d.upper)).collect();
        self.decades = edges
            .into_iter()
            .map(|(lower, upper)| {
                let inside: Vec<f64> = self
                    .samples
                    .iter()
                    .filter(|s| s.dist >= lower && s.dist < upper)
                    .map(|s| self.quotient(s))
                    .collect();
                DecadeSummary {
                    lower,
                    upper,
                    count: inside.len(),
                    max_quotient: inside.into_iter().fold(f64::NEG_INFINITY, f64::max),
                }
            })
            .collect();
    }

    /// Rows of `dist,absdiff,quotient`.
    pub fn quotients_csv(&self) -> String {
        let mut out = String::from("dist,absdiff,quotient\n");
        for s in &self.samples {
            out.push_str(&format!("{},{},{}\n", s.dist, s.absdiff, self.quotient(s)));
        }
        out
    }
}

/// Lattice ids of the field's points within `radius` of `center`.
fn ball_ids(field: &ValueField, center: &[f64], radius: f64) -> Vec<usize> {
    let d = field.domain();
    (0..d.len())
        .filter(|&id| linalg::dist(d.point(id), center) <= radius * (1.0 + 1e-12))
        .collect()
}

fn check_covered(field: &ValueField, center: &[f64], radius: f64) -> Result<(), RegularityError> {
    let n = center.len();
    let covered = direction_set(n, 64.max(4 * n)).iter().all(|e| {
        let y: Vec<f64> = center.iter().zip(e).map(|(c, ei)| c + radius * ei).collect();
        field.interpolate(&y).is_some()
    });
    if covered {
        Ok(())
    } else {
        Err(RegularityError::OutsideDomain {
            center: center.to_vec(),
            radius,
        })
    }
}

/// Nearest lattice point id to `y`, if it exists.
fn nearest_id(field: &ValueField, y: &[f64]) -> Option<usize> {
    let d = field.domain();
    let h = d.spacing();
    let k: Vec<i64> = y.iter().map(|v| (v / h).round() as i64).collect();
    d.id_of_lattice(&k)
}

/// Decade edges `[lo 10^j, lo 10^(j+1))` clipped to `hi`.
fn decade_edges(lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut a = lo;
    while a < hi {
        let b = (a * 10.0).min(hi);
        out.push((a, b));
        a = b;
    }
    if let Some(last) = out.last_mut() {
        // keep the diameter itself inside the final bin
        last.1 = hi * (1.0 + 1e-12);
    }
    out
}

/// Draws pair `i` with distance log-uniform in `bin`: `x` from `xs` (or the
/// anchor), `z` the lattice point nearest `x + r e`, kept inside `region`.
#[allow(clippy::too_many_arguments)]
fn draw_pair(
    field: &ValueField,
    seed: u64,
    i: usize,
    xs: &[usize],
    anchor: Option<usize>,
    region: (&[f64], f64),
    bin: (f64, f64),
) -> Option<PairSample> {
    let d = field.domain();
    let n = d.dim();
    let mut r = rng::stream(seed, i as u64);
    let mut e = vec![0.0; n];
    for _ in 0..64 {
        let xid = anchor.unwrap_or_else(|| xs[r.gen_range(0..xs.len())]);
        let x = d.point(xid);
        let t: f64 = r.gen();
        let rad = (bin.0.ln() + t * (bin.1.ln() - bin.0.ln())).exp();
        sample_sphere_into(&mut r, &mut e);
        let y: Vec<f64> = x.iter().zip(&e).map(|(a, b)| a + rad * b).collect();
        let Some(zid) = nearest_id(field, &y) else { continue };
        let z = d.point(zid);
        if zid == xid || linalg::dist(z, region.0) > region.1 * (1.0 + 1e-12) {
            continue;
        }
        let dist = linalg::dist(x, z);
        return Some(PairSample {
            x: x.to_vec(),
            z: z.to_vec(),
            dist,
            absdiff: (field.get(xid) - field.get(zid)).abs(),
        });
    }
    None
}

fn draw_pairs(
    field: &ValueField,
    seed: u64,
    budget: usize,
    xs: &[usize],
    anchor: Option<usize>,
    region: (&[f64], f64),
    bins: &[(f64, f64)],
) -> Vec<PairSample> {
    let one = |i: usize| draw_pair(field, seed, i, xs, anchor, region, bins[i % bins.len()]);
    #[cfg(feature = "parallel")]
    let drawn: Vec<Option<PairSample>> = {
        use rayon::prelude::*;
        (0..budget).into_par_iter().map(one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let drawn: Vec<Option<PairSample>> = (0..budget).map(one).collect();
    drawn.into_iter().flatten().collect()
}

/// The Hölder statistic `K` of `field` on `B(center, R)`.
///
/// Pairs are lattice points of `B(center, R)`, stratified round-robin over
/// distance decades from the grid spacing up to `2R`; pair `i` uses stream
/// `i` of `seed`, so a larger budget extends a smaller one.
#[allow(clippy::too_many_arguments)]
pub fn holder_report(
    field: &ValueField,
    delta: f64,
    epsilon: f64,
    radius: f64,
    center: &[f64],
    c_prime: f64,
    pair_budget: usize,
    seed: u64,
) -> Result<HolderReport, RegularityError> {
    let d = field.domain();
    if center.len() != d.dim() {
        return Err(RegularityError::DimensionMismatch {
            expected: d.dim(),
            got: center.len(),
        });
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(RegularityError::InvalidDelta(delta));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(RegularityError::InvalidEpsilon(epsilon));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(RegularityError::InvalidRadius(radius));
    }
    if pair_budget == 0 {
        return Err(RegularityError::EmptyBudget);
    }
    check_covered(field, center, 2.0 * radius)?;

    let big = ball_ids(field, center, 2.0 * radius);
    let (lo, hi) = big
        .iter()
        .map(|&id| field.get(id))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let osc = (hi - lo).max(0.0);

    let xs = ball_ids(field, center, radius);
    if xs.len() < 2 {
        return Err(RegularityError::TooFewPoints);
    }
    let bins = decade_edges(d.spacing(), 2.0 * radius);
    let samples = draw_pairs(field, seed, pair_budget, &xs, None, (center, radius), &bins);

    let mut report = HolderReport {
        delta,
        epsilon,
        radius,
        center: center.to_vec(),
        c_prime,
        osc,
        k: 0.0,
        pair_count: samples.len(),
        argmax: None,
        decades: bins
            .iter()
            .map(|&(lower, upper)| DecadeSummary {
                lower,
                upper,
                count: 0,
                max_quotient: f64::NEG_INFINITY,
            })
            .collect(),
        samples,
    };
    report.rescore();
    Ok(report)
}

/// Fits `C'` over `grid` by minimizing `K + C'`, the total constant of the
/// bound `K (|x-z|/R)^delta + C' (eps/R)^delta` in units of `osc`.
///
/// Minimizing `K` alone is degenerate: `K` never increases with `C'`.
pub fn fit_c_prime(report: &HolderReport, grid: &[f64]) -> HolderReport {
    grid.iter()
        .map(|&c| report.with_c_prime(c))
        .min_by(|a, b| (a.k + a.c_prime).total_cmp(&(b.k + b.c_prime)))
        .unwrap_or_else(|| report.clone())
}

/// Default `C'` grid for [`fit_c_prime`].
pub fn default_c_prime_grid() -> Vec<f64> {
    (0..=40).map(|i| i as f64 * 0.05).collect()
}

/// Which pairs enter the exponent regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFilter {
    /// Smallest pair distance; at least `10 eps`.
    pub min_dist: f64,
    pub max_dist: f64,
    /// Pairs are drawn inside `B(center, radius)`.
    pub center: Vec<f64>,
    pub radius: f64,
    /// Fix one endpoint of every pair at this point.
    pub anchor: Option<Vec<f64>>,
    pub pairs: usize,
}

impl PairFilter {
    pub fn ball(center: Vec<f64>, radius: f64, epsilon: f64) -> Self {
        PairFilter {
            min_dist: 10.0 * epsilon,
            max_dist: 2.0 * radius,
            center,
            radius,
            anchor: None,
            pairs: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub delta_hat: f64,
    pub r_squared: f64,
    pub intercept: f64,
    pub pairs_used: usize,
}

/// Least-squares slope of `log |u(x) - u(z)|` against `log |x - z|`.
pub fn estimate_exponent(
    field: &ValueField,
    epsilon: f64,
    filter: &PairFilter,
    seed: u64,
) -> Result<ExponentFit, RegularityError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(RegularityError::InvalidEpsilon(epsilon));
    }
    if filter.min_dist < 10.0 * epsilon * (1.0 - 1e-12) {
        return Err(RegularityError::BadFilter(format!(
            "min_dist {} is below 10 eps = {}",
            filter.min_dist,
            10.0 * epsilon
        )));
    }
    if !(filter.max_dist > filter.min_dist) {
        return Err(RegularityError::BadFilter("max_dist must exceed min_dist".into()));
    }
    if filter.center.len() != field.domain().dim() {
        return Err(RegularityError::DimensionMismatch {
            expected: field.domain().dim(),
            got: filter.center.len(),
        });
    }
    let xs = ball_ids(field, &filter.center, filter.radius);
    let anchor = match &filter.anchor {
        Some(a) => Some(
            nearest_id(field, a).ok_or_else(|| RegularityError::BadFilter(format!("anchor {a:?} is off the domain")))?,
        ),
        None => None,
    };
    if xs.is_empty() && anchor.is_none() {
        return Err(RegularityError::TooFewPoints);
    }
    let bins = [(filter.min_dist, filter.max_dist)];
    let samples = draw_pairs(
        field,
        seed,
        filter.pairs,
        &xs,
        anchor,
        (&filter.center, filter.radius),
        &bins,
    );
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.dist >= filter.min_dist * (1.0 - 1e-12) && s.absdiff > 0.0)
        .map(|s| (s.dist.ln(), s.absdiff.ln()))
        .collect();
    if pts.len() < 10 {
        return Err(RegularityError::TooFewPairs(pts.len()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(RegularityError::BadFilter("all pair distances coincide".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(ExponentFit {
        delta_hat: slope,
        r_squared: r2,
        intercept: my - slope * mx,
        pairs_used: pts.len(),
    })
}
