//! The comparison function `f = f1 - f2` on `R^n x R^n`.
//!
//! `f1(x, z) = C |x - z|^delta + |x + z|^2` is concave across the diagonal
//! and `f2` is an annular step function of `|x - z|`: it equals
//! `C^{2(N-i)} eps^delta` on the annulus `A_i = {(i-1) eps/10 < |x-z| <= i eps/10}`
//! and vanishes beyond `N eps / 10`.
//!
//! Increments `f1(x + hx, z + hz) - f1(x, z)` are computed in factored form so
//! that they stay accurate when `C` is huge or the steps are tiny compared to
//! `|x - z|`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComparisonError {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("x and z coincide; the direction V is undefined")]
    Coincident,
    #[error("pair distance {distance} is outside the regime where the bound holds ({reason})")]
    RegimeViolated { distance: f64, reason: String },
    #[error("epsilon must be below 1, got {0}")]
    EpsilonTooLarge(f64),
    #[error("omega must lie in (0, 1), got {0}")]
    OmegaOutOfRange(f64),
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
}

/// How the constants were chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamMode {
    /// The proof's constant schedule; `C` and `N` are astronomically large.
    PaperStrict,
    /// User or search supplied constants of moderate size.
    DeskScale,
}

impl ParamMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "paper-strict" | "strict" => Some(ParamMode::PaperStrict),
            "desk-scale" | "desk" => Some(ParamMode::DeskScale),
            _ => None,
        }
    }
}

/// Constants of the comparison function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonParams {
    pub n: usize,
    pub delta: f64,
    pub c: f64,
    pub omega: f64,
    /// Number of annuli `N`.
    pub n_annuli: u128,
    pub epsilon: f64,
    pub theta: f64,
    pub mode: ParamMode,
}

/// Step size used by [`default_params`] in paper-strict mode.
pub const PAPER_STRICT_EPSILON: f64 = 0.01;

/// Desk-scale constants for `n = 2`, validated by the margin search in the
/// `desk_search` example: every inequality keeps a positive minimum margin
/// over stratified samples of `B_1 x B_1`.
pub const DESK_DEFAULTS: DeskConstants = DeskConstants {
    delta: 0.1,
    c: 2000.0,
    n_annuli: 30,
    epsilon: 0.01,
    theta: 0.1,
    omega: 0.05,
};

/// Plain constants of a desk parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeskConstants {
    pub delta: f64,
    pub c: f64,
    pub n_annuli: u128,
    pub epsilon: f64,
    pub theta: f64,
    pub omega: f64,
}

impl ComparisonParams {
    pub fn desk(n: usize, k: DeskConstants) -> Self {
        ComparisonParams {
            n,
            delta: k.delta,
            c: k.c,
            omega: k.omega,
            n_annuli: k.n_annuli,
            epsilon: k.epsilon,
            theta: k.theta,
            mode: ParamMode::DeskScale,
        }
    }

    /// Checks the invariants of the parameter mode.
    pub fn validate(&self) -> Result<(), ComparisonError> {
        let bad = |msg: String| Err(ComparisonError::InvalidParams(msg));
        if self.n < 2 {
            return Err(ComparisonError::DimensionTooSmall(self.n));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta = {} not in (0, 1)", self.delta));
        }
        if !(self.c >= 1.0 && self.c.is_finite()) {
            return bad(format!("C = {} must be at least 1", self.c));
        }
        if self.n_annuli < 1 {
            return bad("N must be at least 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon = {} must be positive", self.epsilon));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return bad(format!("theta = {} not in (0, 1)", self.theta));
        }
        if self.mode == ParamMode::PaperStrict {
            if !(self.omega > 0.0 && self.omega < 1.0) {
                return Err(ComparisonError::OmegaOutOfRange(self.omega));
            }
            let nf = self.n as f64;
            let delta = 1.0 / (10.0 * (nf + 2.0));
            if (self.delta - delta).abs() > 1e-12 * delta {
                return bad(format!("paper-strict delta must be 1/(10(n+2)) = {delta}"));
            }
            let c = 1e10 / (self.delta * self.delta * self.omega);
            if (self.c - c).abs() > 1e-9 * c {
                return bad(format!("paper-strict C must be 1e10/(delta^2 omega) = {c}"));
            }
            if (self.n_annuli as f64) < 100.0 * self.c / self.delta {
                return bad("paper-strict N must be at least 100 C / delta".into());
            }
        }
        Ok(())
    }

    /// `N eps / 10`, the outer radius of the last annulus.
    pub fn far_threshold(&self) -> f64 {
        self.n_annuli as f64 * self.epsilon / 10.0
    }

    pub fn f1(&self, x: &[f64], z: &[f64]) -> f64 {
        eval_f1(x, z, self.c, self.delta)
    }

    pub fn f2(&self, x: &[f64], z: &[f64]) -> f64 {
        eval_f2(x, z, self)
    }

    pub fn f(&self, x: &[f64], z: &[f64]) -> f64 {
        eval_f(x, z, self)
    }

    /// `f2` on the annulus `A_i` (`i = 0` is the diagonal).
    pub fn f2_on_annulus(&self, i: u128) -> f64 {
        if i > self.n_annuli {
            return 0.0;
        }
        let exponent = 2.0 * (self.n_annuli - i) as f64;
        self.c.powf(exponent) * self.epsilon.powf(self.delta)
    }

    /// Largest value of `f2`, attained on the diagonal.
    pub fn f2_max(&self) -> f64 {
        self.f2_on_annulus(0)
    }
}

/// Paper-strict or stored desk constants for dimension `n`.
///
/// Paper-strict: `delta = 1/(10(n+2))`, `omega = min(1/(10(n+2)), 4^{-n})`
/// unless `omega_alpha` is given, `C = 1e10/(delta^2 omega)`,
/// `N = ceil(100 C / delta)`, `theta = 1/10` and eps = [`PAPER_STRICT_EPSILON`].
pub fn default_params(n: usize, mode: ParamMode, omega_alpha: Option<f64>) -> Result<ComparisonParams, ComparisonError> {
    if n < 2 {
        return Err(ComparisonError::DimensionTooSmall(n));
    }
    if let Some(w) = omega_alpha {
        if !(w > 0.0 && w < 1.0) {
            return Err(ComparisonError::OmegaOutOfRange(w));
        }
    }
    match mode {
        ParamMode::PaperStrict => {
            let nf = n as f64;
            let delta = 1.0 / (10.0 * (nf + 2.0));
            let omega = omega_alpha.unwrap_or_else(|| delta.min(4f64.powi(-(n as i32))));
            let c = 1e10 / (delta * delta * omega);
            let n_annuli = (100.0 * c / delta).ceil() as u128;
            Ok(ComparisonParams {
                n,
                delta,
                c,
                omega,
                n_annuli,
                epsilon: PAPER_STRICT_EPSILON,
                theta: 0.1,
                mode,
            })
        }
        ParamMode::DeskScale => {
            let mut p = ComparisonParams::desk(n, DESK_DEFAULTS);
            if let Some(w) = omega_alpha {
                p.omega = w;
            }
            Ok(p)
        }
    }
}

/// `C |x - z|^delta + |x + z|^2`.
pub fn eval_f1(x: &[f64], z: &[f64], c: f64, delta: f64) -> f64 {
    let d = linalg::dist(x, z);
    let s2: f64 = x.iter().zip(z).map(|(a, b)| (a + b) * (a + b)).sum();
    c * d.powf(delta) + s2
}

/// Annulus of a pair: the diagonal, `A_i` for `1 <= i <= N`, or beyond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Annulus {
    Index(u128),
    Outside,
}

/// Smallest `i` with `|x - z| <= i eps / 10`, or `Outside` past `N eps / 10`.
pub fn annulus_index(x: &[f64], z: &[f64], epsilon: f64, n_annuli: u128) -> Annulus {
    annulus_of_distance(linalg::dist(x, z), epsilon, n_annuli)
}

pub fn annulus_of_distance(d: f64, epsilon: f64, n_annuli: u128) -> Annulus {
    if d == 0.0 {
        return Annulus::Index(0);
    }
    let width = |i: f64| i * epsilon / 10.0;
    if d > width(n_annuli as f64) {
        return Annulus::Outside;
    }
    let mut i = (10.0 * d / epsilon).ceil().max(1.0);
    // settle rounding against the literal thresholds
    while i > 1.0 && d <= width(i - 1.0) {
        i -= 1.0;
    }
    while d > width(i) {
        i += 1.0;
    }
    Annulus::Index((i as u128).min(n_annuli))
}

/// `C^{2(N - i)} eps^delta` on `A_i`, zero outside.
pub fn eval_f2(x: &[f64], z: &[f64], params: &ComparisonParams) -> f64 {
    match annulus_index(x, z, params.epsilon, params.n_annuli) {
        Annulus::Index(i) => params.f2_on_annulus(i),
        Annulus::Outside => 0.0,
    }
}

pub fn eval_f(x: &[f64], z: &[f64], params: &ComparisonParams) -> f64 {
    eval_f1(x, z, params.c, params.delta) - eval_f2(x, z, params)
}

/// A pair of points with the geometry of the direction `V = (x - z)/|x - z|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledPoint {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

impl CoupledPoint {
    pub fn new(x: Vec<f64>, z: Vec<f64>) -> Self {
        assert_eq!(x.len(), z.len(), "coupled points need equal dimension");
        CoupledPoint { x, z }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn distance(&self) -> f64 {
        linalg::dist(&self.x, &self.z)
    }

    /// `V = (x - z)/|x - z|`, undefined on the diagonal.
    pub fn direction(&self) -> Option<Vec<f64>> {
        linalg::unit(&linalg::sub(&self.x, &self.z))
    }

    /// Scalar projection `h_V`.
    pub fn project(&self, h: &[f64]) -> Option<f64> {
        self.direction().map(|v| linalg::dot(h, &v))
    }

    /// Component of `h` orthogonal to `V`.
    pub fn orthogonal_part(&self, h: &[f64]) -> Option<Vec<f64>> {
        let v = self.direction()?;
        let t = linalg::dot(h, &v);
        Some(h.iter().zip(&v).map(|(hi, vi)| hi - t * vi).collect())
    }

    pub fn annulus(&self, epsilon: f64, n_annuli: u128) -> Annulus {
        annulus_index(&self.x, &self.z, epsilon, n_annuli)
    }
}

/// Relative geometry of a step: with `d = x - z`, `Dd = hx - hz`,
/// `a = (Dd . V)/|d|`, `b2 = |Dd_perp|^2 / |d|^2`, `|d + Dd|^2 = |d|^2 (1 + u)`.
struct StepGeometry {
    dist: f64,
    a: f64,
    b2: f64,
    u: f64,
    dd_v: f64,
    dd_perp2: f64,
}

fn step_geometry(x: &[f64], z: &[f64], hx: &[f64], hz: &[f64]) -> Option<StepGeometry> {
    let d = linalg::sub(x, z);
    let dist = linalg::norm(&d);
    if dist == 0.0 {
        return None;
    }
    let v = linalg::scale(&d, 1.0 / dist);
    let dd = linalg::sub(hx, hz);
    let dd_v = linalg::dot(&dd, &v);
    let dd_perp2: f64 = dd
        .iter()
        .zip(&v)
        .map(|(di, vi)| {
            let p = di - dd_v * vi;
            p * p
        })
        .sum();
    let a = dd_v / dist;
    let b2 = dd_perp2 / (dist * dist);
    Some(StepGeometry {
        dist,
        a,
        b2,
        u: 2.0 * a + a * a + b2,
        dd_v,
        dd_perp2,
    })
}

/// `|x + z + hx + hz|^2 - |x + z|^2 = (2s + Ds) . Ds`.
fn quadratic_increment(x: &[f64], z: &[f64], hx: &[f64], hz: &[f64]) -> f64 {
    (0..x.len())
        .map(|i| {
            let s = x[i] + z[i];
            let ds = hx[i] + hz[i];
            (2.0 * s + ds) * ds
        })
        .sum()
}

/// `f1(x + hx, z + hz) - f1(x, z)` without cancellation.
pub fn f1_increment(x: &[f64], z: &[f64], hx: &[f64], hz: &[f64], c: f64, delta: f64) -> f64 {
    let quad = quadratic_increment(x, z, hx, hz);
    let radial = match step_geometry(x, z, hx, hz) {
        Some(g) => g.dist.powf(delta) * ((0.5 * delta) * g.u.ln_1p()).exp_m1(),
        None => linalg::dist(hx, hz).powf(delta),
    };
    c * radial + quad
}

/// Second-order Taylor expansion of `f1` at `(x, z)` in the step `(hx, hz)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorExpansion {
    /// `f1(x, z)` plus first- and second-order terms.
    pub value: f64,
    pub first_order: f64,
    pub second_order: f64,
    /// `C |(hx, hz)|^3 (|x - z| - 2 eps_eff)^{delta - 3}` when
    /// `|x - z| > 2 eps_eff`, `eps_eff = max(|hx|, |hz|)`.
    pub remainder_bound: Option<f64>,
}

/// Expansion
/// `f1 + C delta |d|^{delta-1} Dd_V + 2 s . Ds
///  + C/2 delta |d|^{delta-2} [(delta-1) Dd_V^2 + |Dd_perp|^2] + |Ds|^2`
/// with `d = x - z`, `s = x + z`, `Dd = hx - hz`, `Ds = hx + hz`.
pub fn taylor_f1(
    x: &[f64],
    z: &[f64],
    hx: &[f64],
    hz: &[f64],
    c: f64,
    delta: f64,
) -> Result<TaylorExpansion, ComparisonError> {
    let g = step_geometry(x, z, hx, hz).ok_or(ComparisonError::Coincident)?;
    let n = x.len();
    let mut s_ds = 0.0;
    let mut ds2 = 0.0;
    for i in 0..n {
        let ds = hx[i] + hz[i];
        s_ds += (x[i] + z[i]) * ds;
        ds2 += ds * ds;
    }
    let first = c * delta * g.dist.powf(delta - 1.0) * g.dd_v + 2.0 * s_ds;
    let second = 0.5 * c * delta * g.dist.powf(delta - 2.0) * ((delta - 1.0) * g.dd_v * g.dd_v + g.dd_perp2) + ds2;
    let eps_eff = linalg::norm(hx).max(linalg::norm(hz));
    let h_norm = (linalg::dot(hx, hx) + linalg::dot(hz, hz)).sqrt();
    let remainder_bound = (g.dist > 2.0 * eps_eff).then(|| c * h_norm.powi(3) * (g.dist - 2.0 * eps_eff).powf(delta - 3.0));
    Ok(TaylorExpansion {
        value: eval_f1(x, z, c, delta) + first + second,
        first_order: first,
        second_order: second,
        remainder_bound,
    })
}

/// Exact remainder `f1(x + hx, z + hz) - expansion`, evaluated stably.
///
/// The `|x + z|^2` part is quadratic, so only the radial part contributes:
/// `C |d|^delta [(1+u)^{delta/2} - 1 - delta a - delta/2 ((delta-1) a^2 + b^2)]`.
pub fn taylor_f1_remainder(
    x: &[f64],
    z: &[f64],
    hx: &[f64],
    hz: &[f64],
    c: f64,
    delta: f64,
) -> Result<f64, ComparisonError> {
    let g = step_geometry(x, z, hx, hz).ok_or(ComparisonError::Coincident)?;
    let (a, b2, u) = (g.a, g.b2, g.u);
    let half = 0.5 * delta;
    let bracket = if u.abs() < 0.1 {
        // binomial tail from the cubic term, plus the quadratic mismatch
        // between u^2 and 4 a^2
        let mut tail = 0.0;
        let mut coef = half * (half - 1.0) * (half - 2.0) / 6.0;
        let mut power = u * u * u;
        let mut k = 3.0;
        loop {
            let term = coef * power;
            tail += term;
            if term.abs() <= 1e-19 * tail.abs() || k > 200.0 {
                break;
            }
            coef *= (half - k) / (k + 1.0);
            power *= u;
            k += 1.0;
        }
        let w = a * a + b2;
        let c2 = delta * (delta - 2.0) / 8.0;
        tail + c2 * (4.0 * a * w + w * w)
    } else {
        (half * u.ln_1p()).exp_m1() - delta * a - half * ((delta - 1.0) * a * a + b2)
    };
    Ok(c * g.dist.powf(delta) * bracket)
}

/// `10 eps^2 |x - z|^{delta - 2}`, valid when `|x - z| > N eps / 10` and
/// `N >= 100 C / delta`.
pub fn error2_bound(x: &[f64], z: &[f64], epsilon: f64, params: &ComparisonParams) -> Result<f64, ComparisonError> {
    let d = linalg::dist(x, z);
    let threshold = params.n_annuli as f64 * epsilon / 10.0;
    if d <= threshold {
        return Err(ComparisonError::RegimeViolated {
            distance: d,
            reason: format!("need |x - z| > N eps / 10 = {threshold}"),
        });
    }
    if (params.n_annuli as f64) < 100.0 * params.c / params.delta {
        return Err(ComparisonError::RegimeViolated {
            distance: d,
            reason: "need N >= 100 C / delta".into(),
        });
    }
    Ok(10.0 * epsilon * epsilon * d.powf(params.delta - 2.0))
}

/// `(2 C eps^delta + 16 eps, 3 C eps^delta)`: bounds on the change of `f1`
/// over one step of size eps from points of the unit ball.
pub fn perusperus_bound(params: &ComparisonParams) -> Result<(f64, f64), ComparisonError> {
    let eps = params.epsilon;
    if eps >= 1.0 {
        return Err(ComparisonError::EpsilonTooLarge(eps));
    }
    let e = eps.powf(params.delta);
    Ok((2.0 * params.c * e + 16.0 * eps, 3.0 * params.c * e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk() -> ComparisonParams {
        ComparisonParams::desk(2, DESK_DEFAULTS)
    }

    #[test]
    fn f1_examples() {
        assert!((eval_f1(&[0.5, 0.0], &[-0.5, 0.0], 10.0, 0.5) - 10.0).abs() < 1e-14);
        assert!((eval_f1(&[0.3, 0.0], &[0.3, 0.0], 10.0, 0.5) - 0.36).abs() < 1e-15);
    }

    #[test]
    fn annulus_examples() {
        let o = [0.0, 0.0];
        assert_eq!(annulus_index(&o, &o, 0.1, 5), Annulus::Index(0));
        assert_eq!(annulus_index(&[0.015, 0.0], &o, 0.1, 5), Annulus::Index(2));
        assert_eq!(annulus_index(&[0.0501, 0.0], &o, 0.1, 5), Annulus::Outside);
        assert_eq!(annulus_index(&[0.05, 0.0], &o, 0.1, 5), Annulus::Index(5));
        // exact thresholds belong to the inner annulus
        assert_eq!(annulus_of_distance(3.0 * 0.1 / 10.0, 0.1, 5), Annulus::Index(3));
    }

    #[test]
    fn f2_example() {
        let p = ComparisonParams {
            n: 2,
            delta: 0.5,
            c: 2.0,
            omega: 0.1,
            n_annuli: 5,
            epsilon: 0.1,
            theta: 0.1,
            mode: ParamMode::DeskScale,
        };
        let v = eval_f2(&[0.015, 0.0], &[0.0, 0.0], &p);
        assert!((v - 64.0 * 0.1f64.sqrt()).abs() < 1e-12);
        assert!((v - 20.2386).abs() < 1e-4);
        assert_eq!(eval_f2(&[0.6, 0.0], &[0.0, 0.0], &p), 0.0);
        assert_eq!(eval_f2(&[0.0, 0.0], &[0.0, 0.0], &p), 1024.0 * 0.1f64.sqrt());
    }

    #[test]
    fn paper_strict_defaults() {
        let p = default_params(2, ParamMode::PaperStrict, None).unwrap();
        assert_eq!(p.delta, 0.025);
        assert_eq!(p.omega, 0.025);
        assert!((p.c - 6.4e14).abs() < 1.0);
        assert!((p.n_annuli as f64 - 2.56e18).abs() < 1e6);
        p.validate().unwrap();
        let p3 = default_params(3, ParamMode::PaperStrict, None).unwrap();
        assert_eq!(p3.delta, 0.02);
        assert_eq!(p3.omega, 1.0 / 64.0);
        assert!((p3.c - 1.6e15).abs() < 10.0);
        assert!(default_params(2, ParamMode::PaperStrict, Some(1.5)).is_err());
    }

    #[test]
    fn desk_defaults_validate() {
        desk().validate().unwrap();
        assert!(desk().f2_max().is_finite());
    }

    #[test]
    fn perusperus_example() {
        let mut p = desk();
        p.c = 10.0;
        p.delta = 0.5;
        p.epsilon = 0.01;
        let (fine, coarse) = perusperus_bound(&p).unwrap();
        assert!((fine - 2.16).abs() < 1e-12);
        assert!((coarse - 3.0).abs() < 1e-12);
        p.epsilon = 1.0;
        assert_eq!(perusperus_bound(&p), Err(ComparisonError::EpsilonTooLarge(1.0)));
    }

    #[test]
    fn increment_matches_direct_difference() {
        let (x, z) = ([0.3, -0.2], [-0.1, 0.4]);
        let (hx, hz) = ([0.01, 0.02], [-0.03, 0.005]);
        let direct = eval_f1(&[0.31, -0.18], &[-0.13, 0.405], 7.0, 0.3) - eval_f1(&x, &z, 7.0, 0.3);
        assert!((f1_increment(&x, &z, &hx, &hz, 7.0, 0.3) - direct).abs() < 1e-13);
    }

    #[test]
    fn stable_remainder_matches_direct_when_well_conditioned() {
        let (x, z) = ([0.3, -0.2, 0.1], [-0.1, 0.4, 0.0]);
        let (hx, hz) = ([0.05, 0.02, -0.04], [-0.03, 0.05, 0.02]);
        let e = taylor_f1(&x, &z, &hx, &hz, 3.0, 0.4).unwrap();
        let moved_x: Vec<f64> = x.iter().zip(&hx).map(|(a, b)| a + b).collect();
        let moved_z: Vec<f64> = z.iter().zip(&hz).map(|(a, b)| a + b).collect();
        let direct = eval_f1(&moved_x, &moved_z, 3.0, 0.4) - e.value;
        let stable = taylor_f1_remainder(&x, &z, &hx, &hz, 3.0, 0.4).unwrap();
        assert!((direct - stable).abs() < 1e-12, "{direct} vs {stable}");
    }
}
