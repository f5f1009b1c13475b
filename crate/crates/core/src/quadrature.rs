//! Quadrature rules on intervals, spheres, balls and hyperplane disks.
//!
//! All ball and disk rules return offsets relative to the centre together with
//! weights summing to one, so applying a rule is a weighted mean. Every rule
//! built here is point-symmetric (`h` and `-h` carry equal weight), which makes
//! it exact on affine integrands.

use rand::Rng;

use crate::geometry::{self, sample_ball_into};
use crate::linalg;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending nodes.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 1 { x } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = mf * (x * pm - pm1) / (x * x - 1.0);
            let step = pm / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

/// Point-symmetric set of unit directions in `R^n`.
///
/// * `n = 2`: `count` equally spaced angles (rounded up to an even count).
/// * `n = 3`: a Fibonacci spiral on the upper hemisphere plus antipodes.
/// * `n >= 4`: the `2n` coordinate directions, then normalised `{-1,1}^n`
///   vertices until `count` is reached.
pub fn direction_set(n: usize, count: usize) -> Vec<Vec<f64>> {
    assert!(n >= 2);
    let count = count.max(2);
    match n {
        2 => {
            let m = count + count % 2;
            (0..m)
                .map(|k| {
                    let t = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect()
        }
        3 => {
            let half = count.div_ceil(2);
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            let mut upper = Vec::with_capacity(half);
            for k in 0..half {
                let zc = 1.0 - (k as f64 + 0.5) / half as f64;
                let r = (1.0 - zc * zc).sqrt();
                let phi = golden * k as f64;
                upper.push(vec![r * phi.cos(), r * phi.sin(), zc]);
            }
            let lower: Vec<Vec<f64>> = upper.iter().map(|d| linalg::scale(d, -1.0)).collect();
            upper.into_iter().chain(lower).collect()
        }
        _ => {
            let mut dirs = Vec::new();
            for axis in 0..n {
                for sign in [1.0, -1.0] {
                    let mut e = vec![0.0; n];
                    e[axis] = sign;
                    dirs.push(e);
                }
            }
            let inv = 1.0 / (n as f64).sqrt();
            let mut mask = 0usize;
            while dirs.len() < count && mask < (1usize << n) / 2 {
                let v: Vec<f64> = (0..n)
                    .map(|i| if mask >> i & 1 == 1 { -inv } else { inv })
                    .collect();
                dirs.push(linalg::scale(&v, -1.0));
                dirs.push(v);
                mask += 1;
            }
            dirs
        }
    }
}

/// Weighted mean rule over a ball (offsets relative to the centre).
#[derive(Debug, Clone)]
pub struct BallRule {
    pub radius: f64,
    pub offsets: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl BallRule {
    /// Equal weights on the lattice points of the closed ball.
    pub fn lattice(n: usize, spacing: f64, radius: f64) -> Self {
        let offsets: Vec<Vec<f64>> = geometry::lattice_ball_offsets(n, spacing, radius)
            .into_iter()
            .map(|o| o.into_iter().map(|k| k as f64 * spacing).collect())
            .collect();
        let w = 1.0 / offsets.len() as f64;
        BallRule {
            radius,
            weights: vec![w; offsets.len()],
            offsets,
        }
    }

    /// Product rule: Gauss–Legendre in the radius with weight `r^{n-1}`, times
    /// a direction set. Exact for radial polynomials up to the radial degree
    /// and, for `n = 2`, trigonometric degree below the direction count.
    pub fn polar(n: usize, radius: f64, radial_nodes: usize, directions: usize) -> Self {
        let (t, w) = gauss_legendre(radial_nodes);
        let dirs = direction_set(n, directions);
        let mut offsets = Vec::with_capacity(t.len() * dirs.len());
        let mut weights = Vec::with_capacity(t.len() * dirs.len());
        // map [-1, 1] to [0, 1]; density n r^{n-1} integrates to one
        for (ti, wi) in t.iter().zip(&w) {
            let r = 0.5 * (ti + 1.0);
            let wr = 0.5 * wi * n as f64 * r.powi(n as i32 - 1);
            for d in &dirs {
                offsets.push(linalg::scale(d, r * radius));
                weights.push(wr / dirs.len() as f64);
            }
        }
        BallRule {
            radius,
            offsets,
            weights,
        }
    }

    /// Antithetic Monte Carlo rule: `pairs` uniform samples and their negatives.
    pub fn monte_carlo<R: Rng + ?Sized>(n: usize, radius: f64, pairs: usize, rng: &mut R) -> Self {
        let mut offsets = Vec::with_capacity(2 * pairs);
        let mut h = vec![0.0; n];
        for _ in 0..pairs {
            sample_ball_into(rng, radius, &mut h);
            offsets.push(h.clone());
            offsets.push(linalg::scale(&h, -1.0));
        }
        let w = 1.0 / offsets.len() as f64;
        BallRule {
            radius,
            weights: vec![w; offsets.len()],
            offsets,
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Weighted mean of `f` over the rule nodes around `x`.
    pub fn mean(&self, x: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let mut y = vec![0.0; x.len()];
        let mut acc = crate::stats::CompensatedSum::new();
        for (h, w) in self.offsets.iter().zip(&self.weights) {
            linalg::axpy_into(&mut y, x, 1.0, h);
            acc.add(w * f(&y));
        }
        acc.value()
    }
}

/// Mean rule over the unit `(n-1)`-disk, stored in hyperplane coordinates.
#[derive(Debug, Clone)]
pub struct DiskRule {
    pub n: usize,
    pub local: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl DiskRule {
    /// `n = 2`: Gauss–Legendre on the segment `[-1, 1]`.
    /// `n = 3`: polar rule, `radial` Gauss–Legendre radii times `angular` angles.
    /// `n >= 4`: `radial` radii times the coordinate directions of `R^{n-1}`.
    pub fn new(n: usize, radial: usize, angular: usize) -> Self {
        assert!(n >= 2);
        let (t, w) = gauss_legendre(radial);
        if n == 2 {
            return DiskRule {
                n,
                local: t.iter().map(|&ti| vec![ti]).collect(),
                weights: w.iter().map(|wi| 0.5 * wi).collect(),
            };
        }
        let m = n - 1;
        let dirs = direction_set(m, if m == 2 { angular } else { 2 * m });
        let mut local = Vec::new();
        let mut weights = Vec::new();
        for (ti, wi) in t.iter().zip(&w) {
            let r = 0.5 * (ti + 1.0);
            let wr = 0.5 * wi * m as f64 * r.powi(m as i32 - 1);
            for d in &dirs {
                local.push(linalg::scale(d, r));
                weights.push(wr / dirs.len() as f64);
            }
        }
        DiskRule { n, local, weights }
    }

    /// Offsets of the disk of `radius` orthogonal to the unit vector `normal`.
    pub fn embed(&self, normal: &[f64], radius: f64) -> Vec<Vec<f64>> {
        let basis = linalg::hyperplane_basis(normal);
        self.local
            .iter()
            .map(|c| {
                let mut out = vec![0.0; self.n];
                for (ci, b) in c.iter().zip(&basis) {
                    for (o, bi) in out.iter_mut().zip(b) {
                        *o += radius * ci * bi;
                    }
                }
                out
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.local.len()
    }

    pub fn is_empty(&self) -> bool {
        self.local.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for m in [1, 2, 5, 9, 16] {
            let (x, w) = gauss_legendre(m);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for deg in 0..(2 * m) {
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "m={m} deg={deg}");
            }
        }
    }

    #[test]
    fn direction_sets_are_unit_and_symmetric() {
        for (n, count) in [(2, 64), (3, 128), (4, 20), (5, 10)] {
            let dirs = direction_set(n, count);
            let sum: Vec<f64> = (0..n).map(|i| dirs.iter().map(|d| d[i]).sum()).collect();
            assert!(linalg::norm(&sum) < 1e-12);
            for d in &dirs {
                assert!((linalg::norm(d) - 1.0).abs() < 1e-14);
                let neg = linalg::scale(d, -1.0);
                assert!(dirs.iter().any(|e| linalg::dist(e, &neg) < 1e-14));
            }
        }
        assert_eq!(direction_set(3, 128).len(), 128);
    }

    #[test]
    fn polar_rule_second_moment() {
        for n in [2, 3, 4] {
            let rule = BallRule::polar(n, 0.7, 8, 32);
            assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            let m = rule.mean(&vec![0.0; n], |y| linalg::dot(y, y));
            // mean |h|^2 = n * eps^2 / (n + 2)
            let exact = n as f64 * 0.49 / (n as f64 + 2.0);
            assert!((m - exact).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn disk_rule_second_moment() {
        for n in [2, 3, 4] {
            let rule = DiskRule::new(n, 9, 16);
            let nu = linalg::unit(&vec![1.0; n]).unwrap();
            let pts = rule.embed(&nu, 0.5);
            let mut m = 0.0;
            for (p, w) in pts.iter().zip(&rule.weights) {
                assert!(linalg::dot(p, &nu).abs() < 1e-14);
                m += w * linalg::dot(p, p);
            }
            assert!((m - geometry::disk_second_moment(n, 0.5)).abs() < 1e-13, "n={n}");
        }
    }
}
