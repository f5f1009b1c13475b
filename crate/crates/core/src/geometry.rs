//! Lattice domains, boundary strips, value fields and ball geometry.
//!
//! Grid points are the lattice `h * Z^n`, so the origin is always a lattice
//! point and reflections through it map the lattice onto itself. A domain
//! stores its interior points (inside the open shape) followed, in the same
//! lexicographic enumeration, by the strip: every non-interior lattice point
//! within the strip width of some interior point.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg;

/// Relative tolerance for closed-ball membership.
pub const BALL_TOL: f64 = 1e-12;

const NO_POINT: u32 = u32::MAX;
const MAX_LATTICE_CELLS: usize = 60_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("spacing must be positive and finite, got {0}")]
    InvalidSpacing(f64),
    #[error("spacing {spacing} too coarse for epsilon {epsilon}: need epsilon >= 3 * spacing")]
    CoarseSpacing { spacing: f64, epsilon: f64 },
    #[error("strip width {width} is smaller than epsilon {epsilon}")]
    StripTooNarrow { width: f64, epsilon: f64 },
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("shape is malformed: {0}")]
    BadShape(String),
    #[error("shape has no interior lattice points at spacing {0}")]
    EmptyInterior(f64),
    #[error("lattice bounding box needs {0} cells, which exceeds the supported size")]
    TooLarge(usize),
    #[error("point {0:?} is not a lattice point of the domain")]
    NotAGridPoint(Vec<f64>),
    #[error("field has {got} values but the domain has {expected} points")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value {value} at point {point:?}")]
    NonFinite { point: Vec<f64>, value: f64 },
}

type Predicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Description of the open set whose lattice points form the interior.
#[derive(Clone)]
pub enum Shape {
    /// Open ball.
    Ball { center: Vec<f64>, radius: f64 },
    /// Open axis-aligned box.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Arbitrary predicate, restricted to a bounding box.
    Mask {
        lower: Vec<f64>,
        upper: Vec<f64>,
        inside: Predicate,
        label: String,
    },
}

impl Shape {
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        Shape::Ball { center, radius }
    }

    pub fn unit_ball(n: usize) -> Self {
        Shape::Ball {
            center: vec![0.0; n],
            radius: 1.0,
        }
    }

    pub fn cube(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Shape::Box { lower, upper }
    }

    pub fn mask(
        lower: Vec<f64>,
        upper: Vec<f64>,
        label: impl Into<String>,
        inside: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        Shape::Mask {
            lower,
            upper,
            inside: Arc::new(inside),
            label: label.into(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Shape::Ball { center, .. } => center.len(),
            Shape::Box { lower, .. } | Shape::Mask { lower, .. } => lower.len(),
        }
    }

    fn validate(&self) -> Result<(), GeometryError> {
        match self {
            Shape::Ball { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0) || center.iter().any(|c| !c.is_finite()) {
                    return Err(GeometryError::BadShape(format!("{self}")));
                }
            }
            Shape::Box { lower, upper } | Shape::Mask { lower, upper, .. } => {
                if lower.len() != upper.len()
                    || lower.iter().zip(upper).any(|(l, u)| !(l.is_finite() && u.is_finite() && l < u))
                {
                    return Err(GeometryError::BadShape(format!("{self}")));
                }
            }
        }
        Ok(())
    }

    /// Bounding box `(lower, upper)`.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Shape::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            Shape::Box { lower, upper } | Shape::Mask { lower, upper, .. } => (lower.clone(), upper.clone()),
        }
    }

    /// Membership in the open set, shrunk by `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            Shape::Ball { center, radius } => linalg::dist(x, center) < radius - tol,
            Shape::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(xi, (l, u))| *xi > l + tol && *xi < u - tol),
            Shape::Mask {
                lower, upper, inside, ..
            } => {
                x.iter()
                    .zip(lower.iter().zip(upper))
                    .all(|(xi, (l, u))| *xi > l + tol && *xi < u - tol)
                    && inside(x)
            }
        }
    }
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Ball { center, radius } => write!(f, "ball(center={center:?}, radius={radius})"),
            Shape::Box { lower, upper } => write!(f, "box(lower={lower:?}, upper={upper:?})"),
            Shape::Mask {
                lower, upper, label, ..
            } => write!(f, "mask({label}, lower={lower:?}, upper={upper:?})"),
        }
    }
}

/// Integer offsets of a lattice ball, plus their linear offsets in the dense
/// index of one particular domain.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub radius: f64,
    pub offsets: Vec<Vec<i64>>,
    pub linear: Vec<isize>,
}

/// Lattice discretisation of a shape plus its boundary strip.
#[derive(Debug, Clone)]
pub struct GridDomain {
    dim: usize,
    spacing: f64,
    epsilon: f64,
    strip_width: f64,
    shape: Shape,
    kmin: Vec<i64>,
    extent: Vec<usize>,
    strides: Vec<usize>,
    slot: Vec<u32>,
    dense_of: Vec<usize>,
    coords: Vec<f64>,
    interior: Vec<bool>,
    interior_ids: Vec<usize>,
    strip_ids: Vec<usize>,
}

/// Builds the lattice domain with strip width `epsilon`.
pub fn build_grid_domain(shape: Shape, spacing: f64, epsilon: f64) -> Result<GridDomain, GeometryError> {
    GridDomain::with_strip(shape, spacing, epsilon, epsilon)
}

impl GridDomain {
    /// Builds the domain with an explicit strip width `strip_width >= epsilon`.
    ///
    /// Operators that interpolate between lattice points need a strip one
    /// lattice diagonal wider than epsilon.
    pub fn with_strip(shape: Shape, spacing: f64, epsilon: f64, strip_width: f64) -> Result<Self, GeometryError> {
        shape.validate()?;
        let n = shape.dim();
        if n < 2 {
            return Err(GeometryError::DimensionTooSmall(n));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(GeometryError::InvalidSpacing(spacing));
        }
        if !(epsilon.is_finite() && epsilon * (1.0 + BALL_TOL) >= 3.0 * spacing) {
            return Err(GeometryError::CoarseSpacing { spacing, epsilon });
        }
        if !(strip_width.is_finite() && strip_width >= epsilon) {
            return Err(GeometryError::StripTooNarrow {
                width: strip_width,
                epsilon,
            });
        }

        let (lo, hi) = shape.bounds();
        let kmin: Vec<i64> = lo
            .iter()
            .map(|l| ((l - strip_width) / spacing).floor() as i64 - 1)
            .collect();
        let kmax: Vec<i64> = hi
            .iter()
            .map(|h| ((h + strip_width) / spacing).ceil() as i64 + 1)
            .collect();
        let extent: Vec<usize> = kmin.iter().zip(&kmax).map(|(a, b)| (b - a + 1) as usize).collect();
        let cells = extent.iter().try_fold(1usize, |acc, &e| acc.checked_mul(e));
        let cells = match cells {
            Some(c) if c <= MAX_LATTICE_CELLS => c,
            Some(c) => return Err(GeometryError::TooLarge(c)),
            None => return Err(GeometryError::TooLarge(usize::MAX)),
        };
        let mut strides = vec![1usize; n];
        for axis in (0..n - 1).rev() {
            strides[axis] = strides[axis + 1] * extent[axis + 1];
        }

        // 0 = absent, 1 = interior, 2 = strip
        let mut mark = vec![0u8; cells];
        let tol = 1e-9 * spacing;
        let mut k = kmin.clone();
        let mut x = vec![0.0; n];
        for cell in 0..cells {
            for axis in 0..n {
                x[axis] = k[axis] as f64 * spacing;
            }
            if shape.contains(&x, tol) {
                mark[cell] = 1;
            }
            increment(&mut k, &kmin, &extent);
        }
        if !mark.contains(&1) {
            return Err(GeometryError::EmptyInterior(spacing));
        }

        let strip_stencil = lattice_ball_offsets(n, spacing, strip_width);
        let strip_linear: Vec<isize> = strip_stencil
            .iter()
            .map(|o| linear_offset(o, &strides))
            .collect();
        for cell in 0..cells {
            if mark[cell] != 1 {
                continue;
            }
            for &lo in &strip_linear {
                let other = (cell as isize + lo) as usize;
                if mark[other] == 0 {
                    mark[other] = 2;
                }
            }
        }

        let mut slot = vec![NO_POINT; cells];
        let mut dense_of = Vec::new();
        let mut coords = Vec::new();
        let mut interior = Vec::new();
        let mut interior_ids = Vec::new();
        let mut strip_ids = Vec::new();
        let mut k = kmin.clone();
        for cell in 0..cells {
            if mark[cell] != 0 {
                let id = dense_of.len();
                slot[cell] = id as u32;
                dense_of.push(cell);
                coords.extend(k.iter().map(|&ki| ki as f64 * spacing));
                let inside = mark[cell] == 1;
                interior.push(inside);
                if inside {
                    interior_ids.push(id);
                } else {
                    strip_ids.push(id);
                }
            }
            increment(&mut k, &kmin, &extent);
        }

        Ok(GridDomain {
            dim: n,
            spacing,
            epsilon,
            strip_width,
            shape,
            kmin,
            extent,
            strides,
            slot,
            dense_of,
            coords,
            interior,
            interior_ids,
            strip_ids,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn strip_width(&self) -> f64 {
        self.strip_width
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Number of interior plus strip points.
    pub fn len(&self) -> usize {
        self.interior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interior.is_empty()
    }

    pub fn interior_count(&self) -> usize {
        self.interior_ids.len()
    }

    pub fn strip_count(&self) -> usize {
        self.strip_ids.len()
    }

    pub fn interior_ids(&self) -> &[usize] {
        &self.interior_ids
    }

    pub fn strip_ids(&self) -> &[usize] {
        &self.strip_ids
    }

    pub fn is_interior(&self, id: usize) -> bool {
        self.interior[id]
    }

    pub fn point(&self, id: usize) -> &[f64] {
        &self.coords[id * self.dim..(id + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    /// Point id of the lattice point with integer coordinates `k`.
    pub fn id_of_lattice(&self, k: &[i64]) -> Option<usize> {
        let mut cell = 0usize;
        for axis in 0..self.dim {
            let rel = k[axis] - self.kmin[axis];
            if rel < 0 || rel as usize >= self.extent[axis] {
                return None;
            }
            cell += rel as usize * self.strides[axis];
        }
        let s = self.slot[cell];
        (s != NO_POINT).then_some(s as usize)
    }

    /// Point id of `x` if it is (up to rounding) a lattice point of the domain.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim {
            return None;
        }
        let mut k = Vec::with_capacity(self.dim);
        for &xi in x {
            let t = xi / self.spacing;
            let r = t.round();
            if (t - r).abs() > 1e-7 {
                return None;
            }
            k.push(r as i64);
        }
        self.id_of_lattice(&k)
    }

    /// Lattice ball of the given radius with linear offsets for this domain.
    pub fn stencil(&self, radius: f64) -> Stencil {
        let offsets = lattice_ball_offsets(self.dim, self.spacing, radius);
        let linear = offsets.iter().map(|o| linear_offset(o, &self.strides)).collect();
        Stencil {
            radius,
            offsets,
            linear,
        }
    }

    /// Offset in the dense index corresponding to the integer vector `offset`.
    pub fn linear_offset(&self, offset: &[i64]) -> isize {
        linear_offset(offset, &self.strides)
    }

    /// Neighbour id through a linear stencil offset, if that point exists.
    #[inline]
    pub fn neighbor(&self, id: usize, linear: isize) -> Option<usize> {
        let cell = self.dense_of[id] as isize + linear;
        if cell < 0 || cell as usize >= self.slot.len() {
            return None;
        }
        let s = self.slot[cell as usize];
        (s != NO_POINT).then_some(s as usize)
    }

    /// Ids of the domain points in the closed ball of `radius` around point `id`.
    pub fn neighbor_ids(&self, id: usize, stencil: &Stencil) -> Vec<usize> {
        stencil
            .linear
            .iter()
            .filter_map(|&lo| self.neighbor(id, lo))
            .collect()
    }

    /// Multilinear interpolation of per-point `values` at `y`.
    ///
    /// Returns `None` if a corner with positive weight is not a domain point.
    pub fn interpolate(&self, values: &[f64], y: &[f64]) -> Option<f64> {
        let n = self.dim;
        debug_assert!(n <= 16);
        let mut base = [0i64; 16];
        let mut frac = [0f64; 16];
        for axis in 0..n {
            let t = y[axis] / self.spacing;
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
        let mut total = 0.0;
        let mut corner = [0i64; 16];
        for mask in 0..(1usize << n) {
            let mut w = 1.0;
            for axis in 0..n {
                if mask >> axis & 1 == 1 {
                    w *= frac[axis];
                    corner[axis] = base[axis] + 1;
                } else {
                    w *= 1.0 - frac[axis];
                    corner[axis] = base[axis];
                }
                if w == 0.0 {
                    break;
                }
            }
            if w == 0.0 {
                continue;
            }
            let id = self.id_of_lattice(&corner[..n])?;
            total += w * values[id];
        }
        Some(total)
    }
}

fn increment(k: &mut [i64], kmin: &[i64], extent: &[usize]) {
    for axis in (0..k.len()).rev() {
        k[axis] += 1;
        if ((k[axis] - kmin[axis]) as usize) < extent[axis] {
            return;
        }
        k[axis] = kmin[axis];
    }
}

fn linear_offset(offset: &[i64], strides: &[usize]) -> isize {
    offset.iter().zip(strides).map(|(o, s)| *o as isize * *s as isize).sum()
}

/// Integer vectors `o` with `|o| * spacing <= radius` (closed, with relative
/// tolerance [`BALL_TOL`]), in lexicographic order.
pub fn lattice_ball_offsets(n: usize, spacing: f64, radius: f64) -> Vec<Vec<i64>> {
    let reach = radius * (1.0 + BALL_TOL);
    let r = (reach / spacing).floor() as i64;
    let limit = reach * reach;
    let mut out = Vec::new();
    let mut o = vec![-r; n];
    loop {
        let d2: f64 = o.iter().map(|&c| (c as f64 * spacing).powi(2)).sum();
        if d2 <= limit {
            out.push(o.clone());
        }
        let mut axis = n;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            if o[axis] < r {
                o[axis] += 1;
                break;
            }
            o[axis] = -r;
        }
    }
}

/// Domain points in the closed `epsilon`-ball around the lattice point `x`,
/// in lexicographic order.
pub fn ball_neighbors(domain: &GridDomain, x: &[f64], epsilon: f64) -> Result<Vec<Vec<f64>>, GeometryError> {
    let id = domain
        .locate(x)
        .ok_or_else(|| GeometryError::NotAGridPoint(x.to_vec()))?;
    let stencil = domain.stencil(epsilon.max(0.0));
    Ok(domain
        .neighbor_ids(id, &stencil)
        .into_iter()
        .map(|j| domain.point(j).to_vec())
        .collect())
}

/// Mean of `h_V^2` over the solid ball `B(0, epsilon)` in `R^n` for a fixed
/// unit direction `V`: `epsilon^2 / (n + 2)`.
pub fn ball_second_moment(n: usize, epsilon: f64) -> f64 {
    epsilon * epsilon / (n as f64 + 2.0)
}

/// Mean of `|h|^2` over the `(n-1)`-dimensional disk of radius `epsilon`:
/// `(n - 1) epsilon^2 / (n + 1)`.
pub fn disk_second_moment(n: usize, epsilon: f64) -> f64 {
    (n as f64 - 1.0) * epsilon * epsilon / (n as f64 + 1.0)
}

/// Writes a uniform sample of the unit sphere `S^{n-1}` into `out`.
pub fn sample_sphere_into<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        let mut r2 = 0.0;
        for o in out.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *o = g;
            r2 += g * g;
        }
        if r2 > 1e-300 {
            let inv = 1.0 / r2.sqrt();
            out.iter_mut().for_each(|o| *o *= inv);
            return;
        }
    }
}

/// Writes a uniform sample of the open ball `B(0, radius)` into `out`.
pub fn sample_ball_into<R: Rng + ?Sized>(rng: &mut R, radius: f64, out: &mut [f64]) {
    let n = out.len();
    if n <= 4 {
        loop {
            let mut r2 = 0.0;
            for o in out.iter_mut() {
                let c: f64 = rng.gen_range(-1.0..1.0);
                *o = c;
                r2 += c * c;
            }
            if r2 < 1.0 {
                out.iter_mut().for_each(|o| *o *= radius);
                return;
            }
        }
    }
    sample_sphere_into(rng, out);
    let u: f64 = rng.gen();
    let r = radius * u.powf(1.0 / n as f64);
    out.iter_mut().for_each(|o| *o *= r);
}

pub fn sample_ball<R: Rng + ?Sized>(rng: &mut R, n: usize, radius: f64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    sample_ball_into(rng, radius, &mut out);
    out
}

/// Uniform sample of the `(n-1)`-disk of `radius` orthogonal to the unit
/// vector `normal`, given an orthonormal `basis` of that hyperplane.
pub fn sample_disk_into<R: Rng + ?Sized>(rng: &mut R, basis: &[Vec<f64>], radius: f64, out: &mut [f64]) {
    let mut local = vec![0.0; basis.len()];
    sample_ball_into(rng, radius, &mut local);
    out.iter_mut().for_each(|o| *o = 0.0);
    for (c, b) in local.iter().zip(basis) {
        for (o, bi) in out.iter_mut().zip(b) {
            *o += c * bi;
        }
    }
}

/// Per-point values on a [`GridDomain`]; strip values are the Dirichlet data.
#[derive(Debug, Clone)]
pub struct ValueField {
    domain: Arc<GridDomain>,
    values: Vec<f64>,
}

impl ValueField {
    pub fn new(domain: Arc<GridDomain>, values: Vec<f64>) -> Result<Self, GeometryError> {
        if values.len() != domain.len() {
            return Err(GeometryError::LengthMismatch {
                expected: domain.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite {
                point: domain.point(i).to_vec(),
                value: values[i],
            });
        }
        Ok(Self { domain, values })
    }

    /// Field with `f` evaluated at every interior and strip point.
    pub fn from_fn(domain: Arc<GridDomain>, f: impl Fn(&[f64]) -> f64) -> Result<Self, GeometryError> {
        let values = domain.points().map(&f).collect();
        Self::new(domain, values)
    }

    /// Strip values from `boundary`, interior values set to `interior`.
    pub fn with_strip_data(
        domain: Arc<GridDomain>,
        boundary: impl Fn(&[f64]) -> f64,
        interior: f64,
    ) -> Result<Self, GeometryError> {
        let values = (0..domain.len())
            .map(|id| {
                if domain.is_interior(id) {
                    interior
                } else {
                    boundary(domain.point(id))
                }
            })
            .collect();
        Self::new(domain, values)
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, id: usize) -> f64 {
        self.values[id]
    }

    /// Value at a lattice point.
    pub fn at(&self, x: &[f64]) -> Option<f64> {
        self.domain.locate(x).map(|id| self.values[id])
    }

    /// Multilinear interpolation at an arbitrary point.
    pub fn interpolate(&self, y: &[f64]) -> Option<f64> {
        self.domain.interpolate(&self.values, y)
    }

    /// Mean of the strip values.
    pub fn strip_mean(&self) -> f64 {
        let mut sum = crate::stats::CompensatedSum::new();
        for &id in self.domain.strip_ids() {
            sum.add(self.values[id]);
        }
        sum.value() / self.domain.strip_count().max(1) as f64
    }

    /// `(min, max)` of the strip values.
    pub fn strip_range(&self) -> (f64, f64) {
        self.domain
            .strip_ids()
            .iter()
            .map(|&id| self.values[id])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }

    /// Replaces every interior value by `value`, keeping strip data.
    pub fn fill_interior(&mut self, value: f64) {
        for &id in self.domain.interior_ids() {
            self.values[id] = value;
        }
    }

    /// Largest absolute difference between the two fields over all points.
    pub fn sup_distance(&self, other: &ValueField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn unit_square_count(h: f64) -> usize {
        // independent enumeration of lattice points strictly inside (0,1)^2
        let mut count = 0;
        let kmax = (1.0 / h).round() as i64 + 2;
        for i in -2..=kmax {
            for j in -2..=kmax {
                let (x, y) = (i as f64 * h, j as f64 * h);
                let inside = |t: f64| t > 1e-9 && t < 1.0 - 1e-9;
                if inside(x) && inside(y) {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn unit_disk_domain_has_interior_and_epsilon_strip() {
        let d = build_grid_domain(Shape::unit_ball(2), 0.02, 0.1).unwrap();
        assert!(d.interior_count() > 0);
        assert_eq!(d.strip_width(), 0.1);
        // every strip point is within epsilon of the disk
        for &id in d.strip_ids() {
            assert!(linalg::norm(d.point(id)) <= 1.1 + 1e-9);
        }
    }

    #[test]
    fn coarse_spacing_is_rejected() {
        let err = build_grid_domain(Shape::unit_ball(2), 0.05, 0.1).unwrap_err();
        assert!(matches!(err, GeometryError::CoarseSpacing { .. }));
    }

    #[test]
    fn one_dimensional_shapes_are_rejected() {
        let err = build_grid_domain(Shape::ball(vec![0.0], 1.0), 0.01, 0.05).unwrap_err();
        assert_eq!(err, GeometryError::DimensionTooSmall(1));
    }

    #[test]
    fn empty_interior_is_rejected() {
        let tiny = Shape::ball(vec![0.005, 0.005], 0.004);
        let err = build_grid_domain(tiny, 0.01, 0.05).unwrap_err();
        assert_eq!(err, GeometryError::EmptyInterior(0.01));
    }

    #[test]
    fn box_interior_count_matches_enumeration() {
        let d = build_grid_domain(Shape::cube(vec![0.0, 0.0], vec![1.0, 1.0]), 0.01, 0.05).unwrap();
        assert_eq!(d.interior_count(), unit_square_count(0.01));
        assert_eq!(d.interior_count(), 99 * 99);
    }

    #[test]
    fn strip_covers_every_interior_ball() {
        let d = build_grid_domain(Shape::unit_ball(2), 0.05, 0.2).unwrap();
        let st = d.stencil(0.2);
        for &id in d.interior_ids() {
            assert_eq!(d.neighbor_ids(id, &st).len(), st.offsets.len());
        }
    }

    #[test]
    fn mask_shape_builds() {
        let annulus = Shape::mask(vec![-1.0, -1.0], vec![1.0, 1.0], "annulus", |x| {
            let r = linalg::norm(x);
            r > 0.3 && r < 1.0
        });
        let d = build_grid_domain(annulus, 0.05, 0.15).unwrap();
        // the rim of the hole is strip, its centre is farther than epsilon away
        let rim = d.locate(&[0.2, 0.0]).unwrap();
        assert!(!d.is_interior(rim));
        assert!(d.locate(&[0.0, 0.0]).is_none());
    }

    fn big_box() -> GridDomain {
        build_grid_domain(Shape::cube(vec![-5.0, -5.0], vec![5.0, 5.0]), 0.25, 1.0).unwrap()
    }

    #[test]
    fn ball_neighbors_five_point_stencil() {
        let d = build_grid_domain(Shape::cube(vec![-5.0, -5.0], vec![5.0, 5.0]), 1.0 / 3.0, 1.0).unwrap();
        // h = 1 is not admissible for epsilon = 1; use the lattice offsets directly
        let offs = lattice_ball_offsets(2, 1.0, 1.0);
        assert_eq!(offs, vec![vec![-1, 0], vec![0, -1], vec![0, 0], vec![0, 1], vec![1, 0]]);
        let nb = ball_neighbors(&d, &[0.0, 0.0], 1.0 / 3.0).unwrap();
        assert_eq!(nb.len(), 5);
    }

    #[test]
    fn ball_neighbors_counts_thirteen_at_half_spacing() {
        // brute force over the lattice: i^2 + j^2 <= 4
        let brute = (-3i64..=3)
            .flat_map(|i| (-3i64..=3).map(move |j| (i, j)))
            .filter(|(i, j)| i * i + j * j <= 4)
            .count();
        assert_eq!(brute, 13);
        assert_eq!(lattice_ball_offsets(2, 0.5, 1.0).len(), brute);
        let d = big_box();
        let nb = ball_neighbors(&d, &[0.0, 0.0], 0.5).unwrap();
        assert_eq!(nb.len(), brute);
    }

    #[test]
    fn ball_neighbors_degenerate_radius_is_the_point() {
        let d = big_box();
        let nb = ball_neighbors(&d, &[0.5, -0.25], 0.0).unwrap();
        assert_eq!(nb, vec![vec![0.5, -0.25]]);
    }

    #[test]
    fn ball_neighbors_is_point_symmetric() {
        let d = big_box();
        let x = [0.75, -1.25];
        let nb = ball_neighbors(&d, &x, 0.9).unwrap();
        for y in &nb {
            let mirrored: Vec<f64> = y.iter().zip(&x).map(|(yi, xi)| 2.0 * xi - yi).collect();
            assert!(nb.iter().any(|z| linalg::dist(z, &mirrored) < 1e-12));
        }
    }

    #[test]
    fn moments_match_closed_forms() {
        assert_eq!(ball_second_moment(2, 1.0), 0.25);
        assert_eq!(ball_second_moment(2, 0.0), 0.0);
        assert!((ball_second_moment(3, 0.5) - 0.05).abs() < 1e-15);
        assert_eq!(disk_second_moment(2, 0.0), 0.0);
        assert!((disk_second_moment(3, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn disk_moment_against_quadrature_oracles() {
        // n = 2: mean of t^2 over [-1, 1] by the midpoint rule
        let m = 200_000;
        let mean: f64 = (0..m)
            .map(|i| {
                let t = -1.0 + (i as f64 + 0.5) * 2.0 / m as f64;
                t * t
            })
            .sum::<f64>()
            / m as f64;
        assert!((mean - disk_second_moment(2, 1.0)).abs() < 1e-9);
        // n = 3: polar integral over the unit 2-disk, int r^3 dr / int r dr
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..m {
            let r = (i as f64 + 0.5) / m as f64;
            num += r * r * r;
            den += r;
        }
        assert!((num / den - disk_second_moment(3, 1.0)).abs() < 1e-9);
    }

    #[test]
    fn ball_moment_monte_carlo() {
        let mut rng = rng::stream(11, 0);
        let mut m = crate::stats::Moments::new();
        let mut h = [0.0; 3];
        for _ in 0..2_000_000 {
            sample_ball_into(&mut rng, 0.5, &mut h);
            m.push(h[0] * h[0]);
        }
        let exact = ball_second_moment(3, 0.5);
        assert!((m.mean() - exact).abs() < 3.0 * m.std_error());
    }

    #[test]
    fn interpolation_is_exact_for_affine_data() {
        let d = Arc::new(build_grid_domain(Shape::unit_ball(2), 0.1, 0.3).unwrap());
        let f = ValueField::from_fn(d.clone(), |y| 2.0 * y[0] - 0.5 * y[1] + 1.0).unwrap();
        for y in [[0.123, -0.456], [0.3, 0.2], [-0.71, 0.05]] {
            let v = f.interpolate(&y).unwrap();
            assert!((v - (2.0 * y[0] - 0.5 * y[1] + 1.0)).abs() < 1e-12);
        }
        assert!(f.interpolate(&[5.0, 5.0]).is_none());
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let d = Arc::new(build_grid_domain(Shape::unit_ball(2), 0.1, 0.3).unwrap());
        let err = ValueField::from_fn(d, |y| if y[0] > 0.5 { f64::NAN } else { 0.0 }).unwrap_err();
        assert!(matches!(err, GeometryError::NonFinite { .. }));
    }
}
