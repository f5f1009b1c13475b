//! Coupling maps for two-token processes: mirror reflection, minimal
//! rotation between hyperplanes, and the clamp projection.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("x and z coincide, so the mirror hyperplane is undefined")]
    Coincident,
    #[error("direction vectors must be nonzero")]
    ZeroDirection,
    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),
}

/// Below this value of `1 + a.b` two unit directions count as antipodal.
pub const ANTIPODAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CouplingMap {
    /// Reflection across the hyperplane orthogonal to `v = (x - z)/|x - z|`.
    Mirror { v: Vec<f64> },
    /// Rotation taking the unit vector `from` to `to`, acting in the plane
    /// spanned by `from` and `e2` with the given cosine and sine. The identity
    /// when `e2` is empty (equal or antipodal directions).
    Rotation {
        from: Vec<f64>,
        to: Vec<f64>,
        e2: Vec<f64>,
        cos: f64,
        sin: f64,
    },
    /// `y -> x` if `|x - y| >= eps/2`, else `y`.
    Clamp { x: Vec<f64>, epsilon: f64 },
}

impl CouplingMap {
    pub fn mirror(x: &[f64], z: &[f64]) -> Result<Self, CouplingError> {
        let v = linalg::unit(&linalg::sub(x, z)).ok_or(CouplingError::Coincident)?;
        Ok(CouplingMap::Mirror { v })
    }

    pub fn clamp(x: &[f64], epsilon: f64) -> Result<Self, CouplingError> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(CouplingError::InvalidEpsilon(epsilon));
        }
        Ok(CouplingMap::Clamp {
            x: x.to_vec(),
            epsilon,
        })
    }

    fn fixed(from: Vec<f64>, to: Vec<f64>) -> Self {
        CouplingMap::Rotation {
            from,
            to,
            e2: Vec::new(),
            cos: 1.0,
            sin: 0.0,
        }
    }

    /// True for maps that leave every vector unchanged.
    pub fn is_identity(&self) -> bool {
        matches!(self, CouplingMap::Rotation { e2, .. } if e2.is_empty())
    }

    pub fn name(&self) -> &'static str {
        match self {
            CouplingMap::Mirror { .. } => "mirror",
            CouplingMap::Rotation { .. } => "rotation",
            CouplingMap::Clamp { .. } => "clamp",
        }
    }

    /// Image of `h`.
    pub fn apply(&self, h: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; h.len()];
        self.apply_into(h, &mut out);
        out
    }

    pub fn apply_into(&self, h: &[f64], out: &mut [f64]) {
        match self {
            CouplingMap::Mirror { v } => {
                let t = 2.0 * linalg::dot(h, v);
                for ((o, hi), vi) in out.iter_mut().zip(h).zip(v) {
                    *o = hi - t * vi;
                }
            }
            CouplingMap::Rotation {
                from: e1, e2, cos, sin, ..
            } => {
                if e2.is_empty() {
                    out.copy_from_slice(h);
                    return;
                }
                let p = linalg::dot(h, e1);
                let q = linalg::dot(h, e2);
                let a = (cos - 1.0) * p - sin * q;
                let b = (cos - 1.0) * q + sin * p;
                for i in 0..h.len() {
                    out[i] = h[i] + a * e1[i] + b * e2[i];
                }
            }
            CouplingMap::Clamp { x, epsilon } => {
                out.copy_from_slice(&clamp_projection(x, *epsilon, h));
            }
        }
    }
}

/// `h - 2 (h . V) V` with `V = (x - z)/|x - z|`.
pub fn mirror_map(x: &[f64], z: &[f64], h: &[f64]) -> Result<Vec<f64>, CouplingError> {
    Ok(CouplingMap::mirror(x, z)?.apply(h))
}

/// Minimal rotation taking the direction of `nu_x` to that of `nu_z`.
///
/// Equal directions give the identity; antipodal directions also give the
/// identity, which keeps `P(nu, nu') = P(-nu, -nu')` and maps the common
/// hyperplane onto itself.
pub fn rotation_map(nu_x: &[f64], nu_z: &[f64]) -> Result<CouplingMap, CouplingError> {
    let a = linalg::unit(nu_x).ok_or(CouplingError::ZeroDirection)?;
    let b = linalg::unit(nu_z).ok_or(CouplingError::ZeroDirection)?;
    let c = linalg::dot(&a, &b).clamp(-1.0, 1.0);
    if a == b || 1.0 + c <= ANTIPODAL_TOL {
        return Ok(CouplingMap::fixed(a, b));
    }
    let mut perp: Vec<f64> = b.iter().zip(&a).map(|(bi, ai)| bi - c * ai).collect();
    let s = linalg::norm(&perp);
    if s == 0.0 {
        return Ok(CouplingMap::fixed(a, b));
    }
    // second Gram-Schmidt pass: b - c a loses orthogonality when a and b are close
    let r = linalg::dot(&perp, &a);
    for (p, ai) in perp.iter_mut().zip(&a) {
        *p -= r * ai;
    }
    let Some(e2) = linalg::unit(&perp) else {
        return Ok(CouplingMap::fixed(a, b));
    };
    let angle = s.atan2(c);
    Ok(CouplingMap::Rotation {
        from: a,
        to: b,
        e2,
        cos: angle.cos(),
        sin: angle.sin(),
    })
}

/// `x` if `|x - y| >= eps / 2`, otherwise `y`.
pub fn clamp_projection(x: &[f64], epsilon: f64, y: &[f64]) -> Vec<f64> {
    if linalg::dist(x, y) >= 0.5 * epsilon {
        x.to_vec()
    } else {
        y.to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirror_example() {
        let p = mirror_map(&[1.0, 0.0], &[-1.0, 0.0], &[0.1, 0.2]).unwrap();
        assert!((p[0] + 0.1).abs() < 1e-16 && (p[1] - 0.2).abs() < 1e-16);
        assert_eq!(mirror_map(&[1.0, 0.0], &[1.0, 0.0], &[0.1, 0.2]), Err(CouplingError::Coincident));
    }

    #[test]
    fn rotation_examples() {
        let r = rotation_map(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        let img = r.apply(&[0.0, 0.7]);
        assert!((img[0] + 0.7).abs() < 1e-15 && img[1].abs() < 1e-15);
        assert!(rotation_map(&[0.3, 0.4], &[0.6, 0.8]).unwrap().is_identity());
        let anti = rotation_map(&[0.0, 1.0, 0.0], &[0.0, -2.0, 0.0]).unwrap();
        assert!(anti.is_identity());
        assert_eq!(anti.apply(&[0.4, 0.0, -0.3]), vec![0.4, 0.0, -0.3]);
        assert!(rotation_map(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn clamp_examples() {
        let x = [0.0, 0.0];
        assert_eq!(clamp_projection(&x, 1.0, &[0.6, 0.0]), x.to_vec());
        assert_eq!(clamp_projection(&x, 1.0, &[0.3, 0.0]), vec![0.3, 0.0]);
        assert_eq!(clamp_projection(&x, 1.0, &[0.5, 0.0]), x.to_vec());
    }
}
