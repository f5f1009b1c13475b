//! Dense small-vector helpers used across the crate.

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub(crate) fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `out = a + s * b`
#[inline]
pub(crate) fn axpy_into(out: &mut [f64], a: &[f64], s: f64, b: &[f64]) {
    for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
        *o = x + s * y;
    }
}

/// Unit vector along `a`, or `None` for the zero vector.
pub(crate) fn unit(a: &[f64]) -> Option<Vec<f64>> {
    let r = norm(a);
    (r > 0.0 && r.is_finite()).then(|| scale(a, 1.0 / r))
}

/// Orthonormal basis of the hyperplane orthogonal to the unit vector `normal`.
///
/// Built from the Householder reflection taking `e_k` to `normal`, where `k`
/// is the axis least aligned with `normal`; columns other than `k` span the
/// complement.
pub(crate) fn hyperplane_basis(normal: &[f64]) -> Vec<Vec<f64>> {
    let n = normal.len();
    if n == 2 {
        return vec![vec![-normal[1], normal[0]]];
    }
    let k = (0..n)
        .min_by(|&i, &j| normal[i].abs().total_cmp(&normal[j].abs()))
        .unwrap_or(0);
    // v = e_k - normal, H = I - 2 v v^T / |v|^2 maps e_k <-> normal.
    let mut v: Vec<f64> = normal.iter().map(|c| -c).collect();
    v[k] += 1.0;
    let vv = dot(&v, &v);
    let mut basis = Vec::with_capacity(n - 1);
    for col in (0..n).filter(|&c| c != k) {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let coef = 2.0 * v[col] / vv;
        for (ei, vi) in e.iter_mut().zip(&v) {
            *ei -= coef * vi;
        }
        basis.push(e);
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperplane_basis_is_orthonormal_and_orthogonal_to_normal() {
        for normal in [
            vec![0.0, 0.0, 1.0],
            vec![1.0, 2.0, -2.0],
            vec![0.3, -0.1, 0.7, 0.2],
            vec![3.0, 4.0],
        ] {
            let nu = unit(&normal).unwrap();
            let basis = hyperplane_basis(&nu);
            assert_eq!(basis.len(), nu.len() - 1);
            for (i, b) in basis.iter().enumerate() {
                assert!(dot(b, &nu).abs() < 1e-14);
                for (j, c) in basis.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((dot(b, c) - expect).abs() < 1e-14);
                }
            }
        }
    }
}
