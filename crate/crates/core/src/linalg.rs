//! Dense helpers on slices and tiny matrices (row-major `Vec<f64>`).

use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    sqrt(norm2(a))
}

#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    sqrt(dist2(a, b))
}

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[inline]
pub fn add_assign(a: &mut [f64], b: &[f64]) {
    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
}

/// `a += s * b`
#[inline]
pub fn axpy(a: &mut [f64], s: f64, b: &[f64]) {
    a.iter_mut().zip(b).for_each(|(x, y)| *x += s * y);
}

pub fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn normalized(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    a.iter().map(|x| x / n).collect()
}

/// Cross product of two 3-vectors.
#[inline]
pub fn cross3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// `|a ^ b|`, the area of the parallelogram spanned by `a` and `b`, in any dimension.
#[inline]
pub fn wedge_norm(a: &[f64], b: &[f64]) -> f64 {
    let (aa, bb, ab) = (norm2(a), norm2(b), dot(a, b));
    sqrt((aa * bb - ab * ab).max(0.0))
}

/// Area of the triangle `(p, q, r)` in any dimension.
#[inline]
pub fn triangle_area(p: &[f64], q: &[f64], r: &[f64]) -> f64 {
    let u = sub(q, p);
    let v = sub(r, p);
    // Lagrange identity loses precision for slivers; fall back to Heron-free
    // per-component sum of 2x2 minors, which is exact up to rounding.
    let mut s = 0.0;
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            let m = u[i] * v[j] - u[j] * v[i];
            s += m * m;
        }
    }
    0.5 * sqrt(s)
}

/// Unsigned angle between `a` and `b`, accurate near 0 and pi.
#[inline]
pub fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    crate::math::atan2(wedge_norm(a, b), dot(a, b))
}

/// Orthonormal basis of `span(a, b)` by Gram-Schmidt. `None` if degenerate.
pub fn orthonormal_pair(a: &[f64], b: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let na = norm(a);
    if na == 0.0 || !na.is_finite() {
        return None;
    }
    let e1: Vec<f64> = a.iter().map(|x| x / na).collect();
    let mut e2 = b.to_vec();
    axpy(&mut e2, -dot(&e1, b), &e1);
    let n2 = norm(&e2);
    if n2 <= 1e-14 * norm(b) || n2 == 0.0 {
        return None;
    }
    e2.iter_mut().for_each(|x| *x /= n2);
    Some((e1, e2))
}

/// Row-major `n x n` matrix product.
pub fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

pub fn transpose(a: &[f64], n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = a[i * n + j];
        }
    }
    t
}

pub fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

/// `y = A x` for row-major `A` with `x.len()` columns.
pub fn matvec(a: &[f64], x: &[f64]) -> Vec<f64> {
    a.chunks_exact(x.len()).map(|row| dot(row, x)).collect()
}

pub fn frobenius(a: &[f64]) -> f64 {
    norm(a)
}

/// Eigen-decomposition of a symmetric `n x n` matrix by cyclic Jacobi
/// rotations. Returns eigenvalues in descending order and the matching
/// eigenvectors as rows.
pub fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut m = a.to_vec();
    let mut v = identity(n);
    for _sweep in 0..64 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        if off <= 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k * n + i]).collect())
        .collect();
    (values, vectors)
}

/// Solves the dense system `A x = b` by Gaussian elimination with partial
/// pivoting. Returns `None` for (numerically) singular systems.
pub fn solve_dense(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let scale = m
        .iter()
        .fold(0.0f64, |s, v| s.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for col in 0..n {
        let piv =
            (col..n).max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))?;
        if m[piv * n + col].abs() <= 1e-13 * scale {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
            }
            x.swap(piv, col);
        }
        for r in col + 1..n {
            let f = m[r * n + col] / m[col * n + col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[r * n + k] -= f * m[col * n + k];
            }
            x[r] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for k in col + 1..n {
            s -= m[col * n + k] * x[k];
        }
        x[col] = s / m[col * n + col];
    }
    Some(x)
}

/// Closest distance between segments `[p0, p1]` and `[q0, q1]` in any dimension.
pub fn segment_distance(p0: &[f64], p1: &[f64], q0: &[f64], q1: &[f64]) -> f64 {
    let d1 = sub(p1, p0);
    let d2 = sub(q1, q0);
    let r = sub(p0, q0);
    let a = norm2(&d1);
    let e = norm2(&d2);
    let f = dot(&d2, &r);
    let (s, t);
    if a <= f64::EPSILON && e <= f64::EPSILON {
        return dist(p0, q0);
    }
    if a <= f64::EPSILON {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = dot(&d1, &r);
        if e <= f64::EPSILON {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = dot(&d1, &d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 0.0 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let mut diff = r;
    axpy(&mut diff, s, &d1);
    axpy(&mut diff, -t, &d2);
    norm(&diff)
}

/// Exact distance between two simplices (each given by 1 to 3 vertices) in
/// any dimension. The closest pair lies in the relative interiors of some
/// pair of sub-faces, where it is the stationary point of the affine hulls;
/// every sub-face pair is tried.
pub fn simplex_distance(a: &[&[f64]], b: &[&[f64]]) -> f64 {
    let mut best = f64::INFINITY;
    let subsets = |k: usize| (1u32..(1 << k)).collect::<Vec<u32>>();
    for sa in subsets(a.len()) {
        let va: Vec<&[f64]> = (0..a.len())
            .filter(|i| sa & (1 << i) != 0)
            .map(|i| a[i])
            .collect();
        for sb in subsets(b.len()) {
            let vb: Vec<&[f64]> = (0..b.len())
                .filter(|i| sb & (1 << i) != 0)
                .map(|i| b[i])
                .collect();
            if let Some(d) = affine_stationary_distance(&va, &vb) {
                best = best.min(d);
            }
        }
    }
    best
}

/// Distance between the affine hulls at their stationary point, if that
/// point has strictly positive barycentric coordinates on both sides.
fn affine_stationary_distance(a: &[&[f64]], b: &[&[f64]]) -> Option<f64> {
    // x(s) = a0 + sum s_k (a_k - a0) - b0 - sum t_l (b_l - b0)
    let base = sub(a[0], b[0]);
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for ak in &a[1..] {
        dirs.push(sub(ak, a[0]));
    }
    for bl in &b[1..] {
        dirs.push(sub(b[0], bl));
    }
    let m = dirs.len();
    let coeffs = if m == 0 {
        Vec::new()
    } else {
        let mut g = vec![0.0; m * m];
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            for j in 0..m {
                g[i * m + j] = dot(&dirs[i], &dirs[j]);
            }
            rhs[i] = -dot(&dirs[i], &base);
        }
        solve_dense(&g, &rhs)?
    };
    let na = a.len() - 1;
    let sa: f64 = coeffs[..na].iter().sum();
    let sb: f64 = coeffs[na..].iter().sum();
    let interior = coeffs.iter().all(|&c| c > 0.0) && sa < 1.0 && sb < 1.0;
    if !interior {
        return None;
    }
    let mut x = base;
    for (c, d) in coeffs.iter().zip(&dirs) {
        axpy(&mut x, *c, d);
    }
    Some(norm(&x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_recovers_known_spectrum() {
        let a = [2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0];
        let (vals, vecs) = symmetric_eigen(&a, 3);
        assert!((vals[0] - 5.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        assert!((vals[2] - 1.0).abs() < 1e-12);
        let av = matvec(&a, &vecs[1]);
        for k in 0..3 {
            assert!((av[k] - 3.0 * vecs[1][k]).abs() < 1e-12);
        }
    }

    #[test]
    fn segment_distance_cases() {
        let d = segment_distance(
            &[0.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0],
            &[0.5, 1.0, -1.0],
            &[0.5, 1.0, 1.0],
        );
        assert!((d - 1.0).abs() < 1e-15);
        let d = segment_distance(&[0.0, 0.0], &[1.0, 0.0], &[2.0, 0.0], &[3.0, 0.0]);
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn simplex_distance_interior_pair_in_r4() {
        // two triangles in orthogonal planes of R^4, offset by 0.5 along e1
        let a: [&[f64]; 3] = [
            &[-1.0, -1.0, 0.0, 0.0],
            &[3.0, -1.0, 0.0, 0.0],
            &[-1.0, 3.0, 0.0, 0.0],
        ];
        let b: [&[f64]; 3] = [
            &[0.0, 0.0, -1.0, -1.0],
            &[0.0, 0.0, 3.0, -1.0],
            &[0.0, 0.0, -1.0, 3.0],
        ];
        assert!(simplex_distance(&a, &b) < 1e-12);
        let b2: [&[f64]; 3] = [
            &[0.0, 0.0, 0.5, 0.5],
            &[0.0, 0.0, 3.0, 0.5],
            &[0.0, 0.0, 0.5, 3.0],
        ];
        let d = simplex_distance(&a, &b2);
        assert!((d - crate::math::sqrt(0.5)).abs() < 1e-12, "{d}");
    }

    #[test]
    fn triangle_area_matches_cross_product() {
        let (p, q, r) = ([0.1, 0.2, 0.3], [1.0, -0.5, 0.7], [0.3, 0.9, -1.1]);
        let c = cross3(&sub(&q, &p), &sub(&r, &p));
        assert!((triangle_area(&p, &q, &r) - 0.5 * norm(&c)).abs() < 1e-14);
    }
}
