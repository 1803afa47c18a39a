//! Discrete curvature on triangle meshes in `R^n`: cotangent mean curvature
//! vector, angle-defect Gaussian curvature, `|A|^2 = |H|^2 - 2K`, Gauss map.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg;
use crate::math::TAU;
use crate::mesh::{Face, SphereMesh, Topology};
use crate::points::Points;

/// Cotangent weights are clamped to `[-COTAN_CLAMP, COTAN_CLAMP]`.
pub const COTAN_CLAMP: f64 = 1e4;

/// Relative size of negative `|H|^2 - 2K` values tolerated before warning.
pub const SECOND_FORM_TOL: f64 = 0.05;

/// Per-edge `cot alpha + cot beta`, aligned with `Topology::edges`.
#[derive(Debug, Clone, PartialEq)]
pub struct CotanWeights {
    pub weights: Vec<f64>,
    /// Number of individual cotangents that hit the clamp.
    pub clamped: usize,
}

pub fn cotan_weights(points: &Points, faces: &[Face], topology: &Topology) -> CotanWeights {
    let mut weights = vec![0.0; topology.edges.len()];
    let mut clamped = 0;
    for t in faces {
        for k in 0..3 {
            let (i, j, o) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
            let u = linalg::sub(points.row(i), points.row(o));
            let v = linalg::sub(points.row(j), points.row(o));
            let w = linalg::wedge_norm(&u, &v);
            let raw = linalg::dot(&u, &v) / w;
            let cot = if raw.is_nan() {
                clamped += 1;
                0.0
            } else if raw.abs() > COTAN_CLAMP {
                clamped += 1;
                raw.clamp(-COTAN_CLAMP, COTAN_CLAMP)
            } else {
                raw
            };
            let e = topology
                .edge_index(i, j)
                .expect("face edge present in topology");
            weights[e] += cot;
        }
    }
    CotanWeights { weights, clamped }
}

/// Mixed Voronoi cell areas: circumcentric where a triangle is non-obtuse,
/// otherwise half (obtuse corner) or a quarter of the triangle. The cells
/// partition the surface like barycentric cells, but the cotangent operator
/// divided by these areas is pointwise consistent on irregular meshes.
pub fn curvature_areas(points: &Points, faces: &[Face]) -> Result<Vec<f64>> {
    let mut areas = vec![0.0; points.len()];
    for (f, t) in faces.iter().enumerate() {
        let p = [points.row(t[0]), points.row(t[1]), points.row(t[2])];
        let area = linalg::triangle_area(p[0], p[1], p[2]);
        if !(area > 0.0) {
            return Err(Error::InvalidMesh(alloc::format!("face {f} has zero area")));
        }
        let dots: Vec<f64> = (0..3)
            .map(|k| {
                linalg::dot(
                    &linalg::sub(p[(k + 1) % 3], p[k]),
                    &linalg::sub(p[(k + 2) % 3], p[k]),
                )
            })
            .collect();
        if let Some(obtuse) = (0..3).find(|&k| dots[k] < 0.0) {
            for k in 0..3 {
                areas[t[k]] += if k == obtuse { 0.5 * area } else { 0.25 * area };
            }
            continue;
        }
        for k in 0..3 {
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            // cot at corner = dot / (2 area)
            let cot_i = dots[i] / (2.0 * area);
            let cot_j = dots[j] / (2.0 * area);
            areas[t[k]] +=
                0.125 * (linalg::dist2(p[k], p[j]) * cot_i + linalg::dist2(p[k], p[i]) * cot_j);
        }
    }
    Ok(areas)
}

/// Mean curvature vectors with trace convention `|H| = k1 + k2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanCurvature {
    pub vectors: Points,
    pub clamped_weights: usize,
}

impl MeanCurvature {
    pub fn squared_norms(&self) -> Vec<f64> {
        self.vectors.iter().map(linalg::norm2).collect()
    }
}

/// `H_i = (1 / 2A_i) sum_j (cot a_ij + cot b_ij)(f_j - f_i)` on the image,
/// with `A_i` the mixed cell area of [`curvature_areas`].
pub fn mean_curvature_vector(m: &SphereMesh) -> Result<MeanCurvature> {
    let areas = curvature_areas(m.image(), m.faces())?;
    mean_curvature_on(m.image(), m.faces(), m.topology(), &areas)
}

pub fn mean_curvature_on(
    points: &Points,
    faces: &[Face],
    topology: &Topology,
    areas: &[f64],
) -> Result<MeanCurvature> {
    let cw = cotan_weights(points, faces, topology);
    let dim = points.dim();
    let mut h = Points::zeros(dim, points.len());
    for (e, &[i, j]) in topology.edges.iter().enumerate() {
        let w = cw.weights[e];
        let d = linalg::sub(points.row(j), points.row(i));
        linalg::axpy(h.row_mut(i), w, &d);
        linalg::axpy(h.row_mut(j), -w, &d);
    }
    for (i, row) in h.iter_mut().enumerate() {
        let s = 0.5 / areas[i];
        row.iter_mut().for_each(|x| *x *= s);
    }
    Ok(MeanCurvature {
        vectors: h,
        clamped_weights: cw.clamped,
    })
}

/// Interior angle sums at each vertex.
pub fn angle_sums(points: &Points, faces: &[Face]) -> Vec<f64> {
    let mut sums = vec![0.0; points.len()];
    for t in faces {
        for k in 0..3 {
            let (o, i, j) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
            let u = linalg::sub(points.row(i), points.row(o));
            let v = linalg::sub(points.row(j), points.row(o));
            sums[o] += linalg::angle_between(&u, &v);
        }
    }
    sums
}

/// `2 pi - sum of incident angles`, per vertex.
pub fn angle_defects(m: &SphereMesh) -> Vec<f64> {
    angle_sums(m.image(), m.faces())
        .into_iter()
        .map(|s| TAU - s)
        .collect()
}

/// `K_i = angle defect / A_i`.
pub fn gaussian_curvature(m: &SphereMesh) -> Result<Vec<f64>> {
    let areas = curvature_areas(m.image(), m.faces())?;
    Ok(angle_defects(m)
        .iter()
        .zip(&areas)
        .map(|(d, a)| d / a)
        .collect())
}

/// `|H_i|^2 - 2 K_i` clamped below at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondFormNorm {
    pub values: Vec<f64>,
    /// Most negative raw value (0 if none).
    pub most_negative: f64,
    /// Set when the most negative raw value exceeds `SECOND_FORM_TOL * max`.
    pub warning: bool,
    pub clamped_weights: usize,
}

pub fn second_form_norm(m: &SphereMesh) -> Result<SecondFormNorm> {
    let areas = curvature_areas(m.image(), m.faces())?;
    let h = mean_curvature_on(m.image(), m.faces(), m.topology(), &areas)?;
    let k: Vec<f64> = angle_defects(m)
        .iter()
        .zip(&areas)
        .map(|(d, a)| d / a)
        .collect();
    Ok(clamp_second_form(
        h.squared_norms()
            .iter()
            .zip(&k)
            .map(|(h2, k)| h2 - 2.0 * k)
            .collect(),
        h.clamped_weights,
    ))
}

pub(crate) fn clamp_second_form(raw: Vec<f64>, clamped_weights: usize) -> SecondFormNorm {
    let max = raw.iter().cloned().fold(0.0, f64::max);
    let most_negative = raw.iter().cloned().fold(0.0, f64::min);
    let warning = -most_negative > SECOND_FORM_TOL * max;
    SecondFormNorm {
        values: raw.into_iter().map(|v| v.max(0.0)).collect(),
        most_negative,
        warning,
        clamped_weights,
    }
}

/// Orthogonal projector onto a 2-plane of `R^n`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentPlane {
    dim: usize,
    projector: Vec<f64>,
}

impl TangentPlane {
    /// Plane spanned by `a` and `b`; `None` if they are (nearly) parallel.
    pub fn from_span(a: &[f64], b: &[f64]) -> Option<TangentPlane> {
        let (e1, e2) = linalg::orthonormal_pair(a, b)?;
        Some(TangentPlane::from_orthonormal(&e1, &e2))
    }

    pub fn from_orthonormal(e1: &[f64], e2: &[f64]) -> TangentPlane {
        let n = e1.len();
        let mut projector = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                projector[i * n + j] = e1[i] * e1[j] + e2[i] * e2[j];
            }
        }
        TangentPlane { dim: n, projector }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn projector(&self) -> &[f64] {
        &self.projector
    }

    /// Grassmannian distance: Frobenius norm of the projector difference.
    pub fn distance(&self, other: &TangentPlane) -> f64 {
        linalg::norm(&linalg::sub(&self.projector, &other.projector))
    }

    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        linalg::matvec(&self.projector, v)
    }

    /// Orthonormal basis of the plane (top eigenvectors of the projector).
    pub fn basis(&self) -> (Vec<f64>, Vec<f64>) {
        let (_, vecs) = linalg::symmetric_eigen(&self.projector, self.dim);
        (vecs[0].clone(), vecs[1].clone())
    }

    /// Plane closest to a symmetric matrix (its top-2 eigenspace).
    pub fn from_symmetric(a: &[f64], n: usize) -> TangentPlane {
        let (_, vecs) = linalg::symmetric_eigen(a, n);
        TangentPlane::from_orthonormal(&vecs[0], &vecs[1])
    }
}

/// Tangent plane of every face of the image.
pub fn gauss_map(m: &SphereMesh) -> Result<Vec<TangentPlane>> {
    face_planes(m.image(), m.faces())
}

pub fn face_planes(points: &Points, faces: &[Face]) -> Result<Vec<TangentPlane>> {
    faces
        .iter()
        .enumerate()
        .map(|(f, t)| {
            let a = linalg::sub(points.row(t[1]), points.row(t[0]));
            let b = linalg::sub(points.row(t[2]), points.row(t[0]));
            TangentPlane::from_span(&a, &b)
                .ok_or_else(|| Error::InvalidMesh(alloc::format!("face {f} is degenerate")))
        })
        .collect()
}

/// Tangent plane at a vertex: top-2 eigenspace of the area-weighted mean of
/// the incident face projectors.
pub fn vertex_plane(points: &Points, faces: &[Face], incident: &[usize]) -> Option<TangentPlane> {
    let n = points.dim();
    let mut acc = vec![0.0; n * n];
    let mut total = 0.0;
    for &f in incident {
        let t = faces[f];
        let a = linalg::sub(points.row(t[1]), points.row(t[0]));
        let b = linalg::sub(points.row(t[2]), points.row(t[0]));
        let plane = TangentPlane::from_span(&a, &b)?;
        let w = linalg::triangle_area(points.row(t[0]), points.row(t[1]), points.row(t[2]));
        linalg::axpy(&mut acc, w, plane.projector());
        total += w;
    }
    if !(total > 0.0) {
        return None;
    }
    Some(TangentPlane::from_symmetric(&acc, n))
}

/// Sum of angle defects; `4 pi` on any closed sphere mesh.
pub fn total_angle_defect(m: &SphereMesh) -> f64 {
    crate::reduce::tree_sum(&angle_defects(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{self, PI};
    use crate::shapes::{ellipsoid, icosphere};

    fn scaled(m: &SphereMesh, s: f64) -> SphereMesh {
        let mut img = m.image().clone();
        img.scale(s);
        m.with_image(img).unwrap()
    }

    #[test]
    fn sphere_mean_curvature() {
        let m = icosphere(4, 3).unwrap();
        let h = mean_curvature_vector(&m).unwrap();
        for p in h.vectors.iter() {
            assert!((linalg::norm(p) - 2.0).abs() < 0.04, "{}", linalg::norm(p));
        }
        let h2 = mean_curvature_vector(&scaled(&m, 2.0)).unwrap();
        assert!(h2
            .vectors
            .iter()
            .all(|p| (linalg::norm(p) - 1.0).abs() < 0.02));
    }

    #[test]
    fn padded_sphere_in_r4() {
        let m = icosphere(4, 4).unwrap();
        let h = mean_curvature_vector(&m).unwrap();
        for p in h.vectors.iter() {
            assert!((linalg::norm(p) - 2.0).abs() < 0.04);
            assert!(p[3].abs() < 1e-10);
        }
    }

    #[test]
    fn sphere_gaussian_curvature() {
        let m = icosphere(4, 3).unwrap();
        let k = gaussian_curvature(&m).unwrap();
        assert!(k.iter().all(|k| (k - 1.0).abs() < 0.02));
        let k2 = gaussian_curvature(&scaled(&m, 2.0)).unwrap();
        assert!(k2.iter().all(|k| (k - 0.25).abs() < 0.02 * 0.25));
    }

    #[test]
    fn gauss_bonnet_exact() {
        for m in [
            icosphere(3, 3).unwrap(),
            ellipsoid(2.0, 1.0, 0.5, 3, 4).unwrap(),
        ] {
            assert!((total_angle_defect(&m) - 4.0 * PI).abs() < 1e-9);
        }
    }

    #[test]
    fn sphere_second_form() {
        for r in [1.0, 2.5] {
            let m = scaled(&icosphere(4, 3).unwrap(), r);
            let a = second_form_norm(&m).unwrap();
            let target = 2.0 / (r * r);
            assert!(a.values.iter().all(|v| (v - target).abs() < 0.05 * target));
        }
    }

    /// Closed-form principal curvatures of the ellipsoid `x^2/a^2 + y^2/b^2 + z^2/c^2 = 1`:
    /// with `h = (x^2/a^4 + y^2/b^4 + z^2/c^4)^(-1/2)`,
    /// `K = h^4 / (a b c)^2` and `H_mean = h^3 (|p|^2 - a^2 - b^2 - c^2) / (2 (a b c)^2)`.
    fn ellipsoid_second_form(p: &[f64], ax: [f64; 3]) -> f64 {
        let [a, b, c] = ax;
        let q = p[0] * p[0] / a.powi(4) + p[1] * p[1] / b.powi(4) + p[2] * p[2] / c.powi(4);
        let h = 1.0 / math::sqrt(q);
        let abc2 = (a * b * c).powi(2);
        let k = h.powi(4) / abc2;
        let hm = h.powi(3) * (linalg::norm2(&p[..3]) - a * a - b * b - c * c) / (2.0 * abc2);
        4.0 * hm * hm - 2.0 * k
    }

    #[test]
    fn ellipsoid_second_form_pointwise() {
        let ax = [2.0, 1.0, 1.0];
        let m = ellipsoid(ax[0], ax[1], ax[2], 4, 3).unwrap();
        let a = second_form_norm(&m).unwrap();
        // pole (2,0,0) is vertex 0; pick the vertex closest to the equator point (0,1,0)
        let eq = (0..m.vertex_count())
            .min_by(|&i, &j| {
                linalg::dist2(m.image().row(i), &[0.0, 1.0, 0.0])
                    .total_cmp(&linalg::dist2(m.image().row(j), &[0.0, 1.0, 0.0]))
            })
            .unwrap();
        for v in [0, eq] {
            let exact = ellipsoid_second_form(m.image().row(v), ax);
            assert!(
                (a.values[v] - exact).abs() < 0.1 * exact,
                "vertex {v}: {} vs {exact}",
                a.values[v]
            );
        }
        assert!((ellipsoid_second_form(&[2.0, 0.0, 0.0], ax) - 8.0).abs() < 1e-12);
        assert!((ellipsoid_second_form(&[0.0, 1.0, 0.0], ax) - 1.0625).abs() < 1e-12);
    }

    #[test]
    fn grassmannian_distances() {
        let p = TangentPlane::from_span(&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]).unwrap();
        let q = TangentPlane::from_span(&[0.0, 0.0, 1.0, 0.0], &[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((p.distance(&q) - 2.0).abs() < 1e-15);
        let p2 = TangentPlane::from_span(&[1.0, 1.0, 0.0, 0.0], &[1.0, -2.0, 0.0, 0.0]).unwrap();
        assert!(p.distance(&p2) < 1e-15);
        let pr = p.projector();
        let sq = linalg::matmul(pr, pr, 4);
        assert!(linalg::dist(&sq, pr) < 1e-10);
        assert!(((0..4).map(|i| pr[i * 5]).sum::<f64>() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn adjacent_face_planes_shrink_with_refinement() {
        let max_adjacent = |m: &SphereMesh| {
            let g = gauss_map(m).unwrap();
            m.topology()
                .edge_faces
                .iter()
                .map(|s| g[s[0]].distance(&g[s[1]]))
                .fold(0.0, f64::max)
        };
        let d4 = max_adjacent(&icosphere(4, 3).unwrap());
        let d5 = max_adjacent(&icosphere(5, 3).unwrap());
        assert!(d4 <= 0.2, "{d4}");
        assert!((d5 / d4 - 0.5).abs() < 0.1, "{}", d5 / d4);
    }

    #[test]
    fn flat_patch_has_constant_gauss_map() {
        let pts = Points::from_rows(
            3,
            &[
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [1.0, 1.0, 0.0],
            ],
        )
        .unwrap();
        let planes = face_planes(&pts, &[[0, 1, 2], [1, 3, 2]]).unwrap();
        assert!(planes[0].distance(&planes[1]) < 1e-15);
    }

    #[test]
    fn covariance_under_scaling_and_rigid_motion() {
        let m = ellipsoid(1.5, 1.0, 0.8, 3, 3).unwrap();
        let s = 2.7;
        let ms = scaled(&m, s);
        let (hm, hs) = (
            mean_curvature_vector(&m).unwrap(),
            mean_curvature_vector(&ms).unwrap(),
        );
        let (km, ks) = (
            gaussian_curvature(&m).unwrap(),
            gaussian_curvature(&ms).unwrap(),
        );
        for i in 0..m.vertex_count() {
            assert!(
                (linalg::norm(hs.vectors.row(i)) * s - linalg::norm(hm.vectors.row(i))).abs()
                    < 1e-10 * linalg::norm(hm.vectors.row(i)).max(1.0)
            );
            assert!((ks[i] * s * s - km[i]).abs() < 1e-10 * km[i].abs().max(1.0));
        }
        let total = |m: &SphereMesh| {
            let a = m.image_dual_areas().unwrap();
            crate::reduce::tree_sum(
                &second_form_norm(m)
                    .unwrap()
                    .values
                    .iter()
                    .zip(&a)
                    .map(|(v, a)| v * a)
                    .collect::<Vec<_>>(),
            )
        };
        assert!((total(&m) - total(&ms)).abs() < 1e-10 * total(&m));
        // rotation about z by 0.3 plus translation
        let (c, sn) = (math::cos(0.3), math::sin(0.3));
        let moved = m.image().map(3, |p, o| {
            o[0] = c * p[0] - sn * p[1] + 1.0;
            o[1] = sn * p[0] + c * p[1] - 2.0;
            o[2] = p[2] + 0.5;
        });
        let mr = m.with_image(moved).unwrap();
        let kr = gaussian_curvature(&mr).unwrap();
        let hr = mean_curvature_vector(&mr).unwrap();
        for i in 0..m.vertex_count() {
            assert!((kr[i] - km[i]).abs() < 1e-10 * km[i].abs().max(1.0));
            assert!(
                (linalg::norm(hr.vectors.row(i)) - linalg::norm(hm.vectors.row(i))).abs() < 1e-10
            );
        }
    }
}
