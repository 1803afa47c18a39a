//! Quasiconformal distortion of the domain-to-image map and a discrete
//! conformalization of the domain.

use alloc::vec;
use alloc::vec::Vec;

use crate::curvature::cotan_weights;
use crate::error::{Error, Result};
use crate::linalg;
use crate::math;
use crate::mesh::{barycentric_areas, face_areas, Face, SphereMesh};
use crate::points::Points;
use crate::reduce;
use crate::sparse::{conjugate_gradient, Csr, TripletBuilder};

/// Per-face ratio of singular values of the affine domain-to-image map.
#[derive(Debug, Clone, PartialEq)]
pub struct Distortion {
    pub per_face: Vec<f64>,
    pub max: f64,
    /// Mean weighted by image face area.
    pub mean: f64,
    /// Faces whose domain triangle is inverted on the sphere.
    pub folded: usize,
}

fn face_distortion(x: [&[f64]; 3], f: [&[f64]; 3]) -> Option<(f64, bool)> {
    let a = linalg::sub(x[1], x[0]);
    let b = linalg::sub(x[2], x[0]);
    let (e1, e2) = linalg::orthonormal_pair(&a, &b)?;
    let d = [
        linalg::dot(&a, &e1),
        linalg::dot(&b, &e1),
        linalg::dot(&a, &e2),
        linalg::dot(&b, &e2),
    ];
    let det = d[0] * d[3] - d[1] * d[2];
    if !(det.abs() > 0.0) {
        return None;
    }
    let inv = [d[3] / det, -d[1] / det, -d[2] / det, d[0] / det];
    let fa = linalg::sub(f[1], f[0]);
    let fb = linalg::sub(f[2], f[0]);
    // columns of J = [fa fb] * inv
    let j1: Vec<f64> = fa
        .iter()
        .zip(&fb)
        .map(|(p, q)| p * inv[0] + q * inv[2])
        .collect();
    let j2: Vec<f64> = fa
        .iter()
        .zip(&fb)
        .map(|(p, q)| p * inv[1] + q * inv[3])
        .collect();
    let (g11, g12, g22) = (
        linalg::dot(&j1, &j1),
        linalg::dot(&j1, &j2),
        linalg::dot(&j2, &j2),
    );
    let tr = g11 + g22;
    let disc = math::sqrt(((g11 - g22) * (g11 - g22) + 4.0 * g12 * g12).max(0.0));
    let (l1, l2) = (0.5 * (tr + disc), 0.5 * (tr - disc));
    if !(l2 > 0.0) {
        return None;
    }
    let normal = linalg::cross3(&a, &b);
    let outward = normal[0] * (x[0][0] + x[1][0] + x[2][0])
        + normal[1] * (x[0][1] + x[1][1] + x[2][1])
        + normal[2] * (x[0][2] + x[1][2] + x[2][2]);
    Some((math::sqrt(l1 / l2).max(1.0), outward < 0.0))
}

pub fn conformality_error(m: &SphereMesh) -> Result<Distortion> {
    distortion_of(m.domain(), m.image(), m.faces())
}

pub fn distortion_of(domain: &Points, image: &Points, faces: &[Face]) -> Result<Distortion> {
    let mut per_face = Vec::with_capacity(faces.len());
    let mut folded = 0;
    for (k, t) in faces.iter().enumerate() {
        let x = [domain.row(t[0]), domain.row(t[1]), domain.row(t[2])];
        let f = [image.row(t[0]), image.row(t[1]), image.row(t[2])];
        let (q, flip) = face_distortion(x, f)
            .ok_or_else(|| Error::InvalidMesh(alloc::format!("face {k} is degenerate")))?;
        folded += flip as usize;
        per_face.push(q);
    }
    let areas = face_areas(image, faces);
    let weighted: Vec<f64> = per_face.iter().zip(&areas).map(|(q, a)| q * a).collect();
    let mean = reduce::tree_sum(&weighted) / reduce::tree_sum(&areas);
    let max = per_face.iter().cloned().fold(1.0, f64::max);
    Ok(Distortion {
        per_face,
        max,
        mean,
        folded,
    })
}

/// The Moebius automorphism of `S^2` sending `a` (inside the ball) to the
/// origin: `x -> (1 - |a|^2)(x - a)/|x - a|^2 - a`.
pub fn sphere_automorphism(a: &[f64], x: &[f64]) -> Vec<f64> {
    let d = linalg::sub(x, a);
    let s = (1.0 - linalg::norm2(a)) / linalg::norm2(&d);
    d.iter().zip(a).map(|(di, ai)| s * di - ai).collect()
}

/// Applies sphere automorphisms until the `weights`-weighted centroid of
/// `u` is (numerically) the origin.
pub fn center_on_sphere(u: &mut Points, weights: &[f64]) {
    let total = reduce::tree_sum(weights);
    let centroid = |u: &Points| -> Vec<f64> {
        let mut c = vec![0.0; 3];
        for (p, w) in u.iter().zip(weights) {
            linalg::axpy(&mut c, *w / total, p);
        }
        c
    };
    let mut c = centroid(u);
    for _ in 0..200 {
        let r = linalg::norm(&c);
        if r < 1e-12 {
            break;
        }
        let mut step: f64 = 0.75;
        let mut accepted = false;
        while step > 1e-6 {
            let a = linalg::scaled(&c, step.min(0.9 / r));
            let moved = u.map(3, |p, out| {
                out.copy_from_slice(&linalg::normalized(&sphere_automorphism(&a, p)))
            });
            let nc = centroid(&moved);
            if linalg::norm(&nc) < r {
                *u = moved;
                c = nc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalizeOptions {
    pub max_iters: usize,
    /// Stops once no domain vertex moves farther than this in one iteration.
    pub tol: f64,
    /// Implicit step relative to the total image area.
    pub time_step: f64,
}

impl Default for ConformalizeOptions {
    fn default() -> Self {
        ConformalizeOptions {
            max_iters: 200,
            tol: 1e-10,
            time_step: 10.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Conformalized {
    pub mesh: SphereMesh,
    pub initial: Distortion,
    pub distortion: Distortion,
    pub iterations: usize,
    /// False when `max_iters` ran out; `mesh` is then the iterate of least
    /// maximal distortion. A converged map worse than the input is discarded.
    pub converged: bool,
}

fn laplacian(m: &SphereMesh) -> Csr {
    let cw = cotan_weights(m.image(), m.faces(), m.topology());
    let mut t = TripletBuilder::new(m.vertex_count());
    for (e, &[i, j]) in m.topology().edges.iter().enumerate() {
        let w = 0.5 * cw.weights[e];
        t.add(i, i, w);
        t.add(j, j, w);
        t.add(i, j, -w);
        t.add(j, i, -w);
    }
    t.build()
}

fn score(d: &Distortion) -> f64 {
    if d.folded > 0 {
        f64::INFINITY
    } else {
        d.max
    }
}

fn project_rows(u: &mut Points) {
    for p in u.iter_mut() {
        let r = linalg::norm(p);
        p.iter_mut().for_each(|x| *x /= r);
    }
}

/// Orthonormal basis of the tangent plane of `S^2` at `u`.
fn tangent_basis(u: &[f64]) -> ([f64; 3], [f64; 3]) {
    let helper = if u[0].abs() < 0.6 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let e1 = linalg::normalized(&linalg::cross3(u, &helper));
    let e2 = linalg::cross3(u, &e1);
    ([e1[0], e1[1], e1[2]], e2)
}

/// One implicit step of the harmonic map flow restricted to tangent
/// displacements: minimizes `D(u + P xi) + |P xi|_M^2 / (2 tau)` over `xi`.
fn tangent_step(u: &Points, lap: &Csr, mass: &[f64], tau: f64) -> Points {
    let n = u.len();
    let bases: Vec<([f64; 3], [f64; 3])> = u.iter().map(tangent_basis).collect();
    let lu: Vec<[f64; 3]> = (0..n)
        .map(|i| {
            let mut acc = [0.0; 3];
            for (j, w) in lap.row(i) {
                linalg::axpy(&mut acc, w, u.row(j));
            }
            acc
        })
        .collect();
    let mut t = TripletBuilder::new(2 * n);
    for i in 0..n {
        let bi = [&bases[i].0, &bases[i].1];
        for (j, w) in lap.row(i) {
            let bj = [&bases[j].0, &bases[j].1];
            for a in 0..2 {
                for b in 0..2 {
                    t.add(2 * i + a, 2 * j + b, w * linalg::dot(bi[a], bj[b]));
                }
            }
        }
        t.add(2 * i, 2 * i, mass[i] / tau);
        t.add(2 * i + 1, 2 * i + 1, mass[i] / tau);
    }
    let system = t.build();
    let rhs: Vec<f64> = (0..n)
        .flat_map(|i| {
            [
                -linalg::dot(&bases[i].0, &lu[i]),
                -linalg::dot(&bases[i].1, &lu[i]),
            ]
        })
        .collect();
    let mut xi = vec![0.0; 2 * n];
    conjugate_gradient(&system, &rhs, &mut xi, &[], 1e-10, 4000);
    let mut next = u.clone();
    for (i, p) in next.iter_mut().enumerate() {
        linalg::axpy(p, xi[2 * i], &bases[i].0);
        linalg::axpy(p, xi[2 * i + 1], &bases[i].1);
    }
    project_rows(&mut next);
    next
}

/// Replaces the domain by a discrete harmonic map from the image surface to
/// `S^2` (cotangent weights of the image), which is conformal in the limit of
/// refinement. Each iteration takes an implicit step of the harmonic map flow
/// in the tangent spaces of the current domain, reprojects to the sphere and
/// applies the center-of-mass Moebius normalization. The image is untouched
/// and the returned domain never has larger maximal distortion than the input.
pub fn conformalize(m: &SphereMesh, opts: ConformalizeOptions) -> Result<Conformalized> {
    let initial = conformality_error(m)?;
    if initial.folded == 0 && initial.max <= 1.0 + 1e-9 {
        return Ok(Conformalized {
            mesh: m.clone(),
            distortion: initial.clone(),
            initial,
            iterations: 0,
            converged: true,
        });
    }
    let mass = barycentric_areas(m.image(), m.faces())?;
    let total_area = reduce::tree_sum(&mass);
    let lap = laplacian(m);
    let mut u = m.domain().clone();
    center_on_sphere(&mut u, &mass);
    let mut best = (score(&initial), m.domain().clone(), initial.clone());
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iters {
        iterations += 1;
        let mut next = tangent_step(&u, &lap, &mass, opts.time_step * total_area);
        center_on_sphere(&mut next, &mass);
        let moved = u
            .iter()
            .zip(next.iter())
            .map(|(a, b)| linalg::dist(a, b))
            .fold(0.0, f64::max);
        u = next;
        let d = distortion_of(&u, m.image(), m.faces())?;
        if moved < opts.tol {
            converged = true;
            if score(&d) <= score(&initial) {
                best = (score(&d), u.clone(), d);
            }
            break;
        }
        if score(&d) < best.0 {
            best = (score(&d), u.clone(), d);
        }
    }
    let mesh = m.with_domain(best.1)?;
    Ok(Conformalized {
        mesh,
        initial,
        distortion: best.2,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::{ellipsoid, icosphere};

    #[test]
    fn similarity_is_conformal() {
        let m = icosphere(3, 3).unwrap();
        let mut img = m.image().clone();
        img.scale(2.0);
        let d = conformality_error(&m.with_image(img).unwrap()).unwrap();
        assert!(d.per_face.iter().all(|q| (q - 1.0).abs() < 1e-12));
        assert_eq!(d.folded, 0);
    }

    #[test]
    fn anisotropic_scaling_distortion() {
        let m = ellipsoid(2.0, 1.0, 1.0, 4, 3).unwrap();
        let d = conformality_error(&m).unwrap();
        assert!((d.max - 2.0).abs() < 0.1, "{}", d.max);
    }

    #[test]
    fn automorphism_fixes_sphere_and_centers() {
        let a = [0.3, -0.2, 0.1];
        let y = sphere_automorphism(&a, &linalg::normalized(&[1.0, 2.0, 3.0]));
        assert!((linalg::norm(&y) - 1.0).abs() < 1e-12);
        let m = icosphere(3, 3).unwrap();
        let mut u = m
            .domain()
            .map(3, |p, out| out.copy_from_slice(&sphere_automorphism(&a, p)));
        let w = barycentric_areas(m.image(), m.faces()).unwrap();
        center_on_sphere(&mut u, &w);
        let mut c = [0.0; 3];
        for (p, w) in u.iter().zip(&w) {
            linalg::axpy(&mut c, *w, p);
        }
        assert!(linalg::norm(&c) < 1e-10);
    }

    #[test]
    fn conformal_mesh_is_a_fixed_point() {
        let m = icosphere(3, 3).unwrap();
        let mut img = m.image().clone();
        img.scale(2.0);
        let m = m.with_image(img).unwrap();
        let out = conformalize(&m, ConformalizeOptions::default()).unwrap();
        for (a, b) in out.mesh.domain().iter().zip(m.domain().iter()) {
            assert!(linalg::dist(a, b) < 1e-6);
        }
    }
}
