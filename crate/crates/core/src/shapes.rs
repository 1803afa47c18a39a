//! Deterministic test geometry: curves, icospheres, ellipsoids, the pinch
//! family and spun knots in `R^4`.
//!
//! The pinch and spun-knot surfaces are surfaces of revolution. They are
//! generated directly in a conformal parametrization: a profile curve with
//! distance `rho` to the rotation axis is reparametrized by `s = int dsigma / rho`,
//! which is matched to the Mercator coordinate `log tan(theta / 2)` of the
//! domain sphere. The resulting map from the icosphere domain is conformal up
//! to discretization, so no conformalization pass is needed.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curve::ClosedCurve;
use crate::error::{Error, Result};
use crate::linalg;
use crate::math::{self, PI, TAU};
use crate::mesh::{Face, SphereMesh};
use crate::points::Points;

#[derive(Debug, Clone, PartialEq)]
pub enum CurveKind {
    /// Unit circle in the `xy` plane.
    Circle,
    /// Axis-aligned ellipse with semi-axes `a` and `b`.
    Ellipse { a: f64, b: f64 },
    /// `((2 + cos q t) cos p t, (2 + cos q t) sin p t, sin q t)`.
    TorusKnot { p: u32, q: u32 },
    /// Unit circle with a seeded radial perturbation of relative size `amp`
    /// built from Fourier modes `2..=mode + 1`.
    PerturbedCircle { amp: f64, mode: u32, seed: u64 },
}

/// Samples a closed curve in `R^3` at `n` parameter values `2 pi k / n`.
pub fn make_curve(kind: &CurveKind, n: usize) -> Result<ClosedCurve> {
    if n < ClosedCurve::MIN_VERTICES {
        return Err(Error::InvalidParameter(alloc::format!(
            "need at least 8 vertices, got {n}"
        )));
    }
    let mut pts = Points::with_capacity(3, n);
    let t = |k: usize| TAU * k as f64 / n as f64;
    match *kind {
        CurveKind::Circle => {
            (0..n).for_each(|k| pts.push(&[math::cos(t(k)), math::sin(t(k)), 0.0]))
        }
        CurveKind::Ellipse { a, b } => {
            if !(a > 0.0 && b > 0.0) {
                return Err(Error::InvalidParameter(
                    "ellipse axes must be positive".into(),
                ));
            }
            (0..n).for_each(|k| pts.push(&[a * math::cos(t(k)), b * math::sin(t(k)), 0.0]))
        }
        CurveKind::TorusKnot { p, q } => {
            if p == 0 || q == 0 || gcd(p, q) != 1 {
                return Err(Error::InvalidParameter(alloc::format!(
                    "torus knot ({p}, {q}) needs coprime positive p, q"
                )));
            }
            let (p, q) = (p as f64, q as f64);
            for k in 0..n {
                let s = t(k);
                let r = 2.0 + math::cos(q * s);
                pts.push(&[r * math::cos(p * s), r * math::sin(p * s), math::sin(q * s)]);
            }
        }
        CurveKind::PerturbedCircle { amp, mode, seed } => {
            if !(0.0..0.5).contains(&amp) || mode == 0 {
                return Err(Error::InvalidParameter(
                    "perturbation needs 0 <= amp < 0.5 and mode >= 1".into(),
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let modes: Vec<(f64, f64, f64)> = (2..mode + 2)
                .map(|m| (m as f64, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..TAU)))
                .collect();
            let norm: f64 = modes.iter().map(|m| m.1.abs()).sum::<f64>().max(1e-12);
            for k in 0..n {
                let s = t(k);
                let bump: f64 = modes
                    .iter()
                    .map(|&(m, c, ph)| c * math::cos(m * s + ph))
                    .sum();
                let r = 1.0 + amp * bump / norm;
                pts.push(&[r * math::cos(s), r * math::sin(s), 0.0]);
            }
        }
    }
    ClosedCurve::new(pts)
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Knotted arcs in the half-space `z >= 0` with endpoints on `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcKind {
    /// Half circle; spins to a round sphere.
    Unknot,
    /// Trefoil cut open at its lowest point, with both ends dropped
    /// vertically to the boundary plane.
    Trefoil,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SphereKind {
    Icosphere {
        subdiv: u32,
    },
    Ellipsoid {
        a: f64,
        b: f64,
        c: f64,
        subdiv: u32,
    },
    /// Round sphere with the two polar caps pulled towards the center until
    /// they are `gap` apart.
    Pinch {
        gap: f64,
        subdiv: u32,
    },
    /// Arc spun about the boundary plane of `R^3_+` inside `R^4`.
    SpunKnot {
        arc: ArcKind,
        subdiv: u32,
    },
}

pub fn make_sphere_mesh(kind: &SphereKind, n_ambient: usize) -> Result<SphereMesh> {
    if !(3..=4).contains(&n_ambient) {
        return Err(Error::InvalidParameter(alloc::format!(
            "ambient dimension must be 3 or 4, got {n_ambient}"
        )));
    }
    match *kind {
        SphereKind::Icosphere { subdiv } => icosphere(subdiv, n_ambient),
        SphereKind::Ellipsoid { a, b, c, subdiv } => ellipsoid(a, b, c, subdiv, n_ambient),
        SphereKind::Pinch { gap, subdiv } => pinch(gap, subdiv, n_ambient),
        SphereKind::SpunKnot { arc, subdiv } => {
            if n_ambient != 4 {
                return Err(Error::InvalidParameter("spun knots live in R^4".into()));
            }
            spun_knot(arc, subdiv)
        }
    }
}

fn check_subdiv(subdiv: u32) -> Result<()> {
    if (1..=7).contains(&subdiv) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(alloc::format!(
            "subdivision level {subdiv} outside [1, 7]"
        )))
    }
}

/// Unit icosphere points and outward-oriented faces, with vertices at the
/// poles `(0, 0, +-1)`. Level `s` has `10 * 4^s + 2` vertices.
pub fn icosphere_points(subdiv: u32) -> (Points, Vec<Face>) {
    let h = 1.0 / math::sqrt(5.0);
    let rr = 2.0 * h;
    let mut pts = Points::with_capacity(3, 10 * 4usize.pow(subdiv) + 2);
    pts.push(&[0.0, 0.0, 1.0]);
    for k in 0..5 {
        let a = TAU * k as f64 / 5.0;
        pts.push(&[rr * math::cos(a), rr * math::sin(a), h]);
    }
    for k in 0..5 {
        let a = TAU * k as f64 / 5.0 + PI / 5.0;
        pts.push(&[rr * math::cos(a), rr * math::sin(a), -h]);
    }
    pts.push(&[0.0, 0.0, -1.0]);
    let up = |k: usize| 1 + k % 5;
    let lo = |k: usize| 6 + k % 5;
    let mut faces = Vec::with_capacity(20);
    for k in 0..5 {
        faces.push([0, up(k), up(k + 1)]);
        faces.push([up(k), lo(k), up(k + 1)]);
        faces.push([up(k + 1), lo(k), lo(k + 1)]);
        faces.push([11, lo(k + 1), lo(k)]);
    }
    for f in faces.iter_mut() {
        orient_outward(&pts, f);
    }
    for _ in 0..subdiv {
        let mut mid: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut next = Vec::with_capacity(4 * faces.len());
        for &[a, b, c] in &faces {
            let mut m = |i: usize, j: usize, pts: &mut Points| -> usize {
                *mid.entry((i.min(j), i.max(j))).or_insert_with(|| {
                    let p: Vec<f64> = pts
                        .row(i)
                        .iter()
                        .zip(pts.row(j))
                        .map(|(x, y)| x + y)
                        .collect();
                    pts.push(&linalg::normalized(&p));
                    pts.len() - 1
                })
            };
            let ab = m(a, b, &mut pts);
            let bc = m(b, c, &mut pts);
            let ca = m(c, a, &mut pts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (pts, faces)
}

fn orient_outward(pts: &Points, f: &mut Face) {
    let (a, b, c) = (pts.row(f[0]), pts.row(f[1]), pts.row(f[2]));
    let n = linalg::cross3(&linalg::sub(b, a), &linalg::sub(c, a));
    let centroid: Vec<f64> = (0..3).map(|k| a[k] + b[k] + c[k]).collect();
    if linalg::dot(&n, &centroid) < 0.0 {
        f.swap(1, 2);
    }
}

/// Unit icosphere with `image = domain`, padded with zeros to `n_ambient`.
pub fn icosphere(subdiv: u32, n_ambient: usize) -> Result<SphereMesh> {
    check_subdiv(subdiv)?;
    let (pts, faces) = icosphere_points(subdiv);
    let image = pts.with_dim(n_ambient);
    SphereMesh::new(pts, image, faces)
}

/// `image = diag(a, b, c) * domain`. The icosphere is turned so that its
/// polar vertices sit on the `x` axis.
pub fn ellipsoid(a: f64, b: f64, c: f64, subdiv: u32, n_ambient: usize) -> Result<SphereMesh> {
    check_subdiv(subdiv)?;
    if !(a > 0.0 && b > 0.0 && c > 0.0) {
        return Err(Error::InvalidParameter(
            "ellipsoid axes must be positive".into(),
        ));
    }
    let (pts, faces) = icosphere_points(subdiv);
    let domain = pts.map(3, |p, out| out.copy_from_slice(&[p[2], p[0], p[1]]));
    let image = domain.map(n_ambient, |p, out| {
        out[0] = a * p[0];
        out[1] = b * p[1];
        out[2] = c * p[2];
    });
    SphereMesh::new(domain, image, faces)
}

/// Ellipsoid of revolution with semi-axis `a` along `z` and unit equator,
/// in conformal coordinates (domain points map by matching the Mercator
/// coordinate), so no conformalization is needed.
pub fn conformal_spheroid(a: f64, subdiv: u32, n_ambient: usize) -> Result<SphereMesh> {
    check_subdiv(subdiv)?;
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidParameter(
            "spheroid axis must be positive".into(),
        ));
    }
    const SAMPLES: usize = 20_000;
    let mut axis = Vec::with_capacity(SAMPLES + 1);
    let mut rho = Vec::with_capacity(SAMPLES + 1);
    for k in 0..=SAMPLES {
        let t = PI * k as f64 / SAMPLES as f64;
        rho.push(if k == 0 || k == SAMPLES {
            0.0
        } else {
            math::sin(t)
        });
        axis.push(alloc::vec![a * math::cos(t)]);
    }
    let profile = Profile::new(axis, rho)?;
    let (domain, faces) = icosphere_points(subdiv);
    let image = profile.revolve(
        &domain,
        |axis, x, y, out| {
            out[0] = x;
            out[1] = y;
            out[2] = axis[0];
        },
        n_ambient,
    );
    SphereMesh::new(domain, image, faces)
}

/// Cassini oval `|z - a| |z + a| = b^2` with `b^2 = a^2 + gap^2 / 4`,
/// revolved about its short axis: a sphere whose two polar caps are drawn
/// in until their tips are `gap` apart on the axis. `a = 1 / sqrt 2`, so the
/// equatorial radius tends to 1 as the gap closes.
pub fn pinch(gap: f64, subdiv: u32, n_ambient: usize) -> Result<SphereMesh> {
    check_subdiv(subdiv)?;
    if !(gap > 0.0 && gap < 2.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "pinch gap {gap} outside (0, 2)"
        )));
    }
    let a2 = 0.5;
    let b4 = (a2 + 0.25 * gap * gap) * (a2 + 0.25 * gap * gap);
    const SAMPLES: usize = 20_000;
    let mut axis = Vec::with_capacity(SAMPLES + 1);
    let mut rho = Vec::with_capacity(SAMPLES + 1);
    for k in 0..=SAMPLES {
        // polar angle of the oval from +pi/2 (upper tip) to -pi/2 (lower tip)
        let phi = 0.5 * PI - PI * k as f64 / SAMPLES as f64;
        let s2 = math::sin(2.0 * phi);
        let r = math::sqrt(a2 * math::cos(2.0 * phi) + math::sqrt(b4 - a2 * a2 * s2 * s2));
        rho.push(if k == 0 || k == SAMPLES {
            0.0
        } else {
            r * math::cos(phi)
        });
        axis.push(alloc::vec![r * math::sin(phi)]);
    }
    let profile = Profile::new(axis, rho)?;
    let (domain, faces) = icosphere_points(subdiv);
    let image = profile.revolve(
        &domain,
        |axis, x, y, out| {
            out[0] = x;
            out[1] = y;
            out[2] = axis[0];
        },
        n_ambient,
    );
    SphereMesh::new(domain, image, faces)
}

/// Samples of the arc used by [`spun_knot`], as points `(a, b, c)` with `c >= 0`.
pub fn spin_arc(kind: ArcKind, samples: usize) -> Points {
    let mut pts = Points::with_capacity(3, samples + 1);
    match kind {
        ArcKind::Unknot => {
            for k in 0..=samples {
                let t = PI * k as f64 / samples as f64;
                let c = if k == 0 || k == samples {
                    0.0
                } else {
                    math::sin(t)
                };
                pts.push(&[math::cos(t), 0.0, c]);
            }
        }
        ArcKind::Trefoil => {
            // trefoil (sin u + 2 sin 2u, cos u - 2 cos 2u, 3 - sin 3u), cut at u = pi/6
            const GAP: f64 = 0.15;
            const RAMP: f64 = 0.05;
            const HEIGHT: f64 = 5.0;
            let u0 = PI / 6.0 + GAP;
            let span = TAU - 2.0 * GAP;
            for k in 0..=samples {
                let t = k as f64 / samples as f64;
                // horizontal motion freezes at the ends so the arc meets the plane orthogonally
                let u = u0 + span * (t - math::sin(TAU * t) / TAU);
                let ramp = |x: f64| math::sin(0.5 * PI * (x / RAMP).min(1.0));
                let lift = ramp(t) * ramp(1.0 - t);
                let c = if k == 0 || k == samples {
                    0.0
                } else {
                    (HEIGHT - math::sin(3.0 * u)) * lift
                };
                pts.push(&[
                    math::sin(u) + 2.0 * math::sin(2.0 * u),
                    math::cos(u) - 2.0 * math::cos(2.0 * u),
                    c,
                ]);
            }
        }
    }
    pts
}

/// Knotted 2-sphere in `R^4` obtained by spinning an arc about the plane `c = 0`:
/// `(a, b, c) -> (c cos phi, c sin phi, a, b)`.
pub fn spun_knot(kind: ArcKind, subdiv: u32) -> Result<SphereMesh> {
    check_subdiv(subdiv)?;
    spun_sphere_from_arc(&spin_arc(kind, 20_000), subdiv)
}

/// Spins an arbitrary arc in `R^3_+`. The arc must be simple, touch the plane
/// `c = 0` only at its two endpoints, and have distinct endpoints.
pub fn spun_sphere_from_arc(arc: &Points, subdiv: u32) -> Result<SphereMesh> {
    check_subdiv(subdiv)?;
    if arc.dim() != 3 || arc.len() < 3 {
        return Err(Error::Generation(
            "arc needs at least 3 points in R^3".into(),
        ));
    }
    let n = arc.len();
    if arc.row(0)[2] != 0.0 || arc.row(n - 1)[2] != 0.0 {
        return Err(Error::Generation(
            "arc endpoints must lie on the boundary plane".into(),
        ));
    }
    if let Some(k) = (1..n - 1).find(|&k| !(arc.row(k)[2] > 0.0)) {
        return Err(Error::Generation(alloc::format!(
            "arc point {k} leaves the open half-space"
        )));
    }
    check_arc_simple(arc)?;
    let axis: Vec<Vec<f64>> = arc.iter().map(|p| alloc::vec![p[0], p[1]]).collect();
    let rho: Vec<f64> = arc.iter().map(|p| p[2]).collect();
    let profile = Profile::new(axis, rho)?;
    let (domain, faces) = icosphere_points(subdiv);
    let image = profile.revolve(
        &domain,
        |axis, x, y, out| {
            out[0] = x;
            out[1] = y;
            out[2] = axis[0];
            out[3] = axis[1];
        },
        4,
    );
    SphereMesh::new(domain, image, faces)
}

/// Rejects arcs whose coarse polyline comes closer to itself than a small
/// fraction of its length between segments that are far apart along the arc.
fn check_arc_simple(arc: &Points) -> Result<()> {
    const COARSE: usize = 400;
    let n = arc.len();
    let step = ((n - 1) / COARSE).max(1);
    let idx: Vec<usize> = (0..n)
        .step_by(step)
        .chain(core::iter::once(n - 1))
        .collect();
    let mut idx = idx;
    idx.dedup();
    let mut cum = alloc::vec![0.0];
    for w in idx.windows(2) {
        cum.push(cum[cum.len() - 1] + linalg::dist(arc.row(w[0]), arc.row(w[1])));
    }
    let tol = 1e-4 * cum[cum.len() - 1];
    for i in 0..idx.len() - 1 {
        for j in i + 2..idx.len() - 1 {
            if cum[j] - cum[i + 1] < 4.0 * tol {
                continue;
            }
            let d = linalg::segment_distance(
                arc.row(idx[i]),
                arc.row(idx[i + 1]),
                arc.row(idx[j]),
                arc.row(idx[j + 1]),
            );
            if d < tol {
                return Err(Error::Generation(alloc::format!(
                    "arc self-intersects near samples {} and {}",
                    idx[i],
                    idx[j]
                )));
            }
        }
    }
    Ok(())
}

/// A profile curve from one pole to the other: per sample the coordinates
/// along the fixed axis space and the distance `rho` to it (zero at the ends).
struct Profile {
    axis: Vec<Vec<f64>>,
    rho: Vec<f64>,
    /// Conformal coordinate `s = int dsigma / rho`, infinite at the ends.
    s: Vec<f64>,
}

impl Profile {
    fn new(axis: Vec<Vec<f64>>, rho: Vec<f64>) -> Result<Profile> {
        let n = rho.len();
        if n < 3 || rho[0] != 0.0 || rho[n - 1] != 0.0 {
            return Err(Error::Generation(
                "profile must start and end on the axis".into(),
            ));
        }
        let seg = |k: usize| {
            let da = linalg::dist2(&axis[k], &axis[k + 1]);
            let dr = rho[k + 1] - rho[k];
            math::sqrt(da + dr * dr)
        };
        // exact integral of dsigma / rho for rho linear on each segment
        let ds = |k: usize| {
            let (r0, r1) = (rho[k], rho[k + 1]);
            let len = seg(k);
            if (r1 - r0).abs() <= 1e-12 * (r0 + r1) {
                len / (0.5 * (r0 + r1))
            } else {
                len * math::ln(r1 / r0) / (r1 - r0)
            }
        };
        // balance the revolved area (2 pi rho dsigma) about s = 0
        let area: Vec<f64> = (0..n - 1)
            .map(|k| 0.5 * (rho[k] + rho[k + 1]) * seg(k))
            .collect();
        let total: f64 = area.iter().sum();
        let mut acc = 0.0;
        let mut mid = 0;
        for (k, a) in area.iter().enumerate() {
            if acc + a >= 0.5 * total {
                mid = k;
                break;
            }
            acc += a;
        }
        let mid = mid.clamp(1, n - 2);
        let mut s = alloc::vec![0.0; n];
        for k in mid + 1..n {
            s[k] = s[k - 1] + ds(k - 1);
        }
        for k in (0..mid).rev() {
            s[k] = s[k + 1] - ds(k);
        }
        Ok(Profile { axis, rho, s })
    }

    /// Profile point (axis coordinates, rho) at conformal coordinate `m`.
    fn at(&self, m: f64) -> (Vec<f64>, f64) {
        let n = self.rho.len();
        if m == f64::NEG_INFINITY {
            return (self.axis[0].clone(), 0.0);
        }
        if m == f64::INFINITY {
            return (self.axis[n - 1].clone(), 0.0);
        }
        // s is increasing, -inf at 0 and +inf at n-1
        let k = match self.s[1..n - 1].iter().position(|&v| v > m) {
            Some(p) => p, // segment [p, p + 1] in full indexing
            None => n - 2,
        };
        let (r0, r1) = (self.rho[k], self.rho[k + 1]);
        let len = {
            let da = linalg::dist2(&self.axis[k], &self.axis[k + 1]);
            math::sqrt(da + (r1 - r0) * (r1 - r0))
        };
        // invert s on the segment, anchored at an endpoint with finite s
        let t = if (r1 - r0).abs() <= 1e-12 * (r0 + r1) {
            let anchor = if self.s[k].is_finite() {
                (self.s[k], 0.0)
            } else {
                (self.s[k + 1], 1.0)
            };
            anchor.1 + (m - anchor.0) * 0.5 * (r0 + r1) / len
        } else {
            let slope = (r1 - r0) / len;
            let (sa, ra) = if self.s[k].is_finite() {
                (self.s[k], r0)
            } else {
                (self.s[k + 1], r1)
            };
            let r = ra * math::exp((m - sa) * slope);
            (r - r0) / (r1 - r0)
        };
        let t = t.clamp(0.0, 1.0);
        let axis = self.axis[k]
            .iter()
            .zip(&self.axis[k + 1])
            .map(|(a, b)| a + t * (b - a))
            .collect();
        (axis, r0 + t * (r1 - r0))
    }

    /// Image of every domain point under the conformal revolution map.
    fn revolve(
        &self,
        domain: &Points,
        place: impl Fn(&[f64], f64, f64, &mut [f64]),
        dim: usize,
    ) -> Points {
        domain.map(dim, |p, out| {
            let planar = math::hypot(p[0], p[1]);
            // Mercator coordinate log tan(theta / 2), theta measured from +z
            let m = if planar == 0.0 {
                if p[2] > 0.0 {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                }
            } else if p[2] >= 0.0 {
                math::ln(planar / (1.0 + p[2]))
            } else {
                math::ln((1.0 - p[2]) / planar)
            };
            let phi = math::atan2(p[1], p[0]);
            let (axis, rho) = self.at(m);
            place(&axis, rho * math::cos(phi), rho * math::sin(phi), out);
        })
    }
}
