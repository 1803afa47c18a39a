//! Moebius transformations of `R^n u {oo}` as compositions of exact
//! primitives, plus stereographic projection between `S^n` and `R^n`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curve::ClosedCurve;
use crate::error::{Error, Result};
use crate::linalg;
use crate::math::{self, TAU};
use crate::mesh::SphereMesh;
use crate::points::{PointN, Points};

/// Default inversion guard, relative to the inversion radius.
pub const DEFAULT_GUARD: f64 = 1e-8;

/// Maximum rejections in [`random_safe`].
pub const MAX_REJECTIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub enum Primitive {
    Translation(PointN),
    /// Uniform scaling about the origin by a positive factor.
    Scaling(f64),
    /// Row-major orthogonal `n x n` matrix.
    Orthogonal {
        dim: usize,
        matrix: Vec<f64>,
    },
    /// `p -> c + rho^2 (p - c) / |p - c|^2`.
    Inversion {
        center: PointN,
        radius: f64,
    },
}

impl Primitive {
    pub fn inversion(center: impl Into<PointN>, radius: f64) -> Primitive {
        Primitive::Inversion {
            center: center.into(),
            radius,
        }
    }

    pub fn translation(t: impl Into<PointN>) -> Primitive {
        Primitive::Translation(t.into())
    }

    fn validate(&self) -> Result<()> {
        match self {
            Primitive::Translation(t) if !t.is_finite() => {
                Err(Error::InvalidParameter("translation must be finite".into()))
            }
            Primitive::Scaling(s) if !(*s > 0.0 && s.is_finite()) => Err(Error::InvalidParameter(
                alloc::format!("scaling factor {s} must be positive"),
            )),
            Primitive::Orthogonal { dim, matrix } => {
                if matrix.len() != dim * dim {
                    return Err(Error::InvalidParameter(
                        "orthogonal matrix has the wrong size".into(),
                    ));
                }
                let qtq = linalg::matmul(&linalg::transpose(matrix, *dim), matrix, *dim);
                let err = linalg::dist(&qtq, &linalg::identity(*dim));
                if !(err <= 1e-10) {
                    return Err(Error::InvalidParameter(alloc::format!(
                        "matrix is not orthogonal (|Q^T Q - I| = {err:e})"
                    )));
                }
                Ok(())
            }
            Primitive::Inversion { center, radius } => {
                if !(*radius > 0.0 && radius.is_finite()) || !center.is_finite() {
                    return Err(Error::InvalidParameter(
                        "inversion needs a finite center and positive radius".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Primitive::Translation(t) => Some(t.dim()),
            Primitive::Scaling(_) => None,
            Primitive::Orthogonal { dim, .. } => Some(*dim),
            Primitive::Inversion { center, .. } => Some(center.dim()),
        }
    }

    fn inverse(&self) -> Primitive {
        match self {
            Primitive::Translation(t) => {
                Primitive::Translation(PointN(t.iter().map(|x| -x).collect()))
            }
            Primitive::Scaling(s) => Primitive::Scaling(1.0 / s),
            Primitive::Orthogonal { dim, matrix } => Primitive::Orthogonal {
                dim: *dim,
                matrix: linalg::transpose(matrix, *dim),
            },
            inv @ Primitive::Inversion { .. } => inv.clone(),
        }
    }
}

/// A finite composition of primitives, applied left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct MoebiusMap {
    primitives: Vec<Primitive>,
    guard: f64,
}

impl Default for MoebiusMap {
    fn default() -> Self {
        MoebiusMap {
            primitives: Vec::new(),
            guard: DEFAULT_GUARD,
        }
    }
}

impl MoebiusMap {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn new(primitives: Vec<Primitive>) -> Result<Self> {
        for p in &primitives {
            p.validate()?;
        }
        let dims: Vec<usize> = primitives.iter().filter_map(Primitive::dim).collect();
        if dims.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::InvalidParameter(
                "primitives act on different dimensions".into(),
            ));
        }
        Ok(MoebiusMap {
            primitives,
            guard: DEFAULT_GUARD,
        })
    }

    /// Replaces the inversion guard (relative to each inversion radius).
    pub fn with_guard(mut self, guard: f64) -> Self {
        self.guard = guard;
        self
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    pub fn guard(&self) -> f64 {
        self.guard
    }

    /// `self` followed by `other`.
    pub fn then(mut self, other: &MoebiusMap) -> MoebiusMap {
        self.primitives.extend(other.primitives.iter().cloned());
        self
    }

    pub fn inverse(&self) -> MoebiusMap {
        MoebiusMap {
            primitives: self
                .primitives
                .iter()
                .rev()
                .map(Primitive::inverse)
                .collect(),
            guard: self.guard,
        }
    }

    /// Applies the map in place; on a guard violation returns the index of
    /// the offending primitive.
    fn apply_in_place(&self, p: &mut [f64]) -> core::result::Result<(), usize> {
        for (k, prim) in self.primitives.iter().enumerate() {
            match prim {
                Primitive::Translation(t) => linalg::add_assign(p, t),
                Primitive::Scaling(s) => p.iter_mut().for_each(|x| *x *= s),
                Primitive::Orthogonal { matrix, .. } => {
                    let q = linalg::matvec(matrix, p);
                    p.copy_from_slice(&q);
                }
                Primitive::Inversion { center, radius } => {
                    let d = linalg::sub(p, center);
                    let r2 = linalg::norm2(&d);
                    if !(math::sqrt(r2) > self.guard * radius) {
                        return Err(k);
                    }
                    let s = radius * radius / r2;
                    for ((x, c), di) in p.iter_mut().zip(center.iter()).zip(&d) {
                        *x = c + s * di;
                    }
                }
            }
        }
        Ok(())
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        match self.primitives.iter().find_map(Primitive::dim) {
            Some(d) if d != dim => Err(Error::InvalidInput(alloc::format!(
                "map acts on R^{d}, point is in R^{dim}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn apply(&self, p: &[f64]) -> Result<PointN> {
        self.check_dim(p.len())?;
        let mut q = p.to_vec();
        self.apply_in_place(&mut q)
            .map_err(|primitive| Error::PointAtInfinity { primitive })?;
        Ok(PointN(q))
    }

    /// Applies the map to every point, reporting all violating indices.
    pub fn apply_points(&self, points: &Points) -> Result<Points> {
        self.check_dim(points.dim())?;
        let mut out = points.clone();
        let mut bad = Vec::new();
        let mut first = usize::MAX;
        for (i, row) in out.iter_mut().enumerate() {
            if let Err(k) = self.apply_in_place(row) {
                first = first.min(k);
                bad.push(i);
            }
        }
        if bad.is_empty() {
            Ok(out)
        } else {
            Err(Error::VerticesAtInfinity {
                primitive: first,
                vertices: bad,
            })
        }
    }

    /// Transforms the positions of a curve or the image of a mesh.
    pub fn apply_shape<S: MoebiusTarget>(&self, shape: &S) -> Result<S> {
        shape.transformed(self)
    }
}

/// Shapes whose embedded positions can be pushed through a Moebius map.
pub trait MoebiusTarget: Sized {
    fn embedded_points(&self) -> &Points;
    fn transformed(&self, map: &MoebiusMap) -> Result<Self>;
}

impl MoebiusTarget for ClosedCurve {
    fn embedded_points(&self) -> &Points {
        self.points()
    }

    fn transformed(&self, map: &MoebiusMap) -> Result<Self> {
        ClosedCurve::new(map.apply_points(self.points())?)
    }
}

impl MoebiusTarget for SphereMesh {
    fn embedded_points(&self) -> &Points {
        self.image()
    }

    /// Only the image moves; conformal factors must be recomputed by callers.
    fn transformed(&self, map: &MoebiusMap) -> Result<Self> {
        self.with_image(map.apply_points(self.image())?)
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    math::sqrt(-2.0 * math::ln(u1)) * math::cos(TAU * u2)
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| standard_normal(rng)).collect();
        let r = linalg::norm(&v);
        if r > 1e-6 {
            return linalg::scaled(&v, 1.0 / r);
        }
    }
}

/// Random rotation as a product of Givens rotations over every coordinate pair.
fn random_rotation(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut q = linalg::identity(n);
    for i in 0..n {
        for j in i + 1..n {
            let a: f64 = rng.gen_range(0.0..TAU);
            let mut g = linalg::identity(n);
            let (c, s) = (math::cos(a), math::sin(a));
            g[i * n + i] = c;
            g[j * n + j] = c;
            g[i * n + j] = -s;
            g[j * n + i] = s;
            q = linalg::matmul(&g, &q, n);
        }
    }
    q
}

/// Seeded random Moebius map `Orthogonal . Scaling . Translation . Inversion`
/// whose inversion sphere stays at least `margin` away from every point of
/// the shape (center at distance `>= margin + rho` from all vertices).
pub fn random_safe<S: MoebiusTarget>(seed: u64, shape: &S, margin: f64) -> Result<MoebiusMap> {
    random_safe_for_points(seed, shape.embedded_points(), margin)
}

pub fn random_safe_for_points(seed: u64, points: &Points, margin: f64) -> Result<MoebiusMap> {
    if !(margin > 0.0 && margin.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!(
            "margin {margin} must be positive"
        )));
    }
    let n = points.dim();
    let centroid = points.centroid();
    let reach = points
        .iter()
        .map(|p| linalg::dist(p, &centroid))
        .fold(0.0, f64::max)
        .max(1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_REJECTIONS {
        let radius = reach * rng.gen_range(0.3..1.0);
        let dir = random_direction(&mut rng, n);
        let dist = rng.gen_range(0.0..(2.0 * reach + margin + radius));
        let mut center = centroid.0.clone();
        linalg::axpy(&mut center, dist, &dir);
        let closest = points
            .iter()
            .map(|p| linalg::dist(p, &center))
            .fold(f64::INFINITY, f64::min);
        if closest < margin + radius {
            continue;
        }
        let shift: Vec<f64> = (0..n).map(|_| reach * rng.gen_range(-1.0..1.0)).collect();
        let scale = math::exp(rng.gen_range(-core::f64::consts::LN_2..core::f64::consts::LN_2));
        let rotation = random_rotation(&mut rng, n);
        return MoebiusMap::new(vec![
            Primitive::Inversion {
                center: PointN(center),
                radius,
            },
            Primitive::Translation(PointN(shift)),
            Primitive::Scaling(scale),
            Primitive::Orthogonal {
                dim: n,
                matrix: rotation,
            },
        ]);
    }
    Err(Error::SamplingFailure {
        attempts: MAX_REJECTIONS,
    })
}

/// Stereographic projection from the north pole `e_{n+1}` of `S^n` onto `R^n`.
pub fn stereographic(p: &[f64]) -> Result<PointN> {
    let n = p.len();
    if n < 2 {
        return Err(Error::InvalidInput(
            "need a point of S^n with n >= 1".into(),
        ));
    }
    let denom = 1.0 - p[n - 1];
    let off_pole = math::sqrt(linalg::norm2(&p[..n - 1]) + denom * denom);
    if !(off_pole > 1e-12) {
        return Err(Error::PointAtInfinity { primitive: 0 });
    }
    Ok(PointN(p[..n - 1].iter().map(|x| x / denom).collect()))
}

/// Inverse stereographic projection `R^n -> S^n`.
pub fn inverse_stereographic(y: &[f64]) -> PointN {
    let r2 = linalg::norm2(y);
    let mut out: Vec<f64> = y.iter().map(|x| 2.0 * x / (r2 + 1.0)).collect();
    out.push((r2 - 1.0) / (r2 + 1.0));
    PointN(out)
}
