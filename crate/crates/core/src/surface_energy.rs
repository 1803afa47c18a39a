//! Regularized self-energy of conformally parametrized spheres, the
//! curvature regularizer, the Schwarz lower bound and the pair energy.
//!
//! For a vertex pair `(i, j)` that does not share a face the integrand is
//! `(1/|x_i - x_j|^2 - d_i d_j / |f_i - f_j|^2)^2 a_i a_j` with `x` on the
//! unit sphere, `f` the image, `a` domain dual areas and `d` the conformal
//! factor. Both kernels are Moebius covariant with the same weight, so the
//! integrand vanishes identically for similarities and the sum is invariant
//! (up to discretization) under Moebius maps of the image.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conformal::conformality_error;
use crate::curvature::{angle_sums, curvature_areas, mean_curvature_on};
use crate::curve_energy::{EnergyBreakdown, Singularity};
use crate::error::{Error, Result};
use crate::linalg;
use crate::math::{self, TAU};
use crate::mesh::{barycentric_areas, edge_fit_factor, Face, SphereMesh, Topology};
use crate::moebius::{inverse_stereographic, random_safe};
use crate::points::Points;
use crate::reduce;

/// Maximal distortion accepted silently.
pub const CONFORMALITY_WARN: f64 = 1.2;
/// Maximal distortion accepted at all.
pub const CONFORMALITY_LIMIT: f64 = 2.0;
/// Non-adjacent faces closer than this fraction of the diameter count as touching.
pub const EMBEDDING_TOL: f64 = 1e-6;

/// Distance model for the image kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ambient {
    #[default]
    Euclidean,
    /// Chord distance on `S^n` after inverse stereographic projection of the image.
    Chordal,
}

/// How the per-vertex conformal factor `d_i` is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FactorModel {
    /// Local least-squares fit of the edge-length ratios around each vertex.
    #[default]
    EdgeFit,
    /// `sqrt(A_i / a_i)` from barycentric dual areas.
    AreaRatio,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceOptions {
    pub factor: FactorModel,
    pub warn_distortion: f64,
    pub max_distortion: f64,
    pub check_embedding: bool,
    pub ambient: Ambient,
}

impl Default for SurfaceOptions {
    fn default() -> Self {
        SurfaceOptions {
            factor: FactorModel::EdgeFit,
            warn_distortion: CONFORMALITY_WARN,
            max_distortion: CONFORMALITY_LIMIT,
            check_embedding: true,
            ambient: Ambient::Euclidean,
        }
    }
}

impl SurfaceOptions {
    /// No conformality gate and no embedding scan; for inner loops of solvers.
    pub fn unchecked() -> Self {
        SurfaceOptions {
            max_distortion: f64::INFINITY,
            warn_distortion: f64::INFINITY,
            check_embedding: false,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceE0 {
    pub value: f64,
    pub density: Vec<f64>,
    pub singularity: Option<Singularity>,
    pub max_distortion: f64,
    pub warnings: Vec<String>,
}

/// The closest pair of faces that share no vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceGap {
    pub faces: [usize; 2],
    pub distance: f64,
}

/// Closest non-adjacent face pair closer than `reach`, by sweep and prune
/// along the first coordinate; `None` if no pair comes that close.
pub fn face_gap_within(points: &Points, faces: &[Face], reach: f64) -> Option<FaceGap> {
    let dim = points.dim();
    let boxes: Vec<(Vec<f64>, Vec<f64>)> = faces
        .iter()
        .map(|t| {
            let mut lo = vec![f64::INFINITY; dim];
            let mut hi = vec![f64::NEG_INFINITY; dim];
            for &v in t {
                for (k, x) in points.row(v).iter().enumerate() {
                    lo[k] = lo[k].min(*x);
                    hi[k] = hi[k].max(*x);
                }
            }
            (lo, hi)
        })
        .collect();
    let mut order: Vec<usize> = (0..faces.len()).collect();
    order.sort_by(|&a, &b| boxes[a].0[0].total_cmp(&boxes[b].0[0]).then(a.cmp(&b)));
    let found = reduce::map_rows(order.len(), |oi| {
        let f = order[oi];
        let mut best: Option<FaceGap> = None;
        for &g in &order[oi + 1..] {
            if boxes[g].0[0] > boxes[f].1[0] + reach {
                break;
            }
            if (1..dim).any(|k| {
                boxes[g].0[k] > boxes[f].1[k] + reach || boxes[f].0[k] > boxes[g].1[k] + reach
            }) {
                continue;
            }
            if faces[f].iter().any(|v| faces[g].contains(v)) {
                continue;
            }
            let a: Vec<&[f64]> = faces[f].iter().map(|&v| points.row(v)).collect();
            let b: Vec<&[f64]> = faces[g].iter().map(|&v| points.row(v)).collect();
            let d = linalg::simplex_distance(&a, &b);
            if d < reach && best.is_none_or(|b| d < b.distance) {
                best = Some(FaceGap {
                    faces: [f.min(g), f.max(g)],
                    distance: d,
                });
            }
        }
        best
    });
    found
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<FaceGap>, g| match acc {
            Some(a) if a.distance <= g.distance => Some(a),
            _ => Some(g),
        })
}

/// Fails with [`Error::NotEmbedded`] if non-adjacent faces come within
/// `EMBEDDING_TOL * diameter` of each other.
pub fn check_embedded(m: &SphereMesh) -> Result<()> {
    let reach = EMBEDDING_TOL * m.image().diameter();
    match face_gap_within(m.image(), m.faces(), reach) {
        Some(gap) => Err(Error::NotEmbedded {
            faces: gap.faces,
            distance: gap.distance,
        }),
        None => Ok(()),
    }
}

/// Fixed domain data of the pair sum; the image may vary.
#[derive(Debug, Clone)]
pub struct PairKernel {
    domain: Points,
    domain_areas: Vec<f64>,
    faces: Arc<Vec<Face>>,
    topology: Arc<Topology>,
    model: FactorModel,
    skip: Vec<Vec<usize>>,
}

impl PairKernel {
    pub fn new(m: &SphereMesh) -> Result<PairKernel> {
        PairKernel::with_model(m, FactorModel::EdgeFit)
    }

    pub fn with_model(m: &SphereMesh, model: FactorModel) -> Result<PairKernel> {
        let skip = m.topology().neighbors.iter().enumerate().map(|(i, nb)| {
            let mut s = nb.clone();
            s.push(i);
            s.sort_unstable();
            s
        });
        Ok(PairKernel {
            domain: m.domain().clone(),
            domain_areas: m.domain_dual_areas()?,
            faces: Arc::new(m.faces().to_vec()),
            topology: Arc::new(m.topology().clone()),
            model,
            skip: skip.collect(),
        })
    }

    pub fn domain_areas(&self) -> &[f64] {
        &self.domain_areas
    }

    pub fn model(&self) -> FactorModel {
        self.model
    }

    /// Conformal factors of an image.
    pub fn factors(&self, image: &Points) -> Result<Vec<f64>> {
        match self.model {
            FactorModel::EdgeFit => (0..image.len())
                .map(|i| edge_fit_factor(&self.domain, image, &self.topology, i))
                .collect(),
            FactorModel::AreaRatio => Ok(barycentric_areas(image, &self.faces)?
                .iter()
                .zip(&self.domain_areas)
                .map(|(big, small)| math::sqrt(big / small))
                .collect()),
        }
    }

    /// Vertices whose factor depends on the position of vertex `v`, sorted.
    pub fn support(&self, v: usize) -> Vec<usize> {
        self.skip[v].clone()
    }

    /// Recomputes `d` on `set` for an image that changed only at vertices
    /// whose support is contained in `set`.
    pub fn refresh_factors(&self, image: &Points, d: &mut [f64], set: &[usize]) -> Result<()> {
        match self.model {
            FactorModel::EdgeFit => {
                for &i in set {
                    d[i] = edge_fit_factor(&self.domain, image, &self.topology, i)?;
                }
            }
            FactorModel::AreaRatio => {
                for &i in set {
                    let mut area = 0.0;
                    for &f in &self.topology.vertex_faces[i] {
                        let t = self.faces[f];
                        area += linalg::triangle_area(
                            image.row(t[0]),
                            image.row(t[1]),
                            image.row(t[2]),
                        ) / 3.0;
                    }
                    d[i] = math::sqrt(area / self.domain_areas[i]);
                }
            }
        }
        Ok(())
    }

    /// Row `i` of the pair sum: `a_i sum_j term_ij`, or the offending
    /// partner if two images coincide.
    pub fn row(&self, image: &Points, d: &[f64], i: usize) -> core::result::Result<f64, usize> {
        let x = &self.domain;
        let a = &self.domain_areas;
        let skip = &self.skip[i];
        let mut s = 0.0;
        let mut k = 0;
        for j in 0..x.len() {
            if k < skip.len() && skip[k] == j {
                k += 1;
                continue;
            }
            let image2 = linalg::dist2(image.row(i), image.row(j));
            if !(image2 > 0.0) {
                return Err(j);
            }
            let t = 1.0 / linalg::dist2(x.row(i), x.row(j)) - d[i] * d[j] / image2;
            s += t * t * a[j];
        }
        Ok(s * a[i])
    }

    /// Full sum with per-vertex density.
    pub fn evaluate(&self, image: &Points, d: &[f64]) -> (f64, Vec<f64>, Option<Singularity>) {
        let n = self.domain.len();
        let rows = reduce::map_rows(n, |i| self.row(image, d, i));
        if let Some((i, j)) = rows
            .iter()
            .enumerate()
            .find_map(|(i, r)| r.err().map(|j| (i, j)))
        {
            return (
                f64::INFINITY,
                vec![f64::INFINITY; n],
                Some(Singularity {
                    pair: [i.min(j), i.max(j)],
                    distance: 0.0,
                }),
            );
        }
        let density: Vec<f64> = rows
            .into_iter()
            .map(|r| r.unwrap_or(f64::INFINITY))
            .collect();
        (reduce::tree_sum(&density), density, None)
    }

    /// `2 sum_{i in S} row_i - sum_{i, j in S} term_ij`: every term of the full
    /// sum that involves a vertex of `set` (sorted), counted once per ordered pair.
    pub fn local(&self, image: &Points, d: &[f64], set: &[usize]) -> f64 {
        let x = &self.domain;
        let a = &self.domain_areas;
        let mut total = 0.0;
        for &i in set {
            match self.row(image, d, i) {
                Ok(r) => total += 2.0 * r,
                Err(_) => return f64::INFINITY,
            }
            for &j in set {
                if self.skip[i].binary_search(&j).is_ok() {
                    continue;
                }
                let t = 1.0 / linalg::dist2(x.row(i), x.row(j))
                    - d[i] * d[j] / linalg::dist2(image.row(i), image.row(j));
                total -= t * t * a[i] * a[j];
            }
        }
        total
    }
}

fn chordal_image(m: &SphereMesh) -> Result<SphereMesh> {
    let mut out = Points::with_capacity(m.dim() + 1, m.vertex_count());
    for p in m.image().iter() {
        out.push(&inverse_stereographic(p));
    }
    m.with_image(out)
}

pub fn surface_e0(m: &SphereMesh) -> Result<f64> {
    surface_e0_with(m, SurfaceOptions::default()).map(|e| e.value)
}

pub fn surface_e0_with(m: &SphereMesh, opts: SurfaceOptions) -> Result<SurfaceE0> {
    let mut warnings = Vec::new();
    let max_distortion = if opts.max_distortion.is_finite() || opts.warn_distortion.is_finite() {
        let dist = conformality_error(m)?;
        if dist.max > opts.max_distortion {
            return Err(Error::Conformality {
                max_distortion: dist.max,
                limit: opts.max_distortion,
            });
        }
        if dist.max > opts.warn_distortion {
            warnings.push(alloc::format!(
                "conformal distortion {:.4} exceeds {}",
                dist.max,
                opts.warn_distortion
            ));
        }
        dist.max
    } else {
        f64::NAN
    };
    if opts.check_embedding {
        check_embedded(m)?;
    }
    let target = match opts.ambient {
        Ambient::Euclidean => m.clone(),
        Ambient::Chordal => chordal_image(m)?,
    };
    let kernel = PairKernel::with_model(&target, opts.factor)?;
    let d = kernel.factors(target.image())?;
    let (value, density, singularity) = kernel.evaluate(target.image(), &d);
    Ok(SurfaceE0 {
        value,
        density,
        singularity,
        max_distortion,
        warnings,
    })
}

/// Per-vertex `|H|^2 - 2K` and the curvature cell areas it is integrated against.
pub fn second_form_density(
    points: &Points,
    faces: &[Face],
    topology: &Topology,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let areas = curvature_areas(points, faces)?;
    let h = mean_curvature_on(points, faces, topology, &areas)?;
    let sums = angle_sums(points, faces);
    let g = h
        .squared_norms()
        .iter()
        .zip(&sums)
        .zip(&areas)
        .map(|((h2, s), a)| h2 - 2.0 * (TAU - s) / a)
        .collect();
    Ok((g, areas))
}

/// `sum (|H_i|^2 - 2 K_i) A_i`.
pub fn willmore_term(m: &SphereMesh) -> Result<f64> {
    let (g, areas) = second_form_density(m.image(), m.faces(), m.topology())?;
    let terms: Vec<f64> = g.iter().zip(&areas).map(|(g, a)| g * a).collect();
    Ok(reduce::tree_sum(&terms))
}

fn check_lambda_p(lambda: f64, p: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!(
            "p must exceed 1, got {p}"
        )));
    }
    Ok(p / (p - 1.0))
}

fn holder_norm(g: &[f64], areas: &[f64], p: f64, q: f64) -> f64 {
    let powered: Vec<f64> = g
        .iter()
        .zip(areas)
        .map(|(g, a)| math::powf(g.max(0.0), p) * a)
        .collect();
    math::powf(reduce::tree_sum(&powered), 1.0 / p) * math::powf(reduce::tree_sum(areas), 1.0 / q)
}

/// `lambda (sum max(|H|^2 - 2K, 0)^p A)^(1/p) (sum A)^(1/q)`.
pub fn regularizer(m: &SphereMesh, lambda: f64, p: f64) -> Result<f64> {
    let q = check_lambda_p(lambda, p)?;
    let (g, areas) = second_form_density(m.image(), m.faces(), m.topology())?;
    Ok(lambda * holder_norm(&g, &areas, p, q))
}

pub fn surface_e_lambda(m: &SphereMesh, lambda: f64, p: f64) -> Result<EnergyBreakdown> {
    surface_e_lambda_with(m, lambda, p, SurfaceOptions::default())
}

pub fn surface_e_lambda_with(
    m: &SphereMesh,
    lambda: f64,
    p: f64,
    opts: SurfaceOptions,
) -> Result<EnergyBreakdown> {
    let q = check_lambda_p(lambda, p)?;
    let e0 = surface_e0_with(m, opts)?;
    let reg = regularizer(m, lambda, p)?;
    Ok(EnergyBreakdown {
        e0: e0.value,
        regularizer: reg,
        lambda,
        p: Some(p),
        q: Some(q),
        total: e0.value + reg,
        density: Some(e0.density),
        singularity: e0.singularity,
        warnings: e0.warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchwarzCheck {
    /// `regularizer / lambda`.
    pub lhs: f64,
    /// `willmore_term`.
    pub rhs: f64,
    pub holds: bool,
}

pub fn schwarz_check(m: &SphereMesh, lambda: f64, p: f64) -> Result<SchwarzCheck> {
    let q = check_lambda_p(lambda, p)?;
    let (g, areas) = second_form_density(m.image(), m.faces(), m.topology())?;
    let lhs = holder_norm(&g, &areas, p, q);
    let terms: Vec<f64> = g.iter().zip(&areas).map(|(g, a)| g * a).collect();
    let rhs = reduce::tree_sum(&terms);
    Ok(SchwarzCheck {
        lhs,
        rhs,
        holds: lhs >= rhs - 1e-12 * rhs.abs(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceLink {
    pub value: f64,
    /// Closest vertex pair (first mesh, second mesh) and its distance.
    pub closest: Singularity,
}

/// `sum_ij (d_i d'_j / |f_i - g_j|^2)^2 a_i a'_j` over cross pairs.
pub fn surface_link_u(m1: &SphereMesh, m2: &SphereMesh) -> Result<SurfaceLink> {
    surface_link_u_with(m1, m2, FactorModel::EdgeFit)
}

pub fn surface_link_u_with(
    m1: &SphereMesh,
    m2: &SphereMesh,
    model: FactorModel,
) -> Result<SurfaceLink> {
    if m1.dim() != m2.dim() {
        return Err(Error::InvalidInput(
            "meshes live in different dimensions".into(),
        ));
    }
    let (a1, a2) = (m1.domain_dual_areas()?, m2.domain_dual_areas()?);
    let d1 = PairKernel::with_model(m1, model)?.factors(m1.image())?;
    let d2 = PairKernel::with_model(m2, model)?.factors(m2.image())?;
    let (f, g) = (m1.image(), m2.image());
    let rows = reduce::map_rows(f.len(), |i| {
        let mut s = 0.0;
        let mut closest = Singularity {
            pair: [i, 0],
            distance: f64::INFINITY,
        };
        for j in 0..g.len() {
            let r2 = linalg::dist2(f.row(i), g.row(j));
            if r2 < closest.distance * closest.distance {
                closest = Singularity {
                    pair: [i, j],
                    distance: math::sqrt(r2),
                };
            }
            let t = d1[i] * d2[j] / r2;
            s += t * t * a2[j];
        }
        (s * a1[i], closest)
    });
    let closest = rows.iter().map(|r| r.1).fold(
        Singularity {
            pair: [0, 0],
            distance: f64::INFINITY,
        },
        |a, b| if b.distance < a.distance { b } else { a },
    );
    let scale = f.diameter().max(g.diameter());
    if closest.distance <= EMBEDDING_TOL * scale {
        return Ok(SurfaceLink {
            value: f64::INFINITY,
            closest,
        });
    }
    let values: Vec<f64> = rows.into_iter().map(|r| r.0).collect();
    Ok(SurfaceLink {
        value: reduce::tree_sum(&values),
        closest,
    })
}

/// One random safe Moebius image of a mesh and its energies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceTrial {
    pub trial: usize,
    pub seed: u64,
    pub e0: f64,
    pub willmore: f64,
    pub regularizer: f64,
    pub total: f64,
}

/// Energies of `trials` images of `m` under [`random_safe`] maps. Trial seeds
/// are drawn from a ChaCha8 stream seeded with `seed`.
#[allow(clippy::too_many_arguments)]
pub fn invariance_trials(
    m: &SphereMesh,
    trials: usize,
    seed: u64,
    margin: f64,
    lambda: f64,
    p: f64,
    opts: SurfaceOptions,
) -> Result<Vec<InvarianceTrial>> {
    check_lambda_p(lambda, p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(trials);
    for trial in 0..trials {
        let seed = rng.next_u64();
        let image = random_safe(seed, m, margin)?.apply_shape(m)?;
        let e = surface_e_lambda_with(&image, lambda, p, opts)?;
        out.push(InvarianceTrial {
            trial,
            seed,
            e0: e.e0,
            willmore: willmore_term(&image)?,
            regularizer: e.regularizer,
            total: e.total,
        });
    }
    Ok(out)
}

/// `(max - min) / mean`.
pub fn relative_spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    (max - min) / (reduce::tree_sum(values) / values.len() as f64)
}

/// Image dual areas for an arbitrary image over the same faces.
pub fn image_areas(points: &Points, faces: &[Face]) -> Result<Vec<f64>> {
    barycentric_areas(points, faces)
}
