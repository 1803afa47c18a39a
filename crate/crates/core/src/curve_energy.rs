//! Regularized self-energy of closed curves, its curvature-regularized
//! version, and the pair energy of two disjoint curves.
//!
//! Curves are evaluated in the length-`2 pi` gauge: the domain of vertex `i`
//! is the point at angle `theta_i` (arclength fraction times `2 pi`) and the
//! energy integrates `1/|f_i - f_j|^2 - 1/|x_i - x_j|^2` over non-adjacent
//! vertex pairs, so image chords shorter than domain chords cost energy. A uniformly sampled round
//! circle of length `2 pi` coincides with its own domain, so its energy is
//! exactly zero.

use alloc::string::String;
use alloc::vec::Vec;

use crate::curve::ClosedCurve;
use crate::error::{Error, Result};
use crate::linalg;
use crate::reduce;

/// Segments closer than this are treated as intersecting.
pub const SELF_INTERSECTION_TOL: f64 = 1e-6;

/// Itemized energy value shared by the curve and surface functionals.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBreakdown {
    pub e0: f64,
    pub regularizer: f64,
    pub lambda: f64,
    /// Integrability exponent; absent for curves.
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub total: f64,
    pub density: Option<Vec<f64>>,
    pub singularity: Option<Singularity>,
    pub warnings: Vec<String>,
}

/// Where an energy blew up: the closest offending pair and its distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singularity {
    pub pair: [usize; 2],
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CurveOptions {
    /// Adds the analytic limit of the integrand over the excluded near-diagonal pairs.
    pub diagonal_correction: bool,
    /// Skips the segment-pair embedding test (the pair loop still guards coincident vertices).
    pub skip_embedding_check: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveE0 {
    pub value: f64,
    /// Per-vertex contribution; sums to `value` when finite.
    pub density: Vec<f64>,
    pub singularity: Option<Singularity>,
}

fn singular(n: usize, s: Singularity) -> CurveE0 {
    CurveE0 {
        value: f64::INFINITY,
        density: alloc::vec![f64::INFINITY; n],
        singularity: Some(s),
    }
}

fn require_normalized(c: &ClosedCurve) -> Result<()> {
    if c.is_normalized() {
        Ok(())
    } else {
        Err(Error::Precondition(alloc::format!(
            "curve length {} is not 2 pi; normalize first",
            c.length()
        )))
    }
}

pub fn curve_e0(c: &ClosedCurve) -> Result<f64> {
    curve_e0_with(c, CurveOptions::default()).map(|e| e.value)
}

pub fn curve_e0_with(c: &ClosedCurve, opts: CurveOptions) -> Result<CurveE0> {
    require_normalized(c)?;
    let n = c.len();
    if !opts.skip_embedding_check {
        let gap = c.min_segment_gap();
        if gap.distance < SELF_INTERSECTION_TOL {
            return Ok(singular(
                n,
                Singularity {
                    pair: gap.segments,
                    distance: gap.distance,
                },
            ));
        }
    }
    let x = c.domain_points();
    let f = c.points();
    let w = c.vertex_weights();
    let rows = reduce::map_rows(n, |i| {
        let mut s = 0.0;
        let mut worst: Option<Singularity> = None;
        for j in 0..n {
            let d = i.abs_diff(j);
            if d < 2 || d == n - 1 {
                continue;
            }
            let image = linalg::dist2(f.row(i), f.row(j));
            if !(image > 0.0) {
                worst = Some(Singularity {
                    pair: [i.min(j), i.max(j)],
                    distance: 0.0,
                });
                break;
            }
            s += (1.0 / image - 1.0 / linalg::dist2(x.row(i), x.row(j))) * w[j];
        }
        (s * w[i], worst)
    });
    if let Some(s) = rows.iter().find_map(|r| r.1) {
        return Ok(singular(n, s));
    }
    let mut density: Vec<f64> = rows.into_iter().map(|r| r.0).collect();
    if opts.diagonal_correction {
        let kappa = c.curvature();
        for i in 0..n {
            let excluded = w[(i + n - 1) % n] + w[i] + w[(i + 1) % n];
            density[i] += (kappa[i] * kappa[i] - 1.0) / 12.0 * w[i] * excluded;
        }
    }
    Ok(CurveE0 {
        value: reduce::tree_sum(&density),
        density,
        singularity: None,
    })
}

/// `lambda * sum kappa_i^2 w_i`.
pub fn curvature_regularizer(c: &ClosedCurve, lambda: f64) -> f64 {
    let kappa = c.curvature();
    let w = c.vertex_weights();
    let terms: Vec<f64> = kappa.iter().zip(&w).map(|(k, w)| k * k * w).collect();
    lambda * reduce::tree_sum(&terms)
}

pub fn curve_e_lambda(c: &ClosedCurve, lambda: f64) -> Result<EnergyBreakdown> {
    curve_e_lambda_with(c, lambda, CurveOptions::default())
}

pub fn curve_e_lambda_with(
    c: &ClosedCurve,
    lambda: f64,
    opts: CurveOptions,
) -> Result<EnergyBreakdown> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let e0 = curve_e0_with(c, opts)?;
    let regularizer = curvature_regularizer(c, lambda);
    Ok(EnergyBreakdown {
        e0: e0.value,
        regularizer,
        lambda,
        p: None,
        q: None,
        total: e0.value + regularizer,
        density: Some(e0.density),
        singularity: e0.singularity,
        warnings: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkEnergy {
    pub value: f64,
    /// Closest pair of segments (one from each curve) and their distance.
    pub closest: Singularity,
}

/// `sum_ij w_i v_j / |f_i - g_j|^2` on the raw geometry of both curves.
pub fn link_energy_u(c1: &ClosedCurve, c2: &ClosedCurve) -> Result<LinkEnergy> {
    if c1.dim() != c2.dim() {
        return Err(Error::InvalidInput(
            "curves live in different dimensions".into(),
        ));
    }
    let (f, g) = (c1.points(), c2.points());
    let (n, m) = (f.len(), g.len());
    let closest = reduce::map_rows(n, |i| {
        let mut best = Singularity {
            pair: [i, 0],
            distance: f64::INFINITY,
        };
        for j in 0..m {
            let d = linalg::segment_distance(
                f.row(i),
                f.row((i + 1) % n),
                g.row(j),
                g.row((j + 1) % m),
            );
            if d < best.distance {
                best = Singularity {
                    pair: [i, j],
                    distance: d,
                };
            }
        }
        best
    })
    .into_iter()
    .fold(
        Singularity {
            pair: [0, 0],
            distance: f64::INFINITY,
        },
        |a, b| if b.distance < a.distance { b } else { a },
    );
    if closest.distance <= SELF_INTERSECTION_TOL {
        return Ok(LinkEnergy {
            value: f64::INFINITY,
            closest,
        });
    }
    let (w, v) = (c1.vertex_weights(), c2.vertex_weights());
    let value = reduce::row_sum(n, |i| {
        let mut s = 0.0;
        for j in 0..m {
            s += v[j] / linalg::dist2(f.row(i), g.row(j));
        }
        s * w[i]
    });
    Ok(LinkEnergy { value, closest })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkTotal {
    pub e0_first: f64,
    pub e0_second: f64,
    pub cross: f64,
    pub total: f64,
}

/// Energy of the split union: each component's `E0` in its own length-`2 pi`
/// gauge plus the pair energy of the raw curves.
pub fn link_total(c1: &ClosedCurve, c2: &ClosedCurve) -> Result<LinkTotal> {
    let e0_first = curve_e0(&c1.normalize()?)?;
    let e0_second = curve_e0(&c2.normalize()?)?;
    let cross = link_energy_u(c1, c2)?.value;
    Ok(LinkTotal {
        e0_first,
        e0_second,
        cross,
        total: e0_first + e0_second + cross,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{cos, sin, PI, TAU};
    use crate::points::Points;
    use crate::shapes::{make_curve, CurveKind};

    fn circle(n: usize, center: [f64; 3], plane: usize) -> ClosedCurve {
        let mut p = Points::new(3);
        for k in 0..n {
            let t = TAU * k as f64 / n as f64;
            let mut q = center;
            let (a, b) = if plane == 0 { (0, 1) } else { (0, 2) };
            q[a] += cos(t);
            q[b] += sin(t);
            p.push(&q);
        }
        ClosedCurve::new(p).unwrap()
    }

    #[test]
    fn round_circle_vanishes() {
        for n in [8, 64, 512] {
            let c = make_curve(&CurveKind::Circle, n)
                .unwrap()
                .normalize()
                .unwrap();
            assert!(curve_e0(&c).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn requires_length_two_pi() {
        let c = circle(32, [0.0; 3], 0);
        assert!(matches!(curve_e0(&c), Err(Error::Precondition(_))));
    }

    #[test]
    fn brute_force_oracle() {
        let c = make_curve(&CurveKind::TorusKnot { p: 2, q: 3 }, 40)
            .unwrap()
            .normalize()
            .unwrap();
        let l = c.segment_lengths();
        let n = l.len();
        let total: f64 = l.iter().sum();
        let mut s = 0.0;
        let mut arc = 0.0;
        let mut theta = Vec::new();
        for k in 0..n {
            theta.push(TAU * arc / total);
            arc += l[k];
        }
        let mut per = 0.0;
        for k in 0..n {
            let next = if k + 1 < n { theta[k + 1] } else { TAU };
            per += 2.0 * sin((next - theta[k]) / 2.0);
        }
        let r = TAU / per;
        for i in 0..n {
            for j in 0..n {
                let gap = (i as i64 - j as i64).rem_euclid(n as i64);
                if gap < 2 || gap > n as i64 - 2 {
                    continue;
                }
                let chord = 2.0 * r * sin((theta[i] - theta[j]).abs() / 2.0);
                let fi = c.points().row(i);
                let fj = c.points().row(j);
                let d2: f64 = fi.iter().zip(fj).map(|(a, b)| (a - b) * (a - b)).sum();
                let wi = 0.5 * (l[i] + l[(i + n - 1) % n]);
                let wj = 0.5 * (l[j] + l[(j + n - 1) % n]);
                s += (1.0 / d2 - 1.0 / (chord * chord)) * wi * wj;
            }
        }
        let e = curve_e0(&c).unwrap();
        assert!((e - s).abs() <= 1e-10 * s.abs().max(1.0), "{e} vs {s}");
    }

    #[test]
    fn ellipse_self_converges() {
        let e = |n| {
            curve_e0(
                &make_curve(
                    &CurveKind::Ellipse {
                        a: 1.2,
                        b: 1.0 / 1.2,
                    },
                    n,
                )
                .unwrap()
                .normalize()
                .unwrap(),
            )
            .unwrap()
        };
        let (a, b) = (e(256), e(512));
        assert!(a > 0.0 && b > 0.0);
        assert!((a - b).abs() / b <= 0.02, "{a} {b}");
    }

    #[test]
    fn trefoil_beats_perturbed_unknot() {
        let t = make_curve(&CurveKind::TorusKnot { p: 2, q: 3 }, 512)
            .unwrap()
            .normalize()
            .unwrap();
        let u = make_curve(
            &CurveKind::PerturbedCircle {
                amp: 0.05,
                mode: 3,
                seed: 1,
            },
            512,
        )
        .unwrap()
        .normalize()
        .unwrap();
        assert!(curve_e0(&t).unwrap() > curve_e0(&u).unwrap());
    }

    #[test]
    fn e_lambda_on_circle() {
        let c = make_curve(&CurveKind::Circle, 256)
            .unwrap()
            .normalize()
            .unwrap();
        let b = curve_e_lambda(&c, 1.0).unwrap();
        assert!((b.total - TAU).abs() < 1e-3);
        assert_eq!(b.total, b.e0 + b.regularizer);
        assert!((curve_e_lambda(&c, 0.5).unwrap().total - PI).abs() < 1e-3);
        assert!(curve_e_lambda(&c, 0.0).is_err());
    }

    #[test]
    fn e_lambda_components() {
        let t = make_curve(&CurveKind::TorusKnot { p: 2, q: 3 }, 256)
            .unwrap()
            .normalize()
            .unwrap();
        let b = curve_e_lambda(&t, 1.0).unwrap();
        let kappa = t.curvature();
        let w = t.vertex_weights();
        let reg: f64 = kappa.iter().zip(&w).map(|(k, w)| k * k * w).sum();
        assert!((b.regularizer - reg).abs() < 1e-10 * reg);
        assert!((b.e0 - curve_e0(&t).unwrap()).abs() == 0.0);
        assert!(b.total >= b.e0);
    }

    #[test]
    fn diagonal_correction_vanishes_on_circle() {
        let c = make_curve(&CurveKind::Circle, 128)
            .unwrap()
            .normalize()
            .unwrap();
        let e = curve_e0_with(
            &c,
            CurveOptions {
                diagonal_correction: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(e.value.abs() < 1e-6);
    }

    #[test]
    fn self_intersection_is_infinite() {
        let mut p = Points::new(3);
        // figure-eight through the origin
        for k in 0..64 {
            let t = TAU * k as f64 / 64.0;
            p.push(&[sin(t), sin(t) * cos(t), 0.0]);
        }
        let c = ClosedCurve::new(p).unwrap().normalize().unwrap();
        let e = curve_e0_with(&c, CurveOptions::default()).unwrap();
        assert_eq!(e.value, f64::INFINITY);
        assert!(e.singularity.is_some());
    }

    #[test]
    fn link_energy_decays_and_is_scale_free() {
        let a = circle(64, [0.0; 3], 0);
        let near = link_energy_u(&a, &circle(64, [0.0, 0.0, 4.0], 0))
            .unwrap()
            .value;
        let far = link_energy_u(&a, &circle(64, [0.0, 0.0, 8.0], 0))
            .unwrap()
            .value;
        assert!(near > 0.0 && far < near);
        let mut pa = a.points().clone();
        let mut pb = circle(64, [0.0, 0.0, 4.0], 0).points().clone();
        pa.scale(3.0);
        pb.scale(3.0);
        let scaled = link_energy_u(
            &ClosedCurve::new(pa).unwrap(),
            &ClosedCurve::new(pb).unwrap(),
        )
        .unwrap()
        .value;
        assert!((scaled - near).abs() <= 1e-10 * near);
        let hopf = link_energy_u(&a, &circle(64, [1.0, 0.0, 0.0], 1)).unwrap();
        assert!(hopf.value > near);
        let touching = link_energy_u(&a, &a).unwrap();
        assert_eq!(touching.value, f64::INFINITY);
        let split = link_total(&a, &circle(64, [0.0, 0.0, 4.0], 0)).unwrap();
        assert!((split.total - near).abs() < 1e-9);
    }
}
