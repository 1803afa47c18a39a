//! Closed polylines and their arclength parametrization.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg;
use crate::math::{self, TAU};
use crate::points::Points;
use crate::reduce;

/// Tolerance on the total length of a normalized curve.
pub const NORMALIZED_LENGTH_TOL: f64 = 1e-9;

/// A closed polyline in `R^n`; the last vertex connects back to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedCurve {
    points: Points,
}

/// The closest pair of non-adjacent segments of a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentGap {
    pub segments: [usize; 2],
    pub distance: f64,
}

impl ClosedCurve {
    pub const MIN_VERTICES: usize = 8;

    pub fn new(points: Points) -> Result<Self> {
        if points.len() < Self::MIN_VERTICES {
            return Err(Error::InvalidInput(alloc::format!(
                "closed curve needs at least {} vertices, got {}",
                Self::MIN_VERTICES,
                points.len()
            )));
        }
        let n = points.len();
        for i in 0..n {
            if linalg::dist2(points.row(i), points.row((i + 1) % n)) == 0.0 {
                return Err(Error::InvalidInput(alloc::format!(
                    "zero-length segment at vertex {i}"
                )));
            }
        }
        Ok(ClosedCurve { points })
    }

    pub fn points(&self) -> &Points {
        &self.points
    }

    pub fn into_points(self) -> Points {
        self.points
    }

    /// Number of vertices.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    /// `l_i = |p_{i+1} - p_i|`, cyclically.
    pub fn segment_lengths(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| linalg::dist(self.points.row(i), self.points.row((i + 1) % n)))
            .collect()
    }

    pub fn length(&self) -> f64 {
        reduce::tree_sum(&self.segment_lengths())
    }

    /// Cumulative arclength `s_i` at each vertex, starting from `s_0 = 0`.
    pub fn arclength(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.len());
        let mut acc = 0.0;
        for l in self.segment_lengths() {
            s.push(acc);
            acc += l;
        }
        s
    }

    /// Domain angles `theta_i = 2 pi s_i / L`.
    pub fn domain_angles(&self) -> Vec<f64> {
        let lengths = self.segment_lengths();
        let total = reduce::tree_sum(&lengths);
        let mut acc = 0.0;
        lengths
            .iter()
            .map(|l| {
                let t = TAU * acc / total;
                acc += l;
                t
            })
            .collect()
    }

    /// Discrete domain points: the vertices placed at their domain angles on
    /// the circle whose inscribed polygon through those angles has perimeter
    /// `2 pi`. The radius tends to 1 under refinement, and a uniformly sampled
    /// round circle normalized to length `2 pi` coincides with its own domain.
    pub fn domain_points(&self) -> Points {
        let theta = self.domain_angles();
        let n = theta.len();
        let mut perimeter = 0.0;
        for i in 0..n {
            let next = if i + 1 < n { theta[i + 1] } else { TAU };
            perimeter += 2.0 * math::sin(0.5 * (next - theta[i]));
        }
        let radius = TAU / perimeter;
        let mut out = Points::with_capacity(2, n);
        for t in theta {
            out.push(&[radius * math::cos(t), radius * math::sin(t)]);
        }
        out
    }

    /// Quadrature weight of each vertex: the mean of its two adjacent segments.
    pub fn vertex_weights(&self) -> Vec<f64> {
        let l = self.segment_lengths();
        let n = l.len();
        (0..n).map(|i| 0.5 * (l[(i + n - 1) % n] + l[i])).collect()
    }

    pub fn is_normalized(&self) -> bool {
        (self.length() - TAU).abs() <= NORMALIZED_LENGTH_TOL
    }

    /// Uniformly rescales (about the origin) to total length `2 pi`.
    pub fn normalize(&self) -> Result<ClosedCurve> {
        let length = self.length();
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidInput("curve has no length".into()));
        }
        let mut points = self.points.clone();
        points.scale(TAU / length);
        ClosedCurve::new(points)
    }

    /// Turning angle at each vertex over the mean adjacent segment length.
    pub fn curvature(&self) -> Vec<f64> {
        polyline_curvature(&self.points).expect("closed curves have at least 8 vertices")
    }

    /// Resamples `count` vertices uniformly in arclength, starting at vertex 0.
    pub fn resample(&self, count: usize) -> Result<ClosedCurve> {
        let n = self.len();
        let lengths = self.segment_lengths();
        let total = reduce::tree_sum(&lengths);
        let mut out = Points::with_capacity(self.dim(), count);
        let mut seg = 0;
        let mut seg_start = 0.0;
        for k in 0..count {
            let target = total * k as f64 / count as f64;
            while seg + 1 < n && seg_start + lengths[seg] <= target {
                seg_start += lengths[seg];
                seg += 1;
            }
            let t = ((target - seg_start) / lengths[seg]).clamp(0.0, 1.0);
            let a = self.points.row(seg);
            let b = self.points.row((seg + 1) % n);
            let p: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect();
            out.push(&p);
        }
        ClosedCurve::new(out)
    }

    /// Closest pair of segments that do not share a vertex.
    pub fn min_segment_gap(&self) -> SegmentGap {
        let n = self.len();
        let p = &self.points;
        let rows = reduce::map_rows(n, |i| {
            let mut best = SegmentGap {
                segments: [i, i],
                distance: f64::INFINITY,
            };
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let d = linalg::segment_distance(
                    p.row(i),
                    p.row((i + 1) % n),
                    p.row(j),
                    p.row((j + 1) % n),
                );
                if d < best.distance {
                    best = SegmentGap {
                        segments: [i, j],
                        distance: d,
                    };
                }
            }
            best
        });
        rows.into_iter().fold(
            SegmentGap {
                segments: [0, 0],
                distance: f64::INFINITY,
            },
            |a, b| if b.distance < a.distance { b } else { a },
        )
    }
}

/// Discrete curvature of a closed polyline with at least three vertices.
pub fn polyline_curvature(points: &Points) -> Result<Vec<f64>> {
    let n = points.len();
    if n < 3 {
        return Err(Error::InvalidInput(
            "curvature needs at least 3 vertices".into(),
        ));
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let prev = points.row((i + n - 1) % n);
        let cur = points.row(i);
        let next = points.row((i + 1) % n);
        let e0 = linalg::sub(cur, prev);
        let e1 = linalg::sub(next, cur);
        let (l0, l1) = (linalg::norm(&e0), linalg::norm(&e1));
        if l0 == 0.0 || l1 == 0.0 {
            return Err(Error::InvalidInput(alloc::format!(
                "zero-length segment at vertex {i}"
            )));
        }
        out.push(linalg::angle_between(&e0, &e1) / (0.5 * (l0 + l1)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::{make_curve, CurveKind};

    #[test]
    fn rejects_short_and_degenerate() {
        let p = Points::from_rows(2, &[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]).unwrap();
        assert!(ClosedCurve::new(p).is_err());
        let mut rows: Vec<[f64; 2]> = (0..8).map(|i| [i as f64, 0.0]).collect();
        rows[3] = rows[2];
        assert!(matches!(
            ClosedCurve::new(Points::from_rows(2, &rows).unwrap()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn normalizing_unit_circle_scales_by_polygon_factor() {
        let n = 64;
        let c = make_curve(&CurveKind::Circle, n).unwrap();
        let nc = c.normalize().unwrap();
        let factor = math::PI / (n as f64 * math::sin(math::PI / n as f64));
        for i in 0..n {
            for k in 0..2 {
                assert!((nc.points().row(i)[k] - factor * c.points().row(i)[k]).abs() < 1e-14);
            }
        }
        assert!((nc.length() - TAU).abs() < 1e-12);
        // the scale factor is within 5e-4 of one
        assert!((factor - 1.0).abs() < 5e-4);
    }

    #[test]
    fn radius_three_circle_normalizes_to_radius_one_polygon() {
        let mut c = make_curve(&CurveKind::Circle, 64).unwrap().into_points();
        c.scale(3.0);
        let nc = ClosedCurve::new(c).unwrap().normalize().unwrap();
        let r = linalg::norm(nc.points().row(5));
        assert!((r - math::PI / (64.0 * math::sin(math::PI / 64.0))).abs() < 1e-13);
    }

    #[test]
    fn trefoil_normalized_length() {
        let c = make_curve(&CurveKind::TorusKnot { p: 2, q: 3 }, 256).unwrap();
        let l = c.length();
        let nc = c.normalize().unwrap();
        // oracle: recompute the polyline length of the scaled vertices directly
        let s = TAU / l;
        let mut direct = 0.0;
        for i in 0..256 {
            let a: Vec<f64> = c.points().row(i).iter().map(|x| x * s).collect();
            let b: Vec<f64> = c
                .points()
                .row((i + 1) % 256)
                .iter()
                .map(|x| x * s)
                .collect();
            direct += linalg::dist(&a, &b);
        }
        assert!((direct - TAU).abs() < 1e-12);
        assert!((nc.length() - TAU).abs() < 1e-12);
    }

    #[test]
    fn circle_curvature() {
        let c = make_curve(&CurveKind::Circle, 128).unwrap();
        assert!(c.curvature().iter().all(|k| (k - 1.0).abs() < 1e-3));
        let mut p = c.into_points();
        p.scale(2.0);
        let c2 = ClosedCurve::new(p).unwrap();
        assert!(c2.curvature().iter().all(|k| (k - 0.5).abs() < 1e-3));
    }

    #[test]
    fn square_curvature() {
        let side = 1.5;
        let p =
            Points::from_rows(2, &[[0.0, 0.0], [side, 0.0], [side, side], [0.0, side]]).unwrap();
        for k in polyline_curvature(&p).unwrap() {
            assert!((k - math::FRAC_PI_2 / side).abs() < 1e-14);
        }
    }

    #[test]
    fn domain_of_normalized_circle_is_itself() {
        let c = make_curve(&CurveKind::Circle, 32)
            .unwrap()
            .normalize()
            .unwrap();
        let x = c.domain_points();
        for i in 0..32 {
            assert!(linalg::dist(x.row(i), c.points().row(i)) < 1e-14);
        }
    }

    #[test]
    fn resample_is_uniform() {
        let c = make_curve(&CurveKind::Ellipse { a: 2.0, b: 0.5 }, 200).unwrap();
        let r = c.resample(100).unwrap();
        let l = r.segment_lengths();
        let mean = l.iter().sum::<f64>() / l.len() as f64;
        assert!(l.iter().all(|x| (x - mean).abs() < 0.02 * mean));
    }
}
