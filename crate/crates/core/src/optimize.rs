//! Finite-difference gradients and backtracking descent on the curve and
//! surface energies.
//!
//! Descent moves image coordinates only. Every [`GAUGE_INTERVAL`] accepted
//! steps the parametrization is restored (curves: arclength resampling at
//! length `2 pi`; spheres: [`conformalize`] warm-started from the current
//! domain). A gauge step is kept only if it does not raise the energy, so the
//! logged energies are non-increasing.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::conformal::{conformalize, ConformalizeOptions};
use crate::curve::ClosedCurve;
use crate::curve_energy::{curvature_regularizer, curve_e0_with, CurveOptions};
use crate::error::{Error, Result};
use crate::linalg;
use crate::math;
use crate::mesh::SphereMesh;
use crate::points::Points;
use crate::reduce;
use crate::sparse::{conjugate_gradient, Csr, TripletBuilder};
use crate::surface_energy::{check_embedded, regularizer, FactorModel, PairKernel};

pub const ARMIJO: f64 = 1e-4;
pub const MIN_STEP: f64 = 1e-12;
pub const STALL_TOL: f64 = 1e-9;
pub const GAUGE_INTERVAL: usize = 10;

/// A shape the minimizer can move.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Curve(ClosedCurve),
    Sphere(SphereMesh),
}

impl Shape {
    pub fn points(&self) -> &Points {
        match self {
            Shape::Curve(c) => c.points(),
            Shape::Sphere(m) => m.image(),
        }
    }

    pub fn with_points(&self, points: Points) -> Result<Shape> {
        Ok(match self {
            Shape::Curve(_) => Shape::Curve(ClosedCurve::new(points)?),
            Shape::Sphere(m) => Shape::Sphere(m.with_image(points)?),
        })
    }

    /// Standard deviation over mean of the vertex distances to the centroid.
    pub fn sphericity(&self) -> f64 {
        sphericity(self.points())
    }
}

pub fn sphericity(points: &Points) -> f64 {
    let c = points.centroid();
    let r: Vec<f64> = points.iter().map(|p| linalg::dist(p, &c.0)).collect();
    let n = r.len() as f64;
    let mean = reduce::tree_sum(&r) / n;
    let dev: Vec<f64> = r.iter().map(|x| (x - mean) * (x - mean)).collect();
    math::sqrt(reduce::tree_sum(&dev) / n) / mean
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyKind {
    CurveE0,
    CurveELambda { lambda: f64 },
    SurfaceE0,
    SurfaceELambda { lambda: f64, p: f64 },
}

impl EnergyKind {
    fn check(&self, shape: &Shape) -> Result<()> {
        let curve = matches!(self, EnergyKind::CurveE0 | EnergyKind::CurveELambda { .. });
        match (curve, shape) {
            (true, Shape::Curve(_)) | (false, Shape::Sphere(_)) => {}
            _ => {
                return Err(Error::InvalidInput(alloc::format!(
                    "{self:?} does not apply to this shape"
                )))
            }
        }
        match *self {
            EnergyKind::CurveELambda { lambda } | EnergyKind::SurfaceELambda { lambda, .. }
                if !(lambda > 0.0) =>
            {
                Err(Error::InvalidParameter(alloc::format!(
                    "lambda must be positive, got {lambda}"
                )))
            }
            EnergyKind::SurfaceELambda { p, .. } if !(p > 1.0 && p.is_finite()) => Err(
                Error::InvalidParameter(alloc::format!("p must exceed 1, got {p}")),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub e0: f64,
    pub regularizer: f64,
    pub total: f64,
}

impl Evaluation {
    const INFINITE: Evaluation = Evaluation {
        e0: f64::INFINITY,
        regularizer: f64::INFINITY,
        total: f64::INFINITY,
    };
}

/// An energy bound to a fixed domain; evaluates candidate images.
#[derive(Debug, Clone)]
pub struct Objective {
    kind: EnergyKind,
    shape: Shape,
    kernel: Option<PairKernel>,
}

impl Objective {
    pub fn new(kind: EnergyKind, shape: &Shape) -> Result<Objective> {
        Objective::with_factor(kind, shape, FactorModel::EdgeFit)
    }

    pub fn with_factor(kind: EnergyKind, shape: &Shape, factor: FactorModel) -> Result<Objective> {
        kind.check(shape)?;
        let kernel = match shape {
            Shape::Sphere(m) => Some(PairKernel::with_model(m, factor)?),
            Shape::Curve(_) => None,
        };
        Ok(Objective {
            kind,
            shape: shape.clone(),
            kernel,
        })
    }

    pub fn kind(&self) -> EnergyKind {
        self.kind
    }

    /// Energy of the bound shape with its image replaced by `x`. Curves are
    /// normalized first. Non-embedded images give `+inf` when `checked`.
    pub fn evaluate(&self, x: &Points, checked: bool) -> Evaluation {
        self.try_evaluate(x, checked)
            .unwrap_or(Evaluation::INFINITE)
    }

    fn try_evaluate(&self, x: &Points, checked: bool) -> Result<Evaluation> {
        match (&self.shape, self.kind) {
            (Shape::Curve(_), kind) => {
                let c = ClosedCurve::new(x.clone())?.normalize()?;
                let opts = CurveOptions {
                    skip_embedding_check: !checked,
                    ..Default::default()
                };
                let e0 = curve_e0_with(&c, opts)?.value;
                let reg = match kind {
                    EnergyKind::CurveELambda { lambda } => curvature_regularizer(&c, lambda),
                    _ => 0.0,
                };
                Ok(Evaluation {
                    e0,
                    regularizer: reg,
                    total: e0 + reg,
                })
            }
            (Shape::Sphere(m), kind) => {
                let m = m.with_image(x.clone())?;
                if checked {
                    check_embedded(&m)?;
                }
                let kernel = self
                    .kernel
                    .as_ref()
                    .expect("sphere objectives carry a kernel");
                let d = kernel.factors(x)?;
                let e0 = kernel.evaluate(x, &d).0;
                let reg = match kind {
                    EnergyKind::SurfaceELambda { lambda, p } => regularizer(&m, lambda, p)?,
                    _ => 0.0,
                };
                Ok(Evaluation {
                    e0,
                    regularizer: reg,
                    total: e0 + reg,
                })
            }
        }
    }

    /// Total energy, `+inf` for inadmissible images.
    pub fn value(&self, x: &Points) -> f64 {
        self.evaluate(x, true).total
    }

    /// Finite-difference gradient at `x`. For spheres each probe only
    /// re-evaluates the pair terms that touch the moved vertex and its ring.
    pub fn gradient(&self, x: &Points, h: f64) -> Result<Gradient> {
        match (&self.shape, &self.kernel) {
            (Shape::Sphere(m), Some(kernel)) => self.local_gradient(m, kernel, x, h),
            _ => fd_gradient(|p| self.evaluate(p, false).total, x, h),
        }
    }

    fn local_gradient(
        &self,
        m: &SphereMesh,
        kernel: &PairKernel,
        x: &Points,
        h: f64,
    ) -> Result<Gradient> {
        check_step(h)?;
        let d = kernel.factors(x)?;
        let reg = |p: &Points| -> f64 {
            match self.kind {
                EnergyKind::SurfaceELambda { lambda, p: exp } => m
                    .with_image(p.clone())
                    .and_then(|mm| regularizer(&mm, lambda, exp))
                    .unwrap_or(f64::INFINITY),
                _ => 0.0,
            }
        };
        let base_reg = reg(x);
        let base = kernel.evaluate(x, &d).0 + base_reg;
        if !base.is_finite() {
            return Err(Error::Precondition(
                "energy is not finite at the starting image".into(),
            ));
        }
        let n = x.dim();
        let rows = reduce::map_rows(x.len(), |v| {
            let set = kernel.support(v);
            let old = kernel.local(x, &d, &set);
            let mut probe = x.clone();
            let mut dd = d.clone();
            let delta = |probe: &Points, dd: &mut Vec<f64>| -> f64 {
                if kernel.refresh_factors(probe, dd, &set).is_err() {
                    return f64::INFINITY;
                }
                let e = kernel.local(probe, dd, &set) - old;
                let r = reg(probe);
                e + (r - base_reg)
            };
            let mut g = vec![0.0; n];
            let mut notes = Vec::new();
            for k in 0..n {
                let x0 = x.row(v)[k];
                probe.row_mut(v)[k] = x0 + h;
                let plus = delta(&probe, &mut dd);
                probe.row_mut(v)[k] = x0 - h;
                let minus = delta(&probe, &mut dd);
                probe.row_mut(v)[k] = x0;
                g[k] = combine(plus, minus, h, v, k, &mut notes);
            }
            (g, notes)
        });
        Ok(Gradient::collect(n, rows))
    }

    /// `M + s L` on the domain: dual areas plus `s` times a graph Laplacian
    /// (spheres: weight 1/2 per edge; curves: inverse segment length of the
    /// normalized curve). Solving with it turns the coordinate gradient into
    /// a smoothed `H^1`-type descent direction.
    pub fn preconditioner(&self, x: &Points, s: f64) -> Result<Csr> {
        match (&self.shape, &self.kernel) {
            (Shape::Sphere(m), Some(kernel)) => {
                let mut t = TripletBuilder::new(m.vertex_count());
                for (i, a) in kernel.domain_areas().iter().enumerate() {
                    t.add(i, i, *a);
                }
                for &[i, j] in &m.topology().edges {
                    laplace_edge(&mut t, i, j, 0.5 * s);
                }
                Ok(t.build())
            }
            _ => {
                let c = ClosedCurve::new(x.clone())?.normalize()?;
                let n = c.len();
                let mut t = TripletBuilder::new(n);
                for (i, w) in c.vertex_weights().iter().enumerate() {
                    t.add(i, i, *w);
                }
                for (i, l) in c.segment_lengths().iter().enumerate() {
                    laplace_edge(&mut t, i, (i + 1) % n, s / l);
                }
                Ok(t.build())
            }
        }
    }

    /// Restores the parametrization the energy presumes.
    pub fn regauge(&self, x: &Points) -> Result<Shape> {
        match &self.shape {
            Shape::Curve(c) => {
                let moved = ClosedCurve::new(x.clone())?;
                Ok(Shape::Curve(moved.resample(c.len())?.normalize()?))
            }
            Shape::Sphere(m) => {
                let moved = m.with_image(x.clone())?;
                Ok(Shape::Sphere(
                    conformalize(&moved, ConformalizeOptions::default())?.mesh,
                ))
            }
        }
    }
}

fn laplace_edge(t: &mut TripletBuilder, i: usize, j: usize, w: f64) {
    t.add(i, i, w);
    t.add(j, j, w);
    t.add(i, j, -w);
    t.add(j, i, -w);
}

/// Solves `a y = g` column by column.
fn precondition(a: &Csr, g: &Points) -> Points {
    let (n, dim) = (g.len(), g.dim());
    let mut out = Points::zeros(dim, n);
    for k in 0..dim {
        let b: Vec<f64> = (0..n).map(|i| g.row(i)[k]).collect();
        let mut y = vec![0.0; n];
        conjugate_gradient(a, &b, &mut y, &[], 1e-12, 10 * n);
        for i in 0..n {
            out.row_mut(i)[k] = y[i];
        }
    }
    out
}

fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!(
            "step h must be positive, got {h}"
        )));
    }
    Ok(())
}

fn combine(plus: f64, minus: f64, h: f64, v: usize, k: usize, notes: &mut Vec<String>) -> f64 {
    match (plus.is_finite(), minus.is_finite()) {
        (true, true) => (plus - minus) / (2.0 * h),
        (true, false) => {
            notes.push(alloc::format!(
                "vertex {v} coordinate {k}: backward probe infinite, forward difference used"
            ));
            plus / h
        }
        (false, true) => {
            notes.push(alloc::format!(
                "vertex {v} coordinate {k}: forward probe infinite, backward difference used"
            ));
            -minus / h
        }
        (false, false) => {
            notes.push(alloc::format!(
                "vertex {v} coordinate {k}: both probes infinite, component set to 0"
            ));
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub grad: Points,
    /// Coordinates that fell back to a one-sided difference.
    pub one_sided: usize,
    pub warnings: Vec<String>,
}

impl Gradient {
    fn collect(dim: usize, rows: Vec<(Vec<f64>, Vec<String>)>) -> Gradient {
        let mut grad = Points::with_capacity(dim, rows.len());
        let mut warnings = Vec::new();
        for (g, notes) in rows {
            grad.push(&g);
            warnings.extend(notes);
        }
        Gradient {
            grad,
            one_sided: warnings.len(),
            warnings,
        }
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(self.grad.as_flat())
    }
}

/// Central-difference gradient of `energy` at `x` with step `h`, one
/// coordinate at a time. A probe returning `+inf` switches that coordinate
/// to a one-sided difference and records a warning.
pub fn fd_gradient<F>(energy: F, x: &Points, h: f64) -> Result<Gradient>
where
    F: Fn(&Points) -> f64 + Sync + Send,
{
    check_step(h)?;
    let base = energy(x);
    if !base.is_finite() {
        return Err(Error::Precondition(
            "energy is not finite at the starting point".into(),
        ));
    }
    let n = x.dim();
    let rows = reduce::map_rows(x.len(), |v| {
        let mut probe = x.clone();
        let mut g = vec![0.0; n];
        let mut notes = Vec::new();
        for k in 0..n {
            let x0 = x.row(v)[k];
            probe.row_mut(v)[k] = x0 + h;
            let plus = energy(&probe) - base;
            probe.row_mut(v)[k] = x0 - h;
            let minus = energy(&probe) - base;
            probe.row_mut(v)[k] = x0;
            g[k] = combine(plus, minus, h, v, k, &mut notes);
        }
        (g, notes)
    });
    Ok(Gradient::collect(n, rows))
}

/// `|g(h) - g(h/2)| / |g(h/2) - g(h/4)|` in the Euclidean norm over all
/// coordinates; about 4 for a second-order difference scheme.
pub fn richardson_ratio(g_h: &Points, g_h2: &Points, g_h4: &Points) -> f64 {
    let diff = |a: &Points, b: &Points| -> f64 {
        let d: Vec<f64> = a
            .as_flat()
            .iter()
            .zip(b.as_flat())
            .map(|(x, y)| (x - y) * (x - y))
            .collect();
        math::sqrt(reduce::tree_sum(&d))
    };
    diff(g_h, g_h2) / diff(g_h2, g_h4)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentOptions {
    pub steps: usize,
    /// Largest vertex displacement tried by the line search.
    pub step0: f64,
    /// Finite-difference step.
    pub h: f64,
    /// Keep a snapshot every this many accepted steps (0: none).
    pub snapshot_every: usize,
    pub gauge: bool,
    /// Smoothing scale `s` of the `H^1` preconditioner in domain units; 0
    /// descends along the raw coordinate gradient.
    pub smoothing: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions {
            steps: 200,
            step0: 0.05,
            h: 1e-6,
            snapshot_every: 0,
            gauge: true,
            smoothing: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub iteration: usize,
    pub e0: f64,
    pub regularizer: f64,
    pub total: f64,
    /// Largest vertex displacement of the accepted step (0 for the start).
    pub step_size: f64,
    pub sphericity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeEvent {
    pub iteration: usize,
    pub before: f64,
    pub after: f64,
    pub accepted: bool,
}

impl GaugeEvent {
    pub fn relative_change(&self) -> f64 {
        (self.after - self.before).abs() / self.before.abs().max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DescentStatus {
    /// Ran all requested steps.
    StepLimit,
    /// Relative decrease fell below [`STALL_TOL`].
    Stalled,
    /// No decreasing step above [`MIN_STEP`].
    Converged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    pub gauges: Vec<GaugeEvent>,
    pub snapshots: Vec<(usize, Shape)>,
    pub status: DescentStatus,
    pub shape: Shape,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn initial(&self) -> &StepRecord {
        &self.records[0]
    }

    pub fn last(&self) -> &StepRecord {
        self.records.last().expect("trajectory holds the start")
    }

    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[1].total <= w[0].total)
    }
}

/// Gradient descent with backtracking: the trial displacement `t` (largest
/// vertex move) starts at `min(step0, 2 t_prev)` and halves until the Armijo
/// condition holds, giving up below [`MIN_STEP`].
pub fn descend(kind: EnergyKind, start: &Shape, opts: DescentOptions) -> Result<Trajectory> {
    descend_with(kind, start, opts, FactorModel::EdgeFit)
}

pub fn descend_with(
    kind: EnergyKind,
    start: &Shape,
    opts: DescentOptions,
    factor: FactorModel,
) -> Result<Trajectory> {
    if !(opts.step0 > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "step0 must be positive, got {}",
            opts.step0
        )));
    }
    if !(opts.smoothing >= 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "smoothing must be non-negative, got {}",
            opts.smoothing
        )));
    }
    let mut obj = Objective::with_factor(kind, start, factor)?;
    let mut x = start.points().clone();
    let mut current = obj.evaluate(&x, true);
    if !current.total.is_finite() {
        return Err(Error::Precondition(
            "energy is not finite at the starting shape".into(),
        ));
    }
    let mut gauges = Vec::new();
    if opts.gauge {
        let shape = obj.regauge(&x)?;
        let candidate = Objective::with_factor(kind, &shape, factor)?;
        let e = candidate.evaluate(shape.points(), true);
        gauges.push(GaugeEvent {
            iteration: 0,
            before: current.total,
            after: e.total,
            accepted: e.total.is_finite(),
        });
        if e.total.is_finite() {
            obj = candidate;
            x = shape.points().clone();
            current = e;
        }
    }
    let mut precond = match (&obj.shape, opts.smoothing > 0.0) {
        (Shape::Sphere(_), true) => Some(obj.preconditioner(&x, opts.smoothing)?),
        _ => None,
    };
    let record = |iteration, e: Evaluation, step_size, x: &Points| StepRecord {
        iteration,
        e0: e.e0,
        regularizer: e.regularizer,
        total: e.total,
        step_size,
        sphericity: sphericity(x),
    };
    let mut records = vec![record(0, current, 0.0, &x)];
    let mut snapshots = Vec::new();
    let mut warnings = Vec::new();
    let mut status = DescentStatus::StepLimit;
    let mut t_prev = opts.step0;
    let mut accepted = 0;
    for iteration in 1..=opts.steps {
        let grad = obj.gradient(&x, opts.h)?;
        warnings.extend(grad.warnings.iter().cloned());
        let dir = match (&precond, opts.smoothing > 0.0) {
            (Some(a), _) => precondition(a, &grad.grad),
            (None, true) => precondition(&obj.preconditioner(&x, opts.smoothing)?, &grad.grad),
            (None, false) => grad.grad.clone(),
        };
        let g = dir.as_flat();
        let gmax = dir.iter().map(linalg::norm).fold(0.0, f64::max);
        if !(gmax > 0.0) {
            status = DescentStatus::Converged;
            break;
        }
        let g2 = linalg::dot(grad.grad.as_flat(), g);
        let mut t = (2.0 * t_prev).min(opts.step0);
        let next = loop {
            let scale = t / gmax;
            let mut trial = x.clone();
            trial
                .as_flat_mut()
                .iter_mut()
                .zip(g)
                .for_each(|(p, gi)| *p -= scale * gi);
            let e = obj.evaluate(&trial, true);
            if e.total <= current.total - ARMIJO * scale * g2 {
                break Some((trial, e));
            }
            t *= 0.5;
            if t < MIN_STEP {
                break None;
            }
        };
        let Some((trial, e)) = next else {
            status = DescentStatus::Converged;
            break;
        };
        let decrease = (current.total - e.total) / current.total.abs().max(f64::MIN_POSITIVE);
        x = trial;
        current = e;
        t_prev = t;
        accepted += 1;
        records.push(record(iteration, current, t, &x));
        if opts.snapshot_every > 0 && accepted % opts.snapshot_every == 0 {
            snapshots.push((iteration, obj.shape.with_points(x.clone())?));
        }
        if decrease < STALL_TOL {
            status = DescentStatus::Stalled;
            break;
        }
        if opts.gauge && accepted % GAUGE_INTERVAL == 0 {
            let shape = obj.regauge(&x)?;
            let candidate = Objective::with_factor(kind, &shape, factor)?;
            let e = candidate.evaluate(shape.points(), true);
            let keep = e.total <= current.total;
            gauges.push(GaugeEvent {
                iteration,
                before: current.total,
                after: e.total,
                accepted: keep,
            });
            if keep {
                obj = candidate;
                x = shape.points().clone();
                current = e;
                if precond.is_some() {
                    precond = Some(obj.preconditioner(&x, opts.smoothing)?);
                }
            }
        }
    }
    let shape = obj.shape.with_points(x)?;
    Ok(Trajectory {
        records,
        gauges,
        snapshots,
        status,
        shape,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::{make_curve, CurveKind};

    #[test]
    fn quadratic_gradient() {
        let c = make_curve(&CurveKind::Circle, 16).unwrap();
        let x = c.points().clone();
        let g = fd_gradient(|p| linalg::dot(p.row(3), p.row(3)), &x, 1e-4).unwrap();
        for k in 0..2 {
            assert!((g.grad.row(3)[k] - 2.0 * x.row(3)[k]).abs() < 1e-6);
        }
        assert!(g.grad.row(4).iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn one_sided_fallback() {
        let x = Points::from_rows(1, &[[0.0]]).unwrap();
        let g = fd_gradient(
            |p| {
                if p.row(0)[0] < 0.0 {
                    f64::INFINITY
                } else {
                    3.0 * p.row(0)[0]
                }
            },
            &x,
            1e-3,
        )
        .unwrap();
        assert_eq!(g.one_sided, 1);
        assert!((g.grad.row(0)[0] - 3.0).abs() < 1e-9);
        assert!(fd_gradient(|_| f64::INFINITY, &x, 1e-3).is_err());
        assert!(fd_gradient(|_| 0.0, &x, 0.0).is_err());
    }

    #[test]
    fn kind_must_match_shape() {
        let c = Shape::Curve(make_curve(&CurveKind::Circle, 16).unwrap());
        assert!(Objective::new(EnergyKind::SurfaceE0, &c).is_err());
        assert!(Objective::new(EnergyKind::CurveELambda { lambda: 0.0 }, &c).is_err());
    }
}
