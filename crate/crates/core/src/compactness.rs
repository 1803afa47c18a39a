//! Measurements behind the compactness argument: Hoelder continuity of the
//! Gauss map, sheet counts and ball covers, the divergent disk-pair
//! integral, conformal moduli of annuli and the Kuiper self-distance.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curvature::{cotan_weights, face_planes, vertex_plane};
use crate::error::{Error, Result};
use crate::graph::{components, Graph};
use crate::linalg;
use crate::math::{self, PI, TAU};
use crate::mesh::{Face, SphereMesh, Topology};
use crate::points::{PointN, Points};
use crate::reduce;
use crate::sparse::{conjugate_gradient, TripletBuilder};

/// Meshes with fewer faces use every face pair in [`gauss_holder_quotient`].
pub const HOLDER_ALL_PAIRS: usize = 10_000;
/// Sampled pairs above [`HOLDER_ALL_PAIRS`] faces.
pub const HOLDER_SAMPLES: usize = 100_000;
/// Source faces the samples are drawn from (one shortest-path tree each).
pub const HOLDER_SOURCES: usize = 100;

/// `max |T_a - T_b| / dist(a, b)^q_exp` over face pairs, with `T` the face
/// tangent planes and `dist` the shortest path between face barycenters
/// through the dual graph.
pub fn gauss_holder_quotient(m: &SphereMesh, q_exp: f64, seed: u64) -> Result<f64> {
    holder_quotient_on(m.image(), m.faces(), q_exp, seed)
}

/// [`gauss_holder_quotient`] for any triangulated surface.
pub fn holder_quotient_on(points: &Points, faces: &[Face], q_exp: f64, seed: u64) -> Result<f64> {
    if !(q_exp > 0.0 && q_exp < 1.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "exponent {q_exp} outside (0, 1)"
        )));
    }
    let topology = Topology::build(points.len(), faces)?;
    let planes = face_planes(points, faces)?;
    let mut bary = Points::with_capacity(points.dim(), faces.len());
    for t in faces {
        let mut c = points.row(t[0]).to_vec();
        linalg::add_assign(&mut c, points.row(t[1]));
        linalg::add_assign(&mut c, points.row(t[2]));
        c.iter_mut().for_each(|x| *x /= 3.0);
        bary.push(&c);
    }
    let graph = Graph::dual_graph(&bary, &topology);
    let f = faces.len();
    let quotient = |a: usize, b: usize, d: f64| -> f64 {
        if d > 0.0 && d.is_finite() {
            planes[a].distance(&planes[b]) / math::powf(d, q_exp)
        } else {
            0.0
        }
    };
    let maxima = if f < HOLDER_ALL_PAIRS {
        reduce::map_rows(f, |a| {
            let dist = graph.dijkstra(a);
            (a + 1..f)
                .map(|b| quotient(a, b, dist[b]))
                .fold(0.0, f64::max)
        })
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let per = HOLDER_SAMPLES / HOLDER_SOURCES;
        let plan: Vec<(usize, Vec<usize>)> = (0..HOLDER_SOURCES)
            .map(|_| {
                (
                    rng.gen_range(0..f),
                    (0..per).map(|_| rng.gen_range(0..f)).collect(),
                )
            })
            .collect();
        reduce::map_rows(plan.len(), |k| {
            let (a, targets) = &plan[k];
            let dist = graph.dijkstra(*a);
            targets
                .iter()
                .map(|&b| quotient(*a, b, dist[b]))
                .fold(0.0, f64::max)
        })
    };
    Ok(maxima.into_iter().fold(0.0, f64::max))
}

/// Connected components (sorted vertex lists) of the sub-mesh induced by
/// the image vertices within `radius` of `center`.
pub fn sheets(m: &SphereMesh, center: &[f64], radius: f64) -> Result<Vec<Vec<usize>>> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "radius must be positive, got {radius}"
        )));
    }
    if center.len() != m.dim() {
        return Err(Error::InvalidInput(alloc::format!(
            "center has dimension {}, mesh {}",
            center.len(),
            m.dim()
        )));
    }
    let keep: Vec<bool> = m
        .image()
        .iter()
        .map(|p| linalg::dist(p, center) <= radius)
        .collect();
    Ok(components(|v| m.topology().neighbors[v].clone(), &keep))
}

/// Number of [`sheets`] in a ball; 0 if it holds no vertex.
pub fn sheet_count(m: &SphereMesh, center: &[f64], radius: f64) -> Result<usize> {
    Ok(sheets(m, center, radius)?.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: PointN,
    /// Image vertex the ball is centered on.
    pub vertex: usize,
    pub radius: f64,
    pub sheet_count: usize,
    /// Largest edge-length ratio `|e| / |P e|` over all sheets.
    pub max_bilip: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverReport {
    pub balls: Vec<Ball>,
    pub delta: f64,
    pub total_balls: usize,
}

/// Edgewise bi-Lipschitz constant of the projection of a sheet onto the
/// tangent plane at its vertex nearest to `center`, or `None` when the
/// projection is not injective (coincident images or a flipped triangle).
fn sheet_projection(m: &SphereMesh, sheet: &[usize], center: &[f64]) -> Option<f64> {
    let img = m.image();
    let topo = m.topology();
    let anchor = *sheet.iter().min_by(|&&a, &&b| {
        linalg::dist(img.row(a), center).total_cmp(&linalg::dist(img.row(b), center))
    })?;
    let plane = vertex_plane(img, m.faces(), &topo.vertex_faces[anchor])?;
    let (e1, e2) = plane.basis();
    let origin = img.row(anchor);
    let flat: Vec<[f64; 2]> = sheet
        .iter()
        .map(|&v| {
            let d = linalg::sub(img.row(v), origin);
            [linalg::dot(&d, &e1), linalg::dot(&d, &e2)]
        })
        .collect();
    let local = |v: usize| sheet.binary_search(&v).ok();
    let mut bilip: f64 = 1.0;
    for (k, &v) in sheet.iter().enumerate() {
        for &u in &topo.neighbors[v] {
            if u <= v {
                continue;
            }
            if let Some(l) = local(u) {
                let full = linalg::dist(img.row(v), img.row(u));
                let proj = math::hypot(flat[k][0] - flat[l][0], flat[k][1] - flat[l][1]);
                if !(proj > 0.0) {
                    return None;
                }
                bilip = bilip.max(full / proj);
            }
        }
    }
    let mut sign = 0.0;
    for &f in sheet.iter().flat_map(|&v| topo.vertex_faces[v].iter()) {
        let t = m.faces()[f];
        let (Some(a), Some(b), Some(c)) = (local(t[0]), local(t[1]), local(t[2])) else {
            continue;
        };
        let area = (flat[b][0] - flat[a][0]) * (flat[c][1] - flat[a][1])
            - (flat[b][1] - flat[a][1]) * (flat[c][0] - flat[a][0]);
        if area == 0.0 || (sign != 0.0 && area * sign < 0.0) {
            return None;
        }
        sign = area;
    }
    let mut order: Vec<usize> = (0..flat.len()).collect();
    order.sort_by(|&a, &b| flat[a][0].total_cmp(&flat[b][0]));
    for (k, &a) in order.iter().enumerate() {
        for &b in &order[k + 1..] {
            if flat[b][0] - flat[a][0] > 0.0 {
                break;
            }
            if flat[a][1] == flat[b][1] {
                return None;
            }
        }
    }
    Some(bilip)
}

/// Greedy farthest-point cover of the image vertices. Each ball starts at
/// half the image diameter and is halved until every sheet inside it
/// projects injectively to its tangent plane with edgewise bi-Lipschitz
/// constant at most `1 + delta / 2`.
pub fn ball_cover(m: &SphereMesh, delta: f64) -> Result<CoverReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "delta {delta} outside (0, 1)"
        )));
    }
    let img = m.image();
    let n = img.len();
    let limit = 1.0 + 0.5 * delta;
    let initial = 0.5 * img.diameter();
    let mut covered = vec![false; n];
    let mut nearest = vec![f64::INFINITY; n];
    let mut balls = Vec::new();
    let mut next = Some(0);
    while let Some(v) = next {
        let center = img.row(v);
        let mut radius = initial;
        let (sheet_list, bilip) = loop {
            let found = sheets(m, center, radius)?;
            let checks: Option<Vec<f64>> = found
                .iter()
                .map(|s| sheet_projection(m, s, center))
                .collect();
            match checks {
                Some(b) if b.iter().all(|&x| x <= limit) => {
                    break (found, b.into_iter().fold(1.0, f64::max))
                }
                _ => radius *= 0.5,
            }
        };
        for s in &sheet_list {
            for &u in s {
                covered[u] = true;
            }
        }
        for (u, p) in img.iter().enumerate() {
            nearest[u] = nearest[u].min(linalg::dist(p, center));
        }
        balls.push(Ball {
            center: PointN(center.to_vec()),
            vertex: v,
            radius,
            sheet_count: sheet_list.len(),
            max_bilip: bilip,
        });
        next = (0..n)
            .filter(|&u| !covered[u])
            .max_by(|&a, &b| nearest[a].total_cmp(&nearest[b]).then(b.cmp(&a)));
    }
    let total_balls = balls.len();
    Ok(CoverReport {
        balls,
        delta,
        total_balls,
    })
}

/// Overlap area of two radius-`r` disks whose centers are `s` apart.
fn lens_area(r: f64, s: f64) -> f64 {
    if s >= 2.0 * r {
        return 0.0;
    }
    2.0 * r * r * math::acos(s / (2.0 * r)) - 0.5 * s * math::sqrt(4.0 * r * r - s * s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiskPair {
    pub value: f64,
    /// Cells of the final midpoint rule.
    pub resolution: usize,
    /// Relative change of the last doubling.
    pub change: f64,
    pub converged: bool,
    pub warnings: Vec<String>,
}

pub const DISK_PAIR_TOL: f64 = 0.01;
pub const DISK_PAIR_MAX_RESOLUTION: usize = 1 << 24;

/// `int int |xi - eta|^-4` over two parallel radius-`r` disks in `R^4` at
/// distance `eps`. Both disks lie in translates of one coordinate 2-plane,
/// so the integrand only depends on `s = |u - v|` and the double integral
/// equals `int_0^2r 2 pi s lens(s) / (s^2 + eps^2)^2 ds` exactly, with
/// `lens(s)` the overlap area of the disks shifted by `s`. This is evaluated
/// with the midpoint rule, doubling the cell count from `resolution` until
/// two successive values agree to [`DISK_PAIR_TOL`].
pub fn disk_pair_integral(r: f64, eps: f64, resolution: usize) -> Result<DiskPair> {
    if !(r > 0.0 && r.is_finite() && eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!(
            "r = {r} and eps = {eps} must be positive"
        )));
    }
    if resolution < 32 {
        return Err(Error::InvalidParameter(alloc::format!(
            "resolution {resolution} below 32"
        )));
    }
    let rule = |cells: usize| -> f64 {
        let h = 2.0 * r / cells as f64;
        const BLOCK: usize = 4096;
        let blocks = cells.div_ceil(BLOCK);
        let partial = reduce::map_rows(blocks, |b| {
            let mut acc = 0.0;
            for k in b * BLOCK..((b + 1) * BLOCK).min(cells) {
                let s = (k as f64 + 0.5) * h;
                let q = s * s + eps * eps;
                acc += TAU * s * lens_area(r, s) / (q * q);
            }
            acc
        });
        reduce::tree_sum(&partial) * h
    };
    let mut cells = resolution;
    let mut value = rule(cells);
    loop {
        if 2 * cells > DISK_PAIR_MAX_RESOLUTION {
            let warning = alloc::format!("disk pair quadrature not converged at {cells} cells");
            return Ok(DiskPair {
                value,
                resolution: cells,
                change: f64::NAN,
                converged: false,
                warnings: vec![warning],
            });
        }
        let finer = rule(2 * cells);
        let change = (finer - value).abs() / finer;
        cells *= 2;
        value = finer;
        if change <= DISK_PAIR_TOL {
            return Ok(DiskPair {
                value,
                resolution: cells,
                change,
                converged: true,
                warnings: Vec::new(),
            });
        }
    }
}

/// A triangulated annulus with its two boundary loops.
#[derive(Debug, Clone, PartialEq)]
pub struct Annulus {
    pub points: Points,
    pub faces: Vec<Face>,
    pub inner: Vec<usize>,
    pub outer: Vec<usize>,
}

/// Planar annulus `inner_radius <= |x| <= outer_radius` in the `xy` plane of
/// `R^3`, on a polar grid with logarithmically spaced rings.
pub fn flat_annulus(
    inner_radius: f64,
    outer_radius: f64,
    rings: usize,
    sectors: usize,
) -> Result<Annulus> {
    if !(inner_radius > 0.0 && outer_radius > inner_radius && outer_radius.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!(
            "radii {inner_radius}, {outer_radius} do not bound an annulus"
        )));
    }
    if rings < 1 || sectors < 3 {
        return Err(Error::InvalidParameter(
            "need at least 1 ring and 3 sectors".into(),
        ));
    }
    let log_ratio = math::ln(outer_radius / inner_radius);
    let mut points = Points::with_capacity(3, (rings + 1) * sectors);
    for i in 0..=rings {
        let rho = inner_radius * math::exp(log_ratio * i as f64 / rings as f64);
        // staggered rows keep the triangles close to equilateral
        let shift = if i % 2 == 0 { 0.0 } else { 0.5 };
        for j in 0..sectors {
            let t = TAU * (j as f64 + shift) / sectors as f64;
            points.push(&[rho * math::cos(t), rho * math::sin(t), 0.0]);
        }
    }
    let id = |i: usize, j: usize| i * sectors + j % sectors;
    let mut faces = Vec::with_capacity(2 * rings * sectors);
    for i in 0..rings {
        for j in 0..sectors {
            let (a, b, c, d) = (id(i, j), id(i, j + 1), id(i + 1, j), id(i + 1, j + 1));
            if i % 2 == 0 {
                faces.push([a, b, c]);
                faces.push([b, d, c]);
            } else {
                faces.push([a, d, c]);
                faces.push([a, b, d]);
            }
        }
    }
    let inner = (0..sectors).map(|j| id(0, j)).collect();
    let outer = (0..sectors).map(|j| id(rings, j)).collect();
    Ok(Annulus {
        points,
        faces,
        inner,
        outer,
    })
}

impl Annulus {
    pub fn modulus(&self) -> Result<f64> {
        annulus_modulus(&self.points, &self.faces, &self.inner, &self.outer)
    }

    pub fn map_points(&self, points: Points) -> Result<Annulus> {
        if points.len() != self.points.len() {
            return Err(Error::InvalidInput("point count changed".into()));
        }
        Ok(Annulus {
            points,
            ..self.clone()
        })
    }
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut s = v.to_vec();
    s.sort_unstable();
    s.dedup();
    s
}

/// Conformal modulus `1 / D(u)` of the annular region between two boundary
/// loops, where `u` is the discrete harmonic function (cotangent weights of
/// the image metric) equal to 0 on `inner` and 1 on `outer`.
pub fn annulus_modulus(
    points: &Points,
    faces: &[Face],
    inner: &[usize],
    outer: &[usize],
) -> Result<f64> {
    let n = points.len();
    let topo = Topology::build(n, faces).map_err(|e| Error::Topology(alloc::format!("{e}")))?;
    let used: Vec<bool> = (0..n).map(|v| !topo.vertex_faces[v].is_empty()).collect();
    if used.iter().any(|u| !u) {
        return Err(Error::Topology("mesh has isolated vertices".into()));
    }
    let chi = topo.euler_characteristic(faces.len());
    if chi != 0 {
        return Err(Error::Topology(alloc::format!(
            "Euler characteristic {chi}, an annulus has 0"
        )));
    }
    if components(|v| topo.neighbors[v].clone(), &used).len() != 1 {
        return Err(Error::Topology("mesh is not connected".into()));
    }
    let mut on_boundary = vec![false; n];
    let mut boundary_adj = vec![Vec::new(); n];
    for [a, b] in topo.boundary_edges() {
        on_boundary[a] = true;
        on_boundary[b] = true;
        boundary_adj[a].push(b);
        boundary_adj[b].push(a);
    }
    let loops = components(|v| boundary_adj[v].clone(), &on_boundary);
    if loops.len() != 2 || loops.iter().flatten().any(|&v| boundary_adj[v].len() != 2) {
        return Err(Error::Topology(alloc::format!(
            "expected two boundary cycles, found {}",
            loops.len()
        )));
    }
    let (inner, outer) = (sorted(inner), sorted(outer));
    let matches =
        (loops[0] == inner && loops[1] == outer) || (loops[0] == outer && loops[1] == inner);
    if !matches {
        return Err(Error::Topology(
            "the given loops are not the two boundary cycles".into(),
        ));
    }
    let cw = cotan_weights(points, faces, &topo);
    let mut t = TripletBuilder::new(n);
    for (e, &[i, j]) in topo.edges.iter().enumerate() {
        let w = 0.5 * cw.weights[e];
        t.add(i, i, w);
        t.add(j, j, w);
        t.add(i, j, -w);
        t.add(j, i, -w);
    }
    let lap = t.build();
    let mut u = vec![0.5; n];
    let mut fixed = vec![false; n];
    for &v in &inner {
        u[v] = 0.0;
        fixed[v] = true;
    }
    for &v in &outer {
        u[v] = 1.0;
        fixed[v] = true;
    }
    let outcome = conjugate_gradient(&lap, &vec![0.0; n], &mut u, &fixed, 1e-13, 20 * n);
    if !outcome.converged {
        return Err(Error::Undefined(alloc::format!(
            "Laplace solve stalled at residual {:e}",
            outcome.residual
        )));
    }
    let terms: Vec<f64> = topo
        .edges
        .iter()
        .enumerate()
        .map(|(e, &[i, j])| 0.5 * cw.weights[e] * (u[i] - u[j]) * (u[i] - u[j]))
        .collect();
    let energy = reduce::tree_sum(&terms);
    if !(energy > 0.0) {
        return Err(Error::Undefined("harmonic potential has no energy".into()));
    }
    Ok(1.0 / energy)
}

/// Closed form `log(R / r) / (2 pi)` for a round annulus.
pub fn round_annulus_modulus(inner_radius: f64, outer_radius: f64) -> f64 {
    math::ln(outer_radius / inner_radius) / (2.0 * PI)
}

/// Smallest image distance between vertices at least `rho` apart along the
/// edge graph of the image, over the image diameter.
pub fn kuiper_selfdistance(m: &SphereMesh, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "rho must be positive, got {rho}"
        )));
    }
    let img = m.image();
    let graph = Graph::vertex_graph(img, m.topology());
    let rows = reduce::map_rows(img.len(), |i| {
        let geo = graph.dijkstra_bounded(i, rho);
        (0..img.len())
            .filter(|&j| j != i && geo[j] >= rho)
            .map(|j| linalg::dist(img.row(i), img.row(j)))
            .fold(f64::INFINITY, f64::min)
    });
    let gap = rows.into_iter().fold(f64::INFINITY, f64::min);
    if !gap.is_finite() {
        return Err(Error::Undefined(alloc::format!(
            "no vertex pair is {rho} apart along the surface; use a smaller rho"
        )));
    }
    Ok(gap / img.diameter())
}
