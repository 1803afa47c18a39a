//! Triangulated 2-spheres carrying a domain (unit `S^2`) and an image in `R^n`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg;
use crate::math;
use crate::points::Points;

/// Tolerance on `|domain vertex| = 1`.
pub const DOMAIN_NORM_TOL: f64 = 1e-12;

pub type Face = [usize; 3];

/// Marker for a missing face on a boundary edge.
pub const NO_FACE: usize = usize::MAX;

/// Edge and adjacency tables of a consistently oriented triangle mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    vertex_count: usize,
    /// Undirected edges `[i, j]` with `i < j`, sorted.
    pub edges: Vec<[usize; 2]>,
    /// Faces on either side of each edge; `NO_FACE` on a boundary.
    pub edge_faces: Vec<[usize; 2]>,
    /// Sorted one-ring of each vertex.
    pub neighbors: Vec<Vec<usize>>,
    pub vertex_faces: Vec<Vec<usize>>,
}

impl Topology {
    /// Builds the tables, rejecting out-of-range indices, repeated vertices in
    /// a face, non-manifold edges and inconsistent orientation.
    pub fn build(vertex_count: usize, faces: &[Face]) -> Result<Topology> {
        let mut half: Vec<(usize, usize, usize)> = Vec::with_capacity(3 * faces.len());
        let mut vertex_faces = vec![Vec::new(); vertex_count];
        for (f, tri) in faces.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertex_count) {
                return Err(Error::InvalidMesh(alloc::format!(
                    "face {f} references a missing vertex"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(alloc::format!(
                    "face {f} repeats a vertex"
                )));
            }
            for k in 0..3 {
                half.push((tri[k], tri[(k + 1) % 3], f));
                vertex_faces[tri[k]].push(f);
            }
        }
        half.sort_unstable();
        if let Some(w) = half
            .windows(2)
            .find(|w| w[0].0 == w[1].0 && w[0].1 == w[1].1)
        {
            return Err(Error::InvalidMesh(alloc::format!(
                "directed edge ({}, {}) appears twice: faces {} and {} are inconsistently oriented or non-manifold",
                w[0].0,
                w[0].1,
                w[0].2,
                w[1].2
            )));
        }
        let mut undirected: Vec<(usize, usize, usize)> = half
            .iter()
            .map(|&(a, b, f)| (a.min(b), a.max(b), f))
            .collect();
        undirected.sort_unstable();
        let mut edges = Vec::new();
        let mut edge_faces = Vec::new();
        let mut k = 0;
        while k < undirected.len() {
            let (a, b, f) = undirected[k];
            let mut sides = [f, NO_FACE];
            let mut m = k + 1;
            while m < undirected.len() && undirected[m].0 == a && undirected[m].1 == b {
                if m - k >= 2 {
                    return Err(Error::InvalidMesh(alloc::format!(
                        "edge ({a}, {b}) is shared by more than two faces"
                    )));
                }
                sides[1] = undirected[m].2;
                m += 1;
            }
            edges.push([a, b]);
            edge_faces.push(sides);
            k = m;
        }
        let mut neighbors = vec![Vec::new(); vertex_count];
        for &[a, b] in &edges {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        neighbors.iter_mut().for_each(|n| n.sort_unstable());
        Ok(Topology {
            vertex_count,
            edges,
            edge_faces,
            neighbors,
            vertex_faces,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn is_closed(&self) -> bool {
        self.edge_faces.iter().all(|s| s[1] != NO_FACE)
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = [usize; 2]> + '_ {
        self.edges
            .iter()
            .zip(&self.edge_faces)
            .filter(|(_, s)| s[1] == NO_FACE)
            .map(|(e, _)| *e)
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        let key = [a.min(b), a.max(b)];
        self.edges.binary_search(&key).ok()
    }

    /// `V - E + F` over the vertices referenced by at least one face.
    pub fn euler_characteristic(&self, face_count: usize) -> i64 {
        let used = self.vertex_faces.iter().filter(|f| !f.is_empty()).count();
        used as i64 - self.edges.len() as i64 + face_count as i64
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].binary_search(&b).is_ok()
    }
}

/// Per-face areas of a triangle soup.
pub fn face_areas(points: &Points, faces: &[Face]) -> Vec<f64> {
    faces
        .iter()
        .map(|t| linalg::triangle_area(points.row(t[0]), points.row(t[1]), points.row(t[2])))
        .collect()
}

/// Barycentric (one-third) dual areas. Errors on a zero-area face.
pub fn barycentric_areas(points: &Points, faces: &[Face]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; points.len()];
    for (f, (t, area)) in faces.iter().zip(face_areas(points, faces)).enumerate() {
        if !(area > 0.0) {
            return Err(Error::InvalidMesh(alloc::format!("face {f} has zero area")));
        }
        for &v in t {
            out[v] += area / 3.0;
        }
    }
    Ok(out)
}

/// Conformal factor at vertex `i` from its star. With
/// `y_ij = log(|f_i - f_j| / |x_i - x_j|)` over the neighbors `j`, fits
/// `y_ij = l_i + g . (x_j - x_i) / 2` by least squares, `g` tangent to the
/// sphere at `x_i`, and returns `exp(l_i)`. Exact for similarities and to
/// first order for conformal maps.
pub fn edge_fit_factor(
    domain: &Points,
    image: &Points,
    topology: &Topology,
    i: usize,
) -> Result<f64> {
    let xi = domain.row(i);
    let helper = if xi[0].abs() < 0.6 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let e1 = linalg::normalized(&linalg::cross3(xi, &helper));
    let e2 = linalg::cross3(xi, &e1);
    let mut normal = [0.0; 9];
    let mut rhs = [0.0; 3];
    let mut mean = 0.0;
    let nb = &topology.neighbors[i];
    for &j in nb {
        let dx = linalg::sub(domain.row(j), xi);
        let ratio = linalg::dist(image.row(i), image.row(j)) / linalg::norm(&dx);
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(Error::InvalidMesh(alloc::format!(
                "edge ({i}, {j}) is degenerate"
            )));
        }
        let y = math::ln(ratio);
        mean += y;
        let row = [
            1.0,
            0.5 * linalg::dot(&dx, &e1),
            0.5 * linalg::dot(&dx, &e2),
        ];
        for a in 0..3 {
            rhs[a] += row[a] * y;
            for b in 0..3 {
                normal[a * 3 + b] += row[a] * row[b];
            }
        }
    }
    let l = match linalg::solve_dense(&normal, &rhs) {
        Some(sol) if sol[0].is_finite() && nb.len() >= 3 => sol[0],
        _ => mean / nb.len().max(1) as f64,
    };
    Ok(math::exp(l))
}

/// A triangulated topological sphere with paired positions: `domain` on the
/// unit `S^2` and `image` in `R^n`.
#[derive(Debug, Clone)]
pub struct SphereMesh {
    domain: Points,
    image: Points,
    faces: Arc<Vec<Face>>,
    topology: Arc<Topology>,
}

impl PartialEq for SphereMesh {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain && self.image == other.image && self.faces == other.faces
    }
}

impl SphereMesh {
    pub fn new(domain: Points, image: Points, faces: Vec<Face>) -> Result<SphereMesh> {
        if domain.dim() != 3 {
            return Err(Error::InvalidMesh(
                "domain points must be 3-vectors on S^2".into(),
            ));
        }
        if domain.len() != image.len() {
            return Err(Error::InvalidMesh(alloc::format!(
                "{} domain vertices but {} image vertices",
                domain.len(),
                image.len()
            )));
        }
        let topology = Topology::build(image.len(), &faces)?;
        if !topology.is_closed() {
            return Err(Error::InvalidMesh("mesh has boundary edges".into()));
        }
        if let Some(v) = topology.vertex_faces.iter().position(|f| f.is_empty()) {
            return Err(Error::InvalidMesh(alloc::format!(
                "vertex {v} is not used by any face"
            )));
        }
        let chi = topology.euler_characteristic(faces.len());
        if chi != 2 {
            return Err(Error::InvalidMesh(alloc::format!(
                "Euler characteristic {chi}, expected 2"
            )));
        }
        let mesh = SphereMesh {
            domain,
            image,
            faces: Arc::new(faces),
            topology: Arc::new(topology),
        };
        mesh.check_domain()?;
        mesh.check_image()?;
        Ok(mesh)
    }

    /// Mesh whose domain is the radial projection of the centered image onto
    /// the unit sphere (3-dimensional images only).
    pub fn with_radial_domain(image: Points, faces: Vec<Face>) -> Result<SphereMesh> {
        if image.dim() != 3 {
            return Err(Error::InvalidInput(
                "radial domain needs a 3-dimensional image".into(),
            ));
        }
        let c = image.centroid();
        let domain = image.map(3, |p, out| {
            let d = linalg::sub(p, &c);
            out.copy_from_slice(&linalg::normalized(&d));
        });
        SphereMesh::new(domain, image, faces)
    }

    fn check_domain(&self) -> Result<()> {
        for (i, p) in self.domain.iter().enumerate() {
            let r = linalg::norm(p);
            if (r - 1.0).abs() > DOMAIN_NORM_TOL {
                return Err(Error::InvalidMesh(alloc::format!(
                    "domain vertex {i} has norm {r}"
                )));
            }
        }
        Ok(())
    }

    fn check_image(&self) -> Result<()> {
        let areas = barycentric_areas(&self.image, &self.faces)?;
        if let Some(v) = areas.iter().position(|&a| !(a > 0.0)) {
            return Err(Error::InvalidMesh(alloc::format!(
                "image dual area of vertex {v} is not positive"
            )));
        }
        Ok(())
    }

    /// Same combinatorics and domain with a new image.
    pub fn with_image(&self, image: Points) -> Result<SphereMesh> {
        if image.len() != self.image.len() {
            return Err(Error::InvalidMesh("image vertex count changed".into()));
        }
        let mesh = SphereMesh {
            image,
            ..self.clone()
        };
        mesh.check_image()?;
        Ok(mesh)
    }

    /// Same combinatorics and image with a new domain (renormalized onto `S^2`).
    pub fn with_domain(&self, mut domain: Points) -> Result<SphereMesh> {
        if domain.len() != self.domain.len() || domain.dim() != 3 {
            return Err(Error::InvalidMesh("domain shape changed".into()));
        }
        for p in domain.iter_mut() {
            let r = linalg::norm(p);
            p.iter_mut().for_each(|x| *x /= r);
        }
        let mesh = SphereMesh {
            domain,
            ..self.clone()
        };
        mesh.check_domain()?;
        Ok(mesh)
    }

    pub fn domain(&self) -> &Points {
        &self.domain
    }

    pub fn image(&self) -> &Points {
        &self.image
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    /// Ambient dimension of the image.
    pub fn dim(&self) -> usize {
        self.image.dim()
    }

    pub fn vertex_count(&self) -> usize {
        self.image.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.topology.euler_characteristic(self.faces.len())
    }

    pub fn domain_dual_areas(&self) -> Result<Vec<f64>> {
        barycentric_areas(&self.domain, &self.faces)
    }

    pub fn image_dual_areas(&self) -> Result<Vec<f64>> {
        barycentric_areas(&self.image, &self.faces)
    }

    /// Barycentric dual areas `(a_i, A_i)` of the domain and image triangulations.
    pub fn dual_areas(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((self.domain_dual_areas()?, self.image_dual_areas()?))
    }

    /// Per-vertex conformal factor `d_i`, fitted from the edge-length ratios
    /// of each vertex star (see [`edge_fit_factor`]).
    pub fn conformal_factor(&self) -> Result<Vec<f64>> {
        (0..self.vertex_count())
            .map(|i| edge_fit_factor(&self.domain, &self.image, &self.topology, i))
            .collect()
    }

    /// Per-vertex area ratio `sqrt(A_i / a_i)` of the barycentric dual cells.
    pub fn area_conformal_factor(&self) -> Result<Vec<f64>> {
        let (a, big_a) = self.dual_areas()?;
        Ok(a.iter()
            .zip(&big_a)
            .map(|(a, b)| math::sqrt(b / a))
            .collect())
    }

    pub fn face_barycenters(&self) -> Points {
        let mut out = Points::with_capacity(self.dim(), self.face_count());
        for t in self.faces.iter() {
            let mut c = self.image.row(t[0]).to_vec();
            linalg::add_assign(&mut c, self.image.row(t[1]));
            linalg::add_assign(&mut c, self.image.row(t[2]));
            c.iter_mut().for_each(|x| *x /= 3.0);
            out.push(&c);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::icosphere;

    #[test]
    fn icosphere_dual_areas() {
        let m = icosphere(3, 3).unwrap();
        let (a, big_a) = m.dual_areas().unwrap();
        assert_eq!(a, big_a);
        let total: f64 = a.iter().sum();
        assert!(
            (0.98 * 4.0 * math::PI..=4.0 * math::PI).contains(&total),
            "{total}"
        );
        let mut img = m.image().clone();
        img.scale(2.0);
        let m2 = m.with_image(img).unwrap();
        let (a2, big_a2) = m2.dual_areas().unwrap();
        for i in 0..a2.len() {
            assert_eq!(big_a2[i], 4.0 * a2[i]);
        }
    }

    #[test]
    fn conformal_factor_of_scaling_is_scale() {
        let m = icosphere(2, 3).unwrap();
        let mut img = m.image().clone();
        img.scale(3.0);
        let d = m.with_image(img).unwrap().conformal_factor().unwrap();
        assert!(d.iter().all(|x| (x - 3.0).abs() < 1e-14));
        let d1 = m.conformal_factor().unwrap();
        assert!(d1.iter().all(|x| *x == 1.0));
    }

    #[test]
    fn rejects_bad_meshes() {
        let m = icosphere(1, 3).unwrap();
        let mut faces = m.faces().to_vec();
        faces.pop();
        assert!(matches!(
            SphereMesh::new(m.domain().clone(), m.image().clone(), faces),
            Err(Error::InvalidMesh(_))
        ));
        let mut faces = m.faces().to_vec();
        faces[0].swap(0, 1);
        assert!(SphereMesh::new(m.domain().clone(), m.image().clone(), faces).is_err());
        let mut dom = m.domain().clone();
        dom.row_mut(0)[2] += 1e-6;
        assert!(SphereMesh::new(dom, m.image().clone(), m.faces().to_vec()).is_err());
    }

    #[test]
    fn degenerate_face_is_reported() {
        let pts =
            Points::from_rows(3, &[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(
            barycentric_areas(&pts, &[[0, 1, 2]]),
            Err(Error::InvalidMesh(_))
        ));
    }
}
