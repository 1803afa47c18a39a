//! Flat storage for lists of points in `R^n`.

use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

use crate::error::{Error, Result};
use crate::linalg;

/// A single point of `R^n`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointN(pub Vec<f64>);

impl PointN {
    pub fn zeros(dim: usize) -> Self {
        PointN(alloc::vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl Deref for PointN {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for PointN {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for PointN {
    fn from(v: Vec<f64>) -> Self {
        PointN(v)
    }
}

impl From<&[f64]> for PointN {
    fn from(v: &[f64]) -> Self {
        PointN(v.to_vec())
    }
}

/// Row-major list of points sharing one ambient dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    dim: usize,
    coords: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize) -> Self {
        Points {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, len: usize) -> Self {
        Points {
            dim,
            coords: Vec::with_capacity(dim * len),
        }
    }

    pub fn zeros(dim: usize, len: usize) -> Self {
        Points {
            dim,
            coords: alloc::vec![0.0; dim * len],
        }
    }

    /// Wraps a flat coordinate buffer; every coordinate must be finite.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidInput(alloc::format!(
                "{} coordinates do not split into rows of {dim}",
                coords.len()
            )));
        }
        if let Some(k) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(alloc::format!(
                "non-finite coordinate in point {}",
                k / dim
            )));
        }
        Ok(Points { dim, coords })
    }

    pub fn from_rows<R: AsRef<[f64]>>(dim: usize, rows: &[R]) -> Result<Self> {
        let mut coords = Vec::with_capacity(dim * rows.len());
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::InvalidInput(alloc::format!(
                    "point {i} has {} coordinates, expected {dim}",
                    r.len()
                )));
            }
            coords.extend_from_slice(r);
        }
        Points::from_flat(dim, coords)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn push(&mut self, p: &[f64]) {
        debug_assert_eq!(p.len(), self.dim);
        self.coords.extend_from_slice(p);
    }

    pub fn iter(&self) -> core::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn iter_mut(&mut self) -> core::slice::ChunksExactMut<'_, f64> {
        self.coords.chunks_exact_mut(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.coords
    }

    pub fn point(&self, i: usize) -> PointN {
        PointN(self.row(i).to_vec())
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(|r| r.to_vec()).collect()
    }

    /// Applies `f` to every point, producing points of dimension `dim`.
    pub fn map(&self, dim: usize, mut f: impl FnMut(&[f64], &mut [f64])) -> Points {
        let mut out = Points::zeros(dim, self.len());
        for (src, dst) in self.iter().zip(out.iter_mut()) {
            f(src, dst);
        }
        out
    }

    pub fn scale(&mut self, s: f64) {
        self.coords.iter_mut().for_each(|c| *c *= s);
    }

    pub fn translate(&mut self, t: &[f64]) {
        for row in self.iter_mut() {
            linalg::add_assign(row, t);
        }
    }

    /// Pads (with zeros) or truncates every point to `dim` coordinates.
    pub fn with_dim(&self, dim: usize) -> Points {
        let keep = dim.min(self.dim);
        self.map(dim, |src, dst| dst[..keep].copy_from_slice(&src[..keep]))
    }

    pub fn centroid(&self) -> PointN {
        let mut c = alloc::vec![0.0; self.dim];
        for row in self.iter() {
            linalg::add_assign(&mut c, row);
        }
        let n = self.len().max(1) as f64;
        c.iter_mut().for_each(|x| *x /= n);
        PointN(c)
    }

    /// Largest pairwise Euclidean distance.
    pub fn diameter(&self) -> f64 {
        let rows = crate::reduce::map_rows(self.len(), |i| {
            let p = self.row(i);
            (i + 1..self.len())
                .map(|j| linalg::dist2(p, self.row(j)))
                .fold(0.0, f64::max)
        });
        crate::math::sqrt(rows.into_iter().fold(0.0, f64::max))
    }
}
