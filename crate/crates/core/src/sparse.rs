//! Compressed sparse rows and a conjugate gradient solver.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg;
use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    n: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Accumulates `(row, col, value)` triplets, summing duplicates.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        TripletBuilder {
            n,
            entries: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        *self.entries.entry((i, j)).or_insert(0.0) += v;
    }

    pub fn build(self) -> Csr {
        let mut offsets = vec![0usize; self.n + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals = Vec::with_capacity(self.entries.len());
        for ((i, j), v) in self.entries {
            offsets[i + 1] += 1;
            cols.push(j);
            vals.push(v);
        }
        for i in 0..self.n {
            offsets[i + 1] += offsets[i];
        }
        Csr {
            n: self.n,
            offsets,
            cols,
            vals,
        }
    }
}

impl Csr {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).find(|&(j, _)| j == i).map_or(0.0, |(_, v)| v))
            .collect()
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// `a * self + b * other` for matrices of equal size.
    pub fn combine(&self, a: f64, other: &Csr, b: f64) -> Csr {
        let mut t = TripletBuilder::new(self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                t.add(i, j, a * v);
            }
            for (j, v) in other.row(i) {
                t.add(i, j, b * v);
            }
        }
        t.build()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Jacobi-preconditioned conjugate gradient for symmetric positive
/// (semi)definite systems. `fixed` rows keep their initial value.
pub fn conjugate_gradient(
    a: &Csr,
    b: &[f64],
    x: &mut [f64],
    fixed: &[bool],
    tol: f64,
    max_iter: usize,
) -> CgOutcome {
    let n = a.dim();
    let free = |i: usize| fixed.get(i).is_none_or(|f| !f);
    let diag = a.diagonal();
    let ax = a.mul(x);
    let mut r: Vec<f64> = (0..n)
        .map(|i| if free(i) { b[i] - ax[i] } else { 0.0 })
        .collect();
    let precond = |r: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                if free(i) && diag[i] != 0.0 {
                    r[i] / diag[i]
                } else {
                    0.0
                }
            })
            .collect()
    };
    let bfree = linalg::norm(
        &(0..n)
            .map(|i| if free(i) { b[i] } else { 0.0 })
            .collect::<Vec<_>>(),
    );

    let bnorm = if bfree > 0.0 { bfree } else { linalg::norm(&r) }.max(1e-300);
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = linalg::dot(&r, &z);
    let mut residual = linalg::norm(&r) / bnorm;
    for it in 0..max_iter {
        if residual <= tol {
            return CgOutcome {
                iterations: it,
                residual,
                converged: true,
            };
        }
        let mut ap = a.mul(&p);
        for (i, v) in ap.iter_mut().enumerate() {
            if !free(i) {
                *v = 0.0;
            }
        }
        let pap = linalg::dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        linalg::axpy(x, alpha, &p);
        linalg::axpy(&mut r, -alpha, &ap);
        residual = linalg::norm(&r) / bnorm;
        z = precond(&r);
        let rz_new = linalg::dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    CgOutcome {
        iterations: max_iter,
        residual,
        converged: residual <= tol || math::sqrt(rz.abs()) == 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_laplacian(n: usize) -> Csr {
        let mut t = TripletBuilder::new(n);
        for i in 0..n - 1 {
            t.add(i, i, 1.0);
            t.add(i + 1, i + 1, 1.0);
            t.add(i, i + 1, -1.0);
            t.add(i + 1, i, -1.0);
        }
        t.build()
    }

    #[test]
    fn dirichlet_path_is_linear() {
        let n = 11;
        let a = path_laplacian(n);
        let mut x = vec![0.0; n];
        x[n - 1] = 1.0;
        let mut fixed = vec![false; n];
        fixed[0] = true;
        fixed[n - 1] = true;
        let out = conjugate_gradient(&a, &vec![0.0; n], &mut x, &fixed, 1e-12, 100);
        assert!(out.converged);
        for (i, v) in x.iter().enumerate() {
            assert!((v - i as f64 / 10.0).abs() < 1e-10);
        }
    }

    #[test]
    fn spd_solve_matches_dense() {
        let a = path_laplacian(6).combine(
            1.0,
            &{
                let mut t = TripletBuilder::new(6);
                (0..6).for_each(|i| t.add(i, i, 0.5 + i as f64));
                t.build()
            },
            1.0,
        );
        let b = [1.0, -2.0, 0.5, 3.0, 0.0, 1.0];
        let mut x = vec![0.0; 6];
        assert!(conjugate_gradient(&a, &b, &mut x, &[], 1e-13, 100).converged);
        let dense: Vec<f64> = (0..6)
            .flat_map(|i| (0..6).map(move |j| (i, j)))
            .map(|(i, j)| a.row(i).find(|e| e.0 == j).map_or(0.0, |e| e.1))
            .collect();
        let reference = linalg::solve_dense(&dense, &b).unwrap();
        assert!(linalg::dist(&x, &reference) < 1e-10);
    }
}
