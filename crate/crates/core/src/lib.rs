//! Moebius-invariant energies for embedded curves and 2-spheres.
//!
//! The crate evaluates the regularized self-energy `E0` of closed curves and
//! of conformally parametrized spheres in `R^n`, the curvature-regularized
//! energy `E_lambda`, the pair energies `E_u`, and the discrete differential
//! geometry they depend on (cotangent mean curvature, angle-defect Gaussian
//! curvature, Gauss map). It also carries the Moebius group machinery used for
//! invariance checks, a finite-difference minimizer, test-shape generators,
//! and the measurements behind the compactness argument (ball covers and
//! sheets, disk-pair divergence, annulus moduli, Kuiper self-distance).
//!
//! Everything here is pure computation over owned values. The crate is
//! `no_std` (with `alloc`) unless the `std` feature is enabled; the default
//! `parallel` feature spreads the O(N^2) pair loops over a rayon pool while
//! keeping every reduction in a fixed order, so results are bit-identical for
//! any thread count.
//!
//! # The conformal factor
//!
//! The surface energy weights image distances with the conformal factor
//! `d_f` of the parametrization. Per vertex it is fitted from the ratios of
//! image to domain edge lengths in the vertex star (a constant plus a linear
//! term, least squares), which is exact for similarities and first-order
//! accurate for any conformal map. The plain area ratio
//! `sqrt(image dual area / domain dual area)` is available as
//! [`surface_energy::FactorModel::AreaRatio`]. Meshes whose parametrization is
//! far from conformal are rejected by [`surface_energy::surface_e0`] unless
//! they are first passed through [`conformal::conformalize`].
#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod compactness;
pub mod conformal;
pub mod curvature;
pub mod curve;
pub mod curve_energy;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod math;
pub mod mesh;
pub mod moebius;
pub mod optimize;
pub mod points;
pub mod reduce;
pub mod shapes;
pub mod sparse;
pub mod surface_energy;

pub use curve::ClosedCurve;
pub use error::{Error, Result};
pub use mesh::SphereMesh;
pub use moebius::{MoebiusMap, Primitive};
pub use points::{PointN, Points};
