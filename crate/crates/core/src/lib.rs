//! Constructive L^p De Rham theory on singular spaces.
//!
//! The crate is organised bottom-up:
//!
//! * [`forms`]: exact polynomial exterior calculus (wedge, `d`, pullback,
//!   `dt`-splitting, the radial homotopy operator) and pointwise-numeric forms
//!   with comass norms and line integrals.
//! * [`simplicial`]: oriented simplicial complexes, star covers, nerves and
//!   rational homology.
//! * [`cech`]: the Cech-De Rham double complex over a cover, the zig-zag
//!   descent of a closed form to Cech constants, periods over nerve cycles and
//!   global primitives.
//! * [`cone`]: L^p norms of radially constant forms on warped cones, the
//!   divergence scan, and the operator-norm experiment for the truncated
//!   homotopy operator.
//! * [`lifts`]: cell towers, standard lifts of deformation retractions,
//!   Jacobians and fitted growth exponents.
//! * [`flattening`]: regular families of hypersurfaces, the bi-Lipschitz
//!   flattening map and the cone-containment lemmas.
//!
//! Inner Monte Carlo and sweep loops go through [`exec::Exec`], which uses
//! rayon when the `parallel` feature is enabled and falls back to a plain
//! sequential loop otherwise.

pub mod catalog;
pub mod cech;
pub mod cone;
pub mod exec;
pub mod expr;
pub mod flattening;
pub mod forms;
pub mod json;
pub mod lifts;
pub mod linalg;
pub mod quadrature;
pub mod random;
pub mod simplicial;

pub use num_bigint::BigInt;
pub use num_rational::BigRational;
