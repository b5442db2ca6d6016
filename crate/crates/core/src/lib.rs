//! Exact construction of the generalized mKdV hierarchy attached to `A_r^(1)`.
//!
//! * [`diffpoly`]: differential polynomials over ℚ in the jet variables `u_i^(n)`.
//! * [`loopalg`]: the loop algebra `sl_{r+1}[λ, λ⁻¹]` with its principal grading.
//! * [`hierarchy`]: the recursive construction of the flows and the dressing transform.
//! * [`conserved`]: conserved densities, screening operators, the Miura map.
//! * [`numeval`]: spectral evaluation and time stepping of the flows on a periodic grid.

pub mod checks;
pub mod conserved;
pub mod diffpoly;
pub mod linalg;
pub mod hierarchy;
pub mod loopalg;
pub mod numeval;

pub use diffpoly::{DiffPoly, DiffPolyError, JetVar, Monomial, Rational};
pub use hierarchy::{FlowSpec, Hierarchy, HierarchyError};
pub use loopalg::{AlgebraCtx, CartanElement, LoopElement, LoopError};
