//! Curvature invariants, growth vectors and geodesic dimension of affine
//! optimal control problems and sub-Riemannian structures with polynomial
//! vector fields.
//!
//! The pipeline integrates the normal Hamiltonian flow together with its
//! linearization, builds the Jacobi curve `S(t)` in adapted Darboux
//! coordinates and reads the invariants `I_λ`, `R_λ` and `Ric` off the Laurent
//! expansion of `d/dt [S(t)⁻¹]₁₁`. Closed-form oracles (Heisenberg group, 3D
//! contact structures, linear-quadratic systems) validate it.

pub mod checks;
pub mod contact3d;
pub mod error;
pub mod field;
pub mod flag;
pub mod hamflow;
pub mod heisenberg;
pub mod homothety;
pub mod jacobi;
pub mod linalg;
pub mod lq;
pub mod model;
pub mod poly;
pub mod report;
pub mod series;
pub mod taylor;

pub use error::{Error, Result};
pub use field::{lie_bracket, parse_polynomial_field, PolyVectorField};
pub use hamflow::{ExtremalState, Hamiltonian, Trajectory, VariationalFrame};
pub use model::{builtin_model, ControlModel, FrameAdaptation};
pub use poly::{parse_polynomial, Coeff, Polynomial, Rational};
