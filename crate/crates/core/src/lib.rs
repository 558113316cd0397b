//! Conformal curvature invariants of closed-form Riemannian metrics on charts
//! of ℝ³ and ℝ⁴, and decision procedures for limiting Carleman weights (LCWs).
//!
//! The pipeline runs bottom-up:
//!
//! * [`jet`]: truncated Taylor arithmetic, the differentiation carrier.
//! * [`dsl`]: metric files and vector-field expressions.
//! * [`curvature`]: Christoffel symbols through Weyl and Cotton–York tensors.
//! * [`bivector`]: orthonormal frames, the 6×6 Weyl operator, Plücker tests.
//! * [`classify`]: Cotton–York trichotomy and Weyl types A–D with eigenflags.
//! * [`distribution`]: second fundamental forms, umbilicity, the 1-form Φ,
//!   conformal-factor and Killing checks.
//! * [`decide`]: the 3D and 4D procedures, direction sweep, product reduction.

pub mod bivector;
pub mod classify;
pub mod curvature;
pub mod decide;
pub mod distribution;
pub mod dsl;
pub mod jet;
pub mod linalg;
pub mod parallel;
pub mod region;
pub mod tolerance;

pub use parallel::Exec;
pub use tolerance::{Margin, Tolerances};
