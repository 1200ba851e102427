//! Second-order analysis of functionals restricted to constraint surfaces.
//!
//! A constrained derivative is the ordinary derivative of the functional
//! composed with a map that pulls any field back onto the constraint
//! (normalization, orthogonality, or a conserved integral `∫f(ρ) = C`). The
//! crate evaluates those derivatives analytically and by finite differences,
//! assembles the constrained Hessian on a real embedding of the field, and
//! reads off Morse indices, zero modes and a stationary-point verdict.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the scalar for the common case.
//!
//! ```
//! use constraint_morse::{bench::{BenchCase, CaseContext}, ConstraintSpec, Verdict};
//!
//! let ctx = CaseContext::new(&BenchCase::diag123()).unwrap();
//! let a = ctx.analyze(1, &ConstraintSpec::normalization(1.0)).unwrap();
//! assert_eq!(a.classification.index_complex, Some(1));
//! assert_eq!(a.classification.verdict, Verdict::Saddle);
//! ```

// `!(x <= tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod constrained;
pub mod constraint;
pub mod error;
pub mod field;
pub mod functional;
pub mod grid;
pub mod numdiff;
pub mod operator;
pub mod sampling;
pub mod scalar;
pub mod spectral;

pub use constrained::{
    constrained_gradient, constrained_hessian, cross_check_gradient, cross_check_hessian, identity_residuals, ConstrainedGradient,
    ConstrainedHessianOperator, GradientMethod, HessianMethod, IdentityResiduals,
};
pub use constraint::{general_constraint_map, normalization_map, ortho_normalization_map, ConstraintSpec, ScalarMap, UChoice};
pub use error::{Error, Result};
pub use field::{Field, FieldKind};
pub use functional::{
    local_density_functional, quadratic_form_functional, ClosureFunctional, CoupledPair, DerivativeMethod, Functional,
    InteractingQuadratic, LocalDensity, QuadraticForm,
};
pub use grid::{build_grid, Boundary, Grid};
pub use operator::{build_operator, Eigenbasis, LinearOperator, ModelParams};
pub use scalar::Real;
pub use spectral::{
    analyze, eigensolve, morse_classify, projected_lagrange_spectrum, second_order_probe, tangency_residuals, Analysis,
    ClassificationReport, ProbeRecord, SpectrumReport, Verdict,
};

pub type Field64 = Field<f64>;
pub type Grid64 = Grid<f64>;
pub type Operator64 = LinearOperator<f64>;
pub type Constraint64 = ConstraintSpec<f64>;
pub type Spectrum64 = SpectrumReport<f64>;

pub type Field32 = Field<f32>;
pub type Grid32 = Grid<f32>;
pub type Operator32 = LinearOperator<f32>;
pub type Constraint32 = ConstraintSpec<f32>;
pub type Spectrum32 = SpectrumReport<f32>;
