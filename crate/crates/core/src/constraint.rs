//! Constraints and the maps that restore them.
//!
//! Two families are supported: the bilinear normalization `∫ a b = n`
//! (`∫ |ψ|² = n` for complex fields, `∫ ρ² = n` for real ones), optionally
//! combined with orthogonality to a fixed orthonormal set, and integral
//! constraints `∫ f(ρ) = C` for real fields.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{embedded_weights, Field, FieldKind};
use crate::grid::Grid;
use crate::scalar::{weighted_dot, Real};

pub const GRAM_TOL: f64 = 1e-10;
pub const SATISFACTION_TOL: f64 = 1e-10;
pub const UNIT_INTEGRAL_TOL: f64 = 1e-12;

type Scalar<T> = Arc<dyn Fn(T) -> T + Send + Sync>;
type Inverse<T> = Arc<dyn Fn(T) -> Option<T> + Send + Sync>;

/// Invertible scalar function `f` with `f′`, `f″` and `f⁻¹` (`None` outside its domain).
#[derive(Clone)]
pub struct ScalarMap<T> {
    name: String,
    f: Scalar<T>,
    df: Scalar<T>,
    d2f: Scalar<T>,
    inv: Inverse<T>,
}

impl<T> fmt::Debug for ScalarMap<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarMap").field("name", &self.name).finish()
    }
}

impl<T: Real> ScalarMap<T> {
    pub fn new(name: impl Into<String>, f: Scalar<T>, df: Scalar<T>, d2f: Scalar<T>, inv: Inverse<T>) -> Self {
        Self { name: name.into(), f, df, d2f, inv }
    }

    pub fn identity() -> Self {
        Self::new(
            "identity",
            Arc::new(|r| r),
            Arc::new(|_| T::one()),
            Arc::new(|_| T::zero()),
            Arc::new(Some),
        )
    }

    /// `f(ρ) = ρ²` on `ρ ≥ 0`.
    pub fn square() -> Self {
        Self::new(
            "square",
            Arc::new(|r| r * r),
            Arc::new(|r| r * T::lit(2.0)),
            Arc::new(|_| T::lit(2.0)),
            Arc::new(|s| if s >= T::zero() { Some(s.sqrt()) } else { None }),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, r: T) -> T {
        (self.f)(r)
    }

    pub fn derivative(&self, r: T) -> T {
        (self.df)(r)
    }

    pub fn second_derivative(&self, r: T) -> T {
        (self.d2f)(r)
    }

    pub fn inverse(&self, s: T) -> Result<T> {
        match (self.inv)(s) {
            Some(r) if r.finite() => Ok(r),
            _ => Err(Error::InverseDomain(s.as_f64())),
        }
    }
}

/// Weight `u(x)` distributing the constraint excess in the integral map.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UChoice<T> {
    /// `u = f′(ρ)² / ∫ f′(ρ)²`.
    #[default]
    A15,
    /// `u = 1 / L`.
    Uniform,
    /// Any field with `∫ u = 1`.
    Custom(Vec<T>),
}

impl<T> UChoice<T> {
    pub fn label(&self) -> &'static str {
        match self {
            UChoice::A15 => "a15",
            UChoice::Uniform => "uniform",
            UChoice::Custom(_) => "custom",
        }
    }
}

#[derive(Debug, Clone)]
pub enum ConstraintSpec<T> {
    /// `∫ a b = target`, plus orthogonality to every field in `orthogonal_to`.
    Normalization { target: T, orthogonal_to: Vec<Field<T>> },
    /// `∫ f(ρ) = target`.
    IntegralOf { f: ScalarMap<T>, target: T, u: UChoice<T> },
}

impl<T: Real> ConstraintSpec<T> {
    pub fn normalization(target: T) -> Self {
        ConstraintSpec::Normalization { target, orthogonal_to: Vec::new() }
    }

    pub fn orthonormal(orthogonal_to: Vec<Field<T>>) -> Self {
        ConstraintSpec::Normalization { target: T::one(), orthogonal_to }
    }

    /// `∫ ρ = mass`.
    pub fn mass(mass: T, u: UChoice<T>) -> Self {
        ConstraintSpec::IntegralOf { f: ScalarMap::identity(), target: mass, u }
    }

    pub fn target(&self) -> T {
        match self {
            ConstraintSpec::Normalization { target, .. } | ConstraintSpec::IntegralOf { target, .. } => *target,
        }
    }

    pub fn kind_label(&self) -> &'static str {
        match self {
            ConstraintSpec::Normalization { .. } => "bilinear-normalization",
            ConstraintSpec::IntegralOf { .. } => "integral-of-f",
        }
    }

    pub fn validate(&self, grid: &Grid<T>) -> Result<()> {
        let target = self.target();
        if !target.finite() {
            return Err(Error::InvalidConstraint("non-finite target".into()));
        }
        match self {
            ConstraintSpec::Normalization { target, .. } => {
                if *target <= T::zero() {
                    return Err(Error::InvalidConstraint(format!("normalization target {target} must be positive")));
                }
            }
            ConstraintSpec::IntegralOf { u: UChoice::Custom(u), .. } => {
                if u.len() != grid.dof() {
                    return Err(Error::DimensionMismatch { expected: grid.dof(), got: u.len() });
                }
                let total = grid.integrate(u);
                if !((total - T::one()).abs().as_f64() <= UNIT_INTEGRAL_TOL) {
                    return Err(Error::InvalidConstraint(format!("custom u integrates to {total}, not 1")));
                }
            }
            ConstraintSpec::IntegralOf { .. } => {}
        }
        Ok(())
    }
}

/// `√(n / ∫ab)`-rescaling of `field`: `ψ √(n/∫|ψ|²)` for complex fields, the
/// two-variable form for pairs, `ρ √(n/∫ρ²)` for real fields.
pub fn normalization_map<T: Real>(field: &Field<T>, n: T, grid: &Grid<T>) -> Result<Field<T>> {
    field.check_len(grid.dof())?;
    if !(n > T::zero()) || !n.finite() {
        return Err(Error::InvalidConstraint(format!("normalization target {n} must be positive")));
    }
    let p = bilinear_value(field, grid.dof_weights());
    if !(p > T::zero()) || !p.finite() {
        return Err(Error::ZeroNorm(format!("bilinear value {p}")));
    }
    Ok(field.scale((n / p).sqrt()))
}

/// Projects out the span of an orthonormal `basis`, then normalizes to 1.
pub fn ortho_normalization_map<T: Real>(field: &Field<T>, basis: &[Field<T>], grid: &Grid<T>) -> Result<Field<T>> {
    let ortho = Orthogonality::new(field.kind(), basis, grid)?;
    let x = ortho.project(&field.to_embedded());
    normalization_map(&Field::from_embedded(field.kind(), &x), T::one(), grid)
}

/// `f⁻¹(f(ρ) − u (∫f(ρ) − C))`, with `u` evaluated at the input.
pub fn general_constraint_map<T: Real>(field: &Field<T>, spec: &ConstraintSpec<T>, grid: &Grid<T>) -> Result<Field<T>> {
    let ConstraintSpec::IntegralOf { f, target, u } = spec else {
        return Err(Error::InvalidConstraint("integral map needs an integral-of-f constraint".into()));
    };
    spec.validate(grid)?;
    field.check_kind(FieldKind::Real)?;
    field.check_len(grid.dof())?;
    let rho = field.as_real().expect("real field");
    let weight = u_weight(f, u, rho, grid)?;
    integral_map(f, *target, &weight, rho, grid).map(Field::Real)
}

/// `∫ a b` (`∫|ψ|²`, `∫ρ²`).
pub(crate) fn bilinear_value<T: Real>(field: &Field<T>, weights: &[T]) -> T {
    match field {
        Field::Pair(a, b) => weighted_dot(a, b, weights),
        _ => field.dot(field, weights),
    }
}

pub(crate) fn u_weight<T: Real>(f: &ScalarMap<T>, choice: &UChoice<T>, rho: &[T], grid: &Grid<T>) -> Result<Vec<T>> {
    match choice {
        UChoice::A15 => {
            let sq: Vec<T> = rho.iter().map(|&r| f.derivative(r).powi(2)).collect();
            let total = grid.integrate(&sq);
            if !(total > T::zero()) {
                return Err(Error::ZeroNorm("constraint derivative vanishes identically".into()));
            }
            Ok(sq.into_iter().map(|s| s / total).collect())
        }
        UChoice::Uniform => Ok(vec![T::one() / grid.dof_weights().iter().fold(T::zero(), |a, &w| a + w); rho.len()]),
        UChoice::Custom(u) => Ok(u.clone()),
    }
}

pub(crate) fn integral_map<T: Real>(f: &ScalarMap<T>, target: T, u: &[T], rho: &[T], grid: &Grid<T>) -> Result<Vec<T>> {
    let fr: Vec<T> = rho.iter().map(|&r| f.value(r)).collect();
    let excess = grid.integrate(&fr) - target;
    fr.iter().zip(u).map(|(&s, &ui)| f.inverse(s - ui * excess)).collect()
}

/// Orthogonal projector onto the complement of `span{b}` in the real embedding.
/// For complex fields the span is complex: both `φ_j` and `iφ_j` are removed.
#[derive(Debug, Clone)]
pub(crate) struct Orthogonality<T: Real> {
    directions: Vec<DVector<T>>,
    nu: DVector<T>,
}

impl<T: Real> Orthogonality<T> {
    pub(crate) fn new(kind: FieldKind, basis: &[Field<T>], grid: &Grid<T>) -> Result<Self> {
        let w = grid.dof_weights();
        for b in basis {
            b.check_kind(kind)?;
            b.check_len(grid.dof())?;
        }
        if kind == FieldKind::Pair && !basis.is_empty() {
            return Err(Error::Unsupported("orthogonality constraints on two-variable fields".into()));
        }
        let mut worst = T::zero();
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let g = a.complex_dot(b, w);
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((g.re - target).abs()).max(g.im.abs());
            }
        }
        if worst.as_f64() > GRAM_TOL {
            return Err(Error::BasisNotOrthonormal(worst.as_f64()));
        }
        let mut directions = Vec::new();
        for b in basis {
            directions.push(b.to_embedded());
            if let Some(ib) = b.times_i() {
                directions.push(ib.to_embedded());
            }
        }
        Ok(Self { directions, nu: embedded_weights(kind, w) })
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub(crate) fn directions(&self) -> &[DVector<T>] {
        &self.directions
    }

    fn dot(&self, a: &DVector<T>, b: &DVector<T>) -> T {
        weighted_dot(a.as_slice(), b.as_slice(), self.nu.as_slice())
    }

    pub(crate) fn project(&self, x: &DVector<T>) -> DVector<T> {
        let mut y = x.clone();
        for b in &self.directions {
            let c = self.dot(b, x);
            y.axpy(-c, b, T::one());
        }
        y
    }

    pub(crate) fn max_overlap(&self, x: &DVector<T>) -> T {
        self.directions.iter().fold(T::zero(), |m, b| m.max(self.dot(b, x).abs()))
    }
}
