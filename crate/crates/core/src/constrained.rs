//! Constrained first and second derivatives.
//!
//! All quantities are computed on the real embedding of the field (see
//! [`crate::field`]). The constrained derivatives are those of the composed
//! functional `A ∘ m`, where `m` is the constraint-restoring map, evaluated at
//! a constraint-satisfying base point. The numeric path differentiates
//! `A ∘ m` directly and is the reference for the analytic formulas.

use nalgebra::DVector;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::constraint::{integral_map, u_weight, ConstraintSpec, Orthogonality, ScalarMap, SATISFACTION_TOL};
use crate::error::{Error, Result};
use crate::field::{embedded_weights, Field, FieldKind};
use crate::functional::{gradient, hessian_apply, validate_field, Functional};
use crate::numdiff;
use crate::scalar::{weighted_dot, Real};

pub const GRADIENT_AGREEMENT_TOL: f64 = 1e-6;
pub const HESSIAN_AGREEMENT_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMethod {
    Analytic,
    NumericComposed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HessianMethod {
    /// Closed-form second derivative of the composed functional.
    Analytic,
    /// Reduced form for a quadratic functional at one of its eigenstates.
    EigenstateReduced,
    /// Mixed central differences of the composed functional.
    NumericComposed,
}

#[derive(Debug, Clone)]
pub struct ConstrainedGradient<T> {
    pub gradient: Field<T>,
    /// Coefficient of `δC/δρ` removed from the unconstrained gradient.
    pub multiplier: T,
    pub method: GradientMethod,
    /// The input violated the constraint and was mapped onto it first.
    pub projected: bool,
}

/// Constraint data frozen at a base point.
#[derive(Debug, Clone)]
pub(crate) enum Geometry<T: Real> {
    Bilinear {
        target: T,
        /// `δC/δx = scale · swap(x)`: 2 for real fields, 1 otherwise.
        scale: T,
        ortho: Orthogonality<T>,
    },
    Integral {
        f: ScalarMap<T>,
        target: T,
        u: Vec<T>,
        /// `u / f′(ρ)`, by cancellation where `f′` vanishes under the a15 weight.
        q: Vec<T>,
        /// `u / f′(ρ)²`.
        r: Vec<T>,
    },
}

/// A functional, a constraint and a base point, shared by the derivative routines.
pub(crate) struct Setting<'a, T: Real> {
    pub functional: &'a dyn Functional<T>,
    pub kind: FieldKind,
    pub base: Field<T>,
    pub x: DVector<T>,
    pub nu: DVector<T>,
    pub tau: T,
    pub geometry: Geometry<T>,
    pub projected: bool,
}

impl<'a, T: Real> Setting<'a, T> {
    pub(crate) fn new(functional: &'a dyn Functional<T>, field: &Field<T>, spec: &ConstraintSpec<T>) -> Result<Self> {
        validate_field(functional, field)?;
        let grid = functional.grid();
        spec.validate(grid)?;
        let kind = functional.kind();
        let nu = embedded_weights(kind, grid.dof_weights());
        let tau = kind.tau::<T>();
        let mut setting = match spec {
            ConstraintSpec::Normalization { target, orthogonal_to } => {
                let scale = if kind == FieldKind::Real { T::lit(2.0) } else { T::one() };
                let ortho = Orthogonality::new(kind, orthogonal_to, grid)?;
                Setting {
                    functional,
                    kind,
                    base: field.clone(),
                    x: field.to_embedded(),
                    nu,
                    tau,
                    geometry: Geometry::Bilinear { target: *target, scale, ortho },
                    projected: false,
                }
            }
            ConstraintSpec::IntegralOf { f, target, .. } => {
                if kind != FieldKind::Real {
                    return Err(Error::Unsupported("integral constraints need a real field".into()));
                }
                Setting {
                    functional,
                    kind,
                    base: field.clone(),
                    x: field.to_embedded(),
                    nu,
                    tau,
                    geometry: Geometry::Integral { f: f.clone(), target: *target, u: Vec::new(), q: Vec::new(), r: Vec::new() },
                    projected: false,
                }
            }
        };
        let violation = setting.violation(&setting.x);
        if !(violation.as_f64() <= SATISFACTION_TOL) {
            log::warn!("base point violates the constraint by {violation:e}; projecting onto it");
            let mapped = setting.map_unfrozen(spec)?;
            setting.x = mapped.to_embedded();
            setting.base = mapped;
            setting.projected = true;
        }
        if let (Geometry::Integral { f, u, q, r, .. }, ConstraintSpec::IntegralOf { u: choice, .. }) = (&mut setting.geometry, spec) {
            let rho = setting.base.as_real().expect("real field");
            *u = u_weight(f, choice, rho, grid)?;
            let a15 = matches!(choice, crate::constraint::UChoice::A15);
            let sq: Vec<T> = rho.iter().map(|&v| f.derivative(v).powi(2)).collect();
            let total = grid.integrate(&sq);
            q.clear();
            r.clear();
            for (k, &v) in rho.iter().enumerate() {
                let d = f.derivative(v);
                if a15 {
                    q.push(d / total);
                    r.push(T::one() / total);
                } else if d == T::zero() {
                    if u[k] != T::zero() {
                        return Err(Error::InvalidConstraint(format!("δC/δρ vanishes at sample {k} where u ≠ 0")));
                    }
                    q.push(T::zero());
                    r.push(T::zero());
                } else {
                    q.push(u[k] / d);
                    r.push(u[k] / (d * d));
                }
            }
        }
        Ok(setting)
    }

    fn map_unfrozen(&self, spec: &ConstraintSpec<T>) -> Result<Field<T>> {
        let grid = self.functional.grid();
        match spec {
            ConstraintSpec::Normalization { target, .. } => {
                let Geometry::Bilinear { ortho, .. } = &self.geometry else { unreachable!() };
                let y = Field::from_embedded(self.kind, &ortho.project(&self.x));
                crate::constraint::normalization_map(&y, *target, grid)
            }
            ConstraintSpec::IntegralOf { .. } => crate::constraint::general_constraint_map(&self.base, spec, grid),
        }
    }

    pub(crate) fn dot(&self, a: &DVector<T>, b: &DVector<T>) -> T {
        weighted_dot(a.as_slice(), b.as_slice(), self.nu.as_slice())
    }

    /// `π(a, b) = τ⟨a, b⟩_ν`.
    pub(crate) fn pair(&self, a: &DVector<T>, b: &DVector<T>) -> T {
        self.tau * self.dot(a, b)
    }

    pub(crate) fn omega(&self) -> DVector<T> {
        &self.nu * self.tau
    }

    fn swap(&self, y: &DVector<T>) -> DVector<T> {
        match self.kind {
            FieldKind::Pair => {
                let n = y.len() / 2;
                DVector::from_fn(y.len(), |k, _| if k < n { y[k + n] } else { y[k - n] })
            }
            _ => y.clone(),
        }
    }

    /// Constraint normal `δC/δx` at `y` (bilinear) or at the base (integral).
    pub(crate) fn normal_at(&self, y: &DVector<T>) -> DVector<T> {
        match &self.geometry {
            Geometry::Bilinear { scale, .. } => self.swap(y) * *scale,
            Geometry::Integral { f, .. } => y.map(|v| f.derivative(v)),
        }
    }

    /// Hessian of the constraint functional applied to `d`.
    pub(crate) fn constraint_hessian(&self, d: &DVector<T>) -> DVector<T> {
        match &self.geometry {
            Geometry::Bilinear { scale, .. } => self.swap(d) * *scale,
            Geometry::Integral { f, .. } => DVector::from_fn(d.len(), |k, _| f.second_derivative(self.x[k]) * d[k]),
        }
    }

    fn bilinear(&self, y: &DVector<T>) -> T {
        self.pair(y, &self.normal_at(y)) * T::lit(0.5)
    }

    pub(crate) fn violation(&self, y: &DVector<T>) -> T {
        match &self.geometry {
            Geometry::Bilinear { target, ortho, .. } => {
                ((self.bilinear(y) - *target).abs() / T::one().max(*target)).max(ortho.max_overlap(y))
            }
            Geometry::Integral { f, target, .. } => {
                let vals: Vec<T> = y.iter().map(|&v| f.value(v)).collect();
                (self.functional.grid().integrate(&vals) - *target).abs() / T::one().max(target.abs())
            }
        }
    }

    /// The constraint map with any base-dependent weight frozen at the base.
    pub(crate) fn map(&self, y: &DVector<T>) -> Result<DVector<T>> {
        match &self.geometry {
            Geometry::Bilinear { target, ortho, .. } => {
                let z = ortho.project(y);
                let p = self.bilinear(&z);
                if !(p > T::zero()) {
                    return Err(Error::ZeroNorm(format!("bilinear value {p}")));
                }
                Ok(z * (*target / p).sqrt())
            }
            Geometry::Integral { f, target, u, .. } => {
                let rho: Vec<T> = y.iter().copied().collect();
                Ok(DVector::from_vec(integral_map(f, *target, u, &rho, self.functional.grid())?))
            }
        }
    }

    /// Jacobian of the map at the base applied to `d`.
    pub(crate) fn map_jacobian(&self, d: &DVector<T>) -> DVector<T> {
        match &self.geometry {
            Geometry::Bilinear { target, ortho, .. } => {
                let d1 = ortho.project(d);
                let c = -self.pair(&self.normal_at(&self.x), &d1) / (T::lit(2.0) * *target);
                d1 + &self.x * c
            }
            Geometry::Integral { f, q, .. } => {
                let s = self.dot(&self.x.map(|v| f.derivative(v)), d);
                d - DVector::from_column_slice(q) * s
            }
        }
    }

    /// Directions along which the map is constant: the fiber through the base.
    pub(crate) fn fiber(&self) -> DVector<T> {
        match &self.geometry {
            Geometry::Bilinear { .. } => self.x.clone(),
            Geometry::Integral { q, .. } => DVector::from_column_slice(q),
        }
    }

    pub(crate) fn ortho_directions(&self) -> Vec<DVector<T>> {
        match &self.geometry {
            Geometry::Bilinear { ortho, .. } => ortho.directions().to_vec(),
            Geometry::Integral { .. } => Vec::new(),
        }
    }

    /// All first-order constraint normals (in the gradient convention).
    pub(crate) fn normals(&self) -> Vec<DVector<T>> {
        let mut out = vec![self.normal_at(&self.x)];
        out.extend(self.ortho_directions());
        out
    }

    fn project_ortho(&self, y: DVector<T>) -> DVector<T> {
        match &self.geometry {
            Geometry::Bilinear { ortho, .. } if !ortho.is_empty() => ortho.project(&y),
            _ => y,
        }
    }

    fn field(&self, y: &DVector<T>) -> Field<T> {
        Field::from_embedded(self.kind, y)
    }

    pub(crate) fn unconstrained_gradient(&self) -> Result<DVector<T>> {
        Ok(gradient(self.functional, &self.base)?.gradient.to_embedded())
    }

    fn unconstrained_hessian(&self, d: &DVector<T>) -> Result<DVector<T>> {
        Ok(hessian_apply(self.functional, &self.base, &self.field(d))?.to_embedded())
    }

    /// Analytic constrained gradient and multiplier.
    pub(crate) fn analytic_gradient(&self, g: &DVector<T>) -> (DVector<T>, T) {
        match &self.geometry {
            Geometry::Bilinear { target, .. } => {
                let mu = self.pair(&self.x, g) / (T::lit(2.0) * *target);
                let gc = g - self.normal_at(&self.x) * mu;
                (self.project_ortho(gc), mu)
            }
            Geometry::Integral { f, q, .. } => {
                let mu = self.dot(&DVector::from_column_slice(q), g);
                let fp = self.x.map(|v| f.derivative(v));
                (g - fp * mu, mu)
            }
        }
    }

    pub(crate) fn composed_value(&self, y: &DVector<T>) -> Result<T> {
        Ok(self.functional.value(&self.field(&self.map(y)?)))
    }

    pub(crate) fn numeric_gradient(&self) -> Result<DVector<T>> {
        let eps = numdiff::scaled_step(numdiff::gradient_step(), &self.x, &self.nu);
        numdiff::central_gradient(|y| self.composed_value(y), &self.x, &self.omega(), eps)
    }

    pub(crate) fn numeric_hessian(&self, d: &DVector<T>) -> Result<DVector<T>> {
        let eps = numdiff::scaled_step(numdiff::hessian_step(), &self.x, &self.nu);
        numdiff::mixed_hessian_action(|y| self.composed_value(y), &self.x, &self.omega(), d, eps)
    }

    /// Second derivative of the composed functional, in closed form.
    pub(crate) fn analytic_hessian(&self, g: &DVector<T>, d: &DVector<T>) -> Result<DVector<T>> {
        match &self.geometry {
            Geometry::Bilinear { target, .. } => {
                let n = *target;
                let two = T::lit(2.0);
                let d = self.project_ortho(d.clone());
                let normal = self.normal_at(&self.x);
                let dp = self.pair(&d, &normal);
                let s = self.pair(&self.x, g);
                let c = -dp / (two * n);
                let mapped = &d + &self.x * c;
                let hm = self.unconstrained_hessian(&mapped)?;
                let ds = self.pair(&d, g) + self.pair(&self.x, &hm);
                let out = g * c + &hm - self.constraint_hessian(&d) * (s / (two * n)) - &normal * (ds / (two * n))
                    + &normal * (T::lit(0.75) * s * dp / (n * n));
                Ok(self.project_ortho(out))
            }
            Geometry::Integral { f, q, r, .. } => {
                let fp = self.x.map(|v| f.derivative(v));
                let fpp = self.x.map(|v| f.second_derivative(v));
                let q = DVector::from_column_slice(q);
                let r = DVector::from_column_slice(r);
                let mu = self.dot(&q, g);
                let s = self.dot(&fp, d);
                let e = d - &q * s;
                let ke = self.unconstrained_hessian(&e)?;
                let v = g.component_mul(&fpp).component_mul(&r);
                let out = &ke - &fp * self.dot(&q, &ke) + &v * s + &fp * self.dot(&v, &e) - fpp.component_mul(d) * mu;
                Ok(out)
            }
        }
    }
}

fn relative(diff: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

pub fn constrained_gradient<T: Real>(
    functional: &dyn Functional<T>,
    field: &Field<T>,
    spec: &ConstraintSpec<T>,
    method: GradientMethod,
) -> Result<ConstrainedGradient<T>> {
    let setting = Setting::new(functional, field, spec)?;
    let g = setting.unconstrained_gradient()?;
    let (analytic, mu) = setting.analytic_gradient(&g);
    let gradient = match method {
        GradientMethod::Analytic => analytic,
        GradientMethod::NumericComposed => setting.numeric_gradient()?,
    };
    Ok(ConstrainedGradient {
        gradient: Field::from_embedded(setting.kind, &gradient),
        multiplier: mu,
        method,
        projected: setting.projected,
    })
}

/// Relative deviation between the analytic and numeric constrained gradients.
pub fn cross_check_gradient<T: Real>(functional: &dyn Functional<T>, field: &Field<T>, spec: &ConstraintSpec<T>) -> Result<f64> {
    let setting = Setting::new(functional, field, spec)?;
    let g = setting.unconstrained_gradient()?;
    let (analytic, _) = setting.analytic_gradient(&g);
    let numeric = setting.numeric_gradient()?;
    let scale = numeric.amax().max(g.amax()).as_f64();
    let dev = relative((analytic - numeric).amax().as_f64(), scale);
    if dev > GRADIENT_AGREEMENT_TOL {
        return Err(Error::MethodDisagreement(dev));
    }
    Ok(dev)
}

/// Linear operator `Δ ↦ K Δ` for the second derivative of the composed functional.
pub struct ConstrainedHessianOperator<'a, T: Real> {
    setting: Setting<'a, T>,
    method: HessianMethod,
    gradient: DVector<T>,
    multiplier: T,
    eigen_energy: Option<T>,
}

impl<'a, T: Real> ConstrainedHessianOperator<'a, T> {
    pub fn method(&self) -> HessianMethod {
        self.method
    }

    pub fn kind(&self) -> FieldKind {
        self.setting.kind
    }

    pub fn functional(&self) -> &'a dyn Functional<T> {
        self.setting.functional
    }

    pub fn base(&self) -> &Field<T> {
        &self.setting.base
    }

    /// Number of real coordinates.
    pub fn dim(&self) -> usize {
        self.setting.x.len()
    }

    /// Geometric weights `ν` of the real embedding.
    pub fn weights(&self) -> &DVector<T> {
        &self.setting.nu
    }

    pub fn multiplier(&self) -> T {
        self.multiplier
    }

    /// Constrained gradient at the base (analytic formula).
    pub fn constrained_gradient(&self) -> Field<T> {
        let (gc, _) = self.setting.analytic_gradient(&self.gradient);
        Field::from_embedded(self.setting.kind, &gc)
    }

    pub fn apply(&self, direction: &Field<T>) -> Result<Field<T>> {
        direction.check_kind(self.setting.kind)?;
        direction.check_len(self.setting.base.len())?;
        let out = self.apply_embedded(&direction.to_embedded())?;
        Ok(Field::from_embedded(self.setting.kind, &out))
    }

    pub fn apply_embedded(&self, d: &DVector<T>) -> Result<DVector<T>> {
        if d.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: d.len() });
        }
        let out = match self.method {
            HessianMethod::Analytic => self.setting.analytic_hessian(&self.gradient, d)?,
            HessianMethod::NumericComposed => self.setting.numeric_hessian(d)?,
            HessianMethod::EigenstateReduced => self.eigenstate_action(d)?,
        };
        if out.iter().any(|v| !v.finite()) {
            return Err(Error::NonFinite("constrained Hessian action".into()));
        }
        Ok(out)
    }

    /// `(Â − A_k)Δψ + ½ψ(A_k⟨ψ,Δψ⟩ − ⟨ψ,ÂΔψ⟩)/n`; the `(ψ*, ψ*)` block vanishes,
    /// so the action is complex-linear.
    fn eigenstate_action(&self, d: &DVector<T>) -> Result<DVector<T>> {
        let energy = self.eigen_energy.expect("eigenstate energy");
        let Geometry::Bilinear { target, .. } = &self.setting.geometry else { unreachable!() };
        let form = self.setting.functional.as_quadratic_form().expect("quadratic form");
        let w = form.operator().grid().dof_weights();
        let d = self.setting.project_ortho(d.clone());
        let delta = Field::from_embedded(FieldKind::Complex, &d);
        let hd = hessian_apply(self.setting.functional, &self.setting.base, &delta)?;
        let psi = &self.setting.base;
        let bracket = psi.complex_dot(&delta, w) * energy - psi.complex_dot(&hd, w);
        let coeff = bracket * (T::lit(0.5) / *target);
        let psi_c = psi.as_complex().expect("complex field");
        let out: Vec<Complex<T>> = hd
            .as_complex()
            .expect("complex field")
            .iter()
            .zip(delta.as_complex().expect("complex field"))
            .zip(psi_c)
            .map(|((h, dz), z)| h - dz * energy + z * coeff)
            .collect();
        Ok(self.setting.project_ortho(Field::Complex(out).to_embedded()))
    }

    /// Map Jacobian at the base; the iterated constrained derivative is `K ∘ Dm`.
    pub fn map_jacobian(&self, d: &DVector<T>) -> DVector<T> {
        self.setting.map_jacobian(d)
    }

    pub(crate) fn setting(&self) -> &Setting<'a, T> {
        &self.setting
    }
}

pub fn constrained_hessian<'a, T: Real>(
    functional: &'a dyn Functional<T>,
    field: &Field<T>,
    spec: &ConstraintSpec<T>,
    method: HessianMethod,
) -> Result<ConstrainedHessianOperator<'a, T>> {
    let setting = Setting::new(functional, field, spec)?;
    let gradient = setting.unconstrained_gradient()?;
    let (_, multiplier) = setting.analytic_gradient(&gradient);
    let mut eigen_energy = None;
    if method == HessianMethod::EigenstateReduced {
        let form = functional
            .as_quadratic_form()
            .ok_or_else(|| Error::Unsupported("eigenstate reduction needs a quadratic form".into()))?;
        let Geometry::Bilinear { target, .. } = &setting.geometry else {
            return Err(Error::Unsupported("eigenstate reduction needs the normalization constraint".into()));
        };
        let w = form.operator().grid().dof_weights();
        let psi = &setting.base;
        let hpsi = Field::Complex(form.operator().apply_complex(psi.as_complex().expect("complex field")));
        let energy = psi.dot(&hpsi, w) / *target;
        let residual = hpsi.axpy(-energy, psi).max_abs() / T::one().max(energy.abs());
        if residual.as_f64() > T::tol(1e-8) {
            return Err(Error::NotStationary(residual.as_f64()));
        }
        eigen_energy = Some(energy);
    }
    Ok(ConstrainedHessianOperator { setting, method, gradient, multiplier, eigen_energy })
}

/// Largest relative deviation between the analytic and numeric constrained
/// Hessian actions over `directions`.
pub fn cross_check_hessian<T: Real>(
    functional: &dyn Functional<T>,
    field: &Field<T>,
    spec: &ConstraintSpec<T>,
    directions: &[Field<T>],
) -> Result<f64> {
    let analytic = constrained_hessian(functional, field, spec, HessianMethod::Analytic)?;
    let numeric = constrained_hessian(functional, field, spec, HessianMethod::NumericComposed)?;
    let mut worst = 0.0_f64;
    for d in directions {
        let a = analytic.apply(d)?.to_embedded();
        let n = numeric.apply(d)?.to_embedded();
        let raw = analytic.setting.unconstrained_hessian(&d.to_embedded())?;
        let scale = n.amax().max(raw.amax()).max(analytic.gradient.amax() * d.to_embedded().amax());
        worst = worst.max(relative((a - n).amax().as_f64(), scale.as_f64()));
    }
    if worst > HESSIAN_AGREEMENT_TOL {
        return Err(Error::MethodDisagreement(worst));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    /// Contraction of the constrained gradient with the fiber direction of the
    /// map: the base field (bilinear) or `u / (δC/δρ)` (integral).
    pub gradient_contraction: f64,
    /// Max-norm of the iterated constrained second derivative contracted with
    /// the same direction.
    pub hessian_contraction: f64,
}

pub fn identity_residuals<T: Real>(
    functional: &dyn Functional<T>,
    field: &Field<T>,
    spec: &ConstraintSpec<T>,
) -> Result<IdentityResiduals> {
    let op = constrained_hessian(functional, field, spec, HessianMethod::Analytic)?;
    let s = op.setting();
    let (gc, _) = s.analytic_gradient(&op.gradient);
    let fiber = s.fiber();
    let gradient_contraction = match &s.geometry {
        Geometry::Bilinear { .. } => s.pair(&fiber, &gc),
        Geometry::Integral { .. } => s.dot(&fiber, &gc),
    }
    .abs()
    .as_f64();
    let hessian_contraction = op.apply_embedded(&s.map_jacobian(&fiber))?.amax().as_f64();
    Ok(IdentityResiduals { gradient_contraction, hessian_contraction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::UChoice;
    use crate::functional::{quadratic_form_functional, LocalDensity, QuadraticForm};
    use crate::grid::{build_grid, Boundary, Grid};
    use crate::operator::{build_operator, ModelParams};

    fn diag123() -> QuadraticForm<f64> {
        let op = build_operator(&ModelParams::diagonal(&[1.0, 2.0, 3.0]), &Grid::<f64>::unit(3).unwrap()).unwrap();
        quadratic_form_functional(&op).unwrap()
    }

    fn e(k: usize) -> Field<f64> {
        Field::complex_from_real(&(0..3).map(|i| if i == k { 1.0 } else { 0.0 }).collect::<Vec<_>>())
    }

    #[test]
    fn stationary_at_eigenstate() {
        let f = diag123();
        let spec = ConstraintSpec::normalization(1.0);
        for method in [GradientMethod::Analytic, GradientMethod::NumericComposed] {
            let g = constrained_gradient(&f, &e(1), &spec, method).unwrap();
            assert!(g.gradient.max_abs() < 1e-9, "{method:?}");
            assert!((g.multiplier - 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn hessian_at_ground_state() {
        let f = diag123();
        let spec = ConstraintSpec::normalization(1.0);
        for method in [HessianMethod::Analytic, HessianMethod::EigenstateReduced, HessianMethod::NumericComposed] {
            let k = constrained_hessian(&f, &e(0), &spec, method).unwrap();
            let out = k.apply(&e(1)).unwrap();
            assert!(out.sub(&e(1)).max_abs() < 1e-7, "{method:?}");
            let phase = e(1).times_i().unwrap();
            let out = k.apply(&phase).unwrap();
            assert!(out.sub(&phase).max_abs() < 1e-7, "{method:?}");
        }
    }

    #[test]
    fn quartic_mass_stationary_point() {
        let g = build_grid(16, 0.0_f64, 1.0, Boundary::None).unwrap();
        let f = LocalDensity::quartic(&g, 1.0, 1.0);
        let rho_bar = 0.7;
        let rho = Field::Real(vec![rho_bar; 16]);
        let spec = ConstraintSpec::mass(rho_bar, UChoice::Uniform);
        let cg = constrained_gradient(&f, &rho, &spec, GradientMethod::Analytic).unwrap();
        assert!(cg.gradient.max_abs() < 1e-15);
        assert!((cg.multiplier - (rho_bar.powi(3) - rho_bar)).abs() < 1e-15);
        let num = constrained_gradient(&f, &rho, &spec, GradientMethod::NumericComposed).unwrap();
        assert!(num.gradient.max_abs() < 1e-8);
        let d: Vec<f64> = g.sample(|x| (2.0 * std::f64::consts::PI * x).cos());
        let mean = g.integrate(&d) / g.length();
        let d = Field::Real(d.iter().map(|v| v - mean).collect());
        let k = constrained_hessian(&f, &rho, &spec, HessianMethod::Analytic).unwrap();
        let out = k.apply(&d).unwrap();
        let expected = d.scale(3.0 * rho_bar * rho_bar - 1.0);
        assert!(out.sub(&expected).max_abs() < 1e-13);
    }

    #[test]
    fn eigenstate_reduction_requires_eigenstate() {
        let f = diag123();
        let psi = Field::complex_from_real(&[0.6, 0.8, 0.0]);
        let err = constrained_hessian(&f, &psi, &ConstraintSpec::normalization(1.0), HessianMethod::EigenstateReduced);
        assert!(matches!(err, Err(Error::NotStationary(_))));
    }

    #[test]
    fn violated_base_is_projected() {
        let f = diag123();
        let g = constrained_gradient(&f, &e(1).scale(2.0), &ConstraintSpec::normalization(1.0), GradientMethod::Analytic).unwrap();
        assert!(g.projected);
        assert!(g.gradient.max_abs() < 1e-15);
    }
}
