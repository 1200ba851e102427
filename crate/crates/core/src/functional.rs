//! Real-valued functionals of real, complex and two-variable fields.
//!
//! Gradients are returned as fields in the functional-derivative convention:
//! `δA/δρ` for real fields, the Wirtinger derivative `δA/δψ*` for complex
//! fields (its conjugate is `δA/δψ`), and `(δA/δa, δA/δb)` for pairs.
//! Hessian actions return the directional derivative of that gradient, which
//! for complex fields combines the `(ψ*, ψ)` and `(ψ*, ψ*)` blocks:
//! `D_Δ g = ∫ δ²A/δψ*δψ' Δψ' + ∫ δ²A/δψ*δψ*' Δψ*'`.

use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{embedded_weights, Field, FieldKind};
use crate::grid::Grid;
use crate::numdiff;
use crate::operator::{LinearOperator, HERMITICITY_TOL};
use crate::scalar::Real;

pub trait Functional<T: Real>: Send + Sync {
    fn name(&self) -> &str;

    fn kind(&self) -> FieldKind;

    fn grid(&self) -> &Grid<T>;

    /// Raw value; callers go through [`evaluate`] for validation.
    fn value(&self, field: &Field<T>) -> T;

    /// `A[to] − A[from]`. Implementations may override with a form that avoids
    /// cancellation between two nearly equal values.
    fn increment(&self, from: &Field<T>, to: &Field<T>) -> T {
        self.value(to) - self.value(from)
    }

    fn analytic_gradient(&self, _field: &Field<T>) -> Option<Field<T>> {
        None
    }

    fn analytic_hessian(&self, _field: &Field<T>, _direction: &Field<T>) -> Option<Field<T>> {
        None
    }

    fn as_quadratic_form(&self) -> Option<&QuadraticForm<T>> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeMethod {
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone)]
pub struct DerivativeBundle<T> {
    /// `δA/δρ`, `δA/δψ*`, or `(δA/δa, δA/δb)`.
    pub gradient: Field<T>,
    pub method: DerivativeMethod,
    pub step: Option<T>,
}

impl<T: Real> DerivativeBundle<T> {
    /// `δA/δψ` for complex fields (conjugate of `δA/δψ*`).
    pub fn wrt_field(&self) -> Field<T> {
        self.gradient.conj()
    }

    /// `δA/δψ*` for complex fields.
    pub fn wrt_conjugate(&self) -> &Field<T> {
        &self.gradient
    }
}

pub(crate) fn validate_field<T: Real, F: Functional<T> + ?Sized>(f: &F, field: &Field<T>) -> Result<()> {
    field.check_kind(f.kind())?;
    field.check_len(f.grid().dof())?;
    if !field.is_finite() {
        return Err(Error::NonFinite("input field".into()));
    }
    Ok(())
}

pub fn evaluate<T: Real, F: Functional<T> + ?Sized>(f: &F, field: &Field<T>) -> Result<T> {
    validate_field(f, field)?;
    let v = f.value(field);
    if !v.finite() {
        return Err(Error::NonFinite(format!("value of {}", f.name())));
    }
    Ok(v)
}

/// Embedded weights `ν` and `ω = τν` for a functional's field kind.
pub(crate) fn weights_of<T: Real, F: Functional<T> + ?Sized>(f: &F) -> (DVector<T>, DVector<T>) {
    let nu = embedded_weights(f.kind(), f.grid().dof_weights());
    let omega = &nu * f.kind().tau::<T>();
    (nu, omega)
}

pub fn gradient<T: Real, F: Functional<T> + ?Sized>(f: &F, field: &Field<T>) -> Result<DerivativeBundle<T>> {
    validate_field(f, field)?;
    match f.analytic_gradient(field) {
        Some(g) => {
            if !g.is_finite() {
                return Err(Error::NonFinite(format!("gradient of {}", f.name())));
            }
            Ok(DerivativeBundle { gradient: g, method: DerivativeMethod::Analytic, step: None })
        }
        None => numeric_gradient(f, field),
    }
}

/// Central-difference gradient of `eval`, regardless of any analytic gradient.
pub fn numeric_gradient<T: Real, F: Functional<T> + ?Sized>(f: &F, field: &Field<T>) -> Result<DerivativeBundle<T>> {
    validate_field(f, field)?;
    let kind = f.kind();
    let (nu, omega) = weights_of(f);
    let x = field.to_embedded();
    let eps = numdiff::scaled_step(numdiff::gradient_step(), &x, &nu);
    let phi = |y: &DVector<T>| Ok(f.value(&Field::from_embedded(kind, y)));
    let g = numdiff::central_gradient(phi, &x, &omega, eps)?;
    Ok(DerivativeBundle {
        gradient: Field::from_embedded(kind, &g),
        method: DerivativeMethod::FiniteDifference,
        step: Some(eps),
    })
}

pub fn hessian_apply<T: Real, F: Functional<T> + ?Sized>(f: &F, field: &Field<T>, direction: &Field<T>) -> Result<Field<T>> {
    validate_field(f, field)?;
    validate_field(f, direction)?;
    match f.analytic_hessian(field, direction) {
        Some(h) if h.is_finite() => Ok(h),
        Some(_) => Err(Error::NonFinite(format!("Hessian action of {}", f.name()))),
        None => numeric_hessian_apply(f, field, direction),
    }
}

/// Central difference of the gradient along `direction`.
pub fn numeric_hessian_apply<T: Real, F: Functional<T> + ?Sized>(
    f: &F,
    field: &Field<T>,
    direction: &Field<T>,
) -> Result<Field<T>> {
    validate_field(f, field)?;
    validate_field(f, direction)?;
    let kind = f.kind();
    let (nu, omega) = weights_of(f);
    let x = field.to_embedded();
    let d = direction.to_embedded();
    let out = if f.analytic_gradient(field).is_some() {
        let eps = numdiff::scaled_step(numdiff::gradient_step(), &x, &nu);
        let grad = |y: &DVector<T>| {
            f.analytic_gradient(&Field::from_embedded(kind, y))
                .map(|g| g.to_embedded())
                .ok_or_else(|| Error::Unsupported("gradient vanished".into()))
        };
        numdiff::directional(grad, &x, &d, eps)?
    } else {
        let eps = numdiff::scaled_step(numdiff::hessian_step(), &x, &nu);
        let phi = |y: &DVector<T>| Ok(f.value(&Field::from_embedded(kind, y)));
        numdiff::mixed_hessian_action(phi, &x, &omega, &d, eps)?
    };
    Ok(Field::from_embedded(kind, &out))
}

/// `A[ψ, ψ*] = ∫ ψ* Â ψ dx` for a real operator Hermitian under the grid weights.
#[derive(Debug, Clone)]
pub struct QuadraticForm<T> {
    op: LinearOperator<T>,
}

impl<T: Real> QuadraticForm<T> {
    pub fn operator(&self) -> &LinearOperator<T> {
        &self.op
    }

    /// `|Im ∫ψ* Âψ|`, zero up to rounding for a Hermitian operator.
    pub fn imaginary_residue(&self, field: &Field<T>) -> T {
        let psi = field.as_complex().expect("complex field");
        let hpsi = self.op.apply_complex(psi);
        Field::Complex(psi.to_vec())
            .complex_dot(&Field::Complex(hpsi), self.op.grid().dof_weights())
            .im
            .abs()
    }

    fn apply(&self, field: &Field<T>) -> Field<T> {
        Field::Complex(self.op.apply_complex(field.as_complex().expect("complex field")))
    }
}

impl<T: Real> Functional<T> for QuadraticForm<T> {
    fn name(&self) -> &str {
        "quadratic-form"
    }

    fn kind(&self) -> FieldKind {
        FieldKind::Complex
    }

    fn grid(&self) -> &Grid<T> {
        self.op.grid()
    }

    fn value(&self, field: &Field<T>) -> T {
        field.dot(&self.apply(field), self.op.grid().dof_weights())
    }

    /// Polarized difference `Re ⟨to − from, Â(to + from)⟩`.
    fn increment(&self, from: &Field<T>, to: &Field<T>) -> T {
        // 2Re⟨d, Âψ⟩ + ⟨d, Âd⟩ keeps the stencil roundoff proportional to |d|.
        let diff = to.sub(from);
        let w = self.op.grid().dof_weights();
        T::lit(2.0) * diff.dot(&self.apply(from), w) + diff.dot(&self.apply(&diff), w)
    }

    fn analytic_gradient(&self, field: &Field<T>) -> Option<Field<T>> {
        Some(self.apply(field))
    }

    fn analytic_hessian(&self, _field: &Field<T>, direction: &Field<T>) -> Option<Field<T>> {
        Some(self.apply(direction))
    }

    fn as_quadratic_form(&self) -> Option<&QuadraticForm<T>> {
        Some(self)
    }
}

pub fn quadratic_form_functional<T: Real>(op: &LinearOperator<T>) -> Result<QuadraticForm<T>> {
    let residual = op.hermiticity_residual();
    if residual.as_f64() > HERMITICITY_TOL {
        return Err(Error::NotHermitian(residual.as_f64()));
    }
    Ok(QuadraticForm { op: op.clone() })
}

pub type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// `A[ρ] = ∫ g(ρ(x)) dx` with analytic `g′` and `g″`.
#[derive(Clone)]
pub struct LocalDensity<T> {
    grid: Grid<T>,
    g: ScalarFn<T>,
    dg: ScalarFn<T>,
    d2g: ScalarFn<T>,
    name: String,
}

impl<T: Real> std::fmt::Debug for LocalDensity<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LocalDensity").field("name", &self.name).finish()
    }
}

impl<T: Real> LocalDensity<T> {
    /// `g(ρ) = (α/4) ρ⁴ − (β/2) ρ²`.
    pub fn quartic(grid: &Grid<T>, alpha: T, beta: T) -> Self {
        let (a4, b2) = (alpha / T::lit(4.0), beta / T::lit(2.0));
        let three = T::lit(3.0);
        Self {
            grid: grid.clone(),
            g: Arc::new(move |r: T| a4 * r.powi(4) - b2 * r * r),
            dg: Arc::new(move |r: T| alpha * r.powi(3) - beta * r),
            d2g: Arc::new(move |r: T| three * alpha * r * r - beta),
            name: "quartic-density".into(),
        }
    }

    pub fn local_second_derivative(&self, rho: T) -> T {
        (self.d2g)(rho)
    }
}

impl<T: Real> Functional<T> for LocalDensity<T> {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> FieldKind {
        FieldKind::Real
    }

    fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    fn value(&self, field: &Field<T>) -> T {
        let rho = field.as_real().expect("real field");
        let gs: Vec<T> = rho.iter().map(|&r| (self.g)(r)).collect();
        self.grid.integrate(&gs)
    }

    fn analytic_gradient(&self, field: &Field<T>) -> Option<Field<T>> {
        let rho = field.as_real()?;
        Some(Field::Real(rho.iter().map(|&r| (self.dg)(r)).collect()))
    }

    fn analytic_hessian(&self, field: &Field<T>, direction: &Field<T>) -> Option<Field<T>> {
        let rho = field.as_real()?;
        let d = direction.as_real()?;
        Some(Field::Real(rho.iter().zip(d).map(|(&r, &v)| (self.d2g)(r) * v).collect()))
    }
}

/// Builds `∫ g(ρ)` after spot-checking `g′`, `g″` against central differences at
/// ten pseudo-random points in `[-2, 2]`.
pub fn local_density_functional<T: Real>(
    grid: &Grid<T>,
    g: ScalarFn<T>,
    dg: ScalarFn<T>,
    d2g: ScalarFn<T>,
) -> Result<LocalDensity<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let tol = T::lit(1e-6).max(T::default_epsilon().sqrt() * T::lit(30.0));
    let two = T::lit(2.0);
    for _ in 0..10 {
        let x = T::lit(rng.random_range(-2.0..2.0));
        let h = T::default_epsilon().cbrt() * T::one().max(x.abs());
        let checks = [("g'", (g(x + h) - g(x - h)) / (two * h), dg(x)), ("g''", (dg(x + h) - dg(x - h)) / (two * h), d2g(x))];
        for (label, fd, analytic) in checks {
            let dev = (fd - analytic).abs() / T::one().max(analytic.abs());
            if !(dev <= tol) {
                return Err(Error::InconsistentDerivatives(format!("{label} at {x}: deviation {dev:e}")));
            }
        }
    }
    Ok(LocalDensity { grid: grid.clone(), g, dg, d2g, name: "local-density".into() })
}

/// `A[ψ] = ∫ψ*Âψ + (γ/2)∫|ψ|⁴`: a complex functional whose `(ψ*, ψ*)` Hessian
/// block does not vanish.
#[derive(Debug, Clone)]
pub struct InteractingQuadratic<T> {
    form: QuadraticForm<T>,
    coupling: T,
}

impl<T: Real> InteractingQuadratic<T> {
    pub fn new(op: &LinearOperator<T>, coupling: T) -> Result<Self> {
        Ok(Self { form: quadratic_form_functional(op)?, coupling })
    }
}

impl<T: Real> Functional<T> for InteractingQuadratic<T> {
    fn name(&self) -> &str {
        "interacting-quadratic"
    }

    fn kind(&self) -> FieldKind {
        FieldKind::Complex
    }

    fn grid(&self) -> &Grid<T> {
        self.form.grid()
    }

    fn value(&self, field: &Field<T>) -> T {
        let psi = field.as_complex().expect("complex field");
        let quartic: Vec<T> = psi.iter().map(|z| z.norm_sqr() * z.norm_sqr()).collect();
        self.form.value(field) + self.coupling * T::lit(0.5) * self.grid().integrate(&quartic)
    }

    fn analytic_gradient(&self, field: &Field<T>) -> Option<Field<T>> {
        let psi = field.as_complex()?;
        let hpsi = self.form.apply(field);
        let h = hpsi.as_complex()?;
        Some(Field::Complex(
            psi.iter().zip(h).map(|(z, hz)| hz + z * (z.norm_sqr() * self.coupling)).collect(),
        ))
    }

    fn analytic_hessian(&self, field: &Field<T>, direction: &Field<T>) -> Option<Field<T>> {
        let psi = field.as_complex()?;
        let d = direction.as_complex()?;
        let hd = self.form.apply(direction);
        let hd = hd.as_complex()?;
        let two = T::lit(2.0);
        Some(Field::Complex(
            psi.iter()
                .zip(d)
                .zip(hd)
                .map(|((z, dz), h)| h + (dz * (two * z.norm_sqr()) + z * z * dz.conj()) * self.coupling)
                .collect(),
        ))
    }
}

/// `A[a, b] = ∫ a M b + (γ/4)∫ a² b²` for two independent real variables.
#[derive(Debug, Clone)]
pub struct CoupledPair<T> {
    op: LinearOperator<T>,
    coupling: T,
}

impl<T: Real> CoupledPair<T> {
    pub fn new(op: &LinearOperator<T>, coupling: T) -> Result<Self> {
        quadratic_form_functional(op)?;
        Ok(Self { op: op.clone(), coupling })
    }

    fn parts(field: &Field<T>) -> Option<(&[T], &[T])> {
        match field {
            Field::Pair(a, b) => Some((a, b)),
            _ => None,
        }
    }
}

impl<T: Real> Functional<T> for CoupledPair<T> {
    fn name(&self) -> &str {
        "coupled-pair"
    }

    fn kind(&self) -> FieldKind {
        FieldKind::Pair
    }

    fn grid(&self) -> &Grid<T> {
        self.op.grid()
    }

    fn value(&self, field: &Field<T>) -> T {
        let (a, b) = Self::parts(field).expect("pair field");
        let mb = self.op.apply_real(b);
        let quarter = self.coupling / T::lit(4.0);
        let dens: Vec<T> = (0..a.len()).map(|i| a[i] * mb[i] + quarter * a[i] * a[i] * b[i] * b[i]).collect();
        self.grid().integrate(&dens)
    }

    fn analytic_gradient(&self, field: &Field<T>) -> Option<Field<T>> {
        let (a, b) = Self::parts(field)?;
        let mb = self.op.apply_real(b);
        let ma = self.op.apply_real(a);
        let half = self.coupling * T::lit(0.5);
        let ga = (0..a.len()).map(|i| mb[i] + half * a[i] * b[i] * b[i]).collect();
        let gb = (0..a.len()).map(|i| ma[i] + half * a[i] * a[i] * b[i]).collect();
        Some(Field::Pair(ga, gb))
    }

    fn analytic_hessian(&self, field: &Field<T>, direction: &Field<T>) -> Option<Field<T>> {
        let (a, b) = Self::parts(field)?;
        let (da, db) = Self::parts(direction)?;
        let mdb = self.op.apply_real(db);
        let mda = self.op.apply_real(da);
        let half = self.coupling * T::lit(0.5);
        let two = T::lit(2.0);
        let n = a.len();
        let ha = (0..n).map(|i| mdb[i] + half * (b[i] * b[i] * da[i] + two * a[i] * b[i] * db[i])).collect();
        let hb = (0..n).map(|i| mda[i] + half * (two * a[i] * b[i] * da[i] + a[i] * a[i] * db[i])).collect();
        Some(Field::Pair(ha, hb))
    }
}

pub type FieldFn<T> = Arc<dyn Fn(&Field<T>) -> T + Send + Sync>;

/// Functional given only by its evaluator; all derivatives are finite differences.
#[derive(Clone)]
pub struct ClosureFunctional<T> {
    grid: Grid<T>,
    kind: FieldKind,
    eval: FieldFn<T>,
    name: String,
}

impl<T: Real> ClosureFunctional<T> {
    pub fn new(name: impl Into<String>, grid: &Grid<T>, kind: FieldKind, eval: FieldFn<T>) -> Self {
        Self { grid: grid.clone(), kind, eval, name: name.into() }
    }
}

impl<T: Real> Functional<T> for ClosureFunctional<T> {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> FieldKind {
        self.kind
    }

    fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    fn value(&self, field: &Field<T>) -> T {
        (self.eval)(field)
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Boundary};
    use crate::operator::{build_operator, ModelParams};

    fn diag123() -> QuadraticForm<f64> {
        let op = build_operator(&ModelParams::diagonal(&[1.0, 2.0, 3.0]), &Grid::<f64>::unit(3).unwrap()).unwrap();
        quadratic_form_functional(&op).unwrap()
    }

    fn e(k: usize, n: usize) -> Vec<f64> {
        (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect()
    }

    #[test]
    fn quadratic_form_values() {
        let f = diag123();
        assert_eq!(evaluate(&f, &Field::complex_from_real(&e(0, 3))).unwrap(), 1.0);
        assert_eq!(evaluate(&f, &Field::complex_from_real(&e(2, 3))).unwrap(), 3.0);
        let s = 1.0 / 2f64.sqrt();
        let v = evaluate(&f, &Field::complex_from_real(&[s, s, 0.0])).unwrap();
        assert!((v - 1.5).abs() < 1e-15);
    }

    #[test]
    fn quadratic_form_phase_invariance() {
        let f = diag123();
        let psi = Field::from_real_parts(&[0.3, -0.5, 0.8], &[0.1, 0.4, -0.2]);
        let (c, s) = (0.7f64.cos(), 0.7f64.sin());
        let rotated = match &psi {
            Field::Complex(v) => Field::Complex(v.iter().map(|z| z * num_complex::Complex::new(c, s)).collect()),
            _ => unreachable!(),
        };
        let a = evaluate(&f, &psi).unwrap();
        let b = evaluate(&f, &rotated).unwrap();
        assert!((a - b).abs() < 1e-15);
        assert!(f.imaginary_residue(&psi) < 1e-14);
    }

    #[test]
    fn kind_mismatch_rejected() {
        let f = diag123();
        let err = evaluate(&f, &Field::Real(vec![1.0, 0.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::KindMismatch { .. }));
        assert!(evaluate(&f, &Field::complex_from_real(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn quadratic_gradient_is_operator_action() {
        let f = diag123();
        let psi = Field::from_real_parts(&[0.3, -0.5, 0.8], &[0.1, 0.4, -0.2]);
        let g = gradient(&f, &psi).unwrap();
        assert_eq!(g.method, DerivativeMethod::Analytic);
        let expected = Field::from_real_parts(&[0.3, -1.0, 2.4], &[0.1, 0.8, -0.6]);
        assert!(g.gradient.sub(&expected).max_abs() < 1e-15);
        let fd = numeric_gradient(&f, &psi).unwrap();
        assert!(fd.gradient.sub(&expected).max_abs() < 1e-9);
        // (ψ*, ψ) block is Â, (ψ*, ψ*) block vanishes: the action is C-linear.
        let d = Field::from_real_parts(&[1.0, 2.0, 0.0], &[0.0, -1.0, 1.0]);
        let h = hessian_apply(&f, &psi, &d).unwrap();
        assert!(h.sub(&Field::from_real_parts(&[1.0, 4.0, 0.0], &[0.0, -2.0, 3.0])).max_abs() < 1e-15);
    }

    #[test]
    fn quartic_density_values() {
        let g = build_grid(11, 0.0_f64, 1.0, Boundary::None).unwrap();
        let f = LocalDensity::quartic(&g, 1.0, 1.0);
        let one = Field::Real(vec![1.0; 11]);
        assert!((evaluate(&f, &one).unwrap() + 0.25).abs() < 1e-14);
        let two = Field::Real(vec![2.0; 11]);
        assert!((evaluate(&f, &two).unwrap() - 2.0).abs() < 1e-14);
        let rho = Field::Real(g.sample(|x| 0.5 + x));
        let grad = gradient(&f, &rho).unwrap().gradient;
        let expected: Vec<f64> = g.sample(|x| (0.5 + x).powi(3) - (0.5 + x));
        assert!(grad.sub(&Field::Real(expected)).max_abs() < 1e-15);
        let d = Field::Real(g.sample(|x| x * x));
        let h = hessian_apply(&f, &rho, &d).unwrap();
        let expected: Vec<f64> = g.sample(|x| (3.0 * (0.5 + x).powi(2) - 1.0) * x * x);
        assert!(h.sub(&Field::Real(expected)).max_abs() < 1e-14);
    }

    #[test]
    fn square_density_gradient() {
        let g = build_grid(5, 0.0_f64, 1.0, Boundary::None).unwrap();
        let f = local_density_functional(
            &g,
            Arc::new(|r: f64| r * r),
            Arc::new(|r: f64| 2.0 * r),
            Arc::new(|_| 2.0),
        )
        .unwrap();
        let rho = Field::Real(vec![0.5, -1.0, 2.0, 0.0, 3.0]);
        let grad = gradient(&f, &rho).unwrap().gradient;
        assert_eq!(grad, Field::Real(vec![1.0, -2.0, 4.0, 0.0, 6.0]));
    }

    #[test]
    fn inconsistent_local_derivatives_rejected() {
        let g = build_grid(5, 0.0_f64, 1.0, Boundary::None).unwrap();
        let err = local_density_functional(
            &g,
            Arc::new(|r: f64| r * r),
            Arc::new(|r: f64| 3.0 * r),
            Arc::new(|_| 2.0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InconsistentDerivatives(_)));
    }

    #[test]
    fn closure_functional_uses_finite_differences() {
        let g = build_grid(6, 0.0_f64, 1.0, Boundary::None).unwrap();
        let f = ClosureFunctional::new(
            "cubic",
            &g,
            FieldKind::Real,
            Arc::new(|fd: &Field<f64>| fd.as_real().unwrap().iter().map(|r| r.powi(3)).sum()),
        );
        let rho = Field::Real(vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let b = gradient(&f, &rho).unwrap();
        assert_eq!(b.method, DerivativeMethod::FiniteDifference);
        let w = g.dof_weights();
        let expected: Vec<f64> = (0..6).map(|i| 3.0 * (0.1 * (i + 1) as f64).powi(2) / w[i]).collect();
        assert!(b.gradient.sub(&Field::Real(expected)).max_abs() < 1e-7);
    }

    #[test]
    fn single_precision_quadratic_form() {
        let op = build_operator(&ModelParams::diagonal(&[1.0, 2.0, 3.0]), &Grid::<f32>::unit(3).unwrap()).unwrap();
        let f = quadratic_form_functional(&op).unwrap();
        let v = evaluate(&f, &Field::complex_from_real(&[0.0f32, 1.0, 0.0])).unwrap();
        assert_eq!(v, 2.0f32);
        let g = numeric_gradient(&f, &Field::complex_from_real(&[0.6f32, 0.8, 0.0])).unwrap();
        let expected = Field::complex_from_real(&[0.6f32, 1.6, 0.0]);
        assert!(g.gradient.sub(&expected).max_abs() < 1e-3);
    }
}
