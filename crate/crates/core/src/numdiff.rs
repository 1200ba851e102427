//! Central finite differences on the real embedding.
//!
//! Results follow the functional-derivative convention of [`crate::field`]:
//! each partial derivative is divided by the embedded weight `ω_k`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default first-derivative step scale: `1e-5` for `f64`, `~ε^{1/3}` for coarser types.
pub fn gradient_step<T: Real>() -> T {
    T::lit(1e-5).max(T::default_epsilon().cbrt() * T::lit(0.5))
}

/// Default step scale for second derivatives obtained from function values only.
pub fn hessian_step<T: Real>() -> T {
    T::lit(1e-4).max(T::default_epsilon().sqrt().sqrt())
}

/// `max(1, ‖x‖)`-scaled step.
pub fn scaled_step<T: Real>(base: T, x: &DVector<T>, nu: &DVector<T>) -> T {
    let norm = x.iter().zip(nu.iter()).fold(T::zero(), |acc, (&v, &w)| acc + w * v * v).sqrt();
    base * T::one().max(norm)
}

fn check_step<T: Real>(x: &DVector<T>, eps: T) -> Result<()> {
    if eps <= T::zero() || x.iter().any(|&v| (v + eps) - v == T::zero()) {
        return Err(Error::StepUnderflow);
    }
    Ok(())
}

/// `G_k = (φ(x + ε e_k) − φ(x − ε e_k)) / (2ε ω_k)`.
pub fn central_gradient<T: Real>(
    phi: impl Fn(&DVector<T>) -> Result<T>,
    x: &DVector<T>,
    omega: &DVector<T>,
    eps: T,
) -> Result<DVector<T>> {
    check_step(x, eps)?;
    let two = T::lit(2.0);
    let mut g = DVector::zeros(x.len());
    let mut probe = x.clone();
    for k in 0..x.len() {
        probe[k] = x[k] + eps;
        let plus = phi(&probe)?;
        probe[k] = x[k] - eps;
        let minus = phi(&probe)?;
        probe[k] = x[k];
        g[k] = (plus - minus) / (two * eps * omega[k]);
    }
    if g.iter().any(|v| !v.finite()) {
        return Err(Error::NonFinite("finite-difference gradient".into()));
    }
    Ok(g)
}

/// Hessian action from the mixed four-point stencil
/// `(φ(x+εe_k+δd) − φ(x+εe_k−δd) − φ(x−εe_k+δd) + φ(x−εe_k−δd)) / (4εδ ω_k)`.
pub fn mixed_hessian_action<T: Real>(
    phi: impl Fn(&DVector<T>) -> Result<T>,
    x: &DVector<T>,
    omega: &DVector<T>,
    direction: &DVector<T>,
    eps: T,
) -> Result<DVector<T>> {
    check_step(x, eps)?;
    let dnorm = direction.amax();
    if dnorm == T::zero() {
        return Ok(DVector::zeros(x.len()));
    }
    let delta = eps / dnorm;
    let four = T::lit(4.0);
    let mut out = DVector::zeros(x.len());
    for k in 0..x.len() {
        let eval = |sk: T, sd: T| {
            let mut p = x + direction * (sd * delta);
            p[k] += sk * eps;
            phi(&p)
        };
        let one = T::one();
        let pp = eval(one, one)?;
        let pm = eval(one, -one)?;
        let mp = eval(-one, one)?;
        let mm = eval(-one, -one)?;
        out[k] = (pp - pm - mp + mm) / (four * eps * delta * omega[k]);
    }
    if out.iter().any(|v| !v.finite()) {
        return Err(Error::NonFinite("finite-difference Hessian action".into()));
    }
    Ok(out)
}

/// Directional central difference of a vector-valued map.
pub fn directional<T: Real>(
    map: impl Fn(&DVector<T>) -> Result<DVector<T>>,
    x: &DVector<T>,
    direction: &DVector<T>,
    eps: T,
) -> Result<DVector<T>> {
    check_step(x, eps)?;
    let dnorm = direction.amax();
    if dnorm == T::zero() {
        return Ok(DVector::zeros(x.len()));
    }
    let delta = eps / dnorm;
    let plus = map(&(x + direction * delta))?;
    let minus = map(&(x - direction * delta))?;
    let out = (plus - minus) / (T::lit(2.0) * delta);
    if out.iter().any(|v| !v.finite()) {
        return Err(Error::NonFinite("directional difference".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_weighted_quadratic() {
        // φ(x) = Σ ω_k x_k² / 2  ⇒  G = x
        let omega = DVector::from_vec(vec![0.5, 2.0, 1.0]);
        let x = DVector::from_vec(vec![1.0, -0.3, 0.7]);
        let om = omega.clone();
        let phi = move |y: &DVector<f64>| Ok(y.iter().zip(om.iter()).map(|(a, w)| 0.5 * w * a * a).sum());
        let g = central_gradient(&phi, &x, &omega, 1e-5).unwrap();
        assert!((g - &x).amax() < 1e-9);
        let d = DVector::from_vec(vec![0.2, 1.0, -0.5]);
        let h = mixed_hessian_action(&phi, &x, &omega, &d, 1e-4).unwrap();
        assert!((h - d).amax() < 1e-6);
    }

    #[test]
    fn step_underflow() {
        let x = DVector::from_vec(vec![1e30]);
        let omega = DVector::from_vec(vec![1.0]);
        let err = central_gradient(|y: &DVector<f64>| Ok(y[0]), &x, &omega, 1e-5).unwrap_err();
        assert_eq!(err, Error::StepUnderflow);
    }
}
