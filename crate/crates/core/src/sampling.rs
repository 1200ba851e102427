//! Reproducible random increments at a constrained base point.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::constrained::Setting;
use crate::constraint::ConstraintSpec;
use crate::error::Result;
use crate::field::Field;
use crate::functional::Functional;
use crate::scalar::Real;

struct Sampler<'a, T: Real> {
    setting: Setting<'a, T>,
    normals: Vec<DVector<T>>,
    sqrt_nu: DVector<T>,
}

impl<'a, T: Real> Sampler<'a, T> {
    fn new(functional: &'a dyn Functional<T>, base: &Field<T>, spec: &ConstraintSpec<T>) -> Result<Self> {
        let setting = Setting::new(functional, base, spec)?;
        let mut normals: Vec<DVector<T>> = Vec::new();
        for n in setting.normals() {
            let mut v = n;
            for b in &normals {
                let c = setting.dot(b, &v);
                v.axpy(-c, b, T::one());
            }
            let len = setting.dot(&v, &v).sqrt();
            if len > T::lit(1e-12) {
                normals.push(v / len);
            }
        }
        let sqrt_nu = setting.nu.map(|v| v.sqrt());
        Ok(Self { setting, normals, sqrt_nu })
    }

    fn tangent(&self, rng: &mut ChaCha8Rng) -> DVector<T> {
        loop {
            let mut v = DVector::from_fn(self.sqrt_nu.len(), |k, _| {
                let z: f64 = rng.sample(StandardNormal);
                T::lit(z) / self.sqrt_nu[k]
            });
            for b in &self.normals {
                let c = self.setting.dot(b, &v);
                v.axpy(-c, b, T::one());
            }
            let len = self.setting.dot(&v, &v).sqrt();
            if len > T::lit(1e-8) {
                return v / len;
            }
        }
    }

    fn field(&self, v: &DVector<T>) -> Field<T> {
        Field::from_embedded(self.setting.kind, v)
    }
}

/// Unit increments drawn isotropically in the first-order tangent space.
pub fn tangent_directions<T: Real>(
    functional: &dyn Functional<T>,
    base: &Field<T>,
    spec: &ConstraintSpec<T>,
    count: usize,
    seed: u64,
) -> Result<Vec<Field<T>>> {
    let sampler = Sampler::new(functional, base, spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| sampler.field(&sampler.tangent(&mut rng))).collect())
}

/// Increments `a n̂ + t̂` mixing a random tangent `t̂` with the unit constraint
/// normal, `|a| ∈ [0.5, 1]` with random sign, so that the constraint map acts
/// at second order.
pub fn probe_directions<T: Real>(
    functional: &dyn Functional<T>,
    base: &Field<T>,
    spec: &ConstraintSpec<T>,
    count: usize,
    seed: u64,
) -> Result<Vec<Field<T>>> {
    let sampler = Sampler::new(functional, base, spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let t = sampler.tangent(&mut rng);
            let a: f64 = rng.random_range(0.5..1.0);
            let a = if rng.random_bool(0.5) { a } else { -a };
            let v = t + &sampler.normals[0] * T::lit(a);
            let len = sampler.setting.dot(&v, &v).sqrt();
            sampler.field(&(v / len))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::UChoice;
    use crate::functional::LocalDensity;
    use crate::grid::{build_grid, Boundary};

    #[test]
    fn tangent_samples_conserve_mass_to_first_order() {
        let g = build_grid(10, 0.0_f64, 1.0, Boundary::None).unwrap();
        let f = LocalDensity::quartic(&g, 1.0, 1.0);
        let rho = Field::Real(vec![0.5; 10]);
        let spec = ConstraintSpec::mass(0.5, UChoice::A15);
        let dirs = tangent_directions(&f, &rho, &spec, 5, 3).unwrap();
        for d in &dirs {
            let v = d.as_real().unwrap();
            assert!(g.integrate(v).abs() < 1e-14);
            assert!((d.norm(g.dof_weights()) - 1.0).abs() < 1e-14);
        }
        let again = tangent_directions(&f, &rho, &spec, 5, 3).unwrap();
        assert_eq!(dirs, again);
    }
}
