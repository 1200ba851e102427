//! Uniform 1-D grids with trapezoid quadrature.
//!
//! Integrals are realized as weighted sums `∫g dx ↦ Σ_i w_i g_i` over the
//! variational degrees of freedom. With a Dirichlet-zero boundary the two
//! endpoint samples are pinned to zero and dropped from the degrees of freedom.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    DirichletZero,
    #[default]
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    points: Vec<T>,
    weights: Vec<T>,
    boundary: Boundary,
}

impl<T: Real> Grid<T> {
    /// Uniform grid with trapezoid weights (`h/2` at the endpoints, `h` inside).
    pub fn uniform(n_points: usize, x_min: T, x_max: T, boundary: Boundary) -> Result<Self> {
        if !x_min.finite() || !x_max.finite() {
            return Err(Error::InvalidGrid("non-finite bounds".into()));
        }
        if n_points < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 points, got {n_points}")));
        }
        if x_min >= x_max {
            return Err(Error::InvalidGrid("x_min must be smaller than x_max".into()));
        }
        let h = (x_max - x_min) / T::usize(n_points - 1);
        let half = T::lit(0.5);
        let points = (0..n_points)
            .map(|i| if i == n_points - 1 { x_max } else { x_min + h * T::usize(i) })
            .collect();
        let weights = (0..n_points)
            .map(|i| if i == 0 || i == n_points - 1 { h * half } else { h })
            .collect();
        Ok(Self { points, weights, boundary })
    }

    /// Index grid with unit weights, used for explicit matrices.
    pub fn unit(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGrid("empty unit grid".into()));
        }
        Ok(Self {
            points: (0..n).map(T::usize).collect(),
            weights: vec![T::one(); n],
            boundary: Boundary::None,
        })
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// All abscissas, including pinned boundary points.
    pub fn points(&self) -> &[T] {
        &self.points
    }

    /// All quadrature weights, including pinned boundary points.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    fn dof_range(&self) -> std::ops::Range<usize> {
        match self.boundary {
            Boundary::DirichletZero => 1..self.points.len() - 1,
            Boundary::None => 0..self.points.len(),
        }
    }

    /// Number of variational degrees of freedom.
    pub fn dof(&self) -> usize {
        self.dof_range().len()
    }

    pub fn dof_points(&self) -> &[T] {
        &self.points[self.dof_range()]
    }

    pub fn dof_weights(&self) -> &[T] {
        &self.weights[self.dof_range()]
    }

    pub fn spacing(&self) -> T {
        self.points[1] - self.points[0]
    }

    pub fn length(&self) -> T {
        self.points[self.points.len() - 1] - self.points[0]
    }

    /// `Σ w_i g_i` over the degrees of freedom.
    pub fn integrate(&self, values: &[T]) -> T {
        self.dof_weights()
            .iter()
            .zip(values)
            .fold(T::zero(), |acc, (&w, &g)| acc + w * g)
    }

    /// Samples `g` at the degrees of freedom.
    pub fn sample(&self, g: impl Fn(T) -> T) -> Vec<T> {
        self.dof_points().iter().map(|&x| g(x)).collect()
    }
}

/// Free-function form of [`Grid::uniform`].
pub fn build_grid<T: Real>(n_points: usize, x_min: T, x_max: T, boundary: Boundary) -> Result<Grid<T>> {
    Grid::uniform(n_points, x_min, x_max, boundary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_trapezoid() {
        let g = build_grid(3, 0.0_f64, 1.0, Boundary::None).unwrap();
        assert_eq!(g.points(), &[0.0, 0.5, 1.0]);
        assert_eq!(g.weights(), &[0.25, 0.5, 0.25]);
    }

    #[test]
    fn too_few_points() {
        assert!(build_grid(2, 0.0_f64, 1.0, Boundary::None).is_err());
        assert!(build_grid(5, 1.0_f64, 1.0, Boundary::None).is_err());
        assert!(build_grid(5, f64::NAN, 1.0, Boundary::None).is_err());
    }

    #[test]
    fn dirichlet_excludes_endpoints() {
        let g = build_grid(201, 0.0_f64, 1.0, Boundary::DirichletZero).unwrap();
        assert_eq!(g.dof(), 199);
        assert!(g.dof_weights().iter().all(|&w| (w - 0.005).abs() < 1e-15));
    }

    #[test]
    fn trapezoid_integrates_constant_exactly() {
        for n in [3, 4, 17, 64, 401] {
            let g = build_grid(n, -2.5, 7.25, Boundary::None).unwrap();
            let total: f64 = g.weights().iter().sum();
            assert!((total - 9.75).abs() < 1e-12, "n={n}: {total}");
            assert!(g.points().windows(2).all(|p| p[1] > p[0]));
            assert!(g.weights().iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn single_precision_grid() {
        let g = build_grid(11, 0.0f32, 1.0, Boundary::None).unwrap();
        let total: f32 = g.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-6);
    }
}
