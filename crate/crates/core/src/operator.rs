//! Model Hermitian operators: explicit matrices and finite-difference
//! Hamiltonians `-½ d²/dx² + V(x)` (units ħ = m = 1).

use std::io::Read;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid};
use crate::scalar::Real;

/// Tolerance on the weighted hermiticity residual accepted by constructors.
pub const HERMITICITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelParams {
    ExplicitMatrix { matrix: Vec<Vec<f64>> },
    ParticleInBox,
    /// `V(x) = ½ ω² x²`.
    Harmonic {
        #[serde(default = "one")]
        omega: f64,
    },
    /// `V(x) = depth · (x² − minimum²)²`.
    DoubleWell {
        #[serde(default = "one")]
        depth: f64,
        #[serde(default = "one")]
        minimum: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl ModelParams {
    pub fn name(&self) -> &'static str {
        match self {
            ModelParams::ExplicitMatrix { .. } => "explicit-matrix",
            ModelParams::ParticleInBox => "particle-in-box",
            ModelParams::Harmonic { .. } => "harmonic",
            ModelParams::DoubleWell { .. } => "double-well",
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let matrix = (0..n)
            .map(|i| (0..n).map(|j| if i == j { values[i] } else { 0.0 }).collect())
            .collect();
        ModelParams::ExplicitMatrix { matrix }
    }

    /// Reads an explicit matrix from CSV rows (no header).
    pub fn explicit_from_csv(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut matrix = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            let row = record
                .iter()
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if !row.is_empty() {
                matrix.push(row);
            }
        }
        Ok(ModelParams::ExplicitMatrix { matrix })
    }

    fn validate(&self) -> Result<()> {
        let finite = |v: f64| v.is_finite();
        match self {
            ModelParams::ExplicitMatrix { matrix } => {
                let n = matrix.len();
                if n == 0 {
                    return Err(Error::InvalidModel("empty matrix".into()));
                }
                if matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidModel("explicit matrix must be square".into()));
                }
                if !matrix.iter().flatten().copied().all(finite) {
                    return Err(Error::InvalidModel("non-finite matrix entry".into()));
                }
            }
            ModelParams::ParticleInBox => {}
            ModelParams::Harmonic { omega } => {
                if !finite(*omega) {
                    return Err(Error::InvalidModel("non-finite omega".into()));
                }
            }
            ModelParams::DoubleWell { depth, minimum } => {
                if !finite(*depth) || !finite(*minimum) {
                    return Err(Error::InvalidModel("non-finite double-well parameter".into()));
                }
            }
        }
        Ok(())
    }
}

/// Real operator matrix acting on field samples, Hermitian with respect to
/// the weighted inner product of its grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator<T> {
    matrix: DMatrix<T>,
    grid: Grid<T>,
}

/// Eigenpairs of a [`LinearOperator`], ascending, weighted-orthonormal.
#[derive(Debug, Clone)]
pub struct Eigenbasis<T> {
    pub energies: Vec<T>,
    pub states: Vec<Vec<T>>,
}

impl<T: Real> LinearOperator<T> {
    /// Wraps a matrix without checks.
    pub fn new_unchecked(matrix: DMatrix<T>, grid: Grid<T>) -> Self {
        Self { matrix, grid }
    }

    pub fn new(matrix: DMatrix<T>, grid: Grid<T>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidModel("operator matrix must be square".into()));
        }
        if matrix.nrows() != grid.dof() {
            return Err(Error::DimensionMismatch { expected: grid.dof(), got: matrix.nrows() });
        }
        let op = Self { matrix, grid };
        let residual = op.hermiticity_residual();
        if residual.as_f64() > HERMITICITY_TOL {
            return Err(Error::NotHermitian(residual.as_f64()));
        }
        Ok(op)
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `max_ij |⟨e_i, A e_j⟩ − ⟨A e_i, e_j⟩| = max_ij |w_i H_ij − w_j H_ji|`.
    pub fn hermiticity_residual(&self) -> T {
        let w = self.grid.dof_weights();
        let n = self.dim();
        let mut worst = T::zero();
        for i in 0..n {
            for j in 0..n {
                let r = (w[i] * self.matrix[(i, j)] - w[j] * self.matrix[(j, i)]).abs();
                worst = worst.max(r);
            }
        }
        worst
    }

    pub fn apply_real(&self, v: &[T]) -> Vec<T> {
        let x = DVector::from_column_slice(v);
        (&self.matrix * x).iter().copied().collect()
    }

    pub fn apply_complex(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        let re: Vec<T> = v.iter().map(|z| z.re).collect();
        let im: Vec<T> = v.iter().map(|z| z.im).collect();
        let hr = self.apply_real(&re);
        let hi = self.apply_real(&im);
        hr.into_iter().zip(hi).map(|(r, i)| Complex::new(r, i)).collect()
    }

    /// Dense diagonalization through the weight transform `W^{1/2} H W^{-1/2}`.
    pub fn eigenbasis(&self) -> Result<Eigenbasis<T>> {
        let w = self.grid.dof_weights();
        let n = self.dim();
        let sw: Vec<T> = w.iter().map(|v| v.sqrt()).collect();
        let mut s = DMatrix::from_fn(n, n, |i, j| sw[i] * self.matrix[(i, j)] / sw[j]);
        s = (&s + s.transpose()) * T::lit(0.5);
        let eig = SymmetricEigen::try_new(s, T::default_epsilon(), 0).ok_or(Error::EigenNonConvergence)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).expect("finite eigenvalues"));
        let energies = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let states = order
            .iter()
            .map(|&k| {
                let mut v: Vec<T> = (0..n).map(|i| eig.eigenvectors[(i, k)] / sw[i]).collect();
                fix_sign(&mut v);
                v
            })
            .collect();
        Ok(Eigenbasis { energies, states })
    }
}

/// Makes the first non-negligible component positive.
pub(crate) fn fix_sign<T: Real>(v: &mut [T]) {
    let scale = v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let threshold = scale * T::lit(1e-8);
    if let Some(first) = v.iter().find(|x| x.abs() > threshold) {
        if *first < T::zero() {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Builds the model operator on `grid`.
///
/// Explicit matrices are returned verbatim on a unit-weight grid of matching
/// dimension; finite-difference Hamiltonians need a Dirichlet-zero grid.
pub fn build_operator<T: Real>(params: &ModelParams, grid: &Grid<T>) -> Result<LinearOperator<T>> {
    params.validate()?;
    match params {
        ModelParams::ExplicitMatrix { matrix } => {
            let n = matrix.len();
            if grid.dof() != n {
                return Err(Error::DimensionMismatch { expected: n, got: grid.dof() });
            }
            let m = DMatrix::from_fn(n, n, |i, j| T::lit(matrix[i][j]));
            LinearOperator::new(m, Grid::unit(n)?)
        }
        ModelParams::ParticleInBox => finite_difference_hamiltonian(grid, |_| 0.0),
        ModelParams::Harmonic { omega } => {
            let w2 = omega * omega;
            finite_difference_hamiltonian(grid, move |x| 0.5 * w2 * x * x)
        }
        ModelParams::DoubleWell { depth, minimum } => {
            let (d, m2) = (*depth, minimum * minimum);
            finite_difference_hamiltonian(grid, move |x| d * (x * x - m2).powi(2))
        }
    }
}

fn finite_difference_hamiltonian<T: Real>(grid: &Grid<T>, potential: impl Fn(f64) -> f64) -> Result<LinearOperator<T>> {
    if grid.boundary() != Boundary::DirichletZero {
        return Err(Error::InvalidModel(
            "finite-difference Hamiltonians require a dirichlet-zero grid".into(),
        ));
    }
    let n = grid.dof();
    let h = grid.spacing();
    let inv_h2 = T::one() / (h * h);
    let off = -inv_h2 * T::lit(0.5);
    let xs = grid.dof_points();
    let m = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            inv_h2 + T::lit(potential(xs[i].as_f64()))
        } else if i.abs_diff(j) == 1 {
            off
        } else {
            T::zero()
        }
    });
    LinearOperator::new(m, grid.clone())
}
