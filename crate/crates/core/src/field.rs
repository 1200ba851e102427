//! Fields sampled on a grid and their real embedding.
//!
//! Every field has a real embedding `x ∈ R^D`: a real field embeds as itself,
//! a complex field `ψ = u + iv` as `[u; v]`, and a two-variable pair `(a, b)`
//! as `[a; b]`. The geometric inner product on the embedding is
//! `⟨x, y⟩_ν = Σ ν_k x_k y_k` with `ν` the grid weights repeated per block, so
//! for complex fields it is `Re ⟨φ, ψ⟩`.
//!
//! Derivatives use the functional-derivative convention
//! `G_k = (1/ω_k) ∂A/∂x_k` with `ω = τ ν`, where `τ = 2` for complex fields and
//! `τ = 1` otherwise. With that choice the embedded gradient of a complex field
//! is exactly `[Re g; Im g]` of the Wirtinger derivative `g = δA/δψ*`.

use nalgebra::DVector;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, weighted_dot, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Real,
    Complex,
    /// Two independent real variables `(a, b)`.
    Pair,
}

impl FieldKind {
    /// `ω/ν`: 2 for complex fields, 1 otherwise.
    pub fn tau<T: Real>(self) -> T {
        match self {
            FieldKind::Complex => T::lit(2.0),
            _ => T::one(),
        }
    }

    pub fn blocks(self) -> usize {
        match self {
            FieldKind::Real => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Field<T> {
    Real(Vec<T>),
    Complex(Vec<Complex<T>>),
    Pair(Vec<T>, Vec<T>),
}

impl<T: Real> Field<T> {
    pub fn kind(&self) -> FieldKind {
        match self {
            Field::Real(_) => FieldKind::Real,
            Field::Complex(_) => FieldKind::Complex,
            Field::Pair(..) => FieldKind::Pair,
        }
    }

    /// Number of grid samples (not embedded dimension).
    pub fn len(&self) -> usize {
        match self {
            Field::Real(v) => v.len(),
            Field::Complex(v) => v.len(),
            Field::Pair(a, _) => a.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn embedded_len(&self) -> usize {
        self.len() * self.kind().blocks()
    }

    pub fn zeros(kind: FieldKind, n: usize) -> Self {
        match kind {
            FieldKind::Real => Field::Real(vec![T::zero(); n]),
            FieldKind::Complex => Field::Complex(vec![Complex::new(T::zero(), T::zero()); n]),
            FieldKind::Pair => Field::Pair(vec![T::zero(); n], vec![T::zero(); n]),
        }
    }

    pub fn from_real_parts(re: &[T], im: &[T]) -> Self {
        Field::Complex(re.iter().zip(im).map(|(&r, &i)| Complex::new(r, i)).collect())
    }

    /// Complex field with zero imaginary part.
    pub fn complex_from_real(values: &[T]) -> Self {
        Field::Complex(values.iter().map(|&r| Complex::new(r, T::zero())).collect())
    }

    pub fn to_embedded(&self) -> DVector<T> {
        match self {
            Field::Real(v) => DVector::from_column_slice(v),
            Field::Complex(v) => {
                let n = v.len();
                DVector::from_fn(2 * n, |k, _| if k < n { v[k].re } else { v[k - n].im })
            }
            Field::Pair(a, b) => {
                let n = a.len();
                DVector::from_fn(2 * n, |k, _| if k < n { a[k] } else { b[k - n] })
            }
        }
    }

    pub fn from_embedded(kind: FieldKind, x: &DVector<T>) -> Self {
        match kind {
            FieldKind::Real => Field::Real(x.iter().copied().collect()),
            FieldKind::Complex => {
                let n = x.len() / 2;
                Field::Complex((0..n).map(|k| Complex::new(x[k], x[k + n])).collect())
            }
            FieldKind::Pair => {
                let n = x.len() / 2;
                Field::Pair(x.rows(0, n).iter().copied().collect(), x.rows(n, n).iter().copied().collect())
            }
        }
    }

    /// Unit vector `e_k` of the embedding.
    pub fn embedded_basis(kind: FieldKind, n: usize, k: usize) -> Self {
        let mut x = DVector::zeros(n * kind.blocks());
        x[k] = T::one();
        Self::from_embedded(kind, &x)
    }

    pub fn is_finite(&self) -> bool {
        self.to_embedded().iter().all(|v| v.finite())
    }

    /// Maps every embedded component.
    pub fn map_embedded(&self, f: impl Fn(usize, T) -> T) -> Self {
        let mut x = self.to_embedded();
        for (k, v) in x.iter_mut().enumerate() {
            *v = f(k, *v);
        }
        Self::from_embedded(self.kind(), &x)
    }

    pub fn scale(&self, s: T) -> Self {
        self.map_embedded(|_, v| v * s)
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: T, other: &Self) -> Self {
        debug_assert_eq!(self.kind(), other.kind());
        let y = other.to_embedded();
        self.map_embedded(|k, v| v + s * y[k])
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-T::one(), other)
    }

    /// Multiplies a complex field by `i`; identity for other kinds is not defined.
    pub fn times_i(&self) -> Option<Self> {
        match self {
            Field::Complex(v) => Some(Field::Complex(v.iter().map(|z| Complex::new(-z.im, z.re)).collect())),
            _ => None,
        }
    }

    /// Swaps the two variables of a pair; identity for real and complex fields.
    ///
    /// For the bilinear constraint `∫ab = n` this maps the base point to the
    /// constraint normal `δC/δ(a, b) = (b, a)` (and `δC/δψ* = ψ`).
    pub fn swap(&self) -> Self {
        match self {
            Field::Pair(a, b) => Field::Pair(b.clone(), a.clone()),
            other => other.clone(),
        }
    }

    pub fn conj(&self) -> Self {
        match self {
            Field::Complex(v) => Field::Complex(v.iter().map(|z| z.conj()).collect()),
            other => other.clone(),
        }
    }

    pub fn as_real(&self) -> Option<&[T]> {
        match self {
            Field::Real(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_complex(&self) -> Option<&[Complex<T>]> {
        match self {
            Field::Complex(v) => Some(v),
            _ => None,
        }
    }

    /// Real geometric inner product `⟨self, other⟩_ν` (weights per grid sample).
    pub fn dot(&self, other: &Self, weights: &[T]) -> T {
        debug_assert_eq!(self.kind(), other.kind());
        weighted_dot(self.to_embedded().as_slice(), other.to_embedded().as_slice(), weights)
    }

    pub fn norm(&self, weights: &[T]) -> T {
        self.dot(self, weights).sqrt()
    }

    /// Full complex inner product `Σ w conj(self) other`; real/pair fields give a real value.
    pub fn complex_dot(&self, other: &Self, weights: &[T]) -> Complex<T> {
        match (self, other) {
            (Field::Complex(a), Field::Complex(b)) => {
                let terms = || a.iter().zip(b).zip(weights).map(|((x, y), &w)| x.conj() * y * w);
                Complex::new(compensated_sum(terms().map(|z| z.re)), compensated_sum(terms().map(|z| z.im)))
            }
            _ => Complex::new(self.dot(other, weights), T::zero()),
        }
    }

    /// Bilinear pairing `π(x, y) = τ ⟨x, y⟩_ν`, the natural contraction of a
    /// gradient against an increment: `dA = π(G, d)`.
    pub fn pairing(&self, other: &Self, weights: &[T]) -> T {
        self.kind().tau::<T>() * self.dot(other, weights)
    }

    pub fn max_abs(&self) -> T {
        self.to_embedded().iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn check_len(&self, expected: usize) -> Result<()> {
        if self.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: self.len() });
        }
        if let Field::Pair(a, b) = self {
            if a.len() != b.len() {
                return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
            }
        }
        Ok(())
    }

    pub fn check_kind(&self, expected: FieldKind) -> Result<()> {
        if self.kind() != expected {
            return Err(Error::KindMismatch { expected, got: self.kind() });
        }
        Ok(())
    }
}

/// Embedded weights `ν` (grid weights repeated per block).
pub fn embedded_weights<T: Real>(kind: FieldKind, weights: &[T]) -> DVector<T> {
    let n = weights.len();
    DVector::from_fn(n * kind.blocks(), |k, _| weights[k % n])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_embedding_roundtrip() {
        let f = Field::from_real_parts(&[1.0, 2.0], &[3.0, -4.0]);
        let x = f.to_embedded();
        assert_eq!(x.as_slice(), &[1.0, 2.0, 3.0, -4.0]);
        assert_eq!(Field::from_embedded(FieldKind::Complex, &x), f);
    }

    #[test]
    fn dot_is_real_part_of_complex_inner_product() {
        let w = [0.5_f64, 2.0];
        let a = Field::from_real_parts(&[1.0, 0.5], &[-1.0, 2.0]);
        let b = Field::from_real_parts(&[0.3, -1.0], &[0.7, 0.25]);
        let c = a.complex_dot(&b, &w);
        assert!((a.dot(&b, &w) - c.re).abs() < 1e-15);
        assert!((a.times_i().unwrap().dot(&a, &w)).abs() < 1e-15);
    }

    #[test]
    fn swap_pair() {
        let p = Field::Pair(vec![1.0, 2.0], vec![3.0, 4.0]);
        assert_eq!(p.swap(), Field::Pair(vec![3.0, 4.0], vec![1.0, 2.0]));
    }
}
