//! Spectral analysis of constrained Hessians and Morse classification.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::constrained::{constrained_hessian, ConstrainedHessianOperator, HessianMethod, Setting};
use crate::constraint::ConstraintSpec;
use crate::error::{Error, Result};
use crate::field::{Field, FieldKind};
use crate::functional::{hessian_apply, Functional};
use crate::operator::{fix_sign, Eigenbasis};
use crate::scalar::Real;

pub const ZERO_TOL: f64 = 1e-8;
pub const ASYMMETRY_TOL: f64 = 1e-8;
/// Finite-difference Hessians are only symmetric to truncation accuracy.
pub const NUMERIC_ASYMMETRY_TOL: f64 = 1e-4;
pub const STATIONARITY_TOL: f64 = 1e-8;
pub const MATCH_THRESHOLD: f64 = 0.99;
pub const PROBE_STEPS: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
pub const SLOPE_WINDOW: (f64, f64) = (2.7, 3.3);

/// Zero-mode directions known in advance at a base point.
#[derive(Debug, Clone)]
pub struct KnownModes<T> {
    /// Fiber of the constraint map and, for complex fields, the global phase.
    pub gauge: Vec<DVector<T>>,
    /// Directions removed by orthogonality constraints.
    pub constraint: Vec<DVector<T>>,
}

impl<T: Real> KnownModes<T> {
    fn none() -> Self {
        Self { gauge: Vec::new(), constraint: Vec::new() }
    }

    pub(crate) fn from_setting(s: &Setting<'_, T>) -> Self {
        let mut gauge = vec![s.fiber()];
        if let Some(phase) = s.base.times_i() {
            gauge.push(phase.to_embedded());
        }
        Self { gauge, constraint: s.ortho_directions() }
    }
}

/// Weight-symmetrized real matrix `ν^{1/2} K ν^{-1/2}` of a constrained Hessian.
#[derive(Debug, Clone)]
pub struct AssembledMatrix<T: Real> {
    pub kind: FieldKind,
    pub matrix: DMatrix<T>,
    /// Embedded weights `ν`.
    pub weights: DVector<T>,
    /// Relative asymmetry before symmetrization.
    pub asymmetry: f64,
    pub stationarity: f64,
    pub multiplier: f64,
    pub known: KnownModes<T>,
}

pub fn assemble_matrix<T: Real>(hess: &ConstrainedHessianOperator<'_, T>) -> Result<AssembledMatrix<T>> {
    let n = hess.dim();
    let nu = hess.weights().clone();
    let sqrt_nu = nu.map(|v| v.sqrt());
    let mut s = DMatrix::zeros(n, n);
    let mut e = DVector::zeros(n);
    for j in 0..n {
        e[j] = T::one();
        let col = hess.apply_embedded(&e)?;
        e[j] = T::zero();
        for i in 0..n {
            s[(i, j)] = sqrt_nu[i] * col[i] / sqrt_nu[j];
        }
    }
    let scale = s.amax();
    let asym = (&s - s.transpose()).amax();
    let asymmetry = if scale > T::zero() { (asym / scale).as_f64() } else { 0.0 };
    let tol = match hess.method() {
        HessianMethod::NumericComposed => T::tol(NUMERIC_ASYMMETRY_TOL),
        _ => T::tol(ASYMMETRY_TOL),
    };
    if !asymmetry.is_finite() || asymmetry > tol {
        return Err(Error::Asymmetric(asymmetry));
    }
    let matrix = (&s + s.transpose()) * T::lit(0.5);
    let setting = hess.setting();
    let g = setting.unconstrained_gradient()?;
    let (gc, _) = setting.analytic_gradient(&g);
    let stationarity = (gc.amax() / T::one().max(g.amax())).as_f64();
    Ok(AssembledMatrix {
        kind: hess.kind(),
        matrix,
        weights: nu,
        asymmetry,
        stationarity,
        multiplier: hess.multiplier().as_f64(),
        known: KnownModes::from_setting(setting),
    })
}

#[derive(Debug, Clone)]
pub struct SpectrumReport<T: Real> {
    pub kind: FieldKind,
    /// Ascending, with multiplicity, in the real embedding.
    pub eigenvalues: Vec<T>,
    /// `ν`-orthonormal eigenvector fields.
    pub eigenvectors: Vec<Field<T>>,
    pub weights: DVector<T>,
    pub zero_tol: f64,
    /// `max |⟨v_i, v_j⟩_ν − δ_ij|`.
    pub orthogonality_residual: f64,
    /// `max ‖K v − λ v‖ / ‖K‖`.
    pub eigen_residual: f64,
    pub stationarity: f64,
    pub multiplier: f64,
    pub known: KnownModes<T>,
}

impl<T: Real> SpectrumReport<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_abs(&self) -> T {
        self.eigenvalues.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn zero_threshold(&self) -> T {
        T::lit(self.zero_tol) * self.max_abs()
    }

    pub fn is_zero(&self, lambda: T) -> bool {
        lambda.abs() < self.zero_threshold() || lambda == T::zero()
    }

    /// Eigenvalues outside the zero band.
    pub fn nonzero(&self) -> Vec<T> {
        self.eigenvalues.iter().copied().filter(|&l| !self.is_zero(l)).collect()
    }

    /// Spectrum in complex-direction count, when the real spectrum consists of
    /// equal pairs (complex-linear Hessians). `None` otherwise.
    pub fn complex_count(&self) -> Option<Vec<T>> {
        if self.kind != FieldKind::Complex || !self.dim().is_multiple_of(2) {
            return None;
        }
        let tol = T::lit(T::tol(1e-8)) * T::one().max(self.max_abs());
        let mut out = Vec::with_capacity(self.dim() / 2);
        for pair in self.eigenvalues.chunks(2) {
            if (pair[0] - pair[1]).abs() > tol {
                return None;
            }
            out.push((pair[0] + pair[1]) * T::lit(0.5));
        }
        Some(out)
    }

    fn dot(&self, a: &DVector<T>, b: &DVector<T>) -> T {
        a.iter().zip(b.iter()).zip(self.weights.iter()).fold(T::zero(), |s, ((x, y), w)| s + *w * *x * *y)
    }

    /// `Σ_i ⟨v_i, d̂⟩²` over the zero-mode eigenvectors.
    fn zero_space_overlap(&self, zero: &[usize], d: &DVector<T>) -> T {
        let norm = self.dot(d, d).sqrt();
        if norm == T::zero() {
            return T::zero();
        }
        zero.iter()
            .map(|&i| {
                let c = self.dot(&self.eigenvectors[i].to_embedded(), d) / norm;
                c * c
            })
            .fold(T::zero(), |a, b| a + b)
    }
}

fn solve_symmetric<T: Real>(matrix: DMatrix<T>) -> Result<(Vec<T>, Vec<DVector<T>>)> {
    let eig = SymmetricEigen::try_new(matrix, T::default_epsilon(), 0).ok_or(Error::EigenNonConvergence)?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    if eig.eigenvalues.iter().any(|v| !v.finite()) {
        return Err(Error::EigenNonConvergence);
    }
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).expect("finite eigenvalues"));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = order.iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect();
    Ok((values, vectors))
}

pub fn eigensolve<T: Real>(assembled: &AssembledMatrix<T>) -> Result<SpectrumReport<T>> {
    eigensolve_with(assembled, ZERO_TOL)
}

pub fn eigensolve_with<T: Real>(assembled: &AssembledMatrix<T>, zero_tol: f64) -> Result<SpectrumReport<T>> {
    let s = &assembled.matrix;
    let (values, vectors) = solve_symmetric(s.clone())?;
    let sqrt_nu = assembled.weights.map(|v| v.sqrt());
    let norm = values.iter().fold(T::zero(), |m: T, v| m.max(v.abs()));
    let mut eigen_residual = T::zero();
    let mut fields = Vec::with_capacity(values.len());
    let mut embedded = Vec::with_capacity(values.len());
    for (lambda, y) in values.iter().zip(&vectors) {
        let r = (s * y - y * *lambda).norm();
        eigen_residual = eigen_residual.max(r);
        let mut v: Vec<T> = y.iter().zip(sqrt_nu.iter()).map(|(a, w)| *a / *w).collect();
        fix_sign(&mut v);
        let v = DVector::from_vec(v);
        fields.push(Field::from_embedded(assembled.kind, &v));
        embedded.push(v);
    }
    let mut orthogonality = T::zero();
    for i in 0..embedded.len() {
        for j in i..embedded.len() {
            let g = embedded[i].iter().zip(embedded[j].iter()).zip(assembled.weights.iter()).fold(T::zero(), |s, ((a, b), w)| s + *w * *a * *b);
            let target = if i == j { T::one() } else { T::zero() };
            orthogonality = orthogonality.max((g - target).abs());
        }
    }
    let eigen_residual = if norm > T::zero() { eigen_residual / norm } else { eigen_residual };
    Ok(SpectrumReport {
        kind: assembled.kind,
        eigenvalues: values,
        eigenvectors: fields,
        weights: assembled.weights.clone(),
        zero_tol,
        orthogonality_residual: orthogonality.as_f64(),
        eigen_residual: eigen_residual.as_f64(),
        stationarity: assembled.stationarity,
        multiplier: assembled.multiplier,
        known: assembled.known.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Minimum,
    Saddle,
    Maximum,
    DegenerateInconclusive,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Minimum => "minimum",
            Verdict::Saddle => "saddle",
            Verdict::Maximum => "maximum",
            Verdict::DegenerateInconclusive => "degenerate-inconclusive",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub stationarity_residual: f64,
    pub multiplier: f64,
    /// Negative eigenvalues in the real embedding.
    pub index_real: usize,
    /// Negative complex directions; equals `index_real` for real and pair fields.
    pub index_complex: Option<usize>,
    pub zero_modes: usize,
    pub zero_modes_gauge: usize,
    pub zero_modes_constraint: usize,
    pub zero_modes_degenerate: usize,
    pub verdict: Verdict,
    /// Smallest positive eigenvalue.
    pub positivity_margin: Option<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub zero_tol: f64,
}

pub fn morse_classify<T: Real>(spectrum: &SpectrumReport<T>, zero_tol: f64) -> Result<ClassificationReport> {
    if !(spectrum.stationarity <= T::tol(STATIONARITY_TOL)) {
        return Err(Error::NotStationary(spectrum.stationarity));
    }
    let threshold = T::lit(zero_tol) * spectrum.max_abs();
    let is_zero = |l: T| l.abs() < threshold || l == T::zero();
    let zero: Vec<usize> = (0..spectrum.dim()).filter(|&i| is_zero(spectrum.eigenvalues[i])).collect();
    let negative = spectrum.eigenvalues.iter().filter(|&&l| !is_zero(l) && l < T::zero()).count();
    let positive = spectrum.eigenvalues.iter().filter(|&&l| !is_zero(l) && l > T::zero()).count();
    let index_complex = match spectrum.kind {
        FieldKind::Complex => {
            let paired = spectrum.complex_count().is_some();
            if negative % 2 == 1 {
                if paired {
                    return Err(Error::OddNegativeCount(negative));
                }
                None
            } else if paired {
                Some(negative / 2)
            } else {
                None
            }
        }
        _ => Some(negative),
    };
    let attributed = |dirs: &[DVector<T>]| {
        dirs.iter().filter(|d| spectrum.zero_space_overlap(&zero, d).as_f64() > MATCH_THRESHOLD).count()
    };
    let gauge = attributed(&spectrum.known.gauge).min(zero.len());
    let constraint = attributed(&spectrum.known.constraint).min(zero.len() - gauge);
    let degenerate = zero.len() - gauge - constraint;
    let verdict = if negative > 0 && positive > 0 {
        Verdict::Saddle
    } else if negative > 0 {
        Verdict::Maximum
    } else if degenerate > 0 {
        Verdict::DegenerateInconclusive
    } else {
        Verdict::Minimum
    };
    let positivity_margin = spectrum.eigenvalues.iter().filter(|&&l| !is_zero(l) && l > T::zero()).map(|l| l.as_f64()).next();
    Ok(ClassificationReport {
        stationarity_residual: spectrum.stationarity,
        multiplier: spectrum.multiplier,
        index_real: negative,
        index_complex,
        zero_modes: zero.len(),
        zero_modes_gauge: gauge,
        zero_modes_constraint: constraint,
        zero_modes_degenerate: degenerate,
        verdict,
        positivity_margin,
        lambda_min: spectrum.eigenvalues.first().map_or(0.0, |l| l.as_f64()),
        lambda_max: spectrum.eigenvalues.last().map_or(0.0, |l| l.as_f64()),
        zero_tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangencyRecord {
    pub lambda: f64,
    /// `|λ · ⟨base, v⟩|` (`|λ · ⟨u/f′, v⟩|` for integral constraints).
    pub product: f64,
    /// `|∫ (δC/δρ) v|`: first-order constraint residual of the eigenvector.
    pub first_order: f64,
}

pub fn tangency_residuals<T: Real>(
    spectrum: &SpectrumReport<T>,
    functional: &dyn Functional<T>,
    base: &Field<T>,
    spec: &ConstraintSpec<T>,
) -> Result<Vec<TangencyRecord>> {
    let setting = Setting::new(functional, base, spec)?;
    let normals = setting.normals();
    let fiber = setting.fiber();
    let w = functional.grid().dof_weights();
    let bilinear = matches!(spec, ConstraintSpec::Normalization { .. });
    Ok(spectrum
        .eigenvalues
        .iter()
        .zip(&spectrum.eigenvectors)
        .map(|(&lambda, v)| {
            let ve = v.to_embedded();
            let overlap = if bilinear { setting.base.complex_dot(v, w).norm_sqr().sqrt() } else { setting.dot(&fiber, &ve).abs() };
            let first_order = normals.iter().fold(T::zero(), |m, n| m.max(setting.pair(n, &ve).abs()));
            TangencyRecord {
                lambda: lambda.as_f64(),
                product: (lambda.abs() * overlap).as_f64(),
                first_order: first_order.as_f64(),
            }
        })
        .collect())
}

/// Spectrum of `P(Hess_A − μ Hess_C)P` on the first-order tangent space.
pub fn projected_lagrange_spectrum<T: Real>(
    functional: &dyn Functional<T>,
    base: &Field<T>,
    spec: &ConstraintSpec<T>,
) -> Result<SpectrumReport<T>> {
    let setting = Setting::new(functional, base, spec)?;
    let g = setting.unconstrained_gradient()?;
    let (gc, mu) = setting.analytic_gradient(&g);
    let stationarity = (gc.amax() / T::one().max(g.amax())).as_f64();
    if !(stationarity <= T::tol(STATIONARITY_TOL)) {
        return Err(Error::NotStationary(stationarity));
    }
    let n = setting.x.len();
    let nu = setting.nu.clone();
    let sqrt_nu = nu.map(|v| v.sqrt());
    // Orthonormal normals in the transformed coordinates.
    let mut normals: Vec<DVector<T>> = Vec::new();
    for normal in setting.normals() {
        let mut s = normal.component_mul(&sqrt_nu);
        for b in &normals {
            let c = b.dot(&s);
            s.axpy(-c, b, T::one());
        }
        let len = s.norm();
        if len > T::lit(1e-12) {
            normals.push(s / len);
        }
    }
    let mut projector = DMatrix::<T>::identity(n, n);
    for b in &normals {
        projector -= b * b.transpose();
    }
    let (pvals, pvecs) = solve_symmetric(projector)?;
    let tangent: Vec<DVector<T>> = pvals.iter().zip(pvecs).filter(|(v, _)| **v > T::lit(0.5)).map(|(_, y)| y).collect();
    let m = tangent.len();
    let mut basis = DMatrix::zeros(n, m);
    for (j, t) in tangent.iter().enumerate() {
        basis.set_column(j, t);
    }
    let mut lagrange = DMatrix::zeros(n, n);
    let mut e = DVector::zeros(n);
    for j in 0..n {
        e[j] = T::one() / sqrt_nu[j];
        let ha = hessian_apply(functional, &setting.base, &Field::from_embedded(setting.kind, &e))?.to_embedded();
        let hc = setting.constraint_hessian(&e);
        e[j] = T::zero();
        let col = (ha - hc * mu).component_mul(&sqrt_nu);
        lagrange.set_column(j, &col);
    }
    let lagrange = (&lagrange + lagrange.transpose()) * T::lit(0.5);
    let reduced = basis.transpose() * &lagrange * &basis;
    let (values, vectors) = solve_symmetric(reduced.clone())?;
    let norm = values.iter().fold(T::zero(), |a: T, v| a.max(v.abs()));
    let mut eigen_residual = T::zero();
    let mut fields = Vec::with_capacity(m);
    for (lambda, y) in values.iter().zip(vectors) {
        eigen_residual = eigen_residual.max((&reduced * &y - &y * *lambda).norm());
        let full = &basis * y;
        let mut v: Vec<T> = full.iter().zip(sqrt_nu.iter()).map(|(a, w)| *a / *w).collect();
        fix_sign(&mut v);
        fields.push(Field::from_embedded(setting.kind, &DVector::from_vec(v)));
    }
    Ok(SpectrumReport {
        kind: setting.kind,
        eigenvalues: values,
        eigenvectors: fields,
        weights: nu,
        zero_tol: ZERO_TOL,
        orthogonality_residual: 0.0,
        eigen_residual: if norm > T::zero() { (eigen_residual / norm).as_f64() } else { 0.0 },
        stationarity,
        multiplier: mu.as_f64(),
        known: KnownModes::none(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSample {
    pub step: f64,
    pub actual: f64,
    pub predicted: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeDirection {
    pub samples: Vec<ProbeSample>,
    /// Least-squares slope of `log residual` against `log h`; `None` when
    /// fewer than two residuals are nonzero.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub directions: Vec<ProbeDirection>,
    pub window: (f64, f64),
}

impl ProbeRecord {
    pub fn slopes(&self) -> Vec<Option<f64>> {
        self.directions.iter().map(|d| d.slope).collect()
    }

    pub fn check_slopes(&self) -> Result<()> {
        let (lo, hi) = self.window;
        for d in &self.directions {
            if let Some(slope) = d.slope {
                if !(slope >= lo && slope <= hi) {
                    return Err(Error::SlopeOutOfWindow { slope, lo, hi });
                }
            }
        }
        Ok(())
    }
}

/// Least-squares slope of `log y` against `log x` over positive `y`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Compares `A[m(base + h d)] − A[m(base)]` with the spectral second-order
/// prediction `½ τ Σ λ_i c_i² h²`, `c_i = ⟨v_i, Dm[d]⟩_ν`.
pub fn second_order_probe<T: Real>(
    functional: &dyn Functional<T>,
    base: &Field<T>,
    spec: &ConstraintSpec<T>,
    spectrum: &SpectrumReport<T>,
    directions: &[Field<T>],
    steps: &[f64],
) -> Result<ProbeRecord> {
    let setting = Setting::new(functional, base, spec)?;
    let half_tau = setting.tau * T::lit(0.5);
    let vectors: Vec<DVector<T>> = spectrum.eigenvectors.iter().map(|v| v.to_embedded()).collect();
    // Reference is m(x) so that base rounding off the constraint surface does not leak in.
    let origin = Field::from_embedded(setting.kind, &setting.map(&setting.x)?);
    let mut out = Vec::with_capacity(directions.len());
    for d in directions {
        d.check_kind(setting.kind)?;
        d.check_len(setting.base.len())?;
        let dv = d.to_embedded();
        let first = setting.map_jacobian(&dv);
        let quad = spectrum
            .eigenvalues
            .iter()
            .zip(&vectors)
            .map(|(&l, v)| {
                let c = setting.dot(v, &first);
                l * c * c
            })
            .fold(T::zero(), |a, b| a + b);
        let mut samples = Vec::with_capacity(steps.len());
        for &h in steps {
            let ht = T::lit(h);
            let mapped = setting.map(&(&setting.x + &dv * ht))?;
            let actual = functional.increment(&origin, &Field::from_embedded(setting.kind, &mapped));
            let predicted = half_tau * quad * ht * ht;
            samples.push(ProbeSample {
                step: h,
                actual: actual.as_f64(),
                predicted: predicted.as_f64(),
                residual: (actual - predicted).abs().as_f64(),
            });
        }
        let slope = log_log_slope(&samples.iter().map(|s| (s.step, s.residual)).collect::<Vec<_>>());
        out.push(ProbeDirection { samples, slope });
    }
    Ok(ProbeRecord { directions: out, window: SLOPE_WINDOW })
}

/// Full pipeline at one base point.
#[derive(Debug, Clone)]
pub struct Analysis<T: Real> {
    pub spectrum: SpectrumReport<T>,
    pub classification: ClassificationReport,
    pub tangency: Vec<TangencyRecord>,
    pub asymmetry: f64,
}

pub fn analyze<T: Real>(
    functional: &dyn Functional<T>,
    base: &Field<T>,
    spec: &ConstraintSpec<T>,
    method: HessianMethod,
    zero_tol: f64,
) -> Result<Analysis<T>> {
    let hess = constrained_hessian(functional, base, spec, method)?;
    let assembled = assemble_matrix(&hess)?;
    let spectrum = eigensolve_with(&assembled, zero_tol)?;
    let classification = morse_classify(&spectrum, zero_tol)?;
    let tangency = tangency_residuals(&spectrum, functional, hess.base(), spec)?;
    Ok(Analysis { spectrum, classification, tangency, asymmetry: assembled.asymmetry })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenMatch {
    pub eigenvector: usize,
    pub lambda: f64,
    /// Best-matching operator eigenstate, when the overlap clears the threshold.
    pub state: Option<usize>,
    pub overlap: f64,
    /// `E_state − E_k`.
    pub expected: Option<f64>,
    pub sign_agrees: Option<bool>,
}

/// Matches constrained-Hessian eigenvectors of a complex problem to operator
/// eigenstates by maximal overlap `|⟨φ_m, v⟩|²`.
pub fn match_eigenstates<T: Real>(spectrum: &SpectrumReport<T>, basis: &Eigenbasis<T>, k: usize, weights: &[T]) -> Vec<EigenMatch> {
    let states: Vec<Field<T>> = basis.states.iter().map(|s| Field::complex_from_real(s)).collect();
    let ek = basis.energies[k];
    spectrum
        .eigenvalues
        .iter()
        .zip(&spectrum.eigenvectors)
        .enumerate()
        .map(|(i, (&lambda, v))| {
            let (best, overlap) = states
                .iter()
                .enumerate()
                .map(|(m, s)| (m, s.complex_dot(v, weights).norm_sqr()))
                .fold((0, T::zero()), |acc, c| if c.1 > acc.1 { c } else { acc });
            let matched = overlap.as_f64() > MATCH_THRESHOLD;
            let expected = matched.then(|| (basis.energies[best] - ek).as_f64());
            let sign_agrees = expected.map(|e| {
                if spectrum.is_zero(lambda) {
                    e.abs() <= spectrum.zero_threshold().as_f64()
                } else {
                    (e > 0.0) == (lambda > T::zero())
                }
            });
            EigenMatch { eigenvector: i, lambda: lambda.as_f64(), state: matched.then_some(best), overlap: overlap.as_f64(), expected, sign_agrees }
        })
        .collect()
}

/// `max_m |λ_m − (E_m − E_k)|` between the complex-count spectrum and the
/// operator level differences, both sorted.
pub fn level_difference_residual<T: Real>(spectrum: &SpectrumReport<T>, energies: &[T], k: usize) -> Option<f64> {
    let lambdas = spectrum.complex_count()?;
    let mut expected: Vec<T> = energies.iter().map(|&e| e - energies[k]).collect();
    expected.sort_by(|a, b| a.partial_cmp(b).expect("finite energies"));
    if expected.len() != lambdas.len() {
        return None;
    }
    Some(lambdas.iter().zip(&expected).fold(0.0, |m, (a, b)| m.max((*a - *b).abs().as_f64())))
}
