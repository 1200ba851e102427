//! Packaged experiments: eigenstate classification tables, the
//! orthogonality-constrained index shift, and the quartic free-energy demo.

use serde::{Deserialize, Serialize};

use crate::constrained::HessianMethod;
use crate::constraint::{ConstraintSpec, UChoice};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::functional::{quadratic_form_functional, Functional, LocalDensity, QuadraticForm};
use crate::grid::{build_grid, Boundary, Grid};
use crate::operator::{build_operator, Eigenbasis, LinearOperator, ModelParams};
use crate::sampling::{probe_directions, tangent_directions};
use crate::spectral::{
    analyze, level_difference_residual, match_eigenstates, second_order_probe, Analysis, ProbeRecord, Verdict, PROBE_STEPS,
    ZERO_TOL,
};

pub const DEFAULT_SEED: u64 = 42;
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub n_points: usize,
    pub x_min: f64,
    pub x_max: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

impl GridParams {
    pub fn new(n_points: usize, x_min: f64, x_max: f64, boundary: Boundary) -> Self {
        Self { n_points, x_min, x_max, boundary }
    }

    pub fn build(&self) -> Result<Grid<f64>> {
        build_grid(self.n_points, self.x_min, self.x_max, self.boundary)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCase {
    pub name: String,
    pub model: ModelParams,
    /// Required for finite-difference models; explicit matrices use unit weights.
    #[serde(default)]
    pub grid: Option<GridParams>,
    /// Eigenstates to classify; empty means all.
    #[serde(default)]
    pub states: Vec<usize>,
    pub tolerance: f64,
    #[serde(default = "default_zero_tol")]
    pub zero_tol: f64,
}

fn default_zero_tol() -> f64 {
    ZERO_TOL
}

impl BenchCase {
    pub fn explicit(name: &str, diagonal: &[f64]) -> Self {
        Self { name: name.into(), model: ModelParams::diagonal(diagonal), grid: None, states: Vec::new(), tolerance: 1e-10, zero_tol: ZERO_TOL }
    }

    pub fn diag123() -> Self {
        Self::explicit("diag-1-2-3", &[1.0, 2.0, 3.0])
    }

    pub fn diag1224() -> Self {
        Self::explicit("diag-1-2-2-4", &[1.0, 2.0, 2.0, 4.0])
    }

    pub fn particle_in_box() -> Self {
        Self {
            name: "particle-in-box".into(),
            model: ModelParams::ParticleInBox,
            grid: Some(GridParams::new(201, 0.0, 1.0, Boundary::DirichletZero)),
            states: (0..5).collect(),
            tolerance: 1e-8,
            zero_tol: ZERO_TOL,
        }
    }

    pub fn harmonic() -> Self {
        Self {
            name: "harmonic".into(),
            model: ModelParams::Harmonic { omega: 1.0 },
            grid: Some(GridParams::new(401, -10.0, 10.0, Boundary::DirichletZero)),
            states: (0..5).collect(),
            tolerance: 1e-8,
            zero_tol: ZERO_TOL,
        }
    }

    pub fn double_well() -> Self {
        Self {
            name: "double-well".into(),
            model: ModelParams::DoubleWell { depth: 1.0, minimum: 1.0 },
            grid: Some(GridParams::new(301, -3.0, 3.0, Boundary::DirichletZero)),
            states: (0..4).collect(),
            tolerance: 1e-8,
            zero_tol: ZERO_TOL,
        }
    }

    pub fn operator(&self) -> Result<LinearOperator<f64>> {
        let grid = match (&self.model, &self.grid) {
            (ModelParams::ExplicitMatrix { matrix }, _) => Grid::unit(matrix.len())?,
            (_, Some(g)) => g.build()?,
            (_, None) => return Err(Error::InvalidModel(format!("{} needs a grid", self.model.name()))),
        };
        build_operator(&self.model, &grid)
    }

    pub fn validate(&self) -> Result<()> {
        let op = self.operator()?;
        if let Some(&k) = self.states.iter().find(|&&k| k >= op.dim()) {
            return Err(Error::StateOutOfRange { state: k, dim: op.dim() });
        }
        Ok(())
    }
}

pub fn shipped_cases() -> Vec<BenchCase> {
    vec![BenchCase::diag123(), BenchCase::diag1224(), BenchCase::particle_in_box(), BenchCase::harmonic(), BenchCase::double_well()]
}

/// Operator, quadratic functional and eigenbasis of a case.
pub struct CaseContext {
    pub case: BenchCase,
    pub functional: QuadraticForm<f64>,
    pub basis: Eigenbasis<f64>,
}

impl CaseContext {
    pub fn new(case: &BenchCase) -> Result<Self> {
        case.validate()?;
        let op = case.operator()?;
        let functional = quadratic_form_functional(&op)?;
        let basis = op.eigenbasis()?;
        Ok(Self { case: case.clone(), functional, basis })
    }

    pub fn dim(&self) -> usize {
        self.basis.energies.len()
    }

    pub fn states(&self) -> Vec<usize> {
        if self.case.states.is_empty() {
            (0..self.dim()).collect()
        } else {
            self.case.states.clone()
        }
    }

    pub fn grid(&self) -> &Grid<f64> {
        self.functional.grid()
    }

    pub fn state(&self, k: usize) -> Result<Field<f64>> {
        if k >= self.dim() {
            return Err(Error::StateOutOfRange { state: k, dim: self.dim() });
        }
        Ok(Field::complex_from_real(&self.basis.states[k]))
    }

    fn tie_tol(&self) -> f64 {
        let scale = self.basis.energies.iter().fold(1.0_f64, |m, e| m.max(e.abs()));
        DEGENERACY_TOL * scale
    }

    /// Number of eigenvalues strictly below `E_k`.
    pub fn lower_count(&self, k: usize) -> usize {
        let ek = self.basis.energies[k];
        self.basis.energies.iter().filter(|&&e| e < ek - self.tie_tol()).count()
    }

    /// Lower levels among the states `m ≥ l` that survive projection.
    pub fn lower_count_above(&self, k: usize, l: usize) -> usize {
        let ek = self.basis.energies[k];
        self.basis.energies.iter().skip(l).filter(|&&e| e < ek - self.tie_tol()).count()
    }

    pub fn degeneracy(&self, k: usize) -> usize {
        let ek = self.basis.energies[k];
        self.basis.energies.iter().filter(|&&e| (e - ek).abs() <= self.tie_tol()).count()
    }

    /// Unit normalization, orthogonal to the lowest `l` eigenstates.
    pub fn spec_for(&self, l: usize) -> Result<ConstraintSpec<f64>> {
        if l == 0 {
            return Ok(ConstraintSpec::normalization(1.0));
        }
        if l >= self.dim() {
            return Err(Error::InvalidConstraint(format!("cannot project out {l} of {} states", self.dim())));
        }
        Ok(ConstraintSpec::orthonormal((0..l).map(|j| self.state(j)).collect::<Result<_>>()?))
    }

    pub fn analyze(&self, k: usize, spec: &ConstraintSpec<f64>) -> Result<Analysis<f64>> {
        analyze(&self.functional, &self.state(k)?, spec, HessianMethod::Analytic, self.case.zero_tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub k: usize,
    pub energy: f64,
    pub index_complex: Option<usize>,
    pub index_real: Option<usize>,
    pub zero_modes_gauge: Option<usize>,
    pub zero_modes_degenerate: Option<usize>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    /// `max_m |λ_m − (E_m − E_k)|`; absent when the spectrum does not pair up.
    pub residual: Option<f64>,
    pub verdict: Option<Verdict>,
    pub lower_count: usize,
    /// Eigenvectors whose sign disagrees with `E_m − E_k`.
    pub sign_mismatches: usize,
    /// Eigenvectors without an operator eigenstate overlapping above threshold.
    pub unmatched: usize,
    pub passed: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub case: String,
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }
}

/// Classification of one eigenstate together with its table row.
#[derive(Debug, Clone)]
pub struct StateResult {
    pub row: BenchRow,
    pub analysis: Option<Analysis<f64>>,
}

pub fn classify_state(ctx: &CaseContext, k: usize) -> StateResult {
    classify_projected_state(ctx, k, 0)
}

/// Classifies state `k` under normalization and orthogonality to the lowest
/// `l` eigenstates. Projected states show up as zero modes, so the expected
/// complex-count spectrum is `{E_m − E_k : m ≥ l}` plus `l` zeros.
pub fn classify_projected_state(ctx: &CaseContext, k: usize, l: usize) -> StateResult {
    let energy = ctx.basis.energies.get(k).copied().unwrap_or(f64::NAN);
    let lower = if k < ctx.dim() { ctx.lower_count_above(k, l) } else { 0 };
    let failed = |msg: String| BenchRow {
        k,
        energy,
        index_complex: None,
        index_real: None,
        zero_modes_gauge: None,
        zero_modes_degenerate: None,
        lambda_min: None,
        lambda_max: None,
        residual: None,
        verdict: None,
        lower_count: lower,
        sign_mismatches: 0,
        unmatched: 0,
        passed: false,
        failure: Some(msg),
    };
    if k >= ctx.dim() {
        return StateResult { row: failed(Error::StateOutOfRange { state: k, dim: ctx.dim() }.to_string()), analysis: None };
    }
    if k < l {
        return StateResult { row: failed(Error::Annihilated(k).to_string()), analysis: None };
    }
    let spec = match ctx.spec_for(l) {
        Ok(spec) => spec,
        Err(e) => return StateResult { row: failed(e.to_string()), analysis: None },
    };
    let analysis = match ctx.analyze(k, &spec) {
        Ok(a) => a,
        Err(e) => return StateResult { row: failed(e.to_string()), analysis: None },
    };
    let c = &analysis.classification;
    let ek = ctx.basis.energies[k];
    let levels: Vec<f64> = ctx.basis.energies.iter().enumerate().map(|(m, &e)| if m < l { ek } else { e }).collect();
    let residual = level_difference_residual(&analysis.spectrum, &levels, k);
    let matches = match_eigenstates(&analysis.spectrum, &ctx.basis, k, ctx.grid().dof_weights());
    let sign_mismatches = matches.iter().filter(|m| m.state.is_some_and(|s| s >= l) && m.sign_agrees == Some(false)).count();
    let unmatched = matches.iter().filter(|m| m.state.is_none()).count();
    let mut problems = Vec::new();
    match residual {
        Some(r) if r < ctx.case.tolerance => {}
        Some(r) => problems.push(format!("level residual {r:e} above {:e}", ctx.case.tolerance)),
        None => problems.push("spectrum does not pair into complex directions".into()),
    }
    if c.index_complex != Some(lower) {
        problems.push(format!("index {:?} differs from {lower} lower levels", c.index_complex));
    }
    if sign_mismatches > 0 {
        problems.push(format!("{sign_mismatches} sign mismatches"));
    }
    if lower > 0 && c.verdict == Verdict::Minimum {
        problems.push("excited state classified as minimum".into());
    }
    let row = BenchRow {
        k,
        energy,
        index_complex: c.index_complex,
        index_real: Some(c.index_real),
        zero_modes_gauge: Some(c.zero_modes_gauge),
        zero_modes_degenerate: Some(c.zero_modes_degenerate),
        lambda_min: Some(c.lambda_min),
        lambda_max: Some(c.lambda_max),
        residual,
        verdict: Some(c.verdict),
        lower_count: lower,
        sign_mismatches,
        unmatched,
        passed: problems.is_empty(),
        failure: if problems.is_empty() { None } else { Some(problems.join("; ")) },
    };
    StateResult { row, analysis: Some(analysis) }
}

/// Runs `job` over `items` on scoped threads, preserving order.
pub(crate) fn parallel_map<I: Sync, O: Send>(items: &[I], job: impl Fn(&I) -> O + Sync) -> Vec<O> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(items.len().max(1));
    if workers <= 1 {
        return items.iter().map(job).collect();
    }
    let chunk = items.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items.chunks(chunk).map(|part| scope.spawn(|| part.iter().map(&job).collect::<Vec<O>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

pub fn classify_states(ctx: &CaseContext, states: &[usize], l: usize) -> Vec<StateResult> {
    parallel_map(states, |&k| classify_projected_state(ctx, k, l))
}

pub fn classify_all_eigenstates(case: &BenchCase) -> Result<BenchTable> {
    let ctx = CaseContext::new(case)?;
    let mut states = ctx.states();
    states.sort_unstable();
    let rows = classify_states(&ctx, &states, 0).into_iter().map(|r| r.row).collect();
    Ok(BenchTable { case: case.name.clone(), rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthoReport {
    pub k: usize,
    pub l: usize,
    /// Projected-out states degenerate with `E_k`.
    pub s: usize,
    pub index_unconstrained: usize,
    pub index_projected: usize,
    pub expected: i64,
    pub holds: bool,
    pub verdict: Verdict,
    pub zero_modes_constraint: usize,
}

/// Classifies state `k` under normalization plus orthogonality to the lowest
/// `l` eigenstates and checks `index(k; l) = index(k; 0) − (l − s)`.
pub fn ortho_constrained_index(ctx: &CaseContext, k: usize, l: usize) -> Result<OrthoReport> {
    if l >= ctx.dim() {
        return Err(Error::InvalidConstraint(format!("cannot project out {l} of {} states", ctx.dim())));
    }
    if k < l {
        return Err(Error::Annihilated(k));
    }
    let basis: Vec<Field<f64>> = (0..l).map(|j| ctx.state(j)).collect::<Result<_>>()?;
    let ek = ctx.basis.energies[k];
    let s = (0..l).filter(|&j| (ctx.basis.energies[j] - ek).abs() <= ctx.tie_tol()).count();
    let plain = ctx.analyze(k, &ConstraintSpec::normalization(1.0))?;
    let projected = ctx.analyze(k, &ConstraintSpec::orthonormal(basis))?;
    let index0 = plain.classification.index_complex.ok_or(Error::OddNegativeCount(plain.classification.index_real))?;
    let index_l = projected.classification.index_complex.ok_or(Error::OddNegativeCount(projected.classification.index_real))?;
    let expected = index0 as i64 - (l as i64 - s as i64);
    Ok(OrthoReport {
        k,
        l,
        s,
        index_unconstrained: index0,
        index_projected: index_l,
        expected,
        holds: index_l as i64 == expected,
        verdict: projected.classification.verdict,
        zero_modes_constraint: projected.classification.zero_modes_constraint,
    })
}

/// Taylor probe of one eigenstate along mixed random directions, plus the
/// largest increment along the global-phase direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub k: usize,
    pub record: ProbeRecord,
    pub phase_increment: f64,
    pub value: f64,
}

pub fn probe_state(ctx: &CaseContext, analysis: &Analysis<f64>, k: usize, l: usize, count: usize, seed: u64) -> Result<ProbeSummary> {
    let spec = ctx.spec_for(l)?;
    let base = ctx.state(k)?;
    let dirs = probe_directions(&ctx.functional, &base, &spec, count, seed)?;
    let record = second_order_probe(&ctx.functional, &base, &spec, &analysis.spectrum, &dirs, &PROBE_STEPS)?;
    let phase = base.times_i().expect("complex state");
    let phase_record = second_order_probe(&ctx.functional, &base, &spec, &analysis.spectrum, &[phase], &PROBE_STEPS)?;
    let phase_increment = phase_record.directions[0].samples.iter().fold(0.0_f64, |m, s| m.max(s.actual.abs()));
    Ok(ProbeSummary { k, record, phase_increment, value: ctx.functional.value(&base) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarticCase {
    pub name: String,
    pub grid: GridParams,
    pub alpha: f64,
    pub beta: f64,
    pub mass: f64,
}

impl QuarticCase {
    pub fn new(mass: f64) -> Self {
        Self { name: format!("quartic-mass-{mass}"), grid: GridParams::new(64, 0.0, 1.0, Boundary::None), alpha: 1.0, beta: 1.0, mass }
    }

    pub fn mean_density(&self) -> f64 {
        self.mass / (self.grid.x_max - self.grid.x_min)
    }

    /// `3αρ̄² − β`.
    pub fn expected_tangent_eigenvalue(&self) -> f64 {
        let r = self.mean_density();
        3.0 * self.alpha * r * r - self.beta
    }

    /// `ρ̄ = √(β / 3α)`.
    pub fn expected_flip(&self) -> f64 {
        (self.beta / (3.0 * self.alpha)).sqrt()
    }
}

pub fn shipped_quartic_cases() -> Vec<QuarticCase> {
    [0.0, 0.3, 1.0].into_iter().map(QuarticCase::new).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UChoiceResult {
    pub u_choice: String,
    pub verdict: Verdict,
    pub index: usize,
    pub zero_modes: usize,
    /// Nonzero eigenvalues.
    pub tangent_spectrum: Vec<f64>,
    /// `max |λ − (3αρ̄² − β)|` over the nonzero eigenvalues.
    pub tangent_deviation: f64,
    pub max_tangency_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForce {
    pub probes: usize,
    pub step: f64,
    /// Probes with `|predicted ΔA|` above the resolution floor.
    pub resolved: usize,
    pub sign_agreement: f64,
    pub decreasing_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixReport {
    pub case: String,
    pub mean_density: f64,
    pub expected_tangent_eigenvalue: f64,
    /// `max |u_a15 − u_uniform|` for the identity constraint function.
    pub a15_uniform_gap: f64,
    pub results: Vec<UChoiceResult>,
    pub probe: ProbeRecord,
    pub brute_force: BruteForce,
    pub flip_estimate: f64,
    pub expected_flip: f64,
}

pub const BRUTE_FORCE_PROBES: usize = 10_000;
pub const BRUTE_FORCE_STEP: f64 = 1e-3;
pub const RESOLUTION_FLOOR: f64 = 1e-12;

fn quartic_setup(case: &QuarticCase, mass: f64) -> Result<(LocalDensity<f64>, Field<f64>)> {
    let grid = case.grid.build()?;
    let f = LocalDensity::quartic(&grid, case.alpha, case.beta);
    let rho_bar = mass / grid.length();
    Ok((f, Field::Real(vec![rho_bar; grid.dof()])))
}

fn min_tangent_eigenvalue(case: &QuarticCase, mass: f64) -> Result<f64> {
    let (f, rho) = quartic_setup(case, mass)?;
    let a = analyze(&f, &rho, &ConstraintSpec::mass(mass, UChoice::A15), HessianMethod::Analytic, ZERO_TOL)?;
    let nonzero = a.spectrum.nonzero();
    Ok(nonzero.first().copied().unwrap_or(0.0))
}

/// Locates the mean density where the tangent eigenvalue changes sign by
/// bisection on the classification pipeline.
pub fn find_flip(case: &QuarticCase, lo: f64, hi: f64) -> Result<f64> {
    let length = case.grid.x_max - case.grid.x_min;
    let (mut a, mut b) = (lo, hi);
    let sign_a = min_tangent_eigenvalue(case, a * length)? < 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        if (min_tangent_eigenvalue(case, mid * length)? < 0.0) == sign_a {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

pub fn appendix_demo(case: &QuarticCase, u_choices: &[UChoice<f64>], seed: u64) -> Result<AppendixReport> {
    let (f, rho) = quartic_setup(case, case.mass)?;
    let grid = f.grid().clone();
    let expected = case.expected_tangent_eigenvalue();
    let a15 = crate::constraint::u_weight(&crate::constraint::ScalarMap::identity(), &UChoice::A15, rho.as_real().unwrap(), &grid)?;
    let uniform = crate::constraint::u_weight(&crate::constraint::ScalarMap::identity(), &UChoice::Uniform, rho.as_real().unwrap(), &grid)?;
    let a15_uniform_gap = a15.iter().zip(&uniform).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let mut results = Vec::new();
    for u in u_choices {
        let spec = ConstraintSpec::mass(case.mass, u.clone());
        let a = analyze(&f, &rho, &spec, HessianMethod::Analytic, ZERO_TOL)?;
        let tangent = a.spectrum.nonzero();
        let tangent_deviation = tangent.iter().fold(0.0_f64, |m, l| m.max((l - expected).abs()));
        let max_tangency_residual = a
            .tangency
            .iter()
            .filter(|t| !a.spectrum.is_zero(t.lambda))
            .fold(0.0_f64, |m, t| m.max(t.first_order));
        results.push(UChoiceResult {
            u_choice: u.label().into(),
            verdict: a.classification.verdict,
            index: a.classification.index_real,
            zero_modes: a.classification.zero_modes,
            tangent_spectrum: tangent,
            tangent_deviation,
            max_tangency_residual,
        });
    }
    let spec = ConstraintSpec::mass(case.mass, UChoice::A15);
    let analysis = analyze(&f, &rho, &spec, HessianMethod::Analytic, ZERO_TOL)?;
    let dirs = probe_directions(&f, &rho, &spec, 10, seed)?;
    let probe = second_order_probe(&f, &rho, &spec, &analysis.spectrum, &dirs, &PROBE_STEPS)?;
    let brute_force = brute_force_signs(&f, &rho, &spec, &analysis, seed)?;
    let flip_estimate = find_flip(case, 0.0, 1.0)?;
    Ok(AppendixReport {
        case: case.name.clone(),
        mean_density: case.mean_density(),
        expected_tangent_eigenvalue: expected,
        a15_uniform_gap,
        results,
        probe,
        brute_force,
        flip_estimate,
        expected_flip: case.expected_flip(),
    })
}

fn brute_force_signs(
    f: &LocalDensity<f64>,
    rho: &Field<f64>,
    spec: &ConstraintSpec<f64>,
    analysis: &Analysis<f64>,
    seed: u64,
) -> Result<BruteForce> {
    let dirs = tangent_directions(f, rho, spec, BRUTE_FORCE_PROBES, seed)?;
    let record = second_order_probe(f, rho, spec, &analysis.spectrum, &dirs, &[BRUTE_FORCE_STEP])?;
    let mut resolved = 0;
    let mut agree = 0;
    let mut decreasing = 0;
    for d in &record.directions {
        let s = &d.samples[0];
        if s.predicted.abs() <= RESOLUTION_FLOOR {
            continue;
        }
        resolved += 1;
        if s.actual.signum() == s.predicted.signum() {
            agree += 1;
        }
        if s.actual < 0.0 {
            decreasing += 1;
        }
    }
    let frac = |n: usize| if resolved == 0 { 0.0 } else { n as f64 / resolved as f64 };
    Ok(BruteForce { probes: dirs.len(), step: BRUTE_FORCE_STEP, resolved, sign_agreement: frac(agree), decreasing_fraction: frac(decreasing) })
}
