//! One function per subcommand. Each fills a [`ReportBundle`]; numerical
//! failures are recorded in it, configuration problems abort with [`ConfigError`].

use constraint_morse::bench::{
    appendix_demo, classify_projected_state, classify_states, ortho_constrained_index, probe_state, shipped_cases, AppendixReport,
    BenchTable, CaseContext, StateResult,
};
use constraint_morse::constrained::{cross_check_gradient, cross_check_hessian, identity_residuals};
use constraint_morse::spectral::{SpectrumReport, Verdict};
use constraint_morse::{
    general_constraint_map, normalization_map, quadratic_form_functional, ConstraintSpec, Field, Functional, InteractingQuadratic,
    LocalDensity, ModelParams, Result as CoreResult,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Command, ConstraintKind, FunctionalKind, RunConfig};
use crate::report::{DerivativeRecord, ReportBundle, SliceRecord, StateReport};
use crate::ConfigError;

/// Random probe directions per classified state.
pub const PROBE_DIRECTIONS: usize = 10;
/// Phase-direction increment relative to `max(1, |A|)`.
pub const PHASE_TOL: f64 = 1e-14;
pub const GRADIENT_IDENTITY_TOL: f64 = 1e-12;
pub const HESSIAN_IDENTITY_TOL: f64 = 1e-10;
/// Integral constraints go through nonlinear maps, so both identities get the looser bound.
pub const INTEGRAL_IDENTITY_TOL: f64 = 1e-10;
pub const TANGENT_TOL: f64 = 1e-10;
pub const TANGENCY_TOL: f64 = 1e-8;
pub const FLIP_TOL: f64 = 1e-6;
pub const SLICE_HALF_WIDTH: f64 = 0.3;
pub const SLICE_POINTS: usize = 61;

pub fn run(command: Command, cfg: &RunConfig) -> Result<ReportBundle, ConfigError> {
    cfg.validate(command)?;
    let mut bundle = ReportBundle::new(command.name(), cfg);
    match command {
        Command::Classify => classify(cfg, &mut bundle)?,
        Command::Bench => bench(cfg, &mut bundle)?,
        Command::DerivativeCheck => derivative_check(cfg, &mut bundle)?,
        Command::AppendixDemo => appendix(cfg, &mut bundle),
        Command::Slices => slices(cfg, &mut bundle)?,
    }
    Ok(bundle)
}

fn configured_context(cfg: &RunConfig) -> Result<CaseContext, ConfigError> {
    let case = cfg.case()?.ok_or_else(|| ConfigError("a [model] section is required".into()))?;
    CaseContext::new(&case).map_err(|e| ConfigError(e.to_string()))
}

/// Configured states, or every state that survives the projection.
fn selected_states(ctx: &CaseContext, l: usize) -> Vec<usize> {
    let mut states: Vec<usize> = ctx.states().into_iter().filter(|&k| k >= l).collect();
    states.sort_unstable();
    states.dedup();
    states
}

fn state_report(ctx: &CaseContext, result: StateResult, l: usize, seed: u64, bundle: &mut ReportBundle) -> StateReport {
    let StateResult { row, analysis } = result;
    let k = row.k;
    if let Some(f) = &row.failure {
        bundle.fail(format!("{} k={k}: {f}", ctx.case.name));
    } else if !row.passed {
        bundle.fail(format!("{} k={k}: tolerance exceeded", ctx.case.name));
    }
    let mut report =
        StateReport { k, energy: row.energy, row, classification: None, identities: None, probe: None, phase_increment: None };
    let Some(analysis) = analysis else { return report };
    report.classification = Some(analysis.classification.clone());
    let spec = match ctx.spec_for(l) {
        Ok(s) => s,
        Err(e) => {
            bundle.fail(format!("k={k}: {e}"));
            return report;
        }
    };
    match ctx.state(k).and_then(|psi| identity_residuals(&ctx.functional, &psi, &spec)) {
        Ok(id) => {
            if !(id.gradient_contraction < GRADIENT_IDENTITY_TOL && id.hessian_contraction < HESSIAN_IDENTITY_TOL) {
                bundle.fail(format!("k={k}: identity residuals {:e}, {:e}", id.gradient_contraction, id.hessian_contraction));
            }
            report.identities = Some(id);
        }
        Err(e) => bundle.fail(format!("k={k}: identities: {e}")),
    }
    match probe_state(ctx, &analysis, k, l, PROBE_DIRECTIONS, seed) {
        Ok(p) => {
            if let Err(e) = p.record.check_slopes() {
                bundle.fail(format!("k={k}: probe: {e}"));
            }
            let relative = p.phase_increment / p.value.abs().max(1.0);
            if !(relative <= PHASE_TOL) {
                bundle.fail(format!("k={k}: phase increment {relative:e} relative"));
            }
            report.probe = Some(p.record);
            report.phase_increment = Some(p.phase_increment);
        }
        Err(e) => bundle.fail(format!("k={k}: probe: {e}")),
    }
    report
}

fn classify(cfg: &RunConfig, bundle: &mut ReportBundle) -> Result<(), ConfigError> {
    let ctx = configured_context(cfg)?;
    let l = cfg.constraint.ortho_l;
    let states = selected_states(&ctx, l);
    for result in classify_states(&ctx, &states, l) {
        let report = state_report(&ctx, result, l, cfg.seed, bundle);
        bundle.states.push(report);
    }
    Ok(())
}

fn table(ctx: &CaseContext, l: usize, bundle: &mut ReportBundle) {
    let rows: Vec<_> = classify_states(ctx, &selected_states(ctx, l), l).into_iter().map(|r| r.row).collect();
    let table = BenchTable { case: ctx.case.name.clone(), rows };
    for row in table.rows.iter().filter(|r| !r.passed) {
        bundle.fail(format!("{} k={}: {}", table.case, row.k, row.failure.as_deref().unwrap_or("tolerance exceeded")));
    }
    bundle.tables.push(table);
}

fn bench(cfg: &RunConfig, bundle: &mut ReportBundle) -> Result<(), ConfigError> {
    let (cases, l) = match cfg.case()? {
        Some(case) => (vec![case], cfg.constraint.ortho_l),
        None => (shipped_cases(), 0),
    };
    for case in &cases {
        let ctx = match CaseContext::new(case) {
            Ok(ctx) => ctx,
            Err(e) => {
                bundle.fail(format!("{}: {e}", case.name));
                continue;
            }
        };
        table(&ctx, l, bundle);
        if matches!(case.model, ModelParams::ExplicitMatrix { .. }) {
            ortho_sweep(&ctx, bundle);
        }
    }
    Ok(())
}

/// Projected index shift over every `(k, l)` with `k ≥ l`.
fn ortho_sweep(ctx: &CaseContext, bundle: &mut ReportBundle) {
    for l in 0..ctx.dim() {
        for k in l..ctx.dim() {
            match ortho_constrained_index(ctx, k, l) {
                Ok(r) => {
                    if !r.holds {
                        bundle.fail(format!("{} k={k} l={l}: projected index {} vs {}", ctx.case.name, r.index_projected, r.expected));
                    }
                    bundle.ortho.push(r);
                }
                Err(e) => bundle.fail(format!("{} k={k} l={l}: {e}", ctx.case.name)),
            }
        }
    }
}

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn check_point(trial: usize, f: &dyn Functional<f64>, x: CoreResult<Field<f64>>, spec: &ConstraintSpec<f64>, dir: Field<f64>, integral: bool) -> DerivativeRecord {
    let mut rec = DerivativeRecord {
        trial,
        gradient_deviation: None,
        hessian_deviation: None,
        gradient_contraction: None,
        hessian_contraction: None,
        passed: false,
        failure: None,
    };
    let outcome = (|| -> CoreResult<()> {
        let x = x?;
        rec.gradient_deviation = Some(cross_check_gradient(f, &x, spec)?);
        rec.hessian_deviation = Some(cross_check_hessian(f, &x, spec, &[dir])?);
        let id = identity_residuals(f, &x, spec)?;
        rec.gradient_contraction = Some(id.gradient_contraction);
        rec.hessian_contraction = Some(id.hessian_contraction);
        Ok(())
    })();
    match outcome {
        Ok(()) => {
            let (g_tol, h_tol) = if integral { (INTEGRAL_IDENTITY_TOL, INTEGRAL_IDENTITY_TOL) } else { (GRADIENT_IDENTITY_TOL, HESSIAN_IDENTITY_TOL) };
            rec.passed = rec.gradient_contraction.is_some_and(|g| g < g_tol) && rec.hessian_contraction.is_some_and(|h| h < h_tol);
            if !rec.passed {
                rec.failure = Some("identity residual above tolerance".into());
            }
        }
        Err(e) => rec.failure = Some(e.to_string()),
    }
    rec
}

fn derivative_check(cfg: &RunConfig, bundle: &mut ReportBundle) -> Result<(), ConfigError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let trials = cfg.derivative_check.trials;
    let target = cfg.constraint.target;
    if cfg.functional.kind == FunctionalKind::Quartic {
        let grid = cfg.grid.as_ref().expect("validated").build().map_err(|e| ConfigError(e.to_string()))?;
        let f = LocalDensity::quartic(&grid, cfg.functional.alpha, cfg.functional.beta);
        debug_assert_eq!(cfg.constraint.kind, ConstraintKind::Mass);
        let spec = ConstraintSpec::mass(target, cfg.constraint.u_choice.choice());
        let n = grid.dof();
        for trial in 0..trials {
            let raw = Field::Real((0..n).map(|_| rng.random_range(0.55..0.85)).collect());
            let dir = Field::Real(random_vec(n, &mut rng));
            let x = general_constraint_map(&raw, &spec, &grid);
            bundle.derivative_checks.push(check_point(trial, &f, x, &spec, dir, true));
        }
    } else {
        let case = cfg.case()?.expect("validated");
        let op = case.operator().map_err(|e| ConfigError(e.to_string()))?;
        let quadratic;
        let interacting;
        let f: &dyn Functional<f64> = match cfg.functional.kind {
            FunctionalKind::Interacting => {
                interacting = InteractingQuadratic::new(&op, cfg.functional.gamma).map_err(|e| ConfigError(e.to_string()))?;
                &interacting
            }
            _ => {
                quadratic = quadratic_form_functional(&op).map_err(|e| ConfigError(e.to_string()))?;
                &quadratic
            }
        };
        let spec = ConstraintSpec::normalization(target);
        let n = op.dim();
        for trial in 0..trials {
            let raw = Field::from_real_parts(&random_vec(n, &mut rng), &random_vec(n, &mut rng));
            let dir = Field::from_real_parts(&random_vec(n, &mut rng), &random_vec(n, &mut rng));
            let x = normalization_map(&raw, target, op.grid());
            bundle.derivative_checks.push(check_point(trial, f, x, &spec, dir, false));
        }
    }
    let failures: Vec<String> = bundle
        .derivative_checks
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("trial {}: {}", r.trial, r.failure.as_deref().unwrap_or("failed")))
        .collect();
    for f in failures {
        bundle.fail(f);
    }
    Ok(())
}

fn check_appendix(r: &AppendixReport, bundle: &mut ReportBundle) {
    let expected = if r.expected_tangent_eigenvalue > 0.0 { Verdict::Minimum } else { Verdict::Maximum };
    for u in &r.results {
        if u.verdict != expected {
            bundle.fail(format!("{} {}: verdict {} expected {expected}", r.case, u.u_choice, u.verdict));
        }
        if !(u.tangent_deviation < TANGENT_TOL) {
            bundle.fail(format!("{} {}: tangent eigenvalues off by {:e}", r.case, u.u_choice, u.tangent_deviation));
        }
        if !(u.max_tangency_residual < TANGENCY_TOL) {
            bundle.fail(format!("{} {}: tangency residual {:e}", r.case, u.u_choice, u.max_tangency_residual));
        }
    }
    if r.brute_force.sign_agreement < 1.0 {
        bundle.fail(format!("{}: brute-force sign agreement {}", r.case, r.brute_force.sign_agreement));
    }
    if !((r.flip_estimate - r.expected_flip).abs() < FLIP_TOL) {
        bundle.fail(format!("{}: flip at {} expected {}", r.case, r.flip_estimate, r.expected_flip));
    }
    if let Err(e) = r.probe.check_slopes() {
        bundle.fail(format!("{}: probe: {e}", r.case));
    }
}

fn appendix(cfg: &RunConfig, bundle: &mut ReportBundle) {
    let choices: Vec<_> = cfg.quartic.u_choices.iter().map(|u| u.choice()).collect();
    for case in cfg.quartic.cases() {
        match appendix_demo(&case, &choices, cfg.seed) {
            Ok(r) => {
                check_appendix(&r, bundle);
                bundle.appendix.push(r);
            }
            Err(e) => bundle.fail(format!("{}: {e}", case.name)),
        }
    }
}

/// Index of the eigenvector for each slice label: smallest-|λ| negative, the
/// first zero mode, smallest positive.
fn slice_directions(spectrum: &SpectrumReport<f64>) -> [(&'static str, Option<usize>); 3] {
    let ev = &spectrum.eigenvalues;
    let negative = (0..ev.len()).rev().find(|&i| !spectrum.is_zero(ev[i]) && ev[i] < 0.0);
    let zero = (0..ev.len()).find(|&i| spectrum.is_zero(ev[i]));
    let positive = (0..ev.len()).find(|&i| !spectrum.is_zero(ev[i]) && ev[i] > 0.0);
    [("negative", negative), ("zero", zero), ("positive", positive)]
}

fn slices(cfg: &RunConfig, bundle: &mut ReportBundle) -> Result<(), ConfigError> {
    let ctx = configured_context(cfg)?;
    let k = cfg.slices.state.or(cfg.states.first().copied()).unwrap_or(1);
    if k >= ctx.dim() {
        return Err(ConfigError(format!("slice state {k} out of range for dimension {}", ctx.dim())));
    }
    let result = classify_projected_state(&ctx, k, 0);
    let Some(analysis) = result.analysis.clone() else {
        bundle.fail(format!("k={k}: missing classification: {}", result.row.failure.as_deref().unwrap_or("unknown")));
        bundle.states.push(StateReport {
            k,
            energy: result.row.energy,
            row: result.row,
            classification: None,
            identities: None,
            probe: None,
            phase_increment: None,
        });
        return Ok(());
    };
    let psi = ctx.state(k).map_err(|e| ConfigError(e.to_string()))?;
    let grid = ctx.grid();
    let tau = psi.kind().tau::<f64>();
    let steps: Vec<f64> =
        (0..SLICE_POINTS).map(|i| -SLICE_HALF_WIDTH + 2.0 * SLICE_HALF_WIDTH * i as f64 / (SLICE_POINTS - 1) as f64).collect();
    let outcome = (|| -> CoreResult<()> {
        let origin = normalization_map(&psi, 1.0, grid)?;
        for (label, index) in slice_directions(&analysis.spectrum) {
            let Some(i) = index else {
                bundle.diagnostics.push(format!("k={k}: no {label} direction"));
                continue;
            };
            let v = &analysis.spectrum.eigenvectors[i];
            let lambda = analysis.spectrum.eigenvalues[i];
            let mut actual = Vec::with_capacity(steps.len());
            for &h in &steps {
                let mapped = normalization_map(&psi.axpy(h, v), 1.0, grid)?;
                actual.push(ctx.functional.increment(&origin, &mapped));
            }
            let predicted = steps.iter().map(|h| 0.5 * tau * lambda * h * h).collect();
            bundle.slices.push(SliceRecord { k, label: label.into(), lambda, file: format!("slice-{label}.dat"), h: steps.clone(), actual, predicted });
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        bundle.fail(format!("k={k}: slice: {e}"));
    }
    bundle.states.push(StateReport {
        k,
        energy: result.row.energy,
        classification: Some(analysis.classification.clone()),
        row: result.row,
        identities: None,
        probe: None,
        phase_increment: None,
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag123() -> RunConfig {
        RunConfig::parse("[model]\nkind = \"explicit-matrix\"\nmatrix = [[1, 0, 0], [0, 2, 0], [0, 0, 3]]\n").unwrap()
    }

    #[test]
    fn classify_diag123() {
        let bundle = run(Command::Classify, &diag123()).unwrap();
        assert!(bundle.passed, "{:?}", bundle.diagnostics);
        let idx: Vec<_> = bundle.states.iter().map(|s| s.row.index_complex).collect();
        assert_eq!(idx, vec![Some(0), Some(1), Some(2)]);
    }

    #[test]
    fn projection_skips_removed_states() {
        let mut cfg = diag123();
        cfg.constraint.ortho_l = 1;
        let bundle = run(Command::Classify, &cfg).unwrap();
        assert!(bundle.passed, "{:?}", bundle.diagnostics);
        let idx: Vec<_> = bundle.states.iter().map(|s| (s.k, s.row.index_complex)).collect();
        assert_eq!(idx, vec![(1, Some(0)), (2, Some(1))]);
    }

    #[test]
    fn derivative_check_passes_on_diag123() {
        let mut cfg = diag123();
        cfg.derivative_check.trials = 3;
        let bundle = run(Command::DerivativeCheck, &cfg).unwrap();
        assert!(bundle.passed, "{:?}", bundle.diagnostics);
        assert_eq!(bundle.derivative_checks.len(), 3);
    }
}
