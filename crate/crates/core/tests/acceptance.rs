//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use constraint_morse::bench::*;
use constraint_morse::constrained::{cross_check_gradient, cross_check_hessian, identity_residuals};
use constraint_morse::spectral::{projected_lagrange_spectrum, tangency_residuals, SLOPE_WINDOW, ZERO_TOL};
use constraint_morse::{
    analyze, build_grid, general_constraint_map, normalization_map, quadratic_form_functional,
    Boundary, ConstraintSpec, CoupledPair, Error, Field, Functional, Grid, HessianMethod, InteractingQuadratic, LinearOperator,
    LocalDensity, ScalarMap, UChoice, Verdict,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const SEED: u64 = 42;
const TRIALS: usize = 20;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: Error) -> String {
    e.to_string()
}

fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> LinearOperator<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    LinearOperator::new((&a + a.transpose()) * 0.5, Grid::unit(n).unwrap()).unwrap()
}

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn random_complex(n: usize, rng: &mut ChaCha8Rng) -> Field<f64> {
    Field::from_real_parts(&random_vec(n, rng), &random_vec(n, rng))
}

fn quadratic_contexts() -> Vec<CaseContext> {
    shipped_cases().iter().map(|c| CaseContext::new(c).expect("shipped case")).collect()
}

fn exact_spectrum() -> Outcome {
    let t0 = Instant::now();
    let ctx = CaseContext::new(&BenchCase::diag123()).map_err(err)?;
    let energies = [1.0, 2.0, 3.0];
    let mut worst = 0.0_f64;
    for k in 0..3 {
        let a = ctx.analyze(k, &ConstraintSpec::normalization(1.0)).map_err(err)?;
        let mut expected: Vec<f64> = (0..3).filter(|&m| m != k).map(|m| energies[m] - energies[k]).collect();
        expected.sort_by(f64::total_cmp);
        let nonzero = a.spectrum.nonzero();
        ensure(nonzero.len() == 2 * expected.len(), || format!("k={k}: {} nonzero real eigenvalues", nonzero.len()))?;
        for (pair, e) in nonzero.chunks(2).zip(&expected) {
            let dev = pair.iter().fold(0.0_f64, |m, l| m.max((l - e).abs()));
            ensure(dev < 1e-10, || format!("k={k}: eigenvalues {pair:?} vs {e}"))?;
            worst = worst.max(dev);
        }
        for e in &expected {
            let mult = a.spectrum.eigenvalues.iter().filter(|l| (*l - e).abs() < 1e-6).count();
            ensure(mult == 2, || format!("k={k}: multiplicity {mult} at {e}"))?;
        }
    }
    let elapsed = t0.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("runtime {elapsed:?}"))?;
    Ok(format!("max |λ − (E_m−E_k)| = {worst:.1e}, multiplicities 2, {elapsed:.2?}"))
}

fn box_saddles() -> Outcome {
    let t0 = Instant::now();
    let table = classify_all_eigenstates(&BenchCase::particle_in_box()).map_err(err)?;
    let elapsed = t0.elapsed();
    let mut worst = 0.0_f64;
    for row in &table.rows {
        ensure(row.index_complex == Some(row.k), || format!("k={}: index {:?}", row.k, row.index_complex))?;
        if row.k > 0 {
            ensure(row.lambda_min.is_some_and(|l| l < 0.0) && row.lambda_max.is_some_and(|l| l > 0.0), || format!("k={}: no mixed signs", row.k))?;
            ensure(row.verdict == Some(Verdict::Saddle), || format!("k={}: verdict {:?}", row.k, row.verdict))?;
        }
        let residual = row.residual.unwrap_or(f64::INFINITY);
        ensure(residual < 1e-8, || format!("k={}: residual {residual:e}", row.k))?;
        worst = worst.max(residual);
    }
    ensure(table.rows.len() == 5, || "expected five rows".into())?;
    ensure(elapsed < Duration::from_secs(10), || format!("runtime {elapsed:?}"))?;
    Ok(format!("indices 0..4, level residual ≤ {worst:.1e}, {elapsed:.2?}"))
}

fn degeneracy() -> Outcome {
    let table = classify_all_eigenstates(&BenchCase::diag1224()).map_err(err)?;
    for row in &table.rows[1..3] {
        ensure(row.index_complex == Some(1), || format!("k={}: index {:?}", row.k, row.index_complex))?;
        ensure(row.zero_modes_gauge == Some(2) && row.zero_modes_degenerate == Some(2), || {
            format!("k={}: zero modes {:?} gauge, {:?} degenerate", row.k, row.zero_modes_gauge, row.zero_modes_degenerate)
        })?;
    }
    ensure(table.rows[3].index_complex == Some(3), || format!("E=4 index {:?}", table.rows[3].index_complex))?;
    Ok("E=2 states index 1 with 2 gauge + 2 degenerate zero modes; E=4 index 3".into())
}

fn ortho_shift() -> Outcome {
    let mut checked = 0;
    for case in [BenchCase::diag123(), BenchCase::diag1224()] {
        let ctx = CaseContext::new(&case).map_err(err)?;
        for l in 0..ctx.dim() {
            for k in l..ctx.dim() {
                let r = ortho_constrained_index(&ctx, k, l).map_err(err)?;
                ensure(r.holds, || format!("{} k={k} l={l}: {} vs {}", case.name, r.index_projected, r.expected))?;
                checked += 1;
            }
        }
    }
    Ok(format!("index(k; l) = index(k; 0) − (l − s) on {checked} (k, l) pairs"))
}

fn cross_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = (0.0_f64, 0.0_f64);
    let mut record = |g: f64, h: f64| {
        worst.0 = worst.0.max(g);
        worst.1 = worst.1.max(h);
    };
    let herm = random_hermitian(6, &mut rng);
    let quad = quadratic_form_functional(&herm).map_err(err)?;
    let inter = InteractingQuadratic::new(&herm, 0.7).map_err(err)?;
    let unit = herm.grid().clone();
    let norm = ConstraintSpec::normalization(1.0);
    for f in [&quad as &dyn Functional<f64>, &inter] {
        for _ in 0..TRIALS {
            let psi = normalization_map(&random_complex(6, &mut rng), 1.0, &unit).map_err(err)?;
            let dirs = [random_complex(6, &mut rng)];
            record(cross_check_gradient(f, &psi, &norm).map_err(err)?, cross_check_hessian(f, &psi, &norm, &dirs).map_err(err)?);
        }
    }
    let pair = CoupledPair::new(&herm, 0.5).map_err(err)?;
    for _ in 0..TRIALS {
        // positive entries keep ∫ab away from zero, where the map itself degenerates
        let mut positive = || (0..6).map(|_| rng.random_range(0.2..1.0)).collect::<Vec<f64>>();
        let raw = Field::Pair(positive(), positive());
        let x = normalization_map(&raw, 1.0, &unit).map_err(err)?;
        let dirs = [Field::Pair(random_vec(6, &mut rng), random_vec(6, &mut rng))];
        record(cross_check_gradient(&pair, &x, &norm).map_err(err)?, cross_check_hessian(&pair, &x, &norm, &dirs).map_err(err)?);
    }
    let grid = build_grid(12, 0.0, 1.0, Boundary::None).map_err(err)?;
    let quartic = LocalDensity::quartic(&grid, 1.0, 1.0);
    let specs = [
        ConstraintSpec::mass(0.4, UChoice::A15),
        ConstraintSpec::IntegralOf { f: ScalarMap::square(), target: 0.5, u: UChoice::A15 },
        ConstraintSpec::IntegralOf { f: ScalarMap::square(), target: 0.5, u: UChoice::Uniform },
    ];
    for spec in &specs {
        for _ in 0..TRIALS {
            let raw = Field::Real((0..12).map(|_| rng.random_range(0.55..0.85)).collect());
            let rho = general_constraint_map(&raw, spec, &grid).map_err(err)?;
            let dirs = [Field::Real(random_vec(12, &mut rng))];
            record(cross_check_gradient(&quartic, &rho, spec).map_err(err)?, cross_check_hessian(&quartic, &rho, spec, &dirs).map_err(err)?);
        }
    }
    ensure(worst.0 < 1e-6, || format!("gradient deviation {:e}", worst.0))?;
    ensure(worst.1 < 1e-5, || format!("Hessian deviation {:e}", worst.1))?;
    Ok(format!("worst relative deviation: gradient {:.1e}, Hessian action {:.1e}", worst.0, worst.1))
}

fn identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let (mut grad, mut contraction, mut products, mut integral_grad, mut integral_hess) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..TRIALS {
        let herm = random_hermitian(6, &mut rng);
        let f = quadratic_form_functional(&herm).map_err(err)?;
        let unit = herm.grid().clone();
        let psi = normalization_map(&random_complex(6, &mut rng), 1.0, &unit).map_err(err)?;
        let id = identity_residuals(&f, &psi, &ConstraintSpec::normalization(1.0)).map_err(err)?;
        grad = grad.max(id.gradient_contraction);
        contraction = contraction.max(id.hessian_contraction);
        let basis = herm.eigenbasis().map_err(err)?;
        let k = rng.random_range(0..6);
        let state = Field::complex_from_real(&basis.states[k]);
        let spec = ConstraintSpec::normalization(1.0);
        let a = analyze(&f, &state, &spec, HessianMethod::Analytic, ZERO_TOL).map_err(err)?;
        let t = tangency_residuals(&a.spectrum, &f, &state, &spec).map_err(err)?;
        products = products.max(t.iter().fold(0.0, |m, r| m.max(r.product)));
    }
    let grid = build_grid(16, 0.0, 1.0, Boundary::None).map_err(err)?;
    let quartic = LocalDensity::quartic(&grid, 1.0, 1.0);
    for _ in 0..TRIALS {
        let spec = if rng.random_bool(0.5) {
            ConstraintSpec::mass(0.7, UChoice::Uniform)
        } else {
            ConstraintSpec::IntegralOf { f: ScalarMap::square(), target: 0.5, u: UChoice::A15 }
        };
        let raw = Field::Real((0..16).map(|_| rng.random_range(0.55..0.85)).collect());
        let rho = general_constraint_map(&raw, &spec, &grid).map_err(err)?;
        let id = identity_residuals(&quartic, &rho, &spec).map_err(err)?;
        integral_grad = integral_grad.max(id.gradient_contraction);
        integral_hess = integral_hess.max(id.hessian_contraction);
    }
    ensure(grad < 1e-12, || format!("gradient identity {grad:e}"))?;
    ensure(contraction < 1e-10, || format!("Hessian contraction {contraction:e}"))?;
    ensure(products < 1e-10, || format!("λ·overlap products {products:e}"))?;
    ensure(integral_grad < 1e-10 && integral_hess < 1e-10, || format!("integral identities {integral_grad:e}, {integral_hess:e}"))?;
    Ok(format!(
        "{TRIALS} trials each: gradient {grad:.1e}, contraction {contraction:.1e}, products {products:.1e}, integral {integral_grad:.1e}/{integral_hess:.1e}"
    ))
}

fn tangency() -> Outcome {
    let mut worst = 0.0_f64;
    let mut checked = 0;
    for ctx in quadratic_contexts() {
        let spec = ConstraintSpec::normalization(1.0);
        for k in ctx.states() {
            let a = ctx.analyze(k, &spec).map_err(err)?;
            for t in &a.tangency {
                if !a.spectrum.is_zero(t.lambda) {
                    worst = worst.max(t.first_order);
                    checked += 1;
                }
            }
        }
    }
    for case in shipped_quartic_cases() {
        let grid = case.grid.build().map_err(err)?;
        let f = LocalDensity::quartic(&grid, case.alpha, case.beta);
        let rho = Field::Real(vec![case.mean_density(); grid.dof()]);
        let a = analyze(&f, &rho, &ConstraintSpec::mass(case.mass, UChoice::A15), HessianMethod::Analytic, ZERO_TOL).map_err(err)?;
        for t in &a.tangency {
            if !a.spectrum.is_zero(t.lambda) {
                worst = worst.max(t.first_order);
                checked += 1;
            }
        }
    }
    ensure(worst < 1e-8, || format!("first-order constraint residual {worst:e}"))?;
    Ok(format!("{checked} nonzero-λ eigenvectors tangent to ≤ {worst:.1e}"))
}

fn lagrange() -> Outcome {
    let mut worst = 0.0_f64;
    for ctx in quadratic_contexts() {
        let spec = ConstraintSpec::normalization(1.0);
        let results = parallel(&ctx.states(), |&k| -> std::result::Result<f64, String> {
            let a = ctx.analyze(k, &spec).map_err(err)?;
            let base = ctx.state(k).map_err(err)?;
            let p = projected_lagrange_spectrum(&ctx.functional, &base, &spec).map_err(err)?;
            let (x, y) = (a.spectrum.nonzero(), p.nonzero());
            ensure(x.len() == y.len(), || format!("{} k={k}: {} vs {} nonzero eigenvalues", ctx.case.name, x.len(), y.len()))?;
            Ok(x.iter().zip(&y).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
        });
        for r in results {
            worst = worst.max(r?);
        }
    }
    ensure(worst < 1e-9, || format!("max elementwise deviation {worst:e}"))?;
    Ok(format!("projected Lagrange spectra match to {worst:.1e} on all quadratic-form states"))
}

fn parallel<I: Sync, O: Send>(items: &[I], job: impl Fn(&I) -> O + Sync) -> Vec<O> {
    std::thread::scope(|s| {
        let handles: Vec<_> = items.iter().map(|i| s.spawn(|| job(i))).collect();
        handles.into_iter().map(|h| h.join().expect("worker")).collect()
    })
}

fn taylor_probe() -> Outcome {
    let (lo, hi) = SLOPE_WINDOW;
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    let mut phase_worst = (0.0_f64, 0.0_f64);
    for ctx in quadratic_contexts() {
        let spec = ConstraintSpec::normalization(1.0);
        let summaries = parallel(&ctx.states(), |&k| {
            let a = ctx.analyze(k, &spec).map_err(err)?;
            probe_state(&ctx, &a, k, 0, 10, SEED).map_err(err)
        });
        let mut slopes = Vec::new();
        for s in summaries {
            let s = s?;
            phase_worst.0 = phase_worst.0.max(s.phase_increment);
            phase_worst.1 = phase_worst.1.max(s.phase_increment / s.value.abs().max(1.0));
            slopes.extend(s.record.slopes().into_iter().map(|v| v.unwrap_or(f64::NAN)));
        }
        groups.push((ctx.case.name.clone(), slopes));
    }
    for case in shipped_quartic_cases() {
        let report = appendix_demo(&case, &[UChoice::A15], SEED).map_err(err)?;
        groups.push((case.name.clone(), report.probe.slopes().into_iter().map(|v| v.unwrap_or(f64::NAN)).collect()));
    }
    let inside = |s: f64| s >= lo && s <= hi;
    let range = |v: &[f64]| v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s)));
    let all: Vec<f64> = groups.iter().flat_map(|g| g.1.iter().copied()).collect();
    let (min, max) = range(&all);
    let summary = format!(
        "{} directions, slopes in [{min:.3}, {max:.3}], phase increment ≤ {:.1e} ({:.1e} relative)",
        all.len(),
        phase_worst.0,
        phase_worst.1
    );
    let bad: Vec<String> = groups
        .iter()
        .filter_map(|(name, v)| {
            let out: Vec<f64> = v.iter().copied().filter(|&s| !inside(s)).collect();
            let (a, b) = range(&out);
            (!out.is_empty()).then(|| format!("{name} {}/{} outside ({a:.3}..{b:.3})", out.len(), v.len()))
        })
        .collect();
    ensure(phase_worst.1 <= 1e-14, || format!("{summary}; phase increment above machine resolution"))?;
    ensure(bad.is_empty(), || format!("{summary}; {}", bad.join(", ")))?;
    Ok(summary)
}

fn verdict_flip() -> Outcome {
    let mut parts = Vec::new();
    for (mass, verdict) in [(1.0, Verdict::Minimum), (0.0, Verdict::Maximum)] {
        let case = QuarticCase::new(mass);
        let report = appendix_demo(&case, &[UChoice::A15, UChoice::Uniform], SEED).map_err(err)?;
        for r in &report.results {
            ensure(r.verdict == verdict, || format!("ρ̄={mass} u={}: {:?}", r.u_choice, r.verdict))?;
        }
        let bf = &report.brute_force;
        ensure(bf.probes == 10_000 && bf.sign_agreement == 1.0, || format!("ρ̄={mass}: sign agreement {} over {}", bf.sign_agreement, bf.resolved))?;
        parts.push(format!("ρ̄={mass} {verdict} ({}/{} probes agree)", bf.resolved, bf.probes));
    }
    Ok(parts.join(", "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("exact spectrum law on diag(1,2,3)", exact_spectrum),
        ("particle-in-box saddles", box_saddles),
        ("degenerate levels of diag(1,2,2,4)", degeneracy),
        ("orthogonality index shift", ortho_shift),
        ("derivative cross-checks", cross_checks),
        ("identity suite", identities),
        ("a15 tangency", tangency),
        ("projected Lagrange comparison", lagrange),
        ("Taylor probe", taylor_probe),
        ("quartic verdict flip", verdict_flip),
    ];
    let start = Instant::now();
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let dt = t0.elapsed();
        match outcome {
            Ok(msg) => println!("PASS criterion {}: {name}: {msg} [{dt:.2?}]", i + 1),
            Err(msg) => {
                failures += 1;
                println!("FAIL criterion {}: {name}: {msg} [{dt:.2?}]", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} passed in {:.2?}", criteria.len() - failures, criteria.len(), start.elapsed());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
