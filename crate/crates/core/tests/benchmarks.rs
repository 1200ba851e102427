use constraint_morse::bench::*;
use constraint_morse::constraint::UChoice;
use constraint_morse::spectral::Verdict;
use constraint_morse::Error;

#[test]
fn particle_in_box_rows() {
    let table = classify_all_eigenstates(&BenchCase::particle_in_box()).unwrap();
    assert!(table.passed(), "{table:#?}");
    for (k, row) in table.rows.iter().enumerate() {
        assert_eq!(row.k, k);
        assert_eq!(row.index_complex, Some(k));
        assert!(row.residual.is_some_and(|r| r < 1e-8));
        if k > 0 {
            assert!(row.lambda_min.is_some_and(|l| l < 0.0) && row.lambda_max.is_some_and(|l| l > 0.0));
            assert_eq!(row.verdict, Some(Verdict::Saddle));
        }
    }
}

#[test]
fn harmonic_third_excited_state() {
    let case = BenchCase::harmonic();
    let ctx = CaseContext::new(&case).unwrap();
    let row = classify_state(&ctx, 3).row;
    assert!(row.passed, "{row:?}");
    assert_eq!(row.index_complex, Some(3));
    // Second-order stencil: E_n ≈ (n+½) − h²(2n²+2n+1)/32, so E_0 − E_3 ≈ −3 + 24h²/32.
    let h = ctx.grid().spacing();
    let predicted = -3.0 + 24.0 * h * h / 32.0;
    let lambda_min = row.lambda_min.unwrap();
    assert!((lambda_min - predicted).abs() < 1e-4, "{lambda_min} vs {predicted}");
    assert!((lambda_min + 3.0).abs() < 2e-3);
}

#[test]
fn double_well_tunnelling_pair_is_resolved() {
    let table = classify_all_eigenstates(&BenchCase::double_well()).unwrap();
    assert!(table.passed(), "{table:#?}");
    let idx: Vec<_> = table.rows.iter().map(|r| r.index_complex).collect();
    assert_eq!(idx, vec![Some(0), Some(1), Some(2), Some(3)]);
    assert!(table.rows.iter().all(|r| r.zero_modes_degenerate == Some(0)));
}

#[test]
fn ortho_shift_holds_for_all_pairs() {
    for case in [BenchCase::diag123(), BenchCase::diag1224()] {
        let ctx = CaseContext::new(&case).unwrap();
        for l in 0..ctx.dim() {
            for k in 0..ctx.dim() {
                match ortho_constrained_index(&ctx, k, l) {
                    Ok(r) => assert!(r.holds, "{} {r:?}", case.name),
                    Err(Error::Annihilated(_)) => assert!(k < l),
                    Err(e) => panic!("{} k={k} l={l}: {e}", case.name),
                }
            }
        }
        assert!(ortho_constrained_index(&ctx, 0, ctx.dim()).is_err());
    }
}

#[test]
fn out_of_range_state_is_rejected() {
    let mut case = BenchCase::diag123();
    case.states = vec![3];
    assert!(matches!(classify_all_eigenstates(&case), Err(Error::StateOutOfRange { state: 3, dim: 3 })));
}

#[test]
fn appendix_regimes() {
    let choices = [UChoice::A15, UChoice::Uniform];
    for case in shipped_quartic_cases() {
        let report = appendix_demo(&case, &choices, DEFAULT_SEED).unwrap();
        assert_eq!(report.a15_uniform_gap, 0.0);
        assert!((report.flip_estimate - report.expected_flip).abs() < 1e-12);
        let expected_verdict = if report.expected_tangent_eigenvalue > 0.0 { Verdict::Minimum } else { Verdict::Maximum };
        for r in &report.results {
            assert_eq!(r.verdict, expected_verdict, "{} {}", case.name, r.u_choice);
            assert_eq!(r.tangent_spectrum.len(), 63);
            assert!(r.tangent_deviation < 1e-10);
            assert!(r.max_tangency_residual < 1e-8);
        }
        let bf = &report.brute_force;
        assert_eq!(bf.probes, BRUTE_FORCE_PROBES);
        assert_eq!(bf.sign_agreement, 1.0);
        let decreasing = if expected_verdict == Verdict::Minimum { 0.0 } else { 1.0 };
        assert_eq!(bf.decreasing_fraction, decreasing);
    }
}

#[test]
fn appendix_tangent_eigenvalues_at_the_two_ends() {
    let at = |mass: f64| appendix_demo(&QuarticCase::new(mass), &[UChoice::A15], DEFAULT_SEED).unwrap();
    let top = at(1.0);
    assert!(top.results[0].tangent_spectrum.iter().all(|l| (l - 2.0).abs() < 1e-10));
    let bottom = at(0.0);
    assert!(bottom.results[0].tangent_spectrum.iter().all(|l| (l + 1.0).abs() < 1e-10));
}
