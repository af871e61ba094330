//! Cross-module checks through the public API.

use std::f64::consts::FRAC_1_SQRT_2;

use qdel_core::config::{derive_seed, rng_for, RunManifest, ToleranceConfig};
use qdel_core::deletion::{deletion_quality, optimal_quality, quality_bound};
use qdel_core::fidelity::{conditional_output, fidelity_report};
use qdel_core::hilbert::{density_of, partial_trace, state_fidelity, Ket, C64};
use qdel_core::machines::{
    classify_deleter, conditional_deleter, swap_deleter, BasisActionMachine, DeleterKind,
};
use qdel_core::nogo::{gram_preservation_check, verify_machine};
use qdel_core::report::{emit_report, Format, Report};
use qdel_core::sampling::haar_qubit;
use qdel_core::signalling::{bob_apply_machine_and_reduce, signalling_report};
use qdel_core::Error;

#[test]
fn machine_json_survives_round_trip_and_checks() {
    for machine in [swap_deleter(2).unwrap(), conditional_deleter()] {
        let back = BasisActionMachine::from_json(&machine.to_json()).unwrap();
        assert_eq!(back, machine);
        let plus = Ket::qubit(C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0));
        let zero = Ket::qubit(C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        let v = verify_machine(&back, &[zero, plus], 1e-12).unwrap();
        assert!(v.isometry.is_isometry);
        assert!(v.gram.max_gram_residual < 1e-12);
    }
    assert!(matches!(
        BasisActionMachine::from_json("[1, 2]"),
        Err(Error::Parse(_))
    ));
}

#[test]
fn fidelity_agrees_with_manual_trace() {
    let mut rng = rng_for(0, "pipeline", "fidelity");
    for _ in 0..20 {
        let psi = haar_qubit(&mut rng);
        let out = conditional_output(psi.amp(0), psi.amp(1)).unwrap();
        let rho = density_of(&out).unwrap();
        let rho_a = partial_trace(&rho, &[0]).unwrap();
        let x = psi.amp(0).norm_sqr();
        assert!(
            (state_fidelity(&rho_a, &psi).unwrap() - (1.0 - 2.0 * x * (1.0 - x))).abs() < 1e-12
        );
    }
    let r = fidelity_report(0.25, 8, 8).unwrap();
    assert!((r.f_b - (1.0 - 0.25 * 0.75)).abs() < 1e-12);
}

#[test]
fn quality_is_bounded_across_overlaps() {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    for overlap in [0.0, 0.5, 1.0] {
        let q = deletion_quality(h, h, 3, 2, overlap).unwrap();
        assert!(q <= quality_bound(0.5, 3, 2).unwrap() + 1e-12);
    }
}

#[test]
fn classifier_matches_gram_behaviour() {
    let swap = swap_deleter(2).unwrap();
    let verdict = classify_deleter(&swap, 30, derive_seed(1, "pipeline", "swap")).unwrap();
    assert_eq!(verdict.kind, DeleterKind::SwapLike);
    let alphabet: Vec<Ket> = {
        let mut rng = rng_for(1, "pipeline", "alphabet");
        (0..4).map(|_| haar_qubit(&mut rng)).collect()
    };
    assert!(
        gram_preservation_check(&swap, &alphabet)
            .unwrap()
            .max_gram_residual
            < 1e-12
    );
    let cond = classify_deleter(&conditional_deleter(), 30, 1).unwrap();
    assert_eq!(cond.kind, DeleterKind::ApproximateDeleter);
    assert!(cond.max_residual() > 0.0);
}

#[test]
fn legal_bob_operations_do_not_depend_on_alice() {
    // swapping Bob's second qubit into the ancilla leaves I/2 ⊗ |0><0|
    let swap = swap_deleter(2).unwrap();
    let rho = bob_apply_machine_and_reduce(0.9, &swap).unwrap();
    let reference = bob_apply_machine_and_reduce(0.0, &swap).unwrap();
    assert!(rho.max_deviation(&reference).unwrap() < 1e-12);
    assert!((rho.entry(0, 0).re - 0.5).abs() < 1e-12 && (rho.entry(2, 2).re - 0.5).abs() < 1e-12);
    let r = signalling_report(0.0, 0.9).unwrap();
    assert!((r.rho_without_deletion.1.entry(3, 3).re - 0.25).abs() < 1e-12);
}

#[test]
fn same_manifest_same_bytes() {
    let manifest = RunManifest::new(5, ToleranceConfig::default(), "quality --n 4 --m 2");
    let emit = |m: &RunManifest| {
        let q = optimal_quality(4, 2).unwrap();
        let v = classify_deleter(&conditional_deleter(), 10, m.seed).unwrap();
        (
            emit_report(&Report::Quality(q), Format::Json).unwrap(),
            emit_report(&Report::Verdict(v), Format::Json).unwrap(),
        )
    };
    assert_eq!(emit(&manifest), emit(&manifest.clone()));
    let json = serde_json::to_string(&manifest).unwrap();
    assert_eq!(
        serde_json::from_str::<RunManifest>(&json).unwrap(),
        manifest
    );
}
