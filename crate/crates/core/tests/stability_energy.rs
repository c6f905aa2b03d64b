use elasto_core::dynamics::scenarios::{build, default_params, Scenario, ScenarioSpec};
use elasto_core::dynamics::{assemble_pressure, step};
use elasto_core::energy::{difference_energy, energy_es_eps, regularized_size, EnergyReport};
use elasto_core::harness::CSV_COLUMNS;
use elasto_core::stability::stability_report;
use elasto_core::{Error, SlabGrid};

fn grid() -> SlabGrid {
    SlabGrid::new(16, 4, 8).unwrap()
}

fn state(scenario: Scenario, eps: f64) -> elasto_core::dynamics::FlowState {
    build(&ScenarioSpec::new(scenario), &grid(), eps, default_params(scenario)).unwrap()
}

#[test]
fn energy_columns_are_part_of_the_csv() {
    for name in EnergyReport::COLUMNS {
        assert!(CSV_COLUMNS.contains(&name), "{name}");
    }
}

#[test]
fn energy_terms_are_nonnegative() {
    for (scenario, eps) in [
        (Scenario::ElasticMode, 0.0),
        (Scenario::EpsMode, 0.1),
        (Scenario::MixedRegions, 0.01),
    ] {
        let e = energy_es_eps(&state(scenario, eps), 4).unwrap();
        for v in e.values() {
            assert!(v >= 0.0, "{scenario:?}: {e:?}");
        }
        assert!(e.total() > 0.0);
        assert!(e.weight_min <= e.weight_max);
    }
}

#[test]
fn capillary_term_vanishes_without_regularization() {
    let e = energy_es_eps(&state(Scenario::ElasticMode, 0.0), 4).unwrap();
    assert_eq!(e.capillary, 0.0);
    assert_eq!(e.total(), e.total_unregularized());
    let e = energy_es_eps(&state(Scenario::EpsMode, 0.1), 4).unwrap();
    assert!(e.capillary > 0.0);
}

#[test]
fn low_sobolev_index_is_rejected() {
    let s = state(Scenario::ElasticMode, 0.0);
    assert!(matches!(energy_es_eps(&s, 3), Err(Error::InvalidParameter(_))));
    assert!(matches!(difference_energy(&s, &s, 3), Err(Error::InvalidParameter(_))));
}

#[test]
fn difference_energy_of_a_state_with_itself_is_zero() {
    let s = state(Scenario::MixedRegions, 0.01);
    let d = difference_energy(&s, &s, 4).unwrap();
    assert!(d.total().abs() < 1e-20, "{d:?}");
}

#[test]
fn difference_energy_grows_with_separation() {
    let s = state(Scenario::ElasticMode, 0.0);
    let (a, _) = step(&s, 0.005).unwrap();
    let (b, _) = step(&a, 0.005).unwrap();
    let near = difference_energy(&s, &a, 4).unwrap().total();
    let far = difference_energy(&s, &b, 4).unwrap().total();
    assert!(near > 0.0 && far > near, "{near} {far}");
}

#[test]
fn regularized_size_counts_the_eps_term() {
    let a = state(Scenario::EpsMode, 0.0);
    let b = state(Scenario::EpsMode, 0.5);
    assert!(regularized_size(&b, 4) > regularized_size(&a, 4));
}

#[test]
fn stability_report_on_presets() {
    let s = state(Scenario::ElasticMode, 0.0);
    let r = stability_report(&s, &assemble_pressure(&s).unwrap());
    // No Taylor region; Lambda is 1 for the identity-like deformation.
    assert!(r.taylor_min.is_infinite());
    assert!(r.lambda_ok && r.passed());
    assert_eq!(r.threshold, 0.05);

    // The regions are smoothed over ~4 cells; resolve them.
    let fine = SlabGrid::new(32, 4, 12).unwrap();
    let spec = ScenarioSpec::new(Scenario::MixedRegions);
    let s = build(&spec, &fine, 0.0, default_params(Scenario::MixedRegions)).unwrap();
    let r = stability_report(&s, &assemble_pressure(&s).unwrap());
    assert!(r.passed(), "{r:?}");
    assert!(r.taylor_min.is_finite() && r.lambda_min.is_finite());

    let s = state(Scenario::Rest, 0.0);
    let r = stability_report(&s, &assemble_pressure(&s).unwrap());
    // No deformation: Lambda vanishes on the default region.
    assert!(!r.lambda_ok);
}
