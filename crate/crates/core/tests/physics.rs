mod support;

use aseshm::model::WingConfig;
use support::*;

#[test]
fn inertia_closed_forms_match_quadrature() {
    for (i, cfg) in random_wings(10, 1).iter().enumerate() {
        let dev = inertia_deviation(cfg);
        assert!(dev <= 1e-8, "config {i}: {dev:e}");
    }
}

#[test]
fn aerodynamic_closed_forms_match_strip_theory() {
    for (i, cfg) in random_wings(10, 2).iter().enumerate() {
        let dev = aero_deviation(cfg);
        assert!(dev <= 1e-8, "config {i}: {dev:e}");
    }
}

#[test]
fn still_air_frequencies_match_generalised_eigenproblem() {
    for (i, cfg) in random_wings(10, 3).iter().enumerate() {
        let dev = frequency_deviation(cfg);
        assert!(dev <= 1e-9, "config {i}: {dev:e}");
    }
}

#[test]
fn undamped_energy_is_conserved() {
    let drift = energy_drift(&WingConfig::default(), 10.0, 1e-4, 4);
    assert!(drift <= 1e-6, "{drift:e}");
}

#[test]
fn coarse_steps_leak_energy_slowly() {
    // RK4 is not symplectic; at the default step the loss stays well below 1%
    let drift = energy_drift(&WingConfig::default(), 10.0, 1e-3, 4);
    assert!(drift <= 1e-2, "{drift:e}");
}

#[test]
fn response_is_linear_in_the_command() {
    let dev = superposition_deviation(&WingConfig::default(), 5);
    assert!(dev <= 1e-9, "{dev:e}");
    for (i, cfg) in random_wings(3, 6).iter().enumerate() {
        let dev = superposition_deviation(cfg, 7);
        assert!(dev <= 1e-9, "config {i}: {dev:e}");
    }
}

#[test]
fn mass_matrix_is_exactly_symmetric() {
    assert_eq!(mass_asymmetry(&WingConfig::default()), 0.0);
    for cfg in random_wings(10, 8) {
        assert_eq!(mass_asymmetry(&cfg), 0.0);
    }
}
