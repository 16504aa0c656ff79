//! Quasi-steady strip-theory generalised forces.
//!
//! Lift, pitching moment and hinge moment per unit span are integrated
//! through the virtual work `δW = −∫ y dL δγ + ∫ dM δθ + Σ_j ∫_{R_j} dH δβ_j`.
//! The resulting forces are split as `Q = (ρ c V / 4) C_2 q̇ + (ρ V² / 2) K_2 q`
//! so that both `C_2` and `K_2` are independent of density and airspeed.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::config::WingConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AeroMatrices {
    /// Velocity-proportional block `C_2`.
    pub damping: DMatrix<f64>,
    /// Displacement-proportional block `K_2`.
    pub stiffness: DMatrix<f64>,
}

impl AeroMatrices {
    /// Factor multiplying `C_2` at the configured flight condition.
    pub fn damping_scale(cfg: &WingConfig) -> f64 {
        cfg.air_density * cfg.chord * cfg.airspeed / 4.0
    }

    /// Factor multiplying `K_2` at the configured flight condition.
    pub fn stiffness_scale(cfg: &WingConfig) -> f64 {
        0.5 * cfg.air_density * cfg.airspeed * cfg.airspeed
    }
}

pub fn aero_matrices(cfg: &WingConfig) -> AeroMatrices {
    let n = 2 + cfg.n_surfaces();
    let (s, c) = (cfg.span, cfg.chord);
    let k = &cfg.aero;
    let mut damp = DMatrix::zeros(n, n);
    let mut stiff = DMatrix::zeros(n, n);

    // bending row: −∫ y dL
    damp[(0, 0)] = -2.0 * k.lift_slope * s.powi(3) / 3.0;
    stiff[(0, 1)] = -c * k.lift_slope * s * s / 2.0;

    // twist row: ∫ dM
    damp[(1, 0)] = c * k.lift_slope * k.eccentricity * s * s;
    damp[(1, 1)] = 2.0 * c * c * k.pitch_damping * s;
    stiff[(1, 1)] = c * c * k.lift_slope * k.eccentricity * s;

    for (j, r) in cfg.surfaces.iter().enumerate() {
        let b = 2 + j;
        let mu = r.measure();
        let m1 = r.first_moment();
        stiff[(0, b)] = -c * k.control_lift * m1;
        stiff[(1, b)] = c * c * k.control_moment * mu;

        // hinge row: ∫_{R_j} dH
        damp[(b, 0)] = 2.0 * c * k.hinge_incidence * m1;
        damp[(b, b)] = 2.0 * c * c * k.surface_damping * mu;
        stiff[(b, 1)] = c * c * k.hinge_incidence * mu;
        stiff[(b, b)] = c * c * k.hinge_deflection * mu;
    }

    AeroMatrices {
        damping: damp,
        stiffness: stiff,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::config::{AeroCoefficients, SurfaceSpan};

    #[test]
    fn clean_wing_bending_damping_uses_cubic_span_moment() {
        let cfg = WingConfig {
            surfaces: vec![],
            ..WingConfig::default()
        };
        let m = aero_matrices(&cfg);
        assert_eq!(m.damping.nrows(), 2);
        let s = cfg.span;
        let expected = -2.0 * cfg.aero.lift_slope * (s.powi(3) / 3.0);
        assert!((m.damping[(0, 0)] - expected).abs() < 1e-12);
    }

    #[test]
    fn no_control_coupling_without_control_coefficients() {
        let cfg = WingConfig {
            aero: AeroCoefficients {
                control_lift: 0.0,
                control_moment: 0.0,
                hinge_incidence: 0.0,
                hinge_deflection: 0.0,
                ..AeroCoefficients::default()
            },
            ..WingConfig::default()
        };
        let m = aero_matrices(&cfg);
        for b in 2..m.damping.nrows() {
            for q in 0..2 {
                assert_eq!(m.stiffness[(q, b)], 0.0);
                assert_eq!(m.stiffness[(b, q)], 0.0);
                assert_eq!(m.damping[(q, b)], 0.0);
                assert_eq!(m.damping[(b, q)], 0.0);
            }
        }
    }

    #[test]
    fn unweighted_surface_terms_scale_with_measure() {
        let narrow = WingConfig {
            surfaces: vec![SurfaceSpan::new(2.0, 3.0)],
            ..WingConfig::default()
        };
        let wide = WingConfig {
            surfaces: vec![SurfaceSpan::new(2.0, 4.0)],
            ..WingConfig::default()
        };
        let (a, b) = (aero_matrices(&narrow), aero_matrices(&wide));
        for (r, c) in [(1, 2), (2, 1), (2, 2)] {
            assert!((b.stiffness[(r, c)] - 2.0 * a.stiffness[(r, c)]).abs() < 1e-12);
        }
        // the bending row carries the moment arm y, so it follows ∫ y dy instead
        let ratio = b.stiffness[(0, 2)] / a.stiffness[(0, 2)];
        let expected = wide.surfaces[0].first_moment() / narrow.surfaces[0].first_moment();
        assert!((ratio - expected).abs() < 1e-12);
    }
}
