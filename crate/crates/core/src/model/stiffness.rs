use serde::{Deserialize, Serialize};

use super::config::WingConfig;
use super::inertia::InertiaSet;
use crate::error::{Error, Result};

/// Diagonal structural stiffness entries backed out of the modal frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralStiffness {
    pub gamma: f64,
    pub theta: f64,
    pub surfaces: Vec<f64>,
}

impl StructuralStiffness {
    pub fn matrix(&self) -> nalgebra::DMatrix<f64> {
        let diag: Vec<f64> = [self.gamma, self.theta]
            .into_iter()
            .chain(self.surfaces.iter().copied())
            .collect();
        nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag))
    }
}

/// `K_qq = ω_q² I_qq`. With actuators attached the surface rotation springs
/// vanish and the servo supplies all hinge stiffness.
pub fn stiffness_from_frequencies(
    cfg: &WingConfig,
    inertias: &InertiaSet,
    actuated: bool,
) -> Result<StructuralStiffness> {
    for (name, w) in [
        ("omega_bending", cfg.omega_bending),
        ("omega_torsion", cfg.omega_torsion),
        ("omega_surface", cfg.omega_surface),
    ] {
        if !(w >= 0.0) {
            return Err(Error::InvalidConfig(format!("{name} must be >= 0, got {w}")));
        }
    }
    let surfaces = inertias
        .surfaces
        .iter()
        .map(|s| {
            if actuated {
                0.0
            } else {
                cfg.omega_surface.powi(2) * s.beta_beta
            }
        })
        .collect();
    Ok(StructuralStiffness {
        gamma: cfg.omega_bending.powi(2) * inertias.gamma_gamma,
        theta: cfg.omega_torsion.powi(2) * inertias.theta_theta,
        surfaces,
    })
}
