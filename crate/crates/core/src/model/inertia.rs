//! Closed-form area moments of inertia of the uniform flat-plate wing.
//!
//! The wing displacement at `(x, y)` is
//! `z = y γ + (x − x_f) θ + Σ_j (x − x_h) β_j 1[y ∈ R_j] 1[x > x_h]`,
//! so every kinetic-energy coefficient is an integral of a product of two of
//! those shape functions against `dm = ρ_m t dx dy`.

use serde::{Deserialize, Serialize};

use super::config::WingConfig;
use crate::error::Result;

/// Inertia terms belonging to one control surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceInertia {
    pub beta_beta: f64,
    pub gamma_beta: f64,
    pub theta_beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InertiaSet {
    pub gamma_gamma: f64,
    pub theta_theta: f64,
    pub gamma_theta: f64,
    pub surfaces: Vec<SurfaceInertia>,
}

impl InertiaSet {
    /// Symmetric `(2 + M)²` inertia matrix in `[γ, θ, β_1..β_M]` order,
    /// row-major.
    pub fn matrix(&self) -> nalgebra::DMatrix<f64> {
        let n = 2 + self.surfaces.len();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        m[(0, 0)] = self.gamma_gamma;
        m[(1, 1)] = self.theta_theta;
        m[(0, 1)] = self.gamma_theta;
        m[(1, 0)] = self.gamma_theta;
        for (j, s) in self.surfaces.iter().enumerate() {
            let b = 2 + j;
            m[(b, b)] = s.beta_beta;
            m[(0, b)] = s.gamma_beta;
            m[(b, 0)] = s.gamma_beta;
            m[(1, b)] = s.theta_beta;
            m[(b, 1)] = s.theta_beta;
        }
        m
    }
}

pub fn inertia_integrals(cfg: &WingConfig) -> Result<InertiaSet> {
    cfg.validate()?;
    let rho_t = cfg.areal_density();
    let (s, c, xf, xh) = (cfg.span, cfg.chord, cfg.flexural_axis, cfg.hinge_axis);

    // ∫_0^c (x - x_f)^k dx
    let chord_m1 = 0.5 * ((c - xf).powi(2) - xf.powi(2));
    let chord_m2 = ((c - xf).powi(3) + xf.powi(3)) / 3.0;
    // aft of the hinge, u = x - x_h on [0, L]
    let flap = c - xh;
    let flap_m1 = 0.5 * flap * flap;
    let flap_m2 = flap.powi(3) / 3.0;
    let arm = xh - xf;

    let surfaces = cfg
        .surfaces
        .iter()
        .map(|r| {
            let mu = r.measure();
            SurfaceInertia {
                beta_beta: rho_t * mu * flap_m2,
                gamma_beta: rho_t * r.first_moment() * flap_m1,
                theta_beta: rho_t * mu * (flap_m2 + arm * flap_m1),
            }
        })
        .collect();

    Ok(InertiaSet {
        gamma_gamma: rho_t * c * s.powi(3) / 3.0,
        theta_theta: rho_t * s * chord_m2,
        gamma_theta: rho_t * 0.5 * s * s * chord_m1,
        surfaces,
    })
}
