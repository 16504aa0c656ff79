//! Assembly of the linear aeroservoelastic equations
//! `M_s ẍ + C_s ẋ + K_s x = G β_C`.
//!
//! Coordinates are ordered `[γ, θ, β_1..β_M, P_1..P_M]`. Pressure rows are
//! first order: they have no inertia and their `C_s` entry multiplies `Ṗ`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::aero::{aero_matrices, AeroMatrices};
use super::config::{ActuatorParams, WingConfig};
use super::inertia::inertia_integrals;
use super::stiffness::stiffness_from_frequencies;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderSystem {
    pub mass: DMatrix<f64>,
    pub damping: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    /// Maps commanded surface angles to generalised forces, `n × M`.
    pub input: DMatrix<f64>,
    /// Number of second-order (inertial) coordinates.
    pub n_coords: usize,
    /// Number of first-order actuator pressure states.
    pub n_pressures: usize,
    pub names: Vec<String>,
}

impl SecondOrderSystem {
    pub fn dim(&self) -> usize {
        self.n_coords + self.n_pressures
    }

    pub fn n_inputs(&self) -> usize {
        self.input.ncols()
    }
}

fn coordinate_names(m: usize) -> Vec<String> {
    let mut names = vec!["gamma".to_string(), "theta".to_string()];
    names.extend((1..=m).map(|j| format!("beta{j}")));
    names
}

/// Aeroelastic system without servos: surfaces restrained by rotational
/// springs `ω_β² I_ββ` and no commanded input.
pub fn aeroelastic_system(cfg: &WingConfig) -> Result<SecondOrderSystem> {
    build(cfg, false)
}

fn build(cfg: &WingConfig, actuated: bool) -> Result<SecondOrderSystem> {
    let inertias = inertia_integrals(cfg)?;
    let mass = inertias.matrix();
    let k1 = stiffness_from_frequencies(cfg, &inertias, actuated)?.matrix();
    let c1 = &mass * cfg.damping.mass + &k1 * cfg.damping.stiffness;
    let aero = aero_matrices(cfg);
    let damping = c1 - &aero.damping * AeroMatrices::damping_scale(cfg);
    let stiffness = k1 - &aero.stiffness * AeroMatrices::stiffness_scale(cfg);
    let m = cfg.n_surfaces();
    let n = mass.nrows();
    Ok(SecondOrderSystem {
        mass,
        damping,
        stiffness,
        input: DMatrix::zeros(n, m),
        n_coords: n,
        n_pressures: 0,
        names: coordinate_names(m),
    })
}

/// Appends one first-order pressure state per control surface. Each actuator
/// obeys the linearised flow equation
/// `−h A_P β̇ + (V_0/4N) Ṗ − h μ K_V √(P_s/2) β + (K_V A_F / K_F) √(P_s/2) P = −h μ K_V √(P_s/2) β_C`
/// and pushes back on its surface with hinge moment `−h A_P P`.
pub fn actuator_augment(
    sys: &SecondOrderSystem,
    act: &ActuatorParams,
    surfaces: usize,
) -> Result<SecondOrderSystem> {
    act.validate()?;
    if sys.n_pressures != 0 {
        return Err(Error::InvalidInput("system already carries actuators".into()));
    }
    if sys.n_coords != 2 + surfaces {
        return Err(Error::InvalidInput(format!(
            "expected {} coordinates for {surfaces} surfaces, found {}",
            2 + surfaces,
            sys.n_coords
        )));
    }
    let root = act.pressure_factor()?;
    let h = act.offset;
    let valve_gain = h * act.lever_ratio * act.valve_flow * root;
    let leak = act.valve_flow * act.feedback_area / act.feedback_stiffness * root;
    let compliance = act.oil_volume / (4.0 * act.bulk_modulus);

    let nq = sys.n_coords;
    let n = nq + surfaces;
    let grow = |src: &DMatrix<f64>| {
        let mut out = DMatrix::zeros(n, n);
        out.view_mut((0, 0), (nq, nq)).copy_from(src);
        out
    };
    let mass = grow(&sys.mass);
    let mut damping = grow(&sys.damping);
    let mut stiffness = grow(&sys.stiffness);
    let mut input = DMatrix::zeros(n, surfaces);
    let mut names = sys.names.clone();

    for j in 0..surfaces {
        let beta = 2 + j;
        let p = nq + j;
        stiffness[(beta, p)] = h * act.piston_area;
        damping[(p, beta)] = -h * act.piston_area;
        damping[(p, p)] = compliance;
        stiffness[(p, beta)] = -valve_gain;
        stiffness[(p, p)] = leak;
        input[(p, j)] = -valve_gain;
        names.push(format!("p{}", j + 1));
    }

    Ok(SecondOrderSystem {
        mass,
        damping,
        stiffness,
        input,
        n_coords: nq,
        n_pressures: surfaces,
        names,
    })
}

/// Full aeroservoelastic system with one hydraulic actuator per surface.
pub fn assemble(cfg: &WingConfig, act: &ActuatorParams) -> Result<SecondOrderSystem> {
    let base = build(cfg, true)?;
    actuator_augment(&base, act, cfg.n_surfaces())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::inertia::inertia_integrals;

    #[test]
    fn two_surfaces_give_four_coordinates_and_two_pressures() {
        let sys = assemble(&WingConfig::default(), &ActuatorParams::default()).unwrap();
        assert_eq!(sys.n_coords, 4);
        assert_eq!(sys.n_pressures, 2);
        assert_eq!(sys.dim(), 6);
        assert_eq!(sys.names, ["gamma", "theta", "beta1", "beta2", "p1", "p2"]);
    }

    #[test]
    fn still_air_removes_aerodynamics() {
        let cfg = WingConfig {
            airspeed: 0.0,
            ..WingConfig::default()
        };
        let sys = assemble(&cfg, &ActuatorParams::default()).unwrap();
        let inertias = inertia_integrals(&cfg).unwrap();
        let k1 = stiffness_from_frequencies(&cfg, &inertias, true).unwrap().matrix();
        let nq = sys.n_coords;
        assert_eq!(sys.stiffness.view((0, 0), (nq, nq)).clone_owned(), k1);
        assert!(sys.damping.view((0, 0), (nq, nq)).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mass_cross_terms_follow_inertia_set() {
        let cfg = WingConfig::default();
        let sys = assemble(&cfg, &ActuatorParams::default()).unwrap();
        let inertias = inertia_integrals(&cfg).unwrap();
        assert_eq!(sys.mass[(0, 2)], inertias.surfaces[0].gamma_beta);
        assert_eq!(sys.mass[(2, 3)], 0.0);
        assert_eq!(sys.mass[(3, 2)], 0.0);
        assert_eq!(sys.mass, sys.mass.transpose());
    }

    #[test]
    fn steady_state_pressure_matches_servo_balance() {
        let act = ActuatorParams::default();
        let sys = assemble(&WingConfig::default(), &act).unwrap();
        let (beta, beta_c) = (0.05, 0.02);
        // with all rates zero the pressure row reads K_pβ β + K_pp P = G β_C
        let p = 4;
        let pressure = (sys.input[(p, 0)] * beta_c - sys.stiffness[(p, 2)] * beta)
            / sys.stiffness[(p, p)];
        let expected = act.offset * act.lever_ratio * act.feedback_stiffness / act.feedback_area
            * (beta - beta_c);
        assert!((pressure - expected).abs() <= 1e-9 * expected.abs());
    }

    #[test]
    fn zero_command_zero_state_is_an_equilibrium() {
        let sys = assemble(&WingConfig::default(), &ActuatorParams::default()).unwrap();
        let x = nalgebra::DVector::zeros(sys.dim());
        let residual = &sys.stiffness * &x - &sys.input * nalgebra::DVector::zeros(2);
        assert!(residual.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reduced_supply_pressure_scales_valve_terms() {
        let healthy = ActuatorParams::default();
        let damaged = ActuatorParams {
            supply_pressure: 0.7 * healthy.supply_pressure,
            ..healthy.clone()
        };
        let cfg = WingConfig::default();
        let a = assemble(&cfg, &healthy).unwrap();
        let b = assemble(&cfg, &damaged).unwrap();
        let p = 4;
        for (x, y) in [
            (a.stiffness[(p, 2)], b.stiffness[(p, 2)]),
            (a.stiffness[(p, p)], b.stiffness[(p, p)]),
            (a.input[(p, 0)], b.input[(p, 0)]),
        ] {
            assert!((y / x - 0.7f64.sqrt()).abs() < 1e-12);
        }
        assert_eq!(a.damping[(p, p)], b.damping[(p, p)]);
        assert_eq!(a.damping[(p, 2)], b.damping[(p, 2)]);
    }

    #[test]
    fn rejects_non_positive_supply_pressure() {
        let act = ActuatorParams {
            supply_pressure: 0.0,
            ..ActuatorParams::default()
        };
        assert!(assemble(&WingConfig::default(), &act).is_err());
    }
}
