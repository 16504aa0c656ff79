//! Model-physics checks shared by the physics tests and the acceptance run.
//! Each check returns the worst deviation it saw so callers can choose
//! between asserting and reporting.

#![allow(dead_code)]

use std::f64::consts::TAU;

use aseshm::model::{aero_matrices, aeroelastic_system, assemble, inertia_integrals, to_state_space, ActuatorParams,
    AeroMatrices, SurfaceSpan, WingConfig};
use aseshm::simulator::{simulate, AngleBounds, Event, InputSchedule};
use aseshm_oracles::{self as oracle, Plate, SplitMix, StripWing};
use nalgebra::{DMatrix, DVector};

const PANELS: usize = 8;

/// A valid wing with randomised geometry, frequencies, aerodynamics and
/// one to three non-overlapping control surfaces.
pub fn random_wing(rng: &mut SplitMix) -> WingConfig {
    let mut u = |lo: f64, hi: f64| lo + (hi - lo) * rng.uniform();
    let span = u(3.0, 12.0);
    let chord = u(0.8, 3.0);
    let flexural_axis = chord * u(0.2, 0.5);
    let hinge_axis = chord * u(0.6, 0.9);
    let n_surfaces = 1 + (u(0.0, 3.0) as usize).min(2);
    let width = span / n_surfaces as f64;
    let surfaces = (0..n_surfaces)
        .map(|j| {
            let base = j as f64 * width;
            let a = base + width * u(0.0, 0.4);
            let b = base + width * u(0.6, 1.0);
            SurfaceSpan::new(a, b)
        })
        .collect();
    let mut cfg = WingConfig {
        span,
        chord,
        thickness: u(0.01, 0.08),
        material_density: u(500.0, 3000.0),
        air_density: u(0.4, 1.3),
        flexural_axis,
        hinge_axis,
        airspeed: u(10.0, 60.0),
        omega_bending: TAU * u(2.0, 8.0),
        omega_torsion: TAU * u(8.0, 15.0),
        omega_surface: TAU * u(15.0, 25.0),
        surfaces,
        ..WingConfig::default()
    };
    let a = &mut cfg.aero;
    a.lift_slope = u(4.0, 7.0);
    a.control_lift = u(1.0, 4.0);
    a.control_moment = -u(0.2, 1.0);
    a.hinge_incidence = -u(0.05, 0.3);
    a.hinge_deflection = -u(0.2, 0.8);
    a.eccentricity = u(0.1, 0.3);
    a.pitch_damping = -u(0.5, 2.0);
    a.surface_damping = -u(0.05, 0.5);
    cfg
}

pub fn random_wings(n: usize, seed: u64) -> Vec<WingConfig> {
    let mut rng = SplitMix::new(seed);
    (0..n).map(|_| random_wing(&mut rng)).collect()
}

fn plate(cfg: &WingConfig) -> Plate {
    Plate {
        span: cfg.span,
        chord: cfg.chord,
        areal_density: cfg.areal_density(),
        flexural_axis: cfg.flexural_axis,
        hinge_axis: cfg.hinge_axis,
        surfaces: cfg.surfaces.iter().map(|r| (r.start, r.end)).collect(),
    }
}

fn strip(cfg: &WingConfig) -> StripWing {
    let k = &cfg.aero;
    StripWing {
        plate: plate(cfg),
        air_density: cfg.air_density,
        airspeed: cfg.airspeed,
        a: k.lift_slope,
        a_c: k.control_lift,
        a_m: k.control_moment,
        b_1: k.hinge_incidence,
        b_2: k.hinge_deflection,
        e: k.eccentricity,
        m_thetadot: k.pitch_damping,
        m_betadot: k.surface_damping,
    }
}

/// Entrywise relative deviation, with entries far below the matrix scale
/// compared against that scale instead.
fn rel_dev(ours: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    let floor = 1e-12 * reference.amax().max(f64::MIN_POSITIVE);
    ours.iter()
        .zip(reference.iter())
        .map(|(a, b)| (a - b).abs() / b.abs().max(floor))
        .fold(0.0, f64::max)
}

/// Closed-form inertia matrix against 2-D quadrature of the kinetic energy.
pub fn inertia_deviation(cfg: &WingConfig) -> f64 {
    let ours = inertia_integrals(cfg).unwrap().matrix();
    rel_dev(&ours, &plate(cfg).mass_matrix(PANELS))
}

/// Closed-form aerodynamic blocks against strip-theory virtual work,
/// probed one coordinate at a time.
pub fn aero_deviation(cfg: &WingConfig) -> f64 {
    let ours = aero_matrices(cfg);
    let wing = strip(cfg);
    let n = ours.damping.nrows();
    let (cs, ks) = (AeroMatrices::damping_scale(cfg), AeroMatrices::stiffness_scale(cfg));
    let mut damping = DMatrix::zeros(n, n);
    let mut stiffness = DMatrix::zeros(n, n);
    let zero = vec![0.0; n];
    for j in 0..n {
        let mut e = zero.clone();
        e[j] = 1.0;
        let from_q = wing.generalised_forces(&e, &zero, PANELS);
        let from_qd = wing.generalised_forces(&zero, &e, PANELS);
        for i in 0..n {
            stiffness[(i, j)] = from_q[i] / ks;
            damping[(i, j)] = from_qd[i] / cs;
        }
    }
    rel_dev(&ours.damping, &damping).max(rel_dev(&ours.stiffness, &stiffness))
}

fn still_air(cfg: &WingConfig) -> WingConfig {
    WingConfig {
        airspeed: 0.0,
        damping: Default::default(),
        ..cfg.clone()
    }
}

/// Still-air natural frequencies of the state-space model against the
/// generalised eigenproblem built from quadrature inertia.
pub fn frequency_deviation(cfg: &WingConfig) -> f64 {
    let cfg = still_air(cfg);
    let ss = to_state_space(&aeroelastic_system(&cfg).unwrap()).unwrap();
    let mut ours: Vec<f64> = ss.eigenvalues().iter().filter(|z| z.im > 0.0).map(|z| z.im).collect();
    ours.sort_by(f64::total_cmp);

    let mass = plate(&cfg).mass_matrix(PANELS);
    let n = mass.nrows();
    let mut omega = vec![cfg.omega_bending, cfg.omega_torsion];
    omega.resize(n, cfg.omega_surface);
    let stiffness = DMatrix::from_diagonal(&DVector::from_iterator(n, (0..n).map(|i| omega[i].powi(2) * mass[(i, i)])));
    let reference = oracle::generalised_frequencies(&mass, &stiffness);
    if ours.len() != reference.len() {
        return f64::INFINITY;
    }
    ours.iter().zip(&reference).map(|(a, b)| (a - b).abs() / b).fold(0.0, f64::max)
}

fn hold(surfaces: usize, angles: &[f64], seconds: f64) -> InputSchedule {
    InputSchedule {
        mode: "manual".into(),
        bounds: AngleBounds::full(90.0),
        events: angles
            .chunks(surfaces)
            .map(|a| Event {
                angles_deg: a.to_vec(),
                hold: seconds,
            })
            .collect(),
    }
}

/// Largest relative change of `½ q̇ᵀ M q̇ + ½ qᵀ K q` along an undriven,
/// undamped still-air trajectory.
pub fn energy_drift(cfg: &WingConfig, seconds: f64, dt: f64, seed: u64) -> f64 {
    let cfg = still_air(cfg);
    let sys = aeroelastic_system(&cfg).unwrap();
    let ss = to_state_space(&sys).unwrap();
    let n = sys.n_coords;
    let mut rng = SplitMix::new(seed);
    let x0: Vec<f64> = (0..2 * n).map(|_| 0.01 * rng.normal()).collect();
    let schedule = hold(cfg.n_surfaces(), &vec![0.0; cfg.n_surfaces()], seconds);
    let traj = simulate(&ss, &schedule, dt, Some(&x0)).unwrap();
    let energy = |x: &[f64]| {
        let q = DVector::from_column_slice(&x[..n]);
        let qd = DVector::from_column_slice(&x[n..2 * n]);
        0.5 * (qd.dot(&(&sys.mass * &qd)) + q.dot(&(&sys.stiffness * &q)))
    };
    let e0 = energy(&x0);
    (0..traj.len())
        .map(|k| (energy(traj.state(k)) - e0).abs() / e0)
        .fold(0.0, f64::max)
}

/// Response to the sum of two schedules against the sum of the responses.
pub fn superposition_deviation(cfg: &WingConfig, seed: u64) -> f64 {
    let ss = to_state_space(&assemble(cfg, &ActuatorParams::default()).unwrap()).unwrap();
    let m = cfg.n_surfaces();
    let mut rng = SplitMix::new(seed);
    let events = 4;
    let u1: Vec<f64> = (0..m * events).map(|_| 10.0 * rng.normal()).collect();
    let u2: Vec<f64> = (0..m * events).map(|_| 10.0 * rng.normal()).collect();
    let sum: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a + b).collect();
    let run = |u: &[f64]| simulate(&ss, &hold(m, u, 0.5), 1e-3, None).unwrap();
    let (a, b, c) = (run(&u1), run(&u2), run(&sum));
    let scale = c.states.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    a.states
        .iter()
        .zip(&b.states)
        .zip(&c.states)
        .map(|((p, q), r)| (p + q - r).abs() / scale)
        .fold(0.0, f64::max)
}

/// `max |M − Mᵀ|` of the assembled servo-wing mass matrix.
pub fn mass_asymmetry(cfg: &WingConfig) -> f64 {
    let m = assemble(cfg, &ActuatorParams::default()).unwrap().mass;
    (&m - m.transpose()).amax()
}
