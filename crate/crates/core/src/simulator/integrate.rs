use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::schedule::InputSchedule;
use crate::error::{Error, Result};
use crate::model::StateSpaceModel;

/// Sampled response of a state-space model to a schedule.
///
/// Sample `k` is taken at `t = k·dt` under the command active on
/// `[t, t + dt)`; `accelerations` holds the generalised coordinate
/// accelerations `q̈` at that instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt: f64,
    pub n_states: usize,
    pub n_coords: usize,
    /// Row-major `n_samples × n_states`.
    pub states: Vec<f64>,
    /// Row-major `n_samples × n_coords`.
    pub accelerations: Vec<f64>,
    pub event: Vec<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.event.len()
    }

    pub fn is_empty(&self) -> bool {
        self.event.is_empty()
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.n_states..(k + 1) * self.n_states]
    }

    pub fn acceleration(&self, k: usize) -> &[f64] {
        &self.accelerations[k * self.n_coords..(k + 1) * self.n_coords]
    }
}

/// One RK4 step of `ẋ = A x + c` with constant `c` is the affine map
/// `x ↦ Φ x + Ψ c`, where `Φ = Σ_{k≤4} (hA)^k / k!` and
/// `Ψ = h Σ_{k≤3} (hA)^k / (k+1)!`.
struct Rk4Propagator {
    phi: DMatrix<f64>,
    psi: DMatrix<f64>,
}

impl Rk4Propagator {
    fn new(a: &DMatrix<f64>, dt: f64) -> Self {
        let n = a.nrows();
        let ha = a * dt;
        let ha2 = &ha * &ha;
        let ha3 = &ha2 * &ha;
        let ha4 = &ha3 * &ha;
        let eye = DMatrix::<f64>::identity(n, n);
        let phi = &eye + &ha + &ha2 / 2.0 + &ha3 / 6.0 + &ha4 / 24.0;
        let psi = (&eye + &ha / 2.0 + &ha2 / 6.0 + &ha3 / 24.0) * dt;
        Self { phi, psi }
    }
}

fn mat_vec(m: &DMatrix<f64>, x: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    for (j, &xj) in x.iter().enumerate() {
        if xj != 0.0 {
            for (o, &mij) in out.iter_mut().zip(m.column(j).iter()) {
                *o += mij * xj;
            }
        }
    }
}

/// Fixed-step RK4 integration of `ẋ = A x + B u` from `x0` (zero when
/// `None`) with `u` held piecewise constant over each event. Commands are
/// converted from degrees to radians.
pub fn simulate(
    model: &StateSpaceModel,
    schedule: &InputSchedule,
    dt: f64,
    x0: Option<&[f64]>,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("dt must be > 0, got {dt}")));
    }
    let n = model.n_states();
    let nq = model.n_coords;
    if schedule.n_surfaces() != model.n_inputs() {
        return Err(Error::InvalidInput(format!(
            "schedule drives {} surfaces but the model has {} inputs",
            schedule.n_surfaces(),
            model.n_inputs()
        )));
    }
    let mut x = match x0 {
        Some(v) if v.len() == n => v.to_vec(),
        Some(v) => {
            return Err(Error::InvalidInput(format!(
                "initial state has {} entries, expected {n}",
                v.len()
            )))
        }
        None => vec![0.0; n],
    };

    let steps_per: Vec<usize> = schedule
        .events
        .iter()
        .map(|e| (e.hold / dt).round().max(1.0) as usize)
        .collect();
    let total: usize = steps_per.iter().sum();
    let mut states = Vec::with_capacity(total * n);
    let mut accels = Vec::with_capacity(total * nq);
    let mut event = Vec::with_capacity(total);

    let prop = Rk4Propagator::new(&model.a, dt);
    // only the acceleration rows of A are needed per sample
    let a_acc = model.a.rows(nq, nq).into_owned();
    let mut next = vec![0.0; n];
    let mut acc = vec![0.0; nq];
    let mut step = 0usize;
    for (e, (ev, &count)) in schedule.events.iter().zip(&steps_per).enumerate() {
        let u = DVector::from_iterator(ev.angles_deg.len(), ev.angles_deg.iter().map(|a| a.to_radians()));
        let bu = &model.b * &u;
        let drive = &prop.psi * &bu;
        let bu_acc: Vec<f64> = bu.rows(nq, nq).iter().copied().collect();
        for _ in 0..count {
            mat_vec(&a_acc, &x, &mut acc);
            states.extend_from_slice(&x);
            accels.extend(acc.iter().zip(&bu_acc).map(|(a, b)| a + b));
            event.push(e);
            mat_vec(&prop.phi, &x, &mut next);
            for (xi, (ni, di)) in x.iter_mut().zip(next.iter().zip(drive.iter())) {
                *xi = ni + di;
            }
            step += 1;
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence {
                    step,
                    time: step as f64 * dt,
                });
            }
        }
    }

    Ok(Trajectory {
        dt,
        n_states: n,
        n_coords: nq,
        states,
        accelerations: accels,
        event,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::schedule::{AngleBounds, Event};

    fn scalar_decay() -> StateSpaceModel {
        // treat the single state as a "pressure" so there are no coordinates
        StateSpaceModel {
            a: DMatrix::from_element(1, 1, -1.0),
            b: DMatrix::zeros(1, 1),
            n_coords: 0,
            n_pressures: 1,
            state_names: vec!["x".into()],
        }
    }

    fn hold(seconds: f64, m: usize) -> InputSchedule {
        InputSchedule {
            mode: "test".into(),
            bounds: AngleBounds::full(8.0),
            events: vec![Event {
                angles_deg: vec![0.0; m],
                hold: seconds,
            }],
        }
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        let traj = simulate(&scalar_decay(), &hold(1.01, 1), 0.01, Some(&[1.0])).unwrap();
        // sample 100 sits at t = 1
        assert!((traj.state(100)[0] - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn zero_input_zero_state_stays_at_rest() {
        use crate::model::{assemble, to_state_space, ActuatorParams, WingConfig};
        let ss = to_state_space(&assemble(&WingConfig::default(), &ActuatorParams::default()).unwrap()).unwrap();
        let traj = simulate(&ss, &hold(0.5, 2), 1e-3, None).unwrap();
        assert!(traj.states.iter().all(|&v| v == 0.0));
        assert!(traj.accelerations.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn divergence_is_reported() {
        let unstable = StateSpaceModel {
            a: DMatrix::from_element(1, 1, 5000.0),
            ..scalar_decay()
        };
        let err = simulate(&unstable, &hold(10.0, 1), 0.01, Some(&[1.0])).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
    }

    #[test]
    fn mismatched_schedule_is_rejected() {
        assert!(simulate(&scalar_decay(), &hold(1.0, 3), 0.01, None).is_err());
        assert!(simulate(&scalar_decay(), &hold(1.0, 1), 0.0, None).is_err());
    }
}
