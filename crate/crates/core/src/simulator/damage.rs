use crate::error::{Error, Result};
use crate::model::ActuatorParams;

/// Leakage severity used unless configured otherwise.
pub const DEFAULT_SEVERITY: f64 = 0.3;

/// Hydraulic leakage: supply pressure and both internal stiffnesses are
/// scaled by `1 − severity`.
pub fn inject_damage(act: &ActuatorParams, severity: f64) -> Result<ActuatorParams> {
    if !(0.0..1.0).contains(&severity) {
        return Err(Error::InvalidInput(format!(
            "damage severity must lie in [0, 1), got {severity}"
        )));
    }
    let keep = 1.0 - severity;
    Ok(ActuatorParams {
        supply_pressure: act.supply_pressure * keep,
        feedback_stiffness: act.feedback_stiffness * keep,
        internal_stiffness: act.internal_stiffness * keep,
        ..act.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{assemble, WingConfig};

    #[test]
    fn zero_severity_is_identity() {
        let a = ActuatorParams::default();
        assert_eq!(inject_damage(&a, 0.0).unwrap(), a);
    }

    #[test]
    fn thirty_percent_leak_on_supply_pressure() {
        let a = ActuatorParams {
            supply_pressure: 2e7,
            ..ActuatorParams::default()
        };
        let d = inject_damage(&a, 0.3).unwrap();
        assert!((d.supply_pressure - 1.4e7).abs() < 1e-6);
        assert!((d.feedback_stiffness - 0.7 * a.feedback_stiffness).abs() < 1e-9);
        assert!((d.internal_stiffness - 0.7 * a.internal_stiffness).abs() < 1e-9);
    }

    #[test]
    fn damage_composes_multiplicatively() {
        let a = ActuatorParams::default();
        let twice = inject_damage(&inject_damage(&a, 0.3).unwrap(), 0.3).unwrap();
        assert!((twice.supply_pressure / a.supply_pressure - 0.49).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range_severity() {
        assert!(inject_damage(&ActuatorParams::default(), 1.0).is_err());
        assert!(inject_damage(&ActuatorParams::default(), -0.1).is_err());
    }

    #[test]
    fn damage_touches_only_valve_and_feedback_coefficients() {
        let cfg = WingConfig::default();
        let healthy = ActuatorParams::default();
        let a = assemble(&cfg, &healthy).unwrap();
        let b = assemble(&cfg, &inject_damage(&healthy, 0.3).unwrap()).unwrap();
        assert_eq!(a.mass, b.mass);
        assert_eq!(a.damping, b.damping);
        let nq = a.n_coords;
        for i in 0..a.dim() {
            for j in 0..a.dim() {
                let differs = a.stiffness[(i, j)] != b.stiffness[(i, j)];
                // only the pressure rows' β and P coefficients change
                let expected = i >= nq && (j == i || j == 2 + (i - nq));
                assert_eq!(differs, expected, "entry ({i}, {j})");
            }
        }
        assert_ne!(a.input, b.input);
    }
}
