use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spanwise extent `[start, end]` of one trailing-edge control surface (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpan {
    pub start: f64,
    pub end: f64,
}

impl SurfaceSpan {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    /// Lebesgue measure of the span interval.
    pub fn measure(&self) -> f64 {
        self.end - self.start
    }

    /// First spanwise moment, the integral of `y` over the span.
    pub fn first_moment(&self) -> f64 {
        0.5 * (self.end * self.end - self.start * self.start)
    }

    pub fn contains(&self, y: f64) -> bool {
        y >= self.start && y <= self.end
    }
}

/// Quasi-steady strip-theory coefficients (all dimensionless).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AeroCoefficients {
    /// Wing lift-curve slope `a`.
    pub lift_slope: f64,
    /// Lift per unit control-surface deflection `a_c`.
    pub control_lift: f64,
    /// Pitching moment per unit control-surface deflection `a_m`.
    pub control_moment: f64,
    /// Hinge moment due to incidence `b_1`.
    pub hinge_incidence: f64,
    /// Hinge moment due to deflection `b_2`.
    pub hinge_deflection: f64,
    /// Flexural-axis eccentricity aft of the aerodynamic centre, as a fraction of chord.
    pub eccentricity: f64,
    /// Unsteady pitch damping derivative `M_θdot`.
    pub pitch_damping: f64,
    /// Control-surface rate damping derivative `M_βdot`.
    pub surface_damping: f64,
}

impl Default for AeroCoefficients {
    fn default() -> Self {
        Self {
            lift_slope: 2.0 * std::f64::consts::PI,
            control_lift: 3.0,
            control_moment: -0.6,
            hinge_incidence: -0.15,
            hinge_deflection: -0.5,
            eccentricity: 0.23,
            pitch_damping: -1.2,
            surface_damping: -0.2,
        }
    }
}

/// Optional proportional structural damping `C_1 = α M + β K_1`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RayleighDamping {
    pub mass: f64,
    pub stiffness: f64,
}

/// Geometry, material, flight condition and aerodynamic description of the
/// rectangular flat-plate wing. SI units throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WingConfig {
    pub span: f64,
    pub chord: f64,
    pub thickness: f64,
    pub material_density: f64,
    pub air_density: f64,
    pub flexural_axis: f64,
    pub hinge_axis: f64,
    pub airspeed: f64,
    /// Bending natural frequency ω_γ (rad/s).
    pub omega_bending: f64,
    /// Torsion natural frequency ω_θ (rad/s).
    pub omega_torsion: f64,
    /// Control-surface rotation frequency (rad/s), only used when no
    /// actuator is attached.
    pub omega_surface: f64,
    pub aero: AeroCoefficients,
    pub surfaces: Vec<SurfaceSpan>,
    #[serde(default)]
    pub damping: RayleighDamping,
}

impl Default for WingConfig {
    fn default() -> Self {
        use std::f64::consts::TAU;
        Self {
            span: 7.5,
            chord: 2.0,
            thickness: 0.05,
            material_density: 2000.0,
            air_density: 1.225,
            flexural_axis: 0.96,
            hinge_axis: 1.6,
            airspeed: 40.0,
            omega_bending: TAU * 5.0,
            omega_torsion: TAU * 10.0,
            omega_surface: TAU * 20.0,
            aero: AeroCoefficients::default(),
            surfaces: vec![SurfaceSpan::new(2.0, 3.5), SurfaceSpan::new(4.5, 6.5)],
            damping: RayleighDamping::default(),
        }
    }
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidConfig(msg()))
    }
}

impl WingConfig {
    pub fn n_surfaces(&self) -> usize {
        self.surfaces.len()
    }

    /// Areal mass density `ρ_m t` (kg/m²).
    pub fn areal_density(&self) -> f64 {
        self.material_density * self.thickness
    }

    /// Ordered breakpoints `y_2j, y_2j+1` of every control surface.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.surfaces.iter().flat_map(|r| [r.start, r.end]).collect()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("span", self.span),
            ("chord", self.chord),
            ("thickness", self.thickness),
            ("material_density", self.material_density),
        ] {
            require(v.is_finite() && v > 0.0, || format!("{name} must be > 0, got {v}"))?;
        }
        for (name, v) in [
            ("air_density", self.air_density),
            ("airspeed", self.airspeed),
            ("omega_bending", self.omega_bending),
            ("omega_torsion", self.omega_torsion),
            ("omega_surface", self.omega_surface),
        ] {
            require(v.is_finite() && v >= 0.0, || format!("{name} must be >= 0, got {v}"))?;
        }
        require(
            (0.0..=self.chord).contains(&self.flexural_axis),
            || format!("flexural_axis {} outside [0, chord]", self.flexural_axis),
        )?;
        require(
            self.hinge_axis > self.flexural_axis && self.hinge_axis <= self.chord,
            || {
                format!(
                    "hinge_axis {} must lie in (flexural_axis, chord]",
                    self.hinge_axis
                )
            },
        )?;
        let mut prev_end = f64::NEG_INFINITY;
        for (j, r) in self.surfaces.iter().enumerate() {
            require(
                r.start.is_finite() && r.end.is_finite(),
                || format!("surface {j}: non-finite breakpoint"),
            )?;
            require(r.start >= 0.0 && r.end <= self.span, || {
                format!(
                    "surface {j}: [{}, {}] outside [0, span={}]",
                    r.start, r.end, self.span
                )
            })?;
            require(r.end >= r.start, || {
                format!("surface {j}: breakpoints out of order ({} > {})", r.start, r.end)
            })?;
            require(r.start >= prev_end, || {
                format!("surface {j} overlaps the previous surface")
            })?;
            prev_end = r.end;
        }
        let d = &self.damping;
        require(d.mass >= 0.0 && d.stiffness >= 0.0, || {
            "Rayleigh damping coefficients must be >= 0".into()
        })?;
        Ok(())
    }

    /// Panics-free lookup of the control surface covering spanwise station `y`.
    pub fn surface_at(&self, y: f64) -> Option<usize> {
        self.surfaces.iter().position(|r| r.measure() > 0.0 && r.contains(y))
    }
}

/// Linearised, inertia-less hydraulic servo parameters (one actuator per surface).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ActuatorParams {
    /// Valve flow constant `K_V`.
    pub valve_flow: f64,
    /// Supply pressure `P_s` (Pa).
    pub supply_pressure: f64,
    /// Return pressure `P_R` (Pa).
    pub return_pressure: f64,
    /// Piston area `A_P` (m²).
    pub piston_area: f64,
    /// Feedback-spring area `A_F` (m²).
    pub feedback_area: f64,
    /// Feedback-spring stiffness `K_F` (N/m).
    pub feedback_stiffness: f64,
    /// Secondary internal stiffness `k_o` (N/m). Carried and damaged, but it
    /// has no term in the linearised flow equation.
    pub internal_stiffness: f64,
    /// Oil volume `V_0` (m³).
    pub oil_volume: f64,
    /// Oil bulk modulus `N` (Pa).
    pub bulk_modulus: f64,
    /// Lever-arm ratio `μ`.
    pub lever_ratio: f64,
    /// Offset `h` between the hinge line and the piston (m).
    pub offset: f64,
}

impl Default for ActuatorParams {
    fn default() -> Self {
        Self {
            valve_flow: 4.0e-5,
            supply_pressure: 2.0e7,
            return_pressure: 0.0,
            piston_area: 2.0e-3,
            feedback_area: 1.0e-4,
            feedback_stiffness: 5.0e4,
            internal_stiffness: 5.0e4,
            oil_volume: 4.8e-3,
            bulk_modulus: 1.5e9,
            lever_ratio: 1.0,
            offset: 0.1,
        }
    }
}

impl ActuatorParams {
    pub fn validate(&self) -> Result<()> {
        require(
            self.supply_pressure > self.return_pressure && self.return_pressure >= 0.0,
            || {
                format!(
                    "need supply_pressure > return_pressure >= 0, got {} / {}",
                    self.supply_pressure, self.return_pressure
                )
            },
        )?;
        for (name, v) in [
            ("valve_flow", self.valve_flow),
            ("piston_area", self.piston_area),
            ("feedback_area", self.feedback_area),
            ("feedback_stiffness", self.feedback_stiffness),
            ("internal_stiffness", self.internal_stiffness),
            ("oil_volume", self.oil_volume),
            ("bulk_modulus", self.bulk_modulus),
            ("lever_ratio", self.lever_ratio),
            ("offset", self.offset),
        ] {
            require(v.is_finite() && v > 0.0, || format!("{name} must be > 0, got {v}"))?;
        }
        Ok(())
    }

    /// `√(P_s / 2)`, the linearised valve pressure factor.
    pub fn pressure_factor(&self) -> Result<f64> {
        if !(self.supply_pressure > 0.0) {
            return Err(Error::InvalidInput(format!(
                "supply pressure must be > 0 for the valve linearisation, got {}",
                self.supply_pressure
            )));
        }
        Ok((self.supply_pressure / 2.0).sqrt())
    }
}
