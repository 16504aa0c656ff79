//! Lagrangian aeroservoelastic wing model.

mod aero;
mod config;
mod inertia;
mod state_space;
mod stiffness;
mod system;

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

pub use aero::{aero_matrices, AeroMatrices};
pub use config::{ActuatorParams, AeroCoefficients, RayleighDamping, SurfaceSpan, WingConfig};
pub use inertia::{inertia_integrals, InertiaSet, SurfaceInertia};
pub use state_space::{to_state_space, StateSpaceModel};
pub use stiffness::{stiffness_from_frequencies, StructuralStiffness};
pub use system::{actuator_augment, aeroelastic_system, assemble, SecondOrderSystem};

use crate::error::Result;

/// Writes a matrix as CSV: a header naming the columns, then one row per
/// matrix row led by its name.
pub fn write_matrix_csv<W: Write>(
    mut out: W,
    rows: &[String],
    cols: &[String],
    m: &DMatrix<f64>,
) -> Result<()> {
    write!(out, "row")?;
    for c in cols {
        write!(out, ",{c}")?;
    }
    writeln!(out)?;
    for (i, r) in rows.iter().enumerate() {
        write!(out, "{r}")?;
        for j in 0..m.ncols() {
            write!(out, ",{:e}", m[(i, j)])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Dumps `M_s`, `C_s`, `K_s`, `G`, `A_ss` and `B_ss` into `dir`.
pub fn export_matrices(dir: &Path, sys: &SecondOrderSystem, ss: &StateSpaceModel) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let inputs: Vec<String> = (1..=sys.n_inputs()).map(|j| format!("beta_c{j}")).collect();
    let save = |name: &str, rows: &[String], cols: &[String], m: &DMatrix<f64>| -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(dir.join(name))?);
        write_matrix_csv(f, rows, cols, m)
    };
    save("mass.csv", &sys.names, &sys.names, &sys.mass)?;
    save("damping.csv", &sys.names, &sys.names, &sys.damping)?;
    save("stiffness.csv", &sys.names, &sys.names, &sys.stiffness)?;
    save("input.csv", &sys.names, &inputs, &sys.input)?;
    save("state_a.csv", &ss.state_names, &ss.state_names, &ss.a)?;
    save("state_b.csv", &ss.state_names, &inputs, &ss.b)?;
    Ok(())
}
