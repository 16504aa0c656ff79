use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::system::SecondOrderSystem;
use crate::error::{Error, Result};

/// Continuous-time realisation `ẋ = A x + B u` with state
/// `[q (n_q), q̇ (n_q), P (n_p)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpaceModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub n_coords: usize,
    pub n_pressures: usize,
    pub state_names: Vec<String>,
}

impl StateSpaceModel {
    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn derivative(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }

    /// Continuous-time eigenvalues of `A`.
    pub fn eigenvalues(&self) -> Vec<nalgebra::Complex<f64>> {
        self.a.complex_eigenvalues().iter().copied().collect()
    }

    /// Largest real part over the spectrum of `A`.
    pub fn spectral_abscissa(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Block-companion realisation of a (possibly partly first-order) system.
///
/// With `E ż = F z + H u`, `z = [q, q̇, P]`:
/// `E = diag(I, [[M_qq, C_qP], [M_Pq, C_PP]])`,
/// `F = [[0, I, 0], [−K_qq, −C_qq, −K_qP], [−K_Pq, −C_Pq, −K_PP]]`.
pub fn to_state_space(sys: &SecondOrderSystem) -> Result<StateSpaceModel> {
    let nq = sys.n_coords;
    let np = sys.n_pressures;
    let n = nq + np;
    let ns = 2 * nq + np;
    let nu = sys.n_inputs();

    // generalised "mass" acting on the derivatives [q̈, Ṗ]
    let mut lead = DMatrix::zeros(n, n);
    lead.view_mut((0, 0), (n, nq))
        .copy_from(&sys.mass.view((0, 0), (n, nq)));
    lead.view_mut((0, nq), (n, np))
        .copy_from(&sys.damping.view((0, nq), (n, np)));

    let mut rhs = DMatrix::zeros(n, ns + nu);
    // −K_{·q} q
    rhs.view_mut((0, 0), (n, nq))
        .copy_from(&(-sys.stiffness.view((0, 0), (n, nq))));
    // −C_{·q} q̇
    rhs.view_mut((0, nq), (n, nq))
        .copy_from(&(-sys.damping.view((0, 0), (n, nq))));
    // −K_{·P} P
    rhs.view_mut((0, 2 * nq), (n, np))
        .copy_from(&(-sys.stiffness.view((0, nq), (n, np))));
    rhs.view_mut((0, ns), (n, nu)).copy_from(&sys.input);

    let lu = lead.lu();
    let solved = lu.solve(&rhs).ok_or_else(|| {
        Error::Singular("mass block of the second-order system is not invertible".into())
    })?;
    if solved.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(
            "mass block of the second-order system is numerically singular".into(),
        ));
    }

    let mut a = DMatrix::zeros(ns, ns);
    for i in 0..nq {
        a[(i, nq + i)] = 1.0;
    }
    // rows of q̈ land in nq..2nq, rows of Ṗ in 2nq..
    a.view_mut((nq, 0), (nq, ns))
        .copy_from(&solved.view((0, 0), (nq, ns)));
    a.view_mut((2 * nq, 0), (np, ns))
        .copy_from(&solved.view((nq, 0), (np, ns)));
    let mut b = DMatrix::zeros(ns, nu);
    b.view_mut((nq, 0), (nq, nu))
        .copy_from(&solved.view((0, ns), (nq, nu)));
    b.view_mut((2 * nq, 0), (np, nu))
        .copy_from(&solved.view((nq, ns), (np, nu)));

    let coord_names = &sys.names[..nq];
    let mut state_names: Vec<String> = coord_names.to_vec();
    state_names.extend(coord_names.iter().map(|s| format!("{s}_dot")));
    state_names.extend(sys.names[nq..].iter().cloned());

    Ok(StateSpaceModel {
        a,
        b,
        n_coords: nq,
        n_pressures: np,
        state_names,
    })
}
