use nalgebra::DMatrix;

use super::cp::{mttkrp, solve_gram, CpFactors};
use super::dense::Tensor3;
use crate::error::{Error, Result};

/// Places new frontal slices into C-space with `A` and `B` held fixed.
///
/// Returns one row per slice, `X_new(3) (B ⊙ A) [(BᵀB) ∗ (AᵀA)]⁻¹`, the
/// least-squares coordinates that already include the component weights.
/// Fails when `B ⊙ A` has a condition number above `cond_threshold`.
pub fn project_new(slices: &Tensor3, factors: &CpFactors, cond_threshold: f64) -> Result<DMatrix<f64>> {
    let [ni, nj, _] = slices.dims();
    if ni != factors.a.nrows() || nj != factors.b.nrows() {
        return Err(Error::InvalidInput(format!(
            "slices are {ni}x{nj}, factors expect {}x{}",
            factors.a.nrows(),
            factors.b.nrows()
        )));
    }
    if !slices.is_finite() {
        return Err(Error::InvalidInput("new slices have non-finite entries".into()));
    }
    let gram = (factors.b.transpose() * &factors.b).component_mul(&(factors.a.transpose() * &factors.a));
    let cond = khatri_rao_condition(&gram);
    if !(cond <= cond_threshold) {
        return Err(Error::IllConditioned {
            cond,
            threshold: cond_threshold,
        });
    }
    let dummy_c = DMatrix::zeros(slices.dims()[2], factors.rank());
    let rhs = mttkrp(slices, &factors.a, &factors.b, &dummy_c, 3);
    solve_gram(&gram, &rhs, 0.0)
}

/// Condition number of `B ⊙ A` from the eigenvalues of its Gram matrix.
fn khatri_rao_condition(gram: &DMatrix<f64>) -> f64 {
    let eig = gram.clone().symmetric_eigen().eigenvalues;
    let hi = eig.max();
    let lo = eig.min();
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        (hi / lo).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{cp_als, khatri_rao, unfold, CpOptions};
    use aseshm_oracles as oracle;
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn random_factors(seed: u64, dims: [usize; 2], rank: usize) -> CpFactors {
        let mut rng = oracle::SplitMix::new(seed);
        let mut a = DMatrix::from_fn(dims[0], rank, |_, _| rng.normal());
        let mut b = DMatrix::from_fn(dims[1], rank, |_, _| rng.normal());
        for r in 0..rank {
            let na = a.column(r).norm();
            a.column_mut(r).unscale_mut(na);
            let nb = b.column(r).norm();
            b.column_mut(r).unscale_mut(nb);
        }
        CpFactors {
            a,
            b,
            c: DMatrix::zeros(1, rank),
            weights: DVector::from_element(rank, 1.0),
            fit_history: vec![],
            converged: true,
            restart: 0,
        }
    }

    #[test]
    fn consistent_slice_is_recovered_exactly() {
        let f = random_factors(1, [6, 5], 3);
        let row = [2.5, -1.0, 0.75];
        let x = Tensor3::from_fn([6, 5, 1], |i, j, _| {
            (0..3).map(|r| row[r] * f.a[(i, r)] * f.b[(j, r)]).sum()
        });
        let c = project_new(&x, &f, 1e8).unwrap();
        for r in 0..3 {
            assert!((c[(0, r)] - row[r]).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_slice_projects_to_origin() {
        let f = random_factors(2, [4, 3], 2);
        let c = project_new(&Tensor3::zeros([4, 3, 2]), &f, 1e8).unwrap();
        assert!(c.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matches_pseudo_inverse_oracle() {
        let f = random_factors(3, [7, 4], 3);
        let mut rng = oracle::SplitMix::new(30);
        let x = Tensor3::from_fn([7, 4, 5], |_, _, _| rng.normal());
        let ours = project_new(&x, &f, 1e8).unwrap();
        let kr_t = khatri_rao(&f.b, &f.a).unwrap().transpose();
        let expected = oracle::lstsq_right(&unfold(&x, 3).unwrap(), &kr_t);
        assert!((ours - expected).amax() < 1e-8);
    }

    #[test]
    fn training_slices_reproduce_weighted_c() {
        let mut rng = oracle::SplitMix::new(11);
        let x = Tensor3::from_fn([6, 4, 15], |_, _, _| rng.uniform());
        let f = cp_als(&x, &CpOptions { rank: 2, ..CpOptions::default() }, 5).unwrap();
        let c = project_new(&x, &f, 1e8).unwrap();
        for k in 0..15 {
            for r in 0..2 {
                assert!((c[(k, r)] - f.weights[r] * f.c[(k, r)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn collinear_factors_are_ill_conditioned() {
        let mut f = random_factors(4, [3, 3], 2);
        let col = f.a.column(0).into_owned();
        f.a.set_column(1, &col);
        let col = f.b.column(0).into_owned();
        f.b.set_column(1, &col);
        let err = project_new(&Tensor3::zeros([3, 3, 1]), &f, 1e8).unwrap_err();
        assert!(matches!(err, Error::IllConditioned { .. }));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let f = random_factors(5, [3, 3], 2);
        assert!(project_new(&Tensor3::zeros([4, 3, 1]), &f, 1e8).is_err());
    }

    proptest! {
        #[test]
        fn projection_is_linear(seed in any::<u64>(), s in -3.0f64..3.0) {
            let f = random_factors(seed, [5, 4], 2);
            let mut rng = oracle::SplitMix::new(seed ^ 1);
            let x = Tensor3::from_fn([5, 4, 2], |_, _, _| rng.normal());
            let y = Tensor3::from_fn([5, 4, 2], |_, _, _| rng.normal());
            let z = Tensor3::from_vec([5, 4, 2], x.as_slice().iter().zip(y.as_slice()).map(|(p, q)| s * p + q).collect()).unwrap();
            let lhs = project_new(&z, &f, 1e8).unwrap();
            let rhs = project_new(&x, &f, 1e8).unwrap() * s + project_new(&y, &f, 1e8).unwrap();
            prop_assert!((lhs - rhs).amax() < 1e-9);
        }
    }
}
