use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{meta_as, Artifact};

/// Gaussian similarity `exp(−γ ‖x − y‖²)`.
pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoOptions {
    /// Stop when the maximal KKT violation falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Re-solve the final active set exactly once SMO has converged.
    pub polish: bool,
}

impl Default for SmoOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 1_000_000,
            polish: true,
        }
    }
}

/// Trained one-class SVM: `f(x) = Σ_i α_i k(x_i, x) − ρ`, inlier when `f ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcsvmModel {
    pub support: Vec<Vec<f64>>,
    /// Training-set index of every support vector.
    pub support_indices: Vec<usize>,
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub gamma: f64,
    pub nu: f64,
    pub n_train: usize,
    pub dim: usize,
    pub iterations: usize,
}

#[derive(Serialize, Deserialize)]
struct ModelMeta {
    support_indices: Vec<usize>,
    rho: f64,
    gamma: f64,
    nu: f64,
    n_train: usize,
    dim: usize,
    iterations: usize,
}

impl OcsvmModel {
    /// Decision value without dimension checks.
    pub fn decision(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (sv, a) in self.support.iter().zip(&self.alpha) {
            s += a * rbf_kernel(sv, x, self.gamma);
        }
        s - self.rho
    }

    pub fn n_support(&self) -> usize {
        self.support.len()
    }

    /// Dual coefficients expanded to the full training set.
    pub fn dense_alpha(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.n_train];
        for (&i, &v) in self.support_indices.iter().zip(&self.alpha) {
            a[i] = v;
        }
        a
    }

    pub fn to_artifact(&self) -> Result<Artifact> {
        let meta = ModelMeta {
            support_indices: self.support_indices.clone(),
            rho: self.rho,
            gamma: self.gamma,
            nu: self.nu,
            n_train: self.n_train,
            dim: self.dim,
            iterations: self.iterations,
        };
        let flat: Vec<f64> = self.support.iter().flatten().copied().collect();
        Artifact::new("ocsvm-model", serde_json::to_value(meta)?)
            .with("support", &[self.support.len(), self.dim], flat)?
            .with("alpha", &[self.alpha.len()], self.alpha.clone())
    }

    pub fn from_artifact(art: &Artifact) -> Result<Self> {
        art.expect_kind("ocsvm-model")?;
        let meta: ModelMeta = meta_as(art)?;
        let (shape, flat) = art.array("support")?;
        let (_, alpha) = art.array("alpha")?;
        if shape.len() != 2 || shape[1] != meta.dim || shape[0] != alpha.len() || alpha.len() != meta.support_indices.len() {
            return Err(Error::Integrity("support vectors disagree with model metadata".into()));
        }
        Ok(Self {
            support: flat.chunks(meta.dim.max(1)).map(<[f64]>::to_vec).collect(),
            support_indices: meta.support_indices,
            alpha: alpha.to_vec(),
            rho: meta.rho,
            gamma: meta.gamma,
            nu: meta.nu,
            n_train: meta.n_train,
            dim: meta.dim,
            iterations: meta.iterations,
        })
    }
}

/// Signed decision value of `x`; negative means outlier.
pub fn score(model: &OcsvmModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.dim {
        return Err(Error::InvalidInput(format!(
            "point has dimension {}, model expects {}",
            x.len(),
            model.dim
        )));
    }
    Ok(model.decision(x))
}

pub fn train_ocsvm(points: &[Vec<f64>], nu: f64, gamma: f64) -> Result<OcsvmModel> {
    train_ocsvm_with(points, nu, gamma, &SmoOptions::default())
}

fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    let dim = points.first().map_or(0, Vec::len);
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidInput("points must share a nonzero dimension".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("points contain non-finite values".into()));
    }
    Ok(dim)
}

/// Solves `min ½ αᵀ K α` subject to `Σ α = 1`, `0 ≤ α ≤ 1/(ν m)` by
/// sequential minimal optimisation with second-order working-set selection.
pub fn train_ocsvm_with(points: &[Vec<f64>], nu: f64, gamma: f64, opts: &SmoOptions) -> Result<OcsvmModel> {
    let m = points.len();
    if m < 2 {
        return Err(Error::InvalidInput(format!("one-class SVM needs m >= 2 points, got {m}")));
    }
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::InvalidInput(format!("nu must lie in (0, 1), got {nu}")));
    }
    if nu * (m as f64) < 1.0 - 1e-12 {
        return Err(Error::InvalidInput(format!("nu * m = {} is below 1", nu * m as f64)));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput(format!("gamma must be > 0, got {gamma}")));
    }
    let dim = check_points(points)?;

    let q = DMatrix::from_fn(m, m, |i, j| rbf_kernel(&points[i], &points[j], gamma));
    let upper = 1.0 / (nu * m as f64);

    // feasible start: fill coefficients to the bound in index order
    let mut alpha = vec![0.0; m];
    let mut left = 1.0;
    for a in alpha.iter_mut() {
        if left <= 0.0 {
            break;
        }
        *a = upper.min(left);
        left -= *a;
    }
    let mut grad: Vec<f64> = (0..m).map(|t| (0..m).map(|s| q[(t, s)] * alpha[s]).sum()).collect();

    let mut iterations = 0;
    let violation = loop {
        // i maximises −G over coefficients that may grow
        let mut i = usize::MAX;
        let mut gmax = f64::NEG_INFINITY;
        for t in 0..m {
            if alpha[t] < upper && -grad[t] > gmax {
                gmax = -grad[t];
                i = t;
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..m {
            if alpha[t] > 0.0 {
                gmax2 = gmax2.max(grad[t]);
                let b = gmax + grad[t];
                if b > 0.0 && i != usize::MAX {
                    let a = q[(i, i)] + q[(t, t)] - 2.0 * q[(i, t)];
                    let a = if a > 0.0 { a } else { 1e-12 };
                    let obj = -b * b / a;
                    if obj < best {
                        best = obj;
                        j = t;
                    }
                }
            }
        }
        let gap = gmax + gmax2;
        if gap < opts.tol || j == usize::MAX {
            break gap.max(0.0);
        }
        if iterations >= opts.max_iter {
            return Err(Error::NonConvergence {
                iterations,
                violation: gap,
            });
        }
        iterations += 1;

        let a = (q[(i, i)] + q[(j, j)] - 2.0 * q[(i, j)]).max(1e-12);
        let b = grad[j] - grad[i];
        let mut delta = b / a;
        let mut i_hits_bound = false;
        let mut j_hits_bound = false;
        if delta >= upper - alpha[i] {
            delta = upper - alpha[i];
            i_hits_bound = true;
        }
        if delta >= alpha[j] {
            delta = alpha[j];
            j_hits_bound = true;
            i_hits_bound = false;
        }
        alpha[i] = if i_hits_bound { upper } else { alpha[i] + delta };
        alpha[j] = if j_hits_bound { 0.0 } else { alpha[j] - delta };
        for (t, g) in grad.iter_mut().enumerate() {
            *g += delta * (q[(t, i)] - q[(t, j)]);
        }
    };
    log::debug!("SMO finished after {iterations} iterations, KKT violation {violation:.2e}");

    if opts.polish {
        if let Some(exact) = polish(&q, &alpha, upper, opts.tol) {
            alpha = exact;
        }
    }

    // fresh gradient in the same summation order used when scoring
    let grad: Vec<f64> = (0..m)
        .map(|t| {
            let mut s = 0.0;
            for (sidx, &a) in alpha.iter().enumerate() {
                if a > 0.0 {
                    s += a * q[(sidx, t)];
                }
            }
            s
        })
        .collect();
    let rho = offset(&grad, &alpha, upper);

    let support_indices: Vec<usize> = (0..m).filter(|&i| alpha[i] > 0.0).collect();
    Ok(OcsvmModel {
        support: support_indices.iter().map(|&i| points[i].clone()).collect(),
        alpha: support_indices.iter().map(|&i| alpha[i]).collect(),
        support_indices,
        rho,
        gamma,
        nu,
        n_train: m,
        dim,
        iterations,
    })
}

/// Offset from the free support vectors, or from the bound constraints
/// when none is free. Free gradients agree at the optimum; taking their
/// minimum keeps every free support vector on the inlier side despite
/// rounding.
fn offset(grad: &[f64], alpha: &[f64], upper: f64) -> f64 {
    let mut free_lo = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut ub = f64::INFINITY;
    for (g, &a) in grad.iter().zip(alpha) {
        if a >= upper {
            lb = lb.max(*g);
        } else if a <= 0.0 {
            ub = ub.min(*g);
        } else {
            free_lo = free_lo.min(*g);
        }
    }
    if free_lo.is_finite() {
        free_lo
    } else if lb.is_finite() && ub.is_finite() {
        0.5 * (lb + ub)
    } else if lb.is_finite() {
        lb
    } else {
        ub
    }
}

/// Exact solution on the active set found by SMO: with free set `F` and
/// upper-bound set `U`, solves `K_FF α_F − ρ 1 = −K_FU α_U`,
/// `Σ α_F = 1 − Σ α_U`. Returned only when it stays feasible and optimal.
fn polish(q: &DMatrix<f64>, alpha: &[f64], upper: f64, tol: f64) -> Option<Vec<f64>> {
    let free: Vec<usize> = (0..alpha.len()).filter(|&i| alpha[i] > 0.0 && alpha[i] < upper).collect();
    if free.is_empty() {
        return None;
    }
    let nf = free.len();
    let at_upper: Vec<usize> = (0..alpha.len()).filter(|&i| alpha[i] >= upper).collect();
    let mut sys = DMatrix::zeros(nf + 1, nf + 1);
    let mut rhs = DVector::zeros(nf + 1);
    for (r, &i) in free.iter().enumerate() {
        for (c, &j) in free.iter().enumerate() {
            sys[(r, c)] = q[(i, j)];
        }
        sys[(r, nf)] = -1.0;
        sys[(nf, r)] = 1.0;
        rhs[r] = -at_upper.iter().map(|&j| q[(i, j)] * upper).sum::<f64>();
    }
    rhs[nf] = 1.0 - upper * at_upper.len() as f64;
    let sol = sys.lu().solve(&rhs)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut out = alpha.to_vec();
    for (r, &i) in free.iter().enumerate() {
        if !(sol[r] > 0.0 && sol[r] < upper) {
            return None;
        }
        out[i] = sol[r];
    }
    let rho = sol[nf];
    // bound multipliers must keep their signs
    for t in 0..out.len() {
        let g: f64 = (0..out.len()).map(|s| q[(t, s)] * out[s]).sum();
        if out[t] <= 0.0 && g < rho - tol || out[t] >= upper && g > rho + tol {
            return None;
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use aseshm_oracles as oracle;
    use proptest::prelude::*;

    fn gaussian_points(m: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = oracle::SplitMix::new(seed);
        (0..m).map(|_| vec![rng.normal(), rng.normal()]).collect()
    }

    #[test]
    fn kernel_values() {
        assert_eq!(rbf_kernel(&[1.0, 2.0], &[1.0, 2.0], 3.0), 1.0);
        let v = rbf_kernel(&[0.0, 0.0], &[1.0, 1.0], 0.5);
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn nu_bounds_training_outliers() {
        let pts = gaussian_points(100, 1);
        let model = train_ocsvm(&pts, 0.05, 0.5).unwrap();
        let negatives = pts.iter().filter(|p| model.decision(p) < 0.0).count();
        assert!(negatives <= 5, "{negatives}");
        assert!(model.n_support() >= 5);
    }

    #[test]
    fn identical_points_all_score_non_negative() {
        let pts = vec![vec![0.3, -1.2]; 12];
        for nu in [0.1, 0.25, 0.5] {
            let model = train_ocsvm(&pts, nu, 2.0).unwrap();
            assert!(pts.iter().all(|p| model.decision(p) >= 0.0));
        }
    }

    #[test]
    fn matches_active_set_oracle() {
        for seed in 0..5 {
            let pts = gaussian_points(20, 100 + seed);
            let (nu, gamma) = (0.2, 0.5);
            let model = train_ocsvm(&pts, nu, gamma).unwrap();
            let k = DMatrix::from_fn(20, 20, |i, j| rbf_kernel(&pts[i], &pts[j], gamma));
            let (alpha, rho) = oracle::ocsvm_dual(&k, 1.0 / (nu * 20.0));
            for (a, b) in model.dense_alpha().iter().zip(alpha.iter()) {
                assert!((a - b).abs() < 1e-5, "seed {seed}: {a} vs {b}");
            }
            assert!((model.rho - rho).abs() < 1e-5);
        }
    }

    #[test]
    fn tight_cluster_centre_inside_far_point_outside() {
        let pts: Vec<Vec<f64>> = gaussian_points(40, 3).into_iter().map(|p| vec![0.1 * p[0], 0.1 * p[1]]).collect();
        let model = train_ocsvm(&pts, 0.1, 1.0).unwrap();
        assert!(score(&model, &[0.0, 0.0]).unwrap() > 0.0);
        assert!(score(&model, &[30.0, 30.0]).unwrap() < 0.0);
        assert!(score(&model, &[0.0]).is_err());
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        let pts = gaussian_points(10, 4);
        assert!(train_ocsvm(&pts, 0.0, 1.0).is_err());
        assert!(train_ocsvm(&pts, 1.0, 1.0).is_err());
        assert!(train_ocsvm(&pts, 0.05, 1.0).is_err());
        assert!(train_ocsvm(&pts, 0.5, 0.0).is_err());
        assert!(train_ocsvm(&pts[..1], 0.9, 1.0).is_err());
    }

    #[test]
    fn iteration_cap_reports_violation() {
        let pts = gaussian_points(30, 5);
        let opts = SmoOptions {
            max_iter: 1,
            tol: 1e-12,
            polish: false,
        };
        match train_ocsvm_with(&pts, 0.1, 1.0, &opts) {
            Err(Error::NonConvergence { iterations, violation }) => {
                assert_eq!(iterations, 1);
                assert!(violation > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn permuting_training_points_keeps_the_boundary() {
        let pts = gaussian_points(40, 6);
        let mut shuffled = pts.clone();
        shuffled.reverse();
        shuffled.swap(3, 17);
        let a = train_ocsvm(&pts, 0.15, 0.7).unwrap();
        let b = train_ocsvm(&shuffled, 0.15, 0.7).unwrap();
        for p in gaussian_points(100, 7) {
            let probe: Vec<f64> = p.iter().map(|v| 2.0 * v).collect();
            assert!((a.decision(&probe) - b.decision(&probe)).abs() < 1e-5);
        }
    }

    #[test]
    fn artifact_round_trip() {
        let model = train_ocsvm(&gaussian_points(20, 8), 0.2, 1.0).unwrap();
        assert_eq!(OcsvmModel::from_artifact(&model.to_artifact().unwrap()).unwrap(), model);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn dual_feasibility_and_nu_property(seed in any::<u64>(), m in 5usize..60, nu in 0.05f64..0.9) {
            prop_assume!(nu * m as f64 >= 1.0);
            let pts = gaussian_points(m, seed);
            let model = train_ocsvm(&pts, nu, 0.5).unwrap();
            let upper = 1.0 / (nu * m as f64);
            let alpha = model.dense_alpha();
            prop_assert!(alpha.iter().all(|&a| (0.0..=upper + 1e-15).contains(&a)));
            prop_assert!((alpha.iter().sum::<f64>() - 1.0).abs() <= 1e-8);
            let errors = pts.iter().filter(|p| model.decision(p) < 0.0).count();
            prop_assert!(errors as f64 <= nu * m as f64 + 1e-9);
            prop_assert!(model.n_support() as f64 >= nu * m as f64 - 1e-9);
        }
    }
}
