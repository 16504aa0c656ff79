use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dense::Tensor3;
use crate::error::{Error, Result};
use crate::seeds;
use crate::store::{meta_as, Artifact};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CpOptions {
    pub rank: usize,
    /// Stop once the relative error changes by less than this between sweeps.
    pub tol: f64,
    pub max_iter: usize,
    /// Diagonal loading applied when a Gram matrix is not positive definite.
    pub ridge: f64,
    pub restarts: usize,
    /// Largest admissible condition number of `B ⊙ A` when projecting.
    pub cond_threshold: f64,
}

impl Default for CpOptions {
    fn default() -> Self {
        Self {
            rank: 2,
            tol: 1e-8,
            max_iter: 500,
            ridge: 1e-12,
            restarts: 5,
            cond_threshold: 1e8,
        }
    }
}

impl CpOptions {
    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 || self.restarts == 0 || self.max_iter == 0 {
            return Err(Error::InvalidConfig("cp rank, restarts and max_iter must be >= 1".into()));
        }
        if !(self.tol >= 0.0 && self.ridge >= 0.0 && self.cond_threshold > 1.0) {
            return Err(Error::InvalidConfig(
                "cp tol and ridge must be >= 0 and cond_threshold > 1".into(),
            ));
        }
        Ok(())
    }
}

/// Weighted CP model `X ≈ Σ_r λ_r a_r ∘ b_r ∘ c_r` with unit-norm factor columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpFactors {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub weights: DVector<f64>,
    /// Relative reconstruction error `‖X − X̂‖ / ‖X‖` after every sweep.
    pub fit_history: Vec<f64>,
    pub converged: bool,
    /// Index of the restart that produced these factors.
    pub restart: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CpMeta {
    rank: usize,
    dims: [usize; 3],
    converged: bool,
    restart: usize,
}

impl CpFactors {
    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.a.nrows(), self.b.nrows(), self.c.nrows()]
    }

    pub fn relative_error(&self) -> f64 {
        self.fit_history.last().copied().unwrap_or(f64::NAN)
    }

    pub fn iterations(&self) -> usize {
        self.fit_history.len()
    }

    /// Frontal slice model `A diag(λ ∘ C[k, :]) Bᵀ`.
    pub fn slice_model(&self, k: usize) -> DMatrix<f64> {
        let d = DVector::from_fn(self.rank(), |r, _| self.weights[r] * self.c[(k, r)]);
        &self.a * DMatrix::from_diagonal(&d) * self.b.transpose()
    }

    pub fn reconstruct(&self) -> Tensor3 {
        reconstruct(&self.a, &self.b, &self.c, &self.weights)
    }

    /// Sorts components by descending weight and fixes signs so the first
    /// nonzero entry of every `A` and `B` column is positive; `C` absorbs the
    /// flips, leaving the model unchanged.
    pub fn canonicalize(&mut self) {
        let r_n = self.rank();
        let mut order: Vec<usize> = (0..r_n).collect();
        order.sort_by(|&p, &q| self.weights[q].total_cmp(&self.weights[p]).then(p.cmp(&q)));
        let pick = |m: &DMatrix<f64>| DMatrix::from_fn(m.nrows(), r_n, |i, r| m[(i, order[r])]);
        self.a = pick(&self.a);
        self.b = pick(&self.b);
        self.c = pick(&self.c);
        self.weights = DVector::from_fn(r_n, |r, _| self.weights[order[r]]);
        for r in 0..r_n {
            for m in [&mut self.a, &mut self.b] {
                let lead = m.column(r).iter().copied().find(|v| *v != 0.0).unwrap_or(0.0);
                if lead < 0.0 {
                    m.column_mut(r).neg_mut();
                    self.c.column_mut(r).neg_mut();
                }
            }
        }
    }

    pub fn to_artifact(&self) -> Result<Artifact> {
        let meta = CpMeta {
            rank: self.rank(),
            dims: self.dims(),
            converged: self.converged,
            restart: self.restart,
        };
        let mat = |m: &DMatrix<f64>| m.as_slice().to_vec();
        Artifact::new("cp-factors", serde_json::to_value(meta)?)
            .with("a", &[self.a.nrows(), self.a.ncols()], mat(&self.a))?
            .with("b", &[self.b.nrows(), self.b.ncols()], mat(&self.b))?
            .with("c", &[self.c.nrows(), self.c.ncols()], mat(&self.c))?
            .with("weights", &[self.rank()], self.weights.as_slice().to_vec())?
            .with("fit_history", &[self.fit_history.len()], self.fit_history.clone())
    }

    pub fn from_artifact(art: &Artifact) -> Result<Self> {
        art.expect_kind("cp-factors")?;
        let meta: CpMeta = meta_as(art)?;
        let mat = |name: &str, rows: usize| -> Result<DMatrix<f64>> {
            let (shape, data) = art.array(name)?;
            if shape != [rows, meta.rank] {
                return Err(Error::Integrity(format!("factor `{name}` has shape {shape:?}")));
            }
            Ok(DMatrix::from_column_slice(rows, meta.rank, data))
        };
        let (wshape, w) = art.array("weights")?;
        if wshape != [meta.rank] {
            return Err(Error::Integrity("weight vector length differs from rank".into()));
        }
        Ok(Self {
            a: mat("a", meta.dims[0])?,
            b: mat("b", meta.dims[1])?,
            c: mat("c", meta.dims[2])?,
            weights: DVector::from_column_slice(w),
            fit_history: art.array("fit_history")?.1.to_vec(),
            converged: meta.converged,
            restart: meta.restart,
        })
    }
}

pub(crate) fn reconstruct(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, w: &DVector<f64>) -> Tensor3 {
    Tensor3::from_fn([a.nrows(), b.nrows(), c.nrows()], |i, j, k| {
        (0..w.len()).map(|r| w[r] * a[(i, r)] * b[(j, r)] * c[(k, r)]).sum()
    })
}

/// Matricized tensor times Khatri-Rao product for `mode`, e.g.
/// `X(1) (C ⊙ B)` for mode 1, without forming the Khatri-Rao matrix.
pub(crate) fn mttkrp(x: &Tensor3, a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, mode: usize) -> DMatrix<f64> {
    let [ni, nj, nk] = x.dims();
    let r_n = a.ncols();
    let rows = [ni, nj, nk][mode - 1];
    let mut out = DMatrix::zeros(rows, r_n);
    for r in 0..r_n {
        for k in 0..nk {
            let ck = c[(k, r)];
            for j in 0..nj {
                let bj = b[(j, r)];
                for i in 0..ni {
                    let v = x.get(i, j, k);
                    match mode {
                        1 => out[(i, r)] += v * bj * ck,
                        2 => out[(j, r)] += v * a[(i, r)] * ck,
                        _ => out[(k, r)] += v * a[(i, r)] * bj,
                    }
                }
            }
        }
    }
    out
}

/// Returns `rhs · G⁻¹` for symmetric `G`, loading the diagonal with
/// `ridge · max(diag G)` when `G` is not numerically positive definite.
pub(crate) fn solve_gram(gram: &DMatrix<f64>, rhs: &DMatrix<f64>, ridge: f64) -> Result<DMatrix<f64>> {
    let scale = gram.diagonal().max().max(f64::MIN_POSITIVE);
    let solve = |g: DMatrix<f64>| -> Option<DMatrix<f64>> {
        let chol = g.cholesky()?;
        let l = chol.l();
        let min_pivot = l.diagonal().min();
        if !(min_pivot * min_pivot > 1e-14 * scale) {
            return None;
        }
        Some(chol.solve(&rhs.transpose()).transpose())
    };
    if let Some(x) = solve(gram.clone()) {
        return Ok(x);
    }
    log::warn!(
        "rank-deficient normal equations; adding ridge {:.1e} x {:.3e}",
        ridge,
        scale
    );
    let n = gram.nrows();
    let loaded = gram + DMatrix::identity(n, n) * (ridge * scale);
    loaded
        .cholesky()
        .map(|c| c.solve(&rhs.transpose()).transpose())
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Singular("normal equations remain singular after ridge".into()))
}

/// Scales every column to unit norm and returns the norms. Zero columns are
/// left untouched with weight zero.
fn normalize_columns(m: &mut DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(m.ncols(), |r, _| {
        let n = m.column(r).norm();
        if n > 0.0 {
            m.column_mut(r).unscale_mut(n);
        }
        n
    })
}

fn relative_error(x: &Tensor3, norm_x: f64, a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, w: &DVector<f64>) -> f64 {
    let model = reconstruct(a, b, c, w);
    let resid: f64 = x
        .as_slice()
        .iter()
        .zip(model.as_slice())
        .map(|(p, q)| (p - q) * (p - q))
        .sum();
    resid.sqrt() / norm_x
}

fn als_run(x: &Tensor3, opts: &CpOptions, seed: u64, restart: usize) -> Result<CpFactors> {
    let [ni, nj, nk] = x.dims();
    let r_n = opts.rank;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |rows: usize| DMatrix::from_fn(rows, r_n, |_, _| rng.random::<f64>());
    let mut a = draw(ni);
    let mut b = draw(nj);
    let mut c = draw(nk);
    let mut weights = DVector::from_element(r_n, 1.0);
    let norm_x = x.norm();
    let mut history = Vec::new();
    let mut converged = false;

    if norm_x == 0.0 {
        return Ok(CpFactors {
            a,
            b,
            c,
            weights: DVector::zeros(r_n),
            fit_history: vec![0.0],
            converged: true,
            restart,
        });
    }

    for _ in 0..opts.max_iter {
        let g = (c.transpose() * &c).component_mul(&(b.transpose() * &b));
        a = solve_gram(&g, &mttkrp(x, &a, &b, &c, 1), opts.ridge)?;
        normalize_columns(&mut a);

        let g = (c.transpose() * &c).component_mul(&(a.transpose() * &a));
        b = solve_gram(&g, &mttkrp(x, &a, &b, &c, 2), opts.ridge)?;
        normalize_columns(&mut b);

        let g = (b.transpose() * &b).component_mul(&(a.transpose() * &a));
        c = solve_gram(&g, &mttkrp(x, &a, &b, &c, 3), opts.ridge)?;
        weights = normalize_columns(&mut c);

        let err = relative_error(x, norm_x, &a, &b, &c, &weights);
        if !err.is_finite() {
            return Err(Error::Singular("ALS produced non-finite factors".into()));
        }
        let prev = history.last().copied();
        history.push(err);
        if prev.is_some_and(|p: f64| (p - err).abs() < opts.tol) {
            converged = true;
            break;
        }
    }
    Ok(CpFactors {
        a,
        b,
        c,
        weights,
        fit_history: history,
        converged,
        restart,
    })
}

/// Rank-`opts.rank` CP decomposition by alternating least squares.
///
/// Each of `opts.restarts` seeded random starts runs independently (in
/// parallel); the one with the lowest final error is canonicalized and
/// returned.
pub fn cp_als(x: &Tensor3, opts: &CpOptions, seed: u64) -> Result<CpFactors> {
    opts.validate()?;
    if !x.is_finite() {
        return Err(Error::InvalidInput("tensor has non-finite entries".into()));
    }
    if x.dims().contains(&0) {
        return Err(Error::InvalidInput("tensor has an empty mode".into()));
    }
    let runs: Vec<Result<CpFactors>> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| als_run(x, opts, seeds::derive(seed, r as u64), r))
        .collect();
    let mut best: Option<CpFactors> = None;
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(f) => {
                if best.as_ref().is_none_or(|b| f.relative_error() < b.relative_error()) {
                    best = Some(f);
                }
            }
            Err(e) => {
                log::warn!("ALS restart failed: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    let mut best = best.ok_or_else(|| first_err.expect("at least one restart ran"))?;
    if !best.converged {
        log::warn!(
            "ALS stopped at max_iter = {} with relative error {:.3e}",
            opts.max_iter,
            best.relative_error()
        );
    }
    best.canonicalize();
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use aseshm_oracles as oracle;
    use proptest::prelude::*;

    fn random_tensor(dims: [usize; 3], seed: u64) -> Tensor3 {
        let mut rng = oracle::SplitMix::new(seed);
        Tensor3::from_fn(dims, |_, _, _| rng.normal())
    }

    fn rank_one(seed: u64) -> (Tensor3, f64) {
        let mut rng = oracle::SplitMix::new(seed);
        let a: Vec<f64> = (0..6).map(|_| rng.normal()).collect();
        let b: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
        let c: Vec<f64> = (0..9).map(|_| rng.normal()).collect();
        let lambda = 3.5;
        (Tensor3::from_fn([6, 4, 9], |i, j, k| lambda * a[i] * b[j] * c[k]), lambda)
    }

    fn opts(rank: usize) -> CpOptions {
        CpOptions {
            rank,
            ..CpOptions::default()
        }
    }

    #[test]
    fn exact_rank_one_is_recovered() {
        let (x, _) = rank_one(4);
        let f = cp_als(&x, &opts(1), 0).unwrap();
        assert!(f.relative_error() <= 1e-6, "{}", f.relative_error());
        assert!((f.weights[0] - x.norm()).abs() < 1e-6 * x.norm());
    }

    #[test]
    fn columns_are_unit_norm_and_weights_sorted() {
        let f = cp_als(&random_tensor([5, 4, 12], 2), &opts(3), 1).unwrap();
        for m in [&f.a, &f.b, &f.c] {
            for r in 0..3 {
                assert!((m.column(r).norm() - 1.0).abs() < 1e-12);
            }
        }
        assert!(f.weights.iter().all(|&w| w >= 0.0));
        assert!(f.weights.as_slice().windows(2).all(|w| w[0] >= w[1]));
        for r in 0..3 {
            assert!(f.a.column(r).iter().find(|v| **v != 0.0).unwrap() > &0.0);
            assert!(f.b.column(r).iter().find(|v| **v != 0.0).unwrap() > &0.0);
        }
    }

    #[test]
    fn canonicalize_preserves_the_model() {
        let f = cp_als(&random_tensor([4, 3, 7], 5), &opts(2), 3).unwrap();
        let mut g = f.clone();
        g.a.column_mut(0).neg_mut();
        g.c.column_mut(0).neg_mut();
        g.canonicalize();
        for (p, q) in f.reconstruct().as_slice().iter().zip(g.reconstruct().as_slice()) {
            assert!((p - q).abs() < 1e-12);
        }
        assert_eq!(g.a, f.a);
    }

    #[test]
    fn frontal_slice_residuals_partition_the_global_residual() {
        let x = random_tensor([5, 3, 8], 6);
        let f = cp_als(&x, &opts(2), 2).unwrap();
        let model = f.reconstruct();
        let mut total = 0.0;
        for k in 0..8 {
            let slice_resid = (x.slice(k) - f.slice_model(k)).norm_squared();
            let restricted = (x.slice(k) - model.slice(k)).norm_squared();
            assert!((slice_resid - restricted).abs() < 1e-12 * (1.0 + restricted));
            total += slice_resid;
        }
        assert!((total.sqrt() / x.norm() - f.relative_error()).abs() < 1e-12);
    }

    #[test]
    fn restarts_are_seed_deterministic() {
        let x = random_tensor([6, 5, 10], 8);
        assert_eq!(cp_als(&x, &opts(2), 42).unwrap(), cp_als(&x, &opts(2), 42).unwrap());
    }

    #[test]
    fn zero_tensor_gives_zero_weights() {
        let f = cp_als(&Tensor3::zeros([3, 3, 3]), &opts(2), 0).unwrap();
        assert!(f.weights.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn non_finite_input_rejected() {
        let mut x = Tensor3::zeros([2, 2, 2]);
        x.set(0, 0, 0, f64::NAN);
        assert!(cp_als(&x, &opts(1), 0).is_err());
        assert!(cp_als(&Tensor3::zeros([2, 2, 2]), &opts(0), 0).is_err());
    }

    #[test]
    fn duplicated_component_triggers_ridge_not_failure() {
        // a rank-1 tensor fitted with rank 2 from identical starting columns
        let (x, _) = rank_one(1);
        let a = DMatrix::from_element(6, 2, 1.0);
        let b = DMatrix::from_element(4, 2, 1.0);
        let c = DMatrix::from_element(9, 2, 1.0);
        let g = (c.transpose() * &c).component_mul(&(b.transpose() * &b));
        let solved = solve_gram(&g, &mttkrp(&x, &a, &b, &c, 1), 1e-12).unwrap();
        assert!(solved.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn artifact_round_trip() {
        let f = cp_als(&random_tensor([4, 3, 5], 9), &opts(2), 0).unwrap();
        let back = CpFactors::from_artifact(&Artifact::from_bytes(&f.to_artifact().unwrap().to_bytes().unwrap()).unwrap()).unwrap();
        assert_eq!(back, f);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn fit_history_never_increases(seed in any::<u64>(), rank in 1usize..4) {
            let x = random_tensor([5, 4, 8], seed);
            let f = cp_als(&x, &CpOptions { restarts: 1, ..opts(rank) }, seed).unwrap();
            for w in f.fit_history.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
            }
        }
    }
}
