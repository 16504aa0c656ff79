//! Brute-force reference computations for the aseshm test suites.
//!
//! Nothing in here shares code with the library under test. Every routine
//! takes plain numbers and follows the most literal route available
//! (quadrature of the defining integrals, nested-loop products, SVD
//! pseudo-inverses, active-set QP, direct DFT) at the expense of speed.

use nalgebra::{DMatrix, DVector};

pub mod quadrature {
    /// Composite Simpson rule on `[a, b]` with `n` (even) panels.
    pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        if b <= a {
            return 0.0;
        }
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    /// Simpson over the union of the pieces delimited by sorted `breaks`.
    pub fn simpson_piecewise<F: Fn(f64) -> f64>(f: F, breaks: &[f64], n: usize) -> f64 {
        breaks
            .windows(2)
            .map(|w| {
                // evaluate strictly inside each piece so indicator jumps at
                // the break points never straddle a panel
                let (a, b) = (w[0], w[1]);
                let eps = (b - a) * 1e-13;
                simpson(&f, a + eps, b - eps, n)
            })
            .sum()
    }

    /// Tensor-product piecewise Simpson over a rectangle.
    pub fn simpson_2d<F: Fn(f64, f64) -> f64>(
        f: F,
        x_breaks: &[f64],
        y_breaks: &[f64],
        n: usize,
    ) -> f64 {
        simpson_piecewise(|y| simpson_piecewise(|x| f(x, y), x_breaks, n), y_breaks, n)
    }
}

/// Plain description of the flat-plate wing for the oracles.
#[derive(Debug, Clone)]
pub struct Plate {
    pub span: f64,
    pub chord: f64,
    pub areal_density: f64,
    pub flexural_axis: f64,
    pub hinge_axis: f64,
    pub surfaces: Vec<(f64, f64)>,
}

impl Plate {
    fn in_surface(&self, j: usize, y: f64) -> bool {
        let (a, b) = self.surfaces[j];
        b > a && y >= a && y <= b
    }

    /// Shape functions of `z(x, y)` for `[γ, θ, β_1..β_M]`.
    pub fn shapes(&self, x: f64, y: f64) -> Vec<f64> {
        let mut out = vec![y, x - self.flexural_axis];
        for j in 0..self.surfaces.len() {
            let on = self.in_surface(j, y) && x > self.hinge_axis;
            out.push(if on { x - self.hinge_axis } else { 0.0 });
        }
        out
    }

    fn y_breaks(&self) -> Vec<f64> {
        let mut b = vec![0.0, self.span];
        for &(a, e) in &self.surfaces {
            b.push(a);
            b.push(e);
        }
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// Kinetic-energy matrix `∫∫ φ_i φ_j dm` by 2-D quadrature.
    pub fn mass_matrix(&self, panels: usize) -> DMatrix<f64> {
        let n = 2 + self.surfaces.len();
        let xb = [0.0, self.hinge_axis, self.chord];
        let yb = self.y_breaks();
        DMatrix::from_fn(n, n, |i, j| {
            self.areal_density
                * quadrature::simpson_2d(
                    |x, y| {
                        let s = self.shapes(x, y);
                        s[i] * s[j]
                    },
                    &xb,
                    &yb,
                    panels,
                )
        })
    }
}

/// Quasi-steady strip-theory wing for the aerodynamic oracle.
#[derive(Debug, Clone)]
pub struct StripWing {
    pub plate: Plate,
    pub air_density: f64,
    pub airspeed: f64,
    pub a: f64,
    pub a_c: f64,
    pub a_m: f64,
    pub b_1: f64,
    pub b_2: f64,
    pub e: f64,
    pub m_thetadot: f64,
    pub m_betadot: f64,
}

impl StripWing {
    /// Generalised aerodynamic forces for state `(q, q̇)` from the virtual
    /// work of the sectional lift, moment and hinge moment.
    pub fn generalised_forces(&self, q: &[f64], qd: &[f64], panels: usize) -> Vec<f64> {
        let p = &self.plate;
        let (c, v) = (p.chord, self.airspeed);
        let dyn_p = 0.5 * self.air_density * v * v;
        let m = p.surfaces.len();
        let beta_at = |y: f64, s: &[f64]| -> f64 {
            (0..m).filter(|&j| p.in_surface(j, y)).map(|j| s[2 + j]).sum()
        };
        let incidence = |y: f64| q[1] + qd[0] * y / v;
        let lift = |y: f64| dyn_p * c * (self.a * incidence(y) + self.a_c * beta_at(y, q));
        let moment = |y: f64| {
            dyn_p
                * c
                * c
                * (self.a * self.e * incidence(y)
                    + self.a_m * beta_at(y, q)
                    + self.m_thetadot * qd[1] * c / v)
        };
        let hinge = |y: f64| {
            dyn_p
                * c
                * c
                * (self.b_1 * incidence(y)
                    + self.b_2 * beta_at(y, q)
                    + self.m_betadot * c / v * beta_at(y, qd))
        };
        let yb = p.y_breaks();
        let mut out = vec![
            quadrature::simpson_piecewise(|y| -y * lift(y), &yb, panels),
            quadrature::simpson_piecewise(moment, &yb, panels),
        ];
        for j in 0..m {
            out.push(quadrature::simpson_piecewise(
                |y| if p.in_surface(j, y) { hinge(y) } else { 0.0 },
                &yb,
                panels,
            ));
        }
        out
    }
}

/// Natural frequencies `ω` of `K φ = ω² M φ` for symmetric positive
/// definite `M`, via the Cholesky-reduced symmetric eigenproblem.
pub fn generalised_frequencies(mass: &DMatrix<f64>, stiffness: &DMatrix<f64>) -> Vec<f64> {
    let l = mass.clone().cholesky().expect("mass must be SPD").l();
    let linv = l.clone().try_inverse().expect("invertible factor");
    let reduced = &linv * stiffness * linv.transpose();
    let sym = (&reduced + reduced.transpose()) * 0.5;
    let mut w: Vec<f64> = sym
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .collect();
    w.sort_by(f64::total_cmp);
    w
}

/// Column-wise Kronecker product by explicit nested loops.
pub fn khatri_rao(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (i_n, j_n, r_n) = (a.nrows(), b.nrows(), a.ncols());
    let mut out = DMatrix::zeros(i_n * j_n, r_n);
    for r in 0..r_n {
        for i in 0..i_n {
            for j in 0..j_n {
                out[(i * j_n + j, r)] = a[(i, r)] * b[(j, r)];
            }
        }
    }
    out
}

/// Row/column of entry `(i, j, k)` in the mode-`mode` unfolding of an
/// `I × J × K` tensor (mode 1: `j + J k`; mode 2: `i + I k`; mode 3: `i + I j`).
pub fn unfold_index(mode: usize, dims: (usize, usize, usize), idx: (usize, usize, usize)) -> (usize, usize) {
    let (ni, nj, _) = dims;
    let (i, j, k) = idx;
    match mode {
        1 => (i, j + nj * k),
        2 => (j, i + ni * k),
        3 => (k, i + ni * j),
        _ => panic!("mode must be 1, 2 or 3"),
    }
}

/// Least squares `min ‖X − B Aᵀ‖` solved with an SVD pseudo-inverse,
/// returning `X (Aᵀ)†`.
pub fn lstsq_right(x: &DMatrix<f64>, a_t: &DMatrix<f64>) -> DMatrix<f64> {
    let pinv = a_t
        .clone()
        .pseudo_inverse(1e-14)
        .expect("pseudo-inverse");
    x * pinv
}

/// Tiny deterministic generator so the oracles need no RNG dependency.
#[derive(Debug, Clone)]
pub struct SplitMix(u64);

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform().max(f64::MIN_POSITIVE);
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Best relative reconstruction error of a rank-`rank` CP model over
/// `restarts` random starts of textbook ALS. `x(i, j, k)` supplies entries.
pub fn cp_best_error(
    x: &dyn Fn(usize, usize, usize) -> f64,
    dims: (usize, usize, usize),
    rank: usize,
    restarts: usize,
    sweeps: usize,
    seed: u64,
) -> f64 {
    let (ni, nj, nk) = dims;
    let mut unf = [
        DMatrix::zeros(ni, nj * nk),
        DMatrix::zeros(nj, ni * nk),
        DMatrix::zeros(nk, ni * nj),
    ];
    let mut norm2 = 0.0;
    for i in 0..ni {
        for j in 0..nj {
            for k in 0..nk {
                let v = x(i, j, k);
                norm2 += v * v;
                for mode in 1..=3 {
                    let (r, c) = unfold_index(mode, dims, (i, j, k));
                    unf[mode - 1][(r, c)] = v;
                }
            }
        }
    }
    let mut rng = SplitMix::new(seed);
    let mut best = f64::INFINITY;
    for _ in 0..restarts {
        let mut a = DMatrix::from_fn(ni, rank, |_, _| rng.uniform());
        let mut b = DMatrix::from_fn(nj, rank, |_, _| rng.uniform());
        let mut c = DMatrix::from_fn(nk, rank, |_, _| rng.uniform());
        for _ in 0..sweeps {
            a = lstsq_right(&unf[0], &khatri_rao(&c, &b).transpose());
            b = lstsq_right(&unf[1], &khatri_rao(&c, &a).transpose());
            c = lstsq_right(&unf[2], &khatri_rao(&b, &a).transpose());
        }
        let model = &a * khatri_rao(&c, &b).transpose();
        let err = (&unf[0] - model).norm() / norm2.sqrt();
        best = best.min(err);
    }
    best
}

/// Squared DFT magnitudes `|X_f|²`, `f = 0..n`, by direct summation.
pub fn dft_power(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|f| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &v) in x.iter().enumerate() {
                let ang = -std::f64::consts::TAU * (f * t) as f64 / n as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            re * re + im * im
        })
        .collect()
}

/// Solution of the one-class SVM dual
/// `min ½ αᵀ K α  s.t.  Σ α = 1, 0 ≤ α ≤ upper`
/// by a primal active-set method with dense KKT solves. Returns `(α, ρ)`.
pub fn ocsvm_dual(kernel: &DMatrix<f64>, upper: f64) -> (DVector<f64>, f64) {
    #[derive(Clone, Copy, PartialEq)]
    enum Bound {
        Free,
        Lower,
        Upper,
    }
    let m = kernel.nrows();
    let mut alpha = DVector::from_element(m, 1.0 / m as f64);
    let mut state = vec![Bound::Free; m];
    let mut rho;
    for _ in 0..10_000 {
        let free: Vec<usize> = (0..m).filter(|&i| state[i] == Bound::Free).collect();
        let g = kernel * &alpha;
        let target = if free.is_empty() {
            let lo = (0..m)
                .filter(|&i| state[i] == Bound::Upper)
                .map(|i| g[i])
                .fold(f64::NEG_INFINITY, f64::max);
            let hi = (0..m)
                .filter(|&i| state[i] == Bound::Lower)
                .map(|i| g[i])
                .fold(f64::INFINITY, f64::min);
            rho = if lo.is_finite() && hi.is_finite() {
                0.5 * (lo + hi)
            } else if lo.is_finite() {
                lo
            } else {
                hi
            };
            alpha.clone()
        } else {
            // [K_FF  -1][α_F]   [-K_FB α_B      ]
            // [1ᵀ     0][ρ  ] = [1 - Σ α_B      ]
            let nf = free.len();
            let mut sys = DMatrix::zeros(nf + 1, nf + 1);
            let mut rhs = DVector::zeros(nf + 1);
            let fixed_sum: f64 = (0..m)
                .filter(|&i| state[i] != Bound::Free)
                .map(|i| alpha[i])
                .sum();
            for (a, &i) in free.iter().enumerate() {
                for (b, &j) in free.iter().enumerate() {
                    sys[(a, b)] = kernel[(i, j)];
                }
                sys[(a, nf)] = -1.0;
                sys[(nf, a)] = 1.0;
                rhs[a] = -(0..m)
                    .filter(|&j| state[j] != Bound::Free)
                    .map(|j| kernel[(i, j)] * alpha[j])
                    .sum::<f64>();
            }
            rhs[nf] = 1.0 - fixed_sum;
            let sol = sys.lu().solve(&rhs).expect("KKT system solvable");
            rho = sol[nf];
            let mut t = alpha.clone();
            for (a, &i) in free.iter().enumerate() {
                t[i] = sol[a];
            }
            t
        };
        let step = &target - &alpha;
        if step.amax() < 1e-15 {
            let g = kernel * &alpha;
            let mut worst: Option<(usize, f64)> = None;
            for i in 0..m {
                let mult = match state[i] {
                    Bound::Free => continue,
                    Bound::Lower => g[i] - rho,
                    Bound::Upper => rho - g[i],
                };
                if mult < -1e-13 && worst.map_or(true, |(_, w)| mult < w) {
                    worst = Some((i, mult));
                }
            }
            match worst {
                None => return (alpha, rho),
                Some((i, _)) => state[i] = Bound::Free,
            }
            continue;
        }
        let mut t_max = 1.0;
        let mut block = None;
        for i in 0..m {
            if state[i] != Bound::Free {
                continue;
            }
            let p = step[i];
            let limit = if p < 0.0 {
                alpha[i] / -p
            } else if p > 0.0 {
                (upper - alpha[i]) / p
            } else {
                continue;
            };
            if limit < t_max {
                t_max = limit;
                block = Some((i, if p < 0.0 { Bound::Lower } else { Bound::Upper }));
            }
        }
        alpha += step * t_max;
        if let Some((i, b)) = block {
            alpha[i] = if b == Bound::Lower { 0.0 } else { upper };
            state[i] = b;
        }
    }
    panic!("active-set QP did not terminate");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_for_cubics() {
        let v = quadrature::simpson(|x| x * x * x - 2.0 * x, 0.0, 3.0, 2);
        assert!((v - (81.0 / 4.0 - 9.0)).abs() < 1e-12);
    }

    #[test]
    fn qp_on_two_points_splits_mass_evenly() {
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 1.0]);
        let (a, rho) = ocsvm_dual(&k, 1.0);
        assert!((a[0] - 0.5).abs() < 1e-12 && (a[1] - 0.5).abs() < 1e-12);
        assert!((rho - 0.6).abs() < 1e-12);
    }

    #[test]
    fn dft_of_constant_is_dc_only() {
        let p = dft_power(&[1.0; 8]);
        assert!((p[0] - 64.0).abs() < 1e-9);
        assert!(p[1..].iter().all(|&v| v < 1e-18));
    }
}
