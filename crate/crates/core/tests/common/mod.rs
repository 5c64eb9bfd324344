//! Independent oracles for the integration tests. Everything here computes
//! reference values through a different route than the library: plain-loop
//! kernel construction, hand-rolled Gaussian elimination instead of Cholesky,
//! finite differences instead of analytic derivatives, quadrature and Monte
//! Carlo instead of closed forms.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Squared-exponential kernel built with plain loops; `jitter` is added to
/// the diagonal.
pub fn kernel_oracle(x: &DMatrix<f64>, theta: &[f64], jitter: f64) -> DMatrix<f64> {
    let n = x.nrows();
    let mut k = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut s = 0.0;
            for (i, &t) in theta.iter().enumerate() {
                let diff = x[(a, i)] - x[(b, i)];
                s += diff * diff / t;
            }
            k[(a, b)] = (-s).exp();
        }
        k[(a, a)] += jitter;
    }
    k
}

/// Gaussian elimination with partial pivoting. Returns the solution of
/// A·x = b together with log|det A| and the determinant's sign.
pub fn ge_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64, f64) {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(b.len(), n);
    let mut m = a.clone();
    let mut rhs = b.clone();
    let mut log_det = 0.0;
    let mut sign = 1.0;
    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if m[(row, col)].abs() > m[(pivot, col)].abs() {
                pivot = row;
            }
        }
        if pivot != col {
            m.swap_rows(pivot, col);
            rhs.swap_rows(pivot, col);
            sign = -sign;
        }
        let p = m[(col, col)];
        assert!(p != 0.0, "singular matrix in oracle solve");
        log_det += p.abs().ln();
        if p < 0.0 {
            sign = -sign;
        }
        for row in (col + 1)..n {
            let f = m[(row, col)] / p;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m[(row, c)] -= f * m[(col, c)];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = DVector::zeros(n);
    for row in (0..n).rev() {
        let mut s = rhs[row];
        for c in (row + 1)..n {
            s -= m[(row, c)] * x[c];
        }
        x[row] = s / m[(row, row)];
    }
    (x, log_det, sign)
}

/// log|det A| and sign via the same elimination.
pub fn ge_log_det(a: &DMatrix<f64>) -> (f64, f64) {
    let (_, log_det, sign) = ge_solve(a, &DVector::zeros(a.nrows()));
    (log_det, sign)
}

/// Dense inverse by solving against identity columns.
pub fn ge_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut inv = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        let (col, _, _) = ge_solve(a, &e);
        inv.set_column(j, &col);
    }
    inv
}

/// Zero-mean Gaussian log density with covariance τ²·(K₀(θ) + g·I),
/// assembled entirely from oracle pieces.
pub fn full_log_likelihood_oracle(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    theta: &[f64],
    jitter: f64,
    tau2: f64,
) -> f64 {
    let n = x.nrows() as f64;
    let k = kernel_oracle(x, theta, jitter);
    let (kinv_y, log_det, sign) = ge_solve(&k, y);
    assert!(sign > 0.0, "kernel determinant must be positive");
    let quad = y.dot(&kinv_y);
    -0.5 * n * (2.0 * std::f64::consts::PI).ln() - 0.5 * n * tau2.ln() - 0.5 * log_det
        - quad / (2.0 * tau2)
}

/// Central finite difference of the jitter-free kernel in θᵢ.
pub fn kernel_derivative_fd(x: &DMatrix<f64>, theta: &[f64], i: usize, h: f64) -> DMatrix<f64> {
    let mut up = theta.to_vec();
    let mut down = theta.to_vec();
    up[i] += h;
    down[i] -= h;
    (kernel_oracle(x, &up, 0.0) - kernel_oracle(x, &down, 0.0)) / (2.0 * h)
}

/// θ-block of the Fisher information of the zero-mean Gaussian with
/// covariance Σ(τ², θ) = τ²·(K₀(θ)+gI), with the τ² row and column profiled
/// out via the Schur complement. All derivatives are central finite
/// differences of Σ itself; the inverse is by Gaussian elimination.
pub fn fisher_theta_block_fd(
    x: &DMatrix<f64>,
    theta: &[f64],
    tau2: f64,
    jitter: f64,
) -> DMatrix<f64> {
    let d = theta.len();
    let sigma_at = |t2: f64, th: &[f64]| kernel_oracle(x, th, jitter) * t2;
    let sigma_inv = ge_inverse(&sigma_at(tau2, theta));

    // dΣ/dψ for ψ = (τ², θ₁..θ_d), each by central difference.
    let mut dsigma: Vec<DMatrix<f64>> = Vec::with_capacity(d + 1);
    let h_tau = 1e-5 * tau2.max(1.0);
    dsigma.push((sigma_at(tau2 + h_tau, theta) - sigma_at(tau2 - h_tau, theta)) / (2.0 * h_tau));
    for i in 0..d {
        let h = 1e-5 * theta[i].max(1.0);
        let mut up = theta.to_vec();
        let mut down = theta.to_vec();
        up[i] += h;
        down[i] -= h;
        dsigma.push((sigma_at(tau2, &up) - sigma_at(tau2, &down)) / (2.0 * h));
    }

    // I_jk = ½ tr(Σ⁻¹ dΣ_j Σ⁻¹ dΣ_k).
    let conj: Vec<DMatrix<f64>> = dsigma.iter().map(|ds| &sigma_inv * ds).collect();
    let mut info = DMatrix::zeros(d + 1, d + 1);
    for j in 0..=d {
        for k in 0..=j {
            let v = 0.5 * (&conj[j] * &conj[k]).trace();
            info[(j, k)] = v;
            info[(k, j)] = v;
        }
    }

    // Schur complement removing the τ² row/column (index 0).
    let i_tt = info[(0, 0)];
    let mut block = DMatrix::zeros(d, d);
    for j in 0..d {
        for k in 0..d {
            block[(j, k)] = info[(j + 1, k + 1)] - info[(j + 1, 0)] * info[(0, k + 1)] / i_tt;
        }
    }
    block
}

/// Adaptive Simpson quadrature.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rule<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = rule(f, a, fa, m, fm);
        let (right, rm, frm) = rule(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = rule(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 40)
}

/// ∫ exp(log_density(θ)) dθ over [lo, hi], integrated in u = ln θ for
/// stability across decades.
pub fn integrate_density<F: Fn(f64) -> f64>(log_density: &F, lo: f64, hi: f64) -> f64 {
    let g = |u: f64| {
        let theta = u.exp();
        let lp = log_density(theta);
        if lp == f64::NEG_INFINITY {
            0.0
        } else {
            (lp + u).exp()
        }
    };
    simpson(&g, lo.ln(), hi.ln(), 1e-6)
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut ks: f64 = 0.0;
    while i < n && j < m {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        let fa = i as f64 / n as f64;
        let fb = j as f64 / m as f64;
        ks = ks.max((fa - fb).abs());
    }
    ks
}

/// iid draws from the named benchmark prior, through rand's samplers rather
/// than the library's density code.
pub fn iid_prior_draws(name: &str, count: usize, seed: u64) -> Vec<f64> {
    use rand_distr::Distribution;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match name {
        "gamma" => {
            let g = rand_distr::Gamma::new(1.5, 1.0 / 2.6).unwrap();
            (0..count).map(|_| g.sample(&mut rng)).collect()
        }
        "beta" => (0..count).map(|_| rng.gen::<f64>()).collect(),
        "half_cauchy" => {
            let c = rand_distr::Cauchy::new(0.0f64, 1.0).unwrap();
            (0..count).map(|_| c.sample(&mut rng).abs()).collect()
        }
        "log_normal" => {
            let n = rand_distr::Normal::new(0.0f64, 10.0).unwrap();
            (0..count).map(|_| n.sample(&mut rng).exp()).collect()
        }
        "inverse_gamma" => {
            let g = rand_distr::Gamma::new(5.0, 1.0 / 5.0).unwrap();
            (0..count).map(|_| 1.0 / g.sample(&mut rng)).collect()
        }
        other => panic!("no iid sampler for prior {other}"),
    }
}

/// Monte-Carlo CRPS, E|Y−y| − ½E|Y−Y′| with Y, Y′ ~ Normal(μ, σ²).
pub fn crps_monte_carlo(y: f64, mu: f64, sigma: f64, pairs: usize, seed: u64) -> f64 {
    use rand_distr::Distribution;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
    let mut abs_err = 0.0;
    let mut abs_gap = 0.0;
    for _ in 0..pairs {
        let z1: f64 = normal.sample(&mut rng);
        let z2: f64 = normal.sample(&mut rng);
        abs_err += (mu + sigma * z1 - y).abs() + (mu + sigma * z2 - y).abs();
        abs_gap += (sigma * (z1 - z2)).abs();
    }
    abs_err / (2.0 * pairs as f64) - abs_gap / (2.0 * pairs as f64)
}

/// Uniform random points in the unit cube, as an n×d matrix.
pub fn random_unit_points(n: usize, d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| rng.gen())
}

/// Lengthscale window that keeps the correlation spectrum of up to `n`
/// separated points clear of the 1e-8 jitter floor (smallest eigenvalue
/// at least ~1e-5, measured empirically), so that two independent
/// factorizations agree to well below the tolerances used in identity
/// checks. One dimension is the tight case: its spectrum collapses once
/// neighbor correlation grows, hence the 1/n^2 scaling there.
pub fn conditioned_theta_range(d: usize, n: usize) -> (f64, f64) {
    let n2 = (n * n) as f64;
    match d {
        1 => (0.3 / n2, 3.0 / n2),
        2 => (0.05, 0.3),
        _ => (0.1, 1.2),
    }
}

/// Random unit-cube points whose coordinates keep a gap of at least 1/(2n)
/// in every column: one point per stratum, jitter confined to the middle
/// half. Plain uniform draws produce near-coincident points that make the
/// correlation matrix singular up to the jitter floor, which would swamp
/// tight oracle comparisons with factorization round-off.
pub fn separated_unit_points(n: usize, d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    use rand::seq::SliceRandom;
    let mut x = DMatrix::zeros(n, d);
    for j in 0..d {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        for i in 0..n {
            x[(i, j)] = (strata[i] as f64 + 0.25 + 0.5 * rng.gen::<f64>()) / n as f64;
        }
    }
    x
}
