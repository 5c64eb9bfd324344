//! Kernel construction, profile likelihood, and single-θ predictive moments
//! for a zero-mean anisotropic squared-exponential Gaussian process.
//!
//! The kernel is K(x, x') = exp(−Σᵢ (xᵢ−x'ᵢ)²/θᵢ) with a fixed jitter g added
//! to the training diagonal. The scale parameter τ² is always profiled out in
//! closed form, so every operation here is a function of the lengthscales θ
//! alone.

use nalgebra::{DMatrix, DVector};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Per-dimension kernel lengthscales, all strictly positive and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Lengthscales {
    theta: Vec<f64>,
}

impl Lengthscales {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidParameter("empty lengthscale vector".into()));
        }
        if theta.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lengthscales must be positive and finite, got {theta:?}"
            )));
        }
        Ok(Self { theta })
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }

    /// Copy with component `i` replaced; validates the new value.
    pub fn replaced(&self, i: usize, value: f64) -> Result<Self> {
        if i >= self.theta.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                dimension: self.theta.len(),
            });
        }
        let mut theta = self.theta.clone();
        theta[i] = value;
        Self::new(theta)
    }
}

impl std::ops::Index<usize> for Lengthscales {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.theta[i]
    }
}

/// Numerical knobs for kernel factorization.
#[derive(Debug, Clone, Copy)]
pub struct GpConfig {
    /// Constant added to the training-kernel diagonal; fixed, never escalated.
    pub jitter: f64,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self { jitter: 1e-8 }
    }
}

impl GpConfig {
    fn validate(&self) -> Result<()> {
        if !(self.jitter > 0.0) || !self.jitter.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "jitter must be positive and finite, got {}",
                self.jitter
            )));
        }
        Ok(())
    }
}

/// Per-dimension squared coordinate differences between two point sets,
/// precomputed once so repeated kernel evaluations at different θ only pay
/// for the weighted sum and the exponential.
#[derive(Debug, Clone)]
pub struct SquaredDistances {
    per_dim: Vec<DMatrix<f64>>,
    rows: usize,
    cols: usize,
}

impl SquaredDistances {
    /// Pairwise squared differences within one point set (n×n per dimension).
    pub fn pairwise(x: &DMatrix<f64>) -> Self {
        Self::between_unchecked(x, x)
    }

    /// Squared differences between rows of `a` (m×d) and rows of `b` (n×d).
    pub fn between(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Self> {
        if a.ncols() != b.ncols() {
            return Err(Error::DimensionMismatch {
                expected: b.ncols(),
                actual: a.ncols(),
            });
        }
        Ok(Self::between_unchecked(a, b))
    }

    fn between_unchecked(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Self {
        let (m, d) = a.shape();
        let n = b.nrows();
        let per_dim = (0..d)
            .map(|k| {
                DMatrix::from_fn(m, n, |i, j| {
                    let diff = a[(i, k)] - b[(j, k)];
                    diff * diff
                })
            })
            .collect();
        Self {
            per_dim,
            rows: m,
            cols: n,
        }
    }

    pub fn dim(&self) -> usize {
        self.per_dim.len()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// The squared-difference matrix for dimension `i`.
    pub fn per_dim(&self, i: usize) -> &DMatrix<f64> {
        &self.per_dim[i]
    }

    /// Jitter-free correlation matrix exp(−Σᵢ dᵢ/θᵢ).
    pub fn correlation(&self, theta: &Lengthscales) -> Result<DMatrix<f64>> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: theta.len(),
            });
        }
        let mut acc: DMatrix<f64> = DMatrix::zeros(self.rows, self.cols);
        let out = acc.as_mut_slice();
        for (i, d) in self.per_dim.iter().enumerate() {
            let w = 1.0 / theta[i];
            for (o, &v) in out.iter_mut().zip(d.as_slice()) {
                *o += w * v;
            }
        }
        for o in out.iter_mut() {
            *o = (-*o).exp();
        }
        Ok(acc)
    }
}

/// A factored training covariance: the jittered kernel matrix, its lower
/// Cholesky factor, and log|K|.
#[derive(Debug, Clone)]
pub struct CovarianceFactor {
    matrix: DMatrix<f64>,
    lower: DMatrix<f64>,
    log_determinant: f64,
}

impl CovarianceFactor {
    fn from_jittered(matrix: DMatrix<f64>) -> Result<Self> {
        let chol = matrix
            .clone()
            .cholesky()
            .ok_or(Error::FactorizationFailure)?;
        let lower = chol.unpack();
        let log_determinant = 2.0 * lower.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Self {
            matrix,
            lower,
            log_determinant,
        })
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// The jittered kernel matrix K + gI.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn lower_triangular(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn log_determinant(&self) -> f64 {
        self.log_determinant
    }

    /// K⁻¹ b via forward and back substitution.
    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        let half = self
            .lower
            .solve_lower_triangular(b)
            .expect("Cholesky factor has positive diagonal");
        self.lower
            .tr_solve_lower_triangular(&half)
            .expect("Cholesky factor has positive diagonal")
    }

    /// L⁻¹ B, the half-solve used for quadratic forms.
    pub fn half_solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.lower
            .solve_lower_triangular(b)
            .expect("Cholesky factor has positive diagonal")
    }

    /// L⁻¹ b for a single right-hand side.
    pub fn half_solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.lower
            .solve_lower_triangular(b)
            .expect("Cholesky factor has positive diagonal")
    }
}

/// Single-θ predictive distribution on m new locations.
#[derive(Debug, Clone)]
pub struct PredictiveMoments {
    /// Predictive mean in centered units; callers add the dataset's
    /// output_offset for raw-scale values.
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub tau2: f64,
}

/// Builds and factors the jittered training kernel K + gI.
pub fn kernel_matrix(
    x: &DMatrix<f64>,
    theta: &Lengthscales,
    config: &GpConfig,
) -> Result<CovarianceFactor> {
    kernel_matrix_from(&SquaredDistances::pairwise(x), theta, config)
}

/// As [`kernel_matrix`], reusing precomputed squared distances.
pub fn kernel_matrix_from(
    dists: &SquaredDistances,
    theta: &Lengthscales,
    config: &GpConfig,
) -> Result<CovarianceFactor> {
    config.validate()?;
    if dists.rows() != dists.cols() {
        return Err(Error::DimensionMismatch {
            expected: dists.rows(),
            actual: dists.cols(),
        });
    }
    let mut k = dists.correlation(theta)?;
    for i in 0..k.nrows() {
        k[(i, i)] += config.jitter;
    }
    CovarianceFactor::from_jittered(k)
}

/// Jitter-free cross-correlation matrix K(Xnew, X), m×n.
pub fn cross_kernel(
    xnew: &DMatrix<f64>,
    x: &DMatrix<f64>,
    theta: &Lengthscales,
) -> Result<DMatrix<f64>> {
    SquaredDistances::between(xnew, x)?.correlation(theta)
}

/// Closed-form scale estimate τ̂² = (1/n)·Yᵀ K⁻¹ Y.
pub fn tau2_hat(dataset: &Dataset, factor: &CovarianceFactor) -> Result<f64> {
    if factor.n() != dataset.n() {
        return Err(Error::DimensionMismatch {
            expected: dataset.n(),
            actual: factor.n(),
        });
    }
    let z = factor.half_solve_vec(dataset.outputs());
    Ok(z.norm_squared() / dataset.n() as f64)
}

/// Log-likelihood with τ² profiled out:
/// c − (n/2)·log(Yᵀ K⁻¹ Y) − (1/2)·log|K|, where
/// c = −(n/2)·log(2π) − n/2 + (n/2)·log n. The constant is pinned so this
/// equals the full log-likelihood evaluated at τ² = τ̂²(θ). Returns −∞ when
/// Yᵀ K⁻¹ Y is not positive.
pub fn profile_log_likelihood(
    dataset: &Dataset,
    theta: &Lengthscales,
    config: &GpConfig,
) -> Result<f64> {
    let factor = kernel_matrix(dataset.inputs(), theta, config)?;
    Ok(profile_parts(dataset, &factor)?.0)
}

/// Profile log-likelihood and τ̂² from an existing factorization; one
/// half-solve serves both.
pub fn profile_parts(dataset: &Dataset, factor: &CovarianceFactor) -> Result<(f64, f64)> {
    if factor.n() != dataset.n() {
        return Err(Error::DimensionMismatch {
            expected: dataset.n(),
            actual: factor.n(),
        });
    }
    let n = dataset.n() as f64;
    let z = factor.half_solve_vec(dataset.outputs());
    let s = z.norm_squared();
    if s <= 0.0 {
        return Ok((f64::NEG_INFINITY, 0.0));
    }
    let c = -(n / 2.0) * ((2.0 * std::f64::consts::PI).ln() + 1.0 - n.ln());
    let ll = c - (n / 2.0) * s.ln() - 0.5 * factor.log_determinant();
    Ok((ll, s / n))
}

/// Predictive mean and covariance at `xnew` for a single θ:
/// μ = K(Xnew,X) K⁻¹ Y and Σ = τ̂²·(K(Xnew,Xnew) − K(Xnew,X) K⁻¹ K(X,Xnew)),
/// with the jitter on the K(Xnew,Xnew) diagonal as in training.
pub fn predictive_moments(
    dataset: &Dataset,
    theta: &Lengthscales,
    xnew: &DMatrix<f64>,
    config: &GpConfig,
) -> Result<PredictiveMoments> {
    let train = SquaredDistances::pairwise(dataset.inputs());
    let cross = SquaredDistances::between(xnew, dataset.inputs())?;
    let newnew = SquaredDistances::pairwise(xnew);
    let factor = kernel_matrix_from(&train, theta, config)?;
    predictive_moments_from(dataset, theta, config, &factor, &cross, &newnew)
}

/// As [`predictive_moments`], reusing a factorization and distance caches.
pub fn predictive_moments_from(
    dataset: &Dataset,
    theta: &Lengthscales,
    config: &GpConfig,
    factor: &CovarianceFactor,
    cross: &SquaredDistances,
    newnew: &SquaredDistances,
) -> Result<PredictiveMoments> {
    let (kx, v, alpha, tau2) = predictive_core(dataset, theta, factor, cross)?;
    let mean = &kx * &alpha;

    let mut knew = newnew.correlation(theta)?;
    for i in 0..knew.nrows() {
        knew[(i, i)] += config.jitter;
    }
    let mut cov = knew - v.transpose() * &v;
    cov *= tau2;
    // Symmetrize and clamp round-off on the diagonal.
    for i in 0..cov.nrows() {
        for j in 0..i {
            let s = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            cov[(i, j)] = s;
            cov[(j, i)] = s;
        }
        let d = cov[(i, i)];
        if d < 0.0 && d >= -1e-10 {
            cov[(i, i)] = 0.0;
        }
    }
    Ok(PredictiveMoments {
        mean,
        covariance: cov,
        tau2,
    })
}

/// Diagonal-only predictive moments: mean, per-point variance, and τ̂².
/// Equivalent to the diagonal of [`predictive_moments`] but skips the m×m
/// covariance, which dominates runtime when m·(chain length) is large.
pub fn predictive_mean_variance(
    dataset: &Dataset,
    theta: &Lengthscales,
    xnew: &DMatrix<f64>,
    config: &GpConfig,
) -> Result<(DVector<f64>, DVector<f64>, f64)> {
    let factor = kernel_matrix(dataset.inputs(), theta, config)?;
    let cross = SquaredDistances::between(xnew, dataset.inputs())?;
    predictive_mean_variance_from(dataset, theta, config, &factor, &cross)
}

/// As [`predictive_mean_variance`], reusing a factorization and distances.
pub fn predictive_mean_variance_from(
    dataset: &Dataset,
    theta: &Lengthscales,
    config: &GpConfig,
    factor: &CovarianceFactor,
    cross: &SquaredDistances,
) -> Result<(DVector<f64>, DVector<f64>, f64)> {
    let (kx, v, alpha, tau2) = predictive_core(dataset, theta, factor, cross)?;
    let mean = &kx * &alpha;
    let prior_diag = 1.0 + config.jitter;
    let mut var = DVector::zeros(kx.nrows());
    for j in 0..kx.nrows() {
        let d = tau2 * (prior_diag - v.column(j).norm_squared());
        var[j] = if d < 0.0 && d >= -1e-10 { 0.0 } else { d };
    }
    Ok((mean, var, tau2))
}

/// Shared prediction plumbing: cross kernel, half-solved cross columns,
/// K⁻¹Y, and τ̂².
fn predictive_core(
    dataset: &Dataset,
    theta: &Lengthscales,
    factor: &CovarianceFactor,
    cross: &SquaredDistances,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DVector<f64>, f64)> {
    if factor.n() != dataset.n() {
        return Err(Error::DimensionMismatch {
            expected: dataset.n(),
            actual: factor.n(),
        });
    }
    if cross.cols() != dataset.n() {
        return Err(Error::DimensionMismatch {
            expected: dataset.n(),
            actual: cross.cols(),
        });
    }
    let kx = cross.correlation(theta)?;
    let z = factor.half_solve_vec(dataset.outputs());
    let tau2 = z.norm_squared() / dataset.n() as f64;
    let alpha = factor
        .lower_triangular()
        .tr_solve_lower_triangular(&z)
        .expect("Cholesky factor has positive diagonal");
    let v = factor.half_solve(&kx.transpose());
    Ok((kx, v, alpha, tau2))
}
