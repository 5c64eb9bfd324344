//! Log-density evaluation for the six lengthscale priors.
//!
//! The five parametric priors act independently per component; their log
//! densities are normalized so that each component integrates to one over its
//! support. The Jeffreys prior is joint over θ and data-dependent: it is
//! (1/2)·log|S − (1/n)ttᵀ| built from kernel-derivative traces, the θ-block
//! of the Fisher information with τ² profiled out.

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::gp::{kernel_matrix_from, CovarianceFactor, GpConfig, Lengthscales, SquaredDistances};

/// A lengthscale prior with its hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Prior {
    /// Density ∝ θ^{−(shape+1)} e^{−scale/θ} on θ > 0.
    InverseGamma { shape: f64, scale: f64 },
    /// Standard Beta on (0, 1); zero mass outside the unit interval.
    Beta { alpha: f64, beta: f64 },
    /// Density 2/(πσ·(1+(θ/σ)²)) on θ > 0.
    HalfCauchy { scale: f64 },
    /// Rate parameterization: density ∝ θ^{shape−1} e^{−rate·θ} on θ > 0.
    Gamma { shape: f64, rate: f64 },
    /// log θ ~ Normal(mu, sigma²).
    LogNormal { mu: f64, sigma: f64 },
    /// Data-dependent objective prior; see [`jeffreys_workspace`].
    Jeffreys,
}

impl Prior {
    pub fn inverse_gamma(shape: f64, scale: f64) -> Result<Self> {
        require_positive("inverse-gamma shape", shape)?;
        require_positive("inverse-gamma scale", scale)?;
        Ok(Self::InverseGamma { shape, scale })
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        require_positive("beta alpha", alpha)?;
        require_positive("beta beta", beta)?;
        Ok(Self::Beta { alpha, beta })
    }

    pub fn half_cauchy(scale: f64) -> Result<Self> {
        require_positive("half-cauchy scale", scale)?;
        Ok(Self::HalfCauchy { scale })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        require_positive("gamma shape", shape)?;
        require_positive("gamma rate", rate)?;
        Ok(Self::Gamma { shape, rate })
    }

    pub fn log_normal(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "log-normal mu must be finite, got {mu}"
            )));
        }
        require_positive("log-normal sigma", sigma)?;
        Ok(Self::LogNormal { mu, sigma })
    }

    pub const fn jeffreys() -> Self {
        Self::Jeffreys
    }

    /// The six benchmark configurations by name, with their standard
    /// hyperparameters: inverse_gamma(5,5), beta(1,1), half_cauchy(1),
    /// gamma(1.5, 2.6), log_normal(0,10), jeffreys.
    pub fn benchmark_default(name: &str) -> Option<Self> {
        match name {
            "inverse_gamma" => Some(Self::InverseGamma {
                shape: 5.0,
                scale: 5.0,
            }),
            "beta" => Some(Self::Beta {
                alpha: 1.0,
                beta: 1.0,
            }),
            "half_cauchy" => Some(Self::HalfCauchy { scale: 1.0 }),
            "gamma" => Some(Self::Gamma {
                shape: 1.5,
                rate: 3.9 / 1.5,
            }),
            "log_normal" => Some(Self::LogNormal {
                mu: 0.0,
                sigma: 10.0,
            }),
            "jeffreys" => Some(Self::Jeffreys),
            _ => None,
        }
    }

    /// All benchmark prior names, in the grid's canonical order.
    pub const BENCHMARK_NAMES: [&'static str; 6] = [
        "inverse_gamma",
        "beta",
        "half_cauchy",
        "gamma",
        "log_normal",
        "jeffreys",
    ];

    /// Stable identifier used in result tables.
    pub fn name(&self) -> &'static str {
        match self {
            Self::InverseGamma { .. } => "inverse_gamma",
            Self::Beta { .. } => "beta",
            Self::HalfCauchy { .. } => "half_cauchy",
            Self::Gamma { .. } => "gamma",
            Self::LogNormal { .. } => "log_normal",
            Self::Jeffreys => "jeffreys",
        }
    }

    /// Joint log prior density at θ. Parametric priors sum per-component log
    /// densities and return −∞ when any component leaves the support; the
    /// Jeffreys prior is evaluated from the dataset's inputs. Only the
    /// Jeffreys variant can error (kernel factorization).
    pub fn log_density(
        &self,
        theta: &Lengthscales,
        dataset: &Dataset,
        config: &GpConfig,
    ) -> Result<f64> {
        match self {
            Self::Jeffreys => {
                let ws = jeffreys_workspace(dataset.inputs(), theta, config)?;
                Ok(ws.log_density(dataset.n()))
            }
            _ => Ok(theta
                .as_slice()
                .iter()
                .map(|&t| self.component_log_density(t))
                .sum()),
        }
    }

    /// As [`Prior::log_density`] but reusing the caller's factorization and
    /// distance cache, so Jeffreys evaluation shares the likelihood's
    /// Cholesky factor.
    pub(crate) fn log_density_reusing(
        &self,
        theta: &Lengthscales,
        n: usize,
        dists: &SquaredDistances,
        factor: &CovarianceFactor,
    ) -> f64 {
        match self {
            Self::Jeffreys => jeffreys_workspace_from(dists, theta, factor).log_density(n),
            _ => theta
                .as_slice()
                .iter()
                .map(|&t| self.component_log_density(t))
                .sum(),
        }
    }

    /// Normalized log density of one component for the parametric kinds.
    /// Panics if called on `Jeffreys`, which has no per-component form.
    pub fn component_log_density(&self, theta: f64) -> f64 {
        if theta <= 0.0 {
            return f64::NEG_INFINITY;
        }
        match *self {
            Self::InverseGamma { shape, scale } => {
                shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * theta.ln() - scale / theta
            }
            Self::Beta { alpha, beta } => {
                if theta >= 1.0 {
                    return f64::NEG_INFINITY;
                }
                let ln_b = ln_gamma(alpha) + ln_gamma(beta) - ln_gamma(alpha + beta);
                (alpha - 1.0) * theta.ln() + (beta - 1.0) * (1.0 - theta).ln() - ln_b
            }
            Self::HalfCauchy { scale } => {
                let r = theta / scale;
                (2.0 / std::f64::consts::PI).ln() - scale.ln() - (1.0 + r * r).ln()
            }
            Self::Gamma { shape, rate } => {
                shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * theta.ln() - rate * theta
            }
            Self::LogNormal { mu, sigma } => {
                let z = (theta.ln() - mu) / sigma;
                -theta.ln() - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * z * z
            }
            Self::Jeffreys => panic!("Jeffreys prior has no per-component density"),
        }
    }
}

fn require_positive(what: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{what} must be positive and finite, got {value}"
        )))
    }
}

/// Fisher-information traces for the Jeffreys prior:
/// tᵢ = tr(K⁻¹ ∂K/∂θᵢ) and S_ij = tr(K⁻¹ ∂K/∂θᵢ K⁻¹ ∂K/∂θⱼ).
#[derive(Debug, Clone)]
pub struct JeffreysWorkspace {
    pub t: DVector<f64>,
    pub s: DMatrix<f64>,
}

impl JeffreysWorkspace {
    /// (1/2)·log|S − (1/n)ttᵀ|, or −∞ when the matrix is not numerically
    /// positive definite (zero prior mass rather than an error).
    pub fn log_density(&self, n: usize) -> f64 {
        let m = &self.s - (&self.t * self.t.transpose()) / n as f64;
        match m.cholesky() {
            Some(ch) => ch.l_dirty().diagonal().iter().map(|v| v.ln()).sum(),
            None => f64::NEG_INFINITY,
        }
    }
}

/// ∂K/∂θᵢ for the jitter-free kernel:
/// (∂K/∂θᵢ)_ab = K_ab · (x_{a,i} − x_{b,i})² / θᵢ². Symmetric, zero diagonal.
pub fn kernel_derivative(
    x: &DMatrix<f64>,
    theta: &Lengthscales,
    i: usize,
) -> Result<DMatrix<f64>> {
    let dists = SquaredDistances::pairwise(x);
    kernel_derivative_from(&dists, theta, i)
}

fn kernel_derivative_from(
    dists: &SquaredDistances,
    theta: &Lengthscales,
    i: usize,
) -> Result<DMatrix<f64>> {
    if i >= theta.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            dimension: theta.len(),
        });
    }
    let mut deriv = dists.correlation(theta)?;
    let w = 1.0 / (theta[i] * theta[i]);
    for (d, &sq) in deriv
        .as_mut_slice()
        .iter_mut()
        .zip(dists.per_dim(i).as_slice())
    {
        *d *= w * sq;
    }
    Ok(deriv)
}

/// Builds the Jeffreys trace quantities at θ. Inversion uses the jittered
/// kernel; the derivatives are jitter-free.
pub fn jeffreys_workspace(
    x: &DMatrix<f64>,
    theta: &Lengthscales,
    config: &GpConfig,
) -> Result<JeffreysWorkspace> {
    let dists = SquaredDistances::pairwise(x);
    let factor = kernel_matrix_from(&dists, theta, config)?;
    Ok(jeffreys_workspace_from(&dists, theta, &factor))
}

/// Trace computation with a caller-supplied factorization. For each
/// dimension, C_i = L⁻¹ D_i L⁻ᵀ is symmetric, t_i = tr(C_i), and
/// S_ij = ⟨C_i, C_j⟩ in the Frobenius inner product.
pub(crate) fn jeffreys_workspace_from(
    dists: &SquaredDistances,
    theta: &Lengthscales,
    factor: &CovarianceFactor,
) -> JeffreysWorkspace {
    let d = theta.len();
    let conjugated: Vec<DMatrix<f64>> = (0..d)
        .map(|i| {
            let deriv = kernel_derivative_from(dists, theta, i)
                .expect("dimension index bounded by construction");
            let half = factor.half_solve(&deriv);
            factor.half_solve(&half.transpose())
        })
        .collect();
    let t = DVector::from_fn(d, |i, _| conjugated[i].trace());
    let mut s = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let v = conjugated[i]
                .as_slice()
                .iter()
                .zip(conjugated[j].as_slice())
                .map(|(a, b)| a * b)
                .sum();
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    JeffreysWorkspace { t, s }
}
