//! Candidate generation and Hastings corrections for the per-dimension
//! Metropolis step.
//!
//! Both kernels act on a single lengthscale component and stay strictly
//! positive: the multiplicative walk by construction, the log-Gaussian walk
//! by truncating below at a small floor. `log_correction` returns
//! log q(current | candidate) − log q(candidate | current), the term added to
//! the target ratio in the acceptance probability.

use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Default truncation floor for the log-Gaussian walk; keeps candidates away
/// from zero where the kernel matrix degenerates.
pub const DEFAULT_LOWER_BOUND: f64 = 1e-10;

/// A symmetric-in-log-space proposal kernel for one lengthscale component.
#[derive(Debug, Clone, PartialEq)]
pub enum Proposal {
    /// θ* ~ Uniform(θ/u, u·θ) with u > 1.
    MultiplicativeUniform { u: f64 },
    /// log θ* ~ Normal(log θ, σ²) truncated below at log(lower_bound).
    LogGaussian { sigma: f64, lower_bound: f64 },
}

impl Proposal {
    pub fn multiplicative_uniform(u: f64) -> Result<Self> {
        if !(u > 1.0) || !u.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "multiplicative factor must exceed 1, got {u}"
            )));
        }
        Ok(Self::MultiplicativeUniform { u })
    }

    pub fn log_gaussian(sigma: f64) -> Result<Self> {
        Self::log_gaussian_with_bound(sigma, DEFAULT_LOWER_BOUND)
    }

    pub fn log_gaussian_with_bound(sigma: f64, lower_bound: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "log-gaussian sigma must be positive, got {sigma}"
            )));
        }
        if !(lower_bound > 0.0) || !lower_bound.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lower bound must be positive and finite, got {lower_bound}"
            )));
        }
        Ok(Self::LogGaussian { sigma, lower_bound })
    }

    /// The two benchmark configurations by name, with step sizes keyed to
    /// input dimension: u=2 and σ=0.5 up to four dimensions, u=1.5 and σ=0.1
    /// above.
    pub fn benchmark_default(name: &str, dim: usize) -> Option<Self> {
        match name {
            "multiplicative_uniform" => Some(Self::MultiplicativeUniform {
                u: if dim <= 4 { 2.0 } else { 1.5 },
            }),
            "log_gaussian" => Some(Self::LogGaussian {
                sigma: if dim <= 4 { 0.5 } else { 0.1 },
                lower_bound: DEFAULT_LOWER_BOUND,
            }),
            _ => None,
        }
    }

    /// Both benchmark proposal names, in the grid's canonical order.
    pub const BENCHMARK_NAMES: [&'static str; 2] = ["multiplicative_uniform", "log_gaussian"];

    /// Stable identifier used in result tables.
    pub fn name(&self) -> &'static str {
        match self {
            Self::MultiplicativeUniform { .. } => "multiplicative_uniform",
            Self::LogGaussian { .. } => "log_gaussian",
        }
    }

    /// Draws one candidate from q(·|current), consuming exactly one uniform
    /// variate. Always returns a strictly positive value.
    pub fn propose<R: Rng + ?Sized>(&self, current: f64, rng: &mut R) -> f64 {
        debug_assert!(current > 0.0);
        let r: f64 = rng.gen();
        match *self {
            Self::MultiplicativeUniform { u } => {
                let lo = current / u;
                lo + r * (current * u - lo)
            }
            Self::LogGaussian { sigma, lower_bound } => {
                let normal = std_normal();
                let log_lb = lower_bound.ln();
                let log_cur = current.ln();
                let phi_lb = normal.cdf((log_lb - log_cur) / sigma);
                // Inverse-CDF draw from the truncated region [phi_lb, 1).
                let q = phi_lb + r * (1.0 - phi_lb);
                let z = normal.inverse_cdf(q);
                (log_cur + sigma * z).exp().max(lower_bound)
            }
        }
    }

    /// log q(current | candidate) − log q(candidate | current). Zero when the
    /// two coincide; −∞ when either point lies outside the kernel's reachable
    /// set (defensive; the sampler then rejects).
    pub fn log_correction(&self, current: f64, candidate: f64) -> f64 {
        match *self {
            Self::MultiplicativeUniform { u } => {
                // Mutual reachability: candidate within [current/u, current·u],
                // with a hair of slack for the arithmetic in propose.
                let slack = 1.0 + 1e-12;
                if candidate > current * u * slack || candidate < current / u / slack {
                    return f64::NEG_INFINITY;
                }
                current.ln() - candidate.ln()
            }
            Self::LogGaussian { sigma, lower_bound } => {
                if current < lower_bound || candidate < lower_bound {
                    return f64::NEG_INFINITY;
                }
                let normal = std_normal();
                let log_lb = lower_bound.ln();
                // 1 − Φ((log lb − log c)/σ), the mass kept by truncation when
                // centered at c; computed as Φ of the negated argument.
                let z_cur = normal.cdf((current.ln() - log_lb) / sigma);
                let z_cand = normal.cdf((candidate.ln() - log_lb) / sigma);
                (candidate / current).ln() + z_cur.ln() - z_cand.ln()
            }
        }
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal parameters are valid")
}
