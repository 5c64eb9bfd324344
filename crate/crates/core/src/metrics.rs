//! Pointwise scoring of predictive distributions: RMSE, closed-form Gaussian
//! CRPS, and 95% predictive-interval coverage. All three are averages over
//! test points and use only per-point means and variances.

use nalgebra::DVector;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Upper 97.5% standard-normal quantile, pinned to nine decimals so interval
/// bounds are stable across statrs versions.
pub const Z_975: f64 = 1.959963985;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub rmse: f64,
    pub crps: f64,
    pub picr: f64,
    pub n_test: usize,
}

/// Scores predictions against the truth. `variance` entries must be
/// non-negative; a zero variance degenerates to CRPS = |y−μ̂| and a coverage
/// indicator of exact equality.
pub fn score(truth: &DVector<f64>, mean: &DVector<f64>, variance: &DVector<f64>) -> Result<Scores> {
    let n = truth.len();
    if mean.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: mean.len(),
        });
    }
    if variance.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: variance.len(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidParameter("no test points to score".into()));
    }
    for (i, &v) in variance.iter().enumerate() {
        if !(v >= 0.0) {
            return Err(Error::NegativeVariance { index: i, value: v });
        }
    }

    let normal = Normal::new(0.0, 1.0).expect("unit normal parameters are valid");
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    let mut sq_err_sum = 0.0;
    let mut crps_sum = 0.0;
    let mut covered = 0usize;
    for i in 0..n {
        let err = truth[i] - mean[i];
        sq_err_sum += err * err;
        let sigma = variance[i].sqrt();
        if sigma == 0.0 {
            crps_sum += err.abs();
            if err == 0.0 {
                covered += 1;
            }
        } else {
            let z = err / sigma;
            let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
            crps_sum += sigma * (2.0 * pdf + z * (2.0 * normal.cdf(z) - 1.0) - inv_sqrt_pi);
            if err.abs() <= Z_975 * sigma {
                covered += 1;
            }
        }
    }

    Ok(Scores {
        rmse: (sq_err_sum / n as f64).sqrt(),
        crps: crps_sum / n as f64,
        picr: covered as f64 / n as f64,
        n_test: n,
    })
}
