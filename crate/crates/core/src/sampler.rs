//! Metropolis-within-Gibbs sampling over the lengthscales and
//! posterior-predictive aggregation over the retained chain.
//!
//! Each iteration sweeps the dimensions in ascending order, updating one
//! component at a time with a Metropolis step whose target is
//! prior × profile likelihood. All density arithmetic happens in log space;
//! a candidate that fails factorization or lands on zero mass is rejected,
//! and a zero-mass *current* state (possible only at initialization) rejects
//! everything, deliberately freezing the chain.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::gp::{
    kernel_matrix_from, predictive_mean_variance_from, predictive_moments_from, profile_parts,
    GpConfig, Lengthscales, SquaredDistances,
};
use crate::priors::Prior;
use crate::proposals::Proposal;

/// Candidates above this trip a once-per-chain stderr warning; runaway
/// lengthscales under weak priors are a known failure mode worth surfacing.
const DIVERGENCE_WARN_THRESHOLD: f64 = 1e12;

/// A completed sampling run. `samples` holds N+1 states including the
/// initial one; `tau2_samples[t]` is the profiled scale at `samples[t]`
/// (NaN throughout for flat-target runs, which never evaluate the
/// likelihood); `accept_flags` has one row per iteration with one flag per
/// dimension.
#[derive(Debug, Clone)]
pub struct Chain {
    pub samples: Vec<Lengthscales>,
    pub tau2_samples: Vec<f64>,
    pub accept_flags: Vec<Vec<bool>>,
    pub accept_counts: Vec<usize>,
    pub n_iterations: usize,
    pub seed: u64,
}

impl Chain {
    pub fn dim(&self) -> usize {
        self.accept_counts.len()
    }

    /// Per-dimension acceptance rates, accepts / N.
    pub fn acceptance_rates(&self) -> Vec<f64> {
        let n = self.n_iterations.max(1) as f64;
        self.accept_counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// Accepted moves over all N·d Metropolis steps.
    pub fn overall_acceptance_rate(&self) -> f64 {
        let steps = (self.n_iterations * self.dim()).max(1) as f64;
        self.accept_counts.iter().sum::<usize>() as f64 / steps
    }

    /// Indices of the retained states: with B = floor(burn_in_fraction·N),
    /// every `thinning`-th index from B+1 through N. The initial state is
    /// never retained.
    pub fn retained_indices(&self, burn_in_fraction: f64, thinning: usize) -> Result<Vec<usize>> {
        if !(0.0..1.0).contains(&burn_in_fraction) {
            return Err(Error::InvalidParameter(format!(
                "burn-in fraction must lie in [0, 1), got {burn_in_fraction}"
            )));
        }
        if thinning == 0 {
            return Err(Error::InvalidParameter("thinning must be at least 1".into()));
        }
        let b = (burn_in_fraction * self.n_iterations as f64).floor() as usize;
        Ok(((b + 1)..self.samples.len()).step_by(thinning).collect())
    }
}

/// Posterior-predictive aggregate over retained samples. `covariance` is
/// stored as the exact sum of its two parts: `aleatoric` (average of
/// per-sample predictive covariances) and `epistemic` (population covariance
/// of per-sample predictive means). `mean` is on the raw output scale.
#[derive(Debug, Clone)]
pub struct PredictiveSummary {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub aleatoric: DMatrix<f64>,
    pub epistemic: DMatrix<f64>,
    pub burn_in: usize,
}

/// Diagonal-only counterpart of [`PredictiveSummary`], for workloads where
/// only per-point variances are scored and the m×m matrices would dominate
/// runtime.
#[derive(Debug, Clone)]
pub struct PointwisePrediction {
    pub mean: DVector<f64>,
    pub variance: DVector<f64>,
    pub aleatoric: DVector<f64>,
    pub epistemic: DVector<f64>,
    pub burn_in: usize,
}

/// Starting state: θᵢ⁰ = sample standard deviation (n−1 denominator) of
/// input column i.
pub fn initialize(dataset: &Dataset) -> Result<Lengthscales> {
    let x = dataset.inputs();
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "initialization needs at least two points".into(),
        ));
    }
    let mut theta = Vec::with_capacity(x.ncols());
    for i in 0..x.ncols() {
        let col = x.column(i);
        let mean = col.sum() / n as f64;
        let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
        let sd = (ss / (n - 1) as f64).sqrt();
        if sd == 0.0 {
            return Err(Error::DegenerateDesign { column: i });
        }
        theta.push(sd);
    }
    Lengthscales::new(theta)
}

/// Runs N Gibbs sweeps targeting the lengthscale posterior. The chain is a
/// pure function of (dataset inputs/outputs, prior, proposal, config, N,
/// seed). Candidate-side failures (factorization, zero mass, overflow) are
/// rejections, never errors; only a failure at the initial state aborts.
pub fn run_chain(
    dataset: &Dataset,
    prior: &Prior,
    proposal: &Proposal,
    config: &GpConfig,
    n_iterations: usize,
    seed: u64,
) -> Result<Chain> {
    run_chain_inner(dataset, prior, proposal, config, n_iterations, seed, false)
}

/// As [`run_chain`] but with the likelihood forced to a constant, so the
/// chain targets the prior alone. Validates proposal corrections (the chain
/// must leave the prior invariant). No kernel is ever factored for
/// parametric priors, and `tau2_samples` is NaN throughout.
pub fn run_chain_flat(
    dataset: &Dataset,
    prior: &Prior,
    proposal: &Proposal,
    config: &GpConfig,
    n_iterations: usize,
    seed: u64,
) -> Result<Chain> {
    run_chain_inner(dataset, prior, proposal, config, n_iterations, seed, true)
}

fn run_chain_inner(
    dataset: &Dataset,
    prior: &Prior,
    proposal: &Proposal,
    config: &GpConfig,
    n_iterations: usize,
    seed: u64,
    flat_target: bool,
) -> Result<Chain> {
    if n_iterations == 0 {
        return Err(Error::InvalidParameter(
            "need at least one iteration".into(),
        ));
    }
    let mut theta = initialize(dataset)?;
    let d = theta.len();
    let dists = SquaredDistances::pairwise(dataset.inputs());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Current-state log prior, log likelihood, and τ̂², cached across the
    // whole sweep; refreshed only on acceptance.
    let (mut cur_lp, mut cur_ll, mut cur_tau2) = if flat_target {
        (prior.log_density(&theta, dataset, config)?, 0.0, f64::NAN)
    } else {
        let factor = kernel_matrix_from(&dists, &theta, config)?;
        let (ll, tau2) = profile_parts(dataset, &factor)?;
        let lp = prior.log_density_reusing(&theta, dataset.n(), &dists, &factor);
        (lp, ll, tau2)
    };

    let mut samples = Vec::with_capacity(n_iterations + 1);
    let mut tau2_samples = Vec::with_capacity(n_iterations + 1);
    let mut accept_flags = Vec::with_capacity(n_iterations);
    let mut accept_counts = vec![0usize; d];
    samples.push(theta.clone());
    tau2_samples.push(cur_tau2);
    let mut warned_divergent = false;

    for _ in 0..n_iterations {
        let mut flags = vec![false; d];
        for i in 0..d {
            // Fixed two-draw budget per step (candidate, then acceptance
            // uniform) so the stream position depends only on the step count.
            let cand_i = proposal.propose(theta[i], &mut rng);
            let u: f64 = rng.gen();

            if cand_i > DIVERGENCE_WARN_THRESHOLD && !warned_divergent {
                eprintln!(
                    "warning: lengthscale candidate {cand_i:.3e} in dimension {i} exceeds {DIVERGENCE_WARN_THRESHOLD:.0e}; chain may be diverging"
                );
                warned_divergent = true;
            }

            let Ok(cand) = theta.replaced(i, cand_i) else {
                // Candidate overflowed to infinity; zero-mass, rejected.
                continue;
            };
            let correction = proposal.log_correction(theta[i], cand_i);

            let (cand_lp, cand_ll, cand_tau2) = if flat_target {
                match prior.log_density(&cand, dataset, config) {
                    Ok(lp) => (lp, 0.0, f64::NAN),
                    Err(_) => continue,
                }
            } else {
                let Ok(factor) = kernel_matrix_from(&dists, &cand, config) else {
                    continue;
                };
                let (ll, tau2) = profile_parts(dataset, &factor)?;
                let lp = prior.log_density_reusing(&cand, dataset.n(), &dists, &factor);
                (lp, ll, tau2)
            };

            let cand_total = cand_lp + cand_ll;
            let cur_total = cur_lp + cur_ll;
            // Zero mass on either side rejects; in particular a zero-mass
            // current state never escapes.
            if !cand_total.is_finite() || !cur_total.is_finite() {
                continue;
            }
            let log_alpha = cand_total - cur_total + correction;
            if u.ln() < log_alpha {
                theta = cand;
                cur_lp = cand_lp;
                cur_ll = cand_ll;
                cur_tau2 = cand_tau2;
                flags[i] = true;
                accept_counts[i] += 1;
            }
        }
        samples.push(theta.clone());
        tau2_samples.push(cur_tau2);
        accept_flags.push(flags);
    }

    Ok(Chain {
        samples,
        tau2_samples,
        accept_flags,
        accept_counts,
        n_iterations,
        seed,
    })
}

/// Full posterior predictive at `xnew`: averages the per-sample predictive
/// moments over the retained states and splits the covariance into the
/// average within-sample part plus the between-sample spread of the means
/// (law of total variance, population denominator).
pub fn posterior_predict(
    chain: &Chain,
    dataset: &Dataset,
    xnew: &DMatrix<f64>,
    config: &GpConfig,
    burn_in_fraction: f64,
    thinning: usize,
) -> Result<PredictiveSummary> {
    let retained = chain.retained_indices(burn_in_fraction, thinning)?;
    if retained.is_empty() {
        return Err(Error::EmptyChain);
    }
    let b = (burn_in_fraction * chain.n_iterations as f64).floor() as usize;
    let m = xnew.nrows();
    let dists = SquaredDistances::pairwise(dataset.inputs());
    let cross = SquaredDistances::between(xnew, dataset.inputs())?;
    let newnew = SquaredDistances::pairwise(xnew);

    let mut mean_sum: DVector<f64> = DVector::zeros(m);
    let mut cov_sum: DMatrix<f64> = DMatrix::zeros(m, m);
    // Between-sample moments accumulate relative to the first retained mean;
    // the shift cancels in the covariance and keeps the outer products small.
    let mut shift: Option<DVector<f64>> = None;
    let mut dev_sum: DVector<f64> = DVector::zeros(m);
    let mut dev_outer_sum: DMatrix<f64> = DMatrix::zeros(m, m);

    for &t in &retained {
        let theta = &chain.samples[t];
        let factor = kernel_matrix_from(&dists, theta, config)?;
        let p = predictive_moments_from(dataset, theta, config, &factor, &cross, &newnew)?;
        mean_sum += &p.mean;
        cov_sum += &p.covariance;
        let shift = shift.get_or_insert_with(|| p.mean.clone());
        let dev = &p.mean - &*shift;
        dev_outer_sum += &dev * dev.transpose();
        dev_sum += dev;
    }

    let r = retained.len() as f64;
    let aleatoric = cov_sum / r;
    let dev_mean = dev_sum / r;
    let epistemic = dev_outer_sum / r - &dev_mean * dev_mean.transpose();
    let covariance = &aleatoric + &epistemic;
    let mean = mean_sum / r + DVector::from_element(m, dataset.output_offset());
    Ok(PredictiveSummary {
        mean,
        covariance,
        aleatoric,
        epistemic,
        burn_in: b,
    })
}

/// Diagonal-only posterior predictive; same retention and aggregation rules
/// as [`posterior_predict`], skipping all m×m matrices. Between-sample
/// variances are clamped at zero against round-off.
pub fn posterior_predict_pointwise(
    chain: &Chain,
    dataset: &Dataset,
    xnew: &DMatrix<f64>,
    config: &GpConfig,
    burn_in_fraction: f64,
    thinning: usize,
) -> Result<PointwisePrediction> {
    let retained = chain.retained_indices(burn_in_fraction, thinning)?;
    if retained.is_empty() {
        return Err(Error::EmptyChain);
    }
    let b = (burn_in_fraction * chain.n_iterations as f64).floor() as usize;
    let m = xnew.nrows();
    let dists = SquaredDistances::pairwise(dataset.inputs());
    let cross = SquaredDistances::between(xnew, dataset.inputs())?;

    let mut mean_sum: DVector<f64> = DVector::zeros(m);
    let mut var_sum: DVector<f64> = DVector::zeros(m);
    let mut shift: Option<DVector<f64>> = None;
    let mut dev_sum: DVector<f64> = DVector::zeros(m);
    let mut dev_sq_sum: DVector<f64> = DVector::zeros(m);

    for &t in &retained {
        let theta = &chain.samples[t];
        let factor = kernel_matrix_from(&dists, theta, config)?;
        let (mean, var, _) =
            predictive_mean_variance_from(dataset, theta, config, &factor, &cross)?;
        mean_sum += &mean;
        var_sum += &var;
        let shift = shift.get_or_insert_with(|| mean.clone());
        for j in 0..m {
            let dev = mean[j] - shift[j];
            dev_sum[j] += dev;
            dev_sq_sum[j] += dev * dev;
        }
    }

    let r = retained.len() as f64;
    let aleatoric = var_sum / r;
    let mut epistemic = DVector::zeros(m);
    for j in 0..m {
        let dm = dev_sum[j] / r;
        epistemic[j] = (dev_sq_sum[j] / r - dm * dm).max(0.0);
    }
    let variance = &aleatoric + &epistemic;
    let mean = mean_sum / r + DVector::from_element(m, dataset.output_offset());
    Ok(PointwisePrediction {
        mean,
        variance,
        aleatoric,
        epistemic,
        burn_in: b,
    })
}
