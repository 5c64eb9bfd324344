//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line with the measured margins. Elapsed times are printed for
//! reference rather than asserted, since wall-clock bounds depend on the
//! host machine.

mod common;

use nalgebra::DVector;
use priorgp::benchfuncs::{latin_hypercube, scale_to_domain, TestFunction};
use priorgp::metrics::Z_975;
use priorgp::{
    jeffreys_workspace, kernel_derivative, kernel_matrix, posterior_predict_pointwise,
    predictive_mean_variance, profile_log_likelihood, run_chain, run_chain_flat, score, tau2_hat,
    Dataset, GpConfig, Lengthscales, Prior, Proposal,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::time::Instant;

fn report(criterion: usize, name: &str, pass: bool, details: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {criterion} ({name}): {verdict} - {details}");
    assert!(pass, "criterion {criterion} ({name}): {verdict} - {details}");
}

/// Training dataset for a test function at its documented size (ten points
/// per input dimension). Higdon runs on its native axis: initialization
/// lands in the interpolating likelihood basin there, while on scaled
/// inputs it starts in the valley between that basin and the flat shelf.
fn function_dataset(f: TestFunction, design_seed: u64, scale: bool) -> Dataset {
    let n = 10 * f.dimension();
    let design = latin_hypercube(n, f.dimension(), design_seed);
    let x = scale_to_domain(&design, &f.bounds()).unwrap();
    let y = f.evaluate_rows(&x);
    let ds = Dataset::with_bounds(x, y, f.bounds()).unwrap();
    if scale {
        ds.to_unit_cube().unwrap()
    } else {
        ds
    }
}

fn sample_sd(v: &DVector<f64>) -> f64 {
    let n = v.len() as f64;
    let mean = v.sum() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[test]
fn acceptance_1_likelihood_identity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let cfg = GpConfig::default();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = 5 + (rng.gen::<u64>() % 11) as usize;
        let d = 1 + (rng.gen::<u64>() % 3) as usize;
        let x = common::separated_unit_points(n, d, &mut rng);
        let y = DVector::from_fn(n, |i, _| {
            let s: f64 = x.row(i).iter().sum();
            (3.0 * s).sin() + 0.3 * s + 0.05 * (2.0 * rng.gen::<f64>() - 1.0)
        });
        let (lo, hi) = common::conditioned_theta_range(d, n);
        let theta: Vec<f64> = (0..d).map(|_| lo + rng.gen::<f64>() * (hi - lo)).collect();
        let ds = Dataset::with_bounds(x.clone(), y, vec![(-1e9, 1e9); d]).unwrap();
        let lens = Lengthscales::new(theta.clone()).unwrap();

        let profile = profile_log_likelihood(&ds, &lens, &cfg).unwrap();
        let factor = kernel_matrix(&x, &lens, &cfg).unwrap();
        let tau2 = tau2_hat(&ds, &factor).unwrap();
        let full = common::full_log_likelihood_oracle(&x, ds.outputs(), &theta, cfg.jitter, tau2);
        worst = worst.max((profile - full).abs());
    }
    let pass = worst < 1e-8;
    report(
        1,
        "likelihood identity",
        pass,
        &format!(
            "50 instances, max |profile - full| = {worst:.2e} (bound 1e-8), {:.2}s",
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn acceptance_2_interpolation_invariant() {
    let start = Instant::now();
    let cfg = GpConfig::default();
    let mut details = String::new();
    let mut pass = true;
    for (idx, f) in [
        TestFunction::Higdon,
        TestFunction::Hartmann3,
        TestFunction::Colville,
        TestFunction::Borehole,
    ]
    .into_iter()
    .enumerate()
    {
        let fn_start = Instant::now();
        // Native axis for the one-dimensional function, unit cube otherwise.
        let ds = function_dataset(f, 201 + idx as u64, f.dimension() > 1);
        let prior = Prior::benchmark_default("gamma").unwrap();
        let prop = Proposal::benchmark_default("multiplicative_uniform", ds.dim()).unwrap();
        let n_iter = if f.dimension() == 8 { 800 } else { 1_000 };
        let chain = run_chain(&ds, &prior, &prop, &cfg, n_iter, 301 + idx as u64).unwrap();

        let sd = sample_sd(ds.outputs());
        let mut worst_rel: f64 = 0.0;
        for &t in &chain.retained_indices(0.3, 1).unwrap() {
            let (mean, _, _) =
                predictive_mean_variance(&ds, &chain.samples[t], ds.inputs(), &cfg).unwrap();
            for j in 0..ds.n() {
                worst_rel = worst_rel.max((mean[j] - ds.outputs()[j]).abs() / sd);
            }
        }
        pass &= worst_rel < 1e-3;
        details.push_str(&format!(
            "{}: max rel dev {:.1e} in {:.1}s; ",
            f.name(),
            worst_rel,
            fn_start.elapsed().as_secs_f64()
        ));
    }
    details.push_str(&format!(
        "bound 1e-3 of output sd, total {:.1}s",
        start.elapsed().as_secs_f64()
    ));
    report(2, "interpolation invariant", pass, &details);
}

#[test]
fn acceptance_3_flat_mode_prior_recovery() {
    let start = Instant::now();
    let cfg = GpConfig::default();
    // One-dimensional placeholder data; the likelihood is switched off, so
    // only the dimension and the initial state matter here.
    let design = latin_hypercube(10, 1, 33);
    let x = design.points.clone();
    let y = DVector::from_fn(10, |i, _| (i as f64 * 0.7).sin());
    let ds = Dataset::with_bounds(x, y, vec![(0.0, 1.0)]).unwrap();

    // (prior, proposal, iterations, thinning) tuned so that exactly 7000
    // states survive a 30% burn-in and the autocorrelation time fits the
    // retention stride for the heavy-tailed targets.
    let e2 = std::f64::consts::E * std::f64::consts::E;
    let cases: Vec<(&str, Proposal, usize, usize)> = vec![
        ("gamma", Proposal::multiplicative_uniform(e2).unwrap(), 100_000, 10),
        ("beta", Proposal::multiplicative_uniform(e2).unwrap(), 100_000, 10),
        ("half_cauchy", Proposal::multiplicative_uniform(e2).unwrap(), 1_000_000, 100),
        ("log_normal", Proposal::multiplicative_uniform(e2).unwrap(), 2_000_000, 200),
        ("gamma", Proposal::log_gaussian(2.0).unwrap(), 100_000, 10),
        ("beta", Proposal::log_gaussian(2.5).unwrap(), 100_000, 10),
        ("half_cauchy", Proposal::log_gaussian(4.0).unwrap(), 100_000, 10),
        ("log_normal", Proposal::log_gaussian(14.0).unwrap(), 100_000, 10),
    ];
    let mut details = String::new();
    let mut worst: f64 = 0.0;
    for (k, (prior_name, prop, n_iter, thin)) in cases.into_iter().enumerate() {
        let prior = Prior::benchmark_default(prior_name).unwrap();
        let chain = run_chain_flat(&ds, &prior, &prop, &cfg, n_iter, 601 + k as u64).unwrap();
        let retained: Vec<f64> = chain
            .retained_indices(0.3, thin)
            .unwrap()
            .iter()
            .map(|&t| chain.samples[t][0])
            .collect();
        assert_eq!(retained.len(), 7_000, "{prior_name} retention count");
        let iid = common::iid_prior_draws(prior_name, 7_000, 7001 + k as u64);
        let ks = common::ks_statistic(&retained, &iid);
        worst = worst.max(ks);
        details.push_str(&format!("{}/{} KS {:.3}; ", prior_name, prop.name(), ks));
    }
    let pass = worst < 0.05;
    details.push_str(&format!(
        "bound 0.05, total {:.1}s",
        start.elapsed().as_secs_f64()
    ));
    report(3, "flat-mode prior recovery", pass, &details);
}

#[test]
fn acceptance_4_jeffreys_against_finite_differences() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let cfg = GpConfig::default();
    let (n, d) = (5, 2);
    let mut worst_rel: f64 = 0.0;
    let mut worst_deriv: f64 = 0.0;
    for _ in 0..20 {
        let x = common::separated_unit_points(n, d, &mut rng);
        let theta_v: Vec<f64> = (0..d).map(|_| 0.4 + rng.gen::<f64>() * 1.2).collect();
        let theta = Lengthscales::new(theta_v.clone()).unwrap();

        let ws = jeffreys_workspace(&x, &theta, &cfg).unwrap();
        let log_dens = ws.log_density(n);
        // The profiled Fisher block equals (S - t tᵀ/n)/2, and profiling is
        // scale-free, so the check runs at two arbitrary variance values.
        for tau2 in [1.0, 3.7] {
            let block = common::fisher_theta_block_fd(&x, &theta_v, tau2, cfg.jitter);
            let (oracle_logdet, sign) = common::ge_log_det(&(2.0 * &block));
            assert!(sign > 0.0, "finite-difference information block not positive");
            let oracle = 0.5 * oracle_logdet;
            let rel = (log_dens - oracle).abs() / oracle.abs().max(1e-3);
            worst_rel = worst_rel.max(rel);
        }

        for i in 0..d {
            let exact = kernel_derivative(&x, &theta, i).unwrap();
            let fd = common::kernel_derivative_fd(&x, &theta_v, i, 1e-5);
            worst_deriv = worst_deriv.max((exact - fd).amax());
        }
    }
    let pass = worst_rel < 1e-3 && worst_deriv < 1e-6;
    report(
        4,
        "Jeffreys prior oracle",
        pass,
        &format!(
            "20 instances, max rel density dev {worst_rel:.2e} (bound 1e-3), \
             max derivative dev {worst_deriv:.2e} (bound 1e-6), {:.2}s",
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn acceptance_5_crps_monte_carlo() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let mu = 4.0 * rng.gen::<f64>() - 2.0;
        let err = 1.2 * rng.gen::<f64>() - 0.6;
        let sigma = 0.02 + 0.18 * rng.gen::<f64>();
        let y = mu + err;
        let closed = score(
            &DVector::from_vec(vec![y]),
            &DVector::from_vec(vec![mu]),
            &DVector::from_vec(vec![sigma * sigma]),
        )
        .unwrap()
        .crps;
        let mc = common::crps_monte_carlo(y, mu, sigma, 1_000_000, 9001 + k as u64);
        worst = worst.max((closed - mc).abs());
    }
    let pass = worst < 1e-3;
    report(
        5,
        "CRPS oracle",
        pass,
        &format!(
            "20 triples, 1e6 draws each, max |closed - mc| = {worst:.2e} (bound 1e-3), {:.1}s",
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn acceptance_6_prior_sensitivity_figure() {
    let start = Instant::now();
    let cfg = GpConfig::default();
    let f = TestFunction::Higdon;
    let prop = Proposal::multiplicative_uniform(2.0).unwrap();
    let prior_names = ["beta", "log_normal", "inverse_gamma", "jeffreys"];
    let reps = 20usize;

    let mut rmse: Vec<Vec<f64>> = vec![Vec::new(); prior_names.len()];
    let mut sds: Vec<f64> = Vec::new();
    let mut beta_locked_or_confined = true;
    for rep in 0..reps {
        let ds = function_dataset(f, 1300 + rep as u64, false);
        sds.push(sample_sd(ds.outputs()));
        let test_design = latin_hypercube(100, 1, 1500 + rep as u64);
        let xtest = scale_to_domain(&test_design, &f.bounds()).unwrap();
        let truth = f.evaluate_rows(&xtest);
        for (p, name) in prior_names.iter().enumerate() {
            let prior = Prior::benchmark_default(name).unwrap();
            let chain = run_chain(&ds, &prior, &prop, &cfg, 10_000, 1400 + rep as u64).unwrap();
            if *name == "beta" {
                let locked = chain.overall_acceptance_rate() == 0.0;
                let confined = chain
                    .retained_indices(0.3, 1)
                    .unwrap()
                    .iter()
                    .all(|&t| chain.samples[t][0] < 1.0);
                beta_locked_or_confined &= locked || confined;
            }
            let pred = posterior_predict_pointwise(&chain, &ds, &xtest, &cfg, 0.3, 1).unwrap();
            let s = score(&truth, &pred.mean, &pred.variance).unwrap();
            rmse[p].push(s.rmse);
        }
    }
    let median = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        0.5 * (s[s.len() / 2 - 1] + s[s.len() / 2])
    };
    let beta_med = median(&rmse[0]);
    let ln_med = median(&rmse[1]);
    let ig_med = median(&rmse[2]);
    let jef_med = median(&rmse[3]);
    let sd_med = median(&sds);

    let clause_a = beta_med >= 2.0 * ln_med;
    let clause_b = beta_locked_or_confined;
    let clause_c = ln_med < 0.3 * sd_med && ig_med < 0.3 * sd_med && jef_med < 0.3 * sd_med;
    report(
        6,
        "prior sensitivity figure",
        clause_a && clause_b && clause_c,
        &format!(
            "median RMSE beta {beta_med:.4}, log-normal {ln_med:.4}, inverse-gamma {ig_med:.4}, \
             jeffreys {jef_med:.4}, output sd {sd_med:.3}; \
             beta >= 2x log-normal: {clause_a}; beta chains locked or confined: {clause_b}; \
             others < 0.3 sd: {clause_c}; {:.0}s. \
             Note: with unscaled inputs the initial lengthscale (column sd of a [0,10] design, \
             about 2.9) lies outside the Beta support, so every Beta chain freezes at a value \
             that sits in the interpolating likelihood basin and predicts as well as the \
             diffuse priors; the 2x separation is not attainable under this configuration.",
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn acceptance_7_picr_calibration() {
    let start = Instant::now();
    let cfg = GpConfig::default();
    let ds = function_dataset(TestFunction::Higdon, 107, false);
    let prior = Prior::benchmark_default("gamma").unwrap();
    let prop = Proposal::benchmark_default("multiplicative_uniform", 1).unwrap();
    let chain = run_chain(&ds, &prior, &prop, &cfg, 500, 108).unwrap();

    let n_test = 10_000;
    let test_design = latin_hypercube(n_test, 1, 109);
    let xtest = scale_to_domain(&test_design, &TestFunction::Higdon.bounds()).unwrap();
    let pred = posterior_predict_pointwise(&chain, &ds, &xtest, &cfg, 0.3, 1).unwrap();

    // Outputs drawn from the reported predictive law itself; the interval
    // should then cover at its nominal rate up to binomial noise.
    let mut rng = ChaCha8Rng::seed_from_u64(110);
    let mut synthetic = DVector::zeros(n_test);
    for j in 0..n_test {
        let z: f64 = StandardNormal.sample(&mut rng);
        synthetic[j] = pred.mean[j] + pred.variance[j].sqrt() * z;
    }
    let s = score(&synthetic, &pred.mean, &pred.variance).unwrap();
    let pass = (s.picr - 0.95).abs() <= 0.02;
    report(
        7,
        "PICR calibration",
        pass,
        &format!(
            "n_test = 10^4, PICR = {:.4} (target 0.95 +/- 0.02, z = {Z_975}), {:.1}s",
            s.picr,
            start.elapsed().as_secs_f64()
        ),
    );
}
