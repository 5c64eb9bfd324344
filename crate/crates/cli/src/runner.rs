//! The repetition loop and its persistence: every (configuration,
//! repetition) cell runs independently on a worker pool, failures are
//! recorded in the row rather than aborting the batch, and rows are written
//! through one serialized writer in deterministic order, flushed row by row
//! so an interrupted run keeps everything finished so far.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use priorgp::benchfuncs::{latin_hypercube, load_dataset, scale_to_domain, TestFunction};
use priorgp::seeding::counter_rng_seed;
use priorgp::{posterior_predict_pointwise, run_chain, score, Chain, Dataset, GpConfig, Prior};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Configuration, RunPlan, RunSettings, Target};

pub const STATUS_OK: &str = "ok";
pub const RESULTS_HEADER: &str =
    "repetition,target,prior,proposal,rmse,crps,picr,accept_rate,wall_secs,seed,status";

/// One repetition of one configuration, as persisted to results.csv. Metric
/// fields are empty in the file when the repetition failed; `status` is
/// either "ok" or the error message (commas and newlines replaced).
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub repetition: usize,
    pub target: String,
    pub prior: String,
    pub proposal: String,
    pub rmse: Option<f64>,
    pub crps: Option<f64>,
    pub picr: Option<f64>,
    pub accept_rate: Option<f64>,
    pub wall_secs: f64,
    pub seed: u64,
    pub status: String,
}

fn opt_field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_opt_field(s: &str, line: usize, name: &str) -> Result<Option<f64>, String> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| format!("results line {line}: field {name} is not a number: '{s}'"))
}

impl ResultRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.repetition,
            self.target,
            self.prior,
            self.proposal,
            opt_field(self.rmse),
            opt_field(self.crps),
            opt_field(self.picr),
            opt_field(self.accept_rate),
            self.wall_secs,
            self.seed,
            self.status
        )
    }

    pub fn parse_csv_line(line: &str, lineno: usize) -> Result<Self, String> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 11 {
            return Err(format!(
                "results line {lineno}: expected 11 fields, found {}",
                fields.len()
            ));
        }
        Ok(Self {
            repetition: fields[0]
                .parse()
                .map_err(|_| format!("results line {lineno}: bad repetition '{}'", fields[0]))?,
            target: fields[1].to_string(),
            prior: fields[2].to_string(),
            proposal: fields[3].to_string(),
            rmse: parse_opt_field(fields[4], lineno, "rmse")?,
            crps: parse_opt_field(fields[5], lineno, "crps")?,
            picr: parse_opt_field(fields[6], lineno, "picr")?,
            accept_rate: parse_opt_field(fields[7], lineno, "accept_rate")?,
            wall_secs: fields[8]
                .parse()
                .map_err(|_| format!("results line {lineno}: bad wall_secs '{}'", fields[8]))?,
            seed: fields[9]
                .parse()
                .map_err(|_| format!("results line {lineno}: bad seed '{}'", fields[9]))?,
            status: fields[10].to_string(),
        })
    }
}

/// Reads a results.csv produced by [`run_plan`] back into rows.
pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == RESULTS_HEADER => {}
        Some((_, header)) => return Err(format!("unexpected results header: '{header}'")),
        None => return Err("results file is empty".into()),
    }
    lines
        .map(|(i, line)| ResultRow::parse_csv_line(line, i + 1))
        .collect()
}

/// Replaces the wall-clock field of every data row with a fixed marker, so
/// two runs of the same plan can be compared byte for byte.
pub fn mask_wall_secs(results_csv: &str) -> String {
    let mut out = String::with_capacity(results_csv.len());
    for (i, line) in results_csv.lines().enumerate() {
        if i == 0 || line.is_empty() {
            out.push_str(line);
        } else {
            let fields: Vec<&str> = line.split(',').collect();
            for (j, f) in fields.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(if j == 8 { "-" } else { f });
            }
        }
        out.push('\n');
    }
    out
}

/// Five-number summary of one metric across the successful repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

/// One summary line per configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub target: String,
    pub prior: String,
    pub proposal: String,
    pub count: usize,
    pub rmse: MetricSummary,
    pub crps: MetricSummary,
    pub picr: MetricSummary,
    pub accept_rate: MetricSummary,
}

pub const SUMMARY_HEADER: &str = "target,prior,proposal,count,\
rmse_median,rmse_q1,rmse_q3,rmse_min,rmse_max,\
crps_median,crps_q1,crps_q3,crps_min,crps_max,\
picr_median,picr_q1,picr_q3,picr_min,picr_max,\
accept_rate_median,accept_rate_q1,accept_rate_q3,accept_rate_min,accept_rate_max";

fn median_sorted(s: &[f64]) -> f64 {
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// (q1, median, q3) by the median-of-halves rule: the quartiles are medians
/// of the lower and upper halves, excluding the middle element when the
/// count is odd. Values 1..5 give (1.5, 3, 4.5); a single value repeats.
pub fn quartiles(values: &[f64]) -> (f64, f64, f64) {
    assert!(!values.is_empty(), "quartiles of an empty slice");
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("NaN in metric values"));
    let n = s.len();
    let med = median_sorted(&s);
    if n == 1 {
        return (s[0], med, s[0]);
    }
    let half = n / 2;
    (median_sorted(&s[..half]), med, median_sorted(&s[n - half..]))
}

fn summarize_metric(values: &[f64]) -> MetricSummary {
    if values.is_empty() {
        return MetricSummary {
            median: f64::NAN,
            q1: f64::NAN,
            q3: f64::NAN,
            min: f64::NAN,
            max: f64::NAN,
        };
    }
    let (q1, median, q3) = quartiles(values);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    MetricSummary {
        median,
        q1,
        q3,
        min,
        max,
    }
}

/// Groups rows by (target, prior, proposal) in first-seen order and reduces
/// each metric over the successful repetitions of the group.
pub fn summarize(rows: &[ResultRow]) -> Result<Vec<SummaryRow>, String> {
    if rows.is_empty() {
        return Err("cannot summarize zero result rows".into());
    }
    let mut order: Vec<(String, String, String)> = Vec::new();
    let mut groups: HashMap<(String, String, String), Vec<&ResultRow>> = HashMap::new();
    for row in rows {
        let key = (row.target.clone(), row.prior.clone(), row.proposal.clone());
        groups.entry(key.clone()).or_insert_with(|| {
            order.push(key.clone());
            Vec::new()
        });
        groups.get_mut(&key).unwrap().push(row);
    }
    let mut out = Vec::with_capacity(order.len());
    for key in order {
        let members = &groups[&key];
        let ok: Vec<&&ResultRow> = members.iter().filter(|r| r.status == STATUS_OK).collect();
        let pick = |f: fn(&ResultRow) -> Option<f64>| -> Vec<f64> {
            ok.iter().filter_map(|r| f(r)).collect()
        };
        out.push(SummaryRow {
            target: key.0,
            prior: key.1,
            proposal: key.2,
            count: ok.len(),
            rmse: summarize_metric(&pick(|r| r.rmse)),
            crps: summarize_metric(&pick(|r| r.crps)),
            picr: summarize_metric(&pick(|r| r.picr)),
            accept_rate: summarize_metric(&pick(|r| r.accept_rate)),
        });
    }
    Ok(out)
}

fn push_metric(line: &mut String, m: &MetricSummary) {
    for v in [m.median, m.q1, m.q3, m.min, m.max] {
        line.push(',');
        line.push_str(&v.to_string());
    }
}

pub fn summary_csv_string(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let mut line = format!("{},{},{},{}", r.target, r.prior, r.proposal, r.count);
        push_metric(&mut line, &r.rmse);
        push_metric(&mut line, &r.crps);
        push_metric(&mut line, &r.picr);
        push_metric(&mut line, &r.accept_rate);
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Maps raw coordinates onto [0,1]^d with the given per-column bounds.
fn to_unit(x: &DMatrix<f64>, bounds: &[(f64, f64)]) -> Result<DMatrix<f64>, String> {
    let mut out = x.clone();
    for (j, &(lo, hi)) in bounds.iter().enumerate() {
        let width = hi - lo;
        if width <= 0.0 {
            return Err(format!(
                "input column {j} has zero-width bounds [{lo}, {hi}], cannot scale"
            ));
        }
        for i in 0..out.nrows() {
            out[(i, j)] = (x[(i, j)] - lo) / width;
        }
    }
    Ok(out)
}

/// Train/test sizes for a file of `available` rows: the requested sizes when
/// they fit, otherwise scaled down proportionally so the split keeps its
/// requested ratio (at least two training rows, at least one test row).
fn split_sizes(
    available: usize,
    n_train: usize,
    n_test: usize,
) -> Result<(usize, usize), String> {
    if available >= n_train + n_test {
        return Ok((n_train, n_test));
    }
    let scale = available as f64 / (n_train + n_test) as f64;
    let tr = ((n_train as f64 * scale).floor() as usize).max(2);
    if tr + 1 > available {
        return Err(format!(
            "dataset has {available} rows; need at least 3 for a train/test split"
        ));
    }
    Ok((tr, available - tr))
}

/// Everything a single repetition fits and scores on.
struct Prepared {
    train: Dataset,
    xtest: DMatrix<f64>,
    truth: DVector<f64>,
    iterations: usize,
}

fn prepare_function(
    f: TestFunction,
    settings: &RunSettings,
    train_seed: u64,
    test_seed: u64,
) -> Result<Prepared, String> {
    let d = f.dimension();
    let n_train = settings.n_train.unwrap_or(10 * d);
    let n_test = settings.n_test.unwrap_or(100 * d);
    let design = latin_hypercube(n_train, d, train_seed);
    let x_raw = scale_to_domain(&design, &f.bounds()).map_err(|e| e.to_string())?;
    let y = f.evaluate_rows(&x_raw);
    let raw_ds = Dataset::with_bounds(x_raw, y, f.bounds()).map_err(|e| e.to_string())?;
    let train = if settings.scale_inputs {
        raw_ds.to_unit_cube().map_err(|e| e.to_string())?
    } else {
        raw_ds
    };

    let test_design = latin_hypercube(n_test, d, test_seed);
    let xtest_raw = scale_to_domain(&test_design, &f.bounds()).map_err(|e| e.to_string())?;
    let truth = f.evaluate_rows(&xtest_raw);
    let xtest = if settings.scale_inputs {
        test_design.points
    } else {
        xtest_raw
    };
    Ok(Prepared {
        train,
        xtest,
        truth,
        iterations: settings.iterations.unwrap_or(10_000 * d),
    })
}

fn prepare_dataset(
    full: &Dataset,
    settings: &RunSettings,
    train_seed: u64,
) -> Result<Prepared, String> {
    let d = full.dim();
    let n_train = settings.n_train.unwrap_or(10 * d);
    let n_test = settings.n_test.unwrap_or(100 * d);
    let (tr, te) = split_sizes(full.n(), n_train, n_test)?;

    let mut idx: Vec<usize> = (0..full.n()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(train_seed));
    let raw_output = |i: usize| full.outputs()[i] + full.output_offset();

    let xtrain = DMatrix::from_fn(tr, d, |r, c| full.inputs()[(idx[r], c)]);
    let ytrain = DVector::from_fn(tr, |r, _| raw_output(idx[r]));
    let raw_ds = Dataset::with_bounds(xtrain, ytrain, full.bounds().to_vec())
        .map_err(|e| e.to_string())?;
    let train = if settings.scale_inputs {
        raw_ds.to_unit_cube().map_err(|e| e.to_string())?
    } else {
        raw_ds
    };

    let xtest_raw = DMatrix::from_fn(te, d, |r, c| full.inputs()[(idx[tr + r], c)]);
    let truth = DVector::from_fn(te, |r, _| raw_output(idx[tr + r]));
    let xtest = if settings.scale_inputs {
        to_unit(&xtest_raw, full.bounds())?
    } else {
        xtest_raw
    };
    Ok(Prepared {
        train,
        xtest,
        truth,
        iterations: settings.iterations.unwrap_or(10_000 * d),
    })
}

/// Per-iteration chain record: initial state on row zero with acceptance
/// flags zero, then one row per iteration.
fn write_trace(chain: &Chain, path: &Path) -> std::io::Result<()> {
    let d = chain.dim();
    let mut w = BufWriter::new(File::create(path)?);
    let mut header = String::from("iteration");
    for j in 0..d {
        header.push_str(&format!(",theta_{}", j + 1));
    }
    header.push_str(",tau2");
    for j in 0..d {
        header.push_str(&format!(",accept_{}", j + 1));
    }
    writeln!(w, "{header}")?;
    for (t, state) in chain.samples.iter().enumerate() {
        let mut line = t.to_string();
        for j in 0..d {
            line.push(',');
            line.push_str(&state[j].to_string());
        }
        line.push(',');
        line.push_str(&chain.tau2_samples[t].to_string());
        for j in 0..d {
            line.push(',');
            let flag = if t == 0 {
                0
            } else {
                u8::from(chain.accept_flags[t - 1][j])
            };
            line.push_str(&flag.to_string());
        }
        writeln!(w, "{line}")?;
    }
    w.flush()
}

fn sanitize_status(msg: &str) -> String {
    msg.replace(',', ";").replace('\n', "; ")
}

fn run_one(
    cfg: &Configuration,
    settings: &RunSettings,
    data: Option<&Dataset>,
    rep_seed: u64,
    trace_path: Option<&Path>,
) -> Result<(priorgp::Scores, f64), String> {
    let train_seed = counter_rng_seed(rep_seed, 1);
    let test_seed = counter_rng_seed(rep_seed, 2);
    let chain_seed = counter_rng_seed(rep_seed, 3);

    let prepared = match &cfg.target {
        Target::Function(f) => prepare_function(*f, settings, train_seed, test_seed)?,
        Target::Dataset { .. } => {
            prepare_dataset(data.expect("dataset preloaded"), settings, train_seed)?
        }
    };

    let prior = Prior::benchmark_default(&cfg.prior)
        .ok_or_else(|| format!("unknown prior '{}'", cfg.prior))?;
    let proposal = cfg.proposal.build(prepared.train.dim())?;
    let gp = GpConfig::default();
    let chain = run_chain(
        &prepared.train,
        &prior,
        &proposal,
        &gp,
        prepared.iterations,
        chain_seed,
    )
    .map_err(|e| e.to_string())?;
    if let Some(path) = trace_path {
        write_trace(&chain, path).map_err(|e| format!("trace write failed: {e}"))?;
    }
    let pred = posterior_predict_pointwise(
        &chain,
        &prepared.train,
        &prepared.xtest,
        &gp,
        settings.burn_in_fraction,
        settings.thinning,
    )
    .map_err(|e| e.to_string())?;
    let scores = score(&prepared.truth, &pred.mean, &pred.variance).map_err(|e| e.to_string())?;
    Ok((scores, chain.overall_acceptance_rate()))
}

fn execute_repetition(
    cfg: &Configuration,
    settings: &RunSettings,
    data: Option<&Dataset>,
    rep: usize,
    trace_path: Option<&Path>,
) -> ResultRow {
    let rep_seed = settings.base_seed + rep as u64;
    let started = Instant::now();
    let outcome = run_one(cfg, settings, data, rep_seed, trace_path);
    let wall_secs = started.elapsed().as_secs_f64();
    let mut row = ResultRow {
        repetition: rep,
        target: cfg.target.name().to_string(),
        prior: cfg.prior.clone(),
        proposal: cfg.proposal.label(),
        rmse: None,
        crps: None,
        picr: None,
        accept_rate: None,
        wall_secs,
        seed: rep_seed,
        status: STATUS_OK.to_string(),
    };
    match outcome {
        Ok((scores, accept_rate)) => {
            row.rmse = Some(scores.rmse);
            row.crps = Some(scores.crps);
            row.picr = Some(scores.picr);
            row.accept_rate = Some(accept_rate);
        }
        Err(msg) => row.status = sanitize_status(&msg),
    }
    row
}

pub struct RunOutcome {
    pub results_path: PathBuf,
    pub summary_path: PathBuf,
    pub rows: Vec<ResultRow>,
    pub failed: usize,
}

fn config_dir_name(cfg: &Configuration) -> String {
    format!("{}_{}_{}", cfg.target.name(), cfg.prior, cfg.proposal.label())
}

/// Runs every configuration of the plan. Rows land in results.csv in grid
/// order with repetitions innermost, identical whether executed serially or
/// in parallel; summary.csv is written from the same rows at the end.
pub fn run_plan(plan: &RunPlan) -> Result<RunOutcome, String> {
    let settings = &plan.settings;
    let configs = plan.configurations();
    fs::create_dir_all(&settings.out_dir)
        .map_err(|e| format!("cannot create {}: {e}", settings.out_dir.display()))?;

    // Datasets load once per distinct file, not once per repetition.
    let mut datasets: HashMap<PathBuf, Dataset> = HashMap::new();
    for cfg in &configs {
        if let Target::Dataset {
            path, input_cols, ..
        } = &cfg.target
        {
            if !datasets.contains_key(path) {
                let ds = load_dataset(path, *input_cols)
                    .map_err(|e| format!("cannot load {}: {e}", path.display()))?;
                datasets.insert(path.clone(), ds);
            }
        }
    }

    let trace_dirs: Vec<Option<PathBuf>> = configs
        .iter()
        .map(|cfg| settings.trace.then(|| settings.out_dir.join(config_dir_name(cfg))))
        .collect();
    for dir in trace_dirs.iter().flatten() {
        fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    }

    let results_path = settings.out_dir.join("results.csv");
    let mut file = File::create(&results_path)
        .map_err(|e| format!("cannot create {}: {e}", results_path.display()))?;
    writeln!(file, "{RESULTS_HEADER}").map_err(|e| e.to_string())?;
    file.flush().map_err(|e| e.to_string())?;

    let reps = settings.repetitions;
    let tasks: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| (0..reps).map(move |r| (c, r)))
        .collect();

    let (tx, rx) = mpsc::channel::<(usize, ResultRow)>();
    let writer = std::thread::spawn(move || -> std::io::Result<Vec<ResultRow>> {
        let mut pending: BTreeMap<usize, ResultRow> = BTreeMap::new();
        let mut rows: Vec<ResultRow> = Vec::new();
        let mut next = 0usize;
        for (index, row) in rx {
            pending.insert(index, row);
            while let Some(row) = pending.remove(&next) {
                writeln!(file, "{}", row.to_csv_line())?;
                file.flush()?;
                rows.push(row);
                next += 1;
            }
        }
        Ok(rows)
    });

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.workers)
        .build()
        .map_err(|e| format!("cannot build worker pool: {e}"))?;
    pool.install(|| {
        tasks.par_iter().for_each_with(tx, |tx, &(c, r)| {
            let cfg = &configs[c];
            let data = match &cfg.target {
                Target::Dataset { path, .. } => Some(&datasets[path]),
                Target::Function(_) => None,
            };
            let trace_path = trace_dirs[c].as_ref().map(|d| d.join(format!("trace_{r}.csv")));
            let row = execute_repetition(cfg, settings, data, r, trace_path.as_deref());
            let _ = tx.send((c * reps + r, row));
        });
    });

    let rows = writer
        .join()
        .map_err(|_| "writer thread panicked".to_string())?
        .map_err(|e| format!("cannot write {}: {e}", results_path.display()))?;

    let summary = summarize(&rows)?;
    let summary_path = settings.out_dir.join("summary.csv");
    fs::write(&summary_path, summary_csv_string(&summary))
        .map_err(|e| format!("cannot write {}: {e}", summary_path.display()))?;

    let failed = rows.iter().filter(|r| r.status != STATUS_OK).count();
    Ok(RunOutcome {
        results_path,
        summary_path,
        rows,
        failed,
    })
}
