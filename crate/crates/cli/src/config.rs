//! Run configuration: command-line flags, the flat key = value config file,
//! and expansion of target/prior/proposal lists into the configuration grid.
//!
//! Precedence is defaults < config file < flags. Numeric settings that
//! default per input dimension (training size 10d, test size 100d,
//! iterations 10000d) stay unset here and are resolved against each target
//! when the run executes.

use std::path::{Path, PathBuf};

use clap::Parser;
use priorgp::benchfuncs::TestFunction;
use priorgp::{Prior, Proposal};

#[derive(Debug, Parser)]
#[command(
    name = "priorgp",
    version,
    about = "Benchmark harness for Gaussian-process lengthscale priors and proposal kernels"
)]
pub struct CliArgs {
    /// Flat key = value configuration file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Test function name, a comma-separated list, "all", or a CSV dataset path.
    #[arg(long)]
    pub target: Option<String>,

    /// Prior name, a comma-separated list, or "all".
    #[arg(long)]
    pub prior: Option<String>,

    /// Proposal name with optional step ("name" or "name:step"), a list, or "all".
    #[arg(long)]
    pub proposal: Option<String>,

    /// Repetitions per configuration.
    #[arg(long)]
    pub reps: Option<usize>,

    /// Chain iterations; defaults to 10000 per input dimension.
    #[arg(long)]
    pub iters: Option<usize>,

    /// Base seed; repetition r uses base_seed + r.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output directory for results.csv, summary.csv, and traces.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Map inputs onto the unit cube before fitting (true/false).
    #[arg(long)]
    pub scale_inputs: Option<bool>,

    /// Write a per-iteration trace file for every repetition.
    #[arg(long)]
    pub trace: bool,

    /// Keep every k-th retained sample.
    #[arg(long)]
    pub thinning: Option<usize>,

    /// Training points; defaults to 10 per input dimension.
    #[arg(long)]
    pub n_train: Option<usize>,

    /// Test points; defaults to 100 per input dimension.
    #[arg(long)]
    pub n_test: Option<usize>,

    /// Fraction of the chain discarded as burn-in.
    #[arg(long)]
    pub burn_in: Option<f64>,

    /// Number of leading input columns for CSV dataset targets.
    #[arg(long)]
    pub input_cols: Option<usize>,

    /// Worker threads; defaults to PRIORGP_WORKERS or available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Settings shared by every configuration in a run.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub n_train: Option<usize>,
    pub n_test: Option<usize>,
    pub iterations: Option<usize>,
    pub burn_in_fraction: f64,
    pub repetitions: usize,
    pub base_seed: u64,
    pub scale_inputs: bool,
    pub thinning: usize,
    pub trace: bool,
    pub out_dir: PathBuf,
    pub workers: usize,
}

/// What a configuration is fitted to: a named synthetic function or a CSV
/// file of observations.
#[derive(Debug, Clone)]
pub enum Target {
    Function(TestFunction),
    Dataset {
        path: PathBuf,
        name: String,
        input_cols: usize,
    },
}

impl Target {
    pub fn name(&self) -> &str {
        match self {
            Target::Function(f) => f.name(),
            Target::Dataset { name, .. } => name,
        }
    }
}

/// Proposal request: a kernel name, with the step either given explicitly
/// ("name:step") or resolved from the target dimension at build time.
#[derive(Debug, Clone)]
pub struct ProposalSpec {
    pub name: String,
    pub step: Option<f64>,
}

impl ProposalSpec {
    pub fn parse(token: &str) -> Result<Self, String> {
        let (name, step) = match token.split_once(':') {
            Some((n, s)) => {
                let v: f64 = s
                    .parse()
                    .map_err(|_| format!("proposal step '{s}' is not a number"))?;
                (n.to_string(), Some(v))
            }
            None => (token.to_string(), None),
        };
        if !Proposal::BENCHMARK_NAMES.contains(&name.as_str()) {
            return Err(format!(
                "unknown proposal '{name}'; expected one of {:?}",
                Proposal::BENCHMARK_NAMES
            ));
        }
        Ok(Self { name, step })
    }

    /// Concrete proposal for a target of the given dimension.
    pub fn build(&self, dim: usize) -> Result<Proposal, String> {
        let built = match (self.name.as_str(), self.step) {
            ("multiplicative_uniform", Some(u)) => Proposal::multiplicative_uniform(u),
            ("log_gaussian", Some(s)) => Proposal::log_gaussian(s),
            (name, None) => {
                return Proposal::benchmark_default(name, dim)
                    .ok_or_else(|| format!("unknown proposal '{name}'"));
            }
            (name, Some(_)) => return Err(format!("unknown proposal '{name}'")),
        };
        built.map_err(|e| e.to_string())
    }

    pub fn label(&self) -> String {
        self.name.clone()
    }
}

/// One cell of the experiment grid.
#[derive(Debug, Clone)]
pub struct Configuration {
    pub target: Target,
    pub prior: String,
    pub proposal: ProposalSpec,
}

/// A fully validated run: the grid plus shared settings.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub settings: RunSettings,
    pub targets: Vec<Target>,
    pub priors: Vec<String>,
    pub proposals: Vec<ProposalSpec>,
}

impl RunPlan {
    /// Grid cells in target-major, then prior, then proposal order; rows in
    /// results.csv follow this order with repetitions innermost.
    pub fn configurations(&self) -> Vec<Configuration> {
        let mut out = Vec::new();
        for t in &self.targets {
            for p in &self.priors {
                for q in &self.proposals {
                    out.push(Configuration {
                        target: t.clone(),
                        prior: p.clone(),
                        proposal: q.clone(),
                    });
                }
            }
        }
        out
    }
}

/// Option set shared by the config file and the flags, before defaults.
#[derive(Debug, Default)]
struct RawOptions {
    target: Option<String>,
    prior: Option<String>,
    proposal: Option<String>,
    reps: Option<usize>,
    iters: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    scale_inputs: Option<bool>,
    trace: Option<bool>,
    thinning: Option<usize>,
    n_train: Option<usize>,
    n_test: Option<usize>,
    burn_in: Option<f64>,
    input_cols: Option<usize>,
    workers: Option<usize>,
}

fn parse_bool(value: &str, key: &str) -> Result<bool, String> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(format!("config key '{key}': '{other}' is not a boolean")),
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, key: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("config key '{key}': cannot parse '{value}'"))
}

/// Reads a flat key = value file. Blank lines and lines starting with '#'
/// are skipped; keys must be from the flag vocabulary.
fn parse_config_file(path: &Path) -> Result<RawOptions, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
    let mut opts = RawOptions::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value", lineno + 1))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "target" => opts.target = Some(value.to_string()),
            "prior" => opts.prior = Some(value.to_string()),
            "proposal" => opts.proposal = Some(value.to_string()),
            "reps" => opts.reps = Some(parse_num(value, key)?),
            "iters" => opts.iters = Some(parse_num(value, key)?),
            "seed" => opts.seed = Some(parse_num(value, key)?),
            "out" => opts.out = Some(PathBuf::from(value)),
            "scale_inputs" => opts.scale_inputs = Some(parse_bool(value, key)?),
            "trace" => opts.trace = Some(parse_bool(value, key)?),
            "thinning" => opts.thinning = Some(parse_num(value, key)?),
            "n_train" => opts.n_train = Some(parse_num(value, key)?),
            "n_test" => opts.n_test = Some(parse_num(value, key)?),
            "burn_in" => opts.burn_in = Some(parse_num(value, key)?),
            "input_cols" => opts.input_cols = Some(parse_num(value, key)?),
            "workers" => opts.workers = Some(parse_num(value, key)?),
            other => return Err(format!("config line {}: unknown key '{other}'", lineno + 1)),
        }
    }
    Ok(opts)
}

fn parse_targets(list: &str, input_cols: Option<usize>) -> Result<Vec<Target>, String> {
    let mut out = Vec::new();
    for token in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if token == "all" {
            for name in TestFunction::BENCHMARK_NAMES {
                out.push(Target::Function(TestFunction::from_name(name).unwrap()));
            }
        } else if let Some(f) = TestFunction::from_name(token) {
            out.push(Target::Function(f));
        } else if Path::new(token).is_file() {
            let cols = input_cols.ok_or_else(|| {
                format!("dataset target '{token}' needs --input-cols (leading input column count)")
            })?;
            let name = Path::new(token)
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("dataset")
                .to_string();
            out.push(Target::Dataset {
                path: PathBuf::from(token),
                name,
                input_cols: cols,
            });
        } else {
            return Err(format!(
                "unknown target '{token}': not a test function ({:?}) and not an existing file",
                TestFunction::BENCHMARK_NAMES
            ));
        }
    }
    if out.is_empty() {
        return Err("target list is empty".into());
    }
    Ok(out)
}

fn parse_priors(list: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for token in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if token == "all" {
            out.extend(Prior::BENCHMARK_NAMES.iter().map(|s| s.to_string()));
        } else if Prior::benchmark_default(token).is_some() {
            out.push(token.to_string());
        } else {
            return Err(format!(
                "unknown prior '{token}'; expected one of {:?}",
                Prior::BENCHMARK_NAMES
            ));
        }
    }
    if out.is_empty() {
        return Err("prior list is empty".into());
    }
    Ok(out)
}

fn parse_proposals(list: &str) -> Result<Vec<ProposalSpec>, String> {
    let mut out = Vec::new();
    for token in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if token == "all" {
            for name in Proposal::BENCHMARK_NAMES {
                out.push(ProposalSpec {
                    name: name.to_string(),
                    step: None,
                });
            }
        } else {
            out.push(ProposalSpec::parse(token)?);
        }
    }
    if out.is_empty() {
        return Err("proposal list is empty".into());
    }
    Ok(out)
}

/// Worker count: explicit setting, then PRIORGP_WORKERS, then the number of
/// available hardware threads.
pub fn resolve_workers(explicit: Option<usize>) -> Result<usize, String> {
    if let Some(w) = explicit {
        if w == 0 {
            return Err("workers must be at least 1".into());
        }
        return Ok(w);
    }
    if let Ok(raw) = std::env::var("PRIORGP_WORKERS") {
        let w: usize = raw
            .parse()
            .map_err(|_| format!("PRIORGP_WORKERS='{raw}' is not a number"))?;
        if w == 0 {
            return Err("PRIORGP_WORKERS must be at least 1".into());
        }
        return Ok(w);
    }
    Ok(std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1))
}

/// Merges file and flag options and validates everything that can be checked
/// without running: names, list expansion, and numeric ranges.
pub fn build_plan(args: &CliArgs) -> Result<RunPlan, String> {
    let file = match &args.config {
        Some(path) => parse_config_file(path)?,
        None => RawOptions::default(),
    };

    let target = args.target.clone().or(file.target);
    let prior = args.prior.clone().or(file.prior).unwrap_or_else(|| "all".into());
    let proposal = args
        .proposal
        .clone()
        .or(file.proposal)
        .unwrap_or_else(|| "all".into());
    let input_cols = args.input_cols.or(file.input_cols);
    if let Some(c) = input_cols {
        if c == 0 {
            return Err("input_cols must be at least 1".into());
        }
    }

    let target = target.ok_or("no target given; pass --target or set target= in the config file")?;
    let targets = parse_targets(&target, input_cols)?;
    let priors = parse_priors(&prior)?;
    let proposals = parse_proposals(&proposal)?;

    let repetitions = args.reps.or(file.reps).unwrap_or(100);
    if repetitions == 0 {
        return Err("reps must be at least 1".into());
    }
    let thinning = args.thinning.or(file.thinning).unwrap_or(1);
    if thinning == 0 {
        return Err("thinning must be at least 1".into());
    }
    let burn_in_fraction = args.burn_in.or(file.burn_in).unwrap_or(0.3);
    if !(0.0..1.0).contains(&burn_in_fraction) {
        return Err(format!(
            "burn_in must lie in [0, 1), got {burn_in_fraction}"
        ));
    }
    if let Some(n) = args.n_train.or(file.n_train) {
        if n < 2 {
            return Err("n_train must be at least 2".into());
        }
    }
    if let Some(n) = args.n_test.or(file.n_test) {
        if n == 0 {
            return Err("n_test must be at least 1".into());
        }
    }
    if let Some(n) = args.iters.or(file.iters) {
        if n == 0 {
            return Err("iters must be at least 1".into());
        }
    }

    let settings = RunSettings {
        n_train: args.n_train.or(file.n_train),
        n_test: args.n_test.or(file.n_test),
        iterations: args.iters.or(file.iters),
        burn_in_fraction,
        repetitions,
        base_seed: args.seed.or(file.seed).unwrap_or(0),
        scale_inputs: args.scale_inputs.or(file.scale_inputs).unwrap_or(true),
        thinning,
        trace: args.trace || file.trace.unwrap_or(false),
        out_dir: args
            .out
            .clone()
            .or(file.out)
            .unwrap_or_else(|| PathBuf::from("priorgp-results")),
        workers: resolve_workers(args.workers.or(file.workers))?,
    };

    Ok(RunPlan {
        settings,
        targets,
        priors,
        proposals,
    })
}
