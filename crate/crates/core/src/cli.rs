//! Command-line front end for benchmark runs and the inverse demo.

use std::path::{Path, PathBuf};

use clap::Parser;

use crate::benchmarks::SuiteFamily;
use crate::ensemble::{BoundsPolicy, NoiseScale, SearchConfig};
use crate::error::{Result, SearchError};
use crate::harness::{
    records_to_csv, run_experiment, write_records, BenchmarkSelection, ExperimentConfig, RecordFormat, RunOptions,
    RunRecord, RunStatus,
};
use crate::inverse::{run_recovery_study, study_to_csv, Method, StudyConfig};

#[derive(Parser, Debug, Default)]
#[command(
    name = "ensearch",
    about = "Ensemble search with state-space splitting on benchmark functions and a sparse-data inverse demo",
    args_override_self = true
)]
struct Args {
    /// Base function or suite id (sphere, rastrigin, F3, IF15, ...).
    #[arg(long)]
    function: Option<String>,
    /// Whole suite: cec or bbob.
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    /// Ensemble size.
    #[arg(long)]
    ensemble: Option<usize>,
    #[arg(long)]
    substructures: Option<usize>,
    /// Probability of retaining a particle.
    #[arg(long)]
    inertia: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Prediction noise, absolute.
    #[arg(long)]
    sigma_b: Option<f64>,
    #[arg(long)]
    sigma_w: Option<f64>,
    #[arg(long)]
    no_prediction: bool,
    #[arg(long)]
    no_coalescence: bool,
    #[arg(long)]
    no_cost_innovation: bool,
    #[arg(long)]
    no_selection: bool,
    #[arg(long)]
    no_scrambling: bool,
    #[arg(long)]
    no_blending: bool,
    #[arg(long)]
    shuffle_partition: bool,
    /// clip, reflect or free.
    #[arg(long)]
    bounds_policy: Option<String>,
    /// Benchmark instance seed; also the run seed when --seeds is absent.
    #[arg(long)]
    seed: Option<u64>,
    /// Run seeds: `1,2,5`, `0..10` or `0..=9`.
    #[arg(long)]
    seeds: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json; defaults from the --out extension.
    #[arg(long)]
    format: Option<String>,
    /// Record every n-th iteration.
    #[arg(long)]
    stride: Option<usize>,
    /// Fill wall_ms with elapsed time (output is then not reproducible).
    #[arg(long)]
    wall_clock: bool,
    /// File of `key = value` lines using the long flag names.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `inverse` runs the recovery study.
    #[arg(long)]
    demo: Option<String>,
    #[arg(long)]
    grid_n: Option<usize>,
    /// Detector counts, e.g. `20,10,5`.
    #[arg(long)]
    detectors: Option<String>,
    /// Relative measurement noise.
    #[arg(long)]
    noise: Option<f64>,
    /// Evaluation budget per method in the inverse demo.
    #[arg(long)]
    budget: Option<u64>,
}

enum Failure {
    Config(String),
    Engine(String),
}

impl From<SearchError> for Failure {
    fn from(e: SearchError) -> Self {
        Failure::Config(e.to_string())
    }
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code: 0 on success, 1 on a configuration error, 2 on an engine error.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let args = match parse(&argv) {
        Ok(a) => a,
        Err(code) => return code,
    };
    match run(&args) {
        Ok(()) => 0,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(Failure::Engine(msg)) => {
            eprintln!("engine error: {msg}");
            2
        }
    }
}

fn parse(argv: &[String]) -> std::result::Result<Args, i32> {
    let first = try_parse(argv)?;
    let Some(path) = &first.config else {
        return Ok(first);
    };
    let mut expanded = vec![argv.first().cloned().unwrap_or_else(|| "ensearch".into())];
    match config_tokens(path) {
        Ok(t) => expanded.extend(t),
        Err(e) => {
            eprintln!("error: {e}");
            return Err(1);
        }
    }
    expanded.extend(argv.iter().skip(1).cloned());
    try_parse(&expanded)
}

fn try_parse(argv: &[String]) -> std::result::Result<Args, i32> {
    Args::try_parse_from(argv).map_err(|e| {
        let _ = e.print();
        if e.use_stderr() {
            1
        } else {
            0
        }
    })
}

/// `key = value` lines become `--key value`; `true`/`false` toggle a flag.
/// Blank lines and `#` comments are skipped.
fn config_tokens(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| SearchError::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| SearchError::config(format!("{}:{}: expected key = value", path.display(), n + 1)))?;
        let key = k.trim().replace('_', "-");
        if key == "config" {
            return Err(SearchError::config("config files cannot include other config files"));
        }
        match v.trim() {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            v => {
                out.push(format!("--{key}"));
                out.push(v.to_string());
            }
        }
    }
    Ok(out)
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || SearchError::config(format!("cannot read seed list `{s}`"));
    let num = |t: &str| t.trim().parse::<u64>().map_err(|_| bad());
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..=") {
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = s.split_once("..") {
        (num(a)?..num(b)?).collect()
    } else {
        s.split(',').map(num).collect::<Result<_>>()?
    };
    if seeds.is_empty() {
        return Err(SearchError::config("seed list is empty"));
    }
    Ok(seeds)
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| SearchError::config(format!("cannot read list `{s}`")))
        })
        .collect()
}

fn apply_search_flags(args: &Args, base: SearchConfig) -> Result<SearchConfig> {
    let mut cfg = base;
    if let Some(v) = args.ensemble {
        cfg.n_e = v;
    }
    if let Some(v) = args.substructures {
        cfg.n_p = v;
    }
    if let Some(v) = args.inertia {
        cfg.p_inertia = v;
    }
    if let Some(v) = args.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = args.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = args.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = args.sigma_b {
        if !(v >= 0.0) {
            return Err(SearchError::config("sigma-b must be nonnegative"));
        }
        cfg.sigma_b = Some(NoiseScale::Uniform(v));
    }
    if let Some(v) = args.sigma_w {
        cfg.sigma_w = NoiseScale::Uniform(v);
    }
    if let Some(p) = &args.bounds_policy {
        cfg.bounds_policy = p.parse::<BoundsPolicy>()?;
    }
    cfg.use_prediction &= !args.no_prediction;
    cfg.use_coalescence &= !args.no_coalescence;
    cfg.use_cost_innovation &= !args.no_cost_innovation;
    cfg.use_selection &= !args.no_selection;
    cfg.use_scrambling &= !args.no_scrambling;
    cfg.use_blending &= !args.no_blending;
    cfg.shuffle_partition |= args.shuffle_partition;
    if args.substructures == Some(0) {
        return Err(SearchError::config("substructure count must be positive"));
    }
    Ok(cfg)
}

fn output_format(args: &Args) -> Result<RecordFormat> {
    match (&args.format, &args.out) {
        (Some(f), _) => f.parse(),
        (None, Some(p)) if p.extension().is_some_and(|e| e == "json") => Ok(RecordFormat::Json),
        _ => Ok(RecordFormat::Csv),
    }
}

/// `dir/stem_<tag>.ext` next to `path`.
fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{tag}"),
    };
    path.with_file_name(name)
}

fn render(records: &[RunRecord], format: RecordFormat) -> Result<String> {
    match format {
        RecordFormat::Csv => records_to_csv(records, 1),
        RecordFormat::Json => Ok(serde_json::to_string_pretty(records)? + "\n"),
    }
}

fn engine_failures(records: &[RunRecord]) -> std::result::Result<(), Failure> {
    let msgs: Vec<String> = records
        .iter()
        .filter_map(|r| match &r.status {
            RunStatus::Failed { message } => Some(format!("{} seed {}: {message}", r.function, r.seed)),
            _ => None,
        })
        .collect();
    if msgs.is_empty() {
        Ok(())
    } else {
        Err(Failure::Engine(msgs.join("; ")))
    }
}

fn run(args: &Args) -> std::result::Result<(), Failure> {
    match args.demo.as_deref() {
        Some("inverse") => return run_inverse(args),
        Some(other) => return Err(Failure::Config(format!("unknown demo `{other}`"))),
        None => {}
    }
    let selection = match (&args.function, &args.suite) {
        (Some(_), Some(_)) => return Err(Failure::Config("give either --function or --suite".into())),
        (Some(f), None) => BenchmarkSelection::Function(f.clone()),
        (None, Some(s)) => BenchmarkSelection::Suite(s.parse::<SuiteFamily>()?),
        (None, None) => return Err(Failure::Config("one of --function, --suite or --demo is required".into())),
    };
    let instance_seed = args.seed.unwrap_or(0);
    let seeds = match &args.seeds {
        Some(s) => parse_seeds(s)?,
        None => vec![instance_seed],
    };
    let exp = ExperimentConfig {
        selection,
        dim: args.dim.unwrap_or(10),
        instance_seed,
        search: apply_search_flags(args, SearchConfig::default())?,
        seeds,
        output: args.out.clone(),
        options: RunOptions {
            record_stride: args.stride.unwrap_or(crate::harness::DEFAULT_RECORD_STRIDE),
            measure_wall_time: args.wall_clock,
            ..Default::default()
        },
    };
    let format = output_format(args)?;
    let records = run_experiment(&exp)?;

    // one output per function, in suite order
    let mut groups: Vec<(String, Vec<RunRecord>)> = Vec::new();
    for r in records.iter() {
        match groups.last_mut() {
            Some((name, g)) if *name == r.function => g.push(r.clone()),
            _ => groups.push((r.function.clone(), vec![r.clone()])),
        }
    }
    let single = matches!(exp.selection, BenchmarkSelection::Function(_));
    for (name, group) in &groups {
        match &exp.output {
            Some(path) => {
                let target = if single { path.clone() } else { sibling(path, name) };
                write_records(group, &target, format)?;
            }
            None => {
                if !single {
                    println!("# {name}");
                }
                print!("{}", render(group, format)?);
            }
        }
    }
    engine_failures(&records)
}

fn run_inverse(args: &Args) -> std::result::Result<(), Failure> {
    let grid_n = args.grid_n.unwrap_or(20);
    let counts = match &args.detectors {
        Some(s) => parse_list(s)?,
        None => vec![20, 10, 5],
    };
    let seeds = match &args.seeds {
        Some(s) => parse_seeds(s)?,
        None => vec![args.seed.unwrap_or(0)],
    };
    let mut study = StudyConfig::new(grid_n, counts.clone(), seeds);
    if let Some(n) = args.noise {
        study.noise_rel = n;
    }
    if let Some(b) = args.budget {
        study.eval_budget = b;
    }
    study.search = apply_search_flags(args, study.search.clone())?;
    study.search.validate(grid_n, 1)?;
    let rows = run_recovery_study(&study).map_err(|e| match e {
        SearchError::SingularGain { .. } => Failure::Engine(e.to_string()),
        other => Failure::Config(other.to_string()),
    })?;
    let summary = study_to_csv(&rows);
    let format = output_format(args)?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, summary).map_err(|e| SearchError::io(path, e))?;
            for method in [Method::Optimizer, Method::Filtering] {
                for &c in &counts {
                    let recs: Vec<RunRecord> = rows
                        .iter()
                        .filter(|r| r.method == method && r.detector_count == c)
                        .map(|r| r.record.clone())
                        .collect();
                    let ext = match format {
                        RecordFormat::Csv => "csv",
                        RecordFormat::Json => "json",
                    };
                    let target = sibling(path, &format!("{}_d{c}", method.name())).with_extension(ext);
                    write_records(&recs, &target, format)?;
                }
            }
        }
        None => print!("{summary}"),
    }
    Ok(())
}
