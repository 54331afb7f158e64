//! Command-line front end: experiment presets that reproduce the convergence
//! studies, decomposition of user-supplied tensor files, and the lemma
//! verification suite. All outputs are CSV; plotting is external.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use cp_altls::coherence::{run_hybrid, HybridSchedule};
use cp_altls::diagnostics::{ConvergenceTrace, Pairing};
use cp_altls::error::Error as CoreError;
use cp_altls::io as tensor_io;
use cp_altls::lemmas::{self, SuiteRow};
use cp_altls::solver::{self, AltLsProblem, RunHooks, StoppingRule, Variant};
use cp_altls::synthesis::{
    gen_cyclic, gen_identity_counterexample, gen_ideco, gen_odeco, random_sphere_init,
    GeneratorSpec,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_LEMMA_VIOLATION: i32 = 4;

const OMEGA_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Top-level failure carrying its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::Parse { .. } => EXIT_PARSE,
            CoreError::Io(_) => EXIT_PARSE,
            CoreError::DegenerateComponent { .. } | CoreError::DegenerateInput(_) => {
                EXIT_DEGENERATE
            }
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: EXIT_PARSE,
            message: format!("i/o error: {e}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Odeco3,
    Odeco4,
    Ideco3,
    Ideco4,
    Weights,
    HybridCyclic,
    CounterexampleN2,
}

impl Preset {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "odeco3" => Some(Preset::Odeco3),
            "odeco4" => Some(Preset::Odeco4),
            "ideco3" => Some(Preset::Ideco3),
            "ideco4" => Some(Preset::Ideco4),
            "weights" => Some(Preset::Weights),
            "hybrid-cyclic" => Some(Preset::HybridCyclic),
            "counterexample-n2" => Some(Preset::CounterexampleN2),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Odeco3 => "odeco3",
            Preset::Odeco4 => "odeco4",
            Preset::Ideco3 => "ideco3",
            Preset::Ideco4 => "ideco4",
            Preset::Weights => "weights",
            Preset::HybridCyclic => "hybrid-cyclic",
            Preset::CounterexampleN2 => "counterexample-n2",
        }
    }
}

/// Parsed command-line configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub seeds: Vec<u64>,
    pub variant: Variant,
    pub output: PathBuf,
    pub no_timestamp: bool,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub omega: Option<f64>,
    pub reduced_iters: Option<usize>,
    pub regular_iters: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct DecomposeConfig {
    pub input: PathBuf,
    pub rank: usize,
    pub variant: Variant,
    pub seed: u64,
    pub output: PathBuf,
    pub no_timestamp: bool,
    pub max_iters: usize,
    pub tol: f64,
}

#[derive(Debug, Clone)]
pub struct LemmaSuiteConfig {
    pub instances: usize,
    pub seed: u64,
    pub output: PathBuf,
    pub no_timestamp: bool,
}

#[derive(Debug, Clone)]
pub enum Command {
    Experiment(ExperimentConfig),
    Decompose(DecomposeConfig),
    LemmaSuite(LemmaSuiteConfig),
}

pub const USAGE: &str = "usage: cpaltls <command> [flags]

commands:
  experiment   --preset NAME --output DIR [--seeds LIST] [--variant serial|parallel]
               [--max-iters N] [--tol T] [--omega W] [--reduced-iters N]
               [--regular-iters N] [--no-timestamp]
               presets: odeco3 odeco4 ideco3 ideco4 weights hybrid-cyclic
                        counterexample-n2
  decompose    --input FILE --rank R --output BASE [--variant serial|parallel]
               [--seeds S] [--max-iters N] [--tol T] [--no-timestamp]
  lemma-suite  --output FILE [--instances N] [--seeds S] [--no-timestamp]

seed lists: comma-separated values and A..B ranges, e.g. --seeds 0..20 or 1,2,9";

fn parse_seed_list(s: &str) -> Result<Vec<u64>, CliError> {
    let mut seeds = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        if let Some((lo, hi)) = part.split_once("..") {
            let lo: u64 = lo
                .parse()
                .map_err(|_| CliError::usage(format!("bad seed range '{part}'")))?;
            let hi: u64 = hi
                .parse()
                .map_err(|_| CliError::usage(format!("bad seed range '{part}'")))?;
            if hi <= lo {
                return Err(CliError::usage(format!("empty seed range '{part}'")));
            }
            seeds.extend(lo..hi);
        } else {
            seeds.push(
                part.parse()
                    .map_err(|_| CliError::usage(format!("bad seed '{part}'")))?,
            );
        }
    }
    if seeds.is_empty() {
        return Err(CliError::usage("seed list is empty"));
    }
    Ok(seeds)
}

struct FlagParser {
    args: Vec<String>,
    cursor: usize,
}

impl FlagParser {
    fn new(args: &[String]) -> Self {
        Self {
            args: args.to_vec(),
            cursor: 0,
        }
    }

    fn next_flag(&mut self) -> Option<String> {
        let flag = self.args.get(self.cursor).cloned();
        if flag.is_some() {
            self.cursor += 1;
        }
        flag
    }

    fn value(&mut self, flag: &str) -> Result<String, CliError> {
        let v = self
            .args
            .get(self.cursor)
            .cloned()
            .ok_or_else(|| CliError::usage(format!("flag {flag} needs a value")))?;
        self.cursor += 1;
        Ok(v)
    }
}

pub fn parse_args(args: &[String]) -> Result<Command, CliError> {
    let command = args
        .first()
        .ok_or_else(|| CliError::usage("missing command"))?;
    let mut parser = FlagParser::new(&args[1..]);

    let mut preset = None;
    let mut seeds = None;
    let mut variant = None;
    let mut output = None;
    let mut input = None;
    let mut rank = None;
    let mut no_timestamp = false;
    let mut max_iters = None;
    let mut tol = None;
    let mut omega = None;
    let mut reduced_iters = None;
    let mut regular_iters = None;
    let mut instances = None;

    while let Some(flag) = parser.next_flag() {
        match flag.as_str() {
            "--preset" => {
                let v = parser.value("--preset")?;
                preset = Some(
                    Preset::parse(&v)
                        .ok_or_else(|| CliError::usage(format!("unknown preset '{v}'")))?,
                );
            }
            "--seeds" => seeds = Some(parse_seed_list(&parser.value("--seeds")?)?),
            "--variant" => {
                let v = parser.value("--variant")?;
                variant = Some(match v.as_str() {
                    "serial" => Variant::Serial,
                    "parallel" => Variant::Parallel,
                    _ => return Err(CliError::usage(format!("unknown variant '{v}'"))),
                });
            }
            "--output" => output = Some(PathBuf::from(parser.value("--output")?)),
            "--input" => input = Some(PathBuf::from(parser.value("--input")?)),
            "--rank" => {
                rank = Some(
                    parser
                        .value("--rank")?
                        .parse::<usize>()
                        .map_err(|_| CliError::usage("--rank needs a positive integer"))?,
                )
            }
            "--no-timestamp" => no_timestamp = true,
            "--max-iters" => {
                max_iters = Some(
                    parser
                        .value("--max-iters")?
                        .parse::<usize>()
                        .map_err(|_| CliError::usage("--max-iters needs a positive integer"))?,
                )
            }
            "--tol" => {
                tol = Some(
                    parser
                        .value("--tol")?
                        .parse::<f64>()
                        .map_err(|_| CliError::usage("--tol needs a number"))?,
                )
            }
            "--omega" => {
                omega = Some(
                    parser
                        .value("--omega")?
                        .parse::<f64>()
                        .map_err(|_| CliError::usage("--omega needs a number"))?,
                )
            }
            "--reduced-iters" => {
                reduced_iters = Some(
                    parser
                        .value("--reduced-iters")?
                        .parse::<usize>()
                        .map_err(|_| CliError::usage("--reduced-iters needs an integer"))?,
                )
            }
            "--regular-iters" => {
                regular_iters = Some(
                    parser
                        .value("--regular-iters")?
                        .parse::<usize>()
                        .map_err(|_| CliError::usage("--regular-iters needs an integer"))?,
                )
            }
            "--instances" => {
                instances = Some(
                    parser
                        .value("--instances")?
                        .parse::<usize>()
                        .map_err(|_| CliError::usage("--instances needs a positive integer"))?,
                )
            }
            other => return Err(CliError::usage(format!("unknown flag '{other}'"))),
        }
    }

    let output = output.ok_or_else(|| CliError::usage("--output is required"))?;
    match command.as_str() {
        "experiment" => {
            let preset = preset.ok_or_else(|| CliError::usage("experiment needs --preset"))?;
            if input.is_some() {
                return Err(CliError::usage(
                    "experiment takes a preset, not --input (use decompose)",
                ));
            }
            Ok(Command::Experiment(ExperimentConfig {
                preset,
                seeds: seeds.unwrap_or_else(|| (0..20).collect()),
                variant: variant.unwrap_or(Variant::Parallel),
                output,
                no_timestamp,
                max_iters,
                tol,
                omega,
                reduced_iters,
                regular_iters,
            }))
        }
        "decompose" => {
            let input = input.ok_or_else(|| CliError::usage("decompose needs --input"))?;
            let rank = rank.ok_or_else(|| CliError::usage("decompose needs --rank"))?;
            if rank == 0 {
                return Err(CliError::usage("--rank must be >= 1"));
            }
            let seed_list = seeds.unwrap_or_else(|| vec![0]);
            Ok(Command::Decompose(DecomposeConfig {
                input,
                rank,
                variant: variant.unwrap_or(Variant::Serial),
                seed: seed_list[0],
                output,
                no_timestamp,
                max_iters: max_iters.unwrap_or(100),
                tol: tol.unwrap_or(1e-10),
            }))
        }
        "lemma-suite" => Ok(Command::LemmaSuite(LemmaSuiteConfig {
            instances: instances.unwrap_or(1000).max(1),
            seed: seeds.map(|s| s[0]).unwrap_or(0),
            output,
            no_timestamp,
        })),
        other => Err(CliError::usage(format!("unknown command '{other}'"))),
    }
}

// ---------------------------------------------------------------------------
// trace CSV output
// ---------------------------------------------------------------------------

/// A finished run destined for one CSV file.
#[derive(Debug, Clone)]
pub struct TraceArtifact {
    pub file_name: String,
    /// `key=value` metadata pairs emitted as `#`-prefixed header comments.
    pub metadata: Vec<(String, String)>,
    pub trace: ConvergenceTrace,
}

fn format_float(v: f64) -> String {
    format!("{v:e}")
}

/// Render one trace as CSV. With `with_timestamp` disabled, the timestamp
/// comment and the wall-clock column are suppressed so reruns are
/// byte-identical.
pub fn render_trace_csv(artifact: &TraceArtifact, with_timestamp: bool) -> String {
    let mut out = String::new();
    for (key, value) in &artifact.metadata {
        let _ = writeln!(out, "# {key}={value}");
    }
    if with_timestamp {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let _ = writeln!(out, "# generated_unix={now}");
    }
    if let Some(boundary) = artifact.trace.phase_boundary() {
        let _ = writeln!(out, "# phase_boundary_iteration={boundary}");
    }
    let _ = writeln!(
        out,
        "iteration,epsilon,rel_error,weight_error,phase,wall_seconds"
    );
    for r in artifact.trace.records() {
        let epsilon = r.epsilon.map(format_float).unwrap_or_default();
        let weight = r.weight_error.map(format_float).unwrap_or_default();
        let wall = if with_timestamp {
            format_float(r.wall_seconds)
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.iteration,
            epsilon,
            format_float(r.relative_error),
            weight,
            r.phase.as_str(),
            wall
        );
    }
    out
}

fn write_artifacts(
    dir: &Path,
    artifacts: &[TraceArtifact],
    with_timestamp: bool,
) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(artifacts.len());
    for artifact in artifacts {
        let path = dir.join(&artifact.file_name);
        std::fs::write(&path, render_trace_csv(artifact, with_timestamp))?;
        paths.push(path);
    }
    Ok(paths)
}

// ---------------------------------------------------------------------------
// experiment presets
// ---------------------------------------------------------------------------

fn odeco_rule(max_iters: Option<usize>, tol: Option<f64>) -> StoppingRule {
    StoppingRule {
        max_iterations: max_iters.unwrap_or(8),
        error_change_tol: tol.unwrap_or(0.0),
        epsilon_floor: 1e-12,
    }
}

fn ideco_rule(max_iters: Option<usize>, tol: Option<f64>) -> StoppingRule {
    StoppingRule {
        max_iterations: max_iters.unwrap_or(40),
        error_change_tol: tol.unwrap_or(0.0),
        epsilon_floor: 1e-15,
    }
}

fn metadata_base(preset: &str, seed: u64, variant: Variant) -> Vec<(String, String)> {
    vec![
        ("preset".to_string(), preset.to_string()),
        ("seed".to_string(), seed.to_string()),
        (
            "variant".to_string(),
            match variant {
                Variant::Serial => "serial".to_string(),
                Variant::Parallel => "parallel".to_string(),
            },
        ),
    ]
}

fn synthetic_run(
    kind: &str,
    order: usize,
    seed: u64,
    variant: Variant,
    rule: &StoppingRule,
    label: &str,
) -> Result<TraceArtifact, CliError> {
    let extents = vec![20; order];
    let instance = if kind == "odeco" {
        gen_odeco(&GeneratorSpec::odeco(extents, 10, 1e-2, seed))?
    } else {
        gen_ideco(&GeneratorSpec::ideco(extents, 10, 1e-2, 1e-2, seed))?
    };
    let problem = AltLsProblem::new(instance.truth.reconstruct())?;
    let hooks = RunHooks {
        truth: Some(&instance.truth),
        pairing: Pairing::Identity,
        direct_error: true,
    };
    let (_, trace) = solver::run(&problem, &instance.init, variant, rule, &hooks)?;
    let mut metadata = metadata_base(label, seed, variant);
    metadata.push(("kind".to_string(), kind.to_string()));
    metadata.push(("mu".to_string(), format_float(instance.coherence)));
    metadata.push(("kappa".to_string(), format_float(instance.kappa)));
    Ok(TraceArtifact {
        file_name: format!("{label}_s{seed}.csv"),
        metadata,
        trace,
    })
}

/// Run one preset for one seed; several artifacts when the preset spans a
/// grid (weights runs both generators, hybrid sweeps omega, the order-2
/// counterexample sweeps matrix sizes).
pub fn run_preset(config: &ExperimentConfig, seed: u64) -> Result<Vec<TraceArtifact>, CliError> {
    match config.preset {
        Preset::Odeco3 | Preset::Odeco4 => {
            let order = if config.preset == Preset::Odeco3 { 3 } else { 4 };
            let rule = odeco_rule(config.max_iters, config.tol);
            Ok(vec![synthetic_run(
                "odeco",
                order,
                seed,
                config.variant,
                &rule,
                config.preset.as_str(),
            )?])
        }
        Preset::Ideco3 | Preset::Ideco4 => {
            let order = if config.preset == Preset::Ideco3 { 3 } else { 4 };
            let rule = ideco_rule(config.max_iters, config.tol);
            Ok(vec![synthetic_run(
                "ideco",
                order,
                seed,
                config.variant,
                &rule,
                config.preset.as_str(),
            )?])
        }
        Preset::Weights => {
            let odeco = synthetic_run(
                "odeco",
                3,
                seed,
                config.variant,
                &odeco_rule(config.max_iters, config.tol),
                "weights-odeco3",
            )?;
            let ideco = synthetic_run(
                "ideco",
                3,
                seed,
                config.variant,
                &ideco_rule(config.max_iters, config.tol),
                "weights-ideco3",
            )?;
            Ok(vec![odeco, ideco])
        }
        Preset::HybridCyclic => {
            let (tensor, _) = gen_cyclic(seed);
            let problem = AltLsProblem::new(tensor)?;
            let init = random_sphere_init(&[10, 10, 10], 3, seed ^ 0x9E37_79B9);
            let schedule_counts = (
                config.reduced_iters.unwrap_or(25),
                config.regular_iters.unwrap_or(25),
            );
            let rule = StoppingRule {
                max_iterations: schedule_counts.0 + schedule_counts.1,
                error_change_tol: config.tol.unwrap_or(0.0),
                epsilon_floor: 0.0,
            };
            let hooks = RunHooks {
                direct_error: true,
                ..RunHooks::default()
            };
            let omegas: Vec<f64> = match config.omega {
                Some(w) => vec![w],
                None => OMEGA_GRID.to_vec(),
            };
            let mut artifacts = Vec::new();
            for omega in omegas {
                let schedule = HybridSchedule::new(omega, schedule_counts.0, schedule_counts.1);
                let (_, trace) = run_hybrid(&problem, &init, &schedule, &rule, &hooks)?;
                let mut metadata = metadata_base("hybrid-cyclic", seed, Variant::Serial);
                metadata.push(("kind".to_string(), "cyclic".to_string()));
                metadata.push(("omega".to_string(), format_float(omega)));
                metadata.push((
                    "schedule".to_string(),
                    format!("{}+{}", schedule_counts.0, schedule_counts.1),
                ));
                artifacts.push(TraceArtifact {
                    file_name: format!("hybrid-cyclic_s{seed}_w{omega}.csv"),
                    metadata,
                    trace,
                });
            }
            Ok(artifacts)
        }
        Preset::CounterexampleN2 => {
            let rule = StoppingRule {
                max_iterations: config.max_iters.unwrap_or(12),
                error_change_tol: config.tol.unwrap_or(0.0),
                epsilon_floor: 0.0,
            };
            let mut artifacts = Vec::new();
            for rank in [2usize, 3, 5] {
                let (tensor, init) = gen_identity_counterexample(rank, seed)?;
                let problem = AltLsProblem::new(tensor)?;
                let hooks = RunHooks {
                    direct_error: true,
                    ..RunHooks::default()
                };
                let (_, trace) = solver::run(&problem, &init, Variant::Parallel, &rule, &hooks)?;
                let mut metadata = metadata_base("counterexample-n2", seed, Variant::Parallel);
                metadata.push(("kind".to_string(), "identity-matrix".to_string()));
                metadata.push(("rank".to_string(), rank.to_string()));
                artifacts.push(TraceArtifact {
                    file_name: format!("counterexample-n2_r{rank}_s{seed}.csv"),
                    metadata,
                    trace,
                });
            }
            Ok(artifacts)
        }
    }
}

pub fn cmd_experiment(config: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    for &seed in &config.seeds {
        let artifacts = run_preset(config, seed)?;
        written.extend(write_artifacts(
            &config.output,
            &artifacts,
            !config.no_timestamp,
        )?);
    }
    Ok(written)
}

// ---------------------------------------------------------------------------
// decompose
// ---------------------------------------------------------------------------

pub struct DecomposeOutcome {
    pub model_path: PathBuf,
    pub trace_path: PathBuf,
    pub final_relative_error: f64,
    pub rank_warning: bool,
}

pub fn cmd_decompose(config: &DecomposeConfig) -> Result<DecomposeOutcome, CliError> {
    let tensor = tensor_io::read_tensor_file(&config.input)?;
    let min_extent = tensor.shape().iter().copied().min().unwrap_or(0);
    let rank_warning = config.rank > min_extent;
    if rank_warning {
        eprintln!(
            "warning: rank {} exceeds the smallest extent {}; no orthogonal-decomposition guarantee applies",
            config.rank, min_extent
        );
    }

    let shape = tensor.shape().to_vec();
    let problem = AltLsProblem::new(tensor)?;
    let init = random_sphere_init(&shape, config.rank, config.seed);
    let rule = StoppingRule {
        max_iterations: config.max_iters,
        error_change_tol: config.tol,
        epsilon_floor: 0.0,
    };
    let hooks = RunHooks {
        direct_error: true,
        ..RunHooks::default()
    };
    let (model, trace) = solver::run(&problem, &init, config.variant, &rule, &hooks)?;

    if let Some(parent) = config.output.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let model_path = config.output.with_extension("model");
    let trace_path = config.output.with_extension("csv");
    let mut model_file = Vec::new();
    tensor_io::write_model(&model, &mut model_file)?;
    std::fs::write(&model_path, model_file)?;

    let extents: Vec<String> = shape.iter().map(usize::to_string).collect();
    let artifact = TraceArtifact {
        file_name: String::new(),
        metadata: vec![
            ("command".to_string(), "decompose".to_string()),
            ("input".to_string(), config.input.display().to_string()),
            ("shape".to_string(), extents.join("x")),
            ("rank".to_string(), config.rank.to_string()),
            ("seed".to_string(), config.seed.to_string()),
        ],
        trace: trace.clone(),
    };
    std::fs::write(&trace_path, render_trace_csv(&artifact, !config.no_timestamp))?;

    let final_relative_error = trace.last().map(|r| r.relative_error).unwrap_or(f64::NAN);
    Ok(DecomposeOutcome {
        model_path,
        trace_path,
        final_relative_error,
        rank_warning,
    })
}

// ---------------------------------------------------------------------------
// lemma suite
// ---------------------------------------------------------------------------

pub struct LemmaSuiteOutcome {
    pub rows: usize,
    pub violations: usize,
    pub path: PathBuf,
}

pub fn cmd_lemma_suite(config: &LemmaSuiteConfig) -> Result<LemmaSuiteOutcome, CliError> {
    let rows = lemmas::run_suite(config.instances, config.seed)?;
    let mut out = String::new();
    if !config.no_timestamp {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let _ = writeln!(out, "# generated_unix={now}");
    }
    let _ = writeln!(out, "{}", SuiteRow::csv_header());
    let mut violations = 0;
    for row in &rows {
        if row.report.violates() {
            violations += 1;
        }
        let _ = writeln!(out, "{}", row.csv_row());
    }
    if let Some(parent) = config.output.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(&config.output, out)?;
    if violations > 0 {
        return Err(CliError {
            code: EXIT_LEMMA_VIOLATION,
            message: format!("{violations} lemma margin violations"),
        });
    }
    Ok(LemmaSuiteOutcome {
        rows: rows.len(),
        violations,
        path: config.output.clone(),
    })
}

/// Run a parsed command, returning the process exit code.
pub fn execute(command: &Command) -> i32 {
    let result: Result<String, CliError> = match command {
        Command::Experiment(config) => cmd_experiment(config).map(|paths| {
            format!(
                "wrote {} trace file(s) to {}",
                paths.len(),
                config.output.display()
            )
        }),
        Command::Decompose(config) => cmd_decompose(config).map(|outcome| {
            format!(
                "model: {}\ntrace: {}\nfinal relative error: {:e}",
                outcome.model_path.display(),
                outcome.trace_path.display(),
                outcome.final_relative_error
            )
        }),
        Command::LemmaSuite(config) => cmd_lemma_suite(config).map(|outcome| {
            format!(
                "{} rows, {} violations, wrote {}",
                outcome.rows,
                outcome.violations,
                outcome.path.display()
            )
        }),
    };
    match result {
        Ok(message) => {
            println!("{message}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn run_main(args: &[String]) -> i32 {
    match parse_args(args) {
        Ok(command) => execute(&command),
        Err(e) => {
            eprintln!("error: {}", e.message);
            eprintln!("{USAGE}");
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_experiment_flags() {
        let cmd = parse_args(&args(&[
            "experiment",
            "--preset",
            "odeco3",
            "--seeds",
            "0..3,7",
            "--variant",
            "serial",
            "--output",
            "/tmp/out",
            "--no-timestamp",
        ]))
        .unwrap();
        match cmd {
            Command::Experiment(c) => {
                assert_eq!(c.preset, Preset::Odeco3);
                assert_eq!(c.seeds, vec![0, 1, 2, 7]);
                assert_eq!(c.variant, Variant::Serial);
                assert!(c.no_timestamp);
            }
            _ => panic!("wrong command"),
        }
    }

    #[test]
    fn rejects_unknown_preset_and_flags() {
        assert!(parse_args(&args(&[
            "experiment",
            "--preset",
            "nope",
            "--output",
            "/tmp/x"
        ]))
        .is_err());
        assert!(parse_args(&args(&["experiment", "--bogus"])).is_err());
        assert!(parse_args(&args(&["frobnicate"])).is_err());
    }

    #[test]
    fn decompose_requires_input_and_rank() {
        assert!(parse_args(&args(&["decompose", "--output", "/tmp/x"])).is_err());
        assert!(parse_args(&args(&[
            "decompose", "--input", "t.txt", "--output", "/tmp/x"
        ]))
        .is_err());
        let ok = parse_args(&args(&[
            "decompose", "--input", "t.txt", "--rank", "2", "--output", "/tmp/x",
        ]));
        assert!(ok.is_ok());
    }

    #[test]
    fn seed_list_parsing() {
        assert_eq!(parse_seed_list("0..4").unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(parse_seed_list("5,9,1").unwrap(), vec![5, 9, 1]);
        assert!(parse_seed_list("4..4").is_err());
        assert!(parse_seed_list("x").is_err());
    }

    #[test]
    fn csv_rendering_skips_missing_metrics() {
        use cp_altls::diagnostics::{Phase, TraceRecord};
        let mut trace = ConvergenceTrace::new();
        trace.push(TraceRecord {
            iteration: 0,
            epsilon: None,
            relative_error: 0.5,
            weight_error: None,
            phase: Phase::Init,
            wall_seconds: 0.0,
        });
        let artifact = TraceArtifact {
            file_name: "t.csv".into(),
            metadata: vec![("preset".into(), "demo".into())],
            trace,
        };
        let csv = render_trace_csv(&artifact, false);
        assert!(csv.starts_with("# preset=demo\n"));
        assert!(csv.contains("iteration,epsilon,rel_error,weight_error,phase,wall_seconds"));
        assert!(csv.contains("0,,5e-1,,init,"));
        assert!(!csv.contains("generated_unix"));
    }
}
