mod problem;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qaoa::angles::RoundRecord;
use qaoa::grover_fast::CompressedCost;
use qaoa::{
    compress_cost, find_angles, find_angles_random_restarts, median_angles, simulate, AngleSchedule, BasisSet,
    CostTable, Mixer, Mixers, OptimizerConfig, QaoaError, StateVector,
};
use serde_json::{json, Value};

use problem::{parse_mixer, read_angles, read_complex_vector, MixerSpec, ProblemArgs, ProblemKind};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(QaoaError),
}

impl From<QaoaError> for CliError {
    fn from(e: QaoaError) -> Self {
        CliError::Lib(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Lib(QaoaError::Domain(_)) => 2,
            CliError::Lib(QaoaError::Capacity(_)) => 4,
            CliError::Lib(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qaoa", version, about = "Statevector simulation and angle finding for alternating operator ansatz circuits")]
struct Cli {
    /// Worker threads for parallel kernels (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one angle schedule.
    Simulate(SimulateArgs),
    /// Find good angles for p = 1..rounds.
    Optimize(OptimizeArgs),
    /// Write the objective-value histogram used by compressed Grover simulation.
    GroverCount(CountArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct MixerArgs {
    /// x[:orders], clique, ring, grover or custom:<path>.
    #[arg(long, value_parser = parse_mixer)]
    mixer: MixerSpec,
    /// Eigendecomposition cache, created on first use.
    #[arg(long)]
    mixer_cache: Option<PathBuf>,
    /// JSON amplitudes in basis order (default: uniform superposition).
    #[arg(long)]
    initial_state: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    mixer: MixerArgs,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "gammas")]
    betas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "betas")]
    gammas: Option<Vec<f64>>,
    /// JSON file with `betas` and `gammas` arrays.
    #[arg(long, conflicts_with_all = ["betas", "gammas"])]
    angles_file: Option<PathBuf>,
    /// Include every basis-state probability in JSON output.
    #[arg(long)]
    probabilities: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Iterative,
    Restarts,
    Median,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    mixer: MixerArgs,
    #[arg(long)]
    rounds: usize,
    /// Per-round progress file; an existing file resumes the run.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Iterative)]
    method: Method,
    #[arg(long, default_value_t = 50)]
    hops: usize,
    #[arg(long, default_value_t = 0.3)]
    step_size: f64,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    #[arg(long, default_value_t = 100)]
    restarts: usize,
    /// Training instances for the median method.
    #[arg(long, default_value_t = 5)]
    train_instances: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args)]
struct CountArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    out: PathBuf,
}

fn provenance(command: &str) -> Value {
    json!({
        "command": command,
        "argv": std::env::args().collect::<Vec<_>>(),
        "version": env!("CARGO_PKG_VERSION"),
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(QaoaError::from)?,
        None => std::io::stdout().write_all(text.as_bytes()).map_err(QaoaError::from)?,
    }
    Ok(())
}

fn to_json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn load_initial(path: Option<&Path>, basis: &BasisSet) -> Result<Option<StateVector>, CliError> {
    path.map(|p| Ok(StateVector::new(basis.clone(), read_complex_vector(p, basis.dim())?)?))
        .transpose()
}

struct Setup {
    instance: problem::Instance,
    table: CostTable,
    mixer: Mixer,
    initial: Option<StateVector>,
}

fn setup(problem: &ProblemArgs, mixer: &MixerArgs) -> Result<Setup, CliError> {
    let instance = problem.instance()?;
    let table = instance.cost_table(instance.orientation(problem.minimize))?;
    let mixer_op = mixer.mixer.build(&instance.basis, mixer.mixer_cache.as_deref())?;
    let initial = load_initial(mixer.initial_state.as_deref(), &instance.basis)?;
    Ok(Setup {
        instance,
        table,
        mixer: mixer_op,
        initial,
    })
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let s = setup(&args.problem, &args.mixer)?;
    let (betas, gammas) = match (&args.angles_file, &args.betas, &args.gammas) {
        (Some(path), _, _) => read_angles(path)?,
        (None, Some(b), Some(g)) => (b.clone(), g.clone()),
        _ => return Err(CliError::Usage("give --betas and --gammas, or --angles-file".into())),
    };
    let angles = AngleSchedule::new(betas, gammas)?;
    let r = simulate(&angles, &Mixers::Single(&s.mixer), &s.table, s.initial.as_ref())?;
    let text = match args.format {
        Format::Csv => {
            let mut t = String::from("index,bitstring,probability\n");
            for (i, (b, pr)) in s.instance.basis.iter().zip(r.probabilities()).enumerate() {
                writeln!(t, "{i},{b},{pr:.17e}").unwrap();
            }
            t
        }
        Format::Json => {
            let mut v = json!({
                "provenance": provenance("simulate"),
                "problem": s.instance.to_json(),
                "mixer": args.mixer.mixer.label(),
                "angles": {"betas": angles.betas(), "gammas": angles.gammas()},
                "exp_value": r.exp_value(),
                "ground_state_probability": r.ground_state_probability(),
            });
            if let Some(ar) = r.approx_ratio() {
                v["approx_ratio"] = json!(ar);
            }
            if args.probabilities {
                v["probabilities"] = json!(r.probabilities());
            }
            to_json_text(&v)
        }
    };
    emit(args.out.as_deref(), &text)
}

/// Median method: iterative angles on random training instances of the same
/// kind and size, combined round by round.
fn median_records(args: &OptimizeArgs, cfg: &OptimizerConfig, s: &Setup) -> Result<Vec<RoundRecord>, CliError> {
    if args.problem.problem == ProblemKind::Table {
        return Err(CliError::Usage("--method median needs a problem family, not a cost table".into()));
    }
    if args.train_instances == 0 {
        return Err(CliError::Usage("--train-instances must be at least 1".into()));
    }
    let base_seed = args.problem.seed.unwrap_or(0);
    let mut per_instance = Vec::new();
    for t in 0..args.train_instances {
        let train = ProblemArgs {
            n: Some(s.instance.basis.n()),
            graph: None,
            cnf: None,
            cost_table: None,
            random_instance: true,
            seed: Some(base_seed.wrapping_add(1 + t as u64)),
            ..args.problem.clone()
        };
        let inst = train.instance()?;
        let table = inst.cost_table(inst.orientation(false))?;
        per_instance.push(find_angles(args.rounds, &Mixers::Single(&s.mixer), &table, cfg, None)?);
    }
    let mut records = Vec::new();
    for p in 1..=args.rounds {
        let schedules: Vec<AngleSchedule> = per_instance.iter().map(|recs| recs[p - 1].schedule()).collect();
        let angles = median_angles(&schedules)?;
        let r = simulate(&angles, &Mixers::Single(&s.mixer), &s.table, None)?;
        records.push(RoundRecord {
            p,
            best_betas: angles.betas().unwrap(),
            best_gammas: angles.gammas().to_vec(),
            best_expectation: r.exp_value(),
            evaluations_used: 0,
        });
    }
    Ok(records)
}

fn cmd_optimize(args: &OptimizeArgs) -> Result<(), CliError> {
    if args.rounds == 0 {
        return Err(CliError::Usage("--rounds must be at least 1".into()));
    }
    if args.checkpoint.is_some() && args.method != Method::Iterative {
        return Err(CliError::Usage("--checkpoint applies to --method iterative".into()));
    }
    if args.mixer.initial_state.is_some() {
        return Err(CliError::Usage("angle finding starts from the uniform superposition; drop --initial-state".into()));
    }
    let s = setup(&args.problem, &args.mixer)?;
    let cfg = OptimizerConfig {
        hops: args.hops,
        step_size: args.step_size,
        temperature: args.temperature,
        restarts: args.restarts,
        rng_seed: args.problem.seed.unwrap_or(0),
        ..OptimizerConfig::default()
    };
    let mixers = Mixers::Single(&s.mixer);
    let records = match args.method {
        Method::Iterative => find_angles(args.rounds, &mixers, &s.table, &cfg, args.checkpoint.as_deref())?,
        Method::Restarts => (1..=args.rounds)
            .map(|p| find_angles_random_restarts(p, &mixers, &s.table, &cfg))
            .collect::<Result<_, _>>()?,
        Method::Median => median_records(args, &cfg, &s)?,
    };
    let ar = |r: &RoundRecord| s.table.approx_ratio(r.best_expectation);
    let text = match args.format {
        Format::Csv => {
            let mut t = String::from("p,exp_value,approx_ratio\n");
            for r in &records {
                let ratio = ar(r).map(|a| format!("{a:.17e}")).unwrap_or_default();
                writeln!(t, "{},{:.17e},{ratio}", r.p, r.best_expectation).unwrap();
            }
            t
        }
        Format::Json => {
            let last = records.last().unwrap();
            let final_run = simulate(&last.schedule(), &mixers, &s.table, None)?;
            let rounds: Vec<Value> = records
                .iter()
                .map(|r| {
                    json!({
                        "p": r.p,
                        "exp_value": r.best_expectation,
                        "approx_ratio": ar(r),
                        "betas": r.best_betas,
                        "gammas": r.best_gammas,
                        "evaluations": r.evaluations_used,
                    })
                })
                .collect();
            let mut v = json!({
                "provenance": provenance("optimize"),
                "problem": s.instance.to_json(),
                "mixer": args.mixer.mixer.label(),
                "method": format!("{:?}", args.method).to_lowercase(),
                "rounds": rounds,
                "angles": {"betas": last.best_betas, "gammas": last.best_gammas},
                "exp_value": last.best_expectation,
                "ground_state_probability": final_run.ground_state_probability(),
            });
            if let Some(a) = ar(last) {
                v["approx_ratio"] = json!(a);
            }
            to_json_text(&v)
        }
    };
    emit(args.out.as_deref(), &text)
}

fn cmd_grover_count(args: &CountArgs, threads: usize) -> Result<(), CliError> {
    let instance = args.problem.instance()?;
    let orientation = instance.orientation(args.problem.minimize);
    let hist: CompressedCost = compress_cost(instance.objective(), &instance.basis, threads, orientation)?;
    hist.save(&args.out)?;
    println!("m={} total={}", hist.values().len(), hist.total());
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = match cli.threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(t) => t,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::GroverCount(a) => cmd_grover_count(a, threads),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qaoa: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
