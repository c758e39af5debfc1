use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use tabmem_core::association::{cluster_table, NumCatMeasure, DEFAULT_CLUSTER_THRESHOLD};
use tabmem_core::augment::{augment, AugmentConfig, AugmentMode, DEFAULT_RATIO};
use tabmem_core::fidelity::fidelity_report;
use tabmem_core::memorization::{audit, DEFAULT_BINS};
use tabmem_core::scorelab::{simulate, FinalStep, SdeConfig, SigmaSchedule};
use tabmem_core::table::{load_csv, write_csv};
use tabmem_core::{Schema, Table};

#[derive(Parser, Debug)]
#[command(name = "tabmem", version, about = "Memorization audits, augmentation and fidelity metrics for tabular data")]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Worker threads (default: available cores).
    #[arg(long, global = true, env = "TABMEM_THREADS")]
    threads: Option<usize>,

    /// Print a human summary instead of JSON.
    #[arg(long, global = true)]
    pretty: bool,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Nearest-neighbor ratio memorization audit.
    Audit(AuditArgs),
    /// Append TabCutMix, TabCutMixPlus or IJF rows to a training table.
    Augment(AugmentArgs),
    /// Shape, trend, DCR, C2ST and support metrics.
    Fidelity(FidelityArgs),
    /// Correlated-feature clusters.
    Cluster(ClusterArgs),
    /// Backward SDE under the closed-form score.
    Simulate(SimulateArgs),
    /// Re-run the command recorded in a report or run file.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct AuditArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    synthetic: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    /// Ratio threshold; accepts fractions such as `1/3`.
    #[arg(long, default_value = "1/3", value_parser = parse_threshold)]
    threshold: f64,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also write the ratio histogram as CSV.
    #[arg(long)]
    histogram: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Cutmix,
    Cutmixplus,
    Ijf,
}

impl From<ModeArg> for AugmentMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Cutmix => AugmentMode::CutMix,
            ModeArg::Cutmixplus => AugmentMode::CutMixPlus,
            ModeArg::Ijf => AugmentMode::Ijf,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum MeasureArg {
    Eta,
    EtaSquared,
}

impl From<MeasureArg> for NumCatMeasure {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::Eta => NumCatMeasure::Eta,
            MeasureArg::EtaSquared => NumCatMeasure::EtaSquared,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct AugmentArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[arg(long, default_value_t = DEFAULT_RATIO)]
    ratio: f64,
    #[arg(long, default_value_t = DEFAULT_CLUSTER_THRESHOLD, value_parser = parse_threshold)]
    cluster_threshold: f64,
    #[arg(long, value_enum, default_value = "eta")]
    measure: MeasureArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct FidelityArgs {
    #[arg(long)]
    real: PathBuf,
    #[arg(long)]
    synthetic: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    holdout: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct ClusterArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long, default_value_t = DEFAULT_CLUSTER_THRESHOLD, value_parser = parse_threshold)]
    threshold: f64,
    #[arg(long, value_enum, default_value = "eta")]
    measure: MeasureArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum FinalStepArg {
    NearestLatent,
    Euler,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct SimulateArgs {
    #[arg(long, default_value_t = 16)]
    n_latents: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 10_000)]
    steps: usize,
    #[arg(long, default_value_t = 256)]
    trajectories: usize,
    #[arg(long, value_enum, default_value = "nearest-latent")]
    final_step: FinalStepArg,
    /// Per-step trajectory CSV.
    #[arg(long)]
    emit_trajectories: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    /// A report JSON with an embedded `run_config`, or a bare run file.
    #[arg(long)]
    config: PathBuf,
}

/// Everything needed to reproduce a run. Thread count is deliberately
/// absent: outputs do not depend on it.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RunConfig {
    tool: String,
    version: String,
    seed: u64,
    #[serde(flatten)]
    command: Command,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", content = "args", rename_all = "lowercase")]
enum Command {
    Audit(AuditArgs),
    Augment(AugmentArgs),
    Fidelity(FidelityArgs),
    Cluster(ClusterArgs),
    Simulate(SimulateArgs),
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<tabmem_core::Error> for Failure {
    fn from(e: tabmem_core::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn parse_threshold(s: &str) -> Result<f64, String> {
    let value = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("bad numerator in `{s}`"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("bad denominator in `{s}`"))?;
            if b == 0.0 {
                return Err(format!("zero denominator in `{s}`"));
            }
            a / b
        }
        None => s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?,
    };
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(format!("{value} is outside [0, 1]"))
    }
}

fn require_file(path: &Path) -> Outcome {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("no such file: {}", path.display())))
    }
}

fn load_schema(path: &Path) -> Outcome<Schema> {
    require_file(path)?;
    Ok(Schema::from_json_file(path)?)
}

fn load_table(path: &Path, schema: &Schema) -> Outcome<Table> {
    require_file(path)?;
    Ok(load_csv(path, schema.clone())?)
}

fn write_json(path: &Path, value: &Value) -> Outcome {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display())))
}

fn emit(value: &Value) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn with_config(run: &RunConfig, key: &str, body: Value) -> Value {
    let mut map = serde_json::Map::new();
    map.insert("run_config".into(), serde_json::to_value(run).expect("serializable"));
    map.insert(key.into(), body);
    Value::Object(map)
}

fn run(config: &RunConfig, pretty: bool) -> Outcome {
    match &config.command {
        Command::Audit(a) => cmd_audit(config, a),
        Command::Augment(a) => cmd_augment(config, a, pretty),
        Command::Fidelity(a) => cmd_fidelity(config, a, pretty),
        Command::Cluster(a) => cmd_cluster(config, a, pretty),
        Command::Simulate(a) => cmd_simulate(config, a, pretty),
    }
}

fn cmd_audit(config: &RunConfig, args: &AuditArgs) -> Outcome {
    let schema = load_schema(&args.schema)?;
    let train = load_table(&args.train, &schema)?;
    let synthetic = load_table(&args.synthetic, &schema)?;
    let report = audit(&synthetic, &train, args.threshold, args.bins)?;
    if let Some(path) = &args.histogram {
        report.histogram.write_csv(path)?;
    }
    let body = serde_json::to_value(&report).expect("serializable");
    write_json(&args.out, &with_config(config, "report", body))?;
    println!("mem_ratio: {:.2}%", 100.0 * report.mem_ratio);
    println!("mem_auc: {:.6}", report.mem_auc);
    Ok(())
}

fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".run.json");
    PathBuf::from(name)
}

fn cmd_augment(config: &RunConfig, args: &AugmentArgs, pretty: bool) -> Outcome {
    let schema = load_schema(&args.schema)?;
    let train = load_table(&args.train, &schema)?;
    let cfg = AugmentConfig {
        mode: args.mode.into(),
        ratio: args.ratio,
        seed: config.seed,
        cluster_threshold: args.cluster_threshold,
        num_cat: args.measure.into(),
    };
    let out = augment(&train, &cfg)?;
    write_csv(&out, &args.out)?;
    let run = serde_json::to_value(config).expect("serializable");
    write_json(&sidecar(&args.out), &run)?;
    let summary = serde_json::json!({
        "input_rows": train.len(),
        "augmented_rows": out.len() - train.len(),
        "output_rows": out.len(),
    });
    if pretty {
        println!(
            "{} rows in, {} appended, written to {}",
            train.len(),
            out.len() - train.len(),
            args.out.display()
        );
    } else {
        emit(&with_config(config, "summary", summary));
    }
    Ok(())
}

fn cmd_fidelity(config: &RunConfig, args: &FidelityArgs, pretty: bool) -> Outcome {
    let schema = load_schema(&args.schema)?;
    let real = load_table(&args.real, &schema)?;
    let synthetic = load_table(&args.synthetic, &schema)?;
    let holdout = args.holdout.as_deref().map(|p| load_table(p, &schema)).transpose()?;
    let report = fidelity_report(&real, &synthetic, holdout.as_ref(), config.seed)?;
    let doc = with_config(config, "report", serde_json::to_value(&report).expect("serializable"));
    write_json(&args.out, &doc)?;
    if pretty {
        println!("shape_score:     {:.4}", report.shape_score);
        println!("trend_score:     {:.4}", report.trend_score);
        if let Some(d) = report.dcr_probability {
            println!("dcr_probability: {d:.4}");
        }
        println!("c2st_score:      {:.4}", report.c2st_score);
        println!("alpha_precision: {:.4}", report.alpha_precision);
        println!("beta_recall:     {:.4}", report.beta_recall);
    } else {
        emit(&doc);
    }
    Ok(())
}

fn cmd_cluster(config: &RunConfig, args: &ClusterArgs, pretty: bool) -> Outcome {
    let schema = load_schema(&args.schema)?;
    let data = load_table(&args.data, &schema)?;
    let clusters = cluster_table(&data, args.threshold, args.measure.into())?;
    let named = clusters.named(&schema);
    let doc = serde_json::json!({
        "clusters": named,
        "threshold": args.threshold,
        "run_config": config,
    });
    if let Some(out) = &args.out {
        write_json(out, &doc)?;
    }
    if pretty {
        for group in &named {
            println!("{}", group.join(", "));
        }
    } else {
        emit(&doc);
    }
    Ok(())
}

fn write_trajectories(path: &Path, dim: usize, trajectories: &[tabmem_core::scorelab::Trajectory]) -> Outcome {
    let file = std::fs::File::create(path).map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display())))?;
    let mut w = std::io::BufWriter::new(file);
    let fail = |e: std::io::Error| Failure::Data(format!("cannot write {}: {e}", path.display()));
    let mut header = String::from("trajectory,step,t");
    for k in 0..dim {
        header.push_str(&format!(",z{k}"));
    }
    writeln!(w, "{header}").map_err(fail)?;
    for (i, tr) in trajectories.iter().enumerate() {
        for (step, (t, z)) in tr.times.iter().zip(&tr.states).enumerate() {
            write!(w, "{i},{step},{t}").map_err(fail)?;
            for v in z {
                write!(w, ",{v}").map_err(fail)?;
            }
            writeln!(w).map_err(fail)?;
        }
    }
    w.flush().map_err(fail)
}

fn cmd_simulate(config: &RunConfig, args: &SimulateArgs, pretty: bool) -> Outcome {
    if args.n_latents == 0 || args.dim == 0 || args.trajectories == 0 {
        return Err(Failure::Usage("--n-latents, --dim and --trajectories must be positive".into()));
    }
    let sde = SdeConfig {
        steps: args.steps,
        seed: config.seed,
        trajectories: args.trajectories,
        final_step: match args.final_step {
            FinalStepArg::NearestLatent => FinalStep::NearestLatent,
            FinalStepArg::Euler => FinalStep::Euler,
        },
    };
    let record = args.emit_trajectories.is_some();
    let (_, report, trajectories) = simulate(args.n_latents, args.dim, &SigmaSchedule::default(), &sde, record)?;
    if let Some(path) = &args.emit_trajectories {
        write_trajectories(path, args.dim, &trajectories)?;
    }
    let mut doc = serde_json::to_value(&report).expect("serializable");
    doc["run_config"] = serde_json::to_value(config).expect("serializable");
    if let Some(out) = &args.out {
        write_json(out, &doc)?;
    }
    if pretty {
        println!("replication_fraction:   {:.4}", report.replication_fraction);
        println!("mean_final_nn_distance: {:.3e}", report.mean_final_nn_distance);
    } else {
        emit(&doc);
    }
    Ok(())
}

fn load_replay(path: &Path) -> Outcome<RunConfig> {
    require_file(path)?;
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let value = match value.get("run_config") {
        Some(inner) => inner.clone(),
        None => value,
    };
    serde_json::from_value(value).map_err(|e| Failure::Usage(format!("{}: not a run configuration: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match cli.command {
        Cmd::Replay(r) => match load_replay(&r.config) {
            Ok(c) => c,
            Err(Failure::Usage(m)) | Err(Failure::Data(m)) => {
                eprintln!("error: {m}");
                return ExitCode::from(2);
            }
        },
        other => RunConfig {
            tool: "tabmem".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: cli.seed,
            command: match other {
                Cmd::Audit(a) => Command::Audit(a),
                Cmd::Augment(a) => Command::Augment(a),
                Cmd::Fidelity(a) => Command::Fidelity(a),
                Cmd::Cluster(a) => Command::Cluster(a),
                Cmd::Simulate(a) => Command::Simulate(a),
                Cmd::Replay(_) => unreachable!(),
            },
        },
    };

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(&config, cli.pretty)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
