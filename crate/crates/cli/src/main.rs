use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use rtldiag::bench::{run_bench, BenchConfig, BenchmarkRecord, FaultMode};
use rtldiag::builder::{build_model_from_netlist, Granularity};
use rtldiag::diag::{DiagnosisConfig, Truncation};
use rtldiag::hdl;
use rtldiag::netlist::parse_bench;
use rtldiag::prop::PropConfig;
use rtldiag::report::{diagnose_instant, diagnose_model, diagnose_temporal, DiagnosisReport, Mode};
use rtldiag::sim::simulate;
use rtldiag::stimulus::Stimulus;

/// Model-based fault localization for VHDL-RTL designs and gate netlists.
#[derive(Debug, Parser)]
#[command(name = "rtldiag", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute minimal diagnoses for a design and an observation file.
    Diagnose(DiagnoseArgs),
    /// Run the fault-injection benchmark over `.bench` netlists.
    Bench(BenchArgs),
    /// Simulate a design under a stimulus and print the settled values.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Instant,
    Temporal,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GranularityArg {
    Stmt,
    Expr,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FaultModeArg {
    /// A fresh random fault for every vector.
    PerVector,
    /// One random fault for all vectors of a circuit.
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, clap::Args)]
struct DiagnoseArgs {
    /// VHDL design (`.vhd`) or netlist (`.bench`).
    design: PathBuf,
    /// TOML observation or stimulus file.
    observations: PathBuf,
    #[arg(long, value_enum, default_value = "instant")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "stmt")]
    granularity: GranularityArg,
    /// Largest diagnosis cardinality to search.
    #[arg(long = "max-card", default_value_t = 2)]
    max_card: usize,
    /// State signals to cut in instant mode.
    #[arg(long, value_delimiter = ',')]
    state: Vec<String>,
    /// Rule applications allowed per consistency check.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct BenchArgs {
    /// `.bench` files or directories containing them.
    #[arg(required = true)]
    circuits: Vec<PathBuf>,
    #[arg(long, default_value_t = 100)]
    vectors: usize,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Wall-clock limit per diagnosis run, in milliseconds.
    #[arg(long = "time-budget-ms")]
    time_budget_ms: Option<u64>,
    #[arg(long = "fault-mode", value_enum, default_value = "per-vector")]
    fault_mode: FaultModeArg,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct SimulateArgs {
    design: PathBuf,
    stimulus: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    fn input(path: &Path, err: impl std::fmt::Display) -> Self {
        Failure {
            code: 2,
            message: format!("{}: {err}", path.display()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(path, e))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::input(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn is_bench(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("bench"))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn diagnose(args: DiagnoseArgs) -> Result<(), Failure> {
    if args.format == Format::Csv {
        return Err(Failure::usage("diagnose writes json or text"));
    }
    if args.max_card == 0 {
        return Err(Failure::usage("--max-card must be at least 1"));
    }
    let granularity = match args.granularity {
        GranularityArg::Stmt => Granularity::Statement,
        GranularityArg::Expr => Granularity::Expression,
    };
    let mut propagation = PropConfig::default();
    if let Some(b) = args.budget {
        propagation.budget = b;
    }
    let config = DiagnosisConfig {
        max_cardinality: Some(args.max_card),
        propagation,
        ..Default::default()
    };
    let design_text = read(&args.design)?;
    let stimulus = Stimulus::parse(&read(&args.observations)?)
        .map_err(|e| Failure::input(&args.observations, e))?;
    let name = stem(&args.design);
    let report: DiagnosisReport = if is_bench(&args.design) {
        if matches!(args.mode, ModeArg::Temporal) {
            return Err(Failure::usage(
                "netlists are combinational; use --mode instant",
            ));
        }
        let start = std::time::Instant::now();
        let n = parse_bench(&name, &design_text).map_err(|e| Failure::input(&args.design, e))?;
        let model = build_model_from_netlist(&n).map_err(|e| Failure::input(&args.design, e))?;
        let obs = stimulus
            .instant_observations(&model)
            .map_err(|e| Failure::input(&args.observations, e))?;
        let build = start.elapsed().as_secs_f64() * 1e3;
        diagnose_model(
            &name,
            Mode::Instant,
            granularity,
            &model,
            &obs,
            &config,
            build,
        )
    } else {
        let unit = hdl::parse(&design_text).map_err(|e| Failure::input(&args.design, e))?;
        let run = match args.mode {
            ModeArg::Instant => {
                if args.state.is_empty() {
                    return Err(Failure::usage("instant mode needs --state SIG[,SIG...]"));
                }
                diagnose_instant(&name, &unit, &stimulus, &args.state, granularity, &config)
            }
            ModeArg::Temporal => diagnose_temporal(&name, &unit, &stimulus, granularity, &config),
        };
        run.map_err(|e| match e {
            rtldiag::report::RunError::Hdl(e) => Failure::input(&args.design, e),
            other => Failure::input(&args.observations, other),
        })?
    };
    let text = match args.format {
        Format::Text => report.to_text(),
        _ => report.to_json() + "\n",
    };
    emit(args.out.as_deref(), &text)?;
    if report.truncated == Some(Truncation::RuleBudget) {
        return Err(Failure {
            code: 3,
            message: "propagation budget exceeded; the diagnoses listed are incomplete".into(),
        });
    }
    Ok(())
}

fn bench_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let entries = fs::read_dir(p).map_err(|e| Failure::input(p, e))?;
            let mut found: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| is_bench(p))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(Failure::usage("no .bench files given"));
    }
    Ok(out)
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    if args.format == Format::Text {
        return Err(Failure::usage("bench writes csv or json"));
    }
    let config = BenchConfig {
        vectors: args.vectors,
        repeats: args.repeats,
        seed: args.seed,
        time_budget: args.time_budget_ms.map(Duration::from_millis),
        fault_mode: match args.fault_mode {
            FaultModeArg::PerVector => FaultMode::PerVector,
            FaultModeArg::Shared => FaultMode::Shared,
        },
        ..Default::default()
    };
    let mut records: Vec<BenchmarkRecord> = Vec::new();
    for path in bench_files(&args.circuits)? {
        let name = stem(&path);
        // per-circuit failures are recorded and the run continues
        let parsed = fs::read_to_string(&path)
            .map_err(|e| e.to_string())
            .and_then(|t| parse_bench(&name, &t).map_err(|e| e.to_string()));
        match parsed {
            Ok(n) => {
                eprintln!(
                    "{name}: {} gates, {} vectors",
                    n.gates.len(),
                    config.vectors
                );
                records.push(run_bench(&n, &config));
            }
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                let empty = parse_bench(&name, "").expect("empty netlist parses");
                records.push(BenchmarkRecord::from_runs(
                    &empty,
                    config.fault_mode,
                    Vec::new(),
                    Some(e),
                ));
            }
        }
    }
    let text = match args.format {
        Format::Json => serde_json::to_string_pretty(&records).expect("records serialize") + "\n",
        _ => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &records {
                w.serialize(r.row())
                    .map_err(|e| Failure::usage(e.to_string()))?;
            }
            String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
        }
    };
    emit(args.out.as_deref(), &text)
}

fn simulate_cmd(args: SimulateArgs) -> Result<(), Failure> {
    if args.format == Format::Csv {
        return Err(Failure::usage("simulate writes text or json"));
    }
    let unit = hdl::parse(&read(&args.design)?).map_err(|e| Failure::input(&args.design, e))?;
    hdl::check_static(&unit).map_err(|e| Failure::input(&args.design, e))?;
    let stimulus =
        Stimulus::parse(&read(&args.stimulus)?).map_err(|e| Failure::input(&args.stimulus, e))?;
    let trace = simulate(&unit, &stimulus).map_err(|e| Failure::input(&args.stimulus, e))?;
    let text = match args.format {
        Format::Json => serde_json::to_string_pretty(&trace).expect("trace serializes") + "\n",
        _ => trace.dump(),
    };
    emit(args.out.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Diagnose(a) => diagnose(a),
        Command::Bench(a) => bench(a),
        Command::Simulate(a) => simulate_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
