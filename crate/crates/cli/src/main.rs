//! Benchmark driver: generate instances, solve them under a chosen
//! symmetry-handling setting, run full (instance x setting) matrices into
//! CSV, and summarize CSVs into shifted-geometric-mean tables.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use actsym::bench::{
    prepare, read_csv, run_matrix, summarize, write_csv, ProblemInstance, RunConfig, Setting,
};
use actsym::bnb::{solve, SolveStatus, SolverConfig};
use actsym::instances::{
    gen_mkp, gen_mucp, mkp_from_json, mkp_to_json, mucp_from_json, mucp_to_json, parse_dimacs,
    GenManifest, ItemClass, ProfitMode, MANIFEST_FORMAT, MKP_FORMAT, MUCP_FORMAT,
};
use actsym::subsym::MkcsData;

#[derive(Parser)]
#[command(
    name = "actsym",
    about = "Mixed-binary branch-and-bound with sub-symmetry activation handlers",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random instances plus a manifest.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Solve a single instance under one setting.
    Solve(SolveArgs),
    /// Run an (instance x setting) matrix and emit CSV rows.
    Bench(BenchArgs),
    /// Summarize a bench CSV into per-class tables.
    Summarize(SummarizeArgs),
}

#[derive(Subcommand)]
enum GenCommand {
    /// Multiple-knapsack instances.
    Mkp(GenMkpArgs),
    /// Min-up/min-down unit-commitment instances.
    Mucp(GenMucpArgs),
}

#[derive(Args)]
struct GenMkpArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    items: usize,
    #[arg(long)]
    knapsacks: usize,
    /// uncorrelated | weakly | strongly | subset-sum
    #[arg(long, default_value = "uncorrelated")]
    item_class: ItemClass,
    /// Symmetry factor as a fraction: 1/2, 1/3, 1/4 or 1/8.
    #[arg(long, default_value = "1/2", value_parser = parse_sym_factor)]
    sym_factor: u32,
    /// equal | free
    #[arg(long, default_value = "equal")]
    profits: ProfitMode,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Instance name (defaults to a descriptive one).
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
struct GenMucpArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    periods: usize,
    /// Comma-separated unit counts per type, e.g. `3,2` (at least one
    /// type needs two or more units).
    #[arg(long, value_delimiter = ',')]
    type_sizes: Vec<usize>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
struct SolverFlags {
    /// no-sym | orbitope | ineq | act | act-consec | act-allpairs
    #[arg(long)]
    setting: Setting,
    /// Wall-clock limit in seconds (default 3600; 7200 for graph coloring).
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    node_limit: Option<u64>,
    #[arg(long, default_value_t = 1e-6)]
    eps_int: f64,
    #[arg(long, default_value_t = 1e-7)]
    eps_feas: f64,
    #[arg(long, default_value_t = 1e-7)]
    eps_opt: f64,
    /// Recorded for provenance; the solver is deterministic regardless.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file (.json for MKP/MUCP, .col for graph coloring).
    instance: PathBuf,
    /// Color count, required for .col instances.
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    flags: SolverFlags,
    /// Emit the report as JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Instance files (.json or .col).
    instances: Vec<PathBuf>,
    /// Color count for .col instances.
    #[arg(long)]
    k: Option<usize>,
    /// Comma-separated settings to run.
    #[arg(long, value_delimiter = ',', required = true)]
    settings: Vec<Setting>,
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    node_limit: Option<u64>,
    /// Worker threads (1 preserves timing fidelity).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Bench CSV file.
    input: PathBuf,
    /// Comma-separated class boundaries in seconds, e.g. `100,1800`.
    #[arg(long, value_delimiter = ',', default_value = "100,1800")]
    class_bounds: Vec<f64>,
}

fn parse_sym_factor(text: &str) -> Result<u32, String> {
    match text {
        "1/2" => Ok(2),
        "1/3" => Ok(3),
        "1/4" => Ok(4),
        "1/8" => Ok(8),
        other => Err(format!("symmetry factor must be 1/2, 1/3, 1/4 or 1/8, got '{other}'")),
    }
}

fn load_instance(path: &Path, k: Option<usize>) -> Result<ProblemInstance> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".into());
    if path.extension().is_some_and(|e| e == "col") {
        let k = k.with_context(|| format!("{}: .col instances need --k", path.display()))?;
        let (graph, warnings) = parse_dimacs(&text)?;
        for w in warnings {
            eprintln!("{}: {w}", path.display());
        }
        return Ok(ProblemInstance::Mkcs {
            name: format!("{stem}-k{k}"),
            data: MkcsData { graph, k },
        });
    }
    let tag: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("{} is neither .col nor JSON", path.display()))?;
    match tag.get("format").and_then(|f| f.as_str()) {
        Some(MKP_FORMAT) => {
            let (name, data) = mkp_from_json(&text)?;
            Ok(ProblemInstance::Mkp { name, data })
        }
        Some(MUCP_FORMAT) => {
            let (name, data) = mucp_from_json(&text)?;
            Ok(ProblemInstance::Mucp { name, data })
        }
        other => bail!(
            "{}: unknown instance format tag {:?}",
            path.display(),
            other
        ),
    }
}

fn write_generated(
    out_dir: &Path,
    name: &str,
    generator: &str,
    format_version: &str,
    seed: u64,
    params: serde_json::Value,
    body: String,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let instance_file = format!("{name}.json");
    std::fs::write(out_dir.join(&instance_file), body)?;
    let manifest = GenManifest {
        format: MANIFEST_FORMAT.into(),
        generator: generator.into(),
        seed,
        params,
        format_version: format_version.into(),
        files: vec![instance_file.clone()],
    };
    std::fs::write(
        out_dir.join(format!("{name}.manifest.json")),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    println!("wrote {}", out_dir.join(instance_file).display());
    Ok(())
}

fn run_gen(cmd: GenCommand) -> Result<()> {
    match cmd {
        GenCommand::Mkp(args) => {
            let data = gen_mkp(
                args.seed,
                args.items,
                args.knapsacks,
                args.item_class,
                args.sym_factor,
                args.profits,
            );
            let name = args.name.unwrap_or_else(|| {
                format!(
                    "mkp_m{}_n{}_s{}",
                    args.items, args.knapsacks, args.seed
                )
            });
            let params = serde_json::json!({
                "items": args.items,
                "knapsacks": args.knapsacks,
                "item_class": args.item_class,
                "sym_factor": format!("1/{}", args.sym_factor),
                "profits": args.profits,
            });
            write_generated(
                &args.out,
                &name,
                "mkp",
                MKP_FORMAT,
                args.seed,
                params,
                mkp_to_json(&name, &data),
            )
        }
        GenCommand::Mucp(args) => {
            if !args.type_sizes.iter().any(|&s| s >= 2) {
                bail!("at least one unit type needs two or more units");
            }
            let data = gen_mucp(args.seed, args.periods, &args.type_sizes);
            let name = args
                .name
                .unwrap_or_else(|| format!("mucp_t{}_s{}", args.periods, args.seed));
            let params = serde_json::json!({
                "periods": args.periods,
                "type_sizes": args.type_sizes,
            });
            write_generated(
                &args.out,
                &name,
                "mucp",
                MUCP_FORMAT,
                args.seed,
                params,
                mucp_to_json(&name, &data),
            )
        }
    }
}

fn run_solve(args: SolveArgs) -> Result<()> {
    let instance = load_instance(&args.instance, args.k)?;
    let setting = args.flags.setting;
    let prepared = prepare(&instance, setting)?;
    let config = SolverConfig {
        setting: setting.to_string(),
        time_limit_s: args
            .flags
            .time_limit
            .unwrap_or_else(|| instance.default_time_limit()),
        node_limit: args.flags.node_limit,
        eps_int: args.flags.eps_int,
        eps_feas: args.flags.eps_feas,
        eps_opt: args.flags.eps_opt,
        random_seed: args.flags.seed,
        ..SolverConfig::default()
    };
    let report = solve(&prepared.program, &prepared.plugins, &config);
    let status = match report.status {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::TimeLimit => "time_limit",
    };
    let objective = report.objective.as_ref().map(|o| o.to_string());
    if args.json {
        println!(
            "{}",
            serde_json::json!({
                "instance": report.instance,
                "setting": report.setting,
                "status": status,
                "objective": objective,
                "nodes": report.nodes,
                "time_s": report.time_s,
                "seed": args.flags.seed,
            })
        );
    } else {
        println!("instance  {}", report.instance);
        println!("setting   {}", report.setting);
        println!("status    {status}");
        println!("objective {}", objective.unwrap_or_else(|| "-".into()));
        println!("nodes     {}", report.nodes);
        println!("time_s    {:.3}", report.time_s);
    }
    Ok(())
}

fn run_bench(args: BenchArgs) -> Result<()> {
    if args.instances.is_empty() {
        bail!("bench needs at least one instance file");
    }
    // unreadable instances become error rows; the run continues
    let mut instances = Vec::new();
    let mut error_rows = Vec::new();
    for path in &args.instances {
        match load_instance(path, args.k) {
            Ok(instance) => instances.push(instance),
            Err(err) => {
                eprintln!("{}: {err:#}", path.display());
                let name = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| path.display().to_string());
                for setting in &args.settings {
                    error_rows.push(actsym::bench::ReportRow {
                        instance: name.clone(),
                        setting: setting.to_string(),
                        status: "error".into(),
                        objective: None,
                        nodes: 0,
                        time_s: 0.0,
                        seed: args.seed,
                    });
                }
            }
        }
    }
    let cfg = RunConfig {
        time_limit_s: args.time_limit,
        node_limit: args.node_limit,
        jobs: args.jobs,
        seed: args.seed,
    };
    let mut rows = run_matrix(&instances, &args.settings, &cfg);
    rows.extend(error_rows);
    let csv = write_csv(&rows);
    match &args.out {
        Some(path) => {
            std::fs::write(path, csv)?;
            println!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn run_summarize(args: SummarizeArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let rows = read_csv(&text)?;
    print!("{}", summarize(&rows, &args.class_bounds));
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen(cmd) => run_gen(cmd),
        Command::Solve(args) => run_solve(args),
        Command::Bench(args) => run_bench(args),
        Command::Summarize(args) => run_summarize(args),
    }
}
