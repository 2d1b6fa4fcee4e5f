//! `worksplit`: derive and check causal models, rank task allocations, predict their risks.

use std::fmt::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use worksplit_core::io::{
    decision_from_json, export_decision, read_goals, read_json, read_model, read_project, read_rules,
    replay_decision, write_model, DecisionRecord, ExportFormat, RecordSettings,
};
use worksplit_core::model::{
    derive_causal_skeleton, validate_characterization, validate_model, Assignment, CausalModel, Finding,
    ProjectCharacterization,
};
use worksplit_core::optimizer::{SimulationSettings, Suggestion, DEFAULT_RUNS};
use worksplit_core::pipeline::suggest;
use worksplit_core::risk::{compare_assignments, predict_risks, RiskReport, SeverityTotals};
use worksplit_core::rules::RuleSet;

#[derive(Parser)]
#[command(name = "worksplit", version, about = "Risk-driven allocation of work across development sites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a causal model skeleton from lessons-learned rules and goal declarations
    DeriveModel {
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        goals: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Check a model, and optionally a project characterization against it
    Validate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        project: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Rank assignments by how often each is optimal over Monte Carlo runs
    Suggest {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, default_value_t = DEFAULT_RUNS)]
        runs: u64,
        /// Root seed; a random one is drawn and printed when omitted
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// Write a decision record here
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Predict the risks of one assignment
    Risks {
        #[command(flatten)]
        inputs: Inputs,
        /// JSON object mapping each task to a site
        #[arg(long)]
        assignment: PathBuf,
        /// Without rules the report is empty
        #[arg(long)]
        rules: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Compare risk totals of the top suggestions in a decision record
    Compare {
        /// Defaults to the model stored in the record
        #[arg(long)]
        model: Option<PathBuf>,
        /// Defaults to the characterization stored in the record
        #[arg(long)]
        project: Option<PathBuf>,
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        from_decision: PathBuf,
        #[arg(long, default_value_t = 5)]
        top: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Convert a decision record to JSON or XML
    Export {
        #[arg(long)]
        decision: PathBuf,
        #[arg(long, value_enum, default_value_t = Export::Json)]
        to: Export,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Re-run a decision record's simulation and check it reproduces
    Replay {
        #[arg(long)]
        decision: PathBuf,
    },
    /// Serve the HTTP API
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, env = "WORKSPLIT_DATA_DIR", default_value = "./worksplit-data")]
        data_dir: PathBuf,
    },
}

#[derive(Args)]
struct Inputs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    project: PathBuf,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Export {
    Json,
    Xml,
}

/// Exit status 1: the inputs were read but something about them is wrong.
#[derive(Debug)]
struct Findings(Vec<Finding>);

impl std::fmt::Display for Findings {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for finding in &self.0 {
            writeln!(f, "{finding}")?;
        }
        Ok(())
    }
}

impl std::error::Error for Findings {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            if let Some(f) = e.downcast_ref::<Findings>() {
                eprint!("{f}");
                return ExitCode::from(1);
            }
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::DeriveModel { rules, goals, output } => derive(&rules, &goals, &output),
        Command::Validate { model, project, out } => validate(&model, project.as_deref(), out.format),
        Command::Suggest {
            inputs,
            runs,
            seed,
            top,
            output,
            out,
        } => run_suggest(&inputs, runs, seed, top, output.as_deref(), out.format),
        Command::Risks {
            inputs,
            assignment,
            rules,
            out,
        } => risks(&inputs, &assignment, rules.as_deref(), out.format),
        Command::Compare {
            model,
            project,
            rules,
            from_decision,
            top,
            out,
        } => compare(model.as_deref(), project.as_deref(), &rules, &from_decision, top, out.format),
        Command::Export { decision, to, output } => export(&decision, to, output.as_deref()),
        Command::Replay { decision } => replay(&decision),
        Command::Serve { port, host, data_dir } => serve(&host, port, data_dir),
    }
}

fn load_model(path: &Path) -> Result<CausalModel> {
    let model = read_model(path)?;
    let findings = validate_model(&model);
    if !findings.is_empty() {
        return Err(Findings(findings).into());
    }
    Ok(model)
}

fn load_inputs(inputs: &Inputs) -> Result<(CausalModel, ProjectCharacterization)> {
    let model = load_model(&inputs.model)?;
    let project = read_project(&inputs.project)?;
    let findings = validate_characterization(&project, &model);
    if !findings.is_empty() {
        return Err(Findings(findings).into());
    }
    Ok((model, project))
}

fn load_record(path: &Path) -> Result<DecisionRecord> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(decision_from_json(&text)?)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn derive(rules: &Path, goals: &Path, output: &Path) -> Result<ExitCode> {
    let rules = read_rules(rules)?;
    let goals = read_goals(goals)?;
    let model = derive_causal_skeleton(&rules, &goals)?;
    for f in validate_model(&model) {
        eprintln!("warning: {f}");
    }
    write_model(output, &model)?;
    println!(
        "wrote {} nodes and {} edges to {}",
        model.nodes.len(),
        model.edges.len(),
        output.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn validate(model: &Path, project: Option<&Path>, format: Format) -> Result<ExitCode> {
    let m = read_model(model)?;
    let mut findings = validate_model(&m);
    if let Some(p) = project {
        if findings.is_empty() {
            findings = validate_characterization(&read_project(p)?, &m);
        }
    }
    if format == Format::Json {
        print_json(&findings)?;
    } else if findings.is_empty() {
        println!("ok");
    } else {
        for f in &findings {
            println!("{f}");
        }
    }
    Ok(if findings.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn suggestion_table(entries: &[Suggestion]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:>4}  {:>7}  {:>6}  {:>10}  assignment", "rank", "freq", "runs", "mean cost");
    for (i, e) in entries.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>4}  {:>6.1}%  {:>6}  {:>10.4}  {}",
            i + 1,
            e.frequency * 100.0,
            e.count,
            e.mean_cost,
            e.assignment
        );
    }
    out
}

fn run_suggest(
    inputs: &Inputs,
    runs: u64,
    seed: Option<u64>,
    top: usize,
    output: Option<&Path>,
    format: Format,
) -> Result<ExitCode> {
    if runs == 0 {
        bail!("--runs must be positive");
    }
    let (model, project) = load_inputs(inputs)?;
    let seed = seed.unwrap_or_else(rand::random);
    let settings = RecordSettings::default();
    let list = suggest(&model, &project, &settings.coupling, &SimulationSettings::new(runs, seed))?;
    if format == Format::Json {
        print_json(&serde_json::json!({
            "runs": list.runs,
            "seed": list.seed,
            "total_entries": list.entries.len(),
            "entries": list.top(top),
        }))?;
    } else {
        println!("seed {seed}, {runs} runs, {} distinct optima", list.entries.len());
        print!("{}", suggestion_table(list.top(top)));
    }
    if let Some(path) = output {
        let record = DecisionRecord::new(model, project, settings, list);
        std::fs::write(path, export_decision(&record, ExportFormat::Json)?)
            .with_context(|| format!("writing {}", path.display()))?;
        eprintln!("decision record written to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn report_text(report: &RiskReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "assignment {}", report.assignment);
    let mut section = |title: String, findings: &[worksplit_core::risk::RiskFinding]| {
        if findings.is_empty() {
            return;
        }
        let _ = writeln!(out, "{title}");
        for f in findings {
            let _ = writeln!(out, "  [{}] {} ({}): {}", f.severity, f.problem, f.rule, f.explanation);
        }
    };
    section("project".to_string(), &report.project);
    for s in &report.sites {
        section(format!("site {}", s.site), &s.findings);
    }
    for i in &report.interfaces {
        section(format!("interface {} ~ {}", i.sites[0], i.sites[1]), &i.findings);
    }
    let _ = writeln!(out, "{}", totals_text(&report.totals));
    out
}

fn totals_text(t: &SeverityTotals) -> String {
    format!("high {}  medium {}  low {}", t.high, t.medium, t.low)
}

fn check_feasible(assignment: &Assignment, project: &ProjectCharacterization) -> Result<()> {
    assignment
        .to_indices(project)
        .map_err(|e| anyhow::anyhow!("INFEASIBLE_ASSIGNMENT: {e}"))?;
    Ok(())
}

fn risks(inputs: &Inputs, assignment: &Path, rules: Option<&Path>, format: Format) -> Result<ExitCode> {
    let (model, project) = load_inputs(inputs)?;
    let assignment: Assignment = read_json(assignment)?;
    check_feasible(&assignment, &project)?;
    let rules = match rules {
        Some(path) => read_rules(path)?,
        None => {
            eprintln!("note: no --rules given, nothing to evaluate");
            RuleSet::default()
        }
    };
    let report = predict_risks(&assignment, &project, &model.factors, &rules, &RecordSettings::default().coupling)?;
    if format == Format::Json {
        print_json(&report)?;
    } else {
        print!("{}", report_text(&report));
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct Compared<'a> {
    rank: usize,
    assignment: &'a Assignment,
    frequency: f64,
    totals: SeverityTotals,
}

fn compare(
    model: Option<&Path>,
    project: Option<&Path>,
    rules: &Path,
    decision: &Path,
    top: usize,
    format: Format,
) -> Result<ExitCode> {
    let record = load_record(decision)?;
    let model = match model {
        Some(p) => load_model(p)?,
        None => record.model.clone(),
    };
    let project = match project {
        Some(p) => read_project(p)?,
        None => record.characterization.clone(),
    };
    let rules = read_rules(rules)?;
    let entries = record.suggestions.top(top);
    let assignments: Vec<Assignment> = entries.iter().map(|e| e.assignment.clone()).collect();
    for a in &assignments {
        check_feasible(a, &project)?;
    }
    let totals = compare_assignments(&assignments, &project, &model.factors, &rules, &record.settings.coupling)?;
    let rows: Vec<Compared> = entries
        .iter()
        .zip(totals)
        .enumerate()
        .map(|(i, (e, totals))| Compared {
            rank: i + 1,
            assignment: &e.assignment,
            frequency: e.frequency,
            totals,
        })
        .collect();
    if format == Format::Json {
        print_json(&rows)?;
    } else {
        println!("{:>4}  {:>7}  {:>4}  {:>6}  {:>3}  assignment", "rank", "freq", "high", "medium", "low");
        for r in &rows {
            println!(
                "{:>4}  {:>6.1}%  {:>4}  {:>6}  {:>3}  {}",
                r.rank,
                r.frequency * 100.0,
                r.totals.high,
                r.totals.medium,
                r.totals.low,
                r.assignment
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn export(decision: &Path, to: Export, output: Option<&Path>) -> Result<ExitCode> {
    let record = load_record(decision)?;
    let format = match to {
        Export::Json => ExportFormat::Json,
        Export::Xml => ExportFormat::Xml,
    };
    let doc = export_decision(&record, format)?;
    match output {
        Some(path) => std::fs::write(path, doc).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{doc}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn replay(decision: &Path) -> Result<ExitCode> {
    let record = load_record(decision)?;
    let replay = replay_decision(&record)?;
    if replay.matches {
        println!("reproduced {} entries from seed {}", replay.suggestions.entries.len(), record.seed);
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("replayed suggestions differ from the recorded ones");
        Ok(ExitCode::from(1))
    }
}

fn serve(host: &str, port: u16, data_dir: PathBuf) -> Result<ExitCode> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let addr: SocketAddr = format!("{host}:{port}").parse().context("bad --host/--port")?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(worksplit_service::serve(addr, data_dir))?;
    Ok(ExitCode::SUCCESS)
}
