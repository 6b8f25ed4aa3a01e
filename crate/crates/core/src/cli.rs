//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when the command itself fails (bad input
//! file, unbalanceable config, bind failure), 2 on usage errors.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::baselines::{AbacEngine, DacAcl, RbacConfig};
use crate::dsl::{self, Dialect, DslError};
use crate::eval::{evaluate, render_report, Decider, Noisy, ReportFormat};
use crate::generator::{
    dataset_stats, export_training, generate, read_jsonl_file, split, write_jsonl, write_jsonl_file, DatasetRecord,
    GeneratorConfig,
};
use crate::oracle::Oracle;
use crate::service::{self, DeciderKind, RemoteDecider, RemoteDeciderConfig, ServiceConfig};

#[derive(Debug, Parser)]
#[command(name = "provac", version, about = "Workflow-aware access control: datasets, baselines, evaluation and a PDP service")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labelled dataset (JSON Lines).
    Generate(GenerateArgs),
    /// Stratified train/validation/test split of a dataset.
    Split(SplitArgs),
    /// Per-action counts, allow rates and violated conditions.
    Stats {
        #[arg(long)]
        input: PathBuf,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Write instruction-tuning examples for a dataset.
    ExportTraining {
        #[arg(long)]
        input: PathBuf,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score deciders against a dataset.
    Eval(EvalArgs),
    /// Policy file tools.
    Policy {
        #[command(subcommand)]
        command: PolicyCommand,
    },
    /// Run the HTTP decision service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// JSON file with generator settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    records: Option<usize>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    invalid_rate: Option<f64>,
    #[arg(long)]
    min_share: Option<f64>,
    #[arg(long)]
    execute_probability: Option<f64>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    train: f64,
    #[arg(long, default_value_t = 0.1)]
    val: f64,
    #[arg(long, default_value_t = 0.8)]
    test: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory receiving train.jsonl, val.jsonl and test.jsonl.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Comma-separated: oracle, dsl, rbac, abac, dac, remote, noisy:<rate>.
    #[arg(long, default_value = "oracle,rbac,abac,dac", value_delimiter = ',')]
    deciders: Vec<String>,
    /// Records to fit the baselines on. Without it, a 10% stratified sample
    /// of the dataset is used for fitting and the rest for scoring.
    #[arg(long)]
    train: Option<PathBuf>,
    /// Seeds the fitting split and noisy deciders.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Policy file for the dsl decider.
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long)]
    remote_endpoint: Option<String>,
    #[arg(long)]
    remote_model: Option<String>,
    #[arg(long)]
    remote_timeout_ms: Option<u64>,
    /// Report file; the extension (txt, json, csv) picks the format.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum PolicyCommand {
    /// Parse and validate a policy file.
    Check {
        file: PathBuf,
        /// `full` for workflow policies, `abac` for the restricted dialect.
        #[arg(long, default_value = "full")]
        dialect: String,
    },
    /// Print a policy file in canonical layout.
    Fmt { file: PathBuf },
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    bind: Option<String>,
    #[arg(long)]
    policy: Option<PathBuf>,
    /// oracle, dsl or remote.
    #[arg(long)]
    decider: Option<String>,
    #[arg(long)]
    audit_log: Option<PathBuf>,
}

/// Domain failure, reported with exit code 1.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct Failure(String);

fn fail(e: impl std::fmt::Display) -> Failure {
    Failure(e.to_string())
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run(args: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Generate(a) => cmd_generate(a),
        Command::Split(a) => cmd_split(a),
        Command::Stats { input, json } => {
            let stats = dataset_stats(&load(&input)?);
            if json {
                println!("{}", serde_json::to_string_pretty(&stats).map_err(fail)?);
            } else {
                print!("{stats}");
            }
            Ok(())
        }
        Command::ExportTraining { input, out } => {
            let records = load(&input)?;
            with_output(out.as_deref(), |w| export_training(&records, w))
        }
        Command::Eval(a) => cmd_eval(a),
        Command::Policy { command } => cmd_policy(command),
        Command::Serve(a) => cmd_serve(a),
    }
}

fn load(path: &Path) -> Result<Vec<DatasetRecord>, Failure> {
    read_jsonl_file(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), Failure> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| Failure(format!("{}: {e}", p.display())))?;
            let mut w = BufWriter::new(file);
            f(&mut w).and_then(|_| w.flush()).map_err(fail)
        }
        None => f(&mut std::io::stdout().lock()).map_err(fail),
    }
}

fn cmd_generate(a: GenerateArgs) -> Result<(), Failure> {
    let mut config = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure(format!("{}: {e}", p.display())))?
        }
        None => GeneratorConfig::default(),
    };
    config.seed = a.seed.unwrap_or(config.seed);
    config.num_records = a.records.unwrap_or(config.num_records);
    config.num_users = a.users.unwrap_or(config.num_users);
    config.invalid_request_rate = a.invalid_rate.unwrap_or(config.invalid_request_rate);
    config.per_action_min_share = a.min_share.unwrap_or(config.per_action_min_share);
    config.execute_probability = a.execute_probability.unwrap_or(config.execute_probability);
    let records = generate(&config).map_err(fail)?;
    with_output(a.out.as_deref(), |w| write_jsonl(&records, w))
}

fn cmd_split(a: SplitArgs) -> Result<(), Failure> {
    let records = load(&a.input)?;
    let parts = split(&records, a.train, a.val, a.test, a.seed).map_err(fail)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| Failure(format!("{}: {e}", a.out_dir.display())))?;
    for (name, part) in [("train", &parts.train), ("val", &parts.val), ("test", &parts.test)] {
        let path = a.out_dir.join(format!("{name}.jsonl"));
        write_jsonl_file(&path, part).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
        eprintln!("{name}: {} records -> {}", part.len(), path.display());
    }
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<(), Failure> {
    let records = load(&a.dataset)?;
    let (train, scored) = match &a.train {
        Some(p) => (load(p)?, records),
        None => {
            let parts = split(&records, 0.1, 0.0, 0.9, a.seed).map_err(fail)?;
            (parts.train, parts.test)
        }
    };
    let format = match &a.out {
        Some(p) => ReportFormat::from_path(p).map_err(fail)?,
        None => ReportFormat::Text,
    };

    let mut deciders: Vec<Box<dyn Decider>> = Vec::new();
    let mut remote: Option<std::sync::Arc<RemoteDecider>> = None;
    for name in a.deciders.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        let d: Box<dyn Decider> = match name {
            "oracle" => Box::new(Oracle::builtin()),
            "dsl" => Box::new(match &a.policy {
                Some(p) => dsl::load_file(p, Dialect::Full).map_err(fail)?,
                None => dsl::classroom(),
            }),
            "rbac" => Box::new(RbacConfig::fit_majority(&train).map_err(fail)?),
            "abac" => Box::new(AbacEngine::reference().fit(&train).map_err(fail)?),
            "dac" => Box::new(DacAcl::fit_majority(&train).map_err(fail)?),
            "remote" => {
                let endpoint = a
                    .remote_endpoint
                    .clone()
                    .ok_or_else(|| Failure("the remote decider needs --remote-endpoint".into()))?;
                let mut cfg = RemoteDeciderConfig::with_endpoint(endpoint);
                if let Some(m) = &a.remote_model {
                    cfg.model = m.clone();
                }
                if let Some(t) = a.remote_timeout_ms {
                    cfg.timeout_ms = t;
                }
                let r = std::sync::Arc::new(RemoteDecider::new(cfg).map_err(fail)?);
                remote = Some(r.clone());
                Box::new(r)
            }
            other => match other.strip_prefix("noisy:") {
                Some(rate) => {
                    let eps: f64 = rate.parse().map_err(|_| Failure(format!("bad noise rate in '{other}'")))?;
                    Box::new(Noisy::new(Oracle::builtin(), eps, a.seed).map_err(fail)?)
                }
                None => return Err(Failure(format!("unknown decider '{other}'"))),
            },
        };
        deciders.push(d);
    }
    if deciders.is_empty() {
        return Err(Failure("no deciders selected".into()));
    }
    let mut reports = Vec::with_capacity(deciders.len());
    for d in &deciders {
        reports.push(evaluate(d, &scored).map_err(fail)?);
    }
    if let Some(r) = remote {
        eprintln!("remote: {:?}", r.stats());
    }
    let text = render_report(&reports, format);
    with_output(a.out.as_deref(), |w| w.write_all(text.as_bytes()))
}

fn cmd_policy(command: PolicyCommand) -> Result<(), Failure> {
    let report = |file: &Path, e: DslError| {
        let mut msg = format!("{} is invalid", file.display());
        let diags = e.diagnostics();
        if diags.is_empty() {
            msg.push_str(&format!(": {e}"));
        }
        for d in diags {
            msg.push_str(&format!("\n  {}:{}:{}: {}", file.display(), d.line, d.column, d.message));
        }
        Failure(msg)
    };
    match command {
        PolicyCommand::Check { file, dialect } => {
            let dialect = match dialect.as_str() {
                "full" => Dialect::Full,
                "abac" => Dialect::Abac,
                other => return Err(Failure(format!("unknown dialect '{other}' (expected full or abac)"))),
            };
            let source = dsl::read_source(&file).map_err(fail)?;
            let doc = dsl::check_source(&source, dialect).map_err(|e| report(&file, e))?;
            println!("{}: ok, {} policies", file.display(), doc.policies.len());
            for p in &doc.policies {
                let ids: Vec<&str> = p.requirements.iter().map(|r| r.condition_id.as_str()).collect();
                println!("  {} on {}: {}", p.id, p.action, ids.join(", "));
            }
            Ok(())
        }
        PolicyCommand::Fmt { file } => {
            let source = dsl::read_source(&file).map_err(fail)?;
            let doc = dsl::parse_source(&source).map_err(|e| report(&file, e))?;
            print!("{}", dsl::pretty_print(&doc));
            Ok(())
        }
    }
}

fn cmd_serve(a: ServeArgs) -> Result<(), Failure> {
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .with_ansi(std::io::IsTerminal::is_terminal(&std::io::stderr()))
        .try_init();
    let mut config = ServiceConfig::default();
    if let Some(p) = &a.config {
        config.apply_file(p).map_err(fail)?;
    }
    config.apply_env(std::env::vars()).map_err(fail)?;
    if let Some(b) = a.bind {
        config.bind = b;
    }
    if let Some(p) = a.policy {
        config.policy_file = Some(p);
    }
    if let Some(d) = a.decider {
        config.decider = d.parse::<DeciderKind>().map_err(Failure)?;
    }
    if let Some(p) = a.audit_log {
        config.audit_log = Some(p);
    }
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(fail)?;
    rt.block_on(service::serve(config)).map_err(fail)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        std::iter::once("provac").chain(s.split_whitespace()).map(String::from).collect()
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(&argv("")), 2);
        assert_eq!(run(&argv("teleport")), 2);
        assert_eq!(run(&argv("generate --records many")), 2);
    }

    #[test]
    fn domain_errors_exit_one() {
        assert_eq!(run(&argv("stats --input /nonexistent/data.jsonl")), 1);
        assert_eq!(run(&argv("generate --records 10 --min-share 0.5")), 1);
    }
}
