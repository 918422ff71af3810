//! Command-line front end: catalog listing, sampling, density estimates,
//! property tests, the experiment registry and report replay.
//!
//! Reports go to stdout as JSON. Exit codes: 0 pass or estimate, 1 reject
//! or failed verdict, 2 usage or input error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use theonlab::harness::{
    execute, parse_count, replay, resolve_seed, Invocation, Params, Report, COMMANDS, EXPERIMENTS,
};
use theonlab::theon::{CatalogEntry, INTERPRETATIONS, THEONS, THEORIES};
use theonlab::Error;

#[derive(Parser)]
#[command(
    name = "theonlab",
    version,
    about = "Executable theons and quasirandomness falsifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Monte Carlo budget, e.g. 1000000 or 2e7.
    #[arg(long)]
    samples: Option<String>,
    /// Master seed; falls back to THEONLAB_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Compact single-line JSON.
    #[arg(long)]
    json: bool,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Built-in theories, theons, interpretations, commands and experiments.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Realize one model on [n].
    Sample {
        #[arg(long)]
        theon: String,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Labeled and unlabeled density of a model.
    Density {
        #[arg(long)]
        theon: String,
        /// Model file.
        #[arg(long, conflicts_with = "model_text")]
        model: Option<PathBuf>,
        /// Model given inline, lines separated by `\n` or `|`.
        #[arg(long)]
        model_text: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Run one property test.
    Test {
        /// independence, rank, weak-independence, locality, clique-disc, disc or coupleability.
        #[arg(long)]
        property: String,
        #[arg(long)]
        theon: String,
        #[arg(long)]
        level: Option<usize>,
        /// Realized model size for weak independence.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        projections: Option<usize>,
        /// Locality sets, 1-based: `1,2;2,3`.
        #[arg(long)]
        sets: Option<String>,
        /// Locality mode: labeled or symmetric.
        #[arg(long)]
        mode: Option<String>,
        /// Disc edge predicate.
        #[arg(long)]
        edge: Option<String>,
        /// Disc events, 1-based: `P:1,2;Q:1`.
        #[arg(long)]
        events: Option<String>,
        #[arg(long)]
        probes: Option<usize>,
        #[arg(long)]
        inner_samples: Option<usize>,
        #[arg(long)]
        max_size: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Run a registered experiment.
    Run {
        experiment: String,
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        theon: Option<String>,
        #[arg(long)]
        max_size: Option<usize>,
        #[arg(long)]
        max_level: Option<usize>,
        #[arg(long)]
        probe_samples: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Rerun a stored report and compare every field.
    Replay {
        report: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        json: bool,
    },
}

struct ParamBuilder {
    inner: Params,
}

impl ParamBuilder {
    fn new() -> Self {
        ParamBuilder {
            inner: Params::new(),
        }
    }

    fn put<T: Into<Value>>(&mut self, key: &str, v: Option<T>) {
        if let Some(v) = v {
            self.inner.insert(key.to_string(), v.into());
        }
    }
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))
}

/// Theon files are embedded in the report so replay needs no files.
fn theon_value(text: &str) -> Result<Value, Error> {
    let path = Path::new(text);
    if text.ends_with(".json") || path.is_file() {
        let body = read(path)?;
        return serde_json::from_str(&body).map_err(|e| {
            Error::Io(format!(
                "{}: invalid JSON at line {}, column {}",
                text,
                e.line(),
                e.column()
            ))
        });
    }
    Ok(Value::from(text))
}

fn print_catalog(json: bool) {
    let sections: [(&str, &[CatalogEntry]); 5] = [
        ("theories", THEORIES),
        ("theons", THEONS),
        ("interpretations", INTERPRETATIONS),
        ("commands", COMMANDS),
        ("experiments", EXPERIMENTS),
    ];
    if json {
        let v: serde_json::Map<String, Value> = sections
            .iter()
            .map(|(k, e)| {
                (
                    k.to_string(),
                    serde_json::to_value(e).expect("entries serialize"),
                )
            })
            .collect();
        println!("{}", Value::Object(v));
        return;
    }
    for (title, entries) in sections {
        println!("{title}:");
        for e in entries {
            let sig = if e.params.is_empty() {
                String::new()
            } else {
                format!(" [{}]", e.params)
            };
            println!("  {}{sig}  {}", e.name, e.about);
        }
    }
}

fn emit(report: &Report, common_json: bool, out: Option<&Path>) -> Result<(), Error> {
    let v = report.to_json();
    let text = if common_json {
        v.to_string()
    } else {
        serde_json::to_string_pretty(&v).expect("reports serialize")
    };
    println!("{text}");
    if let Some(path) = out {
        std::fs::write(path, format!("{text}\n"))
            .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    let failed: Vec<&str> = report
        .checks
        .iter()
        .filter(|c| !c.ok)
        .map(|c| c.name.as_str())
        .collect();
    if failed.is_empty() {
        eprintln!("{}: {:?}", report.command, report.decision);
    } else {
        eprintln!(
            "{}: {:?} (failed checks: {})",
            report.command,
            report.decision,
            failed.join(", ")
        );
    }
    Ok(())
}

fn invoke(command: &str, params: Params, common: &Common) -> Result<ExitCode, Error> {
    let seed = resolve_seed(common.seed)?;
    let n = common.samples.as_deref().map(parse_count).transpose()?;
    if n == Some(0) {
        return Err(Error::InvalidParam {
            name: "samples".into(),
            msg: "need at least one sample".into(),
        });
    }
    let inv = Invocation::new(command, params, seed).with_samples(n);
    let report = execute(&inv, common.threads)?;
    emit(&report, common.json, common.out.as_deref())?;
    Ok(ExitCode::from(report.decision.exit_code() as u8))
}

fn dispatch(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::List { json } => {
            print_catalog(json);
            Ok(ExitCode::SUCCESS)
        }
        Command::Sample { theon, n, common } => {
            let mut p = ParamBuilder::new();
            p.put("theon", Some(theon_value(&theon)?));
            p.put("n", Some(n));
            invoke("sample", p.inner, &common)
        }
        Command::Density {
            theon,
            model,
            model_text,
            common,
        } => {
            let text = match (model, model_text) {
                (Some(path), _) => read(&path)?,
                (None, Some(t)) => t.replace('|', "\n").replace("\\n", "\n"),
                (None, None) => {
                    return Err(Error::InvalidParam {
                        name: "model".into(),
                        msg: "give --model FILE or --model-text TEXT".into(),
                    })
                }
            };
            let mut p = ParamBuilder::new();
            p.put("theon", Some(theon_value(&theon)?));
            p.put("model", Some(text));
            invoke("density", p.inner, &common)
        }
        Command::Test {
            property,
            theon,
            level,
            m,
            bins,
            projections,
            sets,
            mode,
            edge,
            events,
            probes,
            inner_samples,
            max_size,
            alpha,
            common,
        } => {
            let mut p = ParamBuilder::new();
            p.put("property", Some(property));
            p.put("theon", Some(theon_value(&theon)?));
            p.put("level", level);
            p.put("m", m);
            p.put("bins", bins);
            p.put("projections", projections);
            p.put("sets", sets);
            p.put("mode", mode);
            p.put("edge", edge);
            p.put("events", events);
            p.put("probes", probes);
            p.put("inner-samples", inner_samples);
            p.put("max-size", max_size);
            p.put("alpha", alpha);
            invoke("test", p.inner, &common)
        }
        Command::Run {
            experiment,
            ell,
            k,
            p: prob,
            theon,
            max_size,
            max_level,
            probe_samples,
            alpha,
            common,
        } => {
            let mut p = ParamBuilder::new();
            p.put("ell", ell);
            p.put("k", k);
            p.put("p", prob);
            p.put("theon", theon);
            p.put("max-size", max_size);
            p.put("max-level", max_level);
            p.put(
                "probe-samples",
                probe_samples.as_deref().map(parse_count).transpose()?,
            );
            p.put("alpha", alpha);
            invoke(&format!("run:{experiment}"), p.inner, &common)
        }
        Command::Replay {
            report,
            threads,
            json,
        } => {
            let body = read(&report)?;
            let stored: Report = serde_json::from_str(&body).map_err(|e| {
                Error::Io(format!(
                    "{}: not a report (line {}, column {}): {e}",
                    report.display(),
                    e.line(),
                    e.column()
                ))
            })?;
            let (fresh, same) = replay(&stored, threads)?;
            let v = json!({ "identical": same, "report": fresh.to_json() });
            if json {
                println!("{v}");
            } else {
                println!("{}", serde_json::to_string_pretty(&v).expect("serializes"));
            }
            eprintln!("replay: {}", if same { "identical" } else { "differs" });
            Ok(if same {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
