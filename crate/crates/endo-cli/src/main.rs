//! `endo` — evaluate, explain and sanity-check endorsement networks.

mod output;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use endo::contradiction;
use endo::explanation::explain;
use endo::netfmt;
use endo::{
    evaluate, evaluate_incremental, EvalError, EvaluationReport, Intuition, Network, NodeId,
    RelaxationConfig,
};
use output::{
    render_check, render_diagnostics, render_error, render_eval, render_explain, render_whatif,
    Format, WhatifOutcome,
};

// exit codes, also part of the documented interface
const EXIT_OK: u8 = 0;
const EXIT_BAD_ARGUMENT: u8 = 64;
const EXIT_PARSE: u8 = 65;
const EXIT_IO: u8 = 66;
const EXIT_EVAL: u8 = 69;
const EXIT_NON_CONVERGENCE: u8 = 70;
const EXIT_CONTRADICTIONS: u8 = 75;

#[derive(Parser)]
#[command(
    name = "endo",
    version,
    about = "Belief and certainty propagation over endorsement networks",
    after_help = "Exit codes: 0 ok/clean, 2 usage, 64 bad node or assignment, \
                  65 parse/validation failure, 66 unreadable input, 69 evaluation error, \
                  70 non-convergence, 75 contradictions found."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RelaxArgs {
    /// Damping weight of each relaxation sweep, in (0, 1]
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Convergence tolerance on the largest value change per sweep
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// Sweep budget per cyclic component
    #[arg(long = "max-iters", default_value_t = 1000)]
    max_iters: u32,
}

impl RelaxArgs {
    fn config(&self) -> Result<RelaxationConfig, String> {
        RelaxationConfig::new(self.alpha, self.epsilon, self.max_iters).map_err(|e| e.to_string())
    }
}

#[derive(Args)]
struct FormatArg {
    /// Output format: aligned text or a versioned JSON document
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every node and print beliefs, certainties and supports
    Eval {
        file: PathBuf,
        #[command(flatten)]
        relax: RelaxArgs,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Break one node's value into weighted reasons for and against
    Explain {
        file: PathBuf,
        node: String,
        #[command(flatten)]
        relax: RelaxArgs,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Detect rational and intuitive contradictions
    Check {
        file: PathBuf,
        /// Strength at which evidence counts as compelling, in (0, 1]
        #[arg(long, default_value_t = contradiction::DEFAULT_TAU)]
        tau: f64,
        #[command(flatten)]
        relax: RelaxArgs,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Preview `node=belief,certainty` intuition overrides without touching the file
    Whatif {
        file: PathBuf,
        /// Overrides, e.g. `confidence_in_model=0.9,1.0`
        #[arg(required = true)]
        assignments: Vec<String>,
        #[arg(long, default_value_t = contradiction::DEFAULT_TAU)]
        tau: f64,
        #[command(flatten)]
        relax: RelaxArgs,
        #[command(flatten)]
        format: FormatArg,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Eval { file, relax, format } => cmd_eval(&file, &relax, format.format),
        Command::Explain {
            file,
            node,
            relax,
            format,
        } => cmd_explain(&file, &node, &relax, format.format),
        Command::Check {
            file,
            tau,
            relax,
            format,
        } => cmd_check(&file, tau, &relax, format.format),
        Command::Whatif {
            file,
            assignments,
            tau,
            relax,
            format,
        } => cmd_whatif(&file, &assignments, tau, &relax, format.format),
    };
    ExitCode::from(code)
}

/// Read and parse the network, printing diagnostics on failure.
fn load(path: &Path, command: &'static str, format: Format) -> Result<Network, u8> {
    let text = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            if let Some(doc) = render_error(command, &format!("cannot read file: {e}"), format) {
                println!("{doc}");
            }
            return Err(EXIT_IO);
        }
    };
    match netfmt::parse(&text) {
        Ok(network) => Ok(network),
        Err(diagnostics) => {
            for d in &diagnostics {
                eprintln!("{}: {d}", path.display());
            }
            if let Some(doc) = render_diagnostics(command, &diagnostics, format) {
                println!("{doc}");
            }
            Err(EXIT_PARSE)
        }
    }
}

fn run_eval(
    network: &Network,
    relax: &RelaxArgs,
    command: &'static str,
    format: Format,
) -> Result<(EvaluationReport, RelaxationConfig), u8> {
    let config = match relax.config() {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return Err(EXIT_BAD_ARGUMENT);
        }
    };
    match evaluate(network, &config) {
        Ok(report) => Ok((report, config)),
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(doc) = render_error(command, &e.to_string(), format) {
                println!("{doc}");
            }
            Err(EXIT_EVAL)
        }
    }
}

fn cmd_eval(path: &Path, relax: &RelaxArgs, format: Format) -> u8 {
    let network = match load(path, "eval", format) {
        Ok(n) => n,
        Err(code) => return code,
    };
    let (report, _) = match run_eval(&network, relax, "eval", format) {
        Ok(r) => r,
        Err(code) => return code,
    };
    print!("{}", ensure_newline(render_eval(&network, &report, format)));
    if report.converged() {
        EXIT_OK
    } else {
        EXIT_NON_CONVERGENCE
    }
}

fn cmd_explain(path: &Path, node: &str, relax: &RelaxArgs, format: Format) -> u8 {
    let network = match load(path, "explain", format) {
        Ok(n) => n,
        Err(code) => return code,
    };
    let id = match resolve_node(&network, node, "explain", format) {
        Ok(id) => id,
        Err(code) => return code,
    };
    let (report, _) = match run_eval(&network, relax, "explain", format) {
        Ok(r) => r,
        Err(code) => return code,
    };
    match explain(&id, report.state(), &network) {
        Ok(explanation) => {
            print!("{}", ensure_newline(render_explain(&explanation, format)));
            if report.converged() {
                EXIT_OK
            } else {
                EXIT_NON_CONVERGENCE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(doc) = render_error("explain", &e.to_string(), format) {
                println!("{doc}");
            }
            EXIT_EVAL
        }
    }
}

fn cmd_check(path: &Path, tau: f64, relax: &RelaxArgs, format: Format) -> u8 {
    if !(tau > 0.0 && tau <= 1.0) {
        eprintln!("error: tau must be within (0, 1], got {tau}");
        return EXIT_BAD_ARGUMENT;
    }
    let network = match load(path, "check", format) {
        Ok(n) => n,
        Err(code) => return code,
    };
    let (report, _) = match run_eval(&network, relax, "check", format) {
        Ok(r) => r,
        Err(code) => return code,
    };
    let contradictions = contradiction::detect(report.state(), &network, tau);
    print!(
        "{}",
        ensure_newline(render_check(
            &contradictions,
            tau,
            report.converged(),
            format
        ))
    );
    if !report.converged() {
        EXIT_NON_CONVERGENCE
    } else if contradictions.is_clean() {
        EXIT_OK
    } else {
        EXIT_CONTRADICTIONS
    }
}

fn cmd_whatif(
    path: &Path,
    raw_assignments: &[String],
    tau: f64,
    relax: &RelaxArgs,
    format: Format,
) -> u8 {
    if !(tau > 0.0 && tau <= 1.0) {
        eprintln!("error: tau must be within (0, 1], got {tau}");
        return EXIT_BAD_ARGUMENT;
    }
    let network = match load(path, "whatif", format) {
        Ok(n) => n,
        Err(code) => return code,
    };

    let mut assignments: Vec<(NodeId, f64, f64)> = Vec::new();
    for raw in raw_assignments {
        match parse_assignment(&network, raw) {
            Ok(a) => assignments.push(a),
            Err(msg) => {
                eprintln!("error: {msg}");
                if let Some(doc) = render_error("whatif", &msg, format) {
                    println!("{doc}");
                }
                return EXIT_BAD_ARGUMENT;
            }
        }
    }

    let (baseline, config) = match run_eval(&network, relax, "whatif", format) {
        Ok(r) => r,
        Err(code) => return code,
    };

    // overrides are transient: the file's network stays authoritative
    let mut modified = network.clone();
    for (id, belief, certainty) in &assignments {
        let intuition = Intuition::new(*belief, *certainty).expect("validated above");
        modified = modified
            .with_intuition(id.as_str(), Some(intuition))
            .expect("node resolved above");
    }
    let changed: BTreeSet<NodeId> = assignments.iter().map(|(id, _, _)| id.clone()).collect();
    let report = match evaluate_incremental(&modified, baseline.state(), &changed, &config) {
        Ok(r) => r,
        Err(e @ (EvalError::Undefined(_) | EvalError::MissingValue(_))) => {
            eprintln!("error: {e}");
            if let Some(doc) = render_error("whatif", &e.to_string(), format) {
                println!("{doc}");
            }
            return EXIT_EVAL;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_EVAL;
        }
    };

    let mut changes = Vec::new();
    for id in modified.node_ids() {
        let before = baseline.state().rationale(id).expect("baseline covers");
        let after = report.state().rationale(id).expect("incremental covers");
        if before != after {
            changes.push((id.clone(), before, after));
        }
    }

    let before_flags = contradiction::detect(baseline.state(), &network, tau);
    let after_flags = contradiction::detect(report.state(), &modified, tau);
    let known_rational: BTreeSet<&NodeId> = before_flags.rational.iter().map(|e| &e.node).collect();
    let known_intuitive: BTreeSet<&NodeId> =
        before_flags.intuitive.iter().map(|e| &e.node).collect();
    let new_rational = after_flags
        .rational
        .iter()
        .filter(|e| !known_rational.contains(&e.node))
        .cloned()
        .collect::<Vec<_>>();
    let new_intuitive = after_flags
        .intuitive
        .iter()
        .filter(|e| !known_intuitive.contains(&e.node))
        .cloned()
        .collect::<Vec<_>>();

    let outcome = WhatifOutcome {
        assignments: &assignments,
        changes,
        report: &report,
        new_rational,
        new_intuitive,
    };
    print!("{}", ensure_newline(render_whatif(&outcome, format)));
    if report.converged() && baseline.converged() {
        EXIT_OK
    } else {
        EXIT_NON_CONVERGENCE
    }
}

fn resolve_node(
    network: &Network,
    name: &str,
    command: &'static str,
    format: Format,
) -> Result<NodeId, u8> {
    if network.node(name).is_some() {
        return Ok(name.parse().expect("existing id is valid"));
    }
    let mut message = format!("unknown node `{name}`");
    let suggestions = near_misses(network, name);
    if !suggestions.is_empty() {
        message.push_str(&format!("; did you mean {}?", suggestions.join(", ")));
    }
    eprintln!("error: {message}");
    if let Some(doc) = render_error(command, &message, format) {
        println!("{doc}");
    }
    Err(EXIT_BAD_ARGUMENT)
}

fn near_misses(network: &Network, name: &str) -> Vec<String> {
    let lower = name.to_ascii_lowercase();
    let mut scored: Vec<(usize, String)> = network
        .node_ids()
        .filter_map(|id| {
            let candidate = id.as_str().to_ascii_lowercase();
            let d = levenshtein(&lower, &candidate);
            let close = d <= 2 || candidate.starts_with(&lower) || lower.starts_with(&candidate);
            close.then(|| (d, format!("`{id}`")))
        })
        .collect();
    scored.sort();
    scored.into_iter().take(5).map(|(_, s)| s).collect()
}

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut previous = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let substitution = previous + usize::from(ca != cb);
            previous = row[j + 1];
            row[j + 1] = substitution.min(previous + 1).min(row[j] + 1);
        }
    }
    row[b.len()]
}

/// `node=belief,certainty`
fn parse_assignment(network: &Network, raw: &str) -> Result<(NodeId, f64, f64), String> {
    let (name, values) = raw
        .split_once('=')
        .ok_or_else(|| format!("malformed assignment `{raw}`; expected `node=belief,certainty`"))?;
    let (belief_text, certainty_text) = values
        .split_once(',')
        .ok_or_else(|| format!("malformed assignment `{raw}`; expected `node=belief,certainty`"))?;
    if network.node(name.trim()).is_none() {
        return Err(format!("unknown node `{}`", name.trim()));
    }
    let belief: f64 = belief_text
        .trim()
        .parse()
        .map_err(|_| format!("malformed belief `{belief_text}`"))?;
    let certainty: f64 = certainty_text
        .trim()
        .parse()
        .map_err(|_| format!("malformed certainty `{certainty_text}`"))?;
    Intuition::new(belief, certainty).map_err(|e| e.to_string())?;
    Ok((name.trim().parse().expect("checked above"), belief, certainty))
}

fn ensure_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}
