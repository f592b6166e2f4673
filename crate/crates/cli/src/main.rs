//! Command-line front end: builds a model from a knowledge base, records
//! observations against it, reports the conflict state, and revises the
//! model when the evidence and the model fall out.
//!
//! All state lives in a session directory of plain text artifacts, and every
//! successful command (except `session`) appends its own output to the
//! transcript, so a session replays from the log alone.

mod session;

use clap::{Parser, Subcommand, ValueEnum};
use doxa_core::inference::{parse_evidence_text, posterior, Evidence};
use doxa_core::monitor::{surprise_increments, surprise_index};
use doxa_core::network::{compile, to_dot, to_net_text, BayesNet};
use doxa_core::revision::{revise_once, RevisionConfig};
use doxa_core::schema_kb::{activate_backward, activate_forward, parse_kb};
use doxa_core::{
    frames_from_activation, merge_diagnostic_frames, Direction, PropId,
    DEFAULT_ACCEPTANCE_RATIO, DEFAULT_CONFLICT_THRESHOLD, DEFAULT_MAX_CANDIDATES,
};
use session::{CliError, Result, Session};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Exit code of a successful command whose final state still carries a
/// triggered conflict.
const EXIT_CONFLICT: i32 = 20;

#[derive(Parser)]
#[command(
    name = "doxa",
    version,
    about = "Builds belief networks from argued schemata, watches the evidence for conflict, and revises the model when the two fall out"
)]
struct Cli {
    /// Session directory holding the model artifacts.
    #[arg(long, global = true, default_value = "doxa-session")]
    session: PathBuf,

    /// Surprise index below which the evidence counts as a conflict.
    #[arg(long, global = true, default_value_t = DEFAULT_CONFLICT_THRESHOLD)]
    threshold: f64,

    /// Likelihood ratio a revision candidate must exceed to be adopted.
    #[arg(long, global = true, default_value_t = DEFAULT_ACCEPTANCE_RATIO)]
    acceptance_ratio: f64,

    /// Most revision candidates examined in one pass.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_CANDIDATES)]
    max_candidates: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a model from a knowledge base by arguing claims or grounds.
    Build {
        /// Knowledge base file.
        kb: PathBuf,
        /// Propositions to argue backward from, comma separated.
        #[arg(long, value_delimiter = ',')]
        claim: Vec<String>,
        /// Propositions to argue forward from, comma separated.
        #[arg(long, value_delimiter = ',')]
        grounds: Vec<String>,
    },
    /// Record observations, then report posteriors and the conflict state.
    Assert {
        /// Evidence file of `proposition = true|false` lines.
        evidence: PathBuf,
    },
    /// Reprint posteriors and the conflict state of the session.
    Report {
        /// Also score each observation against the ones before it.
        #[arg(long)]
        per_increment: bool,
    },
    /// Diagnose a conflict and adopt the first acceptable revision.
    Revise {
        /// Diagnose even without a triggered conflict.
        #[arg(long)]
        force: bool,
    },
    /// Write the network to a file.
    Export {
        #[arg(long, value_enum)]
        format: ExportFormat,
        /// Output file.
        path: PathBuf,
    },
    /// Summarize what the session holds.
    Session,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExportFormat {
    Dot,
    Net,
}

impl ExportFormat {
    fn as_str(self) -> &'static str {
        match self {
            ExportFormat::Dot => "dot",
            ExportFormat::Net => "net",
        }
    }
}

struct Outcome {
    stdout: String,
    code: i32,
    /// Whether the command lands in the session transcript.
    record: bool,
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            if outcome.record {
                if let Err(e) =
                    Session::append_transcript(&cli.session, &canonical_command(&cli), &outcome.stdout)
                {
                    eprintln!("error: {e}");
                    std::process::exit(e.exit_code());
                }
            }
            std::process::exit(outcome.code);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Build { kb, claim, grounds } => cmd_build(cli, kb, claim, grounds),
        Command::Assert { evidence } => cmd_assert(cli, evidence),
        Command::Report { per_increment } => cmd_report(cli, *per_increment),
        Command::Revise { force } => cmd_revise(cli, *force),
        Command::Export { format, path } => cmd_export(cli, *format, path),
        Command::Session => cmd_session(cli),
    }
}

/// The command as it would be typed, minus `--session`: the transcript
/// should replay against any session directory.
fn canonical_command(cli: &Cli) -> String {
    let mut s = String::from("doxa");
    match &cli.command {
        Command::Build { kb, claim, grounds } => {
            let _ = write!(s, " build {}", kb.display());
            if !claim.is_empty() {
                let _ = write!(s, " --claim {}", claim.join(","));
            }
            if !grounds.is_empty() {
                let _ = write!(s, " --grounds {}", grounds.join(","));
            }
        }
        Command::Assert { evidence } => {
            let _ = write!(s, " assert {}", evidence.display());
        }
        Command::Report { per_increment } => {
            s.push_str(" report");
            if *per_increment {
                s.push_str(" --per-increment");
            }
        }
        Command::Revise { force } => {
            s.push_str(" revise");
            if *force {
                s.push_str(" --force");
            }
        }
        Command::Export { format, path } => {
            let _ = write!(s, " export --format {} {}", format.as_str(), path.display());
        }
        Command::Session => s.push_str(" session"),
    }
    if cli.threshold != DEFAULT_CONFLICT_THRESHOLD {
        let _ = write!(s, " --threshold {}", cli.threshold);
    }
    if cli.acceptance_ratio != DEFAULT_ACCEPTANCE_RATIO {
        let _ = write!(s, " --acceptance-ratio {}", cli.acceptance_ratio);
    }
    if cli.max_candidates != DEFAULT_MAX_CANDIDATES {
        let _ = write!(s, " --max-candidates {}", cli.max_candidates);
    }
    s
}

fn plural(n: usize, one: &str, many: &str) -> String {
    format!("{n} {}", if n == 1 { one } else { many })
}

fn direction_str(d: Direction) -> &'static str {
    match d {
        Direction::Causal => "causal",
        Direction::Diagnostic => "diagnostic",
    }
}

fn model_line(net: &BayesNet) -> String {
    format!(
        "model: {}, {}, {}",
        plural(net.len(), "node", "nodes"),
        plural(net.arcs().len(), "arc", "arcs"),
        plural(net.table_entry_count(), "table entry", "table entries")
    )
}

/// Posterior lines for every unobserved node, then the conflict block.
/// Returns the text and whether the conflict is triggered.
fn conflict_block(
    net: &BayesNet,
    evidence: &Evidence,
    threshold: f64,
    per_increment: bool,
) -> Result<(String, bool)> {
    let mut out = String::new();
    for node in net.nodes() {
        if !evidence.contains(&node.id) {
            let p = posterior(net, &node.id, evidence)?;
            let _ = writeln!(out, "posterior {} : {}", node.id, p);
        }
    }
    if evidence.is_empty() {
        out.push_str("conflict none (no evidence)\n");
        return Ok((out, false));
    }
    if per_increment {
        for inc in surprise_increments(net, evidence)? {
            let _ = writeln!(
                out,
                "increment {} = {} : conditional {} lr-star {}",
                inc.node, inc.value, inc.conditional, inc.lr_star
            );
        }
    }
    let report = surprise_index(net, evidence, threshold)?;
    let _ = writeln!(out, "evidence-probability {}", report.evidence_probability);
    let _ = writeln!(
        out,
        "expected-evidence-probability {}",
        report.expected_evidence_probability
    );
    let _ = writeln!(out, "lr-star {}", report.lr_star);
    let _ = writeln!(out, "threshold {}", report.threshold);
    let _ = writeln!(out, "conflict {}", if report.triggered { "TRIGGERED" } else { "none" });
    Ok((out, report.triggered))
}

fn cmd_build(cli: &Cli, kb_path: &Path, claims: &[String], grounds: &[String]) -> Result<Outcome> {
    if claims.is_empty() && grounds.is_empty() {
        return Err(CliError::State(
            "build needs --claim and/or --grounds to argue from".into(),
        ));
    }
    let text = fs::read_to_string(kb_path).map_err(|e| CliError::io(kb_path, e))?;
    let kb = parse_kb(&text, &kb_path.display().to_string())?;

    let mut frames = Vec::new();
    for claim in claims {
        for act in activate_backward(&kb, &PropId::new(claim))? {
            frames.extend(frames_from_activation(&act, &kb)?);
        }
    }
    if !grounds.is_empty() {
        let set: BTreeSet<PropId> = grounds.iter().map(PropId::new).collect();
        for act in activate_forward(&kb, &set)? {
            frames.extend(frames_from_activation(&act, &kb)?);
        }
    }
    // Claims and grounds can activate the same schema twice over; identical
    // frames collapse here, genuinely conflicting ones fail in compile.
    frames.sort_by(|a, b| a.id.cmp(&b.id));
    frames.dedup();
    let frames = merge_diagnostic_frames(frames)?;
    let net = compile(&frames, &kb)?;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "loaded {}: {}, {}",
        kb_path.display(),
        plural(kb.propositions().count(), "proposition", "propositions"),
        plural(kb.schemata().count(), "schema", "schemata")
    );
    for frame in &frames {
        let _ = writeln!(
            out,
            "argument {} : {}, {}, claim {}",
            frame.id,
            direction_str(frame.direction),
            plural(frame.grounds.len(), "ground", "grounds"),
            frame.claim
        );
    }
    let _ = writeln!(out, "{}", model_line(&net));
    out.push_str("evidence reset\n");

    Session::initialize(&cli.session, kb, frames, net)?;
    Ok(Outcome {
        stdout: out,
        code: 0,
        record: true,
    })
}

fn cmd_assert(cli: &Cli, ev_path: &Path) -> Result<Outcome> {
    let mut session = Session::load(&cli.session)?;
    let text = fs::read_to_string(ev_path).map_err(|e| CliError::io(ev_path, e))?;
    let additions = parse_evidence_text(&text, &ev_path.display().to_string())?;
    if additions.is_empty() {
        return Err(CliError::State(format!(
            "`{}` contains no observations",
            ev_path.display()
        )));
    }

    let mut out = String::new();
    for (id, value) in additions.in_order() {
        session.evidence.set(id.clone(), *value);
        let _ = writeln!(out, "observed {id} = {value}");
    }
    session.evidence.check_against(&session.net)?;

    let (block, triggered) = conflict_block(&session.net, &session.evidence, cli.threshold, false)?;
    out.push_str(&block);
    session.save_evidence()?;
    Ok(Outcome {
        stdout: out,
        code: if triggered { EXIT_CONFLICT } else { 0 },
        record: true,
    })
}

fn cmd_report(cli: &Cli, per_increment: bool) -> Result<Outcome> {
    let session = Session::load(&cli.session)?;
    let (out, triggered) = conflict_block(&session.net, &session.evidence, cli.threshold, per_increment)?;
    Ok(Outcome {
        stdout: out,
        code: if triggered { EXIT_CONFLICT } else { 0 },
        record: true,
    })
}

fn cmd_revise(cli: &Cli, force: bool) -> Result<Outcome> {
    let mut session = Session::load(&cli.session)?;
    if session.evidence.is_empty() {
        return Err(CliError::State(
            "no evidence recorded; nothing to revise against".into(),
        ));
    }
    let config = RevisionConfig {
        threshold: cli.threshold,
        acceptance_ratio: cli.acceptance_ratio,
        max_candidates: cli.max_candidates,
    };
    let outcome = revise_once(
        &session.kb,
        &session.frames,
        &session.net,
        &session.evidence,
        config,
        force,
    )?;

    let mut out = String::new();
    let _ = writeln!(out, "lr-star {}", outcome.report.lr_star);
    let _ = writeln!(out, "threshold {}", outcome.report.threshold);
    let _ = writeln!(
        out,
        "conflict {}",
        if outcome.report.triggered { "TRIGGERED" } else { "none" }
    );
    if !outcome.report.triggered && !force {
        out.push_str("no revision needed\n");
        return Ok(Outcome {
            stdout: out,
            code: 0,
            record: true,
        });
    }

    for s in &outcome.suspects {
        let _ = writeln!(
            out,
            "suspect {} : sensitivity {}, rebuttal-posterior {}, warrant-invalid {}",
            s.argument, s.sensitivity, s.rebuttal_posterior, s.warrant_invalid
        );
    }
    if outcome.evaluations.is_empty() {
        out.push_str("no candidates\n");
    }
    for (i, (candidate, ratio)) in outcome.evaluations.iter().enumerate() {
        let verdict = if outcome.adopted == Some(i) { "adopted" } else { "retained" };
        let _ = writeln!(
            out,
            "candidate {} {} on {} : ratio {}, {}",
            i + 1,
            candidate.kind.as_str(),
            candidate.target,
            ratio,
            verdict
        );
        let _ = writeln!(out, "  {}", candidate.description);
    }

    let code = match outcome.adopted {
        Some(i) => {
            let kind = outcome.evaluations[i].0.kind;
            let _ = writeln!(out, "decision: adopted candidate {} ({})", i + 1, kind.as_str());
            session.frames = outcome.frames;
            session.net = outcome.net;
            session.save_model()?;
            let _ = writeln!(out, "{}", model_line(&session.net));
            let after = surprise_index(&session.net, &session.evidence, cli.threshold)?;
            let _ = writeln!(
                out,
                "after revision: lr-star {}, conflict {}",
                after.lr_star,
                if after.triggered { "TRIGGERED" } else { "none" }
            );
            if after.triggered {
                EXIT_CONFLICT
            } else {
                0
            }
        }
        None => {
            out.push_str("decision: retain current model\n");
            if outcome.report.triggered {
                EXIT_CONFLICT
            } else {
                0
            }
        }
    };
    Ok(Outcome {
        stdout: out,
        code,
        record: true,
    })
}

fn cmd_export(cli: &Cli, format: ExportFormat, path: &Path) -> Result<Outcome> {
    let session = Session::load(&cli.session)?;
    let content = match format {
        ExportFormat::Dot => to_dot(&session.net),
        ExportFormat::Net => to_net_text(&session.net),
    };
    fs::write(path, content).map_err(|e| CliError::io(path, e))?;
    Ok(Outcome {
        stdout: format!("wrote {} to {}\n", format.as_str(), path.display()),
        code: 0,
        record: true,
    })
}

fn cmd_session(cli: &Cli) -> Result<Outcome> {
    let session = Session::load(&cli.session)?;
    let mut out = String::new();
    let _ = writeln!(out, "arguments: {}", session.frames.len());
    let _ = writeln!(out, "{}", model_line(&session.net));
    if session.evidence.is_empty() {
        out.push_str("evidence: none\nconflict: not evaluated\n");
    } else {
        let _ = writeln!(
            out,
            "evidence: {}",
            plural(session.evidence.len(), "observation", "observations")
        );
        let report = surprise_index(&session.net, &session.evidence, cli.threshold)?;
        let _ = writeln!(
            out,
            "conflict: {} (lr-star {}, threshold {})",
            if report.triggered { "TRIGGERED" } else { "none" },
            report.lr_star,
            report.threshold
        );
    }
    Ok(Outcome {
        stdout: out,
        code: 0,
        record: false,
    })
}
