//! `del` — model checking, normalization, satisfiability, bisimulation,
//! and PDL translation for dynamic epistemic logics over action
//! signatures.
//!
//! Exit codes: 0 for success (or a true/SAT/bisimilar answer), 1 for a
//! false/UNSAT/not-bisimilar answer, 2 for usage errors, bad input, or an
//! exceeded guard.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use del_core::bisim;
use del_core::corpus;
use del_core::decide::{self, DecideConfig, Verdict};
use del_core::kripke::StateModel;
use del_core::pdl;
use del_core::rewrite::{self, RewriteConfig};
use del_core::semantics;
use del_core::syntax::{parse_sentence, render, render_full, Sentence, Signature};

#[derive(Parser)]
#[command(name = "del", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a formula at one state of a model.
    Check(CheckArgs),
    /// Print the truth set of a formula in a model.
    Eval(EvalArgs),
    /// Rewrite a formula to normal form.
    Normalize(NormalizeArgs),
    /// Decide satisfiability (or validity) of a star-free formula.
    Decide(DecideArgs),
    /// Translate a star-free formula into PDL.
    Translate(TranslateArgs),
    /// Compute the largest bisimulation between two models.
    Bisim(BisimArgs),
    /// Generate the bundled example models and signatures.
    Gen(GenArgs),
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    sig: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    state: String,
    #[arg(long)]
    formula: String,
    /// Unfold program iteration up to this depth; without it, starred
    /// programs are rejected.
    #[arg(long)]
    unfold: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    sig: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    formula: String,
    #[arg(long)]
    unfold: Option<usize>,
}

#[derive(Args)]
struct NormalizeArgs {
    #[arg(long)]
    sig: PathBuf,
    #[arg(long)]
    formula: String,
    /// Print every rewrite step.
    #[arg(long)]
    trace: bool,
    /// Fully parenthesize the output.
    #[arg(long)]
    full: bool,
}

#[derive(Args)]
struct DecideArgs {
    #[arg(long)]
    sig: PathBuf,
    #[arg(long)]
    formula: String,
    /// Decide validity instead of satisfiability.
    #[arg(long)]
    valid: bool,
    /// Write the witness (or counter-) model to this file on SAT.
    #[arg(long)]
    witness: Option<PathBuf>,
}

#[derive(Args)]
struct TranslateArgs {
    #[arg(long)]
    sig: PathBuf,
    #[arg(long)]
    formula: String,
}

#[derive(Args)]
struct BisimArgs {
    #[arg(long)]
    left: PathBuf,
    #[arg(long)]
    right: PathBuf,
    /// With --left-state/--right-state, answer a single bisimilarity
    /// query; otherwise print all related pairs.
    #[arg(long)]
    left_state: Option<String>,
    #[arg(long)]
    right_state: Option<String>,
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    what: GenCommand,
}

#[derive(Subcommand)]
enum GenCommand {
    /// The cycle model of 5n points.
    Cn {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The private-announcement chain pair.
    Private {
        /// Chain lengths as `index:length` pairs, e.g. `1:2,2:3`.
        #[arg(long)]
        lengths: String,
        /// Which chain gains the extra root arrow in the second model.
        #[arg(long)]
        extra: u32,
        #[arg(long)]
        out_base: PathBuf,
        #[arg(long)]
        out_extended: PathBuf,
    },
    /// The decreasing-sequences model for iterated announcements.
    Nofmp {
        #[arg(long)]
        bound: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// A bundled signature (pub or pri).
    Sig {
        #[arg(long)]
        kind: String,
        /// Agent names, comma separated.
        #[arg(long, default_value = "A,B")]
        agents: String,
        /// Observers of the private announcement (pri only).
        #[arg(long, default_value = "A")]
        observers: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_signature(path: &Path) -> Result<Signature, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    Signature::from_json(&text).map_err(|e| e.to_string())
}

fn load_model(path: &Path, sig: &Signature) -> Result<StateModel, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    StateModel::from_json(&text, Some(sig.agents())).map_err(|e| e.to_string())
}

fn parse_formula(text: &str, sig: &Signature) -> Result<Sentence, String> {
    parse_sentence(text, sig).map_err(|e| e.to_string())
}

fn star_fuel(unfold: Option<usize>, formula: &Sentence) -> Result<usize, String> {
    match unfold {
        Some(k) => Ok(k),
        None if formula.is_star_free() => Ok(0),
        None => Err("formula iterates a program; pass --unfold <k>".into()),
    }
}

fn write_or_print(out: Option<&Path>, content: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Check(args) => {
            let sig = load_signature(&args.sig)?;
            let model = load_model(&args.model, &sig)?;
            let formula = parse_formula(&args.formula, &sig)?;
            let fuel = star_fuel(args.unfold, &formula)?;
            let (holds, exact) =
                semantics::check_at(&model, &args.state, &formula, &sig, fuel)
                    .map_err(|e| e.to_string())?;
            if !exact {
                return Err(format!(
                    "unknown beyond bound {fuel}: iteration did not converge"
                ));
            }
            println!("{}", if holds { "true" } else { "false" });
            Ok(ExitCode::from(if holds { 0 } else { 1 }))
        }
        Command::Eval(args) => {
            let sig = load_signature(&args.sig)?;
            let model = load_model(&args.model, &sig)?;
            let formula = parse_formula(&args.formula, &sig)?;
            let fuel = star_fuel(args.unfold, &formula)?;
            let out = semantics::eval_sentence(&model, &formula, &sig, fuel)
                .map_err(|e| e.to_string())?;
            if !out.exact {
                return Err(format!(
                    "unknown beyond bound {fuel}: iteration did not converge"
                ));
            }
            let names: Vec<&str> = out.set.iter().map(|&i| model.state_name(i)).collect();
            println!("{}", names.join(" "));
            Ok(ExitCode::SUCCESS)
        }
        Command::Normalize(args) => {
            let sig = load_signature(&args.sig)?;
            let formula = parse_formula(&args.formula, &sig)?;
            let cfg = RewriteConfig::default();
            let (nf, trace) = rewrite::normalize_with_trace(&formula, &sig, &cfg)
                .map_err(|e| e.to_string())?;
            if args.trace {
                for (rule, term) in &trace {
                    println!("{rule}: {}", render(term));
                }
            }
            let text = if args.full { render_full(&nf) } else { render(&nf) };
            println!("{text}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Decide(args) => {
            let sig = load_signature(&args.sig)?;
            let formula = parse_formula(&args.formula, &sig)?;
            let cfg = DecideConfig::default();
            if args.valid {
                let valid = decide::valid(&formula, &sig, &cfg).map_err(|e| e.to_string())?;
                println!("{}", if valid { "VALID" } else { "INVALID" });
                if !valid {
                    if let Some(path) = &args.witness {
                        if let Verdict::Sat { model, state } =
                            decide::satisfiable(&Sentence::not(formula), &sig, &cfg)
                                .map_err(|e| e.to_string())?
                        {
                            write_or_print(Some(path), &model.to_json())?;
                            eprintln!("countermodel state: {state}");
                        }
                    }
                }
                Ok(ExitCode::from(if valid { 0 } else { 1 }))
            } else {
                match decide::satisfiable(&formula, &sig, &cfg).map_err(|e| e.to_string())? {
                    Verdict::Sat { model, state } => {
                        println!("SAT");
                        if let Some(path) = &args.witness {
                            write_or_print(Some(path), &model.to_json())?;
                            eprintln!("witness state: {state}");
                        }
                        Ok(ExitCode::SUCCESS)
                    }
                    Verdict::Unsat => {
                        println!("UNSAT");
                        Ok(ExitCode::from(1))
                    }
                }
            }
        }
        Command::Translate(args) => {
            let sig = load_signature(&args.sig)?;
            let formula = parse_formula(&args.formula, &sig)?;
            let t = pdl::translate(&formula, &sig, &RewriteConfig::default())
                .map_err(|e| e.to_string())?;
            println!("{}", pdl::render_pdl(&t));
            Ok(ExitCode::SUCCESS)
        }
        Command::Bisim(args) => {
            // Model files carry their own agent sets.
            let left_text = std::fs::read_to_string(&args.left)
                .map_err(|e| format!("cannot read {}: {e}", args.left.display()))?;
            let left = StateModel::from_json(&left_text, None).map_err(|e| e.to_string())?;
            let right_text = std::fs::read_to_string(&args.right)
                .map_err(|e| format!("cannot read {}: {e}", args.right.display()))?;
            let right = StateModel::from_json(&right_text, None).map_err(|e| e.to_string())?;
            match (args.left_state, args.right_state) {
                (Some(ls), Some(rs)) => {
                    let related =
                        bisim::bisimilar(&left, &ls, &right, &rs).map_err(|e| e.to_string())?;
                    println!("{}", if related { "bisimilar" } else { "not bisimilar" });
                    Ok(ExitCode::from(if related { 0 } else { 1 }))
                }
                (None, None) => {
                    let rel =
                        bisim::largest_bisimulation(&left, &right).map_err(|e| e.to_string())?;
                    for (i, j) in rel {
                        println!("{} {}", left.state_name(i), right.state_name(j));
                    }
                    Ok(ExitCode::SUCCESS)
                }
                _ => Err("pass both --left-state and --right-state, or neither".into()),
            }
        }
        Command::Gen(args) => match args.what {
            GenCommand::Cn { n, out } => {
                let model = corpus::gen_cn(n).map_err(|e| e.to_string())?;
                write_or_print(out.as_deref(), &model.to_json())?;
                Ok(ExitCode::SUCCESS)
            }
            GenCommand::Private {
                lengths,
                extra,
                out_base,
                out_extended,
            } => {
                let mut map = BTreeMap::new();
                for part in lengths.split(',') {
                    let (i, l) = part
                        .split_once(':')
                        .ok_or_else(|| format!("bad lengths entry {part:?}"))?;
                    let i: u32 = i.trim().parse().map_err(|_| format!("bad index {i:?}"))?;
                    let l: u32 = l.trim().parse().map_err(|_| format!("bad length {l:?}"))?;
                    map.insert(i, l);
                }
                let (base, extended) =
                    corpus::gen_private_pair(&map, extra).map_err(|e| e.to_string())?;
                write_or_print(Some(&out_base), &base.to_json())?;
                write_or_print(Some(&out_extended), &extended.to_json())?;
                Ok(ExitCode::SUCCESS)
            }
            GenCommand::Nofmp { bound, out } => {
                let model = corpus::gen_nofmp(bound);
                write_or_print(out.as_deref(), &model.to_json())?;
                Ok(ExitCode::SUCCESS)
            }
            GenCommand::Sig {
                kind,
                agents,
                observers,
                out,
            } => {
                let agent_list: Vec<&str> = agents.split(',').map(str::trim).collect();
                let sig = match kind.as_str() {
                    "pub" => corpus::pub_signature(&agent_list),
                    "pri" => {
                        let observer_list: Vec<&str> =
                            observers.split(',').map(str::trim).collect();
                        corpus::pri_signature(&observer_list, &agent_list)
                    }
                    other => return Err(format!("unknown signature kind {other:?}")),
                };
                write_or_print(out.as_deref(), &sig.to_json())?;
                Ok(ExitCode::SUCCESS)
            }
        },
    }
}
