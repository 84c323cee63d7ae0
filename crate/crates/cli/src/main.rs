use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use meridian::agraph::{parse_paths, AGraph, Termination, DEFAULT_MAX_STEPS};
use meridian::freegroup::{peripheral_basis, PeripheralBasisResult, PeripheralConjugate, Word};
use meridian::graph_of_groups::TreeOfGroups;
use meridian::knot_tree::KnotTree;
use meridian::toruskit::tameness_certificate;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "meridian", version, about = "Bridge numbers, Stallings graphs and A-graph folds for satellite knots")]
struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Bridge number of a satellite tree, by closed form and by recursion.
    Bridge { tree: PathBuf },
    /// Presentation of the tree of groups.
    Presentation { tree: PathBuf },
    /// Peripheral basis of a subgroup given by `rank N` and `<index> : <word>` lines.
    Stallings { generators: PathBuf },
    /// Folds the A-graph spanned by the given paths.
    Fold {
        tree: PathBuf,
        paths: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: usize,
        /// Exact torus-knot arithmetic at torus leaves.
        #[arg(long)]
        exact_torus: bool,
        /// Writes the tab-separated step log here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Euler-characteristic certificates for T(p,q).
    TorusCheck {
        p: i64,
        q: i64,
        /// Only this candidate rank instead of every r < q.
        #[arg(long)]
        r: Option<i64>,
    },
}

enum Failure {
    Input(String),
    Check(String),
}

struct Report {
    json: Value,
    text: String,
    ok: bool,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_tree(path: &Path) -> Result<KnotTree, Failure> {
    KnotTree::parse(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn bridge(path: &Path) -> Result<Report, Failure> {
    let tree = read_tree(path)?;
    let input = |e: meridian::knot_tree::TreeError| Failure::Input(e.to_string());
    let closed = tree.bridge_number().map_err(input)?;
    let recursive = tree.bridge_number_recursive().map_err(input)?;
    let mut json = tree.to_json().map_err(input)?;
    json["recursive"] = json!(recursive);
    json["agreement"] = json!(closed == recursive);
    let mut text = format!("bridge number {closed} (recursion {recursive})\n");
    for v in 0..tree.len() {
        text.push_str(&format!("  vertex {v}: height {}\n", json["heights"][v.to_string()]));
    }
    for class in ["V0", "V1", "V2"] {
        text.push_str(&format!("  {class}: {}\n", json["partition"][class]));
    }
    Ok(Report { json, text, ok: closed == recursive })
}

fn presentation(path: &Path) -> Result<Report, Failure> {
    let gog = TreeOfGroups::build(&read_tree(path)?).map_err(|e| Failure::Input(e.to_string()))?;
    let text = gog.presentation();
    Ok(Report { json: json!({ "presentation": text.lines().collect::<Vec<_>>() }), text, ok: true })
}

fn parse_generators(text: &str) -> Result<(usize, Vec<PeripheralConjugate>), Failure> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (_, header) = lines.next().ok_or_else(|| Failure::Input("missing `rank N` line".into()))?;
    let rank = header
        .strip_prefix("rank")
        .and_then(|n| n.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .ok_or_else(|| Failure::Input(format!("expected `rank N`, found `{header}`")))?;
    let mut gens = Vec::new();
    for (line, l) in lines {
        let bad = |msg: String| Failure::Input(format!("line {line}: {msg}"));
        let (index, word) = l.split_once(':').ok_or_else(|| bad(format!("expected `<index> : <word>`, found `{l}`")))?;
        let index: usize = index.trim().parse().map_err(|_| bad(format!("bad index `{}`", index.trim())))?;
        let word = Word::parse(word, rank).map_err(|e| bad(e.to_string()))?;
        gens.push(PeripheralConjugate::new(word, index).map_err(|e| bad(e.to_string()))?);
    }
    Ok((rank, gens))
}

fn stallings(path: &Path) -> Result<Report, Failure> {
    let (rank, gens) = parse_generators(&read(path)?)?;
    let indices = |pcs: &[PeripheralConjugate]| {
        let mut s: Vec<usize> = pcs.iter().map(|p| p.index).collect();
        s.sort_unstable();
        s.dedup();
        s
    };
    match peripheral_basis(&gens, rank).map_err(|e| Failure::Check(e.to_string()))? {
        PeripheralBasisResult::WholeGroup => Ok(Report {
            json: json!({ "result": "whole_group", "rank": rank }),
            text: format!("whole group F_{rank}\n"),
            ok: true,
        }),
        PeripheralBasisResult::Basis(b) => {
            let elements: Vec<Value> = b
                .elements
                .iter()
                .zip(&b.sources)
                .map(|(t, src)| json!({ "conjugator": t.conjugator.to_string(), "index": t.index, "source": src }))
                .collect();
            let mut text = format!("basis of rank {}\n", b.graph.rank());
            for (t, src) in b.elements.iter().zip(&b.sources) {
                text.push_str(&format!("  {t}  from generator {src}\n"));
            }
            text.push_str(&format!("  indices {:?} (generators {:?})\n", indices(&b.elements), indices(&gens)));
            Ok(Report {
                json: json!({
                    "result": "basis",
                    "rank": b.graph.rank(),
                    "basis": elements,
                    "indices": indices(&b.elements),
                    "generator_indices": indices(&gens),
                }),
                text,
                ok: true,
            })
        }
    }
}

fn fold(tree: &Path, paths: &Path, max_steps: usize, exact: bool, trace_file: Option<&Path>) -> Result<Report, Failure> {
    let tree = read_tree(tree)?;
    let bridge = tree.bridge_number().map_err(|e| Failure::Input(e.to_string()))?;
    let gog = TreeOfGroups::build(&tree).map_err(|e| Failure::Input(e.to_string()))?;
    let paths = parse_paths(&read(paths)?, &gog, exact).map_err(|e| Failure::Input(e.to_string()))?;
    let graph = AGraph::build_initial(&gog, &paths, exact).map_err(|e| Failure::Input(e.to_string()))?;
    let trace = graph.fold(Some(max_steps));
    if let Some(file) = trace_file {
        fs::write(file, trace.to_log()).map_err(|e| Failure::Input(format!("{}: {e}", file.display())))?;
    }
    let folded = trace.termination == Termination::Folded;
    let monotone = trace.steps.iter().all(|s| s.decreased());
    let tame = trace.steps.iter().all(|s| s.tame()) && trace.graph.is_tame().is_ok();
    let complete = trace.graph.is_complete();
    let c = trace.graph.complexity();
    let termination = match &trace.termination {
        Termination::Folded => "folded".to_string(),
        Termination::StepLimit => format!("step limit {max_steps} reached"),
        Termination::Error(e) => format!("error: {e}"),
    };
    let verdict = json!({
        "folded": folded,
        "complete": complete,
        "monotone": monotone,
        "tame": tame,
        "c1": c.c1,
        "c2": c.c2,
        "bridge": bridge,
        "steps": trace.steps.len(),
    });
    let mut text = trace.to_log();
    text.push_str(&format!(
        "{termination} after {} steps: monotone {monotone}, tame {tame}, complete {complete}, c = ({}, {}), bridge number {bridge}\n",
        trace.steps.len(),
        c.c1,
        c.c2
    ));
    Ok(Report { json: json!({ "verdict": verdict, "trace": trace.to_json() }), text, ok: folded && monotone && tame })
}

fn torus_check(p: i64, q: i64, only: Option<i64>) -> Result<Report, Failure> {
    let ranks: Vec<i64> = match only {
        Some(r) => vec![r],
        None => (0..q.max(0)).collect(),
    };
    let certs = ranks
        .into_iter()
        .map(|r| tameness_certificate(p, q, r))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::Input(e.to_string()))?;
    let ok = certs.iter().all(|c| c.holds);
    let text = certs.iter().map(|c| c.to_string()).collect::<String>();
    let json = json!({ "p": p, "q": q, "holds": ok, "certificates": certs.iter().map(|c| c.to_json()).collect::<Vec<_>>() });
    Ok(Report { json, text, ok })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Bridge { tree } => bridge(tree),
        Command::Presentation { tree } => presentation(tree),
        Command::Stallings { generators } => stallings(generators),
        Command::Fold { tree, paths, max_steps, exact_torus, trace } => {
            fold(tree, paths, *max_steps, *exact_torus, trace.as_deref())
        }
        Command::TorusCheck { p, q, r } => torus_check(*p, *q, *r),
    };
    match outcome {
        Ok(report) => {
            match cli.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&report.json).expect("json values serialize")),
                Format::Text => print!("{}", report.text),
            }
            if report.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
