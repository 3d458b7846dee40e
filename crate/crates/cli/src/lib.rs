//! The `synbif` command line: lattice, spectrum, prediction and numerical
//! verification reports for networks given as JSON files or catalog ids.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use synbif::bifurcation::{predict_with, render_table, BranchPrediction, PredictOptions};
use synbif::catalog::{cross_check, find_entry, load_catalog, spectral_clause, top_verdict, SpectralClause, TopVerdict};
use synbif::classify::{annotate_with, to_dot_annotated, AnnotatedLattice, StructureType};
use synbif::error::Error;
use synbif::network::{linearly_equivalent, Network};
use synbif::numerics::{continue_equilibria, synthesize, to_csv, ContinuationOptions, Status, VerifyOptions};
use synbif::par::{self, Exec};
use synbif::reduction::{reduced_coefficients, ReducedSystem};
use synbif::spectrum::RealClass;
use synbif::synchrony::to_dot;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ANALYSIS: i32 = 1;
pub const EXIT_VERIFY_FAIL: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Dot,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "synbif", version, about = "Synchrony-breaking steady-state bifurcations of coupled cell networks")]
pub struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Seed for every random draw; printed in each report header.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of stdout.
    #[arg(short = 'o', long = "output", global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads for the parallel paths.
    #[arg(long, global = true, env = "SYNBIF_THREADS")]
    pub threads: Option<usize>,
    /// Run every data-parallel loop sequentially.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Input {
    /// Network JSON file.
    #[arg(required_unless_present = "catalog", conflicts_with = "catalog")]
    pub path: Option<PathBuf>,
    /// Use a bundled catalog entry instead of a file.
    #[arg(long)]
    pub catalog: Option<String>,
}

#[derive(Debug, Args)]
pub struct NumericArgs {
    #[arg(long, default_value_t = 0.05)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 41)]
    pub grid: usize,
    #[arg(long, default_value_t = 200)]
    pub starts: usize,
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lattice, annotations, structure type and predictions in one report.
    Analyze(Input),
    /// Synchrony lattice only.
    Lattice(Input),
    /// Annotated lattice, spectral clause and structure type.
    Classify(Input),
    /// Branch-support table.
    Predict {
        #[command(flatten)]
        input: Input,
        /// Also print reduced coefficients at one sampled profile per condition.
        #[arg(long)]
        dump_ls: bool,
    },
    /// Corroborate predictions by continuation on synthesized systems.
    Verify {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        numeric: NumericArgs,
        /// Condition whose branches `--format csv` exports (default: first real one).
        #[arg(long)]
        condition: Option<String>,
    },
    /// Bundled networks.
    #[command(subcommand)]
    Catalog(CatalogCommand),
    /// Decide whether two networks have the same admissible systems.
    Equiv { a: PathBuf, b: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum CatalogCommand {
    List,
    Show { id: String },
}

/// Everything `analyze` reports; the JSON form deserializes back to an
/// identical value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub seed: u64,
    pub network: Network,
    pub lattice: AnnotatedLattice,
    pub spectral_clause: Option<SpectralClause>,
    pub structure_type: Option<StructureType>,
    pub predictions: Vec<BranchPrediction>,
    pub top_verdict: Option<TopVerdict>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Analysis(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Analysis(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Analysis(e.to_string())
    }
}

struct Output {
    text: String,
    code: i32,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, code: EXIT_OK }
    }
}

fn load(input: &Input) -> Result<Network, Failure> {
    match (&input.path, &input.catalog) {
        (_, Some(id)) => Ok(find_entry(id)?.network),
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Analysis(format!("{}: {e}", path.display())))?;
            Network::from_json_str(&text).map_err(|e| Failure::Analysis(format!("{}: {e}", path.display())))
        }
        (None, None) => Err(Failure::Usage("a network file or --catalog id is required".into())),
    }
}

fn header(cmd: &str, net: &Network, seed: u64) -> String {
    format!("# synbif {cmd}: network `{}` ({} cells, {} input types), seed {seed}\n", net.name(), net.n_cells(), net.k())
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn unsupported(cmd: &str, format: Format) -> Failure {
    Failure::Usage(format!("`{cmd}` does not support --format {format:?}").to_lowercase())
}

fn lattice_text(al: &AnnotatedLattice) -> String {
    let mut out = String::new();
    for (i, node) in al.lattice.nodes.iter().enumerate() {
        let eig: Vec<String> = al.annotations[i].eigenfunctions.iter().map(|e| e.label()).collect();
        let _ = writeln!(out, "  [{i}] dim {}  {:<24} {}", node.dim(), node.label(), eig.join(", "));
    }
    let edges: Vec<String> = al
        .lattice
        .cover_edges
        .iter()
        .map(|e| format!("{}<{}", e.below, e.above))
        .collect();
    let _ = writeln!(out, "  covers: {}", edges.join(" "));
    out
}

fn classification_text(al: &AnnotatedLattice) -> String {
    let report = al.top_report();
    let mut out = String::new();
    let _ = writeln!(out, "characteristic polynomial eigenfunctions:");
    for e in &report.eigenfunctions {
        let _ = writeln!(
            out,
            "  {:<28} algebraic {} geometric {} real {:?}",
            e.label(),
            e.alg_mult,
            e.geo_mult,
            e.real_class
        );
    }
    if let Some(d) = &report.discriminant {
        let _ = writeln!(out, "discriminant: {d}");
    }
    let _ = writeln!(
        out,
        "spectral clause: {}",
        spectral_clause(report).map_or("-".to_string(), |c| c.to_string())
    );
    let _ = writeln!(
        out,
        "structure type: {}",
        al.structure_type.map_or("-".to_string(), |s| s.to_string())
    );
    if !al.valency_breaking.is_empty() {
        let _ = writeln!(out, "valency synchrony-breaking subspaces: {:?}", al.valency_breaking);
    }
    for w in &report.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

fn reduced_text(rs: &ReducedSystem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "    mode {:?}, mu_lambda {:.6}", rs.mode, rs.mu_lambda);
    for (i, q) in rs.quadratic.iter().enumerate() {
        let _ = writeln!(out, "    h{} second-order {:?}", i + 1, q);
    }
    if let Some(d) = rs.determinacy {
        let _ = writeln!(out, "    determinacy {d}");
    }
    out
}

fn dump_ls(al: &AnnotatedLattice, seed: u64) -> Result<String, Failure> {
    let net = al.network();
    let mut out = String::from("reduced coefficients at one sampled profile:\n");
    for mu in &al.top_report().eigenfunctions {
        if mu.real_class == RealClass::Never {
            continue;
        }
        let profile = synthesize(net, mu, seed)?;
        let _ = writeln!(out, "  {}", mu.label());
        match reduced_coefficients(net, mu, &profile.derivatives) {
            Ok(rs) => out.push_str(&reduced_text(&rs)),
            Err(e) => {
                let _ = writeln!(out, "    {e}");
            }
        }
    }
    Ok(out)
}

fn analyze(al: AnnotatedLattice, net: Network, seed: u64, exec: Exec) -> Result<AnalyzeReport, Failure> {
    let opts = PredictOptions {
        seed,
        exec,
        ..PredictOptions::default()
    };
    let predictions = predict_with(&al, &opts)?;
    let verdict = (net.n_cells() == 3).then(|| top_verdict(&al, &predictions));
    Ok(AnalyzeReport {
        seed,
        spectral_clause: spectral_clause(al.top_report()),
        structure_type: al.structure_type,
        top_verdict: verdict,
        network: net,
        lattice: al,
        predictions,
    })
}

fn execute(cli: &Cli) -> Result<Output, Failure> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    let seed = cli.seed;
    let predict_opts = PredictOptions {
        seed,
        exec,
        ..PredictOptions::default()
    };
    match &cli.command {
        Command::Analyze(input) => {
            let net = load(input)?;
            let al = annotate_with(&net, exec)?;
            let report = analyze(al, net, seed, exec)?;
            match cli.format {
                Format::Json => Ok(Output::ok(json(&report))),
                Format::Dot => Ok(Output::ok(to_dot_annotated(&report.lattice))),
                Format::Text => {
                    let mut out = header("analyze", &report.network, seed);
                    let _ = writeln!(out, "synchrony lattice ({} subspaces):", report.lattice.lattice.len());
                    out.push_str(&lattice_text(&report.lattice));
                    out.push_str(&classification_text(&report.lattice));
                    out.push_str(&render_table(&report.lattice, &report.predictions));
                    if let Some(v) = report.top_verdict {
                        let _ = writeln!(out, "whole phase space: {v}");
                    }
                    Ok(Output::ok(out))
                }
                Format::Csv => Err(unsupported("analyze", cli.format)),
            }
        }
        Command::Lattice(input) => {
            let net = load(input)?;
            let al = annotate_with(&net, exec)?;
            match cli.format {
                Format::Json => Ok(Output::ok(json(&al.lattice))),
                Format::Dot => Ok(Output::ok(to_dot(&al.lattice, net.name()))),
                Format::Text => {
                    let mut out = header("lattice", &net, seed);
                    let _ = writeln!(out, "synchrony lattice ({} subspaces):", al.lattice.len());
                    for (i, node) in al.lattice.nodes.iter().enumerate() {
                        let _ = writeln!(out, "  [{i}] dim {}  {}", node.dim(), node.label());
                    }
                    Ok(Output::ok(out))
                }
                Format::Csv => Err(unsupported("lattice", cli.format)),
            }
        }
        Command::Classify(input) => {
            let net = load(input)?;
            let al = annotate_with(&net, exec)?;
            match cli.format {
                Format::Json => Ok(Output::ok(json(&al))),
                Format::Dot => Ok(Output::ok(to_dot_annotated(&al))),
                Format::Text => {
                    let mut out = header("classify", &net, seed);
                    out.push_str(&lattice_text(&al));
                    out.push_str(&classification_text(&al));
                    Ok(Output::ok(out))
                }
                Format::Csv => Err(unsupported("classify", cli.format)),
            }
        }
        Command::Predict { input, dump_ls: dump } => {
            let net = load(input)?;
            let al = annotate_with(&net, exec)?;
            let preds = predict_with(&al, &predict_opts)?;
            match cli.format {
                Format::Json => Ok(Output::ok(json(&preds))),
                Format::Text => {
                    let mut out = header("predict", &net, seed);
                    out.push_str(&render_table(&al, &preds));
                    if *dump {
                        out.push_str(&dump_ls(&al, seed)?);
                    }
                    Ok(Output::ok(out))
                }
                _ => Err(unsupported("predict", cli.format)),
            }
        }
        Command::Verify {
            input,
            numeric,
            condition,
        } => {
            let net = load(input)?;
            let al = annotate_with(&net, exec)?;
            let continuation = ContinuationOptions {
                lambda_max: numeric.lambda_max,
                grid: numeric.grid,
                starts: numeric.starts,
                exec,
                ..ContinuationOptions::default()
            };
            if !(numeric.lambda_max > 0.0) || numeric.grid < 2 || numeric.starts == 0 || numeric.seeds == 0 {
                return Err(Failure::Usage(
                    "need --lambda-max > 0, --grid >= 2, --starts >= 1 and --seeds >= 1".into(),
                ));
            }
            if cli.format == Format::Csv {
                let mu = match condition {
                    Some(c) => al
                        .top_report()
                        .eigenfunctions
                        .iter()
                        .find(|e| e.label() == *c || e.kind.to_string() == *c)
                        .ok_or_else(|| Failure::Usage(format!("no eigenfunction `{c}`")))?,
                    None => al
                        .top_report()
                        .eigenfunctions
                        .iter()
                        .find(|e| e.real_class != RealClass::Never)
                        .ok_or_else(|| Failure::Analysis("no real bifurcation condition".into()))?,
                };
                let profile = synthesize(&net, mu, seed)?;
                let obs = continue_equilibria(&net, &al.lattice, &profile, &continuation)?;
                return Ok(Output::ok(to_csv(&obs)));
            }
            let preds = predict_with(&al, &predict_opts)?;
            let opts = VerifyOptions {
                seeds: numeric.seeds,
                base_seed: seed,
                continuation,
            };
            let report = synbif::numerics::verify_predictions(&al, &preds, &opts);
            let code = if report.failures() > 0 { EXIT_VERIFY_FAIL } else { EXIT_OK };
            let text = match cli.format {
                Format::Json => json(&report),
                Format::Text => {
                    let mut out = header("verify", &net, seed);
                    let _ = writeln!(out, "# budget: {}", report.budget());
                    for l in &report.lines {
                        let status = match l.status {
                            Status::Pass => "PASS",
                            Status::Fail => "FAIL",
                            Status::Skip => "SKIP",
                        };
                        let _ = writeln!(
                            out,
                            "{status}  {:<20} {:<24} {:<22} {}",
                            al.lattice.nodes[l.subspace].label(),
                            l.condition,
                            l.verdict,
                            l.detail
                        );
                    }
                    out
                }
                _ => return Err(unsupported("verify", cli.format)),
            };
            Ok(Output { text, code })
        }
        Command::Catalog(CatalogCommand::List) => {
            let cat = load_catalog()?;
            match cli.format {
                Format::Json => {
                    let rows: Vec<_> = cat
                        .iter()
                        .map(|e| {
                            serde_json::json!({
                                "id": e.id,
                                "source": e.expected.source,
                                "cells": e.network.n_cells(),
                                "inputs": e.network.k(),
                                "structure_type": e.expected.structure_type,
                            })
                        })
                        .collect();
                    Ok(Output::ok(json(&rows)))
                }
                Format::Text => {
                    let mut out = String::new();
                    for e in &cat {
                        let _ = writeln!(
                            out,
                            "{:<8} {:<10} {} cells, {} inputs, {}",
                            e.id,
                            e.expected.source,
                            e.network.n_cells(),
                            e.network.k(),
                            e.expected.structure_type
                        );
                    }
                    Ok(Output::ok(out))
                }
                _ => Err(unsupported("catalog list", cli.format)),
            }
        }
        Command::Catalog(CatalogCommand::Show { id }) => {
            let entry = find_entry(id)?;
            let al = annotate_with(&entry.network, exec)?;
            let preds = predict_with(&al, &predict_opts)?;
            let check = cross_check(&entry, &al, Some(top_verdict(&al, &preds)))?;
            match cli.format {
                Format::Json => Ok(Output::ok(json(&serde_json::json!({
                    "network": entry.network,
                    "expected": entry.expected,
                    "check": check,
                })))),
                Format::Text => {
                    let mut out = header("catalog show", &entry.network, seed);
                    let _ = writeln!(out, "{}", entry.network.to_json_string());
                    for l in &check.lines {
                        let mark = if l.ok { "ok  " } else { "DIFF" };
                        let _ = writeln!(out, "{mark} {:<16} expected {:<28} computed {}", l.what, l.expected, l.computed);
                    }
                    for r in &check.residuals {
                        let _ = writeln!(out, "residual {:.2e}  {} {}", r.max_residual, r.value, r.vector);
                    }
                    Ok(Output::ok(out))
                }
                _ => Err(unsupported("catalog show", cli.format)),
            }
        }
        Command::Equiv { a, b } => {
            let na = load(&Input {
                path: Some(a.clone()),
                catalog: None,
            })?;
            let nb = load(&Input {
                path: Some(b.clone()),
                catalog: None,
            })?;
            let eq = linearly_equivalent(&na, &nb)?;
            match cli.format {
                Format::Json => Ok(Output::ok(json(&serde_json::json!({ "equivalent": eq })))),
                Format::Text => Ok(Output::ok(
                    if eq { "equivalent\n" } else { "not equivalent\n" }.to_string(),
                )),
                _ => Err(unsupported("equiv", cli.format)),
            }
        }
    }
}

/// Parse `args` (program name first), run the command and return the exit
/// code. Reports go to stdout or `-o`; diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(t) = cli.threads {
        par::init_threads(t.max(1));
    }
    match execute(&cli) {
        Ok(out) => {
            let written = match &cli.output {
                Some(path) => std::fs::write(path, &out.text),
                None => std::io::stdout().write_all(out.text.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("synbif: cannot write report: {e}");
                return EXIT_ANALYSIS;
            }
            out.code
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("synbif: {msg}");
            eprintln!("usage: synbif [--format text|json|dot|csv] [--seed N] [-o FILE] <analyze|lattice|classify|predict|verify|catalog|equiv> ...");
            EXIT_USAGE
        }
        Err(Failure::Analysis(msg)) => {
            eprintln!("synbif: {msg}");
            EXIT_ANALYSIS
        }
    }
}
