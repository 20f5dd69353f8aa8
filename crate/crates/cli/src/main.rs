use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

use askgraph::api::{engine_from_files, ExploreRequest, QueryRequest};
use askgraph::eval::{bundled_corpus, evaluate, load_corpus, training_examples};
use askgraph::fuzz;
use askgraph::{Engine, Service, VizModel};
use askgraph_cli::{render, server};

/// Ask questions about a table in plain English.
#[derive(Debug, Parser)]
#[command(name = "askgraph", version)]
struct Args {
    /// Request to answer; starts an interactive prompt when omitted.
    query: Option<String>,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV table to query instead of the bundled honey data.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// JSON column overrides for --dataset.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Function registry manifest.
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Word vectors, one `word v1 v2 ...` per line.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Visualization model (JSON examples).
    #[arg(long)]
    viz_model: Option<PathBuf>,
    /// Year that relative dates count from.
    #[arg(long)]
    reference_year: Option<i32>,
    /// Print the response as JSON.
    #[arg(long)]
    json: bool,
    /// Number of ranked visualization forms per answer; also the N of the
    /// top-N accuracy in --eval.
    #[arg(long, default_value_t = 3)]
    top_n: usize,
    /// Also list this many runner-up graphs.
    #[arg(long, default_value_t = 0)]
    candidates: usize,
    /// Build this many random requests and check every candidate graph.
    #[arg(long)]
    fuzz: Option<usize>,
    /// Seed for --fuzz.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Score the pipeline on a request corpus (the bundled one unless --corpus is given).
    #[arg(long)]
    eval: bool,
    /// Request corpus (JSON lines).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Write the evaluation report as JSON here, and as a table next to it (.txt).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Fit a visualization model on the corpus and write it here.
    #[arg(long)]
    train_viz: Option<PathBuf>,
    /// Serve the HTTP API.
    #[arg(long)]
    serve: bool,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 8080)]
    port: u16,
}

fn load_engine(args: &Args) -> anyhow::Result<Engine> {
    let mut engine = engine_from_files(args.config.as_deref()).map_err(|e| anyhow::anyhow!(e))?;
    let mut config = engine.config.clone();
    let mut reload = false;
    for (slot, value) in [
        (&mut config.dataset, &args.dataset),
        (&mut config.schema, &args.schema),
        (&mut config.registry, &args.registry),
        (&mut config.embeddings, &args.embeddings),
        (&mut config.viz_model, &args.viz_model),
    ] {
        if value.is_some() {
            *slot = value.clone();
            reload = true;
        }
    }
    if let Some(y) = args.reference_year {
        config.reference_year = Some(y);
    }
    anyhow::ensure!(args.top_n > 0, "--top-n must be at least 1");
    config.viz_top_n = args.top_n;
    if reload {
        engine = Engine::from_config(config).context("loading engine")?;
    } else {
        engine.config = config;
    }
    Ok(engine)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let args = Args::parse();
    match run(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(args: Args) -> anyhow::Result<ExitCode> {
    let engine = load_engine(&args)?;
    let corpus = || -> anyhow::Result<_> {
        Ok(match &args.corpus {
            Some(p) => load_corpus(p)?,
            None => bundled_corpus(),
        })
    };
    if let Some(out) = &args.train_viz {
        let examples = training_examples(&engine, &corpus()?);
        let model = VizModel::from_examples(examples)?;
        std::fs::write(out, serde_json::to_string_pretty(&model)?)?;
        println!("wrote {} examples to {}", model.len(), out.display());
        return Ok(ExitCode::SUCCESS);
    }
    if args.eval {
        let report = evaluate(&engine, &corpus()?);
        let table = render::report(&report);
        print!("{table}");
        if let Some(p) = &args.report {
            let text_path = if p.extension().is_some_and(|e| e == "txt") {
                p.with_extension("txt.txt")
            } else {
                p.with_extension("txt")
            };
            std::fs::write(p, serde_json::to_string_pretty(&report)?)?;
            std::fs::write(&text_path, table)?;
            println!("report written to {} and {}", p.display(), text_path.display());
        }
        return Ok(ExitCode::SUCCESS);
    }
    if let Some(n) = args.fuzz {
        let vocabulary = fuzz::Vocabulary::new(&engine.dataset, &engine.registry);
        let report = fuzz::check(&engine, &fuzz::phrases(&vocabulary, args.seed, n));
        println!(
            "phrases {}  built {}  rejected {}  graphs checked {}  violations {}  nondeterministic {}",
            report.phrases,
            report.built,
            report.unintelligible,
            report.graphs_checked,
            report.violations.len(),
            report.nondeterministic.len()
        );
        for v in report.violations.iter().chain(&report.nondeterministic) {
            println!("  {v}");
        }
        let clean = report.violations.is_empty() && report.nondeterministic.is_empty();
        return Ok(if clean { ExitCode::SUCCESS } else { ExitCode::from(1) });
    }
    if args.serve {
        let service = Service::new(engine);
        let rt = tokio::runtime::Runtime::new()?;
        rt.block_on(async {
            let listener = tokio::net::TcpListener::bind((args.host.as_str(), args.port)).await?;
            tracing::info!("listening on {}", listener.local_addr()?);
            axum::serve(listener, server::router(service)).await?;
            anyhow::Ok(())
        })?;
        return Ok(ExitCode::SUCCESS);
    }
    let service = Service::new(engine);
    match &args.query {
        Some(q) => Ok(one_shot(&service, q, &args)),
        None => repl(&service),
    }
}

fn one_shot(service: &Service, text: &str, args: &Args) -> ExitCode {
    if args.candidates > 0 {
        if let Ok((_, graphs)) = service.engine.candidates(text) {
            for (i, g) in graphs.iter().take(args.candidates).enumerate() {
                println!("candidate {i}:");
                print!("{}", render::graph(g));
            }
        }
    }
    match service.query(&QueryRequest { text: text.to_string(), session_id: None }) {
        Ok(r) => {
            if args.json {
                println!("{}", serde_json::to_string_pretty(&r).unwrap_or_default());
            } else {
                print!("{}", render::value(&r.answer));
                println!("graph:");
                let g =
                    askgraph::OperationGraph::from_document(&r.graph).expect("documents from the service are valid");
                print!("{}", render::graph(&g));
                println!("visualization:");
                print!("{}", render::viz(&r.viz));
                for d in &r.diagnostics {
                    println!("note: {d}");
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            if args.json {
                println!("{}", serde_json::to_string_pretty(&e).unwrap_or_default());
            } else {
                eprintln!("{}", e.message);
                if let Some(d) = &e.diagnostics {
                    if !d.unmatched_terms.is_empty() {
                        eprintln!("unrecognized terms: {}", d.unmatched_terms.join(", "));
                    }
                }
            }
            if e.code == "unintelligible" {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

const HELP: &str = "commands: :back N  step N operations back from the result
          :node ID  show one node's value
          :graph    show the last graph
          :top3     show the ranked visualizations
          :quit";

fn repl(service: &Service) -> anyhow::Result<ExitCode> {
    let stdin = std::io::stdin();
    let mut session: Option<String> = None;
    let mut last: Option<askgraph::QueryResponse> = None;
    println!("askgraph: ask about the data, or :help");
    loop {
        print!("> ");
        std::io::stdout().flush()?;
        let mut line = String::new();
        if stdin.lock().read_line(&mut line)? == 0 {
            break;
        }
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (cmd, rest) = line.split_once(' ').map_or((line, ""), |(a, b)| (a, b.trim()));
        match cmd {
            ":quit" | ":q" | ":exit" => break,
            ":help" => println!("{HELP}"),
            ":graph" | ":top3" | ":back" | ":node" => {
                let Some(r) = &last else {
                    println!("no result yet");
                    continue;
                };
                match cmd {
                    ":graph" => {
                        let g = askgraph::OperationGraph::from_document(&r.graph)?;
                        print!("{}", render::graph(&g));
                    }
                    ":top3" => print!("{}", render::viz(&r.viz)),
                    _ => {
                        let req = if cmd == ":back" {
                            let steps = if rest.is_empty() { 1 } else { rest.parse().unwrap_or(1) };
                            ExploreRequest { graph_id: r.graph_id.clone(), steps: Some(steps), node_id: None }
                        } else {
                            ExploreRequest {
                                graph_id: r.graph_id.clone(),
                                steps: None,
                                node_id: Some(rest.to_string()),
                            }
                        };
                        match service.explore(&req) {
                            Ok(x) => {
                                println!("{}:", x.node_id);
                                print!("{}", render::value(&x.value));
                            }
                            Err(e) => println!("{}", e.message),
                        }
                    }
                }
            }
            _ => match service.query(&QueryRequest { text: line.to_string(), session_id: session.clone() }) {
                Ok(r) => {
                    print!("{}", render::value(&r.answer));
                    for d in &r.diagnostics {
                        println!("note: {d}");
                    }
                    session = Some(r.session_id.clone());
                    last = Some(r);
                }
                Err(e) => println!("{}", e.message),
            },
        }
    }
    Ok(ExitCode::SUCCESS)
}
