use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use coxcent::dot;
use coxcent::error::{CoxError, EXIT_INVARIANT};
use coxcent::geometry::System;
use coxcent::graph::{parse_instance, Instance};
use coxcent::oracle::{brute_force_centralizer, DEFAULT_CAP};
use coxcent::report::{analyze, render_normalizer_text, render_text, Config, DEFAULT_BOUND, DEFAULT_BUDGET};
use coxcent::tours::verify_tables;

#[derive(Parser)]
#[command(name = "coxcent", version, about = "Centralizers and normalizers of parabolic subgroups of Coxeter groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose the centralizer of W_I.
    Analyze(AnalyzeArgs),
    /// Decompose the normalizer of W_I.
    Normalizer(AnalyzeArgs),
    /// Check the shuttling-tour order tables row by row.
    VerifyTables {
        #[arg(long)]
        json: bool,
    },
    /// Brute-force centralizer and normalizer orders of a finite W.
    Oracle {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct AnalyzeArgs {
    file: PathBuf,
    /// Word-length bound for the W^perp window.
    #[arg(long, default_value_t = DEFAULT_BOUND)]
    bound: usize,
    /// Vertex budget for the groupoid graph.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    #[arg(long)]
    json: bool,
    /// Directory receiving cgraph.dot, ygraph.dot and window.dot.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Tree preference, e.g. "s1,s5,s6:s2; !s2,s4,s5:s3".
    #[arg(long)]
    tree_prefer: Option<String>,
}

fn load(path: &Path) -> Result<Instance, CoxError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CoxError::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_instance(&text)?)
}

fn write_dot(dir: &Path, name: &str, body: String) -> Result<(), CoxError> {
    std::fs::create_dir_all(dir).map_err(|e| CoxError::Input(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| CoxError::Input(format!("cannot write {}: {e}", path.display())))
}

fn run_analyze(args: &AnalyzeArgs, normalizer: bool) -> Result<(), CoxError> {
    let inst = load(&args.file)?;
    let config = Config { bound: args.bound, budget: args.budget, tree_preference: args.tree_prefer.clone() };
    let analysis = analyze(&inst, &config)?;
    let report = analysis.report();
    if let Some(dir) = &args.dot {
        write_dot(dir, "cgraph.dot", dot::cgraph_dot(&analysis))?;
        write_dot(dir, "ygraph.dot", dot::ygraph_dot(&analysis))?;
        write_dot(dir, "window.dot", dot::window_dot(&analysis))?;
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else if normalizer {
        print!("{}", render_normalizer_text(&report));
    } else {
        print!("{}", render_text(&report));
    }
    Ok(())
}

fn run_tables(json: bool) -> Result<bool, CoxError> {
    let rows = verify_tables();
    if json {
        println!("{}", serde_json::to_string_pretty(&rows).expect("rows serialize"));
    } else {
        let show = |o: Option<u32>| o.map_or("-".to_string(), |v| v.to_string());
        println!("{:<40} {:<12} {:>5} {:>7} {:>5} {:>6} {:>5}  result", "row", "instance", "want", "formula", "count", "matrix", "table");
        for r in &rows {
            println!(
                "{:<40} {:<12} {:>5} {:>7} {:>5} {:>6} {:>5}  {}",
                r.row,
                r.instance,
                r.expected,
                show(r.formula),
                show(r.count),
                show(r.matrix),
                show(r.table),
                if r.pass { "ok".to_string() } else { format!("FAIL {}", r.error.clone().unwrap_or_default()) }
            );
        }
    }
    let failed: Vec<&str> = rows.iter().filter(|r| !r.pass).map(|r| r.row.as_str()).collect();
    if !failed.is_empty() {
        eprintln!("failing rows: {}", failed.join(", "));
    }
    Ok(failed.is_empty())
}

fn run_oracle(file: &Path, cap: usize, json: bool) -> Result<bool, CoxError> {
    if cap == 0 {
        return Err(CoxError::Input("oracle cap must be positive".into()));
    }
    let inst = load(file)?;
    let sys = System::new(inst.graph.clone())?;
    let oracle = brute_force_centralizer(&sys, &inst.subset, cap)?;
    let analysis = analyze(&inst, &Config { bound: 1, ..Config::default() })?;
    let z = analysis.half_turns.center_order();
    let a = analysis.half_turns.a_group.len() as u64;
    let an = analysis.normalizer.order() as u64;
    let wi = analysis.parabolic_order().unwrap_or(0) as u64;
    let pipeline = analysis.wperp_order().map(|wp| (z * wp * a, wi * wp * an));
    let agree = analysis.y_trivial()
        && pipeline == Some((oracle.centralizer_order, oracle.normalizer_order));
    if json {
        let v = serde_json::json!({ "oracle": oracle, "pipeline": pipeline, "agree": agree });
        println!("{}", serde_json::to_string_pretty(&v).expect("serializes"));
    } else {
        println!("|W| = {}", oracle.group_order);
        println!("|W_I| = {}", oracle.parabolic_order);
        println!("|Z_W(W_I)| = {}", oracle.centralizer_order);
        println!("|N_W(W_I)| = {}", oracle.normalizer_order);
        let names = sys.graph().names();
        for w in &oracle.centralizer_generators {
            let word: Vec<&str> = w.iter().map(|&s| names[s].as_str()).collect();
            println!("  generator {}", word.join(" "));
        }
        match pipeline {
            Some((c, n)) => println!("pipeline: |Z(W_I)||W^perp||A| = {c}, |W_I||W^perp||A_N| = {n}"),
            None => println!("pipeline: W^perp order not certified"),
        }
        println!("{}", if agree { "agree" } else { "DISAGREE" });
    }
    Ok(agree)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Analyze(args) => run_analyze(args, false).map(|_| true),
        Command::Normalizer(args) => run_analyze(args, true).map(|_| true),
        Command::VerifyTables { json } => run_tables(*json),
        Command::Oracle { file, cap, json } => run_oracle(file, *cap, *json),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_INVARIANT as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
