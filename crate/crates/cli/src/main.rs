//! `treegen`: build, evaluate and sweep tree-editing ReLU networks.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use treegen_core::enumerate::{
    stats_table, sweep, EnumerationReport, Strategy, SweepError, SweepPlan,
};
use treegen_core::generative::{default_delta, GenError, Generator, Kind};
use treegen_core::oracle::{edit_ball, ted, BallMode, BallSpec, OpSet, OracleError, Semantics};
use treegen_core::relu::{parse_number, rational_to_string, Coef};
use treegen_core::tree::{decode_euler, join_symbols, parse_symbols};
use treegen_core::LabeledTree;

/// Exit status plus the message printed on stderr.
struct Failure {
    code: u8,
    message: String,
}

fn input(message: impl ToString) -> Failure {
    Failure {
        code: 2,
        message: message.to_string(),
    }
}

fn verification(message: impl ToString) -> Failure {
    Failure {
        code: 1,
        message: message.to_string(),
    }
}

impl From<GenError> for Failure {
    fn from(e: GenError) -> Failure {
        input(e)
    }
}

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Failure {
        match e {
            SweepError::TooLarge { .. } => Failure {
                code: 3,
                message: e.to_string(),
            },
            _ => input(e),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Failure {
        Failure {
            code: 3,
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "treegen",
    version,
    about = "Exact ReLU networks that generate trees within a bounded edit distance"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Ts,
    Td,
    Ti,
    Te,
}

impl From<KindArg> for Kind {
    fn from(k: KindArg) -> Kind {
        match k {
            KindArg::Ts => Kind::Ts,
            KindArg::Td => Kind::Td,
            KindArg::Ti => Kind::Ti,
            KindArg::Te => Kind::Te,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Compositional,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    AtMost,
    Exactly,
}

#[derive(Clone, Copy, ValueEnum)]
enum SemanticsArg {
    Staged,
    General,
}

#[derive(clap::Args)]
struct TreeArgs {
    /// Tree file: vertex count, labels, parents (-1 for the root), one per line.
    #[arg(long)]
    tree: PathBuf,
    /// Alphabet size; defaults to the largest label.
    #[arg(long)]
    m: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Build a network and write it as JSON.
    Build {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[command(flatten)]
        tree: TreeArgs,
        #[arg(long)]
        d: usize,
        /// Input grid of the unified network, e.g. 1/100 or 0.01.
        #[arg(long)]
        delta: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a built network on one input.
    Eval {
        #[arg(long)]
        net: PathBuf,
        /// Comma-separated inputs; integers, decimals or fractions.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        /// Drop sentinel symbols from the output.
        #[arg(long)]
        strip: bool,
        /// Also print the named wire.
        #[arg(long)]
        trace: Vec<String>,
    },
    /// Sweep a network's inputs and report the distinct trees it generates.
    Enumerate {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[command(flatten)]
        tree: TreeArgs,
        #[arg(long)]
        d: usize,
        /// Inserted labels (and substituted ones unless --sub-labels is given).
        #[arg(long, value_delimiter = ',')]
        labels: Option<Vec<u32>>,
        #[arg(long, value_delimiter = ',')]
        sub_labels: Option<Vec<u32>>,
        #[arg(long, value_enum, default_value = "compositional")]
        strategy: StrategyArg,
        #[arg(long)]
        delta: Option<String>,
        /// Refuse sweeps with more evaluations than this.
        #[arg(long, default_value_t = SweepPlan::default().max_evaluations)]
        max_evaluations: u64,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Check a report against the distance oracle and, where feasible, the edit ball.
    Validate {
        #[arg(long)]
        report: PathBuf,
        #[command(flatten)]
        tree: TreeArgs,
        #[arg(long)]
        d: usize,
    },
    /// Depth and width table for built networks, or for networks built on the fly.
    Stats {
        #[arg(long)]
        net: Vec<PathBuf>,
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        #[arg(long = "tree")]
        trees: Vec<PathBuf>,
        #[arg(long)]
        m: Option<u32>,
        #[arg(long)]
        d: Option<usize>,
    },
    /// Print the edit ball of a tree.
    Ball {
        #[command(flatten)]
        tree: TreeArgs,
        #[arg(long)]
        d: usize,
        #[arg(long, value_delimiter = ',')]
        labels: Option<Vec<u32>>,
        #[arg(long, value_enum, default_value = "at-most")]
        mode: ModeArg,
        /// Any of sub, del, ins.
        #[arg(long, value_delimiter = ',', default_value = "sub,del,ins")]
        ops: Vec<String>,
        #[arg(long, value_enum, default_value = "staged")]
        semantics: SemanticsArg,
        /// Skip the size guard.
        #[arg(long)]
        force: bool,
    },
}

fn read_tree(path: &Path, m: Option<u32>) -> Result<LabeledTree, Failure> {
    let text = fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    LabeledTree::parse_text(&text, m).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn read_json(path: &Path) -> Result<serde_json::Value, Failure> {
    let text = fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn delta(arg: Option<&str>) -> Result<Coef, Failure> {
    let Some(s) = arg else {
        return Ok(default_delta());
    };
    let r = parse_number(s).map_err(|e| input(format!("--delta: {e}")))?;
    Coef::from_big(&r).ok_or_else(|| input("--delta out of range"))
}

fn budget(d: usize) -> Result<usize, Failure> {
    if d == 0 {
        return Err(input("--d must be at least 1"));
    }
    Ok(d)
}

fn build(
    kind: KindArg,
    tree: &TreeArgs,
    d: usize,
    delta_arg: Option<&str>,
) -> Result<Generator, Failure> {
    let t = read_tree(&tree.tree, tree.m)?;
    Ok(Generator::build(
        kind.into(),
        &t,
        budget(d)?,
        delta(delta_arg)?,
    )?)
}

fn load(path: &Path) -> Result<Generator, Failure> {
    Ok(Generator::from_json(read_json(path)?)?)
}

fn ops(names: &[String]) -> Result<OpSet, Failure> {
    let mut set = OpSet {
        sub: false,
        del: false,
        ins: false,
    };
    for n in names {
        match n.as_str() {
            "sub" => set.sub = true,
            "del" => set.del = true,
            "ins" => set.ins = true,
            _ => {
                return Err(input(format!(
                    "unknown operation {n:?} (expected sub, del or ins)"
                )))
            }
        }
    }
    Ok(set)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Build {
            kind,
            tree,
            d,
            delta,
            out,
        } => {
            let g = build(kind, &tree, d, delta.as_deref())?;
            let text = serde_json::to_string(&g.to_json()).expect("json");
            write(&out, &text)?;
            let st = g.net.stats();
            println!(
                "{} d={} n={} m={}: #L = {}  #TN = {}  B = {}",
                g.kind,
                g.d,
                g.n(),
                g.m(),
                st.depth,
                st.total,
                g.big_b()
            );
        }
        Command::Eval {
            net,
            x,
            strip,
            trace,
        } => {
            let g = load(&net)?;
            let x = x
                .split(',')
                .map(|s| parse_number(s).map_err(|e| input(format!("--x: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let y = g.eval(&x)?;
            let shown = if strip { g.strip(&y)? } else { y };
            println!("{}", g.format(&shown));
            if !trace.is_empty() {
                let acts = g.net.activations(&x).map_err(input)?;
                for name in trace {
                    let w = g
                        .net
                        .read_wire(&acts, &name)
                        .ok_or_else(|| input(format!("no wire named {name:?}")))?;
                    let vals: Vec<String> = w.iter().map(rational_to_string).collect();
                    println!("{name} = {}", vals.join(","));
                }
            }
        }
        Command::Enumerate {
            kind,
            tree,
            d,
            labels,
            sub_labels,
            strategy,
            delta,
            max_evaluations,
            jobs,
            report,
        } => {
            let g = build(kind, &tree, d, delta.as_deref())?;
            let strategy = match strategy {
                StrategyArg::Compositional => Strategy::Compositional,
                StrategyArg::Full => Strategy::Full,
            };
            let plan = SweepPlan {
                labels,
                sub_labels,
                strategy,
                max_evaluations,
            };
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(input)?;
            let r = pool.install(|| sweep(&g, &plan))?;
            if let Some(path) = report {
                write(&path, &serde_json::to_string_pretty(&r).expect("json"))?;
            }
            print!("{}", r.to_text());
            if r.invalid > 0 {
                return Err(verification(format!(
                    "{} outputs are not valid Euler strings",
                    r.invalid
                )));
            }
        }
        Command::Validate { report, tree, d } => validate(&report, &tree, d)?,
        Command::Stats {
            net,
            kind,
            trees,
            m,
            d,
        } => {
            let mut rows = Vec::new();
            for path in &net {
                let g = load(path)?;
                rows.push((path.display().to_string(), g.kind, g.d, g.net.stats()));
            }
            if !trees.is_empty() {
                let (Some(kind), Some(d)) = (kind, d) else {
                    return Err(input("--tree needs --kind and --d"));
                };
                for path in &trees {
                    let g = Generator::build(
                        kind.into(),
                        &read_tree(path, m)?,
                        budget(d)?,
                        default_delta(),
                    )?;
                    rows.push((path.display().to_string(), g.kind, g.d, g.net.stats()));
                }
            }
            if rows.is_empty() {
                return Err(input("nothing to report: give --net or --tree"));
            }
            print!("{}", stats_table(&rows));
        }
        Command::Ball {
            tree,
            d,
            labels,
            mode,
            ops: names,
            semantics,
            force,
        } => {
            let t = read_tree(&tree.tree, tree.m)?;
            let mode = match mode {
                ModeArg::AtMost => BallMode::AtMost,
                ModeArg::Exactly => BallMode::Exactly,
            };
            let semantics = match semantics {
                SemanticsArg::Staged => Semantics::Staged,
                SemanticsArg::General => Semantics::General,
            };
            let labels = labels.unwrap_or_else(|| (1..=t.alphabet()).collect());
            let mut spec = BallSpec::new(d, labels, mode, ops(&names)?, semantics);
            spec.force = force;
            let ball = edit_ball(&t, &spec)?;
            for s in &ball {
                println!("{}", join_symbols(s, None));
            }
            eprintln!("{} trees", ball.len());
        }
    }
    Ok(())
}

fn validate(path: &Path, tree: &TreeArgs, d: usize) -> Result<(), Failure> {
    let r: EnumerationReport = serde_json::from_value(read_json(path)?)
        .map_err(|e| input(format!("{}: {e}", path.display())))?;
    let t = read_tree(&tree.tree, Some(tree.m.unwrap_or(r.m)))?;
    if r.tree != t.euler().to_string() {
        return Err(input(format!(
            "report was made for tree {} but --tree is {}",
            r.tree,
            t.euler()
        )));
    }
    if r.d != d {
        return Err(input(format!(
            "report was made with d = {} but --d is {d}",
            r.d
        )));
    }
    let mut violations = Vec::new();
    let mut outputs = std::collections::BTreeSet::new();
    for s in &r.outputs {
        let tree_of = parse_symbols(s, None)
            .map_err(|e| e.to_string())
            .and_then(|v| {
                decode_euler(&v, r.m)
                    .map(|u| (v, u))
                    .map_err(|e| e.to_string())
            });
        match tree_of {
            Ok((v, u)) => {
                let k = ted(&t, &u);
                let ok = if r.kind == Kind::Ti { k == d } else { k <= d };
                if !ok {
                    violations.push(format!("{s}: distance {k}"));
                }
                outputs.insert(v);
            }
            Err(e) => violations.push(format!("{s}: {e}")),
        }
    }
    if r.count != r.outputs.len() {
        violations.push(format!(
            "count {} but {} outputs listed",
            r.count,
            r.outputs.len()
        ));
    }
    println!(
        "distances: {} outputs checked, {} violations",
        r.outputs.len(),
        violations.len()
    );

    let spec = match r.kind {
        Kind::Ts => Some(BallSpec::new(
            d,
            r.sub_labels.clone(),
            BallMode::AtMost,
            OpSet::SUB,
            Semantics::Staged,
        )),
        Kind::Td => Some(BallSpec::new(
            d,
            r.labels.clone(),
            BallMode::AtMost,
            OpSet::DEL,
            Semantics::Staged,
        )),
        Kind::Ti => Some(BallSpec::new(
            d,
            r.labels.clone(),
            BallMode::Exactly,
            OpSet::INS,
            Semantics::Staged,
        )),
        Kind::Te => None,
    };
    match spec.map(|s| edit_ball(&t, &s)) {
        None => println!("ball: skipped (no staged ball for the unified network)"),
        Some(Err(e)) => println!("ball: skipped ({e})"),
        Some(Ok(ball)) => {
            let missing: Vec<_> = ball.difference(&outputs).collect();
            let extra: Vec<_> = outputs.difference(&ball).collect();
            println!(
                "ball: {} trees, {} missing, {} extra",
                ball.len(),
                missing.len(),
                extra.len()
            );
            for s in missing {
                violations.push(format!("missing {}", join_symbols(s, None)));
            }
            for s in extra {
                violations.push(format!("outside the ball {}", join_symbols(s, None)));
            }
        }
    }
    for v in &violations {
        println!("  {v}");
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(verification(format!("{} violations", violations.len())))
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
