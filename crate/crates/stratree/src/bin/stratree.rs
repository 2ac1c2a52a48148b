//! Thin command-line front end over the library; every subcommand is a
//! one-call wrapper around a library operation.
//!
//! Exit codes: 0 on success, 2 when safety synthesis is unsatisfiable from
//! the initial state, 3 when tree construction stops on a leaf without a
//! pure action (minimum split size too large), 1 for any other error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stratree::cruise::{self, CruiseError, CruiseModel};
use stratree::harness::{self, HarnessError, TablePolicy, TreePolicy};
use stratree::strategy::{load_strategy, save_strategy};
use stratree::tree::{learn, DecisionTree, TreeError};
use stratree::view::DeterminizeRule;
use stratree::{codegen, prune};

#[derive(Parser)]
#[command(
    name = "stratree",
    about = "Learn, reduce, export, and evaluate decision-tree controller strategies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Seed for anything randomized.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the maximally permissive safe strategy of a cruise model.
    SynthSafe {
        /// Cruise model options file (JSON); defaults apply when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Value-iterate within an allowed strategy and emit the greedy
    /// deterministic sub-strategy.
    Optimize {
        #[arg(long)]
        model: Option<PathBuf>,
        /// Allowed (permissive) strategy file.
        #[arg(long)]
        allowed: PathBuf,
        /// Horizon in decision points; the model default when omitted.
        #[arg(long)]
        horizon: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// Learn a decision tree from a strategy file.
    LearnDt {
        #[arg(long)]
        strategy: PathBuf,
        /// Minimum node size considered for splitting (2 = exact tree).
        #[arg(long, default_value_t = 2)]
        min_split: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Apply rounds of safe pruning to a tree file.
    Prune {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, default_value_t = 1)]
        prune_rounds: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Export a tree as nested-if C code.
    ExportCode {
        #[arg(long)]
        tree: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Size-comparison CSV: list, relevant entries, BDD min/med/max over
    /// random initial orders, exact tree size.
    BddReport {
        #[arg(long)]
        strategy: PathBuf,
        /// Name for the CSV's model column.
        #[arg(long, default_value = "strategy")]
        name: String,
        /// Number of random initial variable orders.
        #[arg(long, default_value_t = 40)]
        orders: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Monte-Carlo evaluation of a strategy or tree on a cruise model.
    Simulate {
        #[arg(long)]
        model: Option<PathBuf>,
        /// Deterministic strategy file (mutually exclusive with --tree).
        #[arg(long, conflicts_with = "tree")]
        strategy: Option<PathBuf>,
        /// Tree file; determinized per --rule.
        #[arg(long)]
        tree: Option<PathBuf>,
        /// Determinization for trees: "lex" or "uniform".
        #[arg(long, default_value = "lex")]
        rule: String,
        #[arg(long)]
        horizon: Option<u32>,
        #[arg(long, default_value_t = 1000)]
        runs: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Full k x p size/performance sweep over a safe strategy.
    Sweep {
        #[arg(long)]
        model: Option<PathBuf>,
        /// Safe (permissive) strategy file.
        #[arg(long)]
        safe: PathBuf,
        /// Comma-separated minimum split sizes.
        #[arg(long, value_delimiter = ',', default_value = "2,10,100")]
        ks: Vec<u32>,
        /// Comma-separated safe-pruning round counts.
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        ps: Vec<u32>,
        #[arg(long)]
        horizon: Option<u32>,
        #[arg(long, default_value_t = 1000)]
        runs: usize,
        /// Add columns normalizing size and cost against the (2, 0) cell.
        #[arg(long)]
        ratios: bool,
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(CruiseError::Unsatisfiable(_)) = cause.downcast_ref::<CruiseError>() {
            return 2;
        }
        if let Some(TreeError::NoPureAction { .. }) = cause.downcast_ref::<TreeError>() {
            return 3;
        }
        if let Some(HarnessError::Tree(TreeError::NoPureAction { .. })) =
            cause.downcast_ref::<HarnessError>()
        {
            return 3;
        }
    }
    1
}

fn load_model(path: &Option<PathBuf>) -> Result<CruiseModel, anyhow::Error> {
    Ok(match path {
        Some(p) => CruiseModel::load(p)?,
        None => CruiseModel::default(),
    })
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), anyhow::Error> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn run(command: Command) -> Result<(), anyhow::Error> {
    match command {
        Command::SynthSafe { model, common } => {
            let model = load_model(&model)?;
            let safe = cruise::synthesize_safe(&model)?;
            let table = safe.to_table(&model)?;
            eprintln!(
                "safe states: {} of {} grid states",
                table.len(),
                model.grid().len()
            );
            match &common.out {
                Some(path) => save_strategy(&table, path)?,
                None => {
                    let mut buf = Vec::new();
                    stratree::strategy::write_strategy(&table, &mut buf)?;
                    std::io::stdout().write_all(&buf)?;
                }
            }
            Ok(())
        }
        Command::Optimize {
            model,
            allowed,
            horizon,
            common,
        } => {
            let model = load_model(&model)?;
            let allowed = load_strategy(allowed)?;
            let horizon = horizon.unwrap_or(model.horizon);
            let opt = cruise::optimize(&model, &allowed, horizon)?;
            eprintln!(
                "expected cost from {:?} at horizon {}: {:.3}",
                model.initial,
                horizon,
                opt.value(model.initial)
            );
            match &common.out {
                Some(path) => save_strategy(&opt.strategy, path)?,
                None => {
                    let mut buf = Vec::new();
                    stratree::strategy::write_strategy(&opt.strategy, &mut buf)?;
                    std::io::stdout().write_all(&buf)?;
                }
            }
            Ok(())
        }
        Command::LearnDt {
            strategy,
            min_split,
            common,
        } => {
            let table = load_strategy(strategy)?;
            let tree = learn(&table, min_split)?;
            eprintln!("tree: {} nodes, depth {}", tree.size(), tree.depth());
            emit(&common.out, &tree.to_json())
        }
        Command::Prune {
            tree,
            prune_rounds,
            common,
        } => {
            let tree = DecisionTree::load(tree)?;
            let pruned = prune::safe_prune(&tree, prune_rounds)?;
            eprintln!("{} nodes -> {} nodes", tree.size(), pruned.size());
            emit(&common.out, &pruned.to_json())
        }
        Command::ExportCode { tree, common } => {
            let tree = DecisionTree::load(tree)?;
            if !codegen::exportable(&tree) {
                anyhow::bail!("tree has a leaf without a pure action and cannot be exported");
            }
            let code = codegen::export_code(&tree, codegen::Dialect::CLike);
            emit(&common.out, &code)
        }
        Command::BddReport {
            strategy,
            name,
            orders,
            common,
        } => {
            let table = load_strategy(strategy)?;
            let report = harness::size_report(&name, &table, orders, common.seed)?;
            let text = format!(
                "{}\n{}\n",
                harness::SizeReport::csv_header(),
                report.to_csv_row()
            );
            emit(&common.out, &text)
        }
        Command::Simulate {
            model,
            strategy,
            tree,
            rule,
            horizon,
            runs,
            common,
        } => {
            let model = load_model(&model)?;
            let horizon = horizon.unwrap_or(model.horizon);
            let est = match (&strategy, &tree) {
                (Some(path), None) => {
                    let table = load_strategy(path)?;
                    harness::estimate_expected_cost(
                        &model,
                        |_| TablePolicy::new(&table),
                        horizon,
                        runs,
                        common.seed,
                    )?
                }
                (None, Some(path)) => {
                    let tree = DecisionTree::load(path)?;
                    let seed = common.seed;
                    harness::estimate_expected_cost(
                        &model,
                        |i| {
                            let rule = match rule.as_str() {
                                "uniform" => {
                                    DeterminizeRule::UniformSeeded(seed ^ (i.wrapping_mul(0x9e37)))
                                }
                                _ => DeterminizeRule::LexicographicFirst,
                            };
                            TreePolicy::new(&tree, rule)
                        },
                        horizon,
                        runs,
                        common.seed,
                    )?
                }
                _ => anyhow::bail!("pass exactly one of --strategy or --tree"),
            };
            let text = format!(
                "runs,horizon,mean_cost,ci_half_width,violations\n{},{},{:.4},{:.4},{}\n",
                est.n_runs, horizon, est.mean, est.ci_half_width, est.violations
            );
            emit(&common.out, &text)
        }
        Command::Sweep {
            model,
            safe,
            ks,
            ps,
            horizon,
            runs,
            ratios,
            common,
        } => {
            let model = load_model(&model)?;
            let safe_table = load_strategy(safe)?;
            let horizon = horizon.unwrap_or(model.horizon);
            let cells =
                harness::sweep(&model, &safe_table, &ks, &ps, horizon, runs, common.seed)?;
            emit(&common.out, &harness::sweep_csv(&cells, ratios))
        }
    }
}
