//! Command-line surface over MRIO bundles: validate, synthesize, extract
//! and export value trees, and print forest statistics, allometric fits,
//! rankings and measure correlations.
//!
//! Exit codes: 0 success, 1 input or validation error, 2 numerical failure.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use gvtree::bundle::{load_bundle, load_bundle_unvalidated, synth_mrio, write_bundle, SynthSpec};
use gvtree::export::{export_tree_dot, export_tree_json, TreeStyling};
use gvtree::importance::{
    best_trees_for, country_aggregate, importance_vector, log_pearson, rank_top_k, tree_importance,
    world_gdp, TreeSplit,
};
use gvtree::mrio::{
    aggregate_final_demand, contribution_matrix, leontief_inverse, technical_coefficients,
    validate_accounting, value_added_shares, MrioTable, DEFAULT_TOLERANCE,
};
use gvtree::network::{
    betweenness, build_network, closeness, pagerank, total_value_added, Measure, MeasureTable,
    ValueNetwork,
};
use gvtree::tree::{allometric_exponent, extract_forest, extract_tree, forest_stats};
use gvtree::{
    Error, Result, DEFAULT_ALPHA, DEFAULT_DAMPING, DEFAULT_GAMMA, DEFAULT_PAGERANK_MAX_ITER,
    DEFAULT_PAGERANK_TOL, REST_OF_WORLD,
};

#[derive(Parser)]
#[command(
    name = "gvtree",
    version,
    about = "Global value networks and trees from MRIO bundles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TreeFormat {
    Dot,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    Ti,
    Cc,
    Bc,
    Pr,
    Vt,
}

impl From<MeasureArg> for Measure {
    fn from(value: MeasureArg) -> Measure {
        match value {
            MeasureArg::Ti => Measure::TreeImportance,
            MeasureArg::Cc => Measure::Closeness,
            MeasureArg::Bc => Measure::Betweenness,
            MeasureArg::Pr => Measure::Pagerank,
            MeasureArg::Vt => Measure::ValueAdded,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Domestic,
    Foreign,
    All,
}

impl From<SplitArg> for TreeSplit {
    fn from(value: SplitArg) -> TreeSplit {
        match value {
            SplitArg::Domestic => TreeSplit::Domestic,
            SplitArg::Foreign => TreeSplit::Foreign,
            SplitArg::All => TreeSplit::All,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check the accounting identities of a bundle and print the report.
    Validate {
        bundle: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
    },
    /// Write a synthetic bundle.
    Synth {
        #[arg(long)]
        countries: usize,
        #[arg(long)]
        industries: usize,
        #[arg(long, default_value_t = 0.6)]
        spectral_radius: f64,
        #[arg(long, default_value_t = 0.5)]
        domestic_bias: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract the value tree of one sector and export it.
    Tree {
        bundle: PathBuf,
        /// Root sector, e.g. USA_1 or USA_Agr.
        #[arg(long)]
        root: String,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_GAMMA)]
        gamma: u32,
        #[arg(long, value_enum, default_value_t = TreeFormat::Dot)]
        format: TreeFormat,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summary statistics of tree sizes over the whole forest.
    ForestStats {
        bundle: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_GAMMA)]
        gamma: u32,
    },
    /// Allometric scaling fit and the root (X, Y) point cloud.
    Allometry {
        bundle: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_GAMMA)]
        gamma: u32,
    },
    /// Top-k sectors (or countries) by one measure.
    Rank {
        bundle: PathBuf,
        #[arg(long, value_enum)]
        measure: MeasureArg,
        #[arg(long, default_value_t = 20)]
        top: usize,
        /// Aggregate scores per country before ranking.
        #[arg(long)]
        by_country: bool,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_GAMMA)]
        gamma: u32,
    },
    /// Pearson correlations of the five measures on logs.
    Correlate {
        bundle: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_GAMMA)]
        gamma: u32,
    },
    /// The trees where one sector has the highest importance score.
    BestTrees {
        bundle: PathBuf,
        /// Sector, e.g. CHN_14 or CHN_Elc.
        #[arg(long)]
        node: String,
        #[arg(long, value_enum, default_value_t = SplitArg::All)]
        split: SplitArg,
        #[arg(long, default_value_t = 1)]
        top: usize,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_GAMMA)]
        gamma: u32,
    },
}

fn main() -> ExitCode {
    // Die quietly when a pager closes the pipe instead of panicking on
    // the next print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    env_logger::init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Validate { bundle, tolerance } => validate(&bundle, tolerance),
        Command::Synth {
            countries,
            industries,
            spectral_radius,
            domestic_bias,
            seed,
            out,
        } => {
            let table = synth_mrio(&SynthSpec {
                n_countries: countries,
                n_industries: industries,
                target_spectral_radius: spectral_radius,
                domestic_bias,
                seed,
            })?;
            write_bundle(&table, &out)?;
            println!(
                "wrote bundle with {} sectors to {}",
                table.sector_count(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Tree {
            bundle,
            root,
            alpha,
            gamma,
            format,
            out,
        } => tree(&bundle, &root, alpha, gamma, format, out.as_deref()),
        Command::ForestStats {
            bundle,
            alpha,
            gamma,
        } => {
            let (_, net) = load_network(&bundle)?;
            let forest = extract_forest(&net, alpha, gamma)?;
            let stats = forest_stats(&forest);
            println!("alpha {alpha}  gamma {gamma}  year {}", net.year);
            println!("# Obs.  {}", stats.count);
            let fmt_count = |v: Option<usize>| v.map_or("-".to_string(), |v| v.to_string());
            let fmt_real = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
            println!("Min     {}", fmt_count(stats.min));
            println!("Max     {}", fmt_count(stats.max));
            println!("Mean    {}", fmt_real(stats.mean));
            println!("CV      {}", fmt_real(stats.cv));
            Ok(ExitCode::SUCCESS)
        }
        Command::Allometry {
            bundle,
            alpha,
            gamma,
        } => {
            let (_, net) = load_network(&bundle)?;
            let forest = extract_forest(&net, alpha, gamma)?;
            let fit = allometric_exponent(&forest)?;
            println!("n_trees {}", fit.points.len());
            println!("eta {:.6}", fit.eta);
            println!("eta_star {:.6}", fit.eta_star);
            println!("eta_chain {:.6}", fit.eta_chain);
            println!("intercept {:.6}", fit.intercept);
            println!("r_squared {:.6}", fit.r_squared);
            println!("X\tY");
            for (x, y) in &fit.points {
                println!("{x}\t{y}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Rank {
            bundle,
            measure,
            top,
            by_country,
            alpha,
            gamma,
        } => rank(&bundle, measure.into(), top, by_country, alpha, gamma),
        Command::Correlate {
            bundle,
            alpha,
            gamma,
        } => {
            let (table, net) = load_network(&bundle)?;
            let measures = all_measures(&table, &net, alpha, gamma)?;
            let corr = log_pearson(&measures)?;
            println!("n_common {}", corr.n_common);
            print!("{:<10}", "");
            for m in corr.measures {
                print!("{:<12}", format!("log({})", m.label()));
            }
            println!();
            for i in 0..5 {
                print!("{:<10}", format!("log({})", corr.measures[i].label()));
                for j in 0..=i {
                    if i == j {
                        print!("{:<12}", "1");
                    } else {
                        print!("{:<12}", format!("{:.3}{}", corr.r[i][j], corr.stars(i, j)));
                    }
                }
                println!();
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::BestTrees {
            bundle,
            node,
            split,
            top,
            alpha,
            gamma,
        } => best_trees(&bundle, &node, split.into(), top, alpha, gamma),
    }
}

fn validate(bundle: &Path, tolerance: f64) -> Result<ExitCode> {
    let table = load_bundle_unvalidated(bundle)?;
    let report = validate_accounting(&table, tolerance)?;
    println!(
        "{} sectors, tolerance {tolerance:e}, max row residual {:.3e}, max column residual {:.3e}",
        table.sector_count(),
        report.row_residuals.iter().copied().fold(0.0, f64::max),
        report.column_residuals.iter().copied().fold(0.0, f64::max),
    );
    if !report.negative_value_added.is_empty() {
        let labels: Vec<String> = report
            .negative_value_added
            .iter()
            .map(|&j| table.sectors[j].label())
            .collect();
        println!("warning: negative value added at {}", labels.join(", "));
    }
    for failure in &report.failures {
        let label = table.sectors[failure.index].label();
        println!("FAIL {failure} ({label})");
    }
    if report.passed() {
        println!("OK: all accounting identities hold");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("FAILED: {} identity violation(s)", report.failures.len());
        Ok(ExitCode::from(1))
    }
}

fn tree(
    bundle: &Path,
    root: &str,
    alpha: f64,
    gamma: u32,
    format: TreeFormat,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let (_, net) = load_network(bundle)?;
    let root_pos = net
        .find_label(root)
        .ok_or_else(|| Error::UnknownSector(root.to_string()))?;
    let root_index = net.nodes[root_pos].index;
    match extract_tree(&net, root_index, alpha, gamma)? {
        None => {
            eprintln!("tree of {root} is empty: no contributor above alpha {alpha}");
            Ok(ExitCode::SUCCESS)
        }
        Some(tree) => {
            let text = match format {
                TreeFormat::Dot => export_tree_dot(&tree, &TreeStyling::default()),
                TreeFormat::Json => export_tree_json(&tree),
            };
            match out {
                Some(path) => fs::write(path, text)?,
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn rank(
    bundle: &Path,
    measure: Measure,
    top: usize,
    by_country: bool,
    alpha: f64,
    gamma: u32,
) -> Result<ExitCode> {
    let (table, net) = load_network(bundle)?;
    let scores = one_measure(&table, &net, measure, alpha, gamma)?;
    if by_country {
        let totals = country_aggregate(&scores, &net.nodes)?;
        println!("rank  country  {}", measure.label());
        for (i, (country, total)) in totals.iter().take(top).enumerate() {
            println!("{:<5} {:<8} {:.6e}", i + 1, country, total);
        }
    } else {
        let ranked = rank_top_k(&scores, &net.nodes, top)?;
        println!("rank  sector      industry  {}", measure.label());
        for (i, (sector, score)) in ranked.iter().enumerate() {
            println!(
                "{:<5} {:<11} {:<9} {:.6e}",
                i + 1,
                sector.label(),
                sector.industry,
                score
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn best_trees(
    bundle: &Path,
    node: &str,
    split: TreeSplit,
    top: usize,
    alpha: f64,
    gamma: u32,
) -> Result<ExitCode> {
    let (table, net) = load_network(bundle)?;
    let node_pos = net
        .find_label(node)
        .ok_or_else(|| Error::UnknownSector(node.to_string()))?;
    let node_index = net.nodes[node_pos].index;
    let forest = extract_forest(&net, alpha, gamma)?;
    let f = aggregate_final_demand(&table)?;
    let breakdowns = tree_importance(&forest, &f, world_gdp(&table, &net))?;
    println!("root        score");
    if let Some(breakdown) = breakdowns.get(&node_index) {
        for pick in best_trees_for(breakdown, split, top) {
            println!("{:<11} {:.6e}", pick.root.label(), pick.score);
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Load a bundle and build its value network, dropping the rest-of-world
/// block.
fn load_network(bundle: &Path) -> Result<(MrioTable, ValueNetwork)> {
    let table = load_bundle(bundle)?;
    let coeff = technical_coefficients(&table)?;
    let leontief = leontief_inverse(&coeff)?;
    let shares = value_added_shares(&table)?;
    let g = contribution_matrix(&shares, &leontief)?;
    let drop: BTreeSet<String> = [REST_OF_WORLD.to_string()].into();
    let net = build_network(&g, &table.sectors, table.year, &drop)?;
    Ok((table, net))
}

fn one_measure(
    table: &MrioTable,
    net: &ValueNetwork,
    measure: Measure,
    alpha: f64,
    gamma: u32,
) -> Result<Vec<f64>> {
    match measure {
        Measure::TreeImportance => {
            let forest = extract_forest(net, alpha, gamma)?;
            let f = aggregate_final_demand(table)?;
            let breakdowns = tree_importance(&forest, &f, world_gdp(table, net))?;
            Ok(importance_vector(net, &breakdowns))
        }
        Measure::Closeness => Ok(closeness(net)),
        Measure::Betweenness => Ok(betweenness(net)),
        Measure::Pagerank => pagerank(
            net,
            DEFAULT_DAMPING,
            DEFAULT_PAGERANK_TOL,
            DEFAULT_PAGERANK_MAX_ITER,
        ),
        Measure::ValueAdded => total_value_added(table, net),
    }
}

fn all_measures(
    table: &MrioTable,
    net: &ValueNetwork,
    alpha: f64,
    gamma: u32,
) -> Result<MeasureTable> {
    let forest = extract_forest(net, alpha, gamma)?;
    let f = aggregate_final_demand(table)?;
    let breakdowns = tree_importance(&forest, &f, world_gdp(table, net))?;
    MeasureTable::new(
        net.nodes.clone(),
        importance_vector(net, &breakdowns),
        closeness(net),
        betweenness(net),
        pagerank(
            net,
            DEFAULT_DAMPING,
            DEFAULT_PAGERANK_TOL,
            DEFAULT_PAGERANK_MAX_ITER,
        )?,
        total_value_added(table, net)?,
        net.year,
    )
}
