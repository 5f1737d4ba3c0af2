//! `ngrid`: build, sort, count and measure neighborhood grids.

mod output;

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ngrid_core::combinatorics::{
    census_unique, count_bin_stable, count_fillings, count_stable_fillings, lower_bound_bits,
    max_stable_states_probe, square_tableaux_count, stable_fraction, CensusOptions, LowerBound,
    RankConfig, Sampling,
};
use ngrid_core::io::{
    read_grid_json, read_points_csv, write_census_csv, write_grid_json, write_json,
    write_points_csv, write_quality_csv, write_trace_jsonl, CensusSummary, QualitySummary,
};
use ngrid_core::quality::{
    build_with, gen_adversarial_all, gen_adversarial_single, gen_random, quality_for_grid,
    AdversarialSet, Builder, Distribution, Metric,
};
use ngrid_core::{
    build_stable, default_step_limit, energy, is_stable, placement_digest, run_until_stable, Grid,
    GridError, PointSet, Strategy,
};

use output::Outputs;

const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(name = "ngrid", version, about = "Neighborhood grid construction, sorting and analysis")]
struct Cli {
    /// Worker threads for parallel work (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory that relative output paths are written under.
    #[arg(long, global = true, env = "NGRID_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a stable grid from a points CSV.
    Build {
        /// Points CSV (header required; `id` column optional).
        input: PathBuf,
        #[arg(short, long, default_value = "grid.json")]
        out: PathBuf,
    },
    /// Sort a grid iteratively until it is stable, writing a JSONL trace.
    Iterate {
        /// Grid JSON.
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = StrategyArg::OddEven)]
        strategy: StrategyArg,
        /// Phase budget (default: 4 * cells^2).
        #[arg(long)]
        step_limit: Option<usize>,
        /// Record the placement after every phase.
        #[arg(long)]
        snapshots: bool,
        #[arg(short, long, default_value = "trace.jsonl")]
        out: PathBuf,
        /// Also write the final grid here.
        #[arg(long)]
        final_grid: Option<PathBuf>,
    },
    /// Count rank configurations with exactly one stable state.
    Census {
        #[arg(long)]
        n: usize,
        /// Required for n = 4.
        #[arg(long)]
        long_run: bool,
        #[arg(long, default_value = "census.csv")]
        csv: PathBuf,
        #[arg(long, default_value = "census_summary.json")]
        summary: PathBuf,
        /// Instead, compare the largest stable-state count with the identity's.
        #[arg(long)]
        probe: bool,
        /// Random configurations for the probe (default: exhaustive).
        #[arg(long, requires = "probe")]
        samples: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Print the closed-form counts for an n x n grid.
    Counts {
        #[arg(long)]
        n: usize,
        /// Emit JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Compare one-ring estimates with exact nearest neighbours.
    Quality {
        /// Points CSV; alternative to --gen.
        #[arg(long, conflicts_with = "gen", required_unless_present = "gen")]
        input: Option<PathBuf>,
        #[arg(long, value_enum)]
        gen: Option<GenKind>,
        #[command(flatten)]
        gen_args: GenArgs,
        /// `auto` uses the constructed grid for adversarial sets, `direct` otherwise.
        #[arg(long, value_enum, default_value_t = BuilderArg::Auto)]
        builder: BuilderArg,
        /// Ring radius.
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, value_enum, default_value_t = MetricArg::Euclidean)]
        metric: MetricArg,
        #[arg(short, long, default_value = "quality.json")]
        out: PathBuf,
        /// Per-point records.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write a generated point set as CSV.
    Generate {
        #[arg(value_enum)]
        kind: GenKind,
        #[command(flatten)]
        gen_args: GenArgs,
        #[arg(short, long, default_value = "points.csv")]
        out: PathBuf,
        /// Also write a grid: the constructed one for adversarial sets, id order otherwise.
        #[arg(long)]
        grid: Option<PathBuf>,
    },
    /// Check a grid JSON for stability.
    Verify {
        input: PathBuf,
    },
}

#[derive(Debug, clap::Args)]
struct GenArgs {
    /// Grid side.
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = DistArg::UniformBox)]
    dist: DistArg,
    /// Interleaving depth for adversarial-all.
    #[arg(long, default_value_t = 2)]
    depth: usize,
    /// Rank permutation for `config`, e.g. 1,3,2,4.
    #[arg(long, value_delimiter = ',')]
    perm: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GenKind {
    Random,
    AdversarialSingle,
    AdversarialAll,
    Config,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    FullPass,
    OddEven,
    MaxSwap,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::FullPass => Strategy::FullPass,
            StrategyArg::OddEven => Strategy::OddEvenCycle,
            StrategyArg::MaxSwap => Strategy::MaxSwap,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BuilderArg {
    Auto,
    Direct,
    FullPass,
    OddEven,
    MaxSwap,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MetricArg {
    Euclidean,
    Chebyshev,
    Manhattan,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Euclidean => Metric::Euclidean,
            MetricArg::Chebyshev => Metric::Chebyshev,
            MetricArg::Manhattan => Metric::Manhattan,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DistArg {
    UniformBox,
    IntegerRanks,
}

impl From<DistArg> for Distribution {
    fn from(d: DistArg) -> Self {
        match d {
            DistArg::UniformBox => Distribution::UniformBox,
            DistArg::IntegerRanks => Distribution::IntegerRanks,
        }
    }
}

/// A check that ran but did not hold (unstable grid, no convergence).
#[derive(Debug)]
struct InvariantFailed(String);

impl std::fmt::Display for InvariantFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InvariantFailed {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<InvariantFailed>() {
            return 3;
        }
        match cause.downcast_ref::<GridError>() {
            Some(GridError::GuardExceeded { .. }) => return 2,
            Some(GridError::NotConverged { .. } | GridError::NotStable) => return 3,
            _ => {}
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring thread pool")?;
    }
    let outputs = Outputs::new(cli.out_dir);
    match cli.command {
        Command::Build { input, out } => cmd_build(&outputs, &input, &out),
        Command::Iterate {
            input,
            strategy,
            step_limit,
            snapshots,
            out,
            final_grid,
        } => cmd_iterate(&outputs, &input, strategy.into(), step_limit, snapshots, &out, final_grid),
        Command::Census {
            n,
            long_run,
            csv,
            summary,
            probe,
            samples,
            seed,
        } => {
            if probe {
                cmd_probe(n, samples, seed)
            } else {
                cmd_census(&outputs, n, long_run, &csv, &summary)
            }
        }
        Command::Counts { n, json } => cmd_counts(n, json),
        Command::Quality {
            input,
            gen,
            gen_args,
            builder,
            k,
            metric,
            out,
            csv,
        } => cmd_quality(&outputs, input, gen, &gen_args, builder, k, metric.into(), &out, csv),
        Command::Generate {
            kind,
            gen_args,
            out,
            grid,
        } => cmd_generate(&outputs, kind, &gen_args, &out, grid),
        Command::Verify { input } => cmd_verify(&input),
    }
}

fn read_points(path: &PathBuf) -> Result<PointSet> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_points_csv(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn read_grid(path: &PathBuf) -> Result<Grid> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_grid_json(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn cmd_build(outputs: &Outputs, input: &PathBuf, out: &PathBuf) -> Result<()> {
    let ps = read_points(input)?;
    let g = build_stable(&ps)?;
    let path = outputs.write(out, |w| Ok(write_grid_json(&g, w)?))?;
    let report = is_stable(&g);
    println!(
        "built {}x{} grid ({} points, {} padding) -> {}",
        g.n(),
        g.n(),
        ps.len(),
        g.padding_ids().len(),
        path.display()
    );
    println!("stable: {}", report.stable);
    println!("energy: {}", energy(&g));
    if !report.stable {
        return Err(InvariantFailed(format!("{} ordering violations", report.violations.len())).into());
    }
    Ok(())
}

fn cmd_iterate(
    outputs: &Outputs,
    input: &PathBuf,
    strategy: Strategy,
    step_limit: Option<usize>,
    snapshots: bool,
    out: &PathBuf,
    final_grid: Option<PathBuf>,
) -> Result<()> {
    let g = read_grid(input)?;
    let limit = step_limit.unwrap_or_else(|| default_step_limit(g.cell_count()));
    let trace = run_until_stable(&g, strategy, limit, snapshots)?;
    let path = outputs.write(out, |w| Ok(write_trace_jsonl(&g, &trace, w)?))?;
    if let Some(final_path) = final_grid {
        outputs.write(&final_path, |w| Ok(write_grid_json(&trace.final_grid, w)?))?;
    }
    let final_energy = trace.energies().last().unwrap_or(trace.initial_energy);
    println!("steps: {} -> {}", trace.step_count, path.display());
    println!("energy: {} -> {}", trace.initial_energy, final_energy);
    println!("converged: {}", trace.converged);
    println!("stable: {}", is_stable(&trace.final_grid).stable);
    if !trace.converged {
        return Err(GridError::NotConverged { steps: trace.step_count }.into());
    }
    Ok(())
}

fn cmd_census(outputs: &Outputs, n: usize, long_run: bool, csv: &PathBuf, summary: &PathBuf) -> Result<()> {
    let result = census_unique(n, CensusOptions { long_run })
        .with_context(|| if n == 4 && !long_run { "n = 4 needs --long-run" } else { "census" })?;
    let csv_path = outputs.write(csv, |w| Ok(write_census_csv(&result, w)?))?;
    let summary_doc = CensusSummary::from(&result);
    let summary_path = outputs.write(summary, |w| Ok(write_json(&summary_doc, w)?))?;
    println!("n: {n}");
    println!("configurations examined: {}", result.configs_examined);
    if let Some(published) = result.published_candidates {
        println!("published candidate count: {published}");
    }
    println!("unique: {}", result.unique_count);
    println!("stable states: {}..={}", result.min_stable_states, result.max_stable_states);
    println!("runtime: {:.3}s", result.runtime_seconds);
    println!("wrote {} and {}", csv_path.display(), summary_path.display());
    Ok(())
}

fn cmd_probe(n: usize, samples: Option<usize>, seed: u64) -> Result<()> {
    let sampling = match samples {
        Some(samples) => {
            eprintln!("seed: {seed}");
            Sampling::Random { samples, seed }
        }
        None => Sampling::Exhaustive,
    };
    let probe = max_stable_states_probe(n, sampling)?;
    println!("configurations examined: {}", probe.configs_examined);
    println!("identity stable states: {}", probe.identity_count);
    println!("max stable states: {} at [{}]", probe.max_observed, probe.argmax);
    if probe.counterexample {
        eprintln!("!!! COUNTEREXAMPLE: [{}] has {} stable states, more than the identity's {} !!!",
            probe.argmax, probe.max_observed, probe.identity_count);
    }
    Ok(())
}

#[derive(Serialize)]
struct CountsRow {
    n: usize,
    fillings: String,
    stable_fillings: String,
    stable_fraction: String,
    bin_stable: String,
    square_tableaux: String,
    lower_bound: LowerBound,
}

fn cmd_counts(n: usize, json: bool) -> Result<()> {
    if n == 0 {
        bail!("n must be positive");
    }
    let row = CountsRow {
        n,
        fillings: count_fillings(n).1.to_string(),
        stable_fillings: count_stable_fillings(n).to_string(),
        stable_fraction: stable_fraction(n).to_string(),
        bin_stable: count_bin_stable(n).to_string(),
        square_tableaux: square_tableaux_count(n).to_string(),
        lower_bound: lower_bound_bits(n),
    };
    if json {
        write_json(&row, io::stdout().lock())?;
        return Ok(());
    }
    let mut out = io::stdout().lock();
    writeln!(out, "n                    {}", row.n)?;
    writeln!(out, "fillings             {}", row.fillings)?;
    writeln!(out, "stable fillings      {}", row.stable_fillings)?;
    writeln!(out, "stable fraction      {}", row.stable_fraction)?;
    writeln!(out, "bin-stable           {}", row.bin_stable)?;
    writeln!(out, "square tableaux      {}", row.square_tableaux)?;
    writeln!(out, "lower bound (bits)   {:.3}", row.lower_bound.exact_bits)?;
    writeln!(out, "  hook sum           {:.3}", row.lower_bound.summation_bits)?;
    writeln!(out, "  closed form        {:.3}", row.lower_bound.closed_form_bits)?;
    Ok(())
}

/// A generated set and, for adversarial kinds, its constructed grid.
fn generate(kind: GenKind, args: &GenArgs) -> Result<(PointSet, Option<AdversarialSet>)> {
    match kind {
        GenKind::Random => {
            eprintln!("seed: {}", args.seed);
            Ok((gen_random(args.n, args.d, args.seed, args.dist.into())?, None))
        }
        GenKind::AdversarialSingle => {
            let set = gen_adversarial_single(args.n)?;
            Ok((set.points.clone(), Some(set)))
        }
        GenKind::AdversarialAll => {
            let set = gen_adversarial_all(args.n, args.depth)?;
            Ok((set.points.clone(), Some(set)))
        }
        GenKind::Config => {
            let cfg = if args.perm.is_empty() {
                RankConfig::identity(args.n)
            } else {
                RankConfig::new(args.n, args.perm.clone())?
            };
            Ok((cfg.to_point_set(), None))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_quality(
    outputs: &Outputs,
    input: Option<PathBuf>,
    gen: Option<GenKind>,
    gen_args: &GenArgs,
    builder: BuilderArg,
    k: usize,
    metric: Metric,
    out: &PathBuf,
    csv: Option<PathBuf>,
) -> Result<()> {
    let (ps, adversarial) = match (input, gen) {
        (Some(path), _) => (read_points(&path)?, None),
        (None, Some(kind)) => generate(kind, gen_args)?,
        (None, None) => bail!("either --input or --gen is required"),
    };
    let grid = match (builder, &adversarial) {
        (BuilderArg::Auto, Some(set)) => set.reference.clone(),
        (BuilderArg::Auto | BuilderArg::Direct, _) => build_with(&ps, Builder::Direct)?,
        (BuilderArg::FullPass, _) => build_with(&ps, Builder::FullPass)?,
        (BuilderArg::OddEven, _) => build_with(&ps, Builder::OddEven)?,
        (BuilderArg::MaxSwap, _) => build_with(&ps, Builder::MaxSwap)?,
    };
    let mut report = quality_for_grid(&grid, k, metric)?;
    report.builder = match builder {
        BuilderArg::Auto if adversarial.is_some() => None,
        BuilderArg::Auto | BuilderArg::Direct => Some(Builder::Direct),
        BuilderArg::FullPass => Some(Builder::FullPass),
        BuilderArg::OddEven => Some(Builder::OddEven),
        BuilderArg::MaxSwap => Some(Builder::MaxSwap),
    };
    let summary = QualitySummary::from(&report);
    let path = outputs.write(out, |w| Ok(write_json(&summary, w)?))?;
    if let Some(csv) = csv {
        outputs.write(&csv, |w| Ok(write_quality_csv(&report, w)?))?;
    }
    println!("points: {}, grid {}x{}, ring radius {k}", report.point_count, report.n, report.n);
    println!("stable: {}", is_stable(&grid).stable);
    println!("hit rate: {}", report.hit_rate);
    println!("one-ring hit rate: {}", report.one_ring_hit_rate);
    println!("mean ring distance: {:.4}", report.mean_ring_distance);
    if let Some(set) = adversarial.as_ref().filter(|_| gen == Some(GenKind::AdversarialSingle)) {
        let label = |id: usize| set.labels[id - 1].as_str();
        let p = set.id_of("p").context("generated set has no p")?;
        if let Some(rec) = report.records.iter().find(|r| r.query_id == p) {
            println!(
                "p: estimate {}, exact neighbour {}",
                rec.estimated_id.map_or("none", label),
                label(rec.true_id)
            );
        }
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_generate(outputs: &Outputs, kind: GenKind, args: &GenArgs, out: &PathBuf, grid: Option<PathBuf>) -> Result<()> {
    let (ps, adversarial) = generate(kind, args)?;
    let path = outputs.write(out, |w| Ok(write_points_csv(&ps, w)?))?;
    println!("{} points -> {}", ps.len(), path.display());
    if let Some(grid_path) = grid {
        let g = match adversarial {
            Some(set) => set.reference,
            None => {
                let n = ngrid_core::side_length_for(ps.len(), ps.dim());
                if n.pow(ps.dim() as u32) != ps.len() {
                    bail!("an id-order grid needs exactly n^d points, got {}", ps.len());
                }
                Grid::from_id_order(ps, n)?
            }
        };
        let path = outputs.write(&grid_path, |w| Ok(write_grid_json(&g, w)?))?;
        println!("grid -> {}", path.display());
    }
    Ok(())
}

fn cmd_verify(input: &PathBuf) -> Result<()> {
    let g = read_grid(input)?;
    let report = is_stable(&g);
    println!("n: {}, d: {}, padding: {}", g.n(), g.dim(), g.padding_ids().len());
    println!("energy: {}", energy(&g));
    println!("digest: {}", placement_digest(&g));
    println!("stable: {}", report.stable);
    for v in report.violations.iter().take(20) {
        println!("  axis {}: {} is not below {}", v.axis, v.lower, v.upper);
    }
    if report.violations.len() > 20 {
        println!("  ... {} more", report.violations.len() - 20);
    }
    if !report.stable {
        return Err(InvariantFailed(format!("{} ordering violations", report.violations.len())).into());
    }
    Ok(())
}
