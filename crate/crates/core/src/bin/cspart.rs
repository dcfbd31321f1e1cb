use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use cspart::ccsp::{ccsp_partition, parse_partition_report};
use cspart::comm_graph::{is_connected_cover, CommGraph};
use cspart::dcsp::{lifetime_simulation, EnergyConfig, SimState};
use cspart::geometry::{deploy, make_grid_explicit, make_grid_from_ranges, Deployment};
use cspart::harness::{
    election_seed, emit_csv, parse_csv, run_experiment, summarize, summary_csv, Algorithm, ExperimentConfig,
    DEFAULT_LP, DEFAULT_RANGE,
};
use cspart::NodeSet;

const EXIT_INVALID: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "cspart",
    version,
    about = "Connected set-cover partitioning for sensor fields"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random deployment.
    Generate(FieldArgs),
    /// Partition with the centralized algorithm and print the partition report.
    Ccsp(FieldArgs),
    /// Run the distributed protocol and print the partition report.
    Dcsp(FieldArgs),
    /// Run the distributed protocol, then round-robin service until coverage is lost.
    Lifetime {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        energy: EnergyArgs,
    },
    /// Run a full experiment campaign and write result rows as CSV.
    Campaign(CampaignArgs),
    /// Verify a partition report (and optionally a result CSV) against a deployment.
    Check(CheckArgs),
}

#[derive(Args)]
struct FieldArgs {
    /// Number of nodes.
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Query region width and height.
    #[arg(long, num_args = 2, value_names = ["W", "H"], default_values_t = [50.0, 50.0])]
    region: Vec<f64>,
    /// Grid rows and columns; derived from the ranges when omitted.
    #[arg(long, num_args = 2, value_names = ["R", "C"])]
    grid: Option<Vec<usize>>,
    /// Sensing range.
    #[arg(long, default_value_t = DEFAULT_RANGE)]
    s: f64,
    /// Transmission range.
    #[arg(long, default_value_t = DEFAULT_RANGE)]
    t: f64,
    /// Leader self-election probability.
    #[arg(long, default_value_t = DEFAULT_LP)]
    lp: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Read the deployment from this file instead of generating one.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the protocol's transmission trace to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct EnergyArgs {
    #[arg(long, default_value_t = EnergyConfig::default().initial_energy)]
    e0: f64,
    #[arg(long, default_value_t = EnergyConfig::default().active_cost)]
    active_cost: f64,
    #[arg(long, default_value_t = EnergyConfig::default().tx_cost)]
    tx_cost: f64,
    #[arg(long, default_value_t = EnergyConfig::default().threshold)]
    threshold: f64,
    #[arg(long, default_value_t = EnergyConfig::default().epoch_len)]
    epoch: u64,
}

impl EnergyArgs {
    fn config(&self) -> EnergyConfig {
        EnergyConfig {
            initial_energy: self.e0,
            active_cost: self.active_cost,
            tx_cost: self.tx_cost,
            threshold: self.threshold,
            epoch_len: self.epoch,
        }
    }
}

#[derive(Args)]
struct CampaignArgs {
    /// Comma-separated node counts.
    #[arg(long, value_delimiter = ',', default_values_t = [50, 100, 150, 200, 250, 300, 350])]
    n: Vec<usize>,
    #[arg(long, num_args = 2, value_names = ["W", "H"], default_values_t = [50.0, 50.0])]
    region: Vec<f64>,
    /// Comma-separated grids such as `2x2,3x3`.
    #[arg(long, value_delimiter = ',', default_values = ["2x2", "3x3", "4x4"])]
    grid: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_RANGE)]
    s: f64,
    #[arg(long, default_value_t = DEFAULT_RANGE)]
    t: f64,
    #[arg(long, default_value_t = DEFAULT_LP)]
    lp: f64,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    /// Base seed; per-row seeds are derived from it.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Comma-separated subset of ccsp, dcsp, lifetime.
    #[arg(long, value_delimiter = ',', default_values = ["ccsp", "dcsp"])]
    algorithms: Vec<String>,
    #[command(flatten)]
    energy: EnergyArgs,
    /// Fill the wall_time column (makes output nondeterministic).
    #[arg(long)]
    timing: bool,
    /// Also write per-setting means and standard deviations here.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Deployment file.
    #[arg(long)]
    input: PathBuf,
    /// Partition report to verify.
    #[arg(long)]
    report: PathBuf,
    /// Result CSV to validate as well.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn emit(out: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn deployment(args: &FieldArgs) -> anyhow::Result<Deployment> {
    if let Some(path) = &args.input {
        return Ok(Deployment::from_text(&read(path)?)?);
    }
    let (w, h) = (args.region[0], args.region[1]);
    let grid = match &args.grid {
        Some(rc) => make_grid_explicit(w, h, rc[0], rc[1], args.s, args.t)?,
        None => make_grid_from_ranges(w, h, args.s, args.t)?,
    };
    if !grid.guarantee_ok {
        eprintln!(
            "warning: block side {:.3} exceeds min(S, T)/sqrt(2); partitions may need extra relay nodes",
            grid.block_side
        );
    }
    Ok(deploy(args.n, &grid, args.s, args.t, args.seed))
}

fn parse_grid(s: &str) -> cspart::Result<(usize, usize)> {
    let bad = || cspart::Error::InvalidArgument(format!("grid `{s}` is not of the form RxC"));
    let (r, c) = s.split_once('x').ok_or_else(bad)?;
    Ok((
        r.trim().parse().map_err(|_| bad())?,
        c.trim().parse().map_err(|_| bad())?,
    ))
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Generate(args) => emit(&args.out, &deployment(&args)?.to_text())?,
        Command::Ccsp(args) => {
            let dep = deployment(&args)?;
            let g = CommGraph::build(&dep);
            let res = ccsp_partition(&g, &dep);
            eprintln!(
                "ccsp: {} partitions, {} free nodes",
                res.partitions.len(),
                res.free_nodes.len()
            );
            emit(&args.out, &res.report())?;
        }
        Command::Dcsp(args) => {
            let dep = deployment(&args)?;
            if !(0.0..=1.0).contains(&args.lp) {
                bail!(cspart::Error::InvalidArgument(format!(
                    "--lp {} is not in [0, 1]",
                    args.lp
                )));
            }
            let g = CommGraph::build(&dep);
            let mut sim = SimState::new(&g, &dep);
            if args.trace.is_some() {
                sim = sim.with_trace();
            }
            let out = sim.run(args.lp, election_seed(dep.seed));
            eprintln!(
                "dcsp: {} partitions, {} dismantled, {} transmissions, {} rounds",
                out.partitions.len(),
                out.failed_partition_count,
                out.tx_total,
                out.rounds
            );
            if let Some(path) = &args.trace {
                fs::write(path, sim.trace_text()).with_context(|| format!("writing {}", path.display()))?;
            }
            emit(&args.out, &out.report())?;
        }
        Command::Lifetime { field, energy } => {
            let dep = deployment(&field)?;
            let g = CommGraph::build(&dep);
            let rep = lifetime_simulation(&g, &dep, field.lp, &energy.config(), election_seed(dep.seed))?;
            let mut text = format!(
                "lifetime_rounds {}\ninitial_partitions {}\nsetup_rounds {}\nrecovery_rounds {}\nmessages {}\nrepairs {}\ndismantles {}\n",
                rep.lifetime_rounds,
                rep.initial_partitions,
                rep.setup_rounds,
                rep.recovery_rounds,
                rep.messages,
                rep.repairs,
                rep.dismantles
            );
            for (id, rounds) in &rep.service_rounds {
                text.push_str(&format!("service {id} {rounds}\n"));
            }
            emit(&field.out, &text)?;
        }
        Command::Campaign(args) => {
            let cfg = ExperimentConfig {
                n_values: args.n,
                region: (args.region[0], args.region[1]),
                grids: args.grid.iter().map(|g| parse_grid(g)).collect::<cspart::Result<_>>()?,
                s: args.s,
                t: args.t,
                lp: args.lp,
                reps: args.reps,
                base_seed: args.seed,
                algorithms: args
                    .algorithms
                    .iter()
                    .map(|a| a.parse::<Algorithm>())
                    .collect::<cspart::Result<_>>()?,
                energy: args.energy.config(),
                timing: args.timing,
            };
            let rows = run_experiment(&cfg)?;
            if let Some(path) = &args.summary {
                fs::write(path, summary_csv(&summarize(&rows)))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            emit(&args.out, &emit_csv(&rows))?;
        }
        Command::Check(args) => return check(&args),
    }
    Ok(0)
}

fn check(args: &CheckArgs) -> anyhow::Result<u8> {
    let dep = Deployment::from_text(&read(&args.input)?)?;
    let report = parse_partition_report(&read(&args.report)?)?;
    let g = CommGraph::build(&dep);
    let mut problems = Vec::new();
    let mut seen = NodeSet::new();
    for (id, members) in &report.partitions {
        if !is_connected_cover(&dep, &g, members) {
            problems.push(format!("partition {id} is not a connected cover"));
        }
        for &u in members {
            if !seen.insert(u) {
                problems.push(format!("node {u} is listed more than once"));
            }
        }
    }
    for &u in &report.free {
        if !seen.insert(u) {
            problems.push(format!("free node {u} is also listed elsewhere"));
        }
    }
    if seen != (0..dep.n()).collect::<NodeSet>() {
        problems.push(format!(
            "report lists {} ids but the deployment has {} nodes",
            seen.len(),
            dep.n()
        ));
    }
    if let Some(path) = &args.csv {
        let rows = parse_csv(&read(path)?)?;
        for (i, r) in rows.iter().enumerate() {
            if !(0.0..=100.0).contains(&r.active_pct) {
                problems.push(format!("CSV row {}: active_pct {} out of range", i + 1, r.active_pct));
            }
            if r.partitions > r.n {
                problems.push(format!("CSV row {}: more partitions than nodes", i + 1));
            }
        }
    }
    if problems.is_empty() {
        println!("ok: {} partitions verified", report.partitions.len());
        Ok(0)
    } else {
        for p in &problems {
            println!("violation: {p}");
        }
        Ok(EXIT_VIOLATION)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            let invalid = matches!(
                err.downcast_ref::<cspart::Error>(),
                Some(
                    cspart::Error::InvalidArgument(_) | cspart::Error::OutOfRange { .. } | cspart::Error::Parse { .. }
                )
            );
            ExitCode::from(if invalid { EXIT_INVALID } else { 1 })
        }
    }
}
