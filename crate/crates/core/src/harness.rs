//! Experiment campaigns: deploy, partition, measure, and write CSV rows.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;
#[cfg(not(target_arch = "wasm32"))]
use std::time::Instant;

use crate::ccsp::ccsp_partition;
use crate::comm_graph::CommGraph;
use crate::dcsp::{lifetime_simulation, run_dcsp, EnergyConfig};
use crate::geometry::{deploy, make_grid_explicit, Deployment};
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 11] = [
    "algorithm",
    "n",
    "grid",
    "rep",
    "seed",
    "partitions",
    "active_pct",
    "density",
    "tx_total",
    "lifetime_rounds",
    "wall_time",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Ccsp,
    Dcsp,
    Lifetime,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Ccsp => "ccsp",
            Algorithm::Dcsp => "dcsp",
            Algorithm::Lifetime => "lifetime",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ccsp" => Ok(Algorithm::Ccsp),
            "dcsp" => Ok(Algorithm::Dcsp),
            "lifetime" => Ok(Algorithm::Lifetime),
            other => Err(Error::invalid(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_values: Vec<usize>,
    pub region: (f64, f64),
    pub grids: Vec<(usize, usize)>,
    pub s: f64,
    pub t: f64,
    pub lp: f64,
    pub reps: usize,
    pub base_seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub energy: EnergyConfig,
    /// Fill the `wall_time` column. Off by default so output is reproducible.
    pub timing: bool,
}

/// Default leader probability. Not given by the source material; chosen so
/// the distributed protocol elects enough leaders on the campaign densities.
pub const DEFAULT_LP: f64 = 0.1;
/// Default sensing and transmission range. Small enough that the block side
/// of a 2×2 grid on a 50×50 region still meets the `side·√2 ≤ min(S, T)`
/// condition.
pub const DEFAULT_RANGE: f64 = 36.0;

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_values: (1..=7).map(|i| 50 * i).collect(),
            region: (50.0, 50.0),
            grids: vec![(2, 2), (3, 3), (4, 4)],
            s: DEFAULT_RANGE,
            t: DEFAULT_RANGE,
            lp: DEFAULT_LP,
            reps: 20,
            base_seed: 1,
            algorithms: vec![Algorithm::Ccsp, Algorithm::Dcsp],
            energy: EnergyConfig::default(),
            timing: false,
        }
    }
}

impl ExperimentConfig {
    /// n = 50..350 step 50 on a 50×50 region, 2×2, 3×3 and 4×4 grids, 20
    /// repetitions, both partitioning algorithms.
    pub fn paper_campaign() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::invalid("reps must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.lp) {
            return Err(Error::invalid(format!(
                "leader probability {} is not in [0, 1]",
                self.lp
            )));
        }
        for &(r, c) in &self.grids {
            make_grid_explicit(self.region.0, self.region.1, r, c, self.s, self.t)?;
        }
        if self.algorithms.contains(&Algorithm::Lifetime) {
            self.energy.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub algorithm: Algorithm,
    pub n: usize,
    pub grid: (usize, usize),
    pub rep: usize,
    /// Deployment seed. Rows sharing it ran on the same deployment.
    pub seed: u64,
    pub partitions: usize,
    pub active_pct: f64,
    /// Mean degree of the communication graph before partitioning.
    pub density: f64,
    pub tx_total: u64,
    pub lifetime_rounds: Option<u64>,
    pub wall_time: Option<f64>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deployment seed for one row, a pure function of its setting so that any
/// row can be regenerated on its own.
pub fn derive_seed(base_seed: u64, n: usize, grid: (usize, usize), rep: usize) -> u64 {
    [n as u64, grid.0 as u64, grid.1 as u64, rep as u64]
        .iter()
        .fold(splitmix64(base_seed), |acc, &v| splitmix64(acc ^ v))
}

/// Seed for leader election on a deployment; kept apart from the deployment
/// seed so that election draws are independent of node positions.
pub fn election_seed(deployment_seed: u64) -> u64 {
    splitmix64(deployment_seed ^ 0x5eed_1eade_u64)
}

fn pct(members: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        100.0 * members as f64 / n as f64
    }
}

struct Timer {
    #[cfg(not(target_arch = "wasm32"))]
    start: Option<Instant>,
}

impl Timer {
    fn start(enabled: bool) -> Self {
        #[cfg(not(target_arch = "wasm32"))]
        {
            Timer {
                start: enabled.then(Instant::now),
            }
        }
        #[cfg(target_arch = "wasm32")]
        {
            let _ = enabled;
            Timer {}
        }
    }

    fn stop(&self) -> Option<f64> {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.map(|s| s.elapsed().as_secs_f64())
        }
        #[cfg(target_arch = "wasm32")]
        {
            None
        }
    }
}

/// Rows for every requested algorithm on one deployment.
pub fn run_setting(cfg: &ExperimentConfig, n: usize, grid: (usize, usize), rep: usize) -> Result<Vec<ResultRow>> {
    let g_spec = make_grid_explicit(cfg.region.0, cfg.region.1, grid.0, grid.1, cfg.s, cfg.t)?;
    let seed = derive_seed(cfg.base_seed, n, grid, rep);
    let dep = deploy(n, &g_spec, cfg.s, cfg.t, seed);
    let g = CommGraph::build(&dep);
    let density = g.mean_degree();
    let row = |algorithm, partitions, members, tx_total, lifetime_rounds, wall_time| ResultRow {
        algorithm,
        n,
        grid,
        rep,
        seed,
        partitions,
        active_pct: pct(members, n),
        density,
        tx_total,
        lifetime_rounds,
        wall_time,
    };
    let mut rows = Vec::new();
    for &alg in &cfg.algorithms {
        rows.push(match alg {
            Algorithm::Ccsp => {
                let t = Timer::start(cfg.timing);
                let res = ccsp_partition(&g, &dep);
                let wall = t.stop();
                let members = res.partitions.iter().map(|p| p.members.len()).sum();
                row(alg, res.partitions.len(), members, 0, None, wall)
            }
            Algorithm::Dcsp => {
                let t = Timer::start(cfg.timing);
                let out = run_dcsp(&g, &dep, cfg.lp, election_seed(seed));
                let wall = t.stop();
                let members = out.partitions.iter().map(|p| p.members.len()).sum();
                row(alg, out.partitions.len(), members, out.tx_total, None, wall)
            }
            Algorithm::Lifetime => {
                let t = Timer::start(cfg.timing);
                let rep = lifetime_simulation(&g, &dep, cfg.lp, &cfg.energy, election_seed(seed))?;
                let wall = t.stop();
                row(
                    alg,
                    rep.initial_partitions,
                    rep.initial_active_nodes,
                    rep.messages,
                    Some(rep.lifetime_rounds),
                    wall,
                )
            }
        });
    }
    Ok(rows)
}

/// Runs every (n, grid, rep) setting; rows come back sorted by
/// (algorithm, n, grid, rep) whatever the execution order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let mut settings = Vec::new();
    for &n in &cfg.n_values {
        for &grid in &cfg.grids {
            for rep in 0..cfg.reps {
                settings.push((n, grid, rep));
            }
        }
    }
    #[cfg(feature = "parallel")]
    let chunks: Vec<Result<Vec<ResultRow>>> = {
        use rayon::prelude::*;
        settings
            .par_iter()
            .map(|&(n, grid, rep)| run_setting(cfg, n, grid, rep))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let chunks: Vec<Result<Vec<ResultRow>>> = settings
        .iter()
        .map(|&(n, grid, rep)| run_setting(cfg, n, grid, rep))
        .collect();
    let mut rows = Vec::with_capacity(settings.len() * cfg.algorithms.len());
    for chunk in chunks {
        rows.extend(chunk?);
    }
    rows.sort_by_key(|r| (r.algorithm, r.n, r.grid, r.rep));
    Ok(rows)
}

/// The deployment `run_setting` uses for this setting.
pub fn setting_deployment(cfg: &ExperimentConfig, n: usize, grid: (usize, usize), rep: usize) -> Result<Deployment> {
    let g_spec = make_grid_explicit(cfg.region.0, cfg.region.1, grid.0, grid.1, cfg.s, cfg.t)?;
    Ok(deploy(
        n,
        &g_spec,
        cfg.s,
        cfg.t,
        derive_seed(cfg.base_seed, n, grid, rep),
    ))
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::parse(line, e.to_string())
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(String::new, T::to_string)
}

pub fn write_csv<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.algorithm.to_string(),
            r.n.to_string(),
            format!("{}x{}", r.grid.0, r.grid.1),
            r.rep.to_string(),
            r.seed.to_string(),
            r.partitions.to_string(),
            r.active_pct.to_string(),
            r.density.to_string(),
            r.tx_total.to_string(),
            opt(&r.lifetime_rounds),
            opt(&r.wall_time),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Io {
        context: "writing CSV".into(),
        source: e,
    })
}

pub fn emit_csv(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

pub fn write_csv_file(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::Io {
        context: format!("creating {}", path.display()),
        source: e,
    })?;
    write_csv(std::io::BufWriter::new(file), rows)
}

fn field<T: FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
    let raw = rec
        .get(i)
        .ok_or_else(|| Error::parse(line, format!("missing column {}", CSV_HEADER[i])))?;
    raw.parse()
        .map_err(|_| Error::parse(line, format!("bad {} value `{raw}`", CSV_HEADER[i])))
}

fn opt_field<T: FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<Option<T>> {
    match rec.get(i) {
        Some("") | None => Ok(None),
        Some(_) => field(rec, i, line).map(Some),
    }
}

fn parse_grid(s: &str, line: usize) -> Result<(usize, usize)> {
    let bad = || Error::parse(line, format!("bad grid `{s}`"));
    let (r, c) = s.split_once('x').ok_or_else(bad)?;
    Ok((r.parse().map_err(|_| bad())?, c.parse().map_err(|_| bad())?))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(csv_err)?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::parse(1, "unexpected CSV header"));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::parse(line, "wrong number of columns"));
        }
        rows.push(ResultRow {
            algorithm: field(&rec, 0, line)?,
            n: field(&rec, 1, line)?,
            grid: parse_grid(&rec[2], line)?,
            rep: field(&rec, 3, line)?,
            seed: field(&rec, 4, line)?,
            partitions: field(&rec, 5, line)?,
            active_pct: field(&rec, 6, line)?,
            density: field(&rec, 7, line)?,
            tx_total: field(&rec, 8, line)?,
            lifetime_rounds: opt_field(&rec, 9, line)?,
            wall_time: opt_field(&rec, 10, line)?,
        });
    }
    Ok(rows)
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    read_csv(text.as_bytes())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Stats { mean, sd, min, max })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub n: usize,
    pub grid: (usize, usize),
    pub count: usize,
    pub partitions: Stats,
    pub active_pct: Stats,
    pub density: Stats,
    pub tx_total: Stats,
    /// Only when every row in the group has a lifetime.
    pub lifetime_rounds: Option<Stats>,
}

/// Groups by (algorithm, n, grid) in sorted order.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut groups: std::collections::BTreeMap<_, Vec<&ResultRow>> = Default::default();
    for r in rows {
        groups.entry((r.algorithm, r.n, r.grid)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((algorithm, n, grid), group)| {
            let stat = |f: &dyn Fn(&ResultRow) -> f64| {
                Stats::of(&group.iter().map(|r| f(r)).collect::<Vec<_>>()).expect("groups are nonempty")
            };
            let lifetimes: Option<Vec<f64>> = group.iter().map(|r| r.lifetime_rounds.map(|v| v as f64)).collect();
            SummaryRow {
                algorithm,
                n,
                grid,
                count: group.len(),
                partitions: stat(&|r| r.partitions as f64),
                active_pct: stat(&|r| r.active_pct),
                density: stat(&|r| r.density),
                tx_total: stat(&|r| r.tx_total as f64),
                lifetime_rounds: lifetimes.and_then(|v| Stats::of(&v)),
            }
        })
        .collect()
}

/// Summary table as CSV: mean and sd per metric.
pub fn summary_csv(summary: &[SummaryRow]) -> String {
    let mut out = String::from(
        "algorithm,n,grid,count,partitions_mean,partitions_sd,active_pct_mean,active_pct_sd,\
         density_mean,density_sd,tx_total_mean,tx_total_sd,lifetime_mean,lifetime_sd\n",
    );
    for s in summary {
        let (lm, lsd) = s.lifetime_rounds.map_or((String::new(), String::new()), |l| {
            (l.mean.to_string(), l.sd.to_string())
        });
        out.push_str(&format!(
            "{},{},{}x{},{},{},{},{},{},{},{},{},{},{},{}\n",
            s.algorithm,
            s.n,
            s.grid.0,
            s.grid.1,
            s.count,
            s.partitions.mean,
            s.partitions.sd,
            s.active_pct.mean,
            s.active_pct.sd,
            s.density.mean,
            s.density.sd,
            s.tx_total.mean,
            s.tx_total.sd,
            lm,
            lsd
        ));
    }
    out
}
