//! Command-line driver. Results go to files; standard output carries a
//! single summary line and progress goes to standard error.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand};
use entgrowth::bipartition_markov::markov_report;
use entgrowth::cli_io::{
    parse_config, write_results, Payload, RunConfig, RunRecord, HEAVY_RUNS, HEAVY_SITES,
};
use entgrowth::evolution::{Provenance, Trajectory};
use entgrowth::experiments::{
    classify_dynamics, delta_s_sweep, eigenstate_sweep, level_statistics, protocol_trajectory, reservoir_average,
    scaled_ranks, stream_rng, stream_seed, ProtocolKind, ProtocolSpec,
};
use entgrowth::spectral_stats::{ratio_histogram, reference_curves};
use entgrowth::{Error, SectorBasis};

#[derive(Debug, Parser)]
#[command(name = "entgrowth", version, about = "Entanglement growth in disordered spin chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Large-scale defaults: L=16, 72 runs
    #[arg(long, global = true)]
    heavy: bool,
    #[arg(long, global = true)]
    runs: Option<usize>,
    /// Chain length
    #[arg(long = "L", global = true)]
    sites: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// List the half-filling sector basis
    Basis,
    /// Disorder-averaged entropy trajectory of the configured protocol
    Evolve,
    /// Random-circuit trajectory (SWAP circuit unless configured)
    Rqc,
    /// Delta S against preparation time, with classification
    Sweep,
    /// BAEE and HCEE of prepared states over T_list
    Baee,
    /// BAEE - HCEE over the reservoir grid
    Reservoir,
    /// Bipartition Markov chain report
    Markov,
    /// Spacing-ratio statistics and histogram
    Levelstats,
    /// Quenches from eigenstates of the preparation Hamiltonian
    Eigensweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Basis => "basis",
            Command::Evolve => "evolve",
            Command::Rqc => "rqc",
            Command::Sweep => "sweep",
            Command::Baee => "baee",
            Command::Reservoir => "reservoir",
            Command::Markov => "markov",
            Command::Levelstats => "levelstats",
            Command::Eigensweep => "eigensweep",
        }
    }
}

fn load_config(cli: &Cli) -> entgrowth::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.clone(), source })?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if cli.heavy {
        cfg.heavy = true;
        cfg.sites = HEAVY_SITES;
        cfg.runs = HEAVY_RUNS;
    }
    if let Some(l) = cli.sites {
        cfg.sites = l;
    }
    if let Some(r) = cli.runs {
        cfg.runs = r;
    }
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cmd: Command, cfg: &RunConfig) -> entgrowth::Result<(Payload, String)> {
    let (l, runs, seed) = (cfg.sites, cfg.runs, cfg.master_seed);
    Ok(match cmd {
        Command::Basis => {
            let b = SectorBasis::half_filling(l)?;
            let words = b.states().to_vec();
            let msg = format!("dim {}", words.len());
            (Payload::Basis { sites: l, words }, msg)
        }
        Command::Evolve | Command::Rqc => {
            let spec = match (cmd, cfg.protocol) {
                (Command::Rqc, None) => ProtocolSpec::swap(),
                (Command::Rqc, Some(p)) if p.kind != ProtocolKind::Rqc => {
                    return Err(Error::Config { key: "protocol.kind".into(), message: "rqc needs kind = \"rqc\"".into() })
                }
                _ => cfg.protocol()?,
            };
            let schedule = cfg.schedule.schedule(spec.kind)?;
            let t = protocol_trajectory(l, &spec, &cfg.preparation, cfg.t_prep, &schedule, runs, seed)?;
            let msg = format!("{} points, final hcee {:.4}", t.len(), t.hcee.last().copied().unwrap_or(f64::NAN));
            (Payload::Trajectory(t), msg)
        }
        Command::Sweep => {
            let spec = cfg.protocol()?;
            let table = delta_s_sweep(l, &cfg.t_list, &spec, &cfg.preparation, runs, seed)?;
            let classification =
                if table.rows.len() >= 5 { Some(classify_dynamics(&table, &cfg.classification)?) } else { None };
            let label = classification.as_ref().map_or("n/a", |c| c.label.name());
            let msg = format!("{} rows, class {label}", table.rows.len());
            (Payload::Sweep { table, classification }, msg)
        }
        Command::Baee | Command::Reservoir => {
            let grid = if matches!(cmd, Command::Baee) { &cfg.t_list } else { &cfg.reservoir.t_grid };
            let curve = reservoir_average(l, grid, &cfg.preparation, runs, seed)?;
            if matches!(cmd, Command::Reservoir) {
                let p = curve.peak();
                let msg = format!("peak difference {:.4} at T={} (hcee {:.4})", p.difference, p.t, p.hcee);
                (Payload::Reservoir(curve), msg)
            } else {
                let mut provenance = Provenance { description: "prepared states".into(), ..Default::default() };
                provenance.seeds.insert("master".into(), seed);
                let t = Trajectory {
                    times: curve.rows.iter().map(|r| r.t).collect(),
                    hcee: curve.rows.iter().map(|r| r.hcee).collect(),
                    baee: Some(curve.rows.iter().map(|r| r.baee).collect()),
                    provenance,
                };
                (Payload::Trajectory(t), format!("{} preparation times", curve.rows.len()))
            }
        }
        Command::Markov => {
            let mut rng = stream_rng(seed, 0, "markov");
            let report = markov_report(l, cfg.markov.steps, cfg.markov.burn_in, &mut rng)?;
            let msg = format!("N={} irreducible={} aperiodic={} tv={:.3e}", report.n, report.irreducible, report.aperiodic, report.tv_distance);
            (Payload::Markov(report), msg)
        }
        Command::Levelstats => {
            let ls = &cfg.levelstats;
            let sample = level_statistics(l, ls.w, ls.jz, runs, seed)?;
            let histogram = ratio_histogram(&sample, ls.bins)?;
            let msg = format!("mean r {:.4} over {} ratios", sample.mean, sample.ratios.len());
            (Payload::Histogram { sample, histogram, reference: reference_curves() }, msg)
        }
        Command::Eigensweep => {
            let spec = cfg.protocol()?;
            let basis = Arc::new(SectorBasis::half_filling(l)?);
            let ranks = if cfg.eigensweep.ranks.is_empty() { scaled_ranks(basis.dim()) } else { cfg.eigensweep.ranks.clone() };
            let rows = eigenstate_sweep(l, &ranks, &spec, &cfg.preparation, runs, seed)?;
            let msg = format!("{} ranks", rows.len());
            (Payload::Eigen(rows), msg)
        }
    })
}

fn seeds_for(cmd: Command, cfg: &RunConfig) -> BTreeMap<String, u64> {
    let mut seeds = BTreeMap::new();
    seeds.insert("master".to_string(), cfg.master_seed);
    if matches!(cmd, Command::Markov) {
        seeds.insert("markov".to_string(), stream_seed(cfg.master_seed, 0, "markov"));
    }
    seeds
}

/// Run the CLI on `argv` (including the program name); returns the exit code:
/// 0 on success, 2 for usage or configuration errors, 1 otherwise.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let started = Instant::now();
    let result = load_config(&cli).and_then(|cfg| {
        eprintln!("{}: L={} runs={} seed={}", cli.command.name(), cfg.sites, cfg.runs, cfg.master_seed);
        let (payload, msg) = execute(cli.command, &cfg)?;
        let record = RunRecord {
            name: cli.command.name().to_string(),
            seeds: seeds_for(cli.command, &cfg),
            config: cfg.clone(),
            payload,
        };
        let files = write_results(&record, &cfg.output_dir)?;
        Ok((msg, files))
    });
    match result {
        Ok((msg, files)) => {
            eprintln!("done in {:.1} s", started.elapsed().as_secs_f64());
            println!("{}: {msg}; wrote {}", cli.command.name(), files[0].display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                2
            } else {
                1
            }
        }
    }
}
