//! Run configuration and deterministic result files.
//!
//! One TOML schema serves every subcommand; unknown keys are rejected.
//! Floats in CSV files use 17 significant digits so they round-trip.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bipartition_markov::MarkovReport;
use crate::error::{Error, Result};
use crate::evolution::{Schedule, Trajectory};
use crate::experiments::{
    Classification, EigenRow, InitialKind, Preparation, ProtocolKind, ProtocolSpec, ReservoirCurve, SweepTable,
    Thresholds, DEFAULT_T_LIST,
};
use crate::spectral_stats::{Histogram, RatioSample, ReferenceCurves};

/// Version of the file layout written by [`write_results`].
pub const SCHEMA_VERSION: u32 = 1;
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const DEFAULT_SITES: usize = 12;
pub const DEFAULT_RUNS: usize = 50;
pub const HEAVY_SITES: usize = 16;
pub const HEAVY_RUNS: usize = 72;
pub const DEFAULT_T_PREP: f64 = 4.5;

/// Trajectory sampling: linear then logarithmic in time (or periods), and
/// a depth for circuits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub linear_end: f64,
    pub linear_step: f64,
    pub log_end: f64,
    pub per_decade: usize,
    pub depth: usize,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self { linear_end: 10.0, linear_step: 1.0, log_end: 1e4, per_decade: 10, depth: 2000 }
    }
}

impl ScheduleConfig {
    pub fn schedule(&self, kind: ProtocolKind) -> Result<Schedule> {
        if kind == ProtocolKind::Rqc {
            Ok(Schedule::every(self.depth))
        } else {
            Schedule::hybrid(self.linear_end, self.linear_step, self.log_end, self.per_decade)
                .map_err(|e| Error::config("schedule", e.to_string()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LevelStatsConfig {
    #[serde(rename = "W")]
    pub w: f64,
    pub jz: f64,
    pub bins: usize,
}

impl Default for LevelStatsConfig {
    fn default() -> Self {
        Self { w: 5.0, jz: 0.5, bins: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReservoirConfig {
    #[serde(rename = "T_grid")]
    pub t_grid: Vec<f64>,
}

impl Default for ReservoirConfig {
    fn default() -> Self {
        let mut t_grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.25).collect();
        t_grid.extend([12.0, 15.0, 20.0, 30.0, 50.0, 100.0, 500.0]);
        Self { t_grid }
    }
}

/// Monte Carlo walk on the bipartition chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarkovConfig {
    pub steps: u64,
    pub burn_in: u64,
}

impl Default for MarkovConfig {
    fn default() -> Self {
        Self { steps: 200_000, burn_in: 1_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenSweepConfig {
    /// 1-based energy ranks; empty means the reference list rescaled.
    pub ranks: Vec<usize>,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(rename = "L")]
    pub sites: usize,
    pub runs: usize,
    pub master_seed: u64,
    pub heavy: bool,
    #[serde(rename = "T_list")]
    pub t_list: Vec<f64>,
    #[serde(rename = "T_prep")]
    pub t_prep: f64,
    pub output_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolSpec>,
    pub preparation: Preparation,
    pub schedule: ScheduleConfig,
    pub classification: Thresholds,
    pub levelstats: LevelStatsConfig,
    pub reservoir: ReservoirConfig,
    pub eigensweep: EigenSweepConfig,
    pub markov: MarkovConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sites: DEFAULT_SITES,
            runs: DEFAULT_RUNS,
            master_seed: 0,
            heavy: false,
            t_list: DEFAULT_T_LIST.to_vec(),
            t_prep: DEFAULT_T_PREP,
            output_dir: PathBuf::from("results"),
            protocol: None,
            preparation: Preparation::default(),
            schedule: ScheduleConfig::default(),
            classification: Thresholds::default(),
            levelstats: LevelStatsConfig::default(),
            reservoir: ReservoirConfig::default(),
            eigensweep: EigenSweepConfig::default(),
            markov: MarkovConfig::default(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProtocol {
    kind: Option<ProtocolKind>,
    #[serde(rename = "W")]
    w: Option<f64>,
    jz: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
    #[serde(rename = "T0")]
    t0: Option<f64>,
    #[serde(rename = "T1")]
    t1: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPreparation {
    kind: Option<InitialKind>,
    #[serde(rename = "W")]
    w: Option<f64>,
    jz: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(rename = "L")]
    sites: Option<usize>,
    runs: Option<usize>,
    master_seed: Option<u64>,
    #[serde(default)]
    heavy: bool,
    #[serde(rename = "T_list")]
    t_list: Option<Vec<f64>>,
    #[serde(rename = "T_prep")]
    t_prep: Option<f64>,
    output_dir: Option<PathBuf>,
    protocol: Option<RawProtocol>,
    preparation: Option<RawPreparation>,
    #[serde(default)]
    schedule: ScheduleConfig,
    #[serde(default)]
    classification: Thresholds,
    #[serde(default)]
    levelstats: LevelStatsConfig,
    #[serde(default)]
    reservoir: ReservoirConfig,
    #[serde(default)]
    eigensweep: EigenSweepConfig,
    #[serde(default)]
    markov: MarkovConfig,
}

/// Parse and validate a TOML configuration. Errors name the offending key.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::config("<document>", e.to_string()))?;
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        Error::config(if key == "." { "<document>".to_string() } else { key }, e.into_inner().message().to_string())
    })?;
    let protocol = match raw.protocol {
        None => None,
        Some(p) => {
            let kind = p.kind.ok_or_else(|| Error::config("protocol.kind", "missing required field"))?;
            let d = ProtocolSpec::defaults(kind);
            Some(ProtocolSpec {
                kind,
                w: p.w.unwrap_or(d.w),
                jz: p.jz.unwrap_or(d.jz),
                alpha: p.alpha.unwrap_or(d.alpha),
                beta: p.beta.unwrap_or(d.beta),
                t0: p.t0.unwrap_or(d.t0),
                t1: p.t1.unwrap_or(d.t1),
            })
        }
    };
    let prep = raw.preparation.unwrap_or_default();
    let pd = Preparation::default();
    let cfg = RunConfig {
        sites: raw.sites.unwrap_or(if raw.heavy { HEAVY_SITES } else { DEFAULT_SITES }),
        runs: raw.runs.unwrap_or(if raw.heavy { HEAVY_RUNS } else { DEFAULT_RUNS }),
        master_seed: raw.master_seed.unwrap_or(0),
        heavy: raw.heavy,
        t_list: raw.t_list.unwrap_or_else(|| DEFAULT_T_LIST.to_vec()),
        t_prep: raw.t_prep.unwrap_or(DEFAULT_T_PREP),
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("results")),
        protocol,
        preparation: Preparation {
            kind: prep.kind.unwrap_or(pd.kind),
            w: prep.w.unwrap_or(pd.w),
            jz: prep.jz.unwrap_or(pd.jz),
        },
        schedule: raw.schedule,
        classification: raw.classification,
        levelstats: raw.levelstats,
        reservoir: raw.reservoir,
        eigensweep: raw.eigensweep,
        markov: raw.markov,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// TOML text that [`parse_config`] maps back to `cfg`.
pub fn serialize_config(cfg: &RunConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| Error::config("<document>", e.to_string()))
}

impl RunConfig {
    /// Check every parameter before any computation starts.
    pub fn validate(&self) -> Result<()> {
        if self.sites < 2 || self.sites % 2 == 1 || self.sites > crate::sector_basis::MAX_SITES {
            return Err(Error::config("L", format!("must be even and in 2..={}, got {}", crate::sector_basis::MAX_SITES, self.sites)));
        }
        if self.runs == 0 {
            return Err(Error::config("runs", "must be >= 1"));
        }
        if self.t_list.is_empty() || self.t_list.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::config("T_list", "must be a non-empty list of finite times >= 0"));
        }
        if !self.t_prep.is_finite() || self.t_prep < 0.0 {
            return Err(Error::config("T_prep", "must be finite and >= 0"));
        }
        if let Some(p) = &self.protocol {
            p.validate().map_err(|e| Error::config("protocol", e.to_string()))?;
        }
        let p = &self.preparation;
        if !(p.w.is_finite() && p.w >= 0.0 && p.jz.is_finite()) {
            return Err(Error::config("preparation", "W must be finite and >= 0, jz finite"));
        }
        if p.kind == InitialKind::LocallyEntangled && self.sites < 4 {
            return Err(Error::config("preparation.kind", "locally entangled preparation needs L >= 4"));
        }
        self.classification.validate().map_err(|e| Error::config("classification", e.to_string()))?;
        if self.levelstats.bins == 0 {
            return Err(Error::config("levelstats.bins", "must be >= 1"));
        }
        if !(self.levelstats.w.is_finite() && self.levelstats.w >= 0.0) {
            return Err(Error::config("levelstats.W", "must be finite and >= 0"));
        }
        let g = &self.reservoir.t_grid;
        if g.is_empty() || g.iter().any(|t| !t.is_finite() || *t < 0.0) || g.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("reservoir.T_grid", "must be non-empty, >= 0, strictly increasing"));
        }
        if self.eigensweep.ranks.contains(&0) {
            return Err(Error::config("eigensweep.ranks", "ranks are 1-based"));
        }
        Ok(())
    }

    pub fn protocol(&self) -> Result<ProtocolSpec> {
        self.protocol.ok_or_else(|| Error::config("protocol.kind", "missing required field"))
    }
}

/// What a subcommand produced.
#[derive(Debug, Clone)]
pub enum Payload {
    Basis { sites: usize, words: Vec<u64> },
    Trajectory(Trajectory),
    Sweep { table: SweepTable, classification: Option<Classification> },
    Reservoir(ReservoirCurve),
    Eigen(Vec<EigenRow>),
    Histogram { sample: RatioSample, histogram: Histogram, reference: ReferenceCurves },
    Markov(MarkovReport),
}

/// Config snapshot, seeds, and result of one invocation.
#[derive(Debug, Clone)]
pub struct RunRecord {
    /// File stem, normally the subcommand name.
    pub name: String,
    pub config: RunConfig,
    pub seeds: BTreeMap<String, u64>,
    pub payload: Payload,
}

#[derive(Serialize)]
struct Meta<'a, S: Serialize> {
    schema_version: u32,
    code_version: &'a str,
    name: &'a str,
    data_file: &'a str,
    config: &'a RunConfig,
    seeds: &'a BTreeMap<String, u64>,
    summary: S,
}

/// Fixed-width decimal with 17 significant digits.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

struct Csv(String);

impl Csv {
    fn new(header: &str) -> Self {
        Csv(format!("{header}\n"))
    }

    fn row(&mut self, cells: &[String]) {
        self.0.push_str(&cells.join(","));
        self.0.push('\n');
    }
}

fn f(x: f64) -> String {
    format_float(x)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn to_json<S: Serialize>(v: &S) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::numeric(format!("json encoding: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Write the data file and its `.meta.json` companion into `dir`.
/// Identical records give byte-identical files.
pub fn write_results(record: &RunRecord, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    let name = record.name.as_str();
    let (data_file, body, summary): (String, String, serde_json::Value) = match &record.payload {
        Payload::Basis { sites, words } => {
            let mut c = Csv::new("index,word,bits");
            for (i, w) in words.iter().enumerate() {
                let bits: String = (0..*sites).map(|k| if w >> k & 1 == 1 { '1' } else { '0' }).collect();
                c.row(&[i.to_string(), w.to_string(), bits]);
            }
            (format!("{name}.csv"), c.0, serde_json::json!({ "L": sites, "dim": words.len() }))
        }
        Payload::Trajectory(t) => {
            let mut c = Csv::new(if t.baee.is_some() { "time,hcee,baee" } else { "time,hcee" });
            for i in 0..t.len() {
                let mut cells = vec![f(t.times[i]), f(t.hcee[i])];
                if let Some(b) = &t.baee {
                    cells.push(f(b[i]));
                }
                c.row(&cells);
            }
            (format!("{name}.csv"), c.0, serde_json::json!({ "provenance": t.provenance, "points": t.len() }))
        }
        Payload::Sweep { table, classification } => {
            let mut c = Csv::new("T,S_initial,S_sat,delta_S,stderr_initial,stderr_sat,runs");
            for r in &table.rows {
                c.row(&[f(r.t), f(r.s_initial), f(r.s_sat), f(r.delta_s), f(r.stderr_initial), f(r.stderr_sat), r.runs.to_string()]);
            }
            (
                format!("{name}.csv"),
                c.0,
                serde_json::json!({ "protocol": table.protocol, "preparation": table.preparation,
                    "runs": table.runs, "run_seeds": table.seeds, "classification": classification }),
            )
        }
        Payload::Reservoir(curve) => {
            let mut c = Csv::new("T,baee,hcee,difference");
            for r in &curve.rows {
                c.row(&[f(r.t), f(r.baee), f(r.hcee), f(r.difference)]);
            }
            (format!("{name}.csv"), c.0, serde_json::json!({ "argmax_T": curve.peak().t, "argmax_index": curve.argmax }))
        }
        Payload::Eigen(rows) => {
            let mut c = Csv::new("rank,energy,S_initial,S_sat,delta_S,stderr_initial,stderr_sat");
            for r in rows {
                c.row(&[r.rank.to_string(), f(r.energy), f(r.s_initial), f(r.s_sat), f(r.delta_s), f(r.stderr_initial), f(r.stderr_sat)]);
            }
            (format!("{name}.csv"), c.0, serde_json::json!({ "ranks": rows.len() }))
        }
        Payload::Histogram { sample, histogram, reference } => {
            let mut c = Csv::new("bin_left,bin_right,density");
            for (d, e) in histogram.density.iter().zip(histogram.edges.windows(2)) {
                c.row(&[f(e[0]), f(e[1]), f(*d)]);
            }
            (
                format!("{name}.csv"),
                c.0,
                serde_json::json!({ "mean_ratio": sample.mean, "ratios": sample.ratios.len(),
                    "skipped_degenerate": sample.skipped_degenerate, "source": sample.source, "reference": reference }),
            )
        }
        Payload::Markov(report) => (format!("{name}.json"), to_json(report)?, serde_json::json!({ "L": report.sites })),
    };
    let data_path = dir.join(&data_file);
    write_file(&data_path, body.as_bytes())?;
    let meta = Meta {
        schema_version: SCHEMA_VERSION,
        code_version: CODE_VERSION,
        name,
        data_file: &data_file,
        config: &record.config,
        seeds: &record.seeds,
        summary,
    };
    let meta_path = dir.join(format!("{name}.meta.json"));
    write_file(&meta_path, to_json(&meta)?.as_bytes())?;
    Ok(vec![data_path, meta_path])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_protocol_section_names_kind() {
        let e = parse_config("[protocol]\n").unwrap_err();
        assert!(matches!(&e, Error::Config { key, .. } if key == "protocol.kind"), "{e}");
        assert!(e.is_config());
    }

    #[test]
    fn defaults_are_filled() {
        let c = parse_config("[protocol]\nkind = \"floquet_mbl\"\n").unwrap();
        assert_eq!(c.t_list.len(), 37);
        assert_eq!(*c.t_list.last().unwrap(), 500.0);
        let p = c.protocol.unwrap();
        assert_eq!((p.w, p.t0, p.t1), (5.0, 1.0, 0.4));
        assert_eq!((c.sites, c.runs, c.t_prep), (12, 50, 4.5));
        assert_eq!(c.preparation, Preparation::default());
        let h = parse_config("heavy = true\n").unwrap();
        assert_eq!((h.sites, h.runs), (16, 72));
    }

    #[test]
    fn unknown_and_mistyped_keys_are_named() {
        let e = parse_config("Lx = 4\n").unwrap_err();
        assert!(e.is_config());
        let e = parse_config("[protocol]\nkind = \"thermal\"\nWW = 1.0\n").unwrap_err();
        assert!(e.to_string().contains("protocol"), "{e}");
        let e = parse_config("runs = \"many\"\n").unwrap_err();
        assert!(matches!(&e, Error::Config { key, .. } if key == "runs"), "{e}");
        let e = parse_config("L = 7\n").unwrap_err();
        assert!(matches!(&e, Error::Config { key, .. } if key == "L"), "{e}");
    }

    #[test]
    fn config_round_trips() {
        let text = "L = 10\nruns = 3\nmaster_seed = 99\nT_list = [0.0, 0.1, 3.3]\n\
                    [protocol]\nkind = \"rqc\"\nalpha = 0.3\nbeta = 1.7\n\
                    [preparation]\nkind = \"locally_entangled\"\n[classification]\neps_fit = 0.07\n";
        let c = parse_config(text).unwrap();
        let again = parse_config(&serialize_config(&c).unwrap()).unwrap();
        assert_eq!(c, again);
        let d = RunConfig::default();
        assert_eq!(parse_config(&serialize_config(&d).unwrap()).unwrap(), d);
    }

    #[test]
    fn float_format() {
        assert_eq!(format_float(0.5), "5.0000000000000000e-1");
        assert_eq!(format_float(f64::NAN), "NaN");
        let x = 0.1 + 0.2;
        assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
    }
}
