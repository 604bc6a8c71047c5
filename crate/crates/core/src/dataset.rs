//! Labeled scenario generation, train/test splitting, and the
//! line-delimited JSON record format.
//!
//! Record `i` of a run with master seed `s` is generated from its own seed
//! [`record_seed`]`(s, i)`, so any record can be reproduced in isolation.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamsearch::{
    exhaustive_search_instance, simulated_annealing_instance, AnnealingSchedule, FixedPointBudget, Instance,
};
use crate::config::{NetworkConfig, Point};
use crate::error::{Error, Result};
use crate::scenario::{sample_scenario_c1, sample_scenario_c2, BeamConfig, Scenario, UeState};

pub const SCHEMA_VERSION: u32 = 1;

/// Solver budget used when labeling: early stop at `1e-7`, at most 100 iterations.
pub const LABEL_BUDGET: FixedPointBudget = FixedPointBudget::with_tolerance(100, 1e-7);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    Exhaustive,
    Annealing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    C1,
    C2,
}

impl std::fmt::Display for Distribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Distribution::C1 => "c1",
            Distribution::C2 => "c2",
        })
    }
}

/// UE placement used for generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Placement {
    C1,
    C2 { center: Point, radius: f64 },
}

impl Placement {
    /// Disk centered at the origin with a 15 m radius.
    pub const DEFAULT_C2: Placement = Placement::C2 {
        center: Point::new(0.0, 0.0),
        radius: 15.0,
    };

    pub fn distribution(&self) -> Distribution {
        match self {
            Placement::C1 => Distribution::C1,
            Placement::C2 { .. } => Distribution::C2,
        }
    }

    pub fn sample(&self, cfg: &NetworkConfig, rng: &mut ChaCha8Rng) -> Result<Scenario> {
        match *self {
            Placement::C1 => Ok(sample_scenario_c1(cfg, rng)),
            Placement::C2 { center, radius } => sample_scenario_c2(cfg, rng, center, radius),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRecord {
    pub scenario: Scenario,
    /// Best configuration found by the oracle.
    pub label: BeamConfig,
    pub oracle_fraction: f64,
    pub oracle: OracleKind,
    pub distribution: Distribution,
    /// Seed the scenario (and annealing run) were drawn from.
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub n_samples: usize,
    pub placement: Placement,
    pub oracle: OracleKind,
    pub fp: FixedPointBudget,
    pub master_seed: u64,
    /// Used when `oracle` is [`OracleKind::Annealing`]; its seed is replaced per record.
    pub annealing: AnnealingSchedule,
}

impl GenerateOptions {
    pub fn new(n_samples: usize, placement: Placement, master_seed: u64) -> Self {
        Self {
            n_samples,
            placement,
            oracle: OracleKind::Exhaustive,
            fp: LABEL_BUDGET,
            master_seed,
            annealing: AnnealingSchedule::default(),
        }
    }
}

/// SplitMix64 finalizer over `master + index * golden`.
pub fn record_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Samples and labels the scenario drawn from `seed`.
pub fn label_scenario(cfg: &NetworkConfig, opts: &GenerateOptions, seed: u64) -> Result<LabeledRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scenario = opts.placement.sample(cfg, &mut rng)?;
    let instance = Instance::<f64>::new(cfg, &scenario)?;
    let best = match opts.oracle {
        OracleKind::Exhaustive => exhaustive_search_instance(&instance, cfg, opts.fp),
        OracleKind::Annealing => {
            simulated_annealing_instance(&instance, cfg, &opts.annealing.with_seed(seed), opts.fp)?.result
        }
    };
    Ok(LabeledRecord {
        scenario,
        label: best.config,
        oracle_fraction: best.allocation.fraction,
        oracle: opts.oracle,
        distribution: opts.placement.distribution(),
        seed,
    })
}

/// Generates `opts.n_samples` records in index order, in parallel.
pub fn generate(cfg: &NetworkConfig, opts: &GenerateOptions) -> Result<Vec<LabeledRecord>> {
    if opts.n_samples == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    cfg.validate()?;
    (0..opts.n_samples as u64)
        .into_par_iter()
        .map(|i| label_scenario(cfg, opts, record_seed(opts.master_seed, i)))
        .collect()
}

/// Seeded shuffle, then the first `round(train_fraction * n)` records train.
pub fn split(
    records: Vec<LabeledRecord>,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<LabeledRecord>, Vec<LabeledRecord>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    let n = records.len();
    let n_train = (train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Config(format!(
            "splitting {n} records at {train_fraction} leaves one side empty"
        )));
    }
    let mut records = records;
    records.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = records.split_off(n_train);
    Ok((records, test))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UeLine {
    x_m: f64,
    y_m: f64,
    tx_direction_deg: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelLine {
    width_indices: Vec<usize>,
    direction_indices: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    schema_version: u32,
    seed: u64,
    distribution: Distribution,
    oracle: OracleKind,
    oracle_fraction: f64,
    label: LabelLine,
    ues: Vec<UeLine>,
}

impl From<&LabeledRecord> for RecordLine {
    fn from(r: &LabeledRecord) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: r.seed,
            distribution: r.distribution,
            oracle: r.oracle,
            oracle_fraction: r.oracle_fraction,
            label: LabelLine {
                width_indices: r.label.widths.clone(),
                direction_indices: r.label.directions.clone(),
            },
            ues: r
                .scenario
                .rows()
                .iter()
                .map(|u| UeLine {
                    x_m: u.position.x,
                    y_m: u.position.y,
                    tx_direction_deg: u.tx_direction.to_degrees(),
                })
                .collect(),
        }
    }
}

impl From<RecordLine> for LabeledRecord {
    fn from(l: RecordLine) -> Self {
        let rows = l
            .ues
            .into_iter()
            .map(|u| UeState {
                position: Point::new(u.x_m, u.y_m),
                tx_direction: u.tx_direction_deg.to_radians(),
            })
            .collect();
        Self {
            scenario: Scenario::new(rows),
            label: BeamConfig {
                widths: l.label.width_indices,
                directions: l.label.direction_indices,
            },
            oracle_fraction: l.oracle_fraction,
            oracle: l.oracle,
            distribution: l.distribution,
            seed: l.seed,
        }
    }
}

pub fn write_records<W: Write>(records: &[LabeledRecord], out: W) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    for r in records {
        serde_json::to_writer(&mut out, &RecordLine::from(r))?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn save(records: &[LabeledRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(records, file).map_err(|e| Error::io(path, e))
}

fn parse_line(text: &str, path: &Path, line: usize) -> Result<LabeledRecord> {
    let malformed = |msg: String| Error::Malformed {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => {}
        Some(v) => {
            return Err(Error::SchemaVersion {
                path: path.to_path_buf(),
                found: v as u32,
                expected: SCHEMA_VERSION,
            })
        }
        None => return Err(malformed("missing schema_version".into())),
    }
    let rec: RecordLine = serde_json::from_value(value).map_err(|e| malformed(e.to_string()))?;
    Ok(rec.into())
}

/// Reads records; blank lines are skipped, errors carry 1-based line numbers.
pub fn load(path: impl AsRef<Path>) -> Result<Vec<LabeledRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(parse_line(&line, path, i + 1)?);
    }
    Ok(records)
}

/// Checks every record's dimensions and label against `cfg`.
pub fn validate_records(records: &[LabeledRecord], cfg: &NetworkConfig) -> Result<()> {
    for (i, r) in records.iter().enumerate() {
        r.scenario
            .validate(cfg)
            .and_then(|_| r.label.validate(cfg))
            .map_err(|e| match e {
                Error::Dimension(msg) => Error::Dimension(format!("record {i}: {msg}")),
                other => other,
            })?;
    }
    Ok(())
}

/// Labels of `records`, in order.
pub fn labels(records: &[LabeledRecord]) -> Vec<BeamConfig> {
    records.iter().map(|r| r.label.clone()).collect()
}
