//! Searching the discrete receive-beam space: exhaustive enumeration,
//! simulated annealing, and the most-frequent-label baseline.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{LinkBudget, LinkTable};
use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::fixedpoint::{solve, Allocation};
use crate::scalar::Scalar;
use crate::scenario::{BeamConfig, Scenario};

/// Iteration cap and early-stop tolerance for each fixed-point solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointBudget {
    pub max_iters: usize,
    /// Zero runs exactly `max_iters` iterations.
    pub tol: f64,
}

impl FixedPointBudget {
    pub const fn iterations(max_iters: usize) -> Self {
        Self { max_iters, tol: 0.0 }
    }

    pub const fn with_tolerance(max_iters: usize, tol: f64) -> Self {
        Self { max_iters, tol }
    }
}

/// A scenario prepared for repeated solves: gain table, interference-free
/// rates and link budget.
#[derive(Debug, Clone)]
pub struct Instance<T> {
    table: LinkTable<T>,
    r_bar: Vec<T>,
    budget: LinkBudget<T>,
}

impl<T: Scalar> Instance<T> {
    pub fn new(cfg: &NetworkConfig, scenario: &Scenario) -> Result<Self> {
        let table = LinkTable::build(cfg, scenario)?;
        let budget = LinkBudget::from_config(cfg);
        let r_bar = table.interference_free_rates(&budget);
        Ok(Self {
            table,
            r_bar,
            budget,
        })
    }

    pub fn interference_free_rates(&self) -> &[T] {
        &self.r_bar
    }

    pub fn budget(&self) -> &LinkBudget<T> {
        &self.budget
    }

    pub fn table(&self) -> &LinkTable<T> {
        &self.table
    }

    /// Optimal power allocation and assignment for configuration `q`.
    pub fn solve(&self, q: &BeamConfig, fp: FixedPointBudget) -> Allocation<T> {
        let h = self.table.channel(q);
        solve(&h, &self.r_bar, &self.budget, fp.max_iters, T::lit(fp.tol))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult<T> {
    pub config: BeamConfig,
    pub allocation: Allocation<T>,
    /// Fixed-point iterations summed over every probed configuration.
    pub fp_iterations_total: usize,
    pub configs_probed: usize,
}

/// Solves every configuration and keeps the one with the largest fraction;
/// ties resolve to the earliest configuration in canonical order.
pub fn exhaustive_search<T: Scalar>(
    scenario: &Scenario,
    cfg: &NetworkConfig,
    fp: FixedPointBudget,
) -> Result<SearchResult<T>> {
    let instance = Instance::new(cfg, scenario)?;
    Ok(exhaustive_search_instance(&instance, cfg, fp))
}

pub fn exhaustive_search_instance<T: Scalar>(
    instance: &Instance<T>,
    cfg: &NetworkConfig,
    fp: FixedPointBudget,
) -> SearchResult<T> {
    let n_configs = cfg.n_beam_configs();
    let (index, allocation, iterations) = (0..n_configs)
        .into_par_iter()
        .map(|i| {
            let a = instance.solve(&BeamConfig::from_canonical_index(cfg, i), fp);
            let used = a.iterations_used;
            (i, a, used)
        })
        .reduce_with(|a, b| {
            let total = a.2 + b.2;
            let keep_b = b.1.fraction > a.1.fraction
                || (b.1.fraction == a.1.fraction && b.0 < a.0);
            if keep_b {
                (b.0, b.1, total)
            } else {
                (a.0, a.1, total)
            }
        })
        .expect("configuration space is never empty");
    SearchResult {
        config: BeamConfig::from_canonical_index(cfg, index),
        allocation,
        fp_iterations_total: iterations,
        configs_probed: n_configs,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealingSchedule {
    /// On the scale of the rate fraction, which lies in (0, 1].
    pub initial_temperature: f64,
    pub cooling_factor: f64,
    pub steps: usize,
    pub seed: u64,
}

impl Default for AnnealingSchedule {
    fn default() -> Self {
        Self {
            initial_temperature: 0.1,
            cooling_factor: 0.98,
            steps: 200,
            seed: 0,
        }
    }
}

impl AnnealingSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.cooling_factor > 0.0 && self.cooling_factor < 1.0) {
            return Err(Error::Config("cooling factor must lie in (0, 1)".into()));
        }
        if !(self.initial_temperature >= 0.0 && self.initial_temperature.is_finite()) {
            return Err(Error::Config("initial temperature must be non-negative".into()));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// Best-so-far fraction after a given number of cumulative fixed-point iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint<T> {
    pub cumulative_iterations: usize,
    pub best_fraction: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealingRun<T> {
    pub result: SearchResult<T>,
    /// One point per probed configuration, starting with the initial one.
    pub trace: Vec<TracePoint<T>>,
    /// Fraction of every probed configuration, in probing order.
    pub probed_fractions: Vec<T>,
    /// Whether each proposal (after the initial configuration) was accepted.
    pub accepted: Vec<bool>,
}

fn step_index(rng: &mut ChaCha8Rng, index: usize, len: usize) -> usize {
    if len == 1 {
        return index;
    }
    let up = rng.gen_bool(0.5);
    match (up, index) {
        (true, i) if i + 1 < len => i + 1,
        (true, i) => i - 1,
        (false, 0) => 1,
        (false, i) => i - 1,
    }
}

/// Moves one parameter of one AP to an adjacent set element, reflecting at the ends.
pub fn propose_neighbor(rng: &mut ChaCha8Rng, q: &BeamConfig, cfg: &NetworkConfig) -> BeamConfig {
    let mut next = q.clone();
    let m = rng.gen_range(0..q.n_aps());
    if rng.gen_bool(0.5) {
        next.widths[m] = step_index(rng, q.widths[m], cfg.beamwidth_set.len());
    } else {
        next.directions[m] = step_index(rng, q.directions[m], cfg.direction_set.len());
    }
    next
}

/// Metropolis search from a uniformly random configuration with geometric cooling.
pub fn simulated_annealing<T: Scalar>(
    scenario: &Scenario,
    cfg: &NetworkConfig,
    schedule: &AnnealingSchedule,
    fp: FixedPointBudget,
) -> Result<AnnealingRun<T>> {
    let instance = Instance::new(cfg, scenario)?;
    simulated_annealing_instance(&instance, cfg, schedule, fp)
}

pub fn simulated_annealing_instance<T: Scalar>(
    instance: &Instance<T>,
    cfg: &NetworkConfig,
    schedule: &AnnealingSchedule,
    fp: FixedPointBudget,
) -> Result<AnnealingRun<T>> {
    schedule.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let mut current = BeamConfig::from_canonical_index(cfg, rng.gen_range(0..cfg.n_beam_configs()));
    let mut current_alloc = instance.solve(&current, fp);
    let mut iterations = current_alloc.iterations_used;
    let mut best = (current.clone(), current_alloc.clone());
    let mut trace = vec![TracePoint {
        cumulative_iterations: iterations,
        best_fraction: best.1.fraction,
    }];
    let mut probed_fractions = vec![current_alloc.fraction];
    let mut accepted = Vec::with_capacity(schedule.steps);
    let mut temperature = schedule.initial_temperature;

    for _ in 0..schedule.steps {
        let candidate = propose_neighbor(&mut rng, &current, cfg);
        let alloc = instance.solve(&candidate, fp);
        iterations += alloc.iterations_used;
        probed_fractions.push(alloc.fraction);
        let delta = (alloc.fraction - current_alloc.fraction).as_f64();
        let accept = delta >= 0.0
            || (temperature > 0.0 && rng.gen::<f64>() < (delta / temperature).exp());
        if alloc.fraction > best.1.fraction {
            best = (candidate.clone(), alloc.clone());
        }
        if accept {
            current = candidate;
            current_alloc = alloc;
        }
        accepted.push(accept);
        trace.push(TracePoint {
            cumulative_iterations: iterations,
            best_fraction: best.1.fraction,
        });
        temperature *= schedule.cooling_factor;
    }

    Ok(AnnealingRun {
        result: SearchResult {
            config: best.0,
            allocation: best.1,
            fp_iterations_total: iterations,
            configs_probed: schedule.steps + 1,
        },
        trace,
        probed_fractions,
        accepted,
    })
}

/// How the most frequent training configuration is determined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NaiveMode {
    /// Mode of the full configuration tuple.
    #[default]
    Joint,
    /// Per-AP mode of each parameter independently.
    Marginal,
}

fn mode_index(counts: &[usize]) -> usize {
    // first maximum wins
    counts
        .iter()
        .enumerate()
        .fold((0, 0), |best, (i, &c)| if c > best.1 { (i, c) } else { best })
        .0
}

/// The configuration seen most often among `labels`; ties go to the
/// earliest configuration in canonical order.
pub fn naive_baseline(labels: &[BeamConfig], cfg: &NetworkConfig, mode: NaiveMode) -> Result<BeamConfig> {
    if labels.is_empty() {
        return Err(Error::Empty("training label set"));
    }
    for q in labels {
        q.validate(cfg)?;
    }
    match mode {
        NaiveMode::Joint => {
            let mut counts: HashMap<usize, usize> = HashMap::new();
            for q in labels {
                *counts.entry(q.canonical_index(cfg)).or_default() += 1;
            }
            let (index, _) = counts
                .into_iter()
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
                .expect("non-empty");
            Ok(BeamConfig::from_canonical_index(cfg, index))
        }
        NaiveMode::Marginal => {
            let (nw, nd) = (cfg.beamwidth_set.len(), cfg.direction_set.len());
            let mut widths = Vec::with_capacity(cfg.n_aps);
            let mut directions = Vec::with_capacity(cfg.n_aps);
            for m in 0..cfg.n_aps {
                let mut cw = vec![0; nw];
                let mut cd = vec![0; nd];
                for q in labels {
                    cw[q.widths[m]] += 1;
                    cd[q.directions[m]] += 1;
                }
                widths.push(mode_index(&cw));
                directions.push(mode_index(&cd));
            }
            Ok(BeamConfig { widths, directions })
        }
    }
}
