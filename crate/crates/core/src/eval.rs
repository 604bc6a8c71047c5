//! Solution-efficiency evaluation against the exhaustive optimum.
//!
//! The optimum of every test sample is computed once when an [`Evaluator`]
//! is built; every method shares those denominators.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamsearch::{
    exhaustive_search_instance, naive_baseline, simulated_annealing_instance, AnnealingSchedule,
    FixedPointBudget, Instance, NaiveMode, SearchResult,
};
use crate::config::NetworkConfig;
use crate::dataset::{record_seed, Distribution, LabeledRecord};
use crate::error::{Error, Result};
use crate::mlp::{predict, MlpModel};
use crate::scenario::{BeamConfig, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exhaustive,
    Annealing,
    Neural,
    Naive,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Exhaustive => "exhaustive",
            Method::Annealing => "annealing",
            Method::Neural => "neural",
            Method::Naive => "naive",
        }
    }

    pub fn is_one_shot(&self) -> bool {
        matches!(self, Method::Neural | Method::Naive)
    }
}

/// A method together with whatever it needs to run.
#[derive(Debug, Clone, Copy)]
pub enum MethodSpec<'a> {
    Exhaustive,
    Annealing(AnnealingSchedule),
    Neural(&'a MlpModel<f64>),
    Naive {
        training_labels: &'a [BeamConfig],
        mode: NaiveMode,
    },
}

impl MethodSpec<'_> {
    pub fn method(&self) -> Method {
        match self {
            MethodSpec::Exhaustive => Method::Exhaustive,
            MethodSpec::Annealing(_) => Method::Annealing,
            MethodSpec::Neural(_) => Method::Neural,
            MethodSpec::Naive { .. } => Method::Naive,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub method: Method,
    pub distribution: Distribution,
    pub mean_efficiency: f64,
    pub per_sample_efficiencies: Vec<f64>,
    /// Mean fixed-point iterations spent per sample by the method.
    pub fp_iteration_budget: usize,
    pub sample_count: usize,
    /// Solver invocations per sample, excluding the shared optimum pass.
    pub solves_per_sample: f64,
    /// Network forward passes per sample (neural method only).
    pub forward_passes_per_sample: f64,
}

impl EvaluationReport {
    pub fn row(&self) -> ReportRow {
        ReportRow {
            method: self.method.name().to_string(),
            distribution: self.distribution,
            cumulative_fp_iterations: self.fp_iteration_budget,
            mean_efficiency: self.mean_efficiency,
            sample_count: self.sample_count,
        }
    }
}

/// One line of the CSV report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub distribution: Distribution,
    pub cumulative_fp_iterations: usize,
    pub mean_efficiency: f64,
    pub sample_count: usize,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub struct Evaluator<'a> {
    cfg: &'a NetworkConfig,
    fp: FixedPointBudget,
    distribution: Distribution,
    scenarios: Vec<Scenario>,
    instances: Vec<Instance<f64>>,
    optimum: Vec<SearchResult<f64>>,
}

impl<'a> Evaluator<'a> {
    /// Prepares `records` and runs the exhaustive optimum for each at `fp_iters`.
    pub fn new(cfg: &'a NetworkConfig, records: &[LabeledRecord], fp_iters: usize) -> Result<Self> {
        let first = records.first().ok_or(Error::Empty("test set"))?;
        if records.iter().any(|r| r.distribution != first.distribution) {
            return Err(Error::Config("test set mixes C1 and C2 records".into()));
        }
        if fp_iters == 0 {
            return Err(Error::Config("fixed-point iteration budget must be at least 1".into()));
        }
        let fp = FixedPointBudget::iterations(fp_iters);
        let instances: Vec<Instance<f64>> = records
            .par_iter()
            .map(|r| Instance::new(cfg, &r.scenario))
            .collect::<Result<_>>()?;
        let optimum = instances
            .par_iter()
            .map(|inst| exhaustive_search_instance(inst, cfg, fp))
            .collect();
        Ok(Self {
            cfg,
            fp,
            distribution: first.distribution,
            scenarios: records.iter().map(|r| r.scenario.clone()).collect(),
            instances,
            optimum,
        })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn distribution(&self) -> Distribution {
        self.distribution
    }

    pub fn fp_iters(&self) -> usize {
        self.fp.max_iters
    }

    pub fn optimum(&self) -> &[SearchResult<f64>] {
        &self.optimum
    }

    fn efficiency(&self, i: usize, fraction: f64) -> f64 {
        fraction / self.optimum[i].allocation.fraction
    }

    /// Efficiency of applying one fixed configuration per sample.
    fn one_shot<F>(&self, method: Method, pick: F) -> Result<EvaluationReport>
    where
        F: Fn(usize) -> Result<BeamConfig> + Sync,
    {
        let solves = AtomicUsize::new(0);
        let eff: Vec<f64> = (0..self.len())
            .into_par_iter()
            .map(|i| {
                let q = pick(i)?;
                solves.fetch_add(1, Ordering::Relaxed);
                Ok(self.efficiency(i, self.instances[i].solve(&q, self.fp).fraction))
            })
            .collect::<Result<_>>()?;
        Ok(self.report(method, eff, self.fp.max_iters, solves.into_inner() as f64, 0.0))
    }

    fn report(
        &self,
        method: Method,
        per_sample: Vec<f64>,
        budget: usize,
        solves: f64,
        forwards: f64,
    ) -> EvaluationReport {
        let n = per_sample.len() as f64;
        EvaluationReport {
            method,
            distribution: self.distribution,
            mean_efficiency: mean(&per_sample),
            sample_count: per_sample.len(),
            per_sample_efficiencies: per_sample,
            fp_iteration_budget: budget,
            solves_per_sample: solves / n,
            forward_passes_per_sample: forwards / n,
        }
    }

    pub fn evaluate(&self, spec: &MethodSpec<'_>) -> Result<EvaluationReport> {
        match *spec {
            MethodSpec::Exhaustive => {
                let eff = (0..self.len())
                    .map(|i| self.efficiency(i, self.optimum[i].allocation.fraction))
                    .collect();
                let n_configs = self.cfg.n_beam_configs();
                Ok(self.report(
                    Method::Exhaustive,
                    eff,
                    n_configs * self.fp.max_iters,
                    n_configs as f64 * self.len() as f64,
                    0.0,
                ))
            }
            MethodSpec::Annealing(schedule) => {
                let runs = self.annealing_runs(&schedule)?;
                let eff = runs.iter().enumerate().map(|(i, r)| self.efficiency(i, r.0)).collect();
                let iters: usize = runs.iter().map(|r| r.1).sum();
                let probed: usize = runs.iter().map(|r| r.2).sum();
                Ok(self.report(Method::Annealing, eff, iters / self.len(), probed as f64, 0.0))
            }
            MethodSpec::Neural(model) => {
                let before = model.forward_calls();
                let mut report =
                    self.one_shot(Method::Neural, |i| predict(model, &self.scenarios[i], self.cfg))?;
                report.forward_passes_per_sample = (model.forward_calls() - before) as f64 / self.len() as f64;
                Ok(report)
            }
            MethodSpec::Naive { training_labels, mode } => {
                let q = naive_baseline(training_labels, self.cfg, mode)?;
                self.one_shot(Method::Naive, |_| Ok(q.clone()))
            }
        }
    }

    fn annealing_schedule_for(&self, schedule: &AnnealingSchedule, i: usize) -> AnnealingSchedule {
        schedule.with_seed(record_seed(schedule.seed, i as u64))
    }

    /// `(best fraction, total iterations, configurations probed)` per sample.
    fn annealing_runs(&self, schedule: &AnnealingSchedule) -> Result<Vec<(f64, usize, usize)>> {
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                let s = self.annealing_schedule_for(schedule, i);
                let run = simulated_annealing_instance(&self.instances[i], self.cfg, &s, self.fp)?;
                Ok((
                    run.result.allocation.fraction,
                    run.result.fp_iterations_total,
                    run.result.configs_probed,
                ))
            })
            .collect()
    }

    /// Mean best-so-far efficiency of annealing versus cumulative iterations.
    ///
    /// Traces are aligned on the union of their iteration counts, each one
    /// holding its last value between points.
    pub fn annealing_curve(&self, schedule: &AnnealingSchedule) -> Result<Vec<(usize, f64)>> {
        let traces: Vec<Vec<(usize, f64)>> = (0..self.len())
            .into_par_iter()
            .map(|i| {
                let s = self.annealing_schedule_for(schedule, i);
                let run = simulated_annealing_instance(&self.instances[i], self.cfg, &s, self.fp)?;
                Ok(run
                    .trace
                    .iter()
                    .map(|p| (p.cumulative_iterations, self.efficiency(i, p.best_fraction)))
                    .collect())
            })
            .collect::<Result<_>>()?;
        let start = traces.iter().map(|t| t[0].0).max().unwrap_or(0);
        let mut grid: Vec<usize> = traces.iter().flatten().map(|p| p.0).filter(|&g| g >= start).collect();
        grid.sort_unstable();
        grid.dedup();
        Ok(grid
            .into_iter()
            .map(|g| {
                let total: f64 = traces
                    .iter()
                    .map(|t| {
                        let k = t.partition_point(|p| p.0 <= g);
                        t[k - 1].1
                    })
                    .sum();
                (g, total / traces.len() as f64)
            })
            .collect())
    }

    /// Efficiency-versus-iterations table: a curve per annealing schedule and
    /// one point per other method.
    pub fn sweep(
        &self,
        schedules: &[(String, AnnealingSchedule)],
        one_shot: &[MethodSpec<'_>],
    ) -> Result<Vec<ReportRow>> {
        let mut rows = Vec::new();
        for (name, schedule) in schedules {
            for (iters, eff) in self.annealing_curve(schedule)? {
                rows.push(ReportRow {
                    method: name.clone(),
                    distribution: self.distribution,
                    cumulative_fp_iterations: iters,
                    mean_efficiency: eff,
                    sample_count: self.len(),
                });
            }
        }
        for spec in one_shot {
            rows.push(self.evaluate(spec)?.row());
        }
        Ok(rows)
    }
}

/// Convenience wrapper building a one-off [`Evaluator`].
pub fn evaluate(
    spec: &MethodSpec<'_>,
    records: &[LabeledRecord],
    cfg: &NetworkConfig,
    fp_iters: usize,
) -> Result<EvaluationReport> {
    Evaluator::new(cfg, records, fp_iters)?.evaluate(spec)
}

/// Percentile bootstrap confidence interval for the mean of `samples`.
pub fn bootstrap_mean_ci(samples: &[f64], resamples: usize, level: f64, seed: u64) -> (f64, f64) {
    assert!(!samples.is_empty(), "bootstrap needs at least one sample");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = samples.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| samples[rng.gen_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let at = |q: f64| means[((q * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    (at(tail), at(1.0 - tail))
}

pub fn write_report<W: std::io::Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Config(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io("<report>", e))
}

/// Writes rows as CSV with a header:
/// `method,distribution,cumulative_fp_iterations,mean_efficiency,sample_count`.
pub fn export_report(rows: &[ReportRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_report(rows, file).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Vec<ReportRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Malformed {
        path: path.to_path_buf(),
        line: 0,
        msg: e.to_string(),
    })?;
    r.deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| Error::Malformed {
                path: path.to_path_buf(),
                line: i + 2,
                msg: e.to_string(),
            })
        })
        .collect()
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Static SVG of the sweep on a log iteration axis. Rows sharing a method
/// and distribution with more than one point are drawn as curves; single
/// points get a dashed line extending to the right edge.
pub fn render_sweep_svg(rows: &[ReportRow]) -> String {
    let (w, h, margin) = (720.0, 440.0, 60.0);
    let mut groups: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for r in rows {
        let key = format!("{} ({})", r.method, r.distribution);
        let point = (r.cumulative_fp_iterations.max(1) as f64, r.mean_efficiency);
        match groups.iter_mut().find(|g| g.0 == key) {
            Some(g) => g.1.push(point),
            None => groups.push((key, vec![point])),
        }
    }
    let xs = rows.iter().map(|r| (r.cumulative_fp_iterations.max(1) as f64).log10());
    let (x_lo, x_hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (x_lo, x_hi) = if x_lo.is_finite() { (x_lo.floor(), x_hi.ceil().max(x_lo.floor() + 1.0)) } else { (0.0, 1.0) };
    let sx = |x: f64| margin + (x.log10() - x_lo) / (x_hi - x_lo) * (w - 2.0 * margin);
    let sy = |y: f64| h - margin - y.clamp(0.0, 1.05) / 1.05 * (h - 2.0 * margin);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<path d="M{m} {t} V{b} H{r}" fill="none" stroke="black"/>"#,
        m = margin,
        t = margin,
        b = h - margin,
        r = w - margin
    );
    for k in 0..=10 {
        let y = k as f64 / 10.0;
        let _ = writeln!(svg, r#"<text x="{}" y="{:.1}" text-anchor="end">{y:.1}</text>"#, margin - 6.0, sy(y) + 4.0);
    }
    for e in x_lo as i32..=x_hi as i32 {
        let x = sx(10f64.powi(e));
        let _ = writeln!(svg, r#"<text x="{x:.1}" y="{}" text-anchor="middle">1e{e}</text>"#, h - margin + 18.0);
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">cumulative fixed-point iterations</text>"#, w / 2.0, h - 12.0);
    let _ = writeln!(svg, r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">mean solution efficiency</text>"#, h / 2.0, h / 2.0);
    for (k, (name, pts)) in groups.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if pts.len() > 1 {
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y))).collect();
            let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, path.join(" "));
        } else {
            let (x, y) = pts[0];
            let _ = writeln!(svg, r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="{color}"/>"#, sx(x), sy(y));
            let _ = writeln!(
                svg,
                r#"<line x1="{:.1}" y1="{:.1}" x2="{}" y2="{:.1}" stroke="{color}" stroke-dasharray="6 4"/>"#,
                sx(x),
                sy(y),
                w - margin,
                sy(y)
            );
        }
        let ly = margin + 16.0 * k as f64;
        let _ = writeln!(svg, r#"<text x="{}" y="{ly:.1}" fill="{color}">{name}</text>"#, margin + 10.0);
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn export_svg(rows: &[ReportRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_sweep_svg(rows)).map_err(|e| Error::io(path, e))
}
