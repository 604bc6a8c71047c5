use std::path::{Path, PathBuf};

use beamfair::beamsearch::{
    exhaustive_search_instance, simulated_annealing_instance, AnnealingSchedule, FixedPointBudget, Instance,
    NaiveMode,
};
use beamfair::config::Point;
use beamfair::dataset::{self, GenerateOptions, OracleKind, Placement};
use beamfair::eval::{bootstrap_mean_ci, export_report, export_svg, Evaluator, MethodSpec, ReportRow};
use beamfair::mlp::{checkpoint, examples_from_records, fit_with_progress, predict, HeadLayout, MlpModel, TrainConfig};
use beamfair::scenario::sample_scenario_c1;
use beamfair::{BeamConfig, Error, NetworkConfig, Scenario, UeState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::{
    load_config, CliError, CliResult, EvalArgs, GenArgs, InitConfigArgs, MethodArg, Mode, NaiveModeArg, OracleArg,
    RunManifest, SolveArgs, SolveMethod, SolveOutput, TrainArgs,
};

pub(crate) fn init_config(args: &InitConfigArgs) -> CliResult<()> {
    NetworkConfig::default().save(&args.out)?;
    Ok(())
}

pub(crate) fn gen(args: &GenArgs, threads: Option<usize>) -> CliResult<()> {
    let cfg = load_config(args.config.as_deref())?;
    let manifest = RunManifest::new("gen", &cfg, Some(args.seed), threads, args);
    let placement = match args.mode {
        Mode::C1 => Placement::C1,
        Mode::C2 => Placement::C2 {
            center: Point::new(args.center_x, args.center_y),
            radius: args.radius,
        },
    };
    let mut opts = GenerateOptions::new(args.samples, placement, args.seed);
    if args.oracle == OracleArg::Sa {
        opts.oracle = OracleKind::Annealing;
        opts.annealing.steps = args.sa_steps;
    }
    let records = dataset::generate(&cfg, &opts)?;
    dataset::save(&records, &args.out)?;
    manifest.finish(vec![args.out.clone()])?;
    eprintln!("wrote {} records to {}", records.len(), args.out.display());
    Ok(())
}

fn log_path(args: &TrainArgs) -> PathBuf {
    args.log.clone().unwrap_or_else(|| {
        let mut name = args.out_model.as_os_str().to_owned();
        name.push(".log.csv");
        PathBuf::from(name)
    })
}

pub(crate) fn train(args: &TrainArgs, threads: Option<usize>) -> CliResult<()> {
    let cfg = load_config(args.config.as_deref())?;
    let manifest = RunManifest::new("train", &cfg, Some(args.seed), threads, args);
    let records = dataset::load(&args.data)?;
    dataset::validate_records(&records, &cfg)?;
    let examples = examples_from_records::<f64>(&records, &cfg)?;
    let hp = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch,
        seed: args.seed,
        hidden: args.hidden.clone(),
        ..TrainConfig::default()
    };
    let mut model = MlpModel::<f64>::new_seeded(examples[0].features.len(), &hp.hidden, HeadLayout::from_config(&cfg), hp.seed);
    let every = (args.epochs / 20).max(1);
    let log = fit_with_progress(&mut model, &examples, &hp, |s| {
        if s.epoch % every == 0 || s.epoch == args.epochs {
            eprintln!("epoch {:>4}  loss {:.5}  head accuracy {:.4}", s.epoch, s.loss, s.accuracy);
        }
    })?;
    checkpoint::save(&model, &cfg, &args.out_model)?;
    let log_file = log_path(args);
    let mut w = csv::Writer::from_path(&log_file).map_err(|e| csv_error(&log_file, e))?;
    for s in &log.epochs {
        w.serialize(s).map_err(|e| csv_error(&log_file, e))?;
    }
    w.flush().map_err(|e| Error::Io {
        path: log_file.clone(),
        source: e,
    })?;
    manifest.finish(vec![args.out_model.clone(), log_file])?;
    Ok(())
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let msg = e.to_string();
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        _ => Error::Malformed {
            path: path.to_path_buf(),
            line: 0,
            msg,
        },
    }
    .into()
}

pub(crate) fn eval(args: &EvalArgs, threads: Option<usize>) -> CliResult<()> {
    let cfg = load_config(args.config.as_deref())?;
    let manifest = RunManifest::new("eval", &cfg, Some(args.seed), threads, args);
    let mut methods = args.methods.clone();
    methods.dedup();
    let model = match (&args.model, methods.contains(&MethodArg::Neural)) {
        (Some(p), true) => Some(checkpoint::load::<f64>(p, &cfg)?),
        (None, true) => return Err(CliError::Usage("method neural needs --model".into())),
        _ => None,
    };
    let training_labels = match (&args.train_data, methods.contains(&MethodArg::Naive)) {
        (Some(p), true) => {
            let train = dataset::load(p)?;
            dataset::validate_records(&train, &cfg)?;
            dataset::labels(&train)
        }
        (None, true) => return Err(CliError::Usage("method naive needs --train-data".into())),
        _ => Vec::new(),
    };
    let records = dataset::load(&args.data)?;
    dataset::validate_records(&records, &cfg)?;
    let evaluator = Evaluator::new(&cfg, &records, args.fp_iters)?;
    let schedule = AnnealingSchedule {
        initial_temperature: args.sa_temperature,
        cooling_factor: args.sa_cooling,
        steps: args.sa_steps,
        seed: args.seed,
    };

    let mut rows: Vec<ReportRow> = Vec::new();
    for method in &methods {
        let spec = match method {
            MethodArg::Sa => {
                let curve = evaluator.annealing_curve(&schedule)?;
                let last = curve.last().copied().unwrap_or((0, 0.0));
                println!("method=annealing final_cumulative_fp_iterations={} mean_efficiency={}", last.0, last.1);
                rows.extend(curve.into_iter().map(|(iters, eff)| ReportRow {
                    method: "annealing".into(),
                    distribution: evaluator.distribution(),
                    cumulative_fp_iterations: iters,
                    mean_efficiency: eff,
                    sample_count: evaluator.len(),
                }));
                continue;
            }
            MethodArg::Exhaustive => MethodSpec::Exhaustive,
            MethodArg::Neural => MethodSpec::Neural(model.as_ref().expect("loaded above")),
            MethodArg::Naive => MethodSpec::Naive {
                training_labels: &training_labels,
                mode: match args.naive_mode {
                    NaiveModeArg::Joint => NaiveMode::Joint,
                    NaiveModeArg::Marginal => NaiveMode::Marginal,
                },
            },
        };
        let report = evaluator.evaluate(&spec)?;
        let (lo, hi) = bootstrap_mean_ci(&report.per_sample_efficiencies, 2000, 0.95, args.seed);
        println!(
            "method={} mean_efficiency={} ci95_low={} ci95_high={} solves_per_sample={}",
            report.method.name(),
            report.mean_efficiency,
            lo,
            hi,
            report.solves_per_sample
        );
        rows.push(report.row());
    }
    export_report(&rows, &args.out)?;
    let mut outputs = vec![args.out.clone()];
    if let Some(svg) = &args.svg {
        export_svg(&rows, svg)?;
        outputs.push(svg.clone());
    }
    manifest.finish(outputs)?;
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioRow {
    x_m: f64,
    y_m: f64,
    tx_direction_deg: f64,
}

/// Reads a scenario CSV with header `x_m,y_m,tx_direction_deg`.
pub fn read_scenario_csv(path: &Path, cfg: &NetworkConfig) -> CliResult<Scenario> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut rows = Vec::new();
    for (i, row) in r.deserialize::<ScenarioRow>().enumerate() {
        let row = row.map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            line: i + 2,
            msg: e.to_string(),
        })?;
        rows.push(UeState {
            position: Point::new(row.x_m, row.y_m),
            tx_direction: row.tx_direction_deg.to_radians(),
        });
    }
    Ok(Scenario::from_rows(cfg, rows)?)
}

pub fn solve(args: &SolveArgs) -> CliResult<SolveOutput> {
    let cfg = load_config(args.config.as_deref())?;
    let scenario = match (&args.scenario_file, args.seed) {
        (Some(path), _) => read_scenario_csv(path, &cfg)?,
        (None, Some(seed)) => sample_scenario_c1(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)),
        (None, None) => return Err(CliError::Usage("give --scenario-file or --seed".into())),
    };
    let instance = Instance::<f64>::new(&cfg, &scenario)?;
    let fp = FixedPointBudget::iterations(args.fp_iters);
    let (config, allocation) = match args.method {
        SolveMethod::Exhaustive => {
            let r = exhaustive_search_instance(&instance, &cfg, fp);
            (r.config, r.allocation)
        }
        SolveMethod::Sa => {
            let schedule = AnnealingSchedule {
                steps: args.sa_steps,
                seed: args.seed.unwrap_or(0),
                ..AnnealingSchedule::default()
            };
            let r = simulated_annealing_instance(&instance, &cfg, &schedule, fp)?.result;
            (r.config, r.allocation)
        }
        SolveMethod::Neural => {
            let path = args
                .model
                .as_ref()
                .ok_or_else(|| CliError::Usage("method neural needs --model".into()))?;
            let model = checkpoint::load::<f64>(path, &cfg)?;
            let q = predict(&model, &scenario, &cfg)?;
            let a = instance.solve(&q, fp);
            (q, a)
        }
        SolveMethod::Given => {
            let q = BeamConfig {
                widths: args.widths.clone(),
                directions: args.directions.clone(),
            };
            q.validate(&cfg)?;
            let a = instance.solve(&q, fp);
            (q, a)
        }
    };
    let method = match args.method {
        SolveMethod::Exhaustive => "exhaustive",
        SolveMethod::Sa => "annealing",
        SolveMethod::Neural => "neural",
        SolveMethod::Given => "given",
    };
    Ok(SolveOutput {
        method: method.into(),
        fraction: allocation.fraction,
        residual: allocation.residual,
        iterations: allocation.iterations_used,
        powers_w: allocation.powers,
        assignment: allocation.assignment,
        beamwidths_deg: config.rx_beamwidths(&cfg).iter().map(|v| v.to_degrees()).collect(),
        directions_deg: config.rx_directions(&cfg).iter().map(|v| v.to_degrees()).collect(),
        width_indices: config.widths,
        direction_indices: config.directions,
    })
}
