use std::fs;
use std::path::{Path, PathBuf};

use conformal_core::conformal::{
    full_conformal, jackknife_band, multi_split_conformal, naive_band, roo_relaxed, roo_split_conformal,
    split_conformal, ConformityScore, TrialGrid,
};
use conformal_core::data::{format_real, read_query_csv, DataSet, MiscoverageLevel, SplitConfig};
use conformal_core::estimators::{Estimator, RegressionAlgorithm};
use conformal_core::interval::Interval;
use conformal_core::loco::{loco_global, loco_local, Selection};
use conformal_core::rng::derive_seed;
use conformal_core::simbench::{run_experiment, Experiment, ExperimentConfig};

use crate::config::{EstimatorSpec, FileConfig, ScoreChoice, VariantChoice};
use crate::error::{CliError, CliResult};
use crate::{BandArgs, Common, LocoArgs, SimulateArgs};

struct Resolved {
    file: FileConfig,
    alpha: MiscoverageLevel,
    seed: u64,
}

fn resolve(common: &Common) -> CliResult<Resolved> {
    let file = match &common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let alpha = MiscoverageLevel::new(file.pick(common.alpha, "alpha", 0.1)?)?;
    let seed = file.pick(common.seed, "seed", 0)?;
    Ok(Resolved { file, alpha, seed })
}

fn read_data(path: &Path) -> CliResult<DataSet> {
    DataSet::read_csv(path).map_err(|source| CliError::File {
        path: path.display().to_string(),
        source,
    })
}

fn read_queries(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let file = fs::File::open(path).map_err(|e| CliError::File {
        path: path.display().to_string(),
        source: e.into(),
    })?;
    read_query_csv(file).map_err(|source| CliError::File {
        path: path.display().to_string(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn band(args: BandArgs) -> CliResult<String> {
    let Resolved { file, alpha, seed } = resolve(&args.common)?;
    let est = file.pick(args.estimator, "estimator", EstimatorSpec::Fixed(RegressionAlgorithm::ols()))?;
    let variant = file.pick(args.variant, "variant", VariantChoice::Split)?;
    let score_kind = file.pick(args.score, "score", ScoreChoice::Absolute)?;
    let mad = file.pick_opt(args.mad_estimator, "mad_estimator")?;
    let ratio = file.pick(args.ratio, "ratio", 0.5)?;
    let splits = file.pick_opt(args.splits, "splits")?;
    let grid_lo = file.pick_opt(args.grid_lo, "grid_lo")?;
    let grid_hi = file.pick_opt(args.grid_hi, "grid_hi")?;
    let grid_n = file.pick_opt(args.grid_n, "grid_n")?;
    let out = file.pick(args.common.out.clone(), "out", PathBuf::from("intervals.csv"))?;

    let uses_grid = grid_lo.is_some() || grid_hi.is_some() || grid_n.is_some();
    if uses_grid && variant != VariantChoice::Full {
        return Err(CliError::Usage("grid options apply to the full variant only".into()));
    }
    if splits.is_some() && variant != VariantChoice::Multi {
        return Err(CliError::Usage("--splits applies to the multi variant only".into()));
    }
    if grid_lo.is_some() != grid_hi.is_some() {
        return Err(CliError::Usage("give both --grid-lo and --grid-hi, or neither".into()));
    }

    let data = read_data(&args.train)?;
    let queries = read_queries(&args.query)?;
    for x in &queries {
        data.check_dim(x)?;
    }
    let alg = est.build(&data, seed)?;
    let score = match score_kind {
        ScoreChoice::Absolute => ConformityScore::absolute(),
        ScoreChoice::Weighted => {
            let mad_alg = match &mad {
                Some(m) => m.build(&data, seed)?,
                None => alg.clone(),
            };
            ConformityScore::locally_weighted(mad_alg)
        }
    };
    let split = SplitConfig::new(seed, ratio)?;

    let intervals: Vec<Interval> = match variant {
        VariantChoice::Full => {
            let count = grid_n.unwrap_or(TrialGrid::DEFAULT_COUNT);
            let grid = match (grid_lo, grid_hi) {
                (Some(lo), Some(hi)) => TrialGrid::new(lo, hi, count)?,
                _ => TrialGrid::around(data.y().as_slice(), count)?,
            };
            queries
                .iter()
                .map(|x| Ok(full_conformal(&alg, &data, x, alpha, &grid, &score)?.hull))
                .collect::<CliResult<_>>()?
        }
        VariantChoice::Multi => {
            let seeds: Vec<u64> = (0..splits.unwrap_or(10) as u64).map(|k| derive_seed(seed, k)).collect();
            let band = multi_split_conformal(&alg, &data, alpha, ratio, &seeds, &score)?;
            queries.iter().map(|x| band.evaluate(x)).collect::<Result<_, _>>()?
        }
        other => {
            let band = match other {
                VariantChoice::Split => split_conformal(&alg, &data, alpha, &split, &score)?,
                VariantChoice::Jackknife => jackknife_band(&alg, &data, alpha, &score)?,
                VariantChoice::Naive => naive_band(&alg, &data, alpha, &score)?,
                VariantChoice::Roo => roo_split_conformal(&alg, &data, alpha, &split, &score)?,
                VariantChoice::RooRelaxed => roo_relaxed(&alg, &data, alpha, &split, &score)?,
                VariantChoice::Full | VariantChoice::Multi => unreachable!(),
            };
            queries.iter().map(|x| band.evaluate(x)).collect::<Result<_, _>>()?
        }
    };

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (1..=data.d()).map(|j| format!("x{j}")).collect();
    header.extend(["lo", "hi", "variant", "alpha"].map(String::from));
    w.write_record(&header)?;
    for (x, iv) in queries.iter().zip(&intervals) {
        let mut rec: Vec<String> = x.iter().map(|v| format_real(*v)).collect();
        rec.push(format_real(iv.lo));
        rec.push(format_real(iv.hi));
        rec.push(variant.as_str().into());
        rec.push(format_real(alpha.alpha()));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Core(e.into_error().into()))?;
    write_file(&out, &bytes)?;

    let unbounded = intervals.iter().filter(|iv| !iv.is_empty() && !iv.is_finite()).count();
    Ok(format!(
        "band: {} intervals ({}, {}, alpha = {}), {} unbounded -> {}",
        intervals.len(),
        variant.as_str(),
        alg.name(),
        alpha.alpha(),
        unbounded,
        out.display()
    ))
}

pub fn loco(args: LocoArgs) -> CliResult<String> {
    let Resolved { file, alpha, seed } = resolve(&args.common)?;
    let est = file.pick(args.estimator, "estimator", EstimatorSpec::Fixed(RegressionAlgorithm::ols()))?;
    let ratio = file.pick(args.ratio, "ratio", 0.5)?;
    let columns = file.pick_opt(args.columns, "columns")?;
    let select = file.pick_opt(args.select, "select")?;
    let folds = file.pick(args.folds, "folds", 10)?;
    let local = args.local || file.get::<bool>("local")?.unwrap_or(false);
    let out = file.pick(args.common.out.clone(), "out", PathBuf::from("loco_out"))?;

    let data = read_data(&args.data)?;
    let alg = est.build(&data, seed)?;
    let split = SplitConfig::new(seed, ratio)?;
    let selection = match (select.as_deref(), &columns) {
        (Some(_), Some(_)) => return Err(CliError::Usage("--select and --columns are exclusive".into())),
        (Some("lasso_cv"), None) => Selection::LassoCv {
            folds,
            seed: derive_seed(seed, 1),
        },
        (Some(other), None) => return Err(CliError::Usage(format!("unknown selection `{other}` (expected lasso_cv)"))),
        (None, Some(c)) => Selection::Fixed(c.0.clone()),
        (None, None) => Selection::Fixed((0..data.d()).collect()),
    };

    let report = loco_global(&alg, &data, alpha, &split, &selection)?;
    let local_csv = if local {
        let cols = columns.as_ref().map(|c| c.0.as_slice());
        let loc = loco_local(&alg, &data, alpha, &split, cols)?;
        let mut buf = Vec::new();
        loc.write_csv(&mut buf)?;
        Some(buf)
    } else {
        None
    };

    let mut csv_buf = Vec::new();
    report.write_csv(&mut csv_buf)?;
    let json = report.to_json()?;
    write_file(&out.join("report.json"), json.as_bytes())?;
    write_file(&out.join("report.csv"), &csv_buf)?;
    if let Some(buf) = &local_csv {
        write_file(&out.join("local.csv"), buf)?;
    }

    let tested = report.tested.len();
    Ok(format!(
        "loco: {} covariate(s) tested at alpha/|S| = {}/{} = {}{} -> {}",
        tested,
        alpha.alpha(),
        tested.max(1),
        format_real(report.adjusted_alpha),
        if local { ", per-point intervals in local.csv" } else { "" },
        out.display()
    ))
}

pub fn simulate(args: SimulateArgs) -> CliResult<String> {
    let Resolved { file, alpha, seed } = resolve(&args.common)?;
    let experiment: String = file
        .pick_opt(args.experiment, "experiment")?
        .ok_or_else(|| CliError::Usage("--experiment is required".into()))?;
    let experiment: Experiment = experiment.parse()?;
    let reps = file.pick(args.reps, "reps", 20)?;
    let scale = file.pick(args.scale, "scale", 1.0)?;
    let grid_n = file.pick(args.grid_n, "grid_n", TrialGrid::DEFAULT_COUNT)?;
    let timing = args.timing || file.get::<bool>("timing")?.unwrap_or(false);
    let out = file.pick(args.common.out.clone(), "out", PathBuf::from("sim_out"))?;

    let mut cfg = ExperimentConfig::new(experiment, reps, seed).with_scale(scale);
    cfg.alpha = alpha.alpha();
    cfg.grid_count = grid_n;
    cfg.timing = timing;
    let output = run_experiment(&cfg)?;

    let mut metrics = Vec::new();
    output.write_csv(&mut metrics)?;
    let mut figure = Vec::new();
    output.write_figure_csv(&mut figure)?;
    let manifest = output.manifest_json()?;
    let figure_name = format!("figure_{}.csv", experiment.as_str());
    write_file(&out.join("metrics.csv"), &metrics)?;
    write_file(&out.join(&figure_name), &figure)?;
    write_file(&out.join("manifest.json"), manifest.as_bytes())?;

    Ok(format!(
        "simulate {}: {} rows from {} reps (seed {}) -> {}",
        experiment.as_str(),
        output.rows.len(),
        reps,
        seed,
        out.display()
    ))
}
