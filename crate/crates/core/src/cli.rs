//! Batch command-line interface.
//!
//! Exit codes: 0 success, 2 bad flags or hyperparameters, 3 bad input
//! data or model files, 4 numerical failure while fitting.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::crossval::{grid_search_with, score, Metric, SearchOptions};
use crate::dataset::{load_csv, train_test_split, CsvTable, Dataset, Target, Task};
use crate::error::{Error, Result};
use crate::folds::{make_folds, make_stratified_folds, FoldAssignment};
use crate::learners::{fit, parse_axis, Family, FittedModel, HyperGrid};
use crate::metalearn::{
    bias_variance_curve, curve_to_csv, tune_all, DgpConfig, DgpFunction, MetaConfig, Strategy,
};
use crate::rng::derive_seed;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(
    name = "tunekit",
    version,
    about = "Cross-validated tuning and selection of supervised learners"
)]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "TUNEKIT_JOBS")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grid-search one learner family by K-fold CV.
    Tune(TuneArgs),
    /// Tune a roster of families and select one.
    Meta(MetaArgs),
    /// Predict with a saved model.
    Predict(PredictArgs),
    /// Monte Carlo bias-variance curve on synthetic data.
    BvCurve(BvArgs),
    /// Write a fold assignment.
    Folds(FoldsArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Outcome column name.
    #[arg(long)]
    pub target: String,
    /// regression (regress) or classification (classify).
    #[arg(long)]
    pub task: Task,
    #[arg(long = "kfolds", default_value_t = 5)]
    pub kfolds: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Hold out this share of rows and report the winner's error on it.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Pick the simplest grid point within one standard error of the best.
    #[arg(long)]
    pub one_se: bool,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub common: DataArgs,
    #[arg(long)]
    pub learner: Family,
    /// `name=v1,v2` or `name=start:stop:step`; repeat for more axes.
    #[arg(long, required = true)]
    pub grid: Vec<String>,
}

#[derive(Debug, Args)]
pub struct MetaArgs {
    #[command(flatten)]
    pub common: DataArgs,
    /// One grid per line: `family name=values ...`. Blank lines and `#`
    /// comments are skipped.
    #[arg(long)]
    pub roster: PathBuf,
    /// best: smallest CV error; first: first family whose CV error is at
    /// or below --benchmark (an error, so lower is better).
    #[arg(long, default_value = "best")]
    pub strategy: Strategy,
    #[arg(long, allow_negative_numbers = true)]
    pub benchmark: Option<f64>,
    /// Also save the top --ensemble-size family winners.
    #[arg(long)]
    pub ensemble: bool,
    #[arg(long, default_value_t = 3)]
    pub ensemble_size: usize,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Outcome column; when given, errors and a summary line are added.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BvArgs {
    /// linear, sine or step.
    #[arg(long)]
    pub dgp: String,
    #[arg(long)]
    pub family: Family,
    /// Complexity axis, e.g. `k=1:51:1`; repeat to fix other keys.
    #[arg(long, required = true)]
    pub axis: Vec<String>,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.3)]
    pub sigma: f64,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FoldsArgs {
    /// Number of rows (instead of --data).
    #[arg(long, conflicts_with = "data")]
    pub n: Option<usize>,
    #[arg(long, requires = "target")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub target: Option<String>,
    /// Deal each class of --target evenly across folds.
    #[arg(long, requires = "target")]
    pub stratify: bool,
    #[arg(long = "kfolds", default_value_t = 5)]
    pub kfolds: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParam { .. } | Error::Config(_) => 2,
        Error::Io { .. }
        | Error::Csv(_)
        | Error::MissingColumn(_)
        | Error::EmptyCell { .. }
        | Error::BadNumber { .. }
        | Error::InvalidData(_)
        | Error::Dimension { .. }
        | Error::ModelFormat { .. } => 3,
        Error::Fit(_) => 4,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to stderr, summaries to `stdout`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("tunekit: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut summary = String::new();
    pool.install(|| match &cli.command {
        Command::Tune(a) => cmd_tune(a, &mut summary),
        Command::Meta(a) => cmd_meta(a, &mut summary),
        Command::Predict(a) => cmd_predict(a, &mut summary),
        Command::BvCurve(a) => cmd_bv_curve(a, &mut summary),
        Command::Folds(a) => cmd_folds(a, &mut summary),
    })?;
    stdout
        .write_all(summary.as_bytes())
        .map_err(|source| Error::Io {
            path: PathBuf::from("<stdout>"),
            source,
        })
}

fn check_common(a: &DataArgs) -> Result<()> {
    if a.kfolds < 2 {
        return Err(Error::Config(format!(
            "--kfolds {} must be at least 2",
            a.kfolds
        )));
    }
    if let Some(f) = a.test_fraction {
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::Config(format!(
                "--test-fraction {f} must lie strictly between 0 and 1"
            )));
        }
    }
    Ok(())
}

/// Loads the data and applies the optional hold-out split.
fn load_training(a: &DataArgs) -> Result<(Dataset, Option<Dataset>)> {
    let data = load_csv(&a.data, &a.target, a.task)?;
    match a.test_fraction {
        Some(f) => {
            let (train, test) = train_test_split(&data, f, derive_seed(a.seed, "holdout", &[]))?;
            Ok((train, Some(test)))
        }
        None => Ok((data, None)),
    }
}

fn cmd_tune(a: &TuneArgs, out: &mut String) -> Result<()> {
    check_common(&a.common)?;
    let axes = a
        .grid
        .iter()
        .map(|g| parse_axis(g))
        .collect::<Result<Vec<_>>>()?;
    let grid = HyperGrid::new(a.learner, a.common.task, axes)?;
    let (train, test) = load_training(&a.common)?;
    let options = SearchOptions {
        one_se: a.common.one_se,
    };
    let report = grid_search_with(&grid, &train, a.common.kfolds, a.common.seed, options)?;
    let model = fit(
        &report.best().spec,
        &train,
        derive_seed(a.common.seed, "refit", &[0]),
    )?;
    write_atomic(&a.common.out, "grid_report.csv", &report.to_csv())?;
    write_atomic(&a.common.out, "best_model.txt", &model.to_text())?;
    let best = report.best();
    say(out, format!("winner: {}", best.spec))?;
    say(
        out,
        format!("cv_estimate ({}): {:?}", best.metric, best.cv_estimate),
    )?;
    say(out, format!("std_error: {:?}", best.std_error))?;
    if let Some(test) = test {
        let err = score(test.target(), &model.predict(test.features())?)?;
        say(out, format!("test_error ({}): {:?}", best.metric, err))?;
    }
    Ok(())
}

fn read_roster(path: &Path, task: Task) -> Result<Vec<HyperGrid>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| HyperGrid::parse_line(l, task))
        .collect()
}

fn cmd_meta(a: &MetaArgs, out: &mut String) -> Result<()> {
    check_common(&a.common)?;
    let roster = read_roster(&a.roster, a.common.task)?;
    let mut config = MetaConfig::new(roster, a.common.kfolds, a.common.seed);
    config.strategy = a.strategy;
    config.benchmark = a.benchmark;
    config.ensemble = a.ensemble;
    config.ensemble_size = a.ensemble_size;
    config.search = SearchOptions {
        one_se: a.common.one_se,
    };
    config.validate()?;
    let (train, test) = load_training(&a.common)?;
    let report = tune_all(&config, &train)?;
    write_atomic(&a.common.out, "meta_report.csv", &report.to_csv())?;
    write_atomic(
        &a.common.out,
        "winner_model.txt",
        &report.selected().model.to_text(),
    )?;
    for (i, model) in report.ensemble_models().into_iter().enumerate() {
        write_atomic(
            &a.common.out,
            &format!("ensemble_member_{}.txt", i + 1),
            &model.to_text(),
        )?;
    }
    let s = report.selected();
    say(out, format!("winner: {}", s.spec()))?;
    say(
        out,
        format!("cv_estimate ({}): {:?}", report.metric, s.cv_estimate()),
    )?;
    say(out, format!("std_error: {:?}", s.std_error()))?;
    say(
        out,
        format!(
            "families tuned: {} ({})",
            report.families.len(),
            report.stop_reason
        ),
    )?;
    if let Some(test) = test {
        let err = score(test.target(), &s.model.predict(test.features())?)?;
        say(out, format!("test_error ({}): {:?}", report.metric, err))?;
    }
    Ok(())
}

fn cmd_predict(a: &PredictArgs, out: &mut String) -> Result<()> {
    let text = fs::read_to_string(&a.model).map_err(|source| Error::Io {
        path: a.model.clone(),
        source,
    })?;
    let model = FittedModel::from_text(&text)?;
    let table = CsvTable::read(&a.data)?;
    let target_col = a
        .target
        .as_deref()
        .map(|t| table.column_index(t))
        .transpose()?;
    let (x, _) = table.feature_matrix(target_col)?;
    let predictions = model.predict(&x)?;
    let label = |i: usize| match &predictions {
        Target::Numeric(v) => format!("{:?}", v[i]),
        Target::Classes(c) => model.class_names()[c[i]].clone(),
    };

    let mut csv = String::new();
    match target_col {
        None => {
            csv.push_str("row_index,prediction\n");
            for i in 0..x.nrows() {
                csv.push_str(&format!("{},{}\n", i + 1, label(i)));
            }
        }
        Some(t) => {
            csv.push_str("row_index,prediction,actual,error\n");
            let metric = Metric::for_task(model.task());
            let mut total = 0.0;
            match model.task() {
                Task::Regression => {
                    let actual = table.numeric_column(t)?;
                    for (i, y) in actual.iter().enumerate() {
                        let e = y - predictions.value(i);
                        total += e * e;
                        csv.push_str(&format!("{},{},{:?},{:?}\n", i + 1, label(i), y, e));
                    }
                }
                Task::Classification => {
                    let actual = table.text_column(t)?;
                    for (i, y) in actual.iter().enumerate() {
                        let wrong = u8::from(*y != label(i));
                        total += f64::from(wrong);
                        csv.push_str(&format!("{},{},{},{}\n", i + 1, label(i), y, wrong));
                    }
                }
            }
            let summary = total / x.nrows() as f64;
            csv.push_str(&format!("# {metric}={summary:?}\n"));
            say(out, format!("{metric}: {summary:?}"))?;
        }
    }
    write_atomic(&a.out, "predictions.csv", &csv)
}

fn cmd_bv_curve(a: &BvArgs, out: &mut String) -> Result<()> {
    let function: DgpFunction = a.dgp.parse()?;
    let axes = a
        .axis
        .iter()
        .map(|g| parse_axis(g))
        .collect::<Result<Vec<_>>>()?;
    let grid = HyperGrid::new(a.family, Task::Regression, axes)?;
    let dgp = DgpConfig::new(function, a.sigma, a.n, a.reps, a.seed);
    dgp.validate()?;
    let rows = bias_variance_curve(&dgp, &grid)?;
    write_atomic(&a.out, "bv_curve.csv", &curve_to_csv(&rows))?;
    let best = rows
        .iter()
        .min_by(|x, y| x.test_mse.total_cmp(&y.test_mse))
        .expect("non-empty grid");
    say(
        out,
        format!(
            "lowest test_mse at {}: {:?}",
            best.complexity, best.test_mse
        ),
    )
}

fn cmd_folds(a: &FoldsArgs, out: &mut String) -> Result<()> {
    if a.n.is_none() && a.data.is_none() {
        return Err(Error::Config("give --n or --data".into()));
    }
    if a.stratify && a.data.is_none() {
        return Err(Error::Config("--stratify needs --data and --target".into()));
    }
    if let Some(n) = a.n {
        if a.kfolds > n || a.kfolds < 2 {
            return Err(Error::Config(format!(
                "K={} folds for n={n} rows",
                a.kfolds
            )));
        }
    }
    let folds: FoldAssignment = match (&a.data, &a.target) {
        (Some(path), Some(target)) => {
            let table = CsvTable::read(path)?;
            let labels = table.text_column(table.column_index(target)?)?;
            if a.stratify {
                let mut distinct: Vec<&String> = labels.iter().collect();
                distinct.sort();
                distinct.dedup();
                let codes: Vec<usize> = labels
                    .iter()
                    .map(|l| distinct.binary_search(&l).expect("label present"))
                    .collect();
                make_stratified_folds(&codes, a.kfolds, a.seed)?
            } else {
                make_folds(labels.len(), a.kfolds, a.seed)?
            }
        }
        _ => make_folds(a.n.expect("checked above"), a.kfolds, a.seed)?,
    };
    let mut csv = String::from("row_index,fold_id\n");
    for (i, f) in folds.fold_of().iter().enumerate() {
        csv.push_str(&format!("{},{}\n", i + 1, f + 1));
    }
    write_atomic(&a.out, "folds.csv", &csv)?;
    let counts: Vec<String> = folds.counts().iter().map(usize::to_string).collect();
    say(out, format!("fold sizes: {}", counts.join("/")))
}

fn say(out: &mut String, line: String) -> Result<()> {
    out.push_str(&line);
    out.push('\n');
    Ok(())
}

/// Writes `dir/name` via a temporary file and a rename.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, contents).map_err(io(&tmp))?;
    fs::rename(&tmp, &target).map_err(io(&target))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_quiet(args: &[&str]) -> (i32, String) {
        let mut out = Vec::new();
        let code = run(
            std::iter::once("tunekit").chain(args.iter().copied()),
            &mut out,
        );
        (code, String::from_utf8(out).unwrap())
    }

    fn regression_csv(dir: &Path) -> PathBuf {
        let path = dir.join("d.csv");
        let mut text = String::from("a,b,y\n");
        for i in 0..30 {
            let a = i as f64 / 10.0;
            let b = ((i * 7) % 11) as f64;
            text.push_str(&format!("{a},{b},{}\n", 2.0 * a - 0.1 * b));
        }
        fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn tune_writes_report_and_model() {
        let dir = tempfile::tempdir().unwrap();
        let data = regression_csv(dir.path());
        let out = dir.path().join("out");
        let (code, stdout) = run_quiet(&[
            "tune",
            "--data",
            data.to_str().unwrap(),
            "--target",
            "y",
            "--task",
            "regress",
            "--learner",
            "knn",
            "--grid",
            "k=1,3,5",
            "--kfolds",
            "5",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        assert!(stdout.starts_with("winner: knn"));
        let report = fs::read_to_string(out.join("grid_report.csv")).unwrap();
        assert_eq!(report.lines().count(), 4);
        assert_eq!(report.lines().filter(|l| l.ends_with(",1")).count(), 1);
        assert!(
            FittedModel::from_text(&fs::read_to_string(out.join("best_model.txt")).unwrap())
                .is_ok()
        );
    }

    #[test]
    fn exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let data = regression_csv(dir.path());
        let d = data.to_str().unwrap();
        let o = dir.path().to_str().unwrap();
        let base = [
            "tune",
            "--data",
            d,
            "--target",
            "y",
            "--task",
            "regress",
            "--learner",
            "knn",
            "--out",
            o,
        ];
        let with = |extra: &[&str]| {
            let mut v = base.to_vec();
            v.extend_from_slice(extra);
            run_quiet(&v).0
        };
        assert_eq!(with(&["--grid", "k=0"]), 2);
        assert_eq!(with(&["--grid", "k=1", "--kfolds", "1"]), 2);
        assert_eq!(with(&["--grid", "k=1", "--bogus"]), 2);
        assert_eq!(
            run_quiet(&[
                "tune",
                "--data",
                "/nonexistent.csv",
                "--target",
                "y",
                "--task",
                "regress",
                "--learner",
                "knn",
                "--grid",
                "k=1"
            ])
            .0,
            3
        );
        let mut missing = base.to_vec();
        missing[4] = "nope";
        missing.extend_from_slice(&["--grid", "k=1"]);
        assert_eq!(run_quiet(&missing).0, 3);
        assert_eq!(
            run_quiet(&["folds", "--n", "3", "--kfolds", "4", "--out", o]).0,
            2
        );
        assert_eq!(
            run_quiet(&[
                "bv-curve", "--dgp", "cosine", "--family", "knn", "--axis", "k=1", "--out", o
            ])
            .0,
            2
        );
    }

    #[test]
    fn folds_file() {
        let dir = tempfile::tempdir().unwrap();
        let o = dir.path().to_str().unwrap();
        assert_eq!(
            run_quiet(&["folds", "--n", "6", "--kfolds", "3", "--out", o]).0,
            0
        );
        let text = fs::read_to_string(dir.path().join("folds.csv")).unwrap();
        let ids: Vec<&str> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap())
            .collect();
        assert_eq!(ids.len(), 6);
        for f in ["1", "2", "3"] {
            assert_eq!(ids.iter().filter(|&&i| i == f).count(), 2);
        }
    }

    #[test]
    fn predict_memorizes_with_one_neighbor() {
        let dir = tempfile::tempdir().unwrap();
        let data = regression_csv(dir.path());
        let (d, o) = (data.to_str().unwrap(), dir.path().to_str().unwrap());
        let tune = [
            "tune",
            "--data",
            d,
            "--target",
            "y",
            "--task",
            "regress",
            "--learner",
            "knn",
            "--grid",
            "k=1",
            "--out",
            o,
        ];
        assert_eq!(run_quiet(&tune).0, 0);
        let model = dir.path().join("best_model.txt");
        let (code, stdout) = run_quiet(&[
            "predict",
            "--model",
            model.to_str().unwrap(),
            "--data",
            d,
            "--target",
            "y",
            "--out",
            o,
        ]);
        assert_eq!(code, 0);
        assert_eq!(stdout.trim(), "mse: 0.0");
        let text = fs::read_to_string(dir.path().join("predictions.csv")).unwrap();
        assert!(text
            .lines()
            .skip(1)
            .filter(|l| !l.starts_with('#'))
            .all(|l| l.ends_with(",0.0")));
        assert_eq!(text.lines().last().unwrap(), "# mse=0.0");
    }
}
