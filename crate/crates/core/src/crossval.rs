//! K-fold cross-validated error and exhaustive grid search.
//!
//! For each fold `k` the learner is refit on the other folds (including
//! standardization) and scored on fold `k`. The CV estimate is the
//! fold-size weighted mean `Σ (n_k/n)·err_k`, which equals the mean of
//! per-row out-of-fold losses.

use std::fmt;

use rayon::prelude::*;

use crate::dataset::{Dataset, Target, Task};
use crate::error::{Error, Result};
use crate::folds::{make_folds, make_stratified_folds, FoldAssignment};
use crate::learners::{complexity_rank, fit, HyperGrid, LearnerSpec};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Mean squared error (regression).
    Mse,
    /// Mean classification error (classification).
    Mce,
}

impl Metric {
    pub fn for_task(task: Task) -> Self {
        match task {
            Task::Regression => Metric::Mse,
            Task::Classification => Metric::Mce,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mse => "mse",
            Metric::Mce => "mce",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Config(format!("length mismatch: {a} vs {b}")));
    }
    if a == 0 {
        return Err(Error::Config("cannot score empty vectors".into()));
    }
    Ok(())
}

pub fn mse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_lengths(y.len(), yhat.len())?;
    Ok(y.iter()
        .zip(yhat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / y.len() as f64)
}

pub fn mce(labels: &[usize], predicted: &[usize]) -> Result<f64> {
    check_lengths(labels.len(), predicted.len())?;
    let wrong = labels.iter().zip(predicted).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / labels.len() as f64)
}

/// MSE or MCE depending on the target kind.
pub fn score(truth: &Target, predicted: &Target) -> Result<f64> {
    match (truth, predicted) {
        (Target::Numeric(y), Target::Numeric(p)) => mse(y, p),
        (Target::Classes(y), Target::Classes(p)) => mce(y, p),
        _ => Err(Error::Config(
            "cannot score predictions of a different task".into(),
        )),
    }
}

/// One grid point's cross-validation outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub spec: LearnerSpec,
    pub metric: Metric,
    pub fold_errors: Vec<f64>,
    pub fold_sizes: Vec<usize>,
    pub cv_estimate: f64,
    pub std_error: f64,
    /// Prediction for every row from the model that did not see it.
    pub out_of_fold: Target,
}

/// `sd(errors) / √K` with the K−1 divisor.
pub fn fold_std_error(errors: &[f64]) -> f64 {
    let k = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / k;
    let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (var / k).sqrt()
}

/// Fold-weighted CV estimate `Σ (n_k/n)·err_k`.
pub fn weighted_estimate(errors: &[f64], sizes: &[usize]) -> f64 {
    let n: usize = sizes.iter().sum();
    errors
        .iter()
        .zip(sizes)
        .map(|(e, &nk)| (nk as f64 / n as f64) * e)
        .sum()
}

fn fold_predictions(
    spec: &LearnerSpec,
    data: &Dataset,
    folds: &FoldAssignment,
    k: usize,
    seed: u64,
) -> Result<Target> {
    let train = data.subset(&folds.complement(k));
    let test = data.subset(&folds.members(k));
    let model = fit(spec, &train, derive_seed(seed, "cv-fold", &[k as u64]))
        .map_err(|e| Error::Fit(format!("{spec} on fold {}: {e}", k + 1)))?;
    model.predict(test.features())
}

/// Cross-validated error of `spec` over `folds`. Deterministic in its inputs.
pub fn cv_error(
    spec: &LearnerSpec,
    data: &Dataset,
    folds: &FoldAssignment,
    seed: u64,
) -> Result<CvResult> {
    if folds.n() != data.n() {
        return Err(Error::Config(format!(
            "fold assignment covers {} rows, dataset has {}",
            folds.n(),
            data.n()
        )));
    }
    if spec.task() != data.task() {
        return Err(Error::Config(format!(
            "{} spec on {} data",
            spec.task(),
            data.task()
        )));
    }
    let per_fold: Vec<Target> = (0..folds.k())
        .into_par_iter()
        .map(|k| fold_predictions(spec, data, folds, k, seed))
        .collect::<Result<_>>()?;

    let mut out_of_fold = match data.target() {
        Target::Numeric(_) => Target::Numeric(vec![0.0; data.n()]),
        Target::Classes(_) => Target::Classes(vec![0; data.n()]),
    };
    let mut fold_errors = Vec::with_capacity(folds.k());
    for (k, predicted) in per_fold.iter().enumerate() {
        let members = folds.members(k);
        fold_errors.push(score(&data.target().select(&members), predicted)?);
        match (&mut out_of_fold, predicted) {
            (Target::Numeric(all), Target::Numeric(p)) => {
                members.iter().zip(p).for_each(|(&i, v)| all[i] = *v)
            }
            (Target::Classes(all), Target::Classes(p)) => {
                members.iter().zip(p).for_each(|(&i, v)| all[i] = *v)
            }
            _ => unreachable!("predictions share the data's task"),
        }
    }
    let fold_sizes = folds.counts().to_vec();
    Ok(CvResult {
        spec: *spec,
        metric: Metric::for_task(data.task()),
        cv_estimate: weighted_estimate(&fold_errors, &fold_sizes),
        std_error: fold_std_error(&fold_errors),
        fold_errors,
        fold_sizes,
        out_of_fold,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchOptions {
    /// Pick the least complex grid point within one standard error of the
    /// minimum instead of the minimum itself.
    pub one_se: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    pub results: Vec<CvResult>,
    pub winner: usize,
    pub metric: Metric,
    pub k: usize,
    pub seed: u64,
}

impl GridReport {
    pub fn best(&self) -> &CvResult {
        &self.results[self.winner]
    }

    /// One row per grid point: hyperparameters, estimate, standard error,
    /// per-fold errors and a 0/1 winner flag.
    pub fn to_csv(&self) -> String {
        let family = self.results[0].spec.family();
        let mut header: Vec<String> = vec!["grid_index".into()];
        header.extend(family.keys().iter().map(|k| k.to_string()));
        header.extend(["metric", "cv_estimate", "std_error"].map(String::from));
        header.extend((1..=self.k).map(|f| format!("fold_{f}")));
        header.push("winner".into());
        let mut out = header.join(",");
        out.push('\n');
        for (g, r) in self.results.iter().enumerate() {
            let mut row: Vec<String> = vec![g.to_string()];
            row.extend(r.spec.named_values().iter().map(|(_, v)| v.to_string()));
            row.push(r.metric.to_string());
            row.push(format!("{:?}", r.cv_estimate));
            row.push(format!("{:?}", r.std_error));
            row.extend(r.fold_errors.iter().map(|e| format!("{e:?}")));
            row.push(u8::from(g == self.winner).to_string());
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Index of the winning result: smallest estimate, then least complex,
/// then lowest index. With `one_se`, any point within one standard error
/// of the minimum is eligible and the least complex of those wins.
pub fn select_winner(results: &[CvResult], one_se: bool) -> usize {
    let by_estimate = |a: &usize, b: &usize| {
        results[*a]
            .cv_estimate
            .total_cmp(&results[*b].cv_estimate)
            .then_with(|| {
                complexity_rank(&results[*a].spec).cmp(&complexity_rank(&results[*b].spec))
            })
            .then(a.cmp(b))
    };
    let best = (0..results.len())
        .min_by(by_estimate)
        .expect("non-empty results");
    if !one_se {
        return best;
    }
    let limit = results[best].cv_estimate + results[best].std_error;
    (0..results.len())
        .filter(|&g| results[g].cv_estimate <= limit)
        .min_by(|a, b| {
            complexity_rank(&results[*a].spec)
                .cmp(&complexity_rank(&results[*b].spec))
                .then(a.cmp(b))
        })
        .unwrap_or(best)
}

/// Folds used for a dataset: stratified for classification.
pub fn folds_for(data: &Dataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    match data.target() {
        Target::Numeric(_) => make_folds(data.n(), k, seed),
        Target::Classes(labels) => make_stratified_folds(labels, k, seed),
    }
}

pub fn grid_search(grid: &HyperGrid, data: &Dataset, k: usize, seed: u64) -> Result<GridReport> {
    grid_search_with(grid, data, k, seed, SearchOptions::default())
}

/// Evaluates every grid point on one shared fold assignment.
pub fn grid_search_with(
    grid: &HyperGrid,
    data: &Dataset,
    k: usize,
    seed: u64,
    options: SearchOptions,
) -> Result<GridReport> {
    if grid.task() != data.task() {
        return Err(Error::Config(format!(
            "{} grid on {} data",
            grid.task(),
            data.task()
        )));
    }
    let specs = grid.specs();
    if specs.is_empty() {
        return Err(Error::Config("empty grid".into()));
    }
    let folds = folds_for(data, k, seed)?;
    let results: Vec<CvResult> = specs
        .par_iter()
        .enumerate()
        .map(|(g, spec)| {
            cv_error(
                spec,
                data,
                &folds,
                derive_seed(seed, "grid-point", &[g as u64]),
            )
        })
        .collect::<Result<_>>()?;
    Ok(GridReport {
        winner: select_winner(&results, options.one_se),
        metric: Metric::for_task(data.task()),
        results,
        k,
        seed,
    })
}
