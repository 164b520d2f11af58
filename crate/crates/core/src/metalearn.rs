//! Selection across learner families, plus the Monte Carlo bias-variance
//! experiment on synthetic data.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::crossval::{grid_search_with, score, GridReport, Metric, SearchOptions};
use crate::dataset::{Dataset, Matrix, Target, Task};
use crate::error::{Error, Result};
use crate::learners::{fit, majority, FittedModel, HyperGrid, LearnerSpec};
use crate::rng::{derive_seed, rng_for};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Tune every family, select the smallest CV error.
    BestOverall,
    /// Tune in roster order, stop at the first family with CV error at or
    /// below the benchmark.
    FirstBeatingBenchmark,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "best" | "best_overall" => Ok(Strategy::BestOverall),
            "first" | "first_beating_benchmark" => Ok(Strategy::FirstBeatingBenchmark),
            other => Err(Error::Config(format!(
                "unknown strategy {other:?} (expected best or first)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    AllTuned,
    BenchmarkMet,
    BenchmarkUnmet,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::AllTuned => "all tuned",
            StopReason::BenchmarkMet => "benchmark met",
            StopReason::BenchmarkUnmet => "benchmark unmet",
        })
    }
}

#[derive(Debug, Clone)]
pub struct MetaConfig {
    pub roster: Vec<HyperGrid>,
    pub k: usize,
    pub seed: u64,
    /// Error threshold; a family qualifies when its CV error is `<=` this.
    pub benchmark: Option<f64>,
    pub strategy: Strategy,
    pub ensemble: bool,
    pub ensemble_size: usize,
    pub search: SearchOptions,
}

impl MetaConfig {
    pub fn new(roster: Vec<HyperGrid>, k: usize, seed: u64) -> Self {
        MetaConfig {
            roster,
            k,
            seed,
            benchmark: None,
            strategy: Strategy::BestOverall,
            ensemble: false,
            ensemble_size: 1,
            search: SearchOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.roster.is_empty() {
            return Err(Error::Config("roster is empty".into()));
        }
        if self.strategy == Strategy::FirstBeatingBenchmark && self.benchmark.is_none() {
            return Err(Error::Config("strategy first needs a benchmark".into()));
        }
        if self.benchmark.is_some_and(f64::is_nan) {
            return Err(Error::Config("benchmark is NaN".into()));
        }
        if self.ensemble_size == 0 {
            return Err(Error::Config("ensemble size must be at least 1".into()));
        }
        if let Some(g) = self
            .roster
            .iter()
            .find(|g| g.task() != self.roster[0].task())
        {
            return Err(Error::Config(format!(
                "roster mixes tasks ({} grid)",
                g.family()
            )));
        }
        Ok(())
    }
}

/// A tuned family: its grid report and the winner refit on all the data.
#[derive(Debug, Clone)]
pub struct FamilySummary {
    pub roster_index: usize,
    pub report: GridReport,
    pub model: FittedModel,
    /// In-sample error of the refit winner; overfits, reported for reference.
    pub train_error: f64,
}

impl FamilySummary {
    pub fn spec(&self) -> &LearnerSpec {
        &self.report.best().spec
    }

    pub fn cv_estimate(&self) -> f64 {
        self.report.best().cv_estimate
    }

    pub fn std_error(&self) -> f64 {
        self.report.best().std_error
    }
}

#[derive(Debug, Clone)]
pub struct MetaReport {
    /// Tuned families in roster order; under the benchmark strategy only
    /// those tuned before stopping.
    pub families: Vec<FamilySummary>,
    /// Index into `families`.
    pub selected: usize,
    pub stop_reason: StopReason,
    /// Indices into `families`, best first.
    pub ensemble: Vec<usize>,
    pub metric: Metric,
}

impl MetaReport {
    pub fn selected(&self) -> &FamilySummary {
        &self.families[self.selected]
    }

    pub fn ensemble_models(&self) -> Vec<&FittedModel> {
        self.ensemble
            .iter()
            .map(|&i| &self.families[i].model)
            .collect()
    }

    /// One row per tuned family, then a `# winner ...` record line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "roster_index,family,params,metric,cv_estimate,std_error,train_error,selected,ensemble_member\n",
        );
        for (i, f) in self.families.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{:?},{:?},{:?},{},{}\n",
                f.roster_index,
                f.spec().family(),
                f.spec().params_string(),
                self.metric,
                f.cv_estimate(),
                f.std_error(),
                f.train_error,
                u8::from(i == self.selected),
                u8::from(self.ensemble.contains(&i)),
            ));
        }
        let s = self.selected();
        out.push_str(&format!(
            "# winner family={} params={} cv_estimate={:?} std_error={:?} stop={}\n",
            s.spec().family(),
            s.spec().params_string(),
            s.cv_estimate(),
            s.std_error(),
            self.stop_reason
        ));
        out
    }
}

fn argmin_cv(families: &[FamilySummary]) -> usize {
    (0..families.len())
        .min_by(|&a, &b| {
            families[a]
                .cv_estimate()
                .total_cmp(&families[b].cv_estimate())
                .then(a.cmp(&b))
        })
        .expect("at least one tuned family")
}

fn tune_family(config: &MetaConfig, index: usize, data: &Dataset) -> Result<FamilySummary> {
    let grid = &config.roster[index];
    let report = grid_search_with(grid, data, config.k, config.seed, config.search)?;
    let model = fit(
        &report.best().spec,
        data,
        derive_seed(config.seed, "refit", &[index as u64]),
    )?;
    let train_error = score(data.target(), &model.predict(data.features())?)?;
    Ok(FamilySummary {
        roster_index: index,
        report,
        model,
        train_error,
    })
}

/// Tunes the roster on `data` and selects a family. Every family shares the
/// same folds; winners are refit on the full data.
pub fn tune_all(config: &MetaConfig, data: &Dataset) -> Result<MetaReport> {
    config.validate()?;
    let mut families = Vec::new();
    let mut met = None;
    match config.strategy {
        Strategy::BestOverall => {
            for i in 0..config.roster.len() {
                families.push(tune_family(config, i, data)?);
            }
        }
        Strategy::FirstBeatingBenchmark => {
            let benchmark = config.benchmark.expect("validated");
            for i in 0..config.roster.len() {
                let summary = tune_family(config, i, data)?;
                let qualifies = summary.cv_estimate() <= benchmark;
                families.push(summary);
                if qualifies {
                    met = Some(families.len() - 1);
                    break;
                }
            }
        }
    }
    let (selected, stop_reason) = match (config.strategy, met) {
        (Strategy::BestOverall, _) => (argmin_cv(&families), StopReason::AllTuned),
        (Strategy::FirstBeatingBenchmark, Some(i)) => (i, StopReason::BenchmarkMet),
        (Strategy::FirstBeatingBenchmark, None) => {
            (argmin_cv(&families), StopReason::BenchmarkUnmet)
        }
    };
    let ensemble = if config.ensemble {
        let mut order: Vec<usize> = (0..families.len()).collect();
        order.sort_by(|&a, &b| {
            families[a]
                .cv_estimate()
                .total_cmp(&families[b].cv_estimate())
                .then(a.cmp(&b))
        });
        order.truncate(config.ensemble_size);
        order
    } else {
        Vec::new()
    };
    Ok(MetaReport {
        families,
        selected,
        stop_reason,
        ensemble,
        metric: Metric::for_task(data.task()),
    })
}

/// Unweighted mean (regression) or majority vote with ties toward the
/// smallest class code (classification) over member predictions.
pub fn ensemble_predict(members: &[&FittedModel], x: &Matrix, task: Task) -> Result<Target> {
    let first = members
        .first()
        .ok_or_else(|| Error::Config("ensemble has no members".into()))?;
    if let Some(m) = members.iter().find(|m| m.task() != task) {
        return Err(Error::Config(format!(
            "{} member in a {task} ensemble",
            m.task()
        )));
    }
    if let Some(m) = members.iter().find(|m| m.p() != first.p()) {
        return Err(Error::Dimension {
            expected: first.p(),
            got: m.p(),
        });
    }
    let predictions = members
        .iter()
        .map(|m| m.predict(x))
        .collect::<Result<Vec<_>>>()?;
    let n = x.nrows();
    Ok(match task {
        Task::Regression => Target::Numeric(
            (0..n)
                .map(|i| predictions.iter().map(|p| p.value(i)).sum::<f64>() / members.len() as f64)
                .collect(),
        ),
        Task::Classification => {
            let n_classes = members
                .iter()
                .map(|m| m.class_names().len())
                .max()
                .unwrap_or(0);
            Target::Classes(
                (0..n)
                    .map(|i| {
                        let mut votes = vec![0; n_classes];
                        for p in &predictions {
                            votes[p.value(i) as usize] += 1;
                        }
                        majority(&votes)
                    })
                    .collect(),
            )
        }
    })
}

/// True regression functions for synthetic experiments, on `x ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DgpFunction {
    /// `1 + 2x`
    Linear,
    /// `sin(2πx)`
    Sine,
    /// `0` below 0.5, `1` from 0.5 on.
    Step,
}

impl DgpFunction {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            DgpFunction::Linear => 1.0 + 2.0 * x,
            DgpFunction::Sine => (2.0 * std::f64::consts::PI * x).sin(),
            DgpFunction::Step => {
                if x < 0.5 {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }
}

impl FromStr for DgpFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(DgpFunction::Linear),
            "sine" => Ok(DgpFunction::Sine),
            "step" => Ok(DgpFunction::Step),
            other => Err(Error::Config(format!(
                "unknown DGP {other:?} (expected linear, sine or step)"
            ))),
        }
    }
}

/// Synthetic data: `y = f(x) + σ·ε`, `x ~ U(0, 1)`, `ε ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DgpConfig {
    pub function: DgpFunction,
    pub sigma: f64,
    pub n: usize,
    pub eval_points: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
}

impl DgpConfig {
    /// Evaluation points default to 0.05, 0.10, ..., 0.95.
    pub fn new(function: DgpFunction, sigma: f64, n: usize, reps: usize, seed: u64) -> Self {
        DgpConfig {
            function,
            sigma,
            n,
            eval_points: (1..20).map(|i| i as f64 * 0.05).collect(),
            reps,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!(
                "sigma {} must be finite and >= 0",
                self.sigma
            )));
        }
        if self.reps < 2 {
            return Err(Error::Config(format!(
                "need at least 2 replications, got {}",
                self.reps
            )));
        }
        if self.n < 1 {
            return Err(Error::Config("training size must be at least 1".into()));
        }
        if self.eval_points.is_empty() || self.eval_points.iter().any(|x| !(0.0..=1.0).contains(x))
        {
            return Err(Error::Config(
                "evaluation points must be non-empty and inside [0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Training set of replication `rep`.
    pub fn draw(&self, rep: usize) -> Dataset {
        let mut r = rng_for(self.seed, "dgp-train", &[rep as u64]);
        let mut x = Vec::with_capacity(self.n);
        let mut y = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            let xi: f64 = r.gen();
            let eps: f64 = r.sample(StandardNormal);
            x.push(xi);
            y.push(self.function.eval(xi) + self.sigma * eps);
        }
        let features = Matrix::new(self.n, 1, x).expect("n x 1 matrix");
        Dataset::regression(features, y).expect("finite draws")
    }

    /// Fresh noise for the evaluation points of replication `rep`.
    fn test_noise(&self, rep: usize) -> Vec<f64> {
        let mut r = rng_for(self.seed, "dgp-test-noise", &[rep as u64]);
        self.eval_points
            .iter()
            .map(|_| self.sigma * r.sample::<f64, _>(StandardNormal))
            .collect()
    }

    fn eval_matrix(&self) -> Matrix {
        Matrix::new(self.eval_points.len(), 1, self.eval_points.clone()).expect("column matrix")
    }
}

/// Predictions at the evaluation points, `[rep][point]`. Replication `r`
/// trains on [`DgpConfig::draw`]`(r)` whatever the spec, so different
/// specs see the same training sets.
pub fn replicate_predictions(dgp: &DgpConfig, spec: &LearnerSpec) -> Result<Vec<Vec<f64>>> {
    dgp.validate()?;
    let x0 = dgp.eval_matrix();
    (0..dgp.reps)
        .into_par_iter()
        .map(|r| {
            let model = fit(
                spec,
                &dgp.draw(r),
                derive_seed(dgp.seed, "dgp-fit", &[r as u64]),
            )?;
            match model.predict(&x0)? {
                Target::Numeric(p) => Ok(p),
                Target::Classes(_) => Err(Error::Config(
                    "bias-variance curves need regression learners".into(),
                )),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    /// Axis value(s) that define this point of the curve.
    pub complexity: String,
    pub spec: LearnerSpec,
    pub variance: f64,
    pub bias_sq: f64,
    pub irreducible: f64,
    pub test_mse: f64,
    /// Three standard errors of the per-replication squared error.
    pub mc_tolerance: f64,
}

/// Decomposes test error at each grid point into variance, squared bias
/// and noise, averaged over the evaluation points.
///
/// Variance uses the R−1 divisor and squared bias is debiased by
/// subtracting variance/R (then floored at 0), so that
/// `variance + bias_sq` equals the mean squared deviation of predictions
/// from the truth.
pub fn bias_variance_curve(dgp: &DgpConfig, grid: &HyperGrid) -> Result<Vec<CurveRow>> {
    dgp.validate()?;
    if grid.task() != Task::Regression {
        return Err(Error::Config(
            "bias-variance curves need a regression grid".into(),
        ));
    }
    let truth: Vec<f64> = dgp
        .eval_points
        .iter()
        .map(|&x| dgp.function.eval(x))
        .collect();
    let noise: Vec<Vec<f64>> = (0..dgp.reps).map(|r| dgp.test_noise(r)).collect();
    let single_axis = grid.axes().len() == 1;
    grid.specs()
        .iter()
        .map(|spec| {
            let preds = replicate_predictions(dgp, spec)?;
            let (reps, points) = (dgp.reps as f64, truth.len() as f64);
            let mut variance = 0.0;
            let mut raw_bias = 0.0;
            for (j, f) in truth.iter().enumerate() {
                let mean = preds.iter().map(|p| p[j]).sum::<f64>() / reps;
                variance += preds.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / (reps - 1.0);
                raw_bias += (mean - f).powi(2);
            }
            variance /= points;
            raw_bias /= points;
            let per_rep: Vec<f64> = preds
                .iter()
                .zip(&noise)
                .map(|(p, e)| {
                    truth
                        .iter()
                        .zip(p)
                        .zip(e)
                        .map(|((f, yhat), eps)| (f + eps - yhat).powi(2))
                        .sum::<f64>()
                        / points
                })
                .collect();
            let test_mse = per_rep.iter().sum::<f64>() / reps;
            let sd =
                (per_rep.iter().map(|s| (s - test_mse).powi(2)).sum::<f64>() / (reps - 1.0)).sqrt();
            let complexity = if single_axis {
                let key = grid.axes()[0].0.as_str();
                spec.named_values()
                    .into_iter()
                    .find(|(k, _)| *k == key)
                    .map(|(_, v)| v.to_string())
                    .unwrap_or_default()
            } else {
                spec.params_string()
            };
            Ok(CurveRow {
                complexity,
                spec: *spec,
                variance,
                bias_sq: (raw_bias - variance / reps).max(0.0),
                irreducible: dgp.sigma * dgp.sigma,
                test_mse,
                mc_tolerance: 3.0 * sd / reps.sqrt(),
            })
        })
        .collect()
}

/// `complexity,variance,bias_sq,irreducible,test_mse`, one row per point.
pub fn curve_to_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from("complexity,variance,bias_sq,irreducible,test_mse\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:?},{:?},{:?},{:?}\n",
            r.complexity, r.variance, r.bias_sq, r.irreducible, r.test_mse
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{Family, HyperValue};

    fn sine(n: usize, seed: u64) -> Dataset {
        DgpConfig::new(DgpFunction::Sine, 0.3, n, 2, seed).draw(0)
    }

    fn grid(line: &str) -> HyperGrid {
        HyperGrid::parse_line(line, Task::Regression).unwrap()
    }

    #[test]
    fn single_family_is_selected() {
        let d = sine(40, 1);
        for strategy in [Strategy::BestOverall, Strategy::FirstBeatingBenchmark] {
            let mut c = MetaConfig::new(vec![grid("knn k=1,3")], 4, 2);
            c.strategy = strategy;
            c.benchmark = Some(-1.0);
            let r = tune_all(&c, &d).unwrap();
            assert_eq!(r.families.len(), 1);
            assert_eq!(r.selected, 0);
        }
    }

    #[test]
    fn infinite_benchmark_stops_after_first() {
        let d = sine(40, 1);
        let mut c = MetaConfig::new(vec![grid("tree max_leaves=2,4"), grid("knn k=1,3")], 4, 2);
        c.strategy = Strategy::FirstBeatingBenchmark;
        c.benchmark = Some(f64::INFINITY);
        let r = tune_all(&c, &d).unwrap();
        assert_eq!(r.families.len(), 1);
        assert_eq!(r.stop_reason, StopReason::BenchmarkMet);
        assert_eq!(r.selected().spec().family(), Family::Tree);
    }

    #[test]
    fn unmet_benchmark_falls_back_to_best() {
        let d = sine(40, 1);
        let mut c = MetaConfig::new(vec![grid("tree max_leaves=2"), grid("knn k=3")], 4, 2);
        c.strategy = Strategy::FirstBeatingBenchmark;
        c.benchmark = Some(-1.0);
        let r = tune_all(&c, &d).unwrap();
        assert_eq!(r.families.len(), 2);
        assert_eq!(r.stop_reason, StopReason::BenchmarkUnmet);
        assert_eq!(r.selected, argmin_cv(&r.families));
    }

    #[test]
    fn config_validation() {
        assert!(MetaConfig::new(vec![], 3, 0).validate().is_err());
        let mut c = MetaConfig::new(vec![grid("knn k=1")], 3, 0);
        c.strategy = Strategy::FirstBeatingBenchmark;
        assert!(c.validate().is_err());
    }

    #[test]
    fn ensemble_members_and_csv() {
        let d = sine(60, 3);
        let mut c = MetaConfig::new(
            vec![
                grid("knn k=3,7"),
                grid("tree max_leaves=4,8"),
                grid("kernel bandwidth=0.1,0.3"),
            ],
            5,
            9,
        );
        c.ensemble = true;
        c.ensemble_size = 2;
        let r = tune_all(&c, &d).unwrap();
        assert_eq!(r.ensemble.len(), 2);
        assert_eq!(r.ensemble[0], r.selected);
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().last().unwrap().starts_with("# winner family="));
        let pred = ensemble_predict(&r.ensemble_models(), d.features(), Task::Regression).unwrap();
        assert_eq!(pred.len(), 60);
    }

    #[test]
    fn ensemble_arithmetic() {
        let x = Matrix::new(2, 1, vec![0.0, 1.0]).unwrap();
        let one = Dataset::regression(x.clone(), vec![1.0, 1.0]).unwrap();
        let three = Dataset::regression(x.clone(), vec![3.0, 3.0]).unwrap();
        let spec = LearnerSpec::from_values(
            Family::Tree,
            Task::Regression,
            &[("max_leaves", HyperValue::Number(1.0))],
        )
        .unwrap();
        let (a, b) = (fit(&spec, &one, 0).unwrap(), fit(&spec, &three, 0).unwrap());
        assert_eq!(
            ensemble_predict(&[&a, &b], &x, Task::Regression).unwrap(),
            Target::Numeric(vec![2.0, 2.0])
        );
        assert_eq!(
            ensemble_predict(&[&a], &x, Task::Regression).unwrap(),
            a.predict(&x).unwrap()
        );
        assert_eq!(
            ensemble_predict(&[&a, &a, &a], &x, Task::Regression).unwrap(),
            a.predict(&x).unwrap()
        );
        assert!(ensemble_predict(&[], &x, Task::Regression).is_err());
        assert!(ensemble_predict(&[&a], &x, Task::Classification).is_err());
    }

    #[test]
    fn classification_vote_ties_go_low() {
        let x = Matrix::new(2, 1, vec![0.0, 1.0]).unwrap();
        let spec = LearnerSpec::from_values(
            Family::Tree,
            Task::Classification,
            &[("max_leaves", HyperValue::Number(1.0))],
        )
        .unwrap();
        let zero = fit(
            &spec,
            &Dataset::classification(x.clone(), vec![0, 0], 3).unwrap(),
            0,
        )
        .unwrap();
        let two = fit(
            &spec,
            &Dataset::classification(x.clone(), vec![2, 2], 3).unwrap(),
            0,
        )
        .unwrap();
        assert_eq!(
            ensemble_predict(&[&two, &zero], &x, Task::Classification).unwrap(),
            Target::Classes(vec![0, 0])
        );
        assert_eq!(
            ensemble_predict(&[&two, &zero, &two], &x, Task::Classification).unwrap(),
            Target::Classes(vec![2, 2])
        );
    }

    #[test]
    fn noiseless_linear_is_recovered_exactly() {
        let dgp = DgpConfig::new(DgpFunction::Linear, 0.0, 30, 50, 4);
        let rows = bias_variance_curve(&dgp, &grid("elastic_net lambda=0")).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(
            rows[0].bias_sq < 1e-10 && rows[0].variance < 1e-10,
            "{rows:?}"
        );
        assert_eq!(rows[0].irreducible, 0.0);
    }

    #[test]
    fn decomposition_within_monte_carlo_tolerance() {
        let dgp = DgpConfig::new(DgpFunction::Step, 0.5, 50, 200, 8);
        for row in bias_variance_curve(&dgp, &grid("tree max_leaves=2,6,20")).unwrap() {
            assert!(row.variance >= 0.0 && row.bias_sq >= 0.0);
            let gap = (row.test_mse - row.variance - row.bias_sq - row.irreducible).abs();
            assert!(gap <= row.mc_tolerance, "{row:?}");
        }
    }

    #[test]
    fn curve_csv_layout() {
        let dgp = DgpConfig::new(DgpFunction::Sine, 0.1, 20, 3, 1);
        let rows = bias_variance_curve(&dgp, &grid("knn k=1,5")).unwrap();
        let csv = curve_to_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "complexity,variance,bias_sq,irreducible,test_mse");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,"));
        assert!(lines[2].starts_with("5,"));
    }

    #[test]
    fn dgp_validation() {
        let mut d = DgpConfig::new(DgpFunction::Sine, 0.1, 20, 1, 1);
        assert!(d.validate().is_err());
        d.reps = 2;
        d.eval_points = vec![1.5];
        assert!(d.validate().is_err());
        assert!("cosine".parse::<DgpFunction>().is_err());
    }
}
