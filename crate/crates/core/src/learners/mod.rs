//! The learner roster behind one fit/predict interface.
//!
//! Every family is parameterized by its tuning hyperparameters
//! ([`LearnerSpec`]) and produces a [`FittedModel`] that is a pure function
//! of its training data, spec and seed. Features are standardized inside
//! `fit` using statistics of the supplied training rows only.

mod basis;
mod format;
mod kernel;
mod knn;
mod linear;
pub mod tree;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::dataset::{Dataset, Matrix, Standardizer, Target, Task};
use crate::error::{Error, Result};

pub use basis::{monomial_exponents, quantile_knots};
pub use linear::least_squares;
pub use tree::{bootstrap_indices, Node, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    ElasticNet,
    Knn,
    Tree,
    Bagging,
    RandomForest,
    Boosting,
    Kernel,
    Series,
    Piecewise,
}

impl Family {
    pub const ALL: [Family; 9] = [
        Family::ElasticNet,
        Family::Knn,
        Family::Tree,
        Family::Bagging,
        Family::RandomForest,
        Family::Boosting,
        Family::Kernel,
        Family::Series,
        Family::Piecewise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::ElasticNet => "elastic_net",
            Family::Knn => "knn",
            Family::Tree => "tree",
            Family::Bagging => "bagging",
            Family::RandomForest => "random_forest",
            Family::Boosting => "boosting",
            Family::Kernel => "kernel",
            Family::Series => "series",
            Family::Piecewise => "piecewise",
        }
    }

    /// Hyperparameter names, in the order they appear in reports.
    pub fn keys(self) -> &'static [&'static str] {
        match self {
            Family::ElasticNet => &["lambda", "alpha"],
            Family::Knn => &["k"],
            Family::Tree => &["max_leaves"],
            Family::Bagging => &["tree_depth", "n_bootstraps"],
            Family::RandomForest => &["m_features", "n_bootstraps", "max_leaves"],
            Family::Boosting => &["learning_rate", "n_rounds", "max_leaves"],
            Family::Kernel => &["bandwidth", "kernel_fn"],
            Family::Series => &["degree"],
            Family::Piecewise => &["n_knots"],
        }
    }

    /// Value used when a grid leaves a hyperparameter unspecified.
    pub fn default_value(self, key: &str) -> Option<HyperValue> {
        use HyperValue::Number as N;
        let v = match (self, key) {
            (Family::ElasticNet, "lambda") => N(0.1),
            (Family::ElasticNet, "alpha") => N(1.0),
            (Family::Knn, "k") => N(5.0),
            (Family::Tree, "max_leaves") => N(8.0),
            (Family::Bagging, "tree_depth") => N(4.0),
            (Family::Bagging | Family::RandomForest, "n_bootstraps") => N(50.0),
            (Family::RandomForest, "m_features") => N(1.0),
            (Family::RandomForest, "max_leaves") => N(16.0),
            (Family::Boosting, "learning_rate") => N(0.1),
            (Family::Boosting, "n_rounds") => N(100.0),
            (Family::Boosting, "max_leaves") => N(4.0),
            (Family::Kernel, "bandwidth") => N(0.5),
            (Family::Kernel, "kernel_fn") => HyperValue::Kernel(KernelFn::Gaussian),
            (Family::Series, "degree") => N(3.0),
            (Family::Piecewise, "n_knots") => N(3.0),
            _ => return None,
        };
        Some(v)
    }

    pub fn supports(self, task: Task) -> bool {
        task == Task::Regression
            || matches!(
                self,
                Family::Knn | Family::Tree | Family::Bagging | Family::RandomForest
            )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown learner family {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFn {
    Gaussian,
    Epanechnikov,
}

impl KernelFn {
    pub fn name(self) -> &'static str {
        match self {
            KernelFn::Gaussian => "gaussian",
            KernelFn::Epanechnikov => "epanechnikov",
        }
    }

    pub fn weight(self, u: f64) -> f64 {
        match self {
            KernelFn::Gaussian => (-0.5 * u * u).exp(),
            KernelFn::Epanechnikov => (1.0 - u * u).max(0.0),
        }
    }
}

impl FromStr for KernelFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(KernelFn::Gaussian),
            "epanechnikov" => Ok(KernelFn::Epanechnikov),
            other => Err(Error::param(
                "kernel_fn",
                format!("{other:?} is not one of gaussian, epanechnikov"),
            )),
        }
    }
}

/// One hyperparameter value as written in a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HyperValue {
    Number(f64),
    Kernel(KernelFn),
}

impl HyperValue {
    pub fn parse(key: &str, text: &str) -> Result<Self> {
        if key == "kernel_fn" {
            return text.parse().map(HyperValue::Kernel);
        }
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(HyperValue::Number)
            .ok_or_else(|| Error::param(key, format!("{text:?} is not a finite number")))
    }
}

impl fmt::Display for HyperValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HyperValue::Number(v) if v.fract() == 0.0 && v.abs() < 1e15 => {
                write!(f, "{}", *v as i64)
            }
            HyperValue::Number(v) => write!(f, "{v:?}"),
            HyperValue::Kernel(k) => f.write_str(k.name()),
        }
    }
}

/// Concrete hyperparameters for one family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Params {
    ElasticNet {
        lambda: f64,
        alpha: f64,
    },
    Knn {
        k: usize,
    },
    Tree {
        max_leaves: usize,
    },
    Bagging {
        tree_depth: usize,
        n_bootstraps: usize,
    },
    RandomForest {
        m_features: usize,
        n_bootstraps: usize,
        max_leaves: usize,
    },
    Boosting {
        learning_rate: f64,
        n_rounds: usize,
        max_leaves: usize,
    },
    Kernel {
        bandwidth: f64,
        kernel_fn: KernelFn,
    },
    Series {
        degree: usize,
    },
    Piecewise {
        n_knots: usize,
    },
}

impl Params {
    pub fn family(&self) -> Family {
        match self {
            Params::ElasticNet { .. } => Family::ElasticNet,
            Params::Knn { .. } => Family::Knn,
            Params::Tree { .. } => Family::Tree,
            Params::Bagging { .. } => Family::Bagging,
            Params::RandomForest { .. } => Family::RandomForest,
            Params::Boosting { .. } => Family::Boosting,
            Params::Kernel { .. } => Family::Kernel,
            Params::Series { .. } => Family::Series,
            Params::Piecewise { .. } => Family::Piecewise,
        }
    }

    /// Values in [`Family::keys`] order.
    pub fn values(&self) -> Vec<HyperValue> {
        use HyperValue::Number as N;
        let n = |v: usize| N(v as f64);
        match *self {
            Params::ElasticNet { lambda, alpha } => vec![N(lambda), N(alpha)],
            Params::Knn { k } => vec![n(k)],
            Params::Tree { max_leaves } => vec![n(max_leaves)],
            Params::Bagging {
                tree_depth,
                n_bootstraps,
            } => vec![n(tree_depth), n(n_bootstraps)],
            Params::RandomForest {
                m_features,
                n_bootstraps,
                max_leaves,
            } => {
                vec![n(m_features), n(n_bootstraps), n(max_leaves)]
            }
            Params::Boosting {
                learning_rate,
                n_rounds,
                max_leaves,
            } => {
                vec![N(learning_rate), n(n_rounds), n(max_leaves)]
            }
            Params::Kernel {
                bandwidth,
                kernel_fn,
            } => vec![N(bandwidth), HyperValue::Kernel(kernel_fn)],
            Params::Series { degree } => vec![n(degree)],
            Params::Piecewise { n_knots } => vec![n(n_knots)],
        }
    }

    fn validate(&self) -> Result<()> {
        let check = |ok: bool, name: &str, rule: &str, v: f64| {
            if ok {
                Ok(())
            } else {
                Err(Error::param(name, format!("{v} violates {rule}")))
            }
        };
        match *self {
            Params::ElasticNet { lambda, alpha } => {
                check(lambda >= 0.0, "lambda", "lambda >= 0", lambda)?;
                check(
                    (0.0..=1.0).contains(&alpha),
                    "alpha",
                    "0 <= alpha <= 1",
                    alpha,
                )
            }
            Params::Knn { k } => check(k >= 1, "k", "k >= 1", k as f64),
            Params::Tree { max_leaves } => check(
                max_leaves >= 1,
                "max_leaves",
                "max_leaves >= 1",
                max_leaves as f64,
            ),
            Params::Bagging {
                tree_depth,
                n_bootstraps,
            } => {
                check(
                    tree_depth >= 1,
                    "tree_depth",
                    "tree_depth >= 1",
                    tree_depth as f64,
                )?;
                check(
                    n_bootstraps >= 1,
                    "n_bootstraps",
                    "n_bootstraps >= 1",
                    n_bootstraps as f64,
                )
            }
            Params::RandomForest {
                m_features,
                n_bootstraps,
                max_leaves,
            } => {
                check(
                    m_features >= 1,
                    "m_features",
                    "m_features >= 1",
                    m_features as f64,
                )?;
                check(
                    n_bootstraps >= 1,
                    "n_bootstraps",
                    "n_bootstraps >= 1",
                    n_bootstraps as f64,
                )?;
                check(
                    max_leaves >= 1,
                    "max_leaves",
                    "max_leaves >= 1",
                    max_leaves as f64,
                )
            }
            Params::Boosting {
                learning_rate,
                n_rounds,
                max_leaves,
            } => {
                check(
                    learning_rate > 0.0 && learning_rate <= 1.0,
                    "learning_rate",
                    "0 < learning_rate <= 1",
                    learning_rate,
                )?;
                check(n_rounds >= 1, "n_rounds", "n_rounds >= 1", n_rounds as f64)?;
                check(
                    max_leaves >= 2,
                    "max_leaves",
                    "max_leaves >= 2",
                    max_leaves as f64,
                )
            }
            Params::Kernel { bandwidth, .. } => {
                check(bandwidth > 0.0, "bandwidth", "bandwidth > 0", bandwidth)
            }
            Params::Series { degree } => check(degree >= 1, "degree", "degree >= 1", degree as f64),
            Params::Piecewise { .. } => Ok(()),
        }
    }
}

/// A learner family with concrete hyperparameters and a task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerSpec {
    params: Params,
    task: Task,
}

impl LearnerSpec {
    pub fn new(params: Params, task: Task) -> Result<Self> {
        params.validate()?;
        let family = params.family();
        if !family.supports(task) {
            return Err(Error::Config(format!("{family} does not support {task}")));
        }
        Ok(LearnerSpec { params, task })
    }

    /// Builds a spec from named values; omitted keys take the family default.
    pub fn from_values(family: Family, task: Task, values: &[(&str, HyperValue)]) -> Result<Self> {
        for (key, _) in values {
            if !family.keys().contains(key) {
                return Err(Error::param(
                    *key,
                    format!("not a hyperparameter of {family}"),
                ));
            }
        }
        let get = |key: &str| -> HyperValue {
            values
                .iter()
                .rev()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .or_else(|| family.default_value(key))
                .expect("every family key has a default")
        };
        let num = |key: &str| -> Result<f64> {
            match get(key) {
                HyperValue::Number(v) => Ok(v),
                HyperValue::Kernel(k) => Err(Error::param(
                    key,
                    format!("expected a number, got {}", k.name()),
                )),
            }
        };
        let int = |key: &str| -> Result<usize> {
            let v = num(key)?;
            if v.fract() != 0.0 || v < 0.0 || v > u32::MAX as f64 {
                return Err(Error::param(
                    key,
                    format!("{v} is not a non-negative integer"),
                ));
            }
            Ok(v as usize)
        };
        let params = match family {
            Family::ElasticNet => Params::ElasticNet {
                lambda: num("lambda")?,
                alpha: num("alpha")?,
            },
            Family::Knn => Params::Knn { k: int("k")? },
            Family::Tree => Params::Tree {
                max_leaves: int("max_leaves")?,
            },
            Family::Bagging => Params::Bagging {
                tree_depth: int("tree_depth")?,
                n_bootstraps: int("n_bootstraps")?,
            },
            Family::RandomForest => Params::RandomForest {
                m_features: int("m_features")?,
                n_bootstraps: int("n_bootstraps")?,
                max_leaves: int("max_leaves")?,
            },
            Family::Boosting => Params::Boosting {
                learning_rate: num("learning_rate")?,
                n_rounds: int("n_rounds")?,
                max_leaves: int("max_leaves")?,
            },
            Family::Kernel => Params::Kernel {
                bandwidth: num("bandwidth")?,
                kernel_fn: match get("kernel_fn") {
                    HyperValue::Kernel(k) => k,
                    HyperValue::Number(v) => {
                        return Err(Error::param(
                            "kernel_fn",
                            format!("expected a kernel name, got {v}"),
                        ))
                    }
                },
            },
            Family::Series => Params::Series {
                degree: int("degree")?,
            },
            Family::Piecewise => Params::Piecewise {
                n_knots: int("n_knots")?,
            },
        };
        LearnerSpec::new(params, task)
    }

    pub fn family(&self) -> Family {
        self.params.family()
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn task(&self) -> Task {
        self.task
    }

    /// `(name, value)` pairs in family key order.
    pub fn named_values(&self) -> Vec<(&'static str, HyperValue)> {
        self.family()
            .keys()
            .iter()
            .copied()
            .zip(self.params.values())
            .collect()
    }

    /// `name=value` pairs joined by `;`.
    pub fn params_string(&self) -> String {
        self.named_values()
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

impl fmt::Display for LearnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}({})",
            self.family(),
            self.params_string().replace(';', ", ")
        )
    }
}

/// Lexicographic key that grows with model complexity. Compared with a
/// total order on floats so unsorted grids still rank correctly.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityKey(Vec<f64>);

impl ComplexityKey {
    pub fn components(&self) -> &[f64] {
        &self.0
    }
}

impl Eq for ComplexityKey {}

impl PartialOrd for ComplexityKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ComplexityKey {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

pub fn complexity_rank(spec: &LearnerSpec) -> ComplexityKey {
    let f = |v: usize| v as f64;
    let key = match *spec.params() {
        Params::ElasticNet { lambda, .. } => vec![-lambda],
        Params::Knn { k } => vec![-f(k)],
        Params::Tree { max_leaves } => vec![f(max_leaves)],
        Params::Bagging {
            tree_depth,
            n_bootstraps,
        } => vec![f(tree_depth), f(n_bootstraps)],
        Params::RandomForest {
            m_features,
            n_bootstraps,
            max_leaves,
        } => {
            vec![f(max_leaves), f(m_features), f(n_bootstraps)]
        }
        Params::Boosting {
            learning_rate,
            n_rounds,
            max_leaves,
        } => {
            vec![f(n_rounds), f(max_leaves), learning_rate]
        }
        Params::Kernel { bandwidth, .. } => vec![-bandwidth],
        Params::Series { degree } => vec![f(degree)],
        Params::Piecewise { n_knots } => vec![f(n_knots)],
    };
    ComplexityKey(key)
}

/// Candidate values per hyperparameter for one family.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperGrid {
    family: Family,
    task: Task,
    axes: Vec<(String, Vec<HyperValue>)>,
}

impl HyperGrid {
    /// Validates every axis key and every candidate against the family's
    /// domain. Keys without an axis use the family default.
    pub fn new(family: Family, task: Task, axes: Vec<(String, Vec<HyperValue>)>) -> Result<Self> {
        if !family.supports(task) {
            return Err(Error::Config(format!("{family} does not support {task}")));
        }
        for (i, (key, values)) in axes.iter().enumerate() {
            if axes[..i].iter().any(|(k, _)| k == key) {
                return Err(Error::param(key.as_str(), "given more than once"));
            }
            if values.is_empty() {
                return Err(Error::param(key.as_str(), "empty candidate list"));
            }
            for v in values {
                LearnerSpec::from_values(family, task, &[(key.as_str(), *v)])?;
            }
        }
        Ok(HyperGrid { family, task, axes })
    }

    /// Parses `family name=v1,v2 name=a:b:step ...`.
    pub fn parse_line(line: &str, task: Task) -> Result<Self> {
        let mut words = line.split_whitespace();
        let family: Family = words
            .next()
            .ok_or_else(|| Error::Config("empty grid line".into()))?
            .parse()?;
        let axes = words.map(parse_axis).collect::<Result<Vec<_>>>()?;
        HyperGrid::new(family, task, axes)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn axes(&self) -> &[(String, Vec<HyperValue>)] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|(_, v)| v.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cartesian product; the last axis varies fastest.
    pub fn specs(&self) -> Vec<LearnerSpec> {
        let mut points: Vec<Vec<(&str, HyperValue)>> = vec![Vec::new()];
        for (key, values) in &self.axes {
            points = points
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut point = prefix.clone();
                        point.push((key.as_str(), *v));
                        point
                    })
                })
                .collect();
        }
        points
            .iter()
            .map(|p| {
                LearnerSpec::from_values(self.family, self.task, p)
                    .expect("candidates were validated at construction")
            })
            .collect()
    }
}

/// Parses one grid axis: `name=v1,v2,...` or `name=start:stop:step`.
pub fn parse_axis(text: &str) -> Result<(String, Vec<HyperValue>)> {
    let (key, rhs) = text
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("grid axis {text:?} is not name=values")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::Config(format!("grid axis {text:?} has no name")));
    }
    let parts: Vec<&str> = rhs.split(':').collect();
    let values = if parts.len() == 3 {
        let num = |s: &str| {
            HyperValue::parse(key, s.trim()).and_then(|v| match v {
                HyperValue::Number(x) => Ok(x),
                HyperValue::Kernel(_) => Err(Error::param(key, "ranges need numbers")),
            })
        };
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if step <= 0.0 || stop < start {
            return Err(Error::param(
                key,
                format!("range {rhs:?} needs start <= stop and step > 0"),
            ));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if count > 100_000 {
            return Err(Error::param(
                key,
                format!("range {rhs:?} has too many values"),
            ));
        }
        (0..count)
            .map(|i| HyperValue::Number(start + i as f64 * step))
            .collect()
    } else if parts.len() == 1 {
        rhs.split(',')
            .map(|s| HyperValue::parse(key, s.trim()))
            .collect::<Result<Vec<_>>>()?
    } else {
        return Err(Error::param(key, format!("malformed range {rhs:?}")));
    };
    Ok((key.to_string(), values))
}

/// Counters collected while predicting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PredictDiagnostics {
    /// Kernel queries whose weights all vanished and fell back to the training mean.
    pub kernel_fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Body {
    Linear(linear::LinearModel),
    Knn(knn::KnnModel),
    Tree(Tree),
    Forest(Vec<Tree>),
    Boosted { base: f64, trees: Vec<Tree> },
    Kernel(kernel::KernelModel),
    Basis(basis::BasisModel),
}

/// Fitted parameters plus the standardizer learned at fit time.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    spec: LearnerSpec,
    standardizer: Standardizer,
    class_names: Vec<String>,
    body: Body,
}

impl FittedModel {
    pub fn spec(&self) -> &LearnerSpec {
        &self.spec
    }

    pub fn family(&self) -> Family {
        self.spec.family()
    }

    pub fn task(&self) -> Task {
        self.spec.task()
    }

    pub fn p(&self) -> usize {
        self.standardizer.p()
    }

    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Intercept and coefficients on the standardized scale (elastic net only).
    pub fn standardized_coefficients(&self) -> Option<(f64, &[f64])> {
        match &self.body {
            Body::Linear(m) => Some((m.intercept, &m.coefs)),
            _ => None,
        }
    }

    /// Intercept and coefficients mapped back to the raw feature scale.
    pub fn raw_coefficients(&self) -> Option<(f64, Vec<f64>)> {
        let (b0, beta) = self.standardized_coefficients()?;
        let (means, sds) = (self.standardizer.means(), self.standardizer.stddevs());
        let raw: Vec<f64> = beta
            .iter()
            .zip(sds)
            .map(|(b, &s)| if s > 0.0 { b / s } else { *b })
            .collect();
        let intercept = b0 - raw.iter().zip(means).map(|(b, m)| b * m).sum::<f64>();
        Some((intercept, raw))
    }

    /// Trees making up the model (single tree, forest or boosting stages).
    pub fn trees(&self) -> &[Tree] {
        match &self.body {
            Body::Tree(t) => std::slice::from_ref(t),
            Body::Forest(ts) | Body::Boosted { trees: ts, .. } => ts,
            _ => &[],
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Target> {
        self.predict_with_diagnostics(x).map(|(t, _)| t)
    }

    pub fn predict_with_diagnostics(&self, x: &Matrix) -> Result<(Target, PredictDiagnostics)> {
        let z = self.standardizer.transform(x)?;
        let mut diag = PredictDiagnostics::default();
        let n_classes = self.class_names.len();
        let values: Vec<f64> = match &self.body {
            Body::Linear(m) => z.rows().map(|r| m.predict_row(r)).collect(),
            Body::Knn(m) => z.rows().map(|r| m.predict_row(r, n_classes)).collect(),
            Body::Tree(t) => z.rows().map(|r| t.predict_row(r)).collect(),
            Body::Forest(trees) => z
                .rows()
                .map(|r| tree::aggregate(trees, r, n_classes))
                .collect(),
            Body::Boosted { base, trees } => {
                let Params::Boosting { learning_rate, .. } = *self.spec.params() else {
                    unreachable!("boosted body always carries boosting params")
                };
                z.rows()
                    .map(|r| {
                        trees
                            .iter()
                            .fold(*base, |f, t| f + learning_rate * t.predict_row(r))
                    })
                    .collect()
            }
            Body::Kernel(m) => z
                .rows()
                .map(|r| {
                    let (v, fell_back) = m.predict_row(r);
                    diag.kernel_fallbacks += usize::from(fell_back);
                    v
                })
                .collect(),
            Body::Basis(m) => z.rows().map(|r| m.predict_row(r)).collect(),
        };
        let target = match self.task() {
            Task::Regression => Target::Numeric(values),
            Task::Classification => {
                Target::Classes(values.into_iter().map(|v| v as usize).collect())
            }
        };
        Ok((target, diag))
    }
}

/// Fits `spec` on `data`. Deterministic given `(spec, data, seed)`.
pub fn fit(spec: &LearnerSpec, data: &Dataset, seed: u64) -> Result<FittedModel> {
    if spec.task() != data.task() {
        return Err(Error::Fit(format!(
            "{} spec applied to {} data",
            spec.task(),
            data.task()
        )));
    }
    let (n, p) = (data.n(), data.p());
    let standardizer = Standardizer::fit(data.features());
    let z = standardizer.transform(data.features())?;
    let target = data.target();
    let n_classes = data.n_classes();
    let tree_target = || match target {
        Target::Numeric(y) => tree::TreeTarget::Regression(y),
        Target::Classes(c) => tree::TreeTarget::Classification {
            labels: c,
            n_classes,
        },
    };
    let numeric = || match target {
        Target::Numeric(y) => y.as_slice(),
        Target::Classes(_) => unreachable!("regression-only family checked by LearnerSpec"),
    };
    let body = match *spec.params() {
        Params::ElasticNet { lambda, alpha } => {
            Body::Linear(linear::elastic_net(&z, numeric(), lambda, alpha))
        }
        Params::Knn { k } => {
            if k > n {
                return Err(Error::Fit(format!("knn k={k} exceeds {n} training rows")));
            }
            Body::Knn(knn::KnnModel::new(z, target.clone(), k))
        }
        Params::Tree { max_leaves } => {
            let rows: Vec<usize> = (0..n).collect();
            Body::Tree(tree::grow(
                &z,
                tree_target(),
                &rows,
                tree::Growth::BestFirst { max_leaves },
                None,
            ))
        }
        Params::Bagging {
            tree_depth,
            n_bootstraps,
        } => Body::Forest(tree::fit_forest(
            &z,
            tree_target(),
            n_bootstraps,
            tree::Growth::DepthFirst {
                max_depth: tree_depth,
            },
            None,
            seed,
        )),
        Params::RandomForest {
            m_features,
            n_bootstraps,
            max_leaves,
        } => {
            if m_features > p {
                return Err(Error::Fit(format!("m_features={m_features} exceeds p={p}")));
            }
            Body::Forest(tree::fit_forest(
                &z,
                tree_target(),
                n_bootstraps,
                tree::Growth::BestFirst { max_leaves },
                Some(m_features),
                seed,
            ))
        }
        Params::Boosting {
            learning_rate,
            n_rounds,
            max_leaves,
        } => {
            let (base, trees) = tree::boost(&z, numeric(), learning_rate, n_rounds, max_leaves);
            Body::Boosted { base, trees }
        }
        Params::Kernel {
            bandwidth,
            kernel_fn,
        } => Body::Kernel(kernel::KernelModel::new(
            z,
            numeric().to_vec(),
            bandwidth,
            kernel_fn,
        )),
        Params::Series { degree } => Body::Basis(basis::fit_series(&z, numeric(), degree)?),
        Params::Piecewise { n_knots } => {
            if p != 1 {
                return Err(Error::Fit(format!(
                    "piecewise regression needs exactly 1 feature, got {p}"
                )));
            }
            Body::Basis(basis::fit_piecewise(&z, numeric(), n_knots)?)
        }
    };
    Ok(FittedModel {
        spec: *spec,
        standardizer,
        class_names: data.class_names().to_vec(),
        body,
    })
}

/// Free-function form of [`FittedModel::predict`].
pub fn predict(model: &FittedModel, x: &Matrix) -> Result<Target> {
    model.predict(x)
}

/// Majority class with ties toward the smallest code.
pub(crate) fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &count) in counts.iter().enumerate() {
        if count > counts[best] {
            best = c;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(family: Family, values: &[(&str, f64)]) -> LearnerSpec {
        let values: Vec<(&str, HyperValue)> = values
            .iter()
            .map(|(k, v)| (*k, HyperValue::Number(*v)))
            .collect();
        LearnerSpec::from_values(family, Task::Regression, &values).unwrap()
    }

    fn line_data(x: &[f64], y: &[f64]) -> Dataset {
        Dataset::regression(Matrix::new(x.len(), 1, x.to_vec()).unwrap(), y.to_vec()).unwrap()
    }

    #[test]
    fn complexity_examples() {
        assert!(
            complexity_rank(&spec(Family::Knn, &[("k", 15.0)]))
                < complexity_rank(&spec(Family::Knn, &[("k", 3.0)]))
        );
        assert!(
            complexity_rank(&spec(Family::Tree, &[("max_leaves", 2.0)]))
                < complexity_rank(&spec(Family::Tree, &[("max_leaves", 8.0)]))
        );
        assert!(
            complexity_rank(&spec(Family::Series, &[("degree", 1.0)]))
                < complexity_rank(&spec(Family::Series, &[("degree", 3.0)]))
        );
        assert!(
            complexity_rank(&spec(Family::ElasticNet, &[("lambda", 1.0)]))
                < complexity_rank(&spec(Family::ElasticNet, &[("lambda", 0.01)]))
        );
    }

    #[test]
    fn spec_domains() {
        let bad = |family, key: &str, v: f64| {
            LearnerSpec::from_values(family, Task::Regression, &[(key, HyperValue::Number(v))])
                .unwrap_err()
        };
        assert!(
            matches!(bad(Family::Knn, "k", 0.0), Error::InvalidParam { name, .. } if name == "k")
        );
        assert!(matches!(
            bad(Family::Knn, "k", 2.5),
            Error::InvalidParam { .. }
        ));
        assert!(matches!(
            bad(Family::ElasticNet, "alpha", 1.5),
            Error::InvalidParam { .. }
        ));
        assert!(matches!(
            bad(Family::ElasticNet, "lambda", -1.0),
            Error::InvalidParam { .. }
        ));
        assert!(matches!(
            bad(Family::Boosting, "learning_rate", 0.0),
            Error::InvalidParam { .. }
        ));
        assert!(matches!(
            bad(Family::Boosting, "max_leaves", 1.0),
            Error::InvalidParam { .. }
        ));
        assert!(matches!(
            bad(Family::Kernel, "bandwidth", 0.0),
            Error::InvalidParam { .. }
        ));
        assert!(matches!(
            bad(Family::Tree, "k", 3.0),
            Error::InvalidParam { .. }
        ));
        assert!(LearnerSpec::from_values(Family::Boosting, Task::Classification, &[]).is_err());
        assert!(LearnerSpec::from_values(Family::Bagging, Task::Classification, &[]).is_ok());
    }

    #[test]
    fn grid_parsing_and_product() {
        let g = HyperGrid::parse_line(
            "random_forest m_features=1,2 max_leaves=2:8:3",
            Task::Regression,
        )
        .unwrap();
        assert_eq!(g.len(), 6);
        let specs = g.specs();
        assert_eq!(specs.len(), 6);
        assert_eq!(
            specs[0].params_string(),
            "m_features=1;n_bootstraps=50;max_leaves=2"
        );
        assert_eq!(
            specs[1].params_string(),
            "m_features=1;n_bootstraps=50;max_leaves=5"
        );
        assert_eq!(
            specs[5].params_string(),
            "m_features=2;n_bootstraps=50;max_leaves=8"
        );
        let k = HyperGrid::parse_line(
            "kernel bandwidth=0.1,0.5 kernel_fn=gaussian,epanechnikov",
            Task::Regression,
        )
        .unwrap();
        assert_eq!(
            k.specs()[1].params_string(),
            "bandwidth=0.1;kernel_fn=epanechnikov"
        );
        assert!(HyperGrid::parse_line("knn k=0", Task::Regression).is_err());
        assert!(HyperGrid::parse_line("knn k=1 k=2", Task::Regression).is_err());
        assert!(HyperGrid::parse_line("nope k=1", Task::Regression).is_err());
        assert!(HyperGrid::parse_line("knn k=1:3", Task::Regression).is_err());
        let r = parse_axis("lambda=0:0.3:0.1").unwrap();
        assert_eq!(r.1.len(), 4);
    }

    #[test]
    fn elastic_net_recovers_exact_line() {
        let d = line_data(&[0.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 5.0, 7.0]);
        let m = fit(&spec(Family::ElasticNet, &[("lambda", 0.0)]), &d, 0).unwrap();
        let (b0, b) = m.raw_coefficients().unwrap();
        assert!((b0 - 1.0).abs() < 1e-6, "{b0}");
        assert!((b[0] - 2.0).abs() < 1e-6, "{b:?}");
    }

    #[test]
    fn single_leaf_tree_predicts_mean() {
        let y = [0.3, 1.7, -2.0, 5.5, 0.1];
        let d = line_data(&[1.0, 2.0, 3.0, 4.0, 5.0], &y);
        let m = fit(&spec(Family::Tree, &[("max_leaves", 1.0)]), &d, 0).unwrap();
        let mean = y.iter().sum::<f64>() / 5.0;
        let q = Matrix::new(3, 1, vec![-10.0, 2.5, 99.0]).unwrap();
        assert_eq!(m.predict(&q).unwrap(), Target::Numeric(vec![mean; 3]));
    }

    #[test]
    fn one_round_boost_equals_stump() {
        let d = line_data(&[1.0, 2.0, 3.0, 4.0], &[0.0, 0.0, 4.0, 4.0]);
        let boosted = fit(
            &spec(
                Family::Boosting,
                &[
                    ("learning_rate", 1.0),
                    ("n_rounds", 1.0),
                    ("max_leaves", 2.0),
                ],
            ),
            &d,
            0,
        )
        .unwrap();
        let stump = fit(&spec(Family::Tree, &[("max_leaves", 2.0)]), &d, 0).unwrap();
        // Hand-computed: split at x = 2.5, leaves 0 and 4.
        let q = Matrix::new(6, 1, vec![0.0, 1.0, 2.0, 2.4, 3.0, 10.0]).unwrap();
        let expected = Target::Numeric(vec![0.0, 0.0, 0.0, 0.0, 4.0, 4.0]);
        assert_eq!(boosted.predict(&q).unwrap(), expected);
        assert_eq!(stump.predict(&q).unwrap(), expected);
        // Raw threshold of the stump sits halfway between x=2 and x=3.
        let Node::Split { threshold, .. } = stump.trees()[0].nodes()[0] else {
            panic!()
        };
        let s = stump.standardizer();
        assert!((threshold * s.stddevs()[0] + s.means()[0] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn knn_examples() {
        let y = [1.0, -2.0, 4.0, 0.5];
        let d = line_data(&[0.0, 1.0, 2.0, 3.5], &y);
        let m1 = fit(&spec(Family::Knn, &[("k", 1.0)]), &d, 0).unwrap();
        assert_eq!(
            m1.predict(d.features()).unwrap(),
            Target::Numeric(y.to_vec())
        );
        let m4 = fit(&spec(Family::Knn, &[("k", 4.0)]), &d, 0).unwrap();
        let mean = y.iter().sum::<f64>() / 4.0;
        let q = Matrix::new(2, 1, vec![-3.0, 8.0]).unwrap();
        assert_eq!(m4.predict(&q).unwrap(), Target::Numeric(vec![mean; 2]));
        assert!(fit(&spec(Family::Knn, &[("k", 5.0)]), &d, 0).is_err());
    }

    #[test]
    fn knn_classification_majority_and_ties() {
        let x = Matrix::new(5, 1, vec![0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        let d = Dataset::classification(x, vec![2, 1, 1, 2, 0], 3).unwrap();
        let all = LearnerSpec::from_values(
            Family::Knn,
            Task::Classification,
            &[("k", HyperValue::Number(5.0))],
        )
        .unwrap();
        let m = fit(&all, &d, 0).unwrap();
        // Counts: class 1 twice, class 2 twice, class 0 once -> tie broken toward 1.
        assert_eq!(
            m.predict(d.features()).unwrap(),
            Target::Classes(vec![1; 5])
        );
    }

    #[test]
    fn kernel_wide_bandwidth_is_mean() {
        let y = [1.0, 2.0, 6.0, -1.0];
        let d = line_data(&[0.0, 1.0, 2.0, 3.0], &y);
        let m = fit(&spec(Family::Kernel, &[("bandwidth", 1e6)]), &d, 0).unwrap();
        let mean = y.iter().sum::<f64>() / 4.0;
        let Target::Numeric(p) = m
            .predict(&Matrix::new(2, 1, vec![-5.0, 40.0]).unwrap())
            .unwrap()
        else {
            panic!()
        };
        for v in p {
            assert!(((v - mean) / mean).abs() < 1e-9);
        }
    }

    #[test]
    fn kernel_fallback_is_counted() {
        let d = line_data(&[0.0, 1.0], &[2.0, 4.0]);
        let epa = LearnerSpec::from_values(
            Family::Kernel,
            Task::Regression,
            &[
                ("bandwidth", HyperValue::Number(0.5)),
                ("kernel_fn", HyperValue::Kernel(KernelFn::Epanechnikov)),
            ],
        )
        .unwrap();
        let m = fit(&epa, &d, 0).unwrap();
        let (pred, diag) = m
            .predict_with_diagnostics(&Matrix::new(2, 1, vec![100.0, 0.0]).unwrap())
            .unwrap();
        assert_eq!(diag.kernel_fallbacks, 1);
        assert_eq!(pred, Target::Numeric(vec![3.0, 2.0]));
    }

    #[test]
    fn fit_errors() {
        let d = line_data(&[0.0, 1.0], &[2.0, 4.0]);
        let c = Dataset::classification(Matrix::new(2, 1, vec![0.0, 1.0]).unwrap(), vec![0, 1], 2)
            .unwrap();
        assert!(fit(&spec(Family::Knn, &[]), &c, 0).is_err());
        let wide = Dataset::regression(Matrix::zeros(3, 2), vec![1.0, 2.0, 3.0]).unwrap();
        assert!(fit(&spec(Family::Piecewise, &[]), &wide, 0).is_err());
        assert!(fit(
            &spec(Family::RandomForest, &[("m_features", 3.0)]),
            &wide,
            0
        )
        .is_err());
        let m = fit(&spec(Family::Knn, &[("k", 1.0)]), &d, 0).unwrap();
        assert!(matches!(
            m.predict(&Matrix::zeros(1, 2)),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn identical_rows_with_conflicting_targets_fall_back_to_mean() {
        let d = line_data(&[1.0, 1.0, 1.0], &[0.0, 3.0, 6.0]);
        for family in [
            Family::Tree,
            Family::Series,
            Family::Piecewise,
            Family::Boosting,
            Family::Bagging,
        ] {
            let m = fit(&spec(family, &[]), &d, 1).unwrap();
            let Target::Numeric(p) = m.predict(&Matrix::new(1, 1, vec![1.0]).unwrap()).unwrap()
            else {
                panic!()
            };
            if family != Family::Bagging {
                assert!((p[0] - 3.0).abs() < 1e-6, "{family}: {}", p[0]);
            }
        }
    }
}
