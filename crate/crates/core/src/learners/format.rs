//! Line-oriented model files.
//!
//! ```text
//! tunekit-model v1 <family> <task>
//! param <name> <value>          one per hyperparameter
//! class <label>                 classification only, in code order
//! standardizer <p>
//! mean <p values>
//! sd <p values>
//! <family body>
//! end
//! ```
//!
//! Bodies: `intercept`/`coef` (elastic net); `samples <n>` followed by
//! `sample <target> <features...>` (knn, kernel); `tree <nodes>` followed by
//! preorder `node <id> split <feature> <threshold> <left> <right>` and
//! `leaf <id> <value>` lines (tree); `trees <m>` and m tree blocks
//! (bagging, random forest); `base <f0>`, `trees <m>` (boosting);
//! `terms <m>` and `term <coef> <exponents...>` (series); `knots` and
//! `coef` (piecewise). Reals are written in shortest round-trip form, so
//! a reloaded model predicts bit-identically.

use std::fmt::Write as _;

use super::basis::{Basis, BasisModel};
use super::kernel::KernelModel;
use super::knn::KnnModel;
use super::linear::LinearModel;
use super::{Body, Family, FittedModel, HyperValue, LearnerSpec, Node, Params, Tree};
use crate::dataset::{Matrix, Standardizer, Target, Task};
use crate::error::{Error, Result};

const MAGIC: &str = "tunekit-model";
const VERSION: &str = "v1";

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:?}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn write_tree(out: &mut String, tree: &Tree) {
    let _ = writeln!(out, "tree {}", tree.nodes().len());
    for (id, node) in tree.nodes().iter().enumerate() {
        let _ = match *node {
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                writeln!(
                    out,
                    "node {id} split {feature} {threshold:?} {left} {right}"
                )
            }
            Node::Leaf { value } => writeln!(out, "leaf {id} {value:?}"),
        };
    }
}

fn write_samples(out: &mut String, x: &Matrix, y: &Target) {
    let _ = writeln!(out, "samples {}", x.nrows());
    for (i, row) in x.rows().enumerate() {
        let target = match y {
            Target::Numeric(v) => format!("{:?}", v[i]),
            Target::Classes(c) => c[i].to_string(),
        };
        let _ = writeln!(out, "sample {target} {}", join(row));
    }
}

impl FittedModel {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC} {VERSION} {} {}", self.family(), self.task());
        for (name, value) in self.spec.named_values() {
            let _ = match value {
                HyperValue::Number(v) => writeln!(out, "param {name} {v:?}"),
                HyperValue::Kernel(k) => writeln!(out, "param {name} {}", k.name()),
            };
        }
        for label in &self.class_names {
            let _ = writeln!(out, "class {label}");
        }
        let _ = writeln!(out, "standardizer {}", self.standardizer.p());
        let _ = writeln!(out, "mean {}", join(self.standardizer.means()));
        let _ = writeln!(out, "sd {}", join(self.standardizer.stddevs()));
        match &self.body {
            Body::Linear(m) => {
                let _ = writeln!(out, "intercept {:?}", m.intercept);
                let _ = writeln!(out, "coef {}", join(&m.coefs));
            }
            Body::Knn(m) => write_samples(&mut out, &m.x, &m.y),
            Body::Kernel(m) => write_samples(&mut out, &m.x, &Target::Numeric(m.y.clone())),
            Body::Tree(t) => write_tree(&mut out, t),
            Body::Forest(trees) => {
                let _ = writeln!(out, "trees {}", trees.len());
                trees.iter().for_each(|t| write_tree(&mut out, t));
            }
            Body::Boosted { base, trees } => {
                let _ = writeln!(out, "base {base:?}");
                let _ = writeln!(out, "trees {}", trees.len());
                trees.iter().for_each(|t| write_tree(&mut out, t));
            }
            Body::Basis(m) => match &m.basis {
                Basis::Series(terms) => {
                    let _ = writeln!(out, "terms {}", terms.len());
                    for (c, e) in m.coefs.iter().zip(terms) {
                        let exps: Vec<String> = e.iter().map(u32::to_string).collect();
                        let _ = writeln!(out, "term {c:?} {}", exps.join(" "));
                    }
                }
                Basis::Piecewise(knots) => {
                    let _ = writeln!(out, "knots {}", join(knots));
                    let _ = writeln!(out, "coef {}", join(&m.coefs));
                }
            },
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<FittedModel> {
        Reader::new(text).model()
    }
}

struct Reader<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader {
            lines: text.lines().collect(),
            pos: 0,
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::ModelFormat {
            line: self.pos.max(1),
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&'a str> {
        self.lines.get(self.pos).copied()
    }

    fn next_line(&mut self) -> Result<&'a str> {
        let line = self
            .peek()
            .ok_or_else(|| self.err("unexpected end of file"))?;
        self.pos += 1;
        Ok(line)
    }

    /// Next line, which must start with `keyword`; returns the remainder.
    fn expect(&mut self, keyword: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, rest)) if k == keyword => Ok(rest),
            None if line == keyword => Ok(""),
            _ => Err(self.err(format!("expected {keyword:?}, found {line:?}"))),
        }
    }

    fn expect_real(&mut self, keyword: &str) -> Result<f64> {
        let rest = self.expect(keyword)?;
        self.real(rest)
    }

    fn expect_int(&mut self, keyword: &str) -> Result<usize> {
        let rest = self.expect(keyword)?;
        self.int(rest)
    }

    fn expect_reals(&mut self, keyword: &str) -> Result<Vec<f64>> {
        let rest = self.expect(keyword)?;
        self.reals(rest)
    }

    fn real(&self, s: &str) -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| self.err(format!("bad number {s:?}")))
    }

    fn int(&self, s: &str) -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| self.err(format!("bad integer {s:?}")))
    }

    fn reals(&self, s: &str) -> Result<Vec<f64>> {
        s.split_whitespace().map(|w| self.real(w)).collect()
    }

    fn model(mut self) -> Result<FittedModel> {
        let header: Vec<&str> = self.next_line()?.split_whitespace().collect();
        if header.len() != 4 || header[0] != MAGIC {
            return Err(self.err("not a tunekit model file"));
        }
        if header[1] != VERSION {
            return Err(self.err(format!("unsupported version {}", header[1])));
        }
        let family: Family = header[2]
            .parse()
            .map_err(|_| self.err(format!("unknown family {}", header[2])))?;
        let task: Task = header[3]
            .parse()
            .map_err(|_| self.err(format!("unknown task {}", header[3])))?;

        let mut values = Vec::new();
        for &key in family.keys() {
            let rest = self.expect("param")?;
            let (name, value) = rest
                .split_once(' ')
                .ok_or_else(|| self.err("param needs a name and a value"))?;
            if name != key {
                return Err(self.err(format!("expected param {key}, found {name}")));
            }
            values.push((
                key,
                HyperValue::parse(key, value).map_err(|e| self.err(e.to_string()))?,
            ));
        }
        let spec =
            LearnerSpec::from_values(family, task, &values).map_err(|e| self.err(e.to_string()))?;

        let mut class_names = Vec::new();
        while self.peek().is_some_and(|l| l.starts_with("class ")) {
            class_names.push(self.expect("class")?.to_string());
        }
        if (task == Task::Classification) != (class_names.len() >= 2) {
            return Err(self.err("class list does not match the task"));
        }

        let p = self.expect_int("standardizer")?;
        let means = self.expect_reals("mean")?;
        let sds = self.expect_reals("sd")?;
        if means.len() != p || sds.len() != p {
            return Err(self.err(format!("standardizer needs {p} means and sds")));
        }
        let standardizer = Standardizer::new(means, sds).map_err(|e| self.err(e.to_string()))?;

        let body = match *spec.params() {
            Params::ElasticNet { .. } => {
                let intercept = self.expect_real("intercept")?;
                let coefs = self.expect_reals("coef")?;
                if coefs.len() != p {
                    return Err(self.err(format!("expected {p} coefficients")));
                }
                Body::Linear(LinearModel { intercept, coefs })
            }
            Params::Knn { k } => {
                let (x, y) = self.samples(p, task, class_names.len())?;
                if k > x.nrows() {
                    return Err(self.err("k exceeds the stored sample count"));
                }
                Body::Knn(KnnModel::new(x, y, k))
            }
            Params::Kernel {
                bandwidth,
                kernel_fn,
            } => {
                let (x, y) = self.samples(p, task, 0)?;
                let Target::Numeric(y) = y else {
                    unreachable!()
                };
                Body::Kernel(KernelModel::new(x, y, bandwidth, kernel_fn))
            }
            Params::Tree { .. } => Body::Tree(self.tree(p, &class_names)?),
            Params::Bagging { .. } | Params::RandomForest { .. } => {
                Body::Forest(self.trees(p, &class_names)?)
            }
            Params::Boosting { .. } => {
                let base = self.expect_real("base")?;
                Body::Boosted {
                    base,
                    trees: self.trees(p, &class_names)?,
                }
            }
            Params::Series { .. } => {
                let count = self.expect_int("terms")?;
                let mut terms = Vec::with_capacity(count);
                let mut coefs = Vec::with_capacity(count);
                for _ in 0..count {
                    let words: Vec<&str> = self.expect("term")?.split_whitespace().collect();
                    if words.len() != p + 1 {
                        return Err(self.err(format!("term needs a coefficient and {p} exponents")));
                    }
                    coefs.push(self.real(words[0])?);
                    let exps = words[1..]
                        .iter()
                        .map(|w| {
                            w.parse::<u32>()
                                .map_err(|_| self.err(format!("bad exponent {w:?}")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    terms.push(exps);
                }
                Body::Basis(BasisModel {
                    basis: Basis::Series(terms),
                    coefs,
                })
            }
            Params::Piecewise { .. } => {
                let knots = self.expect_reals("knots")?;
                let coefs = self.expect_reals("coef")?;
                if p != 1 || coefs.len() != knots.len() + 2 {
                    return Err(self.err("piecewise model needs p = 1 and knots + 2 coefficients"));
                }
                Body::Basis(BasisModel {
                    basis: Basis::Piecewise(knots),
                    coefs,
                })
            }
        };
        self.expect("end")?;
        if let Some(extra) = self.lines[self.pos..].iter().find(|l| !l.trim().is_empty()) {
            return Err(self.err(format!("trailing content {extra:?}")));
        }
        Ok(FittedModel {
            spec,
            standardizer,
            class_names,
            body,
        })
    }

    fn samples(&mut self, p: usize, task: Task, n_classes: usize) -> Result<(Matrix, Target)> {
        let n = self.expect_int("samples")?;
        if n == 0 {
            return Err(self.err("no stored samples"));
        }
        let mut data = Vec::with_capacity(n * p);
        let mut numeric = Vec::new();
        let mut codes = Vec::new();
        for _ in 0..n {
            let words: Vec<&str> = self.expect("sample")?.split_whitespace().collect();
            if words.len() != p + 1 {
                return Err(self.err(format!("sample needs a target and {p} features")));
            }
            match task {
                Task::Regression => numeric.push(self.real(words[0])?),
                Task::Classification => {
                    let c = self.int(words[0])?;
                    if c >= n_classes {
                        return Err(self.err(format!("class code {c} out of range")));
                    }
                    codes.push(c);
                }
            }
            for w in &words[1..] {
                data.push(self.real(w)?);
            }
        }
        let x = Matrix::new(n, p, data)?;
        let y = match task {
            Task::Regression => Target::Numeric(numeric),
            Task::Classification => Target::Classes(codes),
        };
        Ok((x, y))
    }

    fn trees(&mut self, p: usize, class_names: &[String]) -> Result<Vec<Tree>> {
        let count = self.expect_int("trees")?;
        if count == 0 {
            return Err(self.err("empty ensemble"));
        }
        (0..count).map(|_| self.tree(p, class_names)).collect()
    }

    fn tree(&mut self, p: usize, class_names: &[String]) -> Result<Tree> {
        let count = self.expect_int("tree")?;
        let mut nodes = Vec::with_capacity(count);
        for id in 0..count {
            let line = self.next_line()?;
            let words: Vec<&str> = line.split_whitespace().collect();
            let node = match words.as_slice() {
                ["node", i, "split", f, t, l, r] => {
                    self.check_id(i, id)?;
                    let feature = self.int(f)?;
                    if feature >= p {
                        return Err(self.err(format!("split feature {feature} out of range")));
                    }
                    Node::Split {
                        feature,
                        threshold: self.real(t)?,
                        left: self.int(l)?,
                        right: self.int(r)?,
                    }
                }
                ["leaf", i, v] => {
                    self.check_id(i, id)?;
                    let value = self.real(v)?;
                    if !class_names.is_empty()
                        && (value.fract() != 0.0
                            || value < 0.0
                            || value as usize >= class_names.len())
                    {
                        return Err(self.err(format!("leaf class {value} out of range")));
                    }
                    Node::Leaf { value }
                }
                _ => return Err(self.err(format!("bad tree line {line:?}"))),
            };
            nodes.push(node);
        }
        Tree::from_nodes(nodes).map_err(|e| self.err(e.to_string()))
    }

    fn check_id(&self, word: &str, want: usize) -> Result<()> {
        if self.int(word)? != want {
            return Err(self.err(format!("node ids must be sequential, expected {want}")));
        }
        Ok(())
    }
}
