//! One-vs-rest linear soft-margin SVM trained by seeded sub-gradient descent.
//!
//! Each binary problem minimizes `½‖w‖² + C Σ max(0, 1 − yᵢ(wᵀxᵢ + b))`
//! on standardized features, using Pegasos steps `η_t = 1/(λt)` with
//! `λ = 1/(C·N)`. The bias is handled as the weight of a constant unit
//! feature, so it is regularized together with `w`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cca::parse_vec;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{fmt_exact, Real};
use crate::signal::LabeledWindows;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    pub reg_c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { reg_c: 1.0, epochs: 200, seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel<T: Real> {
    /// One row of weights per class, in standardized feature space.
    pub weights: Matrix<T>,
    pub biases: Vec<T>,
    pub reg_c: T,
    /// Gesture id for each weight row, ascending.
    pub classes: Vec<usize>,
    pub feature_means: Vec<T>,
    pub feature_scales: Vec<T>,
    pub seed: u64,
    pub epochs: usize,
}

pub fn svm_train<T: Real>(train: &LabeledWindows<T>, params: &SvmParams) -> Result<SvmModel<T>> {
    if !(params.reg_c > 0.0 && params.reg_c.is_finite()) {
        return Err(Error::Parameter(format!("reg_c must be positive, got {}", params.reg_c)));
    }
    let x = &train.features;
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("training features contain non-finite values".into()));
    }
    let classes = train.gestures();
    if classes.len() < 2 {
        return Err(Error::Training(format!("need at least 2 classes, found {}", classes.len())));
    }
    let (n, count) = x.shape();

    let feature_means = x.row_means();
    let feature_scales: Vec<T> = (0..n)
        .map(|c| {
            let var = x.row(c).iter().map(|&v| (v - feature_means[c]).powi(2)).sum::<T>() / T::from_count(count);
            let sd = var.sqrt();
            if sd > T::zero() { sd } else { T::one() }
        })
        .collect();

    // Standardized samples with a trailing constant for the bias.
    let samples: Vec<Vec<T>> = (0..count)
        .map(|j| {
            (0..n)
                .map(|c| (x[(c, j)] - feature_means[c]) / feature_scales[c])
                .chain(std::iter::once(T::one()))
                .collect()
        })
        .collect();
    let class_index: Vec<usize> = train
        .labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label comes from class list"))
        .collect();

    let reg_c = T::lit(params.reg_c);
    let lambda = T::one() / (reg_c * T::from_count(count));
    let radius = T::one() / lambda.sqrt();
    let g = classes.len();
    let mut w = vec![vec![T::zero(); n + 1]; g];

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..count).collect();
    let mut t = 0usize;
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = T::one() / (lambda * T::from_count(t));
            let shrink = T::one() - eta * lambda;
            let xi = &samples[i];
            for (k, wk) in w.iter_mut().enumerate() {
                let y = if class_index[i] == k { T::one() } else { -T::one() };
                let margin = y * dot(wk, xi);
                for v in wk.iter_mut() {
                    *v *= shrink;
                }
                if margin < T::one() {
                    for (v, &xv) in wk.iter_mut().zip(xi) {
                        *v += eta * y * xv;
                    }
                }
                let norm = dot(wk, wk).sqrt();
                if norm > radius {
                    let s = radius / norm;
                    for v in wk.iter_mut() {
                        *v *= s;
                    }
                }
            }
        }
    }

    let weights = Matrix::from_fn(g, n, |k, c| w[k][c]);
    let biases = w.iter().map(|wk| wk[n]).collect();
    Ok(SvmModel {
        weights,
        biases,
        reg_c,
        classes,
        feature_means,
        feature_scales,
        seed: params.seed,
        epochs: params.epochs,
    })
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

impl<T: Real> SvmModel<T> {
    pub fn n_features(&self) -> usize {
        self.weights.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    fn check_rows(&self, features: &Matrix<T>) -> Result<()> {
        if features.rows() != self.n_features() {
            return Err(Error::dim("svm_predict", format!("{} feature rows", self.n_features()), features.rows()));
        }
        Ok(())
    }

    /// Applies the model's stored standardization.
    pub fn standardize(&self, features: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_rows(features)?;
        Ok(Matrix::from_fn(features.rows(), features.cols(), |c, j| {
            (features[(c, j)] - self.feature_means[c]) / self.feature_scales[c]
        }))
    }

    /// Class scores (`G × windows`) for already-standardized features.
    pub fn scores_standardized(&self, standardized: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_rows(standardized)?;
        let s = self.weights.dot(standardized);
        Ok(Matrix::from_fn(s.rows(), s.cols(), |k, j| s[(k, j)] + self.biases[k]))
    }

    pub fn predict_standardized(&self, standardized: &Matrix<T>) -> Result<Vec<usize>> {
        let scores = self.scores_standardized(standardized)?;
        Ok((0..scores.cols())
            .map(|j| {
                // Strict comparison keeps the smallest class id on ties.
                let mut best = 0;
                for k in 1..scores.rows() {
                    if scores[(k, j)] > scores[(best, j)] {
                        best = k;
                    }
                }
                self.classes[best]
            })
            .collect())
    }

    /// Predicted gesture id for every feature column.
    pub fn predict(&self, features: &Matrix<T>) -> Result<Vec<usize>> {
        self.predict_standardized(&self.standardize(features)?)
    }

    /// Sum over classes of `½(‖w‖² + b²) + C Σ hinge` on `data`.
    pub fn objective(&self, data: &LabeledWindows<T>) -> Result<T> {
        let scores = self.scores_standardized(&self.standardize(&data.features)?)?;
        let mut total = T::zero();
        for (k, &class) in self.classes.iter().enumerate() {
            let reg = dot(self.weights.row(k), self.weights.row(k)) + self.biases[k] * self.biases[k];
            let hinge: T = (0..scores.cols())
                .map(|j| {
                    let y = if data.labels[j] == class { T::one() } else { -T::one() };
                    (T::one() - y * scores[(k, j)]).max(T::zero())
                })
                .sum();
            total += T::lit(0.5) * reg + self.reg_c * hinge;
        }
        Ok(total)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().flexible(true).has_headers(false).from_writer(w);
        out.write_record(["G", &self.n_classes().to_string()])?;
        out.write_record(["n", &self.n_features().to_string()])?;
        out.write_record(["reg_c", &fmt_exact(self.reg_c)])?;
        out.write_record(["seed", &self.seed.to_string()])?;
        out.write_record(["epochs", &self.epochs.to_string()])?;
        out.write_record(std::iter::once("classes".to_string()).chain(self.classes.iter().map(|c| c.to_string())))?;
        let mut row = |key: &str, vals: &mut dyn Iterator<Item = T>| {
            out.write_record(std::iter::once(key.to_string()).chain(vals.map(fmt_exact)))
        };
        row("means", &mut self.feature_means.iter().copied())?;
        row("scales", &mut self.feature_scales.iter().copied())?;
        for k in 0..self.n_classes() {
            row("w", &mut self.weights.row(k).iter().copied().chain(std::iter::once(self.biases[k])))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().flexible(true).has_headers(false).from_reader(r);
        let records = rd.records().collect::<std::result::Result<Vec<_>, _>>()?;
        let mut lines = records.iter();
        let mut next = |key: &str| -> Result<Vec<String>> {
            let rec = lines.next().ok_or_else(|| Error::ModelFormat(format!("missing {key:?} line")))?;
            if rec.get(0) != Some(key) {
                return Err(Error::ModelFormat(format!("expected {key:?}, found {:?}", rec.get(0))));
            }
            Ok(rec.iter().skip(1).map(str::to_string).collect())
        };
        fn int<I: std::str::FromStr>(v: &[String], key: &str) -> Result<I> {
            v.first()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::ModelFormat(format!("bad {key} value")))
        }
        let g: usize = int(&next("G")?, "G")?;
        let n: usize = int(&next("n")?, "n")?;
        let reg_c = parse_vec::<T>(&next("reg_c")?, 1, "reg_c")?[0];
        let seed: u64 = int(&next("seed")?, "seed")?;
        let epochs: usize = int(&next("epochs")?, "epochs")?;
        let classes = next("classes")?
            .iter()
            .map(|s| s.trim().parse::<usize>().map_err(|_| Error::ModelFormat(format!("bad class id {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if classes.len() != g {
            return Err(Error::ModelFormat(format!("expected {g} classes, found {}", classes.len())));
        }
        let feature_means = parse_vec(&next("means")?, n, "means")?;
        let feature_scales: Vec<T> = parse_vec(&next("scales")?, n, "scales")?;
        if feature_scales.iter().any(|&s| s <= T::zero()) {
            return Err(Error::ModelFormat("feature scales must be positive".into()));
        }
        let mut rows = Vec::with_capacity(g);
        let mut biases = Vec::with_capacity(g);
        for _ in 0..g {
            let mut v: Vec<T> = parse_vec(&next("w")?, n + 1, "w")?;
            biases.push(v.pop().unwrap());
            rows.push(v);
        }
        Ok(Self {
            weights: Matrix::from_rows(&rows)?,
            biases,
            reg_c,
            classes,
            feature_means,
            feature_scales,
            seed,
            epochs,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(File::open(path)?)
    }
}

/// Fraction of positions where `predicted` equals `truth`.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::dim("accuracy", truth.len(), predicted.len()));
    }
    if truth.is_empty() {
        return Err(Error::Parameter("accuracy of an empty set".into()));
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}
