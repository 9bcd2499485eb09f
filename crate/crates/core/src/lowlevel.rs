//! Low-level classifiers: each maps an instance to per-class memberships.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{AttributeKind, ClassId, LabeledDataset, Metric};
use crate::error::{Error, Result};

/// Per-class scores in `[0, 1]` summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct Membership(Vec<f64>);

impl Membership {
    /// Wraps scores that are already normalized.
    pub fn from_vec(scores: Vec<f64>) -> Self {
        debug_assert!(
            scores.is_empty() || (scores.iter().sum::<f64>() - 1.0).abs() < 1e-9,
            "unnormalized membership {scores:?}"
        );
        Membership(scores)
    }

    pub fn uniform(classes: usize) -> Self {
        Membership(vec![1.0 / classes as f64; classes])
    }

    /// Nonnegative weights divided by their sum; all-zero weights become
    /// uniform.
    pub fn from_weights(weights: Vec<f64>) -> Self {
        let total: f64 = weights.iter().sum();
        if total > 0.0 && total.is_finite() {
            Membership(weights.into_iter().map(|w| w / total).collect())
        } else {
            Membership::uniform(weights.len())
        }
    }

    /// Arbitrary scores shifted so the minimum is zero, then normalized.
    pub fn from_scores(scores: &[f64]) -> Self {
        let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
        Membership::from_weights(scores.iter().map(|s| s - min).collect())
    }

    /// `(1 - λ) low + λ high`.
    pub fn fuse(low: &Membership, high: &Membership, lambda: f64) -> Result<Self> {
        if low.len() != high.len() {
            return Err(Error::DimensionMismatch {
                expected: low.len(),
                got: high.len(),
            });
        }
        Ok(Membership(
            low.0
                .iter()
                .zip(&high.0)
                .map(|(l, h)| (1.0 - lambda) * l + lambda * h)
                .collect(),
        ))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, class: ClassId) -> f64 {
        self.0[class.0]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Highest-scoring class; ties go to the smallest index.
    pub fn argmax(&self) -> ClassId {
        let mut best = 0;
        for (j, &v) in self.0.iter().enumerate() {
            if v > self.0[best] {
                best = j;
            }
        }
        ClassId(best)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LowLevelSpec {
    WeightedKnn { k: usize },
    GaussianNb,
    Linear { learning_rate: f64, epochs: usize, seed: u64 },
}

impl LowLevelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LowLevelSpec::WeightedKnn { k: 0 } => Err(Error::config("k-NN needs k >= 1")),
            LowLevelSpec::Linear { learning_rate, .. } if !(learning_rate > 0.0) => {
                Err(Error::config("linear learning rate must be positive"))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for LowLevelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LowLevelSpec::WeightedKnn { k } => write!(f, "wknn:{k}"),
            LowLevelSpec::GaussianNb => write!(f, "gnb"),
            LowLevelSpec::Linear {
                learning_rate,
                epochs,
                seed,
            } => write!(f, "linear:{learning_rate},{epochs},{seed}"),
        }
    }
}

impl FromStr for LowLevelSpec {
    type Err = Error;

    /// `wknn:K`, `gnb` or `linear:LR,EPOCHS,SEED`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        let bad = |what: &str| Error::config(format!("bad low-level spec {s:?}: {what}"));
        let spec = match kind.trim() {
            "wknn" | "knn" => LowLevelSpec::WeightedKnn {
                k: args.trim().parse().map_err(|_| bad("expected wknn:K"))?,
            },
            "gnb" if args.is_empty() => LowLevelSpec::GaussianNb,
            "linear" => {
                let parts: Vec<&str> = args.split(',').map(str::trim).collect();
                if parts.len() != 3 {
                    return Err(bad("expected linear:LR,EPOCHS,SEED"));
                }
                LowLevelSpec::Linear {
                    learning_rate: parts[0].parse().map_err(|_| bad("learning rate"))?,
                    epochs: parts[1].parse().map_err(|_| bad("epochs"))?,
                    seed: parts[2].parse().map_err(|_| bad("seed"))?,
                }
            }
            other => return Err(bad(&format!("unknown kind {other:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Debug)]
pub enum LowLevelModel {
    WeightedKnn(WeightedKnn),
    GaussianNb(GaussianNb),
    Linear(LinearClassifier),
}

impl LowLevelModel {
    pub fn fit(spec: &LowLevelSpec, ds: &LabeledDataset) -> Result<Self> {
        spec.validate()?;
        for (j, &n) in ds.class_sizes().iter().enumerate() {
            if n == 0 {
                return Err(Error::EmptyClass(ds.class_name(ClassId(j)).to_string()));
            }
        }
        Ok(match *spec {
            LowLevelSpec::WeightedKnn { k } => LowLevelModel::WeightedKnn(WeightedKnn::fit(ds, k)),
            LowLevelSpec::GaussianNb => LowLevelModel::GaussianNb(GaussianNb::fit(ds)),
            LowLevelSpec::Linear {
                learning_rate,
                epochs,
                seed,
            } => LowLevelModel::Linear(LinearClassifier::fit(ds, learning_rate, epochs, seed)),
        })
    }

    pub fn membership(&self, x: &[f64]) -> Membership {
        match self {
            LowLevelModel::WeightedKnn(m) => m.membership(x),
            LowLevelModel::GaussianNb(m) => m.membership(x),
            LowLevelModel::Linear(m) => m.membership(x),
        }
    }
}

/// Distance-weighted k-nearest neighbors.
#[derive(Clone, Debug)]
pub struct WeightedKnn {
    train: LabeledDataset,
    metric: Metric,
    k: usize,
}

impl WeightedKnn {
    pub fn fit(ds: &LabeledDataset, k: usize) -> Self {
        WeightedKnn {
            train: ds.clone(),
            metric: ds.metric(),
            k,
        }
    }

    /// Each of the `k` nearest neighbors votes with weight `1/d`. Any
    /// neighbor at distance zero takes all the weight (shared equally among
    /// such neighbors).
    pub fn membership(&self, x: &[f64]) -> Membership {
        let k = self.k.min(self.train.len());
        let mut dists: Vec<(f64, usize)> = self
            .train
            .rows()
            .enumerate()
            .map(|(i, r)| (self.metric.dist(x, r), i))
            .collect();
        let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dists.len() {
            dists.select_nth_unstable_by(k, by_dist);
            dists.truncate(k);
        }
        dists.sort_unstable_by(by_dist);
        let mut weights = vec![0.0; self.train.class_count()];
        let exact: Vec<usize> = dists.iter().filter(|d| d.0 == 0.0).map(|d| d.1).collect();
        if exact.is_empty() {
            for &(d, i) in &dists {
                weights[self.train.label(i).0] += 1.0 / d;
            }
        } else {
            for i in exact {
                weights[self.train.label(i).0] += 1.0;
            }
        }
        Membership::from_weights(weights)
    }
}

const VARIANCE_FLOOR: f64 = 1e-9;

/// Gaussian naive Bayes over numeric columns; categorical columns use
/// Laplace-smoothed per-class frequencies.
#[derive(Clone, Debug)]
pub struct GaussianNb {
    log_prior: Vec<f64>,
    kinds: Vec<AttributeKind>,
    /// `[class][column]`: mean and variance of numeric columns.
    mean: Vec<Vec<f64>>,
    var: Vec<Vec<f64>>,
    /// `[class][column]`: log-probability per category code.
    log_freq: Vec<Vec<Vec<f64>>>,
}

impl GaussianNb {
    pub fn fit(ds: &LabeledDataset) -> Self {
        let classes = ds.class_count();
        let dim = ds.dim();
        let sizes = ds.class_sizes();
        let kinds = ds.kinds().to_vec();
        let mut mean = vec![vec![0.0; dim]; classes];
        let mut var = vec![vec![0.0; dim]; classes];
        for (i, row) in ds.rows().enumerate() {
            let j = ds.label(i).0;
            for (m, v) in mean[j].iter_mut().zip(row) {
                *m += v;
            }
        }
        for (m, &n) in mean.iter_mut().zip(&sizes) {
            m.iter_mut().for_each(|v| *v /= n.max(1) as f64);
        }
        for (i, row) in ds.rows().enumerate() {
            let j = ds.label(i).0;
            for c in 0..dim {
                var[j][c] += (row[c] - mean[j][c]).powi(2);
            }
        }
        for (v, &n) in var.iter_mut().zip(&sizes) {
            v.iter_mut()
                .for_each(|x| *x = (*x / n.max(1) as f64).max(VARIANCE_FLOOR));
        }

        let categories: Vec<usize> = (0..dim)
            .map(|c| match kinds[c] {
                AttributeKind::Categorical => {
                    ds.rows().map(|r| r[c] as usize + 1).max().unwrap_or(1)
                }
                AttributeKind::Numeric => 0,
            })
            .collect();
        let mut counts: Vec<Vec<Vec<f64>>> = (0..classes)
            .map(|_| categories.iter().map(|&v| vec![0.0; v]).collect())
            .collect();
        for (i, row) in ds.rows().enumerate() {
            let j = ds.label(i).0;
            for c in 0..dim {
                if kinds[c] == AttributeKind::Categorical {
                    counts[j][c][row[c] as usize] += 1.0;
                }
            }
        }
        let log_freq = counts
            .into_iter()
            .zip(&sizes)
            .map(|(cols, &n)| {
                cols.into_iter()
                    .map(|cnt| {
                        let denom = n as f64 + cnt.len() as f64;
                        cnt.iter().map(|&k| ((k + 1.0) / denom).ln()).collect()
                    })
                    .collect()
            })
            .collect();
        let total = ds.len() as f64;
        GaussianNb {
            log_prior: sizes.iter().map(|&n| (n as f64 / total).ln()).collect(),
            kinds,
            mean,
            var,
            log_freq,
        }
    }

    fn log_likelihood(&self, j: usize, x: &[f64]) -> f64 {
        let mut ll = self.log_prior[j];
        for (c, &v) in x.iter().enumerate() {
            ll += match self.kinds[c] {
                AttributeKind::Numeric => {
                    let var = self.var[j][c];
                    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (v - self.mean[j][c]).powi(2) / var)
                }
                AttributeKind::Categorical => {
                    let table = &self.log_freq[j][c];
                    let unseen = -((table.len() + 1) as f64).ln();
                    table.get(v as usize).copied().unwrap_or(unseen)
                }
            };
        }
        ll
    }

    /// Posterior class probabilities.
    pub fn membership(&self, x: &[f64]) -> Membership {
        let ll: Vec<f64> = (0..self.log_prior.len())
            .map(|j| self.log_likelihood(j, x))
            .collect();
        let max = ll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Membership::from_weights(ll.iter().map(|l| (l - max).exp()).collect())
    }
}

/// One affine score per class, fitted by full-batch gradient descent on the
/// squared error against one-hot targets.
#[derive(Clone, Debug)]
pub struct LinearClassifier {
    /// `[class][dim + 1]`, bias last.
    weights: Vec<Vec<f64>>,
}

impl LinearClassifier {
    pub fn fit(ds: &LabeledDataset, learning_rate: f64, epochs: usize, seed: u64) -> Self {
        let classes = ds.class_count();
        let dim = ds.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights: Vec<Vec<f64>> = (0..classes)
            .map(|_| (0..=dim).map(|_| rng.random_range(-0.01..0.01)).collect())
            .collect();
        let n = ds.len().max(1) as f64;
        let mut grad = vec![vec![0.0; dim + 1]; classes];
        for _ in 0..epochs {
            grad.iter_mut().for_each(|g| g.fill(0.0));
            for (i, row) in ds.rows().enumerate() {
                let label = ds.label(i).0;
                for (j, w) in weights.iter().enumerate() {
                    let target = if j == label { 1.0 } else { 0.0 };
                    let err = score(w, row) - target;
                    let g = &mut grad[j];
                    for (gc, &xc) in g.iter_mut().zip(row) {
                        *gc += err * xc;
                    }
                    g[dim] += err;
                }
            }
            for (w, g) in weights.iter_mut().zip(&grad) {
                for (wc, gc) in w.iter_mut().zip(g) {
                    *wc -= learning_rate * 2.0 * gc / n;
                }
            }
        }
        LinearClassifier { weights }
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        self.weights.iter().map(|w| score(w, x)).collect()
    }

    pub fn membership(&self, x: &[f64]) -> Membership {
        Membership::from_scores(&self.scores(x))
    }
}

fn score(w: &[f64], x: &[f64]) -> f64 {
    let dim = x.len();
    w[..dim].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[dim]
}
