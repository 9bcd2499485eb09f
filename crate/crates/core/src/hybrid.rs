//! Hybrid decision: a convex blend of low-level and high-level memberships.

use rayon::prelude::*;

use crate::dataset::{ClassId, LabeledDataset};
use crate::error::{Error, Result};
use crate::graph::ClassNetwork;
use crate::highlevel::{self, ClassDeltas, HighLevelConfig, HighLevelModel, Topology};
use crate::lowlevel::{LowLevelModel, LowLevelSpec, Membership};
use crate::netbuild::{AbsorbPolicy, NetConfig};

pub const DEFAULT_LAMBDA_STEP: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HybridConfig {
    pub lambda: f64,
    pub absorb: AbsorbPolicy,
}

impl HybridConfig {
    pub fn new(lambda: f64) -> Self {
        HybridConfig {
            lambda,
            absorb: AbsorbPolicy::Discard,
        }
    }

    pub fn absorbing(mut self) -> Self {
        self.absorb = AbsorbPolicy::Absorb;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::config(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        Ok(())
    }
}

/// The grid `{0, step, 2 step, ..., 1}`; `1 / step` must be an integer.
pub fn lambda_grid(step: f64) -> Result<Vec<f64>> {
    let n = (1.0 / step).round();
    if !(step > 0.0) || n < 1.0 || (n * step - 1.0).abs() > 1e-9 {
        return Err(Error::config(format!("lambda step {step} does not divide 1")));
    }
    let n = n as usize;
    Ok((0..=n).map(|i| i as f64 / n as f64).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub label: ClassId,
    pub fused: Membership,
    pub low: Membership,
    pub high: Membership,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchResult {
    pub decisions: Vec<Decision>,
    /// `None` for an empty test set.
    pub accuracy: Option<f64>,
}

impl BatchResult {
    pub fn predictions(&self) -> Vec<ClassId> {
        self.decisions.iter().map(|d| d.label).collect()
    }
}

pub fn decide(low: Membership, high: Membership, lambda: f64) -> Result<Decision> {
    let fused = Membership::fuse(&low, &high, lambda)?;
    Ok(Decision {
        label: fused.argmax(),
        fused,
        low,
        high,
    })
}

/// Smallest grid value of `λ` whose fused decision is `target`.
pub fn lambda_min_from(low: &Membership, high: &Membership, target: ClassId, grid: &[f64]) -> Result<Option<f64>> {
    for &lambda in grid {
        if Membership::fuse(low, high, lambda)?.argmax() == target {
            return Ok(Some(lambda));
        }
    }
    Ok(None)
}

/// A fitted low-level model paired with a high-level model over the same
/// training set.
#[derive(Clone, Debug)]
pub struct HybridModel {
    low: LowLevelModel,
    high: HighLevelModel,
}

impl HybridModel {
    pub fn fit(
        train: &LabeledDataset,
        low: &LowLevelSpec,
        net: NetConfig,
        high: HighLevelConfig,
        topology: Topology,
    ) -> Result<Self> {
        Ok(HybridModel {
            low: LowLevelModel::fit(low, train)?,
            high: HighLevelModel::fit(train, net, high, topology)?,
        })
    }

    pub fn from_parts(low: LowLevelModel, high: HighLevelModel) -> Self {
        HybridModel { low, high }
    }

    pub fn low(&self) -> &LowLevelModel {
        &self.low
    }

    pub fn high(&self) -> &HighLevelModel {
        &self.high
    }

    pub fn set_high_config(&mut self, cfg: HighLevelConfig) -> Result<()> {
        self.high.set_config(cfg)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        let dim = self.high.network().dim();
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Low-level membership and high-level deltas for `x`, using `scratch`
    /// (a clone of the network) for virtual insertion.
    pub fn evidence_with(&self, scratch: &mut ClassNetwork, x: &[f64]) -> Result<(Membership, ClassDeltas)> {
        self.check_dim(x)?;
        Ok((self.low.membership(x), self.high.deltas_with(scratch, x)?))
    }

    fn memberships(&mut self, x: &[f64]) -> Result<(Membership, Membership)> {
        self.check_dim(x)?;
        let low = self.low.membership(x);
        let deltas = self.high.deltas(x)?;
        let high = highlevel::high_level_membership(&deltas, self.high.config())?;
        Ok((low, high))
    }

    pub fn classify_one(&mut self, x: &[f64], cfg: &HybridConfig) -> Result<Decision> {
        cfg.validate()?;
        let (low, high) = self.memberships(x)?;
        let decision = decide(low, high, cfg.lambda)?;
        if cfg.absorb == AbsorbPolicy::Absorb {
            self.high.absorb(x, decision.label)?;
        }
        Ok(decision)
    }

    /// Classifies `test` in row order. Discarded instances never influence
    /// one another, so that mode runs in parallel; absorbing runs serially.
    pub fn classify_batch(&mut self, test: &LabeledDataset, cfg: &HybridConfig) -> Result<BatchResult> {
        cfg.validate()?;
        let decisions: Vec<Decision> = match cfg.absorb {
            AbsorbPolicy::Absorb => test
                .rows()
                .map(|x| self.classify_one(x, cfg))
                .collect::<Result<_>>()?,
            AbsorbPolicy::Discard => {
                let this = &*self;
                (0..test.len())
                    .into_par_iter()
                    .map_init(
                        || this.high.network().clone(),
                        |scratch, i| {
                            let x = test.row(i);
                            let (low, deltas) = this.evidence_with(scratch, x)?;
                            let high = highlevel::high_level_membership(&deltas, this.high.config())?;
                            decide(low, high, cfg.lambda)
                        },
                    )
                    .collect::<Result<_>>()?
            }
        };
        let accuracy = (!decisions.is_empty()).then(|| {
            let hits = decisions
                .iter()
                .zip(test.labels())
                .filter(|(d, &y)| d.label == y)
                .count();
            hits as f64 / decisions.len() as f64
        });
        Ok(BatchResult { decisions, accuracy })
    }

    /// Minimal grid `λ` that classifies `x` as `target`, without changing
    /// the model.
    pub fn lambda_min(&mut self, x: &[f64], target: ClassId, step: f64) -> Result<Option<f64>> {
        if target.0 >= self.high.network().class_count() {
            return Err(Error::config(format!("unknown target class {target}")));
        }
        let grid = lambda_grid(step)?;
        let (low, high) = self.memberships(x)?;
        lambda_min_from(&low, &high, target, &grid)
    }

    /// `lambda_min` for each instance in order. With absorption, each
    /// instance joins the network afterwards, labeled as decided at its
    /// `λ_min` (or at `λ = 1` when the target is never reached).
    pub fn lambda_min_sequence(
        &mut self,
        xs: &[Vec<f64>],
        target: ClassId,
        step: f64,
        absorb: AbsorbPolicy,
    ) -> Result<Vec<Option<f64>>> {
        let grid = lambda_grid(step)?;
        let mut out = Vec::with_capacity(xs.len());
        for x in xs {
            let (low, high) = self.memberships(x)?;
            let lmin = lambda_min_from(&low, &high, target, &grid)?;
            if absorb == AbsorbPolicy::Absorb {
                let label = match lmin {
                    Some(_) => target,
                    None => Membership::fuse(&low, &high, 1.0)?.argmax(),
                };
                self.high.absorb(x, label)?;
            }
            out.push(lmin);
        }
        Ok(out)
    }
}
