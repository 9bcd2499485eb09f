//! High-level membership: how much each class component's tourist-walk
//! statistics move when a test instance is virtually inserted into it.
//!
//! Baseline walks are cached per class together with the set of vertices
//! each walk visited. A virtual insertion only changes the neighbor lists of
//! the inserted vertex's endpoints, so only walks that reach one of those
//! endpoints are re-run; every other walk keeps its cached outcome.

use fixedbitset::FixedBitSet;
use rayon::prelude::*;

use crate::dataset::{ClassId, LabeledDataset};
use crate::error::{Error, Result};
use crate::eval::networkless;
use crate::graph::ClassNetwork;
use crate::lowlevel::Membership;
use crate::netbuild::{self, NetConfig};
use crate::walker::{WalkOutcome, WalkProfile, Walker};

pub const DEFAULT_SENTINEL_MARGIN: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HighLevelConfig {
    pub alpha_t: f64,
    pub alpha_c: f64,
    pub mu_c: usize,
    /// Unconnected classes get `(1 + margin)` times the largest connected
    /// raw variation at each memory length.
    pub sentinel_margin: f64,
}

impl HighLevelConfig {
    pub fn new(alpha_t: f64, alpha_c: f64, mu_c: usize) -> Self {
        HighLevelConfig {
            alpha_t,
            alpha_c,
            mu_c,
            sentinel_margin: DEFAULT_SENTINEL_MARGIN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("alpha_t", self.alpha_t), ("alpha_c", self.alpha_c)] {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::config(format!("{name} must lie in [0, 1], got {a}")));
            }
        }
        if (self.alpha_t + self.alpha_c - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!(
                "alpha_t + alpha_c must equal 1, got {}",
                self.alpha_t + self.alpha_c
            )));
        }
        if !(self.sentinel_margin > 0.0) {
            return Err(Error::config("sentinel margin must be positive"));
        }
        Ok(())
    }
}

/// Normalized per-class variations, indexed `[class][μ]`, plus class
/// proportions.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassDeltas {
    pub transient: Vec<Vec<f64>>,
    pub cycle: Vec<Vec<f64>>,
    pub proportions: Vec<f64>,
}

impl ClassDeltas {
    pub fn class_count(&self) -> usize {
        self.proportions.len()
    }

    pub fn mu_max(&self) -> usize {
        self.transient
            .first()
            .map(|t| t.len().saturating_sub(1))
            .unwrap_or(0)
    }

    /// Builds normalized deltas from raw variations. `None` marks a class
    /// that shares no edge with the test instance.
    pub fn from_raw(
        raw_transient: &[Option<Vec<f64>>],
        raw_cycle: &[Option<Vec<f64>>],
        proportions: Vec<f64>,
        margin: f64,
    ) -> Result<Self> {
        Ok(ClassDeltas {
            transient: normalize_variations(raw_transient, margin)?,
            cycle: normalize_variations(raw_cycle, margin)?,
            proportions,
        })
    }
}

fn normalize_variations(raw: &[Option<Vec<f64>>], margin: f64) -> Result<Vec<Vec<f64>>> {
    let len = raw
        .iter()
        .flatten()
        .map(Vec::len)
        .next()
        .ok_or_else(|| Error::config("test instance shares no edge with any class"))?;
    let classes = raw.len();
    let mut out = vec![vec![0.0; len]; classes];
    for mu in 0..len {
        let largest = raw
            .iter()
            .flatten()
            .map(|r| r[mu])
            .fold(0.0f64, f64::max);
        let sentinel = largest * (1.0 + margin);
        let values: Vec<f64> = raw
            .iter()
            .map(|r| r.as_ref().map_or(sentinel, |r| r[mu]))
            .collect();
        let total: f64 = values.iter().sum();
        for (j, v) in values.iter().enumerate() {
            // No movement anywhere at this μ: no evidence either way.
            out[j][mu] = if total > 0.0 {
                v / total
            } else {
                1.0 / classes as f64
            };
        }
    }
    Ok(out)
}

pub fn class_proportions(g: &ClassNetwork) -> Vec<f64> {
    let v = g.vertex_count().max(1) as f64;
    (0..g.class_count())
        .map(|j| g.members(ClassId(j)).len() as f64 / v)
        .collect()
}

fn mu_range(deltas: &ClassDeltas, cfg: &HighLevelConfig) -> Result<usize> {
    if cfg.mu_c > deltas.mu_max() {
        return Err(Error::config(format!(
            "mu_c = {} exceeds the {} memory lengths computed",
            cfg.mu_c,
            deltas.mu_max() + 1
        )));
    }
    Ok(cfg.mu_c)
}

/// Membership from per-μ transient and cycle terms, summed over
/// `μ = 0..=mu_c` and normalized across classes.
pub fn high_level_membership(deltas: &ClassDeltas, cfg: &HighLevelConfig) -> Result<Membership> {
    let mu_c = mu_range(deltas, cfg)?;
    let scores: Vec<f64> = (0..deltas.class_count())
        .map(|j| {
            let p = deltas.proportions[j];
            (0..=mu_c)
                .map(|mu| {
                    let t = deltas.transient[j][mu] * p;
                    let c = deltas.cycle[j][mu] * p;
                    cfg.alpha_t * (1.0 - t) + cfg.alpha_c * (1.0 - c)
                })
                .sum()
        })
        .collect();
    normalized(scores)
}

/// The same membership expressed as a weighted combination of
/// `m = 2μ_c + 2` generic network measures: the first `μ_c + 1` are the
/// transient variations (weight `α_t`), the rest the cycle variations
/// (weight `α_c`).
pub fn generic_framework_membership(deltas: &ClassDeltas, cfg: &HighLevelConfig) -> Result<Membership> {
    let mu_c = mu_range(deltas, cfg)?;
    let m = 2 * mu_c + 2;
    let weight = |u: usize| if u <= mu_c + 1 { cfg.alpha_t } else { cfg.alpha_c };
    let variation = |j: usize, u: usize| {
        if u <= mu_c + 1 {
            deltas.transient[j][u - 1]
        } else {
            deltas.cycle[j][u - mu_c - 2]
        }
    };
    let measures: Vec<Vec<f64>> = (0..deltas.class_count())
        .map(|j| {
            (1..=m)
                .map(|u| variation(j, u) * deltas.proportions[j])
                .collect()
        })
        .collect();
    let scores: Vec<f64> = measures
        .iter()
        .map(|f| {
            f.iter()
                .enumerate()
                .map(|(i, fu)| weight(i + 1) * (1.0 - fu))
                .sum()
        })
        .collect();
    normalized(scores)
}

fn normalized(scores: Vec<f64>) -> Result<Membership> {
    let total: f64 = scores.iter().sum();
    if !(total > 0.0) {
        return Err(Error::config(
            "high-level scores sum to zero; need two or more classes and valid weights",
        ));
    }
    Ok(Membership::from_vec(scores.into_iter().map(|s| s / total).collect()))
}

/// Cached baseline walks for one class component.
#[derive(Clone, Debug)]
pub struct ClassBaseline {
    members: Vec<usize>,
    mu_max: usize,
    /// `outcomes[mu * n + i]` for the walk from `members[i]`.
    outcomes: Vec<WalkOutcome>,
    /// Per member vertex: the walks (same indexing) that visit it.
    visits: Vec<FixedBitSet>,
    t_sums: Vec<usize>,
    c_sums: Vec<usize>,
}

impl ClassBaseline {
    pub fn compute(g: &ClassNetwork, class: ClassId, mu_max: usize) -> Self {
        let members = g.members(class).to_vec();
        let n = members.len();
        let per_mu: Vec<(Vec<WalkOutcome>, Vec<Vec<usize>>)> = (0..=mu_max)
            .into_par_iter()
            .map_init(Walker::new, |walker, mu| {
                let mut outs = Vec::with_capacity(n);
                let mut seen = Vec::with_capacity(n);
                for &s in &members {
                    outs.push(walker.walk(g, s, mu));
                    seen.push(walker.path().to_vec());
                }
                (outs, seen)
            })
            .collect();

        let walks = n * (mu_max + 1);
        let mut visits = vec![FixedBitSet::with_capacity(walks); n];
        let mut outcomes = Vec::with_capacity(walks);
        let mut t_sums = vec![0; mu_max + 1];
        let mut c_sums = vec![0; mu_max + 1];
        for (mu, (outs, seen)) in per_mu.into_iter().enumerate() {
            for (i, (o, path)) in outs.into_iter().zip(seen).enumerate() {
                let id = mu * n + i;
                for v in path {
                    let local = members.binary_search(&v).expect("walk stays in its component");
                    visits[local].insert(id);
                }
                t_sums[mu] += o.transient;
                c_sums[mu] += o.cycle;
                outcomes.push(o);
            }
        }
        ClassBaseline {
            members,
            mu_max,
            outcomes,
            visits,
            t_sums,
            c_sums,
        }
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn profile(&self) -> WalkProfile {
        WalkProfile::from_sums(&self.t_sums, &self.c_sums, self.members.len())
    }

    pub fn outcome(&self, member: usize, mu: usize) -> WalkOutcome {
        self.outcomes[mu * self.members.len() + member]
    }
}

/// Baselines for every class of a network.
#[derive(Clone, Debug)]
pub struct Baselines {
    classes: Vec<ClassBaseline>,
    mu_max: usize,
}

impl Baselines {
    pub fn compute(g: &ClassNetwork, mu_max: usize) -> Self {
        let classes = (0..g.class_count())
            .map(|j| ClassBaseline::compute(g, ClassId(j), mu_max))
            .collect();
        Baselines { classes, mu_max }
    }

    pub fn refresh(&mut self, g: &ClassNetwork, class: ClassId) {
        self.classes[class.0] = ClassBaseline::compute(g, class, self.mu_max);
    }

    pub fn mu_max(&self) -> usize {
        self.mu_max
    }

    pub fn class(&self, class: ClassId) -> &ClassBaseline {
        &self.classes[class.0]
    }

    pub fn profile(&self, class: ClassId) -> WalkProfile {
        self.classes[class.0].profile()
    }
}

/// Profile of `class` with `x` virtually joined to `edges` (all of which
/// must belong to `class`). With `incremental`, only walks that reach an
/// endpoint of the new edges are re-run.
pub fn inserted_profile(
    g: &mut ClassNetwork,
    baseline: &ClassBaseline,
    x: &[f64],
    class: ClassId,
    edges: &[usize],
    incremental: bool,
) -> Result<WalkProfile> {
    let n = baseline.members.len();
    let mu_max = baseline.mu_max;
    let mut t_sums = vec![0usize; mu_max + 1];
    let mut c_sums = vec![0usize; mu_max + 1];
    let guard = g.scoped_insert(x, class, edges)?;
    let new_vertex = guard.vertex();
    let mut walker = Walker::new();

    if incremental {
        t_sums.copy_from_slice(&baseline.t_sums);
        c_sums.copy_from_slice(&baseline.c_sums);
        let mut affected = FixedBitSet::with_capacity(n * (mu_max + 1));
        for &e in edges {
            let local = baseline
                .members
                .binary_search(&e)
                .map_err(|_| Error::config(format!("vertex {e} is not in class {class}")))?;
            affected.union_with(&baseline.visits[local]);
        }
        for id in affected.ones() {
            let (mu, i) = (id / n, id % n);
            let old = baseline.outcomes[id];
            let new = walker.walk(&guard, baseline.members[i], mu);
            t_sums[mu] = t_sums[mu] - old.transient + new.transient;
            c_sums[mu] = c_sums[mu] - old.cycle + new.cycle;
        }
    } else {
        for mu in 0..=mu_max {
            for &s in &baseline.members {
                let o = walker.walk(&guard, s, mu);
                t_sums[mu] += o.transient;
                c_sums[mu] += o.cycle;
            }
        }
    }
    for mu in 0..=mu_max {
        let o = walker.walk(&guard, new_vertex, mu);
        t_sums[mu] += o.transient;
        c_sums[mu] += o.cycle;
    }
    Ok(WalkProfile::from_sums(&t_sums, &c_sums, n + 1))
}

/// Variations for test instance `x` given an edge proposal: each class that
/// receives at least one proposed edge is re-profiled with `x` joined to
/// those edges only.
pub fn variation_deltas(
    g: &mut ClassNetwork,
    baselines: &Baselines,
    x: &[f64],
    proposal: &[usize],
    cfg: &HighLevelConfig,
) -> Result<ClassDeltas> {
    let classes = g.class_count();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for &v in proposal {
        by_class[g.class_of(v).0].push(v);
    }
    let proportions = class_proportions(g);
    let mut raw_t: Vec<Option<Vec<f64>>> = vec![None; classes];
    let mut raw_c: Vec<Option<Vec<f64>>> = vec![None; classes];
    for (j, edges) in by_class.iter().enumerate() {
        if edges.is_empty() {
            continue;
        }
        let class = ClassId(j);
        let baseline = baselines.class(class);
        let before = baseline.profile();
        let after = inserted_profile(g, baseline, x, class, edges, true)?;
        raw_t[j] = Some(abs_diff(&after.mean_transient, &before.mean_transient));
        raw_c[j] = Some(abs_diff(&after.mean_cycle, &before.mean_cycle));
    }
    ClassDeltas::from_raw(&raw_t, &raw_c, proportions, cfg.sentinel_margin)
}

fn abs_diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect()
}

/// Where walks may go: along network edges, or to any same-class site.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Topology {
    #[default]
    Network,
    Networkless,
}

/// A trained high-level classifier: the class network, its baseline walks
/// and the configuration used to insert and score test instances.
#[derive(Clone, Debug)]
pub struct HighLevelModel {
    graph: ClassNetwork,
    baselines: Baselines,
    net: NetConfig,
    cfg: HighLevelConfig,
    topology: Topology,
}

impl HighLevelModel {
    /// Builds the network and baseline profiles up to `cfg.mu_c`.
    pub fn fit(
        ds: &LabeledDataset,
        net: NetConfig,
        cfg: HighLevelConfig,
        topology: Topology,
    ) -> Result<Self> {
        cfg.validate()?;
        if ds.class_count() < 2 {
            return Err(Error::config("at least two classes are required"));
        }
        let graph = match topology {
            Topology::Network => netbuild::build_training_network(ds, &net)?,
            Topology::Networkless => networkless::site_network(ds),
        };
        let baselines = Baselines::compute(&graph, cfg.mu_c);
        Ok(HighLevelModel {
            graph,
            baselines,
            net,
            cfg,
            topology,
        })
    }

    pub fn network(&self) -> &ClassNetwork {
        &self.graph
    }

    pub fn baselines(&self) -> &Baselines {
        &self.baselines
    }

    pub fn config(&self) -> &HighLevelConfig {
        &self.cfg
    }

    /// Swaps the scoring weights; `mu_c` may not exceed the baseline range.
    pub fn set_config(&mut self, cfg: HighLevelConfig) -> Result<()> {
        cfg.validate()?;
        if cfg.mu_c > self.baselines.mu_max() {
            return Err(Error::config(format!(
                "mu_c = {} exceeds the fitted range {}",
                cfg.mu_c,
                self.baselines.mu_max()
            )));
        }
        self.cfg = cfg;
        Ok(())
    }

    pub fn net_config(&self) -> &NetConfig {
        &self.net
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn propose(&self, x: &[f64]) -> Result<Vec<usize>> {
        match self.topology {
            Topology::Network => netbuild::insert_test_instance(&self.graph, x, &self.net),
            Topology::Networkless => networkless::site_proposal(&self.graph, x),
        }
    }

    /// Deltas for `x`, using `scratch` (a clone of this model's network) for
    /// the virtual insertions so that `self` stays shareable.
    pub fn deltas_with(&self, scratch: &mut ClassNetwork, x: &[f64]) -> Result<ClassDeltas> {
        debug_assert_eq!(scratch.vertex_count(), self.graph.vertex_count());
        let proposal = self.propose(x)?;
        variation_deltas(scratch, &self.baselines, x, &proposal, &self.cfg)
    }

    pub fn deltas(&mut self, x: &[f64]) -> Result<ClassDeltas> {
        let proposal = self.propose(x)?;
        variation_deltas(&mut self.graph, &self.baselines, x, &proposal, &self.cfg)
    }

    pub fn membership(&mut self, x: &[f64]) -> Result<Membership> {
        let d = self.deltas(x)?;
        high_level_membership(&d, &self.cfg)
    }

    /// Adds `x` permanently with label `predicted` and refreshes that class's
    /// baseline walks.
    pub fn absorb(&mut self, x: &[f64], predicted: ClassId) -> Result<usize> {
        let proposal = self.propose(x)?;
        let id = match self.topology {
            Topology::Network => {
                netbuild::absorb_classified_instance(&mut self.graph, x, predicted, &proposal)?
            }
            Topology::Networkless => networkless::absorb_site(&mut self.graph, x, predicted)?,
        };
        self.baselines.refresh(&self.graph, predicted);
        Ok(id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::class_names_from;

    fn cfg(mu_c: usize) -> HighLevelConfig {
        HighLevelConfig::new(0.5, 0.5, mu_c)
    }

    fn ds(points: &[(f64, f64, usize)]) -> LabeledDataset {
        LabeledDataset::from_rows(
            points.iter().map(|p| vec![p.0, p.1]).collect(),
            points.iter().map(|p| ClassId(p.2)).collect(),
            class_names_from(["red", "blue"]),
        )
        .unwrap()
    }

    #[test]
    fn proportions() {
        let d = ds(&[(0.0, 0.0, 0), (1.0, 0.0, 1), (2.0, 0.0, 1), (3.0, 0.0, 1)]);
        let g = ClassNetwork::from_dataset(&d);
        assert_eq!(class_proportions(&g), vec![0.25, 0.75]);
        let even = ds(&[(0.0, 0.0, 0), (1.0, 0.0, 1)]);
        assert_eq!(class_proportions(&ClassNetwork::from_dataset(&even)), vec![0.5, 0.5]);
    }

    #[test]
    fn lozenge_class_proportions() {
        let mut pts = vec![(0.0, 0.0, 0); 16];
        pts.extend(vec![(1.0, 1.0, 1); 58]);
        let g = ClassNetwork::from_dataset(&ds(&pts));
        let p = class_proportions(&g);
        assert!((p[0] - 16.0 / 74.0).abs() < 1e-15);
        assert!((p[0] - 0.2162).abs() < 5e-5 && (p[1] - 0.7838).abs() < 5e-5);
    }

    #[test]
    fn config_validation() {
        assert!(cfg(3).validate().is_ok());
        assert!(HighLevelConfig::new(0.5, 0.6, 3).validate().is_err());
        assert!(HighLevelConfig::new(-0.1, 1.1, 3).validate().is_err());
    }

    #[test]
    fn sentinel_dominates_connected_class() {
        let raw_t = vec![Some(vec![0.2, 0.5]), None];
        let raw_c = vec![Some(vec![1.0, 0.3]), None];
        let d = ClassDeltas::from_raw(&raw_t, &raw_c, vec![0.5, 0.5], 0.1).unwrap();
        for mu in 0..2 {
            assert!(d.transient[1][mu] > d.transient[0][mu]);
            assert!(d.cycle[1][mu] > d.cycle[0][mu]);
            assert!((d.transient[0][mu] - 1.0 / 2.1).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_variation_is_uniform() {
        let raw = vec![Some(vec![0.0, 1.0]), Some(vec![0.0, 3.0]), None];
        let d = ClassDeltas::from_raw(&raw, &raw, vec![0.3, 0.3, 0.4], 0.1).unwrap();
        for j in 0..3 {
            assert!((d.transient[j][0] - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((d.transient[1][1] - 3.0 / (1.0 + 3.0 + 3.3)).abs() < 1e-12);
    }

    #[test]
    fn nothing_connected_is_an_error() {
        let raw: Vec<Option<Vec<f64>>> = vec![None, None];
        assert!(ClassDeltas::from_raw(&raw, &raw, vec![0.5, 0.5], 0.1).is_err());
    }

    #[test]
    fn symmetric_deltas_give_even_membership() {
        let d = ClassDeltas {
            transient: vec![vec![0.5; 3]; 2],
            cycle: vec![vec![0.5; 3]; 2],
            proportions: vec![0.5, 0.5],
        };
        let h = high_level_membership(&d, &cfg(2)).unwrap();
        assert_eq!(h.as_slice(), &[0.5, 0.5]);
        let g = generic_framework_membership(&d, &cfg(2)).unwrap();
        assert_eq!(g.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn mu_c_zero_uses_two_measures() {
        let d = ClassDeltas {
            transient: vec![vec![0.3], vec![0.7]],
            cycle: vec![vec![0.9], vec![0.1]],
            proportions: vec![0.4, 0.6],
        };
        let c = HighLevelConfig::new(0.25, 0.75, 0);
        let a = high_level_membership(&d, &c).unwrap();
        let b = generic_framework_membership(&d, &c).unwrap();
        // Direct evaluation: red 0.25(1-0.12)+0.75(1-0.36), blue 0.25(1-0.42)+0.75(1-0.06).
        let red = 0.25 * 0.88 + 0.75 * 0.64;
        let blue = 0.25 * 0.58 + 0.75 * 0.94;
        assert!((a.get(ClassId(0)) - red / (red + blue)).abs() < 1e-12);
        assert!((a.get(ClassId(0)) - b.get(ClassId(0))).abs() < 1e-12);
    }

    #[test]
    fn mu_c_beyond_computed_range_is_rejected() {
        let d = ClassDeltas {
            transient: vec![vec![0.5]; 2],
            cycle: vec![vec![0.5]; 2],
            proportions: vec![0.5, 0.5],
        };
        assert!(high_level_membership(&d, &cfg(1)).is_err());
    }

    fn mirrored() -> LabeledDataset {
        // Two identical zig-zag components mirrored about x = 0.
        let mut pts = Vec::new();
        for i in 0..6 {
            let y = i as f64 * 0.1;
            let x = 0.3 + if i % 2 == 0 { 0.0 } else { 0.05 };
            pts.push((x, y, 0));
            pts.push((-x, y, 1));
        }
        ds(&pts)
    }

    #[test]
    fn mirrored_components_split_evenly() {
        let d = mirrored();
        let mut m = HighLevelModel::fit(&d, NetConfig::new(2, 0.01), cfg(4), Topology::Network).unwrap();
        // Equidistant from both components' nearest vertices.
        let x = [0.0, 0.2];
        let proposal = m.propose(&x).unwrap();
        let classes: Vec<_> = proposal.iter().map(|&v| m.network().class_of(v)).collect();
        assert!(classes.contains(&ClassId(0)) && classes.contains(&ClassId(1)));
        let deltas = m.deltas(&x).unwrap();
        for mu in 0..=4 {
            assert!((deltas.transient[0][mu] - deltas.transient[1][mu]).abs() < 1e-12);
            assert!((deltas.cycle[0][mu] - deltas.cycle[1][mu]).abs() < 1e-12);
        }
        let h = high_level_membership(&deltas, m.config()).unwrap();
        assert!((h.get(ClassId(0)) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn incremental_insertion_matches_full_recompute() {
        let d = mirrored();
        let mut g = netbuild::build_training_network(&d, &NetConfig::new(1, 0.01)).unwrap();
        let b = Baselines::compute(&g, 6);
        for (x, edges) in [([0.31, 0.62], vec![10]), ([0.33, 0.25], vec![4, 6]), ([0.3, 0.0], vec![0, 2, 4])] {
            let baseline = b.class(ClassId(0));
            let fast = inserted_profile(&mut g, baseline, &x, ClassId(0), &edges, true).unwrap();
            let slow = inserted_profile(&mut g, baseline, &x, ClassId(0), &edges, false).unwrap();
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn variation_deltas_leave_graph_untouched() {
        let d = mirrored();
        let mut m = HighLevelModel::fit(&d, NetConfig::new(1, 0.01), cfg(5), Topology::Network).unwrap();
        let before = m.network().clone();
        for x in [[0.1, 0.1], [0.4, 0.5], [-0.2, 0.3]] {
            m.deltas(&x).unwrap();
        }
        assert_eq!(m.network(), &before);
    }

    #[test]
    fn unconnected_class_gets_lower_delta_share() {
        let d = mirrored();
        let mut m = HighLevelModel::fit(&d, NetConfig::new(1, 0.01), cfg(4), Topology::Network).unwrap();
        let x = [0.36, 0.55];
        let proposal = m.propose(&x).unwrap();
        assert!(proposal.iter().all(|&v| m.network().class_of(v) == ClassId(0)));
        let deltas = m.deltas(&x).unwrap();
        for mu in 0..=4 {
            assert!(deltas.transient[1][mu] >= deltas.transient[0][mu]);
            assert!(deltas.cycle[1][mu] >= deltas.cycle[0][mu]);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn deltas_strategy() -> impl Strategy<Value = (ClassDeltas, HighLevelConfig)> {
            (2usize..6, 0usize..8, 0.0f64..=1.0).prop_flat_map(|(classes, mu_c, at)| {
                let raw = prop::collection::vec(
                    prop::option::weighted(0.8, prop::collection::vec(0.0f64..5.0, mu_c + 1)),
                    classes,
                );
                let props = prop::collection::vec(1usize..50, classes);
                (raw.clone(), raw, props).prop_filter_map("one connected class", move |(rt, rc, sizes)| {
                    if rt.iter().all(Option::is_none) || rc.iter().all(Option::is_none) {
                        return None;
                    }
                    let total: usize = sizes.iter().sum();
                    let p = sizes.iter().map(|&s| s as f64 / total as f64).collect();
                    let d = ClassDeltas::from_raw(&rt, &rc, p, 0.1).ok()?;
                    Some((d, HighLevelConfig::new(at, 1.0 - at, mu_c)))
                })
            })
        }

        proptest! {
            #[test]
            fn both_routes_agree((d, c) in deltas_strategy()) {
                let a = high_level_membership(&d, &c).unwrap();
                let b = generic_framework_membership(&d, &c).unwrap();
                for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                    prop_assert!((x - y).abs() <= 1e-12);
                }
            }

            #[test]
            fn membership_is_normalized((d, c) in deltas_strategy()) {
                let h = high_level_membership(&d, &c).unwrap();
                prop_assert!((h.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!(h.as_slice().iter().all(|&v| (0.0..=1.0).contains(&v)));
                for mu in 0..=d.mu_max() {
                    let st: f64 = d.transient.iter().map(|t| t[mu]).sum();
                    prop_assert!((st - 1.0).abs() < 1e-9);
                }
            }

            #[test]
            fn invariant_under_joint_weight_scaling((d, c) in deltas_strategy(), s in 0.1f64..10.0) {
                let h = high_level_membership(&d, &c).unwrap();
                let scaled = HighLevelConfig { alpha_t: c.alpha_t * s, alpha_c: c.alpha_c * s, ..c };
                // Scaled weights break the sum-to-one rule, so call the formula directly.
                let g = high_level_membership(&d, &scaled).unwrap();
                for (x, y) in h.as_slice().iter().zip(g.as_slice()) {
                    prop_assert!((x - y).abs() <= 1e-12);
                }
            }

            #[test]
            fn larger_transient_share_lowers_membership(
                mu_c in 0usize..5, at in 0.05f64..1.0, mu in 0usize..5,
                base in 0.0f64..0.9, bump in 0.01f64..0.1, cyc in 0.0f64..=1.0,
            ) {
                let mu = mu.min(mu_c);
                let make = |x: f64| {
                    let mut t1 = vec![0.5; mu_c + 1];
                    t1[mu] = x;
                    let t2 = t1.iter().map(|v| 1.0 - v).collect();
                    ClassDeltas {
                        transient: vec![t1, t2],
                        cycle: vec![vec![cyc; mu_c + 1], vec![1.0 - cyc; mu_c + 1]],
                        proportions: vec![0.5, 0.5],
                    }
                };
                let c = HighLevelConfig::new(at, 1.0 - at, mu_c);
                let lo = high_level_membership(&make(base), &c).unwrap();
                let hi = high_level_membership(&make(base + bump), &c).unwrap();
                prop_assert!(hi.get(ClassId(0)) < lo.get(ClassId(0)));
            }
        }
    }
}
