//! Network formation: the per-class k-NN / ε-radius rule for training data
//! and the label-blind variant for test instances.

use crate::dataset::{ClassId, LabeledDataset};
use crate::error::{Error, Result};
use crate::graph::ClassNetwork;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetConfig {
    pub k: usize,
    /// Radius used while building the training network.
    pub epsilon: f64,
    /// Radius used when inserting test instances; defaults to `epsilon`.
    pub test_epsilon: Option<f64>,
}

impl NetConfig {
    pub fn new(k: usize, epsilon: f64) -> Self {
        NetConfig {
            k,
            epsilon,
            test_epsilon: None,
        }
    }

    pub fn with_test_epsilon(mut self, eps: f64) -> Self {
        self.test_epsilon = Some(eps);
        self
    }

    pub fn classification_epsilon(&self) -> f64 {
        self.test_epsilon.unwrap_or(self.epsilon)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("k must be at least 1"));
        }
        for eps in [self.epsilon, self.classification_epsilon()] {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::config(format!("epsilon must be positive, got {eps}")));
            }
        }
        Ok(())
    }
}

/// What happens to a test instance once it has been classified.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AbsorbPolicy {
    #[default]
    Discard,
    Absorb,
}

/// Sorted `(dist, id)` candidates; ties resolve toward the smaller id.
fn ranked(mut cands: Vec<(f64, usize)>) -> Vec<(f64, usize)> {
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    cands
}

/// The dense/sparse rule: everything within `eps` when that is more than
/// `k` vertices, otherwise the `k` nearest.
fn select(cands: Vec<(f64, usize)>, k: usize, eps: f64) -> Vec<usize> {
    let cands = ranked(cands);
    let within = cands.partition_point(|c| c.0 <= eps);
    let take = if within > k { within } else { k.min(cands.len()) };
    let mut out: Vec<usize> = cands[..take].iter().map(|c| c.1).collect();
    out.sort_unstable();
    out
}

pub fn build_training_network(ds: &LabeledDataset, cfg: &NetConfig) -> Result<ClassNetwork> {
    cfg.validate()?;
    let mut g = ClassNetwork::from_dataset(ds);
    for class in 0..g.class_count() {
        let class = ClassId(class);
        let members = g.members(class).to_vec();
        let mut edges = Vec::new();
        for &v in &members {
            let cands = members
                .iter()
                .filter(|&&u| u != v)
                .map(|&u| (g.distance(u, v), u))
                .collect();
            for u in select(cands, cfg.k, cfg.epsilon) {
                edges.push((v, u));
            }
        }
        for (u, v) in edges {
            g.add_edge(u, v)?;
        }
        bridge_class(&mut g, class)?;
    }
    Ok(g)
}

/// Joins the components of one class by repeatedly adding the shortest edge
/// between two of its components.
fn bridge_class(g: &mut ClassNetwork, class: ClassId) -> Result<()> {
    let members = g.members(class).to_vec();
    if members.len() < 2 {
        return Ok(());
    }
    let comps = g.connected_components();
    let mut local: Vec<usize> = members.iter().map(|&v| comps.of[v]).collect();
    let mut ids = local.clone();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() < 2 {
        return Ok(());
    }
    for c in local.iter_mut() {
        *c = ids.binary_search(c).expect("component id");
    }
    let nc = ids.len();

    // Closest vertex pair for every pair of components.
    let mut best = vec![(f64::INFINITY, usize::MAX, usize::MAX); nc * nc];
    for (i, &u) in members.iter().enumerate() {
        for (j, &v) in members.iter().enumerate().skip(i + 1) {
            let (a, b) = (local[i], local[j]);
            if a == b {
                continue;
            }
            let d = g.distance(u, v);
            let slot = &mut best[a.min(b) * nc + a.max(b)];
            if (d, u, v) < *slot {
                *slot = (d, u, v);
            }
        }
    }
    let mut cands: Vec<(f64, usize, usize, usize, usize)> = Vec::new();
    for a in 0..nc {
        for b in a + 1..nc {
            let (d, u, v) = best[a * nc + b];
            cands.push((d, u, v, a, b));
        }
    }
    cands.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));

    let mut parent: Vec<usize> = (0..nc).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut joined = 1;
    for (_, u, v, a, b) in cands {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            g.add_edge(u, v)?;
            joined += 1;
            if joined == nc {
                break;
            }
        }
    }
    Ok(())
}

/// Label-blind edge proposal for a test instance, as sorted vertex ids.
pub fn insert_test_instance(g: &ClassNetwork, x: &[f64], cfg: &NetConfig) -> Result<Vec<usize>> {
    if g.vertex_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    if x.len() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: x.len(),
        });
    }
    let cands = (0..g.vertex_count())
        .map(|v| (g.distance_to(x, v), v))
        .collect();
    Ok(select(cands, cfg.k, cfg.classification_epsilon()))
}

/// Permanently adds a classified instance, keeping only the proposed edges
/// into its predicted class. With no such edge it is bridged to the nearest
/// vertex of that class. Returns the new vertex id.
pub fn absorb_classified_instance(
    g: &mut ClassNetwork,
    x: &[f64],
    predicted: ClassId,
    proposal: &[usize],
) -> Result<usize> {
    if x.len() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: x.len(),
        });
    }
    let mut keep: Vec<usize> = proposal
        .iter()
        .copied()
        .filter(|&v| v < g.vertex_count() && g.class_of(v) == predicted)
        .collect();
    if keep.is_empty() {
        let nearest = g
            .members(predicted)
            .iter()
            .map(|&v| (g.distance_to(x, v), v))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if let Some((_, v)) = nearest {
            keep.push(v);
        }
    }
    let id = g.push_vertex(x, predicted);
    for v in keep {
        g.add_edge(id, v)?;
    }
    Ok(id)
}
