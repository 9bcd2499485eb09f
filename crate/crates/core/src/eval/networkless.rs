//! Networkless baseline: the walker may step to any same-class site outside
//! its memory window, which is a walk on the complete graph of each class.

use crate::dataset::{ClassId, LabeledDataset};
use crate::error::{Error, Result};
use crate::graph::ClassNetwork;
use crate::highlevel::{self, HighLevelConfig, HighLevelModel, Topology};
use crate::lowlevel::Membership;
use crate::netbuild::NetConfig;

/// One complete graph per class.
pub fn site_network(ds: &LabeledDataset) -> ClassNetwork {
    let mut g = ClassNetwork::from_dataset(ds);
    for j in 0..g.class_count() {
        let members = g.members(ClassId(j)).to_vec();
        for (a, &u) in members.iter().enumerate() {
            for &v in &members[a + 1..] {
                g.add_edge(u, v).expect("members are in range");
            }
        }
    }
    g
}

/// Every site is a candidate stop for the test instance.
pub fn site_proposal(g: &ClassNetwork, x: &[f64]) -> Result<Vec<usize>> {
    if g.vertex_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    if x.len() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: x.len(),
        });
    }
    Ok((0..g.vertex_count()).collect())
}

pub fn absorb_site(g: &mut ClassNetwork, x: &[f64], class: ClassId) -> Result<usize> {
    let members = g.members(class).to_vec();
    let id = g.push_vertex(x, class);
    for v in members {
        g.add_edge(id, v)?;
    }
    Ok(id)
}

/// High-level membership of `x` with walks over same-class site sets.
pub fn networkless_high_level(train: &LabeledDataset, x: &[f64], cfg: &HighLevelConfig) -> Result<Membership> {
    // The network rule is unused without a network; any valid config will do.
    let mut m = HighLevelModel::fit(train, NetConfig::new(1, 1.0), *cfg, Topology::Networkless)?;
    let d = m.deltas(x)?;
    highlevel::high_level_membership(&d, cfg)
}
