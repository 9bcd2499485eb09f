//! Deterministic tourist walks on a [`ClassNetwork`].
//!
//! The walker keeps a memory of the `μ` most recently visited vertices
//! (including the current one) and always moves to the nearest neighbor
//! outside that memory, ties going to the smallest vertex id. A walk ends
//! either trapped (no admissible neighbor, cycle length 0) or when the full
//! walker state, the ordered memory window, repeats.
//!
//! States are indexed by a rolling hash of the window so each step costs
//! O(degree); hash hits are confirmed by comparing the window slices.

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::dataset::ClassId;
use crate::graph::ClassNetwork;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct WalkOutcome {
    /// Steps before the first state of the attractor (or before trapping).
    pub transient: usize,
    /// Attractor period in steps; 0 when the walker got trapped.
    pub cycle: usize,
}

impl WalkOutcome {
    pub fn is_trapped(&self) -> bool {
        self.cycle == 0
    }
}

const NEVER: usize = usize::MAX;
const HASH_BASE: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn vertex_key(v: usize) -> u64 {
    (v as u64).wrapping_add(1).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
}

/// Reusable scratch space for walks. Buffers grow to the largest graph seen.
#[derive(Debug, Default)]
pub struct Walker {
    last_visit: Vec<usize>,
    path: Vec<usize>,
    /// Latest step bearing each window hash.
    latest: FxHashMap<u64, usize>,
    /// Previous step with the same hash, per step (a collision chain).
    chain: Vec<usize>,
}

impl Walker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Vertices of the most recent walk in visiting order.
    pub fn path(&self) -> &[usize] {
        &self.path
    }

    pub fn walk(&mut self, g: &ClassNetwork, start: usize, mu: usize) -> WalkOutcome {
        let n = g.vertex_count();
        assert!(start < n, "start vertex {start} out of range ({n} vertices)");
        if self.last_visit.len() < n {
            self.last_visit.resize(n, NEVER);
        }
        self.path.clear();
        self.latest.clear();
        self.chain.clear();

        let window = mu.max(1);
        let mut top_power = 1u64; // HASH_BASE^(window - 1)
        for _ in 1..window {
            top_power = top_power.wrapping_mul(HASH_BASE);
        }

        let mut current = start;
        let mut hash = 0u64;
        let mut step = 0usize;
        let outcome = loop {
            self.path.push(current);
            self.last_visit[current] = step;

            if step >= window {
                let leaving = self.path[step - window];
                hash = hash.wrapping_sub(vertex_key(leaving).wrapping_mul(top_power));
            }
            hash = hash.wrapping_mul(HASH_BASE).wrapping_add(vertex_key(current));

            if step + 1 >= window {
                let mut prev = self.latest.get(&hash).copied().unwrap_or(NEVER);
                let head = prev;
                while prev != NEVER {
                    if self.path[prev + 1 - window..=prev] == self.path[step + 1 - window..=step] {
                        break;
                    }
                    prev = self.chain[prev + 1 - window];
                }
                if prev != NEVER {
                    break WalkOutcome {
                        transient: prev,
                        cycle: step - prev,
                    };
                }
                self.chain.push(head);
                self.latest.insert(hash, step);
            }

            let mut next = NEVER;
            let mut best = f64::INFINITY;
            for nb in g.adj(current) {
                let seen = self.last_visit[nb.vertex];
                if mu > 0 && seen != NEVER && step - seen < mu {
                    continue;
                }
                // Neighbor lists are sorted by id, so strict `<` keeps the smallest id on ties.
                if nb.dist < best {
                    best = nb.dist;
                    next = nb.vertex;
                }
            }
            if next == NEVER {
                break WalkOutcome {
                    transient: step,
                    cycle: 0,
                };
            }
            current = next;
            step += 1;
        };

        for &v in &self.path {
            self.last_visit[v] = NEVER;
        }
        outcome
    }
}

/// One walk with fresh scratch space.
pub fn tourist_walk(g: &ClassNetwork, start: usize, mu: usize) -> WalkOutcome {
    Walker::new().walk(g, start, mu)
}

/// Mean transient and cycle lengths over every vertex of `class`.
pub fn component_stats(g: &ClassNetwork, class: ClassId, mu: usize) -> (f64, f64) {
    let members = g.members(class);
    if members.is_empty() {
        return (0.0, 0.0);
    }
    let mut walker = Walker::new();
    let (mut t, mut c) = (0usize, 0usize);
    for &v in members {
        let o = walker.walk(g, v, mu);
        t += o.transient;
        c += o.cycle;
    }
    let n = members.len() as f64;
    (t as f64 / n, c as f64 / n)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalkProfile {
    pub mean_transient: Vec<f64>,
    pub mean_cycle: Vec<f64>,
}

impl WalkProfile {
    pub fn mu_max(&self) -> usize {
        self.mean_transient.len().saturating_sub(1)
    }

    /// Profile from per-μ sums over `n` walks.
    pub fn from_sums(t_sums: &[usize], c_sums: &[usize], n: usize) -> Self {
        let n = n.max(1) as f64;
        WalkProfile {
            mean_transient: t_sums.iter().map(|&s| s as f64 / n).collect(),
            mean_cycle: c_sums.iter().map(|&s| s as f64 / n).collect(),
        }
    }
}

/// `component_stats` for every `μ` in `0..=mu_max`.
pub fn walk_profile(g: &ClassNetwork, class: ClassId, mu_max: usize) -> WalkProfile {
    let stats: Vec<(f64, f64)> = (0..=mu_max)
        .into_par_iter()
        .map(|mu| component_stats(g, class, mu))
        .collect();
    WalkProfile {
        mean_transient: stats.iter().map(|s| s.0).collect(),
        mean_cycle: stats.iter().map(|s| s.1).collect(),
    }
}

/// Smallest `μ` from which both mean curves stay constant through the end of
/// the profile. `None` when the profile is too short to show a flat tail,
/// i.e. when only the last entry would qualify.
pub fn saturation_point(profile: &WalkProfile) -> Option<usize> {
    let t = &profile.mean_transient;
    let c = &profile.mean_cycle;
    let last = t.len().checked_sub(1)?;
    let mut sat = last;
    while sat > 0 && t[sat - 1] == t[last] && c[sat - 1] == c[last] {
        sat -= 1;
    }
    (sat < last).then_some(sat)
}
