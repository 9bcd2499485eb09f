//! Undirected class network: vertices are instances, each carrying a class
//! label and its feature vector. Edge lengths are cached so walks never touch
//! feature space.

use std::fmt::Write as _;
use std::ops::Deref;

use crate::dataset::{ClassId, LabeledDataset, Metric};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub vertex: usize,
    pub dist: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassNetwork {
    /// Sorted ascending by neighbor id.
    adjacency: Vec<Vec<Neighbor>>,
    vertex_class: Vec<ClassId>,
    payloads: Vec<f64>,
    dim: usize,
    metric: Metric,
    class_names: Vec<String>,
    members: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Components {
    /// Component id per vertex; ids are numbered in order of each
    /// component's smallest vertex.
    pub of: Vec<usize>,
    pub count: usize,
}

impl ClassNetwork {
    /// Edgeless network with one vertex per dataset row.
    pub fn from_dataset(ds: &LabeledDataset) -> Self {
        let mut g = ClassNetwork {
            adjacency: Vec::with_capacity(ds.len()),
            vertex_class: Vec::with_capacity(ds.len()),
            payloads: Vec::with_capacity(ds.len() * ds.dim()),
            dim: ds.dim(),
            metric: ds.metric(),
            class_names: ds.class_names().to_vec(),
            members: vec![Vec::new(); ds.class_count()],
        };
        for (i, row) in ds.rows().enumerate() {
            g.push_vertex(row, ds.label(i));
        }
        g
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn class_count(&self) -> usize {
        self.members.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn class_of(&self, v: usize) -> ClassId {
        self.vertex_class[v]
    }

    /// Vertices of `class`, ascending.
    pub fn members(&self, class: ClassId) -> &[usize] {
        &self.members[class.0]
    }

    pub fn payload(&self, v: usize) -> &[f64] {
        &self.payloads[v * self.dim..(v + 1) * self.dim]
    }

    pub fn neighbors(&self, v: usize) -> Result<&[Neighbor]> {
        self.adjacency
            .get(v)
            .map(Vec::as_slice)
            .ok_or(Error::VertexOutOfRange {
                vertex: v,
                len: self.vertex_count(),
            })
    }

    #[inline]
    pub(crate) fn adj(&self, v: usize) -> &[Neighbor] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency
            .get(u)
            .is_some_and(|a| a.binary_search_by_key(&v, |n| n.vertex).is_ok())
    }

    pub fn distance(&self, u: usize, v: usize) -> f64 {
        self.metric.dist(self.payload(u), self.payload(v))
    }

    pub fn distance_to(&self, x: &[f64], v: usize) -> f64 {
        self.metric.dist(x, self.payload(v))
    }

    pub fn push_vertex(&mut self, payload: &[f64], class: ClassId) -> usize {
        assert_eq!(payload.len(), self.dim, "payload dimension");
        let id = self.adjacency.len();
        self.adjacency.push(Vec::new());
        self.vertex_class.push(class);
        self.payloads.extend_from_slice(payload);
        if self.members.len() <= class.0 {
            self.members.resize(class.0 + 1, Vec::new());
        }
        self.members[class.0].push(id);
        id
    }

    /// Adds the undirected edge `{u, v}`. Self-loops and duplicates are
    /// ignored; returns whether the edge was new.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<bool> {
        let n = self.vertex_count();
        for w in [u, v] {
            if w >= n {
                return Err(Error::VertexOutOfRange { vertex: w, len: n });
            }
        }
        if u == v || self.has_edge(u, v) {
            return Ok(false);
        }
        let dist = self.distance(u, v);
        insert_sorted(&mut self.adjacency[u], Neighbor { vertex: v, dist });
        insert_sorted(&mut self.adjacency[v], Neighbor { vertex: u, dist });
        Ok(true)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, adj)| {
            adj.iter()
                .filter(move |n| n.vertex > u)
                .map(move |n| (u, n.vertex))
        })
    }

    pub fn connected_components(&self) -> Components {
        let n = self.vertex_count();
        let mut of = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for root in 0..n {
            if of[root] != usize::MAX {
                continue;
            }
            of[root] = count;
            stack.push(root);
            while let Some(v) = stack.pop() {
                for nb in &self.adjacency[v] {
                    if of[nb.vertex] == usize::MAX {
                        of[nb.vertex] = count;
                        stack.push(nb.vertex);
                    }
                }
            }
            count += 1;
        }
        Components { of, count }
    }

    /// Temporarily adds a vertex of class `class` joined to `edges`. The
    /// returned guard derefs to the modified network; dropping it restores
    /// the prior state exactly.
    pub fn scoped_insert(
        &mut self,
        payload: &[f64],
        class: ClassId,
        edges: &[usize],
    ) -> Result<ScopedInsert<'_>> {
        if payload.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: payload.len(),
            });
        }
        let n = self.vertex_count();
        if let Some(&bad) = edges.iter().find(|&&v| v >= n) {
            return Err(Error::VertexOutOfRange { vertex: bad, len: n });
        }
        let mut targets = edges.to_vec();
        targets.sort_unstable();
        targets.dedup();

        let id = self.push_vertex(payload, class);
        let mut own = Vec::with_capacity(targets.len());
        for &v in &targets {
            let dist = self.metric.dist(payload, self.payload(v));
            // `id` exceeds every existing id, so it lands at the end.
            self.adjacency[v].push(Neighbor { vertex: id, dist });
            own.push(Neighbor { vertex: v, dist });
        }
        self.adjacency[id] = own;
        Ok(ScopedInsert {
            graph: self,
            vertex: id,
            targets,
        })
    }

    fn pop_vertex(&mut self, id: usize, targets: &[usize]) {
        debug_assert_eq!(id + 1, self.vertex_count());
        for &v in targets {
            let last = self.adjacency[v].pop();
            debug_assert_eq!(last.map(|n| n.vertex), Some(id));
        }
        self.adjacency.pop();
        let class = self.vertex_class.pop().expect("vertex to pop");
        self.payloads.truncate(id * self.dim);
        self.members[class.0].pop();
    }

    /// Edge-list dump: `V <count>`, then `E u v` per edge, then `C v label`.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        writeln!(out, "V {}", self.vertex_count()).unwrap();
        for (u, v) in self.edges() {
            writeln!(out, "E {u} {v}").unwrap();
        }
        for v in 0..self.vertex_count() {
            writeln!(out, "C {v} {}", self.class_names[self.vertex_class[v].0]).unwrap();
        }
        out
    }

    /// Rebuilds a network from an edge-list dump, taking vertex payloads from
    /// `ds` (row `v` is vertex `v`). Labels in the dump must match `ds`.
    pub fn from_edge_list(text: &str, ds: &LabeledDataset) -> Result<Self> {
        let dump = EdgeList::parse(text)?;
        if dump.vertex_count != ds.len() {
            return Err(Error::GraphDump {
                line: 1,
                message: format!(
                    "dump has {} vertices but the dataset has {} rows",
                    dump.vertex_count,
                    ds.len()
                ),
            });
        }
        for (line, v, label) in &dump.classes {
            if ds.class_name(ds.label(*v)) != label {
                return Err(Error::GraphDump {
                    line: *line,
                    message: format!("vertex {v} labelled `{label}` but the dataset says `{}`", ds.class_name(ds.label(*v))),
                });
            }
        }
        let mut g = ClassNetwork::from_dataset(ds);
        for (u, v) in dump.edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }
}

fn insert_sorted(list: &mut Vec<Neighbor>, nb: Neighbor) {
    let pos = list.partition_point(|n| n.vertex < nb.vertex);
    list.insert(pos, nb);
}

/// Parsed edge-list dump, independent of any payloads.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EdgeList {
    pub vertex_count: usize,
    pub edges: Vec<(usize, usize)>,
    /// `(line, vertex, label)`.
    pub classes: Vec<(usize, usize, String)>,
}

impl EdgeList {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = EdgeList::default();
        let mut saw_header = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            let err = |message: &str| Error::GraphDump {
                line,
                message: message.to_string(),
            };
            let mut parts = raw.splitn(3, char::is_whitespace);
            let tag = parts.next().unwrap_or_default();
            let num = |s: Option<&str>| -> Result<usize> {
                s.and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| err("expected a vertex id"))
            };
            match tag {
                "V" => {
                    out.vertex_count = num(parts.next())?;
                    saw_header = true;
                }
                "E" | "C" if !saw_header => return Err(err("record before `V` header")),
                "E" => {
                    let u = num(parts.next())?;
                    let v = num(parts.next())?;
                    if u >= out.vertex_count || v >= out.vertex_count {
                        return Err(err("edge endpoint out of range"));
                    }
                    out.edges.push((u, v));
                }
                "C" => {
                    let v = num(parts.next())?;
                    if v >= out.vertex_count {
                        return Err(err("vertex out of range"));
                    }
                    let label = parts.next().map(str::trim).unwrap_or_default();
                    if label.is_empty() {
                        return Err(err("missing label"));
                    }
                    out.classes.push((line, v, label.to_string()));
                }
                _ => return Err(err("unknown record tag")),
            }
        }
        if !saw_header {
            return Err(Error::GraphDump {
                line: 0,
                message: "missing `V` header".into(),
            });
        }
        Ok(out)
    }

    pub fn component_count(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.vertex_count).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut count = self.vertex_count;
        for &(u, v) in &self.edges {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            if a != b {
                parent[a] = b;
                count -= 1;
            }
        }
        count
    }
}

pub struct ScopedInsert<'g> {
    graph: &'g mut ClassNetwork,
    vertex: usize,
    targets: Vec<usize>,
}

impl ScopedInsert<'_> {
    /// Id of the inserted vertex.
    pub fn vertex(&self) -> usize {
        self.vertex
    }

    pub fn release(self) {}
}

impl Deref for ScopedInsert<'_> {
    type Target = ClassNetwork;

    fn deref(&self) -> &ClassNetwork {
        self.graph
    }
}

impl Drop for ScopedInsert<'_> {
    fn drop(&mut self) {
        self.graph.pop_vertex(self.vertex, &self.targets);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::class_names_from;

    fn line_graph(n: usize) -> ClassNetwork {
        let rows = (0..n).map(|i| vec![i as f64]).collect();
        let ds = LabeledDataset::from_rows(rows, vec![ClassId(0); n], class_names_from(["a"])).unwrap();
        ClassNetwork::from_dataset(&ds)
    }

    fn assert_symmetric(g: &ClassNetwork) {
        for v in 0..g.vertex_count() {
            let adj = g.neighbors(v).unwrap();
            assert!(adj.windows(2).all(|w| w[0].vertex < w[1].vertex));
            for nb in adj {
                assert_ne!(nb.vertex, v);
                assert!(g.has_edge(nb.vertex, v));
            }
        }
    }

    #[test]
    fn isolated_vertex_has_no_neighbors() {
        let g = line_graph(3);
        assert!(g.neighbors(1).unwrap().is_empty());
        assert!(matches!(g.neighbors(3), Err(Error::VertexOutOfRange { .. })));
    }

    #[test]
    fn triangle_degrees_and_symmetry() {
        let mut g = line_graph(3);
        g.add_edge(0, 1).unwrap();
        g.add_edge(1, 2).unwrap();
        g.add_edge(2, 0).unwrap();
        assert!(!g.add_edge(1, 0).unwrap());
        assert!(!g.add_edge(1, 1).unwrap());
        for v in 0..3 {
            assert_eq!(g.neighbors(v).unwrap().len(), 2);
        }
        assert_symmetric(&g);
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn components() {
        let g = line_graph(4);
        assert_eq!(g.connected_components().count, 4);

        let mut path = line_graph(4);
        for i in 0..3 {
            path.add_edge(i, i + 1).unwrap();
        }
        assert_eq!(path.connected_components().count, 1);

        let mut two = line_graph(6);
        for (u, v) in [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)] {
            two.add_edge(u, v).unwrap();
        }
        let c = two.connected_components();
        assert_eq!(c.count, 2);
        assert_eq!(c.of, vec![0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn scoped_insert_is_an_exact_rollback() {
        let mut g = line_graph(4);
        g.add_edge(0, 1).unwrap();
        g.add_edge(2, 3).unwrap();
        let before = g.clone();
        {
            let s = g.scoped_insert(&[1.5], ClassId(0), &[1, 2]).unwrap();
            assert_eq!(s.vertex_count(), 5);
            assert_eq!(s.degree(s.vertex()), 2);
            assert!(s.has_edge(1, 4) && s.has_edge(4, 2));
            assert_symmetric(&s);
        }
        assert_eq!(g, before);
    }

    #[test]
    fn sequential_scoped_inserts_commute() {
        let mut g = line_graph(4);
        g.add_edge(0, 1).unwrap();
        let degrees = |g: &mut ClassNetwork, p: f64, e: &[usize]| {
            let s = g.scoped_insert(&[p], ClassId(0), e).unwrap();
            (0..s.vertex_count()).map(|v| s.degree(v)).collect::<Vec<_>>()
        };
        let a1 = degrees(&mut g, 0.5, &[0, 1]);
        let b1 = degrees(&mut g, 2.5, &[2, 3]);
        let b2 = degrees(&mut g, 2.5, &[2, 3]);
        let a2 = degrees(&mut g, 0.5, &[0, 1]);
        assert_eq!((a1, b1), (a2, b2));
    }

    #[test]
    fn edge_list_round_trip() {
        let rows = (0..4).map(|i| vec![i as f64]).collect();
        let ds = LabeledDataset::from_rows(
            rows,
            vec![ClassId(0), ClassId(0), ClassId(1), ClassId(1)],
            class_names_from(["red", "blue"]),
        )
        .unwrap();
        let mut g = ClassNetwork::from_dataset(&ds);
        g.add_edge(0, 1).unwrap();
        g.add_edge(2, 3).unwrap();
        let text = g.to_edge_list();
        assert!(text.starts_with("V 4\nE 0 1\nE 2 3\nC 0 red\n"));
        let parsed = EdgeList::parse(&text).unwrap();
        assert_eq!(parsed.component_count(), 2);
        assert_eq!(ClassNetwork::from_edge_list(&text, &ds).unwrap(), g);
    }

    #[test]
    fn edge_list_errors_carry_line_numbers() {
        let e = EdgeList::parse("V 2\nE 0 5\n").unwrap_err();
        assert!(matches!(e, Error::GraphDump { line: 2, .. }));
        assert!(EdgeList::parse("E 0 1\n").is_err());
        assert!(EdgeList::parse("V 2\nX 1\n").is_err());
    }
}
