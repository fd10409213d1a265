//! Simple undirected graphs on `0..vertex_count` with breadth-first
//! distances, connected components and component diameters.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Graph {
    pub fn empty(vertex_count: usize) -> Self {
        Self {
            adjacency: vec![Vec::new(); vertex_count],
            edge_count: 0,
        }
    }

    /// Builds a simple graph. Self-loops and out-of-range endpoints are
    /// rejected; repeated edges are merged.
    pub fn from_edges<I>(vertex_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= vertex_count || v >= vertex_count {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) out of range for {vertex_count} vertices"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        let mut adjacency = vec![Vec::new(); vertex_count];
        for &(u, v) in &set {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self {
            adjacency,
            edge_count: set.len(),
        })
    }

    pub fn complete(k: usize) -> Self {
        Self::from_edges(k, (0..k).flat_map(|u| ((u + 1)..k).map(move |v| (u, v))))
            .expect("complete graph is simple")
    }

    pub fn path(k: usize) -> Self {
        Self::from_edges(k, (1..k).map(|v| (v - 1, v))).expect("path graph is simple")
    }

    pub fn cycle(k: usize) -> Result<Self> {
        if k < 3 {
            return Err(Error::InvalidGraph(format!(
                "cycle needs at least 3 vertices, got {k}"
            )));
        }
        Self::from_edges(k, (0..k).map(|v| (v, (v + 1) % k)))
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn edge_set(&self) -> BTreeSet<(usize, usize)> {
        self.edges().collect()
    }

    /// Hop counts from `source`; `None` marks unreachable vertices.
    pub fn bfs(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.vertex_count()];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &v in &self.adjacency[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn distances(&self) -> DistanceMatrix {
        let n = self.vertex_count();
        let mut data = Vec::with_capacity(n * n);
        for s in 0..n {
            data.extend(self.bfs(s));
        }
        DistanceMatrix { n, data }
    }

    pub fn components(&self) -> Components {
        let n = self.vertex_count();
        let mut assignment = vec![usize::MAX; n];
        let mut members: Vec<Vec<usize>> = Vec::new();
        for s in 0..n {
            if assignment[s] != usize::MAX {
                continue;
            }
            let id = members.len();
            let mut comp = vec![s];
            assignment[s] = id;
            let mut head = 0;
            while head < comp.len() {
                let u = comp[head];
                head += 1;
                for &v in &self.adjacency[u] {
                    if assignment[v] == usize::MAX {
                        assignment[v] = id;
                        comp.push(v);
                    }
                }
            }
            comp.sort_unstable();
            members.push(comp);
        }
        let diameters = members
            .iter()
            .map(|comp| {
                comp.iter()
                    .map(|&s| self.bfs(s).into_iter().flatten().max().unwrap_or(0))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        Components {
            assignment,
            members,
            diameters,
        }
    }

    pub fn is_connected(&self) -> bool {
        self.components().count() <= 1
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            vertices: None,
            edges: self.edges().map(|(u, v)| [u, v]).collect(),
            vertex_count: Some(self.vertex_count()),
        }
    }
}

/// All-pairs hop counts.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<Option<usize>>,
}

impl DistanceMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<usize> {
        self.data[i * self.n + j]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Largest finite distance.
    pub fn max_finite(&self) -> usize {
        self.data.iter().flatten().copied().max().unwrap_or(0)
    }
}

/// Connected components with per-component diameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Components {
    pub assignment: Vec<usize>,
    pub members: Vec<Vec<usize>>,
    pub diameters: Vec<usize>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.members.len()
    }

    pub fn max_diameter(&self) -> usize {
        self.diameters.iter().copied().max().unwrap_or(0)
    }
}

/// JSON form of a graph: `{"vertices": [...], "edges": [[0,1], ...]}`.
///
/// `vertices` carries one label sequence per vertex for database adjacency
/// graphs; plain graphs may instead give `vertex_count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<Vec<String>>>,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex_count: Option<usize>,
}

impl GraphDocument {
    pub fn to_graph(&self) -> Result<Graph> {
        let n = match (&self.vertices, self.vertex_count) {
            (Some(v), None) => v.len(),
            (None, Some(n)) => n,
            (Some(v), Some(n)) if v.len() == n => n,
            (Some(v), Some(n)) => {
                return Err(Error::Malformed(format!(
                    "graph lists {} vertices but vertex_count is {n}",
                    v.len()
                )))
            }
            (None, None) => {
                return Err(Error::Malformed(
                    "graph needs `vertices` or `vertex_count`".into(),
                ))
            }
        };
        Graph::from_edges(n, self.edges.iter().map(|&[u, v]| (u, v)))
    }
}
