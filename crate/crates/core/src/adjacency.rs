//! Database adjacency induced by a Blowfish policy.
//!
//! Two permissible databases are adjacent when they are *minimally
//! secretly different*: their secret difference is non-empty, and no other
//! permissible database is secretly different from the first one by a
//! strictly smaller secret difference (or by the same secret difference and
//! a strictly smaller total difference).
//!
//! The relation is evaluated from the point of view of a base database. On
//! constrained permissible sets it can be asymmetric; the induced graph
//! keeps a pair when either direction holds and records the asymmetric pairs.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphDocument};
use crate::policy::{BlowfishPolicy, Database, Permissible, SecretGraph, TupleUniverse};

/// One differing record: position `index` (0-based) holds `u` in the first
/// database and `v` in the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DiffTriple {
    pub index: usize,
    pub u: usize,
    pub v: usize,
}

fn check_lengths(a: &Database, b: &Database) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "databases have {} and {} records",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// `tdiff(a, b)`: every position where the databases disagree.
pub fn total_difference(a: &Database, b: &Database) -> Result<BTreeSet<DiffTriple>> {
    check_lengths(a, b)?;
    Ok(a.0
        .iter()
        .zip(&b.0)
        .enumerate()
        .filter(|(_, (u, v))| u != v)
        .map(|(index, (&u, &v))| DiffTriple { index, u, v })
        .collect())
}

/// `sdiff(a, b)`: the part of the total difference whose value pairs are
/// secret edges.
pub fn secret_difference(
    a: &Database,
    b: &Database,
    secrets: &SecretGraph,
) -> Result<BTreeSet<DiffTriple>> {
    Ok(total_difference(a, b)?
        .into_iter()
        .filter(|t| secrets.is_secret(t.u, t.v))
        .collect())
}

/// Definition check for a single ordered pair, straight from the set
/// definitions. `permissible` is scanned in full for intermediates.
pub fn is_adjacent(
    a: &Database,
    b: &Database,
    policy: &BlowfishPolicy,
    permissible: &[Database],
) -> Result<bool> {
    let u = policy.universe();
    for d in [a, b] {
        policy.validate_database(d)?;
        if !permissible.contains(d) {
            return Err(Error::NotPermissible(d.display(u).to_string()));
        }
    }
    let secrets = policy.secret_graph();
    let s_ab = secret_difference(a, b, secrets)?;
    if s_ab.is_empty() {
        return Ok(false);
    }
    let t_ab = total_difference(a, b)?;
    for c in permissible {
        let s_ac = secret_difference(a, c, secrets)?;
        if s_ac.is_empty() {
            continue;
        }
        let smaller_secret = s_ac.is_subset(&s_ab) && s_ac != s_ab;
        let smaller_total = s_ac == s_ab && {
            let t_ac = total_difference(a, c)?;
            t_ac.is_subset(&t_ab) && t_ac != t_ab
        };
        if smaller_secret || smaller_total {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Differences of every database relative to a fixed base, as position
/// lists. Because the base fixes the first component of each triple, a
/// triple set is determined by its positions and the other database's
/// values there.
struct Relative<'a> {
    other: &'a Database,
    total: Vec<usize>,
    secret: Vec<usize>,
}

impl<'a> Relative<'a> {
    fn new(base: &Database, other: &'a Database, secrets: &SecretGraph) -> Self {
        let mut total = Vec::new();
        let mut secret = Vec::new();
        for (p, (&x, &y)) in base.0.iter().zip(&other.0).enumerate() {
            if x != y {
                total.push(p);
                if secrets.is_secret(x, y) {
                    secret.push(p);
                }
            }
        }
        Self {
            other,
            total,
            secret,
        }
    }
}

/// Is the triple set described by `(xs, x)` a subset of `(ys, y)`?
fn triples_subset(xs: &[usize], x: &Database, ys: &[usize], y: &Database) -> bool {
    xs.len() <= ys.len()
        && xs
            .iter()
            .all(|&p| ys.binary_search(&p).is_ok() && x.0[p] == y.0[p])
}

fn triples_equal(xs: &[usize], x: &Database, ys: &[usize], y: &Database) -> bool {
    xs == ys && xs.iter().all(|&p| x.0[p] == y.0[p])
}

/// Directed minimally-secretly-different relation over all ordered pairs,
/// by exhaustive scan of intermediates. Row `a` lists the `b` with
/// `a -> b`.
fn directed_relation(dbs: &[Database], secrets: &SecretGraph) -> Vec<Vec<bool>> {
    let l = dbs.len();
    let mut rel = vec![vec![false; l]; l];
    for (a, base) in dbs.iter().enumerate() {
        let rels: Vec<Relative> = dbs
            .iter()
            .map(|o| Relative::new(base, o, secrets))
            .collect();
        let candidates: Vec<&Relative> = rels.iter().filter(|r| !r.secret.is_empty()).collect();
        for (b, target) in rels.iter().enumerate() {
            if target.secret.is_empty() {
                continue;
            }
            let blocked = candidates.iter().any(|c| {
                if triples_equal(&c.secret, c.other, &target.secret, target.other) {
                    triples_subset(&c.total, c.other, &target.total, target.other)
                        && !triples_equal(&c.total, c.other, &target.total, target.other)
                } else {
                    triples_subset(&c.secret, c.other, &target.secret, target.other)
                }
            });
            rel[a][b] = !blocked;
        }
    }
    rel
}

/// Graph on the permissible databases of a policy.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyGraph {
    pub vertices: Vec<Database>,
    pub graph: Graph,
    /// Pairs `(i, j)`, `i < j`, where only one direction of the definition
    /// holds. Such pairs are still edges of `graph`.
    pub asymmetric_pairs: Vec<(usize, usize)>,
}

impl AdjacencyGraph {
    pub fn index_of(&self, db: &Database) -> Option<usize> {
        self.vertices.binary_search(db).ok()
    }

    pub fn to_document(&self, universe: &TupleUniverse) -> AdjacencyDocument {
        AdjacencyDocument {
            vertices: self.vertices.iter().map(|d| d.labels(universe)).collect(),
            edges: self.graph.edges().map(|(u, v)| [u, v]).collect(),
            asymmetric_pairs: self.asymmetric_pairs.iter().map(|&(u, v)| [u, v]).collect(),
        }
    }
}

/// JSON form of an adjacency graph. Vertex order is canonical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdjacencyDocument {
    pub vertices: Vec<Vec<String>>,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub asymmetric_pairs: Vec<[usize; 2]>,
}

impl AdjacencyDocument {
    pub fn to_graph(&self) -> Result<Graph> {
        GraphDocument {
            vertices: Some(self.vertices.clone()),
            edges: self.edges.clone(),
            vertex_count: None,
        }
        .to_graph()
    }
}

/// Induces the adjacency graph, using the single-record fast path when
/// every database is permissible and the exhaustive definition otherwise.
pub fn induce_adjacency_graph(policy: &BlowfishPolicy, cap: usize) -> Result<AdjacencyGraph> {
    match policy.permissible() {
        Permissible::All => induce_unconstrained(policy, cap),
        Permissible::Explicit(_) => induce_brute_force(policy, cap),
    }
}

/// Exhaustive evaluation of the definition over every ordered pair and
/// every intermediate. Cubic in `|I|`.
pub fn induce_brute_force(policy: &BlowfishPolicy, cap: usize) -> Result<AdjacencyGraph> {
    let vertices = policy.enumerate_permissible(cap)?;
    let rel = directed_relation(&vertices, policy.secret_graph());
    let l = vertices.len();
    let mut edges = Vec::new();
    let mut asymmetric_pairs = Vec::new();
    for (a, row) in rel.iter().enumerate() {
        for b in (a + 1)..l {
            let (forward, backward) = (row[b], rel[b][a]);
            if forward || backward {
                edges.push((a, b));
            }
            if forward != backward {
                asymmetric_pairs.push((a, b));
            }
        }
    }
    Ok(AdjacencyGraph {
        graph: Graph::from_edges(l, edges)?,
        vertices,
        asymmetric_pairs,
    })
}

/// With `I = T^n` two databases are adjacent iff they differ in exactly one
/// record and that record's value pair is secret.
fn induce_unconstrained(policy: &BlowfishPolicy, cap: usize) -> Result<AdjacencyGraph> {
    let vertices = policy.enumerate_permissible(cap)?;
    let secrets = policy.secret_graph().to_graph();
    let m = policy.universe().len();
    let n = policy.n();
    // stride of record p in the lexicographic index
    let strides: Vec<usize> = (0..n).map(|p| m.pow((n - 1 - p) as u32)).collect();
    let mut edges = Vec::new();
    for (a, db) in vertices.iter().enumerate() {
        for (p, &t) in db.0.iter().enumerate() {
            for &w in secrets.neighbours(t) {
                if w > t {
                    edges.push((a, a + (w - t) * strides[p]));
                }
            }
        }
    }
    Ok(AdjacencyGraph {
        graph: Graph::from_edges(vertices.len(), edges)?,
        vertices,
        asymmetric_pairs: Vec::new(),
    })
}

/// Policy whose induced adjacency graph is `graph` itself: tuples are the
/// vertices (labelled `"0"`, `"1"`, ...), secrets are its edges, and every
/// single-record database is permissible.
pub fn embed_graph_as_policy(graph: &Graph) -> Result<BlowfishPolicy> {
    if graph.vertex_count() == 0 {
        return Err(Error::InvalidGraph(
            "cannot embed a graph with no vertices".into(),
        ));
    }
    let universe = TupleUniverse::new((0..graph.vertex_count()).map(|i| i.to_string()).collect())?;
    let secrets = SecretGraph::from_index_edges(universe, graph.edges())?;
    BlowfishPolicy::new(secrets, 1, Permissible::All)
}
