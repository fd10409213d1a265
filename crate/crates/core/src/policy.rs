//! Tuple universes, secret graphs and Blowfish policies.
//!
//! A policy pairs a secret graph over tuple values with a record count `n`
//! and a set of permissible databases. Databases are stored as sequences of
//! tuple indices; the canonical database order used everywhere downstream is
//! lexicographic over those indices.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// The ordered set of values a single record may take.
#[derive(Debug, Clone, PartialEq)]
pub struct TupleUniverse {
    labels: Vec<String>,
    values: Option<Vec<f64>>,
    index: HashMap<String, usize>,
}

impl TupleUniverse {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        Self::build(labels, None)
    }

    pub fn with_values(labels: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != labels.len() {
            return Err(Error::InvalidPolicy(format!(
                "{} values supplied for {} tuples",
                values.len(),
                labels.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidPolicy(format!("non-finite tuple value {v}")));
        }
        Self::build(labels, Some(values))
    }

    /// Numeric universe whose labels are the decimal rendering of each value.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let labels = values.iter().map(|v| format!("{v}")).collect();
        Self::with_values(labels, values.to_vec())
    }

    /// Universe labelled `"1"..="m"`.
    pub fn numbered(m: usize) -> Result<Self> {
        Self::new((1..=m).map(|i| i.to_string()).collect())
    }

    fn build(labels: Vec<String>, values: Option<Vec<f64>>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidPolicy("tuple universe is empty".into()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(Error::InvalidPolicy(format!(
                    "duplicate tuple label `{label}`"
                )));
            }
        }
        Ok(Self {
            labels,
            values,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn values(&self) -> Option<&[f64]> {
        self.values.as_deref()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }
}

/// Simple undirected graph over a tuple universe. Edges mark value pairs
/// that must stay indistinguishable.
#[derive(Debug, Clone, PartialEq)]
pub struct SecretGraph {
    universe: TupleUniverse,
    edges: BTreeSet<(usize, usize)>,
}

impl SecretGraph {
    pub fn new<I, S>(universe: TupleUniverse, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            let (a, b) = (a.as_ref(), b.as_ref());
            let u = universe.index_of(a)?;
            let v = universe.index_of(b)?;
            if u == v {
                return Err(Error::InvalidEdge(a.into(), b.into(), "self-loop"));
            }
            if !set.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidEdge(a.into(), b.into(), "duplicate edge"));
            }
        }
        Ok(Self {
            universe,
            edges: set,
        })
    }

    /// Builds from index pairs, silently merging duplicates. Used by the
    /// constructors below where duplicates cannot arise from user input.
    pub fn from_index_edges<I>(universe: TupleUniverse, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let m = universe.len();
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= m || v >= m {
                return Err(Error::InvalidPolicy(format!(
                    "edge ({u}, {v}) out of range for {m} tuples"
                )));
            }
            if u == v {
                let l = universe.label(u).to_string();
                return Err(Error::InvalidEdge(l.clone(), l, "self-loop"));
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(Self {
            universe,
            edges: set,
        })
    }

    pub fn universe(&self) -> &TupleUniverse {
        &self.universe
    }

    /// Edges as index pairs `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_secret(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn to_graph(&self) -> Graph {
        Graph::from_edges(self.universe.len(), self.edges.iter().copied())
            .expect("secret graph edges are validated on construction")
    }
}

/// A database of `n` records, each a tuple index into the universe.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Database(pub Vec<usize>);

impl Database {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn from_labels<S: AsRef<str>>(universe: &TupleUniverse, labels: &[S]) -> Result<Self> {
        labels
            .iter()
            .map(|l| universe.index_of(l.as_ref()))
            .collect::<Result<Vec<_>>>()
            .map(Database)
    }

    pub fn labels(&self, universe: &TupleUniverse) -> Vec<String> {
        self.0
            .iter()
            .map(|&i| universe.label(i).to_string())
            .collect()
    }

    pub fn display<'a>(&'a self, universe: &'a TupleUniverse) -> DisplayDatabase<'a> {
        DisplayDatabase { db: self, universe }
    }
}

pub struct DisplayDatabase<'a> {
    db: &'a Database,
    universe: &'a TupleUniverse,
}

impl fmt::Display for DisplayDatabase<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, &i) in self.db.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", self.universe.label(i))?;
        }
        write!(f, ")")
    }
}

/// The permissible database set.
#[derive(Debug, Clone, PartialEq)]
pub enum Permissible {
    /// Every database in `T^n`.
    All,
    /// An explicit list, kept sorted in canonical order and duplicate-free.
    Explicit(Vec<Database>),
}

/// Permissible set described by labels, before a universe is fixed.
#[derive(Debug, Clone, PartialEq)]
pub enum PermissibleSpec {
    All,
    Explicit(Vec<Vec<String>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowfishPolicy {
    secret_graph: SecretGraph,
    n: usize,
    permissible: Permissible,
}

impl BlowfishPolicy {
    pub fn new(secret_graph: SecretGraph, n: usize, permissible: Permissible) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPolicy(
                "record count n must be positive".into(),
            ));
        }
        let permissible = match permissible {
            Permissible::All => Permissible::All,
            Permissible::Explicit(mut dbs) => {
                if dbs.is_empty() {
                    return Err(Error::InvalidPolicy(
                        "explicit permissible set is empty".into(),
                    ));
                }
                let m = secret_graph.universe().len();
                for db in &dbs {
                    if db.len() != n {
                        return Err(Error::InvalidDatabase(format!(
                            "database has {} records, policy expects n = {n}",
                            db.len()
                        )));
                    }
                    if db.0.iter().any(|&t| t >= m) {
                        return Err(Error::InvalidDatabase(format!(
                            "tuple index out of range in {:?}",
                            db.0
                        )));
                    }
                }
                dbs.sort();
                if let Some(w) = dbs.windows(2).find(|w| w[0] == w[1]) {
                    return Err(Error::InvalidDatabase(format!(
                        "duplicate permissible database {}",
                        w[0].display(secret_graph.universe())
                    )));
                }
                Permissible::Explicit(dbs)
            }
        };
        Ok(Self {
            secret_graph,
            n,
            permissible,
        })
    }

    pub fn from_spec(secret_graph: SecretGraph, n: usize, spec: PermissibleSpec) -> Result<Self> {
        let permissible = match spec {
            PermissibleSpec::All => Permissible::All,
            PermissibleSpec::Explicit(rows) => Permissible::Explicit(
                rows.iter()
                    .map(|r| Database::from_labels(secret_graph.universe(), r))
                    .collect::<Result<_>>()?,
            ),
        };
        Self::new(secret_graph, n, permissible)
    }

    pub fn secret_graph(&self) -> &SecretGraph {
        &self.secret_graph
    }

    pub fn universe(&self) -> &TupleUniverse {
        self.secret_graph.universe()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn permissible(&self) -> &Permissible {
        &self.permissible
    }

    pub fn is_unconstrained(&self) -> bool {
        matches!(self.permissible, Permissible::All)
    }

    /// `|I|`, or `None` if it does not fit in a `u128`.
    pub fn permissible_count(&self) -> Option<u128> {
        match &self.permissible {
            Permissible::All => (self.universe().len() as u128).checked_pow(self.n as u32),
            Permissible::Explicit(dbs) => Some(dbs.len() as u128),
        }
    }

    /// Materialises the permissible set in canonical order.
    pub fn enumerate_permissible(&self, cap: usize) -> Result<Vec<Database>> {
        match &self.permissible {
            Permissible::Explicit(dbs) => {
                if dbs.len() > cap {
                    return Err(Error::size_limit("permissible set", dbs.len(), cap as u128));
                }
                Ok(dbs.clone())
            }
            Permissible::All => {
                let m = self.universe().len();
                let size = match self.permissible_count() {
                    Some(s) if s <= cap as u128 => s as usize,
                    _ => {
                        return Err(Error::size_limit(
                            "permissible set |T|^n",
                            format!("{m}^{} = {}", self.n, approx_pow(m, self.n)),
                            cap as u128,
                        ))
                    }
                };
                let mut out = Vec::with_capacity(size);
                let mut cur = vec![0usize; self.n];
                loop {
                    out.push(Database(cur.clone()));
                    // odometer increment, last position fastest
                    let mut pos = self.n;
                    loop {
                        if pos == 0 {
                            return Ok(out);
                        }
                        pos -= 1;
                        cur[pos] += 1;
                        if cur[pos] < m {
                            break;
                        }
                        cur[pos] = 0;
                    }
                }
            }
        }
    }

    pub fn validate_database(&self, db: &Database) -> Result<()> {
        if db.len() != self.n {
            return Err(Error::InvalidDatabase(format!(
                "database has {} records, policy expects n = {}",
                db.len(),
                self.n
            )));
        }
        let m = self.universe().len();
        if db.0.iter().any(|&t| t >= m) {
            return Err(Error::InvalidDatabase(format!(
                "tuple index out of range in {:?}",
                db.0
            )));
        }
        Ok(())
    }

    pub fn to_document(&self) -> PolicyDocument {
        let u = self.universe();
        PolicyDocument {
            tuples: u.labels().to_vec(),
            values: u.values().map(<[f64]>::to_vec),
            secret_edges: self
                .secret_graph
                .edges()
                .map(|(a, b)| [u.label(a).to_string(), u.label(b).to_string()])
                .collect(),
            n: self.n,
            permissible: match &self.permissible {
                Permissible::All => PermissibleDoc::Keyword("all".into()),
                Permissible::Explicit(dbs) => {
                    PermissibleDoc::Databases(dbs.iter().map(|d| d.labels(u)).collect())
                }
            },
        }
    }

    pub fn from_document(doc: PolicyDocument) -> Result<Self> {
        let universe = match doc.values {
            Some(values) => TupleUniverse::with_values(doc.tuples, values)?,
            None => TupleUniverse::new(doc.tuples)?,
        };
        let secret_graph = SecretGraph::new(
            universe,
            doc.secret_edges
                .iter()
                .map(|[a, b]| (a.as_str(), b.as_str())),
        )?;
        let spec = match doc.permissible {
            PermissibleDoc::Keyword(k) if k == "all" => PermissibleSpec::All,
            PermissibleDoc::Keyword(k) => {
                return Err(Error::Malformed(format!(
                    "`permissible` must be \"all\" or a list of databases, got \"{k}\""
                )))
            }
            PermissibleDoc::Databases(rows) => {
                if let Some(r) = rows.iter().find(|r| r.len() != doc.n) {
                    return Err(Error::InvalidDatabase(format!(
                        "database {r:?} has {} records, policy expects n = {}",
                        r.len(),
                        doc.n
                    )));
                }
                PermissibleSpec::Explicit(rows)
            }
        };
        Self::from_spec(secret_graph, doc.n, spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("policy document serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PolicyDocument =
            serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        Self::from_document(doc)
    }
}

fn approx_pow(base: usize, exp: usize) -> String {
    match (base as u128).checked_pow(exp as u32) {
        Some(v) => v.to_string(),
        None => format!("{:e}", (base as f64).powi(exp as i32)),
    }
}

/// On-disk policy format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyDocument {
    pub tuples: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    pub secret_edges: Vec<[String; 2]>,
    pub n: usize,
    pub permissible: PermissibleDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PermissibleDoc {
    Keyword(String),
    Databases(Vec<Vec<String>>),
}

/// The named policy families.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyKind {
    /// Values within `theta` of each other are secret pairs.
    DistanceThreshold { values: Vec<f64>, theta: f64 },
    /// Tuples `1..=m`, consecutive indices (mod `m`) are secret pairs.
    Cycle { m: usize },
    /// Tuples `1..=m`, every distinct pair is secret.
    Complete { m: usize },
    Custom {
        labels: Vec<String>,
        values: Option<Vec<f64>>,
        edges: Vec<(String, String)>,
    },
}

impl PolicyKind {
    pub fn secret_graph(&self) -> Result<SecretGraph> {
        match self {
            PolicyKind::DistanceThreshold { values, theta } => {
                if !theta.is_finite() || *theta < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "distance threshold must be a finite non-negative number, got {theta}"
                    )));
                }
                let universe = TupleUniverse::from_values(values)?;
                let edges = (0..values.len()).flat_map(|u| {
                    ((u + 1)..values.len())
                        .filter(move |&v| (values[u] - values[v]).abs() <= *theta)
                        .map(move |v| (u, v))
                });
                SecretGraph::from_index_edges(universe, edges.collect::<Vec<_>>())
            }
            PolicyKind::Cycle { m } => {
                if *m < 3 {
                    return Err(Error::InvalidParameter(format!(
                        "cycle secrets need at least 3 tuples, got {m}"
                    )));
                }
                let universe = TupleUniverse::numbered(*m)?;
                SecretGraph::from_index_edges(universe, (0..*m).map(|i| (i, (i + 1) % m)))
            }
            PolicyKind::Complete { m } => {
                let universe = TupleUniverse::numbered(*m)?;
                let edges = (0..*m).flat_map(|u| ((u + 1)..*m).map(move |v| (u, v)));
                SecretGraph::from_index_edges(universe, edges.collect::<Vec<_>>())
            }
            PolicyKind::Custom {
                labels,
                values,
                edges,
            } => {
                let universe = match values {
                    Some(v) => TupleUniverse::with_values(labels.clone(), v.clone())?,
                    None => TupleUniverse::new(labels.clone())?,
                };
                SecretGraph::new(
                    universe,
                    edges.iter().map(|(a, b)| (a.as_str(), b.as_str())),
                )
            }
        }
    }
}

/// Builds one of the named policies with record count `n`.
pub fn build_policy(
    kind: &PolicyKind,
    n: usize,
    permissible: PermissibleSpec,
) -> Result<BlowfishPolicy> {
    BlowfishPolicy::from_spec(kind.secret_graph()?, n, permissible)
}
