//! Permutation groups stored by explicit element enumeration.
//!
//! Composition convention, used throughout the crate:
//! `(a.compose(b))(i) == a.apply(b.apply(i))`, i.e. `b` acts first.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use crate::adjacency::AdjacencyGraph;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::policy::{BlowfishPolicy, Database, Permissible};

pub const DEFAULT_GROUP_CAP: usize = 100_000;
pub const DEFAULT_VERTEX_CAP: usize = 16;

/// A bijection on `0..degree`, stored as its image vector.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation{:?}", self.0)
    }
}

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let n = image.len();
        let mut seen = vec![false; n];
        for &x in &image {
            if x >= n || std::mem::replace(&mut seen[x], true) {
                return Err(Error::InvalidPermutation(format!(
                    "{image:?} is not a bijection"
                )));
            }
        }
        Ok(Self(image))
    }

    pub fn identity(degree: usize) -> Self {
        Self((0..degree).collect())
    }

    /// Product of disjoint or overlapping cycles, applied right to left.
    pub fn from_cycles(degree: usize, cycles: &[&[usize]]) -> Result<Self> {
        let mut p = Self::identity(degree);
        for cycle in cycles {
            let mut image: Vec<usize> = (0..degree).collect();
            for (k, &x) in cycle.iter().enumerate() {
                let y = cycle[(k + 1) % cycle.len()];
                if x >= degree || y >= degree {
                    return Err(Error::InvalidPermutation(format!(
                        "cycle {cycle:?} out of range for degree {degree}"
                    )));
                }
                image[x] = y;
            }
            p = Self::new(image)?.compose(&p);
        }
        Ok(p)
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn image(&self) -> &[usize] {
        &self.0
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self(other.0.iter().map(|&i| self.0[i]).collect())
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &x) in self.0.iter().enumerate() {
            inv[x] = i;
        }
        Self(inv)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &x)| i == x)
    }

    /// Maps edges to edges and non-edges to non-edges.
    pub fn is_automorphism(&self, g: &Graph) -> bool {
        if self.degree() != g.vertex_count() {
            return false;
        }
        // a bijection mapping every edge to an edge also preserves non-edges
        g.edges()
            .all(|(u, v)| g.has_edge(self.apply(u), self.apply(v)))
    }
}

/// A finite permutation group with every element listed.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationGroup {
    degree: usize,
    elements: Vec<Permutation>,
    generators: Vec<Permutation>,
}

fn closure(
    degree: usize,
    generators: &[Permutation],
    cap: usize,
) -> std::result::Result<HashSet<Permutation>, usize> {
    let id = Permutation::identity(degree);
    let mut seen = HashSet::from([id.clone()]);
    let mut queue = VecDeque::from([id]);
    while let Some(x) = queue.pop_front() {
        for s in generators {
            let y = s.compose(&x);
            if !seen.contains(&y) {
                if seen.len() >= cap {
                    return Err(seen.len() + 1);
                }
                seen.insert(y.clone());
                queue.push_back(y);
            }
        }
    }
    Ok(seen)
}

impl PermutationGroup {
    pub fn trivial(degree: usize) -> Self {
        Self {
            degree,
            elements: vec![Permutation::identity(degree)],
            generators: Vec::new(),
        }
    }

    /// Smallest group containing `generators`, by closure under
    /// left multiplication by generators.
    pub fn generate(degree: usize, generators: &[Permutation], cap: usize) -> Result<Self> {
        if let Some(g) = generators.iter().find(|g| g.degree() != degree) {
            return Err(Error::InvalidPermutation(format!(
                "generator of degree {} in a group of degree {degree}",
                g.degree()
            )));
        }
        let set = closure(degree, generators, cap).map_err(|n| {
            Error::size_limit(
                "generated group",
                format!("more than {}", n - 1),
                cap as u128,
            )
        })?;
        let mut elements: Vec<_> = set.into_iter().collect();
        elements.sort();
        let generators = generators
            .iter()
            .filter(|g| !g.is_identity())
            .cloned()
            .collect();
        Ok(Self {
            degree,
            elements,
            generators,
        })
    }

    /// Wraps an explicit element list, verifying it is a group. A small
    /// generating set is extracted along the way.
    pub fn from_elements(degree: usize, mut elements: Vec<Permutation>) -> Result<Self> {
        elements.sort();
        elements.dedup();
        if elements.iter().any(|e| e.degree() != degree) {
            return Err(Error::InvalidPermutation("element degree mismatch".into()));
        }
        if elements
            .binary_search(&Permutation::identity(degree))
            .is_err()
        {
            return Err(Error::InvalidPermutation(
                "element set lacks the identity".into(),
            ));
        }
        let not_closed =
            || Error::InvalidPermutation("element set is not closed under composition".into());
        let mut generators = Vec::new();
        let mut span = HashSet::from([Permutation::identity(degree)]);
        for e in &elements {
            if !span.contains(e) {
                generators.push(e.clone());
                span = closure(degree, &generators, elements.len()).map_err(|_| not_closed())?;
            }
        }
        if span.len() != elements.len() {
            return Err(not_closed());
        }
        Ok(Self {
            degree,
            elements,
            generators,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Elements in sorted order.
    pub fn elements(&self) -> &[Permutation] {
        &self.elements
    }

    pub fn generators(&self) -> &[Permutation] {
        &self.generators
    }

    pub fn contains(&self, p: &Permutation) -> bool {
        self.elements.binary_search(p).is_ok()
    }

    /// Orbits by reachability under the generators.
    pub fn orbits(&self) -> OrbitPartition {
        OrbitPartition::from_generators(self.degree, &self.generators)
    }

    pub fn stabiliser(&self, u: usize) -> Vec<Permutation> {
        self.transporter(u, u)
    }

    /// Elements mapping `u` to `v`.
    pub fn transporter(&self, u: usize, v: usize) -> Vec<Permutation> {
        self.elements
            .iter()
            .filter(|s| s.apply(u) == v)
            .cloned()
            .collect()
    }

    pub fn is_automorphism_group_of(&self, g: &Graph) -> bool {
        self.generators.iter().all(|s| s.is_automorphism(g))
    }
}

/// Partition of `0..degree` into orbits.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitPartition {
    pub orbit_of: Vec<usize>,
    /// Orbits sorted by smallest member; members sorted.
    pub orbits: Vec<Vec<usize>>,
}

impl OrbitPartition {
    pub fn from_generators(degree: usize, generators: &[Permutation]) -> Self {
        let mut orbit_of = vec![usize::MAX; degree];
        let mut orbits = Vec::new();
        for s in 0..degree {
            if orbit_of[s] != usize::MAX {
                continue;
            }
            let id = orbits.len();
            orbit_of[s] = id;
            let mut members = vec![s];
            let mut head = 0;
            while head < members.len() {
                let x = members[head];
                head += 1;
                for g in generators {
                    let y = g.apply(x);
                    if orbit_of[y] == usize::MAX {
                        orbit_of[y] = id;
                        members.push(y);
                    }
                }
            }
            members.sort_unstable();
            orbits.push(members);
        }
        Self { orbit_of, orbits }
    }

    pub fn count(&self) -> usize {
        self.orbits.len()
    }

    pub fn orbit(&self, v: usize) -> &[usize] {
        &self.orbits[self.orbit_of[v]]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.orbits.iter().map(Vec::len).collect()
    }
}

/// Backtracking enumeration of distance-preserving bijections, stopping
/// after `limit` elements. Returns the elements found and whether the
/// search ran to completion.
fn search_automorphisms(g: &Graph, limit: usize) -> (Vec<Permutation>, bool) {
    let n = g.vertex_count();
    let dist = g.distances();
    let invariant: Vec<(usize, Vec<usize>)> = (0..n)
        .map(|v| {
            let mut profile = vec![0usize; n + 1];
            for w in 0..n {
                profile[dist.get(v, w).unwrap_or(n)] += 1;
            }
            (g.degree(v), profile)
        })
        .collect();

    // visit vertices so that each one (after a component's first) has an
    // already-placed neighbour
    let mut order = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    for s in 0..n {
        if placed[s] {
            continue;
        }
        placed[s] = true;
        let start = order.len();
        order.push(s);
        let mut head = start;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for &w in g.neighbours(u) {
                if !placed[w] {
                    placed[w] = true;
                    order.push(w);
                }
            }
        }
    }

    struct State<'a> {
        n: usize,
        order: &'a [usize],
        invariant: &'a [(usize, Vec<usize>)],
        dist: &'a crate::graph::DistanceMatrix,
        image: Vec<usize>,
        used: Vec<bool>,
        found: Vec<Permutation>,
        limit: usize,
    }

    fn descend(st: &mut State, depth: usize) -> bool {
        if depth == st.n {
            st.found.push(Permutation(st.image.clone()));
            return st.found.len() < st.limit;
        }
        let v = st.order[depth];
        for w in 0..st.n {
            if st.used[w] || st.invariant[v] != st.invariant[w] {
                continue;
            }
            let consistent = st.order[..depth]
                .iter()
                .all(|&u| st.dist.get(u, v) == st.dist.get(st.image[u], w));
            if !consistent {
                continue;
            }
            st.image[v] = w;
            st.used[w] = true;
            let go_on = descend(st, depth + 1);
            st.used[w] = false;
            if !go_on {
                return false;
            }
        }
        true
    }

    let mut st = State {
        n,
        order: &order,
        invariant: &invariant,
        dist: &dist,
        image: vec![usize::MAX; n],
        used: vec![false; n],
        found: Vec::new(),
        limit: limit.max(1),
    };
    // descend only bails out once `limit` elements are found
    let complete = descend(&mut st, 0);
    (st.found, complete)
}

/// The full automorphism group of `g`.
pub fn automorphism_group(
    g: &Graph,
    vertex_cap: usize,
    group_cap: usize,
) -> Result<PermutationGroup> {
    if g.vertex_count() > vertex_cap {
        return Err(Error::size_limit(
            "automorphism search graph",
            g.vertex_count(),
            vertex_cap as u128,
        ));
    }
    let (found, complete) = search_automorphisms(g, group_cap.saturating_add(1));
    if !complete || found.len() > group_cap {
        return Err(Error::size_limit(
            "automorphism group",
            format!("more than {group_cap}"),
            group_cap as u128,
        ));
    }
    PermutationGroup::from_elements(g.vertex_count(), found)
}

/// The full automorphism group when it fits within `group_cap`, otherwise
/// a subgroup of it generated greedily from the first automorphisms the
/// search produces, stopping at the first candidate that would exceed the
/// cap. The flag is true when the result is all of `Aut(g)`.
pub fn automorphism_subgroup(
    g: &Graph,
    vertex_cap: usize,
    group_cap: usize,
) -> Result<(PermutationGroup, bool)> {
    match automorphism_group(g, vertex_cap, group_cap) {
        Ok(full) => return Ok((full, true)),
        Err(e) if e.is_size_limit() && g.vertex_count() <= vertex_cap => {}
        Err(e) => return Err(e),
    }
    let (found, _) = search_automorphisms(g, group_cap);
    let degree = g.vertex_count();
    let mut generators: Vec<Permutation> = Vec::new();
    let mut span = HashSet::from([Permutation::identity(degree)]);
    for candidate in found.iter().rev() {
        if span.contains(candidate) {
            continue;
        }
        let mut trial = generators.clone();
        trial.push(candidate.clone());
        match closure(degree, &trial, group_cap) {
            Ok(s) => {
                generators = trial;
                span = s;
            }
            Err(_) => break,
        }
    }
    Ok((
        PermutationGroup::generate(degree, &generators, group_cap)?,
        false,
    ))
}

fn lex_strides(m: usize, n: usize) -> Vec<usize> {
    (0..n).map(|p| m.pow((n - 1 - p) as u32)).collect()
}

fn lex_index(db: &[usize], strides: &[usize]) -> usize {
    db.iter().zip(strides).map(|(&t, &s)| t * s).sum()
}

fn check_liftable(policy: &BlowfishPolicy, adjacency: &AdjacencyGraph) -> Result<Vec<usize>> {
    if !matches!(policy.permissible(), Permissible::All) {
        return Err(Error::UnsupportedLift);
    }
    let m = policy.universe().len();
    let expected = policy.permissible_count();
    if expected != Some(adjacency.vertices.len() as u128) {
        return Err(Error::Dimension(format!(
            "adjacency graph has {} vertices, policy permits {expected:?}",
            adjacency.vertices.len()
        )));
    }
    Ok(lex_strides(m, policy.n()))
}

fn lift_with<F>(adjacency: &AdjacencyGraph, strides: &[usize], map: F) -> Result<Permutation>
where
    F: Fn(&Database) -> Vec<usize>,
{
    let image = adjacency
        .vertices
        .iter()
        .map(|d| lex_index(&map(d), strides))
        .collect();
    let p = Permutation::new(image)?;
    if !p.is_automorphism(&adjacency.graph) {
        return Err(Error::InvalidPermutation(
            "lifted permutation does not preserve database adjacency".into(),
        ));
    }
    Ok(p)
}

/// Applies secret-graph automorphism `per_record[p]` to record `p` of every
/// database.
pub fn lift_record_automorphisms(
    policy: &BlowfishPolicy,
    adjacency: &AdjacencyGraph,
    per_record: &[Permutation],
) -> Result<Permutation> {
    let strides = check_liftable(policy, adjacency)?;
    let secrets = policy.secret_graph().to_graph();
    if per_record.len() != policy.n() {
        return Err(Error::Dimension(format!(
            "{} record automorphisms for n = {}",
            per_record.len(),
            policy.n()
        )));
    }
    if let Some(bad) = per_record.iter().find(|phi| !phi.is_automorphism(&secrets)) {
        return Err(Error::InvalidPermutation(format!(
            "{bad:?} is not an automorphism of the secret graph"
        )));
    }
    lift_with(adjacency, &strides, |d| {
        d.0.iter()
            .zip(per_record)
            .map(|(&t, phi)| phi.apply(t))
            .collect()
    })
}

/// Reorders records: `σ(t_1..t_n) = (t_{π(1)}, .., t_{π(n)})`.
pub fn lift_record_permutation(
    policy: &BlowfishPolicy,
    adjacency: &AdjacencyGraph,
    pi: &Permutation,
) -> Result<Permutation> {
    let strides = check_liftable(policy, adjacency)?;
    if pi.degree() != policy.n() {
        return Err(Error::Dimension(format!(
            "record permutation of degree {} for n = {}",
            pi.degree(),
            policy.n()
        )));
    }
    lift_with(adjacency, &strides, |d| {
        (0..d.len()).map(|p| d.0[pi.apply(p)]).collect()
    })
}

/// Generators of the subgroup of the adjacency graph's automorphisms
/// obtained from secret-graph automorphisms applied record-wise and from
/// record reorderings. Requires an unconstrained permissible set.
pub fn lift_policy_automorphisms(
    policy: &BlowfishPolicy,
    adjacency: &AdjacencyGraph,
    group_cap: usize,
) -> Result<Vec<Permutation>> {
    check_liftable(policy, adjacency)?;
    let secrets = policy.secret_graph().to_graph();
    let (secret_group, _) = automorphism_subgroup(&secrets, usize::MAX, group_cap)?;
    let n = policy.n();
    let m = secrets.vertex_count();
    let mut out = Vec::new();
    for phi in secret_group.generators() {
        for p in 0..n {
            let mut per_record = vec![Permutation::identity(m); n];
            per_record[p] = phi.clone();
            out.push(lift_record_automorphisms(policy, adjacency, &per_record)?);
        }
    }
    for p in 1..n {
        let swap = Permutation::from_cycles(n, &[&[p - 1, p]])?;
        out.push(lift_record_permutation(policy, adjacency, &swap)?);
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Where a group returned by [`symmetry_group`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupSource {
    FullAutomorphisms,
    LiftedPolicyAutomorphisms,
    GreedySubgroup,
}

impl fmt::Display for GroupSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupSource::FullAutomorphisms => "full",
            GroupSource::LiftedPolicyAutomorphisms => "lifted",
            GroupSource::GreedySubgroup => "subgroup",
        })
    }
}

/// A group of automorphisms of an adjacency graph for channel averaging.
/// Tries, in order: the full automorphism group (at most `vertex_cap`
/// vertices and `group_cap` elements), the group generated by lifted
/// policy automorphisms (unconstrained `policy` only), and a greedy
/// subgroup of the automorphism group.
pub fn symmetry_group(
    policy: Option<&BlowfishPolicy>,
    adjacency: &AdjacencyGraph,
    vertex_cap: usize,
    group_cap: usize,
) -> Result<(PermutationGroup, GroupSource)> {
    let g = &adjacency.graph;
    if g.vertex_count() <= vertex_cap {
        match automorphism_group(g, vertex_cap, group_cap) {
            Ok(full) => return Ok((full, GroupSource::FullAutomorphisms)),
            Err(e) if e.is_size_limit() => {}
            Err(e) => return Err(e),
        }
    }
    if let Some(p) = policy.filter(|p| p.is_unconstrained()) {
        let gens = lift_policy_automorphisms(p, adjacency, group_cap)?;
        match PermutationGroup::generate(g.vertex_count(), &gens, group_cap) {
            Ok(group) => return Ok((group, GroupSource::LiftedPolicyAutomorphisms)),
            Err(e) if e.is_size_limit() => {}
            Err(e) => return Err(e),
        }
    }
    let (group, full) = automorphism_subgroup(g, usize::MAX, group_cap)?;
    let source = if full {
        GroupSource::FullAutomorphisms
    } else {
        GroupSource::GreedySubgroup
    };
    Ok((group, source))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adjacency::induce_adjacency_graph;
    use crate::policy::{build_policy, PermissibleSpec, PolicyKind};

    fn perm(v: &[usize]) -> Permutation {
        Permutation::new(v.to_vec()).unwrap()
    }

    /// Every permutation of `0..n`, for brute-force comparisons.
    fn all_permutations(n: usize) -> Vec<Permutation> {
        fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Permutation>) {
            if prefix.len() == used.len() {
                out.push(Permutation(prefix.clone()));
                return;
            }
            for x in 0..used.len() {
                if !used[x] {
                    used[x] = true;
                    prefix.push(x);
                    rec(prefix, used, out);
                    prefix.pop();
                    used[x] = false;
                }
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::new(), &mut vec![false; n], &mut out);
        out
    }

    #[test]
    fn permutation_basics() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        let a = perm(&[1, 2, 0]);
        let b = perm(&[1, 0, 2]);
        // (a∘b)(0) = a(b(0)) = a(1) = 2
        assert_eq!(a.compose(&b).apply(0), 2);
        assert!(a.compose(&a.inverse()).is_identity());
        assert_eq!(
            Permutation::from_cycles(3, &[&[0, 2]]).unwrap(),
            perm(&[2, 1, 0])
        );
    }

    #[test]
    fn generated_groups() {
        let g = PermutationGroup::generate(3, &[], 10).unwrap();
        assert_eq!(g.order(), 1);
        let swap = Permutation::from_cycles(3, &[&[0, 2]]).unwrap();
        assert_eq!(
            PermutationGroup::generate(3, std::slice::from_ref(&swap), 10)
                .unwrap()
                .order(),
            2
        );
        let rot = perm(&[1, 2, 0]);
        let s3 = PermutationGroup::generate(3, &[rot, swap], 10).unwrap();
        assert_eq!(s3.order(), 6);
        assert_eq!(s3.elements(), all_permutations(3).as_slice());
        let err =
            PermutationGroup::generate(3, &[perm(&[1, 2, 0]), perm(&[1, 0, 2])], 5).unwrap_err();
        assert!(err.is_size_limit());
        assert!(PermutationGroup::generate(4, &[perm(&[1, 0])], 10).is_err());
    }

    #[test]
    fn from_elements_rejects_non_groups() {
        let not_closed = vec![Permutation::identity(3), perm(&[1, 2, 0])];
        assert!(PermutationGroup::from_elements(3, not_closed).is_err());
        assert!(PermutationGroup::from_elements(2, vec![perm(&[1, 0])]).is_err());
        let z3 = vec![Permutation::identity(3), perm(&[1, 2, 0]), perm(&[2, 0, 1])];
        let g = PermutationGroup::from_elements(3, z3).unwrap();
        assert_eq!(g.generators().len(), 1);
    }

    #[test]
    fn automorphism_groups_of_small_graphs() {
        let p3 = automorphism_group(&Graph::path(3), 16, 1000).unwrap();
        assert_eq!(p3.elements(), &[perm(&[0, 1, 2]), perm(&[2, 1, 0])]);
        assert_eq!(
            automorphism_group(&Graph::complete(4), 16, 1000)
                .unwrap()
                .order(),
            24
        );
        assert_eq!(
            automorphism_group(&Graph::cycle(5).unwrap(), 16, 1000)
                .unwrap()
                .order(),
            10
        );
        assert!(automorphism_group(&Graph::path(17), 16, 1000)
            .unwrap_err()
            .is_size_limit());
        assert!(automorphism_group(&Graph::empty(6), 16, 100)
            .unwrap_err()
            .is_size_limit());
        assert_eq!(
            automorphism_group(&Graph::empty(5), 16, 120)
                .unwrap()
                .order(),
            120
        );
    }

    #[test]
    fn automorphisms_match_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let n = rng.gen_range(1..=6);
            let p = rng.gen_range(0.0..1.0);
            let edges: Vec<_> = (0..n)
                .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
                .filter(|_| rng.gen_bool(p))
                .collect();
            let g = Graph::from_edges(n, edges).unwrap();
            let brute: Vec<_> = all_permutations(n)
                .into_iter()
                .filter(|s| s.is_automorphism(&g))
                .collect();
            let found = automorphism_group(&g, 16, 1000).unwrap();
            assert_eq!(found.elements(), brute.as_slice());
        }
    }

    #[test]
    fn subgroup_fallback() {
        let (g, full) = automorphism_subgroup(&Graph::empty(8), 16, 500).unwrap();
        assert!(!full);
        assert!(g.order() <= 500 && g.order() > 1);
        assert!(g.is_automorphism_group_of(&Graph::empty(8)));
        let (g, full) = automorphism_subgroup(&Graph::path(4), 16, 500).unwrap();
        assert!(full);
        assert_eq!(g.order(), 2);
    }

    #[test]
    fn orbits_of_small_groups() {
        let p3 = automorphism_group(&Graph::path(3), 16, 100).unwrap();
        assert_eq!(p3.orbits().orbits, vec![vec![0, 2], vec![1]]);
        assert_eq!(PermutationGroup::trivial(4).orbits().count(), 4);
        let k4 = automorphism_group(&Graph::complete(4), 16, 100).unwrap();
        assert_eq!(k4.orbits().orbits, vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn transporters() {
        let p3 = automorphism_group(&Graph::path(3), 16, 100).unwrap();
        assert_eq!(p3.transporter(0, 2), vec![perm(&[2, 1, 0])]);
        assert!(p3.transporter(0, 1).is_empty());
        assert_eq!(p3.stabiliser(1).len(), 2);
        let k4 = automorphism_group(&Graph::complete(4), 16, 100).unwrap();
        for u in 0..4 {
            for v in 0..4 {
                assert_eq!(k4.transporter(u, v).len(), 6);
            }
        }
    }

    fn path_policy(n: usize) -> BlowfishPolicy {
        let kind = PolicyKind::DistanceThreshold {
            values: vec![1.0, 2.0, 3.0, 4.0],
            theta: 1.0,
        };
        build_policy(&kind, n, PermissibleSpec::All).unwrap()
    }

    #[test]
    fn lifted_reversal_is_automorphism() {
        let p = path_policy(2);
        let adj = induce_adjacency_graph(&p, 100).unwrap();
        let rev = perm(&[3, 2, 1, 0]);
        let sigma = lift_record_automorphisms(&p, &adj, &[rev, Permutation::identity(4)]).unwrap();
        assert!(sigma.is_automorphism(&adj.graph));
        assert!(!sigma.is_identity());
        // (1,3) -> (4,3): index 0*4+2 = 2 maps to 3*4+2 = 14
        assert_eq!(sigma.apply(2), 14);

        let bad = perm(&[1, 0, 2, 3]);
        assert!(lift_record_automorphisms(&p, &adj, &[bad, Permutation::identity(4)]).is_err());
    }

    #[test]
    fn lifted_record_swap() {
        let p = build_policy(&PolicyKind::Complete { m: 3 }, 2, PermissibleSpec::All).unwrap();
        let adj = induce_adjacency_graph(&p, 100).unwrap();
        let swap = perm(&[1, 0]);
        let sigma = lift_record_permutation(&p, &adj, &swap).unwrap();
        assert!(sigma.is_automorphism(&adj.graph));
        // (1,2) <-> (2,1)
        assert_eq!(sigma.apply(1), 3);
    }

    #[test]
    fn lifted_group_divides_full_group() {
        let p = path_policy(2);
        let adj = induce_adjacency_graph(&p, 100).unwrap();
        let gens = lift_policy_automorphisms(&p, &adj, 1000).unwrap();
        let lifted = PermutationGroup::generate(16, &gens, 1000).unwrap();
        let full = automorphism_group(&adj.graph, 16, 100_000).unwrap();
        assert_eq!(full.order() % lifted.order(), 0);
        assert!(lifted.elements().iter().all(|s| full.contains(s)));
        // path reversal per record and the record swap: the grid's 8 symmetries
        assert_eq!(lifted.order(), 8);
        assert_eq!(full.order(), 8);
    }

    #[test]
    fn lift_rejects_constrained_sets() {
        let spec = PermissibleSpec::Explicit(vec![vec!["1".into()], vec!["2".into()]]);
        let p = build_policy(&PolicyKind::Complete { m: 3 }, 1, spec).unwrap();
        let adj = induce_adjacency_graph(&p, 100).unwrap();
        assert_eq!(
            lift_policy_automorphisms(&p, &adj, 100),
            Err(Error::UnsupportedLift)
        );
    }

    #[test]
    fn symmetry_group_sources() {
        let p = path_policy(2);
        let adj = induce_adjacency_graph(&p, 100).unwrap();
        let (g, src) = symmetry_group(Some(&p), &adj, 16, 1000).unwrap();
        assert_eq!((g.order(), src), (8, GroupSource::FullAutomorphisms));
        let (g, src) = symmetry_group(Some(&p), &adj, 4, 1000).unwrap();
        assert_eq!(
            (g.order(), src),
            (8, GroupSource::LiftedPolicyAutomorphisms)
        );

        // K4 secrets, three records: the full group of the 64-vertex graph
        // has (4!)^3 * 3! elements
        let p = build_policy(&PolicyKind::Complete { m: 4 }, 3, PermissibleSpec::All).unwrap();
        let adj = induce_adjacency_graph(&p, 100).unwrap();
        let (g, src) = symmetry_group(Some(&p), &adj, 16, 500).unwrap();
        assert_eq!(src, GroupSource::GreedySubgroup);
        assert!(g.order() <= 500 && g.order() > 1);
        assert!(g.is_automorphism_group_of(&adj.graph));
    }
}
