//! Finite relational structures over the universe `[0, n)`.
//!
//! A [`Structure`] is immutable once built. Its Gaifman graph is computed on
//! first use and cached, so structures can be shared freely between threads.

use std::collections::{HashSet, VecDeque};
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};

/// Name of the binary edge relation of the graph signature.
pub const ADJ: &str = "adj";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RelationSymbol {
    pub name: String,
    pub arity: usize,
}

/// A finite relational vocabulary with constant symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature {
    relations: Vec<RelationSymbol>,
    constants: Vec<String>,
}

impl Signature {
    pub fn new<R, C>(relations: R, constants: C) -> Result<Self>
    where
        R: IntoIterator<Item = (String, usize)>,
        C: IntoIterator<Item = String>,
    {
        let relations: Vec<RelationSymbol> = relations
            .into_iter()
            .map(|(name, arity)| RelationSymbol { name, arity })
            .collect();
        let constants: Vec<String> = constants.into_iter().collect();
        let mut seen = HashSet::new();
        for rel in &relations {
            if rel.arity == 0 {
                return Err(Error::ZeroArity(rel.name.clone()));
            }
            if !seen.insert(rel.name.as_str()) {
                return Err(Error::DuplicateSymbol(rel.name.clone()));
            }
        }
        for c in &constants {
            if !seen.insert(c.as_str()) {
                return Err(Error::DuplicateSymbol(c.clone()));
            }
        }
        Ok(Signature {
            relations,
            constants,
        })
    }

    /// The signature of simple graphs: one symmetric irreflexive `adj/2`.
    pub fn graph() -> Self {
        Signature {
            relations: vec![RelationSymbol {
                name: ADJ.to_string(),
                arity: 2,
            }],
            constants: Vec::new(),
        }
    }

    pub fn relations(&self) -> &[RelationSymbol] {
        &self.relations
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }

    pub fn relation_index(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }

    pub fn constant_index(&self, name: &str) -> Option<usize> {
        self.constants.iter().position(|c| c == name)
    }

    /// Index of the `adj/2` relation, if the signature has one.
    pub fn adjacency(&self) -> Option<usize> {
        self.relation_index(ADJ)
            .filter(|&i| self.relations[i].arity == 2)
    }

    pub fn has_symbol(&self, name: &str) -> bool {
        self.relation_index(name).is_some() || self.constant_index(name).is_some()
    }

    /// Same relations, with `extra` constants appended.
    pub fn with_constants(&self, extra: impl IntoIterator<Item = String>) -> Result<Signature> {
        let rels = self.relations.iter().map(|r| (r.name.clone(), r.arity));
        let consts = self.constants.iter().cloned().chain(extra);
        Signature::new(rels, consts)
    }
}

#[derive(Debug)]
enum Membership {
    Unary(Vec<bool>),
    /// Row-major `n * n` bit matrix.
    Dense { n: usize, bits: Vec<u64> },
    Hashed(HashSet<Vec<usize>>),
}

const DENSE_LIMIT: usize = 1 << 13;

/// One interpreted relation: a sorted, duplicate-free tuple list plus an index
/// for constant-time membership.
#[derive(Debug)]
pub struct Relation {
    arity: usize,
    tuples: Vec<Vec<usize>>,
    index: Membership,
}

impl Relation {
    fn build(arity: usize, n: usize, mut tuples: Vec<Vec<usize>>) -> Self {
        tuples.sort_unstable();
        tuples.dedup();
        let index = match arity {
            1 => {
                let mut v = vec![false; n];
                for t in &tuples {
                    v[t[0]] = true;
                }
                Membership::Unary(v)
            }
            2 if n <= DENSE_LIMIT => {
                let mut bits = vec![0u64; (n * n).div_ceil(64)];
                for t in &tuples {
                    let k = t[0] * n + t[1];
                    bits[k / 64] |= 1 << (k % 64);
                }
                Membership::Dense { n, bits }
            }
            _ => Membership::Hashed(tuples.iter().cloned().collect()),
        };
        Relation {
            arity,
            tuples,
            index,
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    #[inline]
    pub fn contains(&self, tuple: &[usize]) -> bool {
        match &self.index {
            Membership::Unary(v) => v[tuple[0]],
            Membership::Dense { n, bits } => {
                let k = tuple[0] * n + tuple[1];
                bits[k / 64] >> (k % 64) & 1 == 1
            }
            Membership::Hashed(set) => set.contains(tuple),
        }
    }
}

/// Simple undirected graph with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
}

impl Graph {
    pub fn order(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges as pairs `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (u, ns) in self.adj.iter().enumerate() {
            out.extend(ns.iter().filter(|&&v| u < v).map(|&v| (u, v)));
        }
        out
    }

    /// Vertices within distance `r` of some source, in breadth-first order,
    /// paired with their distance. Sources come first, in the given order.
    pub fn bfs_within(&self, sources: &[usize], r: usize) -> Vec<(usize, usize)> {
        let mut dist = vec![usize::MAX; self.order()];
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s] == usize::MAX {
                dist[s] = 0;
                order.push((s, 0));
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let d = dist[u];
            if d == r {
                continue;
            }
            for &v in &self.adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = d + 1;
                    order.push((v, d + 1));
                    queue.push_back(v);
                }
            }
        }
        order
    }

    /// Breadth-first distances from `source`; `usize::MAX` marks unreachable.
    pub fn distances_from(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.order()];
        for (v, d) in self.bfs_within(&[source], usize::MAX) {
            dist[v] = d;
        }
        dist
    }
}

/// A finite structure: universe `[0, n)`, one tuple set per relation symbol
/// and one element per constant symbol.
#[derive(Debug)]
pub struct Structure {
    signature: Arc<Signature>,
    size: usize,
    relations: Vec<Relation>,
    constants: Vec<usize>,
    gaifman: OnceLock<Graph>,
}

impl Clone for Structure {
    fn clone(&self) -> Self {
        let relations = self
            .relations
            .iter()
            .map(|r| Relation::build(r.arity, self.size, r.tuples.clone()))
            .collect();
        Structure {
            signature: self.signature.clone(),
            size: self.size,
            relations,
            constants: self.constants.clone(),
            gaifman: OnceLock::new(),
        }
    }
}

impl PartialEq for Structure {
    fn eq(&self, other: &Self) -> bool {
        self.signature == other.signature
            && self.size == other.size
            && self.constants == other.constants
            && self
                .relations
                .iter()
                .zip(&other.relations)
                .all(|(a, b)| a.tuples == b.tuples)
    }
}

impl Eq for Structure {}

impl Structure {
    /// Builds a structure, checking ranges and arities. A binary `adj`
    /// relation is symmetrised and loops are dropped.
    pub fn new(
        signature: impl Into<Arc<Signature>>,
        size: usize,
        relations: Vec<Vec<Vec<usize>>>,
        constants: Vec<usize>,
    ) -> Result<Self> {
        let signature = signature.into();
        if relations.len() != signature.relations().len() {
            return Err(Error::RelationCount {
                expected: signature.relations().len(),
                got: relations.len(),
            });
        }
        if constants.len() != signature.constants().len() {
            return Err(Error::ConstantCount {
                expected: signature.constants().len(),
                got: constants.len(),
            });
        }
        for &c in &constants {
            if c >= size {
                return Err(Error::ElementOutOfRange {
                    element: c,
                    size,
                });
            }
        }
        let adj = signature.adjacency();
        let mut built = Vec::with_capacity(relations.len());
        for (i, (sym, mut tuples)) in signature.relations().iter().zip(relations).enumerate() {
            for t in &tuples {
                if t.len() != sym.arity {
                    return Err(Error::TupleArity {
                        relation: sym.name.clone(),
                        expected: sym.arity,
                        got: t.len(),
                    });
                }
                if let Some(&e) = t.iter().find(|&&e| e >= size) {
                    return Err(Error::ElementOutOfRange { element: e, size });
                }
            }
            if Some(i) == adj {
                tuples.retain(|t| t[0] != t[1]);
                let mirrored: Vec<Vec<usize>> = tuples.iter().map(|t| vec![t[1], t[0]]).collect();
                tuples.extend(mirrored);
            }
            built.push(Relation::build(sym.arity, size, tuples));
        }
        Ok(Structure {
            signature,
            size,
            relations: built,
            constants,
            gaifman: OnceLock::new(),
        })
    }

    /// A simple graph on `[0, n)` in the graph signature.
    pub fn graph(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let tuples = edges.iter().map(|&(u, v)| vec![u, v]).collect();
        Structure::new(Signature::graph(), n, vec![tuples], Vec::new())
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn signature_arc(&self) -> &Arc<Signature> {
        &self.signature
    }

    /// Universe size.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn relation(&self, i: usize) -> &Relation {
        &self.relations[i]
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn constants(&self) -> &[usize] {
        &self.constants
    }

    /// The Gaifman graph: `u ~ v` iff `u != v` and both occur in one tuple.
    pub fn gaifman(&self) -> &Graph {
        self.gaifman.get_or_init(|| {
            let mut adj = vec![Vec::new(); self.size];
            for rel in &self.relations {
                for t in &rel.tuples {
                    for (i, &u) in t.iter().enumerate() {
                        for &v in &t[i + 1..] {
                            if u != v {
                                adj[u].push(v);
                                adj[v].push(u);
                            }
                        }
                    }
                }
            }
            for ns in &mut adj {
                ns.sort_unstable();
                ns.dedup();
            }
            Graph { adj }
        })
    }

    pub fn max_degree(&self) -> usize {
        let g = self.gaifman();
        (0..self.size).map(|v| g.degree(v)).max().unwrap_or(0)
    }

    fn check_elements(&self, elements: &[usize]) -> Result<()> {
        match elements.iter().find(|&&e| e >= self.size) {
            Some(&e) => Err(Error::ElementOutOfRange {
                element: e,
                size: self.size,
            }),
            None => Ok(()),
        }
    }

    /// Closed `r`-neighbourhood of `tuple` in the Gaifman graph, sorted.
    pub fn neighborhood(&self, tuple: &[usize], r: usize) -> Result<Vec<usize>> {
        self.check_elements(tuple)?;
        let mut out: Vec<usize> = self
            .gaifman()
            .bfs_within(tuple, r)
            .into_iter()
            .map(|(v, _)| v)
            .collect();
        out.sort_unstable();
        Ok(out)
    }

    /// Substructure induced on `elements`, re-indexed in ascending element
    /// order. Returns the structure and the old-to-new index map.
    pub fn induced_with_map(&self, elements: &[usize]) -> Result<(Structure, Vec<Option<usize>>)> {
        self.check_elements(elements)?;
        let mut set = elements.to_vec();
        set.sort_unstable();
        set.dedup();
        let mut map = vec![None; self.size];
        for (i, &e) in set.iter().enumerate() {
            map[e] = Some(i);
        }
        let mut constants = Vec::with_capacity(self.constants.len());
        for (ci, &c) in self.constants.iter().enumerate() {
            match map[c] {
                Some(i) => constants.push(i),
                None => {
                    return Err(Error::ConstantOutside(
                        self.signature.constants()[ci].clone(),
                    ))
                }
            }
        }
        let relations = self
            .relations
            .iter()
            .map(|rel| {
                rel.tuples
                    .iter()
                    .filter_map(|t| t.iter().map(|&e| map[e]).collect::<Option<Vec<_>>>())
                    .collect()
            })
            .collect();
        let s = Structure::new(self.signature.clone(), set.len(), relations, constants)?;
        Ok((s, map))
    }

    pub fn induced(&self, elements: &[usize]) -> Result<Structure> {
        self.induced_with_map(elements).map(|(s, _)| s)
    }

    /// The radius-`r` ball around `roots`, with roots re-indexed.
    pub fn ball(&self, roots: &[usize], r: usize) -> Result<RootedBall> {
        let nbhd = self.neighborhood(roots, r)?;
        let (structure, map) = self.induced_with_map(&nbhd)?;
        let roots = roots.iter().map(|&v| map[v].expect("root in ball")).collect();
        Ok(RootedBall {
            structure,
            roots,
            radius: r,
        })
    }

    /// Same structure, relabelled so that element `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Structure {
        assert_eq!(perm.len(), self.size);
        let relations = self
            .relations
            .iter()
            .map(|rel| {
                rel.tuples
                    .iter()
                    .map(|t| t.iter().map(|&e| perm[e]).collect())
                    .collect()
            })
            .collect();
        let constants = self.constants.iter().map(|&c| perm[c]).collect();
        Structure::new(self.signature.clone(), self.size, relations, constants)
            .expect("a permutation preserves validity")
    }

    /// Expansion by new constants named `names` interpreted as `values`.
    pub fn with_constants(&self, names: Vec<String>, values: &[usize]) -> Result<Structure> {
        self.check_elements(values)?;
        let signature = self.signature.with_constants(names)?;
        let relations = self.relations.iter().map(|r| r.tuples.clone()).collect();
        let constants = self.constants.iter().chain(values).copied().collect();
        Structure::new(signature, self.size, relations, constants)
    }

    /// Disjoint union of constant-free structures over one signature, with
    /// the offset at which each part starts.
    pub fn disjoint_union(parts: &[&Structure]) -> Result<(Structure, Vec<usize>)> {
        let first = parts.first().ok_or(Error::EmptySequence)?;
        let signature = first.signature.clone();
        let mut offsets = Vec::with_capacity(parts.len());
        let mut relations: Vec<Vec<Vec<usize>>> = vec![Vec::new(); signature.relations().len()];
        let mut total = 0;
        for part in parts {
            if part.signature != signature {
                return Err(Error::SignatureMismatch);
            }
            if !part.constants.is_empty() {
                return Err(Error::Format(
                    "disjoint union of structures with constants".into(),
                ));
            }
            offsets.push(total);
            for (acc, rel) in relations.iter_mut().zip(&part.relations) {
                acc.extend(
                    rel.tuples
                        .iter()
                        .map(|t| t.iter().map(|&e| e + total).collect()),
                );
            }
            total += part.size;
        }
        Ok((Structure::new(signature, total, relations, Vec::new())?, offsets))
    }
}

/// A structure with distinguished roots, every element of which lies within
/// `radius` of some root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedBall {
    pub structure: Structure,
    pub roots: Vec<usize>,
    pub radius: usize,
}

/// Convenience constructors for the small graphs used throughout the tests
/// and examples.
pub mod graphs {
    use super::Structure;

    pub fn path(n: usize) -> Structure {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Structure::graph(n, &edges).unwrap()
    }

    pub fn cycle(n: usize) -> Structure {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Structure::graph(n, &edges).unwrap()
    }

    pub fn complete(n: usize) -> Structure {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        Structure::graph(n, &edges).unwrap()
    }

    /// `K_{1,m}` with centre 0.
    pub fn star(m: usize) -> Structure {
        let edges: Vec<_> = (1..=m).map(|i| (0, i)).collect();
        Structure::graph(m + 1, &edges).unwrap()
    }

    pub fn edgeless(n: usize) -> Structure {
        Structure::graph(n, &[]).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::graphs::*;
    use super::*;

    fn bfs_oracle(s: &Structure, roots: &[usize], r: usize) -> Vec<usize> {
        // Repeated relaxation over the edge list.
        let edges = s.gaifman().edges();
        let mut dist = vec![usize::MAX; s.size()];
        for &v in roots {
            dist[v] = 0;
        }
        for _ in 0..s.size() {
            for &(u, v) in &edges {
                if dist[u] != usize::MAX && dist[u] + 1 < dist[v] {
                    dist[v] = dist[u] + 1;
                }
                if dist[v] != usize::MAX && dist[v] + 1 < dist[u] {
                    dist[u] = dist[v] + 1;
                }
            }
        }
        (0..s.size()).filter(|&v| dist[v] <= r).collect()
    }

    #[test]
    fn gaifman_of_single_binary_tuple() {
        let sig = Signature::new([("E".to_string(), 2)], []).unwrap();
        let s = Structure::new(sig, 2, vec![vec![vec![0, 1]]], vec![]).unwrap();
        assert_eq!(s.gaifman().edges(), vec![(0, 1)]);
    }

    #[test]
    fn gaifman_of_ternary_tuple_is_triangle() {
        let sig = Signature::new([("R".to_string(), 3)], []).unwrap();
        let s = Structure::new(sig, 3, vec![vec![vec![0, 1, 2]]], vec![]).unwrap();
        assert_eq!(s.gaifman().edges(), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn gaifman_of_empty_relations() {
        let s = edgeless(3);
        assert_eq!(s.gaifman().order(), 3);
        assert!(s.gaifman().edges().is_empty());
    }

    #[test]
    fn gaifman_of_graph_is_fixpoint() {
        let s = cycle(6);
        let adj = s.relation(0);
        for u in 0..6 {
            for v in 0..6 {
                assert_eq!(s.gaifman().has_edge(u, v), adj.contains(&[u, v]));
            }
        }
    }

    #[test]
    fn neighborhoods_on_path() {
        let p = path(3);
        assert_eq!(p.neighborhood(&[0], 1).unwrap(), bfs_oracle(&p, &[0], 1));
        assert_eq!(p.neighborhood(&[0], 1).unwrap(), vec![0, 1]);
        assert_eq!(p.neighborhood(&[0, 2], 1).unwrap(), vec![0, 1, 2]);
        assert_eq!(p.neighborhood(&[1], 0).unwrap(), vec![1]);
        assert!(matches!(
            p.neighborhood(&[3], 1),
            Err(Error::ElementOutOfRange { element: 3, size: 3 })
        ));
    }

    #[test]
    fn induced_substructures() {
        let k3 = complete(3);
        assert_eq!(k3.induced(&[0, 1, 2]).unwrap(), k3);
        assert_eq!(k3.induced(&[0, 1]).unwrap(), complete(2));
        assert_eq!(edgeless(5).induced(&[1, 3]).unwrap(), edgeless(2));
    }

    #[test]
    fn induced_rejects_constant_outside() {
        let s = path(3).with_constants(vec!["c".into()], &[2]).unwrap();
        assert_eq!(s.induced(&[0, 1]), Err(Error::ConstantOutside("c".into())));
        assert!(s.induced(&[1, 2]).is_ok());
    }

    #[test]
    fn balls_on_cycles() {
        let c5 = cycle(5);
        let b = c5.ball(&[2], 1).unwrap();
        assert_eq!(b.structure, path(3));
        assert_eq!(b.roots, vec![1]);
        let whole = c5.ball(&[0], 2).unwrap();
        assert_eq!(whole.structure, c5);
        let single = complete(1).ball(&[0], 5).unwrap();
        assert_eq!(single.structure.size(), 1);
        assert_eq!(single.roots, vec![0]);
    }

    #[test]
    fn max_degrees() {
        assert_eq!(cycle(5).max_degree(), 2);
        assert_eq!(complete(4).max_degree(), 3);
        assert_eq!(edgeless(3).max_degree(), 0);
        assert_eq!(edgeless(0).max_degree(), 0);
    }

    #[test]
    fn adj_is_normalised() {
        let s = Structure::graph(3, &[(0, 1), (1, 1), (2, 1)]).unwrap();
        assert_eq!(s.relation(0).tuples().len(), 4);
        assert!(s.relation(0).contains(&[1, 0]));
        assert!(!s.relation(0).contains(&[1, 1]));
    }

    #[test]
    fn signature_rejects_duplicates() {
        let r = Signature::new([("R".to_string(), 1), ("R".to_string(), 2)], []);
        assert_eq!(r, Err(Error::DuplicateSymbol("R".into())));
        let r = Signature::new([("R".to_string(), 0)], []);
        assert_eq!(r, Err(Error::ZeroArity("R".into())));
    }

    #[test]
    fn ball_never_exceeds_radius() {
        let s = crate::structure::graphs::cycle(12);
        for v in 0..12 {
            for r in 0..4 {
                let got = s.neighborhood(&[v], r).unwrap();
                assert_eq!(got, bfs_oracle(&s, &[v], r));
            }
        }
    }
}
