//! Canonical forms of finite structures with pinned elements.
//!
//! Colour refinement over relation incidences, then individualisation of the
//! first non-singleton cell with backtracking. Among all leaves the one with
//! the lexicographically smallest relabelled encoding wins. Leaves with equal
//! encodings yield automorphisms, which prune siblings in the same orbit.

use crate::structure::Structure;

/// Canonical encoding of a structure together with the labelling that
/// produced it (`labeling[v]` is the canonical label of element `v`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalForm {
    pub code: Vec<u8>,
    pub labeling: Vec<usize>,
}

/// At most this many automorphisms are remembered for pruning.
const MAX_AUTOMORPHISMS: usize = 64;

struct Incidence {
    rel: u32,
    pos: u32,
    tuple: usize,
}

struct Search<'a> {
    s: &'a Structure,
    pinned: &'a [usize],
    tuples: Vec<(u32, &'a [usize])>,
    incidences: Vec<Vec<Incidence>>,
    best: Option<(Vec<u32>, Vec<usize>)>,
    automorphisms: Vec<Vec<usize>>,
    /// Children already searched at each level of the current path.
    explored: Vec<Vec<usize>>,
}

/// Replaces colours by the rank of their key, keeping ranks dense.
fn rank_by<K: Ord>(keys: Vec<(K, usize)>, n: usize) -> (Vec<u32>, usize) {
    let mut keys = keys;
    keys.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    let mut colors = vec![0u32; n];
    let mut rank = 0u32;
    for i in 0..keys.len() {
        if i > 0 && keys[i].0 != keys[i - 1].0 {
            rank += 1;
        }
        colors[keys[i].1] = rank;
    }
    (colors, if n == 0 { 0 } else { rank as usize + 1 })
}

fn count_colors(colors: &[u32]) -> usize {
    colors.iter().max().map_or(0, |&m| m as usize + 1)
}

impl<'a> Search<'a> {
    fn new(s: &'a Structure, pinned: &'a [usize]) -> Self {
        let mut tuples = Vec::new();
        let mut incidences: Vec<Vec<Incidence>> = (0..s.size()).map(|_| Vec::new()).collect();
        for (r, rel) in s.relations().iter().enumerate() {
            for t in rel.tuples() {
                let idx = tuples.len();
                tuples.push((r as u32, t.as_slice()));
                for (pos, &v) in t.iter().enumerate() {
                    incidences[v].push(Incidence {
                        rel: r as u32,
                        pos: pos as u32,
                        tuple: idx,
                    });
                }
            }
        }
        Search {
            s,
            pinned,
            tuples,
            incidences,
            best: None,
            automorphisms: Vec::new(),
            explored: Vec::new(),
        }
    }

    fn initial_colors(&self) -> Vec<u32> {
        let n = self.s.size();
        let keys = (0..n)
            .map(|v| {
                let pins: Vec<usize> = (0..self.pinned.len()).filter(|&i| self.pinned[i] == v).collect();
                let consts: Vec<usize> = (0..self.s.constants().len())
                    .filter(|&i| self.s.constants()[i] == v)
                    .collect();
                ((pins, consts), v)
            })
            .collect();
        rank_by(keys, n).0
    }

    /// Refines to the coarsest stable colouring below `colors`.
    fn refine(&self, mut colors: Vec<u32>) -> Vec<u32> {
        let n = self.s.size();
        let mut k = count_colors(&colors);
        loop {
            let keys = (0..n)
                .map(|v| {
                    let mut items: Vec<Vec<u32>> = self.incidences[v]
                        .iter()
                        .map(|inc| {
                            let (_, t) = self.tuples[inc.tuple];
                            let mut item = Vec::with_capacity(t.len() + 2);
                            item.push(inc.rel);
                            item.push(inc.pos);
                            item.extend(t.iter().map(|&u| colors[u]));
                            item
                        })
                        .collect();
                    items.sort_unstable();
                    let mut key = Vec::with_capacity(1 + items.iter().map(Vec::len).sum::<usize>());
                    key.push(colors[v]);
                    for item in items {
                        key.extend(item);
                    }
                    (key, v)
                })
                .collect();
            let (next, nk) = rank_by(keys, n);
            colors = next;
            if nk == k {
                return colors;
            }
            k = nk;
        }
    }

    fn encode(&self, lab: &[usize]) -> Vec<u32> {
        let mut out = vec![self.s.size() as u32, self.pinned.len() as u32];
        out.extend(self.pinned.iter().map(|&v| lab[v] as u32));
        out.push(self.s.constants().len() as u32);
        out.extend(self.s.constants().iter().map(|&v| lab[v] as u32));
        for rel in self.s.relations() {
            let mut ts: Vec<Vec<u32>> = rel
                .tuples()
                .iter()
                .map(|t| t.iter().map(|&v| lab[v] as u32).collect())
                .collect();
            ts.sort_unstable();
            out.push(ts.len() as u32);
            for t in ts {
                out.extend(t);
            }
        }
        out
    }

    /// Records a leaf. If it matches the best leaf, the resulting
    /// automorphism may show that the current subtree at some level mirrors
    /// an explored sibling; that level is returned so the search can
    /// abandon everything below it.
    fn leaf(&mut self, colors: &[u32], path: &[usize]) -> Option<usize> {
        let lab: Vec<usize> = colors.iter().map(|&c| c as usize).collect();
        let enc = self.encode(&lab);
        match &self.best {
            Some((best, _)) if enc > *best => None,
            Some((best, best_lab)) if enc == *best => {
                let mut inv = vec![0; lab.len()];
                for (v, &l) in best_lab.iter().enumerate() {
                    inv[l] = v;
                }
                let sigma: Vec<usize> = lab.iter().map(|&l| inv[l]).collect();
                let jump = (0..path.len()).find(|&level| {
                    path[..level].iter().all(|&p| sigma[p] == p)
                        && self.explored[level].contains(&sigma[path[level]])
                });
                if self.automorphisms.len() < MAX_AUTOMORPHISMS && sigma.iter().enumerate().any(|(v, &w)| v != w) {
                    self.automorphisms.push(sigma);
                }
                jump
            }
            _ => {
                self.best = Some((enc, lab));
                None
            }
        }
    }

    /// Union-find orbits of the known automorphisms fixing `path` pointwise.
    fn orbits(&self, path: &[usize]) -> Vec<usize> {
        let n = self.s.size();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for sigma in &self.automorphisms {
            if path.iter().any(|&p| sigma[p] != p) {
                continue;
            }
            for (v, &w) in sigma.iter().enumerate() {
                let (a, b) = (find(&mut parent, v), find(&mut parent, w));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        (0..n).map(|v| find(&mut parent, v)).collect()
    }

    fn visit(&mut self, colors: Vec<u32>, path: &mut Vec<usize>) -> Option<usize> {
        let colors = self.refine(colors);
        let n = self.s.size();
        let k = count_colors(&colors);
        if k == n {
            return self.leaf(&colors, path);
        }
        let mut sizes = vec![0usize; k];
        for &c in &colors {
            sizes[c as usize] += 1;
        }
        let target = sizes.iter().position(|&s| s > 1).expect("non-discrete colouring") as u32;
        let cell: Vec<usize> = (0..n).filter(|&v| colors[v] == target).collect();
        let level = path.len();
        self.explored.push(Vec::new());
        for &v in &cell {
            if !self.explored[level].is_empty() {
                let orbit = self.orbits(path);
                if self.explored[level].iter().any(|&e| orbit[e] == orbit[v]) {
                    continue;
                }
            }
            let child: Vec<u32> = colors
                .iter()
                .enumerate()
                .map(|(u, &c)| match c.cmp(&target) {
                    std::cmp::Ordering::Less => c,
                    std::cmp::Ordering::Equal if u == v => c,
                    _ => c + 1,
                })
                .collect();
            path.push(v);
            let jump = self.visit(child, path);
            path.pop();
            self.explored[level].push(v);
            if let Some(to) = jump {
                if to < level {
                    self.explored.pop();
                    return Some(to);
                }
            }
        }
        self.explored.pop();
        None
    }
}

fn push_varint(out: &mut Vec<u8>, mut x: u64) {
    loop {
        let byte = (x & 0x7f) as u8;
        x >>= 7;
        if x == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

/// Canonical form of `s` with the elements of `pinned` fixed in order.
/// Two inputs get equal codes iff there is an isomorphism between them that
/// maps `pinned` onto `pinned` position by position.
pub fn canonical_form(s: &Structure, pinned: &[usize]) -> CanonicalForm {
    let mut search = Search::new(s, pinned);
    let init = search.initial_colors();
    search.visit(init, &mut Vec::new());
    let (enc, labeling) = search.best.take().unwrap_or_default();
    let mut code = Vec::new();
    let sig = s.signature();
    push_varint(&mut code, sig.relations().len() as u64);
    for r in sig.relations() {
        push_varint(&mut code, r.name.len() as u64);
        code.extend(r.name.as_bytes());
        push_varint(&mut code, r.arity as u64);
    }
    push_varint(&mut code, sig.constants().len() as u64);
    for &x in &enc {
        push_varint(&mut code, x as u64);
    }
    CanonicalForm { code, labeling }
}

/// Isomorphism test through canonical forms.
pub fn isomorphic(a: &Structure, b: &Structure) -> bool {
    a.signature() == b.signature()
        && a.size() == b.size()
        && canonical_form(a, &[]).code == canonical_form(b, &[]).code
}
