//! Ehrenfeucht–Fraïssé equivalence through rank-`k` types.
//!
//! The rank-0 type of a tuple is its atomic type. The rank-`j+1` type of `ā`
//! is its atomic type together with the set of rank-`j` types of all
//! extensions `āb`. Duplicator wins the `k`-round game on `(A, B)` iff the
//! rank-`k` types of the empty tuple coincide. Types are interned in a
//! [`TypeTable`] so that they are comparable across structures.

use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::structure::Structure;

pub type TypeId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Key {
    /// Atomic type of the constants alone.
    Base(u128, SmallVec<[u8; 16]>),
    /// Atomic type of `āb` from the atomic type of `ā` and the facts that
    /// mention `b`.
    Row(TypeId, u128, SmallVec<[u8; 16]>),
    Extension(TypeId, Vec<TypeId>),
}

/// Interner for atomic and higher-rank types.
#[derive(Debug, Default)]
pub struct TypeTable {
    ids: FxHashMap<Key, TypeId>,
    rows: FxHashMap<(TypeId, u128), TypeId>,
}

/// Bits for the facts over `elems` that mention some index `>= from`:
/// equalities first, then every relation tuple drawn from `elems` in
/// odometer order.
struct Bits {
    short: u128,
    len: usize,
    long: SmallVec<[u8; 16]>,
}

impl Bits {
    fn new() -> Self {
        Bits {
            short: 0,
            len: 0,
            long: SmallVec::new(),
        }
    }

    fn clear(&mut self) {
        self.short = 0;
        self.len = 0;
        self.long.clear();
    }

    #[inline]
    fn push(&mut self, bit: bool) {
        if self.len < 128 {
            self.short |= (bit as u128) << self.len;
        } else {
            let i = self.len - 128;
            if i.is_multiple_of(8) {
                self.long.push(0);
            }
            *self.long.last_mut().expect("pushed above") |= (bit as u8) << (i % 8);
        }
        self.len += 1;
    }
}

fn facts(s: &Structure, elems: &[usize], from: usize, out: &mut Bits) {
    let m = elems.len();
    for i in from..m {
        for j in 0..i {
            out.push(elems[i] == elems[j]);
        }
    }
    let mut pick: SmallVec<[usize; 4]> = SmallVec::new();
    for rel in s.relations() {
        let a = rel.arity();
        if a == 2 {
            for i in 0..m {
                for j in 0..m {
                    if i >= from || j >= from {
                        out.push(rel.contains(&[elems[i], elems[j]]));
                    }
                }
            }
            continue;
        }
        for mut idx in 0..m.pow(a as u32) {
            pick.clear();
            let mut fresh = false;
            for _ in 0..a {
                let pos = idx % m;
                fresh |= pos >= from;
                pick.push(elems[pos]);
                idx /= m;
            }
            if fresh {
                out.push(rel.contains(&pick));
            }
        }
    }
}

impl TypeTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of distinct types seen so far.
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn intern(&mut self, key: Key) -> TypeId {
        let next = self.ids.len() as TypeId;
        *self.ids.entry(key).or_insert(next)
    }

    fn row(&mut self, parent: TypeId, bits: &Bits) -> TypeId {
        if bits.len > 128 {
            return self.intern(Key::Row(parent, bits.short, bits.long.clone()));
        }
        if let Some(&id) = self.rows.get(&(parent, bits.short)) {
            return id;
        }
        let id = self.intern(Key::Row(parent, bits.short, SmallVec::new()));
        self.rows.insert((parent, bits.short), id);
        id
    }

    fn go(&mut self, s: &Structure, elems: &mut Vec<usize>, atomic: TypeId, k: usize) -> TypeId {
        if k == 0 {
            return atomic;
        }
        let m = elems.len();
        let mut children = Vec::with_capacity(s.size());
        let mut row = Bits::new();
        for b in 0..s.size() {
            elems.push(b);
            row.clear();
            facts(s, elems, m, &mut row);
            let child_atomic = self.row(atomic, &row);
            children.push(self.go(s, elems, child_atomic, k - 1));
            elems.pop();
        }
        children.sort_unstable();
        children.dedup();
        self.intern(Key::Extension(atomic, children))
    }

    /// Rank-`k` type of the empty tuple (the constants only) in `s`.
    pub fn sentence_type(&mut self, s: &Structure, k: usize) -> TypeId {
        let mut elems = s.constants().to_vec();
        let mut base = Bits::new();
        facts(s, &elems, 0, &mut base);
        let atomic = self.intern(Key::Base(base.short, base.long));
        self.go(s, &mut elems, atomic, k)
    }

    /// Rank-`j` types of the empty tuple for every `j <= k`.
    pub fn sentence_types(&mut self, s: &Structure, k: usize) -> Vec<TypeId> {
        (0..=k).map(|j| self.sentence_type(s, j)).collect()
    }
}

fn check_pair(a: &Structure, b: &Structure) -> Result<()> {
    if a.signature() != b.signature() {
        return Err(Error::SignatureMismatch);
    }
    Ok(())
}

/// Whether Duplicator wins the `k`-round game on `a` and `b`.
pub fn ef_equivalent(a: &Structure, b: &Structure, k: usize) -> Result<bool> {
    check_pair(a, b)?;
    let mut table = TypeTable::new();
    Ok(table.sentence_type(a, k) == table.sentence_type(b, k))
}

/// Least `k <= kmax` at which Spoiler wins, if any.
pub fn distinguishing_rank(a: &Structure, b: &Structure, kmax: usize) -> Result<Option<usize>> {
    check_pair(a, b)?;
    let mut table = TypeTable::new();
    let ta = table.sentence_types(a, kmax);
    let tb = table.sentence_types(b, kmax);
    Ok((0..=kmax).find(|&k| ta[k] != tb[k]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{graphs, Signature};
    use proptest::prelude::*;

    /// Direct game search over partial maps, no memoisation.
    fn duplicator_wins(a: &Structure, b: &Structure, pa: &mut Vec<usize>, pb: &mut Vec<usize>, k: usize) -> bool {
        let consistent = {
            let ga = a.gaifman();
            let gb = b.gaifman();
            (0..pa.len()).all(|i| {
                (0..pa.len()).all(|j| {
                    (pa[i] == pa[j]) == (pb[i] == pb[j]) && ga.has_edge(pa[i], pa[j]) == gb.has_edge(pb[i], pb[j])
                })
            })
        };
        if !consistent {
            return false;
        }
        if k == 0 {
            return true;
        }
        let spoiler_side = |x: &Structure, y: &Structure, px: &mut Vec<usize>, py: &mut Vec<usize>, swap: bool| {
            (0..x.size()).all(|u| {
                px.push(u);
                let ok = (0..y.size()).any(|v| {
                    py.push(v);
                    let w = if swap {
                        duplicator_wins(a, b, py, px, k - 1)
                    } else {
                        duplicator_wins(a, b, px, py, k - 1)
                    };
                    py.pop();
                    w
                });
                px.pop();
                ok
            })
        };
        spoiler_side(a, b, pa, pb, false) && spoiler_side(b, a, pb, pa, true)
    }

    fn oracle(a: &Structure, b: &Structure, k: usize) -> bool {
        duplicator_wins(a, b, &mut Vec::new(), &mut Vec::new(), k)
    }

    #[test]
    fn complete_graphs() {
        let (k2, k3) = (graphs::complete(2), graphs::complete(3));
        assert!(oracle(&k2, &k3, 2));
        assert!(!oracle(&k2, &k3, 3));
        assert!(ef_equivalent(&k2, &k3, 2).unwrap());
        assert!(!ef_equivalent(&k2, &k3, 3).unwrap());
        assert_eq!(distinguishing_rank(&k2, &k3, 5).unwrap(), Some(3));
        assert_eq!(distinguishing_rank(&k2, &k2, 4).unwrap(), None);
    }

    #[test]
    fn small_graphs_agree_with_game_search() {
        let pool = [
            graphs::complete(2),
            graphs::complete(3),
            graphs::cycle(4),
            graphs::cycle(5),
            graphs::cycle(6),
            graphs::path(4),
            graphs::star(3),
            graphs::edgeless(3),
        ];
        for a in &pool {
            for b in &pool {
                for k in 0..=3 {
                    assert_eq!(ef_equivalent(a, b, k).unwrap(), oracle(a, b, k));
                }
            }
        }
    }

    #[test]
    fn relations_and_constants_count() {
        let sig = Signature::new([("R".to_string(), 2)], ["c".to_string()]).unwrap();
        let a = Structure::new(sig.clone(), 2, vec![vec![vec![0, 1]]], vec![0]).unwrap();
        let b = Structure::new(sig.clone(), 2, vec![vec![vec![0, 1]]], vec![1]).unwrap();
        assert_eq!(distinguishing_rank(&a, &b, 3).unwrap(), Some(1));
        let c = Structure::new(sig, 2, vec![vec![vec![1, 0]]], vec![1]).unwrap();
        assert!(ef_equivalent(&a, &c, 3).unwrap());
        assert_eq!(
            ef_equivalent(&a, &graphs::path(2), 1),
            Err(Error::SignatureMismatch)
        );
    }

    fn arb_graph() -> impl Strategy<Value = Structure> {
        (1usize..6).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n), 0..8)
                .prop_map(move |edges| Structure::graph(n, &edges).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn monotone_symmetric_reflexive(a in arb_graph(), b in arb_graph()) {
            let mut prev = true;
            for k in 0..=3 {
                let eq = ef_equivalent(&a, &b, k).unwrap();
                prop_assert_eq!(eq, ef_equivalent(&b, &a, k).unwrap());
                prop_assert!(prev || !eq);
                prev = eq;
            }
            prop_assert!(ef_equivalent(&a, &a, 3).unwrap());
        }

        #[test]
        fn isomorphic_copies_are_equivalent(a in arb_graph(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut perm: Vec<usize> = (0..a.size()).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert!(ef_equivalent(&a, &a.permuted(&perm), 3).unwrap());
        }
    }
}
