//! The De Bruijn graphing and its finite counterparts.
//!
//! The space has three rows of height 1. Row 0 carries the base line: the
//! baker-type map `f` shifts the binary digits of `x` into `y`, so along
//! an orbit the first digit of `x` reads off a two-sided bit sequence. `T1`
//! pairs each base point with a pendant in row 1. `T2` attaches the row-2
//! point to the pendant when the current bit is 0 and to the base point when
//! it is 1. The finite graphs use the same gadget along a cyclic De Bruijn
//! sequence.

use super::{AffineRule, Box2, Coord, Graphing, MapKind, PiecewiseMap};
use crate::error::{Error, Result};
use crate::structure::Structure;

/// Binary De Bruijn sequence of order `n` (the lexicographically least one,
/// by concatenating Lyndon words whose length divides `n`).
pub fn debruijn_sequence(n: usize) -> Result<Vec<u8>> {
    if !(1..=20).contains(&n) {
        return Err(Error::DebruijnOrder(n));
    }
    let mut a = vec![0u8; n + 1];
    let mut seq = Vec::with_capacity(1 << n);
    fn step(t: usize, p: usize, n: usize, a: &mut Vec<u8>, seq: &mut Vec<u8>) {
        if t > n {
            if n.is_multiple_of(p) {
                seq.extend_from_slice(&a[1..=p]);
            }
            return;
        }
        a[t] = a[t - p];
        step(t + 1, p, n, a, seq);
        if a[t - p] == 0 {
            a[t] = 1;
            step(t + 1, t, n, a, seq);
        }
    }
    step(1, 1, n, &mut a, &mut seq);
    Ok(seq)
}

/// Whether every `n`-bit word occurs exactly once as a cyclic window.
pub fn is_debruijn(seq: &[u8], n: usize) -> bool {
    if n == 0 || n >= usize::BITS as usize || seq.len() != 1 << n || seq.iter().any(|&b| b > 1) {
        return false;
    }
    let mut seen = vec![false; seq.len()];
    for i in 0..seq.len() {
        let word = (0..n).fold(0usize, |acc, j| (acc << 1) | seq[(i + j) % seq.len()] as usize);
        if std::mem::replace(&mut seen[word], true) {
            return false;
        }
    }
    true
}

/// Finite graph of order `3·2^n`: base cycle `u_i ~ u_{i+1}`, pendant
/// `u_i ~ w_i`, and `z_i` attached to `w_i` if `s_i = 0`, to `u_i` if
/// `s_i = 1`. Vertices are numbered `u_i = i`, `w_i = 2^n + i`,
/// `z_i = 2·2^n + i`.
pub fn debruijn_graph(n: usize) -> Result<Structure> {
    let s = debruijn_sequence(n)?;
    let len = s.len();
    let mut edges = Vec::with_capacity(3 * len);
    for (i, &bit) in s.iter().enumerate() {
        let (u, w, z) = (i, len + i, 2 * len + i);
        edges.push((u, (i + 1) % len));
        edges.push((u, w));
        edges.push((if bit == 0 { w } else { u }, z));
    }
    Structure::graph(3 * len, &edges)
}

fn q(n: i128, d: i128) -> Coord {
    Coord::new(n, d)
}

fn rect(x0: Coord, x1: Coord, y0: i128, y1: i128) -> Box2 {
    Box2::new(x0, x1, q(y0, 1), q(y1, 1))
}

/// The graphing on `[0,1) × [0,3)` generated by
///
/// ```text
/// f(x,y)  = (2x, y/2)            x < 1/2, y < 1
///           (2x - 1, (y+1)/2)    x ≥ 1/2, y < 1
/// T1(x,y) = (x, y+1)             y < 1
///           (x, y-1)             1 ≤ y < 2
/// T2(x,y) = (x, y+1)             x < 1/2, 1 ≤ y < 2
///           (x, y+2)             x ≥ 1/2, y < 1
///           (x, y-1)             x < 1/2, y ≥ 2
///           (x, y-2)             x ≥ 1/2, y ≥ 2
/// ```
///
/// and the identity elsewhere.
pub fn debruijn_graphing() -> Graphing {
    let (zero, half, one) = (q(0, 1), q(1, 2), q(1, 1));
    let space = rect(zero, one, 0, 3);
    let shift = |dy: i128| AffineRule::new(one, zero, one, q(dy, 1));
    let f = PiecewiseMap::new(
        "f",
        MapKind::General,
        vec![
            (rect(zero, half, 0, 1), AffineRule::new(q(2, 1), zero, half, zero)),
            (rect(half, one, 0, 1), AffineRule::new(q(2, 1), q(-1, 1), half, half)),
        ],
        &space,
    )
    .expect("f is a measure-preserving bijection");
    let t1 = PiecewiseMap::new(
        "T1",
        MapKind::Involution,
        vec![(rect(zero, one, 0, 1), shift(1)), (rect(zero, one, 1, 2), shift(-1))],
        &space,
    )
    .expect("T1 is an involution");
    let t2 = PiecewiseMap::new(
        "T2",
        MapKind::Involution,
        vec![
            (rect(zero, half, 1, 2), shift(1)),
            (rect(half, one, 0, 1), shift(2)),
            (rect(zero, half, 2, 3), shift(-1)),
            (rect(half, one, 2, 3), shift(-2)),
        ],
        &space,
    )
    .expect("T2 is an involution");
    Graphing::new(space, vec![f, t1, t2], 4).expect("non-empty space")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphing::Point;

    #[test]
    fn sequences_have_the_window_property() {
        for n in 1..=16 {
            let s = debruijn_sequence(n).unwrap();
            assert_eq!(s.len(), 1 << n);
            assert!(is_debruijn(&s, n), "order {n}");
        }
        assert_eq!(debruijn_sequence(3).unwrap(), vec![0, 0, 0, 1, 0, 1, 1, 1]);
        assert!(is_debruijn(&[0, 0, 1, 1], 2));
        assert!(!is_debruijn(&[0, 1, 0, 1], 2));
        assert_eq!(debruijn_sequence(0), Err(Error::DebruijnOrder(0)));
        assert_eq!(debruijn_sequence(21), Err(Error::DebruijnOrder(21)));
    }

    #[test]
    fn graph_shape() {
        for n in 1..=12 {
            let g = debruijn_graph(n).unwrap();
            assert_eq!(g.size(), 3 << n);
            assert!(g.max_degree() <= 4);
        }
        assert_eq!(debruijn_graph(0), Err(Error::DebruijnOrder(0)));
    }

    #[test]
    fn displayed_maps() {
        let g = debruijn_graphing();
        let f = &g.maps()[0];
        assert_eq!(
            f.apply(&Point::new(q(1, 4), q(1, 2))).unwrap(),
            Point::new(q(1, 2), q(1, 4))
        );
        assert_eq!(
            f.apply(&Point::new(q(3, 4), q(1, 2))).unwrap(),
            Point::new(q(1, 2), q(3, 4))
        );
        let p = Point::new(q(3, 4), q(5, 2));
        assert_eq!(f.apply(&p).unwrap(), p);
        for (i, m) in g.maps().iter().enumerate().skip(1) {
            for k in 0..60 {
                let p = Point::new(q(k * 7 % 64, 64), q(k * 13 % 192, 64));
                assert_eq!(m.apply(&m.apply(&p).unwrap()).unwrap(), p, "map {i}");
            }
        }
    }

    #[test]
    fn rational_orbit_closes_up() {
        let g = debruijn_graphing();
        let p = Point::new(q(1, 15), q(8, 15));
        let (component, points) = g.component(&p, 1000).unwrap().unwrap();
        assert_eq!(component.size(), 12);
        assert_eq!(points.iter().filter(|p| p.y < q(1, 1)).count(), 4);
        let generic = Point::new(q(0x5_6789, 1 << 20), q(0x3_4321, 1 << 20));
        assert!(g.component(&generic, 200).unwrap().is_none());
    }

    #[test]
    fn generic_balls_follow_the_gadget() {
        let g = debruijn_graphing();
        // x = 0.1011..., so the bits ahead are 1, 0, 1, 1
        let p = Point::new(q(0b1011, 16) + q(1, 1 << 40), q(1, 3));
        let (ball, _) = g.ball(&p, 2).unwrap();
        let finite = debruijn_graph(10).unwrap();
        let code = crate::local::canonical_code(&ball);
        let dist = crate::local::ball_distribution(&finite, 2).unwrap();
        assert!(dist.frequencies.contains_key(&code));
        assert_eq!(g.ball(&p, 0).unwrap().0.structure.size(), 1);
    }
}
