//! Graphings on a rectangle of exact rational points.
//!
//! Edges come from piecewise affine maps: every point `p` is joined to
//! `m(p)` and, for maps that are not involutions, to `m⁻¹(p)`. Balls and
//! components are explored exactly, so distinct points are never merged by
//! rounding.

mod debruijn;
mod spec;
mod stats;

use std::collections::{HashMap, VecDeque};
use std::fmt;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Zero};

use crate::error::{Error, Result};
use crate::structure::{RootedBall, Structure};

pub use debruijn::{debruijn_graph, debruijn_graphing, debruijn_sequence, is_debruijn};
pub use spec::parse_graphing;
pub use stats::{
    clean, graphing_ball_stats, hanf_check, sample_root, stats_from_points, BallStatistics, HanfReport, HanfRow,
    SampledBallStats, DEFAULT_RESOLUTION, DEFAULT_THRESHOLD,
};

pub type Coord = Ratio<i128>;

fn ovf<T>(x: Option<T>) -> Result<T> {
    x.ok_or(Error::CoordinateOverflow)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub x: Coord,
    pub y: Coord,
}

impl Point {
    pub fn new(x: Coord, y: Coord) -> Self {
        Point { x, y }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Half-open box `[x0,x1) × [y0,y1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Box2 {
    pub x0: Coord,
    pub x1: Coord,
    pub y0: Coord,
    pub y1: Coord,
}

impl Box2 {
    pub fn new(x0: Coord, x1: Coord, y0: Coord, y1: Coord) -> Self {
        Box2 { x0, x1, y0, y1 }
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.x0 <= p.x && p.x < self.x1 && self.y0 <= p.y && p.y < self.y1
    }

    pub fn is_empty(&self) -> bool {
        self.x0 >= self.x1 || self.y0 >= self.y1
    }

    pub fn measure(&self) -> Coord {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    fn within(&self, outer: &Box2) -> bool {
        outer.x0 <= self.x0 && self.x1 <= outer.x1 && outer.y0 <= self.y0 && self.y1 <= outer.y1
    }

    fn overlaps(&self, other: &Box2) -> bool {
        self.x0 < other.x1 && other.x0 < self.x1 && self.y0 < other.y1 && other.y0 < self.y1
    }
}

/// `(x, y) ↦ (a·x + b, c·y + d)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineRule {
    pub a: Coord,
    pub b: Coord,
    pub c: Coord,
    pub d: Coord,
}

impl AffineRule {
    pub fn new(a: Coord, b: Coord, c: Coord, d: Coord) -> Self {
        AffineRule { a, b, c, d }
    }

    pub fn apply(&self, p: &Point) -> Result<Point> {
        Ok(Point {
            x: ovf(ovf(self.a.checked_mul(&p.x))?.checked_add(&self.b))?,
            y: ovf(ovf(self.c.checked_mul(&p.y))?.checked_add(&self.d))?,
        })
    }

    pub fn invert(&self, p: &Point) -> Result<Point> {
        Ok(Point {
            x: ovf(ovf(p.x.checked_sub(&self.b))?.checked_div(&self.a))?,
            y: ovf(ovf(p.y.checked_sub(&self.d))?.checked_div(&self.c))?,
        })
    }

    /// Image of a box; requires positive scale factors.
    fn image(&self, r: &Box2) -> Box2 {
        Box2 {
            x0: self.a * r.x0 + self.b,
            x1: self.a * r.x1 + self.b,
            y0: self.c * r.y0 + self.d,
            y1: self.c * r.y1 + self.d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub region: Box2,
    pub rule: AffineRule,
    image: Box2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    General,
    Involution,
}

/// A measure-preserving bijection of the space, given by affine rules on
/// disjoint boxes and the identity elsewhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewiseMap {
    name: String,
    kind: MapKind,
    pieces: Vec<Piece>,
}

/// Every cell of the grid spanned by the boundaries of `boxes`, as its
/// lower-left corner.
fn grid_cells(boxes: &[&Box2]) -> Vec<Point> {
    let mut xs: Vec<Coord> = boxes.iter().flat_map(|b| [b.x0, b.x1]).collect();
    let mut ys: Vec<Coord> = boxes.iter().flat_map(|b| [b.y0, b.y1]).collect();
    xs.sort();
    xs.dedup();
    ys.sort();
    ys.dedup();
    let mut out = Vec::new();
    for x in xs.windows(2) {
        for y in ys.windows(2) {
            out.push(Point::new(x[0], y[0]));
        }
    }
    out
}

impl PiecewiseMap {
    /// Validates and builds a map on `space` from `(region, rule)` pairs.
    pub fn new(name: &str, kind: MapKind, rules: Vec<(Box2, AffineRule)>, space: &Box2) -> Result<Self> {
        let invalid = |reason: String| Error::InvalidMap {
            map: name.to_string(),
            reason,
        };
        let mut pieces = Vec::with_capacity(rules.len());
        for (i, (region, rule)) in rules.into_iter().enumerate() {
            if region.is_empty() {
                return Err(invalid(format!("piece {i} has an empty region")));
            }
            if !region.within(space) {
                return Err(invalid(format!("piece {i} leaves the space")));
            }
            if rule.a <= Coord::zero() || rule.c <= Coord::zero() {
                return Err(invalid(format!("piece {i} needs positive scale factors")));
            }
            if rule.a * rule.c != Coord::one() {
                return Err(invalid(format!(
                    "piece {i} does not preserve measure (a·c = {})",
                    rule.a * rule.c
                )));
            }
            let image = rule.image(&region);
            if !image.within(space) {
                return Err(invalid(format!("piece {i} maps outside the space")));
            }
            pieces.push(Piece { region, rule, image });
        }
        for i in 0..pieces.len() {
            for j in 0..i {
                if pieces[i].region.overlaps(&pieces[j].region) {
                    return Err(invalid(format!("regions of pieces {j} and {i} overlap")));
                }
                if pieces[i].image.overlaps(&pieces[j].image) {
                    return Err(invalid(format!("images of pieces {j} and {i} overlap")));
                }
            }
        }
        // Outside the regions the map is the identity, so it is a bijection
        // iff the images tile exactly the union of the regions.
        let all: Vec<&Box2> = pieces.iter().flat_map(|p| [&p.region, &p.image]).collect();
        for cell in grid_cells(&all) {
            let in_region = pieces.iter().any(|p| p.region.contains(&cell));
            let in_image = pieces.iter().any(|p| p.image.contains(&cell));
            if in_region != in_image {
                return Err(invalid(format!("images do not cover the regions exactly near {cell}")));
            }
        }
        let map = PiecewiseMap {
            name: name.to_string(),
            kind,
            pieces,
        };
        if kind == MapKind::Involution {
            for piece in &map.pieces {
                let p = Point::new(piece.region.x0, piece.region.y0);
                if map.apply(&map.apply(&p)?)? != p {
                    return Err(invalid(format!("not an involution at {p}")));
                }
            }
        }
        Ok(map)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn apply(&self, p: &Point) -> Result<Point> {
        match self.pieces.iter().find(|piece| piece.region.contains(p)) {
            Some(piece) => piece.rule.apply(p),
            None => Ok(p.clone()),
        }
    }

    pub fn preimage(&self, p: &Point) -> Result<Point> {
        match self.pieces.iter().find(|piece| piece.image.contains(p)) {
            Some(piece) => piece.rule.invert(p),
            None => Ok(p.clone()),
        }
    }
}

/// A graphing: a space with finitely many generating maps and a declared
/// degree bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graphing {
    space: Box2,
    maps: Vec<PiecewiseMap>,
    degree_bound: usize,
}

impl Graphing {
    pub fn new(space: Box2, maps: Vec<PiecewiseMap>, degree_bound: usize) -> Result<Self> {
        if space.is_empty() {
            return Err(Error::Format("graphing space is empty".into()));
        }
        Ok(Graphing {
            space,
            maps,
            degree_bound,
        })
    }

    pub fn space(&self) -> &Box2 {
        &self.space
    }

    pub fn maps(&self) -> &[PiecewiseMap] {
        &self.maps
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    /// Distinct neighbours of `p`, in generator order.
    pub fn neighbors(&self, p: &Point) -> Result<Vec<Point>> {
        let mut out: Vec<Point> = Vec::with_capacity(2 * self.maps.len());
        let add = |q: Point, out: &mut Vec<Point>| {
            if q != *p && !out.contains(&q) {
                out.push(q);
            }
        };
        for m in &self.maps {
            let q = m.apply(p)?;
            if m.kind == MapKind::Involution {
                if m.apply(&q)? != *p {
                    return Err(Error::InvalidMap {
                        map: m.name.clone(),
                        reason: format!("not an involution at {p}"),
                    });
                }
                add(q, &mut out);
            } else {
                add(q, &mut out);
                add(m.preimage(p)?, &mut out);
            }
        }
        if out.len() > self.degree_bound {
            return Err(Error::DegreeBoundExceeded {
                found: out.len(),
                bound: self.degree_bound,
            });
        }
        Ok(out)
    }

    /// Breadth-first exploration from `root` up to distance `radius` (all
    /// of the component if `None`), giving up after `limit` vertices.
    /// Returns the points in discovery order and the induced edges.
    fn explore(
        &self,
        root: &Point,
        radius: Option<usize>,
        limit: usize,
    ) -> Result<Option<(Vec<Point>, Vec<(usize, usize)>)>> {
        let mut index: HashMap<Point, usize> = HashMap::new();
        let mut points = vec![root.clone()];
        let mut dist = vec![0usize];
        index.insert(root.clone(), 0);
        let mut edges = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let frontier = radius.is_some_and(|r| dist[i] >= r);
            for q in self.neighbors(&points[i].clone())? {
                let j = match index.get(&q) {
                    Some(&j) => j,
                    None if frontier => continue,
                    None => {
                        if points.len() >= limit {
                            return Ok(None);
                        }
                        let j = points.len();
                        index.insert(q.clone(), j);
                        points.push(q);
                        dist.push(dist[i] + 1);
                        queue.push_back(j);
                        j
                    }
                };
                edges.push((i.min(j), i.max(j)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Some((points, edges)))
    }

    /// The radius-`r` ball around `root`, as a rooted graph with the root at
    /// index 0, together with the points it consists of.
    pub fn ball(&self, root: &Point, r: usize) -> Result<(RootedBall, Vec<Point>)> {
        let (points, edges) = self
            .explore(root, Some(r), usize::MAX)?
            .expect("no vertex limit");
        let structure = Structure::graph(points.len(), &edges)?;
        Ok((
            RootedBall {
                structure,
                roots: vec![0],
                radius: r,
            },
            points,
        ))
    }

    /// The whole connected component of `root` if it has at most `limit`
    /// vertices.
    pub fn component(&self, root: &Point, limit: usize) -> Result<Option<(Structure, Vec<Point>)>> {
        Ok(match self.explore(root, None, limit)? {
            Some((points, edges)) => Some((Structure::graph(points.len(), &edges)?, points)),
            None => None,
        })
    }
}

/// The radius-`r` ball of `g` around `p`.
pub fn graphing_ball(g: &Graphing, p: &Point, r: usize) -> Result<RootedBall> {
    Ok(g.ball(p, r)?.0)
}
