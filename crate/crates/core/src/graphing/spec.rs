//! Text format for piecewise-affine graphings.
//!
//! ```text
//! # comment
//! space 0 1 0 3          # x0 x1 y0 y1, optional (default [0,1) x [0,3))
//! degree 4
//! map f general          # or: involution
//! piece 0 1/2 0 1  2 0 1/2 0      # x0 x1 y0 y1  a b c d
//! ```
//!
//! Each `piece` belongs to the most recent `map` and applies
//! `(x, y) ↦ (a·x + b, c·y + d)` on `[x0,x1) × [y0,y1)`.

use super::{AffineRule, Box2, Coord, Graphing, MapKind, PiecewiseMap};
use crate::error::{Error, Result};

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Format(format!("line {line}: {msg}"))
}

fn coord(tok: &str, line: usize) -> Result<Coord> {
    tok.parse::<Coord>()
        .map_err(|_| bad(line, format!("`{tok}` is not a rational number")))
}

pub fn parse_graphing(text: &str) -> Result<Graphing> {
    let mut space = Box2::new(Coord::from(0), Coord::from(1), Coord::from(0), Coord::from(3));
    let mut degree = None;
    let mut maps: Vec<(String, MapKind, Vec<(Box2, AffineRule)>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let toks: Vec<&str> = content.split_whitespace().collect();
        match toks.as_slice() {
            [] => {}
            ["space", rest @ ..] => {
                if !maps.is_empty() {
                    return Err(bad(line, "`space` must come before the maps"));
                }
                let [x0, x1, y0, y1] = rest else {
                    return Err(bad(line, "`space` takes x0 x1 y0 y1"));
                };
                space = Box2::new(coord(x0, line)?, coord(x1, line)?, coord(y0, line)?, coord(y1, line)?);
            }
            ["degree", d] => {
                degree = Some(d.parse::<usize>().map_err(|_| bad(line, "degree must be a non-negative integer"))?);
            }
            ["map", name, kind] => {
                let kind = match *kind {
                    "general" => MapKind::General,
                    "involution" => MapKind::Involution,
                    other => return Err(bad(line, format!("unknown map kind `{other}`"))),
                };
                maps.push((name.to_string(), kind, Vec::new()));
            }
            ["piece", rest @ ..] => {
                let Some(current) = maps.last_mut() else {
                    return Err(bad(line, "`piece` before any `map`"));
                };
                if rest.len() != 8 {
                    return Err(bad(line, "`piece` takes x0 x1 y0 y1 a b c d"));
                }
                let v = rest.iter().map(|t| coord(t, line)).collect::<Result<Vec<_>>>()?;
                current.2.push((
                    Box2::new(v[0], v[1], v[2], v[3]),
                    AffineRule::new(v[4], v[5], v[6], v[7]),
                ));
            }
            [other, ..] => return Err(bad(line, format!("unknown directive `{other}`"))),
        }
    }
    let degree = degree.ok_or_else(|| Error::Format("missing `degree` line".into()))?;
    let maps = maps
        .into_iter()
        .map(|(name, kind, pieces)| PiecewiseMap::new(&name, kind, pieces, &space))
        .collect::<Result<Vec<_>>>()?;
    Graphing::new(space, maps, degree)
}
