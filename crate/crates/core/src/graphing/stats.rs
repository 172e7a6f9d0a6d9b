//! Sampled ball statistics of graphings, cleaning, and Hanf-style
//! comparison with finite graphs.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Box2, Coord, Graphing, Point};
use crate::error::{Error, Result};
use crate::local::{canonical_code, BallCode, BallDistribution};
use crate::structure::RootedBall;

/// Fractional bits per axis of sampled roots.
pub const DEFAULT_RESOLUTION: u32 = 64;

/// `θ = 10^-4`.
pub const DEFAULT_THRESHOLD: (u64, u64) = (1, 10_000);

fn unit_dyadic(bits: u32, rng: &mut ChaCha8Rng) -> Coord {
    let bits = bits.clamp(1, 64);
    let k = if bits == 64 {
        rng.gen::<u64>()
    } else {
        rng.gen_range(0..(1u64 << bits))
    };
    Coord::new(k as i128, 1i128 << bits)
}

fn scale(space: &Box2, ux: Coord, uy: Coord) -> Point {
    Point::new(
        space.x0 + (space.x1 - space.x0) * ux,
        space.y0 + (space.y1 - space.y0) * uy,
    )
}

/// The `index`-th root of the stream for `seed`: a uniform point of the
/// space on the dyadic grid with `bits` fractional bits per unit axis.
pub fn sample_root(g: &Graphing, seed: u64, index: u64, bits: u32) -> Point {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let ux = unit_dyadic(bits, &mut rng);
    let uy = unit_dyadic(bits, &mut rng);
    scale(g.space(), ux, uy)
}

/// Anything that assigns frequencies to ball codes of one radius.
pub trait BallStatistics {
    fn radius(&self) -> usize;
    fn frequencies(&self) -> BTreeMap<BallCode, BigRational>;
}

impl BallStatistics for BallDistribution {
    fn radius(&self) -> usize {
        self.radius
    }

    fn frequencies(&self) -> BTreeMap<BallCode, BigRational> {
        self.frequencies.clone()
    }
}

/// Hit counts of ball codes over sampled roots.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledBallStats {
    pub radius: usize,
    pub samples: u64,
    pub seed: u64,
    pub counts: BTreeMap<BallCode, u64>,
    pub representatives: BTreeMap<BallCode, RootedBall>,
    /// Threshold of the last cleaning, if any.
    pub threshold: Option<BigRational>,
    /// Codes dropped by cleaning with their hit counts.
    pub removed: Vec<(BallCode, u64)>,
}

impl SampledBallStats {
    pub fn estimate(&self, code: &BallCode) -> BigRational {
        let hits = self.counts.get(code).copied().unwrap_or(0);
        BigRational::new(BigInt::from(hits), BigInt::from(self.samples))
    }

    fn from_balls(radius: usize, seed: u64, balls: Vec<(BallCode, RootedBall)>) -> Self {
        let mut counts: BTreeMap<BallCode, u64> = BTreeMap::new();
        let mut representatives = BTreeMap::new();
        let samples = balls.len() as u64;
        for (code, ball) in balls {
            *counts.entry(code.clone()).or_default() += 1;
            representatives.entry(code).or_insert(ball);
        }
        SampledBallStats {
            radius,
            samples,
            seed,
            counts,
            representatives,
            threshold: None,
            removed: Vec::new(),
        }
    }

    /// Pools the samples of two runs at the same radius.
    pub fn merge(&self, other: &SampledBallStats) -> Result<SampledBallStats> {
        if self.radius != other.radius {
            return Err(Error::RadiusMismatch(self.radius, other.radius));
        }
        let mut out = self.clone();
        out.samples += other.samples;
        for (code, &hits) in &other.counts {
            *out.counts.entry(code.clone()).or_default() += hits;
            out.representatives
                .entry(code.clone())
                .or_insert_with(|| other.representatives[code].clone());
        }
        Ok(out)
    }
}

impl BallStatistics for SampledBallStats {
    fn radius(&self) -> usize {
        self.radius
    }

    fn frequencies(&self) -> BTreeMap<BallCode, BigRational> {
        self.counts.keys().map(|c| (c.clone(), self.estimate(c))).collect()
    }
}

fn coded_ball(g: &Graphing, p: &Point, r: usize) -> Result<(BallCode, RootedBall)> {
    let ball = g.ball(p, r)?.0;
    Ok((canonical_code(&ball), ball))
}

/// Ball statistics of `samples` roots drawn from the stream for `seed`.
pub fn graphing_ball_stats(g: &Graphing, r: usize, samples: u64, seed: u64, bits: u32) -> Result<SampledBallStats> {
    if samples == 0 {
        return Err(Error::NoSamples);
    }
    let balls = (0..samples)
        .into_par_iter()
        .map(|i| coded_ball(g, &sample_root(g, seed, i, bits), r))
        .collect::<Result<Vec<_>>>()?;
    Ok(SampledBallStats::from_balls(r, seed, balls))
}

/// Ball statistics of explicitly chosen roots.
pub fn stats_from_points(g: &Graphing, r: usize, points: &[Point]) -> Result<SampledBallStats> {
    if points.is_empty() {
        return Err(Error::NoSamples);
    }
    let balls = points
        .par_iter()
        .map(|p| coded_ball(g, p, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(SampledBallStats::from_balls(r, 0, balls))
}

/// Drops every code whose estimated measure is below `theta` and
/// renormalises over the remaining samples.
pub fn clean(stats: &SampledBallStats, theta: &BigRational) -> Result<SampledBallStats> {
    if *theta <= BigRational::zero() || *theta >= BigRational::from_integer(1.into()) {
        return Err(Error::BadThreshold);
    }
    let mut out = stats.clone();
    out.threshold = Some(theta.clone());
    let (keep, drop): (Vec<_>, Vec<_>) = stats
        .counts
        .iter()
        .partition(|(code, _)| stats.estimate(code) >= *theta);
    if keep.is_empty() {
        return Err(Error::EverythingRemoved);
    }
    for (code, &hits) in drop {
        out.counts.remove(code);
        out.representatives.remove(code);
        out.removed.push((code.clone(), hits));
    }
    out.samples = out.counts.values().sum();
    Ok(out)
}

/// One ball code in a Hanf comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HanfRow {
    pub code: BallCode,
    pub left: u64,
    pub right: u64,
}

impl HanfRow {
    pub fn passes(&self) -> bool {
        self.left == self.right
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HanfReport {
    pub radius: usize,
    pub threshold: u64,
    pub scale: u64,
    pub rows: Vec<HanfRow>,
}

impl HanfReport {
    pub fn passes(&self) -> bool {
        self.rows.iter().all(HanfRow::passes)
    }

    pub fn failures(&self) -> impl Iterator<Item = &HanfRow> {
        self.rows.iter().filter(|r| !r.passes())
    }
}

/// `min(t, round(freq · scale))`.
fn truncated(freq: &BigRational, t: u64, scale: u64) -> u64 {
    let x = freq * BigRational::from_integer(BigInt::from(scale));
    let two = BigInt::from(2);
    let rounded = (x.numer() * &two + x.denom()).div_floor(&(x.denom() * &two));
    rounded.to_u64().unwrap_or(u64::MAX).min(t)
}

/// Compares `min(t, count)` per ball code, where counts are frequencies
/// scaled to `scale` vertices.
pub fn hanf_check<A: BallStatistics, B: BallStatistics>(a: &A, b: &B, t: u64, scale: u64) -> Result<HanfReport> {
    if a.radius() != b.radius() {
        return Err(Error::RadiusMismatch(a.radius(), b.radius()));
    }
    let fa = a.frequencies();
    let fb = b.frequencies();
    let zero = BigRational::zero();
    let mut codes: Vec<&BallCode> = fa.keys().chain(fb.keys()).collect();
    codes.sort();
    codes.dedup();
    let rows = codes
        .into_iter()
        .map(|code| HanfRow {
            code: code.clone(),
            left: truncated(fa.get(code).unwrap_or(&zero), t, scale),
            right: truncated(fb.get(code).unwrap_or(&zero), t, scale),
        })
        .collect();
    Ok(HanfReport {
        radius: a.radius(),
        threshold: t,
        scale,
        rows,
    })
}
