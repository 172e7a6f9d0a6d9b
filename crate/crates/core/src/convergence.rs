//! Finite diagnostics for convergence of structure sequences.
//!
//! A limit cannot be observed on a finite prefix, so every verdict here looks
//! at a tail window of `w` entries: converged when all pairwise gaps in the
//! window are at most `ε`, diverged when some gap exceeds `2ε`, and
//! inconclusive otherwise.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::canon::isomorphic;
use crate::density::{density_exact_with, density_sampled, DensityValue, ExactOptions};
use crate::ef::{distinguishing_rank, TypeTable};
use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::local::{ball_distribution, tv_distance, BallDistribution};
use crate::structure::Structure;

pub const DEFAULT_WINDOW: usize = 5;
pub const DEFAULT_KMAX: usize = 3;

/// `ε = 1/100`.
pub fn default_epsilon() -> BigRational {
    BigRational::new(BigInt::from(1), BigInt::from(100))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityMode {
    Exact { budget: u64 },
    Sampled { samples: u64, seed: u64 },
    /// Exact within the budget, sampled beyond it.
    Auto { budget: u64, samples: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityTrace {
    pub formula: String,
    pub entries: Vec<(String, DensityValue)>,
}

impl DensityTrace {
    pub fn values(&self) -> Vec<BigRational> {
        self.entries.iter().map(|(_, v)| v.to_rational()).collect()
    }
}

pub fn density_trace(seq: &[(String, Structure)], f: &Formula, mode: DensityMode) -> Result<DensityTrace> {
    let mut entries = Vec::with_capacity(seq.len());
    for (id, s) in seq {
        let value = match mode {
            DensityMode::Exact { budget } => density_exact_with(s, f, &ExactOptions { budget, parallel: true })?,
            DensityMode::Sampled { samples, seed } => density_sampled(s, f, samples, seed)?,
            DensityMode::Auto { budget, samples, seed } => {
                match density_exact_with(s, f, &ExactOptions { budget, parallel: true }) {
                    Err(Error::BudgetExceeded { .. }) => density_sampled(s, f, samples, seed)?,
                    other => other?,
                }
            }
        };
        entries.push((id.clone(), value));
    }
    Ok(DensityTrace {
        formula: f.to_string(),
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Converged,
    Inconclusive,
    Diverged,
}

impl Status {
    /// Conjunction of two verdicts: both must converge.
    pub fn and(self, other: Status) -> Status {
        self.max(other)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::Inconclusive => "inconclusive",
            Status::Diverged => "diverged",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The largest gap in the window and the pair of sequence indices where it
/// occurs. For a converged verdict it is the Cauchy bound; for a diverged
/// one it is the oscillating pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gap {
    pub first: usize,
    pub second: usize,
    pub gap: BigRational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvergenceVerdict {
    pub status: Status,
    pub witness: Gap,
    pub epsilon: BigRational,
    pub window: usize,
}

impl fmt::Display for ConvergenceVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (max gap {} between #{} and #{}; epsilon {}, window {})",
            self.status, self.witness.gap, self.witness.first, self.witness.second, self.epsilon, self.window
        )
    }
}

fn check_window(len: usize, w: usize) -> Result<()> {
    if w < 2 {
        return Err(Error::WindowTooSmall(w));
    }
    if len < w {
        return Err(Error::TraceTooShort { len, window: w });
    }
    Ok(())
}

/// Verdict from pairwise gaps among the last `w` of `len` entries.
fn window_verdict(
    len: usize,
    eps: &BigRational,
    w: usize,
    gap: impl Fn(usize, usize) -> BigRational,
) -> Result<ConvergenceVerdict> {
    check_window(len, w)?;
    let start = len - w;
    let mut worst = Gap {
        first: start,
        second: start,
        gap: BigRational::zero(),
    };
    for i in start..len {
        for j in i + 1..len {
            let g = gap(i, j);
            if g > worst.gap {
                worst = Gap {
                    first: i,
                    second: j,
                    gap: g,
                };
            }
        }
    }
    let two_eps = eps * BigRational::from_integer(BigInt::from(2));
    let status = if worst.gap <= *eps {
        Status::Converged
    } else if worst.gap > two_eps {
        Status::Diverged
    } else {
        Status::Inconclusive
    };
    Ok(ConvergenceVerdict {
        status,
        witness: worst,
        epsilon: eps.clone(),
        window: w,
    })
}

pub fn convergence_verdict(trace: &[BigRational], eps: &BigRational, w: usize) -> Result<ConvergenceVerdict> {
    window_verdict(trace.len(), eps, w, |i, j| (&trace[i] - &trace[j]).abs())
}

/// Distance `2^{-k}` between the rank-truncated theories of two structures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementaryDistance {
    /// The structures are isomorphic.
    Zero,
    /// Spoiler first wins the `k`-round game: distance `2^{-k}`.
    Exact(usize),
    /// Duplicator wins every game up to `kmax` but the structures are not
    /// isomorphic: the distance lies in `(0, 2^{-(kmax+1)}]`.
    UpperBound(usize),
}

impl ElementaryDistance {
    /// Exponent `k` with distance `2^{-k}`, or the exponent of the upper
    /// bound; `None` for distance 0.
    pub fn exponent(&self) -> Option<usize> {
        match *self {
            ElementaryDistance::Zero => None,
            ElementaryDistance::Exact(k) | ElementaryDistance::UpperBound(k) => Some(k),
        }
    }

    /// The distance, or its upper bound, as a rational.
    pub fn value(&self) -> BigRational {
        match self.exponent() {
            None => BigRational::zero(),
            Some(k) => BigRational::new(BigInt::from(1), num_traits::pow(BigInt::from(2), k)),
        }
    }
}

impl fmt::Display for ElementaryDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementaryDistance::Zero => f.write_str("0"),
            ElementaryDistance::Exact(k) => write!(f, "2^-{k}"),
            ElementaryDistance::UpperBound(k) => write!(f, "(0, 2^-{k}]"),
        }
    }
}

pub fn elementary_distance(a: &Structure, b: &Structure, kmax: usize) -> Result<ElementaryDistance> {
    Ok(match distinguishing_rank(a, b, kmax)? {
        Some(k) => ElementaryDistance::Exact(k),
        None if isomorphic(a, b) => ElementaryDistance::Zero,
        None => ElementaryDistance::UpperBound(kmax + 1),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RadiusVerdict {
    pub radius: usize,
    pub verdict: ConvergenceVerdict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BsReport {
    pub per_radius: Vec<RadiusVerdict>,
    pub max_degrees: Vec<usize>,
    pub warnings: Vec<String>,
}

impl BsReport {
    pub fn status(&self) -> Status {
        self.per_radius
            .iter()
            .fold(Status::Converged, |acc, r| acc.and(r.verdict.status))
    }
}

fn degree_warnings(max_degrees: &[usize]) -> Vec<String> {
    let half = max_degrees.len() / 2;
    let early = max_degrees[..half].iter().copied().max().unwrap_or(0);
    let late = max_degrees[half..].iter().copied().max().unwrap_or(0);
    if half > 0 && late > early {
        vec![format!(
            "maximum degree grows along the sequence ({early} in the first half, {late} in the second); ball statistics assume a uniform bound"
        )]
    } else {
        Vec::new()
    }
}

/// Verdicts on the radius-`r` ball distributions for every `r <= r_max`,
/// with total variation as the gap.
pub fn bs_convergence_check(seq: &[Structure], r_max: usize, eps: &BigRational, w: usize) -> Result<BsReport> {
    check_window(seq.len(), w)?;
    let max_degrees: Vec<usize> = seq.iter().map(|s| s.max_degree()).collect();
    let start = seq.len() - w;
    let mut per_radius = Vec::with_capacity(r_max + 1);
    for radius in 0..=r_max {
        let dists: Vec<BallDistribution> = seq[start..]
            .par_iter()
            .map(|s| ball_distribution(s, radius))
            .collect::<Result<_>>()?;
        let verdict = window_verdict(seq.len(), eps, w, |i, j| {
            tv_distance(&dists[i - start], &dists[j - start]).expect("equal radii")
        })?;
        per_radius.push(RadiusVerdict { radius, verdict });
    }
    Ok(BsReport {
        per_radius,
        warnings: degree_warnings(&max_degrees),
        max_degrees,
    })
}

/// Agreement of the tail window on all sentences of rank at most `kmax`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementaryVerdict {
    pub status: Status,
    pub kmax: usize,
    pub window: usize,
    /// Pair of sequence indices and the least rank separating them.
    pub witness: Option<(usize, usize, usize)>,
}

impl fmt::Display for ElementaryVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (kmax {}, window {}", self.status, self.kmax, self.window)?;
        match self.witness {
            Some((i, j, k)) => write!(f, "; #{i} and #{j} differ on a sentence of rank {k})"),
            None => f.write_str("; all pairs agree)"),
        }
    }
}

pub fn elementary_check(seq: &[Structure], kmax: usize, w: usize) -> Result<ElementaryVerdict> {
    check_window(seq.len(), w)?;
    let start = seq.len() - w;
    let mut table = TypeTable::new();
    let types: Vec<Vec<u32>> = seq[start..].iter().map(|s| table.sentence_types(s, kmax)).collect();
    let mut witness: Option<(usize, usize, usize)> = None;
    for i in 0..w {
        for j in i + 1..w {
            if seq[start + i].signature() != seq[start + j].signature() {
                return Err(Error::SignatureMismatch);
            }
            if let Some(k) = (0..=kmax).find(|&k| types[i][k] != types[j][k]) {
                if witness.is_none_or(|(_, _, best)| k < best) {
                    witness = Some((start + i, start + j, k));
                }
            }
        }
    }
    Ok(ElementaryVerdict {
        status: if witness.is_some() {
            Status::Diverged
        } else {
            Status::Converged
        },
        kmax,
        window: w,
        witness,
    })
}

/// Local (ball statistics) and elementary halves of first-order convergence
/// for bounded-degree sequences; the sequence converges for all first-order
/// formulas iff both halves do.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitReport {
    pub bs: BsReport,
    pub elementary: ElementaryVerdict,
    pub fo: Status,
}

pub fn fo_split_check(
    seq: &[Structure],
    r_max: usize,
    kmax: usize,
    eps: &BigRational,
    w: usize,
) -> Result<SplitReport> {
    let bs = bs_convergence_check(seq, r_max, eps, w)?;
    let elementary = elementary_check(seq, kmax, w)?;
    let fo = bs.status().and(elementary.status);
    Ok(SplitReport { bs, elementary, fo })
}
