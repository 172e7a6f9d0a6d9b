//! Ball types, their distributions, and local densities computed from them.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::canon::canonical_form;
use crate::error::{Error, Result};
use crate::eval::{check_compatible, Compiled};
use crate::formula::Formula;
use crate::structure::{RootedBall, Structure};

/// Rooted isomorphism type of a ball. The radius and the number of roots are
/// part of the encoding, so equal codes imply equal radii.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BallCode {
    bytes: Vec<u8>,
    radius: usize,
    root_count: usize,
}

impl BallCode {
    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn root_count(&self) -> usize {
        self.root_count
    }

    pub fn hex(&self) -> String {
        self.bytes.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for BallCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.hex())
    }
}

pub fn canonical_code(ball: &RootedBall) -> BallCode {
    let cf = canonical_form(&ball.structure, &ball.roots);
    let mut bytes = Vec::with_capacity(cf.code.len() + 2);
    let mut r = ball.radius as u64;
    loop {
        let b = (r & 0x7f) as u8;
        r >>= 7;
        if r == 0 {
            bytes.push(b);
            break;
        }
        bytes.push(b | 0x80);
    }
    bytes.extend(cf.code);
    BallCode {
        bytes,
        radius: ball.radius,
        root_count: ball.roots.len(),
    }
}

fn ratio(num: usize, den: usize) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact distribution of radius-`r` ball types over all roots of a structure.
#[derive(Debug, Clone, PartialEq)]
pub struct BallDistribution {
    pub radius: usize,
    pub source_size: usize,
    pub frequencies: BTreeMap<BallCode, BigRational>,
    pub representatives: BTreeMap<BallCode, RootedBall>,
}

impl BallDistribution {
    pub fn get(&self, code: &BallCode) -> BigRational {
        self.frequencies.get(code).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn total(&self) -> BigRational {
        self.frequencies.values().fold(BigRational::zero(), |acc, x| acc + x)
    }
}

fn require_constant_free(s: &Structure) -> Result<()> {
    if s.signature().constants().is_empty() {
        Ok(())
    } else {
        Err(Error::Format(
            "ball statistics require a signature without constants".into(),
        ))
    }
}

/// Ball code of every element, in element order.
pub fn ball_codes(s: &Structure, r: usize) -> Result<Vec<(BallCode, RootedBall)>> {
    require_constant_free(s)?;
    s.gaifman();
    (0..s.size())
        .into_par_iter()
        .map(|v| {
            let ball = s.ball(&[v], r)?;
            Ok((canonical_code(&ball), ball))
        })
        .collect()
}

pub fn ball_distribution(s: &Structure, r: usize) -> Result<BallDistribution> {
    if s.is_empty() {
        return Err(Error::EmptyStructure);
    }
    let mut counts: BTreeMap<BallCode, usize> = BTreeMap::new();
    let mut representatives = BTreeMap::new();
    for (code, ball) in ball_codes(s, r)? {
        *counts.entry(code.clone()).or_default() += 1;
        representatives.entry(code).or_insert(ball);
    }
    Ok(BallDistribution {
        radius: r,
        source_size: s.size(),
        frequencies: counts.into_iter().map(|(c, k)| (c, ratio(k, s.size()))).collect(),
        representatives,
    })
}

/// Largest radius `r <= max_radius` at which the two rooted balls agree, or
/// `None` if they differ already at radius 0.
pub fn agreement_radius(
    s1: &Structure,
    o1: usize,
    s2: &Structure,
    o2: usize,
    max_radius: usize,
) -> Result<Option<usize>> {
    require_constant_free(s1)?;
    require_constant_free(s2)?;
    let mut agreed = None;
    for r in 0..=max_radius {
        let a = canonical_code(&s1.ball(&[o1], r)?);
        let b = canonical_code(&s2.ball(&[o2], r)?);
        if a != b {
            break;
        }
        agreed = Some(r);
    }
    Ok(agreed)
}

/// `ρ((G1,o1),(G2,o2))`: 0 if the balls agree up to `max_radius`, otherwise
/// `1/(1+r*)` with `r*` the agreement radius (1 if even the roots differ).
pub fn rho(s1: &Structure, o1: usize, s2: &Structure, o2: usize, max_radius: usize) -> Result<BigRational> {
    Ok(match agreement_radius(s1, o1, s2, o2, max_radius)? {
        Some(r) if r == max_radius => BigRational::zero(),
        Some(r) => ratio(1, 1 + r),
        None => BigRational::one(),
    })
}

/// Total variation distance between two finitely supported distributions.
pub fn tv_maps(a: &BTreeMap<BallCode, BigRational>, b: &BTreeMap<BallCode, BigRational>) -> BigRational {
    let zero = BigRational::zero();
    let mut sum = BigRational::zero();
    for (code, x) in a {
        sum += (x - b.get(code).unwrap_or(&zero)).abs();
    }
    for (code, y) in b {
        if !a.contains_key(code) {
            sum += y.abs();
        }
    }
    sum / BigRational::from_integer(BigInt::from(2))
}

pub fn tv_distance(d1: &BallDistribution, d2: &BallDistribution) -> Result<BigRational> {
    if d1.radius != d2.radius {
        return Err(Error::RadiusMismatch(d1.radius, d2.radius));
    }
    Ok(tv_maps(&d1.frequencies, &d2.frequencies))
}

fn local_radius_within(f: &Formula, r: usize) -> Result<()> {
    match f.node().local_radius() {
        Some(lr) if lr <= r => Ok(()),
        Some(lr) => Err(Error::NotLocal { radius: Some(lr) }),
        None => Err(Error::NotLocal { radius: None }),
    }
}

/// Density of a one-variable `r`-local formula computed from the radius-`r`
/// ball distribution, by evaluating it once per ball type.
pub fn local_density_from_balls(s: &Structure, f: &Formula, r: usize) -> Result<BigRational> {
    check_compatible(s, f)?;
    if f.arity() != 1 {
        return Err(Error::FreeVariableCount {
            expected: "1".into(),
            got: f.arity(),
        });
    }
    local_radius_within(f, r)?;
    let dist = ball_distribution(s, r)?;
    let compiled = Compiled::new(f);
    let mut total = BigRational::zero();
    for (code, freq) in &dist.frequencies {
        let rep = &dist.representatives[code];
        if compiled.eval(&rep.structure, &rep.roots) {
            total += freq;
        }
    }
    Ok(total)
}

/// Result of [`product_expansion_density`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProductExpansion {
    pub value: BigRational,
    /// `p(p-1)/2 · Δ(Δ-1)^{2r} / n`.
    pub closed_form_bound: BigRational,
    /// `p(p-1)/2 · |{(u,v) : dist(u,v) <= 2r+1}| / n²`, the fraction of
    /// tuples whose radius-`r` balls are not separated.
    pub separation_bound: BigRational,
    pub max_degree: usize,
}

/// Density of a `p`-variable `r`-local formula approximated by the product of
/// single-root ball densities: every `p`-tuple of ball types contributes the
/// product of its frequencies if the formula holds on the disjoint union of
/// the representatives.
pub fn product_expansion_density(
    s: &Structure,
    f: &Formula,
    r: usize,
    degree_cap: usize,
) -> Result<ProductExpansion> {
    check_compatible(s, f)?;
    let p = f.arity();
    if p < 2 {
        return Err(Error::FreeVariableCount {
            expected: "at least 2".into(),
            got: p,
        });
    }
    local_radius_within(f, r)?;
    let max_degree = s.max_degree();
    if max_degree > degree_cap {
        return Err(Error::DegreeTooLarge {
            degree: max_degree,
            cap: degree_cap,
        });
    }
    let dist = ball_distribution(s, r)?;
    let codes: Vec<&BallCode> = dist.frequencies.keys().collect();
    let compiled = Compiled::new(f);
    let k = codes.len();
    let combos = k.checked_pow(p as u32).ok_or(Error::BudgetExceeded {
        required: format!("{k}^{p}"),
        budget: crate::density::DEFAULT_BUDGET,
    })?;
    let value = (0..combos)
        .into_par_iter()
        .map(|mut idx| {
            let mut picked = Vec::with_capacity(p);
            for _ in 0..p {
                picked.push(codes[idx % k]);
                idx /= k;
            }
            let parts: Vec<&Structure> = picked.iter().map(|c| &dist.representatives[*c].structure).collect();
            let (union, offsets) = Structure::disjoint_union(&parts).expect("constant-free parts");
            let roots: Vec<usize> = picked
                .iter()
                .zip(&offsets)
                .map(|(c, off)| off + dist.representatives[*c].roots[0])
                .collect();
            if compiled.eval(&union, &roots) {
                picked
                    .iter()
                    .fold(BigRational::one(), |acc, c| acc * &dist.frequencies[*c])
            } else {
                BigRational::zero()
            }
        })
        .reduce(BigRational::zero, |a, b| a + b);

    let n = s.size();
    let pairs = p * (p - 1) / 2;
    let d = max_degree as u64;
    let spread = BigInt::from(d) * num_traits::pow(BigInt::from(d.saturating_sub(1)), 2 * r);
    let closed_form_bound = BigRational::new(BigInt::from(pairs) * spread, BigInt::from(n));
    let g = s.gaifman();
    let close: usize = (0..n)
        .into_par_iter()
        .map(|v| g.bfs_within(&[v], 2 * r + 1).len())
        .sum();
    let separation_bound = BigRational::new(
        BigInt::from(pairs) * BigInt::from(close),
        BigInt::from(n) * BigInt::from(n),
    );
    Ok(ProductExpansion {
        value,
        closed_form_bound,
        separation_bound: separation_bound.min(BigRational::one()),
        max_degree,
    })
}
