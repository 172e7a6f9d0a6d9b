//! Stone pairings `<f, S>`: the fraction of `p`-tuples of elements (with
//! repetition) that satisfy a formula with `p` free variables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::{check_compatible, Compiled};
use crate::formula::{Formula, Node};
use crate::structure::{Signature, Structure};

/// Default cap on indicator evaluations for exact enumeration.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

/// Confidence level of the reported sampling radius.
pub const CONFIDENCE: f64 = 0.95;

const SAMPLE_CHUNK: u64 = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct SampledEstimate {
    pub estimate: f64,
    pub hits: u64,
    pub samples: u64,
    /// Two-sided Hoeffding radius at [`CONFIDENCE`].
    pub radius: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DensityValue {
    Exact(BigRational),
    Sampled(SampledEstimate),
}

impl DensityValue {
    pub fn is_exact(&self) -> bool {
        matches!(self, DensityValue::Exact(_))
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            DensityValue::Exact(v) => Some(v),
            DensityValue::Sampled(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            DensityValue::Exact(v) => v.to_f64().unwrap_or(f64::NAN),
            DensityValue::Sampled(s) => s.estimate,
        }
    }

    /// Exact value, or the sampled estimate as the rational `hits/samples`.
    pub fn to_rational(&self) -> BigRational {
        match self {
            DensityValue::Exact(v) => v.clone(),
            DensityValue::Sampled(s) => BigRational::new(s.hits.into(), s.samples.into()),
        }
    }
}

impl fmt::Display for DensityValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityValue::Exact(v) => write!(f, "{v}"),
            DensityValue::Sampled(s) => write!(
                f,
                "{:.6} +- {:.6} (samples={}, seed={})",
                s.estimate, s.radius, s.samples, s.seed
            ),
        }
    }
}

/// `sqrt(ln(2 / (1 - CONFIDENCE)) / (2 n))`.
pub fn hoeffding_radius(samples: u64) -> f64 {
    ((2.0 / (1.0 - CONFIDENCE)).ln() / (2.0 * samples as f64)).sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct ExactOptions {
    pub budget: u64,
    pub parallel: bool,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            budget: DEFAULT_BUDGET,
            parallel: true,
        }
    }
}

/// `n^p` as an integer, or an error when it exceeds `budget`.
fn tuple_count(n: usize, p: usize, budget: u64) -> Result<u64> {
    let total = BigUint::from(n).pow(p as u32);
    match total.to_u64() {
        Some(t) if t <= budget => Ok(t),
        _ => Err(Error::BudgetExceeded {
            required: total.to_string(),
            budget,
        }),
    }
}

/// Counts satisfying tuples whose first coordinate is `first`.
fn count_with_prefix(s: &Structure, c: &Compiled, first: Option<usize>) -> u64 {
    let p = c.arity();
    let n = s.size();
    let mut env = vec![0usize; c.slots().max(1)];
    let fixed = usize::from(first.is_some());
    if let Some(v) = first {
        env[0] = v;
    }
    let mut count = 0u64;
    loop {
        if c.eval_in(s, &mut env) {
            count += 1;
        }
        // odometer over positions fixed..p
        let mut i = p;
        loop {
            if i == fixed {
                return count;
            }
            i -= 1;
            env[i] += 1;
            if env[i] < n {
                break;
            }
            env[i] = 0;
        }
    }
}

/// Number of satisfying `p`-tuples.
pub fn count_satisfying(s: &Structure, f: &Formula, opts: &ExactOptions) -> Result<u64> {
    check_compatible(s, f)?;
    tuple_count(s.size(), f.arity(), opts.budget)?;
    let c = Compiled::new(f);
    if f.arity() == 0 {
        return Ok(u64::from(c.eval(s, &[])));
    }
    let per_first = |v: usize| count_with_prefix(s, &c, Some(v));
    Ok(if opts.parallel {
        (0..s.size()).into_par_iter().map(per_first).sum()
    } else {
        (0..s.size()).map(per_first).sum()
    })
}

/// Exact `<f, S>` as a rational with denominator dividing `|S|^p`.
pub fn density_exact_with(s: &Structure, f: &Formula, opts: &ExactOptions) -> Result<DensityValue> {
    let count = count_satisfying(s, f, opts)?;
    let total = BigInt::from(s.size()).pow(f.arity() as u32);
    Ok(DensityValue::Exact(BigRational::new(count.into(), total)))
}

pub fn density_exact(s: &Structure, f: &Formula) -> Result<DensityValue> {
    density_exact_with(s, f, &ExactOptions::default())
}

/// Monte Carlo estimate of `<f, S>` from `samples` uniform tuples.
///
/// Samples are drawn in fixed-size chunks, chunk `i` from ChaCha stream `i`
/// of `seed`, so the result does not depend on the thread count.
pub fn density_sampled(s: &Structure, f: &Formula, samples: u64, seed: u64) -> Result<DensityValue> {
    check_compatible(s, f)?;
    if samples == 0 {
        return Err(Error::NoSamples);
    }
    let c = Compiled::new(f);
    let n = s.size();
    let p = f.arity();
    let chunks = samples.div_ceil(SAMPLE_CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let len = SAMPLE_CHUNK.min(samples - chunk * SAMPLE_CHUNK);
            let mut env = vec![0usize; c.slots().max(1)];
            let mut hits = 0u64;
            for _ in 0..len {
                for slot in env.iter_mut().take(p) {
                    *slot = rng.gen_range(0..n);
                }
                if c.eval_in(s, &mut env) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    Ok(DensityValue::Sampled(SampledEstimate {
        estimate: hits as f64 / samples as f64,
        hits,
        samples,
        radius: hoeffding_radius(samples),
        seed,
    }))
}

/// A Boolean combination of named formulas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoolExpr {
    Const(bool),
    Atom(String),
    Not(Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
}

impl BoolExpr {
    pub fn atom(name: &str) -> Self {
        BoolExpr::Atom(name.to_string())
    }

    pub fn not(self) -> Self {
        BoolExpr::Not(Box::new(self))
    }

    pub fn and(self, other: BoolExpr) -> Self {
        BoolExpr::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: BoolExpr) -> Self {
        BoolExpr::Or(Box::new(self), Box::new(other))
    }

    /// Substitutes formulas for the atoms.
    pub fn to_formula(&self, atoms: &BTreeMap<String, Formula>, signature: &Signature) -> Result<Formula> {
        let lookup = |name: &str| {
            atoms
                .get(name)
                .cloned()
                .ok_or_else(|| Error::MissingConjunction(vec![name.to_string()]))
        };
        Ok(match self {
            BoolExpr::Const(true) => Formula::new(signature.clone(), Node::True)?,
            BoolExpr::Const(false) => Formula::new(signature.clone(), Node::False)?,
            BoolExpr::Atom(a) => lookup(a)?,
            BoolExpr::Not(e) => e.to_formula(atoms, signature)?.negate(),
            BoolExpr::And(a, b) => a
                .to_formula(atoms, signature)?
                .and(&b.to_formula(atoms, signature)?)?,
            BoolExpr::Or(a, b) => a
                .to_formula(atoms, signature)?
                .or(&b.to_formula(atoms, signature)?)?,
        })
    }
}

/// A set of atoms standing for their conjunction; the empty set is `true`.
pub type Monomial = BTreeSet<String>;

/// Multilinear indicator polynomial of `e`: `1_{a&b} = 1_a 1_b`,
/// `1_{~a} = 1 - 1_a`, with `1_a^2 = 1_a`.
pub fn indicator_polynomial(e: &BoolExpr) -> BTreeMap<Monomial, BigInt> {
    fn mul(a: &BTreeMap<Monomial, BigInt>, b: &BTreeMap<Monomial, BigInt>) -> BTreeMap<Monomial, BigInt> {
        let mut out: BTreeMap<Monomial, BigInt> = BTreeMap::new();
        for (ma, ca) in a {
            for (mb, cb) in b {
                let m: Monomial = ma.union(mb).cloned().collect();
                *out.entry(m).or_insert_with(BigInt::zero) += ca * cb;
            }
        }
        out.retain(|_, c| !c.is_zero());
        out
    }
    fn add(a: &BTreeMap<Monomial, BigInt>, b: &BTreeMap<Monomial, BigInt>, sign: i32) -> BTreeMap<Monomial, BigInt> {
        let mut out = a.clone();
        for (m, c) in b {
            *out.entry(m.clone()).or_insert_with(BigInt::zero) += c * BigInt::from(sign);
        }
        out.retain(|_, c| !c.is_zero());
        out
    }
    let one: BTreeMap<Monomial, BigInt> = [(Monomial::new(), BigInt::one())].into();
    match e {
        BoolExpr::Const(true) => one,
        BoolExpr::Const(false) => BTreeMap::new(),
        BoolExpr::Atom(a) => [([a.clone()].into(), BigInt::one())].into(),
        BoolExpr::Not(x) => add(&one, &indicator_polynomial(x), -1),
        BoolExpr::And(x, y) => mul(&indicator_polynomial(x), &indicator_polynomial(y)),
        BoolExpr::Or(x, y) => {
            let (px, py) = (indicator_polynomial(x), indicator_polynomial(y));
            add(&add(&px, &py, 1), &mul(&px, &py), -1)
        }
    }
}

/// Density of `target` from the densities of conjunctions of its atoms.
pub fn density_boolean_expansion(
    conjunction_densities: &BTreeMap<Monomial, BigRational>,
    target: &BoolExpr,
) -> Result<BigRational> {
    let mut acc = BigRational::zero();
    for (mono, coeff) in indicator_polynomial(target) {
        let d = if mono.is_empty() {
            BigRational::one()
        } else {
            conjunction_densities
                .get(&mono)
                .cloned()
                .ok_or_else(|| Error::MissingConjunction(mono.iter().cloned().collect()))?
        };
        acc += BigRational::from_integer(coeff) * d;
    }
    Ok(acc)
}

/// Conjunction of the named formulas in `mono`.
pub fn conjunction(mono: &Monomial, atoms: &BTreeMap<String, Formula>) -> Result<Formula> {
    let mut it = mono.iter();
    let first = it
        .next()
        .ok_or_else(|| Error::MissingConjunction(Vec::new()))?;
    let mut acc = atoms
        .get(first)
        .cloned()
        .ok_or_else(|| Error::MissingConjunction(vec![first.clone()]))?;
    for name in it {
        let next = atoms
            .get(name)
            .ok_or_else(|| Error::MissingConjunction(vec![name.clone()]))?;
        acc = acc.and(next)?;
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalityViolation {
    pub structure: usize,
    pub tuple: Vec<usize>,
    /// Truth value in the whole structure.
    pub global: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalityReport {
    pub radius: usize,
    pub checked: u64,
    pub violation_count: u64,
    /// The first few violations found.
    pub violations: Vec<LocalityViolation>,
}

impl LocalityReport {
    pub fn is_clean(&self) -> bool {
        self.violation_count == 0
    }
}

impl fmt::Display for LocalityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_clean() {
            write!(f, "no violation found in {} tuples at radius {}", self.checked, self.radius)
        } else {
            write!(
                f,
                "{} violations in {} tuples at radius {}",
                self.violation_count, self.checked, self.radius
            )?;
            for v in &self.violations {
                write!(f, "\n  structure {} tuple {:?}: global {}", v.structure, v.tuple, v.global)?;
            }
            Ok(())
        }
    }
}

const KEPT_VIOLATIONS: usize = 16;

/// Compares `S |= f[v]` with `S[N_r(v)] |= f[v]` over tuples of each
/// structure: all of them when there are at most `max_tuples`, otherwise
/// `max_tuples` uniform samples. Can refute locality, never certify it.
pub fn locality_audit(
    f: &Formula,
    radius: usize,
    structures: &[Structure],
    max_tuples: u64,
    seed: u64,
) -> Result<LocalityReport> {
    let p = f.arity();
    if p == 0 {
        return Err(Error::NoFreeVariables);
    }
    let c = Compiled::new(f);
    let mut report = LocalityReport {
        radius,
        checked: 0,
        violation_count: 0,
        violations: Vec::new(),
    };
    for (idx, s) in structures.iter().enumerate() {
        check_compatible(s, f)?;
        let n = s.size();
        let tuples: Vec<Vec<usize>> = match tuple_count(n, p, max_tuples) {
            Ok(total) => (0..total)
                .map(|mut k| {
                    let mut t = vec![0; p];
                    for slot in t.iter_mut().rev() {
                        *slot = (k % n as u64) as usize;
                        k /= n as u64;
                    }
                    t
                })
                .collect(),
            Err(_) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(idx as u64);
                (0..max_tuples)
                    .map(|_| (0..p).map(|_| rng.gen_range(0..n)).collect())
                    .collect()
            }
        };
        for t in tuples {
            let global = c.eval(s, &t);
            let ball = s.ball(&t, radius)?;
            let local = c.eval(&ball.structure, &ball.roots);
            report.checked += 1;
            if global != local {
                report.violation_count += 1;
                if report.violations.len() < KEPT_VIOLATIONS {
                    report.violations.push(LocalityViolation {
                        structure: idx,
                        tuple: t,
                        global,
                    });
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::structure::graphs;

    fn f(text: &str) -> Formula {
        parse(text, &Signature::graph()).unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    /// Enumerates all tuples through the checked public API.
    fn brute_density(s: &Structure, g: &Formula) -> BigRational {
        let p = g.arity() as u32;
        let n = s.size();
        let total = n.pow(p);
        let mut hits = 0i64;
        for mut k in 0..total {
            let mut t = Vec::new();
            for _ in 0..p {
                t.push(k % n);
                k /= n;
            }
            if crate::eval::satisfies(s, g, &t).unwrap() {
                hits += 1;
            }
        }
        q(hits, total as i64)
    }

    #[test]
    fn path_adjacency_density() {
        let p3 = graphs::path(3);
        let adj = f("adj(x,y)");
        assert_eq!(brute_density(&p3, &adj), q(4, 9));
        assert_eq!(density_exact(&p3, &adj).unwrap(), DensityValue::Exact(q(4, 9)));
    }

    #[test]
    fn sentences_are_zero_or_one() {
        let has_edge = f("E x. E y. x ~ y");
        assert_eq!(density_exact(&graphs::path(3), &has_edge).unwrap().exact().unwrap(), &q(1, 1));
        assert_eq!(density_exact(&graphs::edgeless(3), &has_edge).unwrap().exact().unwrap(), &q(0, 1));
    }

    #[test]
    fn padding_is_invariant() {
        let k3 = graphs::complete(3);
        let g = f("E y. x ~ y");
        let one = density_exact(&k3, &g).unwrap();
        let two = density_exact(&k3, &g.padded(&["z"])).unwrap();
        assert_eq!(one, DensityValue::Exact(q(1, 1)));
        assert_eq!(one, two);
    }

    #[test]
    fn empty_structure_and_budget() {
        assert_eq!(density_exact(&graphs::edgeless(0), &f("true")), Err(Error::EmptyStructure));
        let opts = ExactOptions {
            budget: 8,
            parallel: false,
        };
        assert!(matches!(
            density_exact_with(&graphs::path(3), &f("adj(x,y)"), &opts),
            Err(Error::BudgetExceeded { .. })
        ));
        assert_eq!(
            density_sampled(&graphs::edgeless(0), &f("true"), 10, 0),
            Err(Error::EmptyStructure)
        );
        assert_eq!(density_sampled(&graphs::path(2), &f("true"), 0, 0), Err(Error::NoSamples));
    }

    #[test]
    fn sampling_constants() {
        let s = graphs::cycle(7);
        match density_sampled(&s, &f("true"), 1000, 3).unwrap() {
            DensityValue::Sampled(e) => {
                assert_eq!(e.estimate, 1.0);
                assert!((e.radius - hoeffding_radius(1000)).abs() < 1e-15);
            }
            _ => unreachable!(),
        }
        let taut = f("adj(x,y) | ~adj(x,y)");
        assert_eq!(density_sampled(&s, &taut, 777, 9).unwrap().to_f64(), 1.0);
    }

    #[test]
    fn sampling_is_close_and_deterministic() {
        let p3 = graphs::path(3);
        let adj = f("adj(x,y)");
        let a = density_sampled(&p3, &adj, 10_000, 1).unwrap();
        let b = density_sampled(&p3, &adj, 10_000, 1).unwrap();
        assert_eq!(a, b);
        let DensityValue::Sampled(e) = a else { unreachable!() };
        assert!((e.estimate - 4.0 / 9.0).abs() <= e.radius);
    }

    #[test]
    fn hoeffding_value() {
        // sqrt(ln 40 / 20000)
        assert!((hoeffding_radius(10_000) - 0.013_581_015).abs() < 1e-8);
    }

    #[test]
    fn serial_and_parallel_agree() {
        let s = graphs::cycle(11);
        let g = f("E z. x ~ z & z ~ y");
        let ser = density_exact_with(&s, &g, &ExactOptions { budget: DEFAULT_BUDGET, parallel: false }).unwrap();
        let par = density_exact_with(&s, &g, &ExactOptions::default()).unwrap();
        assert_eq!(ser, par);
        assert_eq!(ser.exact().unwrap(), &brute_density(&s, &g));
    }

    #[test]
    fn expansion_of_negation_and_disjunction() {
        let d: BTreeMap<Monomial, BigRational> = [
            (["a".to_string()].into(), q(1, 3)),
            (["b".to_string()].into(), q(1, 4)),
            (["a".to_string(), "b".to_string()].into(), q(1, 12)),
        ]
        .into();
        let a = BoolExpr::atom("a");
        let b = BoolExpr::atom("b");
        assert_eq!(density_boolean_expansion(&d, &a.clone().not()).unwrap(), q(2, 3));
        assert_eq!(density_boolean_expansion(&d, &a.clone().or(b.clone())).unwrap(), q(1, 2));
        let c = BoolExpr::atom("c");
        assert_eq!(
            density_boolean_expansion(&d, &a.and(c)),
            Err(Error::MissingConjunction(vec!["a".into(), "c".into()]))
        );
    }

    #[test]
    fn expansion_matches_exact_density() {
        let s = graphs::path(5);
        let atoms: BTreeMap<String, Formula> = [
            ("a".to_string(), f("E z. x ~ z & z ~ y")),
            ("b".to_string(), f("x = y | x ~ y")),
            ("c".to_string(), f("E z. z ~ x")),
        ]
        .into();
        let target = BoolExpr::atom("a")
            .or(BoolExpr::atom("b").not())
            .and(BoolExpr::atom("c").or(BoolExpr::atom("a")));
        let poly = indicator_polynomial(&target);
        let mut dens = BTreeMap::new();
        for mono in poly.keys().filter(|m| !m.is_empty()) {
            let g = conjunction(mono, &atoms).unwrap().padded(&["x", "y"]);
            dens.insert(mono.clone(), density_exact(&s, &g).unwrap().exact().unwrap().clone());
        }
        let expanded = density_boolean_expansion(&dens, &target).unwrap();
        let direct = target.to_formula(&atoms, &Signature::graph()).unwrap().padded(&["x", "y"]);
        assert_eq!(&expanded, density_exact(&s, &direct).unwrap().exact().unwrap());
    }

    #[test]
    fn locality_audit_examples() {
        let corpus = vec![graphs::star(4), graphs::complete(4), graphs::path(5), graphs::cycle(6)];
        let r = locality_audit(&f("adj(x,y)"), 1, &corpus, 10_000, 0).unwrap();
        assert!(r.is_clean());
        assert!(r.to_string().starts_with("no violation found"));
        let r = locality_audit(&f("E z. adj(x,z)"), 1, &corpus, 10_000, 0).unwrap();
        assert!(r.is_clean());
        // z = x is always a witness on loopless graphs, hence local
        let r = locality_audit(&f("E z. ~adj(x,z)"), 1, &corpus, 10_000, 0).unwrap();
        assert!(r.is_clean());
        // a leaf's radius-1 ball misses the other leaves of the star
        let r = locality_audit(&f("E z. ~(z = x) & ~adj(x,z)"), 1, &corpus, 10_000, 0).unwrap();
        assert!(!r.is_clean());
        assert!(r.violations.iter().any(|v| v.structure == 0 && v.tuple == vec![1] && v.global));
        assert!(r.violations.iter().all(|v| v.structure != 1));
        assert_eq!(
            locality_audit(&f("true"), 1, &corpus, 10, 0),
            Err(Error::NoFreeVariables)
        );
    }
}
