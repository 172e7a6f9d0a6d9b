//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; the process fails if any
//! criterion does.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use folim_core::convergence::{
    default_epsilon, elementary_distance, fo_split_check, ElementaryDistance, Status, DEFAULT_WINDOW,
};
use folim_core::density::hoeffding_radius;
use folim_core::ef::{distinguishing_rank, ef_equivalent};
use folim_core::formula::Node;
use folim_core::graphing::{
    clean, debruijn_graph, debruijn_graphing, debruijn_sequence, graphing_ball_stats, hanf_check, stats_from_points,
    BallStatistics, Coord, Point, SampledBallStats, DEFAULT_RESOLUTION,
};
use folim_core::local::{
    ball_codes, ball_distribution, local_density_from_balls, product_expansion_density, tv_maps, BallCode,
};
use folim_core::structure::graphs;
use folim_core::{density_exact, density_sampled, satisfies, DensityValue, Formula, Signature, Structure};

type Outcome = Result<String, String>;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn exact(s: &Structure, f: &Formula) -> BigRational {
    match density_exact(s, f).unwrap() {
        DensityValue::Exact(v) => v,
        other => panic!("expected an exact value, got {other}"),
    }
}

fn parse(text: &str) -> Formula {
    Formula::parse(text, &Signature::graph()).unwrap_or_else(|e| panic!("{text}: {e}"))
}

fn gnp(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Structure {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Structure::graph(n, &edges).unwrap()
}

/// Random graph with maximum degree exactly `d` (when `n` allows it).
fn bounded_degree(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Structure {
    loop {
        let mut deg = vec![0; n];
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for _ in 0..4 * n * d {
            let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let e = (u.min(v), u.max(v));
            if u != v && deg[u] < d && deg[v] < d && !edges.contains(&e) {
                deg[u] += 1;
                deg[v] += 1;
                edges.push(e);
            }
        }
        let s = Structure::graph(n, &edges).unwrap();
        if s.max_degree() == d {
            return s;
        }
    }
}

/// Random formula over `adj` and `=` with free variables among `x, y` and
/// quantifier rank at most `rank`.
fn random_node(rng: &mut ChaCha8Rng, rank: usize, depth: usize, scope: &mut Vec<&'static str>) -> Node {
    let pick = |rng: &mut ChaCha8Rng, scope: &[&'static str]| scope[rng.gen_range(0..scope.len())];
    let choice = if depth == 0 { 0 } else { rng.gen_range(0..7) };
    match choice {
        0 | 1 => {
            let (a, b) = (pick(rng, scope), pick(rng, scope));
            if rng.gen_bool(0.75) {
                Node::rel(0, &[a, b])
            } else {
                Node::eq(a, b)
            }
        }
        2 => random_node(rng, rank, depth - 1, scope).not(),
        3 => random_node(rng, rank, depth - 1, scope).and(random_node(rng, rank, depth - 1, scope)),
        4 => random_node(rng, rank, depth - 1, scope).or(random_node(rng, rank, depth - 1, scope)),
        _ if rank == 0 => random_node(rng, rank, depth - 1, scope),
        _ => {
            let var = ["x", "y", "z"][rng.gen_range(0..3)];
            scope.push(var);
            let body = random_node(rng, rank - 1, depth - 1, scope);
            scope.pop();
            if choice == 5 {
                Node::exists(var, body)
            } else {
                Node::forall(var, body)
            }
        }
    }
}

fn random_formula(rng: &mut ChaCha8Rng) -> Formula {
    let node = random_node(rng, 2, 4, &mut vec!["x", "y"]);
    Formula::new(Signature::graph(), node).unwrap()
}

fn or_all(fs: &[Formula]) -> Formula {
    fs[1..].iter().fold(fs[0].clone(), |acc, f| acc.or(f).unwrap())
}

fn and_all(fs: &[&Formula]) -> Formula {
    fs[1..].iter().fold(fs[0].clone(), |acc, f| acc.and(f).unwrap())
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let graphs: Vec<Structure> = (0..50)
        .map(|_| {
            let n = rng.gen_range(1..=8);
            let p = rng.gen_range(0.1..0.9);
            gnp(n, p, &mut rng)
        })
        .collect();
    let formulas: Vec<Formula> = (0..30).map(|_| random_formula(&mut rng)).collect();
    assert!(formulas.iter().all(|f| f.qrank() <= 2 && f.arity() <= 2));
    let mut checks = 0usize;
    for (gi, g) in graphs.iter().enumerate() {
        for (fi, f) in formulas.iter().enumerate() {
            let ctx = format!("graph {gi}, formula {fi} `{f}`");
            let d = exact(g, f);
            if d.clone() + exact(g, &f.negate()) != BigRational::one() {
                return Err(format!("negation fails on {ctx}"));
            }
            if exact(g, &f.padded(&["x", "y", "w"])) != d {
                return Err(format!("padding changes the value on {ctx}"));
            }
            let other = &formulas[(fi + 7 * gi + 1) % formulas.len()];
            let with = f.and(other).unwrap();
            let without = f.and(&other.negate()).unwrap();
            let split = exact(g, &with) + exact(g, &without);
            if exact(g, &with.or(&without).unwrap()) != split || split != d {
                return Err(format!("additivity fails on {ctx}"));
            }
            for k in 2..=4 {
                let parts: Vec<Formula> = (0..k)
                    .map(|j| formulas[(fi + j * (gi + 3)) % formulas.len()].padded(&["x", "y"]))
                    .collect();
                let mut sum = BigRational::zero();
                for mask in 1u32..(1 << k) {
                    let chosen: Vec<&Formula> = (0..k).filter(|j| mask >> j & 1 == 1).map(|j| &parts[j]).collect();
                    let term = exact(g, &and_all(&chosen));
                    if chosen.len() % 2 == 1 {
                        sum += term;
                    } else {
                        sum -= term;
                    }
                }
                if exact(g, &or_all(&parts)) != sum {
                    return Err(format!("inclusion-exclusion (k = {k}) fails on {ctx}"));
                }
            }
            checks += 1;
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, 60)?;
    Ok(format!("{checks} graph/formula pairs, all identities exact ({elapsed:.1?})"))
}

fn within(elapsed: Duration, secs: u64) -> Result<(), String> {
    if elapsed > Duration::from_secs(secs) {
        Err(format!("took {elapsed:.1?}, limit {secs} s"))
    } else {
        Ok(())
    }
}

fn sampling_report(seeds: std::ops::Range<u64>) -> (String, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = gnp(40, 0.12, &mut rng);
    let f = parse("E z. x ~ z & ~(z ~ y)");
    let truth = exact(&g, &f);
    let truth_f = num_traits::ToPrimitive::to_f64(&truth).unwrap();
    let radius = hoeffding_radius(10_000);
    let mut report = String::new();
    let mut hits = 0;
    for seed in seeds {
        let v = density_sampled(&g, &f, 10_000, seed).unwrap();
        let DensityValue::Sampled(est) = &v else {
            panic!("sampling returned an exact value")
        };
        if (est.estimate - truth_f).abs() <= radius {
            hits += 1;
        }
        writeln!(report, "{seed} {v}").unwrap();
    }
    (report, hits)
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let (_, hits) = sampling_report(0..100);
    let elapsed = start.elapsed();
    within(elapsed, 60)?;
    if hits >= 93 {
        Ok(format!(
            "{hits}/100 seeds within the Hoeffding radius {:.9} ({elapsed:.1?})",
            hoeffding_radius(10_000)
        ))
    } else {
        Err(format!("only {hits}/100 seeds within the Hoeffding radius"))
    }
}

fn all_graphs(n: usize) -> impl Iterator<Item = Structure> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    (0u32..1 << pairs.len()).map(move |mask| {
        let edges: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        Structure::graph(n, &edges).unwrap()
    })
}

fn tuples(n: usize, p: usize) -> Vec<Vec<usize>> {
    (0..n.pow(p as u32))
        .map(|mut idx| {
            (0..p)
                .map(|_| {
                    let v = idx % n;
                    idx /= n;
                    v
                })
                .collect()
        })
        .collect()
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let formulas: Vec<Formula> = (0..20).map(|_| random_formula(&mut rng)).collect();
    let mut checked = 0usize;
    for n in 1..=4 {
        for g in all_graphs(n) {
            for f in &formulas {
                let nu = f.nu_p();
                for v in tuples(n, f.arity()) {
                    let expanded = nu.expand(&g, &v).unwrap();
                    if satisfies(&g, f, &v).unwrap() != satisfies(&expanded, &nu.sentence, &[]).unwrap() {
                        return Err(format!("mismatch for `{f}` at {v:?}"));
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} (structure, formula, tuple) cases agree"))
}

fn bounded_corpus() -> Vec<Structure> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    (0..20)
        .map(|_| {
            let n = rng.gen_range(8..=64);
            bounded_degree(n, 3, &mut rng)
        })
        .collect()
}

const ONE_LOCAL: [&str; 10] = [
    "E y @<=1(x). x ~ y",
    "~(E y @<=1(x). x ~ y)",
    "E y @<=1(x). E z @<=1(x). x ~ y & x ~ z & ~(y = z)",
    "E y @<=1(x). E z @<=1(x). E w @<=1(x). x ~ y & x ~ z & x ~ w & ~(y = z) & ~(y = w) & ~(z = w)",
    "E y @<=1(x). E z @<=1(x). x ~ y & x ~ z & y ~ z",
    "E y @<=1(x). E z @<=1(x). x ~ y & x ~ z & ~(y = z) & ~(y ~ z)",
    "A y @<=1(x). A z @<=1(x). (x ~ y & x ~ z & ~(y = z)) -> y ~ z",
    "A y @<=1(x). x ~ y -> (E z @<=1(x). y ~ z & ~(z = x))",
    "(E y @<=1(x). x ~ y) & (A y @<=1(x). A z @<=1(x). x ~ y & x ~ z -> y = z)",
    "E y @<=1(x). E z @<=1(x). E w @<=1(x). x ~ y & x ~ z & x ~ w & ~(y = z) & ~(y = w) & ~(z = w) & (y ~ z | z ~ w | y ~ w)",
];

fn criterion_4() -> Outcome {
    let corpus = bounded_corpus();
    let mut checked = 0;
    for text in ONE_LOCAL {
        let f = parse(text);
        assert_eq!(f.node().local_radius(), Some(1), "{text}");
        for (i, g) in corpus.iter().enumerate() {
            let local = local_density_from_balls(g, &f, 1).map_err(|e| e.to_string())?;
            let truth = exact(g, &f);
            if local != truth {
                return Err(format!("graph {i}, `{text}`: balls give {local}, enumeration gives {truth}"));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} (graph, formula) pairs agree exactly"))
}

const TWO_LOCAL: [&str; 6] = [
    "x ~ y",
    "x = y",
    "~(x = y) & ~(x ~ y)",
    "E z @<=1(x). x ~ z & z ~ y",
    "E z @<=1(x). x ~ z & ~(z = y) & ~(z ~ y)",
    "(E z @<=1(x). x ~ z) & ~(E z @<=1(y). y ~ z)",
];

/// Formulas that can see pairs at distance exactly 2r + 1. The closed-form
/// bound does not count those pairs, so they are held to the separation
/// bound only and their excess over the closed form is reported.
const REACH_2R_PLUS_1: [&str; 1] = ["x ~ y | (E z @<=1(x). E w @<=1(y). x ~ z & y ~ w & z ~ w)"];

fn criterion_5() -> Outcome {
    let corpus = bounded_corpus();
    let mut worst = BigRational::zero();
    let mut checked = 0;
    let mut excess = 0;
    for (text, closed_form) in TWO_LOCAL
        .iter()
        .map(|t| (t, true))
        .chain(REACH_2R_PLUS_1.iter().map(|t| (t, false)))
    {
        let f = parse(text);
        for (i, g) in corpus.iter().enumerate() {
            let pe = product_expansion_density(g, &f, 1, 3).map_err(|e| e.to_string())?;
            let err = (pe.value.clone() - exact(g, &f)).abs();
            if err > pe.separation_bound {
                return Err(format!("graph {i}, `{text}`: error {err} exceeds {}", pe.separation_bound));
            }
            if err > pe.closed_form_bound {
                if closed_form {
                    return Err(format!("graph {i}, `{text}`: error {err} exceeds {}", pe.closed_form_bound));
                }
                excess += 1;
            }
            if closed_form && err.clone() / pe.closed_form_bound.clone() > worst {
                worst = err / pe.closed_form_bound;
            }
            checked += 1;
        }
    }
    Ok(format!(
        "{checked} (graph, formula) pairs within the separation bound; closed form holds on all {} reach-2r pairs \
         (worst error/bound {worst}), exceeded on {excess}/{} reach-(2r+1) pairs",
        TWO_LOCAL.len() * corpus.len(),
        REACH_2R_PLUS_1.len() * corpus.len(),
    ))
}

/// Plain game tree search on graphs.
fn duplicator_wins(a: &Structure, b: &Structure, pa: &mut Vec<usize>, pb: &mut Vec<usize>, k: usize) -> bool {
    let (ga, gb) = (a.gaifman(), b.gaifman());
    for i in 0..pa.len() {
        for j in 0..pa.len() {
            if (pa[i] == pa[j]) != (pb[i] == pb[j]) || ga.has_edge(pa[i], pa[j]) != gb.has_edge(pb[i], pb[j]) {
                return false;
            }
        }
    }
    if k == 0 {
        return true;
    }
    let answer = |first: &Structure, second: &Structure, swap: bool, pa: &mut Vec<usize>, pb: &mut Vec<usize>| {
        (0..first.size()).all(|x| {
            (0..second.size()).any(|y| {
                let (u, v) = if swap { (y, x) } else { (x, y) };
                pa.push(u);
                pb.push(v);
                let ok = duplicator_wins(a, b, pa, pb, k - 1);
                pa.pop();
                pb.pop();
                ok
            })
        })
    };
    answer(a, b, false, pa, pb) && answer(b, a, true, pa, pb)
}

fn oracle_rank(a: &Structure, b: &Structure, kmax: usize) -> Option<usize> {
    (0..=kmax).find(|&k| !duplicator_wins(a, b, &mut Vec::new(), &mut Vec::new(), k))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let kmax = 3;
    let d = elementary_distance(&graphs::complete(2), &graphs::complete(3), kmax).map_err(|e| e.to_string())?;
    let oracle = oracle_rank(&graphs::complete(2), &graphs::complete(3), kmax);
    if d != ElementaryDistance::Exact(3) || oracle != Some(3) || d.to_string() != "2^-3" {
        return Err(format!("d(K2, K3) = {d}, oracle rank {oracle:?}"));
    }
    let pool = [
        ("K2", graphs::complete(2)),
        ("K3", graphs::complete(3)),
        ("C4", graphs::cycle(4)),
        ("C5", graphs::cycle(5)),
        ("P4", graphs::path(4)),
    ];
    // separating rank, with kmax + 1 standing for "not separated up to kmax"
    let mut rank = [[0usize; 5]; 5];
    for (i, (na, a)) in pool.iter().enumerate() {
        for (j, (nb, b)) in pool.iter().enumerate() {
            let got = distinguishing_rank(a, b, kmax).map_err(|e| e.to_string())?;
            if got != oracle_rank(a, b, kmax) {
                return Err(format!("rank({na}, {nb}) = {got:?} disagrees with the game oracle"));
            }
            rank[i][j] = got.unwrap_or(kmax + 1);
            for k in 0..kmax {
                if ef_equivalent(a, b, k + 1).unwrap() && !ef_equivalent(a, b, k).unwrap() {
                    return Err(format!("{na} and {nb} equivalent at rank {} but not {k}", k + 1));
                }
            }
        }
    }
    let mut triples = 0;
    for a in 0..5 {
        for b in 0..5 {
            for c in 0..5 {
                // d(a,c) <= max(d(a,b), d(b,c)) with d = 2^-rank
                if rank[a][c] < rank[a][b].min(rank[b][c]) {
                    return Err(format!("ultrametric fails on {}, {}, {}", pool[a].0, pool[b].0, pool[c].0));
                }
                triples += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, 120)?;
    Ok(format!("d(K2, K3) = {d}; {triples} triples ultrametric; monotone in k ({elapsed:.1?})"))
}

fn with_pendant(n: usize) -> Structure {
    let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    edges.push((0, n));
    Structure::graph(n + 1, &edges).unwrap()
}

fn criterion_7() -> Outcome {
    let eps = default_epsilon();
    let cycles: Vec<Structure> = (1..=20).map(|i| graphs::cycle(10 * i)).collect();
    let r = fo_split_check(&cycles, 2, 3, &eps, DEFAULT_WINDOW).map_err(|e| e.to_string())?;
    for rv in &r.bs.per_radius {
        if rv.verdict.status != Status::Converged || !rv.verdict.witness.gap.is_zero() {
            return Err(format!("cycles at radius {}: {}", rv.radius, rv.verdict));
        }
    }
    if r.elementary.status != Status::Converged || r.fo != Status::Converged {
        return Err(format!("cycles: elementary {}, FO {}", r.elementary, r.fo));
    }
    let perturbed: Vec<Structure> = (1..=20)
        .map(|i| if i % 2 == 0 { with_pendant(10 * i) } else { graphs::cycle(10 * i) })
        .collect();
    let p = fo_split_check(&perturbed, 2, 3, &eps, DEFAULT_WINDOW).map_err(|e| e.to_string())?;
    match p.elementary.witness {
        Some((_, _, k)) if k <= 3 && p.fo == Status::Diverged => Ok(format!(
            "cycles: BS, elementary and FO converged; pendant sequence: FO {}, BS {}, elementary {}",
            p.fo,
            p.bs.status(),
            p.elementary
        )),
        _ => Err(format!("pendant sequence: FO {}, elementary {}", p.fo, p.elementary)),
    }
}

fn stats_report(s: &SampledBallStats) -> String {
    let mut out = format!("radius {} samples {} seed {}\n", s.radius, s.samples, s.seed);
    for (code, hits) in &s.counts {
        writeln!(out, "{} {hits}", code.hex()).unwrap();
    }
    out
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let order = 10;
    let finite = debruijn_graph(order).map_err(|e| e.to_string())?;
    let len = 1usize << order;
    if finite.size() != 3 * len {
        return Err(format!("order {} instead of {}", finite.size(), 3 * len));
    }
    let seq = debruijn_sequence(order).unwrap();
    let codes = ball_codes(&finite, 2).map_err(|e| e.to_string())?;
    // each radius-2 ball is read off the kind of vertex and the centred 5-bit window
    let mut by_window: BTreeMap<(usize, u32), BallCode> = BTreeMap::new();
    let mut window_counts: BTreeMap<u32, usize> = BTreeMap::new();
    for (v, (code, _)) in codes.iter().enumerate() {
        let (kind, i) = (v / len, v % len);
        let window = (0..5).fold(0u32, |acc, j| (acc << 1) | seq[(i + len - 2 + j) % len] as u32);
        if kind == 0 {
            *window_counts.entry(window).or_default() += 1;
        }
        if let Some(prev) = by_window.insert((kind, window), code.clone()) {
            if prev != *code {
                return Err(format!("kind {kind}, window {window:05b} gives two ball types"));
            }
        }
    }
    if window_counts.len() != 32 || window_counts.values().any(|&c| c != len / 32) {
        return Err("5-bit windows are not equidistributed".into());
    }
    let mut pushforward: BTreeMap<BallCode, BigRational> = BTreeMap::new();
    for code in by_window.values() {
        *pushforward.entry(code.clone()).or_insert_with(BigRational::zero) += q(1, 96);
    }
    let dist = ball_distribution(&finite, 2).map_err(|e| e.to_string())?;
    if dist.frequencies != pushforward {
        return Err("ball distribution differs from the window pushforward".into());
    }

    let g = debruijn_graphing();
    let sampled = graphing_ball_stats(&g, 2, 100_000, 0, DEFAULT_RESOLUTION).map_err(|e| e.to_string())?;
    let tv = tv_maps(&dist.frequencies, &sampled.frequencies());
    if tv > q(1, 20) {
        return Err(format!("TV {} above 0.05", num_traits::ToPrimitive::to_f64(&tv).unwrap()));
    }

    let root = Point::new(Coord::new(1, 15), Coord::new(8, 15));
    let (component, points) = g
        .component(&root, 10_000)
        .map_err(|e| e.to_string())?
        .ok_or("the orbit of (1/15, 8/15) is not finite")?;
    if component.size() != 12 {
        return Err(format!("finite component has order {}", component.size()));
    }
    let injected = stats_from_points(&g, 2, &points).map_err(|e| e.to_string())?;
    let foreign: Vec<&BallCode> = injected.counts.keys().filter(|c| !dist.frequencies.contains_key(*c)).collect();
    if foreign.is_empty() {
        return Err("the finite component has no ball type of its own".into());
    }
    let dirty = sampled.merge(&injected).map_err(|e| e.to_string())?;
    let cleaned = clean(&dirty, &q(1, 1000)).map_err(|e| e.to_string())?;
    if let Some(c) = foreign.iter().find(|c| cleaned.counts.contains_key(**c)) {
        return Err(format!("cleaning kept injected code {}", c.hex()));
    }
    let hanf = hanf_check(&cleaned, &dist, 3, 3 * len as u64).map_err(|e| e.to_string())?;
    if !hanf.passes() {
        let bad: Vec<String> = hanf.failures().map(|r| format!("{} {}/{}", r.code.hex(), r.left, r.right)).collect();
        return Err(format!("Hanf check fails on {}", bad.join(", ")));
    }
    let elapsed = start.elapsed();
    within(elapsed, 300)?;
    Ok(format!(
        "order {}, {} ball types, TV {:.5}, component order 12, {} injected types removed, Hanf t=3 passes ({elapsed:.1?})",
        finite.size(),
        dist.frequencies.len(),
        num_traits::ToPrimitive::to_f64(&tv).unwrap(),
        foreign.len()
    ))
}

fn criterion_9() -> Outcome {
    let (a, _) = sampling_report(0..10);
    let (b, _) = sampling_report(0..10);
    if a != b {
        return Err("sampled densities differ between runs".into());
    }
    let g = debruijn_graphing();
    let first = stats_report(&graphing_ball_stats(&g, 2, 20_000, 7, DEFAULT_RESOLUTION).unwrap());
    let second = stats_report(&graphing_ball_stats(&g, 2, 20_000, 7, DEFAULT_RESOLUTION).unwrap());
    if first != second {
        return Err("graphing ball statistics differ between runs".into());
    }
    let other = stats_report(&graphing_ball_stats(&g, 2, 20_000, 8, DEFAULT_RESOLUTION).unwrap());
    if other == first {
        return Err("a different seed gave the same report".into());
    }
    Ok(format!(
        "repeated runs byte-identical ({} + {} bytes)",
        a.len(),
        first.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("exact identities", criterion_1),
        ("sampling soundness", criterion_2),
        ("nu_p correspondence", criterion_3),
        ("local density from balls", criterion_4),
        ("product expansion bound", criterion_5),
        ("EF distance and ultrametric", criterion_6),
        ("convergence split", criterion_7),
        ("De Bruijn graphing", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(msg)
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1)
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
