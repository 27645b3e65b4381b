//! Independent oracles and seeded property suites shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use starsynth::automaton::{ltl_to_nbw, ucw_for, Acceptance, StateSet, WordAutomaton};
use starsynth::ctl2ltl::synth_via_ltl;
use starsynth::modelcheck::{mc_ctl, mc_ltl};
use starsynth::ranking::RankScheme;
use starsynth::smt::{brute_solve, solve, Domain, Query, SolverConfig, SolverVerdict, Sort, Term};
use starsynth::synth::{synth_loop, Encoding, Outcome, SynthProblem};
use starsynth::{parse_spec, Formula, Letter, Specification};

pub type Suite = Result<String, String>;

/// Every lasso `stem · cycle^ω` over `2^props` letters with `|stem| + |cycle| <= max_len`.
pub fn lassos(props: usize, max_len: usize) -> Vec<(Vec<Letter>, Vec<Letter>)> {
    let letters: Letter = 1 << props;
    let mut words: Vec<Vec<Vec<Letter>>> = vec![vec![vec![]]];
    for len in 1..=max_len {
        let prev = &words[len - 1];
        let next = prev.iter().flat_map(|w| (0..letters).map(move |l| [w.clone(), vec![l]].concat())).collect();
        words.push(next);
    }
    let mut out = Vec::new();
    for total in 1..=max_len {
        for w in &words[total] {
            for split in 0..total {
                out.push((w[..split].to_vec(), w[split..].to_vec()));
            }
        }
    }
    out
}

/// LTL semantics on a lasso; bit `i` of a letter is the value of `props[i]`.
pub fn eval_lasso(f: &Formula, props: &[String], stem: &[Letter], cycle: &[Letter]) -> bool {
    let word: Vec<Letter> = stem.iter().chain(cycle).copied().collect();
    let next = |p: usize| if p + 1 < word.len() { p + 1 } else { stem.len() };
    fn go(f: &Formula, props: &[String], word: &[Letter], next: &dyn Fn(usize) -> usize) -> Vec<bool> {
        let n = word.len();
        match f {
            Formula::True => vec![true; n],
            Formula::False => vec![false; n],
            Formula::Atom { name, positive } => {
                let i = props.iter().position(|p| p == name).expect("atom in props");
                word.iter().map(|l| (l >> i & 1 == 1) == *positive).collect()
            }
            Formula::Not(g) => go(g, props, word, next).into_iter().map(|b| !b).collect(),
            Formula::And(gs) => gs.iter().fold(vec![true; n], |acc, g| {
                acc.iter().zip(go(g, props, word, next)).map(|(a, b)| *a && b).collect()
            }),
            Formula::Or(gs) => gs.iter().fold(vec![false; n], |acc, g| {
                acc.iter().zip(go(g, props, word, next)).map(|(a, b)| *a || b).collect()
            }),
            Formula::Next(g) => {
                let v = go(g, props, word, next);
                (0..n).map(|p| v[next(p)]).collect()
            }
            Formula::Until(a, b) | Formula::Release(a, b) => {
                let until = matches!(f, Formula::Until(..));
                let (va, vb) = (go(a, props, word, next), go(b, props, word, next));
                // least fixpoint for U, greatest for R
                let mut v = vec![!until; n];
                for _ in 0..=n {
                    v = (0..n)
                        .map(|p| if until { vb[p] || (va[p] && v[next(p)]) } else { vb[p] && (va[p] || v[next(p)]) })
                        .collect();
                }
                v
            }
            Formula::PathA(g) | Formula::PathE(g) => go(g, props, word, next),
        }
    }
    go(f, props, &word, &next)[0]
}

/// Some run of `a` on the lasso visits the marked set infinitely often.
pub fn buchi_run_exists(a: &WordAutomaton, stem: &[Letter], cycle: &[Letter]) -> bool {
    let word: Vec<Letter> = stem.iter().chain(cycle).copied().collect();
    let next = |p: usize| if p + 1 < word.len() { p + 1 } else { stem.len() };
    let succ = |(p, q): (usize, usize)| -> Vec<(usize, usize)> {
        a.successors(q, word[p]).into_iter().map(|q2| (next(p), q2)).collect()
    };
    let mut seen = BTreeSet::from([(0, a.initial)]);
    let mut stack = vec![(0, a.initial)];
    while let Some(n) = stack.pop() {
        for m in succ(n) {
            if seen.insert(m) {
                stack.push(m);
            }
        }
    }
    let marked = a.marked();
    seen.iter().filter(|(_, q)| marked.contains(q)).any(|&start| {
        let mut inner = BTreeSet::new();
        let mut stack = succ(start);
        while let Some(n) = stack.pop() {
            if n == start {
                return true;
            }
            if inner.insert(n) {
                stack.extend(succ(n));
            }
        }
        false
    })
}

pub fn random_ltl(rng: &mut StdRng, depth: usize, atoms: &[&str]) -> Formula {
    if depth == 0 || rng.gen_ratio(1, 4) {
        return match rng.gen_range(0..10) {
            0 => Formula::True,
            1 => Formula::False,
            _ => Formula::atom(atoms[rng.gen_range(0..atoms.len())]),
        };
    }
    let sub = |rng: &mut StdRng| random_ltl(rng, depth - 1, atoms);
    match rng.gen_range(0..9) {
        0 => Formula::not(sub(rng)),
        1 => Formula::and(vec![sub(rng), sub(rng)]),
        2 => Formula::or(vec![sub(rng), sub(rng)]),
        3 => Formula::next(sub(rng)),
        4 => Formula::until(sub(rng), sub(rng)),
        5 => Formula::release(sub(rng), sub(rng)),
        6 => Formula::globally(sub(rng)),
        7 => Formula::eventually(sub(rng)),
        _ => Formula::implies(sub(rng), sub(rng)),
    }
}

/// LTL to NBW and UCW agree with the lasso semantics.
pub fn nbw_suite(formulas: usize, max_len: usize, seed: u64) -> Suite {
    let mut rng = StdRng::seed_from_u64(seed);
    let props: Vec<String> = vec!["a".into(), "b".into()];
    let words = lassos(2, max_len);
    for _ in 0..formulas {
        let f = random_ltl(&mut rng, 3, &["a", "b"]).to_pnf();
        let nbw = ltl_to_nbw(&f, &props).map_err(|e| e.to_string())?;
        let ucw = ucw_for(&f, &props).map_err(|e| e.to_string())?;
        for (stem, cycle) in &words {
            let truth = eval_lasso(&f, &props, stem, cycle);
            if buchi_run_exists(&nbw, stem, cycle) != truth {
                return Err(format!("NBW of {f} disagrees on {stem:?}({cycle:?})^w"));
            }
            // universal co-Büchi: accepted iff no run visits the marked set infinitely often
            if buchi_run_exists(&ucw, stem, cycle) == truth {
                return Err(format!("UCW of {f} disagrees on {stem:?}({cycle:?})^w"));
            }
        }
    }
    Ok(format!("{formulas} formulas x {} lassos", words.len()))
}

/// Negation normal form preserves lasso semantics.
pub fn pnf_suite(formulas: usize, max_len: usize, seed: u64) -> Suite {
    let mut rng = StdRng::seed_from_u64(seed);
    let props: Vec<String> = vec!["a".into(), "b".into()];
    let words = lassos(2, max_len);
    for _ in 0..formulas {
        let f = random_ltl(&mut rng, 4, &["a", "b"]);
        let g = f.to_pnf();
        if !g.is_pnf() {
            return Err(format!("{g} is not in normal form"));
        }
        for (stem, cycle) in &words {
            if eval_lasso(&f, &props, stem, cycle) != eval_lasso(&g, &props, stem, cycle) {
                return Err(format!("{f} and {g} differ on {stem:?}({cycle:?})^w"));
            }
        }
    }
    Ok(format!("{formulas} formulas"))
}

/// Node sets of the closed walks of a graph reachable from node 0.
fn cycle_sets(n: usize, edges: &[(usize, usize)]) -> Vec<StateSet> {
    let mut reach = BTreeSet::from([0]);
    let mut stack = vec![0];
    while let Some(u) = stack.pop() {
        for &(a, b) in edges {
            if a == u && reach.insert(b) {
                stack.push(b);
            }
        }
    }
    let mut out = Vec::new();
    for mask in 1u32..1 << n {
        let set: StateSet = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        if !set.is_subset(&reach) {
            continue;
        }
        let inner: Vec<(usize, usize)> =
            edges.iter().copied().filter(|(a, b)| set.contains(a) && set.contains(b)).collect();
        let start = *set.iter().next().unwrap();
        // strongly connected with at least one edge
        let reaches = |from: usize, rev: bool| -> BTreeSet<usize> {
            let mut seen = BTreeSet::new();
            let mut stack = vec![from];
            while let Some(u) = stack.pop() {
                for &(a, b) in &inner {
                    let (x, y) = if rev { (b, a) } else { (a, b) };
                    if x == u && seen.insert(y) {
                        stack.push(y);
                    }
                }
            }
            seen
        };
        if reaches(start, false) == set && reaches(start, true) == set {
            out.push(set);
        }
    }
    out
}

fn random_set(rng: &mut StdRng, n: usize) -> StateSet {
    (0..n).filter(|_| rng.gen_bool(0.35)).collect()
}

fn random_acceptance(rng: &mut StdRng, kind: usize, n: usize) -> Acceptance {
    let pairs = |rng: &mut StdRng| (0..rng.gen_range(1..=2)).map(|_| (random_set(rng, n), random_set(rng, n))).collect();
    match kind {
        0 => Acceptance::Buchi(random_set(rng, n)),
        1 => Acceptance::CoBuchi(random_set(rng, n)),
        2 => Acceptance::Streett(pairs(rng)),
        3 => Acceptance::Rabin(pairs(rng)),
        4 => Acceptance::Parity((0..n).map(|_| rng.gen_range(0..4)).collect()),
        5 => Acceptance::GenBuchi((0..2).map(|_| random_set(rng, n)).collect()),
        _ => Acceptance::GenCoBuchi((0..2).map(|_| random_set(rng, n)).collect()),
    }
}

pub const ACCEPTANCE_KINDS: usize = 7;

/// Rank constraints on a graph are satisfiable iff every reachable closed walk is accepting.
pub fn rank_suite(per_kind: usize, seed: u64, solver: &SolverConfig) -> Suite {
    let mut rng = StdRng::seed_from_u64(seed);
    for kind in 0..ACCEPTANCE_KINDS {
        for _ in 0..per_kind {
            let n = rng.gen_range(1..=4);
            let mut edges: Vec<(usize, usize)> = Vec::new();
            for u in 0..n {
                edges.push((u, rng.gen_range(0..n)));
                for v in 0..n {
                    if rng.gen_bool(0.25) && !edges.contains(&(u, v)) {
                        edges.push((u, v));
                    }
                }
            }
            let acc = random_acceptance(&mut rng, kind, n);
            let cycles = cycle_sets(n, &edges);
            let expect = cycles.iter().all(|c| acc.holds(c));
            let scheme = RankScheme::for_acceptance(&acc, n);
            let mut q = Query::new();
            let name = |c: usize, u: usize| format!("rk_{c}_{u}");
            for u in 0..n {
                for c in 0..scheme.components.len() {
                    q.declare(name(c, u), vec![], Sort::Int);
                }
                q.assert(scheme.domain(&|c| Term::var(name(c, u))));
            }
            let mut reach = BTreeSet::from([0]);
            let mut stack = vec![0];
            while let Some(u) = stack.pop() {
                for &(a, b) in &edges {
                    if a == u && reach.insert(b) {
                        stack.push(b);
                    }
                }
            }
            for &(a, b) in edges.iter().filter(|(a, _)| reach.contains(a)) {
                q.assert(scheme.cmp(a, &|c| Term::var(name(c, a)), &|c| Term::var(name(c, b))));
            }
            let got = match solve(&q, solver).map_err(|e| e.to_string())? {
                SolverVerdict::Sat(_) => true,
                SolverVerdict::Unsat => false,
                SolverVerdict::Unknown(r) => return Err(format!("solver gave up: {r}")),
            };
            if got != expect {
                return Err(format!("{acc:?} on edges {edges:?}: ranks {got}, oracle {expect}"));
            }
        }
    }
    Ok(format!("{per_kind} instances x {ACCEPTANCE_KINDS} acceptance kinds"))
}

fn random_term(rng: &mut StdRng, depth: usize, bools: &[String], ints: &[String]) -> Term {
    let int = |rng: &mut StdRng| -> Term {
        if rng.gen_bool(0.6) {
            Term::var(ints[rng.gen_range(0..ints.len())].clone())
        } else {
            Term::Int(rng.gen_range(-1..=3))
        }
    };
    if depth == 0 || rng.gen_ratio(1, 3) {
        return match rng.gen_range(0..4) {
            0 => Term::var(bools[rng.gen_range(0..bools.len())].clone()),
            1 => Term::eq(int(rng), int(rng)),
            2 => Term::gt(Term::Add(vec![int(rng), int(rng)]), int(rng)),
            _ => Term::ge(int(rng), int(rng)),
        };
    }
    let sub = |rng: &mut StdRng| random_term(rng, depth - 1, bools, ints);
    match rng.gen_range(0..5) {
        0 => Term::not(sub(rng)),
        1 => Term::and([sub(rng), sub(rng)]),
        2 => Term::or([sub(rng), sub(rng)]),
        3 => Term::implies(sub(rng), sub(rng)),
        _ => Term::iff(sub(rng), sub(rng)),
    }
}

/// The external solver and exhaustive enumeration agree on bounded queries.
pub fn solver_suite(queries: usize, seed: u64, solver: &SolverConfig) -> Suite {
    let mut rng = StdRng::seed_from_u64(seed);
    let bools: Vec<String> = vec!["p".into(), "q".into()];
    let ints: Vec<String> = vec!["x".into(), "y".into()];
    let mut sat = 0;
    for _ in 0..queries {
        let mut q = Query::new();
        let mut domains = BTreeMap::new();
        for b in &bools {
            q.declare(b.clone(), vec![], Sort::Bool);
            domains.insert(b.clone(), Domain::constant(Domain::bools()));
        }
        for i in &ints {
            q.declare(i.clone(), vec![], Sort::Int);
            q.assert(Term::in_range(Term::var(i.clone()), 0, 2));
            domains.insert(i.clone(), Domain::constant(Domain::ints(0, 2)));
        }
        for _ in 0..rng.gen_range(1..=3) {
            q.assert(random_term(&mut rng, 3, &bools, &ints));
        }
        let a = solve(&q, solver).map_err(|e| e.to_string())?;
        let b = brute_solve(&q, &domains).map_err(|e| e.to_string())?;
        let (sa, sb) = (matches!(a, SolverVerdict::Sat(_)), matches!(b, SolverVerdict::Sat(_)));
        if sa != sb || matches!(a, SolverVerdict::Unknown(_)) {
            return Err(format!("solver {a:?} vs enumeration {b:?} on\n{}", q.serialize()));
        }
        sat += usize::from(sa);
    }
    Ok(format!("{queries} queries, {sat} satisfiable"))
}

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

/// Every `.spec` file of the corpus, sorted by name.
pub fn corpus() -> Vec<(String, Specification)> {
    let mut v: Vec<(String, Specification)> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .filter_map(|e| {
            let p = e.ok()?.path();
            (p.extension()? == "spec").then(|| {
                let text = std::fs::read_to_string(&p).unwrap();
                (p.file_name().unwrap().to_string_lossy().into_owned(), parse_spec(&text).unwrap())
            })
        })
        .collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    v
}

/// Whatever synthesis returns for a corpus spec is re-verified by the model checker.
pub fn corpus_gate_suite(max_size: usize, solver: &SolverConfig) -> Suite {
    let mut realized = 0;
    for (name, spec) in corpus() {
        let encodings: &[Encoding] =
            if spec.is_ltl() { &[Encoding::Ltl] } else { &[Encoding::CtlDirect, Encoding::CtlAht] };
        for &enc in encodings {
            let mut p = SynthProblem::new(spec.clone(), enc, max_size);
            p.solver = solver.clone();
            p.dual_race = spec.is_ltl();
            let r = synth_loop(&p).map_err(|e| format!("{name}: {e}"))?;
            match &r.outcome {
                Outcome::Realizable { machine, .. } => {
                    let ok = match spec.ltl_body() {
                        Some(b) => mc_ltl(machine, b),
                        None => mc_ctl(machine, &spec.formula),
                    }
                    .map_err(|e| e.to_string())?
                    .holds();
                    if !ok {
                        return Err(format!("{name} under {enc:?}: machine fails the model checker"));
                    }
                    realized += 1;
                }
                Outcome::Unrealizable { dual, .. } => {
                    let d = spec.dual().unwrap();
                    if !mc_ltl(dual, d.ltl_body().unwrap()).map_err(|e| e.to_string())?.holds() {
                        return Err(format!("{name}: counter-strategy fails the dual specification"));
                    }
                }
                Outcome::BoundExhausted => {}
            }
        }
    }
    Ok(format!("{realized} machines re-verified"))
}

pub fn random_ctl(rng: &mut StdRng, depth: usize) -> Formula {
    let path = |rng: &mut StdRng, d: usize| -> Formula {
        let inner = if d == 0 || rng.gen_bool(0.5) {
            if rng.gen_bool(0.8) {
                Formula::atom("g")
            } else {
                Formula::not(Formula::atom("g"))
            }
        } else {
            random_ctl(rng, d - 1)
        };
        match rng.gen_range(0..5) {
            0 => Formula::next(inner),
            1 => Formula::eventually(inner),
            2 => Formula::globally(inner),
            3 => Formula::globally(Formula::eventually(inner)),
            _ => Formula::until(Formula::atom("r"), inner),
        }
    };
    let q = |rng: &mut StdRng, f: Formula| if rng.gen_bool(0.5) { Formula::path_a(f) } else { Formula::path_e(f) };
    match rng.gen_range(0..3) {
        0 => {
            let f = path(rng, depth);
            q(rng, f)
        }
        1 => {
            let (a, b) = (path(rng, depth), path(rng, depth));
            let (a, b) = (q(rng, a), q(rng, b));
            Formula::and(vec![a, b])
        }
        _ => {
            let (a, b) = (path(rng, depth), path(rng, depth));
            let (a, b) = (q(rng, a), q(rng, b));
            Formula::or(vec![a, b])
        }
    }
}

fn min_size(report: &starsynth::synth::SynthReport) -> Option<usize> {
    match report.outcome {
        Outcome::Realizable { size, .. } => Some(size),
        _ => None,
    }
}

/// Direct and AHT encodings agree size by size; the reduction never beats the direct minimum.
pub fn encoder_suite(formulas: usize, max_size: usize, seed: u64, solver: &SolverConfig) -> Suite {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut realizable = 0;
    for _ in 0..formulas {
        let f = random_ctl(&mut rng, 1).to_pnf();
        let spec = Specification::new(vec!["r".into()], vec!["g".into()], starsynth::Semantics::Moore, f.clone())
            .map_err(|e| e.to_string())?;
        let run = |enc: Encoding, max: usize| {
            let mut p = SynthProblem::new(spec.clone(), enc, max);
            p.solver = solver.clone();
            p
        };
        let direct = synth_loop(&run(Encoding::CtlDirect, max_size)).map_err(|e| format!("{f}: {e}"))?;
        let aht = synth_loop(&run(Encoding::CtlAht, max_size)).map_err(|e| format!("{f}: {e}"))?;
        for n in 1..=max_size {
            if direct.verdict_at(false, n) != aht.verdict_at(false, n) {
                return Err(format!("{f}: direct and AHT disagree at size {n}"));
            }
        }
        let via = synth_via_ltl(&run(Encoding::Ltl, max_size + 1), None).map_err(|e| format!("{f}: {e}"))?;
        match (min_size(&direct), via.machine.as_ref()) {
            (None, Some(m)) if m.num_states() <= max_size => {
                return Err(format!("{f}: reduction found {} states, direct found none", m.num_states()))
            }
            (Some(d), Some(m)) if m.num_states() < d => {
                return Err(format!("{f}: reduction found {} states below the direct minimum {d}", m.num_states()))
            }
            _ => {}
        }
        realizable += usize::from(min_size(&direct).is_some());
    }
    Ok(format!("{formulas} formulas, {realizable} realizable"))
}
