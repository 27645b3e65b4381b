use criterion::{black_box, criterion_group, criterion_main, Criterion};
use starsynth::automaton::ltl_to_nbw;
use starsynth::modelcheck::mc_ctl;
use starsynth::rings::{compose_ring, ProcessTemplate, Scheduler, RCV, SND, TOK};
use starsynth::synth::{encode, synth_loop, Encoding, Outcome, SynthProblem};
use starsynth::{parse_formula, parse_spec, Machine, Semantics};

const RESETTABLE2: &str = "inputs r1, r2; outputs g1, g2; moore;
formula E G (!g1 & !g2) & A G E F (!g1 & !g2) & A G (r1 -> F g1) & A G (r2 -> F g2) & A G !(g1 & g2);";

fn tableau(c: &mut Criterion) {
    let f = parse_formula("G !(g1 & g2) & G (r1 -> F g1) & G (r2 -> F g2) & G (g1 -> X (!g1 U r1))").unwrap().to_pnf();
    let props: Vec<String> = ["r1", "r2", "g1", "g2"].iter().map(|s| s.to_string()).collect();
    c.bench_function("ltl_to_nbw/arbiter", |b| b.iter(|| ltl_to_nbw(black_box(&f), &props).unwrap()));
}

fn encoding(c: &mut Criterion) {
    let s = parse_spec(RESETTABLE2).unwrap();
    c.bench_function("encode/ctl_direct_size3", |b| b.iter(|| encode(black_box(&s), Encoding::CtlDirect, 3).unwrap()));
    c.bench_function("encode/ctl_aht_size3", |b| b.iter(|| encode(black_box(&s), Encoding::CtlAht, 3).unwrap()));
}

fn model_checking(c: &mut Criterion) {
    let s = parse_spec(RESETTABLE2).unwrap();
    let r = synth_loop(&SynthProblem::new(s.clone(), Encoding::CtlDirect, 3));
    let Ok(r) = r else { return };
    let Outcome::Realizable { machine, .. } = r.outcome else { return };
    c.bench_function("mc_ctl/resettable2", |b| b.iter(|| mc_ctl(black_box(&machine), &s.formula).unwrap()));
}

fn synthesis(c: &mut Criterion) {
    let s = parse_spec("inputs r; outputs g; moore; formula E G !g & A G (r -> F g) & A G E F !g;").unwrap();
    let mut g = c.benchmark_group("synth");
    g.sample_size(10);
    g.bench_function("resettable1_aht", |b| b.iter(|| synth_loop(&SynthProblem::new(s.clone(), Encoding::CtlAht, 2))));
    g.finish();
}

fn rings(c: &mut Criterion) {
    let m = Machine {
        kind: Semantics::Moore,
        inputs: vec!["r".into(), RCV.into()],
        outputs: vec!["g".into(), SND.into(), TOK.into()],
        trans: vec![vec![0, 0, 2, 2], vec![2, 2, 2, 2], vec![0, 0, 0, 0]],
        out: vec![vec![0], vec![0b100], vec![0b111]],
    };
    let t = ProcessTemplate { machine: m, init_tok: 1, init_ntok: 0 };
    c.bench_function("compose_ring/n5", |b| b.iter(|| compose_ring(black_box(&t), 5, Scheduler::Interleaving).unwrap()));
}

criterion_group!(benches, tableau, encoding, model_checking, synthesis, rings);
criterion_main!(benches);
