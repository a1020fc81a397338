use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use ftqec::codes;
use ftqec::distance::min_distance_nullspace;
use ftqec::gadgets;
use ftqec::smt::{emit_smtlib, Encoding};
use ftqec::verify::{brute_force, BruteOptions};
use ftqec::{BitVec, SymTableau};
use ftqec_bench::{exact_query, explore, random_matrix};

fn gf2(c: &mut Criterion) {
    let m = random_matrix(128, 256, 1);
    c.bench_function("gf2_rank_128x256", |b| b.iter(|| black_box(&m).rank()));
    c.bench_function("gf2_nullspace_128x256", |b| b.iter(|| black_box(&m).nullspace_vectors()));
}

fn distance(c: &mut Criterion) {
    let code = codes::builtin("rsc_9_1_3").unwrap();
    let gens = code.zero_state_generators();
    let st = SymTableau::from_generators(gens.clone(), vec![ftqec::Expr::zero(); gens.len()]).unwrap();
    let destabs = st.destabilizers().to_vec();
    let diff = BitVec::from_bools(&[true, false, true, true, false, false, true, false, true]);
    c.bench_function("min_distance_rsc9", |b| {
        b.iter(|| min_distance_nullspace(black_box(&gens), &destabs, &diff, code.n))
    });
}

fn symbolic(c: &mut Criterion) {
    let cat = gadgets::builtin("cat8").unwrap().program;
    c.bench_function("symbolic_run_cat8", |b| b.iter(|| explore(black_box(&cat))));
    let distill = gadgets::builtin("distill_ec:rm_15_1_3").unwrap().program;
    c.bench_function("symbolic_run_distill_rm15", |b| b.iter(|| explore(black_box(&distill))));
    let (pool, terminals) = explore(&distill);
    let q = exact_query(&terminals[0], 1);
    c.bench_function("emit_smtlib_distill_rm15", |b| b.iter(|| emit_smtlib(&pool, black_box(&q), Encoding::LowWeight)));
}

fn enumeration(c: &mut Criterion) {
    let cat = gadgets::builtin("cat4_bad").unwrap().program;
    c.bench_function("brute_force_cat4", |b| b.iter(|| brute_force(black_box(&cat), &BruteOptions::new(1)).unwrap()));
}

criterion_group!(benches, gf2, distance, symbolic, enumeration);
criterion_main!(benches);
