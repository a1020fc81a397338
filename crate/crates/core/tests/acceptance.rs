//! Acceptance run: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ftqec::codes::{self, LookupDecoder, StabilizerCode};
use ftqec::distance::min_distance_nullspace;
use ftqec::gadgets;
use ftqec::oracle::decoder_assertion;
use ftqec::program::{CExpr, GadgetKind, LoopClass, Program, Stmt, VarRef};
use ftqec::smt::SolverConfig;
use ftqec::stabilizer::Tableau;
use ftqec::verify::{brute_force, verify, BruteOptions, Mode, Status, Verdict, VerifyOptions};
use ftqec::{Assignment, Atom, BitVec, Expr, ExprPool, Gate, Origin, Pauli1, PauliOp, SymTableau, SymbolKind};

/// Wall-clock limit per cat-state case.
const CAT_LIMIT: Duration = Duration::from_secs(60);
/// Allowed slowdown against the reference timings of the d = 3 gadgets.
const TIME_FACTOR: f64 = 30.0;
const CORPUS_SIZE: usize = 60;
const TABLEAU_CASES: usize = 250;
const SEQUENCE_CASES: usize = 10_000;

type Outcome = Result<String, String>;
/// Gadget, budget, expected status, and for violations the witness's
/// (faults, output errors).
type CatCase = (&'static str, usize, Status, Option<(usize, usize)>);
type Criterion = (&'static str, fn() -> Outcome);

fn solver() -> SolverConfig {
    SolverConfig::resolve(None, Duration::from_secs(600))
}

fn need_solver() -> Result<SolverConfig, String> {
    let s = solver();
    if s.is_available() {
        Ok(s)
    } else {
        Err(format!("solver `{}` not available", s.path.display()))
    }
}

fn run(p: &Program, t: usize, mode: Mode, s: &SolverConfig) -> Result<(Verdict, Duration), String> {
    let mut o = VerifyOptions::new(t, s.clone());
    o.mode = mode;
    let start = Instant::now();
    let v = verify(p, &o).map_err(|e| e.to_string())?;
    Ok((v, start.elapsed()))
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::FaultTolerant => "fault_tolerant",
        Status::NotFaultTolerant => "not_fault_tolerant",
        Status::Inconclusive => "inconclusive",
    }
}

// ---------------------------------------------------------------- 1

fn cat_cases() -> Outcome {
    let s = need_solver()?;
    let cases: [CatCase; 4] = [
        ("cat4_bad", 1, Status::NotFaultTolerant, Some((1, 2))),
        ("cat4_good", 1, Status::FaultTolerant, None),
        ("cat8", 2, Status::FaultTolerant, None),
        ("cat8", 3, Status::NotFaultTolerant, Some((3, 4))),
    ];
    let mut notes = Vec::new();
    for (name, t, want, witness) in cases {
        let spec = gadgets::builtin(name).map_err(|e| e.to_string())?;
        let (v, dt) = run(&spec.program, t, spec.mode, &s)?;
        if v.status != want {
            return Err(format!("{name} t={t}: got {}", status_name(v.status)));
        }
        if dt > CAT_LIMIT {
            return Err(format!("{name} t={t}: {:.1} s exceeds {} s", dt.as_secs_f64(), CAT_LIMIT.as_secs()));
        }
        if let Some((faults, errors)) = witness {
            let c = v.counterexample.as_ref().ok_or(format!("{name} t={t}: no counterexample"))?;
            if !c.replay_ok {
                return Err(format!("{name} t={t}: witness replay failed"));
            }
            if c.exec_faults != faults || c.output_errors != vec![Some(errors)] {
                return Err(format!(
                    "{name} t={t}: witness has {} faults, errors {:?}; want {faults}/{errors}",
                    c.exec_faults, c.output_errors
                ));
            }
            notes.push(format!("{name}@{t} NFT {faults}f/{errors}e {:.2}s", dt.as_secs_f64()));
        } else {
            notes.push(format!("{name}@{t} FT {:.2}s", dt.as_secs_f64()));
        }
    }
    Ok(notes.join(", "))
}

// ---------------------------------------------------------------- 2

fn table_rows() -> Outcome {
    let s = need_solver()?;
    // (gadget, reference seconds)
    let rows: [(&str, f64); 13] = [
        ("prep0:color_7_1_3", 2.81),
        ("cnot:color_7_1_3", 1.36),
        ("measure:color_7_1_3", 3.65),
        ("ec:color_7_1_3", 3.15),
        ("prep0:rsc_9_1_3", 2.96),
        ("cnot:rsc_9_1_3", 1.27),
        ("measure:rsc_9_1_3", 3.91),
        ("ec:rsc_9_1_3", 3.10),
        ("prep0:toric_18_2_3", 4.42),
        ("cnot:toric_18_2_3", 2.37),
        ("measure:toric_18_2_3", 5.53),
        ("ec:toric_18_2_3", 4.51),
        ("distill_ec:rm_15_1_3", 4.89),
    ];
    let mut worst = (0.0f64, "");
    let mut total = 0.0;
    for (name, reference) in rows {
        let spec = gadgets::builtin(name).map_err(|e| e.to_string())?;
        let code = codes::builtin(spec.code.as_deref().unwrap()).map_err(|e| e.to_string())?;
        let (v, dt) = run(&spec.program, code.t(), spec.mode, &s)?;
        if v.status != Status::FaultTolerant {
            return Err(format!("{name}: got {} ({:?})", status_name(v.status), v.reason));
        }
        let secs = dt.as_secs_f64();
        total += secs;
        if secs > TIME_FACTOR * reference {
            return Err(format!("{name}: {secs:.1} s exceeds {TIME_FACTOR}x {reference} s"));
        }
        if secs / reference > worst.0 {
            worst = (secs / reference, name);
        }
    }
    if gadgets::builtin("distill_ec:rm_15_1_3").map_err(|e| e.to_string())?.mode != Mode::Ideal {
        return Err("distillation EC is not checked in ideal mode".into());
    }
    Ok(format!(
        "13 gadgets fault_tolerant, total {total:.1} s, worst ratio {:.2}x ({}) <= {TIME_FACTOR}x",
        worst.0, worst.1
    ))
}

// ---------------------------------------------------------------- 3

fn bug_regressions() -> Outcome {
    let s = need_solver()?;
    let cases = [
        ("ec_bad_ordering:color_7_1_3", Status::NotFaultTolerant),
        ("measure_2t:rsc_9_1_3", Status::NotFaultTolerant),
        ("measure:rsc_9_1_3", Status::FaultTolerant),
    ];
    let mut notes = Vec::new();
    for (name, want) in cases {
        let spec = gadgets::builtin(name).map_err(|e| e.to_string())?;
        let code = codes::builtin(spec.code.as_deref().unwrap()).map_err(|e| e.to_string())?;
        let (v, _) = run(&spec.program, code.t(), spec.mode, &s)?;
        if v.status != want {
            return Err(format!("{name}: got {}", status_name(v.status)));
        }
        if want == Status::NotFaultTolerant && !v.counterexample.as_ref().is_some_and(|c| c.replay_ok) {
            return Err(format!("{name}: counterexample not confirmed by replay"));
        }
        notes.push(format!("{name} {}", status_name(v.status)));
    }
    Ok(notes.join(", "))
}

// ---------------------------------------------------------------- 4

fn v(name: &str) -> VarRef {
    VarRef::plain(name)
}

/// Random cat-state preparation on at most 8 qubits: fan-out or chain
/// encoding, optional identity Pauli pairs, and 0-3 parity checks through
/// one reused ancilla inside a memoryless loop.
fn corpus_program(rng: &mut ChaCha8Rng) -> Program {
    let w = rng.gen_range(3..=7);
    let chk = w;
    let mut body: Vec<Stmt> = (0..w).map(Stmt::init).collect();
    body.push(Stmt::gate(Gate::H, &[0]));
    let chain = rng.gen_bool(0.5);
    for q in 1..w {
        let src = if chain { q - 1 } else { 0 };
        body.push(Stmt::gate(Gate::Cnot, &[src, q]));
        if rng.gen_bool(0.15) {
            let g = *[Gate::X, Gate::Z, Gate::Y].choose(rng).unwrap();
            let target = rng.gen_range(0..=q);
            body.push(Stmt::gate(g, &[target]));
            body.push(Stmt::gate(g, &[target]));
        }
    }
    let mut pairs: Vec<(usize, usize)> = (0..w).flat_map(|a| (a + 1..w).map(move |b| (a, b))).collect();
    pairs.shuffle(rng);
    let checks = &pairs[..rng.gen_range(0..=3)];
    let mut p = Program::new(if checks.is_empty() { w } else { w + 1 });
    p.blocks = vec![(0..w).collect()];
    p.kind = Some(GadgetKind::Prep);
    if checks.is_empty() {
        p.body = body;
    } else {
        let mut conds = Vec::new();
        for (i, &(a, b)) in checks.iter().enumerate() {
            let name = format!("k{i}");
            body.push(Stmt::init(chk));
            body.push(Stmt::gate(Gate::Cnot, &[a, chk]));
            body.push(Stmt::gate(Gate::Cnot, &[b, chk]));
            body.push(Stmt::measure(v(&name), chk));
            conds.push(CExpr::Eq(Box::new(CExpr::Var(v(&name))), Box::new(CExpr::Const(false))));
        }
        let until = if conds.len() == 1 { conds.pop().unwrap() } else { CExpr::And(conds) };
        p.body = vec![Stmt::repeat(body, until, LoopClass::Memoryless)];
    }
    p.renumber();
    p
}

fn oracle_equivalence() -> Outcome {
    let s = need_solver()?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x000c_0a75);
    let (mut ft, mut nft) = (0, 0);
    for i in 0..CORPUS_SIZE {
        let p = corpus_program(&mut rng);
        let budget = rng.gen_range(1..=2);
        let (sym, _) = run(&p, budget, Mode::Ft, &s)?;
        let brute = brute_force(&p, &BruteOptions::new(budget)).map_err(|e| e.to_string())?;
        if sym.status == Status::Inconclusive || brute.status == Status::Inconclusive {
            return Err(format!("program {i}: inconclusive ({:?} / {:?})", sym.reason, brute.reason));
        }
        if sym.status != brute.status {
            return Err(format!(
                "program {i} (s={budget}): symbolic {} vs enumeration {}\n{p}",
                status_name(sym.status),
                status_name(brute.status)
            ));
        }
        match sym.status {
            Status::FaultTolerant => ft += 1,
            _ => nft += 1,
        }
    }
    Ok(format!("{CORPUS_SIZE}/{CORPUS_SIZE} agree ({ft} fault_tolerant, {nft} not)"))
}

// ---------------------------------------------------------------- 5

fn random_gate(rng: &mut ChaCha8Rng, n: usize) -> (Gate, Vec<usize>) {
    let gates: &[Gate] = if n > 1 { &Gate::ALL } else { &[Gate::H, Gate::S, Gate::X, Gate::Y, Gate::Z] };
    let g = *gates.choose(rng).unwrap();
    let mut qs: Vec<usize> = (0..n).collect();
    qs.shuffle(rng);
    qs.truncate(g.arity());
    (g, qs)
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> SymTableau {
    let mut st = SymTableau::zero_state(n);
    for _ in 0..8 * n {
        let (g, qs) = random_gate(rng, n);
        st.apply_gate(g, &qs).unwrap();
    }
    st
}

fn pauli_from_index(n: usize, mut idx: usize) -> PauliOp {
    let mut p = PauliOp::identity(n);
    for q in 0..n {
        p.set(q, [Pauli1::I, Pauli1::X, Pauli1::Y, Pauli1::Z][idx % 4]);
        idx /= 4;
    }
    p
}

fn distance_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut max_seen = 0;
    for case in 0..TABLEAU_CASES {
        let n = rng.gen_range(1..=6);
        let st = random_state(&mut rng, n);
        let gens = st.gens().to_vec();
        let destabs = st.destabilizers().to_vec();
        let signs_a: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let signs_b: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let rows =
            |signs: &[bool]| -> Vec<PauliOp> { gens.iter().zip(signs).map(|(g, &s)| g.clone().with_sign(s)).collect() };
        let rho = Tableau::from_rows(&rows(&signs_a), &destabs);
        let ideal = Tableau::from_rows(&rows(&signs_b), &destabs);
        // Minimum weight of a Pauli carrying one state to the other.
        let mut brute = usize::MAX;
        for idx in 0..4usize.pow(n as u32) {
            let p = pauli_from_index(n, idx);
            if p.weight() >= brute {
                continue;
            }
            let mut t = rho.clone();
            t.apply_pauli(&p);
            if t.same_state(&ideal) {
                brute = p.weight();
            }
        }
        let diff = BitVec::from_bools(&signs_a.iter().zip(&signs_b).map(|(a, b)| a ^ b).collect::<Vec<_>>());
        let reduced = min_distance_nullspace(&gens, &destabs, &diff, n);
        if reduced != brute {
            return Err(format!("case {case} (n={n}): reduction {reduced} vs brute force {brute}"));
        }
        max_seen = max_seen.max(brute);
    }
    Ok(format!("{TABLEAU_CASES}/{TABLEAU_CASES} tableaus agree (n<=6, distances up to {max_seen})"))
}

// ---------------------------------------------------------------- 6

enum Op {
    Gate(Gate, Vec<usize>),
    CondPauli(PauliOp, Expr),
    Inject(usize, Expr, Expr),
    Measure(usize, Expr, bool),
    Init(usize),
}

const MAX_SYMBOLS: usize = 8;

fn random_cond(rng: &mut ChaCha8Rng, pool: &mut ExprPool, syms: &[Expr]) -> Expr {
    let mut e = Expr::constant(rng.gen());
    for s in syms {
        if rng.gen_bool(0.4) {
            e = e.xor(s);
        }
    }
    if syms.len() >= 2 && rng.gen_bool(0.3) {
        let a = syms.choose(rng).unwrap().clone();
        let b = syms.choose(rng).unwrap().clone();
        let prod = if rng.gen() { pool.and(&a, &b) } else { pool.or(&a, &b) };
        e = e.xor(&prod);
    }
    e
}

fn random_pauli(rng: &mut ChaCha8Rng, n: usize) -> PauliOp {
    pauli_from_index(n, rng.gen_range(0..4usize.pow(n as u32)))
}

fn concretization_case(rng: &mut ChaCha8Rng) -> Result<usize, String> {
    let n = rng.gen_range(1..=6);
    let mut pool = ExprPool::new();
    let mut st = SymTableau::zero_state(n);
    let mut syms: Vec<Expr> = Vec::new();
    let mut ops = Vec::new();
    let len = rng.gen_range(1..=16);
    for step in 0..len as u32 {
        let q = rng.gen_range(0..n);
        let origin = Origin::new(step, q as u32, 0);
        match rng.gen_range(0..10) {
            0..=3 => {
                let (g, qs) = random_gate(rng, n);
                st.apply_gate(g, &qs).map_err(|e| e.to_string())?;
                ops.push(Op::Gate(g, qs));
            }
            4 | 5 => {
                let p = random_pauli(rng, n);
                let c = random_cond(rng, &mut pool, &syms);
                st.conditional_pauli(&p, &c);
                ops.push(Op::CondPauli(p, c));
            }
            6 if syms.len() + 2 <= MAX_SYMBOLS => {
                let e = st.inject_error(q, &mut pool, origin, false, None).map_err(|e| e.to_string())?;
                syms.push(e.ex.clone());
                syms.push(e.ez.clone());
                ops.push(Op::Inject(q, e.ex, e.ez));
            }
            7 | 8 if syms.len() < MAX_SYMBOLS => {
                let m = st.measure(q, &mut pool, origin).map_err(|e| e.to_string())?;
                if m.random {
                    syms.push(m.outcome.clone());
                }
                ops.push(Op::Measure(q, m.outcome, m.random));
            }
            _ => {
                st.initialize(q).map_err(|e| e.to_string())?;
                ops.push(Op::Init(q));
            }
        }
    }
    st.validate().map_err(|e| e.to_string())?;
    let atoms: Vec<Atom> = syms.iter().map(|e| e.atoms()[0]).collect();
    for bits in 0u32..(1 << atoms.len()) {
        let mut a = Assignment::new();
        for (i, &at) in atoms.iter().enumerate() {
            a.set(at, bits >> i & 1 == 1);
        }
        let eval = |e: &Expr| pool.eval(e, &a).map_err(|e| e.to_string());
        let mut conc = Tableau::new(n);
        for op in &ops {
            match op {
                Op::Gate(g, qs) => conc.apply(*g, qs),
                Op::CondPauli(p, c) => {
                    if eval(c)? {
                        conc.apply_pauli(p);
                    }
                }
                Op::Inject(q, ex, ez) => {
                    let p = match (eval(ex)?, eval(ez)?) {
                        (false, false) => continue,
                        (true, false) => Pauli1::X,
                        (false, true) => Pauli1::Z,
                        (true, true) => Pauli1::Y,
                    };
                    conc.apply_pauli(&PauliOp::single(n, *q, p));
                }
                Op::Measure(q, outcome, random) => {
                    let want = eval(outcome)?;
                    let (got, was_random) = conc.measure(*q, want);
                    if got != want || was_random != *random {
                        return Err(format!(
                            "measurement of q{q}: concrete {got}/{was_random}, symbolic {want}/{random}"
                        ));
                    }
                }
                Op::Init(q) => conc.reset(*q),
            }
        }
        let sym = st.concretize(&pool, &a).map_err(|e| e.to_string())?;
        if !sym.same_state(&conc) || !conc.same_state(&sym) {
            return Err(format!("final states differ under assignment {bits:b} (n={n}, {} ops)", ops.len()));
        }
    }
    Ok(atoms.len())
}

fn concretization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut assignments = 0usize;
    for case in 0..SEQUENCE_CASES {
        let k = concretization_case(&mut rng).map_err(|e| format!("sequence {case}: {e}"))?;
        assignments += 1 << k;
    }
    Ok(format!("{SEQUENCE_CASES} sequences, {assignments} assignments checked"))
}

// ---------------------------------------------------------------- 7

/// All Paulis of weight 1..=t on `n` qubits.
fn low_weight(n: usize, t: usize) -> Vec<PauliOp> {
    let mut out = Vec::new();
    let mut frontier = vec![(PauliOp::identity(n), 0usize)];
    for _ in 0..t {
        let mut next = Vec::new();
        for (p, start) in &frontier {
            for q in *start..n {
                for s in [Pauli1::X, Pauli1::Y, Pauli1::Z] {
                    let mut e = p.clone();
                    e.set(q, s);
                    out.push(e.clone());
                    next.push((e, q + 1));
                }
            }
        }
        frontier = next;
    }
    out
}

/// Syndrome bit `i` is 1 when `e` anticommutes with generator `i`, counted
/// qubit by qubit.
fn syndrome_of(code: &StabilizerCode, e: &PauliOp) -> Vec<bool> {
    code.generators
        .iter()
        .map(|g| {
            (0..code.n).filter(|&q| g.get(q) != Pauli1::I && e.get(q) != Pauli1::I && g.get(q) != e.get(q)).count() % 2
                == 1
        })
        .collect()
}

fn r_bits(e: &PauliOp) -> Vec<bool> {
    let n = e.n();
    (0..2 * n).map(|i| if i < n { e.x_bit(i) } else { e.z_bit(i - n) }).collect()
}

fn decoder_soundness_for(name: &str) -> Result<usize, String> {
    let code = codes::builtin(name).map_err(|e| e.to_string())?;
    let t = code.t();
    let n = code.n;
    let dec = LookupDecoder::new(&code, t);
    let mut pool = ExprPool::new();
    let m: Vec<Expr> =
        (0..code.generators.len()).map(|i| pool.fresh(SymbolKind::Outcome, Origin::new(0, i as u32, 0))).collect();
    let r: Vec<Expr> = (0..2 * n).map(|i| pool.fresh(SymbolKind::DecoderOutput, Origin::new(1, 0, i as u32))).collect();
    let assertion = decoder_assertion(&mut pool, &code, &dec, &m, &r);
    let candidates = low_weight(n, t);
    let holds = |s: &[bool], rb: &[bool]| -> Result<bool, String> {
        let mut a = Assignment::new();
        for (e, &b) in m.iter().zip(s) {
            a.set(e.atoms()[0], b);
        }
        for (e, &b) in r.iter().zip(rb) {
            a.set(e.atoms()[0], b);
        }
        pool.eval(&assertion, &a).map_err(|e| e.to_string())
    };
    let mut syndromes: Vec<Vec<bool>> = candidates.iter().map(|e| syndrome_of(&code, e)).collect();
    syndromes.push(vec![false; code.generators.len()]);
    syndromes.sort();
    syndromes.dedup();
    for s in &syndromes {
        let decoded = dec.decode_bits(&BitVec::from_bools(s));
        if !holds(s, &decoded)? {
            return Err(format!("{name}: lookup decoder output violates the assertion for syndrome {s:?}"));
        }
        let mut witnesses = candidates.iter().map(r_bits).chain([vec![false; 2 * n]]);
        if !witnesses.try_fold(false, |found, rb| holds(s, &rb).map(|h| found || h))? {
            return Err(format!("{name}: no weight-{t} correction satisfies syndrome {s:?}"));
        }
        if s.iter().any(|&b| b) && holds(s, &vec![false; 2 * n])? {
            return Err(format!("{name}: the empty correction is accepted for syndrome {s:?}"));
        }
    }
    Ok(syndromes.len())
}

fn decoder_soundness() -> Outcome {
    let a = decoder_soundness_for("color_7_1_3")?;
    let b = decoder_soundness_for("rsc_9_1_3")?;
    Ok(format!("color_7_1_3: {a} syndromes, rsc_9_1_3: {b} syndromes"))
}

// ---------------------------------------------------------------- 8

fn excluded() -> Outcome {
    for name in ["rsc_25_1_5", "toric_50_2_5", "color_17_1_5"] {
        if !codes::is_large(name) {
            return Err(format!("{name} is not gated behind --large"));
        }
    }
    Ok("d=7 rows and d=5 CNOT rows are not run here (hours at desk scale); d=5 codes stay behind --large".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("cat-state verdicts and witnesses", cat_cases),
        ("d=3 gadget verdicts within time tolerance", table_rows),
        ("bug regressions", bug_regressions),
        ("symbolic vs exhaustive enumeration corpus", oracle_equivalence),
        ("distance reduction vs brute-force Pauli distance", distance_reduction),
        ("tableau concretization commutes", concretization),
        ("decoder assertion soundness", decoder_soundness),
        ("large instances excluded", excluded),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("PASS [{}] {name} ({secs:.1} s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name} ({secs:.1} s): {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
