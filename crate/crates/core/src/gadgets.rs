//! Program generators for the gadget families: cat-state preparation,
//! cat-state Pauli measurement, logical preparation, transversal CNOT,
//! logical measurement, Shor-style error correction (including a buggy
//! ordering), and the distillation-code recovery check.
//!
//! Qubit layout: data blocks first, then ancillas. Cat states fan out from
//! their first qubit and are verified by parity checks through one reused
//! check ancilla.

use thiserror::Error;

use crate::codes::{load_code, CodeError, StabilizerCode};
use crate::gate::Gate;
use crate::pauli::{i_product, Pauli1, PauliOp};
use crate::program::{CExpr, Cmp, GadgetKind, LoopClass, OracleDecl, OracleKind, Program, Stmt, VarRef};
use crate::verify::Mode;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GadgetError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("unknown gadget `{0}`")]
    Unknown(String),
    #[error("{0}")]
    Unsupported(String),
}

/// Target of a preparation gadget.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrepTarget {
    Zero,
    One,
    /// `|+̄⟩`, the stabilizer state of the H-type family.
    Plus,
    /// `+1` eigenstate of `Ȳ`, the stabilizer state of the S-type family.
    PlusI,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EcVariant {
    Correct,
    /// One conservative loop per generator instead of full rounds.
    BadOrdering,
}

#[derive(Clone, Debug)]
pub struct GadgetSpec {
    pub name: String,
    pub kind: GadgetKind,
    pub code: Option<String>,
    pub mode: Mode,
    pub program: Program,
}

fn v(name: &str) -> VarRef {
    VarRef::plain(name)
}

fn var(name: &str) -> CExpr {
    CExpr::Var(v(name))
}

fn eq0(name: &str) -> CExpr {
    CExpr::Eq(Box::new(var(name)), Box::new(CExpr::Const(false)))
}

fn all(mut cs: Vec<CExpr>) -> CExpr {
    match cs.len() {
        0 => CExpr::Const(true),
        1 => cs.pop().unwrap(),
        _ => CExpr::And(cs),
    }
}

fn xor_of(names: &[String]) -> CExpr {
    match names.len() {
        0 => CExpr::Const(false),
        1 => var(&names[0]),
        _ => CExpr::Xor(names.iter().map(|s| var(s)).collect()),
    }
}

/// Fan-out cat state on `qs`, verified by `checks` (pairs of positions in
/// `qs`, 0-based) through ancilla `chk`. With checks, the preparation is a
/// memoryless loop that restarts until every check reads 0.
pub fn cat_state(qs: &[usize], checks: &[(usize, usize)], chk: usize, tag: &str) -> Vec<Stmt> {
    let mut body: Vec<Stmt> = qs.iter().map(|&q| Stmt::init(q)).collect();
    body.push(Stmt::gate(Gate::H, &[qs[0]]));
    for &q in &qs[1..] {
        body.push(Stmt::gate(Gate::Cnot, &[qs[0], q]));
    }
    if checks.is_empty() {
        return body;
    }
    let mut conds = Vec::new();
    for (i, &(a, b)) in checks.iter().enumerate() {
        let name = format!("{tag}k{i}");
        body.push(Stmt::init(chk));
        body.push(Stmt::gate(Gate::Cnot, &[qs[a], chk]));
        body.push(Stmt::gate(Gate::Cnot, &[qs[b], chk]));
        body.push(Stmt::measure(v(&name), chk));
        conds.push(eq0(&name));
    }
    vec![Stmt::repeat(body, all(conds), LoopClass::Memoryless)]
}

/// Checks used for a cat state of `w` qubits inside larger gadgets: none
/// up to 3 qubits, the pair `(2, 3)` for 4, consecutive pairs beyond.
pub fn default_cat_checks(w: usize) -> Vec<(usize, usize)> {
    match w {
        0..=3 => Vec::new(),
        4 => vec![(2, 3)],
        _ => (0..w - 1).map(|i| (i, i + 1)).collect(),
    }
}

/// Controlled-`p` from `ctrl` onto `q`.
fn controlled(p: Pauli1, ctrl: usize, q: usize, out: &mut Vec<Stmt>) {
    match p {
        Pauli1::I => {}
        Pauli1::X => out.push(Stmt::gate(Gate::Cnot, &[ctrl, q])),
        Pauli1::Z => out.push(Stmt::gate(Gate::Cz, &[ctrl, q])),
        Pauli1::Y => {
            // S·X·S† = Y, with S† = S³.
            for _ in 0..3 {
                out.push(Stmt::gate(Gate::S, &[q]));
            }
            out.push(Stmt::gate(Gate::Cnot, &[ctrl, q]));
            out.push(Stmt::gate(Gate::S, &[q]));
        }
    }
}

/// Measures the unsigned Pauli `p` (on physical qubits) with a cat state on
/// `anc[..wt(p)]`, checked through `anc[wt(p)]`; the parity is assigned to
/// `result`.
pub fn cat_measure(p: &PauliOp, anc: &[usize], result: &str) -> Vec<Stmt> {
    let support = p.support();
    let w = support.len();
    let cat = &anc[..w];
    let mut out = cat_state(cat, &default_cat_checks(w), anc[w], &format!("{result}_"));
    for (i, &q) in support.iter().enumerate() {
        controlled(p.get(q), cat[i], q, &mut out);
    }
    let mut bits = Vec::with_capacity(w);
    for (i, &a) in cat.iter().enumerate() {
        let b = format!("{result}_b{i}");
        out.push(Stmt::gate(Gate::H, &[a]));
        out.push(Stmt::measure(v(&b), a));
        bits.push(b);
    }
    out.push(Stmt::assign(v(result), xor_of(&bits)));
    out
}

/// Measures `p` with a single ancilla, no verification.
pub fn bare_measure(p: &PauliOp, anc: usize, result: &str) -> Vec<Stmt> {
    let mut out = vec![Stmt::init(anc), Stmt::gate(Gate::H, &[anc])];
    for q in p.support() {
        controlled(p.get(q), anc, q, &mut out);
    }
    out.push(Stmt::gate(Gate::H, &[anc]));
    out.push(Stmt::measure(v(result), anc));
    out
}

fn finish(mut p: Program) -> Program {
    p.renumber();
    p
}

/// Stand-alone cat-state preparation over `size` qubits with 1-based check
/// pairs; the check ancilla is qubit `size`.
pub fn cat_prep(size: usize, checks_1based: &[(usize, usize)]) -> Program {
    let qs: Vec<usize> = (0..size).collect();
    let checks: Vec<(usize, usize)> = checks_1based.iter().map(|&(a, b)| (a - 1, b - 1)).collect();
    let mut p = Program::new(size + 1);
    p.blocks = vec![qs.clone()];
    p.kind = Some(GadgetKind::Prep);
    p.body = cat_state(&qs, &checks, size, "");
    finish(p)
}

fn max_weight(ops: &[PauliOp]) -> usize {
    ops.iter().map(PauliOp::weight).max().unwrap_or(0)
}

/// Ancillas for cat measurements of operators up to weight `w`, starting
/// at qubit `first`.
fn cat_ancillas(first: usize, w: usize) -> Vec<usize> {
    (first..first + w + 1).collect()
}

/// `rounds` full rounds measuring `ops`; outcome of operator `j` in round
/// `r` is `{tag}{r}_{j}`. Returns the statements and the agreement
/// condition between all rounds.
fn syndrome_rounds(ops: &[PauliOp], anc: &[usize], rounds: usize, tag: &str) -> (Vec<Stmt>, CExpr) {
    let mut body = Vec::new();
    for r in 0..rounds {
        for (j, op) in ops.iter().enumerate() {
            body.extend(cat_measure(op, anc, &format!("{tag}{r}_{j}")));
        }
    }
    (body, agreement(ops.len(), rounds, tag))
}

fn agreement(ops: usize, rounds: usize, tag: &str) -> CExpr {
    let mut conds = Vec::new();
    for r in 1..rounds {
        for j in 0..ops {
            conds.push(CExpr::Eq(Box::new(var(&format!("{tag}{r}_{j}"))), Box::new(var(&format!("{tag}0_{j}")))));
        }
    }
    all(conds)
}

/// Logical state preparation: measure the generators and the target's
/// logical operator `t + 1` times until all rounds agree, then apply pure
/// errors to fix every sign.
pub fn prep(code: &StabilizerCode, target: PrepTarget) -> Result<Program, GadgetError> {
    let n = code.n;
    let mut ops = code.generators.clone();
    // Outcome m of an unsigned operator means sign (−1)^m; every logical
    // operator must end with sign +1, or −1 for |1̄⟩.
    let mut targets = vec![false; ops.len()];
    for i in 0..code.k {
        let (logical, flip) = match target {
            PrepTarget::Zero => (code.logical_z[i].clone(), false),
            PrepTarget::One => (code.logical_z[i].clone(), true),
            PrepTarget::Plus => (code.logical_x[i].clone(), false),
            PrepTarget::PlusI => {
                let y = i_product(&code.logical_x[i], &code.logical_z[i])
                    .ok()
                    .flatten()
                    .ok_or_else(|| GadgetError::Unsupported("logical X and Z do not anticommute".into()))?;
                (y, false)
            }
        };
        ops.push(logical.unsigned());
        targets.push(logical.sign() ^ flip);
    }
    let pure = StabilizerCode::pure_errors(&ops, n)
        .ok_or_else(|| GadgetError::Unsupported("measured operators are dependent".into()))?;
    let w = max_weight(&ops);
    let anc = cat_ancillas(n, w);
    let rounds = code.t() + 1;
    let mut p = Program::new(n + w + 1);
    p.blocks = vec![(0..n).collect()];
    p.kind = Some(GadgetKind::Prep);
    p.code = Some(code.name.clone());
    p.body = (0..n).map(Stmt::init).collect();
    let (body, until) = syndrome_rounds(&ops, &anc, rounds, "m");
    p.body.push(Stmt::repeat(body, until, LoopClass::Conservative));
    for (j, e) in pure.iter().enumerate() {
        let cond = if targets[j] { CExpr::Not(Box::new(var(&format!("m0_{j}")))) } else { var(&format!("m0_{j}")) };
        p.body.push(Stmt::if_else(cond, pauli_gates(e), Vec::new()));
    }
    Ok(finish(p))
}

fn pauli_gates(e: &PauliOp) -> Vec<Stmt> {
    e.support()
        .into_iter()
        .map(|q| {
            let g = match e.get(q) {
                Pauli1::X => Gate::X,
                Pauli1::Y => Gate::Y,
                Pauli1::Z => Gate::Z,
                Pauli1::I => unreachable!(),
            };
            Stmt::gate(g, &[q])
        })
        .collect()
}

/// Transversal CNOT from block 0 to block 1.
pub fn cnot(code: &StabilizerCode) -> Program {
    let n = code.n;
    let mut p = Program::new(2 * n);
    p.blocks = vec![(0..n).collect(), (n..2 * n).collect()];
    p.kind = Some(GadgetKind::Gate);
    p.code = Some(code.name.clone());
    p.body = (0..n).map(|i| Stmt::gate(Gate::Cnot, &[i, n + i])).collect();
    p.ideal = p.body.clone();
    finish(p)
}

fn decoder_decl(code: &StabilizerCode) -> OracleDecl {
    OracleDecl { name: "dec".into(), kind: OracleKind::Decoder { code: code.name.clone(), t: None } }
}

/// Decode the syndrome held in `syn` and apply the correction.
fn decode_and_correct(code: &StabilizerCode, syn: &[String], out: &str) -> Vec<Stmt> {
    let n = code.n;
    let mut body = vec![Stmt::oracle(v(out), "dec", syn.iter().map(|s| var(s)).collect())];
    for i in 0..n {
        body.push(Stmt::if_else(CExpr::Var(VarRef::indexed(out, i)), vec![Stmt::gate(Gate::X, &[i])], Vec::new()));
        body.push(Stmt::if_else(CExpr::Var(VarRef::indexed(out, n + i)), vec![Stmt::gate(Gate::Z, &[i])], Vec::new()));
    }
    body
}

/// Shor-style error correction on the data block `0..n`, with cat
/// ancillas from `first_anc`. Returns the statements.
fn shor_ec_body(code: &StabilizerCode, first_anc: usize, variant: EcVariant, tag: &str) -> Vec<Stmt> {
    let gens = &code.generators;
    let anc = cat_ancillas(first_anc, max_weight(gens));
    let rounds = code.t() + 1;
    let mut body = Vec::new();
    let syn: Vec<String> = match variant {
        EcVariant::Correct => {
            let (b, until) = syndrome_rounds(gens, &anc, rounds, tag);
            body.push(Stmt::repeat(b, until, LoopClass::Conservative));
            (0..gens.len()).map(|j| format!("{tag}0_{j}")).collect()
        }
        EcVariant::BadOrdering => {
            let mut names = Vec::new();
            for (j, g) in gens.iter().enumerate() {
                let mut b = Vec::new();
                for r in 0..rounds {
                    b.extend(cat_measure(g, &anc, &format!("{tag}{r}_{j}")));
                }
                let conds = (1..rounds)
                    .map(|r| CExpr::Eq(Box::new(var(&format!("{tag}{r}_{j}"))), Box::new(var(&format!("{tag}0_{j}")))))
                    .collect();
                body.push(Stmt::repeat(b, all(conds), LoopClass::Conservative));
                names.push(format!("{tag}0_{j}"));
            }
            names
        }
    };
    body.extend(decode_and_correct(code, &syn, &format!("{tag}r")));
    body
}

pub fn shor_ec(code: &StabilizerCode, variant: EcVariant) -> Program {
    let n = code.n;
    let w = max_weight(&code.generators);
    let mut p = Program::new(n + w + 1);
    p.blocks = vec![(0..n).collect()];
    p.kind = Some(GadgetKind::Ec);
    p.code = Some(code.name.clone());
    p.oracles = vec![decoder_decl(code)];
    p.body = shor_ec_body(code, n, variant, "s");
    finish(p)
}

/// Logical Z measurement: `reps` rounds of (cat measurement of `Z̄`, error
/// correction), then a majority vote.
pub fn measure_z(code: &StabilizerCode, reps: usize) -> Program {
    let n = code.n;
    let zl = code.logical_z[0].unsigned();
    let w = max_weight(&code.generators).max(zl.weight());
    let mut p = Program::new(n + w + 1);
    p.blocks = vec![(0..n).collect()];
    p.kind = Some(GadgetKind::Measure);
    p.code = Some(code.name.clone());
    p.oracles = vec![decoder_decl(code)];
    let anc = cat_ancillas(n, zl.weight());
    let mut outs = Vec::new();
    for r in 0..reps {
        let o = format!("o{r}");
        p.body.extend(cat_measure(&zl, &anc, &o));
        if code.logical_z[0].sign() {
            p.body.push(Stmt::assign(v(&o), CExpr::Not(Box::new(var(&o)))));
        }
        p.body.extend(shor_ec_body(code, n, EcVariant::Correct, &format!("e{r}_")));
        outs.push(var(&o));
    }
    p.body.push(Stmt::assign(v("res"), CExpr::Count { terms: outs, cmp: Cmp::Ge, k: (reps / 2 + 1) as u32 }));
    p.result = Some(v("res"));
    finish(p)
}

/// Recovery of the distillation code checked in the ideal case: one bare
/// ancilla measurement per generator, decode, correct.
pub fn distill_ec(code: &StabilizerCode) -> Program {
    let n = code.n;
    let mut p = Program::new(n + 1);
    p.blocks = vec![(0..n).collect()];
    p.kind = Some(GadgetKind::Ec);
    p.code = Some(code.name.clone());
    p.oracles = vec![decoder_decl(code)];
    let mut syn = Vec::new();
    for (j, g) in code.generators.iter().enumerate() {
        let name = format!("m{j}");
        p.body.extend(bare_measure(g, n, &name));
        syn.push(name);
    }
    p.body.extend(decode_and_correct(code, &syn, "r"));
    finish(p)
}

/// Gadgets checked on the inner code of a distillation protocol, and the
/// distillation code's own recovery.
pub fn magic_suite(
    inner: &StabilizerCode,
    distill: &StabilizerCode,
) -> Result<(Vec<GadgetSpec>, GadgetSpec), GadgetError> {
    let mut bob = Vec::new();
    for kind in ["prep0", "cnot", "measure", "ec"] {
        bob.push(build(kind, Some(inner))?);
    }
    Ok((bob, build("distill_ec", Some(distill))?))
}

/// Gadget kinds accepted by [`build`].
pub const KINDS: &[&str] = &[
    "prep0",
    "prep1",
    "prep_plus",
    "prep_plus_i",
    "cnot",
    "measure",
    "measure_2t",
    "ec",
    "ec_bad_ordering",
    "distill_ec",
];

/// Named stand-alone programs.
pub const NAMED: &[&str] = &["cat4_good", "cat4_bad", "cat8"];

pub fn build(kind: &str, code: Option<&StabilizerCode>) -> Result<GadgetSpec, GadgetError> {
    let named = |name: &str, program: Program| GadgetSpec {
        name: name.to_string(),
        kind: GadgetKind::Prep,
        code: None,
        mode: Mode::Ft,
        program,
    };
    match kind {
        "cat4_good" => return Ok(named(kind, cat_prep(4, &[(3, 4)]))),
        "cat4_bad" => return Ok(named(kind, cat_prep(4, &[(2, 3)]))),
        "cat8" => {
            let checks: Vec<(usize, usize)> = (1..8).map(|i| (i, i + 1)).collect();
            return Ok(named(kind, cat_prep(8, &checks)));
        }
        _ => {}
    }
    let code = code.ok_or_else(|| GadgetError::Unsupported(format!("gadget `{kind}` needs a code")))?;
    let t = code.t();
    let (program, mode) = match kind {
        "prep0" => (prep(code, PrepTarget::Zero)?, Mode::Ft),
        "prep1" => (prep(code, PrepTarget::One)?, Mode::Ft),
        "prep_plus" => (prep(code, PrepTarget::Plus)?, Mode::Ft),
        "prep_plus_i" => (prep(code, PrepTarget::PlusI)?, Mode::Ft),
        "cnot" => (cnot(code), Mode::Ft),
        "measure" => (measure_z(code, 2 * t + 1), Mode::Ft),
        "measure_2t" => (measure_z(code, 2 * t), Mode::Ft),
        "ec" => (shor_ec(code, EcVariant::Correct), Mode::Ft),
        "ec_bad_ordering" => (shor_ec(code, EcVariant::BadOrdering), Mode::Ft),
        "distill_ec" => (distill_ec(code), Mode::Ideal),
        _ => return Err(GadgetError::Unknown(kind.to_string())),
    };
    Ok(GadgetSpec {
        name: format!("{kind}:{}", code.name),
        kind: program.kind.unwrap(),
        code: Some(code.name.clone()),
        mode,
        program,
    })
}

/// Resolves `NAME` (a stand-alone program) or `KIND:CODE`.
pub fn builtin(name: &str) -> Result<GadgetSpec, GadgetError> {
    if NAMED.contains(&name) {
        return build(name, None);
    }
    let (kind, code) = name.split_once(':').ok_or_else(|| GadgetError::Unknown(name.to_string()))?;
    let code = load_code(code)?;
    build(kind, Some(&code))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::builtin as code;
    use crate::interp::{resolve_oracles, IdealDriver, Machine};
    use crate::program::{parse, well_formed};
    use crate::stabilizer::Tableau;

    #[test]
    fn generated_programs_roundtrip_and_are_well_formed() {
        for c in ["color_7_1_3", "rsc_9_1_3"] {
            let code = code(c).unwrap();
            for k in KINDS {
                if *k == "distill_ec" {
                    continue;
                }
                let g = build(k, Some(&code)).unwrap();
                well_formed(&g.program).unwrap_or_else(|e| panic!("{k}:{c}: {e}"));
                let text = g.program.to_string();
                assert_eq!(parse(&text).unwrap(), g.program, "{k}:{c}");
            }
        }
    }

    #[test]
    fn fault_free_prep_reaches_target() {
        let code = code("color_7_1_3").unwrap();
        for (target, op, sign) in [
            (PrepTarget::Zero, code.logical_z[0].clone(), false),
            (PrepTarget::One, code.logical_z[0].clone(), true),
            (PrepTarget::Plus, code.logical_x[0].clone(), false),
        ] {
            let p = prep(&code, target).unwrap();
            let oracles = resolve_oracles(&p).unwrap();
            // Random cat outcomes: try a few outcome streams.
            for seed in 0..4u32 {
                let outs: Vec<bool> = (0..200).map(|i| (i * 7 + seed) % 3 == 0).collect();
                let out = Machine::new(&p, &oracles).run(Tableau::new(p.qubits), &mut IdealDriver::new(outs)).unwrap();
                let data: Vec<usize> = (0..7).collect();
                for g in &code.generators {
                    assert_eq!(out.state.sign_of(&g.embed(p.qubits, &data)), Some(false));
                }
                assert_eq!(out.state.sign_of(&op.embed(p.qubits, &data)), Some(sign));
            }
        }
    }
}
