//! SMT-LIB2 lowering of per-path fault-tolerance queries, and a solver
//! driver over a subprocess pipe.
//!
//! A query asserts the path condition, the fault budget and the *negated*
//! post-condition, so `unsat` means the path is fault-tolerant and a `sat`
//! model is a counterexample.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::distance::WeightTable;
use crate::expr::Node;
use crate::expr::{Atom, Expr, ExprPool, FaultCounter};
use crate::pauli::PauliOp;

/// How the distance post-condition is lowered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// Disjunction over the syndromes of all Paulis of weight at most `t`
    /// (exact because the budget bounds the allowed distance by `t`).
    LowWeight,
    /// `∀w. wt(Nw ⊕ p) > bound` with `w` a bit-vector.
    Quantified,
    /// The same with `w` expanded over all values; blocks of at most 12
    /// generators only.
    Expanded,
}

impl std::str::FromStr for Encoding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "low-weight" | "lowweight" => Ok(Encoding::LowWeight),
            "quantified" => Ok(Encoding::Quantified),
            "expanded" => Ok(Encoding::Expanded),
            _ => Err(format!("unknown encoding `{s}` (low-weight, quantified, expanded)")),
        }
    }
}

/// Distance data for one block, in block-local qubit indices.
#[derive(Clone, Debug)]
pub struct BlockDistance {
    pub n: usize,
    /// Unsigned block-local generators of the ideal state.
    pub gens: Vec<PauliOp>,
    pub destabs: Vec<PauliOp>,
    /// `diff[j] = 1` iff the actual and ideal phases of `gens[j]` differ.
    pub diff: Vec<Expr>,
}

#[derive(Clone, Debug)]
pub enum PostCondition {
    /// Every block is within `bound` of the ideal.
    Distance { blocks: Vec<BlockDistance>, bound: FaultCounter },
    /// The recorded outcome equals the ideal one.
    Outcome { actual: Expr, ideal: Expr },
    /// The output equals the ideal exactly.
    Exact { diffs: Vec<Expr> },
    /// The output is not even in the ideal's unsigned stabilizer group.
    Unsatisfiable,
}

#[derive(Clone, Debug)]
pub struct FtQuery {
    pub phi: Vec<Expr>,
    /// Each counter must be at most the given value.
    pub budget: Vec<(FaultCounter, usize)>,
    pub post: PostCondition,
    /// Upper bound on the distance bound implied by the budget.
    pub t: usize,
}

/// An emitted script with the symbols it declares.
#[derive(Clone, Debug)]
pub struct Script {
    pub text: String,
    pub symbols: Vec<(Atom, String)>,
}

fn atom_name(pool: &ExprPool, a: Atom) -> String {
    pool.name_of(a)
}

/// SMT-LIB text of `e`, referring to atoms by name.
pub fn expr_text(pool: &ExprPool, e: &Expr) -> String {
    if let Some(b) = e.as_const() {
        return if b { "true" } else { "false" }.to_string();
    }
    let names: Vec<String> = e.atoms().iter().map(|a| atom_name(pool, *a)).collect();
    let core = if names.len() == 1 { names[0].clone() } else { format!("(xor {})", names.join(" ")) };
    if e.const_part() {
        format!("(not {core})")
    } else {
        core
    }
}

fn counter_text(pool: &ExprPool, c: &FaultCounter) -> String {
    match c.terms().len() {
        0 => "0".to_string(),
        1 => format!("(ite {} 1 0)", expr_text(pool, &c.terms()[0])),
        _ => {
            let parts: Vec<String> = c.terms().iter().map(|t| format!("(ite {} 1 0)", expr_text(pool, t))).collect();
            format!("(+ {})", parts.join(" "))
        }
    }
}

fn and_text(parts: Vec<String>) -> String {
    match parts.len() {
        0 => "true".into(),
        1 => parts.into_iter().next().unwrap(),
        _ => format!("(and {})", parts.join(" ")),
    }
}

fn or_text(parts: Vec<String>) -> String {
    match parts.len() {
        0 => "false".into(),
        1 => parts.into_iter().next().unwrap(),
        _ => format!("(or {})", parts.join(" ")),
    }
}

/// Bit `c` of `p = Σ diff_j·D_j` as an expression over the diff bits.
fn particular_bits(b: &BlockDistance) -> Vec<Expr> {
    let mut bits = vec![Expr::zero(); 2 * b.n];
    for (j, d) in b.destabs.iter().enumerate() {
        for q in 0..b.n {
            if d.x_bit(q) {
                bits[q] = bits[q].xor(&b.diff[j]);
            }
            if d.z_bit(q) {
                bits[b.n + q] = bits[b.n + q].xor(&b.diff[j]);
            }
        }
    }
    bits
}

/// Negated post-condition text. Helper definitions go to `defs`.
fn negated_post(pool: &ExprPool, q: &FtQuery, enc: Encoding, defs: &mut String) -> String {
    match &q.post {
        PostCondition::Unsatisfiable => "true".into(),
        PostCondition::Outcome { actual, ideal } => expr_text(pool, &actual.xor(ideal)),
        PostCondition::Exact { diffs } => or_text(diffs.iter().map(|d| expr_text(pool, d)).collect()),
        PostCondition::Distance { blocks, bound } => {
            let _ = writeln!(defs, "(define-fun bound () Int {})", counter_text(pool, bound));
            match enc {
                Encoding::LowWeight => {
                    let mut per_block = Vec::new();
                    for b in blocks {
                        let qubits: Vec<usize> = (0..b.n).collect();
                        let table = WeightTable::new(&b.gens, b.n, &qubits, q.t);
                        let mut cases = Vec::new();
                        for (s, w) in table.entries() {
                            let mut lits: Vec<String> = b
                                .diff
                                .iter()
                                .enumerate()
                                .map(|(j, d)| expr_text(pool, &d.xor_const(!s.get(j))))
                                .filter(|t| t != "true")
                                .collect();
                            if lits.iter().any(|t| t == "false") {
                                continue;
                            }
                            if *w > 0 {
                                lits.push(format!("(>= bound {w})"));
                            }
                            cases.push(and_text(lits));
                        }
                        per_block.push(or_text(cases));
                    }
                    format!("(not {})", and_text(per_block))
                }
                Encoding::Quantified | Encoding::Expanded => {
                    let mut per_block = Vec::new();
                    for (bi, b) in blocks.iter().enumerate() {
                        let p = particular_bits(b);
                        for (c, e) in p.iter().enumerate() {
                            let _ = writeln!(defs, "(define-fun p{bi}_{c} () Bool {})", expr_text(pool, e));
                        }
                        let k = b.gens.len();
                        // Bit c of p ⊕ Nw, with w given by `wbit(j)`.
                        let bit = |c: usize, wbit: &dyn Fn(usize) -> Option<String>| {
                            let mut terms = vec![format!("p{bi}_{c}")];
                            let mut flips = 0usize;
                            for (j, g) in b.gens.iter().enumerate() {
                                let set = if c < b.n { g.x_bit(c) } else { g.z_bit(c - b.n) };
                                if set {
                                    match wbit(j) {
                                        Some(t) if t == "false" => {}
                                        Some(t) => terms.push(t),
                                        None => flips += 1,
                                    }
                                }
                            }
                            let core = if terms.len() == 1 {
                                terms.pop().unwrap()
                            } else {
                                format!("(xor {})", terms.join(" "))
                            };
                            if flips % 2 == 1 {
                                format!("(not {core})")
                            } else {
                                core
                            }
                        };
                        let weight = |wbit: &dyn Fn(usize) -> Option<String>| {
                            let parts: Vec<String> = (0..b.n)
                                .map(|qb| format!("(ite (or {} {}) 1 0)", bit(qb, wbit), bit(b.n + qb, wbit)))
                                .collect();
                            format!("(+ 0 {})", parts.join(" "))
                        };
                        if enc == Encoding::Quantified {
                            let wbit = |j: usize| Some(format!("(= ((_ extract {j} {j}) w) #b1)"));
                            per_block.push(format!("(forall ((w (_ BitVec {k}))) (> {} bound))", weight(&wbit)));
                        } else {
                            assert!(k <= 12, "expanded encoding supports at most 12 generators per block");
                            let mut all = Vec::new();
                            for val in 0u32..(1 << k) {
                                // Set bits contribute a constant flip.
                                let wbit = |j: usize| if val >> j & 1 == 1 { None } else { Some("false".to_string()) };
                                all.push(format!("(> {} bound)", weight(&wbit)));
                            }
                            per_block.push(and_text(all));
                        }
                    }
                    or_text(per_block)
                }
            }
        }
    }
}

/// Lowers a query to a deterministic SMT-LIB2 script.
pub fn emit_smtlib(pool: &ExprPool, q: &FtQuery, enc: Encoding) -> Script {
    let mut roots: Vec<&Expr> = q.phi.iter().collect();
    for (c, _) in &q.budget {
        roots.extend(c.terms());
    }
    let extra: Vec<Expr> = match &q.post {
        PostCondition::Distance { blocks, bound } => {
            let mut v: Vec<Expr> = blocks.iter().flat_map(|b| b.diff.iter().cloned()).collect();
            v.extend(bound.terms().iter().cloned());
            v
        }
        PostCondition::Outcome { actual, ideal } => vec![actual.clone(), ideal.clone()],
        PostCondition::Exact { diffs } => diffs.clone(),
        PostCondition::Unsatisfiable => Vec::new(),
    };
    roots.extend(extra.iter());
    let atoms = pool.reachable(roots);

    let mut out = String::new();
    out.push_str("(set-option :produce-models true)\n");
    let logic = match (enc, &q.post) {
        (Encoding::Quantified, PostCondition::Distance { .. }) => "ALL",
        _ => "QF_LIA",
    };
    let _ = writeln!(out, "(set-logic {logic})");
    let mut symbols = Vec::new();
    for &a in &atoms {
        match pool.node(a) {
            Node::Var => {
                let name = atom_name(pool, a);
                let _ = writeln!(out, "(declare-const {name} Bool)");
                symbols.push((a, name));
            }
            Node::And(kids) | Node::Or(kids) => {
                let op = if matches!(pool.node(a), Node::And(_)) { "and" } else { "or" };
                let parts: Vec<String> = kids.iter().map(|k| expr_text(pool, k)).collect();
                let _ = writeln!(out, "(define-fun {} () Bool ({op} {}))", atom_name(pool, a), parts.join(" "));
            }
        }
    }
    for e in &q.phi {
        let _ = writeln!(out, "(assert {})", expr_text(pool, e));
    }
    for (c, k) in &q.budget {
        let _ = writeln!(out, "(assert (<= {} {k}))", counter_text(pool, c));
    }
    let mut defs = String::new();
    let neg = negated_post(pool, q, enc, &mut defs);
    out.push_str(&defs);
    let _ = writeln!(out, "(assert {neg})");
    out.push_str("(check-sat)\n");
    if !symbols.is_empty() {
        let names: Vec<&str> = symbols.iter().map(|(_, n)| n.as_str()).collect();
        let _ = writeln!(out, "(get-value ({}))", names.join(" "));
    }
    Script { text: out, symbols }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum SolverStatus {
    Sat,
    Unsat,
    Unknown(String),
    Error(String),
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverResult {
    pub status: SolverStatus,
    pub model: BTreeMap<String, bool>,
    pub elapsed_ms: u128,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub path: PathBuf,
    pub args: Vec<String>,
    pub timeout: Duration,
}

impl SolverConfig {
    /// Explicit path, else `FTQEC_SOLVER`, else `z3` on the `PATH`.
    pub fn resolve(explicit: Option<&str>, timeout: Duration) -> Self {
        let path = explicit
            .map(str::to_string)
            .or_else(|| std::env::var("FTQEC_SOLVER").ok().filter(|s| !s.is_empty()))
            .unwrap_or_else(|| "z3".to_string());
        let stem = std::path::Path::new(&path).file_stem().and_then(|s| s.to_str()).unwrap_or("").to_string();
        let args = if stem.starts_with("z3") {
            vec!["-in".to_string(), "-smt2".to_string()]
        } else if stem.starts_with("cvc5") {
            vec!["--lang=smt2".to_string(), "--incremental".to_string()]
        } else {
            Vec::new()
        };
        SolverConfig { path: PathBuf::from(path), args, timeout }
    }

    pub fn is_available(&self) -> bool {
        Command::new(&self.path).arg("--version").stdout(Stdio::null()).stderr(Stdio::null()).status().is_ok()
    }
}

/// Runs one script through the solver, killing it after the timeout.
pub fn solve(cfg: &SolverConfig, script: &str) -> SolverResult {
    let start = Instant::now();
    let done = |status: SolverStatus, model: BTreeMap<String, bool>| SolverResult {
        status,
        model,
        elapsed_ms: start.elapsed().as_millis(),
    };
    let mut child = match Command::new(&cfg.path)
        .args(&cfg.args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
    {
        Ok(c) => c,
        Err(e) => {
            return done(SolverStatus::Error(format!("cannot start {}: {e}", cfg.path.display())), BTreeMap::new())
        }
    };
    let mut stdin = child.stdin.take().unwrap();
    let text = script.to_string();
    let writer = std::thread::spawn(move || {
        let _ = stdin.write_all(text.as_bytes());
    });
    let mut stdout = child.stdout.take().unwrap();
    let reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let mut stderr = child.stderr.take().unwrap();
    let err_reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr.read_to_string(&mut s);
        s
    });
    let deadline = start + cfg.timeout;
    let mut timed_out = false;
    loop {
        match child.try_wait() {
            Ok(Some(_)) => break,
            Ok(None) if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                timed_out = true;
                break;
            }
            Ok(None) => std::thread::sleep(Duration::from_millis(1)),
            Err(e) => return done(SolverStatus::Error(e.to_string()), BTreeMap::new()),
        }
    }
    let _ = writer.join();
    let out = reader.join().unwrap_or_default();
    let err = err_reader.join().unwrap_or_default();
    if timed_out {
        return done(SolverStatus::Unknown("timeout".into()), BTreeMap::new());
    }
    parse_response(&out, &err, done)
}

fn parse_response(
    out: &str,
    err: &str,
    done: impl Fn(SolverStatus, BTreeMap<String, bool>) -> SolverResult,
) -> SolverResult {
    let mut lines = out.lines().map(str::trim).filter(|l| !l.is_empty());
    match lines.next() {
        Some("unsat") => done(SolverStatus::Unsat, BTreeMap::new()),
        Some("unknown") => done(SolverStatus::Unknown("solver returned unknown".into()), BTreeMap::new()),
        Some("sat") => {
            let rest: String = lines.collect::<Vec<_>>().join(" ");
            match parse_model(&rest) {
                Ok(m) => done(SolverStatus::Sat, m),
                Err(e) => done(SolverStatus::Error(format!("bad model: {e}")), BTreeMap::new()),
            }
        }
        other => {
            let msg = other.map(str::to_string).unwrap_or_else(|| err.trim().to_string());
            done(SolverStatus::Error(if msg.is_empty() { "no output".into() } else { msg }), BTreeMap::new())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn parse_sexps(s: &str) -> Result<Vec<Sexp>, String> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut tok = String::new();
    let flush = |tok: &mut String, stack: &mut Vec<Vec<Sexp>>| {
        if !tok.is_empty() {
            stack.last_mut().unwrap().push(Sexp::Atom(std::mem::take(tok)));
        }
    };
    for ch in s.chars() {
        match ch {
            '(' => {
                flush(&mut tok, &mut stack);
                stack.push(Vec::new());
            }
            ')' => {
                flush(&mut tok, &mut stack);
                let l = stack.pop().ok_or("unbalanced )")?;
                stack.last_mut().ok_or("unbalanced )")?.push(Sexp::List(l));
            }
            c if c.is_whitespace() => flush(&mut tok, &mut stack),
            c => tok.push(c),
        }
    }
    flush(&mut tok, &mut stack);
    if stack.len() != 1 {
        return Err("unbalanced (".into());
    }
    Ok(stack.pop().unwrap())
}

/// Parses a `get-value` response `((name true) …)`.
fn parse_model(s: &str) -> Result<BTreeMap<String, bool>, String> {
    let mut m = BTreeMap::new();
    for top in parse_sexps(s)? {
        let Sexp::List(pairs) = top else { continue };
        for p in pairs {
            if let Sexp::List(kv) = p {
                if let [Sexp::Atom(k), Sexp::Atom(v)] = kv.as_slice() {
                    match v.as_str() {
                        "true" => m.insert(k.clone(), true),
                        "false" => m.insert(k.clone(), false),
                        _ => return Err(format!("non-Boolean value for {k}")),
                    };
                }
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_parsing() {
        let m = parse_model("((a true)\n (b_1 false))").unwrap();
        assert_eq!(m.get("a"), Some(&true));
        assert_eq!(m.get("b_1"), Some(&false));
        assert!(parse_model("((a 3))").is_err());
    }

    #[test]
    fn expr_rendering() {
        let mut pool = ExprPool::new();
        let a = pool.fresh(crate::expr::SymbolKind::FaultX, crate::expr::Origin::new(0, 0, 0));
        let b = pool.fresh(crate::expr::SymbolKind::FaultZ, crate::expr::Origin::new(0, 0, 0));
        assert_eq!(expr_text(&pool, &a.xor(&b).not()), "(not (xor fx_0_0_0_0 fz_0_0_0_1))");
        assert_eq!(expr_text(&pool, &Expr::one()), "true");
    }

    fn z3() -> Option<SolverConfig> {
        let cfg = SolverConfig::resolve(None, Duration::from_secs(20));
        cfg.is_available().then_some(cfg)
    }

    #[test]
    fn solver_roundtrip() {
        let Some(cfg) = z3() else { return };
        let r = solve(&cfg, "(set-logic QF_LIA)\n(assert false)\n(check-sat)\n");
        assert_eq!(r.status, SolverStatus::Unsat);
        let r = solve(&cfg, "(set-option :produce-models true)\n(declare-const a Bool)\n(declare-const b Bool)\n(assert (and a (not b)))\n(check-sat)\n(get-value (a b))\n");
        assert_eq!(r.status, SolverStatus::Sat);
        assert_eq!(r.model.get("a"), Some(&true));
        assert_eq!(r.model.get("b"), Some(&false));
    }

    #[test]
    fn solver_timeout_is_unknown() {
        let Some(mut cfg) = z3() else { return };
        cfg.timeout = Duration::from_millis(10);
        let hard = "(declare-const x Int)(declare-const y Int)(declare-const z Int)\
                    (assert (= (+ (* x x x) (* y y y) (* z z z)) 33))(check-sat)\n";
        let r = solve(&cfg, hard);
        assert!(matches!(r.status, SolverStatus::Unknown(_)), "{:?}", r.status);
        assert!(r.elapsed_ms < 2000);
    }

    #[test]
    fn missing_solver_is_error() {
        let cfg = SolverConfig::resolve(Some("/nonexistent/solver"), Duration::from_secs(1));
        assert!(matches!(solve(&cfg, "(check-sat)").status, SolverStatus::Error(_)));
    }
}
