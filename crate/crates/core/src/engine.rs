//! Symbolic execution of programs with symbolic Pauli fault injection.
//!
//! Every path is a [`Config`]: the symbolic store and state, the path
//! condition as a list of conjuncts, and separate counters for input
//! errors (one per block) and execution faults. Random measurements do
//! not split paths (their outcome is a fresh symbol); only `if` statements
//! with a symbolic condition and a non-Pauli body do. Loops follow the
//! single-iteration rule: the body runs once and the path is conditioned
//! on the exit condition, after the loop class has been checked.

use std::collections::{HashMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::expr::{Atom, Expr, ExprPool, FaultCounter, Origin, SymbolKind, INPUT_STMT};
use crate::gate::Gate;
use crate::oracle::{decoder_assertion, OracleError, OracleSpec};
use crate::pauli::{Pauli1, PauliOp};
use crate::program::{
    check_conservative_structure, check_transversal, memoryless_violations, walk, CExpr, Cmp, LoopClass, Program, Stmt,
    StmtKind, VarRef,
};
use crate::tableau::{SymTableau, TableauError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("loop at statement {stmt} is not {class}: {msg}")]
    LoopClass { stmt: u32, class: &'static str, msg: String },
    #[error("more than {0} paths")]
    PathCap(usize),
    #[error(transparent)]
    Tableau(#[from] TableauError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("variable `{0}` read before it was written")]
    Undefined(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Init,
    Unitary,
    Measure,
    Assign,
    Oracle,
    IfTrue,
    IfFalse,
    /// Pauli-only `if` merged into guarded Pauli updates.
    CondPauli,
    Repeat,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceEvent {
    pub stmt: u32,
    pub rule: Rule,
    pub symbols: Vec<Atom>,
}

#[derive(Clone, Debug)]
pub struct Config {
    pub store: HashMap<VarRef, Expr>,
    pub state: SymTableau,
    /// Path probability is `2^-prob_log2` (times the fault weights).
    pub prob_log2: u32,
    pub phi: Vec<Expr>,
    pub f_in: Vec<FaultCounter>,
    pub f_exec: FaultCounter,
    pub trace: Vec<TraceEvent>,
    /// Branch decisions taken, in order; the path fingerprint.
    pub branches: Vec<(u32, bool)>,
}

impl Config {
    pub fn new(state: SymTableau, blocks: usize) -> Self {
        Config {
            store: HashMap::new(),
            state,
            prob_log2: 0,
            phi: Vec::new(),
            f_in: vec![FaultCounter::new(); blocks],
            f_exec: FaultCounter::new(),
            trace: Vec::new(),
            branches: Vec::new(),
        }
    }

    /// Every symbol introduced along this path, inputs included.
    pub fn symbols(&self) -> Vec<Atom> {
        self.trace.iter().flat_map(|e| e.symbols.iter().copied()).collect()
    }

    pub fn f_in_total(&self) -> FaultCounter {
        let mut c = FaultCounter::new();
        for f in &self.f_in {
            c.extend(f);
        }
        c
    }
}

#[derive(Clone, Debug)]
pub struct EngineOptions {
    /// Inject execution faults (off for ideal-case correctness checks).
    pub faults: bool,
    pub path_cap: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions { faults: true, path_cap: 1_000_000 }
    }
}

/// Callback deciding whether a memoryless loop nested in a conservative
/// loop is itself fault-tolerant; `Err` carries the reason.
pub type NestedCheck<'a> = dyn FnMut(&Program, &Stmt) -> Result<(), String> + 'a;

pub struct Engine<'a> {
    prog: &'a Program,
    oracles: &'a HashMap<String, OracleSpec>,
    pub pool: &'a mut ExprPool,
    opts: EngineOptions,
    is_data: Vec<bool>,
    nested: Option<Box<NestedCheck<'a>>>,
    checked_loops: HashSet<u32>,
    pub diagnostics: Vec<String>,
    pub paths_explored: usize,
}

fn is_pauli_body(stmts: &[Stmt]) -> bool {
    stmts.iter().all(|s| matches!(&s.kind, StmtKind::Gate(g, _) if g.is_pauli()))
}

fn pauli_of(g: Gate) -> Pauli1 {
    match g {
        Gate::X => Pauli1::X,
        Gate::Y => Pauli1::Y,
        Gate::Z => Pauli1::Z,
        _ => unreachable!("not a Pauli gate"),
    }
}

impl<'a> Engine<'a> {
    pub fn new(
        prog: &'a Program,
        oracles: &'a HashMap<String, OracleSpec>,
        pool: &'a mut ExprPool,
        opts: EngineOptions,
    ) -> Self {
        Engine {
            prog,
            oracles,
            pool,
            opts,
            is_data: prog.is_data(),
            nested: None,
            checked_loops: HashSet::new(),
            diagnostics: Vec::new(),
            paths_explored: 0,
        }
    }

    pub fn with_nested_check(mut self, f: Box<NestedCheck<'a>>) -> Self {
        self.nested = Some(f);
        self
    }

    /// Runs the whole program body from `init`.
    pub fn run(&mut self, init: Config) -> Result<Vec<Config>, EngineError> {
        let body = &self.prog.body;
        self.exec(body, vec![init])
    }

    fn exec(&mut self, stmts: &[Stmt], mut cfgs: Vec<Config>) -> Result<Vec<Config>, EngineError> {
        for s in stmts {
            let mut next = Vec::with_capacity(cfgs.len());
            for c in cfgs {
                self.step(s, c, &mut next)?;
                if next.len() > self.opts.path_cap {
                    return Err(EngineError::PathCap(self.opts.path_cap));
                }
            }
            cfgs = next;
        }
        Ok(cfgs)
    }

    fn inject(
        &mut self,
        c: &mut Config,
        stmt: u32,
        q: usize,
        slot: u32,
        guard: Option<&Expr>,
        syms: &mut Vec<Atom>,
    ) -> Result<Expr, EngineError> {
        let inj = c.state.inject_error(q, self.pool, Origin::new(stmt, q as u32, slot), false, guard)?;
        syms.push(inj.ex.atoms()[0]);
        syms.push(inj.ez.atoms()[0]);
        Ok(inj.flag)
    }

    fn step(&mut self, s: &Stmt, mut c: Config, out: &mut Vec<Config>) -> Result<(), EngineError> {
        let faults = self.opts.faults;
        match &s.kind {
            StmtKind::Init(q) => {
                c.state.initialize(*q)?;
                let mut syms = Vec::new();
                if faults {
                    let f = self.inject(&mut c, s.id, *q, 0, None, &mut syms)?;
                    c.f_exec.add(f);
                }
                c.trace.push(TraceEvent { stmt: s.id, rule: Rule::Init, symbols: syms });
            }
            StmtKind::Gate(g, qs) => {
                c.state.apply_gate(*g, qs)?;
                let mut syms = Vec::new();
                if faults {
                    let mut flags = Vec::new();
                    for &q in qs {
                        flags.push(self.inject(&mut c, s.id, q, 0, None, &mut syms)?);
                    }
                    c.f_exec.or_append(self.pool, &flags);
                }
                c.trace.push(TraceEvent { stmt: s.id, rule: Rule::Unitary, symbols: syms });
            }
            StmtKind::Measure(v, q) => {
                let mut syms = Vec::new();
                let pre = if faults { Some(self.inject(&mut c, s.id, *q, 0, None, &mut syms)?) } else { None };
                let m = c.state.measure(*q, self.pool, Origin::new(s.id, *q as u32, 0))?;
                if m.random {
                    c.prob_log2 += 1;
                    syms.push(m.outcome.atoms()[0]);
                }
                if let Some(pre) = pre {
                    let post = self.inject(&mut c, s.id, *q, 1, None, &mut syms)?;
                    c.f_exec.or_append(self.pool, &[pre, post]);
                }
                c.store.insert(v.clone(), m.outcome);
                c.trace.push(TraceEvent { stmt: s.id, rule: Rule::Measure, symbols: syms });
            }
            StmtKind::Assign(v, e) => {
                let val = self.lower(e, &c.store)?;
                c.store.insert(v.clone(), val);
                c.trace.push(TraceEvent { stmt: s.id, rule: Rule::Assign, symbols: Vec::new() });
            }
            StmtKind::Oracle { out: o, name, args } => {
                let spec = self.oracles.get(name).ok_or_else(|| OracleError::Undeclared(name.clone()))?;
                spec.check_arity(name, args.len())?;
                let vals: Vec<Expr> = args.iter().map(|a| self.lower(a, &c.store)).collect::<Result<_, _>>()?;
                let mut syms = Vec::new();
                let outs = match spec.symbolic(self.pool, &vals) {
                    Some(outs) => outs,
                    None => {
                        let OracleSpec::Decoder { code, decoder, .. } = spec else { unreachable!() };
                        let r: Vec<Expr> = (0..spec.outputs())
                            .map(|i| self.pool.fresh(SymbolKind::DecoderOutput, Origin::new(s.id, 0, i as u32)))
                            .collect();
                        syms.extend(r.iter().map(|e| e.atoms()[0]));
                        let a = decoder_assertion(self.pool, code, decoder, &vals, &r);
                        c.phi.push(a);
                        r
                    }
                };
                crate::interp::store_outputs(&mut c.store, o, &outs);
                c.trace.push(TraceEvent { stmt: s.id, rule: Rule::Oracle, symbols: syms });
            }
            StmtKind::If { cond, then_body, else_body } => {
                let b = self.lower(cond, &c.store)?;
                if let Some(v) = b.as_const() {
                    let (body, rule) = if v { (then_body, Rule::IfTrue) } else { (else_body, Rule::IfFalse) };
                    c.trace.push(TraceEvent { stmt: s.id, rule, symbols: Vec::new() });
                    out.extend(self.exec(body, vec![c])?);
                    return Ok(());
                }
                if is_pauli_body(then_body) && is_pauli_body(else_body) {
                    let mut syms = Vec::new();
                    let nb = b.not();
                    for (body, guard) in [(then_body, &b), (else_body, &nb)] {
                        for st in body {
                            let StmtKind::Gate(g, qs) = &st.kind else { unreachable!() };
                            let p = PauliOp::single(c.state.n(), qs[0], pauli_of(*g));
                            c.state.conditional_pauli(&p, guard);
                            if faults {
                                let f = self.inject(&mut c, st.id, qs[0], 0, Some(guard), &mut syms)?;
                                c.f_exec.add(f);
                            }
                        }
                    }
                    c.trace.push(TraceEvent { stmt: s.id, rule: Rule::CondPauli, symbols: syms });
                    out.push(c);
                    return Ok(());
                }
                let nb = b.not();
                let mut t = c.clone();
                let mut f = c;
                for (cfg, lit, val, rule) in [(&mut t, b, true, Rule::IfTrue), (&mut f, nb, false, Rule::IfFalse)] {
                    cfg.phi.push(lit);
                    cfg.branches.push((s.id, val));
                    cfg.trace.push(TraceEvent { stmt: s.id, rule, symbols: Vec::new() });
                }
                let (t_ok, f_ok) = (!self.contradicts(&t.phi), !self.contradicts(&f.phi));
                if t_ok {
                    out.extend(self.exec(then_body, vec![t])?);
                }
                if f_ok {
                    out.extend(self.exec(else_body, vec![f])?);
                }
                return Ok(());
            }
            StmtKind::Repeat { body, until, class } => {
                self.check_loop(s, body, until, *class)?;
                c.trace.push(TraceEvent { stmt: s.id, rule: Rule::Repeat, symbols: Vec::new() });
                let ends = self.exec(body, vec![c])?;
                let mut kept = 0;
                for mut e in ends {
                    let u = self.lower(until, &e.store)?;
                    if u.is_const(false) {
                        continue;
                    }
                    if !u.is_const(true) {
                        e.phi.push(u);
                        if self.contradicts(&e.phi) {
                            continue;
                        }
                    }
                    kept += 1;
                    out.push(e);
                }
                if kept == 0 {
                    self.diagnostics.push(format!(
                        "loop at statement {} (line {}) can never exit: its condition is unsatisfiable after one iteration",
                        s.id, s.line
                    ));
                }
                self.paths_explored += kept;
                return Ok(());
            }
        }
        out.push(c);
        Ok(())
    }

    /// Cheap syntactic check: the last conjunct is the negation of an
    /// earlier one, or a constant 0.
    fn contradicts(&self, phi: &[Expr]) -> bool {
        let Some(last) = phi.last() else { return false };
        if last.is_const(false) {
            return true;
        }
        let neg = last.not();
        phi[..phi.len() - 1].contains(&neg)
    }

    fn check_loop(&mut self, s: &Stmt, body: &[Stmt], until: &CExpr, class: LoopClass) -> Result<(), EngineError> {
        if !self.checked_loops.insert(s.id) {
            return Ok(());
        }
        let fail = |msg: String| EngineError::LoopClass { stmt: s.id, class: class.name(), msg };
        let join = |v: Vec<crate::program::Violation>| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ");
        match class {
            LoopClass::Memoryless => {
                let v = memoryless_violations(body, until);
                if !v.is_empty() {
                    return Err(fail(join(v)));
                }
            }
            LoopClass::Conservative => {
                let v = check_conservative_structure(body, until);
                if !v.is_empty() {
                    return Err(fail(join(v)));
                }
                let v = check_transversal(body, &self.is_data);
                if !v.is_empty() {
                    return Err(fail(join(v)));
                }
                let mut inner: Vec<&Stmt> = Vec::new();
                walk(body, &mut |st| {
                    if matches!(st.kind, StmtKind::Repeat { class: LoopClass::Memoryless, .. }) {
                        inner.push(st);
                    }
                });
                if let Some(cb) = self.nested.as_mut() {
                    for st in inner {
                        cb(self.prog, st).map_err(|m| fail(format!("nested loop at statement {}: {m}", st.id)))?;
                    }
                } else if !inner.is_empty() {
                    return Err(fail("nested loops cannot be verified without a nested-loop checker".into()));
                }
            }
        }
        Ok(())
    }

    /// Lowers a classical expression to a symbolic one.
    pub fn lower(&mut self, e: &CExpr, store: &HashMap<VarRef, Expr>) -> Result<Expr, EngineError> {
        Ok(match e {
            CExpr::Const(b) => Expr::constant(*b),
            CExpr::Var(v) => store.get(v).cloned().ok_or_else(|| EngineError::Undefined(v.to_string()))?,
            CExpr::Not(a) => self.lower(a, store)?.not(),
            CExpr::And(es) => {
                let v = es.iter().map(|x| self.lower(x, store)).collect::<Result<Vec<_>, _>>()?;
                self.pool.and_all(v)
            }
            CExpr::Or(es) => {
                let v = es.iter().map(|x| self.lower(x, store)).collect::<Result<Vec<_>, _>>()?;
                self.pool.or_all(v)
            }
            CExpr::Xor(es) => {
                let v = es.iter().map(|x| self.lower(x, store)).collect::<Result<Vec<_>, _>>()?;
                self.pool.xor_all(v)
            }
            CExpr::Eq(a, b) => self.lower(a, store)?.xor(&self.lower(b, store)?).not(),
            CExpr::Ne(a, b) => self.lower(a, store)?.xor(&self.lower(b, store)?),
            CExpr::Count { terms, cmp, k } => {
                let v = terms.iter().map(|x| self.lower(x, store)).collect::<Result<Vec<_>, _>>()?;
                let k = *k as usize;
                match cmp {
                    Cmp::Ge => self.pool.at_least(&v, k),
                    Cmp::Gt => self.pool.at_least(&v, k + 1),
                    Cmp::Le => self.pool.at_most(&v, k),
                    Cmp::Lt if k == 0 => Expr::zero(),
                    Cmp::Lt => self.pool.at_most(&v, k - 1),
                    Cmp::Eq => self.pool.exactly(&v, k),
                    Cmp::Ne => self.pool.exactly(&v, k).not(),
                }
            }
        })
    }
}

/// Injects a symbolic input error on every qubit of every block. Returns
/// one counter per block and the introduced symbols.
pub fn inject_input_errors(
    state: &mut SymTableau,
    pool: &mut ExprPool,
    blocks: &[Vec<usize>],
) -> Result<(Vec<FaultCounter>, Vec<Atom>), TableauError> {
    let mut counters = Vec::with_capacity(blocks.len());
    let mut syms = Vec::new();
    for b in blocks {
        let mut f = FaultCounter::new();
        for &q in b {
            let inj = state.inject_error(q, pool, Origin::new(INPUT_STMT, q as u32, 0), true, None)?;
            syms.push(inj.ex.atoms()[0]);
            syms.push(inj.ez.atoms()[0]);
            f.add(inj.flag);
        }
        counters.push(f);
    }
    Ok((counters, syms))
}

/// Applies the gates of an `ideal { }` block.
pub fn apply_ideal(state: &mut SymTableau, ideal: &[Stmt]) -> Result<(), TableauError> {
    for s in ideal {
        if let StmtKind::Gate(g, qs) = &s.kind {
            state.apply_gate(*g, qs)?;
        }
    }
    Ok(())
}
