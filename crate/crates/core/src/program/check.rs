//! Static checks: well-formedness and the structural loop-class conditions.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{walk, CExpr, LoopClass, OracleKind, Program, Stmt, StmtKind, VarRef};

/// A failed check, positioned at the offending statement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub stmt: u32,
    pub line: u32,
    pub col: u32,
    pub msg: String,
}

impl Violation {
    fn at(s: &Stmt, msg: impl Into<String>) -> Self {
        Violation { stmt: s.id, line: s.line, col: s.col, msg: msg.into() }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.line > 0 {
            write!(f, "{}:{}: {}", self.line, self.col, self.msg)
        } else {
            write!(f, "statement {}: {}", self.stmt, self.msg)
        }
    }
}

/// Variables known to be written. Oracle outputs define a whole family
/// (`r` and every `r[i]`).
#[derive(Clone, Default, Debug)]
struct Defs {
    vars: BTreeSet<VarRef>,
    families: BTreeSet<String>,
}

impl Defs {
    fn has(&self, v: &VarRef) -> bool {
        self.vars.contains(v) || self.families.contains(&v.name)
    }

    fn meet(&self, other: &Defs) -> Defs {
        Defs {
            vars: self.vars.intersection(&other.vars).cloned().collect(),
            families: self.families.intersection(&other.families).cloned().collect(),
        }
    }
}

fn first_undefined(e: &CExpr, d: &Defs) -> Option<VarRef> {
    let mut reads = Vec::new();
    e.reads(&mut reads);
    reads.into_iter().find(|v| !d.has(v))
}

fn check_qubits(s: &Stmt, n: usize, out: &mut Vec<Violation>) {
    for q in s.own_qubits() {
        if q >= n {
            out.push(Violation::at(s, format!("undeclared qubit q{q}")));
        }
    }
    if let StmtKind::Gate(g, qs) = &s.kind {
        if qs.len() != g.arity() {
            out.push(Violation::at(s, format!("{g} takes {} qubits", g.arity())));
        } else if qs.len() == 2 && qs[0] == qs[1] {
            out.push(Violation::at(s, format!("{g} on repeated qubit q{}", qs[0])));
        }
    }
}

fn flow(p: &Program, stmts: &[Stmt], d: &mut Defs, out: &mut Vec<Violation>) {
    for s in stmts {
        check_qubits(s, p.qubits, out);
        let undefined = |e: &CExpr, d: &Defs, out: &mut Vec<Violation>| {
            if let Some(v) = first_undefined(e, d) {
                out.push(Violation::at(s, format!("variable {v} read before assignment")));
            }
        };
        match &s.kind {
            StmtKind::Init(_) | StmtKind::Gate(..) => {}
            StmtKind::Measure(v, _) => {
                d.vars.insert(v.clone());
            }
            StmtKind::Assign(v, e) => {
                undefined(e, d, out);
                d.vars.insert(v.clone());
            }
            StmtKind::Oracle { out: v, name, args } => {
                for a in args {
                    undefined(a, d, out);
                }
                match p.oracle(name) {
                    None => out.push(Violation::at(s, format!("undeclared oracle `{name}`"))),
                    Some(o) => {
                        if let OracleKind::Table { inputs, .. } = &o.kind {
                            if *inputs as usize != args.len() {
                                out.push(Violation::at(
                                    s,
                                    format!("oracle `{name}` takes {inputs} arguments, got {}", args.len()),
                                ));
                            }
                        }
                    }
                }
                if v.index.is_some() {
                    out.push(Violation::at(s, "oracle output must be a plain name"));
                }
                d.vars.insert(v.clone());
                d.families.insert(v.name.clone());
            }
            StmtKind::If { cond, then_body, else_body } => {
                undefined(cond, d, out);
                let mut a = d.clone();
                let mut b = d.clone();
                flow(p, then_body, &mut a, out);
                flow(p, else_body, &mut b, out);
                *d = a.meet(&b);
            }
            StmtKind::Repeat { body, until, .. } => {
                flow(p, body, d, out);
                undefined(until, d, out);
            }
        }
    }
}

/// Qubit ranges, gate arities, declared oracles, blocks, and
/// assignment-before-read along every control path. Returns the first
/// violation in program order.
pub fn well_formed(p: &Program) -> Result<(), Violation> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for b in &p.blocks {
        if b.is_empty() {
            out.push(Violation { stmt: 0, line: 0, col: 0, msg: "empty block".into() });
        }
        for &q in b {
            if q >= p.qubits {
                out.push(Violation { stmt: 0, line: 0, col: 0, msg: format!("block qubit q{q} out of range") });
            }
            if !seen.insert(q) {
                out.push(Violation { stmt: 0, line: 0, col: 0, msg: format!("qubit q{q} in two blocks") });
            }
        }
    }
    for o in &p.oracles {
        if let OracleKind::Table { inputs: 0, .. } = o.kind {
            out.push(Violation { stmt: 0, line: 0, col: 0, msg: format!("table oracle `{}` has no inputs", o.name) });
        }
    }
    for s in &p.ideal {
        check_qubits(s, p.qubits, &mut out);
    }
    let mut d = Defs::default();
    flow(p, &p.body, &mut d, &mut out);
    if let Some(r) = &p.result {
        if !d.has(r) {
            out.push(Violation { stmt: 0, line: 0, col: 0, msg: format!("result variable {r} is never assigned") });
        }
    }
    match out.into_iter().next() {
        Some(v) => Err(v),
        None => Ok(()),
    }
}

/// Tracks what a loop body has written so far.
#[derive(Clone, Default)]
struct Local {
    defs: Defs,
    qubits: BTreeSet<usize>,
}

impl Local {
    fn meet(&self, o: &Local) -> Local {
        Local { defs: self.defs.meet(&o.defs), qubits: self.qubits.intersection(&o.qubits).copied().collect() }
    }
}

fn reset_flow(stmts: &[Stmt], st: &mut Local, with_qubits: bool, out: &mut Vec<Violation>) {
    for s in stmts {
        let check_expr = |e: &CExpr, st: &Local, out: &mut Vec<Violation>| {
            if let Some(v) = first_undefined(e, &st.defs) {
                out.push(Violation::at(s, format!("variable {v} is read before being reset in the loop body")));
            }
        };
        if with_qubits {
            let used: Vec<usize> = match &s.kind {
                StmtKind::Gate(_, qs) => qs.clone(),
                StmtKind::Measure(_, q) => vec![*q],
                _ => Vec::new(),
            };
            for q in used {
                if !st.qubits.contains(&q) {
                    out.push(Violation::at(s, format!("qubit q{q} is used before being reset in the loop body")));
                }
            }
        }
        match &s.kind {
            StmtKind::Init(q) => {
                st.qubits.insert(*q);
            }
            StmtKind::Gate(..) => {}
            StmtKind::Measure(v, _) => {
                st.defs.vars.insert(v.clone());
            }
            StmtKind::Assign(v, e) => {
                check_expr(e, st, out);
                st.defs.vars.insert(v.clone());
            }
            StmtKind::Oracle { out: v, args, .. } => {
                for a in args {
                    check_expr(a, st, out);
                }
                st.defs.vars.insert(v.clone());
                st.defs.families.insert(v.name.clone());
            }
            StmtKind::If { cond, then_body, else_body } => {
                check_expr(cond, st, out);
                let mut a = st.clone();
                let mut b = st.clone();
                reset_flow(then_body, &mut a, with_qubits, out);
                reset_flow(else_body, &mut b, with_qubits, out);
                *st = a.meet(&b);
            }
            StmtKind::Repeat { body, until, .. } => {
                reset_flow(body, st, with_qubits, out);
                check_expr(until, st, out);
            }
        }
    }
}

/// Every classical variable and every qubit used by `body` (or by `until`)
/// is written or initialized in `body` before it is first read.
pub fn memoryless_violations(body: &[Stmt], until: &CExpr) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut st = Local::default();
    reset_flow(body, &mut st, true, &mut out);
    if let Some(v) = first_undefined(until, &st.defs) {
        out.push(Violation {
            stmt: 0,
            line: 0,
            col: 0,
            msg: format!("loop condition reads {v}, which the body never writes"),
        });
    }
    out
}

pub fn check_memoryless(body: &[Stmt], until: &CExpr) -> bool {
    memoryless_violations(body, until).is_empty()
}

fn is_pauli_only(stmts: &[Stmt]) -> bool {
    stmts.iter().all(|s| matches!(&s.kind, StmtKind::Gate(g, _) if g.is_pauli()))
}

/// Structural side conditions of a conservative loop: classical reset
/// (variables written before read) and non-adaptivity (no branch on an
/// in-loop value except Pauli-only corrections; nested loops must be
/// memoryless).
pub fn check_conservative_structure(body: &[Stmt], until: &CExpr) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut st = Local::default();
    reset_flow(body, &mut st, false, &mut out);
    if let Some(v) = first_undefined(until, &st.defs) {
        out.push(Violation {
            stmt: 0,
            line: 0,
            col: 0,
            msg: format!("loop condition reads {v}, which the body never writes"),
        });
    }
    let mut written: BTreeSet<String> = BTreeSet::new();
    adaptivity(body, &mut written, &mut out);
    out
}

fn adaptivity(stmts: &[Stmt], written: &mut BTreeSet<String>, out: &mut Vec<Violation>) {
    for s in stmts {
        match &s.kind {
            StmtKind::Measure(v, _) | StmtKind::Assign(v, _) | StmtKind::Oracle { out: v, .. } => {
                written.insert(v.name.clone());
            }
            StmtKind::If { cond, then_body, else_body } => {
                let mut reads = Vec::new();
                cond.reads(&mut reads);
                let depends = reads.iter().any(|v| written.contains(&v.name));
                if depends && !(is_pauli_only(then_body) && is_pauli_only(else_body)) {
                    out.push(Violation::at(s, "branch on an in-loop outcome selects non-Pauli operations"));
                }
                adaptivity(then_body, written, out);
                adaptivity(else_body, written, out);
            }
            StmtKind::Repeat { body, class, .. } => {
                if *class != LoopClass::Memoryless {
                    out.push(Violation::at(s, "nested loop inside a conservative loop must be memoryless"));
                }
                walk(body, &mut |t| {
                    if let StmtKind::Measure(v, _) | StmtKind::Assign(v, _) | StmtKind::Oracle { out: v, .. } = &t.kind
                    {
                        written.insert(v.name.clone());
                    }
                });
            }
            StmtKind::Init(_) | StmtKind::Gate(..) => {}
        }
    }
}

/// Transversality of a loop body with respect to the data qubits: no
/// two-qubit gate acts on two data qubits, and between two resets an
/// ancilla couples to at most one data qubit and, once coupled, takes part
/// in no further ancilla-ancilla gate.
pub fn check_transversal(body: &[Stmt], is_data: &[bool]) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut coupled: BTreeMap<usize, usize> = BTreeMap::new();
    let data = |q: usize| is_data.get(q).copied().unwrap_or(false);
    walk(body, &mut |s| match &s.kind {
        StmtKind::Init(q) => {
            coupled.remove(q);
        }
        StmtKind::Gate(g, qs) if qs.len() == 2 => {
            let (a, b) = (qs[0], qs[1]);
            match (data(a), data(b)) {
                (true, true) => out.push(Violation::at(s, format!("{g} couples data qubits q{a} and q{b}"))),
                (false, false) => {
                    for q in [a, b] {
                        if let Some(d) = coupled.get(&q) {
                            out.push(Violation::at(
                                s,
                                format!("ancilla q{q} spreads the error of data qubit q{d} to another ancilla"),
                            ));
                        }
                    }
                }
                (da, _) => {
                    let (anc, d) = if da { (b, a) } else { (a, b) };
                    match coupled.get(&anc) {
                        Some(&prev) if prev != d => out
                            .push(Violation::at(s, format!("ancilla q{anc} couples to data qubits q{prev} and q{d}"))),
                        _ => {
                            coupled.insert(anc, d);
                        }
                    }
                }
            }
        }
        _ => {}
    });
    out
}
