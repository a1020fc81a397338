//! Classical-quantum programs: AST, `.cqp` text syntax and structural checks.
//!
//! Statements are numbered in pre-order; the number is the `stmt` component
//! of every symbol origin, so it must be stable between parse and print.

mod check;
mod parse;
mod print;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::gate::Gate;

pub use check::{
    check_conservative_structure, check_memoryless, check_transversal, memoryless_violations, well_formed, Violation,
};
pub use parse::{parse, ParseError};

/// A classical variable, optionally indexed (`m[3]`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarRef {
    pub name: String,
    pub index: Option<u32>,
}

impl VarRef {
    pub fn plain(name: &str) -> Self {
        VarRef { name: name.to_string(), index: None }
    }

    pub fn indexed(name: &str, i: usize) -> Self {
        VarRef { name: name.to_string(), index: Some(i as u32) }
    }
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{}[{}]", self.name, i),
            None => f.write_str(&self.name),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmp {
    Ge,
    Gt,
    Le,
    Lt,
    Eq,
    Ne,
}

impl Cmp {
    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Ge => ">=",
            Cmp::Gt => ">",
            Cmp::Le => "<=",
            Cmp::Lt => "<",
            Cmp::Eq => "==",
            Cmp::Ne => "!=",
        }
    }

    pub fn holds(self, a: usize, b: usize) -> bool {
        match self {
            Cmp::Ge => a >= b,
            Cmp::Gt => a > b,
            Cmp::Le => a <= b,
            Cmp::Lt => a < b,
            Cmp::Eq => a == b,
            Cmp::Ne => a != b,
        }
    }
}

/// Classical Boolean expression.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CExpr {
    Const(bool),
    Var(VarRef),
    Not(Box<CExpr>),
    And(Vec<CExpr>),
    Or(Vec<CExpr>),
    Xor(Vec<CExpr>),
    Eq(Box<CExpr>, Box<CExpr>),
    Ne(Box<CExpr>, Box<CExpr>),
    /// `sum(terms) <cmp> k`, the number of true terms compared with `k`.
    Count {
        terms: Vec<CExpr>,
        cmp: Cmp,
        k: u32,
    },
}

impl CExpr {
    pub fn var(v: VarRef) -> Self {
        CExpr::Var(v)
    }

    /// Variables read by the expression, in order of appearance.
    pub fn reads(&self, out: &mut Vec<VarRef>) {
        match self {
            CExpr::Const(_) => {}
            CExpr::Var(v) => out.push(v.clone()),
            CExpr::Not(e) => e.reads(out),
            CExpr::And(es) | CExpr::Or(es) | CExpr::Xor(es) | CExpr::Count { terms: es, .. } => {
                for e in es {
                    e.reads(out);
                }
            }
            CExpr::Eq(a, b) | CExpr::Ne(a, b) => {
                a.reads(out);
                b.reads(out);
            }
        }
    }

    /// Evaluates with a concrete variable lookup.
    pub fn eval_with(&self, get: &dyn Fn(&VarRef) -> Option<bool>) -> Option<bool> {
        Some(match self {
            CExpr::Const(b) => *b,
            CExpr::Var(v) => get(v)?,
            CExpr::Not(e) => !e.eval_with(get)?,
            CExpr::And(es) => {
                let mut r = true;
                for e in es {
                    r &= e.eval_with(get)?;
                }
                r
            }
            CExpr::Or(es) => {
                let mut r = false;
                for e in es {
                    r |= e.eval_with(get)?;
                }
                r
            }
            CExpr::Xor(es) => {
                let mut r = false;
                for e in es {
                    r ^= e.eval_with(get)?;
                }
                r
            }
            CExpr::Eq(a, b) => a.eval_with(get)? == b.eval_with(get)?,
            CExpr::Ne(a, b) => a.eval_with(get)? != b.eval_with(get)?,
            CExpr::Count { terms, cmp, k } => {
                let mut c = 0;
                for e in terms {
                    c += e.eval_with(get)? as usize;
                }
                cmp.holds(c, *k as usize)
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopClass {
    Memoryless,
    Conservative,
}

impl LoopClass {
    pub fn name(self) -> &'static str {
        match self {
            LoopClass::Memoryless => "memoryless",
            LoopClass::Conservative => "conservative",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GadgetKind {
    Prep,
    Gate,
    Measure,
    Ec,
}

impl GadgetKind {
    pub fn name(self) -> &'static str {
        match self {
            GadgetKind::Prep => "prep",
            GadgetKind::Gate => "gate",
            GadgetKind::Measure => "measure",
            GadgetKind::Ec => "ec",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "prep" => GadgetKind::Prep,
            "gate" => GadgetKind::Gate,
            "measure" => GadgetKind::Measure,
            "ec" => GadgetKind::Ec,
            _ => return None,
        })
    }
}

/// Declared behaviour of a classical oracle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleKind {
    /// Lookup decoder of a named code; `t` defaults to the code's.
    Decoder { code: String, t: Option<u32> },
    /// One output bit: at least `k` inputs are 1.
    Majority { k: u32 },
    /// Explicit truth table; `rows[i]` is the output word for input word
    /// `i`, with argument 0 as the most significant input bit.
    Table { inputs: u32, outputs: u32, rows: Vec<u64> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleDecl {
    pub name: String,
    pub kind: OracleKind,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Stmt {
    /// Pre-order index, assigned by [`Program::renumber`].
    pub id: u32,
    pub line: u32,
    pub col: u32,
    pub kind: StmtKind,
}

impl PartialEq for Stmt {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Stmt {}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StmtKind {
    Init(usize),
    Gate(Gate, Vec<usize>),
    Measure(VarRef, usize),
    Assign(VarRef, CExpr),
    Oracle { out: VarRef, name: String, args: Vec<CExpr> },
    If { cond: CExpr, then_body: Vec<Stmt>, else_body: Vec<Stmt> },
    Repeat { body: Vec<Stmt>, until: CExpr, class: LoopClass },
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Self {
        Stmt { id: 0, line: 0, col: 0, kind }
    }

    pub fn init(q: usize) -> Self {
        Stmt::new(StmtKind::Init(q))
    }

    pub fn gate(g: Gate, qs: &[usize]) -> Self {
        Stmt::new(StmtKind::Gate(g, qs.to_vec()))
    }

    pub fn measure(v: VarRef, q: usize) -> Self {
        Stmt::new(StmtKind::Measure(v, q))
    }

    pub fn assign(v: VarRef, e: CExpr) -> Self {
        Stmt::new(StmtKind::Assign(v, e))
    }

    pub fn oracle(out: VarRef, name: &str, args: Vec<CExpr>) -> Self {
        Stmt::new(StmtKind::Oracle { out, name: name.to_string(), args })
    }

    pub fn if_else(cond: CExpr, then_body: Vec<Stmt>, else_body: Vec<Stmt>) -> Self {
        Stmt::new(StmtKind::If { cond, then_body, else_body })
    }

    pub fn repeat(body: Vec<Stmt>, until: CExpr, class: LoopClass) -> Self {
        Stmt::new(StmtKind::Repeat { body, until, class })
    }

    /// Qubits touched by this statement (not its children).
    pub fn own_qubits(&self) -> Vec<usize> {
        match &self.kind {
            StmtKind::Init(q) | StmtKind::Measure(_, q) => vec![*q],
            StmtKind::Gate(_, qs) => qs.clone(),
            _ => Vec::new(),
        }
    }
}

/// Visits `stmts` and all nested statements in pre-order.
pub fn walk<'a>(stmts: &'a [Stmt], f: &mut dyn FnMut(&'a Stmt)) {
    for s in stmts {
        f(s);
        match &s.kind {
            StmtKind::If { then_body, else_body, .. } => {
                walk(then_body, f);
                walk(else_body, f);
            }
            StmtKind::Repeat { body, .. } => walk(body, f),
            _ => {}
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub qubits: usize,
    /// Data blocks; qubits outside every block are ancillas.
    pub blocks: Vec<Vec<usize>>,
    pub kind: Option<GadgetKind>,
    pub code: Option<String>,
    /// Variable holding the logical outcome of a measurement gadget.
    pub result: Option<VarRef>,
    pub oracles: Vec<OracleDecl>,
    /// Unitary reference circuit for gate gadgets.
    pub ideal: Vec<Stmt>,
    pub body: Vec<Stmt>,
}

impl Program {
    pub fn new(qubits: usize) -> Self {
        Program { qubits, ..Default::default() }
    }

    /// Assigns pre-order ids to the body, then to the ideal block.
    pub fn renumber(&mut self) {
        fn go(stmts: &mut [Stmt], next: &mut u32) {
            for s in stmts {
                s.id = *next;
                *next += 1;
                match &mut s.kind {
                    StmtKind::If { then_body, else_body, .. } => {
                        go(then_body, next);
                        go(else_body, next);
                    }
                    StmtKind::Repeat { body, .. } => go(body, next),
                    _ => {}
                }
            }
        }
        let mut next = 0;
        go(&mut self.body, &mut next);
        go(&mut self.ideal, &mut next);
    }

    pub fn oracle(&self, name: &str) -> Option<&OracleDecl> {
        self.oracles.iter().find(|o| o.name == name)
    }

    /// All data qubits, blocks concatenated in order.
    pub fn data_qubits(&self) -> Vec<usize> {
        self.blocks.iter().flatten().copied().collect()
    }

    pub fn is_data(&self) -> Vec<bool> {
        let mut v = vec![false; self.qubits];
        for &q in self.blocks.iter().flatten() {
            if q < self.qubits {
                v[q] = true;
            }
        }
        v
    }

    /// Number of statements in the body, nested ones included.
    pub fn stmt_count(&self) -> usize {
        let mut c = 0;
        walk(&self.body, &mut |_| c += 1);
        c
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print::program_to_string(self))
    }
}

impl fmt::Display for CExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print::expr_to_string(self))
    }
}

impl std::str::FromStr for Program {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

#[cfg(test)]
mod tests;
