//! Symbolic Boolean expressions over named bit symbols.
//!
//! An [`Expr`] is kept in XOR-normal form: a constant bit XOR a sorted set of
//! atoms. An atom is either a symbol or an interned AND/OR node whose
//! children are themselves `Expr`s. Phases produced by tableau updates are
//! XOR-affine, so they never allocate interned nodes; AND/OR nodes only
//! appear for decoder assertions, threshold votes and branch conditions.
//! Interned nodes are hash-consed with children in canonical order, which
//! keeps lowered SMT text byte-stable.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("symbol {0} has no value in the assignment")]
    Unassigned(String),
}

/// Handle of an interned atom (symbol or AND/OR node).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Atom(pub u32);

impl Atom {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    InputErrorX,
    InputErrorZ,
    FaultX,
    FaultZ,
    Outcome,
    DecoderOutput,
    LogicalPhase,
}

impl SymbolKind {
    fn prefix(self) -> &'static str {
        match self {
            SymbolKind::InputErrorX => "ix",
            SymbolKind::InputErrorZ => "iz",
            SymbolKind::FaultX => "fx",
            SymbolKind::FaultZ => "fz",
            SymbolKind::Outcome => "m",
            SymbolKind::DecoderOutput => "r",
            SymbolKind::LogicalPhase => "s",
        }
    }

    pub fn is_fault(self) -> bool {
        matches!(self, SymbolKind::FaultX | SymbolKind::FaultZ)
    }

    pub fn is_input_error(self) -> bool {
        matches!(self, SymbolKind::InputErrorX | SymbolKind::InputErrorZ)
    }
}

/// Where a symbol was introduced.
///
/// `stmt` is the statement index (or a sentinel for input injection),
/// `qubit` the physical qubit, `slot` disambiguates several symbols of the
/// same kind at one site (pre/post measurement error, decoder output bit,
/// logical qubit), and `iter` is the loop-iteration tag.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Origin {
    pub stmt: u32,
    pub qubit: u32,
    pub slot: u32,
    pub iter: u32,
}

/// Statement index used for symbols not tied to a program statement.
pub const INPUT_STMT: u32 = u32::MAX;

impl Origin {
    pub fn new(stmt: u32, qubit: u32, slot: u32) -> Self {
        Origin { stmt, qubit, slot, iter: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Symbol {
    pub atom: Atom,
    pub kind: SymbolKind,
    pub origin: Origin,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Var,
    And(Vec<Expr>),
    Or(Vec<Expr>),
}

/// Boolean expression: `constant ⊕ atoms[0] ⊕ atoms[1] ⊕ …`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Expr {
    constant: bool,
    atoms: Arc<[Atom]>,
}

impl Expr {
    pub fn constant(b: bool) -> Self {
        Expr { constant: b, atoms: Arc::from(Vec::new()) }
    }

    pub fn zero() -> Self {
        Expr::constant(false)
    }

    pub fn one() -> Self {
        Expr::constant(true)
    }

    pub fn atom(a: Atom) -> Self {
        Expr { constant: false, atoms: Arc::from(vec![a]) }
    }

    pub fn as_const(&self) -> Option<bool> {
        if self.atoms.is_empty() {
            Some(self.constant)
        } else {
            None
        }
    }

    pub fn is_const(&self, b: bool) -> bool {
        self.as_const() == Some(b)
    }

    pub fn const_part(&self) -> bool {
        self.constant
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `¬e`, which in XOR-normal form only flips the constant.
    pub fn not(&self) -> Expr {
        Expr { constant: !self.constant, atoms: self.atoms.clone() }
    }

    /// `a ⊕ b` by symmetric difference of sorted atom lists.
    pub fn xor(&self, other: &Expr) -> Expr {
        if other.atoms.is_empty() {
            return Expr { constant: self.constant ^ other.constant, atoms: self.atoms.clone() };
        }
        if self.atoms.is_empty() {
            return Expr { constant: self.constant ^ other.constant, atoms: other.atoms.clone() };
        }
        let (a, b) = (&self.atoms, &other.atoms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Expr { constant: self.constant ^ other.constant, atoms: Arc::from(out) }
    }

    pub fn xor_const(&self, b: bool) -> Expr {
        Expr { constant: self.constant ^ b, atoms: self.atoms.clone() }
    }

    /// `a ⊕ b` when `c` holds, `a` otherwise, for a concrete `c`.
    pub fn xor_if(&self, other: &Expr, c: bool) -> Expr {
        if c {
            self.xor(other)
        } else {
            self.clone()
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return write!(f, "{}", self.constant as u8);
        }
        let parts: Vec<String> = self.atoms.iter().map(|a| format!("a{}", a.0)).collect();
        if self.constant {
            write!(f, "1^{}", parts.join("^"))
        } else {
            write!(f, "{}", parts.join("^"))
        }
    }
}

/// A total or partial valuation of symbols.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment {
    values: Vec<Option<bool>>,
}

impl Assignment {
    pub fn new() -> Self {
        Assignment::default()
    }

    pub fn set(&mut self, a: Atom, b: bool) {
        if self.values.len() <= a.index() {
            self.values.resize(a.index() + 1, None);
        }
        self.values[a.index()] = Some(b);
    }

    pub fn get(&self, a: Atom) -> Option<bool> {
        self.values.get(a.index()).copied().flatten()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Atom, bool)> + '_ {
        self.values.iter().enumerate().filter_map(|(i, v)| v.map(|b| (Atom(i as u32), b)))
    }
}

/// Sum of 0/1 terms; one term per fault location.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct FaultCounter {
    terms: Vec<Expr>,
}

impl FaultCounter {
    pub fn new() -> Self {
        FaultCounter::default()
    }

    pub fn terms(&self) -> &[Expr] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Appends an independent term. Constant-zero terms are dropped.
    pub fn add(&mut self, e: Expr) {
        if !e.is_const(false) {
            self.terms.push(e);
        }
    }

    /// Appends one term `e₁ ∨ … ∨ e_a`, so a multi-qubit fault counts once.
    pub fn or_append(&mut self, pool: &mut ExprPool, flags: &[Expr]) {
        let e = pool.or_all(flags.iter().cloned());
        self.add(e);
    }

    pub fn extend(&mut self, other: &FaultCounter) {
        self.terms.extend(other.terms.iter().cloned());
    }

    pub fn value(&self, pool: &ExprPool, a: &Assignment) -> Result<usize, ExprError> {
        let mut v = 0;
        for t in &self.terms {
            if pool.eval(t, a)? {
                v += 1;
            }
        }
        Ok(v)
    }
}

/// Interning table and symbol registry of one verification run.
#[derive(Debug, Default, Clone)]
pub struct ExprPool {
    nodes: Vec<Node>,
    symbols: Vec<Option<Symbol>>,
    intern: HashMap<Node, Atom>,
}

impl ExprPool {
    pub fn new() -> Self {
        ExprPool::default()
    }

    /// Number of atoms (symbols plus interned nodes) issued so far.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Issues a fresh symbol. Ids are sequential, so the same sequence of
    /// calls always yields the same ids and names.
    pub fn fresh(&mut self, kind: SymbolKind, origin: Origin) -> Expr {
        let atom = Atom(self.nodes.len() as u32);
        let stmt = if origin.stmt == INPUT_STMT { "in".to_string() } else { origin.stmt.to_string() };
        let name = format!("{}_{}_{}_{}_{}", kind.prefix(), stmt, origin.qubit, origin.slot, atom.0);
        self.nodes.push(Node::Var);
        self.symbols.push(Some(Symbol { atom, kind, origin, name }));
        Expr::atom(atom)
    }

    pub fn node(&self, a: Atom) -> &Node {
        &self.nodes[a.index()]
    }

    pub fn symbol(&self, a: Atom) -> Option<&Symbol> {
        self.symbols.get(a.index()).and_then(|s| s.as_ref())
    }

    pub fn is_symbol(&self, a: Atom) -> bool {
        matches!(self.nodes[a.index()], Node::Var)
    }

    /// All symbols issued so far, in id order.
    pub fn symbols(&self) -> impl Iterator<Item = &Symbol> {
        self.symbols.iter().filter_map(|s| s.as_ref())
    }

    fn intern(&mut self, node: Node) -> Atom {
        if let Some(&a) = self.intern.get(&node) {
            return a;
        }
        let a = Atom(self.nodes.len() as u32);
        self.nodes.push(node.clone());
        self.symbols.push(None);
        self.intern.insert(node, a);
        a
    }

    /// If `e` is exactly one AND (resp. OR) atom, its children.
    fn as_single(&self, e: &Expr, want_and: bool) -> Option<&[Expr]> {
        if e.constant || e.atoms.len() != 1 {
            return None;
        }
        match (&self.nodes[e.atoms[0].index()], want_and) {
            (Node::And(c), true) => Some(c),
            (Node::Or(c), false) => Some(c),
            _ => None,
        }
    }

    pub fn and(&mut self, a: &Expr, b: &Expr) -> Expr {
        self.and_all([a.clone(), b.clone()])
    }

    pub fn or(&mut self, a: &Expr, b: &Expr) -> Expr {
        self.or_all([a.clone(), b.clone()])
    }

    pub fn and_all<I: IntoIterator<Item = Expr>>(&mut self, items: I) -> Expr {
        self.junction(items, true)
    }

    pub fn or_all<I: IntoIterator<Item = Expr>>(&mut self, items: I) -> Expr {
        self.junction(items, false)
    }

    /// Shared AND/OR builder. For AND the absorbing constant is 0 and the
    /// neutral one is 1; OR is the dual.
    fn junction<I: IntoIterator<Item = Expr>>(&mut self, items: I, is_and: bool) -> Expr {
        let absorbing = !is_and;
        let mut kids: Vec<Expr> = Vec::new();
        let mut stack: Vec<Expr> = items.into_iter().collect();
        stack.reverse();
        while let Some(e) = stack.pop() {
            match e.as_const() {
                Some(b) if b == absorbing => return Expr::constant(absorbing),
                Some(_) => continue,
                None => {}
            }
            if let Some(children) = self.as_single(&e, is_and) {
                stack.extend(children.iter().rev().cloned());
                continue;
            }
            kids.push(e);
        }
        kids.sort();
        kids.dedup();
        // x and ¬x differ only in the constant bit and sort next to each other.
        for w in kids.windows(2) {
            if w[0].atoms == w[1].atoms && w[0].constant != w[1].constant {
                return Expr::constant(absorbing);
            }
        }
        match kids.len() {
            0 => Expr::constant(!absorbing),
            1 => kids.pop().unwrap(),
            _ => {
                let node = if is_and { Node::And(kids) } else { Node::Or(kids) };
                Expr::atom(self.intern(node))
            }
        }
    }

    pub fn xor_all<I: IntoIterator<Item = Expr>>(&mut self, items: I) -> Expr {
        items.into_iter().fold(Expr::zero(), |acc, e| acc.xor(&e))
    }

    /// `a == b`.
    pub fn iff(&mut self, a: &Expr, b: &Expr) -> Expr {
        a.xor(b).not()
    }

    /// `a → b`.
    pub fn implies(&mut self, a: &Expr, b: &Expr) -> Expr {
        let na = a.not();
        self.or(&na, b)
    }

    /// "At least `k` of `bits` are 1", built as a sequential counter.
    pub fn at_least(&mut self, bits: &[Expr], k: usize) -> Expr {
        if k == 0 {
            return Expr::one();
        }
        if k > bits.len() {
            return Expr::zero();
        }
        // c[j] = at least j of the bits seen so far, for j in 1..=k.
        let mut c: Vec<Expr> = vec![Expr::zero(); k + 1];
        c[0] = Expr::one();
        for b in bits {
            for j in (1..=k).rev() {
                let carry = self.and(b, &c[j - 1]);
                c[j] = self.or(&c[j], &carry);
            }
        }
        c[k].clone()
    }

    /// "At most `k` of `bits` are 1".
    pub fn at_most(&mut self, bits: &[Expr], k: usize) -> Expr {
        self.at_least(bits, k + 1).not()
    }

    /// "Exactly `k` of `bits` are 1".
    pub fn exactly(&mut self, bits: &[Expr], k: usize) -> Expr {
        let ge = self.at_least(bits, k);
        let le = self.at_most(bits, k);
        self.and(&ge, &le)
    }

    pub fn eval(&self, e: &Expr, a: &Assignment) -> Result<bool, ExprError> {
        let mut memo = HashMap::new();
        self.eval_memo(e, a, &mut memo)
    }

    fn eval_memo(&self, e: &Expr, a: &Assignment, memo: &mut HashMap<Atom, bool>) -> Result<bool, ExprError> {
        let mut v = e.constant;
        for &at in e.atoms.iter() {
            v ^= self.eval_atom(at, a, memo)?;
        }
        Ok(v)
    }

    fn eval_atom(&self, at: Atom, a: &Assignment, memo: &mut HashMap<Atom, bool>) -> Result<bool, ExprError> {
        match &self.nodes[at.index()] {
            Node::Var => a.get(at).ok_or_else(|| ExprError::Unassigned(self.name_of(at))),
            Node::And(kids) => {
                if let Some(&v) = memo.get(&at) {
                    return Ok(v);
                }
                let mut v = true;
                for k in kids {
                    if !self.eval_memo(k, a, memo)? {
                        v = false;
                        break;
                    }
                }
                memo.insert(at, v);
                Ok(v)
            }
            Node::Or(kids) => {
                if let Some(&v) = memo.get(&at) {
                    return Ok(v);
                }
                let mut v = false;
                for k in kids {
                    if self.eval_memo(k, a, memo)? {
                        v = true;
                        break;
                    }
                }
                memo.insert(at, v);
                Ok(v)
            }
        }
    }

    pub fn name_of(&self, a: Atom) -> String {
        match self.symbol(a) {
            Some(s) => s.name.clone(),
            None => format!("a{}", a.0),
        }
    }

    /// Rebuilds `e`, replacing symbols for which `f` returns a value.
    /// Rebuilding re-applies every normalization, so this also simplifies.
    pub fn substitute(&mut self, e: &Expr, f: &dyn Fn(&Symbol) -> Option<Expr>) -> Expr {
        let mut memo = HashMap::new();
        self.subst_memo(e, f, &mut memo)
    }

    fn subst_memo(&mut self, e: &Expr, f: &dyn Fn(&Symbol) -> Option<Expr>, memo: &mut HashMap<Atom, Expr>) -> Expr {
        let mut out = Expr::constant(e.constant);
        for &at in e.atoms.iter() {
            let r = self.subst_atom(at, f, memo);
            out = out.xor(&r);
        }
        out
    }

    fn subst_atom(&mut self, at: Atom, f: &dyn Fn(&Symbol) -> Option<Expr>, memo: &mut HashMap<Atom, Expr>) -> Expr {
        if let Some(r) = memo.get(&at) {
            return r.clone();
        }
        let r = match self.nodes[at.index()].clone() {
            Node::Var => {
                let sym = self.symbol(at).expect("variable atom without symbol");
                f(sym).unwrap_or_else(|| Expr::atom(at))
            }
            Node::And(kids) => {
                let ks: Vec<Expr> = kids.iter().map(|k| self.subst_memo(k, f, memo)).collect();
                self.and_all(ks)
            }
            Node::Or(kids) => {
                let ks: Vec<Expr> = kids.iter().map(|k| self.subst_memo(k, f, memo)).collect();
                self.or_all(ks)
            }
        };
        memo.insert(at, r.clone());
        r
    }

    /// Normalizing rebuild of `e`.
    pub fn simplify(&mut self, e: &Expr) -> Expr {
        self.substitute(e, &|_| None)
    }

    /// Symbols occurring in `e`.
    pub fn support(&self, e: &Expr) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let mut stack: Vec<Atom> = e.atoms.to_vec();
        while let Some(a) = stack.pop() {
            if !seen.insert(a) {
                continue;
            }
            match &self.nodes[a.index()] {
                Node::Var => {
                    out.insert(a);
                }
                Node::And(k) | Node::Or(k) => {
                    for c in k {
                        stack.extend(c.atoms.iter().copied());
                    }
                }
            }
        }
        out
    }

    /// All atoms reachable from `roots`, in ascending id order. Children are
    /// always created before parents, so this order is topological.
    pub fn reachable<'a, I: IntoIterator<Item = &'a Expr>>(&self, roots: I) -> Vec<Atom> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<Atom> = Vec::new();
        for r in roots {
            stack.extend(r.atoms.iter().copied());
        }
        while let Some(a) = stack.pop() {
            if !seen.insert(a) {
                continue;
            }
            if let Node::And(k) | Node::Or(k) = &self.nodes[a.index()] {
                for c in k {
                    stack.extend(c.atoms.iter().copied());
                }
            }
        }
        seen.into_iter().collect()
    }

    /// `true` iff `e` is an XOR of symbols plus a constant.
    pub fn is_affine(&self, e: &Expr) -> bool {
        e.atoms.iter().all(|a| self.is_symbol(*a))
    }

    /// Human-readable rendering, for diagnostics.
    pub fn render(&self, e: &Expr) -> String {
        if let Some(b) = e.as_const() {
            return (b as u8).to_string();
        }
        let mut parts: Vec<String> = e.atoms.iter().map(|a| self.render_atom(*a)).collect();
        if e.constant {
            parts.insert(0, "1".into());
        }
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            format!("({})", parts.join(" ^ "))
        }
    }

    fn render_atom(&self, a: Atom) -> String {
        match &self.nodes[a.index()] {
            Node::Var => self.name_of(a),
            Node::And(k) => format!("({})", k.iter().map(|c| self.render(c)).collect::<Vec<_>>().join(" & ")),
            Node::Or(k) => format!("({})", k.iter().map(|c| self.render(c)).collect::<Vec<_>>().join(" | ")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(pool: &mut ExprPool, k: usize) -> Vec<Expr> {
        (0..k).map(|i| pool.fresh(SymbolKind::FaultX, Origin::new(i as u32, 0, 0))).collect()
    }

    #[test]
    fn xor_cancels() {
        let mut pool = ExprPool::new();
        let x = vars(&mut pool, 1).pop().unwrap();
        assert!(x.xor(&x).is_const(false));
        assert!(x.xor(&x.not()).is_const(true));
    }

    #[test]
    fn junction_rules() {
        let mut pool = ExprPool::new();
        let v = vars(&mut pool, 3);
        assert!(pool.and(&v[0], &v[0].not()).is_const(false));
        assert!(pool.or(&v[0], &v[0].not()).is_const(true));
        assert_eq!(pool.and(&v[0], &Expr::one()), v[0]);
        assert_eq!(pool.and(&v[0], &v[1]), pool.clone().and(&v[1], &v[0]));
        let ab = pool.and(&v[0], &v[1]);
        let abc = pool.and(&ab, &v[2]);
        let flat = pool.and_all(v.clone());
        assert_eq!(abc, flat);
    }

    #[test]
    fn eval_missing_symbol_is_error() {
        let mut pool = ExprPool::new();
        let v = vars(&mut pool, 2);
        let e = pool.or(&v[0], &v[1]);
        let mut a = Assignment::new();
        a.set(v[0].atoms()[0], false);
        assert!(pool.eval(&e, &a).is_err());
        a.set(v[1].atoms()[0], true);
        assert!(pool.eval(&e, &a).unwrap());
    }

    #[test]
    fn counter_counts_or_terms_once() {
        let mut pool = ExprPool::new();
        let v = vars(&mut pool, 3);
        let mut c = FaultCounter::new();
        c.or_append(&mut pool, &v[0..2]);
        let mut a = Assignment::new();
        for x in &v {
            a.set(x.atoms()[0], true);
        }
        assert_eq!(c.value(&pool, &a).unwrap(), 1);
        c.add(v[2].clone());
        assert_eq!(c.value(&pool, &a).unwrap(), 2);
        assert_eq!(FaultCounter::new().value(&pool, &a).unwrap(), 0);
    }

    #[test]
    fn fresh_ids_are_distinct_and_deterministic() {
        let mut p1 = ExprPool::new();
        let mut p2 = ExprPool::new();
        let a: Vec<Expr> = vars(&mut p1, 10_000);
        let b: Vec<Expr> = vars(&mut p2, 10_000);
        assert_eq!(a, b);
        let set: BTreeSet<_> = a.iter().map(|e| e.atoms()[0]).collect();
        assert_eq!(set.len(), 10_000);
    }

    #[test]
    fn threshold_matches_popcount() {
        let mut pool = ExprPool::new();
        let v = vars(&mut pool, 5);
        let ge3 = pool.at_least(&v, 3);
        let le1 = pool.at_most(&v, 1);
        for m in 0u32..32 {
            let mut a = Assignment::new();
            for (i, x) in v.iter().enumerate() {
                a.set(x.atoms()[0], m >> i & 1 == 1);
            }
            assert_eq!(pool.eval(&ge3, &a).unwrap(), m.count_ones() >= 3);
            assert_eq!(pool.eval(&le1, &a).unwrap(), m.count_ones() <= 1);
        }
    }
}
