//! Concrete interpreter with Pauli faults.
//!
//! A [`Driver`] resolves every nondeterministic choice: which Pauli fault
//! (if any) occurs at each fault location, the value of each random
//! measurement, and optionally oracle outputs. The same machine serves as
//! the ideal interpreter (no faults), the exhaustive fault enumerator and
//! the counterexample replayer.
//!
//! Fault locations: after every `init` (on that qubit), after every gate
//! (one location covering all its qubits), and around every measurement
//! (a Pauli before and one after, counted as a single fault).

use std::collections::HashMap;

use thiserror::Error;

use crate::oracle::{OracleError, OracleSpec};
use crate::pauli::{Pauli1, PauliOp};
use crate::program::{CExpr, Program, Stmt, StmtKind, VarRef};
use crate::stabilizer::Tableau;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("loop at statement {stmt} exceeded {cap} iterations")]
    LoopCap { stmt: u32, cap: usize },
    #[error("variable `{0}` read before it was written")]
    Undefined(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("run abandoned by driver: {0}")]
    Abandoned(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SiteKind {
    Init,
    Gate,
    Measure,
}

/// A fault location reached during execution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Site {
    pub stmt: u32,
    pub kind: SiteKind,
    pub qubits: Vec<usize>,
}

/// A fault at a site: `pre` (measurements only) acts before the
/// measurement, `post[i]` on `site.qubits[i]` afterwards.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiteFault {
    pub pre: Pauli1,
    pub post: Vec<Pauli1>,
}

impl SiteFault {
    pub fn is_trivial(&self) -> bool {
        self.pre == Pauli1::I && self.post.iter().all(|&p| p == Pauli1::I)
    }
}

pub trait Driver {
    fn fault(&mut self, site: &Site) -> Option<SiteFault>;
    fn outcome(&mut self, stmt: u32, qubit: usize) -> bool;
    /// Oracle outputs; defaults to the concrete oracle.
    fn oracle(&mut self, _stmt: u32, spec: &OracleSpec, args: &[bool]) -> Vec<bool> {
        spec.eval(args)
    }
    /// Called at the end of each loop iteration; `false` aborts the run.
    fn loop_iteration(&mut self, _stmt: u32, _iteration: usize, _done: bool) -> bool {
        true
    }
}

/// Fault-free driver that resolves random outcomes from a fixed stream
/// (then zeros).
#[derive(Clone, Debug, Default)]
pub struct IdealDriver {
    pub outcomes: Vec<bool>,
    pos: usize,
}

impl IdealDriver {
    pub fn new(outcomes: Vec<bool>) -> Self {
        IdealDriver { outcomes, pos: 0 }
    }
}

impl Driver for IdealDriver {
    fn fault(&mut self, _site: &Site) -> Option<SiteFault> {
        None
    }

    fn outcome(&mut self, _stmt: u32, _qubit: usize) -> bool {
        let b = self.outcomes.get(self.pos).copied().unwrap_or(false);
        self.pos += 1;
        b
    }
}

/// One fault that actually happened.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaultEvent {
    pub site: Site,
    pub fault: SiteFault,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub state: Tableau,
    pub store: HashMap<VarRef, bool>,
    pub faults: Vec<FaultEvent>,
    /// Random measurement outcomes in execution order.
    pub random_outcomes: Vec<(u32, usize, bool)>,
}

pub struct Machine<'a> {
    prog: &'a Program,
    oracles: &'a HashMap<String, OracleSpec>,
    pub loop_cap: usize,
}

struct RunState<'d> {
    state: Tableau,
    store: HashMap<VarRef, bool>,
    faults: Vec<FaultEvent>,
    random: Vec<(u32, usize, bool)>,
    driver: &'d mut dyn Driver,
}

fn apply1(t: &mut Tableau, q: usize, p: Pauli1) {
    if p != Pauli1::I {
        let n = t.n();
        t.apply_pauli(&PauliOp::single(n, q, p));
    }
}

impl<'a> Machine<'a> {
    pub fn new(prog: &'a Program, oracles: &'a HashMap<String, OracleSpec>) -> Self {
        Machine { prog, oracles, loop_cap: 1000 }
    }

    pub fn run(&self, input: Tableau, driver: &mut dyn Driver) -> Result<RunOutput, RunError> {
        let mut st = RunState { state: input, store: HashMap::new(), faults: Vec::new(), random: Vec::new(), driver };
        self.block(&self.prog.body, &mut st)?;
        Ok(RunOutput { state: st.state, store: st.store, faults: st.faults, random_outcomes: st.random })
    }

    fn block(&self, stmts: &[Stmt], st: &mut RunState) -> Result<(), RunError> {
        for s in stmts {
            self.stmt(s, st)?;
        }
        Ok(())
    }

    fn site_fault(&self, s: &Stmt, kind: SiteKind, qubits: Vec<usize>, st: &mut RunState) -> Option<SiteFault> {
        let site = Site { stmt: s.id, kind, qubits };
        let f = st.driver.fault(&site)?;
        if f.is_trivial() {
            return None;
        }
        st.faults.push(FaultEvent { site, fault: f.clone() });
        Some(f)
    }

    fn stmt(&self, s: &Stmt, st: &mut RunState) -> Result<(), RunError> {
        match &s.kind {
            StmtKind::Init(q) => {
                st.state.reset(*q);
                if let Some(f) = self.site_fault(s, SiteKind::Init, vec![*q], st) {
                    apply1(&mut st.state, *q, f.post[0]);
                }
            }
            StmtKind::Gate(g, qs) => {
                st.state.apply(*g, qs);
                if let Some(f) = self.site_fault(s, SiteKind::Gate, qs.clone(), st) {
                    for (q, p) in qs.iter().zip(&f.post) {
                        apply1(&mut st.state, *q, *p);
                    }
                }
            }
            StmtKind::Measure(v, q) => {
                let f = self.site_fault(s, SiteKind::Measure, vec![*q], st);
                if let Some(f) = &f {
                    apply1(&mut st.state, *q, f.pre);
                }
                let random = st.state.is_random(*q);
                let forced = if random { st.driver.outcome(s.id, *q) } else { false };
                let (m, _) = st.state.measure(*q, forced);
                if random {
                    st.random.push((s.id, *q, m));
                }
                if let Some(f) = &f {
                    apply1(&mut st.state, *q, f.post[0]);
                }
                st.store.insert(v.clone(), m);
            }
            StmtKind::Assign(v, e) => {
                let b = self.eval(e, st)?;
                st.store.insert(v.clone(), b);
            }
            StmtKind::Oracle { out, name, args } => {
                let spec = self.oracles.get(name).ok_or_else(|| OracleError::Undeclared(name.clone()))?;
                let vals: Vec<bool> = args.iter().map(|a| self.eval(a, st)).collect::<Result<_, _>>()?;
                spec.check_arity(name, vals.len())?;
                let outs = st.driver.oracle(s.id, spec, &vals);
                store_outputs(&mut st.store, out, &outs);
            }
            StmtKind::If { cond, then_body, else_body } => {
                if self.eval(cond, st)? {
                    self.block(then_body, st)?;
                } else {
                    self.block(else_body, st)?;
                }
            }
            StmtKind::Repeat { body, until, .. } => {
                let mut it = 0;
                loop {
                    self.block(body, st)?;
                    let done = self.eval(until, st)?;
                    if !st.driver.loop_iteration(s.id, it, done) {
                        return Err(RunError::Abandoned(format!("loop at statement {}", s.id)));
                    }
                    if done {
                        break;
                    }
                    it += 1;
                    if it >= self.loop_cap {
                        return Err(RunError::LoopCap { stmt: s.id, cap: self.loop_cap });
                    }
                }
            }
        }
        Ok(())
    }

    fn eval(&self, e: &CExpr, st: &RunState) -> Result<bool, RunError> {
        let get = |v: &VarRef| st.store.get(v).copied();
        e.eval_with(&get).ok_or_else(|| {
            let mut reads = Vec::new();
            e.reads(&mut reads);
            let missing = reads.into_iter().find(|v| !st.store.contains_key(v));
            RunError::Undefined(missing.map_or_else(String::new, |v| v.to_string()))
        })
    }
}

/// Oracle outputs define `out[i]` for every output bit and `out` as bit 0.
pub fn store_outputs<T: Clone>(store: &mut HashMap<VarRef, T>, out: &VarRef, vals: &[T]) {
    for (i, v) in vals.iter().enumerate() {
        store.insert(VarRef::indexed(&out.name, i), v.clone());
    }
    if let Some(v) = vals.first() {
        store.insert(VarRef::plain(&out.name), v.clone());
    }
}

/// Resolves every oracle declared by `prog`.
pub fn resolve_oracles(prog: &Program) -> Result<HashMap<String, OracleSpec>, OracleError> {
    prog.oracles.iter().map(|d| Ok((d.name.clone(), OracleSpec::resolve(d)?))).collect()
}

/// Fault options used by the exhaustive enumerator. A `Z` after `init` acts
/// trivially on `|0⟩` and is skipped; before a measurement only `X`
/// matters, since `Z` commutes with the projection and `Y ≅ X·Z`.
pub fn fault_options(site: &Site) -> Vec<SiteFault> {
    const P: [Pauli1; 4] = [Pauli1::I, Pauli1::X, Pauli1::Y, Pauli1::Z];
    match site.kind {
        SiteKind::Init => vec![SiteFault { pre: Pauli1::I, post: vec![Pauli1::X] }],
        SiteKind::Gate => {
            let k = site.qubits.len();
            let mut out = Vec::new();
            for code in 1..4usize.pow(k as u32) {
                let post = (0..k).map(|i| P[code / 4usize.pow(i as u32) % 4]).collect();
                out.push(SiteFault { pre: Pauli1::I, post });
            }
            out
        }
        SiteKind::Measure => {
            let mut out = Vec::new();
            for pre in [Pauli1::I, Pauli1::X] {
                for post in P {
                    if pre != Pauli1::I || post != Pauli1::I {
                        out.push(SiteFault { pre, post: vec![post] });
                    }
                }
            }
            out
        }
    }
}

/// Depth-first enumeration of every choice sequence, by re-execution.
///
/// Each run consumes a prefix of recorded choices and extends it with
/// zeros; [`ChoiceTree::advance`] moves to the next unexplored branch.
#[derive(Clone, Debug, Default)]
pub struct ChoiceTree {
    path: Vec<(u32, u32)>,
    pos: usize,
}

impl ChoiceTree {
    pub fn choose(&mut self, arity: u32) -> u32 {
        debug_assert!(arity > 0);
        let c = if self.pos < self.path.len() {
            debug_assert_eq!(self.path[self.pos].1, arity, "nondeterministic replay");
            self.path[self.pos].0
        } else {
            self.path.push((0, arity));
            0
        };
        self.pos += 1;
        c
    }

    /// Prepares the next run; `false` once the tree is exhausted.
    pub fn advance(&mut self) -> bool {
        self.path.truncate(self.pos);
        self.pos = 0;
        while let Some(&(c, a)) = self.path.last() {
            if c + 1 < a {
                self.path.last_mut().unwrap().0 += 1;
                return true;
            }
            self.path.pop();
        }
        false
    }

    /// Abandons the current run's remaining subtree below the choices
    /// already made.
    pub fn prune_here(&mut self) {
        self.path.truncate(self.pos);
    }
}

/// Driver for exhaustive enumeration with at most `budget` faults in
/// total (input errors included by the caller via `used`).
pub struct EnumDriver<'t> {
    pub tree: &'t mut ChoiceTree,
    pub budget: usize,
    pub used: usize,
    pub max_iterations: usize,
}

impl Driver for EnumDriver<'_> {
    fn fault(&mut self, site: &Site) -> Option<SiteFault> {
        if self.used >= self.budget {
            return None;
        }
        let opts = fault_options(site);
        let c = self.tree.choose(opts.len() as u32 + 1);
        if c == 0 {
            return None;
        }
        self.used += 1;
        Some(opts[c as usize - 1].clone())
    }

    fn outcome(&mut self, _stmt: u32, _qubit: usize) -> bool {
        self.tree.choose(2) == 1
    }

    fn loop_iteration(&mut self, _stmt: u32, iteration: usize, done: bool) -> bool {
        done || iteration + 1 < self.max_iterations
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::parse;

    fn run_text(src: &str, driver: &mut dyn Driver) -> RunOutput {
        let p = parse(src).unwrap();
        let oracles = resolve_oracles(&p).unwrap();
        Machine::new(&p, &oracles).run(Tableau::new(p.qubits), driver).unwrap()
    }

    #[test]
    fn init_then_measure_is_zero() {
        let out = run_text("qubits 1\ninit q0\nx0 := measure q0", &mut IdealDriver::default());
        assert!(!out.store[&VarRef::plain("x0")]);
    }

    #[test]
    fn loop_cap_diagnostic() {
        let p = parse("qubits 1\nrepeat @memoryless {\n init q0\n m := measure q0\n} until (m == 1)").unwrap();
        let oracles = resolve_oracles(&p).unwrap();
        let err = Machine::new(&p, &oracles).run(Tableau::new(1), &mut IdealDriver::default()).unwrap_err();
        assert_eq!(err, RunError::LoopCap { stmt: 0, cap: 1000 });
    }

    #[test]
    fn enumeration_counts_runs() {
        // One init location with one option, one measurement with 7
        // options: budget 1 gives 1 + 1 + 7 runs.
        let p = parse("qubits 1\ninit q0\nx := measure q0").unwrap();
        let oracles = resolve_oracles(&p).unwrap();
        let m = Machine::new(&p, &oracles);
        let mut tree = ChoiceTree::default();
        let mut flipped = 0;
        let mut runs = 0;
        loop {
            let mut d = EnumDriver { tree: &mut tree, budget: 1, used: 0, max_iterations: 3 };
            let out = m.run(Tableau::new(1), &mut d).unwrap();
            runs += 1;
            if out.store[&VarRef::plain("x")] {
                flipped += 1;
            }
            if !tree.advance() {
                break;
            }
        }
        assert_eq!(runs, 9);
        // X after init, or X/Y before the measurement, flips the outcome.
        assert_eq!(flipped, 1 + 4);
    }
}
