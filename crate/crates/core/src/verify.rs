//! End-to-end verification of a gadget program.
//!
//! For each input basis the program runs symbolically; every terminal path
//! becomes one SMT query whose `sat` models are counterexamples. Models are
//! replayed on the concrete interpreter before a verdict is reported. The
//! same concrete judgement drives [`brute_force`], the exhaustive
//! enumeration used to cross-check the symbolic pipeline.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::codes::{load_code, CodeError, StabilizerCode};
use crate::distance::{block_local_basis, min_distance_nullspace, WeightTable};
use crate::engine::{apply_ideal, inject_input_errors, Config, Engine, EngineError, EngineOptions};
use crate::expr::{Assignment, Atom, Expr, ExprPool, Origin, SymbolKind, INPUT_STMT};
use crate::gf2::BitVec;
use crate::interp::{
    resolve_oracles, ChoiceTree, Driver, EnumDriver, FaultEvent, IdealDriver, Machine, RunError, RunOutput, Site,
    SiteFault, SiteKind,
};
use crate::oracle::{OracleError, OracleSpec};
use crate::pauli::{Pauli1, PauliOp};
use crate::program::{walk, CExpr, GadgetKind, Program, Stmt, StmtKind, VarRef};
use crate::smt::{
    emit_smtlib, solve, BlockDistance, Encoding, FtQuery, PostCondition, SolverConfig, SolverResult, SolverStatus,
};
use crate::stabilizer::Tableau;
use crate::tableau::{synthesize_destabilizers, SymTableau, TableauError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Tableau(#[from] TableauError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("{0}")]
    Setup(String),
    #[error("cannot write {path}: {msg}")]
    Io { path: String, msg: String },
}

/// Input state family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// All qubits in `|0⟩`; preparation gadgets.
    Zero,
    /// Code blocks with symbolic logical-Z phases.
    Z,
    /// Code blocks in the logical `|+⟩` state.
    X,
}

impl Basis {
    pub fn name(self) -> &'static str {
        match self {
            Basis::Zero => "zero",
            Basis::Z => "z",
            Basis::X => "x",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisChoice {
    Z,
    X,
    Both,
}

impl std::str::FromStr for BasisChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "z" => Ok(BasisChoice::Z),
            "x" => Ok(BasisChoice::X),
            "both" => Ok(BasisChoice::Both),
            _ => Err(format!("unknown basis `{s}` (z, x, both)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Fault tolerance under execution faults and input errors.
    Ft,
    /// Exact recovery from input errors without execution faults.
    Ideal,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ft" => Ok(Mode::Ft),
            "ideal" => Ok(Mode::Ideal),
            _ => Err(format!("unknown mode `{s}` (ft, ideal)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub t: usize,
    pub mode: Mode,
    pub bases: BasisChoice,
    pub encoding: Encoding,
    pub solver: SolverConfig,
    pub jobs: usize,
    pub dump_smt: Option<PathBuf>,
    pub path_cap: usize,
}

impl VerifyOptions {
    pub fn new(t: usize, solver: SolverConfig) -> Self {
        VerifyOptions {
            t,
            mode: Mode::Ft,
            bases: BasisChoice::Both,
            encoding: Encoding::LowWeight,
            solver,
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
            dump_smt: None,
            path_cap: 1_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    FaultTolerant,
    NotFaultTolerant,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct FaultRecord {
    pub stmt: u32,
    pub line: u32,
    pub op: &'static str,
    pub qubits: Vec<usize>,
    /// Pauli before a measurement.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pre: Option<String>,
    /// Pauli after the operation, one letter per qubit.
    pub pauli: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct InputErrorRecord {
    pub block: usize,
    pub qubit: usize,
    pub pauli: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub basis: Basis,
    /// Branch decisions `(statement, taken)` of the violating path.
    pub path: Vec<(u32, bool)>,
    pub logical_phases: Vec<bool>,
    pub faults: Vec<FaultRecord>,
    pub input_errors: Vec<InputErrorRecord>,
    /// Random measurement outcomes, keyed `stmt<id>.q<qubit>`.
    pub outcomes: BTreeMap<String, bool>,
    /// Decoder outputs, keyed `stmt<id>`, as bit strings.
    pub decoder_outputs: BTreeMap<String, String>,
    pub exec_faults: usize,
    pub input_error_count: usize,
    /// Minimum number of output errors per block; `None` when above the
    /// search limit.
    pub output_errors: Vec<Option<usize>>,
    pub violated_condition: String,
    pub replay_ok: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Stats {
    pub bases: Vec<Basis>,
    pub paths: usize,
    pub queries: usize,
    pub sat: usize,
    pub unsat: usize,
    pub unknown: usize,
    /// Paths whose output stabilizer group differs from the ideal one.
    pub mismatched_paths: usize,
    /// Concrete runs, for exhaustive enumeration.
    pub runs: usize,
    pub solver_ms: u128,
    pub wall_ms: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub schema_version: u32,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
    pub stats: Stats,
    pub diagnostics: Vec<String>,
}

impl Verdict {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::FaultTolerant => 0,
            Status::NotFaultTolerant => 1,
            Status::Inconclusive => 2,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdict serializes")
    }
}

/// Program-level data shared by the symbolic and exhaustive checks.
struct Setup<'p> {
    prog: &'p Program,
    kind: GadgetKind,
    code: Option<StabilizerCode>,
    oracles: HashMap<String, OracleSpec>,
    lines: HashMap<u32, u32>,
}

impl<'p> Setup<'p> {
    fn new(prog: &'p Program) -> Result<Self, VerifyError> {
        let kind = prog.kind.unwrap_or(GadgetKind::Prep);
        if prog.blocks.is_empty() {
            return Err(VerifyError::Setup("program declares no data block".into()));
        }
        let code = match (&prog.code, kind) {
            (Some(c), _) => Some(load_code(c)?),
            (None, GadgetKind::Prep) => None,
            (None, k) => return Err(VerifyError::Setup(format!("{} gadget needs a `code` declaration", k.name()))),
        };
        if kind != GadgetKind::Prep {
            let c = code.as_ref().unwrap();
            for (i, b) in prog.blocks.iter().enumerate() {
                if b.len() != c.n {
                    return Err(VerifyError::Setup(format!(
                        "block {i} has {} qubits but code {} has {}",
                        b.len(),
                        c.name,
                        c.n
                    )));
                }
            }
        }
        if kind == GadgetKind::Measure && prog.result.is_none() {
            return Err(VerifyError::Setup("measurement gadget needs a `result` declaration".into()));
        }
        let mut lines = HashMap::new();
        walk(&prog.body, &mut |s| {
            lines.insert(s.id, s.line);
        });
        Ok(Setup { prog, kind, code, oracles: resolve_oracles(prog)?, lines })
    }

    fn bases(&self, choice: BasisChoice) -> Vec<Basis> {
        match (self.kind, choice) {
            (GadgetKind::Prep, _) => vec![Basis::Zero],
            (GadgetKind::Measure, _) => vec![Basis::Z],
            (_, BasisChoice::Z) => vec![Basis::Z],
            (_, BasisChoice::X) => vec![Basis::X],
            (_, BasisChoice::Both) => vec![Basis::Z, Basis::X],
        }
    }

    fn n(&self) -> usize {
        self.prog.qubits
    }

    /// Input state and its logical-phase expressions, block by block.
    fn symbolic_input(&self, pool: &mut ExprPool, basis: Basis) -> Result<(SymTableau, Vec<Expr>), VerifyError> {
        let n = self.n();
        if basis == Basis::Zero {
            return Ok((SymTableau::zero_state(n), Vec::new()));
        }
        let code = self.code.as_ref().unwrap();
        let mut gens = Vec::new();
        let mut phases = Vec::new();
        let mut logical = Vec::new();
        let mut covered = vec![false; n];
        for (bi, b) in self.prog.blocks.iter().enumerate() {
            for &q in b {
                covered[q] = true;
            }
            for g in &code.generators {
                gens.push(g.embed(n, b));
                phases.push(Expr::zero());
            }
            for i in 0..code.k {
                if basis == Basis::Z {
                    gens.push(code.logical_z[i].embed(n, b));
                    let s = pool.fresh(SymbolKind::LogicalPhase, Origin::new(INPUT_STMT, bi as u32, i as u32));
                    logical.push(s.clone());
                    phases.push(s);
                } else {
                    gens.push(code.logical_x[i].embed(n, b));
                    phases.push(Expr::zero());
                }
            }
        }
        for (q, c) in covered.iter().enumerate() {
            if !c {
                gens.push(PauliOp::single(n, q, Pauli1::Z));
                phases.push(Expr::zero());
            }
        }
        Ok((SymTableau::from_generators(gens, phases)?, logical))
    }

    fn fault_free_output(&self, input: Tableau) -> Result<Tableau, VerifyError> {
        Ok(Machine::new(self.prog, &self.oracles).run(input, &mut IdealDriver::default())?.state)
    }

    /// Concrete ideal output for a concrete input (before input errors).
    fn concrete_ideal(&self, input: &Tableau, logical: &[bool]) -> Result<ConcIdeal, VerifyError> {
        Ok(match self.kind {
            GadgetKind::Measure => ConcIdeal::Outcome(logical[0]),
            GadgetKind::Prep => ConcIdeal::State(self.fault_free_output(input.clone())?),
            GadgetKind::Ec => ConcIdeal::State(input.clone()),
            GadgetKind::Gate => {
                let mut t = input.clone();
                for s in &self.prog.ideal {
                    if let StmtKind::Gate(g, qs) = &s.kind {
                        t.apply(*g, qs);
                    }
                }
                ConcIdeal::State(t)
            }
        })
    }

    /// Per-block generators of the data part of `stabs`.
    fn data_basis(&self, stabs: &[PauliOp]) -> Result<Vec<Vec<PauliOp>>, VerifyError> {
        let unsigned: Vec<PauliOp> = stabs.iter().map(PauliOp::unsigned).collect();
        block_local_basis(&unsigned, self.n(), &self.prog.blocks)
            .ok_or_else(|| VerifyError::Setup("the ideal output does not factor into independent data blocks".into()))
    }

    /// `(budget holds, distance bound)` for the concrete fault counts.
    fn budget(&self, mode: Mode, t: usize, exec: usize, inputs: &[usize]) -> (bool, usize) {
        let r: usize = inputs.iter().sum();
        match (mode, self.kind) {
            (Mode::Ideal, _) => (exec == 0 && r <= t, 0),
            (_, GadgetKind::Prep) => (exec <= t, exec),
            (_, GadgetKind::Gate) => (r + exec <= t, r + exec),
            (_, GadgetKind::Ec) => (r + exec <= t, exec),
            (_, GadgetKind::Measure) => (r + exec <= t, 0),
        }
    }

    /// Concrete check of the gadget condition on one run.
    fn judge(
        &self,
        mode: Mode,
        t: usize,
        ideal: &ConcIdeal,
        basis: &[Vec<PauliOp>],
        out: &RunOutput,
        inputs: &[usize],
    ) -> Judgement {
        let exec = out.faults.len();
        let (budget_ok, bound) = self.budget(mode, t, exec, inputs);
        let mut j = Judgement { budget_ok, violation: None, output_errors: Vec::new() };
        match ideal {
            ConcIdeal::Outcome(want) => {
                let var = self.prog.result.as_ref().unwrap();
                match out.store.get(var) {
                    Some(got) if got == want => {}
                    Some(got) => {
                        j.violation =
                            Some(format!("logical outcome {} differs from the ideal {}", *got as u8, *want as u8))
                    }
                    None => j.violation = Some(format!("result variable `{var}` was never written")),
                }
            }
            ConcIdeal::State(ideal) => {
                for (bi, gens) in basis.iter().enumerate() {
                    let block = &self.prog.blocks[bi];
                    let mut diff = Vec::with_capacity(gens.len());
                    for g in gens {
                        match (out.state.sign_of(g), ideal.sign_of(g)) {
                            (Some(a), Some(b)) => diff.push(a ^ b),
                            _ => {
                                j.violation.get_or_insert_with(|| {
                                    format!("block {bi}: output stabilizer group differs from the ideal")
                                });
                                break;
                            }
                        }
                    }
                    if diff.len() < gens.len() {
                        j.output_errors.push(None);
                        continue;
                    }
                    let local: Vec<PauliOp> = gens.iter().map(|g| g.restrict(block)).collect();
                    let d = block_distance(&local, block.len(), &BitVec::from_bools(&diff), t + 1);
                    j.output_errors.push(d);
                    if j.violation.is_some() {
                        continue;
                    }
                    if mode == Mode::Ideal {
                        if diff.iter().any(|&b| b) {
                            j.violation = Some(format!("block {bi}: output differs from the ideal state"));
                        }
                    } else if d.is_none_or(|d| d > bound) {
                        let shown = d.map_or_else(|| format!("more than {}", t + 1), |d| d.to_string());
                        j.violation = Some(format!(
                            "block {bi}: {shown} output errors exceed the bound {bound} ({exec} execution faults, {} input errors)",
                            inputs.iter().sum::<usize>()
                        ));
                    }
                }
            }
        }
        j
    }

    fn fault_records(&self, faults: &[FaultEvent]) -> Vec<FaultRecord> {
        faults
            .iter()
            .map(|f| FaultRecord {
                stmt: f.site.stmt,
                line: self.lines.get(&f.site.stmt).copied().unwrap_or(0),
                op: match f.site.kind {
                    SiteKind::Init => "init",
                    SiteKind::Gate => "gate",
                    SiteKind::Measure => "measure",
                },
                qubits: f.site.qubits.clone(),
                pre: (f.site.kind == SiteKind::Measure).then(|| f.fault.pre.as_char().to_string()),
                pauli: f.fault.post.iter().map(|p| p.as_char()).collect(),
            })
            .collect()
    }
}

enum ConcIdeal {
    State(Tableau),
    Outcome(bool),
}

struct Judgement {
    budget_ok: bool,
    violation: Option<String>,
    output_errors: Vec<Option<usize>>,
}

/// Minimum weight of a Pauli with commutation pattern `diff` against the
/// block generators `local`, exact for at most 20 generators and otherwise
/// searched up to weight `limit`.
fn block_distance(local: &[PauliOp], n: usize, diff: &BitVec, limit: usize) -> Option<usize> {
    if local.len() <= 20 {
        let ds = synthesize_destabilizers(local, n).expect("block generators are independent");
        return Some(min_distance_nullspace(local, &ds, diff, n));
    }
    let qubits: Vec<usize> = (0..n).collect();
    WeightTable::new(local, n, &qubits, limit).min_weight(diff)
}

/// Resolves faults, outcomes and decoder outputs from a solver model.
struct ReplayDriver {
    faults: HashMap<(u32, usize, u32), (bool, bool)>,
    outcomes: HashMap<(u32, usize), bool>,
    decoder: HashMap<u32, BTreeMap<u32, bool>>,
}

impl ReplayDriver {
    fn pauli(&self, stmt: u32, q: usize, slot: u32) -> Pauli1 {
        let (x, z) = self.faults.get(&(stmt, q, slot)).copied().unwrap_or((false, false));
        Pauli1::from_bits(x, z)
    }
}

impl Driver for ReplayDriver {
    fn fault(&mut self, site: &Site) -> Option<SiteFault> {
        let s = site.stmt;
        Some(match site.kind {
            SiteKind::Init | SiteKind::Gate => {
                SiteFault { pre: Pauli1::I, post: site.qubits.iter().map(|&q| self.pauli(s, q, 0)).collect() }
            }
            SiteKind::Measure => {
                let q = site.qubits[0];
                SiteFault { pre: self.pauli(s, q, 0), post: vec![self.pauli(s, q, 1)] }
            }
        })
    }

    fn outcome(&mut self, stmt: u32, qubit: usize) -> bool {
        self.outcomes.get(&(stmt, qubit)).copied().unwrap_or(false)
    }

    fn oracle(&mut self, stmt: u32, spec: &OracleSpec, args: &[bool]) -> Vec<bool> {
        match (spec, self.decoder.get(&stmt)) {
            (OracleSpec::Decoder { .. }, Some(bits)) => {
                (0..spec.outputs()).map(|i| bits.get(&(i as u32)).copied().unwrap_or(false)).collect()
            }
            _ => spec.eval(args),
        }
    }

    fn loop_iteration(&mut self, _stmt: u32, _iteration: usize, done: bool) -> bool {
        done
    }
}

/// Symbolic data of one basis, kept for replay.
struct BasisRun {
    basis: Basis,
    pool: ExprPool,
    /// Input after input-error injection.
    input: SymTableau,
    input_syms: Vec<Atom>,
    /// Input before injection, with the ideal gates applied for gate
    /// gadgets.
    ideal_sym: Option<SymTableau>,
    prep_ideal: Option<Tableau>,
    terminals: Vec<Config>,
    queries: Vec<(String, bool)>,
}

fn query_for(
    setup: &Setup,
    cfg: &Config,
    mode: Mode,
    t: usize,
    ideal: &SymIdeal,
) -> Result<(FtQuery, bool), VerifyError> {
    let mut total = cfg.f_in_total();
    total.extend(&cfg.f_exec);
    let budget = match (mode, setup.kind) {
        (Mode::Ideal, _) => vec![(cfg.f_in_total(), t)],
        (_, GadgetKind::Prep) => vec![(cfg.f_exec.clone(), t)],
        _ => vec![(total.clone(), t)],
    };
    let mut mismatch = false;
    let post = match ideal {
        SymIdeal::Outcome(s) => {
            let var = setup.prog.result.as_ref().unwrap();
            let actual =
                cfg.store.get(var).cloned().ok_or_else(|| {
                    VerifyError::Setup(format!("result variable `{var}` is not written on every path"))
                })?;
            PostCondition::Outcome { actual, ideal: s.clone() }
        }
        SymIdeal::State { blocks } => {
            let mut out = Vec::new();
            'blocks: for b in blocks {
                let mut diff = Vec::with_capacity(b.full.len());
                for (g, h) in b.full.iter().zip(&b.h) {
                    match cfg.state.phase_of(g) {
                        Some(p) => diff.push(p.xor(h)),
                        None => {
                            mismatch = true;
                            break 'blocks;
                        }
                    }
                }
                out.push(BlockDistance { n: b.local[0].n(), gens: b.local.clone(), destabs: b.destabs.clone(), diff });
            }
            if mismatch {
                PostCondition::Unsatisfiable
            } else if mode == Mode::Ideal {
                PostCondition::Exact { diffs: out.into_iter().flat_map(|b| b.diff).collect() }
            } else {
                let bound = match setup.kind {
                    GadgetKind::Gate => total,
                    _ => cfg.f_exec.clone(),
                };
                PostCondition::Distance { blocks: out, bound }
            }
        }
    };
    Ok((FtQuery { phi: cfg.phi.clone(), budget, post, t }, mismatch))
}

struct SymBlock {
    full: Vec<PauliOp>,
    local: Vec<PauliOp>,
    destabs: Vec<PauliOp>,
    h: Vec<Expr>,
}

enum SymIdeal {
    State { blocks: Vec<SymBlock> },
    Outcome(Expr),
}

/// Verifies inner memoryless loops of conservative loops as standalone
/// preparation gadgets, caching by the relabelled program text.
struct NestedChecker {
    opts: VerifyOptions,
    cache: RefCell<HashMap<String, Result<(), String>>>,
}

impl NestedChecker {
    fn check(&self, prog: &Program, st: &Stmt) -> Result<(), String> {
        let inner = standalone_loop(prog, st);
        let key = inner.to_string();
        if let Some(r) = self.cache.borrow().get(&key) {
            return r.clone();
        }
        let r = if inner.blocks[0].is_empty() {
            Ok(())
        } else {
            match verify(&inner, &self.opts) {
                Ok(v) => match v.status {
                    Status::FaultTolerant => Ok(()),
                    Status::NotFaultTolerant => Err(format!(
                        "inner preparation is not fault-tolerant: {}",
                        v.counterexample.map_or_else(String::new, |c| c.violated_condition)
                    )),
                    Status::Inconclusive => {
                        Err(format!("inner preparation could not be verified: {}", v.reason.unwrap_or_default()))
                    }
                },
                Err(e) => Err(e.to_string()),
            }
        };
        self.cache.borrow_mut().insert(key, r.clone());
        r
    }
}

/// The loop `st` as a preparation program over the qubits it touches, with
/// qubits and variables renamed in order of first use. The data block is
/// the touched qubits never measured inside the loop.
fn standalone_loop(prog: &Program, st: &Stmt) -> Program {
    let mut touched: Vec<usize> = Vec::new();
    let mut measured = HashSet::new();
    walk(std::slice::from_ref(st), &mut |s| {
        for q in s.own_qubits() {
            if !touched.contains(&q) {
                touched.push(q);
            }
        }
        if let StmtKind::Measure(_, q) = &s.kind {
            measured.insert(*q);
        }
    });
    let mut order = touched.clone();
    order.sort_unstable();
    let qmap: HashMap<usize, usize> = order.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let mut vmap: HashMap<String, String> = HashMap::new();
    let body = relabel(st, &qmap, &mut vmap);
    let mut p = Program::new(order.len());
    p.blocks = vec![order.iter().filter(|q| !measured.contains(q)).map(|q| qmap[q]).collect()];
    p.kind = Some(GadgetKind::Prep);
    p.oracles = prog.oracles.clone();
    p.body = vec![body];
    p.renumber();
    p
}

fn relabel(s: &Stmt, qmap: &HashMap<usize, usize>, vmap: &mut HashMap<String, String>) -> Stmt {
    fn var(v: &VarRef, vmap: &mut HashMap<String, String>) -> VarRef {
        let k = vmap.len();
        let name = vmap.entry(v.name.clone()).or_insert_with(|| format!("v{k}")).clone();
        VarRef { name, index: v.index }
    }
    fn cexpr(e: &CExpr, vmap: &mut HashMap<String, String>) -> CExpr {
        match e {
            CExpr::Const(b) => CExpr::Const(*b),
            CExpr::Var(v) => CExpr::Var(var(v, vmap)),
            CExpr::Not(a) => CExpr::Not(Box::new(cexpr(a, vmap))),
            CExpr::And(es) => CExpr::And(es.iter().map(|x| cexpr(x, vmap)).collect()),
            CExpr::Or(es) => CExpr::Or(es.iter().map(|x| cexpr(x, vmap)).collect()),
            CExpr::Xor(es) => CExpr::Xor(es.iter().map(|x| cexpr(x, vmap)).collect()),
            CExpr::Eq(a, b) => CExpr::Eq(Box::new(cexpr(a, vmap)), Box::new(cexpr(b, vmap))),
            CExpr::Ne(a, b) => CExpr::Ne(Box::new(cexpr(a, vmap)), Box::new(cexpr(b, vmap))),
            CExpr::Count { terms, cmp, k } => {
                CExpr::Count { terms: terms.iter().map(|x| cexpr(x, vmap)).collect(), cmp: *cmp, k: *k }
            }
        }
    }
    let body = |b: &[Stmt], vmap: &mut HashMap<String, String>| b.iter().map(|x| relabel(x, qmap, vmap)).collect();
    let kind = match &s.kind {
        StmtKind::Init(q) => StmtKind::Init(qmap[q]),
        StmtKind::Gate(g, qs) => StmtKind::Gate(*g, qs.iter().map(|q| qmap[q]).collect()),
        StmtKind::Measure(v, q) => StmtKind::Measure(var(v, vmap), qmap[q]),
        StmtKind::Assign(v, e) => {
            let e = cexpr(e, vmap);
            StmtKind::Assign(var(v, vmap), e)
        }
        StmtKind::Oracle { out, name, args } => {
            let args = args.iter().map(|a| cexpr(a, vmap)).collect();
            StmtKind::Oracle { out: var(out, vmap), name: name.clone(), args }
        }
        StmtKind::If { cond, then_body, else_body } => {
            let cond = cexpr(cond, vmap);
            let t = body(then_body, vmap);
            StmtKind::If { cond, then_body: t, else_body: body(else_body, vmap) }
        }
        StmtKind::Repeat { body: b, until, class } => {
            let b = body(b, vmap);
            StmtKind::Repeat { body: b, until: cexpr(until, vmap), class: *class }
        }
    };
    Stmt { id: 0, line: s.line, col: s.col, kind }
}

/// Solves every script on a bounded pool of solver processes. Once some
/// query is `sat`, queries with a higher index are skipped; the lowest
/// `sat` index is always solved, so the outcome does not depend on `jobs`.
fn solve_all(scripts: &[String], solver: &SolverConfig, jobs: usize) -> Vec<Option<SolverResult>> {
    let len = scripts.len();
    let next = AtomicUsize::new(0);
    let best = AtomicUsize::new(usize::MAX);
    let results = Mutex::new(vec![None; len]);
    std::thread::scope(|s| {
        for _ in 0..jobs.max(1).min(len) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= len {
                    break;
                }
                if i > best.load(Ordering::SeqCst) {
                    continue;
                }
                let r = solve(solver, &scripts[i]);
                if r.status == SolverStatus::Sat {
                    best.fetch_min(i, Ordering::SeqCst);
                }
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    results.into_inner().unwrap()
}

/// Symbolic verification of `prog` under `opts`.
pub fn verify(prog: &Program, opts: &VerifyOptions) -> Result<Verdict, VerifyError> {
    let start = Instant::now();
    let setup = Setup::new(prog)?;
    let nested = NestedChecker {
        opts: VerifyOptions { dump_smt: None, bases: BasisChoice::Both, mode: Mode::Ft, ..opts.clone() },
        cache: RefCell::new(HashMap::new()),
    };
    let mut stats = Stats::default();
    let mut diagnostics = Vec::new();
    let mut inconclusive: Option<String> = None;
    for basis in setup.bases(opts.bases) {
        stats.bases.push(basis);
        let run = symbolic_run(&setup, basis, opts, &nested, &mut diagnostics)?;
        stats.paths += run.terminals.len();
        stats.mismatched_paths += run.queries.iter().filter(|q| q.1).count();
        if let Some(dir) = &opts.dump_smt {
            std::fs::create_dir_all(dir)
                .map_err(|e| VerifyError::Io { path: dir.display().to_string(), msg: e.to_string() })?;
            for (i, (text, _)) in run.queries.iter().enumerate() {
                let path = dir.join(format!("{}-path{i:05}.smt2", basis.name()));
                std::fs::write(&path, text)
                    .map_err(|e| VerifyError::Io { path: path.display().to_string(), msg: e.to_string() })?;
            }
        }
        let scripts: Vec<String> = run.queries.iter().map(|q| q.0.clone()).collect();
        let results = solve_all(&scripts, &opts.solver, opts.jobs);
        stats.queries += results.iter().flatten().count();
        for (i, r) in results.iter().enumerate() {
            let Some(r) = r else { continue };
            stats.solver_ms += r.elapsed_ms;
            match &r.status {
                SolverStatus::Unsat => stats.unsat += 1,
                SolverStatus::Sat => stats.sat += 1,
                SolverStatus::Unknown(why) | SolverStatus::Error(why) => {
                    stats.unknown += 1;
                    inconclusive.get_or_insert_with(|| format!("{} path {i}: solver: {why}", basis.name()));
                }
            }
        }
        for (i, r) in results.iter().enumerate() {
            let Some(r) = r else { continue };
            if r.status != SolverStatus::Sat {
                continue;
            }
            match replay(&setup, &run, i, &r.model, opts) {
                Ok(cex) => {
                    stats.wall_ms = start.elapsed().as_millis();
                    return Ok(Verdict {
                        schema_version: SCHEMA_VERSION,
                        status: Status::NotFaultTolerant,
                        reason: None,
                        counterexample: Some(cex),
                        stats,
                        diagnostics,
                    });
                }
                Err(msg) => {
                    let m = format!("internal: model of {} path {i} does not replay: {msg}", basis.name());
                    diagnostics.push(m.clone());
                    inconclusive.get_or_insert(m);
                    break;
                }
            }
        }
        if inconclusive.is_some() {
            break;
        }
    }
    stats.wall_ms = start.elapsed().as_millis();
    let status = if inconclusive.is_some() { Status::Inconclusive } else { Status::FaultTolerant };
    Ok(Verdict {
        schema_version: SCHEMA_VERSION,
        status,
        reason: inconclusive,
        counterexample: None,
        stats,
        diagnostics,
    })
}

fn symbolic_run(
    setup: &Setup,
    basis: Basis,
    opts: &VerifyOptions,
    nested: &NestedChecker,
    diagnostics: &mut Vec<String>,
) -> Result<BasisRun, VerifyError> {
    let prog = setup.prog;
    let n = setup.n();
    let mut pool = ExprPool::new();
    let (input0, logical) = setup.symbolic_input(&mut pool, basis)?;
    let mut input = input0.clone();
    let mut input_syms: Vec<Atom> = logical.iter().map(|e| e.atoms()[0]).collect();
    let mut init = Config::new(input.clone(), 0);
    if basis != Basis::Zero {
        let (counters, syms) = inject_input_errors(&mut input, &mut pool, &prog.blocks)?;
        input_syms.extend(syms);
        init = Config::new(input.clone(), prog.blocks.len());
        init.f_in = counters;
    }

    // Ideal reference and the block-local generators it induces.
    let (ideal, ideal_sym, prep_ideal) = match setup.kind {
        GadgetKind::Measure => (SymIdeal::Outcome(logical[0].clone()), None, None),
        kind => {
            let (state, prep) = if kind == GadgetKind::Prep {
                let t = setup.fault_free_output(Tableau::new(n))?;
                let stabs = t.stabilizers();
                let phases = stabs.iter().map(|s| Expr::constant(s.sign())).collect();
                let st = SymTableau::from_generators(stabs.iter().map(PauliOp::unsigned).collect(), phases)?;
                (st, Some(t))
            } else {
                let mut st = input0.clone();
                if kind == GadgetKind::Gate {
                    apply_ideal(&mut st, &prog.ideal)?;
                }
                (st, None)
            };
            let per_block = setup.data_basis(state.gens())?;
            let mut blocks = Vec::new();
            for (bi, full) in per_block.into_iter().enumerate() {
                let q = &prog.blocks[bi];
                let local: Vec<PauliOp> = full.iter().map(|g| g.restrict(q)).collect();
                let destabs = synthesize_destabilizers(&local, q.len())
                    .ok_or_else(|| VerifyError::Setup("dependent block generators".into()))?;
                let h = full.iter().map(|g| state.phase_of(g).expect("generator of the ideal group")).collect();
                blocks.push(SymBlock { full, local, destabs, h });
            }
            (SymIdeal::State { blocks }, Some(state), prep)
        }
    };

    let terminals = {
        let mut engine = Engine::new(
            prog,
            &setup.oracles,
            &mut pool,
            EngineOptions { faults: opts.mode == Mode::Ft, path_cap: opts.path_cap },
        )
        .with_nested_check(Box::new(|p: &Program, st: &Stmt| nested.check(p, st)));
        let mut terms = engine.run(init)?;
        diagnostics.append(&mut engine.diagnostics);
        // Canonical order: by branch fingerprint.
        terms.sort_by(|a, b| a.branches.cmp(&b.branches));
        terms
    };

    let mut queries = Vec::with_capacity(terminals.len());
    for cfg in &terminals {
        let (q, mismatch) = query_for(setup, cfg, opts.mode, opts.t, &ideal)?;
        let script = emit_smtlib(&pool, &q, opts.encoding);
        queries.push((script.text, mismatch));
    }
    Ok(BasisRun { basis, pool, input, input_syms, ideal_sym, prep_ideal, terminals, queries })
}

/// Replays the model of path `i` concretely and confirms the violation.
fn replay(
    setup: &Setup,
    run: &BasisRun,
    i: usize,
    model: &BTreeMap<String, bool>,
    opts: &VerifyOptions,
) -> Result<Counterexample, String> {
    let pool = &run.pool;
    let cfg = &run.terminals[i];
    let mut a = Assignment::new();
    let mut driver = ReplayDriver { faults: HashMap::new(), outcomes: HashMap::new(), decoder: HashMap::new() };
    let mut logical = Vec::new();
    let mut input_err: BTreeMap<usize, (bool, bool)> = BTreeMap::new();
    for &atom in run.input_syms.iter().chain(cfg.symbols().iter()) {
        let sym = pool.symbol(atom).ok_or("trace refers to a non-symbol atom")?;
        let v = model.get(&sym.name).copied().unwrap_or(false);
        a.set(atom, v);
        let o = sym.origin;
        match sym.kind {
            SymbolKind::LogicalPhase => logical.push(v),
            SymbolKind::InputErrorX => input_err.entry(o.qubit as usize).or_default().0 = v,
            SymbolKind::InputErrorZ => input_err.entry(o.qubit as usize).or_default().1 = v,
            SymbolKind::FaultX => driver.faults.entry((o.stmt, o.qubit as usize, o.slot)).or_default().0 = v,
            SymbolKind::FaultZ => driver.faults.entry((o.stmt, o.qubit as usize, o.slot)).or_default().1 = v,
            SymbolKind::Outcome => {
                driver.outcomes.insert((o.stmt, o.qubit as usize), v);
            }
            SymbolKind::DecoderOutput => {
                driver.decoder.entry(o.stmt).or_default().insert(o.slot, v);
            }
        }
    }
    let input = run.input.concretize(pool, &a).map_err(|e| e.to_string())?;
    let ideal = match (setup.kind, &run.ideal_sym) {
        (GadgetKind::Measure, _) => ConcIdeal::Outcome(logical.first().copied().unwrap_or(false)),
        (GadgetKind::Prep, _) => ConcIdeal::State(run.prep_ideal.clone().unwrap()),
        (_, Some(s)) => ConcIdeal::State(s.concretize(pool, &a).map_err(|e| e.to_string())?),
        (_, None) => unreachable!(),
    };
    let basis = match &ideal {
        ConcIdeal::State(t) => setup.data_basis(&t.stabilizers()).map_err(|e| e.to_string())?,
        ConcIdeal::Outcome(_) => Vec::new(),
    };
    let out = Machine::new(setup.prog, &setup.oracles).run(input, &mut driver).map_err(|e| e.to_string())?;
    let mut counts = vec![0usize; setup.prog.blocks.len()];
    let mut input_errors = Vec::new();
    for (bi, b) in setup.prog.blocks.iter().enumerate() {
        for &q in b {
            let (x, z) = input_err.get(&q).copied().unwrap_or_default();
            if x || z {
                counts[bi] += 1;
                input_errors.push(InputErrorRecord {
                    block: bi,
                    qubit: q,
                    pauli: Pauli1::from_bits(x, z).as_char().to_string(),
                });
            }
        }
    }
    let j = setup.judge(opts.mode, opts.t, &ideal, &basis, &out, &counts);
    if !j.budget_ok {
        return Err(format!("replayed run exceeds the fault budget ({} faults)", out.faults.len()));
    }
    let Some(violation) = j.violation else {
        return Err("replayed run satisfies the gadget condition".into());
    };
    let decoder_outputs = driver
        .decoder
        .iter()
        .map(|(s, bits)| (format!("stmt{s}"), bits.values().map(|&b| if b { '1' } else { '0' }).collect()))
        .collect();
    Ok(Counterexample {
        basis: run.basis,
        path: cfg.branches.clone(),
        logical_phases: logical,
        faults: setup.fault_records(&out.faults),
        input_error_count: counts.iter().sum(),
        input_errors,
        outcomes: out.random_outcomes.iter().map(|(s, q, b)| (format!("stmt{s}.q{q}"), *b)).collect(),
        decoder_outputs,
        exec_faults: out.faults.len(),
        output_errors: j.output_errors,
        violated_condition: violation,
        replay_ok: true,
    })
}

#[derive(Clone, Debug)]
pub struct BruteOptions {
    pub t: usize,
    pub mode: Mode,
    pub bases: BasisChoice,
    /// Stop with an inconclusive verdict after this many concrete runs.
    pub max_runs: usize,
}

impl BruteOptions {
    pub fn new(t: usize) -> Self {
        BruteOptions { t, mode: Mode::Ft, bases: BasisChoice::Both, max_runs: 5_000_000 }
    }
}

/// Exhaustive check: every logical input, every input-error pattern and
/// every execution-fault placement within the budget, every random
/// outcome. Loops are followed for at most `t + 2` iterations; a failed
/// iteration needs a fault, so longer runs exceed the budget anyway.
pub fn brute_force(prog: &Program, opts: &BruteOptions) -> Result<Verdict, VerifyError> {
    let start = Instant::now();
    let setup = Setup::new(prog)?;
    let machine = Machine::new(prog, &setup.oracles);
    let t = opts.t;
    let mut stats = Stats::default();
    for basis in setup.bases(opts.bases) {
        stats.bases.push(basis);
        let mut pool = ExprPool::new();
        let (sym_input, logical) = setup.symbolic_input(&mut pool, basis)?;
        for bits in 0u64..(1u64 << logical.len()) {
            let mut a = Assignment::new();
            let phase_bits: Vec<bool> = (0..logical.len()).map(|i| bits >> i & 1 == 1).collect();
            for (e, &b) in logical.iter().zip(&phase_bits) {
                a.set(e.atoms()[0], b);
            }
            let input = sym_input.concretize(&pool, &a).map_err(|e| VerifyError::Setup(e.to_string()))?;
            let ideal = setup.concrete_ideal(&input, &phase_bits)?;
            let basis_gens = match &ideal {
                ConcIdeal::State(s) => setup.data_basis(&s.stabilizers())?,
                ConcIdeal::Outcome(_) => Vec::new(),
            };
            let mut tree = ChoiceTree::default();
            loop {
                stats.runs += 1;
                if stats.runs > opts.max_runs {
                    stats.wall_ms = start.elapsed().as_millis();
                    return Ok(Verdict {
                        schema_version: SCHEMA_VERSION,
                        status: Status::Inconclusive,
                        reason: Some(format!("more than {} concrete runs", opts.max_runs)),
                        counterexample: None,
                        stats,
                        diagnostics: Vec::new(),
                    });
                }
                let mut state = input.clone();
                let mut used = 0;
                let mut counts = vec![0usize; prog.blocks.len()];
                let mut input_errors = Vec::new();
                if basis != Basis::Zero {
                    for (bi, b) in prog.blocks.iter().enumerate() {
                        for &q in b {
                            if used >= t {
                                break;
                            }
                            let c = tree.choose(4);
                            if c > 0 {
                                let p = [Pauli1::I, Pauli1::X, Pauli1::Y, Pauli1::Z][c as usize];
                                state.apply_pauli(&PauliOp::single(setup.n(), q, p));
                                used += 1;
                                counts[bi] += 1;
                                input_errors.push(InputErrorRecord {
                                    block: bi,
                                    qubit: q,
                                    pauli: p.as_char().to_string(),
                                });
                            }
                        }
                    }
                }
                let budget = if opts.mode == Mode::Ideal { used } else { t };
                let mut d = EnumDriver { tree: &mut tree, budget, used, max_iterations: t + 2 };
                match machine.run(state, &mut d) {
                    Ok(out) => {
                        let j = setup.judge(opts.mode, t, &ideal, &basis_gens, &out, &counts);
                        if let (true, Some(v)) = (j.budget_ok, j.violation) {
                            stats.wall_ms = start.elapsed().as_millis();
                            let cex = Counterexample {
                                basis,
                                path: Vec::new(),
                                logical_phases: phase_bits.clone(),
                                faults: setup.fault_records(&out.faults),
                                input_error_count: counts.iter().sum(),
                                input_errors,
                                outcomes: out
                                    .random_outcomes
                                    .iter()
                                    .map(|(s, q, b)| (format!("stmt{s}.q{q}"), *b))
                                    .collect(),
                                decoder_outputs: BTreeMap::new(),
                                exec_faults: out.faults.len(),
                                output_errors: j.output_errors,
                                violated_condition: v,
                                replay_ok: true,
                            };
                            return Ok(Verdict {
                                schema_version: SCHEMA_VERSION,
                                status: Status::NotFaultTolerant,
                                reason: None,
                                counterexample: Some(cex),
                                stats,
                                diagnostics: Vec::new(),
                            });
                        }
                    }
                    Err(RunError::Abandoned(_)) | Err(RunError::LoopCap { .. }) => tree.prune_here(),
                    Err(e) => return Err(e.into()),
                }
                if !tree.advance() {
                    break;
                }
            }
        }
    }
    stats.wall_ms = start.elapsed().as_millis();
    Ok(Verdict {
        schema_version: SCHEMA_VERSION,
        status: Status::FaultTolerant,
        reason: None,
        counterexample: None,
        stats,
        diagnostics: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::parse;

    fn cat4(a: usize, b: usize) -> Program {
        parse(&format!(
            "qubits 5\nblock q0-q3\nkind prep\nrepeat @memoryless {{\n  init q0; init q1; init q2; init q3\n  h q0\n  cnot q0 q1\n  cnot q0 q2\n  cnot q0 q3\n  init q4\n  cnot q{a} q4\n  cnot q{b} q4\n  c := measure q4\n}} until (c == 0)\n"
        ))
        .unwrap()
    }

    fn opts(t: usize) -> Option<VerifyOptions> {
        let s = SolverConfig::resolve(None, std::time::Duration::from_secs(60));
        s.is_available().then(|| VerifyOptions::new(t, s))
    }

    #[test]
    fn cat4_verdicts() {
        let Some(o) = opts(1) else { return };
        let good = verify(&cat4(2, 3), &o).unwrap();
        assert_eq!(good.status, Status::FaultTolerant, "{good:?}");
        let bad = verify(&cat4(1, 2), &o).unwrap();
        assert_eq!(bad.status, Status::NotFaultTolerant, "{bad:?}");
        let c = bad.counterexample.unwrap();
        assert_eq!(c.exec_faults, 1);
        assert_eq!(c.output_errors, vec![Some(2)]);
    }

    #[test]
    fn cat4_brute_force() {
        assert_eq!(brute_force(&cat4(2, 3), &BruteOptions::new(1)).unwrap().status, Status::FaultTolerant);
        let v = brute_force(&cat4(1, 2), &BruteOptions::new(1)).unwrap();
        assert_eq!(v.status, Status::NotFaultTolerant);
        assert_eq!(v.counterexample.unwrap().output_errors, vec![Some(2)]);
    }
}
