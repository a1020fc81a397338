//! Symbolic stabilizer states.
//!
//! A [`SymTableau`] holds `n` unsigned, commuting, independent Pauli
//! generators, each with a Boolean phase expression `g_i`, so the state is
//! stabilized by `(−1)^{g_i} P_i`. Destabilizer rows are carried along so
//! that measurement needs no fresh elimination.

use serde::Serialize;
use thiserror::Error;

use crate::expr::{Assignment, Expr, ExprError, ExprPool, Origin, SymbolKind};
use crate::gate::Gate;
use crate::gf2::{BitVec, GF2Matrix};
use crate::pauli::{pauli_matrix, times_lambda, Pauli1, PauliOp};
use crate::stabilizer::Tableau;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableauError {
    #[error("expected {expected} generators, got {got}")]
    WrongCount { expected: usize, got: usize },
    #[error("generator {0} has the wrong qubit count")]
    Dimension(usize),
    #[error("generators {0} and {1} anticommute")]
    NonCommuting(usize, usize),
    #[error("generators are not independent")]
    Dependent,
    #[error("qubit {0} out of range")]
    OutOfRange(usize),
    #[error("gate {0} applied to repeated qubit {1}")]
    RepeatedQubit(Gate, usize),
    #[error("qubit {0} is still entangled with the kept qubits")]
    Entangled(usize),
}

/// Result of a symbolic measurement.
#[derive(Clone, Debug)]
pub struct Measurement {
    pub outcome: Expr,
    /// `true` when the outcome was random (probability 1/2 each way).
    pub random: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SymTableau {
    n: usize,
    #[serde(skip)]
    gens: Vec<PauliOp>,
    #[serde(skip)]
    phases: Vec<Expr>,
    #[serde(skip)]
    destab: Vec<PauliOp>,
}

/// Sign flip picked up by conjugating an unsigned Pauli through `gate`;
/// updates `p` in place.
pub(crate) fn conjugate(p: &mut PauliOp, gate: Gate, qs: &[usize]) -> bool {
    let a = qs[0];
    let (xa, za) = (p.x_bit(a), p.z_bit(a));
    match gate {
        Gate::H => {
            p.set(a, Pauli1::from_bits(za, xa));
            xa && za
        }
        Gate::S => {
            p.set(a, Pauli1::from_bits(xa, za ^ xa));
            xa && za
        }
        Gate::X => za,
        Gate::Z => xa,
        Gate::Y => xa ^ za,
        Gate::Cnot => {
            let b = qs[1];
            let (xb, zb) = (p.x_bit(b), p.z_bit(b));
            let flip = xa && zb && !(xb ^ za);
            p.set(b, Pauli1::from_bits(xb ^ xa, zb));
            p.set(a, Pauli1::from_bits(xa, za ^ zb));
            flip
        }
        Gate::Cz => {
            let b = qs[1];
            let (xb, zb) = (p.x_bit(b), p.z_bit(b));
            let flip = xa && xb && (za ^ zb);
            p.set(a, Pauli1::from_bits(xa, za ^ xb));
            p.set(b, Pauli1::from_bits(xb, zb ^ xa));
            flip
        }
    }
}

/// Destabilizers dual to `gens` under the symplectic form, made mutually
/// commuting. `gens` must be commuting and independent with `len = n`.
pub(crate) fn synthesize_destabilizers(gens: &[PauliOp], n: usize) -> Option<Vec<PauliOp>> {
    let ml = times_lambda(&pauli_matrix(gens, n));
    let mut ds: Vec<PauliOp> = Vec::with_capacity(gens.len());
    for i in 0..gens.len() {
        let d = ml.solve(&BitVec::unit(gens.len(), i))?;
        ds.push(PauliOp::from_vec(&d));
    }
    for i in 0..ds.len() {
        for j in 0..i {
            if ds[i].anticommutes_unchecked(&ds[j]) {
                let g = gens[j].unsigned();
                ds[i].mul_assign_unchecked(&g);
            }
        }
        ds[i].set_sign(false);
    }
    Some(ds)
}

impl SymTableau {
    /// Builds a tableau from `n` generators on `n` qubits. A generator's
    /// sign is folded into its phase expression.
    pub fn from_generators(gens: Vec<PauliOp>, phases: Vec<Expr>) -> Result<Self, TableauError> {
        let n = gens.first().map_or(0, |g| g.n());
        if gens.len() != n || phases.len() != n {
            return Err(TableauError::WrongCount { expected: n, got: gens.len().min(phases.len()) });
        }
        for (i, g) in gens.iter().enumerate() {
            if g.n() != n {
                return Err(TableauError::Dimension(i));
            }
        }
        for i in 0..n {
            for j in 0..i {
                if gens[i].anticommutes_unchecked(&gens[j]) {
                    return Err(TableauError::NonCommuting(j, i));
                }
            }
        }
        if pauli_matrix(&gens, n).rank() != n {
            return Err(TableauError::Dependent);
        }
        let phases: Vec<Expr> = gens.iter().zip(phases).map(|(g, p)| p.xor_const(g.sign())).collect();
        let gens: Vec<PauliOp> = gens.iter().map(|g| g.unsigned()).collect();
        let destab = synthesize_destabilizers(&gens, n).ok_or(TableauError::Dependent)?;
        Ok(SymTableau { n, gens, phases, destab })
    }

    /// `|0…0⟩` on `n` qubits.
    pub fn zero_state(n: usize) -> Self {
        SymTableau {
            n,
            gens: (0..n).map(|q| PauliOp::single(n, q, Pauli1::Z)).collect(),
            phases: vec![Expr::zero(); n],
            destab: (0..n).map(|q| PauliOp::single(n, q, Pauli1::X)).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gens(&self) -> &[PauliOp] {
        &self.gens
    }

    pub fn phases(&self) -> &[Expr] {
        &self.phases
    }

    pub fn destabilizers(&self) -> &[PauliOp] {
        &self.destab
    }

    /// Generator `i` with its phase.
    pub fn generator(&self, i: usize) -> (&PauliOp, &Expr) {
        (&self.gens[i], &self.phases[i])
    }

    pub fn set_phase(&mut self, i: usize, e: Expr) {
        self.phases[i] = e;
    }

    fn check_qubit(&self, q: usize) -> Result<(), TableauError> {
        if q >= self.n {
            Err(TableauError::OutOfRange(q))
        } else {
            Ok(())
        }
    }

    pub fn apply_gate(&mut self, gate: Gate, qs: &[usize]) -> Result<(), TableauError> {
        for &q in qs {
            self.check_qubit(q)?;
        }
        if qs.len() != gate.arity() {
            return Err(TableauError::WrongCount { expected: gate.arity(), got: qs.len() });
        }
        if gate.arity() == 2 && qs[0] == qs[1] {
            return Err(TableauError::RepeatedQubit(gate, qs[0]));
        }
        for i in 0..self.n {
            if conjugate(&mut self.gens[i], gate, qs) {
                self.phases[i] = self.phases[i].not();
            }
            conjugate(&mut self.destab[i], gate, qs);
        }
        Ok(())
    }

    /// `row[i] ← row[i] · row[p]` for generators, with phase bookkeeping.
    fn gen_rowmul(&mut self, i: usize, p: usize) {
        let gp = self.gens[p].clone();
        self.gens[i].mul_assign_unchecked(&gp);
        let flip = self.gens[i].sign();
        self.gens[i].set_sign(false);
        self.phases[i] = self.phases[i].xor(&self.phases[p]).xor_const(flip);
    }

    fn pivot_for(&self, q: usize) -> Option<usize> {
        (0..self.n).find(|&i| self.gens[i].x_bit(q))
    }

    /// Replaces the pivot row by `Z_q` with the given phase, re-choosing the
    /// other anticommuting generators (case 2 of measurement).
    fn collapse(&mut self, q: usize, p: usize, phase: Expr) {
        for i in 0..self.n {
            if i != p && self.gens[i].x_bit(q) {
                self.gen_rowmul(i, p);
            }
        }
        let gp = self.gens[p].clone();
        for j in 0..self.n {
            if j != p && self.destab[j].x_bit(q) {
                self.destab[j].mul_assign_unchecked(&gp);
                self.destab[j].set_sign(false);
            }
        }
        self.destab[p] = gp;
        self.gens[p] = PauliOp::single(self.n, q, Pauli1::Z);
        self.phases[p] = phase;
    }

    /// Phase of `Z_q` when it lies in the stabilizer group (case 1).
    fn z_phase(&self, q: usize) -> Expr {
        let mut acc = PauliOp::identity(self.n);
        let mut phase = Expr::zero();
        for i in 0..self.n {
            if self.destab[i].x_bit(q) {
                acc.mul_assign_unchecked(&self.gens[i]);
                phase = phase.xor(&self.phases[i]);
            }
        }
        debug_assert_eq!(acc.unsigned(), PauliOp::single(self.n, q, Pauli1::Z));
        phase.xor_const(acc.sign())
    }

    /// Measures qubit `q` in the computational basis. A random outcome gets
    /// a fresh symbol with the given origin.
    pub fn measure(&mut self, q: usize, pool: &mut ExprPool, origin: Origin) -> Result<Measurement, TableauError> {
        self.check_qubit(q)?;
        match self.pivot_for(q) {
            Some(p) => {
                let s = pool.fresh(SymbolKind::Outcome, origin);
                self.collapse(q, p, s.clone());
                Ok(Measurement { outcome: s, random: true })
            }
            None => Ok(Measurement { outcome: self.z_phase(q), random: false }),
        }
    }

    /// Resets qubit `q` to `|0⟩`.
    pub fn initialize(&mut self, q: usize) -> Result<(), TableauError> {
        self.check_qubit(q)?;
        match self.pivot_for(q) {
            Some(p) => self.collapse(q, p, Expr::zero()),
            None => {
                let r = self.z_phase(q);
                let xq = PauliOp::single(self.n, q, Pauli1::X);
                self.conditional_pauli(&xq, &r);
            }
        }
        Ok(())
    }

    /// Applies `P` when `c` holds: `g_i ← g_i ⊕ (c ∧ [P anticommutes with P_i])`.
    pub fn conditional_pauli(&mut self, p: &PauliOp, c: &Expr) {
        if c.is_const(false) {
            return;
        }
        for i in 0..self.n {
            if p.anticommutes_unchecked(&self.gens[i]) {
                self.phases[i] = self.phases[i].xor(c);
            }
        }
    }

    /// Applies a concrete Pauli.
    pub fn apply_pauli(&mut self, p: &PauliOp) {
        self.conditional_pauli(p, &Expr::one());
    }

    /// Injects a symbolic Pauli error on qubit `q`: fresh `e_X`, `e_Z`, and
    /// returns the flag `e_X ∨ e_Z` together with the two symbols. With a
    /// guard `c`, the error only acts (and only counts) when `c` holds.
    pub fn inject_error(
        &mut self,
        q: usize,
        pool: &mut ExprPool,
        origin: Origin,
        input: bool,
        guard: Option<&Expr>,
    ) -> Result<InjectedError, TableauError> {
        self.check_qubit(q)?;
        let (kx, kz) = if input {
            (SymbolKind::InputErrorX, SymbolKind::InputErrorZ)
        } else {
            (SymbolKind::FaultX, SymbolKind::FaultZ)
        };
        let ex = pool.fresh(kx, origin);
        let ez = pool.fresh(kz, origin);
        let (ax, az) = match guard {
            Some(c) => (pool.and(c, &ex), pool.and(c, &ez)),
            None => (ex.clone(), ez.clone()),
        };
        for i in 0..self.n {
            let g = &self.gens[i];
            if g.z_bit(q) {
                self.phases[i] = self.phases[i].xor(&ax);
            }
            if g.x_bit(q) {
                self.phases[i] = self.phases[i].xor(&az);
            }
        }
        let flag = pool.or(&ax, &az);
        Ok(InjectedError { flag, ex, ez })
    }

    /// Phase `g` such that `(−1)^g · P` is in the stabilizer group (the sign
    /// of `P` is taken into account), or `None` if `±P` is not in the group.
    pub fn phase_of(&self, p: &PauliOp) -> Option<Expr> {
        if p.n() != self.n {
            return None;
        }
        if self.gens.iter().any(|g| g.anticommutes_unchecked(p)) {
            return None;
        }
        let mut acc = PauliOp::identity(self.n);
        let mut phase = Expr::zero();
        for i in 0..self.n {
            if self.destab[i].anticommutes_unchecked(p) {
                acc.mul_assign_unchecked(&self.gens[i]);
                phase = phase.xor(&self.phases[i]);
            }
        }
        if acc.unsigned() != p.unsigned() {
            return None;
        }
        Some(phase.xor_const(acc.sign() ^ p.sign()))
    }

    /// Checks the structural invariants: commuting, independent generators
    /// with dual destabilizers.
    pub fn validate(&self) -> Result<(), TableauError> {
        for i in 0..self.n {
            for j in 0..self.n {
                if i < j && self.gens[i].anticommutes_unchecked(&self.gens[j]) {
                    return Err(TableauError::NonCommuting(i, j));
                }
                if self.destab[i].anticommutes_unchecked(&self.gens[j]) != (i == j) {
                    return Err(TableauError::Dependent);
                }
            }
        }
        if pauli_matrix(&self.gens, self.n).rank() != self.n {
            return Err(TableauError::Dependent);
        }
        Ok(())
    }

    /// Concrete tableau obtained by evaluating every phase under `a`.
    pub fn concretize(&self, pool: &ExprPool, a: &Assignment) -> Result<Tableau, ExprError> {
        let mut stabs = Vec::with_capacity(self.n);
        for (g, ph) in self.gens.iter().zip(&self.phases) {
            stabs.push(g.clone().with_sign(pool.eval(ph, a)?));
        }
        Ok(Tableau::from_rows(&stabs, &self.destab))
    }

    /// Matrix of unsigned generators, one `[x | z]` row each.
    pub fn generator_matrix(&self) -> GF2Matrix {
        pauli_matrix(&self.gens, self.n)
    }

    /// Maps every phase through `f`.
    pub fn map_phases(&mut self, mut f: impl FnMut(&Expr) -> Expr) {
        for p in self.phases.iter_mut() {
            *p = f(p);
        }
    }

    /// Reduced state on `keep`, assuming every other qubit has `Z` (up to
    /// sign) in the stabilizer group, as after a final measurement. The
    /// other qubits are reset first; their phases are discarded.
    pub fn restrict(&self, keep: &[usize]) -> Result<SymTableau, TableauError> {
        let mut t = self.clone();
        let mut is_kept = vec![false; self.n];
        for &q in keep {
            t.check_qubit(q)?;
            is_kept[q] = true;
        }
        for (q, &kept) in is_kept.iter().enumerate() {
            if !kept && t.pivot_for(q).is_some() {
                return Err(TableauError::Entangled(q));
            }
        }
        // Every row now has no X/Y on dropped qubits; Z factors there can be
        // removed by multiplying with Z_q, whose phase is forced to 0 by the
        // reset, and Z's on distinct qubits commute so no sign appears.
        for (q, &kept) in is_kept.iter().enumerate() {
            if !kept {
                t.initialize(q)?;
            }
        }
        let mut rows: Vec<(PauliOp, Expr)> = Vec::new();
        for i in 0..self.n {
            let r = t.gens[i].restrict(keep);
            rows.push((r, t.phases[i].clone()));
        }
        // Select an independent subset by elimination, carrying phases.
        let k = keep.len();
        let mut basis: Vec<(PauliOp, Expr)> = Vec::new();
        let mut pivots: Vec<usize> = Vec::new();
        for (mut p, mut ph) in rows {
            for (bi, &col) in pivots.iter().enumerate() {
                if p.to_vec().get(col) {
                    let (bp, bph) = &basis[bi];
                    p.mul_assign_unchecked(bp);
                    ph = ph.xor(bph).xor_const(p.sign());
                    p.set_sign(false);
                }
            }
            let v = p.to_vec();
            if let Some(col) = v.first_one() {
                for (bp, bph) in basis.iter_mut() {
                    if bp.to_vec().get(col) {
                        bp.mul_assign_unchecked(&p);
                        *bph = bph.xor(&ph).xor_const(bp.sign());
                        bp.set_sign(false);
                    }
                }
                basis.push((p, ph));
                pivots.push(col);
            }
        }
        if basis.len() != k {
            return Err(TableauError::Dependent);
        }
        let (gens, phases): (Vec<PauliOp>, Vec<Expr>) = basis.into_iter().unzip();
        SymTableau::from_generators(gens, phases)
    }
}

/// Symbols and flag produced by one error injection.
#[derive(Clone, Debug)]
pub struct InjectedError {
    pub flag: Expr,
    pub ex: Expr,
    pub ez: Expr,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliOp {
        s.parse().unwrap()
    }

    #[test]
    fn rejects_bad_generators() {
        assert_eq!(
            SymTableau::from_generators(vec![p("ZI"), p("ZI")], vec![Expr::zero(); 2]).unwrap_err(),
            TableauError::Dependent
        );
        assert!(matches!(
            SymTableau::from_generators(vec![p("XI"), p("ZI")], vec![Expr::zero(); 2]),
            Err(TableauError::NonCommuting(0, 1))
        ));
    }

    #[test]
    fn gates_on_single_qubit() {
        let mut pool = ExprPool::new();
        let g = pool.fresh(SymbolKind::LogicalPhase, Origin::new(0, 0, 0));
        let mut t = SymTableau::from_generators(vec![p("Z")], vec![g.clone()]).unwrap();
        t.apply_gate(Gate::X, &[0]).unwrap();
        assert_eq!(t.phases()[0], g.not());
        t.apply_gate(Gate::H, &[0]).unwrap();
        assert_eq!(t.gens()[0], p("X"));
    }

    #[test]
    fn cnot_spreads_x() {
        let mut t = SymTableau::from_generators(vec![p("XI"), p("IZ")], vec![Expr::zero(); 2]).unwrap();
        t.apply_gate(Gate::Cnot, &[0, 1]).unwrap();
        assert_eq!(t.gens(), &[p("XX"), p("ZZ")]);
        t.validate().unwrap();
    }

    #[test]
    fn measure_cases() {
        let mut pool = ExprPool::new();
        let s = pool.fresh(SymbolKind::LogicalPhase, Origin::new(0, 0, 0));
        let mut t = SymTableau::from_generators(vec![p("Z")], vec![s.clone()]).unwrap();
        let m = t.measure(0, &mut pool, Origin::new(1, 0, 0)).unwrap();
        assert!(!m.random);
        assert_eq!(m.outcome, s);

        let mut t = SymTableau::from_generators(vec![p("X")], vec![Expr::zero()]).unwrap();
        let m = t.measure(0, &mut pool, Origin::new(2, 0, 0)).unwrap();
        assert!(m.random);
        assert_eq!(t.gens()[0], p("Z"));
        assert_eq!(t.phases()[0], m.outcome);
        let again = t.measure(0, &mut pool, Origin::new(3, 0, 0)).unwrap();
        assert!(!again.random);
        assert_eq!(again.outcome, m.outcome);
    }

    #[test]
    fn initialize_bell_qubit() {
        let mut t = SymTableau::from_generators(vec![p("XX"), p("ZZ")], vec![Expr::zero(); 2]).unwrap();
        t.initialize(1).unwrap();
        assert_eq!(t.phase_of(&p("IZ")), Some(Expr::zero()));
        assert_eq!(t.phase_of(&p("ZI")), Some(Expr::zero()));
    }

    #[test]
    fn phase_of_products() {
        let mut pool = ExprPool::new();
        let a = pool.fresh(SymbolKind::LogicalPhase, Origin::new(0, 0, 0));
        let b = pool.fresh(SymbolKind::LogicalPhase, Origin::new(0, 1, 0));
        let t = SymTableau::from_generators(vec![p("XX"), p("ZZ")], vec![a.clone(), b.clone()]).unwrap();
        // XX·ZZ = -YY
        assert_eq!(t.phase_of(&p("YY")), Some(a.xor(&b).not()));
        assert_eq!(t.phase_of(&p("-YY")), Some(a.xor(&b)));
        assert_eq!(t.phase_of(&p("XI")), None);
    }

    #[test]
    fn restrict_drops_measured_qubit() {
        let mut pool = ExprPool::new();
        // Bell pair on qubits 0,1 plus a parity ancilla on qubit 2.
        let mut t = SymTableau::zero_state(3);
        t.apply_gate(Gate::H, &[0]).unwrap();
        t.apply_gate(Gate::Cnot, &[0, 1]).unwrap();
        t.apply_gate(Gate::Cnot, &[0, 2]).unwrap();
        t.apply_gate(Gate::Cnot, &[1, 2]).unwrap();
        let m = t.measure(2, &mut pool, Origin::new(0, 2, 0)).unwrap();
        assert!(m.outcome.is_const(false));
        let r = t.restrict(&[0, 1]).unwrap();
        assert_eq!(r.phase_of(&p("XX")), Some(Expr::zero()));
        assert_eq!(r.phase_of(&p("ZZ")), Some(Expr::zero()));
    }
}
