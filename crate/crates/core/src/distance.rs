//! Pauli distance between stabilizer states that share an unsigned
//! stabilizer group.
//!
//! If two states differ only in the signs of generators `P_j` by the bits
//! `diff_j`, the Paulis mapping one to the other are exactly those `E`
//! with `E` anticommuting with `P_j` iff `diff_j = 1`. One such `E` is
//! `p = Σ diff_j·D_j` over the destabilizers; all others are `p ⊕ Nw` with
//! `N` the generator rows.

use std::collections::HashMap;

use crate::gf2::BitVec;
use crate::pauli::{low_weight_paulis, pauli_matrix, PauliOp};

/// Unsigned generators of the subgroup of `⟨gens⟩` supported on `qubits`.
pub fn local_subgroup(gens: &[PauliOp], n: usize, qubits: &[usize]) -> Vec<PauliOp> {
    let mut inside = vec![false; n];
    for &q in qubits {
        inside[q] = true;
    }
    let m = pauli_matrix(gens, n);
    let outside: Vec<usize> = (0..n).filter(|&q| !inside[q]).flat_map(|q| [q, n + q]).collect();
    if outside.is_empty() {
        return gens.iter().map(|g| g.unsigned()).collect();
    }
    // c·M vanishes on the outside columns ⇔ c ∈ ker(M_outᵀ).
    let cols: Vec<BitVec> = outside.iter().map(|&c| m.col(c)).collect();
    let m_out_t = crate::gf2::GF2Matrix::from_rows(cols, gens.len());
    m_out_t
        .nullspace_vectors()
        .into_iter()
        .map(|c| {
            let mut v = BitVec::zeros(2 * n);
            for j in c.iter_ones() {
                v.xor_assign(m.row(j));
            }
            PauliOp::from_vec(&v)
        })
        .collect()
}

/// Block-local generators of `⟨gens⟩`, or `None` if the state does not
/// factor over `blocks`.
pub fn block_local_basis(gens: &[PauliOp], n: usize, blocks: &[Vec<usize>]) -> Option<Vec<Vec<PauliOp>>> {
    let per: Vec<Vec<PauliOp>> = blocks.iter().map(|b| local_subgroup(gens, n, b)).collect();
    let total: usize = per.iter().map(Vec::len).sum();
    let want: usize = blocks.iter().map(Vec::len).sum();
    (total == want).then_some(per)
}

/// Minimum weight, over Paulis supported on `qubits`, for every syndrome
/// reachable with weight at most `max_w`.
#[derive(Clone, Debug)]
pub struct WeightTable {
    map: HashMap<BitVec, usize>,
    order: Vec<(BitVec, usize)>,
}

impl WeightTable {
    pub fn new(gens: &[PauliOp], n: usize, qubits: &[usize], max_w: usize) -> Self {
        let mut map = HashMap::new();
        let mut order = Vec::new();
        for e in low_weight_paulis(n, qubits, max_w) {
            let s = BitVec::from_bools(&gens.iter().map(|g| !g.commutes(&e).unwrap()).collect::<Vec<_>>());
            if let std::collections::hash_map::Entry::Vacant(v) = map.entry(s.clone()) {
                v.insert(e.weight());
                order.push((s, e.weight()));
            }
        }
        WeightTable { map, order }
    }

    pub fn min_weight(&self, syndrome: &BitVec) -> Option<usize> {
        self.map.get(syndrome).copied()
    }

    /// `(syndrome, minimum weight)` pairs in order of first discovery.
    pub fn entries(&self) -> &[(BitVec, usize)] {
        &self.order
    }
}

/// `p = Σ diff_j·D_j`: one Pauli with the prescribed commutation pattern.
pub fn particular_solution(destabs: &[PauliOp], diff: &BitVec, n: usize) -> PauliOp {
    let mut v = BitVec::zeros(2 * n);
    for j in diff.iter_ones() {
        v.xor_assign(&destabs[j].to_vec());
    }
    PauliOp::from_vec(&v)
}

/// `min_w wt(p ⊕ Nw)` by enumerating all `2^{|gens|}` choices of `w`.
pub fn min_distance_nullspace(gens: &[PauliOp], destabs: &[PauliOp], diff: &BitVec, n: usize) -> usize {
    let p = particular_solution(destabs, diff, n).to_vec();
    let rows: Vec<BitVec> = gens.iter().map(|g| g.to_vec()).collect();
    assert!(rows.len() < 32, "exhaustive distance needs fewer than 32 generators");
    let mut best = usize::MAX;
    // Gray-code walk so each step is a single row XOR.
    let mut cur = p;
    for i in 0u64..(1u64 << rows.len()) {
        if i > 0 {
            cur.xor_assign(&rows[i.trailing_zeros() as usize]);
        }
        best = best.min(PauliOp::from_vec(&cur).weight());
    }
    best
}
