//! Concrete stabilizer simulation in the Aaronson–Gottesman style.
//!
//! This is the reference semantics the symbolic tableau is checked against,
//! so it keeps its own row arithmetic rather than reusing [`crate::pauli`].
//! Rows `0..n` are destabilizers, rows `n..2n` stabilizers.

use crate::gate::Gate;
use crate::pauli::{Pauli1, PauliOp};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tableau {
    n: usize,
    x: Vec<Vec<bool>>,
    z: Vec<Vec<bool>>,
    r: Vec<bool>,
}

/// Exponent of `i` contributed by one qubit when multiplying Paulis.
fn g(x1: bool, z1: bool, x2: bool, z2: bool) -> i32 {
    match (x1, z1) {
        (false, false) => 0,
        (true, true) => z2 as i32 - x2 as i32,
        (true, false) => z2 as i32 * (2 * x2 as i32 - 1),
        (false, true) => x2 as i32 * (1 - 2 * z2 as i32),
    }
}

impl Tableau {
    /// `|0…0⟩`.
    pub fn new(n: usize) -> Self {
        let mut t =
            Tableau { n, x: vec![vec![false; n]; 2 * n], z: vec![vec![false; n]; 2 * n], r: vec![false; 2 * n] };
        for i in 0..n {
            t.x[i][i] = true;
            t.z[n + i][i] = true;
        }
        t
    }

    /// Builds from signed stabilizer generators and matching destabilizers.
    pub fn from_rows(stabs: &[PauliOp], destabs: &[PauliOp]) -> Self {
        let n = stabs.len();
        let mut t =
            Tableau { n, x: vec![vec![false; n]; 2 * n], z: vec![vec![false; n]; 2 * n], r: vec![false; 2 * n] };
        for i in 0..n {
            for q in 0..n {
                t.x[i][q] = destabs[i].x_bit(q);
                t.z[i][q] = destabs[i].z_bit(q);
                t.x[n + i][q] = stabs[i].x_bit(q);
                t.z[n + i][q] = stabs[i].z_bit(q);
            }
            t.r[n + i] = stabs[i].sign();
        }
        t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Signed stabilizer generators.
    pub fn stabilizers(&self) -> Vec<PauliOp> {
        (self.n..2 * self.n).map(|i| self.row_op(i)).collect()
    }

    fn row_op(&self, i: usize) -> PauliOp {
        let mut p = PauliOp::identity(self.n);
        for q in 0..self.n {
            p.set(q, Pauli1::from_bits(self.x[i][q], self.z[i][q]));
        }
        p.with_sign(self.r[i])
    }

    /// `row h ← row h · row i`.
    fn rowsum(&mut self, h: usize, i: usize) {
        let mut e = 2 * self.r[h] as i32 + 2 * self.r[i] as i32;
        for q in 0..self.n {
            e += g(self.x[i][q], self.z[i][q], self.x[h][q], self.z[h][q]);
        }
        self.r[h] = e.rem_euclid(4) == 2;
        for q in 0..self.n {
            self.x[h][q] ^= self.x[i][q];
            self.z[h][q] ^= self.z[i][q];
        }
    }

    pub fn h(&mut self, a: usize) {
        for i in 0..2 * self.n {
            self.r[i] ^= self.x[i][a] && self.z[i][a];
            std::mem::swap(&mut self.x[i][a], &mut self.z[i][a]);
        }
    }

    pub fn s(&mut self, a: usize) {
        for i in 0..2 * self.n {
            self.r[i] ^= self.x[i][a] && self.z[i][a];
            self.z[i][a] ^= self.x[i][a];
        }
    }

    pub fn cnot(&mut self, a: usize, b: usize) {
        for i in 0..2 * self.n {
            self.r[i] ^= self.x[i][a] && self.z[i][b] && (self.x[i][b] == self.z[i][a]);
            self.x[i][b] ^= self.x[i][a];
            self.z[i][a] ^= self.z[i][b];
        }
    }

    pub fn apply(&mut self, gate: Gate, qs: &[usize]) {
        match gate {
            Gate::H => self.h(qs[0]),
            Gate::S => self.s(qs[0]),
            Gate::X => self.pauli_flip(qs[0], true, false),
            Gate::Z => self.pauli_flip(qs[0], false, true),
            Gate::Y => self.pauli_flip(qs[0], true, true),
            Gate::Cnot => self.cnot(qs[0], qs[1]),
            Gate::Cz => {
                self.h(qs[1]);
                self.cnot(qs[0], qs[1]);
                self.h(qs[1]);
            }
        }
    }

    /// Applies `X^x Z^z` on qubit `a` (sign updates only).
    fn pauli_flip(&mut self, a: usize, x: bool, z: bool) {
        for i in 0..2 * self.n {
            self.r[i] ^= (x && self.z[i][a]) ^ (z && self.x[i][a]);
        }
    }

    pub fn apply_pauli(&mut self, p: &PauliOp) {
        for q in 0..self.n {
            if p.x_bit(q) || p.z_bit(q) {
                self.pauli_flip(q, p.x_bit(q), p.z_bit(q));
            }
        }
    }

    /// `true` if a Z measurement of `a` has a random outcome.
    pub fn is_random(&self, a: usize) -> bool {
        (self.n..2 * self.n).any(|i| self.x[i][a])
    }

    /// Measures qubit `a`. A random outcome takes the value `forced`.
    /// Returns `(outcome, was_random)`.
    pub fn measure(&mut self, a: usize, forced: bool) -> (bool, bool) {
        let n = self.n;
        if let Some(p) = (n..2 * n).find(|&i| self.x[i][a]) {
            for i in 0..2 * n {
                if i != p && self.x[i][a] {
                    self.rowsum(i, p);
                }
            }
            self.x[p - n] = self.x[p].clone();
            self.z[p - n] = self.z[p].clone();
            self.r[p - n] = self.r[p];
            self.x[p] = vec![false; n];
            self.z[p] = vec![false; n];
            self.z[p][a] = true;
            self.r[p] = forced;
            (forced, true)
        } else {
            // Accumulate into a scratch row.
            let mut sx = vec![false; n];
            let mut sz = vec![false; n];
            let mut e = 0i32;
            for i in 0..n {
                if self.x[i][a] {
                    let k = n + i;
                    e += 2 * self.r[k] as i32;
                    for q in 0..n {
                        e += g(self.x[k][q], self.z[k][q], sx[q], sz[q]);
                        sx[q] ^= self.x[k][q];
                        sz[q] ^= self.z[k][q];
                    }
                }
            }
            (e.rem_euclid(4) == 2, false)
        }
    }

    pub fn reset(&mut self, a: usize) {
        let (m, _) = self.measure(a, false);
        if m {
            self.pauli_flip(a, true, false);
        }
    }

    /// Sign `s` such that `(−1)^s · P` (with `P`'s own sign) stabilizes the
    /// state, or `None` if neither `±P` does.
    pub fn sign_of(&self, p: &PauliOp) -> Option<bool> {
        let n = self.n;
        let anti = |i: usize| {
            let mut c = false;
            for q in 0..n {
                c ^= (self.x[i][q] && p.z_bit(q)) ^ (self.z[i][q] && p.x_bit(q));
            }
            c
        };
        if (n..2 * n).any(anti) {
            return None;
        }
        let mut sx = vec![false; n];
        let mut sz = vec![false; n];
        let mut e = 0i32;
        for i in 0..n {
            if anti(i) {
                let k = n + i;
                e += 2 * self.r[k] as i32;
                for q in 0..n {
                    e += g(self.x[k][q], self.z[k][q], sx[q], sz[q]);
                    sx[q] ^= self.x[k][q];
                    sz[q] ^= self.z[k][q];
                }
            }
        }
        for q in 0..n {
            if sx[q] != p.x_bit(q) || sz[q] != p.z_bit(q) {
                return None;
            }
        }
        Some((e.rem_euclid(4) == 2) ^ p.sign())
    }

    /// Same stabilizer group with the same signs.
    pub fn same_state(&self, other: &Tableau) -> bool {
        self.n == other.n && other.stabilizers().iter().all(|s| self.sign_of(s) == Some(false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_pair_and_measurement() {
        let mut t = Tableau::new(2);
        t.h(0);
        t.cnot(0, 1);
        assert_eq!(t.sign_of(&"XX".parse().unwrap()), Some(false));
        assert_eq!(t.sign_of(&"YY".parse().unwrap()), Some(true));
        let (m, random) = t.measure(0, true);
        assert!(random && m);
        let (m2, random2) = t.measure(1, false);
        assert!(!random2 && m2);
    }

    #[test]
    fn reset_gives_zero() {
        let mut t = Tableau::new(1);
        t.h(0);
        t.reset(0);
        assert_eq!(t.sign_of(&"Z".parse().unwrap()), Some(false));
        let mut t = Tableau::new(1);
        t.apply(Gate::X, &[0]);
        t.reset(0);
        assert!(t.same_state(&Tableau::new(1)));
    }
}
