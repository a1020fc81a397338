//! Concrete n-qubit Pauli operators in the binary symplectic representation.
//!
//! A Pauli is a pair of bit vectors `(x, z)` plus a sign bit. The local
//! encoding is `(0,0)=I`, `(1,0)=X`, `(1,1)=Y`, `(0,1)=Z`, with `Y` the
//! Hermitian operator `iXZ`. Phases `±i` are never tracked: products of
//! commuting operators get the exact sign, products of anticommuting
//! operators are only defined up to a global phase.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2::{BitVec, GF2Matrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PauliError {
    #[error("qubit count mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid Pauli character {0:?} at position {1}")]
    BadChar(char, usize),
    #[error("qubit index {0} out of range for {1} qubits")]
    OutOfRange(usize, usize),
}

/// One tensor factor of a Pauli string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli1 {
    I,
    X,
    Y,
    Z,
}

impl Pauli1 {
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli1::I,
            (true, false) => Pauli1::X,
            (true, true) => Pauli1::Y,
            (false, true) => Pauli1::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli1::I => (false, false),
            Pauli1::X => (true, false),
            Pauli1::Y => (true, true),
            Pauli1::Z => (false, true),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli1::I => 'I',
            Pauli1::X => 'X',
            Pauli1::Y => 'Y',
            Pauli1::Z => 'Z',
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PauliOp {
    n: usize,
    x: BitVec,
    z: BitVec,
    sign: bool,
}

/// Exponent of `i` (mod 4) picked up by the product of two unsigned Paulis,
/// summed word by word.
pub(crate) fn product_phase(x1: &[u64], z1: &[u64], x2: &[u64], z2: &[u64]) -> u32 {
    let mut plus = 0u32;
    let mut minus = 0u32;
    for i in 0..x1.len() {
        let (a, b, c, d) = (x1[i], z1[i], x2[i], z2[i]);
        let y1 = a & b;
        let xo1 = a & !b;
        let zo1 = !a & b;
        let y2 = c & d;
        let xo2 = c & !d;
        let zo2 = !c & d;
        plus += ((y1 & zo2) | (xo1 & y2) | (zo1 & xo2)).count_ones();
        minus += ((y1 & xo2) | (xo1 & zo2) | (zo1 & y2)).count_ones();
    }
    (plus as i64 - minus as i64).rem_euclid(4) as u32
}

impl PauliOp {
    pub fn identity(n: usize) -> Self {
        PauliOp { n, x: BitVec::zeros(n), z: BitVec::zeros(n), sign: false }
    }

    pub fn from_parts(x: BitVec, z: BitVec, sign: bool) -> Self {
        assert_eq!(x.len(), z.len());
        PauliOp { n: x.len(), x, z, sign }
    }

    /// Single-qubit Pauli `p` acting on qubit `q` (0-based).
    pub fn single(n: usize, q: usize, p: Pauli1) -> Self {
        let mut op = PauliOp::identity(n);
        op.set(q, p);
        op
    }

    /// Tensor product of `p` on each listed qubit.
    pub fn on(n: usize, qubits: &[usize], p: Pauli1) -> Self {
        let mut op = PauliOp::identity(n);
        for &q in qubits {
            op.set(q, p);
        }
        op
    }

    /// Builds from the length-2n vector `[x1..xn, z1..zn]`.
    pub fn from_vec(v: &BitVec) -> Self {
        assert!(v.len().is_multiple_of(2));
        let n = v.len() / 2;
        PauliOp { n, x: v.slice(0, n), z: v.slice(n, n), sign: false }
    }

    /// The vector `[x1..xn, z1..zn]` (sign dropped).
    pub fn to_vec(&self) -> BitVec {
        self.x.concat(&self.z)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x(&self) -> &BitVec {
        &self.x
    }

    pub fn z(&self) -> &BitVec {
        &self.z
    }

    pub fn sign(&self) -> bool {
        self.sign
    }

    pub fn set_sign(&mut self, s: bool) {
        self.sign = s;
    }

    pub fn with_sign(mut self, s: bool) -> Self {
        self.sign = s;
        self
    }

    pub fn unsigned(&self) -> PauliOp {
        PauliOp { sign: false, ..self.clone() }
    }

    pub fn get(&self, q: usize) -> Pauli1 {
        Pauli1::from_bits(self.x.get(q), self.z.get(q))
    }

    pub fn set(&mut self, q: usize, p: Pauli1) {
        let (x, z) = p.bits();
        self.x.set(q, x);
        self.z.set(q, z);
    }

    pub fn x_bit(&self, q: usize) -> bool {
        self.x.get(q)
    }

    pub fn z_bit(&self, q: usize) -> bool {
        self.z.get(q)
    }

    pub fn is_identity(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    /// Number of qubits acted on non-trivially.
    pub fn weight(&self) -> usize {
        self.x.or(&self.z).count_ones()
    }

    /// Support (qubits with a non-identity factor), ascending.
    pub fn support(&self) -> Vec<usize> {
        self.x.or(&self.z).iter_ones().collect()
    }

    /// Symplectic product: `true` iff the operators anticommute.
    pub fn symplectic(&self, other: &PauliOp) -> Result<bool, PauliError> {
        self.check_dim(other)?;
        Ok(self.anticommutes_unchecked(other))
    }

    /// `true` iff the operators commute.
    pub fn commutes(&self, other: &PauliOp) -> Result<bool, PauliError> {
        Ok(!self.symplectic(other)?)
    }

    #[inline]
    pub(crate) fn anticommutes_unchecked(&self, other: &PauliOp) -> bool {
        self.x.dot(&other.z) ^ self.z.dot(&other.x)
    }

    /// Group product `self · other`.
    pub fn mul(&self, other: &PauliOp) -> Result<PauliOp, PauliError> {
        self.check_dim(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &PauliOp) -> PauliOp {
        let mut r = self.clone();
        r.mul_assign_unchecked(other);
        r
    }

    /// `self ← self · other`.
    pub(crate) fn mul_assign_unchecked(&mut self, other: &PauliOp) {
        let e = product_phase(self.x.words(), self.z.words(), other.x.words(), other.z.words());
        self.sign ^= other.sign ^ (e & 2 == 2);
        self.x.xor_assign(&other.x);
        self.z.xor_assign(&other.z);
    }

    /// Restriction to the listed qubits, in the given order.
    pub fn restrict(&self, qubits: &[usize]) -> PauliOp {
        let mut r = PauliOp::identity(qubits.len());
        for (i, &q) in qubits.iter().enumerate() {
            r.set(i, self.get(q));
        }
        r.sign = self.sign;
        r
    }

    /// Embeds into `n` qubits, sending local qubit `i` to `qubits[i]`.
    pub fn embed(&self, n: usize, qubits: &[usize]) -> PauliOp {
        let mut r = PauliOp::identity(n);
        for (i, &q) in qubits.iter().enumerate() {
            r.set(q, self.get(i));
        }
        r.sign = self.sign;
        r
    }

    /// Tensor product `self ⊗ other`.
    pub fn tensor(&self, other: &PauliOp) -> PauliOp {
        PauliOp {
            n: self.n + other.n,
            x: self.x.concat(&other.x),
            z: self.z.concat(&other.z),
            sign: self.sign ^ other.sign,
        }
    }

    fn check_dim(&self, other: &PauliOp) -> Result<(), PauliError> {
        if self.n != other.n {
            Err(PauliError::DimensionMismatch(self.n, other.n))
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sign {
            f.write_str("-")?;
        }
        for q in 0..self.n {
            write!(f, "{}", self.get(q).as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliOp({self})")
    }
}

impl FromStr for PauliOp {
    type Err = PauliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (sign, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let mut op = PauliOp::identity(body.chars().count());
        for (i, c) in body.chars().enumerate() {
            let p = match c {
                'I' | '_' => Pauli1::I,
                'X' => Pauli1::X,
                'Y' => Pauli1::Y,
                'Z' => Pauli1::Z,
                other => return Err(PauliError::BadChar(other, i)),
            };
            op.set(i, p);
        }
        op.sign = sign;
        Ok(op)
    }
}

/// Stacks Paulis as the rows `[x | z]` of a matrix with `2n` columns.
/// `i·a·b` for anticommuting `a`, `b`, which is Hermitian; `None` when they
/// commute.
pub fn i_product(a: &PauliOp, b: &PauliOp) -> Result<Option<PauliOp>, PauliError> {
    if !a.symplectic(b)? {
        return Ok(None);
    }
    let e = product_phase(a.x.words(), a.z.words(), b.x.words(), b.z.words()) + 2 * (a.sign ^ b.sign) as u32 + 1;
    let mut r = PauliOp::from_parts(a.x.xor(&b.x), a.z.xor(&b.z), false);
    r.sign = e % 4 == 2;
    Ok(Some(r))
}

/// Every Pauli on `n` qubits supported inside `qubits` with weight at most
/// `max_w`, ordered by weight, then by support, then by letters (X < Y < Z).
pub fn low_weight_paulis(n: usize, qubits: &[usize], max_w: usize) -> Vec<PauliOp> {
    const LETTERS: [Pauli1; 3] = [Pauli1::X, Pauli1::Y, Pauli1::Z];
    let mut out = vec![PauliOp::identity(n)];
    for w in 1..=max_w.min(qubits.len()) {
        let mut idx: Vec<usize> = (0..w).collect();
        loop {
            for code in 0..3usize.pow(w as u32) {
                let mut p = PauliOp::identity(n);
                let mut c = code;
                for &i in idx.iter().rev() {
                    p.set(qubits[i], LETTERS[c % 3]);
                    c /= 3;
                }
                out.push(p);
            }
            // Next combination in lexicographic order.
            let mut k = w;
            while k > 0 && idx[k - 1] == qubits.len() - w + k - 1 {
                k -= 1;
            }
            if k == 0 {
                break;
            }
            idx[k - 1] += 1;
            for j in k..w {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    out
}

pub fn pauli_matrix(ops: &[PauliOp], n: usize) -> GF2Matrix {
    GF2Matrix::from_rows(ops.iter().map(|p| p.to_vec()).collect(), 2 * n)
}

/// Applies the symplectic form: `Λ (x, z) = (z, x)`.
pub fn lambda(v: &BitVec) -> BitVec {
    let n = v.len() / 2;
    v.slice(n, n).concat(&v.slice(0, n))
}

/// `MΛ` for a matrix of stacked Pauli rows.
pub fn times_lambda(m: &GF2Matrix) -> GF2Matrix {
    GF2Matrix::from_rows(m.row_vecs().iter().map(lambda).collect(), m.cols())
}

/// Syndrome of `e` with respect to stabilizer rows `g` (`GΛe`): bit `i` is set
/// iff row `i` anticommutes with `e`.
pub fn syndrome(g: &GF2Matrix, e: &PauliOp) -> Result<BitVec, PauliError> {
    if g.cols() != 2 * e.n() {
        return Err(PauliError::DimensionMismatch(g.cols() / 2, e.n()));
    }
    Ok(g.mul_vec(&lambda(&e.to_vec())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliOp {
        s.parse().unwrap()
    }

    #[test]
    fn weight_examples() {
        assert_eq!(p("III").weight(), 0);
        assert_eq!(p("XZY").weight(), 3);
        assert_eq!(p("XZY").to_vec(), BitVec::from_bitstr("101011"));
        assert_eq!(p("ZZIIIZI").weight(), 3);
    }

    #[test]
    fn commutation_examples() {
        assert!(!p("X").commutes(&p("Z")).unwrap());
        assert!(p("ZZZZIII").commutes(&p("XXXXIII")).unwrap());
        assert!(p("XZY").commutes(&p("XZY")).unwrap());
        assert!(p("X").commutes(&p("XX")).is_err());
    }

    #[test]
    fn single_qubit_products() {
        // XY = iZ, YX = -iZ, ZZ = I, XZ = -iY.
        assert_eq!(p("Z").mul(&p("Z")).unwrap(), p("I"));
        assert_eq!(p("X").mul(&p("Y")).unwrap().unsigned(), p("Z"));
        // commuting products: XX·YY = (XY)(XY) = (iZ)(iZ) = -ZZ
        assert_eq!(p("XX").mul(&p("YY")).unwrap(), p("-ZZ"));
        assert_eq!(p("XX").mul(&p("ZZ")).unwrap(), p("-YY"));
        assert_eq!(p("-XI").mul(&p("-IX")).unwrap(), p("XX"));
    }

    #[test]
    fn string_round_trip() {
        for s in ["IXYZ", "-ZZIIIZI", "Y"] {
            assert_eq!(p(s).to_string(), s);
        }
        assert!("XQ".parse::<PauliOp>().is_err());
    }

    #[test]
    fn color_code_syndromes() {
        let gens: Vec<PauliOp> =
            ["ZZZZIII", "XXXXIII", "IZZIZZI", "IXXIXXI", "IIZZZIZ", "IIXXXIX"].iter().map(|s| p(s)).collect();
        let g = pauli_matrix(&gens, 7);
        let s = syndrome(&g, &p("XIIIIII")).unwrap();
        assert_eq!(s, BitVec::from_bitstr("100000"));
        let s = syndrome(&g, &p("IIZIIII")).unwrap();
        assert_eq!(s, BitVec::from_bitstr("010101"));
    }
}
