//! Bit-packed vectors and matrices over GF(2).
//!
//! Bits are stored in 64-bit words, little-endian inside a word: bit `i`
//! lives in word `i / 64` at position `i % 64`.

use std::fmt;

use serde::{Deserialize, Serialize};

const WORD: usize = 64;

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// A fixed-length vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec { len, words: vec![0; words_for(len)] }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Parses a string of `0`/`1` characters; anything else is ignored.
    pub fn from_bitstr(s: &str) -> Self {
        let bits: Vec<bool> = s.chars().filter(|c| *c == '0' || *c == '1').map(|c| c == '1').collect();
        BitVec::from_bools(&bits)
    }

    /// The vector with exactly one set bit.
    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = BitVec::zeros(len);
        v.set(i, true);
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, b: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % WORD);
        if b {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitVec) -> BitVec {
        let mut r = self.clone();
        r.xor_assign(other);
        r
    }

    pub fn and(&self, other: &BitVec) -> BitVec {
        debug_assert_eq!(self.len, other.len);
        BitVec { len: self.len, words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect() }
    }

    pub fn or(&self, other: &BitVec) -> BitVec {
        debug_assert_eq!(self.len, other.len);
        BitVec { len: self.len, words: self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect() }
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &BitVec) -> bool {
        debug_assert_eq!(self.len, other.len);
        let mut acc = 0u32;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= (a & b).count_ones();
        }
        acc & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn first_one(&self) -> Option<usize> {
        for (wi, w) in self.words.iter().enumerate() {
            if *w != 0 {
                return Some(wi * WORD + w.trailing_zeros() as usize);
            }
        }
        None
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * WORD + b)
                }
            })
        })
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    /// Sub-vector of bits `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> BitVec {
        let mut r = BitVec::zeros(len);
        for i in self.iter_ones() {
            if i >= start && i < start + len {
                r.set(i - start, true);
            }
        }
        r
    }

    /// Concatenation `self ‖ other`.
    pub fn concat(&self, other: &BitVec) -> BitVec {
        let mut r = BitVec::zeros(self.len + other.len);
        for i in self.iter_ones() {
            r.set(i, true);
        }
        for i in other.iter_ones() {
            r.set(self.len + i, true);
        }
        r
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

/// Dense matrix over GF(2), stored as packed rows.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GF2Matrix {
    rows: usize,
    cols: usize,
    data: Vec<BitVec>,
}

/// Result of Gaussian elimination.
#[derive(Clone, Debug)]
pub struct Rref {
    pub matrix: GF2Matrix,
    pub rank: usize,
    pub pivots: Vec<usize>,
}

impl GF2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        GF2Matrix { rows, cols, data: vec![BitVec::zeros(cols); rows] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = GF2Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from rows of equal length. An empty list gives a 0×`cols` matrix.
    pub fn from_rows(rows: Vec<BitVec>, cols: usize) -> Self {
        assert!(rows.iter().all(|r| r.len() == cols), "row length mismatch");
        GF2Matrix { rows: rows.len(), cols, data: rows }
    }

    /// Parses rows of `0`/`1` strings; convenient in tests.
    pub fn from_strs(rows: &[&str]) -> Self {
        let data: Vec<BitVec> = rows.iter().map(|r| BitVec::from_bitstr(r)).collect();
        let cols = data.first().map_or(0, |r| r.len());
        GF2Matrix::from_rows(data, cols)
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_cols(cols: &[BitVec], rows: usize) -> Self {
        let mut m = GF2Matrix::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows);
            for i in c.iter_ones() {
                m.set(i, j, true);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &BitVec {
        &self.data[i]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut BitVec {
        &mut self.data[i]
    }

    pub fn row_vecs(&self) -> &[BitVec] {
        &self.data
    }

    pub fn col(&self, j: usize) -> BitVec {
        let mut c = BitVec::zeros(self.rows);
        for i in 0..self.rows {
            if self.get(i, j) {
                c.set(i, true);
            }
        }
        c
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i].get(j)
    }

    pub fn set(&mut self, i: usize, j: usize, b: bool) {
        self.data[i].set(j, b)
    }

    pub fn push_row(&mut self, r: BitVec) {
        assert_eq!(r.len(), self.cols);
        self.data.push(r);
        self.rows += 1;
    }

    pub fn transpose(&self) -> GF2Matrix {
        let mut t = GF2Matrix::zeros(self.cols, self.rows);
        for (i, r) in self.data.iter().enumerate() {
            for j in r.iter_ones() {
                t.set(j, i, true);
            }
        }
        t
    }

    /// `M · v`.
    pub fn mul_vec(&self, v: &BitVec) -> BitVec {
        assert_eq!(v.len(), self.cols);
        let mut out = BitVec::zeros(self.rows);
        for (i, r) in self.data.iter().enumerate() {
            if r.dot(v) {
                out.set(i, true);
            }
        }
        out
    }

    /// `M · N`.
    pub fn mul(&self, other: &GF2Matrix) -> GF2Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = GF2Matrix::zeros(self.rows, other.cols);
        for (i, r) in self.data.iter().enumerate() {
            for k in r.iter_ones() {
                out.data[i].xor_assign(&other.data[k]);
            }
        }
        out
    }

    /// Reduced row-echelon form; the row space is preserved.
    pub fn rref(&self) -> Rref {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| m.data[i].get(c)) else {
                continue;
            };
            m.data.swap(r, p);
            let pivot_row = m.data[r].clone();
            for i in 0..self.rows {
                if i != r && m.data[i].get(c) {
                    m.data[i].xor_assign(&pivot_row);
                }
            }
            pivots.push(c);
            r += 1;
        }
        Rref { matrix: m, rank: r, pivots }
    }

    pub fn rank(&self) -> usize {
        self.rref().rank
    }

    /// Basis of `ker M`, returned as the columns of a `cols × dim` matrix.
    pub fn nullspace(&self) -> GF2Matrix {
        let basis = self.nullspace_vectors();
        GF2Matrix::from_cols(&basis, self.cols)
    }

    /// Basis of `ker M` as a list of vectors.
    pub fn nullspace_vectors(&self) -> Vec<BitVec> {
        let Rref { matrix, rank, pivots } = self.rref();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let mut basis = Vec::new();
        for free in (0..self.cols).filter(|c| !is_pivot[*c]) {
            let mut v = BitVec::zeros(self.cols);
            v.set(free, true);
            for (i, &p) in pivots.iter().enumerate().take(rank) {
                if matrix.get(i, free) {
                    v.set(p, true);
                }
            }
            basis.push(v);
        }
        basis
    }

    /// A particular solution `p` of `M · p = b`, or `None` if the system is inconsistent.
    pub fn solve(&self, b: &BitVec) -> Option<BitVec> {
        assert_eq!(b.len(), self.rows);
        // Eliminate on the augmented matrix [M | b].
        let mut aug: Vec<BitVec> = self
            .data
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut a = BitVec::zeros(self.cols + 1);
                for j in r.iter_ones() {
                    a.set(j, true);
                }
                a.set(self.cols, b.get(i));
                a
            })
            .collect();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| aug[i].get(c)) else {
                continue;
            };
            aug.swap(r, p);
            let pivot_row = aug[r].clone();
            for (i, row) in aug.iter_mut().enumerate() {
                if i != r && row.get(c) {
                    row.xor_assign(&pivot_row);
                }
            }
            pivots.push(c);
            r += 1;
        }
        if aug[r..].iter().any(|row| row.get(self.cols)) {
            return None;
        }
        let mut p = BitVec::zeros(self.cols);
        for (i, &c) in pivots.iter().enumerate() {
            if aug[i].get(self.cols) {
                p.set(c, true);
            }
        }
        Some(p)
    }
}

impl fmt::Debug for GF2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "GF2Matrix {}x{} [", self.rows, self.cols)?;
        for r in &self.data {
            writeln!(f, "  {r}")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rref_identity_and_duplicates() {
        let id = GF2Matrix::identity(5);
        let r = id.rref();
        assert_eq!(r.rank, 5);
        assert_eq!(r.matrix, id);

        let m = GF2Matrix::from_strs(&["11", "11"]);
        let r = m.rref();
        assert_eq!(r.rank, 1);
        assert_eq!(r.matrix, GF2Matrix::from_strs(&["11", "00"]));
    }

    #[test]
    fn nullspace_small() {
        assert_eq!(GF2Matrix::identity(4).nullspace_vectors().len(), 0);
        let basis = GF2Matrix::from_strs(&["11"]).nullspace_vectors();
        assert_eq!(basis, vec![BitVec::from_bitstr("11")]);
    }

    #[test]
    fn solve_cases() {
        let m = GF2Matrix::from_strs(&["11"]);
        let p = m.solve(&BitVec::from_bitstr("1")).unwrap();
        assert_eq!(m.mul_vec(&p), BitVec::from_bitstr("1"));
        assert!(m.solve(&BitVec::from_bitstr("0")).unwrap().is_zero());

        let m = GF2Matrix::from_strs(&["10", "10"]);
        assert!(m.solve(&BitVec::from_bitstr("10")).is_none());
    }

    #[test]
    fn bit_order_is_little_endian_in_words() {
        let mut v = BitVec::zeros(70);
        v.set(0, true);
        v.set(65, true);
        assert_eq!(v.words(), &[1u64, 2u64]);
        assert_eq!(v.iter_ones().collect::<Vec<_>>(), vec![0, 65]);
    }
}
