//! Stabilizer codes: built-in families, the `.stab` file format, and the
//! minimum-weight lookup decoder used as the concrete decoder oracle.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::gf2::{BitVec, GF2Matrix};
use crate::pauli::{low_weight_paulis, pauli_matrix, syndrome, times_lambda, Pauli1, PauliOp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("unknown code `{0}`")]
    Unknown(String),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("invalid code: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StabilizerCode {
    pub name: String,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub generators: Vec<PauliOp>,
    pub logical_z: Vec<PauliOp>,
    pub logical_x: Vec<PauliOp>,
}

pub const BUILTIN_CODES: [&str; 7] =
    ["color_7_1_3", "color_17_1_5", "rsc_9_1_3", "rsc_25_1_5", "toric_18_2_3", "toric_50_2_5", "rm_15_1_3"];

/// Codes whose gadgets are expensive enough to sit behind `--large`.
pub fn is_large(name: &str) -> bool {
    matches!(name, "color_17_1_5" | "rsc_25_1_5" | "toric_50_2_5")
}

fn paulis(n: usize, supports: &[&[usize]], p: Pauli1) -> Vec<PauliOp> {
    supports.iter().map(|s| PauliOp::on(n, s, p)).collect()
}

impl StabilizerCode {
    pub fn t(&self) -> usize {
        (self.d.saturating_sub(1)) / 2
    }

    /// Stabilizer matrix `G`, one `[x | z]` row per generator.
    pub fn generator_matrix(&self) -> GF2Matrix {
        pauli_matrix(&self.generators, self.n)
    }

    /// Syndrome of `e`: bit `i` is set when `e` anticommutes with generator `i`.
    pub fn syndrome(&self, e: &PauliOp) -> BitVec {
        let mut s = BitVec::zeros(self.generators.len());
        for (i, g) in self.generators.iter().enumerate() {
            s.set(i, !g.commutes(e).expect("dimension checked by caller"));
        }
        s
    }

    /// Checks commutation, independence and the logical-operator relations.
    pub fn validate(&self) -> Result<(), CodeError> {
        let bad = |m: String| Err(CodeError::Invalid(m));
        if self.generators.len() + self.k != self.n {
            return bad(format!("{} generators for n={}, k={}", self.generators.len(), self.n, self.k));
        }
        if self.logical_z.len() != self.k || self.logical_x.len() != self.k {
            return bad("need k logical Z and k logical X operators".into());
        }
        let all: Vec<&PauliOp> = self.generators.iter().chain(&self.logical_z).chain(&self.logical_x).collect();
        if all.iter().any(|p| p.n() != self.n) {
            return bad("operator on the wrong number of qubits".into());
        }
        for (i, a) in self.generators.iter().enumerate() {
            for b in &self.generators[..i] {
                if !a.commutes(b).unwrap() {
                    return bad(format!("generators {b} and {a} anticommute"));
                }
            }
            for l in self.logical_z.iter().chain(&self.logical_x) {
                if !a.commutes(l).unwrap() {
                    return bad(format!("logical {l} anticommutes with generator {a}"));
                }
            }
        }
        if self.generator_matrix().rank() != self.generators.len() {
            return bad("generators are dependent".into());
        }
        for i in 0..self.k {
            for j in 0..self.k {
                let zx = self.logical_z[i].commutes(&self.logical_x[j]).unwrap();
                if zx == (i == j) {
                    return bad(format!("logical Z{i} / X{j} have the wrong commutation"));
                }
                if !self.logical_z[i].commutes(&self.logical_z[j]).unwrap()
                    || !self.logical_x[i].commutes(&self.logical_x[j]).unwrap()
                {
                    return bad("logical operators of one type must commute".into());
                }
            }
        }
        let mut full: Vec<PauliOp> = self.generators.clone();
        full.extend(self.logical_z.iter().cloned());
        if pauli_matrix(&full, self.n).rank() != self.n {
            return bad("logical Z operators are not independent of the stabilizers".into());
        }
        Ok(())
    }

    fn is_css(&self) -> bool {
        self.generators.iter().all(|g| g.x().is_zero() || g.z().is_zero())
    }

    /// Weight of the lightest nontrivial logical operator, searching up to
    /// weight `limit`; `None` if none is found.
    pub fn min_logical_weight(&self, limit: usize) -> Option<usize> {
        let gm = self.generator_matrix();
        let stab_rank = gm.rank();
        let is_logical = |p: &PauliOp| {
            if self.generators.iter().any(|g| !g.commutes(p).unwrap()) {
                return false;
            }
            let mut m = gm.clone();
            m.push_row(p.to_vec());
            m.rank() > stab_rank
        };
        let all: Vec<usize> = (0..self.n).collect();
        if self.is_css() {
            // For CSS codes a lightest logical can be taken pure X or pure Z.
            for w in 1..=limit.min(self.n) {
                let mut found = false;
                for_each_subset(self.n, w, &mut |s| {
                    if !found
                        && (is_logical(&PauliOp::on(self.n, s, Pauli1::X))
                            || is_logical(&PauliOp::on(self.n, s, Pauli1::Z)))
                    {
                        found = true;
                    }
                });
                if found {
                    return Some(w);
                }
            }
            return None;
        }
        for w in 1..=limit.min(self.n) {
            for p in low_weight_paulis(self.n, &all, w) {
                if p.weight() == w && is_logical(&p) {
                    return Some(w);
                }
            }
        }
        None
    }

    /// Generators of the code state with all logical qubits in `|0̄⟩`
    /// (generators followed by the logical Z operators).
    pub fn zero_state_generators(&self) -> Vec<PauliOp> {
        let mut v = self.generators.clone();
        v.extend(self.logical_z.iter().cloned());
        v
    }

    /// Pure errors: `destab[i]` anticommutes with row `i` of `rows` and
    /// commutes with every other row.
    pub fn pure_errors(rows: &[PauliOp], n: usize) -> Option<Vec<PauliOp>> {
        let ml = times_lambda(&pauli_matrix(rows, n));
        (0..rows.len()).map(|i| ml.solve(&BitVec::unit(rows.len(), i)).map(|v| PauliOp::from_vec(&v))).collect()
    }
}

fn for_each_subset(n: usize, w: usize, f: &mut dyn FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..w).collect();
    loop {
        f(&idx);
        let mut k = w;
        while k > 0 && idx[k - 1] == n - w + k - 1 {
            k -= 1;
        }
        if k == 0 {
            return;
        }
        idx[k - 1] += 1;
        for j in k..w {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

impl fmt::Display for StabilizerCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [[{},{},{}]]", self.name, self.n, self.k, self.d)
    }
}

fn color_7_1_3() -> StabilizerCode {
    let n = 7;
    let mut generators = Vec::new();
    for s in [[0usize, 1, 2, 3], [1, 2, 4, 5], [2, 3, 4, 6]] {
        generators.push(PauliOp::on(n, &s, Pauli1::Z));
        generators.push(PauliOp::on(n, &s, Pauli1::X));
    }
    StabilizerCode {
        name: "color_7_1_3".into(),
        n,
        k: 1,
        d: 3,
        generators,
        logical_z: vec![PauliOp::on(n, &[0, 1, 5], Pauli1::Z)],
        logical_x: vec![PauliOp::on(n, &[0, 1, 5], Pauli1::X)],
    }
}

fn color_17_1_5() -> StabilizerCode {
    // Self-dual CSS layout with weight-4/8 checks and every qubit in at
    // most three checks; see the README for how it was obtained.
    let n = 17;
    let checks: [&[usize]; 8] = [
        &[0, 2, 6, 8],
        &[0, 2, 13, 14],
        &[0, 4, 7, 8, 10, 12, 14, 16],
        &[1, 4, 5, 10],
        &[1, 7, 10, 15],
        &[2, 8, 11, 14],
        &[3, 7, 12, 15],
        &[4, 5, 9, 16],
    ];
    let mut generators = Vec::new();
    for s in checks {
        generators.push(PauliOp::on(n, s, Pauli1::Z));
        generators.push(PauliOp::on(n, s, Pauli1::X));
    }
    let l = [0, 1, 2, 10, 11];
    StabilizerCode {
        name: "color_17_1_5".into(),
        n,
        k: 1,
        d: 5,
        generators,
        logical_z: vec![PauliOp::on(n, &l, Pauli1::Z)],
        logical_x: vec![PauliOp::on(n, &l, Pauli1::X)],
    }
}

/// Rotated surface code of odd distance `d` on a `d×d` grid, qubit
/// `(r, c)` at index `r·d + c`. Plaquette `(r, c)` is Z-type when `r + c`
/// is even; weight-2 X checks sit on the top and bottom edges, Z checks on
/// the left and right edges.
pub fn rotated_surface(d: usize) -> StabilizerCode {
    let n = d * d;
    let q = |r: usize, c: usize| r * d + c;
    let mut z_checks: Vec<Vec<usize>> = Vec::new();
    let mut x_checks: Vec<Vec<usize>> = Vec::new();
    for r in 0..d - 1 {
        for c in 0..d - 1 {
            let s = vec![q(r, c), q(r, c + 1), q(r + 1, c), q(r + 1, c + 1)];
            if (r + c) % 2 == 0 {
                z_checks.push(s);
            } else {
                x_checks.push(s);
            }
        }
    }
    for c in 0..d - 1 {
        if c % 2 == 0 {
            x_checks.push(vec![q(0, c), q(0, c + 1)]);
        }
        if (d - 2 + c).is_multiple_of(2) {
            x_checks.push(vec![q(d - 1, c), q(d - 1, c + 1)]);
        }
    }
    for r in 0..d - 1 {
        if r % 2 == 1 {
            z_checks.push(vec![q(r, 0), q(r + 1, 0)]);
        }
        if (r + d - 2) % 2 == 1 {
            z_checks.push(vec![q(r, d - 1), q(r + 1, d - 1)]);
        }
    }
    let mut generators: Vec<PauliOp> = z_checks.iter().map(|s| PauliOp::on(n, s, Pauli1::Z)).collect();
    generators.extend(x_checks.iter().map(|s| PauliOp::on(n, s, Pauli1::X)));
    let row0: Vec<usize> = (0..d).map(|c| q(0, c)).collect();
    let col0: Vec<usize> = (0..d).map(|r| q(r, 0)).collect();
    StabilizerCode {
        name: format!("rsc_{}_1_{}", n, d),
        n,
        k: 1,
        d,
        generators,
        logical_z: vec![PauliOp::on(n, &row0, Pauli1::Z)],
        logical_x: vec![PauliOp::on(n, &col0, Pauli1::X)],
    }
}

/// Toric code on an `l×l` torus. Horizontal edge `(r, c)` is qubit
/// `r·l + c`, vertical edge `(r, c)` is `l² + r·l + c`. One star and one
/// plaquette are dropped to make the generators independent.
pub fn toric(l: usize) -> StabilizerCode {
    let n = 2 * l * l;
    let h = |r: usize, c: usize| (r % l) * l + (c % l);
    let v = |r: usize, c: usize| l * l + (r % l) * l + (c % l);
    let mut generators = Vec::new();
    for r in 0..l {
        for c in 0..l {
            if r + 1 == l && c + 1 == l {
                continue;
            }
            generators.push(PauliOp::on(n, &[h(r, c), h(r, c + l - 1), v(r, c), v(r + l - 1, c)], Pauli1::X));
        }
    }
    for r in 0..l {
        for c in 0..l {
            if r + 1 == l && c + 1 == l {
                continue;
            }
            generators.push(PauliOp::on(n, &[h(r, c), h(r + 1, c), v(r, c), v(r, c + 1)], Pauli1::Z));
        }
    }
    let zs1: Vec<usize> = (0..l).map(|c| h(0, c)).collect();
    let xs1: Vec<usize> = (0..l).map(|r| h(r, 0)).collect();
    let zs2: Vec<usize> = (0..l).map(|r| v(r, 0)).collect();
    let xs2: Vec<usize> = (0..l).map(|c| v(0, c)).collect();
    StabilizerCode {
        name: format!("toric_{}_2_{}", n, l),
        n,
        k: 2,
        d: l,
        generators,
        logical_z: paulis(n, &[&zs1, &zs2], Pauli1::Z),
        logical_x: paulis(n, &[&xs1, &xs2], Pauli1::X),
    }
}

/// Quantum Reed–Muller code: qubit `j` (0-based) stands for the nonzero
/// 4-bit word `j + 1`. X checks are the four coordinate functions, Z checks
/// those four plus their six pairwise products.
fn rm_15_1_3() -> StabilizerCode {
    let n = 15;
    let coord = |i: usize| -> Vec<usize> { (0..n).filter(|j| (j + 1) >> i & 1 == 1).collect() };
    let mut generators = Vec::new();
    for i in 0..4 {
        generators.push(PauliOp::on(n, &coord(i), Pauli1::X));
    }
    for i in 0..4 {
        generators.push(PauliOp::on(n, &coord(i), Pauli1::Z));
    }
    for i in 0..4 {
        for j in i + 1..4 {
            let s: Vec<usize> = (0..n).filter(|q| (q + 1) >> i & 1 == 1 && (q + 1) >> j & 1 == 1).collect();
            generators.push(PauliOp::on(n, &s, Pauli1::Z));
        }
    }
    let all: Vec<usize> = (0..n).collect();
    StabilizerCode {
        name: "rm_15_1_3".into(),
        n,
        k: 1,
        d: 3,
        generators,
        logical_z: vec![PauliOp::on(n, &all, Pauli1::Z)],
        logical_x: vec![PauliOp::on(n, &all, Pauli1::X)],
    }
}

pub fn builtin(name: &str) -> Result<StabilizerCode, CodeError> {
    Ok(match name {
        "color_7_1_3" => color_7_1_3(),
        "color_17_1_5" => color_17_1_5(),
        "rsc_9_1_3" => rotated_surface(3),
        "rsc_25_1_5" => rotated_surface(5),
        "toric_18_2_3" => toric(3),
        "toric_50_2_5" => toric(5),
        "rm_15_1_3" => rm_15_1_3(),
        _ => return Err(CodeError::Unknown(name.to_string())),
    })
}

/// Parses the `.stab` format: a header line `n k d`, one generator per
/// line, then `Z: <pauli>` and `X: <pauli>` lines for the logicals. `#`
/// starts a comment.
pub fn parse_stab(name: &str, text: &str) -> Result<StabilizerCode, CodeError> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut generators = Vec::new();
    let (mut lz, mut lx) = (Vec::new(), Vec::new());
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| CodeError::Syntax { line: line_no, msg };
        match header {
            None => {
                let nums: Vec<usize> = line
                    .split_whitespace()
                    .map(|w| w.parse().map_err(|_| err(format!("bad header field `{w}`"))))
                    .collect::<Result<_, _>>()?;
                if nums.len() != 3 {
                    return Err(err("header must be `n k d`".into()));
                }
                header = Some((nums[0], nums[1], nums[2]));
            }
            Some((n, _, _)) => {
                let (target, body) = if let Some(r) = line.strip_prefix("Z:") {
                    (&mut lz, r.trim())
                } else if let Some(r) = line.strip_prefix("X:") {
                    (&mut lx, r.trim())
                } else {
                    (&mut generators, line)
                };
                let p: PauliOp = body.parse().map_err(|e| err(format!("{e}")))?;
                if p.n() != n {
                    return Err(err(format!("operator has {} qubits, expected {n}", p.n())));
                }
                target.push(p);
            }
        }
    }
    let (n, k, d) = header.ok_or(CodeError::Syntax { line: 1, msg: "missing header".into() })?;
    let code = StabilizerCode { name: name.to_string(), n, k, d, generators, logical_z: lz, logical_x: lx };
    code.validate()?;
    Ok(code)
}

pub fn to_stab(code: &StabilizerCode) -> String {
    let mut s = format!("{} {} {}\n", code.n, code.k, code.d);
    for g in &code.generators {
        s.push_str(&format!("{g}\n"));
    }
    for z in &code.logical_z {
        s.push_str(&format!("Z: {z}\n"));
    }
    for x in &code.logical_x {
        s.push_str(&format!("X: {x}\n"));
    }
    s
}

/// A built-in name, or a path to a `.stab` file.
pub fn load_code(name_or_path: &str) -> Result<StabilizerCode, CodeError> {
    if let Ok(c) = builtin(name_or_path) {
        return Ok(c);
    }
    let path = Path::new(name_or_path);
    if path.extension().is_some_and(|e| e == "stab") || path.exists() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CodeError::Io { path: name_or_path.to_string(), msg: e.to_string() })?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("custom");
        return parse_stab(name, &text);
    }
    Err(CodeError::Unknown(name_or_path.to_string()))
}

/// Minimum-weight lookup decoder over every Pauli of weight at most `t`.
#[derive(Clone, Debug)]
pub struct LookupDecoder {
    pub n: usize,
    pub t: usize,
    table: HashMap<BitVec, PauliOp>,
    /// Distinct syndromes in first-seen order.
    order: Vec<BitVec>,
}

impl LookupDecoder {
    pub fn new(code: &StabilizerCode, t: usize) -> Self {
        let all: Vec<usize> = (0..code.n).collect();
        let g = code.generator_matrix();
        let mut table = HashMap::new();
        let mut order = Vec::new();
        for p in low_weight_paulis(code.n, &all, t) {
            let s = syndrome(&g, &p).expect("same qubit count");
            if let std::collections::hash_map::Entry::Vacant(v) = table.entry(s.clone()) {
                v.insert(p);
                order.push(s);
            }
        }
        LookupDecoder { n: code.n, t, table, order }
    }

    /// Correction for syndrome `s`; identity when `s` is not reachable by a
    /// weight-`t` error.
    pub fn decode(&self, s: &BitVec) -> PauliOp {
        self.table.get(s).cloned().unwrap_or_else(|| PauliOp::identity(self.n))
    }

    /// The decoder output as `2n` bits: X part, then Z part.
    pub fn decode_bits(&self, s: &BitVec) -> Vec<bool> {
        let p = self.decode(s);
        let mut out = p.x().to_bools();
        out.extend(p.z().to_bools());
        out
    }

    /// Every syndrome of a Pauli of weight at most `t`.
    pub fn syndromes(&self) -> &[BitVec] {
        &self.order
    }

    pub fn contains(&self, s: &BitVec) -> bool {
        self.table.contains_key(s)
    }
}
