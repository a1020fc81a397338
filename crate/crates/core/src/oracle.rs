//! Resolved classical oracles: concrete evaluation for the interpreter and
//! symbolic behaviour (output expressions or a relational assertion) for
//! the engine.

use std::sync::Arc;

use thiserror::Error;

use crate::codes::{load_code, CodeError, LookupDecoder, StabilizerCode};
use crate::expr::{Expr, ExprPool};
use crate::gf2::BitVec;
use crate::program::{OracleDecl, OracleKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("oracle `{name}`: {source}")]
    Code { name: String, source: CodeError },
    #[error("oracle `{name}` expects {expected} arguments, got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("oracle `{0}` is not declared")]
    Undeclared(String),
}

#[derive(Clone, Debug)]
pub enum OracleSpec {
    /// Lookup decoder. Inputs are syndrome bits in generator order, outputs
    /// `2n` correction bits: X part, then Z part.
    Decoder {
        code: Arc<StabilizerCode>,
        t: usize,
        decoder: Arc<LookupDecoder>,
    },
    Majority {
        k: usize,
    },
    Table {
        inputs: usize,
        outputs: usize,
        rows: Vec<u64>,
    },
}

impl OracleSpec {
    pub fn resolve(decl: &OracleDecl) -> Result<Self, OracleError> {
        Ok(match &decl.kind {
            OracleKind::Decoder { code, t } => {
                let c = load_code(code).map_err(|source| OracleError::Code { name: decl.name.clone(), source })?;
                let t = t.map_or(c.t(), |t| t as usize);
                let decoder = Arc::new(LookupDecoder::new(&c, t));
                OracleSpec::Decoder { code: Arc::new(c), t, decoder }
            }
            OracleKind::Majority { k } => OracleSpec::Majority { k: *k as usize },
            OracleKind::Table { inputs, outputs, rows } => {
                OracleSpec::Table { inputs: *inputs as usize, outputs: *outputs as usize, rows: rows.clone() }
            }
        })
    }

    /// Required argument count; `None` for variadic oracles.
    pub fn arity(&self) -> Option<usize> {
        match self {
            OracleSpec::Decoder { code, .. } => Some(code.generators.len()),
            OracleSpec::Majority { .. } => None,
            OracleSpec::Table { inputs, .. } => Some(*inputs),
        }
    }

    pub fn outputs(&self) -> usize {
        match self {
            OracleSpec::Decoder { code, .. } => 2 * code.n,
            OracleSpec::Majority { .. } => 1,
            OracleSpec::Table { outputs, .. } => *outputs,
        }
    }

    pub fn check_arity(&self, name: &str, got: usize) -> Result<(), OracleError> {
        match self.arity() {
            Some(expected) if expected != got => Err(OracleError::Arity { name: name.to_string(), expected, got }),
            _ => Ok(()),
        }
    }

    /// Concrete evaluation.
    pub fn eval(&self, args: &[bool]) -> Vec<bool> {
        match self {
            OracleSpec::Decoder { decoder, .. } => decoder.decode_bits(&BitVec::from_bools(args)),
            OracleSpec::Majority { k } => vec![args.iter().filter(|&&b| b).count() >= *k],
            OracleSpec::Table { outputs, rows, .. } => {
                let word = table_row(rows, args);
                (0..*outputs).map(|j| word >> (outputs - 1 - j) & 1 == 1).collect()
            }
        }
    }

    /// Output expressions for functional oracles; `None` for the decoder,
    /// whose outputs are fresh symbols constrained by [`decoder_assertion`].
    pub fn symbolic(&self, pool: &mut ExprPool, args: &[Expr]) -> Option<Vec<Expr>> {
        match self {
            OracleSpec::Decoder { .. } => None,
            OracleSpec::Majority { k } => Some(vec![pool.at_least(args, *k)]),
            OracleSpec::Table { inputs, outputs, rows } => {
                let mut outs = vec![Vec::new(); *outputs];
                for (i, &word) in rows.iter().enumerate() {
                    let lits: Vec<Expr> = (0..*inputs)
                        .map(|a| {
                            let bit = i >> (inputs - 1 - a) & 1 == 1;
                            args[a].xor_const(!bit)
                        })
                        .collect();
                    let minterm = pool.and_all(lits);
                    for (j, o) in outs.iter_mut().enumerate() {
                        if word >> (outputs - 1 - j) & 1 == 1 {
                            o.push(minterm.clone());
                        }
                    }
                }
                Some(outs.into_iter().map(|o| pool.or_all(o)).collect())
            }
        }
    }
}

fn table_row(rows: &[u64], args: &[bool]) -> u64 {
    let idx = args.iter().fold(0usize, |acc, &b| acc << 1 | b as usize);
    rows[idx]
}

/// Behavioural contract of a decoder with threshold `t`: whenever the
/// syndrome `m` is produced by some Pauli of weight at most `t`, the output
/// `r` (X bits then Z bits) has weight at most `t` and reproduces `m`.
///
/// The antecedent is a disjunction over the precomputed set of weight-`t`
/// syndromes rather than a quantifier.
pub fn decoder_assertion(
    pool: &mut ExprPool,
    code: &StabilizerCode,
    decoder: &LookupDecoder,
    m: &[Expr],
    r: &[Expr],
) -> Expr {
    let n = code.n;
    assert_eq!(m.len(), code.generators.len());
    assert_eq!(r.len(), 2 * n);
    let mut cases = Vec::with_capacity(decoder.syndromes().len());
    for s in decoder.syndromes() {
        let lits: Vec<Expr> = m.iter().enumerate().map(|(i, mi)| mi.xor_const(!s.get(i))).collect();
        cases.push(pool.and_all(lits));
    }
    let antecedent = pool.or_all(cases);
    let per_qubit: Vec<Expr> = (0..n).map(|i| pool.or(&r[i], &r[n + i])).collect();
    let mut consequent = vec![pool.at_most(&per_qubit, decoder.t)];
    // Syndrome of r against generator g: Σ_i g.z_i·r_x,i ⊕ g.x_i·r_z,i.
    for (g, mi) in code.generators.iter().zip(m) {
        let mut acc = mi.clone();
        for i in 0..n {
            if g.z_bit(i) {
                acc = acc.xor(&r[i]);
            }
            if g.x_bit(i) {
                acc = acc.xor(&r[n + i]);
            }
        }
        consequent.push(acc.not());
    }
    let consequent = pool.and_all(consequent);
    pool.implies(&antecedent, &consequent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::builtin;
    use crate::expr::{Assignment, Origin, SymbolKind};
    use crate::program::OracleDecl;

    #[test]
    fn table_and_majority_agree_symbolically() {
        let spec = OracleSpec::Table { inputs: 2, outputs: 2, rows: vec![0b00, 0b01, 0b10, 0b11] };
        let maj = OracleSpec::Majority { k: 2 };
        let mut pool = ExprPool::new();
        let xs: Vec<Expr> = (0..3).map(|i| pool.fresh(SymbolKind::Outcome, Origin::new(0, i, 0))).collect();
        let outs = spec.symbolic(&mut pool, &xs[..2]).unwrap();
        let mo = maj.symbolic(&mut pool, &xs).unwrap();
        for bits in 0..8u32 {
            let vals: Vec<bool> = (0..3).map(|i| bits >> i & 1 == 1).collect();
            let mut a = Assignment::new();
            for (x, &v) in xs.iter().zip(&vals) {
                a.set(x.atoms()[0], v);
            }
            let conc = spec.eval(&vals[..2]);
            for j in 0..2 {
                assert_eq!(pool.eval(&outs[j], &a).unwrap(), conc[j]);
            }
            assert_eq!(pool.eval(&mo[0], &a).unwrap(), maj.eval(&vals)[0]);
        }
    }

    #[test]
    fn decoder_spec_dimensions() {
        let decl = OracleDecl { name: "dec".into(), kind: OracleKind::Decoder { code: "color_7_1_3".into(), t: None } };
        let spec = OracleSpec::resolve(&decl).unwrap();
        assert_eq!(spec.arity(), Some(6));
        assert_eq!(spec.outputs(), 14);
        let code = builtin("color_7_1_3").unwrap();
        let e: crate::pauli::PauliOp = "IIIZIII".parse().unwrap();
        let out = spec.eval(&code.syndrome(&e).to_bools());
        assert!(out[7 + 3] && out.iter().filter(|&&b| b).count() == 1);
    }
}
