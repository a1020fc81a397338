//! Hand-written lexer and recursive-descent parser for `.cqp` text.

use thiserror::Error;

use super::{well_formed, CExpr, Cmp, GadgetKind, LoopClass, OracleDecl, OracleKind, Program, Stmt, StmtKind, VarRef};
use crate::gate::Gate;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(String),
    Punct(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: u32,
    col: u32,
}

const PUNCT: [&str; 23] = [
    ":=", "==", "!=", ">=", "<=", "->", "(", ")", "{", "}", "[", "]", ",", ";", "!", "&", "|", "^", ">", "<", "-", "@",
    "=",
];

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
            out.push(Token { tok: Tok::Ident(s), line: start.0, col: start.1 });
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
            out.push(Token { tok: Tok::Int(s), line: start.0, col: start.1 });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let p = PUNCT.iter().find(|p| rest.starts_with(**p));
        match p {
            Some(p) => {
                i += p.len();
                col += p.len() as u32;
                out.push(Token { tok: Tok::Punct(p), line: start.0, col: start.1 });
            }
            None => {
                return Err(ParseError { line, col, msg: format!("unexpected character {c:?}") });
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    qubits: Option<usize>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> (u32, u32) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let (line, col) = self.here();
        Err(ParseError { line, col, msg: msg.into() })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(q) if q == s)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.err(format!("expected `{p}`, found {}", describe(self.peek())))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            t => self.err(format!("expected identifier, found {}", describe(&t))),
        }
    }

    fn int(&mut self) -> PResult<u64> {
        match self.peek().clone() {
            Tok::Int(s) => match s.parse() {
                Ok(v) => {
                    self.bump();
                    Ok(v)
                }
                Err(_) => self.err("integer out of range"),
            },
            t => self.err(format!("expected integer, found {}", describe(&t))),
        }
    }

    fn qubit(&mut self) -> PResult<usize> {
        let (line, col) = self.here();
        let name = self.ident()?;
        let q = name
            .strip_prefix('q')
            .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|d| d.parse::<usize>().ok());
        match q {
            Some(q) => {
                if let Some(n) = self.qubits {
                    if q >= n {
                        return Err(ParseError { line, col, msg: format!("undeclared qubit q{q} (program has {n})") });
                    }
                }
                Ok(q)
            }
            None => Err(ParseError { line, col, msg: format!("expected qubit like `q3`, found `{name}`") }),
        }
    }

    fn varref(&mut self) -> PResult<VarRef> {
        let name = self.ident()?;
        let index = if self.eat_punct("[") {
            let i = self.int()?;
            self.expect_punct("]")?;
            Some(i as u32)
        } else {
            None
        };
        Ok(VarRef { name, index })
    }

    fn skip_separators(&mut self) {
        while self.eat_punct(";") {}
    }

    fn program(&mut self) -> PResult<Program> {
        let mut p = Program::default();
        self.skip_separators();
        if !self.is_ident("qubits") {
            return self.err("program must start with `qubits N`");
        }
        self.bump();
        p.qubits = self.int()? as usize;
        self.qubits = Some(p.qubits);
        loop {
            self.skip_separators();
            let Tok::Ident(word) = self.peek().clone() else { break };
            // A header word followed by `:=` or `[` is a variable instead.
            if matches!(self.peek_at(1), Tok::Punct(":=") | Tok::Punct("[")) {
                break;
            }
            match word.as_str() {
                "block" => {
                    self.bump();
                    p.blocks.push(self.block_list()?);
                }
                "kind" => {
                    self.bump();
                    let k = self.ident()?;
                    p.kind = Some(match GadgetKind::from_name(&k) {
                        Some(k) => k,
                        None => return self.err(format!("unknown gadget kind `{k}`")),
                    });
                }
                "code" => {
                    self.bump();
                    p.code = Some(self.ident()?);
                }
                "result" => {
                    self.bump();
                    p.result = Some(self.varref()?);
                }
                "oracle" => {
                    self.bump();
                    p.oracles.push(self.oracle_decl()?);
                }
                "ideal" => {
                    self.bump();
                    p.ideal = self.block()?;
                    for s in &p.ideal {
                        if !matches!(s.kind, StmtKind::Gate(..)) {
                            return Err(ParseError {
                                line: s.line,
                                col: s.col,
                                msg: "ideal block may only contain gates".into(),
                            });
                        }
                    }
                }
                _ => break,
            }
        }
        p.body = self.stmts()?;
        if self.peek() != &Tok::Eof {
            return self.err(format!("unexpected {}", describe(self.peek())));
        }
        p.renumber();
        if let Err(v) = well_formed(&p) {
            return Err(ParseError { line: v.line, col: v.col, msg: v.msg });
        }
        Ok(p)
    }

    fn block_list(&mut self) -> PResult<Vec<usize>> {
        let mut qs = Vec::new();
        loop {
            let a = self.qubit()?;
            if self.eat_punct("-") {
                let b = self.qubit()?;
                if b < a {
                    return self.err("empty qubit range");
                }
                qs.extend(a..=b);
            } else {
                qs.push(a);
            }
            if !matches!(self.peek(), Tok::Ident(s) if is_qubit_name(s)) {
                break;
            }
        }
        Ok(qs)
    }

    fn oracle_decl(&mut self) -> PResult<OracleDecl> {
        let name = self.ident()?;
        self.expect_punct("=")?;
        let kind_word = self.ident()?;
        self.expect_punct("(")?;
        let kind = match kind_word.as_str() {
            "decoder" => {
                let code = self.ident()?;
                let t = if self.eat_punct(",") { Some(self.int()? as u32) } else { None };
                self.expect_punct(")")?;
                OracleKind::Decoder { code, t }
            }
            "majority" => {
                let k = self.int()? as u32;
                self.expect_punct(")")?;
                OracleKind::Majority { k }
            }
            "table" => {
                let inputs = self.int()? as u32;
                self.expect_punct(",")?;
                let outputs = self.int()? as u32;
                self.expect_punct(")")?;
                if inputs > 16 || outputs > 64 {
                    return self.err("table oracle too large");
                }
                let mut rows = vec![None; 1usize << inputs];
                self.expect_punct("{")?;
                while !self.eat_punct("}") {
                    let a = self.bits(inputs)?;
                    self.expect_punct("->")?;
                    let b = self.bits(outputs)?;
                    if rows[a as usize].replace(b).is_some() {
                        return self.err("duplicate table row");
                    }
                    self.eat_punct(",");
                    self.skip_separators();
                }
                let mut out = Vec::with_capacity(rows.len());
                for r in rows {
                    match r {
                        Some(v) => out.push(v),
                        None => return self.err("table oracle must list every input row"),
                    }
                }
                OracleKind::Table { inputs, outputs, rows: out }
            }
            other => return self.err(format!("unknown oracle kind `{other}`")),
        };
        Ok(OracleDecl { name, kind })
    }

    fn bits(&mut self, width: u32) -> PResult<u64> {
        match self.peek().clone() {
            Tok::Int(s) if s.len() == width as usize && s.bytes().all(|b| b == b'0' || b == b'1') => {
                self.bump();
                Ok(s.bytes().fold(0u64, |acc, b| (acc << 1) | (b - b'0') as u64))
            }
            t => self.err(format!("expected {width} bits, found {}", describe(&t))),
        }
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_punct("{")?;
        let body = self.stmts()?;
        self.expect_punct("}")?;
        Ok(body)
    }

    fn stmts(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = Vec::new();
        loop {
            self.skip_separators();
            if matches!(self.peek(), Tok::Eof | Tok::Punct("}")) {
                return Ok(out);
            }
            out.push(self.stmt()?);
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let (line, col) = self.here();
        let kind = self.stmt_kind()?;
        Ok(Stmt { id: 0, line, col, kind })
    }

    fn stmt_kind(&mut self) -> PResult<StmtKind> {
        let word = match self.peek().clone() {
            Tok::Ident(w) => w,
            t => return self.err(format!("expected statement, found {}", describe(&t))),
        };
        if matches!(self.peek_at(1), Tok::Punct(":=") | Tok::Punct("[")) {
            let v = self.varref()?;
            self.expect_punct(":=")?;
            if self.is_ident("measure") {
                self.bump();
                let q = self.qubit()?;
                return Ok(StmtKind::Measure(v, q));
            }
            if self.is_ident("oracle") {
                self.bump();
                let name = self.ident()?;
                self.expect_punct("(")?;
                let mut args = Vec::new();
                if !self.eat_punct(")") {
                    loop {
                        args.push(self.expr()?);
                        if self.eat_punct(")") {
                            break;
                        }
                        self.expect_punct(",")?;
                    }
                }
                return Ok(StmtKind::Oracle { out: v, name, args });
            }
            let e = self.expr()?;
            return Ok(StmtKind::Assign(v, e));
        }
        match word.as_str() {
            "init" => {
                self.bump();
                Ok(StmtKind::Init(self.qubit()?))
            }
            "if" => {
                self.bump();
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                let then_body = self.block()?;
                let else_body = if self.is_ident("else") {
                    self.bump();
                    self.block()?
                } else {
                    Vec::new()
                };
                Ok(StmtKind::If { cond, then_body, else_body })
            }
            "repeat" => {
                self.bump();
                if !self.eat_punct("@") {
                    return self.err("repeat needs a loop class annotation (@memoryless or @conservative)");
                }
                let class = match self.ident()?.as_str() {
                    "memoryless" => LoopClass::Memoryless,
                    "conservative" => LoopClass::Conservative,
                    other => return self.err(format!("unknown loop class `{other}`")),
                };
                let body = self.block()?;
                if !self.is_ident("until") {
                    return self.err("expected `until` after repeat body");
                }
                self.bump();
                self.expect_punct("(")?;
                let until = self.expr()?;
                self.expect_punct(")")?;
                Ok(StmtKind::Repeat { body, until, class })
            }
            _ => {
                let gate: Gate = match word.parse() {
                    Ok(g) => g,
                    Err(_) => return self.err(format!("unknown statement `{word}`")),
                };
                self.bump();
                let mut qs = Vec::with_capacity(gate.arity());
                for _ in 0..gate.arity() {
                    qs.push(self.qubit()?);
                }
                Ok(StmtKind::Gate(gate, qs))
            }
        }
    }

    fn expr(&mut self) -> PResult<CExpr> {
        self.nary("|", Self::and_expr, CExpr::Or)
    }

    fn and_expr(&mut self) -> PResult<CExpr> {
        self.nary("&", Self::xor_expr, CExpr::And)
    }

    fn xor_expr(&mut self) -> PResult<CExpr> {
        self.nary("^", Self::cmp_expr, CExpr::Xor)
    }

    fn nary(
        &mut self,
        op: &str,
        next: fn(&mut Self) -> PResult<CExpr>,
        build: fn(Vec<CExpr>) -> CExpr,
    ) -> PResult<CExpr> {
        let first = next(self)?;
        if !self.is_punct(op) {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_punct(op) {
            items.push(next(self)?);
        }
        Ok(build(items))
    }

    fn cmp_expr(&mut self) -> PResult<CExpr> {
        let a = self.unary()?;
        if self.eat_punct("==") {
            let b = self.unary()?;
            return Ok(CExpr::Eq(Box::new(a), Box::new(b)));
        }
        if self.eat_punct("!=") {
            let b = self.unary()?;
            return Ok(CExpr::Ne(Box::new(a), Box::new(b)));
        }
        Ok(a)
    }

    fn unary(&mut self) -> PResult<CExpr> {
        if self.eat_punct("!") {
            return Ok(CExpr::Not(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<CExpr> {
        match self.peek().clone() {
            Tok::Int(s) => match s.as_str() {
                "0" => {
                    self.bump();
                    Ok(CExpr::Const(false))
                }
                "1" => {
                    self.bump();
                    Ok(CExpr::Const(true))
                }
                _ => self.err(format!("only 0 and 1 are Boolean constants, found {s}")),
            },
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "sum" && matches!(self.peek_at(1), Tok::Punct("(")) => {
                self.bump();
                self.bump();
                let mut terms = Vec::new();
                if !self.eat_punct(")") {
                    loop {
                        terms.push(self.expr()?);
                        if self.eat_punct(")") {
                            break;
                        }
                        self.expect_punct(",")?;
                    }
                }
                let cmp = match self.bump() {
                    Tok::Punct(">=") => Cmp::Ge,
                    Tok::Punct(">") => Cmp::Gt,
                    Tok::Punct("<=") => Cmp::Le,
                    Tok::Punct("<") => Cmp::Lt,
                    Tok::Punct("==") => Cmp::Eq,
                    Tok::Punct("!=") => Cmp::Ne,
                    t => return self.err(format!("expected comparison after sum(...), found {}", describe(&t))),
                };
                let k = self.int()? as u32;
                Ok(CExpr::Count { terms, cmp, k })
            }
            Tok::Ident(_) => Ok(CExpr::Var(self.varref()?)),
            t => self.err(format!("expected expression, found {}", describe(&t))),
        }
    }
}

fn is_qubit_name(s: &str) -> bool {
    s.strip_prefix('q').is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(s) => format!("`{s}`"),
        Tok::Punct(p) => format!("`{p}`"),
        Tok::Eof => "end of input".into(),
    }
}

/// Parses `.cqp` text and runs the well-formedness checks.
pub fn parse(src: &str) -> Result<Program, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, qubits: None };
    p.program()
}
