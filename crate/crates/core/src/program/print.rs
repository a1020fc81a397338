//! Canonical `.cqp` printer. `parse(print(p)) == p` for every well-formed
//! program.

use std::fmt::Write;

use super::{CExpr, OracleKind, Program, Stmt, StmtKind};

fn prec(e: &CExpr) -> u8 {
    match e {
        CExpr::Or(_) => 1,
        CExpr::And(_) => 2,
        CExpr::Xor(_) => 3,
        CExpr::Eq(..) | CExpr::Ne(..) => 4,
        CExpr::Not(_) => 5,
        CExpr::Const(_) | CExpr::Var(_) | CExpr::Count { .. } => 6,
    }
}

/// Prints `e`, parenthesized unless its precedence is at least `min`.
fn child(out: &mut String, e: &CExpr, min: u8) {
    if prec(e) >= min {
        write_expr(out, e);
    } else {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    }
}

fn write_expr(out: &mut String, e: &CExpr) {
    let nary = |out: &mut String, es: &[CExpr], op: &str, p: u8| {
        for (i, c) in es.iter().enumerate() {
            if i > 0 {
                let _ = write!(out, " {op} ");
            }
            // Same-precedence children need parentheses to stay nested.
            child(out, c, p + 1);
        }
    };
    match e {
        CExpr::Const(b) => out.push(if *b { '1' } else { '0' }),
        CExpr::Var(v) => {
            let _ = write!(out, "{v}");
        }
        CExpr::Not(c) => {
            out.push('!');
            child(out, c, 5);
        }
        CExpr::Or(es) => nary(out, es, "|", 1),
        CExpr::And(es) => nary(out, es, "&", 2),
        CExpr::Xor(es) => nary(out, es, "^", 3),
        CExpr::Eq(a, b) | CExpr::Ne(a, b) => {
            child(out, a, 5);
            out.push_str(if matches!(e, CExpr::Eq(..)) { " == " } else { " != " });
            child(out, b, 5);
        }
        CExpr::Count { terms, cmp, k } => {
            out.push_str("sum(");
            for (i, t) in terms.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, t);
            }
            let _ = write!(out, ") {} {k}", cmp.symbol());
        }
    }
}

pub(super) fn expr_to_string(e: &CExpr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

fn write_stmts(out: &mut String, stmts: &[Stmt], depth: usize) {
    for s in stmts {
        write_stmt(out, s, depth);
    }
}

fn write_stmt(out: &mut String, s: &Stmt, depth: usize) {
    let pad = "  ".repeat(depth);
    out.push_str(&pad);
    match &s.kind {
        StmtKind::Init(q) => {
            let _ = writeln!(out, "init q{q}");
        }
        StmtKind::Gate(g, qs) => {
            out.push_str(g.name());
            for q in qs {
                let _ = write!(out, " q{q}");
            }
            out.push('\n');
        }
        StmtKind::Measure(v, q) => {
            let _ = writeln!(out, "{v} := measure q{q}");
        }
        StmtKind::Assign(v, e) => {
            let _ = writeln!(out, "{v} := {}", expr_to_string(e));
        }
        StmtKind::Oracle { out: v, name, args } => {
            let args: Vec<String> = args.iter().map(expr_to_string).collect();
            let _ = writeln!(out, "{v} := oracle {name}({})", args.join(", "));
        }
        StmtKind::If { cond, then_body, else_body } => {
            let _ = writeln!(out, "if ({}) {{", expr_to_string(cond));
            write_stmts(out, then_body, depth + 1);
            if else_body.is_empty() {
                let _ = writeln!(out, "{pad}}}");
            } else {
                let _ = writeln!(out, "{pad}}} else {{");
                write_stmts(out, else_body, depth + 1);
                let _ = writeln!(out, "{pad}}}");
            }
        }
        StmtKind::Repeat { body, until, class } => {
            let _ = writeln!(out, "repeat @{} {{", class.name());
            write_stmts(out, body, depth + 1);
            let _ = writeln!(out, "{pad}}} until ({})", expr_to_string(until));
        }
    }
}

fn write_block(out: &mut String, qs: &[usize]) {
    out.push_str("block");
    let mut i = 0;
    while i < qs.len() {
        let mut j = i;
        while j + 1 < qs.len() && qs[j + 1] == qs[j] + 1 {
            j += 1;
        }
        if j > i {
            let _ = write!(out, " q{}-q{}", qs[i], qs[j]);
        } else {
            let _ = write!(out, " q{}", qs[i]);
        }
        i = j + 1;
    }
    out.push('\n');
}

pub(super) fn program_to_string(p: &Program) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "qubits {}", p.qubits);
    for b in &p.blocks {
        write_block(&mut out, b);
    }
    if let Some(k) = p.kind {
        let _ = writeln!(out, "kind {}", k.name());
    }
    if let Some(c) = &p.code {
        let _ = writeln!(out, "code {c}");
    }
    if let Some(r) = &p.result {
        let _ = writeln!(out, "result {r}");
    }
    for o in &p.oracles {
        let _ = write!(out, "oracle {} = ", o.name);
        match &o.kind {
            OracleKind::Decoder { code, t: None } => {
                let _ = writeln!(out, "decoder({code})");
            }
            OracleKind::Decoder { code, t: Some(t) } => {
                let _ = writeln!(out, "decoder({code}, {t})");
            }
            OracleKind::Majority { k } => {
                let _ = writeln!(out, "majority({k})");
            }
            OracleKind::Table { inputs, outputs, rows } => {
                let _ = writeln!(out, "table({inputs}, {outputs}) {{");
                for (i, r) in rows.iter().enumerate() {
                    let _ =
                        writeln!(out, "  {:0iw$b} -> {:0ow$b}", i, r, iw = *inputs as usize, ow = *outputs as usize);
                }
                out.push_str("}\n");
            }
        }
    }
    if !p.ideal.is_empty() {
        out.push_str("ideal {\n");
        write_stmts(&mut out, &p.ideal, 1);
        out.push_str("}\n");
    }
    out.push('\n');
    write_stmts(&mut out, &p.body, 0);
    out
}
