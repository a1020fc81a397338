use super::*;

const CAT4_GOOD: &str = "\
qubits 5
block q0-q3
kind prep
# fan-out cat preparation with one parity check
repeat @memoryless {
  init q0; init q1; init q2; init q3
  h q0
  cnot q0 q1
  cnot q0 q2
  cnot q0 q3
  init q4
  cnot q2 q4
  cnot q3 q4
  c := measure q4
} until (c == 0)
";

#[test]
fn minimal_program() {
    let p = parse("qubits 1\ninit q0").unwrap();
    assert_eq!(p.qubits, 1);
    assert_eq!(p.body, vec![Stmt::init(0)]);
}

#[test]
fn cat_prep_parses_to_memoryless_loop() {
    let p = parse(CAT4_GOOD).unwrap();
    assert_eq!(p.blocks, vec![vec![0, 1, 2, 3]]);
    assert_eq!(p.body.len(), 1);
    match &p.body[0].kind {
        StmtKind::Repeat { class, body, .. } => {
            assert_eq!(*class, LoopClass::Memoryless);
            assert_eq!(body.len(), 12);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(p.stmt_count(), 13);
}

#[test]
fn missing_loop_class_is_rejected() {
    let e = parse("qubits 1\nrepeat { x := measure q0 } until (x == 0)").unwrap_err();
    assert_eq!((e.line, e.col), (2, 8));
    assert!(e.msg.contains("loop class"));
}

#[test]
fn undeclared_qubit_and_variable() {
    let e = parse("qubits 2\ninit q2").unwrap_err();
    assert_eq!((e.line, e.col), (2, 6));
    let e = parse("qubits 2\ninit q0\ny := x ^ 1").unwrap_err();
    assert_eq!(e.line, 3);
    assert!(e.msg.contains("x"));
    let e = parse("qubits 2\nh q0 q1").unwrap_err();
    assert_eq!(e.line, 2);
}

#[test]
fn branch_definitions_meet() {
    let src = "qubits 1\nm := measure q0\nif (m) { a := 1 } else { b := 0 }\nc := a";
    assert!(parse(src).is_err());
    let src = "qubits 1\nm := measure q0\nif (m) { a := 1 } else { a := 0 }\nc := a";
    assert!(parse(src).is_ok());
}

#[test]
fn oracle_family_and_table() {
    let src = "qubits 2
oracle f = table(2, 1) { 00 -> 0, 01 -> 1, 10 -> 1, 11 -> 0 }
oracle dec = decoder(color_7_1_3)
a := measure q0
b := measure q1
r := oracle f(a, b)
s := oracle dec(a, b)
if (s[3]) { x q0 }
";
    let p = parse(src).unwrap();
    assert_eq!(p.oracles.len(), 2);
    assert_eq!(p.oracles[0].kind, OracleKind::Table { inputs: 2, outputs: 1, rows: vec![0, 1, 1, 0] });
    let again = parse(&p.to_string()).unwrap();
    assert_eq!(again, p);
}

#[test]
fn expression_precedence() {
    let p = parse("qubits 1\na := measure q0\nb := a | a & !a ^ a == 0").unwrap();
    let StmtKind::Assign(_, e) = &p.body[1].kind else { panic!() };
    let a = || CExpr::Var(VarRef::plain("a"));
    let expected = CExpr::Or(vec![
        a(),
        CExpr::And(vec![
            a(),
            CExpr::Xor(vec![CExpr::Not(Box::new(a())), CExpr::Eq(Box::new(a()), Box::new(CExpr::Const(false)))]),
        ]),
    ]);
    assert_eq!(e, &expected);
    assert_eq!(e.to_string(), "a | a & !a ^ a == 0");
}

#[test]
fn print_parse_roundtrip_on_sample() {
    let p = parse(CAT4_GOOD).unwrap();
    let text = p.to_string();
    let q = parse(&text).unwrap();
    assert_eq!(p, q);
    assert_eq!(text, q.to_string());
}

#[test]
fn memoryless_checks() {
    let p = parse("qubits 1\nrepeat @memoryless { init q0; h q0; m := measure q0 } until (m == 0)").unwrap();
    let StmtKind::Repeat { body, until, .. } = &p.body[0].kind else { panic!() };
    assert!(check_memoryless(body, until));

    let p =
        parse("qubits 2\ninit q1\nrepeat @memoryless { init q0; cnot q1 q0; m := measure q0 } until (m == 0)").unwrap();
    let StmtKind::Repeat { body, until, .. } = &p.body[1].kind else { panic!() };
    let v = memoryless_violations(body, until);
    assert_eq!(v.len(), 1);
    assert!(v[0].msg.contains("q1"));
}

#[test]
fn conservative_and_transversal_checks() {
    // Syndrome round on a 2-qubit repetition block; the ancilla is reset.
    let src = "qubits 4
block q0 q1
repeat @conservative {
  init q2
  cnot q0 q2
  cnot q1 q2
  a := measure q2
  init q3
  cnot q0 q3
  cnot q1 q3
  b := measure q3
} until (a == b)
if (a) { x q0 }
";
    let p = parse(src).unwrap();
    let StmtKind::Repeat { body, until, .. } = &p.body[0].kind else { panic!() };
    assert!(check_conservative_structure(body, until).is_empty());
    // One ancilla touches two data qubits.
    let t = check_transversal(body, &p.is_data());
    assert_eq!(t.len(), 2);
    assert!(check_transversal(&[], &p.is_data()).is_empty());

    let adaptive = "qubits 2
repeat @conservative {
  init q1
  a := measure q1
  if (a) { h q0 }
} until (a == 0)
";
    let p = parse(adaptive).unwrap();
    let StmtKind::Repeat { body, until, .. } = &p.body[0].kind else { panic!() };
    assert_eq!(check_conservative_structure(body, until).len(), 1);
}
