//! Property tests against independent oracles: dense complex matrices for
//! Pauli algebra and stabilizer simulation, plain booleans for expressions.

use num_complex::Complex64 as C;
use proptest::prelude::*;

use ftqec::gadgets;
use ftqec::program::parse;
use ftqec::stabilizer::Tableau;
use ftqec::{Assignment, BitVec, Expr, ExprPool, GF2Matrix, Gate, Origin, PauliOp, SymbolKind};

const EPS: f64 = 1e-9;

type Mat = Vec<Vec<C>>;

fn one_qubit(c: char) -> [[C; 2]; 2] {
    let (o, z, i) = (C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 1.0));
    match c {
        'I' => [[o, z], [z, o]],
        'X' => [[z, o], [o, z]],
        'Y' => [[z, -i], [i, z]],
        'Z' => [[o, z], [z, -o]],
        _ => unreachable!(),
    }
}

/// Dense matrix of a signed Pauli string; qubit `q` is bit `q` of the basis
/// index.
fn pauli_matrix(p: &PauliOp) -> Mat {
    let s = p.to_string();
    let (sign, body) = match s.strip_prefix('-') {
        Some(b) => (-1.0, b.to_string()),
        None => (1.0, s),
    };
    let letters: Vec<char> = body.chars().collect();
    let dim = 1 << letters.len();
    let mut m = vec![vec![C::new(0.0, 0.0); dim]; dim];
    for (col, row) in (0..dim).flat_map(|c| (0..dim).map(move |r| (c, r))) {
        let mut v = C::new(sign, 0.0);
        for (q, &ch) in letters.iter().enumerate() {
            v *= one_qubit(ch)[row >> q & 1][col >> q & 1];
        }
        m[row][col] = v;
    }
    m
}

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

fn close(a: &Mat, b: &Mat) -> bool {
    a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| (x - y).norm() < EPS)
}

fn scale(a: &Mat, s: C) -> Mat {
    a.iter().map(|r| r.iter().map(|x| x * s).collect()).collect()
}

fn pauli_strategy(n: usize) -> impl Strategy<Value = PauliOp> {
    (proptest::collection::vec(0..4usize, n), any::<bool>()).prop_map(|(letters, sign)| {
        let s: String = letters.iter().map(|&i| ['I', 'X', 'Y', 'Z'][i]).collect();
        s.parse::<PauliOp>().unwrap().with_sign(sign)
    })
}

fn pair(max_n: usize) -> impl Strategy<Value = (PauliOp, PauliOp)> {
    (1..=max_n).prop_flat_map(|n| (pauli_strategy(n), pauli_strategy(n)))
}

fn matrix_strategy() -> impl Strategy<Value = GF2Matrix> {
    (1..12usize, 1..12usize).prop_flat_map(|(r, c)| {
        proptest::collection::vec(proptest::collection::vec(any::<bool>(), c), r)
            .prop_map(move |rows| GF2Matrix::from_rows(rows.iter().map(|b| BitVec::from_bools(b)).collect(), c))
    })
}

proptest! {
    #[test]
    fn pauli_string_roundtrip(p in (1..10usize).prop_flat_map(pauli_strategy)) {
        let back: PauliOp = p.to_string().parse().unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn weight_counts_non_identity_letters(p in (1..10usize).prop_flat_map(pauli_strategy)) {
        let letters = p.to_string().chars().filter(|c| "XYZ".contains(*c)).count();
        prop_assert_eq!(p.weight(), letters);
    }

    #[test]
    fn commutation_and_product_match_matrices((a, b) in pair(3)) {
        let (ma, mb) = (pauli_matrix(&a), pauli_matrix(&b));
        let ab = matmul(&ma, &mb);
        let ba = matmul(&mb, &ma);
        let commute = close(&ab, &ba);
        prop_assert_eq!(a.commutes(&b).unwrap(), commute);
        if commute {
            prop_assert!(close(&pauli_matrix(&a.mul(&b).unwrap()), &ab));
        } else {
            let ip = ftqec::pauli::i_product(&a, &b).unwrap().unwrap();
            prop_assert!(close(&pauli_matrix(&ip), &scale(&ab, C::new(0.0, 1.0))));
        }
    }

    #[test]
    fn rank_and_rref(m in matrix_strategy()) {
        let r = m.rref();
        prop_assert!(r.rank <= m.rows().min(m.cols()));
        prop_assert!(r.matrix.rref().matrix == r.matrix);
        let kernel = m.nullspace_vectors();
        prop_assert_eq!(kernel.len(), m.cols() - r.rank);
        for v in &kernel {
            prop_assert!(m.mul_vec(v).is_zero());
        }
    }

    #[test]
    fn solve_returns_a_solution(m in matrix_strategy(), seed in any::<u64>()) {
        // A right-hand side in the column space, built from a random x.
        let x = BitVec::from_bools(&(0..m.cols()).map(|j| seed >> (j % 64) & 1 == 1).collect::<Vec<_>>());
        let b = m.mul_vec(&x);
        let p = m.solve(&b).expect("consistent system");
        prop_assert!(m.mul_vec(&p) == b);
    }
}

// ------------------------------------------------------------ stabilizer

#[derive(Clone, Debug)]
enum Op {
    Gate(Gate, usize, usize),
    Measure(usize, bool),
    Reset(usize),
}

fn op_strategy(n: usize) -> impl Strategy<Value = Op> {
    let gate = (0..Gate::ALL.len(), 0..n, 0..n).prop_filter_map("distinct qubits", |(g, a, b)| {
        let g = Gate::ALL[g];
        (g.arity() == 1 || a != b).then_some(Op::Gate(g, a, b))
    });
    prop_oneof![
        6 => gate,
        2 => (0..n, any::<bool>()).prop_map(|(q, f)| Op::Measure(q, f)),
        1 => (0..n).prop_map(Op::Reset),
    ]
}

fn circuit() -> impl Strategy<Value = (usize, Vec<Op>)> {
    (1..=4usize).prop_flat_map(|n| (Just(n), proptest::collection::vec(op_strategy(n), 0..30)))
}

fn apply_one(psi: &mut [C], q: usize, m: [[C; 2]; 2]) {
    for i in 0..psi.len() {
        if i >> q & 1 == 0 {
            let j = i | 1 << q;
            let (a, b) = (psi[i], psi[j]);
            psi[i] = m[0][0] * a + m[0][1] * b;
            psi[j] = m[1][0] * a + m[1][1] * b;
        }
    }
}

fn apply_gate(psi: &mut [C], g: Gate, a: usize, b: usize) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (o, z) = (C::new(1.0, 0.0), C::new(0.0, 0.0));
    match g {
        Gate::H => apply_one(psi, a, [[C::new(h, 0.0), C::new(h, 0.0)], [C::new(h, 0.0), C::new(-h, 0.0)]]),
        Gate::S => apply_one(psi, a, [[o, z], [z, C::new(0.0, 1.0)]]),
        Gate::X => apply_one(psi, a, one_qubit('X')),
        Gate::Y => apply_one(psi, a, one_qubit('Y')),
        Gate::Z => apply_one(psi, a, one_qubit('Z')),
        Gate::Cnot => {
            for i in 0..psi.len() {
                if i >> a & 1 == 1 && i >> b & 1 == 0 {
                    psi.swap(i, i | 1 << b);
                }
            }
        }
        Gate::Cz => {
            for (i, v) in psi.iter_mut().enumerate() {
                if i >> a & 1 == 1 && i >> b & 1 == 1 {
                    *v = -*v;
                }
            }
        }
    }
}

fn prob_one(psi: &[C], q: usize) -> f64 {
    psi.iter().enumerate().filter(|(i, _)| i >> q & 1 == 1).map(|(_, v)| v.norm_sqr()).sum()
}

fn project(psi: &mut [C], q: usize, bit: bool) {
    for (i, v) in psi.iter_mut().enumerate() {
        if (i >> q & 1 == 1) != bit {
            *v = C::new(0.0, 0.0);
        }
    }
    let norm: f64 = psi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    for v in psi.iter_mut() {
        *v /= norm;
    }
}

proptest! {
    #[test]
    fn tableau_matches_state_vector((n, ops) in circuit()) {
        let mut t = Tableau::new(n);
        let mut psi = vec![C::new(0.0, 0.0); 1 << n];
        psi[0] = C::new(1.0, 0.0);
        for op in &ops {
            match *op {
                Op::Gate(g, a, b) => {
                    let qs = if g.arity() == 1 { vec![a] } else { vec![a, b] };
                    t.apply(g, &qs);
                    apply_gate(&mut psi, g, a, b);
                }
                Op::Measure(q, forced) => {
                    let p1 = prob_one(&psi, q);
                    let (bit, random) = t.measure(q, forced);
                    prop_assert_eq!(random, (p1 - 0.5).abs() < 1e-6);
                    if !random {
                        let want = if bit { 1.0 } else { 0.0 };
                        prop_assert!((p1 - want).abs() < 1e-6);
                    }
                    project(&mut psi, q, bit);
                }
                Op::Reset(q) => {
                    t.reset(q);
                    if prob_one(&psi, q) > 1.0 - 1e-6 {
                        apply_gate(&mut psi, Gate::X, q, q);
                    } else if prob_one(&psi, q) > 1e-6 {
                        project(&mut psi, q, false);
                    }
                }
            }
        }
        for s in t.stabilizers() {
            let m = pauli_matrix(&s);
            let image: Vec<C> = (0..psi.len()).map(|r| (0..psi.len()).map(|c| m[r][c] * psi[c]).sum()).collect();
            prop_assert!(image.iter().zip(&psi).all(|(a, b)| (a - b).norm() < 1e-6), "{} does not stabilize", s);
        }
    }
}

// ------------------------------------------------------------ expressions

#[derive(Clone, Debug)]
enum E {
    Var(usize),
    Const(bool),
    Not(Box<E>),
    Xor(Box<E>, Box<E>),
    And(Box<E>, Box<E>),
    Or(Box<E>, Box<E>),
}

fn expr_strategy() -> impl Strategy<Value = E> {
    let leaf = prop_oneof![(0..5usize).prop_map(E::Var), any::<bool>().prop_map(E::Const)];
    leaf.prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| E::Not(Box::new(e))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| E::Xor(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| E::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| E::Or(Box::new(a), Box::new(b))),
        ]
    })
}

fn build(e: &E, pool: &mut ExprPool, vars: &[Expr]) -> Expr {
    match e {
        E::Var(i) => vars[*i].clone(),
        E::Const(b) => Expr::constant(*b),
        E::Not(a) => build(a, pool, vars).not(),
        E::Xor(a, b) => {
            let (x, y) = (build(a, pool, vars), build(b, pool, vars));
            x.xor(&y)
        }
        E::And(a, b) => {
            let (x, y) = (build(a, pool, vars), build(b, pool, vars));
            pool.and(&x, &y)
        }
        E::Or(a, b) => {
            let (x, y) = (build(a, pool, vars), build(b, pool, vars));
            pool.or(&x, &y)
        }
    }
}

fn truth(e: &E, bits: u32) -> bool {
    match e {
        E::Var(i) => bits >> i & 1 == 1,
        E::Const(b) => *b,
        E::Not(a) => !truth(a, bits),
        E::Xor(a, b) => truth(a, bits) ^ truth(b, bits),
        E::And(a, b) => truth(a, bits) && truth(b, bits),
        E::Or(a, b) => truth(a, bits) || truth(b, bits),
    }
}

proptest! {
    #[test]
    fn expressions_evaluate_like_booleans(e in expr_strategy()) {
        let mut pool = ExprPool::new();
        let vars: Vec<Expr> = (0..5).map(|i| pool.fresh(SymbolKind::FaultX, Origin::new(0, i, 0))).collect();
        let x = build(&e, &mut pool, &vars);
        let simplified = pool.simplify(&x);
        for bits in 0..32u32 {
            let mut a = Assignment::new();
            for (i, v) in vars.iter().enumerate() {
                a.set(v.atoms()[0], bits >> i & 1 == 1);
            }
            prop_assert_eq!(pool.eval(&x, &a).unwrap(), truth(&e, bits));
            prop_assert_eq!(pool.eval(&simplified, &a).unwrap(), truth(&e, bits));
        }
    }

    #[test]
    fn cat_programs_roundtrip(size in 2..9usize, picks in proptest::collection::vec((0..8usize, 0..8usize), 0..4)) {
        let checks: Vec<(usize, usize)> = picks
            .into_iter()
            .map(|(a, b)| (a % size, b % size))
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (a.min(b) + 1, a.max(b) + 1))
            .collect();
        let p = gadgets::cat_prep(size, &checks);
        let text = p.to_string();
        let back = parse(&text).unwrap();
        prop_assert_eq!(back.to_string(), text);
    }
}
