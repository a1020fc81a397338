//! Fixtures shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ftqec::engine::{Config, Engine, EngineOptions};
use ftqec::interp::resolve_oracles;
use ftqec::program::Program;
use ftqec::smt::{FtQuery, PostCondition};
use ftqec::{BitVec, ExprPool, GF2Matrix, SymTableau};

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> GF2Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows).map(|_| BitVec::from_bools(&(0..cols).map(|_| rng.gen()).collect::<Vec<_>>())).collect();
    GF2Matrix::from_rows(data, cols)
}

/// Symbolic execution of `p` from `|0…0⟩`; returns the pool and the
/// terminal configurations.
pub fn explore(p: &Program) -> (ExprPool, Vec<Config>) {
    let oracles = resolve_oracles(p).expect("oracles");
    let mut pool = ExprPool::new();
    let init = Config::new(SymTableau::zero_state(p.qubits), p.blocks.len());
    let out = Engine::new(p, &oracles, &mut pool, EngineOptions::default()).run(init).expect("engine");
    (pool, out)
}

/// A query asking whether some run within budget `t` ends away from the
/// fault-free signs.
pub fn exact_query(cfg: &Config, t: usize) -> FtQuery {
    FtQuery {
        phi: cfg.phi.clone(),
        budget: vec![(cfg.f_exec.clone(), t)],
        post: PostCondition::Exact { diffs: cfg.state.phases().to_vec() },
        t,
    }
}
