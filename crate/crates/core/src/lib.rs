//! Fault-tolerance verification of quantum error-correction gadgets.
//!
//! Gadgets are classical-quantum programs (see [`program`]). The verifier
//! runs them symbolically over stabilizer states whose phases are Boolean
//! expressions over fault symbols ([`tableau`], [`engine`]), then asks an
//! external SMT solver whether any budgeted fault pattern violates the
//! fault-tolerance condition of the gadget kind ([`smt`], [`verify`]).

pub mod codes;
pub mod distance;
pub mod engine;
pub mod expr;
pub mod gadgets;
pub mod gate;
pub mod gf2;
pub mod interp;
pub mod oracle;
pub mod pauli;
pub mod program;
pub mod smt;
pub mod stabilizer;
pub mod tableau;
pub mod verify;

pub use expr::{Assignment, Atom, Expr, ExprPool, FaultCounter, Origin, Symbol, SymbolKind};
pub use gate::Gate;
pub use gf2::{BitVec, GF2Matrix};
pub use pauli::{Pauli1, PauliOp};
pub use tableau::SymTableau;
