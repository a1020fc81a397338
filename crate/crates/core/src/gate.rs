//! The Clifford gate set.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gate {
    H,
    S,
    X,
    Y,
    Z,
    Cnot,
    Cz,
}

impl Gate {
    pub const ALL: [Gate; 7] = [Gate::H, Gate::S, Gate::X, Gate::Y, Gate::Z, Gate::Cnot, Gate::Cz];

    pub fn arity(self) -> usize {
        match self {
            Gate::Cnot | Gate::Cz => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Gate::H => "h",
            Gate::S => "s",
            Gate::X => "x",
            Gate::Y => "y",
            Gate::Z => "z",
            Gate::Cnot => "cnot",
            Gate::Cz => "cz",
        }
    }

    pub fn is_pauli(self) -> bool {
        matches!(self, Gate::X | Gate::Y | Gate::Z)
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Gate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "h" => Gate::H,
            "s" => Gate::S,
            "x" => Gate::X,
            "y" => Gate::Y,
            "z" => Gate::Z,
            "cnot" | "cx" => Gate::Cnot,
            "cz" => Gate::Cz,
            _ => return Err(format!("unknown gate {s:?}")),
        })
    }
}
