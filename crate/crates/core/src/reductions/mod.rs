//! Hardness encodings: exponential tiling into uniform GF₁, alternating
//! Turing machines into TGF₁ with equality and into GF₁ with constants, and
//! the doubly exponential grid into TGF₁ with constants. Each encoding comes
//! with an independent oracle and, where feasible, a constructive model.

mod atm;
mod grid;
mod lambda;
mod spec_files;
mod tiling;

use thiserror::Error;

pub use atm::{atm_model, atm_oracle, encode_atm_gf1_const, encode_atm_tgf1eq, AtmVerdict, Config};
pub use grid::{encode_grid_tgf1_const, grid_model};
pub use lambda::{bit_vars, build_lambda, LambdaKind};
pub use spec_files::{parse_atm, parse_tiling};
pub use tiling::{encode_tiling_ufgf1, is_tiling, tiling_model, tiling_oracle, Tiling};

/// A tiling system ⟨C, c₀, Hor, Ver⟩. Colours are indices into `colors`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TilingSystem {
    pub colors: Vec<String>,
    pub initial: usize,
    pub hor: Vec<(usize, usize)>,
    pub ver: Vec<(usize, usize)>,
}

impl TilingSystem {
    pub fn new(
        colors: &[&str],
        initial: usize,
        hor: &[(usize, usize)],
        ver: &[(usize, usize)],
    ) -> TilingSystem {
        TilingSystem {
            colors: colors.iter().map(|c| c.to_string()).collect(),
            initial,
            hor: hor.to_vec(),
            ver: ver.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<(), ReductionError> {
        if self.colors.is_empty() {
            return Err(ReductionError::Malformed(
                "tiling system has no colours".into(),
            ));
        }
        if self.initial >= self.colors.len() {
            return Err(ReductionError::Malformed(
                "initial colour out of range".into(),
            ));
        }
        let k = self.colors.len();
        if self
            .hor
            .iter()
            .chain(&self.ver)
            .any(|&(a, b)| a >= k || b >= k)
        {
            return Err(ReductionError::Malformed(
                "constraint mentions an unknown colour".into(),
            ));
        }
        Ok(())
    }

    pub fn hor_ok(&self, a: usize, b: usize) -> bool {
        self.hor.contains(&(a, b))
    }

    pub fn ver_ok(&self, a: usize, b: usize) -> bool {
        self.ver.contains(&(a, b))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Move {
    pub state: usize,
    pub letter: usize,
    pub dir: Direction,
}

/// An alternating Turing machine with its input word. State 0 is initial,
/// letter 0 is the blank. Final states have no listed moves; they loop
/// without changing the configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtmSpec {
    pub states: Vec<String>,
    pub accepting: usize,
    pub rejecting: usize,
    /// `universal[s]` for non-final states; ignored for final ones.
    pub universal: Vec<bool>,
    pub alphabet: Vec<String>,
    pub input: Vec<usize>,
    /// `moves[s][a]`, empty for final states.
    pub moves: Vec<Vec<Vec<Move>>>,
}

impl AtmSpec {
    pub fn is_final(&self, s: usize) -> bool {
        s == self.accepting || s == self.rejecting
    }

    /// Bit width n = max(1, |input|); the tape has 2^n cells.
    pub fn width(&self) -> usize {
        self.input.len().max(1)
    }

    pub fn validate(&self) -> Result<(), ReductionError> {
        let bad = |m: &str| Err(ReductionError::Malformed(m.to_string()));
        let (ns, na) = (self.states.len(), self.alphabet.len());
        if ns < 2 || na == 0 {
            return bad("need at least two states and one letter");
        }
        if self.accepting >= ns || self.rejecting >= ns || self.accepting == self.rejecting {
            return bad("accepting and rejecting states must be two distinct states");
        }
        if self.universal.len() != ns || self.moves.len() != ns {
            return bad("state tables have the wrong length");
        }
        if self.input.iter().any(|&a| a >= na) {
            return bad("input uses a letter outside the alphabet");
        }
        if self.input.len() > 16 {
            return bad("input longer than 16 letters");
        }
        for s in 0..ns {
            if self.moves[s].len() != na {
                return bad("move table has the wrong length");
            }
            for a in 0..na {
                let ms = &self.moves[s][a];
                if self.is_final(s) {
                    if !ms.is_empty() {
                        return Err(ReductionError::Malformed(format!(
                            "final state {} must not have moves",
                            self.states[s]
                        )));
                    }
                } else if ms.len() != 2 {
                    return Err(ReductionError::Malformed(format!(
                        "state {} letter {} has {} moves, expected 2",
                        self.states[s],
                        self.alphabet[a],
                        ms.len()
                    )));
                }
                if ms.iter().any(|m| m.state >= ns || m.letter >= na) {
                    return bad("move target out of range");
                }
            }
        }
        Ok(())
    }
}

/// Fixed-length tuple of bits, most significant first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitTuple(pub Vec<bool>);

impl BitTuple {
    pub fn from_value(value: u64, n: usize) -> BitTuple {
        BitTuple((0..n).rev().map(|i| (value >> i) & 1 == 1).collect())
    }

    pub fn value(&self) -> u64 {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All tuples of length `n` in increasing numeric order.
    pub fn all(n: usize) -> impl Iterator<Item = BitTuple> {
        (0..1u64 << n).map(move |v| BitTuple::from_value(v, n))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error("malformed specification: {0}")]
    Malformed(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("width mismatch: expected {expected} variables, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("bit width must be at least 1")]
    ZeroWidth,
    #[error("oracle ceiling exceeded after {0} steps")]
    Ceiling(u64),
}
