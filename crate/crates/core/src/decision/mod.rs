//! Satisfiability engines: an exhaustive oracle, bounded model search by
//! grounding into a CDCL solver, and the alternating K-type procedure run as
//! an AND-OR search.

mod alternating;
mod bounded;
mod brute;
pub mod ground;
pub mod solver;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;
use web_time::Instant;

use thiserror::Error;

pub use alternating::sat_alternating;
pub use bounded::sat_bounded;
pub use brute::brute_force_sat;

use crate::model_builder::construction_bound;
use crate::normal_form::{to_normal_form, Dialect, NormalFormError};
use crate::structures::{models, Structure};
use crate::syntax::{Formula, Signature};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Engine {
    Brute,
    Bounded,
    Alternating,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Brute => "brute",
            Engine::Bounded => "bounded",
            Engine::Alternating => "alternating",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "brute" => Ok(Engine::Brute),
            "bounded" => Ok(Engine::Bounded),
            "alternating" => Ok(Engine::Alternating),
            other => Err(format!(
                "unknown engine `{other}` (expected brute, bounded or alternating)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatStatus {
    Sat(Structure),
    /// No model of size at most the given bound.
    UnsatUpTo(usize),
    /// Certified unsatisfiable.
    Unsat,
    Unknown(String),
}

impl SatStatus {
    pub fn label(&self) -> &'static str {
        match self {
            SatStatus::Sat(_) => "SAT",
            SatStatus::UnsatUpTo(_) => "UNSAT_UP_TO",
            SatStatus::Unsat => "UNSAT",
            SatStatus::Unknown(_) => "UNKNOWN",
        }
    }

    pub fn is_sat(&self) -> bool {
        matches!(self, SatStatus::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SatStatus::Unsat | SatStatus::UnsatUpTo(_))
    }

    pub fn model(&self) -> Option<&Structure> {
        match self {
            SatStatus::Sat(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    /// Search nodes: solver decisions and conflicts, or enumerated
    /// partial structures for the exhaustive engine.
    pub nodes: u64,
    pub elapsed: Duration,
    /// Normal-form candidates examined.
    pub candidates: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SatVerdict {
    pub status: SatStatus,
    pub engine: Engine,
    pub stats: Stats,
    /// Model-size bound that certifies an UNSAT answer, when one applies.
    pub bound: Option<u128>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SizeLimit {
    Fixed(usize),
    /// The dialect's small-model bound.
    Bound,
}

impl FromStr for SizeLimit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "bound" {
            return Ok(SizeLimit::Bound);
        }
        match s.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(SizeLimit::Fixed(n)),
            _ => Err(format!("expected a positive size or `bound`, got `{s}`")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Options {
    pub max_size: SizeLimit,
    /// Search nodes allowed across the whole call.
    pub budget_nodes: u64,
    /// Largest number of ground instances `sat_bounded` will build.
    pub ground_ceiling: u128,
    /// Largest number of ground atoms the exhaustive engine will branch on.
    pub atom_ceiling: usize,
    /// Memoize explored K-types in the alternating engine.
    pub memo: bool,
    /// Unrolling depth accepted without memoization.
    pub depth_guard: usize,
}

impl Default for Options {
    fn default() -> Options {
        Options {
            max_size: SizeLimit::Fixed(4),
            budget_nodes: 2_000_000,
            ground_ceiling: 20_000_000,
            atom_ceiling: 48,
            memo: true,
            depth_guard: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DecisionError {
    #[error(transparent)]
    Classification(#[from] NormalFormError),
    #[error("grounding needs {required} instances, above the ceiling of {ceiling}")]
    GroundingCeiling { required: u128, ceiling: u128 },
    #[error("{required} ground atoms exceed the exhaustive-search ceiling of {ceiling}")]
    AtomCeiling { required: usize, ceiling: usize },
    #[error("no finite size bound is available for {0}; pass an explicit size")]
    NoBound(Dialect),
    #[error("formula is not a sentence")]
    NotASentence,
}

/// Normalizes `f`, runs `engine` on every candidate normal form (first SAT
/// wins), and returns models reduced to `sig` and re-verified against `f`.
pub fn decide(
    f: &Formula,
    sig: &Signature,
    dialect: Dialect,
    engine: Engine,
    opts: &Options,
) -> Result<SatVerdict, DecisionError> {
    let start = Instant::now();
    let candidates = to_normal_form(f, sig, dialect)?;
    if engine == Engine::Brute {
        let max = match opts.max_size {
            SizeLimit::Fixed(n) => n,
            SizeLimit::Bound => {
                let mut worst = 0u128;
                for (nf, _) in candidates {
                    worst = worst.max(
                        construction_bound(&nf, dialect).ok_or(DecisionError::NoBound(dialect))?,
                    );
                }
                usize::try_from(worst).unwrap_or(usize::MAX)
            }
        };
        let mut v = brute_force_sat(f, sig, max, opts)?;
        v.stats.elapsed = start.elapsed();
        return Ok(v);
    }

    let mut stats = Stats::default();
    let mut remaining = opts.budget_nodes;
    let mut certified = true;
    let mut unknown: Option<String> = None;
    let mut smallest_limit = usize::MAX;
    let mut bound_seen: Option<u128> = None;
    for (nf, _) in candidates {
        stats.candidates += 1;
        let mut local = opts.clone();
        local.budget_nodes = remaining;
        let cbound = construction_bound(&nf, dialect);
        if let Some(b) = cbound {
            bound_seen = Some(bound_seen.map_or(b, |x: u128| x.max(b)));
        }
        let verdict = match engine {
            Engine::Bounded => {
                let limit = match opts.max_size {
                    SizeLimit::Fixed(n) => n,
                    SizeLimit::Bound => match cbound {
                        Some(b) => usize::try_from(b).unwrap_or(usize::MAX),
                        None => return Err(DecisionError::NoBound(dialect)),
                    },
                };
                sat_bounded(&nf, limit, &local)?
            }
            Engine::Alternating => sat_alternating(&nf, &local),
            Engine::Brute => unreachable!(),
        };
        stats.nodes += verdict.stats.nodes;
        remaining = remaining.saturating_sub(verdict.stats.nodes);
        match verdict.status {
            SatStatus::Sat(model) => {
                let reduced = model.reduct(sig);
                if !models(&reduced, f).unwrap_or(false) {
                    unknown = Some(
                        "model of the normal form does not reduce to a model of the input".into(),
                    );
                    continue;
                }
                stats.elapsed = start.elapsed();
                return Ok(SatVerdict {
                    status: SatStatus::Sat(reduced),
                    engine,
                    stats,
                    bound: verdict.bound,
                });
            }
            SatStatus::Unsat => {}
            SatStatus::UnsatUpTo(k) => {
                smallest_limit = smallest_limit.min(k);
                if !cbound.is_some_and(|b| k as u128 >= b) {
                    certified = false;
                }
            }
            SatStatus::Unknown(reason) => {
                unknown.get_or_insert(reason);
            }
        }
    }
    stats.elapsed = start.elapsed();
    let status = if let Some(reason) = unknown {
        SatStatus::Unknown(reason)
    } else if certified {
        SatStatus::Unsat
    } else {
        SatStatus::UnsatUpTo(smallest_limit)
    };
    Ok(SatVerdict {
        status,
        engine,
        stats,
        bound: bound_seen,
    })
}
