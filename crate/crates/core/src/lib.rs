//! Completeness reasoning for conjunctive queries over partially complete
//! databases.
//!
//! A database is described as partially complete by table-completeness
//! statements. Given a conjunctive query, the engine decides whether its
//! answers are guaranteed complete, and if not, computes the minimal
//! complete generalization and the k-bounded maximal complete
//! specializations. A small logic-program-style text format and a CLI
//! expose every capability; brute-force oracles back the test suites.

use std::fmt;

pub mod cli;
pub mod completeness;
pub mod generalize;
pub mod oracle;
pub mod parse;
pub mod query;
pub mod render;
pub mod specialize;
pub mod term;

pub use completeness::{is_complete, IncompleteDatabase, TCSet, TCStatement};
pub use generalize::{gc_step, mcg, GeneralizationTrace, McgResult};
pub use parse::{parse, Document, ParseError};
pub use query::{contained, equivalent, evaluate, AnswerSet, ConjunctiveQuery};
pub use specialize::{
    complete_unifiers, fresh_extensions, k_mcs, mci, mcs_size_bound, Budget, SizeBound,
    SpecializationResult,
};
pub use term::{freeze, mgu, unfreeze, Atom, DatabaseInstance, Substitution, Term};

/// Engine errors. Parse errors carry positions and live in [`parse`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A head variable does not occur in the body where safety is required.
    UnsafeQuery { query: String },
    /// Two queries with different head arities were compared.
    ArityMismatch { left: usize, right: usize },
    /// A database instance would contain a variable.
    NonGroundFact { atom: String },
    /// The available state is not included in the ideal one.
    AvailableNotIncluded,
    /// The statement set has a cyclic dependency graph.
    CyclicTcs,
    /// An exhaustive enumeration would exceed its ceiling.
    BoundsTooLarge { estimate: u64, limit: u64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnsafeQuery { query } => {
                write!(f, "query '{}' is unsafe: a head variable is missing from the body", query)
            }
            Error::ArityMismatch { left, right } => {
                write!(f, "head arity mismatch: {} versus {}", left, right)
            }
            Error::NonGroundFact { atom } => {
                write!(f, "fact '{}' is not ground", atom)
            }
            Error::AvailableNotIncluded => {
                write!(f, "available state is not a subset of the ideal state")
            }
            Error::CyclicTcs => {
                write!(f, "statement set has a cyclic dependency graph")
            }
            Error::BoundsTooLarge { estimate, limit } => {
                write!(f, "enumeration of about {} cases exceeds the limit {}", estimate, limit)
            }
        }
    }
}

impl std::error::Error for Error {}

/// The running-example queries and statements shared by the module tests.
#[cfg(test)]
pub(crate) mod fixtures {
    use crate::completeness::{TCSet, TCStatement};
    use crate::query::ConjunctiveQuery;
    use crate::term::{Atom, Term};

    fn v(name: &str) -> Term {
        Term::var(name)
    }

    fn c(name: &str) -> Term {
        Term::constant(name)
    }

    fn atom(rel: &str, args: &[Term]) -> Atom {
        Atom::new(rel, args.to_vec())
    }

    /// Names of pupils at a primary school in the district of Merano.
    pub fn q_ppb() -> ConjunctiveQuery {
        ConjunctiveQuery::new(
            "q_ppb",
            vec![v("N")],
            [
                atom("pupil", &[v("N"), v("C"), v("S")]),
                atom("school", &[v("S"), c("primary"), c("merano")]),
            ],
        )
        .unwrap()
    }

    /// Same pupils, additionally learning some language.
    pub fn q_pbl() -> ConjunctiveQuery {
        ConjunctiveQuery::new(
            "q_pbl",
            vec![v("N")],
            [
                atom("pupil", &[v("N"), v("C"), v("S")]),
                atom("school", &[v("S"), c("primary"), c("merano")]),
                atom("learns", &[v("N"), v("L")]),
            ],
        )
        .unwrap()
    }

    /// The english-learner instantiation.
    pub fn q_pbl_spec() -> ConjunctiveQuery {
        ConjunctiveQuery::new(
            "q_pbl_spec",
            vec![v("N")],
            [
                atom("pupil", &[v("N"), v("C"), v("S")]),
                atom("school", &[v("S"), c("primary"), c("merano")]),
                atom("learns", &[v("N"), c("english")]),
            ],
        )
        .unwrap()
    }

    /// Cities with an outgoing connection.
    pub fn q_conn() -> ConjunctiveQuery {
        ConjunctiveQuery::new("q_conn", vec![v("X")], [atom("conn", &[v("X"), v("Y")])])
            .unwrap()
    }

    /// All primary schools are recorded.
    pub fn c_sp() -> TCStatement {
        TCStatement::new(atom("school", &[v("S"), c("primary"), v("D")]), [])
            .with_label("c_sp")
    }

    /// All pupils of schools in the district of Merano are recorded.
    pub fn c_pb() -> TCStatement {
        TCStatement::new(
            atom("pupil", &[v("N"), v("C"), v("S")]),
            [atom("school", &[v("S"), v("T"), c("merano")])],
        )
        .with_label("c_pb")
    }

    /// All english learners at primary schools are recorded.
    pub fn c_enp() -> TCStatement {
        TCStatement::new(
            atom("learns", &[v("N"), c("english")]),
            [
                atom("pupil", &[v("N"), v("C"), v("S")]),
                atom("school", &[v("S"), c("primary"), v("D")]),
            ],
        )
        .with_label("c_enp")
    }

    /// Connections that can be extended are recorded.
    pub fn c_conn() -> TCStatement {
        TCStatement::new(
            atom("conn", &[v("X"), v("Y")]),
            [atom("conn", &[v("Y"), v("Z")])],
        )
        .with_label("c_conn")
    }

    pub fn school_tcs() -> TCSet {
        TCSet::new([c_sp(), c_pb(), c_enp()])
    }

    pub fn school_tcs_two() -> TCSet {
        TCSet::new([c_sp(), c_pb()])
    }
}
