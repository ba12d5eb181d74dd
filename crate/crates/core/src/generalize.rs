//! Query generalization: one reduction step keeps the body atoms that are
//! guaranteed complete, and iterating it to a fixed point yields the minimal
//! complete generalization when one exists.



use crate::completeness::TCSet;
use crate::query::ConjunctiveQuery;
use crate::term::{unfreeze, Atom};
use crate::Error;

/// One iteration of the generalization fixed point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub iteration: usize,
    pub query: ConjunctiveQuery,
    pub removed: Vec<Atom>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceOutcome {
    Mcg(ConjunctiveQuery),
    NoMcgUnsafe,
}

/// Record of the fixed-point iteration. Bodies shrink step over step, and
/// the number of steps never exceeds the input body size plus one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneralizationTrace {
    pub steps: Vec<TraceStep>,
    pub outcome: TraceOutcome,
}

/// Result of the generalization algorithm: the minimal complete
/// generalization if one exists, plus the iteration trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct McgResult {
    pub mcg: Option<ConjunctiveQuery>,
    pub trace: GeneralizationTrace,
}

/// One application of the generalization operator: freeze the body, reduce
/// it with the statements, unfreeze what survives. The head is unchanged,
/// so the result may be unsafe even when the input is safe.
pub fn gc_step(q: &ConjunctiveQuery, tcs: &TCSet) -> ConjunctiveQuery {
    let reduced = tcs.apply(&q.canonical_db());
    let body = unfreeze(&reduced);
    ConjunctiveQuery::new_generalized(q.name().to_string(), q.head().to_vec(), body)
}

fn removed_atoms(before: &ConjunctiveQuery, after: &ConjunctiveQuery) -> Vec<Atom> {
    before
        .body()
        .difference(after.body())
        .cloned()
        .collect()
}

/// Iterates `gc_step` from a safe query until two consecutive queries are
/// syntactically equal (that query is the MCG) or the current query turns
/// unsafe (no complete generalization exists). The safety check precedes
/// the equality check, mirroring the fixed-point algorithm's loop condition.
pub fn mcg(q: &ConjunctiveQuery, tcs: &TCSet) -> Result<McgResult, Error> {
    if !q.is_safe() {
        return Err(Error::UnsafeQuery {
            query: q.name().to_string(),
        });
    }
    let mut steps = Vec::new();
    let mut q_old = q.clone();
    let mut q_new = gc_step(&q_old, tcs);
    steps.push(TraceStep {
        iteration: 1,
        query: q_new.clone(),
        removed: removed_atoms(&q_old, &q_new),
    });
    while q_new.is_safe() && q_new.body() != q_old.body() {
        q_old = q_new;
        q_new = gc_step(&q_old, tcs);
        steps.push(TraceStep {
            iteration: steps.len() + 1,
            query: q_new.clone(),
            removed: removed_atoms(&q_old, &q_new),
        });
    }
    let (mcg, outcome) = if q_new.is_safe() {
        (Some(q_new.clone()), TraceOutcome::Mcg(q_new))
    } else {
        (None, TraceOutcome::NoMcgUnsafe)
    };
    Ok(McgResult {
        mcg,
        trace: GeneralizationTrace { steps, outcome },
    })
}
