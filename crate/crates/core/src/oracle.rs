//! Brute-force reference implementations for desk-scale cross-checking.
//!
//! These enumerate instances or candidate queries exhaustively within
//! explicit bounds. They are used by tests and the `verify` subcommand,
//! never by the engine paths they check. `oracle_entails_complete` and
//! `oracle_containment` are independent of the homomorphism machinery;
//! `oracle_specializations` enumerates the candidate space independently
//! but delegates the membership checks to the already-validated
//! `is_complete` and `contained`.

use std::collections::{BTreeMap, BTreeSet};

use crate::completeness::{is_complete, TCSet};
use crate::query::{contained, evaluate, ConjunctiveQuery};
use crate::term::{Atom, DatabaseInstance, Term};
use crate::Error;

/// Ceiling on the number of instances an enumeration may visit.
const MAX_INSTANCES: f64 = 2e6;

/// Ceiling on the candidate-body estimate for query enumeration.
const MAX_CANDIDATE_ESTIMATE: f64 = 5e7;

/// Explicit finite bounds for the enumerations.
#[derive(Debug, Clone)]
pub struct EnumerationBounds {
    /// The constant pool; built from every constant of the inputs plus a
    /// configurable number of fresh constants (default two).
    pub constants: Vec<Term>,
    pub max_facts_per_relation: usize,
    pub max_body_atoms: usize,
}

impl EnumerationBounds {
    /// Pool from the constants of the inputs plus `extra` fresh constants
    /// named `k0, k1, ...` (skipping collisions).
    pub fn for_scenario(
        q: &ConjunctiveQuery,
        tcs: &TCSet,
        extra: usize,
        max_facts_per_relation: usize,
        max_body_atoms: usize,
    ) -> EnumerationBounds {
        let mut names: BTreeSet<String> = q.constants();
        names.extend(tcs.constants());
        let mut fresh = 0usize;
        let mut added = 0usize;
        while added < extra {
            let name = format!("k{}", fresh);
            fresh += 1;
            if names.insert(name) {
                added += 1;
            }
        }
        EnumerationBounds {
            constants: names.into_iter().map(Term::Constant).collect(),
            max_facts_per_relation,
            max_body_atoms,
        }
    }
}

/// A counterexample instance: for completeness, an ideal state whose
/// smallest satisfying available state loses an answer; for containment,
/// an instance where the left query returns a tuple the right one misses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletenessWitness {
    pub ideal: DatabaseInstance,
    pub available: DatabaseInstance,
    pub missing: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleVerdict {
    pub holds: bool,
    pub witness: Option<CompletenessWitness>,
}

fn schema_of(q: &ConjunctiveQuery, tcs: &TCSet) -> BTreeMap<String, usize> {
    let mut schema = tcs.arities();
    for atom in q.body() {
        schema.insert(atom.relation.clone(), atom.arity());
    }
    schema
}

/// All ground atoms of one relation over the constant pool.
fn relation_universe(relation: &str, arity: usize, pool: &[Term]) -> Vec<Atom> {
    if pool.is_empty() {
        return Vec::new();
    }
    let mut facts = Vec::new();
    let mut tuple = vec![0usize; arity];
    loop {
        facts.push(Atom::new(
            relation.to_string(),
            tuple.iter().map(|&i| pool[i].clone()).collect(),
        ));
        let mut pos = 0;
        while pos < arity {
            tuple[pos] += 1;
            if tuple[pos] < pool.len() {
                break;
            }
            tuple[pos] = 0;
            pos += 1;
        }
        if pos == arity {
            break;
        }
    }
    facts
}

/// Subsets of at most `cap` facts, smallest first.
fn bounded_subsets(universe: &[Atom], cap: usize) -> Vec<Vec<Atom>> {
    let mut subsets: Vec<Vec<Atom>> = vec![Vec::new()];
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..cap {
        let mut next: Vec<Vec<usize>> = Vec::new();
        for combo in &frontier {
            let start = combo.last().map(|&i| i + 1).unwrap_or(0);
            for i in start..universe.len() {
                let mut extended = combo.clone();
                extended.push(i);
                next.push(extended);
            }
        }
        subsets.extend(
            next.iter()
                .map(|combo| combo.iter().map(|&i| universe[i].clone()).collect()),
        );
        frontier = next;
    }
    subsets
}

/// Walks every instance combining at most `cap` facts per relation,
/// in ascending total size, until the visitor reports a hit.
fn for_each_instance(
    schema: &BTreeMap<String, usize>,
    pool: &[Term],
    cap: usize,
    mut visit: impl FnMut(&DatabaseInstance) -> bool,
) -> Result<bool, Error> {
    let universes: Vec<Vec<Atom>> = schema
        .iter()
        .map(|(rel, &arity)| relation_universe(rel, arity, pool))
        .collect();
    let estimate: f64 = universes
        .iter()
        .map(|u| {
            (0..=cap.min(u.len()))
                .map(|j| binomial(u.len(), j))
                .sum::<f64>()
        })
        .product();
    if estimate > MAX_INSTANCES {
        return Err(Error::BoundsTooLarge {
            estimate: estimate as u64,
            limit: MAX_INSTANCES as u64,
        });
    }
    let per_relation: Vec<Vec<Vec<Atom>>> = universes
        .iter()
        .map(|u| bounded_subsets(u, cap))
        .collect();

    fn cartesian(
        per_relation: &[Vec<Vec<Atom>>],
        acc: &mut Vec<Atom>,
        visit: &mut dyn FnMut(&DatabaseInstance) -> bool,
    ) -> bool {
        match per_relation.split_first() {
            None => {
                let instance = DatabaseInstance::from_atoms(acc.iter().cloned())
                    .expect("universe facts are ground");
                visit(&instance)
            }
            Some((subsets, rest)) => {
                for subset in subsets {
                    let before = acc.len();
                    acc.extend(subset.iter().cloned());
                    if cartesian(rest, acc, visit) {
                        return true;
                    }
                    acc.truncate(before);
                }
                false
            }
        }
    }

    Ok(cartesian(&per_relation, &mut Vec::new(), &mut visit))
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut result = 1.0f64;
    for i in 0..k {
        result = result * ((n - i) as f64) / ((i + 1) as f64);
    }
    result
}

/// Decides entailed completeness by enumerating ideal instances within the
/// bounds. For each ideal the smallest satisfying available state is its
/// statement reduction, so only that pair needs checking. Sound as a
/// falsifier; agreement with the engine inside the bounds is the test
/// contract.
pub fn oracle_entails_complete(
    q: &ConjunctiveQuery,
    tcs: &TCSet,
    bounds: &EnumerationBounds,
) -> Result<OracleVerdict, Error> {
    let schema = schema_of(q, tcs);
    let mut witness = None;
    for_each_instance(
        &schema,
        &bounds.constants,
        bounds.max_facts_per_relation,
        |ideal| {
            let available = tcs.apply(ideal);
            let ideal_answers = evaluate(q, ideal).expect("oracle queries are safe");
            if ideal_answers.is_empty() {
                return false;
            }
            let available_answers = evaluate(q, &available).expect("oracle queries are safe");
            for tuple in ideal_answers.iter() {
                if !available_answers.contains(tuple) {
                    witness = Some(CompletenessWitness {
                        ideal: ideal.clone(),
                        available: available.clone(),
                        missing: tuple.clone(),
                    });
                    return true;
                }
            }
            false
        },
    )?;
    Ok(OracleVerdict {
        holds: witness.is_none(),
        witness,
    })
}

/// Decides containment by enumerating instances within the bounds and
/// comparing answer sets directly.
pub fn oracle_containment(
    q: &ConjunctiveQuery,
    q2: &ConjunctiveQuery,
    bounds: &EnumerationBounds,
) -> Result<OracleVerdict, Error> {
    if q.head_arity() != q2.head_arity() {
        return Err(Error::ArityMismatch {
            left: q.head_arity(),
            right: q2.head_arity(),
        });
    }
    let mut schema = schema_of(q, &TCSet::new([]));
    for atom in q2.body() {
        schema.insert(atom.relation.clone(), atom.arity());
    }
    let mut witness = None;
    for_each_instance(
        &schema,
        &bounds.constants,
        bounds.max_facts_per_relation,
        |db| {
            let left = evaluate(q, db).expect("oracle queries are safe");
            if left.is_empty() {
                return false;
            }
            let right = evaluate(q2, db).expect("oracle queries are safe");
            for tuple in left.iter() {
                if !right.contains(tuple) {
                    witness = Some(CompletenessWitness {
                        ideal: db.clone(),
                        available: db.clone(),
                        missing: tuple.clone(),
                    });
                    return true;
                }
            }
            false
        },
    )?;
    Ok(OracleVerdict {
        holds: witness.is_none(),
        witness,
    })
}

/// All homomorphic images of `q`'s head into the candidate body: the head
/// tuples under assignments embedding `q`'s body into the candidate's.
fn head_images(q: &ConjunctiveQuery, body: &[Atom]) -> BTreeSet<Vec<Term>> {
    fn assign(
        atoms: &[Atom],
        body: &[Atom],
        bindings: &BTreeMap<String, Term>,
        found: &mut BTreeSet<BTreeMap<String, Term>>,
    ) {
        match atoms.split_first() {
            None => {
                found.insert(bindings.clone());
            }
            Some((first, rest)) => {
                'targets: for target in body {
                    if target.relation != first.relation || target.arity() != first.arity() {
                        continue;
                    }
                    let mut extended = bindings.clone();
                    for (pattern, value) in first.args.iter().zip(target.args.iter()) {
                        match pattern {
                            Term::Variable(var) => match extended.get(var) {
                                Some(bound) if bound != value => continue 'targets,
                                Some(_) => {}
                                None => {
                                    extended.insert(var.clone(), value.clone());
                                }
                            },
                            ground => {
                                if ground != value {
                                    continue 'targets;
                                }
                            }
                        }
                    }
                    assign(rest, body, &extended, found);
                }
            }
        }
    }
    let mut assignments = BTreeSet::new();
    assign(&q.body_atoms(), body, &BTreeMap::new(), &mut assignments);
    assignments
        .into_iter()
        .map(|bindings| {
            q.head()
                .iter()
                .map(|t| match t {
                    Term::Variable(v) => bindings
                        .get(v)
                        .cloned()
                        .expect("safe query binds head variables"),
                    ground => ground.clone(),
                })
                .collect()
        })
        .collect()
}

/// Ground truth for the bounded specialization search: enumerates every
/// candidate query up to `max_size` body atoms over the schema (canonical
/// variable pool, constants from the bounds), keeps the complete ones
/// contained in `q`, and reduces them to their maximal elements. Heads are
/// taken from the homomorphic images of `q`'s head, which covers exactly
/// the queries contained in `q` over each body.
pub fn oracle_specializations(
    q: &ConjunctiveQuery,
    tcs: &TCSet,
    max_size: usize,
    bounds: &EnumerationBounds,
) -> Result<Vec<ConjunctiveQuery>, Error> {
    let schema = schema_of(q, tcs);
    let max_arity = schema.values().copied().max().unwrap_or(0);
    let max_vars = max_arity * max_size;
    let term_count = max_vars + bounds.constants.len();
    let universe_estimate: f64 = schema
        .values()
        .map(|&a| (term_count as f64).powi(a as i32))
        .sum();
    if universe_estimate.powi(max_size.max(1) as i32) > MAX_CANDIDATE_ESTIMATE {
        return Err(Error::BoundsTooLarge {
            estimate: universe_estimate as u64,
            limit: MAX_CANDIDATE_ESTIMATE as u64,
        });
    }

    let schema: Vec<(String, usize)> = schema.into_iter().collect();
    let mut maximal: Vec<ConjunctiveQuery> = Vec::new();
    let mut seen_bodies: BTreeSet<Vec<Atom>> = BTreeSet::new();
    let mut consider = |body: &BTreeSet<Atom>| -> Result<(), Error> {
        let atoms: Vec<Atom> = body.iter().cloned().collect();
        for head in head_images(q, &atoms) {
            let candidate =
                ConjunctiveQuery::new(q.name().to_string(), head, atoms.iter().cloned())
                    .expect("head images are safe by construction");
            if !is_complete(&candidate, tcs)? {
                continue;
            }
            if maximal
                .iter()
                .any(|existing| contained(&candidate, existing).unwrap_or(false))
            {
                continue;
            }
            maximal.retain(|existing| !contained(existing, &candidate).unwrap_or(false));
            maximal.push(candidate);
        }
        Ok(())
    };

    // Depth-first growth of candidate bodies with canonical variable
    // introduction. Bodies reachable along several orders are expanded once.
    fn grow(
        body: &mut BTreeSet<Atom>,
        used_vars: usize,
        schema: &[(String, usize)],
        consts: &[Term],
        max_size: usize,
        max_vars: usize,
        seen: &mut BTreeSet<Vec<Atom>>,
        consider: &mut dyn FnMut(&BTreeSet<Atom>) -> Result<(), Error>,
    ) -> Result<(), Error> {
        consider(body)?;
        if body.len() == max_size {
            return Ok(());
        }
        for (relation, arity) in schema {
            let mut args = vec![Term::Constant(String::new()); *arity];
            extend_args(
                body, relation, *arity, 0, used_vars, &mut args, schema, consts, max_size,
                max_vars, seen, consider,
            )?;
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn extend_args(
        body: &mut BTreeSet<Atom>,
        relation: &str,
        arity: usize,
        position: usize,
        next_var: usize,
        args: &mut Vec<Term>,
        schema: &[(String, usize)],
        consts: &[Term],
        max_size: usize,
        max_vars: usize,
        seen: &mut BTreeSet<Vec<Atom>>,
        consider: &mut dyn FnMut(&BTreeSet<Atom>) -> Result<(), Error>,
    ) -> Result<(), Error> {
        if position == arity {
            let atom = Atom::new(relation.to_string(), args.clone());
            if body.contains(&atom) {
                return Ok(());
            }
            body.insert(atom.clone());
            let key: Vec<Atom> = body.iter().cloned().collect();
            if seen.insert(key) {
                grow(body, next_var, schema, consts, max_size, max_vars, seen, consider)?;
            }
            body.remove(&atom);
            return Ok(());
        }
        // Existing variables, then at most one new one, then constants.
        for i in 0..next_var {
            args[position] = Term::Variable(var_name(i));
            extend_args(
                body, relation, arity, position + 1, next_var, args, schema, consts,
                max_size, max_vars, seen, consider,
            )?;
        }
        if next_var < max_vars {
            args[position] = Term::Variable(var_name(next_var));
            extend_args(
                body, relation, arity, position + 1, next_var + 1, args, schema, consts,
                max_size, max_vars, seen, consider,
            )?;
        }
        for constant in consts {
            args[position] = constant.clone();
            extend_args(
                body, relation, arity, position + 1, next_var, args, schema, consts,
                max_size, max_vars, seen, consider,
            )?;
        }
        Ok(())
    }

    let mut body = BTreeSet::new();
    grow(
        &mut body,
        0,
        &schema,
        &bounds.constants,
        max_size,
        max_vars,
        &mut seen_bodies,
        &mut consider,
    )?;
    maximal.sort_by_key(|q| (q.body_size(), q.canonical_form().to_string()));
    Ok(maximal)
}

fn var_name(index: usize) -> String {
    format!("V{:02}", index)
}
