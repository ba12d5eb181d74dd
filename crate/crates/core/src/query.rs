//! Conjunctive queries: evaluation, canonical databases, containment,
//! equivalence, minimization and subquery enumeration.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::term::{freeze, freeze_terms, Atom, DatabaseInstance, Substitution, Term};
use crate::Error;

/// A conjunctive query `name(head) :- body`.
///
/// The body is kept as a canonically ordered set, so printing and syntactic
/// equality are deterministic. A query is safe when every head variable
/// occurs in the body; the `generalized` flag marks queries for which safety
/// is not enforced (they arise inside the generalization fixed point and are
/// represented but never evaluated).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ConjunctiveQuery {
    name: String,
    head: Vec<Term>,
    body: BTreeSet<Atom>,
    generalized: bool,
}

impl ConjunctiveQuery {
    /// Builds a safe query; errors when a head variable is missing from the body.
    pub fn new(
        name: impl Into<String>,
        head: Vec<Term>,
        body: impl IntoIterator<Item = Atom>,
    ) -> Result<ConjunctiveQuery, Error> {
        let q = ConjunctiveQuery {
            name: name.into(),
            head,
            body: body.into_iter().collect(),
            generalized: false,
        };
        if q.is_safe() {
            Ok(q)
        } else {
            Err(Error::UnsafeQuery { query: q.name })
        }
    }

    /// Builds a generalized query: the head may use variables absent from the body.
    pub fn new_generalized(
        name: impl Into<String>,
        head: Vec<Term>,
        body: impl IntoIterator<Item = Atom>,
    ) -> ConjunctiveQuery {
        let mut q = ConjunctiveQuery {
            name: name.into(),
            head,
            body: body.into_iter().collect(),
            generalized: true,
        };
        q.generalized = !q.is_safe();
        q
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn head(&self) -> &[Term] {
        &self.head
    }

    pub fn head_arity(&self) -> usize {
        self.head.len()
    }

    pub fn body(&self) -> &BTreeSet<Atom> {
        &self.body
    }

    /// Body atoms in canonical order.
    pub fn body_atoms(&self) -> Vec<Atom> {
        self.body.iter().cloned().collect()
    }

    pub fn body_size(&self) -> usize {
        self.body.len()
    }

    pub fn is_generalized(&self) -> bool {
        self.generalized
    }

    /// Every head variable occurs in the body.
    pub fn is_safe(&self) -> bool {
        let body_vars: BTreeSet<&str> = self.body.iter().flat_map(Atom::variables).collect();
        self.head
            .iter()
            .all(|t| !matches!(t, Term::Variable(v) if !body_vars.contains(v.as_str())))
    }

    /// All variable names of the query, head and body.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut vars: BTreeSet<String> = self
            .body
            .iter()
            .flat_map(Atom::variables)
            .map(String::from)
            .collect();
        for t in &self.head {
            if let Term::Variable(v) = t {
                vars.insert(v.clone());
            }
        }
        vars
    }

    /// All constant names of the query, head and body.
    pub fn constants(&self) -> BTreeSet<String> {
        let mut consts = BTreeSet::new();
        for t in self.head.iter().chain(self.body.iter().flat_map(|a| a.args.iter())) {
            if let Term::Constant(c) = t {
                consts.insert(c.clone());
            }
        }
        consts
    }

    /// Applies a substitution to head and body.
    pub fn apply(&self, s: &Substitution) -> ConjunctiveQuery {
        let mut q = ConjunctiveQuery {
            name: self.name.clone(),
            head: s.apply_tuple(&self.head),
            body: self.body.iter().map(|a| s.apply_atom(a)).collect(),
            generalized: false,
        };
        q.generalized = !q.is_safe();
        q
    }

    pub fn with_name(&self, name: impl Into<String>) -> ConjunctiveQuery {
        let mut q = self.clone();
        q.name = name.into();
        q
    }

    /// Renames variables of a copy to `V0,V1,...` in first-occurrence order
    /// (head first, then canonical body order). Used as a cheap syntactic
    /// key: equal canonical forms imply equivalence, not vice versa.
    pub fn canonical_form(&self) -> ConjunctiveQuery {
        let mut map: BTreeMap<String, Term> = BTreeMap::new();
        let mut next = 0usize;
        let note = |t: &Term, map: &mut BTreeMap<String, Term>, next: &mut usize| {
            if let Term::Variable(v) = t {
                if !map.contains_key(v) {
                    map.insert(v.clone(), Term::Variable(format!("V{}", next)));
                    *next += 1;
                }
            }
        };
        for t in &self.head {
            note(t, &mut map, &mut next);
        }
        for atom in &self.body {
            for t in &atom.args {
                note(t, &mut map, &mut next);
            }
        }
        self.apply(&Substitution::new(map))
    }

    /// The canonical database: the body with its variables frozen.
    pub fn canonical_db(&self) -> DatabaseInstance {
        freeze(&self.body_atoms())
    }

    /// The head tuple with variables frozen.
    pub fn frozen_head(&self) -> Vec<Term> {
        freeze_terms(&self.head)
    }

    /// All `2^|body|` subqueries, sharing this query's head. Unsafe ones are
    /// flagged generalized.
    pub fn subqueries(&self) -> impl Iterator<Item = ConjunctiveQuery> + '_ {
        let atoms = self.body_atoms();
        assert!(atoms.len() < 64, "subquery enumeration limited to 63 atoms");
        let total: u64 = 1 << atoms.len();
        (0..total).map(move |mask| {
            let subset = atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, a)| a.clone());
            ConjunctiveQuery::new_generalized(self.name.clone(), self.head.clone(), subset)
        })
    }

    /// Greedy core computation: tries to drop each atom once, in canonical
    /// body order, keeping the removal when the smaller query stays
    /// equivalent. The result is a core of the input.
    pub fn minimize(&self) -> ConjunctiveQuery {
        debug_assert!(self.is_safe(), "minimize expects a safe query");
        let head_vars: BTreeSet<&str> = self
            .head
            .iter()
            .filter_map(|t| match t {
                Term::Variable(v) => Some(v.as_str()),
                _ => None,
            })
            .collect();
        let mut working = self.body.clone();
        for atom in self.body_atoms() {
            if !working.contains(&atom) {
                continue;
            }
            let mut candidate = working.clone();
            candidate.remove(&atom);
            let still_safe = head_vars.iter().all(|v| {
                candidate
                    .iter()
                    .any(|a| a.variables().any(|w| w == *v))
            });
            if !still_safe {
                continue;
            }
            let candidate_q = ConjunctiveQuery {
                name: self.name.clone(),
                head: self.head.clone(),
                body: candidate.clone(),
                generalized: false,
            };
            // The candidate's body is a subset, so `self` is contained in it
            // for free; equivalence reduces to the other direction.
            if contained(&candidate_q, self).unwrap_or(false) {
                working = candidate;
            }
        }
        ConjunctiveQuery {
            name: self.name.clone(),
            head: self.head.clone(),
            body: working,
            generalized: false,
        }
    }
}

impl fmt::Display for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, t) in self.head.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", t)?;
        }
        write!(f, ") :- ")?;
        if self.body.is_empty() {
            write!(f, "true")?;
        } else {
            for (i, atom) in self.body.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", atom)?;
            }
        }
        write!(f, ".")
    }
}

/// A set of ground answer tuples, all of the same arity.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnswerSet {
    arity: usize,
    tuples: BTreeSet<Vec<Term>>,
}

impl AnswerSet {
    pub fn new(arity: usize) -> AnswerSet {
        AnswerSet {
            arity,
            tuples: BTreeSet::new(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn insert(&mut self, tuple: Vec<Term>) {
        debug_assert_eq!(tuple.len(), self.arity);
        self.tuples.insert(tuple);
    }

    pub fn contains(&self, tuple: &[Term]) -> bool {
        self.tuples.contains(tuple)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<Term>> {
        self.tuples.iter()
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn is_subset(&self, other: &AnswerSet) -> bool {
        self.tuples.is_subset(&other.tuples)
    }
}

type Bindings = BTreeMap<String, Term>;

/// Matches an atom against a ground fact under the current bindings,
/// returning the extended bindings on success.
fn match_atom(atom: &Atom, fact: &Atom, bindings: &Bindings) -> Option<Bindings> {
    if atom.relation != fact.relation || atom.arity() != fact.arity() {
        return None;
    }
    let mut extended = bindings.clone();
    for (pattern, value) in atom.args.iter().zip(fact.args.iter()) {
        match pattern {
            Term::Variable(v) => match extended.get(v) {
                Some(bound) if bound != value => return None,
                Some(_) => {}
                None => {
                    extended.insert(v.clone(), value.clone());
                }
            },
            ground => {
                if ground != value {
                    return None;
                }
            }
        }
    }
    Some(extended)
}

/// Backtracking homomorphism search over the body atoms, candidate facts
/// indexed by relation, picking the most constrained atom first. The
/// callback returns `true` to stop after the current solution.
fn search(
    remaining: &mut Vec<Atom>,
    index: &BTreeMap<&str, Vec<&Atom>>,
    bindings: &Bindings,
    emit: &mut dyn FnMut(&Bindings) -> bool,
) -> bool {
    if remaining.is_empty() {
        return emit(bindings);
    }
    // Forward checking: count candidates per pending atom, expand the
    // scarcest one.
    let mut best: Option<(usize, Vec<Bindings>)> = None;
    for (i, atom) in remaining.iter().enumerate() {
        let empty = Vec::new();
        let facts = index.get(atom.relation.as_str()).unwrap_or(&empty);
        let extensions: Vec<Bindings> = facts
            .iter()
            .filter_map(|fact| match_atom(atom, fact, bindings))
            .collect();
        let count = extensions.len();
        if best.as_ref().map_or(true, |(_, b)| count < b.len()) {
            let done = count == 0;
            best = Some((i, extensions));
            if done {
                return false;
            }
        }
    }
    let (pick, extensions) = best.expect("non-empty remaining atoms");
    let atom = remaining.remove(pick);
    for extended in extensions {
        if search(remaining, index, &extended, emit) {
            remaining.insert(pick, atom);
            return true;
        }
    }
    remaining.insert(pick, atom);
    false
}

fn index_by_relation(db: &DatabaseInstance) -> BTreeMap<&str, Vec<&Atom>> {
    let mut index: BTreeMap<&str, Vec<&Atom>> = BTreeMap::new();
    for fact in db.iter() {
        index.entry(fact.relation.as_str()).or_default().push(fact);
    }
    index
}

/// Evaluates a safe query over an instance: the set of head instantiations
/// under assignments that embed the body into the instance. Frozen terms in
/// the instance count as ordinary domain values.
pub fn evaluate(q: &ConjunctiveQuery, db: &DatabaseInstance) -> Result<AnswerSet, Error> {
    if !q.is_safe() {
        return Err(Error::UnsafeQuery {
            query: q.name().to_string(),
        });
    }
    let index = index_by_relation(db);
    let mut answers = AnswerSet::new(q.head_arity());
    let mut atoms = q.body_atoms();
    search(&mut atoms, &index, &BTreeMap::new(), &mut |bindings| {
        let tuple: Vec<Term> = q
            .head()
            .iter()
            .map(|t| match t {
                Term::Variable(v) => bindings
                    .get(v)
                    .cloned()
                    .expect("safe query binds every head variable"),
                ground => ground.clone(),
            })
            .collect();
        answers.insert(tuple);
        false
    });
    Ok(answers)
}

/// Containment `q ⊑ q2`: a homomorphism from `q2` to `q` maps `q2`'s head
/// to `q`'s head and `q2`'s body into `q`'s canonical database. Works for
/// generalized queries on either side.
pub fn contained(q: &ConjunctiveQuery, q2: &ConjunctiveQuery) -> Result<bool, Error> {
    if q.head_arity() != q2.head_arity() {
        return Err(Error::ArityMismatch {
            left: q.head_arity(),
            right: q2.head_arity(),
        });
    }
    let db = q.canonical_db();
    let target = q.frozen_head();
    // Pin q2's head onto q's frozen head tuple.
    let mut bindings = Bindings::new();
    for (pattern, value) in q2.head().iter().zip(target.iter()) {
        match pattern {
            Term::Variable(v) => match bindings.get(v) {
                Some(bound) if bound != value => return Ok(false),
                Some(_) => {}
                None => {
                    bindings.insert(v.clone(), value.clone());
                }
            },
            ground => {
                if ground != value {
                    return Ok(false);
                }
            }
        }
    }
    let index = index_by_relation(&db);
    let mut atoms = q2.body_atoms();
    Ok(search(&mut atoms, &index, &bindings, &mut |_| true))
}

/// Mutual containment.
pub fn equivalent(q: &ConjunctiveQuery, q2: &ConjunctiveQuery) -> Result<bool, Error> {
    Ok(contained(q, q2)? && contained(q2, q)?)
}
