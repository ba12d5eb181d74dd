//! Query specialization: complete unifiers, maximal complete
//! instantiations, fresh-atom extensions and the k-bounded maximal
//! specialization search, plus the acyclicity-based size bound.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;
use std::time::{Duration, Instant};

use crate::completeness::TCSet;
use crate::query::{contained, ConjunctiveQuery};
use crate::term::{mgu, Atom, Substitution, Term};
use crate::Error;

/// How one candidate was produced: for each body atom of the source query
/// (in canonical order) the chosen statement, and for each condition atom of
/// that statement the targeted body atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchChoice {
    pub assignments: Vec<AtomAssignment>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomAssignment {
    pub body_atom: usize,
    pub statement: usize,
    pub condition_targets: Vec<usize>,
}

/// Search limits for the specialization algorithms. Exhaustion is reported
/// in the result, never silently.
#[derive(Debug, Clone, Default)]
pub struct Budget {
    pub max_extensions: Option<usize>,
    pub max_unifiers: Option<usize>,
    pub time_limit: Option<Duration>,
}

struct BudgetTracker {
    budget: Budget,
    start: Instant,
    extensions: usize,
    unifiers: usize,
    exhausted: bool,
}

impl BudgetTracker {
    fn new(budget: Budget) -> BudgetTracker {
        BudgetTracker {
            budget,
            start: Instant::now(),
            extensions: 0,
            unifiers: 0,
            exhausted: false,
        }
    }

    fn out_of_time(&mut self) -> bool {
        if let Some(limit) = self.budget.time_limit {
            if self.start.elapsed() > limit {
                self.exhausted = true;
                return true;
            }
        }
        false
    }

    fn charge_extension(&mut self) -> bool {
        if self.out_of_time() {
            return false;
        }
        if let Some(max) = self.budget.max_extensions {
            if self.extensions >= max {
                self.exhausted = true;
                return false;
            }
        }
        self.extensions += 1;
        true
    }

    fn charge_unifier(&mut self) -> bool {
        if self.out_of_time() {
            return false;
        }
        if let Some(max) = self.budget.max_unifiers {
            if self.unifiers >= max {
                self.exhausted = true;
                return false;
            }
        }
        self.unifiers += 1;
        true
    }
}

/// Where a returned specialization came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    /// Number of fresh atoms in the extension that produced the query.
    pub extension_size: usize,
    /// The (extended) query the unifier was applied to.
    pub source: ConjunctiveQuery,
    pub unifier: Substitution,
    pub choice: MatchChoice,
}

/// Output of `mci` and `k_mcs`: pairwise incomparable complete
/// specializations of the input, with per-query provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecializationResult {
    pub queries: Vec<ConjunctiveQuery>,
    pub provenance: Vec<Provenance>,
    pub pruned: usize,
    pub budget_exhausted: bool,
}

/// Renames a statement's variables apart from the query and from every
/// other per-atom copy. The marker cannot occur in any query variable, and
/// the position suffix keeps copies disjoint from each other.
fn rename_marker(query_vars: &BTreeSet<String>) -> String {
    let mut marker = "__c".to_string();
    while query_vars.iter().any(|v| v.contains(&marker)) {
        marker.push('c');
    }
    marker
}

fn rename_atom(atom: &Atom, marker: &str, position: usize) -> Atom {
    Atom {
        relation: atom.relation.clone(),
        args: atom
            .args
            .iter()
            .map(|t| match t {
                Term::Variable(v) => Term::Variable(format!("{}{}{}", v, marker, position)),
                other => other.clone(),
            })
            .collect(),
    }
}

/// A per-atom matching option: a statement whose head unifies shape-wise
/// with the body atom, renamed apart.
struct MatchOption {
    statement: usize,
    head: Atom,
    conditions: Vec<Atom>,
    /// Per condition atom: body atom indices with the same relation shape.
    targets: Vec<Vec<usize>>,
}

/// Enumerates all complete unifiers of `q` and `tcs` by walking per-atom
/// statement choices and per-condition-atom target choices. Each visited
/// substitution is restricted to the query's variables, with class
/// representatives remapped onto query variables where possible. Returns
/// `false` when stopped early by the visitor or the budget.
fn enumerate_unifiers(
    q: &ConjunctiveQuery,
    tcs: &TCSet,
    tracker: &mut Option<&mut BudgetTracker>,
    visit: &mut dyn FnMut(Substitution, MatchChoice) -> ControlFlow<()>,
) -> bool {
    let body = q.body_atoms();
    let q_vars = q.variables();
    if body.is_empty() {
        // Every body atom is vacuously matched; the identity is the most
        // general complete unifier.
        return visit(Substitution::identity(), MatchChoice { assignments: vec![] })
            .is_continue();
    }
    let marker = rename_marker(&q_vars);
    let mut options: Vec<Vec<MatchOption>> = Vec::with_capacity(body.len());
    for (i, atom) in body.iter().enumerate() {
        let mut atom_options = Vec::new();
        'statements: for (si, stmt) in tcs.iter().enumerate() {
            if stmt.head().relation != atom.relation || stmt.head().arity() != atom.arity() {
                continue;
            }
            let head = rename_atom(stmt.head(), &marker, i);
            let mut conditions = Vec::new();
            let mut targets = Vec::new();
            for cond in stmt.condition() {
                let renamed = rename_atom(cond, &marker, i);
                let candidates: Vec<usize> = body
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| b.relation == renamed.relation && b.arity() == renamed.arity())
                    .map(|(j, _)| j)
                    .collect();
                if candidates.is_empty() {
                    continue 'statements;
                }
                conditions.push(renamed);
                targets.push(candidates);
            }
            atom_options.push(MatchOption {
                statement: si,
                head,
                conditions,
                targets,
            });
        }
        if atom_options.is_empty() {
            return true;
        }
        options.push(atom_options);
    }

    fn walk(
        body: &[Atom],
        options: &[Vec<MatchOption>],
        position: usize,
        equations: &mut Vec<(Atom, Atom)>,
        assignments: &mut Vec<AtomAssignment>,
        q_vars: &BTreeSet<String>,
        tracker: &mut Option<&mut BudgetTracker>,
        visit: &mut dyn FnMut(Substitution, MatchChoice) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if position == body.len() {
            if let Some(t) = tracker.as_mut() {
                if !t.charge_unifier() {
                    return ControlFlow::Break(());
                }
            }
            if let Some(gamma) = mgu(equations) {
                let projected = project_onto(&gamma, q_vars);
                return visit(
                    projected,
                    MatchChoice {
                        assignments: assignments.clone(),
                    },
                );
            }
            return ControlFlow::Continue(());
        }
        for option in &options[position] {
            equations.push((body[position].clone(), option.head.clone()));
            let mut target_choice = vec![0usize; option.conditions.len()];
            let flow = pick_targets(
                body,
                options,
                position,
                option,
                0,
                &mut target_choice,
                equations,
                assignments,
                q_vars,
                tracker,
                visit,
            );
            equations.pop();
            flow?;
        }
        ControlFlow::Continue(())
    }

    #[allow(clippy::too_many_arguments)]
    fn pick_targets(
        body: &[Atom],
        options: &[Vec<MatchOption>],
        position: usize,
        option: &MatchOption,
        cond_index: usize,
        target_choice: &mut Vec<usize>,
        equations: &mut Vec<(Atom, Atom)>,
        assignments: &mut Vec<AtomAssignment>,
        q_vars: &BTreeSet<String>,
        tracker: &mut Option<&mut BudgetTracker>,
        visit: &mut dyn FnMut(Substitution, MatchChoice) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if cond_index == option.conditions.len() {
            assignments.push(AtomAssignment {
                body_atom: position,
                statement: option.statement,
                condition_targets: target_choice.clone(),
            });
            let flow = walk(
                body,
                options,
                position + 1,
                equations,
                assignments,
                q_vars,
                tracker,
                visit,
            );
            assignments.pop();
            return flow;
        }
        for &target in &option.targets[cond_index] {
            target_choice[cond_index] = target;
            equations.push((option.conditions[cond_index].clone(), body[target].clone()));
            let flow = pick_targets(
                body,
                options,
                position,
                option,
                cond_index + 1,
                target_choice,
                equations,
                assignments,
                q_vars,
                tracker,
                visit,
            );
            equations.pop();
            flow?;
        }
        ControlFlow::Continue(())
    }

    walk(
        &body,
        &options,
        0,
        &mut Vec::new(),
        &mut Vec::new(),
        &q_vars,
        tracker,
        visit,
    )
    .is_continue()
}

/// Restricts a unifier to the query variables. When a class representative
/// is a renamed statement variable but the class holds query variables, the
/// representative is remapped onto the least of them first, so statement
/// variables never leak into the result.
fn project_onto(gamma: &Substitution, q_vars: &BTreeSet<String>) -> Substitution {
    let mut members: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
    for (var, term) in gamma.iter() {
        if let Term::Variable(rep) = term {
            members.entry(rep.clone()).or_default().insert(var);
        }
    }
    let mut rename = BTreeMap::new();
    for (rep, class) in &members {
        if !q_vars.contains(rep) {
            if let Some(least) = class.iter().filter(|m| q_vars.contains(**m)).min() {
                rename.insert(rep.clone(), Term::Variable(least.to_string()));
            }
        }
    }
    let composed = Substitution::compose(&Substitution::new(rename), gamma);
    composed.restrict(q_vars)
}

/// All complete unifiers for `q` and `tcs`, restricted to `q`'s variables.
/// The caller is expected to pass a minimal query.
pub fn complete_unifiers(q: &ConjunctiveQuery, tcs: &TCSet) -> BTreeSet<Substitution> {
    let mut unifiers = BTreeSet::new();
    enumerate_unifiers(q, tcs, &mut None, &mut |gamma, _| {
        unifiers.insert(gamma);
        ControlFlow::Continue(())
    });
    unifiers
}

/// A running set of pairwise incomparable queries. A new candidate is
/// dropped when contained in a member (equivalent candidates keep the first
/// arrival); members contained in the new candidate are evicted. The final
/// set does not depend on insertion order.
struct MaximalSet {
    items: Vec<(ConjunctiveQuery, Provenance)>,
    pruned: usize,
}

impl MaximalSet {
    fn new() -> MaximalSet {
        MaximalSet {
            items: Vec::new(),
            pruned: 0,
        }
    }

    fn insert(&mut self, q: ConjunctiveQuery, provenance: Provenance) {
        for (existing, _) in &self.items {
            if contained(&q, existing).unwrap_or(false) {
                self.pruned += 1;
                return;
            }
        }
        let before = self.items.len();
        self.items
            .retain(|(existing, _)| !contained(existing, &q).unwrap_or(false));
        self.pruned += before - self.items.len();
        self.items.push((q, provenance));
    }

    fn into_result(self, budget_exhausted: bool) -> SpecializationResult {
        let mut items = self.items;
        items.sort_by_key(|(q, _)| (q.body_size(), q.canonical_form().to_string()));
        let (queries, provenance) = items.into_iter().unzip();
        SpecializationResult {
            queries,
            provenance,
            pruned: self.pruned,
            budget_exhausted,
        }
    }
}

fn collect_instantiations(
    source: &ConjunctiveQuery,
    tcs: &TCSet,
    size_cap: Option<usize>,
    extension_size: usize,
    acc: &mut MaximalSet,
    tracker: &mut Option<&mut BudgetTracker>,
) {
    enumerate_unifiers(source, tcs, tracker, &mut |gamma, choice| {
        let candidate = source.apply(&gamma).minimize();
        if size_cap.is_none_or(|cap| candidate.body_size() <= cap) {
            acc.insert(
                candidate,
                Provenance {
                    extension_size,
                    source: source.clone(),
                    unifier: gamma,
                    choice,
                },
            );
        }
        ControlFlow::Continue(())
    });
}

/// Maximal complete instantiations of `q`: the maximal elements, under
/// containment, of the complete-unifier images, optionally restricted to
/// bodies of at most `size_cap` atoms. The input is minimized before
/// matching.
pub fn mci(
    q: &ConjunctiveQuery,
    tcs: &TCSet,
    size_cap: Option<usize>,
) -> Result<SpecializationResult, Error> {
    if !q.is_safe() {
        return Err(Error::UnsafeQuery {
            query: q.name().to_string(),
        });
    }
    let base = q.minimize();
    let mut acc = MaximalSet::new();
    collect_instantiations(&base, tcs, size_cap, 0, &mut acc, &mut None);
    Ok(acc.into_result(false))
}

/// All fresh extensions of `q` with `m` added atoms: one extension per
/// multiset of relation names from the statement signature, each added atom
/// using brand-new pairwise-distinct variables.
pub fn fresh_extensions(
    q: &ConjunctiveQuery,
    tcs: &TCSet,
    m: usize,
) -> impl Iterator<Item = ConjunctiveQuery> {
    let arities = tcs.arities();
    let relations: Vec<String> = tcs.signature().into_iter().collect();
    let mut multisets = Vec::new();
    fn build(
        relations: &[String],
        start: usize,
        remaining: usize,
        current: &mut Vec<String>,
        out: &mut Vec<Vec<String>>,
    ) {
        if remaining == 0 {
            out.push(current.clone());
            return;
        }
        for i in start..relations.len() {
            current.push(relations[i].clone());
            build(relations, i, remaining - 1, current, out);
            current.pop();
        }
    }
    build(&relations, 0, m, &mut Vec::new(), &mut multisets);

    let used = q.variables();
    let base = q.clone();
    multisets.into_iter().map(move |multiset| {
        let mut body = base.body_atoms();
        let mut next = 0usize;
        let mut fresh = || loop {
            let name = format!("F{}", next);
            next += 1;
            if !used.contains(&name) {
                return Term::Variable(name);
            }
        };
        for relation in multiset {
            let arity = arities[&relation];
            body.push(Atom::new(relation, (0..arity).map(|_| fresh()).collect()));
        }
        ConjunctiveQuery::new(base.name().to_string(), base.head().to_vec(), body)
            .expect("extending a safe query preserves safety")
    })
}

/// The k-bounded maximal complete specializations of `q`: accumulates the
/// size-capped instantiations of every fresh extension, smallest extension
/// sizes first, into a running maximal set. Budget exhaustion yields a
/// flagged partial result.
pub fn k_mcs(
    q: &ConjunctiveQuery,
    tcs: &TCSet,
    k: usize,
    budget: Budget,
) -> Result<SpecializationResult, Error> {
    if !q.is_safe() {
        return Err(Error::UnsafeQuery {
            query: q.name().to_string(),
        });
    }
    let base = q.minimize();
    let n = base.body_size();
    let cap = n + k;
    let mut tracker = BudgetTracker::new(budget);
    let mut acc = MaximalSet::new();
    'sizes: for m in 0..=cap.saturating_sub(1) {
        for extension in fresh_extensions(&base, tcs, m) {
            if !tracker.charge_extension() {
                break 'sizes;
            }
            let mut slot = Some(&mut tracker);
            collect_instantiations(&extension, tcs, Some(cap), m, &mut acc, &mut slot);
            if tracker.exhausted {
                break 'sizes;
            }
        }
    }
    let exhausted = tracker.exhausted;
    Ok(acc.into_result(exhausted))
}

/// Size bound for maximal complete specializations over an acyclic
/// statement set, and the search depth it suggests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeBound {
    pub bound: u128,
    pub suggested_k: Option<u128>,
}

/// For an acyclic statement set with `s` relation names and total atom
/// count `c`, a maximal complete specialization of `q` has at most
/// `|q| * (c + c^2 + ... + c^s)` atoms. Refuses cyclic sets.
pub fn mcs_size_bound(q: &ConjunctiveQuery, tcs: &TCSet) -> Result<SizeBound, Error> {
    if !tcs.is_acyclic() {
        return Err(Error::CyclicTcs);
    }
    let s = tcs.signature().len() as u32;
    let c = tcs.total_atom_count() as u128;
    let n = q.body_size() as u128;
    let mut sum: u128 = 0;
    for i in 1..=s {
        sum = sum.saturating_add(c.saturating_pow(i));
    }
    let bound = n.saturating_mul(sum);
    let suggested_k = if s == 0 {
        None
    } else {
        Some(bound.saturating_sub(n))
    };
    Ok(SizeBound { bound, suggested_k })
}
