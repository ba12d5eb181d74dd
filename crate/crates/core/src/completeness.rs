//! Table-completeness statements and the completeness decision procedure.
//!
//! A statement `complete R(s) ; G` asserts that the available database holds
//! every ideal `R`-tuple matching `s` that joins with `G`. The `apply_tcset`
//! operator maps an ideal instance to the facts those statements guarantee,
//! and a query is complete precisely when its frozen head tuple survives
//! evaluation over the reduced canonical database.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::query::{evaluate, ConjunctiveQuery};
use crate::term::{Atom, DatabaseInstance, Term};
use crate::Error;

/// A table-completeness statement: head atom plus a (possibly empty)
/// condition conjunction. An empty condition is the statement's "true".
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TCStatement {
    label: Option<String>,
    head: Atom,
    condition: BTreeSet<Atom>,
}

impl TCStatement {
    pub fn new(head: Atom, condition: impl IntoIterator<Item = Atom>) -> TCStatement {
        TCStatement {
            label: None,
            head,
            condition: condition.into_iter().collect(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> TCStatement {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn head(&self) -> &Atom {
        &self.head
    }

    pub fn condition(&self) -> &BTreeSet<Atom> {
        &self.condition
    }

    /// Variable names occurring anywhere in the statement.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut vars: BTreeSet<String> = self.head.variables().map(String::from).collect();
        for atom in &self.condition {
            vars.extend(atom.variables().map(String::from));
        }
        vars
    }

    /// Total number of atoms, counting an empty condition as one unit.
    pub(crate) fn atom_count(&self) -> usize {
        1 + self.condition.len().max(1)
    }

    /// The associated query: head terms over the head atom joined with the
    /// condition. Always safe, since the head atom is part of the body.
    pub fn tc_query(&self) -> ConjunctiveQuery {
        let name = self.label.clone().unwrap_or_else(|| "tc".to_string());
        let mut body = vec![self.head.clone()];
        body.extend(self.condition.iter().cloned());
        ConjunctiveQuery::new(name, self.head.args.clone(), body)
            .expect("statement query is safe by construction")
    }

    /// The facts this statement guarantees available when `db` is the ideal
    /// state: one head-relation fact per answer of the associated query.
    pub fn apply(&self, db: &DatabaseInstance) -> DatabaseInstance {
        let answers =
            evaluate(&self.tc_query(), db).expect("statement query is safe by construction");
        DatabaseInstance::from_atoms(
            answers
                .iter()
                .map(|tuple| Atom::new(self.head.relation.clone(), tuple.clone())),
        )
        .expect("answers over a ground instance are ground")
    }
}

impl fmt::Display for TCStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "complete {}", self.head)?;
        if !self.condition.is_empty() {
            write!(f, " ; ")?;
            for (i, atom) in self.condition.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", atom)?;
            }
        }
        write!(f, ".")
    }
}

/// A set of table-completeness statements.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TCSet {
    statements: Vec<TCStatement>,
}

impl TCSet {
    pub fn new(statements: impl IntoIterator<Item = TCStatement>) -> TCSet {
        TCSet {
            statements: statements.into_iter().collect(),
        }
    }

    pub fn statements(&self) -> &[TCStatement] {
        &self.statements
    }

    pub fn iter(&self) -> impl Iterator<Item = &TCStatement> {
        self.statements.iter()
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    /// All relation names occurring anywhere in the statements.
    pub fn signature(&self) -> BTreeSet<String> {
        let mut rels = BTreeSet::new();
        for stmt in &self.statements {
            rels.insert(stmt.head.relation.clone());
            for atom in &stmt.condition {
                rels.insert(atom.relation.clone());
            }
        }
        rels
    }

    /// Arity of each relation in the signature, read off the statements.
    pub fn arities(&self) -> BTreeMap<String, usize> {
        let mut arities = BTreeMap::new();
        for stmt in &self.statements {
            arities.insert(stmt.head.relation.clone(), stmt.head.arity());
            for atom in &stmt.condition {
                arities.insert(atom.relation.clone(), atom.arity());
            }
        }
        arities
    }

    /// Constant names occurring anywhere in the statements.
    pub fn constants(&self) -> BTreeSet<String> {
        let mut consts = BTreeSet::new();
        for stmt in &self.statements {
            for term in stmt
                .head
                .args
                .iter()
                .chain(stmt.condition.iter().flat_map(|a| a.args.iter()))
            {
                if let Term::Constant(c) = term {
                    consts.insert(c.clone());
                }
            }
        }
        consts
    }

    /// Total atom count across all statements, empty conditions counting as
    /// one unit each. This is the statement-size measure used by the MCS
    /// size bound.
    pub fn total_atom_count(&self) -> usize {
        self.statements.iter().map(TCStatement::atom_count).sum()
    }

    /// Union of the per-statement guarantees; always a subset of `db`.
    pub fn apply(&self, db: &DatabaseInstance) -> DatabaseInstance {
        let mut result = DatabaseInstance::new();
        for stmt in &self.statements {
            result = result.union(&stmt.apply(db));
        }
        result
    }

    /// The relation-level dependency graph: an edge from the head relation
    /// of a statement to each relation in its condition.
    pub fn dependency_graph(&self) -> DependencyGraph {
        let mut edges = BTreeSet::new();
        for stmt in &self.statements {
            for atom in &stmt.condition {
                edges.insert((stmt.head.relation.clone(), atom.relation.clone()));
            }
        }
        DependencyGraph {
            nodes: self.signature(),
            edges,
        }
    }

    pub fn is_acyclic(&self) -> bool {
        self.dependency_graph().is_acyclic()
    }
}

/// Directed graph over relation names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    pub nodes: BTreeSet<String>,
    pub edges: BTreeSet<(String, String)>,
}

impl DependencyGraph {
    pub fn is_acyclic(&self) -> bool {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Unseen,
            Active,
            Done,
        }
        let mut marks: BTreeMap<&str, Mark> =
            self.nodes.iter().map(|n| (n.as_str(), Mark::Unseen)).collect();
        let mut successors: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (from, to) in &self.edges {
            successors.entry(from.as_str()).or_default().push(to.as_str());
        }
        fn visit<'a>(
            node: &'a str,
            marks: &mut BTreeMap<&'a str, Mark>,
            successors: &BTreeMap<&'a str, Vec<&'a str>>,
        ) -> bool {
            match marks.get(node).copied().unwrap_or(Mark::Done) {
                Mark::Active => return false,
                Mark::Done => return true,
                Mark::Unseen => {}
            }
            marks.insert(node, Mark::Active);
            if let Some(next) = successors.get(node) {
                for succ in next {
                    if !visit(succ, marks, successors) {
                        return false;
                    }
                }
            }
            marks.insert(node, Mark::Done);
            true
        }
        let nodes: Vec<&str> = self.nodes.iter().map(String::as_str).collect();
        nodes.iter().all(|n| visit(n, &mut marks, &successors))
    }
}

/// A pair of instances with the available state included in the ideal one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncompleteDatabase {
    ideal: DatabaseInstance,
    available: DatabaseInstance,
}

impl IncompleteDatabase {
    pub fn new(
        ideal: DatabaseInstance,
        available: DatabaseInstance,
    ) -> Result<IncompleteDatabase, Error> {
        if !available.is_subset(&ideal) {
            return Err(Error::AvailableNotIncluded);
        }
        Ok(IncompleteDatabase { ideal, available })
    }

    pub fn ideal(&self) -> &DatabaseInstance {
        &self.ideal
    }

    pub fn available(&self) -> &DatabaseInstance {
        &self.available
    }

    /// Statement satisfaction: the guaranteed facts of the ideal state are
    /// all available.
    pub fn satisfies(&self, stmt: &TCStatement) -> bool {
        stmt.apply(&self.ideal).is_subset(&self.available)
    }

    pub fn satisfies_all(&self, tcs: &TCSet) -> bool {
        tcs.iter().all(|stmt| self.satisfies(stmt))
    }
}

/// Entailed completeness: the frozen head tuple of `q` is an answer of `q`
/// over the statement-reduced canonical database.
pub fn is_complete(q: &ConjunctiveQuery, tcs: &TCSet) -> Result<bool, Error> {
    if !q.is_safe() {
        return Err(Error::UnsafeQuery {
            query: q.name().to_string(),
        });
    }
    let reduced = tcs.apply(&q.canonical_db());
    let answers = evaluate(q, &reduced)?;
    Ok(answers.contains(&q.frozen_head()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use proptest::prelude::*;

    fn v(name: &str) -> Term {
        Term::var(name)
    }

    fn c(name: &str) -> Term {
        Term::constant(name)
    }

    fn atom(rel: &str, args: &[Term]) -> Atom {
        Atom::new(rel, args.to_vec())
    }

    #[test]
    fn tc_query_of_unconditional_statement() {
        let q = c_sp().tc_query();
        assert_eq!(q.head(), &[v("S"), c("primary"), v("D")]);
        assert_eq!(q.body_size(), 1);
        assert!(q
            .body()
            .contains(&atom("school", &[v("S"), c("primary"), v("D")])));
    }

    #[test]
    fn tc_query_joins_head_and_condition() {
        let q = c_pb().tc_query();
        assert_eq!(q.head(), &[v("N"), v("C"), v("S")]);
        assert_eq!(q.body_size(), 2);
        assert!(q
            .body()
            .contains(&atom("school", &[v("S"), v("T"), c("merano")])));
    }

    #[test]
    fn tc_query_with_empty_condition_is_just_the_head() {
        let stmt = TCStatement::new(atom("r", &[v("X")]), []);
        assert_eq!(stmt.tc_query().body_size(), 1);
    }

    #[test]
    fn apply_statement_selects_matching_tuples() {
        let db = DatabaseInstance::from_atoms([
            atom("school", &[c("goethe"), c("primary"), c("merano")]),
            atom("pupil", &[c("john"), c("1"), c("goethe")]),
        ])
        .unwrap();
        let schools = c_sp().apply(&db);
        assert_eq!(schools.len(), 1);
        assert!(schools.contains(&atom("school", &[c("goethe"), c("primary"), c("merano")])));

        let pupils = c_pb().apply(&db);
        assert_eq!(pupils.len(), 1);
        assert!(pupils.contains(&atom("pupil", &[c("john"), c("1"), c("goethe")])));
    }

    #[test]
    fn apply_statement_to_empty_instance() {
        assert!(c_pb().apply(&DatabaseInstance::new()).is_empty());
    }

    #[test]
    fn apply_tcset_unions_guarantees() {
        let db = DatabaseInstance::from_atoms([
            atom("school", &[c("goethe"), c("primary"), c("merano")]),
            atom("pupil", &[c("john"), c("1"), c("goethe")]),
        ])
        .unwrap();
        let reduced = TCSet::new([c_sp(), c_pb()]).apply(&db);
        assert_eq!(reduced, db);
        assert!(TCSet::new([]).apply(&db).is_empty());
    }

    #[test]
    fn satisfaction_running_example() {
        let available = DatabaseInstance::from_atoms([atom(
            "school",
            &[c("goethe"), c("primary"), c("merano")],
        )])
        .unwrap();
        let ideal = available
            .union(&DatabaseInstance::from_atoms([atom("pupil", &[c("john"), c("1"), c("goethe")])]).unwrap());
        let idb = IncompleteDatabase::new(ideal, available).unwrap();
        assert!(idb.satisfies(&c_sp()));
        assert!(!idb.satisfies(&c_pb()));
    }

    #[test]
    fn identical_states_satisfy_everything() {
        let db = DatabaseInstance::from_atoms([
            atom("school", &[c("goethe"), c("primary"), c("merano")]),
            atom("pupil", &[c("john"), c("1"), c("goethe")]),
        ])
        .unwrap();
        let idb = IncompleteDatabase::new(db.clone(), db).unwrap();
        assert!(idb.satisfies_all(&school_tcs()));
    }

    #[test]
    fn connection_statement_satisfaction() {
        let ideal = DatabaseInstance::from_atoms([
            atom("conn", &[c("a"), c("b")]),
            atom("conn", &[c("b"), c("d")]),
            atom("conn", &[c("d"), c("e")]),
        ])
        .unwrap();
        let available = DatabaseInstance::from_atoms([
            atom("conn", &[c("a"), c("b")]),
            atom("conn", &[c("b"), c("d")]),
        ])
        .unwrap();
        let idb = IncompleteDatabase::new(ideal, available).unwrap();
        assert!(idb.satisfies(&c_conn()));
    }

    #[test]
    fn available_must_be_included() {
        let ideal = DatabaseInstance::new();
        let available =
            DatabaseInstance::from_atoms([atom("conn", &[c("a"), c("b")])]).unwrap();
        assert!(IncompleteDatabase::new(ideal, available).is_err());
    }

    #[test]
    fn completeness_running_example() {
        assert!(is_complete(&q_ppb(), &school_tcs_two()).unwrap());
        assert!(!is_complete(&q_pbl(), &school_tcs()).unwrap());
        assert!(is_complete(&q_pbl_spec(), &school_tcs()).unwrap());
    }

    #[test]
    fn completeness_is_not_preserved_by_instantiation_of_redundant_queries() {
        let tcs = TCSet::new([TCStatement::new(atom("r", &[v("X"), c("a")]), [])]);
        let q = ConjunctiveQuery::new(
            "q",
            vec![v("X")],
            [atom("r", &[v("X"), c("a")]), atom("r", &[v("X"), v("Y")])],
        )
        .unwrap();
        let instantiated = ConjunctiveQuery::new(
            "q",
            vec![v("X")],
            [atom("r", &[v("X"), c("a")]), atom("r", &[v("X"), c("d")])],
        )
        .unwrap();
        assert!(is_complete(&q, &tcs).unwrap());
        assert!(!is_complete(&instantiated, &tcs).unwrap());
    }

    #[test]
    fn dependency_graph_of_school_statements() {
        let graph = school_tcs().dependency_graph();
        let edge = |a: &str, b: &str| (a.to_string(), b.to_string());
        assert!(graph.edges.contains(&edge("pupil", "school")));
        assert!(graph.edges.contains(&edge("learns", "pupil")));
        assert!(graph.edges.contains(&edge("learns", "school")));
        assert_eq!(graph.edges.len(), 3);
        assert!(school_tcs().is_acyclic());
    }

    #[test]
    fn self_loop_is_cyclic() {
        let tcs = TCSet::new([c_conn()]);
        let graph = tcs.dependency_graph();
        assert!(graph.edges.contains(&("conn".to_string(), "conn".to_string())));
        assert!(!tcs.is_acyclic());
    }

    #[test]
    fn empty_set_is_acyclic() {
        let tcs = TCSet::new([]);
        assert!(tcs.dependency_graph().edges.is_empty());
        assert!(tcs.is_acyclic());
    }

    #[test]
    fn minimal_query_shortcut_agrees() {
        // For minimal queries, completeness coincides with the canonical
        // database being contained in its own reduction.
        for (q, tcs) in [
            (q_ppb(), school_tcs_two()),
            (q_pbl(), school_tcs()),
            (q_pbl_spec(), school_tcs()),
            (q_conn(), TCSet::new([c_conn()])),
        ] {
            let minimal = q.minimize();
            let db = minimal.canonical_db();
            let shortcut = db.is_subset(&tcs.apply(&db));
            assert_eq!(is_complete(&minimal, &tcs).unwrap(), shortcut);
        }
    }

    fn arb_db() -> impl Strategy<Value = DatabaseInstance> {
        let consts = || prop::sample::select(vec!["a", "b", "d"]);
        let fact = prop_oneof![
            (consts(), consts()).prop_map(|(x, y)| Atom::new("p", vec![c(x), c(y)])),
            consts().prop_map(|x| Atom::new("s", vec![c(x)])),
        ];
        prop::collection::vec(fact, 0..7)
            .prop_map(|atoms| DatabaseInstance::from_atoms(atoms).unwrap())
    }

    fn arb_tcs() -> impl Strategy<Value = TCSet> {
        let term = || {
            prop_oneof![
                prop::sample::select(vec!["X", "Y"]).prop_map(Term::var),
                prop::sample::select(vec!["a", "b"]).prop_map(Term::constant),
            ]
        };
        let atom = prop_oneof![
            (term(), term()).prop_map(|(x, y)| Atom::new("p", vec![x, y])),
            term().prop_map(|x| Atom::new("s", vec![x])),
        ];
        let stmt = (atom.clone(), prop::collection::vec(atom, 0..2))
            .prop_map(|(head, cond)| TCStatement::new(head, cond));
        prop::collection::vec(stmt, 0..3).prop_map(TCSet::new)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn reduction_contracts(tcs in arb_tcs(), db in arb_db()) {
            prop_assert!(tcs.apply(&db).is_subset(&db));
        }

        #[test]
        fn reduction_is_monotone(tcs in arb_tcs(), db in arb_db(), extra in arb_db()) {
            let bigger = db.union(&extra);
            prop_assert!(tcs.apply(&db).is_subset(&tcs.apply(&bigger)));
        }

        #[test]
        fn reduction_is_the_smallest_satisfying_available(
            tcs in arb_tcs(),
            db in arb_db(),
            mask in prop::collection::vec(any::<bool>(), 8),
        ) {
            let reduced = tcs.apply(&db);
            let idb = IncompleteDatabase::new(db.clone(), reduced.clone()).unwrap();
            prop_assert!(idb.satisfies_all(&tcs));
            // Satisfaction of an available state is equivalent to it
            // including the reduction.
            let available = DatabaseInstance::from_atoms(
                db.iter().enumerate().filter(|(i, _)| mask[i % mask.len()]).map(|(_, f)| f.clone()),
            ).unwrap();
            let candidate = IncompleteDatabase::new(db.clone(), available.clone()).unwrap();
            prop_assert_eq!(candidate.satisfies_all(&tcs), reduced.is_subset(&available));
        }
    }
}
