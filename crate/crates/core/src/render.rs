//! Rendering of engine values in the document syntax.
//!
//! The `Display` impls on terms, atoms, statements and queries carry the
//! actual grammar; this module adds document assembly and the display
//! renaming rule: a query keeps its variable names as long as they all stem
//! from the caller's input, otherwise every variable is renamed to
//! `V0,V1,...` in first-occurrence order.

use std::collections::BTreeSet;

use crate::parse::Document;
use crate::query::{AnswerSet, ConjunctiveQuery};
use crate::term::DatabaseInstance;

/// Marker printed for empty result lists.
pub const NONE_MARKER: &str = "none";

/// Applies the display renaming rule against a set of known variable names.
pub fn presentable(q: &ConjunctiveQuery, known: &BTreeSet<String>) -> ConjunctiveQuery {
    if q.variables().is_subset(known) {
        q.clone()
    } else {
        q.canonical_form()
    }
}

pub fn render_instance(db: &DatabaseInstance) -> String {
    let mut out = String::new();
    for fact in db.iter() {
        out.push_str(&fact.to_string());
        out.push_str(".\n");
    }
    out
}

pub fn render_answers(answers: &AnswerSet) -> String {
    if answers.is_empty() {
        return format!("{}\n", NONE_MARKER);
    }
    let mut out = String::new();
    for tuple in answers.iter() {
        out.push('(');
        for (i, term) in tuple.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&term.to_string());
        }
        out.push_str(")\n");
    }
    out
}

/// Serializes a whole document; `parse` accepts the output and yields a
/// semantically equal document.
pub fn render_document(doc: &Document) -> String {
    let mut out = String::new();
    for query in doc.queries() {
        out.push_str(&query.to_string());
        out.push('\n');
    }
    for stmt in doc.statements().iter() {
        out.push_str(&stmt.to_string());
        out.push('\n');
    }
    out.push_str(&render_instance(doc.facts()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse, parse_with_options};
    use crate::query::equivalent;
    use crate::term::Term;
    use proptest::prelude::*;

    const SCHOOL: &str = "\
q_ppb(N) :- pupil(N,C,S), school(S,primary,merano).
q_pbl(N) :- pupil(N,C,S), school(S,primary,merano), learns(N,L).
complete school(S,primary,D).
complete pupil(N,C,S) ; school(S,T,merano).
complete learns(N,english) ; pupil(N,C,S), school(S,primary,D).
school(goethe,primary,merano).
pupil(john,1,goethe).
";

    #[test]
    fn school_document_roundtrips() {
        let doc = parse(SCHOOL).unwrap();
        let rendered = render_document(&doc);
        let reparsed = parse(&rendered).unwrap();
        assert_eq!(doc.queries().len(), reparsed.queries().len());
        for (a, b) in doc.queries().iter().zip(reparsed.queries()) {
            assert_eq!(a.name(), b.name());
            assert_eq!(a.head(), b.head());
            assert_eq!(a.body(), b.body());
        }
        let stmts = |d: &Document| {
            d.statements()
                .iter()
                .map(|s| (s.head().clone(), s.condition().clone()))
                .collect::<Vec<_>>()
        };
        assert_eq!(stmts(&doc), stmts(&reparsed));
        assert_eq!(doc.facts(), reparsed.facts());
    }

    #[test]
    fn frozen_terms_render_with_tilde_and_are_rejected() {
        let q = parse("q(X) :- conn(X,Y).").unwrap().query("q").unwrap().clone();
        let db = q.canonical_db();
        let rendered = render_instance(&db);
        assert!(rendered.contains("conn(~X,~Y)"));
        assert!(parse(&rendered).is_err());
    }

    #[test]
    fn quoted_constants_roundtrip() {
        let doc = parse("pupil('John Smith','1a',goethe).").unwrap();
        let rendered = render_document(&doc);
        assert_eq!(parse(&rendered).unwrap().facts(), doc.facts());
        assert!(rendered.contains("'John Smith'"));
    }

    #[test]
    fn display_renaming_kicks_in_for_fresh_variables() {
        let q = parse("q(X) :- conn(X,Y).").unwrap().query("q").unwrap().clone();
        let known = q.variables();
        assert_eq!(presentable(&q, &known), q);
        let extended = ConjunctiveQuery::new(
            "q",
            q.head().to_vec(),
            q.body_atoms().into_iter().chain([crate::term::Atom::new(
                "conn",
                vec![Term::var("F0"), Term::var("F1")],
            )]),
        )
        .unwrap();
        let shown = presentable(&extended, &known);
        assert!(shown.variables().iter().all(|v| v.starts_with('V')));
    }

    // Semantic identity of parse after render on generated documents.
    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn parse_after_render_is_semantic_identity(
            seed_atoms in prop::collection::vec(
                (prop::sample::select(vec!["p", "s"]),
                 prop::collection::vec(prop_oneof![
                     prop::sample::select(vec!["X", "Y", "Z"]).prop_map(Term::var),
                     prop::sample::select(vec!["a", "b"]).prop_map(Term::constant),
                 ], 2)),
                1..4,
            ),
            with_statement in any::<bool>(),
        ) {
            let body: Vec<crate::term::Atom> = seed_atoms
                .iter()
                .map(|(rel, args)| crate::term::Atom::new(*rel, args.clone()))
                .collect();
            let vars: Vec<String> = body
                .iter()
                .flat_map(crate::term::Atom::variables)
                .map(String::from)
                .collect();
            let head = match vars.first() {
                Some(v) => vec![Term::var(v.clone())],
                None => vec![Term::constant("a")],
            };
            let q = ConjunctiveQuery::new("g", head, body.clone()).unwrap();
            let mut text = q.to_string();
            text.push('\n');
            if with_statement {
                text.push_str(&format!("complete {} ; {}.\n", body[0], body[0]));
            }
            let doc = parse_with_options(&text, true).unwrap();
            let rendered = render_document(&doc);
            let reparsed = parse_with_options(&rendered, true).unwrap();
            let original = doc.query("g").unwrap();
            let round = reparsed.query("g").unwrap();
            prop_assert_eq!(original.body(), round.body());
            prop_assert!(equivalent(original, round).unwrap());
        }
    }
}
