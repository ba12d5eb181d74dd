//! Terms, atoms, substitutions and syntactic unification.
//!
//! The term language is flat: no function symbols, so a term is a variable,
//! a constant, or a frozen variable. Frozen terms behave like constants and
//! exist only inside engine-internal database instances; user input can never
//! contain them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::Error;

/// A term of the flat relational language.
///
/// `Frozen(x)` is the frozen version of variable `x`: a fresh constant that
/// remembers which variable it came from, so freezing can be undone.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Variable(String),
    Constant(String),
    Frozen(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Variable(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Term {
        Term::Constant(name.into())
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, Term::Variable(_))
    }

    pub fn is_ground(&self) -> bool {
        !self.is_variable()
    }
}

/// True when the constant can be printed without quotes.
fn bare_constant(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {
            chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
        }
        Some(c) if c.is_ascii_digit() => name.chars().all(|c| c.is_ascii_digit()),
        _ => false,
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Variable(name) => write!(f, "{}", name),
            Term::Constant(name) => {
                if bare_constant(name) {
                    write!(f, "{}", name)
                } else {
                    write!(f, "'{}'", name)
                }
            }
            Term::Frozen(name) => write!(f, "~{}", name),
        }
    }
}

/// A relational atom `R(t1,...,tn)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub relation: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(relation: impl Into<String>, args: Vec<Term>) -> Atom {
        Atom {
            relation: relation.into(),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    /// Variable names occurring in the atom, in argument order.
    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| match t {
            Term::Variable(name) => Some(name.as_str()),
            _ => None,
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, arg) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", arg)?;
        }
        write!(f, ")")
    }
}

/// A finite map from variable names to terms.
///
/// Substitutions are normalized at construction: chains `X -> Y -> t` are
/// resolved, variable cycles collapse onto their lexicographically least
/// member, and identity bindings are dropped. A normalized substitution is
/// idempotent, so applying it twice equals applying it once.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Substitution {
    bindings: BTreeMap<String, Term>,
}

impl Substitution {
    pub fn identity() -> Substitution {
        Substitution::default()
    }

    pub fn new(bindings: impl IntoIterator<Item = (String, Term)>) -> Substitution {
        let raw: BTreeMap<String, Term> = bindings.into_iter().collect();
        let mut memo: BTreeMap<String, Term> = BTreeMap::new();
        for var in raw.keys() {
            resolve_chain(var, &raw, &mut memo, &mut Vec::new());
        }
        memo.retain(|var, term| !matches!(term, Term::Variable(w) if w == var));
        Substitution { bindings: memo }
    }

    pub fn is_identity(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.bindings.get(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Term)> {
        self.bindings.iter().map(|(v, t)| (v.as_str(), t))
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Keep only bindings for the given variables.
    pub fn restrict(&self, vars: &BTreeSet<String>) -> Substitution {
        Substitution {
            bindings: self
                .bindings
                .iter()
                .filter(|(v, _)| vars.contains(*v))
                .map(|(v, t)| (v.clone(), t.clone()))
                .collect(),
        }
    }

    pub fn apply_term(&self, term: &Term) -> Term {
        match term {
            Term::Variable(name) => self.bindings.get(name).cloned().unwrap_or_else(|| term.clone()),
            _ => term.clone(),
        }
    }

    pub fn apply_tuple(&self, terms: &[Term]) -> Vec<Term> {
        terms.iter().map(|t| self.apply_term(t)).collect()
    }

    pub fn apply_atom(&self, atom: &Atom) -> Atom {
        Atom {
            relation: atom.relation.clone(),
            args: self.apply_tuple(&atom.args),
        }
    }

    pub fn apply_atoms<'a>(&self, atoms: impl IntoIterator<Item = &'a Atom>) -> Vec<Atom> {
        atoms.into_iter().map(|a| self.apply_atom(a)).collect()
    }

    /// Composition: applying the result equals applying `inner` first and
    /// then `outer`. On its own domain `inner` wins. The composed map is
    /// not chain-resolved: a variable may be bound while also appearing in
    /// another binding's value (simultaneous replacement semantics), which
    /// is exactly what keeps the double-application law exact.
    pub fn compose(outer: &Substitution, inner: &Substitution) -> Substitution {
        let mut bindings: BTreeMap<String, Term> = BTreeMap::new();
        for (var, term) in &inner.bindings {
            bindings.insert(var.clone(), outer.apply_term(term));
        }
        for (var, term) in &outer.bindings {
            bindings.entry(var.clone()).or_insert_with(|| term.clone());
        }
        bindings.retain(|var, term| !matches!(term, Term::Variable(w) if w == var));
        Substitution { bindings }
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (var, term)) in self.bindings.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{} -> {}", var, term)?;
        }
        write!(f, "}}")
    }
}

fn resolve_chain(
    var: &str,
    raw: &BTreeMap<String, Term>,
    memo: &mut BTreeMap<String, Term>,
    path: &mut Vec<String>,
) -> Term {
    if let Some(term) = memo.get(var) {
        return term.clone();
    }
    if let Some(pos) = path.iter().position(|p| p == var) {
        // Variable cycle: every member collapses onto the least name.
        let rep = path[pos..].iter().min().unwrap().clone();
        for member in &path[pos..] {
            memo.insert(member.clone(), Term::Variable(rep.clone()));
        }
        return Term::Variable(rep);
    }
    let result = match raw.get(var) {
        None => Term::Variable(var.to_string()),
        Some(Term::Variable(next)) => {
            path.push(var.to_string());
            let r = resolve_chain(next, raw, memo, path);
            path.pop();
            r
        }
        Some(term) => term.clone(),
    };
    memo.entry(var.to_string()).or_insert_with(|| result.clone());
    result
}

/// A finite set of ground atoms.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct DatabaseInstance {
    facts: BTreeSet<Atom>,
}

impl DatabaseInstance {
    pub fn new() -> DatabaseInstance {
        DatabaseInstance::default()
    }

    /// Builds an instance, rejecting non-ground atoms.
    pub fn from_atoms(atoms: impl IntoIterator<Item = Atom>) -> Result<DatabaseInstance, Error> {
        let mut facts = BTreeSet::new();
        for atom in atoms {
            if !atom.is_ground() {
                return Err(Error::NonGroundFact {
                    atom: atom.to_string(),
                });
            }
            facts.insert(atom);
        }
        Ok(DatabaseInstance { facts })
    }

    /// Internal constructor for atoms that are ground by construction.
    pub(crate) fn from_ground(facts: BTreeSet<Atom>) -> DatabaseInstance {
        debug_assert!(facts.iter().all(Atom::is_ground));
        DatabaseInstance { facts }
    }

    pub fn insert(&mut self, atom: Atom) -> Result<bool, Error> {
        if !atom.is_ground() {
            return Err(Error::NonGroundFact {
                atom: atom.to_string(),
            });
        }
        Ok(self.facts.insert(atom))
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.facts.contains(atom)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Atom> {
        self.facts.iter()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn is_subset(&self, other: &DatabaseInstance) -> bool {
        self.facts.is_subset(&other.facts)
    }

    pub fn union(&self, other: &DatabaseInstance) -> DatabaseInstance {
        DatabaseInstance {
            facts: self.facts.union(&other.facts).cloned().collect(),
        }
    }
}

impl FromIterator<Atom> for DatabaseInstance {
    /// Collects ground atoms; panics on a variable. Use `from_atoms` for
    /// unchecked input.
    fn from_iter<I: IntoIterator<Item = Atom>>(iter: I) -> Self {
        DatabaseInstance::from_atoms(iter).expect("non-ground atom in database instance")
    }
}

/// Freezes each variable `X` into `Frozen(X)`, yielding a ground instance.
pub fn freeze(atoms: &[Atom]) -> DatabaseInstance {
    let facts = atoms
        .iter()
        .map(|atom| Atom {
            relation: atom.relation.clone(),
            args: freeze_terms(&atom.args),
        })
        .collect();
    DatabaseInstance::from_ground(facts)
}

pub fn freeze_terms(terms: &[Term]) -> Vec<Term> {
    terms
        .iter()
        .map(|t| match t {
            Term::Variable(name) => Term::Frozen(name.clone()),
            other => other.clone(),
        })
        .collect()
}

/// Inverse of `freeze`: each `Frozen(X)` becomes variable `X` again.
pub fn unfreeze(instance: &DatabaseInstance) -> Vec<Atom> {
    instance
        .iter()
        .map(|atom| Atom {
            relation: atom.relation.clone(),
            args: atom
                .args
                .iter()
                .map(|t| match t {
                    Term::Frozen(name) => Term::Variable(name.clone()),
                    other => other.clone(),
                })
                .collect(),
        })
        .collect()
}

/// Most general unifier of a system of atom equations.
///
/// Terms are flat, so unification is union-find over variable classes with
/// at most one ground term per class. Within a class the representative is
/// the ground term if present, otherwise the lexicographically least
/// variable. Returns `None` when relations or arities differ or a class
/// would hold two distinct ground terms.
pub fn mgu(equations: &[(Atom, Atom)]) -> Option<Substitution> {
    let mut pairs = Vec::new();
    for (left, right) in equations {
        if left.relation != right.relation || left.arity() != right.arity() {
            return None;
        }
        for (a, b) in left.args.iter().zip(right.args.iter()) {
            pairs.push((a.clone(), b.clone()));
        }
    }
    mgu_terms(&pairs)
}

/// Most general unifier of term equations; see [`mgu`].
pub fn mgu_terms(equations: &[(Term, Term)]) -> Option<Substitution> {
    let mut uf = UnionFind::new();
    for (a, b) in equations {
        match (a, b) {
            (Term::Variable(x), Term::Variable(y)) => uf.union_vars(x, y)?,
            (Term::Variable(x), ground) | (ground, Term::Variable(x)) => {
                uf.bind_ground(x, ground)?
            }
            (ga, gb) => {
                if ga != gb {
                    return None;
                }
            }
        }
    }
    Some(uf.into_substitution())
}

struct UnionFind {
    index: BTreeMap<String, usize>,
    names: Vec<String>,
    parent: Vec<usize>,
    ground: Vec<Option<Term>>,
}

impl UnionFind {
    fn new() -> UnionFind {
        UnionFind {
            index: BTreeMap::new(),
            names: Vec::new(),
            parent: Vec::new(),
            ground: Vec::new(),
        }
    }

    fn slot(&mut self, var: &str) -> usize {
        if let Some(&i) = self.index.get(var) {
            return i;
        }
        let i = self.parent.len();
        self.index.insert(var.to_string(), i);
        self.names.push(var.to_string());
        self.parent.push(i);
        self.ground.push(None);
        i
    }

    fn root(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union_vars(&mut self, x: &str, y: &str) -> Option<()> {
        let (xi, yi) = (self.slot(x), self.slot(y));
        let (rx, ry) = (self.root(xi), self.root(yi));
        if rx == ry {
            return Some(());
        }
        match (self.ground[rx].take(), self.ground[ry].take()) {
            (Some(a), Some(b)) if a != b => return None,
            (a, b) => self.ground[ry] = a.or(b),
        }
        self.parent[rx] = ry;
        Some(())
    }

    fn bind_ground(&mut self, x: &str, term: &Term) -> Option<()> {
        let xi = self.slot(x);
        let r = self.root(xi);
        match &self.ground[r] {
            Some(existing) if existing != term => None,
            Some(_) => Some(()),
            None => {
                self.ground[r] = Some(term.clone());
                Some(())
            }
        }
    }

    fn into_substitution(mut self) -> Substitution {
        let count = self.parent.len();
        let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..count {
            let r = self.root(i);
            classes.entry(r).or_default().push(i);
        }
        let mut raw = BTreeMap::new();
        for (root, members) in classes {
            let target = match &self.ground[root] {
                Some(term) => term.clone(),
                None => {
                    let least = members
                        .iter()
                        .map(|&i| self.names[i].as_str())
                        .min()
                        .unwrap();
                    Term::Variable(least.to_string())
                }
            };
            for &i in &members {
                if Term::Variable(self.names[i].clone()) != target {
                    raw.insert(self.names[i].clone(), target.clone());
                }
            }
        }
        Substitution::new(raw)
    }
}
