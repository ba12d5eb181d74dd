//! Parser for the document format.
//!
//! A document is a sequence of items terminated by dots: queries
//! (`q(N) :- pupil(N,C,S), school(S,primary,merano).`), completeness
//! statements (`complete pupil(N,C,S) ; school(S,T,merano).`, with
//! `Compl(head; cond)` accepted as an alias) and ground facts
//! (`school(goethe,primary,merano).`). `%` starts a line comment. A bare
//! `true` stands for the empty conjunction. Variables start with an
//! upper-case letter; constants are lower-case names, digit runs or quoted
//! strings. The `~` prefix is reserved for frozen terms in debug output and
//! rejected on input.

use std::collections::BTreeMap;
use std::fmt;

use crate::completeness::{TCSet, TCStatement};
use crate::query::ConjunctiveQuery;
use crate::term::{Atom, DatabaseInstance, Term};

/// A positioned parse or validation error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, column: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

/// A parsed document: named queries, the statement set and ground facts,
/// all over one arity-consistent schema.
#[derive(Debug, Clone, Default)]
pub struct Document {
    queries: Vec<ConjunctiveQuery>,
    query_spans: Vec<Span>,
    statements: TCSet,
    facts: DatabaseInstance,
    schema: BTreeMap<String, usize>,
}

impl Document {
    pub fn queries(&self) -> &[ConjunctiveQuery] {
        &self.queries
    }

    pub fn query(&self, name: &str) -> Option<&ConjunctiveQuery> {
        self.queries.iter().find(|q| q.name() == name)
    }

    pub fn query_span(&self, name: &str) -> Option<Span> {
        self.queries
            .iter()
            .position(|q| q.name() == name)
            .map(|i| self.query_spans[i])
    }

    pub fn statements(&self) -> &TCSet {
        &self.statements
    }

    pub fn facts(&self) -> &DatabaseInstance {
        &self.facts
    }

    pub fn schema(&self) -> &BTreeMap<String, usize> {
        &self.schema
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Ident(String),
    Var(String),
    Quoted(String),
    Number(String),
    LParen,
    RParen,
    Comma,
    Semi,
    Dot,
    Turnstile,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Ident(s) | Token::Var(s) | Token::Number(s) => write!(f, "'{}'", s),
            Token::Quoted(s) => write!(f, "'{}'", s),
            Token::LParen => write!(f, "'('"),
            Token::RParen => write!(f, "')'"),
            Token::Comma => write!(f, "','"),
            Token::Semi => write!(f, "';'"),
            Token::Dot => write!(f, "'.'"),
            Token::Turnstile => write!(f, "':-'"),
        }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Lexer<'a> {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn tokenize(mut self) -> Result<Vec<(Token, Span)>, ParseError> {
        let mut tokens = Vec::new();
        loop {
            while let Some(&c) = self.chars.peek() {
                if c.is_whitespace() {
                    self.bump();
                } else if c == '%' {
                    while let Some(&c) = self.chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                } else {
                    break;
                }
            }
            let span = Span {
                line: self.line,
                column: self.column,
            };
            let c = match self.chars.peek() {
                None => return Ok(tokens),
                Some(&c) => c,
            };
            let token = match c {
                '(' => {
                    self.bump();
                    Token::LParen
                }
                ')' => {
                    self.bump();
                    Token::RParen
                }
                ',' => {
                    self.bump();
                    Token::Comma
                }
                ';' => {
                    self.bump();
                    Token::Semi
                }
                '.' => {
                    self.bump();
                    Token::Dot
                }
                ':' => {
                    self.bump();
                    match self.chars.peek() {
                        Some('-') => {
                            self.bump();
                            Token::Turnstile
                        }
                        _ => {
                            return Err(ParseError::new(span.line, span.column, "expected ':-'"))
                        }
                    }
                }
                '\'' => {
                    self.bump();
                    let mut content = String::new();
                    loop {
                        match self.bump() {
                            Some('\'') => break,
                            Some(c) => content.push(c),
                            None => {
                                return Err(ParseError::new(
                                    span.line,
                                    span.column,
                                    "unterminated quoted constant",
                                ))
                            }
                        }
                    }
                    Token::Quoted(content)
                }
                '~' => {
                    return Err(ParseError::new(
                        span.line,
                        span.column,
                        "'~' marks frozen terms in engine output and cannot appear in input",
                    ))
                }
                c if c.is_ascii_digit() => {
                    let mut digits = String::new();
                    while let Some(&c) = self.chars.peek() {
                        if c.is_ascii_digit() {
                            digits.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    Token::Number(digits)
                }
                c if c.is_ascii_lowercase() || c.is_ascii_uppercase() => {
                    let upper = c.is_ascii_uppercase();
                    let mut name = String::new();
                    while let Some(&c) = self.chars.peek() {
                        if c.is_ascii_alphanumeric() || c == '_' {
                            name.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    if upper {
                        Token::Var(name)
                    } else {
                        Token::Ident(name)
                    }
                }
                other => {
                    return Err(ParseError::new(
                        span.line,
                        span.column,
                        format!("unexpected character '{}'", other),
                    ))
                }
            };
            tokens.push((token, span));
        }
    }
}

struct Parser {
    tokens: Vec<(Token, Span)>,
    pos: usize,
    allow_unsafe: bool,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn peek_ahead(&self, offset: usize) -> Option<&Token> {
        self.tokens.get(self.pos + offset).map(|(t, _)| t)
    }

    fn here(&self) -> Span {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map(|(_, s)| *s)
            .unwrap_or(Span { line: 1, column: 1 })
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        let span = self.here();
        ParseError::new(span.line, span.column, message)
    }

    fn advance(&mut self) -> Option<(Token, Span)> {
        let item = self.tokens.get(self.pos).cloned();
        if item.is_some() {
            self.pos += 1;
        }
        item
    }

    fn expect(&mut self, expected: &Token) -> Result<Span, ParseError> {
        match self.advance() {
            Some((token, span)) if token == *expected => Ok(span),
            Some((token, span)) => Err(ParseError::new(
                span.line,
                span.column,
                format!("expected {} but found {}", expected, token),
            )),
            None => Err(self.error_here(format!("expected {} but reached end of input", expected))),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.advance() {
            Some((Token::Var(name), _)) => Ok(Term::Variable(name)),
            Some((Token::Ident(name), _)) => Ok(Term::Constant(name)),
            Some((Token::Quoted(content), _)) => Ok(Term::Constant(content)),
            Some((Token::Number(digits), _)) => Ok(Term::Constant(digits)),
            Some((token, span)) => Err(ParseError::new(
                span.line,
                span.column,
                format!("expected a term but found {}", token),
            )),
            None => Err(self.error_here("expected a term but reached end of input")),
        }
    }

    fn terms(&mut self) -> Result<Vec<Term>, ParseError> {
        let mut terms = vec![self.term()?];
        while self.peek() == Some(&Token::Comma) {
            self.advance();
            terms.push(self.term()?);
        }
        Ok(terms)
    }

    /// IDENT "(" terms? ")" — empty argument lists are only legal for
    /// query heads, which the callers enforce.
    fn atom_allow_empty(&mut self) -> Result<(Atom, Span), ParseError> {
        let (relation, span) = match self.advance() {
            Some((Token::Ident(name), span)) => (name, span),
            Some((token, span)) => {
                return Err(ParseError::new(
                    span.line,
                    span.column,
                    format!("expected a relation name but found {}", token),
                ))
            }
            None => return Err(self.error_here("expected an atom but reached end of input")),
        };
        self.expect(&Token::LParen)?;
        let args = if self.peek() == Some(&Token::RParen) {
            Vec::new()
        } else {
            self.terms()?
        };
        self.expect(&Token::RParen)?;
        Ok((Atom::new(relation, args), span))
    }

    /// atom := IDENT "(" terms ")"
    fn atom(&mut self) -> Result<(Atom, Span), ParseError> {
        let (atom, span) = self.atom_allow_empty()?;
        if atom.args.is_empty() {
            return Err(ParseError::new(
                span.line,
                span.column,
                "relation atoms need at least one argument",
            ));
        }
        Ok((atom, span))
    }

    /// atoms := "true" | atom ("," atom)* — a bare `true` is the empty
    /// conjunction.
    fn atoms(&mut self) -> Result<Vec<(Atom, Span)>, ParseError> {
        if self.peek() == Some(&Token::Ident("true".to_string()))
            && self.peek_ahead(1) != Some(&Token::LParen)
        {
            self.advance();
            return Ok(Vec::new());
        }
        let mut atoms = vec![self.atom()?];
        while self.peek() == Some(&Token::Comma) {
            self.advance();
            atoms.push(self.atom()?);
        }
        Ok(atoms)
    }

    fn statement_body(&mut self) -> Result<(Atom, Span, Vec<(Atom, Span)>), ParseError> {
        let (head, span) = self.atom()?;
        let condition = if self.peek() == Some(&Token::Semi) {
            self.advance();
            self.atoms()?
        } else {
            Vec::new()
        };
        Ok((head, span, condition))
    }
}

/// Parses a document, rejecting unsafe queries.
pub fn parse(text: &str) -> Result<Document, ParseError> {
    parse_with_options(text, false)
}

/// Parses a document; with `allow_unsafe` set, unsafe queries are accepted
/// for inspection and flagged generalized.
pub fn parse_with_options(text: &str, allow_unsafe: bool) -> Result<Document, ParseError> {
    let tokens = Lexer::new(text).tokenize()?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        allow_unsafe,
    };
    let mut doc = Document::default();
    let mut statements: Vec<TCStatement> = Vec::new();
    let mut label = 1usize;

    while parser.peek().is_some() {
        match parser.peek() {
            Some(Token::Ident(kw))
                if kw == "complete" && matches!(parser.peek_ahead(1), Some(Token::Ident(_))) =>
            {
                parser.advance();
                let (head, span, condition) = parser.statement_body()?;
                parser.expect(&Token::Dot)?;
                register_statement(&mut doc, &mut statements, head, span, condition, &mut label)?;
            }
            Some(Token::Var(kw)) if kw == "Compl" && parser.peek_ahead(1) == Some(&Token::LParen) => {
                parser.advance();
                parser.expect(&Token::LParen)?;
                let (head, span, condition) = parser.statement_body()?;
                parser.expect(&Token::RParen)?;
                parser.expect(&Token::Dot)?;
                register_statement(&mut doc, &mut statements, head, span, condition, &mut label)?;
            }
            _ => {
                let (first, span) = parser.atom_allow_empty()?;
                match parser.peek() {
                    Some(Token::Turnstile) => {
                        parser.advance();
                        let body = parser.atoms()?;
                        parser.expect(&Token::Dot)?;
                        register_query(&mut parser, &mut doc, first, span, body)?;
                    }
                    Some(Token::Dot) => {
                        parser.advance();
                        if first.args.is_empty() {
                            return Err(ParseError::new(
                                span.line,
                                span.column,
                                "relation atoms need at least one argument",
                            ));
                        }
                        register_fact(&mut doc, first, span)?;
                    }
                    Some(token) => {
                        return Err(parser.error_here(format!(
                            "expected ':-' or '.' after an atom but found {}",
                            token
                        )))
                    }
                    None => {
                        return Err(parser
                            .error_here("expected ':-' or '.' after an atom but reached end of input"))
                    }
                }
            }
        }
    }
    Ok(doc)
}

fn check_arity(doc: &mut Document, atom: &Atom, span: Span) -> Result<(), ParseError> {
    match doc.schema.get(&atom.relation) {
        Some(&arity) if arity != atom.arity() => Err(ParseError::new(
            span.line,
            span.column,
            format!(
                "relation '{}' used with arity {} but previously with arity {}",
                atom.relation,
                atom.arity(),
                arity
            ),
        )),
        Some(_) => Ok(()),
        None => {
            doc.schema.insert(atom.relation.clone(), atom.arity());
            Ok(())
        }
    }
}

fn register_statement(
    doc: &mut Document,
    statements: &mut Vec<TCStatement>,
    head: Atom,
    span: Span,
    condition: Vec<(Atom, Span)>,
    label: &mut usize,
) -> Result<(), ParseError> {
    check_arity(doc, &head, span)?;
    for (atom, span) in &condition {
        check_arity(doc, atom, *span)?;
    }
    let stmt = TCStatement::new(head, condition.into_iter().map(|(a, _)| a))
        .with_label(format!("c{}", label));
    *label += 1;
    statements.push(stmt);
    doc.statements = TCSet::new(statements.iter().cloned());
    Ok(())
}

fn register_query(
    parser: &Parser,
    doc: &mut Document,
    head_atom: Atom,
    span: Span,
    body: Vec<(Atom, Span)>,
) -> Result<(), ParseError> {
    if doc.query(&head_atom.relation).is_some() {
        return Err(ParseError::new(
            span.line,
            span.column,
            format!("duplicate query name '{}'", head_atom.relation),
        ));
    }
    for (atom, span) in &body {
        check_arity(doc, atom, *span)?;
    }
    let name = head_atom.relation;
    let head = head_atom.args;
    let body_atoms = body.into_iter().map(|(a, _)| a);
    let query = if parser.allow_unsafe {
        ConjunctiveQuery::new_generalized(name, head, body_atoms)
    } else {
        ConjunctiveQuery::new(name.clone(), head, body_atoms).map_err(|_| {
            ParseError::new(
                span.line,
                span.column,
                format!("query '{}' is unsafe: a head variable is missing from the body", name),
            )
        })?
    };
    doc.queries.push(query);
    doc.query_spans.push(span);
    Ok(())
}

fn register_fact(doc: &mut Document, atom: Atom, span: Span) -> Result<(), ParseError> {
    check_arity(doc, &atom, span)?;
    if !atom.is_ground() {
        return Err(ParseError::new(
            span.line,
            span.column,
            format!("fact '{}' is not ground", atom),
        ));
    }
    doc.facts
        .insert(atom)
        .expect("groundness checked above");
    Ok(())
}
