use std::collections::BTreeSet;

use thiserror::Error;

use super::{Formula, Quantifier, Signature, Term};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("undeclared relation symbol `{0}`")]
    UndeclaredRelation(String),
    #[error("relation `{name}` has arity {expected} but is applied to {found} arguments")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("relation `{0}` declared with arity 0")]
    ZeroArity(String),
    #[error("symbol `{0}` declared twice")]
    DuplicateDeclaration(String),
    #[error("relation symbol `{0}` used as a term")]
    RelationAsTerm(String),
    #[error("constant `{0}` cannot be bound by a quantifier")]
    BoundConstant(String),
    #[error("variable `{0}` bound twice in one quantifier block")]
    DuplicateBoundVariable(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(usize),
    LParen,
    RParen,
    Comma,
    Dot,
    Slash,
    Bang,
    Amp,
    Pipe,
    Arrow,
    DoubleArrow,
    EqSign,
    NotEq,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("`{n}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::DoubleArrow => "`<->`".into(),
            Tok::EqSign => "`=`".into(),
            Tok::NotEq => "`!=`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, msg: String| ParseError {
        line,
        col,
        kind: ParseErrorKind::Syntax(msg),
    };
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
            {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Spanned {
                tok: Tok::Ident(s),
                line: tl,
                col: tc,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            let n = s
                .parse()
                .map_err(|_| err(tl, tc, format!("number `{s}` out of range")))?;
            out.push(Spanned {
                tok: Tok::Number(n),
                line: tl,
                col: tc,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        let (tok, len) = if rest.starts_with("<->") {
            (Tok::DoubleArrow, 3)
        } else if rest.starts_with("->") {
            (Tok::Arrow, 2)
        } else if rest.starts_with("!=") {
            (Tok::NotEq, 2)
        } else {
            let t = match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                '/' => Tok::Slash,
                '!' | '~' => Tok::Bang,
                '&' => Tok::Amp,
                '|' => Tok::Pipe,
                '=' => Tok::EqSign,
                other => return Err(err(tl, tc, format!("unexpected character `{other}`"))),
            };
            (t, 1)
        };
        i += len;
        col += len;
        out.push(Spanned {
            tok,
            line: tl,
            col: tc,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

const KEYWORDS: [&str; 6] = ["forall", "exists", "true", "false", "relation", "constant"];

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    sig: Signature,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let idx = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    fn error_here(&self, kind: ParseErrorKind) -> ParseError {
        let t = &self.toks[self.pos];
        ParseError {
            line: t.line,
            col: t.col,
            kind,
        }
    }

    fn error_at(&self, pos: usize, kind: ParseErrorKind) -> ParseError {
        let t = &self.toks[pos];
        ParseError {
            line: t.line,
            col: t.col,
            kind,
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        self.error_here(ParseErrorKind::Syntax(format!(
            "expected {wanted}, found {}",
            self.peek().describe()
        )))
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn ident(&mut self, wanted: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(wanted)),
        }
    }

    fn declared(&self, name: &str) -> bool {
        self.sig.relations.contains_key(name) || self.sig.constants.contains(name)
    }

    fn header(&mut self) -> Result<(), ParseError> {
        loop {
            match self.peek() {
                Tok::Ident(k) if k == "relation" => {
                    self.bump();
                    let at = self.pos;
                    let name = self.ident("relation name")?;
                    self.expect(Tok::Slash)?;
                    let arity = match self.bump() {
                        Tok::Number(n) => n,
                        _ => {
                            return Err(self.error_at(
                                self.pos - 1,
                                ParseErrorKind::Syntax("expected arity".into()),
                            ))
                        }
                    };
                    if arity == 0 {
                        return Err(self.error_at(at, ParseErrorKind::ZeroArity(name)));
                    }
                    if self.declared(&name) {
                        return Err(self.error_at(at, ParseErrorKind::DuplicateDeclaration(name)));
                    }
                    self.sig.relations.insert(name, arity);
                }
                Tok::Ident(k) if k == "constant" => {
                    self.bump();
                    let at = self.pos;
                    let name = self.ident("constant name")?;
                    if self.declared(&name) {
                        return Err(self.error_at(at, ParseErrorKind::DuplicateDeclaration(name)));
                    }
                    self.sig.constants.insert(name);
                }
                _ => return Ok(()),
            }
        }
    }

    fn iff(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.implies()?;
        while *self.peek() == Tok::DoubleArrow {
            self.bump();
            let rhs = self.implies()?;
            lhs = Formula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let first = self.and()?;
        if *self.peek() != Tok::Pipe {
            return Ok(first);
        }
        let mut items = vec![first];
        while *self.peek() == Tok::Pipe {
            self.bump();
            items.push(self.and()?);
        }
        Ok(Formula::Or(items))
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let first = self.unary()?;
        if *self.peek() != Tok::Amp {
            return Ok(first);
        }
        let mut items = vec![first];
        while *self.peek() == Tok::Amp {
            self.bump();
            items.push(self.unary()?);
        }
        Ok(Formula::And(items))
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Ident(k) if k == "forall" || k == "exists" => {
                self.bump();
                let kind = if k == "forall" {
                    Quantifier::Forall
                } else {
                    Quantifier::Exists
                };
                let mut vars: Vec<String> = Vec::new();
                let mut seen = BTreeSet::new();
                while *self.peek() != Tok::Dot {
                    let at = self.pos;
                    let v = self.ident("variable or `.`")?;
                    if self.sig.relations.contains_key(&v) {
                        return Err(self.error_at(at, ParseErrorKind::RelationAsTerm(v)));
                    }
                    if self.sig.constants.contains(&v) {
                        return Err(self.error_at(at, ParseErrorKind::BoundConstant(v)));
                    }
                    if !seen.insert(v.clone()) {
                        return Err(self.error_at(at, ParseErrorKind::DuplicateBoundVariable(v)));
                    }
                    vars.push(v);
                }
                if vars.is_empty() {
                    return Err(self.unexpected("at least one bound variable"));
                }
                self.bump();
                let body = self.iff()?;
                Ok(Formula::Quant {
                    kind,
                    vars,
                    body: Box::new(body),
                })
            }
            _ => self.primary(),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let at = self.pos;
        let name = self.ident("term")?;
        if self.sig.relations.contains_key(&name) {
            return Err(self.error_at(at, ParseErrorKind::RelationAsTerm(name)));
        }
        if self.sig.constants.contains(&name) {
            Ok(Term::Const(name))
        } else {
            Ok(Term::Var(name))
        }
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let f = self.iff()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(k) if k == "true" => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::Ident(k) if k == "false" => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::Ident(name) if *self.peek_at(1) == Tok::LParen => {
                let at = self.pos;
                if KEYWORDS.contains(&name.as_str()) {
                    return Err(self.unexpected("formula"));
                }
                let Some(arity) = self.sig.arity(&name) else {
                    return Err(self.error_at(at, ParseErrorKind::UndeclaredRelation(name)));
                };
                self.bump();
                self.bump();
                let mut args = Vec::new();
                if *self.peek() != Tok::RParen {
                    loop {
                        args.push(self.term()?);
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RParen)?;
                if args.len() != arity {
                    return Err(self.error_at(
                        at,
                        ParseErrorKind::ArityMismatch {
                            name,
                            expected: arity,
                            found: args.len(),
                        },
                    ));
                }
                Ok(Formula::Atom { rel: name, args })
            }
            Tok::Ident(_) => {
                let lhs = self.term()?;
                match self.peek() {
                    Tok::EqSign => {
                        self.bump();
                        Ok(Formula::Eq(lhs, self.term()?))
                    }
                    Tok::NotEq => {
                        self.bump();
                        Ok(Formula::not(Formula::Eq(lhs, self.term()?)))
                    }
                    _ => Err(self.unexpected("`=` after term")),
                }
            }
            _ => Err(self.unexpected("formula")),
        }
    }
}

/// Parses a formula file: `relation NAME/ARITY` and `constant NAME`
/// declarations followed by a single formula.
pub fn parse_formula(text: &str) -> Result<(Signature, Formula), ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        sig: Signature::new(),
    };
    p.header()?;
    let f = p.iff()?;
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("end of input"));
    }
    Ok((p.sig, f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_simple_existential() {
        let (sig, f) = parse_formula("relation P/1\nexists x. P(x)").unwrap();
        assert_eq!(sig.arity("P"), Some(1));
        assert_eq!(f, Formula::exists(&["x"], Formula::atom_vars("P", &["x"])));
    }

    #[test]
    fn undeclared_relation_reported() {
        let err = parse_formula("relation R/2\nforall x y. P(x) & Q(y) -> R(x,y)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UndeclaredRelation("P".into()));
        assert_eq!((err.line, err.col), (2, 13));
    }

    #[test]
    fn nested_blocks() {
        let (_, f) = parse_formula("relation R/3\nforall x. exists y z. R(x,y,z)").unwrap();
        let expected = Formula::forall(
            &["x"],
            Formula::exists(&["y", "z"], Formula::atom_vars("R", &["x", "y", "z"])),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn arity_and_binding_errors() {
        let e = parse_formula("relation R/2\nexists x. R(x)").unwrap_err();
        assert!(matches!(
            e.kind,
            ParseErrorKind::ArityMismatch {
                expected: 2,
                found: 1,
                ..
            }
        ));
        let e = parse_formula("relation R/2\nexists x x. R(x,x)").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DuplicateBoundVariable("x".into()));
        let e = parse_formula("relation R/0\ntrue").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::ZeroArity("R".into()));
        let e = parse_formula("relation R/1 constant R\ntrue").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DuplicateDeclaration("R".into()));
        let e = parse_formula("relation R/1 relation S/1\nexists x. S(R)").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::RelationAsTerm("R".into()));
        let e = parse_formula("constant c relation P/1\nexists c. P(c)").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::BoundConstant("c".into()));
    }

    #[test]
    fn precedence_and_scope() {
        let (_, f) = parse_formula(
            "relation P/1 relation Q/1\n# comment\nP(x) & Q(x) | !P(x) -> Q(x) -> P(x) <-> Q(x)",
        )
        .unwrap();
        let p = Formula::atom_vars("P", &["x"]);
        let q = Formula::atom_vars("Q", &["x"]);
        let expected = Formula::iff(
            Formula::implies(
                Formula::Or(vec![
                    Formula::And(vec![p.clone(), q.clone()]),
                    Formula::not(p.clone()),
                ]),
                Formula::implies(q.clone(), p.clone()),
            ),
            q.clone(),
        );
        assert_eq!(f, expected);

        let (_, f) =
            parse_formula("relation P/1 relation Q/1\nP(x) & exists y. P(y) | Q(x)").unwrap();
        let expected = Formula::And(vec![
            p.clone(),
            Formula::exists(
                &["y"],
                Formula::Or(vec![Formula::atom_vars("P", &["y"]), q.clone()]),
            ),
        ]);
        assert_eq!(f, expected);
    }

    #[test]
    fn constants_and_equality() {
        let (sig, f) =
            parse_formula("constant c relation P/1\nexists x. x = c & x != y & P(c)").unwrap();
        assert!(sig.is_constant("c"));
        let Formula::Quant { body, .. } = f else {
            panic!()
        };
        let Formula::And(items) = *body else { panic!() };
        assert_eq!(items[0], Formula::Eq(Term::var("x"), Term::constant("c")));
        assert_eq!(
            items[1],
            Formula::not(Formula::Eq(Term::var("x"), Term::var("y")))
        );
        assert_eq!(items[2], Formula::atom("P", vec![Term::constant("c")]));
    }
}
