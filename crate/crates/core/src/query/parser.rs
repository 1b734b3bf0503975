//! Lexer and recursive-descent parser for the query language.
//!
//! ```text
//! query     := select | members | groupsOf | lineage | rollup | neighbors
//! select    := "entities" ["where" pred]
//! members   := "members" "of" STR "/" STR
//! groupsOf  := "groups" "of" ID
//! lineage   := "lineage" "of" ID dir ["depth" INT]
//! dir       := "upstream" | "downstream"
//! rollup    := "rollup" ID "via" STR
//! neighbors := "neighbors" ID ["label" STR] [dir]
//! pred      := pred ("and"|"or") pred | "not" pred | "(" pred ")" | cmp
//! cmp       := "prop" "(" STR ")" op literal
//! op        := "="|"!="|"<"|"<="|">"|">="|"contains"
//! literal   := STR | INT | REAL | "true" | "false"
//! ```
//!
//! `or` binds loosest, then `and`, then `not`; both binary operators are
//! left-associative. An ID is 32 lowercase hex digits. A REAL has digits on
//! both sides of the decimal point and no exponent.

use std::collections::BTreeSet;
use std::fmt;

use super::ast::{CmpOp, Direction, Literal, Predicate, Query};
use crate::ids::parse_raw;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub expected: BTreeSet<String>,
    pub found: String,
    pub message: Option<String>,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at {}:{}: ", self.line, self.column)?;
        if let Some(m) = &self.message {
            return write!(f, "{m}");
        }
        let expected: Vec<&str> = self.expected.iter().map(String::as_str).collect();
        write!(f, "expected {}, found {}", expected.join(" or "), self.found)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    /// Digit-led run, optionally with a sign or decimal part; interpreted by
    /// position (integer, real or identifier).
    Number(String),
    Str(String),
    Punct(&'static str),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("{w:?}"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Str(_) => "string".into(),
            Tok::Punct(p) => format!("{p:?}"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, message: String| SyntaxError {
        line,
        column,
        expected: BTreeSet::new(),
        found: String::new(),
        message: Some(message),
    };
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        let is_word = |c: char| c.is_ascii_alphanumeric() || c == '_';
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && is_word(chars[i]) {
                advance(1, &mut i, &mut col);
            }
            Tok::Word(chars[start..i].iter().collect())
        } else if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            advance(1, &mut i, &mut col);
            while i < chars.len() && is_word(chars[i]) {
                advance(1, &mut i, &mut col);
            }
            let digits_only = chars[start..i].iter().skip(usize::from(c == '-')).all(|d| d.is_ascii_digit());
            if digits_only && chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
                advance(1, &mut i, &mut col);
                while i < chars.len() && chars[i].is_ascii_digit() {
                    advance(1, &mut i, &mut col);
                }
            }
            let lexeme: String = chars[start..i].iter().collect();
            if digits_only || lexeme.contains('.') {
                Tok::Number(lexeme)
            } else {
                Tok::Word(lexeme)
            }
        } else if c == '"' {
            advance(1, &mut i, &mut col);
            let mut s = String::new();
            loop {
                let Some(&c) = chars.get(i) else {
                    return Err(err(tl, tc, "unterminated string".into()));
                };
                match c {
                    '"' => {
                        advance(1, &mut i, &mut col);
                        break;
                    }
                    '\n' => {
                        s.push('\n');
                        i += 1;
                        line += 1;
                        col = 1;
                    }
                    '\\' => {
                        let (el, ec) = (line, col);
                        let esc = chars.get(i + 1).copied();
                        advance(2, &mut i, &mut col);
                        match esc {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some('r') => s.push('\r'),
                            Some('u') if chars.get(i) == Some(&'{') => {
                                let close = chars[i..].iter().position(|&c| c == '}');
                                let decoded = close.and_then(|len| {
                                    let hex: String = chars[i + 1..i + len].iter().collect();
                                    u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32).map(|ch| (ch, len))
                                });
                                match decoded {
                                    Some((ch, len)) => {
                                        s.push(ch);
                                        advance(len + 1, &mut i, &mut col);
                                    }
                                    None => return Err(err(el, ec, "invalid \\u{...} escape".into())),
                                }
                            }
                            _ => return Err(err(el, ec, "invalid escape sequence".into())),
                        }
                    }
                    c => {
                        s.push(c);
                        advance(1, &mut i, &mut col);
                    }
                }
            }
            Tok::Str(s)
        } else {
            let two: String = chars[i..chars.len().min(i + 2)].iter().collect();
            let p = match two.as_str() {
                "!=" => "!=",
                "<=" => "<=",
                ">=" => ">=",
                _ => match c {
                    '(' => "(",
                    ')' => ")",
                    '/' => "/",
                    '=' => "=",
                    '<' => "<",
                    '>' => ">",
                    _ => return Err(err(tl, tc, format!("unexpected character {c:?}"))),
                },
            };
            advance(p.len(), &mut i, &mut col);
            Tok::Punct(p)
        };
        out.push(Token { tok, line: tl, column: tc });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    expected: BTreeSet<String>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        self.expected.clear();
        t
    }

    fn error(&self) -> SyntaxError {
        let t = self.peek();
        SyntaxError {
            line: t.line,
            column: t.column,
            expected: self.expected.clone(),
            found: t.tok.describe(),
            message: None,
        }
    }

    fn error_here(&self, message: String) -> SyntaxError {
        let t = self.peek();
        SyntaxError {
            line: t.line,
            column: t.column,
            expected: BTreeSet::new(),
            found: t.tok.describe(),
            message: Some(message),
        }
    }

    fn eat_word(&mut self, word: &str) -> bool {
        if matches!(&self.peek().tok, Tok::Word(w) if w == word) {
            self.bump();
            true
        } else {
            self.expected.insert(format!("{word:?}"));
            false
        }
    }

    fn expect_word(&mut self, word: &str) -> Result<(), SyntaxError> {
        if self.eat_word(word) {
            Ok(())
        } else {
            Err(self.error())
        }
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if matches!(&self.peek().tok, Tok::Punct(q) if *q == p) {
            self.bump();
            true
        } else {
            self.expected.insert(format!("{p:?}"));
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), SyntaxError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error())
        }
    }

    fn expect_str(&mut self) -> Result<String, SyntaxError> {
        if let Tok::Str(s) = &self.peek().tok {
            let s = s.clone();
            self.bump();
            Ok(s)
        } else {
            self.expected.insert("string".into());
            Err(self.error())
        }
    }

    fn expect_id<T: From<u128>>(&mut self) -> Result<T, SyntaxError> {
        let raw = match &self.peek().tok {
            Tok::Word(w) | Tok::Number(w) => parse_raw(w).ok(),
            _ => None,
        };
        match raw {
            Some(raw) => {
                self.bump();
                Ok(T::from(raw))
            }
            None => {
                self.expected.insert("identifier".into());
                Err(self.error())
            }
        }
    }

    fn eat_direction(&mut self) -> Option<Direction> {
        if self.eat_word("upstream") {
            Some(Direction::Upstream)
        } else if self.eat_word("downstream") {
            Some(Direction::Downstream)
        } else {
            None
        }
    }

    fn query(&mut self) -> Result<Query, SyntaxError> {
        let q = if self.eat_word("entities") {
            let predicate = if self.eat_word("where") { Some(self.pred_or()?) } else { None };
            Query::Select { predicate }
        } else if self.eat_word("members") {
            self.expect_word("of")?;
            let grouping = self.expect_str()?;
            self.expect_punct("/")?;
            let label = self.expect_str()?;
            Query::MembersOf { grouping, label }
        } else if self.eat_word("groups") {
            self.expect_word("of")?;
            Query::GroupsOf {
                entity: self.expect_id()?,
            }
        } else if self.eat_word("lineage") {
            self.expect_word("of")?;
            let entity = self.expect_id()?;
            let direction = self.eat_direction().ok_or_else(|| self.error())?;
            let depth = if self.eat_word("depth") { Some(self.depth()?) } else { None };
            Query::Lineage { entity, direction, depth }
        } else if self.eat_word("rollup") {
            let group = self.expect_id()?;
            self.expect_word("via")?;
            Query::Rollup {
                group,
                label: self.expect_str()?,
            }
        } else if self.eat_word("neighbors") {
            let entity = self.expect_id()?;
            let label = if self.eat_word("label") { Some(self.expect_str()?) } else { None };
            let direction = self.eat_direction();
            Query::Neighbors { entity, label, direction }
        } else {
            return Err(self.error());
        };
        if !matches!(self.peek().tok, Tok::Eof) {
            self.expected.insert("end of input".into());
            return Err(self.error());
        }
        Ok(q)
    }

    fn depth(&mut self) -> Result<u32, SyntaxError> {
        let Tok::Number(n) = &self.peek().tok else {
            self.expected.insert("integer".into());
            return Err(self.error());
        };
        match n.parse::<u32>() {
            Ok(d) if d >= 1 => {
                self.bump();
                Ok(d)
            }
            _ => Err(self.error_here(format!("depth must be an integer between 1 and {}", u32::MAX))),
        }
    }

    fn pred_or(&mut self) -> Result<Predicate, SyntaxError> {
        let mut left = self.pred_and()?;
        while self.eat_word("or") {
            left = left.or(self.pred_and()?);
        }
        Ok(left)
    }

    fn pred_and(&mut self) -> Result<Predicate, SyntaxError> {
        let mut left = self.pred_unary()?;
        while self.eat_word("and") {
            left = left.and(self.pred_unary()?);
        }
        Ok(left)
    }

    fn pred_unary(&mut self) -> Result<Predicate, SyntaxError> {
        if self.eat_word("not") {
            return Ok(self.pred_unary()?.negate());
        }
        if self.eat_punct("(") {
            let inner = self.pred_or()?;
            self.expect_punct(")")?;
            return Ok(inner);
        }
        self.expect_word("prop")?;
        self.expect_punct("(")?;
        let property = self.expect_str()?;
        self.expect_punct(")")?;
        let op = self.op()?;
        let value = self.literal()?;
        Ok(Predicate::Cmp { property, op, value })
    }

    fn op(&mut self) -> Result<CmpOp, SyntaxError> {
        if self.eat_word("contains") {
            return Ok(CmpOp::Contains);
        }
        for op in CmpOp::ALL.into_iter().filter(|o| *o != CmpOp::Contains) {
            if self.eat_punct(op.as_str()) {
                return Ok(op);
            }
        }
        Err(self.error())
    }

    fn literal(&mut self) -> Result<Literal, SyntaxError> {
        let lit = match &self.peek().tok {
            Tok::Str(s) => Literal::Str(s.clone()),
            Tok::Number(n) if n.contains('.') => match n.parse::<f64>() {
                Ok(x) if x.is_finite() => Literal::Real(x),
                _ => return Err(self.error_here(format!("real literal {n} is out of range"))),
            },
            Tok::Number(n) => match n.parse::<i64>() {
                Ok(i) => Literal::Int(i),
                Err(_) => return Err(self.error_here(format!("integer literal {n} is out of range"))),
            },
            Tok::Word(w) if w == "true" => Literal::Bool(true),
            Tok::Word(w) if w == "false" => Literal::Bool(false),
            _ => {
                self.expected.extend(["string", "integer", "real", "\"true\"", "\"false\""].map(String::from));
                return Err(self.error());
            }
        };
        self.bump();
        Ok(lit)
    }
}

pub fn parse_query(text: &str) -> Result<Query, SyntaxError> {
    let tokens = lex(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        expected: BTreeSet::new(),
    };
    p.query()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::{EntityId, GroupId};

    const ID: &str = "0123456789abcdef0123456789abcdef";

    #[test]
    fn select_with_equality() {
        assert_eq!(
            parse_query(r#"entities where prop("lang") = "fr""#).unwrap(),
            Query::Select {
                predicate: Some(Predicate::cmp("lang", CmpOp::Eq, Literal::Str("fr".into())))
            }
        );
        assert_eq!(parse_query("entities").unwrap(), Query::Select { predicate: None });
    }

    #[test]
    fn members_of_zone() {
        assert_eq!(
            parse_query(r#"members of "zone"/"raw""#).unwrap(),
            Query::MembersOf {
                grouping: "zone".into(),
                label: "raw".into()
            }
        );
    }

    #[test]
    fn lineage_with_depth() {
        let q = parse_query(&format!("lineage of {ID} downstream depth 3")).unwrap();
        assert_eq!(
            q,
            Query::Lineage {
                entity: ID.parse().unwrap(),
                direction: Direction::Downstream,
                depth: Some(3)
            }
        );
    }

    #[test]
    fn all_digit_and_exponent_like_ids() {
        let digits = "01234567890123456789012345678901";
        assert_eq!(
            parse_query(&format!("groups of {digits}")).unwrap(),
            Query::GroupsOf {
                entity: digits.parse::<EntityId>().unwrap()
            }
        );
        let g = "1e000000000000000000000000000000";
        assert_eq!(
            parse_query(&format!("rollup {g} via \"part_of\"")).unwrap(),
            Query::Rollup {
                group: g.parse::<GroupId>().unwrap(),
                label: "part_of".into()
            }
        );
    }

    #[test]
    fn neighbors_optional_parts() {
        let q = parse_query(&format!("neighbors {ID} label \"similar\" upstream")).unwrap();
        assert_eq!(
            q,
            Query::Neighbors {
                entity: ID.parse().unwrap(),
                label: Some("similar".into()),
                direction: Some(Direction::Upstream)
            }
        );
        assert!(matches!(
            parse_query(&format!("neighbors {ID}")).unwrap(),
            Query::Neighbors { label: None, direction: None, .. }
        ));
    }

    #[test]
    fn precedence_and_associativity() {
        let a = || Predicate::cmp("a", CmpOp::Eq, Literal::Int(1));
        let b = || Predicate::cmp("b", CmpOp::Lt, Literal::Real(2.5));
        let c = || Predicate::cmp("c", CmpOp::Contains, Literal::Str("x".into()));
        let q = parse_query(r#"entities where not prop("a") = 1 or prop("b") < 2.5 and prop("c") contains "x""#).unwrap();
        assert_eq!(
            q,
            Query::Select {
                predicate: Some(a().negate().or(b().and(c())))
            }
        );
        let q = parse_query(r#"entities where prop("a") = 1 and (prop("b") < 2.5 and prop("c") contains "x")"#).unwrap();
        let expected = a().and(b().and(c()));
        assert_eq!(q, Query::Select { predicate: Some(expected.clone()) });
        assert_eq!(
            expected.to_string(),
            r#"prop("a") = 1 and (prop("b") < 2.5 and prop("c") contains "x")"#
        );
    }

    #[test]
    fn literals() {
        let lit = |src: &str| match parse_query(&format!("entities where prop(\"x\") = {src}")).unwrap() {
            Query::Select {
                predicate: Some(Predicate::Cmp { value, .. }),
            } => value,
            _ => unreachable!(),
        };
        assert_eq!(lit("-12"), Literal::Int(-12));
        assert_eq!(lit("-0.25"), Literal::Real(-0.25));
        assert_eq!(lit("true"), Literal::Bool(true));
        assert_eq!(lit(r#""a\"b\\c\u{e9}""#), Literal::Str("a\"b\\cé".into()));
    }

    #[test]
    fn error_reports_position_and_expected_tokens() {
        let err = parse_query("members of \"zone\" \"raw\"").unwrap_err();
        assert_eq!((err.line, err.column), (1, 19));
        assert_eq!(err.expected, BTreeSet::from(["\"/\"".to_string()]));

        let err = parse_query("lineage of\n  nothex sideways").unwrap_err();
        assert_eq!((err.line, err.column), (2, 3));
        assert!(err.expected.contains("identifier"));

        let err = parse_query("lineage of 0123456789abcdef0123456789abcdef").unwrap_err();
        assert_eq!(err.expected, BTreeSet::from(["\"upstream\"".to_string(), "\"downstream\"".to_string()]));
        assert_eq!(err.found, "end of input");

        let err = parse_query("select").unwrap_err();
        assert_eq!(err.expected.len(), 6);
        assert!(parse_query("entities where prop(\"x\") = 99999999999999999999").is_err());
        assert!(parse_query(&format!("lineage of {ID} upstream depth 0")).is_err());
        assert!(parse_query("entities extra").is_err());
        assert!(parse_query("entities where prop(\"x\") = \"open").is_err());
    }
}
