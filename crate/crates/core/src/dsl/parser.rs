//! Recursive-descent parser for the field DSL.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?          right-associative
//! atom   := number | 'pi' | variable | func '(' expr ')' | '(' expr ')'
//! ```

use std::fmt;

use super::expr::{BinOp, Expr, Func};

#[derive(Clone, Debug, PartialEq)]
pub enum ParseErrorKind {
    Empty,
    UnexpectedChar(char),
    UnexpectedToken { found: String, expected: &'static str },
    UnexpectedEnd { expected: &'static str },
    UnknownIdentifier(String),
    VariableOutOfRange { name: String, dim: usize },
    BadNumber(String),
}

/// A syntax error with the byte offset where it was detected.
#[derive(Clone, Debug, PartialEq)]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at byte {}: ", self.offset)?;
        match &self.kind {
            ParseErrorKind::Empty => write!(f, "empty expression"),
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::UnexpectedToken { found, expected } => {
                write!(f, "expected {expected}, found {found:?}")
            }
            ParseErrorKind::UnexpectedEnd { expected } => {
                write!(f, "unexpected end of input, expected {expected}")
            }
            ParseErrorKind::UnknownIdentifier(s) => write!(f, "unknown identifier {s:?}"),
            ParseErrorKind::VariableOutOfRange { name, dim } => {
                write!(f, "variable {name} out of range (dimension {dim})")
            }
            ParseErrorKind::BadNumber(s) => write!(f, "malformed number {s:?}"),
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("{v}"),
            Tok::Ident(s) => s.clone(),
            Tok::Sym(c) => c.to_string(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s = &text[start..i];
            let v: f64 = s.parse().map_err(|_| ParseError {
                offset: start,
                kind: ParseErrorKind::BadNumber(s.to_string()),
            })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(text[start..i].to_string())));
        } else if "+-*/^()".contains(c) {
            out.push((i, Tok::Sym(c)));
            i += 1;
        } else {
            // report the full char, not a byte of it
            let ch = text[i..].chars().next().unwrap_or(c);
            return Err(ParseError { offset: i, kind: ParseErrorKind::UnexpectedChar(ch) });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    state_dim: usize,
    mark_dim: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn fail(&self, expected: &'static str) -> ParseError {
        match self.peek() {
            None => ParseError { offset: self.end, kind: ParseErrorKind::UnexpectedEnd { expected } },
            Some(t) => ParseError {
                offset: self.offset(),
                kind: ParseErrorKind::UnexpectedToken { found: t.describe(), expected },
            },
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat_sym('+') {
                BinOp::Add
            } else if self.eat_sym('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat_sym('*') {
                BinOp::Mul
            } else if self.eat_sym('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_sym('-') {
            Ok(Expr::neg(self.unary()?))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat_sym('^') {
            let exponent = self.unary()?;
            Ok(Expr::pow(base, exponent))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat_sym(')') {
                    return Err(self.fail("')'"));
                }
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if let Some(func) = Func::from_name(&name) {
                    if !self.eat_sym('(') {
                        return Err(self.fail("'(' after function name"));
                    }
                    let arg = self.expr()?;
                    if !self.eat_sym(')') {
                        return Err(self.fail("')'"));
                    }
                    return Ok(Expr::call(func, arg));
                }
                self.variable(&name, offset)
            }
            _ => Err(self.fail("number, variable, function or '('")),
        }
    }

    fn variable(&self, name: &str, offset: usize) -> Result<Expr, ParseError> {
        if name == "t" {
            return Ok(Expr::t());
        }
        if name == "pi" {
            return Ok(Expr::Const(std::f64::consts::PI));
        }
        let unknown = || ParseError {
            offset,
            kind: ParseErrorKind::UnknownIdentifier(name.to_string()),
        };
        let (head, digits) = name.split_at(1);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(unknown());
        }
        let index: usize = digits.parse().map_err(|_| unknown())?;
        let (dim, make): (usize, fn(usize) -> Expr) = match head {
            "x" => (self.state_dim, Expr::x),
            "y" => (self.mark_dim, Expr::y),
            _ => return Err(unknown()),
        };
        if index == 0 || index > dim {
            return Err(ParseError {
                offset,
                kind: ParseErrorKind::VariableOutOfRange { name: name.to_string(), dim },
            });
        }
        Ok(make(index - 1))
    }
}

/// Parse `text` with state dimension `state_dim` (variables `x1..`) and mark
/// dimension `mark_dim` (variables `y1..`). `t` is always available.
pub fn parse_expr(text: &str, state_dim: usize, mark_dim: usize) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(ParseError { offset: 0, kind: ParseErrorKind::Empty });
    }
    let mut p = Parser { toks, pos: 0, end: text.len(), state_dim, mark_dim };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.fail("operator or end of input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar_forced_trees() {
        let e = parse_expr("x1 + 2*x2", 2, 0).unwrap();
        assert_eq!(
            e,
            Expr::add(Expr::x(0), Expr::mul(Expr::constant(2.0), Expr::x(1)))
        );
        let e = parse_expr("sin(x1)*y1", 1, 1).unwrap();
        assert_eq!(e, Expr::mul(Expr::call(Func::Sin, Expr::x(0)), Expr::y(0)));
    }

    #[test]
    fn unbalanced_parenthesis_reports_offset() {
        let err = parse_expr("((x1)", 1, 0).unwrap_err();
        assert_eq!(err.offset, 5);
        assert!(matches!(err.kind, ParseErrorKind::UnexpectedEnd { .. }));
    }

    #[test]
    fn precedence_and_associativity() {
        // unary minus binds looser than ^
        assert_eq!(
            parse_expr("-x1^2", 1, 0).unwrap(),
            Expr::neg(Expr::pow(Expr::x(0), Expr::constant(2.0)))
        );
        // ^ is right-associative
        assert_eq!(
            parse_expr("x1^2^3", 1, 0).unwrap(),
            Expr::pow(Expr::x(0), Expr::pow(Expr::constant(2.0), Expr::constant(3.0)))
        );
        // - is left-associative
        assert_eq!(
            parse_expr("x1 - x2 - x3", 3, 0).unwrap(),
            Expr::sub(Expr::sub(Expr::x(0), Expr::x(1)), Expr::x(2))
        );
        // negative exponent
        assert_eq!(
            parse_expr("x1^-2", 1, 0).unwrap(),
            Expr::pow(Expr::x(0), Expr::neg(Expr::constant(2.0)))
        );
    }

    #[test]
    fn numbers() {
        assert_eq!(parse_expr("1.5e-3", 0, 0).unwrap(), Expr::Const(1.5e-3));
        assert_eq!(parse_expr(".25", 0, 0).unwrap(), Expr::Const(0.25));
        assert_eq!(parse_expr("2E+2", 0, 0).unwrap(), Expr::Const(200.0));
    }

    #[test]
    fn identifier_errors() {
        let err = parse_expr("x3", 2, 0).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::VariableOutOfRange { dim: 2, .. }));
        let err = parse_expr("1 + foo", 1, 0).unwrap_err();
        assert_eq!(err.offset, 4);
        assert!(matches!(err.kind, ParseErrorKind::UnknownIdentifier(_)));
        let err = parse_expr("y1", 1, 0).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::VariableOutOfRange { .. }));
        assert!(matches!(parse_expr("x0", 1, 0).unwrap_err().kind, ParseErrorKind::VariableOutOfRange { .. }));
    }

    #[test]
    fn syntax_errors() {
        assert_eq!(parse_expr("", 1, 0).unwrap_err().kind, ParseErrorKind::Empty);
        assert_eq!(parse_expr("   ", 1, 0).unwrap_err().kind, ParseErrorKind::Empty);
        let err = parse_expr("x1 x1", 1, 0).unwrap_err();
        assert_eq!(err.offset, 3);
        let err = parse_expr("x1 $", 1, 0).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnexpectedChar('$'));
        let err = parse_expr("sin x1", 1, 0).unwrap_err();
        assert_eq!(err.offset, 4);
        assert!(parse_expr("2 *", 1, 0).is_err());
    }
}
