use num_complex::Complex64 as C64;
use thiserror::Error;

use super::{Expr, Func, Node};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown variable `{name}` at byte {offset} (ambient dimension is {n})")]
    UnknownVariable { offset: usize, name: String, n: usize },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownVariable { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number { value: f64, imaginary: bool },
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn syntax(&self, offset: usize, message: impl Into<String>) -> ParseError {
        ParseError::Syntax { offset, message: message.into() }
    }

    fn peek_byte(&self, at: usize) -> Option<u8> {
        self.src.as_bytes().get(at).copied()
    }

    fn next_token(&mut self) -> Result<(Tok, usize), ParseError> {
        while let Some(b) = self.peek_byte(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
        let start = self.pos;
        let Some(b) = self.peek_byte(start) else {
            return Ok((Tok::End, start));
        };
        let single = match b {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            self.pos += 1;
            return Ok((tok, start));
        }
        if b.is_ascii_digit() || b == b'.' {
            return self.number(start);
        }
        if b.is_ascii_alphabetic() || b == b'_' {
            let mut end = start;
            while let Some(c) = self.peek_byte(end) {
                if c.is_ascii_alphanumeric() || c == b'_' {
                    end += 1;
                } else {
                    break;
                }
            }
            self.pos = end;
            return Ok((Tok::Ident(self.src[start..end].to_string()), start));
        }
        let ch = self.src[start..].chars().next().unwrap_or('?');
        Err(self.syntax(start, format!("unexpected character `{ch}`")))
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize), ParseError> {
        let mut end = start;
        let digits = |lex: &Self, mut at: usize| {
            while lex.peek_byte(at).is_some_and(|c| c.is_ascii_digit()) {
                at += 1;
            }
            at
        };
        end = digits(self, end);
        if self.peek_byte(end) == Some(b'.') {
            end = digits(self, end + 1);
        }
        if matches!(self.peek_byte(end), Some(b'e') | Some(b'E')) {
            let mut exp = end + 1;
            if matches!(self.peek_byte(exp), Some(b'+') | Some(b'-')) {
                exp += 1;
            }
            let exp_end = digits(self, exp);
            if exp_end > exp {
                end = exp_end;
            }
        }
        let text = &self.src[start..end];
        let value: f64 = text.parse().map_err(|_| self.syntax(start, format!("malformed number `{text}`")))?;
        if !value.is_finite() {
            return Err(self.syntax(start, format!("number `{text}` is out of range")));
        }
        let mut imaginary = false;
        if self.peek_byte(end) == Some(b'i')
            && !self.peek_byte(end + 1).is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_')
        {
            imaginary = true;
            end += 1;
        }
        self.pos = end;
        Ok((Tok::Number { value, imaginary }, start))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    tok_at: usize,
    n: usize,
}

/// Parses `text` as an expression over `z1..zn`.
pub fn parse(text: &str, n: usize) -> Result<Expr, ParseError> {
    let mut lexer = Lexer { src: text, pos: 0 };
    let (tok, tok_at) = lexer.next_token()?;
    let mut p = Parser { lexer, tok, tok_at, n };
    let root = p.expr()?;
    if p.tok != Tok::End {
        return Err(p.unexpected("end of input"));
    }
    Ok(Expr::from_node(root, n))
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), ParseError> {
        let (tok, at) = self.lexer.next_token()?;
        self.tok = tok;
        self.tok_at = at;
        Ok(())
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let found = match &self.tok {
            Tok::End => "end of input".to_string(),
            Tok::Number { .. } => "number".to_string(),
            Tok::Ident(name) => format!("`{name}`"),
            other => format!("{other:?}"),
        };
        ParseError::Syntax { offset: self.tok_at, message: format!("expected {wanted}, found {found}") }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let add = match self.tok {
                Tok::Plus => true,
                Tok::Minus => false,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = match (lhs, rhs, add) {
                (Node::Const(a), Node::Const(b), true) => Node::Const(a + b),
                (Node::Const(a), Node::Const(b), false) => Node::Const(a - b),
                (a, b, true) => Node::Add(Box::new(a), Box::new(b)),
                (a, b, false) => Node::Sub(Box::new(a), Box::new(b)),
            };
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let mul = match self.tok {
                Tok::Star => true,
                Tok::Slash => false,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.unary()?;
            lhs = if mul { Node::Mul(Box::new(lhs), Box::new(rhs)) } else { Node::Div(Box::new(lhs), Box::new(rhs)) };
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.tok == Tok::Minus {
            self.bump()?;
            return Ok(match self.unary()? {
                Node::Const(c) => Node::Const(-c),
                other => Node::Neg(Box::new(other)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let mut base = self.atom()?;
        while self.tok == Tok::Caret {
            self.bump()?;
            let k = self.exponent()?;
            base = Node::Pow(Box::new(base), k);
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32, ParseError> {
        let parenthesized = self.tok == Tok::LParen;
        if parenthesized {
            self.bump()?;
        }
        let negative = self.tok == Tok::Minus;
        if negative {
            self.bump()?;
        }
        let at = self.tok_at;
        let k = match self.tok {
            Tok::Number { value, imaginary: false } if value.fract() == 0.0 && value.abs() <= i32::MAX as f64 => {
                value as i32
            }
            _ => return Err(self.unexpected("integer exponent")),
        };
        let text = &self.lexer.src[at..self.lexer.pos];
        if text.contains(['.', 'e', 'E']) {
            return Err(ParseError::Syntax { offset: at, message: "exponent must be an integer literal".into() });
        }
        self.bump()?;
        if parenthesized {
            if self.tok != Tok::RParen {
                return Err(self.unexpected("`)`"));
            }
            self.bump()?;
        }
        Ok(if negative { -k } else { k })
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        match self.tok.clone() {
            Tok::Number { value, imaginary } => {
                self.bump()?;
                Ok(Node::Const(if imaginary { C64::new(0.0, value) } else { C64::new(value, 0.0) }))
            }
            Tok::LParen => {
                self.bump()?;
                let inner = self.expr()?;
                if self.tok != Tok::RParen {
                    return Err(self.unexpected("`)`"));
                }
                self.bump()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let at = self.tok_at;
                self.bump()?;
                if name == "i" {
                    return Ok(Node::Const(C64::new(0.0, 1.0)));
                }
                if let Some(func) = Func::from_name(&name) {
                    if self.tok != Tok::LParen {
                        return Err(self.unexpected(&format!("`(` after `{name}`")));
                    }
                    self.bump()?;
                    let arg = self.expr()?;
                    if self.tok != Tok::RParen {
                        return Err(self.unexpected("`)`"));
                    }
                    self.bump()?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                if let Some(index) = variable_index(&name) {
                    if index == 0 || index > self.n {
                        return Err(ParseError::UnknownVariable { offset: at, name, n: self.n });
                    }
                    return Ok(Node::Var(index - 1));
                }
                Err(ParseError::UnknownIdentifier { offset: at, name })
            }
            _ => Err(self.unexpected("an operand")),
        }
    }
}

fn variable_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('z')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_offsets() {
        let err = parse("exp(", 1).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 4, .. }), "{err:?}");
        let err = parse("z1 + z3", 2).unwrap_err();
        assert_eq!(err, ParseError::UnknownVariable { offset: 5, name: "z3".into(), n: 2 });
        let err = parse("foo(z1)", 1).unwrap_err();
        assert_eq!(err, ParseError::UnknownIdentifier { offset: 0, name: "foo".into() });
        let err = parse("z1 $ 2", 1).unwrap_err();
        assert_eq!(err.offset(), 3);
        let err = parse("z1^1.5", 1).unwrap_err();
        assert_eq!(err.offset(), 3);
        let err = parse("(z1", 1).unwrap_err();
        assert_eq!(err.offset(), 3);
        let err = parse("z0", 1).unwrap_err();
        assert!(matches!(err, ParseError::UnknownVariable { offset: 0, .. }));
        let err = parse("1e999", 1).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 0, .. }));
    }

    #[test]
    fn literals() {
        let e = parse("2.5e-1 + 3i", 0).unwrap();
        assert_eq!(e.root(), &Node::Const(C64::new(0.25, 3.0)));
        let e = parse("-i", 0).unwrap();
        assert_eq!(e.root(), &Node::Const(C64::new(-0.0, -1.0)));
    }
}
