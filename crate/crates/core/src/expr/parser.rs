//! Recursive descent parser for the map-definition language.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-'? power
//! power  := atom ('^' integer)?
//! atom   := number | 'x' | 'y' | 'pi' | func '(' expr ')' | '(' expr ')'
//! ```

use std::f64::consts::PI;

use super::{BinOp, ExprError, Func, Node};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Number { value: f64, integer: bool },
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

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Number { value, .. } => format!("number {value}"),
            Tok::Ident(name) => format!("identifier '{name}'"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                let mut integer = true;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    integer = false;
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        integer = false;
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let value = text.parse::<f64>().map_err(|_| ExprError::Syntax {
                    position: start,
                    expected: "a number".into(),
                    found: format!("'{text}'"),
                })?;
                out.push((start, Tok::Number { value, integer }));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(src[start..i].to_string())));
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ExprError::Syntax {
                    position: start,
                    expected: "an operator, number, identifier or parenthesis".into(),
                    found: format!("'{ch}'"),
                });
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> ExprError {
        ExprError::Syntax {
            position: self.offset(),
            expected: expected.into(),
            found: self.peek().describe(),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), ExprError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Node, ExprError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            let inner = self.power()?;
            return Ok(Node::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let at = self.offset();
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.bump() {
            Tok::Number { integer: false, .. } => Err(ExprError::NonIntegerExponent { position: at }),
            Tok::Number { value, integer: true } => {
                if value > i32::MAX as f64 {
                    return Err(ExprError::NonIntegerExponent { position: at });
                }
                let n = value as i32;
                Ok(Node::Pow(Box::new(base), if negative { -n } else { n }))
            }
            other => Err(ExprError::Syntax {
                position: at,
                expected: "an integer exponent".into(),
                found: other.describe(),
            }),
        }
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        let at = self.offset();
        match self.bump() {
            Tok::Number { value, .. } => Ok(Node::Const(value)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Node::X),
                "y" => Ok(Node::Y),
                "pi" => Ok(Node::Const(PI)),
                _ => {
                    let func = Func::from_name(&name).ok_or(ExprError::UnknownIdentifier {
                        position: at,
                        name: name.clone(),
                    })?;
                    self.expect(Tok::LParen, &format!("'(' after {name}"))?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "')'")?;
                    Ok(Node::Call(func, Box::new(arg)))
                }
            },
            other => Err(ExprError::Syntax {
                position: at,
                expected: "a number, variable, function call or '('".into(),
                found: other.describe(),
            }),
        }
    }
}

pub(super) fn parse_node(src: &str) -> Result<Node, ExprError> {
    if src.trim().is_empty() {
        return Err(ExprError::Empty);
    }
    let mut p = Parser {
        toks: tokenize(src)?,
        pos: 0,
    };
    let node = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(node)
}
