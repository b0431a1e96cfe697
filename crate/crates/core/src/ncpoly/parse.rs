//! Expression parser for noncommutative polynomials.
//!
//! Grammar: complex literals `a`, `bi`, `a+bi`; identifiers `X1`…`Xn`;
//! operators `+ - * ^`; parentheses; `1` for the identity. `^` takes a
//! nonnegative integer exponent and binds tighter than `*`, which binds
//! tighter than `+`/`-`; unary minus applies to a factor.

use super::{NcPolynomial, PolyError};
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number { value: f64, imaginary: bool },
    Letter(usize),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokenize(src: &'a str, arity: usize) -> Result<Vec<(Token, usize)>, PolyError> {
        let mut lx = Lexer {
            src: src.as_bytes(),
            pos: 0,
        };
        let mut out = Vec::new();
        while lx.pos < lx.src.len() {
            let start = lx.pos;
            let ch = lx.src[lx.pos];
            match ch {
                b' ' | b'\t' | b'\r' | b'\n' => {
                    lx.pos += 1;
                }
                b'+' => {
                    lx.pos += 1;
                    out.push((Token::Plus, start));
                }
                b'-' => {
                    lx.pos += 1;
                    out.push((Token::Minus, start));
                }
                b'*' => {
                    lx.pos += 1;
                    out.push((Token::Star, start));
                }
                b'^' => {
                    lx.pos += 1;
                    out.push((Token::Caret, start));
                }
                b'(' => {
                    lx.pos += 1;
                    out.push((Token::LParen, start));
                }
                b')' => {
                    lx.pos += 1;
                    out.push((Token::RParen, start));
                }
                b'X' => {
                    lx.pos += 1;
                    let digits_start = lx.pos;
                    while lx.pos < lx.src.len() && lx.src[lx.pos].is_ascii_digit() {
                        lx.pos += 1;
                    }
                    if lx.pos == digits_start {
                        return Err(PolyError::Syntax {
                            position: start,
                            message: "expected an index after 'X'".into(),
                        });
                    }
                    let idx: usize = std::str::from_utf8(&lx.src[digits_start..lx.pos])
                        .unwrap()
                        .parse()
                        .map_err(|_| PolyError::Syntax {
                            position: start,
                            message: "indeterminate index overflow".into(),
                        })?;
                    if idx == 0 || idx > arity {
                        return Err(PolyError::UnknownIndeterminate {
                            index: idx,
                            arity,
                            position: start,
                        });
                    }
                    out.push((Token::Letter(idx - 1), start));
                }
                b'i' => {
                    lx.pos += 1;
                    out.push((
                        Token::Number {
                            value: 1.0,
                            imaginary: true,
                        },
                        start,
                    ));
                }
                b'0'..=b'9' | b'.' => {
                    let value = lx.lex_number(start)?;
                    let imaginary = if lx.pos < lx.src.len() && lx.src[lx.pos] == b'i' {
                        lx.pos += 1;
                        true
                    } else {
                        false
                    };
                    out.push((Token::Number { value, imaginary }, start));
                }
                other => {
                    return Err(PolyError::Syntax {
                        position: start,
                        message: format!("unexpected character '{}'", other as char),
                    });
                }
            }
        }
        Ok(out)
    }

    fn lex_number(&mut self, start: usize) -> Result<f64, PolyError> {
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
        {
            self.pos += 1;
        }
        // Exponent part: only consume 'e'/'E' when followed by digits or a
        // signed digit run, so `2e1` parses but `2e + X1` does not eat the op.
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let mut probe = self.pos + 1;
            if probe < self.src.len() && (self.src[probe] == b'+' || self.src[probe] == b'-') {
                probe += 1;
            }
            if probe < self.src.len() && self.src[probe].is_ascii_digit() {
                self.pos = probe;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| PolyError::Syntax {
                position: start,
                message: "malformed number".into(),
            })
    }
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    arity: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|(_, p)| *p)
            .unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<NcPolynomial, PolyError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.bump();
                    acc = acc.add(&self.term()?);
                }
                Some(Token::Minus) => {
                    self.bump();
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<NcPolynomial, PolyError> {
        let mut acc = self.factor()?;
        while matches!(self.peek(), Some(Token::Star)) {
            self.bump();
            acc = acc.mul(&self.factor()?);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<NcPolynomial, PolyError> {
        if matches!(self.peek(), Some(Token::Minus)) {
            self.bump();
            return Ok(self.factor()?.scale(C64::new(-1.0, 0.0)));
        }
        let mut base = self.primary()?;
        while matches!(self.peek(), Some(Token::Caret)) {
            self.bump();
            let pos = self.here();
            match self.bump() {
                Some(Token::Number {
                    value,
                    imaginary: false,
                }) if value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 => {
                    base = base.pow(value as u32);
                }
                _ => {
                    return Err(PolyError::Syntax {
                        position: pos,
                        message: "exponent must be a nonnegative integer".into(),
                    })
                }
            }
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<NcPolynomial, PolyError> {
        let pos = self.here();
        match self.bump() {
            Some(Token::Number { value, imaginary }) => {
                let c = if imaginary {
                    C64::new(0.0, value)
                } else {
                    C64::new(value, 0.0)
                };
                Ok(NcPolynomial::constant(c, self.arity))
            }
            Some(Token::Letter(i)) => Ok(NcPolynomial::letter(i, self.arity)),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some(Token::RParen) => Ok(inner),
                    _ => Err(PolyError::Syntax {
                        position: pos,
                        message: "unclosed parenthesis".into(),
                    }),
                }
            }
            other => Err(PolyError::Syntax {
                position: pos,
                message: format!("expected a value, found {other:?}"),
            }),
        }
    }
}

/// Parse an expression into canonical form. `n` is the declared
/// indeterminate count; indices beyond it are rejected.
pub fn parse_poly(text: &str, n: usize) -> Result<NcPolynomial, PolyError> {
    let tokens = Lexer::tokenize(text, n)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        arity: n,
        end: text.len(),
    };
    let p = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(PolyError::Syntax {
            position: parser.here(),
            message: "trailing input".into(),
        });
    }
    Ok(p)
}
