//! Parser for the index-set expression grammar.
//!
//! ```text
//! set     := product ('|' product)*
//! product := coord ('x' coord)*
//! coord   := atom (('&' | '\') atom)*
//! atom    := FULL
//!          | FIN '(' int (',' int)* ')'
//!          | AP  '(' int ',' int ')'       start >= 1, step >= 1
//!          | GEO '(' int ')'               base >= 2
//!          | POW '(' int ')'               exponent >= 2
//! ```
//!
//! `|` is union, `x` product, `&` intersection and `\` exclusion (the latter
//! two appear in printed decompositions and round-trip through the parser).
//! Keywords are case-insensitive. Errors carry the byte position and the
//! expected token.

use std::fmt;

use super::{CoordSet, Generator, ProductTerm, SymbolicIndexSet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub position: usize,
    pub expected: String,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "parse error at position {}: expected {}, found {}",
            self.position, self.expected, self.found
        )
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Ident(String),
    Int(u64),
    Pipe,
    Times,
    Amp,
    Backslash,
    LParen,
    RParen,
    Comma,
    End,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Ident(s) => write!(f, "'{s}'"),
            Token::Int(v) => write!(f, "'{v}'"),
            Token::Pipe => write!(f, "'|'"),
            Token::Times => write!(f, "'x'"),
            Token::Amp => write!(f, "'&'"),
            Token::Backslash => write!(f, "'\\'"),
            Token::LParen => write!(f, "'('"),
            Token::RParen => write!(f, "')'"),
            Token::Comma => write!(f, "','"),
            Token::End => write!(f, "end of input"),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next_token(&mut self) -> Result<(usize, Token), ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.pos >= self.bytes.len() {
            return Ok((start, Token::End));
        }
        let b = self.bytes[self.pos];
        let tok = match b {
            b'|' => {
                self.pos += 1;
                Token::Pipe
            }
            b'&' => {
                self.pos += 1;
                Token::Amp
            }
            b'\\' => {
                self.pos += 1;
                Token::Backslash
            }
            b'(' => {
                self.pos += 1;
                Token::LParen
            }
            b')' => {
                self.pos += 1;
                Token::RParen
            }
            b',' => {
                self.pos += 1;
                Token::Comma
            }
            b'0'..=b'9' => {
                let mut end = self.pos;
                while end < self.bytes.len() && self.bytes[end].is_ascii_digit() {
                    end += 1;
                }
                let text = &self.src[self.pos..end];
                self.pos = end;
                let v: u64 = text.parse().map_err(|_| ParseError {
                    position: start,
                    expected: "integer".into(),
                    found: format!("'{text}'"),
                })?;
                Token::Int(v)
            }
            b'A'..=b'Z' | b'a'..=b'z' => {
                let mut end = self.pos;
                while end < self.bytes.len() && self.bytes[end].is_ascii_alphabetic() {
                    end += 1;
                }
                let text = &self.src[self.pos..end];
                self.pos = end;
                if text.eq_ignore_ascii_case("x") {
                    Token::Times
                } else {
                    Token::Ident(text.to_ascii_uppercase())
                }
            }
            other => {
                return Err(ParseError {
                    position: start,
                    expected: "generator, '|', 'x', '&', '\\', '(', ')' or ','".into(),
                    found: format!("'{}'", other as char),
                })
            }
        };
        Ok((start, tok))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    lookahead: (usize, Token),
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ParseError> {
        let mut lexer = Lexer::new(src);
        let lookahead = lexer.next_token()?;
        Ok(Self { lexer, lookahead })
    }

    fn peek(&self) -> &Token {
        &self.lookahead.1
    }

    fn pos(&self) -> usize {
        self.lookahead.0
    }

    fn advance(&mut self) -> Result<(usize, Token), ParseError> {
        let current = self.lookahead.clone();
        self.lookahead = self.lexer.next_token()?;
        Ok(current)
    }

    fn expect(&mut self, want: Token, label: &str) -> Result<usize, ParseError> {
        if self.lookahead.1 == want {
            let (p, _) = self.advance()?;
            Ok(p)
        } else {
            Err(ParseError {
                position: self.pos(),
                expected: label.into(),
                found: self.peek().to_string(),
            })
        }
    }

    fn parse_set(&mut self) -> Result<SymbolicIndexSet, ParseError> {
        let mut terms = vec![self.parse_product()?];
        while *self.peek() == Token::Pipe {
            self.advance()?;
            terms.push(self.parse_product()?);
        }
        let dim = terms[0].dim();
        for t in &terms {
            if t.dim() != dim {
                return Err(ParseError {
                    position: self.pos(),
                    expected: format!("product of dimension {dim}"),
                    found: format!("product of dimension {}", t.dim()),
                });
            }
        }
        if *self.peek() != Token::End {
            return Err(ParseError {
                position: self.pos(),
                expected: "'|' or end of input".into(),
                found: self.peek().to_string(),
            });
        }
        Ok(SymbolicIndexSet::new(dim, terms))
    }

    fn parse_product(&mut self) -> Result<ProductTerm, ParseError> {
        let mut coords = vec![self.parse_coord()?];
        while *self.peek() == Token::Times {
            self.advance()?;
            coords.push(self.parse_coord()?);
        }
        Ok(ProductTerm::new(coords))
    }

    fn parse_coord(&mut self) -> Result<CoordSet, ParseError> {
        let mut set = CoordSet::from_generator(self.parse_atom()?);
        loop {
            match self.peek() {
                Token::Amp => {
                    self.advance()?;
                    set = set.with_extra_include(&self.parse_atom()?);
                }
                Token::Backslash => {
                    self.advance()?;
                    set = set.minus_generator(&self.parse_atom()?);
                }
                _ => break,
            }
        }
        Ok(set)
    }

    fn parse_atom(&mut self) -> Result<Generator, ParseError> {
        let (pos, tok) = self.advance()?;
        let name = match tok {
            Token::Ident(name) => name,
            other => {
                return Err(ParseError {
                    position: pos,
                    expected: "generator name (FULL, FIN, AP, GEO, POW)".into(),
                    found: other.to_string(),
                })
            }
        };
        match name.as_str() {
            "FULL" => Ok(Generator::FullN),
            "FIN" => {
                let args = self.parse_int_args(1, usize::MAX)?;
                Ok(Generator::finite(args))
            }
            "AP" => {
                let args = self.parse_int_args(2, 2)?;
                if args[0] < 1 || args[1] < 1 {
                    return Err(ParseError {
                        position: pos,
                        expected: "AP(start >= 1, step >= 1)".into(),
                        found: format!("AP({},{})", args[0], args[1]),
                    });
                }
                Ok(Generator::ap(args[0], args[1]))
            }
            "GEO" => {
                let args = self.parse_int_args(1, 1)?;
                if args[0] < 2 {
                    return Err(ParseError {
                        position: pos,
                        expected: "GEO(base >= 2)".into(),
                        found: format!("GEO({})", args[0]),
                    });
                }
                Ok(Generator::geo(args[0]))
            }
            "POW" => {
                let args = self.parse_int_args(1, 1)?;
                if args[0] < 2 {
                    return Err(ParseError {
                        position: pos,
                        expected: "POW(exponent >= 2)".into(),
                        found: format!("POW({})", args[0]),
                    });
                }
                Ok(Generator::pow(args[0] as u32))
            }
            other => Err(ParseError {
                position: pos,
                expected: "one of FULL, FIN, AP, GEO, POW".into(),
                found: format!("'{other}'"),
            }),
        }
    }

    fn parse_int_args(&mut self, min: usize, max: usize) -> Result<Vec<u64>, ParseError> {
        self.expect(Token::LParen, "'('")?;
        let mut args = Vec::new();
        loop {
            match self.advance()? {
                (_, Token::Int(v)) => args.push(v),
                (p, other) => {
                    return Err(ParseError {
                        position: p,
                        expected: "integer".into(),
                        found: other.to_string(),
                    })
                }
            }
            match self.advance()? {
                (_, Token::Comma) => continue,
                (_, Token::RParen) => break,
                (p, other) => {
                    return Err(ParseError {
                        position: p,
                        expected: "',' or ')'".into(),
                        found: other.to_string(),
                    })
                }
            }
        }
        if args.len() < min || args.len() > max {
            return Err(ParseError {
                position: self.pos(),
                expected: format!("between {min} and {max} arguments"),
                found: format!("{} arguments", args.len()),
            });
        }
        Ok(args)
    }
}

/// Parse an index-set expression.
pub fn parse_index_set(src: &str) -> Result<SymbolicIndexSet, ParseError> {
    Parser::new(src)?.parse_set()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_spec_example() {
        let e = parse_index_set("AP(1,2) x FULL | FIN(3,5) x GEO(2)").unwrap();
        assert_eq!(e.dim(), 2);
        assert!(e.contains(&[1, 7]));
        assert!(e.contains(&[3, 8]));
        assert!(!e.contains(&[2, 8]));
        assert_eq!(e.to_string(), "AP(1,2) x FULL | FIN(3,5) x GEO(2)");
    }

    #[test]
    fn parses_intersection_and_exclusion() {
        let e = parse_index_set("FULL\\AP(2,2) x FULL&AP(1,3)").unwrap();
        assert!(e.contains(&[3, 4]));
        assert!(!e.contains(&[2, 4]), "evens excluded in coordinate 1");
        assert!(!e.contains(&[3, 5]), "coordinate 2 must be 1 mod 3");
        // round-trip through Display
        let again = parse_index_set(&e.to_string()).unwrap();
        assert_eq!(e, again);
    }

    #[test]
    fn reports_position_and_expectation() {
        let err = parse_index_set("AP(1,2) x BOGUS").unwrap_err();
        assert_eq!(err.position, 10);
        assert!(err.expected.contains("FULL"), "{err}");

        let err = parse_index_set("AP(0,2)").unwrap_err();
        assert!(err.expected.contains("start >= 1"), "{err}");

        let err = parse_index_set("GEO(1)").unwrap_err();
        assert!(err.expected.contains("base >= 2"), "{err}");

        let err = parse_index_set("AP(1,2) x").unwrap_err();
        assert_eq!(err.found, "end of input");

        let err = parse_index_set("FULL | FULL x FULL").unwrap_err();
        assert!(err.expected.contains("dimension"), "{err}");
    }

    #[test]
    fn case_insensitive_keywords() {
        let e = parse_index_set("full X geo(2)").unwrap();
        assert!(e.contains(&[5, 4]));
        assert!(!e.contains(&[5, 5]));
    }
}
