//! Minimal expression grammar for radial parts and bounded symbols.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := factor (('*' | '/') factor)*
//! factor  := unary ('^' factor)?                (right associative)
//! unary   := '-' unary | primary
//! primary := number | variable | func '(' expr ')' | '(' expr ')'
//! func    := exp | conj | abs
//! ```
//!
//! Radial expressions use variables `r1..rn` (evaluated at points of the
//! radial region); bounded-symbol expressions use `z1..zn` (evaluated at
//! `z_j = r_j e^{i theta_j}`). Everything is computed in complex
//! arithmetic; integer powers are exact, fractional powers are principal.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExprError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "expression error at position {}: {}", self.position, self.message)
    }
}

impl std::error::Error for ExprError {}

#[derive(Debug, Clone)]
enum Node {
    Const(f64),
    Var(usize),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Exp(Box<Node>),
    Conj(Box<Node>),
    Abs(Box<Node>),
}

impl Node {
    fn eval(&self, vars: &[Complex64]) -> Complex64 {
        match self {
            Node::Const(c) => Complex64::new(*c, 0.0),
            Node::Var(i) => vars[*i],
            Node::Add(a, b) => a.eval(vars) + b.eval(vars),
            Node::Sub(a, b) => a.eval(vars) - b.eval(vars),
            Node::Mul(a, b) => a.eval(vars) * b.eval(vars),
            Node::Div(a, b) => a.eval(vars) / b.eval(vars),
            Node::Pow(a, b) => {
                let base = a.eval(vars);
                if let Node::Const(e) = **b {
                    if e.fract() == 0.0 && e.abs() < 1e9 {
                        return base.powi(e as i32);
                    }
                }
                base.powc(b.eval(vars))
            }
            Node::Neg(a) => -a.eval(vars),
            Node::Exp(a) => a.eval(vars).exp(),
            Node::Conj(a) => a.eval(vars).conj(),
            Node::Abs(a) => Complex64::new(a.eval(vars).norm(), 0.0),
        }
    }
}

/// A parsed expression over `n` variables with a fixed variable prefix.
#[derive(Clone, Debug)]
pub struct Expr {
    root: Arc<Node>,
    dim: usize,
    source: String,
}

impl Expr {
    /// Parse with variables `<prefix>1 .. <prefix>n`.
    pub fn parse(src: &str, prefix: char, dim: usize) -> Result<Self, ExprError> {
        let mut p = ExprParser {
            bytes: src.as_bytes(),
            src,
            pos: 0,
            prefix,
            dim,
        };
        let root = p.parse_expr()?;
        p.skip_ws();
        if p.pos != src.len() {
            return Err(ExprError {
                position: p.pos,
                message: format!("unexpected trailing input '{}'", &src[p.pos..]),
            });
        }
        Ok(Expr {
            root: Arc::new(root),
            dim,
            source: src.to_string(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, vars: &[Complex64]) -> Complex64 {
        debug_assert_eq!(vars.len(), self.dim);
        self.root.eval(vars)
    }

    pub fn eval_real(&self, vars: &[f64]) -> Complex64 {
        let cv: Vec<Complex64> = vars.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        self.eval(&cv)
    }
}

struct ExprParser<'a> {
    bytes: &'a [u8],
    src: &'a str,
    pos: usize,
    prefix: char,
    dim: usize,
}

impl<'a> ExprParser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn parse_expr(&mut self) -> Result<Node, ExprError> {
        let mut node = self.parse_term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    node = Node::Add(Box::new(node), Box::new(self.parse_term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    node = Node::Sub(Box::new(node), Box::new(self.parse_term()?));
                }
                _ => return Ok(node),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Node, ExprError> {
        let mut node = self.parse_factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    node = Node::Mul(Box::new(node), Box::new(self.parse_factor()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    node = Node::Div(Box::new(node), Box::new(self.parse_factor()?));
                }
                _ => return Ok(node),
            }
        }
    }

    // '^' binds tighter than unary minus: -r1^2 is -(r1^2)
    fn parse_factor(&mut self) -> Result<Node, ExprError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.parse_factor()?)));
        }
        let base = self.parse_primary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.parse_factor()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn parse_primary(&mut self) -> Result<Node, ExprError> {
        let c = self.peek().ok_or_else(|| ExprError {
            position: self.pos,
            message: "unexpected end of expression".into(),
        })?;
        if c == b'(' {
            self.pos += 1;
            let inner = self.parse_expr()?;
            if self.peek() != Some(b')') {
                return Err(ExprError {
                    position: self.pos,
                    message: "expected ')'".into(),
                });
            }
            self.pos += 1;
            return Ok(inner);
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.parse_number();
        }
        if c.is_ascii_alphabetic() {
            return self.parse_ident();
        }
        Err(ExprError {
            position: self.pos,
            message: format!("unexpected character '{}'", c as char),
        })
    }

    fn parse_number(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        let mut end = self.pos;
        let mut seen_e = false;
        while end < self.bytes.len() {
            let b = self.bytes[end];
            if b.is_ascii_digit() || b == b'.' {
                end += 1;
            } else if (b == b'e' || b == b'E') && !seen_e && end + 1 < self.bytes.len() {
                let next = self.bytes[end + 1];
                if next.is_ascii_digit() || next == b'+' || next == b'-' {
                    seen_e = true;
                    end += 2;
                } else {
                    break;
                }
            } else {
                break;
            }
        }
        let text = &self.src[start..end];
        let v: f64 = text.parse().map_err(|e| ExprError {
            position: start,
            message: format!("bad number '{text}': {e}"),
        })?;
        self.pos = end;
        Ok(Node::Const(v))
    }

    fn parse_ident(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        let mut end = self.pos;
        while end < self.bytes.len()
            && (self.bytes[end].is_ascii_alphanumeric() || self.bytes[end] == b'_')
        {
            end += 1;
        }
        let name = &self.src[start..end];
        self.pos = end;
        // variable?
        let mut chars = name.chars();
        if chars.next() == Some(self.prefix) {
            let rest: String = chars.collect();
            if let Ok(idx) = rest.parse::<usize>() {
                if idx >= 1 && idx <= self.dim {
                    return Ok(Node::Var(idx - 1));
                }
                return Err(ExprError {
                    position: start,
                    message: format!(
                        "variable {name} out of range (dimension {})",
                        self.dim
                    ),
                });
            }
        }
        let func = match name {
            "exp" => Node::Exp as fn(Box<Node>) -> Node,
            "conj" => Node::Conj,
            "abs" => Node::Abs,
            other => {
                return Err(ExprError {
                    position: start,
                    message: format!(
                        "unknown identifier '{other}' (variables are {p}1..{p}{n}; functions exp, conj, abs)",
                        p = self.prefix,
                        n = self.dim
                    ),
                })
            }
        };
        if self.peek() != Some(b'(') {
            return Err(ExprError {
                position: self.pos,
                message: format!("expected '(' after {name}"),
            });
        }
        self.pos += 1;
        let arg = self.parse_expr()?;
        if self.peek() != Some(b')') {
            return Err(ExprError {
                position: self.pos,
                message: "expected ')'".into(),
            });
        }
        self.pos += 1;
        Ok(func(Box::new(arg)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_expression() {
        let e = Expr::parse("r1^2*exp(-r2)", 'r', 2).unwrap();
        let v = e.eval_real(&[2.0, 0.0]);
        assert!((v.re - 4.0).abs() < 1e-15);
        let v = e.eval_real(&[3.0, 1.0]);
        assert!((v.re - 9.0 * (-1.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn bounded_symbol_expression() {
        let e = Expr::parse("z1 + conj(z2)*abs(z1)^2", 'z', 2).unwrap();
        let z1 = Complex64::from_polar(0.5, 0.3);
        let z2 = Complex64::from_polar(0.4, -1.0);
        let v = e.eval(&[z1, z2]);
        let expect = z1 + z2.conj() * 0.25;
        assert!((v - expect).norm() < 1e-14);
    }

    #[test]
    fn precedence_and_unary() {
        let e = Expr::parse("2+3*4^2-1", 'r', 1).unwrap();
        assert!((e.eval_real(&[0.0]).re - 49.0).abs() < 1e-15);
        let e = Expr::parse("-r1^2", 'r', 1).unwrap();
        // unary minus applies to the whole power
        assert!((e.eval_real(&[2.0]).re + 4.0).abs() < 1e-15);
        let e = Expr::parse("1e-3 + 2.5e2", 'r', 1).unwrap();
        assert!((e.eval_real(&[0.0]).re - 250.001).abs() < 1e-12);
    }

    #[test]
    fn errors_carry_positions() {
        let err = Expr::parse("r1 + r7", 'r', 2).unwrap_err();
        assert_eq!(err.position, 5);
        assert!(err.message.contains("out of range"));
        let err = Expr::parse("foo(r1)", 'r', 1).unwrap_err();
        assert!(err.message.contains("unknown identifier"));
        let err = Expr::parse("r1 +", 'r', 1).unwrap_err();
        assert!(err.message.contains("end of expression"));
    }
}
