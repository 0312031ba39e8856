//! Arithmetic expressions for user-defined plant dynamics.
//!
//! Grammar: `+ - * /` with usual precedence, right-associative `^`, unary
//! minus binding looser than `^`, parentheses, decimal and scientific
//! number literals, the functions `sin cos tan exp ln sqrt abs`, and named
//! variables resolved against a caller-supplied list at parse time.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExprError {
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl Func {
    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Exp => v.exp(),
            Func::Ln => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, values: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => values[*i],
            Expr::Neg(e) => -e.eval(values),
            Expr::Add(a, b) => a.eval(values) + b.eval(values),
            Expr::Sub(a, b) => a.eval(values) - b.eval(values),
            Expr::Mul(a, b) => a.eval(values) * b.eval(values),
            Expr::Div(a, b) => a.eval(values) / b.eval(values),
            Expr::Pow(a, b) => a.eval(values).powf(b.eval(values)),
            Expr::Call(f, e) => f.apply(e.eval(values)),
        }
    }

    /// Visit every variable index the expression references.
    pub fn for_each_var(&self, f: &mut impl FnMut(usize)) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(i) => f(*i),
            Expr::Neg(e) | Expr::Call(_, e) => e.for_each_var(f),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => {
                a.for_each_var(f);
                b.for_each_var(f);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' => {
                out.push((i, Tok::Plus));
                i += 1;
            }
            b'-' => {
                out.push((i, Tok::Minus));
                i += 1;
            }
            b'*' => {
                out.push((i, Tok::Star));
                i += 1;
            }
            b'/' => {
                out.push((i, Tok::Slash));
                i += 1;
            }
            b'^' => {
                out.push((i, Tok::Caret));
                i += 1;
            }
            b'(' => {
                out.push((i, Tok::LParen));
                i += 1;
            }
            b')' => {
                out.push((i, Tok::RParen));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
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
                let text = &src[start..i];
                let value = text.parse::<f64>().map_err(|_| ExprError::Parse {
                    position: start,
                    message: format!("invalid number `{text}`"),
                })?;
                out.push((start, Tok::Num(value)));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push((start, Tok::Ident(src[start..i].to_string())));
            }
            other => {
                return Err(ExprError::Parse {
                    position: i,
                    message: format!("unexpected character `{}`", other as char),
                })
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    vars: &'a [String],
    len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn position(&self) -> usize {
        self.toks.get(self.pos).map_or(self.len, |(p, _)| *p)
    }

    fn advance(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ExprError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ExprError::Parse {
                position: self.position(),
                message: format!("expected {what}"),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // unary minus binds looser than `^`, so -x^2 is -(x^2)
    fn factor(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.primary()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let exponent = self.factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let position = self.position();
        match self.advance() {
            Some(Tok::Num(v)) => Ok(Expr::Num(v)),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "closing parenthesis")?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    let func = Func::from_name(&name).ok_or_else(|| ExprError::Parse {
                        position,
                        message: format!("unknown function `{name}`"),
                    })?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "closing parenthesis")?;
                    Ok(Expr::Call(func, Box::new(arg)))
                } else {
                    let index = self
                        .vars
                        .iter()
                        .position(|v| v == &name)
                        .ok_or(ExprError::UnknownVariable(name))?;
                    Ok(Expr::Var(index))
                }
            }
            Some(other) => Err(ExprError::Parse {
                position,
                message: format!("unexpected token {other:?}"),
            }),
            None => Err(ExprError::Parse {
                position,
                message: "unexpected end of expression".into(),
            }),
        }
    }
}

/// Parse `src` with variables resolved against `vars` by name.
pub fn parse(src: &str, vars: &[String]) -> Result<Expr, ExprError> {
    let toks = tokenize(src)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        vars,
        len: src.len(),
    };
    let expr = parser.expr()?;
    if parser.pos != parser.toks.len() {
        return Err(ExprError::Parse {
            position: parser.position(),
            message: "trailing input after expression".into(),
        });
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str) -> f64 {
        parse(src, &[]).unwrap().eval(&[])
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("2+3*4"), 14.0);
        assert_eq!(eval("(2+3)*4"), 20.0);
        assert_eq!(eval("2*3^2"), 18.0);
        assert_eq!(eval("2^3^2"), 512.0);
        assert_eq!(eval("-2^2"), -4.0);
        assert_eq!(eval("(-2)^2"), 4.0);
        assert_eq!(eval("7-2-1"), 4.0);
        assert_eq!(eval("8/4/2"), 1.0);
        assert_eq!(eval("2^-1"), 0.5);
    }

    #[test]
    fn numbers_parse_in_all_forms() {
        assert_eq!(eval("0.25"), 0.25);
        assert_eq!(eval("1.5e-3"), 0.0015);
        assert_eq!(eval("2E2"), 200.0);
        assert_eq!(eval(".5"), 0.5);
    }

    #[test]
    fn functions_apply() {
        assert_eq!(eval("sin(0)"), 0.0);
        assert!((eval("cos(0)") - 1.0).abs() < 1e-15);
        assert!((eval("ln(exp(2))") - 2.0).abs() < 1e-12);
        assert_eq!(eval("sqrt(9)"), 3.0);
        assert_eq!(eval("abs(-3.5)"), 3.5);
        assert!((eval("tan(0.5)") - 0.5f64.tan()).abs() < 1e-15);
    }

    #[test]
    fn variables_resolve_by_name() {
        let vars: Vec<String> = vec!["x1_1".into(), "x1_2".into(), "x2_1".into()];
        let e = parse("x1_1 + 2*x2_1 - sin(x1_2)", &vars).unwrap();
        let got = e.eval(&[1.0, 0.0, 3.0]);
        assert_eq!(got, 7.0);
        let mut seen = Vec::new();
        e.for_each_var(&mut |i| seen.push(i));
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2]);
    }

    #[test]
    fn errors_carry_positions() {
        let vars: Vec<String> = vec!["x1_1".into()];
        assert!(matches!(
            parse("x9_9", &vars),
            Err(ExprError::UnknownVariable(_))
        ));
        assert!(matches!(
            parse("2 + ", &vars),
            Err(ExprError::Parse { .. })
        ));
        assert!(matches!(
            parse("(2+3", &vars),
            Err(ExprError::Parse { .. })
        ));
        assert!(matches!(
            parse("2 3", &vars),
            Err(ExprError::Parse { .. })
        ));
        assert!(matches!(
            parse("foo(2)", &vars),
            Err(ExprError::Parse { .. })
        ));
        assert!(matches!(
            parse("2 $ 3", &vars),
            Err(ExprError::Parse { .. })
        ));
    }
}
