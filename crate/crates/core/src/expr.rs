//! A small expression language for the catalog's eigenvalue, eigenvector
//! and Jacobian strings.
//!
//! Supported: variables `f0..fk` (also written `f_0`), the constant `psi`
//! (a primitive cube root of unity), rational literals, `+ - * / ^`,
//! parentheses, unary minus and implicit multiplication (`2f_1f_2`,
//! `f_2(f_1 + f_2)`).

use num_complex::Complex64;
use num_traits::One;

use crate::algebra::{q, Poly, Q};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Q),
    Var(usize),
    Psi,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Q),
    Var(usize),
    Psi,
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            out.push(Tok::Num(parse_decimal(&text)?));
        } else if c == 'f' {
            i += 1;
            if i < chars.len() && chars[i] == '_' {
                i += 1;
            }
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if start == i {
                return Err(Error::Parse(format!("variable without index in `{s}`")));
            }
            let idx: String = chars[start..i].iter().collect();
            out.push(Tok::Var(idx.parse().map_err(|_| Error::Parse(idx.clone()))?));
        } else if chars[i..].starts_with(&['p', 's', 'i']) {
            out.push(Tok::Psi);
            i += 3;
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected `{c}` in `{s}`")));
        }
    }
    Ok(out)
}

fn parse_decimal(text: &str) -> Result<Q> {
    let err = || Error::Parse(format!("bad number `{text}`"));
    match text.split_once('.') {
        None => text.parse::<Q>().map_err(|_| err()),
        Some((int, frac)) => {
            let digits = format!("{int}{frac}");
            let num: Q = digits.parse().map_err(|_| err())?;
            let mut den = Q::one();
            for _ in 0..frac.len() {
                den *= q(10);
            }
            Ok(num / den)
        }
    }
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn starts_primary(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Num(_)) | Some(Tok::Var(_)) | Some(Tok::Psi) | Some(Tok::Op('('))
        )
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else if self.starts_primary() {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.power()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.eat('^') {
            match self.toks.get(self.pos).cloned() {
                Some(Tok::Num(n)) if n.is_integer() => {
                    self.pos += 1;
                    let e: u32 = n
                        .to_integer()
                        .try_into()
                        .map_err(|_| Error::Parse("exponent too large".into()))?;
                    Ok(Expr::Pow(Box::new(base), e))
                }
                _ => Err(Error::Parse("exponent must be a non-negative integer".into())),
            }
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.toks.get(self.pos).cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(Expr::Num(n))
            }
            Some(Tok::Var(v)) => {
                self.pos += 1;
                Ok(Expr::Var(v))
            }
            Some(Tok::Psi) => {
                self.pos += 1;
                Ok(Expr::Psi)
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(Error::Parse("missing `)`".into()));
                }
                Ok(e)
            }
            other => Err(Error::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

/// Parse a scalar expression.
pub fn parse(s: &str) -> Result<Expr> {
    let mut p = Parser {
        toks: tokenize(s)?,
        pos: 0,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(Error::Parse(format!("trailing input in `{s}`")));
    }
    Ok(e)
}

/// Parse a parenthesised, comma-separated vector such as `(0, f_2/f_1, 1)`.
pub fn parse_vector(s: &str) -> Result<Vec<Expr>> {
    let t = s.trim();
    let inner = t
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| Error::Parse(format!("vector must be parenthesised: `{s}`")))?;
    let mut parts = Vec::new();
    let mut depth = 0;
    let mut cur = String::new();
    for c in inner.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
        if c == ',' && depth == 0 {
            parts.push(std::mem::take(&mut cur));
        } else {
            cur.push(c);
        }
    }
    parts.push(cur);
    parts.iter().map(|p| parse(p)).collect()
}

/// Strip the defective marker `^*` from an eigenvalue string.
pub fn strip_defective_marker(s: &str) -> (&str, bool) {
    let t = s.trim();
    match t.strip_suffix("^*") {
        Some(rest) => (rest.trim(), true),
        None => (t, false),
    }
}

impl Expr {
    pub fn eval(&self, f: &[f64]) -> Complex64 {
        match self {
            Expr::Num(n) => Complex64::new(crate::algebra::q_to_f64(n), 0.0),
            Expr::Var(i) => Complex64::new(f.get(*i).copied().unwrap_or(f64::NAN), 0.0),
            Expr::Psi => Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0),
            Expr::Neg(a) => -a.eval(f),
            Expr::Add(a, b) => a.eval(f) + b.eval(f),
            Expr::Sub(a, b) => a.eval(f) - b.eval(f),
            Expr::Mul(a, b) => a.eval(f) * b.eval(f),
            Expr::Div(a, b) => a.eval(f) / b.eval(f),
            Expr::Pow(a, e) => a.eval(f).powu(*e),
        }
    }

    /// Denominators met during evaluation (used to avoid poles when sampling).
    pub fn denominators(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        self.collect_denominators(&mut out);
        out
    }

    fn collect_denominators<'a>(&'a self, out: &mut Vec<&'a Expr>) {
        match self {
            Expr::Num(_) | Expr::Var(_) | Expr::Psi => {}
            Expr::Neg(a) | Expr::Pow(a, _) => a.collect_denominators(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.collect_denominators(out);
                b.collect_denominators(out);
            }
            Expr::Div(a, b) => {
                a.collect_denominators(out);
                b.collect_denominators(out);
                out.push(b);
            }
        }
    }

    /// Exact polynomial in `vars` variables; fails on `psi` or on division
    /// by a non-constant.
    pub fn to_poly(&self, vars: usize) -> Result<Poly> {
        Ok(match self {
            Expr::Num(n) => Poly::constant(vars, n.clone()),
            Expr::Var(i) => {
                if *i >= vars {
                    return Err(Error::Parse(format!("variable f{i} out of range")));
                }
                Poly::var(vars, *i)
            }
            Expr::Psi => return Err(Error::Parse("psi is not rational".into())),
            Expr::Neg(a) => a.to_poly(vars)?.scale(&q(-1)),
            Expr::Add(a, b) => &a.to_poly(vars)? + &b.to_poly(vars)?,
            Expr::Sub(a, b) => &a.to_poly(vars)? - &b.to_poly(vars)?,
            Expr::Mul(a, b) => &a.to_poly(vars)? * &b.to_poly(vars)?,
            Expr::Div(a, b) => {
                let d = b.to_poly(vars)?;
                let zero = vec![0u16; vars];
                let c = match (d.terms.len(), d.terms.get(&zero)) {
                    (1, Some(c)) => c.clone(),
                    (0, _) => return Err(Error::Parse("division by zero".into())),
                    _ => return Err(Error::Parse("division by a non-constant".into())),
                };
                a.to_poly(vars)?.scale(&(Q::one() / c))
            }
            Expr::Pow(a, e) => {
                let base = a.to_poly(vars)?;
                let mut acc = Poly::constant(vars, Q::one());
                for _ in 0..*e {
                    acc = &acc * &base;
                }
                acc
            }
        })
    }
}

/// Parse and convert to an exact polynomial in one step.
pub fn parse_poly(s: &str, vars: usize) -> Result<Poly> {
    parse(s)?.to_poly(vars)
}

/// True when `s` parses to the zero polynomial.
pub fn is_zero_expr(s: &str, vars: usize) -> Result<bool> {
    Ok(parse_poly(s, vars)?.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn implicit_multiplication() {
        assert_eq!(parse_poly("2f_2^2", 3).unwrap().to_string(), "2*f2^2");
        assert_eq!(parse_poly("f_1f_2", 3).unwrap().to_string(), "f1*f2");
        assert_eq!(
            parse_poly("f_2(f_1 + f_2)", 3).unwrap().to_string(),
            "f1*f2 + f2^2"
        );
        assert_eq!(
            parse_poly("4f_1f_2 - 8f_1^2", 3).unwrap().to_string(),
            "-8*f1^2 + 4*f1*f2"
        );
        assert_eq!(parse_poly("-3f_2^2", 3).unwrap().to_string(), "-3*f2^2");
    }

    #[test]
    fn complex_evaluation() {
        let e = parse("psi^2 + psi + 1").unwrap();
        assert!(e.eval(&[]).norm() < 1e-12);
        let v = parse_vector("((f_1 + f_2)/f_1, 1, 0)").unwrap();
        assert_eq!(v.len(), 3);
        assert!((v[0].eval(&[0.0, 2.0, 1.0]) - 1.5).norm() < 1e-15);
        assert_eq!(v[0].denominators().len(), 1);
    }

    #[test]
    fn markers_and_errors() {
        assert_eq!(strip_defective_marker("f_0 ^*"), ("f_0", true));
        assert_eq!(strip_defective_marker("0"), ("0", false));
        assert!(parse("f_").is_err());
        assert!(parse("(f1").is_err());
        assert!(parse_poly("1/f1", 2).is_err());
        assert_eq!(parse_poly("0.5f1", 2).unwrap().to_string(), "1/2*f1");
    }
}
