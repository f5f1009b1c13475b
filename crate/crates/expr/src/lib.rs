//! Arithmetic expressions over coordinates `y1..yn`.
//!
//! Grammar: `+ - * / ^`, unary minus, parentheses, numbers, `yK`,
//! `abs sqrt exp ln sin cos` applied with parentheses, and the presets
//! `linear` (`y1`), `cone` (`|y|`) and `indicator-halfspace` (`1` where
//! `y1 > 0`, else `0`) when they make up the whole expression.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Coord(usize),
    Neg(Box<Expr>),
    Bin(Op, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
    Norm,
    HalfSpace,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Func {
    Abs,
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
}

impl Func {
    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Abs => v.abs(),
            Func::Sqrt => v.sqrt(),
            Func::Exp => v.exp(),
            Func::Ln => v.ln(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExprError {
    pub pos: usize,
    pub msg: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at column {}: {}", self.pos + 1, self.msg)
    }
}

impl std::error::Error for ExprError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
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
            // exponent part
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text.parse::<f64>().map_err(|_| ExprError {
                pos: start,
                msg: format!("bad number '{text}'"),
            })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((start, Tok::Ident(chars[start..i].iter().collect())));
        } else if "+-*/^()·".contains(c) {
            out.push((i, Tok::Sym(if c == '·' { '*' } else { c })));
            i += 1;
        } else {
            return Err(ExprError {
                pos: i,
                msg: format!("unexpected character '{c}'"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.1)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |t| t.0)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                Op::Add
            } else if self.eat('-') {
                Op::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                Op::Mul
            } else if self.eat('/') {
                Op::Div
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat('^') {
            // right associative, binds tighter than unary minus on the left
            let exp = self.unary()?;
            return Ok(Expr::Bin(Op::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.at += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Sym('(')) => {
                self.at += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return self.err("expected ')'");
                }
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.at += 1;
                if let Some(k) = name.strip_prefix('y') {
                    if let Ok(k) = k.parse::<usize>() {
                        if k == 0 {
                            return Err(ExprError {
                                pos,
                                msg: "coordinates start at y1".into(),
                            });
                        }
                        return Ok(Expr::Coord(k - 1));
                    }
                }
                if let Some(f) = Func::from_name(&name) {
                    if !self.eat('(') {
                        return self.err(format!("expected '(' after {name}"));
                    }
                    let arg = self.expr()?;
                    if !self.eat(')') {
                        return self.err("expected ')'");
                    }
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                Err(ExprError {
                    pos,
                    msg: format!("unknown name '{name}'"),
                })
            }
            Some(Tok::Sym(c)) => self.err(format!("unexpected '{c}'")),
            None => self.err("unexpected end of expression"),
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        match src.trim() {
            "linear" => return Ok(Expr::Coord(0)),
            "cone" => return Ok(Expr::Norm),
            "indicator-halfspace" => return Ok(Expr::HalfSpace),
            _ => {}
        }
        let toks = lex(src)?;
        let mut p = Parser {
            toks,
            at: 0,
            end: src.chars().count(),
        };
        let e = p.expr()?;
        if p.at != p.toks.len() {
            return p.err("trailing input");
        }
        Ok(e)
    }

    /// Largest coordinate index used, plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Norm => 0,
            Expr::HalfSpace => 1,
            Expr::Coord(k) => k + 1,
            Expr::Neg(a) | Expr::Call(_, a) => a.arity(),
            Expr::Bin(_, a, b) => a.arity().max(b.arity()),
        }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Coord(k) => y[*k],
            Expr::Neg(a) => -a.eval(y),
            Expr::Call(f, a) => f.apply(a.eval(y)),
            Expr::Norm => y.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Expr::HalfSpace => {
                if y[0] > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(y), b.eval(y));
                match op {
                    Op::Add => a + b,
                    Op::Sub => a - b,
                    Op::Mul => a * b,
                    Op::Div => a / b,
                    Op::Pow => {
                        // integer powers through powi, so (-2)^2 = 4
                        if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
                            a.powi(b as i32)
                        } else {
                            a.powf(b)
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, y: &[f64]) -> f64 {
        Expr::parse(s).unwrap().eval(y)
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("1 + 2 * 3", &[]), 7.0);
        assert_eq!(ev("(1 + 2) * 3", &[]), 9.0);
        assert_eq!(ev("2 ^ 3 ^ 2", &[]), 512.0);
        assert_eq!(ev("-2 ^ 2", &[]), -4.0);
        assert_eq!(ev("2 ^ -1", &[]), 0.5);
        assert_eq!(ev("8 / 4 / 2", &[]), 1.0);
        assert_eq!(ev("3 · 2", &[]), 6.0);
        assert_eq!(ev("1e-2 * 100", &[]), 1.0);
    }

    #[test]
    fn coordinates_and_functions() {
        let y = [-0.5, 2.0];
        assert_eq!(ev("abs(y1) + y2^2", &y), 4.5);
        assert_eq!(ev("sqrt(y2 * 8)", &y), 4.0);
        assert_eq!(Expr::parse("y2 - abs(y1)").unwrap().arity(), 2);
    }

    #[test]
    fn presets() {
        assert_eq!(ev("linear", &[0.3, 1.0]), 0.3);
        assert_eq!(ev("cone", &[3.0, 4.0]), 5.0);
        assert_eq!(ev("indicator-halfspace", &[0.1, -3.0]), 1.0);
        assert_eq!(ev("indicator-halfspace", &[0.0, 3.0]), 0.0);
    }

    #[test]
    fn errors_carry_positions() {
        let e = Expr::parse("1 + * 2").unwrap_err();
        assert_eq!(e.pos, 4);
        assert!(Expr::parse("y0").is_err());
        assert!(Expr::parse("foo(1)").is_err());
        assert!(Expr::parse("abs 1").is_err());
        assert!(Expr::parse("(1 + 2").is_err());
        assert!(Expr::parse("1 2").is_err());
        assert!(Expr::parse("1 $ 2").is_err());
    }
}
