//! A small arithmetic language for fields on the command line.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Functions: `sin cos exp log sqrt abs pow`. Constants: `pi`, `e`.
//! Variable names are fixed by the caller.

use crate::error::{invalid, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
    Sign,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
            Func::Sign => {
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
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

use Expr::*;

fn num(v: f64) -> Expr {
    Num(v)
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(x), _) if *x == 0.0 => b,
        (_, Num(y)) if *y == 0.0 => a,
        (Num(x), Num(y)) => Num(x + y),
        _ => Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Num(y)) if *y == 0.0 => a,
        (Num(x), _) if *x == 0.0 => neg(b),
        (Num(x), Num(y)) => Num(x - y),
        _ => Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(x), _) | (_, Num(x)) if *x == 0.0 => Num(0.0),
        (Num(x), _) if *x == 1.0 => b,
        (_, Num(y)) if *y == 1.0 => a,
        (Num(x), Num(y)) => Num(x * y),
        _ => Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(x), _) if *x == 0.0 => Num(0.0),
        (_, Num(y)) if *y == 1.0 => a,
        _ => Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Num(x) => Num(-x),
        Neg(inner) => *inner,
        other => Neg(Box::new(other)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    match a {
        Num(x) => Num(f.apply(x)),
        other => Call(f, Box::new(other)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Num(y)) if *y == 1.0 => a,
        (_, Num(y)) if *y == 0.0 => Num(1.0),
        (Num(x), Num(y)) => Num(x.powf(*y)),
        _ => Pow(Box::new(a), Box::new(b)),
    }
}

impl Expr {
    pub fn eval(&self, env: &[f64]) -> f64 {
        match self {
            Num(v) => *v,
            Var(i) => env[*i],
            Neg(a) => -a.eval(env),
            Add(a, b) => a.eval(env) + b.eval(env),
            Sub(a, b) => a.eval(env) - b.eval(env),
            Mul(a, b) => a.eval(env) * b.eval(env),
            Div(a, b) => a.eval(env) / b.eval(env),
            Pow(a, b) => {
                let (x, y) = (a.eval(env), b.eval(env));
                if y.fract() == 0.0 && y.abs() <= i32::MAX as f64 {
                    x.powi(y as i32)
                } else {
                    x.powf(y)
                }
            }
            Call(f, a) => f.apply(a.eval(env)),
        }
    }

    pub fn uses(&self, var: usize) -> bool {
        match self {
            Num(_) => false,
            Var(i) => *i == var,
            Neg(a) | Call(_, a) => a.uses(var),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => a.uses(var) || b.uses(var),
        }
    }

    /// Symbolic partial derivative with light constant folding.
    pub fn derivative(&self, var: usize) -> Expr {
        if !self.uses(var) {
            return num(0.0);
        }
        match self {
            Num(_) => num(0.0),
            Var(i) => num(if *i == var { 1.0 } else { 0.0 }),
            Neg(a) => neg(a.derivative(var)),
            Add(a, b) => add(a.derivative(var), b.derivative(var)),
            Sub(a, b) => sub(a.derivative(var), b.derivative(var)),
            Mul(a, b) => add(mul(a.derivative(var), (**b).clone()), mul((**a).clone(), b.derivative(var))),
            Div(a, b) => div(
                sub(mul(a.derivative(var), (**b).clone()), mul((**a).clone(), b.derivative(var))),
                pow((**b).clone(), num(2.0)),
            ),
            Pow(a, b) if !b.uses(var) => mul(
                mul((**b).clone(), pow((**a).clone(), sub((**b).clone(), num(1.0)))),
                a.derivative(var),
            ),
            Pow(a, b) => mul(
                self.clone(),
                add(
                    mul(b.derivative(var), call(Func::Log, (**a).clone())),
                    div(mul((**b).clone(), a.derivative(var)), (**a).clone()),
                ),
            ),
            Call(f, a) => {
                let inner = (**a).clone();
                let outer = match f {
                    Func::Sin => call(Func::Cos, inner),
                    Func::Cos => neg(call(Func::Sin, inner)),
                    Func::Exp => call(Func::Exp, inner),
                    Func::Log => div(num(1.0), inner),
                    Func::Sqrt => div(num(0.5), call(Func::Sqrt, inner)),
                    Func::Abs => call(Func::Sign, inner),
                    Func::Sign => num(0.0),
                };
                mul(outer, a.derivative(var))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Op(char),
}

fn lex(src: &str) -> CliResult<Vec<Tok>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
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
            let v = text.parse::<f64>().map_err(|_| invalid(format!("bad number {text:?} in expression")))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Name(chars[start..i].iter().collect()));
        } else if "+-*/^(),".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(invalid(format!("unexpected character {c:?} in expression")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: char) -> CliResult<()> {
        if self.eat(op) {
            Ok(())
        } else {
            Err(invalid(format!("expected {op:?} at token {}", self.pos + 1)))
        }
    }

    fn expr(&mut self) -> CliResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> CliResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> CliResult<Expr> {
        if self.eat('-') {
            return Ok(Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        let base = self.atom()?;
        if self.eat('^') {
            return Ok(Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> CliResult<Expr> {
        match self.toks.get(self.pos).cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Num(v))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Name(name)) => {
                self.pos += 1;
                if self.eat('(') {
                    let mut args = vec![self.expr()?];
                    while self.eat(',') {
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    return self.apply(&name, args);
                }
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Var(i));
                }
                match name.as_str() {
                    "pi" => Ok(Num(std::f64::consts::PI)),
                    "e" => Ok(Num(std::f64::consts::E)),
                    _ => Err(invalid(format!(
                        "unknown variable {name:?}; expected one of {}",
                        self.vars.join(", ")
                    ))),
                }
            }
            Some(Tok::Op(c)) => Err(invalid(format!("unexpected {c:?} in expression"))),
            None => Err(invalid("expression ended early")),
        }
    }

    fn apply(&self, name: &str, mut args: Vec<Expr>) -> CliResult<Expr> {
        if name == "pow" {
            if args.len() != 2 {
                return Err(invalid("pow takes two arguments"));
            }
            let b = args.pop().unwrap();
            let a = args.pop().unwrap();
            return Ok(Pow(Box::new(a), Box::new(b)));
        }
        let f = Func::from_name(name).ok_or_else(|| invalid(format!("unknown function {name:?}")))?;
        if args.len() != 1 {
            return Err(invalid(format!("{name} takes one argument")));
        }
        Ok(Call(f, Box::new(args.pop().unwrap())))
    }
}

/// Parses `src` with the given variable names; `Var(i)` refers to `vars[i]`.
pub fn parse(src: &str, vars: &[&str]) -> CliResult<Expr> {
    let toks = lex(src)?;
    if toks.is_empty() {
        return Err(invalid("empty expression"));
    }
    let mut p = Parser { toks, pos: 0, vars };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(invalid(format!("trailing input after token {}", p.pos)));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TX: &[&str] = &["t", "x"];

    fn ev(src: &str, t: f64, x: f64) -> f64 {
        parse(src, TX).unwrap().eval(&[t, x])
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", 0.0, 0.0), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2", 0.0, 0.0), 512.0);
        assert_eq!(ev("-x^2", 0.0, 3.0), -9.0);
        assert_eq!(ev("(1 + 2) * 3 - 4 / 2", 0.0, 0.0), 7.0);
        assert_eq!(ev("8 / 4 / 2", 0.0, 0.0), 1.0);
        assert_eq!(ev("1.5e1 + 2E-1", 0.0, 0.0), 15.2);
    }

    #[test]
    fn functions_and_constants() {
        assert!((ev("sin(t) * exp(x)", 0.5, 1.0) - 0.5f64.sin() * 1f64.exp()).abs() < 1e-15);
        assert_eq!(ev("pow(abs(x), 0.5)", 0.0, -4.0), 2.0);
        assert!((ev("cos(pi)", 0.0, 0.0) + 1.0).abs() < 1e-15);
        assert_eq!(ev("log(e)", 0.0, 0.0), 1.0);
    }

    #[test]
    fn parse_errors() {
        for bad in ["", "1 +", "foo(x)", "y", "(1", "1 2", "sin(1, 2)", "pow(1)", "3 $ 4"] {
            assert!(parse(bad, TX).is_err(), "{bad}");
        }
    }

    #[test]
    fn uses_reports_variables() {
        let e = parse("sin(t) + 2", TX).unwrap();
        assert!(e.uses(0));
        assert!(!e.uses(1));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let cases = [
            "t * x",
            "sin(t) * x^2",
            "exp(t * x) / (1 + t^2)",
            "pow(t + 2, x)",
            "sqrt(1 + t^2) - cos(3 * t)",
            "log(2 + t) * abs(x - 0.1)",
            "t ^ 2.5",
        ];
        for src in cases {
            let e = parse(src, TX).unwrap();
            let d = e.derivative(0);
            for (t, x) in [(0.3, 0.7), (0.8, -0.4), (0.55, 1.3)] {
                let h = 1e-6;
                let fd = (e.eval(&[t + h, x]) - e.eval(&[t - h, x])) / (2.0 * h);
                let an = d.eval(&[t, x]);
                assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()), "{src}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn derivative_of_t_free_expression_is_zero() {
        let e = parse("x^3 + cos(x)", TX).unwrap();
        assert_eq!(e.derivative(0), Expr::Num(0.0));
    }
}
