//! Small complex-valued expression language for coefficients, parameter
//! maps and basepoint formulas, e.g. `-delta^2`, `i*delta`, `exp(i*pi/4)`.

use std::collections::BTreeMap;
use std::fmt;

use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(C64),
    Var(String),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Sqrt,
    Exp,
    Log,
    Conj,
    Re,
    Im,
    Abs,
}

/// Parsed expression; keeps its source text for round-tripping.
#[derive(Debug, Clone)]
pub struct Expr {
    src: String,
    root: Node,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.src == other.src
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.src)
    }
}

impl std::str::FromStr for Expr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Expr::parse(s)
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let tokens = lex(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let root = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expr(format!("unexpected trailing input in `{src}`")));
        }
        Ok(Self { src: src.trim().to_string(), root })
    }

    pub fn source(&self) -> &str {
        &self.src
    }

    pub fn eval(&self, env: &BTreeMap<String, C64>) -> Result<C64> {
        eval(&self.root, env)
    }

    /// Names of free variables (constants `i`, `pi`, `e` excluded).
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        collect_vars(&self.root, &mut out);
        out.sort();
        out.dedup();
        out
    }
}

fn collect_vars(n: &Node, out: &mut Vec<String>) {
    match n {
        Node::Num(_) => {}
        Node::Var(v) => {
            if !matches!(v.as_str(), "i" | "pi" | "e") {
                out.push(v.clone())
            }
        }
        Node::Neg(a) | Node::Call(_, a) => collect_vars(a, out),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
            collect_vars(a, out);
            collect_vars(b, out);
        }
    }
}

fn eval(n: &Node, env: &BTreeMap<String, C64>) -> Result<C64> {
    Ok(match n {
        Node::Num(c) => *c,
        Node::Var(v) => match env.get(v) {
            Some(x) => *x,
            None => match v.as_str() {
                "i" => C64::new(0.0, 1.0),
                "pi" => C64::new(std::f64::consts::PI, 0.0),
                "e" => C64::new(std::f64::consts::E, 0.0),
                _ => return Err(Error::Expr(format!("unknown variable `{v}`"))),
            },
        },
        Node::Neg(a) => -eval(a, env)?,
        Node::Add(a, b) => eval(a, env)? + eval(b, env)?,
        Node::Sub(a, b) => eval(a, env)? - eval(b, env)?,
        Node::Mul(a, b) => eval(a, env)? * eval(b, env)?,
        Node::Div(a, b) => {
            let d = eval(b, env)?;
            if d.norm() == 0.0 {
                return Err(Error::Expr("division by zero".into()));
            }
            eval(a, env)? / d
        }
        Node::Pow(a, b) => {
            let base = eval(a, env)?;
            let ex = eval(b, env)?;
            if ex.im == 0.0 && ex.re.fract() == 0.0 && ex.re.abs() <= 64.0 {
                base.powi(ex.re as i32)
            } else if base.norm() == 0.0 {
                C64::new(0.0, 0.0)
            } else {
                (ex * base.ln()).exp()
            }
        }
        Node::Call(f, a) => {
            let x = eval(a, env)?;
            match f {
                Func::Sqrt => x.sqrt(),
                Func::Exp => x.exp(),
                Func::Log => x.ln(),
                Func::Conj => x.conj(),
                Func::Re => C64::new(x.re, 0.0),
                Func::Im => C64::new(x.im, 0.0),
                Func::Abs => C64::new(x.norm(), 0.0),
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn lex(src: &str) -> Result<Vec<Tok>> {
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
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = i;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse::<f64>().map_err(|_| Error::Expr(format!("bad number `{s}`")))?;
            out.push(Tok::Num(v));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(Error::Expr(format!("unexpected character `{c}` in `{src}`")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            Ok(Node::Neg(Box::new(self.unary()?)))
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat('^') {
            // right associative, binds tighter than unary minus on the left
            let ex = self.unary()?;
            Ok(Node::Pow(Box::new(base), Box::new(ex)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Node> {
        match self.tokens.get(self.pos).cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Node::Num(C64::new(v, 0.0)))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.eat('(') {
                    let f = match name.as_str() {
                        "sqrt" => Func::Sqrt,
                        "exp" => Func::Exp,
                        "log" | "ln" => Func::Log,
                        "conj" => Func::Conj,
                        "re" => Func::Re,
                        "im" => Func::Im,
                        "abs" => Func::Abs,
                        _ => return Err(Error::Expr(format!("unknown function `{name}`"))),
                    };
                    let arg = self.expr()?;
                    if !self.eat(')') {
                        return Err(Error::Expr("missing `)`".into()));
                    }
                    Ok(Node::Call(f, Box::new(arg)))
                } else {
                    Ok(Node::Var(name))
                }
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(Error::Expr("missing `)`".into()));
                }
                Ok(e)
            }
            other => Err(Error::Expr(format!("unexpected token {other:?}"))),
        }
    }
}
