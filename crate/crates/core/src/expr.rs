//! Arithmetic expressions over the variables `x1..xn`.
//!
//! Grammar (all values are `f64`):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | '+' unary | power
//! power  := atom ('^' unary)?            right associative, binds tighter than unary minus
//! atom   := number | 'x' index | 'pi' | func '(' expr (',' expr)* ')' | '(' expr ')'
//! func   := exp | log | sqrt | sin | cos | abs | max | min
//! ```

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Abs,
    Max,
    Min,
}

impl Func {
    fn lookup(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "abs" => Func::Abs,
            "max" => Func::Max,
            "min" => Func::Min,
            _ => return None,
        })
    }

    fn variadic(self) -> bool {
        matches!(self, Func::Max | Func::Min)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

/// A parsed expression, evaluated against a coordinate slice.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    root: Node,
    source: String,
    max_var: usize,
}

impl Expr {
    /// Parses `source`; variables must be in `x1..=x{dim}`.
    pub fn parse(source: &str, dim: usize) -> Result<Self> {
        let tokens = tokenize(source)?;
        let mut parser = Parser { tokens, pos: 0, dim, max_var: 0 };
        let root = parser.expr()?;
        if parser.pos != parser.tokens.len() {
            return Err(Error::Expression(format!("unexpected `{}` in `{source}`", parser.tokens[parser.pos])));
        }
        Ok(Self { root, source: source.trim().to_string(), max_var: parser.max_var })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert!(x.len() >= self.max_var);
        eval(&self.root, x)
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

fn eval(node: &Node, x: &[f64]) -> f64 {
    match node {
        Node::Const(v) => *v,
        Node::Var(i) => x[*i],
        Node::Neg(a) => -eval(a, x),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, x), eval(b, x));
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
                BinOp::Pow => pow(a, b),
            }
        }
        Node::Call(func, args) => {
            let first = eval(&args[0], x);
            match func {
                Func::Exp => first.exp(),
                Func::Log => first.ln(),
                Func::Sqrt => first.sqrt(),
                Func::Sin => first.sin(),
                Func::Cos => first.cos(),
                Func::Abs => first.abs(),
                Func::Max => args[1..].iter().fold(first, |acc, a| acc.max(eval(a, x))),
                Func::Min => args[1..].iter().fold(first, |acc, a| acc.min(eval(a, x))),
            }
        }
    }
}

// Small integer exponents go through powi so that x^2 of a negative base is exact.
fn pow(base: f64, exponent: f64) -> f64 {
    if exponent.fract() == 0.0 && exponent.abs() <= 64.0 {
        base.powi(exponent as i32)
    } else {
        base.powf(exponent)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Num(v) => write!(f, "{v}"),
            Token::Ident(s) => f.write_str(s),
            Token::Op(c) => write!(f, "{c}"),
            Token::LParen => f.write_str("("),
            Token::RParen => f.write_str(")"),
            Token::Comma => f.write_str(","),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' | '-' | '*' | '/' | '^' => {
                out.push(Token::Op(c));
                i += 1;
            }
            // Unicode minus, as it tends to sneak in from pasted formulas.
            '−' => {
                out.push(Token::Op('-'));
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            ',' => {
                out.push(Token::Comma);
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
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
                let value = text.parse().map_err(|_| Error::Expression(format!("bad number `{text}`")))?;
                out.push(Token::Num(value));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(Error::Expression(format!("unexpected character `{other}` in `{src}`"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    dim: usize,
    max_var: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Token) -> Result<()> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(Error::Expression(format!("expected `{want}`, found `{t}`"))),
            None => Err(Error::Expression(format!("expected `{want}`, found end of input"))),
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Some(Token::Op('-')) => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some(Token::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.next() {
            Some(Token::Num(v)) => Ok(Node::Const(v)),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => self.ident(name),
            Some(t) => Err(Error::Expression(format!("unexpected `{t}`"))),
            None => Err(Error::Expression("unexpected end of input".into())),
        }
    }

    fn ident(&mut self, name: String) -> Result<Node> {
        if name == "pi" {
            return Ok(Node::Const(std::f64::consts::PI));
        }
        if let Some(func) = Func::lookup(&name) {
            self.expect(Token::LParen)?;
            let mut args = vec![self.expr()?];
            while let Some(Token::Comma) = self.peek() {
                self.pos += 1;
                args.push(self.expr()?);
            }
            self.expect(Token::RParen)?;
            let arity_ok = if func.variadic() { args.len() >= 2 } else { args.len() == 1 };
            if !arity_ok {
                return Err(Error::Expression(format!("wrong number of arguments to `{name}`")));
            }
            return Ok(Node::Call(func, args));
        }
        if let Some(idx) = name.strip_prefix('x').and_then(|s| s.parse::<usize>().ok()) {
            if idx == 0 || idx > self.dim {
                return Err(Error::Expression(format!("variable `{name}` outside x1..x{}", self.dim)));
            }
            self.max_var = self.max_var.max(idx);
            return Ok(Node::Var(idx - 1));
        }
        Err(Error::Expression(format!("unknown identifier `{name}`")))
    }
}
