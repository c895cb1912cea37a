//! Tiny arithmetic expression language for grid functions and weights.
//!
//! Supports `+ - * / ^`, parentheses, `abs`, `min`, `max`, numeric literals
//! and coordinates `x0, x1, ...` (with `x`, `y`, `z` as aliases for the
//! first three).

use anyhow::{anyhow, bail, Result};
use musob::Field;

#[derive(Clone, Debug)]
enum Expr {
    Num(f64),
    Coord(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Abs(Box<Expr>),
    Min(Vec<Expr>),
    Max(Vec<Expr>),
}

impl Expr {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Coord(i) => x.get(*i).copied().unwrap_or(f64::NAN),
            Expr::Neg(e) => -e.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => a.eval(x).powf(b.eval(x)),
            Expr::Abs(e) => e.eval(x).abs(),
            Expr::Min(es) => es.iter().map(|e| e.eval(x)).fold(f64::INFINITY, f64::min),
            Expr::Max(es) => es.iter().map(|e| e.eval(x)).fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '/' => {
                out.push(Token::Slash);
                i += 1;
            }
            '^' => {
                out.push(Token::Caret);
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
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit()
                        || bytes[i] == '.'
                        || bytes[i] == 'e'
                        || bytes[i] == 'E'
                        || ((bytes[i] == '+' || bytes[i] == '-')
                            && i > start
                            && (bytes[i - 1] == 'e' || bytes[i - 1] == 'E')))
                {
                    i += 1;
                }
                let text: String = bytes[start..i].iter().collect();
                out.push(Token::Num(text.parse().map_err(|_| anyhow!("bad number `{text}`"))?));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                out.push(Token::Ident(bytes[start..i].iter().collect()));
            }
            _ => bail!("unexpected character `{c}` in expression"),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
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

    fn expect(&mut self, token: Token) -> Result<()> {
        match self.next() {
            Some(t) if t == token => Ok(()),
            other => bail!("expected {token:?}, found {other:?}"),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.next();
                    acc = Expr::Add(Box::new(acc), Box::new(self.term()?));
                }
                Some(Token::Minus) => {
                    self.next();
                    acc = Expr::Sub(Box::new(acc), Box::new(self.term()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.next();
                    acc = Expr::Mul(Box::new(acc), Box::new(self.factor()?));
                }
                Some(Token::Slash) => {
                    self.next();
                    acc = Expr::Div(Box::new(acc), Box::new(self.factor()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    // right-associative power binds tighter than unary minus on its left
    fn factor(&mut self) -> Result<Expr> {
        if let Some(Token::Minus) = self.peek() {
            self.next();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.primary()?;
        if let Some(Token::Caret) = self.peek() {
            self.next();
            let exp = self.factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Token::Num(v)) => Ok(Expr::Num(v)),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => {
                if let Some(Token::LParen) = self.peek() {
                    self.next();
                    let mut args = vec![self.expr()?];
                    while let Some(Token::Comma) = self.peek() {
                        self.next();
                        args.push(self.expr()?);
                    }
                    self.expect(Token::RParen)?;
                    match (name.as_str(), args.len()) {
                        ("abs", 1) => Ok(Expr::Abs(Box::new(args.pop().unwrap()))),
                        ("min", n) if n >= 2 => Ok(Expr::Min(args)),
                        ("max", n) if n >= 2 => Ok(Expr::Max(args)),
                        (other, n) => bail!("unknown function `{other}` with {n} arguments"),
                    }
                } else {
                    coordinate(&name)
                }
            }
            other => bail!("unexpected token {other:?}"),
        }
    }
}

fn coordinate(name: &str) -> Result<Expr> {
    match name {
        "x" => return Ok(Expr::Coord(0)),
        "y" => return Ok(Expr::Coord(1)),
        "z" => return Ok(Expr::Coord(2)),
        _ => {}
    }
    if let Some(rest) = name.strip_prefix('x') {
        if let Ok(i) = rest.parse::<usize>() {
            return Ok(Expr::Coord(i));
        }
    }
    bail!("unknown identifier `{name}` (coordinates are x, y, z or x0, x1, ...)")
}

/// Parse an expression into a shareable scalar field.
pub fn parse_field(src: &str) -> Result<Field> {
    let tokens = tokenize(src)?;
    let mut parser = Parser { tokens, pos: 0 };
    let expr = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        bail!("trailing tokens in expression `{src}`");
    }
    Ok(Field::from_fn(src.to_string(), move |x| expr.eval(x)))
}
