//! Recursive-descent parser for expressions, metric files and vector fields.

use thiserror::Error;

use super::expr::{Expr, Func};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, bool),
    Ident(String),
    Sym(char),
    /// Statement separator: newline or `;`.
    End,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line: tl, col: tc });
        if c == '\n' || c == ';' {
            push(&mut out, Tok::End);
            i += 1;
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        } else if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
        } else if c.is_whitespace() {
            i += 1;
            col += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            let mut integral = true;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                integral &= chars[i] != '.';
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    integral = false;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse::<f64>().map_err(|_| ParseError {
                line: tl,
                col: tc,
                message: format!("malformed number '{s}'"),
            })?;
            col += i - start;
            push(&mut out, Tok::Num(v, integral));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            push(&mut out, Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()=<>,".contains(c) {
            push(&mut out, Tok::Sym(c));
            i += 1;
            col += 1;
        } else {
            return Err(ParseError {
                line,
                col,
                message: format!("unexpected character '{c}'"),
            });
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    resolve: Box<dyn Fn(&str) -> Option<usize>>,
}

fn resolver(vars: &[String]) -> Box<dyn Fn(&str) -> Option<usize>> {
    let vars = vars.to_vec();
    Box::new(move |s| vars.iter().position(|v| v == s))
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        let t = self.peek();
        ParseError {
            line: t.line,
            col: t.col,
            message: message.into(),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek().tok == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error_here(format!("expected '{c}'")))
        }
    }

    fn at_statement_end(&self) -> bool {
        matches!(self.peek().tok, Tok::End | Tok::Eof)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
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

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let mut base = self.atom()?;
        while self.eat('^') {
            let negative = if self.eat('-') {
                true
            } else {
                self.eat('+');
                false
            };
            let t = self.peek().clone();
            match t.tok {
                Tok::Num(v, true) if v <= i32::MAX as f64 => {
                    self.bump();
                    let n = v as i32;
                    base = Expr::Pow(Box::new(base), if negative { -n } else { n });
                }
                Tok::Num(..) => return Err(self.error_here("exponent must be an integer literal")),
                _ => return Err(self.error_here("expected integer exponent after '^'")),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Num(v, _) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(f) = Func::from_name(&name) {
                    if !self.eat('(') {
                        return Err(self.error_here(format!("expected '(' after '{name}'")));
                    }
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Expr::Func(f, Box::new(arg)));
                }
                match (self.resolve)(&name) {
                    Some(i) => Ok(Expr::Var(i)),
                    None => Err(ParseError {
                        line: t.line,
                        col: t.col,
                        message: format!("unknown identifier '{name}'"),
                    }),
                }
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::End | Tok::Eof => Err(self.error_here("expected expression")),
            Tok::Sym(c) => Err(self.error_here(format!("unexpected '{c}'"))),
        }
    }
}

/// Parses a standalone expression over the given variable names.
pub fn parse_expr(text: &str, vars: &[String]) -> Result<Expr, ParseError> {
    let toks: Vec<Token> = lex(text)?
        .into_iter()
        .filter(|t| t.tok != Tok::End)
        .collect();
    let mut p = Parser { toks, pos: 0, resolve: resolver(vars) };
    let e = p.expr()?;
    if p.peek().tok != Tok::Eof {
        return Err(p.error_here("trailing input"));
    }
    Ok(e)
}

/// Parses `c0*dt + c1*dx + ...` into per-coordinate coefficient expressions.
pub fn parse_vector_field(text: &str, vars: &[String]) -> Result<Vec<Expr>, ParseError> {
    let dim = vars.len();
    let owned = vars.to_vec();
    let resolve = Box::new(move |s: &str| {
        owned.iter().position(|v| v == s).or_else(|| {
            s.strip_prefix('d')
                .and_then(|rest| owned.iter().position(|v| v == rest))
                .map(|i| dim + i)
        })
    });
    let toks: Vec<Token> = lex(text)?
        .into_iter()
        .filter(|t| t.tok != Tok::End)
        .collect();
    let mut p = Parser { toks, pos: 0, resolve };
    let e = p.expr()?;
    if p.peek().tok != Tok::Eof {
        return Err(p.error_here("trailing input"));
    }
    let lin = linear_split(&e, dim).map_err(|message| ParseError { line: 1, col: 1, message })?;
    Ok(lin
        .into_iter()
        .map(|c| c.unwrap_or(Expr::Const(0.0)))
        .collect())
}

type Linear = Vec<Option<Expr>>;

/// Splits an expression linear in the basis symbols (`Var(dim + i)`).
fn linear_split(e: &Expr, dim: usize) -> Result<Linear, String> {
    let has_basis = |e: &Expr| e.var_bound() > dim || (dim..2 * dim).any(|i| e.depends_on(i));
    let none = || vec![None; dim];
    let combine = |a: Linear, b: Linear, sign: bool| -> Linear {
        a.into_iter()
            .zip(b)
            .map(|(x, y)| match (x, y) {
                (None, None) => None,
                (Some(x), None) => Some(x),
                (None, Some(y)) => Some(if sign { y } else { Expr::Neg(Box::new(y)) }),
                (Some(x), Some(y)) => Some(if sign {
                    Expr::Add(Box::new(x), Box::new(y))
                } else {
                    Expr::Sub(Box::new(x), Box::new(y))
                }),
            })
            .collect()
    };
    let scale = |l: Linear, k: &Expr, left: bool| -> Linear {
        l.into_iter()
            .map(|c| {
                c.map(|c| match (c, left) {
                    (Expr::Const(one), _) if one == 1.0 => k.clone(),
                    (c, true) => Expr::Mul(Box::new(k.clone()), Box::new(c)),
                    (c, false) => Expr::Mul(Box::new(c), Box::new(k.clone())),
                })
            })
            .collect()
    };
    match e {
        Expr::Var(i) if *i >= dim => {
            let mut l = none();
            l[i - dim] = Some(Expr::Const(1.0));
            Ok(l)
        }
        Expr::Add(a, b) => Ok(combine(linear_split(a, dim)?, linear_split(b, dim)?, true)),
        Expr::Sub(a, b) => Ok(combine(linear_split(a, dim)?, linear_split(b, dim)?, false)),
        Expr::Neg(a) => Ok(combine(none(), linear_split(a, dim)?, false)),
        Expr::Mul(a, b) => match (has_basis(a), has_basis(b)) {
            (false, true) => Ok(scale(linear_split(b, dim)?, a, true)),
            (true, false) => Ok(scale(linear_split(a, dim)?, b, false)),
            (true, true) => Err("product of two coordinate vector fields".into()),
            (false, false) => Err("term without a coordinate vector field".into()),
        },
        Expr::Div(a, b) if !has_basis(b) => {
            let l = linear_split(a, dim)?;
            Ok(l.into_iter()
                .map(|c| c.map(|c| Expr::Div(Box::new(c), b.clone())))
                .collect())
        }
        _ if !has_basis(e) => Err("term without a coordinate vector field".into()),
        _ => Err("coordinate vector fields must appear linearly".into()),
    }
}

/// Raw content of a metric file before validation against positivity.
#[derive(Debug, Clone)]
pub(crate) struct MetricFile {
    pub dim: usize,
    pub vars: Vec<String>,
    pub entries: Vec<Vec<Expr>>,
    pub domain: Vec<(usize, DomainOp, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum DomainOp {
    Greater,
    Less,
}

pub(crate) fn default_vars(dim: usize) -> Vec<String> {
    let names: &[&str] = match dim {
        2 => &["x", "y"],
        3 => &["t", "x", "y"],
        _ => &["t", "x", "y", "z"],
    };
    names.iter().map(|s| s.to_string()).collect()
}

pub(crate) fn parse_metric_file(text: &str) -> Result<MetricFile, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, resolve: Box::new(|_: &str| None) };
    let skip_ends = |p: &mut Parser| {
        while p.peek().tok == Tok::End {
            p.bump();
        }
    };

    skip_ends(&mut p);
    let dim = match p.peek().tok.clone() {
        Tok::Ident(s) if s == "dim" => {
            p.bump();
            p.expect('=')?;
            let t = p.peek().clone();
            match t.tok {
                Tok::Num(v, true) if v == 2.0 || v == 3.0 || v == 4.0 => {
                    p.bump();
                    v as usize
                }
                Tok::Num(..) => return Err(p.error_here("dimension must be 2, 3 or 4")),
                _ => return Err(p.error_here("expected dimension")),
            }
        }
        _ => return Err(p.error_here("metric file must start with 'dim = <2|3|4>'")),
    };
    if !p.at_statement_end() {
        return Err(p.error_here("expected end of statement"));
    }

    let mut vars = default_vars(dim);
    p.resolve = resolver(&vars);
    let mut entries: Vec<Vec<Option<Expr>>> = vec![vec![None; dim]; dim];
    let mut domain = Vec::new();
    let mut seen_entry = false;

    loop {
        skip_ends(&mut p);
        let head = p.peek().clone();
        let word = match &head.tok {
            Tok::Eof => break,
            Tok::Ident(s) => s.clone(),
            _ => return Err(p.error_here("expected 'vars', 'g' or 'domain'")),
        };
        p.bump();
        match word.as_str() {
            "vars" => {
                if seen_entry {
                    return Err(ParseError {
                        line: head.line,
                        col: head.col,
                        message: "'vars' must precede metric entries".into(),
                    });
                }
                p.expect('=')?;
                let mut names = Vec::new();
                while let Tok::Ident(s) = p.peek().tok.clone() {
                    if Func::from_name(&s).is_some() || names.contains(&s) {
                        return Err(p.error_here(format!("invalid variable name '{s}'")));
                    }
                    names.push(s);
                    p.bump();
                    p.eat(',');
                }
                if names.len() != dim {
                    return Err(p.error_here(format!("expected {dim} variable names, got {}", names.len())));
                }
                vars = names;
                p.resolve = resolver(&vars);
            }
            "g" => {
                seen_entry = true;
                let (i, j) = parse_index_pair(&mut p, &vars)?;
                p.expect('=')?;
                let e = p.expr()?;
                let (a, b) = (i.min(j), i.max(j));
                if let Some(prev) = &entries[a][b] {
                    if *prev != e {
                        return Err(ParseError {
                            line: head.line,
                            col: head.col,
                            message: format!(
                                "asymmetric duplicate assignment for g {}{}",
                                vars[a], vars[b]
                            ),
                        });
                    }
                }
                entries[a][b] = Some(e);
            }
            "domain" => {
                let t = p.peek().clone();
                let var = match &t.tok {
                    Tok::Ident(s) => vars
                        .iter()
                        .position(|v| v == s)
                        .ok_or_else(|| p.error_here(format!("unknown identifier '{s}'")))?,
                    _ => return Err(p.error_here("expected variable in domain constraint")),
                };
                p.bump();
                let op = if p.eat('>') {
                    DomainOp::Greater
                } else if p.eat('<') {
                    DomainOp::Less
                } else {
                    return Err(p.error_here("expected '>' or '<'"));
                };
                let negative = p.eat('-');
                let bound = match p.peek().tok {
                    Tok::Num(v, _) => v,
                    _ => return Err(p.error_here("expected numeric bound")),
                };
                p.bump();
                domain.push((var, op, if negative { -bound } else { bound }));
            }
            other => {
                return Err(ParseError {
                    line: head.line,
                    col: head.col,
                    message: format!("unknown statement '{other}'"),
                })
            }
        }
        if !p.at_statement_end() {
            return Err(p.error_here("expected end of statement"));
        }
    }

    let mut full = vec![vec![Expr::Const(0.0); dim]; dim];
    for a in 0..dim {
        for b in a..dim {
            match entries[a][b].take() {
                Some(e) => {
                    full[a][b] = e.clone();
                    full[b][a] = e;
                }
                None if a == b => {
                    let t = p.peek();
                    return Err(ParseError {
                        line: t.line,
                        col: t.col,
                        message: format!("missing diagonal entry g {}{}", vars[a], vars[a]),
                    });
                }
                None => {}
            }
        }
    }
    Ok(MetricFile {
        dim,
        vars,
        entries: full,
        domain,
    })
}

fn parse_index_pair(p: &mut Parser, vars: &[String]) -> Result<(usize, usize), ParseError> {
    let t = p.peek().clone();
    let first = match &t.tok {
        Tok::Ident(s) => s.clone(),
        _ => return Err(p.error_here("expected index pair after 'g'")),
    };
    p.bump();
    let lookup = |s: &str| vars.iter().position(|v| v == s);
    if let Some(i) = lookup(&first) {
        // Two separate tokens: `g t x`.
        if let Tok::Ident(second) = p.peek().tok.clone() {
            if let Some(j) = lookup(&second) {
                p.bump();
                return Ok((i, j));
            }
        }
    }
    let splits: Vec<(usize, usize)> = (1..first.len())
        .filter(|&k| first.is_char_boundary(k))
        .filter_map(|k| Some((lookup(&first[..k])?, lookup(&first[k..])?)))
        .collect();
    match splits.as_slice() {
        [one] => Ok(*one),
        [] => Err(ParseError {
            line: t.line,
            col: t.col,
            message: format!("unknown index pair '{first}'"),
        }),
        _ => Err(ParseError {
            line: t.line,
            col: t.col,
            message: format!("ambiguous index pair '{first}'"),
        }),
    }
}
