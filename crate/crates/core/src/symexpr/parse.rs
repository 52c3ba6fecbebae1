//! Recursive-descent parser for the expression DSL.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := ('-' | '+') unary | power
//! power := atom ('^' unary)?
//! atom  := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Identifiers resolve against a [`Context`]: `u_rx` is a jet variable of the
//! declared dependent symbol `u`, `xi1_ru(r,x,y,t,u)` (or the bare `xi1_ru`)
//! a derivative of a declared function, `d_r(e)` a total derivative.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::{ratio, Context, Expr, ExprError, JetVar, Node, Rational, Result, Sym};

#[derive(Clone, Debug, PartialEq)]
pub enum TokenKind {
    Num(Rational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    Eq,
    Gt,
    Eof,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub col: usize,
}

pub struct Lexer;

impl Lexer {
    pub fn tokenize(text: &str) -> Result<Vec<Token>> {
        let chars: Vec<char> = text.chars().collect();
        let mut out = Vec::new();
        let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
        let advance = |i: &mut usize, line: &mut usize, col: &mut usize, c: char| {
            *i += 1;
            if c == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        };
        while i < chars.len() {
            let c = chars[i];
            let (tl, tc) = (line, col);
            if c.is_whitespace() {
                advance(&mut i, &mut line, &mut col, c);
                continue;
            }
            if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
                while i < chars.len() && chars[i] != '\n' {
                    {
                        let ch = chars[i];
                        advance(&mut i, &mut line, &mut col, ch);
                    }
                }
                continue;
            }
            let single = match c {
                '+' => Some(TokenKind::Plus),
                '-' => Some(TokenKind::Minus),
                '*' => Some(TokenKind::Star),
                '/' => Some(TokenKind::Slash),
                '^' => Some(TokenKind::Caret),
                '(' => Some(TokenKind::LParen),
                ')' => Some(TokenKind::RParen),
                '[' => Some(TokenKind::LBracket),
                ']' => Some(TokenKind::RBracket),
                ',' => Some(TokenKind::Comma),
                ';' => Some(TokenKind::Semi),
                ':' => Some(TokenKind::Colon),
                '=' => Some(TokenKind::Eq),
                '>' => Some(TokenKind::Gt),
                _ => None,
            };
            if let Some(kind) = single {
                advance(&mut i, &mut line, &mut col, c);
                out.push(Token { kind, line: tl, col: tc });
                continue;
            }
            if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
                let mut digits = String::new();
                let mut frac = String::new();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    digits.push(chars[i]);
                    {
                        let ch = chars[i];
                        advance(&mut i, &mut line, &mut col, ch);
                    }
                }
                if i < chars.len() && chars[i] == '.' {
                    advance(&mut i, &mut line, &mut col, '.');
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        frac.push(chars[i]);
                        {
                            let ch = chars[i];
                            advance(&mut i, &mut line, &mut col, ch);
                        }
                    }
                }
                let whole: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().unwrap() };
                let mut q = Rational::from_integer(whole);
                if !frac.is_empty() {
                    let f: BigInt = frac.parse().unwrap();
                    let scale = num_traits::pow(BigInt::from(10u32), frac.len());
                    q += Rational::new(f, scale);
                }
                out.push(Token { kind: TokenKind::Num(q), line: tl, col: tc });
                continue;
            }
            if c.is_alphabetic() || c == '_' {
                let mut name = String::new();
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                    if chars[i] == '_' && chars.get(i + 1) == Some(&'{') {
                        // braced multi-index suffix
                        while i < chars.len() && chars[i] != '}' {
                            name.push(chars[i]);
                            {
                                let ch = chars[i];
                                advance(&mut i, &mut line, &mut col, ch);
                            }
                        }
                        if i < chars.len() {
                            name.push('}');
                            advance(&mut i, &mut line, &mut col, '}');
                        }
                        break;
                    }
                    name.push(chars[i]);
                    {
                        let ch = chars[i];
                        advance(&mut i, &mut line, &mut col, ch);
                    }
                }
                out.push(Token { kind: TokenKind::Ident(name), line: tl, col: tc });
                continue;
            }
            return Err(ExprError::Syntax { line: tl, col: tc, msg: format!("unexpected character `{c}`") });
        }
        out.push(Token { kind: TokenKind::Eof, line, col });
        Ok(out)
    }
}

/// Token-stream parser; the document parser builds on it.
pub struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    pub ctx: &'a Context,
}

const BUILTINS: [&str; 6] = ["sin", "cos", "sinh", "cosh", "exp", "sqrt"];

impl<'a> Parser<'a> {
    pub fn new(text: &str, ctx: &'a Context) -> Result<Self> {
        Ok(Parser { tokens: Lexer::tokenize(text)?, pos: 0, ctx })
    }

    /// Parser over an already tokenized slice; an end marker is appended
    /// at the position just past the last token.
    pub fn from_tokens(tokens: &[Token], ctx: &'a Context) -> Self {
        let mut tokens = tokens.to_vec();
        let (line, col) = tokens.last().map_or((1, 1), |t| (t.line, t.col + 1));
        if tokens.last().is_none_or(|t| t.kind != TokenKind::Eof) {
            tokens.push(Token { kind: TokenKind::Eof, line, col });
        }
        Parser { tokens, pos: 0, ctx }
    }

    pub fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    pub fn peek_at(&self, offset: usize) -> &Token {
        &self.tokens[(self.pos + offset).min(self.tokens.len() - 1)]
    }

    pub fn next(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    pub fn at(&self, kind: &TokenKind) -> bool {
        &self.peek().kind == kind
    }

    pub fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.at(kind) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn error<T>(&self, msg: impl Into<String>) -> Result<T> {
        let t = self.peek();
        Err(ExprError::Syntax { line: t.line, col: t.col, msg: msg.into() })
    }

    pub fn expect(&mut self, kind: &TokenKind, what: &str) -> Result<Token> {
        if self.at(kind) {
            Ok(self.next())
        } else {
            self.error(format!("expected {what}, found {:?}", self.peek().kind))
        }
    }

    pub fn expect_ident(&mut self) -> Result<(String, Token)> {
        match self.peek().kind.clone() {
            TokenKind::Ident(s) => Ok((s, self.next())),
            other => self.error(format!("expected identifier, found {other:?}")),
        }
    }

    pub fn at_eof(&self) -> bool {
        self.at(&TokenKind::Eof)
    }

    pub fn parse_expr(&mut self) -> Result<Node> {
        let mut terms = vec![self.parse_term()?];
        loop {
            if self.eat(&TokenKind::Plus) {
                terms.push(self.parse_term()?);
            } else if self.eat(&TokenKind::Minus) {
                let t = self.parse_term()?;
                terms.push(negate(t));
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Node::Sum(terms) })
    }

    pub fn parse_term(&mut self) -> Result<Node> {
        let mut factors = vec![self.parse_unary()?];
        loop {
            if self.eat(&TokenKind::Star) {
                factors.push(self.parse_unary()?);
            } else if self.eat(&TokenKind::Slash) {
                let d = self.parse_unary()?;
                factors.push(Node::Power(Box::new(d), super::rat(-1)));
            } else {
                break;
            }
        }
        Ok(if factors.len() == 1 { factors.pop().unwrap() } else { Node::Product(factors) })
    }

    pub fn parse_unary(&mut self) -> Result<Node> {
        if self.eat(&TokenKind::Minus) {
            let inner = self.parse_unary()?;
            return Ok(negate(inner));
        }
        if self.eat(&TokenKind::Plus) {
            return self.parse_unary();
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Node> {
        let base = self.parse_atom()?;
        if self.at(&TokenKind::Caret) {
            let tok = self.next();
            let exp = self.parse_unary()?.to_expr()?;
            let q = exp.as_rational().ok_or_else(|| ExprError::Syntax {
                line: tok.line,
                col: tok.col,
                msg: format!("exponent must be a rational constant, got `{exp}`"),
            })?;
            return Ok(Node::Power(Box::new(base), q));
        }
        Ok(base)
    }

    fn parse_args(&mut self) -> Result<Vec<Node>> {
        self.expect(&TokenKind::LParen, "`(`")?;
        let mut args = vec![self.parse_expr()?];
        while self.eat(&TokenKind::Comma) {
            args.push(self.parse_expr()?);
        }
        self.expect(&TokenKind::RParen, "`)`")?;
        Ok(args)
    }

    fn parse_atom(&mut self) -> Result<Node> {
        let tok = self.peek().clone();
        match tok.kind.clone() {
            TokenKind::Num(q) => {
                self.next();
                Ok(Node::Rational(q))
            }
            TokenKind::LParen => {
                self.next();
                let e = self.parse_expr()?;
                self.expect(&TokenKind::RParen, "`)`")?;
                Ok(e)
            }
            TokenKind::Ident(name) => {
                self.next();
                self.resolve_ident(&name, &tok)
            }
            other => self.error(format!("unexpected token {other:?}")),
        }
    }

    fn undeclared<T>(&self, name: &str, tok: &Token) -> Result<T> {
        Err(ExprError::Undeclared { name: name.to_string(), line: tok.line, col: tok.col })
    }

    fn resolve_ident(&mut self, name: &str, tok: &Token) -> Result<Node> {
        let call = self.at(&TokenKind::LParen);
        if BUILTINS.contains(&name) && call {
            let mut args = self.parse_args()?;
            if args.len() != 1 {
                return Err(ExprError::Syntax {
                    line: tok.line,
                    col: tok.col,
                    msg: format!("`{name}` takes one argument"),
                });
            }
            let a = Box::new(args.pop().unwrap());
            return Ok(match name {
                "sin" => Node::Sin(a),
                "cos" => Node::Cos(a),
                "sinh" => Node::Sinh(a),
                "cosh" => Node::Cosh(a),
                "exp" => Node::Exp(a),
                _ => Node::Power(a, ratio(1, 2)),
            });
        }
        if let Some(decl) = self.ctx.func(name) {
            let args = if call {
                self.parse_args()?
            } else {
                decl.params.iter().map(|p| self.leaf_node(p, tok)).collect::<Result<_>>()?
            };
            return self.func_node(name, args, Vec::new(), tok);
        }
        if let Some(n) = self.plain_symbol(name) {
            return Ok(n);
        }
        if let Some(e) = self.ctx.definition(name) {
            return Ok(Node::Canonical(e.clone()));
        }
        if let Some(v) = name.strip_prefix("d_") {
            if self.ctx.is_var(v) && call {
                let mut args = self.parse_args()?;
                if args.len() != 1 {
                    return Err(ExprError::Syntax {
                        line: tok.line,
                        col: tok.col,
                        msg: "total derivative takes one argument".into(),
                    });
                }
                let inner = args.pop().unwrap().to_expr()?;
                let d = crate::jetspace::total_derivative_in(self.ctx, &inner, v);
                return Ok(Node::Canonical(d));
            }
        }
        if let Some(split) = name.rfind('_') {
            let (base, suffix) = (&name[..split], &name[split + 1..]);
            if let Some(dep) = self.ctx.dep(base) {
                let vars = dep.vars.clone();
                let names = self.suffix_names(suffix, tok)?;
                for n in &names {
                    if !vars.iter().any(|v| v == n) {
                        return self.undeclared(n, tok);
                    }
                }
                let mut index = names;
                self.ctx.sort_index(&mut index);
                return Ok(Node::Jet(JetVar { dep: super::sym(base), index }));
            }
            if let Some(decl) = self.ctx.func(base) {
                let params = decl.params.clone();
                let args = if call {
                    self.parse_args()?
                } else {
                    params.iter().map(|p| self.leaf_node(p, tok)).collect::<Result<_>>()?
                };
                let deriv =
                    if suffix.starts_with('{') && suffix[1..].starts_with(|c: char| c.is_ascii_digit()) {
                        let inner = suffix.trim_start_matches('{').trim_end_matches('}');
                        let mut out = Vec::new();
                        for part in inner.split(',') {
                            let k: usize = part.trim().parse().map_err(|_| ExprError::Syntax {
                                line: tok.line,
                                col: tok.col,
                                msg: format!("bad derivative position `{part}`"),
                            })?;
                            if k == 0 || k > args.len() {
                                return Err(ExprError::Syntax {
                                    line: tok.line,
                                    col: tok.col,
                                    msg: format!("derivative position {k} out of range"),
                                });
                            }
                            out.push(k - 1);
                        }
                        out
                    } else {
                        let names = self.suffix_names(suffix, tok)?;
                        let arg_names: Option<Vec<Sym>> = args.iter().map(simple_name).collect();
                        let lookup: Vec<Sym> = match arg_names {
                            Some(a) if names.iter().all(|n| a.contains(n)) => a,
                            _ => params.clone(),
                        };
                        let mut out = Vec::new();
                        for n in &names {
                            match lookup.iter().position(|p| p == n) {
                                Some(k) => out.push(k),
                                None => return self.undeclared(n, tok),
                            }
                        }
                        out
                    };
                return self.func_node(base, args, deriv, tok);
            }
        }
        self.undeclared(name, tok)
    }

    fn func_node(&self, name: &str, args: Vec<Node>, deriv: Vec<usize>, tok: &Token) -> Result<Node> {
        let decl = self.ctx.func(name).expect("declared");
        if decl.params.len() != args.len() {
            return Err(ExprError::Syntax {
                line: tok.line,
                col: tok.col,
                msg: format!("`{name}` expects {} arguments, got {}", decl.params.len(), args.len()),
            });
        }
        Ok(Node::Func { name: super::sym(name), args, deriv })
    }

    fn plain_symbol(&self, name: &str) -> Option<Node> {
        if self.ctx.is_param(name) {
            Some(Node::Param(super::sym(name)))
        } else if self.ctx.is_var(name) {
            Some(Node::Var(super::sym(name)))
        } else if self.ctx.dep(name).is_some() {
            Some(Node::Jet(JetVar::new(name)))
        } else {
            None
        }
    }

    fn leaf_node(&self, name: &str, tok: &Token) -> Result<Node> {
        self.plain_symbol(name).map_or_else(|| self.undeclared(name, tok), Ok)
    }

    fn suffix_names(&self, suffix: &str, tok: &Token) -> Result<Vec<Sym>> {
        if let Some(inner) = suffix.strip_prefix('{') {
            let inner = inner.trim_end_matches('}');
            return Ok(inner.split(',').map(|s| super::sym(s.trim())).collect());
        }
        if suffix.is_empty() {
            return Err(ExprError::Syntax {
                line: tok.line,
                col: tok.col,
                msg: "empty derivative suffix".into(),
            });
        }
        Ok(suffix.chars().map(|c| super::sym(&c.to_string())).collect())
    }
}

fn simple_name(n: &Node) -> Option<Sym> {
    match n {
        Node::Var(s) | Node::Param(s) => Some(s.clone()),
        Node::Jet(j) if j.index.is_empty() => Some(j.dep.clone()),
        _ => None,
    }
}

fn negate(n: Node) -> Node {
    match n {
        Node::Rational(q) => Node::Rational(-q),
        other => Node::Product(vec![Node::Rational(-Rational::one()), other]),
    }
}

/// Parses a single expression and canonicalizes it.
pub fn parse(text: &str, ctx: &Context) -> Result<Expr> {
    parse_node(text, ctx)?.to_expr()
}

/// Parses a single expression into its syntax tree.
pub fn parse_node(text: &str, ctx: &Context) -> Result<Node> {
    let mut p = Parser::new(text, ctx)?;
    let n = p.parse_expr()?;
    if !p.at_eof() {
        return p.error(format!("unexpected trailing {:?}", p.peek().kind));
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{Atom, FuncApp};

    fn ctx() -> Context {
        let mut c = Context::new();
        c.declare_param("a").declare_param("k");
        for v in ["r", "x", "y", "t"] {
            c.declare_var(v);
        }
        c.declare_dep("u", &["r", "x", "y", "t"]);
        c.declare_func("xi1", &["r", "x", "y", "t", "u"]);
        c.declare_positive("r");
        c
    }

    #[test]
    fn transliterates_jets() {
        let c = ctx();
        let e = parse("u_tt + k*u_t", &c).unwrap();
        let expect = c.jet_expr("u", &["t", "t"]) + Expr::param("k") * c.jet_expr("u", &["t"]);
        assert_eq!(e, expect);
    }

    #[test]
    fn rewrites_and_cancels() {
        let c = ctx();
        assert_eq!(parse("sin(x)^2 + cos(x)^2", &c).unwrap(), Expr::one());
        assert_eq!(parse("1/r * (r*u_r)", &c).unwrap(), c.jet_expr("u", &["r"]));
        assert_eq!(parse("u_xr", &c).unwrap(), parse("u_rx", &c).unwrap());
    }

    #[test]
    fn function_derivative_suffixes() {
        let c = ctx();
        let bare = parse("xi1_ru", &c).unwrap();
        let full = parse("xi1_ru(r,x,y,t,u)", &c).unwrap();
        let numeric = parse("xi1_{1,5}(r,x,y,t,u)", &c).unwrap();
        assert_eq!(bare, full);
        assert_eq!(bare, numeric);
        match bare.as_atom() {
            Some(Atom::Func(FuncApp { deriv, .. })) => assert_eq!(deriv, &vec![0, 4]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reports_positions() {
        let c = ctx();
        match parse("x + zz", &c) {
            Err(ExprError::Undeclared { name, line, col }) => {
                assert_eq!((name.as_str(), line, col), ("zz", 1, 5));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("x + * y", &c), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse("x^(1/2)", &c), Err(ExprError::FractionalPower(_))));
    }

    #[test]
    fn decimals_are_exact() {
        let c = ctx();
        assert_eq!(parse("0.25*x", &c).unwrap(), Expr::frac(1, 4) * Expr::var("x"));
        assert_eq!(parse("sqrt(8)", &c).unwrap(), parse("2*2^(1/2)", &c).unwrap());
    }
}
