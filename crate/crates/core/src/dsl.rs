//! Document format: declarations, PDEs, vector fields, tables and the other
//! objects the tools operate on, as `;`-terminated statements.
//!
//! ```text
//! param a, k;
//! var r, x, y, t;
//! dep u(r, x, y, t);
//! domain r > 0;
//! pde telegraph [u_tt]: u_tt + k*u_t = a^2*((1/r)*d_r(r*u_r) + u_xx/r^2 + u_yy);
//! field v5: 2*a^2*t d/dy + 2*y d/dt - k*y*u d/du;
//! group g1 (s): r, x + s, y, t, u;
//! transform u4 (eps): exp(-eps)*U(r, x, y, t);
//! table T: v1, v2;
//! row T v1: 0, v2;
//! matrix M [v1, s]: 2;
//! mrow M 1: 1 = exp(s);
//! element X: a1*v1 + v2;
//! ```
//!
//! Other statements: `positive`, `fun`, `order`, `equation`, `ansatz`,
//! `gensol`, `span`, `expr`, `define`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::detsys::GeneralSolution;
use crate::jetspace::{JetContext, JetError, Pde};
use crate::liealg::{self, AlgebraElement, LieError, Provenance, StructureConstants};
use crate::linalg::Vector;
use crate::numcheck::{NumError, PointMap, TransformRecipe};
use crate::prolong::{ProlongError, VectorField};
use crate::ratfunc::RatFunc;
use crate::symexpr::{sym, Atom, Context, Expr, ExprError, JetVar, Lexer, Parser, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("{kind} `{name}` is defined twice")]
    Duplicate { kind: &'static str, name: String },
    #[error("no {kind} named `{name}`")]
    Missing { kind: &'static str, name: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Prolong(#[from] ProlongError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Lie(#[from] LieError),
}

pub type Result<T> = std::result::Result<T, DslError>;

#[derive(Clone, Debug, PartialEq)]
pub struct PdeDecl {
    pub name: String,
    pub lhs: Expr,
    pub rhs: Expr,
    pub lead: JetVar,
}

/// A field as written: one coefficient per independent variable, then the
/// dependent one.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldDecl {
    pub name: String,
    pub coefficients: Vec<Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupDecl {
    pub name: String,
    pub param: String,
    pub components: Vec<Expr>,
}

/// Square matrix as entered; rows not given are identity rows.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixDecl {
    pub name: String,
    pub generator: String,
    pub param: String,
    pub entries: Vec<Vec<Expr>>,
}

/// Table of brackets: `rows[label][j]` is the bracket of `label` with the
/// `j`-th label, as an expression linear in the labels.
#[derive(Clone, Debug, PartialEq)]
struct TableDecl {
    name: String,
    labels: Vec<String>,
    rows: BTreeMap<String, Vec<Expr>>,
}

#[derive(Clone, Debug, Default)]
pub struct Document {
    ctx: Context,
    order: Option<usize>,
    pdes: Vec<PdeDecl>,
    fields: Vec<FieldDecl>,
    groups: Vec<GroupDecl>,
    transforms: Vec<TransformRecipe>,
    equations: Vec<(String, Expr)>,
    gensol: Option<GeneralSolution>,
    ansatz: Option<Vec<String>>,
    tables: Vec<TableDecl>,
    matrices: Vec<MatrixDecl>,
    elements: Vec<(String, Expr)>,
    spans: Vec<(String, Vec<Expr>)>,
    exprs: Vec<(String, Expr)>,
}

type Tokens<'t> = &'t [Token];

fn syntax(tok: &Token, msg: impl Into<String>) -> DslError {
    DslError::Expr(ExprError::Syntax { line: tok.line, col: tok.col, msg: msg.into() })
}

fn ident(tok: &Token) -> Option<&str> {
    match &tok.kind {
        TokenKind::Ident(s) => Some(s),
        _ => None,
    }
}

/// Splits at top-level occurrences of `sep`.
fn split_top<'t>(toks: Tokens<'t>, sep: &TokenKind) -> Vec<Tokens<'t>> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, t) in toks.iter().enumerate() {
        match t.kind {
            TokenKind::LParen | TokenKind::LBracket => depth += 1,
            TokenKind::RParen | TokenKind::RBracket => depth -= 1,
            _ => {}
        }
        if depth == 0 && &t.kind == sep {
            out.push(&toks[start..i]);
            start = i + 1;
        }
    }
    out.push(&toks[start..]);
    out
}

fn find_top(toks: Tokens, kind: &TokenKind) -> Option<usize> {
    let mut depth = 0i32;
    for (i, t) in toks.iter().enumerate() {
        match t.kind {
            TokenKind::LParen | TokenKind::LBracket => depth += 1,
            TokenKind::RParen | TokenKind::RBracket => depth -= 1,
            _ => {}
        }
        if depth == 0 && &t.kind == kind {
            return Some(i);
        }
    }
    None
}

fn expr_of(toks: Tokens, ctx: &Context, at: &Token) -> Result<Expr> {
    if toks.is_empty() {
        return Err(syntax(at, "expected an expression"));
    }
    let mut p = Parser::from_tokens(toks, ctx);
    let node = p.parse_expr()?;
    if !p.at_eof() {
        return Err(syntax(p.peek(), format!("unexpected {:?}", p.peek().kind)));
    }
    Ok(node.to_expr()?)
}

fn names_of(toks: Tokens, at: &Token) -> Result<Vec<String>> {
    if toks.is_empty() {
        return Ok(Vec::new());
    }
    split_top(toks, &TokenKind::Comma)
        .into_iter()
        .map(|part| match part {
            [t] => ident(t).map(str::to_string).ok_or_else(|| syntax(t, "expected a name")),
            [] => Err(syntax(at, "empty name")),
            [t, ..] => Err(syntax(t, "expected a single name")),
        })
        .collect()
}

/// `name(arg, ...)` or `name`.
fn call_of(toks: Tokens, at: &Token) -> Result<(String, Vec<String>)> {
    let (first, rest) = toks.split_first().ok_or_else(|| syntax(at, "expected a name"))?;
    let name = ident(first).ok_or_else(|| syntax(first, "expected a name"))?.to_string();
    if rest.is_empty() {
        return Ok((name, Vec::new()));
    }
    match (rest.first().map(|t| &t.kind), rest.last().map(|t| &t.kind)) {
        (Some(TokenKind::LParen), Some(TokenKind::RParen)) => {
            Ok((name, names_of(&rest[1..rest.len() - 1], first)?))
        }
        _ => Err(syntax(&rest[0], "expected `(`")),
    }
}

/// Identifiers of a token slice that are not applied as functions.
fn free_idents(toks: Tokens) -> Vec<String> {
    toks.iter()
        .enumerate()
        .filter_map(|(i, t)| {
            let s = ident(t)?;
            let applied = toks.get(i + 1).is_some_and(|n| n.kind == TokenKind::LParen);
            (!applied).then(|| s.to_string())
        })
        .collect()
}

/// Statement head: `keyword NAME [bracket] (paren)` before the colon.
struct Head<'t> {
    name: Option<String>,
    bracket: Option<Tokens<'t>>,
    paren: Option<Tokens<'t>>,
    body: Tokens<'t>,
}

fn head<'t>(toks: Tokens<'t>, kw: &Token) -> Result<Head<'t>> {
    let colon = find_top(toks, &TokenKind::Colon).ok_or_else(|| syntax(kw, "expected `:`"))?;
    let mut pre = &toks[..colon];
    let mut h = Head { name: None, bracket: None, paren: None, body: &toks[colon + 1..] };
    if let Some((t, rest)) = pre.split_first() {
        if let Some(n) = ident(t) {
            h.name = Some(n.to_string());
            pre = rest;
        }
    }
    while let Some(t) = pre.first() {
        let (open, close) = match t.kind {
            TokenKind::LBracket => (TokenKind::LBracket, TokenKind::RBracket),
            TokenKind::LParen => (TokenKind::LParen, TokenKind::RParen),
            _ => return Err(syntax(t, "unexpected token before `:`")),
        };
        let end = pre.iter().position(|x| x.kind == close).ok_or_else(|| syntax(t, "unclosed bracket"))?;
        let inner = &pre[1..end];
        if open == TokenKind::LBracket {
            h.bracket = Some(inner);
        } else {
            h.paren = Some(inner);
        }
        pre = &pre[end + 1..];
    }
    Ok(h)
}

fn need_name(h: &Head, kw: &Token) -> Result<String> {
    h.name.clone().ok_or_else(|| syntax(kw, "expected a name"))
}

impl Document {
    pub fn parse(text: &str) -> Result<Document> {
        let mut d = Document::default();
        d.extend(text)?;
        Ok(d)
    }

    /// Starts from existing declarations, for example a shared header.
    pub fn with_context(ctx: Context) -> Document {
        Document { ctx, ..Document::default() }
    }

    /// Parses further statements against the declarations seen so far.
    pub fn extend(&mut self, text: &str) -> Result<()> {
        let mut toks = Lexer::tokenize(text)?;
        toks.pop();
        for stmt in split_top(&toks, &TokenKind::Semi) {
            if !stmt.is_empty() {
                self.statement(stmt)?;
            }
        }
        Ok(())
    }

    fn statement(&mut self, toks: Tokens) -> Result<()> {
        let kw = &toks[0];
        let rest = &toks[1..];
        let word = ident(kw).ok_or_else(|| syntax(kw, "expected a statement keyword"))?;
        match word {
            "param" => names_of(rest, kw)?.iter().for_each(|n| {
                self.ctx.declare_param(n);
            }),
            "var" => names_of(rest, kw)?.iter().for_each(|n| {
                self.ctx.declare_var(n);
            }),
            "positive" => names_of(rest, kw)?.iter().for_each(|n| {
                self.ctx.declare_positive(n);
            }),
            "domain" => self.stmt_domain(rest, kw)?,
            "dep" => {
                let (name, args) = call_of(rest, kw)?;
                for a in &args {
                    if !self.ctx.is_var(a) {
                        return Err(syntax(kw, format!("`{a}` is not a declared variable")));
                    }
                }
                let args: Vec<&str> = args.iter().map(String::as_str).collect();
                self.ctx.declare_dep(&name, &args);
            }
            "fun" | "func" => {
                for part in split_top(rest, &TokenKind::Comma) {
                    let (name, args) = call_of(part, kw)?;
                    let args: Vec<&str> = args.iter().map(String::as_str).collect();
                    self.ctx.declare_func(&name, &args);
                }
            }
            "order" => match rest {
                [Token { kind: TokenKind::Num(q), .. }] if q.is_integer() => {
                    self.order = Some(q.to_integer().try_into().map_err(|_| syntax(kw, "bad order"))?);
                }
                _ => return Err(syntax(kw, "expected `order N`")),
            },
            "pde" => self.stmt_pde(rest, kw)?,
            "field" => self.stmt_field(rest, kw)?,
            "group" => self.stmt_group(rest, kw)?,
            "transform" => self.stmt_transform(rest, kw)?,
            "equation" => {
                let h = head(rest, kw)?;
                let name = need_name(&h, kw)?;
                let e = self.equation_of(h.body, &self.ctx, kw)?;
                self.equations.push((name, e));
            }
            "ansatz" => self.ansatz = Some(names_of(rest, kw)?),
            "gensol" => self.stmt_gensol(rest, kw)?,
            "table" => {
                let h = head(rest, kw)?;
                let name = need_name(&h, kw)?;
                if self.tables.iter().any(|t| t.name == name) {
                    return Err(DslError::Duplicate { kind: "table", name });
                }
                let labels = names_of(h.body, kw)?;
                self.tables.push(TableDecl { name, labels, rows: BTreeMap::new() });
            }
            "row" => self.stmt_row(rest, kw)?,
            "matrix" => self.stmt_matrix(rest, kw)?,
            "mrow" => self.stmt_mrow(rest, kw)?,
            "element" => {
                let h = head(rest, kw)?;
                let name = need_name(&h, kw)?;
                let e = self.element_expr(h.body, kw)?;
                self.elements.push((name, e));
            }
            "span" => {
                let h = head(rest, kw)?;
                let name = need_name(&h, kw)?;
                let parts = split_top(h.body, &TokenKind::Comma)
                    .into_iter()
                    .map(|p| self.element_expr(p, kw))
                    .collect::<Result<Vec<_>>>()?;
                self.spans.push((name, parts));
            }
            "expr" | "define" => {
                let eq = find_top(rest, &TokenKind::Eq).ok_or_else(|| syntax(kw, "expected `=`"))?;
                let name = match &rest[..eq] {
                    [t] => ident(t).ok_or_else(|| syntax(t, "expected a name"))?.to_string(),
                    _ => return Err(syntax(kw, "expected a single name before `=`")),
                };
                let e = expr_of(&rest[eq + 1..], &self.ctx, kw)?;
                if word == "define" {
                    self.ctx.define(&name, e);
                } else {
                    self.exprs.push((name, e));
                }
            }
            other => return Err(syntax(kw, format!("unknown statement `{other}`"))),
        }
        Ok(())
    }

    fn stmt_domain(&mut self, rest: Tokens, kw: &Token) -> Result<()> {
        match rest {
            [v, Token { kind: TokenKind::Gt, .. }, Token { kind: TokenKind::Num(q), .. }]
                if q.numer().sign() == num_bigint::Sign::NoSign =>
            {
                let name = ident(v).ok_or_else(|| syntax(v, "expected a name"))?;
                self.ctx.declare_positive(name);
                Ok(())
            }
            _ => Err(syntax(kw, "expected `domain NAME > 0`")),
        }
    }

    fn equation_of(&self, toks: Tokens, ctx: &Context, kw: &Token) -> Result<Expr> {
        match find_top(toks, &TokenKind::Eq) {
            Some(i) => Ok(expr_of(&toks[..i], ctx, kw)? - expr_of(&toks[i + 1..], ctx, &toks[i])?),
            None => expr_of(toks, ctx, kw),
        }
    }

    fn stmt_pde(&mut self, rest: Tokens, kw: &Token) -> Result<()> {
        let h = head(rest, kw)?;
        let name = need_name(&h, kw)?;
        let eq = find_top(h.body, &TokenKind::Eq).ok_or_else(|| syntax(kw, "expected `=`"))?;
        let lhs = expr_of(&h.body[..eq], &self.ctx, kw)?;
        let rhs = expr_of(&h.body[eq + 1..], &self.ctx, &h.body[eq])?;
        let lead = match h.bracket {
            Some(b) => match expr_of(b, &self.ctx, kw)?.as_atom() {
                Some(Atom::Jet(j)) => j.clone(),
                _ => return Err(syntax(&b[0], "lead must be a jet variable")),
            },
            None => default_lead(&(&lhs - &rhs))
                .ok_or_else(|| syntax(kw, "cannot choose a lead term; give `[u_..]`"))?,
        };
        Pde::from_equation(&name, &lhs, &rhs, lead.clone())?;
        self.pdes.push(PdeDecl { name, lhs, rhs, lead });
        Ok(())
    }

    fn stmt_field(&mut self, rest: Tokens, kw: &Token) -> Result<()> {
        let h = head(rest, kw)?;
        let name = need_name(&h, kw)?;
        if self.fields.iter().any(|f| f.name == name) {
            return Err(DslError::Duplicate { kind: "field", name });
        }
        let mut coords: Vec<String> = self.ctx.vars().iter().map(|v| v.to_string()).collect();
        let dep = self
            .ctx
            .deps()
            .first()
            .map(|d| d.name.to_string())
            .ok_or_else(|| syntax(kw, "no `dep` declared"))?;
        coords.push(dep);
        let mut coefficients = vec![Expr::zero(); coords.len()];
        let body = h.body;
        let mut start = 0;
        let mut i = 0;
        let mut any = false;
        while i < body.len() {
            let is_d = ident(&body[i]) == Some("d")
                && body.get(i + 1).is_some_and(|t| t.kind == TokenKind::Slash)
                && body.get(i + 2).and_then(ident).is_some_and(|s| s.starts_with('d'));
            if !is_d {
                i += 1;
                continue;
            }
            let target = &ident(&body[i + 2]).unwrap()[1..];
            let slot = coords
                .iter()
                .position(|c| c == target)
                .ok_or_else(|| syntax(&body[i + 2], format!("`{target}` is not a coordinate")))?;
            let mut coef = &body[start..i];
            if coef.last().is_some_and(|t| t.kind == TokenKind::Star) {
                coef = &coef[..coef.len() - 1];
            }
            let value = match coef {
                [] => Expr::one(),
                [Token { kind: TokenKind::Plus, .. }] => Expr::one(),
                [Token { kind: TokenKind::Minus, .. }] => -Expr::one(),
                _ => expr_of(coef, &self.ctx, &body[i])?,
            };
            coefficients[slot] = &coefficients[slot] + &value;
            any = true;
            i += 3;
            start = i;
        }
        let zero = !any
            && body.len() == 1
            && matches!(&body[0].kind, TokenKind::Num(q) if num_traits::Zero::is_zero(q));
        if start < body.len() && !zero {
            return Err(syntax(&body[start], "trailing term without `d/d..`"));
        }
        if !any && !zero {
            return Err(syntax(kw, "a field needs terms `coef d/dX`"));
        }
        self.fields.push(FieldDecl { name, coefficients });
        Ok(())
    }

    /// Declarations plus the named parameters, for statement-local symbols.
    fn local_ctx(&self, params: &[String]) -> Context {
        let mut c = self.ctx.clone();
        for p in params {
            c.declare_param(p);
        }
        c
    }

    fn single_param(h: &Head, kw: &Token) -> Result<String> {
        let names = names_of(h.paren.ok_or_else(|| syntax(kw, "expected `(param)`"))?, kw)?;
        match names.as_slice() {
            [p] => Ok(p.clone()),
            _ => Err(syntax(kw, "expected exactly one parameter")),
        }
    }

    fn stmt_group(&mut self, rest: Tokens, kw: &Token) -> Result<()> {
        let h = head(rest, kw)?;
        let name = need_name(&h, kw)?;
        let param = Self::single_param(&h, kw)?;
        let ctx = self.local_ctx(std::slice::from_ref(&param));
        let components = split_top(h.body, &TokenKind::Comma)
            .into_iter()
            .map(|p| expr_of(p, &ctx, kw))
            .collect::<Result<Vec<_>>>()?;
        self.groups.push(GroupDecl { name, param, components });
        Ok(())
    }

    fn stmt_transform(&mut self, rest: Tokens, kw: &Token) -> Result<()> {
        let h = head(rest, kw)?;
        let name = need_name(&h, kw)?;
        let param = Self::single_param(&h, kw)?;
        let mut ctx = self.local_ctx(std::slice::from_ref(&param));
        let vars: Vec<String> = self.ctx.vars().iter().map(|v| v.to_string()).collect();
        let var_refs: Vec<&str> = vars.iter().map(String::as_str).collect();
        let func = "U";
        if ctx.func(func).is_none() {
            ctx.declare_func(func, &var_refs);
        }
        let e = expr_of(h.body, &ctx, kw)?;
        let mut apps = Vec::new();
        e.visit_atoms(&mut |a| {
            if let Atom::Func(f) = a {
                if &*f.name == func && !apps.contains(f) {
                    apps.push(f.clone());
                }
            }
        });
        let app = match apps.as_slice() {
            [f] if f.deriv.is_empty() => f.clone(),
            _ => return Err(syntax(kw, "a transform must contain exactly one `U(...)`")),
        };
        let (prefactor, rest) = e
            .split_linear(&Atom::Func(app.clone()))
            .ok_or_else(|| syntax(kw, "transform must be linear in `U`"))?;
        if !rest.is_zero() || prefactor.any_atom(&|a| matches!(a, Atom::Func(f) if &*f.name == func)) {
            return Err(syntax(kw, "transform must be `prefactor * U(...)`"));
        }
        self.transforms.push(TransformRecipe { name, prefactor, args: app.args.clone(), param: sym(&param) });
        Ok(())
    }

    fn stmt_gensol(&mut self, rest: Tokens, kw: &Token) -> Result<()> {
        let h = head(rest, kw)?;
        let constants = names_of(h.bracket.ok_or_else(|| syntax(kw, "expected `[c1, ...]`"))?, kw)?;
        let ctx = self.local_ctx(&constants);
        let funcs = self.ansatz.clone().ok_or_else(|| syntax(kw, "`gensol` needs a preceding `ansatz`"))?;
        let mut coefficients = vec![None; funcs.len()];
        for part in split_top(h.body, &TokenKind::Comma) {
            let eq = find_top(part, &TokenKind::Eq).ok_or_else(|| syntax(kw, "expected `name = expr`"))?;
            let lhs = match &part[..eq] {
                [t] => ident(t).ok_or_else(|| syntax(t, "expected a name"))?,
                _ => return Err(syntax(kw, "expected `name = expr`")),
            };
            let slot = funcs
                .iter()
                .position(|f| f == lhs)
                .ok_or_else(|| syntax(&part[0], format!("`{lhs}` is not in the ansatz")))?;
            coefficients[slot] = Some(expr_of(&part[eq + 1..], &ctx, &part[eq])?);
        }
        let coefficients = coefficients
            .into_iter()
            .zip(&funcs)
            .map(|(c, f)| c.ok_or_else(|| syntax(kw, format!("missing `{f}`"))))
            .collect::<Result<Vec<_>>>()?;
        self.gensol =
            Some(GeneralSolution { constants: constants.iter().map(|c| sym(c)).collect(), coefficients });
        Ok(())
    }

    fn stmt_row(&mut self, rest: Tokens, kw: &Token) -> Result<()> {
        let (tname, label, body) = match rest {
            [t, l, Token { kind: TokenKind::Colon, .. }, body @ ..] => (
                ident(t).ok_or_else(|| syntax(t, "expected a table name"))?,
                ident(l).ok_or_else(|| syntax(l, "expected a row label"))?,
                body,
            ),
            _ => return Err(syntax(kw, "expected `row TABLE LABEL: entries`")),
        };
        let t = self
            .tables
            .iter()
            .position(|t| t.name == tname)
            .ok_or_else(|| DslError::Missing { kind: "table", name: tname.to_string() })?;
        let labels = self.tables[t].labels.clone();
        if !labels.iter().any(|l| l == label) {
            return Err(syntax(&rest[1], format!("`{label}` is not a label of `{tname}`")));
        }
        let parts = split_top(body, &TokenKind::Comma);
        if parts.len() != labels.len() {
            return Err(syntax(kw, format!("row has {} entries, expected {}", parts.len(), labels.len())));
        }
        let ctx = liealg::element_context(&self.ctx, &labels, free_idents(body));
        let entries = parts.into_iter().map(|p| expr_of(p, &ctx, kw)).collect::<Result<Vec<_>>>()?;
        if self.tables[t].rows.insert(label.to_string(), entries).is_some() {
            return Err(DslError::Duplicate { kind: "row", name: label.to_string() });
        }
        Ok(())
    }

    fn stmt_matrix(&mut self, rest: Tokens, kw: &Token) -> Result<()> {
        let h = head(rest, kw)?;
        let name = need_name(&h, kw)?;
        let spec = names_of(h.bracket.ok_or_else(|| syntax(kw, "expected `[generator, param]`"))?, kw)?;
        let [generator, param] =
            <[String; 2]>::try_from(spec).map_err(|_| syntax(kw, "expected `[generator, param]`"))?;
        let n = match h.body {
            [Token { kind: TokenKind::Num(q), .. }] if q.is_integer() => {
                usize::try_from(q.to_integer()).map_err(|_| syntax(kw, "bad size"))?
            }
            _ => return Err(syntax(kw, "expected the matrix size")),
        };
        let entries = (0..n)
            .map(|i| (0..n).map(|j| if i == j { Expr::one() } else { Expr::zero() }).collect())
            .collect();
        self.matrices.push(MatrixDecl { name, generator, param, entries });
        Ok(())
    }

    fn stmt_mrow(&mut self, rest: Tokens, kw: &Token) -> Result<()> {
        let (mname, row, body) = match rest {
            [m, Token { kind: TokenKind::Num(q), .. }, Token { kind: TokenKind::Colon, .. }, body @ ..] => {
                (ident(m).ok_or_else(|| syntax(m, "expected a matrix name"))?, q.to_integer(), body)
            }
            _ => return Err(syntax(kw, "expected `mrow MATRIX ROW: col = expr, ...`")),
        };
        let m = self
            .matrices
            .iter()
            .position(|m| m.name == mname)
            .ok_or_else(|| DslError::Missing { kind: "matrix", name: mname.to_string() })?;
        let ctx = self.local_ctx(std::slice::from_ref(&self.matrices[m].param));
        let n = self.matrices[m].entries.len();
        let row = usize::try_from(row)
            .ok()
            .filter(|r| (1..=n).contains(r))
            .ok_or_else(|| syntax(kw, "row out of range"))?;
        let mut values = vec![Expr::zero(); n];
        for part in split_top(body, &TokenKind::Comma) {
            let col = match part {
                [Token { kind: TokenKind::Num(q), .. }, Token { kind: TokenKind::Eq, .. }, ..]
                    if q.is_integer() =>
                {
                    usize::try_from(q.to_integer()).ok().filter(|c| (1..=n).contains(c))
                }
                _ => None,
            }
            .ok_or_else(|| {
                syntax(part.first().unwrap_or(kw), "expected `column = expr` with 1 <= column <= size")
            })?;
            values[col - 1] = expr_of(&part[2..], &ctx, &part[1])?;
        }
        self.matrices[m].entries[row - 1] = values;
        Ok(())
    }

    fn element_expr(&self, toks: Tokens, kw: &Token) -> Result<Expr> {
        let ctx = liealg::element_context(&self.ctx, &[], free_idents(toks));
        expr_of(toks, &ctx, kw)
    }

    pub fn context(&self) -> &Context {
        &self.ctx
    }

    /// Jet context of the declarations; the maximal order defaults to one
    /// more than the highest PDE order.
    pub fn jet_context(&self) -> Result<JetContext> {
        let pde_order =
            self.pdes.iter().map(|p| (&p.lhs - &p.rhs).jet_order().unwrap_or(0)).max().unwrap_or(2);
        let order = self.order.unwrap_or(pde_order + 1);
        Ok(JetContext::new(self.ctx.clone(), order)?)
    }

    pub fn pde_decls(&self) -> &[PdeDecl] {
        &self.pdes
    }

    /// The named PDE, or the first one when `name` is `None`.
    pub fn pde(&self, name: Option<&str>) -> Result<Pde> {
        let d = match name {
            Some(n) => self.pdes.iter().find(|p| p.name == n),
            None => self.pdes.first(),
        }
        .ok_or_else(|| DslError::Missing { kind: "pde", name: name.unwrap_or("").to_string() })?;
        Ok(Pde::from_equation(&d.name, &d.lhs, &d.rhs, d.lead.clone())?)
    }

    pub fn field_decls(&self) -> &[FieldDecl] {
        &self.fields
    }

    pub fn field(&self, jc: &JetContext, name: &str) -> Result<VectorField> {
        let d = self
            .fields
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| DslError::Missing { kind: "field", name: name.to_string() })?;
        field_of(jc, d)
    }

    pub fn fields(&self, jc: &JetContext) -> Result<Vec<VectorField>> {
        self.fields.iter().map(|d| field_of(jc, d)).collect()
    }

    pub fn field_names(&self) -> Vec<String> {
        self.fields.iter().map(|f| f.name.clone()).collect()
    }

    pub fn group_decls(&self) -> &[GroupDecl] {
        &self.groups
    }

    pub fn group(&self, jc: &JetContext, name: &str) -> Result<PointMap> {
        let g = self
            .groups
            .iter()
            .find(|g| g.name == name)
            .ok_or_else(|| DslError::Missing { kind: "group", name: name.to_string() })?;
        Ok(PointMap::new(jc, &g.name, &g.param, g.components.clone())?)
    }

    pub fn transforms(&self) -> &[TransformRecipe] {
        &self.transforms
    }

    pub fn transform(&self, name: &str) -> Result<&TransformRecipe> {
        self.transforms
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| DslError::Missing { kind: "transform", name: name.to_string() })
    }

    pub fn equations(&self) -> &[(String, Expr)] {
        &self.equations
    }

    pub fn general_solution(&self) -> Option<&GeneralSolution> {
        self.gensol.as_ref()
    }

    pub fn ansatz(&self) -> Option<&[String]> {
        self.ansatz.as_deref()
    }

    pub fn table_names(&self) -> Vec<String> {
        self.tables.iter().map(|t| t.name.clone()).collect()
    }

    /// The named table as structure constants; missing rows are errors.
    pub fn table(&self, name: &str) -> Result<StructureConstants> {
        let t = self
            .tables
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| DslError::Missing { kind: "table", name: name.to_string() })?;
        let c = t
            .labels
            .iter()
            .map(|l| {
                let row = t
                    .rows
                    .get(l)
                    .ok_or_else(|| DslError::Invalid(format!("table `{name}` has no row `{l}`")))?;
                row.iter()
                    .map(|e| Ok(liealg::element_from_expr(e, &t.labels)?))
                    .collect::<Result<Vec<Vector>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StructureConstants::new(t.labels.clone(), c, Provenance::Entered(name.to_string())))
    }

    pub fn matrices(&self) -> &[MatrixDecl] {
        &self.matrices
    }

    pub fn matrix(&self, name: &str) -> Result<&MatrixDecl> {
        self.matrices
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| DslError::Missing { kind: "matrix", name: name.to_string() })
    }

    pub fn element_names(&self) -> Vec<String> {
        self.elements.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn element_expr_of(&self, name: &str) -> Result<&Expr> {
        self.elements
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, e)| e)
            .ok_or_else(|| DslError::Missing { kind: "element", name: name.to_string() })
    }

    /// Coordinates of the named element over `labels`.
    pub fn element(&self, name: &str, labels: &[String]) -> Result<AlgebraElement> {
        Ok(liealg::element_from_expr(self.element_expr_of(name)?, labels)?)
    }

    pub fn span(&self, name: &str, labels: &[String]) -> Result<Vec<AlgebraElement>> {
        let (_, parts) = self
            .spans
            .iter()
            .find(|(n, _)| n == name)
            .ok_or_else(|| DslError::Missing { kind: "span", name: name.to_string() })?;
        parts.iter().map(|e| Ok(liealg::element_from_expr(e, labels)?)).collect()
    }

    pub fn expr(&self, name: &str) -> Result<&Expr> {
        self.exprs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, e)| e)
            .ok_or_else(|| DslError::Missing { kind: "expr", name: name.to_string() })
    }
}

fn field_of(jc: &JetContext, d: &FieldDecl) -> Result<VectorField> {
    let mut xi = d.coefficients.clone();
    let n = jc.context().vars().len();
    if xi.len() != n + 1 {
        return Err(DslError::Invalid(format!("field `{}` was declared under different variables", d.name)));
    }
    let eta = xi.pop().expect("n + 1 coefficients");
    Ok(VectorField::new(jc, &d.name, xi, eta)?)
}

/// Highest-order jet variable with a constant coefficient.
fn default_lead(residual: &Expr) -> Option<JetVar> {
    let mut jets = Vec::new();
    residual.visit_atoms(&mut |a| {
        if let Atom::Jet(j) = a {
            if !jets.contains(j) {
                jets.push(j.clone());
            }
        }
    });
    jets.sort_by_key(|j| std::cmp::Reverse(j.order()));
    jets.into_iter().find(|j| {
        residual
            .split_linear(&Atom::Jet(j.clone()))
            .is_some_and(|(c, _)| c.as_rational().is_some_and(|q| q != num_traits::Zero::zero()))
    })
}

/// Parses comma-separated numbers such as `1,0,0` into an element.
pub fn numeric_element(text: &str) -> std::result::Result<Vec<f64>, String> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("`{}` is not a number", s.trim())))
        .collect()
}

/// Coordinates `x_i` as exact rational functions, for callers that build
/// elements directly.
pub fn exact_element(values: &[i64]) -> AlgebraElement {
    values.iter().map(|&v| RatFunc::int(v)).collect()
}
