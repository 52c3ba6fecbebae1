//! Exact symbolic expressions.
//!
//! An [`Expr`] is always stored in canonical form: a sparse sum of monomials
//! with exact rational coefficients, where each monomial is a sorted product
//! of [`Atom`] powers. Transcendental atoms carry canonical arguments, so two
//! expressions that agree under the rewrite theory below compare equal as
//! values.
//!
//! Rewrite theory applied on every construction:
//!
//! * `sin(θ)^2 → 1 - cos(θ)^2` and `sinh(θ)^2 → cosh(θ)^2 - 1`;
//! * `sin`, `sinh` are odd and `cos`, `cosh` even in their argument, whose
//!   leading coefficient is made positive;
//! * all `exp` factors of a monomial merge into one `exp` of the summed
//!   argument, and `exp(0) = 1`;
//! * `q^(1/n)` for a rational `q ≥ 0` is kept as a root atom with exponent
//!   reduced modulo `n`;
//! * the reciprocal of a sum is an opaque atom over its primitive part.

mod context;
mod diff;
mod eval;
mod node;
mod parse;
mod print;
mod subst;

pub use context::{Context, DepDecl, FuncDecl};
pub use eval::{eval_numeric, leaf_name, CompiledExpr};
pub use node::Node;
pub use parse::{parse, parse_node, Lexer, Parser, Token, TokenKind};
pub use print::{format_jet, format_rational};
pub use subst::{FuncBinding, Substitution};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Interned-by-value symbol name.
pub type Sym = Arc<str>;
/// Exact coefficient type.
pub type Rational = BigRational;

pub fn sym(name: &str) -> Sym {
    Arc::from(name)
}

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("undeclared symbol `{name}` at {line}:{col}")]
    Undeclared { name: String, line: usize, col: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("fractional power of a non-constant or negative base: {0}")]
    FractionalPower(String),
    #[error("unassigned symbol `{0}`")]
    Unassigned(String),
    #[error("cannot evaluate `{0}` numerically")]
    NotNumeric(String),
    #[error("arity mismatch substituting `{name}`: expected {expected} arguments, got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("{0}")]
    Other(String),
}

pub type Result<T, E = ExprError> = std::result::Result<T, E>;

/// Jet coordinate `u_J`: a dependent symbol with a sorted derivative multi-index.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JetVar {
    pub dep: Sym,
    pub index: Vec<Sym>,
}

impl JetVar {
    pub fn new(dep: &str) -> Self {
        JetVar { dep: sym(dep), index: Vec::new() }
    }

    pub fn order(&self) -> usize {
        self.index.len()
    }
}

/// Application of an unknown function, with a sorted list of argument
/// positions it has been differentiated against.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FuncApp {
    pub name: Sym,
    pub args: Vec<Expr>,
    pub deriv: Vec<usize>,
}

/// Irreducible factor of a monomial. Variant order is the print order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Param(Sym),
    Var(Sym),
    Jet(JetVar),
    Func(FuncApp),
    Sin(Expr),
    Cos(Expr),
    Sinh(Expr),
    Cosh(Expr),
    Exp(Expr),
    /// `base^(1/degree)`, `base` a positive integer without perfect `degree`-th power factors.
    Root(Rational, u32),
    /// `1 / p` for a primitive sum `p`.
    Recip(Expr),
}

impl Atom {
    pub fn var(name: &str) -> Atom {
        Atom::Var(sym(name))
    }

    pub fn param(name: &str) -> Atom {
        Atom::Param(sym(name))
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Atom::Param(_) | Atom::Var(_) | Atom::Jet(_))
    }

    /// Sub-expressions carried by this atom.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Atom::Func(f) => f.args.iter().collect(),
            Atom::Sin(e) | Atom::Cos(e) | Atom::Sinh(e) | Atom::Cosh(e) | Atom::Exp(e) | Atom::Recip(e) => {
                vec![e]
            }
            _ => Vec::new(),
        }
    }
}

/// Sorted product of atom powers with nonzero exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(pub Vec<(Atom, i32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(Atom, i32)] {
        &self.0
    }

    pub fn exponent_of(&self, atom: &Atom) -> i32 {
        self.0.binary_search_by(|(a, _)| a.cmp(atom)).map(|i| self.0[i].1).unwrap_or(0)
    }

    fn merge(&self, other: &Monomial) -> Vec<(Atom, i32)> {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let e = a[i].1 + b[j].1;
                    if e != 0 {
                        out.push((a[i].0.clone(), e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        out
    }
}

/// Canonical exact expression. Cheap to clone.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Expr(Arc<BTreeMap<Monomial, Rational>>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

fn needs_rewrite(factors: &[(Atom, i32)]) -> bool {
    let mut exps = 0;
    for (a, e) in factors {
        match a {
            Atom::Sin(_) | Atom::Sinh(_) if *e >= 2 => return true,
            Atom::Root(_, d) if *e < 0 || *e >= *d as i32 => return true,
            Atom::Recip(_) if *e < 0 => return true,
            Atom::Exp(_) => {
                exps += 1;
                if exps > 1 || *e != 1 {
                    return true;
                }
            }
            _ => {}
        }
    }
    false
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::default()
    }

    pub fn one() -> Expr {
        Expr::rational(Rational::one())
    }

    pub fn int(n: i64) -> Expr {
        Expr::rational(rat(n))
    }

    pub fn frac(n: i64, d: i64) -> Expr {
        Expr::rational(ratio(n, d))
    }

    pub fn rational(q: Rational) -> Expr {
        let mut m = BTreeMap::new();
        if !q.is_zero() {
            m.insert(Monomial::one(), q);
        }
        Expr(Arc::new(m))
    }

    pub fn var(name: &str) -> Expr {
        Expr::atom(Atom::var(name))
    }

    pub fn param(name: &str) -> Expr {
        Expr::atom(Atom::param(name))
    }

    pub fn jet(j: JetVar) -> Expr {
        Expr::atom(Atom::Jet(j))
    }

    /// Wraps a leaf atom directly; structured atoms go through their
    /// normalizing constructors.
    pub fn atom(a: Atom) -> Expr {
        match a {
            Atom::Sin(e) => Expr::sin(&e),
            Atom::Cos(e) => Expr::cos(&e),
            Atom::Sinh(e) => Expr::sinh(&e),
            Atom::Cosh(e) => Expr::cosh(&e),
            Atom::Exp(e) => Expr::exp(&e),
            Atom::Recip(e) => e.inv().expect("reciprocal of a nonzero sum"),
            Atom::Root(b, d) => Expr::root(&b, 1, d as i64).expect("root of positive base"),
            a => Expr::raw_term(Rational::one(), vec![(a, 1)]),
        }
    }

    fn raw_term(coef: Rational, factors: Vec<(Atom, i32)>) -> Expr {
        let mut m = BTreeMap::new();
        if !coef.is_zero() {
            m.insert(Monomial(factors), coef);
        }
        Expr(Arc::new(m))
    }

    /// Builds `coef * Π atom^exp` from an arbitrary (unsorted, possibly
    /// repeated) factor list, applying the rewrite rules.
    pub fn monomial(coef: Rational, factors: Vec<(Atom, i32)>) -> Expr {
        let mut sorted: Vec<(Atom, i32)> = Vec::with_capacity(factors.len());
        let mut fs = factors;
        fs.sort_by(|a, b| a.0.cmp(&b.0));
        for (a, e) in fs {
            if let Some(last) = sorted.last_mut() {
                if last.0 == a {
                    last.1 += e;
                    continue;
                }
            }
            sorted.push((a, e));
        }
        sorted.retain(|(_, e)| *e != 0);
        Expr::finalize(coef, sorted)
    }

    /// Applies the rewrite rules to a sorted, merged factor list.
    fn finalize(coef: Rational, factors: Vec<(Atom, i32)>) -> Expr {
        if coef.is_zero() {
            return Expr::zero();
        }
        if !needs_rewrite(&factors) {
            return Expr::raw_term(coef, factors);
        }
        let mut coef = coef;
        let mut plain = Vec::with_capacity(factors.len());
        let mut expansions: Vec<Expr> = Vec::new();
        let mut exp_arg: Option<Expr> = None;
        for (a, e) in factors {
            match a {
                Atom::Sin(ref th) if e >= 2 => {
                    let c = Expr::cos(th);
                    expansions.push((Expr::one() - &c * &c).pow(i64::from(e / 2)));
                    if e % 2 == 1 {
                        plain.push((a, 1));
                    }
                }
                Atom::Sinh(ref th) if e >= 2 => {
                    let c = Expr::cosh(th);
                    expansions.push((&c * &c - Expr::one()).pow(i64::from(e / 2)));
                    if e % 2 == 1 {
                        plain.push((a, 1));
                    }
                }
                Atom::Root(ref b, d) if e < 0 || e >= d as i32 => {
                    let (q, r) = i64::from(e).div_mod_floor(&i64::from(d));
                    coef *= rat_pow(b, q);
                    if r != 0 {
                        plain.push((a, r as i32));
                    }
                }
                Atom::Recip(ref p) if e < 0 => {
                    expansions.push(p.pow(i64::from(-e)));
                }
                Atom::Exp(th) => {
                    let scaled = &th * &Expr::int(i64::from(e));
                    exp_arg = Some(match exp_arg {
                        None => scaled,
                        Some(acc) => acc + scaled,
                    });
                }
                a => plain.push((a, e)),
            }
        }
        if let Some(arg) = exp_arg {
            if !arg.is_zero() {
                plain.push((Atom::Exp(arg), 1));
                plain.sort_by(|x, y| x.0.cmp(&y.0));
            }
        }
        let mut out = Expr::raw_term(coef, plain);
        for x in expansions {
            out = &out * &x;
        }
        out
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.0.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_rational().is_some_and(|q| q.is_one())
    }

    /// The value when this expression is a rational constant.
    pub fn as_rational(&self) -> Option<Rational> {
        match self.0.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.0.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    /// The single atom when this expression is exactly `1 * atom`.
    pub fn as_atom(&self) -> Option<&Atom> {
        if self.0.len() != 1 {
            return None;
        }
        let (m, c) = self.0.iter().next().unwrap();
        match (c.is_one(), m.0.as_slice()) {
            (true, [(a, 1)]) => Some(a),
            _ => None,
        }
    }

    pub fn is_single_term(&self) -> bool {
        self.0.len() == 1
    }

    fn from_map(m: BTreeMap<Monomial, Rational>) -> Expr {
        Expr(Arc::new(m))
    }

    /// Coefficient of the first term in canonical order.
    pub fn leading_coefficient(&self) -> Option<&Rational> {
        self.0.values().next()
    }

    fn is_negative_leading(&self) -> bool {
        self.leading_coefficient().is_some_and(|c| c.is_negative())
    }

    pub fn scale(&self, q: &Rational) -> Expr {
        if q.is_zero() {
            return Expr::zero();
        }
        Expr::from_map(self.0.iter().map(|(m, c)| (m.clone(), c * q)).collect())
    }

    pub fn sin(arg: &Expr) -> Expr {
        if arg.is_zero() {
            Expr::zero()
        } else if arg.is_negative_leading() {
            -Expr::raw_term(Rational::one(), vec![(Atom::Sin(-arg), 1)])
        } else {
            Expr::raw_term(Rational::one(), vec![(Atom::Sin(arg.clone()), 1)])
        }
    }

    pub fn cos(arg: &Expr) -> Expr {
        if arg.is_zero() {
            Expr::one()
        } else if arg.is_negative_leading() {
            Expr::raw_term(Rational::one(), vec![(Atom::Cos(-arg), 1)])
        } else {
            Expr::raw_term(Rational::one(), vec![(Atom::Cos(arg.clone()), 1)])
        }
    }

    pub fn sinh(arg: &Expr) -> Expr {
        if arg.is_zero() {
            Expr::zero()
        } else if arg.is_negative_leading() {
            -Expr::raw_term(Rational::one(), vec![(Atom::Sinh(-arg), 1)])
        } else {
            Expr::raw_term(Rational::one(), vec![(Atom::Sinh(arg.clone()), 1)])
        }
    }

    pub fn cosh(arg: &Expr) -> Expr {
        if arg.is_zero() {
            Expr::one()
        } else if arg.is_negative_leading() {
            Expr::raw_term(Rational::one(), vec![(Atom::Cosh(-arg), 1)])
        } else {
            Expr::raw_term(Rational::one(), vec![(Atom::Cosh(arg.clone()), 1)])
        }
    }

    pub fn exp(arg: &Expr) -> Expr {
        if arg.is_zero() {
            Expr::one()
        } else {
            Expr::raw_term(Rational::one(), vec![(Atom::Exp(arg.clone()), 1)])
        }
    }

    /// `base^(p/q)` for a nonnegative rational base.
    pub fn root(base: &Rational, p: i64, q: i64) -> Result<Expr> {
        if q == 0 {
            return Err(ExprError::DivisionByZero);
        }
        let (mut p, mut q) = (p, q);
        if q < 0 {
            p = -p;
            q = -q;
        }
        let g = p.gcd(&q);
        if g > 1 {
            p /= g;
            q /= g;
        }
        if base.is_negative() {
            return Err(ExprError::FractionalPower(format_rational(base)));
        }
        if base.is_zero() {
            return if p > 0 { Ok(Expr::zero()) } else { Err(ExprError::DivisionByZero) };
        }
        if q == 1 {
            return Ok(Expr::rational(rat_pow(base, p)));
        }
        // base^(1/q) = (n d^(q-1))^(1/q) / d
        let qn = q as u32;
        let d = base.denom().clone();
        let m = base.numer() * num_traits::pow(d.clone(), (qn - 1) as usize);
        let (outside, inside) = extract_perfect_power(&m, qn);
        let scalar = Rational::new(outside, d);
        let mut coef = rat_pow(&scalar, p);
        if inside.is_one() {
            return Ok(Expr::rational(coef));
        }
        let inside = Rational::from_integer(inside);
        let (k, r) = p.div_mod_floor(&q);
        coef *= rat_pow(&inside, k);
        if r == 0 {
            return Ok(Expr::rational(coef));
        }
        Ok(Expr::raw_term(coef, vec![(Atom::Root(inside, qn), r as i32)]))
    }

    pub fn pow(&self, n: i64) -> Expr {
        if n == 0 {
            return Expr::one();
        }
        if n < 0 {
            return self.inv().expect("negative power of zero").pow(-n);
        }
        if let Some(q) = self.as_rational() {
            return Expr::rational(rat_pow(&q, n));
        }
        if self.0.len() == 1 {
            let (m, c) = self.0.iter().next().unwrap();
            let factors = m.0.iter().map(|(a, e)| (a.clone(), e * n as i32)).collect();
            return Expr::finalize(rat_pow(c, n), factors);
        }
        let mut result = Expr::one();
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Multiplicative inverse. Sums become an opaque reciprocal atom over
    /// their primitive part.
    pub fn inv(&self) -> Result<Expr> {
        match self.0.len() {
            0 => Err(ExprError::DivisionByZero),
            1 => {
                let (m, c) = self.0.iter().next().unwrap();
                let factors = m.0.iter().map(|(a, e)| (a.clone(), -e)).collect();
                Ok(Expr::finalize(c.recip(), factors))
            }
            _ => {
                let (content, prim) = self.primitive_part();
                let cinv = content.inv()?;
                Ok(&cinv * &Expr::raw_term(Rational::one(), vec![(Atom::Recip(prim), 1)]))
            }
        }
    }

    /// Splits off the rational and monomial content: `self = content * prim`
    /// with `prim` having coefficient gcd 1, no common atom power and a
    /// positive leading coefficient.
    pub fn primitive_part(&self) -> (Expr, Expr) {
        if self.is_zero() {
            return (Expr::one(), Expr::zero());
        }
        let mut num = BigInt::zero();
        let mut den = BigInt::one();
        for c in self.0.values() {
            num = num.gcd(c.numer());
            den = den.lcm(c.denom());
        }
        let mut cq = Rational::new(num, den);
        if self.is_negative_leading() {
            cq = -cq;
        }
        // Common atom exponents: min over terms, absent counting as 0.
        let union: BTreeSet<&Atom> = self
            .0
            .keys()
            .flat_map(|m| m.0.iter().map(|(a, _)| a))
            .filter(|a| !matches!(a, Atom::Root(..) | Atom::Exp(_)))
            .collect();
        let content_factors: Vec<(Atom, i32)> = union
            .into_iter()
            .filter_map(|a| {
                let e = self.0.keys().map(|m| m.exponent_of(a)).min().unwrap_or(0);
                (e != 0).then(|| (a.clone(), e))
            })
            .collect();
        let content = Expr::finalize(cq.clone(), content_factors.clone());
        let inv_factors: Vec<(Atom, i32)> = content_factors.iter().map(|(a, e)| (a.clone(), -e)).collect();
        let inv_mono = Expr::finalize(cq.recip(), inv_factors);
        let prim = self * &inv_mono;
        (content, prim)
    }

    /// Leaf symbols occurring anywhere, including inside atoms.
    pub fn free_symbols(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Atom>) {
        for m in self.0.keys() {
            for (a, _) in &m.0 {
                if a.is_leaf() {
                    out.insert(a.clone());
                } else {
                    for c in a.children() {
                        c.collect_symbols(out);
                    }
                }
            }
        }
    }

    /// All atoms (at any depth) satisfying a predicate.
    pub fn any_atom(&self, pred: &dyn Fn(&Atom) -> bool) -> bool {
        self.0
            .keys()
            .any(|m| m.0.iter().any(|(a, _)| pred(a) || a.children().iter().any(|c| c.any_atom(pred))))
    }

    pub fn contains_atom(&self, atom: &Atom) -> bool {
        self.any_atom(&|a| a == atom)
    }

    /// Top-level atoms appearing in some monomial.
    pub fn top_atoms(&self) -> BTreeSet<Atom> {
        self.0.keys().flat_map(|m| m.0.iter().map(|(a, _)| a.clone())).collect()
    }

    /// Highest jet order among the jet variables present.
    pub fn jet_order(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        self.visit_atoms(&mut |a| {
            if let Atom::Jet(j) = a {
                best = Some(best.map_or(j.order(), |b| b.max(j.order())));
            }
        });
        best
    }

    pub fn visit_atoms(&self, f: &mut dyn FnMut(&Atom)) {
        for m in self.0.keys() {
            for (a, _) in &m.0 {
                f(a);
                for c in a.children() {
                    c.visit_atoms(f);
                }
            }
        }
    }

    /// Collects the expression as a polynomial in the top-level atoms chosen
    /// by `select`: returns `monomial-in-selected → coefficient`.
    pub fn collect_by(&self, select: &dyn Fn(&Atom) -> bool) -> BTreeMap<Monomial, Expr> {
        let mut groups: BTreeMap<Monomial, BTreeMap<Monomial, Rational>> = BTreeMap::new();
        for (m, c) in self.0.iter() {
            let (sel, rest): (Vec<_>, Vec<_>) = m.0.iter().cloned().partition(|(a, _)| select(a));
            let entry = groups.entry(Monomial(sel)).or_default();
            let rest = Monomial(rest);
            let acc = entry.entry(rest).or_insert_with(Rational::zero);
            *acc += c;
        }
        groups
            .into_iter()
            .map(|(k, v)| {
                let v: BTreeMap<_, _> = v.into_iter().filter(|(_, c)| !c.is_zero()).collect();
                (k, Expr::from_map(v))
            })
            .filter(|(_, v)| !v.is_zero())
            .collect()
    }

    /// Coefficient of `atom^1` when the expression is affine in that
    /// top-level atom, as `(coefficient, remainder)`.
    pub fn split_linear(&self, atom: &Atom) -> Option<(Expr, Expr)> {
        let groups = self.collect_by(&|a| a == atom);
        let mut coef = Expr::zero();
        let mut rest = Expr::zero();
        for (k, v) in groups {
            match k.0.as_slice() {
                [] => rest = v,
                [(_, 1)] => coef = v,
                _ => return None,
            }
        }
        if rest.contains_atom(atom) || coef.contains_atom(atom) {
            return None;
        }
        Some((coef, rest))
    }
}

fn rat_pow(q: &Rational, n: i64) -> Rational {
    if n >= 0 {
        num_traits::pow(q.clone(), n as usize)
    } else {
        num_traits::pow(q.recip(), (-n) as usize)
    }
}

/// Writes `m = outside^q * inside` pulling out small perfect `q`-th powers.
fn extract_perfect_power(m: &BigInt, q: u32) -> (BigInt, BigInt) {
    let mut outside = BigInt::one();
    let mut inside = BigInt::one();
    let mut rest = m.clone();
    let mut p = BigInt::from(2u32);
    let limit = BigInt::from(10_000u32);
    while p <= limit && rest > BigInt::one() {
        let mut count = 0u32;
        while (&rest % &p).is_zero() {
            rest /= &p;
            count += 1;
        }
        if count > 0 {
            outside *= num_traits::pow(p.clone(), (count / q) as usize);
            inside *= num_traits::pow(p.clone(), (count % q) as usize);
        }
        p += 1u32;
    }
    if rest > BigInt::one() {
        let r = rest.nth_root(q);
        if num_traits::pow(r.clone(), q as usize) == rest {
            outside *= r;
        } else {
            inside *= rest;
        }
    }
    (outside, inside)
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl Add<&Expr> for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let (big, small) = if self.0.len() >= rhs.0.len() { (self, rhs) } else { (rhs, self) };
        let mut m = (*big.0).clone();
        for (k, c) in small.0.iter() {
            match m.get_mut(k) {
                Some(acc) => {
                    *acc += c;
                    if acc.is_zero() {
                        m.remove(k);
                    }
                }
                None => {
                    m.insert(k.clone(), c.clone());
                }
            }
        }
        Expr::from_map(m)
    }
}

impl Sub<&Expr> for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        self + &(-rhs)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::from_map(self.0.iter().map(|(m, c)| (m.clone(), -c)).collect())
    }
}

impl Mul<&Expr> for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        if self.is_zero() || rhs.is_zero() {
            return Expr::zero();
        }
        if let Some(q) = self.as_rational() {
            return rhs.scale(&q);
        }
        if let Some(q) = rhs.as_rational() {
            return self.scale(&q);
        }
        let mut acc: BTreeMap<Monomial, Rational> = BTreeMap::new();
        let mut add_term = |m: Monomial, c: Rational| match acc.get_mut(&m) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    acc.remove(&m);
                }
            }
            None => {
                acc.insert(m, c);
            }
        };
        for (m1, c1) in self.0.iter() {
            for (m2, c2) in rhs.0.iter() {
                let merged = m1.merge(m2);
                let c = c1 * c2;
                if needs_rewrite(&merged) {
                    let e = Expr::finalize(c, merged);
                    for (m, c) in e.0.iter() {
                        add_term(m.clone(), c.clone());
                    }
                } else {
                    add_term(Monomial(merged), c);
                }
            }
        }
        Expr::from_map(acc)
    }
}

macro_rules! owned_ops {
    ($tr:ident, $method:ident) => {
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                (&self).$method(rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                self.$method(&rhs)
            }
        }
    };
}
owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        iter.fold(Expr::zero(), |a, b| a + b)
    }
}

/// Three-valued zero test outcome.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub enum ZeroTest {
    Zero,
    /// A nonzero rational constant.
    NonzeroConstant(String),
    /// Normal form is not zero but no constant witness is at hand.
    Unresolved,
}

/// Three-valued zero test on the canonical form.
pub fn zero_test(e: &Expr) -> ZeroTest {
    match e.as_rational() {
        Some(q) if q.is_zero() => ZeroTest::Zero,
        Some(q) => ZeroTest::NonzeroConstant(format_rational(&q)),
        None => ZeroTest::Unresolved,
    }
}

/// `true` iff the canonical form is the literal zero.
pub fn is_zero(e: &Expr) -> bool {
    e.is_zero()
}

/// Canonicalizes a syntax tree.
pub fn normalize(node: &Node) -> Result<Expr> {
    node.to_expr()
}

pub fn rational_to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Expr {
        Expr::var("x")
    }

    #[test]
    fn pythagorean_rewrites_collapse() {
        let s = Expr::sin(&x());
        let c = Expr::cos(&x());
        assert_eq!(&s * &s + &c * &c, Expr::one());
        assert_eq!(&s * &s, Expr::one() - &c * &c);
        let sh = Expr::sinh(&x());
        let ch = Expr::cosh(&x());
        assert!((&ch * &ch - &sh * &sh - Expr::one()).is_zero());
    }

    #[test]
    fn ring_arithmetic_folds() {
        let a = Expr::param("a");
        let t = Expr::var("t");
        let e = (&a.pow(2) * &Expr::int(2)) * &t - Expr::int(2) * a.pow(2) * &t;
        assert!(e.is_zero());
        assert_eq!(x().pow(0), Expr::one());
        assert_eq!((x() + Expr::one()).pow(0), Expr::one());
    }

    #[test]
    fn laurent_cancellation() {
        let r = Expr::var("r");
        let e = r.inv().unwrap() * (&r * &x());
        assert_eq!(e, x());
    }

    #[test]
    fn odd_even_arguments() {
        assert_eq!(Expr::sin(&-x()), -Expr::sin(&x()));
        assert_eq!(Expr::cos(&-x()), Expr::cos(&x()));
        assert_eq!(Expr::sinh(&Expr::zero()), Expr::zero());
        assert_eq!(Expr::cosh(&Expr::zero()), Expr::one());
    }

    #[test]
    fn exponentials_merge() {
        let k = Expr::param("k");
        let t = Expr::var("t");
        let e1 = Expr::exp(&(-&k * &t));
        let e2 = Expr::exp(&(&k * &t));
        assert_eq!(&e1 * &e2, Expr::one());
        assert_eq!(e1.pow(2), Expr::exp(&(Expr::int(-2) * &k * &t)));
        assert_eq!(e1.inv().unwrap(), e2);
    }

    #[test]
    fn square_roots_reduce() {
        let s2 = Expr::root(&rat(2), 1, 2).unwrap();
        assert_eq!(&s2 * &s2, Expr::int(2));
        assert_eq!(Expr::root(&rat(8), 1, 2).unwrap(), Expr::int(2) * &s2);
        assert_eq!(s2.inv().unwrap(), s2.scale(&ratio(1, 2)));
        assert_eq!(Expr::root(&rat(4), 1, 2).unwrap(), Expr::int(2));
        assert_eq!(Expr::root(&ratio(1, 2), 1, 2).unwrap(), s2.scale(&ratio(1, 2)));
    }

    #[test]
    fn reciprocal_of_sum_is_primitive() {
        let a = Expr::param("a");
        let k = Expr::param("k");
        let p = Expr::int(4) * a.pow(2) - Expr::int(2) * &k;
        let inv = p.inv().unwrap();
        let q = Expr::int(2) * a.pow(2) - &k;
        assert_eq!(inv, q.inv().unwrap().scale(&ratio(1, 2)));
        assert!(p.inv().unwrap().num_terms() == 1);
    }

    #[test]
    fn zero_test_is_three_valued() {
        assert_eq!(zero_test(&Expr::zero()), ZeroTest::Zero);
        assert_eq!(zero_test(&Expr::int(3)), ZeroTest::NonzeroConstant("3".into()));
        assert_eq!(zero_test(&x()), ZeroTest::Unresolved);
    }

    #[test]
    fn collect_by_groups_coefficients() {
        let ux = Atom::Jet(JetVar { dep: sym("u"), index: vec![sym("x")] });
        let e = Expr::atom(ux.clone()) * Expr::var("r") + Expr::atom(ux.clone()) + Expr::var("t");
        let g = e.collect_by(&|a| a == &ux);
        assert_eq!(g.len(), 2);
        assert_eq!(g[&Monomial(vec![(ux, 1)])], Expr::var("r") + Expr::one());
    }
}
