//! Multivariate polynomials over ℚ and the rational function field built on
//! them. Used for linear algebra over ℚ(a, k).

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};

use crate::symexpr::{rat, Atom, Expr, Rational, Sym};

/// Sorted `(variable, exponent)` list with positive exponents.
pub type Mono = Vec<(Sym, u32)>;

fn mono_mul(a: &Mono, b: &Mono) -> Mono {
    let mut out: BTreeMap<Sym, u32> = a.iter().cloned().collect();
    for (v, e) in b {
        *out.entry(v.clone()).or_insert(0) += e;
    }
    out.into_iter().collect()
}

/// `a / b` when `b` divides `a`.
fn mono_div(a: &Mono, b: &Mono) -> Option<Mono> {
    let mut out: BTreeMap<Sym, u32> = a.iter().cloned().collect();
    for (v, e) in b {
        let slot = out.get_mut(v)?;
        if *slot < *e {
            return None;
        }
        *slot -= e;
        if *slot == 0 {
            out.remove(v);
        }
    }
    Some(out.into_iter().collect())
}

fn mono_exp(m: &Mono, v: &str) -> u32 {
    m.iter().find(|(w, _)| &**w == v).map_or(0, |(_, e)| *e)
}

/// Lexicographic order with variables ranked by name.
fn lex_cmp(a: &Mono, b: &Mono) -> Ordering {
    let names: BTreeSet<&Sym> = a.iter().chain(b.iter()).map(|(v, _)| v).collect();
    for v in names {
        let (ea, eb) = (mono_exp(a, v), mono_exp(b, v));
        if ea != eb {
            return ea.cmp(&eb);
        }
    }
    Ordering::Equal
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Poly {
    terms: BTreeMap<Mono, Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(q: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !q.is_zero() {
            terms.insert(Vec::new(), q);
        }
        Poly { terms }
    }

    pub fn one() -> Self {
        Poly::constant(Rational::one())
    }

    pub fn var(name: &str) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![(crate::symexpr::sym(name), 1)], Rational::one());
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Vec::new()).cloned(),
            _ => None,
        }
    }

    pub fn vars(&self) -> BTreeSet<Sym> {
        self.terms.keys().flat_map(|m| m.iter().map(|(v, _)| v.clone())).collect()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Rational)> {
        self.terms.iter()
    }

    fn add_term(&mut self, m: Mono, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(acc) => {
                *acc += c;
                if acc.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn scale(&self, q: &Rational) -> Poly {
        if q.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * q)).collect() }
    }

    fn mul_term(&self, m: &Mono, c: &Rational) -> Poly {
        Poly { terms: self.terms.iter().map(|(n, d)| (mono_mul(n, m), d * c)).collect() }
    }

    /// Leading term in lex order.
    pub fn leading(&self) -> Option<(&Mono, &Rational)> {
        self.terms.iter().max_by(|a, b| lex_cmp(a.0, b.0))
    }

    pub fn degree_in(&self, v: &str) -> u32 {
        self.terms.keys().map(|m| mono_exp(m, v)).max().unwrap_or(0)
    }

    /// Coefficients as a polynomial in `v`.
    pub fn coefficients_in(&self, v: &str) -> BTreeMap<u32, Poly> {
        let mut out: BTreeMap<u32, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = mono_exp(m, v);
            let rest: Mono = m.iter().filter(|(w, _)| &**w != v).cloned().collect();
            out.entry(e).or_default().add_term(rest, c.clone());
        }
        out
    }

    fn leading_coefficient_in(&self, v: &str) -> Poly {
        let d = self.degree_in(v);
        self.coefficients_in(v).remove(&d).unwrap_or_default()
    }

    /// Exact quotient, or `None` when `d` does not divide `self`.
    pub fn exact_div(&self, d: &Poly) -> Option<Poly> {
        let (lm, lc) = d.leading()?;
        let (lm, lc) = (lm.clone(), lc.clone());
        let mut rem = self.clone();
        let mut q = Poly::zero();
        while let Some((m, c)) = rem.leading() {
            let t = mono_div(m, &lm)?;
            let tc = c / &lc;
            rem = &rem - &d.mul_term(&t, &tc);
            q.add_term(t, tc);
        }
        Some(q)
    }

    /// Rescales to a leading coefficient of one.
    pub fn monic(&self) -> Poly {
        match self.leading() {
            Some((_, c)) => self.scale(&c.recip()),
            None => Poly::zero(),
        }
    }

    fn pseudo_rem(a: &Poly, b: &Poly, v: &str) -> Poly {
        let db = b.degree_in(v);
        let lb = b.leading_coefficient_in(v);
        let mut r = a.clone();
        while !r.is_zero() && r.degree_in(v) >= db {
            let dr = r.degree_in(v);
            let lr = r.leading_coefficient_in(v);
            let shift: Mono = if dr > db { vec![(crate::symexpr::sym(v), dr - db)] } else { Vec::new() };
            r = &(&lb * &r) - &(&lr * &b.mul_term(&shift, &Rational::one()));
        }
        r
    }

    fn content_in(&self, v: &str) -> Poly {
        self.coefficients_in(v).values().fold(Poly::zero(), |g, c| Poly::gcd(&g, c))
    }

    /// Monic greatest common divisor.
    pub fn gcd(a: &Poly, b: &Poly) -> Poly {
        if a.is_zero() {
            return b.monic();
        }
        if b.is_zero() {
            return a.monic();
        }
        let vars: BTreeSet<Sym> = a.vars().union(&b.vars()).cloned().collect();
        let Some(x) = vars.into_iter().next() else {
            return Poly::one();
        };
        let (ina, inb) = (a.degree_in(&x) > 0, b.degree_in(&x) > 0);
        if !ina {
            return Poly::gcd(a, &b.content_in(&x));
        }
        if !inb {
            return Poly::gcd(&a.content_in(&x), b);
        }
        let (ca, cb) = (a.content_in(&x), b.content_in(&x));
        let c = Poly::gcd(&ca, &cb);
        let mut p = a.exact_div(&ca).expect("content divides");
        let mut q = b.exact_div(&cb).expect("content divides");
        if p.degree_in(&x) < q.degree_in(&x) {
            std::mem::swap(&mut p, &mut q);
        }
        while !q.is_zero() {
            let r = Poly::pseudo_rem(&p, &q, &x);
            p = q;
            if r.is_zero() {
                q = Poly::zero();
            } else if r.degree_in(&x) == 0 {
                p = Poly::one();
                q = Poly::zero();
            } else {
                let cr = r.content_in(&x);
                q = r.exact_div(&cr).expect("content divides");
            }
        }
        let pc = p.content_in(&x);
        let pp = p.exact_div(&pc).expect("content divides");
        (&c * &pp).monic()
    }

    pub fn from_expr(e: &Expr) -> Option<Poly> {
        let mut p = Poly::zero();
        for (m, c) in e.terms() {
            let mut mono: BTreeMap<Sym, u32> = BTreeMap::new();
            for (a, k) in m.factors() {
                match a {
                    Atom::Param(s) | Atom::Var(s) if *k > 0 => {
                        *mono.entry(s.clone()).or_insert(0) += *k as u32;
                    }
                    _ => return None,
                }
            }
            p.add_term(mono.into_iter().collect(), c.clone());
        }
        Some(p)
    }

    /// Converts back, mapping each variable name through `leaf`.
    pub fn to_expr_with(&self, leaf: &dyn Fn(&str) -> Expr) -> Expr {
        self.terms
            .iter()
            .map(|(m, c)| {
                m.iter().fold(Expr::rational(c.clone()), |acc, (v, e)| acc * leaf(v).pow(i64::from(*e)))
            })
            .sum()
    }

    /// Converts back treating every variable as a parameter.
    pub fn to_expr(&self) -> Expr {
        self.to_expr_with(&Expr::param)
    }

    pub fn eval(&self, vals: &BTreeMap<String, f64>) -> Option<f64> {
        let mut s = 0.0;
        for (m, c) in &self.terms {
            let mut t = crate::symexpr::rational_to_f64(c);
            for (v, e) in m {
                t *= vals.get(&**v)?.powi(*e as i32);
            }
            s += t;
        }
        Some(s)
    }
}

impl Add<&Poly> for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub<&Poly> for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Mul<&Poly> for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(mono_mul(m1, m2), c1 * c2);
            }
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(&rat(-1))
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

/// Reduced fraction `num / den` with a monic denominator.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RatFunc {
    num: Poly,
    den: Poly,
}

impl Default for RatFunc {
    fn default() -> Self {
        RatFunc::zero()
    }
}

impl RatFunc {
    pub fn zero() -> Self {
        RatFunc { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> Self {
        RatFunc::from_poly(Poly::one())
    }

    pub fn from_poly(p: Poly) -> Self {
        RatFunc { num: p, den: Poly::one() }
    }

    pub fn int(n: i64) -> Self {
        RatFunc::from_poly(Poly::constant(rat(n)))
    }

    pub fn constant(q: Rational) -> Self {
        RatFunc::from_poly(Poly::constant(q))
    }

    pub fn param(name: &str) -> Self {
        RatFunc::from_poly(Poly::var(name))
    }

    pub fn new(num: Poly, den: Poly) -> Option<Self> {
        if den.is_zero() {
            return None;
        }
        if num.is_zero() {
            return Some(RatFunc::zero());
        }
        let g = Poly::gcd(&num, &den);
        let mut n = num.exact_div(&g).expect("gcd divides");
        let mut d = den.exact_div(&g).expect("gcd divides");
        let lc = d.leading().map(|(_, c)| c.clone()).unwrap();
        if !lc.is_one() {
            n = n.scale(&lc.recip());
            d = d.scale(&lc.recip());
        }
        Some(RatFunc { num: n, den: d })
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.as_constant().is_some_and(|c| c.is_one())
            && self.num.as_constant().is_some_and(|c| c.is_one())
    }

    pub fn as_constant(&self) -> Option<Rational> {
        let d = self.den.as_constant()?;
        Some(self.num.as_constant()? / d)
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.as_constant().is_some()
    }

    pub fn inv(&self) -> Option<RatFunc> {
        RatFunc::new(self.den.clone(), self.num.clone())
    }

    /// Converts an expression built from parameters, integer powers and
    /// reciprocals of parameter polynomials.
    pub fn from_expr(e: &Expr) -> Option<RatFunc> {
        let mut acc = RatFunc::zero();
        for (m, c) in e.terms() {
            let mut num = Poly::constant(c.clone());
            let mut den = Poly::one();
            for (a, k) in m.factors() {
                let base = match a {
                    Atom::Param(s) | Atom::Var(s) => Poly::var(s),
                    Atom::Recip(p) => {
                        let p = Poly::from_expr(p)?;
                        for _ in 0..*k {
                            den = &den * &p;
                        }
                        continue;
                    }
                    _ => return None,
                };
                for _ in 0..k.unsigned_abs() {
                    if *k > 0 {
                        num = &num * &base;
                    } else {
                        den = &den * &base;
                    }
                }
            }
            acc = &acc + &RatFunc::new(num, den)?;
        }
        Some(acc)
    }

    pub fn to_expr(&self) -> Expr {
        self.to_expr_with(&Expr::param)
    }

    pub fn to_expr_with(&self, leaf: &dyn Fn(&str) -> Expr) -> Expr {
        let n = self.num.to_expr_with(leaf);
        let d = self.den.to_expr_with(leaf);
        n * d.inv().expect("nonzero denominator")
    }

    pub fn eval(&self, vals: &BTreeMap<String, f64>) -> Option<f64> {
        Some(self.num.eval(vals)? / self.den.eval(vals)?)
    }

    /// Factors of the denominator and numerator that must not vanish for
    /// this value to be a valid nonzero pivot.
    pub fn nonvanishing(&self) -> Vec<Poly> {
        let mut out = Vec::new();
        for p in [&self.num, &self.den] {
            if p.as_constant().is_none() {
                out.push(p.monic());
            }
        }
        out
    }

    pub fn is_negative_constant(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_negative())
    }
}

impl Add<&RatFunc> for &RatFunc {
    type Output = RatFunc;
    fn add(self, rhs: &RatFunc) -> RatFunc {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den == rhs.den {
            return RatFunc::new(&self.num + &rhs.num, self.den.clone()).unwrap();
        }
        RatFunc::new(&(&self.num * &rhs.den) + &(&rhs.num * &self.den), &self.den * &rhs.den).unwrap()
    }
}

impl Sub<&RatFunc> for &RatFunc {
    type Output = RatFunc;
    fn sub(self, rhs: &RatFunc) -> RatFunc {
        self + &(-rhs)
    }
}

impl Mul<&RatFunc> for &RatFunc {
    type Output = RatFunc;
    fn mul(self, rhs: &RatFunc) -> RatFunc {
        if self.is_zero() || rhs.is_zero() {
            return RatFunc::zero();
        }
        RatFunc::new(&self.num * &rhs.num, &self.den * &rhs.den).unwrap()
    }
}

impl Div<&RatFunc> for &RatFunc {
    type Output = RatFunc;
    fn div(self, rhs: &RatFunc) -> RatFunc {
        self * &rhs.inv().expect("division by zero rational function")
    }
}

impl Neg for &RatFunc {
    type Output = RatFunc;
    fn neg(self) -> RatFunc {
        RatFunc { num: -&self.num, den: self.den.clone() }
    }
}

macro_rules! owned_ratfunc_ops {
    ($tr:ident, $method:ident) => {
        impl $tr<RatFunc> for RatFunc {
            type Output = RatFunc;
            fn $method(self, rhs: RatFunc) -> RatFunc {
                (&self).$method(&rhs)
            }
        }
    };
}
owned_ratfunc_ops!(Add, add);
owned_ratfunc_ops!(Sub, sub);
owned_ratfunc_ops!(Mul, mul);
owned_ratfunc_ops!(Div, div);

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a() -> Poly {
        Poly::var("a")
    }
    fn k() -> Poly {
        Poly::var("k")
    }

    #[test]
    fn gcd_of_shared_factor() {
        let f = &(&(&a() * &a()).scale(&rat(2)) - &k()) * &(&a() + &k());
        let g = &(&a() - &Poly::one()) * &(&a() + &k());
        assert_eq!(Poly::gcd(&f, &g), (&a() + &k()).monic());
        assert_eq!(Poly::gcd(&a(), &k()), Poly::one());
    }

    #[test]
    fn fractions_reduce() {
        let two_a2 = (&a() * &a()).scale(&rat(2));
        let x = RatFunc::new(&two_a2 * &k(), (&a() * &k()).scale(&rat(4))).unwrap();
        assert_eq!(x, RatFunc::new(a(), Poly::constant(rat(2))).unwrap());
        let y = &x - &x;
        assert!(y.is_zero());
        let z = &RatFunc::param("a") / &RatFunc::param("a");
        assert!(z.is_one());
    }

    #[test]
    fn expression_round_trip() {
        let e = crate::symexpr::Expr::param("a").pow(2) * crate::symexpr::Expr::int(2)
            - crate::symexpr::Expr::param("k");
        let inv = e.inv().unwrap();
        let r = RatFunc::from_expr(&inv).unwrap();
        assert_eq!(r.to_expr(), inv);
        assert_eq!(RatFunc::from_expr(&e).unwrap().to_expr(), e);
    }
}
