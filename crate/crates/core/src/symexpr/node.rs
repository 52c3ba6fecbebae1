use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Atom, Expr, ExprError, FuncApp, JetVar, Rational, Result, Sym};

/// Expression syntax tree, before canonicalization.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Rational(Rational),
    Param(Sym),
    Var(Sym),
    Jet(JetVar),
    Func {
        name: Sym,
        args: Vec<Node>,
        deriv: Vec<usize>,
    },
    Sum(Vec<Node>),
    Product(Vec<Node>),
    /// Integer exponent, or a rational one on a nonnegative rational constant.
    Power(Box<Node>, Rational),
    Sin(Box<Node>),
    Cos(Box<Node>),
    Sinh(Box<Node>),
    Cosh(Box<Node>),
    Exp(Box<Node>),
    /// A node already in canonical form (e.g. produced by a total derivative at parse time).
    Canonical(Expr),
}

impl Node {
    pub fn to_expr(&self) -> Result<Expr> {
        Ok(match self {
            Node::Rational(q) => Expr::rational(q.clone()),
            Node::Param(s) => Expr::atom(Atom::Param(s.clone())),
            Node::Var(s) => Expr::atom(Atom::Var(s.clone())),
            Node::Jet(j) => Expr::jet(j.clone()),
            Node::Func { name, args, deriv } => {
                let args = args.iter().map(Node::to_expr).collect::<Result<Vec<_>>>()?;
                let mut deriv = deriv.clone();
                deriv.sort_unstable();
                Expr::atom(Atom::Func(FuncApp { name: name.clone(), args, deriv }))
            }
            Node::Sum(items) => {
                let mut acc = Expr::zero();
                for n in items {
                    acc = acc + n.to_expr()?;
                }
                acc
            }
            Node::Product(items) => {
                let mut acc = Expr::one();
                for n in items {
                    acc = acc * n.to_expr()?;
                }
                acc
            }
            Node::Power(base, exp) => {
                if exp.is_integer() {
                    let n = exp
                        .to_integer()
                        .to_i64()
                        .ok_or_else(|| ExprError::Other("exponent too large".into()))?;
                    return int_power(base, n);
                }
                let b = base.to_expr()?;
                {
                    match b.as_rational() {
                        Some(q) if !q.is_negative() => {
                            let p = exp
                                .numer()
                                .to_i64()
                                .ok_or_else(|| ExprError::Other("exponent too large".into()))?;
                            let d = exp
                                .denom()
                                .to_i64()
                                .ok_or_else(|| ExprError::Other("exponent too large".into()))?;
                            Expr::root(&q, p, d)?
                        }
                        _ => return Err(ExprError::FractionalPower(b.to_string())),
                    }
                }
            }
            Node::Sin(a) => Expr::sin(&a.to_expr()?),
            Node::Cos(a) => Expr::cos(&a.to_expr()?),
            Node::Sinh(a) => Expr::sinh(&a.to_expr()?),
            Node::Cosh(a) => Expr::cosh(&a.to_expr()?),
            Node::Exp(a) => Expr::exp(&a.to_expr()?),
            Node::Canonical(e) => e.clone(),
        })
    }
}

/// Integer power distributed over products and nested powers, so that
/// `1/(p^2)` and `(1/p)^2` build the same reciprocal atom.
fn int_power(base: &Node, n: i64) -> Result<Expr> {
    match base {
        Node::Power(b, p) if p.is_integer() => {
            let m = p.to_integer().to_i64().ok_or_else(|| ExprError::Other("exponent too large".into()))?;
            int_power(b, m * n)
        }
        Node::Product(fs) if n < 0 => {
            let mut acc = Expr::one();
            for f in fs {
                acc = acc * int_power(f, n)?;
            }
            Ok(acc)
        }
        _ => {
            let b = base.to_expr()?;
            if n < 0 && b.is_zero() {
                return Err(ExprError::DivisionByZero);
            }
            Ok(b.pow(n))
        }
    }
}

impl Expr {
    /// Tree view of the canonical form: a `Sum` of `Product`s.
    pub fn to_node(&self) -> Node {
        let mut terms = Vec::new();
        for (m, c) in self.terms() {
            let mut factors = Vec::new();
            if !c.is_one() || m.is_one() {
                factors.push(Node::Rational(c.clone()));
            }
            for (a, e) in m.factors() {
                let base = atom_node(a);
                if *e == 1 {
                    factors.push(base);
                } else {
                    factors.push(Node::Power(Box::new(base), super::rat(i64::from(*e))));
                }
            }
            terms.push(if factors.len() == 1 { factors.pop().unwrap() } else { Node::Product(factors) });
        }
        match terms.len() {
            0 => Node::Rational(Rational::zero()),
            1 => terms.pop().unwrap(),
            _ => Node::Sum(terms),
        }
    }
}

fn atom_node(a: &Atom) -> Node {
    match a {
        Atom::Param(s) => Node::Param(s.clone()),
        Atom::Var(s) => Node::Var(s.clone()),
        Atom::Jet(j) => Node::Jet(j.clone()),
        Atom::Func(f) => Node::Func {
            name: f.name.clone(),
            args: f.args.iter().map(Expr::to_node).collect(),
            deriv: f.deriv.clone(),
        },
        Atom::Sin(e) => Node::Sin(Box::new(e.to_node())),
        Atom::Cos(e) => Node::Cos(Box::new(e.to_node())),
        Atom::Sinh(e) => Node::Sinh(Box::new(e.to_node())),
        Atom::Cosh(e) => Node::Cosh(Box::new(e.to_node())),
        Atom::Exp(e) => Node::Exp(Box::new(e.to_node())),
        Atom::Root(b, d) => {
            Node::Power(Box::new(Node::Rational(b.clone())), Rational::new(1.into(), (*d).into()))
        }
        Atom::Recip(p) => Node::Power(Box::new(p.to_node()), super::rat(-1)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_view_round_trips() {
        let x = Expr::var("x");
        let e = Expr::sin(&x) * Expr::param("a").pow(2) - Expr::frac(1, 3) * Expr::var("r").inv().unwrap();
        assert_eq!(e.to_node().to_expr().unwrap(), e);
    }
}
