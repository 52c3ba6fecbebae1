use std::collections::{BTreeMap, HashMap};

use super::{Atom, Context, Expr, ExprError, Result, Sym};

/// Replacement body for an unknown function: `f(p1,..,pn) ↦ body`.
#[derive(Clone, Debug, PartialEq)]
pub struct FuncBinding {
    pub params: Vec<Atom>,
    pub body: Expr,
}

impl FuncBinding {
    pub fn new(params: Vec<Atom>, body: Expr) -> Self {
        FuncBinding { params, body }
    }

    /// Binding over the declared parameter list of `name`.
    pub fn declared(ctx: &Context, name: &str, body: Expr) -> Option<Self> {
        let decl = ctx.func(name)?;
        let params = decl.params.iter().map(|p| ctx.leaf(p)).collect::<Option<Vec<_>>>()?;
        Some(FuncBinding { params, body })
    }
}

/// Simultaneous substitution of leaf symbols and unknown functions.
#[derive(Clone, Debug, Default)]
pub struct Substitution {
    leaves: BTreeMap<Atom, Expr>,
    funcs: BTreeMap<Sym, FuncBinding>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(mut self, leaf: Atom, value: Expr) -> Self {
        self.leaves.insert(leaf, value);
        self
    }

    pub fn bind_func(mut self, name: &str, binding: FuncBinding) -> Self {
        self.funcs.insert(super::sym(name), binding);
        self
    }

    pub fn insert(&mut self, leaf: Atom, value: Expr) {
        self.leaves.insert(leaf, value);
    }

    pub fn insert_func(&mut self, name: &str, binding: FuncBinding) {
        self.funcs.insert(super::sym(name), binding);
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty() && self.funcs.is_empty()
    }

    pub fn apply(&self, e: &Expr) -> Result<Expr> {
        let mut memo = HashMap::new();
        self.apply_memo(e, &mut memo)
    }

    fn apply_memo(&self, e: &Expr, memo: &mut HashMap<Atom, Expr>) -> Result<Expr> {
        let mut acc = Expr::zero();
        for (m, c) in e.terms() {
            let mut term = Expr::rational(c.clone());
            for (a, p) in m.factors() {
                let v = self.apply_atom(a, memo)?;
                if *p < 0 && v.is_zero() {
                    return Err(ExprError::DivisionByZero);
                }
                term = term * v.pow(i64::from(*p));
            }
            acc = acc + term;
        }
        Ok(acc)
    }

    fn apply_atom(&self, a: &Atom, memo: &mut HashMap<Atom, Expr>) -> Result<Expr> {
        if let Some(v) = self.leaves.get(a) {
            return Ok(v.clone());
        }
        if a.is_leaf() || matches!(a, Atom::Root(..)) {
            return Ok(Expr::atom(a.clone()));
        }
        if let Some(v) = memo.get(a) {
            return Ok(v.clone());
        }
        let v = match a {
            Atom::Func(f) => {
                let args = f.args.iter().map(|x| self.apply_memo(x, memo)).collect::<Result<Vec<_>>>()?;
                match self.funcs.get(&f.name) {
                    Some(b) => {
                        if b.params.len() != args.len() {
                            return Err(ExprError::Arity {
                                name: f.name.to_string(),
                                expected: b.params.len(),
                                got: args.len(),
                            });
                        }
                        let mut body = b.body.clone();
                        for &k in &f.deriv {
                            body = body.diff(&b.params[k]);
                        }
                        let inner = b
                            .params
                            .iter()
                            .cloned()
                            .zip(args)
                            .fold(Substitution::new(), |s, (p, v)| s.bind(p, v));
                        inner.apply(&body)?
                    }
                    None => Expr::atom(Atom::Func(super::FuncApp {
                        name: f.name.clone(),
                        args,
                        deriv: f.deriv.clone(),
                    })),
                }
            }
            Atom::Sin(x) => Expr::sin(&self.apply_memo(x, memo)?),
            Atom::Cos(x) => Expr::cos(&self.apply_memo(x, memo)?),
            Atom::Sinh(x) => Expr::sinh(&self.apply_memo(x, memo)?),
            Atom::Cosh(x) => Expr::cosh(&self.apply_memo(x, memo)?),
            Atom::Exp(x) => Expr::exp(&self.apply_memo(x, memo)?),
            Atom::Recip(x) => self.apply_memo(x, memo)?.inv()?,
            _ => unreachable!("leaf atoms handled above"),
        };
        memo.insert(a.clone(), v.clone());
        Ok(v)
    }
}

impl Expr {
    pub fn substitute(&self, s: &Substitution) -> Result<Expr> {
        s.apply(self)
    }

    /// Substitutes a single leaf.
    pub fn subs(&self, leaf: &Atom, value: &Expr) -> Expr {
        Substitution::new().bind(leaf.clone(), value.clone()).apply(self).expect("substitution of a leaf")
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse, Context};
    use super::*;

    fn ctx() -> Context {
        let mut c = Context::new();
        c.declare_param("a").declare_param("k").declare_param("c1");
        for v in ["r", "x", "y", "t"] {
            c.declare_var(v);
        }
        c.declare_dep("u", &["r", "x", "y", "t"]);
        c.declare_func("xi2", &["r", "x", "y", "t", "u"]);
        c
    }

    #[test]
    fn simultaneous_substitution() {
        let c = ctx();
        let e = parse("u_tt + k*u_t", &c).unwrap();
        let utt = Atom::Jet(c.jet("u", &["t", "t"]));
        let s = Substitution::new().bind(utt, parse("-k*u_t", &c).unwrap());
        assert!(e.substitute(&s).unwrap().is_zero());
        let swap =
            Substitution::new().bind(Atom::var("x"), Expr::var("y")).bind(Atom::var("y"), Expr::var("x"));
        assert_eq!(parse("x + 2*y", &c).unwrap().substitute(&swap).unwrap(), parse("y + 2*x", &c).unwrap());
        let q = parse("exp(-k*t)", &c).unwrap();
        assert_eq!(q.subs(&Atom::var("t"), &Expr::zero()), Expr::one());
    }

    #[test]
    fn function_bindings() {
        let c = ctx();
        let f = parse("xi2(r,x,y,t,u)", &c).unwrap();
        let b = FuncBinding::declared(&c, "xi2", Expr::param("c1")).unwrap();
        let s = Substitution::new().bind_func("xi2", b);
        assert_eq!(f.substitute(&s).unwrap(), Expr::param("c1"));
        let body = parse("r*sin(x)", &c).unwrap();
        let s = Substitution::new().bind_func("xi2", FuncBinding::declared(&c, "xi2", body).unwrap());
        assert_eq!(parse("xi2_rx", &c).unwrap().substitute(&s).unwrap(), parse("cos(x)", &c).unwrap());
        let bad = Substitution::new().bind_func("xi2", FuncBinding::new(vec![Atom::var("r")], Expr::one()));
        assert!(matches!(f.substitute(&bad), Err(ExprError::Arity { .. })));
    }
}
