use std::collections::HashMap;

use super::{rat, Atom, Expr, FuncApp};

impl Expr {
    /// Partial derivative with respect to a leaf coordinate (variable,
    /// parameter or jet variable). Jet variables are independent coordinates.
    pub fn diff(&self, target: &Atom) -> Expr {
        let mut memo = HashMap::new();
        diff_expr(self, target, &mut memo)
    }

    pub fn diff_var(&self, name: &str) -> Expr {
        self.diff(&Atom::var(name))
    }
}

fn diff_expr(e: &Expr, target: &Atom, memo: &mut HashMap<Atom, Expr>) -> Expr {
    let mut acc = Expr::zero();
    for (m, c) in e.terms() {
        let fs = m.factors();
        for (i, (a, p)) in fs.iter().enumerate() {
            let da = diff_atom(a, target, memo);
            if da.is_zero() {
                continue;
            }
            let mut rest = fs.to_vec();
            if *p == 1 {
                rest.remove(i);
            } else {
                rest[i].1 = p - 1;
            }
            let coef = c * rat(i64::from(*p));
            acc = acc + Expr::finalize(coef, rest) * da;
        }
    }
    acc
}

fn diff_atom(a: &Atom, target: &Atom, memo: &mut HashMap<Atom, Expr>) -> Expr {
    if a == target {
        return Expr::one();
    }
    if a.is_leaf() || matches!(a, Atom::Root(..)) {
        return Expr::zero();
    }
    if let Some(d) = memo.get(a) {
        return d.clone();
    }
    let d = match a {
        Atom::Func(f) => {
            let mut acc = Expr::zero();
            for (k, arg) in f.args.iter().enumerate() {
                let dk = diff_expr(arg, target, memo);
                if dk.is_zero() {
                    continue;
                }
                let mut deriv = f.deriv.clone();
                let pos = deriv.partition_point(|&j| j <= k);
                deriv.insert(pos, k);
                let g = Atom::Func(FuncApp { name: f.name.clone(), args: f.args.clone(), deriv });
                acc = acc + Expr::atom(g) * dk;
            }
            acc
        }
        Atom::Sin(th) => Expr::cos(th) * diff_expr(th, target, memo),
        Atom::Cos(th) => -(Expr::sin(th) * diff_expr(th, target, memo)),
        Atom::Sinh(th) => Expr::cosh(th) * diff_expr(th, target, memo),
        Atom::Cosh(th) => Expr::sinh(th) * diff_expr(th, target, memo),
        Atom::Exp(th) => Expr::exp(th) * diff_expr(th, target, memo),
        Atom::Recip(p) => {
            let dp = diff_expr(p, target, memo);
            if dp.is_zero() {
                Expr::zero()
            } else {
                let r = Expr::finalize(rat(1), vec![(a.clone(), 2)]);
                -(r * dp)
            }
        }
        _ => Expr::zero(),
    };
    memo.insert(a.clone(), d.clone());
    d
}

#[cfg(test)]
mod tests {
    use super::super::{parse, Context};
    use super::*;

    fn ctx() -> Context {
        let mut c = Context::new();
        c.declare_param("a").declare_param("k");
        for v in ["r", "x", "y", "t"] {
            c.declare_var(v);
        }
        c.declare_dep("u", &["r", "x", "y", "t"]);
        c.declare_func("xi1", &["r", "x", "y", "t", "u"]);
        c
    }

    #[test]
    fn partial_derivatives() {
        let c = ctx();
        let e = parse("sin(x)*u_r", &c).unwrap();
        assert_eq!(e.diff_var("x"), parse("cos(x)*u_r", &c).unwrap());
        let ur = c.leaf("u_r").unwrap_or_else(|| Atom::Jet(c.jet("u", &["r"])));
        assert_eq!(e.diff(&ur), parse("sin(x)", &c).unwrap());
        let f = parse("xi1(r,x,y,t,u)", &c).unwrap();
        assert_eq!(f.diff_var("r"), parse("xi1_r", &c).unwrap());
        assert_eq!(f.diff_var("r").diff_var("t"), parse("xi1_tr", &c).unwrap());
    }

    #[test]
    fn chain_rule_through_atoms() {
        let c = ctx();
        let e = parse("1/(r + x^2)", &c).unwrap();
        assert_eq!(e.diff_var("x"), parse("-2*x/(r+x^2)^2", &c).unwrap());
        let g = parse("exp(-k*t)*cosh(a*t)", &c).unwrap();
        let want = parse("-k*exp(-k*t)*cosh(a*t) + a*exp(-k*t)*sinh(a*t)", &c).unwrap();
        assert_eq!(g.diff_var("t"), want);
        let h = parse("r^(-2)", &c).unwrap();
        assert_eq!(h.diff_var("r"), parse("-2*r^(-3)", &c).unwrap());
    }
}
