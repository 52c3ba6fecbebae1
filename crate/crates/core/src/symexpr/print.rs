use std::fmt::{self, Write};

use num_traits::{One, Signed};

use super::{Atom, Expr, FuncApp, JetVar, Monomial, Rational};

pub fn format_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// `u`, `u_rx`, or `u_{x1,x2}` when an index name is longer than one character.
pub fn format_jet(j: &JetVar) -> String {
    if j.index.is_empty() {
        return j.dep.to_string();
    }
    if j.index.iter().all(|v| v.chars().count() == 1) {
        let mut s = format!("{}_", j.dep);
        for v in &j.index {
            s.push_str(v);
        }
        s
    } else {
        let names: Vec<&str> = j.index.iter().map(|v| &**v).collect();
        format!("{}_{{{}}}", j.dep, names.join(","))
    }
}

fn simple_arg(e: &Expr) -> Option<String> {
    match e.as_atom()? {
        Atom::Var(s) | Atom::Param(s) => Some(s.to_string()),
        Atom::Jet(j) if j.index.is_empty() => Some(j.dep.to_string()),
        _ => None,
    }
}

fn format_func(f: &FuncApp) -> String {
    let args: Vec<String> = f.args.iter().map(|a| a.to_string()).collect();
    let mut s = f.name.to_string();
    if !f.deriv.is_empty() {
        let names: Option<Vec<String>> = f.args.iter().map(simple_arg).collect();
        let letters = names.filter(|n| {
            let mut sorted = n.clone();
            sorted.sort();
            sorted.dedup();
            sorted.len() == n.len() && n.iter().all(|v| v.chars().count() == 1)
        });
        match letters {
            Some(n) => {
                s.push('_');
                for &k in &f.deriv {
                    s.push_str(&n[k]);
                }
            }
            None => {
                let pos: Vec<String> = f.deriv.iter().map(|k| (k + 1).to_string()).collect();
                let _ = write!(s, "_{{{}}}", pos.join(","));
            }
        }
    }
    let _ = write!(s, "({})", args.join(","));
    s
}

fn format_factor(a: &Atom, e: i32) -> String {
    let base = match a {
        Atom::Param(s) | Atom::Var(s) => s.to_string(),
        Atom::Jet(j) => format_jet(j),
        Atom::Func(f) => format_func(f),
        Atom::Sin(x) => format!("sin({x})"),
        Atom::Cos(x) => format!("cos({x})"),
        Atom::Sinh(x) => format!("sinh({x})"),
        Atom::Cosh(x) => format!("cosh({x})"),
        Atom::Exp(x) => format!("exp({x})"),
        Atom::Root(b, d) => return format!("{}^({}/{})", format_rational(b), e, d),
        Atom::Recip(p) => return format!("({p})^(-{e})"),
    };
    match e {
        1 => base,
        e if e < 0 => format!("{base}^({e})"),
        e => format!("{base}^{e}"),
    }
}

/// Unsigned rendering of `|c| * m`.
fn format_term(m: &Monomial, c: &Rational) -> String {
    let c = c.abs();
    // Root factors read as part of the coefficient, so they go first.
    let (roots, rest): (Vec<_>, Vec<_>) = m.factors().iter().partition(|(a, _)| matches!(a, Atom::Root(..)));
    let factors: Vec<String> = roots.into_iter().chain(rest).map(|(a, e)| format_factor(a, *e)).collect();
    if factors.is_empty() {
        return format_rational(&c);
    }
    let body = factors.join("*");
    if c.is_one() {
        body
    } else {
        format!("{}*{}", format_rational(&c), body)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms().enumerate() {
            let neg = c.is_negative();
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            f.write_str(&format_term(m, c))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse, Context};

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
    fn prints_canonical_forms() {
        let c = ctx();
        let cases = [
            ("2*a^2*t", "2*a^2*t"),
            ("-k*y*u", "-k*y*u"),
            ("u_xr + 1/r", "r^(-1) + u_rx"),
            ("sqrt(2)*cosh(a*s2)", "2^(1/2)*cosh(a*s2)"),
            ("1/(2*a^2 - k)", "(2*a^2 - k)^(-1)"),
            ("xi1_ru", "xi1_ru(r,x,y,t,u)"),
            ("xi1_r(r,x,y,t+1,u)", "xi1_{1}(r,x,y,1 + t,u)"),
        ];
        let mut c2 = c.clone();
        c2.declare_param("s2");
        for (src, want) in cases {
            let e = parse(src, &c2).unwrap();
            assert_eq!(e.to_string(), want, "{src}");
            assert_eq!(parse(&e.to_string(), &c2).unwrap(), e);
        }
    }
}
