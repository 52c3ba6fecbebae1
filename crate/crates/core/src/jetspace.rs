//! Jet coordinates, total derivatives and reduction onto a PDE's solution
//! manifold.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::symexpr::{Atom, Context, Expr, ExprError, JetVar, Substitution, Sym};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("jet order {order} exceeds the context maximum {max}")]
    OrderOverflow { order: usize, max: usize },
    #[error("`{0}` is not an independent variable")]
    UnknownVar(String),
    #[error("duplicate variable name `{0}`")]
    Duplicate(String),
    #[error("equation is not solvable for `{0}`")]
    NotSolvable(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

pub type Result<T> = std::result::Result<T, JetError>;

/// Declarations plus the maximal jet order allowed in computations.
#[derive(Clone, Debug)]
pub struct JetContext {
    ctx: Context,
    max_order: usize,
}

impl JetContext {
    pub fn new(ctx: Context, max_order: usize) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for name in ctx.vars().iter().chain(ctx.params()).chain(ctx.deps().iter().map(|d| &d.name)) {
            if !seen.insert(name.clone()) {
                return Err(JetError::Duplicate(name.to_string()));
            }
        }
        Ok(JetContext { ctx, max_order })
    }

    pub fn context(&self) -> &Context {
        &self.ctx
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// `D_v e`, failing when a jet variable beyond the maximal order appears.
    pub fn total_derivative(&self, e: &Expr, v: &str) -> Result<Expr> {
        if !self.ctx.is_var(v) {
            return Err(JetError::UnknownVar(v.to_string()));
        }
        let d = total_derivative_in(&self.ctx, e, v);
        match d.jet_order() {
            Some(o) if o > self.max_order => Err(JetError::OrderOverflow { order: o, max: self.max_order }),
            _ => Ok(d),
        }
    }

    /// `D_J e` for a multi-index `J`.
    pub fn total_derivative_multi(&self, e: &Expr, index: &[Sym]) -> Result<Expr> {
        index.iter().try_fold(e.clone(), |acc, v| self.total_derivative(&acc, v))
    }

    /// Jet variable `u_{J,v}`.
    pub fn extend_jet(&self, j: &JetVar, v: &str) -> JetVar {
        extend(&self.ctx, j, v)
    }

    /// All multi-indices of order `1..=n` over the declared variables, sorted.
    pub fn multi_indices(&self, n: usize) -> Vec<Vec<Sym>> {
        let vars = self.ctx.vars();
        let mut out = Vec::new();
        let mut layer: Vec<Vec<usize>> = vec![Vec::new()];
        for _ in 0..n {
            let mut next = Vec::new();
            for idx in &layer {
                let start = idx.last().copied().unwrap_or(0);
                for k in start..vars.len() {
                    let mut j = idx.clone();
                    j.push(k);
                    next.push(j);
                }
            }
            out.extend(next.iter().map(|j| j.iter().map(|&k| vars[k].clone()).collect()));
            layer = next;
        }
        out
    }
}

fn extend(ctx: &Context, j: &JetVar, v: &str) -> JetVar {
    let mut index = j.index.clone();
    index.push(crate::symexpr::sym(v));
    ctx.sort_index(&mut index);
    JetVar { dep: j.dep.clone(), index }
}

/// `D_v e = ∂_v e + Σ_J u_{J,v} ∂e/∂u_J` without an order bound.
pub fn total_derivative_in(ctx: &Context, e: &Expr, v: &str) -> Expr {
    let mut jets = std::collections::BTreeSet::new();
    e.visit_atoms(&mut |a| {
        if let Atom::Jet(j) = a {
            jets.insert(j.clone());
        }
    });
    let mut out = e.diff(&Atom::var(v));
    for j in jets {
        let depends = ctx.dep(&j.dep).is_some_and(|d| d.vars.iter().any(|w| &**w == v));
        if !depends {
            continue;
        }
        let partial = e.diff(&Atom::Jet(j.clone()));
        if !partial.is_zero() {
            out = out + Expr::jet(extend(ctx, &j, v)) * partial;
        }
    }
    out
}

/// Scalar PDE `Δ = 0` with a solved form `lead = rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pde {
    pub name: String,
    pub residual: Expr,
    pub lead: JetVar,
    pub rhs: Expr,
}

impl Pde {
    /// Solves `residual = 0` for `lead`, which must appear linearly with a
    /// nonzero rational coefficient.
    pub fn new(name: &str, residual: Expr, lead: JetVar) -> Result<Self> {
        let atom = Atom::Jet(lead.clone());
        let (coef, rest) = residual
            .split_linear(&atom)
            .ok_or_else(|| JetError::NotSolvable(crate::symexpr::format_jet(&lead)))?;
        let q = coef
            .as_rational()
            .filter(|q| !num_traits::Zero::is_zero(q))
            .ok_or_else(|| JetError::NotSolvable(crate::symexpr::format_jet(&lead)))?;
        let rhs = (-rest).scale(&q.recip());
        let residual = residual.scale(&q.recip());
        Ok(Pde { name: name.to_string(), residual, lead, rhs })
    }

    /// `lhs = rhs` form.
    pub fn from_equation(name: &str, lhs: &Expr, rhs: &Expr, lead: JetVar) -> Result<Self> {
        Pde::new(name, lhs - rhs, lead)
    }

    pub fn order(&self) -> usize {
        self.residual.jet_order().unwrap_or(0)
    }
}

/// Multiset difference `index - lead`, when `lead ⊆ index`.
fn index_excess(index: &[Sym], lead: &[Sym]) -> Option<Vec<Sym>> {
    let mut rest: Vec<Sym> = index.to_vec();
    for v in lead {
        let pos = rest.iter().position(|w| w == v)?;
        rest.remove(pos);
    }
    Some(rest)
}

/// Replaces the lead jet variable and all its derivatives by the matching
/// total derivatives of the solved form, until none remain.
pub fn on_solutions_reduce(jc: &JetContext, e: &Expr, pde: &Pde) -> Result<Expr> {
    if let Some(o) = e.jet_order() {
        if o > jc.max_order() {
            return Err(JetError::OrderOverflow { order: o, max: jc.max_order() });
        }
    }
    let mut cache: BTreeMap<Vec<Sym>, Expr> = BTreeMap::new();
    let mut cur = e.clone();
    for _ in 0..=jc.max_order() + 1 {
        let mut hits = Vec::new();
        cur.visit_atoms(&mut |a| {
            if let Atom::Jet(j) = a {
                if j.dep == pde.lead.dep {
                    if let Some(k) = index_excess(&j.index, &pde.lead.index) {
                        hits.push((j.clone(), k));
                    }
                }
            }
        });
        if hits.is_empty() {
            return Ok(cur);
        }
        let mut s = Substitution::new();
        for (j, k) in hits {
            let v = match cache.get(&k) {
                Some(v) => v.clone(),
                None => {
                    let v = jc.total_derivative_multi(&pde.rhs, &k)?;
                    cache.insert(k, v.clone());
                    v
                }
            };
            s.insert(Atom::Jet(j), v);
        }
        cur = cur.substitute(&s)?;
    }
    Err(JetError::NotSolvable(crate::symexpr::format_jet(&pde.lead)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse;

    fn jc() -> JetContext {
        let mut c = Context::new();
        c.declare_param("a").declare_param("k");
        for v in ["r", "x", "y", "t"] {
            c.declare_var(v);
        }
        c.declare_dep("u", &["r", "x", "y", "t"]);
        c.declare_positive("r");
        JetContext::new(c, 3).unwrap()
    }

    fn telegraph(jc: &JetContext) -> Pde {
        let c = jc.context();
        let lhs = parse("u_tt + k*u_t", c).unwrap();
        let rhs = parse("a^2*((1/r)*d_r(r*u_r) + (1/r^2)*u_xx + u_yy)", c).unwrap();
        Pde::from_equation("telegraph", &lhs, &rhs, c.jet("u", &["t", "t"])).unwrap()
    }

    #[test]
    fn total_derivatives() {
        let jc = jc();
        let c = jc.context();
        let u = parse("u", c).unwrap();
        assert_eq!(jc.total_derivative(&u, "r").unwrap(), parse("u_r", c).unwrap());
        let e = parse("r*u_x", c).unwrap();
        assert_eq!(jc.total_derivative(&e, "t").unwrap(), parse("r*u_xt", c).unwrap());
        let a = jc.total_derivative(&jc.total_derivative(&u, "r").unwrap(), "x").unwrap();
        let b = jc.total_derivative(&jc.total_derivative(&u, "x").unwrap(), "r").unwrap();
        assert_eq!(a, b);
        let u3 = parse("u_rrt", c).unwrap();
        assert!(matches!(jc.total_derivative(&u3, "x"), Err(JetError::OrderOverflow { order: 4, max: 3 })));
    }

    #[test]
    fn reduction_on_telegraph() {
        let jc = jc();
        let c = jc.context();
        let pde = telegraph(&jc);
        assert!(on_solutions_reduce(&jc, &pde.residual, &pde).unwrap().is_zero());
        let ux = parse("u_x", c).unwrap();
        assert_eq!(on_solutions_reduce(&jc, &ux, &pde).unwrap(), ux);
        let uttt = parse("u_ttt", c).unwrap();
        let golden = parse(
            "a^2*(u_rrt + u_rt/r + u_xxt/r^2 + u_yyt) - k*a^2*(u_rr + u_r/r + u_xx/r^2 + u_yy) + k^2*u_t",
            c,
        )
        .unwrap();
        assert_eq!(on_solutions_reduce(&jc, &uttt, &pde).unwrap(), golden);
    }
}
