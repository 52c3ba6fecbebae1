use std::collections::BTreeMap;

use super::{rational_to_f64, Atom, Expr, ExprError, Result};

/// Assignment key for a leaf atom: its name, or the printed jet variable.
pub fn leaf_name(a: &Atom) -> Option<String> {
    match a {
        Atom::Param(s) | Atom::Var(s) => Some(s.to_string()),
        Atom::Jet(j) => Some(super::format_jet(j)),
        _ => None,
    }
}

#[derive(Clone, Debug)]
enum Op {
    Slot(usize),
    Const(f64),
    Sin(CompiledExpr),
    Cos(CompiledExpr),
    Sinh(CompiledExpr),
    Cosh(CompiledExpr),
    Exp(CompiledExpr),
    Recip(CompiledExpr),
}

/// An expression lowered to slot-indexed floating point form for repeated
/// evaluation.
#[derive(Clone, Debug)]
pub struct CompiledExpr {
    terms: Vec<(f64, Vec<(Op, i32)>)>,
}

impl CompiledExpr {
    /// Compiles `e` against an ordered list of slot names.
    pub fn new(e: &Expr, slots: &[String]) -> Result<Self> {
        let index: BTreeMap<&str, usize> = slots.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        Self::build(e, &index)
    }

    fn build(e: &Expr, index: &BTreeMap<&str, usize>) -> Result<Self> {
        let mut terms = Vec::with_capacity(e.num_terms());
        for (m, c) in e.terms() {
            let mut ops = Vec::with_capacity(m.factors().len());
            for (a, p) in m.factors() {
                let op = match a {
                    Atom::Param(_) | Atom::Var(_) | Atom::Jet(_) => {
                        let name = leaf_name(a).unwrap();
                        match index.get(name.as_str()) {
                            Some(&i) => Op::Slot(i),
                            None => return Err(ExprError::Unassigned(name)),
                        }
                    }
                    Atom::Func(_) => {
                        let name = Expr::atom(a.clone()).to_string();
                        match index.get(name.as_str()) {
                            Some(&i) => Op::Slot(i),
                            None => return Err(ExprError::NotNumeric(name)),
                        }
                    }
                    Atom::Sin(x) => Op::Sin(Self::build(x, index)?),
                    Atom::Cos(x) => Op::Cos(Self::build(x, index)?),
                    Atom::Sinh(x) => Op::Sinh(Self::build(x, index)?),
                    Atom::Cosh(x) => Op::Cosh(Self::build(x, index)?),
                    Atom::Exp(x) => Op::Exp(Self::build(x, index)?),
                    Atom::Recip(x) => Op::Recip(Self::build(x, index)?),
                    Atom::Root(b, d) => Op::Const(rational_to_f64(b).powf(1.0 / f64::from(*d))),
                };
                ops.push((op, *p));
            }
            terms.push((rational_to_f64(c), ops));
        }
        Ok(CompiledExpr { terms })
    }

    /// Evaluates at slot values; non-finite results signal a domain error.
    pub fn eval(&self, vals: &[f64]) -> f64 {
        let mut sum = 0.0;
        for (c, ops) in &self.terms {
            let mut prod = *c;
            for (op, p) in ops {
                let v = match op {
                    Op::Slot(i) => vals[*i],
                    Op::Const(v) => *v,
                    Op::Sin(x) => x.eval(vals).sin(),
                    Op::Cos(x) => x.eval(vals).cos(),
                    Op::Sinh(x) => x.eval(vals).sinh(),
                    Op::Cosh(x) => x.eval(vals).cosh(),
                    Op::Exp(x) => x.eval(vals).exp(),
                    Op::Recip(x) => 1.0 / x.eval(vals),
                };
                prod *= v.powi(*p);
            }
            sum += prod;
        }
        sum
    }
}

/// IEEE double evaluation of `e` under a name → value assignment.
pub fn eval_numeric(e: &Expr, assignment: &BTreeMap<String, f64>) -> Result<f64> {
    let names: Vec<String> = assignment.keys().cloned().collect();
    let vals: Vec<f64> = assignment.values().copied().collect();
    let c = CompiledExpr::new(e, &names)?;
    let v = c.eval(&vals);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ExprError::DivisionByZero)
    }
}
