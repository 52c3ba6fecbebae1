use std::collections::{BTreeMap, BTreeSet};

use super::{sym, Atom, Expr, JetVar, Sym};

/// Dependent function symbol together with the independent variables it depends on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepDecl {
    pub name: Sym,
    pub vars: Vec<Sym>,
}

/// Declared unknown function `f(p1, ..., pn)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuncDecl {
    pub name: Sym,
    pub params: Vec<Sym>,
}

/// Symbol declarations that give meaning to DSL identifiers.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Context {
    params: Vec<Sym>,
    vars: Vec<Sym>,
    deps: Vec<DepDecl>,
    funcs: BTreeMap<Sym, FuncDecl>,
    positive: BTreeSet<Sym>,
    defs: BTreeMap<Sym, Expr>,
}

impl Context {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare_param(&mut self, name: &str) -> &mut Self {
        if !self.is_param(name) {
            self.params.push(sym(name));
        }
        self
    }

    pub fn declare_var(&mut self, name: &str) -> &mut Self {
        if !self.is_var(name) {
            self.vars.push(sym(name));
        }
        self
    }

    pub fn declare_dep(&mut self, name: &str, vars: &[&str]) -> &mut Self {
        self.deps.retain(|d| &*d.name != name);
        self.deps.push(DepDecl { name: sym(name), vars: vars.iter().map(|v| sym(v)).collect() });
        self
    }

    pub fn declare_func(&mut self, name: &str, params: &[&str]) -> &mut Self {
        self.funcs
            .insert(sym(name), FuncDecl { name: sym(name), params: params.iter().map(|p| sym(p)).collect() });
        self
    }

    pub fn declare_positive(&mut self, name: &str) -> &mut Self {
        self.positive.insert(sym(name));
        self
    }

    pub fn params(&self) -> &[Sym] {
        &self.params
    }

    pub fn vars(&self) -> &[Sym] {
        &self.vars
    }

    pub fn deps(&self) -> &[DepDecl] {
        &self.deps
    }

    pub fn funcs(&self) -> impl Iterator<Item = &FuncDecl> {
        self.funcs.values()
    }

    pub fn positive(&self) -> &BTreeSet<Sym> {
        &self.positive
    }

    pub fn is_param(&self, name: &str) -> bool {
        self.params.iter().any(|p| &**p == name)
    }

    pub fn is_var(&self, name: &str) -> bool {
        self.vars.iter().any(|p| &**p == name)
    }

    pub fn dep(&self, name: &str) -> Option<&DepDecl> {
        self.deps.iter().find(|d| &*d.name == name)
    }

    pub fn func(&self, name: &str) -> Option<&FuncDecl> {
        self.funcs.get(name)
    }

    /// Names an expression so later text can refer to it.
    pub fn define(&mut self, name: &str, value: Expr) -> &mut Self {
        self.defs.insert(sym(name), value);
        self
    }

    pub fn definition(&self, name: &str) -> Option<&Expr> {
        self.defs.get(name)
    }

    pub fn is_declared(&self, name: &str) -> bool {
        self.is_param(name)
            || self.is_var(name)
            || self.dep(name).is_some()
            || self.func(name).is_some()
            || self.defs.contains_key(name)
    }

    pub fn var_position(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| &**v == name)
    }

    /// Sorts a derivative multi-index by declared variable order.
    pub fn sort_index(&self, index: &mut [Sym]) {
        index.sort_by_key(|v| self.var_position(v).unwrap_or(usize::MAX));
    }

    pub fn jet(&self, dep: &str, index: &[&str]) -> JetVar {
        let mut idx: Vec<Sym> = index.iter().map(|v| sym(v)).collect();
        self.sort_index(&mut idx);
        JetVar { dep: sym(dep), index: idx }
    }

    pub fn jet_expr(&self, dep: &str, index: &[&str]) -> Expr {
        Expr::jet(self.jet(dep, index))
    }

    /// Expression for a declared identifier: a parameter, variable, or the
    /// undifferentiated dependent symbol.
    pub fn symbol(&self, name: &str) -> Option<Expr> {
        if self.is_param(name) {
            Some(Expr::param(name))
        } else if self.is_var(name) {
            Some(Expr::var(name))
        } else if self.dep(name).is_some() {
            Some(Expr::jet(JetVar::new(name)))
        } else {
            None
        }
    }

    /// Leaf atom for a declared identifier.
    pub fn leaf(&self, name: &str) -> Option<Atom> {
        self.symbol(name).and_then(|e| e.as_atom().cloned())
    }

    /// Arguments of a declared function as expressions.
    pub fn func_args(&self, name: &str) -> Option<Vec<Expr>> {
        let decl = self.func(name)?;
        decl.params.iter().map(|p| self.symbol(p)).collect()
    }

    /// Merges the declarations of `other` into `self`.
    pub fn extend(&mut self, other: &Context) {
        for p in &other.params {
            self.declare_param(p);
        }
        for v in &other.vars {
            self.declare_var(v);
        }
        for d in &other.deps {
            if self.dep(&d.name).is_none() {
                self.deps.push(d.clone());
            }
        }
        for (k, f) in &other.funcs {
            self.funcs.entry(k.clone()).or_insert_with(|| f.clone());
        }
        self.positive.extend(other.positive.iter().cloned());
        for (k, v) in &other.defs {
            self.defs.entry(k.clone()).or_insert_with(|| v.clone());
        }
    }
}
