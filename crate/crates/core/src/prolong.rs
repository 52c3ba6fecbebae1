//! Point vector fields, characteristics and prolongation.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::jetspace::{JetContext, JetError};
use crate::symexpr::{format_jet, Atom, Expr, JetVar, Sym};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProlongError {
    #[error("coefficient of `{component}` depends on the derivative `{jet}`")]
    JetDependence { component: String, jet: String },
    #[error("expected {expected} coefficients, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("expression of jet order {order} exceeds the prolongation order {max}")]
    OrderMismatch { order: usize, max: usize },
    #[error(transparent)]
    Jet(#[from] JetError),
}

pub type Result<T> = std::result::Result<T, ProlongError>;

/// `v = Σ ξᵢ ∂_{xᵢ} + η ∂_u` with coefficients depending on `(x, u)` only.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub name: String,
    pub vars: Vec<Sym>,
    pub dep: Sym,
    pub xi: Vec<Expr>,
    pub eta: Expr,
}

impl VectorField {
    pub fn new(jc: &JetContext, name: &str, xi: Vec<Expr>, eta: Expr) -> Result<Self> {
        let ctx = jc.context();
        let vars = ctx.vars().to_vec();
        if xi.len() != vars.len() {
            return Err(ProlongError::Shape { expected: vars.len(), got: xi.len() });
        }
        let dep = ctx.deps().first().map(|d| d.name.clone()).unwrap_or_else(|| crate::symexpr::sym("u"));
        let vf = VectorField { name: name.to_string(), vars, dep, xi, eta };
        for (label, c) in vf.components() {
            let mut bad = None;
            c.visit_atoms(&mut |a| {
                if let Atom::Jet(j) = a {
                    if j.order() > 0 && bad.is_none() {
                        bad = Some(format_jet(j));
                    }
                }
            });
            if let Some(jet) = bad {
                return Err(ProlongError::JetDependence { component: label, jet });
            }
        }
        Ok(vf)
    }

    pub fn zero(jc: &JetContext, name: &str) -> Self {
        let n = jc.context().vars().len();
        VectorField::new(jc, name, vec![Expr::zero(); n], Expr::zero()).expect("zero field")
    }

    /// `(label, coefficient)` pairs, independent variables first.
    pub fn components(&self) -> Vec<(String, &Expr)> {
        let mut out: Vec<(String, &Expr)> = self.vars.iter().map(|v| v.to_string()).zip(&self.xi).collect();
        out.push((self.dep.to_string(), &self.eta));
        out
    }

    /// Coefficients as one vector `(ξ₁, …, ξ_p, η)`.
    pub fn coefficients(&self) -> Vec<Expr> {
        let mut v = self.xi.clone();
        v.push(self.eta.clone());
        v
    }

    pub fn from_coefficients(&self, name: &str, coeffs: Vec<Expr>) -> VectorField {
        let mut xi = coeffs;
        let eta = xi.pop().expect("nonempty coefficient vector");
        VectorField { name: name.to_string(), vars: self.vars.clone(), dep: self.dep.clone(), xi, eta }
    }

    pub fn is_zero(&self) -> bool {
        self.eta.is_zero() && self.xi.iter().all(Expr::is_zero)
    }

    /// Action as a derivation on functions of `(x, u)`.
    pub fn apply(&self, e: &Expr) -> Expr {
        let mut acc =
            self.eta.clone() * e.diff(&Atom::Jet(JetVar { dep: self.dep.clone(), index: Vec::new() }));
        for (v, c) in self.vars.iter().zip(&self.xi) {
            if !c.is_zero() {
                acc = acc + c * e.diff(&Atom::Var(v.clone()));
            }
        }
        acc
    }

    pub fn scale(&self, s: &Expr) -> VectorField {
        self.from_coefficients(&self.name, self.coefficients().iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        let c = self.coefficients().iter().zip(other.coefficients()).map(|(a, b)| a + b).collect();
        self.from_coefficients(&self.name, c)
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        self.add(&other.scale(&Expr::int(-1)))
    }

    pub fn map(&self, f: &dyn Fn(&Expr) -> Expr) -> VectorField {
        self.from_coefficients(&self.name, self.coefficients().iter().map(f).collect())
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (label, c) in self.components() {
            if c.is_zero() {
                continue;
            }
            let (neg, body) = if c.is_single_term()
                && c.leading_coefficient().is_some_and(|q| q < &num_traits::Zero::zero())
            {
                (true, -c)
            } else {
                (false, c.clone())
            };
            let coef = if body.is_one() {
                String::new()
            } else if body.is_single_term() {
                format!("{body} ")
            } else {
                format!("({body}) ")
            };
            match (first, neg) {
                (true, true) => write!(f, "-")?,
                (true, false) => {}
                (false, true) => write!(f, " - ")?,
                (false, false) => write!(f, " + ")?,
            }
            write!(f, "{coef}d/d{label}")?;
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// `Q = η − Σ ξᵢ uᵢ`.
pub fn characteristic(jc: &JetContext, vf: &VectorField) -> Expr {
    let mut q = vf.eta.clone();
    let base = JetVar { dep: vf.dep.clone(), index: Vec::new() };
    for (v, c) in vf.vars.iter().zip(&vf.xi) {
        if !c.is_zero() {
            q = q - c * Expr::jet(jc.extend_jet(&base, v));
        }
    }
    q
}

/// A vector field with its prolongation coefficients `φ^J`, `|J| ≤ order`.
#[derive(Clone, Debug)]
pub struct ProlongedField {
    pub base: VectorField,
    pub order: usize,
    pub phi: BTreeMap<Vec<Sym>, Expr>,
}

impl ProlongedField {
    pub fn coefficient(&self, index: &[Sym]) -> Option<&Expr> {
        self.phi.get(index)
    }
}

/// `φ^J = D_J Q + Σ ξᵢ u_{J,i}` for every sorted `J` with `|J| ≤ n`.
pub fn prolong(jc: &JetContext, vf: &VectorField, n: usize) -> Result<ProlongedField> {
    if n + 1 > jc.max_order() {
        return Err(JetError::OrderOverflow { order: n + 1, max: jc.max_order() }.into());
    }
    let q = characteristic(jc, vf);
    let indices = jc.multi_indices(n);
    let computed: Vec<(Vec<Sym>, Expr)> = indices
        .par_iter()
        .map(|idx| -> Result<(Vec<Sym>, Expr)> {
            let mut phi = jc.total_derivative_multi(&q, idx)?;
            let j = JetVar { dep: vf.dep.clone(), index: idx.clone() };
            for (v, c) in vf.vars.iter().zip(&vf.xi) {
                if !c.is_zero() {
                    phi = phi + c * Expr::jet(jc.extend_jet(&j, v));
                }
            }
            Ok((idx.clone(), phi))
        })
        .collect::<Result<_>>()?;
    let mut phi: BTreeMap<Vec<Sym>, Expr> = computed.into_iter().collect();
    phi.insert(Vec::new(), vf.eta.clone());
    Ok(ProlongedField { base: vf.clone(), order: n, phi })
}

/// `pr v (e) = Σ ξᵢ ∂e/∂xᵢ + Σ_J φ^J ∂e/∂u_J`.
pub fn apply_prolonged(pf: &ProlongedField, e: &Expr) -> Result<Expr> {
    let order = e.jet_order().unwrap_or(0);
    if order > pf.order {
        return Err(ProlongError::OrderMismatch { order, max: pf.order });
    }
    let mut acc = Expr::zero();
    for (v, c) in pf.base.vars.iter().zip(&pf.base.xi) {
        if !c.is_zero() {
            acc = acc + c * e.diff(&Atom::Var(v.clone()));
        }
    }
    for (idx, phi) in &pf.phi {
        let atom = Atom::Jet(JetVar { dep: pf.base.dep.clone(), index: idx.clone() });
        let d = e.diff(&atom);
        if !d.is_zero() {
            acc = acc + phi * d;
        }
    }
    Ok(acc)
}
