//! Determining equations and symmetry verdicts.
//!
//! The invariance condition `pr v (Δ) = 0` on solutions is reduced onto the
//! solution manifold and split by the remaining jet monomials. Each
//! coefficient is one linear homogeneous equation in the unknown
//! coefficient functions of the ansatz.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::jetspace::{on_solutions_reduce, JetContext, JetError, Pde};
use crate::prolong::{apply_prolonged, prolong, ProlongError, VectorField};
use crate::sample::Sampler;
use crate::symexpr::{
    eval_numeric, format_jet, leaf_name, Atom, Expr, ExprError, FuncBinding, Monomial, Rational,
    Substitution, Sym,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetsysError {
    #[error("ansatz: {0}")]
    Ansatz(String),
    #[error("determining equation is not linear homogeneous in the unknowns: {0}")]
    Nonlinear(String),
    #[error(transparent)]
    Prolong(#[from] ProlongError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

pub type Result<T> = std::result::Result<T, DetsysError>;

/// Unknown coefficient functions `ξ¹, …, ξᵖ, η` of a generic point field.
#[derive(Clone, Debug)]
pub struct Ansatz {
    pub funcs: Vec<Sym>,
    pub field: VectorField,
    /// Whether some unknown takes the dependent variable as an argument.
    pub u_dependent: bool,
}

impl Ansatz {
    /// Uses declared functions `names = [ξ names..., η name]` in variable order.
    pub fn declared(jc: &JetContext, names: &[&str]) -> Result<Self> {
        let ctx = jc.context();
        let p = ctx.vars().len();
        if names.len() != p + 1 {
            return Err(DetsysError::Ansatz(format!(
                "expected {} function names, got {}",
                p + 1,
                names.len()
            )));
        }
        let dep = ctx.deps().first().ok_or_else(|| DetsysError::Ansatz("no dependent variable".into()))?;
        let mut coeffs = Vec::with_capacity(names.len());
        let mut u_dependent = false;
        for n in names {
            let decl = ctx.func(n).ok_or_else(|| DetsysError::Ansatz(format!("`{n}` is not declared")))?;
            u_dependent |= decl.params.contains(&dep.name);
            let args =
                ctx.func_args(n).ok_or_else(|| DetsysError::Ansatz(format!("bad arguments for `{n}`")))?;
            coeffs.push(Expr::atom(Atom::Func(crate::symexpr::FuncApp {
                name: decl.name.clone(),
                args,
                deriv: Vec::new(),
            })));
        }
        let eta = coeffs.pop().expect("p + 1 names");
        let field = VectorField::new(jc, "ansatz", coeffs, eta)?;
        Ok(Ansatz { funcs: names.iter().map(|n| crate::symexpr::sym(n)).collect(), field, u_dependent })
    }

    /// Replaces each unknown by the matching coefficient of `vf`.
    pub fn binding(&self, jc: &JetContext, vf: &VectorField) -> Result<Substitution> {
        let mut s = Substitution::new();
        for (name, body) in self.funcs.iter().zip(vf.coefficients()) {
            let b = FuncBinding::declared(jc.context(), name, body)
                .ok_or_else(|| DetsysError::Ansatz(format!("`{name}` is not declared")))?;
            s.insert_func(name, b);
        }
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeterminingEquation {
    #[serde(serialize_with = "ser_display")]
    pub expr: Expr,
    /// Jet monomials whose coefficient produced this equation.
    pub sources: Vec<String>,
}

fn ser_display<S: serde::Serializer, T: std::fmt::Display>(
    v: &T,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Clone, Debug)]
pub struct DeterminingSystem {
    pub ansatz: Ansatz,
    /// Reduced invariance condition before splitting.
    pub condition: Expr,
    pub equations: Vec<DeterminingEquation>,
}

/// Normal form up to units: powers of positive symbols are cancelled, the
/// rational content removed and the leading coefficient made positive.
pub fn normalize_equation(e: &Expr, positive: &BTreeSet<Sym>) -> Expr {
    if e.is_zero() {
        return Expr::zero();
    }
    let is_pos = |a: &Atom| match a {
        Atom::Var(s) | Atom::Param(s) => positive.contains(s),
        _ => false,
    };
    let mut atoms: BTreeSet<&Atom> = BTreeSet::new();
    for (m, _) in e.terms() {
        atoms.extend(m.factors().iter().map(|(a, _)| a).filter(|a| is_pos(a)));
    }
    let mut unit = Vec::new();
    for a in atoms {
        let lo = e.terms().map(|(m, _)| m.exponent_of(a)).min().unwrap_or(0);
        if lo != 0 {
            unit.push((a.clone(), -lo));
        }
    }
    let scaled = e * Expr::monomial(Rational::from_integer(1.into()), unit);
    let (content, _) = scaled.primitive_part();
    let c =
        content.terms().next().map(|(_, c)| c.clone()).unwrap_or_else(|| Rational::from_integer(1.into()));
    scaled.scale(&c.recip())
}

fn check_linear(e: &Expr) -> Result<()> {
    for (m, _) in e.terms() {
        let funcs: Vec<_> = m.factors().iter().filter(|(a, _)| matches!(a, Atom::Func(_))).collect();
        let nested = m.factors().iter().any(|(a, _)| {
            !matches!(a, Atom::Func(_))
                && a.children().iter().any(|c| c.any_atom(&|b| matches!(b, Atom::Func(_))))
        });
        if funcs.len() != 1 || funcs[0].1 != 1 || nested {
            return Err(DetsysError::Nonlinear(e.to_string()));
        }
    }
    Ok(())
}

fn monomial_label(m: &Monomial) -> String {
    if m.is_one() {
        return "1".into();
    }
    Expr::monomial(Rational::from_integer(1.into()), m.factors().to_vec()).to_string()
}

/// Builds the determining system of `pde` for the given ansatz.
pub fn determining_system(jc: &JetContext, pde: &Pde, ansatz: &Ansatz) -> Result<DeterminingSystem> {
    let pf = prolong(jc, &ansatz.field, pde.order())?;
    let raw = apply_prolonged(&pf, &pde.residual)?;
    let condition = on_solutions_reduce(jc, &raw, pde)?;
    let dep = ansatz.field.dep.clone();
    let split_u = !ansatz.u_dependent;
    let groups = condition.collect_by(&|a| match a {
        Atom::Jet(j) => j.dep == dep && (j.order() > 0 || split_u),
        _ => false,
    });
    let positive = jc.context().positive().clone();
    let mut merged: BTreeMap<Expr, Vec<String>> = BTreeMap::new();
    for (m, coef) in groups {
        let eq = normalize_equation(&coef, &positive);
        check_linear(&eq)?;
        merged.entry(eq).or_default().push(monomial_label(&m));
    }
    let mut equations: Vec<DeterminingEquation> =
        merged.into_iter().map(|(expr, sources)| DeterminingEquation { expr, sources }).collect();
    equations.sort_by(|a, b| {
        (a.expr.num_terms(), a.expr.to_string()).cmp(&(b.expr.num_terms(), b.expr.to_string()))
    });
    Ok(DeterminingSystem { ansatz: ansatz.clone(), condition, equations })
}

impl DeterminingSystem {
    /// Residual of every equation after substituting the coefficients of `vf`.
    pub fn evaluate(&self, jc: &JetContext, vf: &VectorField) -> Result<Vec<Expr>> {
        let s = self.ansatz.binding(jc, vf)?;
        self.equations.iter().map(|e| Ok(e.expr.substitute(&s)?)).collect()
    }

    /// Whether the normalized form of `eq` occurs in the system.
    pub fn contains(&self, jc: &JetContext, eq: &Expr) -> bool {
        let n = normalize_equation(eq, jc.context().positive());
        self.equations.iter().any(|e| e.expr == n)
    }
}

/// Numeric point at which a residual was found nonzero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub point: BTreeMap<String, f64>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict")]
pub enum Verdict {
    Symmetry,
    NotSymmetry { witness: Witness },
    Unresolved { residual: String },
}

impl Verdict {
    pub fn is_symmetry(&self) -> bool {
        matches!(self, Verdict::Symmetry)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryCheck {
    pub field: String,
    pub verdict: Verdict,
    #[serde(serialize_with = "ser_display")]
    pub reduced: Expr,
    /// Largest `|pr v (Δ)|` over on-manifold sample points.
    pub numeric_max: Option<f64>,
}

/// Number of random points used for the nonzero-witness search.
pub const WITNESS_POINTS: usize = 20;
/// Number of on-manifold points used to corroborate a symmetry verdict.
pub const CORROBORATION_POINTS: usize = 50;

fn jets_in(e: &Expr, out: &mut BTreeSet<String>) {
    e.visit_atoms(&mut |a| {
        if let Atom::Jet(j) = a {
            out.insert(format_jet(j));
        }
    });
}

/// Random point for every symbol of `e`; the lead derivative, when present,
/// takes its value from the solved form.
fn sample_point(
    sampler: &mut Sampler,
    jc: &JetContext,
    e: &Expr,
    pde: Option<&Pde>,
) -> std::result::Result<BTreeMap<String, f64>, ExprError> {
    let mut p = sampler.base_point(jc.context());
    let mut jets = BTreeSet::new();
    jets_in(e, &mut jets);
    let lead = pde.map(|d| format_jet(&d.lead));
    if let Some(d) = pde {
        jets_in(&d.rhs, &mut jets);
    }
    for j in jets {
        if Some(&j) != lead.as_ref() {
            let v = sampler.jet_value();
            p.insert(j, v);
        }
    }
    if let (Some(d), Some(l)) = (pde, lead) {
        let v = eval_numeric(&d.rhs, &p)?;
        p.insert(l, v);
    }
    Ok(p)
}

/// Evaluates `e` at `n` random points and returns the point of largest
/// magnitude, or an error if some symbol cannot be evaluated.
pub fn max_abs_sample(
    jc: &JetContext,
    e: &Expr,
    pde: Option<&Pde>,
    n: usize,
    seed: u64,
) -> std::result::Result<Witness, ExprError> {
    let mut sampler = Sampler::new(seed);
    let mut best = Witness { point: BTreeMap::new(), value: 0.0 };
    for _ in 0..n {
        let p = sample_point(&mut sampler, jc, e, pde)?;
        let v = eval_numeric(e, &p)?;
        if v.abs() > best.value.abs() || best.point.is_empty() {
            best = Witness { point: p, value: v };
        }
    }
    Ok(best)
}

/// Decides whether `vf` generates a point symmetry of `pde`.
pub fn check_symmetry(
    jc: &JetContext,
    pde: &Pde,
    vf: &VectorField,
    seed: u64,
    tol: f64,
) -> Result<SymmetryCheck> {
    let pf = prolong(jc, vf, pde.order())?;
    let raw = apply_prolonged(&pf, &pde.residual)?;
    let reduced = on_solutions_reduce(jc, &raw, pde)?;
    let lead = format_jet(&pde.lead);
    let higher = raw.any_atom(&|a| matches!(a, Atom::Jet(j) if j.order() > pde.lead.order() && leaf_name(a).as_deref() != Some(&lead)));
    let verdict;
    let mut numeric_max = None;
    if reduced.is_zero() {
        verdict = Verdict::Symmetry;
        if !higher {
            numeric_max =
                max_abs_sample(jc, &raw, Some(pde), CORROBORATION_POINTS, seed).ok().map(|w| w.value.abs());
        }
    } else {
        verdict = match max_abs_sample(jc, &reduced, None, WITNESS_POINTS, seed) {
            Ok(w) if w.value.abs() > tol => Verdict::NotSymmetry { witness: w },
            _ => Verdict::Unresolved { residual: reduced.to_string() },
        };
    }
    Ok(SymmetryCheck { field: vf.name.clone(), verdict, reduced, numeric_max })
}

/// Constants-weighted general solution of a determining system.
#[derive(Clone, Debug)]
pub struct GeneralSolution {
    pub constants: Vec<Sym>,
    /// `(ξ¹, …, ξᵖ, η)`.
    pub coefficients: Vec<Expr>,
}

impl GeneralSolution {
    /// The field multiplying the constant `c`, i.e. `∂/∂c` of every coefficient.
    pub fn generator(&self, template: &VectorField, c: &str) -> VectorField {
        let atom = Atom::param(c);
        let coeffs = self.coefficients.iter().map(|e| e.diff(&atom)).collect();
        template.from_coefficients(c, coeffs)
    }

    pub fn generators(&self, template: &VectorField) -> Vec<VectorField> {
        self.constants.iter().map(|c| self.generator(template, c)).collect()
    }

    /// The part of the solution not multiplied by any constant.
    pub fn remainder(&self) -> Vec<Expr> {
        let mut s = Substitution::new();
        for c in &self.constants {
            s.insert(Atom::Param(c.clone()), Expr::zero());
        }
        self.coefficients.iter().map(|e| e.substitute(&s).expect("constant substitution")).collect()
    }
}

/// Outcome of substituting a list of fields into one printed equation.
#[derive(Clone, Debug, Serialize)]
pub struct PrintedEquationCheck {
    pub label: String,
    #[serde(serialize_with = "ser_display")]
    pub equation: Expr,
    pub in_computed_system: bool,
    /// `(field, residual)` for every field that does not satisfy it.
    pub failures: Vec<(String, String)>,
}

impl PrintedEquationCheck {
    pub fn satisfied(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks each printed equation against every field and against the
/// computed system.
pub fn check_printed_equations(
    jc: &JetContext,
    system: &DeterminingSystem,
    printed: &[(String, Expr)],
    fields: &[VectorField],
) -> Result<Vec<PrintedEquationCheck>> {
    let bindings = fields
        .iter()
        .map(|f| system.ansatz.binding(jc, f).map(|s| (f.name.clone(), s)))
        .collect::<Result<Vec<_>>>()?;
    printed
        .iter()
        .map(|(label, eq)| {
            let mut failures = Vec::new();
            for (name, s) in &bindings {
                let r = eq.substitute(s)?;
                if !r.is_zero() {
                    failures.push((name.clone(), r.to_string()));
                }
            }
            Ok(PrintedEquationCheck {
                label: label.clone(),
                equation: eq.clone(),
                in_computed_system: system.contains(jc, eq),
                failures,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{parse, Context};

    fn jc() -> JetContext {
        let mut c = Context::new();
        c.declare_param("a").declare_param("k");
        for v in ["r", "x", "y", "t"] {
            c.declare_var(v);
        }
        c.declare_dep("u", &["r", "x", "y", "t"]);
        c.declare_positive("r").declare_positive("a");
        for f in ["xi1", "xi2", "xi3", "xi4", "eta"] {
            c.declare_func(f, &["r", "x", "y", "t", "u"]);
        }
        JetContext::new(c, 3).unwrap()
    }

    fn telegraph(jc: &JetContext) -> Pde {
        let c = jc.context();
        let lhs = parse("u_tt + k*u_t", c).unwrap();
        let rhs = parse("a^2*(u_rr + u_r/r + u_xx/r^2 + u_yy)", c).unwrap();
        Pde::from_equation("telegraph", &lhs, &rhs, c.jet("u", &["t", "t"])).unwrap()
    }

    fn field(jc: &JetContext, name: &str, parts: [&str; 5]) -> VectorField {
        let c = jc.context();
        let xi = parts[..4].iter().map(|s| parse(s, c).unwrap()).collect();
        VectorField::new(jc, name, xi, parse(parts[4], c).unwrap()).unwrap()
    }

    #[test]
    fn normalization_strips_units() {
        let jc = jc();
        let c = jc.context();
        let e = parse("-2*r^2*xi2_t + 2*a^2*r*xi4_x", c).unwrap();
        assert_eq!(normalize_equation(&e, c.positive()), parse("a^2*xi4_x - r*xi2_t", c).unwrap());
    }

    #[test]
    fn system_contains_simple_equations() {
        let jc = jc();
        let pde = telegraph(&jc);
        let ans = Ansatz::declared(&jc, &["xi1", "xi2", "xi3", "xi4", "eta"]).unwrap();
        let sys = determining_system(&jc, &pde, &ans).unwrap();
        let c = jc.context();
        for s in ["xi2_u", "xi3_y - xi4_t", "eta_uu - 2*xi1_ru", "xi1 + r*xi2_x - r*xi4_t"] {
            assert!(sys.contains(&jc, &parse(s, c).unwrap()), "{s}");
        }
        let v5 = field(&jc, "v5", ["0", "0", "2*a^2*t", "2*y", "-k*y*u"]);
        assert!(sys.evaluate(&jc, &v5).unwrap().iter().all(Expr::is_zero));
    }

    #[test]
    fn verdicts() {
        let jc = jc();
        let pde = telegraph(&jc);
        let v10 =
            field(&jc, "v10", ["2*a^2*t*sin(x)", "2*a^2*t*cos(x)/r", "0", "2*r*sin(x)", "-k*r*u*sin(x)"]);
        let chk = check_symmetry(&jc, &pde, &v10, 1, 1e-9).unwrap();
        assert_eq!(chk.verdict, Verdict::Symmetry);
        assert!(chk.numeric_max.unwrap() < 1e-9);
        let bad = field(&jc, "w", ["0", "0", "2*a^2*t", "2*a*t", "-k*y*u"]);
        let chk = check_symmetry(&jc, &pde, &bad, 1, 1e-9).unwrap();
        assert!(matches!(chk.verdict, Verdict::NotSymmetry { .. }));
    }
}
