//! Numeric validation of group actions and transformed solutions.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::jetspace::{JetContext, Pde};
use crate::prolong::VectorField;
use crate::sample::Sampler;
use crate::symexpr::{eval_numeric, Atom, CompiledExpr, Expr, ExprError, JetVar, Substitution, Sym};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumError {
    #[error("trajectory left the domain: {var} = {value} at s = {at}")]
    DomainExit { var: String, value: f64, at: f64 },
    #[error("step size underflow at s = {0}")]
    StepUnderflow(f64),
    #[error("map is not the identity at s = 0: component {0}")]
    NotIdentity(String),
    #[error("candidate solution depends on derivatives")]
    JetInCandidate,
    #[error("argument map is not invertible for eps = {0}")]
    NotInvertible(f64),
    #[error("shape: expected {expected} components, got {got}")]
    Shape { expected: usize, got: usize },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

pub type Result<T> = std::result::Result<T, NumError>;

/// Closed-form action `(x, u) ↦ (x̃, ũ)` depending on a group parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct PointMap {
    pub name: String,
    /// Coordinate names, independent variables then the dependent one.
    pub coords: Vec<Sym>,
    pub param: Sym,
    pub components: Vec<Expr>,
}

fn coord_atom(vf_vars: &[Sym], dep: &Sym, i: usize) -> Atom {
    if i < vf_vars.len() {
        Atom::Var(vf_vars[i].clone())
    } else {
        Atom::Jet(JetVar { dep: dep.clone(), index: Vec::new() })
    }
}

impl PointMap {
    pub fn new(jc: &JetContext, name: &str, param: &str, components: Vec<Expr>) -> Result<Self> {
        let ctx = jc.context();
        let mut coords: Vec<Sym> = ctx.vars().to_vec();
        let dep = ctx.deps().first().map(|d| d.name.clone()).unwrap_or_else(|| crate::symexpr::sym("u"));
        coords.push(dep.clone());
        if components.len() != coords.len() {
            return Err(NumError::Shape { expected: coords.len(), got: components.len() });
        }
        let map = PointMap { name: name.to_string(), coords, param: crate::symexpr::sym(param), components };
        let p = Atom::Param(map.param.clone());
        let n = map.coords.len();
        for (i, c) in map.components.iter().enumerate() {
            let at0 = c.subs(&p, &Expr::zero());
            if at0 != Expr::atom(coord_atom(&map.coords[..n - 1], &dep, i)) {
                return Err(NumError::NotIdentity(map.coords[i].to_string()));
            }
        }
        Ok(map)
    }

    /// `d/ds` of every component at `s = 0`.
    pub fn tangent(&self) -> Vec<Expr> {
        let p = Atom::Param(self.param.clone());
        self.components.iter().map(|c| c.diff(&p).subs(&p, &Expr::zero())).collect()
    }
}

/// Compiled right-hand side `q' = v(q)` with parameter values fixed.
struct Rhs {
    fields: Vec<CompiledExpr>,
    params: Vec<f64>,
    n: usize,
}

impl Rhs {
    fn new(vf: &VectorField, params: &BTreeMap<String, f64>) -> Result<Self> {
        let mut slots: Vec<String> = vf.vars.iter().map(|v| v.to_string()).collect();
        slots.push(vf.dep.to_string());
        let n = slots.len();
        let mut values = Vec::new();
        for (k, v) in params {
            slots.push(k.clone());
            values.push(*v);
        }
        let fields = vf
            .coefficients()
            .iter()
            .map(|c| CompiledExpr::new(c, &slots))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Rhs { fields, params: values, n })
    }

    fn eval(&self, q: &[f64], buf: &mut Vec<f64>) -> Vec<f64> {
        buf.clear();
        buf.extend_from_slice(q);
        buf.extend_from_slice(&self.params);
        self.fields.iter().map(|f| f.eval(buf)).collect()
    }
}

// Dormand–Prince 5(4) tableau; the field is autonomous so the nodes are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Adaptive Dormand–Prince integration of `dq/ds = v(q)` from `s = 0` to
/// `s`, with mixed absolute/relative local error `≤ tol`. Coordinates
/// declared positive must stay positive.
pub fn flow_integrate(
    jc: &JetContext,
    vf: &VectorField,
    p: &[f64],
    s: f64,
    tol: f64,
    params: &BTreeMap<String, f64>,
) -> Result<Vec<f64>> {
    let rhs = Rhs::new(vf, params)?;
    if p.len() != rhs.n {
        return Err(NumError::Shape { expected: rhs.n, got: p.len() });
    }
    let positive: Vec<usize> = vf
        .vars
        .iter()
        .enumerate()
        .filter(|(_, v)| jc.context().positive().contains(*v))
        .map(|(i, _)| i)
        .collect();
    let mut q = p.to_vec();
    if s == 0.0 {
        return Ok(q);
    }
    let dir = s.signum();
    let mut t = 0.0;
    let mut h = dir * (s.abs() * 0.1).min(0.05);
    let mut buf = Vec::new();
    let n = q.len();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    for _ in 0..1_000_000 {
        if (s - t) * dir <= 0.0 {
            return Ok(q);
        }
        if (t + h - s) * dir > 0.0 {
            h = s - t;
        }
        for stage in 0..7 {
            let mut y = q.clone();
            for (j, kj) in k.iter().enumerate().take(stage) {
                let a = A[stage][j];
                if a != 0.0 {
                    for m in 0..n {
                        y[m] += h * a * kj[m];
                    }
                }
            }
            k[stage] = rhs.eval(&y, &mut buf);
        }
        let mut y5 = q.clone();
        let mut err: f64 = 0.0;
        for m in 0..n {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for st in 0..7 {
                d5 += B5[st] * k[st][m];
                d4 += B4[st] * k[st][m];
            }
            y5[m] += h * d5;
            let sc = 1.0 + q[m].abs().max(y5[m].abs());
            err = err.max((h * (d5 - d4)).abs() / sc);
        }
        if !err.is_finite() {
            h *= 0.25;
        } else if err <= tol {
            t += h;
            q = y5;
            for &i in &positive {
                if q[i] <= 0.0 {
                    return Err(NumError::DomainExit { var: vf.vars[i].to_string(), value: q[i], at: t });
                }
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            h *= (0.9 * (tol / err).powf(0.2)).clamp(0.1, 0.9);
            if h.abs() < 1e-14 * (1.0 + t.abs()) {
                return Err(NumError::StepUnderflow(t));
            }
        }
    }
    Err(NumError::StepUnderflow(t))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict")]
pub enum FlowVerdict {
    /// The map agrees with the integrated flow.
    ExactFlow,
    /// First-order agreement only.
    TangentOnly,
    /// The tangent differs from the field; `scale` is set when the tangent
    /// is a uniform multiple of the field.
    Mismatch { scale: Option<String> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowCheck {
    pub map: String,
    pub field: String,
    #[serde(flatten)]
    pub verdict: FlowVerdict,
    pub tangent: Vec<String>,
    /// Largest deviation from the flow of the field (or of the rescaled
    /// field when the tangent is a rescaling).
    pub max_deviation: f64,
    /// For a rescaled tangent: whether the map is the exact flow of the
    /// rescaled field.
    pub rescaled_exact: Option<bool>,
    pub samples: usize,
}

/// `λ` with `t = λ v` componentwise, when `λ` involves parameters only.
pub fn uniform_scale(t: &[Expr], v: &[Expr]) -> Option<Expr> {
    let (tc, vc) = t.iter().zip(v).find(|(_, vc)| !vc.is_zero())?;
    let lambda = tc * &vc.inv().ok()?;
    if lambda.is_zero()
        || lambda.any_atom(&|a| !matches!(a, Atom::Param(_) | Atom::Recip(_) | Atom::Root(..)))
    {
        return None;
    }
    if lambda.free_symbols().iter().any(|a| !matches!(a, Atom::Param(_))) {
        return None;
    }
    t.iter().zip(v).all(|(a, b)| *a == &lambda * b).then_some(lambda)
}

fn eval_map(map: &PointMap, p: &[f64], s: f64, params: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
    let mut env = params.clone();
    for (c, v) in map.coords.iter().zip(p) {
        env.insert(c.to_string(), *v);
    }
    env.insert(map.param.to_string(), s);
    map.components.iter().map(|c| Ok(eval_numeric(c, &env)?)).collect()
}

/// Largest componentwise relative deviation between the map and the flow
/// at random points; points whose trajectory leaves the domain are redrawn.
fn flow_deviation(
    jc: &JetContext,
    vf: &VectorField,
    map: &PointMap,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<(f64, usize)> {
    let mut sampler = Sampler::new(seed);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    let mut attempts = 0;
    while done < samples && attempts < samples * 20 {
        attempts += 1;
        let base = sampler.base_point(jc.context());
        let params: BTreeMap<String, f64> =
            jc.context().params().iter().map(|p| (p.to_string(), base[&**p])).collect();
        let mut p: Vec<f64> = vf.vars.iter().map(|v| base[&**v]).collect();
        p.push(sampler.uniform(0.5, 2.0));
        let s = sampler.uniform(-0.5, 0.5);
        let flow = match flow_integrate(jc, vf, &p, s, tol, &params) {
            Ok(f) => f,
            Err(NumError::DomainExit { .. }) => continue,
            Err(e) => return Err(e),
        };
        let image = match eval_map(map, &p, s, &params) {
            Ok(m) => m,
            Err(NumError::Expr(ExprError::DivisionByZero)) => continue,
            Err(e) => return Err(e),
        };
        for (a, b) in flow.iter().zip(&image) {
            worst = worst.max((a - b).abs() / (1.0 + a.abs()));
        }
        done += 1;
    }
    Ok((worst, done))
}

/// Classifies a printed map against the flow of `vf`.
pub fn flow_verify(
    jc: &JetContext,
    vf: &VectorField,
    map: &PointMap,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<FlowCheck> {
    let tangent = map.tangent();
    let coeffs = vf.coefficients();
    let threshold = (1e3 * tol).max(1e-9);
    let base = FlowCheck {
        map: map.name.clone(),
        field: vf.name.clone(),
        verdict: FlowVerdict::TangentOnly,
        tangent: tangent.iter().map(|e| e.to_string()).collect(),
        max_deviation: 0.0,
        rescaled_exact: None,
        samples: 0,
    };
    if tangent == coeffs {
        let (dev, n) = flow_deviation(jc, vf, map, samples, tol, seed)?;
        let verdict = if dev <= threshold { FlowVerdict::ExactFlow } else { FlowVerdict::TangentOnly };
        return Ok(FlowCheck { verdict, max_deviation: dev, samples: n, ..base });
    }
    match uniform_scale(&tangent, &coeffs) {
        Some(lambda) => {
            let scaled = vf.scale(&lambda);
            let (dev, n) = flow_deviation(jc, &scaled, map, samples, tol, seed)?;
            Ok(FlowCheck {
                verdict: FlowVerdict::Mismatch { scale: Some(lambda.to_string()) },
                max_deviation: dev,
                rescaled_exact: Some(dev <= threshold),
                samples: n,
                ..base
            })
        }
        None => Ok(FlowCheck { verdict: FlowVerdict::Mismatch { scale: None }, ..base }),
    }
}

/// Recipe `u ↦ prefactor · U(args)` for a transformed solution.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformRecipe {
    pub name: String,
    pub prefactor: Expr,
    /// New arguments for each independent variable, in variable order.
    pub args: Vec<Expr>,
    pub param: Sym,
}

fn check_candidate(e: &Expr) -> Result<()> {
    if e.any_atom(&|a| matches!(a, Atom::Jet(_))) {
        return Err(NumError::JetInCandidate);
    }
    Ok(())
}

/// Builds `prefactor · U(args)` with `eps` substituted for the recipe's
/// parameter. A numeric `eps` must satisfy `|eps| ≤ 0.5`.
pub fn transform_solution(
    jc: &JetContext,
    recipe: &TransformRecipe,
    seed: &Expr,
    eps: &Expr,
) -> Result<Expr> {
    check_candidate(seed)?;
    if let Some(q) = eps.as_rational() {
        let v = crate::symexpr::rational_to_f64(&q);
        if v.abs() > 0.5 {
            return Err(NumError::NotInvertible(v));
        }
    }
    let vars = jc.context().vars();
    if recipe.args.len() != vars.len() {
        return Err(NumError::Shape { expected: vars.len(), got: recipe.args.len() });
    }
    let mut s = Substitution::new();
    for (v, a) in vars.iter().zip(&recipe.args) {
        s.insert(Atom::Var(v.clone()), a.clone());
    }
    let u = seed.substitute(&s)?;
    let out = &recipe.prefactor * &u;
    Ok(out.subs(&Atom::Param(recipe.param.clone()), eps))
}

/// `Δ` with every jet variable replaced by the matching derivative of `u`.
pub fn substitute_solution(pde: &Pde, u: &Expr) -> Result<Expr> {
    check_candidate(u)?;
    let mut s = Substitution::new();
    let mut jets = Vec::new();
    pde.residual.visit_atoms(&mut |a| {
        if let Atom::Jet(j) = a {
            jets.push(j.clone());
        }
    });
    for j in jets {
        let mut d = u.clone();
        for v in &j.index {
            d = d.diff(&Atom::Var(v.clone()));
        }
        s.insert(Atom::Jet(j), d);
    }
    Ok(pde.residual.substitute(&s)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualCheck {
    pub pass: bool,
    /// The residual normalizes to zero symbolically.
    pub exact_zero: bool,
    pub max_residual: f64,
    pub max_lead_term: f64,
    pub points: usize,
    /// Point of largest residual.
    pub worst_point: BTreeMap<String, f64>,
}

/// Evaluates `Δ[u]` at random box points; passes iff
/// `max |Δ| ≤ tol · (1 + max |lead term|)`.
pub fn residual_sample(
    jc: &JetContext,
    pde: &Pde,
    u: &Expr,
    points: usize,
    tol: f64,
    seed: u64,
) -> Result<ResidualCheck> {
    let res = substitute_solution(pde, u)?;
    if res.is_zero() {
        return Ok(ResidualCheck {
            pass: true,
            exact_zero: true,
            max_residual: 0.0,
            max_lead_term: 0.0,
            points: 0,
            worst_point: BTreeMap::new(),
        });
    }
    let mut lead = u.clone();
    for v in &pde.lead.index {
        lead = lead.diff(&Atom::Var(v.clone()));
    }
    let mut slots: Vec<String> = Vec::new();
    let ctx = jc.context();
    slots.extend(ctx.params().iter().map(|p| p.to_string()));
    slots.extend(ctx.vars().iter().map(|v| v.to_string()));
    let mut extra: Vec<String> = Vec::new();
    for e in [&res, &lead] {
        e.visit_atoms(&mut |a| {
            if let Atom::Param(p) = a {
                if !slots.iter().chain(&extra).any(|s| **s == **p) {
                    extra.push(p.to_string());
                }
            }
        });
    }
    slots.extend(extra.iter().cloned());
    let cr = CompiledExpr::new(&res, &slots)?;
    let cl = CompiledExpr::new(&lead, &slots)?;
    let mut sampler = Sampler::new(seed);
    let mut worst = 0.0f64;
    let mut worst_point = BTreeMap::new();
    let mut lead_max = 0.0f64;
    for _ in 0..points {
        let mut p = sampler.base_point(ctx);
        for name in &extra {
            let v = sampler.param_value(name);
            p.insert(name.clone(), v);
        }
        let vals: Vec<f64> = slots.iter().map(|s| p[s]).collect();
        let r = cr.eval(&vals);
        let l = cl.eval(&vals);
        if !r.is_finite() || !l.is_finite() {
            return Err(ExprError::DivisionByZero.into());
        }
        lead_max = lead_max.max(l.abs());
        if r.abs() >= worst {
            worst = r.abs();
            worst_point = p;
        }
    }
    Ok(ResidualCheck {
        pass: worst <= tol * (1.0 + lead_max),
        exact_zero: false,
        max_residual: worst,
        max_lead_term: lead_max,
        points,
        worst_point,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{parse, Context};

    fn jc() -> JetContext {
        let mut c = Context::new();
        c.declare_param("a").declare_param("k").declare_param("s").declare_param("eps");
        for v in ["r", "x", "y", "t"] {
            c.declare_var(v);
        }
        c.declare_dep("u", &["r", "x", "y", "t"]);
        c.declare_positive("r");
        JetContext::new(c, 3).unwrap()
    }

    fn field(jc: &JetContext, name: &str, parts: [&str; 5]) -> VectorField {
        let c = jc.context();
        let xi = parts[..4].iter().map(|s| parse(s, c).unwrap()).collect();
        VectorField::new(jc, name, xi, parse(parts[4], c).unwrap()).unwrap()
    }

    fn map(jc: &JetContext, parts: [&str; 5]) -> PointMap {
        let c = jc.context();
        PointMap::new(jc, "g", "s", parts.iter().map(|s| parse(s, c).unwrap()).collect()).unwrap()
    }

    fn telegraph(jc: &JetContext) -> Pde {
        let c = jc.context();
        let lhs = parse("u_tt + k*u_t", c).unwrap();
        let rhs = parse("a^2*(u_rr + u_r/r + u_xx/r^2 + u_yy)", c).unwrap();
        Pde::from_equation("telegraph", &lhs, &rhs, c.jet("u", &["t", "t"])).unwrap()
    }

    #[test]
    fn integrator_matches_exact_flows() {
        let jc = jc();
        let v4 = field(&jc, "v4", ["0", "0", "0", "0", "u"]);
        let q = flow_integrate(&jc, &v4, &[1.0, 0.0, 0.0, 0.0, 1.0], 0.4, 1e-10, &BTreeMap::new()).unwrap();
        assert!((q[4] - 0.4f64.exp()).abs() < 1e-9);
        let g4 = map(&jc, ["r", "x", "y", "t", "u*exp(s)"]);
        assert_eq!(flow_verify(&jc, &v4, &g4, 20, 1e-10, 3).unwrap().verdict, FlowVerdict::ExactFlow);
    }

    #[test]
    fn truncated_maps() {
        let jc = jc();
        let v6 = field(&jc, "v6", ["sin(x)", "cos(x)/r", "0", "0", "0"]);
        let g6 = map(&jc, ["s*sin(x) + r", "s*cos(x)/r + x", "y", "t", "u"]);
        assert_eq!(flow_verify(&jc, &v6, &g6, 20, 1e-10, 3).unwrap().verdict, FlowVerdict::TangentOnly);
        let v5 = field(&jc, "v5", ["0", "0", "2*a^2*t", "2*y", "-k*y*u"]);
        let g5 = map(&jc, ["r", "x", "y + s*t", "s*y/a^2 + t", "-s*k*y*u/(2*a^2) + u"]);
        let chk = flow_verify(&jc, &v5, &g5, 20, 1e-10, 3).unwrap();
        assert_eq!(chk.verdict, FlowVerdict::Mismatch { scale: Some("1/2*a^(-2)".into()) });
    }

    #[test]
    fn seed_solutions() {
        let jc = jc();
        let pde = telegraph(&jc);
        let c = jc.context();
        for seed in ["1", "exp(-k*t)"] {
            let chk = residual_sample(&jc, &pde, &parse(seed, c).unwrap(), 10, 1e-8, 1).unwrap();
            assert!(chk.exact_zero);
        }
        let recipe = TransformRecipe {
            name: "u3".into(),
            prefactor: Expr::one(),
            args: ["r", "x", "y", "t + eps"].iter().map(|s| parse(s, c).unwrap()).collect(),
            param: crate::symexpr::sym("eps"),
        };
        let u =
            transform_solution(&jc, &recipe, &parse("exp(-k*t)", c).unwrap(), &Expr::param("eps")).unwrap();
        assert_eq!(u, parse("exp(-k*eps - k*t)", c).unwrap());
        assert!(residual_sample(&jc, &pde, &u, 10, 1e-8, 1).unwrap().pass);
    }
}
