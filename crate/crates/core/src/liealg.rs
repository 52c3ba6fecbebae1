//! Brackets, structure constants and the adjoint representation.
//!
//! Matrix conventions:
//!
//! * [`ad_matrix`] acts on column vectors: `A e_j = [v_i, v_j]`, so
//!   `A[k][j] = c_{ij}^k`.
//! * Adjoint matrices are row matrices: `M[j][k]` is the coefficient of
//!   `v_k` in `Ad(exp(ε v_i)) v_j = Σ (−ε)^m/m! ad(v_i)^m v_j`. Hence
//!   `M(ε) = exp(−ε Aᵀ)`, `M(0) = I` and `dM/dε = −M Aᵀ`.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, Vector};
use crate::prolong::VectorField;
use crate::ratfunc::{Poly, RatFunc};
use crate::symexpr::{Atom, Context, Expr, ExprError, Monomial, Rational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LieError {
    #[error("`{field}` is not in the span of the basis")]
    NotInSpan { field: String },
    #[error("basis is not closed: [{i}, {j}] = {residual} is not in the span")]
    NotClosed { i: String, j: String, residual: String },
    #[error("coefficient `{0}` is not a rational function of the parameters")]
    Coefficient(String),
    #[error("basis index {index} out of range for dimension {dim}")]
    Index { index: usize, dim: usize },
    #[error("no closed form for Ad(exp(ε v{0})): ad is not nilpotent and no verified matrix was supplied")]
    ClosedFormUnavailable(usize),
    #[error("cannot evaluate `{0}` numerically")]
    Numeric(String),
    #[error("element: {0}")]
    Element(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

pub type Result<T> = std::result::Result<T, LieError>;

/// Coefficient vector of an element of a Lie algebra with a fixed basis.
pub type AlgebraElement = Vector;

/// `[v, w] = Σ (v(w_c) − w(v_c)) ∂_c`.
pub fn bracket_vf(v: &VectorField, w: &VectorField) -> VectorField {
    let coeffs =
        v.coefficients().iter().zip(w.coefficients()).map(|(vc, wc)| v.apply(&wc) - w.apply(vc)).collect();
    v.from_coefficients(&format!("[{},{}]", v.name, w.name), coeffs)
}

fn is_scalar_atom(a: &Atom) -> bool {
    match a {
        Atom::Param(_) => true,
        Atom::Recip(p) => p.top_atoms().iter().all(|b| matches!(b, Atom::Param(_))),
        _ => false,
    }
}

type Key = (usize, Monomial);

fn split_field(vf: &VectorField) -> Result<BTreeMap<Key, RatFunc>> {
    let mut out = BTreeMap::new();
    for (c, e) in vf.coefficients().iter().enumerate() {
        for (m, coef) in e.collect_by(&|a| !is_scalar_atom(a)) {
            let r = RatFunc::from_expr(&coef).ok_or_else(|| LieError::Coefficient(coef.to_string()))?;
            out.insert((c, m), r);
        }
    }
    Ok(out)
}

/// Precomputed coordinates of a basis of vector fields, for repeated
/// decomposition.
#[derive(Clone, Debug)]
pub struct Decomposer {
    basis: Vec<VectorField>,
    keys: Vec<Key>,
    cols: Vec<Vector>,
}

impl Decomposer {
    pub fn new(basis: &[VectorField]) -> Result<Self> {
        let parts = basis.iter().map(split_field).collect::<Result<Vec<_>>>()?;
        let keys: Vec<Key> =
            parts.iter().flat_map(|p| p.keys().cloned()).collect::<BTreeSet<_>>().into_iter().collect();
        let cols = parts
            .iter()
            .map(|p| keys.iter().map(|k| p.get(k).cloned().unwrap_or_default()).collect())
            .collect();
        Ok(Decomposer { basis: basis.to_vec(), keys, cols })
    }

    pub fn basis(&self) -> &[VectorField] {
        &self.basis
    }

    /// Exact coefficients of `w` in the basis.
    pub fn decompose(&self, w: &VectorField) -> Result<AlgebraElement> {
        let parts = split_field(w)?;
        if parts.keys().any(|k| !self.keys.contains(k)) {
            return Err(LieError::NotInSpan { field: w.to_string() });
        }
        let b: Vector = self.keys.iter().map(|k| parts.get(k).cloned().unwrap_or_default()).collect();
        let (x, _) =
            linalg::solve(&self.cols, &b).ok_or_else(|| LieError::NotInSpan { field: w.to_string() })?;
        Ok(x)
    }
}

pub fn decompose_in_basis(w: &VectorField, basis: &[VectorField]) -> Result<AlgebraElement> {
    Decomposer::new(basis)?.decompose(w)
}

/// Where a table of structure constants came from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Provenance {
    Computed,
    Entered(String),
}

/// `c[i][j]` is the coordinate vector of `[v_i, v_j]`. Tables entered from
/// print are kept exactly as given, even when not antisymmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureConstants {
    pub labels: Vec<String>,
    pub c: Vec<Vec<Vector>>,
    pub provenance: Provenance,
}

impl StructureConstants {
    pub fn new(labels: Vec<String>, c: Vec<Vec<Vector>>, provenance: Provenance) -> Self {
        StructureConstants { labels, c, provenance }
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &Vector {
        &self.c[i][j]
    }

    /// Bilinear extension of the table.
    pub fn bracket(&self, x: &[RatFunc], y: &[RatFunc]) -> Vector {
        let n = self.dim();
        let mut out = linalg::zeros(n);
        for i in 0..n {
            if x[i].is_zero() {
                continue;
            }
            for j in 0..n {
                if y[j].is_zero() {
                    continue;
                }
                let s = &x[i] * &y[j];
                linalg::add_scaled(&mut out, &s, &self.c[i][j]);
            }
        }
        out
    }

    /// Whether any coefficient has a non-constant denominator.
    pub fn uses_rational_functions(&self) -> bool {
        self.c.iter().flatten().flatten().any(|r| !r.is_polynomial())
    }

    /// Pairs `(i, j)`, `i ≤ j`, with `c[i][j] ≠ −c[j][i]`.
    pub fn antisymmetry_failures(&self) -> Vec<(usize, usize)> {
        let n = self.dim();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i..n {
                let sum: Vector = self.c[i][j].iter().zip(&self.c[j][i]).map(|(p, q)| p + q).collect();
                if !linalg::is_zero_vec(&sum) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Jacobi defects `[[x,y],z] + [[y,z],x] + [[z,x],y]` over basis triples
    /// `i < j < k`.
    pub fn jacobi_failures(&self) -> Vec<(usize, usize, usize, Vector)> {
        let n = self.dim();
        let triples: Vec<(usize, usize, usize)> =
            (0..n).flat_map(|i| (i + 1..n).flat_map(move |j| (j + 1..n).map(move |k| (i, j, k)))).collect();
        triples
            .par_iter()
            .filter_map(|&(i, j, k)| {
                let e = |m| linalg::unit(n, m);
                let t1 = self.bracket(&self.c[i][j], &e(k));
                let t2 = self.bracket(&self.c[j][k], &e(i));
                let t3 = self.bracket(&self.c[k][i], &e(j));
                let s: Vector = (0..n).map(|m| &(&t1[m] + &t2[m]) + &t3[m]).collect();
                (!linalg::is_zero_vec(&s)).then_some((i, j, k, s))
            })
            .collect()
    }

    pub fn format(&self, v: &[RatFunc]) -> String {
        format_element(v, &self.labels)
    }

    /// Numeric table at given parameter values.
    pub fn ad_numeric(&self, i: usize, params: &BTreeMap<String, f64>) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                let r = &self.c[i][j][k];
                if !r.is_zero() {
                    m[(k, j)] = r.eval(params).ok_or_else(|| LieError::Numeric(r.to_string()))?;
                }
            }
        }
        Ok(m)
    }
}

/// `2*a^2*v3 - k*v4`, `(2*a^2 - k)*v5`, or `0`.
pub fn format_element(v: &[RatFunc], labels: &[String]) -> String {
    let mut out = String::new();
    for (c, l) in v.iter().zip(labels) {
        if c.is_zero() {
            continue;
        }
        let e = c.to_expr();
        let neg = e.is_single_term()
            && e.leading_coefficient().is_some_and(|q| q < &Rational::from_integer(0.into()));
        let body = if neg { -&e } else { e.clone() };
        let coef = if body.is_one() {
            String::new()
        } else if body.is_single_term() {
            format!("{body}*")
        } else {
            format!("({body})*")
        };
        match (out.is_empty(), neg) {
            (true, true) => out.push('-'),
            (true, false) => {}
            (false, true) => out.push_str(" - "),
            (false, false) => out.push_str(" + "),
        }
        out.push_str(&coef);
        out.push_str(l);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// Context for parsing elements: basis labels and any undeclared
/// identifiers become parameters.
pub fn element_context(
    ctx: &Context,
    labels: &[String],
    idents: impl IntoIterator<Item = String>,
) -> Context {
    let mut c = ctx.clone();
    for l in labels {
        c.declare_param(l);
    }
    for name in idents {
        if !c.is_declared(&name) && !matches!(name.as_str(), "sin" | "cos" | "sinh" | "cosh" | "exp" | "sqrt")
        {
            c.declare_param(&name);
        }
    }
    c
}

/// Coefficients of an expression that is linear in the basis labels.
pub fn element_from_expr(e: &Expr, labels: &[String]) -> Result<AlgebraElement> {
    let mut rest = e.clone();
    let mut out = Vec::with_capacity(labels.len());
    for l in labels {
        let atom = Atom::param(l);
        let coef = e.diff(&atom);
        if labels.iter().any(|m| coef.contains_atom(&Atom::param(m))) {
            return Err(LieError::Element(format!("`{e}` is not linear in the basis")));
        }
        rest = rest - &coef * Expr::atom(atom);
        out.push(RatFunc::from_expr(&coef).ok_or_else(|| LieError::Coefficient(coef.to_string()))?);
    }
    if !rest.is_zero() {
        return Err(LieError::Element(format!("term `{rest}` has no basis vector")));
    }
    Ok(out)
}

/// Parses `a1*v1 + (2*a^2 - k)*v5 + ...` as a coefficient vector over the
/// basis labels. Identifiers not declared in `ctx` are free parameters.
pub fn parse_element(text: &str, ctx: &Context, labels: &[String]) -> Result<AlgebraElement> {
    let c = element_context(ctx, labels, free_identifiers(text));
    element_from_expr(&crate::symexpr::parse(text, &c)?, labels)
}

fn free_identifiers(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars().chain(std::iter::once(' ')) {
        if ch.is_alphanumeric() || ch == '_' {
            cur.push(ch);
        } else if !cur.is_empty() {
            if cur.chars().next().is_some_and(char::is_alphabetic) {
                out.push(std::mem::take(&mut cur));
            } else {
                cur.clear();
            }
        }
    }
    out
}

/// Brackets every ordered pair of basis fields and decomposes the result.
pub fn commutator_table(basis: &[VectorField]) -> Result<StructureConstants> {
    let n = basis.len();
    let dec = Decomposer::new(basis)?;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let entries: Vec<Vector> = pairs
        .par_iter()
        .map(|&(i, j)| {
            if i == j {
                return Ok(linalg::zeros(n));
            }
            let b = bracket_vf(&basis[i], &basis[j]);
            dec.decompose(&b).map_err(|_| LieError::NotClosed {
                i: basis[i].name.clone(),
                j: basis[j].name.clone(),
                residual: b.to_string(),
            })
        })
        .collect::<Result<_>>()?;
    let mut it = entries.into_iter();
    let c = (0..n).map(|_| (0..n).map(|_| it.next().expect("n*n entries")).collect()).collect();
    let labels = basis.iter().map(|v| v.name.clone()).collect();
    Ok(StructureConstants::new(labels, c, Provenance::Computed))
}

/// One cell where two tables disagree.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntryDiff {
    pub i: usize,
    pub j: usize,
    pub left: String,
    pub right: String,
}

/// Cells `(i, j)` where the tables differ, in row-major order.
pub fn diff_tables(left: &StructureConstants, right: &StructureConstants) -> Vec<EntryDiff> {
    let n = left.dim();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if left.c[i][j] != right.c[i][j] {
                out.push(EntryDiff {
                    i,
                    j,
                    left: left.format(&left.c[i][j]),
                    right: right.format(&right.c[i][j]),
                });
            }
        }
    }
    out
}

/// Matrix of `ad(v_i)` in column convention.
pub fn ad_matrix(sc: &StructureConstants, i: usize) -> Result<Vec<Vector>> {
    let n = sc.dim();
    if i >= n {
        return Err(LieError::Index { index: i, dim: n });
    }
    Ok((0..n).map(|k| (0..n).map(|j| sc.c[i][j][k].clone()).collect()).collect())
}

/// Smallest `m ≤ n` with `ad(v_i)^m = 0`.
pub fn nilpotency_index(sc: &StructureConstants, i: usize) -> Result<Option<usize>> {
    let a = ad_matrix(sc, i)?;
    let mut p = a.clone();
    for m in 1..=sc.dim() {
        if p.iter().all(|r| linalg::is_zero_vec(r)) {
            return Ok(Some(m));
        }
        p = linalg::matmul(&p, &a);
    }
    Ok(None)
}

fn ratfunc_matrix_expr(m: &[Vector]) -> Vec<Vec<Expr>> {
    m.iter().map(|r| r.iter().map(RatFunc::to_expr).collect()).collect()
}

/// Truncated Lie series `Σ_{m ≤ order} (−ε)^m/m! (Aᵀ)^m` in row convention.
pub fn adjoint_series(sc: &StructureConstants, i: usize, order: usize, eps: &Expr) -> Result<Vec<Vec<Expr>>> {
    let n = sc.dim();
    let at = linalg::transpose(&ad_matrix(sc, i)?);
    let mut out: Vec<Vec<Expr>> =
        (0..n).map(|j| (0..n).map(|k| if j == k { Expr::one() } else { Expr::zero() }).collect()).collect();
    let mut p = at.clone();
    let mut fact = Rational::from_integer(1.into());
    for m in 1..=order {
        if p.iter().all(|r| linalg::is_zero_vec(r)) {
            break;
        }
        fact *= Rational::from_integer((m as i64).into());
        let w = (-eps).pow(m as i64).scale(&fact.recip());
        let pe = ratfunc_matrix_expr(&p);
        for j in 0..n {
            for k in 0..n {
                if !pe[j][k].is_zero() {
                    out[j][k] = &out[j][k] + &(&pe[j][k] * &w);
                }
            }
        }
        p = linalg::matmul(&p, &at);
    }
    Ok(out)
}

/// One failing entry of a closed-form check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntryFailure {
    pub row: usize,
    pub col: usize,
    pub residual: String,
}

/// Result of checking a candidate `M(ε)` against `M(0) = I`,
/// `dM/dε = −M Aᵀ`. Indices are zero-based.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedFormCheck {
    pub generator: usize,
    pub initial: Vec<EntryFailure>,
    pub derivative: Vec<EntryFailure>,
}

impl ClosedFormCheck {
    pub fn passed(&self) -> bool {
        self.initial.is_empty() && self.derivative.is_empty()
    }

    /// Row indices (zero-based) carrying any failure.
    pub fn failing_rows(&self) -> BTreeSet<usize> {
        self.initial.iter().chain(&self.derivative).map(|f| f.row).collect()
    }
}

pub fn adjoint_verify_closed(
    sc: &StructureConstants,
    i: usize,
    m: &[Vec<Expr>],
    eps: &str,
) -> Result<ClosedFormCheck> {
    let n = sc.dim();
    let a = ratfunc_matrix_expr(&ad_matrix(sc, i)?);
    let e = Atom::param(eps);
    let mut initial = Vec::new();
    let mut derivative = Vec::new();
    for j in 0..n {
        for k in 0..n {
            let at0 = m[j][k].subs(&e, &Expr::zero());
            let want = if j == k { Expr::one() } else { Expr::zero() };
            let d0 = at0 - want;
            if !d0.is_zero() {
                initial.push(EntryFailure { row: j, col: k, residual: d0.to_string() });
            }
            // (M Aᵀ)[j][k] = Σ_l M[j][l] A[k][l]
            let mut r = m[j][k].diff(&e);
            for l in 0..n {
                if !a[k][l].is_zero() && !m[j][l].is_zero() {
                    r = r + &m[j][l] * &a[k][l];
                }
            }
            if !r.is_zero() {
                derivative.push(EntryFailure { row: j, col: k, residual: r.to_string() });
            }
        }
    }
    Ok(ClosedFormCheck { generator: i, initial, derivative })
}

/// Exact image of `x` under `Ad(exp(ε v_i))`: `y_k = Σ_j x_j M[j][k]`.
/// Uses the terminating series when `ad(v_i)` is nilpotent, otherwise the
/// supplied verified closed form (already evaluated at `ε`).
pub fn adjoint_apply(
    sc: &StructureConstants,
    x: &[Expr],
    i: usize,
    eps: &Expr,
    closed: Option<&[Vec<Expr>]>,
) -> Result<Vec<Expr>> {
    let n = sc.dim();
    let m = match (nilpotency_index(sc, i)?, closed) {
        (Some(order), _) => adjoint_series(sc, i, order, eps)?,
        (None, Some(c)) => c.to_vec(),
        (None, None) => return Err(LieError::ClosedFormUnavailable(i + 1)),
    };
    Ok((0..n).map(|k| (0..n).filter(|&j| !x[j].is_zero()).map(|j| &x[j] * &m[j][k]).sum()).collect())
}

/// Numeric image `exp(−ε A) x` at the given parameter values.
pub fn adjoint_apply_numeric(
    sc: &StructureConstants,
    x: &[f64],
    i: usize,
    eps: f64,
    params: &BTreeMap<String, f64>,
) -> Result<Vec<f64>> {
    let n = sc.dim();
    if i >= n {
        return Err(LieError::Index { index: i, dim: n });
    }
    let a = sc.ad_numeric(i, params)?;
    let m = (a * -eps).exp();
    let y = m * nalgebra::DVector::from_column_slice(x);
    Ok(y.iter().copied().collect())
}

/// Numeric coordinates of a symbolic element.
pub fn element_numeric(x: &[RatFunc], params: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
    x.iter().map(|r| r.eval(params).ok_or_else(|| LieError::Numeric(r.to_string()))).collect()
}

/// Factors that must not vanish for the table's coefficients to be defined.
pub fn denominators(sc: &StructureConstants) -> Vec<Poly> {
    let mut out = Vec::new();
    for r in sc.c.iter().flatten().flatten() {
        if !r.is_polynomial() {
            linalg::push_assumption(&mut out, &RatFunc::from_poly(r.den().clone()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetspace::JetContext;
    use crate::symexpr::parse;

    fn jc() -> JetContext {
        let mut c = Context::new();
        c.declare_param("a").declare_param("k");
        for v in ["r", "x", "y", "t"] {
            c.declare_var(v);
        }
        c.declare_dep("u", &["r", "x", "y", "t"]);
        JetContext::new(c, 3).unwrap()
    }

    fn field(jc: &JetContext, name: &str, parts: [&str; 5]) -> VectorField {
        let c = jc.context();
        let xi = parts[..4].iter().map(|s| parse(s, c).unwrap()).collect();
        VectorField::new(jc, name, xi, parse(parts[4], c).unwrap()).unwrap()
    }

    fn small_basis(jc: &JetContext) -> Vec<VectorField> {
        vec![
            field(jc, "v1", ["0", "1", "0", "0", "0"]),
            field(jc, "v2", ["sin(x)", "cos(x)/r", "0", "0", "0"]),
            field(jc, "v3", ["-cos(x)", "sin(x)/r", "0", "0", "0"]),
        ]
    }

    #[test]
    fn bracket_and_decompose() {
        let jc = jc();
        let b = small_basis(&jc);
        let br = bracket_vf(&b[0], &b[1]);
        let coords = decompose_in_basis(&br, &b).unwrap();
        assert_eq!(coords, vec![RatFunc::zero(), RatFunc::zero(), RatFunc::int(-1)]);
        let dr = field(&jc, "dr", ["1", "0", "0", "0", "0"]);
        assert!(matches!(decompose_in_basis(&dr, &b), Err(LieError::NotInSpan { .. })));
    }

    #[test]
    fn rotation_adjoint() {
        let jc = jc();
        let sc = commutator_table(&small_basis(&jc)).unwrap();
        assert!(sc.antisymmetry_failures().is_empty());
        assert!(sc.jacobi_failures().is_empty());
        let s = Expr::param("s");
        let closed: Vec<Vec<Expr>> = vec![
            vec![Expr::one(), Expr::zero(), Expr::zero()],
            vec![Expr::zero(), Expr::cos(&s), Expr::sin(&s)],
            vec![Expr::zero(), -Expr::sin(&s), Expr::cos(&s)],
        ];
        assert!(adjoint_verify_closed(&sc, 0, &closed, "s").unwrap().passed());
        let y =
            adjoint_apply_numeric(&sc, &[0.0, 1.0, 0.0], 0, std::f64::consts::FRAC_PI_2, &BTreeMap::new())
                .unwrap();
        assert!((y[2] - 1.0).abs() < 1e-12 && y[1].abs() < 1e-12);
    }

    #[test]
    fn elements_parse_and_print() {
        let jc = jc();
        let labels: Vec<String> = (1..=5).map(|i| format!("v{i}")).collect();
        let x = parse_element("2*a^2*v3 - k*v4 + (2*a^2 - k)*v5 + a1*v1", jc.context(), &labels).unwrap();
        assert_eq!(format_element(&x, &labels), "a1*v1 + 2*a^2*v3 - k*v4 + (2*a^2 - k)*v5");
        assert!(parse_element("v1*v2", jc.context(), &labels).is_err());
        assert!(parse_element("v1 + 1", jc.context(), &labels).is_err());
    }
}
