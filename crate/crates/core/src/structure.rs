//! Structural analysis of a Lie algebra given by structure constants.
//!
//! Subspaces are stored as reduced echelon bases over the parameter field.
//! Elimination pivots on any nonzero rational function and records it in
//! the subspace's assumption list, so every dimension reported here holds
//! for generic parameter values away from the listed polynomials.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::liealg::{Provenance, StructureConstants};
use crate::linalg::{self, Vector};
use crate::ratfunc::{Poly, RatFunc};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StructureError {
    #[error("subspace is not an ideal: [{generator}, {element}] = {bracket}")]
    NotAnIdeal { generator: String, element: String, bracket: String },
}

pub type Result<T> = std::result::Result<T, StructureError>;

#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    pub n: usize,
    /// The spanning set as supplied.
    pub span: Vec<Vector>,
    /// Reduced echelon basis.
    pub basis: Vec<Vector>,
    pub pivots: Vec<usize>,
    pub assumptions: Vec<Poly>,
}

impl Subspace {
    pub fn from_span(span: Vec<Vector>, n: usize) -> Self {
        let e = linalg::rref(&span, n);
        Subspace { n, span, basis: e.rows, pivots: e.pivots, assumptions: e.assumptions }
    }

    pub fn whole(n: usize) -> Self {
        Subspace::from_span((0..n).map(|i| linalg::unit(n, i)).collect(), n)
    }

    pub fn zero(n: usize) -> Self {
        Subspace::from_span(Vec::new(), n)
    }

    /// Span of the listed basis vectors (zero-based indices).
    pub fn of_units(indices: &[usize], n: usize) -> Self {
        Subspace::from_span(indices.iter().map(|&i| linalg::unit(n, i)).collect(), n)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn contains(&self, v: &[RatFunc]) -> bool {
        if linalg::is_zero_vec(v) {
            return true;
        }
        linalg::solve(&self.basis, v).is_some()
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        other.basis.iter().all(|v| self.contains(v))
    }

    /// Same subspace (identical reduced echelon bases).
    pub fn same_as(&self, other: &Subspace) -> bool {
        self.basis == other.basis
    }

    fn merged_assumptions(&self, extra: &[Poly]) -> Vec<Poly> {
        let mut out = self.assumptions.clone();
        for p in extra {
            if !out.contains(p) {
                out.push(p.clone());
            }
        }
        out
    }
}

/// `[A, B]` as a subspace.
pub fn bracket_subspaces(sc: &StructureConstants, a: &Subspace, b: &Subspace) -> Subspace {
    let prods: Vec<Vector> = a
        .basis
        .par_iter()
        .flat_map_iter(|x| b.basis.iter().map(move |y| sc.bracket(x, y)))
        .filter(|v| !linalg::is_zero_vec(v))
        .collect();
    let mut s = Subspace::from_span(prods, sc.dim());
    s.assumptions = s.merged_assumptions(&a.assumptions);
    s.assumptions = s.merged_assumptions(&b.assumptions);
    s
}

/// `h ⊇ [h,h] ⊇ …` until the dimension stops dropping.
pub fn derived_series_of(sc: &StructureConstants, h: &Subspace) -> Vec<Subspace> {
    let mut out = vec![h.clone()];
    loop {
        let last = out.last().expect("nonempty");
        if last.dim() == 0 {
            break;
        }
        let next = bracket_subspaces(sc, last, last);
        let done = next.dim() == last.dim();
        out.push(next);
        if done {
            break;
        }
    }
    out
}

/// `𝔤 ⊇ 𝔤⁽¹⁾ ⊇ …`; the last entry repeats the fixed point unless it is 0.
pub fn derived_series(sc: &StructureConstants) -> Vec<Subspace> {
    derived_series_of(sc, &Subspace::whole(sc.dim()))
}

/// `𝔤 ⊇ [𝔤,𝔤] ⊇ [𝔤,[𝔤,𝔤]] ⊇ …`, same stopping rule.
pub fn lower_central_series(sc: &StructureConstants) -> Vec<Subspace> {
    let g = Subspace::whole(sc.dim());
    let mut out = vec![g.clone()];
    loop {
        let last = out.last().expect("nonempty");
        if last.dim() == 0 {
            break;
        }
        let next = bracket_subspaces(sc, &g, last);
        let done = next.dim() == last.dim();
        out.push(next);
        if done {
            break;
        }
    }
    out
}

pub fn dims(series: &[Subspace]) -> Vec<usize> {
    series.iter().map(Subspace::dim).collect()
}

/// Whether a series computed by the functions above reaches zero.
pub fn terminates(series: &[Subspace]) -> bool {
    series.last().is_some_and(|s| s.dim() == 0)
}

pub fn is_solvable(sc: &StructureConstants) -> bool {
    terminates(&derived_series(sc))
}

pub fn is_nilpotent(sc: &StructureConstants) -> bool {
    terminates(&lower_central_series(sc))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdealWitness {
    pub generator: String,
    pub element: String,
    pub bracket: String,
}

/// Checks `[𝔤, h] ⊆ h`, scanning generators in order and the supplied
/// spanning set of `h` in order.
pub fn is_ideal(h: &Subspace, sc: &StructureConstants) -> Option<IdealWitness> {
    let n = sc.dim();
    for i in 0..n {
        let e = linalg::unit(n, i);
        for x in &h.span {
            let b = sc.bracket(&e, x);
            if !h.contains(&b) {
                return Some(IdealWitness {
                    generator: sc.labels[i].clone(),
                    element: sc.format(x),
                    bracket: sc.format(&b),
                });
            }
        }
    }
    None
}

/// Whether `h` is closed under the bracket.
pub fn is_subalgebra(h: &Subspace, sc: &StructureConstants) -> bool {
    h.basis.iter().all(|x| h.basis.iter().all(|y| h.contains(&sc.bracket(x, y))))
}

/// `K[i][j] = tr(ad v_i · ad v_j)`.
pub fn killing_form(sc: &StructureConstants) -> Vec<Vector> {
    let n = sc.dim();
    let ads: Vec<Vec<Vector>> =
        (0..n).map(|i| crate::liealg::ad_matrix(sc, i).expect("index in range")).collect();
    let entries: Vec<RatFunc> = (0..n * n)
        .into_par_iter()
        .map(|p| {
            let (i, j) = (p / n, p % n);
            if j < i {
                return RatFunc::zero();
            }
            linalg::trace(&linalg::matmul(&ads[i], &ads[j]))
        })
        .collect();
    let mut k = vec![linalg::zeros(n); n];
    for i in 0..n {
        for j in i..n {
            k[i][j] = entries[i * n + j].clone();
            k[j][i] = entries[i * n + j].clone();
        }
    }
    k
}

pub fn killing_value(k: &[Vector], x: &[RatFunc], y: &[RatFunc]) -> RatFunc {
    let ky = linalg::matvec(k, y);
    x.iter().zip(&ky).fold(RatFunc::zero(), |s, (p, q)| &s + &(p * q))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KillingReport {
    pub determinant: String,
    pub semisimple: bool,
    /// Factors whose vanishing makes the form degenerate.
    pub degenerate_locus: Vec<String>,
}

pub fn killing_report(sc: &StructureConstants) -> KillingReport {
    let det = linalg::determinant(&killing_form(sc));
    let mut locus = Vec::new();
    if !det.is_zero() {
        for p in det.nonvanishing() {
            let v = p.vars();
            if v.len() == 1 {
                // Report single-variable factors by their square-free part.
                let x = v.iter().next().expect("one variable");
                let d = p.degree_in(x);
                if p == monomial_power(x, d) {
                    locus.push(format!("{x} = 0"));
                    continue;
                }
            }
            locus.push(format!("{} = 0", p.to_expr()));
        }
    }
    KillingReport { determinant: det.to_string(), semisimple: !det.is_zero(), degenerate_locus: locus }
}

fn monomial_power(x: &str, d: u32) -> Poly {
    let mut p = Poly::one();
    for _ in 0..d {
        p = &p * &Poly::var(x);
    }
    p
}

/// `{x : [x, y] = 0 for all y ∈ h}`.
pub fn centralizer(h: &Subspace, sc: &StructureConstants) -> Subspace {
    let n = sc.dim();
    // [x, y]_k = Σ_i x_i [e_i, y]_k: one row per (y, k).
    let mut rows = Vec::new();
    for y in &h.basis {
        let cols: Vec<Vector> = (0..n).map(|i| sc.bracket(&linalg::unit(n, i), y)).collect();
        for k in 0..n {
            rows.push(cols.iter().map(|c| c[k].clone()).collect::<Vector>());
        }
    }
    let (ns, assumptions) = linalg::nullspace(&rows, n);
    let mut s = Subspace::from_span(ns, n);
    s.assumptions = s.merged_assumptions(&assumptions);
    s
}

pub fn center(sc: &StructureConstants) -> Subspace {
    centralizer(&Subspace::whole(sc.dim()), sc)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Quotient {
    pub sc: StructureConstants,
    /// Zero-based indices of the basis vectors completing the ideal.
    pub complement: Vec<usize>,
}

/// Structure constants of `𝔤 / ideal` on the lexicographically earliest
/// complement of unit vectors.
pub fn quotient(sc: &StructureConstants, ideal: &Subspace) -> Result<Quotient> {
    if let Some(w) = is_ideal(ideal, sc) {
        return Err(StructureError::NotAnIdeal {
            generator: w.generator,
            element: w.element,
            bracket: w.bracket,
        });
    }
    let n = sc.dim();
    let mut complement = Vec::new();
    let mut acc = ideal.basis.clone();
    for i in 0..n {
        let e = linalg::unit(n, i);
        if linalg::solve(&acc, &e).is_none() {
            acc.push(e);
            complement.push(i);
        }
    }
    let m = complement.len();
    let mut cols: Vec<Vector> = complement.iter().map(|&i| linalg::unit(n, i)).collect();
    cols.extend(ideal.basis.iter().cloned());
    let c: Vec<Vec<Vector>> = complement
        .iter()
        .map(|&i| {
            complement
                .iter()
                .map(|&j| {
                    let b = sc.bracket(&linalg::unit(n, i), &linalg::unit(n, j));
                    let (x, _) = linalg::solve(&cols, &b).expect("complement plus ideal spans 𝔤");
                    x[..m].to_vec()
                })
                .collect()
        })
        .collect();
    let labels = complement.iter().map(|&i| format!("{}+I", sc.labels[i])).collect();
    let provenance = match &sc.provenance {
        Provenance::Computed => Provenance::Computed,
        Provenance::Entered(s) => Provenance::Entered(format!("quotient of {s}")),
    };
    Ok(Quotient { sc: StructureConstants::new(labels, c, provenance), complement })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JacobiCheck {
    pub triples: usize,
    pub failures: Vec<JacobiFailure>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JacobiFailure {
    pub triple: [String; 3],
    pub defect: String,
}

impl JacobiCheck {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn jacobi_check(sc: &StructureConstants) -> JacobiCheck {
    let n = sc.dim();
    let triples = if n < 3 { 0 } else { n * (n - 1) * (n - 2) / 6 };
    let failures = sc
        .jacobi_failures()
        .into_iter()
        .map(|(i, j, k, d)| JacobiFailure {
            triple: [sc.labels[i].clone(), sc.labels[j].clone(), sc.labels[k].clone()],
            defect: sc.format(&d),
        })
        .collect();
    JacobiCheck { triples, failures }
}

/// The solvable radical with its self-check triple.
#[derive(Clone, Debug, PartialEq)]
pub struct Radical {
    pub radical: Subspace,
    pub is_ideal: bool,
    pub solvable: bool,
    pub quotient_semisimple: bool,
}

impl Radical {
    pub fn self_check_passed(&self) -> bool {
        self.is_ideal && self.solvable && self.quotient_semisimple
    }
}

/// Killing-orthogonal complement of `𝔤⁽¹⁾`, then checked to be a solvable
/// ideal with semisimple quotient.
pub fn radical_via_killing(sc: &StructureConstants) -> Radical {
    let n = sc.dim();
    let k = killing_form(sc);
    let g1 = bracket_subspaces(sc, &Subspace::whole(n), &Subspace::whole(n));
    let rows: Vec<Vector> = g1.basis.iter().map(|y| linalg::matvec(&k, y)).collect();
    let (ns, assumptions) = linalg::nullspace(&rows, n);
    let mut rad = Subspace::from_span(ns, n);
    rad.assumptions = rad.merged_assumptions(&g1.assumptions);
    rad.assumptions = rad.merged_assumptions(&assumptions);
    let ideal = is_ideal(&rad, sc).is_none();
    let solvable = terminates(&derived_series_of(sc, &rad));
    let quotient_semisimple = if !ideal {
        false
    } else if rad.dim() == n {
        true
    } else {
        quotient(sc, &rad).map(|q| killing_report(&q.sc).semisimple).unwrap_or(false)
    };
    Radical { radical: rad, is_ideal: ideal, solvable, quotient_semisimple }
}

/// Renders a subspace basis in the algebra's labels.
pub fn format_subspace(sc: &StructureConstants, s: &Subspace) -> Vec<String> {
    s.basis.iter().map(|v| sc.format(v)).collect()
}

pub fn format_assumptions(list: &[Poly]) -> Vec<String> {
    list.iter().map(|p| format!("{} != 0", p.to_expr())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(n: usize, entries: &[(usize, usize, &[(usize, i64)])]) -> StructureConstants {
        let mut c = vec![vec![linalg::zeros(n); n]; n];
        for &(i, j, v) in entries {
            let mut x = linalg::zeros(n);
            for &(k, q) in v {
                x[k] = RatFunc::int(q);
            }
            c[j][i] = x.iter().map(|r| -r).collect();
            c[i][j] = x;
        }
        let labels = (1..=n).map(|i| format!("e{i}")).collect();
        StructureConstants::new(labels, c, Provenance::Entered("test".into()))
    }

    fn heisenberg() -> StructureConstants {
        table(3, &[(0, 1, &[(2, 1)])])
    }

    fn sl2() -> StructureConstants {
        // [h,e] = 2e, [h,f] = -2f, [e,f] = h
        table(3, &[(0, 1, &[(1, 2)]), (0, 2, &[(2, -2)]), (1, 2, &[(0, 1)])])
    }

    #[test]
    fn series() {
        assert_eq!(dims(&lower_central_series(&heisenberg())), vec![3, 1, 0]);
        assert!(is_nilpotent(&heisenberg()));
        assert_eq!(dims(&derived_series(&sl2())), vec![3, 3]);
        assert!(!is_solvable(&sl2()));
        let ab = table(3, &[]);
        assert_eq!(dims(&derived_series(&ab)), vec![3, 0]);
    }

    #[test]
    fn center_and_radical() {
        let h = heisenberg();
        let z = center(&h);
        assert!(z.same_as(&Subspace::of_units(&[2], 3)));
        let r = radical_via_killing(&sl2());
        assert_eq!(r.radical.dim(), 0);
        assert!(r.self_check_passed());
        let ab = radical_via_killing(&table(3, &[]));
        assert_eq!(ab.radical.dim(), 3);
        assert!(killing_report(&sl2()).semisimple);
    }

    #[test]
    fn quotients_require_ideals() {
        let s = sl2();
        assert!(matches!(quotient(&s, &Subspace::of_units(&[1], 3)), Err(StructureError::NotAnIdeal { .. })));
        let q = quotient(&heisenberg(), &Subspace::of_units(&[2], 3)).unwrap();
        assert_eq!(q.complement, vec![0, 1]);
        assert!(jacobi_check(&q.sc).passed());
    }
}
