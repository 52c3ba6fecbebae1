//! Exact linear algebra over the rational function field in the parameters.

use crate::ratfunc::{Poly, RatFunc};

pub type Vector = Vec<RatFunc>;

/// Reduced row echelon form together with the pivot polynomials assumed
/// nonzero during elimination.
#[derive(Clone, Debug, PartialEq)]
pub struct Echelon {
    pub rows: Vec<Vector>,
    pub pivots: Vec<usize>,
    pub assumptions: Vec<Poly>,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.rows.len()
    }
}

pub fn zeros(n: usize) -> Vector {
    vec![RatFunc::zero(); n]
}

pub fn unit(n: usize, i: usize) -> Vector {
    let mut v = zeros(n);
    v[i] = RatFunc::one();
    v
}

pub fn is_zero_vec(v: &[RatFunc]) -> bool {
    v.iter().all(RatFunc::is_zero)
}

pub fn add_scaled(acc: &mut [RatFunc], s: &RatFunc, v: &[RatFunc]) {
    if s.is_zero() {
        return;
    }
    for (a, b) in acc.iter_mut().zip(v) {
        if !b.is_zero() {
            *a = &*a + &(s * b);
        }
    }
}

pub fn scale_vec(s: &RatFunc, v: &[RatFunc]) -> Vector {
    v.iter().map(|x| s * x).collect()
}

pub(crate) fn push_assumption(list: &mut Vec<Poly>, r: &RatFunc) {
    for p in r.nonvanishing() {
        if !list.contains(&p) {
            list.push(p);
        }
    }
}

/// Gauss–Jordan elimination with generic pivoting: the first nonzero entry
/// of a column is used as pivot and its factors are recorded as assumptions.
pub fn rref(rows: &[Vector], ncols: usize) -> Echelon {
    let mut m: Vec<Vector> = rows.iter().filter(|r| !is_zero_vec(r)).cloned().collect();
    let mut pivots = Vec::new();
    let mut assumptions = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let piv = m[r][c].clone();
        push_assumption(&mut assumptions, &piv);
        let inv = piv.inv().expect("nonzero pivot");
        m[r] = scale_vec(&inv, &m[r]);
        let prow = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = -&row[c];
                add_scaled(row, &f, &prow);
            }
        }
        pivots.push(c);
        r += 1;
    }
    m.truncate(r);
    Echelon { rows: m, pivots, assumptions }
}

/// Solves `Σ xᵢ cols[i] = b`. Returns `None` when inconsistent; free
/// unknowns are set to zero.
pub fn solve(cols: &[Vector], b: &[RatFunc]) -> Option<(Vector, Vec<Poly>)> {
    let n = cols.len();
    let m = b.len();
    let rows: Vec<Vector> = (0..m)
        .map(|i| {
            let mut row: Vector = cols.iter().map(|c| c[i].clone()).collect();
            row.push(b[i].clone());
            row
        })
        .collect();
    let e = rref(&rows, n + 1);
    if e.pivots.contains(&n) {
        return None;
    }
    let mut x = zeros(n);
    for (row, &p) in e.rows.iter().zip(&e.pivots) {
        x[p] = row[n].clone();
    }
    Some((x, e.assumptions))
}

/// Basis of `{x : A x = 0}` for `A` given by rows.
pub fn nullspace(rows: &[Vector], ncols: usize) -> (Vec<Vector>, Vec<Poly>) {
    let e = rref(rows, ncols);
    let free: Vec<usize> = (0..ncols).filter(|c| !e.pivots.contains(c)).collect();
    let basis = free
        .iter()
        .map(|&f| {
            let mut v = zeros(ncols);
            v[f] = RatFunc::one();
            for (row, &p) in e.rows.iter().zip(&e.pivots) {
                v[p] = -&row[f];
            }
            v
        })
        .collect();
    (basis, e.assumptions)
}

/// Product of square matrices.
pub fn matmul(a: &[Vector], b: &[Vector]) -> Vec<Vector> {
    let n = a.len();
    let p = b.first().map_or(0, Vec::len);
    let mut out = vec![zeros(p); n];
    for i in 0..n {
        for (k, bk) in b.iter().enumerate() {
            let aik = &a[i][k];
            if !aik.is_zero() {
                add_scaled(&mut out[i], aik, bk);
            }
        }
    }
    out
}

pub fn transpose(a: &[Vector]) -> Vec<Vector> {
    let n = a.first().map_or(0, Vec::len);
    (0..n).map(|j| a.iter().map(|row| row[j].clone()).collect()).collect()
}

pub fn matvec(a: &[Vector], x: &[RatFunc]) -> Vector {
    a.iter()
        .map(|row| {
            row.iter()
                .zip(x)
                .filter(|(p, q)| !p.is_zero() && !q.is_zero())
                .fold(RatFunc::zero(), |s, (p, q)| &s + &(p * q))
        })
        .collect()
}

pub fn trace(a: &[Vector]) -> RatFunc {
    a.iter().enumerate().fold(RatFunc::zero(), |s, (i, row)| &s + &row[i])
}

/// Determinant by Gaussian elimination over the field.
pub fn determinant(a: &[Vector]) -> RatFunc {
    let n = a.len();
    let mut m: Vec<Vector> = a.to_vec();
    let mut det = RatFunc::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else { return RatFunc::zero() };
        if p != c {
            m.swap(p, c);
            det = -&det;
        }
        let piv = m[c][c].clone();
        det = &det * &piv;
        let inv = piv.inv().expect("nonzero pivot");
        let prow = m[c].clone();
        for row in m.iter_mut().skip(c + 1) {
            if !row[c].is_zero() {
                let f = -&(&row[c] * &inv);
                add_scaled(row, &f, &prow);
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[i64]) -> Vector {
        xs.iter().map(|&x| RatFunc::int(x)).collect()
    }

    #[test]
    fn rank_and_nullspace() {
        let rows = vec![v(&[1, 2, 3]), v(&[2, 4, 6]), v(&[0, 1, 1])];
        let e = rref(&rows, 3);
        assert_eq!(e.rank(), 2);
        let (ns, _) = nullspace(&rows, 3);
        assert_eq!(ns.len(), 1);
        for r in &rows {
            assert!(matvec(std::slice::from_ref(r), &ns[0])[0].is_zero());
        }
    }

    #[test]
    fn generic_pivot_records_assumption() {
        let a = RatFunc::param("a");
        let rows = vec![vec![a.clone(), RatFunc::one()]];
        let e = rref(&rows, 2);
        assert_eq!(e.assumptions, vec![Poly::var("a")]);
        let (x, _) = solve(&[vec![a.clone()]], &[&a * &a]).unwrap();
        assert_eq!(x[0], a);
        assert!(solve(&[v(&[1, 0])], &v(&[0, 1])).is_none());
    }

    #[test]
    fn determinants() {
        assert_eq!(determinant(&[v(&[2, 1]), v(&[1, 1])]), RatFunc::int(1));
        assert_eq!(determinant(&[v(&[0, 1]), v(&[1, 0])]), RatFunc::int(-1));
    }
}
