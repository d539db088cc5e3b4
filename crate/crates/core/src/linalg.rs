//! Small dense complex matrices and tolerance-aware elimination.
//!
//! Everything in this crate works with matrices whose side is the rank of a
//! Coxeter group (or its square, for stacked constraint systems), so a plain
//! row-major `Vec<Complex64>` with O(n^3) algorithms is all we need.  Rank
//! decisions use scaled partial pivoting: a pivot candidate is rejected when
//! its modulus is below `tol` times the max-abs of its row, so ranks are
//! stable for the O(1)-sized cosine entries that dominate this domain.

use num_complex::Complex64;
use std::fmt;
use std::ops::{Index, IndexMut};

pub type CVec = Vec<Complex64>;

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn re64(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `|a - b| <= tol * max(1, |a|, |b|)` — mixed absolute/relative comparison.
pub fn approx_eq_c(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * 1.0_f64.max(a.norm()).max(b.norm())
}

#[derive(Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![C_ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C_ONE;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        CMat { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = CMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Stack matrices with equal column counts on top of each other.
    pub fn vstack(blocks: &[&CMat]) -> Self {
        assert!(!blocks.is_empty());
        let cols = blocks[0].cols;
        let mut data = Vec::new();
        let mut rows = 0;
        for b in blocks {
            assert_eq!(b.cols, cols, "column mismatch in vstack");
            data.extend_from_slice(&b.data);
            rows += b.rows;
        }
        CMat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> CMat {
        CMat::from_fn(self.rows, self.cols, |i, j| self[(i, j)].conj())
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn mul(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in mul");
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C_ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    let v = a * rhs[(k, j)];
                    out[(i, j)] += v;
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + rhs[(i, j)])
    }

    pub fn sub(&self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - rhs[(i, j)])
    }

    pub fn scale(&self, s: Complex64) -> CMat {
        CMat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * s)
    }

    pub fn pow(&self, mut k: u32) -> CMat {
        assert!(self.is_square());
        let mut acc = CMat::identity(self.rows);
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> CVec {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn col(&self, j: usize) -> CVec {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, rhs: &CMat) -> f64 {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn deviation_from_identity(&self) -> f64 {
        assert!(self.is_square());
        self.max_abs_diff(&CMat::identity(self.rows))
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> Complex64 {
        assert!(self.is_square());
        let n = self.rows;
        let mut m = self.clone();
        let mut sign = 1.0;
        let mut prod = C_ONE;
        for c in 0..n {
            let (mut pr, mut pv) = (c, m[(c, c)].norm());
            for i in c + 1..n {
                let v = m[(i, c)].norm();
                if v > pv {
                    pr = i;
                    pv = v;
                }
            }
            if pv == 0.0 {
                return C_ZERO;
            }
            if pr != c {
                m.swap_rows(pr, c);
                sign = -sign;
            }
            let piv = m[(c, c)];
            prod *= piv;
            for i in c + 1..n {
                let f = m[(i, c)] / piv;
                if f == C_ZERO {
                    continue;
                }
                for j in c..n {
                    let v = m[(c, j)] * f;
                    m[(i, j)] -= v;
                }
            }
        }
        prod * re64(sign)
    }

    /// Solve `self * X = rhs` for well-conditioned square `self`.
    /// Returns `None` when a pivot degenerates (numerically singular).
    pub fn solve(&self, rhs: &CMat) -> Option<CMat> {
        assert!(self.is_square());
        assert_eq!(self.rows, rhs.rows);
        let n = self.rows;
        let k = rhs.cols;
        let mut a = self.clone();
        let mut b = rhs.clone();
        let floor = 1e-13 * self.max_abs().max(1e-300);
        for c in 0..n {
            let (mut pr, mut pv) = (c, a[(c, c)].norm());
            for i in c + 1..n {
                let v = a[(i, c)].norm();
                if v > pv {
                    pr = i;
                    pv = v;
                }
            }
            if pv <= floor {
                return None;
            }
            a.swap_rows(pr, c);
            b.swap_rows(pr, c);
            let piv = a[(c, c)];
            for j in 0..n {
                a[(c, j)] /= piv;
            }
            for j in 0..k {
                b[(c, j)] /= piv;
            }
            for i in 0..n {
                if i == c {
                    continue;
                }
                let f = a[(i, c)];
                if f == C_ZERO {
                    continue;
                }
                for j in 0..n {
                    let v = a[(c, j)] * f;
                    a[(i, j)] -= v;
                }
                for j in 0..k {
                    let v = b[(c, j)] * f;
                    b[(i, j)] -= v;
                }
            }
        }
        Some(b)
    }

    pub fn inverse(&self) -> Option<CMat> {
        self.solve(&CMat::identity(self.rows))
    }

    pub fn rank(&self, tol: f64) -> usize {
        rref(self, tol).rank
    }

    pub fn nullspace(&self, tol: f64) -> Vec<CVec> {
        nullspace(self, tol)
    }
}

/// Result of a reduced-row-echelon pass.
pub struct Rref {
    pub matrix: CMat,
    pub pivot_cols: Vec<usize>,
    pub rank: usize,
}

/// Reduced row echelon form with scaled partial pivoting.
///
/// Each row keeps the max-abs of its initial state as its scale; a pivot
/// candidate is rejected when its modulus is below `tol * scale`, which keeps
/// cancellation noise from an O(1) row from being mistaken for rank.
pub fn rref(a: &CMat, tol: f64) -> Rref {
    let mut m = a.clone();
    let rows = m.rows();
    let cols = m.cols();
    let mut scale: Vec<f64> = (0..rows)
        .map(|i| (0..cols).map(|j| m[(i, j)].norm()).fold(0.0, f64::max))
        .collect();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let mut best: Option<(usize, f64)> = None;
        for i in r..rows {
            if scale[i] <= 0.0 {
                continue;
            }
            let v = m[(i, c)].norm();
            if v < tol * scale[i] {
                continue;
            }
            let ratio = v / scale[i];
            if best.map_or(true, |(_, b)| ratio > b) {
                best = Some((i, ratio));
            }
        }
        let Some((pr, _)) = best else { continue };
        m.swap_rows(r, pr);
        scale.swap(r, pr);
        let piv = m[(r, c)];
        for j in 0..cols {
            m[(r, j)] /= piv;
        }
        m[(r, c)] = C_ONE;
        for i in 0..rows {
            if i == r {
                continue;
            }
            let f = m[(i, c)];
            if f == C_ZERO {
                continue;
            }
            for j in 0..cols {
                let v = m[(r, j)] * f;
                m[(i, j)] -= v;
            }
            m[(i, c)] = C_ZERO;
        }
        pivot_cols.push(c);
        r += 1;
    }
    Rref { matrix: m, pivot_cols, rank: r }
}

/// Basis of the right nullspace, one vector per free column of the RREF.
pub fn nullspace(a: &CMat, tol: f64) -> Vec<CVec> {
    let rr = rref(a, tol);
    let cols = a.cols();
    let mut is_pivot = vec![false; cols];
    for &c in &rr.pivot_cols {
        is_pivot[c] = true;
    }
    let mut basis = Vec::new();
    for f in 0..cols {
        if is_pivot[f] {
            continue;
        }
        let mut v = vec![C_ZERO; cols];
        v[f] = C_ONE;
        for (k, &pc) in rr.pivot_cols.iter().enumerate() {
            v[pc] = -rr.matrix[(k, f)];
        }
        basis.push(v);
    }
    basis
}

pub fn vdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

pub fn vnorm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vnorm_inf(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn vsub(a: &[Complex64], b: &[Complex64]) -> CVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn vscale(a: &[Complex64], s: Complex64) -> CVec {
    a.iter().map(|x| x * s).collect()
}

/// Modified Gram–Schmidt; vectors that are dependent (residual below
/// `tol * max(1, |v|)`) are dropped.
pub fn orthonormalize(vs: &[CVec], tol: f64) -> Vec<CVec> {
    let mut basis: Vec<CVec> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for q in &basis {
            let f = vdot(&w, q);
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi -= f * qi;
            }
        }
        let n = vnorm(&w);
        if n > tol * 1.0_f64.max(vnorm(v)) {
            let inv = re64(1.0 / n);
            basis.push(vscale(&w, inv));
        }
    }
    basis
}

/// Whether `v` lies in the span of an orthonormal `basis` (residual test).
pub fn in_span(basis: &[CVec], v: &[Complex64], tol: f64) -> bool {
    let mut w = v.to_vec();
    for q in basis {
        let f = vdot(&w, q);
        for (wi, qi) in w.iter_mut().zip(q) {
            *wi -= f * qi;
        }
    }
    vnorm(&w) <= tol * 1.0_f64.max(vnorm(v))
}

/// Span equality via mutual containment of orthonormalized bases.
pub fn subspaces_equal(a: &[CVec], b: &[CVec], tol: f64) -> bool {
    let qa = orthonormalize(a, tol);
    let qb = orthonormalize(b, tol);
    qa.len() == qb.len()
        && qa.iter().all(|v| in_span(&qb, v, tol))
        && qb.iter().all(|v| in_span(&qa, v, tol))
}
