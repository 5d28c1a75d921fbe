//! Dense linear algebra for the small symmetric matrices that appear in the
//! extended regression: eigendecomposition by cyclic Jacobi rotations,
//! cofactor determinant and adjugate, and spectral recomposition.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Maximum number of Jacobi sweeps before giving up on further rotations.
pub const MAX_SWEEPS: usize = 100;

/// Off-diagonal Frobenius norm, relative to `‖A‖_F`, below which the
/// iteration is considered converged.
pub const OFF_DIAGONAL_TOL: f64 = 1e-14;

/// Dense `n × n` real matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row-major entries; the length must be a perfect square.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        Ok(SquareMatrix { n, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(SquareMatrix { n, data })
    }

    /// `v vᵀ`
    pub fn outer(v: &[f64]) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = v[i] * v[j];
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self[(i, i)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &SquareMatrix) -> Result<Self> {
        self.check_dim(rhs.n)?;
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(v.len())?;
        Ok((0..self.n)
            .map(|i| dot(&self.data[i * self.n..(i + 1) * self.n], v))
            .collect())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SquareMatrix {
            n: self.n,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn sub(&self, rhs: &SquareMatrix) -> Result<Self> {
        self.check_dim(rhs.n)?;
        Ok(SquareMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest absolute entry of `A - Aᵀ`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Replaces the matrix with `(A + Aᵀ) / 2`.
    pub fn symmetrize(&mut self) {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let m = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = m;
                self[(j, i)] = m;
            }
        }
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found,
            });
        }
        Ok(())
    }

    /// Matrix with row `skip_row` and column `skip_col` removed.
    fn minor(&self, skip_row: usize, skip_col: usize) -> SquareMatrix {
        let n = self.n - 1;
        let mut data = Vec::with_capacity(n * n);
        for i in (0..self.n).filter(|&i| i != skip_row) {
            for j in (0..self.n).filter(|&j| j != skip_col) {
                data.push(self[(i, j)]);
            }
        }
        SquareMatrix { n, data }
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl fmt::Debug for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SquareMatrix({}x{}) [", self.n, self.n)?;
        for i in 0..self.n {
            writeln!(f, "  {:?}", &self.data[i * self.n..(i + 1) * self.n])?;
        }
        write!(f, "]")
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Eigendecomposition `A = V diag(λ) Vᵀ` of a symmetric matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomposition {
    /// Columns are unit eigenvectors, ordered like `values`.
    pub vectors: SquareMatrix,
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Number of eigenvalues `≥ eps_bar`.
    pub rank: usize,
    /// Threshold used to compute `rank`.
    pub eps_bar: f64,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Smallest eigenvalue that is `≥ eps_bar`, or 0 when there is none.
    pub fn smallest_retained(&self) -> f64 {
        if self.rank == 0 {
            0.0
        } else {
            self.values[self.rank - 1]
        }
    }

    /// Eigenvectors whose eigenvalues fall below `eps_bar`, as an `n × (n - rank)`
    /// column-major list of vectors.
    pub fn nullspace_basis(&self) -> Vec<Vec<f64>> {
        (self.rank..self.dim()).map(|j| self.vectors.column(j)).collect()
    }

    /// Orthogonal projector `V₂V₂ᵀ` onto the numerical nullspace.
    pub fn nullspace_projector(&self) -> SquareMatrix {
        let n = self.dim();
        let mut p = SquareMatrix::zeros(n);
        for v in self.nullspace_basis() {
            for i in 0..n {
                for j in 0..n {
                    p[(i, j)] += v[i] * v[j];
                }
            }
        }
        p
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Eigenvalues are returned in descending order. Each eigenvector is
/// normalised so that its largest-magnitude component is positive (lowest
/// index wins ties); exactly equal eigenvalues are ordered by their
/// eigenvectors, larger first differing component first.
///
/// Rotations continue until every off-diagonal entry is negligible next to
/// its two diagonal entries (`|a_pq| ≤ u·sqrt(|a_pp a_qq|)`), which implies
/// the `OFF_DIAGONAL_TOL` Frobenius criterion and keeps eigenvectors of tiny
/// but nonzero eigenvalues accurate.
pub fn eig_sym(a: &SquareMatrix, eps_bar: f64) -> Result<EigenDecomposition> {
    if !a.is_finite() {
        return Err(Error::NonFinite("eigendecomposition input"));
    }
    let scale = a.max_abs().max(1.0);
    let deviation = a.asymmetry();
    if deviation > 1e-9 * scale {
        return Err(Error::NotSymmetric { deviation });
    }

    let n = a.dim();
    let mut m = a.clone();
    m.symmetrize();
    let mut v = SquareMatrix::identity(n);
    let norm_f = m.frobenius();

    if norm_f > 0.0 {
        for _sweep in 0..MAX_SWEEPS {
            if off_diagonal_converged(&m, norm_f) {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    rotate(&mut m, &mut v, p, q);
                }
            }
        }
    }

    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|j| {
            let mut col = v.column(j);
            fix_sign(&mut col);
            (m[(j, j)], col)
        })
        .collect();
    pairs.sort_by(|(la, va), (lb, vb)| {
        lb.total_cmp(la).then_with(|| {
            va.iter()
                .zip(vb)
                .find(|(x, y)| x != y)
                .map_or(std::cmp::Ordering::Equal, |(x, y)| y.total_cmp(x))
        })
    });

    let mut vectors = SquareMatrix::zeros(n);
    let mut values = Vec::with_capacity(n);
    for (j, (lambda, col)) in pairs.into_iter().enumerate() {
        values.push(lambda);
        for (i, x) in col.into_iter().enumerate() {
            vectors[(i, j)] = x;
        }
    }
    let rank = values.iter().filter(|&&l| l >= eps_bar).count();
    Ok(EigenDecomposition {
        vectors,
        values,
        rank,
        eps_bar,
    })
}

fn off_diagonal_converged(m: &SquareMatrix, norm_f: f64) -> bool {
    let n = m.dim();
    let mut off = 0.0;
    let mut all_negligible = true;
    for p in 0..n {
        for q in (p + 1)..n {
            let apq = m[(p, q)];
            off += 2.0 * apq * apq;
            if !negligible(apq, m[(p, p)], m[(q, q)]) {
                all_negligible = false;
            }
        }
    }
    all_negligible && off.sqrt() <= OFF_DIAGONAL_TOL * norm_f
}

#[inline]
fn negligible(apq: f64, app: f64, aqq: f64) -> bool {
    apq == 0.0 || apq.abs() <= f64::EPSILON * (app * aqq).abs().sqrt() || apq.abs() < f64::MIN_POSITIVE
}

/// One Jacobi rotation annihilating `m[p][q]`, accumulated into `v`.
fn rotate(m: &mut SquareMatrix, v: &mut SquareMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let app = m[(p, p)];
    let aqq = m[(q, q)];
    if negligible(apq, app, aqq) {
        return;
    }
    let n = m.dim();
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.is_infinite() {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + theta.hypot(1.0))
    };
    let c = 1.0 / t.hypot(1.0);
    let s = t * c;
    let tau = s / (1.0 + c);

    m[(p, p)] = app - t * apq;
    m[(q, q)] = aqq + t * apq;
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = m[(r, p)];
        let arq = m[(r, q)];
        let new_rp = arp - s * (arq + tau * arp);
        let new_rq = arq + s * (arp - tau * arq);
        m[(r, p)] = new_rp;
        m[(p, r)] = new_rp;
        m[(r, q)] = new_rq;
        m[(q, r)] = new_rq;
    }
    for r in 0..n {
        let vrp = v[(r, p)];
        let vrq = v[(r, q)];
        v[(r, p)] = vrp - s * (vrq + tau * vrp);
        v[(r, q)] = vrq + s * (vrp - tau * vrq);
    }
}

/// Flip `v` so that its largest-magnitude component (lowest index on ties) is positive.
fn fix_sign(v: &mut [f64]) {
    let mut pivot = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[pivot].abs() {
            pivot = i;
        }
    }
    if v[pivot] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Determinant; cofactor expansion up to `n = 4`, partial-pivot elimination above.
pub fn determinant(a: &SquareMatrix) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::NonFinite("determinant input"));
    }
    Ok(det_unchecked(a))
}

fn det_unchecked(a: &SquareMatrix) -> f64 {
    match a.dim() {
        0 => 1.0,
        1 => a[(0, 0)],
        2 => a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)],
        3 => {
            a[(0, 0)] * (a[(1, 1)] * a[(2, 2)] - a[(1, 2)] * a[(2, 1)])
                - a[(0, 1)] * (a[(1, 0)] * a[(2, 2)] - a[(1, 2)] * a[(2, 0)])
                + a[(0, 2)] * (a[(1, 0)] * a[(2, 1)] - a[(1, 1)] * a[(2, 0)])
        }
        4 => (0..4)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * a[(0, j)] * det_unchecked(&a.minor(0, j))
            })
            .sum(),
        _ => det_elimination(a),
    }
}

fn det_elimination(a: &SquareMatrix) -> f64 {
    let n = a.dim();
    let mut m = a.clone();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs()))
            .unwrap_or(col);
        if m[(pivot, col)] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for j in 0..n {
                let tmp = m[(col, j)];
                m[(col, j)] = m[(pivot, j)];
                m[(pivot, j)] = tmp;
            }
            det = -det;
        }
        let p = m[(col, col)];
        det *= p;
        for i in (col + 1)..n {
            let f = m[(i, col)] / p;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                m[(i, j)] -= f * m[(col, j)];
            }
        }
    }
    det
}

/// Adjugate (transposed cofactor matrix), so that `adj(A)·A = det(A)·I`.
pub fn adjugate(a: &SquareMatrix) -> Result<SquareMatrix> {
    if !a.is_finite() {
        return Err(Error::NonFinite("adjugate input"));
    }
    let n = a.dim();
    if n == 1 {
        return Ok(SquareMatrix::identity(1));
    }
    let mut adj = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            adj[(j, i)] = sign * det_unchecked(&a.minor(i, j));
        }
    }
    Ok(adj)
}

/// Adjugate of `V diag(λ) Vᵀ` computed from its eigenstructure:
/// `V diag(∏_{j≠i} λ_j) Vᵀ`.
pub fn adjugate_spectral(vectors: &SquareMatrix, values: &[f64]) -> Result<SquareMatrix> {
    let complementary: Vec<f64> = (0..values.len())
        .map(|i| {
            values
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, l)| l)
                .product()
        })
        .collect();
    recompose(vectors, &complementary)
}

/// `V diag(λ) Vᵀ`, symmetrised exactly.
pub fn recompose(vectors: &SquareMatrix, values: &[f64]) -> Result<SquareMatrix> {
    let n = vectors.dim();
    if values.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: values.len(),
        });
    }
    let mut out = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let s: f64 = (0..n)
                .map(|k| vectors[(i, k)] * values[k] * vectors[(j, k)])
                .sum();
            out[(i, j)] = s;
            out[(j, i)] = s;
        }
    }
    Ok(out)
}
