//! Small dense complex matrices and the LU kernels used by the basis solvers.

use crate::scalar::{abs1, lift, lower, modulus, Cx, Real};
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};
use std::ops::{Add, Index, IndexMut, Mul, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct Mat<R: Real> {
    rows: usize,
    cols: usize,
    data: Vec<Cx<R>>,
}

pub type CMat = Mat<f64>;

impl<R: Real> Mat<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![Cx::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Cx::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Cx<R>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn diag(d: &[Cx<R>]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Cx<R>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Cx<R>] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn column(&self, j: usize) -> Vec<Cx<R>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, c: Cx<R>) -> Self {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| v * c).collect() }
    }

    pub fn scale_real(&self, c: R) -> Self {
        self.scale(Cx::new(c, R::zero()))
    }

    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn mul_vec(&self, v: &[Cx<R>]) -> Vec<Cx<R>> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut acc = Cx::zero();
                for (a, b) in self.row(i).iter().zip(v) {
                    acc = acc + *a * *b;
                }
                acc
            })
            .collect()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self::from_fn(self.rows * other.rows, self.cols * other.cols, |i, j| {
            self[(i / other.rows, j / other.cols)] * other[(i % other.rows, j % other.cols)]
        })
    }

    /// Frobenius norm, evaluated in the working precision.
    pub fn norm(&self) -> f64 {
        let mut acc = R::zero();
        for v in &self.data {
            acc += v.norm_sqr();
        }
        acc.sqrt().to_f64()
    }

    pub fn trace(&self) -> Cx<R> {
        (0..self.rows.min(self.cols)).fold(Cx::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| modulus(*v).to_f64()).fold(0.0, f64::max)
    }

    pub fn to_f64(&self) -> CMat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| lower(v)).collect() }
    }

    pub fn lift(m: &CMat) -> Self {
        Mat { rows: m.rows, cols: m.cols, data: m.data.iter().map(|&v| lift(v)).collect() }
    }

    pub fn as_slice(&self) -> &[Cx<R>] {
        &self.data
    }
}

impl CMat {
    pub fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }

    pub fn from_nalgebra(m: &DMatrix<Complex64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    pub fn nested(&self) -> Vec<Vec<Complex64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn from_nested(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        Self::from_fn(r, c, |i, j| rows[i][j])
    }
}

impl<R: Real> Index<(usize, usize)> for Mat<R> {
    type Output = Cx<R>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Cx<R> {
        &self.data[i * self.cols + j]
    }
}

impl<R: Real> IndexMut<(usize, usize)> for Mat<R> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cx<R> {
        &mut self.data[i * self.cols + j]
    }
}

impl<R: Real> Mul for &Mat<R> {
    type Output = Mat<R>;
    fn mul(self, rhs: &Mat<R>) -> Mat<R> {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in product");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] = out[(i, j)] + a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl<R: Real> Add for &Mat<R> {
    type Output = Mat<R>;
    fn add(self, rhs: &Mat<R>) -> Mat<R> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a + *b).collect(),
        }
    }
}

impl<R: Real> Sub for &Mat<R> {
    type Output = Mat<R>;
    fn sub(self, rhs: &Mat<R>) -> Mat<R> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect(),
        }
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct Lu<R: Real> {
    lu: Mat<R>,
    perm: Vec<usize>,
}

/// Returned when elimination meets an exactly zero pivot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroPivot(pub usize);

impl<R: Real> Lu<R> {
    pub fn new(a: &Mat<R>) -> Result<Self, ZeroPivot> {
        assert_eq!(a.rows, a.cols, "LU needs a square matrix");
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = abs1(lu[(k, k)]);
            for i in k + 1..n {
                let v = abs1(lu[(i, k)]);
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == R::zero() {
                return Err(ZeroPivot(k));
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
            }
            let piv = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / piv;
                lu[(i, k)] = f;
                if f.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] = lu[(i, j)] - f * u;
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    pub fn solve(&self, b: &[Cx<R>]) -> Vec<Cx<R>> {
        let n = self.dim();
        let mut y: Vec<Cx<R>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut acc = y[i];
            for j in 0..i {
                acc = acc - self.lu[(i, j)] * y[j];
            }
            y[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in i + 1..n {
                acc = acc - self.lu[(i, j)] * y[j];
            }
            y[i] = acc / self.lu[(i, i)];
        }
        y
    }

    pub fn solve_mat(&self, b: &Mat<R>) -> Mat<R> {
        let mut out = Mat::zeros(b.rows, b.cols);
        for j in 0..b.cols {
            let x = self.solve(&b.column(j));
            for i in 0..b.rows {
                out[(i, j)] = x[i];
            }
        }
        out
    }

    pub fn inverse(&self) -> Mat<R> {
        self.solve_mat(&Mat::identity(self.dim()))
    }
}

/// Doolittle factorization without pivoting, `A = L U` with unit-diagonal `L`.
pub fn lu_nopivot<R: Real>(a: &Mat<R>) -> Result<(Mat<R>, Mat<R>), ZeroPivot> {
    let n = a.rows;
    let mut l = Mat::identity(n);
    let mut u = Mat::zeros(n, n);
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in i..n {
            let mut acc = a[(i, j)];
            for k in 0..i {
                acc = acc - l[(i, k)] * u[(k, j)];
            }
            u[(i, j)] = acc;
        }
        if modulus(u[(i, i)]).to_f64() <= 1e3 * R::EPS * scale {
            return Err(ZeroPivot(i));
        }
        for j in i + 1..n {
            let mut acc = a[(j, i)];
            for k in 0..i {
                acc = acc - l[(j, k)] * u[(k, i)];
            }
            l[(j, i)] = acc / u[(i, i)];
        }
    }
    Ok((l, u))
}

/// Row- and column-equilibrated solve with iterative refinement.
#[derive(Clone, Debug)]
pub struct EquilibratedSolver<R: Real> {
    a: Mat<R>,
    row_scale: Vec<R>,
    col_scale: Vec<R>,
    lu: Lu<R>,
    refine_steps: usize,
}

impl<R: Real> EquilibratedSolver<R> {
    pub fn new(a: &Mat<R>, refine_steps: usize) -> Result<Self, ZeroPivot> {
        let n = a.rows;
        let mut a1 = a.clone();
        let mut row_scale = vec![R::one(); n];
        for i in 0..n {
            let m = a1.row(i).iter().map(|v| abs1(*v)).fold(R::zero(), |x, y| if y > x { y } else { x });
            if m > R::zero() {
                row_scale[i] = m;
                let inv = Cx::new(R::one() / m, R::zero());
                for v in a1.row_mut(i) {
                    *v = *v * inv;
                }
            }
        }
        let mut col_scale = vec![R::one(); a.cols];
        for j in 0..a.cols {
            let mut m = R::zero();
            for i in 0..n {
                let v = abs1(a1[(i, j)]);
                if v > m {
                    m = v;
                }
            }
            if m > R::zero() {
                col_scale[j] = m;
                let inv = Cx::new(R::one() / m, R::zero());
                for i in 0..n {
                    a1[(i, j)] = a1[(i, j)] * inv;
                }
            }
        }
        let lu = Lu::new(&a1)?;
        Ok(EquilibratedSolver { a: a1, row_scale, col_scale, lu, refine_steps })
    }

    /// The equilibrated matrix actually factored.
    pub fn scaled(&self) -> &Mat<R> {
        &self.a
    }

    pub fn lu(&self) -> &Lu<R> {
        &self.lu
    }

    pub fn solve(&self, b: &[Cx<R>]) -> Vec<Cx<R>> {
        let b1: Vec<Cx<R>> = b.iter().zip(&self.row_scale).map(|(v, s)| *v / *s).collect();
        let mut y = self.lu.solve(&b1);
        for _ in 0..self.refine_steps {
            let ay = self.a.mul_vec(&y);
            let res: Vec<Cx<R>> = b1.iter().zip(&ay).map(|(u, v)| *u - *v).collect();
            let dy = self.lu.solve(&res);
            for (yi, di) in y.iter_mut().zip(dy) {
                *yi = *yi + di;
            }
        }
        y.iter().zip(&self.col_scale).map(|(v, s)| *v / *s).collect()
    }

    pub fn solve_mat(&self, b: &Mat<R>) -> Mat<R> {
        let mut out = Mat::zeros(self.a.cols, b.cols);
        for j in 0..b.cols {
            let x = self.solve(&b.column(j));
            for i in 0..x.len() {
                out[(i, j)] = x[i];
            }
        }
        out
    }
}

/// Estimate of `sigma_min(A) / ||A||_F` by inverse power iteration on `A^H A`.
/// Works in the working precision so it remains meaningful when `A` is
/// nearly singular at double precision.
pub fn relative_sigma_min<R: Real>(a: &Mat<R>) -> f64 {
    let n = a.rows;
    if n == 0 {
        return 1.0;
    }
    let norm = a.norm();
    if norm == 0.0 {
        return 0.0;
    }
    let (lu, luh) = match (Lu::new(a), Lu::new(&a.adjoint())) {
        (Ok(x), Ok(y)) => (x, y),
        _ => return 0.0,
    };
    let mut x: Vec<Cx<R>> = (0..n)
        .map(|k| Cx::new(R::one(), R::from_f64(0.1 * (k as f64 + 1.0).sqrt())))
        .collect();
    let mut lambda = 0.0;
    for _ in 0..30 {
        let y = luh.solve(&x);
        let z = lu.solve(&y);
        let mut nz = R::zero();
        for v in &z {
            nz += v.norm_sqr();
        }
        let nz = nz.sqrt();
        if nz.to_f64() == 0.0 || !nz.to_f64().is_finite() {
            return 0.0;
        }
        let mut nx = R::zero();
        for v in &x {
            nx += v.norm_sqr();
        }
        let nx = nx.sqrt();
        let next = (nz / nx).to_f64();
        let inv = Cx::new(R::one() / nz, R::zero());
        x = z.into_iter().map(|v| v * inv).collect();
        if (next - lambda).abs() <= 1e-6 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    1.0 / (lambda.sqrt() * norm)
}

/// Singular values in decreasing order (double precision).
pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.rows == 0 || a.cols == 0 {
        return Vec::new();
    }
    let svd = a.to_nalgebra().svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

/// Orthonormal basis of the numerical null space, columns of the result.
/// Vectors whose singular value is below `rel_tol * sigma_max` count as null.
pub fn null_space(a: &CMat, rel_tol: f64) -> CMat {
    let n = a.cols;
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    // pad to square so the SVD exposes all right singular vectors
    let m = a.rows.max(n);
    let padded = DMatrix::from_fn(m, n, |i, j| if i < a.rows { a[(i, j)] } else { Complex64::zero() });
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let mut cols = Vec::new();
    for (k, &sv) in svd.singular_values.iter().enumerate() {
        if sv <= rel_tol * smax.max(f64::MIN_POSITIVE) {
            cols.push((0..n).map(|j| vt[(k, j)].conj()).collect::<Vec<_>>());
        }
    }
    CMat::from_fn(n, cols.len(), |i, j| cols[j][i])
}

/// Eigenvalues of a general complex matrix (double precision).
pub fn eigenvalues(a: &CMat) -> Vec<Complex64> {
    if a.rows == 0 {
        return Vec::new();
    }
    let schur = a.to_nalgebra().schur();
    schur.eigenvalues().map(|v| v.iter().copied().collect()).unwrap_or_default()
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues ascending.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.rows;
    let h = (a + &a.adjoint()).scale_real(0.5);
    let eig = nalgebra::SymmetricEigen::new(h.to_nalgebra());
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// Unitary polar factor of a square matrix.
pub fn polar_unitary(a: &CMat) -> CMat {
    let svd = a.to_nalgebra().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    CMat::from_nalgebra(&(u * vt))
}

/// Greedy matching of two multisets of complex numbers; returns the largest
/// distance between matched pairs.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let mut best = f64::INFINITY;
        let mut arg = 0;
        for (k, y) in b.iter().enumerate() {
            if !used[k] && (x - y).norm() < best {
                best = (x - y).norm();
                arg = k;
            }
        }
        used[arg] = true;
        worst = worst.max(best);
    }
    worst
}

pub fn cmat_from_rows(rows: &[&[Complex64]]) -> CMat {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    CMat::from_fn(r, c, |i, j| rows[i][j])
}
