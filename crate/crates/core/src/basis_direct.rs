//! All basis rows at once from the coefficient constraint matrix and a UL
//! factorization of its top block.

use crate::basis::BasisMatrix;
use crate::error::{NahmError, Result};
use crate::linalg::{lu_nopivot, null_space, relative_sigma_min, singular_values, CMat, EquilibratedSolver, Lu, Mat};
use crate::scalar::{abs1, powi, real, Cx, Real};
use crate::spectral::Spectral;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

pub const OVERFLOW_LIMIT: f64 = 350.0;

/// Ordered pairs `(i, j)`, `i ≠ j`, in row order of the constraint matrix.
pub fn pair_order(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * n.saturating_sub(1));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                out.push((i, j));
            }
        }
    }
    out
}

/// Threshold on `sigma_min/||A||` below which a block counts as singular.
pub fn singular_threshold<R: Real>() -> f64 {
    1e-12 * (R::EPS / f64::EPSILON)
}

/// The matching constraint matrix with the symmetric `e^{±s r/2}` weights.
pub fn build_constraint_matrix<R: Real>(sp: &Spectral<R>, s: f64) -> Result<Mat<R>> {
    if s * sp.max_r() / 2.0 > OVERFLOW_LIMIT {
        return Err(NahmError::ScaleOverflow(s * sp.max_r() / 2.0));
    }
    let n = sp.n;
    let pairs = pair_order(n);
    let half = R::from_f64(0.5 * s);
    let mut xi = Mat::zeros(pairs.len(), n * n);
    for (row, &(i, j)) in pairs.iter().enumerate() {
        let up = real((half * sp.r[i][j]).exp());
        let down = real((-half * sp.r[i][j]).exp());
        for k in 0..n {
            let ak = powi(sp.a[i][j], k);
            xi[(row, k * n + i)] = xi[(row, k * n + i)] + ak * up;
            xi[(row, k * n + j)] = xi[(row, k * n + j)] - ak * down;
        }
    }
    Ok(xi)
}

/// Constraint rows scaled to unit sup norm, together with their `s`
/// derivatives under the same (frozen) scaling. The rows are formed as
/// `(1,a,…)⊗(ê_i − e^{−s r} ê_j)`, a positive multiple of the symmetric
/// form, so no growing exponential is ever evaluated.
pub fn scaled_constraint_rows<R: Real>(sp: &Spectral<R>, s: f64) -> (Mat<R>, Mat<R>) {
    let n = sp.n;
    let pairs = pair_order(n);
    let sr = R::from_f64(s);
    let mut xi = Mat::zeros(pairs.len(), n * n);
    let mut dxi = Mat::zeros(pairs.len(), n * n);
    for (row, &(i, j)) in pairs.iter().enumerate() {
        let w = (-sr * sp.r[i][j]).exp();
        let mut scale = R::zero();
        let mut entries = Vec::with_capacity(n);
        for k in 0..n {
            let ak = powi(sp.a[i][j], k);
            let m = abs1(ak);
            let big = if m * w > m { m * w } else { m };
            if big > scale {
                scale = big;
            }
            entries.push(ak);
        }
        let inv = R::one() / scale;
        for (k, ak) in entries.into_iter().enumerate() {
            let ak = ak * real(inv);
            xi[(row, k * n + i)] = xi[(row, k * n + i)] + ak;
            xi[(row, k * n + j)] = xi[(row, k * n + j)] - ak * real(w);
            dxi[(row, k * n + j)] = dxi[(row, k * n + j)] + ak * real(w * sp.r[i][j]);
        }
    }
    (xi, dxi)
}

/// Column index of the normalization condition for sheet `i` in row `l`.
fn pattern_column(n: usize, l: usize, i: usize) -> usize {
    if i > l {
        i
    } else {
        (n - 1) * n + i
    }
}

/// Unnormalized basis of conditions (A) at `s`.
pub fn solve_basis_direct<R: Real>(sp: &Spectral<R>, s: f64) -> Result<BasisMatrix<R>> {
    let n = sp.n;
    if s < 0.0 || !s.is_finite() {
        return Err(NahmError::NonPositiveS(s));
    }
    if n == 1 {
        return Ok(BasisMatrix::trivial(s));
    }
    let m = n * (n - 1);
    let (xi, _) = scaled_constraint_rows(sp, s);
    let ab = xi.submatrix(0, 0, m, m);
    let c = xi.submatrix(0, m, m, n);

    let ratio = relative_sigma_min(&ab);
    if ratio < singular_threshold::<R>() {
        return Err(NahmError::SingularBlock { ratio });
    }
    let solver = EquilibratedSolver::new(&ab, 2).map_err(|_| NahmError::SingularBlock { ratio: 0.0 })?;
    let y = solver.solve_mat(&c).scale_real(-R::one());

    // top = U · L̂⁻¹ with U upper and L̂⁻¹ unit lower; obtained from the
    // Doolittle LU of the index-reversed transpose.
    let top = y.submatrix(0, 0, n, n);
    let rev = |t: usize| n - 1 - t;
    let b = Mat::from_fn(n, n, |i, j| top[(rev(j), rev(i))]);
    let (lf, _uf) = lu_nopivot(&b).map_err(|_| NahmError::SingularBlock { ratio: 0.0 })?;
    let linv = Mat::from_fn(n, n, |i, j| lf[(rev(j), rev(i))]);
    let lhat = unit_lower_inverse(&linv);

    let mut rows = Vec::with_capacity(n);
    for l in 0..n {
        let col = lhat.column(l);
        let lower_part = y.mul_vec(&col);
        let mut v = lower_part;
        v.extend_from_slice(&col);
        let mut row = BasisMatrix::row_from_vector(&v, n);
        enforce_pattern(&mut row, l);
        rows.push(row);
    }
    Ok(BasisMatrix { s, rows, normalized: false })
}

/// Sets the structurally fixed coefficients of row `l` exactly.
pub fn enforce_pattern<R: Real>(row: &mut [Vec<Cx<R>>], l: usize) {
    let n = row.len();
    for (i, sheet) in row.iter_mut().enumerate() {
        if i < l {
            sheet[n - 1] = Cx::zero();
        } else if i == l {
            sheet[n - 1] = Cx::one();
        } else {
            sheet[0] = Cx::zero();
        }
    }
}

fn unit_lower_inverse<R: Real>(l: &Mat<R>) -> Mat<R> {
    let n = l.rows();
    let mut inv = Mat::identity(n);
    for j in 0..n {
        for i in j + 1..n {
            let mut acc = Cx::zero();
            for k in j..i {
                acc = acc + l[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = -acc;
        }
    }
    inv
}

/// Augmented square system for row `l`: scaled matching rows followed by
/// the n pattern rows, plus its `s` derivative.
pub fn row_system<R: Real>(sp: &Spectral<R>, s: f64, l: usize) -> (Mat<R>, Mat<R>) {
    let n = sp.n;
    let (xi, dxi) = scaled_constraint_rows(sp, s);
    let m = n * (n - 1);
    let mut g = Mat::zeros(n * n, n * n);
    let mut dg = Mat::zeros(n * n, n * n);
    for r in 0..m {
        for c in 0..n * n {
            g[(r, c)] = xi[(r, c)];
            dg[(r, c)] = dxi[(r, c)];
        }
    }
    for i in 0..n {
        g[(m + i, pattern_column(n, l, i))] = Cx::one();
    }
    (g, dg)
}

/// `dQ/ds` of an unnormalized conditions-(A) basis: for each row,
/// `y' = −G⁻¹ G' y` with `G` the augmented row system.
pub fn basis_derivative<R: Real>(sp: &Spectral<R>, basis: &BasisMatrix<R>) -> Result<BasisMatrix<R>> {
    let n = sp.n;
    let s = basis.s;
    if n == 1 {
        return Ok(BasisMatrix { s, rows: vec![vec![vec![Cx::zero()]]], normalized: false });
    }
    let mut rows = Vec::with_capacity(n);
    for l in 0..n {
        let (g, dg) = row_system(sp, s, l);
        let solver = EquilibratedSolver::new(&g, 2).map_err(|_| NahmError::SingularBlock { ratio: 0.0 })?;
        let y = basis.row_vector(l);
        let rhs: Vec<Cx<R>> = dg.mul_vec(&y).into_iter().map(|v| -v).collect();
        let yd = solver.solve(&rhs);
        rows.push(BasisMatrix::row_from_vector(&yd, n));
    }
    Ok(BasisMatrix { s, rows, normalized: false })
}

/// Solves each row from its own augmented system (used as a cross-check).
pub fn solve_basis_rowwise<R: Real>(sp: &Spectral<R>, s: f64) -> Result<BasisMatrix<R>> {
    let n = sp.n;
    if n == 1 {
        return Ok(BasisMatrix::trivial(s));
    }
    let mut rows = Vec::with_capacity(n);
    for l in 0..n {
        let (g, _) = row_system(sp, s, l);
        let lu = Lu::new(&g).map_err(|_| NahmError::SingularBlock { ratio: 0.0 })?;
        let mut rhs = vec![Cx::zero(); n * n];
        rhs[n * (n - 1) + l] = Cx::one();
        let y = lu.solve(&rhs);
        rows.push(BasisMatrix::row_from_vector(&y, n));
    }
    Ok(BasisMatrix { s, rows, normalized: false })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionDiagnostics {
    /// `sigma_min/sigma_max` of the degree-(n−2) block.
    pub smallest_singular_value: f64,
    /// Number of singular values of that block below `1e-10 · sigma_max`.
    pub nullity: usize,
    /// Sine of the largest principal angle between the numerical null space
    /// and the span of `r(ζ)(1,…,1)`, `deg r ≤ n−2`; zero when the null
    /// space is trivial.
    pub constant_tuple_angle: f64,
    /// Dimension of the span of `(p_1^i r, …, p_n^i r)` with
    /// `2i + deg r ≤ n−2`, the restrictions of polynomials in `(ζ, η)` to
    /// the sheets. Equals the nullity at `s = 0`.
    pub curve_section_count: usize,
    /// Largest distance of a unit null vector from that span.
    pub curve_section_angle: f64,
}

pub const NULLITY_TOLERANCE: f64 = 1e-10;

/// Rank diagnostics of the matching system at `s` (double precision).
pub fn section_space_diagnostics(sp: &Spectral<f64>, s: f64) -> SectionDiagnostics {
    let n = sp.n;
    if n == 1 {
        return SectionDiagnostics {
            smallest_singular_value: 1.0,
            nullity: 0,
            constant_tuple_angle: 0.0,
            curve_section_count: 0,
            curve_section_angle: 0.0,
        };
    }
    let m = n * (n - 1);
    let (xi, _) = scaled_constraint_rows(sp, s);
    let ab: CMat = xi.submatrix(0, 0, m, m);
    let sv = singular_values(&ab);
    let smax = sv[0];
    let smin = *sv.last().unwrap();
    let nullity = sv.iter().filter(|&&v| v <= NULLITY_TOLERANCE * smax).count();
    let ns = null_space(&ab, NULLITY_TOLERANCE);
    let mut angle: f64 = 0.0;
    let w = 1.0 / (n as f64).sqrt();
    for c in 0..ns.cols() {
        let v = ns.column(c);
        let mut resid = 0.0;
        for k in 0..n - 1 {
            let mut proj = num_complex::Complex64::zero();
            for j in 0..n {
                proj += v[k * n + j] * w;
            }
            for j in 0..n {
                resid += (v[k * n + j] - proj * w).norm_sqr();
            }
        }
        angle = angle.max(resid.sqrt());
    }
    let span = curve_sections(sp);
    let count = span.len();
    let q = orthonormal_columns(&span, m);
    let mut curve_angle: f64 = 0.0;
    for c in 0..ns.cols() {
        let v = ns.column(c);
        let mut resid = v.clone();
        for b in &q {
            let proj: num_complex::Complex64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            for (r, x) in resid.iter_mut().zip(b) {
                *r -= proj * x;
            }
        }
        curve_angle = curve_angle.max(resid.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
    }
    SectionDiagnostics {
        smallest_singular_value: smin / smax,
        nullity,
        constant_tuple_angle: angle,
        curve_section_count: count,
        curve_section_angle: curve_angle,
    }
}

/// Coefficient vectors (layout `k*n + j`, degrees `≤ n−2`) of the tuples
/// `(p_1^i ζ^k, …, p_n^i ζ^k)` with `2i + k ≤ n−2`. They satisfy the
/// `s = 0` matching conditions because `p_i(a_ij) = p_j(a_ij)`.
pub fn curve_sections(sp: &Spectral<f64>) -> Vec<Vec<num_complex::Complex64>> {
    use crate::poly::mul;
    use num_complex::Complex64;
    let n = sp.n;
    let m = n * (n - 1);
    let mut out = Vec::new();
    for i in 0..=(n - 2) / 2 {
        let sheet_powers: Vec<Vec<Complex64>> = (0..n)
            .map(|j| {
                let pj = [sp.z[j], Complex64::new(-2.0 * sp.x3[j], 0.0), -sp.z[j].conj()];
                (0..i).fold(vec![Complex64::one()], |acc, _| mul(&acc, &pj))
            })
            .collect();
        for k in 0..=(n - 2 - 2 * i) {
            let mut v = vec![Complex64::zero(); m];
            for (j, pw) in sheet_powers.iter().enumerate() {
                for (d, c) in pw.iter().enumerate() {
                    v[(d + k) * n + j] = *c;
                }
            }
            out.push(v);
        }
    }
    out
}

/// Gram-Schmidt with reorthogonalization.
fn orthonormal_columns(vs: &[Vec<num_complex::Complex64>], len: usize) -> Vec<Vec<num_complex::Complex64>> {
    let mut q: Vec<Vec<num_complex::Complex64>> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        w.resize(len, num_complex::Complex64::zero());
        for _ in 0..2 {
            for b in &q {
                let proj: num_complex::Complex64 = b.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
                for (r, x) in w.iter_mut().zip(b) {
                    *r -= proj * x;
                }
            }
        }
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-12 {
            q.push(w.into_iter().map(|z| z / norm).collect());
        }
    }
    q
}
