//! Basis rows from the reduced interpolation system: unknowns are the
//! values `Q_u(a_vu)` for `v < u` plus the leading constants `C_i`, `i > l`.

use crate::basis::BasisMatrix;
use crate::basis_direct::{enforce_pattern, singular_threshold};
use crate::error::{NahmError, Result};
use crate::linalg::{relative_sigma_min, EquilibratedSolver, Mat};
use crate::poly::{add_scaled, eval, lagrange_basis};
use crate::scalar::{real, Cx, Real};
use crate::spectral::Spectral;
use num_traits::{One, Zero};

/// Polynomial whose coefficients are affine in the unknowns:
/// `coeffs[k][u]` multiplies unknown `u`; the last column is the constant.
#[derive(Clone, Debug)]
pub struct AffinePoly<R: Real> {
    pub coeffs: Vec<Vec<Cx<R>>>,
}

impl<R: Real> AffinePoly<R> {
    fn zero(degree: usize, width: usize) -> Self {
        AffinePoly { coeffs: vec![vec![Cx::zero(); width]; degree] }
    }

    /// Affine form of the value at `ζ`.
    pub fn eval(&self, zeta: Cx<R>) -> Vec<Cx<R>> {
        let width = self.coeffs.first().map_or(0, |c| c.len());
        let mut out = vec![Cx::zero(); width];
        for k in (0..self.coeffs.len()).rev() {
            for (o, c) in out.iter_mut().zip(&self.coeffs[k]) {
                *o = *o * zeta + *c;
            }
        }
        out
    }

    fn add_outer(&mut self, poly: &[Cx<R>], affine: &[Cx<R>]) {
        for (k, &p) in poly.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            for (c, &a) in self.coeffs[k].iter_mut().zip(affine) {
                *c = *c + p * a;
            }
        }
    }

    /// Concrete polynomial for given unknown values.
    pub fn substitute(&self, x: &[Cx<R>]) -> Vec<Cx<R>> {
        self.coeffs
            .iter()
            .map(|row| {
                let m = x.len();
                let mut acc = row[m];
                for u in 0..m {
                    acc = acc + row[u] * x[u];
                }
                acc
            })
            .collect()
    }
}

/// Pairs `(v, u)` with `v < u`, ordered by `u` then `v`.
pub fn unknown_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for u in 0..n {
        for v in 0..u {
            out.push((v, u));
        }
    }
    out
}

/// Square system `A X = B` for row `l` together with the affine forms of
/// the sheet polynomials.
#[derive(Clone, Debug)]
pub struct ReducedSystem<R: Real> {
    pub l: usize,
    pub pairs: Vec<(usize, usize)>,
    /// Sheets whose leading constant is an unknown.
    pub c_tail: Vec<usize>,
    pub a: Mat<R>,
    pub b: Vec<Cx<R>>,
    pub sheets: Vec<AffinePoly<R>>,
}

impl<R: Real> ReducedSystem<R> {
    pub fn size(&self) -> usize {
        self.pairs.len() + self.c_tail.len()
    }
}

pub fn assemble_reduced_system<R: Real>(sp: &Spectral<R>, s: f64, l: usize) -> Result<ReducedSystem<R>> {
    let n = sp.n;
    if l >= n {
        return Err(NahmError::IndexOutOfRange { index: l, n });
    }
    let pairs = unknown_pairs(n);
    let c_tail: Vec<usize> = (l + 1..n).collect();
    let m = pairs.len() + c_tail.len();
    let pair_index = |v: usize, u: usize| pairs.iter().position(|&p| p == (v, u)).unwrap();
    let c_index = |i: usize| pairs.len() + (i - l - 1);
    let sr = R::from_f64(s);

    // Sheets in increasing order: values of earlier sheets at later double
    // points are already affine in the unknowns.
    let mut sheets: Vec<AffinePoly<R>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut q = AffinePoly::zero(n, m + 1);
        let ak = sp.annihilator(k);
        let mut unit = vec![Cx::zero(); m + 1];
        if k == l {
            unit[m] = Cx::one();
            q.add_outer(&ak, &unit);
        } else if k > l {
            unit[c_index(k)] = Cx::one();
            q.add_outer(&ak, &unit);
        }
        let others: Vec<usize> = (0..n).filter(|&j| j != k).collect();
        let nodes: Vec<Cx<R>> = others.iter().map(|&j| sp.a[k][j]).collect();
        for (t, &j) in others.iter().enumerate() {
            let w = real((-sr * sp.r[k][j]).exp());
            let basis: Vec<Cx<R>> = lagrange_basis(&nodes, t).into_iter().map(|c| c * w).collect();
            let value = if j > k {
                let mut e = vec![Cx::zero(); m + 1];
                e[pair_index(k, j)] = Cx::one();
                e
            } else {
                sheets[j].eval(sp.a[k][j])
            };
            q.add_outer(&basis, &value);
        }
        sheets.push(q);
    }

    let mut a = Mat::zeros(m, m);
    let mut b = vec![Cx::zero(); m];
    let mut row = 0;
    for &(v, u) in &pairs {
        let mut aff = sheets[u].eval(sp.a[v][u]);
        aff[pair_index(v, u)] = aff[pair_index(v, u)] - Cx::one();
        for c in 0..m {
            a[(row, c)] = aff[c];
        }
        b[row] = -aff[m];
        row += 1;
    }
    for &i in &c_tail {
        let aff = &sheets[i].coeffs[0];
        for c in 0..m {
            a[(row, c)] = aff[c];
        }
        b[row] = -aff[m];
        row += 1;
    }
    Ok(ReducedSystem { l, pairs, c_tail, a, b, sheets })
}

/// Row `l` of the conditions-(A) basis, coefficients per sheet.
pub fn solve_basis_lagrange<R: Real>(sp: &Spectral<R>, s: f64, l: usize) -> Result<Vec<Vec<Cx<R>>>> {
    if s < 0.0 || !s.is_finite() {
        return Err(NahmError::NonPositiveS(s));
    }
    let sys = assemble_reduced_system(sp, s, l)?;
    let m = sys.size();
    let x = if m == 0 {
        Vec::new()
    } else {
        let ratio = relative_sigma_min(&sys.a);
        if ratio < singular_threshold::<R>() {
            return Err(NahmError::SingularSystem { ratio });
        }
        EquilibratedSolver::new(&sys.a, 2)
            .map_err(|_| NahmError::SingularSystem { ratio: 0.0 })?
            .solve(&sys.b)
    };
    let mut row: Vec<Vec<Cx<R>>> = sys.sheets.iter().map(|q| q.substitute(&x)).collect();
    enforce_pattern(&mut row, l);
    Ok(row)
}

/// All rows via the reduced systems.
pub fn solve_all_lagrange<R: Real>(sp: &Spectral<R>, s: f64) -> Result<BasisMatrix<R>> {
    let rows = (0..sp.n).map(|l| solve_basis_lagrange(sp, s, l)).collect::<Result<Vec<_>>>()?;
    Ok(BasisMatrix { s, rows, normalized: false })
}

/// Sheet polynomials from the interpolation ansatz, given the values
/// `x[(v,u)] = Q_u(a_vu)` for `v < u` (ordered as [`unknown_pairs`]) and
/// the leading constants `c`.
pub fn reconstruct_from_values<R: Real>(sp: &Spectral<R>, s: f64, x: &[Cx<R>], c: &[Cx<R>]) -> Vec<Vec<Cx<R>>> {
    let n = sp.n;
    let pairs = unknown_pairs(n);
    assert_eq!(x.len(), pairs.len(), "one value per unordered pair");
    assert_eq!(c.len(), n, "one constant per sheet");
    let sr = R::from_f64(s);
    let mut out: Vec<Vec<Cx<R>>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut q: Vec<Cx<R>> = sp.annihilator(k).into_iter().map(|v| v * c[k]).collect();
        let others: Vec<usize> = (0..n).filter(|&j| j != k).collect();
        let nodes: Vec<Cx<R>> = others.iter().map(|&j| sp.a[k][j]).collect();
        for (t, &j) in others.iter().enumerate() {
            let value = if j > k {
                x[pairs.iter().position(|&p| p == (k, j)).unwrap()]
            } else {
                eval(&out[j], sp.a[k][j])
            };
            let w = real((-sr * sp.r[k][j]).exp()) * value;
            add_scaled(&mut q, &lagrange_basis(&nodes, t), w);
        }
        q.resize(n, Cx::zero());
        out.push(q);
    }
    out
}

/// Condition number proxy `||A|| / sigma_min` of the reduced system.
pub fn reduced_condition<R: Real>(sp: &Spectral<R>, s: f64, l: usize) -> Result<f64> {
    let sys = assemble_reduced_system(sp, s, l)?;
    if sys.size() == 0 {
        return Ok(1.0);
    }
    Ok(1.0 / relative_sigma_min(&sys.a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::row_relative_difference;
    use crate::basis_direct::solve_basis_direct;
    use crate::spectral::MonopoleConfig;
    use num_complex::Complex64;
    use qd::Quad;

    fn sp_of(points: Vec<[f64; 3]>) -> Spectral<f64> {
        Spectral::new(&MonopoleConfig::new(points).unwrap()).unwrap()
    }

    #[test]
    fn e2_rows_match_closed_form() {
        let sp = sp_of(vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]);
        let r1 = solve_basis_lagrange(&sp, 1.0, 0).unwrap();
        assert!((r1[0][0].re - 0.964028).abs() < 1e-6);
        assert!((r1[1][1].re - 0.265802).abs() < 1e-6);
        let r2 = solve_basis_lagrange(&sp, 1.0, 1).unwrap();
        assert!((r2[0][0].re + 0.275721).abs() < 1e-6);
        assert!((r2[1][0].re + 1.037314).abs() < 1e-6);
    }

    #[test]
    fn n2_system_has_two_unknowns_for_first_row() {
        let sp = sp_of(vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]);
        let sys = assemble_reduced_system(&sp, 1.0, 0).unwrap();
        assert_eq!(sys.size(), 2);
        assert_eq!(assemble_reduced_system(&sp, 1.0, 1).unwrap().size(), 1);
        let one = sp_of(vec![[0.0; 3]]);
        assert_eq!(assemble_reduced_system(&one, 1.0, 0).unwrap().size(), 0);
        assert_eq!(solve_basis_lagrange(&one, 1.0, 0).unwrap(), vec![vec![Complex64::one()]]);
    }

    #[test]
    fn n2_first_row_relations() {
        // Q1 = A1 + e^{-sr} Q2(a12); Q2 = C2 A2 + e^{-sr} Q1(a21)
        let sp = sp_of(vec![[0.3, -0.7, 0.4], [-0.5, 0.2, -0.6]]);
        let s = 0.8;
        let row = solve_basis_lagrange(&sp, s, 0).unwrap();
        let w = (-s * sp.r[0][1]).exp();
        let x = eval(&row[1], sp.a[0][1]);
        let a1 = sp.annihilator(0);
        assert!((row[0][0] - (a1[0] + w * x)).norm() < 1e-13);
        assert!((row[0][1] - a1[1]).norm() < 1e-13);
    }

    #[test]
    fn closed_form_n3_block() {
        let sp = sp_of(vec![[0.3, -0.7, 0.4], [-0.5, 0.2, -0.6], [0.9, 0.1, 0.05]]);
        let s = 0.7;
        let a = &sp.a;
        let r = &sp.r;
        let e = |x: f64| (-s * x).exp();
        let (a12, a13, a21, a23, a31, a32) = (a[0][1], a[0][2], a[1][0], a[1][2], a[2][0], a[2][1]);
        let (r12, r13, r23) = (r[0][1], r[0][2], r[1][2]);
        let mut p = [[Complex64::zero(); 3]; 3];
        p[0][0] = -1.0 + e(2.0 * r12) * (a21 - a13) / (a12 - a13) * (a12 - a23) / (a21 - a23);
        p[0][1] = e(r12 + r13) * (a21 - a12) / (a13 - a12) * (a12 - a23) / (a21 - a23);
        p[0][2] = e(r23) * (a12 - a21) / (a23 - a21);
        p[1][0] = e(r13 + r12) * (a31 - a13) / (a12 - a13) * (a13 - a32) / (a31 - a32)
            + e(r23 + 2.0 * r12) * (a32 - a23) / (a21 - a23) * (a21 - a13) / (a12 - a13) * (a13 - a31) / (a32 - a31);
        p[1][1] = -1.0
            + e(2.0 * r13) * (a31 - a12) / (a13 - a12) * (a13 - a32) / (a31 - a32)
            + e(r23 + r12 + r13) * (a32 - a23) / (a21 - a23) * (a21 - a12) / (a13 - a12) * (a13 - a31) / (a32 - a31);
        p[1][2] = e(2.0 * r23) * (a32 - a21) / (a23 - a21) * (a13 - a31) / (a32 - a31);
        p[2][0] = e(r13 + r12) * (a23 - a32) / (a31 - a32) * (a31 - a13) / (a12 - a13)
            + e(r23 + 2.0 * r12) * (a21 - a13) / (a12 - a13) * (a23 - a31) / (a32 - a31) * (a32 - a23) / (a21 - a23);
        p[2][1] = e(2.0 * r13) * (a23 - a32) / (a31 - a32) * (a31 - a12) / (a13 - a12)
            + e(r23 + r12 + r13) * (a21 - a12) / (a13 - a12) * (a32 - a23) / (a21 - a23) * (a23 - a31) / (a32 - a31);
        p[2][2] = -1.0 + e(2.0 * r23) * (a32 - a21) / (a23 - a21) * (a23 - a31) / (a32 - a31);
        let sys = assemble_reduced_system(&sp, s, 0).unwrap();
        assert_eq!(sys.pairs, vec![(0, 1), (0, 2), (1, 2)]);
        for i in 0..3 {
            for j in 0..3 {
                assert!((sys.a[(i, j)] - p[i][j]).norm() < 1e-12, "entry {i}{j}");
            }
        }
    }

    #[test]
    fn agrees_with_direct_solver() {
        let cfg = MonopoleConfig::new(vec![
            [0.3, -0.7, 0.4],
            [-0.5, 0.2, -0.6],
            [0.9, 0.1, 0.05],
            [-0.2, 0.8, 0.7],
            [0.6, -0.4, -0.9],
        ])
        .unwrap();
        let sp = Spectral::<Quad>::new(&cfg).unwrap();
        for &s in &[0.5, 2.0, 5.0] {
            let a = solve_all_lagrange(&sp, s).unwrap();
            let b = solve_basis_direct(&sp, s).unwrap();
            assert!(row_relative_difference(&a, &b) < 1e-20, "s={s}");
        }
    }

    #[test]
    fn reconstruction_identities() {
        let sp = sp_of(vec![[0.3, -0.7, 0.4], [-0.5, 0.2, -0.6], [0.9, 0.1, 0.05]]);
        let zero = vec![Complex64::zero(); 3];
        let mut c = vec![Complex64::zero(); 3];
        c[1] = Complex64::one();
        let q = reconstruct_from_values(&sp, 1.0, &zero, &c);
        assert!(q[0].iter().all(|v| v.norm() == 0.0));
        assert_eq!(q[1], sp.annihilator(1));

        let x = vec![Complex64::new(0.2, 0.1), Complex64::new(-0.4, 0.3), Complex64::new(0.7, -0.2)];
        let c = vec![Complex64::one(), Complex64::new(0.5, 0.5), Complex64::new(-0.1, 0.0)];
        let q = reconstruct_from_values(&sp, 1.0, &x, &c);
        for (t, &(v, u)) in unknown_pairs(3).iter().enumerate() {
            let w = (-sp.r[v][u]).exp();
            // Q_v(a_vu) = e^{-s r} Q_u(a_vu) = e^{-s r} x
            assert!((eval(&q[v], sp.a[v][u]) - w * x[t]).norm() < 1e-13);
        }
    }
}
