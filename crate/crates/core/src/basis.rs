//! Basis rows of the line-bundle sections: `rows[l][j]` holds the
//! coefficients (ascending degree) of the sheet-`j` polynomial of row `l`.

use crate::poly::{eval, Poly};
use crate::scalar::{lift, lower, modulus, real, Cx, Real};
use crate::spectral::Spectral;
use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

/// One row: a polynomial per sheet at a fixed flow parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyTuple {
    pub entries: Vec<Poly>,
    pub s: f64,
}

impl PolyTuple {
    pub fn eval(&self, zeta: Complex64) -> Vec<Complex64> {
        self.entries.iter().map(|p| p.eval(zeta)).collect()
    }

    pub fn coefficients(&self) -> Vec<Vec<Complex64>> {
        self.entries.iter().map(|p| p.coefficients.clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasisMatrix<R: Real> {
    pub s: f64,
    pub rows: Vec<Vec<Vec<Cx<R>>>>,
    pub normalized: bool,
}

impl<R: Real> BasisMatrix<R> {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Constant basis for a single point.
    pub fn trivial(s: f64) -> Self {
        BasisMatrix { s, rows: vec![vec![vec![Cx::new(R::one(), R::zero())]]], normalized: false }
    }

    /// Coefficient vector of row `l` in the layout `k*n + j`.
    pub fn row_vector(&self, l: usize) -> Vec<Cx<R>> {
        let n = self.n();
        let mut v = vec![Cx::zero(); n * n];
        for j in 0..n {
            for k in 0..n {
                v[k * n + j] = self.rows[l][j][k];
            }
        }
        v
    }

    pub fn row_from_vector(v: &[Cx<R>], n: usize) -> Vec<Vec<Cx<R>>> {
        (0..n).map(|j| (0..n).map(|k| v[k * n + j]).collect()).collect()
    }

    /// Values of row `l` at `ζ`, one per sheet.
    pub fn eval_row(&self, l: usize, zeta: Cx<R>) -> Vec<Cx<R>> {
        self.rows[l].iter().map(|c| eval(c, zeta)).collect()
    }

    pub fn to_f64(&self) -> BasisMatrix<f64> {
        BasisMatrix {
            s: self.s,
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|c| c.iter().map(|&v| lower(v)).collect()).collect())
                .collect(),
            normalized: self.normalized,
        }
    }

    pub fn lift(b: &BasisMatrix<f64>) -> Self {
        BasisMatrix {
            s: b.s,
            rows: b
                .rows
                .iter()
                .map(|r| r.iter().map(|c| c.iter().map(|&v| lift(v)).collect()).collect())
                .collect(),
            normalized: b.normalized,
        }
    }

    pub fn row_tuple(&self, l: usize) -> PolyTuple {
        PolyTuple {
            entries: self.rows[l]
                .iter()
                .map(|c| Poly::new(c.iter().map(|&v| lower(v)).collect()))
                .collect(),
            s: self.s,
        }
    }

    pub fn max_coefficient(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.iter().flat_map(|c| c.iter()))
            .map(|v| modulus(*v).to_f64())
            .fold(0.0, f64::max)
    }

    /// Largest `|Q_i(a_ij) − e^{−s r_ij} Q_j(a_ij)|` over rows and pairs,
    /// relative to the largest value involved.
    pub fn matching_residual(&self, sp: &Spectral<R>) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for l in 0..n {
            let mut scale: f64 = 0.0;
            let mut res: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let a = sp.a[i][j];
                    let qi = eval(&self.rows[l][i], a);
                    let qj = eval(&self.rows[l][j], a);
                    let w = real((-R::from_f64(self.s) * sp.r[i][j]).exp());
                    res = res.max(modulus(qi - w * qj).to_f64());
                    scale = scale.max(modulus(qi).to_f64()).max(modulus(qj).to_f64());
                }
            }
            worst = worst.max(res / scale.max(f64::MIN_POSITIVE));
        }
        worst
    }

    /// Largest deviation from the monic/vanishing pattern of unnormalized rows.
    pub fn pattern_residual(&self) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for l in 0..n {
            for i in 0..n {
                let top = self.rows[l][i][n - 1];
                let want = if i == l { 1.0 } else { 0.0 };
                if i <= l {
                    worst = worst.max(modulus(top - real(R::from_f64(want))).to_f64());
                }
                if i > l {
                    worst = worst.max(modulus(self.rows[l][i][0]).to_f64());
                }
            }
        }
        worst
    }
}

/// Largest coefficient difference relative to the largest coefficient.
pub fn relative_difference<R: Real>(a: &BasisMatrix<R>, b: &BasisMatrix<R>) -> f64 {
    let mut diff: f64 = 0.0;
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        for (ca, cb) in ra.iter().zip(rb) {
            for (x, y) in ca.iter().zip(cb) {
                diff = diff.max(modulus(*x - *y).to_f64());
            }
        }
    }
    diff / a.max_coefficient().max(b.max_coefficient()).max(f64::MIN_POSITIVE)
}

/// Coefficientwise relative difference, with each row measured against its
/// own sup norm. Rows differ in scale by factors like `e^{s r}`.
pub fn row_relative_difference<R: Real>(a: &BasisMatrix<R>, b: &BasisMatrix<R>) -> f64 {
    let mut worst: f64 = 0.0;
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        let mut diff: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (ca, cb) in ra.iter().zip(rb) {
            for (x, y) in ca.iter().zip(cb) {
                diff = diff.max(modulus(*x - *y).to_f64());
                scale = scale.max(modulus(*x).to_f64()).max(modulus(*y).to_f64());
            }
        }
        worst = worst.max(diff / scale.max(f64::MIN_POSITIVE));
    }
    worst
}
