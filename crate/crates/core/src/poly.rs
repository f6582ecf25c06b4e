//! Complex polynomials in ascending-coefficient form.

use crate::error::{NahmError, Result};
use crate::scalar::{abs1, Cx, Real};
use crate::spectral::Spectral;
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

/// Horner evaluation of `Σ c_k ζ^k`.
#[inline]
pub fn eval<R: Real>(c: &[Cx<R>], zeta: Cx<R>) -> Cx<R> {
    let mut acc = Cx::zero();
    for &v in c.iter().rev() {
        acc = acc * zeta + v;
    }
    acc
}

/// Monic polynomial with the given roots.
pub fn from_roots<R: Real>(roots: &[Cx<R>]) -> Vec<Cx<R>> {
    let mut c = vec![Cx::one()];
    for &t in roots {
        c = mul_linear(&c, t);
    }
    c
}

/// Multiplies by `(ζ − t)`.
pub fn mul_linear<R: Real>(c: &[Cx<R>], t: Cx<R>) -> Vec<Cx<R>> {
    let mut out = vec![Cx::zero(); c.len() + 1];
    for (k, &v) in c.iter().enumerate() {
        out[k + 1] = out[k + 1] + v;
        out[k] = out[k] - v * t;
    }
    out
}

pub fn mul<R: Real>(a: &[Cx<R>], b: &[Cx<R>]) -> Vec<Cx<R>> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Cx::zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = out[i + j] + x * y;
        }
    }
    out
}

/// `acc += w * p`, growing `acc` if needed.
pub fn add_scaled<R: Real>(acc: &mut Vec<Cx<R>>, p: &[Cx<R>], w: Cx<R>) {
    if acc.len() < p.len() {
        acc.resize(p.len(), Cx::zero());
    }
    for (a, &v) in acc.iter_mut().zip(p) {
        *a = *a + v * w;
    }
}

/// Lagrange basis polynomial `∏_{m≠t} (ζ − x_m)/(x_t − x_m)`.
pub fn lagrange_basis<R: Real>(nodes: &[Cx<R>], t: usize) -> Vec<Cx<R>> {
    let mut c = vec![Cx::one()];
    for (m, &x) in nodes.iter().enumerate() {
        if m == t {
            continue;
        }
        let inv: Cx<R> = Cx::<R>::one() / (nodes[t] - x);
        c = mul_linear(&c, x).into_iter().map(|v| v * inv).collect();
    }
    c
}

/// Coefficients of `(−ζ)^{d} conj(R(−1/ζ̄))` for a length-`d+1` vector:
/// entry m is `(−1)^m conj(c_{d−m})`.
pub fn reflect<R: Real>(c: &[Cx<R>]) -> Vec<Cx<R>> {
    let d = c.len();
    (0..d)
        .map(|m| {
            let v = c[d - 1 - m].conj();
            if m % 2 == 1 {
                -v
            } else {
                v
            }
        })
        .collect()
}

/// Owned polynomial with an explicit degree bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    pub coefficients: Vec<Complex64>,
    pub degree_bound: usize,
}

pub const NEGLIGIBLE: f64 = 1e-300;

impl Poly {
    pub fn new(coefficients: Vec<Complex64>) -> Self {
        let degree_bound = coefficients.len().saturating_sub(1);
        Poly { coefficients, degree_bound }
    }

    pub fn zero(degree_bound: usize) -> Self {
        Poly { coefficients: vec![Complex64::zero(); degree_bound + 1], degree_bound }
    }

    pub fn eval(&self, zeta: Complex64) -> Complex64 {
        eval(&self.coefficients, zeta)
    }

    /// Degree after discarding negligible trailing coefficients; `None` for zero.
    pub fn degree(&self) -> Option<usize> {
        self.coefficients.iter().rposition(|c| c.norm() > NEGLIGIBLE)
    }

    pub fn is_zero(&self) -> bool {
        self.degree().is_none()
    }
}

pub fn eval_poly(p: &Poly, zeta: Complex64) -> Complex64 {
    p.eval(zeta)
}

/// Interpolating polynomial of degree `< nodes.len()`.
///
/// Values are first put through the barycentric weights to get Newton
/// divided differences, then the Newton form is expanded to monomials.
pub fn lagrange_interpolate(nodes: &[Complex64], values: &[Complex64]) -> Result<Poly> {
    assert_eq!(nodes.len(), values.len(), "node/value length mismatch");
    let m = nodes.len();
    if m == 0 {
        return Ok(Poly { coefficients: Vec::new(), degree_bound: 0 });
    }
    let scale = nodes.iter().map(|z| z.norm()).fold(1.0, f64::max);
    for i in 0..m {
        for j in i + 1..m {
            if (nodes[i] - nodes[j]).norm() <= 1e-14 * scale {
                return Err(NahmError::DuplicateNodes(i, j));
            }
        }
    }
    // Divided differences via barycentric weights of the leading subsets:
    // f[x0..xk] = Σ_{i≤k} f_i / ∏_{j≤k, j≠i} (x_i − x_j).
    let mut newton = Vec::with_capacity(m);
    let mut w = vec![Complex64::one(); m];
    for k in 0..m {
        if k > 0 {
            for i in 0..k {
                w[i] /= nodes[i] - nodes[k];
            }
            let mut wk = Complex64::one();
            for j in 0..k {
                wk /= nodes[k] - nodes[j];
            }
            w[k] = wk;
        }
        let mut acc = Complex64::zero();
        for i in 0..=k {
            acc += values[i] * w[i];
        }
        newton.push(acc);
    }
    // Expand Σ_k d_k ∏_{j<k} (ζ − x_j) by nested multiplication.
    let mut coeffs = vec![newton[m - 1]];
    for k in (0..m - 1).rev() {
        coeffs = mul_linear(&coeffs, nodes[k]);
        coeffs[0] += newton[k];
    }
    coeffs.truncate(m);
    Ok(Poly { coefficients: coeffs, degree_bound: m - 1 })
}

/// `A_k(ζ) = ∏_{j≠k} (ζ − a_kj)` for sheet `k` (0-based).
pub fn annihilator(sp: &Spectral<f64>, k: usize) -> Result<Poly> {
    if k >= sp.n {
        return Err(NahmError::IndexOutOfRange { index: k, n: sp.n });
    }
    Ok(Poly::new(sp.annihilator(k)))
}

/// Largest `|re|+|im|` among coefficients.
pub fn coeff_scale<R: Real>(c: &[Cx<R>]) -> f64 {
    c.iter().map(|v| abs1(*v).to_f64()).fold(0.0, f64::max)
}
