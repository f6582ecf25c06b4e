//! Hermitian pairing of polynomial tuples, Gram matrices and normalization.

use crate::basis::BasisMatrix;
use crate::error::{NahmError, Result};
use crate::linalg::{CMat, Mat};
use crate::poly::{eval, reflect};
use crate::scalar::{lift, lower, modulus, real, Cx, Real};
use crate::spectral::Spectral;
use num_complex::Complex64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const SAMPLE_RADIUS: f64 = 0.7;
pub const SAMPLE_CLEARANCE: f64 = 1e-3;

fn padded<R: Real>(c: &[Cx<R>], n: usize) -> Vec<Cx<R>> {
    let mut v = c.to_vec();
    v.resize(n, Cx::zero());
    v
}

/// Pairing of two tuples at a single `ζ`:
/// `Σ_i P_i(ζ) (−ζ)^{n−1} conj(R_i(−1/ζ̄)) / ∏_{j≠i} (p_i(ζ) − p_j(ζ))`.
pub fn pairing_at<R: Real>(sp: &Spectral<R>, p: &[Vec<Cx<R>>], r: &[Vec<Cx<R>>], zeta: Cx<R>) -> Result<Cx<R>> {
    let n = sp.n;
    let mut total = Cx::zero();
    for i in 0..n {
        let den = sp.sheet_denominator(i, zeta);
        if modulus(den).to_f64() <= 1e-300 {
            return Err(NahmError::ZetaAtSingularity(format!("{}", lower(zeta))));
        }
        let star = reflect(&padded(&r[i], n));
        total = total + eval(&p[i], zeta) * eval(&star, zeta) / den;
    }
    Ok(total)
}

/// `ζ` samples on a circle of radius 0.7 with seeded angles, kept at least
/// `1e-3` away from double points and from zeros of the sheet denominators.
pub fn default_zeta_samples(sp: &Spectral<f64>, seed: u64, count: usize) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5a5a_1234);
    let mut out = Vec::with_capacity(count);
    let mut guard = 0;
    while out.len() < count && guard < 10_000 {
        guard += 1;
        let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let z = Complex64::from_polar(SAMPLE_RADIUS, theta);
        let near = sp.nearest_double_point(z).map_or(f64::INFINITY, |d| d.2);
        if near < SAMPLE_CLEARANCE {
            continue;
        }
        if (0..sp.n).any(|i| sp.sheet_denominator(i, z).norm() < SAMPLE_CLEARANCE) {
            continue;
        }
        out.push(z);
    }
    out
}

/// Pairing averaged over samples, with the relative spread of the samples.
/// The spread is measured against `sqrt(|⟨p,p⟩| |⟨r,r⟩|)`, which stays
/// meaningful when the pairing itself vanishes.
pub fn pairing_sampled<R: Real>(
    sp: &Spectral<R>,
    p: &[Vec<Cx<R>>],
    r: &[Vec<Cx<R>>],
    samples: &[Complex64],
) -> Result<(Complex64, f64)> {
    if samples.is_empty() {
        return Err(NahmError::InvalidConfig("no zeta samples".into()));
    }
    let mut vals = Vec::with_capacity(samples.len());
    let mut npp: f64 = 0.0;
    let mut nrr: f64 = 0.0;
    for &z in samples {
        let zr = lift::<R>(z);
        vals.push(lower(pairing_at(sp, p, r, zr)?));
        npp = npp.max(lower(pairing_at(sp, p, p, zr)?).norm());
        nrr = nrr.max(lower(pairing_at(sp, r, r, zr)?).norm());
    }
    let mean = vals.iter().sum::<Complex64>() / vals.len() as f64;
    let scale = (npp * nrr).sqrt().max(f64::MIN_POSITIVE);
    let spread = vals.iter().map(|v| (v - mean).norm()).fold(0.0, f64::max) / scale;
    Ok((mean, spread))
}

/// Averaged pairing that fails when the samples disagree by more than `tol`.
pub fn pairing<R: Real>(
    sp: &Spectral<R>,
    p: &[Vec<Cx<R>>],
    r: &[Vec<Cx<R>>],
    samples: &[Complex64],
    tol: f64,
) -> Result<Complex64> {
    let (mean, spread) = pairing_sampled(sp, p, r, samples)?;
    if spread > tol {
        return Err(NahmError::InconsistentSpread { spread, tol });
    }
    Ok(mean)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub gram: Vec<Vec<Complex64>>,
    pub zeta_spread: f64,
}

impl GramReport {
    pub fn matrix(&self) -> CMat {
        CMat::from_nested(&self.gram)
    }

    /// Largest entry of `gram − Id`.
    pub fn identity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, row) in self.gram.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let want = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::zero() };
                worst = worst.max((v - want).norm());
            }
        }
        worst
    }

    pub fn hermitian_residual(&self) -> f64 {
        let m = self.matrix();
        (&m - &m.adjoint()).max_abs()
    }
}

pub fn gram<R: Real>(basis: &BasisMatrix<R>, sp: &Spectral<R>, samples: &[Complex64]) -> Result<GramReport> {
    let n = basis.n();
    let mut g = vec![vec![Complex64::zero(); n]; n];
    let mut spread: f64 = 0.0;
    for u in 0..n {
        for v in 0..n {
            let (mean, sp_uv) = pairing_sampled(sp, &basis.rows[u], &basis.rows[v], samples)?;
            g[u][v] = mean;
            spread = spread.max(sp_uv);
        }
    }
    Ok(GramReport { gram: g, zeta_spread: spread })
}

/// Row norms `⟨q_l, q_l⟩` evaluated at `ζ = 0`. For rows of conditions (A)
/// only the sheet-`l` term survives there, so the sum has no cancellation.
pub fn norms_at_zero<R: Real>(sp: &Spectral<R>, basis: &BasisMatrix<R>) -> Result<Vec<R>> {
    let zero = Cx::zero();
    let mut out = Vec::with_capacity(basis.n());
    for l in 0..basis.n() {
        let v = pairing_at(sp, &basis.rows[l], &basis.rows[l], zero)?;
        if !(v.re > R::zero()) || !v.re.to_f64().is_finite() {
            return Err(NahmError::NonPositiveNorm { row: l, value: v.re.to_f64() });
        }
        out.push(v.re);
    }
    Ok(out)
}

fn scale_rows<R: Real>(basis: &BasisMatrix<R>, f: &[R]) -> BasisMatrix<R> {
    BasisMatrix {
        s: basis.s,
        rows: basis
            .rows
            .iter()
            .zip(f)
            .map(|(row, &c)| row.iter().map(|p| p.iter().map(|&v| v * real(c)).collect()).collect())
            .collect(),
        normalized: true,
    }
}

/// Divides each row by the positive square root of its norm.
pub fn normalize<R: Real>(basis: &BasisMatrix<R>, sp: &Spectral<R>) -> Result<BasisMatrix<R>> {
    let norms = norms_at_zero(sp, basis)?;
    let f: Vec<R> = norms.iter().map(|&v| R::one() / v.sqrt()).collect();
    Ok(scale_rows(basis, &f))
}

/// Normalized basis and its `s` derivative,
/// `Q̂' = Q̇/√N − Q N'/(2 N^{3/2})` with `N' = ⟨Q̇, Q⟩ + ⟨Q, Q̇⟩`.
/// `Q̇` leaves the section space, so the two pairings are not conjugate
/// and both are needed.
pub fn normalize_with_derivative<R: Real>(
    sp: &Spectral<R>,
    basis: &BasisMatrix<R>,
    dbasis: &BasisMatrix<R>,
) -> Result<(BasisMatrix<R>, BasisMatrix<R>, Vec<R>)> {
    let norms = norms_at_zero(sp, basis)?;
    let zero = Cx::zero();
    let two = R::from_f64(2.0);
    let mut qhat_dot = Vec::with_capacity(basis.n());
    for l in 0..basis.n() {
        let dn = (pairing_at(sp, &dbasis.rows[l], &basis.rows[l], zero)?
            + pairing_at(sp, &basis.rows[l], &dbasis.rows[l], zero)?)
            .re;
        let rt = norms[l].sqrt();
        let a = R::one() / rt;
        let b = dn / (two * norms[l] * rt);
        let row: Vec<Vec<Cx<R>>> = basis.rows[l]
            .iter()
            .zip(&dbasis.rows[l])
            .map(|(q, dq)| q.iter().zip(dq).map(|(&v, &dv)| dv * real(a) - v * real(b)).collect())
            .collect();
        qhat_dot.push(row);
    }
    let f: Vec<R> = norms.iter().map(|&v| R::one() / v.sqrt()).collect();
    let qhat = scale_rows(basis, &f);
    Ok((qhat, BasisMatrix { s: basis.s, rows: qhat_dot, normalized: true }, norms))
}

/// `U(s,ζ)` with entries `Q̂_{lj}(ζ) e^{−s h_j⁺(ζ)}`.
pub fn to_section_frame(qhat: &BasisMatrix<f64>, sp: &Spectral<f64>, zeta: Complex64) -> CMat {
    let n = qhat.n();
    let s = qhat.s;
    Mat::from_fn(n, n, |l, j| eval(&qhat.rows[l][j], zeta) * (-s * sp.h_plus(j, zeta)).exp())
}
