//! Lax pair from the orthonormal frame, Nahm matrices and verification.

use crate::basis::BasisMatrix;
use crate::basis_direct::{basis_derivative, solve_basis_direct};
use crate::basis_lagrange::solve_all_lagrange;
use crate::error::{NahmError, Result};
use crate::inner_product::{default_zeta_samples, gram, normalize_with_derivative};
use crate::linalg::{eigenvalues, hermitian_eigen, multiset_distance, CMat, EquilibratedSolver, Mat};
use crate::poly::{eval, reflect};
use crate::scalar::{i_unit, lift, lower, real, Cx, Real};
use crate::spectral::Spectral;
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    #[default]
    Direct,
    Lagrange,
}

/// Distance below which `ζ` counts as sitting on a double point.
pub const DOUBLE_POINT_GUARD: f64 = 1e-8;
/// Radius of the averaging circle used for the pole-cancelled limit.
pub const LIMIT_RADIUS: f64 = 1e-3;

/// Orthonormal frame and its `s` derivative at one flow parameter.
#[derive(Clone, Debug)]
pub struct Frame<R: Real> {
    pub s: f64,
    pub q: BasisMatrix<R>,
    pub qhat: BasisMatrix<R>,
    pub qhat_dot: BasisMatrix<R>,
    pub norms: Vec<R>,
}

pub fn frame<R: Real>(sp: &Spectral<R>, s: f64, solver: Solver) -> Result<Frame<R>> {
    if !(s > 0.0) {
        return Err(NahmError::NonPositiveS(s));
    }
    let q = match solver {
        Solver::Direct => solve_basis_direct(sp, s)?,
        Solver::Lagrange => solve_all_lagrange(sp, s)?,
    };
    let dq = basis_derivative(sp, &q)?;
    let (qhat, qhat_dot, norms) = normalize_with_derivative(sp, &q, &dq)?;
    Ok(Frame { s, q, qhat, qhat_dot, norms })
}

#[derive(Clone, Debug)]
pub struct LaxSample<R: Real> {
    pub zeta: Complex64,
    pub s: f64,
    pub l: Mat<R>,
    pub m: Mat<R>,
}

fn lax_exact<R: Real>(sp: &Spectral<R>, fr: &Frame<R>, zeta: Cx<R>) -> (Mat<R>, Mat<R>) {
    let n = sp.n;
    let qz = Mat::from_fn(n, n, |u, i| eval(&fr.qhat.rows[u][i], zeta));
    let qdz = Mat::from_fn(n, n, |u, i| eval(&fr.qhat_dot.rows[u][i], zeta));
    // inverse from orthonormality: Q⁻¹_{i v} = star(Q̂_{v i})(ζ) / ∏_{j≠i}(p_i − p_j)
    let qinv = Mat::from_fn(n, n, |i, v| {
        eval(&reflect(&fr.qhat.rows[v][i]), zeta) / sp.sheet_denominator(i, zeta)
    });
    let p: Vec<Cx<R>> = (0..n).map(|j| sp.p(j, zeta)).collect();
    let h: Vec<Cx<R>> = (0..n).map(|j| sp.h_plus(j, zeta)).collect();
    let lq = Mat::from_fn(n, n, |u, i| qz[(u, i)] * p[i]);
    let mq = Mat::from_fn(n, n, |u, i| -qdz[(u, i)] + qz[(u, i)] * h[i]);
    (&lq * &qinv, &mq * &qinv)
}

/// `L(ζ)` and `M(ζ)`. Near a double point the explicit formula has a
/// removable singularity; with `limit` set the value is taken as the mean
/// over a small circle, which is exact for polynomials of degree < 8.
pub fn lax_at<R: Real>(sp: &Spectral<R>, fr: &Frame<R>, zeta: Complex64, limit: bool) -> Result<LaxSample<R>> {
    if let Some((i, j, dist)) = sp.nearest_double_point(lift(zeta)) {
        if dist < DOUBLE_POINT_GUARD {
            if !limit {
                return Err(NahmError::ZetaTooCloseToDoublePoint { i, j, dist });
            }
            let k = 8;
            let mut l = Mat::zeros(sp.n, sp.n);
            let mut m = Mat::zeros(sp.n, sp.n);
            let w = R::one() / R::from_usize(k);
            for t in 0..k {
                let off = Complex64::from_polar(LIMIT_RADIUS, std::f64::consts::TAU * t as f64 / k as f64);
                let (lt, mt) = lax_exact(sp, fr, lift(zeta + off));
                l = &l + &lt.scale_real(w);
                m = &m + &mt.scale_real(w);
            }
            return Ok(LaxSample { zeta, s: fr.s, l, m });
        }
    }
    let (l, m) = lax_exact(sp, fr, lift(zeta));
    Ok(LaxSample { zeta, s: fr.s, l, m })
}

/// `(T0, T1, T2, T3)` at one flow parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct NahmData<R: Real = f64> {
    pub s: f64,
    pub t: [Mat<R>; 4],
}

impl<R: Real> NahmData<R> {
    pub fn n(&self) -> usize {
        self.t[0].rows()
    }

    pub fn to_f64(&self) -> NahmData<f64> {
        NahmData { s: self.s, t: std::array::from_fn(|k| self.t[k].to_f64()) }
    }

    /// Largest `||T + T†|| / ||T||` over the four matrices.
    pub fn antihermitian_residual(&self) -> f64 {
        self.t
            .iter()
            .map(|t| (t + &t.adjoint()).norm() / t.norm().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }

    /// Residuals of `dT_i/ds + [T0,T_i] = [T_j,T_k]` given the derivatives.
    pub fn equation_residuals(&self, dt: &[Mat<R>; 4]) -> [f64; 3] {
        let [t0, t1, t2, t3] = &self.t;
        let r = |d: &Mat<R>, ti: &Mat<R>, tj: &Mat<R>, tk: &Mat<R>| {
            (&(d + &t0.commutator(ti)) - &tj.commutator(tk)).norm()
        };
        [r(&dt[1], t1, t2, t3), r(&dt[2], t2, t3, t1), r(&dt[3], t3, t1, t2)]
    }
}

/// Nahm matrices from `L(0)` and `M(0)`.
pub fn from_lax_at_zero<R: Real>(s: f64, l0: &Mat<R>, m0: &Mat<R>) -> NahmData<R> {
    let half = real(R::from_f64(0.5));
    let ih = i_unit::<R>() * half;
    let la = l0.adjoint();
    let ma = m0.adjoint();
    NahmData {
        s,
        t: [
            (&(m0 - &ma)).scale(half),
            (&(l0 + &la)).scale(ih),
            (&(l0 - &la)).scale(half),
            (&(m0 + &ma)).scale(ih),
        ],
    }
}

pub fn nahm_from_frame<R: Real>(sp: &Spectral<R>, fr: &Frame<R>) -> Result<NahmData<R>> {
    let lx = lax_at(sp, fr, Complex64::zero(), false)?;
    Ok(from_lax_at_zero(fr.s, &lx.l, &lx.m))
}

pub fn nahm_matrices<R: Real>(sp: &Spectral<R>, s: f64) -> Result<NahmData<R>> {
    nahm_matrices_with(sp, s, Solver::Direct)
}

pub fn nahm_matrices_with<R: Real>(sp: &Spectral<R>, s: f64, solver: Solver) -> Result<NahmData<R>> {
    let fr = frame(sp, s, solver)?;
    nahm_from_frame(sp, &fr)
}

/// Default finite-difference step.
pub fn default_fd_step(s: f64) -> f64 {
    1e-5 * s.max(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub nahm_residuals: [f64; 3],
    /// `max ||dL/ds − [L, M]||` over the samples, relative to `||L|| ||M||`.
    pub lax_residual: f64,
    /// Reality of `L`, relative.
    pub reality_residual: f64,
    /// Reality of `M` through the transition between patches, relative.
    pub reality_residual_m: f64,
    /// `[cubic coefficient of L, quadratic coefficient of M]`, relative.
    pub degree_residuals: [f64; 2],
    /// Eigenvalues of `L(ζ)` against `{p_j(ζ)}`, relative.
    pub spectrum_residual: f64,
    /// `max |Gram − Id|`.
    pub gram_residual: f64,
    /// Relative spread of the pairings across the samples.
    pub zeta_spread: f64,
    pub antihermitian_residual: f64,
}

impl VerificationReport {
    pub fn max_nahm(&self) -> f64 {
        self.nahm_residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Central-difference derivatives of the Nahm matrices.
pub fn nahm_derivative_fd<R: Real>(sp: &Spectral<R>, s: f64, h: f64, solver: Solver) -> Result<[Mat<R>; 4]> {
    if s - h <= 0.0 {
        return Err(NahmError::NonPositiveS(s - h));
    }
    let tp = nahm_matrices_with(sp, s + h, solver)?;
    let tm = nahm_matrices_with(sp, s - h, solver)?;
    let inv = real(R::one() / (R::from_f64(s + h) - R::from_f64(s - h)));
    Ok(std::array::from_fn(|k| (&tp.t[k] - &tm.t[k]).scale(inv)))
}

pub fn nahm_residuals<R: Real>(sp: &Spectral<R>, s: f64, h: f64, solver: Solver) -> Result<[f64; 3]> {
    let t = nahm_matrices_with(sp, s, solver)?;
    let dt = nahm_derivative_fd(sp, s, h, solver)?;
    Ok(t.equation_residuals(&dt))
}

/// Coefficient of `ζ^d` of the degree-`d` interpolant through the nodes,
/// entrywise, via a Vandermonde solve.
fn top_coefficient<R: Real>(nodes: &[Complex64], values: &[Mat<R>]) -> Mat<R> {
    let k = nodes.len();
    let v = Mat::<R>::from_fn(k, k, |i, j| {
        let z: Cx<R> = lift(nodes[i]);
        let mut p = Cx::one();
        for _ in 0..j {
            p = p * z;
        }
        p
    });
    let solver = EquilibratedSolver::new(&v, 1).expect("distinct nodes");
    let (r, c) = (values[0].rows(), values[0].cols());
    Mat::from_fn(r, c, |a, b| {
        let rhs: Vec<Cx<R>> = values.iter().map(|m| m[(a, b)]).collect();
        solver.solve(&rhs)[k - 1]
    })
}

pub fn residuals<R: Real>(sp: &Spectral<R>, s: f64, fd_step: f64, samples: &[Complex64]) -> Result<VerificationReport> {
    residuals_with(sp, s, fd_step, samples, Solver::Direct)
}

pub fn residuals_with<R: Real>(
    sp: &Spectral<R>,
    s: f64,
    fd_step: f64,
    samples: &[Complex64],
    solver: Solver,
) -> Result<VerificationReport> {
    let n = sp.n;
    let fr = frame(sp, s, solver)?;
    let frp = frame(sp, s + fd_step, solver)?;
    let frm = frame(sp, s - fd_step, solver)?;
    let t = nahm_from_frame(sp, &fr)?;
    let tp = nahm_from_frame(sp, &frp)?;
    let tm = nahm_from_frame(sp, &frm)?;
    let inv = real(R::one() / (R::from_f64(s + fd_step) - R::from_f64(s - fd_step)));
    let dt: [Mat<R>; 4] = std::array::from_fn(|k| (&tp.t[k] - &tm.t[k]).scale(inv));
    let nahm_res = t.equation_residuals(&dt);

    let mut lax_res: f64 = 0.0;
    let mut real_l: f64 = 0.0;
    let mut real_m: f64 = 0.0;
    let mut spec: f64 = 0.0;
    for &z in samples {
        let a = lax_at(sp, &fr, z, true)?;
        let ap = lax_at(sp, &frp, z, true)?;
        let am = lax_at(sp, &frm, z, true)?;
        let dl = (&ap.l - &am.l).scale(inv);
        let comm = a.l.commutator(&a.m);
        let scale = (a.l.norm() * a.m.norm()).max(a.l.norm()).max(f64::MIN_POSITIVE);
        lax_res = lax_res.max((&dl - &comm).norm() / scale);

        let zr: Cx<R> = lift(z);
        let anti = lower(-Cx::<R>::one() / zr.conj());
        let b = lax_at(sp, &fr, anti, true)?;
        let z2 = zr * zr;
        let l_over = a.l.scale(Cx::<R>::one() / z2);
        let rl = &b.l.adjoint() + &l_over;
        real_l = real_l.max(rl.norm() / l_over.norm().max(f64::MIN_POSITIVE));
        let l_over1 = a.l.scale(Cx::<R>::one() / zr);
        let rm = &(&b.m.adjoint() + &a.m) + &l_over1;
        let mscale = a.m.norm().max(l_over1.norm()).max(f64::MIN_POSITIVE);
        real_m = real_m.max(rm.norm() / mscale);

        let ev = eigenvalues(&a.l.to_f64());
        let pj: Vec<Complex64> = (0..n).map(|j| lower(sp.p(j, zr))).collect();
        let pscale = pj.iter().map(|v| v.norm()).fold(1.0, f64::max);
        spec = spec.max(multiset_distance(&ev, &pj) / pscale);
    }

    // degree checks on a circle of radius 0.7 (not sample-dependent)
    let ring = |k: usize, phase: f64| -> Vec<Complex64> {
        (0..k)
            .map(|t| Complex64::from_polar(0.7, phase + std::f64::consts::TAU * t as f64 / k as f64))
            .collect()
    };
    let nodes_l = ring(4, 0.31);
    let nodes_m = ring(3, 0.47);
    let ls: Vec<Mat<R>> = nodes_l.iter().map(|&z| lax_at(sp, &fr, z, true).map(|x| x.l)).collect::<Result<_>>()?;
    let ms: Vec<Mat<R>> = nodes_m.iter().map(|&z| lax_at(sp, &fr, z, true).map(|x| x.m)).collect::<Result<_>>()?;
    let lscale = ls.iter().map(|m| m.norm()).fold(f64::MIN_POSITIVE, f64::max);
    let mscale = ms.iter().map(|m| m.norm()).fold(f64::MIN_POSITIVE, f64::max);
    let deg_l = top_coefficient(&nodes_l, &ls).norm() / lscale;
    let deg_m = top_coefficient(&nodes_m, &ms).norm() / mscale;

    let g = gram(&fr.qhat, sp, samples)?;

    Ok(VerificationReport {
        nahm_residuals: nahm_res,
        lax_residual: lax_res,
        reality_residual: real_l,
        reality_residual_m: real_m,
        degree_residuals: [deg_l, deg_m],
        spectrum_residual: spec,
        gram_residual: g.identity_residual(),
        zeta_spread: g.zeta_spread,
        antihermitian_residual: t.antihermitian_residual(),
    })
}

/// Default verification samples for a configuration.
pub fn verification_samples<R: Real>(sp: &Spectral<R>, seed: u64) -> Vec<Complex64> {
    default_zeta_samples(&sp.to_f64(), seed, 5)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub s_small: f64,
    /// Eigenvalues of `−2i s T3` at `s_small`, descending.
    pub small_eigenvalues: Vec<f64>,
    /// Largest deviation from `n−1, n−3, …, −(n−1)`.
    pub small_eigenvalue_error: f64,
    /// `||Σ_j (2 s T_j)² + (n²−1) Id||` at `s_small`.
    pub casimir_residual: f64,
    /// The two large-`s` samples.
    pub s_large: [f64; 2],
    /// `||T_j(s) − i diag(τ_j)||` per axis at each large sample.
    pub axis_deviation: [[f64; 3]; 2],
    /// `max_j ||T_j(s) − i diag(τ_j)||` at each large sample.
    pub large_deviation: [f64; 2],
    /// `ln(d1/d2)/(s2 − s1)`.
    pub decay_exponent: f64,
}

/// Limits at both ends of the flow. The decay exponent is fitted from
/// `0.75·s_large` and `s_large`.
pub fn boundary_report<R: Real>(sp: &Spectral<R>, s_small: f64, s_large: f64) -> Result<BoundaryReport> {
    let n = sp.n;
    let t = nahm_matrices(sp, s_small)?;
    let small = t.to_f64();
    let h = small.t[3].scale(Complex64::new(0.0, -2.0 * s_small));
    let (mut ev, _) = hermitian_eigen(&h);
    ev.reverse();
    let err = ev
        .iter()
        .enumerate()
        .map(|(k, v)| (v - (n as f64 - 1.0 - 2.0 * k as f64)).abs())
        .fold(0.0, f64::max);
    let two_s = real(R::from_f64(2.0 * s_small));
    let mut cas = Mat::<R>::identity(n).scale_real(R::from_usize(n * n - 1));
    for j in 1..4 {
        let m = t.t[j].scale(two_s);
        cas = &cas + &(&m * &m);
    }

    let s_pair = [0.75 * s_large, s_large];
    let mut dev = [0.0; 2];
    let mut axis = [[0.0; 3]; 2];
    for (k, &sv) in s_pair.iter().enumerate() {
        let tl = nahm_matrices(sp, sv)?.to_f64();
        for j in 0..3 {
            let target = CMat::diag(
                &sp.points.iter().map(|p| Complex64::new(0.0, p[j])).collect::<Vec<_>>(),
            );
            axis[k][j] = (&tl.t[j + 1] - &target).norm();
        }
        dev[k] = axis[k].iter().copied().fold(0.0, f64::max);
    }
    let decay = (dev[0] / dev[1]).ln() / (s_pair[1] - s_pair[0]);
    Ok(BoundaryReport {
        s_small,
        small_eigenvalues: ev,
        small_eigenvalue_error: err,
        casimir_residual: cas.norm(),
        s_large: s_pair,
        axis_deviation: axis,
        large_deviation: dev,
        decay_exponent: decay,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::MonopoleConfig;
    use qd::Quad;

    fn sp<R: Real>(points: Vec<[f64; 3]>) -> Spectral<R> {
        Spectral::new(&MonopoleConfig::new(points).unwrap()).unwrap()
    }

    #[test]
    fn single_point() {
        let s1 = sp::<f64>(vec![[0.4, -1.2, 0.7]]);
        let t = nahm_matrices(&s1, 1.3).unwrap();
        assert_eq!(t.t[0][(0, 0)], Complex64::zero());
        assert!((t.t[1][(0, 0)] - Complex64::new(0.0, 0.4)).norm() < 1e-15);
        assert!((t.t[2][(0, 0)] - Complex64::new(0.0, -1.2)).norm() < 1e-15);
        assert!((t.t[3][(0, 0)] - Complex64::new(0.0, 0.7)).norm() < 1e-15);
        let fr = frame(&s1, 1.3, Solver::Direct).unwrap();
        let lx = lax_at(&s1, &fr, Complex64::zero(), false).unwrap();
        assert!((lx.l[(0, 0)] - Complex64::new(0.4, -1.2)).norm() < 1e-15);
        assert!((lx.m[(0, 0)] - Complex64::new(0.7, 0.0)).norm() < 1e-15);
        let z = verification_samples(&s1, 0);
        let rep = residuals(&s1, 1.3, 1e-5, &z).unwrap();
        assert!(rep.max_nahm() < 1e-12);
    }

    #[test]
    fn e2_t1_at_s1() {
        let s2 = sp::<Quad>(vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]);
        let t = nahm_matrices(&s2, 1.0).unwrap().to_f64();
        let off = 1.0 / 2f64.sinh();
        let want = [[1.0, -off], [-off, -1.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((t.t[1][(i, j)] - Complex64::new(0.0, want[i][j])).norm() < 1e-14);
            }
        }
        assert!((off - 0.275721).abs() < 1e-6);
        assert!(t.antihermitian_residual() < 1e-15);
    }

    #[test]
    fn e2_spectrum_at_point_three() {
        let s2 = sp::<f64>(vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]);
        let fr = frame(&s2, 1.0, Solver::Direct).unwrap();
        let lx = lax_at(&s2, &fr, Complex64::new(0.3, 0.0), false).unwrap();
        let ev = eigenvalues(&lx.l);
        assert!(multiset_distance(&ev, &[Complex64::new(0.91, 0.0), Complex64::new(-0.91, 0.0)]) < 1e-12);
    }

    #[test]
    fn e2_residuals() {
        let s2 = sp::<Quad>(vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]);
        let z = verification_samples(&s2, 1);
        let rep = residuals(&s2, 1.0, 1e-5, &z).unwrap();
        assert!(rep.max_nahm() < 1e-6, "{rep:?}");
        assert!(rep.degree_residuals[0] < 1e-20 && rep.degree_residuals[1] < 1e-20, "{rep:?}");
        // ζ and −1/ζ̄ are both rounded to f64 before lifting
        assert!(rep.reality_residual < 1e-14 && rep.reality_residual_m < 1e-14, "{rep:?}");
        assert!(rep.spectrum_residual < 1e-13);
        assert!(rep.gram_residual < 1e-20);
        assert!(rep.lax_residual < 1e-8);
    }

    #[test]
    fn limit_mode_at_double_point() {
        let h = 3f64.sqrt() / 2.0;
        let s3 = sp::<Quad>(vec![[1.0, 0.0, 0.0], [-0.5, h, 0.0], [-0.5, -h, 0.0]]);
        let fr = frame(&s3, 2.0, Solver::Direct).unwrap();
        let a12 = lower(s3.a[0][1]);
        assert!(matches!(
            lax_at(&s3, &fr, a12, false),
            Err(NahmError::ZetaTooCloseToDoublePoint { .. })
        ));
        let at = lax_at(&s3, &fr, a12, true).unwrap();
        // compare with a nearby regular evaluation plus the quadratic's slope
        let near = lax_at(&s3, &fr, a12 + Complex64::new(1e-6, 0.0), false).unwrap();
        assert!((&at.l - &near.l).norm() < 1e-5 * at.l.norm());
    }

    #[test]
    fn equilateral_degree_residual() {
        let h = 3f64.sqrt() / 2.0;
        let s3 = sp::<Quad>(vec![[1.0, 0.0, 0.0], [-0.5, h, 0.0], [-0.5, -h, 0.0]]);
        let z = verification_samples(&s3, 2);
        let rep = residuals(&s3, 2.0, 1e-5, &z).unwrap();
        assert!(rep.degree_residuals[0] < 1e-8);
    }

    #[test]
    fn e2_boundary() {
        let s2 = sp::<Quad>(vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]);
        let b = boundary_report(&s2, 1e-3, 8.0).unwrap();
        assert!(b.small_eigenvalue_error < 1e-2, "{b:?}");
        assert!(b.casimir_residual < 5e-2 * 3.0);
        // only the off-diagonal pair of T1 survives
        let want = 2f64.sqrt() / 16f64.sinh();
        assert!((b.axis_deviation[1][0] - want).abs() < 1e-6 * want, "{b:?}");
        assert!((b.decay_exponent - 2.0).abs() < 1e-3, "{b:?}");
    }
}
