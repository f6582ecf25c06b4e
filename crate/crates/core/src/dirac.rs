//! Dirac zero modes on both sides of the transform.
//!
//! Nahm side: the fundamental matrix of the twisted linear problem built
//! from the orthonormal frame at the intersections of the sheets with the
//! twisted sheet `p_x`. Monopole side: the superposed Dirac monopole
//! fields and the zero mode obtained from residues of `Q_i(ζ)/ζ` against
//! the product of single-point eigenfunctions.

use crate::error::{NahmError, Result};
use crate::linalg::{CMat, Lu};
use crate::nahm::{frame, nahm_from_frame, Solver};
use crate::poly::eval;
use crate::scalar::Real;
use crate::spectral::{MonopoleConfig, Spectral};
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Relative distance below which a point counts as sitting on a source or
/// vertically above/below it.
pub const TWIST_GUARD: f64 = 1e-9;

pub fn pauli() -> [CMat; 3] {
    let z = Complex64::zero();
    let o = Complex64::one();
    [
        CMat::from_nested(&[vec![z, o], vec![o, z]]),
        CMat::from_nested(&[vec![z, -I], vec![I, z]]),
        CMat::from_nested(&[vec![o, z], vec![z, -o]]),
    ]
}

/// Twisted sheet `p_x` and its intersections with the spectral sheets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointTwist {
    pub x: [f64; 3],
    /// `p_x(ζ) = z_x − 2 x_3 ζ − z̄_x ζ²`, ascending.
    pub px: [Complex64; 3],
    /// Per sheet `(a_jx, a_xj)`.
    pub roots: Vec<(Complex64, Complex64)>,
}

impl PointTwist {
    pub fn zx(&self) -> Complex64 {
        Complex64::new(self.x[0], self.x[1])
    }

    pub fn p(&self, zeta: Complex64) -> Complex64 {
        eval(&self.px, zeta)
    }

    /// `h_x⁺(ζ) = x_3 + z̄_x ζ`.
    pub fn h_plus(&self, zeta: Complex64) -> Complex64 {
        self.x[2] + self.zx().conj() * zeta
    }

    /// `max |a_jx conj(a_xj) + 1|` and `max |p_j(a) − p_x(a)|` over the roots.
    pub fn root_residuals(&self, sp: &Spectral<f64>) -> (f64, f64) {
        let mut anti: f64 = 0.0;
        let mut on: f64 = 0.0;
        for (j, &(ajx, axj)) in self.roots.iter().enumerate() {
            anti = anti.max((ajx * axj.conj() + 1.0).norm());
            for a in [ajx, axj] {
                let scale = 1.0 + a.norm_sqr();
                on = on.max((sp.p(j, a) - self.p(a)).norm() / scale);
            }
        }
        (anti, on)
    }
}

fn offset(x: &[f64; 3], c: &[f64; 3]) -> ([f64; 3], Complex64, f64) {
    let d = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    (d, Complex64::new(d[0], d[1]), r)
}

fn check_twist(points: &[[f64; 3]], x: &[f64; 3]) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(NahmError::InvalidConfig("non-finite evaluation point".into()));
    }
    let scale = points.iter().flatten().chain(x.iter()).fold(1.0f64, |m, v| m.max(v.abs()));
    for (k, c) in points.iter().enumerate() {
        let (_, z, r) = offset(x, c);
        if r <= TWIST_GUARD * scale {
            return Err(NahmError::AtSource(k + 1));
        }
        if z.norm() <= TWIST_GUARD * scale {
            return Err(NahmError::NonGenericTwist(k + 1));
        }
    }
    Ok(())
}

pub fn point_roots(sp: &Spectral<f64>, x: [f64; 3]) -> Result<PointTwist> {
    check_twist(&sp.points, &x)?;
    let zx = Complex64::new(x[0], x[1]);
    let roots = sp
        .points
        .iter()
        .map(|c| {
            let (d, z, r) = offset(&x, c);
            // d = x − c_j, z = z_x − z_j
            let ajx = (-d[2] + r) / z.conj();
            let axj = (d[2] + r) / (-z).conj();
            (ajx, axj)
        })
        .collect();
    Ok(PointTwist { x, px: [zx, Complex64::new(-2.0 * x[2], 0.0), -zx.conj()], roots })
}

#[derive(Clone, Debug)]
pub struct ZeroModeFrame {
    pub s: f64,
    pub x: [f64; 3],
    /// `2n × 2n`; columns ordered by sheet, then `(a_jx, a_xj)`.
    pub w: CMat,
}

impl ZeroModeFrame {
    /// `V = (W†)⁻¹`.
    pub fn v(&self) -> Result<CMat> {
        Ok(Lu::new(&self.w.adjoint())
            .map_err(|_| NahmError::SingularSystem { ratio: 0.0 })?
            .inverse())
    }
}

/// Columns `e^{s(h_x⁺(a) − h_j⁺(a))} (1, a) ⊗ Q̂_{·j}(a)` for `a ∈ {a_jx, a_xj}`.
pub fn nahm_side_frame<R: Real>(sp: &Spectral<R>, s: f64, x: [f64; 3], solver: Solver) -> Result<ZeroModeFrame> {
    let spf = sp.to_f64();
    let tw = point_roots(&spf, x)?;
    let fr = frame(sp, s, solver)?;
    let qhat = fr.qhat.to_f64();
    Ok(ZeroModeFrame { s, x, w: assemble_w(&spf, &tw, &qhat.rows, s) })
}

fn assemble_w(sp: &Spectral<f64>, tw: &PointTwist, qhat: &[Vec<Vec<Complex64>>], s: f64) -> CMat {
    let n = sp.n;
    let mut w = CMat::zeros(2 * n, 2 * n);
    for (j, &(ajx, axj)) in tw.roots.iter().enumerate() {
        for (t, a) in [ajx, axj].into_iter().enumerate() {
            let col = 2 * j + t;
            let weight = (s * (tw.h_plus(a) - sp.h_plus(j, a))).exp();
            for l in 0..n {
                let u = eval(&qhat[l][j], a) * weight;
                w[(l, col)] = u;
                w[(n + l, col)] = a * u;
            }
        }
    }
    w
}

/// `i kron(I, T0) ± Σ_j kron(σ_j, T_j − i x_j)`, `+` for `W`, `−` for `V`.
pub fn twisted_operator(t: &[CMat; 4], x: [f64; 3], adjoint: bool) -> CMat {
    let n = t[0].rows();
    let sig = pauli();
    let id2 = CMat::identity(2);
    let idn = CMat::identity(n);
    let mut k = id2.kron(&t[0]).scale(I);
    let sign = if adjoint { -1.0 } else { 1.0 };
    for j in 0..3 {
        let shifted = &t[j + 1] - &idn.scale(I * x[j]);
        k = &k + &sig[j].kron(&shifted).scale(Complex64::new(sign, 0.0));
    }
    k
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwistResidual {
    /// `||i dW/ds + K W|| / ||W||`.
    pub w: f64,
    /// Same for `V` with the adjoint operator.
    pub v: f64,
    /// Per column, relative to the column norm.
    pub w_columns: Vec<f64>,
    pub v_columns: Vec<f64>,
    /// `max_j |(L(a) − p_x(a)) Q̂_{·j}(a)| / |Q̂_{·j}(a)|`.
    pub eigen: f64,
}

fn relative_columns(res: &CMat, m: &CMat) -> Vec<f64> {
    (0..m.cols())
        .map(|c| {
            let num: f64 = res.column(c).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let den: f64 = m.column(c).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            num / den.max(f64::MIN_POSITIVE)
        })
        .collect()
}

/// Central-difference check of both twisted linear problems at `s`.
pub fn nahm_side_residuals<R: Real>(sp: &Spectral<R>, s: f64, x: [f64; 3], h: f64) -> Result<TwistResidual> {
    if s - h <= 0.0 {
        return Err(NahmError::NonPositiveS(s - h));
    }
    let solver = Solver::Direct;
    let spf = sp.to_f64();
    let tw = point_roots(&spf, x)?;
    let fr = frame(sp, s, solver)?;
    let t = nahm_from_frame(sp, &fr)?.to_f64();
    let w0 = assemble_w(&spf, &tw, &fr.qhat.to_f64().rows, s);
    let wf = |sv: f64| nahm_side_frame(sp, sv, x, solver);
    let wp = wf(s + h)?;
    let wm = wf(s - h)?;
    let inv2h = Complex64::new(1.0 / (2.0 * h), 0.0);
    let dw = (&wp.w - &wm.w).scale(inv2h);
    let rw = &dw.scale(I) + &(&twisted_operator(&t.t, x, false) * &w0);

    let z0 = ZeroModeFrame { s, x, w: w0.clone() };
    let v0 = z0.v()?;
    let dv = (&wp.v()? - &wm.v()?).scale(inv2h);
    let rv = &dv.scale(I) + &(&twisted_operator(&t.t, x, true) * &v0);

    // eigenvector check against L(a)
    let mut eigen: f64 = 0.0;
    let n = spf.n;
    let qf = fr.qhat.to_f64();
    for (j, &(ajx, axj)) in tw.roots.iter().enumerate() {
        for a in [ajx, axj] {
            let lx = crate::nahm::lax_at(sp, &fr, a, false)?.l.to_f64();
            let v: Vec<Complex64> = (0..n).map(|l| eval(&qf.rows[l][j], a)).collect();
            let lv = lx.mul_vec(&v);
            let px = tw.p(a);
            let num: f64 = lv.iter().zip(&v).map(|(p, q)| (p - px * q).norm_sqr()).sum::<f64>().sqrt();
            let den: f64 = v.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt() * lx.norm().max(px.norm()).max(1.0);
            eigen = eigen.max(num / den.max(f64::MIN_POSITIVE));
        }
    }

    Ok(TwistResidual {
        w: rw.norm() / w0.norm(),
        v: rv.norm() / v0.norm(),
        w_columns: relative_columns(&rw, &w0),
        v_columns: relative_columns(&rv, &v0),
        eigen,
    })
}

/// Growth rate `d ln|v_c| / ds` of each column of `V`, by sampling `s ± δ`.
/// Negative rates mark the decaying subspace.
pub fn v_growth_rates<R: Real>(sp: &Spectral<R>, s: f64, x: [f64; 3], delta: f64) -> Result<Vec<f64>> {
    let vp = nahm_side_frame(sp, s + delta, x, Solver::Direct)?.v()?;
    let vm = nahm_side_frame(sp, s - delta, x, Solver::Direct)?.v()?;
    Ok((0..vp.cols())
        .map(|c| {
            let np: f64 = vp.column(c).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let nm: f64 = vm.column(c).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            (np / nm).ln() / (2.0 * delta)
        })
        .collect())
}

/// Indices of the columns of `V` whose norm decreases with `s`.
pub fn decaying_columns<R: Real>(sp: &Spectral<R>, s: f64, x: [f64; 3], delta: f64) -> Result<Vec<usize>> {
    Ok(v_growth_rates(sp, s, x, delta)?
        .into_iter()
        .enumerate()
        .filter(|(_, r)| *r < 0.0)
        .map(|(c, _)| c)
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonopoleField {
    pub phi: Complex64,
    pub a: [f64; 3],
}

/// Superposed unit Dirac monopoles, strings along the negative vertical
/// direction below each source.
pub fn monopole_fields(cfg: &MonopoleConfig, x: [f64; 3]) -> Result<MonopoleField> {
    let scale = cfg.points.iter().flatten().chain(x.iter()).fold(1.0f64, |m, v| m.max(v.abs()));
    let mut phi = Complex64::zero();
    let mut a = [0.0; 3];
    for (k, c) in cfg.points.iter().enumerate() {
        let (d, _, r) = offset(&x, c);
        if r <= TWIST_GUARD * scale {
            return Err(NahmError::AtSource(k + 1));
        }
        let w = r + d[2];
        if w <= TWIST_GUARD * scale * TWIST_GUARD {
            return Err(NahmError::StringCrossing(k + 1));
        }
        phi += Complex64::new(0.0, 0.5 / r);
        let f = 1.0 / (2.0 * r * w);
        a[0] += d[1] * f;
        a[1] -= d[0] * f;
    }
    Ok(MonopoleField { phi, a })
}

/// Per source: root `a_xk = −(d_3 + r)/z̄` and prefactor `√(d_3 + r)/z̄`,
/// with `d = x − c_k`. The prefactor is a smooth square root of `−a_xk/z̄`.
fn constituents(cfg: &MonopoleConfig, x: &[f64; 3]) -> Result<Vec<(Complex64, Complex64)>> {
    check_twist(&cfg.points, x)?;
    Ok(cfg
        .points
        .iter()
        .map(|c| {
            let (d, z, r) = offset(x, c);
            let zb = z.conj();
            (-(d[2] + r) / zb, Complex64::new((d[2] + r).sqrt(), 0.0) / zb)
        })
        .collect())
}

/// `∏_k c_k/(ζ − a_xk) · e^{−s h_x⁻(ζ)}` with `h_x⁻(ζ) = x_3 − z_x/ζ` in
/// absolute coordinates; the twist factor is applied once.
pub fn chi(cfg: &MonopoleConfig, s: f64, x: [f64; 3], zeta: Complex64) -> Result<Complex64> {
    let cons = constituents(cfg, &x)?;
    let mut v = Complex64::one();
    for (k, &(a, c)) in cons.iter().enumerate() {
        let gap = zeta - a;
        if gap.norm() <= 1e-12 * (1.0 + a.norm()) {
            return Err(NahmError::PoleHit(k + 1));
        }
        v *= c / gap;
    }
    if s != 0.0 {
        if zeta.is_zero() {
            return Err(NahmError::ZeroZeta);
        }
        let zx = Complex64::new(x[0], x[1]);
        v *= (-s * (x[2] - zx / zeta)).exp();
    }
    Ok(v)
}

/// Sum of the residues at `a_xi` of
/// `Q_i(ζ)/ζ · e^{−s(d_3 − z_d/ζ)} · ∏_k c_k/(ζ − a_xk)`, `d = x − c_i`.
pub fn zero_mode_scalar(cfg: &MonopoleConfig, s: f64, x: [f64; 3], q: &[Vec<Complex64>]) -> Result<Complex64> {
    let cons = constituents(cfg, &x)?;
    let mut tot = Complex64::zero();
    for (i, c) in cfg.points.iter().enumerate() {
        let (d, z, _) = offset(&x, c);
        let (ai, ci) = cons[i];
        let mut prod = ci;
        for (k, &(ak, ck)) in cons.iter().enumerate() {
            if k != i {
                let gap = ai - ak;
                if gap.norm() <= 1e-12 * (1.0 + ai.norm()) {
                    return Err(NahmError::PoleHit(k + 1));
                }
                prod *= ck / gap;
            }
        }
        tot += eval(&q[i], ai) / ai * (-s * (d[2] - z / ai)).exp() * prod;
    }
    Ok(tot)
}

/// Same sum with each residue replaced by a trapezoid-rule contour
/// integral; returns the relative difference from [`zero_mode_scalar`].
pub fn residue_contour_check(
    cfg: &MonopoleConfig,
    s: f64,
    x: [f64; 3],
    q: &[Vec<Complex64>],
    nodes: usize,
    radius: f64,
) -> Result<f64> {
    let cons = constituents(cfg, &x)?;
    let analytic = zero_mode_scalar(cfg, s, x, q)?;
    let mut tot = Complex64::zero();
    for (i, c) in cfg.points.iter().enumerate() {
        let (d, z, _) = offset(&x, c);
        let center = cons[i].0;
        let mut acc = Complex64::zero();
        for t in 0..nodes {
            let u = Complex64::from_polar(radius, std::f64::consts::TAU * t as f64 / nodes as f64);
            let zeta = center + u;
            let mut v = eval(&q[i], zeta) / zeta * (-s * (d[2] - z / zeta)).exp();
            for &(ak, ck) in &cons {
                v *= ck / (zeta - ak);
            }
            // dζ / (2πi) = u dθ / 2π
            acc += v * u;
        }
        tot += acc / nodes as f64;
    }
    Ok((tot - analytic).norm() / analytic.norm().max(f64::MIN_POSITIVE))
}

type Spinor = [Complex64; 2];

fn spinor_add(a: Spinor, b: Spinor) -> Spinor {
    [a[0] + b[0], a[1] + b[1]]
}

fn spinor_scale(a: Spinor, c: Complex64) -> Spinor {
    [a[0] * c, a[1] * c]
}

fn sigma_apply(j: usize, v: Spinor) -> Spinor {
    match j {
        0 => [v[1], v[0]],
        1 => [-I * v[1], I * v[0]],
        _ => [v[0], -v[1]],
    }
}

fn spinor_norm(v: Spinor) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

/// Covariant derivatives `D_j F = ∂_j F + i a_j F` by central differences.
fn covariant<F>(cfg: &MonopoleConfig, f: &F, x: [f64; 3], h: f64) -> Result<[Spinor; 3]>
where
    F: Fn([f64; 3]) -> Result<Spinor>,
{
    let fld = monopole_fields(cfg, x)?;
    let f0 = f(x)?;
    let mut out = [[Complex64::zero(); 2]; 3];
    for j in 0..3 {
        let mut xp = x;
        let mut xm = x;
        xp[j] += h;
        xm[j] -= h;
        let (fp, fm) = (f(xp)?, f(xm)?);
        let inv = 1.0 / (2.0 * h);
        out[j] = [
            (fp[0] - fm[0]) * inv + I * fld.a[j] * f0[0],
            (fp[1] - fm[1]) * inv + I * fld.a[j] * f0[1],
        ];
    }
    Ok(out)
}

/// `Σ σ_j D_j F + (−iΦ − s) F`.
fn apply_operator<F>(cfg: &MonopoleConfig, s: f64, f: &F, x: [f64; 3], h: f64) -> Result<Spinor>
where
    F: Fn([f64; 3]) -> Result<Spinor>,
{
    let d = covariant(cfg, f, x, h)?;
    let phi = monopole_fields(cfg, x)?.phi;
    let mut acc = spinor_scale(f(x)?, -I * phi - s);
    for (j, dj) in d.iter().enumerate() {
        acc = spinor_add(acc, sigma_apply(j, *dj));
    }
    Ok(acc)
}

/// `−Σ σ_j D_j ψ + (−iΦ − s) ψ` relative to its largest term.
fn adjoint_residual<F>(cfg: &MonopoleConfig, s: f64, psi: &F, x: [f64; 3], h: f64) -> Result<f64>
where
    F: Fn([f64; 3]) -> Result<Spinor>,
{
    let d = covariant(cfg, psi, x, h)?;
    let phi = monopole_fields(cfg, x)?.phi;
    let mut terms: Vec<Spinor> = d.iter().enumerate().map(|(j, dj)| spinor_scale(sigma_apply(j, *dj), -Complex64::one())).collect();
    terms.push(spinor_scale(psi(x)?, -I * phi - s));
    let total = terms.iter().fold([Complex64::zero(); 2], |a, b| spinor_add(a, *b));
    let scale = terms.iter().map(|t| spinor_norm(*t)).fold(f64::MIN_POSITIVE, f64::max);
    Ok(spinor_norm(total) / scale)
}

/// Default step for the outer covariant derivative.
pub const ZERO_MODE_STEP: f64 = 1e-4;

/// `ψ = Σ σ_j D_j (f, 0) + (−iΦ − s)(f, 0)` with `f` the residue sum.
pub fn monopole_zero_mode(cfg: &MonopoleConfig, s: f64, x: [f64; 3], q: &[Vec<Complex64>], h: f64) -> Result<[Complex64; 2]> {
    let f = |y: [f64; 3]| zero_mode_scalar(cfg, s, y, q).map(|v| [v, Complex64::zero()]);
    apply_operator(cfg, s, &f, x, h)
}

/// FD residual of the adjoint operator applied to the zero mode.
pub fn zero_mode_residual(cfg: &MonopoleConfig, s: f64, x: [f64; 3], q: &[Vec<Complex64>], h: f64) -> Result<f64> {
    let psi = |y: [f64; 3]| monopole_zero_mode(cfg, s, y, q, h);
    adjoint_residual(cfg, s, &psi, x, h)
}

/// FD residual of the adjoint operator applied to `𝔇 (χ(ζ), 0)`.
pub fn chi_mode_residual(cfg: &MonopoleConfig, s: f64, x: [f64; 3], zeta: Complex64, h: f64) -> Result<f64> {
    let f = |y: [f64; 3]| chi(cfg, s, y, zeta).map(|v| [v, Complex64::zero()]);
    let psi = |y: [f64; 3]| apply_operator(cfg, s, &f, y, h);
    adjoint_residual(cfg, s, &psi, x, h)
}

/// Fits `ln|ψ(R u)| = c − κ R + p ln R` through three radii and returns `κ`.
pub fn decay_rate(cfg: &MonopoleConfig, s: f64, direction: [f64; 3], q: &[Vec<Complex64>], radii: [f64; 3]) -> Result<f64> {
    let len = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    let u = direction.map(|v| v / len);
    let mut rows = Vec::with_capacity(3);
    let mut rhs = Vec::with_capacity(3);
    for &r in &radii {
        let psi = monopole_zero_mode(cfg, s, u.map(|v| v * r), q, ZERO_MODE_STEP)?;
        rows.push(vec![Complex64::one(), Complex64::new(-r, 0.0), Complex64::new(r.ln(), 0.0)]);
        rhs.push(Complex64::new(spinor_norm(psi).ln(), 0.0));
    }
    let m = CMat::from_nested(&rows);
    let sol = Lu::new(&m).map_err(|_| NahmError::SingularSystem { ratio: 0.0 })?.solve(&rhs);
    Ok(sol[1].re)
}

/// Zero-mode sample for export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroModeSample {
    pub x: [f64; 3],
    pub s: f64,
    pub spinor: [Complex64; 2],
    pub residual: f64,
}

pub fn zero_mode_sample(cfg: &MonopoleConfig, s: f64, x: [f64; 3], q: &[Vec<Complex64>]) -> Result<ZeroModeSample> {
    let spinor = monopole_zero_mode(cfg, s, x, q, ZERO_MODE_STEP)?;
    let residual = zero_mode_residual(cfg, s, x, q, ZERO_MODE_STEP)?;
    Ok(ZeroModeSample { x, s, spinor, residual })
}
