//! Closed-form references and constant gauge alignment.

use crate::error::{NahmError, Result};
use crate::linalg::{hermitian_eigen, polar_unitary, CMat};
use crate::nahm::NahmData;
use crate::spectral::{MonopoleConfig, Rotation, Spectral};
use num_complex::Complex64;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Generators of the irreducible `n`-dimensional representation with
/// `[σ_i, σ_j] = 2i ε_ijk σ_k`.
#[derive(Clone, Debug)]
pub struct RepGenerators {
    pub sigma: [CMat; 3],
    pub raising: CMat,
}

impl RepGenerators {
    pub fn new(n: usize) -> Self {
        let s3 = CMat::diag(&(0..n).map(|k| c(n as f64 - 1.0 - 2.0 * k as f64)).collect::<Vec<_>>());
        let raising = CMat::from_fn(n, n, |i, j| {
            if j == i + 1 {
                let m = (i + 1) as f64;
                c((m * (n as f64 - m)).sqrt())
            } else {
                Complex64::zero()
            }
        });
        let lowering = raising.adjoint();
        let s1 = &raising + &lowering;
        let s2 = (&raising - &lowering).scale(-I);
        RepGenerators { sigma: [s1, s2, s3], raising }
    }

    /// `max ||[σ_i, σ_j] − 2i ε_ijk σ_k||` and `||Σ σ_j² − (n²−1)||`.
    pub fn residuals(&self) -> (f64, f64) {
        let n = self.raising.rows();
        let mut comm: f64 = 0.0;
        for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            let lhs = self.sigma[i].commutator(&self.sigma[j]);
            comm = comm.max((&lhs - &self.sigma[k].scale(2.0 * I)).norm());
        }
        let mut cas = CMat::identity(n).scale(c(-((n * n) as f64 - 1.0)));
        for s in &self.sigma {
            cas = &cas + &(s * s);
        }
        (comm, cas.norm())
    }
}

pub fn exact_n1(point: [f64; 3]) -> NahmData {
    let one = |v: f64| CMat::diag(&[Complex64::new(0.0, v)]);
    NahmData { s: 0.0, t: [CMat::zeros(1, 1), one(point[0]), one(point[1]), one(point[2])] }
}

/// Exact two-point solution. When the pair is vertically aligned the phase
/// `z12/|z12|` is taken to be 1.
pub fn exact_n2(cfg: &MonopoleConfig, s: f64) -> Result<NahmData> {
    cfg.validate()?;
    if cfg.n() != 2 {
        return Err(NahmError::InvalidConfig(format!("two points required, got {}", cfg.n())));
    }
    if !(s > 0.0) {
        return Err(NahmError::NonPositiveS(s));
    }
    let [p1, p2] = [cfg.points[0], cfg.points[1]];
    let z12 = Complex64::new(p1[0] - p2[0], p1[1] - p2[1]);
    let az = z12.norm();
    let phase = if az > 0.0 { z12 / az } else { Complex64::one() };
    let r = crate::spectral::distance(&p1, &p2);
    let x12 = p1[2] - p2[2];
    let sh = (s * r).sinh();
    let f = r / (2.0 * sh);
    // r cosh − x sinh without cancellation when x12 ≈ r
    let den = 0.5 * ((r - x12) * (s * r).exp() + (r + x12) * (-s * r).exp());
    let t1 = CMat::from_nested(&[vec![I * p1[0], -I * f * phase.conj()], vec![-I * f * phase, I * p2[0]]]);
    let t2 = CMat::from_nested(&[vec![I * p1[1], f * phase.conj()], vec![-f * phase, I * p2[1]]]);
    let d = r * r / (sh * den);
    let off = -r * az / den;
    let t3 = CMat::from_nested(&[
        vec![I * 0.5 * (2.0 * p1[2] - d), I * 0.5 * off],
        vec![I * 0.5 * off, I * 0.5 * (2.0 * p2[2] + d)],
    ]);
    let w = r * az / (2.0 * den);
    let t0 = CMat::from_nested(&[vec![Complex64::zero(), c(w)], vec![c(-w), Complex64::zero()]]);
    Ok(NahmData { s, t: [t0, t1, t2, t3] })
}

/// Hyperbolic solution `T_j = f_j(s)·iσ_j` for the points `(0,0,±c/2)`
/// in the gauge with the standard residues at `s = 0`.
pub fn axis_n2(cval: f64, s: f64) -> Result<NahmData> {
    if !(cval > 0.0) {
        return Err(NahmError::InvalidConfig(format!("axis separation must be positive, got {cval}")));
    }
    if !(s > 0.0) {
        return Err(NahmError::NonPositiveS(s));
    }
    let f = cval / (2.0 * (cval * s).sinh());
    let f3 = cval / (2.0 * (cval * s).tanh());
    let g = RepGenerators::new(2);
    Ok(NahmData {
        s,
        t: [CMat::zeros(2, 2), g.sigma[0].scale(I * f), g.sigma[1].scale(I * f), g.sigma[2].scale(I * f3)],
    })
}

/// The constant gauge relating the two-point display on the vertical axis
/// to [`axis_n2`].
pub fn axis_gauge() -> CMat {
    CMat::from_nested(&[vec![Complex64::zero(), -I], vec![I, Complex64::zero()]])
}

/// Nahm data for a rotated configuration expressed back in the original
/// axes: `T_k = Σ_j R_jk T'_j`.
pub fn unrotate(t: &NahmData, rot: &Rotation) -> NahmData {
    let r = rot.0;
    let mut out = t.clone();
    for k in 0..3 {
        let mut acc = CMat::zeros(t.n(), t.n());
        for j in 0..3 {
            acc = &acc + &t.t[j + 1].scale(c(r[j][k]));
        }
        out.t[k + 1] = acc;
    }
    out
}

pub fn conjugate(t: &NahmData, g: &CMat) -> NahmData {
    let ga = g.adjoint();
    NahmData { s: t.s, t: std::array::from_fn(|k| &(g * &t.t[k]) * &ga) }
}

/// `sqrt(Σ_μ ||A_μ − B_μ||²)`.
pub fn nahm_distance(a: &NahmData, b: &NahmData) -> f64 {
    a.t.iter().zip(&b.t).map(|(x, y)| (x - y).norm().powi(2)).sum::<f64>().sqrt()
}

/// `nahm_distance` relative to the size of `b`.
pub fn relative_distance(a: &NahmData, b: &NahmData) -> f64 {
    let scale = b.t.iter().map(|m| m.norm().powi(2)).sum::<f64>().sqrt();
    nahm_distance(a, b) / scale.max(f64::MIN_POSITIVE)
}

#[derive(Clone, Debug)]
pub struct Alignment {
    pub g: CMat,
    pub distance: f64,
    /// Two seeds reached the same distance with gauges that differ by more
    /// than diagonal phases.
    pub ambiguous: bool,
}

fn refine(t: &NahmData, t_ref: &NahmData, mut g: CMat) -> CMat {
    for _ in 0..200 {
        let n = g.rows();
        let mut acc = CMat::zeros(n, n);
        for (a, b) in t.t.iter().zip(&t_ref.t) {
            acc = &acc + &(&(&(b * &g) * &a.adjoint()) + &(&(&b.adjoint() * &g) * a));
        }
        let next = polar_unitary(&acc);
        let step = (&next - &g).norm();
        g = next;
        if step < 1e-15 {
            break;
        }
    }
    g
}

fn diagonal_phase_gap(g1: &CMat, g2: &CMat) -> f64 {
    let p = &g1.adjoint() * g2;
    let n = p.rows();
    let mut off: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off = off.max(p[(i, j)].norm());
            }
        }
    }
    off
}

/// Constant unitary `g` minimising `Σ_μ ||g T_μ g† − T_ref,μ||²`.
///
/// Seeds come from matching eigenframes of `iT_j` for each axis (plus the
/// identity); each seed is refined by the polar fixed-point iteration.
pub fn gauge_align(t: &NahmData, t_ref: &NahmData) -> Result<Alignment> {
    let n = t.n();
    if t_ref.n() != n {
        return Err(NahmError::InvalidConfig(format!("size mismatch {} vs {}", n, t_ref.n())));
    }
    let mut seeds = vec![CMat::identity(n)];
    for j in (1..4).rev() {
        let (_, v) = hermitian_eigen(&t.t[j].scale(I));
        let (_, w) = hermitian_eigen(&t_ref.t[j].scale(I));
        seeds.push(&w * &v.adjoint());
    }
    let mut results: Vec<(f64, CMat)> = seeds
        .into_iter()
        .map(|g0| {
            let g = refine(t, t_ref, g0);
            (nahm_distance(&conjugate(t, &g), t_ref), g)
        })
        .collect();
    results.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (best, g) = results[0].clone();
    let tol = 1e-9 * (1.0 + best);
    let ambiguous = results[1..]
        .iter()
        .any(|(d, h)| (d - best).abs() <= tol && diagonal_phase_gap(&g, h) > 1e-6);
    Ok(Alignment { g, distance: best, ambiguous })
}

/// Closed-form entries below the diagonal of the first-order `L(0)` and
/// `M(0)` for three points, each the coefficient of `e^{−s r_ij}`.
/// Keys are 0-based `(row, col)`.
#[derive(Clone, Debug)]
pub struct FirstOrderDisplay {
    pub l: BTreeMap<(usize, usize), Complex64>,
    pub m: BTreeMap<(usize, usize), Complex64>,
    /// Zeroth-order squared norms of the three rows.
    pub norms: [Complex64; 3],
}

/// `M31` is taken with the overall sign that agrees with the expansion.
pub fn n3_first_order(sp: &Spectral<f64>) -> Result<FirstOrderDisplay> {
    if sp.n != 3 {
        return Err(NahmError::InvalidConfig(format!("three points required, got {}", sp.n)));
    }
    let a = |i: usize, j: usize| sp.a[i - 1][j - 1];
    let z = |i: usize| sp.z[i - 1];
    let x = |i: usize| sp.x3[i - 1];
    let r = |i: usize, j: usize| sp.r[i - 1][j - 1];
    let zz = |i: usize, j: usize| z(i) - z(j);
    let (a12, a13, a21, a23, a31, a32) = (a(1, 2), a(1, 3), a(2, 1), a(2, 3), a(3, 1), a(3, 2));
    let (z12, z13, z23) = (zz(1, 2), zz(1, 3), zz(2, 3));
    let (z1, z2, z3) = (z(1), z(2), z(3));
    let (x1, x2, x3) = (x(1), x(2), x(3));
    let cj = |v: Complex64| v.conj();

    let k21 = z12.norm() * (cj(z13) * a31 * cj(z23) * a32).sqrt();
    let k31 = z13.norm() * (-cj(z12) * a21 * cj(z23) * a23).sqrt();
    let k32 = z23.norm() * (cj(z12) * a12 * cj(z13) * a13).sqrt();

    let l21 = k21 * (a21 - a12) / z12
        * (z1 * a13 * (a12 - a23) / (z13 * (a12 - a13)) - z2 * a23 * a32 * (a12 - a31) / (z23 * a31 * (a12 - a32)));
    let l31 = k31 * (a13 - a31) / z13
        * (z1 * a12 * (a13 - a32) / (z12 * (a12 - a13)) - z3 * a23 * a32 * (a13 - a21) / (z23 * a21 * (a13 - a23)));
    let l32 = k32 * (a23 - a32) / z23
        * (z2 * a21 * (a23 - a31) / (z12 * (a23 - a21)) - z3 * a13 * a31 * (a12 - a23) / (z13 * a12 * (a13 - a23)));

    let m21 = k21 * (a12 - a21) / z12
        * (x2 * a32 * a23 * (a12 - a31) / (z23 * a31 * (a12 - a32))
            - (x1 + r(1, 2)) * a13 * (a12 - a23) / (z13 * (a12 - a13)));
    let m31 = -k31 * (a13 - a31) / z13
        * (x3 * a23 * a32 * (a13 - a21) / (z23 * a21 * (a13 - a23))
            - (x1 + r(1, 3)) * a12 * (a13 - a32) / (z12 * (a12 - a13)));
    let m32 = k32 * (a23 - a32) / z23
        * (x3 * a13 * a31 * (a12 - a23) / (z13 * a12 * (a23 - a13))
            - (x2 + r(2, 3)) * a21 * (a23 - a31) / (z12 * (a21 - a23)));

    let norms = [
        1.0 / (cj(z12) * a21 * cj(z13) * a31),
        1.0 / (-cj(z12) * a12 * cj(z23) * a32),
        1.0 / (cj(z13) * a13 * cj(z23) * a23),
    ];
    let l = BTreeMap::from([((1, 0), l21), ((2, 0), l31), ((2, 1), l32)]);
    let m = BTreeMap::from([((1, 0), m21), ((2, 0), m31), ((2, 1), m32)]);
    Ok(FirstOrderDisplay { l, m, norms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nahm::{nahm_matrices, NahmData};
    use crate::perturbation::first_order_lax;
    use crate::spectral::genericize;
    use qd::Quad;

    fn cfg(points: Vec<[f64; 3]>) -> MonopoleConfig {
        MonopoleConfig::new(points).unwrap()
    }

    fn fd_residual(f: impl Fn(f64) -> NahmData, s: f64, h: f64) -> f64 {
        let tp = f(s + h);
        let tm = f(s - h);
        let dt: [CMat; 4] = std::array::from_fn(|k| (&tp.t[k] - &tm.t[k]).scale(c(1.0 / (2.0 * h))));
        f(s).equation_residuals(&dt).into_iter().fold(0.0, f64::max)
    }

    #[test]
    fn generators() {
        for n in 1..=8 {
            let (comm, cas) = RepGenerators::new(n).residuals();
            assert!(comm < 1e-12 && cas < 1e-12, "n={n}");
        }
        let g = RepGenerators::new(2);
        assert_eq!(g.sigma[1][(0, 1)], -I);
    }

    #[test]
    fn n1_values() {
        let t = exact_n1([1.0, 2.0, 3.0]);
        assert_eq!(t.t[2][(0, 0)], Complex64::new(0.0, 2.0));
        assert!(exact_n1([0.0; 3]).t.iter().all(|m| m.norm() == 0.0));
    }

    #[test]
    fn n2_display_values() {
        let e2 = cfg(vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]);
        let t = exact_n2(&e2, 1.0).unwrap();
        assert!((t.t[1][(0, 1)] - Complex64::new(0.0, -0.275721)).norm() < 1e-6);
        assert!((t.t[0][(0, 1)].re - 1.0 / 2f64.cosh()).abs() < 1e-15);
        assert!(t.antihermitian_residual() < 1e-16);
        let general = cfg(vec![[0.3, -0.7, 0.4], [-0.5, 0.2, -0.6]]);
        assert!(fd_residual(|s| exact_n2(&general, s).unwrap(), 1.1, 1e-5) < 1e-6);
    }

    #[test]
    fn axis_values() {
        let t = axis_n2(2.0, 1.0).unwrap();
        assert!((t.t[1][(0, 1)].im - 1.0 / 2f64.sinh()).abs() < 1e-15);
        assert!(fd_residual(|s| axis_n2(2.0, s).unwrap(), 0.7, 1e-5) < 1e-8);
        let small = axis_n2(1.5, 1e-6).unwrap();
        let g = RepGenerators::new(2);
        for j in 0..3 {
            let want = g.sigma[j].scale(I * 0.5);
            assert!((&small.t[j + 1].scale(c(1e-6)) - &want).norm() < 1e-6);
        }
    }

    #[test]
    fn display_on_axis_maps_to_hyperbolic() {
        let cv = 1.3;
        let axis = cfg(vec![[0.0, 0.0, cv / 2.0], [0.0, 0.0, -cv / 2.0]]);
        for s in [0.4, 1.0, 3.0] {
            let disp = exact_n2(&axis, s).unwrap();
            let mapped = conjugate(&disp, &axis_gauge());
            assert!(relative_distance(&mapped, &axis_n2(cv, s).unwrap()) < 1e-14);
        }
    }

    #[test]
    fn pipeline_vs_hyperbolic_through_rotation() {
        // Rotating the points changes T0 by an s-dependent gauge, so compare
        // the invariants tr(T_j T_k) after undoing the rotation.
        let cv = 2.0;
        let axis = cfg(vec![[0.0, 0.0, cv / 2.0], [0.0, 0.0, -cv / 2.0]]);
        let (rot, rotated) = genericize(&axis, 3).unwrap();
        assert!(!rot.is_identity());
        let sp = Spectral::<Quad>::new(&rotated).unwrap();
        for s in [0.3, 0.8, 2.0] {
            let t = unrotate(&nahm_matrices(&sp, s).unwrap().to_f64(), &rot);
            let h = axis_n2(cv, s).unwrap();
            for j in 1..4 {
                for k in 1..4 {
                    let a = (&t.t[j] * &t.t[k]).trace();
                    let b = (&h.t[j] * &h.t[k]).trace();
                    assert!((a - b).norm() < 1e-10 * b.norm().max(1.0), "s={s} j={j} k={k}");
                }
            }
        }
    }

    #[test]
    fn pipeline_matches_exact_n2() {
        let e2 = cfg(vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]);
        let sp = Spectral::<Quad>::new(&e2).unwrap();
        for s in [0.5, 1.0, 2.0, 5.0] {
            let t = nahm_matrices(&sp, s).unwrap().to_f64();
            let want = exact_n2(&e2, s).unwrap();
            for k in 0..4 {
                let scale = want.t[k].norm().max(1e-300);
                assert!((&t.t[k] - &want.t[k]).norm() / scale < 1e-9 || want.t[k].norm() < 1e-300, "s={s} k={k}");
            }
            let al = gauge_align(&t, &want).unwrap();
            assert!(al.distance < 1e-9);
        }
    }

    #[test]
    fn first_order_display_matches_expansion() {
        let sp = Spectral::<f64>::new(&cfg(vec![[0.3, -0.4, 0.2], [-0.7, 0.5, -0.1], [0.6, 0.8, 0.9]])).unwrap();
        let disp = n3_first_order(&sp).unwrap();
        let fo = first_order_lax(&sp).unwrap();
        for (k, &(i, j)) in [(1usize, 0usize), (2, 0), (2, 1)].iter().enumerate() {
            let p = [(0, 1), (0, 2), (1, 2)][k];
            let dl = fo.dl[&p][(i, j)];
            let dm = fo.dm[&p][(i, j)];
            assert!((dl - disp.l[&(i, j)]).norm() < 1e-9 * dl.norm().max(1.0));
            assert!((dm - disp.m[&(i, j)]).norm() < 1e-9 * dm.norm().max(1.0));
        }
        for l in 0..3 {
            assert!((disp.norms[l] - fo.norms[l]).norm() < 1e-12 * fo.norms[l]);
        }
    }

    #[test]
    fn align_identity() {
        let t = exact_n2(&cfg(vec![[0.3, -0.7, 0.4], [-0.5, 0.2, -0.6]]), 1.0).unwrap();
        let al = gauge_align(&t, &t).unwrap();
        assert!(al.distance < 1e-12);
        assert!(diagonal_phase_gap(&al.g, &CMat::identity(2)) < 1e-8);
    }
}
