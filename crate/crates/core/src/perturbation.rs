//! Large-`s` expansion of the basis rows in powers of `e^{−s r_ij}`.
//!
//! Exponents are tracked as integer multiplicities over unordered pairs so
//! that terms with numerically equal but structurally different exponents
//! stay apart until evaluation.

use crate::basis::BasisMatrix;
use crate::basis_direct::solve_basis_direct;
use crate::error::{NahmError, Result};
use crate::inner_product::pairing_at;
use crate::linalg::{CMat, Lu};
use crate::poly::{add_scaled, eval, lagrange_basis, mul_linear};
use crate::scalar::Real;
use crate::spectral::Spectral;
use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Index of the unordered pair `{i, j}` in `(0,1), (0,2), …, (n−2,n−1)`.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    a * n - a * (a + 1) / 2 + (b - a - 1)
}

pub fn pair_list(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ExponentKey {
    pub multiplicities: Vec<u32>,
}

impl ExponentKey {
    pub fn zero(n: usize) -> Self {
        ExponentKey { multiplicities: vec![0; n * (n - 1) / 2] }
    }

    pub fn order(&self) -> u32 {
        self.multiplicities.iter().sum()
    }

    pub fn bumped(&self, n: usize, i: usize, j: usize) -> Self {
        let mut k = self.clone();
        k.multiplicities[pair_index(n, i, j)] += 1;
        k
    }

    /// Key with one fewer `{i, j}`, if that multiplicity is positive.
    pub fn lowered(&self, n: usize, i: usize, j: usize) -> Option<Self> {
        let p = pair_index(n, i, j);
        if self.multiplicities[p] == 0 {
            return None;
        }
        let mut k = self.clone();
        k.multiplicities[p] -= 1;
        Some(k)
    }

    /// `Δ = Σ m_ij r_ij`.
    pub fn delta<R: Real>(&self, sp: &Spectral<R>) -> f64 {
        pair_list(sp.n)
            .iter()
            .zip(&self.multiplicities)
            .map(|(&(i, j), &m)| m as f64 * sp.r[i][j].to_f64())
            .sum()
    }

    /// Nonzero multiplicities keyed by 1-based `"i-j"` labels.
    pub fn labelled(&self, n: usize) -> BTreeMap<String, u32> {
        pair_list(n)
            .iter()
            .zip(&self.multiplicities)
            .filter(|(_, &m)| m > 0)
            .map(|(&(i, j), &m)| (format!("{}-{}", i + 1, j + 1), m))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub key: ExponentKey,
    pub delta: f64,
    /// Per-sheet coefficients, ascending, each of length `n`.
    pub sheets: Vec<Vec<Complex64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbSeries {
    pub l: usize,
    pub n: usize,
    pub max_order: u32,
    pub delta_cut: f64,
    /// Sorted by key; the order-0 term comes first.
    pub terms: Vec<SeriesTerm>,
}

/// Default truncation `Δ_cut = 12·min r`.
pub fn default_delta_cut(sp: &Spectral<f64>) -> f64 {
    12.0 * sp.min_r().unwrap_or(0.0)
}

pub fn expand_basis(sp: &Spectral<f64>, l: usize, order: u32) -> Result<PerturbSeries> {
    expand_basis_with(sp, l, order, default_delta_cut(sp))
}

/// Recursive expansion of row `l` (0-based) up to `order` applications of
/// the interpolation step, dropping terms with `Δ > delta_cut`.
pub fn expand_basis_with(sp: &Spectral<f64>, l: usize, order: u32, delta_cut: f64) -> Result<PerturbSeries> {
    let n = sp.n;
    if l >= n {
        return Err(NahmError::IndexOutOfRange { index: l, n });
    }
    let empty = || vec![vec![Complex64::zero(); n]; n];
    let zero_key = ExponentKey::zero(n);
    let mut base = empty();
    let al = sp.annihilator(l);
    base[l][..al.len()].copy_from_slice(&al);

    // Lagrange bases per (target sheet j, source sheet i), with the ζ/a_ji
    // factor on sheets that must vanish at 0.
    let mut shape = vec![vec![Vec::new(); n]; n];
    for j in 0..n {
        let others: Vec<usize> = (0..n).filter(|&k| k != j).collect();
        let nodes: Vec<Complex64> = others.iter().map(|&k| sp.a[j][k]).collect();
        for (t, &i) in others.iter().enumerate() {
            let mut b = lagrange_basis(&nodes, t);
            if j > l {
                let inv = 1.0 / sp.a[j][i];
                b = mul_linear(&b, Complex64::zero()).into_iter().map(|v| v * inv).collect();
            }
            b.resize(n, Complex64::zero());
            shape[j][i] = b;
        }
    }

    let mut all: BTreeMap<ExponentKey, Vec<Vec<Complex64>>> = BTreeMap::new();
    all.insert(zero_key.clone(), base.clone());
    let mut current: BTreeMap<ExponentKey, Vec<Vec<Complex64>>> = BTreeMap::new();
    current.insert(zero_key, base);
    for _ in 0..order {
        let mut next: BTreeMap<ExponentKey, Vec<Vec<Complex64>>> = BTreeMap::new();
        for (key, polys) in &current {
            for i in 0..n {
                if polys[i].iter().all(|c| c.is_zero()) {
                    continue;
                }
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let nk = key.bumped(n, i, j);
                    if nk.delta(sp) > delta_cut {
                        continue;
                    }
                    let val = eval(&polys[i], sp.a[j][i]);
                    let entry = next.entry(nk).or_insert_with(empty);
                    let mut acc = std::mem::take(&mut entry[j]);
                    add_scaled(&mut acc, &shape[j][i], val);
                    entry[j] = acc;
                }
            }
        }
        for (k, v) in &next {
            let slot = all.entry(k.clone()).or_insert_with(empty);
            for j in 0..n {
                for (a, b) in slot[j].iter_mut().zip(&v[j]) {
                    *a += b;
                }
            }
        }
        current = next;
        if current.is_empty() {
            break;
        }
    }
    let terms = all
        .into_iter()
        .map(|(key, sheets)| SeriesTerm { delta: key.delta(sp), key, sheets })
        .collect();
    Ok(PerturbSeries { l, n, max_order: order, delta_cut, terms })
}

impl PerturbSeries {
    /// Coefficients of `Σ e^{−sΔ} poly` per sheet.
    pub fn coefficients_at(&self, s: f64) -> Vec<Vec<Complex64>> {
        let mut out = vec![vec![Complex64::zero(); self.n]; self.n];
        for t in &self.terms {
            let w = (-s * t.delta).exp();
            for j in 0..self.n {
                for (a, b) in out[j].iter_mut().zip(&t.sheets[j]) {
                    *a += b * w;
                }
            }
        }
        out
    }

    pub fn term(&self, key: &ExponentKey) -> Option<&SeriesTerm> {
        self.terms.iter().find(|t| &t.key == key)
    }

    /// Largest violation of the matching conditions per exponent key:
    /// `[Q_i(a_ij)]_K − [Q_j(a_ij)]_{K−{ij}}`, over keys the truncation keeps.
    pub fn order_matching_residual(&self, sp: &Spectral<f64>) -> f64 {
        let n = self.n;
        let lookup: BTreeMap<&ExponentKey, &SeriesTerm> = self.terms.iter().map(|t| (&t.key, t)).collect();
        let mut worst: f64 = 0.0;
        let zero = vec![Complex64::zero(); n];
        for t in &self.terms {
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let a = sp.a[i][j];
                    let lhs = eval(&t.sheets[i], a);
                    let rhs = match t.key.lowered(n, i, j) {
                        Some(prev) => eval(lookup.get(&prev).map_or(&zero, |p| &p.sheets[j]), a),
                        None => Complex64::zero(),
                    };
                    let scale = lhs.norm().max(rhs.norm()).max(1.0);
                    worst = worst.max((lhs - rhs).norm() / scale);
                }
            }
            // successors that the truncation would keep must be present
            if t.key.order() < self.max_order {
                for i in 0..n {
                    for j in 0..n {
                        if i == j {
                            continue;
                        }
                        let next = t.key.bumped(n, i, j);
                        if next.delta(sp) <= self.delta_cut && !lookup.contains_key(&next) {
                            let v = eval(&t.sheets[j], sp.a[i][j]);
                            worst = worst.max(v.norm() / v.norm().max(1.0));
                        }
                    }
                }
            }
        }
        worst
    }
}

/// `Σ_terms e^{−sΔ} poly(ζ)` per sheet.
pub fn eval_series(series: &PerturbSeries, s: f64, zeta: Complex64) -> Vec<Complex64> {
    series.coefficients_at(s).iter().map(|c| eval(c, zeta)).collect()
}

/// Max coefficient deviation of the order-`order` series from the exact
/// basis, over all rows and sheets.
pub fn series_error(sp: &Spectral<f64>, s: f64, order: u32) -> Result<f64> {
    let exact = exact_basis(sp, s)?;
    let mut worst: f64 = 0.0;
    for l in 0..sp.n {
        let ser = expand_basis(sp, l, order)?.coefficients_at(s);
        for j in 0..sp.n {
            for (a, b) in ser[j].iter().zip(&exact.rows[l][j]) {
                worst = worst.max((a - b).norm());
            }
        }
    }
    Ok(worst)
}

fn exact_basis(sp: &Spectral<f64>, s: f64) -> Result<BasisMatrix<f64>> {
    let q: Spectral<qd::Quad> = Spectral::new_unchecked(&sp.config());
    Ok(solve_basis_direct(&q, s)?.to_f64())
}

/// Sums the `n = 2` series in closed form. Each sheet's terms of a fixed
/// parity of order form a geometric sequence with ratio read off two
/// orders apart, so the sum extends past the radius of convergence.
pub fn resum_geometric_n2(sp: &Spectral<f64>, l: usize, s: f64) -> Result<Vec<Vec<Complex64>>> {
    if sp.n != 2 {
        return Err(NahmError::InvalidConfig(format!("geometric resummation needs n = 2, got {}", sp.n)));
    }
    let ser = expand_basis_with(sp, l, 4, f64::INFINITY)?;
    let by_order = |m: u32| -> Vec<Vec<Complex64>> {
        ser.terms
            .iter()
            .find(|t| t.key.order() == m)
            .map(|t| t.sheets.clone())
            .unwrap_or_else(|| vec![vec![Complex64::zero(); 2]; 2])
    };
    let r = sp.r[0][1];
    let q = (-2.0 * s * r).exp();
    let mut out = by_order(0);
    for p in 1..=2u32 {
        let first = by_order(p);
        let later = by_order(p + 2);
        for j in 0..2 {
            let den: f64 = first[j].iter().map(|c| c.norm_sqr()).sum();
            if den == 0.0 {
                continue;
            }
            let num: Complex64 = first[j].iter().zip(&later[j]).map(|(a, b)| a.conj() * b).sum();
            let ratio = num / den;
            let w = (-(p as f64) * s * r).exp() / (1.0 - ratio * q);
            for (o, c) in out[j].iter_mut().zip(&first[j]) {
                *o += c * w;
            }
        }
    }
    Ok(out)
}

/// Coefficients of the `n = 2` basis from the rational-exponential closed
/// forms, rows indexed 0-based.
pub fn closed_form_n2(sp: &Spectral<f64>, s: f64) -> Vec<Vec<Vec<Complex64>>> {
    let (a12, a21, r) = (sp.a[0][1], sp.a[1][0], sp.r[0][1]);
    let e = (s * r).exp();
    let e2 = (2.0 * s * r).exp();
    let one = Complex64::new(1.0, 0.0);
    vec![
        vec![
            vec![-a12 + a12 * (a21 - a12) / (a21 * e2 - a12), one],
            vec![Complex64::zero(), (a21 - a12) / (a21 * e - a12 / e)],
        ],
        vec![
            vec![(a12 - a21) / (e - 1.0 / e), Complex64::zero()],
            vec![-a21 + (a12 - a21) / (e2 - 1.0), one],
        ],
    ]
}

/// First-order Lax data at `ζ = 0`: `L(0) ≈ L0 + Σ_p e^{−s r_p} dL_p`,
/// same for `M`, with pairs `p = (i, j)`, `i < j`.
#[derive(Clone, Debug)]
pub struct FirstOrderLax {
    /// Zeroth-order row norms.
    pub norms: Vec<f64>,
    pub l0: CMat,
    pub m0: CMat,
    pub dl: BTreeMap<(usize, usize), CMat>,
    pub dm: BTreeMap<(usize, usize), CMat>,
}

impl FirstOrderLax {
    pub fn eval(&self, sp: &Spectral<f64>, s: f64) -> (CMat, CMat) {
        let mut l = self.l0.clone();
        let mut m = self.m0.clone();
        for (&(i, j), d) in &self.dl {
            let w = Complex64::new((-s * sp.r[i][j]).exp(), 0.0);
            l = &l + &d.scale(w);
            m = &m + &self.dm[&(i, j)].scale(w);
        }
        (l, m)
    }
}

pub fn first_order_lax(sp: &Spectral<f64>) -> Result<FirstOrderLax> {
    let n = sp.n;
    let mut q0 = CMat::zeros(n, n);
    let mut qp: BTreeMap<(usize, usize), CMat> = BTreeMap::new();
    let mut norms = Vec::with_capacity(n);
    for l in 0..n {
        let ser = expand_basis_with(sp, l, 1, f64::INFINITY)?;
        for t in &ser.terms {
            if t.key.order() == 0 {
                for j in 0..n {
                    q0[(l, j)] = t.sheets[j][0];
                }
                let v = pairing_at(sp, &t.sheets, &t.sheets, Complex64::zero())?;
                if !(v.re > 0.0) {
                    return Err(NahmError::NonPositiveNorm { row: l, value: v.re });
                }
                norms.push(v.re);
            } else {
                let p = pair_list(n)
                    .into_iter()
                    .zip(&t.key.multiplicities)
                    .find(|(_, &m)| m > 0)
                    .map(|(p, _)| p)
                    .expect("first-order key has one pair");
                let e = qp.entry(p).or_insert_with(|| CMat::zeros(n, n));
                for j in 0..n {
                    e[(l, j)] += t.sheets[j][0];
                }
            }
        }
    }
    let dm_half = CMat::diag(&norms.iter().map(|v| Complex64::new(v.powf(-0.5), 0.0)).collect::<Vec<_>>());
    let dp_half = CMat::diag(&norms.iter().map(|v| Complex64::new(v.sqrt(), 0.0)).collect::<Vec<_>>());
    let q0inv = Lu::new(&q0).map_err(|_| NahmError::SingularSystem { ratio: 0.0 })?.inverse();
    let zero = Complex64::zero();
    let pdiag = CMat::diag(&(0..n).map(|j| sp.p(j, zero)).collect::<Vec<_>>());
    let hdiag = CMat::diag(&(0..n).map(|j| Complex64::new(sp.x3[j], 0.0)).collect::<Vec<_>>());
    let conj = |m: &CMat| &(&dm_half * m) * &dp_half;
    let l0 = conj(&(&(&q0 * &pdiag) * &q0inv));
    let m0 = conj(&(&(&q0 * &hdiag) * &q0inv));
    let mut dl = BTreeMap::new();
    let mut dm = BTreeMap::new();
    for (&(i, j), q) in &qp {
        let x = q * &q0inv;
        dl.insert((i, j), conj(&(&(&x * &pdiag) - &(&pdiag * &x))));
        let rq = q.scale(Complex64::new(sp.r[i][j], 0.0));
        let lead = &(&rq + &(q * &hdiag)) * &q0inv;
        let mm = &lead - &(&hdiag * &x);
        dm.insert((i, j), conj(&mm));
    }
    Ok(FirstOrderLax { norms, l0, m0, dl, dm })
}

/// Basis matrix assembled from the series of every row at `s`.
pub fn series_basis(sp: &Spectral<f64>, s: f64, order: u32) -> Result<BasisMatrix<f64>> {
    let rows = (0..sp.n)
        .map(|l| expand_basis(sp, l, order).map(|ser| ser.coefficients_at(s)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BasisMatrix { s, rows, normalized: false })
}
