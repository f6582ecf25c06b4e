//! s-independent geometry of the reducible spectral curve: sheets, double
//! points, separations and the rotation that makes a configuration generic.

use crate::error::{NahmError, Result};
use crate::scalar::{lift, lower, modulus, real, Cx, Real};
use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub type Point = [f64; 3];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonopoleConfig {
    pub points: Vec<Point>,
}

impl MonopoleConfig {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let cfg = MonopoleConfig { points };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(NahmError::EmptyConfig);
        }
        for (k, p) in self.points.iter().enumerate() {
            if p.iter().any(|v| !v.is_finite()) {
                return Err(NahmError::NonFiniteCoordinate(k));
            }
        }
        let scale = self.scale();
        for i in 0..self.n() {
            for j in i + 1..self.n() {
                let r = distance(&self.points[i], &self.points[j]);
                if r <= 1e-12 * scale.max(1.0) {
                    return Err(NahmError::DuplicatePoints { i: i + 1, j: j + 1, r });
                }
            }
        }
        Ok(())
    }

    /// Largest coordinate magnitude.
    pub fn scale(&self) -> f64 {
        self.points.iter().flat_map(|p| p.iter()).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn rotated(&self, rot: &Rotation) -> Self {
        MonopoleConfig { points: self.points.iter().map(|p| rot.apply(p)).collect() }
    }

    /// Smallest pairwise separation; `None` for a single point.
    pub fn min_separation(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for i in 0..self.n() {
            for j in i + 1..self.n() {
                let r = distance(&self.points[i], &self.points[j]);
                best = Some(best.map_or(r, |b| b.min(r)));
            }
        }
        best
    }
}

pub fn distance(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Proper rotation stored row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation(pub [[f64; 3]; 3]);

impl Rotation {
    pub fn identity() -> Self {
        Rotation([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    /// Rotation from a (not necessarily normalized) quaternion.
    pub fn from_quaternion(q: [f64; 4]) -> Self {
        let nrm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        let [w, x, y, z] = q.map(|v| v / nrm);
        Rotation([
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ])
    }

    pub fn apply(&self, p: &Point) -> Point {
        let m = &self.0;
        [
            m[0][0] * p[0] + m[0][1] * p[1] + m[0][2] * p[2],
            m[1][0] * p[0] + m[1][1] * p[1] + m[1][2] * p[2],
            m[2][0] * p[0] + m[2][1] * p[1] + m[2][2] * p[2],
        ]
    }
}

/// Quadratic sheet polynomial `c0 + c1 ζ + c2 ζ²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SheetPolynomial {
    pub j: usize,
    pub coefficients: [Complex64; 3],
}

impl SheetPolynomial {
    pub fn eval(&self, zeta: Complex64) -> Complex64 {
        let [c0, c1, c2] = self.coefficients;
        c0 + zeta * (c1 + zeta * c2)
    }
}

/// Sheet polynomial of point `j` (1-based).
pub fn sheet_polynomial(cfg: &MonopoleConfig, j: usize) -> Result<SheetPolynomial> {
    let p = point_at(cfg, j)?;
    let z = Complex64::new(p[0], p[1]);
    Ok(SheetPolynomial { j, coefficients: [z, Complex64::new(-2.0 * p[2], 0.0), -z.conj()] })
}

fn point_at(cfg: &MonopoleConfig, j: usize) -> Result<Point> {
    if j == 0 || j > cfg.n() {
        return Err(NahmError::IndexOutOfRange { index: j, n: cfg.n() });
    }
    Ok(cfg.points[j - 1])
}

/// Split of `p_j(ζ)/ζ` into pieces holomorphic near 0 and near ∞:
/// returns `(h⁺, h⁻)` for point `j` (1-based).
pub fn h_split(cfg: &MonopoleConfig, j: usize, zeta: Complex64) -> Result<(Complex64, Complex64)> {
    let p = point_at(cfg, j)?;
    if zeta == Complex64::zero() {
        return Err(NahmError::ZeroZeta);
    }
    let z = Complex64::new(p[0], p[1]);
    Ok((p[2] + z.conj() * zeta, -z / zeta + p[2]))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairData {
    pub i: usize,
    pub j: usize,
    pub a: Complex64,
    pub r: f64,
    pub z: Complex64,
}

/// Double point `a_ij` of sheets `i` and `j`, in the working precision.
/// Uses whichever of the two equivalent forms avoids cancellation.
fn double_point<R: Real>(pi: &Point, pj: &Point) -> Option<(Cx<R>, R)> {
    let dx = R::from_f64(pj[0]) - R::from_f64(pi[0]);
    let dy = R::from_f64(pj[1]) - R::from_f64(pi[1]);
    let d3 = R::from_f64(pi[2]) - R::from_f64(pj[2]);
    let r = (dx * dx + dy * dy + d3 * d3).sqrt();
    let zji = Cx::new(dx, dy);
    if zji.is_zero() {
        return None;
    }
    let a = if d3 >= R::zero() {
        // (d3 + r)/conj(z_ji) = z_ji/(r - d3)
        if r - d3 == R::zero() {
            return None;
        }
        zji / real(r - d3)
    } else {
        real(d3 + r) / zji.conj()
    };
    Some((a, r))
}

/// All ordered pairs `i ≠ j` (1-based indices in the result).
pub fn pair_data(cfg: &MonopoleConfig) -> Result<Vec<PairData>> {
    let sp = Spectral::<f64>::new(cfg)?;
    let mut out = Vec::new();
    for i in 0..sp.n {
        for j in 0..sp.n {
            if i != j {
                out.push(PairData {
                    i: i + 1,
                    j: j + 1,
                    a: sp.a[i][j],
                    r: sp.r[i][j],
                    z: sp.z[i] - sp.z[j],
                });
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenericityThresholds {
    pub min_modulus: f64,
    pub max_modulus: f64,
    pub min_separation: f64,
}

impl Default for GenericityThresholds {
    fn default() -> Self {
        GenericityThresholds { min_modulus: 1e-6, max_modulus: 1e6, min_separation: 1e-6 }
    }
}

/// Checks the genericity conditions in double precision.
pub fn check_generic(cfg: &MonopoleConfig, th: &GenericityThresholds) -> Result<()> {
    cfg.validate()?;
    let n = cfg.n();
    let mut vals: Vec<(usize, usize, Complex64)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (a, _) = double_point::<f64>(&cfg.points[i], &cfg.points[j])
                .ok_or(NahmError::VerticalPair { i: i + 1, j: j + 1 })?;
            let m = a.norm();
            if !(m.is_finite() && m >= th.min_modulus && m <= th.max_modulus) {
                return Err(NahmError::VerticalPair { i: i + 1, j: j + 1 });
            }
            vals.push((i, j, a));
        }
    }
    let maxmod = vals.iter().map(|v| v.2.norm()).fold(0.0, f64::max);
    for u in 0..vals.len() {
        for v in u + 1..vals.len() {
            if (vals[u].2 - vals[v].2).norm() < th.min_separation * maxmod {
                let (i, j, _) = vals[u];
                let (k, l, _) = vals[v];
                return Err(NahmError::DegenerateConfig { i: i + 1, j: j + 1, k: k + 1, l: l + 1 });
            }
        }
    }
    Ok(())
}

pub const MAX_ROTATION_ATTEMPTS: usize = 1000;

/// Rotates `cfg` until its double points are finite, nonzero and distinct.
/// Returns the identity when `cfg` already qualifies.
pub fn genericize(cfg: &MonopoleConfig, seed: u64) -> Result<(Rotation, MonopoleConfig)> {
    genericize_with(cfg, seed, &GenericityThresholds::default())
}

pub fn genericize_with(
    cfg: &MonopoleConfig,
    seed: u64,
    th: &GenericityThresholds,
) -> Result<(Rotation, MonopoleConfig)> {
    cfg.validate()?;
    if check_generic(cfg, th).is_ok() {
        return Ok((Rotation::identity(), cfg.clone()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ROTATION_ATTEMPTS {
        // normalized Gaussian quaternion is Haar distributed on SO(3)
        let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let rot = Rotation::from_quaternion(q);
        let rotated = cfg.rotated(&rot);
        if check_generic(&rotated, th).is_ok() {
            return Ok((rot, rotated));
        }
    }
    Err(NahmError::GenericityFailure { attempts: MAX_ROTATION_ATTEMPTS })
}

/// Spectral data in working precision `R`. Indices are 0-based.
#[derive(Clone, Debug)]
pub struct Spectral<R: Real> {
    pub n: usize,
    pub points: Vec<Point>,
    pub z: Vec<Cx<R>>,
    pub x3: Vec<R>,
    /// `a[i][j]`, zero on the diagonal.
    pub a: Vec<Vec<Cx<R>>>,
    /// `r[i][j]`, zero on the diagonal.
    pub r: Vec<Vec<R>>,
}

impl<R: Real> Spectral<R> {
    /// Builds spectral data; the configuration must already be generic.
    pub fn new(cfg: &MonopoleConfig) -> Result<Self> {
        check_generic(cfg, &GenericityThresholds::default())?;
        Ok(Self::new_unchecked(cfg))
    }

    /// Builds spectral data without the genericity check; vertical pairs
    /// get a zero double point.
    pub fn new_unchecked(cfg: &MonopoleConfig) -> Self {
        let n = cfg.n();
        let z = cfg.points.iter().map(|p| Cx::new(R::from_f64(p[0]), R::from_f64(p[1]))).collect();
        let x3 = cfg.points.iter().map(|p| R::from_f64(p[2])).collect();
        let mut a = vec![vec![Cx::zero(); n]; n];
        let mut r = vec![vec![R::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    match double_point::<R>(&cfg.points[i], &cfg.points[j]) {
                        Some((aij, rij)) => {
                            a[i][j] = aij;
                            r[i][j] = rij;
                        }
                        None => {
                            r[i][j] = R::from_f64(distance(&cfg.points[i], &cfg.points[j]));
                        }
                    }
                }
            }
        }
        Spectral { n, points: cfg.points.clone(), z, x3, a, r }
    }

    pub fn config(&self) -> MonopoleConfig {
        MonopoleConfig { points: self.points.clone() }
    }

    #[inline]
    pub fn p(&self, j: usize, zeta: Cx<R>) -> Cx<R> {
        let two = R::from_f64(2.0);
        self.z[j] - zeta * real(two * self.x3[j]) - self.z[j].conj() * zeta * zeta
    }

    #[inline]
    pub fn h_plus(&self, j: usize, zeta: Cx<R>) -> Cx<R> {
        real(self.x3[j]) + self.z[j].conj() * zeta
    }

    #[inline]
    pub fn h_minus(&self, j: usize, zeta: Cx<R>) -> Cx<R> {
        real(self.x3[j]) - self.z[j] / zeta
    }

    /// `∏_{j≠i} (p_i(ζ) − p_j(ζ))`.
    pub fn sheet_denominator(&self, i: usize, zeta: Cx<R>) -> Cx<R> {
        let pi = self.p(i, zeta);
        let mut d = Cx::one();
        for j in 0..self.n {
            if j != i {
                d = d * (pi - self.p(j, zeta));
            }
        }
        d
    }

    /// Coefficients of `A_k(ζ) = ∏_{j≠k} (ζ − a_kj)`.
    pub fn annihilator(&self, k: usize) -> Vec<Cx<R>> {
        let roots: Vec<Cx<R>> = (0..self.n).filter(|&j| j != k).map(|j| self.a[k][j]).collect();
        crate::poly::from_roots(&roots)
    }

    pub fn max_r(&self) -> f64 {
        let mut m: f64 = 0.0;
        for row in &self.r {
            for v in row {
                m = m.max(v.to_f64());
            }
        }
        m
    }

    pub fn min_r(&self) -> Option<f64> {
        let mut m: Option<f64> = None;
        for i in 0..self.n {
            for j in i + 1..self.n {
                let v = self.r[i][j].to_f64();
                m = Some(m.map_or(v, |b| b.min(v)));
            }
        }
        m
    }

    /// Smallest distance from `zeta` to any double point, with the pair.
    pub fn nearest_double_point(&self, zeta: Cx<R>) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    let d = modulus(zeta - self.a[i][j]).to_f64();
                    if best.map_or(true, |b| d < b.2) {
                        best = Some((i, j, d));
                    }
                }
            }
        }
        best
    }

    /// Same data in double precision.
    pub fn to_f64(&self) -> Spectral<f64> {
        Spectral {
            n: self.n,
            points: self.points.clone(),
            z: self.z.iter().map(|&v| lower(v)).collect(),
            x3: self.x3.iter().map(|v| v.to_f64()).collect(),
            a: self.a.iter().map(|row| row.iter().map(|&v| lower(v)).collect()).collect(),
            r: self.r.iter().map(|row| row.iter().map(|v| v.to_f64()).collect()).collect(),
        }
    }

    pub fn a_f64(&self, i: usize, j: usize) -> Complex64 {
        lower(self.a[i][j])
    }

    pub fn zeta(&self, z: Complex64) -> Cx<R> {
        lift(z)
    }
}
