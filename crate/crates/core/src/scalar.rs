//! Real scalar abstraction so the structured solves can run either in plain
//! `f64` or in double-double (`qd::Quad`, about 32 significant digits).

use num_complex::{Complex, Complex64};
use num_traits::{Num, NumAssign};
use qd::Quad;
use std::fmt::Debug;
use std::ops::Neg;

pub trait Real:
    Copy + Debug + PartialOrd + Send + Sync + 'static + Num + NumAssign + Neg<Output = Self>
{
    /// Unit roundoff of the representation.
    const EPS: f64;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn abs(self) -> Self;

    fn from_usize(k: usize) -> Self {
        Self::from_f64(k as f64)
    }
}

impl Real for f64 {
    const EPS: f64 = f64::EPSILON;

    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
}

impl Real for Quad {
    const EPS: f64 = f64::EPSILON * f64::EPSILON;

    #[inline]
    fn from_f64(x: f64) -> Self {
        Quad::from_f64(x)
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self.0 + self.1
    }
    #[inline]
    fn sqrt(self) -> Self {
        Quad::sqrt(self)
    }
    fn exp(self) -> Self {
        // qd's exp does not guard the range; saturate like f64 does.
        if self.0 > 709.0 {
            return Quad::INFINITY;
        }
        if self.0 < -745.0 {
            return Quad::ZERO;
        }
        Quad::exp(self)
    }
    #[inline]
    fn abs(self) -> Self {
        Quad::abs(self)
    }
}

pub type Cx<R> = Complex<R>;

#[inline]
pub fn cx<R: Real>(re: f64, im: f64) -> Cx<R> {
    Complex::new(R::from_f64(re), R::from_f64(im))
}

#[inline]
pub fn lift<R: Real>(z: Complex64) -> Cx<R> {
    Complex::new(R::from_f64(z.re), R::from_f64(z.im))
}

#[inline]
pub fn lower<R: Real>(z: Cx<R>) -> Complex64 {
    Complex64::new(z.re.to_f64(), z.im.to_f64())
}

#[inline]
pub fn real<R: Real>(x: R) -> Cx<R> {
    Complex::new(x, R::zero())
}

#[inline]
pub fn i_unit<R: Real>() -> Cx<R> {
    Complex::new(R::zero(), R::one())
}

/// Modulus in the working precision.
#[inline]
pub fn modulus<R: Real>(z: Cx<R>) -> R {
    z.norm_sqr().sqrt()
}

/// Cheap magnitude `|re| + |im|` used for pivoting.
#[inline]
pub fn abs1<R: Real>(z: Cx<R>) -> R {
    z.re.abs() + z.im.abs()
}

#[inline]
pub fn cexp_real<R: Real>(x: R) -> Cx<R> {
    real(x.exp())
}

pub fn powi<R: Real>(z: Cx<R>, k: usize) -> Cx<R> {
    let mut out = Cx::new(R::one(), R::zero());
    for _ in 0..k {
        out = out * z;
    }
    out
}

/// Principal square root of a complex number in the working precision.
pub fn csqrt<R: Real>(z: Cx<R>) -> Cx<R> {
    let m = modulus(z);
    if m == R::zero() {
        return Cx::new(R::zero(), R::zero());
    }
    let two = R::from_f64(2.0);
    let re = ((m + z.re) / two).sqrt();
    let im_mag = ((m - z.re) / two).sqrt();
    let im = if z.im < R::zero() { -im_mag } else { im_mag };
    Cx::new(re, im)
}
