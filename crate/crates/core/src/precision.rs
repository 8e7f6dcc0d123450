//! Working precision and a minimal complex type over MPFR floats.

use num_complex::Complex64;
use rug::Float;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrecisionContext {
    digits: u32,
}

impl PrecisionContext {
    pub fn new(digits: u32) -> Result<Self> {
        if digits < 15 {
            return Err(Error::DomainError(format!(
                "precision must be at least 15 digits, got {digits}"
            )));
        }
        Ok(Self { digits })
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    /// Mantissa bits, with a few guard bits on top of the decimal request.
    pub fn bits(&self) -> u32 {
        (self.digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 8
    }

    pub fn float(&self, x: f64) -> Float {
        Float::with_val(self.bits(), x)
    }

    pub fn zero(&self) -> MpComplex {
        MpComplex::zero(self.bits())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpComplex {
    pub re: Float,
    pub im: Float,
}

impl MpComplex {
    pub fn zero(prec: u32) -> Self {
        Self {
            re: Float::new(prec),
            im: Float::new(prec),
        }
    }

    pub fn real(re: Float) -> Self {
        let im = Float::new(re.prec());
        Self { re, im }
    }

    pub fn from_c64(prec: u32, z: Complex64) -> Self {
        Self {
            re: Float::with_val(prec, z.re),
            im: Float::with_val(prec, z.im),
        }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        let p = self.prec();
        Self {
            re: Float::with_val(p, &self.re + &o.re),
            im: Float::with_val(p, &self.im + &o.im),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        let p = self.prec();
        Self {
            re: Float::with_val(p, &self.re - &o.re),
            im: Float::with_val(p, &self.im - &o.im),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let p = self.prec();
        let rr = Float::with_val(p, &self.re * &o.re);
        let ii = Float::with_val(p, &self.im * &o.im);
        let ri = Float::with_val(p, &self.re * &o.im);
        let ir = Float::with_val(p, &self.im * &o.re);
        Self {
            re: rr - ii,
            im: ri + ir,
        }
    }

    pub fn conj_mul(&self, o: &Self) -> Self {
        self.conj().mul(o)
    }

    pub fn scale(&self, s: &Float) -> Self {
        let p = self.prec();
        Self {
            re: Float::with_val(p, &self.re * s),
            im: Float::with_val(p, &self.im * s),
        }
    }

    pub fn div_real(&self, s: &Float) -> Self {
        let p = self.prec();
        Self {
            re: Float::with_val(p, &self.re / s),
            im: Float::with_val(p, &self.im / s),
        }
    }

    pub fn div(&self, o: &Self) -> Self {
        let den = o.norm_sqr();
        self.mul(&o.conj()).div_real(&den)
    }

    pub fn conj(&self) -> Self {
        Self {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }

    pub fn norm_sqr(&self) -> Float {
        let p = self.prec();
        let a = Float::with_val(p, self.re.square_ref());
        let b = Float::with_val(p, self.im.square_ref());
        a + b
    }

    pub fn abs(&self) -> Float {
        self.norm_sqr().sqrt()
    }

    /// exp(i theta) at the precision of theta.
    pub fn cis(theta: &Float) -> Self {
        let (s, c) = theta.clone().sin_cos(Float::new(theta.prec()));
        Self { re: c, im: s }
    }
}
