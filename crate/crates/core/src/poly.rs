use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `c0 + c1·z`, never identically zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPoly {
    c0: Complex64,
    c1: Complex64,
}

impl LinearPoly {
    pub fn new(c0: Complex64, c1: Complex64) -> Result<Self> {
        if c0 == Complex64::ZERO && c1 == Complex64::ZERO {
            return Err(Error::ZeroPolynomial);
        }
        Ok(Self { c0, c1 })
    }

    pub fn constant(c0: Complex64) -> Result<Self> {
        Self::new(c0, Complex64::ZERO)
    }

    /// `scale·(z − root)`.
    pub fn from_root(scale: Complex64, root: Complex64) -> Result<Self> {
        Self::new(-scale * root, scale)
    }

    pub fn c0(&self) -> Complex64 {
        self.c0
    }

    pub fn c1(&self) -> Complex64 {
        self.c1
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.c0 + self.c1 * z
    }

    pub fn degree(&self) -> usize {
        usize::from(self.c1 != Complex64::ZERO)
    }

    pub fn root(&self) -> NodePoint {
        if self.c1 == Complex64::ZERO {
            NodePoint::AtInfinity
        } else {
            NodePoint::Finite(-self.c0 / self.c1)
        }
    }

    pub fn scale(&self, s: Complex64) -> Result<Self> {
        Self::new(self.c0 * s, self.c1 * s)
    }

    pub(crate) fn to_array(self) -> [f64; 4] {
        [self.c0.re, self.c0.im, self.c1.re, self.c1.im]
    }

    pub(crate) fn from_array(a: [f64; 4]) -> Result<Self> {
        Self::new(Complex64::new(a[0], a[1]), Complex64::new(a[2], a[3]))
    }
}

/// Root of a linear polynomial, possibly at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NodePoint {
    Finite(Complex64),
    AtInfinity,
}

impl NodePoint {
    pub fn finite(&self) -> Option<Complex64> {
        match self {
            NodePoint::Finite(z) => Some(*z),
            NodePoint::AtInfinity => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, NodePoint::AtInfinity)
    }
}
