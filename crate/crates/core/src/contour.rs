//! Trapezoid-rule discretizations of circles and ellipses.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default number of quadrature points.
pub const DEFAULT_POINTS: usize = 512;
/// Upper bound on the elliptic radius of the default contour.
pub const MAX_ELLIPSE_RHO: f64 = 1.5;
/// Tolerance of the winding-number self check.
pub const WINDING_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Circle {
        center: Complex64,
        radius: f64,
    },
    /// Axis-aligned, semi-axis `semi_re` along the real line.
    Ellipse {
        center: Complex64,
        semi_re: f64,
        semi_im: f64,
    },
}

/// Counterclockwise closed curve with nodes `ζ_l` and increments `dζ_l`, so
/// that `(1/2πi) Σ f(ζ_l) dζ_l ≈ (1/2πi) ∮ f(ζ) dζ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    shape: Shape,
    nodes: Vec<Complex64>,
    weights: Vec<Complex64>,
}

/// Configuration form `{"center": [re, im], "radius": r, "points": M}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub center: [f64; 2],
    pub radius: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    DEFAULT_POINTS
}

impl ContourSpec {
    pub fn build(&self) -> Result<Contour> {
        Contour::circle(
            Complex64::new(self.center[0], self.center[1]),
            self.radius,
            self.points,
        )
    }
}

impl Contour {
    pub fn circle(center: Complex64, radius: f64, points: usize) -> Result<Self> {
        if !(radius > 0.0) || points < 3 {
            return Err(Error::GeometryViolation(format!(
                "circle needs positive radius and at least 3 points (radius {radius}, points {points})"
            )));
        }
        let h = 2.0 * PI / points as f64;
        let (nodes, weights) = (0..points)
            .map(|l| {
                let e = Complex64::from_polar(1.0, h * l as f64);
                (center + radius * e, Complex64::I * radius * e * h)
            })
            .unzip();
        Ok(Self {
            shape: Shape::Circle { center, radius },
            nodes,
            weights,
        })
    }

    pub fn ellipse(center: Complex64, semi_re: f64, semi_im: f64, points: usize) -> Result<Self> {
        if !(semi_re > 0.0 && semi_im > 0.0) || points < 3 {
            return Err(Error::GeometryViolation(format!(
                "ellipse needs positive semi-axes and at least 3 points ({semi_re}, {semi_im}, {points})"
            )));
        }
        let h = 2.0 * PI / points as f64;
        let (nodes, weights) = (0..points)
            .map(|l| {
                let (s, c) = (h * l as f64).sin_cos();
                let z = center + Complex64::new(semi_re * c, semi_im * s);
                (z, Complex64::new(-semi_re * s, semi_im * c) * h)
            })
            .unzip();
        Ok(Self {
            shape: Shape::Ellipse {
                center,
                semi_re,
                semi_im,
            },
            nodes,
            weights,
        })
    }

    /// Bernstein ellipse with foci `a, b` whose elliptic radius is the
    /// geometric mean of 1 and that of the nearest avoided point, capped at
    /// [`MAX_ELLIPSE_RHO`]. Integrands stay small on a curve hugging the
    /// interval, which keeps rounding far below the quadrature tolerances.
    /// Falls back to [`Contour::circle_around_interval`] for a degenerate
    /// interval.
    pub fn around_interval((a, b): (f64, f64), avoid: &[Complex64], points: usize) -> Result<Self> {
        check_clear((a, b), avoid)?;
        let mid = Complex64::new((a + b) / 2.0, 0.0);
        let half = (b - a) / 2.0;
        if half > 0.0 {
            let rho_min = avoid
                .iter()
                .map(|&z| bernstein_radius((z - mid) / half))
                .fold(f64::INFINITY, f64::min);
            let rho = rho_min.sqrt().min(MAX_ELLIPSE_RHO);
            if rho > 1.0 {
                let ell = Self::ellipse(
                    mid,
                    half * (rho + 1.0 / rho) / 2.0,
                    half * (rho - 1.0 / rho) / 2.0,
                    points,
                )?;
                if ell.encloses_interval((a, b)) && ell.excludes(avoid) {
                    return Ok(ell);
                }
            }
        }
        Self::circle_around_interval((a, b), avoid, points)
    }

    /// Circle centred at `(a + b)/2` with radius `(b − a)/2` plus half the
    /// smallest distance from `[a, b]` to `avoid`.
    pub fn circle_around_interval(
        (a, b): (f64, f64),
        avoid: &[Complex64],
        points: usize,
    ) -> Result<Self> {
        let dist = check_clear((a, b), avoid)?;
        let mid = Complex64::new((a + b) / 2.0, 0.0);
        let half = (b - a) / 2.0;
        let margin = if dist.is_finite() {
            dist / 2.0
        } else {
            half.max(1.0)
        };
        let circle = Self::circle(mid, half + margin, points)?;
        if circle.encloses_interval((a, b)) && circle.excludes(avoid) {
            Ok(circle)
        } else {
            Err(Error::GeometryViolation(
                "no circle around the interval excludes every avoided point".into(),
            ))
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(1/2πi) Σ dζ_l/(ζ_l − z)`: 1 inside, 0 outside.
    pub fn winding(&self, z: Complex64) -> Complex64 {
        self.integrate_fn(|zeta| 1.0 / (zeta - z))
    }

    pub fn is_inside(&self, z: Complex64) -> bool {
        (self.winding(z) - 1.0).norm() <= WINDING_TOL
    }

    pub fn is_outside(&self, z: Complex64) -> bool {
        self.winding(z).norm() <= WINDING_TOL
    }

    pub fn require_outside(&self, z: Complex64, what: &str) -> Result<()> {
        if self.is_outside(z) {
            Ok(())
        } else {
            Err(Error::GeometryViolation(format!(
                "{what} {z} is not outside the contour"
            )))
        }
    }

    fn encloses_interval(&self, (a, b): (f64, f64)) -> bool {
        (0..=8).all(|i| self.is_inside(Complex64::new(a + (b - a) * i as f64 / 8.0, 0.0)))
    }

    fn excludes(&self, avoid: &[Complex64]) -> bool {
        avoid.iter().all(|&z| self.is_outside(z))
    }

    /// `(1/2πi) Σ values_l dζ_l`.
    pub fn integrate(&self, values: &[Complex64]) -> Complex64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        let s: Complex64 = values.iter().zip(&self.weights).map(|(v, w)| v * w).sum();
        s / Complex64::new(0.0, 2.0 * PI)
    }

    pub fn integrate_fn<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Complex64 {
        let s: Complex64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, w)| f(z) * w)
            .sum();
        s / Complex64::new(0.0, 2.0 * PI)
    }
}

/// Smallest distance from `[a, b]` to `avoid`; fails when it is zero.
fn check_clear((a, b): (f64, f64), avoid: &[Complex64]) -> Result<f64> {
    if !(a <= b) {
        return Err(Error::GeometryViolation(format!(
            "empty interval [{a}, {b}]"
        )));
    }
    let dist = avoid
        .iter()
        .map(|&z| (z - z.re.clamp(a, b)).norm())
        .fold(f64::INFINITY, f64::min);
    if dist == 0.0 {
        return Err(Error::GeometryViolation(
            "an avoided point lies on the interval".into(),
        ));
    }
    Ok(dist)
}

/// `ρ ≥ 1` of the Bernstein ellipse through `u` (foci ±1).
fn bernstein_radius(u: Complex64) -> f64 {
    let s = (u * u - 1.0).sqrt();
    (u + s).norm().max((u - s).norm())
}
