use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{LinearPoly, NodePoint};

/// Default truncation length for pencils standing in for an infinite one.
pub const DEFAULT_MAX_LEN: usize = 64;

/// Tridiagonal pencil `zB − A` stored through its recurrence coefficients.
///
/// Entry mapping (row, column):
/// `B[j][j] = β_j.c1`, `A[j][j] = −β_j.c0`,
/// `B[j+1][j] = −αᴸ_j.c1`, `A[j+1][j] = αᴸ_j.c0`,
/// `B[j][j+1] = −αᴿ_j.c1`, `A[j][j+1] = αᴿ_j.c0`.
/// Hence `(zB − A)[j][j] = β_j(z)` and the off-diagonals are `−α_j(z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PencilDoc", into = "PencilDoc")]
pub struct TridiagonalPencil {
    beta: Vec<LinearPoly>,
    alpha_l: Vec<LinearPoly>,
    alpha_r: Vec<LinearPoly>,
}

/// Leading `n×n` blocks of `A` and `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSection {
    pub order: usize,
    pub a: DMatrix<Complex64>,
    pub b: DMatrix<Complex64>,
}

impl FiniteSection {
    /// `z·B − A`.
    pub fn at(&self, z: Complex64) -> DMatrix<Complex64> {
        &self.b * z - &self.a
    }
}

impl TridiagonalPencil {
    /// `alpha_l`, `alpha_r` must have `len(beta) − 1` entries, or `len(beta)`
    /// with the last one unused.
    pub fn new(
        beta: Vec<LinearPoly>,
        alpha_l: Vec<LinearPoly>,
        alpha_r: Vec<LinearPoly>,
    ) -> Result<Self> {
        let n = beta.len();
        let ok = alpha_l.len() == alpha_r.len() && (alpha_l.len() + 1 == n || alpha_l.len() == n);
        if !ok {
            return Err(Error::LengthMismatch {
                beta: n,
                alpha_l: alpha_l.len(),
                alpha_r: alpha_r.len(),
            });
        }
        Ok(Self {
            beta,
            alpha_l,
            alpha_r,
        })
    }

    /// J-fraction pencil `z − J`: `β_n = z − diag_n`, `αᴸ_n = αᴿ_n = off_n`.
    pub fn jacobi(diag: &[Complex64], off: &[Complex64]) -> Result<Self> {
        let one = Complex64::ONE;
        let beta = diag
            .iter()
            .map(|&b| LinearPoly::new(-b, one))
            .collect::<Result<Vec<_>>>()?;
        let alpha = off
            .iter()
            .map(|&a| LinearPoly::constant(a))
            .collect::<Result<Vec<_>>>()?;
        Self::new(beta, alpha.clone(), alpha)
    }

    /// Coefficients drawn uniformly from the closed unit disk.
    pub fn random_bounded<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Self {
        let mut draw = || loop {
            let c0 = unit_disk(rng);
            let c1 = unit_disk(rng);
            if let Ok(p) = LinearPoly::new(c0, c1) {
                return p;
            }
        };
        let beta: Vec<_> = (0..n).map(|_| draw()).collect();
        let alpha_l: Vec<_> = (0..n.saturating_sub(1)).map(|_| draw()).collect();
        let alpha_r: Vec<_> = (0..n.saturating_sub(1)).map(|_| draw()).collect();
        Self {
            beta,
            alpha_l,
            alpha_r,
        }
    }

    /// Number of diagonal entries stored.
    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    pub fn beta(&self) -> &[LinearPoly] {
        &self.beta
    }

    pub fn alpha_l(&self) -> &[LinearPoly] {
        &self.alpha_l
    }

    pub fn alpha_r(&self) -> &[LinearPoly] {
        &self.alpha_r
    }

    /// `αᴸ_k(z)·αᴿ_k(z)`.
    pub fn alpha_product(&self, k: usize, z: Complex64) -> Complex64 {
        self.alpha_l[k].eval(z) * self.alpha_r[k].eval(z)
    }

    pub(crate) fn check_order(&self, n: usize) -> Result<()> {
        if n > self.len() {
            return Err(Error::OrderTooLarge {
                requested: n,
                available: self.len(),
            });
        }
        Ok(())
    }

    /// First `n` rows of the pencil.
    pub fn truncate(&self, n: usize) -> Result<Self> {
        self.check_order(n)?;
        let m = n.saturating_sub(1).min(self.alpha_l.len());
        Ok(Self {
            beta: self.beta[..n].to_vec(),
            alpha_l: self.alpha_l[..m].to_vec(),
            alpha_r: self.alpha_r[..m].to_vec(),
        })
    }

    pub fn section(&self, n: usize) -> Result<FiniteSection> {
        self.check_order(n)?;
        let mut a = DMatrix::zeros(n, n);
        let mut b = DMatrix::zeros(n, n);
        for j in 0..n {
            b[(j, j)] = self.beta[j].c1();
            a[(j, j)] = -self.beta[j].c0();
            if j + 1 < n {
                let (l, r) = (self.alpha_l[j], self.alpha_r[j]);
                b[(j + 1, j)] = -l.c1();
                a[(j + 1, j)] = l.c0();
                b[(j, j + 1)] = -r.c1();
                a[(j, j + 1)] = r.c0();
            }
        }
        Ok(FiniteSection { order: n, a, b })
    }

    /// `z_{2k+1} = root(αᴸ_k)`, `z_{2k+2} = root(αᴿ_k)`, listed as `z_1, z_2, …`.
    pub fn node_sequence(&self, count: usize) -> Result<Vec<NodePoint>> {
        if count > 2 * self.alpha_l.len() {
            return Err(Error::OrderTooLarge {
                requested: count,
                available: 2 * self.alpha_l.len(),
            });
        }
        Ok((0..count)
            .map(|i| {
                let k = i / 2;
                if i % 2 == 0 {
                    self.alpha_l[k].root()
                } else {
                    self.alpha_r[k].root()
                }
            })
            .collect())
    }

    /// The pencil `Δ·D·(zB − A)·D⁻¹·Δ` with diagonal `Δ`, `D`.
    ///
    /// Row `j` is multiplied by `Δ_j D_j` and column `k` by `Δ_k / D_k`, so
    /// `β_j → Δ_j² β_j`, `αᴸ_j → Δ_{j+1}Δ_j (D_{j+1}/D_j) αᴸ_j` and
    /// `αᴿ_j → Δ_jΔ_{j+1} (D_j/D_{j+1}) αᴿ_j`. Convergents scale by `1/Δ_0²`.
    pub fn scale_balance(&self, delta: &[Complex64], d: &[Complex64]) -> Result<Self> {
        let n = self.len();
        for (i, v) in delta.iter().take(n).chain(d.iter().take(n)).enumerate() {
            if *v == Complex64::ZERO {
                return Err(Error::ZeroScaleFactor(i % n.max(1)));
            }
        }
        if delta.len() < n || d.len() < n {
            return Err(Error::InvalidArgument(format!(
                "scale sequences need {n} entries, got {} and {}",
                delta.len(),
                d.len()
            )));
        }
        let m = self.alpha_l.len().min(n.saturating_sub(1));
        let beta = (0..n)
            .map(|j| self.beta[j].scale(delta[j] * delta[j]))
            .collect::<Result<Vec<_>>>()?;
        let alpha_l = (0..m)
            .map(|j| self.alpha_l[j].scale(delta[j + 1] * delta[j] * d[j + 1] / d[j]))
            .collect::<Result<Vec<_>>>()?;
        let alpha_r = (0..m)
            .map(|j| self.alpha_r[j].scale(delta[j] * delta[j + 1] * d[j] / d[j + 1]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(beta, alpha_l, alpha_r)
    }

    /// Diagonal `D` making `αᴸ = αᴿ`, available when each `αᴿ_j` is a
    /// constant multiple of `αᴸ_j` (always so for J-fractions).
    pub fn symmetrizing_balance(&self) -> Result<(Self, Vec<Complex64>)> {
        let n = self.len();
        let mut d = vec![Complex64::ONE; n];
        for j in 0..self.alpha_l.len().min(n.saturating_sub(1)) {
            let (l, r) = (self.alpha_l[j], self.alpha_r[j]);
            let ratio = if l.c1() != Complex64::ZERO {
                r.c1() / l.c1()
            } else {
                r.c0() / l.c0()
            };
            let proportional = (r.c0() - ratio * l.c0()).norm() <= 1e-14 * r.c0().norm().max(1.0)
                && (r.c1() - ratio * l.c1()).norm() <= 1e-14 * r.c1().norm().max(1.0);
            if !proportional || ratio == Complex64::ZERO || !ratio.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "alphaR_{j} is not a nonzero multiple of alphaL_{j}"
                )));
            }
            d[j + 1] = d[j] * ratio.sqrt();
        }
        let ones = vec![Complex64::ONE; n];
        Ok((self.scale_balance(&ones, &d)?, d))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Serialization(e.to_string()))
    }
}

fn unit_disk<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    loop {
        let re: f64 = rng.random_range(-1.0..=1.0);
        let im: f64 = rng.random_range(-1.0..=1.0);
        if re * re + im * im <= 1.0 {
            return Complex64::new(re, im);
        }
    }
}

#[derive(Serialize, Deserialize)]
struct PencilDoc {
    beta: Vec<[f64; 4]>,
    #[serde(rename = "alphaL")]
    alpha_l: Vec<[f64; 4]>,
    #[serde(rename = "alphaR")]
    alpha_r: Vec<[f64; 4]>,
}

impl From<TridiagonalPencil> for PencilDoc {
    fn from(p: TridiagonalPencil) -> Self {
        let arr = |v: &[LinearPoly]| v.iter().map(|x| x.to_array()).collect();
        PencilDoc {
            beta: arr(&p.beta),
            alpha_l: arr(&p.alpha_l),
            alpha_r: arr(&p.alpha_r),
        }
    }
}

impl TryFrom<PencilDoc> for TridiagonalPencil {
    type Error = Error;

    fn try_from(doc: PencilDoc) -> Result<Self> {
        let polys = |v: Vec<[f64; 4]>| {
            v.into_iter()
                .map(LinearPoly::from_array)
                .collect::<Result<Vec<_>>>()
        };
        Self::new(polys(doc.beta)?, polys(doc.alpha_l)?, polys(doc.alpha_r)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_entry_section() {
        let p = TridiagonalPencil::new(
            vec![LinearPoly::new(Complex64::ZERO, c(2.0, 0.0)).unwrap()],
            vec![],
            vec![],
        )
        .unwrap();
        let s = p.section(1).unwrap();
        assert_eq!(s.a[(0, 0)], Complex64::ZERO);
        assert_eq!(s.b[(0, 0)], c(2.0, 0.0));
    }

    #[test]
    fn jacobi_section_has_identity_b() {
        let diag = [c(0.1, 0.0), c(-0.2, 0.0), c(0.3, 0.0)];
        let off = [c(0.5, 0.0), c(0.7, 0.0)];
        let s = TridiagonalPencil::jacobi(&diag, &off)
            .unwrap()
            .section(3)
            .unwrap();
        assert_eq!(s.b, DMatrix::identity(3, 3));
        assert_eq!(s.a[(0, 0)], c(0.1, 0.0));
        assert_eq!(s.a[(1, 0)], c(0.5, 0.0));
        assert_eq!(s.a[(0, 1)], c(0.5, 0.0));
        assert_eq!(s.a[(2, 1)], c(0.7, 0.0));
        assert!(s.a.iter().all(|x| x.im == 0.0));
    }

    #[test]
    fn order_too_large() {
        let p = TridiagonalPencil::jacobi(&[Complex64::ZERO; 2], &[Complex64::ONE]).unwrap();
        assert!(matches!(
            p.section(3),
            Err(Error::OrderTooLarge {
                requested: 3,
                available: 2
            })
        ));
    }

    #[test]
    fn length_mismatch() {
        let one = LinearPoly::constant(Complex64::ONE).unwrap();
        assert!(matches!(
            TridiagonalPencil::new(vec![one; 3], vec![one; 1], vec![one; 2]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(TridiagonalPencil::new(vec![one; 3], vec![one; 3], vec![one; 3]).is_ok());
    }

    #[test]
    fn diagonal_reads_back_beta() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = TridiagonalPencil::random_bounded(&mut rng, 9);
        let s = p.section(9).unwrap();
        for _ in 0..10 {
            let z = unit_disk(&mut rng) * 3.0;
            let m = s.at(z);
            for j in 0..9 {
                assert_eq!(z * s.b[(j, j)] - s.a[(j, j)], p.beta()[j].eval(z));
                if j + 1 < 9 {
                    assert!((m[(j + 1, j)] + p.alpha_l()[j].eval(z)).norm() < 1e-15);
                    assert!((m[(j, j + 1)] + p.alpha_r()[j].eval(z)).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn node_sequence_constant_alphas_at_infinity() {
        let p = TridiagonalPencil::jacobi(&[Complex64::ZERO; 2], &[Complex64::ONE]).unwrap();
        assert_eq!(
            p.node_sequence(2).unwrap(),
            vec![NodePoint::AtInfinity, NodePoint::AtInfinity]
        );
        assert!(p.node_sequence(3).is_err());
    }

    #[test]
    fn node_sequence_conjugate_pair() {
        let b10 = c(0.8, 0.0);
        let l = LinearPoly::from_root(b10, c(1.0, 2.0)).unwrap();
        let r = LinearPoly::from_root(b10, c(1.0, -2.0)).unwrap();
        let beta = LinearPoly::new(Complex64::ZERO, c(1.64, 0.0)).unwrap();
        let p = TridiagonalPencil::new(vec![beta; 2], vec![l], vec![r]).unwrap();
        let nodes = p.node_sequence(2).unwrap();
        assert_eq!(nodes[0], NodePoint::Finite(c(1.0, 2.0)));
        assert_eq!(nodes[1], NodePoint::Finite(c(1.0, -2.0)));
        assert_eq!(l.eval(c(1.0, 2.0)), Complex64::ZERO);
    }

    #[test]
    fn identity_balance_is_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = TridiagonalPencil::random_bounded(&mut rng, 5);
        let ones = vec![Complex64::ONE; 5];
        assert_eq!(p.scale_balance(&ones, &ones).unwrap(), p);
    }

    #[test]
    fn zero_scale_factor_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = TridiagonalPencil::random_bounded(&mut rng, 4);
        let mut d = vec![Complex64::ONE; 4];
        d[2] = Complex64::ZERO;
        assert_eq!(
            p.scale_balance(&[Complex64::ONE; 4], &d),
            Err(Error::ZeroScaleFactor(2))
        );
    }

    #[test]
    fn balance_conjugates_the_section() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = TridiagonalPencil::random_bounded(&mut rng, 5);
        let delta: Vec<_> = (0..5).map(|_| unit_disk(&mut rng) + c(1.5, 0.0)).collect();
        let d: Vec<_> = (0..5).map(|_| unit_disk(&mut rng) + c(0.0, 1.5)).collect();
        let q = p.scale_balance(&delta, &d).unwrap();
        let z = c(0.3, -0.4);
        let left = DMatrix::from_fn(5, 5, |i, j| {
            if i == j {
                delta[i] * d[i]
            } else {
                Complex64::ZERO
            }
        });
        let right = DMatrix::from_fn(5, 5, |i, j| {
            if i == j {
                delta[i] / d[i]
            } else {
                Complex64::ZERO
            }
        });
        let expect = left * p.section(5).unwrap().at(z) * right;
        let got = q.section(5).unwrap().at(z);
        assert!((expect - got).norm() < 1e-13);
    }

    #[test]
    fn symmetrize_jacobi_with_unequal_offdiagonals() {
        let one = Complex64::ONE;
        let beta: Vec<_> = [0.1, 0.2, 0.3]
            .iter()
            .map(|&b| LinearPoly::new(c(-b, 0.0), one).unwrap())
            .collect();
        let l = vec![
            LinearPoly::constant(c(2.0, 0.0)).unwrap(),
            LinearPoly::constant(c(0.5, 0.0)).unwrap(),
        ];
        let r = vec![
            LinearPoly::constant(c(0.5, 0.0)).unwrap(),
            LinearPoly::constant(c(8.0, 0.0)).unwrap(),
        ];
        let p = TridiagonalPencil::new(beta, l, r).unwrap();
        let (q, _) = p.symmetrizing_balance().unwrap();
        for j in 0..2 {
            assert!((q.alpha_l()[j].c0() - q.alpha_r()[j].c0()).norm() < 1e-15);
            let prod = p.alpha_product(j, one);
            assert!((q.alpha_product(j, one) - prod).norm() < 1e-14);
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = TridiagonalPencil::random_bounded(&mut rng, 6);
        let s = p.to_json().unwrap();
        assert!(s.contains("\"alphaL\""));
        assert_eq!(TridiagonalPencil::from_json(&s).unwrap(), p);
    }

    #[test]
    fn json_rejects_zero_polynomial() {
        let s = r#"{"beta":[[0,0,0,0]],"alphaL":[],"alphaR":[]}"#;
        assert!(TridiagonalPencil::from_json(s).is_err());
    }
}
