//! LU and UL factorizations of `zB − A`, the Christoffel and Geronimus
//! transforms they induce, and the contour functionals that test the
//! resulting biorthogonality.

use num_complex::Complex64;

use crate::contour::Contour;
use crate::dd::{cdiv, pow2, CDd};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::markov::MarkovPencil;
use crate::pencil::TridiagonalPencil;
use crate::poly::NodePoint;
use crate::recurrence::{eval_table, is_zero_at, scaled_table, ScaledTable, POLE_TOL};
use crate::resolvent::{m_function_with_tol, MEstimate};

/// `|det B|` below this fraction of the product of its row norms is singular.
pub const SINGULAR_DET_TOL: f64 = 1e-14;

/// `zB − A = L·D·U` on a section: `L` unit lower bidiagonal with
/// subdiagonal `−vᴸ`, `U` unit upper bidiagonal with superdiagonal `−vᴿ`.
///
/// `d_k = q_{k+1}/q_k`, `vᴸ_k = αᴸ_k q_k/q_{k+1}`, `vᴿ_k = αᴿ_k q_k/q_{k+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LuFactors {
    z: Complex64,
    d: Vec<Complex64>,
    v_l: Vec<Complex64>,
    v_r: Vec<Complex64>,
}

impl LuFactors {
    pub fn z(&self) -> Complex64 {
        self.z
    }
    pub fn d(&self) -> &[Complex64] {
        &self.d
    }
    pub fn v_l(&self) -> &[Complex64] {
        &self.v_l
    }
    pub fn v_r(&self) -> &[Complex64] {
        &self.v_r
    }
    /// Size of the section the factors cover.
    pub fn order(&self) -> usize {
        self.d.len()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let n = self.order();
        let l = bidiagonal(n, n, |k| -self.v_l[k], false);
        let u = bidiagonal(n, n, |k| -self.v_r[k], true);
        l * linalg::diag(&self.d) * u
    }

    /// Largest entrywise deviation from the section, relative to
    /// `max(1, largest section entry)`.
    pub fn reconstruction_error(&self, pencil: &TridiagonalPencil) -> Result<f64> {
        let s = pencil.section(self.order())?.at(self.z);
        Ok(max_deviation(&self.reconstruct(), &s))
    }
}

/// `(n+1)`-row bidiagonal with unit diagonal; `upper` places `off(k)` at
/// `(k, k+1)`, otherwise at `(k+1, k)`.
fn bidiagonal(rows: usize, cols: usize, off: impl Fn(usize) -> Complex64, upper: bool) -> CMatrix {
    let mut m = CMatrix::zeros(rows, cols);
    for k in 0..rows.min(cols) {
        m[(k, k)] = Complex64::ONE;
    }
    for k in 0.. {
        let (i, j) = if upper { (k, k + 1) } else { (k + 1, k) };
        if i >= rows || j >= cols {
            break;
        }
        m[(i, j)] = off(k);
    }
    m
}

fn max_deviation(a: &CMatrix, b: &CMatrix) -> f64 {
    let scale = b.iter().map(|v| v.norm()).fold(1.0, f64::max);
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
        / scale
}

/// LU factors of the `n×n` section at `z`. The `v` sequences run as far as
/// the pencil has `α` entries, up to `n`.
pub fn lu_factorize(pencil: &TridiagonalPencil, z: Complex64, n: usize) -> Result<LuFactors> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "LU factorization of an empty section".into(),
        ));
    }
    let t = eval_table(pencil, z, n)?;
    for k in 1..=n {
        if t.q(k) == Complex64::ZERO || t.q_cancellation(k) <= POLE_TOL {
            return Err(Error::ZeroPivot(k));
        }
    }
    let d: Vec<Complex64> = (0..n).map(|k| cdiv(Complex64::ONE, t.u(k))).collect();
    let m = n.min(pencil.alpha_l().len());
    let v_l = (0..m)
        .map(|k| pencil.alpha_l()[k].eval(z) * t.u(k))
        .collect();
    let v_r = (0..m)
        .map(|k| pencil.alpha_r()[k].eval(z) * t.u(k))
        .collect();
    Ok(LuFactors { z, d, v_l, v_r })
}

/// `zB − A = U·D·L` with free parameter `d₀`: `U` unit upper bidiagonal with
/// superdiagonal `−uᴿ`, `L` unit lower bidiagonal with subdiagonal `−uᴸ`.
///
/// `y_n = q_n − d₀p_n`, `d_n = αᴸ_{n−1}αᴿ_{n−1} y_{n−1}/y_n` (`d_0 = d₀`),
/// `uᴸ_n = y_{n+1}/(αᴿ_n y_n)`, `uᴿ_n = y_{n+1}/(αᴸ_n y_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UlFactors {
    z: Complex64,
    d0: Complex64,
    y: Vec<Complex64>,
    d: Vec<Complex64>,
    u_l: Vec<Complex64>,
    u_r: Vec<Complex64>,
}

impl UlFactors {
    pub fn z(&self) -> Complex64 {
        self.z
    }
    pub fn d0(&self) -> Complex64 {
        self.d0
    }
    /// `y_0 … y_n`.
    pub fn y(&self) -> &[Complex64] {
        &self.y
    }
    /// `d_0 … d_n`.
    pub fn d(&self) -> &[Complex64] {
        &self.d
    }
    /// `uᴸ_0 … uᴸ_{n−1}`.
    pub fn u_l(&self) -> &[Complex64] {
        &self.u_l
    }
    pub fn u_r(&self) -> &[Complex64] {
        &self.u_r
    }
    pub fn order(&self) -> usize {
        self.u_l.len()
    }

    /// Leading `n×n` block of `U·D·L`; it involves `d_n` through the
    /// `n×(n+1)` and `(n+1)×n` corners.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.order();
        let u = bidiagonal(n, n + 1, |k| -self.u_r[k], true);
        let l = bidiagonal(n + 1, n, |k| -self.u_l[k], false);
        u * linalg::diag(&self.d) * l
    }

    pub fn reconstruction_error(&self, pencil: &TridiagonalPencil) -> Result<f64> {
        let s = pencil.section(self.order())?.at(self.z);
        Ok(max_deviation(&self.reconstruct(), &s))
    }
}

pub fn ul_factorize(
    pencil: &TridiagonalPencil,
    z: Complex64,
    d0: Complex64,
    n: usize,
) -> Result<UlFactors> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "UL factorization of an empty section".into(),
        ));
    }
    if n > pencil.alpha_l().len() {
        return Err(Error::OrderTooLarge {
            requested: n,
            available: pencil.alpha_l().len(),
        });
    }
    let t = eval_table(pencil, z, n)?;
    let d0_dd = CDd::from_c64(d0);
    // y_k = mantissa·2^exponent, computed before rounding to f64.
    let mut mant = Vec::with_capacity(n + 1);
    let mut expo = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let (q, p, e) = t.entry_dd(k);
        let y = q - d0_dd * p;
        let (yc, scale) = (y.to_c64(), q.to_c64().norm() + (d0 * p.to_c64()).norm());
        if yc == Complex64::ZERO || yc.norm() <= POLE_TOL * scale {
            return Err(Error::ZeroY(k));
        }
        mant.push(yc);
        expo.push(e);
    }
    for k in 0..n {
        if is_zero_at(&pencil.alpha_l()[k], z) || is_zero_at(&pencil.alpha_r()[k], z) {
            return Err(Error::NodeCollision(k));
        }
    }
    // y_{k+1}/y_k
    let step = |k: usize| cdiv(mant[k + 1], mant[k]) * pow2(expo[k + 1] - expo[k]);
    let y = (0..=n).map(|k| mant[k] * pow2(expo[k])).collect();
    let mut d = vec![d0];
    d.extend((0..n).map(|k| pencil.alpha_product(k, z) * cdiv(Complex64::ONE, step(k))));
    let u_l = (0..n)
        .map(|k| step(k) / pencil.alpha_r()[k].eval(z))
        .collect();
    let u_r = (0..n)
        .map(|k| step(k) / pencil.alpha_l()[k].eval(z))
        .collect();
    Ok(UlFactors {
        z,
        d0,
        y,
        d,
        u_l,
        u_r,
    })
}

fn coincident(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= 1e-14 * (1.0 + a.norm().max(b.norm()))
}

/// `Qᴸ_n(x₀, x) = (qᴸ_n(x) − vᴸ_n(x₀) qᴸ_{n+1}(x))/(x₀ − x)` and the right
/// analogue, with `x₀ = lu.z()` and `x = scaled.z()`.
pub fn christoffel_transform(
    lu: &LuFactors,
    scaled: &ScaledTable,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let (x0, x) = (lu.z, scaled.z());
    if coincident(x0, x) {
        return Err(Error::CoincidentPoints);
    }
    let count = lu.v_l.len().min(scaled.order());
    let h = x0 - x;
    let (ql, qr) = (scaled.q_l(), scaled.q_r());
    Ok((
        (0..count)
            .map(|n| (ql[n] - lu.v_l[n] * ql[n + 1]) / h)
            .collect(),
        (0..count)
            .map(|n| (qr[n] - lu.v_r[n] * qr[n + 1]) / h)
            .collect(),
    ))
}

/// `𝒬ᴸ_n(x₀, x) = qᴸ_n(x) − uᴿ_{n−1}(x₀) qᴸ_{n−1}(x)`,
/// `𝒬ᴿ_n = qᴿ_n − uᴸ_{n−1} qᴿ_{n−1}`, `𝒬_0 = 1`.
pub fn geronimus_transform(
    ul: &UlFactors,
    scaled: &ScaledTable,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let count = ul.order().min(scaled.order());
    let (ql, qr) = (scaled.q_l(), scaled.q_r());
    let mut left = vec![Complex64::ONE];
    let mut right = vec![Complex64::ONE];
    for n in 1..=count {
        left.push(ql[n] - ul.u_r[n - 1] * ql[n - 1]);
        right.push(qr[n] - ul.u_l[n - 1] * qr[n - 1]);
    }
    (left, right)
}

/// Transform point at infinity, from `B = U U*` with `U` unit upper
/// bidiagonal carrying `B_{n,n−1}`: `−u` is replaced by the signed entries of
/// `B`, `𝒬ᴸ_n = qᴸ_n + B_{n,n−1} qᴸ_{n−1}`, `𝒬ᴿ_n = qᴿ_n + B_{n−1,n} qᴿ_{n−1}`.
pub fn geronimus_at_infinity(
    pencil: &TridiagonalPencil,
    scaled: &ScaledTable,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let (ql, qr) = (scaled.q_l(), scaled.q_r());
    let mut left = vec![Complex64::ONE];
    let mut right = vec![Complex64::ONE];
    for n in 1..=scaled.order() {
        let b_lower = -pencil.alpha_l()[n - 1].c1();
        let b_upper = -pencil.alpha_r()[n - 1].c1();
        left.push(ql[n] + b_lower * ql[n - 1]);
        right.push(qr[n] + b_upper * qr[n - 1]);
    }
    (left, right)
}

/// Dense-determinant form of `N ≤ 3` Christoffel steps at distinct points
/// `x_0 … x_{N−1}`:
/// `Q_n(x) = A_{n,N}(x)/(π_N(x)·B_{n,N})` with `π_N(x) = Π(x_i − x)`, where
/// `A_{n,N}` has rows `[q_n … q_{n+N}]` at `x, x_0, …` and `B_{n,N}` rows
/// `[q_{n+1} … q_{n+N}]` at `x_0, …`.
#[derive(Debug, Clone)]
pub struct MultiChristoffel {
    points: Vec<Complex64>,
    tables: Vec<ScaledTable>,
    det_l: Vec<Complex64>,
    det_r: Vec<Complex64>,
}

impl MultiChristoffel {
    /// Prepares `Q_n` for `n ≤ max_n`.
    pub fn new(pencil: &TridiagonalPencil, points: &[Complex64], max_n: usize) -> Result<Self> {
        let big_n = points.len();
        if big_n == 0 || big_n > 3 {
            return Err(Error::InvalidArgument(format!(
                "multi-step Christoffel supports 1 to 3 points, got {big_n}"
            )));
        }
        for (i, &a) in points.iter().enumerate() {
            if points[i + 1..].iter().any(|&b| coincident(a, b)) {
                return Err(Error::CoincidentPoints);
            }
        }
        let tables = points
            .iter()
            .map(|&x| scaled_table(pencil, x, max_n + big_n, Complex64::ZERO))
            .collect::<Result<Vec<_>>>()?;
        let b_det = |n: usize, pick: fn(&ScaledTable) -> &[Complex64]| -> Result<Complex64> {
            let m = CMatrix::from_fn(big_n, big_n, |i, c| pick(&tables[i])[n + 1 + c]);
            let det = linalg::det(&m);
            let scale: f64 = m.row_iter().map(|r| r.norm()).product();
            if !(det.norm() > SINGULAR_DET_TOL * scale) {
                return Err(Error::SingularBDet { n });
            }
            Ok(det)
        };
        let mut det_l = Vec::with_capacity(max_n + 1);
        let mut det_r = Vec::with_capacity(max_n + 1);
        for n in 0..=max_n {
            det_l.push(b_det(n, ScaledTable::q_l)?);
            det_r.push(b_det(n, ScaledTable::q_r)?);
        }
        Ok(Self {
            points: points.to_vec(),
            tables,
            det_l,
            det_r,
        })
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn max_n(&self) -> usize {
        self.det_l.len() - 1
    }

    /// `π_N(x) = Π (x_i − x)`.
    pub fn pi(&self, x: Complex64) -> Complex64 {
        self.points.iter().map(|&p| p - x).product()
    }

    /// `(Qᴸ_n(x), Qᴿ_n(x))` for `n ≤ max_n`, from a scaled table at `x` of
    /// order at least `max_n + N`.
    pub fn eval(&self, scaled: &ScaledTable) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let x = scaled.z();
        if self.points.iter().any(|&p| coincident(p, x)) {
            return Err(Error::CoincidentPoints);
        }
        let big_n = self.points.len();
        let need = self.max_n() + big_n;
        if scaled.order() < need {
            return Err(Error::OrderTooLarge {
                requested: need,
                available: scaled.order(),
            });
        }
        let pi = self.pi(x);
        let side = |pick: fn(&ScaledTable) -> &[Complex64], dets: &[Complex64]| {
            (0..=self.max_n())
                .map(|n| {
                    let m = CMatrix::from_fn(big_n + 1, big_n + 1, |i, c| {
                        let t = if i == 0 { scaled } else { &self.tables[i - 1] };
                        pick(t)[n + c]
                    });
                    linalg::det(&m) / (pi * dets[n])
                })
                .collect()
        };
        Ok((
            side(ScaledTable::q_l, &self.det_l),
            side(ScaledTable::q_r, &self.det_r),
        ))
    }
}

/// Single-point form of [`MultiChristoffel`].
pub fn multi_christoffel(
    pencil: &TridiagonalPencil,
    points: &[Complex64],
    n: usize,
    x: Complex64,
) -> Result<(Complex64, Complex64)> {
    let mc = MultiChristoffel::new(pencil, points, n)?;
    let t = scaled_table(pencil, x, n + points.len(), Complex64::ZERO)?;
    let (l, r) = mc.eval(&t)?;
    Ok((l[n], r[n]))
}

/// `𝔖(g) = (1/2πi) ∮ g m dζ` by the trapezoid rule.
pub fn favard_functional(contour: &Contour, m: &[Complex64], g: &[Complex64]) -> Complex64 {
    let v: Vec<Complex64> = m.iter().zip(g).map(|(a, b)| a * b).collect();
    contour.integrate(&v)
}

/// `𝔖̃(g) = (1/2πi) ∮ g m/(x₀ − ζ) dζ + (1/d₀ − m(x₀)) g(x₀)`.
pub fn geronimus_functional(
    contour: &Contour,
    m: &[Complex64],
    g: &[Complex64],
    x0: Complex64,
    d0: Complex64,
    m_x0: Complex64,
    g_x0: Complex64,
) -> Result<Complex64> {
    if d0 == Complex64::ZERO {
        return Err(Error::InvalidArgument(
            "the point-mass functional needs d0 != 0".into(),
        ));
    }
    let w: Vec<Complex64> = contour
        .nodes()
        .iter()
        .zip(g)
        .map(|(&zeta, &gv)| gv / (x0 - zeta))
        .collect();
    Ok(favard_functional(contour, m, &w) + (1.0 / d0 - m_x0) * g_x0)
}

/// Scaled tables (with `φ = 0`) at every contour node.
pub fn contour_tables(
    pencil: &TridiagonalPencil,
    contour: &Contour,
    order: usize,
) -> Result<Vec<ScaledTable>> {
    contour
        .nodes()
        .iter()
        .map(|&z| scaled_table(pencil, z, order, Complex64::ZERO))
        .collect()
}

/// `m = φ` on the contour by atom summation.
pub fn markov_m_on_contour(mp: &MarkovPencil, contour: &Contour) -> Result<Vec<Complex64>> {
    contour.nodes().iter().map(|&z| mp.phi(z)).collect()
}

/// Stabilized convergents of a general pencil on the contour, each with its
/// diagnostic.
pub fn m_on_contour(
    pencil: &TridiagonalPencil,
    contour: &Contour,
    n: usize,
    tol: f64,
) -> Result<Vec<MEstimate>> {
    contour
        .nodes()
        .iter()
        .map(|&z| m_function_with_tol(pencil, z, n, None, tol))
        .collect()
}

/// Fails unless every finite root of `α_0 … α_{count−1}` lies outside.
pub fn require_nodes_outside(
    contour: &Contour,
    pencil: &TridiagonalPencil,
    count: usize,
) -> Result<()> {
    for k in 0..count.min(pencil.alpha_l().len()) {
        for a in [pencil.alpha_l()[k], pencil.alpha_r()[k]] {
            if let NodePoint::Finite(w) = a.root() {
                contour.require_outside(w, "node")?;
            }
        }
    }
    Ok(())
}

/// `R_{j,k}(z) = (1/2πi) ∮ qᴿ_j qᴸ_k m/(z − ζ) dζ`.
pub fn resolvent_entry_via_contour(
    contour: &Contour,
    pencil: &TridiagonalPencil,
    m: &[Complex64],
    z: Complex64,
    j: usize,
    k: usize,
) -> Result<Complex64> {
    contour.require_outside(z, "evaluation point")?;
    let top = j.max(k);
    require_nodes_outside(contour, pencil, top)?;
    let tables = contour_tables(pencil, contour, top)?;
    let g: Vec<Complex64> = tables
        .iter()
        .map(|t| t.q_r()[j] * t.q_l()[k] / (z - t.z()))
        .collect();
    Ok(favard_functional(contour, m, &g))
}

/// `𝔖(qᴿ_n ζ^l/Π_{k<n}αᴸ_k)` and `𝔖(qᴸ_n ζ^l/Π_{k<n}αᴿ_k)` for one `(n, l)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FavardValue {
    pub n: usize,
    pub l: usize,
    pub right: Complex64,
    pub left: Complex64,
}

/// All pairs `l < n ≤ n_max`; each value should vanish.
pub fn favard_orthogonality(
    contour: &Contour,
    pencil: &TridiagonalPencil,
    m: &[Complex64],
    n_max: usize,
) -> Result<Vec<FavardValue>> {
    require_nodes_outside(contour, pencil, n_max)?;
    let tables = contour_tables(pencil, contour, n_max)?;
    let mut out = Vec::new();
    for n in 1..=n_max {
        let (mut gr, mut gl): (Vec<_>, Vec<_>) = tables
            .iter()
            .map(|t| {
                let z = t.z();
                let pl: Complex64 = pencil.alpha_l()[..n].iter().map(|a| a.eval(z)).product();
                let pr: Complex64 = pencil.alpha_r()[..n].iter().map(|a| a.eval(z)).product();
                (t.q_r()[n] / pl, t.q_l()[n] / pr)
            })
            .unzip();
        for l in 0..n {
            out.push(FavardValue {
                n,
                l,
                right: favard_functional(contour, m, &gr),
                left: favard_functional(contour, m, &gl),
            });
            for (i, t) in tables.iter().enumerate() {
                gr[i] *= t.z();
                gl[i] *= t.z();
            }
        }
    }
    Ok(out)
}

/// Matrix of functional values with the expected diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Gram {
    pub values: CMatrix,
    /// `1/d_j`, when known.
    pub expected_diag: Option<Vec<Complex64>>,
}

impl Gram {
    /// Largest off-diagonal modulus.
    pub fn off_diagonal(&self) -> f64 {
        let n = self.values.nrows();
        let mut worst = 0.0f64;
        for j in 0..n {
            for k in 0..n {
                if j != k {
                    worst = worst.max(self.values[(j, k)].norm());
                }
            }
        }
        worst
    }

    /// `max_j |value_jj / expected_jj − 1|`.
    pub fn diagonal_error(&self) -> Option<f64> {
        let e = self.expected_diag.as_ref()?;
        Some(
            e.iter()
                .enumerate()
                .map(|(j, &x)| (self.values[(j, j)] / x - 1.0).norm())
                .fold(0.0, f64::max),
        )
    }
}

fn gram_from(
    rows: &[(Vec<Complex64>, Vec<Complex64>)],
    weight: &[Complex64],
    contour: &Contour,
    size: usize,
) -> CMatrix {
    CMatrix::from_fn(size, size, |j, k| {
        let v: Vec<Complex64> = rows
            .iter()
            .zip(weight)
            .map(|((l, r), w)| l[j] * r[k] * w)
            .collect();
        contour.integrate(&v)
    })
}

/// `(1/2πi) ∮ Qᴸ_j Qᴿ_k (x₀ − x) m dx` for `j, k < size`; expected
/// `δ_{jk}/d_j(x₀)` with the LU pivots.
pub fn christoffel_gram(
    contour: &Contour,
    pencil: &TridiagonalPencil,
    m: &[Complex64],
    x0: Complex64,
    size: usize,
) -> Result<Gram> {
    contour.require_outside(x0, "transform point")?;
    require_nodes_outside(contour, pencil, size + 1)?;
    let lu = lu_factorize(pencil, x0, size + 1)?;
    let rows = contour_tables(pencil, contour, size + 1)?
        .iter()
        .map(|t| christoffel_transform(&lu, t))
        .collect::<Result<Vec<_>>>()?;
    let weight: Vec<Complex64> = contour
        .nodes()
        .iter()
        .zip(m)
        .map(|(&x, &mv)| (x0 - x) * mv)
        .collect();
    Ok(Gram {
        values: gram_from(&rows, &weight, contour, size),
        expected_diag: Some(lu.d[..size].iter().map(|d| 1.0 / d).collect()),
    })
}

/// `𝔖̃(𝒬ᴸ_j 𝒬ᴿ_k)` for `j, k < size`; expected `δ_{jk}/d_j(x₀)` with the UL
/// pivots.
pub fn geronimus_gram(
    contour: &Contour,
    pencil: &TridiagonalPencil,
    m: &[Complex64],
    x0: Complex64,
    d0: Complex64,
    m_x0: Complex64,
    size: usize,
) -> Result<Gram> {
    contour.require_outside(x0, "transform point")?;
    require_nodes_outside(contour, pencil, size)?;
    if size == 0 {
        return Err(Error::InvalidArgument("empty Gram matrix".into()));
    }
    let ul = ul_factorize(pencil, x0, d0, size)?;
    let rows: Vec<_> = contour_tables(pencil, contour, size - 1)?
        .iter()
        .map(|t| geronimus_transform(&ul, t))
        .collect();
    let (at_l, at_r) =
        geronimus_transform(&ul, &scaled_table(pencil, x0, size - 1, Complex64::ZERO)?);
    let weight: Vec<Complex64> = contour
        .nodes()
        .iter()
        .zip(m)
        .map(|(&x, &mv)| mv / (x0 - x))
        .collect();
    let mut values = gram_from(&rows, &weight, contour, size);
    if d0 == Complex64::ZERO {
        return Err(Error::InvalidArgument(
            "the point-mass functional needs d0 != 0".into(),
        ));
    }
    let mass = 1.0 / d0 - m_x0;
    for j in 0..size {
        for k in 0..size {
            values[(j, k)] += mass * at_l[j] * at_r[k];
        }
    }
    Ok(Gram {
        values,
        expected_diag: Some(ul.d[..size].iter().map(|d| 1.0 / d).collect()),
    })
}

/// `(1/2πi) ∮ Qᴸ_j Qᴿ_k π_N m dx` for the multi-step transform; the diagonal
/// constants are not known in closed form.
pub fn multi_christoffel_gram(
    contour: &Contour,
    pencil: &TridiagonalPencil,
    m: &[Complex64],
    points: &[Complex64],
    size: usize,
) -> Result<Gram> {
    for &x in points {
        contour.require_outside(x, "transform point")?;
    }
    if size == 0 {
        return Err(Error::InvalidArgument("empty Gram matrix".into()));
    }
    require_nodes_outside(contour, pencil, size + points.len())?;
    let mc = MultiChristoffel::new(pencil, points, size - 1)?;
    let rows = contour_tables(pencil, contour, size - 1 + points.len())?
        .iter()
        .map(|t| mc.eval(t))
        .collect::<Result<Vec<_>>>()?;
    let weight: Vec<Complex64> = contour
        .nodes()
        .iter()
        .zip(m)
        .map(|(&x, &mv)| mc.pi(x) * mv)
        .collect();
    Ok(Gram {
        values: gram_from(&rows, &weight, contour, size),
        expected_diag: None,
    })
}

/// `∫ 𝒬ᴿ_k(∞, t) 𝒬ᴸ_j(∞, t) dμ(t)` by atom summation; expected identity.
pub fn geronimus_infinity_gram(mp: &MarkovPencil, size: usize) -> Result<Gram> {
    if size == 0 {
        return Err(Error::InvalidArgument("empty Gram matrix".into()));
    }
    let mu = mp.mu();
    let rows = mu
        .atoms()
        .iter()
        .map(|&t| {
            let s = scaled_table(
                mp.pencil(),
                Complex64::new(t, 0.0),
                size - 1,
                Complex64::ZERO,
            )?;
            Ok(geronimus_at_infinity(mp.pencil(), &s))
        })
        .collect::<Result<Vec<_>>>()?;
    let values = CMatrix::from_fn(size, size, |j, k| {
        rows.iter()
            .zip(mu.weights())
            .map(|((l, r), &w)| l[j] * r[k] * w)
            .sum()
    });
    Ok(Gram {
        values,
        expected_diag: Some(vec![Complex64::ONE; size]),
    })
}
