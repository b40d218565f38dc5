//! Solutions of `y_{n+1} = β_n y_n − αᴸ_{n−1}αᴿ_{n−1} y_{n−1}` at a fixed point.

use num_complex::Complex64;

use crate::dd::{cdiv, pow2, CDd};
use crate::error::{Error, Result};
use crate::linalg;
use crate::pencil::TridiagonalPencil;

/// Rescale the running pair once its exponent leaves `[-LIMIT, LIMIT]`.
const RESCALE_LIMIT: i32 = 600;
/// `|q_n|` below this fraction of its two recurrence terms counts as a pole.
pub const POLE_TOL: f64 = 1e-14;
/// Default bound on `cond(B)` for the generalized eigenvalue route.
pub const DEFAULT_COND_BOUND: f64 = 1e12;

/// `q_n(z)`, `p_n(z)` for `n = 0..=N`, with `q_{−1} = 0`, `p_{−1} = −1`.
///
/// Values are kept in double-double as `mantissa·2^exponent[n]`; `q_n` and
/// `p_n` share the exponent, so ratios never over- or underflow.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceTable {
    z: Complex64,
    q: Vec<CDd>,
    p: Vec<CDd>,
    exponent: Vec<i32>,
    /// `|q_n| / (|β_{n−1} q_{n−1}| + |c_{n−2} q_{n−2}|)`, 1 at `n = 0`.
    q_cancellation: Vec<f64>,
}

impl RecurrenceTable {
    pub fn z(&self) -> Complex64 {
        self.z
    }

    /// Largest index `N` stored.
    pub fn order(&self) -> usize {
        self.q.len() - 1
    }

    pub fn q(&self, n: usize) -> Complex64 {
        self.q[n].to_c64() * pow2(self.exponent[n])
    }

    pub fn p(&self, n: usize) -> Complex64 {
        self.p[n].to_c64() * pow2(self.exponent[n])
    }

    /// Index `−1` is the explicit initial value.
    pub fn q_at(&self, n: isize) -> Complex64 {
        if n < 0 {
            Complex64::ZERO
        } else {
            self.q(n as usize)
        }
    }

    pub fn p_at(&self, n: isize) -> Complex64 {
        if n < 0 {
            -Complex64::ONE
        } else {
            self.p(n as usize)
        }
    }

    pub fn q_values(&self) -> Vec<Complex64> {
        (0..self.q.len()).map(|n| self.q(n)).collect()
    }

    pub fn p_values(&self) -> Vec<Complex64> {
        (0..self.p.len()).map(|n| self.p(n)).collect()
    }

    /// `(mantissa of q_n, mantissa of p_n, exponent)`.
    pub fn scaled(&self, n: usize) -> (Complex64, Complex64, i32) {
        (self.q[n].to_c64(), self.p[n].to_c64(), self.exponent[n])
    }

    /// `p_n/q_n`, rejecting points where `q_n` cancels to noise.
    pub fn convergent(&self, n: usize) -> Result<Complex64> {
        let q = self.q[n].to_c64();
        if q == Complex64::ZERO || !q.is_finite() || self.q_cancellation[n] <= POLE_TOL {
            return Err(Error::PoleAtPoint { order: n });
        }
        Ok(cdiv(self.p[n].to_c64(), q))
    }

    /// `u_n = q_n/q_{n+1}`.
    pub fn u(&self, n: usize) -> Complex64 {
        let ratio = cdiv(self.q[n].to_c64(), self.q[n + 1].to_c64());
        ratio * pow2(self.exponent[n] - self.exponent[n + 1])
    }

    /// Double-double mantissas of `q_n`, `p_n` and their shared exponent.
    pub(crate) fn entry_dd(&self, n: usize) -> (CDd, CDd, i32) {
        (self.q[n], self.p[n], self.exponent[n])
    }

    /// Relative size of `q_n` against the terms it was formed from.
    pub fn q_cancellation(&self, n: usize) -> f64 {
        self.q_cancellation[n]
    }

    /// Relative residual of the recurrence at step `n`, recomputed in f64 on
    /// values normalised by `2^{−exponent[n]}`.
    pub fn recurrence_residual(&self, pencil: &TridiagonalPencil, n: usize) -> f64 {
        let z = self.z;
        let beta = pencil.beta()[n].eval(z);
        let c = if n == 0 {
            Complex64::ONE
        } else {
            pencil.alpha_product(n - 1, z)
        };
        let e = self.exponent[n];
        let norm = |seq: &[CDd], init: Complex64, k: isize| {
            if k < 0 {
                init * pow2(-e)
            } else {
                let k = k as usize;
                seq[k].to_c64() * pow2(self.exponent[k] - e)
            }
        };
        let n = n as isize;
        let mut worst = 0.0f64;
        for (seq, init) in [(&self.q, Complex64::ZERO), (&self.p, -Complex64::ONE)] {
            let (y0, y1, y2) = (
                norm(seq, init, n - 1),
                norm(seq, init, n),
                norm(seq, init, n + 1),
            );
            let scale = (beta * y1).norm() + (c * y0).norm() + y2.norm();
            if scale > 0.0 {
                worst = worst.max((y2 - (beta * y1 - c * y0)).norm() / scale);
            }
        }
        worst
    }
}

pub fn eval_table(
    pencil: &TridiagonalPencil,
    z: Complex64,
    n_max: usize,
) -> Result<RecurrenceTable> {
    pencil.check_order(n_max)?;
    let mut q = Vec::with_capacity(n_max + 1);
    let mut p = Vec::with_capacity(n_max + 1);
    let mut exponent = Vec::with_capacity(n_max + 1);
    let mut q_cancellation = Vec::with_capacity(n_max + 1);

    let (mut q_prev, mut q_cur) = (CDd::default(), CDd::from_c64(Complex64::ONE));
    let (mut p_prev, mut p_cur) = (CDd::from_c64(-Complex64::ONE), CDd::default());
    let mut e = 0i32;
    q.push(q_cur);
    p.push(p_cur);
    exponent.push(e);
    q_cancellation.push(1.0);

    for k in 0..n_max {
        let beta = CDd::from_c64(pencil.beta()[k].eval(z));
        let c = if k == 0 {
            CDd::from_c64(Complex64::ONE)
        } else {
            alpha_product_dd(pencil, k - 1, z)
        };
        let tq1 = beta * q_cur;
        let tq0 = c * q_prev;
        let q_next = tq1 - tq0;
        let p_next = beta * p_cur - c * p_prev;
        let terms = tq1.to_c64().norm() + tq0.to_c64().norm();
        q_cancellation.push(if terms > 0.0 {
            q_next.to_c64().norm() / terms
        } else {
            0.0
        });

        q_prev = q_cur;
        q_cur = q_next;
        p_prev = p_cur;
        p_cur = p_next;

        let big = [q_cur, p_cur, q_prev, p_prev]
            .iter()
            .filter_map(|v| v.exponent())
            .max();
        if let Some(x) = big {
            if !(-RESCALE_LIMIT..=RESCALE_LIMIT).contains(&x) {
                q_prev = q_prev.ldexp(-x);
                q_cur = q_cur.ldexp(-x);
                p_prev = p_prev.ldexp(-x);
                p_cur = p_cur.ldexp(-x);
                e += x;
            }
        }
        q.push(q_cur);
        p.push(p_cur);
        exponent.push(e);
    }
    Ok(RecurrenceTable {
        z,
        q,
        p,
        exponent,
        q_cancellation,
    })
}

fn alpha_product_dd(pencil: &TridiagonalPencil, k: usize, z: Complex64) -> CDd {
    CDd::from_c64(pencil.alpha_l()[k].eval(z)) * CDd::from_c64(pencil.alpha_r()[k].eval(z))
}

/// `C_n(z) = p_n(z)/q_n(z)`.
pub fn convergent(pencil: &TridiagonalPencil, z: Complex64, n: usize) -> Result<Complex64> {
    eval_table(pencil, z, n)?.convergent(n)
}

/// Bottom-up evaluation of the `n`-term continued fraction.
pub fn cf_backward_eval(pencil: &TridiagonalPencil, z: Complex64, n: usize) -> Result<Complex64> {
    pencil.check_order(n)?;
    if n == 0 {
        return Ok(Complex64::ZERO);
    }
    let mut t = pencil.beta()[n - 1].eval(z);
    for k in (0..n - 1).rev() {
        if t == Complex64::ZERO || !t.is_finite() {
            return Err(Error::BackwardBreakdown(k + 1));
        }
        t = pencil.beta()[k].eval(z) - pencil.alpha_product(k, z) / t;
    }
    if t == Complex64::ZERO || !t.is_finite() {
        return Err(Error::BackwardBreakdown(0));
    }
    Ok(Complex64::ONE / t)
}

/// `⟨(zB − A)⁻¹e₀, e₀⟩` on the `n×n` section by a dense solve.
pub fn dense_m(pencil: &TridiagonalPencil, z: Complex64, n: usize) -> Result<Complex64> {
    let m = pencil.section(n)?.at(z);
    Ok(linalg::solve(&m, &linalg::unit(n, 0))?[0])
}

/// Relative defect of `p_{n+1}q_n − p_n q_{n+1} = Π_{k<n} αᴸ_kαᴿ_k(z)`.
///
/// Evaluated in double-double; when the table has been rescaled by `2^s`,
/// the `1` in the denominator is replaced by `2^{−s}` so the measure is the
/// same as on unscaled values.
pub fn ostrogradsky_residual(
    table: &RecurrenceTable,
    pencil: &TridiagonalPencil,
    n: usize,
) -> Result<f64> {
    if table.order() < n + 1 {
        return Err(Error::OrderTooLarge {
            requested: n + 1,
            available: table.order(),
        });
    }
    let z = table.z;
    let s = table.exponent[n] + table.exponent[n + 1];
    let w = table.p[n + 1] * table.q[n] - table.p[n] * table.q[n + 1];

    let mut prod = CDd::from_c64(Complex64::ONE);
    let mut pe = 0i32;
    for k in 0..n {
        prod = prod * alpha_product_dd(pencil, k, z);
        if let Some(x) = prod.exponent() {
            prod = prod.ldexp(-x);
            pe += x;
        }
    }
    let prod = prod.ldexp(pe - s);
    let diff = (w - prod).to_c64().norm();
    let denom = pow2(-s) + prod.to_c64().norm();
    Ok(diff / denom)
}

/// Left- and right-scaled solutions together with `r = φq − p`.
///
/// `xᴿ_n = x_n / Π_{k<n} αᴿ_k(z)` satisfies
/// `αᴿ_n yᴿ_{n+1} = β_n yᴿ_n − αᴸ_{n−1} yᴿ_{n−1}`, and symmetrically for `ᴸ`,
/// with `α_{−1} = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledTable {
    z: Complex64,
    phi: Complex64,
    q_l: Vec<Complex64>,
    q_r: Vec<Complex64>,
    p_l: Vec<Complex64>,
    p_r: Vec<Complex64>,
    r_l: Vec<Complex64>,
    r_r: Vec<Complex64>,
}

impl ScaledTable {
    pub fn z(&self) -> Complex64 {
        self.z
    }
    pub fn phi(&self) -> Complex64 {
        self.phi
    }
    pub fn order(&self) -> usize {
        self.q_l.len() - 1
    }
    pub fn q_l(&self) -> &[Complex64] {
        &self.q_l
    }
    pub fn q_r(&self) -> &[Complex64] {
        &self.q_r
    }
    pub fn p_l(&self) -> &[Complex64] {
        &self.p_l
    }
    pub fn p_r(&self) -> &[Complex64] {
        &self.p_r
    }
    pub fn r_l(&self) -> &[Complex64] {
        &self.r_l
    }
    pub fn r_r(&self) -> &[Complex64] {
        &self.r_r
    }
}

pub(crate) fn is_zero_at(p: &crate::poly::LinearPoly, z: Complex64) -> bool {
    let v = p.eval(z);
    v == Complex64::ZERO || v.norm() <= 1e-14 * (p.c0().norm() + (p.c1() * z).norm())
}

pub fn scaled_table(
    pencil: &TridiagonalPencil,
    z: Complex64,
    n_max: usize,
    phi: Complex64,
) -> Result<ScaledTable> {
    let c = ScaledCoefficients::new(pencil, z, n_max)?;
    let (one, zero) = (Complex64::ONE, Complex64::ZERO);
    let q_l = c.forward(true, zero, one);
    let q_r = c.forward(false, zero, one);
    let p_l = c.forward(true, -one, zero);
    let p_r = c.forward(false, -one, zero);
    let r_l = q_l.iter().zip(&p_l).map(|(q, p)| phi * q - p).collect();
    let r_r = q_r.iter().zip(&p_r).map(|(q, p)| phi * q - p).collect();
    Ok(ScaledTable {
        z,
        phi,
        q_l,
        q_r,
        p_l,
        p_r,
        r_l,
        r_r,
    })
}

/// Scaled table for the `section×section` finite section, with `φ` its
/// m-function `p_s/q_s`. The `r` sequences, which decay, come from the
/// backward recurrence started at `r_s = 0` and normalised by `r_{−1} = 1`,
/// so they keep full relative accuracy where `φq − p` would cancel.
pub fn section_scaled_table(
    pencil: &TridiagonalPencil,
    z: Complex64,
    n_max: usize,
    section: usize,
) -> Result<ScaledTable> {
    if section < n_max {
        return Err(Error::InvalidArgument(format!(
            "section {section} is shorter than the table order {n_max}"
        )));
    }
    pencil.check_order(section)?;
    let c = ScaledCoefficients::new(pencil, z, n_max)?;
    let (one, zero) = (Complex64::ONE, Complex64::ZERO);
    let q_l = c.forward(true, zero, one);
    let q_r = c.forward(false, zero, one);
    let p_l = c.forward(true, -one, zero);
    let p_r = c.forward(false, -one, zero);
    let r_l = backward_minimal(pencil, z, section, n_max, true)?;
    let r_r = backward_minimal(pencil, z, section, n_max, false)?;
    Ok(ScaledTable {
        z,
        phi: r_l[0],
        q_l,
        q_r,
        p_l,
        p_r,
        r_l,
        r_r,
    })
}

/// Coefficients of `own[n]·y_{n+1} = β_n y_n − other[n−1]·y_{n−1}`.
struct ScaledCoefficients {
    beta: Vec<Complex64>,
    al: Vec<Complex64>,
    ar: Vec<Complex64>,
}

impl ScaledCoefficients {
    fn new(pencil: &TridiagonalPencil, z: Complex64, n_max: usize) -> Result<Self> {
        if n_max > pencil.alpha_l().len() {
            return Err(Error::OrderTooLarge {
                requested: n_max,
                available: pencil.alpha_l().len(),
            });
        }
        for k in 0..n_max {
            if is_zero_at(&pencil.alpha_l()[k], z) || is_zero_at(&pencil.alpha_r()[k], z) {
                return Err(Error::NodeCollision(k));
            }
        }
        Ok(Self {
            beta: pencil.beta()[..n_max].iter().map(|b| b.eval(z)).collect(),
            al: pencil.alpha_l()[..n_max]
                .iter()
                .map(|a| a.eval(z))
                .collect(),
            ar: pencil.alpha_r()[..n_max]
                .iter()
                .map(|a| a.eval(z))
                .collect(),
        })
    }

    /// `left` selects `own = αᴸ`.
    fn forward(&self, left: bool, y_m1: Complex64, y0: Complex64) -> Vec<Complex64> {
        let (own, other) = if left {
            (&self.al, &self.ar)
        } else {
            (&self.ar, &self.al)
        };
        let mut y = vec![y0];
        let mut prev = y_m1;
        for n in 0..self.beta.len() {
            let o = if n == 0 { Complex64::ONE } else { other[n - 1] };
            let next = (self.beta[n] * y[n] - o * prev) / own[n];
            prev = y[n];
            y.push(next);
        }
        y
    }
}

/// `r_0 … r_{n_max}` of the section of order `s` by the backward recurrence.
fn backward_minimal(
    pencil: &TridiagonalPencil,
    z: Complex64,
    s: usize,
    n_max: usize,
    left: bool,
) -> Result<Vec<Complex64>> {
    let (own, other) = if left {
        (pencil.alpha_l(), pencil.alpha_r())
    } else {
        (pencil.alpha_r(), pencil.alpha_l())
    };
    // y[i] holds r_{i−1}; y[s+1] = r_s = 0, y[s] = r_{s−1} = 1 up to scale.
    let mut y = vec![Complex64::ZERO; s + 2];
    y[s] = Complex64::ONE;
    for n in (0..s).rev() {
        let o = if n == 0 {
            Complex64::ONE
        } else {
            if is_zero_at(&other[n - 1], z) {
                return Err(Error::NodeCollision(n - 1));
            }
            other[n - 1].eval(z)
        };
        let up = if n + 1 < s {
            own[n].eval(z) * y[n + 2]
        } else {
            Complex64::ZERO
        };
        y[n] = (pencil.beta()[n].eval(z) * y[n + 1] - up) / o;
        let big = y[n].norm().max(y[n + 1].norm());
        if big > 1e150 {
            for v in &mut y[n..] {
                *v /= big;
            }
        }
    }
    let norm = y[0];
    if norm == Complex64::ZERO || !norm.is_finite() {
        return Err(Error::PoleAtPoint { order: s });
    }
    Ok(y[1..=n_max + 1].iter().map(|v| v / norm).collect())
}

/// `φ` from a dense solve on a section twice the table order (capped).
pub fn default_phi(pencil: &TridiagonalPencil, z: Complex64, n_max: usize) -> Result<Complex64> {
    dense_m(pencil, z, (2 * n_max).clamp(1, pencil.len()))
}

/// Roots of `q_n` as eigenvalues of `B⁻¹A` on the `n×n` section.
pub fn zeros_of_qn(pencil: &TridiagonalPencil, n: usize) -> Result<Vec<Complex64>> {
    zeros_of_qn_with(pencil, n, DEFAULT_COND_BOUND)
}

pub fn zeros_of_qn_with(
    pencil: &TridiagonalPencil,
    n: usize,
    cond_bound: f64,
) -> Result<Vec<Complex64>> {
    let s = pencil.section(n)?;
    generalized_eigenvalues(&s.a, &s.b, cond_bound)
}

/// Roots of `p_n`, the determinant of the section on indices `1..n−1`.
pub fn zeros_of_pn(pencil: &TridiagonalPencil, n: usize) -> Result<Vec<Complex64>> {
    zeros_of_pn_with(pencil, n, DEFAULT_COND_BOUND)
}

pub fn zeros_of_pn_with(
    pencil: &TridiagonalPencil,
    n: usize,
    cond_bound: f64,
) -> Result<Vec<Complex64>> {
    let s = pencil.section(n)?;
    if n <= 1 {
        return Ok(vec![]);
    }
    let a = s.a.view((1, 1), (n - 1, n - 1)).into_owned();
    let b = s.b.view((1, 1), (n - 1, n - 1)).into_owned();
    generalized_eigenvalues(&a, &b, cond_bound)
}

fn generalized_eigenvalues(
    a: &linalg::CMatrix,
    b: &linalg::CMatrix,
    cond_bound: f64,
) -> Result<Vec<Complex64>> {
    if a.nrows() == 0 {
        return Ok(vec![]);
    }
    let condition = linalg::cond2(b);
    if !(condition <= cond_bound) {
        return Err(Error::IllConditionedB { condition });
    }
    let m = linalg::inverse(b)? * a;
    let mut ev = linalg::eigenvalues(&m)?;
    ev.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(ev)
}
