//! Resolvent of finite sections, the m-function and decay diagnostics.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::pencil::TridiagonalPencil;
use crate::poly::LinearPoly;
use crate::recurrence::{eval_table, ScaledTable};

/// Inversion residual above which a section counts as singular.
pub const SINGULAR_RESIDUAL: f64 = 1e-8;
/// Default tolerance on the last increment of the selected convergents.
pub const DEFAULT_STABILIZATION_TOL: f64 = 1e-8;
/// Default bound on `κ(2n)/κ(n)` for accepting a point as resolvent-like.
pub const DEFAULT_KAPPA_FACTOR: f64 = 4.0;

/// Inverse of the `n×n` section of `zB − A`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventProbe {
    pub z: Complex64,
    pub order: usize,
    pub entries: CMatrix,
    /// `‖zB − A‖·‖(zB − A)⁻¹‖` in the spectral norm.
    pub kappa: f64,
    pub inverse_norm: f64,
    /// `‖R·(zB − A) − I‖`.
    pub residual: f64,
}

impl ResolventProbe {
    pub fn m(&self) -> Complex64 {
        self.entries[(0, 0)]
    }
}

pub fn resolvent_probe(
    pencil: &TridiagonalPencil,
    z: Complex64,
    n: usize,
) -> Result<ResolventProbe> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "resolvent of an empty section".into(),
        ));
    }
    let m = pencil.section(n)?.at(z);
    let entries = linalg::inverse(&m).map_err(|_| Error::SingularSection {
        residual: f64::INFINITY,
    })?;
    let residual = linalg::norm2(&(&entries * &m - CMatrix::identity(n, n)));
    if !(residual <= SINGULAR_RESIDUAL) {
        return Err(Error::SingularSection { residual });
    }
    let s = linalg::singular_values(&m);
    let (hi, lo) = (s[0], s[n - 1]);
    Ok(ResolventProbe {
        z,
        order: n,
        entries,
        kappa: (hi / lo).max(1.0),
        inverse_norm: 1.0 / lo,
        residual,
    })
}

/// Entry `(j, k)` of the resolvent from scaled solutions:
/// `rᴿ_j qᴸ_k` for `j ≥ k`, `qᴿ_j rᴸ_k` otherwise.
pub fn entry_formula(scaled: &ScaledTable, j: usize, k: usize) -> Complex64 {
    if j >= k {
        scaled.r_r()[j] * scaled.q_l()[k]
    } else {
        scaled.q_r()[j] * scaled.r_l()[k]
    }
}

/// Fitted and theoretical geometric decay of resolvent entries away from the
/// diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub gamma_fit: f64,
    pub delta_fit: f64,
    pub gamma_bound: f64,
    pub delta_bound: f64,
    /// `max |R_jk| / (γ δ^{|j−k|})` over all entries; at most 1 when the
    /// bound holds.
    pub max_bound_ratio: f64,
}

impl DecayFit {
    pub fn bound_holds(&self) -> bool {
        self.max_bound_ratio <= 1.0
    }
}

/// `δ = √((κ−1)/(κ+1))`, `γ = 3‖R‖/δ² · max(κ, (1+κ)²/(2κ))`.
pub fn decay_bound(kappa: f64, inverse_norm: f64) -> (f64, f64) {
    let delta = ((kappa - 1.0) / (kappa + 1.0)).max(0.0).sqrt();
    let spread = kappa.max((1.0 + kappa).powi(2) / (2.0 * kappa));
    let gamma = 3.0 * inverse_norm / (delta * delta) * spread;
    (gamma, delta)
}

/// Least-squares line through `log max_{|j−k|=d} |R_jk|` against `d`.
///
/// With an exactly diagonal inverse `delta_fit` is 0 and `gamma_fit` the
/// largest diagonal entry. When `κ = 1` the bound degenerates to
/// `|R_jk| ≤ ‖R‖`.
pub fn decay_fit(probe: &ResolventProbe) -> Result<DecayFit> {
    let n = probe.order;
    if n < 4 {
        return Err(Error::InvalidArgument(format!(
            "decay fit needs order >= 4, got {n}"
        )));
    }
    let r = &probe.entries;
    let mut envelope = vec![0.0f64; n];
    for j in 0..n {
        for k in 0..n {
            let d = j.abs_diff(k);
            envelope[d] = envelope[d].max(r[(j, k)].norm());
        }
    }
    let (gamma_fit, delta_fit) = if envelope[1..].iter().all(|&v| v == 0.0) {
        (envelope[0], 0.0)
    } else {
        let pts: Vec<(f64, f64)> = envelope
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(d, &v)| (d as f64, v.ln()))
            .collect();
        let (a, b) = line_fit(&pts);
        (a.exp(), b.exp().min(1.0))
    };
    let (gamma_bound, delta_bound) = decay_bound(probe.kappa, probe.inverse_norm);
    let mut max_bound_ratio = 0.0f64;
    for j in 0..n {
        for k in 0..n {
            let v = r[(j, k)].norm();
            let ratio = if delta_bound > 0.0 {
                let log_bound = gamma_bound.ln() + j.abs_diff(k) as f64 * delta_bound.ln();
                if v == 0.0 {
                    0.0
                } else {
                    (v.ln() - log_bound).exp()
                }
            } else {
                v / probe.inverse_norm
            };
            max_bound_ratio = max_bound_ratio.max(ratio);
        }
    }
    Ok(DecayFit {
        gamma_fit,
        delta_fit,
        gamma_bound,
        delta_bound,
        max_bound_ratio,
    })
}

/// Intercept and slope of the least-squares line through `pts`.
pub fn line_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return (pts.first().map_or(0.0, |p| p.1), 0.0);
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - slope * mx, slope)
}

/// Geometric rate `ρ` of `x_n ≈ C ρ^n` from a log-linear fit over the
/// entries with positive, finite magnitude.
pub fn geometric_rate(indexed: &[(usize, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = indexed
        .iter()
        .filter(|(_, v)| *v > 0.0 && v.is_finite())
        .map(|&(n, v)| (n as f64, v.ln()))
        .collect();
    line_fit(&pts).1.exp()
}

/// Estimate of `m(z)` by the subsequence rule driven by `u_n(ξ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MEstimate {
    pub z: Complex64,
    pub xi: Complex64,
    pub n: usize,
    pub epsilon: u8,
    /// `|u_n(ξ)| = |q_n(ξ)/q_{n+1}(ξ)|`; infinite when `q_{n+1}` is unavailable.
    pub u_abs: f64,
    /// `p_{n+ε}(z)/q_{n+ε}(z)`.
    pub value: Complex64,
    /// Distance to the selected convergent one step earlier.
    pub error_estimate: f64,
    pub stabilized: bool,
}

impl MEstimate {
    /// Promote a failed stabilization to an error.
    pub fn require_stable(self) -> Result<Self> {
        if self.stabilized {
            Ok(self)
        } else {
            Err(Error::NoStabilization {
                increment: self.error_estimate,
            })
        }
    }
}

/// `ε_n ∈ {0, 1}`: 0 when `|u_n(ξ)| < 1`.
pub fn epsilon_rule(u_abs: f64) -> u8 {
    u8::from(u_abs.is_nan() || u_abs >= 1.0)
}

/// Selected approximant `p_{n+ε_n}/q_{n+ε_n}` at `z` with `ε_n` decided at
/// `ξ` (defaults to `z`).
///
/// Needs `n ≥ 4`, except that `n` may equal the pencil length (a complete,
/// terminating fraction); there `q_{n+1}` does not exist and `ε_n = 0`.
pub fn m_function(
    pencil: &TridiagonalPencil,
    z: Complex64,
    n: usize,
    xi: Option<Complex64>,
) -> Result<MEstimate> {
    m_function_with_tol(pencil, z, n, xi, DEFAULT_STABILIZATION_TOL)
}

pub fn m_function_with_tol(
    pencil: &TridiagonalPencil,
    z: Complex64,
    n: usize,
    xi: Option<Complex64>,
    tol: f64,
) -> Result<MEstimate> {
    let len = pencil.len();
    if n > len {
        return Err(Error::OrderTooLarge {
            requested: n,
            available: len,
        });
    }
    if n < 4 && n != len {
        return Err(Error::InvalidArgument(format!(
            "m_function needs n >= 4, got {n}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("m_function needs n >= 1".into()));
    }
    let xi = xi.unwrap_or(z);
    let top = (n + 1).min(len);
    let tz = eval_table(pencil, z, top)?;
    let tx = if xi == z {
        tz.clone()
    } else {
        eval_table(pencil, xi, top)?
    };
    let u_abs = |k: usize| {
        if k < top {
            tx.u(k).norm()
        } else {
            f64::INFINITY
        }
    };
    let select = |k: usize| -> Result<(u8, f64, Complex64)> {
        let u = u_abs(k);
        let eps = if k + 1 > top { 0 } else { epsilon_rule(u) };
        Ok((eps, u, tz.convergent(k + eps as usize)?))
    };
    let (epsilon, u, value) = select(n)?;
    let (_, _, previous) = select(n - 1)?;
    let error_estimate = (value - previous).norm();
    Ok(MEstimate {
        z,
        xi,
        n,
        epsilon,
        u_abs: u,
        value,
        error_estimate,
        stabilized: error_estimate <= tol,
    })
}

/// Condition numbers of the sections of order `n` and `2n` (capped by the
/// pencil length). Heuristic: `z` behaves like a resolvent point when
/// `κ(2n)/κ(n)` stays below `factor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaDiagnostic {
    pub kappa_n: f64,
    pub kappa_2n: f64,
    pub ratio: f64,
    pub accepted: bool,
}

pub fn kappa_stabilization(
    pencil: &TridiagonalPencil,
    z: Complex64,
    n: usize,
    factor: f64,
) -> Result<KappaDiagnostic> {
    pencil.check_order(n)?;
    let kappa = |k: usize| -> Result<f64> { Ok(linalg::cond2(&pencil.section(k)?.at(z))) };
    let kappa_n = kappa(n)?;
    let kappa_2n = kappa((2 * n).min(pencil.len()))?;
    let ratio = kappa_2n / kappa_n;
    Ok(KappaDiagnostic {
        kappa_n,
        kappa_2n,
        ratio,
        accepted: ratio.is_finite() && ratio <= factor,
    })
}

/// `d_k(z) = (z − z_k)/(1 + |z_k|)`, `β_k = d_k + d_{k−1}/4`,
/// `αᴸ_k = αᴿ_k = d_k/2`; the section equals `U*·diag(d)·U` with `U` unit
/// upper bidiagonal, superdiagonal `−1/2`.
///
/// `α` has `n` entries so scaled tables reach order `n`.
pub fn example_pencil(nodes: &[Complex64], n: usize) -> Result<TridiagonalPencil> {
    if n > nodes.len() {
        return Err(Error::OrderTooLarge {
            requested: n,
            available: nodes.len(),
        });
    }
    let d: Vec<(Complex64, Complex64)> = nodes[..n]
        .iter()
        .map(|&zk| {
            let s = 1.0 + zk.norm();
            (-zk / s, Complex64::new(1.0 / s, 0.0))
        })
        .collect();
    let mut beta = Vec::with_capacity(n);
    let mut alpha = Vec::with_capacity(n);
    for k in 0..n {
        let (c0, c1) = d[k];
        let (p0, p1) = if k == 0 {
            (Complex64::ZERO, Complex64::ZERO)
        } else {
            d[k - 1]
        };
        beta.push(LinearPoly::new(c0 + 0.25 * p0, c1 + 0.25 * p1)?);
        alpha.push(LinearPoly::new(0.5 * c0, 0.5 * c1)?);
    }
    TridiagonalPencil::new(beta, alpha.clone(), alpha)
}
