//! The experiment verbs. Each returns records in config order plus a summary.

use linpencil::factorization::{
    christoffel_gram, favard_functional, favard_orthogonality, geronimus_functional,
    geronimus_gram, geronimus_infinity_gram, lu_factorize, markov_m_on_contour,
    multi_christoffel_gram, ul_factorize,
};
use linpencil::markov::{b_diag_bound, numerical_range_section};
use linpencil::recurrence::{eval_table, section_scaled_table};
use linpencil::resolvent::geometric_rate;
use linpencil::{linalg, Contour, Gram, MarkovPencil, C64};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{complex, complexes, ExperimentConfig};
use crate::records::{CheckRecord, Flags, Report, ResultRecord, SubsequenceRecord};
use crate::Result;

fn failures<R>(records: &[R], passed: impl Fn(&R) -> bool) -> usize {
    records.iter().filter(|r| !passed(r)).count()
}

fn c2(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

/// Builds the pencil and checks the structure of a Markov pencil.
pub fn run_build(cfg: &ExperimentConfig) -> Result<Report<CheckRecord>> {
    let mp = cfg.build_pencil()?;
    let id = cfg.id.as_str();
    let origin = C64::new(0.0, 0.0);
    let tol = cfg.tolerances.reconstruction;
    let mut recs = Vec::new();
    let terminal = mp.terminated_at();
    for (j, &b) in mp.b_diag().iter().enumerate() {
        let check = CheckRecord::new(id, "b_diag_exceeds_one", origin).at(j, j);
        recs.push(if Some(j) == terminal {
            check.judged(b, b == 1.0)
        } else {
            check.judged(b, b > 1.0)
        });
    }
    for (j, &b) in mp.b_off().iter().enumerate() {
        let defect = (b * b - (mp.b_diag()[j] - 1.0)).abs();
        recs.push(
            CheckRecord::new(id, "b_off_squared", origin)
                .at(j + 1, j)
                .bounded(defect, tol),
        );
    }
    let s = mp.pencil().section(mp.len())?;
    let hermitian = (&s.a - s.a.adjoint())
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    recs.push(CheckRecord::new(id, "a_hermitian", origin).judged(hermitian, hermitian == 0.0));
    for (j, m) in mp.measures().iter().enumerate() {
        let min_w = m.weights().iter().copied().fold(f64::INFINITY, f64::min);
        recs.push(
            CheckRecord::new(id, "weights_positive", origin)
                .at(j, j)
                .judged(min_w, min_w > 0.0),
        );
    }
    for (j, pair) in mp.measures().windows(2).enumerate() {
        let (outer, inner) = (pair[0].atoms(), pair[1].atoms());
        let ok = inner.len() + 1 == outer.len()
            && inner
                .iter()
                .enumerate()
                .all(|(i, &t)| outer[i] < t && t < outer[i + 1]);
        recs.push(
            CheckRecord::new(id, "interlacing", origin)
                .at(j + 1, j)
                .judged(inner.len() as f64, ok),
        );
    }
    let interval = mp.mu().interval();
    let (lo, hi) = numerical_range_section(&mp, mp.len())?;
    let details = json!({
        "rows": mp.len(),
        "terminated_at": terminal,
        "interval": [interval.0, interval.1],
        "numerical_range": [lo, hi],
        "b_diag_bound": b_diag_bound(mp.nodes(), interval),
        "b_diag": mp.b_diag(),
        "a_diag": mp.a_diag(),
        "b_off": mp.b_off(),
        "nodes": mp.nodes().iter().map(|&z| c2(z)).collect::<Vec<_>>(),
        "pencil": serde_json::from_str::<serde_json::Value>(&mp.pencil().to_json()?)?,
    });
    let bad = failures(&recs, |r| r.passed);
    Ok(Report::new(id, "build", recs, bad, details))
}

/// `z` is outside the numerical range of the largest section unless it is
/// real and inside `[lo, hi]`.
fn outside_range(z: C64, (lo, hi): (f64, f64)) -> bool {
    !(z.im == 0.0 && lo <= z.re && z.re <= hi)
}

/// Errors `|m_{[0:n]}(z) − φ(z)|` over the grid and orders with a geometric
/// rate per point; only points outside the numerical range are asserted.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<Report<ResultRecord>> {
    let mp = cfg.build_pencil()?;
    let grid = cfg.grid_points()?;
    let range = numerical_range_section(&mp, mp.clamp_order(cfg.max_order())?)?;
    let tol = cfg.tolerances;
    let per_z: Vec<(Vec<ResultRecord>, serde_json::Value)> = grid
        .par_iter()
        .map(|&z| convergence_at(cfg, &mp, z, range, &tol))
        .collect::<Result<_>>()?;
    let (mut recs, mut points) = (Vec::new(), Vec::new());
    for (r, p) in per_z {
        recs.extend(r);
        points.push(p);
    }
    let bad = failures(&recs, |r| r.passed);
    let details = json!({ "numerical_range": [range.0, range.1], "points": points });
    Ok(Report::new(&cfg.id, "converge", recs, bad, details))
}

fn convergence_at(
    cfg: &ExperimentConfig,
    mp: &MarkovPencil,
    z: C64,
    range: (f64, f64),
    tol: &crate::config::Tolerances,
) -> Result<(Vec<ResultRecord>, serde_json::Value)> {
    let outside = outside_range(z, range);
    let phi = mp.phi(z).ok();
    let rows: Vec<(usize, Option<C64>, f64)> = cfg
        .orders
        .iter()
        .map(|&n| {
            let m = mp.convergent(z, n).ok();
            let kappa = mp
                .clamp_order(n)
                .and_then(|k| mp.pencil().section(k))
                .map(|s| linalg::cond2(&s.at(z)))
                .unwrap_or(f64::INFINITY);
            (n, m, kappa)
        })
        .collect();
    let err = |m: Option<C64>| match (m, phi) {
        (Some(m), Some(p)) => (m - p).norm(),
        _ => f64::NAN,
    };
    let floor = tol.floor * phi.map_or(1.0, |p| p.norm().max(1.0));
    let fit: Vec<(usize, f64)> = rows
        .iter()
        .map(|&(n, m, _)| (n, err(m)))
        .filter(|&(_, e)| e > floor)
        .collect();
    let rate = (fit.len() >= 2).then(|| geometric_rate(&fit));
    let final_error = err(rows.last().and_then(|r| r.1));
    let converged = final_error <= tol.convergence && rate.is_none_or(|r| r < tol.rate);
    let last = rows.len() - 1;
    let recs = rows
        .iter()
        .enumerate()
        .map(|(i, &(n, m, kappa))| {
            let mut f = Flags::default();
            let mv = m.unwrap_or(C64::new(f64::NAN, f64::NAN));
            let pv = phi.unwrap_or(C64::new(f64::NAN, f64::NAN));
            if m.is_none() {
                f.push("convergent_failed");
            }
            if !outside {
                f.push("inside_range");
            }
            if rate.is_none() {
                f.push("rate:below_floor");
            }
            let passed = if !outside {
                true
            } else if i == last {
                converged
            } else {
                m.is_some()
            };
            ResultRecord {
                experiment: cfg.id.clone(),
                z_re: z.re,
                z_im: z.im,
                n,
                m_re: f.num("m_re", mv.re),
                m_im: f.num("m_im", mv.im),
                reference_re: f.num("reference_re", pv.re),
                reference_im: f.num("reference_im", pv.im),
                abs_error: f.num("abs_error", err(m)),
                rate: rate.and_then(|r| f.num("rate", r)),
                kappa: f.num("kappa", kappa),
                outside_range: outside,
                passed,
                flags: f.join(),
            }
        })
        .collect();
    let summary = json!({
        "z": c2(z),
        "outside_range": outside,
        "rate": rate.filter(|r| r.is_finite()),
        "final_error": (final_error.is_finite()).then_some(final_error),
        "passed": !outside || converged,
    });
    Ok((recs, summary))
}

const MIN_SUBSEQ_ORDER: usize = 4;

/// `ε_n`, `|u_n(ξ)|` and the sup-error of the selected approximants over a
/// small disk around `ξ`.
pub fn run_subsequence(cfg: &ExperimentConfig) -> Result<Report<SubsequenceRecord>> {
    let spec = cfg
        .subsequence
        .clone()
        .ok_or_else(|| crate::CliError::Config("subseq needs a subsequence section".into()))?;
    let mp = cfg.build_pencil()?;
    let xi = complex(spec.xi);
    let disk: Vec<C64> = std::iter::once(xi)
        .chain((1..spec.points).map(|k| {
            let t = 2.0 * std::f64::consts::PI * (k - 1) as f64 / (spec.points - 1) as f64;
            xi + C64::from_polar(spec.radius, t)
        }))
        .collect();
    let tol = cfg.tolerances;
    // The selection rule needs n >= 4 unless n reaches a terminated pencil.
    let (orders, skipped): (Vec<usize>, Vec<usize>) = cfg.orders.iter().partition(|&&n| {
        n >= MIN_SUBSEQ_ORDER || mp.terminated_at().is_some_and(|_| n >= mp.len())
    });
    if orders.is_empty() {
        return Err(crate::CliError::Config(format!(
            "subseq needs an order >= {MIN_SUBSEQ_ORDER}"
        )));
    }
    let recs: Vec<SubsequenceRecord> = orders
        .par_iter()
        .map(|&n| subsequence_at(cfg, &mp, xi, &disk, n, tol.u_consistency))
        .collect();
    let sups: Vec<f64> = recs
        .iter()
        .map(|r| r.sup_error.unwrap_or(f64::NAN))
        .collect();
    let floor = tol.floor * mp.phi(xi).map_or(1.0, |p| p.norm().max(1.0));
    // Decrease from the first to the last order, or already at rounding level.
    let decreased = match (sups.first(), sups.last()) {
        (Some(&a), Some(&b)) => b < a || b <= floor,
        _ => false,
    };
    let bad = failures(&recs, |r| r.passed) + usize::from(!decreased);
    let details = json!({
        "xi": spec.xi,
        "radius": spec.radius,
        "disk_points": disk.len(),
        "sup_error_decreased": decreased,
        "skipped_orders": skipped,
    });
    Ok(Report::new(&cfg.id, "subseq", recs, bad, details))
}

fn subsequence_at(
    cfg: &ExperimentConfig,
    mp: &MarkovPencil,
    xi: C64,
    disk: &[C64],
    n: usize,
    u_tol: f64,
) -> SubsequenceRecord {
    let mut f = Flags::default();
    let mut sup = 0.0f64;
    let mut center = None;
    for &z in disk {
        match (mp.m_function(z, n, Some(xi)), mp.phi(z)) {
            (Ok(est), Ok(phi)) => {
                sup = sup.max((est.value - phi).norm());
                if z == xi {
                    center = Some(est);
                }
            }
            (Err(e), _) | (_, Err(e)) => {
                f.push(format!("error:{e}"));
                sup = f64::NAN;
            }
        }
    }
    let u_rec = mp.clamp_order(n).ok().and_then(|k| {
        if k < mp.len() {
            eval_table(mp.pencil(), xi, k + 1)
                .ok()
                .map(|t| t.u(k).norm())
        } else {
            Some(f64::INFINITY)
        }
    });
    let (epsilon, u_abs) = match center {
        Some(e) => (Some(e.epsilon), Some(e.u_abs)),
        None => (None, None),
    };
    let consistent = match (u_abs, u_rec) {
        (Some(a), Some(b)) if a.is_infinite() && b.is_infinite() => true,
        (Some(a), Some(b)) => (a - b).abs() <= u_tol * b.abs().max(f64::MIN_POSITIVE),
        _ => false,
    };
    if u_abs.is_some_and(f64::is_infinite) {
        f.push("u:no_successor");
    }
    let passed = epsilon.is_some_and(|e| e <= 1) && consistent && sup.is_finite();
    SubsequenceRecord {
        experiment: cfg.id.clone(),
        xi_re: xi.re,
        xi_im: xi.im,
        n,
        epsilon,
        u_abs: u_abs.and_then(finite_u),
        u_recurrence: u_rec.and_then(finite_u),
        sup_error: f.num("sup_error", sup),
        passed,
        flags: f.join(),
    }
}

fn finite_u(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// LU/UL reconstruction, `d0 = 0` reciprocity and the `m·d0 = 1` identity at
/// the configured points.
pub fn run_factorization_suite(cfg: &ExperimentConfig) -> Result<Report<CheckRecord>> {
    let spec = cfg
        .factorization
        .clone()
        .ok_or_else(|| crate::CliError::Config("factor needs a factorization section".into()))?;
    let mp = cfg.build_pencil()?;
    let p = mp.pencil();
    let n = spec.order.min(p.alpha_l().len());
    let tol = cfg.tolerances;
    let id = cfg.id.as_str();
    let d0s = complexes(&spec.d0);
    let points = complexes(&spec.points);
    let per_point: Vec<Vec<CheckRecord>> = points
        .par_iter()
        .map(|&x| {
            let mut recs = Vec::new();
            match lu_factorize(p, x, n) {
                Ok(lu) => {
                    let e = lu.reconstruction_error(p).unwrap_or(f64::NAN);
                    recs.push(
                        CheckRecord::new(id, "lu_reconstruction", x).bounded(e, tol.reconstruction),
                    );
                }
                Err(e) => recs.push(CheckRecord::new(id, "lu_reconstruction", x).failure(e)),
            }
            for &d0 in &d0s {
                let rec = CheckRecord::new(id, "ul_reconstruction", x).param(d0);
                let ul = match ul_factorize(p, x, d0, n) {
                    Ok(ul) => ul,
                    Err(e) => {
                        recs.push(rec.failure(e));
                        continue;
                    }
                };
                let e = ul.reconstruction_error(p).unwrap_or(f64::NAN);
                recs.push(rec.bounded(e, tol.reconstruction));
                if d0 != C64::new(0.0, 0.0) {
                    continue;
                }
                let rec = CheckRecord::new(id, "ul_lu_reciprocity", x).param(d0);
                match lu_factorize(p, x, n + 1) {
                    Ok(lu) => {
                        let worst = (0..n)
                            .map(|k| {
                                let a = (ul.u_r()[k] * lu.v_l()[k] - 1.0).norm();
                                let b = (ul.u_l()[k] * lu.v_r()[k] - 1.0).norm();
                                a.max(b)
                            })
                            .fold(0.0, f64::max);
                        recs.push(rec.bounded(worst, tol.reciprocity));
                    }
                    Err(e) => recs.push(rec.failure(e)),
                }
            }
            recs
        })
        .collect();
    let mut recs: Vec<CheckRecord> = per_point.into_iter().flatten().collect();
    for x in complexes(&spec.special_points) {
        recs.push(special_case(id, &mp, x, n, tol.special_case));
    }
    let bad = failures(&recs, |r| r.passed);
    let details = json!({ "order": n, "points": spec.points, "d0": spec.d0 });
    Ok(Report::new(id, "factor", recs, bad, details))
}

/// With `d0 = 1/m(x)` the UL sequence is `y_n = d0·r_n`; `r_n` comes from the
/// full section, so the check is exact only for a terminated pencil.
fn special_case(id: &str, mp: &MarkovPencil, x: C64, n: usize, tol: f64) -> CheckRecord {
    let rec = CheckRecord::new(id, "ul_special_case", x);
    let p = mp.pencil();
    let run = || -> linpencil::Result<(C64, f64)> {
        let d0 = 1.0 / mp.phi(x)?;
        let ul = ul_factorize(p, x, d0, n)?;
        let st = section_scaled_table(p, x, n, p.len())?;
        let mut scale = C64::new(1.0, 0.0);
        let mut worst = 0.0f64;
        for k in 0..=n {
            let want = d0 * scale * st.r_r()[k];
            worst = worst.max((ul.y()[k] - want).norm() / want.norm());
            if k < n {
                scale *= p.alpha_r()[k].eval(x);
            }
        }
        Ok((d0, worst))
    };
    match run() {
        Ok((d0, worst)) => {
            let mut r = rec.param(d0).bounded(worst, tol);
            if mp.terminated_at().is_none() {
                r.detail = "section_truncated".into();
            }
            r
        }
        Err(e) => rec.failure(e),
    }
}

fn gram_records(
    id: &str,
    check: &str,
    x: C64,
    g: &Gram,
    off_tol: f64,
    diag_tol: Option<f64>,
) -> Vec<CheckRecord> {
    let n = g.values.nrows();
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            let v = g.values[(j, k)];
            let rec = CheckRecord::new(id, check, x).at(j, k);
            out.push(if j != k {
                rec.bounded(v.norm(), off_tol)
            } else {
                match (&g.expected_diag, diag_tol) {
                    (Some(e), Some(t)) => rec.bounded((v / e[j] - 1.0).norm(), t),
                    _ => rec.report(v.norm()),
                }
            });
        }
    }
    out
}

/// Favard relations, Christoffel and Geronimus Gram matrices, the transform
/// at infinity and, when configured, the two-point multi-step transform.
pub fn run_biorthogonality(cfg: &ExperimentConfig) -> Result<Report<CheckRecord>> {
    let spec = cfg
        .factorization
        .clone()
        .ok_or_else(|| crate::CliError::Config("biortho needs a factorization section".into()))?;
    let mp = cfg.build_pencil()?;
    let p = mp.pencil();
    let id = cfg.id.as_str();
    let tol = cfg.tolerances;
    let points = complexes(&spec.points);
    let multi = complexes(&spec.multi_step_points);
    let interval = mp.mu().interval();
    let contour = match &cfg.contour {
        Some(s) => s.build()?,
        None => {
            let mut avoid: Vec<C64> = mp.nodes().iter().flat_map(|&w| [w, w.conj()]).collect();
            avoid.extend(&points);
            avoid.extend(&multi);
            Contour::around_interval(interval, &avoid, linpencil::contour::DEFAULT_POINTS)?
        }
    };
    let m = markov_m_on_contour(&mp, &contour)?;
    let origin = C64::new(0.0, 0.0);
    let mut recs = Vec::new();

    let one = vec![C64::new(1.0, 0.0); contour.len()];
    let mass = favard_functional(&contour, &m, &one);
    recs.push(
        CheckRecord::new(id, "total_mass", origin)
            .bounded((mass - mp.mu().total_mass()).norm(), tol.functional),
    );

    let favard_n = spec.favard_order.min(p.alpha_l().len());
    match favard_orthogonality(&contour, p, &m, favard_n) {
        Ok(vals) => {
            for v in vals {
                recs.push(
                    CheckRecord::new(id, "favard_right", origin)
                        .at(v.n, v.l)
                        .bounded(v.right.norm(), tol.functional),
                );
                recs.push(
                    CheckRecord::new(id, "favard_left", origin)
                        .at(v.n, v.l)
                        .bounded(v.left.norm(), tol.functional),
                );
            }
        }
        Err(e) => recs.push(CheckRecord::new(id, "favard", origin).failure(e)),
    }

    let size = spec.gram_size.min(p.alpha_l().len());
    // The Christoffel rows need one more recurrence step than the Gram size.
    let csize = size.min(p.alpha_l().len().saturating_sub(1)).max(1);
    for &x0 in &points {
        match christoffel_gram(&contour, p, &m, x0, csize) {
            Ok(g) => recs.extend(gram_records(
                id,
                "christoffel",
                x0,
                &g,
                tol.functional,
                Some(tol.diagonal),
            )),
            Err(e) => recs.push(CheckRecord::new(id, "christoffel", x0).failure(e)),
        }
        let m_x0 = mp.phi(x0)?;
        for d0 in complexes(&spec.d0) {
            if d0 == C64::new(0.0, 0.0) {
                continue;
            }
            match geronimus_gram(&contour, p, &m, x0, d0, m_x0, size) {
                Ok(g) => recs.extend(
                    gram_records(id, "geronimus", x0, &g, tol.functional, Some(tol.diagonal))
                        .into_iter()
                        .map(|r| r.param(d0)),
                ),
                Err(e) => recs.push(CheckRecord::new(id, "geronimus", x0).param(d0).failure(e)),
            }
            let cauchy: Vec<C64> = contour.nodes().iter().map(|&z| 1.0 / (x0 - z)).collect();
            let composed = favard_functional(&contour, &m, &cauchy) + (1.0 / d0 - m_x0);
            let rec = CheckRecord::new(id, "geronimus_mass", x0).param(d0);
            recs.push(
                match geronimus_functional(&contour, &m, &one, x0, d0, m_x0, C64::new(1.0, 0.0)) {
                    Ok(total) => rec.bounded((total - composed).norm(), tol.reconstruction),
                    Err(e) => rec.failure(e),
                },
            );
        }
    }

    match geronimus_infinity_gram(&mp, size) {
        Ok(g) => recs.extend(gram_records(
            id,
            "geronimus_infinity",
            origin,
            &g,
            tol.functional,
            Some(tol.functional),
        )),
        Err(e) => recs.push(CheckRecord::new(id, "geronimus_infinity", origin).failure(e)),
    }

    if multi.len() == 2 {
        match multi_christoffel_gram(&contour, p, &m, &multi, csize) {
            Ok(g) => recs.extend(
                gram_records(id, "multi_step", multi[0], &g, tol.multi_step, None)
                    .into_iter()
                    .map(|r| r.param(multi[1])),
            ),
            Err(e) => recs.push(
                CheckRecord::new(id, "multi_step", multi[0])
                    .param(multi[1])
                    .failure(e),
            ),
        }
    }

    let bad = failures(&recs, |r| r.passed);
    let worst = |check: &str| {
        recs.iter()
            .filter(|r| r.check == check && r.j != r.k)
            .filter_map(|r| r.value)
            .fold(0.0f64, f64::max)
    };
    let details = json!({
        "contour": contour.shape(),
        "contour_points": contour.len(),
        "worst_off_diagonal": {
            "favard": worst("favard_right").max(worst("favard_left")),
            "christoffel": worst("christoffel"),
            "geronimus": worst("geronimus"),
            "multi_step": worst("multi_step"),
        },
    });
    Ok(Report::new(id, "biortho", recs, bad, details))
}
