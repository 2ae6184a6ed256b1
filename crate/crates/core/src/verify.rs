//! Numerical certification of the structural identities.
//!
//! Every check produces a [`VerificationReport`] whose `passed` flag is
//! exactly `max residual <= threshold`. Checks with mixed tolerances store
//! threshold-normalized ratios so the single-threshold invariant holds.

use crate::engine::{transition_step, EngineError, ObjectivePort};
use crate::genfun::{bracket_residual_matrix, chebyshev_points, GeneratingPair};
use crate::matrix::{norm2, Mat};
use crate::sequence::construct::construct_w;
use crate::sequence::target::{counter_rotation, TargetFamily, TargetSpec};
use crate::sequence::{
    check_interlacing, compute_t_direct, ExplorationMatrix, MapParameters, SequenceError,
};
use crate::spectral::normal_block_diagonalize;
use std::fmt;
use std::time::Instant;

/// Outcome of one verification check.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub check_name: String,
    /// Labelled residuals; `passed` iff the maximum is at most `threshold`.
    pub residuals: Vec<(String, f64)>,
    pub threshold: f64,
    pub passed: bool,
    pub runtime_ms: f64,
}

impl VerificationReport {
    fn finish(
        check_name: &str,
        residuals: Vec<(String, f64)>,
        threshold: f64,
        start: Instant,
    ) -> Self {
        let max = residuals.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
        let passed = !residuals.is_empty() && max.is_finite() && max <= threshold;
        Self {
            check_name: check_name.to_string(),
            residuals,
            threshold,
            passed,
            runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals
            .iter()
            .map(|(_, v)| *v)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The worst offender, for diagnostics.
    pub fn worst(&self) -> Option<&(String, f64)> {
        self.residuals
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "CHECK {} {} max_residual={:.6e} threshold={:.6e}",
            self.check_name,
            if self.passed { "PASS" } else { "FAIL" },
            self.max_residual(),
            self.threshold
        )
    }
}

/// Run `m` transition steps at constant `h` from `x0`.
pub fn compose_m_steps(
    w: &ExplorationMatrix,
    pair: &GeneratingPair,
    params: &MapParameters,
    h: f64,
    objective: &mut ObjectivePort,
    x0: &[f64],
) -> Result<Vec<f64>, EngineError> {
    let mut x = x0.to_vec();
    for k in 0..w.m {
        x = transition_step(&x, k, w, pair, params, h, objective)?;
    }
    Ok(x)
}

/// Least-squares slope of `ln e` against `ln h`.
pub fn fit_loglog_slope(hs: &[f64], es: &[f64]) -> f64 {
    let n = hs.len() as f64;
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = es.iter().map(|e| e.max(1e-300).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

/// Zero out one column of a constructed exploration matrix — the standard
/// negative control for the order check (`W 1 = 0` breaks, leaving an
/// `O(sqrt(h))` bias).
pub fn corrupt_exploration(w: &ExplorationMatrix) -> ExplorationMatrix {
    let mut out = w.clone();
    let zero = vec![0.0; out.w.rows()];
    out.w.set_col(0, &zero);
    out
}

/// Check that `m` composed steps approximate one gradient step to order
/// `h^{3/2}`: fits the log-log slope of
/// `e(h) = ||x_m - (x0 - h grad J(x0))||` over `h_list` and passes when the
/// slope is at least `min_slope` (1.4 by convention) with finite errors.
///
/// Residual entries store `min_slope - slope`, so `passed` keeps the
/// `max residual <= 0` reading.
pub fn gradient_order_check(
    w: &ExplorationMatrix,
    pair: &GeneratingPair,
    params: &MapParameters,
    objective: &mut ObjectivePort,
    x0: &[f64],
    h_list: &[f64],
    min_slope: f64,
) -> Result<VerificationReport, EngineError> {
    let start = Instant::now();
    let grad = objective
        .gradient(x0)
        .ok_or(EngineError::GradientUnavailable)?;
    let mut errors = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let xm = compose_m_steps(w, pair, params, h, objective, x0)?;
        let e: f64 = norm2(
            &xm.iter()
                .enumerate()
                .map(|(i, v)| v - (x0[i] - h * grad[i]))
                .collect::<Vec<_>>(),
        );
        errors.push(e);
    }
    let slope = fit_loglog_slope(h_list, &errors);
    let finite = errors.iter().all(|e| e.is_finite());
    let mut residuals = vec![(format!("slope={slope:.4}"), min_slope - slope)];
    if !finite {
        residuals.push(("nonfinite_error".into(), f64::INFINITY));
    }
    Ok(VerificationReport::finish(
        "gradient_order",
        residuals,
        0.0,
        start,
    ))
}

/// Signed polygon areas of the exploration partial sums: entry `(p, q)` is
/// the shoelace area of the closed polygon with corners
/// `(sum_{k<i} w_{p,k}, sum_{k<i} w_{q,k})`.
pub fn shoelace_areas(w: &Mat) -> Mat {
    let d = w.rows();
    let m = w.cols();
    // Partial sums: ps[p][i] = sum_{k < i} w[p][k], i = 0..=m.
    let mut ps = vec![vec![0.0; m + 1]; d];
    for p in 0..d {
        for i in 0..m {
            ps[p][i + 1] = ps[p][i] + w[(p, i)];
        }
    }
    Mat::from_fn(d, d, |p, q| {
        let mut acc = 0.0;
        for i in 0..m {
            acc += ps[p][i + 1] * ps[q][i] - ps[p][i] * ps[q][i + 1];
        }
        0.5 * acc
    })
}

/// Shoelace identity: for zero-sum `W` the polygon-area matrix equals
/// `T(W)` under the two-point parameterization, entry by entry.
pub fn shoelace_check(w: &Mat) -> Result<VerificationReport, SequenceError> {
    let start = Instant::now();
    let defect = w.row_sums().iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if defect > 1e-9 {
        return Err(SequenceError::ZeroSumViolated { defect });
    }
    let areas = shoelace_areas(w);
    let t = compute_t_direct(w, &MapParameters::two_point());
    let mut residuals = Vec::new();
    for p in 0..w.rows() {
        for q in 0..w.rows() {
            residuals.push((format!("A[{p}][{q}]"), (areas[(p, q)] - t[(p, q)]).abs()));
        }
    }
    Ok(VerificationReport::finish(
        "shoelace",
        residuals,
        1e-10,
        start,
    ))
}

/// Raw boundary-value residuals of the two-state recursion
/// `y_{k+1} = y_k + w_k`,
/// `Z_{k+1} = Z_k + (alpha1+alpha2)^2 w_k y_k^T + alpha2 w_k w_k^T`:
/// returns `(||y_m||, ||Z_m - T_d||_max)`.
pub fn brockett_residuals(w: &Mat, td: &Mat, params: &MapParameters) -> (f64, f64) {
    let d = w.rows();
    let m = w.cols();
    let s = (params.alpha1() + params.alpha2()) * (params.alpha1() + params.alpha2());
    let mut y = vec![0.0; d];
    let mut z = Mat::zeros(d, d);
    for k in 0..m {
        let wk = w.col(k);
        for r in 0..d {
            for c in 0..d {
                z[(r, c)] += s * wk[r] * y[c] + params.alpha2() * wk[r] * wk[c];
            }
        }
        for r in 0..d {
            y[r] += wk[r];
        }
    }
    (norm2(&y), z.sub(td).max_abs())
}

/// Boundary-value check: the recursion driven by the columns of `W` must
/// steer `(y, Z)` from `(0, 0)` to `(0, T_d)` within `(1e-9, 1e-7)`.
pub fn brockett_check(
    w: &Mat,
    target: &TargetSpec,
    params: &MapParameters,
) -> Result<VerificationReport, SequenceError> {
    let td = target.materialize(params)?;
    Ok(brockett_check_matrix(w, &td, params))
}

/// Same check against an already-materialized target.
pub fn brockett_check_matrix(w: &Mat, td: &Mat, params: &MapParameters) -> VerificationReport {
    let start = Instant::now();
    let (ry, rz) = brockett_residuals(w, td, params);
    let residuals = vec![
        ("y_m/1e-9".to_string(), ry / 1e-9),
        ("Z_m/1e-7".to_string(), rz / 1e-7),
    ];
    VerificationReport::finish("brockett", residuals, 1.0, start)
}

/// One catalog entry for sweeps and the order-check battery.
pub struct CatalogCase {
    pub label: String,
    pub target: TargetSpec,
    pub params: MapParameters,
    pub pair: GeneratingPair,
    pub sigma_free: Vec<f64>,
}

fn target_rank(target: &TargetSpec, params: &MapParameters) -> Result<usize, SequenceError> {
    let td = target.materialize(params)?;
    let spec = normal_block_diagonalize(&td, 1e-8 * td.max_abs().max(1.0))?;
    let hyp: Vec<f64> = spec.pairs.iter().map(|&(g, d)| g.hypot(d)).collect();
    let hmax = hyp.iter().cloned().fold(0.0f64, f64::max);
    Ok(2 * hyp.iter().filter(|&&h| h > 1e-10 * hmax).count())
}

/// The default construction catalog: every target family at `n = 1..=3`,
/// with both the free and the minimal-length singular value modes where
/// they exist. Each case carries its certified generating pair.
pub fn default_catalog() -> Vec<CatalogCase> {
    let two = MapParameters::two_point();
    let single = MapParameters::single_point();
    let sincos = || GeneratingPair::h2_sincos(1.0, 1.0, 0.0).unwrap();
    let mut cases = Vec::new();

    for n in 1..=3usize {
        let q = counter_rotation(n);
        let push_skew = |cases: &mut Vec<CatalogCase>,
                         label: String,
                         target: TargetSpec,
                         pair: GeneratingPair,
                         minimal: bool| {
            let r = target_rank(&target, &two).expect("catalog targets materialize");
            let sigma = if minimal {
                vec![1.0; r / 2]
            } else {
                (0..r).map(|i| if i % 2 == 0 { 1.0 } else { 0.8 }).collect()
            };
            cases.push(CatalogCase {
                label,
                target,
                params: two,
                pair,
                sigma_free: sigma,
            });
        };

        push_skew(
            &mut cases,
            format!("h1_n{n}_free"),
            TargetSpec::new(TargetFamily::H1, n),
            sincos(),
            false,
        );
        push_skew(
            &mut cases,
            format!("h1_n{n}_minimal"),
            TargetSpec::new(TargetFamily::H1, n),
            sincos(),
            true,
        );
        push_skew(
            &mut cases,
            format!("h2_n{n}"),
            TargetSpec::new(TargetFamily::H2, n)
                .with_a(1.0)
                .with_b(1.0)
                .with_q(q.clone()),
            sincos(),
            false,
        );
        push_skew(
            &mut cases,
            format!("h3_n{n}_plus"),
            TargetSpec::new(TargetFamily::H3, n)
                .with_a(1.0)
                .with_b(2.0)
                .with_q(q.clone()),
            GeneratingPair::h3_coshsinh(1.0, 2.0, 0.0, 1.0).unwrap(),
            false,
        );
        push_skew(
            &mut cases,
            format!("h3_n{n}_minus"),
            TargetSpec::new(TargetFamily::H3, n)
                .with_a(1.0)
                .with_b(2.0)
                .with_q(q.clone()),
            GeneratingPair::h3_coshsinh(1.0, 2.0, 0.0, -1.0).unwrap(),
            true,
        );
        push_skew(
            &mut cases,
            format!("h4_n{n}"),
            TargetSpec::new(TargetFamily::H4, n).with_q(q.clone()),
            GeneratingPair::h4_const_lin(2.0, 1.0).unwrap(),
            false,
        );
        push_skew(
            &mut cases,
            format!("h5_n{n}"),
            TargetSpec::new(TargetFamily::H5, n).with_q(q.clone()),
            GeneratingPair::h5_lin_const(2.0, 1.0).unwrap(),
            false,
        );
        push_skew(
            &mut cases,
            format!("h6_n{n}"),
            TargetSpec::new(TargetFamily::H6, n).with_q(q.clone()),
            GeneratingPair::h6_exp(1.0, 1.0).unwrap(),
            false,
        );
        push_skew(
            &mut cases,
            format!("h7_n{n}"),
            TargetSpec::new(TargetFamily::H7, n)
                .with_a(2.0)
                .with_b(2.0)
                .with_c(1.0)
                .with_q(q.clone()),
            GeneratingPair::h7_shifted(2.0, 2.0, 1.0, 0.0).unwrap(),
            false,
        );

        // Normal targets under the single-point scheme (mu = -1/2).
        cases.push(CatalogCase {
            label: format!("e1_n{n}"),
            target: TargetSpec::new(TargetFamily::E1, n).with_a(-0.5),
            params: single,
            pair: GeneratingPair::e1_radial(1.0, 0.0).unwrap(),
            sigma_free: vec![],
        });
        cases.push(CatalogCase {
            label: format!("e2_n{n}"),
            target: TargetSpec::new(TargetFamily::E2, n)
                .with_q(Mat::identity(n).scale(-0.5).add(&q.scale(0.8))),
            params: single,
            pair: GeneratingPair::e2_sincos(1.0, 0.0).unwrap(),
            sigma_free: vec![],
        });
        cases.push(CatalogCase {
            label: format!("td_e_n{n}_minimal"),
            target: TargetSpec::new(TargetFamily::TdE, n),
            params: single,
            pair: GeneratingPair::e1_radial(1.0, 0.0).unwrap(),
            sigma_free: vec![],
        });
        cases.push(CatalogCase {
            label: format!("td_e_n{n}_free"),
            target: TargetSpec::new(TargetFamily::TdE, n),
            params: single,
            pair: GeneratingPair::e1_radial(1.0, 0.0).unwrap(),
            sigma_free: vec![1.0; 2 * n],
        });
        cases.push(CatalogCase {
            label: format!("td_e_n{n}_given"),
            target: TargetSpec::new(TargetFamily::TdE, n).with_gammas(vec![-0.5; n]),
            params: single,
            pair: GeneratingPair::e1_radial(1.0, 0.0).unwrap(),
            sigma_free: vec![],
        });
    }
    cases
}

/// Parameter combinations the construction must reject.
pub fn expected_rejections() -> Vec<(String, TargetSpec, MapParameters, Vec<f64>)> {
    vec![
        (
            "h1_single_point".into(),
            TargetSpec::new(TargetFamily::H1, 2),
            MapParameters::single_point(),
            vec![1.0, 1.0, 1.0, 1.0],
        ),
        (
            "td_e_two_point".into(),
            TargetSpec::new(TargetFamily::TdE, 2).with_gammas(vec![-0.5, -0.5]),
            MapParameters::two_point(),
            vec![],
        ),
        (
            "td_e_wrong_sign".into(),
            TargetSpec::new(TargetFamily::TdE, 2).with_gammas(vec![0.5, 0.5]),
            MapParameters::single_point(),
            vec![],
        ),
    ]
}

/// Catalog-wide sweep: construct every case, then verify reconstruction,
/// zero sum, the boundary-value recursion and the bracket identity — all
/// as threshold-normalized ratios. Also asserts that the expected-rejection
/// combinations are in fact rejected. Individual failures are recorded,
/// never thrown.
pub fn catalog_sweep() -> VerificationReport {
    let start = Instant::now();
    let mut residuals = Vec::new();
    for case in default_catalog() {
        match construct_w(&case.target, &case.params, &case.sigma_free) {
            Err(e) => {
                residuals.push((format!("{}: construct failed: {e}", case.label), f64::INFINITY));
            }
            Ok(em) => {
                let td = em.target.materialize(&case.params).expect("resolved target");
                let recon = compute_t_direct(&em.w, &case.params).sub(&td).max_abs();
                residuals.push((format!("{}:recon/1e-7", case.label), recon / 1e-7));
                residuals.push((
                    format!("{}:zerosum/1e-9", case.label),
                    em.zero_sum_defect() / 1e-9,
                ));
                let (ry, rz) = brockett_residuals(&em.w, &td, &case.params);
                residuals.push((format!("{}:brockett_y/1e-9", case.label), ry / 1e-9));
                residuals.push((format!("{}:brockett_z/1e-7", case.label), rz / 1e-7));
                let (lo, hi) = case.pair.sample_domain();
                let worst_bracket = chebyshev_points(128, lo, hi)
                    .into_iter()
                    .map(|z| {
                        bracket_residual_matrix(&case.pair, &td, z)
                            .map(|r| r.max_abs())
                            .unwrap_or(f64::INFINITY)
                    })
                    .fold(0.0, f64::max);
                residuals.push((format!("{}:bracket/1e-9", case.label), worst_bracket / 1e-9));
            }
        }
    }
    for (label, target, params, sigma) in expected_rejections() {
        let v = match construct_w(&target, &params, &sigma) {
            Err(_) => 0.0,
            Ok(_) => f64::INFINITY,
        };
        residuals.push((format!("reject:{label}"), v));
    }
    VerificationReport::finish("catalog", residuals, 1.0, start)
}

/// Interlacing scan wrapped as a report: `passed` when the strict margins
/// stay above `1e-12` over the whole range.
pub fn interlacing_check(m_max: usize) -> Result<VerificationReport, SequenceError> {
    let start = Instant::now();
    let report = check_interlacing(m_max, &MapParameters::two_point())?;
    let mut residuals = vec![(
        format!("min_margin={:.3e}", report.min_margin),
        1e-12 - report.min_margin,
    )];
    for v in &report.violations {
        residuals.push((
            format!("violation at m={} k={}", v.m, v.k),
            f64::INFINITY,
        ));
    }
    Ok(VerificationReport::finish(
        "interlacing",
        residuals,
        0.0,
        start,
    ))
}
