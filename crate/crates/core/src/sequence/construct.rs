//! Constructive factorization of the exploration matrix `W = U S V^T`.
//!
//! `U` collects the real and imaginary parts of the target's eigenvectors,
//! the singular values follow from the target eigenvalues and the map
//! parameters, the period `m` is the smallest length whose projected
//! coefficient spectrum interlaces the required values, and `V` couples an
//! embedded orthogonal `Theta` with the zero-sum direction.

use super::embedding::calc_theta;
use super::target::{TargetFamily, TargetSpec};
use super::{
    compute_t_direct, epsilon, p_tilde_deltas, p_tilde_skew_part, search_spectrum_deltas,
    ExplorationMatrix, MapParameters, SequenceError,
};
use crate::matrix::Mat;
use crate::spectral::normal_block_diagonalize;

/// Relative slack for the interlacing comparisons. Minimal-length cases hit
/// the inequalities with exact equality, so strict floating-point
/// comparisons would overshoot the period by one.
const SLACK: f64 = 1e-9;

/// Result of the sequence-length search.
#[derive(Debug, Clone)]
pub struct SequenceLength {
    pub m: usize,
    /// Search spectrum at the accepted length, descending.
    pub spectrum: Vec<f64>,
}

fn validate_targets(omega_hat: &[f64], r: usize) -> Result<(), SequenceError> {
    let q = omega_hat.len();
    if q == 0 || r < 2 * q {
        return Err(SequenceError::IncompatibleParams {
            detail: format!("need floor(r/2) >= {q} targets worth of rank, got r = {r}"),
        });
    }
    for w in omega_hat.windows(2) {
        if w[0] < w[1] {
            return Err(SequenceError::IncompatibleParams {
                detail: "targets must be sorted descending".into(),
            });
        }
    }
    if omega_hat[q - 1] < 0.0 {
        return Err(SequenceError::IncompatibleParams {
            detail: "targets must be nonnegative".into(),
        });
    }
    Ok(())
}

/// Smallest `m >= r + 1` such that the search spectrum
/// `w_1 >= w_2 >= ...` at length `m` satisfies
/// `w_k >= omega_hat_k >= w_{count - q + k}` for every target
/// (count = floor(m/2)).
///
/// The search runs over [`search_spectrum_deltas`]. `params` takes no part
/// in it beyond the signature: the search spectrum is parameter-free after
/// normalization.
pub fn find_sequence_length(
    omega_hat: &[f64],
    r: usize,
    _params: &MapParameters,
    m_cap: usize,
) -> Result<SequenceLength, SequenceError> {
    validate_targets(omega_hat, r)?;
    let q = omega_hat.len();
    let tol = SLACK * omega_hat[0].max(1.0);
    let start = (r + 1).max(3);
    for m_hat in start..=m_cap {
        let omega = search_spectrum_deltas(m_hat)?;
        let count = omega.len();
        if count < q {
            continue;
        }
        let ok = (0..q).all(|k| {
            omega[k] + tol >= omega_hat[k] && omega_hat[k] + tol >= omega[count - q + k]
        });
        if ok {
            return Ok(SequenceLength {
                m: m_hat,
                spectrum: omega,
            });
        }
    }
    Err(SequenceError::SearchExhausted { cap: m_cap })
}

/// Smallest `m >= start` at which the targets actually embed into the
/// truncated projected matrix — the bound exact reconstruction imposes.
/// This can exceed the nominal search length: the embedded blocks are a
/// principal submatrix of the truncated matrix, so its spectrum must
/// dominate the targets even where the search spectrum already does.
fn first_embeddable_length(
    omega_hat: &[f64],
    params: &MapParameters,
    start: usize,
    m_cap: usize,
) -> Result<usize, SequenceError> {
    let q = omega_hat.len();
    let tol = SLACK * omega_hat[0].max(1.0);
    for m_hat in start.max(3)..=m_cap {
        let omega = p_tilde_deltas(params, m_hat)?;
        let count = omega.len();
        if count < q {
            continue;
        }
        let ok = (0..q).all(|k| {
            omega[k] + tol >= omega_hat[k] && omega_hat[k] + tol >= omega[count - q + k]
        });
        if ok {
            return Ok(m_hat);
        }
    }
    Err(SequenceError::SearchExhausted { cap: m_cap })
}

/// How the singular values were resolved; paired values `(odd, even)` per
/// eigenvalue block in delta-descending order. `minimal` marks the cases
/// whose length is pinned to `r + 1` by construction, bypassing the search.
struct SigmaPlan {
    odd: Vec<f64>,
    even: Vec<f64>,
    minimal: bool,
}

/// Construct an exploration matrix for a catalog target.
///
/// `sigma_free` selects the degrees of freedom:
/// - skew targets: either `ceil(r/2)` values (the odd-indexed singular
///   values; the even ones follow from the minimal-length spectrum) or all
///   `r` values;
/// - `TdE` without diagonal values: empty (minimal length, singular values
///   computed) or `2n` pair-equal values (diagonal derived from them);
/// - other normal targets (`E1`, `E2`, `TdE` with diagonal given): empty,
///   the singular values are determined by the eigenvalues.
pub fn construct_w(
    target: &TargetSpec,
    params: &MapParameters,
    sigma_free: &[f64],
) -> Result<ExplorationMatrix, SequenceError> {
    if target.family.is_skew() != params.requires_skew_target() {
        return Err(SequenceError::IncompatibleParams {
            detail: format!(
                "family {} needs {} map parameters (c1 = {})",
                target.family.tag(),
                if target.family.is_skew() {
                    "c1 = 0"
                } else {
                    "c1 != 0"
                },
                params.c1()
            ),
        });
    }
    for &s in sigma_free {
        if !(s > 0.0) || !s.is_finite() {
            return Err(SequenceError::IncompatibleParams {
                detail: format!("singular values must be positive and finite, got {s}"),
            });
        }
    }

    // Resolve the TdE diagonal from the requested singular values when it
    // was not given explicitly: gamma_l = mu sigma_{2l-1}^2.
    let resolved: TargetSpec = if target.family == TargetFamily::TdE && target.gammas.is_none() {
        let n = target.n;
        let gammas: Vec<f64> = if sigma_free.is_empty() {
            // Minimal length m = 2n + 1: the singular values come from the
            // projected spectrum at that length.
            let omega = p_tilde_deltas(params, 2 * n + 1)?;
            if omega.len() < n || omega[n - 1] <= 0.0 {
                return Err(SequenceError::IncompatibleParams {
                    detail: "projected spectrum too short for the minimal TdE length".into(),
                });
            }
            (0..n).map(|l| params.mu() / omega[l]).collect()
        } else {
            if sigma_free.len() != 2 * n {
                return Err(SequenceError::IncompatibleParams {
                    detail: format!(
                        "TdE with free singular values needs {} of them, got {}",
                        2 * n,
                        sigma_free.len()
                    ),
                });
            }
            for l in 0..n {
                if (sigma_free[2 * l] - sigma_free[2 * l + 1]).abs()
                    > 1e-12 * sigma_free[2 * l].abs()
                {
                    return Err(SequenceError::IncompatibleParams {
                        detail: "TdE requires pair-equal singular values".into(),
                    });
                }
            }
            (0..n)
                .map(|l| params.mu() * sigma_free[2 * l] * sigma_free[2 * l])
                .collect()
        };
        target.clone().with_gammas(gammas)
    } else {
        target.clone()
    };

    let td = resolved.materialize(params)?;
    let two_n = td.rows();
    let n = two_n / 2;
    let scale = td.max_abs().max(1.0);

    // Eigen-structure of the target: U from the block spectrum, eigenvalue
    // pairs sorted delta-descending with zero blocks last.
    let spec = normal_block_diagonalize(&td, 1e-8 * scale)?;
    let u_factor = spec.theta.clone();
    let pairs = &spec.pairs;

    // Rank from the singular values hypot(gamma, delta), two per pair.
    let hyp: Vec<f64> = pairs.iter().map(|&(g, d)| g.hypot(d)).collect();
    let hyp_max = hyp.iter().cloned().fold(0.0f64, f64::max);
    if hyp_max <= 0.0 {
        return Err(SequenceError::IncompatibleParams {
            detail: "target matrix is zero".into(),
        });
    }
    let rank_pairs = hyp.iter().filter(|&&h| h > 1e-10 * hyp_max).count();
    let r = 2 * rank_pairs;
    let q = rank_pairs;

    // Resolve singular values per block.
    let plan: SigmaPlan = if params.requires_skew_target() {
        let deltas: Vec<f64> = pairs[..q].iter().map(|&(_, d)| d).collect();
        if sigma_free.len() == q {
            // Minimal length: even-index values follow from the projected
            // spectrum at m = r + 1.
            let omega = p_tilde_deltas(params, r + 1)?;
            if omega.len() < q || omega[q - 1] <= 1e-12 {
                return Err(SequenceError::IncompatibleParams {
                    detail: "projected spectrum at the minimal length is rank deficient".into(),
                });
            }
            let odd = sigma_free.to_vec();
            let even = (0..q).map(|l| deltas[l] / (omega[l] * odd[l])).collect();
            SigmaPlan { odd, even, minimal: true }
        } else if sigma_free.len() == r {
            SigmaPlan {
                odd: (0..q).map(|l| sigma_free[2 * l]).collect(),
                even: (0..q).map(|l| sigma_free[2 * l + 1]).collect(),
                minimal: false,
            }
        } else {
            return Err(SequenceError::IncompatibleParams {
                detail: format!(
                    "skew target of rank {r} takes {q} or {r} free singular values, got {}",
                    sigma_free.len()
                ),
            });
        }
    } else {
        // Normal path: singular values are forced by the eigenvalues,
        // sigma^2 = gamma / mu (pair-equal). TdE with derived diagonal has
        // already consumed sigma_free above.
        if !(target.family == TargetFamily::TdE && target.gammas.is_none()) && !sigma_free.is_empty()
        {
            return Err(SequenceError::IncompatibleParams {
                detail: format!(
                    "family {} determines its singular values; pass none",
                    target.family.tag()
                ),
            });
        }
        if q != n {
            return Err(SequenceError::IncompatibleParams {
                detail: "normal targets must have full rank".into(),
            });
        }
        let mut odd = Vec::with_capacity(q);
        for &(g, _) in &pairs[..q] {
            let ratio = g / params.mu();
            if !(ratio > 0.0) {
                return Err(SequenceError::IncompatibleParams {
                    detail: format!("gamma / mu must be positive, got {ratio}"),
                });
            }
            odd.push(ratio.sqrt());
        }
        // The minimal TdE case (diagonal derived from the spectrum at
        // 2n + 1) embeds exactly at that length.
        let minimal = target.family == TargetFamily::TdE
            && target.gammas.is_none()
            && sigma_free.is_empty();
        SigmaPlan {
            odd: odd.clone(),
            even: odd,
            minimal,
        }
    };

    // Targets for the embedding, with the sorting permutation tracked so
    // the embedded blocks can be mapped back to eigenvalue order.
    let omega_orig: Vec<f64> = (0..q)
        .map(|l| pairs[l].1 / (plan.odd[l] * plan.even[l]))
        .collect();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| omega_orig[b].partial_cmp(&omega_orig[a]).unwrap());
    let omega_sorted: Vec<f64> = order.iter().map(|&l| omega_orig[l]).collect();

    let m_cap = (64 * n).max(512);
    let nominal_m = if plan.minimal {
        r + 1
    } else {
        find_sequence_length(&omega_sorted, r, params, m_cap)?.m
    };
    // The nominal length is the starting candidate; the construction then
    // advances to the first length at which the targets embed into the
    // truncated projected matrix, which is what the exact factorization
    // requires. The two coincide except for interior target choices, where
    // the embedding needs more room.
    let m = first_embeddable_length(&omega_sorted, params, nominal_m.max(r + 1), m_cap)?;

    // Theta embeds the sorted targets as the leading blocks of the skew
    // part of the projected coefficient matrix; the paired permutation
    // restores eigenvalue order.
    let s_skew = p_tilde_skew_part(params, m)?;
    let theta_sorted = calc_theta(&s_skew, &omega_sorted)?;
    let mut permute = Mat::identity(m - 1);
    // Column pair (2l, 2l+1) of the permutation selects sorted position
    // pi(l), where pi(l) is the sorted position of original block l.
    let mut pi = vec![0usize; q];
    for (pos, &orig) in order.iter().enumerate() {
        pi[orig] = pos;
    }
    if q > 0 {
        let mut r_hat = Mat::zeros(r, r);
        for l in 0..q {
            r_hat[(2 * pi[l], 2 * l)] = 1.0;
            r_hat[(2 * pi[l] + 1, 2 * l + 1)] = 1.0;
        }
        permute.set_block(0, 0, &r_hat);
    }
    let theta = theta_sorted.matmul(&permute);

    // V couples Theta with the zero-sum direction:
    // V = [[Theta - eps 1 1^T Theta, m^{-1/2} 1], [-m^{-1/2} 1^T Theta, m^{-1/2}]].
    let eps = epsilon(m);
    let inv_sqrt_m = 1.0 / (m as f64).sqrt();
    let colsum = theta.col_sums();
    let mut v_factor = Mat::zeros(m, m);
    for i in 0..m - 1 {
        for j in 0..m - 1 {
            v_factor[(i, j)] = theta[(i, j)] - eps * colsum[j];
        }
        v_factor[(i, m - 1)] = inv_sqrt_m;
    }
    for j in 0..m - 1 {
        v_factor[(m - 1, j)] = -inv_sqrt_m * colsum[j];
    }
    v_factor[(m - 1, m - 1)] = inv_sqrt_m;

    // W = U Sigma V^T.
    let mut sigma_mat = Mat::zeros(two_n, m);
    let mut sigma_list = Vec::with_capacity(r);
    for l in 0..q {
        sigma_mat[(2 * l, 2 * l)] = plan.odd[l];
        sigma_mat[(2 * l + 1, 2 * l + 1)] = plan.even[l];
        sigma_list.push(plan.odd[l]);
        sigma_list.push(plan.even[l]);
    }
    let w = u_factor.matmul(&sigma_mat).matmul(&v_factor.transpose());

    let em = ExplorationMatrix {
        w,
        m,
        nominal_m,
        u_factor,
        sigma: sigma_list,
        v_factor,
        target: resolved,
        params: *params,
    };

    let zero_sum = em.zero_sum_defect();
    let residual = compute_t_direct(&em.w, params).sub(&td).max_abs();
    if zero_sum > 1e-9 || residual > 1e-7 {
        return Err(SequenceError::InterlacingViolated {
            detail: format!(
                "constructed W failed validation: ||W 1|| = {zero_sum:.3e}, \
                 reconstruction residual = {residual:.3e}"
            ),
        });
    }
    Ok(em)
}
