//! Orthogonal block-diagonalization of real skew-symmetric and real normal
//! matrices.
//!
//! Every construction step downstream consumes this primitive: a real
//! orthogonal `theta` such that `theta^T M theta` is block diagonal with
//! 2x2 blocks `[[gamma, -delta], [delta, gamma]]` (plus trailing 1x1 zero
//! blocks for odd dimension or rank deficiency).
//!
//! The skew kernel avoids complex arithmetic: Householder reduction to
//! skew tridiagonal form, a perfect-shuffle permutation to the anti-block
//! form `[[0, B], [-B^T, 0]]`, and a one-sided Jacobi SVD of the half-size
//! matrix `B`. The singular values of `B` are the eigenvalue imaginary
//! parts, and its singular vectors assemble directly into real orthogonal
//! eigencolumns.
//!
//! Normal matrices split as `T = S + K` with `S` symmetric, `K` skew, and
//! `[S, K] = 0`; a Jacobi eigensolve of `S` followed by the skew kernel on
//! each eigenspace of `S` yields the joint block form.

use crate::matrix::{norm2, Mat};
use thiserror::Error;

/// Default tolerance on `||theta^T theta - I||_max` for accepted outputs.
pub const TOL_ORTH: f64 = 1e-9;
/// Default tolerance on the block-diagonal reconstruction residual.
pub const TOL_BLOCK: f64 = 1e-8;

/// Deltas closer than this are treated as ties and keep their original order.
const DELTA_TIE_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("matrix is not skew-symmetric: max |C + C^T| = {defect:.3e} exceeds tol {tol:.3e}")]
    NotSkewSymmetric { defect: f64, tol: f64 },
    #[error("matrix is not normal: max |T T^T - T^T T| = {defect:.3e} exceeds tol {tol:.3e}")]
    NotNormal { defect: f64, tol: f64 },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("eigen iteration failed to converge")]
    ConvergenceFailure,
    #[error("spectrum cannot be grouped into conjugate-pair blocks \
             (a nonzero real eigenvalue has odd multiplicity)")]
    UnpairableSpectrum,
}

/// Block spectrum of a real skew-symmetric or normal matrix.
///
/// `theta` is orthogonal and `theta^T M theta` equals
/// `blockdiag([[gamma_1, -delta_1], [delta_1, gamma_1]], ..., 0, ..., 0)`
/// with `zero_count` trailing 1x1 zeros. Pairs are sorted by `delta`
/// descending, ties broken by `gamma` descending, then original order.
#[derive(Debug, Clone)]
pub struct BlockSpectrum {
    pub theta: Mat,
    pub pairs: Vec<(f64, f64)>,
    pub zero_count: usize,
}

impl BlockSpectrum {
    pub fn dim(&self) -> usize {
        2 * self.pairs.len() + self.zero_count
    }

    /// Imaginary parts of the conjugate pairs, in stored (descending) order.
    pub fn deltas(&self) -> Vec<f64> {
        self.pairs.iter().map(|&(_, d)| d).collect()
    }

    /// The delta list padded with zeros to `ceil(dim/2)` entries, the way
    /// the interlacing machinery counts a skew spectrum.
    pub fn delta_spectrum(&self) -> Vec<f64> {
        let mut v = self.deltas();
        v.resize(self.dim().div_ceil(2), 0.0);
        v
    }

    /// Reassembled block-diagonal form.
    pub fn block_diagonal(&self) -> Mat {
        let p = self.dim();
        let mut m = Mat::zeros(p, p);
        for (l, &(g, d)) in self.pairs.iter().enumerate() {
            m.set_block(2 * l, 2 * l, &Mat::conjugate_pair_block(g, d));
        }
        m
    }

    /// Residual `||theta^T M theta - blockdiag||_max` against a given matrix.
    pub fn reconstruction_residual(&self, m: &Mat) -> f64 {
        let x = self.theta.transpose().matmul(m).matmul(&self.theta);
        x.sub(&self.block_diagonal()).max_abs()
    }
}

/// `||M^T M - I||_max` for a square matrix.
pub fn orthogonality_defect(m: &Mat) -> f64 {
    assert!(m.is_square(), "orthogonality defect needs a square matrix");
    m.transpose()
        .matmul(m)
        .sub(&Mat::identity(m.rows()))
        .max_abs()
}

/// Block-diagonalize a real skew-symmetric matrix.
///
/// Precondition: `||C + C^T||_max <= tol`. All pair gammas are zero and the
/// deltas are the absolute imaginary parts of the eigenvalues of `C`.
pub fn skew_block_diagonalize(c: &Mat, tol: f64) -> Result<BlockSpectrum, SpectralError> {
    if !c.is_square() {
        return Err(SpectralError::NotSquare {
            rows: c.rows(),
            cols: c.cols(),
        });
    }
    let defect = c.add(&c.transpose()).max_abs();
    if defect > tol {
        return Err(SpectralError::NotSkewSymmetric { defect, tol });
    }
    let k = c.sub(&c.transpose()).scale(0.5);
    let spec = skew_core(&k, true)?;
    let scale = k.max_abs().max(1.0);
    if spec.reconstruction_residual(&k) > TOL_BLOCK * scale {
        return Err(SpectralError::ConvergenceFailure);
    }
    Ok(spec)
}

/// Eigenvalue imaginary parts of a skew-symmetric matrix, descending, with
/// zeros padded to `ceil(p/2)` entries. Values only, no eigenvector
/// accumulation; used by the interlacing scans.
pub fn skew_delta_values(c: &Mat) -> Result<Vec<f64>, SpectralError> {
    let k = c.sub(&c.transpose()).scale(0.5);
    let p = k.rows();
    let (_, sub) = tridiagonalize_skew(&k, false);
    let b = shuffle_to_offdiag(&sub, p);
    let (_, mut sigma, _) = one_sided_jacobi_svd(&b, false, false)?;
    sigma.resize(p.div_ceil(2), 0.0);
    Ok(sigma)
}

/// Block-diagonalize a real normal matrix.
///
/// Precondition: `||T T^T - T^T T||_max <= tol`. Pairs `(gamma_l, delta_l)`
/// are the complex-conjugate eigenvalue parts of `T`; zero blocks sort last.
pub fn normal_block_diagonalize(t: &Mat, tol: f64) -> Result<BlockSpectrum, SpectralError> {
    if !t.is_square() {
        return Err(SpectralError::NotSquare {
            rows: t.rows(),
            cols: t.cols(),
        });
    }
    let tt = t.transpose();
    let defect = t.matmul(&tt).sub(&tt.matmul(t)).max_abs();
    if defect > tol {
        return Err(SpectralError::NotNormal { defect, tol });
    }

    let p = t.rows();
    let scale = t.max_abs().max(1.0);
    let sym = t.add(&tt).scale(0.5);
    let skew = t.sub(&tt).scale(0.5);

    if sym.max_abs() <= 1e-14 * scale {
        return skew_core(&skew, true);
    }

    let (evals, v) = jacobi_symmetric(&sym)?;

    // Group the symmetric eigenvalues into clusters; K maps each eigenspace
    // of S into itself because S and K commute.
    let ctol = 1e-8 * scale;
    let mut clusters: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=p {
        if i == p || (evals[i - 1] - evals[i]).abs() > ctol {
            clusters.push((start, i));
            start = i;
        }
    }

    let mut pair_cols: Vec<(f64, f64, Vec<f64>, Vec<f64>)> = Vec::new();
    let mut zero_cols: Vec<Vec<f64>> = Vec::new();
    let mut leftover: Vec<(f64, Vec<f64>)> = Vec::new();

    for &(lo, hi) in &clusters {
        let pc = hi - lo;
        let lambda = evals[lo..hi].iter().sum::<f64>() / pc as f64;
        let vc = v.block(0, p, lo, hi);
        let kc_raw = vc.transpose().matmul(&skew).matmul(&vc);
        let kc = kc_raw.sub(&kc_raw.transpose()).scale(0.5);
        let sub = skew_core(&kc, true)?;
        let cols = vc.matmul(&sub.theta);
        for (l, &(_, d)) in sub.pairs.iter().enumerate() {
            pair_cols.push((lambda, d, cols.col(2 * l), cols.col(2 * l + 1)));
        }
        let z0 = 2 * sub.pairs.len();
        let mut zs: Vec<Vec<f64>> = (z0..pc).map(|j| cols.col(j)).collect();
        // Real eigenvalue directions pair up two at a time into
        // [[lambda, 0], [0, lambda]] blocks; zero eigenvalues become 1x1s.
        if lambda.abs() <= 1e-10 * scale {
            zero_cols.append(&mut zs);
        } else {
            while zs.len() >= 2 {
                let b = zs.pop().unwrap();
                let a = zs.pop().unwrap();
                pair_cols.push((lambda, 0.0, a, b));
            }
            if let Some(col) = zs.pop() {
                leftover.push((lambda, col));
            }
        }
    }

    if !leftover.is_empty() {
        return Err(SpectralError::UnpairableSpectrum);
    }

    sort_pairs(&mut pair_cols);

    let mut theta = Mat::zeros(p, p);
    for (l, (_, _, a, b)) in pair_cols.iter().enumerate() {
        theta.set_col(2 * l, a);
        theta.set_col(2 * l + 1, b);
    }
    for (j, col) in zero_cols.iter().enumerate() {
        theta.set_col(2 * pair_cols.len() + j, col);
    }

    let spec = BlockSpectrum {
        theta,
        pairs: pair_cols.iter().map(|&(g, d, _, _)| (g, d)).collect(),
        zero_count: zero_cols.len(),
    };
    if spec.reconstruction_residual(t) > TOL_BLOCK * scale {
        return Err(SpectralError::ConvergenceFailure);
    }
    Ok(spec)
}

/// Stable sort by delta descending, then gamma descending; near-equal deltas
/// count as ties so the permutation stays deterministic.
fn sort_pairs(pairs: &mut [(f64, f64, Vec<f64>, Vec<f64>)]) {
    pairs.sort_by(|a, b| {
        if (a.1 - b.1).abs() > DELTA_TIE_TOL {
            return b.1.partial_cmp(&a.1).unwrap();
        }
        if (a.0 - b.0).abs() > DELTA_TIE_TOL {
            return b.0.partial_cmp(&a.0).unwrap();
        }
        std::cmp::Ordering::Equal
    });
}

/// Skew kernel on an exactly skew matrix (no precondition re-check).
fn skew_core(k: &Mat, accumulate: bool) -> Result<BlockSpectrum, SpectralError> {
    let p = k.rows();
    if p == 0 {
        return Ok(BlockSpectrum {
            theta: Mat::zeros(0, 0),
            pairs: Vec::new(),
            zero_count: 0,
        });
    }
    if k.max_abs() == 0.0 {
        return Ok(BlockSpectrum {
            theta: Mat::identity(p),
            pairs: Vec::new(),
            zero_count: p,
        });
    }

    let (q, sub) = tridiagonalize_skew(k, accumulate);
    let b = shuffle_to_offdiag(&sub, p);
    let (u, sigma, v) = one_sided_jacobi_svd(&b, true, true)?;
    let (pe, po) = (p.div_ceil(2), p / 2);

    let sig_max = sigma.first().copied().unwrap_or(0.0);
    let zero_tol = sig_max * 1e-13;
    let npairs = sigma.iter().filter(|&&s| s > zero_tol).count();

    // Eigencolumns of the shuffled form [[0, B], [-B^T, 0]]:
    // for sigma > 0 the pair ([u_k; 0], [0; -v_k]) realizes the canonical
    // [[0, -sigma], [sigma, 0]] block; the rest span the kernel.
    let mut theta_perm = Mat::zeros(p, p);
    for l in 0..npairs {
        for i in 0..pe {
            theta_perm[(i, 2 * l)] = u[(i, l)];
        }
        for i in 0..po {
            theta_perm[(pe + i, 2 * l + 1)] = -v[(i, l)];
        }
    }
    let mut col = 2 * npairs;
    for l in npairs..po {
        for i in 0..pe {
            theta_perm[(i, col)] = u[(i, l)];
        }
        for i in 0..po {
            theta_perm[(pe + i, col + 1)] = v[(i, l)];
        }
        col += 2;
    }
    for l in po..pe {
        for i in 0..pe {
            theta_perm[(i, col)] = u[(i, l)];
        }
        col += 1;
    }

    // Undo the perfect shuffle (even rows first, then odd), then the
    // Householder reduction.
    let mut theta_tri = Mat::zeros(p, p);
    for krow in 0..p {
        let orig = if krow < pe { 2 * krow } else { 2 * (krow - pe) + 1 };
        for j in 0..p {
            theta_tri[(orig, j)] = theta_perm[(krow, j)];
        }
    }
    let theta = q.matmul(&theta_tri);

    Ok(BlockSpectrum {
        theta,
        pairs: sigma[..npairs].iter().map(|&s| (0.0, s)).collect(),
        zero_count: p - 2 * npairs,
    })
}

/// Householder reduction of a skew matrix to skew tridiagonal form.
/// Returns the accumulated orthogonal `Q` (identity when `accumulate` is
/// false) and the subdiagonal entries `b[k] = T[k+1][k]`.
fn tridiagonalize_skew(k: &Mat, accumulate: bool) -> (Mat, Vec<f64>) {
    let p = k.rows();
    let mut a = k.clone();
    let mut q = Mat::identity(if accumulate { p } else { 0 });

    for col in 0..p.saturating_sub(2) {
        let m = p - col - 1;
        let mut v: Vec<f64> = (0..m).map(|i| a[(col + 1 + i, col)]).collect();
        let xnorm = norm2(&v);
        if xnorm <= f64::EPSILON * a.max_abs() {
            continue;
        }
        let alpha = if v[0] >= 0.0 { -xnorm } else { xnorm };
        v[0] -= alpha;
        let vn = norm2(&v);
        if vn == 0.0 {
            continue;
        }
        for x in &mut v {
            *x /= vn;
        }

        // A <- H A H with H = diag(I, I - 2 v v^T), applied as two rank-1
        // updates; Q <- Q H.
        for j in 0..p {
            let s: f64 = (0..m).map(|i| v[i] * a[(col + 1 + i, j)]).sum();
            for i in 0..m {
                a[(col + 1 + i, j)] -= 2.0 * s * v[i];
            }
        }
        for i in 0..p {
            let s: f64 = (0..m).map(|j| a[(i, col + 1 + j)] * v[j]).sum();
            for j in 0..m {
                a[(i, col + 1 + j)] -= 2.0 * s * v[j];
            }
        }
        if accumulate {
            for i in 0..p {
                let s: f64 = (0..m).map(|j| q[(i, col + 1 + j)] * v[j]).sum();
                for j in 0..m {
                    q[(i, col + 1 + j)] -= 2.0 * s * v[j];
                }
            }
        }
    }

    let sub: Vec<f64> = (0..p.saturating_sub(1))
        .map(|i| 0.5 * (a[(i + 1, i)] - a[(i, i + 1)]))
        .collect();
    (q, sub)
}

/// Perfect shuffle of a skew tridiagonal matrix with subdiagonal `sub` into
/// `[[0, B], [-B^T, 0]]`; returns the `ceil(p/2) x floor(p/2)` block `B`.
fn shuffle_to_offdiag(sub: &[f64], p: usize) -> Mat {
    let (pe, po) = (p.div_ceil(2), p / 2);
    let mut b = Mat::zeros(pe, po);
    for k in 0..pe {
        if 2 * k + 1 < p {
            b[(k, k)] = -sub[2 * k];
        }
        if k >= 1 {
            b[(k, k - 1)] = sub[2 * k - 1];
        }
    }
    b
}

/// One-sided Jacobi SVD. `B = U diag(sigma) V^T` with `U` square
/// (orthonormal completion included), singular values descending.
fn one_sided_jacobi_svd(
    b: &Mat,
    want_u: bool,
    want_v: bool,
) -> Result<(Mat, Vec<f64>, Mat), SpectralError> {
    let (m, n) = (b.rows(), b.cols());
    assert!(m >= n, "one-sided Jacobi expects at least as many rows as columns");
    let mut g = b.clone();
    let mut v = Mat::identity(if want_v { n } else { 0 });

    let mut converged = false;
    for _sweep in 0..60 {
        let mut max_rel = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let (mut aa, mut bb, mut cc) = (0.0, 0.0, 0.0);
                for r in 0..m {
                    let gi = g[(r, i)];
                    let gj = g[(r, j)];
                    aa += gi * gi;
                    bb += gj * gj;
                    cc += gi * gj;
                }
                if aa == 0.0 || bb == 0.0 {
                    continue;
                }
                let rel = cc.abs() / (aa * bb).sqrt();
                max_rel = max_rel.max(rel);
                if rel <= 1e-15 {
                    continue;
                }
                let zeta = (bb - aa) / (2.0 * cc);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for r in 0..m {
                    let gi = g[(r, i)];
                    let gj = g[(r, j)];
                    g[(r, i)] = cs * gi - sn * gj;
                    g[(r, j)] = sn * gi + cs * gj;
                }
                if want_v {
                    for r in 0..n {
                        let vi = v[(r, i)];
                        let vj = v[(r, j)];
                        v[(r, i)] = cs * vi - sn * vj;
                        v[(r, j)] = sn * vi + cs * vj;
                    }
                }
            }
        }
        if max_rel < 1e-14 {
            converged = true;
            break;
        }
    }
    if !converged && n > 1 {
        return Err(SpectralError::ConvergenceFailure);
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| norm2(&g.col(j))).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap());
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();

    let v_sorted = if want_v {
        let mut vs = Mat::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vs.set_col(dst, &v.col(src));
        }
        vs
    } else {
        v
    };

    let u = if want_u {
        let mut u = Mat::zeros(m, m);
        let sig_max = sigma.first().copied().unwrap_or(0.0);
        let mut filled = 0;
        for (dst, &src) in order.iter().enumerate() {
            if sigma[dst] > sig_max * 1e-14 && sigma[dst] > 0.0 {
                let col: Vec<f64> = g.col(src).iter().map(|x| x / sigma[dst]).collect();
                u.set_col(dst, &col);
                filled = dst + 1;
            } else {
                break;
            }
        }
        complete_orthonormal(&mut u, filled);
        u
    } else {
        Mat::zeros(0, 0)
    };

    Ok((u, sigma, v_sorted))
}

/// Fill columns `filled..` of `u` with an orthonormal completion of the
/// first `filled` columns, by Gram-Schmidt over the standard basis.
fn complete_orthonormal(u: &mut Mat, filled: usize) {
    let m = u.rows();
    let mut have = filled;
    for cand in 0..m {
        if have == u.cols() {
            break;
        }
        let mut w = vec![0.0; m];
        w[cand] = 1.0;
        for j in 0..have {
            let proj: f64 = (0..m).map(|i| u[(i, j)] * w[i]).sum();
            for i in 0..m {
                w[i] -= proj * u[(i, j)];
            }
        }
        // Second pass keeps the completion orthogonal to machine precision.
        for j in 0..have {
            let proj: f64 = (0..m).map(|i| u[(i, j)] * w[i]).sum();
            for i in 0..m {
                w[i] -= proj * u[(i, j)];
            }
        }
        let nw = norm2(&w);
        if nw > 1e-3 {
            for x in &mut w {
                *x /= nw;
            }
            u.set_col(have, &w);
            have += 1;
        }
    }
    assert_eq!(have, u.cols(), "orthonormal completion failed");
}

/// Cyclic Jacobi eigensolver for symmetric matrices.
/// Returns eigenvalues sorted descending with matching orthonormal columns.
pub(crate) fn jacobi_symmetric(a0: &Mat) -> Result<(Vec<f64>, Mat), SpectralError> {
    let p = a0.rows();
    let mut a = a0.add(&a0.transpose()).scale(0.5);
    let mut v = Mat::identity(p);
    let scale = a.max_abs().max(1e-300);

    let mut converged = false;
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..p {
            for j in (i + 1)..p {
                off = off.max(a[(i, j)].abs());
            }
        }
        if off <= 1e-14 * scale {
            converged = true;
            break;
        }
        for i in 0..p {
            for j in (i + 1)..p {
                let apq = a[(i, j)];
                if apq.abs() <= 1e-18 * scale {
                    continue;
                }
                let tau = (a[(j, j)] - a[(i, i)]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..p {
                    let aki = a[(k, i)];
                    let akj = a[(k, j)];
                    a[(k, i)] = c * aki - s * akj;
                    a[(k, j)] = s * aki + c * akj;
                }
                for k in 0..p {
                    let aik = a[(i, k)];
                    let ajk = a[(j, k)];
                    a[(i, k)] = c * aik - s * ajk;
                    a[(j, k)] = s * aik + c * ajk;
                }
                for k in 0..p {
                    let vki = v[(k, i)];
                    let vkj = v[(k, j)];
                    v[(k, i)] = c * vki - s * vkj;
                    v[(k, j)] = s * vki + c * vkj;
                }
            }
        }
    }
    if !converged && p > 1 {
        return Err(SpectralError::ConvergenceFailure);
    }

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| a[(y, y)].partial_cmp(&a[(x, x)]).unwrap());
    let evals: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vs = Mat::zeros(p, p);
    for (dst, &src) in order.iter().enumerate() {
        vs.set_col(dst, &v.col(src));
    }
    Ok((evals, vs))
}
