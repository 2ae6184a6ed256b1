//! Exploration-sequence design.
//!
//! An exploration sequence is an `m`-periodic family of probe directions
//! `w_0, ..., w_{m-1}` in `R^{2n}`, stacked as columns of `W`. Composing
//! `m` transition maps accumulates the quadratic form
//!
//! ```text
//! T(W) = sum_i ( alpha2 w_i w_i^T + (alpha1 + alpha2)^2 sum_{j<i} w_i w_j^T )
//! ```
//!
//! and the design problem is to hit a prescribed target `T(W) = T_d` under
//! the zero-sum constraint `W 1 = 0`. With the zero-sum constraint in
//! force, `T(W) = W P W^T` for a fixed coefficient matrix `P`, which turns
//! the design into a structured inverse singular-value problem solved in
//! [`construct`].

pub mod construct;
pub mod embedding;
pub mod target;

use crate::matrix::Mat;
use crate::spectral::{self, SpectralError};
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("alpha1 + alpha2 must be nonzero")]
    DegenerateAlphas,
    #[error("period m = {m} is too short (need m >= {min})")]
    BadPeriod { m: usize, min: usize },
    #[error("W does not satisfy the zero-sum condition: ||W 1||_max = {defect:.3e}")]
    ZeroSumViolated { defect: f64 },
    #[error("no sequence length m <= {cap} satisfies the interlacing inequalities")]
    SearchExhausted { cap: usize },
    #[error("target value {value} cannot be placed in any admissible interval")]
    TargetsInfeasible { value: f64 },
    #[error("interlacing precondition violated: {detail}")]
    InterlacingViolated { detail: String },
    #[error("target and map parameters are incompatible: {detail}")]
    IncompatibleParams { detail: String },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Map parameters `alpha1`, `alpha2` with the derived coefficients cached.
///
/// `c1 = 2 alpha2 - (alpha1 + alpha2)^2` gates the admissible target class:
/// `c1 = 0` forces skew-symmetric targets, `c1 != 0` normal targets with a
/// definiteness condition. `mu = alpha2 - (alpha1 + alpha2)^2 / 2 = c1 / 2`
/// is the real part shared by all eigenvalues of the projected coefficient
/// matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapParameters {
    alpha1: f64,
    alpha2: f64,
    c1: f64,
    c2: f64,
    mu: f64,
}

impl MapParameters {
    pub fn new(alpha1: f64, alpha2: f64) -> Result<Self, SequenceError> {
        if (alpha1 + alpha2).abs() < 1e-12 || !(alpha1 + alpha2).is_finite() {
            return Err(SequenceError::DegenerateAlphas);
        }
        let s = (alpha1 + alpha2) * (alpha1 + alpha2);
        Ok(Self {
            alpha1,
            alpha2,
            c1: 2.0 * alpha2 - s,
            c2: alpha2 - s,
            mu: alpha2 - 0.5 * s,
        })
    }

    /// Single-point scheme `[1, 0]` (one objective evaluation per step).
    pub fn single_point() -> Self {
        Self::new(1.0, 0.0).unwrap()
    }

    /// Two-point scheme `[1/2, 1/2]` (two objective evaluations per step).
    pub fn two_point() -> Self {
        Self::new(0.5, 0.5).unwrap()
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// True when this parameter setting requires skew-symmetric targets.
    pub fn requires_skew_target(&self) -> bool {
        self.c1.abs() < 1e-12
    }
}

/// `epsilon(k) = (k-1)^{-1} (1 - k^{-1/2})`, the projection weight used by
/// both the `C(m)` family and the orthogonal factor `V`.
pub fn epsilon(k: usize) -> f64 {
    assert!(k >= 2);
    let kf = k as f64;
    (1.0 - 1.0 / kf.sqrt()) / (kf - 1.0)
}

/// Coefficient matrix `P` of the compact form `T(W) = W P W^T`.
///
/// `c1` on the leading diagonal, `c2` strictly above it, `alpha2` strictly
/// below, and an all-zero last row and column.
pub fn build_p(params: &MapParameters, m: usize) -> Result<Mat, SequenceError> {
    if m < 2 {
        return Err(SequenceError::BadPeriod { m, min: 2 });
    }
    let mut p = Mat::zeros(m, m);
    for i in 0..m - 1 {
        for j in 0..m - 1 {
            p[(i, j)] = match i.cmp(&j) {
                std::cmp::Ordering::Less => params.c2,
                std::cmp::Ordering::Equal => params.c1,
                std::cmp::Ordering::Greater => params.alpha2,
            };
        }
    }
    Ok(p)
}

/// `T(W)` evaluated literally as the double sum over columns of `W`.
pub fn compute_t_direct(w: &Mat, params: &MapParameters) -> Mat {
    let d = w.rows();
    let m = w.cols();
    let s = (params.alpha1 + params.alpha2) * (params.alpha1 + params.alpha2);
    let mut t = Mat::zeros(d, d);
    let mut prefix = vec![0.0; d];
    for i in 0..m {
        let wi = w.col(i);
        for r in 0..d {
            for c in 0..d {
                t[(r, c)] += params.alpha2 * wi[r] * wi[c] + s * wi[r] * prefix[c];
            }
        }
        for r in 0..d {
            prefix[r] += wi[r];
        }
    }
    t
}

/// `T(W)` through the compact form `W P W^T`; requires `W 1 = 0`.
pub fn compute_t_via_p(w: &Mat, params: &MapParameters) -> Result<Mat, SequenceError> {
    let defect = w.row_sums().iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if defect > 1e-9 {
        return Err(SequenceError::ZeroSumViolated { defect });
    }
    let p = build_p(params, w.cols())?;
    Ok(w.matmul(&p).matmul(&w.transpose()))
}

/// The skew-symmetric family `C(m) = A(m) + epsilon(m+1) B(m)` whose
/// spectra are scanned for the eigenvalue interlacing property.
pub fn build_c(m: usize) -> Result<Mat, SequenceError> {
    if m < 2 {
        return Err(SequenceError::BadPeriod { m, min: 2 });
    }
    let eps = epsilon(m + 1);
    Ok(Mat::from_fn(m, m, |i, j| {
        let diff = j as f64 - i as f64;
        match i.cmp(&j) {
            std::cmp::Ordering::Less => 1.0 + eps * 2.0 * diff,
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Greater => -1.0 + eps * 2.0 * diff,
        }
    }))
}

/// Projected coefficient matrix `P~(m)`, the leading `(m-1) x (m-1)` block
/// of `P - eps (1 1^T P + P 1 1^T) + eps^2 1 1^T P 1 1^T` with
/// `eps = epsilon(m)`.
///
/// Always computed from this projection formula; the closed forms stated
/// alongside it disagree on signs and serve only as consistency probes in
/// the test suite. Structurally `P~ = mu I + S` with `S` skew-symmetric,
/// so `P~` is normal.
pub fn build_p_tilde(params: &MapParameters, m: usize) -> Result<Mat, SequenceError> {
    if m < 3 {
        return Err(SequenceError::BadPeriod { m, min: 3 });
    }
    let p = build_p(params, m)?;
    let eps = epsilon(m);
    let col = p.col_sums();
    let row = p.row_sums();
    let total: f64 = row.iter().sum();
    let q = m - 1;
    Ok(Mat::from_fn(q, q, |i, j| {
        p[(i, j)] - eps * (col[j] + row[i]) + eps * eps * total
    }))
}

/// Skew part of `P~(m)` shifted by `-mu I`; this is the matrix the
/// principal-submatrix embedding operates on.
pub fn p_tilde_skew_part(params: &MapParameters, m: usize) -> Result<Mat, SequenceError> {
    let pt = build_p_tilde(params, m)?;
    let q = pt.rows();
    Ok(Mat::from_fn(q, q, |i, j| {
        if i == j {
            0.0
        } else {
            0.5 * (pt[(i, j)] - pt[(j, i)])
        }
    }))
}

/// Eigenvalue imaginary parts of `P~(m)`, descending, padded with zeros to
/// `ceil((m-1)/2)` entries.
pub fn p_tilde_deltas(params: &MapParameters, m: usize) -> Result<Vec<f64>, SequenceError> {
    let s = p_tilde_skew_part(params, m)?;
    Ok(spectral::skew_delta_values(&s)?)
}

/// Spectrum used by the sequence-length search: the imaginary eigenvalue
/// parts of the full `m x m` projected coefficient matrix (no principal
/// truncation), normalized by `(alpha1 + alpha2)^2 / 2` so the values are
/// parameter-free. Returns the top `floor(m/2)` values, descending.
///
/// This reproduces the reference sequence lengths; it differs from the
/// truncated [`build_p_tilde`] spectrum, which is the bound that exact
/// reconstruction actually imposes (see `find_sequence_length` and
/// `construct_w` for how the two interact).
pub fn search_spectrum_deltas(m: usize) -> Result<Vec<f64>, SequenceError> {
    if m < 3 {
        return Err(SequenceError::BadPeriod { m, min: 3 });
    }
    let eps = epsilon(m);
    // Skew part of P is -(s/2) Abar with Abar the all-ones skew matrix
    // padded by a zero last row/column; projecting and rescaling by -2/s
    // leaves the parameter-free matrix below.
    let abar = Mat::from_fn(m, m, |i, j| {
        if i == m - 1 || j == m - 1 {
            0.0
        } else {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => 1.0,
                std::cmp::Ordering::Equal => 0.0,
                std::cmp::Ordering::Greater => -1.0,
            }
        }
    });
    let col = abar.col_sums();
    let row = abar.row_sums();
    let total: f64 = row.iter().sum();
    let proj = Mat::from_fn(m, m, |i, j| {
        abar[(i, j)] - eps * (col[j] + row[i]) + eps * eps * total
    });
    let skew = Mat::from_fn(m, m, |i, j| 0.5 * (proj[(i, j)] - proj[(j, i)]));
    let mut d = spectral::skew_delta_values(&skew)?;
    d.truncate(m / 2);
    Ok(d)
}

/// One interlacing violation: at period `m`, position `k`.
#[derive(Debug, Clone)]
pub struct InterlacingViolation {
    pub m: usize,
    pub k: usize,
    pub w_m_k: f64,
    pub w_m1_k: f64,
    pub w_m1_k1: f64,
}

/// Outcome of the interlacing scan over the `C(m)` family.
#[derive(Debug, Clone)]
pub struct InterlacingReport {
    pub m_max: usize,
    pub violations: Vec<InterlacingViolation>,
    /// Smallest margin observed over all strict inequalities.
    pub min_margin: f64,
}

impl InterlacingReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Scan `m = 2..=m_max` and check the strict interlacing
/// `w^{m+1}_k > w^m_k > w^{m+1}_{k+1} >= 0` between the spectra of `C(m)`
/// and `C(m+1)`. Violations are data, not errors.
pub fn check_interlacing(m_max: usize, _params: &MapParameters) -> Result<InterlacingReport, SequenceError> {
    if m_max < 3 {
        return Err(SequenceError::BadPeriod { m: m_max, min: 3 });
    }
    let mut report = InterlacingReport {
        m_max,
        violations: Vec::new(),
        min_margin: f64::INFINITY,
    };
    let mut prev = c_deltas(2)?;
    for m in 2..=m_max {
        let next = c_deltas(m + 1)?;
        for k in 0..m / 2 {
            let upper = next[k] - prev[k];
            let lower = prev[k] - next[k + 1];
            report.min_margin = report.min_margin.min(upper).min(lower);
            if upper <= 0.0 || lower <= 0.0 {
                report.violations.push(InterlacingViolation {
                    m,
                    k: k + 1,
                    w_m_k: prev[k],
                    w_m1_k: next[k],
                    w_m1_k1: next[k + 1],
                });
            }
        }
        prev = next;
    }
    Ok(report)
}

fn c_deltas(m: usize) -> Result<Vec<f64>, SequenceError> {
    let c = build_c(m)?;
    Ok(spectral::skew_delta_values(&c)?)
}

/// An exploration sequence matrix together with its factorization.
#[derive(Debug, Clone)]
pub struct ExplorationMatrix {
    pub w: Mat,
    /// Actual period: the number of columns of `w`.
    pub m: usize,
    /// Sequence length reported by the plain search semantics; equals
    /// `m` whenever the targets embed exactly at that length.
    pub nominal_m: usize,
    pub u_factor: Mat,
    pub sigma: Vec<f64>,
    pub v_factor: Mat,
    pub target: target::TargetSpec,
    pub params: MapParameters,
}

impl ExplorationMatrix {
    pub fn n(&self) -> usize {
        self.w.rows() / 2
    }

    /// Column `l` of `W`, the probe direction for step `k` with
    /// `l = k mod m`.
    pub fn column(&self, l: usize) -> Vec<f64> {
        self.w.col(l % self.m)
    }

    /// `||W 1||_max`.
    pub fn zero_sum_defect(&self) -> f64 {
        self.w.row_sums().iter().fold(0.0f64, |a, b| a.max(b.abs()))
    }

    /// Residual of the target identity `||T(W) - T_d||_max`.
    pub fn reconstruction_residual(&self) -> Result<f64, SequenceError> {
        let td = self.target.materialize(&self.params)?;
        Ok(compute_t_direct(&self.w, &self.params).sub(&td).max_abs())
    }

    /// Plain-text matrix file contents (header plus row-major entries).
    /// Floats print in shortest round-trip form, so reading the file back
    /// reproduces `w` bit for bit.
    pub fn to_w_file_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&w_file_header(self.n(), self.m, &self.params));
        out.push('\n');
        for i in 0..self.w.rows() {
            let row: Vec<String> = self.w.row(i).iter().map(|v| format!("{v}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// Write the plain-text matrix file.
    pub fn write_to(&self, path: &Path) -> std::io::Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(self.to_w_file_string().as_bytes())
    }
}

impl fmt::Display for ExplorationMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "W: {}x{} (n={}, m={}), singular values {:?}",
            self.w.rows(),
            self.w.cols(),
            self.n(),
            self.m,
            self.sigma
        )
    }
}

fn w_file_header(n: usize, m: usize, params: &MapParameters) -> String {
    format!(
        "# ncmap W n={} m={} alpha1={} alpha2={}",
        n,
        m,
        params.alpha1(),
        params.alpha2()
    )
}

/// A W matrix read back from the plain-text file format.
#[derive(Debug, Clone)]
pub struct StoredExploration {
    pub w: Mat,
    pub n: usize,
    pub m: usize,
    pub params: MapParameters,
}

/// Parse the plain-text W file written by [`ExplorationMatrix::write_to`].
pub fn read_w_file(path: &Path) -> Result<StoredExploration, String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    parse_w_file(&text)
}

pub fn parse_w_file(text: &str) -> Result<StoredExploration, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty W file")?;
    let rest = header
        .strip_prefix("# ncmap W ")
        .ok_or("missing '# ncmap W' header")?;
    let mut n = None;
    let mut m = None;
    let mut a1 = None;
    let mut a2 = None;
    for tok in rest.split_whitespace() {
        let (key, val) = tok.split_once('=').ok_or("malformed header field")?;
        match key {
            "n" => n = Some(val.parse::<usize>().map_err(|e| e.to_string())?),
            "m" => m = Some(val.parse::<usize>().map_err(|e| e.to_string())?),
            "alpha1" => a1 = Some(val.parse::<f64>().map_err(|e| e.to_string())?),
            "alpha2" => a2 = Some(val.parse::<f64>().map_err(|e| e.to_string())?),
            _ => return Err(format!("unknown header field {key}")),
        }
    }
    let (n, m) = (n.ok_or("header missing n")?, m.ok_or("header missing m")?);
    let params = MapParameters::new(a1.ok_or("header missing alpha1")?, a2.ok_or("header missing alpha2")?)
        .map_err(|e| e.to_string())?;
    let mut w = Mat::zeros(2 * n, m);
    let mut row = 0;
    for line in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if row >= 2 * n {
            return Err("too many rows in W file".into());
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        if vals.len() != m {
            return Err(format!("row {row} has {} entries, expected {m}", vals.len()));
        }
        for (j, v) in vals.iter().enumerate() {
            w[(row, j)] = *v;
        }
        row += 1;
    }
    if row != 2 * n {
        return Err(format!("W file has {row} rows, expected {}", 2 * n));
    }
    Ok(StoredExploration { w, n, m, params })
}

/// The 4n-periodic coordinate-wise reference sequence: each coordinate in
/// turn is probed with `(u, v) = (1,0), (0,1), (-1,0), (0,-1)`.
pub fn reference_coordinate_sequence(n: usize) -> ExplorationMatrix {
    assert!(n >= 1);
    let m = 4 * n;
    let mut w = Mat::zeros(2 * n, m);
    for l in 0..m {
        let coord = (l / 4) % n;
        let (u, v) = match l % 4 {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        };
        w[(coord, l)] = u;
        w[(n + coord, l)] = v;
    }

    // W W^T = 2 I, so U = I and all singular values are sqrt(2); V's
    // leading columns are the normalized rows of W completed to an
    // orthonormal basis.
    let u_factor = Mat::identity(2 * n);
    let sigma = vec![2.0f64.sqrt(); 2 * n];
    let mut v_factor = Mat::zeros(m, m);
    for j in 0..2 * n {
        let col: Vec<f64> = w.row(j).iter().map(|x| x / 2.0f64.sqrt()).collect();
        v_factor.set_col(j, &col);
    }
    complete_columns(&mut v_factor, 2 * n);

    ExplorationMatrix {
        w,
        m,
        nominal_m: m,
        u_factor,
        sigma,
        v_factor,
        target: target::TargetSpec::new(target::TargetFamily::H1, n),
        params: MapParameters::two_point(),
    }
}

fn complete_columns(m: &mut Mat, filled: usize) {
    let rows = m.rows();
    let mut have = filled;
    for cand in 0..rows {
        if have == m.cols() {
            break;
        }
        let mut w = vec![0.0; rows];
        w[cand] = 1.0;
        for _ in 0..2 {
            for j in 0..have {
                let proj: f64 = (0..rows).map(|i| m[(i, j)] * w[i]).sum();
                for i in 0..rows {
                    w[i] -= proj * m[(i, j)];
                }
            }
        }
        let nw = crate::matrix::norm2(&w);
        if nw > 1e-3 {
            for x in &mut w {
                *x /= nw;
            }
            m.set_col(have, &w);
            have += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_parameters_reject_degenerate() {
        assert!(MapParameters::new(1.0, -1.0).is_err());
        let p = MapParameters::two_point();
        assert_eq!(p.c1(), 0.0);
        assert_eq!(p.c2(), -0.5);
        assert_eq!(p.mu(), 0.0);
        let q = MapParameters::single_point();
        assert_eq!(q.c1(), -1.0);
        assert_eq!(q.c2(), -1.0);
        assert_eq!(q.mu(), -0.5);
    }

    #[test]
    fn p_matrix_patterns() {
        // Two-point, m = 3: c1 = 0, c2 = -1/2.
        let p = build_p(&MapParameters::two_point(), 3).unwrap();
        let expect = Mat::from_rows(&[&[0.0, -0.5, 0.0], &[0.5, 0.0, 0.0], &[0.0, 0.0, 0.0]]);
        assert!(p.sub(&expect).max_abs() == 0.0);

        // Single-point, m = 3: c1 = c2 = -1.
        let p = build_p(&MapParameters::single_point(), 3).unwrap();
        let expect = Mat::from_rows(&[&[-1.0, -1.0, 0.0], &[0.0, -1.0, 0.0], &[0.0, 0.0, 0.0]]);
        assert!(p.sub(&expect).max_abs() == 0.0);

        // Smallest pattern instance (exactly representable parameters).
        let p = build_p(&MapParameters::new(0.25, 0.5).unwrap(), 2).unwrap();
        assert_eq!(p[(0, 0)], 1.0 - 0.5625);
        assert_eq!(p[(0, 1)], 0.0);
        assert_eq!(p[(1, 0)], 0.0);
        assert_eq!(p[(1, 1)], 0.0);

        assert!(matches!(
            build_p(&MapParameters::two_point(), 1),
            Err(SequenceError::BadPeriod { .. })
        ));
    }

    #[test]
    fn t_examp_reference_values() {
        // Coordinate-wise sequence, n = 1: the two printed target matrices.
        let w = reference_coordinate_sequence(1);
        let t1 = compute_t_direct(&w.w, &MapParameters::single_point());
        let expect1 = Mat::from_rows(&[&[-1.0, -1.0], &[1.0, -1.0]]);
        assert!(t1.sub(&expect1).max_abs() <= 1e-12);

        let t2 = compute_t_direct(&w.w, &MapParameters::two_point());
        let expect2 = Mat::from_rows(&[&[0.0, -1.0], &[1.0, 0.0]]);
        assert!(t2.sub(&expect2).max_abs() <= 1e-12);
    }

    #[test]
    fn zero_w_gives_zero_t() {
        let w = Mat::zeros(4, 6);
        let params = MapParameters::two_point();
        assert_eq!(compute_t_direct(&w, &params).max_abs(), 0.0);
        assert_eq!(compute_t_via_p(&w, &params).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn via_p_requires_zero_sum() {
        let mut w = Mat::zeros(2, 3);
        w[(0, 0)] = 1.0;
        assert!(matches!(
            compute_t_via_p(&w, &MapParameters::two_point()),
            Err(SequenceError::ZeroSumViolated { .. })
        ));
    }

    #[test]
    fn c_matrix_smallest_case() {
        let c = build_c(2).unwrap();
        let e3 = epsilon(3);
        assert!((c[(0, 1)] - (1.0 + 2.0 * e3)).abs() < 1e-15);
        assert!((c[(1, 0)] + (1.0 + 2.0 * e3)).abs() < 1e-15);
        assert_eq!(c[(0, 0)], 0.0);
        // Skew by construction for a sample of sizes.
        for m in [2, 5, 8] {
            let c = build_c(m).unwrap();
            assert_eq!(c.add(&c.transpose()).max_abs(), 0.0);
        }
    }

    #[test]
    fn p_tilde_symmetric_part_is_mu_identity() {
        for (params, mu) in [
            (MapParameters::two_point(), 0.0),
            (MapParameters::single_point(), -0.5),
            (MapParameters::new(0.25, 0.75).unwrap(), 0.25),
        ] {
            for m in [3, 5, 9] {
                let pt = build_p_tilde(&params, m).unwrap();
                let q = pt.rows();
                let sym = pt.add(&pt.transpose()).scale(0.5);
                let dev = sym.sub(&Mat::identity(q).scale(mu)).max_abs();
                assert!(dev <= 1e-12, "m={m} dev={dev:.3e}");
            }
        }
    }

    #[test]
    fn p_tilde_is_normal() {
        for params in [
            MapParameters::two_point(),
            MapParameters::single_point(),
            MapParameters::new(0.9, 0.4).unwrap(),
        ] {
            for m in [3, 6, 11] {
                let pt = build_p_tilde(&params, m).unwrap();
                let ptt = pt.transpose();
                let comm = pt.matmul(&ptt).sub(&ptt.matmul(&pt)).max_abs();
                assert!(comm <= 1e-10, "m={m} comm={comm:.3e}");
            }
        }
    }

    #[test]
    fn p_tilde_toeplitz_entries() {
        // The proof's closed form: skew part has first-row entries
        // (alpha1+alpha2)^2 / 2 * (2 k eps(m) - 1).
        let params = MapParameters::single_point();
        let m = 6;
        let pt = build_p_tilde(&params, m).unwrap();
        let eps = epsilon(m);
        for k in 1..m - 1 {
            let expect = 0.5 * (2.0 * k as f64 * eps - 1.0);
            assert!(
                (pt[(0, k)] - (expect + 0.0)).abs() < 1e-12,
                "k={k}: got {} expect {}",
                pt[(0, k)],
                expect
            );
        }
    }

    #[test]
    fn interlacing_scan_small() {
        let report = check_interlacing(10, &MapParameters::two_point()).unwrap();
        assert!(report.passed(), "violations: {:?}", report.violations);
        assert!(report.min_margin > 1e-12);
    }

    #[test]
    fn reference_sequence_shape() {
        for n in [1, 2, 3] {
            let em = reference_coordinate_sequence(n);
            assert_eq!(em.m, 4 * n);
            assert_eq!(em.zero_sum_defect(), 0.0);
            // The stored factorization is a genuine SVD.
            let sv = Mat::from_fn(2 * n, em.m, |i, j| {
                if i == j {
                    em.sigma[i]
                } else {
                    0.0
                }
            });
            let back = em.u_factor.matmul(&sv).matmul(&em.v_factor.transpose());
            assert!(back.sub(&em.w).max_abs() < 1e-12);
            assert!(crate::spectral::orthogonality_defect(&em.v_factor) < 1e-12);
        }
    }

    #[test]
    fn w_file_roundtrip() {
        let em = reference_coordinate_sequence(2);
        let dir = std::env::temp_dir().join("ncmap_core_wfile_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("w.txt");
        em.write_to(&path).unwrap();
        let back = read_w_file(&path).unwrap();
        assert_eq!(back.n, 2);
        assert_eq!(back.m, 8);
        assert_eq!(back.w.data(), em.w.data());
        assert_eq!(back.params, em.params);
    }
}
